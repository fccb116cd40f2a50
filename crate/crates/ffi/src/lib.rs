//! C ABI over `spectral-pe`.
//!
//! Objects are opaque handles released with their `*_free` function. Every
//! call returns an [`SpeStatus`]; on failure [`spe_last_error`] describes the
//! error on the calling thread. Array outputs go into caller buffers: pass a
//! null buffer or a short capacity to learn the required size, reported
//! together with [`SpeStatus::SpeErrBufferTooSmall`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use spectral_pe::graph::{parse_graph, Graph};
use spectral_pe::linalg::Matrix;
use spectral_pe::nets::{checkpoint_from_str, load_checkpoint, Model, SpectralInput};
use spectral_pe::ops::{cycle_counts_from_spectrum, graph_angles, positional_encoding, PEConfig};
use spectral_pe::spectral::{eigh, partition_eigenspaces, partition_default};
use spectral_pe::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeStatus {
    SpeOk = 0,
    SpeErrNull = 1,
    SpeErrUtf8 = 2,
    SpeErrParse = 3,
    SpeErrBadParams = 4,
    SpeErrIsolatedNode = 5,
    SpeErrShape = 6,
    SpeErrNumeric = 7,
    SpeErrIo = 8,
    SpeErrModel = 9,
    SpeErrBufferTooSmall = 10,
    SpeErrPanic = 11,
}

/// Opaque graph handle.
pub struct SpeGraph {
    graph: Graph,
}

/// Opaque model handle (SignNet or BasisNet).
pub struct SpeModel {
    model: Model,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> SpeStatus {
    match e {
        Error::Parse { .. } | Error::Json(_) => SpeStatus::SpeErrParse,
        Error::IsolatedNode(_) => SpeStatus::SpeErrIsolatedNode,
        Error::ShapeMismatch(_) | Error::NotSquare { .. } | Error::FeatureRowMismatch { .. } => SpeStatus::SpeErrShape,
        Error::NoConvergence { .. } | Error::RankDeficient { .. } | Error::NonInteger { .. } | Error::NotSymmetric { .. } => {
            SpeStatus::SpeErrNumeric
        }
        Error::Io(_) => SpeStatus::SpeErrIo,
        Error::Checkpoint(_) | Error::MissingMultiplicity(_) | Error::GraphRequired => SpeStatus::SpeErrModel,
        _ => SpeStatus::SpeErrBadParams,
    }
}

struct Fail(SpeStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), format!("{}: {e}", e.kind()))
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SpeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpeStatus::SpeOk,
        Ok(Err(Fail(s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            SpeStatus::SpeErrPanic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(SpeStatus::SpeErrNull, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(SpeStatus::SpeErrUtf8, format!("{what} is not UTF-8")))
}

unsafe fn graph_ref<'a>(g: *const SpeGraph) -> Result<&'a Graph, Fail> {
    g.as_ref().map(|h| &h.graph).ok_or_else(|| null("graph"))
}

/// Copies `data` to `out` when `cap` allows, always reporting the length in `len`.
unsafe fn write_slice<T: Copy>(data: &[T], out: *mut T, cap: usize, len: *mut usize) -> Result<(), Fail> {
    if !len.is_null() {
        *len = data.len();
    }
    if data.len() > cap || (out.is_null() && !data.is_empty()) {
        return Err(Fail(SpeStatus::SpeErrBufferTooSmall, format!("need room for {} values, got {cap}", data.len())));
    }
    std::ptr::copy_nonoverlapping(data.as_ptr(), out, data.len());
    Ok(())
}

unsafe fn write_matrix(m: &Matrix, out: *mut f64, cap: usize, rows: *mut usize, cols: *mut usize) -> Result<(), Fail> {
    if !rows.is_null() {
        *rows = m.rows();
    }
    if !cols.is_null() {
        *cols = m.cols();
    }
    write_slice(m.as_slice(), out, cap, std::ptr::null_mut())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn spe_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; valid until the next failing call.
#[no_mangle]
pub extern "C" fn spe_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses an edge list or graph JSON document.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spe_graph_parse(text: *const c_char, out: *mut *mut SpeGraph) -> SpeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let graph = parse_graph(str_arg(text, "text")?)?;
        *out = Box::into_raw(Box::new(SpeGraph { graph }));
        Ok(())
    })
}

/// Builds a graph from `m` edges stored as `2m` node indices.
///
/// # Safety
/// `edges` must point to `2 * m` values (or be null when `m == 0`); `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn spe_graph_from_edges(
    n: usize,
    edges: *const usize,
    m: usize,
    out: *mut *mut SpeGraph,
) -> SpeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if edges.is_null() && m > 0 {
            return Err(null("edges"));
        }
        let flat = if m == 0 { &[][..] } else { std::slice::from_raw_parts(edges, 2 * m) };
        let pairs: Vec<(usize, usize)> = flat.chunks_exact(2).map(|e| (e[0], e[1])).collect();
        let graph = Graph::new(n, &pairs, None)?;
        *out = Box::into_raw(Box::new(SpeGraph { graph }));
        Ok(())
    })
}

/// # Safety
/// `g` must come from a graph constructor and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn spe_graph_free(g: *mut SpeGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live handle or null; `n` must be valid.
#[no_mangle]
pub unsafe extern "C" fn spe_graph_node_count(g: *const SpeGraph, n: *mut usize) -> SpeStatus {
    guard(|| {
        let g = graph_ref(g)?;
        if n.is_null() {
            return Err(null("n"));
        }
        *n = g.n();
        Ok(())
    })
}

/// Ascending normalized-Laplacian eigenvalues.
///
/// # Safety
/// `values` must hold `cap` doubles (or be null to query); `len` may be null.
#[no_mangle]
pub unsafe extern "C" fn spe_laplacian_spectrum(
    g: *const SpeGraph,
    values: *mut f64,
    cap: usize,
    len: *mut usize,
) -> SpeStatus {
    guard(|| {
        let e = eigh(&graph_ref(g)?.normalized_laplacian()?)?;
        write_slice(&e.values, values, cap, len)
    })
}

/// Eigenspace dimensions of the normalized Laplacian, ascending by eigenvalue.
///
/// Non-positive tolerances select the defaults.
///
/// # Safety
/// As for [`spe_laplacian_spectrum`].
#[no_mangle]
pub unsafe extern "C" fn spe_eigenspace_dims(
    g: *const SpeGraph,
    tol_abs: f64,
    tol_rel: f64,
    dims: *mut usize,
    cap: usize,
    len: *mut usize,
) -> SpeStatus {
    guard(|| {
        let e = eigh(&graph_ref(g)?.normalized_laplacian()?)?;
        let part = if tol_abs > 0.0 && tol_rel > 0.0 {
            partition_eigenspaces(&e, tol_abs, tol_rel)
        } else {
            partition_default(&e)
        };
        write_slice(&part.dims(), dims, cap, len)
    })
}

/// Numbers of 3-, 4- and 5-cycles, from the adjacency spectrum.
///
/// # Safety
/// `out` must hold 3 values.
#[no_mangle]
pub unsafe extern "C" fn spe_cycle_counts(g: *const SpeGraph, out: *mut u64) -> SpeStatus {
    guard(|| {
        let g = graph_ref(g)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let part = partition_default(&eigh(&g.adjacency_matrix())?);
        let c = cycle_counts_from_spectrum(&graph_angles(&part))?;
        std::ptr::copy_nonoverlapping([c.c3, c.c4, c.c5].as_ptr(), out, 3);
        Ok(())
    })
}

/// Positional encoding described by a JSON config, e.g. `{"kind":"heat_diag","ts":[1.0]}`.
/// Row-major output of shape `rows x cols`.
///
/// # Safety
/// `config_json` must be NUL-terminated; `out` must hold `cap` doubles or be null.
#[no_mangle]
pub unsafe extern "C" fn spe_positional_encoding(
    g: *const SpeGraph,
    config_json: *const c_char,
    out: *mut f64,
    cap: usize,
    rows: *mut usize,
    cols: *mut usize,
) -> SpeStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let cfg: PEConfig = serde_json::from_str(str_arg(config_json, "config_json")?).map_err(Error::from)?;
        let e = eigh(&g.normalized_laplacian()?)?;
        write_matrix(&positional_encoding(g, &e, &cfg)?, out, cap, rows, cols)
    })
}

/// Loads a model checkpoint from a file.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn spe_model_load(path: *const c_char, out: *mut *mut SpeModel) -> SpeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let model = load_checkpoint(Path::new(str_arg(path, "path")?))?;
        *out = Box::into_raw(Box::new(SpeModel { model }));
        Ok(())
    })
}

/// Parses a model checkpoint from a JSON string.
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn spe_model_from_json(json: *const c_char, out: *mut *mut SpeModel) -> SpeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let model = checkpoint_from_str(str_arg(json, "json")?)?;
        *out = Box::into_raw(Box::new(SpeModel { model }));
        Ok(())
    })
}

/// # Safety
/// `m` must come from a model constructor and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn spe_model_free(m: *mut SpeModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Evaluates the model on the graph's normalized-Laplacian eigenvectors.
///
/// SignNets use the first `k` eigenvectors (`k == 0` for all); BasisNets use every
/// eigenspace. Graph node features, if any, are passed as `X`.
///
/// # Safety
/// Handles must be live; `out` must hold `cap` doubles or be null.
#[no_mangle]
pub unsafe extern "C" fn spe_model_forward(
    m: *const SpeModel,
    g: *const SpeGraph,
    k: usize,
    out: *mut f64,
    cap: usize,
    rows: *mut usize,
    cols: *mut usize,
) -> SpeStatus {
    guard(|| {
        let model = &m.as_ref().ok_or_else(|| null("model"))?.model;
        let g = graph_ref(g)?;
        let e = eigh(&g.normalized_laplacian()?)?;
        let y = match model {
            Model::SignNet(s) => {
                let k = if k == 0 { e.k() } else { k.min(e.k()) };
                let e = e.truncated(k);
                let mut input = SpectralInput::new(&e.vectors, &e.values).with_graph(g);
                if let Some(x) = g.features() {
                    input = input.with_features(x);
                }
                s.forward(&input)?
            }
            Model::BasisNet(b) => b.forward(&partition_default(&e), g.features(), Some(g))?,
        };
        write_matrix(&y, out, cap, rows, cols)
    })
}
