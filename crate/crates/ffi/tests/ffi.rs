use std::ffi::{CStr, CString};
use std::ptr;

use spectral_pe_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(spe_last_error()) }.to_string_lossy().into_owned()
}

fn c4() -> *mut SpeGraph {
    let mut g = ptr::null_mut();
    let text = cstr("4 4\n0 1\n1 2\n2 3\n3 0\n");
    assert_eq!(unsafe { spe_graph_parse(text.as_ptr(), &mut g) }, SpeStatus::SpeOk);
    g
}

#[test]
fn spectrum_of_c4() {
    let g = c4();
    let mut len = 0usize;
    // size query
    let s = unsafe { spe_laplacian_spectrum(g, ptr::null_mut(), 0, &mut len) };
    assert_eq!((s, len), (SpeStatus::SpeErrBufferTooSmall, 4));
    let mut vals = [0.0f64; 4];
    assert_eq!(unsafe { spe_laplacian_spectrum(g, vals.as_mut_ptr(), 4, &mut len) }, SpeStatus::SpeOk);
    for (v, want) in vals.iter().zip([0.0, 1.0, 1.0, 2.0]) {
        assert!((v - want).abs() < 1e-10, "{vals:?}");
    }
    let mut dims = [0usize; 4];
    assert_eq!(unsafe { spe_eigenspace_dims(g, 0.0, 0.0, dims.as_mut_ptr(), 4, &mut len) }, SpeStatus::SpeOk);
    assert_eq!(&dims[..len], &[1, 2, 1]);
    unsafe { spe_graph_free(g) };
}

#[test]
fn cycles_of_k4_from_edges() {
    let edges = [0usize, 1, 0, 2, 0, 3, 1, 2, 1, 3, 2, 3];
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { spe_graph_from_edges(4, edges.as_ptr(), 6, &mut g) }, SpeStatus::SpeOk);
    let mut c = [0u64; 3];
    assert_eq!(unsafe { spe_cycle_counts(g, c.as_mut_ptr()) }, SpeStatus::SpeOk);
    assert_eq!(c, [4, 3, 0]);
    unsafe { spe_graph_free(g) };
}

#[test]
fn rwpe_on_k2() {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { spe_graph_from_edges(2, [0usize, 1].as_ptr(), 1, &mut g) }, SpeStatus::SpeOk);
    let cfg = cstr(r#"{"kind":"rwpe","ks":[1,2]}"#);
    let (mut rows, mut cols) = (0, 0);
    let mut out = [0.0; 4];
    let s = unsafe { spe_positional_encoding(g, cfg.as_ptr(), out.as_mut_ptr(), 4, &mut rows, &mut cols) };
    assert_eq!((s, rows, cols), (SpeStatus::SpeOk, 2, 2));
    for (v, want) in out.iter().zip([0.0, 1.0, 0.0, 1.0]) {
        assert!((v - want).abs() < 1e-12);
    }
    unsafe { spe_graph_free(g) };
}

#[test]
fn errors_map_to_codes() {
    let mut g = ptr::null_mut();
    let bad = cstr("3 1\n0 7\n");
    assert_eq!(unsafe { spe_graph_parse(bad.as_ptr(), &mut g) }, SpeStatus::SpeErrBadParams);
    assert!(g.is_null());
    assert!(last_error().starts_with("IndexOutOfRange"), "{}", last_error());

    assert_eq!(unsafe { spe_graph_parse(ptr::null(), &mut g) }, SpeStatus::SpeErrNull);

    let isolated = cstr("3 1\n0 1\n");
    assert_eq!(unsafe { spe_graph_parse(isolated.as_ptr(), &mut g) }, SpeStatus::SpeOk);
    let mut len = 0;
    assert_eq!(unsafe { spe_laplacian_spectrum(g, ptr::null_mut(), 0, &mut len) }, SpeStatus::SpeErrIsolatedNode);
    unsafe { spe_graph_free(g) };

    let mut m = ptr::null_mut();
    let junk = cstr(r#"{"format":"other","version":1}"#);
    assert_eq!(unsafe { spe_model_from_json(junk.as_ptr(), &mut m) }, SpeStatus::SpeErrModel);
    unsafe { spe_graph_free(ptr::null_mut()) };
    unsafe { spe_model_free(ptr::null_mut()) };
}

#[test]
fn model_roundtrip_and_forward() {
    use spectral_pe::nets::{checkpoint_to_string, construct_spectral_conv_signnet, Model};
    use spectral_pe::ops::filter_bank;

    let model = Model::SignNet(construct_spectral_conv_signnet(filter_bank("identity").unwrap()));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    std::fs::write(&path, checkpoint_to_string(&model).unwrap()).unwrap();
    let mut m = ptr::null_mut();
    let p = cstr(path.to_str().unwrap());
    assert_eq!(unsafe { spe_model_load(p.as_ptr(), &mut m) }, SpeStatus::SpeOk);

    // path P3 with a feature column; identity filter reproduces it
    let text = cstr("3 2\n0 1\n1 2\nF 1\n1.0\n-2.0\n0.5\n");
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { spe_graph_parse(text.as_ptr(), &mut g) }, SpeStatus::SpeOk);
    let (mut rows, mut cols) = (0, 0);
    let mut out = [0.0; 3];
    let s = unsafe { spe_model_forward(m, g, 0, out.as_mut_ptr(), 3, &mut rows, &mut cols) };
    assert_eq!((s, rows, cols), (SpeStatus::SpeOk, 3, 1));
    for (v, want) in out.iter().zip([1.0, -2.0, 0.5]) {
        assert!((v - want).abs() < 1e-10);
    }
    unsafe {
        spe_model_free(m);
        spe_graph_free(g);
    }
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/spectral_pe.h");
    let src = include_str!("../src/lib.rs");
    let exported: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exported.len() >= 10);
    for name in exported {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(!unsafe { CStr::from_ptr(spe_version()) }.to_bytes().is_empty());
}
