//! The `spectral-pe` command line.
//!
//! Graph arguments are edge-list or JSON files, or generator specs prefixed
//! with `@`: `@grid:32x32`, `@cycle:6`, `@path:5`, `@complete:4`, `@petersen`,
//! `@er:<n>:<p>:<seed>`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::graph::{generate, parse_graph, petersen, Family, Graph};
use crate::harness::{
    bipartite_pair_experiment, eigenspace_stats, filter_regression_experiment, pca_top_component, reference_basisnet,
    reference_signnet, run_check, CheckConfig, Claim, GraphSampler, ModelSource, RegressionConfig, RegressionModel,
    Status, Tolerance,
};
use crate::linalg::Matrix;
use crate::nets::{load_checkpoint, Model, SpectralInput};
use crate::ops::{
    closed_walk_counts, cycle_counts_from_spectrum, graph_angles, is_bipartite_spectral, component_count_spectral,
    positional_encoding, PEConfig,
};
use crate::spectral::{eigh, partition_eigenspaces};

/// Version of every JSON document written by the CLI.
pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "spectral-pe", version, about = "Laplacian eigenvector tools, invariant networks and their checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Write the result here instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Master seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Absolute eigenvalue grouping tolerance.
    #[arg(long, global = true, default_value_t = crate::spectral::DEFAULT_TOL_ABS)]
    tol_abs: f64,
    /// Relative eigenvalue grouping tolerance.
    #[arg(long, global = true, default_value_t = crate::spectral::DEFAULT_TOL_REL)]
    tol_rel: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum PeKind {
    Heat,
    Rwpe,
    Diffusion,
    Pstep,
    Gpr,
    Landing,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SamplerKind {
    /// Erdos-Renyi graphs.
    Er,
    /// Cycles, grids, complete graphs and other graphs with repeated eigenvalues.
    Degenerate,
    /// Erdos-Renyi graphs with simple spectra only.
    Simple,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SpectrumMatrix {
    Laplacian,
    Adjacency,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Positional encodings: node-by-parameter CSV for heat/rwpe, n x n kernels otherwise.
    Pe {
        graph: String,
        #[arg(long, value_enum)]
        kind: Option<PeKind>,
        /// Diffusion times (heat: one column each; diffusion: exactly one).
        #[arg(long, value_delimiter = ',')]
        t: Vec<f64>,
        /// Walk lengths (rwpe: one column each; landing: exactly one).
        #[arg(long, value_delimiter = ',')]
        k: Vec<u32>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        p: Option<u32>,
        /// PageRank weights for walk lengths 1, 2, ...
        #[arg(long, value_delimiter = ',')]
        gammas: Vec<f64>,
        /// Encoding configuration as JSON or TOML instead of the flags above.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Graph angles of the adjacency eigenspaces.
    Angles {
        graph: String,
        #[command(flatten)]
        common: Common,
    },
    /// 3-, 4- and 5-cycle counts from the spectrum.
    Cycles {
        graph: String,
        /// Also report closed-walk counts up to this length.
        #[arg(long)]
        walks: Option<u32>,
        #[command(flatten)]
        common: Common,
    },
    /// Eigenspace statistics over graph files, directories of graph files, or generator specs.
    Stats {
        #[arg(required = true)]
        inputs: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Randomized invariance or equivariance check of a model.
    Invariance {
        /// Checkpoint path, or `builtin:signnet`, `builtin:signnet-ablation`, `builtin:basisnet`.
        #[arg(long)]
        model: String,
        #[arg(long)]
        claim: String,
        #[arg(long)]
        trials: Option<usize>,
        /// Redraw the checkpoint's weights in every trial.
        #[arg(long)]
        random_weights: bool,
        #[arg(long, value_enum)]
        sampler: Option<SamplerKind>,
        #[arg(long)]
        n_min: Option<usize>,
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long)]
        feature_dim: Option<usize>,
        /// Check configuration as JSON or TOML; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Spectral-convolution blind spot on degree-matched pairs.
    PairExperiment {
        /// Node range `lo..hi` (inclusive) or a single `n`.
        #[arg(long, default_value = "5..12")]
        n: String,
        #[command(flatten)]
        common: Common,
    },
    /// Trains models to regress spectral filters of a grid signal.
    TrainFilters {
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        filter: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        model: Vec<String>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        /// Experiment configuration as JSON or TOML; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Eigenvalues and eigenspace sizes.
    Spectrum {
        graph: String,
        #[arg(long, value_enum, default_value = "laplacian")]
        matrix: SpectrumMatrix,
        #[command(flatten)]
        common: Common,
    },
    /// First principal component of a feature table or of a SignNet's `phi(v) + phi(-v)`.
    Pca {
        /// CSV or whitespace-separated feature table.
        features: Option<PathBuf>,
        /// SignNet checkpoint; requires --graph.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        graph: Option<String>,
        /// Eigenvector index (ascending eigenvalue order).
        #[arg(long, default_value_t = 1)]
        eigvec: usize,
        #[command(flatten)]
        common: Common,
    },
}

/// Output of one subcommand before it is written.
struct Rendered {
    text: String,
    failed_check: bool,
}

/// Runs the CLI; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return EXIT_OK;
            }
            let doc = json!({
                "schema_version": SCHEMA_VERSION,
                "error": { "kind": "Usage", "message": e.to_string().trim_end() },
            });
            let _ = writeln!(stderr, "{doc}");
            return EXIT_ERROR;
        }
    };
    let common = common_of(&cli.command).clone();
    let result = execute(cli.command).and_then(|r| {
        match &common.output {
            Some(p) => std::fs::write(p, &r.text)?,
            None => stdout.write_all(r.text.as_bytes())?,
        }
        Ok(r.failed_check)
    });
    match result {
        Ok(false) => EXIT_OK,
        Ok(true) => EXIT_CHECK_FAILED,
        Err(e) => {
            let doc = json!({
                "schema_version": SCHEMA_VERSION,
                "error": { "kind": e.kind(), "message": e.to_string() },
            });
            let _ = writeln!(stderr, "{doc}");
            EXIT_ERROR
        }
    }
}

fn common_of(c: &Command) -> &Common {
    match c {
        Command::Pe { common, .. }
        | Command::Angles { common, .. }
        | Command::Cycles { common, .. }
        | Command::Stats { common, .. }
        | Command::Invariance { common, .. }
        | Command::PairExperiment { common, .. }
        | Command::TrainFilters { common, .. }
        | Command::Spectrum { common, .. }
        | Command::Pca { common, .. } => common,
    }
}

fn execute(cmd: Command) -> Result<Rendered> {
    match cmd {
        Command::Pe { graph, kind, t, k, gamma, p, gammas, config, common } => {
            let cfg = match config {
                Some(path) => read_config::<PEConfig>(&path)?,
                None => pe_config(kind, t, k, gamma, p, gammas)?,
            };
            let g = load_graph(&graph)?;
            let e = eigh(&g.normalized_laplacian()?)?;
            let m = positional_encoding(&g, &e, &cfg)?;
            match common.format.unwrap_or(Format::Csv) {
                Format::Csv => ok(matrix_csv(&m)),
                Format::Json => ok(json_doc(&json!({ "config": cfg, "rows": m.to_rows() }))?),
            }
        }
        Command::Angles { graph, common } => {
            json_only(&common)?;
            let g = load_graph(&graph)?;
            let part = partition_eigenspaces(&eigh(&g.adjacency_matrix())?, common.tol_abs, common.tol_rel);
            ok(json_doc(&graph_angles(&part))?)
        }
        Command::Cycles { graph, walks, common } => {
            json_only(&common)?;
            let g = load_graph(&graph)?;
            let part = partition_eigenspaces(&eigh(&g.adjacency_matrix())?, common.tol_abs, common.tol_rel);
            let at = graph_angles(&part);
            let mut doc = serde_json::to_value(cycle_counts_from_spectrum(&at)?)?;
            if let Some(k) = walks {
                doc["closed_walks"] = serde_json::to_value(closed_walk_counts(&at, k)?)?;
            }
            ok(json_doc(&doc)?)
        }
        Command::Stats { inputs, common } => {
            json_only(&common)?;
            let mut graphs = Vec::new();
            for input in &inputs {
                graphs.extend(load_graphs(input)?);
            }
            let stats = eigenspace_stats(&graphs, Tolerance { abs: common.tol_abs, rel: common.tol_rel })?;
            ok(json_doc(&stats)?)
        }
        Command::Invariance {
            model,
            claim,
            trials,
            random_weights,
            sampler,
            n_min,
            n_max,
            feature_dim,
            config,
            common,
        } => {
            json_only(&common)?;
            let claim = Claim::parse(&claim)?;
            let source = model_source(&model, random_weights)?;
            let mut cfg = match config {
                Some(path) => read_config::<CheckConfig>(&path)?,
                None => CheckConfig { seed: common.seed, ..Default::default() },
            };
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if common.seed != 0 {
                cfg.seed = common.seed;
            }
            if let Some(d) = feature_dim {
                cfg.feature_dim = d;
            }
            if sampler.is_some() || n_min.is_some() || n_max.is_some() {
                let hi = n_max.unwrap_or(32);
                let lo = n_min.unwrap_or(2);
                cfg.sampler = match sampler.unwrap_or(SamplerKind::Er) {
                    SamplerKind::Er => GraphSampler::ErdosRenyi { n_min: lo, n_max: hi, p_min: 0.2, p_max: 0.7 },
                    SamplerKind::Degenerate => GraphSampler::DegenerateRich { n_max: hi },
                    SamplerKind::Simple => GraphSampler::SimpleSpectrum { n_min: lo, n_max: hi },
                };
            }
            let report = run_check(claim, &source, &cfg)?;
            Ok(Rendered { text: json_doc(&report)?, failed_check: report.status == Status::Fail })
        }
        Command::PairExperiment { n, common } => {
            json_only(&common)?;
            let (lo, hi) = parse_range(&n)?;
            let report = bipartite_pair_experiment(lo, hi)?;
            Ok(Rendered { text: json_doc(&report)?, failed_check: !report.pass })
        }
        Command::TrainFilters { grid, filter, model, epochs, lr, config, common } => {
            json_only(&common)?;
            let mut cfg = match config {
                Some(path) => read_config::<RegressionConfig>(&path)?,
                None => RegressionConfig { seed: common.seed, ..Default::default() },
            };
            if let Some(g) = grid {
                cfg.grid = g;
            }
            if !filter.is_empty() {
                cfg.filters = filter;
            }
            if !model.is_empty() {
                cfg.models = model.iter().map(|m| RegressionModel::parse(m)).collect::<Result<_>>()?;
            }
            if let Some(e) = epochs {
                cfg.epochs = e;
            }
            if let Some(l) = lr {
                cfg.lr = l;
            }
            if common.seed != 0 {
                cfg.seed = common.seed;
            }
            let results = filter_regression_experiment(&cfg)?;
            ok(json_doc(&json!({ "config": cfg, "results": results }))?)
        }
        Command::Spectrum { graph, matrix, common } => {
            let g = load_graph(&graph)?;
            let m = match matrix {
                SpectrumMatrix::Laplacian => g.normalized_laplacian()?,
                SpectrumMatrix::Adjacency => g.adjacency_matrix(),
            };
            let e = eigh(&m)?;
            let part = partition_eigenspaces(&e, common.tol_abs, common.tol_rel);
            match common.format.unwrap_or(Format::Json) {
                Format::Csv => ok(matrix_csv(&Matrix::column_vector(&e.values))),
                Format::Json => {
                    let mu: Vec<f64> = part.groups.iter().map(|g| g.mu).collect();
                    let mut doc = json!({
                        "matrix": format!("{matrix:?}").to_lowercase(),
                        "values": e.values,
                        "groups": part.dims(),
                        "group_values": mu,
                        "tau": part.tol,
                    });
                    if matrix == SpectrumMatrix::Laplacian {
                        doc["components"] = json!(component_count_spectral(&part));
                        doc["bipartite"] = json!(is_bipartite_spectral(&part));
                    }
                    ok(json_doc(&doc)?)
                }
            }
        }
        Command::Pca { features, model, graph, eigvec, common } => {
            let table = match (features, model) {
                (Some(path), None) => read_table(&path)?,
                (None, Some(ckpt)) => {
                    let g = load_graph(graph.as_deref().ok_or_else(|| bad("--model needs --graph"))?)?;
                    phi_table(&load_checkpoint(&ckpt)?, &g, eigvec)?
                }
                _ => return Err(bad("give either a feature table or --model with --graph")),
            };
            let pc = pca_top_component(&table)?;
            match common.format.unwrap_or(Format::Csv) {
                Format::Csv => ok(matrix_csv(&Matrix::column_vector(&pc))),
                Format::Json => ok(json_doc(&json!({ "component": pc }))?),
            }
        }
    }
}

fn ok(text: String) -> Result<Rendered> {
    Ok(Rendered { text, failed_check: false })
}

fn bad(msg: &str) -> Error {
    Error::BadParams(msg.to_string())
}

fn json_only(c: &Common) -> Result<()> {
    if c.format == Some(Format::Csv) {
        return Err(bad("this subcommand writes JSON only"));
    }
    Ok(())
}

/// Serializes `value` with a leading `schema_version` key.
fn json_doc<T: Serialize>(value: &T) -> Result<String> {
    let mut doc = serde_json::Map::new();
    doc.insert("schema_version".into(), json!(SCHEMA_VERSION));
    match serde_json::to_value(value)? {
        Value::Object(m) => doc.extend(m),
        other => {
            doc.insert("result".into(), other);
        }
    }
    Ok(serde_json::to_string_pretty(&Value::Object(doc))? + "\n")
}

fn matrix_csv(m: &Matrix) -> String {
    let mut s = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|x| format!("{x:?}")).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn pe_config(
    kind: Option<PeKind>,
    t: Vec<f64>,
    k: Vec<u32>,
    gamma: Option<f64>,
    p: Option<u32>,
    gammas: Vec<f64>,
) -> Result<PEConfig> {
    let one = |v: &[f64], flag: &str| match v {
        [x] => Ok(*x),
        _ => Err(Error::BadParams(format!("--{flag} takes exactly one value here"))),
    };
    let cfg = match kind.ok_or_else(|| bad("--kind or --config is required"))? {
        PeKind::Heat => PEConfig::HeatDiag { ts: t },
        PeKind::Rwpe => PEConfig::Rwpe { ks: k },
        PeKind::Diffusion => PEConfig::Diffusion { t: one(&t, "t")? },
        PeKind::Pstep => PEConfig::Pstep {
            gamma: gamma.ok_or_else(|| bad("--gamma is required"))?,
            p: p.ok_or_else(|| bad("--p is required"))?,
        },
        PeKind::Gpr => PEConfig::Gpr { gammas },
        PeKind::Landing => {
            let k: Vec<f64> = k.iter().map(|&x| f64::from(x)).collect();
            PEConfig::Landing { k: one(&k, "k")? as u32 }
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

/// JSON, or TOML when the extension says so or JSON parsing fails.
fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    let is_toml = path.extension().is_some_and(|e| e == "toml");
    if !is_toml {
        if let Ok(v) = serde_json::from_str(&text) {
            return Ok(v);
        }
    }
    toml::from_str(&text).map_err(|e| Error::Parse { line: 0, msg: format!("{}: {e}", path.display()) })
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::BadParams(format!("bad {what} {s:?}")))
}

fn parse_range(s: &str) -> Result<(usize, usize)> {
    match s.split_once("..") {
        Some((a, b)) => Ok((parse_num(a, "range start")?, parse_num(b.trim_start_matches('='), "range end")?)),
        None => {
            let n = parse_num(s, "node count")?;
            Ok((n, n))
        }
    }
}

/// A graph file or an `@` generator spec.
pub fn load_graph(arg: &str) -> Result<Graph> {
    let Some(spec) = arg.strip_prefix('@') else {
        return parse_graph(&std::fs::read_to_string(arg)?);
    };
    let parts: Vec<&str> = spec.split(':').collect();
    let family = match parts.as_slice() {
        ["petersen"] => return Ok(petersen()),
        ["grid", dims] => {
            let (h, w) = dims.split_once('x').ok_or_else(|| bad("grid spec is @grid:HxW"))?;
            Family::Grid { h: parse_num(h, "grid height")?, w: parse_num(w, "grid width")? }
        }
        ["cycle", n] => Family::Cycle { n: parse_num(n, "node count")? },
        ["path", n] => Family::Path { n: parse_num(n, "node count")? },
        ["complete", n] => Family::Complete { n: parse_num(n, "node count")? },
        ["er", n, p, seed] => Family::ErdosRenyi {
            n: parse_num(n, "node count")?,
            p: parse_num(p, "edge probability")?,
            seed: parse_num(seed, "seed")?,
        },
        _ => return Err(Error::BadParams(format!("unknown generator spec {arg:?}"))),
    };
    generate(family)
}

/// Every regular file of a directory (sorted by name), a single file, or a generator spec.
fn load_graphs(arg: &str) -> Result<Vec<Graph>> {
    let path = Path::new(arg);
    if !arg.starts_with('@') && path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        files.retain(|p| p.is_file());
        files.sort();
        return files.iter().map(|p| parse_graph(&std::fs::read_to_string(p)?)).collect();
    }
    Ok(vec![load_graph(arg)?])
}

fn model_source(arg: &str, random_weights: bool) -> Result<ModelSource> {
    Ok(match arg {
        "builtin:signnet" => ModelSource::RandomSignNet { config: reference_signnet(true) },
        "builtin:signnet-ablation" => ModelSource::RandomSignNet { config: reference_signnet(false) },
        "builtin:basisnet" => ModelSource::RandomBasisNet { config: reference_basisnet() },
        path => match (load_checkpoint(Path::new(path))?, random_weights) {
            (model, false) => ModelSource::Fixed { model },
            (Model::SignNet(m), true) => ModelSource::RandomSignNet { config: m.config },
            (Model::BasisNet(m), true) => ModelSource::RandomBasisNet { config: m.config },
        },
    })
}

fn read_table(path: &Path) -> Result<Matrix> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|_| Error::Parse { line: i + 1, msg: format!("bad number {t:?}") }))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Matrix::from_rows(&rows)
}

/// `phi(v) + phi(-v)` of one Laplacian eigenvector, node by channel.
fn phi_table(model: &Model, g: &Graph, eigvec: usize) -> Result<Matrix> {
    let Model::SignNet(m) = model else {
        return Err(bad("PCA of phi outputs needs a SignNet checkpoint"));
    };
    let e = eigh(&g.normalized_laplacian()?)?;
    if eigvec >= e.k() {
        return Err(Error::BadParams(format!("eigenvector {eigvec} of {}", e.k())));
    }
    let v = e.vectors.column_block(eigvec, 1);
    let values = [e.values[eigvec]];
    let mut input = SpectralInput::new(&v, &values).with_graph(g);
    if let Some(x) = g.features() {
        input = input.with_features(x);
    }
    let mut outs = m.phi_outputs(&input)?;
    Ok(outs.remove(0))
}
