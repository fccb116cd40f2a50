//! Plain-text edge lists and the equivalent JSON form.
//!
//! ```text
//! n m
//! u v        (m lines, 0-indexed)
//! F d        (optional feature block)
//! x_1 .. x_d (n lines)
//! ```

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<Vec<f64>>>,
}

fn parse_err<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse { line, msg: msg.into() })
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse().or_else(|_| parse_err(line, format!("expected a non-negative integer, got {tok:?}")))
}

pub fn parse_edge_list(text: &str) -> Result<Graph> {
    // (1-based line number, tokens) for every non-blank, non-comment line
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| (i, l.split_whitespace().collect::<Vec<_>>()));

    let (hline, header) = match lines.next() {
        Some(h) => h,
        None => return parse_err(1, "missing header line \"n m\""),
    };
    if header.len() != 2 {
        return parse_err(hline, "header must be \"n m\"");
    }
    let n = parse_usize(header[0], hline)?;
    let m = parse_usize(header[1], hline)?;

    let mut edges = Vec::with_capacity(m);
    for k in 0..m {
        let Some((ln, toks)) = lines.next() else {
            return parse_err(hline, format!("expected {m} edges, found {k}"));
        };
        if toks.len() != 2 {
            return parse_err(ln, "edge line must be \"u v\"");
        }
        edges.push((parse_usize(toks[0], ln)?, parse_usize(toks[1], ln)?));
    }

    let mut features = None;
    if let Some((ln, toks)) = lines.next() {
        if toks.len() != 2 || toks[0] != "F" {
            return parse_err(ln, "expected feature header \"F d\" or end of input");
        }
        let d = parse_usize(toks[1], ln)?;
        let mut rows = Vec::with_capacity(n);
        for (ln, toks) in lines.by_ref() {
            if toks.len() != d {
                return parse_err(ln, format!("feature row has {} values, expected {d}", toks.len()));
            }
            let row: Result<Vec<f64>> = toks
                .iter()
                .map(|t| t.parse::<f64>().or_else(|_| parse_err(ln, format!("bad number {t:?}"))))
                .collect();
            rows.push(row?);
        }
        let mut f = Matrix::from_rows(&rows)?;
        if rows.is_empty() {
            f = Matrix::zeros(0, d);
        }
        features = Some(f);
    }
    Graph::new(n, &edges, features)
}

pub fn emit_edge_list(g: &Graph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", g.n(), g.edge_count());
    for &(u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    if let Some(f) = g.features() {
        let _ = writeln!(out, "F {}", f.cols());
        for i in 0..f.rows() {
            let row: Vec<String> = f.row(i).iter().map(|x| x.to_string()).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}

pub fn parse_graph_json(text: &str) -> Result<Graph> {
    let gj: GraphJson = serde_json::from_str(text)?;
    let edges: Vec<_> = gj.edges.iter().map(|e| (e[0], e[1])).collect();
    let features = gj.features.as_deref().map(Matrix::from_rows).transpose()?;
    Graph::new(gj.n, &edges, features)
}

pub fn to_json(g: &Graph) -> GraphJson {
    GraphJson {
        n: g.n(),
        edges: g.edges().iter().map(|&(u, v)| [u, v]).collect(),
        features: g.features().map(Matrix::to_rows),
    }
}

/// Accepts either format; JSON is recognized by a leading `{`.
pub fn parse_graph(text: &str) -> Result<Graph> {
    if text.trim_start().starts_with('{') {
        parse_graph_json(text)
    } else {
        parse_edge_list(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_k2() {
        let g = parse_edge_list("2 1\n0 1\n").unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.degrees(), vec![1, 1]);
    }

    #[test]
    fn reports_line_numbers() {
        match parse_edge_list("3 2\n0 1\n1 x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_edge_list("3 1\n0 3\n"), Err(Error::IndexOutOfRange { index: 3, n: 3 })));
        assert!(matches!(parse_edge_list("3 2\n0 1\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn feature_block_round_trips() {
        let text = "3 2\n0 1\n1 2\nF 2\n0.5 1\n-2 3.25\n0 0\n";
        let g = parse_edge_list(text).unwrap();
        assert_eq!(g.features().unwrap().row(1), &[-2.0, 3.25]);
        assert_eq!(parse_edge_list(&emit_edge_list(&g)).unwrap(), g);
        let short = "3 1\n0 1\nF 1\n1\n2\n";
        assert!(matches!(parse_edge_list(short), Err(Error::FeatureRowMismatch { .. })));
    }

    #[test]
    fn json_form_is_equivalent() {
        let g = parse_graph("{\"n\":3,\"edges\":[[0,1],[2,1]]}").unwrap();
        assert_eq!(g, parse_graph("3 2\n0 1\n1 2\n").unwrap());
        let back = serde_json::to_string(&to_json(&g)).unwrap();
        assert_eq!(parse_graph(&back).unwrap(), g);
    }
}
