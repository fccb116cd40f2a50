//! Cyclic Jacobi eigensolver for dense symmetric matrices.
//!
//! Pairs are visited in round-robin (tournament) order: each round holds
//! `n/2` disjoint index pairs, so the rotations of one round commute and are
//! applied together as a row pass followed by a column pass. Every access is
//! then a contiguous row scan, which keeps `n ~ 1000` problems tractable
//! without giving up determinism.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymMatrix};

use super::EigDecomp;

/// Sweep budget before reporting [`Error::NoConvergence`].
pub const MAX_SWEEPS: usize = 100;

/// Stop once the off-diagonal Frobenius norm drops below this fraction of `||M||_F`.
pub const OFF_DIAGONAL_TOL: f64 = 1e-12;

struct Rotation {
    p: usize,
    q: usize,
    c: f64,
    s: f64,
}

pub fn eigh(m: &SymMatrix) -> Result<EigDecomp> {
    let n = m.n();
    if n == 0 {
        return Ok(EigDecomp { values: vec![], vectors: Matrix::zeros(0, 0) });
    }
    let src = m.matrix();
    let mut a = src.as_slice().to_vec();
    symmetrize(&mut a, n);

    // rows of `vt` are the eigenvector estimates
    let mut vt = Matrix::identity(n).into_vec();

    let fro = src.frobenius_norm();
    let stop = OFF_DIAGONAL_TOL * fro;
    let skip = stop * 1e-3 / n as f64;

    let slots = n + n % 2;
    let mut order: Vec<usize> = (0..slots).collect();
    let mut rotations: Vec<Rotation> = Vec::with_capacity(slots / 2);

    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a, n) <= stop {
            converged = true;
            break;
        }
        for _round in 0..slots - 1 {
            rotations.clear();
            for k in 0..slots / 2 {
                let (i, j) = (order[k], order[slots - 1 - k]);
                if i >= n || j >= n {
                    continue;
                }
                let (p, q) = (i.min(j), i.max(j));
                let apq = a[p * n + q];
                if apq.abs() <= skip {
                    continue;
                }
                let (c, s) = rotation(a[p * n + p], a[q * n + q], apq);
                rotations.push(Rotation { p, q, c, s });
            }
            if !rotations.is_empty() {
                apply_round(&mut a, &mut vt, n, &rotations);
            }
            order[1..].rotate_right(1);
        }
        symmetrize(&mut a, n);
    }
    if !converged && off_diagonal_norm(&a, n) > stop {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]).then(i.cmp(&j)));
    let values = idx.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &i) in idx.iter().enumerate() {
        for r in 0..n {
            vectors[(r, col)] = vt[i * n + r];
        }
    }
    Ok(EigDecomp { values, vectors })
}

/// `(c, s)` annihilating `a_pq` in `J^T A J`.
fn rotation(app: f64, aqq: f64, apq: f64) -> (f64, f64) {
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        let t = 1.0 / (theta.abs() + (theta * theta + 1.0).sqrt());
        if theta < 0.0 {
            -t
        } else {
            t
        }
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    (c, t * c)
}

fn apply_round(a: &mut [f64], vt: &mut [f64], n: usize, rots: &[Rotation]) {
    // rows of A and of V^T
    for r in rots {
        rotate_rows(a, n, r);
        rotate_rows(vt, n, r);
    }
    // columns of A, one row at a time
    for row in a.chunks_exact_mut(n) {
        for r in rots {
            let x = row[r.p];
            let y = row[r.q];
            row[r.p] = r.c * x - r.s * y;
            row[r.q] = r.s * x + r.c * y;
        }
    }
    for r in rots {
        a[r.p * n + r.q] = 0.0;
        a[r.q * n + r.p] = 0.0;
    }
}

fn rotate_rows(m: &mut [f64], n: usize, r: &Rotation) {
    let (head, tail) = m.split_at_mut(r.q * n);
    let rp = &mut head[r.p * n..(r.p + 1) * n];
    let rq = &mut tail[..n];
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let (xv, yv) = (*x, *y);
        *x = r.c * xv - r.s * yv;
        *y = r.s * xv + r.c * yv;
    }
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

fn symmetrize(a: &mut [f64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = m;
            a[j * n + i] = m;
        }
    }
}
