use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, Matrix};

pub const PCA_TOL: f64 = 1e-9;
pub const PCA_MAX_ITERS: usize = 10_000;

/// Projection of the centred rows onto the leading principal direction.
///
/// The sign is chosen so that the entry of largest magnitude is positive
/// (the first one on ties). Constant features give the zero vector.
pub fn pca_top_component(features: &Matrix) -> Result<Vec<f64>> {
    let (n, d) = features.shape();
    if d == 0 {
        return Err(Error::BadParams("PCA needs at least one feature column".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut centred = features.clone();
    for j in 0..d {
        let mean = features.column(j).iter().sum::<f64>() / n as f64;
        for i in 0..n {
            centred[(i, j)] -= mean;
        }
    }
    if centred.max_abs() <= 1e-12 * features.max_abs().max(1.0) {
        return Ok(vec![0.0; n]);
    }
    let cov = centred.t_matmul(&centred)?;
    // Start from the heaviest covariance column, which is nonzero here.
    let start = (0..d)
        .map(|j| cov.column(j))
        .max_by(|a, b| norm2(a).total_cmp(&norm2(b)))
        .expect("d >= 1");
    let scale = norm2(&start);
    let mut v: Vec<f64> = start.iter().map(|x| x / scale).collect();
    for _ in 0..PCA_MAX_ITERS {
        let w = cov.matvec(&v);
        let norm = norm2(&w);
        if norm == 0.0 {
            break;
        }
        let w: Vec<f64> = w.iter().map(|x| x / norm).collect();
        let delta = w.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        v = w;
        if delta <= PCA_TOL {
            break;
        }
    }
    let mut proj: Vec<f64> = (0..n).map(|i| dot(centred.row(i), &v)).collect();
    let lead = proj.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if lead < 0.0 {
        proj.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(proj)
}
