use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::linalg::Matrix;
use crate::spectral::EigDecomp;

/// Names accepted by [`filter_bank`] for the five benchmark filters.
pub const BANK: [&str; 5] = ["low-pass", "high-pass", "band-pass", "band-rejection", "comb"];

/// A named function `h(lambda)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Filter {
    LowPass,
    HighPass,
    BandPass,
    BandRejection,
    Comb,
    Heat { t: f64 },
    /// `sum_k coeffs[k] * lambda^k`
    Poly { coeffs: Vec<f64> },
}

impl Filter {
    pub fn eval(&self, l: f64) -> f64 {
        match self {
            Filter::LowPass => (-10.0 * l * l).exp(),
            Filter::HighPass => 1.0 - (-10.0 * l * l).exp(),
            Filter::BandPass => (-10.0 * (l - 1.0).powi(2)).exp(),
            Filter::BandRejection => 1.0 - (-10.0 * (l - 1.0).powi(2)).exp(),
            Filter::Comb => (PI * l).sin().abs(),
            Filter::Heat { t } => (-t * l).exp(),
            Filter::Poly { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * l + c),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Filter::LowPass => "low-pass",
            Filter::HighPass => "high-pass",
            Filter::BandPass => "band-pass",
            Filter::BandRejection => "band-rejection",
            Filter::Comb => "comb",
            Filter::Heat { .. } => "heat",
            Filter::Poly { .. } => "poly",
        }
    }
}

/// Either free per-eigenvector coefficients or a function of the eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterSpec {
    Free(Vec<f64>),
    Parametric(Filter),
}

impl FilterSpec {
    /// `theta_i` for each eigenvalue.
    pub fn coefficients(&self, values: &[f64]) -> Result<Vec<f64>> {
        match self {
            FilterSpec::Free(theta) if theta.len() != values.len() => {
                shape_err(format!("{} coefficients for {} eigenvectors", theta.len(), values.len()))
            }
            FilterSpec::Free(theta) => Ok(theta.clone()),
            FilterSpec::Parametric(h) => Ok(values.iter().map(|&l| h.eval(l)).collect()),
        }
    }

    pub fn is_parametric(&self) -> bool {
        matches!(self, FilterSpec::Parametric(_))
    }
}

/// Looks up a filter by name. Besides [`BANK`], `identity` gives `h = 1`.
pub fn filter_bank(name: &str) -> Result<FilterSpec> {
    let f = match name {
        "low-pass" => Filter::LowPass,
        "high-pass" => Filter::HighPass,
        "band-pass" => Filter::BandPass,
        "band-rejection" => Filter::BandRejection,
        "comb" => Filter::Comb,
        "identity" => Filter::Poly { coeffs: vec![1.0] },
        _ => return Err(Error::UnknownFilter(name.to_string())),
    };
    Ok(FilterSpec::Parametric(f))
}

/// `V diag(theta) V^T X`.
pub fn spectral_conv(e: &EigDecomp, f: &FilterSpec, x: &Matrix) -> Result<Matrix> {
    if x.rows() != e.n() {
        return shape_err(format!("features have {} rows, eigenvectors {}", x.rows(), e.n()));
    }
    let theta = f.coefficients(&e.values)?;
    let mut coeff = e.vectors.t_matmul(x)?;
    for (i, t) in theta.iter().enumerate() {
        coeff.row_mut(i).iter_mut().for_each(|c| *c *= t);
    }
    e.vectors.matmul(&coeff)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bank_reference_points() {
        let at = |n: &str, l: f64| match filter_bank(n).unwrap() {
            FilterSpec::Parametric(h) => h.eval(l),
            FilterSpec::Free(_) => unreachable!(),
        };
        assert_eq!(at("low-pass", 0.0), 1.0);
        assert_eq!(at("band-pass", 1.0), 1.0);
        assert!(at("comb", 1.0).abs() < 1e-15);
        assert_eq!(at("high-pass", 0.0), 0.0);
        assert!(matches!(filter_bank("notch"), Err(Error::UnknownFilter(_))));
    }

    #[test]
    fn poly_uses_horner() {
        let p = Filter::Poly { coeffs: vec![1.0, -2.0, 3.0] };
        assert_eq!(p.eval(2.0), 1.0 - 4.0 + 12.0);
    }

    #[test]
    fn free_length_checked() {
        assert!(FilterSpec::Free(vec![1.0]).coefficients(&[0.0, 1.0]).is_err());
    }
}
