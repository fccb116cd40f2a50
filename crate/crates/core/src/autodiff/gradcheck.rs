use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ParamSet, Tape, Var};
use crate::error::{shape_err, Result};

/// Coordinates compared per check unless the model has fewer.
pub const MIN_SAMPLED_COORDS: usize = 50;

/// Largest relative discrepancy between the tape gradient and central differences.
///
/// The metric per coordinate is `|a - c| / (|a| + |c| + 1e-12)`.
pub fn grad_check<F>(f: F, params: &ParamSet, h: f64, seed: u64) -> Result<f64>
where
    F: Fn(&mut Tape, &ParamSet) -> Result<Var>,
{
    grad_check_coords(f, params, h, seed, MIN_SAMPLED_COORDS)
}

/// As [`grad_check`], with an explicit number of sampled coordinates.
pub fn grad_check_coords<F>(f: F, params: &ParamSet, h: f64, seed: u64, count: usize) -> Result<f64>
where
    F: Fn(&mut Tape, &ParamSet) -> Result<Var>,
{
    let mut tape = Tape::new();
    let out = f(&mut tape, params)?;
    let grads = tape.backward(out)?.params(&tape);

    let coords: Vec<(String, usize)> =
        params.iter().flat_map(|(name, t)| (0..t.len()).map(move |i| (name.to_string(), i))).collect();
    if coords.is_empty() {
        return shape_err("no parameters to check");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<usize> = if coords.len() <= count {
        (0..coords.len()).collect()
    } else {
        let mut p = sample(&mut rng, coords.len(), count).into_vec();
        p.sort_unstable();
        p
    };

    let eval = |ps: &ParamSet| -> Result<f64> {
        let mut t = Tape::new();
        let o = f(&mut t, ps)?;
        Ok(t.value(o).data[0])
    };

    let mut worst = 0.0f64;
    let mut work = params.clone();
    for idx in picks {
        let (name, i) = &coords[idx];
        let x0 = params.get(name)?.data[*i];
        work.get_mut(name)?.data[*i] = x0 + h;
        let fp = eval(&work)?;
        work.get_mut(name)?.data[*i] = x0 - h;
        let fm = eval(&work)?;
        work.get_mut(name)?.data[*i] = x0;
        let cd = (fp - fm) / (2.0 * h);
        let a = grads.get(name).map_or(0.0, |g| g.data[*i]);
        worst = worst.max((a - cd).abs() / (a.abs() + cd.abs() + 1e-12));
    }
    Ok(worst)
}
