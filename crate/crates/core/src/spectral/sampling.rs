use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{orthonormalize_columns, Matrix};

/// An element of `O(d)` together with the seed that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalSample {
    pub q: Matrix,
    pub seed: u64,
}

/// Haar-distributed orthogonal matrix: Gaussian `d x d`, then QR with the
/// sign convention that makes `R` have a positive diagonal.
pub fn sample_orthogonal(d: usize, seed: u64) -> OrthogonalSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    OrthogonalSample { q: haar_orthogonal(d, &mut rng), seed }
}

pub fn haar_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Matrix {
    let g = Matrix::from_fn(d, d, |_, _| rng.sample(StandardNormal));
    // Gram-Schmidt yields R with positive diagonal, i.e. the Haar-correct sign fix
    orthonormalize_columns(&g).0
}

/// Fisher–Yates permutation as a 0/1 matrix with `P[perm[i], i] = 1`.
pub fn sample_permutation(n: usize, seed: u64) -> OrthogonalSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let perm = random_permutation(n, &mut rng);
    let mut q = Matrix::zeros(n, n);
    for (i, &p) in perm.iter().enumerate() {
        q[(p, i)] = 1.0;
    }
    OrthogonalSample { q, seed }
}

/// `perm[i]` is the new position of item `i`.
pub fn random_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    perm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_matrix_is_orthogonal() {
        let p = sample_permutation(6, 3).q;
        for i in 0..6 {
            assert_eq!(p.row(i).iter().sum::<f64>(), 1.0);
            assert_eq!(p.column(i).iter().sum::<f64>(), 1.0);
        }
        assert_eq!(p.matmul(&p.transpose()).unwrap(), Matrix::identity(6));
        assert_eq!(sample_permutation(1, 9).q, Matrix::identity(1));
    }

    #[test]
    fn seeded_repeatable() {
        assert_eq!(sample_orthogonal(2, 11), sample_orthogonal(2, 11));
        assert_ne!(sample_orthogonal(2, 11).q, sample_orthogonal(2, 12).q);
    }
}
