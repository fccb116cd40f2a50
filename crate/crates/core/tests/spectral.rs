mod common;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spectral_pe::graph::{generate, Family};
use spectral_pe::linalg::{Matrix, SymMatrix};
use spectral_pe::spectral::*;
use spectral_pe::Error;

fn random_symmetric(n: usize, seed: u64) -> SymMatrix {
    let g = gaussian_matrix(n, n, seed);
    SymMatrix::new(Matrix::from_fn(n, n, |i, j| 0.5 * (g[(i, j)] + g[(j, i)]))).unwrap()
}

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
    }
}

#[test]
fn eigh_examples() {
    let k2 = generate(Family::Complete { n: 2 }).unwrap().normalized_laplacian().unwrap();
    let e = eigh(&k2).unwrap();
    assert_close(&e.values, &[0.0, 2.0], 1e-12);
    let s = 0.5f64.sqrt();
    let v0 = e.vector(0);
    let v1 = e.vector(1);
    assert!((v0[0].abs() - s).abs() < 1e-12 && (v0[0] - v0[1]).abs() < 1e-12);
    assert!((v1[0].abs() - s).abs() < 1e-12 && (v1[0] + v1[1]).abs() < 1e-12);

    let c4 = generate(Family::Cycle { n: 4 }).unwrap().normalized_laplacian().unwrap();
    assert_close(&eigh(&c4).unwrap().values, &[0.0, 1.0, 1.0, 2.0], 1e-12);
    let k4 = generate(Family::Complete { n: 4 }).unwrap().adjacency_matrix();
    assert_close(&eigh(&k4).unwrap().values, &[-1.0, -1.0, -1.0, 3.0], 1e-12);
}

#[test]
fn cycle_spectra_match_closed_form() {
    for n in 3..=20 {
        let l = generate(Family::Cycle { n }).unwrap().normalized_laplacian().unwrap();
        let mut want: Vec<f64> =
            (0..n).map(|k| 1.0 - (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos()).collect();
        want.sort_by(f64::total_cmp);
        assert_close(&eigh(&l).unwrap().values, &want, 1e-10);
    }
}

#[test]
fn eigh_is_bitwise_deterministic() {
    let m = random_symmetric(20, 4);
    assert_eq!(eigh(&m).unwrap(), eigh(&m).unwrap());
}

#[test]
fn asymmetric_input_is_rejected() {
    let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.5, 1.0]]).unwrap();
    assert!(matches!(SymMatrix::new(m), Err(Error::NotSymmetric { .. })));
}

#[test]
fn partition_examples() {
    let c4 = generate(Family::Cycle { n: 4 }).unwrap().normalized_laplacian().unwrap();
    let e = eigh(&c4).unwrap();
    let p = partition_default(&e);
    assert_eq!(p.dims(), vec![1, 2, 1]);
    assert_close(&p.groups.iter().map(|g| g.mu).collect::<Vec<_>>(), &[0.0, 1.0, 2.0], 1e-12);
    let all = partition_eigenspaces(&e, f64::INFINITY, 0.0);
    assert_eq!(all.dims(), vec![4]);
    // chaining: 0, 1e-9, 2e-9 with tau ~ 1.5e-9 form one group
    let chain = EigDecomp { values: vec![0.0, 1e-9, 2e-9], vectors: Matrix::identity(3) };
    assert_eq!(partition_eigenspaces(&chain, 1.5e-9, 0.0).dims(), vec![3]);
    assert_eq!(partition_eigenspaces(&chain, 0.5e-9, 0.0).dims(), vec![1, 1, 1]);
}

#[test]
fn truncated_partition_counts_k() {
    let g = generate(Family::Grid { h: 3, w: 4 }).unwrap();
    let e = eigh(&g.normalized_laplacian().unwrap()).unwrap().truncated(5);
    let p = partition_default(&e);
    assert_eq!(p.dims().iter().sum::<usize>(), 5);
}

#[test]
fn projector_examples() {
    let e1 = Matrix::from_rows(&[vec![1.0], vec![0.0], vec![0.0]]).unwrap();
    let p = projector(&e1, true).unwrap();
    assert_eq!(p.matrix().diagonal(), vec![1.0, 0.0, 0.0]);
    assert_eq!(p.matrix().max_abs(), 1.0);

    let k4 = generate(Family::Complete { n: 4 }).unwrap().adjacency_matrix();
    let part = partition_default(&eigh(&k4).unwrap());
    let minus_one = &part.groups[0];
    assert_eq!(minus_one.dim(), 3);
    let want: Dense = (0..4).map(|i| (0..4).map(|j| f64::from(u8::from(i == j)) - 0.25).collect()).collect();
    assert!(max_diff(&want, minus_one.projector().matrix()) < 1e-12);

    let dup = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
    assert!(matches!(projector(&dup, false), Err(Error::RankDeficient { .. })));
}

#[test]
fn non_orthonormal_projector_matches_orthonormal_one() {
    let v = gaussian_matrix(6, 3, 11);
    let p = projector(&v, false).unwrap();
    let q = projector(&orthonormalize(&v), true).unwrap();
    assert!(p.matrix().max_abs_diff(q.matrix()) < 1e-10);
    let pp = p.matrix().matmul(p.matrix()).unwrap();
    assert!(pp.max_abs_diff(p.matrix()) < 1e-8);
    assert!((p.matrix().trace() - 3.0).abs() < 1e-8);
}

/// Classical Gram-Schmidt on plain vectors, used as an oracle.
fn orthonormalize(v: &Matrix) -> Matrix {
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for j in 0..v.cols() {
        let mut c = v.column(j);
        for q in &cols {
            let d: f64 = c.iter().zip(q).map(|(a, b)| a * b).sum();
            c.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
        }
        let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        cols.push(c.into_iter().map(|x| x / n).collect());
    }
    Matrix::from_fn(v.rows(), cols.len(), |i, j| cols[j][i])
}

#[test]
fn orthogonal_samples() {
    let mean: f64 = (0..10_000u64).map(|s| sample_orthogonal(1, s).q[(0, 0)]).sum::<f64>() / 1e4;
    assert!(mean.abs() < 0.05, "mean {mean}");
    for s in 0..20 {
        let q = sample_orthogonal(3, s).q;
        let qtq = q.t_matmul(&q).unwrap();
        assert!(qtq.max_abs_diff(&Matrix::identity(3)) <= 1e-10);
        assert!((det3(&q).abs() - 1.0).abs() < 1e-8);
    }
    assert_eq!(sample_orthogonal(2, 7).q, sample_orthogonal(2, 7).q);
    assert_eq!(sample_permutation(1, 3).q, Matrix::identity(1));
}

fn det3(q: &Matrix) -> f64 {
    q[(0, 0)] * (q[(1, 1)] * q[(2, 2)] - q[(1, 2)] * q[(2, 1)]) - q[(0, 1)] * (q[(1, 0)] * q[(2, 2)] - q[(1, 2)] * q[(2, 0)])
        + q[(0, 2)] * (q[(1, 0)] * q[(2, 1)] - q[(1, 1)] * q[(2, 0)])
}

#[test]
fn haar_d2_is_rotation_or_reflection_with_uniform_angle() {
    // the first column of a Haar O(2) element has a uniformly distributed angle
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut quadrant = [0usize; 4];
    for _ in 0..4000 {
        let q = haar_orthogonal(2, &mut rng);
        let a = q[(1, 0)].atan2(q[(0, 0)]);
        let idx = ((a + std::f64::consts::PI) / (std::f64::consts::PI / 2.0)).floor() as usize;
        quadrant[idx.min(3)] += 1;
    }
    assert!(quadrant.iter().all(|&c| (850..=1150).contains(&c)), "{quadrant:?}");
}

#[test]
fn eigdecomp_json_round_trip() {
    let e = eigh(&random_symmetric(4, 2)).unwrap();
    let s = serde_json::to_string(&e).unwrap();
    assert!(s.starts_with("{\"values\":"));
    let back: EigDecomp = serde_json::from_str(&s).unwrap();
    assert_eq!(back, e);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn decomposition_invariants(n in 1usize..40, seed in any::<u64>()) {
        let m = random_symmetric(n, seed);
        let e = eigh(&m).unwrap();
        let fro = m.matrix().frobenius_norm();
        prop_assert!(e.max_residual(m.matrix()) <= 1e-8 * (1.0 + fro));
        prop_assert!(e.orthogonality_error() <= 1e-9);
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let recon = e.reconstruct();
        prop_assert!(recon.max_abs_diff(m.matrix()) <= 1e-7 * (1.0 + m.matrix().max_abs()));
    }

    #[test]
    fn laplacian_partition_invariants(n in 2usize..24, p in 0.2f64..0.9, seed in any::<u64>()) {
        let g = random_graph(n, p, seed);
        let e = eigh(&g.normalized_laplacian().unwrap()).unwrap();
        prop_assert!(e.values.iter().all(|&l| (-1e-8..=2.0 + 1e-8).contains(&l)));
        let part = partition_default(&e);
        prop_assert_eq!(part.dims().iter().sum::<usize>(), n);
        let mut sum = Matrix::zeros(n, n);
        for grp in &part.groups {
            let b = &grp.basis;
            prop_assert!(b.t_matmul(b).unwrap().max_abs_diff(&Matrix::identity(grp.dim())) <= 1e-9);
            sum = sum.add(grp.projector().matrix()).unwrap();
        }
        prop_assert!(sum.max_abs_diff(&Matrix::identity(n)) <= 1e-7);
        // groups separated by more than tau, members within tau of their neighbours
        let mut start = 0;
        for grp in &part.groups {
            let vals = &e.values[start..start + grp.dim()];
            prop_assert!(vals.windows(2).all(|w| w[1] - w[0] <= part.tol));
            if start > 0 {
                prop_assert!(vals[0] - e.values[start - 1] > part.tol);
            }
            start += grp.dim();
        }
    }

    #[test]
    fn projector_is_basis_independent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = generate(Family::Grid { h: 4, w: 4 }).unwrap();
        let part = partition_default(&eigh(&g.normalized_laplacian().unwrap()).unwrap());
        let qs: Vec<Matrix> = part.groups.iter().map(|grp| haar_orthogonal(grp.dim(), &mut rng)).collect();
        let rot = part.rotated(&qs).unwrap();
        for (a, b) in part.groups.iter().zip(&rot.groups) {
            prop_assert!(a.projector().matrix().max_abs_diff(b.projector().matrix()) <= 1e-9);
        }
    }

    #[test]
    fn permutations_are_permutation_matrices(n in 1usize..30, seed in any::<u64>()) {
        let p = sample_permutation(n, seed).q;
        for i in 0..n {
            prop_assert_eq!(p.row(i).iter().filter(|&&x| x == 1.0).count(), 1);
            prop_assert_eq!(p.column(i).iter().filter(|&&x| x == 1.0).count(), 1);
        }
        prop_assert_eq!(p.matmul(&p.transpose()).unwrap(), Matrix::identity(n));
    }
}
