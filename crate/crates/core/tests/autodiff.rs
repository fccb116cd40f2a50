use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectral_pe::autodiff::*;
use spectral_pe::nets::{Activation, BlockContext, BlockKind, BlockSpec};
use spectral_pe::Result;

const H: f64 = 1e-6;
const TOL: f64 = 1e-6;

fn gaussian(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    // keep entries away from the relu kink
    let data = (0..n)
        .map(|_| {
            let x: f64 = rng.random_range(0.1..1.5);
            if rng.random_bool(0.5) { x } else { -x }
        })
        .collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

fn params(shapes: &[(&str, &[usize])], seed: u64) -> ParamSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ps = ParamSet::new();
    for (name, s) in shapes {
        ps.insert(*name, gaussian(s, &mut rng));
    }
    ps
}

/// `sum(out * R)` for a fixed random `R`, so every output adjoint differs.
fn weighted_sum(t: &mut Tape, out: Var, seed: u64) -> Result<Var> {
    let r = gaussian(&t.value(out).shape.clone(), &mut ChaCha8Rng::seed_from_u64(seed));
    let rv = t.input(r);
    let p = t.mul(out, rv)?;
    t.sum_all(p)
}

fn check<F>(ps: &ParamSet, f: F) -> f64
where
    F: Fn(&mut Tape, &ParamSet) -> Result<Var>,
{
    let err = grad_check_coords(
        |t, p| {
            let out = f(t, p)?;
            weighted_sum(t, out, 99)
        },
        ps,
        H,
        0,
        usize::MAX,
    )
    .unwrap();
    assert!(err <= TOL, "relative error {err}");
    err
}

#[test]
fn matmul_gradients() {
    let ps = params(&[("a", &[3, 4]), ("b", &[4, 2]), ("ba", &[2, 3, 4]), ("bb", &[2, 4, 2])], 1);
    check(&ps, |t, p| {
        let (a, b) = (p.bind(t, "a")?, p.bind(t, "b")?);
        t.matmul(a, b)
    });
    check(&ps, |t, p| {
        let (a, b) = (p.bind(t, "ba")?, p.bind(t, "b")?);
        t.matmul(a, b)
    });
    check(&ps, |t, p| {
        let (a, b) = (p.bind(t, "a")?, p.bind(t, "bb")?);
        t.matmul(a, b)
    });
}

#[test]
fn elementwise_gradients() {
    let ps = params(&[("x", &[3, 4]), ("y", &[3, 4]), ("b", &[4])], 2);
    check(&ps, |t, p| {
        let (x, y) = (p.bind(t, "x")?, p.bind(t, "y")?);
        t.add(x, y)
    });
    check(&ps, |t, p| {
        let (x, b) = (p.bind(t, "x")?, p.bind(t, "b")?);
        t.add(x, b)
    });
    check(&ps, |t, p| {
        let (x, y) = (p.bind(t, "x")?, p.bind(t, "y")?);
        t.sub(x, y)
    });
    check(&ps, |t, p| {
        let (x, y) = (p.bind(t, "x")?, p.bind(t, "y")?);
        t.mul(x, y)
    });
    check(&ps, |t, p| {
        let x = p.bind(t, "x")?;
        Ok(t.relu(x))
    });
    check(&ps, |t, p| {
        let x = p.bind(t, "x")?;
        Ok(t.tanh(x))
    });
    check(&ps, |t, p| {
        let x = p.bind(t, "x")?;
        Ok(t.exp(x))
    });
    check(&ps, |t, p| {
        let x = p.bind(t, "x")?;
        Ok(t.scale(x, -2.5))
    });
}

#[test]
fn structural_gradients() {
    let ps = params(&[("x", &[2, 3, 4]), ("y", &[2, 3, 1]), ("v", &[5, 1]), ("bv", &[3, 5, 1]), ("m", &[5, 2])], 3);
    for axis in 0..3 {
        check(&ps, |t, p| {
            let x = p.bind(t, "x")?;
            t.sum_axis(x, axis)
        });
        check(&ps, |t, p| {
            let x = p.bind(t, "x")?;
            t.mean_broadcast(x, axis)
        });
    }
    check(&ps, |t, p| {
        let (x, y) = (p.bind(t, "x")?, p.bind(t, "y")?);
        t.concat(&[x, y, x], 2)
    });
    check(&ps, |t, p| {
        let x = p.bind(t, "x")?;
        t.slice(x, 2, 1, 2)
    });
    check(&ps, |t, p| {
        let (v, m) = (p.bind(t, "v")?, p.bind(t, "m")?);
        t.rank1(v, m)
    });
    check(&ps, |t, p| {
        let (v, m) = (p.bind(t, "bv")?, p.bind(t, "m")?);
        t.rank1(v, m)
    });
}

#[test]
fn gradients_accumulate_over_reuse() {
    // d/dx sum(x * x + x) = 2x + 1
    let ps = params(&[("x", &[4])], 4);
    let mut t = Tape::new();
    let x = ps.bind(&mut t, "x").unwrap();
    let sq = t.mul(x, x).unwrap();
    let s = t.add(sq, x).unwrap();
    let out = t.sum_all(s).unwrap();
    let g = param_grads(&t, out).unwrap();
    for (gx, x) in g["x"].data.iter().zip(&ps.get("x").unwrap().data) {
        assert!((gx - (2.0 * x + 1.0)).abs() <= 1e-14, "{gx} vs {x}");
    }
}

#[test]
fn unreachable_parameter_gets_zero_gradient() {
    let ps = params(&[("x", &[2]), ("unused", &[3])], 5);
    let mut t = Tape::new();
    let x = ps.bind(&mut t, "x").unwrap();
    ps.bind(&mut t, "unused").unwrap();
    let out = t.sum_all(x).unwrap();
    let g = param_grads(&t, out).unwrap();
    assert_eq!(g["unused"], Tensor::zeros(&[3]));
    assert_eq!(g["x"], Tensor::full(&[2], 1.0));
}

#[test]
fn backward_requires_scalar() {
    let mut t = Tape::new();
    let x = t.input(Tensor::zeros(&[2]));
    assert!(t.backward(x).is_err());
}

fn mlp_loss<'a>(spec: &'a BlockSpec, x: &Tensor) -> impl Fn(&mut Tape, &ParamSet) -> Result<Var> + 'a {
    let x = x.clone();
    move |t, p| {
        let h = t.input(x.clone());
        let y = spec.forward("m", t, p, h, &BlockContext::default())?;
        let sq = t.mul(y, y)?;
        t.sum_all(sq)
    }
}

#[test]
fn mlp_grad_check() {
    for (act, seed) in [(Activation::Tanh, 0), (Activation::Relu, 1)] {
        let spec = BlockSpec::new(BlockKind::ElementwiseMlp, vec![3, 8, 8, 2], act).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ps = ParamSet::new();
        spec.init("m", &mut ps, &mut rng);
        // nonzero biases so relu units do not sit exactly at the kink
        for name in ps.names().map(String::from).collect::<Vec<_>>() {
            if name.ends_with(".b") {
                let shape = ps.get(&name).unwrap().shape.clone();
                *ps.get_mut(&name).unwrap() = gaussian(&shape, &mut rng);
            }
        }
        let x = gaussian(&[6, 3], &mut rng);
        let err = grad_check(mlp_loss(&spec, &x), &ps, H, 7).unwrap();
        assert!(err <= 1e-4, "{act:?}: {err}");
    }
}

#[test]
fn adam_reduces_quadratic_and_is_deterministic() {
    let run = || {
        let mut ps = params(&[("w", &[5])], 6);
        let target = Tensor::new(vec![5], vec![1.0, -2.0, 0.5, 3.0, 0.0]).unwrap();
        let cfg = AdamConfig { lr: 0.05, ..Default::default() };
        let mut losses = Vec::new();
        for _ in 0..400 {
            let mut t = Tape::new();
            let w = ps.bind(&mut t, "w").unwrap();
            let tv = t.input(target.clone());
            let d = t.sub(w, tv).unwrap();
            let sq = t.mul(d, d).unwrap();
            let out = t.sum_all(sq).unwrap();
            losses.push(t.value(out).data[0]);
            ps.set_grads(param_grads(&t, out).unwrap()).unwrap();
            ps.adam_step(&cfg);
        }
        (ps, losses)
    };
    let (a, la) = run();
    let (b, lb) = run();
    assert_eq!(la, lb);
    assert_eq!(a.get("w").unwrap(), b.get("w").unwrap());
    assert_eq!(a.steps(), 400);
    assert!(la.last().unwrap() < &1e-3, "{:?}", la.last());
    assert!(la.last().unwrap() < &(la[0] * 1e-3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn backward_is_linear_in_seed(seed in any::<u64>(), alpha in -3.0f64..3.0) {
        let ps = params(&[("a", &[3, 3]), ("b", &[3, 2])], seed);
        let mut t = Tape::new();
        let (a, b) = (ps.bind(&mut t, "a").unwrap(), ps.bind(&mut t, "b").unwrap());
        let ab = t.matmul(a, b).unwrap();
        let y = t.tanh(ab);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let s1 = gaussian(&[3, 2], &mut rng);
        let s2 = gaussian(&[3, 2], &mut rng);
        let combo = Tensor::new(vec![3, 2], s1.data.iter().zip(&s2.data).map(|(x, y)| alpha * x + y).collect()).unwrap();
        let g1 = t.backward_with(y, s1).unwrap().params(&t);
        let g2 = t.backward_with(y, s2).unwrap().params(&t);
        let gc = t.backward_with(y, combo).unwrap().params(&t);
        for name in ["a", "b"] {
            let lin: Vec<f64> = g1[name].data.iter().zip(&g2[name].data).map(|(x, y)| alpha * x + y).collect();
            let lin = Tensor::new(g1[name].shape.clone(), lin).unwrap();
            prop_assert!(gc[name].max_abs_diff(&lin) <= 1e-10);
        }
    }

    #[test]
    fn random_composite_passes_grad_check(seed in any::<u64>()) {
        let ps = params(&[("x", &[4, 3]), ("w", &[3, 3]), ("v", &[4, 1])], seed);
        let f = |t: &mut Tape, p: &ParamSet| {
            let (x, w, v) = (p.bind(t, "x")?, p.bind(t, "w")?, p.bind(t, "v")?);
            let xw = t.matmul(x, w)?;
            let h = t.tanh(xw);
            let r = t.rank1(v, h)?;
            let m = t.mean_broadcast(r, 0)?;
            let e = t.exp(m);
            let c = t.concat(&[e, h], 1)?;
            weighted_sum(t, c, seed)
        };
        let err = grad_check_coords(f, &ps, H, seed, usize::MAX).unwrap();
        prop_assert!(err <= 1e-5, "{}", err);
    }
}
