//! Eagerly evaluated tape of dense tensor primitives.
//!
//! Each recording call computes its value immediately and checks shapes at
//! record time; [`Tape::backward`] then walks the node list in reverse, which
//! is a reverse topological order because operands always precede results.

use std::collections::BTreeMap;

use super::Tensor;
use crate::error::{shape_err, Result};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Relu(Var),
    Tanh(Var),
    Exp(Var),
    SumAxis(Var, usize),
    MeanBroadcast(Var, usize),
    Concat(Vec<Var>, usize),
    Slice { src: Var, axis: usize, start: usize },
    Scale(Var, f64),
    Rank1(Var, Var),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: BTreeMap<String, Var>,
}

/// Adjoints of every node reachable from the differentiated output.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    params: BTreeMap<String, Var>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Gradient for every parameter bound on the tape; zeros when unreachable.
    pub fn params(&self, tape: &Tape) -> BTreeMap<String, Tensor> {
        self.params
            .iter()
            .map(|(name, &v)| {
                let g = self.get(v).cloned().unwrap_or_else(|| Tensor::zeros(&tape.value(v).shape));
                (name.clone(), g)
            })
            .collect()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].value.shape
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Records a constant input.
    pub fn input(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf)
    }

    /// Binds a named parameter; repeated binds of one name return the same node.
    pub fn param(&mut self, name: &str, t: &Tensor) -> Var {
        if let Some(&v) = self.params.get(name) {
            return v;
        }
        let v = self.push(t.clone(), Op::Leaf);
        self.params.insert(name.to_string(), v);
        v
    }

    pub fn param_vars(&self) -> &BTreeMap<String, Var> {
        &self.params
    }

    /// Matrix product over the last two axes.
    ///
    /// Supported: `(m,p)x(p,q)`, `(B,m,p)x(p,q)` and `(m,p)x(B,p,q)`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        let (batch, m, p, q) = match (sa.as_slice(), sb.as_slice()) {
            ([m, p], [p2, q]) if p == p2 => (None, *m, *p, *q),
            ([bt, m, p], [p2, q]) if p == p2 => (Some(*bt), *m, *p, *q),
            ([m, p], [bt, p2, q]) if p == p2 => (Some(*bt), *m, *p, *q),
            _ => return shape_err(format!("matmul {sa:?} x {sb:?}")),
        };
        let va = &self.nodes[a.0].value.data;
        let vb = &self.nodes[b.0].value.data;
        let value = match batch {
            None => {
                let mut out = vec![0.0; m * q];
                gemm_nn(va, vb, m, p, q, &mut out);
                Tensor { shape: vec![m, q], data: out }
            }
            Some(bt) => {
                let mut out = vec![0.0; bt * m * q];
                let lhs_batched = sa.len() == 3;
                for (k, chunk) in out.chunks_exact_mut(m * q).enumerate() {
                    let ak = if lhs_batched { &va[k * m * p..(k + 1) * m * p] } else { &va[..] };
                    let bk = if lhs_batched { &vb[..] } else { &vb[k * p * q..(k + 1) * p * q] };
                    gemm_nn(ak, bk, m, p, q, chunk);
                }
                Tensor { shape: vec![bt, m, q], data: out }
            }
        };
        Ok(self.push(value, Op::MatMul(a, b)))
    }

    /// Elementwise sum; `b` may also be a bias over the last axis of `a`.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let sa = self.shape(a).to_vec();
        let sb = self.shape(b).to_vec();
        let value = if sa == sb {
            let (x, y) = (&self.value(a).data, &self.value(b).data);
            Tensor { shape: sa, data: x.iter().zip(y).map(|(p, q)| p + q).collect() }
        } else if sb.len() == 1 && sb[0] == *sa.last().unwrap() {
            let c = sb[0];
            let bias = &self.value(b).data;
            let mut data = self.value(a).data.clone();
            for row in data.chunks_exact_mut(c) {
                row.iter_mut().zip(bias).for_each(|(x, bv)| *x += bv);
            }
            Tensor { shape: sa, data }
        } else {
            return shape_err(format!("add {sa:?} + {sb:?}"));
        };
        Ok(self.push(value, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.zip_same(a, b, "sub", |x, y| x - y)?;
        Ok(self.push(value, Op::Sub(a, b)))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.zip_same(a, b, "mul", |x, y| x * y)?;
        Ok(self.push(value, Op::Mul(a, b)))
    }

    fn zip_same(&self, a: Var, b: Var, what: &str, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape != tb.shape {
            return shape_err(format!("{what} {:?} vs {:?}", ta.shape, tb.shape));
        }
        Ok(Tensor { shape: ta.shape.clone(), data: ta.data.iter().zip(&tb.data).map(|(&x, &y)| f(x, y)).collect() })
    }

    fn map(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let t = self.value(a);
        let value = Tensor { shape: t.shape.clone(), data: t.data.iter().map(|&x| f(x)).collect() };
        self.push(value, op)
    }

    /// `max(x, 0)`; the derivative at exactly 0 is taken as 0.
    pub fn relu(&mut self, a: Var) -> Var {
        self.map(a, Op::Relu(a), |x| if x > 0.0 { x } else { 0.0 })
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.map(a, Op::Tanh(a), f64::tanh)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.map(a, Op::Exp(a), f64::exp)
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        self.map(a, Op::Scale(a, s), |x| s * x)
    }

    /// Sums out `axis`. Reducing a 1-axis tensor yields shape `[1]`.
    pub fn sum_axis(&mut self, a: Var, axis: usize) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        if axis >= shape.len() {
            return shape_err(format!("sum over axis {axis} of {shape:?}"));
        }
        let (outer, dim, inner) = Tensor::axis_split(&shape, axis);
        let src = &self.value(a).data;
        let mut out = vec![0.0; outer * inner];
        for o in 0..outer {
            for d in 0..dim {
                let base = (o * dim + d) * inner;
                for i in 0..inner {
                    out[o * inner + i] += src[base + i];
                }
            }
        }
        let mut new_shape = shape.clone();
        new_shape.remove(axis);
        if new_shape.is_empty() {
            new_shape.push(1);
        }
        Ok(self.push(Tensor { shape: new_shape, data: out }, Op::SumAxis(a, axis)))
    }

    /// Sum of all entries as a `[1]` tensor.
    pub fn sum_all(&mut self, a: Var) -> Result<Var> {
        let mut v = a;
        while self.shape(v).len() > 1 {
            v = self.sum_axis(v, 0)?;
        }
        self.sum_axis(v, 0)
    }

    /// Replaces every entry by the mean of its fibre along `axis`.
    pub fn mean_broadcast(&mut self, a: Var, axis: usize) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        if axis >= shape.len() {
            return shape_err(format!("mean over axis {axis} of {shape:?}"));
        }
        let value = mean_broadcast_raw(self.value(a), axis);
        Ok(self.push(value, Op::MeanBroadcast(a, axis)))
    }

    /// Concatenates along `axis`; all other extents must agree.
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        let Some(&first) = parts.first() else {
            return shape_err("concat of nothing");
        };
        let base = self.shape(first).to_vec();
        if axis >= base.len() {
            return shape_err(format!("concat along axis {axis} of {base:?}"));
        }
        let mut total = 0;
        for &p in parts {
            let s = self.shape(p);
            let ok = s.len() == base.len() && s.iter().zip(&base).enumerate().all(|(i, (x, y))| i == axis || x == y);
            if !ok {
                return shape_err(format!("concat {s:?} with {base:?} along {axis}"));
            }
            total += s[axis];
        }
        let mut shape = base.clone();
        shape[axis] = total;
        let (outer, _, inner) = Tensor::axis_split(&shape, axis);
        let mut data = Vec::with_capacity(shape.iter().product());
        for o in 0..outer {
            for &p in parts {
                let t = self.value(p);
                let w = t.shape[axis] * inner;
                data.extend_from_slice(&t.data[o * w..(o + 1) * w]);
            }
        }
        Ok(self.push(Tensor { shape, data }, Op::Concat(parts.to_vec(), axis)))
    }

    /// Entries `start..start+len` along `axis`.
    pub fn slice(&mut self, a: Var, axis: usize, start: usize, len: usize) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        if axis >= shape.len() || start + len > shape[axis] || len == 0 {
            return shape_err(format!("slice {start}..{} of axis {axis} in {shape:?}", start + len));
        }
        let (outer, dim, inner) = Tensor::axis_split(&shape, axis);
        let src = &self.value(a).data;
        let mut data = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let from = (o * dim + start) * inner;
            data.extend_from_slice(&src[from..from + len * inner]);
        }
        let mut new_shape = shape;
        new_shape[axis] = len;
        Ok(self.push(Tensor { shape: new_shape, data }, Op::Slice { src: a, axis, start }))
    }

    /// Rank-one contraction `v (v^T x)` for each batch vector.
    ///
    /// `v` is `(n,1)` or `(B,n,1)`, `x` is `(n,d)`; the result is `(n,d)` or `(B,n,d)`.
    pub fn rank1(&mut self, v: Var, x: Var) -> Result<Var> {
        let (sv, sx) = (self.shape(v).to_vec(), self.shape(x).to_vec());
        let (batch, n, d) = match (sv.as_slice(), sx.as_slice()) {
            ([n, 1], [n2, d]) if n == n2 => (None, *n, *d),
            ([b, n, 1], [n2, d]) if n == n2 => (Some(*b), *n, *d),
            _ => return shape_err(format!("rank1 {sv:?} with {sx:?}")),
        };
        let (vv, xv) = (&self.value(v).data, &self.value(x).data);
        let b = batch.unwrap_or(1);
        let mut out = vec![0.0; b * n * d];
        for k in 0..b {
            let vk = &vv[k * n..(k + 1) * n];
            let s = project(vk, xv, d);
            let ok = &mut out[k * n * d..(k + 1) * n * d];
            for (i, row) in ok.chunks_exact_mut(d).enumerate() {
                row.iter_mut().zip(&s).for_each(|(o, sv)| *o = vk[i] * sv);
            }
        }
        let shape = match batch {
            None => vec![n, d],
            Some(b) => vec![b, n, d],
        };
        Ok(self.push(Tensor { shape, data: out }, Op::Rank1(v, x)))
    }

    /// Reverse pass from a single-entry output, seeded with 1.
    pub fn backward(&self, out: Var) -> Result<Gradients> {
        if self.value(out).len() != 1 {
            return shape_err(format!("backward needs a scalar, got {:?}", self.value(out).shape));
        }
        self.backward_with(out, Tensor::full(&self.value(out).shape.clone(), 1.0))
    }

    /// Reverse pass seeded with an arbitrary output adjoint.
    pub fn backward_with(&self, out: Var, seed: Tensor) -> Result<Gradients> {
        if seed.shape != self.value(out).shape {
            return shape_err(format!("seed {:?} for output {:?}", seed.shape, self.value(out).shape));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; out.0 + 1];
        grads[out.0] = Some(seed);
        for idx in (0..=out.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            self.propagate(idx, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads, params: self.params.clone() })
    }

    fn propagate(&self, idx: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let node = &self.nodes[idx];
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let (ga, gb) = matmul_backward(ta, tb, g);
                accumulate(grads, *a, ga);
                accumulate(grads, *b, gb);
            }
            Op::Add(a, b) => {
                accumulate(grads, *a, g.clone());
                let tb = self.value(*b);
                if tb.shape == g.shape {
                    accumulate(grads, *b, g.clone());
                } else {
                    let c = tb.shape[0];
                    let mut gb = vec![0.0; c];
                    for row in g.data.chunks_exact(c) {
                        gb.iter_mut().zip(row).for_each(|(s, x)| *s += x);
                    }
                    accumulate(grads, *b, Tensor { shape: vec![c], data: gb });
                }
            }
            Op::Sub(a, b) => {
                accumulate(grads, *a, g.clone());
                accumulate(grads, *b, scaled(g, -1.0));
            }
            Op::Mul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                accumulate(grads, *a, hadamard(g, tb));
                accumulate(grads, *b, hadamard(g, ta));
            }
            Op::Relu(a) => {
                let x = self.value(*a);
                let data = g.data.iter().zip(&x.data).map(|(gv, &xv)| if xv > 0.0 { *gv } else { 0.0 }).collect();
                accumulate(grads, *a, Tensor { shape: g.shape.clone(), data });
            }
            Op::Tanh(a) => {
                let y = &node.value;
                let data = g.data.iter().zip(&y.data).map(|(gv, yv)| gv * (1.0 - yv * yv)).collect();
                accumulate(grads, *a, Tensor { shape: g.shape.clone(), data });
            }
            Op::Exp(a) => {
                accumulate(grads, *a, hadamard(g, &node.value));
            }
            Op::Scale(a, s) => accumulate(grads, *a, scaled(g, *s)),
            Op::SumAxis(a, axis) => {
                let src_shape = &self.value(*a).shape;
                let (outer, dim, inner) = Tensor::axis_split(src_shape, *axis);
                let mut data = vec![0.0; outer * dim * inner];
                for o in 0..outer {
                    for d in 0..dim {
                        let base = (o * dim + d) * inner;
                        data[base..base + inner].copy_from_slice(&g.data[o * inner..(o + 1) * inner]);
                    }
                }
                accumulate(grads, *a, Tensor { shape: src_shape.clone(), data });
            }
            Op::MeanBroadcast(a, axis) => {
                accumulate(grads, *a, mean_broadcast_raw(g, *axis));
            }
            Op::Concat(parts, axis) => {
                let (outer, _, inner) = Tensor::axis_split(&g.shape, *axis);
                let total_w = g.shape[*axis] * inner;
                let mut offset = 0;
                for &p in parts {
                    let shape = self.value(p).shape.clone();
                    let w = shape[*axis] * inner;
                    let mut data = Vec::with_capacity(outer * w);
                    for o in 0..outer {
                        let from = o * total_w + offset;
                        data.extend_from_slice(&g.data[from..from + w]);
                    }
                    offset += w;
                    accumulate(grads, p, Tensor { shape, data });
                }
            }
            Op::Slice { src, axis, start } => {
                let shape = self.value(*src).shape.clone();
                let (outer, dim, inner) = Tensor::axis_split(&shape, *axis);
                let len = g.shape[*axis];
                let mut data = vec![0.0; outer * dim * inner];
                for o in 0..outer {
                    let to = (o * dim + start) * inner;
                    data[to..to + len * inner].copy_from_slice(&g.data[o * len * inner..(o + 1) * len * inner]);
                }
                accumulate(grads, *src, Tensor { shape, data });
            }
            Op::Rank1(v, x) => {
                let (tv, tx) = (self.value(*v), self.value(*x));
                let n = tx.shape[0];
                let d = tx.shape[1];
                let b = tv.len() / n;
                let mut gv = vec![0.0; tv.len()];
                let mut gx = vec![0.0; tx.len()];
                for k in 0..b {
                    let vk = &tv.data[k * n..(k + 1) * n];
                    let gk = &g.data[k * n * d..(k + 1) * n * d];
                    let s = project(vk, &tx.data, d);
                    // t = v^T G_k
                    let t = project(vk, gk, d);
                    for i in 0..n {
                        let gi = &gk[i * d..(i + 1) * d];
                        let xi = &tx.data[i * d..(i + 1) * d];
                        gv[k * n + i] += crate::linalg::dot(gi, &s) + crate::linalg::dot(xi, &t);
                        for j in 0..d {
                            gx[i * d + j] += vk[i] * t[j];
                        }
                    }
                }
                accumulate(grads, *v, Tensor { shape: tv.shape.clone(), data: gv });
                accumulate(grads, *x, Tensor { shape: tx.shape.clone(), data: gx });
            }
        }
    }
}

/// `v^T X` for a length-`n` vector and an `n x d` row-major matrix.
fn project(v: &[f64], x: &[f64], d: usize) -> Vec<f64> {
    let mut s = vec![0.0; d];
    for (vi, row) in v.iter().zip(x.chunks_exact(d)) {
        s.iter_mut().zip(row).for_each(|(acc, xv)| *acc += vi * xv);
    }
    s
}

fn accumulate(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut grads[v.0] {
        Some(acc) => acc.data.iter_mut().zip(&g.data).for_each(|(a, b)| *a += b),
        slot @ None => *slot = Some(g),
    }
}

fn scaled(t: &Tensor, s: f64) -> Tensor {
    Tensor { shape: t.shape.clone(), data: t.data.iter().map(|x| x * s).collect() }
}

fn hadamard(a: &Tensor, b: &Tensor) -> Tensor {
    Tensor { shape: a.shape.clone(), data: a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect() }
}

fn mean_broadcast_raw(t: &Tensor, axis: usize) -> Tensor {
    let (outer, dim, inner) = Tensor::axis_split(&t.shape, axis);
    let mut data = vec![0.0; t.len()];
    let inv = 1.0 / dim as f64;
    let mut mean = vec![0.0; inner];
    for o in 0..outer {
        mean.iter_mut().for_each(|m| *m = 0.0);
        for d in 0..dim {
            let base = (o * dim + d) * inner;
            mean.iter_mut().zip(&t.data[base..base + inner]).for_each(|(m, x)| *m += x);
        }
        mean.iter_mut().for_each(|m| *m *= inv);
        for d in 0..dim {
            let base = (o * dim + d) * inner;
            data[base..base + inner].copy_from_slice(&mean);
        }
    }
    Tensor { shape: t.shape.clone(), data }
}

/// `out += A B` for row-major `A: m x p`, `B: p x q`.
fn gemm_nn(a: &[f64], b: &[f64], m: usize, p: usize, q: usize, out: &mut [f64]) {
    for i in 0..m {
        let orow = &mut out[i * q..(i + 1) * q];
        for k in 0..p {
            let av = a[i * p + k];
            if av == 0.0 {
                continue;
            }
            let brow = &b[k * q..(k + 1) * q];
            orow.iter_mut().zip(brow).for_each(|(o, bv)| *o += av * bv);
        }
    }
}

/// `out += G B^T` for `G: m x q`, `B: p x q`, giving `m x p`.
fn gemm_nt(g: &[f64], b: &[f64], m: usize, q: usize, p: usize, out: &mut [f64]) {
    for i in 0..m {
        let grow = &g[i * q..(i + 1) * q];
        for k in 0..p {
            out[i * p + k] += crate::linalg::dot(grow, &b[k * q..(k + 1) * q]);
        }
    }
}

/// `out += A^T G` for `A: m x p`, `G: m x q`, giving `p x q`.
fn gemm_tn(a: &[f64], g: &[f64], m: usize, p: usize, q: usize, out: &mut [f64]) {
    for i in 0..m {
        let grow = &g[i * q..(i + 1) * q];
        for k in 0..p {
            let av = a[i * p + k];
            if av == 0.0 {
                continue;
            }
            out[k * q..(k + 1) * q].iter_mut().zip(grow).for_each(|(o, gv)| *o += av * gv);
        }
    }
}

fn matmul_backward(ta: &Tensor, tb: &Tensor, g: &Tensor) -> (Tensor, Tensor) {
    let mut ga = Tensor::zeros(&ta.shape);
    let mut gb = Tensor::zeros(&tb.shape);
    match (ta.rank(), tb.rank()) {
        (2, 2) => {
            let (m, p, q) = (ta.shape[0], ta.shape[1], tb.shape[1]);
            gemm_nt(&g.data, &tb.data, m, q, p, &mut ga.data);
            gemm_tn(&ta.data, &g.data, m, p, q, &mut gb.data);
        }
        (3, 2) => {
            let (bt, m, p, q) = (ta.shape[0], ta.shape[1], ta.shape[2], tb.shape[1]);
            for k in 0..bt {
                let gk = &g.data[k * m * q..(k + 1) * m * q];
                gemm_nt(gk, &tb.data, m, q, p, &mut ga.data[k * m * p..(k + 1) * m * p]);
                gemm_tn(&ta.data[k * m * p..(k + 1) * m * p], gk, m, p, q, &mut gb.data);
            }
        }
        _ => {
            let (m, p) = (ta.shape[0], ta.shape[1]);
            let (bt, q) = (tb.shape[0], tb.shape[2]);
            for k in 0..bt {
                let gk = &g.data[k * m * q..(k + 1) * m * q];
                gemm_nt(gk, &tb.data[k * p * q..(k + 1) * p * q], m, q, p, &mut ga.data);
                gemm_tn(&ta.data, gk, m, p, q, &mut gb.data[k * p * q..(k + 1) * p * q]);
            }
        }
    }
    (ga, gb)
}

/// Convenience: gradient map keyed by parameter name.
pub fn param_grads(tape: &Tape, out: Var) -> Result<BTreeMap<String, Tensor>> {
    Ok(tape.backward(out)?.params(tape))
}
