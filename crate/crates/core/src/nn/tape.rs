//! Reverse-mode differentiation over vector-valued operations.
//!
//! Every value on the tape is a 1-D vector. Parameters stay in the
//! [`ParamStore`]; the tape records which ones a [`Op::Linear`] read so
//! `backward` can accumulate into their gradient buffers.

use super::{NnError, ParamId, ParamStore};

pub const BCE_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

#[derive(Debug, Clone, PartialEq)]
enum Op {
    Input,
    Linear { w: ParamId, b: ParamId, x: Var },
    Relu(Var),
    Sigmoid(Var),
    Mul(Var, Var),
    Mean(Vec<Var>),
    Concat(Var, Var),
    Bce { p: Var, label: f64, clamped: bool },
}

#[derive(Debug, Clone, Default)]
pub struct Tape {
    ops: Vec<Op>,
    values: Vec<Vec<f64>>,
}

fn mismatch(op: &'static str, expected: usize, found: usize) -> NnError {
    NnError::ShapeMismatch {
        op,
        expected: vec![expected],
        found: vec![found],
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.values[v.0]
    }

    /// Value of a length-1 var.
    pub fn scalar(&self, v: Var) -> Result<f64, NnError> {
        match self.value(v) {
            [x] => Ok(*x),
            other => Err(NnError::NotScalar(other.len())),
        }
    }

    fn push(&mut self, op: Op, value: Vec<f64>) -> Var {
        self.ops.push(op);
        self.values.push(value);
        Var(self.ops.len() - 1)
    }

    pub fn input(&mut self, values: Vec<f64>) -> Var {
        self.push(Op::Input, values)
    }

    /// `W x + b` for the layer whose parameters are `{layer}.weight` and
    /// `{layer}.bias`.
    pub fn linear(&mut self, params: &ParamStore, layer: &str, x: Var) -> Result<Var, NnError> {
        let w = params.id(&format!("{layer}.weight"))?;
        let b = params.id(&format!("{layer}.bias"))?;
        self.linear_ids(params, w, b, x)
    }

    pub fn linear_ids(&mut self, params: &ParamStore, w: ParamId, b: ParamId, x: Var) -> Result<Var, NnError> {
        let wt = params.value(w);
        let bt = params.value(b);
        let [rows, cols] = match wt.shape() {
            [r, c] => [*r, *c],
            other => {
                return Err(NnError::ShapeMismatch {
                    op: "linear",
                    expected: vec![0, 0],
                    found: other.to_vec(),
                })
            }
        };
        let xv = self.value(x);
        if xv.len() != cols {
            return Err(mismatch("linear", cols, xv.len()));
        }
        if bt.len() != rows {
            return Err(mismatch("linear bias", rows, bt.len()));
        }
        let wd = wt.data();
        let y: Vec<f64> = (0..rows)
            .map(|r| {
                let row = &wd[r * cols..(r + 1) * cols];
                row.iter().zip(xv).map(|(a, b)| a * b).sum::<f64>() + bt.data()[r]
            })
            .collect();
        Ok(self.push(Op::Linear { w, b, x }, y))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let y = self.value(x).iter().map(|&v| v.max(0.0)).collect();
        self.push(Op::Relu(x), y)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let y = self.value(x).iter().map(|&v| sigmoid(v)).collect();
        self.push(Op::Sigmoid(x), y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.len() != bv.len() {
            return Err(mismatch("mul", av.len(), bv.len()));
        }
        let y = av.iter().zip(bv).map(|(x, y)| x * y).collect();
        Ok(self.push(Op::Mul(a, b), y))
    }

    /// Elementwise mean of one or more equal-length vectors.
    pub fn mean(&mut self, xs: &[Var]) -> Result<Var, NnError> {
        let first = xs.first().ok_or_else(|| mismatch("mean", 1, 0))?;
        let n = self.value(*first).len();
        let mut y = vec![0.0; n];
        for &x in xs {
            let v = self.value(x);
            if v.len() != n {
                return Err(mismatch("mean", n, v.len()));
            }
            y.iter_mut().zip(v).for_each(|(a, b)| *a += b);
        }
        let k = xs.len() as f64;
        y.iter_mut().for_each(|a| *a /= k);
        Ok(self.push(Op::Mean(xs.to_vec()), y))
    }

    pub fn concat(&mut self, a: Var, b: Var) -> Var {
        let mut y = self.value(a).to_vec();
        y.extend_from_slice(self.value(b));
        self.push(Op::Concat(a, b), y)
    }

    /// Binary cross entropy of a probability `p` (length 1) against a 0/1
    /// label, with `p` clamped to `[BCE_CLAMP, 1 - BCE_CLAMP]`.
    pub fn bce(&mut self, p: Var, label: f64) -> Result<Var, NnError> {
        let raw = self.scalar(p)?;
        let q = raw.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
        let clamped = q != raw;
        let loss = -(label * q.ln() + (1.0 - label) * (1.0 - q).ln());
        Ok(self.push(Op::Bce { p, label, clamped }, vec![loss]))
    }

    pub fn backward(&self, loss: Var, params: &mut ParamStore) -> Result<(), NnError> {
        self.backward_scaled(loss, 1.0, params)
    }

    /// Accumulates `seed * d loss / d theta` into the parameter gradients.
    /// Gradients add to whatever is already stored, so several tapes can
    /// contribute to one update.
    pub fn backward_scaled(&self, loss: Var, seed: f64, params: &mut ParamStore) -> Result<(), NnError> {
        self.scalar(loss)?;
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![seed]);
        let acc = |grads: &mut Vec<Option<Vec<f64>>>, v: Var, g: &[f64]| {
            let slot = grads[v.0].get_or_insert_with(|| vec![0.0; g.len()]);
            slot.iter_mut().zip(g).for_each(|(a, b)| *a += b);
        };
        // a pass counts as a gradient even when nothing reaches a parameter
        params.mark_grad();
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            match &self.ops[i] {
                Op::Input => {}
                Op::Linear { w, b, x } => {
                    let xv = self.value(*x);
                    let cols = xv.len();
                    {
                        let gw = params.grad_mut(*w).data_mut();
                        for (r, gr) in g.iter().enumerate() {
                            if *gr == 0.0 {
                                continue;
                            }
                            let row = &mut gw[r * cols..(r + 1) * cols];
                            row.iter_mut().zip(xv).for_each(|(a, xk)| *a += gr * xk);
                        }
                    }
                    params
                        .grad_mut(*b)
                        .data_mut()
                        .iter_mut()
                        .zip(&g)
                        .for_each(|(a, gr)| *a += gr);
                    let wd = params.value(*w).data();
                    let mut gx = vec![0.0; cols];
                    for (r, gr) in g.iter().enumerate() {
                        if *gr == 0.0 {
                            continue;
                        }
                        let row = &wd[r * cols..(r + 1) * cols];
                        gx.iter_mut().zip(row).for_each(|(a, wk)| *a += gr * wk);
                    }
                    acc(&mut grads, *x, &gx);
                }
                Op::Relu(x) => {
                    let gx: Vec<f64> = self
                        .value(*x)
                        .iter()
                        .zip(&g)
                        .map(|(&v, &gv)| if v > 0.0 { gv } else { 0.0 })
                        .collect();
                    acc(&mut grads, *x, &gx);
                }
                Op::Sigmoid(x) => {
                    let gx: Vec<f64> = self.values[i]
                        .iter()
                        .zip(&g)
                        .map(|(&y, &gv)| gv * y * (1.0 - y))
                        .collect();
                    acc(&mut grads, *x, &gx);
                }
                Op::Mul(a, b) => {
                    let ga: Vec<f64> = self.value(*b).iter().zip(&g).map(|(x, gv)| x * gv).collect();
                    let gb: Vec<f64> = self.value(*a).iter().zip(&g).map(|(x, gv)| x * gv).collect();
                    acc(&mut grads, *a, &ga);
                    acc(&mut grads, *b, &gb);
                }
                Op::Mean(xs) => {
                    let k = xs.len() as f64;
                    let gx: Vec<f64> = g.iter().map(|v| v / k).collect();
                    for &x in xs {
                        acc(&mut grads, x, &gx);
                    }
                }
                Op::Concat(a, b) => {
                    let na = self.value(*a).len();
                    acc(&mut grads, *a, &g[..na]);
                    acc(&mut grads, *b, &g[na..]);
                }
                Op::Bce { p, label, clamped } => {
                    if !clamped {
                        let q = self.value(*p)[0];
                        let d = -label / q + (1.0 - label) / (1.0 - q);
                        acc(&mut grads, *p, &[g[0] * d]);
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
