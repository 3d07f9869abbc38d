//! Reverse-mode differentiation over a linear tape of matrix ops.
//!
//! Nodes are appended in evaluation order, so every node only refers to
//! earlier nodes and a single reverse sweep yields all gradients.

use crate::error::{Error, Result};
use crate::nn::tensor::{gemm, Tensor2};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Const,
    Param(usize),
    MatMul(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Tanh(Var),
    Exp(Var),
    Square(Var),
    Clamp(Var, f64, f64),
    Min(Var, Var),
    Max(Var, Var),
    MaskedLogSoftmax(Var, Vec<bool>),
    PickColumn(Var, Vec<usize>),
    SumCols(Var),
    Sum(Var),
    Mean(Var),
    SliceReshape(Var, usize),
}

#[derive(Clone, Debug)]
struct Node {
    value: Tensor2,
    op: Op,
}

#[derive(Clone, Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients from one backward sweep.
#[derive(Clone, Debug)]
pub struct Gradients {
    nodes: Vec<Option<Tensor2>>,
    params: Vec<Option<Tensor2>>,
}

impl Gradients {
    /// Gradient of the loss with respect to a node, if the node is reachable.
    pub fn wrt(&self, v: Var) -> Option<&Tensor2> {
        self.nodes.get(v.0).and_then(Option::as_ref)
    }

    /// Gradient accumulated for parameter `id` over every leaf that referenced it.
    pub fn param(&self, id: usize) -> Option<&Tensor2> {
        self.params.get(id).and_then(Option::as_ref)
    }

    /// Dense gradient list aligned with `params`; unreachable parameters get zeros.
    pub fn dense_params(&self, params: &[Tensor2]) -> Vec<Tensor2> {
        params
            .iter()
            .enumerate()
            .map(|(i, p)| {
                self.param(i)
                    .cloned()
                    .unwrap_or_else(|| Tensor2::zeros(p.rows(), p.cols()))
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

    pub fn value(&self, v: Var) -> &Tensor2 {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor2, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(Error::dim(op, format!("{sa:?}"), format!("{sb:?}")));
        }
        Ok(())
    }

    pub fn constant(&mut self, value: Tensor2) -> Var {
        self.push(value, Op::Const)
    }

    /// Leaf bound to parameter slot `id`; gradients for it are summed under that id.
    pub fn param(&mut self, id: usize, value: &Tensor2) -> Var {
        self.push(value.clone(), Op::Param(id))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).matmul(self.value(b))?;
        Ok(self.push(v, Op::MatMul(a, b)))
    }

    /// Adds a 1 x cols bias row to every row of `x`.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (_, xc) = self.shape(x);
        if self.shape(bias) != (1, xc) {
            return Err(Error::dim(
                "add_bias",
                format!("(1, {xc})"),
                format!("{:?}", self.shape(bias)),
            ));
        }
        let mut v = self.value(x).clone();
        v.add_row_broadcast(self.value(bias).data());
        Ok(self.push(v, Op::AddBias(x, bias)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x + y);
        Ok(self.push(v, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x - y);
        Ok(self.push(v, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x * y);
        Ok(self.push(v, Op::Mul(a, b)))
    }

    pub fn scale(&mut self, x: Var, k: f64) -> Var {
        let v = self.value(x).map(|e| e * k);
        self.push(v, Op::Scale(x, k))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let v = self.value(x).map(f64::tanh);
        self.push(v, Op::Tanh(x))
    }

    pub fn exp(&mut self, x: Var) -> Var {
        let v = self.value(x).map(f64::exp);
        self.push(v, Op::Exp(x))
    }

    pub fn square(&mut self, x: Var) -> Var {
        let v = self.value(x).map(|e| e * e);
        self.push(v, Op::Square(x))
    }

    /// Elementwise clamp; the gradient passes only where `lo < x < hi`.
    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Var {
        let v = self.value(x).map(|e| e.clamp(lo, hi));
        self.push(v, Op::Clamp(x, lo, hi))
    }

    /// Elementwise minimum; ties route the gradient to `a`.
    pub fn min(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("min", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| if y < x { y } else { x });
        Ok(self.push(v, Op::Min(a, b)))
    }

    /// Elementwise maximum; ties route the gradient to `a`.
    pub fn max(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("max", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| if y > x { y } else { x });
        Ok(self.push(v, Op::Max(a, b)))
    }

    /// Row-wise log-softmax over the entries where `mask` is true.
    ///
    /// Masked entries are written as 0 and receive no gradient. Every row
    /// must have at least one legal entry.
    pub fn masked_log_softmax(&mut self, x: Var, mask: &[bool]) -> Result<Var> {
        let (rows, cols) = self.shape(x);
        if mask.len() != rows * cols {
            return Err(Error::dim("masked_log_softmax", rows * cols, mask.len()));
        }
        let out = masked_log_softmax(self.value(x), mask)?;
        Ok(self.push(out, Op::MaskedLogSoftmax(x, mask.to_vec())))
    }

    /// Selects column `idx[r]` from each row `r`, giving a rows x 1 column.
    pub fn pick_column(&mut self, x: Var, idx: &[usize]) -> Result<Var> {
        let (rows, cols) = self.shape(x);
        if idx.len() != rows {
            return Err(Error::dim("pick_column", rows, idx.len()));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= cols) {
            return Err(Error::dim("pick_column", format!("index < {cols}"), bad));
        }
        let src = self.value(x);
        let data = idx.iter().enumerate().map(|(r, &c)| src.get(r, c)).collect::<Vec<_>>();
        Ok(self.push(Tensor2::column(&data), Op::PickColumn(x, idx.to_vec())))
    }

    /// Sums each row, giving a rows x 1 column.
    pub fn sum_cols(&mut self, x: Var) -> Var {
        let src = self.value(x);
        let data = (0..src.rows()).map(|r| src.row_slice(r).iter().sum()).collect::<Vec<f64>>();
        self.push(Tensor2::column(&data), Op::SumCols(x))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).sum();
        self.push(Tensor2::scalar(s), Op::Sum(x))
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let m = if t.is_empty() { 0.0 } else { t.sum() / t.len() as f64 };
        self.push(Tensor2::scalar(m), Op::Mean(x))
    }

    /// Reinterprets `rows * cols` consecutive entries of `x`, starting at
    /// flat `offset`, as a new row-major matrix.
    pub fn slice_reshape(&mut self, x: Var, offset: usize, rows: usize, cols: usize) -> Result<Var> {
        let src = self.value(x);
        if offset + rows * cols > src.len() {
            return Err(Error::dim(
                "slice_reshape",
                format!("at least {} entries", offset + rows * cols),
                src.len(),
            ));
        }
        let data = src.data()[offset..offset + rows * cols].to_vec();
        let v = Tensor2::new(rows, cols, data)?;
        Ok(self.push(v, Op::SliceReshape(x, offset)))
    }

    /// Reverse sweep from a scalar `loss`. Accumulators start at zero on every call.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.shape(loss) != (1, 1) {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, node {} has shape {:?}",
                loss.0,
                self.shape(loss)
            )));
        }
        let mut grads: Vec<Option<Tensor2>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor2::scalar(1.0));
        let mut params: Vec<Option<Tensor2>> = Vec::new();

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Const => {}
                Op::Param(id) => {
                    if params.len() <= *id {
                        params.resize(*id + 1, None);
                    }
                    accumulate(&mut params[*id], &g);
                }
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let mut ga = Tensor2::zeros(av.rows(), av.cols());
                    gemm(&g, false, bv, true, &mut ga, 0.0);
                    let mut gb = Tensor2::zeros(bv.rows(), bv.cols());
                    gemm(av, true, &g, false, &mut gb, 0.0);
                    accumulate_owned(&mut grads[a.0], ga);
                    accumulate_owned(&mut grads[b.0], gb);
                }
                Op::AddBias(x, b) => {
                    let mut gb = Tensor2::zeros(1, g.cols());
                    for r in 0..g.rows() {
                        for (acc, v) in gb.data_mut().iter_mut().zip(g.row_slice(r)) {
                            *acc += v;
                        }
                    }
                    accumulate(&mut grads[x.0], &g);
                    accumulate_owned(&mut grads[b.0], gb);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads[a.0], &g);
                    accumulate(&mut grads[b.0], &g);
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads[a.0], &g);
                    accumulate_owned(&mut grads[b.0], g.map(|v| -v));
                }
                Op::Mul(a, b) => {
                    let ga = g.zip_map(self.value(*b), |x, y| x * y);
                    let gb = g.zip_map(self.value(*a), |x, y| x * y);
                    accumulate_owned(&mut grads[a.0], ga);
                    accumulate_owned(&mut grads[b.0], gb);
                }
                Op::Scale(x, k) => {
                    let k = *k;
                    accumulate_owned(&mut grads[x.0], g.map(|v| v * k));
                }
                Op::Tanh(x) => {
                    let gx = g.zip_map(&node.value, |gv, y| gv * (1.0 - y * y));
                    accumulate_owned(&mut grads[x.0], gx);
                }
                Op::Exp(x) => {
                    let gx = g.zip_map(&node.value, |gv, y| gv * y);
                    accumulate_owned(&mut grads[x.0], gx);
                }
                Op::Square(x) => {
                    let gx = g.zip_map(self.value(*x), |gv, xv| 2.0 * gv * xv);
                    accumulate_owned(&mut grads[x.0], gx);
                }
                Op::Clamp(x, lo, hi) => {
                    let (lo, hi) = (*lo, *hi);
                    let gx = g.zip_map(self.value(*x), |gv, xv| if xv > lo && xv < hi { gv } else { 0.0 });
                    accumulate_owned(&mut grads[x.0], gx);
                }
                Op::Min(a, b) | Op::Max(a, b) => {
                    let is_min = matches!(node.op, Op::Min(..));
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let mut ga = Tensor2::zeros(g.rows(), g.cols());
                    let mut gb = Tensor2::zeros(g.rows(), g.cols());
                    for k in 0..g.len() {
                        let (x, y) = (av.data()[k], bv.data()[k]);
                        let pick_b = if is_min { y < x } else { y > x };
                        if pick_b {
                            gb.data_mut()[k] = g.data()[k];
                        } else {
                            ga.data_mut()[k] = g.data()[k];
                        }
                    }
                    accumulate_owned(&mut grads[a.0], ga);
                    accumulate_owned(&mut grads[b.0], gb);
                }
                Op::MaskedLogSoftmax(x, mask) => {
                    // d logp_j / d x_k = [j==k] - p_k, restricted to legal entries.
                    let y = &node.value;
                    let mut gx = Tensor2::zeros(y.rows(), y.cols());
                    for r in 0..y.rows() {
                        let base = r * y.cols();
                        let mut gsum = 0.0;
                        for c in 0..y.cols() {
                            if mask[base + c] {
                                gsum += g.data()[base + c];
                            }
                        }
                        for c in 0..y.cols() {
                            if mask[base + c] {
                                let p = y.data()[base + c].exp();
                                gx.data_mut()[base + c] = g.data()[base + c] - p * gsum;
                            }
                        }
                    }
                    accumulate_owned(&mut grads[x.0], gx);
                }
                Op::PickColumn(x, idx) => {
                    let (rows, cols) = self.shape(*x);
                    let mut gx = Tensor2::zeros(rows, cols);
                    for (r, &c) in idx.iter().enumerate() {
                        gx.set(r, c, g.data()[r]);
                    }
                    accumulate_owned(&mut grads[x.0], gx);
                }
                Op::SumCols(x) => {
                    let (rows, cols) = self.shape(*x);
                    let mut gx = Tensor2::zeros(rows, cols);
                    for r in 0..rows {
                        for c in 0..cols {
                            gx.set(r, c, g.data()[r]);
                        }
                    }
                    accumulate_owned(&mut grads[x.0], gx);
                }
                Op::Sum(x) => {
                    let (rows, cols) = self.shape(*x);
                    accumulate_owned(&mut grads[x.0], Tensor2::filled(rows, cols, g.data()[0]));
                }
                Op::Mean(x) => {
                    let (rows, cols) = self.shape(*x);
                    let n = (rows * cols).max(1) as f64;
                    accumulate_owned(&mut grads[x.0], Tensor2::filled(rows, cols, g.data()[0] / n));
                }
                Op::SliceReshape(x, offset) => {
                    let (rows, cols) = self.shape(*x);
                    let mut gx = Tensor2::zeros(rows, cols);
                    gx.data_mut()[*offset..*offset + g.len()].copy_from_slice(g.data());
                    accumulate_owned(&mut grads[x.0], gx);
                }
            }
            grads[i] = Some(g);
        }
        Ok(Gradients { nodes: grads, params })
    }
}

fn accumulate(slot: &mut Option<Tensor2>, g: &Tensor2) {
    match slot {
        Some(acc) => acc.add_assign(g),
        None => *slot = Some(g.clone()),
    }
}

fn accumulate_owned(slot: &mut Option<Tensor2>, g: Tensor2) {
    match slot {
        Some(acc) => acc.add_assign(&g),
        None => *slot = Some(g),
    }
}

/// Row-wise masked log-softmax outside of any tape.
pub fn masked_log_softmax(x: &Tensor2, mask: &[bool]) -> Result<Tensor2> {
    let (rows, cols) = x.shape();
    let mut out = Tensor2::zeros(rows, cols);
    for r in 0..rows {
        let base = r * cols;
        let legal = &mask[base..base + cols];
        let row = x.row_slice(r);
        let max = row
            .iter()
            .zip(legal)
            .filter(|(_, &m)| m)
            .map(|(&v, _)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::Contract(format!("row {r} has no legal entry")));
        }
        let lse = max
            + row
                .iter()
                .zip(legal)
                .filter(|(_, &m)| m)
                .map(|(&v, _)| (v - max).exp())
                .sum::<f64>()
                .ln();
        for c in 0..cols {
            if legal[c] {
                out.set(r, c, row[c] - lse);
            }
        }
    }
    Ok(out)
}
