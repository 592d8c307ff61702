//! Tape-based reverse-mode differentiation over [`Tensor`]s.
//!
//! A [`Tape`] records every operation of one forward pass. Values are computed
//! eagerly when an op is pushed; [`Tape::backward`] then walks the tape in
//! reverse and accumulates parameter gradients into a [`ModelParams`] store.
//! A tape supports exactly one backward pass.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

static NEXT_TAPE_ID: AtomicU64 = AtomicU64::new(1);

/// Handle to a value recorded on a tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var {
    tape: u64,
    index: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub usize);

#[derive(Clone, Debug, PartialEq)]
struct ParamEntry {
    name: String,
    value: Tensor,
    grad: Tensor,
}

/// Named parameter tensors with one gradient slot each.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelParams {
    entries: Vec<ParamEntry>,
}

impl ModelParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        let grad = Tensor::zeros(value.shape());
        self.entries.push(ParamEntry {
            name: name.into(),
            value,
            grad,
        });
        ParamId(self.entries.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.entries.len()).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].name
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.entries
            .iter()
            .position(|e| e.name == name)
            .map(ParamId)
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.entries[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.entries[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &Tensor {
        &self.entries[id.0].grad
    }

    /// Value and gradient of one entry, the value mutable.
    pub fn value_and_grad_mut(&mut self, id: ParamId) -> (&mut Tensor, &Tensor) {
        let e = &mut self.entries[id.0];
        (&mut e.value, &e.grad)
    }

    pub fn zero_grads(&mut self) {
        for e in &mut self.entries {
            e.grad.data_mut().iter_mut().for_each(|g| *g = 0.0);
        }
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.entries.iter().map(|e| e.value.numel()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Sigmoid,
    Relu,
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
            Activation::Relu => x.max(0.0),
        }
    }

    // derivative expressed via input x and output y
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    Param(ParamId),
    Conv1d {
        input: usize,
        kernels: usize,
        bias: usize,
    },
    /// `argmax[i]` is the flat input index selected for output element `i`.
    MaxPool {
        input: usize,
        argmax: Vec<usize>,
    },
    Act {
        input: usize,
        kind: Activation,
    },
    Dense {
        input: usize,
        weights: usize,
        bias: usize,
    },
    Cosine {
        a: usize,
        b: usize,
    },
    Add {
        a: usize,
        b: usize,
    },
    Mul {
        a: usize,
        b: usize,
    },
    Concat {
        a: usize,
        b: usize,
    },
    Slice {
        input: usize,
        start: usize,
    },
    FitCols {
        input: usize,
    },
    MatMulNt {
        a: usize,
        b: usize,
    },
    Scale {
        input: usize,
        factor: f64,
    },
    SoftmaxRows {
        input: usize,
    },
    Mean {
        inputs: Vec<usize>,
    },
    Sum {
        input: usize,
    },
    Contrastive {
        a: usize,
        b: usize,
        same: bool,
        margin: f64,
    },
    Bce {
        score: usize,
        same: bool,
    },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Gradients of one backward pass, indexed by tape node.
#[derive(Debug)]
pub struct Gradients {
    tape: u64,
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    /// Gradient of the loss with respect to `v`; `None` if `v` did not influence it.
    pub fn wrt(&self, v: Var) -> Option<&[f64]> {
        if v.tape != self.tape {
            return None;
        }
        self.grads.get(v.index)?.as_deref()
    }
}

#[derive(Debug)]
pub struct Tape {
    id: u64,
    nodes: Vec<Node>,
    consumed: bool,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            id: NEXT_TAPE_ID.fetch_add(1, Ordering::Relaxed),
            nodes: Vec::new(),
            consumed: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn idx(&self, v: Var) -> Result<usize> {
        if v.tape != self.id || v.index >= self.nodes.len() {
            return Err(Error::Detached);
        }
        Ok(v.index)
    }

    pub fn value(&self, v: Var) -> Result<&Tensor> {
        Ok(&self.nodes[self.idx(v)?].value)
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var {
            tape: self.id,
            index: self.nodes.len() - 1,
        }
    }

    /// Records a constant input; it receives no parameter gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Records a parameter tensor whose gradient flows back into `params[id]`.
    pub fn param(&mut self, params: &ModelParams, id: ParamId) -> Var {
        self.push(params.value(id).clone(), Op::Param(id))
    }

    /// Valid 1-D convolution: `input` is `T x Cin`, `kernels` is `K x Cin x Cout`.
    pub fn conv1d(&mut self, input: Var, kernels: Var, bias: Var) -> Result<Var> {
        let (xi, ki, bi) = (self.idx(input)?, self.idx(kernels)?, self.idx(bias)?);
        let out = conv1d_forward(
            &self.nodes[xi].value,
            &self.nodes[ki].value,
            &self.nodes[bi].value,
        )?;
        Ok(self.push(
            out,
            Op::Conv1d {
                input: xi,
                kernels: ki,
                bias: bi,
            },
        ))
    }

    /// Non-overlapping max pooling over time; trailing `T mod window` frames are dropped.
    pub fn maxpool1d(&mut self, input: Var, window: usize) -> Result<Var> {
        let xi = self.idx(input)?;
        let x = &self.nodes[xi].value;
        if x.rank() != 2 {
            return Err(Error::shape(
                "maxpool1d",
                format!("expected T x C, got {:?}", x.shape()),
            ));
        }
        if window == 0 {
            return Err(Error::Invalid("maxpool1d window must be >= 1".into()));
        }
        let (t, c) = (x.rows(), x.cols());
        if t < window {
            return Err(Error::TooShort {
                op: "maxpool1d",
                len: t,
                min: window,
            });
        }
        let out_t = t / window;
        let mut data = Vec::with_capacity(out_t * c);
        let mut argmax = Vec::with_capacity(out_t * c);
        let xd = x.data();
        for o in 0..out_t {
            for ch in 0..c {
                let mut best = o * window * c + ch;
                for j in 1..window {
                    let cand = (o * window + j) * c + ch;
                    if xd[cand] > xd[best] {
                        best = cand;
                    }
                }
                data.push(xd[best]);
                argmax.push(best);
            }
        }
        let out = Tensor::new(vec![out_t, c], data)?;
        Ok(self.push(out, Op::MaxPool { input: xi, argmax }))
    }

    /// Max over the time axis of a `T x C` input; ties go to the earliest frame.
    pub fn global_maxpool(&mut self, input: Var) -> Result<Var> {
        let xi = self.idx(input)?;
        let x = &self.nodes[xi].value;
        if x.rank() != 2 {
            return Err(Error::shape(
                "global_maxpool",
                format!("expected T x C, got {:?}", x.shape()),
            ));
        }
        let (t, c) = (x.rows(), x.cols());
        let xd = x.data();
        let mut data = Vec::with_capacity(c);
        let mut argmax = Vec::with_capacity(c);
        for ch in 0..c {
            let mut best = ch;
            for step in 1..t {
                let cand = step * c + ch;
                if xd[cand] > xd[best] {
                    best = cand;
                }
            }
            data.push(xd[best]);
            argmax.push(best);
        }
        Ok(self.push(Tensor::vector(data), Op::MaxPool { input: xi, argmax }))
    }

    pub fn activation(&mut self, input: Var, kind: Activation) -> Result<Var> {
        let xi = self.idx(input)?;
        let x = &self.nodes[xi].value;
        let data = x.data().iter().map(|&v| kind.apply(v)).collect();
        let out = Tensor::new(x.shape().to_vec(), data)?;
        Ok(self.push(out, Op::Act { input: xi, kind }))
    }

    pub fn tanh(&mut self, input: Var) -> Result<Var> {
        self.activation(input, Activation::Tanh)
    }

    pub fn sigmoid(&mut self, input: Var) -> Result<Var> {
        self.activation(input, Activation::Sigmoid)
    }

    pub fn relu(&mut self, input: Var) -> Result<Var> {
        self.activation(input, Activation::Relu)
    }

    /// Affine map `bias + input · weights` for a vector input of length `n` and `n x m` weights.
    pub fn dense(&mut self, input: Var, weights: Var, bias: Var) -> Result<Var> {
        let (xi, wi, bi) = (self.idx(input)?, self.idx(weights)?, self.idx(bias)?);
        let out = dense_forward(
            &self.nodes[xi].value,
            &self.nodes[wi].value,
            &self.nodes[bi].value,
        )?;
        Ok(self.push(
            out,
            Op::Dense {
                input: xi,
                weights: wi,
                bias: bi,
            },
        ))
    }

    pub fn cosine(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ai, bi) = (self.idx(a)?, self.idx(b)?);
        let c = cosine_forward(self.nodes[ai].value.data(), self.nodes[bi].value.data())?;
        Ok(self.push(Tensor::scalar(c), Op::Cosine { a: ai, b: bi }))
    }

    fn same_shape(&self, op: &'static str, a: usize, b: usize) -> Result<()> {
        let (sa, sb) = (self.nodes[a].value.shape(), self.nodes[b].value.shape());
        if sa != sb {
            return Err(Error::shape(op, format!("{sa:?} vs {sb:?}")));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ai, bi) = (self.idx(a)?, self.idx(b)?);
        self.same_shape("add", ai, bi)?;
        let va = &self.nodes[ai].value;
        let data = va
            .data()
            .iter()
            .zip(self.nodes[bi].value.data())
            .map(|(x, y)| x + y)
            .collect();
        let out = Tensor::new(va.shape().to_vec(), data)?;
        Ok(self.push(out, Op::Add { a: ai, b: bi }))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ai, bi) = (self.idx(a)?, self.idx(b)?);
        self.same_shape("mul", ai, bi)?;
        let va = &self.nodes[ai].value;
        let data = va
            .data()
            .iter()
            .zip(self.nodes[bi].value.data())
            .map(|(x, y)| x * y)
            .collect();
        let out = Tensor::new(va.shape().to_vec(), data)?;
        Ok(self.push(out, Op::Mul { a: ai, b: bi }))
    }

    /// Concatenates two vectors.
    pub fn concat(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ai, bi) = (self.idx(a)?, self.idx(b)?);
        let (va, vb) = (&self.nodes[ai].value, &self.nodes[bi].value);
        if va.rank() != 1 || vb.rank() != 1 {
            return Err(Error::shape(
                "concat",
                format!(
                    "expected vectors, got {:?} and {:?}",
                    va.shape(),
                    vb.shape()
                ),
            ));
        }
        let mut data = va.data().to_vec();
        data.extend_from_slice(vb.data());
        Ok(self.push(Tensor::vector(data), Op::Concat { a: ai, b: bi }))
    }

    /// Contiguous `len` elements of the flattened input starting at `start`, as a vector.
    /// For a `T x C` matrix, `slice(m, t * C, C)` is row `t`.
    pub fn slice(&mut self, input: Var, start: usize, len: usize) -> Result<Var> {
        let xi = self.idx(input)?;
        let x = &self.nodes[xi].value;
        if len == 0 || start + len > x.numel() {
            return Err(Error::shape(
                "slice",
                format!("[{start}, {}) out of {} elements", start + len, x.numel()),
            ));
        }
        let out = Tensor::vector(x.data()[start..start + len].to_vec());
        Ok(self.push(out, Op::Slice { input: xi, start }))
    }

    pub fn row(&mut self, input: Var, index: usize) -> Result<Var> {
        let x = self.value(input)?;
        if x.rank() != 2 || index >= x.rows() {
            return Err(Error::shape(
                "row",
                format!("row {index} of {:?}", x.shape()),
            ));
        }
        let c = x.cols();
        self.slice(input, index * c, c)
    }

    /// Truncates or right-pads with zeros the columns of a `T x C` matrix to `cols`.
    pub fn fit_cols(&mut self, input: Var, cols: usize) -> Result<Var> {
        let xi = self.idx(input)?;
        let x = &self.nodes[xi].value;
        if x.rank() != 2 || cols == 0 {
            return Err(Error::shape(
                "fit_cols",
                format!("{:?} -> {cols} cols", x.shape()),
            ));
        }
        let (t, c) = (x.rows(), x.cols());
        let mut data = vec![0.0; t * cols];
        for r in 0..t {
            let n = c.min(cols);
            data[r * cols..r * cols + n].copy_from_slice(&x.row(r)[..n]);
        }
        let out = Tensor::new(vec![t, cols], data)?;
        Ok(self.push(out, Op::FitCols { input: xi }))
    }

    /// `a · bᵀ` for `a: T1 x C`, `b: T2 x C`.
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ai, bi) = (self.idx(a)?, self.idx(b)?);
        let (va, vb) = (&self.nodes[ai].value, &self.nodes[bi].value);
        if va.rank() != 2 || vb.rank() != 2 || va.cols() != vb.cols() {
            return Err(Error::shape(
                "matmul_nt",
                format!("{:?} x {:?}ᵀ", va.shape(), vb.shape()),
            ));
        }
        let (t1, t2, c) = (va.rows(), vb.rows(), va.cols());
        let mut data = Vec::with_capacity(t1 * t2);
        for i in 0..t1 {
            let ra = va.row(i);
            for j in 0..t2 {
                data.push(dot(ra, vb.row(j)));
            }
        }
        debug_assert!(c > 0);
        let out = Tensor::new(vec![t1, t2], data)?;
        Ok(self.push(out, Op::MatMulNt { a: ai, b: bi }))
    }

    pub fn scale(&mut self, input: Var, factor: f64) -> Result<Var> {
        let xi = self.idx(input)?;
        let x = &self.nodes[xi].value;
        let data = x.data().iter().map(|v| v * factor).collect();
        let out = Tensor::new(x.shape().to_vec(), data)?;
        Ok(self.push(out, Op::Scale { input: xi, factor }))
    }

    /// Row-wise softmax of a `T x C` matrix.
    pub fn softmax_rows(&mut self, input: Var) -> Result<Var> {
        let xi = self.idx(input)?;
        let x = &self.nodes[xi].value;
        if x.rank() != 2 {
            return Err(Error::shape("softmax_rows", format!("{:?}", x.shape())));
        }
        let mut data = Vec::with_capacity(x.numel());
        for r in 0..x.rows() {
            let row = x.row(r);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
            let total: f64 = exps.iter().sum();
            data.extend(exps.into_iter().map(|e| e / total));
        }
        let out = Tensor::new(x.shape().to_vec(), data)?;
        Ok(self.push(out, Op::SoftmaxRows { input: xi }))
    }

    /// Elementwise mean of equally shaped inputs. A single input is returned bit-exact.
    pub fn mean(&mut self, inputs: &[Var]) -> Result<Var> {
        let first = *inputs
            .first()
            .ok_or_else(|| Error::Invalid("mean of zero tensors".into()))?;
        let idxs = inputs
            .iter()
            .map(|&v| self.idx(v))
            .collect::<Result<Vec<_>>>()?;
        for &i in &idxs[1..] {
            self.same_shape("mean", idxs[0], i)?;
        }
        let mut acc = self.value(first)?.clone();
        for &i in &idxs[1..] {
            for (a, b) in acc.data_mut().iter_mut().zip(self.nodes[i].value.data()) {
                *a += b;
            }
        }
        let k = idxs.len() as f64;
        acc.data_mut().iter_mut().for_each(|a| *a /= k);
        Ok(self.push(acc, Op::Mean { inputs: idxs }))
    }

    pub fn sum(&mut self, input: Var) -> Result<Var> {
        let xi = self.idx(input)?;
        let s = self.nodes[xi].value.data().iter().sum();
        Ok(self.push(Tensor::scalar(s), Op::Sum { input: xi }))
    }

    /// Contrastive loss `y·d² + (1−y)·max(0, m−d)²` with `d = ‖a − b‖₂`.
    pub fn contrastive(&mut self, a: Var, b: Var, same: bool, margin: f64) -> Result<Var> {
        let (ai, bi) = (self.idx(a)?, self.idx(b)?);
        self.same_shape("contrastive", ai, bi)?;
        let loss = contrastive_value(
            self.nodes[ai].value.data(),
            self.nodes[bi].value.data(),
            same,
            margin,
        );
        Ok(self.push(
            Tensor::scalar(loss),
            Op::Contrastive {
                a: ai,
                b: bi,
                same,
                margin,
            },
        ))
    }

    /// Binary cross-entropy of a probability-valued scalar.
    pub fn bce(&mut self, score: Var, same: bool) -> Result<Var> {
        let si = self.idx(score)?;
        let s = &self.nodes[si].value;
        if s.numel() != 1 {
            return Err(Error::shape(
                "bce",
                format!("expected scalar, got {:?}", s.shape()),
            ));
        }
        let loss = bce_value(s.item(), same)?;
        Ok(self.push(Tensor::scalar(loss), Op::Bce { score: si, same }))
    }

    /// Runs reverse-mode differentiation from the scalar `loss` and adds every
    /// parameter gradient into `params`. May be called once per tape.
    pub fn backward(&mut self, loss: Var, params: &mut ModelParams) -> Result<Gradients> {
        let li = self.idx(loss)?;
        if self.consumed {
            return Err(Error::BackwardConsumed);
        }
        let lv = &self.nodes[li].value;
        if lv.numel() != 1 {
            return Err(Error::NonScalarLoss(lv.shape().to_vec()));
        }
        for node in &self.nodes[..=li] {
            if let Op::Param(id) = node.op {
                if id.0 >= params.len() || params.value(id).shape() != node.value.shape() {
                    return Err(Error::shape(
                        "backward",
                        format!("parameter slot {} does not match the store", id.0),
                    ));
                }
            }
        }
        self.consumed = true;

        let mut grads: Vec<Option<Vec<f64>>> = vec![None; li + 1];
        grads[li] = Some(vec![1.0]);
        for i in (0..=li).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads, params);
            grads[i] = Some(g);
        }
        Ok(Gradients {
            tape: self.id,
            grads,
        })
    }

    fn propagate(
        &self,
        i: usize,
        g: &[f64],
        grads: &mut [Option<Vec<f64>>],
        params: &mut ModelParams,
    ) {
        let node = &self.nodes[i];
        let val = |j: usize| &self.nodes[j].value;
        fn acc(grads: &mut [Option<Vec<f64>>], j: usize, n: usize) -> &mut Vec<f64> {
            grads[j].get_or_insert_with(|| vec![0.0; n])
        }

        match &node.op {
            Op::Leaf => {}
            Op::Param(id) => {
                let pg = &mut params.entries[id.0].grad;
                for (p, d) in pg.data_mut().iter_mut().zip(g) {
                    *p += d;
                }
            }
            Op::Conv1d {
                input,
                kernels,
                bias,
            } => {
                let (x, k) = (val(*input), val(*kernels));
                let (t_out, cin, cout, kw) =
                    (node.value.rows(), x.cols(), k.shape()[2], k.shape()[0]);
                {
                    let gb = acc(grads, *bias, cout);
                    for t in 0..t_out {
                        for o in 0..cout {
                            gb[o] += g[t * cout + o];
                        }
                    }
                }
                {
                    let gk = acc(grads, *kernels, k.numel());
                    let xd = x.data();
                    for t in 0..t_out {
                        for j in 0..kw {
                            for c in 0..cin {
                                let xv = xd[(t + j) * cin + c];
                                let base = (j * cin + c) * cout;
                                for o in 0..cout {
                                    gk[base + o] += g[t * cout + o] * xv;
                                }
                            }
                        }
                    }
                }
                {
                    let gx = acc(grads, *input, x.numel());
                    let kd = k.data();
                    for t in 0..t_out {
                        for j in 0..kw {
                            for c in 0..cin {
                                let base = (j * cin + c) * cout;
                                let mut s = 0.0;
                                for o in 0..cout {
                                    s += g[t * cout + o] * kd[base + o];
                                }
                                gx[(t + j) * cin + c] += s;
                            }
                        }
                    }
                }
            }
            Op::MaxPool { input, argmax } => {
                let gx = acc(grads, *input, val(*input).numel());
                for (o, &src) in argmax.iter().enumerate() {
                    gx[src] += g[o];
                }
            }
            Op::Act { input, kind } => {
                let x = val(*input);
                let y = &node.value;
                let gx = acc(grads, *input, x.numel());
                for ((gxv, (&xv, &yv)), &gv) in
                    gx.iter_mut().zip(x.data().iter().zip(y.data())).zip(g)
                {
                    *gxv += gv * kind.derivative(xv, yv);
                }
            }
            Op::Dense {
                input,
                weights,
                bias,
            } => {
                let (x, w) = (val(*input), val(*weights));
                let (n, m) = (x.numel(), node.value.numel());
                {
                    let gb = acc(grads, *bias, m);
                    for (b, d) in gb.iter_mut().zip(g) {
                        *b += d;
                    }
                }
                {
                    let gw = acc(grads, *weights, n * m);
                    for (r, &xv) in x.data().iter().enumerate() {
                        for c in 0..m {
                            gw[r * m + c] += xv * g[c];
                        }
                    }
                }
                {
                    let gx = acc(grads, *input, n);
                    let wd = w.data();
                    for (r, gxv) in gx.iter_mut().enumerate() {
                        *gxv += dot(&wd[r * m..(r + 1) * m], g);
                    }
                }
            }
            Op::Cosine { a, b } => {
                let (va, vb) = (val(*a).data(), val(*b).data());
                let (na, nb) = (norm(va), norm(vb));
                let c = node.value.item();
                let gs = g[0];
                {
                    let ga = acc(grads, *a, va.len());
                    for (k, gav) in ga.iter_mut().enumerate() {
                        *gav += gs * (vb[k] / (na * nb) - c * va[k] / (na * na));
                    }
                }
                {
                    let gb = acc(grads, *b, vb.len());
                    for (k, gbv) in gb.iter_mut().enumerate() {
                        *gbv += gs * (va[k] / (na * nb) - c * vb[k] / (nb * nb));
                    }
                }
            }
            Op::Add { a, b } => {
                for j in [*a, *b] {
                    let gj = acc(grads, j, g.len());
                    for (x, d) in gj.iter_mut().zip(g) {
                        *x += d;
                    }
                }
            }
            Op::Mul { a, b } => {
                let (va, vb) = (val(*a).data(), val(*b).data());
                {
                    let ga = acc(grads, *a, g.len());
                    for k in 0..g.len() {
                        ga[k] += g[k] * vb[k];
                    }
                }
                {
                    let gb = acc(grads, *b, g.len());
                    for k in 0..g.len() {
                        gb[k] += g[k] * va[k];
                    }
                }
            }
            Op::Concat { a, b } => {
                let na = val(*a).numel();
                let nb = val(*b).numel();
                {
                    let ga = acc(grads, *a, na);
                    for k in 0..na {
                        ga[k] += g[k];
                    }
                }
                {
                    let gb = acc(grads, *b, nb);
                    for k in 0..nb {
                        gb[k] += g[na + k];
                    }
                }
            }
            Op::Slice { input, start } => {
                let gx = acc(grads, *input, val(*input).numel());
                for (k, d) in g.iter().enumerate() {
                    gx[start + k] += d;
                }
            }
            Op::FitCols { input } => {
                let x = val(*input);
                let (t, c) = (x.rows(), x.cols());
                let cols = node.value.cols();
                let gx = acc(grads, *input, x.numel());
                for r in 0..t {
                    for k in 0..c.min(cols) {
                        gx[r * c + k] += g[r * cols + k];
                    }
                }
            }
            Op::MatMulNt { a, b } => {
                let (va, vb) = (val(*a), val(*b));
                let (t1, t2, c) = (va.rows(), vb.rows(), va.cols());
                {
                    let ga = acc(grads, *a, va.numel());
                    for i2 in 0..t1 {
                        for j in 0..t2 {
                            let gv = g[i2 * t2 + j];
                            let rb = vb.row(j);
                            for k in 0..c {
                                ga[i2 * c + k] += gv * rb[k];
                            }
                        }
                    }
                }
                {
                    let gb = acc(grads, *b, vb.numel());
                    for i2 in 0..t1 {
                        let ra = va.row(i2);
                        for j in 0..t2 {
                            let gv = g[i2 * t2 + j];
                            for k in 0..c {
                                gb[j * c + k] += gv * ra[k];
                            }
                        }
                    }
                }
            }
            Op::Scale { input, factor } => {
                let gx = acc(grads, *input, g.len());
                for (x, d) in gx.iter_mut().zip(g) {
                    *x += d * factor;
                }
            }
            Op::SoftmaxRows { input } => {
                let y = &node.value;
                let c = y.cols();
                let gx = acc(grads, *input, y.numel());
                for r in 0..y.rows() {
                    let yr = y.row(r);
                    let gr = &g[r * c..(r + 1) * c];
                    let inner = dot(yr, gr);
                    for k in 0..c {
                        gx[r * c + k] += yr[k] * (gr[k] - inner);
                    }
                }
            }
            Op::Mean { inputs } => {
                let k = inputs.len() as f64;
                for &j in inputs {
                    let gj = acc(grads, j, g.len());
                    for (x, d) in gj.iter_mut().zip(g) {
                        *x += d / k;
                    }
                }
            }
            Op::Sum { input } => {
                let gx = acc(grads, *input, val(*input).numel());
                gx.iter_mut().for_each(|x| *x += g[0]);
            }
            Op::Contrastive { a, b, same, margin } => {
                let (va, vb) = (val(*a).data(), val(*b).data());
                let diff: Vec<f64> = va.iter().zip(vb).map(|(x, y)| x - y).collect();
                let d = norm(&diff);
                // dL/d(a - b)
                let coeff = if *same {
                    2.0
                } else if d < *margin && d > 0.0 {
                    -2.0 * (margin - d) / d
                } else {
                    0.0
                };
                let gs = g[0] * coeff;
                {
                    let ga = acc(grads, *a, diff.len());
                    for (x, dv) in ga.iter_mut().zip(&diff) {
                        *x += gs * dv;
                    }
                }
                {
                    let gb = acc(grads, *b, diff.len());
                    for (x, dv) in gb.iter_mut().zip(&diff) {
                        *x -= gs * dv;
                    }
                }
            }
            Op::Bce { score, same } => {
                let s = val(*score).item();
                let d = if *same { -1.0 / s } else { 1.0 / (1.0 - s) };
                let gx = acc(grads, *score, 1);
                gx[0] += g[0] * d;
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn conv1d_forward(x: &Tensor, k: &Tensor, b: &Tensor) -> Result<Tensor> {
    if x.rank() != 2 || k.rank() != 3 || b.rank() != 1 {
        return Err(Error::shape(
            "conv1d",
            format!(
                "input {:?}, kernels {:?}, bias {:?}",
                x.shape(),
                k.shape(),
                b.shape()
            ),
        ));
    }
    let (t, cin) = (x.rows(), x.cols());
    let (kw, kcin, cout) = (k.shape()[0], k.shape()[1], k.shape()[2]);
    if kcin != cin || b.numel() != cout {
        return Err(Error::shape(
            "conv1d",
            format!(
                "input channels {cin}, kernel {:?}, bias {}",
                k.shape(),
                b.numel()
            ),
        ));
    }
    if t < kw {
        return Err(Error::TooShort {
            op: "conv1d",
            len: t,
            min: kw,
        });
    }
    let t_out = t - kw + 1;
    let (xd, kd, bd) = (x.data(), k.data(), b.data());
    let mut out = Vec::with_capacity(t_out * cout);
    for step in 0..t_out {
        let mut acc = bd.to_vec();
        for j in 0..kw {
            for c in 0..cin {
                let xv = xd[(step + j) * cin + c];
                let base = (j * cin + c) * cout;
                for (o, a) in acc.iter_mut().enumerate() {
                    *a += xv * kd[base + o];
                }
            }
        }
        out.extend(acc);
    }
    Tensor::new(vec![t_out, cout], out)
}

fn dense_forward(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    if x.rank() != 1
        || w.rank() != 2
        || b.rank() != 1
        || w.rows() != x.numel()
        || w.cols() != b.numel()
    {
        return Err(Error::shape(
            "dense",
            format!(
                "input {:?}, weights {:?}, bias {:?}",
                x.shape(),
                w.shape(),
                b.shape()
            ),
        ));
    }
    let m = b.numel();
    let mut out = b.data().to_vec();
    for (r, &xv) in x.data().iter().enumerate() {
        let wr = &w.data()[r * m..(r + 1) * m];
        for (o, wv) in out.iter_mut().zip(wr) {
            *o += xv * wv;
        }
    }
    Ok(Tensor::vector(out))
}

/// Cosine similarity of two equally long vectors.
pub fn cosine_forward(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape(
            "cosine",
            format!("{} vs {}", a.len(), b.len()),
        ));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm("cosine"));
    }
    Ok(dot(a, b) / (na * nb))
}

pub fn contrastive_value(a: &[f64], b: &[f64], same: bool, margin: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    if same {
        d2
    } else {
        let gap = (margin - d2.sqrt()).max(0.0);
        gap * gap
    }
}

pub fn bce_value(score: f64, same: bool) -> Result<f64> {
    if !(score > 0.0 && score < 1.0) {
        return Err(Error::Invalid(format!(
            "cross-entropy needs a score in (0, 1), got {score}"
        )));
    }
    Ok(if same {
        -score.ln()
    } else {
        -(1.0 - score).ln()
    })
}

/// Weights of one LSTM layer with gate columns ordered input, forget, cell, output.
#[derive(Clone, Copy, Debug)]
pub struct LstmVars {
    /// `(C + H) x 4H`, rows for the input features first, then the recurrent state.
    pub weights: Var,
    /// `4H`
    pub bias: Var,
    pub hidden: usize,
}

/// Runs an LSTM from zero state over the rows of a `T x C` input and returns the final hidden state.
pub fn lstm_sequence(tape: &mut Tape, input: Var, lstm: LstmVars) -> Result<Var> {
    let x = tape.value(input)?;
    if x.rank() != 2 {
        return Err(Error::shape("lstm", format!("input {:?}", x.shape())));
    }
    let (t, c, h) = (x.rows(), x.cols(), lstm.hidden);
    let w = tape.value(lstm.weights)?;
    if w.rank() != 2 || w.rows() != c + h || w.cols() != 4 * h {
        return Err(Error::shape(
            "lstm",
            format!("weights {:?} for input {c} and hidden {h}", w.shape()),
        ));
    }
    if tape.value(lstm.bias)?.numel() != 4 * h {
        return Err(Error::shape("lstm", "bias must have 4H entries"));
    }
    let mut hidden = tape.constant(Tensor::zeros(&[h]));
    let mut cell = tape.constant(Tensor::zeros(&[h]));
    for step in 0..t {
        let xt = tape.row(input, step)?;
        let joined = tape.concat(xt, hidden)?;
        let gates = tape.dense(joined, lstm.weights, lstm.bias)?;
        let i_pre = tape.slice(gates, 0, h)?;
        let f_pre = tape.slice(gates, h, h)?;
        let g_pre = tape.slice(gates, 2 * h, h)?;
        let o_pre = tape.slice(gates, 3 * h, h)?;
        let i_gate = tape.sigmoid(i_pre)?;
        let f_gate = tape.sigmoid(f_pre)?;
        let g_cand = tape.tanh(g_pre)?;
        let o_gate = tape.sigmoid(o_pre)?;
        let kept = tape.mul(f_gate, cell)?;
        let fresh = tape.mul(i_gate, g_cand)?;
        cell = tape.add(kept, fresh)?;
        let squashed = tape.tanh(cell)?;
        hidden = tape.mul(o_gate, squashed)?;
    }
    Ok(hidden)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
        let n = shape.iter().product();
        Tensor::new(
            shape.to_vec(),
            (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    /// Checks d(f)/d(input) against central differences, where `f` maps one
    /// input tensor through `build` to a scalar.
    fn check_input_grad(x: &Tensor, build: impl Fn(&mut Tape, Var) -> Var, tol: f64) {
        let mut tape = Tape::new();
        let xv = tape.constant(x.clone());
        let out = build(&mut tape, xv);
        let grads = tape.backward(out, &mut ModelParams::new()).unwrap();
        let analytic = grads.wrt(xv).unwrap().to_vec();
        let h = 1e-5;
        for i in 0..x.numel() {
            let eval = |delta: f64| {
                let mut xp = x.clone();
                xp.data_mut()[i] += delta;
                let mut t = Tape::new();
                let v = t.constant(xp);
                let o = build(&mut t, v);
                t.value(o).unwrap().item()
            };
            let numeric = (eval(h) - eval(-h)) / (2.0 * h);
            let a = analytic[i];
            let err = if a.abs().max(numeric.abs()) < 1e-6 {
                (a - numeric).abs()
            } else {
                (a - numeric).abs() / a.abs().max(numeric.abs())
            };
            assert!(err < tol, "element {i}: analytic {a}, numeric {numeric}");
        }
    }

    fn naive_conv(x: &Tensor, k: &Tensor, b: &Tensor) -> Vec<f64> {
        let (t, cin) = (x.rows(), x.cols());
        let (kw, cout) = (k.shape()[0], k.shape()[2]);
        let mut out = Vec::new();
        for step in 0..=(t - kw) {
            for o in 0..cout {
                let mut s = b.data()[o];
                for j in 0..kw {
                    for c in 0..cin {
                        s += x.data()[(step + j) * cin + c] * k.data()[(j * cin + c) * cout + o];
                    }
                }
                out.push(s);
            }
        }
        out
    }

    #[test]
    fn conv1d_zero_input_yields_bias_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::zeros(&[6, 3]));
        let k = tape.constant(rand_tensor(&mut rng, &[3, 3, 4]));
        let b = tape.constant(Tensor::vector(vec![0.5, -1.0, 2.0, 0.0]));
        let y = tape.conv1d(x, k, b).unwrap();
        let out = tape.value(y).unwrap();
        assert_eq!(out.shape(), &[4, 4]);
        for r in 0..4 {
            assert_eq!(out.row(r), &[0.5, -1.0, 2.0, 0.0]);
        }
    }

    #[test]
    fn conv1d_sum_kernel() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::new(vec![3, 1], vec![1.0, 2.0, 3.0]).unwrap());
        let k = tape.constant(Tensor::new(vec![3, 1, 1], vec![1.0; 3]).unwrap());
        let b = tape.constant(Tensor::vector(vec![0.0]));
        let y = tape.conv1d(x, k, b).unwrap();
        assert_eq!(tape.value(y).unwrap().data(), &[6.0]);
    }

    #[test]
    fn conv1d_matches_naive_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (xt, kt, bt) = (
            rand_tensor(&mut rng, &[8, 4]),
            rand_tensor(&mut rng, &[3, 4, 5]),
            rand_tensor(&mut rng, &[5]),
        );
        let mut tape = Tape::new();
        let (x, k, b) = (
            tape.constant(xt.clone()),
            tape.constant(kt.clone()),
            tape.constant(bt.clone()),
        );
        let y = tape.conv1d(x, k, b).unwrap();
        assert_eq!(tape.value(y).unwrap().shape(), &[6, 5]);
        assert_eq!(
            tape.value(y).unwrap().data(),
            naive_conv(&xt, &kt, &bt).as_slice()
        );
    }

    #[test]
    fn conv1d_rejects_short_and_mismatched() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::zeros(&[2, 1]));
        let k = tape.constant(Tensor::zeros(&[3, 1, 1]));
        let b = tape.constant(Tensor::zeros(&[1]));
        assert!(matches!(tape.conv1d(x, k, b), Err(Error::TooShort { .. })));
        let x2 = tape.constant(Tensor::zeros(&[5, 2]));
        assert!(matches!(tape.conv1d(x2, k, b), Err(Error::Shape { .. })));
    }

    #[test]
    fn maxpool_examples() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::new(vec![4, 1], vec![1.0, 3.0, 2.0, 5.0]).unwrap());
        let y = tape.maxpool1d(x, 2).unwrap();
        assert_eq!(tape.value(y).unwrap().data(), &[3.0, 5.0]);

        let c = tape.constant(Tensor::new(vec![5, 2], vec![0.25; 10]).unwrap());
        let y = tape.maxpool1d(c, 2).unwrap();
        assert_eq!(tape.value(y).unwrap().data(), &[0.25; 4]);

        let short = tape.constant(Tensor::zeros(&[1, 2]));
        assert!(tape.maxpool1d(short, 2).is_err());
    }

    #[test]
    fn maxpool_matches_naive_and_drops_remainder() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xt = rand_tensor(&mut rng, &[9, 3]);
        let mut tape = Tape::new();
        let x = tape.constant(xt.clone());
        let y = tape.maxpool1d(x, 2).unwrap();
        let out = tape.value(y).unwrap();
        assert_eq!(out.shape(), &[4, 3]);
        for o in 0..4 {
            for c in 0..3 {
                let naive = xt.row(2 * o)[c].max(xt.row(2 * o + 1)[c]);
                assert_eq!(out.row(o)[c], naive);
            }
        }
    }

    #[test]
    fn global_maxpool_examples() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::from_rows(&[vec![1.0, 9.0], vec![7.0, 2.0]]).unwrap());
        let y = tape.global_maxpool(x).unwrap();
        assert_eq!(tape.value(y).unwrap().data(), &[7.0, 9.0]);

        let single = tape.constant(Tensor::from_rows(&[vec![0.5, -2.0]]).unwrap());
        let y = tape.global_maxpool(single).unwrap();
        assert_eq!(tape.value(y).unwrap().data(), &[0.5, -2.0]);
    }

    #[test]
    fn global_maxpool_gradient_goes_to_first_argmax() {
        let mut tape = Tape::new();
        let x = tape.constant(
            Tensor::from_rows(&[vec![2.0, 1.0], vec![2.0, 3.0], vec![0.0, 3.0]]).unwrap(),
        );
        let y = tape.global_maxpool(x).unwrap();
        let s = tape.sum(y).unwrap();
        let g = tape.backward(s, &mut ModelParams::new()).unwrap();
        assert_eq!(g.wrt(x).unwrap(), &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn global_maxpool_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = rand_tensor(&mut rng, &[6, 4]);
        let w = rand_tensor(&mut rng, &[4]);
        check_input_grad(
            &x,
            |t, v| {
                let p = t.global_maxpool(v).unwrap();
                let wv = t.constant(w.clone());
                let m = t.mul(p, wv).unwrap();
                t.sum(m).unwrap()
            },
            1e-6,
        );
    }

    #[test]
    fn activation_values_and_symmetry() {
        assert_eq!(Activation::Tanh.apply(0.0), 0.0);
        assert_eq!(Activation::Sigmoid.apply(0.0), 0.5);
        assert_eq!(Activation::Relu.apply(-2.0), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x: f64 = rng.random_range(-5.0..5.0);
            assert_eq!(Activation::Tanh.apply(-x), -Activation::Tanh.apply(x));
        }
    }

    #[test]
    fn activation_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut x = rand_tensor(&mut rng, &[10]);
        // keep relu inputs away from the kink
        x.data_mut().iter_mut().for_each(|v| {
            if v.abs() < 0.01 {
                *v += 0.1
            }
        });
        let w = rand_tensor(&mut rng, &[10]);
        for kind in [Activation::Tanh, Activation::Sigmoid, Activation::Relu] {
            check_input_grad(
                &x,
                |t, v| {
                    let a = t.activation(v, kind).unwrap();
                    let wv = t.constant(w.clone());
                    let m = t.mul(a, wv).unwrap();
                    t.sum(m).unwrap()
                },
                1e-6,
            );
        }
    }

    #[test]
    fn dense_examples() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::vector(vec![1.0, -2.0, 3.0]));
        let mut eye = Tensor::zeros(&[3, 3]);
        for i in 0..3 {
            eye.data_mut()[i * 3 + i] = 1.0;
        }
        let w = tape.constant(eye);
        let b0 = tape.constant(Tensor::zeros(&[3]));
        let y = tape.dense(x, w, b0).unwrap();
        assert_eq!(tape.value(y).unwrap().data(), &[1.0, -2.0, 3.0]);

        let wz = tape.constant(Tensor::zeros(&[3, 2]));
        let b = tape.constant(Tensor::vector(vec![0.5, 4.0]));
        let y = tape.dense(x, wz, b).unwrap();
        assert_eq!(tape.value(y).unwrap().data(), &[0.5, 4.0]);

        let bad = tape.constant(Tensor::zeros(&[2, 2]));
        assert!(tape.dense(x, bad, b).is_err());
    }

    #[test]
    fn dense_matches_naive_matvec() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (xt, wt, bt) = (
            rand_tensor(&mut rng, &[5]),
            rand_tensor(&mut rng, &[5, 3]),
            rand_tensor(&mut rng, &[3]),
        );
        let mut tape = Tape::new();
        let (x, w, b) = (
            tape.constant(xt.clone()),
            tape.constant(wt.clone()),
            tape.constant(bt.clone()),
        );
        let y = tape.dense(x, w, b).unwrap();
        let out = tape.value(y).unwrap().data().to_vec();
        for m in 0..3 {
            let mut s = bt.data()[m];
            for n in 0..5 {
                s += xt.data()[n] * wt.data()[n * 3 + m];
            }
            assert!((out[m] - s).abs() < 1e-14);
        }
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_forward(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let v = [0.3, -1.2, 2.0];
        assert!((cosine_forward(&v, &v).unwrap() - 1.0).abs() < 1e-15);
        let a = [0.1, 0.7, -0.4];
        let b3: Vec<f64> = v.iter().map(|x| 3.0 * x).collect();
        let diff = cosine_forward(&a, &b3).unwrap() - cosine_forward(&a, &v).unwrap();
        assert!(diff.abs() < 1e-12);
        assert!(matches!(
            cosine_forward(&[0.0, 0.0], &[1.0, 1.0]),
            Err(Error::ZeroNorm(_))
        ));
    }

    #[test]
    fn cosine_and_softmax_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let x = rand_tensor(&mut rng, &[6]);
        let other = rand_tensor(&mut rng, &[6]);
        check_input_grad(
            &x,
            |t, v| {
                let o = t.constant(other.clone());
                t.cosine(v, o).unwrap()
            },
            1e-6,
        );
        let m = rand_tensor(&mut rng, &[3, 4]);
        let w = rand_tensor(&mut rng, &[3, 4]);
        check_input_grad(
            &m,
            |t, v| {
                let s = t.softmax_rows(v).unwrap();
                let wv = t.constant(w.clone());
                let p = t.mul(s, wv).unwrap();
                t.sum(p).unwrap()
            },
            1e-6,
        );
    }

    #[test]
    fn lstm_zero_weights_give_zero_state() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::new(vec![4, 3], vec![0.7; 12]).unwrap());
        let w = tape.constant(Tensor::zeros(&[3 + 5, 20]));
        let b = tape.constant(Tensor::zeros(&[20]));
        let h = lstm_sequence(
            &mut tape,
            x,
            LstmVars {
                weights: w,
                bias: b,
                hidden: 5,
            },
        )
        .unwrap();
        assert_eq!(tape.value(h).unwrap().data(), &[0.0; 5]);
    }

    #[test]
    fn lstm_single_step_matches_hand_computed_cell() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let (c, h) = (2, 3);
        let xt = rand_tensor(&mut rng, &[1, c]);
        let wt = rand_tensor(&mut rng, &[c + h, 4 * h]);
        let bt = rand_tensor(&mut rng, &[4 * h]);
        let mut tape = Tape::new();
        let (x, w, b) = (
            tape.constant(xt.clone()),
            tape.constant(wt.clone()),
            tape.constant(bt.clone()),
        );
        let out = lstm_sequence(
            &mut tape,
            x,
            LstmVars {
                weights: w,
                bias: b,
                hidden: h,
            },
        )
        .unwrap();
        // zero initial state: only input rows of the weights contribute
        let pre = |gate: usize, unit: usize| {
            let col = gate * h + unit;
            let mut s = bt.data()[col];
            for k in 0..c {
                s += xt.data()[k] * wt.data()[k * 4 * h + col];
            }
            s
        };
        for u in 0..h {
            let i = sigmoid(pre(0, u));
            let g = pre(2, u).tanh();
            let o = sigmoid(pre(3, u));
            let expected = o * (i * g).tanh();
            assert!((tape.value(out).unwrap().data()[u] - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn lstm_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let (c, h) = (3, 4);
        let wt = rand_tensor(&mut rng, &[c + h, 4 * h]);
        let mut params = ModelParams::new();
        let wid = params.add("w", wt);
        let bid = params.add("b", rand_tensor(&mut rng, &[4 * h]));
        let head = params.add("head", rand_tensor(&mut rng, &[h]));
        let x = rand_tensor(&mut rng, &[5, c]);

        let loss_of = |p: &ModelParams| -> (Tape, Var) {
            let mut t = Tape::new();
            let xv = t.constant(x.clone());
            let lv = LstmVars {
                weights: t.param(p, wid),
                bias: t.param(p, bid),
                hidden: h,
            };
            let hv = lstm_sequence(&mut t, xv, lv).unwrap();
            let hd = t.param(p, head);
            let m = t.mul(hv, hd).unwrap();
            let s = t.sum(m).unwrap();
            (t, s)
        };
        let (mut tape, loss) = loss_of(&params);
        tape.backward(loss, &mut params).unwrap();
        let eps = 1e-5;
        for id in [wid, bid, head] {
            for i in 0..params.value(id).numel() {
                let mut plus = params.clone();
                plus.value_mut(id).data_mut()[i] += eps;
                let mut minus = params.clone();
                minus.value_mut(id).data_mut()[i] -= eps;
                let (tp, lp) = loss_of(&plus);
                let (tm, lm) = loss_of(&minus);
                let numeric =
                    (tp.value(lp).unwrap().item() - tm.value(lm).unwrap().item()) / (2.0 * eps);
                let a = params.grad(id).data()[i];
                let scale = a.abs().max(numeric.abs());
                let err = if scale < 1e-6 {
                    (a - numeric).abs()
                } else {
                    (a - numeric).abs() / scale
                };
                assert!(err < 1e-4, "{} [{i}]: {a} vs {numeric}", params.name(id));
            }
        }
    }

    #[test]
    fn backward_of_sum_is_all_ones() {
        let mut params = ModelParams::new();
        let id = params.add("p", Tensor::vector(vec![0.3, -0.2, 5.0]));
        let mut tape = Tape::new();
        let p = tape.param(&params, id);
        let s = tape.sum(p).unwrap();
        tape.backward(s, &mut params).unwrap();
        assert_eq!(params.grad(id).data(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn backward_twice_is_an_error() {
        let mut params = ModelParams::new();
        let id = params.add("p", Tensor::vector(vec![1.0]));
        let mut tape = Tape::new();
        let p = tape.param(&params, id);
        let s = tape.sum(p).unwrap();
        tape.backward(s, &mut params).unwrap();
        assert!(matches!(
            tape.backward(s, &mut params),
            Err(Error::BackwardConsumed)
        ));
    }

    #[test]
    fn backward_on_foreign_variable_is_detached() {
        let mut a = Tape::new();
        let mut b = Tape::new();
        let v = b.constant(Tensor::scalar(1.0));
        assert!(matches!(
            a.backward(v, &mut ModelParams::new()),
            Err(Error::Detached)
        ));
        assert!(matches!(a.sum(v), Err(Error::Detached)));
    }

    #[test]
    fn contrastive_and_bce_values() {
        assert_eq!(contrastive_value(&[0.2, 0.1], &[0.2, 0.1], true, 1.0), 0.0);
        assert_eq!(contrastive_value(&[0.0, 0.0], &[3.0, 4.0], false, 1.0), 0.0);
        let l = contrastive_value(&[0.0], &[0.4], false, 1.0);
        assert!((l - 0.36).abs() < 1e-15);
        assert!((bce_value(0.5, true).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((bce_value(0.5, false).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(bce_value(1.0, true).is_err());
        assert!(bce_value(0.0, false).is_err());
    }

    #[test]
    fn attention_chain_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let q = rand_tensor(&mut rng, &[3, 4]);
        let s = rand_tensor(&mut rng, &[5, 4]);
        let w = rand_tensor(&mut rng, &[3, 6]);
        check_input_grad(
            &q,
            |t, v| {
                let sv = t.constant(s.clone());
                let a = t.matmul_nt(v, sv).unwrap();
                let a = t.scale(a, 0.5).unwrap();
                let a = t.softmax_rows(a).unwrap();
                let a = t.fit_cols(a, 6).unwrap();
                let wv = t.constant(w.clone());
                let m = t.mul(a, wv).unwrap();
                t.sum(m).unwrap()
            },
            1e-6,
        );
    }
}
