use ndarray::{s, Array2, Axis, Zip};

use super::kernels::{col2im, im2col, ConvGeometry};
use super::{Activation, ConvSpec, Real, SeqTensor};
use crate::error::{MggError, Result};

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub(super) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

pub(super) enum Op<F> {
    Leaf,
    Conv { input: Var, weight: Var, bias: Var, geom: ConvGeometry, cols: Array2<F> },
    Deconv { input: Var, weight: Var, bias: Var, geom: ConvGeometry },
    MaxPool { input: Var, argmax: Vec<usize> },
    Relu(Var),
    Sigmoid(Var),
    Add(Var, Var),
    Mul(Var, Var),
    Scale(Var, F),
    MatMul(Var, Var),
    AddRow(Var, Var),
    GroupDot { a: Var, b: Var, group: usize },
    Flatten(Var),
    ConcatRows(Vec<Var>),
    Sum(Var),
    Bce { pred: Var, target: Array2<F>, weight: Array2<F>, norm: F, eps: F },
    SmoothL1 { pred: Var, target: Array2<F>, weight: Array2<F>, norm: F },
}

struct Node<F> {
    tensor: SeqTensor<F>,
    op: Op<F>,
}

/// Operation tape. Nodes are appended in construction order, so every
/// node's parents precede it and the graph is acyclic by construction.
pub struct Graph<F> {
    nodes: Vec<Node<F>>,
}

impl<F: Real> Default for Graph<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Real> Graph<F> {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Constant leaf; never receives a gradient.
    pub fn input(&mut self, data: Array2<F>) -> Result<Var> {
        self.leaf(data, false)
    }

    /// Learnable leaf.
    pub fn param(&mut self, data: Array2<F>) -> Result<Var> {
        self.leaf(data, true)
    }

    pub fn leaf(&mut self, data: Array2<F>, requires_grad: bool) -> Result<Var> {
        let tensor = SeqTensor::new(data, requires_grad)?;
        self.nodes.push(Node { tensor, op: Op::Leaf });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn tensor(&self, v: Var) -> &SeqTensor<F> {
        &self.nodes[v.0].tensor
    }

    pub fn value(&self, v: Var) -> &Array2<F> {
        self.nodes[v.0].tensor.data()
    }

    pub fn grad(&self, v: Var) -> Option<&Array2<F>> {
        self.nodes[v.0].tensor.grad()
    }

    /// Value of a 1x1 node.
    pub fn scalar(&self, v: Var) -> F {
        self.value(v)[[0, 0]]
    }

    pub(super) fn push(&mut self, data: Array2<F>, op: Op<F>, parents: &[Var]) -> Result<Var> {
        let requires_grad = parents.iter().any(|p| self.tensor(*p).requires_grad());
        let tensor = SeqTensor::new(data, requires_grad)?;
        self.nodes.push(Node { tensor, op });
        Ok(Var(self.nodes.len() - 1))
    }

    fn dim(&self, v: Var) -> (usize, usize) {
        self.value(v).dim()
    }

    /// Temporal convolution (cross-correlation) with `weight` shaped
    /// `filters x (kernel * in_channels)` in tap-major order and `bias`
    /// shaped `1 x filters`, followed by `spec.activation`.
    pub fn conv1d(&mut self, input: Var, spec: &ConvSpec, weight: Var, bias: Var) -> Result<Var> {
        spec.validate()?;
        let (time, c_in) = self.dim(input);
        let want_w = spec.weight_shape(c_in);
        if self.dim(weight) != want_w {
            return Err(MggError::shape(
                "conv1d",
                format!("weight is {:?}, expected {:?} for {c_in} input channels", self.dim(weight), want_w),
            ));
        }
        if self.dim(bias) != (1, spec.filters) {
            return Err(MggError::shape(
                "conv1d",
                format!("bias is {:?}, expected (1, {})", self.dim(bias), spec.filters),
            ));
        }
        let geom = ConvGeometry::conv(time, spec.kernel, spec.stride, spec.padding)?;
        let cols = im2col(self.value(input).view(), &geom);
        let mut out = cols.dot(&self.value(weight).t());
        out += self.value(bias);
        let conv = self.push(out, Op::Conv { input, weight, bias, geom, cols }, &[input, weight, bias])?;
        self.activate(conv, spec.activation)
    }

    /// Transposed temporal convolution upscaling time by `spec.stride`.
    /// `weight` is `in_channels x (kernel * filters)`: the same layout a
    /// stride-`spec.stride` [`Graph::conv1d`] from `filters` to
    /// `in_channels` channels would use, so the two are adjoint.
    pub fn deconv1d(&mut self, input: Var, spec: &ConvSpec, weight: Var, bias: Var) -> Result<Var> {
        spec.validate()?;
        let (time, c_in) = self.dim(input);
        let want_w = (c_in, spec.kernel * spec.filters);
        if self.dim(weight) != want_w {
            return Err(MggError::shape(
                "deconv1d",
                format!("weight is {:?}, expected {:?}", self.dim(weight), want_w),
            ));
        }
        if self.dim(bias) != (1, spec.filters) {
            return Err(MggError::shape(
                "deconv1d",
                format!("bias is {:?}, expected (1, {})", self.dim(bias), spec.filters),
            ));
        }
        let geom = ConvGeometry::deconv(time, spec.kernel, spec.stride)?;
        let cols = self.value(input).dot(self.value(weight));
        let mut out = col2im(cols.view(), &geom, spec.filters);
        out += self.value(bias);
        let node = self.push(out, Op::Deconv { input, weight, bias, geom }, &[input, weight, bias])?;
        self.activate(node, spec.activation)
    }

    pub fn activate(&mut self, v: Var, act: Activation) -> Result<Var> {
        match act {
            Activation::Relu => self.relu(v),
            Activation::Sigmoid => self.sigmoid(v),
            Activation::None => Ok(v),
        }
    }

    /// Per-channel max over windows; ties resolve to the earliest frame.
    pub fn maxpool1d(&mut self, input: Var, window: usize, stride: usize) -> Result<Var> {
        let (time, c) = self.dim(input);
        if window == 0 || stride == 0 {
            return Err(MggError::Invalid("maxpool window and stride must be >= 1".into()));
        }
        if window > time {
            return Err(MggError::shape("maxpool1d", format!("window {window} exceeds time {time}")));
        }
        let out_len = (time - window) / stride + 1;
        let x = self.value(input);
        let mut out = Array2::<F>::zeros((out_len, c));
        let mut argmax = vec![0usize; out_len * c];
        for t in 0..out_len {
            let start = t * stride;
            for ch in 0..c {
                let mut best = start;
                for k in start + 1..start + window {
                    if x[[k, ch]] > x[[best, ch]] {
                        best = k;
                    }
                }
                out[[t, ch]] = x[[best, ch]];
                argmax[t * c + ch] = best;
            }
        }
        self.push(out, Op::MaxPool { input, argmax }, &[input])
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).mapv(|x| if x > F::zero() { x } else { F::zero() });
        self.push(out, Op::Relu(a), &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).mapv(sigmoid);
        self.push(out, Op::Sigmoid(a), &[a])
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.dim(a) != self.dim(b) {
            return Err(MggError::shape(op, format!("{:?} vs {:?}", self.dim(a), self.dim(b))));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let out = self.value(a) + self.value(b);
        self.push(out, Op::Add(a, b), &[a, b])
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let out = self.value(a) * self.value(b);
        self.push(out, Op::Mul(a, b), &[a, b])
    }

    pub fn scale(&mut self, a: Var, k: F) -> Result<Var> {
        let out = self.value(a) * k;
        self.push(out, Op::Scale(a, k), &[a])
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (n, k) = self.dim(a);
        let (k2, _) = self.dim(b);
        if k != k2 {
            return Err(MggError::shape("matmul", format!("{:?} x {:?}", (n, k), self.dim(b))));
        }
        let out = self.value(a).dot(self.value(b));
        self.push(out, Op::MatMul(a, b), &[a, b])
    }

    /// Adds a `1 x c` row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (_, c) = self.dim(a);
        if self.dim(row) != (1, c) {
            return Err(MggError::shape("add_row", format!("row {:?} for {c} channels", self.dim(row))));
        }
        let out = self.value(a) + self.value(row);
        self.push(out, Op::AddRow(a, row), &[a, row])
    }

    /// `out[n, i] = sum_r a[n, i*group + r] * b[n, i*group + r]`.
    pub fn group_dot(&mut self, a: Var, b: Var, group: usize) -> Result<Var> {
        self.same_shape("group_dot", a, b)?;
        let (n, c) = self.dim(a);
        if group == 0 || c % group != 0 {
            return Err(MggError::shape("group_dot", format!("{c} channels not divisible by group {group}")));
        }
        let (av, bv) = (self.value(a), self.value(b));
        let mut out = Array2::<F>::zeros((n, c / group));
        for t in 0..n {
            let (ar, br) = (av.row(t), bv.row(t));
            for i in 0..c / group {
                let mut acc = F::zero();
                for r in i * group..(i + 1) * group {
                    acc += ar[r] * br[r];
                }
                out[[t, i]] = acc;
            }
        }
        self.push(out, Op::GroupDot { a, b, group }, &[a, b])
    }

    /// Row-major flatten to a `(rows * cols) x 1` column.
    pub fn flatten(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a);
        let out = Array2::from_shape_vec((v.len(), 1), v.iter().copied().collect())
            .expect("flatten length is consistent");
        self.push(out, Op::Flatten(a), &[a])
    }

    /// Stack along time. All parts must share a channel count.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let Some(first) = parts.first() else {
            return Err(MggError::Invalid("concat_rows of nothing".into()));
        };
        let c = self.dim(*first).1;
        if let Some(bad) = parts.iter().find(|p| self.dim(**p).1 != c) {
            return Err(MggError::shape("concat_rows", format!("{:?} vs {c} channels", self.dim(*bad))));
        }
        let views: Vec<_> = parts.iter().map(|p| self.value(*p).view()).collect();
        let out = ndarray::concatenate(Axis(0), &views).expect("channel counts checked");
        self.push(out, Op::ConcatRows(parts.to_vec()), parts)
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let out = Array2::from_elem((1, 1), self.value(a).sum());
        self.push(out, Op::Sum(a), &[a])
    }

    /// Reverse accumulation from a scalar node. Every node that depends on a
    /// learnable leaf receives a gradient; fan-out contributions are summed.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        let (rows, cols) = self.dim(loss);
        if (rows, cols) != (1, 1) {
            return Err(MggError::NonScalarSeed { rows, cols });
        }
        for node in &mut self.nodes {
            node.tensor.clear_grad();
        }
        let mut grads: Vec<Option<Array2<F>>> = (0..self.nodes.len()).map(|_| None).collect();
        if !self.tensor(loss).requires_grad() {
            return Ok(());
        }
        grads[loss.0] = Some(Array2::from_elem((1, 1), F::one()));

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            self.nodes[i].tensor.set_grad(g);
        }
        Ok(())
    }

    fn propagate(&self, i: usize, g: &Array2<F>, grads: &mut [Option<Array2<F>>]) {
        let nodes = &self.nodes;
        let wants = |v: Var| nodes[v.0].tensor.requires_grad();
        let mut acc = |v: Var, contrib: Array2<F>| {
            if !nodes[v.0].tensor.requires_grad() {
                return;
            }
            match &mut grads[v.0] {
                Some(existing) => *existing += &contrib,
                slot @ None => *slot = Some(contrib),
            }
        };
        let y = nodes[i].tensor.data();

        match &nodes[i].op {
            Op::Leaf => {}
            Op::Conv { input, weight, bias, geom, cols } => {
                if wants(*weight) {
                    acc(*weight, g.t().dot(cols));
                }
                if wants(*bias) {
                    acc(*bias, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                }
                if wants(*input) {
                    let w = self.value(*weight);
                    let dcols = g.dot(w);
                    acc(*input, col2im(dcols.view(), geom, self.dim(*input).1));
                }
            }
            Op::Deconv { input, weight, bias, geom } => {
                let gcols = im2col(g.view(), geom);
                if wants(*weight) {
                    acc(*weight, self.value(*input).t().dot(&gcols));
                }
                if wants(*bias) {
                    acc(*bias, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                }
                if wants(*input) {
                    acc(*input, gcols.dot(&self.value(*weight).t()));
                }
            }
            Op::MaxPool { input, argmax } => {
                let (time, c) = self.dim(*input);
                let mut dx = Array2::<F>::zeros((time, c));
                for ((t, ch), gv) in g.indexed_iter() {
                    dx[[argmax[t * c + ch], ch]] += *gv;
                }
                acc(*input, dx);
            }
            Op::Relu(a) => {
                let mut dx = g.clone();
                Zip::from(&mut dx).and(y).for_each(|d, &yv| {
                    if yv <= F::zero() {
                        *d = F::zero();
                    }
                });
                acc(*a, dx);
            }
            Op::Sigmoid(a) => {
                let mut dx = g.clone();
                Zip::from(&mut dx).and(y).for_each(|d, &yv| *d *= yv * (F::one() - yv));
                acc(*a, dx);
            }
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.clone());
            }
            Op::Mul(a, b) => {
                if wants(*a) {
                    acc(*a, g * self.value(*b));
                }
                if wants(*b) {
                    acc(*b, g * self.value(*a));
                }
            }
            Op::Scale(a, k) => acc(*a, g * *k),
            Op::MatMul(a, b) => {
                if wants(*a) {
                    acc(*a, g.dot(&self.value(*b).t()));
                }
                if wants(*b) {
                    acc(*b, self.value(*a).t().dot(g));
                }
            }
            Op::AddRow(a, row) => {
                acc(*a, g.clone());
                if wants(*row) {
                    acc(*row, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                }
            }
            Op::GroupDot { a, b, group } => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let expand = |other: &Array2<F>| {
                    let mut d = other.clone();
                    for ((t, col), v) in d.indexed_iter_mut() {
                        *v *= g[[t, col / group]];
                    }
                    d
                };
                if wants(*a) {
                    acc(*a, expand(bv));
                }
                if wants(*b) {
                    acc(*b, expand(av));
                }
            }
            Op::Flatten(a) => {
                let shape = self.dim(*a);
                let dx = Array2::from_shape_vec(shape, g.iter().copied().collect())
                    .expect("flatten gradient length is consistent");
                acc(*a, dx);
            }
            Op::ConcatRows(parts) => {
                let mut start = 0;
                for p in parts {
                    let len = self.dim(*p).0;
                    acc(*p, g.slice(s![start..start + len, ..]).to_owned());
                    start += len;
                }
            }
            Op::Sum(a) => {
                acc(*a, Array2::from_elem(self.dim(*a), g[[0, 0]]));
            }
            Op::Bce { pred, target, weight, norm, eps } => {
                let p = self.value(*pred);
                let scale = g[[0, 0]] / *norm;
                let one = F::one();
                let mut dx = Array2::<F>::zeros(p.dim());
                Zip::from(&mut dx).and(p).and(target).and(weight).for_each(|d, &pv, &t, &w| {
                    if pv > *eps && pv < one - *eps {
                        *d = -scale * w * (t / pv - (one - t) / (one - pv));
                    }
                });
                acc(*pred, dx);
            }
            Op::SmoothL1 { pred, target, weight, norm } => {
                let p = self.value(*pred);
                let scale = g[[0, 0]] / *norm;
                let mut dx = Array2::<F>::zeros(p.dim());
                Zip::from(&mut dx).and(p).and(target).and(weight).for_each(|d, &pv, &t, &w| {
                    let r = pv - t;
                    let dr = if r.abs() < F::one() { r } else { r.signum() };
                    *d = scale * w * dr;
                });
                acc(*pred, dx);
            }
        }
    }
}

pub(crate) fn sigmoid<F: Real>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqgrad::{Activation, ConvSpec};
    use ndarray::array;

    fn col(values: &[f64]) -> Array2<f64> {
        Array2::from_shape_vec((values.len(), 1), values.to_vec()).unwrap()
    }

    #[test]
    fn identity_kernel_conv() {
        let mut g = Graph::<f64>::new();
        let x = g.input(col(&[1.0, -2.0, 3.0, 4.0])).unwrap();
        let w = g.param(array![[0.0, 1.0, 0.0]]).unwrap();
        let b = g.param(array![[0.0]]).unwrap();
        let y = g.conv1d(x, &ConvSpec::new(1, 3, Activation::None), w, b).unwrap();
        assert_eq!(g.value(y), &col(&[1.0, -2.0, 3.0, 4.0]));
    }

    #[test]
    fn stride_two_halves_length() {
        let mut g = Graph::<f64>::new();
        let x = g.input(Array2::ones((8, 2))).unwrap();
        let w = g.param(Array2::ones((3, 6))).unwrap();
        let b = g.param(Array2::zeros((1, 3))).unwrap();
        let spec = ConvSpec::new(3, 3, Activation::Relu).with_stride(2);
        let y = g.conv1d(x, &spec, w, b).unwrap();
        assert_eq!(g.value(y).dim(), (4, 3));
    }

    #[test]
    fn conv_rejects_bad_weight_shape() {
        let mut g = Graph::<f64>::new();
        let x = g.input(Array2::ones((8, 2))).unwrap();
        let w = g.param(Array2::ones((3, 5))).unwrap();
        let b = g.param(Array2::zeros((1, 3))).unwrap();
        let err = g.conv1d(x, &ConvSpec::new(3, 3, Activation::None), w, b).unwrap_err();
        assert!(matches!(err, MggError::Shape { op: "conv1d", .. }), "{err}");
    }

    #[test]
    fn maxpool_values_and_ties() {
        let mut g = Graph::<f64>::new();
        let x = g.param(col(&[1.0, 3.0, 2.0, 5.0])).unwrap();
        let y = g.maxpool1d(x, 2, 2).unwrap();
        assert_eq!(g.value(y), &col(&[3.0, 5.0]));

        let c = g.param(col(&[7.0; 6])).unwrap();
        let y = g.maxpool1d(c, 2, 2).unwrap();
        assert_eq!(g.value(y), &col(&[7.0; 3]));
        let s = g.sum(y).unwrap();
        g.backward(s).unwrap();
        assert_eq!(g.grad(c).unwrap(), &col(&[1.0, 0.0, 1.0, 0.0, 1.0, 0.0]));
    }

    #[test]
    fn maxpool_window_too_large() {
        let mut g = Graph::<f64>::new();
        let x = g.input(col(&[1.0])).unwrap();
        assert!(g.maxpool1d(x, 2, 2).is_err());
    }

    #[test]
    fn deconv_doubles_length() {
        let mut g = Graph::<f64>::new();
        let x = g.input(Array2::ones((4, 2))).unwrap();
        let w = g.param(Array2::ones((2, 3 * 5))).unwrap();
        let b = g.param(Array2::zeros((1, 5))).unwrap();
        let spec = ConvSpec::new(5, 3, Activation::None).with_stride(2);
        let y = g.deconv1d(x, &spec, w, b).unwrap();
        assert_eq!(g.value(y).dim(), (8, 5));
    }

    #[test]
    fn sum_and_square_gradients() {
        let mut g = Graph::<f64>::new();
        let x = g.param(array![[1.0, -2.0], [0.5, 3.0]]).unwrap();
        let s = g.sum(x).unwrap();
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).unwrap(), &Array2::<f64>::ones((2, 2)));

        let sq = g.mul(x, x).unwrap();
        let s = g.sum(sq).unwrap();
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).unwrap(), &(g.value(x) * 2.0));
    }

    #[test]
    fn non_scalar_seed_rejected() {
        let mut g = Graph::<f64>::new();
        let x = g.param(Array2::ones((2, 1))).unwrap();
        assert!(matches!(g.backward(x), Err(MggError::NonScalarSeed { rows: 2, cols: 1 })));
    }

    #[test]
    fn repeated_evaluation_is_bit_identical() {
        let run = || {
            let mut g = Graph::<f32>::new();
            let x = g.input(Array2::from_shape_fn((16, 3), |(t, c)| ((t * 3 + c) as f32).sin())).unwrap();
            let w = g.param(Array2::from_shape_fn((4, 9), |(i, j)| ((i * 9 + j) as f32 * 0.37).cos())).unwrap();
            let b = g.param(Array2::from_elem((1, 4), 0.1)).unwrap();
            let y = g.conv1d(x, &ConvSpec::new(4, 3, Activation::Sigmoid), w, b).unwrap();
            let s = g.sum(y).unwrap();
            g.backward(s).unwrap();
            (g.value(y).clone(), g.grad(w).unwrap().clone())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn same_padding_preserves_length() {
        for time in 1..12 {
            let mut g = Graph::<f64>::new();
            let x = g.input(Array2::ones((time, 1))).unwrap();
            let w = g.param(Array2::ones((1, 5))).unwrap();
            let b = g.param(Array2::zeros((1, 1))).unwrap();
            let y = g.conv1d(x, &ConvSpec::new(1, 5, Activation::None), w, b).unwrap();
            assert_eq!(g.value(y).nrows(), time);
        }
    }
}
