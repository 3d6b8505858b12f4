use std::cell::{Ref, RefCell};
use std::rc::Rc;

use super::{sigmoid, Tensor};
use crate::error::{Error, Result};

/// Sparse propagation matrix in row-compressed form. Entries of a row are
/// applied in stored order, which fixes the floating-point summation order.
#[derive(Debug, Clone, PartialEq)]
pub struct Sparse {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl Sparse {
    /// Builds from per-row `(col, value)` lists.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &rows {
            for &(c, v) in row {
                debug_assert!(c < cols);
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Sparse {
            rows: rows.len(),
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn to_dense(&self) -> Tensor {
        let mut t = Tensor::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                let cur = t.get(r, c);
                t.set(r, c, cur + v);
            }
        }
        t
    }

    fn apply(&self, x: &Tensor) -> Tensor {
        let mut out = Tensor::zeros(self.rows, x.cols());
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                out.add_scaled_row(r, x.row(c), v);
            }
        }
        out
    }

    fn apply_transpose(&self, g: &Tensor) -> Tensor {
        let mut out = Tensor::zeros(self.cols, g.cols());
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                out.add_scaled_row(c, g.row(r), v);
            }
        }
        out
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    Constant,
    MatMul(usize, usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    Sigmoid(usize),
    Tanh(usize),
    Relu(usize),
    SumRows(usize),
    MeanRows(usize),
    SumAll(usize),
    MeanAll(usize),
    ConcatCols(usize, usize),
    SelectRows(usize, Rc<[usize]>),
    ScaleRows(usize, Rc<[f64]>),
    Propagate(usize, Rc<Sparse>),
    Message {
        src: usize,
        row: usize,
        coef: f64,
    },
    Scatter {
        base: usize,
        messages: Vec<(usize, usize)>,
    },
    Element(usize, usize, usize),
    SoftmaxCe {
        logits: usize,
        labels: Rc<[usize]>,
        probs: Tensor,
    },
}

#[derive(Debug)]
struct Node {
    value: Rc<Tensor>,
    op: Op,
    needs_grad: bool,
}

/// Records operations on [`Var`]s for a single forward/backward pass.
///
/// A tape is single-threaded; create one per evaluation.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: usize,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    /// Number of recorded nodes.
    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Differentiable input.
    pub fn leaf(&self, value: Tensor) -> Var<'_> {
        self.push_raw(Rc::new(value), Op::Leaf, true)
    }

    /// Non-differentiable input.
    pub fn constant(&self, value: Tensor) -> Var<'_> {
        self.push_raw(Rc::new(value), Op::Constant, false)
    }

    fn push_raw(&self, value: Rc<Tensor>, op: Op, needs_grad: bool) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    fn push(&self, name: &'static str, value: Tensor, op: Op, needs_grad: bool) -> Result<Var<'_>> {
        if !value.is_finite() {
            return Err(Error::NonFinite(name));
        }
        Ok(self.push_raw(Rc::new(value), op, needs_grad))
    }

    fn needs(&self, id: usize) -> bool {
        self.nodes.borrow()[id].needs_grad
    }

    fn value_rc(&self, id: usize) -> Rc<Tensor> {
        Rc::clone(&self.nodes.borrow()[id].value)
    }

    /// Sums `messages` into rows of `base`. Each entry is `(message, dst_row)`
    /// with the message a `1 x cols` var; additions happen in list order.
    pub fn scatter<'t>(&'t self, base: Var<'t>, messages: &[(Var<'t>, usize)]) -> Result<Var<'t>> {
        let mut out = (*base.value()).clone();
        let mut needs = self.needs(base.id);
        let mut ids = Vec::with_capacity(messages.len());
        {
            let nodes = self.nodes.borrow();
            for &(m, dst) in messages {
                base.same_tape(m)?;
                let mv = &nodes[m.id].value;
                if mv.rows() != 1 || mv.cols() != out.cols() || dst >= out.rows() {
                    return Err(Error::Shape {
                        op: "scatter",
                        left: out.shape(),
                        right: mv.shape(),
                    });
                }
                for (o, v) in out.row_mut(dst).iter_mut().zip(mv.data()) {
                    *o += v;
                }
                needs |= nodes[m.id].needs_grad;
                ids.push((m.id, dst));
            }
        }
        self.push(
            "scatter",
            out,
            Op::Scatter {
                base: base.id,
                messages: ids,
            },
            needs,
        )
    }
}

// Fallible, so the operator traits do not fit.
#[allow(clippy::should_implement_trait)]
impl<'t> Var<'t> {
    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn value(&self) -> Ref<'t, Tensor> {
        Ref::map(self.tape.nodes.borrow(), |n| &*n[self.id].value)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value().shape()
    }

    /// Value of a `1 x 1` var.
    pub fn scalar(&self) -> Result<f64> {
        let v = self.value();
        if v.shape() != (1, 1) {
            return Err(Error::Shape {
                op: "scalar",
                left: v.shape(),
                right: (1, 1),
            });
        }
        Ok(v.data()[0])
    }

    fn same_tape(&self, other: Var<'t>) -> Result<()> {
        if std::ptr::eq(self.tape, other.tape) {
            Ok(())
        } else {
            Err(Error::arg("vars belong to different tapes"))
        }
    }

    fn unary(
        self,
        name: &'static str,
        f: impl FnOnce(&Tensor) -> Result<Tensor>,
        op: Op,
    ) -> Result<Var<'t>> {
        let value = f(&self.tape.value_rc(self.id))?;
        let needs = self.tape.needs(self.id);
        self.tape.push(name, value, op, needs)
    }

    fn binary(
        self,
        other: Var<'t>,
        name: &'static str,
        f: impl FnOnce(&Tensor, &Tensor) -> Result<Tensor>,
        op: Op,
    ) -> Result<Var<'t>> {
        self.same_tape(other)?;
        let value = f(&self.tape.value_rc(self.id), &self.tape.value_rc(other.id))?;
        let needs = self.tape.needs(self.id) || self.tape.needs(other.id);
        self.tape.push(name, value, op, needs)
    }

    pub fn matmul(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(
            other,
            "matmul",
            Tensor::matmul,
            Op::MatMul(self.id, other.id),
        )
    }

    /// Elementwise sum; `other` may be a row vector broadcast over rows.
    pub fn add(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(other, "add", Tensor::add, Op::Add(self.id, other.id))
    }

    pub fn sub(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(other, "sub", Tensor::sub, Op::Sub(self.id, other.id))
    }

    pub fn mul(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(other, "mul", Tensor::mul, Op::Mul(self.id, other.id))
    }

    pub fn scale(self, s: f64) -> Result<Var<'t>> {
        self.unary("scale", |x| Ok(x.scale(s)), Op::Scale(self.id, s))
    }

    pub fn sigmoid(self) -> Result<Var<'t>> {
        self.unary("sigmoid", |x| Ok(x.map(sigmoid)), Op::Sigmoid(self.id))
    }

    pub fn tanh(self) -> Result<Var<'t>> {
        self.unary("tanh", |x| Ok(x.map(f64::tanh)), Op::Tanh(self.id))
    }

    pub fn relu(self) -> Result<Var<'t>> {
        self.unary("relu", |x| Ok(x.map(|v| v.max(0.0))), Op::Relu(self.id))
    }

    /// Sum over rows (`1 x cols`).
    pub fn sum_rows(self) -> Result<Var<'t>> {
        self.unary("sum_rows", |x| Ok(x.sum_rows()), Op::SumRows(self.id))
    }

    /// Mean over rows (`1 x cols`).
    pub fn mean_rows(self) -> Result<Var<'t>> {
        self.unary(
            "mean_rows",
            |x| {
                if x.rows() == 0 {
                    return Err(Error::Shape {
                        op: "mean_rows",
                        left: x.shape(),
                        right: (1, x.cols()),
                    });
                }
                Ok(x.sum_rows().scale(1.0 / x.rows() as f64))
            },
            Op::MeanRows(self.id),
        )
    }

    pub fn sum_all(self) -> Result<Var<'t>> {
        self.unary(
            "sum_all",
            |x| Ok(Tensor::scalar(x.sum())),
            Op::SumAll(self.id),
        )
    }

    pub fn mean_all(self) -> Result<Var<'t>> {
        self.unary(
            "mean_all",
            |x| Ok(Tensor::scalar(x.sum() / x.data().len() as f64)),
            Op::MeanAll(self.id),
        )
    }

    pub fn concat_cols(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(
            other,
            "concat_cols",
            Tensor::concat_cols,
            Op::ConcatCols(self.id, other.id),
        )
    }

    pub fn select_rows(self, idx: &[usize]) -> Result<Var<'t>> {
        let idx: Rc<[usize]> = idx.into();
        let i2 = Rc::clone(&idx);
        self.unary(
            "select_rows",
            move |x| x.select_rows(&i2),
            Op::SelectRows(self.id, idx),
        )
    }

    /// Multiplies row `r` by `coefs[r]`.
    pub fn scale_rows(self, coefs: &[f64]) -> Result<Var<'t>> {
        let coefs: Rc<[f64]> = coefs.into();
        let c2 = Rc::clone(&coefs);
        self.unary(
            "scale_rows",
            move |x| {
                if c2.len() != x.rows() {
                    return Err(Error::Shape {
                        op: "scale_rows",
                        left: x.shape(),
                        right: (c2.len(), 1),
                    });
                }
                let mut out = x.clone();
                for (r, &c) in c2.iter().enumerate() {
                    for v in out.row_mut(r) {
                        *v *= c;
                    }
                }
                Ok(out)
            },
            Op::ScaleRows(self.id, coefs),
        )
    }

    /// Sparse left-multiplication `S * self`.
    pub fn propagate(self, s: &Rc<Sparse>) -> Result<Var<'t>> {
        let s2 = Rc::clone(s);
        self.unary(
            "propagate",
            move |x| {
                if s2.cols() != x.rows() {
                    return Err(Error::Shape {
                        op: "propagate",
                        left: (s2.rows(), s2.cols()),
                        right: x.shape(),
                    });
                }
                Ok(s2.apply(x))
            },
            Op::Propagate(self.id, Rc::clone(s)),
        )
    }

    /// `coef * self[row]` as a separate `1 x cols` node.
    pub fn message(self, row: usize, coef: f64) -> Result<Var<'t>> {
        self.unary(
            "message",
            |x| {
                if row >= x.rows() {
                    return Err(Error::Shape {
                        op: "message",
                        left: x.shape(),
                        right: (row, 0),
                    });
                }
                Ok(Tensor::row_vector(
                    x.row(row).iter().map(|&v| coef * v).collect(),
                ))
            },
            Op::Message {
                src: self.id,
                row,
                coef,
            },
        )
    }

    pub fn element(self, r: usize, c: usize) -> Result<Var<'t>> {
        self.unary(
            "element",
            |x| {
                if r >= x.rows() || c >= x.cols() {
                    return Err(Error::Shape {
                        op: "element",
                        left: x.shape(),
                        right: (r, c),
                    });
                }
                Ok(Tensor::scalar(x.get(r, c)))
            },
            Op::Element(self.id, r, c),
        )
    }

    /// Mean softmax cross-entropy of each logit row against its label.
    pub fn softmax_cross_entropy(self, labels: &[usize]) -> Result<Var<'t>> {
        let x = self.tape.value_rc(self.id);
        if labels.len() != x.rows() || x.rows() == 0 {
            return Err(Error::Shape {
                op: "softmax_cross_entropy",
                left: x.shape(),
                right: (labels.len(), 1),
            });
        }
        let mut probs = Tensor::zeros(x.rows(), x.cols());
        let mut loss = 0.0;
        for (r, &label) in labels.iter().enumerate() {
            if label >= x.cols() {
                return Err(Error::arg(format!(
                    "label {label} out of range for {} classes",
                    x.cols()
                )));
            }
            let row = x.row(r);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = row.iter().map(|v| (v - max).exp()).sum();
            for (c, v) in row.iter().enumerate() {
                probs.set(r, c, (v - max).exp() / z);
            }
            loss += z.ln() + max - row[label];
        }
        loss /= labels.len() as f64;
        let needs = self.tape.needs(self.id);
        self.tape.push(
            "softmax_cross_entropy",
            Tensor::scalar(loss),
            Op::SoftmaxCe {
                logits: self.id,
                labels: labels.into(),
                probs,
            },
            needs,
        )
    }

    /// Reverse pass from this `1 x 1` var.
    pub fn backward(&self) -> Result<Gradients> {
        let tape = self.tape;
        let nodes = tape.nodes.borrow();
        let shape = nodes[self.id].value.shape();
        if shape != (1, 1) {
            return Err(Error::Shape {
                op: "backward",
                left: shape,
                right: (1, 1),
            });
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; nodes.len()];
        if !nodes[self.id].needs_grad {
            return Ok(Gradients { grads });
        }
        grads[self.id] = Some(Tensor::scalar(1.0));

        let accumulate = |grads: &mut Vec<Option<Tensor>>, id: usize, g: Tensor| {
            if !nodes[id].needs_grad {
                return;
            }
            match &mut grads[id] {
                Some(acc) => acc.add_assign(&g),
                slot => *slot = Some(g),
            }
        };

        for id in (0..=self.id).rev() {
            let Some(g) = grads[id].clone() else { continue };
            let node = &nodes[id];
            let val = |i: usize| &*nodes[i].value;
            match &node.op {
                Op::Leaf | Op::Constant => {}
                Op::MatMul(a, b) => {
                    if nodes[*a].needs_grad {
                        accumulate(&mut grads, *a, g.matmul(&val(*b).transpose())?);
                    }
                    if nodes[*b].needs_grad {
                        accumulate(&mut grads, *b, val(*a).transpose().matmul(&g)?);
                    }
                }
                Op::Add(a, b) | Op::Sub(a, b) => {
                    let sign = if matches!(node.op, Op::Sub(..)) {
                        -1.0
                    } else {
                        1.0
                    };
                    accumulate(&mut grads, *a, g.clone());
                    let gb = if val(*b).shape() == g.shape() {
                        g
                    } else {
                        g.sum_rows()
                    };
                    accumulate(&mut grads, *b, gb.scale(sign));
                }
                Op::Mul(a, b) => {
                    accumulate(&mut grads, *a, g.mul(val(*b))?);
                    accumulate(&mut grads, *b, g.mul(val(*a))?);
                }
                Op::Scale(a, s) => accumulate(&mut grads, *a, g.scale(*s)),
                Op::Sigmoid(a) => {
                    let d = node.value.map(|s| s * (1.0 - s));
                    accumulate(&mut grads, *a, g.mul(&d)?);
                }
                Op::Tanh(a) => {
                    let d = node.value.map(|t| 1.0 - t * t);
                    accumulate(&mut grads, *a, g.mul(&d)?);
                }
                Op::Relu(a) => {
                    let d = val(*a).map(|x| if x > 0.0 { 1.0 } else { 0.0 });
                    accumulate(&mut grads, *a, g.mul(&d)?);
                }
                Op::SumRows(a) | Op::MeanRows(a) => {
                    let x = val(*a);
                    let s = if matches!(node.op, Op::MeanRows(_)) {
                        1.0 / x.rows() as f64
                    } else {
                        1.0
                    };
                    let row = g.scale(s);
                    let full = Tensor::from_fn(x.rows(), x.cols(), |_, c| row.data()[c]);
                    accumulate(&mut grads, *a, full);
                }
                Op::SumAll(a) | Op::MeanAll(a) => {
                    let x = val(*a);
                    let s = if matches!(node.op, Op::MeanAll(_)) {
                        1.0 / x.data().len() as f64
                    } else {
                        1.0
                    };
                    accumulate(
                        &mut grads,
                        *a,
                        Tensor::filled(x.rows(), x.cols(), g.data()[0] * s),
                    );
                }
                Op::ConcatCols(a, b) => {
                    let ca = val(*a).cols();
                    let left = Tensor::from_fn(g.rows(), ca, |r, c| g.get(r, c));
                    let right = Tensor::from_fn(g.rows(), g.cols() - ca, |r, c| g.get(r, ca + c));
                    accumulate(&mut grads, *a, left);
                    accumulate(&mut grads, *b, right);
                }
                Op::SelectRows(a, idx) => {
                    let x = val(*a);
                    let mut d = Tensor::zeros(x.rows(), x.cols());
                    for (i, &r) in idx.iter().enumerate() {
                        d.add_scaled_row(r, g.row(i), 1.0);
                    }
                    accumulate(&mut grads, *a, d);
                }
                Op::ScaleRows(a, coefs) => {
                    let mut d = g;
                    for (r, &c) in coefs.iter().enumerate() {
                        for v in d.row_mut(r) {
                            *v *= c;
                        }
                    }
                    accumulate(&mut grads, *a, d);
                }
                Op::Propagate(a, s) => accumulate(&mut grads, *a, s.apply_transpose(&g)),
                Op::Message { src, row, coef } => {
                    if nodes[*src].needs_grad {
                        let x = val(*src);
                        let mut d = Tensor::zeros(x.rows(), x.cols());
                        d.add_scaled_row(*row, g.data(), *coef);
                        accumulate(&mut grads, *src, d);
                    }
                }
                Op::Scatter { base, messages } => {
                    for &(m, dst) in messages {
                        if nodes[m].needs_grad {
                            accumulate(&mut grads, m, Tensor::row_vector(g.row(dst).to_vec()));
                        }
                    }
                    accumulate(&mut grads, *base, g);
                }
                Op::Element(a, r, c) => {
                    let x = val(*a);
                    let mut d = Tensor::zeros(x.rows(), x.cols());
                    d.set(*r, *c, g.data()[0]);
                    accumulate(&mut grads, *a, d);
                }
                Op::SoftmaxCe {
                    logits,
                    labels,
                    probs,
                } => {
                    let mut d = probs.clone();
                    for (r, &l) in labels.iter().enumerate() {
                        let cur = d.get(r, l);
                        d.set(r, l, cur - 1.0);
                    }
                    let s = g.data()[0] / labels.len() as f64;
                    accumulate(&mut grads, *logits, d.scale(s));
                }
            }
        }
        drop(nodes);
        Ok(Gradients { grads })
    }
}

/// Gradients of a scalar with respect to every recorded var.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient for `v`; zeros when `v` does not influence the output.
    pub fn get(&self, v: Var<'_>) -> Tensor {
        match self.grads.get(v.id).and_then(Option::as_ref) {
            Some(g) => g.clone(),
            None => {
                let (r, c) = v.shape();
                Tensor::zeros(r, c)
            }
        }
    }

    pub fn get_ref(&self, v: Var<'_>) -> Option<&Tensor> {
        self.grads.get(v.id).and_then(Option::as_ref)
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::tensor::grad_check;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor {
        Tensor::from_fn(rows, cols, |_, _| rng.gen_range(-2.0..2.0))
    }

    #[test]
    fn forward_examples() {
        let tape = Tape::new();
        let z = tape.constant(Tensor::scalar(0.0)).sigmoid().unwrap();
        assert_eq!(z.scalar().unwrap(), 0.5);
        let logits = tape.constant(Tensor::row_vector(vec![0.0, 0.0]));
        let ce = logits
            .softmax_cross_entropy(&[0])
            .unwrap()
            .scalar()
            .unwrap();
        assert!((ce - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn square_gradient() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::scalar(3.0));
        let y = x.mul(x).unwrap().sum_all().unwrap();
        assert_eq!(y.backward().unwrap().get(x).data(), &[6.0]);
    }

    #[test]
    fn constant_output_has_no_gradients() {
        let tape = Tape::new();
        let c = tape.constant(Tensor::scalar(2.0));
        let unrelated = tape.leaf(Tensor::scalar(1.0));
        let g = c.scale(3.0).unwrap().backward().unwrap();
        assert_eq!(g.get(unrelated).data(), &[0.0]);
        assert!(g.get_ref(unrelated).is_none());
    }

    #[test]
    fn backward_requires_scalar() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::zeros(2, 2));
        assert!(x.backward().is_err());
    }

    #[test]
    fn non_finite_is_rejected() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::scalar(1e308));
        assert!(matches!(x.scale(10.0), Err(Error::NonFinite("scale"))));
    }

    #[test]
    fn step_must_be_positive() {
        assert!(grad_check(|_, x| x.sum_all(), &Tensor::scalar(1.0), 0.0).is_err());
    }

    #[test]
    fn linear_function_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random(4, 3, &mut rng);
        let err = grad_check(|_, x| x.sum_all(), &x, 1e-3).unwrap();
        assert!(err < 1e-10, "{err}");
        let err = grad_check(|_, x| x.sigmoid()?.sum_all(), &x, 1e-3).unwrap();
        assert!(err < 1e-6, "{err}");
    }

    type Case = Box<dyn for<'t> Fn(&'t Tape, Var<'t>) -> Result<Var<'t>>>;

    fn projected<'t>(f: &Case, t: &'t Tape, v: Var<'t>, seed: u64) -> Result<Var<'t>> {
        let y = f(t, v)?;
        project(t, y, seed)
    }

    /// Every op is reduced to a scalar through a fixed random projection so
    /// that all output entries contribute with distinct weights.
    fn project<'t>(tape: &'t Tape, y: Var<'t>, seed: u64) -> Result<Var<'t>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let (r, c) = y.shape();
        let w = tape.constant(random(r, c, &mut rng));
        y.mul(w)?.sum_all()
    }

    #[test]
    fn every_op_matches_finite_differences() {
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random(3, 4, &mut rng);
            let other = random(4, 2, &mut rng);
            let same = random(3, 4, &mut rng);
            let row = random(1, 4, &mut rng);
            let sparse = Rc::new(Sparse::from_rows(
                3,
                vec![
                    vec![(0, 0.5), (2, -1.0)],
                    vec![(1, 2.0)],
                    vec![],
                    vec![(2, 0.25), (0, 1.5)],
                ],
            ));
            let cases: Vec<(&str, Case)> = vec![
                (
                    "matmul",
                    Box::new(move |t, x| x.matmul(t.constant(other.clone()))),
                ),
                (
                    "matmul_rhs",
                    Box::new({
                        let m = random(2, 3, &mut rng);
                        move |t, x| t.constant(m.clone()).matmul(x)
                    }),
                ),
                (
                    "add",
                    Box::new({
                        let s = same.clone();
                        move |t, x| x.add(t.constant(s.clone()))
                    }),
                ),
                (
                    "add_row",
                    Box::new({
                        let r = row.clone();
                        move |t, x| x.add(t.constant(r.clone()))
                    }),
                ),
                (
                    "sub",
                    Box::new({
                        let s = same.clone();
                        move |t, x| t.constant(s.clone()).sub(x)
                    }),
                ),
                (
                    "mul",
                    Box::new({
                        let s = same.clone();
                        move |t, x| x.mul(t.constant(s.clone()))
                    }),
                ),
                ("mul_self", Box::new(|_, x| x.mul(x))),
                ("scale", Box::new(|_, x| x.scale(-1.7))),
                ("sigmoid", Box::new(|_, x| x.sigmoid())),
                ("tanh", Box::new(|_, x| x.tanh())),
                ("relu", Box::new(|_, x| x.relu())),
                ("sum_rows", Box::new(|_, x| x.sum_rows())),
                ("mean_rows", Box::new(|_, x| x.mean_rows())),
                ("mean_all", Box::new(|_, x| x.mean_all())),
                (
                    "concat_cols",
                    Box::new({
                        let s = same.clone();
                        move |t, x| x.concat_cols(t.constant(s.clone()))
                    }),
                ),
                ("select_rows", Box::new(|_, x| x.select_rows(&[2, 0, 2]))),
                (
                    "scale_rows",
                    Box::new(|_, x| x.scale_rows(&[0.5, -2.0, 3.0])),
                ),
                (
                    "propagate",
                    Box::new({
                        let s = Rc::clone(&sparse);
                        move |_, x| x.propagate(&s)
                    }),
                ),
                ("message", Box::new(|_, x| x.message(1, -0.75))),
                (
                    "scatter",
                    Box::new(|t, x| {
                        let a = x.message(0, 0.5)?;
                        let b = x.message(2, 1.5)?;
                        t.scatter(x, &[(a, 1), (b, 1), (a, 0)])
                    }),
                ),
                ("element", Box::new(|_, x| x.element(2, 3))),
                (
                    "softmax_ce",
                    Box::new(|_, x| x.softmax_cross_entropy(&[0, 3, 1])),
                ),
            ];
            for (name, f) in &cases {
                let err = grad_check(|t, v| projected(f, t, v, seed), &x, 1e-3).unwrap();
                assert!(err < 1e-4, "op {name}, seed {seed}: relative error {err}");
            }
        }
    }

    #[test]
    fn matmul_transpose_rule() {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random(3, 4, &mut rng);
            let b = random(4, 2, &mut rng);
            let tape = Tape::new();
            let (av, bv) = (tape.leaf(a.clone()), tape.leaf(b.clone()));
            let y = av.matmul(bv).unwrap().sum_all().unwrap();
            let g = y.backward().unwrap();
            let ones = Tensor::filled(3, 2, 1.0);
            let ga = ones.matmul(&b.transpose()).unwrap();
            let gb = a.transpose().matmul(&ones).unwrap();
            assert!(g.get(av).max_abs_diff(&ga) < 1e-10);
            assert!(g.get(bv).max_abs_diff(&gb) < 1e-10);
        }
    }

    #[test]
    fn adjoint_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = random(2, 3, &mut rng);
        let grad_of = |which: u8| {
            let tape = Tape::new();
            let v = tape.leaf(x.clone());
            let a = v.tanh().unwrap().sum_all().unwrap();
            let b = v.mul(v).unwrap().mean_all().unwrap();
            let y = match which {
                0 => a,
                1 => b,
                _ => a.add(b).unwrap(),
            };
            y.backward().unwrap().get(v)
        };
        let sum = grad_of(0).add(&grad_of(1)).unwrap();
        assert!(grad_of(2).max_abs_diff(&sum) < 1e-14);
    }
}
