//! Arena-backed reverse-mode tape over small dense 2-D tensors.
//!
//! Every node holds a row-major `rows x cols` block. By convention columns
//! index batch points (cells, interfaces) and rows index features or state
//! components, so one tape records a whole batched computation.
//!
//! Shape mismatches are programming errors and panic.

use std::fmt;
use std::str::FromStr;

use super::real::Real;
use super::AdError;

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
}

impl Shape {
    pub fn new(rows: usize, cols: usize) -> Self {
        Shape { rows, cols }
    }
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryOp {
    Tanh,
    Softplus,
    Sigmoid,
    Square,
    /// `max(x, 0)`
    Relu,
    /// `|x| - 1/2` for `|x| > 1`, `x^2 / 2` otherwise.
    Huber,
    Recip,
    Sqrt,
    Abs,
}

impl UnaryOp {
    pub const ALL: [UnaryOp; 9] = [
        UnaryOp::Tanh,
        UnaryOp::Softplus,
        UnaryOp::Sigmoid,
        UnaryOp::Square,
        UnaryOp::Relu,
        UnaryOp::Huber,
        UnaryOp::Recip,
        UnaryOp::Sqrt,
        UnaryOp::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Tanh => "tanh",
            UnaryOp::Softplus => "softplus",
            UnaryOp::Sigmoid => "sigmoid",
            UnaryOp::Square => "square",
            UnaryOp::Relu => "relu",
            UnaryOp::Huber => "huber",
            UnaryOp::Recip => "recip",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
        }
    }

    #[inline]
    pub fn apply<T: Real>(self, x: T) -> T {
        match self {
            UnaryOp::Tanh => x.tanh(),
            UnaryOp::Softplus => x.softplus(),
            UnaryOp::Sigmoid => x.sigmoid(),
            UnaryOp::Square => x * x,
            UnaryOp::Relu => {
                if x.primal() > 0.0 {
                    x
                } else {
                    T::zero()
                }
            }
            UnaryOp::Huber => {
                if x.abs().primal() > 1.0 {
                    x.abs() - T::from_f64(0.5)
                } else {
                    (x * x).scale(0.5)
                }
            }
            UnaryOp::Recip => x.recip(),
            UnaryOp::Sqrt => x.sqrt(),
            UnaryOp::Abs => x.abs(),
        }
    }

    /// Derivative `dy/dx` given input `x` and output `y`.
    #[inline]
    pub fn derivative<T: Real>(self, x: T, y: T) -> T {
        match self {
            UnaryOp::Tanh => T::one() - y * y,
            UnaryOp::Softplus => x.sigmoid(),
            UnaryOp::Sigmoid => y * (T::one() - y),
            UnaryOp::Square => x.scale(2.0),
            UnaryOp::Relu => {
                if x.primal() > 0.0 {
                    T::one()
                } else {
                    T::zero()
                }
            }
            UnaryOp::Huber => {
                if x.abs().primal() > 1.0 {
                    T::from_f64(sign(x.primal()))
                } else {
                    x
                }
            }
            UnaryOp::Recip => -(y * y),
            UnaryOp::Sqrt => y.scale(2.0).recip(),
            UnaryOp::Abs => T::from_f64(sign(x.primal())),
        }
    }
}

/// Sign with `sign(0) = 0`.
#[inline]
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl fmt::Display for UnaryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for UnaryOp {
    type Err = AdError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        UnaryOp::ALL.iter().copied().find(|op| op.name() == s).ok_or_else(|| AdError::UnsupportedOp(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    MulRow(Var, Var),
    Scale(Var, f64),
    Offset(Var, f64),
    Unary(UnaryOp, Var),
    Sum(Var),
    SumRows(Var),
    Row(Var, usize),
    StackRows { start: usize, len: usize },
    ConcatCols(Var, Var),
    Gather { src: Var, start: usize },
    Where { start: usize, on_true: Var, on_false: Var },
}

#[derive(Clone, Copy, Debug)]
struct Node {
    op: Op,
    shape: Shape,
    offset: usize,
    requires_grad: bool,
}

/// Graph structure without values, shared by recording and replay.
#[derive(Clone, Debug, Default)]
struct Graph {
    nodes: Vec<Node>,
    args: Vec<Var>,
    indices: Vec<usize>,
    masks: Vec<bool>,
}

impl Graph {
    fn slice<'a, T>(&self, values: &'a [T], v: Var) -> &'a [T] {
        let n = &self.nodes[v.0];
        &values[n.offset..n.offset + n.shape.len()]
    }

    /// Evaluates `op` reading inputs from `inp` (everything recorded before
    /// the node) and writing into `out`.
    fn compute<T: Real>(&self, op: Op, shape: Shape, inp: &[T], out: &mut [T]) {
        let sl = |v: Var| self.slice(inp, v);
        match op {
            Op::Leaf => unreachable!("leaves carry their own values"),
            Op::MatMul(a, b) => {
                let sa = self.nodes[a.0].shape;
                T::gemm(sa.rows, sa.cols, shape.cols, sl(a), (sa.cols, 1), sl(b), (shape.cols, 1), 0.0, out);
            }
            Op::AddBias(x, b) => {
                let (xv, bv) = (sl(x), sl(b));
                for i in 0..shape.rows {
                    let bi = bv[i];
                    let row = i * shape.cols..(i + 1) * shape.cols;
                    for (o, &xi) in out[row.clone()].iter_mut().zip(&xv[row]) {
                        *o = xi + bi;
                    }
                }
            }
            Op::Add(a, b) => zip_into(out, sl(a), sl(b), |x, y| x + y),
            Op::Sub(a, b) => zip_into(out, sl(a), sl(b), |x, y| x - y),
            Op::Mul(a, b) => zip_into(out, sl(a), sl(b), |x, y| x * y),
            Op::MulRow(x, r) => {
                let (xv, rv) = (sl(x), sl(r));
                for i in 0..shape.rows {
                    let row = i * shape.cols..(i + 1) * shape.cols;
                    for ((o, &xi), &ri) in out[row.clone()].iter_mut().zip(&xv[row]).zip(rv) {
                        *o = xi * ri;
                    }
                }
            }
            Op::Scale(x, c) => {
                for (o, &xi) in out.iter_mut().zip(sl(x)) {
                    *o = xi.scale(c);
                }
            }
            Op::Offset(x, c) => {
                let c = T::from_f64(c);
                for (o, &xi) in out.iter_mut().zip(sl(x)) {
                    *o = xi + c;
                }
            }
            Op::Unary(u, x) => {
                for (o, &xi) in out.iter_mut().zip(sl(x)) {
                    *o = u.apply(xi);
                }
            }
            Op::Sum(x) => {
                let mut acc = T::zero();
                for &xi in sl(x) {
                    acc += xi;
                }
                out[0] = acc;
            }
            Op::SumRows(x) => {
                let xv = sl(x);
                let rows = self.nodes[x.0].shape.rows;
                out.copy_from_slice(&xv[..shape.cols]);
                for i in 1..rows {
                    for (o, &xi) in out.iter_mut().zip(&xv[i * shape.cols..(i + 1) * shape.cols]) {
                        *o += xi;
                    }
                }
            }
            Op::Row(x, i) => {
                out.copy_from_slice(&sl(x)[i * shape.cols..(i + 1) * shape.cols]);
            }
            Op::StackRows { start, len } => {
                let mut pos = 0;
                for &a in &self.args[start..start + len] {
                    let av = sl(a);
                    out[pos..pos + av.len()].copy_from_slice(av);
                    pos += av.len();
                }
            }
            Op::ConcatCols(a, b) => {
                let (na, nb) = (self.nodes[a.0].shape.cols, self.nodes[b.0].shape.cols);
                let (av, bv) = (sl(a), sl(b));
                for i in 0..shape.rows {
                    let o = &mut out[i * shape.cols..(i + 1) * shape.cols];
                    o[..na].copy_from_slice(&av[i * na..(i + 1) * na]);
                    o[na..].copy_from_slice(&bv[i * nb..(i + 1) * nb]);
                }
            }
            Op::Gather { src, start } => {
                let sv = sl(src);
                let ns = self.nodes[src.0].shape.cols;
                let idx = &self.indices[start..start + shape.cols];
                for i in 0..shape.rows {
                    let srow = &sv[i * ns..(i + 1) * ns];
                    for (o, &j) in out[i * shape.cols..(i + 1) * shape.cols].iter_mut().zip(idx) {
                        *o = srow[j];
                    }
                }
            }
            Op::Where { start, on_true, on_false } => {
                let mask = &self.masks[start..start + shape.len()];
                let (tv, fv) = (sl(on_true), sl(on_false));
                for (k, o) in out.iter_mut().enumerate() {
                    *o = if mask[k] { tv[k] } else { fv[k] };
                }
            }
        }
    }
}

#[inline]
fn zip_into<T: Copy>(out: &mut [T], a: &[T], b: &[T], f: impl Fn(T, T) -> T) {
    for ((o, &x), &y) in out.iter_mut().zip(a).zip(b) {
        *o = f(x, y);
    }
}

/// Reverse-mode tape. Values live in a single arena; leaves are either
/// differentiable inputs or constants.
#[derive(Clone, Debug, Default)]
pub struct Tape<T: Real> {
    graph: Graph,
    values: Vec<T>,
    adjoints: Vec<T>,
    touched: Vec<bool>,
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Tape { graph: Graph::default(), values: Vec::new(), adjoints: Vec::new(), touched: Vec::new() }
    }

    /// Drops every node but keeps the allocations.
    pub fn clear(&mut self) {
        self.graph.nodes.clear();
        self.graph.args.clear();
        self.graph.indices.clear();
        self.graph.masks.clear();
        self.values.clear();
        self.adjoints.clear();
        self.touched.clear();
    }

    pub fn len(&self) -> usize {
        self.graph.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graph.nodes.is_empty()
    }

    pub fn arena_len(&self) -> usize {
        self.values.len()
    }

    pub fn shape(&self, v: Var) -> Shape {
        self.graph.nodes[v.0].shape
    }

    pub fn value(&self, v: Var) -> &[T] {
        self.graph.slice(&self.values, v)
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.graph.nodes[v.0].requires_grad
    }

    /// Primal value of a 1x1 node.
    pub fn scalar(&self, v: Var) -> f64 {
        assert_eq!(self.shape(v).len(), 1, "scalar() on a non-scalar node");
        self.value(v)[0].primal()
    }

    /// Primal values of a node as plain `f64`.
    pub fn primal(&self, v: Var) -> Vec<f64> {
        self.value(v).iter().map(|x| x.primal()).collect()
    }

    fn push_leaf(&mut self, values: impl IntoIterator<Item = T>, shape: Shape, requires_grad: bool) -> Var {
        let offset = self.values.len();
        self.values.extend(values);
        assert_eq!(self.values.len() - offset, shape.len(), "leaf value count does not match its shape");
        self.graph.nodes.push(Node { op: Op::Leaf, shape, offset, requires_grad });
        Var(self.graph.nodes.len() - 1)
    }

    /// Differentiable leaf.
    pub fn input(&mut self, values: &[T], rows: usize, cols: usize) -> Var {
        self.push_leaf(values.iter().copied(), Shape::new(rows, cols), true)
    }

    pub fn constant(&mut self, values: &[T], rows: usize, cols: usize) -> Var {
        self.push_leaf(values.iter().copied(), Shape::new(rows, cols), false)
    }

    /// Leaf from plain `f64` values.
    pub fn leaf_f64(&mut self, values: &[f64], rows: usize, cols: usize, requires_grad: bool) -> Var {
        self.push_leaf(values.iter().map(|&x| T::from_f64(x)), Shape::new(rows, cols), requires_grad)
    }

    pub fn filled(&mut self, value: f64, rows: usize, cols: usize) -> Var {
        self.push_leaf(std::iter::repeat_n(T::from_f64(value), rows * cols), Shape::new(rows, cols), false)
    }

    fn push_op(&mut self, op: Op, shape: Shape, inputs: &[Var]) -> Var {
        let requires_grad = inputs.iter().any(|v| self.graph.nodes[v.0].requires_grad);
        let offset = self.values.len();
        self.values.resize(offset + shape.len(), T::zero());
        let (inp, out) = self.values.split_at_mut(offset);
        self.graph.compute(op, shape, inp, out);
        self.graph.nodes.push(Node { op, shape, offset, requires_grad });
        Var(self.graph.nodes.len() - 1)
    }

    fn same_shape(&self, a: Var, b: Var, what: &str) -> Shape {
        let (sa, sb) = (self.shape(a), self.shape(b));
        assert_eq!(sa, sb, "{what}: operand shapes differ");
        sa
    }

    /// `a (m x k) * b (k x n)`
    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (sa, sb) = (self.shape(a), self.shape(b));
        assert_eq!(sa.cols, sb.rows, "matmul: inner dimensions differ");
        self.push_op(Op::MatMul(a, b), Shape::new(sa.rows, sb.cols), &[a, b])
    }

    /// Adds an `m x 1` column to every column of `x`.
    pub fn add_bias(&mut self, x: Var, b: Var) -> Var {
        let (sx, sb) = (self.shape(x), self.shape(b));
        assert_eq!((sb.rows, sb.cols), (sx.rows, 1), "add_bias: bias must be a column");
        self.push_op(Op::AddBias(x, b), sx, &[x, b])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let s = self.same_shape(a, b, "add");
        self.push_op(Op::Add(a, b), s, &[a, b])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let s = self.same_shape(a, b, "sub");
        self.push_op(Op::Sub(a, b), s, &[a, b])
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let s = self.same_shape(a, b, "mul");
        self.push_op(Op::Mul(a, b), s, &[a, b])
    }

    /// Multiplies every row of `x` elementwise by the `1 x n` row `r`.
    pub fn mul_row(&mut self, x: Var, r: Var) -> Var {
        let (sx, sr) = (self.shape(x), self.shape(r));
        assert_eq!((sr.rows, sr.cols), (1, sx.cols), "mul_row: multiplier must be a matching row");
        self.push_op(Op::MulRow(x, r), sx, &[x, r])
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let s = self.shape(x);
        self.push_op(Op::Scale(x, c), s, &[x])
    }

    pub fn offset(&mut self, x: Var, c: f64) -> Var {
        let s = self.shape(x);
        self.push_op(Op::Offset(x, c), s, &[x])
    }

    pub fn unary(&mut self, op: UnaryOp, x: Var) -> Var {
        let s = self.shape(x);
        self.push_op(Op::Unary(op, x), s, &[x])
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.unary(UnaryOp::Tanh, x)
    }
    pub fn softplus(&mut self, x: Var) -> Var {
        self.unary(UnaryOp::Softplus, x)
    }
    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.unary(UnaryOp::Sigmoid, x)
    }
    pub fn square(&mut self, x: Var) -> Var {
        self.unary(UnaryOp::Square, x)
    }
    pub fn relu(&mut self, x: Var) -> Var {
        self.unary(UnaryOp::Relu, x)
    }
    pub fn huber(&mut self, x: Var) -> Var {
        self.unary(UnaryOp::Huber, x)
    }
    pub fn recip(&mut self, x: Var) -> Var {
        self.unary(UnaryOp::Recip, x)
    }
    pub fn sqrt(&mut self, x: Var) -> Var {
        self.unary(UnaryOp::Sqrt, x)
    }
    pub fn abs(&mut self, x: Var) -> Var {
        self.unary(UnaryOp::Abs, x)
    }

    /// Sum of all entries, as a `1 x 1` node.
    pub fn sum(&mut self, x: Var) -> Var {
        self.push_op(Op::Sum(x), Shape::new(1, 1), &[x])
    }

    /// Column sums, as a `1 x n` row.
    pub fn sum_rows(&mut self, x: Var) -> Var {
        let s = self.shape(x);
        self.push_op(Op::SumRows(x), Shape::new(1, s.cols), &[x])
    }

    pub fn row(&mut self, x: Var, i: usize) -> Var {
        let s = self.shape(x);
        assert!(i < s.rows, "row: index out of range");
        self.push_op(Op::Row(x, i), Shape::new(1, s.cols), &[x])
    }

    /// Stacks blocks with equal column counts on top of each other.
    pub fn stack_rows(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "stack_rows: nothing to stack");
        let cols = self.shape(parts[0]).cols;
        let mut rows = 0;
        for &p in parts {
            let s = self.shape(p);
            assert_eq!(s.cols, cols, "stack_rows: column counts differ");
            rows += s.rows;
        }
        let start = self.graph.args.len();
        self.graph.args.extend_from_slice(parts);
        self.push_op(Op::StackRows { start, len: parts.len() }, Shape::new(rows, cols), parts)
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Var {
        let (sa, sb) = (self.shape(a), self.shape(b));
        assert_eq!(sa.rows, sb.rows, "concat_cols: row counts differ");
        self.push_op(Op::ConcatCols(a, b), Shape::new(sa.rows, sa.cols + sb.cols), &[a, b])
    }

    /// Selects columns `src[:, idx[j]]`.
    pub fn gather(&mut self, src: Var, idx: &[usize]) -> Var {
        let s = self.shape(src);
        assert!(idx.iter().all(|&j| j < s.cols), "gather: column index out of range");
        let start = self.graph.indices.len();
        self.graph.indices.extend_from_slice(idx);
        self.push_op(Op::Gather { src, start }, Shape::new(s.rows, idx.len()), &[src])
    }

    /// Elementwise `mask ? on_true : on_false`. Only the selected branch
    /// receives an adjoint. A branch that would be non-finite must still be
    /// guarded at its inputs, since `0 * inf` is NaN on the way back.
    pub fn select(&mut self, mask: &[bool], on_true: Var, on_false: Var) -> Var {
        let s = self.same_shape(on_true, on_false, "select");
        assert_eq!(mask.len(), s.len(), "select: mask length differs from operand size");
        let start = self.graph.masks.len();
        self.graph.masks.extend_from_slice(mask);
        self.push_op(Op::Where { start, on_true, on_false }, s, &[on_true, on_false])
    }

    /// Recomputes every non-leaf node from the leaves into a fresh arena.
    pub fn replay(&self) -> Vec<T> {
        let mut values: Vec<T> = Vec::with_capacity(self.values.len());
        for node in &self.graph.nodes {
            let end = node.offset + node.shape.len();
            match node.op {
                Op::Leaf => values.extend_from_slice(&self.values[node.offset..end]),
                op => {
                    values.resize(end, T::zero());
                    let (inp, out) = values.split_at_mut(node.offset);
                    self.graph.compute(op, node.shape, inp, out);
                }
            }
        }
        values
    }

    /// Whole value arena, in recording order.
    pub fn arena(&self) -> &[T] {
        &self.values
    }

    /// Reverse sweep from `output` seeded with `seed` (same length as the
    /// output). Afterwards [`Tape::adjoint`] returns `d<seed, output>/d v`.
    pub fn backward(&mut self, output: Var, seed: &[T]) -> Result<(), AdError> {
        let out_node = self.graph.nodes[output.0];
        if seed.len() != out_node.shape.len() {
            return Err(AdError::ShapeMismatch { expected: out_node.shape.len(), found: seed.len() });
        }
        self.adjoints.clear();
        self.adjoints.resize(self.values.len(), T::zero());
        self.touched.clear();
        self.touched.resize(self.graph.nodes.len(), false);
        self.adjoints[out_node.offset..out_node.offset + seed.len()].copy_from_slice(seed);
        self.touched[output.0] = true;

        for idx in (0..=output.0).rev() {
            if !self.touched[idx] {
                continue;
            }
            let node = self.graph.nodes[idx];
            if !node.requires_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            self.propagate(node);
        }
        Ok(())
    }

    /// Adjoint of `v` from the last [`Tape::backward`]; zeros if `v` was not
    /// reached.
    pub fn adjoint(&self, v: Var) -> &[T] {
        self.graph.slice(&self.adjoints, v)
    }

    fn propagate(&mut self, node: Node) {
        let g = &self.graph;
        let vals = &self.values;
        let (lo, hi) = self.adjoints.split_at_mut(node.offset);
        let dy = &hi[..node.shape.len()];
        let touched = &mut self.touched;
        let shape = node.shape;
        // Input adjoint range, or None if that input does not need one.
        let mut target = |v: Var| -> Option<std::ops::Range<usize>> {
            let n = &g.nodes[v.0];
            if n.requires_grad {
                touched[v.0] = true;
                Some(n.offset..n.offset + n.shape.len())
            } else {
                None
            }
        };
        let val = |v: Var| g.slice(vals, v);

        match node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let sa = g.nodes[a.0].shape;
                let (m, k, n) = (sa.rows, sa.cols, shape.cols);
                if let Some(r) = target(a) {
                    T::gemm(m, n, k, dy, (n, 1), val(b), (1, n), 1.0, &mut lo[r]);
                }
                if let Some(r) = target(b) {
                    T::gemm(k, m, n, val(a), (1, k), dy, (n, 1), 1.0, &mut lo[r]);
                }
            }
            Op::AddBias(x, b) => {
                if let Some(r) = target(x) {
                    add_into(&mut lo[r], dy);
                }
                if let Some(r) = target(b) {
                    let db = &mut lo[r];
                    for i in 0..shape.rows {
                        let mut acc = T::zero();
                        for &d in &dy[i * shape.cols..(i + 1) * shape.cols] {
                            acc += d;
                        }
                        db[i] += acc;
                    }
                }
            }
            Op::Add(a, b) => {
                if let Some(r) = target(a) {
                    add_into(&mut lo[r], dy);
                }
                if let Some(r) = target(b) {
                    add_into(&mut lo[r], dy);
                }
            }
            Op::Sub(a, b) => {
                if let Some(r) = target(a) {
                    add_into(&mut lo[r], dy);
                }
                if let Some(r) = target(b) {
                    for (o, &d) in lo[r].iter_mut().zip(dy) {
                        *o = *o - d;
                    }
                }
            }
            Op::Mul(a, b) => {
                if let Some(r) = target(a) {
                    for ((o, &d), &y) in lo[r].iter_mut().zip(dy).zip(val(b)) {
                        *o += d * y;
                    }
                }
                if let Some(r) = target(b) {
                    for ((o, &d), &x) in lo[r].iter_mut().zip(dy).zip(val(a)) {
                        *o += d * x;
                    }
                }
            }
            Op::MulRow(x, rw) => {
                let n = shape.cols;
                if let Some(r) = target(x) {
                    let (dx, rv) = (&mut lo[r], val(rw));
                    for i in 0..shape.rows {
                        for j in 0..n {
                            dx[i * n + j] += dy[i * n + j] * rv[j];
                        }
                    }
                }
                if let Some(r) = target(rw) {
                    let (dr, xv) = (&mut lo[r], val(x));
                    for i in 0..shape.rows {
                        for j in 0..n {
                            dr[j] += dy[i * n + j] * xv[i * n + j];
                        }
                    }
                }
            }
            Op::Scale(x, c) => {
                if let Some(r) = target(x) {
                    for (o, &d) in lo[r].iter_mut().zip(dy) {
                        *o += d.scale(c);
                    }
                }
            }
            Op::Offset(x, _) => {
                if let Some(r) = target(x) {
                    add_into(&mut lo[r], dy);
                }
            }
            Op::Unary(u, x) => {
                if let Some(r) = target(x) {
                    let yv = &vals[node.offset..node.offset + shape.len()];
                    for (((o, &d), &xi), &yi) in lo[r].iter_mut().zip(dy).zip(val(x)).zip(yv) {
                        *o += d * u.derivative(xi, yi);
                    }
                }
            }
            Op::Sum(x) => {
                if let Some(r) = target(x) {
                    let d = dy[0];
                    for o in lo[r].iter_mut() {
                        *o += d;
                    }
                }
            }
            Op::SumRows(x) => {
                if let Some(r) = target(x) {
                    let n = shape.cols;
                    for (k, o) in lo[r].iter_mut().enumerate() {
                        *o += dy[k % n];
                    }
                }
            }
            Op::Row(x, i) => {
                if let Some(r) = target(x) {
                    let n = shape.cols;
                    add_into(&mut lo[r][i * n..(i + 1) * n], dy);
                }
            }
            Op::StackRows { start, len } => {
                let mut pos = 0;
                for k in start..start + len {
                    let a = g.args[k];
                    let size = g.nodes[a.0].shape.len();
                    if let Some(r) = target(a) {
                        add_into(&mut lo[r], &dy[pos..pos + size]);
                    }
                    pos += size;
                }
            }
            Op::ConcatCols(a, b) => {
                let (na, nb) = (g.nodes[a.0].shape.cols, g.nodes[b.0].shape.cols);
                if let Some(r) = target(a) {
                    let da = &mut lo[r];
                    for i in 0..shape.rows {
                        add_into(&mut da[i * na..(i + 1) * na], &dy[i * shape.cols..i * shape.cols + na]);
                    }
                }
                if let Some(r) = target(b) {
                    let db = &mut lo[r];
                    for i in 0..shape.rows {
                        add_into(&mut db[i * nb..(i + 1) * nb], &dy[i * shape.cols + na..(i + 1) * shape.cols]);
                    }
                }
            }
            Op::Gather { src, start } => {
                if let Some(r) = target(src) {
                    let ns = g.nodes[src.0].shape.cols;
                    let idx = &g.indices[start..start + shape.cols];
                    let ds = &mut lo[r];
                    for i in 0..shape.rows {
                        let drow = &dy[i * shape.cols..(i + 1) * shape.cols];
                        let srow = &mut ds[i * ns..(i + 1) * ns];
                        for (&j, &d) in idx.iter().zip(drow) {
                            srow[j] += d;
                        }
                    }
                }
            }
            Op::Where { start, on_true, on_false } => {
                let mask = &g.masks[start..start + shape.len()];
                if let Some(r) = target(on_true) {
                    for ((o, &d), &m) in lo[r].iter_mut().zip(dy).zip(mask) {
                        if m {
                            *o += d;
                        }
                    }
                }
                if let Some(r) = target(on_false) {
                    for ((o, &d), &m) in lo[r].iter_mut().zip(dy).zip(mask) {
                        if !m {
                            *o += d;
                        }
                    }
                }
            }
        }
    }
}

#[inline]
fn add_into<T: Real>(dst: &mut [T], src: &[T]) {
    for (o, &s) in dst.iter_mut().zip(src) {
        *o += s;
    }
}
