//! Scalar reverse-mode automatic differentiation on an arena tape.
//!
//! A [`Tape`] records every primitive operation of a forward evaluation;
//! [`Var::backward`] then propagates adjoints through the recorded nodes in
//! reverse order. Variables are `Copy` indices into the arena, so expressions
//! read like plain arithmetic:
//!
//! ```
//! use swepinn::ad::Tape;
//!
//! let tape = Tape::new();
//! let x = tape.leaf(3.0);
//! let y = x * x + x.sin();
//! let grads = y.backward();
//! assert!((grads.of(x) - (6.0 + 3.0_f64.cos())).abs() < 1e-15);
//! ```
//!
//! Non-smooth primitives carry deterministic subgradients: `abs` uses 0 at the
//! origin, `max`/`min` break ties toward their first argument. All arithmetic
//! is f64.

mod dual;
mod fd;
mod scalar;

pub use dual::Dual;
pub use fd::{central_gradient, gradient_check_floor, max_relative_error};
pub use scalar::Scalar;

use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdError {
    #[error("non-finite value produced by `{op}` (tape node {index})")]
    NonFinite { op: &'static str, index: usize },
    #[error("non-finite gradient for parameter {index}")]
    NonFiniteGrad { index: usize },
}

/// Value and parameter gradient of a scalar program.
#[derive(Debug, Clone)]
pub struct GradientResult {
    pub value: f64,
    pub grad: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum OpKind {
    Leaf,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    AddConst,
    SubFromConst,
    MulConst,
    DivConst,
    ConstDiv,
    Sqrt,
    Cbrt,
    Abs,
    Max,
    Min,
    Exp,
    Ln,
    Tanh,
    Sin,
    Cos,
    Softplus,
}

impl OpKind {
    fn name(self) -> &'static str {
        match self {
            OpKind::Leaf => "leaf",
            OpKind::Add => "add",
            OpKind::Sub => "sub",
            OpKind::Mul => "mul",
            OpKind::Div => "div",
            OpKind::Neg => "neg",
            OpKind::AddConst => "add_const",
            OpKind::SubFromConst => "sub_from_const",
            OpKind::MulConst => "mul_const",
            OpKind::DivConst => "div_const",
            OpKind::ConstDiv => "const_div",
            OpKind::Sqrt => "sqrt",
            OpKind::Cbrt => "cbrt",
            OpKind::Abs => "abs",
            OpKind::Max => "max",
            OpKind::Min => "min",
            OpKind::Exp => "exp",
            OpKind::Ln => "ln",
            OpKind::Tanh => "tanh",
            OpKind::Sin => "sin",
            OpKind::Cos => "cos",
            OpKind::Softplus => "softplus",
        }
    }
}

#[derive(Clone, Copy)]
struct Node {
    a: u32,
    b: u32,
    da: f64,
    db: f64,
    val: f64,
    kind: OpKind,
}

/// Arena of recorded operations. Single-threaded by construction.
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: RefCell::new(Vec::new()) }
    }

    pub fn with_capacity(n: usize) -> Self {
        Tape { nodes: RefCell::new(Vec::with_capacity(n)) }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Creates an independent input variable.
    pub fn leaf(&self, val: f64) -> Var<'_> {
        self.push(OpKind::Leaf, val, 0, 0.0, 0, 0.0)
    }

    fn push(&self, kind: OpKind, val: f64, a: u32, da: f64, b: u32, db: f64) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        let idx = nodes.len() as u32;
        nodes.push(Node { a, b, da, db, val, kind });
        Var { tape: self, idx, val }
    }

    /// First recorded node holding a non-finite value, if any.
    fn first_non_finite(&self) -> Option<(usize, &'static str)> {
        self.nodes
            .borrow()
            .iter()
            .enumerate()
            .find(|(_, n)| !n.val.is_finite())
            .map(|(i, n)| (i, n.kind.name()))
    }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

/// A recorded f64 value; `Copy`, tied to its tape by lifetime.
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    idx: u32,
    val: f64,
}

impl<'t> Var<'t> {
    pub fn value(self) -> f64 {
        self.val
    }

    /// Constant recorded on the same tape (receives no adjoints of interest).
    pub fn constant(self, c: f64) -> Var<'t> {
        self.tape.leaf(c)
    }

    /// Reverse sweep from this variable; returns adjoints for every node.
    pub fn backward(self) -> Gradients {
        let nodes = self.tape.nodes.borrow();
        let mut grads = vec![0.0; nodes.len()];
        grads[self.idx as usize] = 1.0;
        for i in (0..nodes.len()).rev() {
            let g = grads[i];
            if g == 0.0 {
                continue;
            }
            let n = &nodes[i];
            if n.kind == OpKind::Leaf {
                continue;
            }
            grads[n.a as usize] += n.da * g;
            grads[n.b as usize] += n.db * g;
        }
        Gradients { grads }
    }

    fn unary(self, kind: OpKind, val: f64, da: f64) -> Var<'t> {
        self.tape.push(kind, val, self.idx, da, self.idx, 0.0)
    }

    fn binary(self, o: Var<'t>, kind: OpKind, val: f64, da: f64, db: f64) -> Var<'t> {
        debug_assert!(std::ptr::eq(self.tape, o.tape), "variables from different tapes");
        self.tape.push(kind, val, self.idx, da, o.idx, db)
    }

    pub fn sqrt(self) -> Var<'t> {
        let r = self.val.sqrt();
        self.unary(OpKind::Sqrt, r, 0.5 / r)
    }

    pub fn cbrt(self) -> Var<'t> {
        let r = self.val.cbrt();
        self.unary(OpKind::Cbrt, r, 1.0 / (3.0 * r * r))
    }

    /// |x| with subgradient 0 at the origin.
    pub fn abs(self) -> Var<'t> {
        let s = if self.val > 0.0 {
            1.0
        } else if self.val < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.unary(OpKind::Abs, self.val.abs(), s)
    }

    /// Pointwise maximum; ties select `self`.
    pub fn max(self, o: Var<'t>) -> Var<'t> {
        let left = self.val >= o.val;
        let val = if left { self.val } else { o.val };
        self.binary(o, OpKind::Max, val, left as u8 as f64, !left as u8 as f64)
    }

    /// Pointwise minimum; ties select `self`.
    pub fn min(self, o: Var<'t>) -> Var<'t> {
        let left = self.val <= o.val;
        let val = if left { self.val } else { o.val };
        self.binary(o, OpKind::Min, val, left as u8 as f64, !left as u8 as f64)
    }

    pub fn exp(self) -> Var<'t> {
        let e = self.val.exp();
        self.unary(OpKind::Exp, e, e)
    }

    pub fn ln(self) -> Var<'t> {
        self.unary(OpKind::Ln, self.val.ln(), 1.0 / self.val)
    }

    pub fn tanh(self) -> Var<'t> {
        let y = self.val.tanh();
        self.unary(OpKind::Tanh, y, 1.0 - y * y)
    }

    pub fn sin(self) -> Var<'t> {
        self.unary(OpKind::Sin, self.val.sin(), self.val.cos())
    }

    pub fn cos(self) -> Var<'t> {
        self.unary(OpKind::Cos, self.val.cos(), -self.val.sin())
    }

    /// ln(1 + e^x), overflow-safe; derivative is the logistic sigmoid.
    pub fn softplus(self) -> Var<'t> {
        self.unary(OpKind::Softplus, softplus(self.val), sigmoid(self.val))
    }
}

pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Adjoints produced by a reverse sweep.
pub struct Gradients {
    grads: Vec<f64>,
}

impl Gradients {
    pub fn of(&self, v: Var<'_>) -> f64 {
        self.grads[v.idx as usize]
    }
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, o: Var<'t>) -> Var<'t> {
        self.binary(o, OpKind::Add, self.val + o.val, 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, o: Var<'t>) -> Var<'t> {
        self.binary(o, OpKind::Sub, self.val - o.val, 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, o: Var<'t>) -> Var<'t> {
        self.binary(o, OpKind::Mul, self.val * o.val, o.val, self.val)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Var<'t>;
    fn div(self, o: Var<'t>) -> Var<'t> {
        let inv = 1.0 / o.val;
        self.binary(o, OpKind::Div, self.val * inv, inv, -self.val * inv * inv)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        self.unary(OpKind::Neg, -self.val, -1.0)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Var<'t>;
    fn add(self, c: f64) -> Var<'t> {
        self.unary(OpKind::AddConst, self.val + c, 1.0)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, c: f64) -> Var<'t> {
        self.unary(OpKind::AddConst, self.val - c, 1.0)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, c: f64) -> Var<'t> {
        self.unary(OpKind::MulConst, self.val * c, c)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Var<'t>;
    fn div(self, c: f64) -> Var<'t> {
        self.unary(OpKind::DivConst, self.val / c, 1.0 / c)
    }
}

impl<'t> Add<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn add(self, v: Var<'t>) -> Var<'t> {
        v + self
    }
}

impl<'t> Sub<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn sub(self, v: Var<'t>) -> Var<'t> {
        v.unary(OpKind::SubFromConst, self - v.val, -1.0)
    }
}

impl<'t> Mul<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn mul(self, v: Var<'t>) -> Var<'t> {
        v * self
    }
}

impl<'t> Div<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn div(self, v: Var<'t>) -> Var<'t> {
        v.unary(OpKind::ConstDiv, self / v.val, -self / (v.val * v.val))
    }
}

/// Evaluates `f` at `params` and returns the value together with its exact
/// gradient. Repeated calls are bitwise deterministic.
pub fn value_and_grad<F>(params: &[f64], f: F) -> Result<GradientResult, AdError>
where
    F: for<'t> Fn(&'t Tape, &[Var<'t>]) -> Var<'t>,
{
    let tape = Tape::new();
    let vars: Vec<Var<'_>> = params.iter().map(|&p| tape.leaf(p)).collect();
    let out = f(&tape, &vars);
    if !out.value().is_finite() {
        let (index, op) = tape.first_non_finite().unwrap_or((out.idx as usize, "output"));
        return Err(AdError::NonFinite { op, index });
    }
    let grads = out.backward();
    let grad: Vec<f64> = vars.iter().map(|v| grads.of(*v)).collect();
    if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
        return Err(AdError::NonFiniteGrad { index: i });
    }
    Ok(GradientResult { value: out.value(), grad })
}
