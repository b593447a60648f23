//! Order-2 jets: value, gradient, and Hessian propagated exactly through the
//! expression tree. Finite differences never enter here; they exist only as a
//! test oracle.

use std::fmt;

use thiserror::Error;

use super::{BinOp, Expression, Func, Node};
use crate::scalar::Real;
use crate::tensor::Matrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("point has {found} coordinates, expression expects {expected}")]
    PointDim { expected: usize, found: usize },
    #[error("division by zero in `{subexpr}`")]
    DivisionByZero { subexpr: String },
    #[error("{what} in `{subexpr}`")]
    Domain { what: String, subexpr: String },
    #[error("non-finite result in `{subexpr}`")]
    NonFinite { subexpr: String },
}

/// Value, gradient, and symmetric Hessian of a scalar function at a point.
/// The Hessian is stored as its upper triangle, so symmetry is structural.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2<T> {
    n: usize,
    value: T,
    grad: Vec<T>,
    hess: Vec<T>, // packed upper triangle, row-major
}

#[inline]
fn tri(n: usize) -> usize {
    n * (n + 1) / 2
}

#[inline]
fn tri_idx(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

impl<T: Real> Jet2<T> {
    pub fn constant(n: usize, value: T) -> Self {
        Jet2 { n, value, grad: vec![T::zero(); n], hess: vec![T::zero(); tri(n)] }
    }

    pub fn variable(n: usize, idx: usize, value: T) -> Self {
        let mut j = Self::constant(n, value);
        j.grad[idx] = T::one();
        j
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn value(&self) -> T {
        self.value
    }

    #[inline]
    pub fn gradient(&self) -> &[T] {
        &self.grad
    }

    #[inline]
    pub fn hess(&self, i: usize, j: usize) -> T {
        self.hess[tri_idx(self.n, i, j)]
    }

    pub fn hessian_matrix(&self) -> Matrix<T> {
        Matrix::from_fn(self.n, |i, j| self.hess(i, j))
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().all(|h| h.is_finite())
    }

    /// True when gradient and Hessian vanish identically (a constant jet).
    pub fn is_constant(&self) -> bool {
        self.grad.iter().all(|&g| g == T::zero()) && self.hess.iter().all(|&h| h == T::zero())
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a - b)
    }

    pub fn neg(&self) -> Self {
        Jet2 {
            n: self.n,
            value: -self.value,
            grad: self.grad.iter().map(|&g| -g).collect(),
            hess: self.hess.iter().map(|&h| -h).collect(),
        }
    }

    fn zip(&self, o: &Self, f: impl Fn(T, T) -> T) -> Self {
        debug_assert_eq!(self.n, o.n);
        Jet2 {
            n: self.n,
            value: f(self.value, o.value),
            grad: self.grad.iter().zip(&o.grad).map(|(&a, &b)| f(a, b)).collect(),
            hess: self.hess.iter().zip(&o.hess).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        debug_assert_eq!(self.n, o.n);
        let n = self.n;
        let value = self.value * o.value;
        let grad: Vec<T> = (0..n)
            .map(|i| self.grad[i] * o.value + self.value * o.grad[i])
            .collect();
        let mut hess = Vec::with_capacity(tri(n));
        for i in 0..n {
            for j in i..n {
                hess.push(
                    self.hess(i, j) * o.value
                        + self.value * o.hess(i, j)
                        + self.grad[i] * o.grad[j]
                        + self.grad[j] * o.grad[i],
                );
            }
        }
        Jet2 { n, value, grad, hess }
    }

    /// Quotient rule applied directly: q = a/b, q_i = (a_i - q b_i)/b,
    /// q_ij = (a_ij - q b_ij - q_i b_j - q_j b_i)/b. Caller guards b != 0.
    pub fn div(&self, o: &Self) -> Self {
        debug_assert_eq!(self.n, o.n);
        let n = self.n;
        let q = self.value / o.value;
        let grad: Vec<T> = (0..n)
            .map(|i| (self.grad[i] - q * o.grad[i]) / o.value)
            .collect();
        let mut hess = Vec::with_capacity(tri(n));
        for i in 0..n {
            for j in i..n {
                hess.push(
                    (self.hess(i, j)
                        - q * o.hess(i, j)
                        - grad[i] * o.grad[j]
                        - grad[j] * o.grad[i])
                        / o.value,
                );
            }
        }
        Jet2 { n, value: q, grad, hess }
    }

    /// Chain rule through a scalar function with the given value and first
    /// two derivatives at `self.value`.
    pub fn chain(&self, value: T, d1: T, d2: T) -> Self {
        let n = self.n;
        let grad: Vec<T> = self.grad.iter().map(|&g| d1 * g).collect();
        let mut hess = Vec::with_capacity(tri(n));
        for i in 0..n {
            for j in i..n {
                hess.push(d1 * self.hess(i, j) + d2 * self.grad[i] * self.grad[j]);
            }
        }
        Jet2 { n, value, grad, hess }
    }

    /// Power with a constant exponent, using the power rule. Valid for
    /// negative bases when the exponent is an integer (IEEE `powf` semantics).
    pub fn pow_const(&self, c: T) -> Self {
        let u = self.value;
        let value = u.powf(c);
        let d1 = if c == T::zero() { T::zero() } else { c * u.powf(c - T::one()) };
        let cc = c * (c - T::one());
        let d2 = if cc == T::zero() { T::zero() } else { cc * u.powf(c - T::two()) };
        self.chain(value, d1, d2)
    }

    pub fn apply(&self, func: Func) -> Self {
        let u = self.value;
        match func {
            Func::Sin => self.chain(u.sin(), u.cos(), -u.sin()),
            Func::Cos => self.chain(u.cos(), -u.sin(), -u.cos()),
            Func::Tan => {
                let t = u.tan();
                let sec2 = T::one() + t * t;
                self.chain(t, sec2, T::two() * t * sec2)
            }
            Func::Sinh => self.chain(u.sinh(), u.cosh(), u.sinh()),
            Func::Cosh => self.chain(u.cosh(), u.sinh(), u.cosh()),
            Func::Tanh => {
                let t = u.tanh();
                let sech2 = T::one() - t * t;
                self.chain(t, sech2, -T::two() * t * sech2)
            }
            Func::Exp => {
                let e = u.exp();
                self.chain(e, e, e)
            }
            Func::Log => self.chain(u.ln(), u.recip(), -(u * u).recip()),
            Func::Sqrt => {
                let s = u.sqrt();
                let d1 = (T::two() * s).recip();
                self.chain(s, d1, -d1 / (T::two() * u))
            }
        }
    }
}

struct NodeDisplay<'a, T> {
    node: &'a Node<T>,
    coords: &'a [String],
}

impl<T: Real> fmt::Display for NodeDisplay<'_, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        super::fmt_node(self.node, self.coords, 0, f)
    }
}

fn subexpr<T: Real>(node: &Node<T>, coords: &[String]) -> String {
    NodeDisplay { node, coords }.to_string()
}

impl<T: Real> Expression<T> {
    /// Evaluate the value only.
    pub fn eval(&self, point: &[T]) -> Result<T, EvalError> {
        if point.len() != self.dim() {
            return Err(EvalError::PointDim { expected: self.dim(), found: point.len() });
        }
        eval_value(self.root(), point, self.coords())
    }

    /// Evaluate value, gradient, and Hessian at `point`.
    pub fn eval_jet2(&self, point: &[T]) -> Result<Jet2<T>, EvalError> {
        if point.len() != self.dim() {
            return Err(EvalError::PointDim { expected: self.dim(), found: point.len() });
        }
        eval_jet(self.root(), point, self.coords())
    }
}

fn check_unary_domain<T: Real>(
    func: Func,
    u: T,
    node: &Node<T>,
    coords: &[String],
) -> Result<(), EvalError> {
    match func {
        Func::Log if u <= T::zero() => Err(EvalError::Domain {
            what: format!("logarithm of non-positive value {u}"),
            subexpr: subexpr(node, coords),
        }),
        Func::Sqrt if u < T::zero() => Err(EvalError::Domain {
            what: format!("square root of negative value {u}"),
            subexpr: subexpr(node, coords),
        }),
        _ => Ok(()),
    }
}

fn eval_value<T: Real>(node: &Node<T>, point: &[T], coords: &[String]) -> Result<T, EvalError> {
    let v = match node {
        Node::Num(v) => *v,
        Node::Var(i) => point[*i],
        Node::Neg(a) => -eval_value(a, point, coords)?,
        Node::Bin(op, a, b) => {
            let x = eval_value(a, point, coords)?;
            let y = eval_value(b, point, coords)?;
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => {
                    if y == T::zero() {
                        return Err(EvalError::DivisionByZero {
                            subexpr: subexpr(node, coords),
                        });
                    }
                    x / y
                }
                BinOp::Pow => x.powf(y),
            }
        }
        Node::Fun(f, a) => {
            let u = eval_value(a, point, coords)?;
            check_unary_domain(*f, u, node, coords)?;
            match f {
                Func::Sin => u.sin(),
                Func::Cos => u.cos(),
                Func::Tan => u.tan(),
                Func::Sinh => u.sinh(),
                Func::Cosh => u.cosh(),
                Func::Tanh => u.tanh(),
                Func::Exp => u.exp(),
                Func::Log => u.ln(),
                Func::Sqrt => u.sqrt(),
            }
        }
    };
    if !v.is_finite() {
        return Err(EvalError::NonFinite { subexpr: subexpr(node, coords) });
    }
    Ok(v)
}

fn eval_jet<T: Real>(
    node: &Node<T>,
    point: &[T],
    coords: &[String],
) -> Result<Jet2<T>, EvalError> {
    let n = point.len();
    let jet = match node {
        Node::Num(v) => Jet2::constant(n, *v),
        Node::Var(i) => Jet2::variable(n, *i, point[*i]),
        Node::Neg(a) => eval_jet(a, point, coords)?.neg(),
        Node::Bin(op, a, b) => {
            let x = eval_jet(a, point, coords)?;
            let y = eval_jet(b, point, coords)?;
            match op {
                BinOp::Add => x.add(&y),
                BinOp::Sub => x.sub(&y),
                BinOp::Mul => x.mul(&y),
                BinOp::Div => {
                    if y.value() == T::zero() {
                        return Err(EvalError::DivisionByZero {
                            subexpr: subexpr(node, coords),
                        });
                    }
                    x.div(&y)
                }
                BinOp::Pow => {
                    if y.is_constant() {
                        x.pow_const(y.value())
                    } else {
                        // General exponent: x^y = exp(y * log x), needs x > 0.
                        if x.value() <= T::zero() {
                            return Err(EvalError::Domain {
                                what: format!(
                                    "power with non-constant exponent needs positive base, got {}",
                                    x.value()
                                ),
                                subexpr: subexpr(node, coords),
                            });
                        }
                        y.mul(&x.apply(Func::Log)).apply(Func::Exp)
                    }
                }
            }
        }
        Node::Fun(f, a) => {
            let u = eval_jet(a, point, coords)?;
            check_unary_domain(*f, u.value(), node, coords)?;
            u.apply(*f)
        }
    };
    if !jet.is_finite() {
        return Err(EvalError::NonFinite { subexpr: subexpr(node, coords) });
    }
    Ok(jet)
}
