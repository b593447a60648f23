//! The metric/warping-function expression language.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := factor (("*" | "/") factor)*
//! factor  := "-" factor | power
//! power   := primary ("^" factor)?          // right-associative
//! primary := number | ident | ident "(" expr ")" | "(" expr ")"
//! number  := digits ("." digits?)? (("e"|"E") ("+"|"-")? digits)?
//! ident   := [A-Za-z_][A-Za-z0-9_]*
//! ```
//!
//! `^` binds tighter than unary minus, so `-t^2` is `-(t^2)`. Every variable
//! reference is resolved against the declared coordinate list at parse time,
//! and the resulting tree is immutable; evaluation is pure.

mod jet;
mod parse;

pub use jet::{EvalError, Jet2};
pub use parse::{parse, ParseError};

use std::fmt;
use std::sync::Arc;

use crate::scalar::Real;

/// Unary function set. Fixed: covers the catalog charts (trigonometric for
/// spheres, hyperbolic/exponential for warps) without open-ended symbolics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Expression tree node. Variables are indices into the owning
/// [`Expression`]'s coordinate list.
#[derive(Clone, Debug, PartialEq)]
pub enum Node<T> {
    Num(T),
    Var(usize),
    Neg(Box<Node<T>>),
    Bin(BinOp, Box<Node<T>>, Box<Node<T>>),
    Fun(Func, Box<Node<T>>),
}

/// A parsed scalar-valued formula over chart coordinates, differentiable to
/// order two via [`Expression::eval_jet2`].
#[derive(Clone, Debug, PartialEq)]
pub struct Expression<T> {
    root: Node<T>,
    coords: Arc<[String]>,
}

impl<T: Real> Expression<T> {
    pub(crate) fn from_parts(root: Node<T>, coords: Arc<[String]>) -> Self {
        Expression { root, coords }
    }

    /// The coordinate list this expression is bound to.
    pub fn coords(&self) -> &Arc<[String]> {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Names of the coordinates actually referenced, in coordinate order.
    pub fn free_vars(&self) -> Vec<&str> {
        let mut used = vec![false; self.coords.len()];
        mark_vars(&self.root, &mut used);
        used.iter()
            .enumerate()
            .filter(|(_, &u)| u)
            .map(|(i, _)| self.coords[i].as_str())
            .collect()
    }

    /// A constant expression over the given coordinates.
    pub fn constant(coords: Arc<[String]>, value: T) -> Self {
        Expression { root: Node::Num(value), coords }
    }

    /// The expression `coords[idx]`.
    pub fn coordinate(coords: Arc<[String]>, idx: usize) -> Self {
        assert!(idx < coords.len(), "coordinate index in range");
        Expression { root: Node::Var(idx), coords }
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self.root, Node::Num(v) if v == T::zero())
    }

    /// Rebind onto a new coordinate list; `map[i]` is the index in
    /// `new_coords` of the old coordinate `i`. Used to embed factor-chart
    /// expressions into a product chart.
    pub fn rebind(&self, new_coords: Arc<[String]>, map: &[usize]) -> Self {
        assert_eq!(map.len(), self.coords.len());
        fn go<T: Clone>(node: &Node<T>, map: &[usize]) -> Node<T> {
            match node {
                Node::Num(v) => Node::Num(v.clone()),
                Node::Var(i) => Node::Var(map[*i]),
                Node::Neg(a) => Node::Neg(Box::new(go(a, map))),
                Node::Bin(op, a, b) => {
                    Node::Bin(*op, Box::new(go(a, map)), Box::new(go(b, map)))
                }
                Node::Fun(f, a) => Node::Fun(*f, Box::new(go(a, map))),
            }
        }
        Expression { root: go(&self.root, map), coords: new_coords }
    }

    fn combine(op: BinOp, a: &Self, b: &Self) -> Self {
        assert_eq!(a.coords, b.coords, "expression arithmetic needs matching coordinates");
        Expression {
            root: Node::Bin(op, Box::new(a.root.clone()), Box::new(b.root.clone())),
            coords: a.coords.clone(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::combine(BinOp::Add, self, other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::combine(BinOp::Sub, self, other)
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::combine(BinOp::Mul, self, other)
    }

    pub fn div(&self, other: &Self) -> Self {
        Self::combine(BinOp::Div, self, other)
    }

    pub fn neg(&self) -> Self {
        Expression {
            root: Node::Neg(Box::new(self.root.clone())),
            coords: self.coords.clone(),
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        Expression {
            root: Node::Bin(BinOp::Mul, Box::new(Node::Num(s)), Box::new(self.root.clone())),
            coords: self.coords.clone(),
        }
    }

    pub fn squared(&self) -> Self {
        Self::combine(BinOp::Mul, self, self)
    }

    pub fn apply_fn(&self, func: Func) -> Self {
        Expression {
            root: Node::Fun(func, Box::new(self.root.clone())),
            coords: self.coords.clone(),
        }
    }

    pub fn pow_constant(&self, exponent: T) -> Self {
        Expression {
            root: Node::Bin(
                BinOp::Pow,
                Box::new(self.root.clone()),
                Box::new(Node::Num(exponent)),
            ),
            coords: self.coords.clone(),
        }
    }

    pub(crate) fn root(&self) -> &Node<T> {
        &self.root
    }
}

fn mark_vars<T>(node: &Node<T>, used: &mut [bool]) {
    match node {
        Node::Num(_) => {}
        Node::Var(i) => used[*i] = true,
        Node::Neg(a) | Node::Fun(_, a) => mark_vars(a, used),
        Node::Bin(_, a, b) => {
            mark_vars(a, used);
            mark_vars(b, used);
        }
    }
}

// Pretty-printing precedence levels, loosest to tightest.
const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn node_prec<T>(node: &Node<T>) -> u8 {
    match node {
        Node::Num(_) | Node::Var(_) | Node::Fun(..) => PREC_ATOM,
        Node::Neg(_) => PREC_NEG,
        Node::Bin(BinOp::Add | BinOp::Sub, ..) => PREC_ADD,
        Node::Bin(BinOp::Mul | BinOp::Div, ..) => PREC_MUL,
        Node::Bin(BinOp::Pow, ..) => PREC_POW,
    }
}

fn fmt_node<T: Real>(
    node: &Node<T>,
    coords: &[String],
    min_prec: u8,
    out: &mut fmt::Formatter<'_>,
) -> fmt::Result {
    let prec = node_prec(node);
    let parens = prec < min_prec || matches!(node, Node::Num(v) if *v < T::zero());
    if parens {
        write!(out, "(")?;
    }
    match node {
        Node::Num(v) => write!(out, "{v}")?,
        Node::Var(i) => write!(out, "{}", coords[*i])?,
        Node::Neg(a) => {
            write!(out, "-")?;
            fmt_node(a, coords, PREC_NEG, out)?;
        }
        Node::Bin(op, a, b) => match op {
            BinOp::Add | BinOp::Sub => {
                fmt_node(a, coords, PREC_ADD, out)?;
                write!(out, "{}", if *op == BinOp::Add { " + " } else { " - " })?;
                // Right operand one level tighter so a - (b - c) keeps parens.
                fmt_node(b, coords, PREC_MUL, out)?;
            }
            BinOp::Mul | BinOp::Div => {
                fmt_node(a, coords, PREC_MUL, out)?;
                write!(out, "{}", if *op == BinOp::Mul { "*" } else { "/" })?;
                fmt_node(b, coords, PREC_NEG, out)?;
            }
            BinOp::Pow => {
                // Base must be an atom; exponent may be a factor (so -2 or a
                // nested power prints without parens).
                fmt_node(a, coords, PREC_ATOM, out)?;
                write!(out, "^")?;
                fmt_node(b, coords, PREC_NEG, out)?;
            }
        },
        Node::Fun(f, a) => {
            write!(out, "{}(", f.name())?;
            fmt_node(a, coords, 0, out)?;
            write!(out, ")")?;
        }
    }
    if parens {
        write!(out, ")")?;
    }
    Ok(())
}

impl<T: Real> fmt::Display for Expression<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_node(&self.root, &self.coords, 0, f)
    }
}

/// Build a shared coordinate list.
pub fn coords_of(names: &[&str]) -> Arc<[String]> {
    names.iter().map(|s| s.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(src: &str, coords: &[&str]) -> Expression<f64> {
        parse(src, &coords_of(coords)).unwrap()
    }

    #[test]
    fn literal_arithmetic() {
        let e = p("1+2", &[]);
        assert_eq!(e.eval(&[]).unwrap(), 3.0);
    }

    #[test]
    fn free_vars_are_tracked() {
        let e = p("exp(2*t)", &["t"]);
        assert_eq!(e.free_vars(), vec!["t"]);
        let e = p("x + 1", &["t", "x"]);
        assert_eq!(e.free_vars(), vec!["x"]);
    }

    #[test]
    fn pow_binds_tighter_than_unary_minus() {
        let e = p("-t^2", &["t"]);
        assert_eq!(e.eval(&[3.0]).unwrap(), -9.0);
        let e = p("(-t)^2", &["t"]);
        assert_eq!(e.eval(&[3.0]).unwrap(), 9.0);
    }

    #[test]
    fn pow_is_right_associative() {
        let e = p("2^3^2", &[]);
        assert_eq!(e.eval(&[]).unwrap(), 512.0);
    }

    #[test]
    fn negative_exponent_in_power() {
        let e = p("2^-2", &[]);
        assert_eq!(e.eval(&[]).unwrap(), 0.25);
    }

    #[test]
    fn display_round_trips_to_identical_tree() {
        for (src, coords) in [
            ("1 + 2*x - x^2", vec!["x"]),
            ("-x^2 + sin(x*y)/cos(y)", vec!["x", "y"]),
            ("exp(2*t) * (1 - t)^3", vec!["t"]),
            ("a/(b/c)", vec!["a", "b", "c"]),
            ("a - (b - c)", vec!["a", "b", "c"]),
            ("2^-3 * x", vec!["x"]),
            ("sqrt(1 + t^2)^1.5", vec!["t"]),
        ] {
            let e = p(src, &coords);
            let printed = e.to_string();
            let e2 = p(&printed, &coords);
            assert_eq!(e, e2, "round-trip of `{src}` via `{printed}`");
        }
    }

    #[test]
    fn rebind_shifts_variables() {
        let e = p("x^2", &["x"]);
        let ambient = coords_of(&["t", "x"]);
        let shifted = e.rebind(ambient, &[1]);
        assert_eq!(shifted.eval(&[99.0, 3.0]).unwrap(), 9.0);
        assert_eq!(shifted.free_vars(), vec!["x"]);
    }
}
