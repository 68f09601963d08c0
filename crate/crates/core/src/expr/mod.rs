//! Closed-form expressions over `n` real variables and maps built from them.
//!
//! Expressions are trees of constants, variables, the four arithmetic
//! operators, nonnegative integer powers, `sqrt` and `exp`. Every node type
//! has an exact derivative that is again an [`Expr`], so gradients,
//! Jacobians and Hessians are all evaluated from symbolic trees.
//!
//! Division and square-root nodes carry implicit domain guards
//! (denominator ≠ 0, radicand ≥ 0) that are checked during evaluation.

mod parse;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::{parse_expr, parse_map, parse_map_in, ParseError};

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
pub enum EvalError {
    #[error("division by zero{}", at(.component))]
    DivisionByZero { component: Option<usize> },
    #[error("square root of a negative number{}", at(.component))]
    NegativeSqrt { component: Option<usize> },
    #[error("non-finite value{}", at(.component))]
    NonFinite { component: Option<usize> },
    #[error("variable x{index} outside a point of dimension {dim}")]
    VariableOutOfRange { index: usize, dim: usize },
}

fn at(component: &Option<usize>) -> String {
    match component {
        Some(c) => format!(" in component f{}", c + 1),
        None => String::new(),
    }
}

impl EvalError {
    fn in_component(self, c: usize) -> Self {
        match self {
            EvalError::DivisionByZero { .. } => EvalError::DivisionByZero { component: Some(c) },
            EvalError::NegativeSqrt { .. } => EvalError::NegativeSqrt { component: Some(c) },
            EvalError::NonFinite { .. } => EvalError::NonFinite { component: Some(c) },
            other => other,
        }
    }
}

/// Expression tree. Variables are stored zero-based (`Var(0)` is `x1`).
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Sqrt(Box<Expr>),
    Exp(Box<Expr>),
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn var(index: usize) -> Expr {
        Expr::Var(index)
    }

    fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    /// Whether the tree has a division or square root whose guard could fail.
    fn has_guards(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Var(_) => false,
            Expr::Div(..) | Expr::Sqrt(_) => true,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Exp(a) => a.has_guards(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => a.has_guards() || b.has_guards(),
        }
    }

    // The constructors below fold constants and drop additive/multiplicative
    // identities. Nothing more: there is no algebraic simplification. A fold
    // that would discard a subtree keeps it when the subtree carries guards.

    #[allow(clippy::should_implement_trait)]
    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x + y),
            (Some(x), _) if x == 0.0 => b,
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x - y),
            (Some(x), _) if x == 0.0 => Expr::neg(b),
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(a: Expr, b: Expr) -> Expr {
        if (a.is_zero() && !b.has_guards()) || (b.is_zero() && !a.has_guards()) {
            return Expr::Const(0.0);
        }
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x * y),
            (Some(x), _) if x == 1.0 => b,
            (_, Some(y)) if y == 1.0 => a,
            (Some(x), _) if x == -1.0 => Expr::neg(b),
            (_, Some(y)) if y == -1.0 => Expr::neg(a),
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => Expr::Const(x / y),
            (_, Some(y)) if y == 1.0 => a,
            _ => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn pow(a: Expr, k: u32) -> Expr {
        match (k, a.as_const()) {
            (0, _) if !a.has_guards() => Expr::Const(1.0),
            (1, _) => a,
            (_, Some(c)) => Expr::Const(c.powi(k as i32)),
            _ => Expr::Pow(Box::new(a), k),
        }
    }

    pub fn sqrt(a: Expr) -> Expr {
        match a.as_const() {
            Some(c) if c >= 0.0 => Expr::Const(c.sqrt()),
            _ => Expr::Sqrt(Box::new(a)),
        }
    }

    pub fn exp(a: Expr) -> Expr {
        match a.as_const() {
            Some(c) => Expr::Const(c.exp()),
            None => Expr::Exp(Box::new(a)),
        }
    }

    /// Largest variable index referenced plus one (0 for a constant).
    pub fn arity(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Sqrt(a) | Expr::Exp(a) => a.arity(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.arity().max(b.arity())
            }
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Sqrt(a) | Expr::Exp(a) => 1 + a.size(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }

    /// Evaluates the expression, checking division and square-root guards.
    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        let v = self.eval_raw(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite { component: None })
        }
    }

    fn eval_raw(&self, x: &[f64]) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => *x.get(*i).ok_or(EvalError::VariableOutOfRange {
                index: i + 1,
                dim: x.len(),
            })?,
            Expr::Neg(a) => -a.eval_raw(x)?,
            Expr::Add(a, b) => a.eval_raw(x)? + b.eval_raw(x)?,
            Expr::Sub(a, b) => a.eval_raw(x)? - b.eval_raw(x)?,
            Expr::Mul(a, b) => a.eval_raw(x)? * b.eval_raw(x)?,
            Expr::Div(a, b) => {
                let den = b.eval_raw(x)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero { component: None });
                }
                a.eval_raw(x)? / den
            }
            Expr::Pow(a, k) => a.eval_raw(x)?.powi(*k as i32),
            Expr::Sqrt(a) => {
                let v = a.eval_raw(x)?;
                if v < 0.0 || v.is_nan() {
                    return Err(EvalError::NegativeSqrt { component: None });
                }
                v.sqrt()
            }
            Expr::Exp(a) => a.eval_raw(x)?.exp(),
        })
    }

    /// Exact partial derivative with respect to the zero-based variable `var`.
    pub fn derivative(&self, var: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(i) => Expr::Const(if *i == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => Expr::neg(a.derivative(var)),
            Expr::Add(a, b) => Expr::add(a.derivative(var), b.derivative(var)),
            Expr::Sub(a, b) => Expr::sub(a.derivative(var), b.derivative(var)),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.derivative(var), (**b).clone()),
                Expr::mul((**a).clone(), b.derivative(var)),
            ),
            Expr::Div(a, b) => {
                let da = a.derivative(var);
                let db = b.derivative(var);
                if db.is_zero() {
                    Expr::div(da, (**b).clone())
                } else {
                    Expr::div(
                        Expr::sub(
                            Expr::mul(da, (**b).clone()),
                            Expr::mul((**a).clone(), db),
                        ),
                        Expr::pow((**b).clone(), 2),
                    )
                }
            }
            Expr::Pow(_, 0) => Expr::Const(0.0),
            Expr::Pow(a, k) => Expr::mul(
                Expr::mul(Expr::Const(*k as f64), Expr::pow((**a).clone(), k - 1)),
                a.derivative(var),
            ),
            Expr::Sqrt(a) => Expr::div(
                a.derivative(var),
                Expr::mul(Expr::Const(2.0), self.clone()),
            ),
            Expr::Exp(a) => Expr::mul(self.clone(), a.derivative(var)),
        }
    }

    /// Replaces every variable `x_i` by `subs[i]`.
    pub fn substitute(&self, subs: &[Expr]) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(i) => subs[*i].clone(),
            Expr::Neg(a) => Expr::neg(a.substitute(subs)),
            Expr::Add(a, b) => Expr::add(a.substitute(subs), b.substitute(subs)),
            Expr::Sub(a, b) => Expr::sub(a.substitute(subs), b.substitute(subs)),
            Expr::Mul(a, b) => Expr::mul(a.substitute(subs), b.substitute(subs)),
            Expr::Div(a, b) => Expr::div(a.substitute(subs), b.substitute(subs)),
            Expr::Pow(a, k) => Expr::pow(a.substitute(subs), *k),
            Expr::Sqrt(a) => Expr::sqrt(a.substitute(subs)),
            Expr::Exp(a) => Expr::exp(a.substitute(subs)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "(")?;
            self.write_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => {
                write!(f, "({c})")
            }
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.write_at(f, 3)
            }
            Expr::Add(a, b) => binary(f, a, " + ", b, 1, 2),
            Expr::Sub(a, b) => binary(f, a, " - ", b, 1, 2),
            Expr::Mul(a, b) => binary(f, a, " * ", b, 2, 3),
            Expr::Div(a, b) => binary(f, a, " / ", b, 2, 3),
            Expr::Pow(a, k) => {
                a.write_at(f, 5)?;
                write!(f, "^{k}")
            }
            Expr::Sqrt(a) => {
                write!(f, "sqrt(")?;
                a.write_at(f, 0)?;
                write!(f, ")")
            }
            Expr::Exp(a) => {
                write!(f, "exp(")?;
                a.write_at(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

fn binary(
    f: &mut fmt::Formatter<'_>,
    a: &Expr,
    op: &str,
    b: &Expr,
    left: u8,
    right: u8,
) -> fmt::Result {
    a.write_at(f, left)?;
    write!(f, "{op}")?;
    b.write_at(f, right)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

/// Exact gradient of `e` at `x`.
pub fn grad(e: &Expr, x: &[f64]) -> Result<Vec<f64>, EvalError> {
    (0..x.len()).map(|j| e.derivative(j).eval(x)).collect()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("map has no components")]
    Empty,
    #[error("component f{component} references x{index} but the map has {n_in} inputs")]
    VariableOutOfRange {
        component: usize,
        index: usize,
        n_in: usize,
    },
    #[error("component selection {0:?} is out of range")]
    BadSelection(Vec<usize>),
    #[error("matrix of shape {rows}x{cols} does not fit a map with {n_in} inputs and {n_out} outputs")]
    Shape {
        rows: usize,
        cols: usize,
        n_in: usize,
        n_out: usize,
    },
}

/// A map ℝⁿ → ℝᵐ given by `m` component expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprMap {
    n_in: usize,
    components: Vec<Expr>,
}

impl ExprMap {
    pub fn new(n_in: usize, components: Vec<Expr>) -> Result<Self, MapError> {
        if components.is_empty() {
            return Err(MapError::Empty);
        }
        for (c, e) in components.iter().enumerate() {
            if e.arity() > n_in {
                return Err(MapError::VariableOutOfRange {
                    component: c + 1,
                    index: e.arity(),
                    n_in,
                });
            }
        }
        Ok(ExprMap { n_in, components })
    }

    /// Scalar function viewed as a map ℝⁿ → ℝ.
    pub fn scalar(n_in: usize, e: Expr) -> Result<Self, MapError> {
        Self::new(n_in, vec![e])
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.components.len()
    }

    pub fn is_square(&self) -> bool {
        self.n_in == self.n_out()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Expr {
        &self.components[i]
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        assert_eq!(x.len(), self.n_in, "point dimension mismatch");
        self.components
            .iter()
            .enumerate()
            .map(|(c, e)| e.eval(x).map_err(|err| err.in_component(c)))
            .collect()
    }

    /// Sub-map made of the listed zero-based components, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<ExprMap, MapError> {
        if indices.is_empty() || indices.iter().any(|&i| i >= self.n_out()) {
            return Err(MapError::BadSelection(indices.to_vec()));
        }
        Ok(ExprMap {
            n_in: self.n_in,
            components: indices.iter().map(|&i| self.components[i].clone()).collect(),
        })
    }

    /// `A ∘ self` for a `k × m` row-major matrix.
    pub fn compose_linear_left(&self, a: &[Vec<f64>]) -> Result<ExprMap, MapError> {
        let m = self.n_out();
        if a.is_empty() || a.iter().any(|row| row.len() != m) {
            return Err(MapError::Shape {
                rows: a.len(),
                cols: a.first().map_or(0, Vec::len),
                n_in: self.n_in,
                n_out: m,
            });
        }
        let components = a
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&self.components)
                    .fold(Expr::Const(0.0), |acc, (&w, e)| {
                        Expr::add(acc, Expr::mul(Expr::Const(w), e.clone()))
                    })
            })
            .collect();
        ExprMap::new(self.n_in, components)
    }

    /// `self ∘ A` for an `n × n` row-major matrix.
    pub fn compose_linear_right(&self, a: &[Vec<f64>]) -> Result<ExprMap, MapError> {
        let n = self.n_in;
        if a.len() != n || a.iter().any(|row| row.len() != n) {
            return Err(MapError::Shape {
                rows: a.len(),
                cols: a.first().map_or(0, Vec::len),
                n_in: n,
                n_out: self.n_out(),
            });
        }
        let subs: Vec<Expr> = a
            .iter()
            .map(|row| {
                row.iter().enumerate().fold(Expr::Const(0.0), |acc, (j, &w)| {
                    Expr::add(acc, Expr::mul(Expr::Const(w), Expr::Var(j)))
                })
            })
            .collect();
        ExprMap::new(
            n,
            self.components.iter().map(|e| e.substitute(&subs)).collect(),
        )
    }
}

impl fmt::Display for ExprMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.components.iter().enumerate() {
            writeln!(f, "f{} = {}", i + 1, e)?;
        }
        Ok(())
    }
}

/// Symbolic first and (optionally) second derivatives of a map, built once
/// and evaluated many times.
#[derive(Debug, Clone)]
pub struct MapDerivatives {
    map: ExprMap,
    jacobian: Vec<Vec<Expr>>,
    hessians: Option<Vec<Vec<Vec<Expr>>>>,
}

impl MapDerivatives {
    pub fn first_order(map: &ExprMap) -> Self {
        let n = map.n_in();
        let jacobian = map
            .components()
            .iter()
            .map(|e| (0..n).map(|j| e.derivative(j)).collect())
            .collect();
        MapDerivatives {
            map: map.clone(),
            jacobian,
            hessians: None,
        }
    }

    pub fn second_order(map: &ExprMap) -> Self {
        let mut d = Self::first_order(map);
        let n = map.n_in();
        let hessians = d
            .jacobian
            .iter()
            .map(|row| {
                let mut h = vec![vec![Expr::Const(0.0); n]; n];
                for j in 0..n {
                    for k in j..n {
                        let e = row[j].derivative(k);
                        h[k][j] = e.clone();
                        h[j][k] = e;
                    }
                }
                h
            })
            .collect();
        d.hessians = Some(hessians);
        d
    }

    pub fn map(&self) -> &ExprMap {
        &self.map
    }

    pub fn n_in(&self) -> usize {
        self.map.n_in()
    }

    pub fn n_out(&self) -> usize {
        self.map.n_out()
    }

    pub fn has_hessians(&self) -> bool {
        self.hessians.is_some()
    }

    pub fn jacobian_exprs(&self) -> &[Vec<Expr>] {
        &self.jacobian
    }

    /// Jacobian at `x` as a row-major `m × n` matrix.
    pub fn jacobian(&self, x: &[f64]) -> Result<crate::numlin::Matrix, EvalError> {
        let n = self.n_in();
        let mut data = Vec::with_capacity(self.n_out() * n);
        for (c, row) in self.jacobian.iter().enumerate() {
            for e in row {
                data.push(e.eval(x).map_err(|err| err.in_component(c))?);
            }
        }
        Ok(crate::numlin::Matrix::from_row_major(self.n_out(), n, data))
    }

    /// Gradient of component `c` at `x`.
    pub fn gradient(&self, c: usize, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.jacobian[c]
            .iter()
            .map(|e| e.eval(x).map_err(|err| err.in_component(c)))
            .collect()
    }

    /// Hessian of component `c` at `x`; panics if built first-order only.
    pub fn hessian(&self, c: usize, x: &[f64]) -> Result<Vec<Vec<f64>>, EvalError> {
        let h = &self.hessians.as_ref().expect("second derivatives not built")[c];
        h.iter()
            .map(|row| {
                row.iter()
                    .map(|e| e.eval(x).map_err(|err| err.in_component(c)))
                    .collect()
            })
            .collect()
    }
}

/// Jacobian of `map` at `x`.
pub fn jacobian(map: &ExprMap, x: &[f64]) -> Result<crate::numlin::Matrix, EvalError> {
    MapDerivatives::first_order(map).jacobian(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(src: &str) -> ExprMap {
        parse_map(src).unwrap()
    }

    #[test]
    fn king_h_at_one_one() {
        let h = map("f1 = x2*(2*x1^2*x2^2 - 9*x1*x2 + 12)");
        assert_eq!(h.eval(&[1.0, 1.0]).unwrap(), vec![5.0]);
    }

    #[test]
    fn triangular_map_at_origin() {
        let f = map("f1 = x2 - x1^2; f2 = x1; f3 = x3");
        assert_eq!(f.eval(&[0.0; 3]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn s_at_zero_is_one() {
        let s = parse_expr("sqrt(1 + x1^2) + x1").unwrap();
        assert_eq!(s.eval(&[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn power_rule_gradient() {
        let e = parse_expr("x2 - x1^2").unwrap();
        assert_eq!(grad(&e, &[3.0, 7.0]).unwrap(), vec![-6.0, 1.0]);
    }

    #[test]
    fn paunescu_zaharia_gradient_along_hyperbola() {
        let g = parse_expr("x1 - 3*x1^3*x2^2 + 2*x1^4*x2^3 + x2*x3").unwrap();
        let l = 100.0;
        let gr = grad(&g, &[l, 1.0 / l, 0.0]).unwrap();
        assert!(gr[0].abs() < 1e-9, "{gr:?}");
        assert!(gr[1].abs() < 1e-9, "{gr:?}");
        assert!((gr[2] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn jacobian_of_the_triangular_map() {
        let f = map("f1 = x2 - x1^2; f2 = x1; f3 = x3");
        let j = jacobian(&f, &[0.0, 2.0, -1.0]).unwrap();
        let expect = [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
        for (r, row) in expect.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                assert_eq!(j.get(r, c), *v);
            }
        }
    }

    #[test]
    fn domain_guards_report_component() {
        let f = map("f1 = x1; f2 = 1/x1");
        assert_eq!(
            f.eval(&[0.0]).unwrap_err(),
            EvalError::DivisionByZero { component: Some(1) }
        );
        let g = map("f1 = sqrt(x1)");
        assert_eq!(
            g.eval(&[-1.0]).unwrap_err(),
            EvalError::NegativeSqrt { component: Some(0) }
        );
        let e = map("f1 = exp(x1)");
        assert!(matches!(e.eval(&[1000.0]), Err(EvalError::NonFinite { .. })));
    }

    #[test]
    fn sqrt_derivative_carries_guard() {
        let e = parse_expr("sqrt(x1^2)").unwrap();
        assert!(e.derivative(0).eval(&[0.0]).is_err());
        assert_eq!(e.derivative(0).eval(&[-2.0]).unwrap(), -1.0);
    }

    #[test]
    fn repeated_differentiation_of_polynomial_vanishes() {
        let e = parse_expr("3*x1^3*x2 - x2^2 + 7").unwrap();
        let mut d = e.clone();
        for _ in 0..4 {
            d = d.derivative(0);
        }
        assert_eq!(d, Expr::Const(0.0));
    }

    #[test]
    fn linear_compositions() {
        let f = map("f1 = x1; f2 = exp(x2)");
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let g = f
            .compose_linear_left(&[vec![s, -s], vec![s, s]])
            .unwrap();
        let y = g.eval(&[1.0, 0.0]).unwrap();
        assert!((y[0] - 0.0).abs() < 1e-15 && (y[1] - 2.0 * s).abs() < 1e-15);
        let h = f.compose_linear_right(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(h.eval(&[0.0, 3.0]).unwrap(), vec![3.0, 1.0]);
    }

    #[test]
    fn printing_keeps_structure() {
        for src in [
            "x1 - (x2 - x3)",
            "-x1^2",
            "(-x1)^2",
            "x1 / (x2 * x3)",
            "2 * -x1",
            "(x1^2)^3",
            "sqrt(1 + x1^2) + x1",
            "x1 + (-3)",
        ] {
            let e = parse_expr(src).unwrap();
            let printed = e.to_string();
            assert_eq!(parse_expr(&printed).unwrap(), e, "{src} -> {printed}");
        }
    }
}
