//! Symbolic rate expressions.
//!
//! Rate laws are stored as small ASTs whose leaves reference species and
//! parameters by index into the owning network. Differentiation is symbolic
//! and closed under the node set, which is why exponents must be constant.

use std::fmt;

use thiserror::Error;

/// Node of a rate expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Param(usize),
    Species(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Base raised to a constant exponent.
    Pow(Box<Expr>, f64),
    Sqrt(Box<Expr>),
}

/// Numerical failure while evaluating an expression.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of negative value {0}")]
    NegativeSqrt(f64),
    #[error("non-finite result ({0})")]
    NonFinite(f64),
}

/// Names used when printing an expression back to the DSL.
pub struct Symbols<'a> {
    pub species: &'a [String],
    pub params: &'a [String],
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    fn is_one(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 1.0)
    }

    /// Evaluates the expression at concentrations `x` with parameter values `params`.
    pub fn eval(&self, x: &[f64], params: &[f64]) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Param(i) => params[*i],
            Expr::Species(i) => x[*i],
            Expr::Neg(a) => -a.eval(x, params)?,
            Expr::Add(a, b) => a.eval(x, params)? + b.eval(x, params)?,
            Expr::Sub(a, b) => a.eval(x, params)? - b.eval(x, params)?,
            Expr::Mul(a, b) => a.eval(x, params)? * b.eval(x, params)?,
            Expr::Div(a, b) => {
                let num = a.eval(x, params)?;
                let den = b.eval(x, params)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                num / den
            }
            Expr::Pow(a, e) => {
                let base = a.eval(x, params)?;
                if *e == 0.0 {
                    1.0
                } else if e.fract() == 0.0 && e.abs() <= i32::MAX as f64 {
                    if base == 0.0 && *e < 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    base.powi(*e as i32)
                } else {
                    if base == 0.0 && *e < 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    base.powf(*e)
                }
            }
            Expr::Sqrt(a) => {
                let v = a.eval(x, params)?;
                if v < 0.0 {
                    return Err(EvalError::NegativeSqrt(v));
                }
                v.sqrt()
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite(v))
        }
    }

    /// Symbolic partial derivative with respect to species `var`.
    pub fn diff(&self, var: usize) -> Expr {
        match self {
            Expr::Num(_) | Expr::Param(_) => Expr::Num(0.0),
            Expr::Species(i) => Expr::Num(if *i == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.diff(var)),
            Expr::Add(a, b) => add(a.diff(var), b.diff(var)),
            Expr::Sub(a, b) => sub(a.diff(var), b.diff(var)),
            Expr::Mul(a, b) => add(
                mul(a.diff(var), (**b).clone()),
                mul((**a).clone(), b.diff(var)),
            ),
            Expr::Div(a, b) => {
                // (a'b - ab') / b^2
                let da = a.diff(var);
                let db = b.diff(var);
                if db.is_zero() {
                    return div(da, (**b).clone());
                }
                div(
                    sub(mul(da, (**b).clone()), mul((**a).clone(), db)),
                    pow((**b).clone(), 2.0),
                )
            }
            Expr::Pow(a, e) => {
                let da = a.diff(var);
                if da.is_zero() || *e == 0.0 {
                    return Expr::Num(0.0);
                }
                mul(mul(Expr::Num(*e), pow((**a).clone(), e - 1.0)), da)
            }
            Expr::Sqrt(a) => {
                let da = a.diff(var);
                if da.is_zero() {
                    return Expr::Num(0.0);
                }
                div(da, mul(Expr::Num(2.0), Expr::Sqrt(a.clone())))
            }
        }
    }

    /// True if the expression references any species.
    pub fn depends_on_species(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Param(_) => false,
            Expr::Species(_) => true,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Sqrt(a) => a.depends_on_species(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.depends_on_species() || b.depends_on_species()
            }
        }
    }

    /// Rewrites species indices through `map` (old index -> new index).
    pub fn remap_species(&self, map: &[usize]) -> Expr {
        self.map_leaves(&|e| match e {
            Expr::Species(i) => Some(Expr::Species(map[*i])),
            _ => None,
        })
    }

    /// Replaces every parameter reference by its numeric value.
    pub fn inline_params(&self, params: &[f64]) -> Expr {
        self.map_leaves(&|e| match e {
            Expr::Param(i) => Some(Expr::Num(params[*i])),
            _ => None,
        })
    }

    fn map_leaves(&self, f: &dyn Fn(&Expr) -> Option<Expr>) -> Expr {
        if let Some(e) = f(self) {
            return e;
        }
        let m = |a: &Expr| Box::new(a.map_leaves(f));
        match self {
            Expr::Num(_) | Expr::Param(_) | Expr::Species(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(m(a)),
            Expr::Add(a, b) => Expr::Add(m(a), m(b)),
            Expr::Sub(a, b) => Expr::Sub(m(a), m(b)),
            Expr::Mul(a, b) => Expr::Mul(m(a), m(b)),
            Expr::Div(a, b) => Expr::Div(m(a), m(b)),
            Expr::Pow(a, e) => Expr::Pow(m(a), *e),
            Expr::Sqrt(a) => Expr::Sqrt(m(a)),
        }
    }

    /// Renders in DSL syntax using the given symbol table.
    pub fn display<'a>(&'a self, symbols: &'a Symbols<'a>) -> DisplayExpr<'a> {
        DisplayExpr { expr: self, symbols }
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x + y),
        (a, b) if a.is_zero() => b,
        (a, b) if b.is_zero() => a,
        (a, b) => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x - y),
        (a, b) if b.is_zero() => a,
        (a, b) if a.is_zero() => neg(b),
        (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x * y),
        (a, _) if a.is_zero() => Expr::Num(0.0),
        (_, b) if b.is_zero() => Expr::Num(0.0),
        (a, b) if a.is_one() => b,
        (a, b) if b.is_one() => a,
        (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (a, _) if a.is_zero() => Expr::Num(0.0),
        (a, b) if b.is_one() => a,
        (a, b) => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, e: f64) -> Expr {
    if e == 1.0 {
        a
    } else if e == 0.0 {
        Expr::Num(1.0)
    } else {
        Expr::Pow(Box::new(a), e)
    }
}

pub struct DisplayExpr<'a> {
    expr: &'a Expr,
    symbols: &'a Symbols<'a>,
}

fn fmt_num(v: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if v < 0.0 || (v == 0.0 && v.is_sign_negative()) {
        write!(f, "(-{:?})", -v)
    } else {
        write!(f, "{v:?}")
    }
}

impl<'a> fmt::Display for DisplayExpr<'a> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.symbols;
        let sub = |e: &'a Expr| DisplayExpr { expr: e, symbols: s };
        match self.expr {
            Expr::Num(v) => fmt_num(*v, f),
            Expr::Param(i) => write!(f, "{}", s.params[*i]),
            Expr::Species(i) => write!(f, "{}", s.species[*i]),
            Expr::Neg(a) => write!(f, "(-{})", sub(a)),
            Expr::Add(a, b) => write!(f, "({} + {})", sub(a), sub(b)),
            Expr::Sub(a, b) => write!(f, "({} - {})", sub(a), sub(b)),
            Expr::Mul(a, b) => write!(f, "({} * {})", sub(a), sub(b)),
            Expr::Div(a, b) => write!(f, "({} / {})", sub(a), sub(b)),
            Expr::Pow(a, e) => {
                write!(f, "({}^", sub(a))?;
                fmt_num(*e, f)?;
                write!(f, ")")
            }
            Expr::Sqrt(a) => write!(f, "sqrt({})", sub(a)),
        }
    }
}
