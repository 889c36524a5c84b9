use std::fmt;

use super::number::{Dual, Number};

/// Unary functions understood by the expression language.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Tanh,
    Atanh,
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Abs,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "tanh" => Func::Tanh,
            "atanh" | "artanh" | "arctanh" => Func::Atanh,
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Tanh => "tanh",
            Func::Atanh => "atanh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
        }
    }
}

/// Expression tree. Variables are referenced by index into the owning
/// [`Expression`]'s variable list.
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    /// Integer power, `x^3`, `x^-2`.
    PowI(Box<Node>, i32),
    /// Constant real power, `x^1.5`.
    PowF(Box<Node>, f64),
    /// General power `x^y` with a non-constant exponent.
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainKind {
    DivisionByZero,
    LogOfNonPositive,
    SqrtOfNegative,
    AtanhOutsideUnitInterval,
    NegativeBaseRealPower,
    ZeroToNegativePower,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DomainKind::DivisionByZero => "division by zero",
            DomainKind::LogOfNonPositive => "log of a non-positive value",
            DomainKind::SqrtOfNegative => "sqrt of a negative value",
            DomainKind::AtanhOutsideUnitInterval => "atanh argument outside (-1, 1)",
            DomainKind::NegativeBaseRealPower => "negative base raised to a non-integer power",
            DomainKind::ZeroToNegativePower => "zero raised to a negative power",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("domain error: {kind} in `{subexpression}` (argument {argument})")]
    Domain {
        kind: DomainKind,
        subexpression: String,
        argument: f64,
    },
    #[error("non-finite result in `{subexpression}`")]
    NonFinite { subexpression: String },
    #[error("expected {expected} coordinates, got {found}")]
    Arity { expected: usize, found: usize },
}

/// A parsed scalar expression over a fixed, ordered list of variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Expression {
    root: Node,
    variables: Vec<String>,
}

impl Expression {
    /// Wraps a tree built in code. Panics if a variable index is out of range.
    pub fn from_node(root: Node, variables: Vec<String>) -> Expression {
        assert!(
            max_var(&root).is_none_or(|m| m < variables.len()),
            "variable index out of range"
        );
        Expression { root, variables }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn arity(&self) -> usize {
        self.variables.len()
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        self.eval_with(point)
    }

    pub fn eval_with<N: Number>(&self, point: &[N]) -> Result<N, EvalError> {
        if point.len() != self.arity() {
            return Err(EvalError::Arity {
                expected: self.arity(),
                found: point.len(),
            });
        }
        eval_node(&self.root, point, &self.variables)
    }

    /// Exact gradient by one forward pass per coordinate.
    pub fn gradient(&self, point: &[f64]) -> Result<Vec<f64>, EvalError> {
        let n = self.arity();
        let mut grad = vec![0.0; n];
        let mut seeded: Vec<Dual<f64>> = point.iter().map(|&p| Dual::lift(p)).collect();
        for k in 0..n {
            seeded[k].eps = 1.0;
            grad[k] = self.eval_with(&seeded)?.eps;
            seeded[k].eps = 0.0;
        }
        Ok(grad)
    }

    /// Exact Hessian from hyper-dual passes; entry `(k, l)` and `(l, k)` come
    /// from the same pass and are bitwise equal.
    pub fn hessian(&self, point: &[f64]) -> Result<Vec<Vec<f64>>, EvalError> {
        let n = self.arity();
        let mut h = vec![vec![0.0; n]; n];
        for k in 0..n {
            for l in k..n {
                let seeded = hyper_seed(point, k, l);
                let v = self.eval_with(&seeded)?.eps.eps;
                h[k][l] = v;
                h[l][k] = v;
            }
        }
        Ok(h)
    }
}

/// Point lifted to `Dual<Dual<f64>>` with the outer direction `k` and the
/// inner direction `l`.
pub(crate) fn hyper_seed(point: &[f64], k: usize, l: usize) -> Vec<Dual<Dual<f64>>> {
    point
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            Dual::new(
                Dual::variable(p, if j == l { 1.0 } else { 0.0 }),
                Dual::constant(if j == k { 1.0 } else { 0.0 }),
            )
        })
        .collect()
}

fn max_var(node: &Node) -> Option<usize> {
    match node {
        Node::Const(_) => None,
        Node::Var(i) => Some(*i),
        Node::Neg(a) | Node::PowI(a, _) | Node::PowF(a, _) | Node::Call(_, a) => max_var(a),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
            match (max_var(a), max_var(b)) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            }
        }
    }
}

fn domain_err(kind: DomainKind, node: &Node, names: &[String], argument: f64) -> EvalError {
    EvalError::Domain {
        kind,
        subexpression: Printer { node, names }.to_string(),
        argument,
    }
}

fn eval_node<N: Number>(node: &Node, vars: &[N], names: &[String]) -> Result<N, EvalError> {
    let out = match node {
        Node::Const(c) => return Ok(N::constant(*c)),
        Node::Var(i) => return Ok(vars[*i]),
        Node::Neg(a) => -eval_node(a, vars, names)?,
        Node::Add(a, b) => eval_node(a, vars, names)? + eval_node(b, vars, names)?,
        Node::Sub(a, b) => eval_node(a, vars, names)? - eval_node(b, vars, names)?,
        Node::Mul(a, b) => eval_node(a, vars, names)? * eval_node(b, vars, names)?,
        Node::Div(a, b) => {
            let num = eval_node(a, vars, names)?;
            let den = eval_node(b, vars, names)?;
            if den.value() == 0.0 {
                return Err(domain_err(DomainKind::DivisionByZero, node, names, 0.0));
            }
            num / den
        }
        Node::PowI(a, n) => {
            let base = eval_node(a, vars, names)?;
            if *n < 0 && base.value() == 0.0 {
                return Err(domain_err(DomainKind::ZeroToNegativePower, node, names, 0.0));
            }
            base.powi(*n)
        }
        Node::PowF(a, c) => {
            let base = eval_node(a, vars, names)?;
            let b = base.value();
            if b < 0.0 {
                return Err(domain_err(DomainKind::NegativeBaseRealPower, node, names, b));
            }
            if b == 0.0 && *c < 0.0 {
                return Err(domain_err(DomainKind::ZeroToNegativePower, node, names, b));
            }
            base.powf(*c)
        }
        Node::Pow(a, e) => {
            let base = eval_node(a, vars, names)?;
            let exponent = eval_node(e, vars, names)?;
            let b = base.value();
            if b <= 0.0 {
                return Err(domain_err(DomainKind::NegativeBaseRealPower, node, names, b));
            }
            (exponent * base.ln()).exp()
        }
        Node::Call(func, a) => {
            let x = eval_node(a, vars, names)?;
            let v = x.value();
            match func {
                Func::Tanh => x.tanh(),
                Func::Atanh => {
                    if !(v.abs() < 1.0) {
                        return Err(domain_err(DomainKind::AtanhOutsideUnitInterval, node, names, v));
                    }
                    x.atanh()
                }
                Func::Exp => x.exp(),
                Func::Log => {
                    if !(v > 0.0) {
                        return Err(domain_err(DomainKind::LogOfNonPositive, node, names, v));
                    }
                    x.ln()
                }
                Func::Sqrt => {
                    if v < 0.0 {
                        return Err(domain_err(DomainKind::SqrtOfNegative, node, names, v));
                    }
                    x.sqrt()
                }
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Abs => x.abs(),
            }
        }
    };
    if out.all_finite() {
        Ok(out)
    } else {
        Err(EvalError::NonFinite {
            subexpression: Printer { node, names }.to_string(),
        })
    }
}

// Binding strength used by the printer; mirrors the parser.
fn precedence(node: &Node) -> u8 {
    match node {
        Node::Add(..) | Node::Sub(..) => 1,
        Node::Mul(..) | Node::Div(..) => 2,
        Node::Neg(..) => 3,
        Node::PowI(..) | Node::PowF(..) | Node::Pow(..) => 4,
        Node::Const(_) | Node::Var(_) | Node::Call(..) => 5,
    }
}

struct Printer<'a> {
    node: &'a Node,
    names: &'a [String],
}

impl Printer<'_> {
    fn child<'b>(&'b self, node: &'b Node) -> Printer<'b> {
        Printer {
            node,
            names: self.names,
        }
    }

    fn write_wrapped(&self, f: &mut fmt::Formatter<'_>, node: &Node, wrap: bool) -> fmt::Result {
        if wrap {
            write!(f, "({})", self.child(node))
        } else {
            write!(f, "{}", self.child(node))
        }
    }

    fn binary(&self, f: &mut fmt::Formatter<'_>, a: &Node, op: &str, b: &Node, prec: u8) -> fmt::Result {
        self.write_wrapped(f, a, precedence(a) < prec)?;
        write!(f, " {op} ")?;
        self.write_wrapped(f, b, precedence(b) <= prec)
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    if c < 0.0 || (c == 0.0 && c.is_sign_negative()) {
        write!(f, "({c:?})")
    } else {
        write!(f, "{c:?}")
    }
}

impl fmt::Display for Printer<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node {
            Node::Const(c) => write_number(f, *c),
            Node::Var(i) => f.write_str(&self.names[*i]),
            Node::Neg(a) => {
                f.write_str("-")?;
                self.write_wrapped(f, a, precedence(a) < 3)
            }
            Node::Add(a, b) => self.binary(f, a, "+", b, 1),
            Node::Sub(a, b) => self.binary(f, a, "-", b, 1),
            Node::Mul(a, b) => self.binary(f, a, "*", b, 2),
            Node::Div(a, b) => self.binary(f, a, "/", b, 2),
            Node::PowI(a, n) => {
                self.write_wrapped(f, a, precedence(a) < 5)?;
                write!(f, "^{n}")
            }
            Node::PowF(a, c) => {
                self.write_wrapped(f, a, precedence(a) < 5)?;
                write!(f, "^{c:?}")
            }
            Node::Pow(a, e) => {
                self.write_wrapped(f, a, precedence(a) < 5)?;
                f.write_str("^")?;
                self.write_wrapped(f, e, precedence(e) < 3)
            }
            Node::Call(func, a) => write!(f, "{}({})", func.name(), self.child(a)),
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Printer {
            node: &self.root,
            names: &self.variables,
        }
        .fmt(f)
    }
}
