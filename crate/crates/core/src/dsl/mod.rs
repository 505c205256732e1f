//! A small vector-arithmetic expression language for candidate priority functions.
//!
//! Programs are a sequence of `let` bindings followed by a single `return`
//! expression. There are no loops, no recursion and no user-defined functions,
//! so every program terminates; evaluation is additionally bounded by
//! [`EvalLimits`].
//!
//! ```
//! use cdeoh::dsl::{self, EvalLimits, InputDecl, Value};
//! use std::collections::HashMap;
//!
//! let inputs = [InputDecl::scalar("item"), InputDecl::vector("cap_remaining")];
//! let program = dsl::parse("return -(cap_remaining - item)", &inputs).unwrap();
//!
//! let mut values = HashMap::new();
//! values.insert("item", Value::Scalar(5.0));
//! values.insert("cap_remaining", Value::Vector(vec![10.0, 4.0, 7.0]));
//! let out = dsl::evaluate(&program, &values, &EvalLimits::default()).unwrap();
//! assert_eq!(out, Value::Vector(vec![-5.0, 1.0, -2.0]));
//! ```

mod eval;
mod grammar;
mod lexer;
mod parser;
mod pretty;

use std::fmt;

pub use eval::{evaluate, EvalError, EvalLimits};
pub use grammar::render_grammar;
pub use parser::{parse, ParseError};
pub use pretty::pretty_print;

/// Kind of a runtime value or a declared input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Scalar,
    Vector,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Scalar => f.write_str("scalar"),
            Kind::Vector => f.write_str("vector"),
        }
    }
}

/// A named input a program may reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputDecl {
    pub name: String,
    pub kind: Kind,
}

impl InputDecl {
    pub fn scalar(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: Kind::Scalar,
        }
    }

    pub fn vector(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: Kind::Vector,
        }
    }
}

/// A runtime value: a single float or a vector of floats.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Value {
    pub fn kind(&self) -> Kind {
        match self {
            Value::Scalar(_) => Kind::Scalar,
            Value::Vector(_) => Kind::Vector,
        }
    }

    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            Value::Vector(v) => Some(v),
            Value::Scalar(_) => None,
        }
    }

    /// Bitwise equality, treating NaN payloads as equal to themselves.
    pub fn bit_eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Scalar(a), Value::Scalar(b)) => a.to_bits() == b.to_bits(),
            (Value::Vector(a), Value::Vector(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
        }
    }

    pub fn is_comparison(self) -> bool {
        !matches!(
            self,
            BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div
        )
    }

    pub(crate) fn apply(self, a: f64, b: f64) -> f64 {
        let mask = |c: bool| if c { 1.0 } else { 0.0 };
        match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => a / b,
            BinaryOp::Lt => mask(a < b),
            BinaryOp::Le => mask(a <= b),
            BinaryOp::Gt => mask(a > b),
            BinaryOp::Ge => mask(a >= b),
            BinaryOp::Eq => mask(a == b),
            BinaryOp::Ne => mask(a != b),
        }
    }
}

/// Elementwise builtin functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Min,
    Max,
    Abs,
    Sqrt,
    Log,
    Exp,
    Pow,
    Floor,
    Ceil,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Min => "min",
            Func::Max => "max",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Log => "log",
            Func::Exp => "exp",
            Func::Pow => "pow",
            Func::Floor => "floor",
            Func::Ceil => "ceil",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max | Func::Pow => 2,
            _ => 1,
        }
    }
}

/// Vector-to-scalar reductions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    Sum,
    Mean,
    MinVal,
    MaxVal,
    Len,
}

impl Reduction {
    pub fn name(self) -> &'static str {
        match self {
            Reduction::Sum => "sum",
            Reduction::Mean => "mean",
            Reduction::MinVal => "minval",
            Reduction::MaxVal => "maxval",
            Reduction::Len => "len",
        }
    }
}

/// Every name callable as `FNAME(...)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Builtin {
    Func(Func),
    Where,
    Reduce(Reduction),
}

impl Builtin {
    pub(crate) fn lookup(name: &str) -> Option<Builtin> {
        use Builtin::*;
        Some(match name {
            "min" => Func(self::Func::Min),
            "max" => Func(self::Func::Max),
            "abs" => Func(self::Func::Abs),
            "sqrt" => Func(self::Func::Sqrt),
            "log" => Func(self::Func::Log),
            "exp" => Func(self::Func::Exp),
            "pow" => Func(self::Func::Pow),
            "floor" => Func(self::Func::Floor),
            "ceil" => Func(self::Func::Ceil),
            "where" => Where,
            "sum" => Reduce(Reduction::Sum),
            "mean" => Reduce(Reduction::Mean),
            "minval" => Reduce(Reduction::MinVal),
            "maxval" => Reduce(Reduction::MaxVal),
            "len" => Reduce(Reduction::Len),
            _ => return None,
        })
    }

    pub(crate) fn arity(self) -> usize {
        match self {
            Builtin::Func(f) => f.arity(),
            Builtin::Where => 3,
            Builtin::Reduce(_) => 1,
        }
    }
}

/// Expression tree. Identifiers carry the environment slot they resolve to:
/// inputs occupy slots `0..inputs.len()`, bindings follow in order.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Ident { name: String, slot: usize },
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    Select(Box<Expr>, Box<Expr>, Box<Expr>),
    Reduce(Reduction, Box<Expr>),
}

/// A parsed, name-resolved program.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub source: String,
    pub inputs: Vec<InputDecl>,
    pub bindings: Vec<(String, Expr)>,
    pub result: Expr,
}

impl Program {
    /// Structural equality ignoring the original source text.
    pub fn same_structure(&self, other: &Program) -> bool {
        self.inputs == other.inputs
            && self.bindings == other.bindings
            && self.result == other.result
    }
}
