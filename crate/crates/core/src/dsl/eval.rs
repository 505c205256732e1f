use std::collections::HashMap;

use thiserror::Error;

use super::{Expr, Func, Program, Reduction, UnaryOp, Value};

/// Sandbox bounds for a single evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalLimits {
    pub max_nodes_visited: u64,
    pub max_vector_length: usize,
}

impl Default for EvalLimits {
    fn default() -> Self {
        Self {
            max_nodes_visited: 1_000_000,
            max_vector_length: 100_000,
        }
    }
}

impl EvalLimits {
    /// Both bounds must be strictly positive.
    pub fn new(max_nodes_visited: u64, max_vector_length: usize) -> Option<Self> {
        (max_nodes_visited > 0 && max_vector_length > 0).then_some(Self {
            max_nodes_visited,
            max_vector_length,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("missing input `{name}`")]
    MissingInput { name: String },
    #[error("kind mismatch: {message}")]
    KindMismatch { message: String },
    #[error("length mismatch: {message}")]
    LengthMismatch { message: String },
    #[error("limit exceeded: {message}")]
    LimitExceeded { message: String },
}

enum Slot<'a> {
    Input(&'a Value),
    Bound(Value),
}

impl Slot<'_> {
    fn value(&self) -> &Value {
        match self {
            Slot::Input(v) => v,
            Slot::Bound(v) => v,
        }
    }
}

struct Machine<'a> {
    env: Vec<Slot<'a>>,
    visited: u64,
    limits: EvalLimits,
}

/// Evaluates `program` against named inputs.
///
/// Non-finite intermediate values propagate under IEEE semantics; only
/// structural problems (missing inputs, kind or length mismatches, sandbox
/// limits) are errors. Inputs not declared by the program are ignored.
pub fn evaluate(
    program: &Program,
    inputs: &HashMap<&str, Value>,
    limits: &EvalLimits,
) -> Result<Value, EvalError> {
    let mut env = Vec::with_capacity(program.inputs.len() + program.bindings.len());
    for decl in &program.inputs {
        let value = inputs
            .get(decl.name.as_str())
            .ok_or_else(|| EvalError::MissingInput {
                name: decl.name.clone(),
            })?;
        if value.kind() != decl.kind {
            return Err(EvalError::KindMismatch {
                message: format!(
                    "input `{}` is declared as a {} but a {} was supplied",
                    decl.name,
                    decl.kind,
                    value.kind()
                ),
            });
        }
        if let Value::Vector(v) = value {
            if v.len() > limits.max_vector_length {
                return Err(EvalError::LimitExceeded {
                    message: format!(
                        "input `{}` has length {} (maximum {})",
                        decl.name,
                        v.len(),
                        limits.max_vector_length
                    ),
                });
            }
        }
        env.push(Slot::Input(value));
    }
    let mut machine = Machine {
        env,
        visited: 0,
        limits: *limits,
    };
    for (_, expr) in &program.bindings {
        let value = machine.eval(expr)?;
        machine.env.push(Slot::Bound(value));
    }
    machine.eval(&program.result)
}

impl Machine<'_> {
    fn eval(&mut self, expr: &Expr) -> Result<Value, EvalError> {
        self.visited += 1;
        if self.visited > self.limits.max_nodes_visited {
            return Err(EvalError::LimitExceeded {
                message: format!(
                    "program visited more than {} expression nodes",
                    self.limits.max_nodes_visited
                ),
            });
        }
        match expr {
            Expr::Const(c) => Ok(Value::Scalar(*c)),
            Expr::Ident { slot, .. } => Ok(self.env[*slot].value().clone()),
            Expr::Unary(UnaryOp::Neg, inner) => Ok(map(self.eval(inner)?, |x| -x)),
            Expr::Binary(op, a, b) => {
                let a = self.eval(a)?;
                let b = self.eval(b)?;
                zip2(a, b, op.symbol(), |x, y| op.apply(x, y))
            }
            Expr::Call(func, args) => match func.arity() {
                1 => {
                    let x = self.eval(&args[0])?;
                    Ok(map(x, unary_fn(*func)))
                }
                _ => {
                    let a = self.eval(&args[0])?;
                    let b = self.eval(&args[1])?;
                    zip2(a, b, func.name(), binary_fn(*func))
                }
            },
            Expr::Select(c, a, b) => {
                let c = self.eval(c)?;
                let a = self.eval(a)?;
                let b = self.eval(b)?;
                select(c, a, b)
            }
            Expr::Reduce(r, inner) => {
                let v = match self.eval(inner)? {
                    Value::Vector(v) => v,
                    Value::Scalar(_) => {
                        return Err(EvalError::KindMismatch {
                            message: format!(
                                "`{}` expects a vector argument, got a scalar",
                                r.name()
                            ),
                        })
                    }
                };
                Ok(Value::Scalar(reduce(*r, &v)))
            }
        }
    }
}

fn unary_fn(func: Func) -> fn(f64) -> f64 {
    match func {
        Func::Abs => f64::abs,
        Func::Sqrt => f64::sqrt,
        Func::Log => f64::ln,
        Func::Exp => f64::exp,
        Func::Floor => f64::floor,
        Func::Ceil => f64::ceil,
        Func::Min | Func::Max | Func::Pow => unreachable!("binary builtin"),
    }
}

fn binary_fn(func: Func) -> fn(f64, f64) -> f64 {
    match func {
        Func::Min => f64::min,
        Func::Max => f64::max,
        Func::Pow => f64::powf,
        _ => unreachable!("unary builtin"),
    }
}

fn map(v: Value, f: impl Fn(f64) -> f64) -> Value {
    match v {
        Value::Scalar(x) => Value::Scalar(f(x)),
        Value::Vector(mut xs) => {
            xs.iter_mut().for_each(|x| *x = f(*x));
            Value::Vector(xs)
        }
    }
}

fn zip2(a: Value, b: Value, what: &str, f: impl Fn(f64, f64) -> f64) -> Result<Value, EvalError> {
    Ok(match (a, b) {
        (Value::Scalar(x), Value::Scalar(y)) => Value::Scalar(f(x, y)),
        (Value::Scalar(x), Value::Vector(mut ys)) => {
            ys.iter_mut().for_each(|y| *y = f(x, *y));
            Value::Vector(ys)
        }
        (Value::Vector(mut xs), Value::Scalar(y)) => {
            xs.iter_mut().for_each(|x| *x = f(*x, y));
            Value::Vector(xs)
        }
        (Value::Vector(mut xs), Value::Vector(ys)) => {
            if xs.len() != ys.len() {
                return Err(EvalError::LengthMismatch {
                    message: format!(
                        "`{what}` applied to vectors of length {} and {}",
                        xs.len(),
                        ys.len()
                    ),
                });
            }
            xs.iter_mut().zip(&ys).for_each(|(x, y)| *x = f(*x, *y));
            Value::Vector(xs)
        }
    })
}

fn truthy(c: f64) -> bool {
    c != 0.0 && !c.is_nan()
}

fn select(c: Value, a: Value, b: Value) -> Result<Value, EvalError> {
    let len = [&c, &a, &b]
        .iter()
        .filter_map(|v| v.as_vector().map(<[f64]>::len))
        .try_fold(None, |acc: Option<usize>, n| match acc {
            Some(m) if m != n => Err((m, n)),
            _ => Ok(Some(n)),
        })
        .map_err(|(m, n)| EvalError::LengthMismatch {
            message: format!("`where` arguments have lengths {m} and {n}"),
        })?;
    let at = |v: &Value, i: usize| match v {
        Value::Scalar(x) => *x,
        Value::Vector(xs) => xs[i],
    };
    Ok(match len {
        None => Value::Scalar(if truthy(at(&c, 0)) {
            at(&a, 0)
        } else {
            at(&b, 0)
        }),
        Some(n) => Value::Vector(
            (0..n)
                .map(|i| {
                    if truthy(at(&c, i)) {
                        at(&a, i)
                    } else {
                        at(&b, i)
                    }
                })
                .collect(),
        ),
    })
}

fn reduce(r: Reduction, v: &[f64]) -> f64 {
    match r {
        Reduction::Sum => v.iter().sum(),
        Reduction::Mean => v.iter().sum::<f64>() / v.len() as f64,
        Reduction::MinVal => v.iter().copied().fold(f64::INFINITY, f64::min),
        Reduction::MaxVal => v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Reduction::Len => v.len() as f64,
    }
}
