use std::fmt::Write;

use super::{Expr, Program, UnaryOp};

/// Renders `program` as source text that parses back to the same structure.
pub fn pretty_print(program: &Program) -> String {
    let mut out = String::new();
    for (name, expr) in &program.bindings {
        let _ = write!(out, "let {name} = ");
        write_expr(&mut out, expr);
        out.push_str(";\n");
    }
    out.push_str("return ");
    write_expr(&mut out, &program.result);
    out
}

fn is_atomic(e: &Expr) -> bool {
    matches!(
        e,
        Expr::Const(_) | Expr::Ident { .. } | Expr::Call(..) | Expr::Select(..) | Expr::Reduce(..)
    ) || matches!(e, Expr::Binary(op, ..) if op.is_comparison())
}

/// Writes `e` so it can stand where the grammar expects an `atom`.
fn write_atom(out: &mut String, e: &Expr) {
    if is_atomic(e) {
        write_expr(out, e);
    } else {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    }
}

/// Arithmetic operands are factors, so a bare negation needs no parentheses.
fn write_operand(out: &mut String, e: &Expr) {
    if matches!(e, Expr::Unary(..)) {
        write_expr(out, e);
    } else {
        write_atom(out, e);
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Const(c) => {
            let _ = write!(out, "{c}");
        }
        Expr::Ident { name, .. } => out.push_str(name),
        Expr::Unary(UnaryOp::Neg, inner) => {
            out.push('-');
            write_atom(out, inner);
        }
        Expr::Binary(op, a, b) if op.is_comparison() => {
            out.push('(');
            write_expr(out, a);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, b);
            out.push(')');
        }
        Expr::Binary(op, a, b) => {
            write_operand(out, a);
            let _ = write!(out, " {} ", op.symbol());
            write_operand(out, b);
        }
        Expr::Call(f, args) => {
            out.push_str(f.name());
            write_args(out, args.iter());
        }
        Expr::Select(c, a, b) => {
            out.push_str("where");
            write_args(out, [c.as_ref(), a.as_ref(), b.as_ref()].into_iter());
        }
        Expr::Reduce(r, inner) => {
            out.push_str(r.name());
            write_args(out, std::iter::once(inner.as_ref()));
        }
    }
}

fn write_args<'a>(out: &mut String, args: impl Iterator<Item = &'a Expr>) {
    out.push('(');
    for (i, a) in args.enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, a);
    }
    out.push(')');
}
