use std::fmt;

use super::lexer::{tokenize, Tok, Token};
use super::{BinaryOp, Builtin, Expr, InputDecl, Program, UnaryOp};

/// A parse failure with its location in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset into the source.
    pub offset: usize,
    /// 1-based line.
    pub line: usize,
    /// 1-based column, counted in characters.
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn at(src: &str, offset: usize, message: String) -> Self {
        let offset = offset.min(src.len());
        let before = &src[..offset];
        let line = before.matches('\n').count() + 1;
        let line_start = before.rfind('\n').map_or(0, |p| p + 1);
        let column = src[line_start..offset].chars().count() + 1;
        Self {
            offset,
            line,
            column,
            message,
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "parse error at line {}, column {} (byte {}): {}",
            self.line, self.column, self.offset, self.message
        )
    }
}

impl std::error::Error for ParseError {}

/// Parses `source` against the declared `inputs`.
///
/// Every identifier must resolve to an input or an earlier `let` binding, and
/// every called name must be a builtin.
pub fn parse(source: &str, inputs: &[InputDecl]) -> Result<Program, ParseError> {
    for (i, decl) in inputs.iter().enumerate() {
        if inputs[..i].iter().any(|d| d.name == decl.name) {
            return Err(ParseError::at(
                source,
                0,
                format!("input `{}` is declared twice", decl.name),
            ));
        }
    }
    let tokens = tokenize(source)?;
    let mut parser = Parser {
        src: source,
        tokens,
        pos: 0,
        scope: inputs.iter().map(|d| d.name.clone()).collect(),
        n_inputs: inputs.len(),
    };
    let (bindings, result) = parser.program()?;
    Ok(Program {
        source: source.to_string(),
        inputs: inputs.to_vec(),
        bindings,
        result,
    })
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    pos: usize,
    /// Names by slot: inputs first, then bindings.
    scope: Vec<String>,
    n_inputs: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        let idx = (self.pos + ahead).min(self.tokens.len() - 1);
        &self.tokens[idx].tok
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].offset
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: String) -> ParseError {
        ParseError::at(self.src, self.offset(), message)
    }

    fn expect(&mut self, want: Tok, context: &str) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!(
                "expected {} {context}, found {}",
                want.describe(),
                self.peek().describe()
            )))
        }
    }

    fn program(&mut self) -> Result<(Vec<(String, Expr)>, Expr), ParseError> {
        let mut bindings = Vec::new();
        while *self.peek() == Tok::Let {
            self.bump();
            let name_offset = self.offset();
            let name = match self.bump().tok {
                Tok::Ident(name) => name,
                other => {
                    return Err(ParseError::at(
                        self.src,
                        name_offset,
                        format!("expected a name after `let`, found {}", other.describe()),
                    ))
                }
            };
            if Builtin::lookup(&name).is_some() {
                return Err(ParseError::at(
                    self.src,
                    name_offset,
                    format!("`{name}` is a builtin function and cannot be bound"),
                ));
            }
            if let Some(slot) = self.scope.iter().position(|s| *s == name) {
                let what = if slot < self.n_inputs {
                    "shadows the input"
                } else {
                    "rebinds the earlier binding"
                };
                return Err(ParseError::at(
                    self.src,
                    name_offset,
                    format!("`let {name}` {what} `{name}`; choose a new name"),
                ));
            }
            self.expect(Tok::Assign, "after the binding name")?;
            let value = self.expr()?;
            self.expect(Tok::Semi, "to end the `let` binding")?;
            self.scope.push(name.clone());
            bindings.push((name, value));
        }
        self.expect(Tok::Return, "(a program ends with `return <expr>`)")?;
        let result = self.expr()?;
        if *self.peek() == Tok::Semi {
            self.bump();
        }
        if *self.peek() != Tok::Eof {
            return Err(self.error(format!(
                "unexpected {} after the return expression",
                self.peek().describe()
            )));
        }
        Ok((bindings, result))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinaryOp::Mul,
                Tok::Slash => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            if *self.peek() == Tok::Minus {
                return Err(self
                    .error("a second unary `-` must be parenthesized, e.g. `-(-x)`".to_string()));
            }
            let inner = self.atom()?;
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.atom()
    }

    fn comparison_op(&self) -> Option<BinaryOp> {
        Some(match self.peek() {
            Tok::Lt => BinaryOp::Lt,
            Tok::Le => BinaryOp::Le,
            Tok::Gt => BinaryOp::Gt,
            Tok::Ge => BinaryOp::Ge,
            Tok::EqEq => BinaryOp::Eq,
            Tok::Ne => BinaryOp::Ne,
            _ => return None,
        })
    }

    /// `expr [cmp expr]`, used inside parentheses and call arguments.
    fn maybe_comparison(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.expr()?;
        match self.comparison_op() {
            Some(op) => {
                self.bump();
                let rhs = self.expr()?;
                if self.comparison_op().is_some() {
                    return Err(self.error(
                        "comparisons cannot be chained; parenthesize each one".to_string(),
                    ));
                }
                Ok(Expr::Binary(op, Box::new(lhs), Box::new(rhs)))
            }
            None => Ok(lhs),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let start = self.offset();
        match self.peek().clone() {
            Tok::Number(n) => {
                self.bump();
                Ok(Expr::Const(n))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.maybe_comparison()?;
                self.expect(Tok::RParen, "to close the parenthesis")?;
                Ok(inner)
            }
            Tok::Ident(name) if *self.peek_at(1) == Tok::LParen => {
                self.bump();
                self.call(name, start)
            }
            Tok::Ident(name) => {
                self.bump();
                if Builtin::lookup(&name).is_some() {
                    return Err(ParseError::at(
                        self.src,
                        start,
                        format!("`{name}` is a function; call it as `{name}(...)`"),
                    ));
                }
                match self.scope.iter().position(|s| *s == name) {
                    Some(slot) => Ok(Expr::Ident { name, slot }),
                    None => Err(ParseError::at(
                        self.src,
                        start,
                        format!(
                            "unknown identifier `{name}`; available names are: {}",
                            self.scope.join(", ")
                        ),
                    )),
                }
            }
            other => Err(self.error(format!(
                "expected an expression, found {}",
                other.describe()
            ))),
        }
    }

    fn call(&mut self, name: String, start: usize) -> Result<Expr, ParseError> {
        let builtin = Builtin::lookup(&name).ok_or_else(|| {
            ParseError::at(
                self.src,
                start,
                format!("unknown function `{name}`; only the listed builtins may be called"),
            )
        })?;
        self.expect(Tok::LParen, "to open the argument list")?;
        let mut args = vec![self.maybe_comparison()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.maybe_comparison()?);
        }
        self.expect(Tok::RParen, "to close the argument list")?;
        if args.len() != builtin.arity() {
            return Err(ParseError::at(
                self.src,
                start,
                format!(
                    "`{name}` takes {} argument(s), got {}",
                    builtin.arity(),
                    args.len()
                ),
            ));
        }
        Ok(match builtin {
            Builtin::Func(f) => Expr::Call(f, args),
            Builtin::Where => {
                let mut it = args.into_iter().map(Box::new);
                let (c, a, b) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
                Expr::Select(c, a, b)
            }
            Builtin::Reduce(r) => Expr::Reduce(r, Box::new(args.into_iter().next().unwrap())),
        })
    }
}
