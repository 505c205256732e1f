const GRAMMAR: &str = r#"Heuristic language (EBNF):

  program   := { "let" IDENT "=" expr ";" } "return" expr
  expr      := term { ("+"|"-") term }
  term      := factor { ("*"|"/") factor }
  factor    := ["-"] atom
  atom      := NUMBER | IDENT | "(" expr ")" | call | cmp
  cmp       := "(" expr ("<"|"<="|">"|">="|"=="|"!=") expr ")"   // yields 0/1 mask
  call      := FNAME "(" expr { "," expr } ")"

Builtins (FNAME):
  elementwise: min(a,b), max(a,b), abs(x), sqrt(x), log(x), exp(x), pow(a,b), floor(x), ceil(x)
  selection:   where(cond,a,b)   picks a where cond is nonzero, else b
  reduction (vector -> scalar): sum(v), mean(v), minval(v), maxval(v), len(v)

Rules:
  - Values are scalars or vectors of floats. Arithmetic, comparisons and builtins
    apply elementwise; a scalar combines with a vector by broadcasting, and two
    vectors must have equal length.
  - NUMBER is a decimal literal with optional fraction and exponent (3, 0.5, 1e-3).
  - IDENT names a task input or an earlier `let`; names are case-sensitive and a
    `let` may not reuse an existing name. There are no loops, no recursion and no
    user-defined functions.
  - A comparison may appear inside parentheses or directly as a call argument,
    as in where(v > 0, v, 0 - v).
  - Division by zero and log of non-positive numbers yield inf/NaN; NaN
    priorities are never selected.
  - `#` starts a comment that runs to the end of the line.

Example programs (online bin packing inputs: item, cap_remaining, bin_index):
  return -bin_index
  return -(cap_remaining - item)
  let slack = cap_remaining - item; return where((slack == 0), 1000, 0 - slack)
  let fit = item / cap_remaining; return pow(fit, 2) - 0.01 * bin_index / (len(bin_index) + 1)
"#;

/// The language reference interpolated into every generation prompt.
pub fn render_grammar() -> &'static str {
    GRAMMAR
}
