//! Recursive-descent parser for the map DSL.
//!
//! ```text
//! program := stmt ((';' | newline) stmt)*
//! stmt    := 'f' INT '=' expr
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := atom ('^' INT)?
//! atom    := NUMBER | 'x' INT | ('sqrt' | 'exp') '(' expr ')' | '(' expr ')'
//! ```
//!
//! `#` starts a comment running to the end of the line.

use thiserror::Error;

use super::{Expr, ExprMap};

const MAX_DEPTH: usize = 200;
const MAX_EXPONENT: u32 = 1024;
const MAX_TREE_DEPTH: usize = 1000;

type Node = (Expr, usize);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown identifier `{name}` at {line}:{column}")]
    UnknownIdentifier {
        line: usize,
        column: usize,
        name: String,
    },
    #[error("inconsistent dimension: {0}")]
    Dimension(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Int(u64),
    Ident(String),
    Op(char),
    Sep,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
    // raw text, kept so that `3` can be both an integer exponent and a number
    text: String,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            out.push(Token { tok: Tok::Sep, line: tl, column: tc, text: "\n".into() });
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
                col += 1;
            }
            continue;
        }
        if c == ';' {
            out.push(Token { tok: Tok::Sep, line: tl, column: tc, text: ";".into() });
            i += 1;
            col += 1;
            continue;
        }
        if "+-*/^()=".contains(c) {
            out.push(Token { tok: Tok::Op(c), line: tl, column: tc, text: c.to_string() });
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let mut integral = true;
            if i < chars.len() && chars[i] == '.' {
                integral = false;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = i;
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    integral = false;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let syntax = |message: String| ParseError::Syntax { line: tl, column: tc, message };
            let value: f64 = text
                .parse()
                .map_err(|_| syntax(format!("malformed number `{text}`")))?;
            if !value.is_finite() {
                return Err(syntax(format!("number `{text}` is out of range")));
            }
            let tok = match (integral, text.parse::<u64>()) {
                (true, Ok(k)) => Tok::Int(k),
                _ => Tok::Num(value),
            };
            out.push(Token { tok, line: tl, column: tc, text });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token { tok: Tok::Ident(text.clone()), line: tl, column: tc, text });
            continue;
        }
        return Err(ParseError::Syntax {
            line: tl,
            column: tc,
            message: format!("unexpected character `{c}`"),
        });
    }
    out.push(Token { tok: Tok::Eof, line, column: col, text: String::new() });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, t: &Token, message: impl Into<String>) -> ParseError {
        ParseError::Syntax { line: t.line, column: t.column, message: message.into() }
    }

    fn expect_op(&mut self, op: char) -> Result<(), ParseError> {
        let t = self.bump();
        if t.tok == Tok::Op(op) {
            Ok(())
        } else {
            Err(self.err(&t, format!("expected `{op}`, found {}", describe(&t))))
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            let t = self.peek().clone();
            return Err(self.err(&t, "expression nested too deeply"));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        self.enter()?;
        let mut acc = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Op(c @ ('+' | '-')) => c,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            acc = self.join(acc, rhs, |a, b| if op == '+' { Expr::add(a, b) } else { Expr::sub(a, b) })?;
        }
        self.depth -= 1;
        Ok(acc)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut acc = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Op(c @ ('*' | '/')) => c,
                _ => break,
            };
            self.bump();
            let rhs = self.unary()?;
            acc = self.join(acc, rhs, |a, b| if op == '*' { Expr::mul(a, b) } else { Expr::div(a, b) })?;
        }
        Ok(acc)
    }

    fn join(
        &self,
        (a, da): Node,
        (b, db): Node,
        f: impl FnOnce(Expr, Expr) -> Expr,
    ) -> Result<Node, ParseError> {
        self.wrap(f(a, b), da.max(db) + 1)
    }

    fn wrap(&self, e: Expr, depth: usize) -> Result<Node, ParseError> {
        if depth > MAX_TREE_DEPTH {
            let t = self.peek().clone();
            return Err(self.err(&t, "expression tree too deep"));
        }
        Ok((e, depth))
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        match self.peek().tok {
            Tok::Op(c @ ('-' | '+')) => {
                self.bump();
                self.enter()?;
                let (e, d) = self.unary()?;
                self.depth -= 1;
                if c == '-' {
                    self.wrap(Expr::neg(e), d + 1)
                } else {
                    Ok((e, d))
                }
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let (base, d) = self.atom()?;
        if self.peek().tok == Tok::Op('^') {
            self.bump();
            let t = self.bump();
            let k = match t.tok {
                Tok::Int(k) if k <= MAX_EXPONENT as u64 => k as u32,
                Tok::Int(_) => {
                    return Err(self.err(&t, format!("exponent exceeds {MAX_EXPONENT}")))
                }
                _ => {
                    return Err(self.err(
                        &t,
                        format!("exponent must be a nonnegative integer, found {}", describe(&t)),
                    ))
                }
            };
            return self.wrap(Expr::pow(base, k), d + 1);
        }
        Ok((base, d))
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let t = self.bump();
        match &t.tok {
            Tok::Num(v) => Ok((Expr::Const(*v), 1)),
            Tok::Int(_) => Ok((Expr::Const(t.text.parse::<f64>().unwrap_or(f64::NAN)), 1)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect_op(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(idx) = var_index(name) {
                    return Ok((Expr::Var(idx), 1));
                }
                match name.as_str() {
                    "sqrt" | "exp" => {
                        self.expect_op('(')?;
                        let (inner, d) = self.expr()?;
                        self.expect_op(')')?;
                        let e = if name == "sqrt" { Expr::sqrt(inner) } else { Expr::exp(inner) };
                        self.wrap(e, d + 1)
                    }
                    _ => Err(ParseError::UnknownIdentifier {
                        line: t.line,
                        column: t.column,
                        name: name.clone(),
                    }),
                }
            }
            _ => Err(self.err(&t, format!("expected an operand, found {}", describe(&t)))),
        }
    }
}

fn describe(t: &Token) -> String {
    match &t.tok {
        Tok::Eof => "end of input".into(),
        Tok::Sep => "end of statement".into(),
        _ => format!("`{}`", t.text),
    }
}

/// `x<k>` with k ≥ 1, returned zero-based.
fn var_index(name: &str) -> Option<usize> {
    indexed(name, 'x')
}

fn indexed(name: &str, prefix: char) -> Option<usize> {
    let digits = name.strip_prefix(prefix)?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0')
    {
        return None;
    }
    digits.parse::<usize>().ok().filter(|&k| k >= 1 && k <= 1 << 20).map(|k| k - 1)
}

/// Parses a single expression (no `f<k> =` prefix).
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    if toks.iter().any(|t| t.tok == Tok::Sep) {
        let t = toks.iter().find(|t| t.tok == Tok::Sep).unwrap();
        return Err(ParseError::Syntax {
            line: t.line,
            column: t.column,
            message: "statement separator inside an expression".into(),
        });
    }
    let mut p = Parser { toks, pos: 0, depth: 0 };
    let (e, _) = p.expr()?;
    let t = p.peek().clone();
    if t.tok != Tok::Eof {
        return Err(p.err(&t, format!("unexpected {}", describe(&t))));
    }
    Ok(e)
}

fn parse_statements(src: &str) -> Result<Vec<(usize, Expr, usize, usize)>, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, depth: 0 };
    let mut stmts = Vec::new();
    loop {
        while p.peek().tok == Tok::Sep {
            p.bump();
        }
        let t = p.bump();
        match &t.tok {
            Tok::Eof => break,
            Tok::Ident(name) => {
                let Some(k) = indexed(name, 'f') else {
                    return Err(ParseError::UnknownIdentifier {
                        line: t.line,
                        column: t.column,
                        name: name.clone(),
                    });
                };
                p.expect_op('=')?;
                let (e, _) = p.expr()?;
                let end = p.peek().clone();
                if !matches!(end.tok, Tok::Sep | Tok::Eof) {
                    return Err(p.err(&end, format!("unexpected {}", describe(&end))));
                }
                stmts.push((k, e, t.line, t.column));
            }
            _ => {
                return Err(p.err(&t, format!("expected `f<k> =`, found {}", describe(&t))))
            }
        }
    }
    Ok(stmts)
}

fn assemble(src: &str, n_in: Option<usize>) -> Result<ExprMap, ParseError> {
    let stmts = parse_statements(src)?;
    if stmts.is_empty() {
        return Err(ParseError::Syntax {
            line: 1,
            column: 1,
            message: "empty map: expected at least one `f<k> = <expr>` statement".into(),
        });
    }
    let m = stmts.len();
    let mut slots: Vec<Option<Expr>> = vec![None; m];
    for (k, e, line, column) in stmts {
        if k >= m {
            return Err(ParseError::Dimension(format!(
                "f{} at {line}:{column} but only {m} components are defined",
                k + 1
            )));
        }
        if slots[k].is_some() {
            return Err(ParseError::Dimension(format!(
                "f{} defined twice (second at {line}:{column})",
                k + 1
            )));
        }
        slots[k] = Some(e);
    }
    let components: Vec<Expr> = slots.into_iter().map(|s| s.expect("all slots filled")).collect();
    let arity = components.iter().map(Expr::arity).max().unwrap_or(0).max(1);
    let n = match n_in {
        Some(n) if arity > n => {
            return Err(ParseError::Dimension(format!(
                "x{arity} referenced but the map has {n} inputs"
            )))
        }
        Some(n) => n,
        None => arity,
    };
    ExprMap::new(n, components).map_err(|e| ParseError::Dimension(e.to_string()))
}

/// Parses a map; the input dimension is the largest variable index used.
pub fn parse_map(src: &str) -> Result<ExprMap, ParseError> {
    assemble(src, None)
}

/// Parses a map with a declared input dimension `n_in`.
pub fn parse_map_in(src: &str, n_in: usize) -> Result<ExprMap, ParseError> {
    if n_in == 0 {
        return Err(ParseError::Dimension("input dimension must be at least 1".into()));
    }
    assemble(src, Some(n_in))
}
