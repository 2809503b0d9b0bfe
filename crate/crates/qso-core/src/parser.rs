//! Concrete syntax for formulas.
//!
//! Precedence from tightest to loosest: `!`, `*`, `+`, `=`/`<`, `&`, `|`, `->`/`~>`.
//! Quantifier bodies extend as far right as possible.

use crate::ast::*;
use crate::error::{QsoError, Result};
use crate::model::Signature;
use num_bigint::BigInt;

const KEYWORDS: &[&str] = &[
    "sum", "prod", "max", "min", "exists", "forall", "lsfp", "path", "true",
];

#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    /// Accept negative integer literals.
    pub integers: bool,
    /// Free second-order variables that may appear unbound.
    pub free_so: Vec<SoVar>,
    /// Free function symbols with their arities.
    pub free_fns: Vec<(String, usize)>,
}

pub fn parse_formula(text: &str, sig: &Signature) -> Result<QFormula> {
    parse_formula_with(text, sig, &ParseOptions::default())
}

pub fn parse_formula_with(text: &str, sig: &Signature, opts: &ParseOptions) -> Result<QFormula> {
    let tokens = lex(text)?;
    let mut p = Parser {
        toks: tokens,
        pos: 0,
        sig,
        opts,
        so_scope: opts.free_so.clone(),
        fn_scope: opts.free_fns.clone(),
        text_len: text.len(),
    };
    let e = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(QsoError::Syntax {
            span: t.span,
            msg: format!("unexpected `{}`", t.tok),
        });
    }
    p.to_q(e)
}

/// Parses a Boolean formula; quantitative constructs are rejected.
pub fn parse_boolean(text: &str, sig: &Signature, opts: &ParseOptions) -> Result<BFormula> {
    let q = parse_formula_with(text, sig, opts)?;
    match q.kind {
        QKind::Bool(b) => Ok(b),
        _ => Err(QsoError::Type {
            span: q.span,
            msg: "expected a Boolean formula".into(),
        }),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Sym(&'static str),
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Int(i) => write!(f, "{i}"),
            Tok::Sym(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: Span,
}

const SYMBOLS: &[&str] = &[
    "->", "~>", "(", ")", ",", ".", ":", ";", "{", "}", "+", "*", "&", "|", "!", "=", "<", "-",
];

fn lex(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let s = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(text[s..i].to_string()),
                span: Span::new(s, i),
            });
        } else if c.is_ascii_digit() {
            let s = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Int(text[s..i].parse().expect("digits")),
                span: Span::new(s, i),
            });
        } else if let Some(sym) = SYMBOLS.iter().find(|s| text[i..].starts_with(**s)) {
            out.push(Token {
                tok: Tok::Sym(sym),
                span: Span::new(i, i + sym.len()),
            });
            i += sym.len();
        } else {
            let ch = text[i..].chars().next().unwrap();
            return Err(QsoError::Syntax {
                span: Span::new(i, i + ch.len_utf8()),
                msg: format!("unexpected character `{ch}`"),
            });
        }
    }
    Ok(out)
}

enum Expr {
    B(BFormula),
    Q(QFormula),
    Var(String, Span),
}

impl Expr {
    fn span(&self) -> Span {
        match self {
            Expr::B(b) => b.span,
            Expr::Q(q) => q.span,
            Expr::Var(_, s) => *s,
        }
    }
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    sig: &'a Signature,
    opts: &'a ParseOptions,
    so_scope: Vec<SoVar>,
    fn_scope: Vec<(String, usize)>,
    text_len: usize,
}

fn is_lower(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_ascii_lowercase())
}

fn is_upper(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn peek_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Sym(x), .. }) if *x == s)
    }

    fn peek_at_sym(&self, off: usize, s: &str) -> bool {
        matches!(self.toks.get(self.pos + off), Some(Token { tok: Tok::Sym(x), .. }) if *x == s)
    }

    fn eof_span(&self) -> Span {
        self.toks
            .last()
            .map(|t| t.span)
            .unwrap_or(Span::new(self.text_len, self.text_len))
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        self.pos += 1;
        t
    }

    fn expect_sym(&mut self, s: &'static str) -> Result<Span> {
        if self.peek_sym(s) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&format!("expected `{s}`")))
        }
    }

    fn unexpected(&self, msg: &str) -> QsoError {
        match self.peek() {
            Some(t) => QsoError::Syntax {
                span: t.span,
                msg: format!("{msg}, found `{}`", t.tok),
            },
            None => QsoError::Syntax {
                span: self.eof_span(),
                msg: format!("{msg}, found end of input"),
            },
        }
    }

    fn ident(&mut self) -> Result<(String, Span)> {
        match self.peek() {
            Some(Token {
                tok: Tok::Ident(s),
                span,
            }) if !KEYWORDS.contains(&s.as_str()) => {
                let r = (s.clone(), *span);
                self.pos += 1;
                Ok(r)
            }
            _ => Err(self.unexpected("expected an identifier")),
        }
    }

    fn fo_var(&mut self) -> Result<(String, Span)> {
        let (name, span) = self.ident()?;
        if !is_lower(&name) {
            return Err(QsoError::Naming {
                span,
                msg: format!("first-order variable `{name}` must start with a lowercase letter"),
            });
        }
        Ok((name, span))
    }

    fn int(&mut self) -> Result<(BigInt, Span)> {
        match self.peek() {
            Some(Token {
                tok: Tok::Int(i),
                span,
            }) => {
                let r = (i.clone(), *span);
                self.pos += 1;
                Ok(r)
            }
            _ => Err(self.unexpected("expected an integer")),
        }
    }

    fn small_int(&mut self) -> Result<(usize, Span)> {
        let (i, span) = self.int()?;
        let v = usize::try_from(&i).map_err(|_| QsoError::Syntax {
            span,
            msg: "arity too large".into(),
        })?;
        Ok((v, span))
    }

    fn to_b(&self, e: Expr) -> Result<BFormula> {
        match e {
            Expr::B(b) => Ok(b),
            Expr::Q(q) => Err(QsoError::Type {
                span: q.span,
                msg: "expected a Boolean formula, found a quantitative one".into(),
            }),
            Expr::Var(v, span) => Err(QsoError::Type {
                span,
                msg: format!("variable `{v}` used as a formula"),
            }),
        }
    }

    fn to_q(&self, e: Expr) -> Result<QFormula> {
        match e {
            Expr::B(b) => Ok(QFormula::boolean(b)),
            Expr::Q(q) => Ok(q),
            Expr::Var(v, span) => Err(QsoError::Type {
                span,
                msg: format!("variable `{v}` used as a formula"),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let lhs = self.or()?;
        if self.peek_sym("->") {
            self.bump();
            let rhs = self.expr()?;
            let a = self.to_b(lhs)?;
            let b = self.to_b(rhs)?;
            let span = a.span.join(b.span);
            return Ok(Expr::B(BFormula {
                kind: BKind::Implies(Box::new(a), Box::new(b)),
                span,
            }));
        }
        if self.peek_sym("~>") {
            self.bump();
            let rhs = self.expr()?;
            let a = self.to_b(lhs)?;
            let b = self.to_q(rhs)?;
            let span = a.span.join(b.span);
            return Ok(Expr::Q(QFormula {
                kind: QKind::Cond(a, Box::new(b)),
                span,
            }));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Expr> {
        let mut lhs = self.and()?;
        while self.peek_sym("|") {
            self.bump();
            let rhs = self.and()?;
            let a = self.to_b(lhs)?;
            let b = self.to_b(rhs)?;
            let span = a.span.join(b.span);
            lhs = Expr::B(BFormula {
                kind: BKind::Or(Box::new(a), Box::new(b)),
                span,
            });
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr> {
        let mut lhs = self.cmp()?;
        while self.peek_sym("&") {
            self.bump();
            let rhs = self.cmp()?;
            let a = self.to_b(lhs)?;
            let b = self.to_b(rhs)?;
            let span = a.span.join(b.span);
            lhs = Expr::B(BFormula {
                kind: BKind::And(Box::new(a), Box::new(b)),
                span,
            });
        }
        Ok(lhs)
    }

    fn cmp(&mut self) -> Result<Expr> {
        let lhs = self.add()?;
        let op = if self.peek_sym("=") {
            "="
        } else if self.peek_sym("<") {
            "<"
        } else {
            return Ok(lhs);
        };
        self.bump();
        let rhs = self.add()?;
        let (Expr::Var(x, sx), Expr::Var(y, sy)) = (&lhs, &rhs) else {
            let span = if matches!(lhs, Expr::Var(..)) { rhs.span() } else { lhs.span() };
            return Err(QsoError::Type {
                span,
                msg: format!("`{op}` compares first-order variables"),
            });
        };
        let kind = if op == "=" {
            BKind::Eq(x.clone(), y.clone())
        } else {
            BKind::Less(x.clone(), y.clone())
        };
        Ok(Expr::B(BFormula {
            kind,
            span: sx.join(*sy),
        }))
    }

    fn add(&mut self) -> Result<Expr> {
        let mut lhs = self.mul()?;
        while self.peek_sym("+") {
            let plus = self.bump().span;
            if self.peek().is_none() {
                return Err(QsoError::Syntax {
                    span: plus,
                    msg: "expected an operand after trailing `+`".into(),
                });
            }
            let rhs = self.mul()?;
            let a = self.to_q(lhs)?;
            let b = self.to_q(rhs)?;
            let span = a.span.join(b.span);
            lhs = Expr::Q(QFormula {
                kind: QKind::Bin(BinOp::Add, Box::new(a), Box::new(b)),
                span,
            });
        }
        Ok(lhs)
    }

    fn mul(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while self.peek_sym("*") {
            let star = self.bump().span;
            if self.peek().is_none() {
                return Err(QsoError::Syntax {
                    span: star,
                    msg: "expected an operand after trailing `*`".into(),
                });
            }
            let rhs = self.unary()?;
            let a = self.to_q(lhs)?;
            let b = self.to_q(rhs)?;
            let span = a.span.join(b.span);
            lhs = Expr::Q(QFormula {
                kind: QKind::Bin(BinOp::Mul, Box::new(a), Box::new(b)),
                span,
            });
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek_sym("!") {
            let bang = self.bump().span;
            let e = self.unary()?;
            let b = self.to_b(e)?;
            let span = bang.join(b.span);
            return Ok(Expr::B(BFormula {
                kind: BKind::Not(Box::new(b)),
                span,
            }));
        }
        self.primary()
    }

    fn binder(&mut self) -> Result<(Binder, Span)> {
        let (name, span) = self.ident()?;
        if self.peek_sym(":") {
            self.bump();
            let (k, ks) = self.small_int()?;
            if !is_upper(&name) {
                return Err(QsoError::Naming {
                    span,
                    msg: format!("second-order variable `{name}` must start with an uppercase letter"),
                });
            }
            if k == 0 {
                return Err(QsoError::Syntax {
                    span: ks,
                    msg: "second-order arity must be positive".into(),
                });
            }
            if self.sig.index_of(&name).is_some() {
                return Err(QsoError::Naming {
                    span,
                    msg: format!("`{name}` is a relation of the signature"),
                });
            }
            Ok((Binder::So(SoVar::new(name, k)), span.join(ks)))
        } else if is_lower(&name) {
            Ok((Binder::Fo(name), span))
        } else {
            Err(QsoError::Naming {
                span,
                msg: format!(
                    "`{name}`: first-order variables are lowercase; second-order ones need an arity (`{name}:k`)"
                ),
            })
        }
    }

    fn var_list(&mut self, close: &'static str) -> Result<Vec<String>> {
        let mut vars = vec![self.fo_var()?.0];
        while self.peek_sym(",") {
            self.bump();
            vars.push(self.fo_var()?.0);
        }
        if !self.peek_sym(close) {
            return Err(self.unexpected(&format!("expected `,` or `{close}`")));
        }
        Ok(vars)
    }

    fn primary(&mut self) -> Result<Expr> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.unexpected("expected a formula"));
        };
        match &tok.tok {
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                let close = self.expect_sym(")")?;
                Ok(match e {
                    Expr::B(mut b) => {
                        b.span = tok.span.join(close);
                        Expr::B(b)
                    }
                    Expr::Q(mut q) => {
                        q.span = tok.span.join(close);
                        Expr::Q(q)
                    }
                    v => v,
                })
            }
            Tok::Sym("-") => {
                self.bump();
                let (i, span) = self.int()?;
                let span = tok.span.join(span);
                if !self.opts.integers {
                    return Err(QsoError::Syntax {
                        span,
                        msg: "negative constants require integer mode".into(),
                    });
                }
                Ok(Expr::Q(QFormula {
                    kind: QKind::Const(-i),
                    span,
                }))
            }
            Tok::Int(i) => {
                self.bump();
                Ok(Expr::Q(QFormula {
                    kind: QKind::Const(i.clone()),
                    span: tok.span,
                }))
            }
            Tok::Ident(word) => match word.as_str() {
                "true" => {
                    self.bump();
                    Ok(Expr::B(BFormula {
                        kind: BKind::True,
                        span: tok.span,
                    }))
                }
                "max" | "min" if self.peek_at_sym(1, "(") => {
                    self.bump();
                    self.bump();
                    let a = self.expr()?;
                    self.expect_sym(",")?;
                    let b = self.expr()?;
                    let close = self.expect_sym(")")?;
                    let op = if word == "max" { BinOp::Max } else { BinOp::Min };
                    Ok(Expr::Q(QFormula {
                        kind: QKind::Bin(op, Box::new(self.to_q(a)?), Box::new(self.to_q(b)?)),
                        span: tok.span.join(close),
                    }))
                }
                "sum" | "prod" | "max" | "min" | "exists" | "forall" => self.quantifier(word.clone(), tok.span),
                "lsfp" => self.lsfp(tok.span),
                "path" => self.path(tok.span),
                _ => self.atom(),
            },
            _ => Err(self.unexpected("expected a formula")),
        }
    }

    fn quantifier(&mut self, word: String, start: Span) -> Result<Expr> {
        self.bump();
        let (b, _) = self.binder()?;
        self.expect_sym(".")?;
        let pushed = if let Binder::So(v) = &b {
            self.so_scope.push(v.clone());
            true
        } else {
            false
        };
        let body = self.expr();
        if pushed {
            self.so_scope.pop();
        }
        let body = body?;
        let span = start.join(body.span());
        let agg = match word.as_str() {
            "sum" => Agg::Sum,
            "prod" => Agg::Prod,
            "max" => Agg::Max,
            "min" => Agg::Min,
            "exists" | "forall" => {
                let body = self.to_b(body)?;
                let kind = if word == "exists" {
                    BKind::Exists(b, Box::new(body))
                } else {
                    BKind::Forall(b, Box::new(body))
                };
                return Ok(Expr::B(BFormula { kind, span }));
            }
            _ => unreachable!(),
        };
        Ok(Expr::Q(QFormula {
            kind: QKind::Agg(agg, b, Box::new(self.to_q(body)?)),
            span,
        }))
    }

    fn lsfp(&mut self, start: Span) -> Result<Expr> {
        self.bump();
        let (func, fspan) = self.ident()?;
        if !is_lower(&func) {
            return Err(QsoError::Naming {
                span: fspan,
                msg: format!("function symbol `{func}` must start with a lowercase letter"),
            });
        }
        self.expect_sym(":")?;
        let (k, kspan) = self.small_int()?;
        self.expect_sym("(")?;
        let vars = self.var_list(")")?;
        self.expect_sym(")")?;
        if vars.len() != k {
            return Err(QsoError::Arity {
                name: func,
                expected: k,
                found: vars.len(),
                span: kspan,
            });
        }
        self.expect_sym(".")?;
        self.fn_scope.push((func.clone(), k));
        let body = self.expr();
        self.fn_scope.pop();
        let body = self.to_q(body?)?;
        let span = start.join(body.span);
        Ok(Expr::Q(QFormula {
            kind: QKind::Lsfp {
                func,
                vars,
                body: Box::new(body),
            },
            span,
        }))
    }

    fn path(&mut self, start: Span) -> Result<Expr> {
        self.bump();
        self.expect_sym("(")?;
        let xs = self.var_list(";")?;
        self.expect_sym(";")?;
        let ys = self.var_list(")")?;
        self.expect_sym(")")?;
        self.expect_sym("{")?;
        let body = self.expr()?;
        let close = self.expect_sym("}")?;
        let body = self.to_b(body)?;
        Ok(Expr::Q(QFormula {
            kind: QKind::Path { xs, ys, body },
            span: start.join(close),
        }))
    }

    fn atom(&mut self) -> Result<Expr> {
        let (name, span) = self.ident()?;
        if !self.peek_sym("(") {
            if !is_lower(&name) {
                return Err(QsoError::Naming {
                    span,
                    msg: format!("first-order variable `{name}` must start with a lowercase letter"),
                });
            }
            return Ok(Expr::Var(name, span));
        }
        self.bump();
        let args = self.var_list(")")?;
        let close = self.expect_sym(")")?;
        let span = span.join(close);
        let arity_err = |expected: usize| QsoError::Arity {
            name: name.clone(),
            expected,
            found: args.len(),
            span,
        };
        if let Some(v) = self.so_scope.iter().rev().find(|v| v.name == name) {
            if v.arity != args.len() {
                return Err(arity_err(v.arity));
            }
            return Ok(Expr::B(BFormula {
                kind: BKind::SoAtom(name, args),
                span,
            }));
        }
        if let Some(k) = self.sig.arity(&name) {
            if k != args.len() {
                return Err(arity_err(k));
            }
            return Ok(Expr::B(BFormula {
                kind: BKind::Rel(name, args),
                span,
            }));
        }
        if let Some((_, k)) = self.fn_scope.iter().rev().find(|(f, _)| *f == name) {
            if *k != args.len() {
                return Err(arity_err(*k));
            }
            return Ok(Expr::Q(QFormula {
                kind: QKind::Fn(name, args),
                span,
            }));
        }
        if is_lower(&name) {
            return Err(QsoError::Unbound {
                kind: "function symbol",
                name,
            });
        }
        Err(QsoError::UnknownRelation { name, span })
    }
}

// Rendering levels, loosest first.
const L_IMP: u8 = 1;
const L_OR: u8 = 2;
const L_AND: u8 = 3;
const L_CMP: u8 = 4;
const L_ADD: u8 = 5;
const L_MUL: u8 = 6;
const L_UNARY: u8 = 7;
const L_ATOM: u8 = 8;

/// Canonical text that parses back to a structurally equal formula.
pub fn render_formula(f: &QFormula) -> String {
    let mut out = String::new();
    rq(f, 0, true, &mut out);
    out
}

pub fn render_boolean(f: &BFormula) -> String {
    let mut out = String::new();
    rb(f, 0, true, &mut out);
    out
}

fn level_b(f: &BFormula) -> u8 {
    match &f.kind {
        BKind::True | BKind::Rel(..) | BKind::SoAtom(..) => L_ATOM,
        BKind::Eq(..) | BKind::Less(..) => L_CMP,
        BKind::Not(_) => L_UNARY,
        BKind::Or(..) => L_OR,
        BKind::And(..) => L_AND,
        BKind::Implies(..) => L_IMP,
        BKind::Exists(..) | BKind::Forall(..) => 0,
    }
}

fn level_q(f: &QFormula) -> u8 {
    match &f.kind {
        QKind::Bool(b) => level_b(b),
        QKind::Const(c) if c.sign() == num_bigint::Sign::Minus => L_ATOM,
        QKind::Const(_) | QKind::Fn(..) | QKind::Path { .. } => L_ATOM,
        QKind::Bin(BinOp::Add, ..) => L_ADD,
        QKind::Bin(BinOp::Mul, ..) => L_MUL,
        QKind::Bin(..) => L_ATOM,
        QKind::Cond(..) => L_IMP,
        QKind::Agg(..) | QKind::Lsfp { .. } => 0,
    }
}

/// Wraps in parentheses when the construct binds looser than `min`,
/// or is an open-ended binder that is not at the tail of its context.
fn open(level: u8, min: u8, tail: bool, out: &mut String) -> (bool, bool) {
    let paren = if level == 0 { !tail } else { level < min };
    if paren {
        out.push('(');
    }
    (paren, paren || tail)
}

fn binder_text(b: &Binder) -> String {
    match b {
        Binder::Fo(x) => x.clone(),
        Binder::So(v) => format!("{}:{}", v.name, v.arity),
    }
}

fn rb(f: &BFormula, min: u8, tail: bool, out: &mut String) {
    let lvl = level_b(f);
    let (paren, tail) = open(lvl, min, tail, out);
    match &f.kind {
        BKind::True => out.push_str("true"),
        BKind::Eq(x, y) => out.push_str(&format!("{x} = {y}")),
        BKind::Less(x, y) => out.push_str(&format!("{x} < {y}")),
        BKind::Rel(r, args) | BKind::SoAtom(r, args) => {
            out.push_str(&format!("{r}({})", args.join(",")))
        }
        BKind::Not(a) => {
            out.push('!');
            rb(a, L_UNARY, tail, out);
        }
        BKind::Or(a, b) => {
            rb(a, L_OR, false, out);
            out.push_str(" | ");
            rb(b, L_OR + 1, tail, out);
        }
        BKind::And(a, b) => {
            rb(a, L_AND, false, out);
            out.push_str(" & ");
            rb(b, L_AND + 1, tail, out);
        }
        BKind::Implies(a, b) => {
            rb(a, L_IMP + 1, false, out);
            out.push_str(" -> ");
            rb(b, L_IMP, tail, out);
        }
        BKind::Exists(v, a) | BKind::Forall(v, a) => {
            let kw = if matches!(f.kind, BKind::Exists(..)) { "exists" } else { "forall" };
            out.push_str(&format!("{kw} {}. ", binder_text(v)));
            rb(a, 0, tail, out);
        }
    }
    if paren {
        out.push(')');
    }
}

fn rq(f: &QFormula, min: u8, tail: bool, out: &mut String) {
    if let QKind::Bool(b) = &f.kind {
        return rb(b, min, tail, out);
    }
    let lvl = level_q(f);
    let (paren, tail) = open(lvl, min, tail, out);
    match &f.kind {
        QKind::Bool(_) => unreachable!(),
        QKind::Const(c) => out.push_str(&c.to_string()),
        QKind::Fn(h, args) => out.push_str(&format!("{h}({})", args.join(","))),
        QKind::Bin(op @ (BinOp::Add | BinOp::Mul), a, b) => {
            let (l, sym) = if *op == BinOp::Add { (L_ADD, " + ") } else { (L_MUL, " * ") };
            rq(a, l, false, out);
            out.push_str(sym);
            rq(b, l + 1, tail, out);
        }
        QKind::Bin(op, a, b) => {
            out.push_str(if *op == BinOp::Max { "max(" } else { "min(" });
            rq(a, 0, true, out);
            out.push_str(", ");
            rq(b, 0, true, out);
            out.push(')');
        }
        QKind::Agg(op, v, a) => {
            out.push_str(&format!("{} {}. ", op.keyword(), binder_text(v)));
            rq(a, 0, tail, out);
        }
        QKind::Cond(phi, a) => {
            rb(phi, L_IMP + 1, false, out);
            out.push_str(" ~> ");
            rq(a, L_IMP, tail, out);
        }
        QKind::Lsfp { func, vars, body } => {
            out.push_str(&format!("lsfp {func}:{} ({}). ", vars.len(), vars.join(",")));
            rq(body, 0, tail, out);
        }
        QKind::Path { xs, ys, body } => {
            out.push_str(&format!("path ({} ; {}) {{ ", xs.join(","), ys.join(",")));
            rb(body, 0, true, out);
            out.push_str(" }");
        }
    }
    if paren {
        out.push(')');
    }
}
