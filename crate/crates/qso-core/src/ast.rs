//! Abstract syntax for the Boolean and quantitative layers.

use num_bigint::BigInt;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

/// Byte offsets into the parsed text. Spans never take part in structural equality.
#[derive(Debug, Clone, Copy, Default, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn join(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

/// A second-order variable with its arity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SoVar {
    pub name: String,
    pub arity: usize,
}

impl SoVar {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        SoVar {
            name: name.into(),
            arity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Binder {
    Fo(String),
    So(SoVar),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BFormula {
    pub kind: BKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BKind {
    True,
    Eq(String, String),
    Less(String, String),
    Rel(String, Vec<String>),
    SoAtom(String, Vec<String>),
    Not(Box<BFormula>),
    Or(Box<BFormula>, Box<BFormula>),
    And(Box<BFormula>, Box<BFormula>),
    Implies(Box<BFormula>, Box<BFormula>),
    Exists(Binder, Box<BFormula>),
    Forall(Binder, Box<BFormula>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Agg {
    Sum,
    Prod,
    Max,
    Min,
}

impl Agg {
    pub fn keyword(self) -> &'static str {
        match self {
            Agg::Sum => "sum",
            Agg::Prod => "prod",
            Agg::Max => "max",
            Agg::Min => "min",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Mul,
    Max,
    Min,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QFormula {
    pub kind: QKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum QKind {
    Bool(BFormula),
    Const(BigInt),
    Fn(String, Vec<String>),
    Bin(BinOp, Box<QFormula>, Box<QFormula>),
    Agg(Agg, Binder, Box<QFormula>),
    /// `φ ~> α`, shorthand for `φ * α + !φ`.
    Cond(BFormula, Box<QFormula>),
    Lsfp {
        func: String,
        vars: Vec<String>,
        body: Box<QFormula>,
    },
    Path {
        xs: Vec<String>,
        ys: Vec<String>,
        body: BFormula,
    },
}

fn bx<T>(t: T) -> Box<T> {
    Box::new(t)
}

fn strs(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

impl BFormula {
    pub fn new(kind: BKind) -> Self {
        BFormula {
            kind,
            span: Span::default(),
        }
    }

    pub fn tru() -> Self {
        Self::new(BKind::True)
    }

    pub fn fals() -> Self {
        Self::not(Self::tru())
    }

    pub fn eq(x: &str, y: &str) -> Self {
        Self::new(BKind::Eq(x.into(), y.into()))
    }

    pub fn less(x: &str, y: &str) -> Self {
        Self::new(BKind::Less(x.into(), y.into()))
    }

    pub fn rel(name: &str, args: &[&str]) -> Self {
        Self::new(BKind::Rel(name.into(), strs(args)))
    }

    pub fn so(name: &str, args: &[&str]) -> Self {
        Self::new(BKind::SoAtom(name.into(), strs(args)))
    }

    pub fn so_owned(name: &str, args: Vec<String>) -> Self {
        Self::new(BKind::SoAtom(name.into(), args))
    }

    pub fn not(f: BFormula) -> Self {
        Self::new(BKind::Not(bx(f)))
    }

    pub fn or(a: BFormula, b: BFormula) -> Self {
        Self::new(BKind::Or(bx(a), bx(b)))
    }

    pub fn and(a: BFormula, b: BFormula) -> Self {
        Self::new(BKind::And(bx(a), bx(b)))
    }

    pub fn implies(a: BFormula, b: BFormula) -> Self {
        Self::new(BKind::Implies(bx(a), bx(b)))
    }

    pub fn exists(x: &str, body: BFormula) -> Self {
        Self::new(BKind::Exists(Binder::Fo(x.into()), bx(body)))
    }

    pub fn forall(x: &str, body: BFormula) -> Self {
        Self::new(BKind::Forall(Binder::Fo(x.into()), bx(body)))
    }

    pub fn exists_so(v: SoVar, body: BFormula) -> Self {
        Self::new(BKind::Exists(Binder::So(v), bx(body)))
    }

    pub fn forall_so(v: SoVar, body: BFormula) -> Self {
        Self::new(BKind::Forall(Binder::So(v), bx(body)))
    }

    /// Left-nested conjunction; `true` when empty.
    pub fn and_all(fs: impl IntoIterator<Item = BFormula>) -> Self {
        fs.into_iter()
            .reduce(Self::and)
            .unwrap_or_else(Self::tru)
    }

    /// Left-nested disjunction; `!true` when empty.
    pub fn or_all(fs: impl IntoIterator<Item = BFormula>) -> Self {
        fs.into_iter()
            .reduce(Self::or)
            .unwrap_or_else(Self::fals)
    }

    pub fn exists_all<S: AsRef<str>>(vars: &[S], body: BFormula) -> Self {
        vars.iter()
            .rev()
            .fold(body, |acc, v| Self::exists(v.as_ref(), acc))
    }

    pub fn forall_all<S: AsRef<str>>(vars: &[S], body: BFormula) -> Self {
        vars.iter()
            .rev()
            .fold(body, |acc, v| Self::forall(v.as_ref(), acc))
    }

    pub fn is_true(&self) -> bool {
        matches!(self.kind, BKind::True)
    }

    pub fn is_false(&self) -> bool {
        matches!(&self.kind, BKind::Not(b) if b.is_true())
    }

    /// Removes `∧`, `→` and `∀`, leaving only `=`, `<`, relation atoms, `⊤`, SO atoms, `¬`, `∨`, `∃`.
    pub fn desugar(&self) -> BFormula {
        let k = match &self.kind {
            BKind::And(a, b) => BKind::Not(bx(BFormula::or(
                BFormula::not(a.desugar()),
                BFormula::not(b.desugar()),
            ))),
            BKind::Implies(a, b) => BKind::Or(bx(BFormula::not(a.desugar())), bx(b.desugar())),
            BKind::Forall(v, b) => BKind::Not(bx(BFormula::new(BKind::Exists(
                v.clone(),
                bx(BFormula::not(b.desugar())),
            )))),
            BKind::Not(a) => BKind::Not(bx(a.desugar())),
            BKind::Or(a, b) => BKind::Or(bx(a.desugar()), bx(b.desugar())),
            BKind::Exists(v, b) => BKind::Exists(v.clone(), bx(b.desugar())),
            other => other.clone(),
        };
        BFormula {
            kind: k,
            span: self.span,
        }
    }

    pub fn children(&self) -> Vec<&BFormula> {
        match &self.kind {
            BKind::Not(a) | BKind::Exists(_, a) | BKind::Forall(_, a) => vec![a],
            BKind::Or(a, b) | BKind::And(a, b) | BKind::Implies(a, b) => vec![a, b],
            _ => vec![],
        }
    }

    pub fn free_variables(&self) -> FreeVars {
        let mut fv = FreeVars::default();
        self.collect_free(&mut Scope::default(), &mut fv);
        fv
    }

    fn collect_free(&self, scope: &mut Scope, fv: &mut FreeVars) {
        match &self.kind {
            BKind::True => {}
            BKind::Eq(x, y) | BKind::Less(x, y) => {
                scope.use_fo(x, fv);
                scope.use_fo(y, fv);
            }
            BKind::Rel(_, args) => args.iter().for_each(|a| scope.use_fo(a, fv)),
            BKind::SoAtom(x, args) => {
                if !scope.so.iter().any(|s| s == x) {
                    fv.so.insert(x.clone());
                }
                args.iter().for_each(|a| scope.use_fo(a, fv));
            }
            BKind::Exists(b, body) | BKind::Forall(b, body) => {
                scope.push(b);
                body.collect_free(scope, fv);
                scope.pop(b);
            }
            _ => self.children().iter().for_each(|c| c.collect_free(scope, fv)),
        }
    }

    /// True when no second-order atom or quantifier occurs.
    pub fn is_so_free(&self) -> bool {
        match &self.kind {
            BKind::SoAtom(..) => false,
            BKind::Exists(Binder::So(_), _) | BKind::Forall(Binder::So(_), _) => false,
            _ => self.children().iter().all(|c| c.is_so_free()),
        }
    }

    /// True when no second-order quantifier occurs (SO atoms allowed).
    pub fn is_first_order(&self) -> bool {
        match &self.kind {
            BKind::Exists(Binder::So(_), _) | BKind::Forall(Binder::So(_), _) => false,
            _ => self.children().iter().all(|c| c.is_first_order()),
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    /// Simultaneously renames free first-order variables. Targets must not be captured.
    pub fn subst_fo(&self, map: &HashMap<String, String>) -> BFormula {
        if map.is_empty() {
            return self.clone();
        }
        let r = |x: &String| map.get(x).cloned().unwrap_or_else(|| x.clone());
        let kind = match &self.kind {
            BKind::True => BKind::True,
            BKind::Eq(x, y) => BKind::Eq(r(x), r(y)),
            BKind::Less(x, y) => BKind::Less(r(x), r(y)),
            BKind::Rel(n, args) => BKind::Rel(n.clone(), args.iter().map(r).collect()),
            BKind::SoAtom(n, args) => BKind::SoAtom(n.clone(), args.iter().map(r).collect()),
            BKind::Not(a) => BKind::Not(bx(a.subst_fo(map))),
            BKind::Or(a, b) => BKind::Or(bx(a.subst_fo(map)), bx(b.subst_fo(map))),
            BKind::And(a, b) => BKind::And(bx(a.subst_fo(map)), bx(b.subst_fo(map))),
            BKind::Implies(a, b) => BKind::Implies(bx(a.subst_fo(map)), bx(b.subst_fo(map))),
            BKind::Exists(v, a) | BKind::Forall(v, a) => {
                let body = match v {
                    Binder::Fo(x) if map.contains_key(x) => {
                        let mut inner = map.clone();
                        inner.remove(x);
                        a.subst_fo(&inner)
                    }
                    _ => a.subst_fo(map),
                };
                if matches!(self.kind, BKind::Exists(..)) {
                    BKind::Exists(v.clone(), bx(body))
                } else {
                    BKind::Forall(v.clone(), bx(body))
                }
            }
        };
        BFormula {
            kind,
            span: self.span,
        }
    }

    /// Simultaneously renames free second-order variables.
    pub fn subst_so(&self, map: &HashMap<String, String>) -> BFormula {
        if map.is_empty() {
            return self.clone();
        }
        let kind = match &self.kind {
            BKind::SoAtom(n, args) => {
                BKind::SoAtom(map.get(n).cloned().unwrap_or_else(|| n.clone()), args.clone())
            }
            BKind::Not(a) => BKind::Not(bx(a.subst_so(map))),
            BKind::Or(a, b) => BKind::Or(bx(a.subst_so(map)), bx(b.subst_so(map))),
            BKind::And(a, b) => BKind::And(bx(a.subst_so(map)), bx(b.subst_so(map))),
            BKind::Implies(a, b) => BKind::Implies(bx(a.subst_so(map)), bx(b.subst_so(map))),
            BKind::Exists(v, a) | BKind::Forall(v, a) => {
                let body = match v {
                    Binder::So(x) if map.contains_key(&x.name) => {
                        let mut inner = map.clone();
                        inner.remove(&x.name);
                        a.subst_so(&inner)
                    }
                    _ => a.subst_so(map),
                };
                if matches!(self.kind, BKind::Exists(..)) {
                    BKind::Exists(v.clone(), bx(body))
                } else {
                    BKind::Forall(v.clone(), bx(body))
                }
            }
            other => other.clone(),
        };
        BFormula {
            kind,
            span: self.span,
        }
    }

    /// Every variable name occurring in the formula, bound or free.
    pub fn names(&self, out: &mut BTreeSet<String>) {
        match &self.kind {
            BKind::Eq(x, y) | BKind::Less(x, y) => {
                out.insert(x.clone());
                out.insert(y.clone());
            }
            BKind::Rel(_, args) => out.extend(args.iter().cloned()),
            BKind::SoAtom(n, args) => {
                out.insert(n.clone());
                out.extend(args.iter().cloned());
            }
            BKind::Exists(v, _) | BKind::Forall(v, _) => {
                out.insert(match v {
                    Binder::Fo(x) => x.clone(),
                    Binder::So(x) => x.name.clone(),
                });
            }
            _ => {}
        }
        self.children().iter().for_each(|c| c.names(out));
    }
}

impl QFormula {
    pub fn new(kind: QKind) -> Self {
        QFormula {
            kind,
            span: Span::default(),
        }
    }

    pub fn boolean(f: BFormula) -> Self {
        let span = f.span;
        QFormula {
            kind: QKind::Bool(f),
            span,
        }
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        Self::new(QKind::Const(c.into()))
    }

    pub fn func(name: &str, args: &[&str]) -> Self {
        Self::new(QKind::Fn(name.into(), strs(args)))
    }

    pub fn add(a: QFormula, b: QFormula) -> Self {
        Self::new(QKind::Bin(BinOp::Add, bx(a), bx(b)))
    }

    pub fn mul(a: QFormula, b: QFormula) -> Self {
        Self::new(QKind::Bin(BinOp::Mul, bx(a), bx(b)))
    }

    pub fn bin(op: BinOp, a: QFormula, b: QFormula) -> Self {
        Self::new(QKind::Bin(op, bx(a), bx(b)))
    }

    pub fn agg(op: Agg, b: Binder, body: QFormula) -> Self {
        Self::new(QKind::Agg(op, b, bx(body)))
    }

    pub fn sum(x: &str, body: QFormula) -> Self {
        Self::agg(Agg::Sum, Binder::Fo(x.into()), body)
    }

    pub fn prod(x: &str, body: QFormula) -> Self {
        Self::agg(Agg::Prod, Binder::Fo(x.into()), body)
    }

    pub fn sum_so(v: SoVar, body: QFormula) -> Self {
        Self::agg(Agg::Sum, Binder::So(v), body)
    }

    pub fn prod_so(v: SoVar, body: QFormula) -> Self {
        Self::agg(Agg::Prod, Binder::So(v), body)
    }

    pub fn cond(phi: BFormula, alpha: QFormula) -> Self {
        Self::new(QKind::Cond(phi, bx(alpha)))
    }

    pub fn lsfp(func: &str, vars: &[&str], body: QFormula) -> Self {
        Self::new(QKind::Lsfp {
            func: func.into(),
            vars: strs(vars),
            body: bx(body),
        })
    }

    pub fn path(xs: &[&str], ys: &[&str], body: BFormula) -> Self {
        Self::new(QKind::Path {
            xs: strs(xs),
            ys: strs(ys),
            body,
        })
    }

    /// Left-nested sum; the constant 0 when empty.
    pub fn sum_all(fs: impl IntoIterator<Item = QFormula>) -> Self {
        fs.into_iter()
            .reduce(Self::add)
            .unwrap_or_else(|| Self::constant(0))
    }

    pub fn children(&self) -> Vec<&QFormula> {
        match &self.kind {
            QKind::Bin(_, a, b) => vec![a, b],
            QKind::Agg(_, _, a) | QKind::Cond(_, a) => vec![a],
            QKind::Lsfp { body, .. } => vec![body],
            _ => vec![],
        }
    }

    /// Boolean subformulas reachable without entering another Boolean formula.
    pub fn boolean_leaves(&self) -> Vec<&BFormula> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a BFormula>) {
        match &self.kind {
            QKind::Bool(b) | QKind::Cond(b, _) => out.push(b),
            QKind::Path { body, .. } => out.push(body),
            _ => {}
        }
        for c in self.children() {
            c.collect_leaves(out);
        }
    }

    /// Replaces every `φ ~> α` by `φ * α + !φ` and desugars Boolean leaves.
    pub fn desugar(&self) -> QFormula {
        let k = match &self.kind {
            QKind::Bool(b) => QKind::Bool(b.desugar()),
            QKind::Cond(phi, alpha) => {
                let phi = phi.desugar();
                return QFormula::add(
                    QFormula::mul(QFormula::boolean(phi.clone()), alpha.desugar()),
                    QFormula::boolean(BFormula::not(phi)),
                );
            }
            QKind::Bin(op, a, b) => QKind::Bin(*op, bx(a.desugar()), bx(b.desugar())),
            QKind::Agg(op, v, a) => QKind::Agg(*op, v.clone(), bx(a.desugar())),
            QKind::Lsfp { func, vars, body } => QKind::Lsfp {
                func: func.clone(),
                vars: vars.clone(),
                body: bx(body.desugar()),
            },
            QKind::Path { xs, ys, body } => QKind::Path {
                xs: xs.clone(),
                ys: ys.clone(),
                body: body.desugar(),
            },
            other => other.clone(),
        };
        QFormula {
            kind: k,
            span: self.span,
        }
    }

    pub fn free_variables(&self) -> FreeVars {
        let mut fv = FreeVars::default();
        self.collect_free(&mut Scope::default(), &mut fv);
        fv
    }

    fn collect_free(&self, scope: &mut Scope, fv: &mut FreeVars) {
        match &self.kind {
            QKind::Bool(b) => b.collect_free(scope, fv),
            QKind::Const(_) => {}
            QKind::Fn(h, args) => {
                if !scope.fns.iter().any(|f| f == h) {
                    fv.fns.insert(h.clone());
                }
                args.iter().for_each(|a| scope.use_fo(a, fv));
            }
            QKind::Bin(_, a, b) => {
                a.collect_free(scope, fv);
                b.collect_free(scope, fv);
            }
            QKind::Agg(_, v, a) => {
                scope.push(v);
                a.collect_free(scope, fv);
                scope.pop(v);
            }
            QKind::Cond(phi, a) => {
                phi.collect_free(scope, fv);
                a.collect_free(scope, fv);
            }
            QKind::Lsfp { func, vars, body } => {
                vars.iter().for_each(|v| scope.use_fo(v, fv));
                let binders: Vec<Binder> = vars.iter().map(|v| Binder::Fo(v.clone())).collect();
                binders.iter().for_each(|b| scope.push(b));
                scope.fns.push(func.clone());
                body.collect_free(scope, fv);
                scope.fns.pop();
                binders.iter().rev().for_each(|b| scope.pop(b));
            }
            QKind::Path { xs, ys, body } => {
                xs.iter().chain(ys).for_each(|v| scope.use_fo(v, fv));
                let binders: Vec<Binder> =
                    xs.iter().chain(ys).map(|v| Binder::Fo(v.clone())).collect();
                binders.iter().for_each(|b| scope.push(b));
                body.collect_free(scope, fv);
                binders.iter().rev().for_each(|b| scope.pop(b));
            }
        }
    }

    pub fn is_sentence(&self) -> bool {
        self.free_variables().is_empty()
    }

    /// True when some constant is negative.
    pub fn uses_negative_constants(&self) -> bool {
        match &self.kind {
            QKind::Const(c) => c.sign() == num_bigint::Sign::Minus,
            _ => self.children().iter().any(|c| c.uses_negative_constants()),
        }
    }

    pub fn size(&self) -> usize {
        let own = match &self.kind {
            QKind::Bool(b) | QKind::Cond(b, _) => b.size(),
            QKind::Path { body, .. } => body.size(),
            _ => 0,
        };
        1 + own + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    /// Depth of the quantitative layer (Boolean leaves count as depth 1).
    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }
}

/// Free first-order variables, second-order variables and function symbols.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FreeVars {
    pub fo: BTreeSet<String>,
    pub so: BTreeSet<String>,
    pub fns: BTreeSet<String>,
}

impl FreeVars {
    pub fn is_empty(&self) -> bool {
        self.fo.is_empty() && self.so.is_empty() && self.fns.is_empty()
    }
}

#[derive(Default)]
struct Scope {
    fo: Vec<String>,
    so: Vec<String>,
    fns: Vec<String>,
}

impl Scope {
    fn use_fo(&self, x: &str, fv: &mut FreeVars) {
        if !self.fo.iter().any(|v| v == x) {
            fv.fo.insert(x.to_string());
        }
    }

    fn push(&mut self, b: &Binder) {
        match b {
            Binder::Fo(x) => self.fo.push(x.clone()),
            Binder::So(v) => self.so.push(v.name.clone()),
        }
    }

    fn pop(&mut self, b: &Binder) {
        match b {
            Binder::Fo(_) => {
                self.fo.pop();
            }
            Binder::So(_) => {
                self.so.pop();
            }
        }
    }
}
