//! Exact evaluation of Boolean and quantitative formulas.
//!
//! Formulas are compiled against a signature into a shared node graph where
//! variables are slots. All resource checks happen before evaluation starts.

use crate::ast::{Agg, BFormula, BKind, BinOp, Binder, QFormula, QKind, SoVar};
use crate::config::Config;
use crate::error::{QsoError, Result};
use crate::fixpoint::{count_walks, least_support_fixed_point, FunctionTable};
use crate::model::{Assignment, Signature, Structure, TupleSet};
use crate::Value;
use num_traits::{Signed, ToPrimitive, Zero};
use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

/// Free symbols a compiled formula expects from the assignment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FreeDecl {
    pub fo: Vec<String>,
    pub so: Vec<SoVar>,
    pub fns: Vec<(String, usize)>,
}

impl FreeDecl {
    /// The free symbols of `f`, with arities taken from `a`.
    pub fn for_formula(f: &QFormula, a: &Assignment) -> Result<Self> {
        let fv = f.free_variables();
        let mut d = FreeDecl::default();
        for x in fv.fo {
            if !a.fo.contains_key(&x) {
                return Err(QsoError::Unbound {
                    kind: "variable",
                    name: x,
                });
            }
            d.fo.push(x);
        }
        for x in fv.so {
            let set = a.so.get(&x).ok_or_else(|| QsoError::Unbound {
                kind: "second-order variable",
                name: x.clone(),
            })?;
            d.so.push(SoVar::new(x, set.arity()));
        }
        for h in fv.fns {
            let t = a.fns.get(&h).ok_or_else(|| QsoError::Unbound {
                kind: "function symbol",
                name: h.clone(),
            })?;
            d.fns.push((h, t.arity()));
        }
        Ok(d)
    }
}

type Id = u32;
type Slots = Box<[u32]>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum BNode {
    True,
    Eq(u32, u32),
    Less(u32, u32),
    Rel(u32, Slots),
    So(u32, Slots),
    Not(Id),
    And(Box<[Id]>),
    Or(Box<[Id]>),
    Ex(u32, Id),
    All(u32, Id),
    ExSo(u32, u32, Id),
    AllSo(u32, u32, Id),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum QNode {
    Bool(Id),
    Const(Value),
    Fn(u32, Slots),
    Bin(BinOp, Id, Id),
    AggFo(Agg, u32, Id),
    AggSo(Agg, u32, u32, Id),
    Lsfp {
        name: Box<str>,
        fslot: u32,
        args: Slots,
        inner: Slots,
        body: Id,
    },
    Path {
        xs: Slots,
        ys: Slots,
        inner: Slots,
        body: Id,
    },
}

#[derive(Debug, Clone, Default)]
struct Info {
    fo: Slots,
    so: Slots,
    size: u32,
    quants: u32,
    memo: bool,
    counting: bool,
    ctx_fo: Slots,
    ctx_so: Slots,
}

fn union(a: &[u32], b: &[u32]) -> Slots {
    let mut s: BTreeSet<u32> = a.iter().copied().collect();
    s.extend(b.iter().copied());
    s.into_iter().collect()
}

fn minus(a: &[u32], drop: &[u32]) -> Slots {
    a.iter().copied().filter(|x| !drop.contains(x)).collect()
}

#[derive(Debug, Clone, Copy)]
enum Root {
    B(Id),
    Q(Id),
}

/// A formula compiled against a signature and a set of free symbols.
#[derive(Debug, Clone)]
pub struct Compiled {
    sig: Signature,
    decl: FreeDecl,
    b: Vec<BNode>,
    bi: Vec<Info>,
    q: Vec<QNode>,
    qi: Vec<Info>,
    root: Root,
    fo_slots: usize,
    so_slots: usize,
    fn_slots: usize,
    fo_opt: bool,
    so_arities: BTreeSet<usize>,
    table_arities: BTreeSet<usize>,
}

struct Compiler<'a> {
    sig: &'a Signature,
    cfg: &'a Config,
    p: Compiled,
    bmap: HashMap<BNode, Id>,
    qmap: HashMap<QNode, Id>,
    fo: Vec<(String, u32)>,
    so: Vec<(String, u32, usize)>,
    fns: Vec<(String, u32, usize)>,
    fo_next: u32,
    so_next: u32,
    fn_next: u32,
    lsfp: Vec<u32>,
}

impl<'a> Compiler<'a> {
    fn fo_var(&self, x: &str) -> Result<u32> {
        self.fo
            .iter()
            .rev()
            .find(|(n, _)| n == x)
            .map(|&(_, s)| s)
            .ok_or_else(|| QsoError::Unbound {
                kind: "variable",
                name: x.to_string(),
            })
    }

    fn fo_vars(&self, xs: &[String]) -> Result<Slots> {
        xs.iter().map(|x| self.fo_var(x)).collect()
    }

    fn push_fo(&mut self, x: &str) -> u32 {
        let s = self.fo_next;
        self.fo.push((x.to_string(), s));
        self.fo_next += 1;
        self.p.fo_slots = self.p.fo_slots.max(self.fo_next as usize);
        s
    }

    fn pop_fo(&mut self) {
        self.fo.pop();
        self.fo_next -= 1;
    }

    fn push_so(&mut self, v: &SoVar) -> u32 {
        let s = self.so_next;
        self.so.push((v.name.clone(), s, v.arity));
        self.so_next += 1;
        self.p.so_slots = self.p.so_slots.max(self.so_next as usize);
        self.p.so_arities.insert(v.arity);
        s
    }

    fn pop_so(&mut self) {
        self.so.pop();
        self.so_next -= 1;
    }

    fn bnode(&mut self, node: BNode) -> Id {
        if let Some(&id) = self.bmap.get(&node) {
            return id;
        }
        let bi = &self.p.bi;
        let info = match &node {
            BNode::True => Info::default(),
            BNode::Eq(x, y) | BNode::Less(x, y) => Info {
                fo: union(&[*x], &[*y]),
                ..Info::default()
            },
            BNode::Rel(_, args) => Info {
                fo: union(args, &[]),
                ..Info::default()
            },
            BNode::So(x, args) => Info {
                fo: union(args, &[]),
                so: vec![*x].into(),
                ..Info::default()
            },
            BNode::Not(a) => Info {
                size: bi[*a as usize].size,
                quants: bi[*a as usize].quants,
                ..bi[*a as usize].clone()
            },
            BNode::And(cs) | BNode::Or(cs) => {
                let mut i = Info::default();
                for &c in cs.iter() {
                    let ci = &bi[c as usize];
                    i.fo = union(&i.fo, &ci.fo);
                    i.so = union(&i.so, &ci.so);
                    i.size += ci.size;
                    i.quants = i.quants.max(ci.quants);
                }
                i
            }
            BNode::Ex(x, a) | BNode::All(x, a) => {
                let ai = &bi[*a as usize];
                Info {
                    fo: minus(&ai.fo, &[*x]),
                    so: ai.so.clone(),
                    size: ai.size,
                    quants: ai.quants + 1,
                    memo: ai.quants >= 1 || ai.size >= 16,
                    ..Info::default()
                }
            }
            BNode::ExSo(x, _, a) | BNode::AllSo(x, _, a) => {
                let ai = &bi[*a as usize];
                Info {
                    fo: ai.fo.clone(),
                    so: minus(&ai.so, &[*x]),
                    size: ai.size,
                    quants: ai.quants + 1,
                    memo: true,
                    ..Info::default()
                }
            }
        };
        let info = Info {
            size: info.size + 1,
            memo: info.memo && !matches!(node, BNode::Not(_)),
            ..info
        };
        let id = self.p.b.len() as Id;
        self.p.b.push(node.clone());
        self.p.bi.push(info);
        self.bmap.insert(node, id);
        id
    }

    fn qnode(&mut self, node: QNode) -> Id {
        if let Some(&id) = self.qmap.get(&node) {
            return id;
        }
        let qi = &self.p.qi;
        let info = match &node {
            QNode::Bool(b) => Info {
                counting: true,
                ..self.p.bi[*b as usize].clone()
            },
            QNode::Const(c) => Info {
                counting: !c.is_negative() && c.to_u128().is_some(),
                ..Info::default()
            },
            QNode::Fn(_, args) => Info {
                fo: union(args, &[]),
                ..Info::default()
            },
            QNode::Bin(op, a, b) => {
                let (ai, bi) = (&qi[*a as usize], &qi[*b as usize]);
                Info {
                    fo: union(&ai.fo, &bi.fo),
                    so: union(&ai.so, &bi.so),
                    counting: matches!(op, BinOp::Add | BinOp::Mul) && ai.counting && bi.counting,
                    ..Info::default()
                }
            }
            QNode::AggFo(op, x, a) => {
                let ai = &qi[*a as usize];
                Info {
                    fo: minus(&ai.fo, &[*x]),
                    so: ai.so.clone(),
                    counting: *op == Agg::Sum && ai.counting,
                    ..Info::default()
                }
            }
            QNode::AggSo(op, x, _, a) => {
                let ai = &qi[*a as usize];
                Info {
                    fo: ai.fo.clone(),
                    so: minus(&ai.so, &[*x]),
                    counting: *op == Agg::Sum && ai.counting,
                    ..Info::default()
                }
            }
            QNode::Lsfp { args, inner, body, .. } => {
                let bi = &qi[*body as usize];
                let ctx_fo = minus(&bi.fo, inner);
                Info {
                    fo: union(&ctx_fo, args),
                    so: bi.so.clone(),
                    ctx_fo,
                    ctx_so: bi.so.clone(),
                    ..Info::default()
                }
            }
            QNode::Path { xs, ys, inner, body } => {
                let bi = &self.p.bi[*body as usize];
                let ctx_fo = minus(&bi.fo, inner);
                Info {
                    fo: union(&union(&ctx_fo, xs), ys),
                    so: bi.so.clone(),
                    ctx_fo,
                    ctx_so: bi.so.clone(),
                    ..Info::default()
                }
            }
        };
        let id = self.p.q.len() as Id;
        self.p.q.push(node.clone());
        self.p.qi.push(info);
        self.qmap.insert(node, id);
        id
    }

    fn boolean(&mut self, f: &BFormula) -> Result<Id> {
        let node = match &f.kind {
            BKind::True => BNode::True,
            BKind::Eq(x, y) => BNode::Eq(self.fo_var(x)?, self.fo_var(y)?),
            BKind::Less(x, y) => BNode::Less(self.fo_var(x)?, self.fo_var(y)?),
            BKind::Rel(r, args) => {
                let i = self.sig.index_of(r).ok_or_else(|| QsoError::UnknownRelation {
                    name: r.clone(),
                    span: f.span,
                })?;
                let k = self.sig.relations()[i].1;
                if k != args.len() {
                    return Err(QsoError::Arity {
                        name: r.clone(),
                        expected: k,
                        found: args.len(),
                        span: f.span,
                    });
                }
                BNode::Rel(i as u32, self.fo_vars(args)?)
            }
            BKind::SoAtom(x, args) => {
                let &(_, slot, k) = self
                    .so
                    .iter()
                    .rev()
                    .find(|(n, ..)| n == x)
                    .ok_or_else(|| QsoError::Unbound {
                        kind: "second-order variable",
                        name: x.clone(),
                    })?;
                if k != args.len() {
                    return Err(QsoError::Arity {
                        name: x.clone(),
                        expected: k,
                        found: args.len(),
                        span: f.span,
                    });
                }
                BNode::So(slot, self.fo_vars(args)?)
            }
            BKind::Not(a) => {
                let a = self.boolean(a)?;
                if let BNode::Not(inner) = self.p.b[a as usize] {
                    return Ok(inner);
                }
                BNode::Not(a)
            }
            BKind::And(a, b) => return self.junction(true, a, b),
            BKind::Or(a, b) => return self.junction(false, a, b),
            BKind::Implies(a, b) => {
                let na = BFormula::not((**a).clone());
                return self.junction(false, &na, b);
            }
            BKind::Exists(Binder::Fo(x), a) | BKind::Forall(Binder::Fo(x), a) => {
                let slot = self.push_fo(x);
                let body = self.boolean(a);
                self.pop_fo();
                let body = body?;
                if matches!(f.kind, BKind::Exists(..)) {
                    BNode::Ex(slot, body)
                } else {
                    BNode::All(slot, body)
                }
            }
            BKind::Exists(Binder::So(v), a) | BKind::Forall(Binder::So(v), a) => {
                let slot = self.push_so(v);
                let body = self.boolean(a);
                self.pop_so();
                let body = body?;
                if matches!(f.kind, BKind::Exists(..)) {
                    BNode::ExSo(slot, v.arity as u32, body)
                } else {
                    BNode::AllSo(slot, v.arity as u32, body)
                }
            }
        };
        Ok(self.bnode(node))
    }

    fn junction(&mut self, and: bool, a: &BFormula, b: &BFormula) -> Result<Id> {
        let mut parts = Vec::new();
        for side in [a, b] {
            let id = self.boolean(side)?;
            match &self.p.b[id as usize] {
                BNode::And(cs) if and => parts.extend(cs.iter().copied()),
                BNode::Or(cs) if !and => parts.extend(cs.iter().copied()),
                BNode::True if and => {}
                BNode::True => return Ok(id),
                _ => parts.push(id),
            }
        }
        Ok(match parts.len() {
            0 => self.bnode(BNode::True),
            1 => parts[0],
            _ if and => self.bnode(BNode::And(parts.into())),
            _ => self.bnode(BNode::Or(parts.into())),
        })
    }

    fn quant(&mut self, f: &QFormula) -> Result<Id> {
        let node = match &f.kind {
            QKind::Bool(b) => QNode::Bool(self.boolean(b)?),
            QKind::Const(c) => {
                if c.is_negative() && !self.cfg.integers {
                    return Err(QsoError::Type {
                        span: f.span,
                        msg: format!("negative constant {c} outside integer mode"),
                    });
                }
                QNode::Const(c.clone())
            }
            QKind::Fn(h, args) => {
                let &(_, slot, k) = self
                    .fns
                    .iter()
                    .rev()
                    .find(|(n, ..)| n == h)
                    .ok_or_else(|| QsoError::Unbound {
                        kind: "function symbol",
                        name: h.clone(),
                    })?;
                if let Some(&own) = self.lsfp.last() {
                    if own != slot {
                        return Err(QsoError::Invalid(format!(
                            "lsfp body mentions a second function symbol `{h}`"
                        )));
                    }
                }
                if k != args.len() {
                    return Err(QsoError::Arity {
                        name: h.clone(),
                        expected: k,
                        found: args.len(),
                        span: f.span,
                    });
                }
                QNode::Fn(slot, self.fo_vars(args)?)
            }
            QKind::Bin(op, a, b) => QNode::Bin(*op, self.quant(a)?, self.quant(b)?),
            QKind::Agg(op, Binder::Fo(x), a) => {
                if matches!(op, Agg::Max | Agg::Min) {
                    self.p.fo_opt = true;
                }
                let slot = self.push_fo(x);
                let body = self.quant(a);
                self.pop_fo();
                QNode::AggFo(*op, slot, body?)
            }
            QKind::Agg(op, Binder::So(v), a) => {
                if !self.lsfp.is_empty() {
                    return Err(QsoError::Invalid(
                        "lsfp body uses a second-order quantitative quantifier".into(),
                    ));
                }
                let slot = self.push_so(v);
                let body = self.quant(a);
                self.pop_so();
                QNode::AggSo(*op, slot, v.arity as u32, body?)
            }
            QKind::Cond(phi, a) => {
                let d = QFormula::add(
                    QFormula::mul(QFormula::boolean(phi.clone()), (**a).clone()),
                    QFormula::boolean(BFormula::not(phi.clone())),
                );
                return self.quant(&d);
            }
            QKind::Lsfp { func, vars, body } => {
                distinct(vars)?;
                let args = self.fo_vars(vars)?;
                let inner: Slots = vars.iter().map(|x| self.push_fo(x)).collect();
                let fslot = self.fn_next;
                self.fn_next += 1;
                self.p.fn_slots = self.p.fn_slots.max(self.fn_next as usize);
                self.fns.push((func.clone(), fslot, vars.len()));
                self.lsfp.push(fslot);
                self.p.table_arities.insert(vars.len());
                let b = self.quant(body);
                self.lsfp.pop();
                self.fns.pop();
                self.fn_next -= 1;
                vars.iter().for_each(|_| self.pop_fo());
                QNode::Lsfp {
                    name: func.as_str().into(),
                    fslot,
                    args,
                    inner,
                    body: b?,
                }
            }
            QKind::Path { xs, ys, body } => {
                if xs.len() != ys.len() {
                    return Err(QsoError::Invalid(format!(
                        "path tuples have lengths {} and {}",
                        xs.len(),
                        ys.len()
                    )));
                }
                let all: Vec<String> = xs.iter().chain(ys).cloned().collect();
                distinct(&all)?;
                let xo = self.fo_vars(xs)?;
                let yo = self.fo_vars(ys)?;
                let inner: Slots = all.iter().map(|x| self.push_fo(x)).collect();
                self.p.table_arities.insert(xs.len());
                let b = self.boolean(body);
                all.iter().for_each(|_| self.pop_fo());
                QNode::Path {
                    xs: xo,
                    ys: yo,
                    inner,
                    body: b?,
                }
            }
        };
        Ok(self.qnode(node))
    }
}

fn distinct(vars: &[String]) -> Result<()> {
    for (i, x) in vars.iter().enumerate() {
        if vars[..i].contains(x) {
            return Err(QsoError::Invalid(format!("variable `{x}` repeated in a binder tuple")));
        }
    }
    Ok(())
}

impl Compiled {
    fn compiler<'a>(sig: &'a Signature, decl: &FreeDecl, cfg: &'a Config) -> Compiler<'a> {
        let mut c = Compiler {
            sig,
            cfg,
            p: Compiled {
                sig: sig.clone(),
                decl: decl.clone(),
                b: Vec::new(),
                bi: Vec::new(),
                q: Vec::new(),
                qi: Vec::new(),
                root: Root::B(0),
                fo_slots: 0,
                so_slots: 0,
                fn_slots: 0,
                fo_opt: false,
                so_arities: BTreeSet::new(),
                table_arities: BTreeSet::new(),
            },
            bmap: HashMap::new(),
            qmap: HashMap::new(),
            fo: Vec::new(),
            so: Vec::new(),
            fns: Vec::new(),
            fo_next: 0,
            so_next: 0,
            fn_next: 0,
            lsfp: Vec::new(),
        };
        for x in &decl.fo {
            c.push_fo(x);
        }
        for v in &decl.so {
            let s = c.so_next;
            c.so.push((v.name.clone(), s, v.arity));
            c.so_next += 1;
            c.p.so_slots = c.so_next as usize;
        }
        for (h, k) in &decl.fns {
            c.fns.push((h.clone(), c.fn_next, *k));
            c.fn_next += 1;
            c.p.fn_slots = c.fn_next as usize;
        }
        c
    }

    pub fn new(f: &QFormula, sig: &Signature, decl: &FreeDecl, cfg: &Config) -> Result<Self> {
        let mut c = Self::compiler(sig, decl, cfg);
        let root = c.quant(f)?;
        c.p.root = Root::Q(root);
        Ok(c.p)
    }

    pub fn new_boolean(f: &BFormula, sig: &Signature, decl: &FreeDecl, cfg: &Config) -> Result<Self> {
        let mut c = Self::compiler(sig, decl, cfg);
        let root = c.boolean(f)?;
        c.p.root = Root::B(root);
        Ok(c.p)
    }

    /// Number of distinct nodes after sharing.
    pub fn node_count(&self) -> usize {
        self.b.len() + self.q.len()
    }

    fn prepare<'p>(&'p self, s: &'p Structure, a: &Assignment, cfg: &Config) -> Result<Machine<'p>> {
        if s.signature() != &self.sig {
            return Err(QsoError::Signature(
                "structure signature differs from the compiled signature".into(),
            ));
        }
        let n = s.domain_size();
        if n == 0 && self.fo_opt {
            return Err(QsoError::Eval("max/min over the empty domain".into()));
        }
        for &k in &self.so_arities {
            cfg.check_subsets(n, k)?;
        }
        for &k in &self.table_arities {
            let size = (n as u128).checked_pow(k as u32);
            if size.is_none_or(|t| t > cfg.table_limit as u128) {
                return Err(QsoError::Budget(format!(
                    "table over {n}^{k} tuples exceeds the limit of {}",
                    cfg.table_limit
                )));
            }
        }
        let mut fo = vec![0usize; self.fo_slots];
        for (i, x) in self.decl.fo.iter().enumerate() {
            let v = *a.fo.get(x).ok_or_else(|| QsoError::Unbound {
                kind: "variable",
                name: x.clone(),
            })?;
            if v >= n {
                return Err(QsoError::Assignment(format!(
                    "`{x}` = {v} outside domain of size {n}"
                )));
            }
            fo[i] = v;
        }
        let mut so: Vec<TupleSet> = (0..self.so_slots).map(|_| TupleSet::empty(n, 0)).collect();
        for (i, v) in self.decl.so.iter().enumerate() {
            let set = a.so.get(&v.name).ok_or_else(|| QsoError::Unbound {
                kind: "second-order variable",
                name: v.name.clone(),
            })?;
            if set.arity() != v.arity || set.domain_size() != n {
                return Err(QsoError::Assignment(format!(
                    "set for `{}` has the wrong shape",
                    v.name
                )));
            }
            so[i] = set.clone();
        }
        let mut fns = vec![None; self.fn_slots];
        for (i, (h, k)) in self.decl.fns.iter().enumerate() {
            let t = a.fns.get(h).ok_or_else(|| QsoError::Unbound {
                kind: "function symbol",
                name: h.clone(),
            })?;
            if t.arity() != *k || t.domain_size() != n {
                return Err(QsoError::Assignment(format!("table for `{h}` has the wrong shape")));
            }
            fns[i] = Some(Rc::new(t.clone()));
        }
        Ok(Machine {
            p: self,
            s,
            n,
            fo,
            so,
            fns,
            bmemo: HashMap::new(),
            tables: HashMap::new(),
            graphs: HashMap::new(),
            key: Vec::new(),
        })
    }

    /// Evaluates on `s` under `a`, which must cover the declared free symbols.
    pub fn run(&self, s: &Structure, a: &Assignment, cfg: &Config) -> Result<Value> {
        let mut m = self.prepare(s, a, cfg)?;
        Ok(match self.root {
            Root::Q(id) => m.q(id),
            Root::B(id) => Value::from(m.b(id) as u8),
        })
    }
}

struct Machine<'p> {
    p: &'p Compiled,
    s: &'p Structure,
    n: usize,
    fo: Vec<usize>,
    so: Vec<TupleSet>,
    fns: Vec<Option<Rc<FunctionTable>>>,
    bmemo: HashMap<Vec<u64>, bool>,
    tables: HashMap<Vec<u64>, Rc<FunctionTable>>,
    graphs: HashMap<Vec<u64>, Rc<Vec<Vec<usize>>>>,
    key: Vec<u64>,
}

impl Machine<'_> {
    fn make_key(&mut self, tag: u64, fo: &[u32], so: &[u32]) {
        self.key.clear();
        self.key.push(tag);
        for &x in fo {
            self.key.push(self.fo[x as usize] as u64);
        }
        for &x in so {
            self.key.extend_from_slice(self.so[x as usize].words());
        }
    }

    #[inline]
    fn index(&self, args: &[u32]) -> usize {
        args.iter().fold(0, |acc, &x| acc * self.n + self.fo[x as usize])
    }

    fn set_tuple(&mut self, slots: &[u32], mut idx: usize) {
        for &x in slots.iter().rev() {
            self.fo[x as usize] = idx % self.n;
            idx /= self.n;
        }
    }

    fn reset_so(&mut self, slot: u32, k: u32) {
        let cur = &mut self.so[slot as usize];
        if cur.arity() == k as usize && cur.domain_size() == self.n {
            cur.clear();
        } else {
            *cur = TupleSet::empty(self.n, k as usize);
        }
    }

    fn b(&mut self, id: Id) -> bool {
        let p = self.p;
        let info = &p.bi[id as usize];
        if info.memo {
            self.make_key(id as u64, &info.fo, &info.so);
            if let Some(&v) = self.bmemo.get(&self.key[..]) {
                return v;
            }
            let key = self.key.clone();
            let v = self.b_raw(id);
            self.bmemo.insert(key, v);
            return v;
        }
        self.b_raw(id)
    }

    fn b_raw(&mut self, id: Id) -> bool {
        let p = self.p;
        match &p.b[id as usize] {
            BNode::True => true,
            BNode::Eq(x, y) => self.fo[*x as usize] == self.fo[*y as usize],
            BNode::Less(x, y) => self.fo[*x as usize] < self.fo[*y as usize],
            BNode::Rel(r, args) => self.s.relation_at(*r as usize).contains_index(self.index(args)),
            BNode::So(x, args) => self.so[*x as usize].contains_index(self.index(args)),
            BNode::Not(a) => !self.b(*a),
            BNode::And(cs) => cs.iter().all(|&c| self.b(c)),
            BNode::Or(cs) => cs.iter().any(|&c| self.b(c)),
            BNode::Ex(x, a) => (0..self.n).any(|v| {
                self.fo[*x as usize] = v;
                self.b(*a)
            }),
            BNode::All(x, a) => (0..self.n).all(|v| {
                self.fo[*x as usize] = v;
                self.b(*a)
            }),
            BNode::ExSo(x, k, a) => {
                self.reset_so(*x, *k);
                loop {
                    if self.b(*a) {
                        return true;
                    }
                    if !self.so[*x as usize].advance() {
                        return false;
                    }
                }
            }
            BNode::AllSo(x, k, a) => {
                self.reset_so(*x, *k);
                loop {
                    if !self.b(*a) {
                        return false;
                    }
                    if !self.so[*x as usize].advance() {
                        return true;
                    }
                }
            }
        }
    }

    /// Machine-word evaluation of sum/product/Boolean chains; `None` on overflow.
    fn count(&mut self, id: Id) -> Option<u128> {
        let p = self.p;
        match &p.q[id as usize] {
            QNode::Bool(b) => Some(self.b(*b) as u128),
            QNode::Const(c) => c.to_u128(),
            QNode::Bin(BinOp::Add, a, b) => self.count(*a)?.checked_add(self.count(*b)?),
            QNode::Bin(BinOp::Mul, a, b) => {
                let x = self.count(*a)?;
                if x == 0 {
                    return Some(0);
                }
                x.checked_mul(self.count(*b)?)
            }
            QNode::AggFo(Agg::Sum, x, a) => {
                let mut acc: u128 = 0;
                for v in 0..self.n {
                    self.fo[*x as usize] = v;
                    acc = acc.checked_add(self.count(*a)?)?;
                }
                Some(acc)
            }
            QNode::AggSo(Agg::Sum, x, k, a) => {
                self.reset_so(*x, *k);
                let mut acc: u128 = 0;
                loop {
                    acc = acc.checked_add(self.count(*a)?)?;
                    if !self.so[*x as usize].advance() {
                        return Some(acc);
                    }
                }
            }
            _ => unreachable!("node is not a counting node"),
        }
    }

    fn fold_fo(&mut self, op: Agg, x: u32, a: Id) -> Value {
        let mut acc: Option<Value> = None;
        for v in 0..self.n {
            self.fo[x as usize] = v;
            if op == Agg::Prod && acc.as_ref().is_some_and(|c| c.is_zero()) {
                break;
            }
            let val = self.q(a);
            acc = Some(match acc {
                None => val,
                Some(c) => combine(op, c, val),
            });
        }
        acc.unwrap_or_else(|| neutral(op))
    }

    fn fold_so(&mut self, op: Agg, x: u32, k: u32, a: Id) -> Value {
        self.reset_so(x, k);
        let mut acc: Option<Value> = None;
        loop {
            if op == Agg::Prod && acc.as_ref().is_some_and(|c| c.is_zero()) {
                break;
            }
            let val = self.q(a);
            acc = Some(match acc {
                None => val,
                Some(c) => combine(op, c, val),
            });
            if !self.so[x as usize].advance() {
                break;
            }
        }
        acc.unwrap_or_else(|| neutral(op))
    }

    fn q(&mut self, id: Id) -> Value {
        let p = self.p;
        let info = &p.qi[id as usize];
        if info.counting {
            if let Some(c) = self.count(id) {
                return Value::from(c);
            }
        }
        match &p.q[id as usize] {
            QNode::Bool(b) => Value::from(self.b(*b) as u8),
            QNode::Const(c) => c.clone(),
            QNode::Fn(h, args) => {
                let i = self.index(args);
                self.fns[*h as usize].as_ref().expect("function slot bound").get_index(i).clone()
            }
            QNode::Bin(op, a, b) => {
                let x = self.q(*a);
                match op {
                    BinOp::Add => x + self.q(*b),
                    BinOp::Mul if x.is_zero() => x,
                    BinOp::Mul => x * self.q(*b),
                    BinOp::Max => x.max(self.q(*b)),
                    BinOp::Min => x.min(self.q(*b)),
                }
            }
            QNode::AggFo(op, x, a) => self.fold_fo(*op, *x, *a),
            QNode::AggSo(op, x, k, a) => self.fold_so(*op, *x, *k, *a),
            QNode::Lsfp {
                name,
                fslot,
                args,
                inner,
                body,
            } => {
                self.make_key(id as u64, &info.ctx_fo, &info.ctx_so);
                let table = match self.tables.get(&self.key[..]) {
                    Some(t) => t.clone(),
                    None => {
                        let key = self.key.clone();
                        let size = self.n.pow(inner.len() as u32);
                        let (t, _) = least_support_fixed_point(name, self.n, inner.len(), |f| {
                            self.fns[*fslot as usize] = Some(Rc::new(f.clone()));
                            let mut values = Vec::with_capacity(size);
                            for i in 0..size {
                                self.set_tuple(inner, i);
                                values.push(self.q(*body));
                            }
                            FunctionTable::new(name, self.n, inner.len(), values)
                                .expect("operator values are non-negative")
                        });
                        let t = Rc::new(t);
                        self.tables.insert(key, t.clone());
                        t
                    }
                };
                table.get_index(self.index(args)).clone()
            }
            QNode::Path { xs, ys, inner, body } => {
                self.make_key(id as u64, &info.ctx_fo, &info.ctx_so);
                let k = xs.len();
                let nodes = self.n.pow(k as u32);
                let graph = match self.graphs.get(&self.key[..]) {
                    Some(g) => g.clone(),
                    None => {
                        let key = self.key.clone();
                        let mut succ = vec![Vec::new(); nodes];
                        for (u, out) in succ.iter_mut().enumerate() {
                            self.set_tuple(&inner[..k], u);
                            for w in 0..nodes {
                                self.set_tuple(&inner[k..], w);
                                if self.b(*body) {
                                    out.push(w);
                                }
                            }
                        }
                        let g = Rc::new(succ);
                        self.graphs.insert(key, g.clone());
                        g
                    }
                };
                count_walks(&graph, self.index(xs), self.index(ys), nodes)
            }
        }
    }
}

fn combine(op: Agg, a: Value, b: Value) -> Value {
    match op {
        Agg::Sum => a + b,
        Agg::Prod => a * b,
        Agg::Max => a.max(b),
        Agg::Min => a.min(b),
    }
}

fn neutral(op: Agg) -> Value {
    match op {
        Agg::Sum => Value::zero(),
        Agg::Prod => Value::from(1),
        Agg::Max | Agg::Min => unreachable!("max/min over the empty domain is rejected statically"),
    }
}

/// `⟦α⟧(S, a)` with default limits.
pub fn eval(s: &Structure, f: &QFormula, a: &Assignment) -> Result<Value> {
    eval_with(s, f, a, &Config::default())
}

pub fn eval_with(s: &Structure, f: &QFormula, a: &Assignment, cfg: &Config) -> Result<Value> {
    let decl = FreeDecl::for_formula(f, a)?;
    Compiled::new(f, s.signature(), &decl, cfg)?.run(s, a, cfg)
}

/// `⟦φ⟧(S, a)` in `{0, 1}`.
pub fn eval_boolean(s: &Structure, f: &BFormula, a: &Assignment) -> Result<Value> {
    eval_boolean_with(s, f, a, &Config::default())
}

pub fn eval_boolean_with(s: &Structure, f: &BFormula, a: &Assignment, cfg: &Config) -> Result<Value> {
    satisfies(s, f, a, cfg).map(|b| Value::from(b as u8))
}

pub fn satisfies(s: &Structure, f: &BFormula, a: &Assignment, cfg: &Config) -> Result<bool> {
    let q = QFormula::boolean(f.clone());
    let decl = FreeDecl::for_formula(&q, a)?;
    let v = Compiled::new_boolean(f, s.signature(), &decl, cfg)?.run(s, a, cfg)?;
    Ok(!v.is_zero())
}
