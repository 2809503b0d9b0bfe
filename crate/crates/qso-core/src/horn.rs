//! Horn formulas: shape recognition, grounding to disjunctions of propositional
//! Horn formulas, and exact model counting by self-reduction.

use crate::ast::{BFormula, BKind, Binder, QFormula, SoVar};
use crate::config::Config;
use crate::error::QsoError;
type Result<T, E = QsoError> = std::result::Result<T, E>;
use crate::eval::{Compiled, FreeDecl};
use crate::model::{tuple_index, tuples_lex, Assignment, Structure};
use crate::rewrite::{snf_parts, Fresh};
use crate::Value;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

/// One disjunct of a Horn clause.
#[derive(Debug, Clone, PartialEq)]
pub enum HornItem {
    /// `X(x̄)`.
    Pos(String, Vec<String>),
    /// `∃v̄ ¬X(ū)` where `v̄` are the locally bound arguments.
    Neg {
        bound: Vec<String>,
        name: String,
        args: Vec<String>,
    },
    /// A formula without second-order symbols.
    Fo(BFormula),
}

/// `∀z̄ (item_1 ∨ … ∨ item_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HornClause {
    pub vars: Vec<String>,
    pub items: Vec<HornItem>,
}

/// `∃ȳ (clause_1 ∧ … ∧ clause_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HornShape {
    pub exists: Vec<String>,
    pub clauses: Vec<HornClause>,
}

/// Negation normal form in which formulas without second-order symbols stay opaque.
fn nnf(f: &BFormula, neg: bool) -> Result<BFormula, String> {
    if f.is_so_free() {
        return Ok(if neg { BFormula::not(f.clone()) } else { f.clone() });
    }
    Ok(match &f.kind {
        BKind::SoAtom(..) => {
            if neg {
                BFormula::not(f.clone())
            } else {
                f.clone()
            }
        }
        BKind::Not(a) => nnf(a, !neg)?,
        BKind::And(a, b) if neg => BFormula::or(nnf(a, true)?, nnf(b, true)?),
        BKind::And(a, b) => BFormula::and(nnf(a, false)?, nnf(b, false)?),
        BKind::Or(a, b) if neg => BFormula::and(nnf(a, true)?, nnf(b, true)?),
        BKind::Or(a, b) => BFormula::or(nnf(a, false)?, nnf(b, false)?),
        BKind::Implies(a, b) if neg => BFormula::and(nnf(a, false)?, nnf(b, true)?),
        BKind::Implies(a, b) => BFormula::or(nnf(a, true)?, nnf(b, false)?),
        BKind::Exists(Binder::Fo(x), a) if neg => BFormula::forall(x, nnf(a, true)?),
        BKind::Exists(Binder::Fo(x), a) => BFormula::exists(x, nnf(a, false)?),
        BKind::Forall(Binder::Fo(x), a) if neg => BFormula::exists(x, nnf(a, false)?),
        BKind::Forall(Binder::Fo(x), a) => BFormula::forall(x, nnf(a, false)?),
        BKind::Exists(Binder::So(_), _) | BKind::Forall(Binder::So(_), _) => {
            return Err("second-order quantifier inside a Horn formula".into())
        }
        BKind::True | BKind::Eq(..) | BKind::Less(..) | BKind::Rel(..) => unreachable!(),
    })
}

struct Shaper {
    allow_exists: bool,
    taken: BTreeSet<String>,
    root_free: BTreeSet<String>,
    counter: usize,
    exists: Vec<String>,
    clauses: Vec<HornClause>,
}

impl Shaper {
    fn fresh(&mut self, base: &str) -> String {
        loop {
            self.counter += 1;
            let c = format!("{base}_h{}", self.counter);
            if self.taken.insert(c.clone()) {
                return c;
            }
        }
    }

    fn top(&mut self, f: &BFormula) -> Result<(), String> {
        match &f.kind {
            BKind::And(a, b) => {
                self.top(a)?;
                self.top(b)
            }
            BKind::Exists(Binder::Fo(x), a) if self.allow_exists => {
                if self.exists.contains(x) || self.root_free.contains(x) {
                    let y = self.fresh(x);
                    let body = a.subst_fo(&HashMap::from([(x.clone(), y.clone())]));
                    self.exists.push(y);
                    self.top(&body)
                } else {
                    self.exists.push(x.clone());
                    self.top(a)
                }
            }
            _ => self.clause(f, &mut Vec::new()),
        }
    }

    fn clause(&mut self, f: &BFormula, prefix: &mut Vec<String>) -> Result<(), String> {
        match &f.kind {
            BKind::Forall(Binder::Fo(x), a) if !f.is_so_free() => {
                prefix.push(x.clone());
                let r = self.clause(a, prefix);
                prefix.pop();
                r
            }
            BKind::And(a, b) if !f.is_so_free() => {
                self.clause(a, prefix)?;
                self.clause(b, prefix)
            }
            BKind::Exists(Binder::Fo(_), _) if negative_literal(f).is_none() && !f.is_so_free() => {
                Err(format!(
                    "existential quantifier `{}` is not outermost",
                    crate::parser::render_boolean(f)
                ))
            }
            _ => {
                let mut items = Vec::new();
                disjuncts(f, &mut items)?;
                let pos = items.iter().filter(|i| matches!(i, HornItem::Pos(..))).count();
                if pos > 1 {
                    return Err(format!(
                        "clause `{}` has {pos} positive literals",
                        crate::parser::render_boolean(f)
                    ));
                }
                self.clauses.push(HornClause {
                    vars: prefix.clone(),
                    items,
                });
                Ok(())
            }
        }
    }
}

fn negative_literal(f: &BFormula) -> Option<HornItem> {
    let mut bound = Vec::new();
    let mut cur = f;
    while let BKind::Exists(Binder::Fo(v), a) = &cur.kind {
        bound.push(v.clone());
        cur = a;
    }
    match &cur.kind {
        BKind::Not(a) => match &a.kind {
            BKind::SoAtom(name, args) => Some(HornItem::Neg {
                bound,
                name: name.clone(),
                args: args.clone(),
            }),
            _ => None,
        },
        _ => None,
    }
}

fn disjuncts(f: &BFormula, out: &mut Vec<HornItem>) -> Result<(), String> {
    if f.is_so_free() {
        out.push(HornItem::Fo(f.clone()));
        return Ok(());
    }
    match &f.kind {
        BKind::Or(a, b) => {
            disjuncts(a, out)?;
            disjuncts(b, out)
        }
        BKind::SoAtom(name, args) => {
            out.push(HornItem::Pos(name.clone(), args.clone()));
            Ok(())
        }
        _ => match negative_literal(f) {
            Some(item) => {
                out.push(item);
                Ok(())
            }
            None => Err(format!(
                "disjunct `{}` is neither a literal nor first-order",
                crate::parser::render_boolean(f)
            )),
        },
    }
}

/// The clause structure of a Horn (or, with `allow_exists`, ∃Horn) formula.
/// Existential blocks of separate conjuncts are renamed apart and pulled to the front.
pub fn horn_shape(f: &BFormula, allow_exists: bool) -> Result<HornShape, String> {
    let g = nnf(f, false)?;
    let mut taken = BTreeSet::new();
    g.names(&mut taken);
    let mut s = Shaper {
        allow_exists,
        taken,
        root_free: g.free_variables().fo,
        counter: 0,
        exists: Vec::new(),
        clauses: Vec::new(),
    };
    s.top(&g)?;
    Ok(HornShape {
        exists: s.exists,
        clauses: s.clauses,
    })
}

/// `None` when `f` is Horn (or ∃Horn), otherwise the reason it is not.
pub fn horn_diagnosis(f: &BFormula, allow_exists: bool) -> Option<String> {
    horn_shape(f, allow_exists).err()
}

pub fn is_horn_formula(f: &BFormula) -> bool {
    horn_diagnosis(f, false).is_none()
}

pub fn is_exists_horn_formula(f: &BFormula) -> bool {
    horn_diagnosis(f, true).is_none()
}

/// Where a propositional variable comes from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PropOrigin {
    /// The grounded atom `X(ē)`.
    Atom { name: String, tuple: Vec<usize> },
    /// Tag variable `t_i` separating summand groups.
    Tag(usize),
}

impl fmt::Display for PropOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropOrigin::Atom { name, tuple } => {
                let t: Vec<String> = tuple.iter().map(|a| a.to_string()).collect();
                write!(f, "{name}({})", t.join(","))
            }
            PropOrigin::Tag(i) => write!(f, "t{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropVar {
    pub index: usize,
    pub origin: PropOrigin,
}

/// A disjunction of propositional Horn formulas, each a list of clauses of signed
/// variable indices (positive for a positive literal).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropDisjHorn {
    pub vars: usize,
    pub labels: Vec<PropVar>,
    pub disjuncts: Vec<Vec<Vec<i64>>>,
}

impl PropDisjHorn {
    pub fn new(vars: usize, disjuncts: Vec<Vec<Vec<i64>>>) -> Result<Self> {
        let p = PropDisjHorn {
            vars,
            labels: Vec::new(),
            disjuncts,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.disjuncts.is_empty() {
            return Err(QsoError::Invalid("an instance needs at least one disjunct".into()));
        }
        for c in self.disjuncts.iter().flatten() {
            check_clause(c, self.vars)?;
        }
        Ok(())
    }

    pub fn clause_count(&self) -> usize {
        self.disjuncts.iter().map(Vec::len).sum()
    }
}

fn check_clause(c: &[i64], vars: usize) -> Result<()> {
    if let Some(&l) = c.iter().find(|&&l| l == 0 || l.unsigned_abs() as usize > vars) {
        return Err(QsoError::Invalid(format!("literal {l} outside 1..={vars}")));
    }
    if c.iter().filter(|&&l| l > 0).count() > 1 {
        return Err(QsoError::NotHorn(format!("clause {c:?} has more than one positive literal")));
    }
    Ok(())
}

/// Satisfiability of a conjunction of Horn clauses by computing its least model.
pub fn horn_sat(clauses: &[Vec<i64>]) -> Result<bool> {
    let vars = clauses
        .iter()
        .flatten()
        .map(|l| l.unsigned_abs() as usize)
        .max()
        .unwrap_or(0);
    for c in clauses {
        check_clause(c, vars)?;
    }
    Ok(horn_sat_under(clauses, &vec![None; vars + 1]))
}

/// Least-model check with some variables fixed; `fixed[v]` is the value of variable `v`.
fn horn_sat_under(clauses: &[Vec<i64>], fixed: &[Option<bool>]) -> bool {
    let mut truth: Vec<bool> = fixed.iter().map(|v| *v == Some(true)).collect();
    let mut live: Vec<&Vec<i64>> = Vec::with_capacity(clauses.len());
    for c in clauses {
        let satisfied = c.iter().any(|&l| {
            let v = l.unsigned_abs() as usize;
            fixed[v] == Some(l > 0)
        });
        if !satisfied {
            live.push(c);
        }
    }
    loop {
        let mut changed = false;
        for c in &live {
            let body_holds = c.iter().filter(|&&l| l < 0).all(|&l| truth[l.unsigned_abs() as usize]);
            if !body_holds {
                continue;
            }
            match c.iter().find(|&&l| l > 0) {
                Some(&p) => {
                    let v = p as usize;
                    if !truth[v] {
                        if fixed[v] == Some(false) {
                            return false;
                        }
                        truth[v] = true;
                        changed = true;
                    }
                }
                None => return false,
            }
        }
        if !changed {
            return true;
        }
    }
}

/// Model count and the number of nodes the self-reduction visited.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountReport {
    pub count: Value,
    pub nodes: u64,
}

/// Exact number of models of a disjunction of Horn formulas over all its variables.
pub fn count_dishorn(p: &PropDisjHorn) -> Result<Value> {
    Ok(count_dishorn_report(p)?.count)
}

/// Self-reduction: split on the lowest unassigned variable and only descend into
/// cofactors that stay satisfiable.
pub fn count_dishorn_report(p: &PropDisjHorn) -> Result<CountReport> {
    p.validate()?;
    let sat = |fixed: &[Option<bool>]| p.disjuncts.iter().any(|d| horn_sat_under(d, fixed));
    let mut fixed = vec![None; p.vars + 1];
    let mut nodes = 1u64;
    if !sat(&fixed) {
        return Ok(CountReport {
            count: Value::from(0),
            nodes,
        });
    }
    fn go(
        v: usize,
        vars: usize,
        fixed: &mut Vec<Option<bool>>,
        sat: &dyn Fn(&[Option<bool>]) -> bool,
        nodes: &mut u64,
    ) -> Value {
        if v > vars {
            return Value::from(1);
        }
        let mut total = Value::from(0);
        for b in [false, true] {
            fixed[v] = Some(b);
            if sat(fixed) {
                *nodes += 1;
                total += go(v + 1, vars, fixed, sat, nodes);
            }
        }
        fixed[v] = None;
        total
    }
    let count = go(1, p.vars, &mut fixed, &sat, &mut nodes);
    Ok(CountReport { count, nodes })
}

/// Parses the `vars` / `disjunct` / `end` text format; `#` starts a comment line.
pub fn parse_dishorn(text: &str) -> Result<PropDisjHorn> {
    let mut vars: Option<usize> = None;
    let mut disjuncts = Vec::new();
    let mut current: Option<Vec<Vec<i64>>> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| QsoError::Format { line: line_no, msg };
        if vars.is_none() {
            let n = line
                .strip_prefix("vars")
                .map(str::trim)
                .and_then(|t| t.parse::<usize>().ok())
                .ok_or_else(|| err(format!("expected `vars <n>`, found `{line}`")))?;
            vars = Some(n);
            continue;
        }
        match (line, current.as_mut()) {
            ("disjunct", None) => current = Some(Vec::new()),
            ("disjunct", Some(_)) => return Err(err("`disjunct` inside an open block".into())),
            ("end", Some(_)) => disjuncts.push(current.take().expect("open block")),
            ("end", None) => return Err(err("`end` without `disjunct`".into())),
            (_, None) => return Err(err(format!("clause `{line}` outside a disjunct block"))),
            (_, Some(block)) => {
                let clause = line
                    .split_whitespace()
                    .map(|t| t.parse::<i64>().map_err(|_| err(format!("bad literal `{t}`"))))
                    .collect::<Result<Vec<i64>>>()?;
                check_clause(&clause, vars.unwrap_or(0)).map_err(|e| err(e.to_string()))?;
                block.push(clause);
            }
        }
    }
    if current.is_some() {
        return Err(QsoError::Format {
            line: text.lines().count(),
            msg: "missing `end`".into(),
        });
    }
    let vars = vars.ok_or(QsoError::Format {
        line: 1,
        msg: "missing `vars <n>` header".into(),
    })?;
    PropDisjHorn::new(vars, disjuncts)
}

pub fn render_dishorn(p: &PropDisjHorn) -> String {
    let mut out = String::new();
    for l in &p.labels {
        out.push_str(&format!("# {} = {}\n", l.index, l.origin));
    }
    out.push_str(&format!("vars {}\n", p.vars));
    for d in &p.disjuncts {
        out.push_str("disjunct\n");
        for c in d {
            let t: Vec<String> = c.iter().map(|l| l.to_string()).collect();
            out.push_str(&t.join(" "));
            out.push('\n');
        }
        out.push_str("end\n");
    }
    out
}

/// Clause items with first-order parts compiled once.
enum GItem {
    Pos(usize, Vec<String>),
    Neg {
        bound: Vec<String>,
        so: usize,
        args: Vec<String>,
    },
    Fo(Compiled, Vec<String>),
}

struct GClause {
    vars: Vec<String>,
    items: Vec<GItem>,
}

struct Grounder<'a> {
    s: &'a Structure,
    cfg: &'a Config,
    so: &'a [SoVar],
    offsets: Vec<usize>,
    work: u64,
}

impl Grounder<'_> {
    fn var(&self, so: usize, tuple: &[usize]) -> i64 {
        (self.offsets[so] + tuple_index(self.s.domain_size(), tuple) + 1) as i64
    }

    fn value(env: &HashMap<String, usize>, x: &str) -> Result<usize> {
        env.get(x).copied().ok_or_else(|| QsoError::Unbound {
            kind: "first-order variable",
            name: x.to_string(),
        })
    }

    fn tick(&mut self) -> Result<()> {
        self.work += 1;
        if self.work > self.cfg.ground_budget {
            return Err(QsoError::Budget(format!(
                "grounding exceeds the limit of {} clause instances",
                self.cfg.ground_budget
            )));
        }
        Ok(())
    }

    /// Grounds the clauses under `env`; `None` when some ground clause is empty.
    fn ground(&mut self, clauses: &[GClause], env: &HashMap<String, usize>) -> Result<Option<Vec<Vec<i64>>>> {
        let n = self.s.domain_size();
        let mut out = Vec::new();
        for c in clauses {
            for t in tuples_lex(n, c.vars.len()) {
                self.tick()?;
                let mut e = env.clone();
                for (x, &a) in c.vars.iter().zip(&t) {
                    e.insert(x.clone(), a);
                }
                let mut lits: BTreeSet<i64> = BTreeSet::new();
                let mut satisfied = false;
                for item in &c.items {
                    match item {
                        GItem::Pos(so, args) => {
                            let tuple = args.iter().map(|a| Self::value(&e, a)).collect::<Result<Vec<_>>>()?;
                            lits.insert(self.var(*so, &tuple));
                        }
                        GItem::Neg { bound, so, args } => {
                            for b in tuples_lex(n, bound.len()) {
                                let mut e2 = e.clone();
                                for (x, &v) in bound.iter().zip(&b) {
                                    e2.insert(x.clone(), v);
                                }
                                let tuple =
                                    args.iter().map(|a| Self::value(&e2, a)).collect::<Result<Vec<_>>>()?;
                                lits.insert(-self.var(*so, &tuple));
                            }
                        }
                        GItem::Fo(compiled, free) => {
                            let mut a = Assignment::new();
                            for x in free {
                                a = a.with_fo(x, Self::value(&e, x)?);
                            }
                            if compiled.run(self.s, &a, self.cfg)? != Value::from(0) {
                                satisfied = true;
                                break;
                            }
                        }
                    }
                }
                if satisfied || lits.iter().any(|l| lits.contains(&-l)) {
                    continue;
                }
                if lits.is_empty() {
                    return Ok(None);
                }
                out.push(lits.into_iter().rev().collect());
            }
        }
        Ok(Some(out))
    }
}

/// Grounds a ΣQSO(∃Horn) sentence on `S` into a disjunction of propositional Horn
/// formulas with exactly `⟦α⟧(S)` models.
pub fn reduce_to_dishorn(f: &QFormula, s: &Structure) -> Result<PropDisjHorn> {
    reduce_to_dishorn_with(f, s, &Config::default())
}

pub fn reduce_to_dishorn_with(f: &QFormula, s: &Structure, cfg: &Config) -> Result<PropDisjHorn> {
    if !f.is_sentence() {
        return Err(QsoError::Invalid("the Horn reduction needs a sentence".into()));
    }
    let mut fresh = Fresh::avoiding(f);
    let parts = snf_parts(f, &mut fresh, cfg)?;
    let mut union: Vec<SoVar> = Vec::new();
    let mut shapes = Vec::new();
    for p in &parts {
        let shape = horn_shape(&p.matrix, true).map_err(QsoError::NotHorn)?;
        for v in &p.so_vars {
            if !union.contains(v) {
                union.push(v.clone());
            }
        }
        shapes.push(shape);
    }
    let n = s.domain_size();
    let mut offsets = Vec::new();
    let mut labels = Vec::new();
    let mut atoms = 0usize;
    for v in &union {
        offsets.push(atoms);
        let count = n.checked_pow(v.arity as u32).filter(|&c| c as u64 <= cfg.ground_budget).ok_or_else(|| {
            QsoError::Budget(format!("{}^{} atoms of `{}` exceed the grounding budget", n, v.arity, v.name))
        })?;
        for t in tuples_lex(n, v.arity) {
            atoms += 1;
            labels.push(PropVar {
                index: atoms,
                origin: PropOrigin::Atom {
                    name: v.name.clone(),
                    tuple: t,
                },
            });
        }
        debug_assert_eq!(atoms - offsets.last().copied().unwrap_or(0), count);
    }
    let sig = s.signature();
    let mut groups: Vec<Vec<Vec<Vec<i64>>>> = Vec::new();
    let mut g = Grounder {
        s,
        cfg,
        so: &union,
        offsets,
        work: 0,
    };
    for (p, shape) in parts.iter().zip(&shapes) {
        let so_index = |name: &str, arity: usize| -> Result<usize> {
            let local = p
                .so_vars
                .iter()
                .find(|v| v.name == name)
                .ok_or_else(|| QsoError::Unbound {
                    kind: "second-order variable",
                    name: name.to_string(),
                })?;
            if local.arity != arity {
                return Err(QsoError::Arity {
                    name: name.to_string(),
                    expected: local.arity,
                    found: arity,
                    span: Default::default(),
                });
            }
            Ok(g.so.iter().position(|v| v == local).expect("summand variable in union"))
        };
        let mut clauses = Vec::new();
        for c in &shape.clauses {
            let mut items = Vec::new();
            for it in &c.items {
                items.push(match it {
                    HornItem::Pos(x, args) => GItem::Pos(so_index(x, args.len())?, args.clone()),
                    HornItem::Neg { bound, name, args } => GItem::Neg {
                        bound: bound.clone(),
                        so: so_index(name, args.len())?,
                        args: args.clone(),
                    },
                    HornItem::Fo(phi) => {
                        let free: Vec<String> = phi.free_variables().fo.into_iter().collect();
                        let decl = FreeDecl {
                            fo: free.clone(),
                            so: Vec::new(),
                            fns: Vec::new(),
                        };
                        GItem::Fo(Compiled::new_boolean(phi, sig, &decl, cfg)?, free)
                    }
                });
            }
            clauses.push(GClause {
                vars: c.vars.clone(),
                items,
            });
        }
        for (i, v) in union.iter().enumerate() {
            if !p.so_vars.contains(v) {
                let u: Vec<String> = (0..v.arity).map(|k| format!("u{k}")).collect();
                clauses.push(GClause {
                    vars: u.clone(),
                    items: vec![GItem::Pos(i, u)],
                });
            }
        }
        for a in tuples_lex(n, p.fo_vars.len()) {
            let mut group = Vec::new();
            for b in tuples_lex(n, shape.exists.len()) {
                let mut env = HashMap::new();
                for (x, &v) in p.fo_vars.iter().zip(&a) {
                    env.insert(x.clone(), v);
                }
                for (y, &v) in shape.exists.iter().zip(&b) {
                    env.insert(y.clone(), v);
                }
                if let Some(d) = g.ground(&clauses, &env)? {
                    group.push(d);
                }
            }
            if !group.is_empty() {
                groups.push(group);
            }
        }
    }
    if groups.is_empty() {
        let vars = atoms.max(1);
        return Ok(PropDisjHorn {
            vars,
            labels,
            disjuncts: vec![vec![vec![1], vec![-1]]],
        });
    }
    let tags = if groups.len() > 1 { groups.len() } else { 0 };
    for t in 0..tags {
        labels.push(PropVar {
            index: atoms + t + 1,
            origin: PropOrigin::Tag(t + 1),
        });
    }
    let mut disjuncts = Vec::new();
    for (gi, group) in groups.into_iter().enumerate() {
        for mut d in group {
            for t in 0..tags {
                let lit = (atoms + t + 1) as i64;
                d.push(vec![if t == gi { lit } else { -lit }]);
            }
            disjuncts.push(d);
        }
    }
    Ok(PropDisjHorn {
        vars: atoms + tags,
        labels,
        disjuncts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Signature;
    use crate::parser::{parse_boolean, ParseOptions};
    use crate::Structure;
    use crate::SoVar;

    pub(crate) const PSI: &str = "(forall x. (!T(x) | V(x))) \
        & (forall c. (!NC(c) | exists x. !A(c,x))) \
        & (forall c. forall x. (!P(c,x) | (exists y. !A(c,y)) | T(x))) \
        & (forall c. forall x. (!N(c,x) | T(x) | !A(c,x))) \
        & (forall c. forall x. (A(c,x) | N(c,x))) \
        & (forall c. forall x. (A(c,x) | !T(x)))";

    pub(crate) const PSI_PRIME: &str = "exists d. ((forall x. (!T(x) | V(x))) \
        & (forall c. (!D(c,d) | !NC(c) | exists x. !A(c,x))) \
        & (forall c. forall x. (!D(c,d) | !P(c,x) | (exists y. !A(c,y)) | T(x))) \
        & (forall c. forall x. (!D(c,d) | !N(c,x) | T(x) | !A(c,x))) \
        & (forall c. forall x. (!D(c,d) | A(c,x) | N(c,x))) \
        & (forall c. forall x. (!D(c,d) | A(c,x) | !T(x))))";

    fn sig() -> Signature {
        Signature::new([("P", 2), ("N", 2), ("V", 1), ("NC", 1), ("D", 2)]).unwrap()
    }

    fn b(t: &str) -> BFormula {
        let opts = ParseOptions {
            free_so: vec![SoVar::new("T", 1), SoVar::new("A", 2)],
            ..Default::default()
        };
        parse_boolean(t, &sig(), &opts).unwrap()
    }

    #[test]
    fn hornsat_definers() {
        let psi = b(PSI);
        assert!(is_horn_formula(&psi));
        let shape = horn_shape(&psi, false).unwrap();
        assert_eq!(shape.clauses.len(), 6);
        assert!(shape.exists.is_empty());

        let psi2 = b(PSI_PRIME);
        assert!(!is_horn_formula(&psi2));
        assert!(is_exists_horn_formula(&psi2));
        assert_eq!(horn_shape(&psi2, true).unwrap().exists, vec!["d".to_string()]);
    }

    #[test]
    fn rejects_two_positive_literals() {
        let f = b("forall x. forall y. (T(x) | T(y))");
        let why = horn_diagnosis(&f, true).unwrap();
        assert!(why.contains("2 positive"), "{why}");
        assert!(is_horn_formula(&b("forall x. (T(x) -> V(x))")));
        assert!(is_horn_formula(&b("forall x. ((T(x) & V(x)) -> T(x))")));
        assert!(!is_horn_formula(&b("forall x. exists y. (T(x) & A(x,y))")));
    }

    #[test]
    fn conjoined_existential_blocks_are_renamed_apart() {
        let f = b("(exists y. T(y)) & (exists y. !T(y))");
        let s = horn_shape(&f, true).unwrap();
        assert_eq!(s.exists.len(), 2);
        assert_ne!(s.exists[0], s.exists[1]);
    }

    fn dh(vars: usize, ds: &[&[&[i64]]]) -> PropDisjHorn {
        PropDisjHorn::new(vars, ds.iter().map(|d| d.iter().map(|c| c.to_vec()).collect()).collect()).unwrap()
    }

    fn truth_table(p: &PropDisjHorn) -> u64 {
        (0u64..1 << p.vars)
            .filter(|m| {
                p.disjuncts.iter().any(|d| {
                    d.iter().all(|c| {
                        c.iter().any(|&l| {
                            let bit = m >> (l.unsigned_abs() - 1) & 1 == 1;
                            bit == (l > 0)
                        })
                    })
                })
            })
            .count() as u64
    }

    #[test]
    fn horn_sat_examples() {
        assert!(!horn_sat(&[vec![1], vec![-1]]).unwrap());
        assert!(horn_sat(&[vec![2, -1], vec![1]]).unwrap());
        assert!(horn_sat(&[]).unwrap());
        assert!(horn_sat(&[vec![1, 2]]).unwrap_err().to_string().contains("positive"));
    }

    #[test]
    fn counting_examples() {
        assert_eq!(count_dishorn(&dh(2, &[&[&[-1]], &[&[1], &[2]]])).unwrap(), Value::from(3));
        assert_eq!(count_dishorn(&dh(2, &[&[&[1], &[-1, 2]]])).unwrap(), Value::from(1));
        assert_eq!(count_dishorn(&dh(1, &[&[&[1], &[-1]]])).unwrap(), Value::from(0));
        assert_eq!(count_dishorn(&dh(3, &[&[]])).unwrap(), Value::from(8));
        let p = dh(4, &[&[&[-1, -2], &[3, -4]], &[&[2], &[-3]]]);
        let r = count_dishorn_report(&p).unwrap();
        assert_eq!(r.count, Value::from(truth_table(&p)));
        let c = truth_table(&p);
        assert!(r.nodes <= 2 * c + 4 * c);
    }

    #[test]
    fn dishorn_format_roundtrip() {
        let text = "# sample\nvars 3\ndisjunct\n1\n-1 2\nend\ndisjunct\n-3\nend\n";
        let p = parse_dishorn(text).unwrap();
        assert_eq!(p.disjuncts.len(), 2);
        assert_eq!(parse_dishorn(&render_dishorn(&p)).unwrap(), p);
        assert!(parse_dishorn("vars 2\ndisjunct\n1 2\nend\n").is_err());
        assert!(parse_dishorn("vars 2\ndisjunct\n1\n").is_err());
        assert!(parse_dishorn("disjunct\nend\n").is_err());
        assert!(parse_dishorn("vars 1\ndisjunct\n3\nend\n").is_err());
    }

    #[test]
    fn reduction_examples() {
        let sig = Signature::empty();
        let f = crate::parse_formula("sum X:1. forall x. X(x)", &sig).unwrap();
        let p = reduce_to_dishorn(&f, &Structure::new(sig.clone(), 2)).unwrap();
        assert_eq!(count_dishorn(&p).unwrap(), Value::from(1));
        assert_eq!(truth_table(&p), 1);

        let zero = crate::parse_formula("sum X:1. exists x. (X(x) & !X(x))", &sig).unwrap();
        let p = reduce_to_dishorn(&zero, &Structure::new(sig.clone(), 2)).unwrap();
        assert_eq!(count_dishorn(&p).unwrap(), Value::from(0));

        let two = crate::parse_formula("1 + sum x. true", &sig).unwrap();
        let p = reduce_to_dishorn(&two, &Structure::new(sig.clone(), 3)).unwrap();
        assert_eq!(count_dishorn(&p).unwrap(), Value::from(4));
        assert_eq!(p.vars, 4);

        let bad = crate::parse_formula("sum X:1. forall x. forall y. (X(x) | X(y))", &sig).unwrap();
        assert!(reduce_to_dishorn(&bad, &Structure::new(sig, 2)).is_err());
    }

    #[test]
    fn hornsat_instance_is_counted_parsimoniously() {
        // p ∧ (¬p ∨ q): clause 0 is positive on p, clause 1 negative on p and positive on q.
        let s = Structure::with_relations(
            sig(),
            2,
            [
                ("P".to_string(), vec![vec![0, 0], vec![1, 1]]),
                ("N".to_string(), vec![vec![1, 0]]),
                ("V".to_string(), vec![vec![0], vec![1]]),
                ("NC".to_string(), vec![vec![0], vec![1]]),
            ],
        )
        .unwrap();
        let opts = ParseOptions::default();
        let alpha = crate::parser::parse_formula_with(&format!("sum T:1. sum A:2. {PSI}"), &sig(), &opts).unwrap();
        let p = reduce_to_dishorn(&alpha, &s).unwrap();
        let want = crate::eval::eval(&s, &alpha, &Assignment::new()).unwrap();
        assert_eq!(count_dishorn(&p).unwrap(), want);
        assert_eq!(Value::from(truth_table(&p)), want);
        for d in &p.disjuncts {
            for c in d {
                assert!(c.iter().filter(|&&l| l > 0).count() <= 1);
            }
        }
    }
}
