//! Normal forms and closure constructions for ΣQSO: sum normal form, prenex normal
//! form, binary products and subtraction by one.

use crate::ast::{Agg, BFormula, BKind, BinOp, Binder, QFormula, QKind, SoVar};
use crate::config::Config;
use crate::error::{QsoError, Result};
use crate::fragment::{boolean_member, is_sigma_qso, BooleanCore};
use num_traits::{Signed, ToPrimitive};
use std::collections::{BTreeSet, HashMap};

/// Fresh-name supply. Names get a `_r<counter>` suffix; the counter is shared by
/// every name produced during one rewrite call.
#[derive(Debug, Clone, Default)]
pub struct Fresh {
    taken: BTreeSet<String>,
    counter: usize,
}

impl Fresh {
    pub fn new() -> Self {
        Fresh::default()
    }

    /// A supply avoiding every name that occurs in `f`.
    pub fn avoiding(f: &QFormula) -> Self {
        let mut s = Fresh::new();
        qnames(f, &mut s.taken);
        s
    }

    pub fn reserve(&mut self, name: &str) {
        self.taken.insert(name.to_string());
    }

    pub fn reserve_formula(&mut self, f: &QFormula) {
        qnames(f, &mut self.taken);
    }

    pub fn name(&mut self, base: &str) -> String {
        let stem = match base.rfind("_r") {
            Some(i) if i > 0 && base[i + 2..].chars().all(|c| c.is_ascii_digit()) && base.len() > i + 2 => {
                &base[..i]
            }
            _ => base,
        };
        loop {
            self.counter += 1;
            let c = format!("{stem}_r{}", self.counter);
            if self.taken.insert(c.clone()) {
                return c;
            }
        }
    }

    fn names(&mut self, base: &str, k: usize) -> Vec<String> {
        (0..k).map(|_| self.name(base)).collect()
    }
}

fn qnames(f: &QFormula, out: &mut BTreeSet<String>) {
    match &f.kind {
        QKind::Bool(b) => b.names(out),
        QKind::Cond(b, _) => b.names(out),
        QKind::Fn(h, args) => {
            out.insert(h.clone());
            out.extend(args.iter().cloned());
        }
        QKind::Agg(_, Binder::Fo(x), _) => {
            out.insert(x.clone());
        }
        QKind::Agg(_, Binder::So(v), _) => {
            out.insert(v.name.clone());
        }
        QKind::Lsfp { func, vars, .. } => {
            out.insert(func.clone());
            out.extend(vars.iter().cloned());
        }
        QKind::Path { xs, ys, body } => {
            out.extend(xs.iter().cloned());
            out.extend(ys.iter().cloned());
            body.names(out);
        }
        QKind::Const(_) | QKind::Bin(..) => {}
    }
    for c in f.children() {
        qnames(c, out);
    }
}

fn one(x: &str, y: &str) -> HashMap<String, String> {
    HashMap::from([(x.to_string(), y.to_string())])
}

fn zip_map(from: &[String], to: &[String]) -> HashMap<String, String> {
    from.iter().cloned().zip(to.iter().cloned()).collect()
}

/// `ā = b̄` componentwise.
pub fn tuple_eq(a: &[String], b: &[String]) -> BFormula {
    BFormula::and_all(a.iter().zip(b).map(|(x, y)| BFormula::eq(x, y)))
}

/// Strict lexicographic order on equal-length variable tuples.
pub fn lex_lt(a: &[String], b: &[String]) -> BFormula {
    BFormula::or_all((0..a.len()).map(|i| {
        BFormula::and(tuple_eq(&a[..i], &b[..i]), BFormula::less(&a[i], &b[i]))
    }))
}

/// Non-strict lexicographic order on equal-length variable tuples.
pub fn lex_le(a: &[String], b: &[String]) -> BFormula {
    if a.is_empty() {
        return BFormula::tru();
    }
    BFormula::or(lex_lt(a, b), tuple_eq(a, b))
}

/// `x` is the least element of the order.
pub fn first(x: &str, fresh: &mut Fresh) -> BFormula {
    let u = fresh.name("u");
    BFormula::forall(&u, BFormula::not(BFormula::less(&u, x)))
}

fn pin(xs: &[String], fresh: &mut Fresh) -> BFormula {
    BFormula::and_all(xs.iter().map(|x| first(x, fresh)))
}

/// `ΣX̄ Σx̄ φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PnfSummand {
    pub so_vars: Vec<SoVar>,
    pub fo_vars: Vec<String>,
    pub matrix: BFormula,
}

impl PnfSummand {
    pub fn leaf(matrix: BFormula) -> Self {
        PnfSummand {
            so_vars: Vec::new(),
            fo_vars: Vec::new(),
            matrix,
        }
    }

    pub fn to_formula(&self) -> QFormula {
        let inner = self
            .fo_vars
            .iter()
            .rev()
            .fold(QFormula::boolean(self.matrix.clone()), |acc, x| QFormula::sum(x, acc));
        self.so_vars
            .iter()
            .rev()
            .fold(inner, |acc, v| QFormula::sum_so(v.clone(), acc))
    }

    pub fn bound_names(&self) -> BTreeSet<String> {
        self.fo_vars
            .iter()
            .cloned()
            .chain(self.so_vars.iter().map(|v| v.name.clone()))
            .collect()
    }

    /// Free first- and second-order names of the summand.
    pub fn free_names(&self) -> BTreeSet<String> {
        let fv = self.matrix.free_variables();
        let bound = self.bound_names();
        fv.fo
            .into_iter()
            .chain(fv.so)
            .filter(|x| !bound.contains(x))
            .collect()
    }

    /// Renames the bound variables that occur in `avoid`.
    fn rename_apart(&self, avoid: &BTreeSet<String>, fresh: &mut Fresh) -> PnfSummand {
        let mut fo = HashMap::new();
        let mut so = HashMap::new();
        let fo_vars = self
            .fo_vars
            .iter()
            .map(|x| {
                if avoid.contains(x) {
                    let y = fresh.name(x);
                    fo.insert(x.clone(), y.clone());
                    y
                } else {
                    x.clone()
                }
            })
            .collect();
        let so_vars = self
            .so_vars
            .iter()
            .map(|v| {
                if avoid.contains(&v.name) {
                    let y = fresh.name(&v.name);
                    so.insert(v.name.clone(), y.clone());
                    SoVar::new(y, v.arity)
                } else {
                    v.clone()
                }
            })
            .collect();
        PnfSummand {
            so_vars,
            fo_vars,
            matrix: self.matrix.subst_fo(&fo).subst_so(&so),
        }
    }
}

/// Reads `ΣX̄ Σx̄ φ` off a formula; second-order sums must come first.
pub fn pnf_summand(f: &QFormula) -> Option<PnfSummand> {
    let mut so_vars = Vec::new();
    let mut fo_vars = Vec::new();
    let mut cur = f;
    loop {
        match &cur.kind {
            QKind::Agg(Agg::Sum, Binder::So(v), a) if fo_vars.is_empty() => {
                so_vars.push(v.clone());
                cur = a;
            }
            QKind::Agg(Agg::Sum, Binder::Fo(x), a) => {
                fo_vars.push(x.clone());
                cur = a;
            }
            QKind::Bool(b) => {
                return Some(PnfSummand {
                    so_vars,
                    fo_vars,
                    matrix: b.clone(),
                })
            }
            _ => return None,
        }
    }
}

/// The summands of a formula in sum normal form.
pub fn snf_summands(f: &QFormula) -> Option<Vec<PnfSummand>> {
    match &f.kind {
        QKind::Bin(BinOp::Add, a, b) => {
            let mut v = snf_summands(a)?;
            v.extend(snf_summands(b)?);
            Some(v)
        }
        _ => pnf_summand(f).map(|s| vec![s]),
    }
}

/// SNF shape check; with `class`, every matrix must also lie in that fragment.
pub fn is_snf(f: &QFormula, class: Option<BooleanCore>) -> bool {
    match snf_summands(f) {
        Some(v) => class.map_or(true, |c| v.iter().all(|s| boolean_member(&s.matrix, c))),
        None => false,
    }
}

/// PNF shape check; with `class`, the matrix must also lie in that fragment.
pub fn is_pnf(f: &QFormula, class: Option<BooleanCore>) -> bool {
    match pnf_summand(f) {
        Some(s) => class.map_or(true, |c| boolean_member(&s.matrix, c)),
        None => false,
    }
}

pub fn from_summands(v: &[PnfSummand]) -> QFormula {
    if v.is_empty() {
        return QFormula::boolean(BFormula::fals());
    }
    QFormula::sum_all(v.iter().map(PnfSummand::to_formula))
}

fn require_sigma(f: &QFormula) -> Result<()> {
    if !is_sigma_qso(f) {
        return Err(QsoError::Fragment(format!(
            "`{}` is not in ΣQSO: only constants, +, *, Boolean formulas and sums are allowed",
            crate::parser::render_formula(f)
        )));
    }
    if let Some(b) = f.boolean_leaves().into_iter().find(|b| !b.is_first_order()) {
        return Err(QsoError::Fragment(format!(
            "Boolean formula `{}` is not first-order",
            crate::parser::render_boolean(b)
        )));
    }
    Ok(())
}

fn tau(f: &QFormula, fresh: &mut Fresh, cfg: &Config) -> Result<Vec<PnfSummand>> {
    let out = match &f.kind {
        QKind::Bool(b) => vec![PnfSummand::leaf(b.clone())],
        QKind::Const(c) => {
            if c.is_negative() {
                return Err(QsoError::Fragment(format!("negative constant {c}")));
            }
            let k = c.to_usize().filter(|&k| k <= cfg.dnf_limit).ok_or_else(|| {
                QsoError::Budget(format!("constant {c} exceeds the limit of {} summands", cfg.dnf_limit))
            })?;
            vec![PnfSummand::leaf(BFormula::tru()); k]
        }
        QKind::Bin(BinOp::Add, a, b) => {
            let mut v = tau(a, fresh, cfg)?;
            v.extend(tau(b, fresh, cfg)?);
            v
        }
        QKind::Bin(BinOp::Mul, a, b) => {
            let a = tau(a, fresh, cfg)?;
            let b = tau(b, fresh, cfg)?;
            product(&a, &b, fresh, cfg)?
        }
        QKind::Cond(phi, a) => {
            let a = tau(a, fresh, cfg)?;
            let mut v = product(&[PnfSummand::leaf(phi.clone())], &a, fresh, cfg)?;
            v.push(PnfSummand::leaf(BFormula::not(phi.clone())));
            v
        }
        QKind::Agg(Agg::Sum, Binder::Fo(x), a) => tau(a, fresh, cfg)?
            .into_iter()
            .map(|mut s| {
                let name = if s.fo_vars.contains(x) { fresh.name(x) } else { x.clone() };
                s.fo_vars.insert(0, name);
                s
            })
            .collect(),
        QKind::Agg(Agg::Sum, Binder::So(v), a) => tau(a, fresh, cfg)?
            .into_iter()
            .map(|mut s| {
                let var = if s.so_vars.iter().any(|w| w.name == v.name) {
                    SoVar::new(fresh.name(&v.name), v.arity)
                } else {
                    v.clone()
                };
                s.so_vars.insert(0, var);
                s
            })
            .collect(),
        _ => {
            return Err(QsoError::Fragment(format!(
                "`{}` is not in ΣQSO",
                crate::parser::render_formula(f)
            )))
        }
    };
    if out.len() > cfg.dnf_limit {
        return Err(QsoError::Budget(format!(
            "sum normal form exceeds the limit of {} summands",
            cfg.dnf_limit
        )));
    }
    Ok(out)
}

fn product(a: &[PnfSummand], b: &[PnfSummand], fresh: &mut Fresh, cfg: &Config) -> Result<Vec<PnfSummand>> {
    if a.len().saturating_mul(b.len()) > cfg.dnf_limit {
        return Err(QsoError::Budget(format!(
            "product of {} and {} summands exceeds the limit of {}",
            a.len(),
            b.len(),
            cfg.dnf_limit
        )));
    }
    let mut out = Vec::with_capacity(a.len() * b.len());
    for s in a {
        for t in b {
            let mut avoid = s.bound_names();
            avoid.extend(s.free_names());
            let t = t.rename_apart(&avoid, fresh);
            let s = s.rename_apart(&t.free_names(), fresh);
            out.push(PnfSummand {
                so_vars: s.so_vars.iter().chain(&t.so_vars).cloned().collect(),
                fo_vars: s.fo_vars.iter().chain(&t.fo_vars).cloned().collect(),
                matrix: BFormula::and(s.matrix, t.matrix),
            });
        }
    }
    Ok(out)
}

/// The summands of an equivalent formula in sum normal form.
pub fn snf_parts(f: &QFormula, fresh: &mut Fresh, cfg: &Config) -> Result<Vec<PnfSummand>> {
    require_sigma(f)?;
    tau(f, fresh, cfg)
}

/// Equivalent formula in sum normal form.
pub fn to_snf(f: &QFormula) -> Result<QFormula> {
    to_snf_with(f, &Config::default())
}

pub fn to_snf_with(f: &QFormula, cfg: &Config) -> Result<QFormula> {
    if let Some(v) = snf_summands(f) {
        if v.iter().all(|s| s.matrix.is_first_order()) {
            return Ok(f.clone());
        }
    }
    let mut fresh = Fresh::avoiding(f);
    Ok(from_summands(&snf_parts(f, &mut fresh, cfg)?))
}

/// Sum normal form of `α · β`.
pub fn product_to_snf(a: &QFormula, b: &QFormula) -> Result<QFormula> {
    product_to_snf_with(a, b, &Config::default())
}

pub fn product_to_snf_with(a: &QFormula, b: &QFormula, cfg: &Config) -> Result<QFormula> {
    let mut fresh = Fresh::avoiding(a);
    fresh.reserve_formula(b);
    let x = snf_parts(a, &mut fresh, cfg)?;
    let y = snf_parts(b, &mut fresh, cfg)?;
    Ok(from_summands(&product(&x, &y, &mut fresh, cfg)?))
}

/// Equivalent single summand `ΣX̄ Σx̄ φ` with `φ` in `target`.
pub fn to_pnf(f: &QFormula, target: BooleanCore) -> Result<QFormula> {
    to_pnf_with(f, target, &Config::default())
}

pub fn to_pnf_with(f: &QFormula, target: BooleanCore, cfg: &Config) -> Result<QFormula> {
    match target {
        BooleanCore::Pi1 | BooleanCore::Sigma2 | BooleanCore::Pi2 | BooleanCore::FO => {}
        BooleanCore::Sigma0 | BooleanCore::Sigma1 => {
            return Err(QsoError::Fragment(format!(
                "{target}-PNF does not exist for every ΣQSO({target}) formula; use Pi1 or above"
            )))
        }
        _ => {
            return Err(QsoError::Fragment(format!(
                "prenex normal form is built for Pi1, Sigma2, Pi2 or FO, not {target}"
            )))
        }
    }
    let mut fresh = Fresh::avoiding(f);
    let parts = snf_parts(f, &mut fresh, cfg)?;
    if let Some(s) = parts.iter().find(|s| !boolean_member(&s.matrix, target)) {
        return Err(QsoError::Fragment(format!(
            "matrix `{}` is not in {target}",
            crate::parser::render_boolean(&s.matrix)
        )));
    }
    if parts.len() <= 1 {
        return Ok(from_summands(&parts));
    }
    let mut padded: Vec<PnfSummand> = parts.into_iter().map(|s| pad(s, &mut fresh)).collect();
    let mut acc = padded.pop().expect("at least two summands");
    while let Some(s) = padded.pop() {
        acc = merge(&s, &acc, target, &mut fresh);
    }
    Ok(acc.to_formula())
}

fn pad(mut s: PnfSummand, fresh: &mut Fresh) -> PnfSummand {
    if s.so_vars.is_empty() {
        let y = fresh.name("Y");
        let z = fresh.name("z");
        s.matrix = BFormula::and(s.matrix, BFormula::forall(&z, BFormula::so(&y, &[&z])));
        s.so_vars.push(SoVar::new(y, 1));
    }
    if s.fo_vars.is_empty() {
        let y = fresh.name("y");
        let z = fresh.name("z");
        s.matrix = BFormula::and(s.matrix, BFormula::forall(&z, lex_le(&[z.clone()], &[y.clone()])));
        s.fo_vars.push(y);
    }
    s
}

fn gamma_first(s: &PnfSummand, fresh: &mut Fresh) -> BFormula {
    let mut parts = Vec::new();
    for v in &s.so_vars {
        let z = fresh.names("z", v.arity);
        parts.push(BFormula::forall_all(&z, BFormula::not(BFormula::so_owned(&v.name, z.clone()))));
    }
    let z = fresh.names("z", s.fo_vars.len());
    parts.push(BFormula::forall_all(&z, lex_le(&s.fo_vars, &z)));
    BFormula::and_all(parts)
}

fn gamma_last(s: &PnfSummand, fresh: &mut Fresh) -> BFormula {
    let mut parts = Vec::new();
    for v in &s.so_vars {
        let z = fresh.names("z", v.arity);
        parts.push(BFormula::forall_all(&z, BFormula::so_owned(&v.name, z.clone())));
    }
    let z = fresh.names("z", s.fo_vars.len());
    parts.push(BFormula::forall_all(&z, lex_le(&z, &s.fo_vars)));
    BFormula::and_all(parts)
}

/// `∃z̄ (z̄_0 < x̄ ∨ ⋁ X_i(z̄_i))`, or its mirror image when `last`.
fn gamma_not(s: &PnfSummand, last: bool, fresh: &mut Fresh) -> BFormula {
    let z0 = fresh.names("z", s.fo_vars.len());
    let mut all = z0.clone();
    let mut ds = vec![if last { lex_lt(&s.fo_vars, &z0) } else { lex_lt(&z0, &s.fo_vars) }];
    for v in &s.so_vars {
        let zi = fresh.names("z", v.arity);
        all.extend(zi.iter().cloned());
        let atom = BFormula::so_owned(&v.name, zi);
        ds.push(if last { BFormula::not(atom) } else { atom });
    }
    BFormula::exists_all(&all, BFormula::or_all(ds))
}

/// Π1 replacement for `γ_not-first` (or `γ_not-last`): true for exactly one value of
/// the witness tuple `w̄` when the existential holds, and for none otherwise.
fn gamma_not_counted(s: &PnfSummand, last: bool, w: &[String], fresh: &mut Fresh) -> BFormula {
    // Each case is an existential `∃ū inner(ū)` over a prefix of `w̄`.
    let mut cases: Vec<(usize, Box<dyn Fn(&[String]) -> BFormula>)> = Vec::new();
    for x in &s.fo_vars {
        let x = x.clone();
        cases.push((
            1,
            Box::new(move |u: &[String]| {
                if last {
                    BFormula::less(&x, &u[0])
                } else {
                    BFormula::less(&u[0], &x)
                }
            }),
        ));
    }
    for v in &s.so_vars {
        let name = v.name.clone();
        cases.push((
            v.arity,
            Box::new(move |u: &[String]| {
                let atom = BFormula::so_owned(&name, u.to_vec());
                if last {
                    BFormula::not(atom)
                } else {
                    atom
                }
            }),
        ));
    }
    let mut out = Vec::new();
    for (k, (len, inner)) in cases.iter().enumerate() {
        let mut conj = Vec::new();
        for (plen, prev) in &cases[..k] {
            let u = fresh.names("u", *plen);
            conj.push(BFormula::forall_all(&u, BFormula::not(prev(&u))));
        }
        let wk = &w[..*len];
        let u = fresh.names("u", *len);
        conj.push(inner(wk));
        conj.push(BFormula::forall_all(
            &u,
            BFormula::implies(lex_lt(&u, wk), BFormula::not(inner(&u))),
        ));
        conj.push(pin(&w[*len..], fresh));
        out.push(BFormula::and_all(conj));
    }
    BFormula::or_all(out)
}

fn merge(a: &PnfSummand, b: &PnfSummand, target: BooleanCore, fresh: &mut Fresh) -> PnfSummand {
    let mut avoid = a.bound_names();
    avoid.extend(a.free_names());
    let b = b.rename_apart(&avoid, fresh);
    let a = a.rename_apart(&b.free_names(), fresh);
    let phi = a.matrix.clone();
    let psi = b.matrix.clone();
    let mut fo_vars: Vec<String> = a.fo_vars.iter().chain(&b.fo_vars).cloned().collect();
    let so_vars: Vec<SoVar> = a.so_vars.iter().chain(&b.so_vars).cloned().collect();
    let lines = if target == BooleanCore::Pi1 {
        let len = so_vars.iter().map(|v| v.arity).max().unwrap_or(0).max(1);
        let w = fresh.names("w", len);
        let lines = vec![
            BFormula::and_all([phi.clone(), gamma_not_counted(&a, false, &w, fresh), gamma_first(&b, fresh)]),
            BFormula::and_all([phi, gamma_first(&a, fresh), gamma_last(&b, fresh), pin(&w, fresh)]),
            BFormula::and_all([psi.clone(), gamma_first(&a, fresh), gamma_not_counted(&b, true, &w, fresh)]),
            BFormula::and_all([psi, gamma_last(&a, fresh), gamma_last(&b, fresh), pin(&w, fresh)]),
        ];
        fo_vars.extend(w);
        lines
    } else {
        vec![
            BFormula::and_all([phi.clone(), gamma_not(&a, false, fresh), gamma_first(&b, fresh)]),
            BFormula::and_all([phi, gamma_first(&a, fresh), gamma_last(&b, fresh)]),
            BFormula::and_all([psi.clone(), gamma_first(&a, fresh), gamma_not(&b, true, fresh)]),
            BFormula::and_all([psi, gamma_last(&a, fresh), gamma_last(&b, fresh)]),
        ]
    };
    PnfSummand {
        so_vars,
        fo_vars,
        matrix: BFormula::or_all(lines),
    }
}

/// An ordered partition of variables: equal within a block, blocks strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeakOrdering {
    pub blocks: Vec<Vec<String>>,
}

impl WeakOrdering {
    /// Conjunction of `=` atoms inside blocks and `<` atoms between consecutive blocks.
    pub fn formula(&self) -> BFormula {
        let mut parts = Vec::new();
        for b in &self.blocks {
            for v in &b[1..] {
                parts.push(BFormula::eq(&b[0], v));
            }
        }
        for w in self.blocks.windows(2) {
            parts.push(BFormula::less(&w[0][0], &w[1][0]));
        }
        BFormula::and_all(parts)
    }

    pub fn block_of(&self, v: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.iter().any(|x| x == v))
    }
}

/// Every weak ordering of `vars`, in a fixed order.
pub fn enumerate_weak_orderings(vars: &[String], cfg: &Config) -> Result<Vec<WeakOrdering>> {
    if vars.len() > cfg.weak_order_limit {
        return Err(QsoError::Budget(format!(
            "{} variables exceed the weak-ordering limit of {}",
            vars.len(),
            cfg.weak_order_limit
        )));
    }
    let distinct: BTreeSet<&String> = vars.iter().collect();
    if distinct.len() != vars.len() {
        return Err(QsoError::Invalid("weak orderings need distinct variables".into()));
    }
    let mut out = Vec::new();
    fn go(rest: &[String], prefix: &mut Vec<Vec<String>>, out: &mut Vec<WeakOrdering>) {
        if rest.is_empty() {
            out.push(WeakOrdering {
                blocks: prefix.clone(),
            });
            return;
        }
        let k = rest.len();
        for mask in 1u32..(1 << k) {
            let (block, others): (Vec<_>, Vec<_>) =
                (0..k).partition(|&i| mask & (1 << i) != 0);
            prefix.push(block.iter().map(|&i| rest[i].clone()).collect());
            let others: Vec<String> = others.iter().map(|&i| rest[i].clone()).collect();
            go(&others, prefix, out);
            prefix.pop();
        }
    }
    go(vars, &mut Vec::new(), &mut out);
    Ok(out)
}

/// One disjunct `∃ȳ (φ^FO ∧ φ^+ ∧ φ^-)` of the normal form used by subtraction by one.
#[derive(Debug, Clone, PartialEq)]
pub struct DnfDisjunct {
    pub exist_vars: Vec<String>,
    pub fo_part: Vec<BFormula>,
    pub pos_part: Vec<(String, Vec<String>)>,
    pub neg_part: Vec<(String, Vec<String>)>,
}

impl DnfDisjunct {
    fn empty() -> Self {
        DnfDisjunct {
            exist_vars: Vec::new(),
            fo_part: Vec::new(),
            pos_part: Vec::new(),
            neg_part: Vec::new(),
        }
    }

    fn join(&self, o: &DnfDisjunct) -> DnfDisjunct {
        fn cat<T: Clone>(a: &[T], b: &[T]) -> Vec<T> {
            a.iter().chain(b).cloned().collect()
        }
        DnfDisjunct {
            exist_vars: cat(&self.exist_vars, &o.exist_vars),
            fo_part: cat(&self.fo_part, &o.fo_part),
            pos_part: cat(&self.pos_part, &o.pos_part),
            neg_part: cat(&self.neg_part, &o.neg_part),
        }
    }

    pub fn fo_formula(&self) -> BFormula {
        BFormula::and_all(self.fo_part.iter().cloned())
    }

    /// `φ^FO ∧ φ^+ ∧ φ^-` without the existential prefix.
    pub fn body(&self) -> BFormula {
        let pos = self.pos_part.iter().map(|(x, a)| BFormula::so_owned(x, a.clone()));
        let neg = self
            .neg_part
            .iter()
            .map(|(x, a)| BFormula::not(BFormula::so_owned(x, a.clone())));
        BFormula::and_all(std::iter::once(self.fo_formula()).chain(pos).chain(neg))
    }

    pub fn formula(&self) -> BFormula {
        BFormula::exists_all(&self.exist_vars, self.body())
    }
}

/// Disjunctive normal form with existentials pulled out; subformulas without
/// second-order symbols stay whole inside `fo_part`.
pub fn dnf(f: &BFormula, fresh: &mut Fresh, cfg: &Config) -> Result<Vec<DnfDisjunct>> {
    dnf_rec(f, false, fresh, cfg)
}

fn dnf_rec(f: &BFormula, neg: bool, fresh: &mut Fresh, cfg: &Config) -> Result<Vec<DnfDisjunct>> {
    if f.is_so_free() {
        let mut d = DnfDisjunct::empty();
        d.fo_part.push(if neg { BFormula::not(f.clone()) } else { f.clone() });
        return Ok(vec![d]);
    }
    let conj = |a: Vec<DnfDisjunct>, b: Vec<DnfDisjunct>| -> Result<Vec<DnfDisjunct>> {
        if a.len().saturating_mul(b.len()) > cfg.dnf_limit {
            return Err(QsoError::Budget(format!(
                "DNF exceeds the limit of {} disjuncts",
                cfg.dnf_limit
            )));
        }
        Ok(a.iter().flat_map(|x| b.iter().map(move |y| x.join(y))).collect())
    };
    let disj = |mut a: Vec<DnfDisjunct>, b: Vec<DnfDisjunct>| -> Result<Vec<DnfDisjunct>> {
        a.extend(b);
        if a.len() > cfg.dnf_limit {
            return Err(QsoError::Budget(format!(
                "DNF exceeds the limit of {} disjuncts",
                cfg.dnf_limit
            )));
        }
        Ok(a)
    };
    match &f.kind {
        BKind::SoAtom(x, args) => {
            let mut d = DnfDisjunct::empty();
            if neg {
                d.neg_part.push((x.clone(), args.clone()));
            } else {
                d.pos_part.push((x.clone(), args.clone()));
            }
            Ok(vec![d])
        }
        BKind::Not(a) => dnf_rec(a, !neg, fresh, cfg),
        BKind::And(a, b) | BKind::Or(a, b) => {
            let l = dnf_rec(a, neg, fresh, cfg)?;
            let r = dnf_rec(b, neg, fresh, cfg)?;
            if matches!(f.kind, BKind::And(..)) != neg {
                conj(l, r)
            } else {
                disj(l, r)
            }
        }
        BKind::Implies(a, b) => {
            let l = dnf_rec(a, !neg, fresh, cfg)?;
            let r = dnf_rec(b, neg, fresh, cfg)?;
            if neg {
                conj(l, r)
            } else {
                disj(l, r)
            }
        }
        BKind::Exists(Binder::Fo(x), a) | BKind::Forall(Binder::Fo(x), a)
            if matches!(f.kind, BKind::Exists(..)) != neg =>
        {
            let y = fresh.name(x);
            let body = a.subst_fo(&one(x, &y));
            let mut v = dnf_rec(&body, neg, fresh, cfg)?;
            for d in &mut v {
                d.exist_vars.insert(0, y.clone());
            }
            Ok(v)
        }
        BKind::Exists(Binder::Fo(_), _) | BKind::Forall(Binder::Fo(_), _) => Err(QsoError::Fragment(format!(
            "universal quantifier over second-order atoms in `{}`",
            crate::parser::render_boolean(f)
        ))),
        BKind::Exists(Binder::So(_), _) | BKind::Forall(Binder::So(_), _) => Err(QsoError::Fragment(
            "second-order quantifier inside the matrix".into(),
        )),
        BKind::True | BKind::Eq(..) | BKind::Less(..) | BKind::Rel(..) => unreachable!(),
    }
}

/// Steps (a), (b) and (c): SO atoms only over existential variables, a weak ordering
/// in every first-order part, and no disjunct forcing `X(z̄) ∧ ¬X(z̄)`.
pub fn prepare_disjuncts(
    xs: &[String],
    ds: Vec<DnfDisjunct>,
    fresh: &mut Fresh,
    cfg: &Config,
) -> Result<Vec<DnfDisjunct>> {
    let mut out = Vec::new();
    for mut d in ds {
        let own: BTreeSet<String> = d.exist_vars.iter().cloned().collect();
        let mut split = |atoms: &mut Vec<(String, Vec<String>)>, d_fo: &mut Vec<BFormula>, ex: &mut Vec<String>| {
            for (_, args) in atoms.iter_mut() {
                if args.iter().any(|a| !own.contains(a)) {
                    let v = fresh.names("v", args.len());
                    for (vi, wi) in v.iter().zip(args.iter()) {
                        d_fo.push(BFormula::eq(vi, wi));
                    }
                    ex.extend(v.iter().cloned());
                    *args = v;
                }
            }
        };
        let (mut pos, mut neg) = (std::mem::take(&mut d.pos_part), std::mem::take(&mut d.neg_part));
        split(&mut pos, &mut d.fo_part, &mut d.exist_vars);
        split(&mut neg, &mut d.fo_part, &mut d.exist_vars);
        d.pos_part = pos;
        d.neg_part = neg;

        let vars: Vec<String> = xs.iter().chain(&d.exist_vars).cloned().collect();
        for w in enumerate_weak_orderings(&vars, cfg)? {
            let clash = d.pos_part.iter().any(|(x, z)| {
                d.neg_part.iter().any(|(y, u)| {
                    x == y && z.iter().zip(u).all(|(a, b)| w.block_of(a) == w.block_of(b))
                })
            });
            if clash {
                continue;
            }
            let mut e = d.clone();
            e.fo_part.insert(0, w.formula());
            out.push(e);
            if out.len() > cfg.dnf_limit {
                return Err(QsoError::Budget(format!(
                    "weak-ordering expansion exceeds the limit of {} disjuncts",
                    cfg.dnf_limit
                )));
            }
        }
    }
    Ok(out)
}

/// Per-disjunct formulas of the subtraction-by-one construction.
struct Pieces {
    phi: BFormula,
    psi: BFormula,
    chi: BFormula,
}

fn pieces(so_vars: &[SoVar], xs: &[String], d: &DnfDisjunct, fresh: &mut Fresh) -> Pieces {
    let ys = &d.exist_vars;
    let xy: Vec<String> = xs.iter().chain(ys).cloned().collect();
    let fo = d.fo_formula();
    let copy = |fresh: &mut Fresh| {
        let c: Vec<String> = xy.iter().map(|v| fresh.name(v)).collect();
        let f = fo.subst_fo(&zip_map(&xy, &c));
        (c, f)
    };
    let min_fo = |fresh: &mut Fresh| {
        let (c, fc) = copy(fresh);
        BFormula::and(
            fo.clone(),
            BFormula::forall_all(&c, BFormula::implies(fc, lex_le(&xy, &c))),
        )
    };
    let sat = |fresh: &mut Fresh| {
        let (c, fc) = copy(fresh);
        BFormula::exists_all(&c, fc)
    };

    let mut grow = Vec::new();
    for v in so_vars {
        let z = fresh.names("z", v.arity);
        let outside = d
            .pos_part
            .iter()
            .filter(|(x, _)| *x == v.name)
            .map(|(_, w)| BFormula::not(tuple_eq(&z, w)));
        grow.push(BFormula::exists_all(
            &z,
            BFormula::and_all(std::iter::once(BFormula::so_owned(&v.name, z.clone())).chain(outside)),
        ));
    }
    let same_x = BFormula::exists_all(
        ys,
        BFormula::and(min_fo(fresh), BFormula::implies(d.body(), BFormula::or_all(grow))),
    );
    let other_x = {
        let m = min_fo(fresh);
        BFormula::not(BFormula::exists_all(ys, m))
    };
    let premise = sat(fresh);
    Pieces {
        phi: d.formula(),
        psi: BFormula::implies(premise, BFormula::or(same_x, other_x)),
        chi: BFormula::not(sat(fresh)),
    }
}

/// Summand-level data reused by the sum recursion: the rewritten summand and `λ`.
struct Reduced {
    summand: PnfSummand,
    empty: BFormula,
}

/// `ΣX̄ Σx̄ φ` with one satisfying assignment removed, unconditionally when `guard` is
/// `None` and only when the guard holds otherwise.
fn reduce_summand(s: &PnfSummand, guard: Option<&BFormula>, fresh: &mut Fresh, cfg: &Config) -> Result<Reduced> {
    let xs = s.fo_vars.clone();
    if s.so_vars.is_empty() {
        let z: Vec<String> = xs.iter().map(|x| fresh.name(x)).collect();
        let smaller = BFormula::exists_all(
            &z,
            BFormula::and(s.matrix.subst_fo(&zip_map(&xs, &z)), lex_lt(&z, &xs)),
        );
        let removed = match guard {
            None => smaller,
            Some(g) => BFormula::implies(g.clone(), smaller),
        };
        let w: Vec<String> = xs.iter().map(|x| fresh.name(x)).collect();
        let empty = BFormula::not(BFormula::exists_all(&w, s.matrix.subst_fo(&zip_map(&xs, &w))));
        return Ok(Reduced {
            summand: PnfSummand {
                so_vars: Vec::new(),
                fo_vars: xs,
                matrix: BFormula::and(s.matrix.clone(), removed),
            },
            empty,
        });
    }
    let ds = dnf(&s.matrix, fresh, cfg)?;
    let ds = prepare_disjuncts(&xs, ds, fresh, cfg)?;
    let ps: Vec<Pieces> = ds.iter().map(|d| pieces(&s.so_vars, &xs, d, fresh)).collect();
    // φᵢ forces disjunct i to be satisfiable, so the chain of conditions up to i only
    // constrains the first satisfiable disjunct: (⋁ᵢ φᵢ) ∧ (if ¬χ₁ then ψ₁ else if ¬χ₂ …).
    let mut first_sat: Option<BFormula> = None;
    for p in ps.iter().rev() {
        first_sat = Some(match first_sat {
            None => p.psi.clone(),
            Some(rest) => BFormula::or(
                BFormula::and(BFormula::not(p.chi.clone()), p.psi.clone()),
                BFormula::and(p.chi.clone(), rest),
            ),
        });
    }
    let matrix = match first_sat {
        None => BFormula::fals(),
        Some(cond) => BFormula::and(
            BFormula::or_all(ps.iter().map(|p| p.phi.clone())),
            match guard {
                None => cond,
                Some(g) => BFormula::implies(g.clone(), cond),
            },
        ),
    };
    Ok(Reduced {
        summand: PnfSummand {
            so_vars: s.so_vars.clone(),
            fo_vars: xs,
            matrix,
        },
        empty: BFormula::and_all(ps.into_iter().map(|p| p.chi)),
    })
}

/// `κ(α)`: a ΣQSO(Σ1[FO]) formula with `⟦κ(α)⟧ = ⟦α⟧ ∸ 1` on every structure.
pub fn minus_one(f: &QFormula) -> Result<QFormula> {
    minus_one_with(f, &Config::default())
}

pub fn minus_one_with(f: &QFormula, cfg: &Config) -> Result<QFormula> {
    let mut fresh = Fresh::avoiding(f);
    let parts = snf_parts(f, &mut fresh, cfg)?;
    if let Some(s) = parts.iter().find(|s| !boolean_member(&s.matrix, BooleanCore::Sigma1Ext)) {
        return Err(QsoError::Fragment(format!(
            "matrix `{}` is not in Sigma1[FO]; subtraction by one is only built for that fragment",
            crate::parser::render_boolean(&s.matrix)
        )));
    }
    let mut out = Vec::new();
    let mut lambda: Option<BFormula> = None;
    for s in &parts {
        let r = reduce_summand(s, lambda.as_ref(), &mut fresh, cfg)?;
        out.push(r.summand);
        lambda = Some(match lambda {
            None => r.empty,
            Some(l) => BFormula::and(l, r.empty),
        });
    }
    Ok(from_summands(&out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::eval_with;
    use crate::model::{enumerate_relations, Assignment, Signature, Structure};
    use crate::parser::{parse_formula, render_formula};
    use crate::Value;

    fn sig() -> Signature {
        Signature::new([("E", 2)]).unwrap()
    }

    fn q(t: &str) -> QFormula {
        parse_formula(t, &sig()).unwrap()
    }

    fn structures(ns: &[usize]) -> Vec<Structure> {
        let mut out = Vec::new();
        for &n in ns {
            for e in enumerate_relations(n, 2, &Config::default()).unwrap() {
                let mut s = Structure::new(sig(), n);
                s.set_relation("E", e).unwrap();
                out.push(s);
            }
        }
        out
    }

    fn value(s: &Structure, f: &QFormula) -> Value {
        eval_with(s, f, &Assignment::new(), &Config::default()).unwrap()
    }

    fn same(a: &QFormula, b: &QFormula, ns: &[usize]) {
        for s in structures(ns) {
            assert_eq!(value(&s, a), value(&s, b), "{} vs {} on n={}", render_formula(a), render_formula(b), s.domain_size());
        }
    }

    #[test]
    fn snf_examples() {
        assert_eq!(render_formula(&to_snf(&q("3")).unwrap()), "true + true + true");
        let f = q("sum x. (1 + E(x,x))");
        let g = to_snf(&f).unwrap();
        assert_eq!(g, q("(sum x. true) + (sum x. E(x,x))"));
        same(&f, &g, &[0, 1, 2, 3]);
        let p = q("sum X:1. sum x. X(x)");
        assert_eq!(to_snf(&p).unwrap(), p);
        assert!(to_snf(&q("prod x. E(x,x)")).is_err());
    }

    #[test]
    fn snf_products_and_conditionals() {
        for t in [
            "(sum x. E(x,x)) * (sum x. sum y. E(x,y))",
            "(E(x,x) ~> 2) + sum x. (exists y. E(x,y)) ~> sum X:1. X(x)",
            "sum x. (sum x. E(x,x)) * (1 + E(x,x))",
        ] {
            let f = q(t);
            let g = to_snf(&f).unwrap();
            assert!(is_snf(&g, Some(BooleanCore::FO)), "{}", render_formula(&g));
            for s in structures(&[1, 2, 3]) {
                for x in 0..s.domain_size() {
                    let a = Assignment::new().with_fo("x", x);
                    let c = Config::default();
                    assert_eq!(eval_with(&s, &f, &a, &c).unwrap(), eval_with(&s, &g, &a, &c).unwrap(), "{t}");
                }
            }
        }
    }

    #[test]
    fn pnf_examples() {
        let f = q("(sum x. E(x,x)) + (sum y. !E(y,y))");
        let g = to_pnf(&f, BooleanCore::Pi1).unwrap();
        assert!(is_pnf(&g, Some(BooleanCore::Pi1)), "{}", render_formula(&g));
        same(&f, &g, &[1, 2, 3]);
        let h = to_pnf(&f, BooleanCore::FO).unwrap();
        assert!(is_pnf(&h, Some(BooleanCore::Sigma2)));
        same(&f, &h, &[1, 2, 3]);

        let p = q("sum X:1. sum x. X(x)");
        assert_eq!(to_pnf(&p, BooleanCore::Pi1).unwrap(), p);
        assert!(to_pnf(&q("1 + sum X:1. true"), BooleanCore::Sigma0).is_err());
        let k = to_pnf(&q("2 + sum X:1. X(x) -> forall y. E(x,y)"), BooleanCore::Pi1);
        assert!(k.is_ok());
    }

    #[test]
    fn product_examples() {
        let s3 = Structure::new(sig(), 3);
        let p = product_to_snf(&q("sum x. true"), &q("sum y. true")).unwrap();
        assert_eq!(value(&s3, &p), Value::from(9));
        let p = product_to_snf(&q("2"), &q("3")).unwrap();
        assert!(is_snf(&p, None));
        assert_eq!(value(&s3, &p), Value::from(6));
        let a = q("sum x. E(x,x)");
        let b = q("sum X:1. true");
        let p = product_to_snf(&a, &b).unwrap();
        same(&QFormula::mul(a.clone(), b.clone()), &p, &[0, 1, 2, 3]);
        let p = product_to_snf(&a, &a).unwrap();
        same(&QFormula::mul(a.clone(), a), &p, &[0, 1, 2, 3]);
    }

    #[test]
    fn weak_ordering_counts() {
        let c = Config::default();
        let counts: Vec<usize> = (0..=5)
            .map(|k| {
                let vars: Vec<String> = (0..k).map(|i| format!("v{i}")).collect();
                enumerate_weak_orderings(&vars, &c).unwrap().len()
            })
            .collect();
        assert_eq!(counts, vec![1, 1, 3, 13, 75, 541]);
        let vars: Vec<String> = (0..7).map(|i| format!("v{i}")).collect();
        assert!(enumerate_weak_orderings(&vars, &c).unwrap_err().is_budget());
        let two = enumerate_weak_orderings(&["a".into(), "b".into()], &c).unwrap();
        let texts: Vec<String> = two.iter().map(|w| crate::parser::render_boolean(&w.formula())).collect();
        assert_eq!(texts, vec!["a < b", "b < a", "a = b"]);
    }

    #[test]
    fn dnf_pulls_existentials() {
        let mut fresh = Fresh::new();
        let opts = crate::ParseOptions {
            free_so: vec![SoVar::new("X", 1)],
            ..Default::default()
        };
        let f = crate::parser::parse_boolean("X(x) & (exists y. (!X(y) | E(x,y)))", &sig(), &opts).unwrap();
        let ds = dnf(&f, &mut fresh, &Config::default()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds[0].exist_vars, vec!["y_r1".to_string()]);
        assert_eq!(ds[0].neg_part, vec![("X".to_string(), vec!["y_r1".to_string()])]);
        assert_eq!(ds[1].fo_part.len(), 1);
        let g = crate::parser::parse_boolean("forall y. X(y)", &sig(), &opts).unwrap();
        assert!(dnf(&g, &mut fresh, &Config::default()).is_err());
    }

    #[test]
    fn minus_one_examples() {
        let s3 = Structure::new(sig(), 3);
        let k = minus_one(&q("sum x. true")).unwrap();
        assert_eq!(value(&s3, &k), Value::from(2));
        let f = q("sum X:1. sum x. X(x)");
        let k = minus_one(&f).unwrap();
        assert!(is_snf(&k, Some(BooleanCore::Sigma1Ext)));
        assert_eq!(value(&Structure::new(sig(), 2), &k), Value::from(3));
        for t in [
            "sum x. E(x,x)",
            "sum X:1. sum x. X(x)",
            "sum X:1. exists y. (X(y) & E(y,y))",
            "(sum x. E(x,x)) + sum X:1. sum x. (X(x) & !E(x,x))",
            "2 + sum X:1. (forall y. E(y,y))",
            "sum X:1. sum x. (!X(x) | exists y. E(x,y))",
        ] {
            let f = q(t);
            let k = minus_one(&f).unwrap();
            for s in structures(&[0, 1, 2, 3]) {
                let v = value(&s, &f);
                let want = if v > Value::from(0) { v - 1 } else { v };
                assert_eq!(value(&s, &k), want, "{t} on n={}", s.domain_size());
            }
        }
        assert!(minus_one(&q("sum X:1. forall x. X(x)")).is_err());
    }
}
