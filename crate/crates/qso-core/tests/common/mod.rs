//! Seeded generators and enumerators shared by the integration tests.
#![allow(dead_code)]

use qso_core::{enumerate_relations, eval_with, Assignment, Config, QFormula, Signature, Structure, Value};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn e_sig() -> Signature {
    Signature::new([("E", 2)]).unwrap()
}

pub fn digraph(n: usize, edges: &[(usize, usize)]) -> Structure {
    let e: Vec<Vec<usize>> = edges.iter().map(|&(a, b)| vec![a, b]).collect();
    Structure::with_relations(e_sig(), n, [("E".to_string(), e)]).unwrap()
}

/// Every `{E:2}` structure with at most `max_n` elements.
pub fn all_graphs(max_n: usize) -> Vec<Structure> {
    let mut out = Vec::new();
    for n in 0..=max_n {
        for e in enumerate_relations(n, 2, &Config::default()).unwrap() {
            let mut s = Structure::new(e_sig(), n);
            s.set_relation("E", e).unwrap();
            out.push(s);
        }
    }
    out
}

pub fn random_edges(r: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if r.gen_bool(p) {
                edges.push((a, b));
            }
        }
    }
    edges
}

/// Edges `a→b` with `a < b` only.
pub fn random_dag_edges(r: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<(usize, usize)> {
    random_edges(r, n, p).into_iter().filter(|&(a, b)| a < b).collect()
}

pub fn value(s: &Structure, f: &QFormula) -> Value {
    eval_with(s, f, &Assignment::new(), &Config::default()).unwrap()
}

/// Random formula text over `{E:2}`; every generated formula is a sentence.
pub struct Gen<'a> {
    pub r: &'a mut ChaCha8Rng,
    counter: usize,
}

impl<'a> Gen<'a> {
    pub fn new(r: &'a mut ChaCha8Rng) -> Self {
        Gen { r, counter: 0 }
    }

    fn fresh(&mut self, base: &str) -> String {
        self.counter += 1;
        format!("{base}{}", self.counter)
    }

    fn pick(&mut self, xs: &[String]) -> String {
        xs.choose(self.r).unwrap().clone()
    }

    fn fo_atom(&mut self, fo: &[String], so: &[String]) -> String {
        let a = self.pick(fo);
        let b = self.pick(fo);
        match self.r.gen_range(0..if so.is_empty() { 4 } else { 6 }) {
            0 | 1 => format!("E({a},{b})"),
            2 => format!("{a} = {b}"),
            3 => format!("{a} < {b}"),
            _ => format!("{}({a})", self.pick(so)),
        }
    }

    /// First-order formula with free variables among `fo` and unary SO atoms from `so`.
    pub fn fo(&mut self, depth: usize, fo: &[String], so: &[String]) -> String {
        if fo.is_empty() || (depth > 0 && self.r.gen_bool(0.3)) {
            if depth == 0 {
                return if self.r.gen_bool(0.5) { "true".into() } else { "!true".into() };
            }
            let v = self.fresh("u");
            let mut inner = fo.to_vec();
            inner.push(v.clone());
            let body = self.fo(depth - 1, &inner, so);
            let q = if self.r.gen_bool(0.5) { "exists" } else { "forall" };
            return format!("({q} {v}. {body})");
        }
        if depth == 0 {
            return self.fo_atom(fo, so);
        }
        match self.r.gen_range(0..5) {
            0 => format!("!({})", self.fo(depth - 1, fo, so)),
            1 => format!("({} & {})", self.fo(depth - 1, fo, so), self.fo(depth - 1, fo, so)),
            2 => format!("({} | {})", self.fo(depth - 1, fo, so), self.fo(depth - 1, fo, so)),
            _ => self.fo_atom(fo, so),
        }
    }

    /// ΣQSO(FO) with quantitative depth at most `depth`.
    pub fn sigma_fo(&mut self, depth: usize, fo: &mut Vec<String>, so: &mut Vec<String>) -> String {
        if depth <= 1 || self.r.gen_bool(0.15) {
            return if self.r.gen_bool(0.25) {
                self.r.gen_range(0..=2).to_string()
            } else {
                let leaf_depth = self.r.gen_range(0..=2);
                format!("({})", self.fo(leaf_depth, fo, so))
            };
        }
        match self.r.gen_range(0..6) {
            0 | 1 if fo.len() < 3 => {
                let x = self.fresh("x");
                fo.push(x.clone());
                let body = self.sigma_fo(depth - 1, fo, so);
                fo.pop();
                format!("(sum {x}. ({body}))")
            }
            2 if so.is_empty() => {
                let x = self.fresh("X");
                so.push(x.clone());
                let body = self.sigma_fo(depth - 1, fo, so);
                so.pop();
                format!("(sum {x}:1. ({body}))")
            }
            3 => format!("({} * {})", self.sigma_fo(depth - 1, fo, so), self.sigma_fo(depth - 1, fo, so)),
            _ => format!("({} + {})", self.sigma_fo(depth - 1, fo, so), self.sigma_fo(depth - 1, fo, so)),
        }
    }

    fn qf(&mut self, depth: usize, fo: &[String], so: &[String]) -> String {
        if depth == 0 {
            return self.fo_atom(fo, so);
        }
        match self.r.gen_range(0..4) {
            0 => format!("!({})", self.qf(depth - 1, fo, so)),
            1 => format!("({} & {})", self.qf(depth - 1, fo, so), self.qf(depth - 1, fo, so)),
            2 => format!("({} | {})", self.qf(depth - 1, fo, so), self.qf(depth - 1, fo, so)),
            _ => self.fo_atom(fo, so),
        }
    }

    /// `sum X̄. sum x̄. φ` with `φ` universal, `|X̄| ≤ 1` unary, `|x̄| ≤ 1`.
    fn pi1_summand(&mut self) -> String {
        let mut so = Vec::new();
        let mut fo = Vec::new();
        let mut head = String::new();
        if self.r.gen_bool(0.6) {
            let x = self.fresh("X");
            head.push_str(&format!("sum {x}:1. "));
            so.push(x);
        }
        if self.r.gen_bool(0.6) {
            let x = self.fresh("x");
            head.push_str(&format!("sum {x}. "));
            fo.push(x);
        }
        let mut inner = fo.clone();
        let mut prefix = String::new();
        for _ in 0..self.r.gen_range(0..=2) {
            let u = self.fresh("u");
            prefix.push_str(&format!("forall {u}. "));
            inner.push(u);
        }
        if inner.is_empty() {
            let u = self.fresh("u");
            prefix.push_str(&format!("forall {u}. "));
            inner.push(u);
        }
        let d = self.r.gen_range(0..=2);
        let body = self.qf(d, &inner, &so);
        format!("{head}({prefix}{body})")
    }

    /// Sum of one or two Π1 summands, sometimes with a constant.
    pub fn sigma_pi1(&mut self) -> String {
        let mut parts = vec![self.pi1_summand()];
        match self.r.gen_range(0..3) {
            0 => parts.push(self.pi1_summand()),
            1 => parts.push("1".into()),
            _ => {}
        }
        parts.iter().map(|p| format!("({p})")).collect::<Vec<_>>().join(" + ")
    }

    /// Σ1 matrix over SO atoms with arbitrary first-order subformulas.
    fn sigma1_ext_matrix(&mut self, fo: &[String], so: &[String]) -> String {
        let mut vars = fo.to_vec();
        let mut prefix = String::new();
        if vars.is_empty() || self.r.gen_bool(0.5) {
            let y = self.fresh("y");
            prefix = format!("exists {y}. ");
            vars.push(y);
        }
        let mut conj = Vec::new();
        let so_atoms = if so.is_empty() { 0 } else { self.r.gen_range(1..=2) };
        for _ in 0..so_atoms {
            let v = self.pick(&vars);
            let x = self.pick(so);
            conj.push(if self.r.gen_bool(0.7) { format!("{x}({v})") } else { format!("!{x}({v})") });
        }
        let d = self.r.gen_range(0..=2);
        conj.push(self.fo(d, &vars, &[]));
        if conj.len() > 1 && self.r.gen_bool(0.3) {
            let last = conj.pop().unwrap();
            let first = conj.pop().unwrap();
            conj.push(format!("({first} | {last})"));
        }
        format!("{prefix}({})", conj.join(" & "))
    }

    /// `Σ` of one or two summands `sum X? sum x? φ` with `φ ∈ Σ1[FO]`.
    pub fn sigma1_ext(&mut self, allow_so: bool) -> String {
        let count = if self.r.gen_bool(0.7) { 1 } else { 2 };
        let mut parts = Vec::new();
        for _ in 0..count {
            let mut so = Vec::new();
            let mut fo = Vec::new();
            let mut head = String::new();
            if allow_so && self.r.gen_bool(0.5) {
                let x = self.fresh("X");
                head.push_str(&format!("sum {x}:1. "));
                so.push(x);
            }
            if self.r.gen_bool(0.7) {
                let x = self.fresh("x");
                head.push_str(&format!("sum {x}. "));
                fo.push(x);
            }
            let m = self.sigma1_ext_matrix(&fo, &so);
            parts.push(format!("({head}{m})"));
        }
        parts.join(" + ")
    }

    fn horn_clause(&mut self, vars: &[String], so: &[(String, usize)]) -> String {
        let mut inner = vars.to_vec();
        let mut prefix = String::new();
        for _ in 0..self.r.gen_range(0..=2) {
            let u = self.fresh("u");
            prefix.push_str(&format!("forall {u}. "));
            inner.push(u);
        }
        if inner.is_empty() {
            let u = self.fresh("u");
            prefix.push_str(&format!("forall {u}. "));
            inner.push(u);
        }
        let args = |g: &mut Gen, k: usize| (0..k).map(|_| g.pick(&inner)).collect::<Vec<_>>().join(",");
        let mut lits = Vec::new();
        for _ in 0..self.r.gen_range(0..=2) {
            let (x, k) = so.choose(self.r).unwrap().clone();
            lits.push(format!("!{x}({})", args(self, k)));
        }
        if self.r.gen_bool(0.6) {
            let (x, k) = so.choose(self.r).unwrap().clone();
            lits.push(format!("{x}({})", args(self, k)));
        }
        if lits.is_empty() || self.r.gen_bool(0.6) {
            let d = self.r.gen_range(0..=1);
            lits.push(self.fo(d, &inner, &[]));
        }
        lits.shuffle(self.r);
        format!("({prefix}({}))", lits.join(" | "))
    }

    /// ΣQSO(∃Horn) sentence whose DisjHorn reduction on `n ≤ 3` elements has at most
    /// `max_vars` variables: grounded SO atoms plus one tag per (summand, `x̄` value) group.
    pub fn sigma_exists_horn(&mut self, max_vars: usize) -> String {
        loop {
            let (text, atoms, groups) = self.exists_horn_candidate();
            let tags = if groups > 1 { groups } else { 0 };
            if atoms + tags <= max_vars {
                return text;
            }
        }
    }

    fn exists_horn_candidate(&mut self) -> (String, usize, usize) {
        let count = if self.r.gen_bool(0.7) { 1 } else { 2 };
        let mut parts = Vec::new();
        let mut atoms = 0usize;
        let mut groups = 0usize;
        for _ in 0..count {
            let mut so = Vec::new();
            let mut head = String::new();
            for _ in 0..self.r.gen_range(1..=2) {
                let k = if self.r.gen_bool(0.7) { 1 } else { 2 };
                atoms += 3usize.pow(k as u32);
                let x = self.fresh("X");
                head.push_str(&format!("sum {x}:{k}. "));
                so.push((x, k));
            }
            let mut vars = Vec::new();
            if self.r.gen_bool(0.5) {
                let x = self.fresh("x");
                head.push_str(&format!("sum {x}. "));
                vars.push(x);
                groups += 3;
            } else {
                groups += 1;
            }
            let mut exists = String::new();
            if self.r.gen_bool(0.4) {
                let y = self.fresh("y");
                exists = format!("exists {y}. ");
                vars.push(y);
            }
            let clauses: Vec<String> = (0..self.r.gen_range(1..=3)).map(|_| self.horn_clause(&vars, &so)).collect();
            parts.push(format!("({head}{exists}({}))", clauses.join(" & ")));
        }
        (parts.join(" + "), atoms, groups)
    }
}
