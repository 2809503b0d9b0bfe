//! Brute-force reference implementations used to cross-check the evaluator.
//!
//! None of these share the evaluator's quantitative recursion. Each one is a plain
//! enumeration loop over the objects being counted.

use crate::ast::{BFormula, SoVar};
use crate::config::Config;
use crate::error::{QsoError, Result};
use crate::eval::{Compiled, FreeDecl};
use crate::horn::PropDisjHorn;
use crate::model::{Assignment, Signature, Structure, TupleSet};
use crate::Value;
use num_traits::Zero;

/// `|{(Ā, ā) : S ⊨ φ(Ā, ā)}|` by nested enumeration of every relation and tuple.
pub fn oracle_count_assignments(
    s: &Structure,
    phi: &BFormula,
    so_vars: &[SoVar],
    fo_vars: &[String],
    cfg: &Config,
) -> Result<Value> {
    let n = s.domain_size();
    let mut work: u128 = (n as u128).checked_pow(fo_vars.len() as u32).unwrap_or(u128::MAX);
    for v in so_vars {
        cfg.check_subsets(n, v.arity)?;
        work = work.saturating_mul(1u128 << n.pow(v.arity as u32));
    }
    if work > cfg.subset_budget as u128 {
        return Err(QsoError::Budget(format!(
            "{work} assignments exceed the enumeration budget of {}",
            cfg.subset_budget
        )));
    }
    let decl = FreeDecl {
        fo: fo_vars.to_vec(),
        so: so_vars.to_vec(),
        fns: Vec::new(),
    };
    let test = Compiled::new_boolean(phi, s.signature(), &decl, cfg)?;
    let mut sets: Vec<TupleSet> = so_vars.iter().map(|v| TupleSet::empty(n, v.arity)).collect();
    let mut count = 0u64;
    loop {
        let mut base = Assignment::new();
        for (v, set) in so_vars.iter().zip(&sets) {
            base = base.with_so(&v.name, set.clone());
        }
        let mut t = vec![0usize; fo_vars.len()];
        let mut more = n > 0 || fo_vars.is_empty();
        while more {
            let mut a = base.clone();
            for (x, &e) in fo_vars.iter().zip(&t) {
                a.fo.insert(x.clone(), e);
            }
            if !test.run(s, &a, cfg)?.is_zero() {
                count += 1;
            }
            more = false;
            for i in (0..t.len()).rev() {
                if t[i] + 1 < n {
                    t[i] += 1;
                    more = true;
                    break;
                }
                t[i] = 0;
            }
        }
        let mut carried = true;
        for set in sets.iter_mut().rev() {
            if set.advance() {
                carried = false;
                break;
            }
        }
        if carried {
            break;
        }
    }
    Ok(Value::from(count))
}

/// A square 0-1 matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix01 {
    n: usize,
    entries: Vec<bool>,
}

impl Matrix01 {
    pub fn new(n: usize, entries: Vec<bool>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(QsoError::Invalid(format!(
                "{} entries for a {n}x{n} matrix",
                entries.len()
            )));
        }
        Ok(Matrix01 { n, entries })
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(QsoError::Invalid("matrix is not square".into()));
            }
            for &v in r {
                match v {
                    0 => entries.push(false),
                    1 => entries.push(true),
                    _ => return Err(QsoError::Invalid(format!("entry {v} is not 0 or 1"))),
                }
            }
        }
        Ok(Matrix01 { n, entries })
    }

    /// The `n²` cells of an `n×n` matrix read from the bits of `mask`, row-major.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        let entries = (0..n * n).map(|i| mask >> i & 1 == 1).collect();
        Matrix01 { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.entries[i * self.n + j]
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let entries = (0..n * n).map(|k| self.get(k % n, k / n)).collect();
        Matrix01 { n, entries }
    }

    /// The matrix as a structure over `{M:2}` with `M(i,j)` iff the cell is 1.
    pub fn to_structure(&self) -> Structure {
        let sig = Signature::new([("M", 2)]).expect("valid signature");
        let mut s = Structure::new(sig, self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                if self.get(i, j) {
                    s.insert("M", &[i, j]).expect("cell in range");
                }
            }
        }
        s
    }
}

pub const PERMANENT_LIMIT: usize = 8;

/// `Σ_σ Π_i A[i,σ(i)]` over all `n!` permutations, generated by Heap's algorithm.
pub fn oracle_permanent(m: &Matrix01) -> Result<Value> {
    let n = m.n;
    if n > PERMANENT_LIMIT {
        return Err(QsoError::Budget(format!(
            "permanent oracle limited to n <= {PERMANENT_LIMIT}, got {n}"
        )));
    }
    let term = |p: &[usize]| (0..n).all(|i| m.get(i, p[i]));
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = term(&perm) as u64;
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            total += term(&perm) as u64;
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(Value::from(total))
}

/// Propositional formulas over variables `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Prop {
    True,
    False,
    Var(usize),
    Not(Box<Prop>),
    And(Vec<Prop>),
    Or(Vec<Prop>),
}

impl Prop {
    pub fn var(v: usize) -> Prop {
        Prop::Var(v)
    }

    pub fn not(p: Prop) -> Prop {
        Prop::Not(Box::new(p))
    }

    /// The literal for a signed variable index.
    pub fn literal(l: i64) -> Prop {
        let v = Prop::Var(l.unsigned_abs() as usize);
        if l > 0 {
            v
        } else {
            Prop::not(v)
        }
    }

    pub fn holds(&self, bits: u32) -> bool {
        match self {
            Prop::True => true,
            Prop::False => false,
            Prop::Var(v) => bits >> (v - 1) & 1 == 1,
            Prop::Not(p) => !p.holds(bits),
            Prop::And(ps) => ps.iter().all(|p| p.holds(bits)),
            Prop::Or(ps) => ps.iter().any(|p| p.holds(bits)),
        }
    }

    pub fn max_var(&self) -> usize {
        match self {
            Prop::True | Prop::False => 0,
            Prop::Var(v) => *v,
            Prop::Not(p) => p.max_var(),
            Prop::And(ps) | Prop::Or(ps) => ps.iter().map(Prop::max_var).max().unwrap_or(0),
        }
    }
}

impl From<&PropDisjHorn> for Prop {
    fn from(p: &PropDisjHorn) -> Prop {
        Prop::Or(
            p.disjuncts
                .iter()
                .map(|d| {
                    Prop::And(
                        d.iter()
                            .map(|c| Prop::Or(c.iter().map(|&l| Prop::literal(l)).collect()))
                            .collect(),
                    )
                })
                .collect(),
        )
    }
}

pub const TRUTH_TABLE_LIMIT: usize = 24;

/// Number of the `2^n` assignments to variables `1..=n` that satisfy `p`.
pub fn oracle_truth_table_count(n: usize, p: &Prop) -> Result<Value> {
    if n > TRUTH_TABLE_LIMIT {
        return Err(QsoError::Budget(format!(
            "truth-table oracle limited to {TRUTH_TABLE_LIMIT} variables, got {n}"
        )));
    }
    if p.max_var() > n {
        return Err(QsoError::Invalid(format!(
            "variable {} outside 1..={n}",
            p.max_var()
        )));
    }
    let count = (0u32..1 << n).filter(|&bits| p.holds(bits)).count();
    Ok(Value::from(count))
}

/// A directed graph on nodes `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Digraph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(&(a, b)) = edges.iter().find(|&&(a, b)| a >= n || b >= n) {
            return Err(QsoError::Invalid(format!("edge ({a},{b}) outside {n} nodes")));
        }
        Ok(Digraph { n, edges })
    }

    /// The digraph stored in the binary relation `rel` of `s`.
    pub fn from_structure(s: &Structure, rel: &str) -> Result<Self> {
        let r = s
            .relation(rel)
            .filter(|r| r.arity() == 2)
            .ok_or_else(|| QsoError::Signature(format!("no binary relation `{rel}`")))?;
        let edges = r.tuples().into_iter().map(|t| (t[0], t[1])).collect();
        Digraph::new(s.domain_size(), edges)
    }

    pub fn is_acyclic(&self) -> bool {
        let mut indeg = vec![0usize; self.n];
        for &(_, b) in &self.edges {
            indeg[b] += 1;
        }
        let mut stack: Vec<usize> = (0..self.n).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = stack.pop() {
            seen += 1;
            for &(a, b) in &self.edges {
                if a == v {
                    indeg[b] -= 1;
                    if indeg[b] == 0 {
                        stack.push(b);
                    }
                }
            }
        }
        seen == self.n
    }
}

pub const WALK_NODE_LIMIT: usize = 12;
pub const WALK_LENGTH_LIMIT: usize = 64;

/// Walks of length `1..=maxlen` from `s` to `t`, from powers of the adjacency matrix.
pub fn oracle_walks(g: &Digraph, s: usize, t: usize, maxlen: usize) -> Result<Value> {
    let n = g.n;
    if n > WALK_NODE_LIMIT || maxlen > WALK_LENGTH_LIMIT {
        return Err(QsoError::Budget(format!(
            "walk oracle limited to {WALK_NODE_LIMIT} nodes and length {WALK_LENGTH_LIMIT}"
        )));
    }
    if s >= n || t >= n {
        return Err(QsoError::Invalid(format!("endpoint outside {n} nodes")));
    }
    let mut adj = vec![vec![Value::zero(); n]; n];
    for &(a, b) in &g.edges {
        adj[a][b] = Value::from(1);
    }
    let mut power = adj.clone();
    let mut total = Value::zero();
    for len in 1..=maxlen {
        total += &power[s][t];
        if len < maxlen {
            power = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| (0..n).map(|k| &power[i][k] * &adj[k][j]).sum())
                        .collect()
                })
                .collect();
        }
    }
    Ok(total)
}

/// Ordered set partitions of `k` labelled elements, counted as surjections from the
/// elements onto ranks `0..m` for some `m`.
pub fn oracle_weak_orderings(k: usize) -> Result<Value> {
    if k > 8 {
        return Err(QsoError::Budget(format!("weak-ordering oracle limited to k <= 8, got {k}")));
    }
    let mut count = 0u64;
    let mut rank = vec![0usize; k];
    loop {
        let m = rank.iter().max().map_or(0, |&r| r + 1);
        if (0..m).all(|r| rank.contains(&r)) {
            count += 1;
        }
        let mut i = 0;
        loop {
            if i == k {
                return Ok(Value::from(count));
            }
            rank[i] += 1;
            if rank[i] < k {
                break;
            }
            rank[i] = 0;
            i += 1;
        }
    }
}
