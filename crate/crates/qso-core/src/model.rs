//! Finite ordered structures over the domain `{0..n-1}`.

use crate::config::Config;
use crate::error::{QsoError, Result};
use crate::fixpoint::FunctionTable;
use std::collections::BTreeMap;
use std::fmt;

/// Relation names with arities. The order symbol `<` is implicit.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Signature {
    relations: Vec<(String, usize)>,
}

impl Signature {
    pub fn new<S: Into<String>>(relations: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let mut sig = Signature::default();
        for (name, arity) in relations {
            sig.push(name.into(), arity)?;
        }
        Ok(sig)
    }

    pub fn empty() -> Self {
        Signature::default()
    }

    fn push(&mut self, name: String, arity: usize) -> Result<()> {
        if name == "<" {
            return Err(QsoError::Signature("`<` is reserved".into()));
        }
        if !is_identifier(&name) {
            return Err(QsoError::Signature(format!("`{name}` is not an identifier")));
        }
        if arity == 0 {
            return Err(QsoError::Signature(format!("relation `{name}` has arity 0")));
        }
        if self.index_of(&name).is_some() {
            return Err(QsoError::Signature(format!("relation `{name}` declared twice")));
        }
        self.relations.push((name, arity));
        Ok(())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|(n, _)| n == name)
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.index_of(name).map(|i| self.relations[i].1)
    }

    pub fn relations(&self) -> &[(String, usize)] {
        &self.relations
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic())
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Position of `t` in `tuples_lex(n, t.len())`.
pub fn tuple_index(n: usize, t: &[usize]) -> usize {
    t.iter().fold(0, |acc, &a| acc * n + a)
}

/// Inverse of [`tuple_index`].
pub fn tuple_at(n: usize, k: usize, mut idx: usize) -> Vec<usize> {
    let mut t = vec![0; k];
    for slot in t.iter_mut().rev() {
        *slot = idx % n;
        idx /= n;
    }
    t
}

/// All `n^k` tuples over `{0..n-1}` in lexicographic order.
pub fn tuples_lex(n: usize, k: usize) -> Vec<Vec<usize>> {
    let total = n.pow(k as u32);
    (0..total).map(|i| tuple_at(n, k, i)).collect()
}

/// Advances `t` to its lexicographic successor; returns false after the last tuple.
pub fn next_tuple(n: usize, t: &mut [usize]) -> bool {
    for i in (0..t.len()).rev() {
        if t[i] + 1 < n {
            t[i] += 1;
            return true;
        }
        t[i] = 0;
    }
    false
}

/// A set of k-tuples over `{0..n-1}`, stored as a bitset indexed by lexicographic rank.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TupleSet {
    n: usize,
    arity: usize,
    bits: Vec<u64>,
}

impl TupleSet {
    pub fn empty(n: usize, arity: usize) -> Self {
        let size = n.pow(arity as u32);
        TupleSet {
            n,
            arity,
            bits: vec![0; size.div_ceil(64)],
        }
    }

    pub fn full(n: usize, arity: usize) -> Self {
        let mut s = Self::empty(n, arity);
        for i in 0..s.capacity() {
            s.set_index(i, true);
        }
        s
    }

    pub fn from_tuples<T: AsRef<[usize]>>(
        n: usize,
        arity: usize,
        tuples: impl IntoIterator<Item = T>,
    ) -> Result<Self> {
        let mut s = Self::empty(n, arity);
        for t in tuples {
            s.insert(t.as_ref())?;
        }
        Ok(s)
    }

    pub fn domain_size(&self) -> usize {
        self.n
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Number of tuples in `A^arity`.
    pub fn capacity(&self) -> usize {
        self.n.pow(self.arity as u32)
    }

    pub fn words(&self) -> &[u64] {
        &self.bits
    }

    pub fn insert(&mut self, t: &[usize]) -> Result<bool> {
        self.check(t)?;
        let i = tuple_index(self.n, t);
        let was = self.contains_index(i);
        self.set_index(i, true);
        Ok(!was)
    }

    fn check(&self, t: &[usize]) -> Result<()> {
        if t.len() != self.arity {
            return Err(QsoError::Assignment(format!(
                "tuple {t:?} has length {}, expected {}",
                t.len(),
                self.arity
            )));
        }
        if let Some(&a) = t.iter().find(|&&a| a >= self.n) {
            return Err(QsoError::Assignment(format!(
                "element {a} outside domain of size {}",
                self.n
            )));
        }
        Ok(())
    }

    pub fn contains(&self, t: &[usize]) -> bool {
        t.len() == self.arity
            && t.iter().all(|&a| a < self.n)
            && self.contains_index(tuple_index(self.n, t))
    }

    #[inline]
    pub fn contains_index(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set_index(&mut self, i: usize, v: bool) {
        if v {
            self.bits[i / 64] |= 1 << (i % 64);
        } else {
            self.bits[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn clear(&mut self) {
        self.bits.iter_mut().for_each(|w| *w = 0);
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn tuples(&self) -> Vec<Vec<usize>> {
        (0..self.capacity())
            .filter(|&i| self.contains_index(i))
            .map(|i| tuple_at(self.n, self.arity, i))
            .collect()
    }

    /// Moves to the next set in counter order (see [`enumerate_relations`]).
    /// Returns false when wrapping from the full set back to the empty set.
    pub fn advance(&mut self) -> bool {
        for i in (0..self.capacity()).rev() {
            if self.contains_index(i) {
                self.set_index(i, false);
            } else {
                self.set_index(i, true);
                return true;
            }
        }
        false
    }
}

impl fmt::Debug for TupleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.tuples()).finish()
    }
}

/// Iterator over all subsets of `A^k`.
#[derive(Debug)]
pub struct RelationIter {
    current: Option<TupleSet>,
}

impl Iterator for RelationIter {
    type Item = TupleSet;
    fn next(&mut self) -> Option<TupleSet> {
        let cur = self.current.take()?;
        let mut nxt = cur.clone();
        if nxt.advance() {
            self.current = Some(nxt);
        }
        Some(cur)
    }
}

/// Every subset of `A^k`, ordered by its characteristic bitstring over
/// `tuples_lex(n, k)` read as a binary counter (first tuple is the most significant bit).
pub fn enumerate_relations(n: usize, k: usize, config: &Config) -> Result<RelationIter> {
    config.check_subsets(n, k)?;
    Ok(RelationIter {
        current: Some(TupleSet::empty(n, k)),
    })
}

/// A finite ordered structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Structure {
    signature: Signature,
    n: usize,
    relations: Vec<TupleSet>,
}

impl Structure {
    /// Structure with every relation empty.
    pub fn new(signature: Signature, n: usize) -> Self {
        let relations = signature
            .relations()
            .iter()
            .map(|&(_, k)| TupleSet::empty(n, k))
            .collect();
        Structure {
            signature,
            n,
            relations,
        }
    }

    pub fn with_relations<T: AsRef<[usize]>>(
        signature: Signature,
        n: usize,
        rels: impl IntoIterator<Item = (String, Vec<T>)>,
    ) -> Result<Self> {
        let mut s = Structure::new(signature, n);
        for (name, tuples) in rels {
            for t in tuples {
                s.insert(&name, t.as_ref())?;
            }
        }
        Ok(s)
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn domain_size(&self) -> usize {
        self.n
    }

    pub fn relation(&self, name: &str) -> Option<&TupleSet> {
        self.signature.index_of(name).map(|i| &self.relations[i])
    }

    pub fn relation_at(&self, i: usize) -> &TupleSet {
        &self.relations[i]
    }

    pub fn set_relation(&mut self, name: &str, set: TupleSet) -> Result<()> {
        let i = self
            .signature
            .index_of(name)
            .ok_or_else(|| QsoError::Signature(format!("unknown relation `{name}`")))?;
        if set.arity() != self.signature.relations()[i].1 || set.domain_size() != self.n {
            return Err(QsoError::Signature(format!("shape mismatch for `{name}`")));
        }
        self.relations[i] = set;
        Ok(())
    }

    pub fn insert(&mut self, name: &str, t: &[usize]) -> Result<bool> {
        let i = self
            .signature
            .index_of(name)
            .ok_or_else(|| QsoError::Signature(format!("unknown relation `{name}`")))?;
        self.relations[i].insert(t)
    }
}

/// `0^n 1` followed by one bit per tuple of each relation, in declaration order.
pub fn encode_structure(s: &Structure) -> String {
    let mut out = String::with_capacity(s.n + 1);
    out.extend(std::iter::repeat_n('0', s.n));
    out.push('1');
    for r in &s.relations {
        for i in 0..r.capacity() {
            out.push(if r.contains_index(i) { '1' } else { '0' });
        }
    }
    out
}

/// A parsed structure together with non-fatal diagnostics.
#[derive(Debug, Clone)]
pub struct ParsedStructure {
    pub structure: Structure,
    pub warnings: Vec<String>,
}

pub fn parse_structure(text: &str) -> Result<Structure> {
    parse_structure_with_warnings(text).map(|p| p.structure)
}

pub fn parse_structure_with_warnings(text: &str) -> Result<ParsedStructure> {
    let err = |line: usize, msg: String| QsoError::Format { line, msg };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (ln, first) = lines.next().ok_or_else(|| err(1, "missing `domain` line".into()))?;
    let n = match first.split_whitespace().collect::<Vec<_>>()[..] {
        ["domain", v] => v
            .parse::<usize>()
            .map_err(|_| err(ln, format!("bad domain size `{v}`")))?,
        _ => return Err(err(ln, "expected `domain <n>`".into())),
    };

    let mut decls: Vec<(String, usize)> = Vec::new();
    let mut blocks: Vec<Vec<(usize, Vec<usize>)>> = Vec::new();
    let mut open: Option<usize> = None;
    for (ln, line) in lines {
        let words: Vec<&str> = line.split_whitespace().collect();
        if let Some(start) = open {
            if words == ["end"] {
                open = None;
                continue;
            }
            if words.first() == Some(&"relation") {
                return Err(err(start, format!("relation `{}` is missing `end`", decls.last().unwrap().0)));
            }
            let mut t = Vec::with_capacity(words.len());
            for w in &words {
                let a = w
                    .parse::<usize>()
                    .map_err(|_| err(ln, format!("bad element `{w}`")))?;
                if a >= n {
                    return Err(err(ln, format!("element {a} >= domain size {n}")));
                }
                t.push(a);
            }
            let arity = decls.last().unwrap().1;
            if t.len() != arity {
                return Err(err(ln, format!("tuple of length {} for arity {arity}", t.len())));
            }
            blocks.last_mut().unwrap().push((ln, t));
        } else {
            match words[..] {
                ["relation", name, k] => {
                    let k = k
                        .parse::<usize>()
                        .map_err(|_| err(ln, format!("bad arity `{k}`")))?;
                    decls.push((name.to_string(), k));
                    blocks.push(Vec::new());
                    open = Some(ln);
                }
                _ => return Err(err(ln, format!("unexpected line `{line}`"))),
            }
        }
    }
    if let Some(start) = open {
        return Err(err(start, format!("relation `{}` is missing `end`", decls.last().unwrap().0)));
    }

    let signature = Signature::new(decls.clone()).map_err(|e| err(0, e.to_string()))?;
    let mut s = Structure::new(signature, n);
    let mut warnings = Vec::new();
    for ((name, _), block) in decls.iter().zip(blocks) {
        for (ln, t) in block {
            if !s.insert(name, &t)? {
                warnings.push(format!("line {ln}: duplicate tuple {t:?} in `{name}`"));
            }
        }
    }
    Ok(ParsedStructure {
        structure: s,
        warnings,
    })
}

pub fn render_structure(s: &Structure) -> String {
    let mut out = format!("domain {}\n", s.n);
    for ((name, k), r) in s.signature.relations().iter().zip(&s.relations) {
        out.push_str(&format!("relation {name} {k}\n"));
        for t in r.tuples() {
            let parts: Vec<String> = t.iter().map(|a| a.to_string()).collect();
            out.push_str(&parts.join(" "));
            out.push('\n');
        }
        out.push_str("end\n");
    }
    out
}

/// Values for free first-order variables, second-order variables and function symbols.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment {
    pub fo: BTreeMap<String, usize>,
    pub so: BTreeMap<String, TupleSet>,
    pub fns: BTreeMap<String, FunctionTable>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_fo(mut self, name: &str, a: usize) -> Self {
        self.fo.insert(name.to_string(), a);
        self
    }

    pub fn with_so(mut self, name: &str, set: TupleSet) -> Self {
        self.so.insert(name.to_string(), set);
        self
    }

    pub fn with_fn(mut self, table: FunctionTable) -> Self {
        self.fns.insert(table.name().to_string(), table);
        self
    }
}
