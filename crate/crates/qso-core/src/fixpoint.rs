//! Function tables, least support fixed points and the path operator.

use crate::ast::{BFormula, QFormula};
use crate::config::Config;
use crate::error::{QsoError, Result};
use crate::eval::{Compiled, FreeDecl};
use crate::model::{tuple_index, Assignment, Structure, TupleSet};
use crate::Value;
use num_traits::{Signed, Zero};
use std::fmt;

/// A total map from `A^arity` to non-negative values for one function symbol.
#[derive(Clone, PartialEq, Eq)]
pub struct FunctionTable {
    name: String,
    n: usize,
    arity: usize,
    values: Vec<Value>,
}

impl FunctionTable {
    pub fn zero(name: &str, n: usize, arity: usize) -> Self {
        FunctionTable {
            name: name.to_string(),
            n,
            arity,
            values: vec![Value::zero(); n.pow(arity as u32)],
        }
    }

    /// Table with `values` listed in lexicographic tuple order.
    pub fn new(name: &str, n: usize, arity: usize, values: Vec<Value>) -> Result<Self> {
        let size = n.pow(arity as u32);
        if values.len() != size {
            return Err(QsoError::Assignment(format!(
                "table for `{name}` has {} entries, expected {size}",
                values.len()
            )));
        }
        if values.iter().any(|v| v.is_negative()) {
            return Err(QsoError::Assignment(format!("table for `{name}` has a negative entry")));
        }
        Ok(FunctionTable {
            name: name.to_string(),
            n,
            arity,
            values,
        })
    }

    pub fn from_fn(name: &str, n: usize, arity: usize, f: impl Fn(&[usize]) -> Value) -> Result<Self> {
        let values = crate::model::tuples_lex(n, arity).iter().map(|t| f(t)).collect();
        Self::new(name, n, arity, values)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn domain_size(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn get(&self, t: &[usize]) -> &Value {
        &self.values[tuple_index(self.n, t)]
    }

    #[inline]
    pub fn get_index(&self, i: usize) -> &Value {
        &self.values[i]
    }

    pub fn support(&self) -> SupportSet {
        let mut s = TupleSet::empty(self.n, self.arity);
        for (i, v) in self.values.iter().enumerate() {
            if v.is_positive() {
                s.set_index(i, true);
            }
        }
        SupportSet(s)
    }
}

impl fmt::Debug for FunctionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.name, self.arity)?;
        f.debug_list().entries(self.values.iter().map(|v| v.to_string())).finish()
    }
}

/// The tuples on which a function table is positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSet(pub TupleSet);

impl SupportSet {
    pub fn is_subset(&self, other: &SupportSet) -> bool {
        self.0
            .words()
            .iter()
            .zip(other.0.words())
            .all(|(a, b)| a & !b == 0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tuples(&self) -> Vec<Vec<usize>> {
        self.0.tuples()
    }
}

/// Iterates `f_{i+1} = step(f_i)` from the zero table and stops at the first `k`
/// with `supp(f_k) = supp(step(f_k))`. Returns `f_k` and `k`.
pub(crate) fn least_support_fixed_point(
    name: &str,
    n: usize,
    arity: usize,
    mut step: impl FnMut(&FunctionTable) -> FunctionTable,
) -> (FunctionTable, usize) {
    let bound = n.pow(arity as u32) + 1;
    let mut f = FunctionTable::zero(name, n, arity);
    let mut supp = f.support();
    let mut k = 0;
    loop {
        let g = step(&f);
        let next = g.support();
        assert!(supp.is_subset(&next), "support of `{name}` shrank at iteration {k}");
        if next == supp {
            return (f, k);
        }
        k += 1;
        assert!(k <= bound, "lsfp for `{name}` exceeded {bound} iterations");
        f = g;
        supp = next;
    }
}

/// Number of walks of length `1..=maxlen` from `s` to `t`.
pub(crate) fn count_walks(succ: &[Vec<usize>], s: usize, t: usize, maxlen: usize) -> Value {
    let mut cur = vec![Value::zero(); succ.len()];
    cur[s] = Value::from(1);
    let mut total = Value::zero();
    for _ in 0..maxlen {
        let mut next = vec![Value::zero(); succ.len()];
        for (u, c) in cur.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for &w in &succ[u] {
                next[w] += c;
            }
        }
        total += &next[t];
        if next.iter().all(|v| v.is_zero()) {
            break;
        }
        cur = next;
    }
    total
}

fn operator_decl(xs: &[String], h: &str) -> FreeDecl {
    FreeDecl {
        fo: xs.to_vec(),
        so: Vec::new(),
        fns: vec![(h.to_string(), xs.len())],
    }
}

fn check_operator_body(beta: &QFormula, xs: &[String], h: &str) -> Result<()> {
    let fv = beta.free_variables();
    if let Some(g) = fv.fns.iter().find(|g| *g != h) {
        return Err(QsoError::Invalid(format!(
            "operator body mentions a second function symbol `{g}`"
        )));
    }
    if let Some(x) = fv.fo.iter().find(|x| !xs.contains(x)) {
        return Err(QsoError::Unbound {
            kind: "variable",
            name: x.clone(),
        });
    }
    Ok(())
}

/// `T_β(f)`: the table of `β` with `x̄ = ā` and `h = f`, for every `ā`.
pub fn apply_operator(
    s: &Structure,
    beta: &QFormula,
    xs: &[String],
    h: &str,
    f: &FunctionTable,
    cfg: &Config,
) -> Result<FunctionTable> {
    check_operator_body(beta, xs, h)?;
    if f.arity() != xs.len() || f.domain_size() != s.domain_size() {
        return Err(QsoError::Assignment(format!("table for `{h}` has the wrong shape")));
    }
    let prog = Compiled::new(beta, s.signature(), &operator_decl(xs, h), cfg)?;
    let n = s.domain_size();
    let mut f = f.clone();
    f.name = h.to_string();
    let mut values = Vec::with_capacity(n.pow(xs.len() as u32));
    for t in crate::model::tuples_lex(n, xs.len()) {
        let mut a = Assignment::new().with_fn(f.clone());
        for (x, &v) in xs.iter().zip(&t) {
            a.fo.insert(x.clone(), v);
        }
        values.push(prog.run(s, &a, cfg)?);
    }
    FunctionTable::new(h, n, xs.len(), values)
}

/// The least support fixed point of `T_β` and the step `k` at which it was reached.
pub fn lsfp_table(
    s: &Structure,
    beta: &QFormula,
    xs: &[String],
    h: &str,
    cfg: &Config,
) -> Result<(FunctionTable, usize)> {
    check_operator_body(beta, xs, h)?;
    let n = s.domain_size();
    let size = n.pow(xs.len() as u32);
    if size > cfg.table_limit {
        return Err(QsoError::Budget(format!(
            "lsfp table of {size} entries exceeds the limit of {}",
            cfg.table_limit
        )));
    }
    let prog = Compiled::new(beta, s.signature(), &operator_decl(xs, h), cfg)?;
    let tuples = crate::model::tuples_lex(n, xs.len());
    let mut err = None;
    let out = least_support_fixed_point(h, n, xs.len(), |f| {
        let mut values = Vec::with_capacity(size);
        for t in &tuples {
            let mut a = Assignment::new().with_fn(f.clone());
            for (x, &v) in xs.iter().zip(t) {
                a.fo.insert(x.clone(), v);
            }
            match prog.run(s, &a, cfg) {
                Ok(v) => values.push(v),
                Err(e) => {
                    err.get_or_insert(e);
                    values.push(Value::zero());
                }
            }
        }
        FunctionTable {
            name: h.to_string(),
            n,
            arity: xs.len(),
            values,
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// `⟦[lsfp β(x̄,h)]⟧(S, v)`.
pub fn lsfp_eval(
    s: &Structure,
    beta: &QFormula,
    xs: &[String],
    h: &str,
    v: &Assignment,
    cfg: &Config,
) -> Result<Value> {
    let vars: Vec<&str> = xs.iter().map(|x| x.as_str()).collect();
    crate::eval::eval_with(s, &QFormula::lsfp(h, &vars, beta.clone()), v, cfg)
}

/// Walks of length `1..=n^k` from `v(x̄)` to `v(ȳ)` in the graph defined by `ψ`.
pub fn path_eval(
    s: &Structure,
    psi: &BFormula,
    xs: &[String],
    ys: &[String],
    v: &Assignment,
    cfg: &Config,
) -> Result<Value> {
    let xs: Vec<&str> = xs.iter().map(|x| x.as_str()).collect();
    let ys: Vec<&str> = ys.iter().map(|x| x.as_str()).collect();
    crate::eval::eval_with(s, &QFormula::path(&xs, &ys, psi.clone()), v, cfg)
}
