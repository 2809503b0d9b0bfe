//! Syntactic fragment classification.

use crate::ast::{Agg, BFormula, BKind, Binder, QFormula, QKind};
use crate::horn;
use std::fmt;

/// Boolean fragments, listed in the order classification tries them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BooleanCore {
    Sigma0,
    Sigma1,
    Pi1,
    Sigma1Ext,
    Horn,
    ExistsHorn,
    Sigma2,
    Pi2,
    FO,
    SO,
}

impl BooleanCore {
    pub const ALL: [BooleanCore; 10] = [
        BooleanCore::Sigma0,
        BooleanCore::Sigma1,
        BooleanCore::Pi1,
        BooleanCore::Sigma1Ext,
        BooleanCore::Horn,
        BooleanCore::ExistsHorn,
        BooleanCore::Sigma2,
        BooleanCore::Pi2,
        BooleanCore::FO,
        BooleanCore::SO,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BooleanCore::Sigma0 => "Sigma0",
            BooleanCore::Sigma1 => "Sigma1",
            BooleanCore::Pi1 => "Pi1",
            BooleanCore::Sigma1Ext => "Sigma1[FO]",
            BooleanCore::Horn => "Horn",
            BooleanCore::ExistsHorn => "ExistsHorn",
            BooleanCore::Sigma2 => "Sigma2",
            BooleanCore::Pi2 => "Pi2",
            BooleanCore::FO => "FO",
            BooleanCore::SO => "SO",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        let s = s.to_ascii_lowercase();
        Self::ALL.into_iter().find(|c| {
            c.name().to_ascii_lowercase() == s
                || matches!(
                    (c, s.as_str()),
                    (BooleanCore::Sigma1Ext, "sigma1ext" | "sigma1-ext")
                        | (BooleanCore::ExistsHorn, "ehorn" | "exists-horn")
                )
        })
    }

    /// Syntactic containment between fragments.
    pub fn within(self, other: BooleanCore) -> bool {
        use BooleanCore::*;
        if self == other || other == SO {
            return true;
        }
        match self {
            Sigma0 => matches!(other, Sigma1 | Pi1 | Sigma1Ext | Sigma2 | Pi2 | FO),
            Sigma1 => matches!(other, Sigma1Ext | Sigma2 | Pi2 | FO),
            Pi1 => matches!(other, Sigma2 | Pi2 | FO),
            Sigma1Ext | Sigma2 | Pi2 => other == FO,
            Horn => matches!(other, ExistsHorn | FO),
            ExistsHorn => other == FO,
            FO | SO => false,
        }
    }
}

impl fmt::Display for BooleanCore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    QFO,
    SigmaQSO,
    QSO,
    MaxQSO,
    MinQSO,
    OptQSO,
    RQFO,
    TQFO,
    FQSO,
}

impl Shape {
    pub fn name(self) -> &'static str {
        match self {
            Shape::QFO => "QFO",
            Shape::SigmaQSO => "SigmaQSO",
            Shape::QSO => "QSO",
            Shape::MaxQSO => "MaxQSO",
            Shape::MinQSO => "MinQSO",
            Shape::OptQSO => "OptQSO",
            Shape::RQFO => "RQFO",
            Shape::TQFO => "TQFO",
            Shape::FQSO => "FQSO",
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fragment {
    pub boolean_core: BooleanCore,
    pub quantitative_shape: Shape,
    pub uses_integers: bool,
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.quantitative_shape, self.boolean_core)?;
        if self.uses_integers {
            f.write_str(" over Z")?;
        }
        Ok(())
    }
}

#[derive(Default)]
struct Flags {
    so_sum: bool,
    so_prod: bool,
    fo_prod: bool,
    max: bool,
    min: bool,
    lsfp: bool,
    path: bool,
    free_fn: bool,
}

fn scan(f: &QFormula, bound_fns: &mut Vec<String>, fl: &mut Flags) {
    match &f.kind {
        QKind::Agg(op, b, _) => {
            let so = matches!(b, Binder::So(_));
            match op {
                Agg::Sum if so => fl.so_sum = true,
                Agg::Prod if so => fl.so_prod = true,
                Agg::Prod => fl.fo_prod = true,
                Agg::Max => fl.max = true,
                Agg::Min => fl.min = true,
                Agg::Sum => {}
            }
        }
        QKind::Bin(crate::BinOp::Max, ..) => fl.max = true,
        QKind::Bin(crate::BinOp::Min, ..) => fl.min = true,
        QKind::Fn(h, _) if !bound_fns.contains(h) => fl.free_fn = true,
        QKind::Lsfp { func, body, .. } => {
            fl.lsfp = true;
            bound_fns.push(func.clone());
            scan(body, bound_fns, fl);
            bound_fns.pop();
            return;
        }
        QKind::Path { .. } => fl.path = true,
        _ => {}
    }
    for c in f.children() {
        scan(c, bound_fns, fl);
    }
}

fn shape(f: &QFormula) -> Shape {
    let mut fl = Flags::default();
    scan(f, &mut Vec::new(), &mut fl);
    let so = fl.so_sum || fl.so_prod;
    if fl.max || fl.min {
        if so || (fl.max && fl.min) || fl.lsfp || fl.path || fl.free_fn {
            Shape::OptQSO
        } else if fl.max {
            Shape::MaxQSO
        } else {
            Shape::MinQSO
        }
    } else if fl.lsfp || fl.free_fn {
        if so || fl.free_fn {
            Shape::FQSO
        } else {
            Shape::RQFO
        }
    } else if fl.path {
        if so {
            Shape::FQSO
        } else {
            Shape::TQFO
        }
    } else if !so {
        Shape::QFO
    } else if !fl.so_prod && !fl.fo_prod {
        Shape::SigmaQSO
    } else {
        Shape::QSO
    }
}

/// True when `α` only uses `+`, `*`, constants, Boolean leaves and sum quantifiers.
pub fn is_sigma_qso(f: &QFormula) -> bool {
    match &f.kind {
        QKind::Bool(_) | QKind::Const(_) => true,
        QKind::Bin(crate::BinOp::Add | crate::BinOp::Mul, a, b) => is_sigma_qso(a) && is_sigma_qso(b),
        QKind::Agg(Agg::Sum, _, a) => is_sigma_qso(a),
        QKind::Cond(_, a) => is_sigma_qso(a),
        _ => false,
    }
}

/// Least quantifier-alternation levels `(σ, π)`: the formula is equivalent by
/// prenexing to a Σσ and to a Ππ formula. `None` when a second-order quantifier occurs.
/// With `opaque_fo`, every subformula without second-order symbols counts as an atom.
fn levels(f: &BFormula, opaque_fo: bool) -> Option<(u32, u32)> {
    if opaque_fo && f.is_so_free() {
        return Some((0, 0));
    }
    match &f.kind {
        BKind::True | BKind::Eq(..) | BKind::Less(..) | BKind::Rel(..) | BKind::SoAtom(..) => {
            Some((0, 0))
        }
        BKind::Not(a) => levels(a, opaque_fo).map(|(s, p)| (p, s)),
        BKind::Or(a, b) | BKind::And(a, b) => {
            let (s1, p1) = levels(a, opaque_fo)?;
            let (s2, p2) = levels(b, opaque_fo)?;
            Some((s1.max(s2), p1.max(p2)))
        }
        BKind::Implies(a, b) => {
            let (s1, p1) = levels(a, opaque_fo)?;
            let (s2, p2) = levels(b, opaque_fo)?;
            Some((p1.max(s2), s1.max(p2)))
        }
        BKind::Exists(Binder::Fo(_), a) => {
            let (s, p) = levels(a, opaque_fo)?;
            let s = 1.max(s.min(p + 1));
            Some((s, s + 1))
        }
        BKind::Forall(Binder::Fo(_), a) => {
            let (s, p) = levels(a, opaque_fo)?;
            let p = 1.max(p.min(s + 1));
            Some((p + 1, p))
        }
        BKind::Exists(Binder::So(_), _) | BKind::Forall(Binder::So(_), _) => None,
    }
}

/// Membership of a Boolean formula in one fragment.
pub fn boolean_member(f: &BFormula, class: BooleanCore) -> bool {
    use BooleanCore::*;
    let lv = || levels(f, false);
    match class {
        Sigma0 => lv() == Some((0, 0)),
        Sigma1 => matches!(lv(), Some((s, _)) if s <= 1),
        Pi1 => matches!(lv(), Some((_, p)) if p <= 1),
        Sigma2 => matches!(lv(), Some((s, _)) if s <= 2),
        Pi2 => matches!(lv(), Some((_, p)) if p <= 2),
        Sigma1Ext => matches!(levels(f, true), Some((s, _)) if s <= 1),
        Horn => horn::horn_diagnosis(f, false).is_none(),
        ExistsHorn => horn::horn_diagnosis(f, true).is_none(),
        FO => f.is_first_order(),
        SO => true,
    }
}

/// Least Boolean fragment containing `f`.
pub fn classify_boolean(f: &BFormula) -> BooleanCore {
    BooleanCore::ALL
        .into_iter()
        .find(|&c| boolean_member(f, c))
        .unwrap_or(BooleanCore::SO)
}

/// Least fragment containing every Boolean leaf of `α`.
pub fn classify(f: &QFormula) -> Fragment {
    let leaves = f.boolean_leaves();
    let boolean_core = BooleanCore::ALL
        .into_iter()
        .find(|&c| leaves.iter().all(|l| boolean_member(l, c)))
        .unwrap_or(BooleanCore::SO);
    Fragment {
        boolean_core,
        quantitative_shape: shape(f),
        uses_integers: f.uses_negative_constants(),
    }
}

/// True when every Boolean leaf of `α` is in `class`.
pub fn leaves_within(f: &QFormula, class: BooleanCore) -> bool {
    f.boolean_leaves().iter().all(|l| boolean_member(l, class))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Signature;
    use crate::parser::{parse_boolean, parse_formula, ParseOptions};
    use crate::SoVar;

    fn sig() -> Signature {
        Signature::new([("E", 2)]).unwrap()
    }

    fn open_b(text: &str, so: &[(&str, usize)]) -> BFormula {
        let opts = ParseOptions {
            free_so: so.iter().map(|&(n, k)| SoVar::new(n, k)).collect(),
            ..Default::default()
        };
        parse_boolean(text, &sig(), &opts).unwrap()
    }

    #[test]
    fn worked_examples() {
        let a1 = parse_formula(
            "sum x. sum y. sum z. (E(x,y) & E(y,z) & E(z,x) & x < y & y < z)",
            &sig(),
        )
        .unwrap();
        let c = classify(&a1);
        assert_eq!(c.quantitative_shape, Shape::QFO);
        assert_eq!(c.boolean_core, BooleanCore::Sigma0);

        let a2 = parse_formula(
            "sum X:1. forall x. forall y. ((X(x) & X(y) & !(x = y)) -> E(x,y))",
            &sig(),
        )
        .unwrap();
        let c = classify(&a2);
        assert_eq!(c.quantitative_shape, Shape::SigmaQSO);
        assert_eq!(c.boolean_core, BooleanCore::Pi1);

        let c = classify(&parse_formula("prod X:1. 1", &sig()).unwrap());
        assert_eq!(c.quantitative_shape, Shape::QSO);
    }

    #[test]
    fn shapes() {
        let s = |t: &str| classify(&parse_formula(t, &sig()).unwrap()).quantitative_shape;
        assert_eq!(s("max X:1. (forall x. X(x)) * sum z. X(z)"), Shape::MaxQSO);
        assert_eq!(s("min x. E(x,x)"), Shape::MinQSO);
        assert_eq!(s("max(min x. 1, max y. 1)"), Shape::OptQSO);
        assert_eq!(s("max X:1. sum Y:1. 1"), Shape::OptQSO);
        assert_eq!(s("sum x. sum y. lsfp f:2 (x,y). E(x,y) + sum z. f(x,z) * E(z,y)"), Shape::RQFO);
        assert_eq!(s("sum x. sum y. path (x ; y) { E(x,y) }"), Shape::TQFO);
        assert_eq!(s("prod x. 2"), Shape::QFO);
        assert_eq!(s("sum X:1. sum x. X(x) * 2"), Shape::SigmaQSO);
        assert_eq!(s("sum X:1. prod x. 2"), Shape::QSO);
    }

    #[test]
    fn alternation_levels() {
        let so = &[("X", 1)];
        let c = |t: &str| classify_boolean(&open_b(t, so));
        assert_eq!(c("X(x) | E(x,x)"), BooleanCore::Sigma0);
        assert_eq!(c("exists x. X(x)"), BooleanCore::Sigma1);
        assert_eq!(c("!exists x. X(x)"), BooleanCore::Pi1);
        assert_eq!(c("exists x. X(x) & forall y. E(x,y)"), BooleanCore::Sigma1Ext);
        assert_eq!(c("exists x. forall y. (X(x) | X(y))"), BooleanCore::Sigma2);
        assert_eq!(c("forall x. exists y. (X(y) & E(x,y))"), BooleanCore::Pi2);
        assert_eq!(c("exists x. forall y. exists z. (X(z) & E(x,y))"), BooleanCore::FO);
        assert_eq!(c("exists Y:1. forall x. Y(x)"), BooleanCore::SO);
        assert!(boolean_member(&open_b("exists x. X(x)", so), BooleanCore::FO));
        assert!(boolean_member(&open_b("exists x. X(x)", so), BooleanCore::Sigma2));
        assert!(boolean_member(&open_b("X(x)", so), BooleanCore::Pi1));
    }

    #[test]
    fn containment_is_monotone() {
        for a in BooleanCore::ALL {
            assert!(a.within(a));
            assert!(a.within(BooleanCore::SO));
            for b in BooleanCore::ALL {
                for c in BooleanCore::ALL {
                    if a.within(b) && b.within(c) {
                        assert!(a.within(c), "{a} {b} {c}");
                    }
                }
            }
        }
    }
}
