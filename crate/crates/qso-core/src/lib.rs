//! Exact evaluation and syntactic transformations for quantitative second-order logic
//! over finite ordered structures.

pub mod ast;
pub mod config;
pub mod error;
pub mod eval;
pub mod fixpoint;
pub mod fragment;
pub mod horn;
pub mod model;
pub mod oracles;
pub mod parser;
pub mod rewrite;

pub use ast::{Agg, BFormula, BKind, BinOp, Binder, FreeVars, QFormula, QKind, SoVar, Span};
pub use config::Config;
pub use error::{QsoError, Result};
pub use eval::{eval, eval_boolean, eval_with, satisfies, Compiled, FreeDecl};
pub use fixpoint::{apply_operator, lsfp_eval, lsfp_table, path_eval, FunctionTable};
pub use fragment::{classify, classify_boolean, BooleanCore, Fragment, Shape};
pub use horn::{
    count_dishorn, count_dishorn_report, horn_sat, parse_dishorn, reduce_to_dishorn,
    reduce_to_dishorn_with, render_dishorn, CountReport, PropDisjHorn, PropOrigin, PropVar,
};
pub use model::{
    encode_structure, enumerate_relations, parse_structure, render_structure, tuples_lex,
    Assignment, Signature, Structure, TupleSet,
};
pub use oracles::{
    oracle_count_assignments, oracle_permanent, oracle_truth_table_count, oracle_walks,
    oracle_weak_orderings, Digraph, Matrix01, Prop,
};
pub use parser::{parse_boolean, parse_formula, parse_formula_with, render_boolean, render_formula, ParseOptions};
pub use rewrite::{
    enumerate_weak_orderings, is_pnf, is_snf, minus_one, minus_one_with, product_to_snf,
    product_to_snf_with, to_pnf, to_pnf_with, to_snf, to_snf_with, WeakOrdering,
};

/// Arbitrary-precision formula values.
pub type Value = num_bigint::BigInt;
