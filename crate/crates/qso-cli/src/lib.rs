//! Command-line front end. [`run`] takes the argument vector and returns the exit code
//! together with the text written to stdout and stderr.

use clap::{Args, Parser, Subcommand, ValueEnum};
use qso_core::oracles::{oracle_count_assignments, oracle_permanent, oracle_truth_table_count, oracle_walks};
use qso_core::rewrite::pnf_summand;
use qso_core::{
    classify, count_dishorn, encode_structure, eval_with, minus_one_with, parse_dishorn,
    parse_formula_with, product_to_snf_with, reduce_to_dishorn_with, render_dishorn, render_formula,
    to_pnf_with, to_snf_with, Assignment, BKind, BooleanCore, Config, Digraph, Matrix01, ParseOptions, Prop,
    QFormula, QKind, QsoError, Signature, SoVar, Structure, TupleSet, Value,
};
use std::fmt::Write as _;
use std::path::Path;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "qso", version, about = "Evaluate and transform quantitative second-order formulas")]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// Maximum subsets per second-order quantifier (overrides QSO_BUDGET).
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Maximum number of disjuncts or summands produced by a rewrite.
    #[arg(long, global = true)]
    dnf_limit: Option<usize>,
    /// Maximum number of variables in a weak-ordering expansion.
    #[arg(long, global = true)]
    weak_order_limit: Option<usize>,
    /// Accept negative constants.
    #[arg(long, global = true)]
    integers: bool,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn config(&self) -> Config {
        let mut c = Config::from_env();
        if let Some(b) = self.budget {
            c.subset_budget = b;
        }
        if let Some(d) = self.dnf_limit {
            c.dnf_limit = d;
        }
        if let Some(w) = self.weak_order_limit {
            c.weak_order_limit = w;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        c.integers |= self.integers;
        c
    }
}

#[derive(Args, Debug)]
struct FormulaArg {
    /// Formula text, or a path to a file holding it.
    #[arg(short = 'f', long = "formula")]
    formula: String,
    /// Relation signature such as `E:2,P:1`, when no structure is given.
    #[arg(long)]
    sig: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the value of a formula on a structure.
    Eval {
        #[arg(short = 's', long = "structure")]
        structure: String,
        #[arg(short = 'f', long = "formula")]
        formula: String,
        /// Free variable values: `x=0,y=2` or `X={(0),(1)}`.
        #[arg(long)]
        assign: Option<String>,
    },
    /// Print the fragment a formula belongs to.
    Classify {
        #[command(flatten)]
        f: FormulaArg,
    },
    /// Print a rewritten formula.
    Rewrite {
        #[arg(long, value_enum)]
        form: Form,
        #[command(flatten)]
        f: FormulaArg,
        /// Second factor for `--form times`.
        #[arg(short = 'g')]
        g: Option<String>,
        /// Matrix fragment for `--form pnf`: pi1, sigma2, pi2 or fo.
        #[arg(long)]
        target: Option<String>,
    },
    /// Ground a ΣQSO(∃Horn) sentence into a DisjHorn file.
    ReduceHorn {
        #[arg(short = 's', long = "structure")]
        structure: String,
        #[arg(short = 'f', long = "formula")]
        formula: String,
    },
    /// Count the models of a DisjHorn file.
    CountDishorn { file: String },
    /// Print the bit encoding of a structure.
    Encode {
        #[arg(short = 's', long = "structure")]
        structure: String,
    },
    /// Compare the evaluator against a brute-force oracle.
    Verify {
        #[arg(short = 's', long = "structure")]
        structure: String,
        #[arg(short = 'f', long = "formula")]
        formula: String,
        #[arg(long, value_enum)]
        oracle: OracleName,
        #[arg(long)]
        assign: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Form {
    Snf,
    Pnf,
    MinusOne,
    Times,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OracleName {
    /// Count satisfying assignments of the matrix of `ΣX̄ Σx̄ φ`.
    Assignments,
    /// Permanent of the matrix stored in relation `M`.
    Permanent,
    /// Walks in the graph of a `path` formula, with endpoints from `--assign`.
    Walks,
    /// Truth-table count of the grounded DisjHorn instance.
    TruthTable,
}

/// Output of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

enum Failure {
    Core(QsoError, Option<String>),
    Usage(String),
    Check(String),
}

impl From<QsoError> for Failure {
    fn from(e: QsoError) -> Self {
        Failure::Core(e, None)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => Outcome {
                    code: EXIT_OK,
                    stdout: text,
                    stderr: String::new(),
                },
                _ => Outcome {
                    code: EXIT_USER,
                    stdout: String::new(),
                    stderr: text,
                },
            };
        }
    };
    let cfg = cli.config.config();
    let mut out = String::new();
    let mut err = String::new();
    let code = match dispatch(&cli.command, &cfg, &mut out, &mut err) {
        Ok(()) => EXIT_OK,
        Err(Failure::Check(msg)) => {
            let _ = writeln!(err, "{msg}");
            EXIT_USER
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USER
        }
        Err(Failure::Core(e, source)) => {
            let _ = writeln!(err, "error: {e}");
            if let (Some(span), Some(src)) = (e.span(), source) {
                err.push_str(&caret(&src, span.start, span.end));
            }
            if e.is_budget() {
                EXIT_BUDGET
            } else {
                EXIT_USER
            }
        }
    };
    Outcome {
        code,
        stdout: out,
        stderr: err,
    }
}

fn caret(src: &str, start: usize, end: usize) -> String {
    let start = start.min(src.len());
    let line_start = src[..start].rfind('\n').map_or(0, |i| i + 1);
    let line_end = src[start..].find('\n').map_or(src.len(), |i| start + i);
    let line = &src[line_start..line_end];
    let col = src[line_start..start].chars().count();
    let width = src[start..end.clamp(start, line_end)].chars().count().max(1);
    format!("  {line}\n  {}{}\n", " ".repeat(col), "^".repeat(width))
}

fn read_text(arg: &str) -> CliResult<String> {
    if Path::new(arg).is_file() {
        std::fs::read_to_string(arg).map_err(|e| Failure::Usage(format!("cannot read `{arg}`: {e}")))
    } else {
        Ok(arg.to_string())
    }
}

fn read_file(path: &str) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read `{path}`: {e}")))
}

/// Formula text with `#` comment lines blanked, keeping byte offsets intact.
fn strip_comments(text: &str) -> String {
    text.split_inclusive('\n')
        .map(|l| {
            if l.trim_start().starts_with('#') {
                l.chars().map(|c| if c == '\n' { '\n' } else { ' ' }).collect()
            } else {
                l.to_string()
            }
        })
        .collect()
}

fn load_structure(arg: &str, err: &mut String) -> CliResult<Structure> {
    let text = read_file(arg)?;
    let parsed = qso_core::model::parse_structure_with_warnings(&text)?;
    for w in parsed.warnings {
        let _ = writeln!(err, "# warning: {w}");
    }
    Ok(parsed.structure)
}

fn parse_sig(text: &str) -> CliResult<Signature> {
    let mut rels = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, k) = part
            .split_once(':')
            .ok_or_else(|| Failure::Usage(format!("expected `NAME:ARITY`, found `{part}`")))?;
        let k: usize = k
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("bad arity in `{part}`")))?;
        rels.push((name.trim().to_string(), k));
    }
    Ok(Signature::new(rels)?)
}

fn options(cfg: &Config, free_so: Vec<SoVar>) -> ParseOptions {
    ParseOptions {
        integers: cfg.integers,
        free_so,
        ..Default::default()
    }
}

fn parse_in(text: &str, sig: &Signature, opts: &ParseOptions) -> CliResult<QFormula> {
    parse_formula_with(text, sig, opts).map_err(|e| Failure::Core(e, Some(text.to_string())))
}

/// Parses with the relations the formula itself uses, reading each unknown
/// relation's arity off its first occurrence.
fn parse_inferred(text: &str, base: Signature, opts: &ParseOptions) -> CliResult<(QFormula, Signature)> {
    let mut rels: Vec<(String, usize)> = base.relations().to_vec();
    loop {
        let sig = Signature::new(rels.clone())?;
        match parse_formula_with(text, &sig, opts) {
            Ok(f) => return Ok((f, sig)),
            Err(QsoError::UnknownRelation { name, span }) if !rels.iter().any(|(r, _)| *r == name) => {
                let atom = &text[span.start.min(text.len())..span.end.min(text.len())];
                let inner = atom
                    .split_once('(')
                    .and_then(|(_, r)| r.rsplit_once(')'))
                    .map_or("", |(a, _)| a);
                let k = if inner.trim().is_empty() {
                    0
                } else {
                    inner.split(',').count()
                };
                rels.push((name, k));
            }
            Err(e) => return Err(Failure::Core(e, Some(text.to_string()))),
        }
    }
}

fn formula_for_sig(f: &FormulaArg, cfg: &Config) -> CliResult<(QFormula, Signature)> {
    let text = strip_comments(&read_text(&f.formula)?);
    match &f.sig {
        Some(s) => {
            let sig = parse_sig(s)?;
            Ok((parse_in(&text, &sig, &options(cfg, Vec::new()))?, sig))
        }
        None => parse_inferred(&text, Signature::empty(), &options(cfg, Vec::new())),
    }
}

/// Splits on commas outside braces and parentheses.
fn split_top(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '{' => depth += 1,
            ')' | '}' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts.into_iter().map(str::trim).filter(|p| !p.is_empty()).collect()
}

/// Parses `x=0`, `X={(0,1),(1,1)}` and `X:2={}` items.
fn parse_assign(text: Option<&str>, n: usize) -> CliResult<Assignment> {
    let mut a = Assignment::new();
    let Some(text) = text else {
        return Ok(a);
    };
    for item in split_top(text) {
        let (lhs, rhs) = item
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("expected `name=value`, found `{item}`")))?;
        let (lhs, rhs) = (lhs.trim(), rhs.trim());
        if let Some(body) = rhs.strip_prefix('{').and_then(|r| r.strip_suffix('}')) {
            let (name, declared) = match lhs.split_once(':') {
                Some((nm, k)) => (
                    nm.trim(),
                    Some(k.trim().parse::<usize>().map_err(|_| Failure::Usage(format!("bad arity in `{lhs}`")))?),
                ),
                None => (lhs, None),
            };
            let mut tuples = Vec::new();
            for t in split_top(body) {
                let inner = t
                    .strip_prefix('(')
                    .and_then(|r| r.strip_suffix(')'))
                    .unwrap_or(t);
                let tuple = inner
                    .split(',')
                    .map(str::trim)
                    .filter(|e| !e.is_empty())
                    .map(|e| e.parse::<usize>().map_err(|_| Failure::Usage(format!("bad element `{e}`"))))
                    .collect::<CliResult<Vec<usize>>>()?;
                tuples.push(tuple);
            }
            let arity = declared
                .or_else(|| tuples.first().map(Vec::len))
                .ok_or_else(|| Failure::Usage(format!("give the arity of empty relation `{name}` as `{name}:k={{}}`")))?;
            if let Some(t) = tuples.iter().find(|t| t.len() != arity) {
                return Err(Failure::Usage(format!("tuple {t:?} does not have arity {arity}")));
            }
            a = a.with_so(name, TupleSet::from_tuples(n, arity, &tuples)?);
        } else {
            let v: usize = rhs
                .parse()
                .map_err(|_| Failure::Usage(format!("bad element `{rhs}` for `{lhs}`")))?;
            if v >= n {
                return Err(Failure::Usage(format!("element {v} >= domain size {n}")));
            }
            a = a.with_fo(lhs, v);
        }
    }
    Ok(a)
}

fn formula_on(s: &Structure, arg: &str, a: &Assignment, cfg: &Config) -> CliResult<QFormula> {
    let text = strip_comments(&read_text(arg)?);
    let free_so = a.so.iter().map(|(k, v)| SoVar::new(k.clone(), v.arity())).collect();
    parse_in(&text, s.signature(), &options(cfg, free_so))
}

fn dispatch(cmd: &Command, cfg: &Config, out: &mut String, err: &mut String) -> CliResult<()> {
    match cmd {
        Command::Eval {
            structure,
            formula,
            assign,
        } => {
            let s = load_structure(structure, err)?;
            let a = parse_assign(assign.as_deref(), s.domain_size())?;
            let f = formula_on(&s, formula, &a, cfg)?;
            let v = eval_with(&s, &f, &a, cfg)?;
            let _ = writeln!(out, "{v}");
        }
        Command::Classify { f } => {
            let (f, _) = formula_for_sig(f, cfg)?;
            let _ = writeln!(out, "{}", classify(&f));
        }
        Command::Rewrite { form, f, g, target } => {
            let (fa, sig) = formula_for_sig(f, cfg)?;
            let result = match form {
                Form::Snf => to_snf_with(&fa, cfg)?,
                Form::MinusOne => minus_one_with(&fa, cfg)?,
                Form::Pnf => {
                    let target = match target {
                        Some(t) => BooleanCore::from_name(t)
                            .ok_or_else(|| Failure::Usage(format!("unknown fragment `{t}`")))?,
                        None => pnf_target(&fa),
                    };
                    to_pnf_with(&fa, target, cfg)?
                }
                Form::Times => {
                    let g = g
                        .as_deref()
                        .ok_or_else(|| Failure::Usage("`--form times` needs `-g <formula>`".into()))?;
                    let text = strip_comments(&read_text(g)?);
                    let (gb, _) = parse_inferred(&text, sig, &options(cfg, Vec::new()))?;
                    product_to_snf_with(&fa, &gb, cfg)?
                }
            };
            let _ = writeln!(out, "{}", render_formula(&result));
        }
        Command::ReduceHorn { structure, formula } => {
            let s = load_structure(structure, err)?;
            let f = formula_on(&s, formula, &Assignment::new(), cfg)?;
            out.push_str(&render_dishorn(&reduce_to_dishorn_with(&f, &s, cfg)?));
        }
        Command::CountDishorn { file } => {
            let p = parse_dishorn(&read_file(file)?)?;
            let _ = writeln!(out, "{}", count_dishorn(&p)?);
        }
        Command::Encode { structure } => {
            let s = load_structure(structure, err)?;
            let _ = writeln!(out, "{}", encode_structure(&s));
        }
        Command::Verify {
            structure,
            formula,
            oracle,
            assign,
        } => {
            let s = load_structure(structure, err)?;
            let a = parse_assign(assign.as_deref(), s.domain_size())?;
            let f = formula_on(&s, formula, &a, cfg)?;
            let got = eval_with(&s, &f, &a, cfg)?;
            let want = match run_oracle(*oracle, &s, &f, &a, cfg) {
                Err(Failure::Check(msg)) => {
                    let _ = writeln!(out, "FAIL");
                    return Err(Failure::Check(msg));
                }
                r => r?,
            };
            let _ = writeln!(out, "# evaluator: {got}");
            let _ = writeln!(out, "# oracle: {want}");
            if got == want {
                let _ = writeln!(out, "PASS");
            } else {
                let _ = writeln!(out, "FAIL");
                return Err(Failure::Check(format!("evaluator gives {got}, oracle gives {want}")));
            }
        }
    }
    Ok(())
}

/// The smallest PNF target containing every leaf of `f`.
fn pnf_target(f: &QFormula) -> BooleanCore {
    let order = [BooleanCore::Pi1, BooleanCore::Sigma2, BooleanCore::Pi2];
    order
        .into_iter()
        .find(|&c| qso_core::fragment::leaves_within(f, c))
        .unwrap_or(BooleanCore::FO)
}

fn run_oracle(which: OracleName, s: &Structure, f: &QFormula, a: &Assignment, cfg: &Config) -> CliResult<Value> {
    match which {
        OracleName::Assignments => {
            if !a.fo.is_empty() || !a.so.is_empty() {
                return Err(Failure::Usage("the assignments oracle takes a sentence".into()));
            }
            let p = pnf_summand(f)
                .ok_or_else(|| Failure::Usage("the assignments oracle needs a formula `sum X̄. sum x̄. φ`".into()))?;
            Ok(oracle_count_assignments(s, &p.matrix, &p.so_vars, &p.fo_vars, cfg)?)
        }
        OracleName::Permanent => {
            let m = s
                .relation("M")
                .filter(|r| r.arity() == 2)
                .ok_or_else(|| Failure::Usage("the permanent oracle needs a binary relation `M`".into()))?;
            let n = s.domain_size();
            let cells = (0..n * n).map(|k| m.contains(&[k / n, k % n])).collect();
            Ok(oracle_permanent(&Matrix01::new(n, cells)?)?)
        }
        OracleName::Walks => {
            let QKind::Path { xs, ys, body } = &f.kind else {
                return Err(Failure::Usage("the walks oracle needs a `path (x̄ ; ȳ) { ψ }` formula".into()));
            };
            let edge = match &body.kind {
                BKind::Rel(r, args) if xs.len() == 1 && args == &[xs[0].clone(), ys[0].clone()] => r.clone(),
                _ => {
                    return Err(Failure::Usage(
                        "the walks oracle needs ψ to be a binary relation atom R(x,y)".into(),
                    ))
                }
            };
            let get = |x: &str| {
                a.fo.get(x)
                    .copied()
                    .ok_or_else(|| Failure::Usage(format!("assign the endpoint `{x}` with --assign")))
            };
            let g = Digraph::from_structure(s, &edge)?;
            Ok(oracle_walks(&g, get(&xs[0])?, get(&ys[0])?, s.domain_size())?)
        }
        OracleName::TruthTable => {
            let p = reduce_to_dishorn_with(f, s, cfg)?;
            let count = count_dishorn(&p)?;
            let table = oracle_truth_table_count(p.vars, &Prop::from(&p))?;
            if count != table {
                return Err(Failure::Check(format!("counter gives {count}, truth table gives {table}")));
            }
            Ok(table)
        }
    }
}
