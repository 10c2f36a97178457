//! The `cql` command line.

use std::ffi::OsString;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::builtins::builtin;
use crate::coquantale::CoQuantale;
use crate::elementary::{elementary_upto, tarski_vaught_upto};
use crate::enumerate::enumerate_formulas;
use crate::formula::{parse_formula, print_formula, Language, Modulus, Signature};
use crate::laws::{check_lattice_laws, check_residuation_laws, check_value_laws, Sampling};
use crate::report::Report;
use crate::semantics::{Condition, LStructure, Theory};
use crate::space::ContinuitySpace;
use crate::text::{write_structure, Workspace};
use crate::ultra::{compactness_build, d_product_structure, los_check, los_check_pool, PrincipalUltrafilter};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "cql", version, about = "Checks lattice-valued continuous logic on finite carriers")]
struct Cli {
    /// Emit one tab-separated record per line instead of key: value text.
    #[arg(long, global = true)]
    records: bool,
    /// Run independent checks on the rayon pool; output order is unchanged.
    #[arg(long, global = true)]
    parallel: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct Files {
    /// Input files, loaded in order.
    files: Vec<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Structural report for a co-quantale file or a builtin.
    Check {
        path: Option<PathBuf>,
        #[arg(long)]
        builtin: Option<String>,
    },
    /// Evaluate a formula in a structure.
    Eval {
        #[command(flatten)]
        files: Files,
        #[arg(long)]
        structure: String,
        #[arg(long)]
        formula: String,
        /// `x0=p`, repeatable.
        #[arg(long)]
        assign: Vec<String>,
    },
    /// Induced topology of a space (or a structure's space) and its theorems.
    Topology {
        #[command(flatten)]
        files: Files,
        #[arg(long)]
        space: String,
    },
    /// Tarski-Vaught test up to a formula depth.
    Tv {
        #[command(flatten)]
        pair: Pair,
    },
    /// Elementarity up to a formula depth.
    Elem {
        #[command(flatten)]
        pair: Pair,
    },
    /// Emit the D-product of the factor structures.
    Ultra {
        #[command(flatten)]
        files: Files,
        #[arg(long)]
        principal: usize,
        /// Factor structures in order; defaults to every loaded structure.
        #[arg(long)]
        factor: Vec<String>,
    },
    /// Check the Łoś equality on a D-product.
    LosCheck {
        #[command(flatten)]
        files: Files,
        /// Generator of D; every principal D when omitted.
        #[arg(long)]
        principal: Option<usize>,
        #[arg(long, conflicts_with = "formula")]
        depth: Option<usize>,
        #[arg(long)]
        formula: Option<String>,
        #[arg(long, default_value_t = 1)]
        vars: usize,
        #[arg(long)]
        factor: Vec<String>,
    },
    /// Build a model of a finitely satisfiable theory as a D-product.
    CompactnessDemo {
        #[command(flatten)]
        files: Files,
        /// Theory name; the scripted demo runs when no files are given.
        #[arg(long)]
        theory: Option<String>,
        #[arg(long)]
        candidate: Vec<String>,
    },
}

#[derive(Args, Debug)]
struct Pair {
    #[command(flatten)]
    files: Files,
    #[arg(long)]
    sub: String,
    #[arg(long)]
    sup: String,
    #[arg(long, default_value_t = 1)]
    depth: usize,
    #[arg(long, default_value_t = 2)]
    vars: usize,
}

/// What a run printed and how it ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

struct Input(String);

impl<E: std::fmt::Display> From<E> for Input {
    fn from(e: E) -> Self {
        Input(e.to_string())
    }
}

type Res = Result<(String, bool), Input>;

/// Seed for the sampled laws, from `CQL_SEED`.
pub fn seed() -> u64 {
    std::env::var("CQL_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(0)
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
            let text = e.render().to_string();
            let (stdout, stderr) = if e.use_stderr() { (String::new(), text) } else { (text, String::new()) };
            return Outcome { stdout, stderr, code };
        }
    };
    let emit = |r: &Report| if cli.records { r.to_records() } else { r.to_text() };
    let result = match &cli.cmd {
        Cmd::Check { path, builtin } => cmd_check(path.as_ref(), builtin.as_deref(), &emit),
        Cmd::Eval {
            files,
            structure,
            formula,
            assign,
        } => cmd_eval(files, structure, formula, assign),
        Cmd::Topology { files, space } => cmd_topology(files, space, &emit),
        Cmd::Tv { pair } => cmd_pair(pair, true, &emit),
        Cmd::Elem { pair } => cmd_pair(pair, false, &emit),
        Cmd::Ultra {
            files,
            principal,
            factor,
        } => cmd_ultra(files, *principal, factor),
        Cmd::LosCheck {
            files,
            principal,
            depth,
            formula,
            vars,
            factor,
        } => cmd_los(files, *principal, *depth, formula.as_deref(), *vars, factor, cli.parallel, &emit),
        Cmd::CompactnessDemo {
            files,
            theory,
            candidate,
        } => cmd_compactness(files, theory.as_deref(), candidate, &emit),
    };
    match result {
        Ok((stdout, passed)) => Outcome {
            stdout,
            stderr: String::new(),
            code: if passed { EXIT_PASS } else { EXIT_FAIL },
        },
        Err(Input(msg)) => Outcome {
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
            code: EXIT_INPUT,
        },
    }
}

fn load(files: &Files) -> Result<Workspace, Input> {
    let mut ws = Workspace::new();
    for f in &files.files {
        ws.load_file(f)?;
    }
    Ok(ws)
}

fn structure<'w>(ws: &'w Workspace, name: &str) -> Result<&'w LStructure, Input> {
    ws.structure(name).ok_or_else(|| Input(format!("unknown structure `{name}`")))
}

fn factors<'w>(ws: &'w Workspace, names: &[String]) -> Result<Vec<&'w LStructure>, Input> {
    let names = if names.is_empty() { &ws.structure_order } else { names };
    if names.is_empty() {
        return Err(Input("no factor structures".into()));
    }
    names.iter().map(|n| structure(ws, n)).collect()
}

fn coquantale_report(v: &CoQuantale, sampling: Sampling) -> Report {
    let mut r = Report::new(format!("co-quantale {}", v.name()));
    let names = |es: &[usize]| es.iter().map(|&e| v.elem_name(e)).collect::<Vec<_>>().join(" ");
    r.fact("elements", v.len());
    r.fact("value", v.is_value());
    r.fact("co-divisible", v.is_co_divisible());
    r.fact("co-Girard", v.is_co_girard());
    let dual = v.dualizing_elements();
    let shown = if dual.is_empty() {
        "none".to_string()
    } else if dual == [v.top()] {
        format!("{} (top)", names(dual))
    } else {
        names(dual)
    };
    r.fact("dualizers", shown);
    r.fact("safa", v.has_safa().is_some());
    r.fact("(V, d^s) T0 / V-domain", v.symmetric_is_t0());
    r.extend(check_lattice_laws(v.lattice(), sampling));
    r.extend(check_residuation_laws(v, sampling));
    if v.is_value() {
        r.extend(check_value_laws(v, 4));
    }
    r
}

fn cmd_check(path: Option<&PathBuf>, spec: Option<&str>, emit: &dyn Fn(&Report) -> String) -> Res {
    let sampling = Sampling::with_seed(seed());
    let vs: Vec<Arc<CoQuantale>> = match (path, spec) {
        (None, Some(s)) => vec![Arc::new(builtin(s)?)],
        (Some(p), None) => {
            let mut ws = Workspace::new();
            ws.load_file(p)?;
            if ws.coquantales.is_empty() {
                return Err(Input(format!("{}: no co-quantale defined", p.display())));
            }
            ws.coquantales.values().cloned().collect()
        }
        _ => return Err(Input("give exactly one of a path or --builtin".into())),
    };
    let mut out = String::new();
    let mut passed = true;
    for v in vs {
        let r = coquantale_report(&v, sampling);
        passed &= r.passed();
        out.push_str(&emit(&r));
    }
    Ok((out, passed))
}

fn cmd_eval(files: &Files, name: &str, formula: &str, assign: &[String]) -> Res {
    let ws = load(files)?;
    let m = structure(&ws, name)?;
    let phi = parse_formula(formula, m.lang())?;
    let mut sigma: Vec<Option<usize>> = vec![None; phi.window()];
    for a in assign {
        let (var, point) = a
            .split_once('=')
            .ok_or_else(|| Input(format!("assignment `{a}` is not `xI=p`")))?;
        let i: usize = var
            .strip_prefix('x')
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Input(format!("bad variable `{var}`")))?;
        let p = m
            .space()
            .index_of(point)
            .ok_or_else(|| Input(format!("unknown point `{point}`")))?;
        if i >= sigma.len() {
            sigma.resize(i + 1, None);
        }
        sigma[i] = Some(p);
    }
    let free = phi.free_vars();
    if let Some(x) = (0..sigma.len()).find(|&x| free >> x & 1 == 1 && sigma[x].is_none()) {
        return Err(Input(format!("unbound variable x{x}")));
    }
    // slots that are not free are rebound by their quantifier
    let total: Vec<usize> = sigma.iter().map(|s| s.unwrap_or(0)).collect();
    let value = m.eval_formula(&phi, &total)?;
    Ok((format!("{}\n", m.v().elem_name(value)), true))
}

fn cmd_topology(files: &Files, name: &str, emit: &dyn Fn(&Report) -> String) -> Res {
    let ws = load(files)?;
    let space: &ContinuitySpace = match ws.spaces.get(name) {
        Some(s) => s,
        None => structure(&ws, name)?.space(),
    };
    let tau = space.induced_topology()?;
    let mut out = String::new();
    out.push_str(&format!("space: {name}\nopens: {}\n", tau.opens().len()));
    for &u in tau.opens() {
        out.push_str(&format!("open: {}\n", tau.set_name(u)));
    }
    let r = space.check_topology_theorems()?;
    out.push_str(&emit(&r));
    Ok((out, r.passed()))
}

fn cmd_pair(p: &Pair, tv: bool, emit: &dyn Fn(&Report) -> String) -> Res {
    let ws = load(&p.files)?;
    let (m, n) = (structure(&ws, &p.sub)?, structure(&ws, &p.sup)?);
    let verdict = if tv {
        tarski_vaught_upto(m, n, p.depth, p.vars)?
    } else {
        elementary_upto(m, n, p.depth, p.vars)?
    };
    let r = verdict.to_report(m.name(), n.name());
    Ok((emit(&r), r.passed()))
}

fn cmd_ultra(files: &Files, principal: usize, names: &[String]) -> Res {
    let ws = load(files)?;
    let fs = factors(&ws, names)?;
    let d = PrincipalUltrafilter::new(fs.len(), principal)?;
    let dp = d_product_structure(&fs, &d)?;
    Ok((write_structure(&dp.structure), true))
}

#[allow(clippy::too_many_arguments)]
fn cmd_los(
    files: &Files,
    principal: Option<usize>,
    depth: Option<usize>,
    formula: Option<&str>,
    vars: usize,
    names: &[String],
    parallel: bool,
    emit: &(dyn Fn(&Report) -> String + Sync),
) -> Res {
    let ws = load(files)?;
    let fs = factors(&ws, names)?;
    let filters = match principal {
        Some(j) => vec![PrincipalUltrafilter::new(fs.len(), j)?],
        None => PrincipalUltrafilter::all(fs.len())?,
    };
    let lang = fs[0].lang();
    let phi = formula.map(|f| parse_formula(f, lang)).transpose()?;
    let depth = depth.unwrap_or(1);
    let pool = match phi {
        Some(_) => None,
        None => Some(enumerate_formulas(lang, depth, vars)?),
    };
    let one = |d: &PrincipalUltrafilter| -> Result<Report, Input> {
        let dp = d_product_structure(&fs, d)?;
        Ok(match (&phi, &pool) {
            (Some(phi), _) => los_check(&dp, phi)?,
            (None, Some(pool)) => los_check_pool(&dp, pool, depth)?,
            (None, None) => unreachable!("pool built when no formula is given"),
        })
    };
    let reports: Vec<Result<Report, Input>> = if parallel {
        filters.par_iter().map(one).collect()
    } else {
        filters.iter().map(one).collect()
    };
    let mut out = String::new();
    let mut passed = true;
    for r in reports {
        let r = r?;
        passed &= r.passed();
        out.push_str(&emit(&r));
    }
    Ok((out, passed))
}

/// Two conditions over `chain:4` with `P` unary and a constant `c`:
/// `P(c) = 0` and `sup_x P(x) = 0`, against three candidates of which only
/// one satisfies both.
pub fn scripted_compactness() -> (Theory, Vec<LStructure>) {
    let v = Arc::new(builtin("chain:4").expect("builtin"));
    let mut sig = Signature::new();
    sig.add_predicate("P", 1, Modulus::identity(&v)).expect("fresh");
    sig.add_constant("c").expect("fresh");
    let lang = Arc::new(Language::new(v.clone(), sig).expect("value co-quantale"));
    let space = ContinuitySpace::new(v, vec!["a".into(), "b".into()], vec![vec![0, 4], vec![4, 0]]).expect("metric");
    let mk = |name: &str, p: Vec<usize>| {
        LStructure::new(name, lang.clone(), space.clone(), vec![p], vec![], vec![0]).expect("valid candidate")
    };
    let candidates = vec![mk("A", vec![0, 4]), mk("B", vec![4, 0]), mk("C", vec![0, 0])];
    let cond = |name: &str, f: &str| Condition {
        name: name.into(),
        formula: parse_formula(f, &lang).expect("scripted formula"),
    };
    let theory = Theory::new(vec![cond("E1", "(P c)"), cond("E2", "(sup x0 (P x0))")]).expect("sentences");
    (theory, candidates)
}

fn cmd_compactness(files: &Files, theory: Option<&str>, names: &[String], emit: &dyn Fn(&Report) -> String) -> Res {
    let (t, owned);
    let cands: Vec<&LStructure>;
    let ws;
    if files.files.is_empty() {
        (t, owned) = scripted_compactness();
        cands = owned.iter().collect();
    } else {
        ws = load(files)?;
        let name = theory.ok_or_else(|| Input("--theory is required with input files".into()))?;
        t = ws.theories.get(name).cloned().ok_or_else(|| Input(format!("unknown theory `{name}`")))?;
        cands = factors(&ws, names)?;
    }
    let out = match compactness_build(&t, &cands) {
        Ok(c) => c,
        Err(e @ crate::ultra::UltraError::VerificationFailed(_)) => {
            let mut r = Report::new("compactness");
            r.check("product models the theory", t.len() as u64, Some(e.to_string()));
            return Ok((emit(&r), false));
        }
        Err(e) => return Err(e.into()),
    };
    let mut r = out.report.clone();
    let chosen: Vec<&str> = out.chosen.iter().map(|&c| cands[c].name()).collect();
    r.fact("chosen", chosen.join(" "));
    r.fact("product points", out.product.structure.len());
    let lang = out.product.structure.lang();
    for c in &t.conditions {
        let val = out.product.structure.eval_formula(&c.formula, &[])?;
        r.fact(
            format!("{} = {}", c.name, print_formula(&c.formula, lang)),
            out.product.structure.v().elem_name(val),
        );
    }
    Ok((emit(&r), r.passed()))
}
