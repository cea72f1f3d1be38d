//! The `cqpc` command line: parses the text formats, dispatches to the
//! deciders and generators, and prints one JSON document on stdout.
//!
//! Exit codes: 0 holds or success, 1 violated, 2 usage/parse/class error,
//! 3 inconclusive (budget exceeded or domain bound too small).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use cqpc_core::decide::{
    contains_bounded, contains_cq, contains_full_poly, contains_full_ucq, decide_parallel, decide_parallel_search,
    DecisionReport, ParallelMode, SearchOptions, Verdict, DEFAULT_BUDGET,
};
use cqpc_core::eval::evaluate;
use cqpc_core::model::{Instance, Query};
use cqpc_core::policy::{check_on_instance, distribute, orphans, one_round_eval, DistributionPolicy};
use cqpc_core::reductions::{
    gen_3col, reduce_containment_to_parallel, reduce_containment_to_parallel_general,
    reduce_containment_to_parallel_general_with, reduce_ucq_to_cq_containment, ReductionOutput,
};
use cqpc_core::textio::{
    parse_graph, parse_instance, parse_policy_with, parse_query, policy_to_string, query_to_string, report_to_json,
};

/// Environment variable overriding the default search budget.
pub const BUDGET_ENV: &str = "CQPC_BUDGET";

#[derive(Debug, Parser)]
#[command(name = "cqpc", version, about = "Parallel-correctness and containment deciders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a query on an instance.
    Eval {
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        instance: PathBuf,
    },
    /// Show the local instance of every node and the facts no node receives.
    Distribute {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        instance: PathBuf,
        /// Reject `*except` rules.
        #[arg(long)]
        strict: bool,
    },
    /// Compare the one-round result with the query result on one instance.
    Check {
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        strict: bool,
    },
    /// Decide parallel-soundness, -completeness or -correctness on all instances.
    Parallel {
        #[arg(long, value_parser = parse_mode)]
        mode: ParallelMode,
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, value_enum, default_value_t = ParallelMethod::Auto)]
        method: ParallelMethod,
        #[arg(long)]
        strict: bool,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Decide whether the lhs query is contained in the rhs query.
    Contain {
        #[arg(long)]
        lhs: PathBuf,
        #[arg(long)]
        rhs: PathBuf,
        #[arg(long, value_enum, default_value_t = ContainMethod::Auto)]
        method: ContainMethod,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Generate reduction instances.
    #[command(subcommand)]
    Gen(Gen),
}

#[derive(Debug, Subcommand)]
enum Gen {
    /// Containment pair that holds iff the graph is not 3-colorable.
    #[command(name = "3col")]
    ThreeCol {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Parallel instance for a containment pair through the Global() literal.
    GlobalReduction {
        #[arg(long)]
        lhs: PathBuf,
        #[arg(long)]
        rhs: PathBuf,
        #[arg(long, value_parser = parse_mode)]
        mode: ParallelMode,
        /// Emit a policy without `*except` rules.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Parallel instance for a pair of Boolean CQs with negation, valid for every mode.
    GeneralReduction {
        #[arg(long)]
        lhs: PathBuf,
        #[arg(long)]
        rhs: PathBuf,
        /// Number of labels; defaults to max(varmax, 2).
        #[arg(long)]
        labels: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Single-disjunct containment pair for a CQ contained in a UCQ.
    Ucq2cq {
        #[arg(long)]
        lhs: PathBuf,
        #[arg(long)]
        rhs: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct SearchArgs {
    /// Maximum candidates examined [default: $CQPC_BUDGET or 10000000].
    #[arg(long)]
    budget: Option<u64>,
    /// Largest counterexample domain tried [default: varmax of the query].
    #[arg(long)]
    domain_bound: Option<usize>,
    /// Worker threads [default: all cores].
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ParallelMethod {
    Auto,
    Monotone,
    Search,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ContainMethod {
    Auto,
    Cq,
    FullPoly,
    FullUcq,
    Bounded,
}

fn parse_mode(s: &str) -> Result<ParallelMode, String> {
    s.parse().map_err(|e: cqpc_core::decide::ParseModeError| e.to_string())
}

impl SearchArgs {
    fn options(&self) -> Result<SearchOptions> {
        let budget = match self.budget {
            Some(b) => b,
            None => match std::env::var(BUDGET_ENV) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| anyhow!("{BUDGET_ENV} must be a non-negative integer, got {v:?}"))?,
                Err(_) => DEFAULT_BUDGET,
            },
        };
        if self.jobs == Some(0) {
            bail!("--jobs must be at least 1");
        }
        Ok(SearchOptions {
            budget,
            domain_bound: self.domain_bound,
            jobs: self.jobs,
        })
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_query(path: &Path) -> Result<Query> {
    parse_query(&read(path)?).with_context(|| format!("parse error in {}", path.display()))
}

fn load_instance(path: &Path) -> Result<Instance> {
    parse_instance(&read(path)?).with_context(|| format!("parse error in {}", path.display()))
}

fn load_policy(path: &Path, strict: bool) -> Result<DistributionPolicy> {
    parse_policy_with(&read(path)?, strict).with_context(|| format!("parse error in {}", path.display()))
}

fn facts_json(i: &Instance) -> Value {
    Value::Array(i.iter().map(|f| Value::String(f.to_string())).collect())
}

fn report_exit(r: &DecisionReport) -> i32 {
    match r.verdict {
        Verdict::Holds => 0,
        Verdict::Violated => 1,
        Verdict::Inconclusive(_) => 3,
    }
}

/// Containment method picked from the query classes.
fn select_contain(q1: &Query, q2: &Query) -> ContainMethod {
    let plain = |q: &Query| q.len() == 1 && !q.has_negation() && !q.has_inequalities();
    if plain(q1) && plain(q2) {
        ContainMethod::Cq
    } else if q1.is_full() && q2.is_full() && q1.len() == 1 && q2.len() == 1 {
        ContainMethod::FullPoly
    } else if q1.is_full() && q2.is_full() {
        ContainMethod::FullUcq
    } else {
        ContainMethod::Bounded
    }
}

fn method_name(m: ContainMethod) -> &'static str {
    match m {
        ContainMethod::Auto => "auto",
        ContainMethod::Cq => "cq",
        ContainMethod::FullPoly => "full-poly",
        ContainMethod::FullUcq => "full-ucq",
        ContainMethod::Bounded => "bounded",
    }
}

fn write_outputs(dir: Option<&Path>, files: &[(&str, String)]) -> Result<()> {
    let Some(dir) = dir else {
        return Ok(());
    };
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn reduction_json(out: &ReductionOutput, dir: Option<&Path>) -> Result<Value> {
    let mut obj = Map::new();
    let mut files = Vec::new();
    let query = query_to_string(&out.query);
    obj.insert("query".into(), Value::String(query.clone()));
    files.push(("query.cq", query));
    if let Some(q2) = &out.query2 {
        let text = query_to_string(q2);
        obj.insert("query2".into(), Value::String(text.clone()));
        files.push(("query2.cq", text));
    }
    if let Some(p) = &out.policy {
        let text = policy_to_string(p);
        obj.insert("policy".into(), Value::String(text.clone()));
        files.push(("policy.pol", text));
    }
    obj.insert("note".into(), Value::String(out.note.clone()));
    write_outputs(dir, &files)?;
    Ok(Value::Object(obj))
}

fn pair_json(lhs: &Query, rhs: &Query, dir: Option<&Path>) -> Result<Value> {
    let (l, r) = (query_to_string(lhs), query_to_string(rhs));
    write_outputs(dir, &[("lhs.cq", l.clone()), ("rhs.cq", r.clone())])?;
    Ok(json!({ "lhs": l, "rhs": r }))
}

fn execute(cmd: Command) -> Result<(Value, i32)> {
    match cmd {
        Command::Eval { query, instance } => {
            let q = load_query(&query)?;
            let i = load_instance(&instance)?;
            Ok((json!({ "answers": facts_json(&evaluate(&q, &i)) }), 0))
        }
        Command::Distribute { policy, instance, strict } => {
            let p = load_policy(&policy, strict)?;
            let i = load_instance(&instance)?;
            let local = distribute(&p, &i)?;
            let lost = orphans(&p, &i);
            let nodes: Map<String, Value> = local.iter().map(|(n, li)| (n.to_string(), facts_json(li))).collect();
            let out = json!({
                "nodes": nodes,
                "orphans": facts_json(&lost),
                "stats": { "orphans": lost.len() },
            });
            Ok((out, 0))
        }
        Command::Check { query, policy, instance, strict } => {
            let q = load_query(&query)?;
            let p = load_policy(&policy, strict)?;
            let i = load_instance(&instance)?;
            let c = check_on_instance(&q, &p, &i)?;
            let out = json!({
                "problem": "check",
                "holds": c.correct,
                "sound": c.sound,
                "complete": c.complete,
                "correct": c.correct,
                "answers": facts_json(&evaluate(&q, &i)),
                "one_round": facts_json(&one_round_eval(&q, &p, &i)?),
            });
            Ok((out, if c.correct { 0 } else { 1 }))
        }
        Command::Parallel { mode, query, policy, method, strict, search } => {
            let q = load_query(&query)?;
            let p = load_policy(&policy, strict)?;
            let opts = search.options()?;
            let r = match method {
                ParallelMethod::Auto => decide_parallel(&q, &p, mode, &opts)?,
                ParallelMethod::Monotone => {
                    if q.has_negation() {
                        bail!("--method monotone needs a query without negation");
                    }
                    decide_parallel(&q, &p, mode, &opts)?
                }
                ParallelMethod::Search => decide_parallel_search(&q, &p, mode, &opts)?,
            };
            Ok((report_to_json(&r), report_exit(&r)))
        }
        Command::Contain { lhs, rhs, method, search } => {
            let q1 = load_query(&lhs)?;
            let q2 = load_query(&rhs)?;
            let opts = search.options()?;
            let method = match method {
                ContainMethod::Auto => select_contain(&q1, &q2),
                m => m,
            };
            let r = match method {
                ContainMethod::Cq => contains_cq(&q1, &q2)?,
                ContainMethod::FullPoly => contains_full_poly(&q1, &q2)?,
                ContainMethod::FullUcq => contains_full_ucq(&q1, &q2, &opts)?,
                ContainMethod::Bounded | ContainMethod::Auto => contains_bounded(&q1, &q2, &opts)?,
            };
            let r = r.with_problem("containment");
            let mut out = report_to_json(&r);
            out["method"] = Value::String(method_name(method).into());
            Ok((out, report_exit(&r)))
        }
        Command::Gen(g) => Ok((generate(g)?, 0)),
    }
}

fn generate(g: Gen) -> Result<Value> {
    match g {
        Gen::ThreeCol { graph, out_dir } => {
            let g = parse_graph(&read(&graph)?).with_context(|| format!("parse error in {}", graph.display()))?;
            let (q1, q2) = gen_3col(&g)?;
            pair_json(&q1, &q2, out_dir.as_deref())
        }
        Gen::GlobalReduction { lhs, rhs, mode, strict, out_dir } => {
            let out = reduce_containment_to_parallel(&load_query(&lhs)?, &load_query(&rhs)?, mode, strict)?;
            reduction_json(&out, out_dir.as_deref())
        }
        Gen::GeneralReduction { lhs, rhs, labels, out_dir } => {
            let (q1, q2) = (load_query(&lhs)?, load_query(&rhs)?);
            let out = match labels {
                Some(m) => reduce_containment_to_parallel_general_with(&q1, &q2, m)?,
                None => reduce_containment_to_parallel_general(&q1, &q2)?,
            };
            reduction_json(&out, out_dir.as_deref())
        }
        Gen::Ucq2cq { lhs, rhs, out_dir } => {
            let (l, r) = reduce_ucq_to_cq_containment(&load_query(&lhs)?, &load_query(&rhs)?)?;
            pair_json(&l, &r, out_dir.as_deref())
        }
    }
}

/// Runs the command line and returns the process exit code. Help and version
/// requests exit 0; every other usage error exits 2.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok((out, code)) => {
            println!("{out}");
            code
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}
