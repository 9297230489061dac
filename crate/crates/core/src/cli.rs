//! Command-line front end.
//!
//! Exit codes: 0 success, 1 UNSAT or not verified, 2 invalid input,
//! 3 UNKNOWN.

use std::ffi::OsString;
use std::io::Write;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::convex::{dp_rank_bound, hsub};
use crate::error::{OagError, Result};
use crate::formula::{normalize_type_i, Conjunction, Relation, RewriteStep};
use crate::group::GroupSpec;
use crate::patterns::{gen_chain_pattern, gen_optimal_pattern, optimal_shape, verify, InpPattern};
use crate::solver::{oracle_search, solve, Status};
use crate::syntax::{parse_element, parse_formula, parse_params, parse_spec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_UNKNOWN: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "oag", version, about = "Ordered abelian groups: sorts, rank bounds, formulas and patterns")]
pub struct Cli {
    /// Seed for every random choice (path sampling).
    #[arg(long, global = true, env = "OAG_SEED", default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Singular primes, sorts and the rank bound of a group.
    Analyze {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        json: bool,
    },
    /// The convex subgroup H_n(a).
    Hsub {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        elem: String,
    },
    /// Decide a one-variable conjunction.
    Solve {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        formula: String,
        /// Parameter values a0; a1; ... as element literals separated by `;`.
        #[arg(long, default_value = "")]
        params: String,
        /// Also run the brute-force oracle with this coefficient radius.
        #[arg(long)]
        oracle_radius: Option<i64>,
        #[arg(long)]
        json: bool,
    },
    /// Generate (and optionally verify) a pattern.
    Pattern {
        #[command(subcommand)]
        kind: PatternKind,
    },
    /// Rewrite congruences to unit coefficient and prime-power moduli.
    Normalize {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        formula: String,
        #[arg(long, default_value = "")]
        params: String,
        /// Decomposition witnesses a' consumed in order by coefficient reductions.
        #[arg(long, default_value = "")]
        hints: String,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
pub struct PatternOpts {
    #[arg(long)]
    pub verify: bool,
    /// Paths beyond this count are sampled.
    #[arg(long, default_value_t = 1000)]
    pub path_budget: usize,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum PatternKind {
    /// Chain pattern of depth n and width m over Gp(p)^((n+1)(m+1)).
    Chain {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        width: usize,
        #[command(flatten)]
        opts: PatternOpts,
    },
    /// Depth 1 + Σ k_i pattern over lex(Q, Gp(p_0)^k_0, ...).
    Optimal {
        #[arg(long)]
        spec: String,
        #[arg(long, default_value_t = 3)]
        grid: usize,
        #[command(flatten)]
        opts: PatternOpts,
    },
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(&cli, &mut out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

fn emit<W: Write, T: Serialize>(out: &mut W, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    writeln!(out, "{text}").map_err(io)
}

fn io(e: std::io::Error) -> OagError {
    OagError::InvalidInput(format!("write failed: {e}"))
}

pub fn run<W: Write>(cli: &Cli, out: &mut W) -> Result<i32> {
    match &cli.command {
        Command::Analyze { spec, json } => analyze(&parse_spec(spec)?, *json, out),
        Command::Hsub { spec, n, elem } => {
            let g = parse_spec(spec)?;
            if *n == 0 {
                return Err(OagError::InvalidInput("n must be positive".into()));
            }
            let a = parse_element(&g, elem)?;
            let h = hsub(&g, &a, *n);
            writeln!(out, "{h} ({})", h.describe()).map_err(io)?;
            Ok(EXIT_OK)
        }
        Command::Solve { spec, formula, params, oracle_radius, json } => {
            let g = parse_spec(spec)?;
            let conj = parse_formula(formula, parse_params(&g, params)?)?;
            conj.validate(&g)?;
            let result = solve(&g, &conj)?;
            let oracle = oracle_radius
                .map(|r| oracle_search(&g, &conj, r))
                .transpose()?
                .map(|w| w.map(|w| w.to_string()));
            if *json {
                emit(out, &json!({ "formula": conj.to_string(), "result": result, "oracle": oracle }))?;
            } else {
                writeln!(out, "{}", result.status).map_err(io)?;
                if let Some(w) = &result.witness {
                    writeln!(out, "witness: {w}").map_err(io)?;
                }
                if let Some(c) = &result.certificate {
                    for e in &c.entries {
                        writeln!(out, "certificate: {}", serde_json::to_string(e).unwrap()).map_err(io)?;
                    }
                }
                if let Some(r) = &result.reason {
                    writeln!(out, "reason: {r}").map_err(io)?;
                }
                if let Some(o) = &oracle {
                    writeln!(out, "oracle: {}", o.as_deref().unwrap_or("no witness found")).map_err(io)?;
                }
            }
            Ok(match result.status {
                Status::Sat => EXIT_OK,
                Status::Unsat => EXIT_NEGATIVE,
                Status::Unknown => {
                    eprintln!("unknown: {}", result.reason.as_deref().unwrap_or(""));
                    EXIT_UNKNOWN
                }
            })
        }
        Command::Pattern { kind } => {
            let (pattern, opts) = match kind {
                PatternKind::Chain { p, depth, width, opts } => {
                    (gen_chain_pattern(*p, *depth, *width)?.1, opts)
                }
                PatternKind::Optimal { spec, grid, opts } => {
                    let (primes, mults) = optimal_shape(&parse_spec(spec)?)?;
                    (gen_optimal_pattern(&primes, &mults, *grid)?.1, opts)
                }
            };
            pattern_command(&pattern, opts, cli.seed, out)
        }
        Command::Normalize { spec, formula, params, hints, json } => {
            let g = parse_spec(spec)?;
            let mut params = parse_params(&g, params)?;
            let hints = parse_params(&g, hints)?;
            let conj = parse_formula(formula, params.clone())?;
            conj.validate(&g)?;
            let mut literals = Vec::new();
            let mut steps = Vec::new();
            let mut used = 0;
            for lit in &conj.literals {
                if let Relation::Cong { .. } = lit.relation {
                    let rest = &hints[used..];
                    let n = normalize_type_i(&g, lit, rest, &mut params)?;
                    let reductions =
                        n.steps.iter().filter(|s| matches!(s, RewriteStep::ReduceKPrime { .. })).count();
                    used += reductions.min(rest.len());
                    steps.extend(n.steps.iter().map(|s| s.to_string()));
                    literals.extend(n.literals);
                } else {
                    literals.push(lit.clone());
                }
            }
            let text = Conjunction::new(literals, params.clone()).to_string();
            if *json {
                let ps: Vec<String> = params.iter().map(|p| p.to_string()).collect();
                emit(out, &json!({ "steps": steps, "formula": text, "params": ps }))?;
            } else {
                for s in &steps {
                    writeln!(out, "{s}").map_err(io)?;
                }
                writeln!(out, "result: {text}").map_err(io)?;
                for (i, p) in params.iter().enumerate() {
                    writeln!(out, "a{i} = {p}").map_err(io)?;
                }
            }
            Ok(EXIT_OK)
        }
    }
}

fn analyze<W: Write>(g: &GroupSpec, json: bool, out: &mut W) -> Result<i32> {
    let report = dp_rank_bound(g);
    if json {
        emit(out, &json!({ "spec": g.to_string(), "report": report }))?;
        return Ok(EXIT_OK);
    }
    let primes: Vec<String> = report.singular_primes.iter().map(u64::to_string).collect();
    writeln!(out, "spec: {g}").map_err(io)?;
    writeln!(out, "singular primes: {{{}}}", primes.join(", ")).map_err(io)?;
    for s in &report.sorts {
        let raw: Vec<String> = s.raw.iter().map(|e| e.cut.to_string()).collect();
        let collapsed: Vec<String> = s
            .collapsed
            .iter()
            .map(|c| format!("{{{}}}", c.iter().map(|e| e.cut.to_string()).collect::<Vec<_>>().join(", ")))
            .collect();
        writeln!(
            out,
            "S_{}: raw {} [{}], collapsed {} [{}]",
            s.p,
            s.raw_count(),
            raw.join(", "),
            s.collapsed_count(),
            collapsed.join(", ")
        )
        .map_err(io)?;
    }
    writeln!(out, "dp-rank bound: {}", report.bound).map_err(io)?;
    writeln!(out, "strongly dependent: {}", report.strongly_dependent).map_err(io)?;
    Ok(EXIT_OK)
}

fn pattern_json(p: &InpPattern) -> serde_json::Value {
    let rows: Vec<_> = p
        .rows
        .iter()
        .map(|r| {
            json!({
                "template": r.template.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
                "k": r.k,
                "instances": r.instances.iter()
                    .map(|i| i.iter().map(|e| e.to_string()).collect::<Vec<_>>())
                    .collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({ "spec": p.group.to_string(), "depth": p.depth(), "rows": rows })
}

fn pattern_command<W: Write>(p: &InpPattern, opts: &PatternOpts, seed: u64, out: &mut W) -> Result<i32> {
    let report = if opts.verify { Some(verify(p, opts.path_budget, seed)?) } else { None };
    if opts.json {
        emit(out, &json!({ "pattern": pattern_json(p), "report": report }))?;
    } else {
        writeln!(out, "spec: {}", p.group).map_err(io)?;
        for (i, r) in p.rows.iter().enumerate() {
            let t: Vec<String> = r.template.iter().map(|l| l.to_string()).collect();
            writeln!(out, "row {i}: {} ({} columns, k = {})", t.join(" & "), r.instances.len(), r.k)
                .map_err(io)?;
        }
        if let Some(r) = &report {
            for row in &r.rows {
                writeln!(out, "row {} {}-inconsistency: {:?}", row.index, row.k, row.verdict).map_err(io)?;
            }
            let sat = r.paths.iter().filter(|p| p.status == Status::Sat && p.reevaluated).count();
            writeln!(
                out,
                "paths: {sat}/{} SAT ({} total{})",
                r.paths.len(),
                r.total_paths,
                if r.sampled { format!(", sampled with seed {}", r.seed) } else { String::new() }
            )
            .map_err(io)?;
            writeln!(out, "structural: sp_lemma {}, convex rows {}", r.structural.sp_lemma, r.structural.convex_rows)
                .map_err(io)?;
            writeln!(out, "{} depth {}", if r.verified { "verified" } else { "NOT verified" }, r.depth)
                .map_err(io)?;
        }
    }
    Ok(match &report {
        Some(r) if !r.verified && r.unknowns > 0 => EXIT_UNKNOWN,
        Some(r) if !r.verified => EXIT_NEGATIVE,
        _ => EXIT_OK,
    })
}
