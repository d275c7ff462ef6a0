use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use matsubara::engine::{
    matsubara_integral, matsubara_sum, operator_full, operator_reduced, Hierarchy, OperatorSpec, SumMethod,
};
use matsubara::graph::{LineId, MatsubaraGraph};
use matsubara::oracles::{check_gaudin_identity, random_constrained_tuple, random_point, verify_integral, verify_sum};
use matsubara::symbolic::{Format, Point, Symbols};

const EXIT_FAILURE: u8 = 1;
const EXIT_VERIFY: u8 = 2;
const EXIT_USAGE: u8 = 64;
const DEFAULT_SEED: u64 = 1;

#[derive(Parser)]
#[command(name = "matsubara", version, about = "Matsubara sums and integrals over graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Graph description in JSON.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum, default_value_t = OutFormat::Text)]
    format: OutFormat,
}

#[derive(Args)]
struct HierarchyArg {
    /// Regulator ranking, most dominant first, e.g. "3,1,2".
    #[arg(long)]
    hierarchy: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Text,
    Latex,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Text => Format::Text,
            OutFormat::Latex => Format::Latex,
            OutFormat::Json => Format::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Operator,
    Direct,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Sum,
    Integral,
}

#[derive(Subcommand)]
enum Command {
    /// Check that the graph is a Matsubara graph.
    Validate(Common),
    /// List spanning trees.
    Trees(Common),
    /// List cutsets.
    Cutsets(Common),
    /// Print the cutset-reduced thermal operator.
    Operator {
        #[command(flatten)]
        common: Common,
        /// Print the full product operator instead.
        #[arg(long)]
        full: bool,
    },
    /// Closed form of the integral.
    Integral {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        hierarchy: HierarchyArg,
    },
    /// Closed form of the sum.
    Sum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        hierarchy: HierarchyArg,
        #[arg(long, value_enum, default_value_t = Method::Operator)]
        method: Method,
    },
    /// Evaluate the closed form at a point.
    Eval {
        #[command(flatten)]
        common: Common,
        /// One positive value per line, in line-id order.
        #[arg(long)]
        q: String,
        /// One integer per non-root vertex, in input order.
        #[arg(long)]
        n: String,
        #[arg(long, value_enum, default_value_t = Target::Sum)]
        of: Target,
    },
    /// Compare the closed form with numeric oracles at random points.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 200)]
        cutoff: i64,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Target::Sum)]
        of: Target,
    },
    /// Residuals of the tree identity on random constrained tuples.
    GaudinCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
    Verification,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let mut out = String::new();
    let result = run(cli.command, &mut out);
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = stdout.write_all(out.as_bytes()).and_then(|()| stdout.flush()) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FAILURE);
        }
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_FAILURE)
        }
        Err(Failure::Verification) => ExitCode::from(EXIT_VERIFY),
    }
}

fn line(out: &mut String, text: impl std::fmt::Display) {
    out.push_str(&text.to_string());
    out.push('\n');
}

fn load(common: &Common) -> Result<MatsubaraGraph, Failure> {
    let text = std::fs::read_to_string(&common.graph)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", common.graph.display())))?;
    Ok(MatsubaraGraph::from_json(&text)?)
}

fn hierarchy(graph: &MatsubaraGraph, arg: &HierarchyArg) -> Result<Hierarchy, Failure> {
    match &arg.hierarchy {
        None => Ok(Hierarchy::identity(graph)),
        Some(s) => {
            let order = parse_list::<u32>(s, "--hierarchy")?.into_iter().map(LineId).collect();
            Hierarchy::new(graph, order).map_err(|e| Failure::Usage(e.to_string()))
        }
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, flag: &str) -> Result<Vec<T>, Failure> {
    s.split(',')
        .map(|x| x.trim().parse::<T>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::Usage(format!("{flag}: cannot parse {s:?}")))
}

fn print_subsets<'a>(
    out: &mut String,
    label: &str, subsets: impl ExactSizeIterator<Item = &'a matsubara::LineSubset>, format: OutFormat) {
    let subsets: Vec<_> = subsets.collect();
    match format {
        OutFormat::Json => {
            let lists: Vec<Vec<u32>> = subsets.iter().map(|s| s.iter().map(|l| l.0).collect()).collect();
            line(out, json!({ "count": lists.len(), label: lists }));
        }
        _ => {
            line(out, format_args!("{label}: {}", subsets.len()));
            for s in subsets {
                line(out, format_args!("{s}"));
            }
        }
    }
}

fn print_operator(out: &mut String, op: &OperatorSpec, format: OutFormat) {
    match format {
        OutFormat::Json => {
            let lists: Vec<Vec<u32>> = op.subsets.iter().map(|s| s.iter().map(|l| l.0).collect()).collect();
            line(out, json!({ "count": lists.len(), "subsets": lists }));
        }
        OutFormat::Text => line(out, op.render()),
        OutFormat::Latex => {
            let terms: Vec<String> = op
                .subsets
                .iter()
                .map(|s| {
                    if s.is_empty() {
                        "1".to_string()
                    } else {
                        s.iter()
                            .map(|l| format!("n_{{B}}(q_{{{l}}})\\left(1-\\hat{{R}}_{{{l}}}\\right)"))
                            .collect::<Vec<_>>()
                            .join("\\,")
                    }
                })
                .collect();
            line(out, if terms.is_empty() { "0".to_string() } else { terms.join(" + ") });
        }
    }
}

fn run(command: Command, out: &mut String) -> Result<(), Failure> {
    match command {
        Command::Validate(common) => {
            let g = load(&common)?;
            match common.format {
                OutFormat::Json => line(
                    out,
                    json!({"valid": true, "vertices": g.vertex_count(), "lines": g.line_count(), "cycle_rank": g.cycle_rank()}),
                ),
                _ => line(
                    out,
                    format_args!(
                        "valid: {} vertices, {} lines, cycle rank {}",
                        g.vertex_count(),
                        g.line_count(),
                        g.cycle_rank()
                    ),
                ),
            }
        }
        Command::Trees(common) => {
            let g = load(&common)?;
            let trees = g.spanning_trees();
            print_subsets(out, "trees", trees.iter().map(|t| t.lines()), common.format);
        }
        Command::Cutsets(common) => {
            let g = load(&common)?;
            let mut cutsets = Vec::new();
            for s in g.all_subsets()? {
                if g.is_cutset(&s)? {
                    cutsets.push(s);
                }
            }
            cutsets.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
            print_subsets(out, "cutsets", cutsets.iter(), common.format);
        }
        Command::Operator { common, full } => {
            let g = load(&common)?;
            let op = if full { operator_full(&g)? } else { operator_reduced(&g)? };
            print_operator(out, &op, common.format);
        }
        Command::Integral { common, hierarchy: h } => {
            let g = load(&common)?;
            let e = matsubara_integral(&g, &hierarchy(&g, &h)?)?;
            line(out, e.render(&Symbols::for_graph(&g), common.format.into()));
        }
        Command::Sum {
            common,
            hierarchy: h,
            method,
        } => {
            let g = load(&common)?;
            let method = match method {
                Method::Operator => SumMethod::Operator,
                Method::Direct => SumMethod::Direct,
            };
            let e = matsubara_sum(&g, method, &hierarchy(&g, &h)?)?;
            line(out, e.render(&Symbols::for_graph(&g), common.format.into()));
        }
        Command::Eval { common, q, n, of } => {
            let g = load(&common)?;
            let q: Vec<f64> = parse_list(&q, "--q")?;
            let n: Vec<i64> = parse_list(&n, "--n")?;
            if q.len() != g.line_count() || n.len() != g.vertex_count() - 1 {
                return Err(Failure::Usage(format!(
                    "expected {} q values and {} N values",
                    g.line_count(),
                    g.vertex_count() - 1
                )));
            }
            if q.iter().any(|&x| x <= 0.0) {
                return Err(Failure::Usage("q values must be positive".into()));
            }
            let point = Point::new(g.line_ids().zip(q), n);
            let h = Hierarchy::identity(&g);
            let e = match of {
                Target::Sum => matsubara_sum(&g, SumMethod::Operator, &h)?,
                Target::Integral => matsubara_integral(&g, &h)?,
            };
            let v = e.eval(&point)?;
            match common.format {
                OutFormat::Json => line(out, json!({"re": v.re, "im": v.im})),
                _ => line(out, format_args!("{:.15e} {:+.3e}i", v.re, v.im)),
            }
        }
        Command::Verify {
            common,
            trials,
            cutoff,
            tol,
            seed,
            of,
        } => {
            let g = load(&common)?;
            let (target, reports) = match of {
                Target::Sum => ("sum", verify_sum(&g, trials, cutoff, tol, seed)?),
                Target::Integral => ("integral", verify_integral(&g, trials, tol, seed)?),
            };
            line(
                out,
                json!({"graph": common.graph.display().to_string(), "target": target, "trials": trials,
                       "cutoff": cutoff, "tol": tol, "seed": seed}),
            );
            for r in &reports {
                line(out, serde_json::to_string(r)?);
            }
            if !reports.iter().all(|r| r.pass) {
                return Err(Failure::Verification);
            }
        }
        Command::GaudinCheck {
            common,
            trials,
            tol,
            seed,
        } => {
            let g = load(&common)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut ok = true;
            line(out, json!({"graph": common.graph.display().to_string(), "trials": trials, "tol": tol, "seed": seed}));
            for trial in 0..trials {
                let p = random_point(&g, &mut rng);
                let (n_free, lines) = random_constrained_tuple(&g, &mut rng)?;
                let residual = check_gaudin_identity(&g, &p.q, &n_free, &lines)?;
                ok &= residual < tol;
                let lines: BTreeMap<String, i64> = lines.iter().map(|(l, v)| (l.to_string(), *v)).collect();
                line(
                    out,
                    json!({"trial": trial, "n": n_free, "lines": lines, "residual": residual, "pass": residual < tol}),
                );
            }
            if !ok {
                return Err(Failure::Verification);
            }
        }
    }
    Ok(())
}
