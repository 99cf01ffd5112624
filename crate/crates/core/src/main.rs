use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use circuit_sched::bench::{self, Algorithm, SolveParams, SuiteConfig};
use circuit_sched::gen::{self, MatrixShape};
use circuit_sched::hybrid::{self, Branch};
use circuit_sched::lp::lp_schedule_detailed;
use circuit_sched::online::{self, OfflineSolver};
use circuit_sched::par::{self, Execution};
use circuit_sched::rational::{format_rational, parse_rational, Rational};
use circuit_sched::{evaluate_throughput, io, Error, Instance, Result};

#[derive(Parser)]
#[command(name = "circuit-sched", version, about = "Circuit switch scheduling with reconfiguration delay")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    /// Emit JSON-lines diagnostics on stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Schedule one instance offline.
    Solve(SolveArgs),
    /// Run an online algorithm on an arrival trace.
    Simulate(SimulateArgs),
    /// Run a benchmark suite and write CSV plus a JSON summary.
    Bench(BenchArgs),
    /// Generate instances or traces.
    Gen(GenArgs),
}

fn rational_arg(s: &str) -> std::result::Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Greedy,
    Lp,
    Hybrid,
    Oracle,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Greedy => Algorithm::Greedy,
            AlgoArg::Lp => Algorithm::Lp,
            AlgoArg::Hybrid => Algorithm::Hybrid,
            AlgoArg::Oracle => Algorithm::Oracle,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Instance JSON file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "hybrid")]
    algo: AlgoArg,
    #[arg(long, value_parser = rational_arg, default_value = "1/5")]
    epsilon: Rational,
    /// Slot count for `lp` (default 2) or configuration cap for `oracle`.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Schedule JSON destination (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OfflineArg {
    Greedy,
    Hybrid,
    Oracle,
}

#[derive(Args)]
struct SimulateArgs {
    /// Trace JSON file.
    #[arg(long)]
    trace: PathBuf,
    /// Block factor; blocks last `k * delta` steps.
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Switching delay; 0 selects the no-delay greedy.
    #[arg(long, default_value_t = 1)]
    delta: u32,
    #[arg(long, value_enum, default_value = "hybrid")]
    offline: OfflineArg,
    #[arg(long, value_parser = rational_arg, default_value = "1/5")]
    epsilon: Rational,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Suite config JSON.
    #[arg(long)]
    input: PathBuf,
    /// CSV destination (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Summary JSON destination (default: `<output>.summary.json`, or stderr).
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    kind: GenKind,
    /// Destination (default: stdout).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ShapeArgs {
    #[arg(long, default_value_t = 3)]
    senders: usize,
    #[arg(long, default_value_t = 3)]
    receivers: usize,
    #[arg(long, default_value_t = 3)]
    max_demand: u32,
}

#[derive(Subcommand)]
enum GenKind {
    /// Random instances (a single object when count is 1, else an array).
    Random {
        #[command(flatten)]
        shape: ShapeArgs,
        /// Entry presence probability.
        #[arg(long, value_parser = rational_arg, default_value = "1")]
        density: Rational,
        #[arg(long, value_parser = rational_arg, default_value = "1")]
        delta: Rational,
        #[arg(long, value_parser = rational_arg, default_value = "8")]
        window: Rational,
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Every integer instance of the given shape, as an array.
    Exhaustive {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long, value_parser = rational_arg, default_value = "1")]
        delta: Rational,
        #[arg(long, value_parser = rational_arg, default_value = "4")]
        window: Rational,
    },
    /// Adversarial trace: silence, then a random perfect matching at step W.
    Adversarial {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        delta: u32,
        #[arg(long)]
        window: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Random arrival trace.
    Trace {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long, default_value_t = 12)]
        horizon: usize,
        /// Probability that a step has arrivals.
        #[arg(long, value_parser = rational_arg, default_value = "1")]
        busy: Rational,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn probability(r: Rational) -> Result<(u32, u32)> {
    let (n, d) = (*r.numer(), *r.denom());
    if n < 0 || n > d || d > u32::MAX as i128 {
        return Err(Error::InvalidArgument(format!("probability must lie in [0, 1], got {}", format_rational(&r))));
    }
    Ok((n as u32, d as u32))
}

fn diag(verbose: bool, value: serde_json::Value) {
    if verbose {
        eprintln!("{value}");
    }
}

fn solve_cmd(args: &SolveArgs, exec: Execution, verbose: bool) -> Result<()> {
    let inst = io::parse_instance(&args.input)?;
    let algo: Algorithm = args.algo.into();
    let params = SolveParams { epsilon: args.epsilon, k: args.k, seed: args.seed, exec };
    if verbose {
        let lp_k = match algo {
            Algorithm::Lp => Some(args.k.unwrap_or(bench::DEFAULT_LP_SLOTS)),
            Algorithm::Hybrid => match hybrid::branch(&inst, args.epsilon)? {
                Branch::Greedy => {
                    diag(true, json!({"event": "branch", "branch": "greedy"}));
                    None
                }
                Branch::Lp { k } => {
                    diag(true, json!({"event": "branch", "branch": "lp", "k": k}));
                    Some(k)
                }
            },
            _ => None,
        };
        if let Some(k) = lp_k.filter(|k| *k > 0) {
            let out = lp_schedule_detailed(&inst, k, args.epsilon, args.seed, exec)?;
            for p in &out.profiles {
                diag(true, json!({"event": "profile", "report": p}));
            }
            diag(
                true,
                json!({
                    "event": "rounding",
                    "z_lp": format_rational(&out.z_lp),
                    "realized": out.realized.iter().map(format_rational).collect::<Vec<_>>(),
                    "mean": format_rational(&out.mean_realized()),
                }),
            );
        }
    }
    let schedule = bench::solve(&inst, algo, &params)?;
    let f = evaluate_throughput(&schedule, &inst.demand)?;
    let mut doc = io::schedule_to_json(&schedule);
    doc["throughput"] = io::rational_value(&f);
    doc["time_used"] = io::rational_value(&schedule.time_used());
    doc["algorithm"] = json!(algo.name());
    write_out(args.output.as_deref(), &serde_json::to_string_pretty(&doc).expect("json"))
}

fn simulate_cmd(args: &SimulateArgs) -> Result<()> {
    let trace = io::parse_trace(&args.trace)?;
    let run = if args.delta == 0 {
        online::online_no_delay(&trace)?
    } else {
        let offline = match args.offline {
            OfflineArg::Greedy => OfflineSolver::Greedy,
            OfflineArg::Hybrid => OfflineSolver::Hybrid { epsilon: args.epsilon },
            OfflineArg::Oracle => OfflineSolver::Oracle,
        };
        online::online_blocked(&trace, Rational::from_integer(args.delta as i128), args.k, &offline, args.seed)?
    };
    run.check_accounting(Rational::from_integer(args.delta as i128))?;
    let doc = json!({
        "total": io::rational_value(&run.total),
        "run_length": io::rational_value(&run.run_length),
        "horizon": trace.horizon(),
        "send_time": io::rational_value(&run.send_time()),
        "switch_time": io::rational_value(&run.switch_time()),
        "idle_time": io::rational_value(&run.idle_time()),
        "sent": run.sent.iter().map(io::rational_value).collect::<Vec<_>>(),
        "blocks": run.blocks.iter().map(io::schedule_to_json).collect::<Vec<_>>(),
        "segments": run.segments,
    });
    write_out(args.output.as_deref(), &serde_json::to_string_pretty(&doc).expect("json"))
}

fn bench_cmd(args: &BenchArgs, exec: Execution) -> Result<()> {
    let text = std::fs::read_to_string(&args.input).map_err(|e| Error::Io(format!("{}: {e}", args.input.display())))?;
    let cfg = SuiteConfig::from_json(&text, &args.input.display().to_string())?;
    let report = bench::run_benchmark(&cfg, exec)?;
    let csv = bench::csv_string(&report)?;
    let summary = bench::summary_json(&report);
    match &args.output {
        Some(p) => {
            std::fs::write(p, csv).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            let sp = args.summary.clone().unwrap_or_else(|| {
                let mut s = p.clone().into_os_string();
                s.push(".summary.json");
                s.into()
            });
            std::fs::write(&sp, summary).map_err(|e| Error::Io(format!("{}: {e}", sp.display())))?;
        }
        None => {
            print!("{csv}");
            match &args.summary {
                Some(sp) => std::fs::write(sp, summary).map_err(|e| Error::Io(format!("{}: {e}", sp.display())))?,
                None => eprintln!("{summary}"),
            }
        }
    }
    Ok(())
}

fn gen_cmd(args: &GenArgs) -> Result<()> {
    let text = match &args.kind {
        GenKind::Random { shape, density, delta, window, count, seed } => {
            let shape = MatrixShape {
                senders: shape.senders,
                receivers: shape.receivers,
                max_demand: shape.max_demand,
                density: probability(*density)?,
            };
            let insts = (0..*count)
                .map(|i| gen::random_instance(&shape, *delta, *window, *seed, i).map(|x| io::instance_to_json(&x)))
                .collect::<Result<Vec<_>>>()?;
            if insts.len() == 1 {
                serde_json::to_string_pretty(&insts[0])
            } else {
                serde_json::to_string_pretty(&insts)
            }
        }
        GenKind::Exhaustive { shape, delta, window } => {
            let insts = gen::exhaustive_matrices(shape.senders, shape.receivers, shape.max_demand)?
                .map(|d| Instance::new(d, *delta, *window).map(|x| io::instance_to_json(&x)))
                .collect::<Result<Vec<_>>>()?;
            serde_json::to_string_pretty(&insts)
        }
        GenKind::Adversarial { n, delta, window, seed } => {
            let t = online::adversarial_trace(*n, Rational::from_integer(*delta as i128), *window, *seed)?;
            serde_json::to_string_pretty(&io::trace_to_json(&t))
        }
        GenKind::Trace { shape, horizon, busy, seed } => {
            let s = MatrixShape::dense(shape.senders, shape.receivers, shape.max_demand);
            let t = gen::random_trace(&s, *horizon, probability(*busy)?, *seed, 0);
            serde_json::to_string_pretty(&io::trace_to_json(&t))
        }
    }
    .expect("json");
    write_out(args.output.as_deref(), &text)
}

fn run(cli: &Cli) -> Result<()> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    par::with_threads(cli.threads, || match &cli.command {
        Command::Solve(a) => solve_cmd(a, exec, cli.verbose),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Bench(a) => bench_cmd(a, exec),
        Command::Gen(a) => gen_cmd(a),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
