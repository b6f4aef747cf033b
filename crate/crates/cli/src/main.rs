use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use patrol_core::bench::{check, run_suite, solve, verification_stretch, Algorithm, SuiteParams};
use patrol_core::instance::{generate_random, DepotPlacement, GeneratorParams};
use patrol_core::oracle::{exact_decision, exact_minmax_cyclic, verify, DecisionOptions, Verdict};
use patrol_core::{Error, InstanceDocument, MetricInstance, PlannerConfig, Solution};

const OK: u8 = 0;
const USAGE: u8 = 1;
const FAILED: u8 = 2;
const UNKNOWN: u8 = 3;

/// Plan, verify and benchmark multi-robot persistent monitoring.
#[derive(Debug, Parser)]
#[command(name = "patrol", version)]
struct Cli {
    /// Output style.
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    format: Format,

    /// Planner defaults file (TOML); flags override it.
    #[arg(long, env = "PATROL_CONFIG", global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Machine,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random instance.
    Generate(GenerateArgs),
    /// Plan with one algorithm; the solution is verified before it is written.
    Solve(SolveArgs),
    /// Check a solution against an instance.
    Verify(VerifyArgs),
    /// Exact answers for tiny integer instances.
    Oracle(OracleArgs),
    /// Run the benchmark suite.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct Knobs {
    /// Revisit discount for orienteering weights.
    #[arg(long)]
    m: Option<f64>,
    /// Leg-time search tolerance, as a fraction of the smallest latency.
    #[arg(long)]
    leg_tolerance: Option<f64>,
    /// Largest orienteering query solved exactly.
    #[arg(long)]
    exact_threshold: Option<usize>,
    /// Latency stretch for the bi-criterion planner.
    #[arg(long)]
    stretch: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Depot {
    Center,
    Corner,
    Random,
    None,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3000.0)]
    discharge: f64,
    #[arg(long, default_value_t = 1000.0)]
    extent: f64,
    #[arg(long, default_value_t = 4.0)]
    k_min: f64,
    #[arg(long, default_value_t = 8.0)]
    k_max: f64,
    #[arg(long, value_enum, default_value_t = Depot::Center)]
    depot: Depot,
    /// Round everything to integers.
    #[arg(long)]
    integer: bool,
    /// Weights are drawn from [1/spread, 1].
    #[arg(long, default_value_t = 1.0)]
    weight_spread: f64,
    /// Instance file to write; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, default_value = "orienteering")]
    algo: String,
    /// Fleet size for `minmax`.
    #[arg(long, default_value_t = 1)]
    robots: usize,
    #[command(flatten)]
    knobs: Knobs,
    /// Solution file to write.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    instance: PathBuf,
    solution: PathBuf,
    /// Allowed latency stretch.
    #[arg(long, default_value_t = 1.0)]
    stretch: f64,
    /// Print every vertex.
    #[arg(short, long)]
    verbose: bool,
}

#[derive(Debug, Args)]
struct OracleArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = 1)]
    robots: usize,
    /// One robot per vertex group.
    #[arg(long)]
    partitioned: bool,
    /// Best cyclic single-robot schedule instead of the decision search.
    #[arg(long)]
    minmax: bool,
    /// Longest cycle sequence tried by `--minmax`.
    #[arg(long, default_value_t = 4)]
    max_cycles: usize,
    #[arg(long, default_value_t = 10_000_000)]
    state_cap: usize,
    /// Witness solution to write.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [10, 20, 30, 40])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    /// Comma-separated planners; all when absent.
    #[arg(long, value_delimiter = ',')]
    algos: Vec<String>,
    /// Fleet size for `minmax` rows.
    #[arg(long, default_value_t = 3)]
    robots: usize,
    #[command(flatten)]
    knobs: Knobs,
    /// Report directory.
    #[arg(long, default_value = "bench")]
    out: PathBuf,
}

struct Fail(u8, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::StretchUnreachable { .. }) { FAILED } else { USAGE };
        Fail(code, e.to_string())
    }
}

type Outcome = Result<u8, Fail>;

fn config(cli: &Cli, knobs: Option<&Knobs>) -> Result<PlannerConfig, Fail> {
    let mut cfg = match &cli.config {
        Some(p) => PlannerConfig::load(p)?,
        None => PlannerConfig::default(),
    };
    if let Some(k) = knobs {
        if let Some(m) = k.m {
            cfg.revisit_discount = m;
        }
        if let Some(t) = k.leg_tolerance {
            cfg.leg_tolerance = t;
        }
        if let Some(t) = k.exact_threshold {
            cfg.exact_threshold = t;
        }
        if let Some(s) = k.stretch {
            cfg.stretch = s;
        }
    }
    Ok(cfg)
}

fn load(path: &Path) -> Result<MetricInstance, Fail> {
    Ok(InstanceDocument::load(path)?.instance)
}

fn emit(format: Format, pairs: &[(&str, String)]) {
    match format {
        Format::Text => {
            let line: Vec<String> = pairs.iter().map(|(k, v)| format!("{k} {v}")).collect();
            println!("{}", line.join(", "));
        }
        Format::Machine => {
            let line: Vec<String> = pairs.iter().map(|(k, v)| format!("{k}={v}")).collect();
            println!("{}", line.join("\t"));
        }
    }
}

fn generate(cli: &Cli, a: &GenerateArgs) -> Outcome {
    let depot = match a.depot {
        Depot::Center => DepotPlacement::Center,
        Depot::Corner => DepotPlacement::Corner,
        Depot::Random => DepotPlacement::Random,
        Depot::None => DepotPlacement::None,
    };
    let discharge = if matches!(a.depot, Depot::None) { f64::INFINITY } else { a.discharge };
    let params = GeneratorParams {
        n: a.n,
        k_range: [a.k_min, a.k_max],
        discharge,
        extent: a.extent,
        depot,
        integer: a.integer,
        weight_spread: a.weight_spread,
        ..Default::default()
    };
    let doc = generate_random(&params, a.seed);
    match &a.out {
        Some(p) => {
            doc.save(p)?;
            emit(cli.format, &[("wrote", p.display().to_string()), ("n", a.n.to_string()), ("seed", a.seed.to_string())]);
        }
        None => print!("{}", doc.to_toml()),
    }
    Ok(OK)
}

fn solve_cmd(cli: &Cli, a: &SolveArgs) -> Outcome {
    let cfg = config(cli, Some(&a.knobs))?;
    let algo: Algorithm = a.algo.parse()?;
    let inst = load(&a.instance)?;
    let t = Instant::now();
    let sol = solve(algo, &inst, a.robots, &cfg)?;
    let secs = t.elapsed().as_secs_f64();
    let (pass, cost, stretch) = check(algo, &sol, &inst, &cfg)?;
    if !pass {
        return Err(Fail(FAILED, format!("{algo} produced a solution that fails verification; nothing written")));
    }
    if let Some(p) = &a.out {
        sol.save(p)?;
    }
    let mut pairs = vec![("algorithm", algo.to_string()), ("robots", sol.robot_count().to_string())];
    if algo.is_minmax() {
        pairs.push(("cost", format!("{cost:.6}")));
    }
    pairs.push(("max_stretch", format!("{stretch:.6}")));
    pairs.push(("seconds", format!("{secs:.3}")));
    emit(cli.format, &pairs);
    Ok(OK)
}

fn verify_cmd(cli: &Cli, a: &VerifyArgs) -> Outcome {
    let cfg = config(cli, None)?;
    let inst = load(&a.instance)?;
    let sol = Solution::load(&a.solution)?;
    let v = verify(&sol, &inst, a.stretch, &cfg)?;
    if a.verbose {
        for u in inst.vertices() {
            println!("{} L={} r={}", inst.label(u), v.report.latency[u], inst.latency(u));
        }
    }
    emit(
        cli.format,
        &[
            ("verdict", if v.pass { "pass" } else { "fail" }.to_string()),
            ("robots", sol.robot_count().to_string()),
            ("max_weighted", format!("{:.6}", v.report.max_weighted)),
            ("max_stretch", format!("{:.6}", v.report.max_stretch(&inst))),
            ("violations", v.violations.len().to_string()),
            ("drained", v.drained.len().to_string()),
        ],
    );
    Ok(if v.pass { OK } else { FAILED })
}

fn oracle_cmd(cli: &Cli, a: &OracleArgs) -> Outcome {
    let inst = load(&a.instance)?;
    if a.minmax {
        let best = exact_minmax_cyclic(&inst, a.max_cycles)?;
        if let Some(p) = &a.out {
            let mut sol = Solution::new("exact_minmax_cyclic");
            sol.add_spaced(best.walk.clone(), 1, inst.distances())?;
            sol.save(p)?;
        }
        emit(cli.format, &[("cost", format!("{:.6}", best.cost))]);
        return Ok(OK);
    }
    let opts = DecisionOptions { robots: a.robots, state_cap: a.state_cap, partitioned: a.partitioned };
    let d = exact_decision(&inst, &opts)?;
    if let (Some(p), Some(w)) = (&a.out, &d.witness) {
        w.save(p)?;
    }
    emit(cli.format, &[("verdict", d.verdict.to_string()), ("robots", a.robots.to_string()), ("states", d.states.to_string())]);
    Ok(match d.verdict {
        Verdict::Feasible => OK,
        Verdict::Infeasible => FAILED,
        Verdict::Unknown => UNKNOWN,
    })
}

fn bench_cmd(cli: &Cli, a: &BenchArgs) -> Outcome {
    let cfg = config(cli, Some(&a.knobs))?;
    let algorithms = if a.algos.is_empty() {
        Algorithm::ALL.to_vec()
    } else {
        a.algos.iter().map(|s| s.parse()).collect::<Result<Vec<Algorithm>, Error>>()?
    };
    let params = SuiteParams {
        sizes: a.sizes.clone(),
        seeds_per_size: a.seeds,
        algorithms,
        minmax_robots: a.robots,
        ..Default::default()
    };
    let report = run_suite(&params, &cfg)?;
    std::fs::create_dir_all(&a.out).map_err(|source| Error::Io { path: a.out.clone(), source })?;
    report.write(&a.out)?;
    for s in report.summary() {
        let stretch = verification_stretch(s.algorithm, &cfg).map_or("-".to_string(), |x| x.to_string());
        emit(
            cli.format,
            &[
                ("size", s.size.to_string()),
                ("algorithm", s.algorithm.to_string()),
                ("verified", format!("{}/{}", s.verified, s.runs)),
                ("robots_mean", s.robots_mean.map_or("-".to_string(), |x| format!("{x:.2}"))),
                ("cost_mean", s.cost_mean.map_or("-".to_string(), |x| format!("{x:.3}"))),
                ("stretch", stretch),
            ],
        );
    }
    let failed = report.rows.iter().filter(|r| !r.verified).count();
    if failed > 0 {
        eprintln!("{failed} rows failed verification or errored");
        return Ok(FAILED);
    }
    Ok(OK)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let out = match &cli.command {
        Command::Generate(a) => generate(&cli, a),
        Command::Solve(a) => solve_cmd(&cli, a),
        Command::Verify(a) => verify_cmd(&cli, a),
        Command::Oracle(a) => oracle_cmd(&cli, a),
        Command::Bench(a) => bench_cmd(&cli, a),
    };
    match out {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
