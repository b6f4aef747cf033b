//! Batch experiments: generate instances, run planners, verify, aggregate.
//!
//! Report tables are deterministic in the seeds. Wall times live in their
//! own table so the others can be compared byte for byte across runs.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::approx::approximate;
use crate::config::PlannerConfig;
use crate::error::{Error, Result};
use crate::greedy::{plan_partitioned, Builder};
use crate::instance::{generate_random, write_atomic, GeneratorParams, MetricInstance};
use crate::minmax::{bicriterion_min_robots, latency_walks};
use crate::oracle::verify;
use crate::walks::Solution;

/// Registered planners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Approx,
    Greedy,
    Recursive,
    Orienteering,
    Minmax,
    Bicriterion,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Approx,
        Algorithm::Greedy,
        Algorithm::Recursive,
        Algorithm::Orienteering,
        Algorithm::Minmax,
        Algorithm::Bicriterion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Approx => "approx",
            Algorithm::Greedy => "greedy",
            Algorithm::Recursive => "recursive",
            Algorithm::Orienteering => "orienteering",
            Algorithm::Minmax => "minmax",
            Algorithm::Bicriterion => "bicriterion",
        }
    }

    /// Whether the planner fixes the fleet and minimizes weighted latency
    /// instead of meeting the latency constraints.
    pub fn is_minmax(self) -> bool {
        self == Algorithm::Minmax
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::UnknownAlgorithm(s.to_string()))
    }
}

/// Runs one planner. `robots` is the fleet size for `minmax`.
pub fn solve(algo: Algorithm, inst: &MetricInstance, robots: usize, cfg: &PlannerConfig) -> Result<Solution> {
    match algo {
        Algorithm::Approx => approximate(inst, cfg),
        Algorithm::Greedy => plan_partitioned(inst, Builder::Greedy, cfg),
        Algorithm::Recursive => plan_partitioned(inst, Builder::Recursive, cfg),
        Algorithm::Orienteering => plan_partitioned(inst, Builder::Orienteering, cfg),
        Algorithm::Minmax => latency_walks(inst, robots, cfg),
        Algorithm::Bicriterion => bicriterion_min_robots(inst, cfg).map(|b| b.solution),
    }
}

/// Latency stretch a planner's output is verified against; `None` for
/// `minmax`, whose output is only checked for coverage and recharging.
pub fn verification_stretch(algo: Algorithm, cfg: &PlannerConfig) -> Option<f64> {
    match algo {
        Algorithm::Minmax => None,
        Algorithm::Bicriterion => Some(cfg.stretch),
        _ => Some(1.0),
    }
}

/// Verifies a planner's output. Returns `(pass, max weighted latency, max
/// stretch)`.
pub fn check(algo: Algorithm, sol: &Solution, inst: &MetricInstance, cfg: &PlannerConfig) -> Result<(bool, f64, f64)> {
    let stretch = verification_stretch(algo, cfg).unwrap_or(f64::INFINITY);
    let v = verify(sol, inst, stretch, cfg)?;
    let covered = inst.constrained().iter().all(|&u| v.report.latency[u].is_finite());
    Ok((v.pass && covered, v.report.max_weighted, v.report.max_stretch(inst)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteParams {
    pub sizes: Vec<usize>,
    pub seeds_per_size: u64,
    pub algorithms: Vec<Algorithm>,
    /// Template for the generator; `n` is overwritten per size.
    pub generator: GeneratorParams,
    /// Fleet size for `minmax` rows.
    pub minmax_robots: usize,
}

impl Default for SuiteParams {
    fn default() -> Self {
        Self {
            sizes: vec![10, 20, 30, 40],
            seeds_per_size: 10,
            algorithms: Algorithm::ALL.to_vec(),
            generator: GeneratorParams::default(),
            minmax_robots: 3,
        }
    }
}

/// One `(size, seed, algorithm)` run.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub size: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub robots: Option<usize>,
    /// Max weighted latency.
    pub cost: Option<f64>,
    pub max_stretch: Option<f64>,
    pub verified: bool,
    /// Planner or verifier error.
    pub error: Option<String>,
    /// Planner wall time in seconds (verification excluded).
    pub seconds: f64,
}

/// Aggregates over the verified rows of one `(size, algorithm)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub size: usize,
    pub algorithm: Algorithm,
    pub runs: usize,
    pub verified: usize,
    pub robots_mean: Option<f64>,
    pub robots_min: Option<usize>,
    pub robots_max: Option<usize>,
    pub cost_mean: Option<f64>,
    pub cost_min: Option<f64>,
    pub cost_max: Option<f64>,
    pub seconds_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

/// Runs every `(size, seed, algorithm)` in parallel. Seeds are
/// `0..seeds_per_size` for each size.
pub fn run_suite(params: &SuiteParams, cfg: &PlannerConfig) -> Result<BenchReport> {
    if params.minmax_robots == 0 && params.algorithms.contains(&Algorithm::Minmax) {
        return Err(Error::NoRobots);
    }
    let jobs: Vec<(usize, u64)> = params
        .sizes
        .iter()
        .flat_map(|&n| (0..params.seeds_per_size).map(move |s| (n, s)))
        .collect();
    let mut rows: Vec<BenchRow> = jobs
        .par_iter()
        .flat_map_iter(|&(n, seed)| {
            let gen = GeneratorParams { n, ..params.generator.clone() };
            let inst = generate_random(&gen, seed).instance;
            params
                .algorithms
                .iter()
                .map(|&a| run_one(&inst, n, seed, a, params.minmax_robots, cfg))
                .collect::<Vec<_>>()
        })
        .collect();
    rows.sort_by_key(|r| (r.size, r.seed, r.algorithm));
    Ok(BenchReport { rows })
}

fn run_one(inst: &MetricInstance, size: usize, seed: u64, algorithm: Algorithm, robots: usize, cfg: &PlannerConfig) -> BenchRow {
    let mut row = BenchRow {
        size,
        seed,
        algorithm,
        robots: None,
        cost: None,
        max_stretch: None,
        verified: false,
        error: None,
        seconds: 0.0,
    };
    let t = Instant::now();
    let sol = solve(algorithm, inst, robots, cfg);
    row.seconds = t.elapsed().as_secs_f64();
    match sol.and_then(|s| check(algorithm, &s, inst, cfg).map(|c| (s, c))) {
        Ok((s, (pass, cost, stretch))) => {
            row.robots = Some(s.robot_count());
            row.cost = Some(cost);
            row.max_stretch = Some(stretch);
            row.verified = pass;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, c) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    (c > 0).then(|| s / c as f64)
}

impl BenchReport {
    /// Per `(size, algorithm)` aggregates; unverified rows are left out of
    /// every statistic except `runs`.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut keys: Vec<(usize, Algorithm)> = self.rows.iter().map(|r| (r.size, r.algorithm)).collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .map(|(size, algorithm)| {
                let all: Vec<&BenchRow> =
                    self.rows.iter().filter(|r| r.size == size && r.algorithm == algorithm).collect();
                let ok: Vec<&BenchRow> = all.iter().copied().filter(|r| r.verified).collect();
                let robots = || ok.iter().filter_map(|r| r.robots);
                let cost = || ok.iter().filter_map(|r| r.cost);
                SummaryRow {
                    size,
                    algorithm,
                    runs: all.len(),
                    verified: ok.len(),
                    robots_mean: mean(robots().map(|r| r as f64)),
                    robots_min: robots().min(),
                    robots_max: robots().max(),
                    cost_mean: mean(cost()),
                    cost_min: cost().reduce(f64::min),
                    cost_max: cost().reduce(f64::max),
                    seconds_mean: mean(all.iter().map(|r| r.seconds)).unwrap_or(0.0),
                }
            })
            .collect()
    }

    /// Mean robots over verified rows of `algorithm` at `size`.
    pub fn mean_robots(&self, size: usize, algorithm: Algorithm) -> Option<f64> {
        self.summary().into_iter().find(|s| s.size == size && s.algorithm == algorithm)?.robots_mean
    }

    /// `size,seed,algorithm,verified,robots,cost,max_stretch,error`
    pub fn rows_csv(&self) -> Result<String> {
        table(
            &["size", "seed", "algorithm", "verified", "robots", "cost", "max_stretch", "error"],
            self.rows.iter().map(|r| {
                vec![
                    r.size.to_string(),
                    r.seed.to_string(),
                    r.algorithm.to_string(),
                    r.verified.to_string(),
                    opt(r.robots),
                    opt(r.cost),
                    opt(r.max_stretch),
                    r.error.clone().unwrap_or_default(),
                ]
            }),
        )
    }

    /// `size,algorithm,runs,verified,robots_mean,robots_min,robots_max,cost_mean,cost_min,cost_max`
    pub fn summary_csv(&self) -> Result<String> {
        table(
            &[
                "size", "algorithm", "runs", "verified", "robots_mean", "robots_min", "robots_max", "cost_mean", "cost_min",
                "cost_max",
            ],
            self.summary().into_iter().map(|s| {
                vec![
                    s.size.to_string(),
                    s.algorithm.to_string(),
                    s.runs.to_string(),
                    s.verified.to_string(),
                    opt(s.robots_mean),
                    opt(s.robots_min),
                    opt(s.robots_max),
                    opt(s.cost_mean),
                    opt(s.cost_min),
                    opt(s.cost_max),
                ]
            }),
        )
    }

    /// Plot-ready `size,seed,algorithm,metric,value` over verified rows.
    pub fn long_csv(&self) -> Result<String> {
        let mut out = Vec::new();
        for r in self.rows.iter().filter(|r| r.verified) {
            let base = || vec![r.size.to_string(), r.seed.to_string(), r.algorithm.to_string()];
            for (metric, value) in [
                ("robots", r.robots.map(|x| x as f64)),
                ("cost", r.cost),
                ("max_stretch", r.max_stretch),
            ] {
                if let Some(v) = value {
                    let mut row = base();
                    row.push(metric.to_string());
                    row.push(v.to_string());
                    out.push(row);
                }
            }
        }
        table(&["size", "seed", "algorithm", "metric", "value"], out.into_iter())
    }

    /// `size,seed,algorithm,seconds`
    pub fn timings_csv(&self) -> Result<String> {
        table(
            &["size", "seed", "algorithm", "seconds"],
            self.rows
                .iter()
                .map(|r| vec![r.size.to_string(), r.seed.to_string(), r.algorithm.to_string(), format!("{:.6}", r.seconds)]),
        )
    }

    /// Writes `rows.csv`, `summary.csv`, `long.csv` and `timings.csv`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
        write_atomic(&dir.join("rows.csv"), &self.rows_csv()?)?;
        write_atomic(&dir.join("summary.csv"), &self.summary_csv()?)?;
        write_atomic(&dir.join("long.csv"), &self.long_csv()?)?;
        write_atomic(&dir.join("timings.csv"), &self.timings_csv()?)
    }
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn table(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Malformed(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Malformed(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
