//! Benchmark harness: generate a suite, run algorithms, compare to the oracle.
//!
//! Instances run in parallel; rows are merged in instance order, and every
//! random draw is keyed by the suite seed and the instance index, so the CSV
//! is byte-identical for a given config regardless of thread count. Wall
//! times are nondeterministic and therefore only emitted when `timings` is set.

use std::time::Instant;

use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gen::{self, MatrixShape};
use crate::greedy::greedy_schedule;
use crate::hybrid::hybrid_schedule_detailed;
use crate::io;
use crate::lp::lp_schedule_detailed;
use crate::model::{evaluate_throughput, DemandMatrix, Instance, Schedule};
use crate::oracle::{optimal_schedule_integer_with, OracleCache};
use crate::par::{self, Execution};
use crate::rational::{self, Rational};
use crate::rng::{self, Stream};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Greedy,
    Lp,
    Hybrid,
    Oracle,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Greedy => "greedy",
            Algorithm::Lp => "lp",
            Algorithm::Hybrid => "hybrid",
            Algorithm::Oracle => "oracle",
        }
    }
}

/// Parameters shared by the algorithms.
#[derive(Debug, Clone, Copy)]
pub struct SolveParams {
    pub epsilon: Rational,
    /// Configuration cap for `lp` (default 2) and `oracle` (default none).
    pub k: Option<usize>,
    pub seed: u64,
    pub exec: Execution,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self { epsilon: Rational::new(1, 5), k: None, seed: 0, exec: Execution::Sequential }
    }
}

/// Default slot count for the LP when none is given.
pub const DEFAULT_LP_SLOTS: usize = 2;

/// Runs `algo` on `inst`; the output is always checked for feasibility.
pub fn solve(inst: &Instance, algo: Algorithm, params: &SolveParams) -> Result<Schedule> {
    let schedule = match algo {
        Algorithm::Greedy => greedy_schedule(inst),
        Algorithm::Lp => {
            let k = params.k.unwrap_or(DEFAULT_LP_SLOTS);
            lp_schedule_detailed(inst, k, params.epsilon, params.seed, params.exec)?.schedule
        }
        Algorithm::Hybrid => hybrid_schedule_detailed(inst, params.epsilon, params.seed, params.exec)?.0,
        Algorithm::Oracle => optimal_schedule_integer_with(inst, params.k, &OracleCache::new(), params.exec)?.0,
    };
    if !schedule.is_feasible() {
        return Err(Error::Infeasible(format!("{} produced a schedule over the window", algo.name())));
    }
    Ok(schedule)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    /// `count` random matrices from the suite's shape.
    Random,
    /// Every integer matrix with entries up to `max_demand`.
    Exhaustive,
    /// `count` random permutation matrices with unit demand.
    Adversarial,
}

fn de_rational<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
    let v = serde_json::Value::deserialize(d)?;
    value_to_rational(&v).map_err(serde::de::Error::custom)
}

fn de_rationals<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational>, D::Error> {
    let vs = Vec::<serde_json::Value>::deserialize(d)?;
    vs.iter().map(value_to_rational).collect::<std::result::Result<_, _>>().map_err(serde::de::Error::custom)
}

fn value_to_rational(v: &serde_json::Value) -> std::result::Result<Rational, String> {
    let text = match v {
        serde_json::Value::Number(n) => n.to_string(),
        serde_json::Value::String(s) => s.clone(),
        other => return Err(format!("expected a number or \"p/q\" string, got {other}")),
    };
    let r = rational::parse_rational(&text).map_err(|e| e.to_string())?;
    if r < Rational::zero() {
        return Err(format!("expected a nonnegative value, got {text}"));
    }
    Ok(r)
}

fn ser_rationals<S: serde::Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    v.iter().map(io::rational_value).collect::<Vec<_>>().serialize(s)
}

fn default_max_demand() -> u32 {
    3
}
fn default_density() -> (u32, u32) {
    (1, 1)
}
fn default_epsilon() -> Rational {
    Rational::new(1, 5)
}
fn default_true() -> bool {
    true
}

/// Suite description, read from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub generator: GeneratorKind,
    pub senders: usize,
    pub receivers: usize,
    #[serde(default = "default_max_demand")]
    pub max_demand: u32,
    /// Entry presence probability `[num, den]` for the random generator.
    #[serde(default = "default_density")]
    pub density: (u32, u32),
    #[serde(default)]
    pub count: usize,
    #[serde(deserialize_with = "de_rationals", serialize_with = "ser_rationals")]
    pub deltas: Vec<Rational>,
    #[serde(deserialize_with = "de_rationals", serialize_with = "ser_rationals")]
    pub windows: Vec<Rational>,
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_epsilon", deserialize_with = "de_rational", serialize_with = "io::ser_rational")]
    pub epsilon: Rational,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Compare against the oracle when the instance is within its limits.
    #[serde(default = "default_true")]
    pub oracle: bool,
    /// Add a wall-time column (makes the CSV nondeterministic).
    #[serde(default)]
    pub timings: bool,
}

impl SuiteConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            location: format!("{origin}:{}:{}", e.line(), e.column()),
            message: e.to_string(),
        })
    }

    fn shape(&self) -> MatrixShape {
        MatrixShape { senders: self.senders, receivers: self.receivers, max_demand: self.max_demand, density: self.density }
    }

    /// The suite's demand matrices in instance order.
    pub fn matrices(&self) -> Result<Vec<DemandMatrix>> {
        match self.generator {
            GeneratorKind::Random => Ok((0..self.count as u64).map(|i| gen::random_matrix(&self.shape(), self.seed, i)).collect()),
            GeneratorKind::Exhaustive => Ok(gen::exhaustive_matrices(self.senders, self.receivers, self.max_demand)?.collect()),
            GeneratorKind::Adversarial => {
                use rand::seq::SliceRandom;
                if self.senders != self.receivers {
                    return Err(Error::InvalidArgument("adversarial suites need senders == receivers".into()));
                }
                let n = self.senders;
                Ok((0..self.count as u64)
                    .map(|i| {
                        let mut perm: Vec<usize> = (0..n).collect();
                        perm.shuffle(&mut rng::stream(self.seed, Stream::Adversary, &[i]));
                        let mut values = vec![Rational::zero(); n * n];
                        for (s, &r) in perm.iter().enumerate() {
                            values[s * n + r] = rational::int(1);
                        }
                        DemandMatrix::new(n, n, values).expect("permutation matrix")
                    })
                    .collect())
            }
        }
    }

    /// Every (matrix, delta, window) combination, matrices outermost.
    pub fn instances(&self) -> Result<Vec<Instance>> {
        let mut out = Vec::new();
        for d in self.matrices()? {
            for delta in &self.deltas {
                for window in &self.windows {
                    out.push(Instance::new(d.clone(), *delta, *window)?);
                }
            }
        }
        Ok(out)
    }
}

/// First 16 hex digits of SHA-256 over the instance's compact JSON.
pub fn instance_hash(inst: &Instance) -> String {
    let text = serde_json::to_string(&io::instance_to_json(inst)).expect("json");
    let digest = Sha256::digest(text.as_bytes());
    hex::encode(&digest[..8])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub index: usize,
    pub instance: String,
    pub senders: usize,
    pub receivers: usize,
    pub delta: Rational,
    pub window: Rational,
    pub algorithm: Algorithm,
    pub f: Rational,
    /// `None` when the oracle was skipped or refused the instance.
    pub oracle_f: Option<Rational>,
    pub configs: usize,
    pub time_used: Rational,
    pub wall_ms: Option<f64>,
}

impl Row {
    /// `f / oracle_f`; absent without an oracle value or when it is zero.
    pub fn ratio(&self) -> Option<Rational> {
        self.oracle_f.filter(|o| !o.is_zero()).map(|o| self.f / o)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AlgorithmSummary {
    pub rows: usize,
    pub with_ratio: usize,
    pub min_ratio: Option<String>,
    pub min_ratio_value: Option<f64>,
    pub mean_ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub suite: SuiteConfig,
    pub instances: usize,
    pub oracle_refused: usize,
    pub algorithms: std::collections::BTreeMap<String, AlgorithmSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_seconds: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub rows: Vec<Row>,
    pub summary: Summary,
}

fn run_instance(
    index: usize,
    inst: &Instance,
    cfg: &SuiteConfig,
    cache: &OracleCache,
) -> Result<(Vec<Row>, bool)> {
    let wants_oracle = cfg.oracle || cfg.algorithms.contains(&Algorithm::Oracle);
    let start = Instant::now();
    let oracle = if wants_oracle {
        match optimal_schedule_integer_with(inst, cfg.k, cache, Execution::Sequential) {
            Ok(found) => Some(found),
            Err(Error::BudgetExceeded(_)) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let oracle_wall = start.elapsed().as_secs_f64() * 1e3;
    // The baseline is the unrestricted optimum even when `k` caps the oracle row.
    let oracle_f = match (&oracle, cfg.oracle, cfg.k) {
        (_, false, _) => None,
        (Some((_, f)), true, None) => Some(*f),
        (Some(_), true, Some(_)) => match optimal_schedule_integer_with(inst, None, cache, Execution::Sequential) {
            Ok((_, f)) => Some(f),
            Err(Error::BudgetExceeded(_)) => None,
            Err(e) => return Err(e),
        },
        (None, true, _) => None,
    };
    let refused = wants_oracle && oracle.is_none();
    let hash = instance_hash(inst);
    let params = SolveParams {
        epsilon: cfg.epsilon,
        k: cfg.k,
        seed: rng::derive_key(cfg.seed, Stream::Instance, &[index as u64]),
        exec: Execution::Sequential,
    };
    let mut rows = Vec::with_capacity(cfg.algorithms.len());
    for &algo in &cfg.algorithms {
        let (schedule, wall) = if algo == Algorithm::Oracle {
            // Refused instances get no oracle row.
            let Some((schedule, _)) = &oracle else { continue };
            (schedule.clone(), oracle_wall)
        } else {
            let start = Instant::now();
            let schedule = solve(inst, algo, &params)?;
            (schedule, start.elapsed().as_secs_f64() * 1e3)
        };
        rows.push(Row {
            index,
            instance: hash.clone(),
            senders: inst.demand.senders(),
            receivers: inst.demand.receivers(),
            delta: inst.delta,
            window: inst.window,
            algorithm: algo,
            f: evaluate_throughput(&schedule, &inst.demand)?,
            oracle_f,
            configs: schedule.len(),
            time_used: schedule.time_used(),
            wall_ms: cfg.timings.then_some(wall),
        });
    }
    Ok((rows, refused))
}

/// Runs the suite; `exec` selects parallel or sequential evaluation.
pub fn run_benchmark(cfg: &SuiteConfig, exec: Execution) -> Result<Report> {
    let start = Instant::now();
    if cfg.algorithms.is_empty() {
        return Err(Error::InvalidArgument("suite lists no algorithms".into()));
    }
    let instances = cfg.instances()?;
    let cache = OracleCache::new();
    let indexed: Vec<(usize, &Instance)> = instances.iter().enumerate().collect();
    let results = par::map(exec, &indexed, |(i, inst)| run_instance(*i, inst, cfg, &cache));
    let mut rows = Vec::new();
    let mut refused = 0;
    for r in results {
        let (rs, skipped) = r?;
        refused += skipped as usize;
        rows.extend(rs);
    }
    let mut algorithms = std::collections::BTreeMap::new();
    for &algo in &cfg.algorithms {
        let mine: Vec<&Row> = rows.iter().filter(|r| r.algorithm == algo).collect();
        let ratios: Vec<Rational> = mine.iter().filter_map(|r| r.ratio()).collect();
        let min = ratios.iter().min().copied();
        let mean = (!ratios.is_empty())
            .then(|| ratios.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).sum::<f64>() / ratios.len() as f64);
        algorithms.insert(
            algo.name().to_string(),
            AlgorithmSummary {
                rows: mine.len(),
                with_ratio: ratios.len(),
                min_ratio: min.as_ref().map(rational::format_rational),
                min_ratio_value: min.as_ref().map(rational::to_f64),
                mean_ratio: mean,
            },
        );
    }
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        suite: cfg.clone(),
        instances: instances.len(),
        oracle_refused: refused,
        algorithms,
        wall_seconds: cfg.timings.then(|| start.elapsed().as_secs_f64()),
    };
    Ok(Report { rows, summary })
}

const HEADER: [&str; 12] = [
    "index", "instance", "senders", "receivers", "delta", "window", "algorithm", "f", "oracle_f", "ratio", "configs",
    "time_used",
];

/// CSV with a fixed column order; `wall_ms` is appended only with timings.
pub fn write_csv<W: std::io::Write>(report: &Report, out: W) -> Result<()> {
    let timings = report.summary.suite.timings;
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    let mut header: Vec<&str> = HEADER.to_vec();
    if timings {
        header.push("wall_ms");
    }
    w.write_record(&header).map_err(csv_err)?;
    let fmt = rational::format_rational;
    for r in &report.rows {
        let mut rec = vec![
            r.index.to_string(),
            r.instance.clone(),
            r.senders.to_string(),
            r.receivers.to_string(),
            fmt(&r.delta),
            fmt(&r.window),
            r.algorithm.name().to_string(),
            fmt(&r.f),
            r.oracle_f.as_ref().map(fmt).unwrap_or_default(),
            r.ratio().map(|x| format!("{:.6}", rational::to_f64(&x))).unwrap_or_default(),
            r.configs.to_string(),
            fmt(&r.time_used),
        ];
        if timings {
            rec.push(r.wall_ms.map(|t| format!("{t:.3}")).unwrap_or_default());
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(report: &Report) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(report, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

pub fn summary_json(report: &Report) -> String {
    serde_json::to_string_pretty(&report.summary).expect("json")
}
