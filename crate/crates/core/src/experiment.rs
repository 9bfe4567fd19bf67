//! Replicated benchmark runs and their aggregate statistics.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchmarks::{by_name, make_gp_benchmark, BenchmarkError, BenchmarkSpec, GpSampleOptions};
use crate::ego::{run_practical_ego, EgoError, FStar, InitialDesign, KernelSetting, RunConfig, RunTrace};
use crate::gp::default_length_scale_grid;
use crate::kernels::{KernelError, KernelFamily, KernelParams, Smoothness};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Benchmark(#[from] BenchmarkError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("replication {rep} at epsilon {eps:e}: {source}")]
    Run {
        rep: usize,
        eps: f64,
        #[source]
        source: EgoError,
    },
    #[error("malformed report: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Benchmark name used for GP sample paths.
pub const GP_BENCHMARK: &str = "gp";

fn default_true() -> bool {
    true
}

/// A flat, JSON-serializable description of a replicated experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// A synthetic benchmark name, or `"gp"` for GP sample paths.
    pub benchmark: String,
    /// Dimension of GP sample paths; ignored for synthetic benchmarks.
    #[serde(default)]
    pub dim: Option<usize>,
    /// `"se"`, `"matern0.5"`, `"matern1.5"` or `"matern2.5"`.
    pub kernel: String,
    /// Length scale in unit-cube coordinates. Also the sampling length scale
    /// for GP benchmarks.
    pub length_scale: f64,
    /// Choose the model length scale by marginal likelihood instead.
    #[serde(default)]
    pub select_length_scale: bool,
    #[serde(default = "default_true")]
    pub refit_every_iteration: bool,
    pub eps: Vec<f64>,
    pub reps: usize,
    #[serde(default)]
    pub base_seed: u64,
    pub n_init: usize,
    pub n_iter: usize,
    pub checkpoints: Vec<usize>,
    #[serde(default)]
    pub acquisition_budget: Option<usize>,
    #[serde(default = "default_design")]
    pub initial_design: InitialDesign,
    #[serde(default)]
    pub gp_sample: GpSampleOptions,
    /// Standardize observed values before fitting the surrogate.
    #[serde(default)]
    pub standardize_outputs: bool,
}

fn default_design() -> InitialDesign {
    InitialDesign::LatinHypercube
}

pub fn parse_kernel(name: &str) -> Result<KernelFamily, ExperimentError> {
    match name.to_ascii_lowercase().as_str() {
        "se" | "rbf" | "squared_exponential" => Ok(KernelFamily::SquaredExponential),
        "matern0.5" => Ok(KernelFamily::Matern(Smoothness::Half)),
        "matern1.5" => Ok(KernelFamily::Matern(Smoothness::ThreeHalves)),
        "matern2.5" | "matern" => Ok(KernelFamily::Matern(Smoothness::FiveHalves)),
        other => Err(ExperimentError::Config(format!("unknown kernel {other:?}"))),
    }
}

pub const PRESET_NAMES: [&str; 9] = [
    "rosenbrock",
    "six_hump_camel",
    "hartmann6",
    "branin",
    "michalewicz",
    "gp_se_2d",
    "gp_matern_2d",
    "gp_se_4d",
    "gp_matern_4d",
];

impl ExperimentConfig {
    /// Published protocol settings by name.
    pub fn preset(name: &str) -> Option<Self> {
        let synthetic = |bench: &str, kernel: &str, n_init: usize, n_iter: usize| ExperimentConfig {
            benchmark: bench.to_string(),
            dim: None,
            kernel: kernel.to_string(),
            length_scale: 1.0,
            select_length_scale: true,
            refit_every_iteration: true,
            eps: vec![1e-2, 1e-4, 1e-6],
            reps: 100,
            base_seed: 0,
            n_init,
            n_iter,
            checkpoints: vec![1, n_iter / 4, n_iter / 2, n_iter],
            acquisition_budget: None,
            initial_design: InitialDesign::LatinHypercube,
            gp_sample: GpSampleOptions::default(),
            standardize_outputs: true,
        };
        let gp = |kernel: &str, d: usize| ExperimentConfig {
            benchmark: GP_BENCHMARK.to_string(),
            dim: Some(d),
            kernel: kernel.to_string(),
            length_scale: 0.2,
            select_length_scale: false,
            refit_every_iteration: false,
            eps: vec![1e-10, 1e-6, 1e-4],
            reps: 20,
            base_seed: 0,
            n_init: if d == 2 { 20 } else { 40 },
            n_iter: 200,
            checkpoints: vec![1, 50, 100, 200],
            acquisition_budget: None,
            initial_design: InitialDesign::LatinHypercube,
            gp_sample: GpSampleOptions::default(),
            standardize_outputs: false,
        };
        Some(match name {
            "rosenbrock" => synthetic("rosenbrock", "se", 5, 200),
            "six_hump_camel" => synthetic("six_hump_camel", "se", 5, 200),
            "hartmann6" => synthetic("hartmann6", "se", 50, 100),
            "branin" => synthetic("branin", "matern2.5", 5, 200),
            "michalewicz" => synthetic("michalewicz", "matern2.5", 5, 100),
            "gp_se_2d" => gp("se", 2),
            "gp_matern_2d" => gp("matern2.5", 2),
            "gp_se_4d" => gp("se", 4),
            "gp_matern_4d" => gp("matern2.5", 4),
            _ => return None,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn kernel_params(&self) -> Result<KernelParams, ExperimentError> {
        Ok(KernelParams::new(parse_kernel(&self.kernel)?, self.length_scale)?)
    }

    pub fn is_gp(&self) -> bool {
        self.benchmark == GP_BENCHMARK
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        self.kernel_params()?;
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.n_init == 0 || self.n_iter == 0 {
            return bad("n_init and n_iter must be at least 1".into());
        }
        if self.eps.is_empty() || self.eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return bad("eps must be a nonempty list of positive values".into());
        }
        if let Some(&c) = self.checkpoints.iter().find(|&&c| c == 0 || c > self.n_iter) {
            return bad(format!("checkpoint {c} is outside 1..={}", self.n_iter));
        }
        if self.is_gp() {
            match self.dim {
                Some(d) if (1..=16).contains(&d) => {}
                _ => return bad("GP benchmarks need dim between 1 and 16".into()),
            }
        } else {
            by_name(&self.benchmark)?;
        }
        Ok(())
    }

    /// Dimension of the search space.
    pub fn dimension(&self) -> Result<usize, ExperimentError> {
        if self.is_gp() {
            self.dim.ok_or_else(|| ExperimentError::Config("missing dim".into()))
        } else {
            Ok(by_name(&self.benchmark)?.dim())
        }
    }

    /// The objective for replication `rep`; GP paths are seeded by `base_seed + rep`.
    pub fn build_benchmark(&self, rep: usize) -> Result<BenchmarkSpec, ExperimentError> {
        if self.is_gp() {
            let d = self.dimension()?;
            Ok(make_gp_benchmark(self.kernel_params()?, d, self.base_seed + rep as u64, self.gp_sample)?)
        } else {
            Ok(by_name(&self.benchmark)?)
        }
    }

    pub fn run_config(&self, spec: &BenchmarkSpec, eps: f64, rep: usize) -> Result<RunConfig, ExperimentError> {
        let params = self.kernel_params()?;
        let kernel = if self.select_length_scale {
            KernelSetting::Select {
                template: params,
                grid: default_length_scale_grid(),
            }
        } else {
            KernelSetting::Fixed(params)
        };
        let mut cfg = RunConfig::new(spec.domain.clone(), kernel);
        cfg.n_init = self.n_init;
        cfg.n_iter = self.n_iter;
        cfg.nugget = eps;
        cfg.refit_every_iteration = self.refit_every_iteration;
        cfg.seed = self.base_seed + rep as u64;
        cfg.f_star = if self.is_gp() {
            FStar::Estimate
        } else {
            FStar::Known(spec.f_star)
        };
        cfg.initial_design = self.initial_design;
        cfg.acquisition_budget = self.acquisition_budget;
        cfg.standardize_outputs = self.standardize_outputs;
        Ok(cfg)
    }

    pub fn run_one(&self, eps: f64, rep: usize) -> Result<RunTrace, ExperimentError> {
        let mut spec = self.build_benchmark(rep)?;
        let cfg = self.run_config(&spec, eps, rep)?;
        run_practical_ego(spec.objective.as_mut(), &cfg).map_err(|source| ExperimentError::Run { rep, eps, source })
    }
}

/// Every trace of an experiment, indexed `[eps][rep]`.
#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub config: ExperimentConfig,
    pub traces: Vec<Vec<RunTrace>>,
}

/// Run all `(ε, replication)` pairs, on the rayon pool when `parallel` is set.
/// The result does not depend on `parallel`.
pub fn run_bench(cfg: &ExperimentConfig, parallel: bool) -> Result<BenchOutcome, ExperimentError> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = (0..cfg.eps.len())
        .flat_map(|e| (0..cfg.reps).map(move |r| (e, r)))
        .collect();
    let run = |&(e, r): &(usize, usize)| cfg.run_one(cfg.eps[e], r);
    let results: Vec<Result<RunTrace, ExperimentError>> = if parallel {
        jobs.par_iter().map(run).collect()
    } else {
        jobs.iter().map(run).collect()
    };
    let mut traces: Vec<Vec<RunTrace>> = vec![Vec::with_capacity(cfg.reps); cfg.eps.len()];
    for ((e, _), res) in jobs.iter().zip(results) {
        traces[*e].push(res?);
    }
    Ok(BenchOutcome {
        config: cfg.clone(),
        traces,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub p25: f64,
    pub p75: f64,
    pub min: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.total_cmp(b));
        Self {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            median: quantile(&v, 0.5),
            p25: quantile(&v, 0.25),
            p75: quantile(&v, 0.75),
            min: v[0],
            max: v[v.len() - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub benchmark: String,
    pub d: usize,
    pub kernel: String,
    pub eps: f64,
    pub t: usize,
    pub reps: usize,
    /// Statistics of `R_t / t` across replications.
    pub stats: Summary,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub rows: Vec<ReportRow>,
}

const REPORT_HEADER: &str = "benchmark,d,kernel,epsilon,t,reps,mean,median,p25,p75,min,max";

impl AggregateReport {
    pub fn from_outcome(out: &BenchOutcome) -> Result<Self, ExperimentError> {
        let cfg = &out.config;
        let d = cfg.dimension()?;
        let kernel = parse_kernel(&cfg.kernel)?.to_string();
        let mut rows = Vec::new();
        for (e, traces) in out.traces.iter().enumerate() {
            for &t in &cfg.checkpoints {
                let values: Vec<f64> = traces.iter().map(|tr| tr.average_regret(t)).collect();
                rows.push(ReportRow {
                    benchmark: cfg.benchmark.clone(),
                    d,
                    kernel: kernel.clone(),
                    eps: cfg.eps[e],
                    t,
                    reps: traces.len(),
                    stats: Summary::of(&values),
                });
            }
        }
        Ok(Self { rows })
    }

    pub fn get(&self, eps: f64, t: usize) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.eps == eps && r.t == t)
    }

    /// Floats use Rust's shortest round-trip formatting so parsing is exact.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{REPORT_HEADER}\n");
        for r in &self.rows {
            let s = &r.stats;
            let _ = writeln!(
                out,
                "{},{},{},{:?},{},{},{:?},{:?},{:?},{:?},{:?},{:?}",
                r.benchmark, r.d, r.kernel, r.eps, r.t, r.reps, s.mean, s.median, s.p25, s.p75, s.min, s.max
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, ExperimentError> {
        let mut lines = text.lines();
        if lines.next() != Some(REPORT_HEADER) {
            return Err(ExperimentError::Parse("unexpected header".into()));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 12 {
                return Err(ExperimentError::Parse(format!("line {}: expected 12 fields", i + 2)));
            }
            let num = |k: usize| {
                f[k].parse::<f64>()
                    .map_err(|e| ExperimentError::Parse(format!("line {}: {e}", i + 2)))
            };
            let int = |k: usize| {
                f[k].parse::<usize>()
                    .map_err(|e| ExperimentError::Parse(format!("line {}: {e}", i + 2)))
            };
            rows.push(ReportRow {
                benchmark: f[0].to_string(),
                d: int(1)?,
                kernel: f[2].to_string(),
                eps: num(3)?,
                t: int(4)?,
                reps: int(5)?,
                stats: Summary {
                    mean: num(6)?,
                    median: num(7)?,
                    p25: num(8)?,
                    p75: num(9)?,
                    min: num(10)?,
                    max: num(11)?,
                },
            });
        }
        Ok(Self { rows })
    }

    /// Mean `R_t/t` laid out as rows `(d, kernel, ε)` by checkpoint columns.
    pub fn format_table(&self) -> String {
        let mut checkpoints: Vec<usize> = self.rows.iter().map(|r| r.t).collect();
        checkpoints.sort_unstable();
        checkpoints.dedup();
        let mut keys: Vec<(usize, String, f64)> = Vec::new();
        for r in &self.rows {
            let k = (r.d, r.kernel.clone(), r.eps);
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        let mut out = format!("{:>3}  {:<10} {:>8}", "d", "kernel", "epsilon");
        for t in &checkpoints {
            let _ = write!(out, " {:>10}", format!("t={t}"));
        }
        out.push('\n');
        for (d, kernel, eps) in keys {
            let _ = write!(out, "{d:>3}  {kernel:<10} {eps:>8.0e}");
            for &t in &checkpoints {
                match self.rows.iter().find(|r| r.d == d && r.kernel == kernel && r.eps == eps && r.t == t) {
                    Some(r) => {
                        let _ = write!(out, " {:>10.4}", r.stats.mean);
                    }
                    None => {
                        let _ = write!(out, " {:>10}", "-");
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Median `R_t/t` for every `t`, one curve per `ε`.
pub fn median_curves(out: &BenchOutcome) -> Vec<(f64, Vec<f64>)> {
    out.config
        .eps
        .iter()
        .zip(&out.traces)
        .map(|(&eps, traces)| {
            let curve = (1..=out.config.n_iter)
                .map(|t| {
                    let v: Vec<f64> = traces.iter().map(|tr| tr.average_regret(t)).collect();
                    Summary::of(&v).median
                })
                .collect();
            (eps, curve)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::preset("branin").unwrap();
        cfg.reps = 3;
        cfg.n_iter = 6;
        cfg.eps = vec![1e-2, 1e-6];
        cfg.checkpoints = vec![1, 3, 6];
        cfg.select_length_scale = false;
        cfg.length_scale = 0.3;
        cfg.acquisition_budget = Some(300);
        cfg
    }

    #[test]
    fn presets_are_valid() {
        for name in PRESET_NAMES {
            let cfg = ExperimentConfig::preset(name).unwrap();
            cfg.validate().unwrap();
            assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        }
        assert!(ExperimentConfig::preset("nope").is_none());
        let h = ExperimentConfig::preset("hartmann6").unwrap();
        assert_eq!((h.n_init, h.n_iter), (50, 100));
    }

    #[test]
    fn validation_rejects_bad_fields() {
        let mut cfg = tiny();
        cfg.checkpoints = vec![7];
        assert!(cfg.validate().is_err());
        let mut cfg = tiny();
        cfg.reps = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = tiny();
        cfg.benchmark = "gp".into();
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::from_json("{\"benchmark\": 1}").is_err());
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        let s = Summary::of(&[3.0, 1.0, 2.0]);
        assert_eq!((s.min, s.median, s.max, s.mean), (1.0, 2.0, 3.0, 2.0));
    }

    #[test]
    fn serial_and_parallel_agree_and_csv_round_trips() {
        let cfg = tiny();
        let a = AggregateReport::from_outcome(&run_bench(&cfg, false).unwrap()).unwrap();
        let b = AggregateReport::from_outcome(&run_bench(&cfg, true).unwrap()).unwrap();
        assert_eq!(a, b);
        assert_eq!(AggregateReport::from_csv(&a.to_csv()).unwrap(), a);
        assert_eq!(a.rows.len(), 6);
        for r in &a.rows {
            assert!(r.stats.p25 <= r.stats.median && r.stats.median <= r.stats.p75);
            assert!(r.stats.min <= r.stats.mean && r.stats.mean <= r.stats.max);
        }
        let table = a.format_table();
        assert_eq!(table.lines().count(), 3);
        assert!(table.lines().next().unwrap().contains("t=6"));
    }

    #[test]
    fn single_replication_aggregate_equals_run() {
        let mut cfg = tiny();
        cfg.reps = 1;
        let out = run_bench(&cfg, false).unwrap();
        let rep = AggregateReport::from_outcome(&out).unwrap();
        let v = out.traces[0][0].average_regret(6);
        let s = rep.get(1e-2, 6).unwrap().stats;
        assert_eq!((s.mean, s.median, s.min, s.max), (v, v, v, v));
    }
}
