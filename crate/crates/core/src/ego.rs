//! The practical EGO loop: initial design, then repeated fit / maximize EI /
//! observe, with a full per-iteration trace.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acquisition::{maximize_acquisition, Incumbent, DEFAULT_BUDGET_PER_DIM};
use crate::domain::{halton, Domain, DomainError};
use crate::gp::{select_length_scale, GpError, GpModel};
use crate::kernels::KernelParams;
use crate::search::probe_and_polish;

/// A black-box function to minimize, evaluated in original coordinates.
pub trait Objective {
    fn dim(&self) -> usize;

    fn evaluate(&mut self, x: &[f64]) -> f64;

    /// Best available estimate of the global minimum over `domain`.
    ///
    /// The default probes `4096·d` Halton points and polishes the best one.
    fn estimate_minimum(&mut self, domain: &Domain) -> f64 {
        let d = domain.dim();
        let probes: Vec<Vec<f64>> = halton(4096 * d, d).iter().map(|u| domain.from_unit(u)).collect();
        let mut f = |x: &[f64]| self.evaluate(x);
        probe_and_polish(&mut f, domain, &probes, 2000 * d).value
    }
}

/// Adapts a closure into an [`Objective`].
pub struct FnObjective<F> {
    dim: usize,
    f: F,
}

impl<F: FnMut(&[f64]) -> f64> FnObjective<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: FnMut(&[f64]) -> f64> Objective for FnObjective<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&mut self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

#[derive(Debug, Error)]
pub enum EgoError {
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("iteration {iteration}: {source}")]
    Gp {
        iteration: usize,
        #[source]
        source: GpError,
    },
    #[error("objective returned {value} at {point:?}")]
    NonFiniteObjective { point: Vec<f64>, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSetting {
    Fixed(KernelParams),
    /// Maximum-likelihood choice of the length scale over `grid`.
    Select { template: KernelParams, grid: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FStar {
    Known(f64),
    /// Ask the objective for an estimate before optimizing.
    Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialDesign {
    LatinHypercube,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub domain: Domain,
    pub n_init: usize,
    pub n_iter: usize,
    pub nugget: f64,
    pub kernel: KernelSetting,
    /// With `KernelSetting::Select`, reselect the length scale every iteration
    /// instead of once after the initial design.
    pub refit_every_iteration: bool,
    pub seed: u64,
    pub f_star: FStar,
    pub initial_design: InitialDesign,
    /// EI evaluations per acquisition step; defaults to `2048·d`.
    pub acquisition_budget: Option<usize>,
    /// Fit the surrogate to `(y − mean) / std` of the observations so far.
    /// The kernel keeps unit variance; EI is reported in original units.
    #[serde(default)]
    pub standardize_outputs: bool,
}

impl RunConfig {
    pub fn new(domain: Domain, kernel: KernelSetting) -> Self {
        Self {
            domain,
            n_init: 5,
            n_iter: 50,
            nugget: crate::gp::DEFAULT_NUGGET,
            kernel,
            refit_every_iteration: true,
            seed: 0,
            f_star: FStar::Estimate,
            initial_design: InitialDesign::LatinHypercube,
            acquisition_budget: None,
            standardize_outputs: false,
        }
    }

    pub fn validate(&self) -> Result<(), EgoError> {
        if self.n_init == 0 {
            return Err(EgoError::Config("n_init must be at least 1".into()));
        }
        if self.n_iter == 0 {
            return Err(EgoError::Config("n_iter must be at least 1".into()));
        }
        if !(self.nugget > 0.0 && self.nugget.is_finite()) {
            return Err(EgoError::Config(format!("nugget must be positive, got {}", self.nugget)));
        }
        if let KernelSetting::Select { grid, .. } = &self.kernel {
            if grid.is_empty() || grid.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
                return Err(EgoError::Config("length-scale grid must be nonempty and positive".into()));
            }
        }
        if let FStar::Known(v) = self.f_star {
            if !v.is_finite() {
                return Err(EgoError::Config("f_star must be finite".into()));
            }
        }
        Ok(())
    }

    fn budget(&self) -> usize {
        self.acquisition_budget
            .unwrap_or(DEFAULT_BUDGET_PER_DIM * self.domain.dim())
            .max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    /// The same point in unit-cube coordinates, where the surrogate lives.
    pub x_unit: Vec<f64>,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub sample: Sample,
    /// Incumbent before this observation, `f_{t-1}^+`.
    pub f_plus_prev: f64,
    /// Incumbent after this observation, `f_t^+`.
    pub f_plus: f64,
    /// Posterior standard deviation at the chosen point before observing it.
    pub sigma_prev: f64,
    pub ei_max: f64,
    pub length_scale: f64,
    pub r: f64,
    pub cumulative_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub initial: Vec<Sample>,
    pub rows: Vec<TraceRow>,
    pub f_star: f64,
    /// Set when an estimated `f*` was above an observed value and was lowered to it.
    pub f_star_lowered: bool,
    pub final_params: KernelParams,
    pub nugget: f64,
}

impl RunTrace {
    pub fn dim(&self) -> usize {
        self.initial[0].x.len()
    }

    /// All evaluated points in unit-cube coordinates, initial design first.
    pub fn unit_points(&self) -> Vec<Vec<f64>> {
        self.initial
            .iter()
            .map(|s| s.x_unit.clone())
            .chain(self.rows.iter().map(|r| r.sample.x_unit.clone()))
            .collect()
    }

    pub fn min_observed(&self) -> f64 {
        self.initial
            .iter()
            .map(|s| s.f)
            .chain(self.rows.iter().map(|r| r.sample.f))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn average_regret(&self, t: usize) -> f64 {
        self.rows[t - 1].cumulative_regret / t as f64
    }

    pub fn to_csv(&self) -> String {
        let d = self.dim();
        let mut out = String::from("t");
        for i in 1..=d {
            let _ = write!(out, ",x_{i}");
        }
        out.push_str(",f,f_plus,sigma_prev,ei_max,r,R\n");
        for row in &self.rows {
            let _ = write!(out, "{}", row.t);
            for v in &row.sample.x {
                let _ = write!(out, ",{v:e}");
            }
            let _ = writeln!(
                out,
                ",{:e},{:e},{:e},{:e},{:e},{:e}",
                row.sample.f, row.f_plus, row.sigma_prev, row.ei_max, row.r, row.cumulative_regret
            );
        }
        out
    }
}

/// One point per stratum along each axis, strata shuffled independently.
pub fn latin_hypercube<R: Rng + ?Sized>(n: usize, domain: &Domain, rng: &mut R) -> Vec<Vec<f64>> {
    let d = domain.dim();
    let mut unit = vec![vec![0.0; d]; n];
    let mut perm: Vec<usize> = (0..n).collect();
    for j in 0..d {
        perm.shuffle(rng);
        for (i, p) in perm.iter().enumerate() {
            let u: f64 = rng.gen();
            unit[i][j] = (*p as f64 + u) / n as f64;
        }
    }
    unit.iter().map(|u| domain.from_unit(u)).collect()
}

fn observe<O: Objective + ?Sized>(objective: &mut O, domain: &Domain, x_unit: Vec<f64>) -> Result<Sample, EgoError> {
    let x = domain.from_unit(&x_unit);
    let f = objective.evaluate(&x);
    if !f.is_finite() {
        return Err(EgoError::NonFiniteObjective { point: x, value: f });
    }
    Ok(Sample { x, x_unit, f })
}

/// Run practical EGO on `objective`. Deterministic given `cfg.seed`.
pub fn run_practical_ego<O: Objective + ?Sized>(objective: &mut O, cfg: &RunConfig) -> Result<RunTrace, EgoError> {
    cfg.validate()?;
    let d = cfg.domain.dim();
    if objective.dim() != d {
        return Err(EgoError::Config(format!(
            "objective has dimension {} but the domain has {d}",
            objective.dim()
        )));
    }
    let f_star_estimate = match cfg.f_star {
        FStar::Known(v) => v,
        FStar::Estimate => objective.estimate_minimum(&cfg.domain),
    };

    let unit = Domain::unit_cube(d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let design: Vec<Vec<f64>> = match cfg.initial_design {
        InitialDesign::LatinHypercube => latin_hypercube(cfg.n_init, &unit, &mut rng),
        InitialDesign::Uniform => (0..cfg.n_init)
            .map(|_| (0..d).map(|_| rng.gen::<f64>()).collect())
            .collect(),
    };
    let mut initial = Vec::with_capacity(cfg.n_init);
    for u in design {
        initial.push(observe(objective, &cfg.domain, u)?);
    }

    let mut xs: Vec<Vec<f64>> = initial.iter().map(|s| s.x_unit.clone()).collect();
    let mut ys: Vec<f64> = initial.iter().map(|s| s.f).collect();
    let mut f_plus = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let mut scale = OutputScale::of(&ys, cfg.standardize_outputs);
    let mut params = match &cfg.kernel {
        KernelSetting::Fixed(p) => *p,
        KernelSetting::Select { template, grid } => {
            select_length_scale(&xs, &scale.apply(&ys), template, cfg.nugget, grid)
                .map_err(|source| EgoError::Gp { iteration: 0, source })?
        }
    };
    let budget = cfg.budget();
    let mut rows = Vec::with_capacity(cfg.n_iter);

    for t in 1..=cfg.n_iter {
        if t > 1 {
            scale = OutputScale::of(&ys, cfg.standardize_outputs);
        }
        let fit_ys = scale.apply(&ys);
        if t > 1 && cfg.refit_every_iteration {
            if let KernelSetting::Select { template, grid } = &cfg.kernel {
                params = select_length_scale(&xs, &fit_ys, template, cfg.nugget, grid)
                    .map_err(|source| EgoError::Gp { iteration: t, source })?;
            }
        }
        let gp_err = |source| EgoError::Gp { iteration: t, source };
        let model = GpModel::fit(&xs, &fit_ys, params, cfg.nugget).map_err(gp_err)?;
        let inc = Incumbent::from_observations(&xs, &fit_ys).expect("initial design is nonempty");
        let acq = maximize_acquisition(&model, &inc, &unit, budget, &mut rng).map_err(gp_err)?;
        let sigma_prev = model.posterior(&acq.x).map_err(gp_err)?.std;

        let sample = observe(objective, &cfg.domain, acq.x)?;
        let f_plus_prev = f_plus;
        f_plus = f_plus.min(sample.f);
        xs.push(sample.x_unit.clone());
        ys.push(sample.f);
        rows.push(TraceRow {
            t,
            sample,
            f_plus_prev,
            f_plus,
            sigma_prev,
            ei_max: acq.ei * scale.std,
            length_scale: params.length_scale(),
            r: 0.0,
            cumulative_regret: 0.0,
        });
    }

    let min_observed = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let (f_star, f_star_lowered) = match cfg.f_star {
        FStar::Estimate if f_star_estimate > min_observed => (min_observed, true),
        _ => (f_star_estimate, false),
    };
    let mut trace = RunTrace {
        initial,
        rows,
        f_star,
        f_star_lowered,
        final_params: params,
        nugget: cfg.nugget,
    };
    let series = regret_series(&trace, f_star);
    for (row, (r, cum)) in trace.rows.iter_mut().zip(series.r.iter().zip(&series.cumulative)) {
        row.r = *r;
        row.cumulative_regret = *cum;
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy)]
struct OutputScale {
    mean: f64,
    std: f64,
}

impl OutputScale {
    fn of(ys: &[f64], standardize: bool) -> Self {
        if !standardize {
            return Self { mean: 0.0, std: 1.0 };
        }
        let n = ys.len() as f64;
        let mean = ys.iter().sum::<f64>() / n;
        let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
        let std = if var.sqrt() > 1e-12 * mean.abs().max(1.0) { var.sqrt() } else { 1.0 };
        Self { mean, std }
    }

    fn apply(&self, ys: &[f64]) -> Vec<f64> {
        ys.iter().map(|y| (y - self.mean) / self.std).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretSeries {
    pub r: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub average: Vec<f64>,
    /// Present when `f_star` exceeds an observed value by more than 1e-9.
    pub warning: Option<String>,
}

/// `r_t = f(x_t) − f*`, `R_t = Σ_{s≤t} r_s` and `R_t / t` over the EGO iterations.
pub fn regret_series(trace: &RunTrace, f_star: f64) -> RegretSeries {
    let mut r = Vec::with_capacity(trace.rows.len());
    let mut cumulative = Vec::with_capacity(trace.rows.len());
    let mut average = Vec::with_capacity(trace.rows.len());
    let mut total = 0.0;
    for (i, row) in trace.rows.iter().enumerate() {
        let ri = row.sample.f - f_star;
        total += ri;
        r.push(ri);
        cumulative.push(total);
        average.push(total / (i + 1) as f64);
    }
    let min_observed = trace.min_observed();
    let warning = (f_star > min_observed + 1e-9)
        .then(|| format!("f* = {f_star} exceeds the smallest observed value {min_observed}"));
    RegretSeries {
        r,
        cumulative,
        average,
        warning,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelescopeCheck {
    /// `Σ_t max{f_{t-1}^+ − f(x_t), 0}`
    pub sum: f64,
    /// `2B`
    pub bound: f64,
    pub holds: bool,
}

/// Total exploitation gain of a run against the `2B` bound for `|f| ≤ B`.
pub fn exploitation_telescope_check(trace: &RunTrace, b: f64) -> TelescopeCheck {
    let sum = trace
        .rows
        .iter()
        .map(|row| (row.f_plus_prev - row.sample.f).max(0.0))
        .sum();
    TelescopeCheck {
        sum,
        bound: 2.0 * b,
        holds: sum <= 2.0 * b + 1e-6,
    }
}
