//! Test objectives: five classic synthetic functions and GP sample paths.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{halton, Domain};
use crate::ego::Objective;
use crate::gp::{LazyGpOracle, DEFAULT_SAMPLE_JITTER};
use crate::kernels::KernelParams;
use crate::search::probe_and_polish;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchmarkError {
    #[error("unknown benchmark {0:?}; available: {1}")]
    Unknown(String, String),
    #[error("GP-sampled benchmarks need 1 to 16 dimensions, got {0}")]
    UnsupportedDimension(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FStarSource {
    /// Exact value quoted with the function's definition.
    Paper,
    /// Found numerically by dense probing plus local refinement.
    DerivedGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Synthetic {
    Rosenbrock,
    SixHumpCamel,
    Hartmann6,
    Branin,
    Michalewicz,
}

pub const SYNTHETIC_NAMES: [&str; 5] = ["rosenbrock", "six_hump_camel", "hartmann6", "branin", "michalewicz"];

pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (w[0] - 1.0).powi(2))
        .sum()
}

pub fn six_hump_camel(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    (4.0 - 2.1 * a * a + a.powi(4) / 3.0) * a * a + a * b + (-4.0 + 4.0 * b * b) * b * b
}

const H6_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const H6_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
// three-digit centres; the minimum differs from the four-digit variant by about 1e-3
const H6_P: [[f64; 6]; 4] = [
    [0.131, 0.170, 0.557, 0.012, 0.828, 0.587],
    [0.233, 0.414, 0.831, 0.374, 0.100, 0.999],
    [0.235, 0.145, 0.352, 0.288, 0.305, 0.665],
    [0.405, 0.883, 0.873, 0.574, 0.109, 0.038],
];

pub fn hartmann6(x: &[f64]) -> f64 {
    -(0..4)
        .map(|i| {
            let e: f64 = (0..6).map(|j| H6_A[i][j] * (x[j] - H6_P[i][j]).powi(2)).sum();
            H6_ALPHA[i] * (-e).exp()
        })
        .sum::<f64>()
}

pub fn branin(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    let q = b - 5.1 / (4.0 * PI * PI) * a * a + 5.0 / PI * a - 6.0;
    q * q + 10.0 * (1.0 - 1.0 / (8.0 * PI)) * a.cos() + 10.0
}

pub fn michalewicz(x: &[f64]) -> f64 {
    -x.iter()
        .enumerate()
        .map(|(i, v)| v.sin() * ((i + 1) as f64 * v * v / PI).sin().powi(20))
        .sum::<f64>()
}

impl Synthetic {
    pub fn all() -> [Synthetic; 5] {
        [
            Synthetic::Rosenbrock,
            Synthetic::SixHumpCamel,
            Synthetic::Hartmann6,
            Synthetic::Branin,
            Synthetic::Michalewicz,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            Synthetic::Rosenbrock => "rosenbrock",
            Synthetic::SixHumpCamel => "six_hump_camel",
            Synthetic::Hartmann6 => "hartmann6",
            Synthetic::Branin => "branin",
            Synthetic::Michalewicz => "michalewicz",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::all().into_iter().find(|s| s.name() == name)
    }

    pub fn dim(self) -> usize {
        match self {
            Synthetic::Hartmann6 => 6,
            _ => 2,
        }
    }

    pub fn domain(self) -> Domain {
        let b = match self {
            Synthetic::Rosenbrock => vec![(-2.048, 2.048); 2],
            Synthetic::SixHumpCamel => vec![(-3.0, 3.0), (-2.0, 2.0)],
            Synthetic::Hartmann6 => vec![(0.0, 1.0); 6],
            Synthetic::Branin => vec![(-5.0, 10.0), (0.0, 15.0)],
            Synthetic::Michalewicz => vec![(0.0, PI); 2],
        };
        Domain::new(b).expect("static bounds are valid")
    }

    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            Synthetic::Rosenbrock => rosenbrock(x),
            Synthetic::SixHumpCamel => six_hump_camel(x),
            Synthetic::Hartmann6 => hartmann6(x),
            Synthetic::Branin => branin(x),
            Synthetic::Michalewicz => michalewicz(x),
        }
    }

    /// Global minimum used for regret.
    pub fn f_star(self) -> f64 {
        match self {
            Synthetic::Rosenbrock => 0.0,
            Synthetic::SixHumpCamel => -1.031_628_453_489_877,
            Synthetic::Hartmann6 => -3.321_304_424_004_615,
            Synthetic::Branin => 0.397_887_357_729_738,
            Synthetic::Michalewicz => -1.801_303_410_098_553_5,
        }
    }

    pub fn f_star_source(self) -> FStarSource {
        match self {
            Synthetic::Rosenbrock => FStarSource::Paper,
            _ => FStarSource::DerivedGrid,
        }
    }

    /// The optimum as commonly quoted alongside the definition.
    pub fn paper_claimed_f_star(self) -> f64 {
        match self {
            Synthetic::Rosenbrock => 0.0,
            Synthetic::SixHumpCamel => -1.0316,
            Synthetic::Hartmann6 => -3.32,
            Synthetic::Branin => 0.0,
            Synthetic::Michalewicz => -1.8013,
        }
    }
}

impl Objective for Synthetic {
    fn dim(&self) -> usize {
        Synthetic::dim(*self)
    }

    fn evaluate(&mut self, x: &[f64]) -> f64 {
        self.eval(x)
    }

    fn estimate_minimum(&mut self, _domain: &Domain) -> f64 {
        self.f_star()
    }
}

/// Resolution of the GP sample path used to locate its minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpSampleOptions {
    /// Quasi-random points drawn up front, per dimension.
    pub anchors_per_dim: usize,
    /// Probes of the conditional mean used to locate the minimum, per dimension.
    pub probes_per_dim: usize,
}

impl Default for GpSampleOptions {
    fn default() -> Self {
        Self {
            anchors_per_dim: 512,
            probes_per_dim: 4096,
        }
    }
}

/// A GP sample path on the unit cube, realized on demand.
///
/// Construction draws the path at a Halton anchor set, then takes the minimum
/// of the conditional mean over a denser probe set, polished by compass
/// search, as the estimate of `f*`. Later evaluations are conditional draws,
/// so they stay consistent with the anchors.
#[derive(Debug, Clone)]
pub struct GpSampledObjective {
    oracle: LazyGpOracle,
    dim: usize,
    f_star: f64,
    sup_abs: f64,
    seed: u64,
}

impl GpSampledObjective {
    pub fn new(params: KernelParams, d: usize, seed: u64, opts: GpSampleOptions) -> Result<Self, BenchmarkError> {
        if d == 0 || d > 16 {
            return Err(BenchmarkError::UnsupportedDimension(d));
        }
        let mut oracle = LazyGpOracle::new(params, DEFAULT_SAMPLE_JITTER, seed);
        let mut sup_abs: f64 = 0.0;
        for a in halton(opts.anchors_per_dim * d, d) {
            sup_abs = sup_abs.max(oracle.sample(&a).abs());
        }
        let domain = Domain::unit_cube(d).expect("d >= 1");
        // offset so the probes do not coincide with the anchors
        let probes: Vec<Vec<f64>> = halton(opts.probes_per_dim * d + opts.anchors_per_dim * d, d)
            .split_off(opts.anchors_per_dim * d);
        let mut mean = |x: &[f64]| {
            let m = oracle.conditional_mean(x);
            sup_abs = sup_abs.max(m.abs());
            m
        };
        let best = probe_and_polish(&mut mean, &domain, &probes, 400 * d);
        let f_star = oracle.values().iter().copied().fold(best.value, f64::min);
        Ok(Self {
            oracle,
            dim: d,
            f_star,
            sup_abs,
            seed,
        })
    }

    pub fn f_star(&self) -> f64 {
        self.f_star
    }

    /// Largest `|f|` seen on the anchors and probes.
    pub fn sup_abs(&self) -> f64 {
        self.sup_abs
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> &KernelParams {
        self.oracle.params()
    }
}

impl Objective for GpSampledObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&mut self, x: &[f64]) -> f64 {
        self.oracle.sample(x)
    }

    fn estimate_minimum(&mut self, _domain: &Domain) -> f64 {
        self.f_star
    }
}

/// A named objective with its domain and reference optimum.
pub struct BenchmarkSpec {
    pub name: String,
    pub domain: Domain,
    pub f_star: f64,
    pub f_star_source: FStarSource,
    pub paper_claimed_f_star: Option<f64>,
    pub objective: Box<dyn Objective + Send>,
}

impl std::fmt::Debug for BenchmarkSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BenchmarkSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("f_star", &self.f_star)
            .field("f_star_source", &self.f_star_source)
            .finish_non_exhaustive()
    }
}

impl BenchmarkSpec {
    pub fn synthetic(kind: Synthetic) -> Self {
        Self {
            name: kind.name().to_string(),
            domain: kind.domain(),
            f_star: kind.f_star(),
            f_star_source: kind.f_star_source(),
            paper_claimed_f_star: Some(kind.paper_claimed_f_star()),
            objective: Box::new(kind),
        }
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }
}

/// Look up a synthetic benchmark by its registry name.
pub fn by_name(name: &str) -> Result<BenchmarkSpec, BenchmarkError> {
    Synthetic::from_name(name)
        .map(BenchmarkSpec::synthetic)
        .ok_or_else(|| BenchmarkError::Unknown(name.to_string(), SYNTHETIC_NAMES.join(", ")))
}

/// A GP sample path on `[0,1]^d` wrapped as a benchmark.
pub fn make_gp_benchmark(
    params: KernelParams,
    d: usize,
    seed: u64,
    opts: GpSampleOptions,
) -> Result<BenchmarkSpec, BenchmarkError> {
    let obj = GpSampledObjective::new(params, d, seed, opts)?;
    Ok(BenchmarkSpec {
        name: format!("gp_{}_d{d}", params.family()),
        domain: Domain::unit_cube(d).expect("d >= 1"),
        f_star: obj.f_star(),
        f_star_source: FStarSource::DerivedGrid,
        paper_claimed_f_star: None,
        objective: Box::new(obj),
    })
}
