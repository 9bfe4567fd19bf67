//! EI surfaces of one sample set refit under several nuggets.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{ei_from_stats, Incumbent};
use crate::benchmarks::Synthetic;
use crate::domain::Domain;
use crate::ego::{run_practical_ego, FStar, InitialDesign, KernelSetting, RunConfig};
use crate::experiment::ExperimentError;
use crate::gp::{default_length_scale_grid, select_length_scale, GpModel, PosteriorScratch};
use crate::kernels::KernelParams;

/// How the conditioning points are produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SampleSource {
    /// Latin hypercube design followed by practical EGO at a reference nugget.
    Ego { n_init: usize, n_iter: usize, reference_eps: f64 },
    /// Independent uniform points.
    Random { n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EiGridConfig {
    pub benchmark: Synthetic,
    pub source: SampleSource,
    pub eps: Vec<f64>,
    pub resolution: usize,
    pub seed: u64,
    /// Kernel family and default length scale; the length scale is reselected
    /// by marginal likelihood for every nugget when `select_length_scale` is set.
    pub kernel: KernelParams,
    pub select_length_scale: bool,
    pub acquisition_budget: Option<usize>,
    /// Standardize the sample values before every fit, as in the EGO loop.
    /// EI is reported in original units either way.
    #[serde(default)]
    pub standardize_outputs: bool,
}

impl EiGridConfig {
    pub fn new(benchmark: Synthetic, source: SampleSource, kernel: KernelParams) -> Self {
        Self {
            benchmark,
            source,
            eps: vec![1e-2, 1e-6, 1e-10],
            resolution: 200,
            seed: 0,
            kernel,
            select_length_scale: true,
            acquisition_budget: None,
            standardize_outputs: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EiSurface {
    pub eps: f64,
    pub length_scale: f64,
    /// Row-major `resolution × resolution` values, `x_1` varying fastest.
    pub values: Vec<f64>,
    pub max: f64,
    pub argmax: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EiGridResult {
    pub samples: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub resolution: usize,
    pub domain: Domain,
    pub surfaces: Vec<EiSurface>,
}

fn standardization(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    (mean, if sd > 0.0 { sd } else { 1.0 })
}

/// Cell centres of a uniform `resolution × resolution` grid over a 2-D box.
pub fn grid_points(domain: &Domain, resolution: usize) -> Vec<Vec<f64>> {
    let b = domain.bounds();
    let c = |(lo, hi): (f64, f64), i: usize| lo + (i as f64 + 0.5) / resolution as f64 * (hi - lo);
    let mut out = Vec::with_capacity(resolution * resolution);
    for j in 0..resolution {
        for i in 0..resolution {
            out.push(vec![c(b[0], i), c(b[1], j)]);
        }
    }
    out
}

pub fn run_ei_grid(cfg: &EiGridConfig) -> Result<EiGridResult, ExperimentError> {
    let domain = cfg.benchmark.domain();
    if domain.dim() != 2 {
        return Err(ExperimentError::Config(format!("{} is not two-dimensional", cfg.benchmark.name())));
    }
    if cfg.resolution == 0 || cfg.eps.is_empty() || cfg.eps.iter().any(|e| !(*e > 0.0)) {
        return Err(ExperimentError::Config("need a positive resolution and positive nuggets".into()));
    }
    let (unit_pts, values): (Vec<Vec<f64>>, Vec<f64>) = match cfg.source {
        SampleSource::Random { n } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let u: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
            let v = u.iter().map(|p| cfg.benchmark.eval(&domain.from_unit(p))).collect();
            (u, v)
        }
        SampleSource::Ego {
            n_init,
            n_iter,
            reference_eps,
        } => {
            let kernel = if cfg.select_length_scale {
                KernelSetting::Select {
                    template: cfg.kernel,
                    grid: default_length_scale_grid(),
                }
            } else {
                KernelSetting::Fixed(cfg.kernel)
            };
            let mut run = RunConfig::new(domain.clone(), kernel);
            run.n_init = n_init;
            run.n_iter = n_iter;
            run.nugget = reference_eps;
            run.seed = cfg.seed;
            run.f_star = FStar::Known(cfg.benchmark.f_star());
            run.initial_design = InitialDesign::LatinHypercube;
            run.acquisition_budget = cfg.acquisition_budget;
            run.standardize_outputs = cfg.standardize_outputs;
            let mut obj = cfg.benchmark;
            let trace = run_practical_ego(&mut obj, &run).map_err(|source| ExperimentError::Run {
                rep: 0,
                eps: reference_eps,
                source,
            })?;
            let v = trace
                .initial
                .iter()
                .map(|s| s.f)
                .chain(trace.rows.iter().map(|r| r.sample.f))
                .collect();
            (trace.unit_points(), v)
        }
    };

    let grid = grid_points(&domain, cfg.resolution);
    let unit_grid: Vec<Vec<f64>> = grid.iter().map(|x| domain.to_unit(x)).collect();
    let (shift, scale) = if cfg.standardize_outputs {
        standardization(&values)
    } else {
        (0.0, 1.0)
    };
    let fit_values: Vec<f64> = values.iter().map(|v| (v - shift) / scale).collect();
    let inc = Incumbent::from_observations(&unit_pts, &fit_values)
        .ok_or_else(|| ExperimentError::Config("empty sample set".into()))?;
    let mut surfaces = Vec::with_capacity(cfg.eps.len());
    for &eps in &cfg.eps {
        let params = if cfg.select_length_scale {
            select_length_scale(&unit_pts, &fit_values, &cfg.kernel, eps, &default_length_scale_grid())
        } else {
            Ok(cfg.kernel)
        }
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
        let model = GpModel::fit(&unit_pts, &fit_values, params, eps).map_err(|e| ExperimentError::Config(e.to_string()))?;
        let mut scratch = PosteriorScratch::new(model.len());
        let vals: Vec<f64> = unit_grid
            .iter()
            .map(|u| scale * ei_from_stats(model.posterior_with(u, &mut scratch), inc.f_plus))
            .collect();
        let (imax, max) = vals
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        surfaces.push(EiSurface {
            eps,
            length_scale: params.length_scale(),
            values: vals,
            max,
            argmax: grid[imax].clone(),
        });
    }
    Ok(EiGridResult {
        samples: unit_pts.iter().map(|u| domain.from_unit(u)).collect(),
        values,
        resolution: cfg.resolution,
        domain,
        surfaces,
    })
}

impl EiGridResult {
    /// Long-format CSV `epsilon,x_1,x_2,ei`.
    pub fn to_csv(&self) -> String {
        let grid = grid_points(&self.domain, self.resolution);
        let mut out = String::from("epsilon,x_1,x_2,ei\n");
        for s in &self.surfaces {
            for (x, v) in grid.iter().zip(&s.values) {
                let _ = writeln!(out, "{:e},{:e},{:e},{:e}", s.eps, x[0], x[1], v);
            }
        }
        out
    }

    pub fn maxima_csv(&self) -> String {
        let mut out = String::from("epsilon,length_scale,max_ei,x_1,x_2\n");
        for s in &self.surfaces {
            let _ = writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e}",
                s.eps, s.length_scale, s.max, s.argmax[0], s.argmax[1]
            );
        }
        out
    }

    pub fn max_for(&self, eps: f64) -> Option<f64> {
        self.surfaces.iter().find(|s| s.eps == eps).map(|s| s.max)
    }
}
