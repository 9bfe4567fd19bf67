//! Expected improvement and its maximization over a box.

use rand::Rng;

use crate::domain::Domain;
use crate::gp::{GpError, GpModel, PosteriorScratch, PosteriorStats};
use crate::kernels::KernelError;
use crate::search::compass_maximize;
use crate::special::ei_tradeoff_unchecked;

/// Evaluations per dimension used when no acquisition budget is configured.
pub const DEFAULT_BUDGET_PER_DIM: usize = 2048;

const STARTS: usize = 5;
const RANDOM_FRACTION: f64 = 0.8;
const INITIAL_STEP: f64 = 0.1;
const MIN_STEP: f64 = 1e-6;

/// Best observed value and where it was observed.
#[derive(Debug, Clone, PartialEq)]
pub struct Incumbent {
    pub f_plus: f64,
    pub x_plus: Vec<f64>,
}

impl Incumbent {
    /// Smallest observation; the first one wins ties. `None` for empty input.
    pub fn from_observations(points: &[Vec<f64>], values: &[f64]) -> Option<Self> {
        let mut best: Option<usize> = None;
        for (i, v) in values.iter().enumerate() {
            if best.map_or(true, |b| *v < values[b]) {
                best = Some(i);
            }
        }
        best.map(|i| Self {
            f_plus: values[i],
            x_plus: points[i].clone(),
        })
    }
}

/// EI from posterior statistics; a zero standard deviation yields the plain improvement.
pub fn ei_from_stats(stats: PosteriorStats, f_plus: f64) -> f64 {
    let a = f_plus - stats.mean;
    if stats.std > 0.0 {
        ei_tradeoff_unchecked(a, stats.std)
    } else {
        a.max(0.0)
    }
}

/// `(f⁺ − μ)Φ(z) + σφ(z)` with `z = (f⁺ − μ)/σ`.
pub fn expected_improvement(model: &GpModel, inc: &Incumbent, x: &[f64]) -> Result<f64, GpError> {
    let stats = model.posterior(x)?;
    Ok(ei_from_stats(stats, inc.f_plus))
}

struct Evaluator<'a> {
    model: &'a GpModel,
    f_plus: f64,
    scratch: PosteriorScratch,
    used: usize,
}

impl Evaluator<'_> {
    fn ei(&mut self, x: &[f64]) -> f64 {
        self.used += 1;
        ei_from_stats(self.model.posterior_with(x, &mut self.scratch), self.f_plus)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionResult {
    pub x: Vec<f64>,
    pub ei: f64,
    pub evaluations: usize,
}

/// Multistart maximization of EI over `domain`.

/// Spends `⌈0.8·budget⌉` evaluations on the incumbent and uniform random candidates, then refines
/// the five best with a compass search that shares the rest of the budget.
/// Ties keep the first point found.
pub fn maximize_acquisition<R: Rng + ?Sized>(
    model: &GpModel,
    inc: &Incumbent,
    domain: &Domain,
    budget: usize,
    rng: &mut R,
) -> Result<AcquisitionResult, GpError> {
    if let Some(d) = model.dim() {
        if d != domain.dim() {
            return Err(KernelError::DimensionMismatch {
                expected: d,
                found: domain.dim(),
            }
            .into());
        }
    }
    let budget = budget.max(1);
    let mut eval = Evaluator {
        model,
        f_plus: inc.f_plus,
        scratch: PosteriorScratch::new(model.len()),
        used: 0,
    };

    let n_random = ((budget as f64 * RANDOM_FRACTION).ceil() as usize).clamp(1, budget);
    // (ei, x), sorted by decreasing ei; insertion after equals keeps first-found order
    let mut top: Vec<(f64, Vec<f64>)> = Vec::with_capacity(STARTS + 1);
    for i in 0..n_random {
        // the incumbent is always a candidate: once the model has converged, EI
        // underflows to zero on most of the box and the region where it does not
        // can be far smaller than the spacing of the random candidates
        let x: Vec<f64> = if i == 0 && domain.contains(&inc.x_plus) {
            inc.x_plus.clone()
        } else {
            domain.bounds().iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)).collect()
        };
        let v = eval.ei(&x);
        let pos = top.iter().position(|(e, _)| v > *e).unwrap_or(top.len());
        if pos < STARTS {
            top.insert(pos, (v, x));
            top.truncate(STARTS);
        }
    }

    let (mut best_ei, mut best_x) = top[0].clone();
    let per_start = (budget - eval.used) / top.len();
    for (ei0, x0) in &top {
        let mut f = |x: &[f64]| eval.ei(x);
        let out = compass_maximize(&mut f, domain, x0.clone(), *ei0, INITIAL_STEP, MIN_STEP, per_start);
        if out.value > best_ei {
            best_ei = out.value;
            best_x = out.x;
        }
    }
    Ok(AcquisitionResult {
        x: best_x,
        ei: best_ei,
        evaluations: eval.used,
    })
}
