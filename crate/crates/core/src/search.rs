//! Derivative-free local search inside a box.

use crate::domain::Domain;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Compass search that maximizes `f` starting from `(x, fx)`.
///
/// Steps are fractions of each axis' width; the step halves whenever a full
/// sweep over `±e_i` fails to improve, and the search stops once it drops
/// below `min_step` or `max_evals` evaluations were spent.
pub fn compass_maximize<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    domain: &Domain,
    mut x: Vec<f64>,
    mut fx: f64,
    initial_step: f64,
    min_step: f64,
    max_evals: usize,
) -> SearchOutcome {
    let mut step = initial_step;
    let mut used = 0;
    let mut trial = x.clone();
    while step >= min_step && used < max_evals {
        let mut improved = false;
        'axes: for (i, &(lo, hi)) in domain.bounds().iter().enumerate() {
            for sign in [1.0, -1.0] {
                if used >= max_evals {
                    break 'axes;
                }
                let cand = (x[i] + sign * step * (hi - lo)).clamp(lo, hi);
                if cand == x[i] {
                    continue;
                }
                trial.copy_from_slice(&x);
                trial[i] = cand;
                let v = f(&trial);
                used += 1;
                if v > fx {
                    fx = v;
                    x.copy_from_slice(&trial);
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    SearchOutcome {
        x,
        value: fx,
        evaluations: used,
    }
}

/// Minimize `f` over `probes` and polish the best probe with a compass search.
pub fn probe_and_polish<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    domain: &Domain,
    probes: &[Vec<f64>],
    polish_evals: usize,
) -> SearchOutcome {
    assert!(!probes.is_empty(), "need at least one probe");
    let mut best = (f64::INFINITY, 0);
    for (i, p) in probes.iter().enumerate() {
        let v = f(p);
        if v < best.0 {
            best = (v, i);
        }
    }
    let mut neg = |x: &[f64]| -f(x);
    let out = compass_maximize(&mut neg, domain, probes[best.1].clone(), -best.0, 0.05, 1e-9, polish_evals);
    SearchOutcome {
        x: out.x,
        value: -out.value,
        evaluations: probes.len() + out.evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_maximum() {
        let dom = Domain::new(vec![(-1.0, 1.0), (0.0, 4.0)]).unwrap();
        let mut f = |x: &[f64]| -((x[0] - 0.3).powi(2) + (x[1] - 2.5).powi(2));
        let f0 = f(&[0.0, 0.0]);
        let out = compass_maximize(&mut f, &dom, vec![0.0, 0.0], f0, 0.1, 1e-9, 10_000);
        assert!((out.x[0] - 0.3).abs() < 1e-6 && (out.x[1] - 2.5).abs() < 1e-6);
        assert!(out.evaluations <= 10_000);
    }

    #[test]
    fn respects_budget_and_box() {
        let dom = Domain::unit_cube(3).unwrap();
        let mut calls = 0;
        let mut f = |x: &[f64]| {
            calls += 1;
            x.iter().sum::<f64>()
        };
        let out = compass_maximize(&mut f, &dom, vec![0.5; 3], 1.5, 0.1, 1e-6, 7);
        assert_eq!(out.evaluations, 7);
        assert!(dom.contains(&out.x));
        assert_eq!(calls, 7);
    }

    #[test]
    fn polish_improves_on_probes() {
        let dom = Domain::unit_cube(2).unwrap();
        let probes = crate::domain::halton(64, 2);
        let mut f = |x: &[f64]| (x[0] - 0.123).powi(2) + (x[1] - 0.789).powi(2);
        let out = probe_and_polish(&mut f, &dom, &probes, 2000);
        assert!(out.value < 1e-12);
    }
}
