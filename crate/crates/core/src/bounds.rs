//! Regret bounds for practical EGO and the effect of the nugget on them.
//!
//! Everything here is a closed-form expression in the RKHS-norm bound `B`, the
//! nugget `ε`, the horizon `T` and kernel-specific information-gain constants.
//! All logarithms are natural.

use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::special::{pdf, tau};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("RKHS norm bound must be positive and finite, got {0}")]
    InvalidNormBound(f64),
    #[error("nugget must be positive and finite, got {0}")]
    InvalidNugget(f64),
    #[error("{name} must be nonnegative and finite, got {value}")]
    InvalidInput { name: &'static str, value: f64 },
    #[error("{what}: logarithm argument {arg:e} is out of range")]
    LogDomain { what: &'static str, arg: f64 },
    #[error("invalid information-gain constants: {0}")]
    InvalidConstants(String),
}

/// `√(ε / (t + ε))`, the smallest posterior standard deviation after `t` observations.
pub fn sigma_floor(eps: f64, t: f64) -> f64 {
    (eps / (t + eps)).sqrt()
}

/// `C_γ(ε) = 2 / log(1 + 1/ε)`
pub fn c_gamma(eps: f64) -> f64 {
    2.0 / (1.0 / eps).ln_1p()
}

fn check_nugget(eps: f64) -> Result<(), BoundError> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(BoundError::InvalidNugget(eps))
    }
}

fn check_nonneg(name: &'static str, value: f64) -> Result<(), BoundError> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(BoundError::InvalidInput { name, value })
    }
}

/// `√log((t + ε) / (2π τ²(−B) ε))`
///
/// Fails when the argument is below 1, i.e. when `τ(−B)·√(ε/(t+ε)) > 1/√(2π)`.
/// Since `2π τ²(−B) < 1` for `B > 0`, that can only happen for `t < 0`.
pub fn c_b_eps(eps: f64, t: f64, b: f64) -> Result<f64, BoundError> {
    check_nugget(eps)?;
    if !t.is_finite() {
        return Err(BoundError::InvalidInput { name: "t", value: t });
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(BoundError::InvalidNormBound(b));
    }
    let tm = tau(-b);
    let arg = (t + eps) / (2.0 * std::f64::consts::PI * tm * tm * eps);
    if !(arg >= 1.0) {
        return Err(BoundError::LogDomain { what: "c_B_eps", arg });
    }
    Ok(arg.ln().sqrt())
}

/// The norm bound `B`, the nugget `ε`, and every constant derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    b: f64,
    eps: f64,
}

impl BoundConstants {
    pub fn new(b: f64, eps: f64) -> Result<Self, BoundError> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(BoundError::InvalidNormBound(b));
        }
        check_nugget(eps)?;
        Ok(Self { b, eps })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `τ(B) / τ(−B)`
    pub fn c_b(&self) -> f64 {
        tau(self.b) / tau(-self.b)
    }

    /// `max{c_B − 1, 0}`
    pub fn c_b1(&self) -> f64 {
        (self.c_b() - 1.0).max(0.0)
    }

    /// `2 c_B1 B`
    pub fn c_r1(&self) -> f64 {
        2.0 * self.c_b1() * self.b
    }

    /// `log(1 / (2π τ²(−B)))`
    pub fn c_r2(&self) -> f64 {
        let tm = tau(-self.b);
        -(2.0 * std::f64::consts::PI * tm * tm).ln()
    }

    /// `B + c_B (B + φ(0))`
    pub fn c_r3(&self) -> f64 {
        self.b + self.c_b() * (self.b + pdf(0.0))
    }

    /// `C_R² + (C_R³)²`
    pub fn c_r4(&self) -> f64 {
        self.c_r2() + self.c_r3() * self.c_r3()
    }

    pub fn c_b_eps(&self, t: f64) -> Result<f64, BoundError> {
        c_b_eps(self.eps, t, self.b)
    }

    pub fn c_gamma(&self) -> f64 {
        c_gamma(self.eps)
    }
}

/// Upper bound on `r_t` given the incumbent before step `t`, the observed
/// value and the posterior standard deviation at the chosen point.
pub fn instantaneous_bound(
    f_plus_prev: f64,
    f_t: f64,
    sigma_prev: f64,
    bc: &BoundConstants,
    t: f64,
) -> Result<f64, BoundError> {
    check_nonneg("sigma", sigma_prev)?;
    let exploit = (f_plus_prev - f_t).max(0.0);
    Ok(bc.c_b1() * exploit + (bc.c_b_eps(t)? + bc.c_r3()) * sigma_prev)
}

/// `2 c_B1 B + (c_Bε(ε,T) + B + c_B(B + φ(0))) √(C_γ(ε) T γ_T)`
pub fn cumulative_bound(t: f64, bc: &BoundConstants, gamma: f64) -> Result<f64, BoundError> {
    check_nonneg("gamma", gamma)?;
    check_nonneg("T", t)?;
    Ok(bc.c_r1() + (bc.c_b_eps(t)? + bc.c_r3()) * (bc.c_gamma() * t * gamma).sqrt())
}

/// Constants of the information-gain upper bound for one kernel family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kernel", rename_all = "snake_case")]
pub enum MigConstants {
    SquaredExponential {
        d: usize,
        c1: f64,
        c2: f64,
        c3: f64,
    },
    Matern {
        nu: f64,
        d: usize,
        /// `C_ν`, entering through `C_ν² = Γ(ν)/C_ν`.
        c_nu: f64,
        c_dnl1: f64,
        c_dnl2: f64,
        /// Additive constant `C`.
        c: f64,
    },
}

impl MigConstants {
    /// SE constants all equal to one.
    pub fn unit_se(d: usize) -> Self {
        MigConstants::SquaredExponential {
            d,
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
        }
    }

    /// Matérn constants all equal to one.
    pub fn unit_matern(nu: f64, d: usize) -> Self {
        MigConstants::Matern {
            nu,
            d,
            c_nu: 1.0,
            c_dnl1: 1.0,
            c_dnl2: 1.0,
            c: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), BoundError> {
        let bad = |m: &str| Err(BoundError::InvalidConstants(m.to_string()));
        match *self {
            MigConstants::SquaredExponential { d, c1, c2, c3 } => {
                if d == 0 {
                    return bad("d must be at least 1");
                }
                if ![c1, c2, c3].iter().all(|v| v.is_finite()) || c1 <= 0.0 {
                    return bad("SE constants must be finite with c1 > 0");
                }
            }
            MigConstants::Matern {
                nu,
                d,
                c_nu,
                c_dnl1,
                c_dnl2,
                c,
            } => {
                if d == 0 {
                    return bad("d must be at least 1");
                }
                if !(nu > 0.5 && nu.is_finite()) {
                    return bad("smoothness must exceed 1/2");
                }
                if ![c_nu, c_dnl1, c_dnl2].iter().all(|v| *v > 0.0 && v.is_finite()) || !c.is_finite() {
                    return bad("Matérn constants must be finite and positive");
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match *self {
            MigConstants::SquaredExponential { d, .. } | MigConstants::Matern { d, .. } => d,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            MigConstants::SquaredExponential { .. } => "SE",
            MigConstants::Matern { .. } => "Matern",
        }
    }

    /// Growth exponent of the cumulative-regret bound in `T`, log factors aside.
    pub fn rate_exponent(&self) -> f64 {
        match *self {
            MigConstants::SquaredExponential { .. } => 0.5,
            MigConstants::Matern { nu, d, .. } => (nu + d as f64) / (2.0 * nu + d as f64),
        }
    }

    /// Power of `log T` accompanying [`rate_exponent`](Self::rate_exponent).
    pub fn rate_log_power(&self) -> f64 {
        match *self {
            MigConstants::SquaredExponential { d, .. } => (d as f64 + 2.0) / 2.0,
            MigConstants::Matern { nu, d, .. } => (2.0 * nu + 0.5 * d as f64) / (2.0 * nu + d as f64),
        }
    }

    /// The bound `s_T(ε) ≥ γ_T(ε)`.
    pub fn upper(&self, eps: f64, t: f64) -> Result<MigValue, BoundError> {
        match *self {
            MigConstants::SquaredExponential { d, c1, c2, c3 } => Ok(MigValue {
                value: mig_se_upper(eps, t, d, c1, c2, c3)?,
                precondition_holds: true,
            }),
            MigConstants::Matern { .. } => mig_matern_upper(eps, t, self),
        }
    }
}

/// The four `C_ν^i` of the Matérn information-gain bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaternNuConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

pub fn matern_nu_constants(nu: f64, c_nu: f64) -> MaternNuConstants {
    let g = gamma_fn(nu);
    MaternNuConstants {
        c1: 1.0 / std::f64::consts::LN_2,
        c2: g / c_nu,
        c3: 1.0 / nu,
        c4: (1.0 / nu) * (1.0 / (nu * g)).ln() + std::f64::consts::LN_2,
    }
}

/// Gamma function via the Lanczos approximation (g = 7, 9 terms).
pub fn gamma_fn(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma_fn(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MigValue {
    pub value: f64,
    /// False when the bound's own precondition (`c_T^0 ≥ 1` for Matérn) fails.
    pub precondition_holds: bool,
}

/// `C¹[log^{d+1}(1+T/ε) + C² log(1+T/ε) + C³]`
pub fn mig_se_upper(eps: f64, t: f64, d: usize, c1: f64, c2: f64, c3: f64) -> Result<f64, BoundError> {
    check_nugget(eps)?;
    check_nonneg("T", t)?;
    let l = (t / eps).ln_1p();
    Ok(c1 * (l.powi(d as i32 + 1) + c2 * l + c3))
}

/// `c_T^0(ε)·γ̄_T(ε) + C` for a Matérn kernel.
pub fn mig_matern_upper(eps: f64, t: f64, mc: &MigConstants) -> Result<MigValue, BoundError> {
    let MigConstants::Matern {
        nu,
        d,
        c_nu,
        c_dnl1,
        c_dnl2,
        c,
    } = *mc
    else {
        return Err(BoundError::InvalidConstants("expected Matérn constants".into()));
    };
    check_nugget(eps)?;
    check_nonneg("T", t)?;
    let k = matern_nu_constants(nu, c_nu);
    let lt = (t * t / eps).ln();
    let inner = 1.0 + k.c2 * lt;
    if !(inner > 0.0) {
        return Err(BoundError::LogDomain {
            what: "c_T^0",
            arg: inner,
        });
    }
    let c0 = k.c1 * (inner.ln() + k.c3 * lt + k.c4);
    let df = d as f64;
    let l2 = (2.0 * t / eps).ln_1p();
    let gbar = c_dnl1
        * (l2 + c_dnl2 * (t / eps).powf(df / (2.0 * nu + df)) * l2.powf(2.0 * nu / (2.0 * nu + df)));
    Ok(MigValue {
        value: c0 * gbar + c,
        precondition_holds: c0 >= 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UCurvePoint {
    pub s_t: f64,
    pub c_t: f64,
    pub u_t: f64,
    /// `C_R¹ + u_T`, the full cumulative-regret bound.
    pub bound: f64,
    pub precondition_holds: bool,
}

/// `c_T(ε)`, `u_T(ε) = √(2 c_T T)` and the bound `C_R¹ + u_T` for the given `s_T`.
pub fn u_t_from_gain(t: f64, bc: &BoundConstants, s_t: f64) -> Result<(f64, f64), BoundError> {
    check_nonneg("s_T", s_t)?;
    let eps = bc.eps();
    let l = (t / eps).ln_1p();
    let c_r2 = bc.c_r2();
    if !(l + c_r2 >= 0.0) {
        return Err(BoundError::LogDomain {
            what: "c_T",
            arg: l + c_r2,
        });
    }
    let lead = l + 2.0 * bc.c_r3() * (l + c_r2).sqrt() + bc.c_r4();
    let c_t = lead / (1.0 / eps).ln_1p() * s_t;
    Ok((c_t, (2.0 * c_t * t).sqrt()))
}

pub fn u_t_curve(t: f64, bc: &BoundConstants, mc: &MigConstants) -> Result<UCurvePoint, BoundError> {
    let s = mc.upper(bc.eps(), t)?;
    let (c_t, u_t) = u_t_from_gain(t, bc, s.value)?;
    Ok(UCurvePoint {
        s_t: s.value,
        c_t,
        u_t,
        bound: bc.c_r1() + u_t,
        precondition_holds: s.precondition_holds,
    })
}

/// Which monotonicity regime of the bound in `ε` applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuggetCase {
    /// The bound decreases as `ε` grows.
    Case1,
    /// The bound increases as `ε` grows.
    Case2,
    Other,
}

impl fmt::Display for NuggetCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NuggetCase::Case1 => "case1",
            NuggetCase::Case2 => "case2",
            NuggetCase::Other => "other",
        })
    }
}

impl std::str::FromStr for NuggetCase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "case1" => Ok(NuggetCase::Case1),
            "case2" => Ok(NuggetCase::Case2),
            "other" => Ok(NuggetCase::Other),
            other => Err(format!("unknown case label {other:?}")),
        }
    }
}

pub fn classify_se(eps: f64, t: f64, d: usize) -> NuggetCase {
    let a = (1.0 / eps).ln_1p();
    let l = (t / eps).ln_1p();
    let df = d as f64;
    let case1 = (df + 1.0) * a > l;
    let case2 = (df + 2.0) * a < (1.0 + eps / t) / (1.0 + eps) * l;
    debug_assert!(!(case1 && case2) || t < 1.0, "SE nugget cases overlap at eps={eps}, T={t}");
    if case1 {
        NuggetCase::Case1
    } else if case2 {
        NuggetCase::Case2
    } else {
        NuggetCase::Other
    }
}

pub fn classify_matern(eps: f64, t: f64, mc: &MigConstants) -> NuggetCase {
    let MigConstants::Matern {
        nu,
        d,
        c_nu,
        c_dnl1,
        c_dnl2,
        c,
    } = *mc
    else {
        panic!("classify_matern needs Matérn constants");
    };
    let k = matern_nu_constants(nu, c_nu);
    let df = d as f64;
    let a = (1.0 / eps).ln_1p();
    let ratio = df / (2.0 * nu + df);
    let case1 = a * ratio > 1.0 + 1.0 / c_dnl2 && k.c1 * c_dnl1 * k.c3 * a * (2.0 * t / eps).ln_1p() > c;
    let log_te = (t / eps).ln();
    let case2 = log_te > 0.0
        && a * (ratio + k.c1 * k.c3 + ((4.0 * nu + df) / (2.0 * nu + df) + k.c1) / log_te) < 1.0 / (1.0 + eps);
    if case1 {
        NuggetCase::Case1
    } else if case2 {
        NuggetCase::Case2
    } else {
        NuggetCase::Other
    }
}

pub fn classify(eps: f64, t: f64, mc: &MigConstants) -> NuggetCase {
    match mc {
        MigConstants::SquaredExponential { d, .. } => classify_se(eps, t, *d),
        MigConstants::Matern { .. } => classify_matern(eps, t, mc),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub kernel: String,
    pub t: f64,
    pub eps: f64,
    pub c_t: f64,
    pub u_t: f64,
    pub case: NuggetCase,
}

/// Evaluate `c_T`, `u_T` and the case label on every `(T, ε)` cell, `T` outermost.
pub fn sweep_nugget(
    t_list: &[f64],
    eps_grid: &[f64],
    b: f64,
    mc: &MigConstants,
) -> Result<Vec<SweepRow>, BoundError> {
    mc.validate()?;
    if eps_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(BoundError::InvalidConstants("nugget grid must be strictly ascending".into()));
    }
    let mut rows = Vec::with_capacity(t_list.len() * eps_grid.len());
    for &t in t_list {
        for &eps in eps_grid {
            let bc = BoundConstants::new(b, eps)?;
            let p = u_t_curve(t, &bc, mc)?;
            rows.push(SweepRow {
                kernel: mc.label().to_string(),
                t,
                eps,
                c_t: p.c_t,
                u_t: p.u_t,
                case: classify(eps, t, mc),
            });
        }
    }
    Ok(rows)
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("kernel,T,epsilon,c_T,u_T,case\n");
    for r in rows {
        let _ = writeln!(out, "{},{:e},{:e},{:e},{:e},{}", r.kernel, r.t, r.eps, r.c_t, r.u_t, r.case);
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SignAgreement {
    pub labeled: usize,
    pub agreeing: usize,
}

impl SignAgreement {
    pub fn all_agree(&self) -> bool {
        self.labeled == self.agreeing
    }
}

/// Compare the central-difference sign of `c_T` in `ε` with each interior
/// cell's label: case 1 expects a decrease, case 2 an increase.
pub fn case_sign_agreement(rows: &[SweepRow]) -> SignAgreement {
    let mut out = SignAgreement::default();
    let mut start = 0;
    while start < rows.len() {
        let mut end = start + 1;
        while end < rows.len() && rows[end].t == rows[start].t {
            end += 1;
        }
        let group = &rows[start..end];
        for i in 1..group.len().saturating_sub(1) {
            let slope = group[i + 1].c_t - group[i - 1].c_t;
            let ok = match group[i].case {
                NuggetCase::Case1 => slope < 0.0,
                NuggetCase::Case2 => slope > 0.0,
                NuggetCase::Other => continue,
            };
            out.labeled += 1;
            out.agreeing += ok as usize;
        }
        start = end;
    }
    out
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Growth exponent of `u_T` over `t_list` after removing the rate's log factor
/// `log^p(1 + T/ε)`.
pub fn u_t_rate(t_list: &[f64], eps: f64, b: f64, mc: &MigConstants) -> Result<f64, BoundError> {
    let bc = BoundConstants::new(b, eps)?;
    let p = mc.rate_log_power();
    let mut ys = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let u = u_t_curve(t, &bc, mc)?.u_t;
        ys.push(u / (t / eps).ln_1p().powf(p));
    }
    Ok(loglog_slope(t_list, &ys))
}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    crate::gp::log_spaced(lo, hi, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{LN_2, PI};

    #[test]
    fn floor_and_gamma_values() {
        assert_eq!(sigma_floor(0.3, 0.0), 1.0);
        assert!((sigma_floor(1.0, 1.0) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((c_gamma(1.0) - 2.0 / LN_2).abs() < 1e-15);
        assert!((c_gamma(1e-6) - 2.0 / (1.0f64 + 1e6).ln()).abs() < 1e-15);
        assert!(c_gamma(1e-3) < c_gamma(1e-1));
    }

    #[test]
    fn constants_for_unit_norm() {
        let bc = BoundConstants::new(1.0, 1e-6).unwrap();
        assert!((bc.c_b() - 13.0026).abs() < 1e-3);
        assert!((bc.c_r2() - 3.1324).abs() < 1e-3);
        assert!((bc.c_r3() - 19.1898).abs() < 1e-3);
        assert!((bc.c_r4() - 371.38).abs() < 1e-2);
        assert_eq!(bc.c_b1(), bc.c_b() - 1.0);
        assert!(BoundConstants::new(0.0, 1e-6).is_err());
        assert!(BoundConstants::new(1.0, -1.0).is_err());
    }

    #[test]
    fn c_b_eps_boundary_and_kappa_form() {
        let b = 1.0;
        let tm = tau(-b);
        // t chosen so that the log argument is exactly 1
        let eps = 0.5;
        let t = eps * (2.0 * PI * tm * tm - 1.0) + 1e-13;
        assert!(c_b_eps(eps, t, b).unwrap().abs() < 1e-5);
        assert!(c_b_eps(eps, 0.0, b).unwrap() < c_b_eps(eps, 1.0, b).unwrap());
        let (eps, t) = (1e-6_f64, 100.0_f64);
        let kappa = tm * (eps / (t + eps)).sqrt();
        let via_kappa = (-2.0 * ((2.0 * PI).sqrt() * kappa).ln()).sqrt();
        assert!((c_b_eps(eps, t, b).unwrap() - via_kappa).abs() < 1e-12);
        assert!(matches!(c_b_eps(1.0, -0.999, 1.0), Err(BoundError::LogDomain { .. })));
    }

    #[test]
    fn bound_degenerate_cases() {
        let bc = BoundConstants::new(2.0, 1e-4).unwrap();
        assert_eq!(cumulative_bound(50.0, &bc, 0.0).unwrap(), bc.c_r1());
        let floor = sigma_floor(1e-4, 10.0);
        let v = instantaneous_bound(0.0, 0.0, floor, &bc, 10.0).unwrap();
        let expected = (bc.c_b_eps(10.0).unwrap() + bc.c_r3()) * floor;
        assert!((v - expected).abs() < 1e-15);
        assert!(cumulative_bound(50.0, &bc, -1.0).is_err());
    }

    #[test]
    fn two_paths_agree() {
        let mc = MigConstants::unit_se(2);
        for &eps in &[1e-10, 1e-6, 1e-2, 0.5] {
            for &t in &[10.0, 1e3, 1e6] {
                let bc = BoundConstants::new(1.0, eps).unwrap();
                let p = u_t_curve(t, &bc, &mc).unwrap();
                let direct = cumulative_bound(t, &bc, p.s_t).unwrap();
                assert!((direct - p.bound).abs() <= 1e-9 * direct.max(1.0), "{direct} vs {}", p.bound);
            }
        }
    }

    #[test]
    fn se_gain_bound_values() {
        let eps = 1.0;
        let t = std::f64::consts::E - 1.0;
        assert!((mig_se_upper(eps, t, 2, 1.0, 1.0, 1.0).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn matern_constants() {
        let k = matern_nu_constants(2.5, 1.0);
        assert!((k.c1 - 1.0 / LN_2).abs() < 1e-15);
        assert!((k.c3 - 0.4).abs() < 1e-15);
        assert!((k.c2 - 1.329_340_388_179_137).abs() < 1e-12);
        assert!((gamma_fn(5.0) - 24.0).abs() < 1e-10);
        assert!((gamma_fn(0.5) - PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn matern_dominant_term_scaling() {
        let mc = MigConstants::unit_matern(2.5, 3);
        let eps = 1e-6;
        let t = 1e12;
        let MigConstants::Matern { .. } = mc else { unreachable!() };
        let term = |t: f64| (t / eps).powf(3.0 / 8.0);
        assert!((term(2.0 * t) / term(t) - 2f64.powf(0.375)).abs() < 1e-12);
        let a = mig_matern_upper(eps, t, &mc).unwrap().value;
        let b = mig_matern_upper(eps, 2.0 * t, &mc).unwrap().value;
        let ratio = b / a;
        assert!(ratio > 2f64.powf(0.375) && ratio < 2f64.powf(0.375) * 1.1, "{ratio}");
    }

    #[test]
    fn matern_precondition_flag() {
        let mc = MigConstants::unit_matern(2.5, 3);
        assert!(mig_matern_upper(1e-6, 100.0, &mc).unwrap().precondition_holds);
        let small = mig_matern_upper(0.9, 1.0, &mc).unwrap();
        assert!(!small.precondition_holds);
    }

    #[test]
    fn se_classification() {
        assert_eq!(classify_se(1e-12, 1e6, 2), NuggetCase::Case1);
        assert_eq!(classify_se(0.9, 1e6, 2), NuggetCase::Case2);
        assert_eq!(classify_se(1e-2, 1e6, 2), NuggetCase::Other);
    }

    #[test]
    fn matern_classification() {
        let mc = MigConstants::unit_matern(2.5, 3);
        assert_eq!(classify_matern(1e-10, 1e4, &mc), NuggetCase::Case1);
        let mc1 = MigConstants::unit_matern(2.5, 1);
        assert_eq!(classify_matern(10.0, 1e12, &mc1), NuggetCase::Case2);
        assert_eq!(classify_matern(0.5, 1e4, &mc), NuggetCase::Other);
    }

    #[test]
    fn sweep_shape_and_csv() {
        let rows = sweep_nugget(&[1e2, 1e4], &[1e-6, 1e-4, 1e-2], 1.0, &MigConstants::unit_se(2)).unwrap();
        assert_eq!(rows.len(), 6);
        let csv = sweep_to_csv(&rows);
        assert_eq!(csv.lines().count(), 7);
        assert!(csv.starts_with("kernel,T,epsilon,c_T,u_T,case\n"));
        assert!(sweep_nugget(&[1e2], &[1e-2, 1e-4], 1.0, &MigConstants::unit_se(2)).is_err());
        let single = sweep_nugget(&[1e2], &[1e-3], 1.0, &MigConstants::unit_se(2)).unwrap();
        assert_eq!(single.len(), 1);
    }

    #[test]
    fn case_label_round_trip() {
        for c in [NuggetCase::Case1, NuggetCase::Case2, NuggetCase::Other] {
            assert_eq!(c.to_string().parse::<NuggetCase>().unwrap(), c);
        }
    }
}
