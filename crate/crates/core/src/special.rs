//! Standard-normal scalars and the expected-improvement building blocks.
//!
//! `cdf` is evaluated through a complementary error function built from the
//! classic fdlibm rational approximations (|error| well below 1e-15), so that
//! tail quantities such as `tau(-B)` keep full relative accuracy.

use std::f64::consts::FRAC_1_SQRT_2;

use thiserror::Error;

/// 1/√(2π)
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Beyond this |a/b| the trade-off form switches to its asymptote.
pub const EI_ASYMPTOTIC_RATIO: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ScalarError {
    #[error("exploration term must be positive, got b = {0}")]
    NonPositiveScale(f64),
    #[error("non-finite input {0}")]
    NonFinite(f64),
}

/// φ(z)
#[inline]
pub fn pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Φ(z)
#[inline]
pub fn cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// τ(z) = zΦ(z) + φ(z), the expected improvement of a unit-variance
/// posterior with standardized exploitation `z`.
pub fn tau(z: f64) -> f64 {
    if z < -5.0 {
        tau_lower_tail(-z)
    } else {
        z * cdf(z) + pdf(z)
    }
}

/// `q` in `R(x) = 1 / (x + q)`, from the continued fraction `1/(x + 2/(x + 3/(x + ...)))`.
fn mills_tail(x: f64) -> f64 {
    const TERMS: usize = 120;
    let mut tail = 0.0;
    for k in (2..=TERMS).rev() {
        tail = k as f64 / (x + tail);
    }
    1.0 / (x + tail)
}

/// τ(-x) for large x without the cancellation in `φ(x) - xΦ(-x)`.
///
/// With the Mills ratio written as `R(x) = 1 / (x + q)`, where
/// `q = 1/(x + 2/(x + 3/(x + ...)))`, one gets `τ(-x) = φ(x) q / (x + q)`.
fn tau_lower_tail(x: f64) -> f64 {
    let q = mills_tail(x);
    pdf(x) * q / (x + q)
}

/// Trade-off form `EI(a, b) = aΦ(a/b) + bφ(a/b)` with exploitation `a` and
/// exploration `b`.
pub fn ei_tradeoff(a: f64, b: f64) -> Result<f64, ScalarError> {
    if !a.is_finite() {
        return Err(ScalarError::NonFinite(a));
    }
    if !b.is_finite() {
        return Err(ScalarError::NonFinite(b));
    }
    if b <= 0.0 {
        return Err(ScalarError::NonPositiveScale(b));
    }
    Ok(ei_tradeoff_unchecked(a, b))
}

#[inline]
pub(crate) fn ei_tradeoff_unchecked(a: f64, b: f64) -> f64 {
    let z = a / b;
    if z > EI_ASYMPTOTIC_RATIO {
        a
    } else if z < -EI_ASYMPTOTIC_RATIO {
        0.0
    } else {
        b * tau(z)
    }
}

const ERX: f64 = 8.45062911510467529297e-01;

const PP0: f64 = 1.28379167095512558561e-01;
const PP1: f64 = -3.25042107247001499370e-01;
const PP2: f64 = -2.84817495755985104766e-02;
const PP3: f64 = -5.77027029648944159157e-03;
const PP4: f64 = -2.37630166566501626084e-05;
const QQ1: f64 = 3.97917223959155352819e-01;
const QQ2: f64 = 6.50222499887672944485e-02;
const QQ3: f64 = 5.08130628187576562776e-03;
const QQ4: f64 = 1.32494738004321644526e-04;
const QQ5: f64 = -3.96022827877536812320e-06;

const PA0: f64 = -2.36211856075265944077e-03;
const PA1: f64 = 4.14856118683748331666e-01;
const PA2: f64 = -3.72207876035701323847e-01;
const PA3: f64 = 3.18346619901161753674e-01;
const PA4: f64 = -1.10894694282396677476e-01;
const PA5: f64 = 3.54783043256182359371e-02;
const PA6: f64 = -2.16637559486879084300e-03;
const QA1: f64 = 1.06420880400844228286e-01;
const QA2: f64 = 5.40397917702171048937e-01;
const QA3: f64 = 7.18286544141962662868e-02;
const QA4: f64 = 1.26171219808761642112e-01;
const QA5: f64 = 1.36370839120290507362e-02;
const QA6: f64 = 1.19844998467991074170e-02;

const RA0: f64 = -9.86494403484714822705e-03;
const RA1: f64 = -6.93858572707181764372e-01;
const RA2: f64 = -1.05586262253232909814e+01;
const RA3: f64 = -6.23753324503260060396e+01;
const RA4: f64 = -1.62396669462573470355e+02;
const RA5: f64 = -1.84605092906711035994e+02;
const RA6: f64 = -8.12874355063065934246e+01;
const RA7: f64 = -9.81432934416914548592e+00;
const SA1: f64 = 1.96512716674392571292e+01;
const SA2: f64 = 1.37657754143519042600e+02;
const SA3: f64 = 4.34565877475229228821e+02;
const SA4: f64 = 6.45387271733267880336e+02;
const SA5: f64 = 4.29008140027567833386e+02;
const SA6: f64 = 1.08635005541779435134e+02;
const SA7: f64 = 6.57024977031928170135e+00;
const SA8: f64 = -6.04244152148580987438e-02;

const RB0: f64 = -9.86494292470009928597e-03;
const RB1: f64 = -7.99283237680523006574e-01;
const RB2: f64 = -1.77579549177547519889e+01;
const RB3: f64 = -1.60636384855821916062e+02;
const RB4: f64 = -6.37566443368389627722e+02;
const RB5: f64 = -1.02509513161107724954e+03;
const RB6: f64 = -4.83519191608651397019e+02;
const SB1: f64 = 3.03380607434824582924e+01;
const SB2: f64 = 3.25792512996573918826e+02;
const SB3: f64 = 1.53672958608443695994e+03;
const SB4: f64 = 3.19985821950859553908e+03;
const SB5: f64 = 2.55305040643316442583e+03;
const SB6: f64 = 4.74528541206955367215e+02;
const SB7: f64 = -2.24409524465858183362e+01;

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let negative = x < 0.0;
    let ax = x.abs();

    if ax < 0.84375 {
        if ax < 1.387_778_780_781_445_7e-17 {
            return 1.0 - x;
        }
        let z = x * x;
        let r = PP0 + z * (PP1 + z * (PP2 + z * (PP3 + z * PP4)));
        let s = 1.0 + z * (QQ1 + z * (QQ2 + z * (QQ3 + z * (QQ4 + z * QQ5))));
        let y = r / s;
        return if x < 0.25 {
            1.0 - (x + x * y)
        } else {
            0.5 - (x * y + (x - 0.5))
        };
    }

    if ax < 1.25 {
        let s = ax - 1.0;
        let p = PA0 + s * (PA1 + s * (PA2 + s * (PA3 + s * (PA4 + s * (PA5 + s * PA6)))));
        let q = 1.0 + s * (QA1 + s * (QA2 + s * (QA3 + s * (QA4 + s * (QA5 + s * QA6)))));
        return if negative {
            1.0 + ERX + p / q
        } else {
            1.0 - ERX - p / q
        };
    }

    if ax >= 28.0 {
        return if negative { 2.0 } else { 0.0 };
    }
    if negative && ax > 6.0 {
        return 2.0;
    }

    let s = 1.0 / (ax * ax);
    let (r, big_s) = if ax < 1.0 / 0.35 {
        (
            RA0 + s * (RA1 + s * (RA2 + s * (RA3 + s * (RA4 + s * (RA5 + s * (RA6 + s * RA7)))))),
            1.0 + s
                * (SA1
                    + s * (SA2 + s * (SA3 + s * (SA4 + s * (SA5 + s * (SA6 + s * (SA7 + s * SA8))))))),
        )
    } else {
        (
            RB0 + s * (RB1 + s * (RB2 + s * (RB3 + s * (RB4 + s * (RB5 + s * RB6))))),
            1.0 + s * (SB1 + s * (SB2 + s * (SB3 + s * (SB4 + s * (SB5 + s * (SB6 + s * SB7)))))),
        )
    };
    // split ax so that exp(-ax^2) is formed without losing low-order bits
    let hi = f64::from_bits(ax.to_bits() & 0xffff_ffff_0000_0000);
    let tail = (-hi * hi - 0.5625).exp() * ((hi - ax) * (hi + ax) + r / big_s).exp() / ax;
    if negative {
        2.0 - tail
    } else {
        tail
    }
}

/// log(2π)
pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Composite Simpson on [lo, hi] with `n` (even) panels.
    fn simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
        let h = (hi - lo) / n as f64;
        let mut acc = f(lo) + f(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(lo + i as f64 * h);
        }
        acc * h / 3.0
    }

    /// Φ(z) as 1/2 ± ∫_0^|z| φ, integrated numerically.
    fn cdf_by_quadrature(z: f64) -> f64 {
        let half = simpson(pdf, 0.0, z.abs(), 20_000);
        if z >= 0.0 {
            0.5 + half
        } else {
            0.5 - half
        }
    }

    #[test]
    fn pdf_reference_values() {
        assert_eq!(pdf(0.0), 0.3989422804014327);
        assert!((pdf(1.0) - 0.24197072451914337).abs() < 1e-16);
        for z in [0.3, 1.7, 4.2, 9.0] {
            assert_eq!(pdf(z), pdf(-z));
        }
        assert!((LN_2PI - (2.0 * PI).ln()).abs() < 1e-15);
    }

    #[test]
    fn cdf_matches_quadrature() {
        assert_eq!(cdf(0.0), 0.5);
        assert!((cdf(1.96) - 0.9750021048517795).abs() < 1e-15);
        let mut z = -8.0;
        while z <= 8.0 {
            let oracle = cdf_by_quadrature(z);
            assert!((cdf(z) - oracle).abs() < 1e-12, "z = {z}");
            z += 0.173;
        }
    }

    #[test]
    fn cdf_symmetry_and_monotonicity() {
        let mut prev = 0.0;
        let mut z = -12.0;
        while z <= 12.0 {
            assert!((cdf(z) + cdf(-z) - 1.0).abs() < 1e-15);
            let c = cdf(z);
            assert!(c >= prev);
            prev = c;
            z += 0.01;
        }
    }

    #[test]
    fn cdf_lower_tail_relative_accuracy() {
        // Φ(-x) ≈ φ(x)/x (1 - 1/x² + 3/x⁴ - 15/x⁶ + 105/x⁸)
        for x in [10.0_f64, 15.0, 20.0, 30.0] {
            let series = pdf(x) / x
                * (1.0 - 1.0 / x.powi(2) + 3.0 / x.powi(4) - 15.0 / x.powi(6) + 105.0 / x.powi(8));
            let rel = (cdf(-x) - series).abs() / series;
            assert!(rel < 1e-7, "x = {x}, rel = {rel}");
        }
    }

    #[test]
    fn tau_values() {
        assert_eq!(tau(0.0), pdf(0.0));
        assert!((tau(1.0) - 1.0833154705876864).abs() < 1e-15);
    }

    #[test]
    fn tau_tail_branch_is_continuous() {
        let direct = -5.0 * cdf(-5.0) + pdf(5.0);
        let tail = tau_lower_tail(5.0);
        assert!((direct - tail).abs() / tail < 1e-9);
        // τ(-x) ~ φ(x)/x² (1 - 3/x² + 15/x⁴)
        let x: f64 = 20.0;
        let series = pdf(x) / (x * x) * (1.0 - 3.0 / (x * x) + 15.0 / x.powi(4) - 105.0 / x.powi(6));
        assert!((tau(-x) - series).abs() / series < 1e-7);
    }

    #[test]
    fn tradeoff_form() {
        assert_eq!(ei_tradeoff(0.0, 0.5).unwrap(), 0.5 * pdf(0.0));
        let (a, b) = (0.37, 0.61);
        let direct = a * cdf(a / b) + b * pdf(a / b);
        assert!((ei_tradeoff(a, b).unwrap() - direct).abs() < 1e-12);
        assert!(ei_tradeoff(a + 1e-3, b).unwrap() > ei_tradeoff(a, b).unwrap());
    }

    #[test]
    fn tradeoff_rejects_bad_scale() {
        assert_eq!(ei_tradeoff(1.0, 0.0), Err(ScalarError::NonPositiveScale(0.0)));
        assert_eq!(ei_tradeoff(1.0, -0.2), Err(ScalarError::NonPositiveScale(-0.2)));
        assert!(matches!(ei_tradeoff(f64::NAN, 0.2), Err(ScalarError::NonFinite(_))));
        assert!(matches!(ei_tradeoff(0.1, f64::NAN), Err(ScalarError::NonFinite(_))));
    }

    #[test]
    fn tradeoff_asymptotes() {
        assert_eq!(ei_tradeoff(50.0, 1.0).unwrap(), 50.0);
        assert_eq!(ei_tradeoff(-50.0, 1.0).unwrap(), 0.0);
        assert_eq!(ei_tradeoff(1.0, 1e-3).unwrap(), 1.0);
        assert!(ei_tradeoff(-39.0, 1.0).unwrap() >= 0.0);
    }
}
