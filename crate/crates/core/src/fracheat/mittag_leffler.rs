//! Two-parameter Mittag-Leffler function `E_{α,β}(z) = Σ z^k / Γ(αk+β)` on
//! the real axis.
//!
//! Three regimes:
//!
//! * power series for `z ≥ −1`;
//! * the algebraic asymptotic expansion `−Σ_{m=1}^{5} z^{−m}/Γ(β−αm)` for
//!   `z < −30` when `α ≤ 1` and the first omitted term is below
//!   `ASYMPTOTIC_ABS_TOL`;
//! * otherwise the inverse Laplace transform
//!   `E_{α,β}(z) = (2πi)^{-1} ∫ e^s s^{α−β} / (s^α − z) ds` on the parabola
//!   `s(u) = μ(1 + iu)²`, discretized by the trapezoidal rule. For `α > 1`
//!   the poles `s* = |z|^{1/α} e^{±iπ/α}` are either kept inside the
//!   parabola or placed well outside it, in which case their residues
//!   `e^{s*} s*^{1−β} / α` are added back.
//!
//! On the negative axis the series alone loses all accuracy once
//! `|z|^{1/α}` exceeds a few units, which is why the contour regime exists.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::{Error, Result};

pub const DEFAULT_K_MAX: usize = 10_000;
pub const DEFAULT_TOLERANCE: f64 = 1e-17;
/// Series regime lower bound.
pub const SERIES_MIN_Z: f64 = -1.0;
/// Asymptotic regime upper bound (`α ≤ 1` only).
pub const ASYMPTOTIC_MAX_Z: f64 = -30.0;
const ASYMPTOTIC_TERMS: i32 = 5;
/// Largest accepted truncation error of the asymptotic expansion.
pub const ASYMPTOTIC_ABS_TOL: f64 = 1e-15;
const CONTOUR_STEP: f64 = 0.05;
/// The parabola is truncated where `Re s = −CONTOUR_DEPTH`.
const CONTOUR_DEPTH: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Series,
    Asymptotic,
    Contour,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Series => "series",
            Regime::Asymptotic => "asymptotic",
            Regime::Contour => "contour",
        }
    }
}

/// `1/Γ(x)`, zero at the poles `x = 0, −1, −2, …`.
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        0.0
    } else {
        1.0 / libm::tgamma(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MittagLefflerParams {
    pub alpha: f64,
    pub beta: f64,
    pub k_max: usize,
    pub tolerance: f64,
}

impl MittagLefflerParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Mittag-Leffler alpha = {alpha} must lie in (0, 2]"
            )));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Mittag-Leffler beta = {beta} must be positive"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            k_max: DEFAULT_K_MAX,
            tolerance: DEFAULT_TOLERANCE,
        })
    }

    pub fn regime(&self, z: f64) -> Regime {
        if z >= SERIES_MIN_Z {
            Regime::Series
        } else if self.alpha <= 1.0 && z < ASYMPTOTIC_MAX_Z && self.asymptotic_error(z) <= ASYMPTOTIC_ABS_TOL {
            Regime::Asymptotic
        } else {
            Regime::Contour
        }
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        self.eval_with_regime(z).map(|(v, _)| v)
    }

    pub fn eval_with_regime(&self, z: f64) -> Result<(f64, Regime)> {
        if z.is_nan() {
            return Err(Error::InvalidArgument("Mittag-Leffler argument is NaN".into()));
        }
        let regime = self.regime(z);
        let v = match regime {
            Regime::Series => self.series(z)?,
            Regime::Asymptotic => self.asymptotic(z),
            Regime::Contour => self.contour(z),
        };
        Ok((v, regime))
    }

    /// Power series with adaptive truncation: stops once terms decrease and
    /// fall below `tolerance · |sum|`.
    pub fn series(&self, z: f64) -> Result<f64> {
        let mut sum = rgamma(self.beta);
        if z == 0.0 {
            return Ok(sum);
        }
        let lz = z.abs().ln();
        let neg = z < 0.0;
        let mut prev = f64::INFINITY;
        for k in 1..=self.k_max {
            let x = self.alpha * k as f64 + self.beta;
            let mag = (k as f64 * lz - libm::lgamma(x)).exp();
            let term = if neg && k % 2 == 1 { -mag } else { mag };
            sum += term;
            if mag < prev && mag <= self.tolerance * sum.abs().max(f64::MIN_POSITIVE) {
                return Ok(sum);
            }
            if !sum.is_finite() {
                break;
            }
            prev = mag;
        }
        Err(Error::NonConvergence {
            alpha: self.alpha,
            beta: self.beta,
            z,
            k_max: self.k_max,
        })
    }

    /// `−Σ_{m=1}^{5} z^{−m} / Γ(β − αm)`, valid for `z → −∞`, `α < 2`.
    pub fn asymptotic(&self, z: f64) -> f64 {
        -(1..=ASYMPTOTIC_TERMS)
            .map(|m| z.powi(-m) * rgamma(self.beta - self.alpha * m as f64))
            .sum::<f64>()
    }

    /// Size of the first omitted asymptotic term, plus the exponentially
    /// small residue `e^z z^{1−β}` that the expansion misses at `α = 1`.
    pub fn asymptotic_error(&self, z: f64) -> f64 {
        let next = z.abs().powi(-(ASYMPTOTIC_TERMS + 1))
            * rgamma(self.beta - self.alpha * (ASYMPTOTIC_TERMS + 1) as f64).abs();
        let residue = if self.alpha == 1.0 {
            z.exp() * z.abs().powf(1.0 - self.beta)
        } else {
            0.0
        };
        next + residue
    }

    /// Trapezoidal inverse Laplace transform on a parabolic contour.
    pub fn contour(&self, z: f64) -> f64 {
        let (a, b) = (self.alpha, self.beta);
        let mut mu = 1.0;
        let mut residue = 0.0;
        if a > 1.0 && z < 0.0 {
            let r = z.abs().powf(1.0 / a);
            let c = (PI / (2.0 * a)).cos();
            let mu_out = r * c * c / 4.0;
            if mu_out >= 0.25 {
                mu = mu_out.min(1.0);
                let s = Complex64::from_polar(r, PI / a);
                residue = 2.0 / a * (s.powf(1.0 - b) * s.exp()).re;
            } else {
                mu = (4.0 * r * c * c).max(1.0);
            }
        } else if z > 0.0 {
            // The real pole z^{1/α} must stay inside the contour.
            mu = (4.0 * z.powf(1.0 / a)).max(1.0);
        }
        let u_max = ((CONTOUR_DEPTH + mu) / mu).sqrt();
        let n = (u_max / CONTOUR_STEP).ceil() as i64;
        let h = u_max / n as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in -n..=n {
            let u = k as f64 * h;
            let w = Complex64::new(1.0, u);
            let s = mu * w * w;
            let ds = Complex64::new(0.0, 2.0 * mu) * w;
            let f = s.exp() * s.powf(a - b) / (s.powf(a) - z) * ds;
            let weight = if k.abs() == n { 0.5 } else { 1.0 };
            acc += weight * f;
        }
        // (2πi)^{-1} ∫ … du
        (acc * h / Complex64::new(0.0, 2.0 * PI)).re + residue
    }
}

/// `E_{α,β}(z)` with default controls.
pub fn mittag_leffler(alpha: f64, beta: f64, z: f64) -> Result<f64> {
    MittagLefflerParams::new(alpha, beta)?.eval(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exponential_case() {
        for i in -200..=200 {
            let z = i as f64 * 0.1;
            let v = mittag_leffler(1.0, 1.0, z).unwrap();
            let e = z.exp();
            assert!((v - e).abs() <= 1e-12 * e.max(1.0), "z={z}: {v} vs {e}");
        }
    }

    #[test]
    fn cosine_case() {
        for i in 0..=200 {
            let x = i as f64 * 0.05;
            let v = mittag_leffler(2.0, 1.0, -x * x).unwrap();
            assert!((v - x.cos()).abs() <= 1e-10, "x={x}: {v} vs {}", x.cos());
        }
    }

    #[test]
    fn closed_forms_with_other_beta() {
        // E_{1,2}(z) = (e^z − 1)/z, E_{2,2}(−x²) = sin(x)/x.
        for &z in &[-25.0, -7.5, -0.5, 0.7, 3.0] {
            let v = mittag_leffler(1.0, 2.0, z).unwrap();
            assert_abs_diff_eq!(v, (z.exp() - 1.0) / z, epsilon = 1e-12);
        }
        for &x in &[0.3, 2.0, 6.0, 9.5] {
            let v = mittag_leffler(2.0, 2.0, -x * x).unwrap();
            assert_abs_diff_eq!(v, x.sin() / x, epsilon = 1e-10);
        }
    }

    #[test]
    fn half_order_matches_erfc() {
        // E_{1/2,1}(−x) = e^{x²} erfc(x).
        for &x in &[0.2, 1.0, 3.0, 10.0, 40.0] {
            let v = mittag_leffler(0.5, 1.0, -x).unwrap();
            let want = if x < 25.0 {
                (x * x).exp() * libm::erfc(x)
            } else {
                // e^{x²}erfc(x) ~ (1/(x√π))(1 − 1/(2x²) + 3/(4x⁴) − 15/(8x⁶))
                (1.0 - 0.5 / (x * x) + 0.75 / x.powi(4) - 1.875 / x.powi(6) + 6.5625 / x.powi(8))
                    / (x * PI.sqrt())
            };
            let tol = if x < 25.0 { 1e-11 } else { 1e-9 };
            assert!((v - want).abs() <= tol * want, "x={x}: {v} vs {want}");
        }
    }

    #[test]
    fn value_at_zero() {
        for &(a, b) in &[(0.3, 0.7), (1.0, 1.0), (1.7, 2.5)] {
            assert_abs_diff_eq!(mittag_leffler(a, b, 0.0).unwrap(), rgamma(b), epsilon = 1e-15);
        }
    }

    #[test]
    fn regimes_overlap() {
        for &(a, b) in &[(0.3, 1.0), (0.5, 0.5), (0.7, 1.0), (0.7, 0.7), (0.9, 1.3), (1.0, 1.0)] {
            let p = MittagLefflerParams::new(a, b).unwrap();
            for i in 0..=30 {
                let z = -25.0 - 0.5 * i as f64;
                let c = p.contour(z);
                let s = p.asymptotic(z);
                assert!((c - s).abs() < 1e-6, "a={a} b={b} z={z}: {c} vs {s}");
            }
        }
    }

    #[test]
    fn series_and_contour_agree_near_the_switch() {
        for &(a, b) in &[(0.4, 1.0), (0.7, 0.7), (1.5, 1.0), (1.9, 1.9)] {
            let p = MittagLefflerParams::new(a, b).unwrap();
            for &z in &[-1.5, -1.0, -0.5, 0.5] {
                let s = p.series(z).unwrap();
                let c = p.contour(z);
                assert!((s - c).abs() < 1e-13, "a={a} b={b} z={z}: {s} vs {c}");
            }
        }
    }

    #[test]
    fn asymptotic_regime_only_when_accurate() {
        let p = MittagLefflerParams::new(0.9, 1.0).unwrap();
        assert_eq!(p.regime(-35.0), Regime::Contour);
        assert_eq!(p.regime(-1e4), Regime::Asymptotic);
        for &z in &[-600.0, -1e3, -1e4] {
            assert!((p.asymptotic(z) - p.contour(z)).abs() < 1e-14);
        }
    }

    #[test]
    fn completely_monotone_on_negative_axis() {
        for &(a, b) in &[(0.3, 1.0), (0.7, 0.7), (0.7, 1.0), (1.0, 1.0)] {
            let p = MittagLefflerParams::new(a, b).unwrap();
            let mut prev = p.eval(0.0).unwrap();
            for i in 1..=400 {
                let v = p.eval(-0.25 * i as f64).unwrap();
                assert!(v >= 0.0 && v <= prev, "a={a} b={b} z={}: {v} after {prev}", -0.25 * i as f64);
                prev = v;
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(MittagLefflerParams::new(0.0, 1.0).is_err());
        assert!(MittagLefflerParams::new(2.5, 1.0).is_err());
        assert!(MittagLefflerParams::new(1.0, -1.0).is_err());
        let mut p = MittagLefflerParams::new(1.0, 1.0).unwrap();
        p.k_max = 3;
        assert!(matches!(p.series(0.9), Err(Error::NonConvergence { .. })));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        // Complete monotonicity on the negative axis for α ≤ 1, β ∈ {1, α}.
        #[test]
        fn positive_and_decreasing_on_negative_axis(
            alpha in 0.2f64..=1.0,
            same_beta in proptest::bool::ANY,
            a in 0.0f64..200.0,
            gap in 0.01f64..50.0,
        ) {
            let beta = if same_beta { alpha } else { 1.0 };
            let p = MittagLefflerParams::new(alpha, beta).unwrap();
            let near = p.eval(-a).unwrap();
            let far = p.eval(-a - gap).unwrap();
            proptest::prop_assert!(far > 0.0, "E({}) = {far}", -a - gap);
            proptest::prop_assert!(far <= near * (1.0 + 1e-12), "{far} > {near}");
        }
    }
}
