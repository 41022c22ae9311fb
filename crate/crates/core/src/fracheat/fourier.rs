//! Radial Fourier profiles of `w ↦ E_{α,β}(−w²)`.
//!
//! For `d = 1`, `g(ρ) = π⁻¹ ∫₀^∞ cos(ρw) E_{α,β}(−w²) dw`; for `d = 2` the
//! radial form `g(ρ) = (2π)⁻¹ ∫₀^∞ J₀(ρw) E_{α,β}(−w²) w dw`. Both equal
//! `(2π)^{−d} ∫_{ℝ^d} e^{iρ y_1} E_{α,β}(−|y|²) dy`.
//!
//! The slowly decaying part `a/(1+w²) + b/(1+w²)²` of the integrand, matched
//! to the first two asymptotic terms of `E_{α,β}`, is transformed in closed
//! form; only the `O(w^{−6})` remainder is integrated numerically.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::mittag_leffler::{rgamma, MittagLefflerParams};
use crate::quadrature::GaussLegendre;
use crate::{Error, Result};

const NODES_PER_PANEL: usize = 16;
const MAX_PANEL_WIDTH: f64 = 0.5;
/// Frequency cutoff for `α ≤ 1`.
pub const DEFAULT_W_MAX: f64 = 100.0;
/// Upper bound on the frequency cutoff for `α > 1`.
pub const W_MAX_CAP: f64 = 5000.0;

/// `K₀(x)` from `∫₀^∞ e^{−x cosh t} dt` by the trapezoidal rule.
pub fn bessel_k0(x: f64) -> f64 {
    bessel_k(x, 0.0)
}

/// `K₁(x)` from `∫₀^∞ e^{−x cosh t} cosh t dt`.
pub fn bessel_k1(x: f64) -> f64 {
    bessel_k(x, 1.0)
}

fn bessel_k(x: f64, nu: f64) -> f64 {
    if x <= 0.0 {
        return f64::INFINITY;
    }
    let h = 0.05;
    let mut acc = 0.5 * (-x).exp();
    let mut k = 1;
    loop {
        let t = k as f64 * h;
        let e = x * t.cosh();
        if e > 745.0 {
            break;
        }
        acc += (-e).exp() * (nu * t).cosh();
        k += 1;
    }
    acc * h
}

#[derive(Debug, Clone)]
pub struct FourierProfile {
    alpha: f64,
    beta: f64,
    dim: usize,
    a: f64,
    b: f64,
    nodes: Vec<f64>,
    /// Quadrature weight times remainder (times `w` for `d = 2`).
    weighted: Vec<f64>,
    w_max: f64,
    tail_bound: f64,
}

impl FourierProfile {
    /// Profile accurate for `0 ≤ ρ ≤ rho_max`. `w_max` overrides the
    /// frequency cutoff.
    pub fn new(alpha: f64, beta: f64, dim: usize, rho_max: f64, w_max: Option<f64>) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidArgument(format!("dimension {dim} not supported (1 or 2)")));
        }
        let ml = MittagLefflerParams::new(alpha, beta)?;
        let c1 = rgamma(beta - alpha);
        let c2 = -rgamma(beta - 2.0 * alpha);
        let a = c1;
        let b = c2 + c1;
        let w_max = w_max.unwrap_or_else(|| default_w_max(alpha));
        if !(w_max > 0.0 && w_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("frequency cutoff {w_max} must be positive")));
        }
        let width = MAX_PANEL_WIDTH.min(2.0 * PI / rho_max.max(1.0));
        let panels = (w_max / width).ceil() as usize;
        let gl = GaussLegendre::new(NODES_PER_PANEL);
        let mut nodes = Vec::with_capacity(panels * NODES_PER_PANEL);
        let mut wts = Vec::with_capacity(panels * NODES_PER_PANEL);
        let h = w_max / panels as f64;
        for p in 0..panels {
            let r = gl.mapped(p as f64 * h, (p + 1) as f64 * h);
            nodes.extend(r.nodes);
            wts.extend(r.weights);
        }
        let remainder = |w: f64| -> Result<f64> {
            let q = 1.0 / (1.0 + w * w);
            Ok(ml.eval(-w * w)? - a * q - b * q * q)
        };
        let rem: Vec<f64> = nodes.par_iter().map(|&w| remainder(w)).collect::<Result<_>>()?;
        let weighted = nodes
            .iter()
            .zip(&wts)
            .zip(&rem)
            .map(|((&w, &q), &r)| if dim == 1 { q * r } else { q * r * w })
            .collect();
        // The remainder decays like w^{-6} (exponentially when α = 1).
        let r_end = remainder(w_max)?.abs();
        let tail_bound = if dim == 1 {
            w_max * r_end / 5.0 / PI
        } else {
            w_max * w_max * r_end / 4.0 / (2.0 * PI)
        };
        Ok(Self {
            alpha,
            beta,
            dim,
            a,
            b,
            nodes,
            weighted,
            w_max,
            tail_bound,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn w_max(&self) -> f64 {
        self.w_max
    }

    /// Bound on the omitted frequency tail of the remainder integral.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// `g(ρ)`; infinite at `ρ = 0` for `d = 2` when `a ≠ 0`.
    pub fn eval(&self, rho: f64) -> f64 {
        self.eval_with_derivative(rho).0
    }

    /// `(g(ρ), g′(ρ))` for `ρ ≥ 0`.
    pub fn eval_with_derivative(&self, rho: f64) -> (f64, f64) {
        let rho = rho.abs();
        let mut g = 0.0;
        let mut dg = 0.0;
        match self.dim {
            1 => {
                for (&w, &q) in self.nodes.iter().zip(&self.weighted) {
                    let (s, c) = (rho * w).sin_cos();
                    g += q * c;
                    dg -= q * w * s;
                }
                let e = (-rho).exp();
                g = g / PI + self.a * e / 2.0 + self.b * (1.0 + rho) * e / 4.0;
                dg = dg / PI - self.a * e / 2.0 - self.b * rho * e / 4.0;
            }
            _ => {
                for (&w, &q) in self.nodes.iter().zip(&self.weighted) {
                    g += q * libm::j0(rho * w);
                    dg -= q * w * libm::j1(rho * w);
                }
                let (k0, rk1) = if rho == 0.0 {
                    (f64::INFINITY, 1.0)
                } else {
                    (bessel_k0(rho), rho * bessel_k1(rho))
                };
                let tail_g = if self.a == 0.0 { 0.0 } else { self.a * k0 };
                let tail_dg = if self.a == 0.0 || rho == 0.0 {
                    0.0
                } else {
                    -self.a * bessel_k1(rho)
                };
                let k0_term = if rho == 0.0 { 0.0 } else { rho * bessel_k0(rho) };
                g = (g + tail_g + self.b * rk1 / 2.0) / (2.0 * PI);
                dg = (dg + tail_dg - self.b * k0_term / 2.0) / (2.0 * PI);
            }
        }
        (g, dg)
    }
}

pub fn default_w_max(alpha: f64) -> f64 {
    if alpha <= 1.0 {
        DEFAULT_W_MAX
    } else {
        // The oscillating part of E_{α,β}(−w²) decays like
        // exp(cos(π/α) w^{2/α}).
        let c = (PI / alpha).cos().abs();
        if c == 0.0 {
            W_MAX_CAP
        } else {
            (40.0 / c).powf(alpha / 2.0).clamp(DEFAULT_W_MAX, W_MAX_CAP)
        }
    }
}

/// `g` tabulated on `[0, ρ_max]` with cubic Hermite interpolation, the
/// cumulative radial mass, and the radius beyond which `g` is treated as 0.
#[derive(Debug, Clone)]
pub struct ProfileTable {
    step: f64,
    values: Vec<f64>,
    derivs: Vec<f64>,
    /// `∫₀^ρ g` (`d = 1`) or `∫₀^ρ 2π r g(r) dr` (`d = 2`) at the grid points.
    cumulative: Vec<f64>,
    rho_cut: f64,
    dim: usize,
    tail_bound: f64,
}

pub const TABLE_RHO_MAX: f64 = 40.0;
pub const TABLE_STEP: f64 = 0.005;
/// `g` is cut where `|g| < CUT_RELATIVE · max|g|`.
pub const CUT_RELATIVE: f64 = 1e-10;

impl ProfileTable {
    pub fn new(profile: &FourierProfile) -> Self {
        Self::with_grid(profile, TABLE_RHO_MAX, TABLE_STEP)
    }

    pub fn with_grid(profile: &FourierProfile, rho_max: f64, step: f64) -> Self {
        let n = (rho_max / step).ceil() as usize;
        let step = rho_max / n as f64;
        let vals: Vec<(f64, f64)> = (0..=n)
            .into_par_iter()
            .map(|k| profile.eval_with_derivative(k as f64 * step))
            .collect();
        let values: Vec<f64> = vals.iter().map(|v| v.0).collect();
        let derivs: Vec<f64> = vals.iter().map(|v| v.1).collect();
        let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let last_big = values
            .iter()
            .rposition(|v| v.abs() >= CUT_RELATIVE * peak)
            .unwrap_or(0);
        let rho_cut = ((last_big + 1).min(n) as f64) * step;
        let dim = profile.dim();
        // Integrate each cubic Hermite piece exactly (Simpson on the cubic
        // times the radial weight, which is exact for d = 1 and accurate
        // to O(h⁵) for d = 2).
        let mut cumulative = Vec::with_capacity(n + 1);
        cumulative.push(0.0);
        let weight = |r: f64| if dim == 1 { 1.0 } else { 2.0 * PI * r };
        let mut acc = 0.0;
        for k in 0..n {
            let r0 = k as f64 * step;
            let mid = hermite_cubic(values[k], derivs[k], values[k + 1], derivs[k + 1], step, 0.5);
            if r0 < rho_cut {
                acc += step / 6.0
                    * (weight(r0) * values[k]
                        + 4.0 * weight(r0 + 0.5 * step) * mid
                        + weight(r0 + step) * values[k + 1]);
            }
            cumulative.push(acc);
        }
        Self {
            step,
            values,
            derivs,
            cumulative,
            rho_cut,
            dim,
            tail_bound: profile.tail_bound(),
        }
    }

    pub fn rho_cut(&self) -> f64 {
        self.rho_cut
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn eval(&self, rho: f64) -> f64 {
        let rho = rho.abs();
        if rho >= self.rho_cut {
            return 0.0;
        }
        let pos = rho / self.step;
        let k = (pos.floor() as usize).min(self.values.len() - 2);
        let t = pos - k as f64;
        hermite_cubic(
            self.values[k],
            self.derivs[k],
            self.values[k + 1],
            self.derivs[k + 1],
            self.step,
            t,
        )
    }

    /// Radial mass within `ρ` (see `cumulative`), linear between grid points.
    pub fn mass_within(&self, rho: f64) -> f64 {
        let rho = rho.abs().min(self.rho_cut);
        let pos = rho / self.step;
        let k = (pos.floor() as usize).min(self.cumulative.len() - 2);
        let t = pos - k as f64;
        self.cumulative[k] + t * (self.cumulative[k + 1] - self.cumulative[k])
    }
}

fn hermite_cubic(y0: f64, d0: f64, y1: f64, d1: f64, h: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * d1
}
