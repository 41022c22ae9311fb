//! Monte-Carlo evaluation of `Y(t, x) = I₁ + I₂ + I₃` for
//! `∂_t^α Y = λΔY + σW + γV` with a Dirac initial datum.
//!
//! `I₁` is the Fourier profile with `β = 1`. The Green kernel
//! `G(s, r) = s^{α−1} (λs^α)^{−d/2} g(|r| / √(λs^α))` uses the `β = α`
//! profile through an interpolation table.
//!
//! `I₂` is a cell sum `σ Σ Ḡ ΔB` on a time mesh graded towards `s = 0`, where
//! `Ḡ` is the cell average of `G` and spatial cells scale with the kernel
//! width of their slab. On the first slab `[0, s₁]` the time average of
//! `s^{α−1}` is exact and the weights are rescaled so that the slab carries
//! its exact isometry variance.
//! `I₃` integrates `G` exactly against the jumps of a finite-activity Lévy
//! sheet on `[0, t] × window` and subtracts the compensator by quadrature.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::fourier::{FourierProfile, ProfileTable};
use crate::levy_measure::LevyMeasure;
use crate::mc::{MonteCarlo, SampleStats};
use crate::quadrature::{GaussLegendre, Rule1d};
use crate::rng::{stream_rng, Stream};
use crate::sheet_sim::{simulate_levy_sheet_on_streams, Domain, LevySheetPath};
use crate::{Error, Result};

pub const DEFAULT_X_MAX_WIDTHS: f64 = 8.0;
pub const DEFAULT_N_TIME: usize = 64;
pub const DEFAULT_GRADING: f64 = 2.0;
pub const DEFAULT_CELLS_PER_WIDTH: usize = 4;
const CELL_NODES: usize = 4;
const COMPENSATOR_PANELS: usize = 16;
const COMPENSATOR_NODES: usize = 8;
const WINDOW_PANEL: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct HeatConfig {
    /// Caputo order in `(0, 2)`.
    pub alpha: f64,
    pub lambda_diff: f64,
    pub sigma: f64,
    pub gamma: f64,
    /// Spatial dimension, 1 or 2.
    pub d: usize,
    pub t: f64,
    /// Evaluation points, each of length `d`.
    pub x: Vec<Vec<f64>>,
    /// Spatial truncation in units of the width `√(λt^α)`.
    pub x_max_widths: f64,
    /// Frequency cutoff in units of `1/√(λt^α)`; `None` picks it from `α`.
    pub y_max: Option<f64>,
    /// Number of time slabs.
    pub n_time: usize,
    /// Mesh grading exponent, `s_k = t (k/N)^p`.
    pub grading: f64,
    /// Spatial cells per kernel width.
    pub cells_per_width: usize,
    pub measure: Arc<LevyMeasure>,
    /// Small-jump cut for the Lévy noise.
    pub epsilon: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Worker threads, 0 for the global pool.
    pub workers: usize,
}

impl HeatConfig {
    pub fn new(alpha: f64, lambda_diff: f64, d: usize, t: f64, x: Vec<Vec<f64>>) -> Self {
        Self {
            alpha,
            lambda_diff,
            sigma: 0.0,
            gamma: 0.0,
            d,
            t,
            x,
            x_max_widths: DEFAULT_X_MAX_WIDTHS,
            y_max: None,
            n_time: DEFAULT_N_TIME,
            grading: DEFAULT_GRADING,
            cells_per_width: DEFAULT_CELLS_PER_WIDTH,
            measure: Arc::new(LevyMeasure::two_point()),
            epsilon: 0.0,
            n_samples: 1000,
            seed: 0,
            workers: 0,
        }
    }

    /// Subdiffusive tumour-microenvironment scenario: `α = 0.7`, Brownian
    /// and two-point Lévy forcing (rare large positive bursts, frequent
    /// small negative ones).
    pub fn tumor_preset() -> Self {
        let measure = LevyMeasure::atoms("tumor", &[(-0.3, 2.0), (1.0, 0.25)])
            .expect("valid preset measure");
        let x = (0..=12).map(|i| vec![-3.0 + 0.5 * i as f64]).collect();
        Self {
            sigma: 0.5,
            gamma: 0.5,
            measure: Arc::new(measure),
            n_samples: 10_000,
            seed: 20_240_701,
            ..Self::new(0.7, 1.0, 1, 1.0, x)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            errs.push(format!("alpha = {} must lie in (0, 2)", self.alpha));
        }
        if !(self.lambda_diff > 0.0 && self.lambda_diff.is_finite()) {
            errs.push(format!("lambda_diff = {} must be positive", self.lambda_diff));
        }
        if !(self.d == 1 || self.d == 2) {
            errs.push(format!("d = {} not supported (1 or 2)", self.d));
        }
        if self.t == 0.0 {
            errs.push("t = 0 rejected: the initial datum is a Dirac measure".into());
        } else if !(self.t > 0.0 && self.t.is_finite()) {
            errs.push(format!("t = {} must be positive", self.t));
        }
        if self.x.is_empty() {
            errs.push("no evaluation points".into());
        }
        if self.x.iter().any(|p| p.len() != self.d || p.iter().any(|v| !v.is_finite())) {
            errs.push(format!("evaluation points must be finite with {} coordinates", self.d));
        }
        if !(self.x_max_widths > 0.0) {
            errs.push(format!("x_max_widths = {} must be positive", self.x_max_widths));
        }
        if let Some(y) = self.y_max {
            if !(y > 0.0 && y.is_finite()) {
                errs.push(format!("y_max = {y} must be positive"));
            }
        }
        if self.n_time == 0 || self.cells_per_width == 0 {
            errs.push("time and space grids must be nonempty".into());
        }
        if !(self.grading >= 1.0) {
            errs.push(format!("grading = {} must be at least 1", self.grading));
        }
        if !(self.sigma.is_finite() && self.gamma.is_finite()) {
            errs.push("sigma and gamma must be finite".into());
        }
        if !(self.epsilon >= 0.0) {
            errs.push(format!("epsilon = {} must be nonnegative", self.epsilon));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(errs.join("; ")))
        }
    }

    /// `√(λ t^α)`.
    pub fn width(&self) -> f64 {
        (self.lambda_diff * self.t.powf(self.alpha)).sqrt()
    }

    pub fn x_max(&self) -> f64 {
        self.x_max_widths * self.width()
    }

    /// Space-time domain of the Lévy sheet: `[0, t] × Π [min x − X, max x + X]`.
    pub fn levy_domain(&self) -> Result<Domain> {
        let xm = self.x_max();
        let mut origin = vec![0.0];
        let mut extents = vec![self.t];
        for l in 0..self.d {
            let lo = self.x.iter().map(|p| p[l]).fold(f64::INFINITY, f64::min) - xm;
            let hi = self.x.iter().map(|p| p[l]).fold(f64::NEG_INFINITY, f64::max) + xm;
            origin.push(lo);
            extents.push(hi - lo);
        }
        Domain::with_origin(origin, extents)
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.alpha > 1.0 {
            w.push(format!(
                "alpha = {} > 1: the Green kernel is not positive; only the isometry check applies",
                self.alpha
            ));
        }
        if self.sigma != 0.0 || self.gamma != 0.0 {
            let e = variance_exponent(self.alpha, self.d);
            if e <= -1.0 {
                w.push(format!(
                    "alpha = {}, d = {}: the stochastic terms have infinite variance; grid results do not converge",
                    self.alpha, self.d
                ));
            }
        }
        w
    }
}

/// Exponent `e` in `∫ G(s, r)² dr ∝ s^e`.
pub fn variance_exponent(alpha: f64, d: usize) -> f64 {
    2.0 * alpha - 2.0 - alpha * d as f64 / 2.0
}

/// The Green kernel on an interpolation table of its profile.
#[derive(Debug, Clone)]
pub struct HeatKernel {
    alpha: f64,
    lambda: f64,
    dim: usize,
    table: ProfileTable,
    sq_step: f64,
    /// Radial cumulative `∫ g²` on a uniform grid.
    sq_cumulative: Vec<f64>,
}

impl HeatKernel {
    /// `w_max` is the frequency cutoff in profile units.
    pub fn new(alpha: f64, lambda: f64, dim: usize, w_max: Option<f64>) -> Result<Self> {
        let profile = FourierProfile::new(alpha, alpha, dim, super::fourier::TABLE_RHO_MAX, w_max)?;
        let table = ProfileTable::new(&profile);
        let sq_step = super::fourier::TABLE_STEP / 2.0;
        let n = (table.rho_cut() / sq_step).ceil() as usize;
        let radial = |r: f64| if dim == 1 { 2.0 } else { 2.0 * std::f64::consts::PI * r };
        let f = |r: f64| {
            let g = table.eval(r);
            radial(r) * g * g
        };
        let mut sq_cumulative = Vec::with_capacity(n + 1);
        sq_cumulative.push(0.0);
        let mut acc = 0.0;
        for k in 0..n {
            let a = k as f64 * sq_step;
            acc += sq_step / 6.0 * (f(a) + 4.0 * f(a + sq_step / 2.0) + f(a + sq_step));
            sq_cumulative.push(acc);
        }
        Ok(Self {
            alpha,
            lambda,
            dim,
            table,
            sq_step,
            sq_cumulative,
        })
    }

    pub fn table(&self) -> &ProfileTable {
        &self.table
    }

    pub fn width(&self, s: f64) -> f64 {
        (self.lambda * s.powf(self.alpha)).sqrt()
    }

    /// Offsets beyond this radius contribute nothing.
    pub fn reach(&self, s: f64) -> f64 {
        self.table.rho_cut() * self.width(s)
    }

    pub fn eval(&self, s: f64, r: &[f64]) -> f64 {
        let w = self.width(s);
        let rho = r.iter().map(|v| v * v).sum::<f64>().sqrt() / w;
        s.powf(self.alpha - 1.0) * w.powi(-(self.dim as i32)) * self.table.eval(rho)
    }

    /// `∫_{ℝ^d} g(|u|)² du`.
    pub fn squared_mass(&self) -> f64 {
        *self.sq_cumulative.last().unwrap_or(&0.0)
    }

    /// `∫_{|u| > ρ} g(|u|)² du`.
    pub fn squared_tail(&self, rho: f64) -> f64 {
        let pos = (rho.max(0.0) / self.sq_step).min((self.sq_cumulative.len() - 1) as f64);
        let k = (pos.floor() as usize).min(self.sq_cumulative.len().saturating_sub(2));
        let t = pos - k as f64;
        let c = if self.sq_cumulative.len() < 2 {
            0.0
        } else {
            self.sq_cumulative[k] + t * (self.sq_cumulative[k + 1] - self.sq_cumulative[k])
        };
        (self.squared_mass() - c).max(0.0)
    }

    /// `∫₀^t ∫_{ℝ^d} G(s, r)² dr ds`, infinite when the exponent is `≤ −1`.
    pub fn isometry_integral(&self, t: f64) -> f64 {
        let e = variance_exponent(self.alpha, self.dim);
        if e <= -1.0 {
            return f64::INFINITY;
        }
        self.squared_mass() * self.lambda.powf(-(self.dim as f64) / 2.0) * t.powf(e + 1.0) / (e + 1.0)
    }

    /// `∫_{box} G(s, x − z) dz`.
    pub fn window_mass(&self, s: f64, x: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
        let w = self.width(s);
        let cut = self.table.rho_cut();
        let pre = s.powf(self.alpha - 1.0);
        if self.dim == 1 {
            let left = ((x[0] - lower[0]) / w).clamp(0.0, cut);
            let right = ((upper[0] - x[0]) / w).clamp(0.0, cut);
            return pre * (self.table.mass_within(left) + self.table.mass_within(right));
        }
        // Scaled box clipped to the profile support.
        let lo: Vec<f64> = (0..2).map(|l| ((lower[l] - x[l]) / w).max(-cut)).collect();
        let hi: Vec<f64> = (0..2).map(|l| ((upper[l] - x[l]) / w).min(cut)).collect();
        if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return 0.0;
        }
        let axis = |a: f64, b: f64| {
            let panels = ((b - a) / WINDOW_PANEL).ceil().max(1.0) as usize;
            Rule1d::composite(a, b, panels, CELL_NODES)
        };
        let (ax, ay) = (axis(lo[0], hi[0]), axis(lo[1], hi[1]));
        let mut acc = 0.0;
        for (&u, &wu) in ax.nodes.iter().zip(&ax.weights) {
            let mut row = 0.0;
            for (&v, &wv) in ay.nodes.iter().zip(&ay.weights) {
                row += wv * self.table.eval((u * u + v * v).sqrt());
            }
            acc += wu * row;
        }
        pre * acc
    }
}

/// `I₁(t, x)` for every evaluation point.
pub fn deterministic_term(config: &HeatConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let w = config.width();
    let rho: Vec<f64> = config
        .x
        .iter()
        .map(|p| p.iter().map(|v| v * v).sum::<f64>().sqrt() / w)
        .collect();
    let rho_max = rho.iter().cloned().fold(1.0, f64::max);
    let profile = FourierProfile::new(config.alpha, 1.0, config.d, rho_max, config.y_max)?;
    let scale = w.powi(-(config.d as i32));
    Ok(rho.par_iter().map(|&r| scale * profile.eval(r)).collect())
}

/// `G(s, r)` evaluated directly from the Fourier integral.
pub fn greens_kernel(config: &HeatConfig, s: f64, r: &[f64]) -> Result<f64> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!("elapsed time s = {s} must be positive")));
    }
    if r.len() != config.d {
        return Err(Error::InvalidArgument(format!("offset must have {} coordinates", config.d)));
    }
    let w = (config.lambda_diff * s.powf(config.alpha)).sqrt();
    let rho = r.iter().map(|v| v * v).sum::<f64>().sqrt() / w;
    let profile = FourierProfile::new(config.alpha, config.alpha, config.d, rho.max(1.0), config.y_max)?;
    Ok(s.powf(config.alpha - 1.0) * w.powi(-(config.d as i32)) * profile.eval(rho))
}

/// Time slab with its spatial cells and, per evaluation point, the cells
/// it touches with their weights `Ḡ √(|slab| h^d)`.
#[derive(Debug, Clone)]
struct Slab {
    n_cells: usize,
    per_x: Vec<Vec<(usize, f64)>>,
}

fn time_mesh(t: f64, n: usize, p: f64) -> Vec<f64> {
    (0..=n).map(|k| t * (k as f64 / n as f64).powf(p)).collect()
}

/// Cell averages of `G(·, x − ·)` for one slab and one point, keyed by cell
/// multi-index.
fn slab_cells(
    kernel: &HeatKernel,
    cfg: &HeatConfig,
    x: &[f64],
    s_lo: f64,
    s_hi: f64,
    h: f64,
) -> Vec<([i64; 2], f64)> {
    let d = cfg.d;
    let radius = cfg.x_max().min(kernel.reach(s_hi));
    let gl = GaussLegendre::new(CELL_NODES);
    // Time nodes with weights normalized to the slab length.
    let time: Vec<(f64, f64)> = if s_lo == 0.0 {
        let sm = 0.5 * s_hi;
        let factor = s_hi.powf(cfg.alpha - 1.0) / cfg.alpha / sm.powf(cfg.alpha - 1.0);
        vec![(sm, factor)]
    } else {
        let r = gl.mapped(s_lo, s_hi);
        r.nodes.iter().zip(&r.weights).map(|(&s, &w)| (s, w / (s_hi - s_lo))).collect()
    };
    let unit = gl.mapped(0.0, 1.0);
    let range = |c: f64| {
        let a = ((c - radius) / h).floor() as i64;
        let b = ((c + radius) / h).floor() as i64;
        a..=b
    };
    let mut out = Vec::new();
    let ys: Vec<i64> = if d == 2 { range(x[1]).collect() } else { vec![0] };
    for i in range(x[0]) {
        for &j in &ys {
            let mut acc = 0.0;
            for &(s, ws) in &time {
                for (&u, &wu) in unit.nodes.iter().zip(&unit.weights) {
                    let r0 = x[0] - (i as f64 + u) * h;
                    if d == 1 {
                        acc += ws * wu * kernel.eval(s, &[r0]);
                    } else {
                        for (&v, &wv) in unit.nodes.iter().zip(&unit.weights) {
                            let r1 = x[1] - (j as f64 + v) * h;
                            acc += ws * wu * wv * kernel.eval(s, &[r0, r1]);
                        }
                    }
                }
            }
            if acc != 0.0 {
                out.push(([i, j], acc));
            }
        }
    }
    if s_lo == 0.0 {
        // Rescale the singular slab so its variance equals the exact
        // `∫₀^{s₁} ∫ G²`; most of the variance sits there when α is small.
        let exact = kernel.isometry_integral(s_hi);
        let discrete: f64 = out.iter().map(|c| c.1 * c.1).sum::<f64>() * s_hi * h.powi(d as i32);
        if exact.is_finite() && discrete > 0.0 {
            let f = (exact / discrete).sqrt();
            out.iter_mut().for_each(|c| c.1 *= f);
        }
    }
    out
}

/// `(s_lo, s_hi, h)` for slab `k`, with `h` the kernel width at the slab
/// midpoint over `cpw`.
fn slab_geometry(kernel: &HeatKernel, mesh: &[f64], k: usize, cpw: usize) -> (f64, f64, f64) {
    let (s_lo, s_hi) = (mesh[k], mesh[k + 1]);
    let h = kernel.width(0.5 * (s_lo + s_hi)) / cpw as f64;
    (s_lo, s_hi, h)
}

/// Discrete isometry `Σ Ḡ² |slab| h^d` per point and the truncation tail
/// `Σ |slab| ∫_{|r| > R} G²` at slab midpoints.
fn grid_variance(kernel: &HeatKernel, cfg: &HeatConfig, n_time: usize, cpw: usize) -> Vec<(f64, f64)> {
    let mesh = time_mesh(cfg.t, n_time, cfg.grading);
    cfg.x
        .par_iter()
        .map(|x| {
            let mut v = 0.0;
            let mut tail = 0.0;
            for k in 0..n_time {
                let (s_lo, s_hi, h) = slab_geometry(kernel, &mesh, k, cpw);
                let cells = slab_cells(kernel, cfg, x, s_lo, s_hi, h);
                let vol = (s_hi - s_lo) * h.powi(cfg.d as i32);
                v += cells.iter().map(|c| c.1 * c.1).sum::<f64>() * vol;
                let sm = 0.5 * (s_lo + s_hi);
                let w = kernel.width(sm);
                let radius = cfg.x_max().min(kernel.reach(s_hi));
                let g2 = sm.powf(2.0 * cfg.alpha - 2.0) * w.powi(-(cfg.d as i32));
                tail += (s_hi - s_lo) * g2 * kernel.squared_tail(radius / w);
            }
            (v, tail)
        })
        .collect()
}

/// Precomputed state shared by all samples.
#[derive(Debug, Clone)]
pub struct HeatSolver {
    config: HeatConfig,
    kernel: HeatKernel,
    i1: Vec<f64>,
    slabs: Vec<Slab>,
    levy_domain: Domain,
    /// `drift · ∫∫_{window} G` per point.
    compensators: Vec<f64>,
    grid_variance: Vec<f64>,
    refined_variance: Vec<f64>,
    truncation_tail: Vec<f64>,
}

impl HeatSolver {
    pub fn new(config: &HeatConfig) -> Result<Self> {
        config.validate()?;
        let cfg = config.clone();
        let kernel = HeatKernel::new(cfg.alpha, cfg.lambda_diff, cfg.d, cfg.y_max)?;
        let i1 = deterministic_term(&cfg)?;
        let levy_domain = cfg.levy_domain()?;

        let mut slabs = Vec::new();
        let (mut gv, mut rv, mut tails) = (vec![0.0; cfg.x.len()], vec![0.0; cfg.x.len()], vec![0.0; cfg.x.len()]);
        if cfg.sigma != 0.0 {
            let mesh = time_mesh(cfg.t, cfg.n_time, cfg.grading);
            slabs = (0..cfg.n_time)
                .into_par_iter()
                .map(|k| {
                    let (s_lo, s_hi, h) = slab_geometry(&kernel, &mesh, k, cfg.cells_per_width);
                    let per_point: Vec<Vec<([i64; 2], f64)>> = cfg
                        .x
                        .iter()
                        .map(|x| slab_cells(&kernel, &cfg, x, s_lo, s_hi, h))
                        .collect();
                    let mut keys: Vec<[i64; 2]> =
                        per_point.iter().flat_map(|c| c.iter().map(|e| e.0)).collect();
                    keys.sort_unstable();
                    keys.dedup();
                    let scale = cfg.sigma * ((s_hi - s_lo) * h.powi(cfg.d as i32)).sqrt();
                    let per_x = per_point
                        .iter()
                        .map(|cells| {
                            cells
                                .iter()
                                .map(|(key, g)| (keys.binary_search(key).expect("key present"), scale * g))
                                .collect()
                        })
                        .collect();
                    Slab {
                        n_cells: keys.len(),
                        per_x,
                    }
                })
                .collect();
            let s2 = cfg.sigma * cfg.sigma;
            for (i, v) in gv.iter_mut().enumerate() {
                *v = slabs
                    .iter()
                    .map(|s| s.per_x[i].iter().map(|c| c.1 * c.1).sum::<f64>())
                    .sum();
            }
            let refined = grid_variance(&kernel, &cfg, 2 * cfg.n_time, 2 * cfg.cells_per_width);
            for (i, (v, tail)) in refined.into_iter().enumerate() {
                rv[i] = s2 * v;
                tails[i] = s2 * tail;
            }
        }

        let compensators = if cfg.gamma != 0.0 {
            let drift = cfg.measure.restricted(cfg.epsilon)?.moment(1);
            let lower = &levy_domain.lower()[1..];
            let upper = &levy_domain.upper()[1..];
            // ∫₀^t s^{α−1} m(s) ds = α^{-1} ∫₀^{t^α} m(u^{1/α}) du, where
            // `window_mass` already carries s^{α−1}.
            let rule = Rule1d::composite(0.0, cfg.t.powf(cfg.alpha), COMPENSATOR_PANELS, COMPENSATOR_NODES);
            cfg.x
                .par_iter()
                .map(|x| {
                    let mut acc = 0.0;
                    for (&u, &w) in rule.nodes.iter().zip(&rule.weights) {
                        let s = u.powf(1.0 / cfg.alpha);
                        acc += w * kernel.window_mass(s, x, lower, &upper) / s.powf(cfg.alpha - 1.0);
                    }
                    drift * acc / cfg.alpha
                })
                .collect()
        } else {
            vec![0.0; cfg.x.len()]
        };

        Ok(Self {
            config: cfg,
            kernel,
            i1,
            slabs,
            levy_domain,
            compensators,
            grid_variance: gv,
            refined_variance: rv,
            truncation_tail: tails,
        })
    }

    pub fn config(&self) -> &HeatConfig {
        &self.config
    }

    pub fn kernel(&self) -> &HeatKernel {
        &self.kernel
    }

    pub fn deterministic(&self) -> &[f64] {
        &self.i1
    }

    pub fn levy_domain(&self) -> &Domain {
        &self.levy_domain
    }

    /// `drift · ∫∫ G` per point, the compensator of `I₃ / γ`.
    pub fn compensators(&self) -> &[f64] {
        &self.compensators
    }

    /// Variance of the discrete `I₂` on the configured grid.
    pub fn grid_variance(&self) -> &[f64] {
        &self.grid_variance
    }

    /// `|V_h − V_{h/2}|` plus the spatial truncation tail, per point.
    pub fn bias_estimate(&self) -> Vec<f64> {
        self.grid_variance
            .iter()
            .zip(&self.refined_variance)
            .zip(&self.truncation_tail)
            .map(|((a, b), t)| (a - b).abs() + t)
            .collect()
    }

    /// `σ² ∫∫ G²` over all of space.
    pub fn isometry_variance(&self) -> f64 {
        let s = self.config.sigma;
        if s == 0.0 {
            0.0
        } else {
            s * s * self.kernel.isometry_integral(self.config.t)
        }
    }

    /// One draw of `I₂` at every point.
    pub fn stochastic_term_brownian(&self, seed: u64) -> Vec<f64> {
        let mut out = vec![0.0; self.config.x.len()];
        if self.config.sigma == 0.0 {
            return out;
        }
        let mut rng = stream_rng(seed, Stream::Gaussian as u64);
        let mut z = Vec::new();
        for slab in &self.slabs {
            z.clear();
            z.extend((0..slab.n_cells).map(|_| rng.sample::<f64, _>(StandardNormal)));
            for (o, cells) in out.iter_mut().zip(&slab.per_x) {
                *o += cells.iter().map(|&(c, w)| w * z[c]).sum::<f64>();
            }
        }
        out
    }

    /// `I₃` at every point for a given path on [`Self::levy_domain`].
    pub fn stochastic_term_levy(&self, path: &LevySheetPath) -> Vec<f64> {
        let cfg = &self.config;
        if cfg.gamma == 0.0 {
            return vec![0.0; cfg.x.len()];
        }
        cfg.x
            .iter()
            .zip(&self.compensators)
            .map(|(x, comp)| {
                let mut r = vec![0.0; cfg.d];
                let jumps: f64 = path
                    .jumps
                    .iter()
                    .filter_map(|j| {
                        let s = cfg.t - j.location[0];
                        if s <= 0.0 {
                            return None;
                        }
                        for l in 0..cfg.d {
                            r[l] = x[l] - j.location[l + 1];
                        }
                        Some(j.mark * self.kernel.eval(s, &r))
                    })
                    .sum();
                cfg.gamma * (jumps - comp)
            })
            .collect()
    }

    pub fn simulate_levy_path(&self, seed: u64) -> Result<LevySheetPath> {
        simulate_levy_sheet_on_streams(
            &self.config.measure,
            &self.levy_domain,
            self.config.epsilon,
            seed,
            Stream::Secondary as u64,
        )
    }

    /// `(I₂, I₃)` for one sample seed.
    pub fn sample(&self, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
        let i2 = self.stochastic_term_brownian(seed);
        let i3 = if self.config.gamma == 0.0 {
            vec![0.0; self.config.x.len()]
        } else {
            self.stochastic_term_levy(&self.simulate_levy_path(seed)?)
        };
        Ok((i2, i3))
    }

    pub fn run(&self) -> Result<SolutionStats> {
        let cfg = &self.config;
        let nx = cfg.x.len();
        let deterministic_only = cfg.sigma == 0.0 && cfg.gamma == 0.0;
        let samples: Vec<(Vec<f64>, Vec<f64>)> = if deterministic_only {
            Vec::new()
        } else {
            MonteCarlo::new(cfg.n_samples, cfg.seed)
                .with_workers(cfg.workers)
                .collect(|seed, _| self.sample(seed))
                .into_iter()
                .collect::<Result<_>>()?
        };
        let bias = self.bias_estimate();
        let levy_var = cfg.gamma * cfg.gamma * cfg.measure.restricted(cfg.epsilon)?.big_m();
        let points = (0..nx)
            .map(|i| {
                let (i2, i3, y) = if deterministic_only {
                    let zero = constant_stats(0.0, cfg.n_samples);
                    (zero, zero, constant_stats(self.i1[i], cfg.n_samples))
                } else {
                    let a: Vec<f64> = samples.iter().map(|s| s.0[i]).collect();
                    let b: Vec<f64> = samples.iter().map(|s| s.1[i]).collect();
                    let y: Vec<f64> = a.iter().zip(&b).map(|(p, q)| self.i1[i] + p + q).collect();
                    (
                        SampleStats::from_slice(&a),
                        SampleStats::from_slice(&b),
                        SampleStats::from_slice(&y),
                    )
                };
                PointStats {
                    x: cfg.x[i].clone(),
                    i1: self.i1[i],
                    i2,
                    i3,
                    y,
                    grid_variance: self.grid_variance[i],
                    isometry_variance: self.isometry_variance(),
                    levy_variance: if levy_var == 0.0 {
                        0.0
                    } else {
                        levy_var * self.kernel.isometry_integral(cfg.t)
                    },
                    bias_estimate: bias[i],
                }
            })
            .collect();
        Ok(SolutionStats {
            points,
            n_samples: if deterministic_only { 0 } else { cfg.n_samples },
            warnings: cfg.warnings(),
        })
    }
}

fn constant_stats(v: f64, n: usize) -> SampleStats {
    SampleStats {
        n,
        mean: v,
        variance: 0.0,
        se_mean: 0.0,
        se_variance: 0.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointStats {
    pub x: Vec<f64>,
    pub i1: f64,
    pub i2: SampleStats,
    pub i3: SampleStats,
    pub y: SampleStats,
    /// Exact variance of the discretized `I₂`.
    pub grid_variance: f64,
    /// `σ² ∫∫ G²` over all of space.
    pub isometry_variance: f64,
    /// `γ² M ∫∫ G²` over all of space.
    pub levy_variance: f64,
    pub bias_estimate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionStats {
    pub points: Vec<PointStats>,
    pub n_samples: usize,
    pub warnings: Vec<String>,
}

pub fn solve(config: &HeatConfig) -> Result<SolutionStats> {
    HeatSolver::new(config)?.run()
}
