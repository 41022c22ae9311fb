//! Brownian sheets and finite-activity pure-jump Lévy sheets.
//!
//! A Lévy sheet on a rectangular domain is stored as its jump list plus the
//! compensator drift, so every functional below (sheet values, box
//! increments, jump counts, compensated integrals) is exact per realization.
//! Boxes are half-open, `lower < x ≤ upper`, matching the corner convention
//! of the sheet value `L(x) = N([0,x]) − drift·|[0,x]|`.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::levy_measure::LevyMeasure;
use crate::mc::MonteCarlo;
use crate::quadrature::TensorRule;
use crate::rng::{stream_rng, Stream};
use crate::{Error, Result};

/// Default Gauss–Legendre density for compensator quadrature over the domain.
pub const COMPENSATOR_NODES_PER_UNIT: usize = 16;

/// Axis-aligned parameter domain `origin + [0, extents]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    origin: Vec<f64>,
    extents: Vec<f64>,
}

impl Domain {
    pub fn new(extents: Vec<f64>) -> Result<Self> {
        let n = extents.len();
        Self::with_origin(vec![0.0; n], extents)
    }

    pub fn with_origin(origin: Vec<f64>, extents: Vec<f64>) -> Result<Self> {
        if extents.is_empty() || origin.len() != extents.len() {
            return Err(Error::InvalidArgument(
                "domain needs matching, nonempty origin and extents".into(),
            ));
        }
        if extents.iter().any(|&t| !(t.is_finite() && t > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "domain extents {extents:?} must be positive"
            )));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidArgument("domain origin must be finite".into()));
        }
        Ok(Self { origin, extents })
    }

    /// `[0, 1]ⁿ`.
    pub fn unit(n: usize) -> Self {
        Self::new(vec![1.0; n]).expect("valid")
    }

    /// `[-half, half]ⁿ`.
    pub fn centered(n: usize, half: f64) -> Result<Self> {
        Self::with_origin(vec![-half; n], vec![2.0 * half; n])
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.origin
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents
    }

    pub fn upper(&self) -> Vec<f64> {
        self.origin.iter().zip(&self.extents).map(|(o, t)| o + t).collect()
    }

    pub fn volume(&self) -> f64 {
        self.extents.iter().product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.origin)
                .zip(&self.extents)
                .all(|((&xi, &o), &t)| xi >= o && xi <= o + t)
    }

    pub fn as_rect(&self) -> Rect {
        Rect {
            lower: self.origin.clone(),
            upper: self.upper(),
        }
    }
}

/// Axis-aligned box `(lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rect {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Rect {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidArgument("box corners must have equal, nonzero dimension".into()));
        }
        if lower.iter().zip(&upper).any(|(a, b)| !(a <= b)) {
            return Err(Error::InvalidArgument(format!(
                "box lower corner {lower:?} exceeds upper corner {upper:?}"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// `[0, x]`.
    pub fn from_zero(x: &[f64]) -> Result<Self> {
        Self::new(vec![0.0; x.len()], x.to_vec())
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.lower)
            .zip(&self.upper)
            .all(|((&xi, &a), &b)| xi > a && xi <= b)
    }

    fn inside(&self, domain: &Domain) -> bool {
        domain.contains(&self.lower) && domain.contains(&self.upper)
    }

    /// Intersection, or `None` if empty.
    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        let lower: Vec<f64> = self.lower.iter().zip(&other.lower).map(|(a, b)| a.max(*b)).collect();
        let upper: Vec<f64> = self.upper.iter().zip(&other.upper).map(|(a, b)| a.min(*b)).collect();
        if lower.iter().zip(&upper).any(|(a, b)| a >= b) {
            None
        } else {
            Some(Rect { lower, upper })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jump {
    pub location: Vec<f64>,
    pub mark: f64,
}

/// One interval of a [`MarkSet`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkInterval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl MarkInterval {
    pub fn open(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_open: true, hi_open: true }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_open: false, hi_open: false }
    }

    pub fn contains(&self, z: f64) -> bool {
        let above = if self.lo_open { z > self.lo } else { z >= self.lo };
        let below = if self.hi_open { z < self.hi } else { z <= self.hi };
        above && below
    }
}

/// Finite union of intervals avoiding 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkSet {
    intervals: Vec<MarkInterval>,
}

impl MarkSet {
    pub fn new(intervals: Vec<MarkInterval>) -> Result<Self> {
        if intervals.iter().any(|i| i.contains(0.0)) {
            return Err(Error::MarkSetContainsZero);
        }
        Ok(Self { intervals })
    }

    /// `(0, ∞)`.
    pub fn positive() -> Self {
        Self { intervals: vec![MarkInterval::open(0.0, f64::INFINITY)] }
    }

    /// `(−∞, 0)`.
    pub fn negative() -> Self {
        Self { intervals: vec![MarkInterval::open(f64::NEG_INFINITY, 0.0)] }
    }

    /// `ℝ ∖ (−ε, ε)`, or `ℝ ∖ {0}` when `ε = 0`.
    pub fn outside(epsilon: f64) -> Self {
        Self {
            intervals: vec![
                MarkInterval { lo: f64::NEG_INFINITY, hi: -epsilon, lo_open: true, hi_open: epsilon == 0.0 },
                MarkInterval { lo: epsilon, hi: f64::INFINITY, lo_open: epsilon == 0.0, hi_open: true },
            ],
        }
    }

    pub fn contains(&self, z: f64) -> bool {
        self.intervals.iter().any(|i| i.contains(z))
    }

    pub fn intervals(&self) -> &[MarkInterval] {
        &self.intervals
    }
}

/// A function of a parameter point and a jump size.
pub trait MarkedFn: Sync {
    fn eval(&self, x: &[f64], z: f64) -> f64;

    /// Box outside of which the function vanishes, if known. The
    /// compensator quadrature is restricted to it.
    fn support(&self) -> Option<Rect> {
        None
    }
}

impl<F: Fn(&[f64], f64) -> f64 + Sync> MarkedFn for F {
    fn eval(&self, x: &[f64], z: f64) -> f64 {
        self(x, z)
    }
}

/// `z · 1_R(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxIndicatorMark(pub Rect);

impl MarkedFn for BoxIndicatorMark {
    fn eval(&self, x: &[f64], z: f64) -> f64 {
        if self.0.contains(x) {
            z
        } else {
            0.0
        }
    }

    fn support(&self) -> Option<Rect> {
        Some(self.0.clone())
    }
}

/// Sheet values and box increments shared by Lévy and Brownian paths.
pub trait Sheet {
    fn domain(&self) -> &Domain;

    /// Value at `x`, anchored at the domain's lower corner.
    fn value(&self, x: &[f64]) -> Result<f64>;

    /// `Δ_R` by inclusion–exclusion over the `2ⁿ` corners of `R`.
    fn box_increment_corners(&self, r: &Rect) -> Result<f64> {
        let n = r.lower.len();
        if n != self.domain().dim() {
            return Err(Error::InvalidArgument("box dimension mismatch".into()));
        }
        let mut total = 0.0;
        let mut corner = vec![0.0; n];
        for mask in 0u32..(1 << n) {
            let mut lows = 0;
            for l in 0..n {
                if mask & (1 << l) != 0 {
                    corner[l] = r.lower[l];
                    lows += 1;
                } else {
                    corner[l] = r.upper[l];
                }
            }
            let v = self.value(&corner)?;
            total += if lows % 2 == 0 { v } else { -v };
        }
        Ok(total)
    }
}

/// A realization of a pure-jump Lévy sheet with jumps `|z| ≥ ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevySheetPath {
    pub measure: Arc<LevyMeasure>,
    pub domain: Domain,
    pub epsilon: f64,
    pub jumps: Vec<Jump>,
    /// `∫_{|z|≥ε} z ν(dz)`, compensator per unit volume.
    pub drift_rate: f64,
    /// `ν({|z| ≥ ε})`.
    pub jump_intensity: f64,
    /// `∫_{|z|<ε} z² ν(dz)`, per unit volume.
    pub omitted_small_jump_variance: f64,
    pub seed: u64,
}

impl LevySheetPath {
    /// Path with a prescribed jump list.
    pub fn from_jumps(
        measure: Arc<LevyMeasure>,
        domain: Domain,
        epsilon: f64,
        jumps: Vec<Jump>,
    ) -> Result<Self> {
        let restricted = measure.restricted(epsilon)?;
        for j in &jumps {
            if !domain.contains(&j.location) {
                return Err(Error::OutsideDomain(j.location.clone()));
            }
            if j.mark == 0.0 || j.mark.abs() < epsilon {
                return Err(Error::InvalidArgument(format!(
                    "jump mark {} violates |z| >= epsilon = {epsilon}",
                    j.mark
                )));
            }
        }
        Ok(Self {
            drift_rate: restricted.moment(1),
            jump_intensity: restricted.total_mass(),
            omitted_small_jump_variance: (measure.big_m() - restricted.big_m()).max(0.0),
            measure,
            domain,
            epsilon,
            jumps,
            seed: 0,
        })
    }

    /// The measure that generated the jumps, `ν` restricted to `|z| ≥ ε`.
    pub fn jump_measure(&self) -> Result<LevyMeasure> {
        self.measure.restricted(self.epsilon)
    }

    /// `Σ_{R} marks − drift·|R|`, equal to the corner formula.
    pub fn box_increment(&self, r: &Rect) -> Result<f64> {
        if !r.inside(&self.domain) {
            return Err(Error::OutsideDomain(r.upper.clone()));
        }
        let s: f64 = self
            .jumps
            .iter()
            .filter(|j| r.contains(&j.location))
            .map(|j| j.mark)
            .sum();
        Ok(s - self.drift_rate * r.volume())
    }

    /// `N(R, U)`.
    pub fn jump_count(&self, r: &Rect, u: &MarkSet) -> usize {
        self.jumps
            .iter()
            .filter(|j| r.contains(&j.location) && u.contains(j.mark))
            .count()
    }

    /// `Σ_jumps f(location, mark)`.
    pub fn jump_sum<F: MarkedFn + ?Sized>(&self, f: &F) -> f64 {
        self.jumps.iter().map(|j| f.eval(&j.location, j.mark)).sum()
    }
}

impl Sheet for LevySheetPath {
    fn domain(&self) -> &Domain {
        &self.domain
    }

    /// `L(x) = Σ_{0 < loc ≤ x} mark − drift·Π x_l`. Requires `[0, x]` to lie
    /// in the domain.
    fn value(&self, x: &[f64]) -> Result<f64> {
        let r = Rect::from_zero(x).map_err(|_| Error::OutsideDomain(x.to_vec()))?;
        if !r.inside(&self.domain) {
            return Err(Error::OutsideDomain(x.to_vec()));
        }
        self.box_increment(&r)
    }
}

/// `jump_count` with mark-set validation.
pub fn jump_count(path: &LevySheetPath, r: &Rect, u: &[MarkInterval]) -> Result<usize> {
    let set = MarkSet::new(u.to_vec())?;
    Ok(path.jump_count(r, &set))
}

/// Poisson count, uniform locations and i.i.d. marks, each from its own
/// stream of `seed`.
pub fn simulate_levy_sheet(
    measure: &Arc<LevyMeasure>,
    domain: &Domain,
    epsilon: f64,
    seed: u64,
) -> Result<LevySheetPath> {
    simulate_levy_sheet_on_streams(measure, domain, epsilon, seed, 0)
}

/// As [`simulate_levy_sheet`], with all stream ids shifted by `stream_offset`.
pub fn simulate_levy_sheet_on_streams(
    measure: &Arc<LevyMeasure>,
    domain: &Domain,
    epsilon: f64,
    seed: u64,
    stream_offset: u64,
) -> Result<LevySheetPath> {
    let restricted = measure.restricted(epsilon)?;
    let sampler = restricted.mark_sampler();
    let mean = domain.volume() * restricted.total_mass();
    let mut count_rng = stream_rng(seed, Stream::Count as u64 + stream_offset);
    let count = if mean > 0.0 {
        let p = Poisson::new(mean).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        p.sample(&mut count_rng) as usize
    } else {
        0
    };
    let mut loc_rng = stream_rng(seed, Stream::Location as u64 + stream_offset);
    let mut mark_rng = stream_rng(seed, Stream::Mark as u64 + stream_offset);
    let lower = domain.lower();
    let ext = domain.extents();
    let jumps = (0..count)
        .map(|_| {
            let location = lower
                .iter()
                .zip(ext)
                .map(|(o, t)| o + t * loc_rng.random::<f64>())
                .collect();
            Jump { location, mark: sampler.sample(&mut mark_rng) }
        })
        .collect();
    Ok(LevySheetPath {
        drift_rate: restricted.moment(1),
        jump_intensity: restricted.total_mass(),
        omitted_small_jump_variance: (measure.big_m() - restricted.big_m()).max(0.0),
        measure: Arc::clone(measure),
        domain: domain.clone(),
        epsilon,
        jumps,
        seed,
    })
}

/// Tensor quadrature for `∫∫ f(x, z) ν(dz) dx` over a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct CompensatorRule {
    domain: Domain,
    nodes_per_unit: usize,
    z_nodes: Vec<f64>,
    z_weights: Vec<f64>,
}

impl CompensatorRule {
    pub fn new(measure: &LevyMeasure, domain: &Domain, nodes_per_unit: usize) -> Self {
        Self {
            domain: domain.clone(),
            nodes_per_unit,
            z_nodes: measure.nodes().to_vec(),
            z_weights: measure.weights().to_vec(),
        }
    }

    pub fn for_path(path: &LevySheetPath) -> Result<Self> {
        Ok(Self::new(&path.jump_measure()?, &path.domain, COMPENSATOR_NODES_PER_UNIT))
    }

    pub fn integrate<F: MarkedFn + ?Sized>(&self, f: &F) -> f64 {
        let full = self.domain.as_rect();
        let region = match f.support() {
            Some(s) => match full.intersect(&s) {
                Some(r) => r,
                None => return 0.0,
            },
            None => full,
        };
        let rule = TensorRule::on_box(&region.lower, &region.upper, self.nodes_per_unit);
        rule.integrate(|x| {
            self.z_nodes
                .iter()
                .zip(&self.z_weights)
                .map(|(&z, &w)| w * f.eval(x, z))
                .sum()
        })
    }
}

/// A marked function with its compensator computed once.
pub struct CompensatedFunctional<F> {
    f: F,
    compensator: f64,
}

impl<F: MarkedFn> CompensatedFunctional<F> {
    pub fn new(f: F, rule: &CompensatorRule) -> Self {
        let compensator = rule.integrate(&f);
        Self { f, compensator }
    }

    pub fn compensator(&self) -> f64 {
        self.compensator
    }

    /// `∫∫ f dÑ` on `path`.
    pub fn eval(&self, path: &LevySheetPath) -> f64 {
        path.jump_sum(&self.f) - self.compensator
    }
}

/// `Σ_jumps f − ∫∫ f dν dx` with the default compensator rule.
pub fn compensated_integral<F: MarkedFn>(path: &LevySheetPath, f: &F) -> Result<f64> {
    let rule = CompensatorRule::for_path(path)?;
    Ok(path.jump_sum(f) - rule.integrate(f))
}

/// One row of an [`empirical_cf_check`] report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfRow {
    pub u: f64,
    pub empirical: Complex64,
    pub target: Complex64,
    pub deviation: f64,
    /// `sqrt((Var Re + Var Im) / n)`.
    pub se: f64,
}

impl CfRow {
    pub fn within(&self, n_se: f64) -> bool {
        self.deviation <= n_se * self.se || self.deviation < 1e-14
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfReport {
    pub rows: Vec<CfRow>,
    pub n_samples: usize,
}

impl CfReport {
    pub fn max_deviation(&self) -> f64 {
        self.rows.iter().map(|r| r.deviation).fold(0.0, f64::max)
    }

    pub fn all_within(&self, n_se: f64) -> bool {
        self.rows.iter().all(|r| r.within(n_se))
    }
}

/// Compares the empirical mean of `exp(i u Δ_R L)` with `exp(|R| Ψ(u))`.
pub fn empirical_cf_check(
    measure: &Arc<LevyMeasure>,
    domain: &Domain,
    r: &Rect,
    u_grid: &[f64],
    mc: &MonteCarlo,
) -> Result<CfReport> {
    if !r.inside(domain) {
        return Err(Error::OutsideDomain(r.upper.clone()));
    }
    let increments: Vec<f64> = mc
        .collect(|seed, _| {
            simulate_levy_sheet(measure, domain, 0.0, seed).and_then(|p| p.box_increment(r))
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let n = increments.len() as f64;
    let rows = u_grid
        .iter()
        .map(|&u| {
            let (mut sc, mut ss, mut sc2, mut ss2) = (0.0, 0.0, 0.0, 0.0);
            for &d in &increments {
                let (s, c) = (u * d).sin_cos();
                sc += c;
                ss += s;
                sc2 += c * c;
                ss2 += s * s;
            }
            let mc_ = sc / n;
            let ms = ss / n;
            let var_c = (sc2 / n - mc_ * mc_).max(0.0) * n / (n - 1.0);
            let var_s = (ss2 / n - ms * ms).max(0.0) * n / (n - 1.0);
            let empirical = Complex64::new(mc_, ms);
            let target = (measure.psi(u) * r.volume()).exp();
            CfRow {
                u,
                empirical,
                target,
                deviation: (empirical - target).norm(),
                se: ((var_c + var_s) / n).sqrt(),
            }
        })
        .collect();
    Ok(CfReport { rows, n_samples: increments.len() })
}

/// Brownian sheet on a rectangular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianSheetPath {
    pub domain: Domain,
    /// Per-axis partition points, starting at the domain's lower corner.
    pub grid: Vec<Vec<f64>>,
    /// Cell increments, row-major (last axis fastest).
    pub increments: Vec<f64>,
    /// Sheet values at grid points, row-major, including the zero faces.
    cumulative: Vec<f64>,
    pub seed: u64,
}

/// `cells[l]` equal cells along axis `l`.
pub fn uniform_grid(domain: &Domain, cells: &[usize]) -> Result<Vec<Vec<f64>>> {
    if cells.len() != domain.dim() || cells.iter().any(|&c| c == 0) {
        return Err(Error::InvalidArgument("grid needs a positive cell count per axis".into()));
    }
    Ok(domain
        .lower()
        .iter()
        .zip(domain.extents())
        .zip(cells)
        .map(|((&o, &t), &c)| {
            (0..=c)
                .map(|k| if k == c { o + t } else { o + t * k as f64 / c as f64 })
                .collect()
        })
        .collect())
}

pub fn simulate_brownian_sheet(domain: &Domain, grid: Vec<Vec<f64>>, seed: u64) -> Result<BrownianSheetPath> {
    simulate_brownian_sheet_on_stream(domain, grid, seed, Stream::Gaussian as u64)
}

pub fn simulate_brownian_sheet_on_stream(
    domain: &Domain,
    grid: Vec<Vec<f64>>,
    seed: u64,
    stream: u64,
) -> Result<BrownianSheetPath> {
    let n = domain.dim();
    if grid.len() != n {
        return Err(Error::InvalidArgument("grid dimension mismatch".into()));
    }
    for (l, g) in grid.iter().enumerate() {
        let lo = domain.lower()[l];
        let hi = lo + domain.extents()[l];
        if g.len() < 2
            || g[0] != lo
            || (g[g.len() - 1] - hi).abs() > 1e-12 * hi.abs().max(1.0)
            || g.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidArgument(format!(
                "grid axis {l} must increase strictly from {lo} to {hi}"
            )));
        }
    }
    let cells: Vec<usize> = grid.iter().map(|g| g.len() - 1).collect();
    let total: usize = cells.iter().product();
    let mut rng = stream_rng(seed, stream);
    let mut increments = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        let vol: f64 = (0..n).map(|l| grid[l][idx[l] + 1] - grid[l][idx[l]]).product();
        let g: f64 = StandardNormal.sample(&mut rng);
        increments.push(vol.sqrt() * g);
        advance(&mut idx, &cells);
    }

    // Cumulative sums over a padded grid, one axis at a time.
    let pts: Vec<usize> = grid.iter().map(Vec::len).collect();
    let mut cumulative = vec![0.0; pts.iter().product()];
    let mut idx = vec![0usize; n];
    for &inc in &increments {
        let flat = flatten(&idx.iter().map(|i| i + 1).collect::<Vec<_>>(), &pts);
        cumulative[flat] = inc;
        advance(&mut idx, &cells);
    }
    let mut stride = 1;
    for l in (0..n).rev() {
        for flat in 0..cumulative.len() {
            let coord = (flat / stride) % pts[l];
            if coord > 0 {
                cumulative[flat] += cumulative[flat - stride];
            }
        }
        stride *= pts[l];
    }
    Ok(BrownianSheetPath {
        domain: domain.clone(),
        grid,
        increments,
        cumulative,
        seed,
    })
}

fn advance(idx: &mut [usize], dims: &[usize]) {
    for l in (0..idx.len()).rev() {
        idx[l] += 1;
        if idx[l] < dims[l] {
            return;
        }
        idx[l] = 0;
    }
}

fn flatten(idx: &[usize], dims: &[usize]) -> usize {
    idx.iter().zip(dims).fold(0, |acc, (&i, &d)| acc * d + i)
}

impl BrownianSheetPath {
    /// Value at a grid point given by per-axis indices.
    pub fn value_at_index(&self, idx: &[usize]) -> f64 {
        let pts: Vec<usize> = self.grid.iter().map(Vec::len).collect();
        self.cumulative[flatten(idx, &pts)]
    }
}

impl Sheet for BrownianSheetPath {
    fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Value at the largest grid point `≤ x` on every axis.
    fn value(&self, x: &[f64]) -> Result<f64> {
        if !self.domain.contains(x) {
            return Err(Error::OutsideDomain(x.to_vec()));
        }
        let idx: Vec<usize> = self
            .grid
            .iter()
            .zip(x)
            .map(|(g, &xl)| {
                let tol = 1e-12 * xl.abs().max(1.0);
                g.partition_point(|&p| p <= xl + tol).saturating_sub(1)
            })
            .collect();
        Ok(self.value_at_index(&idx))
    }
}
