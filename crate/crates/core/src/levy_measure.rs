//! Finite-activity Lévy measures ν on ℝ∖{0}.
//!
//! Two variants are supported: a finite list of atoms, and a bounded density
//! on `[-C, -ε₀] ∪ [ε₀, C]`. Every functional (moments, Ψ, inner products)
//! is a weighted sum over a fixed node set: the atoms themselves, or a
//! Gauss–Legendre rule on each side of the density's support.

use std::fmt;

use num_complex::Complex64;
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;

use crate::quadrature::GaussLegendre;
use crate::{Error, Result};

/// Default number of Gauss–Legendre nodes on each side of a density.
pub const DEFAULT_NODES_PER_SIDE: usize = 64;
/// Highest moment cached in a [`MomentTable`].
pub const DEFAULT_P_MAX: usize = 12;

/// Shape of a density in `|z|`. Every shape is nonincreasing in `|z|`,
/// which the rejection sampler relies on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityShape {
    Uniform,
    /// `|z|^{-exponent}`, `exponent ≥ 0`.
    Power { exponent: f64 },
    /// `exp(-rate·|z|)`, `rate ≥ 0`.
    ExpDecay { rate: f64 },
}

impl DensityShape {
    fn eval(self, r: f64) -> f64 {
        match self {
            DensityShape::Uniform => 1.0,
            DensityShape::Power { exponent } => r.powf(-exponent),
            DensityShape::ExpDecay { rate } => (-rate * r).exp(),
        }
    }

    fn validate(self) -> Result<()> {
        let ok = match self {
            DensityShape::Uniform => true,
            DensityShape::Power { exponent } => exponent.is_finite() && exponent >= 0.0,
            DensityShape::ExpDecay { rate } => rate.is_finite() && rate >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidMeasure(format!(
                "density shape {self:?} must have a finite nonnegative parameter"
            )))
        }
    }
}

/// Density `scale_± · shape(|z|)` on `ε₀ ≤ |z| ≤ C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensitySpec {
    pub shape: DensityShape,
    pub eps0: f64,
    pub cutoff: f64,
    pub pos_scale: f64,
    pub neg_scale: f64,
    pub nodes_per_side: usize,
}

impl DensitySpec {
    pub fn symmetric(shape: DensityShape, eps0: f64, cutoff: f64, scale: f64) -> Self {
        Self {
            shape,
            eps0,
            cutoff,
            pos_scale: scale,
            neg_scale: scale,
            nodes_per_side: DEFAULT_NODES_PER_SIDE,
        }
    }

    pub fn density(&self, z: f64) -> f64 {
        let r = z.abs();
        if r < self.eps0 || r > self.cutoff {
            return 0.0;
        }
        let scale = if z > 0.0 { self.pos_scale } else { self.neg_scale };
        scale * self.shape.eval(r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureKind {
    Atoms(Vec<(f64, f64)>),
    Density(DensitySpec),
}

/// A finite-activity Lévy measure with its discretization.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyMeasure {
    name: String,
    kind: MeasureKind,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl fmt::Display for LevyMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            MeasureKind::Atoms(a) => write!(f, "{} ({} atoms)", self.name, a.len()),
            MeasureKind::Density(d) => write!(
                f,
                "{} (density on {} <= |z| <= {})",
                self.name, d.eps0, d.cutoff
            ),
        }
    }
}

impl LevyMeasure {
    pub fn atoms(name: impl Into<String>, atoms: &[(f64, f64)]) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("atom list is empty".into()));
        }
        for &(z, w) in atoms {
            if z == 0.0 {
                return Err(Error::InvalidMeasure("atom at z=0 forbidden".into()));
            }
            if !z.is_finite() {
                return Err(Error::InvalidMeasure(format!("atom location {z} is not finite")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidMeasure(format!(
                    "atom weight {w} at z={z} must be positive and finite"
                )));
            }
        }
        let m = Self {
            name: name.into(),
            kind: MeasureKind::Atoms(atoms.to_vec()),
            nodes: atoms.iter().map(|a| a.0).collect(),
            weights: atoms.iter().map(|a| a.1).collect(),
        };
        m.check_second_moment()?;
        Ok(m)
    }

    pub fn density(name: impl Into<String>, spec: DensitySpec) -> Result<Self> {
        spec.shape.validate()?;
        if !(spec.eps0.is_finite() && spec.eps0 > 0.0) {
            return Err(Error::InvalidMeasure(format!(
                "density lower bound eps0 = {} must be positive",
                spec.eps0
            )));
        }
        if !(spec.cutoff.is_finite() && spec.cutoff > spec.eps0) {
            return Err(Error::InvalidMeasure(format!(
                "density cutoff C = {} must be finite and exceed eps0 = {}",
                spec.cutoff, spec.eps0
            )));
        }
        for s in [spec.pos_scale, spec.neg_scale] {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::InvalidMeasure(format!(
                    "density scale {s} must be finite and nonnegative"
                )));
            }
        }
        if spec.nodes_per_side == 0 {
            return Err(Error::InvalidMeasure("nodes_per_side must be positive".into()));
        }
        let rule = GaussLegendre::new(spec.nodes_per_side).mapped(spec.eps0, spec.cutoff);
        let mut nodes = Vec::with_capacity(2 * rule.len());
        let mut weights = Vec::with_capacity(2 * rule.len());
        for (sign, scale) in [(-1.0, spec.neg_scale), (1.0, spec.pos_scale)] {
            if scale == 0.0 {
                continue;
            }
            for (&r, &w) in rule.nodes.iter().zip(&rule.weights) {
                nodes.push(sign * r);
                weights.push(w * scale * spec.shape.eval(r));
            }
        }
        let m = Self {
            name: name.into(),
            kind: MeasureKind::Density(spec),
            nodes,
            weights,
        };
        m.check_second_moment()?;
        Ok(m)
    }

    /// `ν = δ₁`.
    pub fn unit_atom() -> Self {
        Self::atoms("unit-atom", &[(1.0, 1.0)]).expect("valid")
    }

    /// `ν = ½δ₋₁ + ½δ₁`.
    pub fn two_point() -> Self {
        Self::atoms("two-point", &[(-1.0, 0.5), (1.0, 0.5)]).expect("valid")
    }

    fn check_second_moment(&self) -> Result<()> {
        let m = self.moment(2);
        if m > 0.0 && m.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidMeasure(format!(
                "second moment must be positive and finite, got {m}"
            )))
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    /// Discretization nodes (atoms or quadrature nodes).
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Discretization weights, density values already folded in.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of atoms, or `None` for a density.
    pub fn atom_count(&self) -> Option<usize> {
        match &self.kind {
            MeasureKind::Atoms(a) => Some(a.len()),
            MeasureKind::Density(_) => None,
        }
    }

    /// `∫ f dν`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * f(z))
            .sum()
    }

    /// `∫ z^p ν(dz)`.
    pub fn moment(&self, p: u32) -> f64 {
        self.integrate(|z| z.powi(p as i32))
    }

    /// `M = ∫ z² ν(dz)`.
    pub fn big_m(&self) -> f64 {
        self.moment(2)
    }

    /// `m₂ = √M`.
    pub fn m2(&self) -> f64 {
        self.big_m().sqrt()
    }

    /// `ν(ℝ∖{0})`.
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Ψ(w) = ∫ (e^{iwz} − 1 − iwz) ν(dz)`. The real part uses
    /// `cos θ − 1 = −2 sin²(θ/2)` to avoid cancellation near `w = 0`.
    pub fn psi(&self, w: f64) -> Complex64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for (&z, &wt) in self.nodes.iter().zip(&self.weights) {
            let th = w * z;
            let s = (0.5 * th).sin();
            re -= 2.0 * wt * s * s;
            im += wt * (th.sin() - th);
        }
        Complex64::new(re, im)
    }

    /// `∫_{|z|≥ε} exp(λ|z|) ν(dz)`.
    pub fn exponential_moment(&self, epsilon: f64, lambda: f64) -> f64 {
        self.integrate(|z| {
            if z.abs() >= epsilon {
                (lambda * z.abs()).exp()
            } else {
                0.0
            }
        })
    }

    pub fn check_exponential_moment(&self, epsilon: f64, lambda: f64) -> Result<ExponentialMoment> {
        if !(epsilon > 0.0 && lambda > 0.0) {
            return Err(Error::InvalidArgument(
                "exponential moment check needs epsilon > 0 and lambda > 0".into(),
            ));
        }
        let value = self.exponential_moment(epsilon, lambda);
        Ok(ExponentialMoment {
            finite: value.is_finite(),
            value,
        })
    }

    /// Inner product of `L²(ρ)`, `ρ(dz) = z²ν(dz)`.
    pub fn rho_inner<F, G>(&self, f: F, g: G) -> f64
    where
        F: Fn(f64) -> f64,
        G: Fn(f64) -> f64,
    {
        self.integrate(|z| z * z * f(z) * g(z))
    }

    /// Inner product of `L²(ν)`.
    pub fn l2_inner<F, G>(&self, f: F, g: G) -> f64
    where
        F: Fn(f64) -> f64,
        G: Fn(f64) -> f64,
    {
        self.integrate(|z| f(z) * g(z))
    }

    /// The restriction of ν to `{|z| ≥ ε}`. `ε = 0` returns a copy.
    pub fn restricted(&self, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "truncation epsilon = {epsilon} must be finite and nonnegative"
            )));
        }
        if epsilon == 0.0 {
            return Ok(self.clone());
        }
        let name = format!("{}|>={epsilon}", self.name);
        match &self.kind {
            MeasureKind::Atoms(a) => {
                let kept: Vec<_> = a.iter().copied().filter(|(z, _)| z.abs() >= epsilon).collect();
                Self::atoms(name, &kept)
            }
            MeasureKind::Density(d) => {
                let mut d = *d;
                d.eps0 = d.eps0.max(epsilon);
                Self::density(name, d)
            }
        }
    }

    /// Sampler for the normalized measure `ν / ν(ℝ∖{0})`.
    pub fn mark_sampler(&self) -> MarkSampler {
        match &self.kind {
            MeasureKind::Atoms(a) => MarkSampler::Atoms {
                values: a.iter().map(|x| x.0).collect(),
                index: WeightedIndex::new(a.iter().map(|x| x.1)).expect("positive weights"),
            },
            MeasureKind::Density(d) => {
                let mut neg_mass = 0.0;
                let mut pos_mass = 0.0;
                for (&z, &w) in self.nodes.iter().zip(&self.weights) {
                    if z < 0.0 {
                        neg_mass += w;
                    } else {
                        pos_mass += w;
                    }
                }
                MarkSampler::Density {
                    spec: *d,
                    p_positive: pos_mass / (pos_mass + neg_mass),
                    peak: d.shape.eval(d.eps0),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialMoment {
    pub finite: bool,
    pub value: f64,
}

/// Draws i.i.d. marks from the normalized Lévy measure.
#[derive(Debug, Clone)]
pub enum MarkSampler {
    Atoms {
        values: Vec<f64>,
        index: WeightedIndex<f64>,
    },
    /// Side chosen by mass, then rejection from a uniform proposal on
    /// `[ε₀, C]` (the shape is maximal at `ε₀`).
    Density {
        spec: DensitySpec,
        p_positive: f64,
        peak: f64,
    },
}

impl MarkSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            MarkSampler::Atoms { values, index } => values[index.sample(rng)],
            MarkSampler::Density {
                spec,
                p_positive,
                peak,
            } => {
                let sign = if rng.random::<f64>() < *p_positive { 1.0 } else { -1.0 };
                loop {
                    let r = spec.eps0 + (spec.cutoff - spec.eps0) * rng.random::<f64>();
                    if rng.random::<f64>() * peak <= spec.shape.eval(r) {
                        return sign * r;
                    }
                }
            }
        }
    }
}

/// Cached moments `∫ z^p ν(dz)`, `p = 1..=p_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    moments: Vec<f64>,
    pub big_m: f64,
    pub m2: f64,
}

impl MomentTable {
    pub fn new(measure: &LevyMeasure, p_max: usize) -> Self {
        let moments: Vec<f64> = (1..=p_max.max(2)).map(|p| measure.moment(p as u32)).collect();
        let big_m = moments[1];
        Self {
            moments,
            big_m,
            m2: big_m.sqrt(),
        }
    }

    pub fn p_max(&self) -> usize {
        self.moments.len()
    }

    pub fn get(&self, p: usize) -> Option<f64> {
        p.checked_sub(1).and_then(|i| self.moments.get(i).copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn atom_moments() {
        assert_eq!(LevyMeasure::unit_atom().moment(2), 1.0);
        let tp = LevyMeasure::two_point();
        assert_eq!(tp.moment(3), 0.0);
        assert_eq!(tp.moment(4), 1.0);
    }

    #[test]
    fn psi_closed_forms() {
        let ua = LevyMeasure::unit_atom();
        for &w in &[0.3, 1.0, 2.5, -4.0] {
            let want = Complex64::new(0.0, w).exp() - 1.0 - Complex64::new(0.0, w);
            let got = ua.psi(w);
            assert_abs_diff_eq!(got.re, want.re, epsilon = 1e-14);
            assert_abs_diff_eq!(got.im, want.im, epsilon = 1e-14);
        }
        let tp = LevyMeasure::two_point();
        for &w in &[0.1, 1.0, 3.0] {
            let got = tp.psi(w);
            assert_abs_diff_eq!(got.re, w.cos() - 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-15);
        }
        assert_eq!(tp.psi(0.0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn exponential_moment_cases() {
        let r = LevyMeasure::unit_atom().check_exponential_moment(0.5, 1.0).unwrap();
        assert!(r.finite);
        assert_abs_diff_eq!(r.value, std::f64::consts::E, epsilon = 1e-15);
        let r = LevyMeasure::two_point().check_exponential_moment(2.0, 1.0).unwrap();
        assert!(r.finite);
        assert_eq!(r.value, 0.0);
        let d = LevyMeasure::density(
            "u",
            DensitySpec {
                pos_scale: 1.0,
                neg_scale: 0.0,
                ..DensitySpec::symmetric(DensityShape::Uniform, 0.1, 10.0, 1.0)
            },
        )
        .unwrap();
        let r = d.check_exponential_moment(0.1, 3.0).unwrap();
        assert!(r.finite);
        assert_abs_diff_eq!(r.value, ((30.0f64).exp() - (0.3f64).exp()) / 3.0, epsilon = 1e-9 * r.value);
    }

    #[test]
    fn rho_inner_examples() {
        let tp = LevyMeasure::two_point();
        assert_eq!(LevyMeasure::unit_atom().rho_inner(|_| 1.0, |_| 1.0), 1.0);
        assert_eq!(tp.rho_inner(|z| z, |_| 1.0), 0.0);
        assert_eq!(tp.rho_inner(|z| z, |z| z), 1.0);
    }

    #[test]
    fn rejects_bad_atoms() {
        assert!(matches!(
            LevyMeasure::atoms("x", &[(0.0, 1.0)]),
            Err(Error::InvalidMeasure(m)) if m.contains("z=0")
        ));
        assert!(LevyMeasure::atoms("x", &[(1.0, -1.0)]).is_err());
        assert!(LevyMeasure::atoms("x", &[]).is_err());
    }

    #[test]
    fn density_quadrature_matches_closed_form() {
        let d = LevyMeasure::density(
            "exp",
            DensitySpec::symmetric(DensityShape::ExpDecay { rate: 2.0 }, 0.05, 3.0, 1.5),
        )
        .unwrap();
        // ∫_a^b r² e^{-2r} dr, both sides.
        let anti = |r: f64| -(-2.0 * r).exp() * (2.0 * r * r + 2.0 * r + 1.0) / 4.0;
        let want = 2.0 * 1.5 * (anti(3.0) - anti(0.05));
        assert_abs_diff_eq!(d.moment(2), want, epsilon = 1e-13);
        assert_abs_diff_eq!(d.moment(3), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn restriction_drops_small_jumps() {
        let m = LevyMeasure::atoms("a", &[(-0.1, 2.0), (0.5, 1.0), (2.0, 0.5)]).unwrap();
        let r = m.restricted(0.2).unwrap();
        assert_eq!(r.total_mass(), 1.5);
        assert!(m.restricted(5.0).is_err());
    }

    #[test]
    fn density_sampler_matches_first_moment() {
        let spec = DensitySpec {
            pos_scale: 2.0,
            neg_scale: 1.0,
            ..DensitySpec::symmetric(DensityShape::Power { exponent: 1.5 }, 0.2, 2.0, 1.0)
        };
        let d = LevyMeasure::density("p", spec).unwrap();
        let sampler = d.mark_sampler();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let want = d.moment(1) / d.total_mass();
        assert!((mean - want).abs() < 4.0 * (var / n as f64).sqrt());
        assert!(xs.iter().all(|x| (0.2..=2.0).contains(&x.abs())));
    }

    #[test]
    fn moment_table() {
        let t = MomentTable::new(&LevyMeasure::two_point(), DEFAULT_P_MAX);
        assert_eq!(t.p_max(), 12);
        assert_eq!(t.get(4), Some(1.0));
        assert_eq!(t.get(13), None);
        assert!((t.m2 * t.m2 - t.big_m).abs() <= 4.0 * f64::EPSILON * t.big_m);
    }

    fn arb_measure() -> impl Strategy<Value = LevyMeasure> {
        prop::collection::vec(
            ((-3.0f64..3.0).prop_filter("nonzero", |z| z.abs() > 1e-3), 0.01f64..2.0),
            1..6,
        )
        .prop_map(|a| LevyMeasure::atoms("arb", &a).unwrap())
    }

    proptest! {
        #[test]
        fn psi_bounds(m in arb_measure(), w in -20.0f64..20.0) {
            let p = m.psi(w);
            prop_assert!(p.re <= 0.0);
            prop_assert!(p.norm() <= 0.5 * w * w * m.moment(2) * (1.0 + 1e-12) + 1e-300);
        }

        #[test]
        fn rho_inner_is_shifted_moment(m in arb_measure(), a in 0u32..4, b in 0u32..3) {
            let got = m.rho_inner(|z| z.powi(a as i32), |z| z.powi(b as i32));
            let want = m.moment(a + b + 2);
            prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }
}
