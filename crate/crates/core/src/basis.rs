//! Deterministic function systems.
//!
//! Hermite polynomials `h_n` (probabilists' convention) and Hermite functions
//! `ξ_n`, the graded-lex tensor basis `e_j` of `L²(ℝⁿ)`, polynomials `p_j`
//! orthonormal in `L²(ν)`, the pairing bijection `κ`, and `θ_{κ(i,j)} = e_i ⊗ p_j`.
//!
//! Hermite-function labels start at 1 (`ξ_1 = π^{-1/4}e^{-x²/2}`), as do the
//! entries of tensor labels `β ∈ ℕⁿ`.

use std::f64::consts::PI;

use crate::levy_measure::LevyMeasure;
use crate::quadrature::Rule1d;
use crate::{Error, Result};

/// Largest Hermite-function label accepted by [`hermite_function`].
pub const MAX_HERMITE_INDEX: usize = 4096;

/// Default quadrature density for `∫ ξ_n` over an interval.
pub const NODES_PER_UNIT: usize = 32;

const RESCALE_ABOVE: f64 = 1e150;

/// `h_n(x)` via `h_{n+1} = x h_n − n h_{n−1}`.
pub fn hermite_poly(n: usize, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, x);
    if n == 0 {
        return h0;
    }
    for k in 1..n {
        let h2 = x * h1 - k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// `ξ_n(x)` for `1 ≤ n ≤ MAX_HERMITE_INDEX`.
pub fn hermite_function(n: usize, x: f64) -> Result<f64> {
    if n == 0 || n > MAX_HERMITE_INDEX {
        return Err(Error::HermiteIndex(n));
    }
    let mut out = 0.0;
    hermite_walk(n, x, |k, v| {
        if k == n {
            out = v;
        }
    });
    Ok(out)
}

/// `[ξ_1(x), …, ξ_n(x)]`.
pub fn hermite_functions_upto(n: usize, x: f64) -> Result<Vec<f64>> {
    if n > MAX_HERMITE_INDEX {
        return Err(Error::HermiteIndex(n));
    }
    let mut out = Vec::with_capacity(n);
    hermite_walk(n, x, |_, v| out.push(v));
    Ok(out)
}

// Normalized recurrence ψ_{k+1} = √(2/(k+1)) x ψ_k − √(k/(k+1)) ψ_{k−1} with
// ψ_0 = π^{-1/4}e^{-x²/2}. The Gaussian factor is carried as a log-scale so
// that large |x| neither underflows early terms nor overflows later ones.
fn hermite_walk<F: FnMut(usize, f64)>(n: usize, x: f64, mut emit: F) {
    if n == 0 {
        return;
    }
    let mut log_scale = -0.5 * x * x - 0.25 * PI.ln();
    let mut prev = 0.0;
    let mut cur = 1.0;
    emit(1, log_scale.exp());
    for k in 0..n - 1 {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_ABOVE {
            prev /= RESCALE_ABOVE;
            cur /= RESCALE_ABOVE;
            log_scale += RESCALE_ABOVE.ln();
        }
        emit(k + 2, cur * log_scale.exp());
    }
}

/// `[∫_a^b ξ_1, …, ∫_a^b ξ_n]` by composite Gauss–Legendre with
/// `nodes_per_unit` nodes per unit length (signed if `b < a`).
pub fn hermite_integrals(n: usize, a: f64, b: f64, nodes_per_unit: usize) -> Result<Vec<f64>> {
    if n > MAX_HERMITE_INDEX {
        return Err(Error::HermiteIndex(n));
    }
    let (lo, hi, sign) = if b >= a { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut acc = vec![0.0; n];
    let rule = Rule1d::per_unit_length(lo, hi, nodes_per_unit);
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let mut k = 0;
        hermite_walk(n, x, |_, v| {
            acc[k] += w * v;
            k += 1;
        });
    }
    for v in &mut acc {
        *v *= sign;
    }
    Ok(acc)
}

/// `κ(i, j) = j + (i+j−2)(i+j−1)/2`.
pub fn kappa(i: usize, j: usize) -> usize {
    assert!(i >= 1 && j >= 1, "kappa is defined on positive integers");
    let s = i + j - 1;
    j + (s - 1) * s / 2
}

/// The unique `(i, j)` with `κ(i, j) = k`.
pub fn kappa_inverse(k: usize) -> (usize, usize) {
    assert!(k >= 1, "kappa_inverse is defined on positive integers");
    // Diagonal s holds the values (s−1)s/2 + 1 ..= s(s+1)/2.
    let mut s = (((8.0 * k as f64 + 1.0).sqrt() - 1.0) / 2.0).floor() as usize;
    while s * (s + 1) / 2 < k {
        s += 1;
    }
    while s > 1 && (s - 1) * s / 2 >= k {
        s -= 1;
    }
    let j = k - (s - 1) * s / 2;
    (s + 1 - j, j)
}

/// Graded lexicographic enumeration of `β ∈ ℕⁿ` (entries ≥ 1).
#[derive(Debug, Clone, PartialEq)]
pub struct TensorBasisOrdering {
    n: usize,
    labels: Vec<Vec<usize>>,
    max_degree: usize,
    max_entry: usize,
}

impl TensorBasisOrdering {
    /// Complete degrees are added until at least `count` labels exist.
    pub fn with_count(n: usize, count: usize) -> Result<Self> {
        Self::build(n, |len, _| len >= count.max(1))
    }

    /// All labels with `|β| ≤ max_degree`.
    pub fn with_max_degree(n: usize, max_degree: usize) -> Result<Self> {
        if max_degree < n {
            return Err(Error::InvalidArgument(format!(
                "max degree {max_degree} is below the minimal degree {n}"
            )));
        }
        Self::build(n, |_, deg| deg >= max_degree)
    }

    fn build<F: Fn(usize, usize) -> bool>(n: usize, done: F) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        let mut labels = Vec::new();
        let mut deg = n;
        loop {
            push_compositions(n, deg, &mut Vec::with_capacity(n), &mut labels);
            if done(labels.len(), deg) {
                break;
            }
            deg += 1;
        }
        let max_entry = deg - (n - 1);
        if max_entry > MAX_HERMITE_INDEX {
            return Err(Error::HermiteIndex(max_entry));
        }
        Ok(Self {
            n,
            labels,
            max_degree: deg,
            max_entry,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// `β⁽ʲ⁾`, `j ≥ 1`.
    pub fn label(&self, j: usize) -> Result<&[usize]> {
        if j == 0 || j > self.labels.len() {
            return Err(Error::IndexOutOfRange {
                index: j,
                covered: self.labels.len(),
            });
        }
        Ok(&self.labels[j - 1])
    }

    pub fn labels(&self) -> &[Vec<usize>] {
        &self.labels
    }

    /// `e_j(x)`.
    pub fn eval(&self, j: usize, x: &[f64]) -> Result<f64> {
        let beta = self.label(j)?;
        self.check_point(x)?;
        beta.iter()
            .zip(x)
            .map(|(&b, &xl)| hermite_function(b, xl))
            .product()
    }

    /// `[e_1(x), …, e_count(x)]`.
    pub fn eval_all(&self, count: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.check_count(count)?;
        self.check_point(x)?;
        let axes = x
            .iter()
            .map(|&xl| hermite_functions_upto(self.max_entry, xl))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.combine(count, &axes))
    }

    /// `[∫_{[0,x]} e_1, …, ∫_{[0,x]} e_count]`, per-axis quadrature.
    pub fn integrals_from_zero(&self, count: usize, x: &[f64], nodes_per_unit: usize) -> Result<Vec<f64>> {
        self.check_count(count)?;
        self.check_point(x)?;
        let axes = x
            .iter()
            .map(|&xl| hermite_integrals(self.max_entry, 0.0, xl, nodes_per_unit))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.combine(count, &axes))
    }

    /// `[∫_{box} e_1, …]` over `[lower, upper]`.
    pub fn integrals_over_box(
        &self,
        count: usize,
        lower: &[f64],
        upper: &[f64],
        nodes_per_unit: usize,
    ) -> Result<Vec<f64>> {
        self.check_count(count)?;
        self.check_point(lower)?;
        self.check_point(upper)?;
        let axes = lower
            .iter()
            .zip(upper)
            .map(|(&a, &b)| hermite_integrals(self.max_entry, a, b, nodes_per_unit))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.combine(count, &axes))
    }

    fn combine(&self, count: usize, axes: &[Vec<f64>]) -> Vec<f64> {
        self.labels[..count]
            .iter()
            .map(|beta| beta.iter().enumerate().map(|(l, &b)| axes[l][b - 1]).product())
            .collect()
    }

    fn check_count(&self, count: usize) -> Result<()> {
        if count > self.labels.len() {
            return Err(Error::IndexOutOfRange {
                index: count,
                covered: self.labels.len(),
            });
        }
        Ok(())
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "point has dimension {} but the basis has dimension {}",
                x.len(),
                self.n
            )));
        }
        Ok(())
    }
}

fn push_compositions(parts: usize, total: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if parts == 1 {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in 1..=(total - (parts - 1)) {
        prefix.push(first);
        push_compositions(parts - 1, total - first, prefix, out);
        prefix.pop();
    }
}

/// Polynomials `p_1, …, p_{J_ν}` orthonormal in `L²(ν)`, built from the
/// `L²(ρ)`-orthogonal monic polynomials `η_0, η_1, …` as
/// `p_j(z) = z η_{j−1}(z) / ‖η_{j−1}‖_ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoPolySystem {
    eta: Vec<Vec<f64>>,
    eta_norms: Vec<f64>,
    p: Vec<Vec<f64>>,
    m2: f64,
    requested: usize,
}

impl OrthoPolySystem {
    /// Modified Gram–Schmidt with one reorthogonalization pass on the
    /// measure's node set. Stops early once `‖η_j‖ < 1e−10 ‖z^j‖`.
    pub fn build(measure: &LevyMeasure, max_degree: usize) -> Result<Self> {
        if max_degree == 0 {
            return Err(Error::InvalidArgument("max_degree must be at least 1".into()));
        }
        let nodes = measure.nodes();
        let rho: Vec<f64> = nodes
            .iter()
            .zip(measure.weights())
            .map(|(&z, &w)| w * z * z)
            .collect();
        let inner = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).zip(&rho).map(|((x, y), r)| r * x * y).sum()
        };
        let m2 = measure.m2();
        if !(m2 > 0.0) {
            return Err(Error::InvalidMeasure("second moment is zero".into()));
        }

        let mut eta: Vec<Vec<f64>> = Vec::new();
        let mut eta_vals: Vec<Vec<f64>> = Vec::new();
        let mut eta_norms = Vec::new();
        for j in 0..max_degree {
            let mut coef = vec![0.0; j + 1];
            coef[j] = 1.0;
            let mono: Vec<f64> = nodes.iter().map(|&z| z.powi(j as i32)).collect();
            let mono_norm = inner(&mono, &mono).sqrt();
            let mut vals = mono;
            for _pass in 0..2 {
                for (k, (ek, vk)) in eta.iter().zip(&eta_vals).enumerate() {
                    let c = inner(&vals, vk) / (eta_norms[k] * eta_norms[k]);
                    for (a, b) in coef.iter_mut().zip(ek) {
                        *a -= c * b;
                    }
                    for (a, b) in vals.iter_mut().zip(vk) {
                        *a -= c * b;
                    }
                }
            }
            let norm = if j == 0 { m2 } else { inner(&vals, &vals).sqrt() };
            if !(norm > 1e-10 * mono_norm) {
                break;
            }
            eta.push(coef);
            eta_vals.push(vals);
            eta_norms.push(norm);
        }

        let p = eta
            .iter()
            .zip(&eta_norms)
            .map(|(c, &nrm)| {
                let mut q = vec![0.0; c.len() + 1];
                for (k, &a) in c.iter().enumerate() {
                    q[k + 1] = a / nrm;
                }
                q
            })
            .collect();
        Ok(Self {
            eta,
            eta_norms,
            p,
            m2,
            requested: max_degree,
        })
    }

    /// `J_ν`: number of polynomials available.
    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn requested(&self) -> usize {
        self.requested
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    pub fn eta_norms(&self) -> &[f64] {
        &self.eta_norms
    }

    /// Monomial coefficients of `η_j`, `j ≥ 0`.
    pub fn eta_coefficients(&self, j: usize) -> Option<&[f64]> {
        self.eta.get(j).map(Vec::as_slice)
    }

    /// Monomial coefficients of `p_j`, `j ≥ 1`.
    pub fn coefficients(&self, j: usize) -> Result<&[f64]> {
        self.check(j)?;
        Ok(&self.p[j - 1])
    }

    pub fn eval(&self, j: usize, z: f64) -> Result<f64> {
        Ok(horner(self.coefficients(j)?, z))
    }

    /// `[p_1(z), …, p_count(z)]`.
    pub fn eval_all(&self, count: usize, z: f64) -> Result<Vec<f64>> {
        if count > self.len() {
            return Err(Error::PolynomialIndex {
                requested: count,
                available: self.len(),
            });
        }
        Ok(self.p[..count].iter().map(|c| horner(c, z)).collect())
    }

    fn check(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.p.len() {
            return Err(Error::PolynomialIndex {
                requested: j,
                available: self.p.len(),
            });
        }
        Ok(())
    }
}

fn horner(c: &[f64], z: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * z + a)
}

/// `θ_k(x, z) = e_i(x) p_j(z)` with `(i, j) = κ⁻¹(k)`.
pub fn theta_eval(
    system: &OrthoPolySystem,
    ordering: &TensorBasisOrdering,
    k: usize,
    x: &[f64],
    z: f64,
) -> Result<f64> {
    let (i, j) = kappa_inverse(k);
    if j > system.len() {
        return Err(Error::PolynomialIndex {
            requested: j,
            available: system.len(),
        });
    }
    Ok(ordering.eval(i, x)? * system.eval(j, z)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn listed_hermite_polynomials() {
        for &x in &[-2.0, -0.3, 0.0, 1.7] {
            assert_abs_diff_eq!(hermite_poly(2, x), x * x - 1.0, epsilon = 1e-14);
            assert_eq!(hermite_poly(0, x), 1.0);
        }
        assert_eq!(hermite_poly(4, 0.0), 3.0);
        assert_abs_diff_eq!(hermite_poly(3, 2.0), 8.0 - 6.0, epsilon = 1e-14);
    }

    #[test]
    fn hermite_function_values() {
        assert_abs_diff_eq!(hermite_function(1, 0.0).unwrap(), PI.powf(-0.25), epsilon = 1e-16);
        assert_eq!(hermite_function(2, 0.0).unwrap(), 0.0);
        assert!(matches!(hermite_function(0, 0.0), Err(Error::HermiteIndex(0))));
        assert!(hermite_function(MAX_HERMITE_INDEX + 1, 0.0).is_err());
    }

    #[test]
    fn recurrence_matches_direct_formula() {
        for n in 1..=10 {
            for &x in &[-3.0_f64, -1.2, 0.0, 0.4, 2.5] {
                let direct = PI.powf(-0.25) / factorial(n - 1).sqrt()
                    * (-0.5 * x * x).exp()
                    * hermite_poly(n - 1, 2f64.sqrt() * x);
                assert_abs_diff_eq!(hermite_function(n, x).unwrap(), direct, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn high_index_stays_finite() {
        for &x in &[0.0, 10.0, 60.0, 95.0] {
            let v = hermite_function(4096, x).unwrap();
            assert!(v.is_finite());
            assert!(v.abs() < 1.0);
        }
        assert_eq!(hermite_function(5, 60.0).unwrap(), 0.0);
    }

    #[test]
    fn kappa_values() {
        assert_eq!(kappa(1, 1), 1);
        assert_eq!(kappa(2, 1), 2);
        assert_eq!(kappa(1, 2), 3);
        assert_eq!(kappa_inverse(1), (1, 1));
        assert_eq!(kappa_inverse(2), (2, 1));
        assert_eq!(kappa_inverse(6), (1, 3));
    }

    #[test]
    fn graded_lex_order() {
        let o = TensorBasisOrdering::with_max_degree(2, 4).unwrap();
        let want: Vec<Vec<usize>> = vec![
            vec![1, 1],
            vec![1, 2],
            vec![2, 1],
            vec![1, 3],
            vec![2, 2],
            vec![3, 1],
        ];
        assert_eq!(o.labels(), &want[..]);
        let o1 = TensorBasisOrdering::with_count(1, 7).unwrap();
        assert_eq!(o1.len(), 7);
        assert_eq!(o1.label(7).unwrap(), &[7]);
        assert!(o1.label(8).is_err());
    }

    #[test]
    fn tensor_eval_examples() {
        let o1 = TensorBasisOrdering::with_count(1, 3).unwrap();
        assert_abs_diff_eq!(o1.eval(1, &[0.0]).unwrap(), PI.powf(-0.25), epsilon = 1e-16);
        let o2 = TensorBasisOrdering::with_count(2, 3).unwrap();
        assert_abs_diff_eq!(o2.eval(1, &[0.0, 0.0]).unwrap(), PI.powf(-0.5), epsilon = 1e-16);
        let all = o2.eval_all(3, &[0.3, -0.7]).unwrap();
        for (j, v) in all.iter().enumerate() {
            assert_abs_diff_eq!(*v, o2.eval(j + 1, &[0.3, -0.7]).unwrap(), epsilon = 1e-15);
        }
    }

    #[test]
    fn hermite_integral_of_first_function() {
        // ∫_0^x π^{-1/4} e^{-t²/2} dt = π^{-1/4} √(π/2) erf(x/√2).
        let x = 1.3;
        let want = PI.powf(-0.25) * (PI / 2.0).sqrt() * libm::erf(x / 2f64.sqrt());
        let got = hermite_integrals(1, 0.0, x, NODES_PER_UNIT).unwrap()[0];
        assert_abs_diff_eq!(got, want, epsilon = 1e-14);
        let back = hermite_integrals(1, x, 0.0, NODES_PER_UNIT).unwrap()[0];
        assert_abs_diff_eq!(back, -want, epsilon = 1e-14);
    }

    #[test]
    fn two_point_polynomials() {
        let s = OrthoPolySystem::build(&LevyMeasure::two_point(), 5).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.coefficients(1).unwrap(), &[0.0, 1.0]);
        assert_eq!(s.coefficients(2).unwrap(), &[0.0, 0.0, 1.0]);
        assert!(s.eval(3, 1.0).is_err());
    }

    #[test]
    fn unit_atom_has_one_polynomial() {
        let s = OrthoPolySystem::build(&LevyMeasure::unit_atom(), 4).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.eval(1, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn first_polynomial_is_scaled_identity() {
        let m = LevyMeasure::atoms("a", &[(-0.7, 0.3), (0.4, 1.1), (2.0, 0.2)]).unwrap();
        let s = OrthoPolySystem::build(&m, 3).unwrap();
        assert_eq!(s.coefficients(1).unwrap(), &[0.0, 1.0 / m.m2()]);
    }

    #[test]
    fn theta_examples() {
        let ua = OrthoPolySystem::build(&LevyMeasure::unit_atom(), 2).unwrap();
        let o = TensorBasisOrdering::with_count(1, 4).unwrap();
        assert_abs_diff_eq!(theta_eval(&ua, &o, 1, &[0.0], 1.0).unwrap(), PI.powf(-0.25), epsilon = 1e-16);
        assert_eq!(theta_eval(&ua, &o, 2, &[0.0], 1.0).unwrap(), 0.0);
        assert!(theta_eval(&ua, &o, 3, &[0.0], 1.0).is_err());
        let tp = OrthoPolySystem::build(&LevyMeasure::two_point(), 2).unwrap();
        let k = kappa(1, 2);
        for z in [-1.0, 1.0] {
            assert_abs_diff_eq!(
                theta_eval(&tp, &o, k, &[0.0], z).unwrap(),
                PI.powf(-0.25) * z * z,
                epsilon = 1e-16
            );
        }
    }

    proptest! {
        #[test]
        fn kappa_round_trip(i in 1usize..2000, j in 1usize..2000) {
            prop_assert_eq!(kappa_inverse(kappa(i, j)), (i, j));
        }

        #[test]
        fn ordering_is_degree_monotone(n in 1usize..4, count in 1usize..300) {
            let o = TensorBasisOrdering::with_count(n, count).unwrap();
            let degs: Vec<usize> = o.labels().iter().map(|b| b.iter().sum()).collect();
            prop_assert!(degs.windows(2).all(|w| w[0] <= w[1]));
            let mut sorted = o.labels().to_vec();
            sorted.sort();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), o.len());
        }

        #[test]
        fn polynomials_orthonormal(
            atoms in prop::collection::vec(
                ((-2.0f64..2.0).prop_filter("nonzero", |z| z.abs() > 0.05), 0.05f64..1.0),
                1..7,
            )
        ) {
            let m = LevyMeasure::atoms("arb", &atoms).unwrap();
            let s = OrthoPolySystem::build(&m, 5).unwrap();
            prop_assert!(s.len() >= 1);
            for a in 1..=s.len() {
                for b in 1..=s.len() {
                    let g = m.l2_inner(|z| s.eval(a, z).unwrap(), |z| s.eval(b, z).unwrap());
                    let want = if a == b { 1.0 } else { 0.0 };
                    prop_assert!((g - want).abs() < 1e-8, "G[{a},{b}] = {g}");
                }
            }
        }
    }
}
