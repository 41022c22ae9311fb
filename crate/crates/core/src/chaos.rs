//! Multi-indices, chaos coefficients, iterated compensated integrals and
//! the Hida norms.
//!
//! For a finite-activity path with jumps `J_1, …, J_N` and `μ = λ × ν`,
//!
//! ```text
//! I_m(g) = Σ_{S ⊆ slots} (−1)^{|S|} Σ_{distinct jumps in the other slots} ∫ g dμ^{|S|}
//! ```
//!
//! which is what [`iterated_integral`] evaluates for a general symmetric
//! kernel. For products `f_1 ⊗ ⋯ ⊗ f_m` the distinct-tuple sums reduce to
//! power sums `S(f) = Σ_k f(J_k)`, giving the O(N) route used by
//! [`ChaosSampler`].

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::basis::{kappa_inverse, OrthoPolySystem, TensorBasisOrdering, NODES_PER_UNIT};
use crate::levy_measure::LevyMeasure;
use crate::mc::SampleStats;
use crate::sheet_sim::{Domain, LevySheetPath};
use crate::quadrature::TensorRule;
use crate::{Error, Result};

/// Largest supported order of an iterated integral.
pub const MAX_ORDER: usize = 3;

/// Finitely supported `α ∈ 𝒥`, stored as sorted `(position, value)` pairs
/// with positions ≥ 1 and values ≥ 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct MultiIndex(Vec<(usize, u32)>);

impl MultiIndex {
    pub fn zero() -> Self {
        Self(Vec::new())
    }

    /// `ε^{(k)}`.
    pub fn unit(k: usize) -> Self {
        assert!(k >= 1, "positions start at 1");
        Self(vec![(k, 1)])
    }

    /// From `(position, value)` pairs in any order; zero values are dropped
    /// and repeated positions add up.
    pub fn from_pairs(pairs: &[(usize, u32)]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for &(p, v) in pairs {
            if p == 0 {
                return Err(Error::InvalidArgument("multi-index positions start at 1".into()));
            }
            *map.entry(p).or_insert(0u32) += v;
        }
        Ok(Self(map.into_iter().filter(|&(_, v)| v > 0).collect()))
    }

    /// From a list of positions with repetition, e.g. `[1, 1, 3]` is
    /// `2ε^{(1)} + ε^{(3)}`.
    pub fn from_positions(positions: &[usize]) -> Result<Self> {
        let pairs: Vec<_> = positions.iter().map(|&p| (p, 1)).collect();
        Self::from_pairs(&pairs)
    }

    pub fn entries(&self) -> &[(usize, u32)] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// `|α|`.
    pub fn order(&self) -> usize {
        self.0.iter().map(|&(_, v)| v as usize).sum()
    }

    /// Largest active position, 0 for the zero index.
    pub fn index(&self) -> usize {
        self.0.last().map_or(0, |&(p, _)| p)
    }

    pub fn get(&self, position: usize) -> u32 {
        self.0
            .binary_search_by_key(&position, |&(p, _)| p)
            .map_or(0, |i| self.0[i].1)
    }

    /// Positions repeated by multiplicity, ascending.
    pub fn positions(&self) -> Vec<usize> {
        self.0
            .iter()
            .flat_map(|&(p, v)| std::iter::repeat_n(p, v as usize))
            .collect()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|&(p, v)| if v == 1 { format!("e{p}") } else { format!("{v}e{p}") })
            .collect();
        write!(f, "{}", parts.join("+"))
    }
}

/// `α! = Π α_j!`.
pub fn alpha_factorial(alpha: &MultiIndex) -> Result<u64> {
    let mut acc: u64 = 1;
    for &(_, v) in alpha.entries() {
        for k in 2..=v as u64 {
            acc = acc.checked_mul(k).ok_or(Error::Overflow("alpha factorial"))?;
        }
    }
    Ok(acc)
}

fn alpha_factorial_f64(alpha: &MultiIndex) -> f64 {
    alpha_factorial(alpha).map(|v| v as f64).unwrap_or_else(|_| {
        alpha
            .entries()
            .iter()
            .map(|&(_, v)| libm::tgamma(v as f64 + 1.0))
            .product()
    })
}

/// `(2ℕ)^{kα} = Π (2j)^{k α_j}`.
pub fn two_n_pow(alpha: &MultiIndex, k: i32) -> f64 {
    alpha
        .entries()
        .iter()
        .map(|&(p, v)| (2.0 * p as f64).powi(k * v as i32))
        .product()
}

/// Sparse chaos coefficients `F = Σ c_α K_α`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChaosCoefficients {
    coeffs: BTreeMap<MultiIndex, f64>,
    /// Number of `p_j` available; positions using `j > j_nu` are rejected.
    j_nu: Option<usize>,
}

impl ChaosCoefficients {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_j_nu(j_nu: usize) -> Self {
        Self {
            coeffs: BTreeMap::new(),
            j_nu: Some(j_nu),
        }
    }

    pub fn j_nu(&self) -> Option<usize> {
        self.j_nu
    }

    pub fn insert(&mut self, alpha: MultiIndex, c: f64) -> Result<()> {
        if let Some(j_nu) = self.j_nu {
            check_compatible(&alpha, j_nu)?;
        }
        self.coeffs.insert(alpha, c);
        Ok(())
    }

    pub fn get(&self, alpha: &MultiIndex) -> f64 {
        self.coeffs.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.coeffs.iter().map(|(a, &c)| (a, c))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

impl FromIterator<(MultiIndex, f64)> for ChaosCoefficients {
    fn from_iter<I: IntoIterator<Item = (MultiIndex, f64)>>(iter: I) -> Self {
        Self {
            coeffs: iter.into_iter().collect(),
            j_nu: None,
        }
    }
}

/// Every active position `k` must have `κ⁻¹(k) = (i, j)` with `j ≤ J_ν`.
pub fn check_compatible(alpha: &MultiIndex, j_nu: usize) -> Result<()> {
    for &(position, _) in alpha.entries() {
        let (i, j) = kappa_inverse(position);
        if j > j_nu {
            return Err(Error::IncompatibleMultiIndex { position, i, j, j_nu });
        }
    }
    Ok(())
}

fn sum_descending(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(|a, b| b.abs().partial_cmp(&a.abs()).unwrap_or(Ordering::Equal));
    terms.into_iter().sum()
}

fn weighted_norm(f: &ChaosCoefficients, k: i32) -> f64 {
    sum_descending(
        f.iter()
            .map(|(a, c)| c * c * alpha_factorial_f64(a) * two_n_pow(a, k))
            .collect(),
    )
}

/// `Σ c_α² α! (2ℕ)^{kα}`.
pub fn hida_norm_k(f: &ChaosCoefficients, k: u32) -> f64 {
    weighted_norm(f, k as i32)
}

/// `Σ c_α² α! (2ℕ)^{−qα}`.
pub fn hida_norm_neg_q(f: &ChaosCoefficients, q: u32) -> f64 {
    weighted_norm(f, -(q as i32))
}

/// `⟨F, φ⟩ = Σ a_α b_α α!`.
pub fn action(f: &ChaosCoefficients, phi: &ChaosCoefficients) -> f64 {
    sum_descending(
        f.iter()
            .filter_map(|(a, c)| phi.coeffs.get(a).map(|&d| c * d * alpha_factorial_f64(a)))
            .collect(),
    )
}

/// The coefficient at the zero multi-index.
pub fn generalized_expectation(f: &ChaosCoefficients) -> f64 {
    f.get(&MultiIndex::zero())
}

/// A point `(x, z)` of `ℝⁿ × ℝ₀`.
#[derive(Debug, Clone, Copy)]
pub struct MarkedPoint<'a> {
    pub x: &'a [f64],
    pub z: f64,
}

/// A symmetric function on `(ℝⁿ × ℝ₀)^m`.
pub trait Kernel: Sync {
    fn order(&self) -> usize;
    fn eval(&self, args: &[MarkedPoint<'_>]) -> f64;
}

/// `(f_1 ⊗ ⋯ ⊗ f_m)^` by averaging over all permutations of the arguments.
pub struct SymmetrizedProduct<'f> {
    factors: Vec<&'f (dyn Fn(&[f64], f64) -> f64 + Sync)>,
    perms: Vec<Vec<usize>>,
}

impl<'f> SymmetrizedProduct<'f> {
    pub fn new(factors: Vec<&'f (dyn Fn(&[f64], f64) -> f64 + Sync)>) -> Result<Self> {
        let m = factors.len();
        if m > MAX_ORDER {
            return Err(Error::UnsupportedOrder(m));
        }
        let mut perms = Vec::new();
        permutations(&mut (0..m).collect(), 0, &mut perms);
        Ok(Self { factors, perms })
    }

    pub fn factors(&self) -> &[&'f (dyn Fn(&[f64], f64) -> f64 + Sync)] {
        &self.factors
    }
}

fn permutations(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

impl Kernel for SymmetrizedProduct<'_> {
    fn order(&self) -> usize {
        self.factors.len()
    }

    fn eval(&self, args: &[MarkedPoint<'_>]) -> f64 {
        let total: f64 = self
            .perms
            .iter()
            .map(|p| {
                p.iter()
                    .enumerate()
                    .map(|(slot, &arg)| (self.factors[slot])(args[arg].x, args[arg].z))
                    .product::<f64>()
            })
            .sum();
        total / self.perms.len() as f64
    }
}

/// Quadrature points `(x, z, weight)` for `μ = λ × ν` on a window.
#[derive(Debug, Clone, PartialEq)]
pub struct CompensatorQuadrature {
    points: Vec<(Vec<f64>, f64, f64)>,
}

impl CompensatorQuadrature {
    pub fn new(measure: &LevyMeasure, domain: &Domain, nodes_per_unit: usize) -> Self {
        let rule = TensorRule::on_box(domain.lower(), &domain.upper(), nodes_per_unit);
        let mut points = Vec::with_capacity(rule.len() * measure.nodes().len());
        rule.for_each(|x, wx| {
            for (&z, &wz) in measure.nodes().iter().zip(measure.weights()) {
                points.push((x.to_vec(), z, wx * wz));
            }
        });
        Self { points }
    }

    pub fn for_path(path: &LevySheetPath, nodes_per_unit: usize) -> Result<Self> {
        Ok(Self::new(&path.jump_measure()?, &path.domain, nodes_per_unit))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `μ(f)`.
    pub fn integrate<F: Fn(&[f64], f64) -> f64>(&self, f: F) -> f64 {
        self.points.iter().map(|(x, z, w)| w * f(x, *z)).sum()
    }
}

/// Exact pathwise `I_m(g)` for `m ≤ 3` by the distinct-tuple / compensator
/// expansion. Cost is `O(Σ_k N^k Q^{m−k})` for `N` jumps and `Q`
/// quadrature points.
pub fn iterated_integral<K: Kernel + ?Sized>(
    path: &LevySheetPath,
    g: &K,
    quad: &CompensatorQuadrature,
) -> Result<f64> {
    let m = g.order();
    if m > MAX_ORDER {
        return Err(Error::UnsupportedOrder(m));
    }
    let mut total = 0.0;
    for k in 0..=m {
        let sign = if (m - k) % 2 == 0 { 1.0 } else { -1.0 };
        let binom = binomial(m, k) as f64;
        let mut args: Vec<MarkedPoint<'_>> = Vec::with_capacity(m);
        let mut used = vec![false; path.jumps.len()];
        let s = jump_tuples(path, g, quad, k, m, &mut args, &mut used);
        total += sign * binom * s;
    }
    Ok(total)
}

fn jump_tuples<'a, K: Kernel + ?Sized>(
    path: &'a LevySheetPath,
    g: &K,
    quad: &'a CompensatorQuadrature,
    k: usize,
    m: usize,
    args: &mut Vec<MarkedPoint<'a>>,
    used: &mut [bool],
) -> f64 {
    if args.len() == k {
        return quad_tuples(g, quad, m, args, 1.0);
    }
    let mut acc = 0.0;
    for (idx, jump) in path.jumps.iter().enumerate() {
        if used[idx] {
            continue;
        }
        used[idx] = true;
        args.push(MarkedPoint { x: &jump.location, z: jump.mark });
        acc += jump_tuples(path, g, quad, k, m, args, used);
        args.pop();
        used[idx] = false;
    }
    acc
}

fn quad_tuples<'a, K: Kernel + ?Sized>(
    g: &K,
    quad: &'a CompensatorQuadrature,
    m: usize,
    args: &mut Vec<MarkedPoint<'a>>,
    weight: f64,
) -> f64 {
    if args.len() == m {
        return weight * g.eval(args);
    }
    let mut acc = 0.0;
    for (x, z, w) in &quad.points {
        args.push(MarkedPoint { x, z: *z });
        acc += quad_tuples(g, quad, m, args, weight * w);
        args.pop();
    }
    acc
}

fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i as u64 + 1))
}

/// Distinct ordered tuple sum `Σ_{distinct} f_1(J_{i_1}) ⋯ f_m(J_{i_m})` from
/// per-jump factor values, via power sums. `values[l][k] = f_l(J_k)`.
pub fn distinct_tuple_sum(values: &[&[f64]]) -> Result<f64> {
    let s = |fs: &[usize]| -> f64 {
        let n = values.first().map_or(0, |v| v.len());
        (0..n).map(|k| fs.iter().map(|&l| values[l][k]).product::<f64>()).sum()
    };
    Ok(match values.len() {
        0 => 1.0,
        1 => s(&[0]),
        2 => s(&[0]) * s(&[1]) - s(&[0, 1]),
        3 => {
            s(&[0]) * s(&[1]) * s(&[2])
                - s(&[0, 1]) * s(&[2])
                - s(&[0, 2]) * s(&[1])
                - s(&[1, 2]) * s(&[0])
                + 2.0 * s(&[0, 1, 2])
        }
        m => return Err(Error::UnsupportedOrder(m)),
    })
}

/// `I_m(f_1 ⊗ ⋯ ⊗ f_m)^` from per-jump factor values and the compensator
/// integrals `μ(f_l)`.
pub fn iterated_product(values: &[&[f64]], mu: &[f64]) -> Result<f64> {
    let m = values.len();
    if m > MAX_ORDER {
        return Err(Error::UnsupportedOrder(m));
    }
    let mut total = 0.0;
    for mask in 0u32..(1 << m) {
        let mut rest: Vec<&[f64]> = Vec::with_capacity(m);
        let mut comp = 1.0;
        for l in 0..m {
            if mask & (1 << l) != 0 {
                comp *= -mu[l];
            } else {
                rest.push(values[l]);
            }
        }
        total += comp * distinct_tuple_sum(&rest)?;
    }
    Ok(total)
}

/// Evaluates `K_α = I_{|α|}(θ^{⊗̂α})` on paths, caching `μ(θ_k)` over the
/// path domain.
#[derive(Debug, Clone)]
pub struct ChaosSampler {
    system: OrthoPolySystem,
    ordering: TensorBasisOrdering,
    mu: BTreeMap<usize, f64>,
    max_i: usize,
    max_j: usize,
}

impl ChaosSampler {
    /// `positions` lists every θ index that will be used.
    pub fn new(
        system: OrthoPolySystem,
        ordering: TensorBasisOrdering,
        jump_measure: &LevyMeasure,
        domain: &Domain,
        positions: &BTreeSet<usize>,
    ) -> Result<Self> {
        let mut max_i = 0;
        let mut max_j = 0;
        for &k in positions {
            let (i, j) = kappa_inverse(k);
            if j > system.len() {
                let (i, j) = kappa_inverse(k);
                return Err(Error::IncompatibleMultiIndex { position: k, i, j, j_nu: system.len() });
            }
            max_i = max_i.max(i);
            max_j = max_j.max(j);
        }
        if max_i > ordering.len() {
            return Err(Error::IndexOutOfRange { index: max_i, covered: ordering.len() });
        }
        let e_int = ordering.integrals_over_box(max_i, domain.lower(), &domain.upper(), NODES_PER_UNIT)?;
        let p_int: Vec<f64> = (1..=max_j)
            .map(|j| jump_measure.integrate(|z| system.eval(j, z).expect("checked")))
            .collect();
        let mu = positions
            .iter()
            .map(|&k| {
                let (i, j) = kappa_inverse(k);
                (k, e_int[i - 1] * p_int[j - 1])
            })
            .collect();
        Ok(Self { system, ordering, mu, max_i, max_j })
    }

    /// Sampler covering every position used by `alphas`.
    pub fn for_indices(
        system: OrthoPolySystem,
        ordering: TensorBasisOrdering,
        jump_measure: &LevyMeasure,
        domain: &Domain,
        alphas: &[MultiIndex],
    ) -> Result<Self> {
        let positions = alphas.iter().flat_map(|a| a.positions()).collect();
        Self::new(system, ordering, jump_measure, domain, &positions)
    }

    pub fn system(&self) -> &OrthoPolySystem {
        &self.system
    }

    pub fn ordering(&self) -> &TensorBasisOrdering {
        &self.ordering
    }

    /// `μ(θ_k)` over the window.
    pub fn mu(&self, k: usize) -> Option<f64> {
        self.mu.get(&k).copied()
    }

    /// `θ_k(J)` for every covered position and every jump of `path`.
    fn theta_table(&self, path: &LevySheetPath) -> Result<BTreeMap<usize, Vec<f64>>> {
        let mut table: BTreeMap<usize, Vec<f64>> =
            self.mu.keys().map(|&k| (k, Vec::with_capacity(path.jumps.len()))).collect();
        for jump in &path.jumps {
            let e = self.ordering.eval_all(self.max_i, &jump.location)?;
            let p = self.system.eval_all(self.max_j, jump.mark)?;
            for (&k, col) in table.iter_mut() {
                let (i, j) = kappa_inverse(k);
                col.push(e[i - 1] * p[j - 1]);
            }
        }
        Ok(table)
    }

    pub fn k_alpha(&self, path: &LevySheetPath, alpha: &MultiIndex) -> Result<f64> {
        Ok(self.k_alphas(path, std::slice::from_ref(alpha))?[0])
    }

    /// `K_α` for several multi-indices on one path.
    pub fn k_alphas(&self, path: &LevySheetPath, alphas: &[MultiIndex]) -> Result<Vec<f64>> {
        let table = self.theta_table(path)?;
        alphas
            .iter()
            .map(|alpha| {
                check_compatible(alpha, self.system.len())?;
                let positions = alpha.positions();
                if positions.len() > MAX_ORDER {
                    return Err(Error::UnsupportedOrder(positions.len()));
                }
                let mut values: Vec<&[f64]> = Vec::with_capacity(positions.len());
                let mut mu = Vec::with_capacity(positions.len());
                for k in &positions {
                    let col = table.get(k).ok_or(Error::IndexOutOfRange {
                        index: *k,
                        covered: self.mu.keys().last().copied().unwrap_or(0),
                    })?;
                    values.push(col);
                    mu.push(self.mu[k]);
                }
                iterated_product(&values, &mu)
            })
            .collect()
    }
}

/// `K_α` on one path, building a one-off sampler.
pub fn k_alpha_sample(
    path: &LevySheetPath,
    alpha: &MultiIndex,
    system: &OrthoPolySystem,
    ordering: &TensorBasisOrdering,
) -> Result<f64> {
    let sampler = ChaosSampler::for_indices(
        system.clone(),
        ordering.clone(),
        &path.jump_measure()?,
        &path.domain,
        std::slice::from_ref(alpha),
    )?;
    sampler.k_alpha(path, alpha)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientEstimate {
    pub value: f64,
    pub se: f64,
}

/// `c_α ≈ mean(F·K_α) / α!` over paired samples.
pub fn estimate_coefficient(f: &[f64], k_alpha: &[f64], alpha: &MultiIndex) -> Result<CoefficientEstimate> {
    if f.len() != k_alpha.len() || f.is_empty() {
        return Err(Error::InvalidArgument("need equally many, nonzero samples".into()));
    }
    let fact = alpha_factorial(alpha)? as f64;
    let prod: Vec<f64> = f.iter().zip(k_alpha).map(|(a, b)| a * b / fact).collect();
    let st = SampleStats::from_slice(&prod);
    Ok(CoefficientEstimate { value: st.mean, se: st.se_mean })
}

/// All `α` with positions in `positions` and `|α| ≤ max_order`, zero
/// first, in increasing order.
pub fn multi_indices_up_to(positions: &[usize], max_order: usize) -> Vec<MultiIndex> {
    let mut out = BTreeSet::new();
    out.insert(MultiIndex::zero());
    let mut frontier = vec![Vec::<usize>::new()];
    for _ in 0..max_order {
        let mut next = Vec::new();
        for base in &frontier {
            for &p in positions {
                if base.last().is_some_and(|&l| p < l) {
                    continue;
                }
                let mut v = base.clone();
                v.push(p);
                out.insert(MultiIndex::from_positions(&v).expect("positions are positive"));
                next.push(v);
            }
        }
        frontier = next;
    }
    out.into_iter().collect()
}

/// Monte-Carlo estimate of `E[K_α K_β]` against `δ_{αβ} α!`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalityEntry {
    pub alpha: MultiIndex,
    pub beta: MultiIndex,
    pub estimate: f64,
    pub se: f64,
    pub target: f64,
}

impl OrthogonalityEntry {
    pub fn within(&self, n_se: f64) -> bool {
        (self.estimate - self.target).abs() <= n_se * self.se
    }
}

/// Gram matrix of `{K_α}` (upper triangle, `α ≤ β`) over sheets on `domain`
/// with jumps from `measure`.
pub fn orthogonality_check(
    measure: &std::sync::Arc<LevyMeasure>,
    domain: &Domain,
    alphas: &[MultiIndex],
    mc: &crate::mc::MonteCarlo,
) -> Result<Vec<OrthogonalityEntry>> {
    let max_j = alphas
        .iter()
        .flat_map(|a| a.positions())
        .map(|k| kappa_inverse(k).1)
        .max()
        .unwrap_or(1);
    let max_i = alphas
        .iter()
        .flat_map(|a| a.positions())
        .map(|k| kappa_inverse(k).0)
        .max()
        .unwrap_or(1);
    let system = OrthoPolySystem::build(measure, max_j)?;
    let ordering = TensorBasisOrdering::with_count(domain.dim(), max_i)?;
    let sampler = ChaosSampler::for_indices(system, ordering, measure, domain, alphas)?;
    let samples: Vec<Vec<f64>> = mc
        .collect(|seed, _| {
            let path = crate::sheet_sim::simulate_levy_sheet(measure, domain, 0.0, seed)?;
            sampler.k_alphas(&path, alphas)
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    let mut prod = vec![0.0; samples.len()];
    for a in 0..alphas.len() {
        for b in a..alphas.len() {
            for (p, s) in prod.iter_mut().zip(&samples) {
                *p = s[a] * s[b];
            }
            let st = SampleStats::from_slice(&prod);
            let target = if a == b { alpha_factorial(&alphas[a])? as f64 } else { 0.0 };
            out.push(OrthogonalityEntry {
                alpha: alphas[a].clone(),
                beta: alphas[b].clone(),
                estimate: st.mean,
                se: st.se_mean,
                target,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::kappa;
    use crate::sheet_sim::{compensated_integral, simulate_levy_sheet, Jump};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn alpha(pairs: &[(usize, u32)]) -> MultiIndex {
        MultiIndex::from_pairs(pairs).unwrap()
    }

    #[test]
    fn multi_indices_enumeration() {
        let all = multi_indices_up_to(&[1, 2, 3], 2);
        // 1 + 3 + 6
        assert_eq!(all.len(), 10);
        assert!(all[0].is_zero());
        assert!(all.iter().all(|a| a.order() <= 2));
    }

    #[test]
    fn factorial_and_powers() {
        assert_eq!(alpha_factorial(&MultiIndex::zero()).unwrap(), 1);
        assert_eq!(alpha_factorial(&MultiIndex::unit(3)).unwrap(), 1);
        assert_eq!(alpha_factorial(&alpha(&[(1, 2), (4, 1)])).unwrap(), 2);
        assert!(matches!(alpha_factorial(&alpha(&[(1, 30)])), Err(Error::Overflow(_))));
        assert_eq!(two_n_pow(&MultiIndex::zero(), 5), 1.0);
        assert_eq!(two_n_pow(&MultiIndex::unit(1), 1), 2.0);
        assert_eq!(two_n_pow(&MultiIndex::unit(3), -2), 1.0 / 36.0);
    }

    #[test]
    fn multi_index_shape() {
        let a = MultiIndex::from_positions(&[3, 1, 1]).unwrap();
        assert_eq!(a.entries(), &[(1, 2), (3, 1)]);
        assert_eq!(a.order(), 3);
        assert_eq!(a.index(), 3);
        assert_eq!(a.positions(), vec![1, 1, 3]);
        assert_eq!(a.to_string(), "2e1+e3");
        assert_eq!(MultiIndex::zero().index(), 0);
    }

    #[test]
    fn norm_examples() {
        let f: ChaosCoefficients = [(MultiIndex::zero(), 3.0)].into_iter().collect();
        assert_eq!(hida_norm_k(&f, 4), 9.0);
        let g: ChaosCoefficients = [(MultiIndex::unit(2), 1.0)].into_iter().collect();
        assert_eq!(hida_norm_k(&g, 1), 4.0);
        assert_eq!(hida_norm_k(&g, 0), 1.0);
        let h: ChaosCoefficients = [(MultiIndex::unit(3), 1.0)].into_iter().collect();
        assert_eq!(hida_norm_neg_q(&h, 2), 1.0 / 36.0);
        assert_eq!(hida_norm_neg_q(&ChaosCoefficients::new(), 2), 0.0);
    }

    #[test]
    fn action_and_expectation() {
        let u: ChaosCoefficients = [(MultiIndex::unit(1), 1.0)].into_iter().collect();
        assert_eq!(action(&u, &u), 1.0);
        let v: ChaosCoefficients = [(MultiIndex::unit(2), 1.0)].into_iter().collect();
        assert_eq!(action(&u, &v), 0.0);
        let a = alpha(&[(2, 2)]);
        let f: ChaosCoefficients = [(a.clone(), 2.0)].into_iter().collect();
        let phi: ChaosCoefficients = [(a, 3.0)].into_iter().collect();
        assert_eq!(action(&f, &phi), 12.0);
        let e: ChaosCoefficients = [(MultiIndex::zero(), 5.0), (MultiIndex::unit(1), 1.0)]
            .into_iter()
            .collect();
        assert_eq!(generalized_expectation(&e), 5.0);
        assert_eq!(generalized_expectation(&u), 0.0);
    }

    #[test]
    fn compatibility_is_enforced() {
        let mut c = ChaosCoefficients::with_j_nu(2);
        assert!(c.insert(MultiIndex::unit(kappa(4, 2)), 1.0).is_ok());
        assert!(matches!(
            c.insert(MultiIndex::unit(kappa(1, 3)), 1.0),
            Err(Error::IncompatibleMultiIndex { j: 3, j_nu: 2, .. })
        ));
    }

    fn setup() -> (Arc<LevyMeasure>, OrthoPolySystem, TensorBasisOrdering, Domain) {
        let m = Arc::new(LevyMeasure::two_point());
        let s = OrthoPolySystem::build(&m, 2).unwrap();
        let o = TensorBasisOrdering::with_count(1, 6).unwrap();
        let d = Domain::centered(1, 3.0).unwrap();
        (m, s, o, d)
    }

    fn random_path(m: &Arc<LevyMeasure>, d: &Domain, seed: u64, max_jumps: usize) -> LevySheetPath {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(seed, 99);
        let n = rng.random_range(0..=max_jumps);
        let jumps = (0..n)
            .map(|_| Jump {
                location: vec![d.lower()[0] + d.extents()[0] * rng.random::<f64>()],
                mark: if rng.random::<bool>() { 1.0 } else { -1.0 },
            })
            .collect();
        LevySheetPath::from_jumps(Arc::clone(m), d.clone(), 0.0, jumps).unwrap()
    }

    #[test]
    fn k_zero_is_one_and_first_order_matches_compensated_integral() {
        let (m, s, o, d) = setup();
        let p = simulate_levy_sheet(&m, &d, 0.0, 8).unwrap();
        assert_eq!(k_alpha_sample(&p, &MultiIndex::zero(), &s, &o).unwrap(), 1.0);
        let k = kappa(2, 1);
        let direct = compensated_integral(&p, &|x: &[f64], z: f64| {
            o.eval(2, x).unwrap() * s.eval(1, z).unwrap()
        })
        .unwrap();
        let via = k_alpha_sample(&p, &MultiIndex::unit(k), &s, &o).unwrap();
        assert_abs_diff_eq!(via, direct, epsilon = 1e-10);
    }

    #[test]
    fn empty_path_gives_pure_compensator() {
        let (m, s, o, d) = setup();
        let p = LevySheetPath::from_jumps(Arc::clone(&m), d.clone(), 0.0, vec![]).unwrap();
        let quad = CompensatorQuadrature::for_path(&p, 8).unwrap();
        let f = |x: &[f64], z: f64| o.eval(1, x).unwrap() * s.eval(2, z).unwrap() + 0.3;
        let g = SymmetrizedProduct::new(vec![&f, &f]).unwrap();
        let mu = quad.integrate(f);
        assert_abs_diff_eq!(iterated_integral(&p, &g, &quad).unwrap(), mu * mu, epsilon = 1e-10);
        let g3 = SymmetrizedProduct::new(vec![&f, &f, &f]).unwrap();
        assert_abs_diff_eq!(iterated_integral(&p, &g3, &quad).unwrap(), -mu * mu * mu, epsilon = 1e-10);
    }

    #[test]
    fn order_four_is_rejected() {
        let f = |_: &[f64], _: f64| 1.0;
        assert!(matches!(
            SymmetrizedProduct::new(vec![&f, &f, &f, &f]),
            Err(Error::UnsupportedOrder(4))
        ));
        assert!(distinct_tuple_sum(&[&[1.0f64][..]; 4]).is_err());
    }

    #[test]
    fn estimate_constant_coefficient() {
        let est = estimate_coefficient(&[7.0; 10], &[1.0; 10], &MultiIndex::zero()).unwrap();
        assert_eq!(est.value, 7.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // General quadrature route and factorized power-sum route agree.
        #[test]
        fn dual_route_agreement(seed in 0u64..10_000, a in 1usize..5, b in 1usize..5, c in 1usize..5) {
            let (m, s, o, d) = setup();
            let p = random_path(&m, &d, seed, 5);
            let quad = CompensatorQuadrature::for_path(&p, 3).unwrap();
            let mk = |k: usize| {
                let (i, j) = kappa_inverse(k);
                let (o, s) = (o.clone(), s.clone());
                move |x: &[f64], z: f64| o.eval(i, x).unwrap() * s.eval(j, z).unwrap()
            };
            let (fa, fb, fc) = (mk(a), mk(b), mk(c));
            let factors: [&(dyn Fn(&[f64], f64) -> f64 + Sync); 3] = [&fa, &fb, &fc];
            for order in 1..=3 {
                let g = SymmetrizedProduct::new(factors[..order].to_vec()).unwrap();
                let general = iterated_integral(&p, &g, &quad).unwrap();
                let vals: Vec<Vec<f64>> = factors[..order]
                    .iter()
                    .map(|f| p.jumps.iter().map(|j| f(&j.location, j.mark)).collect())
                    .collect();
                let refs: Vec<&[f64]> = vals.iter().map(Vec::as_slice).collect();
                let mu: Vec<f64> = factors[..order].iter().map(|f| quad.integrate(f)).collect();
                let fact = iterated_product(&refs, &mu).unwrap();
                prop_assert!((general - fact).abs() < 1e-10 * general.abs().max(1.0), "order {order}: {general} vs {fact}");
            }
        }

        #[test]
        fn norm_monotonicity(entries in prop::collection::vec((1usize..20, 1u32..3, -3.0f64..3.0), 0..8)) {
            let f: ChaosCoefficients = entries
                .iter()
                .map(|&(p, v, c)| (MultiIndex::from_pairs(&[(p, v)]).unwrap(), c))
                .collect();
            let l2 = hida_norm_k(&f, 0);
            prop_assert_eq!(l2, hida_norm_neg_q(&f, 0));
            prop_assert!((action(&f, &f) - l2).abs() <= 1e-12 * l2.max(1.0));
            for k in 0..4u32 {
                prop_assert!(hida_norm_k(&f, k + 1) >= hida_norm_k(&f, k));
                prop_assert!(hida_norm_neg_q(&f, k + 1) <= hida_norm_neg_q(&f, k));
            }
        }
    }
}
