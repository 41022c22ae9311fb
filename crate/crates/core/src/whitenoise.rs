//! Truncated chaos expansions of the sheet `L(x)`, its white noise `L̇(x)`
//! and the white noise `Ñ̇(x, z)` of the compensated jump measure.
//!
//! All three expansions live on first-order multi-indices `ε^{(κ(i,j))}`:
//!
//! | kind        | coefficient at `ε^{(κ(i,j))}`          |
//! |-------------|----------------------------------------|
//! | sheet       | `m₂ ∫_{[0,x]} e_i` (only `j = 1`)       |
//! | levy_noise  | `m₂ e_i(x)` (only `j = 1`)              |
//! | pnrm_noise  | `e_i(x) p_j(z)`, `j ≤ min(J′, J_ν)`     |

use std::sync::Arc;

use crate::basis::{kappa, OrthoPolySystem, TensorBasisOrdering, NODES_PER_UNIT};
use crate::chaos::{hida_norm_neg_q, ChaosCoefficients, MultiIndex};
use crate::levy_measure::LevyMeasure;
use crate::quadrature::TensorRule;
use crate::sheet_sim::MarkSet;
use crate::{Error, Result};

/// Default truncation for `n = 1`.
pub const DEFAULT_J_1D: usize = 200;
/// Default largest tensor degree for `n = 2`.
pub const DEFAULT_DEGREE_2D: usize = 61;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpansionKind {
    Sheet,
    LevyNoise,
    PnrmNoise,
}

impl ExpansionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExpansionKind::Sheet => "sheet",
            ExpansionKind::LevyNoise => "levy_noise",
            ExpansionKind::PnrmNoise => "pnrm_noise",
        }
    }
}

/// Basis data shared by the expansions.
#[derive(Debug, Clone)]
pub struct WhiteNoiseBasis {
    pub measure: Arc<LevyMeasure>,
    pub ordering: TensorBasisOrdering,
    pub system: OrthoPolySystem,
    pub nodes_per_unit: usize,
}

impl WhiteNoiseBasis {
    /// `j_max` polynomials (capped by `J_ν`) and at least `count` spatial
    /// basis functions.
    pub fn new(measure: Arc<LevyMeasure>, n: usize, count: usize, j_max: usize) -> Result<Self> {
        let ordering = TensorBasisOrdering::with_count(n, count)?;
        let system = OrthoPolySystem::build(&measure, j_max.max(1))?;
        Ok(Self {
            measure,
            ordering,
            system,
            nodes_per_unit: NODES_PER_UNIT,
        })
    }

    /// Default truncation: 200 functions for `n = 1`, all `|β| ≤ 61` for `n = 2`.
    pub fn with_default_truncation(measure: Arc<LevyMeasure>, n: usize, j_max: usize) -> Result<Self> {
        let ordering = match n {
            1 => TensorBasisOrdering::with_count(1, DEFAULT_J_1D)?,
            2 => TensorBasisOrdering::with_max_degree(2, DEFAULT_DEGREE_2D)?,
            _ => TensorBasisOrdering::with_count(n, DEFAULT_J_1D)?,
        };
        let system = OrthoPolySystem::build(&measure, j_max.max(1))?;
        Ok(Self {
            measure,
            ordering,
            system,
            nodes_per_unit: NODES_PER_UNIT,
        })
    }

    pub fn m2(&self) -> f64 {
        self.system.m2()
    }

    pub fn dim(&self) -> usize {
        self.ordering.dim()
    }

    fn check_j(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.ordering.len() {
            return Err(Error::IndexOutOfRange {
                index: j,
                covered: self.ordering.len(),
            });
        }
        Ok(())
    }

    /// `min(J′, J_ν)`.
    pub fn z_truncation(&self, j_prime: usize) -> usize {
        j_prime.min(self.system.len())
    }

    /// `[∫_{[0,x]} e_1, …, ∫_{[0,x]} e_J]`.
    pub fn sheet_integrals(&self, x: &[f64], j: usize) -> Result<Vec<f64>> {
        self.check_j(j)?;
        self.ordering.integrals_from_zero(j, x, self.nodes_per_unit)
    }

    /// Coefficients of `L(x)`: `m₂ ∫_{[0,x]} e_i` at `ε^{(κ(i,1))}`.
    pub fn sheet_expansion(&self, x: &[f64], j: usize) -> Result<ChaosCoefficients> {
        let ints = self.sheet_integrals(x, j)?;
        self.first_order(ints.iter().map(|v| self.m2() * v), 1)
    }

    /// Coefficients of `L̇(x)`: `m₂ e_i(x)` at `ε^{(κ(i,1))}`.
    pub fn levy_noise_expansion(&self, x: &[f64], j: usize) -> Result<ChaosCoefficients> {
        self.check_j(j)?;
        let e = self.ordering.eval_all(j, x)?;
        self.first_order(e.iter().map(|v| self.m2() * v), 1)
    }

    /// Coefficients of `Ñ̇(x, z)`: `e_i(x) p_j(z)` at `ε^{(κ(i,j))}`.
    pub fn pnrm_noise_expansion(&self, x: &[f64], z: f64, j: usize, j_prime: usize) -> Result<ChaosCoefficients> {
        if z == 0.0 {
            return Err(Error::InvalidArgument("pnrm noise is defined for z != 0".into()));
        }
        self.check_j(j)?;
        let e = self.ordering.eval_all(j, x)?;
        let jz = self.z_truncation(j_prime);
        let p = self.system.eval_all(jz, z)?;
        self.table(&e, &p)
    }

    fn table(&self, e: &[f64], p: &[f64]) -> Result<ChaosCoefficients> {
        let mut out = ChaosCoefficients::with_j_nu(self.system.len());
        for (i, &ei) in e.iter().enumerate() {
            for (jj, &pj) in p.iter().enumerate() {
                out.insert(MultiIndex::unit(kappa(i + 1, jj + 1)), ei * pj)?;
            }
        }
        Ok(out)
    }

    fn first_order<I: Iterator<Item = f64>>(&self, values: I, j: usize) -> Result<ChaosCoefficients> {
        let mut out = ChaosCoefficients::with_j_nu(self.system.len());
        for (i, v) in values.enumerate() {
            out.insert(MultiIndex::unit(kappa(i + 1, j)), v)?;
        }
        Ok(out)
    }

    /// Integrates the pnrm coefficients against `ζ ν(dζ)`: the coefficient
    /// at `ε^{(κ(i,j))}` becomes `e_i(x) ∫ p_j(ζ) ζ ν(dζ)`. Since `ζ = m₂ p_1(ζ)`
    /// this should reproduce [`Self::levy_noise_expansion`]. Entries with
    /// `j > 1` are stored only when they are nonzero.
    pub fn pnrm_to_levy_reduction(&self, x: &[f64], j: usize, j_prime: usize) -> Result<ChaosCoefficients> {
        self.check_j(j)?;
        let e = self.ordering.eval_all(j, x)?;
        let jz = self.z_truncation(j_prime);
        let moments: Vec<f64> = (1..=jz)
            .map(|jj| self.measure.integrate(|z| self.system.eval(jj, z).expect("in range") * z))
            .collect();
        let mut out = ChaosCoefficients::with_j_nu(self.system.len());
        for (i, &ei) in e.iter().enumerate() {
            for (jj, &mz) in moments.iter().enumerate() {
                let c = ei * mz;
                if c != 0.0 || jj == 0 {
                    out.insert(MultiIndex::unit(kappa(i + 1, jj + 1)), c)?;
                }
            }
        }
        Ok(out)
    }

    /// Chaos coefficients of `Ñ([0,x], U)`: `(∫_{[0,x]} e_i)(∫_U p_j dν)`.
    pub fn counting_coefficients(&self, x: &[f64], u: &MarkSet, j: usize, j_prime: usize) -> Result<ChaosCoefficients> {
        let ints = self.sheet_integrals(x, j)?;
        let jz = self.z_truncation(j_prime);
        let pu: Vec<f64> = (1..=jz)
            .map(|jj| {
                self.measure.integrate(|z| {
                    if u.contains(z) {
                        self.system.eval(jj, z).expect("in range")
                    } else {
                        0.0
                    }
                })
            })
            .collect();
        self.table(&ints, &pu)
    }

    /// `∫_{[0,x] × U}` of the pnrm coefficients against `dλ × ν`, by tensor
    /// quadrature in `x′` and the measure's nodes in `z`.
    pub fn integrated_pnrm_coefficients(&self, x: &[f64], u: &MarkSet, j: usize, j_prime: usize) -> Result<ChaosCoefficients> {
        self.check_j(j)?;
        let jz = self.z_truncation(j_prime);
        let zero = vec![0.0; x.len()];
        let (lo, hi): (Vec<f64>, Vec<f64>) = zero.iter().zip(x).map(|(&a, &b): (&f64, &f64)| (a.min(b), a.max(b))).unzip();
        let sign: f64 = x.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).product();
        let rule = TensorRule::on_box(&lo, &hi, self.nodes_per_unit);
        let mut acc = vec![0.0; j * jz];
        let mut err = None;
        rule.for_each(|xp, w| {
            for (&z, &wz) in self.measure.nodes().iter().zip(self.measure.weights()) {
                if !u.contains(z) {
                    continue;
                }
                match self.pnrm_noise_expansion(xp, z, j, j_prime) {
                    Ok(c) => {
                        for (i, a) in acc.iter_mut().enumerate() {
                            let k = kappa(i / jz + 1, i % jz + 1);
                            *a += sign * w * wz * c.get(&MultiIndex::unit(k));
                        }
                    }
                    Err(e) => err = Some(e),
                }
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        let mut out = ChaosCoefficients::with_j_nu(self.system.len());
        for (idx, v) in acc.into_iter().enumerate() {
            out.insert(MultiIndex::unit(kappa(idx / jz + 1, idx % jz + 1)), v)?;
        }
        Ok(out)
    }

    /// `m₂² Σ_{i≤J} (∫_{[0,x]} e_i)(∫_{[0,y]} e_i)`.
    pub fn covariance_partial_sum(&self, x: &[f64], y: &[f64], j: usize) -> Result<f64> {
        Ok(*self.covariance_curve(x, y, j)?.last().unwrap_or(&0.0))
    }

    /// Partial sums for `J = 1..=j`.
    pub fn covariance_curve(&self, x: &[f64], y: &[f64], j: usize) -> Result<Vec<f64>> {
        let a = self.sheet_integrals(x, j)?;
        let b = self.sheet_integrals(y, j)?;
        let m = self.system.m2() * self.system.m2();
        let mut acc = 0.0;
        Ok(a.iter()
            .zip(&b)
            .map(|(u, v)| {
                acc += m * u * v;
                acc
            })
            .collect())
    }

    /// Limit of the covariance partial sums, `M Π min(x_l, y_l)` on `ℝ₊ⁿ`.
    pub fn covariance_target(&self, x: &[f64], y: &[f64]) -> f64 {
        let m = self.system.m2() * self.system.m2();
        m * x
            .iter()
            .zip(y)
            .map(|(&a, &b)| {
                if a.signum() != b.signum() {
                    0.0
                } else {
                    a.abs().min(b.abs())
                }
            })
            .product::<f64>()
    }
}

/// Tail report of `‖·‖_{−q}` partial sums over the spatial truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    /// Norm with the first `cut` spatial functions.
    pub partial: f64,
    /// Norm with all available spatial functions.
    pub total: f64,
    pub cut: usize,
    pub available: usize,
}

impl TailReport {
    pub fn relative_tail(&self) -> f64 {
        if self.total == 0.0 {
            0.0
        } else {
            (self.total - self.partial) / self.total
        }
    }
}

/// `‖L̇(x)‖_{−q}²` using the first `cut` spatial functions vs. all of them.
pub fn levy_noise_tail(basis: &WhiteNoiseBasis, x: &[f64], q: u32, cut: usize) -> Result<TailReport> {
    let available = basis.ordering.len();
    let full = basis.levy_noise_expansion(x, available)?;
    let head: ChaosCoefficients = full
        .iter()
        .filter(|(a, _)| crate::basis::kappa_inverse(a.index()).0 <= cut)
        .map(|(a, c)| (a.clone(), c))
        .collect();
    Ok(TailReport {
        partial: hida_norm_neg_q(&head, q),
        total: hida_norm_neg_q(&full, q),
        cut,
        available,
    })
}

/// As [`levy_noise_tail`] for `Ñ̇(x, z)`.
pub fn pnrm_noise_tail(basis: &WhiteNoiseBasis, x: &[f64], z: f64, j_prime: usize, q: u32, cut: usize) -> Result<TailReport> {
    let available = basis.ordering.len();
    let full = basis.pnrm_noise_expansion(x, z, available, j_prime)?;
    let head: ChaosCoefficients = full
        .iter()
        .filter(|(a, _)| crate::basis::kappa_inverse(a.index()).0 <= cut)
        .map(|(a, c)| (a.clone(), c))
        .collect();
    Ok(TailReport {
        partial: hida_norm_neg_q(&head, q),
        total: hida_norm_neg_q(&full, q),
        cut,
        available,
    })
}
