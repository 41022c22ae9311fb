//! TOML run configuration.
//!
//! One optional table per subcommand plus `[run]` and `[measure]`:
//!
//! ```toml
//! [run]
//! seed = 42
//! workers = 0
//! out_dir = "out"
//!
//! [measure]
//! atoms = [[-1.0, 0.5], [1.0, 0.5]]
//!
//! [solve_heat]
//! alpha = 0.7
//! sigma = 0.5
//! x = [[0.0], [0.5]]
//! ```
//!
//! Parsing reports every problem at once: syntax errors with their line,
//! unknown keys and type errors with their key path, then semantic checks.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::fracheat::HeatConfig;
use crate::levy_measure::{DensityShape, DensitySpec, LevyMeasure};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSection {
    pub command: Option<String>,
    pub seed: u64,
    /// Worker threads, 0 for all cores.
    pub workers: usize,
    pub out_dir: String,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            command: None,
            seed: 0,
            workers: 0,
            out_dir: ".".into(),
        }
    }
}

/// Either `atoms = [[z, w], …]` or `density = "uniform" | "power" |
/// "exp_decay"` with its bounds. Neither means the two-point measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeasureSection {
    pub name: String,
    pub atoms: Option<Vec<[f64; 2]>>,
    pub density: Option<String>,
    pub eps0: f64,
    pub cutoff: f64,
    pub scale: f64,
    /// Scale on the negative side, `scale` if absent.
    pub neg_scale: Option<f64>,
    pub exponent: f64,
    pub rate: f64,
    pub nodes_per_side: usize,
}

impl Default for MeasureSection {
    fn default() -> Self {
        Self {
            name: "measure".into(),
            atoms: None,
            density: None,
            eps0: 0.1,
            cutoff: 1.0,
            scale: 1.0,
            neg_scale: None,
            exponent: 0.0,
            rate: 0.0,
            nodes_per_side: crate::levy_measure::DEFAULT_NODES_PER_SIDE,
        }
    }
}

impl MeasureSection {
    fn from_atoms(name: &str, atoms: &[(f64, f64)]) -> Self {
        Self {
            name: name.into(),
            atoms: Some(atoms.iter().map(|&(z, w)| [z, w]).collect()),
            ..Self::default()
        }
    }

    pub fn build(&self) -> Result<LevyMeasure> {
        match (&self.atoms, &self.density) {
            (Some(_), Some(_)) => Err(Error::Config("give either atoms or density, not both".into())),
            (Some(a), None) => {
                let atoms: Vec<(f64, f64)> = a.iter().map(|p| (p[0], p[1])).collect();
                LevyMeasure::atoms(self.name.clone(), &atoms)
            }
            (None, Some(kind)) => {
                let shape = match kind.as_str() {
                    "uniform" => DensityShape::Uniform,
                    "power" => DensityShape::Power { exponent: self.exponent },
                    "exp_decay" => DensityShape::ExpDecay { rate: self.rate },
                    other => {
                        return Err(Error::Config(format!(
                            "unknown density {other:?} (uniform, power, exp_decay)"
                        )))
                    }
                };
                let spec = DensitySpec {
                    shape,
                    eps0: self.eps0,
                    cutoff: self.cutoff,
                    pos_scale: self.scale,
                    neg_scale: self.neg_scale.unwrap_or(self.scale),
                    nodes_per_side: self.nodes_per_side,
                };
                LevyMeasure::density(self.name.clone(), spec)
            }
            (None, None) => Ok(LevyMeasure::two_point()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SheetSection {
    /// `"levy"` or `"brownian"`.
    pub kind: String,
    pub origin: Option<Vec<f64>>,
    pub extents: Vec<f64>,
    pub epsilon: f64,
    /// Cells per axis of the evaluation (or increment) grid.
    pub grid: Vec<usize>,
}

impl Default for SheetSection {
    fn default() -> Self {
        Self {
            kind: "levy".into(),
            origin: None,
            extents: vec![1.0, 1.0],
            epsilon: 0.0,
            grid: vec![10, 10],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BasisSection {
    pub dim: usize,
    pub count: usize,
    pub poly_degree: usize,
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub grid_points: usize,
    /// `κ` is tabulated on `[1, kappa_max]²`.
    pub kappa_max: usize,
}

impl Default for BasisSection {
    fn default() -> Self {
        Self {
            dim: 1,
            count: 10,
            poly_degree: 4,
            grid_lo: -4.0,
            grid_hi: 4.0,
            grid_points: 81,
            kappa_max: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChaosCheckSection {
    pub dim: usize,
    /// The sheet lives on `[-h, h]^dim`.
    pub window_half: f64,
    /// θ positions `1..=theta_count` (those compatible with the measure).
    pub theta_count: usize,
    pub max_order: usize,
    pub n_samples: usize,
}

impl Default for ChaosCheckSection {
    fn default() -> Self {
        Self {
            dim: 1,
            window_half: 8.0,
            theta_count: 6,
            max_order: 2,
            n_samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WhitenoiseSection {
    pub dim: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Truncations at which the covariance partial sum is reported.
    pub j_values: Vec<usize>,
    pub j_prime: usize,
    /// Mark at which the compensated-measure noise is expanded.
    pub z: f64,
    /// Spatial truncation of the coefficient tables.
    pub coefficients: usize,
    pub q: u32,
    pub tail_cut: usize,
}

impl Default for WhitenoiseSection {
    fn default() -> Self {
        Self {
            dim: 1,
            x: vec![1.0],
            y: vec![1.0],
            j_values: vec![10, 25, 50, 100, 200, 400],
            j_prime: 3,
            z: 1.0,
            coefficients: 10,
            q: 2,
            tail_cut: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlEvalSection {
    pub alpha: f64,
    pub beta: f64,
    pub z_lo: f64,
    pub z_hi: f64,
    pub z_points: usize,
    pub k_max: usize,
    pub tolerance: f64,
}

impl Default for MlEvalSection {
    fn default() -> Self {
        Self {
            alpha: 0.7,
            beta: 1.0,
            z_lo: -40.0,
            z_hi: 5.0,
            z_points: 91,
            k_max: crate::fracheat::mittag_leffler::DEFAULT_K_MAX,
            tolerance: crate::fracheat::mittag_leffler::DEFAULT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveHeatSection {
    pub alpha: f64,
    pub lambda_diff: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub d: usize,
    pub t: f64,
    pub x: Vec<Vec<f64>>,
    pub x_max_widths: f64,
    pub y_max: Option<f64>,
    pub n_time: usize,
    pub grading: f64,
    pub cells_per_width: usize,
    pub epsilon: f64,
    pub n_samples: usize,
}

impl Default for SolveHeatSection {
    fn default() -> Self {
        Self::from_heat(&HeatConfig::new(0.7, 1.0, 1, 1.0, vec![vec![0.0]]))
    }
}

impl SolveHeatSection {
    fn from_heat(h: &HeatConfig) -> Self {
        Self {
            alpha: h.alpha,
            lambda_diff: h.lambda_diff,
            sigma: h.sigma,
            gamma: h.gamma,
            d: h.d,
            t: h.t,
            x: h.x.clone(),
            x_max_widths: h.x_max_widths,
            y_max: h.y_max,
            n_time: h.n_time,
            grading: h.grading,
            cells_per_width: h.cells_per_width,
            epsilon: h.epsilon,
            n_samples: h.n_samples,
        }
    }
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub run: RunSection,
    pub measure: MeasureSection,
    pub simulate_sheet: SheetSection,
    pub basis: BasisSection,
    pub chaos_check: ChaosCheckSection,
    pub whitenoise: WhitenoiseSection,
    pub ml_eval: MlEvalSection,
    pub solve_heat: SolveHeatSection,
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("run", &["command", "seed", "workers", "out_dir"]),
    (
        "measure",
        &[
            "name", "atoms", "density", "eps0", "cutoff", "scale", "neg_scale", "exponent", "rate",
            "nodes_per_side",
        ],
    ),
    ("simulate_sheet", &["kind", "origin", "extents", "epsilon", "grid"]),
    (
        "basis",
        &["dim", "count", "poly_degree", "grid_lo", "grid_hi", "grid_points", "kappa_max"],
    ),
    ("chaos_check", &["dim", "window_half", "theta_count", "max_order", "n_samples"]),
    (
        "whitenoise",
        &["dim", "x", "y", "j_values", "j_prime", "z", "coefficients", "q", "tail_cut"],
    ),
    ("ml_eval", &["alpha", "beta", "z_lo", "z_hi", "z_points", "k_max", "tolerance"]),
    (
        "solve_heat",
        &[
            "alpha", "lambda_diff", "sigma", "gamma", "d", "t", "x", "x_max_widths", "y_max", "n_time",
            "grading", "cells_per_width", "epsilon", "n_samples",
        ],
    ),
];

/// Named starting configurations.
pub fn preset(name: &str) -> Result<toml::Table> {
    match name {
        "tumor" => {
            let h = HeatConfig::tumor_preset();
            let atoms = match h.measure.kind() {
                crate::levy_measure::MeasureKind::Atoms(a) => a.clone(),
                crate::levy_measure::MeasureKind::Density(_) => unreachable!("preset uses atoms"),
            };
            let base = RunConfig {
                run: RunSection {
                    seed: h.seed,
                    ..RunSection::default()
                },
                measure: MeasureSection::from_atoms(h.measure.name(), &atoms),
                solve_heat: SolveHeatSection::from_heat(&h),
                ..RunConfig::default()
            };
            let mut t = toml::Table::try_from(&base).map_err(|e| Error::Config(e.to_string()))?;
            // Keep only what the preset defines.
            t.retain(|k, _| k == "run" || k == "measure" || k == "solve_heat");
            if let Some(toml::Value::Table(run)) = t.get_mut("run") {
                run.retain(|k, _| k == "seed");
            }
            Ok(t)
        }
        other => Err(Error::Config(format!("unknown preset {other:?} (available: tumor)"))),
    }
}

/// Overlays `top` onto `base`, table by table.
pub fn merge(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses TOML text into a table, reporting the line of a syntax error.
pub fn parse_table(text: &str) -> Result<toml::Table> {
    text.parse::<toml::Table>().map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start));
        match line {
            Some(l) => Error::Config(format!("syntax error at line {l}: {}", e.message())),
            None => Error::Config(format!("syntax error: {}", e.message())),
        }
    })
}

/// Validated configuration from a table; all problems are reported together.
pub fn from_table(table: toml::Table) -> Result<RunConfig> {
    let mut errors = Vec::new();
    for (key, value) in &table {
        let Some((_, allowed)) = SECTIONS.iter().find(|(s, _)| s == key) else {
            errors.push(format!("{key}: unknown section"));
            continue;
        };
        let Some(section) = value.as_table() else {
            errors.push(format!("{key}: expected a table"));
            continue;
        };
        for k in section.keys() {
            if !allowed.contains(&k.as_str()) {
                errors.push(format!("{key}.{k}: unknown key"));
            }
        }
    }
    let mut cfg = RunConfig::default();
    macro_rules! section {
        ($field:ident) => {
            if let Some(v) = table.get(stringify!($field)) {
                if v.is_table() {
                    match v.clone().try_into() {
                        Ok(s) => cfg.$field = s,
                        Err(e) => errors.push(format!("{}: {}", stringify!($field), toml_message(&e))),
                    }
                }
            }
        };
    }
    section!(run);
    section!(measure);
    section!(simulate_sheet);
    section!(basis);
    section!(chaos_check);
    section!(whitenoise);
    section!(ml_eval);
    section!(solve_heat);
    // Sections that failed to parse keep their defaults, so semantic checks
    // still only flag values the user actually wrote.
    errors.extend(cfg.semantic_errors());
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(errors.join("\n")))
    }
}

fn toml_message(e: &toml::de::Error) -> String {
    e.message().trim().to_string()
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    from_table(parse_table(text)?)
}

impl RunConfig {
    pub fn semantic_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if let Err(e) = self.measure.build() {
            errs.push(format!("measure: {}", strip_prefix(&e)));
        }
        let s = &self.simulate_sheet;
        if s.kind != "levy" && s.kind != "brownian" {
            errs.push(format!("simulate_sheet.kind: {:?} is not \"levy\" or \"brownian\"", s.kind));
        }
        if s.extents.is_empty() || s.extents.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            errs.push("simulate_sheet.extents: must be nonempty and positive".into());
        }
        if s.grid.len() != s.extents.len() || s.grid.contains(&0) {
            errs.push("simulate_sheet.grid: one positive cell count per axis".into());
        }
        if let Some(o) = &s.origin {
            if o.len() != s.extents.len() {
                errs.push("simulate_sheet.origin: one coordinate per axis".into());
            }
        }
        if !(s.epsilon >= 0.0) {
            errs.push("simulate_sheet.epsilon: must be nonnegative".into());
        }
        let b = &self.basis;
        if b.dim == 0 || b.count == 0 || b.poly_degree == 0 || b.kappa_max == 0 {
            errs.push("basis: dim, count, poly_degree and kappa_max must be positive".into());
        }
        if !(b.grid_lo < b.grid_hi) || b.grid_points < 2 {
            errs.push("basis: need grid_lo < grid_hi and grid_points >= 2".into());
        } else if (b.grid_points as f64).powi(b.dim as i32) > 1e6 {
            errs.push("basis: grid_points^dim exceeds 10^6".into());
        }
        let c = &self.chaos_check;
        if c.dim == 0 || !(c.window_half > 0.0) || c.theta_count == 0 || c.n_samples < 2 {
            errs.push("chaos_check: dim, window_half, theta_count positive and n_samples >= 2".into());
        }
        if c.max_order > crate::chaos::MAX_ORDER {
            errs.push(format!("chaos_check.max_order: at most {}", crate::chaos::MAX_ORDER));
        }
        let w = &self.whitenoise;
        if w.dim == 0 || w.x.len() != w.dim || w.y.len() != w.dim {
            errs.push("whitenoise: x and y need dim coordinates".into());
        }
        if w.j_values.is_empty() || w.j_values.contains(&0) {
            errs.push("whitenoise.j_values: must be nonempty and positive".into());
        }
        let jmax = w.j_values.iter().copied().max().unwrap_or(0);
        if w.coefficients == 0 || w.coefficients > jmax.max(1) || w.tail_cut == 0 || w.tail_cut > jmax.max(1) {
            errs.push("whitenoise: coefficients and tail_cut must lie in 1..=max(j_values)".into());
        }
        if w.j_prime == 0 {
            errs.push("whitenoise.j_prime: must be positive".into());
        }
        let m = &self.ml_eval;
        if let Err(e) = crate::fracheat::MittagLefflerParams::new(m.alpha, m.beta) {
            errs.push(format!("ml_eval: {}", strip_prefix(&e)));
        }
        if !(m.z_lo <= m.z_hi) || m.z_points == 0 || m.k_max == 0 || !(m.tolerance > 0.0) {
            errs.push("ml_eval: need z_lo <= z_hi, z_points, k_max and tolerance positive".into());
        }
        // The measure only matters for the Lévy term; its errors are reported above.
        let measure = self.measure.build().unwrap_or_else(|_| LevyMeasure::two_point());
        if let Err(e) = self.heat_config(Arc::new(measure)).validate() {
            errs.push(format!("solve_heat: {}", strip_prefix(&e)));
        }
        if self.solve_heat.n_samples < 2 {
            errs.push("solve_heat.n_samples: at least 2".into());
        }
        errs
    }

    pub fn heat_config(&self, measure: Arc<LevyMeasure>) -> HeatConfig {
        let h = &self.solve_heat;
        HeatConfig {
            alpha: h.alpha,
            lambda_diff: h.lambda_diff,
            sigma: h.sigma,
            gamma: h.gamma,
            d: h.d,
            t: h.t,
            x: h.x.clone(),
            x_max_widths: h.x_max_widths,
            y_max: h.y_max,
            n_time: h.n_time,
            grading: h.grading,
            cells_per_width: h.cells_per_width,
            measure,
            epsilon: h.epsilon,
            n_samples: h.n_samples,
            seed: self.run.seed,
            workers: self.run.workers,
        }
    }

    /// The resolved configuration as TOML text.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::InvalidArgument(m) | Error::InvalidMeasure(m) | Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}
