//! Subcommand implementations. Each returns the tables it produced.

use std::sync::Arc;

use super::config::RunConfig;
use super::output::{num, point, CsvTable};
use crate::basis::{kappa, kappa_inverse, OrthoPolySystem, TensorBasisOrdering};
use crate::chaos::{alpha_factorial, multi_indices_up_to, orthogonality_check};
use crate::fracheat::{solve, MittagLefflerParams};
use crate::levy_measure::LevyMeasure;
use crate::mc::MonteCarlo;
use crate::sheet_sim::{simulate_brownian_sheet, simulate_levy_sheet, uniform_grid, Domain, Rect};
use crate::whitenoise::{levy_noise_tail, WhiteNoiseBasis};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    SimulateSheet,
    Basis,
    ChaosCheck,
    Whitenoise,
    MlEval,
    SolveHeat,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::SimulateSheet => "simulate-sheet",
            Command::Basis => "basis",
            Command::ChaosCheck => "chaos-check",
            Command::Whitenoise => "whitenoise",
            Command::MlEval => "ml-eval",
            Command::SolveHeat => "solve-heat",
        }
    }

    pub const ALL: [Command; 6] = [
        Command::SimulateSheet,
        Command::Basis,
        Command::ChaosCheck,
        Command::Whitenoise,
        Command::MlEval,
        Command::SolveHeat,
    ];
}

pub fn run_command(cmd: Command, cfg: &RunConfig) -> Result<Vec<CsvTable>> {
    let measure = Arc::new(cfg.measure.build()?);
    match cmd {
        Command::SimulateSheet => simulate_sheet(cfg, &measure),
        Command::Basis => basis(cfg, &measure),
        Command::ChaosCheck => chaos_check(cfg, &measure),
        Command::Whitenoise => whitenoise(cfg, &measure),
        Command::MlEval => ml_eval(cfg),
        Command::SolveHeat => solve_heat(cfg, measure),
    }
}

fn axis_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|l| format!("{prefix}{l}")).collect()
}

fn table(name: &str, header: Vec<String>) -> CsvTable {
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    CsvTable::new(name, &refs)
}

/// Row-major multi-indices of `0..=cells[l]` per axis.
fn grid_indices(cells: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &c in cells {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..=c).map(move |k| {
                    let mut q = p.clone();
                    q.push(k);
                    q
                })
            })
            .collect();
    }
    out
}

fn simulate_sheet(cfg: &RunConfig, measure: &Arc<LevyMeasure>) -> Result<Vec<CsvTable>> {
    let s = &cfg.simulate_sheet;
    let n = s.extents.len();
    let domain = match &s.origin {
        Some(o) => Domain::with_origin(o.clone(), s.extents.clone())?,
        None => Domain::new(s.extents.clone())?,
    };
    let grid = uniform_grid(&domain, &s.grid)?;
    let mut values = table("sheet_values.csv", [axis_names("x", n), vec!["value".into()]].concat());
    values
        .notes
        .push("values are box increments from the domain's lower corner".into());
    if s.kind == "brownian" {
        let path = simulate_brownian_sheet(&domain, grid.clone(), cfg.run.seed)?;
        let mut inc = table(
            "brownian_increments.csv",
            [axis_names("cell", n), axis_names("lower", n), vec!["increment".into()]].concat(),
        );
        let cells: Vec<usize> = s.grid.iter().map(|c| c - 1).collect();
        for (idx, v) in grid_indices(&cells).iter().zip(&path.increments) {
            let lower: Vec<f64> = idx.iter().enumerate().map(|(l, &k)| grid[l][k]).collect();
            let mut row: Vec<String> = idx.iter().map(|k| k.to_string()).collect();
            row.extend(lower.iter().map(|v| num(*v)));
            row.push(num(*v));
            inc.push(row);
        }
        for idx in grid_indices(&s.grid) {
            let mut row: Vec<String> = idx.iter().enumerate().map(|(l, &k)| num(grid[l][k])).collect();
            row.push(num(path.value_at_index(&idx)));
            values.push(row);
        }
        return Ok(vec![inc, values]);
    }
    let path = simulate_levy_sheet(measure, &domain, s.epsilon, cfg.run.seed)?;
    let mut jumps = table("sheet_jumps.csv", [axis_names("x", n), vec!["mark".into()]].concat());
    for j in &path.jumps {
        let mut row: Vec<String> = j.location.iter().map(|v| num(*v)).collect();
        row.push(num(j.mark));
        jumps.push(row);
    }
    let lower = domain.lower().to_vec();
    for idx in grid_indices(&s.grid) {
        let x: Vec<f64> = idx.iter().enumerate().map(|(l, &k)| grid[l][k]).collect();
        let v = if idx.contains(&0) {
            0.0
        } else {
            path.box_increment(&Rect::new(lower.clone(), x.clone())?)?
        };
        let mut row: Vec<String> = x.iter().map(|v| num(*v)).collect();
        row.push(num(v));
        values.push(row);
    }
    Ok(vec![jumps, values])
}

fn basis(cfg: &RunConfig, measure: &LevyMeasure) -> Result<Vec<CsvTable>> {
    let b = &cfg.basis;
    let mut t = CsvTable::new("basis.csv", &["family", "index", "sub_indices", "point", "value"]);
    let axis: Vec<f64> = (0..b.grid_points)
        .map(|k| b.grid_lo + (b.grid_hi - b.grid_lo) * k as f64 / (b.grid_points - 1) as f64)
        .collect();
    let ordering = TensorBasisOrdering::with_count(b.dim, b.count)?;
    let cells = vec![b.grid_points - 1; b.dim];
    let points: Vec<Vec<f64>> = grid_indices(&cells)
        .into_iter()
        .map(|idx| idx.iter().map(|&k| axis[k]).collect())
        .collect();
    for j in 1..=b.count {
        let label = ordering.label(j)?;
        let sub = label.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";");
        for x in &points {
            t.push(vec!["e".into(), j.to_string(), sub.clone(), point(x), num(ordering.eval(j, x)?)]);
        }
    }
    let system = OrthoPolySystem::build(measure, b.poly_degree)?;
    if system.len() < b.poly_degree {
        t.notes.push(format!(
            "measure supports only {} orthonormal polynomials",
            system.len()
        ));
    }
    for j in 1..=system.len() {
        for &z in &axis {
            t.push(vec!["p".into(), j.to_string(), j.to_string(), num(z), num(system.eval(j, z)?)]);
        }
    }
    for i in 1..=b.kappa_max {
        for j in 1..=b.kappa_max {
            let k = kappa(i, j);
            debug_assert_eq!(kappa_inverse(k), (i, j));
            t.push(vec!["kappa".into(), k.to_string(), format!("{i};{j}"), String::new(), k.to_string()]);
        }
    }
    Ok(vec![t])
}

fn chaos_check(cfg: &RunConfig, measure: &Arc<LevyMeasure>) -> Result<Vec<CsvTable>> {
    let c = &cfg.chaos_check;
    let j_nu = OrthoPolySystem::build(measure, c.theta_count)?.len();
    let positions: Vec<usize> = (1..=c.theta_count).filter(|&k| kappa_inverse(k).1 <= j_nu).collect();
    let alphas = multi_indices_up_to(&positions, c.max_order);
    let domain = Domain::centered(c.dim, c.window_half)?;
    let mc = MonteCarlo::new(c.n_samples, cfg.run.seed).with_workers(cfg.run.workers);
    let entries = orthogonality_check(measure, &domain, &alphas, &mc)?;
    let mut gram = CsvTable::new(
        "chaos_orthogonality.csv",
        &["alpha", "beta", "estimate", "se", "target", "deviation_se"],
    );
    let skipped: Vec<usize> = (1..=c.theta_count).filter(|k| !positions.contains(k)).collect();
    if !skipped.is_empty() {
        gram.notes.push(format!(
            "theta positions {skipped:?} need more polynomials than the measure supports (J_nu = {j_nu})"
        ));
    }
    let mut norms = CsvTable::new("chaos_norms.csv", &["alpha", "order", "factorial", "second_moment", "se"]);
    for e in &entries {
        let dev = if e.se > 0.0 { (e.estimate - e.target) / e.se } else { 0.0 };
        gram.push(vec![
            e.alpha.to_string(),
            e.beta.to_string(),
            num(e.estimate),
            num(e.se),
            num(e.target),
            num(dev),
        ]);
        if e.alpha == e.beta {
            norms.push(vec![
                e.alpha.to_string(),
                e.alpha.order().to_string(),
                alpha_factorial(&e.alpha)?.to_string(),
                num(e.estimate),
                num(e.se),
            ]);
        }
    }
    Ok(vec![gram, norms])
}

fn whitenoise(cfg: &RunConfig, measure: &Arc<LevyMeasure>) -> Result<Vec<CsvTable>> {
    let w = &cfg.whitenoise;
    let jmax = w.j_values.iter().copied().max().unwrap_or(1);
    let basis = WhiteNoiseBasis::new(Arc::clone(measure), w.dim, jmax, w.j_prime)?;
    let curve = basis.covariance_curve(&w.x, &w.y, jmax)?;
    let target = basis.covariance_target(&w.x, &w.y);
    let mut cov = CsvTable::new("whitenoise_covariance.csv", &["J", "partial_sum", "target", "error"]);
    for &j in &w.j_values {
        let v = curve[j - 1];
        cov.push(vec![j.to_string(), num(v), num(target), num(v - target)]);
    }
    let mut coef = CsvTable::new("whitenoise_coefficients.csv", &["expansion", "alpha", "value"]);
    let expansions = [
        ("sheet", basis.sheet_expansion(&w.x, w.coefficients)?),
        ("levy_noise", basis.levy_noise_expansion(&w.x, w.coefficients)?),
        ("pnrm_noise", basis.pnrm_noise_expansion(&w.x, w.z, w.coefficients, w.j_prime)?),
        ("pnrm_reduction", basis.pnrm_to_levy_reduction(&w.x, w.coefficients, w.j_prime)?),
    ];
    for (name, c) in &expansions {
        for (alpha, v) in c.iter() {
            coef.push(vec![name.to_string(), alpha.to_string(), num(v)]);
        }
    }
    let mut tail = CsvTable::new(
        "whitenoise_tail.csv",
        &["q", "cut", "available", "partial", "total", "relative_tail"],
    );
    let r = levy_noise_tail(&basis, &w.x, w.q, w.tail_cut)?;
    tail.push(vec![
        w.q.to_string(),
        r.cut.to_string(),
        r.available.to_string(),
        num(r.partial),
        num(r.total),
        num(r.relative_tail()),
    ]);
    Ok(vec![cov, coef, tail])
}

fn ml_eval(cfg: &RunConfig) -> Result<Vec<CsvTable>> {
    let m = &cfg.ml_eval;
    let mut p = MittagLefflerParams::new(m.alpha, m.beta)?;
    p.k_max = m.k_max;
    p.tolerance = m.tolerance;
    let mut t = CsvTable::new("mittag_leffler.csv", &["z", "value", "regime"]);
    for k in 0..m.z_points {
        let z = if m.z_points == 1 {
            m.z_lo
        } else {
            m.z_lo + (m.z_hi - m.z_lo) * k as f64 / (m.z_points - 1) as f64
        };
        let (v, regime) = p.eval_with_regime(z)?;
        t.push(vec![num(z), num(v), regime.as_str().into()]);
    }
    Ok(vec![t])
}

fn solve_heat(cfg: &RunConfig, measure: Arc<LevyMeasure>) -> Result<Vec<CsvTable>> {
    let hc = cfg.heat_config(measure);
    let stats = solve(&hc)?;
    let xcols = if hc.d == 1 { vec!["x".to_string()] } else { axis_names("x", hc.d) };
    let rest = [
        "I1",
        "mean_Y",
        "var_Y",
        "se_Y",
        "bias_estimate",
        "mean_I2",
        "se_I2",
        "var_I2",
        "mean_I3",
        "se_I3",
        "var_I3",
        "grid_variance_I2",
        "isometry_variance_I2",
        "isometry_variance_I3",
    ];
    let mut t = table("heat.csv", [xcols, rest.iter().map(|s| s.to_string()).collect()].concat());
    t.notes.extend(stats.warnings.iter().cloned());
    for p in &stats.points {
        let mut row: Vec<String> = p.x.iter().map(|v| num(*v)).collect();
        row.extend(
            [
                p.i1,
                p.y.mean,
                p.y.variance,
                p.y.se_mean,
                p.bias_estimate,
                p.i2.mean,
                p.i2.se_mean,
                p.i2.variance,
                p.i3.mean,
                p.i3.se_mean,
                p.i3.variance,
                p.grid_variance,
                p.isometry_variance,
                p.levy_variance,
            ]
            .iter()
            .map(|v| num(*v)),
        );
        t.push(row);
    }
    Ok(vec![t])
}
