//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use levy_white_noise::basis::{kappa, kappa_inverse, OrthoPolySystem};
use levy_white_noise::chaos::{
    iterated_integral, multi_indices_up_to, orthogonality_check, CompensatorQuadrature, MultiIndex,
    SymmetrizedProduct,
};
use levy_white_noise::cli::{self, parse_config, Command};
use levy_white_noise::fracheat::{deterministic_term, solve, HeatConfig, MittagLefflerParams};
use levy_white_noise::levy_measure::LevyMeasure;
use levy_white_noise::mc::{MonteCarlo, SampleStats};
use levy_white_noise::sheet_sim::{
    compensated_integral, empirical_cf_check, simulate_levy_sheet, BoxIndicatorMark, CompensatedFunctional,
    CompensatorRule, Domain, Jump, LevySheetPath, Rect,
};
use levy_white_noise::whitenoise::{levy_noise_tail, WhiteNoiseBasis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20240701;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn four_atoms() -> Arc<LevyMeasure> {
    Arc::new(LevyMeasure::atoms("four", &[(-1.0, 0.4), (-0.5, 0.3), (0.5, 0.2), (1.5, 0.1)]).unwrap())
}

/// Orthonormal polynomials of the symmetric two-point measure.
fn c01_ortho_polys() -> Outcome {
    let m = LevyMeasure::two_point();
    let sys = OrthoPolySystem::build(&m, 2).unwrap();
    if sys.len() != 2 {
        return outcome(false, format!("expected 2 polynomials, got {}", sys.len()));
    }
    // Hand Gram-Schmidt on {-1, 1}: 1, z, z² reduce to z and z².
    let hand = |j: usize, z: f64| if j == 1 { z } else { z * z };
    let mut err: f64 = 0.0;
    for z in [-1.0, 1.0, 0.3, -2.0] {
        for j in 1..=2 {
            err = err.max((sys.eval(j, z).unwrap() - hand(j, z)).abs());
        }
    }
    let mut gram: f64 = 0.0;
    for a in 1..=2 {
        for b in 1..=2 {
            let g = m.integrate(|z| sys.eval(a, z).unwrap() * sys.eval(b, z).unwrap());
            gram = gram.max((g - if a == b { 1.0 } else { 0.0 }).abs());
        }
    }
    outcome(err <= 1e-10 && gram <= 1e-10, format!("max |p_j - hand| = {err:.1e}, max |Gram - I| = {gram:.1e} (tol 1e-10)"))
}

fn c02_kappa() -> Outcome {
    let mut seen = BTreeSet::new();
    let mut ok = true;
    for i in 1..=30usize {
        for j in 1..=30usize {
            let k = kappa(i, j);
            ok &= k == j + (i + j - 2) * (i + j - 1) / 2;
            ok &= kappa_inverse(k) == (i, j);
            ok &= seen.insert(k);
        }
    }
    // Every k on a complete anti-diagonal i + j ≤ 31 comes from the box.
    let full = 30 * 31 / 2;
    for k in 1..=full {
        let (i, j) = kappa_inverse(k);
        ok &= i <= 30 && j <= 30 && kappa(i, j) == k;
    }
    ok &= (1..=full).all(|k| seen.contains(&k));
    outcome(ok, format!("900 pairs injective with inverse round trip; 1..={full} covered"))
}

fn c03_cf() -> Outcome {
    let m = Arc::new(LevyMeasure::two_point());
    let domain = Domain::unit(1);
    let r = Rect::from_zero(&[1.0]).unwrap();
    let us = [0.5, 1.0, 2.0, 4.0];
    let report = empirical_cf_check(&m, &domain, &r, &us, &MonteCarlo::new(100_000, SEED)).unwrap();
    let mut detail = Vec::new();
    for row in &report.rows {
        // Independent target e^{cos u - 1}.
        let oracle = (row.u.cos() - 1.0).exp();
        let dev = ((row.empirical.re - oracle).powi(2) + row.empirical.im.powi(2)).sqrt();
        detail.push(format!("u={}: {:.2}se", row.u, dev / row.se));
    }
    let pass = report.rows.iter().all(|row| {
        let oracle = (row.u.cos() - 1.0).exp();
        let dev = ((row.empirical.re - oracle).powi(2) + row.empirical.im.powi(2)).sqrt();
        dev <= 3.0 * row.se
    });
    outcome(pass, detail.join(", "))
}

fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let x = a + k as f64 * h;
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

fn bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (-1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

fn e1(x: f64) -> f64 {
    std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp()
}

fn c04_compensated_moments() -> Outcome {
    let m = four_atoms();
    let big_m = 0.4 + 0.3 * 0.25 + 0.2 * 0.25 + 0.1 * 2.25;
    let domain = Domain::centered(1, 4.0).unwrap();
    let rule = CompensatorRule::new(&m, &domain, 32);
    let boxed = CompensatedFunctional::new(BoxIndicatorMark(Rect::new(vec![-1.0], vec![1.5]).unwrap()), &rule);
    let bumped = CompensatedFunctional::new(|x: &[f64], z: f64| bump(x[0]) * z, &rule);
    let hermite = CompensatedFunctional::new(|x: &[f64], z: f64| e1(x[0]) * z, &rule);
    let samples: Vec<[f64; 3]> = MonteCarlo::new(100_000, SEED).collect(|seed, _| {
        let p = simulate_levy_sheet(&m, &domain, 0.0, seed).unwrap();
        [boxed.eval(&p), bumped.eval(&p), hermite.eval(&p)]
    });
    let norms = [
        2.5,
        simpson(-1.0, 1.0, 20_000, |x| bump(x).powi(2)),
        libm::erf(4.0),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (k, name) in ["box", "bump", "e1"].iter().enumerate() {
        let xs: Vec<f64> = samples.iter().map(|s| s[k]).collect();
        let st = SampleStats::from_slice(&xs);
        let target = big_m * norms[k];
        pass &= st.mean_within(0.0, 3.0) && st.variance_within(target, 3.0, 0.0);
        detail.push(format!(
            "{name}: mean {:.2}se, var {:.4} vs {:.4} ({:.2}se)",
            st.mean / st.se_mean,
            st.variance,
            target,
            (st.variance - target) / st.se_variance
        ));
    }
    outcome(pass, detail.join("; "))
}

fn c05_chaos_orthogonality() -> Outcome {
    let m = four_atoms();
    let domain = Domain::centered(1, 8.0).unwrap();
    let positions: Vec<usize> = (1..=6).collect();
    let alphas = multi_indices_up_to(&positions, 2);
    let entries = orthogonality_check(&m, &domain, &alphas, &MonteCarlo::new(100_000, SEED)).unwrap();
    let bad: Vec<String> = entries
        .iter()
        .filter(|e| !e.within(3.0))
        .map(|e| format!("({},{}): {:.2}se", e.alpha, e.beta, (e.estimate - e.target) / e.se))
        .collect();
    let worst = entries
        .iter()
        .map(|e| (e.estimate - e.target).abs() / e.se)
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    outcome(
        bad.is_empty(),
        format!("{} indices, {} pairs, worst {worst:.2}se, outside 3se: [{}]", alphas.len(), entries.len(), bad.join(", ")),
    )
}

fn c06_product_formula() -> Outcome {
    let m = four_atoms();
    let domain = Domain::with_origin(vec![0.0], vec![2.0]).unwrap();
    let marks = [-1.0, -0.5, 0.5, 1.5];
    // Polynomial in x, so every quadrature involved is exact.
    let f = |x: &[f64], z: f64| (1.0 + 0.5 * x[0]) * z + 0.3 * x[0] * x[0] * z * z;
    let f2 = |x: &[f64], z: f64| f(x, z).powi(2);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(0..=5);
        let jumps = (0..n)
            .map(|_| Jump {
                location: vec![rng.random_range(0.0..2.0)],
                mark: marks[rng.random_range(0..4)],
            })
            .collect();
        let path = LevySheetPath::from_jumps(m.clone(), domain.clone(), 0.0, jumps).unwrap();
        let quad = CompensatorQuadrature::for_path(&path, 8).unwrap();
        let i1 = compensated_integral(&path, &f).unwrap();
        let g = SymmetrizedProduct::new(vec![&f, &f]).unwrap();
        let i2 = iterated_integral(&path, &g, &quad).unwrap();
        let diag = compensated_integral(&path, &f2).unwrap();
        let norm = quad.integrate(f2);
        let lhs = i1 * i1;
        worst = worst.max((lhs - (i2 + diag + norm)).abs() / lhs.abs().max(1.0));
    }
    outcome(worst <= 1e-10, format!("max residual {worst:.1e} over 100 paths (tol 1e-10)"))
}

fn c07_covariance() -> Outcome {
    let b = WhiteNoiseBasis::new(Arc::new(LevyMeasure::two_point()), 1, 400, 1).unwrap();
    let curve = b.covariance_curve(&[1.0], &[1.0], 400).unwrap();
    let monotone = curve.windows(2).all(|w| w[1] >= w[0]);
    let err = (curve[399] - 1.0).abs();
    outcome(
        monotone && err <= 1e-3,
        format!(
            "|S(400) - 1| = {err:.4} (tol 1e-3), S(200) = {:.4}, monotone = {monotone}",
            curve[199]
        ),
    )
}

fn c08_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for (m, n) in [(four_atoms(), 1usize), (Arc::new(LevyMeasure::two_point()), 2)] {
        let b = WhiteNoiseBasis::new(m, n, 20, 4).unwrap();
        for _ in 0..10 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let red = b.pnrm_to_levy_reduction(&x, 20, 4).unwrap();
            let lev = b.levy_noise_expansion(&x, 20).unwrap();
            let keys: BTreeSet<MultiIndex> = red.iter().chain(lev.iter()).map(|(a, _)| a.clone()).collect();
            for a in keys {
                worst = worst.max((red.get(&a) - lev.get(&a)).abs());
            }
        }
    }
    outcome(worst <= 1e-12, format!("max coefficient difference {worst:.1e} at 20 points (tol 1e-12)"))
}

fn c09_hida_tail() -> Outcome {
    let b = WhiteNoiseBasis::new(Arc::new(LevyMeasure::two_point()), 1, 400, 1).unwrap();
    let mut worst: f64 = 0.0;
    for x in [-2.0, -0.5, 0.0, 0.7, 2.5] {
        let t = levy_noise_tail(&b, &[x], 2, 200).unwrap();
        worst = worst.max(t.relative_tail());
    }
    outcome(worst < 1e-4, format!("max relative tail beyond 200 = {worst:.1e} of the total over 400 (tol 1e-4)"))
}

fn c10_mittag_leffler() -> Outcome {
    let e1 = MittagLefflerParams::new(1.0, 1.0).unwrap();
    let mut exp_err: f64 = 0.0;
    for k in 0..=400 {
        let z = -20.0 + 0.1 * k as f64;
        exp_err = exp_err.max((e1.eval(z).unwrap() - z.exp()).abs() / z.exp().max(1.0));
    }
    let e2 = MittagLefflerParams::new(2.0, 1.0).unwrap();
    let mut cos_err: f64 = 0.0;
    for k in 0..=200 {
        let x = -10.0 + 0.1 * k as f64;
        cos_err = cos_err.max((e2.eval(-x * x).unwrap() - x.cos()).abs());
    }
    let mut overlap: f64 = 0.0;
    for alpha in [0.5, 0.7, 0.9, 1.0] {
        for beta in [1.0, alpha] {
            let p = MittagLefflerParams::new(alpha, beta).unwrap();
            for k in 0..=150 {
                let z = -40.0 + 0.1 * k as f64;
                overlap = overlap.max((p.contour(z) - p.asymptotic(z)).abs());
            }
        }
    }
    outcome(
        exp_err <= 1e-12 && cos_err <= 1e-10 && overlap <= 1e-6,
        format!("exp {exp_err:.1e} (1e-12), cos {cos_err:.1e} (1e-10), contour vs asymptotic on [-40,-25] {overlap:.1e} (1e-6)"),
    )
}

fn c11_classical_limit() -> Outcome {
    let xs: Vec<Vec<f64>> = (0..21).map(|k| vec![-5.0 + 0.5 * k as f64]).collect();
    let cfg = HeatConfig::new(1.0, 1.0, 1, 1.0, xs.clone());
    let i1 = deterministic_term(&cfg).unwrap();
    let gauss = |x: f64| (-x * x / 4.0).exp() / (4.0 * std::f64::consts::PI).sqrt();
    let rel = xs
        .iter()
        .zip(&i1)
        .map(|(x, v)| (v - gauss(x[0])).abs() / gauss(x[0]))
        .fold(0.0, f64::max);
    // Mass by composite Gauss-Legendre on [-30, 30].
    let nodes = [
        (-0.906_179_845_938_664, 0.236_926_885_056_189),
        (-0.538_469_310_105_683, 0.478_628_670_499_366),
        (0.0, 0.568_888_888_888_889),
        (0.538_469_310_105_683, 0.478_628_670_499_366),
        (0.906_179_845_938_664, 0.236_926_885_056_189),
    ];
    let panels = 120;
    let h = 60.0 / panels as f64;
    let mut pts = Vec::new();
    let mut wts = Vec::new();
    for p in 0..panels {
        let c = -30.0 + (p as f64 + 0.5) * h;
        for (u, w) in nodes {
            pts.push(vec![c + 0.5 * h * u]);
            wts.push(0.5 * h * w);
        }
    }
    let vals = deterministic_term(&HeatConfig::new(1.0, 1.0, 1, 1.0, pts)).unwrap();
    let mass: f64 = vals.iter().zip(&wts).map(|(v, w)| v * w).sum();
    outcome(
        rel <= 1e-6 && (mass - 1.0).abs() <= 1e-4,
        format!("max relative error {rel:.1e} (1e-6), mass - 1 = {:.1e} (1e-4)", mass - 1.0),
    )
}

fn c12_isometry() -> Outcome {
    let mut cfg = HeatConfig::new(1.0, 1.0, 1, 1.0, vec![vec![0.0], vec![1.0]]);
    cfg.sigma = 1.0;
    cfg.gamma = 0.0;
    cfg.n_samples = 10_000;
    cfg.seed = SEED;
    let s = solve(&cfg).unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for p in &s.points {
        let dev = (p.i2.variance - p.isometry_variance).abs();
        let tol = 3.0 * p.i2.se_variance + p.bias_estimate;
        pass &= dev <= tol;
        detail.push(format!(
            "x={}: var {:.4} vs {:.4}, |diff| {dev:.4} <= {tol:.4}",
            p.x[0], p.i2.variance, p.isometry_variance
        ));
    }
    outcome(pass, detail.join("; "))
}

fn c13_centering() -> Outcome {
    let s = solve(&HeatConfig::tumor_preset()).unwrap();
    let mut worst: f64 = 0.0;
    for p in &s.points {
        worst = worst
            .max((p.i2.mean / p.i2.se_mean).abs())
            .max((p.i3.mean / p.i3.se_mean).abs())
            .max(((p.y.mean - p.i1) / p.y.se_mean).abs());
    }
    outcome(worst <= 3.0, format!("{} points, worst |z| = {worst:.2} (tol 3)", s.points.len()))
}

const SMALL_CONFIG: &str = r#"
[run]
seed = 11

[measure]
atoms = [[-1.0, 0.4], [-0.5, 0.3], [0.5, 0.2], [1.5, 0.1]]

[simulate_sheet]
extents = [2.0, 2.0]
grid = [4, 4]

[basis]
count = 6
grid_points = 11

[chaos_check]
theta_count = 4
n_samples = 2000

[whitenoise]
j_values = [10, 50]
coefficients = 5
tail_cut = 50

[ml_eval]
z_points = 31

[solve_heat]
alpha = 0.8
sigma = 0.5
gamma = 0.5
x = [[0.0], [1.0]]
n_time = 16
n_samples = 400
"#;

fn bodies(dir: &Path) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            let text = std::fs::read_to_string(&p).unwrap();
            (p.file_name().unwrap().to_string_lossy().into_owned(), cli::output::body(&text))
        })
        .collect();
    out.sort();
    out
}

fn numerically_equal(a: &str, b: &str) -> bool {
    let (la, lb): (Vec<&str>, Vec<&str>) = (a.lines().collect(), b.lines().collect());
    la.len() == lb.len()
        && la.iter().zip(&lb).all(|(x, y)| {
            let (fx, fy): (Vec<&str>, Vec<&str>) = (x.split(',').collect(), y.split(',').collect());
            fx.len() == fy.len()
                && fx.iter().zip(&fy).all(|(u, v)| match (u.parse::<f64>(), v.parse::<f64>()) {
                    (Ok(p), Ok(q)) => p == q || (p - q).abs() <= 1e-12 * p.abs().max(q.abs()),
                    _ => u == v,
                })
        })
}

fn c14_determinism() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for cmd in Command::ALL {
        let run = |workers: usize| {
            let dir = tempfile::tempdir().unwrap();
            let mut cfg = parse_config(SMALL_CONFIG).unwrap();
            cfg.run.workers = workers;
            cfg.run.out_dir = dir.path().display().to_string();
            cli::execute_config(cmd, &cfg).unwrap();
            bodies(dir.path())
        };
        let (a, b, c) = (run(1), run(1), run(4));
        let same_runs = a == b;
        let same_workers = a.len() == c.len()
            && a.iter().zip(&c).all(|((na, ba), (nc, bc))| na == nc && numerically_equal(ba, bc));
        let nonempty = !a.is_empty() && a.iter().all(|(_, body)| body.lines().count() > 1);
        pass &= same_runs && same_workers && nonempty;
        detail.push(format!(
            "{}: {} files, rerun {}, 1 vs 4 workers {}",
            cmd.as_str(),
            a.len(),
            if same_runs { "identical" } else { "DIFFERENT" },
            if same_workers { "identical" } else { "DIFFERENT" }
        ));
    }
    outcome(pass, detail.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 14] = [
        ("orthonormal polynomials of the two-point measure", c01_ortho_polys),
        ("kappa bijection on [1..30]^2", c02_kappa),
        ("characteristic function of a box increment", c03_cf),
        ("mean and variance of compensated integrals", c04_compensated_moments),
        ("chaos orthogonality", c05_chaos_orthogonality),
        ("pathwise product formula", c06_product_formula),
        ("sheet covariance partial sums at J = 400", c07_covariance),
        ("white noise reduction identity", c08_reduction),
        ("Hida norm tail beyond J = 200", c09_hida_tail),
        ("Mittag-Leffler identities and regime overlap", c10_mittag_leffler),
        ("classical heat kernel limit", c11_classical_limit),
        ("isometry of the Brownian term", c12_isometry),
        ("centering for the tumor preset", c13_centering),
        ("determinism of every subcommand", c14_determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let status = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!("{status} {:>2} {name} [{:.1}s]: {}", k + 1, start.elapsed().as_secs_f64(), o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
