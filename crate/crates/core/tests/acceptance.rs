//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any failed. Built with `harness = false`.

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;
use specmeasure::fourier::{f_analyze, internal_waves_a, internal_waves_b, FourierModel};
use specmeasure::oracle::{
    dense_measure, integrate_real_line, kernel_convolution, lorentzian_laplacian_density, pv_cauchy, wave_packet,
    wave_packet_laplacian_density, PvQuadratureRule,
};
use specmeasure::realline::{
    analyze, basis_function, hilbert_diag, rank_one_spectrum_hull, Coefficient, OperatorTerm, RealLineModel,
};
use specmeasure::{cli, evaluate_grid, evaluate_measure, MeasureQuery, RationalKernel, SolverOptions};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fail(e: impl std::fmt::Display) -> String {
    format!("error: {e}")
}

fn lorentzian(x: f64) -> C64 {
    C64::new((2.0 / PI).sqrt() / (1.0 + x * x), 0.0)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Vandermonde residuals, unit mass, and the m = 1 Poisson kernel.
fn kernel_correctness() -> Outcome {
    let mut worst_residual: f64 = 0.0;
    let mut worst_mass: f64 = 0.0;
    for m in 1..=6 {
        let k = RationalKernel::equispaced(m).map_err(fail)?;
        worst_residual = worst_residual.max(k.moment_residual());
        let mass = integrate_real_line(|x| k.value(x), 1e-13, 1e-13).value;
        worst_mass = worst_mass.max((mass - 1.0).abs());
    }
    let k1 = RationalKernel::equispaced(1).map_err(fail)?;
    let poisson = linspace(-50.0, 50.0, 2001)
        .into_iter()
        .map(|x| (k1.value(x) - 1.0 / (PI * (1.0 + x * x))).abs())
        .fold(0.0, f64::max);
    check(
        worst_residual <= 1e-12 && worst_mass <= 1e-6 && poisson <= 1e-15,
        format!("vandermonde {worst_residual:.1e}, |∫K - 1| {worst_mass:.1e}, poisson {poisson:.1e}"),
    )
}

/// Multiplication by a constant gives `K_ε(x - c)` exactly.
fn delta_recovery() -> Outcome {
    let c = 0.5;
    let eps = 0.1;
    let model = RealLineModel::operator(
        vec![OperatorTerm::Multiplication(Coefficient::constant(c))],
        analyze(lorentzian, 256),
    )
    .map_err(fail)?;
    let points = linspace(-2.5, 3.5, 601);
    let mut worst: f64 = 0.0;
    for m in [1, 2, 4, 6] {
        let kernel = RationalKernel::equispaced(m).map_err(fail)?;
        let r = evaluate_grid(&model, &MeasureQuery::new(points.clone(), eps, kernel.clone())).map_err(fail)?;
        for (x, mu) in points.iter().zip(&r.values) {
            worst = worst.max((mu - kernel.scaled(x - c, eps).map_err(fail)?).abs());
        }
    }
    check(worst <= 1e-10, format!("max |μ - K_ε(x - c)| = {worst:.1e}"))
}

/// The diagonal Hilbert action on ρ_0 and ρ_{-1} against quadrature.
fn hilbert_sign() -> Outcome {
    let n = 16;
    let h = hilbert_diag(n).map_err(fail)?;
    let rule = PvQuadratureRule::default();
    let mut worst: f64 = 0.0;
    for k in [0i64, -1] {
        let sign = h.get((k + n as i64 / 2) as usize, (k + n as i64 / 2) as usize);
        for x in [-2.0, -0.3, 0.0, 0.7, 3.0] {
            let pv = pv_cauchy(|y| basis_function(k, y), x, &rule);
            worst = worst.max((pv.value - sign * basis_function(k, x)).norm());
        }
    }
    check(worst <= 1e-6, format!("max deviation from the oracle {worst:.1e}"))
}

/// `-d²/dx²` against the analytic smoothed density, then with the Hilbert
/// term added: two half-height copies shifted to ±1.
fn laplacian_peaks() -> Outcome {
    let eps = 0.05;
    let kernel = RationalKernel::equispaced(4).map_err(fail)?;
    let opts = SolverOptions {
        tol: 1e-8,
        ..SolverOptions::default()
    };
    let smoothed = |x: f64| {
        kernel_convolution(&kernel, eps, x, |s| 2.0 * s * lorentzian_laplacian_density(1.0, s * s).unwrap_or(0.0), 1e-12)
            .map(|q| q.value)
    };
    let scale = 50.0;

    let model = RealLineModel::dilated(vec![OperatorTerm::laplacian()], None, lorentzian, scale).map_err(fail)?;
    let points = linspace(0.3, 3.0, 28);
    let r = evaluate_grid(&model, &MeasureQuery::new(points.clone(), eps, kernel.clone()).with_solver(opts))
        .map_err(fail)?;
    let mut plain: f64 = 0.0;
    for (x, mu) in points.iter().zip(&r.values) {
        let reference = smoothed(*x).map_err(fail)?;
        plain = plain.max(((mu - reference) / reference).abs());
    }

    let hilbert = OperatorTerm::CauchyLowRank(vec![Coefficient::constant(1.0)]);
    let model = RealLineModel::dilated(vec![OperatorTerm::laplacian(), hilbert], None, lorentzian, scale)
        .map_err(fail)?;
    let points = linspace(-2.0, 4.0, 61);
    let r = evaluate_grid(&model, &MeasureQuery::new(points.clone(), eps, kernel.clone()).with_solver(opts))
        .map_err(fail)?;
    let mut split: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for (x, mu) in points.iter().zip(&r.values) {
        let reference = 0.5 * (smoothed(x - 1.0).map_err(fail)? + smoothed(x + 1.0).map_err(fail)?);
        split = split.max((mu - reference).abs());
        peak = peak.max(reference);
    }
    let split = split / peak;
    let warnings = r.warnings.len();
    check(
        plain <= 1e-3 && split <= 1e-3 && warnings == 0,
        format!("max rel. deviation {plain:.1e}; split measure max deviation / peak {split:.1e}; {warnings} warnings"),
    )
}

/// Rank-one singular integral operator: negligible mass away from the
/// predicted spectral interval.
fn rank_one_support() -> Outcome {
    let eps = 0.1;
    let kernel = RationalKernel::equispaced(4).map_err(fail)?;
    let k = |x: f64| (-x * x).exp();
    let grid = linspace(-6.0, 6.0, 241);
    let mut detail = Vec::new();
    let mut ok = true;
    for sign in [1.0, -1.0] {
        let a = move |x: f64| sign * 2.0 / (1.0 + x * x).powi(2);
        let (lo, hi) = rank_one_spectrum_hull(a, k);
        let terms = vec![
            OperatorTerm::Multiplication(Coefficient::from_real_fn(a).map_err(fail)?),
            OperatorTerm::CauchyLowRank(vec![Coefficient::from_real_fn(k).map_err(fail)?]),
        ];
        let model = RealLineModel::dilated(terms, None, lorentzian, 1.0).map_err(fail)?;
        let opts = SolverOptions {
            tol: 1e-8,
            ..SolverOptions::default()
        };
        // Only grid points at distance >= 0.5 from the interval are tested.
        let points: Vec<f64> = grid.iter().copied().filter(|x| *x <= lo - 0.5 || *x >= hi + 0.5).collect();
        let r = evaluate_grid(&model, &MeasureQuery::new(points.clone(), eps, kernel.clone()).with_solver(opts))
            .map_err(fail)?;
        let outside = r.values.iter().map(|mu| mu.abs()).fold(0.0, f64::max);
        let inside = evaluate_measure(&model, &kernel, 0.5 * (lo + hi), eps, &opts).map_err(fail)?.value;
        ok &= outside <= 0.05 && r.warnings.is_empty();
        detail.push(format!(
            "a{}: interval [{lo:.3}, {hi:.3}], max |μ| at {} outside points {outside:.1e}, μ at midpoint {inside:.2}",
            if sign > 0.0 { "+" } else { "-" },
            points.len()
        ));
    }
    check(ok, detail.join("; "))
}

/// Fitted log-log slopes of the pointwise error on the free Laplacian.
fn convergence_order() -> Outcome {
    let (sigma, k0, scale) = (8.0, 1.0, 1000.0);
    let x0 = k0 * k0;
    let exact = wave_packet_laplacian_density(sigma, k0, x0).map_err(fail)?;
    let f = move |x: f64| C64::new(wave_packet(sigma, k0, x), 0.0);
    let model = RealLineModel::dilated(vec![OperatorTerm::laplacian()], None, f, scale).map_err(fail)?;
    // Consecutive doublings stop agreeing past ~2e-11 at the smallest ε
    // (round-off), while the error itself is settled well before that.
    let opts = SolverOptions {
        tol: 1e-10,
        max_dofs: 1 << 17,
        ..SolverOptions::default()
    };
    let mut ok = true;
    let mut detail = Vec::new();
    for m in [2, 4, 6] {
        let kernel = RationalKernel::equispaced(m).map_err(fail)?;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for p in [1.0, 1.5, 2.0, 2.5] {
            let eps = 10f64.powf(-p);
            let v = evaluate_measure(&model, &kernel, x0, eps, &opts).map_err(fail)?;
            ok &= v.warnings.is_empty();
            xs.push(eps.log10());
            ys.push(((v.value - exact) / exact).abs().log10());
        }
        let slope = cli::least_squares_slope(&xs, &ys);
        ok &= (slope - m as f64).abs() <= 0.5;
        detail.push(format!("m={m}: {slope:.3}"));
    }
    check(ok, format!("slopes {}", detail.join(", ")))
}

/// `B = I` reproduces the operator; the internal-waves pencil resolves the
/// weight of its zero eigenvalue.
fn pencil_checks() -> Outcome {
    let kernel = RationalKernel::equispaced(4).map_err(fail)?;
    let terms = vec![
        OperatorTerm::Multiplication(Coefficient::from_real_fn(|x| 2.0 / (1.0 + x * x).powi(2)).map_err(fail)?),
        OperatorTerm::CauchyLowRank(vec![Coefficient::from_real_fn(|x| (-x * x).exp()).map_err(fail)?]),
    ];
    let f = analyze(lorentzian, 512);
    let op = RealLineModel::operator(terms.clone(), f.clone()).map_err(fail)?;
    let pencil = RealLineModel::pencil(
        terms,
        vec![OperatorTerm::Multiplication(Coefficient::constant(1.0))],
        f,
    )
    .map_err(fail)?;
    let opts = SolverOptions {
        fixed_dofs: Some(512),
        ..SolverOptions::default()
    };
    let mut reduction: f64 = 0.0;
    for x in [-0.5, 0.4, 1.3, 2.7] {
        let a = evaluate_measure(&op, &kernel, x, 0.1, &opts).map_err(fail)?.value;
        let b = evaluate_measure(&pencil, &kernel, x, 0.1, &opts).map_err(fail)?.value;
        reduction = reduction.max((a - b).abs());
    }

    let f = f_analyze(|x, y| C64::new((x + y).sin().exp() / (2.0 + y.cos()), 0.0), 64);
    let model = FourierModel::pencil(internal_waves_a().map_err(fail)?, internal_waves_b(), f).map_err(fail)?;
    let w = model.ky_zero_weight().map_err(fail)?;
    let k2 = RationalKernel::equispaced(2).map_err(fail)?;
    let target = k2.value(0.0) * w;
    let opts = SolverOptions {
        init_dofs: 32,
        max_dofs: 256,
        ..SolverOptions::default()
    };
    let mut last = f64::NAN;
    let mut trail = Vec::new();
    for eps in [1e-1, 1e-2, 1e-3] {
        let v = evaluate_measure(&model, &k2, 0.0, eps, &opts).map_err(fail)?;
        last = eps * v.value;
        trail.push(format!("{last:.5}"));
    }
    let rel = ((last - target) / target).abs();
    check(
        reduction <= 1e-12 && rel <= 0.05,
        format!(
            "B = I deviation {reduction:.1e}; ε·μ(0) = [{}] vs K(0)·w = {target:.5} (rel. {rel:.1e})",
            trail.join(", ")
        ),
    )
}

/// Fixed-size engine output against eigendecomposition of the same matrix.
fn dense_equivalence() -> Outcome {
    let n = 200;
    let terms = vec![
        OperatorTerm::Multiplication(Coefficient::from_real_fn(|x| 2.0 / (1.0 + x * x).powi(2)).map_err(fail)?),
        OperatorTerm::CauchyLowRank(vec![Coefficient::from_real_fn(|x| (-x * x).exp()).map_err(fail)?]),
    ];
    let model = RealLineModel::operator(terms, analyze(lorentzian, 512)).map_err(fail)?;
    let (h, f) = model.dense_truncation(n).map_err(fail)?;
    let kernel = RationalKernel::equispaced(4).map_err(fail)?;
    let opts = SolverOptions {
        fixed_dofs: Some(n),
        ..SolverOptions::default()
    };
    let eps = 0.1;
    let mut worst: f64 = 0.0;
    for x in linspace(-1.0, 4.0, 26) {
        let engine = evaluate_measure(&model, &kernel, x, eps, &opts).map_err(fail)?.value;
        let dense = dense_measure(&h, &f, &kernel, eps, x).map_err(fail)?;
        worst = worst.max((engine - dense).abs());
    }
    check(worst <= 1e-8, format!("max |engine - dense| = {worst:.1e} at N = {n}"))
}

const CLI_CONFIG: &str = r#"{
  "problem": {
    "mode": "operator",
    "backend": "realline",
    "terms": [{"kind": "derivative", "order": 2, "coefficient": "1"}],
    "map_scale": 50
  },
  "f": {"expr": "sqrt(2/pi)/(1+x^2)"},
  "kernel": {"order": 4},
  "epsilon": 0.1,
  "grid": {"min": 0.3, "max": 3, "n": 28},
  "solver": {"tol": 1e-8},
  "output": {"path": "OUT"}
}"#;

/// Single-field corruptions of [`CLI_CONFIG`]; each must be rejected.
const CORRUPTIONS: &[(&str, &str)] = &[
    ("\"operator\"", "\"operater\""),
    ("\"realline\"", "\"circle\""),
    ("\"derivative\"", "\"derivate\""),
    ("\"coefficient\": \"1\"", "\"coefficient\": \"1 +\""),
    ("\"map_scale\": 50", "\"map_scale\": -50"),
    ("\"order\": 2", "\"order\": 3"),
    ("\"sqrt(2/pi)/(1+x^2)\"", "3"),
    ("\"order\": 4", "\"order\": 0"),
    ("\"order\": 4", "\"order\": -4"),
    ("\"epsilon\": 0.1", "\"epsilon\": 0"),
    ("\"epsilon\": 0.1", "\"epsilon\": \"small\""),
    ("\"min\": 0.3", "\"min\": 5"),
    ("\"n\": 28", "\"n\": 0"),
    ("\"tol\": 1e-8", "\"tol\": 2"),
    ("\"tol\": 1e-8", "\"tolerance\": 1e-8"),
    ("\"path\": \"OUT\"", "\"path\": \"\""),
    ("\"kernel\"", "\"kernels\""),
];

/// Byte-identical CSV across thread counts; schema corruptions exit 1.
fn cli_contract() -> Outcome {
    let dir = tempfile::tempdir().map_err(fail)?;
    let exe = env!("CARGO_BIN_EXE_specmeasure");
    let run = |cfg: &str, name: &str, threads: &str| -> Result<(i32, Option<Vec<u8>>), String> {
        let out = dir.path().join(format!("{name}.csv"));
        let cfg = cfg.replace("OUT", &out.display().to_string());
        let path = dir.path().join(format!("{name}.json"));
        std::fs::write(&path, cfg).map_err(fail)?;
        let status = Command::new(exe)
            .args(["run", "--config"])
            .arg(&path)
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .map_err(fail)?
            .status;
        Ok((status.code().unwrap_or(-1), std::fs::read(&out).ok()))
    };
    let (c1, one) = run(CLI_CONFIG, "one", "1")?;
    let (c4, many) = run(CLI_CONFIG, "many", "4")?;
    let identical = c1 == 0 && c4 == 0 && one.is_some() && one == many;
    let mut rejected = 0;
    for (i, (from, to)) in CORRUPTIONS.iter().enumerate() {
        assert!(CLI_CONFIG.contains(from), "corruption {i} does not apply");
        let (code, out) = run(&CLI_CONFIG.replacen(from, to, 1), &format!("bad{i}"), "2")?;
        if code == 1 && out.is_none() {
            rejected += 1;
        }
    }
    check(
        identical && rejected == CORRUPTIONS.len(),
        format!(
            "csv identical across 1 and 4 threads: {identical}; corruptions rejected {rejected}/{}",
            CORRUPTIONS.len()
        ),
    )
}

type Criterion = (&'static str, u64, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 kernel correctness", 1, kernel_correctness),
        ("2 delta recovery", 10, delta_recovery),
        ("3 hilbert sign", 10, hilbert_sign),
        ("4 laplacian peaks", 120, laplacian_peaks),
        ("5 rank-one support", 120, rank_one_support),
        ("6 convergence order", 300, convergence_order),
        ("7 pencil reduction and internal waves", 600, pencil_checks),
        ("8 dense equivalence", 60, dense_equivalence),
        ("9 determinism and cli contract", 60, cli_contract),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, budget, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let (status, detail) = match (&outcome, in_time) {
            (Ok(d), true) => ("PASS", d.clone()),
            (Ok(d), false) => ("FAIL", format!("{d}; over the {budget} s budget")),
            (Err(d), _) => ("FAIL", d.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("criterion {name}: {status} ({:.2} s) {detail}", elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
