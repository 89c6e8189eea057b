//! `-d²/dx²` on the real line, alone and with a rank-one Hilbert term,
//! compared against the kernel-smoothed analytic density.

use num_complex::Complex64;
use specmeasure::oracle::{kernel_convolution, lorentzian_laplacian_density};
use specmeasure::realline::{Coefficient, OperatorTerm, RealLineModel};
use specmeasure::{evaluate_grid, MeasureQuery, RationalKernel, SolverOptions};

fn main() -> specmeasure::Result<()> {
    let eps = 0.05;
    let kernel = RationalKernel::equispaced(4)?;
    let opts = SolverOptions { tol: 1e-8, ..SolverOptions::default() };
    let f = |x: f64| Complex64::new(1.0 / (1.0 + x * x), 0.0);
    let smoothed = |x: f64| {
        kernel_convolution(&kernel, eps, x, |s| 2.0 * s * lorentzian_laplacian_density(1.0, s * s).unwrap_or(0.0), 1e-12)
            .map(|q| q.value)
    };
    let points: Vec<f64> = (0..=10).map(|i| -1.5 + 0.5 * i as f64).collect();

    let plain = RealLineModel::dilated(vec![OperatorTerm::laplacian()], None, f, 50.0)?;
    let split = RealLineModel::dilated(
        vec![OperatorTerm::laplacian(), OperatorTerm::CauchyLowRank(vec![Coefficient::constant(1.0)])],
        None,
        f,
        50.0,
    )?;
    let q = MeasureQuery::new(points.clone(), eps, kernel.clone()).with_solver(opts);
    let a = evaluate_grid(&plain, &q)?;
    let b = evaluate_grid(&split, &q)?;
    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "x", "μ", "reference", "μ (+H)", "reference");
    for (i, x) in points.iter().enumerate() {
        let r_plain = smoothed(*x)?;
        let r_split = 0.5 * (smoothed(x - 1.0)? + smoothed(x + 1.0)?);
        println!("{x:>6.2} {:>12.6} {r_plain:>12.6} {:>12.6} {r_split:>12.6}", a.values[i], b.values[i]);
    }
    Ok(())
}
