//! Multiplication plus a rank-one Cauchy term: the measure concentrates on
//! the predicted interval and is negligible away from it.

use num_complex::Complex64;
use specmeasure::realline::{rank_one_spectrum_hull, Coefficient, OperatorTerm, RealLineModel};
use specmeasure::{evaluate_grid, MeasureQuery, RationalKernel, SolverOptions};

fn main() -> specmeasure::Result<()> {
    let kernel = RationalKernel::equispaced(4)?;
    let opts = SolverOptions { tol: 1e-8, ..SolverOptions::default() };
    let k = |x: f64| (-x * x).exp();
    let f = |x: f64| Complex64::new(1.0 / (1.0 + x * x), 0.0);
    let points: Vec<f64> = (0..=12).map(|i| -6.0 + i as f64).collect();
    for sign in [1.0, -1.0] {
        let a = move |x: f64| sign * 2.0 / (1.0 + x * x).powi(2);
        let (lo, hi) = rank_one_spectrum_hull(a, k);
        let terms = vec![
            OperatorTerm::Multiplication(Coefficient::from_real_fn(a)?),
            OperatorTerm::CauchyLowRank(vec![Coefficient::from_real_fn(k)?]),
        ];
        let model = RealLineModel::dilated(terms, None, f, 1.0)?;
        let r = evaluate_grid(&model, &MeasureQuery::new(points.clone(), 0.1, kernel.clone()).with_solver(opts))?;
        println!("sign {sign:+}: predicted interval [{lo:.3}, {hi:.3}]");
        for (x, mu) in points.iter().zip(&r.values) {
            println!("  x = {x:+.1}  μ = {mu:+.3e}");
        }
    }
    Ok(())
}
