//! Multiplication by a constant `c` has a single point of spectrum, so the
//! smoothed measure is the shifted kernel `K_ε(x - c)`.

use num_complex::Complex64;
use specmeasure::realline::{analyze, Coefficient, OperatorTerm, RealLineModel};
use specmeasure::{evaluate_grid, MeasureQuery, RationalKernel};

fn main() -> specmeasure::Result<()> {
    let (c, eps) = (0.5, 0.1);
    let f = analyze(|x| Complex64::new(1.0 / (1.0 + x * x), 0.0), 256);
    let model = RealLineModel::operator(vec![OperatorTerm::Multiplication(Coefficient::constant(c))], f)?;
    let points: Vec<f64> = (0..=12).map(|i| -1.0 + 0.25 * i as f64).collect();
    for m in [1, 2, 4, 6] {
        let kernel = RationalKernel::equispaced(m)?;
        let r = evaluate_grid(&model, &MeasureQuery::new(points.clone(), eps, kernel.clone()))?;
        let mut worst: f64 = 0.0;
        for (x, mu) in points.iter().zip(&r.values) {
            worst = worst.max((mu - kernel.scaled(x - c, eps)?).abs());
        }
        println!("m = {m}: peak μ = {:.6}, max |μ - K_ε(x - c)| = {worst:.1e}", r.values[6]);
    }
    Ok(())
}
