//! Fixed-size engine output against an eigendecomposition of the same
//! truncated matrix.

use num_complex::Complex64;
use specmeasure::oracle::dense_measure;
use specmeasure::realline::{analyze, Coefficient, OperatorTerm, RealLineModel};
use specmeasure::{evaluate_measure, RationalKernel, SolverOptions};

fn main() -> specmeasure::Result<()> {
    let n = 200;
    let terms = vec![
        OperatorTerm::Multiplication(Coefficient::from_real_fn(|x| 2.0 / (1.0 + x * x).powi(2))?),
        OperatorTerm::CauchyLowRank(vec![Coefficient::from_real_fn(|x| (-x * x).exp())?]),
    ];
    let model = RealLineModel::operator(terms, analyze(|x| Complex64::new(1.0 / (1.0 + x * x), 0.0), 512))?;
    let (h, f) = model.dense_truncation(n)?;
    let kernel = RationalKernel::equispaced(4)?;
    let opts = SolverOptions { fixed_dofs: Some(n), ..SolverOptions::default() };
    for x in [-1.0, 0.0, 0.5, 1.0, 2.0, 3.0] {
        let engine = evaluate_measure(&model, &kernel, x, 0.1, &opts)?.value;
        let dense = dense_measure(&h, &f, &kernel, 0.1, x)?;
        println!("x = {x:+.1}: engine {engine:+.12e}  dense {dense:+.12e}  diff {:.1e}", (engine - dense).abs());
    }
    Ok(())
}
