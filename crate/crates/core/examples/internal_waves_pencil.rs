//! Internal-waves pencil on the periodic square. The eigenvalue at zero
//! carries a point mass, so `ε·μ(0)` tends to `K(0)` times that weight.

use num_complex::Complex64;
use specmeasure::fourier::{f_analyze, internal_waves_a, internal_waves_b, FourierModel};
use specmeasure::{evaluate_measure, RationalKernel, SolverOptions};

fn main() -> specmeasure::Result<()> {
    let f = f_analyze(|x, y| Complex64::new((x + y).sin().exp() / (2.0 + y.cos()), 0.0), 64);
    let model = FourierModel::pencil(internal_waves_a()?, internal_waves_b(), f)?;
    let kernel = RationalKernel::equispaced(2)?;
    let target = kernel.value(0.0) * model.ky_zero_weight()?;
    let opts = SolverOptions { init_dofs: 32, max_dofs: 256, ..SolverOptions::default() };
    println!("K(0)·w = {target:.6}");
    for eps in [1e-1, 1e-2, 1e-3] {
        let v = evaluate_measure(&model, &kernel, 0.0, eps, &opts)?;
        println!("eps = {eps:.0e}: ε·μ(0) = {:.6}  dofs = {}", eps * v.value, v.dofs);
    }
    for x in [-1.0, -0.5, 0.5, 1.0] {
        let v = evaluate_measure(&model, &kernel, x, 0.1, &opts)?;
        println!("μ({x:+}) at eps = 0.1: {:.6}", v.value);
    }
    Ok(())
}
