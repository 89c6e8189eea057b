//! Pointwise convergence of μ_f^ε to the density ρ_f for the free
//! Laplacian, with the log-log slope fitted for m = 2, 4, 6.
//!
//! `f` is a Gaussian wave packet whose spectral mass sits at `λ = k0²`,
//! which keeps the real part of the resolvent small next to `πρ` and so
//! keeps round-off in the residue sum well below the m = 6 error.
//!
//! Usage: `convergence_rates [sigma] [k0] [scale]`

use num_complex::Complex64;
use specmeasure::cli::least_squares_slope;
use specmeasure::oracle::{wave_packet, wave_packet_laplacian_density};
use specmeasure::realline::{OperatorTerm, RealLineModel};
use specmeasure::{evaluate_measure, RationalKernel, SolverOptions};

fn main() -> specmeasure::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let sigma = args.first().copied().unwrap_or(8.0);
    let k0 = args.get(1).copied().unwrap_or(1.0);
    let scale = args.get(2).copied().unwrap_or(1000.0);
    let x0 = k0 * k0;
    let f = move |x: f64| Complex64::new(wave_packet(sigma, k0, x), 0.0);
    let model = RealLineModel::dilated(vec![OperatorTerm::laplacian()], None, f, scale)?;
    let exact = wave_packet_laplacian_density(sigma, k0, x0)?;
    let opts = SolverOptions {
        tol: 1e-10,
        max_dofs: 1 << 17,
        ..SolverOptions::default()
    };
    println!("sigma = {sigma}, k0 = {k0}, x0 = {x0}, rho = {exact:.17e}");
    for m in [2, 4, 6] {
        let kernel = RationalKernel::equispaced(m)?;
        let mut logs = Vec::new();
        for p in [1.0, 1.5, 2.0, 2.5] {
            let eps = 10f64.powf(-p);
            let v = evaluate_measure(&model, &kernel, x0, eps, &opts)?;
            let rel = (v.value - exact).abs() / exact;
            println!(
                "m = {m}  eps = 1e-{p:<3}  rel. error = {rel:.3e}  err_est = {:.1e}  dofs = {}  warnings = {}",
                v.err_est,
                v.dofs,
                v.warnings.len()
            );
            logs.push((eps.log10(), rel.log10()));
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = logs.into_iter().unzip();
        println!("m = {m}  fitted slope = {:.3}", least_squares_slope(&xs, &ys));
    }
    Ok(())
}
