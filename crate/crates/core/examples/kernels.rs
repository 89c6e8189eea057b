//! Poles, residues and sampled values of the equispaced rational kernels.
//!
//! Usage: `kernels [max_order]`

use specmeasure::RationalKernel;

fn main() -> specmeasure::Result<()> {
    let max: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(6);
    for m in 1..=max {
        let k = RationalKernel::equispaced(m)?;
        println!("order {m}: moment residual {:.1e}", k.moment_residual());
        for (a, alpha) in k.poles().iter().zip(k.residues()) {
            println!("  pole {:+.6} {:+.6}i   residue {:+.6} {:+.6}i", a.re, a.im, alpha.re, alpha.im);
        }
        let samples: Vec<String> = [0.0, 0.5, 1.0, 2.0, 5.0].iter().map(|x| format!("K({x}) = {:.6}", k.value(*x))).collect();
        println!("  {}", samples.join("  "));
    }
    Ok(())
}
