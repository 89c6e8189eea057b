//! The Hilbert transform is diagonal in the ρ_k basis with entries ±i.
//! Compares that diagonal against a principal-value quadrature.

use specmeasure::oracle::{pv_cauchy, PvQuadratureRule};
use specmeasure::realline::{basis_function, hilbert_diag};

fn main() -> specmeasure::Result<()> {
    let n = 8;
    let h = hilbert_diag(n)?;
    let rule = PvQuadratureRule::default();
    for k in -(n as i64 / 2)..(n as i64 / 2) {
        let idx = (k + n as i64 / 2) as usize;
        let sign = h.get(idx, idx);
        let x = 0.7;
        let pv = pv_cauchy(|y| basis_function(k, y), x, &rule).value;
        let diag = sign * basis_function(k, x);
        println!("k = {k:+}: diagonal {sign}, deviation from quadrature at x = {x}: {:.1e}", (pv - diag).norm());
    }
    Ok(())
}
