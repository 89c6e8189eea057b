//! High-order rational smoothing kernels.
//!
//! A kernel of order `m` is fixed by `m` distinct poles `a_j` in the open
//! upper half-plane and residues `α_j` solving the transposed Vandermonde
//! system `Σ_j α_j a_j^k = δ_{k0}` for `0 ≤ k < m`. Its value on the real
//! line is
//!
//! ```text
//! K(x) = (1/π) Im Σ_j α_j / (x - a_j),      K_ε(x) = K(x/ε) / ε.
//! ```
//!
//! For `m = 1` with the pole at `i` this is the Poisson kernel. Higher orders
//! trade positivity for faster convergence of `K_ε * μ` as `ε → 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::solve_dense;

type C64 = Complex64;

/// Orders above this are accepted but flagged: the Vandermonde system
/// loses accuracy quickly beyond it.
pub const MAX_WELL_CONDITIONED_ORDER: usize = 10;

/// Poles `a_j = 2j/(m+1) - 1 + i`, `j = 1..=m`.
pub fn equispaced_poles(m: usize) -> Result<Vec<C64>> {
    if m == 0 {
        return Err(Error::InvalidArgument("kernel order must be at least 1".into()));
    }
    Ok((1..=m)
        .map(|j| C64::new(2.0 * j as f64 / (m + 1) as f64 - 1.0, 1.0))
        .collect())
}

/// Residues solving the transposed Vandermonde system for `poles`.
pub fn vandermonde_residues(poles: &[C64]) -> Result<Vec<C64>> {
    let m = poles.len();
    if m == 0 {
        return Err(Error::InvalidArgument("at least one pole is required".into()));
    }
    if let Some(p) = poles.iter().find(|p| !(p.im > 0.0) || !p.re.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "pole {p} is not in the open upper half-plane"
        )));
    }
    for (j, a) in poles.iter().enumerate() {
        if poles[..j].contains(a) {
            return Err(Error::SingularSystem(format!("repeated pole {a}")));
        }
    }
    let mut matrix = vec![C64::new(0.0, 0.0); m * m];
    for (j, a) in poles.iter().enumerate() {
        let mut power = C64::new(1.0, 0.0);
        for k in 0..m {
            matrix[k * m + j] = power;
            power *= a;
        }
    }
    let mut rhs = vec![C64::new(0.0, 0.0); m];
    rhs[0] = C64::new(1.0, 0.0);
    solve_dense(matrix, rhs)
}

/// An `m`-th order rational kernel. Immutable once built.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RationalKernel {
    poles: Vec<C64>,
    residues: Vec<C64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    conditioning_warning: Option<String>,
}

impl RationalKernel {
    /// Kernel with the equispaced poles of [`equispaced_poles`].
    pub fn equispaced(order: usize) -> Result<Self> {
        Self::with_poles(equispaced_poles(order)?)
    }

    /// Kernel with arbitrary distinct poles in the upper half-plane.
    pub fn with_poles(poles: Vec<C64>) -> Result<Self> {
        let residues = vandermonde_residues(&poles)?;
        let conditioning_warning = (poles.len() > MAX_WELL_CONDITIONED_ORDER).then(|| {
            format!(
                "kernel order {} exceeds {}; residues may be inaccurate",
                poles.len(),
                MAX_WELL_CONDITIONED_ORDER
            )
        });
        Ok(Self {
            poles,
            residues,
            conditioning_warning,
        })
    }

    pub fn order(&self) -> usize {
        self.poles.len()
    }

    pub fn poles(&self) -> &[C64] {
        &self.poles
    }

    pub fn residues(&self) -> &[C64] {
        &self.residues
    }

    pub fn conditioning_warning(&self) -> Option<&str> {
        self.conditioning_warning.as_deref()
    }

    /// `max_k |Σ_j α_j a_j^k - δ_{k0}|` over `0 ≤ k < m`.
    pub fn moment_residual(&self) -> f64 {
        (0..self.order())
            .map(|k| {
                let s: C64 = self
                    .poles
                    .iter()
                    .zip(&self.residues)
                    .map(|(a, alpha)| alpha * a.powu(k as u32))
                    .sum();
                let target = if k == 0 { 1.0 } else { 0.0 };
                (s - target).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `K(x) = (1/π) Im Σ_j α_j/(x - a_j)`.
    pub fn value(&self, x: f64) -> f64 {
        let s: C64 = self
            .poles
            .iter()
            .zip(&self.residues)
            .map(|(a, alpha)| alpha / (x - a))
            .sum();
        s.im / PI
    }

    /// The conjugate-pair form
    /// `(1/2πi) [Σ α_j/(x - a_j) - Σ conj(α_j)/(x - conj(a_j))]`,
    /// returned unreduced so its (vanishing) imaginary part can be inspected.
    pub fn value_two_sum(&self, x: f64) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for (a, alpha) in self.poles.iter().zip(&self.residues) {
            s += alpha / (x - a) - alpha.conj() / (x - a.conj());
        }
        s / C64::new(0.0, 2.0 * PI)
    }

    /// `K_ε(x) = K(x/ε)/ε`.
    pub fn scaled(&self, x: f64, epsilon: f64) -> Result<f64> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "smoothing parameter must be positive, got {epsilon}"
            )));
        }
        Ok(self.value(x / epsilon) / epsilon)
    }
}
