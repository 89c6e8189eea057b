//! Smoothed spectral measures from shifted solves.
//!
//! For a kernel with poles `a_j` and residues `α_j`,
//!
//! ```text
//! μ_f^ε(x0) = -(1/π) Im Σ_j α_j ⟨(A - z_j B)^{-1} Bf, Bf⟩,   z_j = x0 - ε a_j,
//! ```
//!
//! with `B = I` for a single operator. Every shift is resolved independently
//! by doubling the truncation until the scalar functional settles.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::kernel::RationalKernel;
use crate::rep::{Basis, FunctionRep};

type C64 = Complex64;

/// Relative size of the discarded imaginary part above which a warning is
/// attached.
pub const IMAGINARY_RESIDUE_TOLERANCE: f64 = 1e-10;

/// A discretized operator or pencil that can solve `(A - zB)u = Bf` at a
/// truncation size `n` (per dimension).
pub trait ResolventModel: Sync {
    /// Returns `u` and the functional `⟨u, Bf⟩` at truncation `n`.
    fn solve(&self, z: C64, n: usize) -> Result<(FunctionRep, C64)>;

    /// Constant `C` with `f_normalized = C f`.
    fn normalization_constant(&self) -> f64;

    fn basis(&self) -> Basis;

    fn is_pencil(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Relative tolerance on consecutive values of the resolvent functional.
    pub tol: f64,
    pub init_dofs: usize,
    pub max_dofs: usize,
    /// Skip adaptivity and solve once at this size.
    pub fixed_dofs: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            init_dofs: 64,
            max_dofs: 1 << 16,
            fixed_dofs: None,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must lie in (0, 1), got {}",
                self.tol
            )));
        }
        if !self.init_dofs.is_power_of_two() || self.init_dofs < 2 {
            return Err(Error::InvalidArgument(format!(
                "init_dofs must be a power of two >= 2, got {}",
                self.init_dofs
            )));
        }
        if self.init_dofs > self.max_dofs {
            return Err(Error::InvalidArgument(format!(
                "init_dofs {} exceeds max_dofs {}",
                self.init_dofs, self.max_dofs
            )));
        }
        if let Some(n) = self.fixed_dofs {
            if n < 2 || n % 2 != 0 {
                return Err(Error::InvalidArgument(format!(
                    "fixed_dofs must be a positive even size, got {n}"
                )));
            }
        }
        Ok(())
    }
}

/// Inputs of one grid evaluation.
#[derive(Clone, Debug)]
pub struct MeasureQuery {
    pub points: Vec<f64>,
    pub epsilon: f64,
    pub kernel: RationalKernel,
    pub solver: SolverOptions,
}

impl MeasureQuery {
    pub fn new(points: Vec<f64>, epsilon: f64, kernel: RationalKernel) -> Self {
        Self {
            points,
            epsilon,
            kernel,
            solver: SolverOptions::default(),
        }
    }

    pub fn with_solver(mut self, solver: SolverOptions) -> Self {
        self.solver = solver;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if let Some(x) = self.points.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("grid point {x} is not finite")));
        }
        self.solver.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// The functional at one shift did not settle before `max_dofs`.
    NoConvergence {
        x0: f64,
        shift_re: f64,
        shift_im: f64,
        dofs: usize,
        err_est: f64,
    },
    /// The combination of conjugate shifts was not real to tolerance.
    ImaginaryResidue { x0: f64, relative: f64 },
    /// Passed through from kernel construction.
    Kernel { message: String },
    /// `f` was not resolved by its stored coefficients.
    UnresolvedVector,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::NoConvergence {
                x0,
                shift_re,
                shift_im,
                dofs,
                err_est,
            } => write!(
                f,
                "no convergence at x0 = {x0} (shift {shift_re}{shift_im:+}i) with {dofs} dofs; last relative change {err_est:.3e}"
            ),
            Warning::ImaginaryResidue { x0, relative } => {
                write!(f, "imaginary residue {relative:.3e} at x0 = {x0}")
            }
            Warning::Kernel { message } => f.write_str(message),
            Warning::UnresolvedVector => f.write_str("vector f is not resolved by its coefficients"),
        }
    }
}

/// Result of [`adaptive_solve`] at one shift.
#[derive(Clone, Debug)]
pub struct AdaptiveSolve {
    pub solution: FunctionRep,
    pub functional: C64,
    /// Last relative change of the functional (zero for a fixed size).
    pub err_est: f64,
    pub dofs: usize,
    pub converged: bool,
}

/// Solves at `N, 2N, 4N, …` until `|φ_2N - φ_N| ≤ tol |φ_2N|`.
///
/// Hitting `max_dofs` is not an error: the best iterate is returned with
/// `converged = false`. A truncation that is numerically singular at this
/// shift is skipped in favour of the next size.
pub fn adaptive_solve(model: &dyn ResolventModel, z: C64, opts: &SolverOptions) -> Result<AdaptiveSolve> {
    if let Some(n) = opts.fixed_dofs {
        let (solution, functional) = model.solve(z, n)?;
        return Ok(AdaptiveSolve {
            solution,
            functional,
            err_est: 0.0,
            dofs: n,
            converged: true,
        });
    }
    let mut n = opts.init_dofs;
    let mut last: Option<(FunctionRep, C64)> = None;
    let mut err_est = f64::INFINITY;
    loop {
        match model.solve(z, n) {
            Ok((u, phi)) => {
                if let Some((_, prev)) = &last {
                    err_est = if phi == *prev {
                        0.0
                    } else {
                        (phi - prev).norm() / phi.norm()
                    };
                    if err_est <= opts.tol {
                        return Ok(AdaptiveSolve {
                            solution: u,
                            functional: phi,
                            err_est,
                            dofs: n,
                            converged: true,
                        });
                    }
                }
                last = Some((u, phi));
            }
            Err(Error::NearSpectrum { .. }) if n < opts.max_dofs => last = None,
            Err(e) => return Err(e),
        }
        if n * 2 > opts.max_dofs {
            let (solution, functional) = last.ok_or(Error::NearSpectrum { n })?;
            return Ok(AdaptiveSolve {
                solution,
                functional,
                err_est,
                dofs: n,
                converged: false,
            });
        }
        n *= 2;
    }
}

/// Value of the smoothed measure at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointValue {
    pub value: f64,
    pub err_est: f64,
    pub dofs: usize,
    /// `|Im C| / Σ|α_j φ_j|` of the conjugate-pair combination `C`.
    pub imaginary_residue: f64,
    pub warnings: Vec<Warning>,
}

/// `μ_f^ε(x0)` for a single operator or pencil.
///
/// Each shift `z_j` is solved adaptively and its conjugate at the same
/// size; the result is `-(1/π) Re[(Σ α_j φ(z_j) - Σ conj(α_j) φ(conj z_j))/2i]`,
/// and the imaginary part of the bracket is the residue guard.
pub fn evaluate_measure(
    model: &dyn ResolventModel,
    kernel: &RationalKernel,
    x0: f64,
    epsilon: f64,
    opts: &SolverOptions,
) -> Result<PointValue> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let mut sum = C64::new(0.0, 0.0);
    let mut scale = 0.0;
    let mut err_est: f64 = 0.0;
    let mut dofs = 0;
    let mut warnings = Vec::new();
    for (a, alpha) in kernel.poles().iter().zip(kernel.residues()) {
        let z = x0 - epsilon * a;
        let solve = adaptive_solve(model, z, opts)?;
        if !solve.converged {
            warnings.push(Warning::NoConvergence {
                x0,
                shift_re: z.re,
                shift_im: z.im,
                dofs: solve.dofs,
                err_est: solve.err_est,
            });
        }
        let (_, phi_conj) = model.solve(z.conj(), solve.dofs)?;
        sum += alpha * solve.functional - alpha.conj() * phi_conj;
        scale += (alpha * solve.functional).norm();
        err_est = err_est.max(solve.err_est);
        dofs = dofs.max(solve.dofs);
    }
    let combination = sum / C64::new(0.0, 2.0);
    let imaginary_residue = if scale > 0.0 {
        combination.im.abs() / scale
    } else {
        0.0
    };
    if imaginary_residue > IMAGINARY_RESIDUE_TOLERANCE {
        warnings.push(Warning::ImaginaryResidue {
            x0,
            relative: imaginary_residue,
        });
    }
    Ok(PointValue {
        value: -combination.re / PI,
        err_est,
        dofs,
        imaginary_residue,
        warnings,
    })
}

/// [`evaluate_measure`] restricted to pencil models.
pub fn evaluate_measure_pencil(
    model: &dyn ResolventModel,
    kernel: &RationalKernel,
    x0: f64,
    epsilon: f64,
    opts: &SolverOptions,
) -> Result<PointValue> {
    if !model.is_pencil() {
        return Err(Error::InvalidPencil("model was built without a B operator".into()));
    }
    evaluate_measure(model, kernel, x0, epsilon, opts)
}

/// Measure values over a grid of points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasureResult {
    pub points: Vec<f64>,
    pub values: Vec<f64>,
    pub err_est: Vec<f64>,
    /// Largest truncation used over the shifts of each point.
    pub dofs: Vec<usize>,
    pub normalization_constant: f64,
    pub warnings: Vec<Warning>,
}

impl MeasureResult {
    pub fn has_warnings(&self) -> bool {
        !self.warnings.is_empty()
    }
}

/// Evaluates every point of the query in parallel; output order follows the
/// input order and values do not depend on the thread count.
pub fn evaluate_grid(model: &dyn ResolventModel, query: &MeasureQuery) -> Result<MeasureResult> {
    query.validate()?;
    let per_point: Vec<PointValue> = query
        .points
        .par_iter()
        .map(|&x0| evaluate_measure(model, &query.kernel, x0, query.epsilon, &query.solver))
        .collect::<Result<_>>()?;
    let mut warnings = Vec::new();
    if let Some(message) = query.kernel.conditioning_warning() {
        warnings.push(Warning::Kernel {
            message: message.to_string(),
        });
    }
    let mut values = Vec::with_capacity(per_point.len());
    let mut err_est = Vec::with_capacity(per_point.len());
    let mut dofs = Vec::with_capacity(per_point.len());
    for p in per_point {
        values.push(p.value);
        err_est.push(p.err_est);
        dofs.push(p.dofs);
        warnings.extend(p.warnings);
    }
    Ok(MeasureResult {
        points: query.points.clone(),
        values,
        err_est,
        dofs,
        normalization_constant: model.normalization_constant(),
        warnings,
    })
}
