//! Spectral discretization of `L²(ℝ)` in the orthonormal rational basis
//!
//! ```text
//! ρ_n(x) = (1/√π) (1 + ix)^n / (1 - ix)^{n+1},   n ∈ ℤ.
//! ```
//!
//! Under `x = tan(θ/2)` we have `ρ_n = (1/√π) e^{inθ} cos(θ/2) e^{iθ/2}`, so
//! coefficients come from a plain FFT of `f(x)(1 - ix)` on an equispaced
//! θ-grid, multiplication by `a(x)` is a Toeplitz matrix built from the
//! Fourier series of `a(tan(θ/2))`, and `d/dx = (1 + cos θ) d/dθ` is
//! tridiagonal:
//!
//! ```text
//! ρ_n' = (in/2) ρ_{n-1} + i(n + 1/2) ρ_n + (i(n+1)/2) ρ_{n+1}.
//! ```
//!
//! The Cauchy singular operator `(1/πi) p.v.∫ v(y)/(y - x) dy` is diagonal:
//! `+1` on `ρ_n` for `n ≥ 0` (analytic in the upper half-plane) and `-1` for
//! `n < 0`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::engine::ResolventModel;
use crate::error::{Error, Result};
use crate::linalg::{BandLu, BandMatrix};
use crate::rep::{index_of, wavenumber, Basis, FunctionRep};

type C64 = Complex64;

/// Relative level below which Fourier coefficients of a multiplier are dropped.
pub const SYMBOL_TRUNCATION: f64 = 1e-14;

const MAX_SYMBOL_SAMPLES: usize = 1 << 18;

/// Midpoint grid `θ_k = -π + (k + 1/2) 2π/n`, which avoids `x = ±∞`.
pub fn grid_angles(n: usize) -> Vec<f64> {
    let h = 2.0 * PI / n as f64;
    (0..n).map(|k| -PI + (k as f64 + 0.5) * h).collect()
}

/// Real-line nodes `x_k = tan(θ_k/2)` matching [`grid_angles`].
pub fn grid_points(n: usize) -> Vec<f64> {
    grid_angles(n).into_iter().map(|t| (t / 2.0).tan()).collect()
}

/// Fourier coefficients `ĝ_k`, `k ∈ [-n/2, n/2)`, of a function sampled on
/// the midpoint grid.
fn midpoint_fourier(mut samples: Vec<C64>) -> Vec<C64> {
    let n = samples.len();
    FftPlanner::new().plan_fft_forward(n).process(&mut samples);
    let h = 2.0 * PI / n as f64;
    (0..n)
        .map(|i| {
            let k = wavenumber(n, i);
            let phase = C64::from_polar(1.0, k as f64 * (PI - h / 2.0));
            samples[k.rem_euclid(n as i64) as usize] * phase / n as f64
        })
        .collect()
}

/// Coefficients of `f` from samples on [`grid_points`]`(n)`.
pub fn analyze_samples(samples: &[C64]) -> FunctionRep {
    let n = samples.len();
    assert!(n.is_power_of_two(), "transform size must be a power of two");
    let weighted = samples
        .iter()
        .zip(grid_points(n))
        .map(|(f, x)| f * C64::new(1.0, -x))
        .collect();
    let sqrt_pi = PI.sqrt();
    FunctionRep::new(
        Basis::RealLine,
        midpoint_fourier(weighted).into_iter().map(|c| c * sqrt_pi).collect(),
    )
}

/// Coefficients of `f` at truncation `n` (a power of two).
pub fn analyze(f: impl Fn(f64) -> C64, n: usize) -> FunctionRep {
    let samples: Vec<C64> = grid_points(n).into_iter().map(f).collect();
    analyze_samples(&samples)
}

/// Doubles the transform size from `n0` until the coefficients are resolved
/// or `n_max` is reached.
pub fn analyze_adaptive(f: impl Fn(f64) -> C64, n0: usize, n_max: usize) -> FunctionRep {
    let mut n = n0.max(4);
    loop {
        let rep = analyze(&f, n);
        if rep.resolved() || n >= n_max {
            return rep;
        }
        n *= 2;
    }
}

/// `ρ_n(x)`.
pub fn basis_function(n: i64, x: f64) -> C64 {
    let w = C64::new(1.0, x) / C64::new(1.0, -x);
    w.powi(n as i32) / (C64::new(1.0, -x) * PI.sqrt())
}

/// Pointwise values `Σ c_n ρ_n(x)`.
pub fn synthesize(rep: &FunctionRep, points: &[f64]) -> Vec<C64> {
    let n = rep.len();
    let first = wavenumber(n, 0);
    points
        .iter()
        .map(|&x| {
            let w = C64::new(1.0, x) / C64::new(1.0, -x);
            let mut power = w.powi(first as i32);
            let mut acc = C64::new(0.0, 0.0);
            for c in rep.coeffs() {
                acc += c * power;
                power *= w;
            }
            acc / (C64::new(1.0, -x) * PI.sqrt())
        })
        .collect()
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Multiplier `a(x)` stored as the Fourier coefficients of `a(tan(θ/2))`,
/// truncated to a symmetric band `|k| ≤ bandwidth`.
///
/// Coefficients built from a real closure keep it, so they can be
/// re-sampled for a dilated basis.
#[derive(Clone)]
pub struct Coefficient {
    /// Entry `k + bandwidth` holds `â_k`.
    symbol: Vec<C64>,
    bandwidth: usize,
    source: Option<RealFn>,
}

impl PartialEq for Coefficient {
    fn eq(&self, other: &Self) -> bool {
        self.symbol == other.symbol
    }
}

impl std::fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Coefficient")
            .field("bandwidth", &self.bandwidth)
            .field("symbol", &self.symbol)
            .finish()
    }
}

impl Coefficient {
    pub fn constant(c: f64) -> Self {
        Self {
            symbol: vec![C64::new(c, 0.0)],
            bandwidth: 0,
            source: None,
        }
    }

    /// Coefficient from its Fourier symbol `â_{-b..=b}` in the θ variable.
    pub fn from_symbol(symbol: Vec<C64>) -> Result<Self> {
        if symbol.len().is_multiple_of(2) {
            return Err(Error::InvalidArgument(
                "symbol must have odd length 2b + 1".into(),
            ));
        }
        let bandwidth = symbol.len() / 2;
        let coefficient = Self {
            symbol,
            bandwidth,
            source: None,
        };
        coefficient.check_real()?;
        Ok(coefficient)
    }

    /// Samples `a(tan(θ/2))` on refining grids until its Fourier series is
    /// resolved, then truncates at [`SYMBOL_TRUNCATION`]. Complex-valued `a`
    /// is rejected since the multiplier would not be self-adjoint.
    pub fn from_fn(a: impl Fn(f64) -> C64) -> Result<Self> {
        let mut n = 64;
        let coeffs = loop {
            let samples: Vec<C64> = grid_points(n).into_iter().map(&a).collect();
            if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "coefficient is not finite on the real line ({bad})"
                )));
            }
            let peak = samples.iter().map(|v| v.norm()).fold(0.0, f64::max);
            if let Some(v) = samples.iter().find(|v| v.im.abs() > 1e-13 * peak.max(1e-300)) {
                return Err(Error::SelfAdjointness(format!(
                    "multiplication coefficient is complex-valued (sample {v})"
                )));
            }
            let coeffs = midpoint_fourier(samples);
            let peak = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let tail = coeffs
                .iter()
                .enumerate()
                .filter(|(i, _)| wavenumber(n, *i).unsigned_abs() as usize >= n / 4)
                .map(|(_, c)| c.norm())
                .fold(0.0, f64::max);
            if tail <= 0.1 * SYMBOL_TRUNCATION * peak || n >= MAX_SYMBOL_SAMPLES {
                break coeffs;
            }
            n *= 2;
        };
        let peak = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let bandwidth = (0..n)
            .filter(|&i| coeffs[i].norm() > SYMBOL_TRUNCATION * peak)
            .map(|i| wavenumber(n, i).unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
            .min(n / 2 - 1);
        // Real a: enforce â_{-k} = conj(â_k) exactly.
        let symbol = (-(bandwidth as i64)..=bandwidth as i64)
            .map(|k| {
                let plus = coeffs[index_of(n, k)];
                let minus = coeffs[index_of(n, -k)];
                (plus + minus.conj()) * 0.5
            })
            .collect();
        Ok(Self {
            symbol,
            bandwidth,
            source: None,
        })
    }

    pub fn from_real_fn(a: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let source: RealFn = Arc::new(a);
        let mut c = Self::from_fn(|x| C64::new(source(x), 0.0))?;
        c.source = Some(source);
        Ok(c)
    }

    /// `s ↦ factor · a(scale · s)`.
    fn rescaled(&self, scale: f64, factor: f64) -> Result<Self> {
        if scale == 1.0 && factor == 1.0 {
            return Ok(self.clone());
        }
        match &self.source {
            Some(a) => {
                let a = a.clone();
                Self::from_real_fn(move |s| factor * a(scale * s))
            }
            None if self.bandwidth == 0 => Ok(Self {
                symbol: vec![self.symbol[0] * factor],
                bandwidth: 0,
                source: None,
            }),
            None if scale == 1.0 => Ok(Self {
                symbol: self.symbol.iter().map(|c| c * factor).collect(),
                bandwidth: self.bandwidth,
                source: None,
            }),
            None => Err(Error::InvalidArgument(
                "a coefficient given only by its symbol cannot be dilated".into(),
            )),
        }
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// `â_k`, zero outside the band.
    pub fn symbol(&self, k: i64) -> C64 {
        if k.unsigned_abs() as usize > self.bandwidth {
            C64::new(0.0, 0.0)
        } else {
            self.symbol[(k + self.bandwidth as i64) as usize]
        }
    }

    fn check_real(&self) -> Result<()> {
        let peak = self.symbol.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for k in 0..=self.bandwidth as i64 {
            if (self.symbol(k) - self.symbol(-k).conj()).norm() > 1e-12 * peak {
                return Err(Error::SelfAdjointness(format!(
                    "symbol is not conjugate-symmetric at k = {k}; coefficient is complex-valued"
                )));
            }
        }
        Ok(())
    }

    /// `a(x)` evaluated from the truncated symbol.
    pub fn eval(&self, x: f64) -> f64 {
        let theta = 2.0 * x.atan();
        (-(self.bandwidth as i64)..=self.bandwidth as i64)
            .map(|k| self.symbol(k) * C64::from_polar(1.0, k as f64 * theta))
            .sum::<C64>()
            .re
    }
}

/// Toeplitz matrix of multiplication by `a` on a window of `size` indices.
fn mult_band(a: &Coefficient, size: usize) -> BandMatrix {
    let b = a.bandwidth.min(size.saturating_sub(1));
    let mut m = BandMatrix::zeros(size, b, b);
    for i in 0..size {
        for j in i.saturating_sub(b)..(i + b + 1).min(size) {
            m.set(i, j, a.symbol(i as i64 - j as i64));
        }
    }
    m
}

/// `d/dx` on the window whose first index is `first`.
fn diff_band(first: i64, size: usize) -> BandMatrix {
    let mut d = BandMatrix::zeros(size, 1, 1);
    for r in 0..size {
        let n = (first + r as i64) as f64;
        d.set(r, r, C64::new(0.0, n + 0.5));
        if r > 0 {
            d.set(r, r - 1, C64::new(0.0, n / 2.0));
        }
        if r + 1 < size {
            d.set(r, r + 1, C64::new(0.0, (n + 1.0) / 2.0));
        }
    }
    d
}

fn signature_band(first: i64, size: usize) -> BandMatrix {
    let diag: Vec<C64> = (0..size)
        .map(|r| {
            if first + r as i64 >= 0 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(-1.0, 0.0)
            }
        })
        .collect();
    BandMatrix::from_diagonal(&diag)
}

fn check_window(n: usize) -> Result<()> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "truncation must be a positive even size, got {n}"
        )));
    }
    Ok(())
}

/// Matrix of multiplication by `a` on the window `[-n/2, n/2)`.
pub fn mult_matrix(a: &Coefficient, n: usize) -> Result<BandMatrix> {
    check_window(n)?;
    Ok(mult_band(a, n))
}

/// Matrix of `d^p/dx^p` on the window `[-n/2, n/2)`; exact truncation of the
/// infinite operator, so `p = 2` is not the square of the truncated `p = 1`
/// matrix in the two corner entries.
pub fn diff_matrix(order: u32, n: usize) -> Result<BandMatrix> {
    check_window(n)?;
    let first = -((n / 2) as i64);
    match order {
        1 => Ok(diff_band(first, n)),
        2 => {
            let d = diff_band(first - 1, n + 2);
            Ok(d.mul(&d).window(1, n))
        }
        p => Err(Error::UnsupportedOrder(p)),
    }
}

/// Diagonal signature of `v ↦ (1/πi) p.v.∫ v(y)/(y - x) dy`: `+1` for
/// `n ≥ 0`, `-1` for `n < 0`.
pub fn hilbert_diag(n: usize) -> Result<BandMatrix> {
    check_window(n)?;
    Ok(signature_band(-((n / 2) as i64), n))
}

/// One self-adjoint summand of an operator on `L²(ℝ)`.
#[derive(Clone, Debug, PartialEq)]
pub enum OperatorTerm {
    /// `order = 2`: `-(c u')'`; `order = 1`: `-(i/2)(c u' + (c u)')`.
    /// A missing coefficient means `c ≡ 1`.
    Derivative {
        order: u32,
        coefficient: Option<Coefficient>,
    },
    /// `a(x) u(x)` with real `a`.
    Multiplication(Coefficient),
    /// `Σ_i k_i(x) (1/πi) p.v.∫ k_i(y) u(y)/(y - x) dy`, i.e. the kernel
    /// `G(x, y) = Σ_i k_i(x) k_i(y)` with real factors.
    CauchyLowRank(Vec<Coefficient>),
}

impl OperatorTerm {
    /// `-d²/dx²`.
    pub fn laplacian() -> Self {
        OperatorTerm::Derivative {
            order: 2,
            coefficient: None,
        }
    }

    /// The same term in the variable `s = x / scale`.
    pub fn rescaled(&self, scale: f64) -> Result<Self> {
        Ok(match self {
            OperatorTerm::Derivative { order, coefficient } => {
                let factor = scale.powi(-(*order as i32));
                let c = match coefficient {
                    Some(c) => c.rescaled(scale, factor)?,
                    None => Coefficient::constant(factor),
                };
                OperatorTerm::Derivative {
                    order: *order,
                    coefficient: (c != Coefficient::constant(1.0)).then_some(c),
                }
            }
            OperatorTerm::Multiplication(a) => OperatorTerm::Multiplication(a.rescaled(scale, 1.0)?),
            OperatorTerm::CauchyLowRank(ks) => OperatorTerm::CauchyLowRank(
                ks.iter().map(|k| k.rescaled(scale, 1.0)).collect::<Result<_>>()?,
            ),
        })
    }

    /// Bandwidth of the infinite matrix of this term.
    fn reach(&self) -> usize {
        match self {
            OperatorTerm::Derivative { order, coefficient } => {
                *order as usize + coefficient.as_ref().map_or(0, |c| c.bandwidth)
            }
            OperatorTerm::Multiplication(c) => c.bandwidth,
            OperatorTerm::CauchyLowRank(ks) => {
                2 * ks.iter().map(|k| k.bandwidth).max().unwrap_or(0)
            }
        }
    }

    /// Exact truncation to the window `[first, first + size)`.
    fn matrix(&self, first: i64, size: usize) -> Result<BandMatrix> {
        let pad = self.reach() + 1;
        let ext_first = first - pad as i64;
        let ext = size + 2 * pad;
        let crop = |m: BandMatrix| m.window(pad, size);
        let i = C64::new(0.0, 1.0);
        Ok(match self {
            OperatorTerm::Multiplication(a) => mult_band(a, size),
            OperatorTerm::Derivative { order: 2, coefficient } => {
                let d = diff_band(ext_first, ext);
                let inner = match coefficient {
                    Some(c) => mult_band(c, ext).mul(&d),
                    None => d.clone(),
                };
                crop(d.mul(&inner).scaled(C64::new(-1.0, 0.0)))
            }
            OperatorTerm::Derivative { order: 1, coefficient } => match coefficient {
                None => diff_band(first, size).scaled(-i),
                Some(c) => {
                    let d = diff_band(ext_first, ext);
                    let m = mult_band(c, ext);
                    crop(m.mul(&d).add_scaled(&d.mul(&m), C64::new(1.0, 0.0)).scaled(-i * 0.5))
                }
            },
            OperatorTerm::Derivative { order, .. } => return Err(Error::UnsupportedOrder(*order)),
            OperatorTerm::CauchyLowRank(factors) => {
                let s = signature_band(ext_first, ext);
                let mut acc = BandMatrix::zeros(size, 0, 0);
                for k in factors {
                    let m = mult_band(k, ext);
                    let sandwich = m.mul(&s).mul(&m.adjoint());
                    acc = acc.add_scaled(&crop(sandwich), C64::new(1.0, 0.0));
                }
                acc
            }
        })
    }
}

/// Tolerance on `max|A - A^*| / max|A|` for an assembled operator.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// Unshifted matrix of `Σ terms` on the window `[-n/2, n/2)`.
pub fn assemble(terms: &[OperatorTerm], n: usize) -> Result<BandMatrix> {
    check_window(n)?;
    if terms.is_empty() {
        return Err(Error::InvalidOperator("operator has no terms".into()));
    }
    let first = -((n / 2) as i64);
    let mut acc = BandMatrix::zeros(n, 0, 0);
    for term in terms {
        acc = acc.add_scaled(&term.matrix(first, n)?, C64::new(1.0, 0.0));
    }
    let defect = acc.hermitian_defect();
    if defect > HERMITIAN_TOLERANCE {
        return Err(Error::InvalidOperator(format!(
            "assembled matrix is not Hermitian (relative defect {defect:.3e})"
        )));
    }
    Ok(acc)
}

/// A truncated shifted system `T(z) = A - zB` with its factorization.
///
/// The matrix is block diagonal; each block is banded and factored
/// independently, and a block's rows are contiguous in the coefficient
/// storage order.
#[derive(Clone, Debug)]
pub struct ShiftedSystem {
    basis: Basis,
    shape: (usize, usize),
    shift: C64,
    blocks: Vec<(BandMatrix, BandLu)>,
}

impl ShiftedSystem {
    /// Factors `a - z b` (`b = I` when absent).
    pub fn new(
        basis: Basis,
        shape: (usize, usize),
        a: &BandMatrix,
        b: Option<&BandMatrix>,
        z: C64,
    ) -> Result<Self> {
        Self::from_blocks(basis, shape, vec![shifted(a, b, z)], z)
    }

    /// Factors already-shifted diagonal blocks.
    pub fn from_blocks(
        basis: Basis,
        shape: (usize, usize),
        matrices: Vec<BandMatrix>,
        z: C64,
    ) -> Result<Self> {
        check_shift(z)?;
        let total: usize = matrices.iter().map(|m| m.dim()).sum();
        assert_eq!(total, shape.0 * shape.1, "blocks do not cover the window");
        let blocks = matrices
            .into_iter()
            .map(|m| {
                let lu = m.factor()?;
                Ok((m, lu))
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| match e {
                Error::NearSpectrum { .. } => Error::NearSpectrum { n: total },
                other => other,
            })?;
        Ok(Self {
            basis,
            shape,
            shift: z,
            blocks,
        })
    }

    pub fn shift(&self) -> C64 {
        self.shift
    }

    pub fn dim(&self) -> usize {
        self.shape.0 * self.shape.1
    }

    pub fn blocks(&self) -> impl Iterator<Item = &BandMatrix> {
        self.blocks.iter().map(|(m, _)| m)
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut out = Vec::with_capacity(x.len());
        let mut offset = 0;
        for (m, _) in &self.blocks {
            out.extend(m.matvec(&x[offset..offset + m.dim()]));
            offset += m.dim();
        }
        out
    }

    pub fn solve(&self, rhs: &FunctionRep) -> Result<FunctionRep> {
        if rhs.basis() != self.basis || rhs.shape() != self.shape {
            return Err(Error::BasisMismatch {
                left: format!("{} {:?}", self.basis, self.shape),
                right: format!("{} {:?}", rhs.basis(), rhs.shape()),
            });
        }
        let mut u = Vec::with_capacity(rhs.len());
        let mut offset = 0;
        for (m, lu) in &self.blocks {
            let b = &rhs.coeffs()[offset..offset + m.dim()];
            let mut x = lu.solve(b);
            // One refinement step against the stored matrix.
            let r = m.residual_compensated(&x, b);
            for (xi, di) in x.iter_mut().zip(lu.solve(&r)) {
                *xi += di;
            }
            u.extend(x);
            offset += m.dim();
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NearSpectrum { n: self.dim() });
        }
        Ok(match self.basis {
            Basis::Fourier2d => FunctionRep::new_2d(self.shape.0, self.shape.1, u),
            basis => FunctionRep::new(basis, u),
        })
    }
}

pub(crate) fn check_shift(z: C64) -> Result<()> {
    if z.im == 0.0 || !z.is_finite() {
        return Err(Error::ShiftOnRealAxis { re: z.re, im: z.im });
    }
    Ok(())
}

/// `a - z b` (`b = I` when absent).
pub(crate) fn shifted(a: &BandMatrix, b: Option<&BandMatrix>, z: C64) -> BandMatrix {
    match b {
        Some(b) => a.add_scaled(b, -z),
        None => {
            let mut m = a.clone();
            for i in 0..m.dim() {
                m.add_at(i, i, -z);
            }
            m
        }
    }
}

/// Assembles and factors `Σ terms - zI` on the window `[-n/2, n/2)`.
pub fn assemble_shifted(terms: &[OperatorTerm], z: C64, n: usize) -> Result<ShiftedSystem> {
    check_shift(z)?;
    let a = assemble(terms, n)?;
    ShiftedSystem::new(Basis::RealLine, (n, 1), &a, None, z)
}

/// Solves a shifted system for a right-hand side truncated to its window.
pub fn solve_shifted(system: &ShiftedSystem, rhs: &FunctionRep) -> Result<FunctionRep> {
    system.solve(rhs)
}

/// Convex hull of the ranges of `a(x) ± k(x)²`: the spectrum of
/// `a + k H k` for a rank-one Cauchy kernel `G(x,y) = k(x)k(y)`.
pub fn rank_one_spectrum_hull(a: impl Fn(f64) -> f64, k: impl Fn(f64) -> f64) -> (f64, f64) {
    let lower = |x: f64| a(x) - k(x) * k(x);
    let upper = |x: f64| a(x) + k(x) * k(x);
    let nodes = grid_points(1 << 14);
    let lo = extremum(lower, &nodes, -1.0).min(extremum(upper, &nodes, -1.0));
    let hi = extremum(lower, &nodes, 1.0).max(extremum(upper, &nodes, 1.0));
    // The grid never reaches x = ±∞, where both coefficients vanish.
    let at_infinity = a(f64::MAX);
    (lo.min(at_infinity), hi.max(at_infinity))
}

/// Largest value of `sign * g` over the nodes, polished by golden-section
/// search between the neighbours of the best node.
fn extremum(g: impl Fn(f64) -> f64, nodes: &[f64], sign: f64) -> f64 {
    let h = |x: f64| sign * g(x);
    let best = (0..nodes.len())
        .max_by(|&i, &j| h(nodes[i]).total_cmp(&h(nodes[j])))
        .expect("non-empty grid");
    let (mut lo, mut hi) = (
        nodes[best.saturating_sub(1)],
        nodes[(best + 1).min(nodes.len() - 1)],
    );
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let c = hi - ratio * (hi - lo);
        let d = lo + ratio * (hi - lo);
        if h(c) > h(d) {
            hi = d;
        } else {
            lo = c;
        }
    }
    sign * h(nodes[best]).max(h(0.5 * (lo + hi)))
}

/// Operator (or pencil) on the real line together with the vector `f`,
/// normalized in the norm the measure is taken in.
#[derive(Debug)]
pub struct RealLineModel {
    a_terms: Vec<OperatorTerm>,
    b_terms: Option<Vec<OperatorTerm>>,
    f: FunctionRep,
    g: FunctionRep,
    normalization: f64,
    scale: f64,
    cache: Mutex<HashMap<usize, Arc<(BandMatrix, Option<BandMatrix>)>>>,
}

/// Largest transform used when analyzing `f` from a closure.
pub const MAX_ANALYSIS_SIZE: usize = 1 << 16;

impl RealLineModel {
    /// Single operator `L`; `f` is scaled to unit norm.
    pub fn operator(terms: Vec<OperatorTerm>, f: FunctionRep) -> Result<Self> {
        Self::build(terms, None, f)
    }

    /// Pencil `(A, B)`; `f` is scaled so that `⟨Bf, f⟩ = 1`.
    pub fn pencil(a_terms: Vec<OperatorTerm>, b_terms: Vec<OperatorTerm>, f: FunctionRep) -> Result<Self> {
        Self::build(a_terms, Some(b_terms), f)
    }

    /// Operator or pencil discretized in the dilated basis
    /// `ρ_n(x / scale) / √scale`.
    ///
    /// Resolvent solutions at shifts close to continuous spectrum carry
    /// slowly decaying oscillatory tails; a scale comparable to their decay
    /// length lets a modest truncation resolve them. Terms are rewritten in
    /// `s = x / scale` (derivatives pick up `scale^{-p}`, coefficients are
    /// re-sampled), so the measure does not depend on the scale.
    pub fn dilated(
        a_terms: Vec<OperatorTerm>,
        b_terms: Option<Vec<OperatorTerm>>,
        f: impl Fn(f64) -> C64,
        scale: f64,
    ) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidArgument(format!("map scale must be positive, got {scale}")));
        }
        let a = a_terms.iter().map(|t| t.rescaled(scale)).collect::<Result<Vec<_>>>()?;
        let b = match b_terms {
            Some(b) => Some(b.iter().map(|t| t.rescaled(scale)).collect::<Result<Vec<_>>>()?),
            None => None,
        };
        let root = scale.sqrt();
        let g = |s: f64| f(scale * s) * root;
        // One doubling past "resolved" pushes the tail to round-off, which
        // the residue combination would otherwise amplify.
        let n = analyze_adaptive(g, 64, MAX_ANALYSIS_SIZE).len();
        let rep = analyze(g, (2 * n).min(MAX_ANALYSIS_SIZE));
        let mut model = Self::build(a, b, rep)?;
        model.scale = scale;
        Ok(model)
    }

    /// Dilation of the basis; 1 unless built by [`RealLineModel::dilated`].
    pub fn map_scale(&self) -> f64 {
        self.scale
    }

    fn build(
        a_terms: Vec<OperatorTerm>,
        b_terms: Option<Vec<OperatorTerm>>,
        f: FunctionRep,
    ) -> Result<Self> {
        if f.basis() != Basis::RealLine {
            return Err(Error::BasisMismatch {
                left: Basis::RealLine.to_string(),
                right: f.basis().to_string(),
            });
        }
        // Validates the operator once up front.
        assemble(&a_terms, 16)?;
        let (g, weight) = match &b_terms {
            None => (f.clone(), f.norm().powi(2)),
            Some(b) => {
                let reach = b.iter().map(|t| t.reach()).max().unwrap_or(0) + 1;
                let size = f.len() + 2 * reach;
                let size = size + size % 2;
                let b_matrix = assemble(b, size).map_err(|e| Error::InvalidPencil(e.to_string()))?;
                if !b_matrix.is_positive_definite() {
                    return Err(Error::InvalidPencil("B is not positive definite".into()));
                }
                let wide = f.resized(size, 1);
                let g = FunctionRep::new(Basis::RealLine, b_matrix.matvec(wide.coeffs()));
                let weight = g.inner_product(&wide)?.re;
                (g, weight)
            }
        };
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "f has non-positive norm {weight} and cannot be normalized"
            )));
        }
        let c = 1.0 / weight.sqrt();
        Ok(Self {
            a_terms,
            b_terms,
            f: f.scaled(C64::new(c, 0.0)),
            g: g.scaled(C64::new(c, 0.0)),
            normalization: c,
            scale: 1.0,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// Normalized `f`.
    pub fn f(&self) -> &FunctionRep {
        &self.f
    }

    /// Right-hand side `g = Bf` (`= f` for a plain operator), normalized.
    pub fn g(&self) -> &FunctionRep {
        &self.g
    }

    /// Unshifted `(A, B)` on the window of size `n`, cached per size.
    pub fn matrices(&self, n: usize) -> Result<Arc<(BandMatrix, Option<BandMatrix>)>> {
        if let Some(hit) = self.cache.lock().unwrap().get(&n) {
            return Ok(hit.clone());
        }
        let a = assemble(&self.a_terms, n)?;
        let b = match &self.b_terms {
            Some(terms) => Some(assemble(terms, n)?),
            None => None,
        };
        let entry = Arc::new((a, b));
        self.cache.lock().unwrap().insert(n, entry.clone());
        Ok(entry)
    }
}

impl RealLineModel {
    /// Dense `A` and the normalized `f` on the window of size `n`, for
    /// comparison against eigendecomposition oracles. Operators only.
    pub fn dense_truncation(&self, n: usize) -> Result<(nalgebra::DMatrix<C64>, Vec<C64>)> {
        if self.b_terms.is_some() {
            return Err(Error::InvalidArgument("dense truncation is only defined for operators".into()));
        }
        let mats = self.matrices(n)?;
        let h = nalgebra::DMatrix::from_row_slice(n, n, &mats.0.to_dense());
        Ok((h, self.f.resized(n, 1).into_coeffs()))
    }
}

impl ResolventModel for RealLineModel {
    fn solve(&self, z: C64, n: usize) -> Result<(FunctionRep, C64)> {
        let mats = self.matrices(n)?;
        let system = ShiftedSystem::new(Basis::RealLine, (n, 1), &mats.0, mats.1.as_ref(), z)?;
        let g = self.g.resized(n, 1);
        let u = system.solve(&g)?;
        let phi = u.inner_product(&g)?;
        Ok((u, phi))
    }

    fn normalization_constant(&self) -> f64 {
        self.normalization
    }

    fn basis(&self) -> Basis {
        Basis::RealLine
    }

    fn is_pencil(&self) -> bool {
        self.b_terms.is_some()
    }
}
