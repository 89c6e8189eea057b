//! Periodic Fourier discretization on `[-π, π]` and `[-π, π]²`.
//!
//! Coefficients use the normalized measure `dx/2π` (per dimension), so
//! `cos x = (e_1 + e_{-1})/2` and Parseval holds with the plain `ℓ²` sum.
//! Multiplication by a trigonometric coefficient is a banded convolution,
//! derivatives and symbols are diagonal. When no term couples different
//! `k_y`, the truncated matrix is block diagonal and each `k_y` block is
//! factored on its own.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::engine::ResolventModel;
use crate::error::{Error, Result};
use crate::linalg::BandMatrix;
use crate::realline::{check_shift, ShiftedSystem, HERMITIAN_TOLERANCE};
use crate::rep::{index_of, wavenumber, Basis, FunctionRep};

type C64 = Complex64;

const COEFFICIENT_TRUNCATION: f64 = 1e-14;
const MAX_COEFFICIENT_SAMPLES: usize = 1 << 10;

/// Equispaced nodes `2πj/n`.
pub fn f_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

/// Centered normalized coefficients of samples stored with `y` slowest.
fn fft_2d(mut samples: Vec<C64>, nx: usize, ny: usize) -> Vec<C64> {
    let mut planner = FftPlanner::new();
    let fx = planner.plan_fft_forward(nx);
    for row in samples.chunks_mut(nx) {
        fx.process(row);
    }
    if ny > 1 {
        let fy = planner.plan_fft_forward(ny);
        let mut column = vec![C64::new(0.0, 0.0); ny];
        for ix in 0..nx {
            for iy in 0..ny {
                column[iy] = samples[iy * nx + ix];
            }
            fy.process(&mut column);
            for iy in 0..ny {
                samples[iy * nx + ix] = column[iy];
            }
        }
    }
    let scale = 1.0 / (nx * ny) as f64;
    let mut out = vec![C64::new(0.0, 0.0); nx * ny];
    for iy in 0..ny {
        let ky = wavenumber(ny, iy).rem_euclid(ny as i64) as usize;
        for ix in 0..nx {
            let kx = wavenumber(nx, ix).rem_euclid(nx as i64) as usize;
            out[iy * nx + ix] = samples[ky * nx + kx] * scale;
        }
    }
    out
}

fn sample_2d(f: &dyn Fn(f64, f64) -> C64, nx: usize, ny: usize) -> Vec<C64> {
    let (xs, ys) = (f_grid(nx), f_grid(ny));
    ys.iter()
        .flat_map(|&y| xs.iter().map(move |&x| (x, y)))
        .map(|(x, y)| f(x, y))
        .collect()
}

/// Coefficients of a 1D periodic function at `n` wavenumbers.
pub fn f_analyze_1d(f: impl Fn(f64) -> C64, n: usize) -> FunctionRep {
    FunctionRep::new(Basis::Fourier1d, fft_2d(sample_2d(&|x, _| f(x), n, 1), n, 1))
}

/// Coefficients of a 2D periodic function on an `n × n` wavenumber grid.
pub fn f_analyze(f: impl Fn(f64, f64) -> C64, n: usize) -> FunctionRep {
    FunctionRep::new_2d(n, n, fft_2d(sample_2d(&f, n, n), n, n))
}

/// Doubles `n` until the representation is resolved or `n_max` is reached.
pub fn f_analyze_adaptive(f: impl Fn(f64, f64) -> C64, basis: Basis, n0: usize, n_max: usize) -> FunctionRep {
    let mut n = n0.max(4);
    loop {
        let rep = match basis {
            Basis::Fourier2d => f_analyze(&f, n),
            _ => f_analyze_1d(|x| f(x, 0.0), n),
        };
        if rep.resolved() || n >= n_max {
            return rep;
        }
        n *= 2;
    }
}

/// Pointwise values of a 1D or 2D Fourier representation.
pub fn f_synthesize(rep: &FunctionRep, points: &[(f64, f64)]) -> Vec<C64> {
    let (nx, ny) = rep.shape();
    points
        .iter()
        .map(|&(x, y)| {
            let mut acc = C64::new(0.0, 0.0);
            for iy in 0..ny {
                let ky = if ny == 1 { 0 } else { wavenumber(ny, iy) };
                for ix in 0..nx {
                    let phase = wavenumber(nx, ix) as f64 * x + ky as f64 * y;
                    acc += rep.coeffs()[iy * nx + ix] * C64::from_polar(1.0, phase);
                }
            }
            acc
        })
        .collect()
}

/// Parseval inner product of two Fourier representations.
pub fn f_inner_product(u: &FunctionRep, v: &FunctionRep) -> Result<C64> {
    for rep in [u, v] {
        if rep.basis() == Basis::RealLine {
            return Err(Error::BasisMismatch {
                left: "fourier".into(),
                right: rep.basis().to_string(),
            });
        }
    }
    u.inner_product(v)
}

/// Real trigonometric coefficient `c(x, y) = Σ ĉ_{kx,ky} e^{i(kx x + ky y)}`
/// with `|kx| ≤ bx`, `|ky| ≤ by`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierCoefficient {
    bx: usize,
    by: usize,
    /// `(ky + by) * (2bx + 1) + (kx + bx)`.
    symbol: Vec<C64>,
}

impl FourierCoefficient {
    pub fn constant(c: f64) -> Self {
        Self {
            bx: 0,
            by: 0,
            symbol: vec![C64::new(c, 0.0)],
        }
    }

    /// Samples on refining grids until the coefficients are resolved, then
    /// truncates at relative level `1e-14`.
    pub fn from_fn(c: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let f = |x: f64, y: f64| C64::new(c(x, y), 0.0);
        let mut n = 16;
        let coeffs = loop {
            let samples = sample_2d(&f, n, n);
            if samples.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("coefficient is not finite on the torus".into()));
            }
            let coeffs = fft_2d(samples, n, n);
            let rep = FunctionRep::new_2d(n, n, coeffs.clone());
            let peak = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let tail = (0..n * n)
                .filter(|i| {
                    let (kx, ky) = (wavenumber(n, i % n), wavenumber(n, i / n));
                    kx.unsigned_abs() as usize >= n / 4 || ky.unsigned_abs() as usize >= n / 4
                })
                .map(|i| coeffs[i].norm())
                .fold(0.0, f64::max);
            if (rep.resolved() && tail <= 0.1 * COEFFICIENT_TRUNCATION * peak) || n >= MAX_COEFFICIENT_SAMPLES {
                break (n, coeffs);
            }
            n *= 2;
        };
        let (n, coeffs) = coeffs;
        let peak = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let (mut bx, mut by) = (0usize, 0usize);
        for (i, c) in coeffs.iter().enumerate() {
            if c.norm() > COEFFICIENT_TRUNCATION * peak {
                bx = bx.max(wavenumber(n, i % n).unsigned_abs() as usize);
                by = by.max(wavenumber(n, i / n).unsigned_abs() as usize);
            }
        }
        let (bx, by) = (bx.min(n / 2 - 1), by.min(n / 2 - 1));
        let mut symbol = Vec::with_capacity((2 * bx + 1) * (2 * by + 1));
        for ky in -(by as i64)..=by as i64 {
            for kx in -(bx as i64)..=bx as i64 {
                let plus = coeffs[index_of(n, ky) * n + index_of(n, kx)];
                let minus = coeffs[index_of(n, -ky) * n + index_of(n, -kx)];
                symbol.push((plus + minus.conj()) * 0.5);
            }
        }
        Ok(Self { bx, by, symbol })
    }

    pub fn from_fn_1d(c: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(|x, _| c(x))
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.bx, self.by)
    }

    /// `ĉ_{kx,ky}`, zero outside the band.
    pub fn coefficient(&self, kx: i64, ky: i64) -> C64 {
        if kx.unsigned_abs() as usize > self.bx || ky.unsigned_abs() as usize > self.by {
            return C64::new(0.0, 0.0);
        }
        let row = 2 * self.bx + 1;
        self.symbol[(ky + self.by as i64) as usize * row + (kx + self.bx as i64) as usize]
    }
}

/// Real diagonal symbol `b(k_x, k_y)`.
#[derive(Clone)]
pub struct Symbol {
    label: String,
    b: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl Symbol {
    pub fn new(label: impl Into<String>, b: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            b: Arc::new(b),
        }
    }

    /// `(1 - ∂_y²)^{1/2}`, i.e. `b = (1 + k_y²)^{1/2}`.
    pub fn bessel_y() -> Self {
        Self::new("(1 + ky^2)^(1/2)", |_, ky| (1.0 + ky * ky).sqrt())
    }

    pub fn eval(&self, kx: i64, ky: i64) -> f64 {
        (self.b)(kx as f64, ky as f64)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Symbol({})", self.label)
    }
}

/// One summand of a periodic operator.
#[derive(Clone, Debug)]
pub enum FourierTerm {
    /// `scale · c(x, y) · ∂_x^dx ∂_y^dy`.
    Differential {
        coefficient: FourierCoefficient,
        dx: u32,
        dy: u32,
        scale: C64,
    },
    Symbol(Symbol),
}

impl FourierTerm {
    /// `scale · ∂_x^dx ∂_y^dy` with constant coefficient one.
    pub fn derivative(dx: u32, dy: u32, scale: C64) -> Self {
        FourierTerm::Differential {
            coefficient: FourierCoefficient::constant(1.0),
            dx,
            dy,
            scale,
        }
    }

    fn couples_ky(&self) -> bool {
        matches!(self, FourierTerm::Differential { coefficient, .. } if coefficient.by > 0)
    }

    fn bandwidths(&self) -> (usize, usize) {
        match self {
            FourierTerm::Differential { coefficient, .. } => (coefficient.bx, coefficient.by),
            FourierTerm::Symbol(_) => (0, 0),
        }
    }

    /// Entry between wavenumbers `(kx, ky)` (row) and `(lx, ly)` (column).
    fn entry(&self, kx: i64, ky: i64, lx: i64, ly: i64) -> C64 {
        match self {
            FourierTerm::Differential {
                coefficient,
                dx,
                dy,
                scale,
            } => {
                let c = coefficient.coefficient(kx - lx, ky - ly);
                if c == C64::new(0.0, 0.0) {
                    return c;
                }
                let d = C64::new(0.0, lx as f64).powu(*dx) * C64::new(0.0, ly as f64).powu(*dy);
                scale * c * d
            }
            FourierTerm::Symbol(s) => {
                if kx == lx && ky == ly {
                    C64::new(s.eval(kx, ky), 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }
        }
    }

    /// Diagonal value, or `None` if the term is not diagonal.
    fn diagonal(&self, kx: i64, ky: i64) -> Option<C64> {
        match self.bandwidths() {
            (0, 0) => Some(self.entry(kx, ky, kx, ky)),
            _ => None,
        }
    }
}

/// `b(k)` of a diagonal operator; errors unless every term is diagonal and
/// the total is real and positive on the window.
fn positive_symbol(terms: &[FourierTerm], nx: usize, ny: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        let ky = if ny == 1 { 0 } else { wavenumber(ny, iy) };
        for ix in 0..nx {
            let kx = wavenumber(nx, ix);
            let mut b = C64::new(0.0, 0.0);
            for t in terms {
                b += t
                    .diagonal(kx, ky)
                    .ok_or_else(|| Error::InvalidPencil("B must be diagonal in the Fourier basis".into()))?;
            }
            if b.im.abs() > 1e-14 * b.norm() || !(b.re > 0.0) {
                return Err(Error::InvalidPencil(format!(
                    "B symbol is not positive at (kx, ky) = ({kx}, {ky}): {b}"
                )));
            }
            out.push(b.re);
        }
    }
    Ok(out)
}

/// `g = Bf` for a diagonal positive `B`.
pub fn f_apply_b(b_terms: &[FourierTerm], f: &FunctionRep) -> Result<FunctionRep> {
    let (nx, ny) = f.shape();
    let b = positive_symbol(b_terms, nx, ny)?;
    let coeffs = f.coeffs().iter().zip(&b).map(|(c, b)| c * b).collect();
    Ok(match f.basis() {
        Basis::Fourier2d => FunctionRep::new_2d(nx, ny, coeffs),
        basis => FunctionRep::new(basis, coeffs),
    })
}

fn ky_of(ny: usize, iy: usize) -> i64 {
    if ny == 1 {
        0
    } else {
        wavenumber(ny, iy)
    }
}

/// The `k_y` block of `Σ terms` (rows and columns over `k_x`).
fn block(terms: &[FourierTerm], nx: usize, ky: i64) -> BandMatrix {
    let bx = terms.iter().map(|t| t.bandwidths().0).max().unwrap_or(0).min(nx - 1);
    let mut m = BandMatrix::zeros(nx, bx, bx);
    for i in 0..nx {
        let kx = wavenumber(nx, i);
        for j in i.saturating_sub(bx)..(i + bx + 1).min(nx) {
            let lx = wavenumber(nx, j);
            let v: C64 = terms.iter().map(|t| t.entry(kx, ky, lx, ky)).sum();
            m.set(i, j, v);
        }
    }
    m
}

/// Full matrix on the `nx × ny` window, storage order `y` slowest.
fn full_matrix(terms: &[FourierTerm], nx: usize, ny: usize) -> BandMatrix {
    let (bx, by) = terms.iter().fold((0, 0), |(a, b), t| {
        let (x, y) = t.bandwidths();
        (a.max(x), b.max(y))
    });
    let width = (by * nx + bx).min(nx * ny - 1);
    let mut m = BandMatrix::zeros(nx * ny, width, width);
    for iy in 0..ny {
        let ky = ky_of(ny, iy);
        for jy in iy.saturating_sub(by)..(iy + by + 1).min(ny) {
            let ly = ky_of(ny, jy);
            for ix in 0..nx {
                let kx = wavenumber(nx, ix);
                for jx in ix.saturating_sub(bx)..(ix + bx + 1).min(nx) {
                    let lx = wavenumber(nx, jx);
                    let v: C64 = terms.iter().map(|t| t.entry(kx, ky, lx, ly)).sum();
                    if v != C64::new(0.0, 0.0) {
                        m.set(iy * nx + ix, jy * nx + jx, v);
                    }
                }
            }
        }
    }
    m
}

/// Unshifted blocks of `A` (one per `k_y` when decoupled, else one).
fn assemble_blocks(terms: &[FourierTerm], nx: usize, ny: usize) -> Result<Vec<BandMatrix>> {
    if terms.is_empty() {
        return Err(Error::InvalidOperator("operator has no terms".into()));
    }
    let blocks = if terms.iter().any(|t| t.couples_ky()) {
        vec![full_matrix(terms, nx, ny)]
    } else {
        (0..ny).map(|iy| block(terms, nx, ky_of(ny, iy))).collect()
    };
    let scale = blocks.iter().map(|b| b.max_abs()).fold(0.0, f64::max);
    for b in &blocks {
        let defect = b.hermitian_defect() * b.max_abs() / scale.max(f64::MIN_POSITIVE);
        if defect > HERMITIAN_TOLERANCE {
            return Err(Error::InvalidOperator(format!(
                "assembled matrix is not Hermitian (relative defect {defect:.3e})"
            )));
        }
    }
    Ok(blocks)
}

fn shape_for(basis: Basis, n: usize) -> (usize, usize) {
    match basis {
        Basis::Fourier2d => (n, n),
        _ => (n, 1),
    }
}

/// Assembles and factors `A - zB` (`B = I` when `b_terms` is empty) on the
/// truncation `n` per dimension.
pub fn f_assemble_pencil_shifted(
    basis: Basis,
    a_terms: &[FourierTerm],
    b_terms: &[FourierTerm],
    z: C64,
    n: usize,
) -> Result<ShiftedSystem> {
    check_shift(z)?;
    let (nx, ny) = shape_for(basis, n);
    let blocks = assemble_blocks(a_terms, nx, ny)?;
    let b = if b_terms.is_empty() {
        vec![1.0; nx * ny]
    } else {
        positive_symbol(b_terms, nx, ny)?
    };
    ShiftedSystem::from_blocks(basis, (nx, ny), shift_blocks(blocks, &b, z), z)
}

fn shift_blocks(blocks: Vec<BandMatrix>, b: &[f64], z: C64) -> Vec<BandMatrix> {
    let mut offset = 0;
    blocks
        .into_iter()
        .map(|mut m| {
            for i in 0..m.dim() {
                m.add_at(i, i, -z * b[offset + i]);
            }
            offset += m.dim();
            m
        })
        .collect()
}

type Assembled = Arc<(Vec<BandMatrix>, Vec<f64>)>;

/// Periodic operator or pencil with a normalized vector `f`.
#[derive(Debug)]
pub struct FourierModel {
    basis: Basis,
    a_terms: Vec<FourierTerm>,
    b_terms: Vec<FourierTerm>,
    f: FunctionRep,
    normalization: f64,
    cache: Mutex<HashMap<usize, Assembled>>,
}

impl FourierModel {
    pub fn operator(a_terms: Vec<FourierTerm>, f: FunctionRep) -> Result<Self> {
        Self::build(a_terms, Vec::new(), f)
    }

    /// Pencil with diagonal positive `B`; `f` is scaled so `⟨Bf, f⟩ = 1`.
    pub fn pencil(a_terms: Vec<FourierTerm>, b_terms: Vec<FourierTerm>, f: FunctionRep) -> Result<Self> {
        if b_terms.is_empty() {
            return Err(Error::InvalidPencil("B has no terms".into()));
        }
        Self::build(a_terms, b_terms, f)
    }

    fn build(a_terms: Vec<FourierTerm>, b_terms: Vec<FourierTerm>, f: FunctionRep) -> Result<Self> {
        let basis = f.basis();
        if basis == Basis::RealLine {
            return Err(Error::BasisMismatch {
                left: "fourier".into(),
                right: basis.to_string(),
            });
        }
        let (nx, ny) = f.shape();
        assemble_blocks(&a_terms, 8, if basis == Basis::Fourier2d { 8 } else { 1 })?;
        let weight = if b_terms.is_empty() {
            f.norm().powi(2)
        } else {
            f_apply_b(&b_terms, &f)?.inner_product(&f)?.re
        };
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "f has non-positive norm {weight} and cannot be normalized"
            )));
        }
        debug_assert_eq!(f.len(), nx * ny);
        let c = 1.0 / weight.sqrt();
        Ok(Self {
            basis,
            a_terms,
            b_terms,
            f: f.scaled(C64::new(c, 0.0)),
            normalization: c,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn f(&self) -> &FunctionRep {
        &self.f
    }

    /// `Bf` at truncation `n`.
    pub fn g(&self, n: usize) -> Result<FunctionRep> {
        let (nx, ny) = shape_for(self.basis, n);
        let f = self.f.resized(nx, ny);
        if self.b_terms.is_empty() {
            Ok(f)
        } else {
            f_apply_b(&self.b_terms, &f)
        }
    }

    /// Weight `⟨P f, f⟩_B` of the `k_y = 0` modes of the normalized `f`.
    pub fn ky_zero_weight(&self) -> Result<f64> {
        let (nx, ny) = self.f.shape();
        let g = f_apply_b_or_identity(&self.b_terms, &self.f)?;
        let mut w = 0.0;
        for iy in 0..ny {
            if ky_of(ny, iy) == 0 {
                for ix in 0..nx {
                    w += (g.coeffs()[iy * nx + ix] * self.f.coeffs()[iy * nx + ix].conj()).re;
                }
            }
        }
        Ok(w)
    }

    fn assembled(&self, n: usize) -> Result<Assembled> {
        if let Some(hit) = self.cache.lock().unwrap().get(&n) {
            return Ok(hit.clone());
        }
        let (nx, ny) = shape_for(self.basis, n);
        let blocks = assemble_blocks(&self.a_terms, nx, ny)?;
        let b = if self.b_terms.is_empty() {
            vec![1.0; nx * ny]
        } else {
            positive_symbol(&self.b_terms, nx, ny)?
        };
        let entry = Arc::new((blocks, b));
        self.cache.lock().unwrap().insert(n, entry.clone());
        Ok(entry)
    }
}

fn f_apply_b_or_identity(b_terms: &[FourierTerm], f: &FunctionRep) -> Result<FunctionRep> {
    if b_terms.is_empty() {
        Ok(f.clone())
    } else {
        f_apply_b(b_terms, f)
    }
}

impl ResolventModel for FourierModel {
    fn solve(&self, z: C64, n: usize) -> Result<(FunctionRep, C64)> {
        check_shift(z)?;
        let assembled = self.assembled(n)?;
        let shape = shape_for(self.basis, n);
        let system = ShiftedSystem::from_blocks(
            self.basis,
            shape,
            shift_blocks(assembled.0.clone(), &assembled.1, z),
            z,
        )?;
        let g = self.g(n)?;
        let u = system.solve(&g)?;
        let phi = u.inner_product(&g)?;
        Ok((u, phi))
    }

    fn normalization_constant(&self) -> f64 {
        self.normalization
    }

    fn basis(&self) -> Basis {
        self.basis
    }

    fn is_pencil(&self) -> bool {
        !self.b_terms.is_empty()
    }
}

/// `A = -i(1 + cos(x)/2) ∂_y`.
pub fn internal_waves_a() -> Result<Vec<FourierTerm>> {
    Ok(vec![FourierTerm::Differential {
        coefficient: FourierCoefficient::from_fn_1d(|x| 1.0 + 0.5 * x.cos())?,
        dx: 0,
        dy: 1,
        scale: C64::new(0.0, -1.0),
    }])
}

/// `B = (1 - ∂_y²)^{1/2}`.
pub fn internal_waves_b() -> Vec<FourierTerm> {
    vec![FourierTerm::Symbol(Symbol::bessel_y())]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn analyze_simple_functions() {
        let c = f_analyze_1d(|x| C64::new(x.cos(), 0.0), 16);
        for i in 0..16 {
            let expect = if wavenumber(16, i).abs() == 1 { 0.5 } else { 0.0 };
            assert!(close(c.coeffs()[i], C64::new(expect, 0.0), 1e-15));
        }
        let one = f_analyze(|_, _| C64::new(1.0, 0.0), 8);
        assert!(close(one.coeff_2d(0, 0), C64::new(1.0, 0.0), 1e-15));
        assert!((one.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn internal_waves_vector_is_conjugate_symmetric_and_round_trips() {
        let f = |x: f64, y: f64| C64::new((x + y).sin().exp() / (2.0 + y.cos()), 0.0);
        let rep = f_analyze_adaptive(f, Basis::Fourier2d, 16, 256);
        assert!(rep.resolved());
        let n = rep.shape().0 as i64;
        for ky in -n / 2 + 1..n / 2 {
            for kx in -n / 2 + 1..n / 2 {
                assert!(close(rep.coeff_2d(kx, ky), rep.coeff_2d(-kx, -ky).conj(), 1e-13));
            }
        }
        for (x, y) in [(0.3, -1.0), (2.0, 0.5)] {
            assert!(close(f_synthesize(&rep, &[(x, y)])[0], f(x, y), 1e-12));
        }
    }

    #[test]
    fn bessel_symbol_on_modes() {
        let b = internal_waves_b();
        let n = 8;
        let e = FunctionRep::new_2d(n, n, {
            let mut c = vec![C64::new(0.0, 0.0); n * n];
            c[index_of(n, 1) * n + index_of(n, 0)] = C64::new(1.0, 0.0);
            c
        });
        let g = f_apply_b(&b, &e).unwrap();
        assert!(close(g.coeff_2d(0, 1), C64::new(2f64.sqrt(), 0.0), 1e-15));
        let e0 = FunctionRep::unit(Basis::Fourier1d, 8, 0);
        assert_eq!(f_apply_b(&b, &e0).unwrap(), e0);
        let identity = vec![FourierTerm::Symbol(Symbol::new("1", |_, _| 1.0))];
        assert_eq!(f_apply_b(&identity, &e).unwrap(), e);
        let symbol = positive_symbol(&b, 16, 16).unwrap();
        assert!(symbol.iter().all(|&v| v >= 1.0));
    }

    #[test]
    fn constant_coefficient_block() {
        let a = vec![FourierTerm::derivative(0, 1, C64::new(0.0, -1.0))];
        let z = C64::new(0.0, -0.5);
        let sys = f_assemble_pencil_shifted(Basis::Fourier2d, &a, &[], z, 8).unwrap();
        for (iy, block) in sys.blocks().enumerate() {
            let ky = wavenumber(8, iy) as f64;
            for i in 0..8 {
                assert!(close(block.get(i, i), C64::new(ky, 0.5), 1e-15));
            }
        }
    }

    #[test]
    fn internal_waves_blocks_are_tridiagonal() {
        let a = internal_waves_a().unwrap();
        let b = internal_waves_b();
        let z = C64::new(0.2, -0.1);
        let n = 16;
        let sys = f_assemble_pencil_shifted(Basis::Fourier2d, &a, &b, z, n).unwrap();
        for (iy, block) in sys.blocks().enumerate() {
            let ky = wavenumber(n, iy) as f64;
            let diag = C64::new(ky, 0.0) - z * (1.0 + ky * ky).sqrt();
            assert_eq!(block.trimmed().lower(), usize::from(ky != 0.0));
            for i in 0..n {
                assert!(close(block.get(i, i), diag, 1e-14));
                if i + 1 < n {
                    assert!(close(block.get(i, i + 1), C64::new(ky / 4.0, 0.0), 1e-14));
                    assert!(close(block.get(i + 1, i), C64::new(ky / 4.0, 0.0), 1e-14));
                }
            }
        }
    }

    #[test]
    fn pencil_with_a_equal_b() {
        let b = internal_waves_b();
        let z = C64::new(0.3, -0.2);
        let n = 8;
        let sys = f_assemble_pencil_shifted(Basis::Fourier2d, &b, &b, z, n).unwrap();
        let rhs = f_analyze(|x, y| C64::new((x - 2.0 * y).cos(), (x + y).sin()), n);
        let u = sys.solve(&rhs).unwrap();
        let bvals = positive_symbol(&b, n, n).unwrap();
        for ((u, r), b) in u.coeffs().iter().zip(rhs.coeffs()).zip(&bvals) {
            assert!(close(*u, r / ((1.0 - z) * b), 1e-13));
        }
    }

    #[test]
    fn block_and_full_solves_agree() {
        let a = internal_waves_a().unwrap();
        let b = internal_waves_b();
        let n = 16;
        let z = C64::new(0.1, -0.05);
        let blocks = f_assemble_pencil_shifted(Basis::Fourier2d, &a, &b, z, n).unwrap();
        let full = ShiftedSystem::from_blocks(
            Basis::Fourier2d,
            (n, n),
            shift_blocks(vec![full_matrix(&a, n, n)], &positive_symbol(&b, n, n).unwrap(), z),
            z,
        )
        .unwrap();
        let mut state = 7u64;
        let rhs: Vec<C64> = (0..n * n)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                C64::new((state >> 40) as f64 / 16777216.0 - 0.5, (state >> 20 & 0xfffff) as f64 / 1048576.0 - 0.5)
            })
            .collect();
        let rhs = FunctionRep::new_2d(n, n, rhs);
        let u1 = blocks.solve(&rhs).unwrap();
        let u2 = full.solve(&rhs).unwrap();
        for (a, b) in u1.coeffs().iter().zip(u2.coeffs()) {
            assert!(close(*a, *b, 1e-13));
        }
    }

    #[test]
    fn blocks_are_hermitian_and_bad_pencils_fail() {
        let a = internal_waves_a().unwrap();
        for block in assemble_blocks(&a, 16, 16).unwrap() {
            assert!(block.hermitian_defect() <= 1e-12);
        }
        let negative = vec![FourierTerm::Symbol(Symbol::new("-1", |_, _| -1.0))];
        assert!(matches!(
            f_assemble_pencil_shifted(Basis::Fourier2d, &a, &negative, C64::new(0.0, -1.0), 8),
            Err(Error::InvalidPencil(_))
        ));
        assert!(matches!(
            f_assemble_pencil_shifted(Basis::Fourier2d, &a, &[], C64::new(1.0, 0.0), 8),
            Err(Error::ShiftOnRealAxis { .. })
        ));
        // ∂_y alone is skew-Hermitian.
        let skew = vec![FourierTerm::derivative(0, 1, C64::new(1.0, 0.0))];
        assert!(matches!(assemble_blocks(&skew, 8, 8), Err(Error::InvalidOperator(_))));
    }

    #[test]
    fn normalization_gives_unit_b_norm() {
        let f = f_analyze_adaptive(
            |x, y| C64::new((x + y).sin().exp() / (2.0 + y.cos()), 0.0),
            Basis::Fourier2d,
            16,
            256,
        );
        let model = FourierModel::pencil(internal_waves_a().unwrap(), internal_waves_b(), f).unwrap();
        let n = model.f().shape().0;
        let g = model.g(n).unwrap();
        assert!((f_inner_product(&g, model.f()).unwrap().re - 1.0).abs() < 1e-13);
        let w = model.ky_zero_weight().unwrap();
        assert!(w > 0.0 && w < 1.0);
    }
}
