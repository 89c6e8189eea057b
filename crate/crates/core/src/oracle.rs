//! Slow, independent reference computations.
//!
//! Nothing here touches the banded solvers: principal values come from
//! brute quadrature, finite-matrix measures from a dense eigendecomposition,
//! and Laplacian densities from Fourier transforms computed either by
//! quadrature or from the Laguerre form of the basis transforms.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::RationalKernel;
use crate::linalg::solve_dense;
use crate::rep::{wavenumber, Basis, FunctionRep};

type C64 = Complex64;

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GAUSS7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_WEIGHTS[7] * fc;
    let mut gauss = GAUSS7_WEIGHTS[3] * fc;
    for j in 0..7 {
        let pair = f(c - h * GK_NODES[j]) + f(c + h * GK_NODES[j]);
        kronrod += GK_WEIGHTS[j] * pair;
        if j % 2 == 1 {
            gauss += GAUSS7_WEIGHTS[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Estimate from adaptive quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

/// Globally adaptive Gauss–Kronrod (7, 15) on `[a, b]`; stops once the
/// summed error estimate is below `max(abs_tol, rel_tol |I|)`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Quadrature {
    let f = &f as &dyn Fn(f64) -> f64;
    let (value, error) = gk15(f, a, b);
    let mut heap = BinaryHeap::from([Panel { a, b, value, error }]);
    let (mut total, mut total_err) = (value, error);
    for _ in 0..20_000 {
        if total_err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (lv, le) = gk15(f, worst.a, mid);
        let (rv, re) = gk15(f, mid, worst.b);
        total += lv + rv - worst.value;
        total_err += le + re - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: lv, error: le });
        heap.push(Panel { a: mid, b: worst.b, value: rv, error: re });
    }
    // Re-sum to shed the drift of the running updates.
    let value = heap.iter().map(|p| p.value).sum();
    let error = heap.iter().map(|p| p.error).sum();
    Quadrature { value, error }
}

/// `∫_a^∞ f` through `s = a + t/(1 - t)`.
pub fn integrate_to_infinity(f: impl Fn(f64) -> f64, a: f64, abs_tol: f64, rel_tol: f64) -> Quadrature {
    integrate(
        |t| {
            let u = 1.0 - t;
            f(a + t / u) / (u * u)
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

/// `∫_{-∞}^{∞} f`.
pub fn integrate_real_line(f: impl Fn(f64) -> f64, abs_tol: f64, rel_tol: f64) -> Quadrature {
    let right = integrate_to_infinity(&f, 0.0, abs_tol / 2.0, rel_tol);
    let left = integrate_to_infinity(|s| f(-s), 0.0, abs_tol / 2.0, rel_tol);
    Quadrature {
        value: left.value + right.value,
        error: left.error + right.error,
    }
}

/// Symmetric rule for `(1/πi) p.v.∫ v(y)/(y - x) dy`.
///
/// Writing `y = x ± t` pairs the nodes around the singularity, and
/// `t = tan(φ/2)` maps the half-line to `φ ∈ [0, Φ)` with
/// `Φ = 2 atan(radius)`. The paired integrand
/// `(v(x+t) - v(x-t)) / t` is smooth at `t = 0`, so Gauss–Legendre in `φ`
/// converges rapidly; accuracy is judged by doubling `nodes`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PvQuadratureRule {
    /// Truncation radius; `f64::INFINITY` covers the whole line.
    pub radius: f64,
    /// Initial Gauss–Legendre node count.
    pub nodes: usize,
    pub max_nodes: usize,
    pub tol: f64,
}

impl Default for PvQuadratureRule {
    fn default() -> Self {
        Self {
            radius: f64::INFINITY,
            nodes: 64,
            max_nodes: 1 << 14,
            tol: 1e-12,
        }
    }
}

/// Principal value with its doubling error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PvEstimate {
    pub value: C64,
    /// `|I_2Q - I_Q|` at the last doubling.
    pub error: f64,
    pub nodes: usize,
    pub converged: bool,
}

fn pv_once(v: &dyn Fn(f64) -> C64, x: f64, phi_max: f64, q: usize) -> C64 {
    let (nodes, weights) = gauss_legendre(q);
    let mut acc = C64::new(0.0, 0.0);
    for (s, w) in nodes.iter().zip(&weights) {
        let phi = 0.5 * phi_max * (s + 1.0);
        let t = (0.5 * phi).tan();
        let dt = 0.5 * (1.0 + t * t);
        acc += (v(x + t) - v(x - t)) / t * dt * (0.5 * phi_max * w);
    }
    acc / C64::new(0.0, PI)
}

/// `(1/πi) p.v.∫ v(y)/(y - x) dy` by the symmetric rule, doubling the
/// node count until two estimates agree to `rule.tol`.
pub fn pv_cauchy(v: impl Fn(f64) -> C64, x: f64, rule: &PvQuadratureRule) -> PvEstimate {
    let phi_max = 2.0 * rule.radius.atan();
    let mut q = rule.nodes.max(2);
    let mut previous = pv_once(&v, x, phi_max, q);
    loop {
        let next = pv_once(&v, x, phi_max, 2 * q);
        let error = (next - previous).norm();
        q *= 2;
        if error <= rule.tol * next.norm().max(1.0) || 2 * q > rule.max_nodes {
            return PvEstimate {
                value: next,
                error,
                nodes: q,
                converged: error <= rule.tol * next.norm().max(1.0),
            };
        }
        previous = next;
    }
}

/// Eigenvalues `λ_k` of a Hermitian matrix and the weights `|⟨f, v_k⟩|²`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseSpectrum {
    pub eigenvalues: Vec<f64>,
    pub weights: Vec<f64>,
}

impl DenseSpectrum {
    /// `Σ_k w_k K_ε(x - λ_k)`.
    pub fn measure(&self, kernel: &RationalKernel, epsilon: f64, x: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (lambda, w) in self.eigenvalues.iter().zip(&self.weights) {
            acc += w * kernel.scaled(x - lambda, epsilon)?;
        }
        Ok(acc)
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn check_hermitian(h: &DMatrix<C64>) -> Result<()> {
    if h.nrows() != h.ncols() {
        return Err(Error::InvalidOperator("matrix is not square".into()));
    }
    let scale = h.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let defect = (h - h.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
    if defect > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidOperator(format!(
            "matrix is not Hermitian (defect {defect:.3e})"
        )));
    }
    Ok(())
}

/// Eigendecomposition of `h` with the spectral weights of `f`.
pub fn dense_spectrum(h: &DMatrix<C64>, f: &[C64]) -> Result<DenseSpectrum> {
    check_hermitian(h)?;
    if f.len() != h.nrows() {
        return Err(Error::InvalidArgument(format!(
            "vector of length {} for a {}x{} matrix",
            f.len(),
            h.nrows(),
            h.ncols()
        )));
    }
    let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let fvec = DVector::from_column_slice(f);
    let weights = (0..h.nrows())
        .map(|k| eig.eigenvectors.column(k).dotc(&fvec).norm_sqr())
        .collect();
    Ok(DenseSpectrum {
        eigenvalues: eig.eigenvalues.iter().copied().collect(),
        weights,
    })
}

/// `Σ_k |⟨f, v_k⟩|² K_ε(x - λ_k)` for Hermitian `h`.
pub fn dense_measure(
    h: &DMatrix<C64>,
    f: &[C64],
    kernel: &RationalKernel,
    epsilon: f64,
    x: f64,
) -> Result<f64> {
    dense_spectrum(h, f)?.measure(kernel, epsilon, x)
}

/// The same quantity by dense resolvent solves:
/// `-(1/π) Im Σ_j α_j f^*(H - (x - ε a_j))^{-1} f`.
pub fn dense_resolvent_measure(
    h: &DMatrix<C64>,
    f: &[C64],
    kernel: &RationalKernel,
    epsilon: f64,
    x: f64,
) -> Result<f64> {
    check_hermitian(h)?;
    let n = h.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for (a, alpha) in kernel.poles().iter().zip(kernel.residues()) {
        let z = x - epsilon * a;
        let mut m = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                m.push(h[(i, j)] - if i == j { z } else { C64::new(0.0, 0.0) });
            }
        }
        let u = solve_dense(m, f.to_vec())?;
        let phi: C64 = u.iter().zip(f).map(|(u, f)| u * f.conj()).sum();
        acc += alpha * phi;
    }
    Ok(-acc.im / PI)
}

/// Composite Gauss–Legendre rule for `f̂(ξ) = (2π)^{-1/2} ∫ f(x) e^{-ixξ} dx`
/// truncated to `[-radius, radius]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourierQuadrature {
    pub radius: f64,
    pub panel_width: f64,
    pub nodes_per_panel: usize,
}

impl Default for FourierQuadrature {
    fn default() -> Self {
        Self {
            radius: 1e4,
            panel_width: 0.5,
            nodes_per_panel: 16,
        }
    }
}

/// Unitary Fourier transform by composite quadrature.
pub fn fourier_transform(f: impl Fn(f64) -> C64, xi: f64, rule: &FourierQuadrature) -> C64 {
    let (nodes, weights) = gauss_legendre(rule.nodes_per_panel);
    let panels = (2.0 * rule.radius / rule.panel_width).ceil() as usize;
    let width = 2.0 * rule.radius / panels as f64;
    let half = 0.5 * width;
    let mut acc = C64::new(0.0, 0.0);
    for p in 0..panels {
        let center = -rule.radius + (p as f64 + 0.5) * width;
        let mut panel = C64::new(0.0, 0.0);
        for (s, w) in nodes.iter().zip(&weights) {
            let x = center + half * s;
            panel += f(x) * C64::from_polar(1.0, -x * xi) * *w;
        }
        acc += panel * half;
    }
    acc / (2.0 * PI).sqrt()
}

/// `ρ_f(λ) = (|f̂(√λ)|² + |f̂(-√λ)|²) / (2√λ)` for `-d²/dx²` on `L²(ℝ)`,
/// with `f̂` by quadrature.
pub fn laplacian_density(f: impl Fn(f64) -> C64, lambda: f64, rule: &FourierQuadrature) -> Result<f64> {
    let k = checked_root(lambda)?;
    let plus = fourier_transform(&f, k, rule).norm_sqr();
    let minus = fourier_transform(&f, -k, rule).norm_sqr();
    Ok((plus + minus) / (2.0 * k))
}

fn checked_root(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "density is defined for positive λ, got {lambda}"
        )));
    }
    Ok(lambda.sqrt())
}

/// Unitary Fourier transform of `Σ c_n ρ_n` in closed form:
/// `ρ̂_n(ξ) = √2 (-1)^n e^{-ξ} L_n(2ξ)` for `n ≥ 0`, `ξ > 0` (zero for
/// `ξ < 0`), and `ρ̂_n(ξ) = conj(ρ̂_{-1-n}(-ξ))` for `n < 0`.
pub fn realline_fourier_transform(rep: &FunctionRep, xi: f64) -> Result<C64> {
    if rep.basis() != Basis::RealLine {
        return Err(Error::BasisMismatch {
            left: Basis::RealLine.to_string(),
            right: rep.basis().to_string(),
        });
    }
    if xi == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let s = xi.abs();
    // Coefficients on the side of the spectrum that is non-zero, indexed by
    // the Laguerre degree.
    let n = rep.len();
    let mut degree_coeffs = vec![C64::new(0.0, 0.0); n];
    let mut top = 0;
    for i in 0..n {
        let k = wavenumber(n, i);
        let (deg, c) = match (xi > 0.0, k >= 0) {
            (true, true) => (k, rep.coeffs()[i]),
            (false, false) => (-1 - k, rep.coeffs()[i]),
            _ => continue,
        };
        degree_coeffs[deg as usize] = c;
        top = top.max(deg as usize + 1);
    }
    let t = 2.0 * s;
    let (mut l0, mut l1) = (1.0, 1.0 - t);
    let mut acc = C64::new(0.0, 0.0);
    for (deg, c) in degree_coeffs.iter().take(top).enumerate() {
        let l = match deg {
            0 => l0,
            1 => l1,
            _ => {
                let d = deg as f64;
                let l2 = ((2.0 * d - 1.0 - t) * l1 - (d - 1.0) * l0) / d;
                l0 = l1;
                l1 = l2;
                l2
            }
        };
        let sign = if deg % 2 == 0 { 1.0 } else { -1.0 };
        acc += c * (sign * l);
    }
    Ok(acc * (2f64.sqrt() * (-s).exp()))
}

/// [`laplacian_density`] through [`realline_fourier_transform`].
pub fn laplacian_density_from_rep(rep: &FunctionRep, lambda: f64) -> Result<f64> {
    let k = checked_root(lambda)?;
    let plus = realline_fourier_transform(rep, k)?.norm_sqr();
    let minus = realline_fourier_transform(rep, -k)?.norm_sqr();
    Ok((plus + minus) / (2.0 * k))
}

/// Density `ρ_f(λ) = β e^{-2β√λ}/√λ` of `f(x) = √(2/π) β^{3/2}/(β² + x²)`
/// under `-d²/dx²`.
pub fn lorentzian_laplacian_density(beta: f64, lambda: f64) -> Result<f64> {
    let k = checked_root(lambda)?;
    Ok(beta * (-2.0 * beta * k).exp() / k)
}

/// Unit-norm wave packet `A e^{-x²/(2σ²)} cos(k0 x)`.
pub fn wave_packet(sigma: f64, k0: f64, x: f64) -> f64 {
    wave_packet_amplitude(sigma, k0) * (-0.5 * (x / sigma).powi(2)).exp() * (k0 * x).cos()
}

fn wave_packet_amplitude(sigma: f64, k0: f64) -> f64 {
    (2.0 / (sigma * PI.sqrt() * (1.0 + (-(sigma * k0).powi(2)).exp()))).sqrt()
}

/// `ρ_f(λ) = |f̂(√λ)|²/√λ` for the [`wave_packet`], where
/// `f̂(ξ) = (Aσ/2)(e^{-σ²(ξ-k0)²/2} + e^{-σ²(ξ+k0)²/2})`.
pub fn wave_packet_laplacian_density(sigma: f64, k0: f64, lambda: f64) -> Result<f64> {
    let k = checked_root(lambda)?;
    let a = wave_packet_amplitude(sigma, k0);
    let g = |d: f64| (-0.5 * (sigma * d).powi(2)).exp();
    let fhat = 0.5 * a * sigma * (g(k - k0) + g(k + k0));
    Ok(fhat * fhat / k)
}

/// `(K_ε * ρ)(x) = ∫_0^∞ K_ε(x - λ) ρ(λ) dλ` for a density on `[0, ∞)`,
/// integrated in `s = √λ` so that `λ^{-1/2}` singularities become smooth;
/// `rho_ds(s) = 2s ρ(s²)`.
pub fn kernel_convolution(
    kernel: &RationalKernel,
    epsilon: f64,
    x: f64,
    rho_ds: impl Fn(f64) -> f64,
    tol: f64,
) -> Result<Quadrature> {
    kernel.scaled(0.0, epsilon)?;
    let integrand = |s: f64| kernel.value((x - s * s) / epsilon) / epsilon * rho_ds(s);
    // Break at the edges of the kernel's core so the peak is never straddled
    // by a coarse panel.
    let lo = (x - 20.0 * epsilon).max(0.0).sqrt();
    let hi = (x + 20.0 * epsilon).max(0.0).sqrt().max(lo);
    let pieces = [
        integrate(integrand, 0.0, lo, tol, tol),
        integrate(integrand, lo, hi, tol, tol),
        integrate_to_infinity(integrand, hi, tol, tol),
    ];
    Ok(Quadrature {
        value: pieces.iter().map(|p| p.value).sum(),
        error: pieces.iter().map(|p| p.error).sum(),
    })
}
