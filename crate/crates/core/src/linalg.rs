//! Complex banded matrices and their LU factorization.
//!
//! Every truncated operator in this crate is banded (multiplication by a
//! trigonometric symbol, the three-term derivative, the diagonal Hilbert
//! signature), so a single band format carries all shifted systems.

use num_complex::Complex64;

use crate::error::{Error, Result};

type C64 = Complex64;

/// Square complex matrix with `lower` sub-diagonals and `upper` super-diagonals.
#[derive(Clone, Debug, PartialEq)]
pub struct BandMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    /// Row `i` holds columns `i - lower ..= i + upper`.
    data: Vec<C64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        Self {
            n,
            lower,
            upper,
            data: vec![C64::new(0.0, 0.0); n * (lower + upper + 1)],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![C64::new(1.0, 0.0); n])
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        Self {
            n: diag.len(),
            lower: 0,
            upper: 0,
            data: diag.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower(&self) -> usize {
        self.lower
    }

    pub fn upper(&self) -> usize {
        self.upper
    }

    fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    #[inline]
    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.lower >= i && j <= i + self.upper
    }

    /// Entry `(i, j)`; zero outside the band.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        if i >= self.n || j >= self.n || !self.in_band(i, j) {
            return C64::new(0.0, 0.0);
        }
        self.data[i * self.width() + (j + self.lower - i)]
    }

    /// Sets entry `(i, j)`. Panics if `(i, j)` lies outside the band.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let w = self.width();
        self.data[i * w + (j + self.lower - i)] = value;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, value: C64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let w = self.width();
        self.data[i * w + (j + self.lower - i)] += value;
    }

    /// Column range stored in row `i`.
    #[inline]
    fn row_cols(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.lower)..(i + self.upper + 1).min(self.n)
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| self.row_cols(i).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// `self * other`, with the bandwidths adding.
    pub fn mul(&self, other: &BandMatrix) -> BandMatrix {
        assert_eq!(self.n, other.n);
        let mut out = BandMatrix::zeros(
            self.n,
            (self.lower + other.lower).min(self.n.saturating_sub(1)),
            (self.upper + other.upper).min(self.n.saturating_sub(1)),
        );
        for i in 0..self.n {
            for k in self.row_cols(i) {
                let a = self.get(i, k);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in other.row_cols(k) {
                    out.add_at(i, j, a * other.get(k, j));
                }
            }
        }
        out
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, other: &BandMatrix, scale: C64) -> BandMatrix {
        assert_eq!(self.n, other.n);
        let mut out = BandMatrix::zeros(
            self.n,
            self.lower.max(other.lower),
            self.upper.max(other.upper),
        );
        for i in 0..self.n {
            for j in self.row_cols(i) {
                out.add_at(i, j, self.get(i, j));
            }
            for j in other.row_cols(i) {
                out.add_at(i, j, scale * other.get(i, j));
            }
        }
        out
    }

    pub fn scaled(&self, scale: C64) -> BandMatrix {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= scale);
        out
    }

    pub fn adjoint(&self) -> BandMatrix {
        let mut out = BandMatrix::zeros(self.n, self.upper, self.lower);
        for i in 0..self.n {
            for j in self.row_cols(i) {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    /// Principal submatrix on rows/columns `offset .. offset + size`.
    pub fn window(&self, offset: usize, size: usize) -> BandMatrix {
        assert!(offset + size <= self.n);
        let lower = self.lower.min(size.saturating_sub(1));
        let upper = self.upper.min(size.saturating_sub(1));
        let mut out = BandMatrix::zeros(size, lower, upper);
        for i in 0..size {
            for j in out.row_cols(i) {
                out.set(i, j, self.get(offset + i, offset + j));
            }
        }
        out
    }

    /// Drops outer diagonals that are identically zero.
    pub fn trimmed(&self) -> BandMatrix {
        let zero = C64::new(0.0, 0.0);
        let diag_nonzero = |d: isize| {
            (0..self.n).any(|i| {
                let j = i as isize + d;
                j >= 0 && (j as usize) < self.n && self.get(i, j as usize) != zero
            })
        };
        let mut lower = self.lower;
        while lower > 0 && !diag_nonzero(-(lower as isize)) {
            lower -= 1;
        }
        let mut upper = self.upper;
        while upper > 0 && !diag_nonzero(upper as isize) {
            upper -= 1;
        }
        if lower == self.lower && upper == self.upper {
            return self.clone();
        }
        let mut out = BandMatrix::zeros(self.n, lower, upper);
        for i in 0..self.n {
            for j in out.row_cols(i) {
                out.set(i, j, self.get(i, j));
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max |a_ij - conj(a_ji)| / max |a_ij|` (zero for the zero matrix).
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in self.row_cols(i) {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst / scale
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.n * self.n];
        for i in 0..self.n {
            for j in self.row_cols(i) {
                out[i * self.n + j] = self.get(i, j);
            }
        }
        out
    }

    pub fn factor(&self) -> Result<BandLu> {
        BandLu::new(self)
    }

    /// `b - self * x` with error-free products and compensated sums; used
    /// for iterative refinement where the plain residual is all round-off.
    pub fn residual_compensated(&self, x: &[C64], b: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let mut re = Compensated::new(b[i].re);
                let mut im = Compensated::new(b[i].im);
                for j in self.row_cols(i) {
                    let (a, v) = (self.get(i, j), x[j]);
                    re.sub_product(a.re, v.re);
                    re.sub_product(-a.im, v.im);
                    im.sub_product(a.re, v.im);
                    im.sub_product(a.im, v.re);
                }
                C64::new(re.value(), im.value())
            })
            .collect()
    }

    /// Banded Cholesky attempt on the Hermitian part; true iff every pivot
    /// is positive.
    pub fn is_positive_definite(&self) -> bool {
        let b = self.lower.max(self.upper);
        let n = self.n;
        // l[i][k] for k in i-b..=i, stored at i*(b+1) + (k + b - i).
        let mut l = vec![C64::new(0.0, 0.0); n * (b + 1)];
        let at = |i: usize, k: usize| i * (b + 1) + (k + b - i);
        for i in 0..n {
            for k in i.saturating_sub(b)..=i {
                let h = (self.get(i, k) + self.get(k, i).conj()) * 0.5;
                let mut s = h;
                for j in i.saturating_sub(b).max(k.saturating_sub(b))..k {
                    s -= l[at(i, j)] * l[at(k, j)].conj();
                }
                if k == i {
                    if !(s.re > 0.0) {
                        return false;
                    }
                    l[at(i, i)] = C64::new(s.re.sqrt(), 0.0);
                } else {
                    l[at(i, k)] = s / l[at(k, k)].re;
                }
            }
        }
        true
    }
}

/// Neumaier sum with exact product error terms.
struct Compensated {
    sum: f64,
    err: f64,
}

impl Compensated {
    fn new(v: f64) -> Self {
        Self { sum: v, err: 0.0 }
    }

    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        self.err += if self.sum.abs() >= v.abs() {
            (self.sum - t) + v
        } else {
            (v - t) + self.sum
        };
        self.sum = t;
    }

    fn sub_product(&mut self, x: f64, y: f64) {
        let p = x * y;
        self.add(-p);
        self.err -= x.mul_add(y, -p);
    }

    fn value(&self) -> f64 {
        self.sum + self.err
    }
}

/// LU factorization with partial pivoting in band storage.
///
/// Row pivoting widens the upper band of `U` to `lower + upper`; the
/// multipliers are kept unpermuted, so the forward solve interleaves the
/// row swaps with elimination.
#[derive(Clone, Debug)]
pub struct BandLu {
    n: usize,
    lower: usize,
    upper: usize,
    /// Row `i` holds columns `i - lower ..= i + lower + upper`.
    data: Vec<C64>,
    pivots: Vec<usize>,
}

impl BandLu {
    fn new(a: &BandMatrix) -> Result<Self> {
        let n = a.n;
        let lower = a.lower;
        let upper_u = a.lower + a.upper;
        let width = lower + upper_u + 1;
        let idx = |i: usize, j: usize| i * width + (j + lower - i);
        let mut data = vec![C64::new(0.0, 0.0); n * width];
        for i in 0..n {
            for j in a.row_cols(i) {
                data[idx(i, j)] = a.get(i, j);
            }
        }
        let mut pivots = vec![0; n];
        for k in 0..n {
            let last_row = (k + lower).min(n - 1);
            let last_col = (k + upper_u).min(n - 1);
            let mut p = k;
            let mut best = data[idx(k, k)].norm();
            for i in k + 1..=last_row {
                let v = data[idx(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::NearSpectrum { n });
            }
            pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    data.swap(idx(k, j), idx(p, j));
                }
            }
            let pivot = data[idx(k, k)];
            for i in k + 1..=last_row {
                let l = data[idx(i, k)] / pivot;
                data[idx(i, k)] = l;
                if l == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in k + 1..=last_col {
                    let u = data[idx(k, j)];
                    data[idx(i, j)] -= l * u;
                }
            }
        }
        Ok(Self {
            n,
            lower,
            upper: upper_u,
            data,
            pivots,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> C64 {
        self.data[i * (self.lower + self.upper + 1) + (j + self.lower - i)]
    }

    pub fn solve(&self, rhs: &[C64]) -> Vec<C64> {
        assert_eq!(rhs.len(), self.n);
        let n = self.n;
        let mut x = rhs.to_vec();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            for i in k + 1..=(k + self.lower).min(n.saturating_sub(1)) {
                x[i] -= self.at(i, k) * xk;
            }
        }
        for k in (0..n).rev() {
            let mut acc = x[k];
            for j in k + 1..=(k + self.upper).min(n - 1) {
                acc -= self.at(k, j) * x[j];
            }
            x[k] = acc / self.at(k, k);
        }
        x
    }
}

/// Solves a small dense system `a x = b` (row-major `a`) by Gaussian
/// elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<C64>, mut b: Vec<C64>) -> Result<Vec<C64>> {
    let n = b.len();
    assert_eq!(a.len(), n * n);
    let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i * n + k].norm().total_cmp(&a[j * n + k].norm()))
            .unwrap_or(k);
        let pivot_norm = a[p * n + k].norm();
        if pivot_norm <= scale * 1e-15 * n as f64 || !pivot_norm.is_finite() {
            return Err(Error::SingularSystem(format!(
                "zero pivot in column {k} of a {n}x{n} system"
            )));
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            b.swap(k, p);
        }
        let pivot = a[k * n + k];
        for i in k + 1..n {
            let l = a[i * n + k] / pivot;
            for j in k..n {
                let u = a[k * n + j];
                a[i * n + j] -= l * u;
            }
            let bk = b[k];
            b[i] -= l * bk;
        }
    }
    for k in (0..n).rev() {
        let mut acc = b[k];
        for j in k + 1..n {
            acc -= a[k * n + j] * b[j];
        }
        b[k] = acc / a[k * n + k];
    }
    Ok(b)
}
