//! Coefficient vectors in one of the orthonormal bases of this crate.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

type C64 = Complex64;

/// Threshold for the `resolved` flag: tail modulus relative to the largest coefficient.
pub const RESOLUTION_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    /// `ρ_n(x) = (1/√π)(1+ix)^n/(1-ix)^{n+1}` on ℝ.
    RealLine,
    /// `e^{ikx}` on `[-π, π]` with the normalized measure `dx/2π`.
    Fourier1d,
    /// `e^{i(k_x x + k_y y)}` on `[-π, π]²` with the measure `dx dy/4π²`.
    Fourier2d,
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::RealLine => "realline",
            Basis::Fourier1d => "fourier1d",
            Basis::Fourier2d => "fourier2d",
        })
    }
}

/// Finite coefficient vector.
///
/// Indices run over the symmetric window `[-N/2, N/2)` per dimension; storage
/// is row-major with the second dimension (`k_y`) slowest, so entry
/// `(kx, ky)` lives at `(ky + ny/2) * nx + (kx + nx/2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionRep {
    basis: Basis,
    nx: usize,
    ny: usize,
    coeffs: Vec<C64>,
    resolved: bool,
}

impl FunctionRep {
    /// One-dimensional representation; `resolved` is computed from the tail.
    pub fn new(basis: Basis, coeffs: Vec<C64>) -> Self {
        assert!(basis != Basis::Fourier2d, "use FunctionRep::new_2d");
        let nx = coeffs.len();
        let mut rep = Self {
            basis,
            nx,
            ny: 1,
            coeffs,
            resolved: true,
        };
        rep.resolved = rep.tail_is_small();
        rep
    }

    pub fn new_2d(nx: usize, ny: usize, coeffs: Vec<C64>) -> Self {
        assert_eq!(coeffs.len(), nx * ny);
        let mut rep = Self {
            basis: Basis::Fourier2d,
            nx,
            ny,
            coeffs,
            resolved: true,
        };
        rep.resolved = rep.tail_is_small();
        rep
    }

    /// Unit vector at index `n` of a size-`size` window.
    pub fn unit(basis: Basis, size: usize, n: i64) -> Self {
        let mut coeffs = vec![C64::new(0.0, 0.0); size];
        coeffs[index_of(size, n)] = C64::new(1.0, 0.0);
        Self::new(basis, coeffs)
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.coeffs
    }

    pub fn resolved(&self) -> bool {
        self.resolved
    }

    /// Coefficient at wavenumber `n` (1D); zero outside the window.
    pub fn coeff(&self, n: i64) -> C64 {
        let half = (self.nx / 2) as i64;
        if n < -half || n >= self.nx as i64 - half {
            return C64::new(0.0, 0.0);
        }
        self.coeffs[index_of(self.nx, n)]
    }

    /// Coefficient at `(kx, ky)` (2D); zero outside the window.
    pub fn coeff_2d(&self, kx: i64, ky: i64) -> C64 {
        let (hx, hy) = ((self.nx / 2) as i64, (self.ny / 2) as i64);
        if kx < -hx || kx >= self.nx as i64 - hx || ky < -hy || ky >= self.ny as i64 - hy {
            return C64::new(0.0, 0.0);
        }
        self.coeffs[index_of(self.ny, ky) * self.nx + index_of(self.nx, kx)]
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            ..self.clone()
        }
    }

    /// `Σ u_n conj(v_n)`.
    pub fn inner_product(&self, other: &FunctionRep) -> Result<C64> {
        if self.basis != other.basis || self.shape() != other.shape() {
            return Err(Error::BasisMismatch {
                left: format!("{} {:?}", self.basis, self.shape()),
                right: format!("{} {:?}", other.basis, other.shape()),
            });
        }
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(u, v)| u * v.conj())
            .sum())
    }

    /// Restricts or zero-pads to a centered window of the given size.
    pub fn resized(&self, nx: usize, ny: usize) -> Self {
        if self.basis != Basis::Fourier2d {
            assert_eq!(ny, 1);
        }
        let mut coeffs = vec![C64::new(0.0, 0.0); nx * ny];
        let (hx, hy) = ((nx / 2) as i64, (ny / 2) as i64);
        for iy in 0..ny {
            let ky = iy as i64 - hy;
            for ix in 0..nx {
                let kx = ix as i64 - hx;
                coeffs[iy * nx + ix] = if self.ny == 1 && ny == 1 {
                    self.coeff(kx)
                } else {
                    self.coeff_2d(kx, ky)
                };
            }
        }
        let mut rep = Self {
            basis: self.basis,
            nx,
            ny,
            coeffs,
            resolved: true,
        };
        rep.resolved = rep.tail_is_small();
        rep
    }

    /// Max modulus in the outer 10% of the index range (5% at each end, per
    /// dimension) is at most `RESOLUTION_TOLERANCE` times the overall max.
    fn tail_is_small(&self) -> bool {
        let peak = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return true;
        }
        let edge = |n: usize, i: usize| {
            let band = (n / 20).max(1);
            n > 2 && (i < band || i >= n - band)
        };
        let mut tail: f64 = 0.0;
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                if edge(self.nx, ix) || edge(self.ny, iy) {
                    tail = tail.max(self.coeffs[iy * self.nx + ix].norm());
                }
            }
        }
        tail <= RESOLUTION_TOLERANCE * peak
    }
}

/// Storage index of wavenumber `n` in a window of size `size`.
#[inline]
pub fn index_of(size: usize, n: i64) -> usize {
    let i = n + (size / 2) as i64;
    assert!(i >= 0 && (i as usize) < size, "index {n} outside window of size {size}");
    i as usize
}

/// Wavenumber stored at index `i` of a window of size `size`.
#[inline]
pub fn wavenumber(size: usize, i: usize) -> i64 {
    i as i64 - (size / 2) as i64
}
