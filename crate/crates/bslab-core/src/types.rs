//! Parameter, wave-vector and field types shared by every module.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fft::Fft2;
use crate::Error;

/// Backscatter coefficients: negative viscosity `b` and hyperviscosity `d`
/// per horizontal velocity component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackscatterParams {
    pub b1: f64,
    pub b2: f64,
    pub d1: f64,
    pub d2: f64,
}

impl BackscatterParams {
    pub fn isotropic(b: f64, d: f64) -> Self {
        Self { b1: b, b2: b, d1: d, d2: d }
    }

    pub fn is_isotropic(&self) -> bool {
        self.b1 == self.b2 && self.d1 == self.d2
    }

    /// Checks `d > 0` and `b >= 0` for both components.
    pub fn validate(&self) -> Result<(), Error> {
        for (name, v) in [("d1", self.d1), ("d2", self.d2)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Param(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("b1", self.b1), ("b2", self.b2)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Param(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Physical coefficients of the rotating models.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct PhysicalParams {
    /// Coriolis parameter.
    pub f: f64,
    pub g: f64,
    /// Mean layer depth.
    pub H0: f64,
    /// Linear bottom drag.
    pub C: f64,
    /// Quadratic bottom drag.
    pub Q: f64,
    pub nu_v: f64,
    /// Buoyancy diffusivity.
    pub mu: f64,
    /// Squared buoyancy frequency.
    pub N2: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self { f: 0.0, g: 9.8, H0: 0.1, C: 0.0, Q: 0.0, nu_v: 0.0, mu: 0.0, N2: 0.0 }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<(), Error> {
        let checks = [
            ("g", self.g, self.g > 0.0),
            ("H0", self.H0, self.H0 > 0.0),
            ("C", self.C, self.C >= 0.0),
            ("Q", self.Q, self.Q >= 0.0),
            ("nu_v", self.nu_v, self.nu_v >= 0.0),
            ("mu", self.mu, self.mu >= 0.0),
        ];
        for (name, v, ok) in checks {
            if !ok || !v.is_finite() {
                return Err(Error::Param(format!("{name} out of range: {v}")));
            }
        }
        if !self.f.is_finite() || !self.N2.is_finite() {
            return Err(Error::Param("f and N2 must be finite".into()));
        }
        Ok(())
    }
}

/// Horizontal wave vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveVector {
    pub kx: f64,
    pub ky: f64,
}

impl WaveVector {
    pub fn new(kx: f64, ky: f64) -> Self {
        Self { kx, ky }
    }

    pub fn from_polar(k: f64, angle: f64) -> Self {
        Self { kx: k * angle.cos(), ky: k * angle.sin() }
    }

    pub fn norm(&self) -> f64 {
        self.kx.hypot(self.ky)
    }

    pub fn norm2(&self) -> f64 {
        self.kx * self.kx + self.ky * self.ky
    }

    pub fn perp(&self) -> [f64; 2] {
        perp([self.kx, self.ky])
    }

    pub fn dot(&self, x: f64, y: f64) -> f64 {
        self.kx * x + self.ky * y
    }
}

/// Rotation by a quarter turn: `(a1, a2) -> (-a2, a1)`.
pub fn perp(v: [f64; 2]) -> [f64; 2] {
    [-v[1], v[0]]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub dealias_fraction: f64,
}

impl GridSpec {
    pub fn new(n: usize) -> Self {
        Self { n, dealias_fraction: 2.0 / 3.0 }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.n < 16 || !self.n.is_power_of_two() {
            return Err(Error::Param(format!("n must be a power of two >= 16, got {}", self.n)));
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            return Err(Error::Param(format!(
                "dealias_fraction must lie in (0, 1], got {}",
                self.dealias_fraction
            )));
        }
        Ok(())
    }
}

/// Signed wave number of FFT index `j` on an `n`-point axis.
#[inline]
pub fn wavenumber(j: usize, n: usize) -> i64 {
    if 2 * j < n {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// FFT index of signed wave number `k` on an `n`-point axis.
#[inline]
pub fn index_of(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

/// Velocity field on `[0, 2pi]^2` stored by Fourier coefficients.
///
/// Coefficients are laid out row-major as `[jy * n + jx]` in FFT order. The
/// forward transform divides by `n^2`, so a coefficient is the analytic
/// Fourier coefficient of `exp(i k.x)` and the grid mean of `|u|^2` equals
/// the sum of `|uhat|^2` over all modes. All norms in this crate use that
/// normalised measure `dx / (2 pi)^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralField2D {
    pub n: usize,
    pub uhat: Vec<Complex64>,
    pub vhat: Vec<Complex64>,
    pub zero_mean: bool,
}

/// Physical-grid samples; `u[iy * n + ix]` at `x = 2 pi ix / n`, `y = 2 pi iy / n`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField2D {
    pub n: usize,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl GridField2D {
    pub fn zeros(n: usize) -> Self {
        Self { n, u: vec![0.0; n * n], v: vec![0.0; n * n] }
    }

    /// Fills the grid from a function of `(x, y)`.
    pub fn from_fn(n: usize, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let mut out = Self::zeros(n);
        let h = 2.0 * std::f64::consts::PI / n as f64;
        for iy in 0..n {
            for ix in 0..n {
                let [a, b] = f(ix as f64 * h, iy as f64 * h);
                out.u[iy * n + ix] = a;
                out.v[iy * n + ix] = b;
            }
        }
        out
    }
}

impl SpectralField2D {
    pub fn zeros(n: usize) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self { n, uhat: vec![z; n * n], vhat: vec![z; n * n], zero_mean: true }
    }

    #[inline]
    pub fn idx(&self, kx: i64, ky: i64) -> usize {
        index_of(ky, self.n) * self.n + index_of(kx, self.n)
    }

    /// Adds `amp * exp(i k.x)` to both components, together with the conjugate
    /// mode so the field stays real.
    pub fn add_mode(&mut self, kx: i64, ky: i64, amp: [Complex64; 2]) {
        let i = self.idx(kx, ky);
        let j = self.idx(-kx, -ky);
        if i == j {
            self.uhat[i] += amp[0].re;
            self.vhat[i] += amp[1].re;
        } else {
            self.uhat[i] += amp[0];
            self.vhat[i] += amp[1];
            self.uhat[j] += amp[0].conj();
            self.vhat[j] += amp[1].conj();
        }
    }

    pub fn transform_to_physical(&self, fft: &mut Fft2) -> Result<GridField2D, Error> {
        if fft.n() != self.n || self.uhat.len() != self.n * self.n || self.vhat.len() != self.n * self.n {
            return Err(Error::SizeMismatch { expected: fft.n(), got: self.n });
        }
        let mut a = self.uhat.clone();
        let mut b = self.vhat.clone();
        fft.inverse(&mut a);
        fft.inverse(&mut b);
        Ok(GridField2D {
            n: self.n,
            u: a.iter().map(|z| z.re).collect(),
            v: b.iter().map(|z| z.re).collect(),
        })
    }

    pub fn transform_to_spectral(grid: &GridField2D, fft: &mut Fft2) -> Result<Self, Error> {
        let n = grid.n;
        if fft.n() != n || grid.u.len() != n * n || grid.v.len() != n * n {
            return Err(Error::SizeMismatch { expected: fft.n(), got: n });
        }
        let mut a: Vec<Complex64> = grid.u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let mut b: Vec<Complex64> = grid.v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        fft.forward(&mut a);
        fft.forward(&mut b);
        let zero_mean = a[0].norm() == 0.0 && b[0].norm() == 0.0;
        Ok(Self { n, uhat: a, vhat: b, zero_mean })
    }

    /// Normalised L2 norm squared, `sum |uhat|^2 + |vhat|^2`.
    pub fn norm2_sq(&self) -> f64 {
        crate::fft::tree_sum(
            &self
                .uhat
                .iter()
                .zip(&self.vhat)
                .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
                .collect::<Vec<_>>(),
        )
    }

    /// `sum |k|^(2p) (|uhat|^2 + |vhat|^2)`; `p = 1` gives the squared gradient norm.
    pub fn sobolev_sq(&self, p: i32) -> f64 {
        let n = self.n;
        let mut terms = Vec::with_capacity(n * n);
        for jy in 0..n {
            let ky = wavenumber(jy, n) as f64;
            for jx in 0..n {
                let kx = wavenumber(jx, n) as f64;
                let w = (kx * kx + ky * ky).powi(p);
                let i = jy * n + jx;
                terms.push(w * (self.uhat[i].norm_sqr() + self.vhat[i].norm_sqr()));
            }
        }
        crate::fft::tree_sum(&terms)
    }

    /// Largest relative divergence `|k.uhat| / (|k| |uhat|)` over modes.
    pub fn max_divergence(&self) -> f64 {
        let n = self.n;
        let scale = self.norm2_sq().sqrt().max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for jy in 0..n {
            let ky = wavenumber(jy, n) as f64;
            for jx in 0..n {
                let kx = wavenumber(jx, n) as f64;
                let k = kx.hypot(ky);
                if k == 0.0 {
                    continue;
                }
                let i = jy * n + jx;
                let div = (self.uhat[i] * kx + self.vhat[i] * ky).norm() / k;
                worst = worst.max(div / scale);
            }
        }
        worst
    }

    /// Inner product `sum conj(a) . b` over modes (real part).
    pub fn inner(&self, other: &Self) -> f64 {
        let terms: Vec<f64> = self
            .uhat
            .iter()
            .zip(&self.vhat)
            .zip(other.uhat.iter().zip(&other.vhat))
            .map(|((a, b), (c, d))| (a.conj() * c + b.conj() * d).re)
            .collect();
        crate::fft::tree_sum(&terms)
    }

    pub fn scale(&mut self, s: f64) {
        for z in self.uhat.iter_mut().chain(self.vhat.iter_mut()) {
            *z *= s;
        }
    }

    pub fn axpy(&mut self, a: f64, x: &Self) {
        for (z, w) in self.uhat.iter_mut().zip(&x.uhat) {
            *z += w * a;
        }
        for (z, w) in self.vhat.iter_mut().zip(&x.vhat) {
            *z += w * a;
        }
    }
}
