//! FFT wrappers with the forward transform normalised by the point count.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Pairwise summation in a fixed order, independent of thread count.
pub fn tree_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => {
            let (a, b) = xs.split_at(n / 2);
            tree_sum(a) + tree_sum(b)
        }
    }
}

/// Square 2D transform on an `n x n` grid stored row-major.
pub struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    col: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let s = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        Self {
            n,
            fwd,
            inv,
            col: vec![Complex64::default(); n],
            scratch: vec![Complex64::default(); s],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn apply(&mut self, data: &mut [Complex64], forward: bool) {
        let n = self.n;
        assert_eq!(data.len(), n * n);
        let plan = if forward { &self.fwd } else { &self.inv };
        plan.process_with_scratch(data, &mut self.scratch);
        for jx in 0..n {
            for jy in 0..n {
                self.col[jy] = data[jy * n + jx];
            }
            plan.process_with_scratch(&mut self.col, &mut self.scratch);
            for jy in 0..n {
                data[jy * n + jx] = self.col[jy];
            }
        }
    }

    /// Grid samples to coefficients, divided by `n^2`.
    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.apply(data, true);
        let s = 1.0 / (self.n * self.n) as f64;
        for z in data.iter_mut() {
            *z *= s;
        }
    }

    /// Coefficients to grid samples.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.apply(data, false);
    }
}

/// Transform on a rectangular grid of up to three axes, row-major with the
/// last axis fastest.
pub struct FftNd {
    dims: Vec<usize>,
    fwd: Vec<Arc<dyn Fft<f64>>>,
    inv: Vec<Arc<dyn Fft<f64>>>,
}

impl FftNd {
    pub fn new(dims: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            dims: dims.to_vec(),
            fwd: dims.iter().map(|&n| planner.plan_fft_forward(n)).collect(),
            inv: dims.iter().map(|&n| planner.plan_fft_inverse(n)).collect(),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn apply(&self, data: &mut [Complex64], forward: bool) {
        assert_eq!(data.len(), self.len());
        for axis in 0..self.dims.len() {
            let n = self.dims[axis];
            if n == 1 {
                continue;
            }
            let stride: usize = self.dims[axis + 1..].iter().product();
            let outer: usize = self.dims[..axis].iter().product();
            let plan = if forward { &self.fwd[axis] } else { &self.inv[axis] };
            let mut line = vec![Complex64::default(); n];
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * n * stride + s;
                    for j in 0..n {
                        line[j] = data[base + j * stride];
                    }
                    plan.process(&mut line);
                    for j in 0..n {
                        data[base + j * stride] = line[j];
                    }
                }
            }
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, true);
        let s = 1.0 / self.len() as f64;
        for z in data.iter_mut() {
            *z *= s;
        }
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply(data, false);
    }

    /// Coefficients of real samples.
    pub fn coeffs(&self, samples: &[f64]) -> Vec<Complex64> {
        let mut z: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward(&mut z);
        z
    }

    /// Physical samples of a mixed partial derivative with `orders[a]`
    /// derivatives along axis `a`, on a box with side lengths `lengths`.
    /// Nyquist modes of odd-order derivatives are dropped.
    pub fn derivative_of(&self, coeffs: &[Complex64], orders: &[u32], lengths: &[f64]) -> Vec<f64> {
        self.multiply(coeffs, |k| {
            let mut factor = Complex64::new(1.0, 0.0);
            for (a, &ord) in orders.iter().enumerate() {
                if ord == 0 {
                    continue;
                }
                match k[a] {
                    None if ord % 2 == 1 => return Complex64::new(0.0, 0.0),
                    None | Some(_) => {
                        let kk = k[a].unwrap_or_else(|| self.nyquist(a, lengths));
                        factor *= Complex64::new(0.0, kk).powu(ord);
                    }
                }
            }
            factor
        }, lengths)
    }

    /// Physical samples of `(-|k|^2)^power` applied to the field.
    pub fn laplacian_of(&self, coeffs: &[Complex64], power: i32, lengths: &[f64]) -> Vec<f64> {
        self.multiply(coeffs, |k| {
            let k2: f64 = (0..k.len()).map(|a| {
                let kk = k[a].unwrap_or_else(|| self.nyquist(a, lengths));
                kk * kk
            }).sum();
            Complex64::new((-k2).powi(power), 0.0)
        }, lengths)
    }

    /// Same as [`derivative_of`](Self::derivative_of) starting from samples.
    pub fn derivative(&self, samples: &[f64], orders: &[u32], lengths: &[f64]) -> Vec<f64> {
        self.derivative_of(&self.coeffs(samples), orders, lengths)
    }

    fn nyquist(&self, a: usize, lengths: &[f64]) -> f64 {
        -(self.dims[a] as f64 / 2.0) * 2.0 * std::f64::consts::PI / lengths[a]
    }

    /// Multiplies coefficients by `symbol(k)`, where `k[a]` is `None` on the
    /// Nyquist index of an even axis, and returns real samples.
    fn multiply(&self, coeffs: &[Complex64], symbol: impl Fn(&[Option<f64>]) -> Complex64, lengths: &[f64]) -> Vec<f64> {
        let nd = self.dims.len();
        let mut z = coeffs.to_vec();
        let mut idx = vec![0usize; nd];
        let mut k = vec![None; nd];
        for (flat, c) in z.iter_mut().enumerate() {
            let mut rem = flat;
            for a in (0..nd).rev() {
                idx[a] = rem % self.dims[a];
                rem /= self.dims[a];
            }
            for a in 0..nd {
                let n = self.dims[a];
                k[a] = if n % 2 == 0 && idx[a] == n / 2 {
                    None
                } else {
                    Some(crate::types::wavenumber(idx[a], n) as f64 * 2.0 * std::f64::consts::PI / lengths[a])
                };
            }
            *c *= symbol(&k);
        }
        self.inverse(&mut z);
        z.iter().map(|c| c.re).collect()
    }
}
