//! Dealiased pseudo-spectral integrator for the rotating 2D Euler equations
//! with backscatter on the `2 pi` torus.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fft::{tree_sum, Fft2};
use crate::types::{wavenumber, SpectralField2D};
use crate::Error;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub b: f64,
    pub d: f64,
    pub f: f64,
    pub seed: u64,
    pub dealias_fraction: f64,
    /// Steps between diagnostic records.
    pub output_stride: usize,
    /// Keep the mean mode instead of forcing it to zero.
    pub keep_mean: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 32,
            dt: 1e-3,
            t_end: 1.0,
            b: 0.0,
            d: 0.0,
            f: 0.0,
            seed: 0,
            dealias_fraction: 2.0 / 3.0,
            output_stride: 1,
            keep_mean: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.n < 16 || self.n % 2 != 0 {
            return Err(Error::Param(format!("n must be even and >= 16, got {}", self.n)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Param(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::Param(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if !(self.d >= 0.0) || !self.b.is_finite() || !self.f.is_finite() {
            return Err(Error::Param(format!("need d >= 0 and finite b, f; got b={}, d={}, f={}", self.b, self.d, self.f)));
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            return Err(Error::Param(format!("dealias_fraction must lie in (0, 1], got {}", self.dealias_fraction)));
        }
        if self.output_stride == 0 {
            return Err(Error::Param("output_stride must be positive".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub t: f64,
    pub field: SpectralField2D,
    /// Nonlinear term of the previous step for Adams-Bashforth.
    pub prev_nonlinear: Option<SpectralField2D>,
}

impl SimState {
    pub fn new(field: SpectralField2D) -> Self {
        Self { t: 0.0, field, prev_nonlinear: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    /// `||u||^2 / 2`
    pub energy: f64,
    /// `||grad u||^2`
    pub grad_sq: f64,
    /// `||lap u||^2`
    pub lap_sq: f64,
    /// `||u_bar||` of the part on the four shear modes.
    pub large_norm: f64,
    /// `||grad u'||` of the remainder (homogeneous H1 norm).
    pub small_h1: f64,
    /// Coordinates along `cos y e_x, sin y e_x, cos x e_y, sin x e_y`.
    pub amps: [f64; 4],
    pub mean: [f64; 2],
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub records: Vec<Record>,
}

impl Diagnostics {
    pub const CSV_HEADER: &'static str = "t,E,gradE,lapE,large_norm,small_H1,a_e1,a_e2,a_e3,a_e4,mx,my";

    pub fn csv_row(r: &Record) -> [f64; 12] {
        [
            r.t,
            r.energy,
            r.grad_sq,
            r.lap_sq,
            r.large_norm,
            r.small_h1,
            r.amps[0],
            r.amps[1],
            r.amps[2],
            r.amps[3],
            r.mean[0],
            r.mean[1],
        ]
    }
}

/// The four shear eigenfunctions with eigenvalue one:
/// `cos y e_x, sin y e_x, cos x e_y, sin x e_y` for `j = 1..=4`.
pub fn shear_mode(j: usize, n: usize) -> SpectralField2D {
    let mut f = SpectralField2D::zeros(n);
    let half = Complex64::new(0.5, 0.0);
    let minus_half_i = Complex64::new(0.0, -0.5);
    let z = Complex64::new(0.0, 0.0);
    match j {
        1 => f.add_mode(0, 1, [half, z]),
        2 => f.add_mode(0, 1, [minus_half_i, z]),
        3 => f.add_mode(1, 0, [z, half]),
        4 => f.add_mode(1, 0, [z, minus_half_i]),
        _ => panic!("shear modes are numbered 1 to 4"),
    }
    f
}

/// Coordinates of a field along the four shear modes.
pub fn shear_amplitudes(field: &SpectralField2D) -> [f64; 4] {
    let a = field.uhat[field.idx(0, 1)];
    let b = field.vhat[field.idx(1, 0)];
    [2.0 * a.re, -2.0 * a.im, 2.0 * b.re, -2.0 * b.im]
}

/// Orthogonal projection onto the span of the shear modes.
pub fn large_scale_part(field: &SpectralField2D) -> SpectralField2D {
    let mut out = SpectralField2D::zeros(field.n);
    for (kx, ky) in [(0, 1), (0, -1)] {
        let i = field.idx(kx, ky);
        out.uhat[i] = field.uhat[i];
    }
    for (kx, ky) in [(1, 0), (-1, 0)] {
        let i = field.idx(kx, ky);
        out.vhat[i] = field.vhat[i];
    }
    out.zero_mean = true;
    out
}

/// Mode-wise `Id - k k^T / |k|^2`; the mean mode is left alone.
pub fn leray_project(field: &mut SpectralField2D) {
    let n = field.n;
    for jy in 0..n {
        let ky = wavenumber(jy, n) as f64;
        for jx in 0..n {
            let kx = wavenumber(jx, n) as f64;
            let k2 = kx * kx + ky * ky;
            if k2 == 0.0 {
                continue;
            }
            let i = jy * n + jx;
            let dot = (field.uhat[i] * kx + field.vhat[i] * ky) / k2;
            field.uhat[i] -= dot * kx;
            field.vhat[i] -= dot * ky;
        }
    }
}

/// Random divergence-free field with modes `0 < |k| <= n/8` and `||A u|| = h2_norm`.
pub fn random_field(n: usize, seed: u64, h2_norm: f64) -> SpectralField2D {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralField2D::zeros(n);
    let kmax = (n / 8) as i64;
    for ky in 0..=kmax {
        for kx in -kmax..=kmax {
            // one representative of each conjugate pair
            if ky == 0 && kx <= 0 {
                continue;
            }
            if kx * kx + ky * ky > kmax * kmax {
                continue;
            }
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let kn = ((kx * kx + ky * ky) as f64).sqrt();
            let dir = [-(ky as f64) / kn, kx as f64 / kn];
            f.add_mode(kx, ky, [c * dir[0], c * dir[1]]);
        }
    }
    let s = f.sobolev_sq(2).sqrt();
    if s > 0.0 {
        f.scale(h2_norm / s);
    }
    f
}

/// Stepper owning the transform workspace and per-mode linear solves.
pub struct Simulator {
    pub cfg: SimConfig,
    fft: Fft2,
    keep: Vec<bool>,
    /// `I + dt/2 L` per mode, row-major 2x2.
    explicit: Vec<[f64; 4]>,
    /// `(I - dt/2 L)^{-1}` per mode.
    implicit_inv: Vec<[f64; 4]>,
    buf: [Vec<Complex64>; 6],
}

fn apply2(m: &[f64; 4], a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    (a * m[0] + b * m[1], a * m[2] + b * m[3])
}

impl Simulator {
    pub fn new(cfg: SimConfig) -> Result<Self, Error> {
        cfg.validate()?;
        let n = cfg.n;
        let cut = cfg.dealias_fraction * n as f64 / 2.0;
        let mut keep = vec![false; n * n];
        let mut explicit = vec![[0.0; 4]; n * n];
        let mut implicit_inv = vec![[0.0; 4]; n * n];
        let h = 0.5 * cfg.dt;
        for jy in 0..n {
            let ky = wavenumber(jy, n) as f64;
            for jx in 0..n {
                let kx = wavenumber(jx, n) as f64;
                let i = jy * n + jx;
                keep[i] = kx.abs() < cut && ky.abs() < cut;
                let k2 = kx * kx + ky * ky;
                // L = s I - f P J with J the quarter turn
                let s = cfg.b * k2 - cfg.d * k2 * k2;
                let p = if k2 == 0.0 {
                    [1.0, 0.0, 0.0, 1.0]
                } else {
                    [1.0 - kx * kx / k2, -kx * ky / k2, -kx * ky / k2, 1.0 - ky * ky / k2]
                };
                // P J = [[p01, -p00], [p11, -p10]]
                let pj = [p[1], -p[0], p[3], -p[2]];
                let l = [s - cfg.f * pj[0], -cfg.f * pj[1], -cfg.f * pj[2], s - cfg.f * pj[3]];
                explicit[i] = [1.0 + h * l[0], h * l[1], h * l[2], 1.0 + h * l[3]];
                let m = [1.0 - h * l[0], -h * l[1], -h * l[2], 1.0 - h * l[3]];
                let det = m[0] * m[3] - m[1] * m[2];
                implicit_inv[i] = [m[3] / det, -m[1] / det, -m[2] / det, m[0] / det];
            }
        }
        let z = vec![Complex64::new(0.0, 0.0); n * n];
        Ok(Self {
            fft: Fft2::new(n),
            keep,
            explicit,
            implicit_inv,
            buf: std::array::from_fn(|_| z.clone()),
            cfg,
        })
    }

    /// `B(u, u) = P((u . grad) u)`, products on the grid, 2/3-dealiased.
    pub fn nonlinear_term(&mut self, field: &SpectralField2D) -> SpectralField2D {
        self.bilinear(field, field)
    }

    /// `B(u, v) = P((u . grad) v)`.
    pub fn bilinear(&mut self, u: &SpectralField2D, v: &SpectralField2D) -> SpectralField2D {
        let n = self.cfg.n;
        let [bu, bv, bux, buy, bvx, bvy] = &mut self.buf;
        for jy in 0..n {
            let ky = wavenumber(jy, n) as f64;
            for jx in 0..n {
                let kx = wavenumber(jx, n) as f64;
                let i = jy * n + jx;
                // odd derivatives drop the Nyquist mode
                let dx = Complex64::new(0.0, if 2 * jx == n { 0.0 } else { kx });
                let dy = Complex64::new(0.0, if 2 * jy == n { 0.0 } else { ky });
                bu[i] = u.uhat[i];
                bv[i] = u.vhat[i];
                bux[i] = v.uhat[i] * dx;
                buy[i] = v.uhat[i] * dy;
                bvx[i] = v.vhat[i] * dx;
                bvy[i] = v.vhat[i] * dy;
            }
        }
        for b in self.buf.iter_mut() {
            self.fft.inverse(b);
        }
        let [bu, bv, bux, buy, bvx, bvy] = &mut self.buf;
        for i in 0..n * n {
            let (a, b) = (bu[i].re, bv[i].re);
            bux[i] = Complex64::new(a * bux[i].re + b * buy[i].re, 0.0);
            bvx[i] = Complex64::new(a * bvx[i].re + b * bvy[i].re, 0.0);
        }
        self.fft.forward(bux);
        self.fft.forward(bvx);
        let mut out = SpectralField2D::zeros(n);
        for i in 0..n * n {
            if self.keep[i] {
                out.uhat[i] = bux[i];
                out.vhat[i] = bvx[i];
            }
        }
        out.uhat[0] = Complex64::new(0.0, 0.0);
        out.vhat[0] = Complex64::new(0.0, 0.0);
        leray_project(&mut out);
        out
    }

    /// One IMEX step: Crank-Nicolson on the linear part, Adams-Bashforth 2
    /// on the nonlinearity (explicit Euler on the first step).
    pub fn step(&mut self, state: &mut SimState) -> Result<(), Error> {
        let n = self.cfg.n;
        let dt = self.cfg.dt;
        let nl = self.nonlinear_term(&state.field);
        let (w0, w1) = if state.prev_nonlinear.is_some() { (1.5, -0.5) } else { (1.0, 0.0) };
        let zero = Complex64::new(0.0, 0.0);
        let f = &mut state.field;
        for i in 0..n * n {
            let (mut nu, mut nv) = (nl.uhat[i] * w0, nl.vhat[i] * w0);
            if let Some(p) = &state.prev_nonlinear {
                nu += p.uhat[i] * w1;
                nv += p.vhat[i] * w1;
            }
            let (a, b) = apply2(&self.explicit[i], f.uhat[i], f.vhat[i]);
            let (a, b) = (a - nu * dt, b - nv * dt);
            let (a, b) = apply2(&self.implicit_inv[i], a, b);
            f.uhat[i] = a;
            f.vhat[i] = b;
        }
        if !self.cfg.keep_mean {
            f.uhat[0] = zero;
            f.vhat[0] = zero;
        }
        f.zero_mean = !self.cfg.keep_mean || (f.uhat[0] == zero && f.vhat[0] == zero);
        state.prev_nonlinear = Some(nl);
        state.t += dt;
        let norm = f.norm2_sq().sqrt();
        if !norm.is_finite() || norm > 1e12 {
            return Err(Error::SimulationDiverged { t: state.t });
        }
        Ok(())
    }

    pub fn record(&self, state: &SimState) -> Record {
        let f = &state.field;
        let large = large_scale_part(f);
        let mut small = f.clone();
        small.axpy(-1.0, &large);
        Record {
            t: state.t,
            energy: 0.5 * f.norm2_sq(),
            grad_sq: f.sobolev_sq(1),
            lap_sq: f.sobolev_sq(2),
            large_norm: large.norm2_sq().sqrt(),
            small_h1: small.sobolev_sq(1).sqrt(),
            amps: shear_amplitudes(f),
            mean: [f.uhat[0].re, f.vhat[0].re],
        }
    }

    /// Integrates to `t_end`, recording every `output_stride` steps and at the end.
    pub fn run(&mut self, initial: SpectralField2D) -> Result<(SimState, Diagnostics), Error> {
        if initial.n != self.cfg.n {
            return Err(Error::SizeMismatch { expected: self.cfg.n, got: initial.n });
        }
        let mut state = SimState::new(initial);
        if !self.cfg.keep_mean {
            state.field.uhat[0] = Complex64::new(0.0, 0.0);
            state.field.vhat[0] = Complex64::new(0.0, 0.0);
        }
        let steps = self.cfg.steps();
        let mut diag = Diagnostics { records: vec![self.record(&state)] };
        for s in 1..=steps {
            self.step(&mut state)?;
            if s % self.cfg.output_stride == 0 || s == steps {
                diag.records.push(self.record(&state));
            }
        }
        Ok((state, diag))
    }
}

/// `|E(T) - E(0) - int_0^T (b ||grad u||^2 - d ||lap u||^2) dt|` with the
/// integral by the trapezoid rule over every step.
pub fn energy_budget_residual(cfg: &SimConfig, initial: SpectralField2D) -> Result<f64, Error> {
    let mut cfg = cfg.clone();
    cfg.output_stride = 1;
    let mut sim = Simulator::new(cfg.clone())?;
    let (_, diag) = sim.run(initial)?;
    let r = &diag.records;
    let rate = |x: &Record| cfg.b * x.grad_sq - cfg.d * x.lap_sq;
    let pieces: Vec<f64> = r.windows(2).map(|w| 0.5 * (w[1].t - w[0].t) * (rate(&w[0]) + rate(&w[1]))).collect();
    let last = r.last().unwrap();
    Ok((last.energy - r[0].energy - tree_sum(&pieces)).abs())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanReport {
    pub times: Vec<f64>,
    pub means: Vec<[f64; 2]>,
    /// Largest `| |m(t)| - |m(0)| |`.
    pub modulus_drift: f64,
    /// Largest distance to the exact rotation `m(t) = R(-f t) m(0)`.
    pub rotation_error: f64,
}

/// Runs the mean-retaining integrator from `field` plus the constant `m0`
/// and compares the mean with the rotation solving `m' + f m_perp = 0`.
pub fn mean_evolution_check(cfg: &SimConfig, field: SpectralField2D, m0: [f64; 2]) -> Result<MeanReport, Error> {
    let mut cfg = cfg.clone();
    cfg.keep_mean = true;
    let mut init = field;
    init.uhat[0] = Complex64::new(m0[0], 0.0);
    init.vhat[0] = Complex64::new(m0[1], 0.0);
    init.zero_mean = m0 == [0.0, 0.0];
    let mut sim = Simulator::new(cfg.clone())?;
    let (_, diag) = sim.run(init)?;
    let r0 = m0[0].hypot(m0[1]);
    let mut drift: f64 = 0.0;
    let mut err: f64 = 0.0;
    for rec in &diag.records {
        let m = rec.mean;
        drift = drift.max((m[0].hypot(m[1]) - r0).abs());
        let (s, c) = (cfg.f * rec.t).sin_cos();
        let exact = [c * m0[0] + s * m0[1], -s * m0[0] + c * m0[1]];
        err = err.max((m[0] - exact[0]).hypot(m[1] - exact[1]));
    }
    Ok(MeanReport {
        times: diag.records.iter().map(|r| r.t).collect(),
        means: diag.records.iter().map(|r| r.mean).collect(),
        modulus_drift: drift,
        rotation_error: err,
    })
}
