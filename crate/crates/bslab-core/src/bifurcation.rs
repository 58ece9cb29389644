//! Plane-wave reduction with bottom drag: closed-form bifurcation
//! predictions, steady profiles by semismooth Newton, branch continuation
//! and 1D stability of the bifurcating states.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dispersion::{critical_point, CriticalPoint};
use crate::fft::FftNd;
use crate::types::{index_of, wavenumber, BackscatterParams, PhysicalParams};
use crate::Error;

/// Isotropic parameters of the reduced equation; `C` and `k` vary separately.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedModel {
    pub b: f64,
    pub d: f64,
    pub f: f64,
    pub g: f64,
    pub h0: f64,
    pub q: f64,
}

impl ReducedModel {
    /// Isotropic parameters, or the `(b2, d2)` pair with `k` along `x` when anisotropic.
    pub fn new(bp: &BackscatterParams, pp: &PhysicalParams) -> Self {
        let (b, d) = if bp.is_isotropic() { (bp.b1, bp.d1) } else { (bp.b2, bp.d2) };
        Self { b, d, f: pp.f, g: pp.g, h0: pp.H0, q: pp.Q }
    }

    pub fn critical(&self) -> Result<CriticalPoint, Error> {
        let bp = BackscatterParams::isotropic(self.b, self.d);
        let pp = PhysicalParams { f: self.f, g: self.g, H0: self.h0, ..Default::default() };
        critical_point(&bp, &pp)
    }

    /// Drag `C = C_c - alpha H0`.
    pub fn drag_at(&self, alpha: f64) -> Result<f64, Error> {
        Ok(self.critical()?.C_c - alpha * self.h0)
    }
}

/// Offsets from the critical point: `C = C_c - alpha H0`, `k = k_c + kappa`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BifParams {
    pub alpha: f64,
    pub kappa: f64,
    pub model: ReducedModel,
}

impl BifParams {
    pub fn new(alpha: f64, kappa: f64, bp: &BackscatterParams, pp: &PhysicalParams) -> Result<Self, Error> {
        let model = ReducedModel::new(bp, pp);
        model.critical()?;
        Ok(Self { alpha, kappa, model })
    }

    pub fn drag(&self) -> Result<f64, Error> {
        self.model.drag_at(self.alpha)
    }

    pub fn wavenumber(&self) -> Result<f64, Error> {
        Ok(self.model.critical()?.k_c + self.kappa)
    }

    pub fn growth_prefactor(&self) -> Result<f64, Error> {
        growth_prefactor(&self.model)
    }

    /// Leading-order steady profile on `modes` cosine modes.
    pub fn leading_profile(&self, modes: usize) -> Result<ReducedProfile, Error> {
        let a = ge_amplitude(self.alpha, self.kappa, &self.model)?;
        Ok(ge_profile(a, self.wavenumber()?, self.drag()?, &self.model, modes))
    }
}

/// `g k_c^2 H0 / omega_c^2`.
pub fn growth_prefactor(m: &ReducedModel) -> Result<f64, Error> {
    let cp = m.critical()?;
    Ok(m.g * cp.k_c * cp.k_c * m.h0 / (cp.omega_c * cp.omega_c))
}

/// Leading-order growth rate `M (alpha - 2 b kappa^2)` of the trivial state.
pub fn lambda_expansion(alpha: f64, kappa: f64, m: &ReducedModel) -> Result<f64, Error> {
    Ok(growth_prefactor(m)? * (alpha - 2.0 * m.b * kappa * kappa))
}

/// Leading-order `|A1|` of geostrophic equilibria; zero when `alpha <= 2 b kappa^2`.
pub fn ge_amplitude(alpha: f64, kappa: f64, m: &ReducedModel) -> Result<f64, Error> {
    if !(m.b > 0.0 && m.d > 0.0 && m.h0 > 0.0) {
        return Err(Error::Param(format!("need b, d, H0 > 0, got b={}, d={}, H0={}", m.b, m.d, m.h0)));
    }
    let excess = alpha - 2.0 * m.b * kappa * kappa;
    if m.q == 0.0 {
        if m.f == 0.0 {
            return Err(Error::VerticalBranch);
        }
        if excess <= 0.0 {
            return Ok(0.0);
        }
        Ok(6.0 * m.g * m.h0 / (m.b * m.f.abs()) * (2.0 * m.d * excess / 17.0).sqrt())
    } else {
        if excess <= 0.0 {
            return Ok(0.0);
        }
        Ok(3.0 * PI * m.h0 * (2.0 * m.d).sqrt() / (16.0 * m.q.abs() * m.b.sqrt()) * excess)
    }
}

/// Even wave shape `phi(xi) = sum_j coeffs[j-1] cos(j xi)` with drag `C` and wave number `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedProfile {
    pub coeffs: Vec<f64>,
    pub k: f64,
    pub c: f64,
    /// Half the first cosine coefficient.
    pub a1: f64,
}

impl ReducedProfile {
    pub fn new(coeffs: Vec<f64>, k: f64, c: f64) -> Self {
        let a1 = coeffs.first().copied().unwrap_or(0.0) / 2.0;
        Self { coeffs, k, c, a1 }
    }

    /// Grid size matching the number of modes.
    pub fn grid_size(&self) -> usize {
        2 * (self.coeffs.len() + 1)
    }

    pub fn eval(&self, xi: f64) -> f64 {
        self.coeffs.iter().enumerate().map(|(j, a)| a * ((j + 1) as f64 * xi).cos()).sum()
    }

    pub fn derivative(&self, xi: f64) -> f64 {
        self.coeffs.iter().enumerate().map(|(j, a)| -a * (j + 1) as f64 * ((j + 1) as f64 * xi).sin()).sum()
    }

    /// Normalised L2 norm of the wave shape.
    pub fn norm(&self) -> f64 {
        (0.5 * self.coeffs.iter().map(|a| a * a).sum::<f64>()).sqrt()
    }
}

/// Leading-order profile: `2 A1 cos xi + (f / (9 g H0)) A1^2 cos 2xi` for
/// `Q = 0`, and `2 A1 cos xi` otherwise, on `modes` cosine modes.
pub fn ge_profile(a1: f64, k: f64, c: f64, m: &ReducedModel, modes: usize) -> ReducedProfile {
    let mut coeffs = vec![0.0; modes.max(2)];
    coeffs[0] = 2.0 * a1;
    if m.q == 0.0 {
        coeffs[1] = m.f / (9.0 * m.g * m.h0) * a1 * a1;
    }
    ReducedProfile::new(coeffs, k, c)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GWQuadratures {
    pub i1: f64,
    pub i2: f64,
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// The two circle averages of `sqrt(f^2 + k_c^2 g H0 cos^2)` weighting the
/// gravity-wave drag, by adaptive Simpson quadrature.
pub fn gw_quadratures(f: f64, g: f64, h0: f64, k_c: f64) -> GWQuadratures {
    let w = k_c * k_c * g * h0;
    let root = move |x: f64| (f * f + w * x.cos().powi(2)).sqrt();
    // split at the quarter points where the integrand may have a kink
    let parts = |h: &dyn Fn(f64) -> f64| -> f64 {
        (0..4).map(|i| adaptive_simpson(h, i as f64 * PI / 2.0, (i + 1) as f64 * PI / 2.0, 1e-14)).sum::<f64>() / (2.0 * PI)
    };
    GWQuadratures { i1: parts(&root), i2: parts(&|x| root(x) * (2.0 * x).cos()) }
}

/// Leading-order amplitude and speed correction of bifurcating gravity waves.
pub fn gw_amplitude_and_speed(alpha: f64, kappa: f64, m: &ReducedModel) -> Result<(f64, f64), Error> {
    if m.q == 0.0 {
        return Err(Error::Unsupported("gravity-wave amplitudes need Q != 0".into()));
    }
    let cp = m.critical()?;
    let s = kappa * m.f * m.f / cp.omega_c;
    if alpha <= 0.0 {
        return Ok((0.0, s));
    }
    let quad = gw_quadratures(m.f, m.g, m.h0, cp.k_c);
    let w = cp.k_c * cp.k_c * m.g * m.h0;
    let coef = 2.0 * m.q.abs() * cp.k_c / m.h0 * (quad.i1 + w / (2.0 * m.f * m.f + w) * quad.i2);
    Ok((alpha / coef, s))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; q];
    let mut w = vec![0.0; q];
    for i in 0..q.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for l in 2..=q {
                let p2 = ((2 * l - 1) as f64 * z * p1 - (l - 1) as f64 * p0) / l as f64;
                p0 = p1;
                p1 = p2;
            }
            if q == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = q as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[q - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[q - 1 - i] = w[i];
    }
    (x, w)
}

fn cached_rule(q: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static RULES: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let mut map = RULES.get_or_init(Default::default).lock().unwrap();
    map.entry(q).or_insert_with(|| Arc::new(gauss_legendre(q))).clone()
}

/// Quadrature on `[0, 2 pi)` split at the zeros of a function sampled on a
/// uniform grid, so integrands with kinks there stay spectrally accurate.
/// `eval` refines the zeros; `freq` is the highest frequency to integrate.
fn kink_quadrature(samples: &[f64], eval: impl Fn(f64) -> f64, freq: usize) -> (Vec<f64>, Vec<f64>) {
    let ns = samples.len();
    let h = 2.0 * PI / ns as f64;
    let scale = samples.iter().fold(0.0, |a: f64, x| a.max(x.abs()));
    let mut breaks = Vec::new();
    if scale > 0.0 {
        let zero = |x: f64| x.abs() <= 1e-13 * scale;
        for i in 0..ns {
            let (a, b) = (samples[i], samples[(i + 1) % ns]);
            if zero(a) {
                breaks.push(i as f64 * h);
            } else if !zero(b) && a * b < 0.0 {
                let (mut lo, mut hi) = (i as f64 * h, (i + 1) as f64 * h);
                let sa = a.signum();
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if eval(mid) * sa > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                breaks.push(0.5 * (lo + hi));
            }
        }
    }
    if breaks.is_empty() {
        breaks.push(0.0);
    }
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for (i, &a) in breaks.iter().enumerate() {
        let b = if i + 1 < breaks.len() { breaks[i + 1] } else { breaks[0] + 2.0 * PI };
        let len = b - a;
        if len <= 0.0 {
            continue;
        }
        let q = (((len / PI) * freq as f64).ceil() as usize + 24).next_multiple_of(16);
        let rule = cached_rule(q);
        for (x, w) in rule.0.iter().zip(&rule.1) {
            xs.push(a + 0.5 * len * (x + 1.0));
            ws.push(0.5 * len * w);
        }
    }
    (xs, ws)
}

/// Retained modes `1..=n/2-1` of an `n`-point profile, tabulated at
/// quadrature nodes.
struct Tables {
    nodes: usize,
    modes: usize,
    weights: Vec<f64>,
    cos: Vec<Vec<f64>>,
    sin: Vec<Vec<f64>>,
}

impl Tables {
    fn from_nodes(xi: &[f64], weights: Vec<f64>, modes: usize) -> Self {
        let cos = (1..=modes).map(|j| xi.iter().map(|x| (j as f64 * x).cos()).collect()).collect();
        let sin = (1..=modes).map(|j| xi.iter().map(|x| (j as f64 * x).sin()).collect()).collect();
        Self { nodes: xi.len(), modes, weights, cos, sin }
    }

    /// Uniform grid of `n` points.
    fn uniform(n: usize) -> Self {
        let xi: Vec<f64> = (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
        Self::from_nodes(&xi, vec![2.0 * PI / n as f64; n], n / 2 - 1)
    }

    /// Quadrature adapted to the kinks of `|phi'|` for cosine coefficients `a`.
    fn for_profile(a: &[f64]) -> Self {
        let n = 2 * (a.len() + 1);
        let fine = Self::uniform(16 * n);
        let d1 = fine.synth(a, true, |j| -j);
        let eval = |x: f64| a.iter().enumerate().map(|(j, c)| -c * (j + 1) as f64 * ((j + 1) as f64 * x).sin()).sum::<f64>();
        let (xi, w) = kink_quadrature(&d1, eval, 2 * n);
        Self::from_nodes(&xi, w, a.len())
    }

    /// `sum_j a_j w(j) T_j` with `T` cos or sin.
    fn synth(&self, a: &[f64], sine: bool, w: impl Fn(f64) -> f64) -> Vec<f64> {
        let tab = if sine { &self.sin } else { &self.cos };
        let mut out = vec![0.0; self.nodes];
        for (j, &aj) in a.iter().enumerate() {
            let c = aj * w((j + 1) as f64);
            if c == 0.0 {
                continue;
            }
            for (o, t) in out.iter_mut().zip(&tab[j]) {
                *o += c * t;
            }
        }
        out
    }

    fn project(&self, r: &[f64], sine: bool) -> Vec<f64> {
        let tab = if sine { &self.sin } else { &self.cos };
        let wr: Vec<f64> = r.iter().zip(&self.weights).map(|(a, b)| a * b / PI).collect();
        tab.iter().map(|row| row.iter().zip(&wr).map(|(a, b)| a * b).sum::<f64>()).collect()
    }

    fn mean(&self, r: &[f64]) -> f64 {
        r.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>() / (2.0 * PI)
    }
}

/// Samples of `phi` and `phi'`.
struct ProfileSamples {
    phi: Vec<f64>,
    d1: Vec<f64>,
}

fn sample(t: &Tables, a: &[f64]) -> ProfileSamples {
    ProfileSamples { phi: t.synth(a, false, |_| 1.0), d1: t.synth(a, true, |j| -j) }
}

fn depth(m: &ReducedModel, eta: &[f64]) -> Result<Vec<f64>, Error> {
    let nf = eta.len();
    eta.iter()
        .enumerate()
        .map(|(i, e)| {
            let h = m.h0 + e;
            if h > 0.0 {
                Ok(h)
            } else {
                Err(Error::DepthViolation { xi: 2.0 * PI * i as f64 / nf as f64 })
            }
        })
        .collect()
}

fn profile_depth(m: &ReducedModel, phi: &[f64]) -> Result<Vec<f64>, Error> {
    depth(m, &phi.iter().map(|p| m.f * p / m.g).collect::<Vec<_>>())
}

/// Sine coefficients of the steady residual
/// `d k^4 phi^(5) + b k^2 phi''' + (C + Q k |phi'|) phi' / (H0 + f phi / g)`,
/// its Jacobian in the cosine coefficients (generalised derivative
/// `sign(phi')` for the drag) and its `C`-derivative. Even profiles make the
/// residual odd, so the phase and mean-zero conditions hold by construction.
fn steady_system(a: &[f64], k: f64, c: f64, m: &ReducedModel) -> Result<(DVector<f64>, DMatrix<f64>, DVector<f64>), Error> {
    let t = &Tables::for_profile(a);
    let s = sample(t, a);
    let h = profile_depth(m, &s.phi)?;
    let (k2, k4) = (k * k, k.powi(4));
    let nf = t.nodes;
    let mut drag = vec![0.0; nf];
    let mut gd = vec![0.0; nf];
    let mut hd = vec![0.0; nf];
    let mut rc = vec![0.0; nf];
    for i in 0..nf {
        let p = s.d1[i];
        let dr = c + m.q * k * p.abs();
        drag[i] = dr * p / h[i];
        gd[i] = (c + 2.0 * m.q * k * p.abs()) / h[i];
        hd[i] = -dr * p * (m.f / m.g) / (h[i] * h[i]);
        rc[i] = p / h[i];
    }
    // the linear part is diagonal in the sine modes
    let mut f = DVector::from_vec(t.project(&drag, true));
    for j in 0..t.modes {
        let w = (j + 1) as f64;
        f[j] += (-m.d * k4 * w.powi(5) + m.b * k2 * w.powi(3)) * a[j];
    }
    let dc = DVector::from_vec(t.project(&rc, true));
    let mut jac = DMatrix::zeros(t.modes, t.modes);
    let mut col = vec![0.0; nf];
    for j in 0..t.modes {
        let w = (j + 1) as f64;
        for i in 0..nf {
            col[i] = -gd[i] * w * t.sin[j][i] + hd[i] * t.cos[j][i];
        }
        let mut v = DVector::from_vec(t.project(&col, true));
        v[j] += -m.d * k4 * w.powi(5) + m.b * k2 * w.powi(3);
        jac.set_column(j, &v);
    }
    Ok((f, jac, dc))
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |a: f64, x| a.max(x.abs()))
}

pub const STEADY_TOL: f64 = 1e-10;

/// Semismooth Newton for the steady profile at drag `c`, keeping the number
/// of modes of `init`.
pub fn reduced_steady_solve(init: &ReducedProfile, c: f64, m: &ReducedModel) -> Result<ReducedProfile, Error> {
    let mut a = DVector::from_column_slice(&init.coeffs);
    let k = init.k;
    let mut last = f64::INFINITY;
    for it in 0..50 {
        let (f, jac, _) = steady_system(a.as_slice(), k, c, m)?;
        let res = inf_norm(&f);
        // keep going past the tolerance until roundoff stalls the iteration
        if res <= 1e-14 || (res <= STEADY_TOL && res > 0.5 * last) {
            return Ok(ReducedProfile::new(a.as_slice().to_vec(), k, c));
        }
        last = res;
        let step = jac.lu().solve(&f).ok_or(Error::NoConvergence { residual: res, iterations: it })?;
        let mut lam = 1.0;
        loop {
            let trial = &a - &step * lam;
            match steady_system(trial.as_slice(), k, c, m) {
                Ok((ft, _, _)) if inf_norm(&ft) < res || lam < 1e-3 => {
                    a = trial;
                    break;
                }
                _ if lam < 1e-3 => return Err(Error::NoConvergence { residual: res, iterations: it }),
                _ => lam *= 0.5,
            }
        }
    }
    let (f, _, _) = steady_system(a.as_slice(), k, c, m)?;
    let res = inf_norm(&f);
    if res <= STEADY_TOL {
        Ok(ReducedProfile::new(a.as_slice().to_vec(), k, c))
    } else {
        Err(Error::NoConvergence { residual: res, iterations: 50 })
    }
}

/// Max-norm of the projected steady residual.
pub fn steady_residual_norm(p: &ReducedProfile, m: &ReducedModel) -> Result<f64, Error> {
    Ok(inf_norm(&steady_system(&p.coeffs, p.k, p.c, m)?.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchKind {
    GeostrophicEquilibrium,
    GravityWave,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub c: f64,
    pub profile: ReducedProfile,
    pub arclength: f64,
    pub stability: Option<StabilityReport>,
    pub kind: BranchKind,
    pub residual: f64,
}

impl BranchPoint {
    pub const CSV_HEADER: &'static str = "C,A1,norm,max_re,n_unstable";

    pub fn csv_row(&self) -> [f64; 5] {
        let (mr, nu) = match &self.stability {
            Some(s) => (s.max_re, s.n_unstable as f64),
            None => (f64::NAN, f64::NAN),
        };
        [self.c, self.profile.a1, self.profile.norm(), mr, nu]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationControl {
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub retries: usize,
    /// Stop once `C` passes this value.
    pub c_stop: f64,
    pub with_stability: bool,
}

impl Default for ContinuationControl {
    fn default() -> Self {
        Self { initial_step: 1e-2, max_step: 5e-2, min_step: 1e-6, retries: 5, c_stop: 0.0, with_stability: true }
    }
}

fn corrector(
    nm: usize,
    mut x: DVector<f64>,
    tangent: &DVector<f64>,
    anchor: &DVector<f64>,
    ds: f64,
    k: f64,
    m: &ReducedModel,
) -> Result<DVector<f64>, Error> {
    let mut last = f64::INFINITY;
    for it in 0..30 {
        let (f, jac, dc) = steady_system(&x.as_slice()[..nm], k, x[nm], m)?;
        let arc = tangent.dot(&(&x - anchor)) - ds;
        let res = inf_norm(&f).max(arc.abs());
        if res <= 1e-14 || (res <= 1e-12 && res > 0.5 * last) {
            return Ok(x);
        }
        if it > 4 && res > last {
            break;
        }
        last = res;
        let mut big = DMatrix::zeros(nm + 1, nm + 1);
        big.view_mut((0, 0), (nm, nm)).copy_from(&jac);
        big.view_mut((0, nm), (nm, 1)).copy_from(&dc);
        big.view_mut((nm, 0), (1, nm + 1)).copy_from(&tangent.transpose());
        let mut rhs = DVector::zeros(nm + 1);
        rhs.rows_mut(0, nm).copy_from(&f);
        rhs[nm] = arc;
        let step = big.lu().solve(&rhs).ok_or(Error::NoConvergence { residual: res, iterations: it })?;
        x -= step;
    }
    let (f, _, _) = steady_system(&x.as_slice()[..nm], k, x[nm], m)?;
    let res = inf_norm(&f);
    if res <= STEADY_TOL {
        Ok(x)
    } else {
        Err(Error::NoConvergence { residual: res, iterations: 30 })
    }
}

fn tangent_at(nm: usize, x: &DVector<f64>, prev: Option<&DVector<f64>>, direction: f64, k: f64, m: &ReducedModel) -> Result<DVector<f64>, Error> {
    let (_, jac, dc) = steady_system(&x.as_slice()[..nm], k, x[nm], m)?;
    let mut big = DMatrix::zeros(nm + 1, nm + 1);
    big.view_mut((0, 0), (nm, nm)).copy_from(&jac);
    big.view_mut((0, nm), (nm, 1)).copy_from(&dc);
    let mut rhs = DVector::zeros(nm + 1);
    match prev {
        Some(p) => big.view_mut((nm, 0), (1, nm + 1)).copy_from(&p.transpose()),
        None => big[(nm, nm)] = 1.0,
    }
    rhs[nm] = 1.0;
    let mut tan = big.lu().solve(&rhs).ok_or_else(|| Error::Degenerate("singular tangent system".into()))?;
    tan /= tan.norm();
    let flip = match prev {
        Some(p) => tan.dot(p) < 0.0,
        None => tan[nm] * direction < 0.0,
    };
    if flip {
        tan = -tan;
    }
    Ok(tan)
}

/// Pseudo-arclength continuation in `C` starting from a converged profile.
/// `direction` is the sign of the initial change in `C`; the run ends after
/// `n_steps` steps or on the step that crosses `ctl.c_stop`, which is then
/// solved at exactly `ctl.c_stop`.
pub fn continue_branch(
    start: &ReducedProfile,
    direction: f64,
    n_steps: usize,
    ctl: &ContinuationControl,
    m: &ReducedModel,
) -> Result<Vec<BranchPoint>, Error> {
    let nm = start.coeffs.len();
    let k = start.k;
    let start = reduced_steady_solve(start, start.c, m)?;
    let mut x = DVector::from_iterator(nm + 1, start.coeffs.iter().copied().chain([start.c]));
    let mut out = vec![make_point(&start, 0.0, ctl, m)?];
    let mut tan = tangent_at(nm, &x, None, direction, k, m)?;
    let mut ds = ctl.initial_step;
    let mut s = 0.0;
    for _ in 0..n_steps {
        let mut tries = 0;
        let next = loop {
            let pred = &x + &tan * ds;
            match corrector(nm, pred, &tan, &x, ds, k, m) {
                Ok(y) => break y,
                Err(_) if tries < ctl.retries && ds * 0.5 >= ctl.min_step => {
                    tries += 1;
                    ds *= 0.5;
                }
                Err(_) => return Err(Error::StepFailure { param: x[nm] }),
            }
        };
        let c_prev = x[nm];
        s += ds;
        let new_tan = tangent_at(nm, &next, Some(&tan), direction, k, m)?;
        x = next;
        tan = new_tan;
        if c_prev != ctl.c_stop && (x[nm] - ctl.c_stop) * (c_prev - ctl.c_stop) <= 0.0 {
            let guess = ReducedProfile::new(x.as_slice()[..nm].to_vec(), k, ctl.c_stop);
            let p = reduced_steady_solve(&guess, ctl.c_stop, m)?;
            out.push(make_point(&p, s, ctl, m)?);
            break;
        }
        let p = ReducedProfile::new(x.as_slice()[..nm].to_vec(), k, x[nm]);
        out.push(make_point(&p, s, ctl, m)?);
        if tries == 0 {
            ds = (ds * 1.5).min(ctl.max_step);
        }
    }
    Ok(out)
}

fn make_point(p: &ReducedProfile, s: f64, ctl: &ContinuationControl, m: &ReducedModel) -> Result<BranchPoint, Error> {
    let stability = if ctl.with_stability { Some(reduced_stability(p, m)?) } else { None };
    Ok(BranchPoint {
        c: p.c,
        profile: p.clone(),
        arclength: s,
        stability,
        kind: BranchKind::GeostrophicEquilibrium,
        residual: steady_residual_norm(p, m)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Sorted by decreasing real part.
    pub eigenvalues: Vec<Complex64>,
    /// Largest real part among eigenvalues away from zero.
    pub max_re: f64,
    pub n_unstable: usize,
    pub unstable_complex_pair: bool,
    /// `|L t| / |t|` for the translation direction `t` of the profile.
    pub translation_residual: f64,
    /// Eigenvalue closest to the Rayleigh quotient of the translation direction.
    pub translation_eigenvalue: Complex64,
    /// Set when `phi'` vanishes on a whole interval.
    pub degenerate: bool,
}

/// Real Fourier basis `1, cos j, sin j` for `j <= modes`, ordered
/// `[1, cos 1..cos M, sin 1..sin M]`.
struct RealBasis<'a> {
    t: &'a Tables,
}

impl RealBasis<'_> {
    fn dim(&self) -> usize {
        2 * self.t.modes + 1
    }

    /// Samples of basis function `b` and its first derivative.
    fn sample(&self, b: usize) -> (Vec<f64>, Vec<f64>) {
        let m = self.t.modes;
        if b == 0 {
            (vec![1.0; self.t.nodes], vec![0.0; self.t.nodes])
        } else if b <= m {
            let w = b as f64;
            (self.t.cos[b - 1].clone(), self.t.sin[b - 1].iter().map(|s| -w * s).collect())
        } else {
            let w = (b - m) as f64;
            (self.t.sin[b - m - 1].clone(), self.t.cos[b - m - 1].iter().map(|c| w * c).collect())
        }
    }

    fn wavenumber(&self, b: usize) -> f64 {
        if b <= self.t.modes { b as f64 } else { (b - self.t.modes) as f64 }
    }

    fn project(&self, r: &[f64]) -> Vec<f64> {
        let mut out = vec![self.t.mean(r)];
        out.extend(self.t.project(r, false));
        out.extend(self.t.project(r, true));
        out
    }
}

/// Galerkin matrix of the 1D shallow water system with drag, linearised
/// about `(u, v, eta) = (0, k phi', f phi / g)`, unknowns `(u, v, h)` each on
/// the basis `[1, cos 1..cos M, sin 1..sin M]`.
pub fn linearization(p: &ReducedProfile, m: &ReducedModel) -> Result<DMatrix<f64>, Error> {
    let t = Tables::for_profile(&p.coeffs);
    let basis = RealBasis { t: &t };
    let nb = basis.dim();
    let s = sample(&t, &p.coeffs);
    let h = profile_depth(m, &s.phi)?;
    let k = p.k;
    let nf = t.nodes;
    let v: Vec<f64> = s.d1.iter().map(|x| k * x).collect();
    let vx: Vec<f64> = t.synth(&p.coeffs, false, |j| -j * j).iter().map(|x| k * k * x).collect();
    let hx: Vec<f64> = s.d1.iter().map(|x| k * m.f / m.g * x).collect();
    let c1: Vec<f64> = (0..nf).map(|i| (p.c + m.q * v[i].abs()) / h[i]).collect();
    let c2: Vec<f64> = (0..nf).map(|i| (p.c + 2.0 * m.q * v[i].abs()) / h[i]).collect();
    let c3: Vec<f64> = (0..nf).map(|i| c1[i] * v[i] / h[i]).collect();
    let mut l = DMatrix::zeros(3 * nb, 3 * nb);
    let mut put = |row_block: usize, col: usize, vals: &[f64]| {
        for (r, x) in basis.project(vals).into_iter().enumerate() {
            l[(row_block * nb + r, col)] += x;
        }
    };
    for b in 0..nb {
        let (e, ex) = basis.sample(b);
        let w = basis.wavenumber(b) * k;
        let hyper = -m.d * w.powi(4) + m.b * w * w;
        // u perturbation
        put(0, b, &(0..nf).map(|i| (hyper - c1[i]) * e[i]).collect::<Vec<_>>());
        put(1, b, &(0..nf).map(|i| -(vx[i] + m.f) * e[i]).collect::<Vec<_>>());
        put(2, b, &(0..nf).map(|i| -(hx[i] * e[i] + h[i] * k * ex[i])).collect::<Vec<_>>());
        // v perturbation
        put(0, nb + b, &e.iter().map(|x| m.f * x).collect::<Vec<_>>());
        put(1, nb + b, &(0..nf).map(|i| (hyper - c2[i]) * e[i]).collect::<Vec<_>>());
        // h perturbation
        put(0, 2 * nb + b, &ex.iter().map(|x| -m.g * k * x).collect::<Vec<_>>());
        put(1, 2 * nb + b, &(0..nf).map(|i| c3[i] * e[i]).collect::<Vec<_>>());
    }
    Ok(l)
}

/// Eigenvalues of the 1D linearisation about a steady profile, with
/// perturbations of the same fundamental period.
pub fn reduced_stability(p: &ReducedProfile, m: &ReducedModel) -> Result<StabilityReport, Error> {
    let l = linearization(p, m)?;
    let t = Tables::for_profile(&p.coeffs);
    let nb = 2 * t.modes + 1;
    let u = Tables::uniform(16 * p.grid_size());
    let d1 = u.synth(&p.coeffs, true, |j| -j);
    let amp = d1.iter().fold(0.0, |a: f64, x| a.max(x.abs()));
    let flat: Vec<bool> = d1.iter().map(|x| x.abs() < 1e-12 * amp).collect();
    let nu = flat.len();
    let degenerate = amp > 0.0 && (0..nu).any(|i| flat[i] && flat[(i + 1) % nu] && flat[(i + 2) % nu]);
    // translation direction: d/dxi of (0, k phi', f phi / g)
    let mut tr = DVector::zeros(3 * nb);
    for (j, a) in p.coeffs.iter().enumerate() {
        let w = (j + 1) as f64;
        tr[nb + 1 + j] = -p.k * w * w * a;
        tr[2 * nb + 1 + t.modes + j] = -m.f / m.g * w * a;
    }
    let tnorm = tr.norm();
    let translation_residual = if tnorm > 0.0 { (&l * &tr).norm() / tnorm } else { 0.0 };

    let mut eig: Vec<Complex64> = l.complex_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    let translation_eigenvalue = if tnorm > 0.0 {
        let q = tr.dot(&(&l * &tr)) / (tnorm * tnorm);
        *eig.iter().min_by(|a, b| (*a - q).norm().total_cmp(&(*b - q).norm())).unwrap()
    } else {
        Complex64::new(0.0, 0.0)
    };
    let zero_tol = 1e-7;
    let nonzero: Vec<&Complex64> = eig.iter().filter(|z| z.norm() > zero_tol).collect();
    let max_re = nonzero.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let n_unstable = nonzero.iter().filter(|z| z.re > zero_tol).count();
    let unstable_complex_pair = nonzero.iter().any(|z| z.re > zero_tol && z.im > zero_tol)
        && nonzero.iter().any(|z| z.re > zero_tol && z.im < -zero_tol);
    Ok(StabilityReport {
        eigenvalues: eig,
        max_re,
        n_unstable,
        unstable_complex_pair,
        translation_residual,
        translation_eigenvalue,
        degenerate,
    })
}

/// How the surface couples to `psi` in the reduced dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SurfaceCoupling {
    /// Geostrophic balance `f psi = g d_xi eta` (needs `f != 0`).
    Geostrophic,
    /// Constant surface for `f = 0`.
    Constant(f64),
}

/// Coefficients `|j| < n/2` of an `n`-point field, zero padded to `nf` points.
fn pad(z: &[Complex64], nf: usize) -> Vec<Complex64> {
    let n = z.len();
    let mut out = vec![Complex64::new(0.0, 0.0); nf];
    for (j, c) in z.iter().enumerate() {
        let w = wavenumber(j, n);
        if 2 * w.unsigned_abs() as usize != n {
            out[index_of(w, nf)] = *c;
        }
    }
    out
}

/// Coarse coefficients of the drag `(C + Q k |psi|) psi / (H0 + eta)` on
/// the modes `|j| < n/2`, integrated with a quadrature split at the zeros of `psi`.
struct DragOperator {
    n: usize,
    fine: FftNd,
    k: f64,
    c: f64,
    coupling: SurfaceCoupling,
}

impl DragOperator {
    fn new(n: usize, k: f64, c: f64, coupling: SurfaceCoupling) -> Self {
        Self { n, fine: FftNd::new(&[16 * n]), k, c, coupling }
    }

    fn apply(&self, z: &[Complex64], m: &ReducedModel) -> Result<Vec<Complex64>, Error> {
        let n = self.n;
        let half = n / 2;
        let eta_coeffs: Vec<Complex64> = match self.coupling {
            SurfaceCoupling::Geostrophic => {
                if m.f == 0.0 {
                    return Err(Error::Param("geostrophic coupling needs f != 0".into()));
                }
                (0..half).map(|w| if w == 0 { Complex64::new(0.0, 0.0) } else { z[w] * (m.f / m.g) / Complex64::new(0.0, w as f64) }).collect()
            }
            SurfaceCoupling::Constant(e) => {
                let mut v = vec![Complex64::new(0.0, 0.0); half];
                v[0] = Complex64::new(e, 0.0);
                v
            }
        };
        // real series sum_{|w| < n/2} c_w e^{i w x}
        let series = |c: &[Complex64], x: f64| -> f64 {
            let e1 = Complex64::from_polar(1.0, x);
            let mut e = e1;
            let mut acc = 0.0;
            for cw in &c[1..half] {
                acc += 2.0 * (cw * e).re;
                e *= e1;
            }
            acc + c[0].re
        };
        let mut g = pad(z, 16 * n);
        self.fine.inverse(&mut g);
        let samples: Vec<f64> = g.iter().map(|c| c.re).collect();
        let (xi, wts) = kink_quadrature(&samples, |x| series(z, x), 2 * n);
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (x, wq) in xi.iter().zip(&wts) {
            let psi = series(z, *x);
            let h = m.h0 + series(&eta_coeffs, *x);
            if h <= 0.0 {
                return Err(Error::DepthViolation { xi: *x });
            }
            let val = wq / (2.0 * PI) * (self.c + m.q * self.k * psi.abs()) * psi / h;
            let e1 = Complex64::from_polar(1.0, -x);
            let mut e = Complex64::new(1.0, 0.0);
            for o in out.iter_mut().take(half) {
                *o += val * e;
                e *= e1;
            }
        }
        for w in 1..half {
            out[n - w] = out[w].conj();
        }
        Ok(out)
    }
}

fn hyper_symbol(j: usize, n: usize, k: f64, m: &ReducedModel) -> f64 {
    let w = wavenumber(j, n) as f64 * k;
    -m.d * w.powi(4) + m.b * w * w
}

/// Right-hand side of the reduced dynamics on grid samples of `psi`:
/// `-d k^4 psi'''' - b k^2 psi'' - (C + Q k |psi|) psi / (H0 + eta)`, the drag
/// projected onto the modes `|j| < n/2`.
pub fn reduced_rhs(psi: &[f64], coupling: SurfaceCoupling, k: f64, c: f64, m: &ReducedModel) -> Result<Vec<f64>, Error> {
    let n = psi.len();
    let fft = FftNd::new(&[n]);
    let z = fft.coeffs(psi);
    let drag = DragOperator::new(n, k, c, coupling).apply(&z, m)?;
    let mut tot: Vec<Complex64> = (0..n).map(|j| z[j] * hyper_symbol(j, n, k, m) - drag[j]).collect();
    fft.inverse(&mut tot);
    Ok(tot.iter().map(|z| z.re).collect())
}

/// Samples of `psi = phi'` for a steady profile on its own grid.
pub fn profile_to_psi(p: &ReducedProfile) -> Vec<f64> {
    Tables::uniform(p.grid_size()).synth(&p.coeffs, true, |j| -j)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_end: f64,
    pub stride: usize,
    pub k: f64,
    pub c: f64,
    pub coupling: SurfaceCoupling,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveRecord {
    pub t: f64,
    /// Modulus of the first Fourier coefficient of `psi`, equal to `|A1|` on a steady profile.
    pub a1: f64,
    pub norm: f64,
}

/// Crank-Nicolson on the linear part and Adams-Bashforth 2 on the drag.
/// With geostrophic coupling the mean of `psi` is held at zero.
pub fn reduced_time_evolve(psi0: &[f64], cfg: &EvolveConfig, m: &ReducedModel) -> Result<(Vec<f64>, Vec<EvolveRecord>), Error> {
    if !(cfg.dt > 0.0) || cfg.stride == 0 {
        return Err(Error::Param(format!("need dt > 0 and stride > 0, got dt={}, stride={}", cfg.dt, cfg.stride)));
    }
    let n = psi0.len();
    let fft = FftNd::new(&[n]);
    let drag = DragOperator::new(n, cfg.k, cfg.c, cfg.coupling);
    let geo = matches!(cfg.coupling, SurfaceCoupling::Geostrophic);
    let mut z = fft.coeffs(psi0);
    z[n / 2] = Complex64::new(0.0, 0.0);
    if geo {
        z[0] = Complex64::new(0.0, 0.0);
    }
    let lin: Vec<f64> = (0..n).map(|j| hyper_symbol(j, n, cfg.k, m)).collect();
    let h = 0.5 * cfg.dt;
    let rec = |z: &[Complex64], t: f64| EvolveRecord {
        t,
        a1: z[1].norm(),
        norm: z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt(),
    };
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let mut out = vec![rec(&z, 0.0)];
    let mut prev: Option<Vec<Complex64>> = None;
    for s in 1..=steps {
        let mut nl = drag.apply(&z, m)?;
        if geo {
            nl[0] = Complex64::new(0.0, 0.0);
        }
        for j in 0..n {
            let expl = match &prev {
                Some(p) => 1.5 * nl[j] - 0.5 * p[j],
                None => nl[j],
            };
            z[j] = (z[j] * (1.0 + h * lin[j]) - expl * cfg.dt) / (1.0 - h * lin[j]);
        }
        // the drag only sees the nonnegative modes, so keep the field real
        z[0].im = 0.0;
        for w in 1..n / 2 {
            z[n - w] = z[w].conj();
        }
        prev = Some(nl);
        let t = s as f64 * cfg.dt;
        if !z.iter().all(|c| c.re.is_finite() && c.im.is_finite()) || rec(&z, t).norm > 1e12 {
            return Err(Error::SimulationDiverged { t });
        }
        if s % cfg.stride == 0 || s == steps {
            out.push(rec(&z, t));
        }
    }
    fft.inverse(&mut z);
    Ok((z.iter().map(|c| c.re).collect(), out))
}


#[cfg(test)]
mod tests {
    use super::*;

    fn fig7() -> ReducedModel {
        ReducedModel { b: 2.0, d: 1.0, f: 0.3, g: 9.8, h0: 0.1, q: 0.05 }
    }

    #[test]
    fn expansion_prefactor() {
        let m = ReducedModel { q: 0.0, ..fig7() };
        assert!((growth_prefactor(&m).unwrap() - 0.98 / 1.07).abs() < 1e-14);
        assert_eq!(lambda_expansion(0.0, 0.0, &m).unwrap(), 0.0);
        assert!(lambda_expansion(0.16, 0.2, &m).unwrap().abs() < 1e-16);
    }

    #[test]
    fn amplitude_examples() {
        let m = ReducedModel { f: 10.0, q: 0.0, ..fig7() };
        assert!((ge_amplitude(0.1, 0.0, &m).unwrap() - 0.031889).abs() < 1e-6);
        let m = ReducedModel { q: 0.5, ..fig7() };
        assert!((ge_amplitude(0.1, 0.0, &m).unwrap() - 0.0117810).abs() < 1e-7);
        assert_eq!(ge_amplitude(0.01, 0.1, &m).unwrap(), 0.0);
        let m = ReducedModel { f: 0.0, q: 0.0, ..fig7() };
        assert!(matches!(ge_amplitude(0.1, 0.0, &m), Err(Error::VerticalBranch)));
    }

    #[test]
    fn leading_profiles() {
        let m = ReducedModel { f: 10.0, q: 0.0, ..fig7() };
        let p = ge_profile(0.03, 1.0, 0.1, &m, 31);
        assert!((p.coeffs[1] - 10.0 * 0.0009 / (9.0 * 0.98)).abs() < 1e-15);
        assert_eq!(p.a1, 0.03);
        let p = ge_profile(0.03, 1.0, 0.1, &ReducedModel { f: 0.0, q: 0.0, ..fig7() }, 31);
        assert_eq!(p.coeffs[1], 0.0);
        assert_eq!(ge_profile(0.0, 1.0, 0.1, &m, 31).norm(), 0.0);
    }

    #[test]
    fn gw_numbers() {
        let q = gw_quadratures(0.3, 9.8, 0.1, 1.0);
        assert!((q.i1 - 0.720).abs() < 3e-3 && (q.i2 - 0.174).abs() < 3e-3, "{q:?}");
        let q0 = gw_quadratures(0.3, 9.8, 0.0, 1.0);
        assert!((q0.i1 - 0.3).abs() < 1e-13 && q0.i2.abs() < 1e-13);
        let m = ReducedModel { q: 0.05, ..fig7() };
        let (a, s) = gw_amplitude_and_speed(0.01, 0.0, &m).unwrap();
        assert!((a - 0.01153).abs() < 1e-5 && s == 0.0);
        let (_, s) = gw_amplitude_and_speed(0.01, 0.01, &m).unwrap();
        assert!((s - 8.70e-4).abs() < 1e-6);
        assert_eq!(gw_amplitude_and_speed(-0.01, 0.0, &m).unwrap().0, 0.0);
        assert!(gw_amplitude_and_speed(0.01, 0.0, &ReducedModel { q: 0.0, ..m }).is_err());
    }

    #[test]
    fn steady_solve_matches_leading_order() {
        let m = fig7();
        let mut errs = Vec::new();
        for alpha in [0.01, 0.005] {
            let c = m.drag_at(alpha).unwrap();
            let a = ge_amplitude(alpha, 0.0, &m).unwrap();
            let p = reduced_steady_solve(&ge_profile(a, 1.0, c, &m, 31), c, &m).unwrap();
            assert!(steady_residual_norm(&p, &m).unwrap() <= STEADY_TOL);
            errs.push((p.a1.abs() - a).abs() / a);
        }
        assert!(errs[0] < 0.1 && errs[1] < errs[0], "{errs:?}");
    }

    #[test]
    fn trivial_branch_above_onset() {
        let m = fig7();
        let p = reduced_steady_solve(&ReducedProfile::new(vec![0.0; 31], 1.0, 0.12), 0.12, &m).unwrap();
        assert_eq!(p.norm(), 0.0);
        let st = reduced_stability(&p, &m).unwrap();
        assert!(st.max_re < 0.0, "{}", st.max_re);
    }

    #[test]
    fn rhs_linear_limit_and_fixed_points() {
        let m = ReducedModel { q: 0.0, ..fig7() };
        let n = 64;
        let k = 1.3;
        let psi: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 / n as f64).cos()).collect();
        let r = reduced_rhs(&psi, SurfaceCoupling::Constant(0.0), k, 0.0, &m).unwrap();
        let rate = m.b * k * k - m.d * k.powi(4);
        for (a, b) in r.iter().zip(&psi) {
            assert!((a - rate * b).abs() < 1e-9);
        }
        assert!(reduced_rhs(&vec![0.0; n], SurfaceCoupling::Geostrophic, k, 0.1, &m).unwrap().iter().all(|x| *x == 0.0));
        let m = fig7();
        let c = m.drag_at(0.01).unwrap();
        let p = reduced_steady_solve(&ge_profile(0.012, 1.0, c, &m, 31), c, &m).unwrap();
        let r = reduced_rhs(&profile_to_psi(&p), SurfaceCoupling::Geostrophic, 1.0, c, &m).unwrap();
        assert!(r.iter().all(|x| x.abs() < 1e-10));
    }

    #[test]
    fn stability_near_onset() {
        let m = fig7();
        let c = m.drag_at(0.01).unwrap();
        let a = ge_amplitude(0.01, 0.0, &m).unwrap();
        let p = reduced_steady_solve(&ge_profile(a, 1.0, c, &m, 31), c, &m).unwrap();
        let st = reduced_stability(&p, &m).unwrap();
        assert!(st.unstable_complex_pair, "{:?}", &st.eigenvalues[..6]);
        assert!(st.translation_eigenvalue.norm() < 1e-8, "{} {}", st.translation_eigenvalue, st.translation_residual);
        assert!(!st.degenerate);
    }

    #[test]
    fn depth_violation_is_reported() {
        let m = ReducedModel { f: 10.0, ..fig7() };
        let p = ReducedProfile::new(vec![-1.0; 3], 1.0, 0.1);
        assert!(matches!(reduced_steady_solve(&p, 0.1, &m), Err(Error::DepthViolation { .. })));
    }

    #[test]
    fn gauss_rule_is_exact_on_polynomials() {
        let (x, w) = gauss_legendre(7);
        let int = |p: i32| x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum::<f64>();
        assert!((int(0) - 2.0).abs() < 1e-14 && int(13).abs() < 1e-14);
        assert!((int(12) - 2.0 / 13.0).abs() < 1e-14);
    }

    #[test]
    fn quadratures_against_trapezoid() {
        for &(f, g, h0, k) in &[(0.3, 9.8, 0.1, 1.0), (1.0, 1.0, 1.0, 2.0), (0.05, 9.8, 0.4, 0.7)] {
            let n = 4096;
            let (mut i1, mut i2) = (0.0, 0.0);
            for j in 0..n {
                let x = 2.0 * PI * j as f64 / n as f64;
                let r = (f * f + k * k * g * h0 * x.cos() * x.cos()).sqrt();
                i1 += r / n as f64;
                i2 += r * (2.0 * x).cos() / n as f64;
            }
            let q = gw_quadratures(f, g, h0, k);
            assert!((q.i1 - i1).abs() < 1e-10 && (q.i2 - i2).abs() < 1e-10, "{q:?} {i1} {i2}");
            assert!(q.i1 > q.i2 && q.i2 > 0.0);
        }
    }

    fn branch_start(m: &ReducedModel, alpha: f64) -> ReducedProfile {
        let bp = BifParams { alpha, kappa: 0.0, model: *m };
        reduced_steady_solve(&bp.leading_profile(31).unwrap(), bp.drag().unwrap(), m).unwrap()
    }

    #[test]
    fn branch_grows_to_zero_drag() {
        let m = fig7();
        let ctl = ContinuationControl { with_stability: false, ..Default::default() };
        let br = continue_branch(&branch_start(&m, 0.01), -1.0, 400, &ctl, &m).unwrap();
        let last = br.last().unwrap();
        assert_eq!(last.c, 0.0);
        assert!(br.windows(2).all(|w| w[1].profile.a1.abs() > w[0].profile.a1.abs() && w[1].c < w[0].c));
        assert!(br.iter().all(|p| p.residual <= STEADY_TOL));
    }

    #[test]
    fn reversed_branch_retraces() {
        let m = fig7();
        let ctl = ContinuationControl { with_stability: false, c_stop: -1.0, ..Default::default() };
        let fwd = continue_branch(&branch_start(&m, 0.01), -1.0, 5, &ctl, &m).unwrap();
        let back = continue_branch(&fwd.last().unwrap().profile, 1.0, 5, &ctl, &m).unwrap();
        assert!(back.last().unwrap().c > fwd.last().unwrap().c);
        for b in &back[1..] {
            let near = fwd.iter().min_by(|x, y| (x.c - b.c).abs().total_cmp(&(y.c - b.c).abs())).unwrap();
            let again = reduced_steady_solve(&near.profile, b.c, &m).unwrap();
            let gap = again.coeffs.iter().zip(&b.profile.coeffs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(gap < 1e-8, "{gap}");
        }
    }

    #[test]
    fn amplitude_vanishes_at_sideband_threshold() {
        let m = fig7();
        let cp = m.critical().unwrap();
        let k = cp.k_c + 0.05;
        let onset = cp.C_c / m.h0 - (m.b * k * k - m.d * k.powi(4));
        let mut amps = Vec::new();
        for excess in [2e-3, 1e-3] {
            let alpha = onset + excess;
            let guess = 3.0 * PI * m.h0 * (2.0 * m.d).sqrt() / (16.0 * m.q * m.b.sqrt()) * excess;
            let c = m.drag_at(alpha).unwrap();
            let p = reduced_steady_solve(&ge_profile(guess, k, c, &m, 31), c, &m).unwrap();
            amps.push(p.a1.abs());
        }
        assert!(amps[1] > 0.0 && (amps[0] / amps[1] - 2.0).abs() < 0.1, "{amps:?}");
    }

    #[test]
    fn evolution_saturates_near_branch() {
        let m = fig7();
        let n = 64;
        let psi0: Vec<f64> = (0..n)
            .map(|i| {
                let x = 2.0 * PI * i as f64 / n as f64;
                1e-3 * (x.sin() + 0.3 * (2.0 * x).cos() + 0.1 * (3.0 * x + 1.0).sin())
            })
            .collect();
        let c = m.drag_at(0.01).unwrap();
        let cfg = EvolveConfig { dt: 0.05, t_end: 1200.0, stride: 100, k: 1.0, c, coupling: SurfaceCoupling::Geostrophic };
        let (_, rec) = reduced_time_evolve(&psi0, &cfg, &m).unwrap();
        let a = ge_amplitude(0.01, 0.0, &m).unwrap();
        assert!((rec.last().unwrap().a1 - a).abs() < 0.15 * a);

        let cfg = EvolveConfig { c: m.drag_at(-0.05).unwrap(), t_end: 100.0, ..cfg };
        let (_, rec) = reduced_time_evolve(&psi0, &cfg, &m).unwrap();
        assert!(rec.last().unwrap().norm < 1e-2 * rec[0].norm);
    }

    #[test]
    fn linear_drag_grows_exponentially() {
        let m = ReducedModel { f: 0.0, q: 0.0, ..fig7() };
        let n = 32;
        let psi0: Vec<f64> = (0..n).map(|i| 1e-3 * (2.0 * PI * i as f64 / n as f64).cos()).collect();
        let alpha = 0.05;
        let cfg = EvolveConfig { dt: 0.01, t_end: 20.0, stride: 100, k: 1.0, c: m.drag_at(alpha).unwrap(), coupling: SurfaceCoupling::Constant(0.0) };
        let (_, rec) = reduced_time_evolve(&psi0, &cfg, &m).unwrap();
        let rate = lambda_expansion(alpha, 0.0, &m).unwrap();
        let fitted = (rec.last().unwrap().a1 / rec[0].a1).ln() / 20.0;
        assert!((fitted - rate).abs() < 1e-6, "{fitted} {rate}");
    }
}
