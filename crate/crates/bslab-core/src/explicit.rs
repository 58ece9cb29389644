//! Explicit growing and steady flows of the backscatter models, their
//! existence conditions, and a spectral PDE residual check.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fft::FftNd;
use crate::poly;
use crate::types::{BackscatterParams, PhysicalParams, WaveVector};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    Euler2D,
    ShallowWater,
    /// Horizontal flows of the Boussinesq equations (a 2D incompressible model
    /// with anisotropic backscatter).
    BoussinesqHorizontal,
    /// Full 3D Boussinesq with buoyancy.
    Boussinesq,
    Primitive,
}

/// Fields `(u, v, w, s, p)` where `s` is the surface elevation for shallow
/// water and the buoyancy for Boussinesq.
pub type State = [f64; 5];

/// A flow that can be evaluated pointwise. Coordinates are `(x, y, z)`.
pub trait Flow: Sync {
    fn model(&self) -> Model;

    /// Wave vectors present in the flow, used to fit a periodic box.
    fn wave_vectors(&self) -> Vec<[f64; 3]>;

    fn state(&self, t: f64, x: [f64; 3]) -> State;

    /// Analytic time derivative, if known.
    fn d_dt(&self, _t: f64, _x: [f64; 3]) -> Option<State> {
        None
    }

    /// `(H, beta)` for flows on the bounded layer `-H <= z <= 0`.
    fn vertical_layer(&self) -> Option<(f64, f64)> {
        None
    }
}

fn add(a: &mut State, b: &State) {
    for i in 0..5 {
        a[i] += b[i];
    }
}

/// Monochromatic flow with a single wave vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneWaveFlow {
    pub model: Model,
    pub k: WaveVector,
    /// Velocity amplitude.
    pub alpha1: f64,
    /// Surface amplitude (shallow water only).
    pub alpha2: f64,
    pub tau: f64,
    /// Mean surface shift (shallow water only).
    pub s: f64,
    pub lambda: f64,
    /// Coefficient of `exp(lambda t) sin(k.x + tau)` in the pressure.
    pub pressure_amp: f64,
    pub f: f64,
    pub g: f64,
}

impl Flow for PlaneWaveFlow {
    fn model(&self) -> Model {
        self.model
    }

    fn wave_vectors(&self) -> Vec<[f64; 3]> {
        vec![[self.k.kx, self.k.ky, 0.0]]
    }

    fn state(&self, t: f64, x: [f64; 3]) -> State {
        let th = self.k.dot(x[0], x[1]) + self.tau;
        let e = (self.lambda * t).exp();
        let (sn, cs) = th.sin_cos();
        let [px, py] = self.k.perp();
        match self.model {
            Model::Euler2D => {
                let kn = self.k.norm();
                let a = self.alpha1 * e * cs / kn;
                [-a * px, -a * py, 0.0, 0.0, self.pressure_amp * e * sn]
            }
            Model::ShallowWater => {
                let a = self.alpha1 * e * cs;
                [a * px, a * py, 0.0, self.alpha2 * self.f / self.g * sn + self.s, 0.0]
            }
            _ => {
                let a = self.alpha1 * e * cs;
                [a * px, a * py, 0.0, 0.0, self.pressure_amp * e * sn]
            }
        }
    }

    fn d_dt(&self, t: f64, x: [f64; 3]) -> Option<State> {
        let mut s = self.state(t, x);
        for (i, v) in s.iter_mut().enumerate() {
            *v = if i == 3 { 0.0 } else { *v * self.lambda };
        }
        Some(s)
    }
}

/// Velocity `A e^{lambda t} cos(k.x + tau)` along the shear direction
/// `(ky, -kx)/|k|`, balanced by the pressure `-f A e^{lambda t} sin(k.x + tau)/|k|`.
pub fn euler_plane_wave(a: f64, k: WaveVector, tau: f64, b: f64, d: f64, f: f64) -> Result<PlaneWaveFlow, Error> {
    let kn = k.norm();
    if kn == 0.0 {
        return Err(Error::ZeroWaveVector);
    }
    Ok(PlaneWaveFlow {
        model: Model::Euler2D,
        k,
        alpha1: a,
        alpha2: 0.0,
        tau,
        s: 0.0,
        lambda: crate::dispersion::backscatter_symbol(kn, b, d),
        pressure_amp: -f * a / kn,
        f,
        g: 0.0,
    })
}

/// Monochromatic horizontal Boussinesq flow `alpha e^{lambda t} cos(k.x + tau) k_perp`
/// with its balancing pressure.
pub fn boussinesq_plane_wave(
    alpha: f64,
    k: WaveVector,
    tau: f64,
    bp: &BackscatterParams,
    pp: &PhysicalParams,
) -> Result<PlaneWaveFlow, Error> {
    if k.norm2() == 0.0 {
        return Err(Error::ZeroWaveVector);
    }
    Ok(PlaneWaveFlow {
        model: Model::BoussinesqHorizontal,
        k,
        alpha1: alpha,
        alpha2: 0.0,
        tau,
        s: 0.0,
        lambda: sw_growth_rate(k, bp),
        pressure_amp: alpha * (pp.f + anisotropy_coupling(k, bp)),
        f: pp.f,
        g: pp.g,
    })
}

/// `kx ky ((d1 - d2)|k|^2 + b2 - b1)`, the backscatter part of the amplitude relation.
fn anisotropy_coupling(k: WaveVector, bp: &BackscatterParams) -> f64 {
    k.kx * k.ky * ((bp.d1 - bp.d2) * k.norm2() + bp.b2 - bp.b1)
}

/// Growth rate of a monochromatic shear wave with anisotropic backscatter.
pub fn sw_growth_rate(k: WaveVector, bp: &BackscatterParams) -> f64 {
    let k2 = k.norm2();
    (bp.b1 - bp.d1 * k2) * k.ky * k.ky + (bp.b2 - bp.d2 * k2) * k.kx * k.kx
}

/// Primitive-equation mode `A e^{lambda t} cos(omega z) cos(k y) (1, 0)` on
/// the layer `-H <= z <= 0` with drag condition `u_z = beta u` at the bottom.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveMode {
    pub a: f64,
    pub k: f64,
    pub omega: f64,
    pub beta: f64,
    pub h: f64,
    pub lambda: f64,
}

impl Flow for PrimitiveMode {
    fn model(&self) -> Model {
        Model::Primitive
    }

    fn wave_vectors(&self) -> Vec<[f64; 3]> {
        vec![[0.0, self.k, 0.0]]
    }

    fn state(&self, t: f64, x: [f64; 3]) -> State {
        let u = self.a * (self.lambda * t).exp() * (self.omega * x[2]).cos() * (self.k * x[1]).cos();
        [u, 0.0, 0.0, 0.0, 0.0]
    }

    fn d_dt(&self, t: f64, x: [f64; 3]) -> Option<State> {
        let s = self.state(t, x);
        Some([s[0] * self.lambda, 0.0, 0.0, 0.0, 0.0])
    }

    fn vertical_layer(&self) -> Option<(f64, f64)> {
        Some((self.h, self.beta))
    }
}

/// Solves `beta = omega tan(omega H)` on `[0, pi/(2H))` and returns the mode
/// with rate `(b - d k^2) k^2 - nu_v omega^2`, which is `b - d - nu_v omega^2`
/// at unit wave number.
pub fn primitive_mode(a: f64, k: f64, beta: f64, h: f64, b: f64, d: f64, nu_v: f64) -> Result<PrimitiveMode, Error> {
    if !(beta >= 0.0) || !(h > 0.0) {
        return Err(Error::Param(format!("need beta >= 0 and H > 0, got beta={beta}, H={h}")));
    }
    let omega = if beta == 0.0 {
        0.0
    } else {
        let hi = PI / (2.0 * h) * (1.0 - 1e-15);
        poly::bisect(|w| w * (w * h).tan() - beta, 0.0, hi)?
    };
    let k2 = k * k;
    Ok(PrimitiveMode { a, k, omega, beta, h, lambda: (b - d * k2) * k2 - nu_v * omega * omega })
}

fn rel_scale(xs: &[f64]) -> f64 {
    xs.iter().fold(1f64, |m, x| m.max(x.abs()))
}

/// Monochromatic shallow water flow
/// `v = alpha1 e^{lambda t} cos(k.x + tau) k_perp`, `eta = alpha2 (f/g) sin(k.x + tau) + s`
/// without bottom drag. Rejects amplitudes violating the amplitude relation
/// or the compatibility `alpha2 lambda = 0`.
#[allow(clippy::too_many_arguments)]
pub fn sw_monochromatic(
    k: WaveVector,
    alpha1: f64,
    alpha2: f64,
    tau: f64,
    s: f64,
    bp: &BackscatterParams,
    pp: &PhysicalParams,
) -> Result<PlaneWaveFlow, Error> {
    if pp.C != 0.0 || pp.Q != 0.0 {
        return Err(Error::Param("monochromatic shallow water flows need C = Q = 0".into()));
    }
    if k.norm2() == 0.0 {
        return Err(Error::ZeroWaveVector);
    }
    let lambda = sw_growth_rate(k, bp);
    let coupling = anisotropy_coupling(k, bp);
    let rb = (alpha2 - alpha1) * pp.f - alpha1 * coupling;
    let scale_b = rel_scale(&[alpha1 * pp.f, alpha2 * pp.f, alpha1 * coupling]);
    if rb.abs() > 1e-12 * scale_b {
        return Err(Error::Compliance { which: "amplitude relation", residual: rb });
    }
    let rc = alpha2 * lambda;
    if rc.abs() > 1e-12 * rel_scale(&[alpha2, lambda]) {
        return Err(Error::Compliance { which: "alpha2 * lambda = 0", residual: rc });
    }
    Ok(PlaneWaveFlow {
        model: Model::ShallowWater,
        k,
        alpha1,
        alpha2,
        tau,
        s,
        lambda,
        pressure_amp: 0.0,
        f: pp.f,
        g: pp.g,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LociCell {
    pub kx: f64,
    pub ky: f64,
    pub lambda: f64,
    /// Defect of the amplitude relation for the given ratio `alpha2/alpha1`.
    pub relation_defect: f64,
    pub relation_holds: bool,
    pub steady: bool,
}

impl LociCell {
    pub fn sign(&self) -> i8 {
        if self.steady {
            0
        } else if self.lambda > 0.0 {
            1
        } else {
            -1
        }
    }
}

/// Growth sign and amplitude-relation defect on a wave-vector raster
/// (`ky` outer, `kx` inner). `tol` decides which cells count as on a curve.
pub fn sw_loci_map(
    kxs: &[f64],
    kys: &[f64],
    bp: &BackscatterParams,
    pp: &PhysicalParams,
    ratio: f64,
    tol: f64,
) -> Vec<LociCell> {
    let pts: Vec<(f64, f64)> = kys.iter().flat_map(|&ky| kxs.iter().map(move |&kx| (kx, ky))).collect();
    pts.par_iter()
        .map(|&(kx, ky)| {
            let k = WaveVector::new(kx, ky);
            let lambda = sw_growth_rate(k, bp);
            let defect = (ratio - 1.0) * pp.f - anisotropy_coupling(k, bp);
            LociCell {
                kx,
                ky,
                lambda,
                relation_defect: defect,
                relation_holds: defect.abs() <= tol,
                steady: lambda.abs() <= tol,
            }
        })
        .collect()
}

/// Wave vectors where the marginal curve `lambda = 0` meets the amplitude
/// relation for the ratio `alpha2/alpha1`, i.e. the steady monochromatic flows.
pub fn sw_steady_loci(bp: &BackscatterParams, pp: &PhysicalParams, ratio: f64) -> Vec<WaveVector> {
    // on the ray with angle th the marginal |k|^2 is explicit
    let k2_of = |th: f64| {
        let (s, c) = th.sin_cos();
        let num = bp.b1 * s * s + bp.b2 * c * c;
        let den = bp.d1 * s * s + bp.d2 * c * c;
        num / den
    };
    let defect = |th: f64| {
        let k2 = k2_of(th);
        let k = WaveVector::from_polar(k2.sqrt(), th);
        (ratio - 1.0) * pp.f - anisotropy_coupling(k, bp)
    };
    let m = 4096;
    let mut out = Vec::new();
    for i in 0..m {
        let a = 2.0 * PI * i as f64 / m as f64;
        let b = 2.0 * PI * (i + 1) as f64 / m as f64;
        if defect(a) == 0.0 {
            out.push(a);
        } else if defect(a).signum() != defect(b).signum() {
            if let Ok(th) = poly::bisect(defect, a, b) {
                out.push(th);
            }
        }
    }
    out.into_iter()
        .filter(|&th| k2_of(th) > 0.0)
        .map(|th| WaveVector::from_polar(k2_of(th).sqrt(), th))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SuperpositionKind {
    Radial,
    Angular,
}

/// One direction of an angular superposition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngularComponent {
    pub k: WaveVector,
    pub alpha: f64,
    pub tau: f64,
    pub lambda: f64,
    /// Coriolis pressure coefficient.
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperposedFlow {
    pub kind: SuperpositionKind,
    pub model: Model,
    pub radial: Vec<PlaneWaveFlow>,
    pub angular: Vec<AngularComponent>,
    pub f: f64,
}

impl Flow for SuperposedFlow {
    fn model(&self) -> Model {
        self.model
    }

    fn wave_vectors(&self) -> Vec<[f64; 3]> {
        match self.kind {
            SuperpositionKind::Radial => self.radial.iter().flat_map(|c| c.wave_vectors()).collect(),
            SuperpositionKind::Angular => self.angular.iter().map(|c| [c.k.kx, c.k.ky, 0.0]).collect(),
        }
    }

    fn state(&self, t: f64, x: [f64; 3]) -> State {
        let mut s = [0.0; 5];
        match self.kind {
            SuperpositionKind::Radial => {
                for c in &self.radial {
                    add(&mut s, &c.state(t, x));
                }
            }
            SuperpositionKind::Angular => {
                let n = self.angular.len();
                let mut amp = Vec::with_capacity(n);
                let mut sc = Vec::with_capacity(n);
                for c in &self.angular {
                    let a = c.alpha * (c.lambda * t).exp();
                    let xi = c.k.dot(x[0], x[1]) + c.tau;
                    let (sn, cs) = xi.sin_cos();
                    let [px, py] = c.k.perp();
                    s[0] += a * sn * px;
                    s[1] += a * sn * py;
                    s[4] -= self.f * c.gamma * (c.lambda * t).exp() * cs;
                    amp.push(a);
                    sc.push((sn, cs));
                }
                // pairwise pressure absorbing the gradient nonlinearity
                let mut quad = 0.0;
                for i in 0..n {
                    let k2 = self.angular[i].k.norm2();
                    for j in i + 1..n {
                        let ki = self.angular[i].k;
                        let kj = self.angular[j].k;
                        let c = (ki.kx * kj.kx + ki.ky * kj.ky) / k2;
                        let (si, ci) = sc[i];
                        let (sj, cj) = sc[j];
                        quad += k2 * amp[i] * amp[j] * (ci * cj + c * si * sj);
                    }
                }
                s[4] -= quad;
            }
        }
        s
    }

    fn d_dt(&self, t: f64, x: [f64; 3]) -> Option<State> {
        let mut s = [0.0; 5];
        match self.kind {
            SuperpositionKind::Radial => {
                for c in &self.radial {
                    add(&mut s, &c.d_dt(t, x)?);
                }
            }
            SuperpositionKind::Angular => {
                for c in &self.angular {
                    let a = c.alpha * c.lambda * (c.lambda * t).exp();
                    let sn = (c.k.dot(x[0], x[1]) + c.tau).sin();
                    let [px, py] = c.k.perp();
                    s[0] += a * sn * px;
                    s[1] += a * sn * py;
                }
            }
        }
        Some(s)
    }
}

/// Sum of monochromatic flows whose wave vectors are positive multiples of
/// one direction.
pub fn radial_superpose(components: Vec<PlaneWaveFlow>) -> Result<SuperposedFlow, Error> {
    let first = components.first().ok_or_else(|| Error::Param("no components".into()))?;
    let model = first.model;
    let dir = first.k;
    for c in &components {
        if c.model != model {
            return Err(Error::Param("components mix models".into()));
        }
        let cross = dir.kx * c.k.ky - dir.ky * c.k.kx;
        let dot = dir.kx * c.k.kx + dir.ky * c.k.ky;
        if cross.abs() > 1e-12 * dir.norm() * c.k.norm() || dot <= 0.0 {
            return Err(Error::RayViolation);
        }
    }
    let f = first.f;
    Ok(SuperposedFlow { kind: SuperpositionKind::Radial, model, radial: components, angular: Vec::new(), f })
}

/// Finite angular superposition of horizontal Boussinesq waves
/// `alpha e^{lambda t} sin(k.x + tau) k_perp` sharing one wave number.
pub fn angular_superpose(
    samples: &[(WaveVector, f64, f64)],
    bp: &BackscatterParams,
    pp: &PhysicalParams,
) -> Result<SuperposedFlow, Error> {
    let r = samples.first().ok_or_else(|| Error::Param("no samples".into()))?.0.norm();
    if r == 0.0 {
        return Err(Error::ZeroWaveVector);
    }
    let mut comps = Vec::with_capacity(samples.len());
    for &(k, alpha, tau) in samples {
        if (k.norm() - r).abs() > 1e-12 * r {
            return Err(Error::MixedRadii);
        }
        let lambda = sw_growth_rate(k, bp);
        let gamma = if pp.f != 0.0 { alpha + alpha * anisotropy_coupling(k, bp) / pp.f } else { alpha };
        comps.push(AngularComponent { k, alpha, tau, lambda, gamma });
    }
    if pp.f == 0.0 && comps.iter().any(|c| (c.alpha * anisotropy_coupling(c.k, bp)).abs() > 1e-12) {
        return Err(Error::Compliance { which: "Coriolis amplitude relation", residual: 1.0 });
    }
    Ok(SuperposedFlow {
        kind: SuperpositionKind::Angular,
        model: Model::BoussinesqHorizontal,
        radial: Vec::new(),
        angular: comps,
        f: pp.f,
    })
}

/// Kolmogorov flow `e^{lambda t} cos(kx - mz) a` with `a = alpha (0,1,0) + beta (m,0,k)`,
/// buoyancy `c e^{lambda t} cos(.)` and pressure `gamma e^{lambda t} sin(.)`.
/// Complex roots describe the real part of the complex solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KolmogorovMode {
    pub k: f64,
    pub m: f64,
    pub lambda: Complex64,
    /// `(alpha, beta, c, gamma)`
    pub coeffs: [Complex64; 4],
    /// `(delta1, delta2, delta3, delta_mu)`
    pub deltas: [f64; 4],
}

impl Flow for KolmogorovMode {
    fn model(&self) -> Model {
        Model::Boussinesq
    }

    fn wave_vectors(&self) -> Vec<[f64; 3]> {
        vec![[self.k, 0.0, -self.m]]
    }

    fn state(&self, t: f64, x: [f64; 3]) -> State {
        self.eval(t, x, false)
    }

    fn d_dt(&self, t: f64, x: [f64; 3]) -> Option<State> {
        Some(self.eval(t, x, true))
    }
}

impl KolmogorovMode {
    fn eval(&self, t: f64, x: [f64; 3], deriv: bool) -> State {
        let mut e = (self.lambda * t).exp();
        if deriv {
            e *= self.lambda;
        }
        let th = self.k * x[0] - self.m * x[2];
        let (sn, cs) = th.sin_cos();
        let [al, be, c, ga] = self.coeffs.map(|z| (z * e).re);
        [be * self.m * cs, al * cs, be * self.k * cs, c * cs, ga * sn]
    }

    /// The 4x4 coefficient matrix applied to the amplitudes.
    pub fn matrix(k: f64, m: f64, lambda: Complex64, deltas: [f64; 4], f: f64, n2: f64) -> [[Complex64; 4]; 4] {
        let z = Complex64::new(0.0, 0.0);
        let r = |x: f64| Complex64::new(x, 0.0);
        let [d1, d2, d3, dm] = deltas;
        [
            [r(-f), (lambda + d1) * m, z, r(k)],
            [lambda + d2, r(f * m), z, z],
            [z, (lambda + d3) * k, r(-1.0), r(-m)],
            [z, r(n2 * k), lambda + dm, z],
        ]
    }
}

fn det4(a: &[[Complex64; 4]; 4]) -> Complex64 {
    let m = nalgebra::Matrix4::from_fn(|i, j| a[i][j]);
    m.determinant()
}

/// All growth rates making the Kolmogorov coefficient matrix singular, with
/// a null vector for each.
pub fn kolmogorov_solve(k: f64, m: f64, bp: &BackscatterParams, pp: &PhysicalParams) -> Result<Vec<KolmogorovMode>, Error> {
    if k == 0.0 && m == 0.0 {
        return Err(Error::ZeroWaveVector);
    }
    let k2 = k * k + m * m;
    let deltas = [
        bp.d1 * k2 * k2 - bp.b1 * k2,
        bp.d2 * k2 * k2 - bp.b2 * k2,
        pp.nu_v * k2,
        pp.mu * k2,
    ];
    // det is a cubic in lambda; recover it by interpolation at four nodes
    let scale = 1.0 + deltas.iter().fold(0f64, |a, d| a.max(d.abs())) + pp.f.abs() + pp.N2.abs().sqrt();
    let nodes = [-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0].map(|x| x * scale);
    let vals: Vec<f64> = nodes
        .iter()
        .map(|&l| det4(&KolmogorovMode::matrix(k, m, Complex64::new(l, 0.0), deltas, pp.f, pp.N2)).re)
        .collect();
    let v = DMatrix::from_fn(4, 4, |i, j| (nodes[i] / scale).powi(j as i32));
    let c = v
        .lu()
        .solve(&DVector::from_column_slice(&vals))
        .ok_or_else(|| Error::NoRoot("interpolation failed".into()))?;
    // coefficients in the scaled variable lambda / scale
    let cmax = c.iter().fold(0f64, |a, x| a.max(x.abs()));
    let mut coeffs: Vec<f64> = c.iter().map(|&x| if x.abs() < 1e-13 * cmax { 0.0 } else { x }).collect();
    while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
        coeffs.pop();
    }
    let roots = poly::roots(&coeffs);
    let mut out = Vec::new();
    for z in roots {
        let lambda = z * scale;
        let lambda = if lambda.im.abs() < 1e-12 * scale { Complex64::new(lambda.re, 0.0) } else { lambda };
        let a = KolmogorovMode::matrix(k, m, lambda, deltas, pp.f, pp.N2);
        let mat = nalgebra::Matrix4::from_fn(|i, j| a[i][j]);
        let svd = mat.svd(false, true);
        let vt = svd.v_t.ok_or_else(|| Error::NoRoot("svd failed".into()))?;
        let (imin, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        let row = vt.row(imin);
        let mut v = [row[0].conj(), row[1].conj(), row[2].conj(), row[3].conj()];
        // fix the phase so the largest entry is real and positive
        let big = *v.iter().max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap()).unwrap();
        let ph = big.conj() / big.norm();
        for x in v.iter_mut() {
            *x *= ph;
        }
        out.push(KolmogorovMode { k, m, lambda, coeffs: v, deltas });
    }
    out.sort_by(|a, b| b.lambda.re.partial_cmp(&a.lambda.re).unwrap());
    Ok(out)
}

/// Scaled determinant `|det M(lambda)| / max|M|^4` of a Kolmogorov mode.
pub fn kolmogorov_determinant(mode: &KolmogorovMode, pp: &PhysicalParams) -> f64 {
    let a = KolmogorovMode::matrix(mode.k, mode.m, mode.lambda, mode.deltas, pp.f, pp.N2);
    let big = a.iter().flatten().fold(0f64, |x, z| x.max(z.norm())).max(1e-300);
    det4(&a).norm() / big.powi(4)
}

/// Internal gravity wave with phase `kx + mz - omega t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IGWMode {
    pub k: f64,
    pub m: f64,
    pub omega: f64,
    pub lambda: f64,
    /// `(alpha1, alpha2, beta1, beta2, gamma1, gamma2)`
    pub amps: [f64; 6],
}

impl IGWMode {
    fn eval(&self, t: f64, x: [f64; 3], deriv: bool) -> State {
        let xi = self.k * x[0] + self.m * x[2] - self.omega * t;
        let (sn, cs) = xi.sin_cos();
        let e = (self.lambda * t).exp();
        let w = self.omega;
        let [a1, a2, b1, b2, g1, g2] = self.amps;
        // value and time derivative of e^{lt}(p sin + q cos)
        let h = |p: f64, q: f64| {
            if deriv {
                e * (self.lambda * (p * sn + q * cs) - w * (p * cs - q * sn))
            } else {
                e * (p * sn + q * cs)
            }
        };
        let shear = h(0.0, a2 * w);
        [-self.m * shear, h(a1, 0.0), self.k * shear, h(b1, b2 * w), h(g2 * w, g1)]
    }
}

impl Flow for IGWMode {
    fn model(&self) -> Model {
        Model::Boussinesq
    }

    fn wave_vectors(&self) -> Vec<[f64; 3]> {
        vec![[self.k, 0.0, self.m]]
    }

    fn state(&self, t: f64, x: [f64; 3]) -> State {
        self.eval(t, x, false)
    }

    fn d_dt(&self, t: f64, x: [f64; 3]) -> Option<State> {
        Some(self.eval(t, x, true))
    }
}

/// Inertial wave with `omega = sign * f`, `k = 0` and `alpha1 = -alpha2 m f`.
pub fn igw_special(m: f64, sign: f64, bp: &BackscatterParams, pp: &PhysicalParams) -> Result<IGWMode, Error> {
    if bp.d1 != bp.d2 || bp.b1 != bp.b2 {
        return Err(Error::Param("the inertial wave needs d1 = d2 and b1 = b2".into()));
    }
    if pp.f == 0.0 || m == 0.0 || sign.abs() != 1.0 {
        return Err(Error::Param("the inertial wave needs f != 0, m != 0 and sign = +-1".into()));
    }
    let alpha2 = 1.0;
    Ok(IGWMode {
        k: 0.0,
        m,
        omega: sign * pp.f,
        lambda: (bp.b2 - bp.d2 * m * m) * m * m,
        amps: [-alpha2 * m * pp.f, alpha2, 0.0, 0.0, 0.0, 0.0],
    })
}

/// The linear existence system of internal gravity waves, assembled by
/// substituting unit amplitudes into the Boussinesq residual and projecting
/// each equation onto `sin xi` and `cos xi`.
#[derive(Clone, Debug)]
pub struct IGWSystem {
    /// 8 x 6: rows (x, y, z momentum, buoyancy) x (sin, cos).
    pub matrix: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    /// Orthonormal basis of the numerical null space.
    pub null_space: Vec<[f64; 6]>,
}

pub fn igw_assemble(
    k: f64,
    m: f64,
    omega: f64,
    lambda: f64,
    bp: &BackscatterParams,
    pp: &PhysicalParams,
) -> Result<IGWSystem, Error> {
    if omega == 0.0 {
        return Err(Error::Param("omega must be nonzero".into()));
    }
    if k == 0.0 && m == 0.0 {
        return Err(Error::ZeroWaveVector);
    }
    let n = 16;
    let mut mat = DMatrix::<f64>::zeros(8, 6);
    for j in 0..6 {
        let mut amps = [0.0; 6];
        amps[j] = 1.0;
        let mode = IGWMode { k, m, omega, lambda, amps };
        let grid = ResidualGrid::for_flow(&mode, n)?;
        let res = grid.residual_fields(&mode, bp, pp, 0.0);
        // project onto sin(xi), cos(xi) at t = 0
        for eq in 0..4 {
            let (mut ps, mut pc) = (0.0, 0.0);
            for (p, r) in grid.points.iter().zip(&res[eq]) {
                let xi = k * p[0] + m * p[2];
                ps += r * xi.sin();
                pc += r * xi.cos();
            }
            let np = grid.points.len() as f64;
            mat[(2 * eq, j)] = 2.0 * ps / np;
            mat[(2 * eq + 1, j)] = 2.0 * pc / np;
        }
    }
    let svd = mat.clone().svd(false, true);
    let vt = svd.v_t.clone().unwrap();
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let smax = sv.iter().fold(0f64, |a, &b| a.max(b)).max(1e-300);
    let mut null_space = Vec::new();
    for (i, &s) in sv.iter().enumerate() {
        if s <= 1e-10 * smax {
            let r = vt.row(i);
            null_space.push([r[0], r[1], r[2], r[3], r[4], r[5]]);
        }
    }
    // nalgebra returns min(8, 6) = 6 singular values, so every direction is covered
    Ok(IGWSystem { matrix: mat, singular_values: sv, null_space })
}

impl IGWSystem {
    pub fn modes(&self, k: f64, m: f64, omega: f64, lambda: f64) -> Vec<IGWMode> {
        self.null_space.iter().map(|&amps| IGWMode { k, m, omega, lambda, amps }).collect()
    }
}

/// One horizontal Fourier mode of a parallel flow:
/// `w = wc cos(k.x) + ws sin(k.x)` and likewise for the buoyancy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParallelMode {
    pub k: WaveVector,
    pub w: [f64; 2],
    pub b: [f64; 2],
}

/// Vertical flow `w(t, x, y) e3` with buoyancy `b(t, x, y)` and zero pressure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParallelFlow {
    pub modes: Vec<ParallelMode>,
    pub nu_v: f64,
    pub mu: f64,
    pub n2: f64,
}

/// `exp(M t)` of a real 2x2 matrix.
pub fn expm2(m: [[f64; 2]; 2], t: f64) -> [[f64; 2]; 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let half = 0.5 * tr;
    let s = Complex64::new(half * half - det, 0.0).sqrt();
    let st = s * t;
    let ch = st.cosh().re;
    // sinh(st)/s, with the limit t at s = 0
    let sh = if s.norm() * t.abs() < 1e-8 { t } else { (st.sinh() / s).re };
    let e = (half * t).exp();
    [
        [e * (ch + sh * (m[0][0] - half)), e * sh * m[0][1]],
        [e * sh * m[1][0], e * (ch + sh * (m[1][1] - half))],
    ]
}

impl ParallelFlow {
    fn block(&self, k: WaveVector) -> [[f64; 2]; 2] {
        let k2 = k.norm2();
        [[-self.nu_v * k2, 1.0], [-self.n2, -self.mu * k2]]
    }

    fn mode_values(&self, t: f64) -> Vec<([f64; 2], [f64; 2])> {
        self.modes
            .iter()
            .map(|md| {
                let e = expm2(self.block(md.k), t);
                let c = [e[0][0] * md.w[0] + e[0][1] * md.b[0], e[1][0] * md.w[0] + e[1][1] * md.b[0]];
                let s = [e[0][0] * md.w[1] + e[0][1] * md.b[1], e[1][0] * md.w[1] + e[1][1] * md.b[1]];
                (c, s)
            })
            .collect()
    }
}

impl Flow for ParallelFlow {
    fn model(&self) -> Model {
        Model::Boussinesq
    }

    fn wave_vectors(&self) -> Vec<[f64; 3]> {
        self.modes.iter().map(|m| [m.k.kx, m.k.ky, 0.0]).collect()
    }

    fn state(&self, t: f64, x: [f64; 3]) -> State {
        let mut s = [0.0; 5];
        for (md, (c, sn)) in self.modes.iter().zip(self.mode_values(t)) {
            let (si, co) = md.k.dot(x[0], x[1]).sin_cos();
            s[2] += c[0] * co + sn[0] * si;
            s[3] += c[1] * co + sn[1] * si;
        }
        s
    }

    fn d_dt(&self, t: f64, x: [f64; 3]) -> Option<State> {
        let mut s = [0.0; 5];
        for (md, (c, sn)) in self.modes.iter().zip(self.mode_values(t)) {
            let b = self.block(md.k);
            let dc = [b[0][0] * c[0] + b[0][1] * c[1], b[1][0] * c[0] + b[1][1] * c[1]];
            let ds = [b[0][0] * sn[0] + b[0][1] * sn[1], b[1][0] * sn[0] + b[1][1] * sn[1]];
            let (si, co) = md.k.dot(x[0], x[1]).sin_cos();
            s[2] += dc[0] * co + ds[0] * si;
            s[3] += dc[1] * co + ds[1] * si;
        }
        Some(s)
    }
}

/// Mode-wise exact evolution of vertical velocity and buoyancy profiles.
pub fn parallel_flow(modes: Vec<ParallelMode>, pp: &PhysicalParams) -> ParallelFlow {
    ParallelFlow { modes, nu_v: pp.nu_v, mu: pp.mu, n2: pp.N2 }
}

/// Pointwise sum of Boussinesq flows.
pub struct FlowSum<'a> {
    pub parts: Vec<&'a dyn Flow>,
}

impl Flow for FlowSum<'_> {
    fn model(&self) -> Model {
        Model::Boussinesq
    }

    fn wave_vectors(&self) -> Vec<[f64; 3]> {
        self.parts.iter().flat_map(|p| p.wave_vectors()).collect()
    }

    fn state(&self, t: f64, x: [f64; 3]) -> State {
        let mut s = [0.0; 5];
        for p in &self.parts {
            add(&mut s, &p.state(t, x));
        }
        s
    }

    fn d_dt(&self, t: f64, x: [f64; 3]) -> Option<State> {
        let mut s = [0.0; 5];
        for p in &self.parts {
            add(&mut s, &p.d_dt(t, x)?);
        }
        Some(s)
    }
}

/// Smallest period along one axis that fits all given wave numbers.
fn axis_length(ks: &[f64]) -> Result<Option<f64>, Error> {
    let nz: Vec<f64> = ks.iter().map(|k| k.abs()).filter(|&k| k > 1e-14).collect();
    let Some(kmin) = nz.iter().copied().reduce(f64::min) else {
        return Ok(None);
    };
    for q in 1..=64 {
        let base = kmin / q as f64;
        if nz.iter().all(|k| {
            let r = k / base;
            (r - r.round()).abs() < 1e-9 * r.max(1.0)
        }) {
            return Ok(Some(2.0 * PI / base));
        }
    }
    Err(Error::NoPeriodicBox)
}

/// Grid on a periodic box fitted to a flow; inactive axes get one point.
pub struct ResidualGrid {
    pub dims: [usize; 3],
    pub lengths: [f64; 3],
    pub points: Vec<[f64; 3]>,
    fft: FftNd,
}

impl ResidualGrid {
    pub fn for_flow(flow: &dyn Flow, n: usize) -> Result<Self, Error> {
        let wv = flow.wave_vectors();
        let mut dims = [1usize; 3];
        let mut lengths = [2.0 * PI; 3];
        for a in 0..3 {
            let ks: Vec<f64> = wv.iter().map(|k| k[a]).collect();
            if let Some(l) = axis_length(&ks)? {
                dims[a] = n;
                lengths[a] = l;
            }
        }
        let mut points = Vec::with_capacity(dims.iter().product());
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                for l in 0..dims[2] {
                    points.push([
                        lengths[0] * i as f64 / dims[0] as f64,
                        lengths[1] * j as f64 / dims[1] as f64,
                        lengths[2] * l as f64 / dims[2] as f64,
                    ]);
                }
            }
        }
        Ok(Self { dims, lengths, points, fft: FftNd::new(&dims) })
    }

    fn sample(&self, flow: &dyn Flow, t: f64) -> (Vec<State>, Vec<State>) {
        let vals: Vec<State> = self.points.par_iter().map(|&p| flow.state(t, p)).collect();
        let ddt: Vec<State> = self
            .points
            .par_iter()
            .map(|&p| {
                flow.d_dt(t, p).unwrap_or_else(|| {
                    let h = 1e-6;
                    let a = flow.state(t + h, p);
                    let b = flow.state(t - h, p);
                    std::array::from_fn(|i| (a[i] - b[i]) / (2.0 * h))
                })
            })
            .collect();
        (vals, ddt)
    }

    fn component(vals: &[State], i: usize) -> Vec<f64> {
        vals.iter().map(|s| s[i]).collect()
    }

    /// Residual fields of the model equations; for the incompressible models
    /// the last entry is the divergence.
    pub fn residual_fields(&self, flow: &dyn Flow, bp: &BackscatterParams, pp: &PhysicalParams, t: f64) -> Vec<Vec<f64>> {
        let (vals, ddt) = self.sample(flow, t);
        let l = &self.lengths;
        let comps: Vec<Vec<f64>> = (0..5).map(|i| Self::component(&vals, i)).collect();
        let coeffs: Vec<_> = comps.iter().map(|c| self.fft.coeffs(c)).collect();
        let d = |i: usize, o: [u32; 3]| self.fft.derivative_of(&coeffs[i], &o, l);
        let lap = |i: usize, p: i32| self.fft.laplacian_of(&coeffs[i], p, l);
        let grad = |i: usize| [d(i, [1, 0, 0]), d(i, [0, 1, 0]), d(i, [0, 0, 1])];
        let np = self.points.len();
        let gu = grad(0);
        let gv = grad(1);
        let gs = grad(3);
        let (u, v, w, s) = (&comps[0], &comps[1], &comps[2], &comps[3]);
        let lu = lap(0, 1);
        let lv = lap(1, 1);
        let bu = lap(0, 2);
        let bv = lap(1, 2);
        match flow.model() {
            Model::ShallowWater => {
                let mut ru = vec![0.0; np];
                let mut rv = vec![0.0; np];
                let mut rh = vec![0.0; np];
                for i in 0..np {
                    let sp = (u[i] * u[i] + v[i] * v[i]).sqrt();
                    let drag = (pp.C + pp.Q * sp) / (pp.H0 + s[i]);
                    ru[i] = ddt[i][0] + u[i] * gu[0][i] + v[i] * gu[1][i] - pp.f * v[i]
                        + pp.g * gs[0][i]
                        + bp.d1 * bu[i]
                        + bp.b1 * lu[i]
                        + drag * u[i];
                    rv[i] = ddt[i][1] + u[i] * gv[0][i] + v[i] * gv[1][i] + pp.f * u[i]
                        + pp.g * gs[1][i]
                        + bp.d2 * bv[i]
                        + bp.b2 * lv[i]
                        + drag * v[i];
                    rh[i] = ddt[i][3] + u[i] * gs[0][i] + v[i] * gs[1][i]
                        + (pp.H0 + s[i]) * (gu[0][i] + gv[1][i]);
                }
                vec![ru, rv, rh]
            }
            _ => {
                let gw = grad(2);
                let gp = grad(4);
                let lw = lap(2, 1);
                let ls = lap(3, 1);
                let mut r = vec![vec![0.0; np]; 5];
                for i in 0..np {
                    let adv = |g: &[Vec<f64>; 3]| u[i] * g[0][i] + v[i] * g[1][i] + w[i] * g[2][i];
                    r[0][i] = ddt[i][0] + adv(&gu) - pp.f * v[i] + gp[0][i] + bp.d1 * bu[i] + bp.b1 * lu[i];
                    r[1][i] = ddt[i][1] + adv(&gv) + pp.f * u[i] + gp[1][i] + bp.d2 * bv[i] + bp.b2 * lv[i];
                    r[2][i] = ddt[i][2] + adv(&gw) + gp[2][i] - s[i] - pp.nu_v * lw[i];
                    r[3][i] = ddt[i][3] + adv(&gs) + pp.N2 * w[i] - pp.mu * ls[i];
                    r[4][i] = gu[0][i] + gv[1][i] + gw[2][i];
                }
                r
            }
        }
    }
}

fn rms(xs: &[f64]) -> f64 {
    (xs.iter().map(|x| x * x).sum::<f64>() / xs.len().max(1) as f64).sqrt()
}

/// Chebyshev points on `[-1, 1]` (descending) and the differentiation matrix.
fn cheb(n: usize) -> (Vec<f64>, DMatrix<f64>) {
    let x: Vec<f64> = (0..=n).map(|j| (PI * j as f64 / n as f64).cos()).collect();
    let c = |j: usize| (if j == 0 || j == n { 2.0 } else { 1.0 }) * if j % 2 == 0 { 1.0 } else { -1.0 };
    let mut d = DMatrix::<f64>::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[(i, j)] = c(i) / c(j) / (x[i] - x[j]);
            }
        }
    }
    for i in 0..=n {
        let s: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    (x, d)
}

fn primitive_residual(flow: &dyn Flow, h: f64, beta: f64, bp: &BackscatterParams, pp: &PhysicalParams, n: usize, t: f64) -> Result<f64, Error> {
    let wv = flow.wave_vectors();
    let ly = axis_length(&wv.iter().map(|k| k[1]).collect::<Vec<_>>())?.unwrap_or(2.0 * PI);
    let ny = n;
    let nzc = 32;
    let (xc, dx) = cheb(nzc);
    let zs: Vec<f64> = xc.iter().map(|&x| (x - 1.0) * h / 2.0).collect();
    let dz = dx * (2.0 / h);
    let dz2 = &dz * &dz;
    let fy = FftNd::new(&[ny]);
    let mut uval = vec![vec![0.0; zs.len()]; ny];
    let mut vval = vec![vec![0.0; zs.len()]; ny];
    let mut udt = vec![vec![0.0; zs.len()]; ny];
    for iy in 0..ny {
        let y = ly * iy as f64 / ny as f64;
        for (iz, &z) in zs.iter().enumerate() {
            let p = [0.0, y, z];
            let s = flow.state(t, p);
            uval[iy][iz] = s[0];
            vval[iy][iz] = s[1];
            udt[iy][iz] = flow.d_dt(t, p).map(|d| d[0]).unwrap_or_else(|| {
                let e = 1e-6;
                (flow.state(t + e, p)[0] - flow.state(t - e, p)[0]) / (2.0 * e)
            });
        }
    }
    let mut interior = Vec::new();
    let mut bc = Vec::new();
    let mut all_u = Vec::new();
    for iz in 0..zs.len() {
        let col: Vec<f64> = (0..ny).map(|iy| uval[iy][iz]).collect();
        let c = fy.coeffs(&col);
        let uyy = fy.derivative_of(&c, &[2], &[ly]);
        let uyyyy = fy.derivative_of(&c, &[4], &[ly]);
        for iy in 0..ny {
            let uzz: f64 = (0..zs.len()).map(|j| dz2[(iz, j)] * uval[iy][j]).sum();
            // B u = -(d1 d_y^4 + b1 d_y^2) u for a flow depending on y only horizontally
            let r = udt[iy][iz] + bp.d1 * uyyyy[iy] + bp.b1 * uyy[iy] - pp.nu_v * uzz - pp.f * vval[iy][iz];
            interior.push(r);
            interior.push(pp.f * uval[iy][iz]);
            all_u.push(uval[iy][iz]);
        }
    }
    let top = 0;
    let bottom = zs.len() - 1;
    for iy in 0..ny {
        let uz = |iz: usize| (0..zs.len()).map(|j| dz[(iz, j)] * uval[iy][j]).sum::<f64>();
        bc.push(uz(top));
        bc.push(uz(bottom) - beta * uval[iy][bottom]);
    }
    let scale = rms(&all_u).max(1e-300);
    Ok((rms(&interior).powi(2) + rms(&bc).powi(2)).sqrt() / scale)
}

/// Relative residual `||d_t(flow) - RHS(flow)|| / ||flow||` of the model
/// equations on an `n`-point-per-axis periodic grid at time `t`. Spatial
/// derivatives are spectral; the time derivative is analytic when the flow
/// provides it and a central difference with step `1e-6` otherwise.
pub fn verify_residual(
    flow: &dyn Flow,
    bp: &BackscatterParams,
    pp: &PhysicalParams,
    n: usize,
    t: f64,
) -> Result<f64, Error> {
    if let Some((h, beta)) = flow.vertical_layer() {
        return primitive_residual(flow, h, beta, bp, pp, n, t);
    }
    let grid = ResidualGrid::for_flow(flow, n)?;
    let res = grid.residual_fields(flow, bp, pp, t);
    let (vals, _) = grid.sample(flow, t);
    let dynamic: Vec<f64> = vals.iter().flat_map(|s| [s[0], s[1], s[2], s[3]]).collect();
    let num: f64 = res.iter().map(|r| rms(r).powi(2)).sum::<f64>().sqrt();
    let den = (rms(&dynamic).powi(2) * 4.0).sqrt().max(1e-300);
    Ok(num / den)
}

/// A reference flow together with a copy whose amplitude is off by 1%.
pub struct CatalogEntry {
    pub name: &'static str,
    pub flow: Box<dyn Flow + Send>,
    pub corrupted: Box<dyn Flow + Send>,
    pub bp: BackscatterParams,
    pub pp: PhysicalParams,
    /// Time at which residuals are evaluated.
    pub t: f64,
}

impl CatalogEntry {
    /// Residuals of the flow and of its corrupted copy.
    pub fn residuals(&self, n: usize) -> (f64, f64) {
        let r = |f: &dyn Flow| verify_residual(f, &self.bp, &self.pp, n, self.t).unwrap_or(f64::INFINITY);
        (r(self.flow.as_ref()), r(self.corrupted.as_ref()))
    }
}

fn entry<F: Flow + Clone + Send + 'static>(
    name: &'static str,
    flow: F,
    corrupt: impl FnOnce(&mut F),
    bp: BackscatterParams,
    pp: PhysicalParams,
    t: f64,
) -> CatalogEntry {
    let mut bad = flow.clone();
    corrupt(&mut bad);
    CatalogEntry { name, flow: Box::new(flow), corrupted: Box::new(bad), bp, pp, t }
}

/// One instance of every constructor, at parameters where each applies.
pub fn catalog() -> Result<Vec<CatalogEntry>, Error> {
    let mut out = Vec::new();
    let bump = 1.01;

    let bp = BackscatterParams::isotropic(0.0015, 0.001);
    let pp = PhysicalParams { f: 0.3, ..Default::default() };
    let w = euler_plane_wave(1.0, WaveVector::new(1.0, 2.0), 0.4, bp.b1, bp.d1, pp.f)?;
    out.push(entry("euler", w, |f| f.alpha1 *= bump, bp, pp, 3.0));

    let aniso = BackscatterParams { b1: 1.5, b2: 2.2, d1: 1.0, d2: 1.04 };
    let sw = PhysicalParams { f: 0.3, g: 9.8, H0: 0.1, ..Default::default() };
    let w = boussinesq_plane_wave(0.8, WaveVector::new(1.0, 1.0), 0.3, &aniso, &sw)?;
    out.push(entry("boussinesq", w, |f| f.alpha1 *= bump, aniso, sw, 0.5));

    if let Some(&k) = sw_steady_loci(&aniso, &sw, -0.5).first() {
        let w = sw_monochromatic(k, 1.0, -0.5, 0.2, 0.01, &aniso, &sw)?;
        out.push(entry("shallow water steady", w, |f| f.alpha1 *= bump, aniso, sw, 0.5));
    }
    let iso = BackscatterParams::isotropic(2.0, 1.0);
    let sw0 = PhysicalParams { f: 0.0, ..sw };
    let w = sw_monochromatic(WaveVector::new(1.0, 0.0), 1.0, 0.0, 0.0, 0.0, &iso, &sw0)?;
    out.push(entry("shallow water growing", w, |f| f.lambda *= bump, iso, sw0, 0.7));

    let bpp = BackscatterParams::isotropic(1.5, 1.0);
    let ppp = PhysicalParams { nu_v: 1.0, ..Default::default() };
    let m = primitive_mode(1.0, 1.0, 1.0, 1.0, 1.5, 1.0, 1.0)?;
    out.push(entry("primitive", m, |f| f.omega *= bump, bpp, ppp, 0.5));

    let bpr = BackscatterParams::isotropic(0.3, 0.1);
    let ppr = PhysicalParams { f: 0.5, ..Default::default() };
    let s = radial_superpose(vec![
        euler_plane_wave(1.0, WaveVector::new(0.0, 1.0), 0.0, bpr.b1, bpr.d1, ppr.f)?,
        euler_plane_wave(0.4, WaveVector::new(0.0, 2.0), 1.0, bpr.b1, bpr.d1, ppr.f)?,
    ])?;
    out.push(entry("radial superposition", s, |f| f.radial[1].alpha1 *= bump, bpr, ppr, 1.0));

    let bpa = BackscatterParams { b1: 1.1, ..aniso };
    let samples: Vec<(WaveVector, f64, f64)> = [(5.0, 0.0), (3.0, 4.0), (4.0, -3.0), (0.0, 5.0), (-4.0, 3.0)]
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| (WaveVector::new(x, y), 0.1 * (i + 1) as f64, 0.3 * i as f64))
        .collect();
    let s = angular_superpose(&samples, &bpa, &sw)?;
    out.push(entry("angular superposition", s, |f| f.angular[1].alpha *= bump, bpa, sw, 1e-3));

    let ppk = PhysicalParams { f: 0.3, N2: 1.0, nu_v: 0.2, ..Default::default() };
    for md in kolmogorov_solve(0.6, 0.5, &aniso, &ppk)? {
        out.push(entry("kolmogorov", md, |f| f.coeffs[0] *= bump, aniso, ppk, 0.0));
    }

    let bpi = BackscatterParams::isotropic(2.2, 1.04);
    let ppi = PhysicalParams { f: 0.3, N2: 1.0, nu_v: 0.1, mu: 0.05, ..Default::default() };
    let w = igw_special(1.0, 1.0, &bpi, &ppi)?;
    let (omega, lambda) = (w.omega, w.lambda);
    out.push(entry("internal gravity wave", w, |f| f.amps[0] *= bump, bpi, ppi, 0.2));
    for md in igw_assemble(0.0, 1.0, omega, lambda, &bpi, &ppi)?.modes(0.0, 1.0, omega, lambda) {
        let big = (0..6).max_by(|&a, &b| md.amps[a].abs().total_cmp(&md.amps[b].abs())).unwrap_or(0);
        out.push(entry("assembled gravity wave", md, |f| f.amps[big] *= bump, bpi, ppi, 0.2));
    }

    let ppf = PhysicalParams { f: 0.3, N2: 1.0, nu_v: 0.2, mu: 0.1, ..Default::default() };
    let pf = parallel_flow(vec![ParallelMode { k: WaveVector::new(1.0, 1.0), w: [0.3, 0.1], b: [0.2, -0.4] }], &ppf);
    out.push(entry("parallel", pf, |f| f.n2 *= bump, iso, ppf, 0.5));
    Ok(out)
}
