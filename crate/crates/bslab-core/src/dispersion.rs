//! Linear spectra: the backscatter symbol, the projected 2D Euler operator and
//! the rotating shallow water dispersion cubic.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::poly::cubic_roots;
use crate::types::{BackscatterParams, PhysicalParams, WaveVector};
use crate::Error;

/// Growth rate `b k^2 - d k^4` of a Fourier mode with wave number `k`.
pub fn backscatter_symbol(k: f64, b: f64, d: f64) -> f64 {
    let k2 = k * k;
    b * k2 - d * k2 * k2
}

#[derive(Clone, Debug)]
pub struct EulerEigen {
    pub eigenvalues: [Complex64; 2],
    /// Unit eigenvectors; a single vector when the operator is defective.
    pub eigenvectors: Vec<[f64; 2]>,
}

/// Eigen-decomposition of the Fourier-transformed 2D Euler operator
/// `(b|k|^2 - d|k|^4) I - f P J` with Leray projector `P` and quarter turn `J`.
pub fn euler_linear_eigs(k: WaveVector, b: f64, d: f64, f: f64) -> Result<EulerEigen, Error> {
    let k2 = k.norm2();
    if k2 == 0.0 {
        return Err(Error::ZeroWaveVector);
    }
    let (kx, ky) = (k.kx, k.ky);
    let p = [[1.0 - kx * kx / k2, kx * ky / k2], [kx * ky / k2, 1.0 - ky * ky / k2]];
    // P J with J = [[0, -1], [1, 0]]
    let pj = [[p[0][1], -p[0][0]], [p[1][1], -p[1][0]]];
    let s = backscatter_symbol(k.norm(), b, d);
    let m = [[s - f * pj[0][0], -f * pj[0][1]], [-f * pj[1][0], s - f * pj[1][1]]];
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = Complex64::new(0.25 * tr * tr - det, 0.0).sqrt();
    let half = Complex64::new(0.5 * tr, 0.0);
    let kn = k.norm();
    // shear direction (ky, -kx)/|k| lies in the kernel of P J
    let shear = [ky / kn, -kx / kn];
    let eigenvectors = if f == 0.0 { vec![shear, [kx / kn, ky / kn]] } else { vec![shear] };
    Ok(EulerEigen { eigenvalues: [half + disc, half - disc], eigenvectors })
}

/// Coefficients of `lambda^3 + a1 lambda^2 + a2 lambda + a3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionCoeffs {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

pub fn sw_dispersion_coeffs(k: WaveVector, bp: &BackscatterParams, pp: &PhysicalParams) -> DispersionCoeffs {
    let k2 = k.norm2();
    let k4 = k2 * k2;
    let r = pp.C / pp.H0;
    let a1 = (bp.d1 + bp.d2) * k4 - (bp.b1 + bp.b2) * k2 + 2.0 * r;
    let a2 = (bp.d1 * k4 - bp.b1 * k2 + r) * (bp.d2 * k4 - bp.b2 * k2 + r) + pp.g * pp.H0 * k2 + pp.f * pp.f;
    let a3 = pp.g
        * pp.H0
        * k2
        * ((bp.d1 * k2 - bp.b1) * k.ky * k.ky + (bp.d2 * k2 - bp.b2) * k.kx * k.kx + r);
    DispersionCoeffs { a1, a2, a3 }
}

/// Routh-Hurwitz classification. The critical cases are flags because the
/// isotropic threshold has a zero root and an imaginary pair at once.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilityClass {
    pub stable: bool,
    pub zero_root: bool,
    pub hopf: bool,
    pub unstable: bool,
}

impl StabilityClass {
    pub fn from_coeffs(c: &DispersionCoeffs) -> Self {
        let tol3 = 1e-12 * 1f64.max(c.a1.abs()).max(c.a2.abs());
        let h = c.a1 * c.a2 - c.a3;
        let tolh = 1e-12 * 1f64.max((c.a1 * c.a2).abs()).max(c.a3.abs());
        let zero_root = c.a3.abs() <= tol3;
        let hopf = h.abs() <= tolh && c.a2 > 0.0;
        let stable = !zero_root && !hopf && c.a1 > 0.0 && c.a3 > 0.0 && h > 0.0;
        let unstable = !stable && !zero_root && !hopf;
        Self { stable, zero_root, hopf, unstable }
    }

    pub fn label(&self) -> String {
        if self.stable {
            return "stable".into();
        }
        if self.unstable {
            return "unstable".into();
        }
        let mut parts = Vec::new();
        if self.zero_root {
            parts.push("zero_root");
        }
        if self.hopf {
            parts.push("hopf");
        }
        parts.join("+")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DispersionResult {
    /// Sorted by decreasing real part, then decreasing imaginary part.
    pub roots: [Complex64; 3],
    pub class: StabilityClass,
    pub k: WaveVector,
    pub coeffs: DispersionCoeffs,
}

impl DispersionResult {
    pub fn max_re(&self) -> f64 {
        self.roots.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn sort_roots(r: &mut [Complex64; 3]) {
    r.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap().then(b.im.partial_cmp(&a.im).unwrap()));
}

pub fn sw_dispersion_roots(k: WaveVector, bp: &BackscatterParams, pp: &PhysicalParams) -> DispersionResult {
    let coeffs = sw_dispersion_coeffs(k, bp, pp);
    let mut roots = cubic_roots(coeffs.a1, coeffs.a2, coeffs.a3);
    sort_roots(&mut roots);
    DispersionResult { roots, class: StabilityClass::from_coeffs(&coeffs), k, coeffs }
}

/// Roots on a rectangular wave-vector grid, `ky` outer and `kx` inner.
pub fn sweep(kxs: &[f64], kys: &[f64], bp: &BackscatterParams, pp: &PhysicalParams) -> Vec<DispersionResult> {
    let pts: Vec<WaveVector> = kys.iter().flat_map(|&ky| kxs.iter().map(move |&kx| WaveVector::new(kx, ky))).collect();
    pts.par_iter().map(|&k| sw_dispersion_roots(k, bp, pp)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct CriticalPoint {
    pub C_c: f64,
    pub k_c: f64,
    pub omega_c: f64,
}

/// Threshold drag, wave number and frequency of the isotropic instability.
pub fn critical_point(bp: &BackscatterParams, pp: &PhysicalParams) -> Result<CriticalPoint, Error> {
    if !bp.is_isotropic() {
        return Err(Error::Anisotropic);
    }
    let (b, d) = (bp.b1, bp.d1);
    if !(b > 0.0 && d > 0.0) {
        return Err(Error::Param(format!("need b, d > 0, got b={b}, d={d}")));
    }
    let k_c = (b / (2.0 * d)).sqrt();
    Ok(CriticalPoint {
        C_c: b * b * pp.H0 / (4.0 * d),
        k_c,
        omega_c: (pp.g * pp.H0 * k_c * k_c + pp.f * pp.f).sqrt(),
    })
}

/// Roots in a frame moving with velocity `c`: the stationary roots shifted by `i c.k`.
pub fn comoving_roots(k: WaveVector, c: [f64; 2], bp: &BackscatterParams, pp: &PhysicalParams) -> DispersionResult {
    let mut r = sw_dispersion_roots(k, bp, pp);
    let shift = Complex64::new(0.0, k.dot(c[0], c[1]));
    for z in r.roots.iter_mut() {
        *z += shift;
    }
    sort_roots(&mut r.roots);
    r
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeKind {
    Geostrophic,
    GravityWave,
    Mass,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelMode {
    /// `(u, v, eta)` amplitude of `E exp(i j xi)`.
    pub e: [Complex64; 3],
    pub k: WaveVector,
    pub omega: f64,
    pub kind: ModeKind,
    /// Fourier index `j` along the phase variable.
    pub j: i32,
}

/// Kernel vectors of the critical linear operator at `|k| = k_c`.
///
/// Geostrophic modes have their velocity along `k_perp / |k|`; gravity modes
/// are returned for frequency `-omega_c`; the mass mode sits at `k = 0`.
pub fn kernel_modes(
    kind: ModeKind,
    k: WaveVector,
    bp: &BackscatterParams,
    pp: &PhysicalParams,
) -> Result<Vec<KernelMode>, Error> {
    let cp = critical_point(bp, pp)?;
    if kind == ModeKind::Mass {
        let one = Complex64::new(1.0, 0.0);
        let z = Complex64::new(0.0, 0.0);
        return Ok(vec![KernelMode { e: [z, z, one], k: WaveVector::new(0.0, 0.0), omega: 0.0, kind, j: 0 }]);
    }
    let kn = k.norm();
    if (kn - cp.k_c).abs() > 1e-9 * cp.k_c {
        return Err(Error::NotCritical { expected: cp.k_c, got: kn });
    }
    let i = Complex64::new(0.0, 1.0);
    let mut out = Vec::new();
    for j in [1i32, -1] {
        let jf = j as f64;
        let e = match kind {
            ModeKind::Geostrophic => {
                let [px, py] = k.perp();
                [
                    Complex64::new(px / kn, 0.0),
                    Complex64::new(py / kn, 0.0),
                    -i * jf * pp.f / (pp.g * cp.k_c),
                ]
            }
            ModeKind::GravityWave => [
                cp.omega_c * k.kx + i * jf * pp.f * k.ky,
                cp.omega_c * k.ky - i * jf * pp.f * k.kx,
                Complex64::new(cp.k_c * cp.k_c * pp.H0, 0.0),
            ],
            ModeKind::Mass => unreachable!(),
        };
        let omega = if kind == ModeKind::GravityWave { -cp.omega_c } else { 0.0 };
        out.push(KernelMode { e, k, omega, kind, j });
    }
    if kind == ModeKind::Geostrophic {
        let one = Complex64::new(1.0, 0.0);
        let z = Complex64::new(0.0, 0.0);
        out.push(KernelMode { e: [z, z, one], k, omega: 0.0, kind, j: 0 });
    }
    Ok(out)
}

/// Root of smallest modulus, the branch whose real part tends to zero as
/// `|k|` grows when hyperviscosity is present.
pub fn tail_root(k: WaveVector, bp: &BackscatterParams, pp: &PhysicalParams) -> Result<Complex64, Error> {
    let bmax = bp.b1.max(bp.b2);
    let dmin = bp.d1.min(bp.d2);
    if bmax > 0.0 && dmin > 0.0 {
        let ks = (bmax / (2.0 * dmin)).sqrt();
        if k.norm() < 10.0 * ks {
            return Err(Error::Param(format!("|k| = {} below 10 k_c = {}", k.norm(), 10.0 * ks)));
        }
    }
    let r = sw_dispersion_roots(k, bp, pp);
    Ok(*r.roots.iter().min_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap()).unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2(c: f64) -> (BackscatterParams, PhysicalParams) {
        (
            BackscatterParams::isotropic(2.0, 1.0),
            PhysicalParams { f: 0.3, g: 9.8, H0: 0.1, C: c, ..Default::default() },
        )
    }

    #[test]
    fn symbol_examples() {
        assert!((backscatter_symbol(2f64.sqrt(), 3.0, 1.0) - 2.0).abs() < 1e-14);
        assert_eq!(backscatter_symbol(0.0, 5.0, 2.0), 0.0);
        assert!(backscatter_symbol((3.0f64 / 2.0).sqrt(), 3.0, 2.0).abs() < 1e-14);
    }

    #[test]
    fn euler_eigs_examples() {
        let e = euler_linear_eigs(WaveVector::new(0.0, 1.0), 1.6, 1.0, 0.3).unwrap();
        for z in e.eigenvalues {
            assert!((z - 0.6).norm() < 1e-7);
        }
        assert!((e.eigenvectors[0][0] - 1.0).abs() < 1e-15 && e.eigenvectors[0][1].abs() < 1e-15);
        let e = euler_linear_eigs(WaveVector::new(1.0, 1.0), 3.0, 1.0, 0.0).unwrap();
        for z in e.eigenvalues {
            assert!((z - 2.0).norm() < 1e-12);
        }
        let k = WaveVector::new(1.3, -0.4);
        let a = euler_linear_eigs(k, 2.0, 1.0, 10.0).unwrap();
        let b = euler_linear_eigs(k, 2.0, 1.0, 0.0).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(b.eigenvalues.iter()) {
            assert!((x - y).norm() < 1e-6);
        }
        assert!(euler_linear_eigs(WaveVector::new(0.0, 0.0), 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn coefficients_at_criticality() {
        let (bp, pp) = fig2(0.1);
        let c = sw_dispersion_coeffs(WaveVector::new(1.0, 0.0), &bp, &pp);
        assert!(c.a1.abs() < 1e-14 && (c.a2 - 1.07).abs() < 1e-14 && c.a3.abs() < 1e-14);
        let (bp, pp) = fig2(0.12);
        let c = sw_dispersion_coeffs(WaveVector::new(1.0, 0.0), &bp, &pp);
        assert!((c.a1 - 0.4).abs() < 1e-13);
        assert_eq!(sw_dispersion_coeffs(WaveVector::new(0.0, 0.0), &bp, &pp).a3, 0.0);
    }

    #[test]
    fn fig2_classes() {
        let k = WaveVector::new(1.0, 0.0);
        let (bp, pp) = fig2(0.1);
        let r = sw_dispersion_roots(k, &bp, &pp);
        assert!(r.class.zero_root && r.class.hopf && !r.class.stable && !r.class.unstable);
        assert_eq!(r.class.label(), "zero_root+hopf");
        let w = 1.07f64.sqrt();
        assert!((r.roots[0] - Complex64::new(0.0, w)).norm() < 1e-10);
        assert!(r.roots[1].norm() < 1e-10);
        assert!((r.roots[2] - Complex64::new(0.0, -w)).norm() < 1e-10);
        let (bp, pp) = fig2(0.12);
        assert!(sw_dispersion_roots(k, &bp, &pp).class.stable);
        let (bp, pp) = fig2(0.08);
        assert!(sw_dispersion_roots(k, &bp, &pp).class.unstable);
    }

    #[test]
    fn critical_point_examples() {
        let (bp, pp) = fig2(0.1);
        let cp = critical_point(&bp, &pp).unwrap();
        assert!((cp.C_c - 0.1).abs() < 1e-15 && (cp.k_c - 1.0).abs() < 1e-15);
        assert!((cp.omega_c - 1.034408).abs() < 1e-6);
        let eps = 0.01;
        let small = critical_point(&BackscatterParams::isotropic(2.0 * eps, eps), &pp).unwrap();
        assert!((small.k_c - cp.k_c).abs() < 1e-14);
        assert!((small.C_c - eps * cp.C_c).abs() < 1e-15);
        let aniso = BackscatterParams { b1: 1.5, b2: 2.2, d1: 1.0, d2: 1.04 };
        assert!(matches!(critical_point(&aniso, &pp), Err(Error::Anisotropic)));
    }

    #[test]
    fn comoving_shift_moves_hopf_root_to_origin() {
        let (bp, pp) = fig2(0.1);
        let cp = critical_point(&bp, &pp).unwrap();
        let k = WaveVector::new(1.0, 0.0);
        let r = comoving_roots(k, [-cp.omega_c, 0.0], &bp, &pp);
        assert_eq!(r.roots.iter().filter(|z| z.norm() < 1e-10).count(), 1);
        let plain = sw_dispersion_roots(k, &bp, &pp);
        let same = comoving_roots(k, [0.0, 0.0], &bp, &pp);
        for (a, b) in plain.roots.iter().zip(same.roots.iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn kernel_vectors_annihilate_critical_symbol() {
        let (bp, pp) = fig2(0.1);
        let k = WaveVector::new(1.0, 0.0);
        let modes = kernel_modes(ModeKind::Geostrophic, k, &bp, &pp).unwrap();
        let e1 = modes[0].e;
        assert!((e1[1] - 1.0).norm() < 1e-15);
        assert!((e1[2] - Complex64::new(0.0, -0.3 / 9.8)).norm() < 1e-15);
        let g = kernel_modes(ModeKind::GravityWave, k, &bp, &pp).unwrap();
        let e = g[0].e;
        assert!((e[0] - 1.034408).norm() < 1e-6);
        assert!((e[1] - Complex64::new(0.0, -0.3)).norm() < 1e-15);
        assert!((e[2] - 0.1).norm() < 1e-15);
        let m = kernel_modes(ModeKind::Mass, k, &bp, &pp).unwrap();
        assert_eq!(m[0].e[2], Complex64::new(1.0, 0.0));
        assert!(kernel_modes(ModeKind::Geostrophic, WaveVector::new(1.1, 0.0), &bp, &pp).is_err());
    }

    #[test]
    fn tail_root_examples() {
        let (bp, pp) = fig2(0.1);
        let r10 = tail_root(WaveVector::new(10.0, 0.0), &bp, &pp).unwrap();
        assert!(r10.re < 0.0 && r10.re > -1e-2, "{r10}");
        let r100 = tail_root(WaveVector::new(0.0, 100.0), &bp, &pp).unwrap();
        assert!(r100.re.abs() < r10.re.abs());
        assert!(tail_root(WaveVector::new(2.0, 0.0), &bp, &pp).is_err());
    }

    #[test]
    fn viscous_limit_approaches_g_h0_over_b() {
        let bp = BackscatterParams { b1: -0.5, b2: -0.5, d1: 0.0, d2: 0.0 };
        let pp = PhysicalParams { f: 0.3, g: 9.8, H0: 0.1, C: 0.0, ..Default::default() };
        let r = sw_dispersion_roots(WaveVector::new(300.0, 0.0), &bp, &pp);
        assert!((r.max_re() - 9.8 * 0.1 / -0.5).abs() < 1e-3, "{}", r.max_re());
    }

    #[test]
    fn inviscid_limit() {
        let bp = BackscatterParams { b1: 0.0, b2: 0.0, d1: 0.0, d2: 0.0 };
        let pp = PhysicalParams { f: 0.3, g: 9.8, H0: 0.1, C: 0.05, ..Default::default() };
        let r = sw_dispersion_roots(WaveVector::new(0.0, 1e4), &bp, &pp);
        let r0 = pp.C / pp.H0;
        assert!(r.roots.iter().any(|z| (z - Complex64::new(-r0, 0.0)).norm() < 1e-3));
        let w = (pp.g * pp.H0).sqrt() * 1e4;
        assert!(r.roots.iter().any(|z| (z.re + 0.5 * r0).abs() < 1e-3 && z.im > 0.99 * w));
    }
}
