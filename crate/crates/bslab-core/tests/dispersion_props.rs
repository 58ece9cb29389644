use bslab_core::dispersion::{critical_point, sw_dispersion_roots};
use bslab_core::{BackscatterParams, PhysicalParams, WaveVector};
use num_complex::Complex64;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = (BackscatterParams, PhysicalParams)> {
    (0.0f64..3.0, 0.0f64..3.0, 0.1f64..2.0, 0.1f64..2.0, -1.0f64..1.0, 0.0f64..0.5, 0.01f64..1.0).prop_map(
        |(b1, b2, d1, d2, f, c, h0)| {
            (BackscatterParams { b1, b2, d1, d2 }, PhysicalParams { f, C: c, H0: h0, ..Default::default() })
        },
    )
}

proptest! {
    #[test]
    fn roots_solve_the_cubic((bp, pp) in params(), kx in -3.0f64..3.0, ky in -3.0f64..3.0) {
        let r = sw_dispersion_roots(WaveVector::new(kx, ky), &bp, &pp);
        let c = r.coeffs;
        for l in r.roots {
            let p = l * l * l + c.a1 * l * l + c.a2 * l + c.a3;
            prop_assert!(p.norm() <= 1e-10 * (1.0 + l.norm().powi(3)) * (1.0 + c.a1.abs() + c.a2.abs() + c.a3.abs()));
        }
        let sum: Complex64 = r.roots.iter().sum();
        let prod: Complex64 = r.roots.iter().product();
        let scale = 1.0 + c.a1.abs().max(c.a2.abs().sqrt()).max(c.a3.abs().cbrt());
        prop_assert!((sum.re + c.a1).abs() <= 1e-9 * scale && sum.im.abs() <= 1e-9 * scale);
        prop_assert!((prod.re + c.a3).abs() <= 1e-9 * scale.powi(3) && prod.im.abs() <= 1e-9 * scale.powi(3));
    }

    #[test]
    fn isotropic_roots_depend_on_modulus(b in 0.0f64..3.0, d in 0.1f64..2.0, k in 0.05f64..3.0, a1 in 0.0f64..6.3, a2 in 0.0f64..6.3) {
        let bp = BackscatterParams::isotropic(b, d);
        let pp = PhysicalParams { f: 0.3, C: 0.05, ..Default::default() };
        let r1 = sw_dispersion_roots(WaveVector::from_polar(k, a1), &bp, &pp);
        let r2 = sw_dispersion_roots(WaveVector::from_polar(k, a2), &bp, &pp);
        for (x, y) in r1.roots.iter().zip(&r2.roots) {
            prop_assert!((x - y).norm() <= 1e-9 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn no_backscatter_is_stable(c in 0.01f64..1.0, kx in -5.0f64..5.0, ky in -5.0f64..5.0, f in -1.0f64..1.0) {
        prop_assume!(kx * kx + ky * ky > 1e-4);
        let pp = PhysicalParams { f, C: c, ..Default::default() };
        let r = sw_dispersion_roots(WaveVector::new(kx, ky), &BackscatterParams::isotropic(0.0, 0.0), &pp);
        prop_assert!(r.class.stable);
    }

    #[test]
    fn critical_circle(b in 0.2f64..3.0, d in 0.2f64..2.0, k in 0.05f64..3.0, angle in 0.0f64..6.3) {
        let bp = BackscatterParams::isotropic(b, d);
        let mut pp = PhysicalParams { f: 0.3, ..Default::default() };
        let cp = critical_point(&bp, &pp).unwrap();
        pp.C = cp.C_c;
        let on = sw_dispersion_roots(WaveVector::from_polar(cp.k_c, angle), &bp, &pp);
        prop_assert!(on.class.zero_root && on.class.hopf);
        prop_assume!((k - cp.k_c).abs() > 1e-2);
        let off = sw_dispersion_roots(WaveVector::from_polar(k, angle), &bp, &pp);
        prop_assert!(off.max_re() < 0.0);
    }
}

#[test]
fn inviscid_large_k_limit() {
    let pp = PhysicalParams { f: 0.3, C: 0.02, ..Default::default() };
    let r = sw_dispersion_roots(WaveVector::new(3e3, 4e3), &BackscatterParams::isotropic(0.0, 0.0), &pp);
    let s = (pp.g * pp.H0).sqrt();
    let want = [-pp.C / pp.H0, -pp.C / (2.0 * pp.H0)];
    let real = r.roots.iter().find(|z| z.im.abs() < 1e-9).unwrap();
    assert!((real.re - want[0]).abs() < 1e-6);
    // the oscillating pair scales with |k|; its real part approaches -C/(2 H0)
    for z in r.roots.iter().filter(|z| z.im.abs() > 1.0) {
        assert!((z.re - want[1]).abs() < 1e-6);
        assert!((z.im.abs() / (5e3 * s) - 1.0).abs() < 1e-6);
    }
}
