use bslab_core::fft::Fft2;
use bslab_core::spectral::{leray_project, random_field};
use bslab_core::types::{index_of, wavenumber};
use bslab_core::{perp, SpectralField2D};
use proptest::prelude::*;

proptest! {
    #[test]
    fn perp_twice_negates(a in -1e6f64..1e6, b in -1e6f64..1e6) {
        prop_assert_eq!(perp(perp([a, b])), [-a, -b]);
    }

    #[test]
    fn wavenumber_index_round_trip(n in 1usize..200, j in 0usize..200) {
        let j = j % n;
        let k = wavenumber(j, n);
        prop_assert_eq!(index_of(k, n), j);
        prop_assert!(2 * k.unsigned_abs() as usize <= n);
    }

    #[test]
    fn random_fields_are_divergence_free(seed in any::<u64>(), norm in 1e-6f64..10.0) {
        let f = random_field(16, seed, norm);
        prop_assert!(f.max_divergence() <= 1e-12 * norm.max(1.0));
        prop_assert!((f.sobolev_sq(2).sqrt() - norm).abs() <= 1e-12 * norm);
    }

    #[test]
    fn projection_is_idempotent(seed in any::<u64>()) {
        let mut f = random_field(16, seed, 1.0);
        // add a gradient part that the projection must remove
        f.add_mode(1, 2, [num_complex::Complex64::new(1.0, 0.0), num_complex::Complex64::new(2.0, 0.0)]);
        leray_project(&mut f);
        let once = f.clone();
        leray_project(&mut f);
        prop_assert!(once.max_divergence() < 1e-14);
        prop_assert_eq!(once, f);
    }

    #[test]
    fn grid_round_trip(seed in any::<u64>()) {
        let f = random_field(16, seed, 1.0);
        let mut fft = Fft2::new(16);
        let g = f.transform_to_physical(&mut fft).unwrap();
        let back = SpectralField2D::transform_to_spectral(&g, &mut fft).unwrap();
        let mut d = back.clone();
        d.axpy(-1.0, &f);
        prop_assert!(d.norm2_sq().sqrt() < 1e-13);
    }
}
