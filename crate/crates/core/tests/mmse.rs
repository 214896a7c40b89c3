use mdgnet_core::channel::sigma_mdg;
use mdgnet_core::linalg::{complex_gaussian, hermitian_eigenvalues, sample_haar_unitary};
use mdgnet_core::mmse::{
    conventional_sigma_mdg_estimate, effective_snr, equalizer_eigenvalues, mmse_matrix, sinr_per_stream, SnrPoint,
};
use mdgnet_core::seed::{stream, Namespace};
use mdgnet_core::units::db_to_linear;
use mdgnet_core::{ComplexMatrix, STREAMS};
use proptest::prelude::*;

mod common;

fn channel(seed: u64) -> ComplexMatrix {
    let h = complex_gaussian(STREAMS, STREAMS, &mut stream(seed, Namespace::Oracle, 60));
    let f = h.frobenius_norm_sqr();
    h.scale_real((STREAMS as f64 / f).sqrt())
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #![proptest_config(common::fixed_cases(64))]

    #[test]
    fn sinr_is_monotone_in_snr(seed in any::<u64>(), penalty in prop::option::of(5.0f64..30.0)) {
        let h = channel(seed);
        let mut prev: Option<Vec<f64>> = None;
        for k in 0..=20 {
            let snr_db = 5.0 + k as f64;
            let p = SnrPoint { snr_db, sinr_imp_db: penalty };
            let s = sinr_per_stream(&h, &p).unwrap().0;
            if let Some(prev) = &prev {
                prop_assert!(s.iter().zip(prev).all(|(a, b)| *a >= b * (1.0 - 1e-12)));
            }
            prev = Some(s);
        }
    }

    #[test]
    fn min_sinr_is_bounded_by_best_eigenmode(seed in any::<u64>(), snr_db in -5.0f64..40.0) {
        let h = channel(seed);
        let p = SnrPoint::new(snr_db);
        let s = sinr_per_stream(&h, &p).unwrap().0;
        let top = *hermitian_eigenvalues(&h.gram()).unwrap().last().unwrap();
        let min = s.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(min <= effective_snr(&p) * top * (1.0 + 1e-12));
    }

    #[test]
    fn sinr_grows_without_bound(seed in any::<u64>()) {
        let h = channel(seed);
        // Deep in the zero-forcing regime SINR scales linearly with SNR.
        let lo = sinr_per_stream(&h, &SnrPoint::new(60.0)).unwrap().0;
        let hi = sinr_per_stream(&h, &SnrPoint::new(80.0)).unwrap().0;
        prop_assert!(lo.iter().zip(&hi).all(|(a, b)| (b / a / 100.0 - 1.0).abs() < 1e-2));
    }

    #[test]
    fn conventional_estimate_compresses_diagonal_channels(
        gains_db in prop::collection::vec(-8.0f64..8.0, STREAMS),
        snr_db in 0.0f64..40.0,
    ) {
        let amps: Vec<f64> = gains_db.iter().map(|g| db_to_linear(*g).sqrt()).collect();
        let h = ComplexMatrix::from_real_diag(&amps);
        let est = conventional_sigma_mdg_estimate(&h, &SnrPoint::new(snr_db)).unwrap();
        prop_assert!(est <= sigma_mdg(&h).unwrap() + 0.05);
    }

    #[test]
    fn equalizer_spectrum_is_rotation_invariant(seed in any::<u64>(), snr_db in 0.0f64..30.0) {
        let h = channel(seed);
        let mut rng = stream(seed, Namespace::Oracle, 61);
        let u = sample_haar_unitary(STREAMS, &mut rng).unwrap();
        let v = sample_haar_unitary(STREAMS, &mut rng).unwrap();
        let g = &(&u * &h) * &v;
        let s = db_to_linear(snr_db);
        let a = equalizer_eigenvalues(&mmse_matrix(&h, s).unwrap()).unwrap();
        let b = equalizer_eigenvalues(&mmse_matrix(&g, s).unwrap()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
        }
        let p = SnrPoint::new(snr_db);
        let ca = conventional_sigma_mdg_estimate(&h, &p).unwrap();
        let cb = conventional_sigma_mdg_estimate(&g, &p).unwrap();
        prop_assert!((ca - cb).abs() <= 1e-9);
    }

    #[test]
    fn permuted_channel_permutes_sinrs(seed in any::<u64>(), perm in Just((0..STREAMS).collect::<Vec<_>>()).prop_shuffle()) {
        let h = channel(seed);
        let p = ComplexMatrix::permutation(&perm);
        let g = &(&p * &h) * &p.adjoint();
        let point = SnrPoint::new(12.0);
        let a = sinr_per_stream(&h, &point).unwrap().0;
        let b = sinr_per_stream(&g, &point).unwrap().0;
        for (x, y) in sorted(a).iter().zip(sorted(b)) {
            prop_assert!((x - y).abs() <= 1e-9 * x);
        }
    }
}
