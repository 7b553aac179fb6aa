use proptest::prelude::*;

use isac_core::acf::{aperiodic_acf, doppler_slice, monte_carlo_profile, periodic_acf, AcfMode};
use isac_core::basis::{basis_afdm, basis_cdma, basis_haar, basis_ofdm, basis_otfs, basis_sc, random_generalized_ofdm};
use isac_core::closed_form::{b_norms_sq, eisl_aacf, eisl_pacf, expected_aacf, expected_pacf};
use isac_core::constellation::{apply_index_modulation, make_psk, make_qam, SymbolSource};
use isac_core::optimality::is_complex_permutation;
use isac_core::ranging::{matched_filter, unit_noise};
use isac_core::stats::trial_rng;
use isac_core::Complex64;

fn vector(n: usize, seed: u64) -> Vec<Complex64> {
    unit_noise(&mut trial_rng(seed, 0), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn acf_mainlobe_is_energy_and_bounds_sidelobes(n in 2usize..80, seed in any::<u64>()) {
        let x = vector(n, seed);
        let energy: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        for r in [aperiodic_acf(&x), periodic_acf(&x), doppler_slice(&x)] {
            prop_assert!((r[0].re - energy).abs() < 1e-9 * energy);
            prop_assert!(r[0].im.abs() < 1e-9 * energy);
            prop_assert!(r.iter().all(|v| v.norm() <= energy * (1.0 + 1e-9)));
        }
    }

    #[test]
    fn periodic_acf_is_conjugate_symmetric(n in 2usize..80, seed in any::<u64>()) {
        let r = periodic_acf(&vector(n, seed));
        for k in 1..n {
            prop_assert!((r[k] - r[n - k].conj()).norm() < 1e-9);
        }
    }

    #[test]
    fn periodic_folds_aperiodic(n in 2usize..60, seed in any::<u64>()) {
        // r̃_k = r_k + conj(r_{n−k})
        let x = vector(n, seed);
        let a = aperiodic_acf(&x);
        let p = periodic_acf(&x);
        for k in 1..n {
            prop_assert!((p[k] - (a[k] + a[n - k].conj())).norm() < 1e-9);
        }
    }

    #[test]
    fn matched_filter_of_self_peaks_at_zero(n in 2usize..64, seed in any::<u64>()) {
        let x = vector(n, seed);
        let mf = matched_filter(&x, &x, true).unwrap();
        let top = mf.iter().copied().fold(0.0, f64::max);
        prop_assert!((mf[0] - top).abs() <= 1e-9 * top);
    }

    #[test]
    fn gaussian_symbols_make_eisl_basis_free(seed in any::<u64>(), k in 3usize..6) {
        let n = 1 << k;
        let u = basis_haar(n, &mut trial_rng(seed, 0)).unwrap();
        let nn = n as f64;
        prop_assert!((eisl_pacf(&u, 2.0) - nn * (nn - 1.0)).abs() < 1e-8 * nn * nn);
        prop_assert!((eisl_aacf(&u, 2.0) - nn * (nn - 1.0) / 2.0).abs() < 1e-8 * nn * nn);
    }

    #[test]
    fn b_norms_bounded_and_tight_only_for_complex_permutations(seed in any::<u64>(), k in 3usize..6) {
        let n = 1 << k;
        let mut rng = trial_rng(seed, 1);
        for b in [basis_haar(n, &mut rng).unwrap(), random_generalized_ofdm(n, &mut rng).unwrap()] {
            let norms = b_norms_sq(&b);
            prop_assert!(norms.iter().all(|v| *v <= n as f64 + 1e-8));
            let tight = norms[1..].iter().all(|v| *v >= n as f64 - 1e-8);
            prop_assert_eq!(tight, is_complex_permutation(&b.v(), 1e-9));
        }
    }

    #[test]
    fn sub_gaussian_ofdm_beats_haar_per_lag(seed in any::<u64>(), mu4 in 1.0f64..1.99) {
        let n = 16;
        let u = basis_haar(n, &mut trial_rng(seed, 2)).unwrap();
        let ofdm = expected_pacf(&basis_ofdm(n).unwrap(), mu4);
        let other = expected_pacf(&u, mu4);
        for k in 0..n {
            prop_assert!(ofdm.per_lag[k] <= other.per_lag[k] + 1e-9);
        }
    }

    #[test]
    fn index_modulation_kurtosis(order in 3usize..17, p0 in 0.0f64..0.95) {
        let base = make_psk(order).unwrap();
        let im = apply_index_modulation(&base, p0).unwrap();
        prop_assert!((im.kurtosis() - 1.0 / (1.0 - p0)).abs() < 1e-9 / (1.0 - p0));
        prop_assert!((im.power() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn every_named_basis_is_unitary() {
    for n in [8usize, 16, 64, 128] {
        let mut bases = vec![basis_sc(n).unwrap(), basis_ofdm(n).unwrap(), basis_cdma(n).unwrap()];
        bases.push(basis_afdm(n, 1.0 / (2.0 * n as f64), 0.3).unwrap());
        bases.push(basis_otfs(n / 4, 4).unwrap());
        for b in bases {
            assert!(b.unitarity_residual() < 1e-10, "{} at n = {n}", b.scheme());
        }
    }
}

#[test]
fn monte_carlo_ignores_thread_count() {
    let b = basis_cdma(64).unwrap();
    let src = SymbolSource::from(make_qam(64).unwrap());
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| monte_carlo_profile(&b, &src, AcfMode::Aperiodic, 333, 17).unwrap())
    };
    let a = run(1);
    assert_eq!(a, run(3));
    assert_eq!(a, run(8));
}

#[test]
fn aperiodic_per_lag_sum_equals_eisl() {
    let mu4 = make_qam(256).unwrap().kurtosis();
    for b in [basis_sc(64).unwrap(), basis_ofdm(64).unwrap(), basis_cdma(64).unwrap()] {
        let r = expected_aacf(&b, mu4);
        assert!((r.summed_sidelobes() - r.eisl).abs() < 1e-8 * r.eisl);
    }
}
