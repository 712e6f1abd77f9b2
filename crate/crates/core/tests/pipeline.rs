use proptest::prelude::*;

use oamqkd::bipartite::{
    Averaging, average_realizations, evolve_realization, ideal_bell_state, werner_state,
};
use oamqkd::channel::ModeBasis;
use oamqkd::entanglement::EntanglementReport;
use oamqkd::qkd::{Protocol, key_rate_e91, key_rate_six_state, qber};
use oamqkd::rng::{Arm, screen_seed};
use oamqkd::sweep::{run_sweep, screen_scale_for_w};
use oamqkd::turbulence::{GridGeometry, ScreenSynthesizer};
use oamqkd::{DensityMatrix, SweepConfig};

fn small_config() -> SweepConfig {
    SweepConfig {
        ells: vec![1, 2],
        w_values: vec![0.0, 1.0, 2.0],
        realizations: 4,
        grid_n: 64,
        window: 0.4,
        bootstrap_resamples: 20,
        ..SweepConfig::default()
    }
}

#[test]
fn werner_qber_matches_white_noise_error_rate() {
    for p in [0.0, 0.25, 0.6, 1.0] {
        let rho = werner_state::<f64>(p).unwrap();
        for protocol in Protocol::ALL {
            assert!(
                (qber(&rho, protocol) - (1.0 - p) / 2.0).abs() < 1e-12,
                "{protocol} p={p}"
            );
        }
    }
}

#[test]
fn sweep_rows_are_consistent_with_their_state() {
    let recs = run_sweep::<f64>(&small_config()).unwrap();
    assert_eq!(recs.len(), 6);
    for r in &recs {
        let ent = EntanglementReport::evaluate(&r.state).unwrap();
        assert!((ent.concurrence - r.concurrence).abs() < 1e-12);
        assert!((ent.eof - r.eof).abs() < 1e-12);
        for (p, k) in &r.rates {
            assert!((qber(&r.state, *p) - k.q).abs() < 1e-12);
            assert!(k.r_min_clamped >= 0.0 && k.r_min_clamped <= 1.0);
        }
        assert!(r.postselect_prob > 0.0 && r.postselect_prob <= 1.0 + 1e-9);
    }
}

#[test]
fn f32_sweep_tracks_f64() {
    let cfg = SweepConfig {
        ells: vec![1],
        w_values: vec![0.0, 0.5],
        ..small_config()
    };
    let a = run_sweep::<f64>(&cfg).unwrap();
    let b = run_sweep::<f32>(&cfg).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!(
            (x.eof - y.eof as f64).abs() < 1e-3,
            "W={}: {} vs {}",
            x.w,
            x.eof,
            y.eof
        );
        let (qx, qy) = (
            x.rate(Protocol::SixState).unwrap().q,
            y.rate(Protocol::SixState).unwrap().q,
        );
        assert!((qx - qy as f64).abs() < 1e-3);
    }
}

#[test]
fn averaging_modes_agree_without_turbulence() {
    let geom = GridGeometry::<f64>::new(64, 0.4).unwrap();
    let basis = ModeBasis::new(&[-2, 2], 0.05, &geom).unwrap();
    let synth = ScreenSynthesizer::new(geom, 4).unwrap();
    let t = basis
        .transfer_matrix_scaled(&synth.unit_screen(3), 0.0)
        .unwrap();
    let one = evolve_realization(&t, &t).unwrap();
    let ens = vec![one.clone(), one];
    let a = average_realizations(&ens, Averaging::CountWeighted).unwrap();
    let b = average_realizations(&ens, Averaging::Uniform).unwrap();
    assert!(a.max_abs_diff(&b) < 1e-12);
    assert!(a.max_abs_diff(&ideal_bell_state()) < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn realizations_lose_probability_but_never_gain(seed in any::<u64>(), w in 0.0f64..4.0, ell in 1i32..4) {
        let geom = GridGeometry::<f64>::new(64, 0.4).unwrap();
        let basis = ModeBasis::new(&[-ell, ell], 0.05, &geom).unwrap();
        let synth = ScreenSynthesizer::new(geom, 4).unwrap();
        let scale = screen_scale_for_w::<f64>(w, 0.05, 710e-9).unwrap();
        let ta = basis.transfer_matrix_scaled(&synth.unit_screen(screen_seed(seed, ell, 0, Arm::A)), scale).unwrap();
        let tb = basis.transfer_matrix_scaled(&synth.unit_screen(screen_seed(seed, ell, 0, Arm::B)), scale).unwrap();
        let r = evolve_realization(&ta, &tb).unwrap();
        let p = r.postselection_probability();
        prop_assert!((0.0..=1.0 + 1e-8).contains(&p));
        if p > 1e-12 {
            let rho = average_realizations(&[r], Averaging::CountWeighted).unwrap();
            let ent = EntanglementReport::evaluate(&rho).unwrap();
            prop_assert!(ent.concurrence >= 0.0 && ent.concurrence <= 1.0);
            prop_assert!(rho.eigenvalues().iter().all(|&e| e > -1e-9));
        }
    }

    #[test]
    fn qber_is_affine_in_the_state(p in 0.0f64..=1.0, q in 0.0f64..=1.0, t in 0.0f64..=1.0) {
        let a = werner_state::<f64>(p).unwrap();
        let b = DensityMatrix::<f64>::maximally_mixed().mix(&werner_state(q).unwrap(), 0.3).unwrap();
        let m = a.mix(&b, t).unwrap();
        for protocol in Protocol::ALL {
            let expected = t * qber(&a, protocol) + (1.0 - t) * qber(&b, protocol);
            prop_assert!((qber(&m, protocol) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn key_rates_decrease_with_qber(a in 0.0f64..0.5, b in 0.0f64..0.5) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(key_rate_e91(hi).unwrap() <= key_rate_e91(lo).unwrap() + 1e-12);
        prop_assert!(key_rate_six_state(hi).unwrap() <= key_rate_six_state(lo).unwrap() + 1e-12);
    }
}
