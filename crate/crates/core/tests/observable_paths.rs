use num_complex::Complex64;
use sle4rho_core::boundary::{
    half_tanh_pair, measure_to_function, quantize_pair, BoundaryFunction, MeasurePair,
};
use sle4rho_core::driver::{SdeState, SleConfig};
use sle4rho_core::observable::{
    bm_test, default_mesh, eta_bv, eta_general, observe_ensemble, observe_path, qv_consistency,
    reparam, BmThresholds, Evaluator, ObserveOptions,
};
use sle4rho_core::LAMBDA;

#[test]
fn chordal_eta_is_brownian_in_radius_time() {
    let cfg = SleConfig::new(MeasurePair::empty(), 1e-4, 21);
    let ds = 0.005;
    let opts = ObserveOptions {
        horizon: 8.0,
        stop_at_c: Some(1.05),
        resolve_c: Some(0.1 * ds),
    };
    let traces = observe_ensemble(&cfg, 120, Complex64::i(), &Evaluator::Bv, &opts).unwrap();
    let re: Vec<Vec<f64>> = traces
        .iter()
        .map(|t| reparam(t, ds, 1.0).unwrap())
        .collect();
    let rep = bm_test(&re, ds, &BmThresholds::default()).unwrap();
    assert!(rep.pass, "{rep:?}");
}

#[test]
fn general_evaluator_matches_closed_form_along_paths() {
    let pair = MeasurePair::atomic(&[(-1.0, -0.25)], &[(0.0, -0.5), (0.5, 0.75)]).unwrap();
    let f = measure_to_function(&pair);
    let cfg = SleConfig::new(pair, 1e-3, 22);
    let opts = ObserveOptions::grid(0.5);
    let z = Complex64::new(0.2, 0.6);
    for index in 0..4 {
        let (a, _) = observe_path(&cfg, index, z, &Evaluator::Bv, &opts).unwrap();
        let general = Evaluator::General {
            f: f.clone(),
            mesh: default_mesh(&f),
            max_angle: None,
        };
        let (b, _) = observe_path(&cfg, index, z, &general, &opts).unwrap();
        assert_eq!(a.times, b.times);
        for (x, y) in a.eta.iter().zip(&b.eta) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }
}

#[test]
fn smooth_data_against_quantized_closed_form() {
    let pair = half_tanh_pair(50, 40.0);
    let f = BoundaryFunction::half_tanh();
    let mesh: Vec<(f64, f64)> = {
        let mut ys: Vec<f64> = (1..=4000).map(|k| k as f64 * 0.01).collect();
        ys.extend((1..=4000).map(|k| -(k as f64) * 0.01));
        ys.sort_by(f64::total_cmp);
        ys.into_iter().map(|y| (y, y)).collect()
    };
    let z = Complex64::i();
    let reference = eta_general(z, 0.0, 0.0, 0.0, &mesh, &f, None).unwrap();
    for n in [4, 16, 64] {
        let q = quantize_pair(&pair, n).unwrap();
        let eta = eta_bv(&SdeState::initial(&q).unwrap(), z).unwrap();
        // the CDF gap of an n-chunk quantisation of mass 1/2 is at most 1/(2n)
        assert!(
            (eta - reference).abs() <= LAMBDA * 0.5 / n as f64 + 1e-4,
            "n={n}: {eta} vs {reference}"
        );
    }
}

#[test]
fn u_is_nonincreasing_when_data_dominates_chordal() {
    // F ≥ λ on ℝ₊ and F ≥ -λ on ℝ₋
    let pair = MeasurePair::atomic(&[(-1.0, -0.5)], &[(1.0, 1.0)]).unwrap();
    let cfg = SleConfig::new(pair, 1e-4, 23);
    let opts = ObserveOptions {
        horizon: 0.5,
        stop_at_c: None,
        resolve_c: Some(1e-3),
    };
    for index in 0..10 {
        let (tr, _) =
            observe_path(&cfg, index, Complex64::new(0.3, 0.8), &Evaluator::Bv, &opts).unwrap();
        let worst =
            tr.u.windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::NEG_INFINITY, f64::max);
        assert!(worst <= 0.05, "path {index}: U rose by {worst}");
        assert!(tr.u.last().unwrap() <= &(tr.u[0] + 1e-9));
    }
}

#[test]
fn quadratic_variation_tracks_radius_clock() {
    let cfg = SleConfig::new(MeasurePair::empty(), 1e-4, 24);
    let opts = ObserveOptions {
        horizon: 0.1,
        stop_at_c: None,
        resolve_c: None,
    };
    let traces = observe_ensemble(&cfg, 100, Complex64::i(), &Evaluator::Bv, &opts).unwrap();
    let avg = traces.iter().map(qv_consistency).sum::<f64>() / traces.len() as f64;
    assert!(avg <= 0.15, "{avg}");

    // a deterministic driver is not coupled: η moves smoothly while C grows
    let frozen = SleConfig::new(MeasurePair::empty(), 1e-4, 24).with_kappa(1e-12);
    let (tr, _) = observe_path(&frozen, 0, Complex64::i(), &Evaluator::Bv, &opts).unwrap();
    assert!(qv_consistency(&tr) > 0.9);
}
