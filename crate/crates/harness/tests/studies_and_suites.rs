use std::f64::consts::PI;

use sle4rho_core::boundary::{measure_to_function, MeasurePair};
use sle4rho_core::stats::{ks_two_sample, mean};
use sle4rho_harness::report::StudyReport;
use sle4rho_harness::studies::{
    first_exit_arg, reversed_exit_arg, run_approximation_study, run_reversal_study, StudySettings,
};
use sle4rho_harness::suites::{run_suite, SuiteOptions};
use sle4rho_harness::HarnessError;

fn settings(paths: usize) -> StudySettings {
    StudySettings {
        paths,
        seed: 3,
        dt: 1e-3,
        horizon: 1.0,
        stride: 5,
    }
}

#[test]
fn piecewise_data_already_resolved_gives_zero_distances() {
    let pair = MeasurePair::atomic(&[(-0.5, 0.25)], &[(1.0, 0.5)]).unwrap();
    let f = measure_to_function(&pair);
    let study = run_approximation_study(&f, &[2, 4], &settings(20)).unwrap();
    for r in &study.rows {
        assert_eq!(r.sup_error, 0.0);
        assert_eq!(r.ks, 0.0);
        assert_eq!(r.dstar_mean, 0.0);
    }
}

#[test]
fn approximation_study_rejects_bad_input() {
    let f = measure_to_function(&MeasurePair::empty());
    assert!(matches!(
        run_approximation_study(&f, &[8, 4], &settings(5)),
        Err(HarnessError::Config(_))
    ));
    let bad = measure_to_function(&MeasurePair::atomic(&[], &[(0.0, -2.5)]).unwrap());
    assert!(run_approximation_study(&bad, &[4], &settings(5)).is_err());
}

#[test]
fn exit_functionals_on_hand_made_curves() {
    use num_complex::Complex64 as C;
    let up = [C::new(0.0, 0.0), C::new(0.0, 0.5), C::new(0.0, 1.5)];
    assert!((first_exit_arg(&up).unwrap() - PI / 2.0).abs() < 1e-12);
    // γ' leaving the disk at angle θ maps to an exit at π - θ
    let tilted = [
        C::new(0.0, 0.0),
        C::new(0.5, 0.5),
        C::new(1.0, 1.0),
        C::new(3.0, 3.0),
    ];
    assert!((reversed_exit_arg(&tilted).unwrap() - 0.75 * PI).abs() < 1e-12);
    assert!(reversed_exit_arg(&up[..2]).is_none());
}

#[test]
fn symmetric_pair_has_symmetric_exit_law() {
    let s = StudySettings {
        horizon: 4.0,
        stride: 4,
        ..settings(120)
    };
    let study = run_reversal_study(&MeasurePair::empty(), None, &s, 0.01).unwrap();
    let a = &study.samples.forward_exit;
    let mirrored: Vec<f64> = a.iter().map(|x| PI - x).collect();
    assert!(ks_two_sample(a, &mirrored).p_value >= 0.01);
    assert!((mean(a) - PI / 2.0).abs() < 0.15, "{}", mean(a));
}

#[test]
fn suites_report_and_reject_unknown_names() {
    let dir = tempfile::tempdir().unwrap();
    let opts = SuiteOptions {
        out: Some(dir.path().to_path_buf()),
        ..Default::default()
    };
    let rep = run_suite("loewner-oracle", &opts).unwrap();
    assert!(rep.pass, "{}", rep.summary());
    let back = StudyReport::read(&dir.path().join("suite_loewner-oracle.json")).unwrap();
    assert_eq!(back, rep);
    assert!(back.matches(&rep.provenance.config_hash));
    assert!(dir.path().join("loewner_radius.csv").exists());
    assert!(matches!(
        run_suite("nope", &opts),
        Err(HarnessError::UnknownSuite(_))
    ));
}

#[test]
fn suite_reports_are_deterministic() {
    let opts = SuiteOptions {
        paths: Some(20),
        dt: Some(1e-3),
        ..Default::default()
    };
    let a = run_suite("qv", &opts).unwrap();
    let b = run_suite("qv", &opts).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}
