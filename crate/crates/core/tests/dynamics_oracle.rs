use std::f64::consts::{FRAC_PI_3, FRAC_PI_6};

use berryphase_core::classical::{phi_plus, realization_solid_angle};
use berryphase_core::dynamics::{
    berry_phase_numeric, evolve, noisy_spin, nearest_eigenstate, phase_distance, precessing_composite,
    precessing_spin, EvolutionConfig, HamiltonianPath,
};
use berryphase_core::operators::CVector;
use berryphase_core::quantum::{angular_momentum_system, total_system_phase};
use num_complex::Complex64;

fn up() -> CVector {
    CVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])
}

fn spin_phase_error(theta0: f64, ratio: f64, dt: f64) -> f64 {
    let rot = precessing_spin(theta0, 1.0, ratio).unwrap();
    let init = nearest_eigenstate(&rot.at(0.0).unwrap(), &up()).unwrap();
    let cfg = EvolutionConfig::new(ratio, 1, dt).unwrap();
    let report = berry_phase_numeric(&cfg, &rot, &init).unwrap();
    assert!(report.norm_drift < 1e-10);
    phase_distance(report.geometric_phase, phi_plus(theta0))
}

#[test]
fn halving_the_step_quarters_the_error() {
    let rot = precessing_spin(1.0, 1.0, 0.1).unwrap();
    let init = nearest_eigenstate(&rot.at(0.0).unwrap(), &up()).unwrap();
    let run = |dt: f64| evolve(&EvolutionConfig::new(0.1, 1, dt).unwrap(), &rot, &init).unwrap();
    let reference = run(0.005);
    let errs: Vec<f64> = [0.4, 0.2, 0.1]
        .iter()
        .map(|&dt| (run(dt).final_state - &reference.final_state).norm())
        .collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.5..4.5).contains(&ratio), "step halving gave {ratio} ({errs:?})");
    }
}

#[test]
fn nonadiabatic_error_is_linear_in_precession_rate() {
    let theta0 = FRAC_PI_3;
    let ratios = [1e-2, 3e-3, 1e-3];
    let errs: Vec<f64> = ratios.iter().map(|&r| spin_phase_error(theta0, r, 0.05)).collect();
    let s = (errs[0] / errs[2]).ln() / (ratios[0] / ratios[2]).ln();
    assert!((s - 1.0).abs() < 0.1, "slope {s} ({errs:?})");
    for (e, r) in errs.iter().zip(ratios) {
        assert!(*e < 5.0 * r);
    }
}

#[test]
fn small_cone_gives_small_phase() {
    let theta0 = 0.01;
    let rot = precessing_spin(theta0, 1.0, 1e-3).unwrap();
    let init = nearest_eigenstate(&rot.at(0.0).unwrap(), &up()).unwrap();
    let report = berry_phase_numeric(&EvolutionConfig::new(1e-3, 1, 0.05).unwrap(), &rot, &init).unwrap();
    assert!(report.geometric_phase.abs() < 1e-3);
}

#[test]
fn turns_accumulate() {
    let theta0 = 0.7;
    let ratio = 2e-3;
    let rot = precessing_spin(theta0, 1.0, ratio).unwrap();
    let init = nearest_eigenstate(&rot.at(0.0).unwrap(), &up()).unwrap();
    let report = berry_phase_numeric(&EvolutionConfig::new(ratio, 3, 0.05).unwrap(), &rot, &init).unwrap();
    assert!(phase_distance(report.geometric_phase, 3.0 * phi_plus(theta0)) < 3.0 * 5.0 * ratio);
}

#[test]
fn noisy_field_follows_its_solid_angle() {
    let theta0 = 1.0;
    let eps = 0.05;
    let ratio = 1e-3;
    let noise = |phi: f64| [phi.cos(), 0.5 * phi.sin(), phi.cos()];
    let path = noisy_spin(theta0, eps, &noise, 1.0, ratio).unwrap();
    let init = nearest_eigenstate(&path(0.0).unwrap(), &up()).unwrap();
    let cfg = EvolutionConfig::new(ratio, 1, 0.1).unwrap();
    let noisy = berry_phase_numeric(&cfg, &path, &init).unwrap().geometric_phase;
    let oracle = realization_solid_angle(theta0, eps, &noise, 4096, 1).unwrap();
    assert!(phase_distance(noisy, oracle) < 5.0 * ratio + eps.powi(3));

    // The nonadiabatic error is nearly the same with and without noise, so
    // the noise-induced shift itself is resolved much more finely.
    let clean = precessing_spin(theta0, 1.0, ratio).unwrap();
    let init = nearest_eigenstate(&clean.at(0.0).unwrap(), &up()).unwrap();
    let baseline = berry_phase_numeric(&cfg, &clean, &init).unwrap().geometric_phase;
    let shift = oracle - phi_plus(theta0);
    let err = (noisy - baseline - shift).abs();
    assert!(shift.abs() > 1e-3, "shift {shift}");
    assert!(err < 0.1 * shift.abs(), "shift {shift}, err {err}");
}

#[test]
fn angular_momentum_composite_total_phase() {
    let m = 9.0;
    let sys = angular_momentum_system(10.0, m, 10.0).unwrap();
    let gap = 4.5;
    let omega = 1e-3 * gap;
    let (rot, init) = precessing_composite(&sys, 1.0, FRAC_PI_6, omega).unwrap();
    let report = berry_phase_numeric(&EvolutionConfig::new(omega, 1, 0.05).unwrap(), &rot, &init).unwrap();
    let ratio = report.adiabaticity.unwrap();
    assert!((ratio - 1e-3).abs() < 1e-4, "gap moved: {ratio}");
    let err = phase_distance(report.geometric_phase, total_system_phase(m, FRAC_PI_6));
    assert!(err < 5.0 * (2.0 * m + 1.0) * ratio, "err {err}");
    assert!(report.norm_drift < 1e-10);
}
