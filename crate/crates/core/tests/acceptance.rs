//! End-to-end acceptance checks. Prints one line per criterion and exits
//! nonzero if any fails.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};
use std::process::ExitCode;
use std::time::Instant;

use berryphase_core::classical::{
    aperiodic_comparison, amplitude_from_strength, ensemble_average, ensemble_solid_angle, mean_phase_prediction,
    phase_perturbative_phi, phi_plus, realization_solid_angle, recover_noise_strength, z_only_peak, z_only_shift,
};
use berryphase_core::curve::{solid_angle_phase, SphericalCurve};
use berryphase_core::dynamics::{
    berry_phase_numeric, nearest_eigenstate, phase_distance, precessing_composite, precessing_spin,
    EvolutionConfig, HamiltonianPath,
};
use berryphase_core::frames::Direction;
use berryphase_core::noise::{sample_noise_indexed, NoiseStatistics};
use berryphase_core::operators::{
    angular_momentum, sho_quadratures, verify_su2, verify_vector_operator, verify_vector_operator_on, CVector,
};
use berryphase_core::quantum::{
    angular_momentum_system, build_hamiltonian, exact_lm_scenario, jz_commutator_norm, p_minus_perturbative,
    reference_state, sho_system, solve_adiabatic, spin_phase_perturbative, total_system_phase,
    tracked_eigenstate, two_spin_system,
};
use berryphase_core::Result;
use num_complex::Complex64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn up() -> CVector {
    CVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = xs.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    cov / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>()
}

fn zero_noise_baseline() -> Result<Outcome> {
    let ratio = 1e-3;
    let zero = |_: f64| [0.0; 3];
    let mut worst_static: f64 = 0.0;
    let mut worst_dynamic: f64 = 0.0;
    for theta0 in [FRAC_PI_6, FRAC_PI_4, FRAC_PI_3, FRAC_PI_2] {
        let target = phi_plus(theta0);
        let curve = solid_angle_phase(&SphericalCurve::from_fn(|_| theta0, 257, 1)?)?;
        let pert = phase_perturbative_phi(theta0, 0.0, &zero)?.phase;
        worst_static = worst_static.max((curve - target).abs()).max((pert - target).abs());

        let rot = precessing_spin(theta0, 1.0, ratio)?;
        let init = nearest_eigenstate(&rot.at(0.0)?, &up())?;
        let report = berry_phase_numeric(&EvolutionConfig::new(ratio, 1, 0.05)?, &rot, &init)?;
        worst_dynamic = worst_dynamic.max(phase_distance(report.geometric_phase, target));
    }
    outcome(
        worst_static < 1e-10 && worst_dynamic < 5.0 * ratio,
        format!("static error {worst_static:.1e} (< 1e-10), dynamics error {worst_dynamic:.2e} (< {:.0e})", 5.0 * ratio),
    )
}

fn perturbative_order() -> Result<Outcome> {
    let theta0 = FRAC_PI_3;
    let stats = NoiseStatistics::isotropic(1.0, 2, 7);
    let noises = (0..100u64).map(|i| sample_noise_indexed(&stats, i)).collect::<Result<Vec<_>>>()?;
    let eps = [0.02, 0.04, 0.08];
    let mut medians = Vec::new();
    for &e in &eps {
        let mut errs = noises
            .iter()
            .map(|n| Ok((phase_perturbative_phi(theta0, e, n)?.phase - realization_solid_angle(theta0, e, n, 1024, 1)?).abs()))
            .collect::<Result<Vec<f64>>>()?;
        errs.sort_by(f64::total_cmp);
        medians.push(0.5 * (errs[49] + errs[50]));
    }
    let s = log_slope(&eps, &medians);
    outcome(
        (s - 3.0).abs() <= 0.3,
        format!("median errors {}, log-log slope {s:.3} (3 ± 0.3)", sci(&medians)),
    )
}

fn ensemble_mean() -> Result<Outcome> {
    let (theta0, eps) = (FRAC_PI_4, 0.05);
    let r = ensemble_average(theta0, eps, &NoiseStatistics::isotropic(1.0, 3, 11), 10_000)?;
    let predicted = mean_phase_prediction(theta0, eps, 2.0);
    let z = (r.mean_phase - predicted).abs() / r.std_error;
    let first_ok = r.breakdown.first.abs() <= 4.0 * r.first_order_std_error + 1e-15;
    outcome(
        z < 3.0 && first_ok,
        format!(
            "mean {:.6} vs {predicted:.6} ({z:.2} SE), first-order {:.1e} ± {:.1e}",
            r.mean_phase, r.breakdown.first, r.first_order_std_error
        ),
    )
}

fn z_only_analysis() -> Result<Outcome> {
    // scan the closed form for its maximum
    let (mut best_theta, mut best) = (0.0, f64::MIN);
    for k in 1..200_000 {
        let theta = FRAC_PI_2 * k as f64 / 200_000.0;
        let v = z_only_shift(theta, 1.0, 1.0)?;
        if v > best {
            (best_theta, best) = (theta, v);
        }
    }
    let peak_value = best / (1.5 * std::f64::consts::PI);
    let (closed_theta, _) = z_only_peak();
    let p = recover_noise_strength(1.80e-3, 3600.0)?;

    let omega_l = 3600.0;
    let p_true = 56.7;
    let eps = amplitude_from_strength(p_true, omega_l);
    let mc = ensemble_solid_angle(closed_theta, eps, &NoiseStatistics::z_only(1.0, 4, 5), 4000, 512, 1)?;
    let shift = phi_plus(closed_theta) - mc.mean;
    let p_mc = recover_noise_strength(shift, omega_l)?;
    let rel = (p_mc / p_true - 1.0).abs();
    outcome(
        (best_theta - 0.955).abs() < 1e-3 && (peak_value - 0.385).abs() <= 1e-3 && (p - 56.7).abs() <= 0.1 && rel < 0.05,
        format!(
            "peak at {best_theta:.4} rad value {peak_value:.4}, P(1.80e-3) = {p:.2} rad/s, Monte Carlo P = {p_mc:.2} ({:.1}% off)",
            100.0 * rel
        ),
    )
}

fn aperiodic_consistency() -> Result<Outcome> {
    let stats = NoiseStatistics::isotropic(0.5, 8, 2026).aperiodic();
    let r = aperiodic_comparison(FRAC_PI_3, 0.05, &stats, 2000, 256, 8)?;
    let combined = r.single_turn.std_error.hypot(r.per_turn.std_error);
    let gap = (r.single_turn.mean - r.per_turn.mean).abs();
    outcome(
        gap <= 3.0 * combined,
        format!(
            "single turn {:.6}, per turn of 8 {:.6}, gap {gap:.1e} vs combined SE {combined:.1e}",
            r.single_turn.mean, r.per_turn.mean
        ),
    )
}

fn oscillator_example() -> Result<Outcome> {
    let mut worst_moment: f64 = 0.0;
    for n_max in 2..=5 {
        let modes = sho_quadratures(n_max)?;
        let sq = &(&modes.b[0] * &modes.b[0]) + &(&modes.b[1] * &modes.b[1]);
        worst_moment = worst_moment.max((sq.expectation(&modes.ground)? - 2.0).norm());
    }
    let report = spin_phase_perturbative(&sho_system(3, 1.0, 0.05)?, FRAC_PI_4)?;
    let shift = (report.effective_polar_angle().unwrap_or(f64::NAN) - FRAC_PI_4).to_degrees();
    let commutator = report.breakdown.map_or(f64::NAN, |b| b.commutator);
    outcome(
        worst_moment == 0.0 && (shift - 0.14).abs() <= 0.005 && commutator == 0.0,
        format!("<b1²+b2²> deviation {worst_moment:.1e}, Θ_eff − Θ₀ = {shift:.4}°, commutator term {commutator}"),
    )
}

fn two_spin_example() -> Result<Outcome> {
    let flip = p_minus_perturbative(&two_spin_system(0.0)?)?;
    let split_ok = flip.p_minus.abs() < 1e-12
        && (flip.breakdown.fluctuation - 2.0).abs() < 1e-12
        && (flip.breakdown.commutator + 2.0).abs() < 1e-12;

    let theta0 = FRAC_PI_3;
    let n = Direction::new(theta0, 0.4)?;
    let sys = two_spin_system(0.0)?;
    let h = build_hamiltonian(&sys, 1.0, &n)?;
    let reference = reference_state(&sys, &n)?;
    let tracked = tracked_eigenstate(&h, &reference)?;
    let residual = (h.apply(reference.amplitudes())? - reference.amplitudes() * Complex64::new(tracked.energy, 0.0)).norm();
    let closed = total_system_phase(0.5, theta0);

    let driven = two_spin_system(10.0)?;
    let gap = 0.475;
    let omega = 1e-3 * gap;
    let (rot, init) = precessing_composite(&driven, 1.0, theta0, omega)?;
    let report = berry_phase_numeric(&EvolutionConfig::new(omega, 1, 0.05)?, &rot, &init)?;
    let ratio = report.adiabaticity.unwrap_or(f64::NAN);
    let err = phase_distance(report.geometric_phase, closed);
    outcome(
        split_ok && residual < 1e-12 && (closed - 2.0 * phi_plus(theta0)).abs() < 1e-15 && err < 5.0 * ratio,
        format!(
            "p₋ = {:.1e} (fluctuation {:+.3}, commutator {:+.3}), eigen residual {residual:.1e}, dynamics error {err:.2e} at ω/Ω = {ratio:.2e}",
            flip.p_minus, flip.breakdown.fluctuation, flip.breakdown.commutator
        ),
    )
}

fn angular_momentum_exact() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for (l, m) in [(1.0, 0.0), (2.0, 1.0), (10.0, 9.0), (10.0, 5.0), (3.0, 3.0), (10.0, 10.0)] {
        let (_, split) = solve_adiabatic(&angular_momentum_system(l, m, 0.0)?, 1.0, &Direction::z())?;
        worst = worst.max((split.p_minus - (l - m) / (2.0 * l + 1.0)).abs());
    }
    outcome(worst < 1e-10, format!("largest |p₋ − (l−m)/(2l+1)| = {worst:.1e}"))
}

fn perturbative_convergence() -> Result<Outcome> {
    let ms = [10.0, 20.0, 40.0, 80.0];
    let gaps = ms
        .iter()
        .map(|&m| {
            let r = exact_lm_scenario(m + 1.0, m, 1.0, |_| 0.0, FRAC_PI_3)?;
            Ok((r.phi_exact - r.phi_perturbative.unwrap_or(f64::NAN)).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    let s = log_slope(&ms, &gaps);
    outcome((s + 2.0).abs() <= 0.2, format!("|φ_exact − φ_pert| = {}, slope {s:.3} (−2 ± 0.2)", sci(&gaps)))
}

fn structural_invariants() -> Result<Outcome> {
    let mut su2: f64 = 0.0;
    for twice in 1..=20 {
        let l = twice as f64 / 2.0;
        let r = verify_su2(&angular_momentum(l)?, l)?;
        su2 = su2.max(r.commutator_violation).max(r.casimir_violation / (l * (l + 1.0)));
    }
    let ops = angular_momentum(3.5)?;
    let vector_l = verify_vector_operator(&ops, &ops)?.worst();
    let modes = sho_quadratures(4)?;
    let vector_sho = verify_vector_operator_on(&modes.l, &modes.b, &modes.interior_columns(2))?.worst();

    let mut jz: f64 = 0.0;
    let mut schmidt_err: f64 = 0.0;
    let n = Direction::new(0.8, 1.9)?;
    for sys in [
        angular_momentum_system(10.0, 9.0, 0.0)?,
        angular_momentum_system(4.5, 1.5, 0.3)?,
        two_spin_system(0.0)?,
    ] {
        jz = jz.max(jz_commutator_norm(&sys, 1.0)?);
        let (tracked, split) = solve_adiabatic(&sys, 1.0, &n)?;
        schmidt_err = schmidt_err.max((split.reconstruct() - tracked.state.amplitudes()).norm());
    }

    let sys = angular_momentum_system(3.0, 2.0, 5.0)?;
    let (rot, init) = precessing_composite(&sys, 1.0, 0.9, 0.05)?;
    let drift = berry_phase_numeric(&EvolutionConfig::new(0.05, 1, 0.05)?, &rot, &init)?.norm_drift;

    outcome(
        su2 < 1e-12 && vector_l < 1e-12 && vector_sho < 1e-12 && jz < 1e-12 && schmidt_err < 1e-10 && drift < 1e-10,
        format!(
            "su(2) {su2:.1e}, vector operator {:.1e}, J_z commutator {jz:.1e}, Schmidt {schmidt_err:.1e}, norm drift {drift:.1e}",
            vector_l.max(vector_sho)
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let criteria: [(&str, fn() -> Result<Outcome>); 10] = [
        ("zero-noise baseline", zero_noise_baseline),
        ("perturbative remainder is cubic", perturbative_order),
        ("isotropic ensemble mean", ensemble_mean),
        ("z-only shift and strength recovery", z_only_analysis),
        ("aperiodic closure consistency", aperiodic_consistency),
        ("oscillator example", oscillator_example),
        ("two-spin example", two_spin_example),
        ("angular momentum exact flip probability", angular_momentum_exact),
        ("perturbation theory converges as 1/m²", perturbative_convergence),
        ("structural invariants", structural_invariants),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {detail} [{:.1} s]",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of 10 passed in {:.1} s", 10 - failures, start.elapsed().as_secs_f64());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
