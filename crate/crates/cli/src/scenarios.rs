use std::f64::consts::{FRAC_PI_3, PI};
use std::fmt;
use std::str::FromStr;

use berryphase_core::classical::{
    aperiodic_comparison, amplitude_from_strength, ensemble_average, ensemble_solid_angle, mean_phase_prediction,
    phi_plus, recover_noise_strength, z_only_peak, z_only_shift,
};
use berryphase_core::dynamics::{
    berry_phase_numeric, nearest_eigenstate, phase_distance, precessing_composite, precessing_spin, spectral_gap,
    EvolutionConfig, HamiltonianPath, RotatingHamiltonian,
};
use berryphase_core::frames::Direction;
use berryphase_core::noise::NoiseStatistics;
use berryphase_core::operators::{CVector, VectorOperatorSystem};
use berryphase_core::quantum::{
    angular_momentum_system, exact_lm_scenario, p_minus_perturbative, sho_system, solve_adiabatic,
    spin_phase_from_schmidt, spin_phase_perturbative, total_system_phase, two_spin_system, SpinFlipBreakdown,
};
use berryphase_core::Error as CoreError;
use serde_json::{json, Map, Value};

use crate::averaging::diagnose_averaging_conventions;
use crate::error::{CliError, Result};
use crate::output::Report;
use crate::params::Params;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    ClassicalSweep,
    ZOnlyNoise,
    StrengthRecovery,
    AperiodicCheck,
    QuantumSho,
    QuantumTwoSpin,
    QuantumAngularMomentum,
    ExactVsPert,
    DynamicsCheck,
}

impl Scenario {
    pub const ALL: [Scenario; 9] = [
        Scenario::ClassicalSweep,
        Scenario::ZOnlyNoise,
        Scenario::StrengthRecovery,
        Scenario::AperiodicCheck,
        Scenario::QuantumSho,
        Scenario::QuantumTwoSpin,
        Scenario::QuantumAngularMomentum,
        Scenario::ExactVsPert,
        Scenario::DynamicsCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::ClassicalSweep => "classical-sweep",
            Scenario::ZOnlyNoise => "z-only-noise",
            Scenario::StrengthRecovery => "filipp-recover",
            Scenario::AperiodicCheck => "aperiodic-check",
            Scenario::QuantumSho => "quantum-sho",
            Scenario::QuantumTwoSpin => "quantum-two-spin",
            Scenario::QuantumAngularMomentum => "quantum-angular-momentum",
            Scenario::ExactVsPert => "exact-vs-pert",
            Scenario::DynamicsCheck => "dynamics-check",
        }
    }

    /// Scenarios that draw noise and so need a seed.
    pub fn is_stochastic(self) -> bool {
        matches!(self, Scenario::ClassicalSweep | Scenario::ZOnlyNoise | Scenario::AperiodicCheck)
    }

    pub fn describe(self) -> &'static str {
        match self {
            Scenario::ClassicalSweep => "ensemble mean phase over a (theta0, epsilon) grid",
            Scenario::ZOnlyNoise => "phase shift from z-only noise against sin^2 cos",
            Scenario::StrengthRecovery => "noise strength from a measured peak shift",
            Scenario::AperiodicCheck => "single-turn against many-turn phases for aperiodic noise",
            Scenario::QuantumSho => "spin coupled to an oscillator's position",
            Scenario::QuantumTwoSpin => "spin coupled to a second spin",
            Scenario::QuantumAngularMomentum => "spin coupled to an angular momentum |l,m>",
            Scenario::ExactVsPert => "exact and perturbative phases for l = m + k",
            Scenario::DynamicsCheck => "time evolution against the adiabatic phase",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL.into_iter().find(|sc| sc.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Scenario::ALL.iter().map(|s| s.name()).collect();
            CliError::Config(format!("unknown scenario `{s}` (expected one of {})", names.join(", ")))
        })
    }
}

fn record(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("records are built from object literals"),
    }
}

fn deg(x: f64) -> f64 {
    x.to_degrees()
}

fn breakdown_json(b: Option<&SpinFlipBreakdown>) -> Value {
    json!({
        "fluctuation": b.map(|b| b.fluctuation),
        "commutator": b.map(|b| b.commutator),
    })
}

/// Least-squares slope of `ln y` against `ln x` over the positive pairs.
fn log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn require_seed(scenario: Scenario, seed: Option<u64>) -> Result<u64> {
    seed.ok_or_else(|| CliError::Config(format!("scenario {scenario} is stochastic and needs a seed (--seed N)")))
}

/// Runs `scenario`, consuming its keys from `params`.
pub fn run_scenario(scenario: Scenario, params: &mut Params, seed: Option<u64>) -> Result<Report> {
    match scenario {
        Scenario::ClassicalSweep => classical_sweep(params, require_seed(scenario, seed)?),
        Scenario::ZOnlyNoise => z_only_noise(params, require_seed(scenario, seed)?),
        Scenario::StrengthRecovery => strength_recovery(params),
        Scenario::AperiodicCheck => aperiodic_check(params, require_seed(scenario, seed)?),
        Scenario::QuantumSho => quantum_sho(params),
        Scenario::QuantumTwoSpin => quantum_two_spin(params),
        Scenario::QuantumAngularMomentum => quantum_angular_momentum(params),
        Scenario::ExactVsPert => exact_vs_pert(params),
        Scenario::DynamicsCheck => dynamics_check(params),
    }
}

fn noise_stats(p: &mut Params, default_sigma: f64, default_k_max: u32, seed: u64) -> Result<NoiseStatistics> {
    let sigma = p.f64_or("sigma", default_sigma)?;
    let k_max = p.u32_or("k_max", default_k_max)?;
    let mode = p.choice("noise", &["isotropic", "z_only"], Some("isotropic"))?;
    Ok(match mode.as_str() {
        "z_only" => NoiseStatistics::z_only(sigma, k_max, seed),
        _ => NoiseStatistics::isotropic(sigma, k_max, seed),
    })
}

fn classical_sweep(p: &mut Params, seed: u64) -> Result<Report> {
    let thetas = p.grid("theta0")?;
    let epsilons = p.grid("epsilon")?;
    let stats = noise_stats(p, 1.0, 4, seed)?;
    let n = p.usize_or("n_realizations", 1000)?;
    let z_only = matches!(stats.mode, berryphase_core::noise::NoiseMode::ZOnly);

    let mut report = Report::default();
    let mut worst_z: f64 = 0.0;
    // every grid point reuses the same draws, so differences between points
    // are not blurred by independent sampling noise
    for &theta0 in &thetas {
        for &epsilon in &epsilons {
            let r = ensemble_average(theta0, epsilon, &stats, n)?;
            let predicted = if z_only {
                phi_plus(theta0) - z_only_shift(theta0, epsilon, stats.sigma * stats.sigma)?
            } else {
                mean_phase_prediction(theta0, epsilon, 2.0 * stats.sigma * stats.sigma)
            };
            let z = (r.mean_phase - predicted) / r.std_error;
            worst_z = worst_z.max(z.abs());
            report.records.push(record(json!({
                "theta0": theta0,
                "epsilon": epsilon,
                "mean_phase": r.mean_phase,
                "std_error": r.std_error,
                "breakdown": {
                    "zeroth": r.breakdown.zeroth,
                    "first": r.breakdown.first,
                    "second": r.breakdown.second,
                },
                "first_order_std_error": r.first_order_std_error,
                "predicted": predicted,
                "z_score": z,
                "sigma_z_phase": r.sigma_z_phase(),
            })));
        }
    }
    report.summary.insert("max_abs_z_score".into(), json!(worst_z));
    report
        .notes
        .push(format!("{} grid points, largest |z| against the closed form {worst_z:.2}", report.records.len()));
    Ok(report)
}

fn z_only_noise(p: &mut Params, seed: u64) -> Result<Report> {
    let thetas = p.grid("theta0")?;
    let amplitude = p.f64_opt("amplitude")?;
    let (amplitude, omega_l) = match amplitude {
        Some(a) => (a, None),
        None => {
            let strength = p.f64("strength").map_err(|_| {
                CliError::Config("z-only-noise needs `amplitude` or `strength` (with optional `omega_l`)".into())
            })?;
            let omega_l = p.f64_or("omega_l", 3600.0)?;
            (amplitude_from_strength(strength, omega_l), Some(omega_l))
        }
    };
    let k_max = p.u32_or("k_max", 4)?;
    let n = p.usize_or("n_realizations", 1000)?;
    let samples = p.usize_or("samples_per_turn", 256)?;
    let (peak_theta, _) = z_only_peak();
    let diag_theta = p.f64_or("averaging_theta0", peak_theta)?;
    // unit-variance b_z scaled by the amplitude
    let stats = NoiseStatistics::z_only(1.0, k_max, seed);

    let mut report = Report::default();
    let (mut sxy, mut sxx) = (0.0, 0.0);
    let mut best = (f64::NAN, f64::MIN);
    let mut best_mc = (f64::NAN, f64::MIN);
    for &theta0 in &thetas {
        let (s, c) = theta0.sin_cos();
        let shape = s * s * c;
        let analytic = z_only_shift(theta0, amplitude, 1.0)?;
        let mc = ensemble_solid_angle(theta0, amplitude, &stats, n, samples, 1)?;
        let shift = phi_plus(theta0) - mc.mean;
        sxy += shift * shape;
        sxx += shape * shape;
        if analytic > best.1 {
            best = (theta0, analytic);
        }
        if shift > best_mc.1 {
            best_mc = (theta0, shift);
        }
        report.records.push(record(json!({
            "theta0": theta0,
            "shape": shape,
            "delta_phi_analytic": analytic,
            "delta_phi_mc": shift,
            "mc_std_error": mc.std_error,
        })));
    }

    // Δφ = (3π/2) a² shape fixes the amplitude a
    let fitted_amplitude = (sxx > 0.0 && sxy > 0.0).then(|| (sxy / sxx / (1.5 * PI)).sqrt());
    let fitted_strength = fitted_amplitude.zip(omega_l).map(|(a, w)| 0.5 * a * w);
    let diag = diagnose_averaging_conventions(diag_theta, amplitude, &stats, n.max(2), samples)?;

    report.summary.insert("amplitude".into(), json!(amplitude));
    report.summary.insert("peak_theta0_analytic".into(), json!(best.0));
    report.summary.insert("peak_theta0_mc".into(), json!(best_mc.0));
    report.summary.insert("fitted_amplitude".into(), json!(fitted_amplitude));
    report.summary.insert("fitted_strength".into(), json!(fitted_strength));
    report.summary.insert("averaging".into(), diag.to_json());

    report.notes.push(format!(
        "largest shift on the grid at {:.2} deg (analytic), {:.2} deg (Monte Carlo)",
        deg(best.0),
        deg(best_mc.0)
    ));
    if let Some(a) = fitted_amplitude {
        report.notes.push(format!("fitted amplitude {a:.5} (input {amplitude:.5})"));
    }
    if let (Some(r), Some(e)) = (diag.strength_ratio, diag.strength_ratio_std_error) {
        report.notes.push(format!(
            "averaging the angle instead of cos(angle) inflates the fitted strength by {r:.3} ± {e:.3} (small-noise value {:.3})",
            diag.expected_strength_ratio
        ));
    }
    Ok(report)
}

fn strength_recovery(p: &mut Params) -> Result<Report> {
    let shifts = p.grid_or("delta_phi_max", &[1.80e-3])?;
    let omega_l = p.f64_or("omega_l", 3600.0)?;
    let (peak_theta, peak_shape) = z_only_peak();
    let mut report = Report::default();
    for &d in &shifts {
        let strength = recover_noise_strength(d, omega_l)?;
        report.records.push(record(json!({
            "delta_phi_max": d,
            "omega_l": omega_l,
            "peak_theta0": peak_theta,
            "peak_shape": peak_shape,
            "amplitude": amplitude_from_strength(strength, omega_l),
            "strength": strength,
        })));
        report
            .notes
            .push(format!("peak shift {d:e} rad at {:.2} deg gives P = {strength:.2} rad/s", deg(peak_theta)));
    }
    Ok(report)
}

fn aperiodic_check(p: &mut Params, seed: u64) -> Result<Report> {
    let thetas = p.grid("theta0")?;
    let epsilons = p.grid("epsilon")?;
    let stats = noise_stats(p, 0.5, 8, seed)?.aperiodic();
    let n = p.usize_or("n_realizations", 2000)?;
    let samples = p.usize_or("samples_per_turn", 256)?;
    let turns = p.u32_or("n_turns", 8)?;
    let mut report = Report::default();
    for &theta0 in &thetas {
        for &epsilon in &epsilons {
            let c = aperiodic_comparison(theta0, epsilon, &stats, n, samples, turns)?;
            let combined = c.single_turn.std_error.hypot(c.per_turn.std_error);
            report.records.push(record(json!({
                "theta0": theta0,
                "epsilon": epsilon,
                "n_turns": turns,
                "phi_plus": phi_plus(theta0),
                "single_turn": {"mean": c.single_turn.mean, "std_error": c.single_turn.std_error},
                "per_turn": {"mean": c.per_turn.mean, "std_error": c.per_turn.std_error},
                "difference": {"mean": c.difference.mean, "std_error": c.difference.std_error},
                "gap_over_combined_error": (c.single_turn.mean - c.per_turn.mean).abs() / combined,
            })));
        }
    }
    Ok(report)
}

/// Exact spin phase from the tracked eigenstate of `sys` with its field at
/// `theta0`, and the perturbative report when the driving field is nonzero.
struct QuantumPoint {
    p_exact: f64,
    phi_exact: f64,
    pert: Option<berryphase_core::quantum::PhaseReport>,
    bound_violated: Option<bool>,
}

fn quantum_point(sys: &VectorOperatorSystem, lambda: Option<f64>, theta0: f64) -> Result<QuantumPoint> {
    let (pert, bound_violated) = match spin_phase_perturbative(sys, theta0) {
        Ok(r) => (Some(r), Some(p_minus_perturbative(sys)?.bound_violated)),
        Err(CoreError::DegenerateDrivingField) => (None, None),
        Err(e) => return Err(e.into()),
    };
    let (p_exact, phi_exact) = match lambda {
        Some(l) => {
            let (_, split) = solve_adiabatic(sys, l, &Direction::new(theta0, 0.0)?)?;
            (split.p_minus, spin_phase_from_schmidt(split.p_minus, theta0)?.phi_total)
        }
        None => (f64::NAN, f64::NAN),
    };
    Ok(QuantumPoint {
        p_exact,
        phi_exact,
        pert,
        bound_violated,
    })
}

fn quantum_record(head: Value, q: &QuantumPoint, total_phase: Option<f64>) -> Map<String, Value> {
    let mut r = record(head);
    let pert = q.pert.as_ref();
    let finite = |x: f64| x.is_finite().then_some(x);
    r.insert("p_minus_exact".into(), json!(finite(q.p_exact)));
    r.insert("p_minus_pert".into(), json!(pert.map(|r| r.p_minus)));
    r.insert("phi_exact".into(), json!(finite(q.phi_exact)));
    r.insert("phi_pert".into(), json!(pert.map(|r| r.phi_total)));
    r.insert("phi_classical".into(), json!(pert.map(|r| r.phi_classical)));
    r.insert("breakdown".into(), breakdown_json(pert.and_then(|r| r.breakdown.as_ref())));
    r.insert("bound_violated".into(), json!(q.bound_violated));
    if let Some(t) = total_phase {
        r.insert("total_phase".into(), json!(t));
    }
    r
}

fn quantum_sho(p: &mut Params) -> Result<Report> {
    let thetas = p.grid("theta0")?;
    let epsilons = p.grid("epsilon")?;
    let n_max = p.usize_or("n_max", 3)?;
    let rho = p.f64_or("rho", 1.0)?;
    let lambda = p.f64_opt("lambda")?;
    let mut report = Report::default();
    for &epsilon in &epsilons {
        let sys = sho_system(n_max, rho, epsilon * rho)?;
        for &theta0 in &thetas {
            let q = quantum_point(&sys, lambda, theta0)?;
            let mut r = quantum_record(json!({"theta0": theta0, "epsilon": epsilon}), &q, None);
            let pert = q.pert.as_ref();
            let effective = pert.and_then(|r| r.effective_polar_angle());
            r.insert("classical_correspondence".into(), json!(pert.and_then(|r| r.classical_correspondence)));
            r.insert("effective_theta0".into(), json!(effective));
            r.insert("effective_theta0_shift".into(), json!(effective.map(|t| t - theta0)));
            if let Some(shift) = effective.map(|t| t - theta0) {
                report.notes.push(format!(
                    "epsilon {epsilon}: cone at {:.2} deg looks like {:.4} deg ({:+.4} deg)",
                    deg(theta0),
                    deg(theta0 + shift),
                    deg(shift)
                ));
            }
            report.records.push(r);
        }
    }
    Ok(report)
}

fn quantum_two_spin(p: &mut Params) -> Result<Report> {
    let thetas = p.grid_or("theta0", &[FRAC_PI_3])?;
    let lambda = p.f64_or("lambda", 1.0)?;
    let b = p.f64_or("b", 0.0)?;
    let sys = two_spin_system(b)?;
    let mut report = Report::default();
    for &theta0 in &thetas {
        let q = quantum_point(&sys, Some(lambda), theta0)?;
        if let Some(bd) = q.pert.as_ref().and_then(|r| r.breakdown) {
            report.notes.push(format!(
                "theta0 {:.2} deg: p_minus {:.3e} exact, {:.3e} from fluctuation {:+.3} and commutator {:+.3}",
                deg(theta0),
                q.p_exact,
                bd.p_minus(),
                bd.fluctuation,
                bd.commutator
            ));
        }
        report.records.push(quantum_record(json!({"theta0": theta0}), &q, Some(total_system_phase(0.5, theta0))));
    }
    Ok(report)
}

fn quantum_angular_momentum(p: &mut Params) -> Result<Report> {
    let l = p.f64("l")?;
    let m = p.f64("m")?;
    let thetas = p.grid_or("theta0", &[FRAC_PI_3])?;
    let lambda = p.f64_or("lambda", 1.0)?;
    let b = p.f64_or("b", 0.0)?;
    let sys = angular_momentum_system(l, m, b)?;
    let mut report = Report::default();
    for &theta0 in &thetas {
        let q = quantum_point(&sys, Some(lambda), theta0)?;
        if q.bound_violated == Some(true) {
            report
                .notes
                .push(format!("l {l}, m {m}: perturbative p_minus exceeds 1/2, small-fluctuation regime broken"));
        }
        report.records.push(quantum_record(
            json!({"l": l, "m": m, "theta0": theta0}),
            &q,
            Some(total_system_phase(m, theta0)),
        ));
    }
    Ok(report)
}

fn exact_vs_pert(p: &mut Params) -> Result<Report> {
    let ms = p.grid("m")?;
    let k = p.f64_or("k", 1.0)?;
    let theta0 = p.f64_or("theta0", FRAC_PI_3)?;
    let lambda = p.f64_or("lambda", 1.0)?;
    let mut report = Report::default();
    let mut diffs = Vec::new();
    for &m in &ms {
        // flat spectrum: E_lm does not depend on m
        let r = exact_lm_scenario(m + k, m, lambda, |_| 0.0, theta0)?;
        let diff = r.phi_perturbative.map(|pp| (r.phi_exact - pp).abs());
        diffs.push(diff.unwrap_or(f64::NAN));
        report.records.push(record(json!({
            "l": r.l,
            "m": r.m,
            "theta0": theta0,
            "p_minus_exact": r.p_minus_exact,
            "p_minus_pert": r.p_minus_perturbative,
            "phi_exact": r.phi_exact,
            "phi_pert": r.phi_perturbative,
            "abs_diff": diff,
        })));
    }
    let slope = log_slope(&ms, &diffs);
    report.summary.insert("log_log_slope".into(), json!(slope));
    if let Some(s) = slope {
        report.notes.push(format!("|phi_exact - phi_pert| falls off as m^{s:.3}"));
    }
    Ok(report)
}

fn dynamics_check(p: &mut Params) -> Result<Report> {
    let system = p.choice("system", &["spin", "two-spin", "angular-momentum"], None)?;
    let thetas = p.grid("theta0")?;
    let ratio = p.f64_or("adiabaticity", 1e-3)?;
    let dt = p.f64_or("dt", 0.05)?;
    let turns = p.u32_or("n_turns", 1)?;

    enum Kind {
        Spin(f64),
        Composite(VectorOperatorSystem, f64, f64),
    }
    let kind = match system.as_str() {
        "spin" => Kind::Spin(p.f64_or("big_omega", 1.0)?),
        "two-spin" => {
            let b = p.f64_or("b", 10.0)?;
            let lambda = p.f64_or("lambda", 1.0)?;
            Kind::Composite(two_spin_system(b)?, lambda, 0.5)
        }
        _ => {
            let l = p.f64("l")?;
            let m = p.f64("m")?;
            let b = p.f64_or("b", 10.0)?;
            let lambda = p.f64_or("lambda", 1.0)?;
            Kind::Composite(angular_momentum_system(l, m, b)?, lambda, m)
        }
    };

    let mut report = Report::default();
    for &theta0 in &thetas {
        let (rot, init, omega, expected): (RotatingHamiltonian, CVector, f64, f64) = match &kind {
            Kind::Spin(big_omega) => {
                let omega = ratio * big_omega;
                let rot = precessing_spin(theta0, *big_omega, omega)?;
                let up = CVector::from_vec(vec![1.0.into(), 0.0.into()]);
                let init = nearest_eigenstate(&rot.at(0.0)?, &up)?;
                (rot, init, omega, phi_plus(theta0))
            }
            Kind::Composite(sys, lambda, m) => {
                // the gap does not depend on the precession rate
                let (probe, init) = precessing_composite(sys, *lambda, theta0, 1.0)?;
                let gap = spectral_gap(&probe.at(0.0)?, &init)?.ok_or_else(|| {
                    CliError::Config("flat spectrum: the adiabaticity ratio is undefined, give b > 0".into())
                })?;
                let omega = ratio * gap;
                let (rot, init) = precessing_composite(sys, *lambda, theta0, omega)?;
                (rot, init, omega, total_system_phase(*m, theta0))
            }
        };
        let cfg = EvolutionConfig::new(omega, turns, dt)?;
        let run = berry_phase_numeric(&cfg, &rot, &init)?;
        let expected = expected * f64::from(turns);
        let error = phase_distance(run.geometric_phase, expected);
        report.notes.push(format!(
            "theta0 {:.2} deg: geometric phase {:.6} against {:.6}, error {error:.2e} at omega/gap {:.2e}",
            deg(theta0),
            run.geometric_phase,
            expected,
            run.adiabaticity.unwrap_or(f64::NAN)
        ));
        report.records.push(record(json!({
            "system": system,
            "theta0": theta0,
            "config": {"omega": cfg.omega, "n_turns": cfg.n_turns, "dt": cfg.dt},
            "steps": run.steps,
            "adiabaticity": run.adiabaticity,
            "total_phase": run.total_phase,
            "dynamical_phase": run.dynamical_phase,
            "geometric_phase": run.geometric_phase,
            "expected_geometric_phase": expected,
            "phase_error": error,
            "final_overlap": run.final_overlap,
            "min_overlap": run.min_overlap,
            "norm_drift": run.norm_drift,
        })));
    }
    Ok(report)
}
