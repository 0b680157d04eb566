//! Geometric phase of a spin-1/2 following a noisy precessing field: the
//! second-order expansion per realization, ensemble averages, and the
//! z-only-noise analysis.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{curve_from_field, solid_angle_phase, uniform_grid, SphericalCurve};
use crate::error::{Error, Result};
use crate::frames::check_off_pole;
use crate::noise::{field_from_noise, sample_noise_indexed, NoisePattern, NoiseStatistics, TimeSeries};

/// Azimuthal samples (endpoints included) used for the `Φ` quadratures.
pub const DEFAULT_PHI_SAMPLES: usize = 1025;

/// Minimum time samples for the finite-difference estimate of `ḃ₂`.
pub const MIN_TIME_SAMPLES: usize = 32;

/// Noise-free phase `φ₊ = −π(1 − cosΘ₀)` after one turn.
pub fn phi_plus(theta0: f64) -> f64 {
    -PI * (1.0 - theta0.cos())
}

/// Order-by-order decomposition of a perturbative phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderBreakdown {
    pub zeroth: f64,
    pub first: f64,
    pub second: f64,
}

impl OrderBreakdown {
    pub fn total(&self) -> f64 {
        self.zeroth + self.first + self.second
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbativePhase {
    pub phase: f64,
    pub breakdown: OrderBreakdown,
}

impl From<OrderBreakdown> for PerturbativePhase {
    fn from(breakdown: OrderBreakdown) -> Self {
        Self {
            phase: breakdown.total(),
            breakdown,
        }
    }
}

/// Second-order phase of one realization, integrating over one turn in `Φ`.
pub fn phase_perturbative_phi(
    theta0: f64,
    epsilon: f64,
    noise: &impl NoisePattern,
) -> Result<PerturbativePhase> {
    phase_perturbative_phi_on(theta0, epsilon, noise, &uniform_grid(DEFAULT_PHI_SAMPLES, 1))
}

/// As [`phase_perturbative_phi`] with an explicit azimuth grid spanning one
/// turn (endpoints included); trapezoidal quadrature.
pub fn phase_perturbative_phi_on(
    theta0: f64,
    epsilon: f64,
    noise: &impl NoisePattern,
    grid: &[f64],
) -> Result<PerturbativePhase> {
    check_off_pole(theta0)?;
    if grid.len() < 2 {
        return Err(Error::InsufficientResolution {
            needed: 2,
            got: grid.len(),
        });
    }
    let (st, ct) = theta0.sin_cos();
    let values: Vec<(f64, f64)> = grid
        .iter()
        .map(|&p| {
            let b = noise.components(theta0, p);
            (b[0], st * b[0] * b[2] - 0.5 * ct * (b[0] * b[0] + b[1] * b[1]))
        })
        .collect();
    let (mut i1, mut i2) = (0.0, 0.0);
    for (w, v) in grid.windows(2).zip(values.windows(2)) {
        let h = 0.5 * (w[1] - w[0]);
        i1 += h * (v[0].0 + v[1].0);
        i2 += h * (v[0].1 + v[1].1);
    }
    Ok(OrderBreakdown {
        zeroth: phi_plus(theta0),
        first: -0.5 * epsilon * st * i1,
        second: 0.5 * epsilon * epsilon * i2,
    }
    .into())
}

/// Second-order phase from noise sampled in time over one period, including
/// the `−½ b₁ḃ₂` term that the change of variable `t → Φ` produces.
pub fn phase_perturbative_time(theta0: f64, epsilon: f64, series: &TimeSeries) -> Result<PerturbativePhase> {
    check_off_pole(theta0)?;
    let n = series.b.len();
    if n < MIN_TIME_SAMPLES {
        return Err(Error::InsufficientResolution {
            needed: MIN_TIME_SAMPLES,
            got: n,
        });
    }
    let dt = series.dt();
    let omega = series.omega;
    let estimated;
    let db2: &[f64] = match &series.db2 {
        Some(d) if d.len() == n => d,
        Some(d) => {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: d.len(),
            })
        }
        None => {
            estimated = periodic_derivative(&series.b.iter().map(|b| b[1]).collect::<Vec<_>>(), dt);
            &estimated
        }
    };
    let (st, ct) = theta0.sin_cos();
    let (mut i1, mut i2) = (0.0, 0.0);
    for (b, d) in series.b.iter().zip(db2) {
        i1 += b[0];
        i2 += -0.25 * omega * ct * (b[0] * b[0] + b[1] * b[1]) - 0.5 * b[0] * d + 0.5 * omega * st * b[0] * b[2];
    }
    Ok(OrderBreakdown {
        zeroth: phi_plus(theta0),
        first: -0.5 * epsilon * omega * st * i1 * dt,
        second: epsilon * epsilon * i2 * dt,
    }
    .into())
}

/// Fourth-order central differences on a periodic grid.
fn periodic_derivative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|j| {
            let at = |o: isize| f[(j as isize + o).rem_euclid(n as isize) as usize];
            (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h)
        })
        .collect()
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

impl MonteCarloEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        // shifted by the first sample so constant data is exact
        let shift = xs.first().copied().unwrap_or(0.0);
        let offset = xs.iter().map(|x| x - shift).sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = xs.iter().map(|x| (x - shift - offset).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean: shift + offset,
            std_error,
            n,
        }
    }

    /// Distance from `value` in units of the standard error.
    pub fn z_score(&self, value: f64) -> f64 {
        let d = (self.mean - value).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }
}

/// Runs `f` for realization indices `0..n` in parallel and returns the
/// results in index order.
pub(crate) fn per_realization<T: Send>(n: usize, f: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    (0..n as u64).into_par_iter().map(&f).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub mean_phase: f64,
    pub std_error: f64,
    pub n_realizations: usize,
    /// Ensemble means of each order; they sum to `mean_phase`.
    pub breakdown: OrderBreakdown,
    pub first_order_std_error: f64,
    /// `⟨σ_z⟩` of the aligned spin (the exact `cosΘ` of the total field),
    /// averaged over `Φ` and the ensemble.
    pub mean_sigma_z: f64,
    pub mean_sigma_z_std_error: f64,
}

impl EnsembleResult {
    /// The mean phase written as `−π(1 − ⟨σ_z⟩)`.
    pub fn sigma_z_phase(&self) -> f64 {
        -PI * (1.0 - self.mean_sigma_z)
    }
}

/// Monte Carlo average of [`phase_perturbative_phi`] over `n_realizations`
/// draws. Realization `i` uses stream `i` of `stats.seed`, so the result is
/// independent of the worker count.
pub fn ensemble_average(
    theta0: f64,
    epsilon: f64,
    stats: &NoiseStatistics,
    n_realizations: usize,
) -> Result<EnsembleResult> {
    if n_realizations < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 realizations, got {n_realizations}"
        )));
    }
    check_off_pole(theta0)?;
    stats.validate()?;
    let grid = uniform_grid(DEFAULT_PHI_SAMPLES, 1);
    let (st, ct) = theta0.sin_cos();
    let samples = per_realization(n_realizations, |i| {
        let noise = sample_noise_indexed(stats, i)?;
        let p = phase_perturbative_phi_on(theta0, epsilon, &noise, &grid)?;
        // exact cosΘ of e₃ + εΣb̃ᵢeᵢ, trapezoid-averaged over Φ
        let cos: Vec<f64> = grid
            .iter()
            .map(|&phi| {
                let b = noise.components(theta0, phi);
                let z = ct * (1.0 + epsilon * b[2]) - st * epsilon * b[0];
                let norm2 = (1.0 + epsilon * b[2]).powi(2) + epsilon * epsilon * (b[0] * b[0] + b[1] * b[1]);
                z / norm2.sqrt()
            })
            .collect();
        let m = grid.len() - 1;
        let avg = (cos[1..m].iter().sum::<f64>() + 0.5 * (cos[0] + cos[m])) / m as f64;
        Ok((p, avg))
    })?;
    let col = |f: &dyn Fn(&(PerturbativePhase, f64)) -> f64| samples.iter().map(f).collect::<Vec<_>>();
    let total = MonteCarloEstimate::from_samples(&col(&|s| s.0.phase));
    let first = MonteCarloEstimate::from_samples(&col(&|s| s.0.breakdown.first));
    let second = MonteCarloEstimate::from_samples(&col(&|s| s.0.breakdown.second));
    let sigma_z = MonteCarloEstimate::from_samples(&col(&|s| s.1));
    let breakdown = OrderBreakdown {
        zeroth: phi_plus(theta0),
        first: first.mean,
        second: second.mean,
    };
    Ok(EnsembleResult {
        mean_phase: breakdown.total(),
        std_error: total.std_error,
        n_realizations,
        breakdown,
        first_order_std_error: first.std_error,
        mean_sigma_z: sigma_z.mean,
        mean_sigma_z_std_error: sigma_z.std_error,
    })
}

/// Closed-form ensemble mean `φ₊ − (ε²π/2) cosΘ₀ (σ₁² + σ₂²)` for noise
/// obeying the isotropic moment conditions.
pub fn mean_phase_prediction(theta0: f64, epsilon: f64, transverse_variance: f64) -> f64 {
    phi_plus(theta0) - 0.5 * epsilon * epsilon * PI * theta0.cos() * transverse_variance
}

/// Exact solid-angle phase of one realization's curve over `n_turns` turns,
/// with geodesic closure when the noise is aperiodic.
pub fn realization_solid_angle(
    theta0: f64,
    epsilon: f64,
    noise: &impl NoisePattern,
    samples_per_turn: usize,
    n_turns: u32,
) -> Result<f64> {
    let grid = uniform_grid(samples_per_turn * n_turns as usize + 1, n_turns);
    let f = field_from_noise(theta0, epsilon, noise, &grid)?;
    let curve = curve_from_field(&f.field, &f.phase)?;
    solid_angle_phase(&curve)
}

/// Monte Carlo mean of the exact solid-angle phase.
pub fn ensemble_solid_angle(
    theta0: f64,
    epsilon: f64,
    stats: &NoiseStatistics,
    n_realizations: usize,
    samples_per_turn: usize,
    n_turns: u32,
) -> Result<MonteCarloEstimate> {
    let xs = per_realization(n_realizations, |i| {
        let noise = sample_noise_indexed(stats, i)?;
        realization_solid_angle(theta0, epsilon, &noise, samples_per_turn, n_turns)
    })?;
    Ok(MonteCarloEstimate::from_samples(&xs))
}

/// Single-turn (geodesically closed) phases against the per-turn average of
/// `n_turns`-turn phases, for the same realizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AperiodicComparison {
    pub single_turn: MonteCarloEstimate,
    pub per_turn: MonteCarloEstimate,
    /// Paired difference `single − multi/n_turns`.
    pub difference: MonteCarloEstimate,
    pub n_turns: u32,
}

pub fn aperiodic_comparison(
    theta0: f64,
    epsilon: f64,
    stats: &NoiseStatistics,
    n_realizations: usize,
    samples_per_turn: usize,
    n_turns: u32,
) -> Result<AperiodicComparison> {
    if n_turns < 1 {
        return Err(Error::InvalidArgument("n_turns must be at least 1".into()));
    }
    let pairs = per_realization(n_realizations, |i| {
        let noise = sample_noise_indexed(stats, i)?;
        let one = realization_solid_angle(theta0, epsilon, &noise, samples_per_turn, 1)?;
        let many = realization_solid_angle(theta0, epsilon, &noise, samples_per_turn, n_turns)?;
        Ok((one, many / n_turns as f64))
    })?;
    let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let d: Vec<f64> = pairs.iter().map(|p| p.0 - p.1).collect();
    Ok(AperiodicComparison {
        single_turn: MonteCarloEstimate::from_samples(&a),
        per_turn: MonteCarloEstimate::from_samples(&b),
        difference: MonteCarloEstimate::from_samples(&d),
        n_turns,
    })
}

/// Change in the single-turn phase when the open curve is closed smoothly
/// instead of along a meridian: `Θ(Φ)` is blended into `Θ(0)` over the last
/// fraction `delta` of the turn.
pub fn smooth_closure_difference(
    theta0: f64,
    epsilon: f64,
    noise: &impl NoisePattern,
    samples_per_turn: usize,
    delta: f64,
) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
    }
    let grid = uniform_grid(samples_per_turn + 1, 1);
    let f = field_from_noise(theta0, epsilon, noise, &grid)?;
    let open = curve_from_field(&f.field, &f.phase)?;
    let start = open.theta()[0];
    let span = 2.0 * PI * delta;
    let blend_from = 2.0 * PI - span;
    let theta: Vec<f64> = open
        .phi()
        .iter()
        .zip(open.theta())
        .map(|(&p, &t)| {
            if p <= blend_from {
                return t;
            }
            let x = ((p - blend_from) / span).min(1.0);
            let w = x * x * (3.0 - 2.0 * x);
            (1.0 - w) * t + w * start
        })
        .collect();
    let closed = SphericalCurve::new(open.phi().to_vec(), theta)?;
    Ok(solid_angle_phase(&closed)? - solid_angle_phase(&open)?)
}

/// Mean phase shift `φ₊ − φ̄ = (3π/2) ε² ⟨b_z²⟩ sin²Θ₀ cosΘ₀` for noise with
/// only a z-component.
pub fn z_only_shift(theta0: f64, epsilon: f64, var_bz: f64) -> Result<f64> {
    check_off_pole(theta0)?;
    let (s, c) = theta0.sin_cos();
    Ok(1.5 * PI * epsilon * epsilon * var_bz * s * s * c)
}

/// Location and value of the maximum of `sin²Θ cosΘ` on `(0, π/2)`:
/// `Θ = arccos(1/√3)`, value `2/(3√3)`.
pub fn z_only_peak() -> (f64, f64) {
    let c = 1.0 / 3f64.sqrt();
    (c.acos(), 2.0 * c / 3.0)
}

/// Noise strength `P` (rad/s) that produces a peak shift `delta_phi_max`
/// when the dimensionless amplitude is `ε b̃_z = 2P/ω_L`.
pub fn recover_noise_strength(delta_phi_max: f64, omega_l: f64) -> Result<f64> {
    if !(delta_phi_max > 0.0) || !(omega_l > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need positive shift and Larmor frequency, got {delta_phi_max}, {omega_l}"
        )));
    }
    let (_, peak) = z_only_peak();
    Ok(0.5 * omega_l * (2.0 * delta_phi_max / (peak * 3.0 * PI)).sqrt())
}

/// Dimensionless noise amplitude `2P/ω_L` for a noise strength `P`.
pub fn amplitude_from_strength(p: f64, omega_l: f64) -> f64 {
    2.0 * p / omega_l
}
