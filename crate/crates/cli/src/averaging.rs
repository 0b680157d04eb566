//! Two ways of turning an ensemble of noisy cones into a mean phase.
//!
//! The right one averages `cosΘ` and uses `−π(1 − ⟨cosΘ⟩)`. The tempting
//! one averages the polar angle first and uses `−π(1 − cos⟨Θ⟩)`. Both shift
//! the phase at second order in `ε`, but by different amounts, so a noise
//! strength fitted with the wrong convention comes out too large.

use std::f64::consts::PI;

use berryphase_core::classical::phi_plus;
use berryphase_core::curve::uniform_grid;
use berryphase_core::noise::{field_from_noise, sample_noise_indexed, NoiseMode, NoiseStatistics};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragingDiagnostic {
    pub theta0: f64,
    pub epsilon: f64,
    pub n_realizations: usize,
    /// `−π(1 − ⟨cosΘ⟩)`.
    pub phase_correct: f64,
    /// `−π(1 − cos⟨Θ⟩)`.
    pub phase_incorrect: f64,
    /// `φ₊` minus each phase.
    pub shift_correct: f64,
    pub shift_incorrect: f64,
    /// `shift_correct / shift_incorrect`, undefined when both vanish.
    pub shift_ratio: Option<f64>,
    pub shift_ratio_std_error: Option<f64>,
    /// Ratio of the noise strengths the two conventions would fit to the
    /// same data. Shifts are quadratic in the strength, so this is
    /// `√shift_ratio`.
    pub strength_ratio: Option<f64>,
    pub strength_ratio_std_error: Option<f64>,
    /// Small-`ε` value of `strength_ratio` for the noise mode.
    pub expected_strength_ratio: f64,
}

impl AveragingDiagnostic {
    pub fn to_json(&self) -> Value {
        json!({
            "theta0": self.theta0,
            "epsilon": self.epsilon,
            "n_realizations": self.n_realizations,
            "phase_correct": self.phase_correct,
            "phase_incorrect": self.phase_incorrect,
            "shift_correct": self.shift_correct,
            "shift_incorrect": self.shift_incorrect,
            "shift_ratio": self.shift_ratio,
            "shift_ratio_std_error": self.shift_ratio_std_error,
            "strength_ratio": self.strength_ratio,
            "strength_ratio_std_error": self.strength_ratio_std_error,
            "expected_strength_ratio": self.expected_strength_ratio,
        })
    }
}

fn periodic_mean(xs: &[f64]) -> f64 {
    let m = xs.len() - 1;
    (xs[1..m].iter().sum::<f64>() + 0.5 * (xs[0] + xs[m])) / m as f64
}

/// Evaluates both conventions on the same `n_realizations` draws of `stats`.
/// The standard errors come from linearizing the ratio in the per-realization
/// means.
pub fn diagnose_averaging_conventions(
    theta0: f64,
    epsilon: f64,
    stats: &NoiseStatistics,
    n_realizations: usize,
    samples_per_turn: usize,
) -> Result<AveragingDiagnostic> {
    stats.validate()?;
    if n_realizations < 2 {
        return Err(crate::error::CliError::Config(format!(
            "need at least 2 realizations, got {n_realizations}"
        )));
    }
    let grid = uniform_grid(samples_per_turn + 1, 1);
    let means = (0..n_realizations as u64)
        .into_par_iter()
        .map(|i| {
            let noise = sample_noise_indexed(stats, i)?;
            let f = field_from_noise(theta0, epsilon, &noise, &grid)?;
            let theta: Vec<f64> = f.cos_theta.iter().map(|c| c.clamp(-1.0, 1.0).acos()).collect();
            Ok((periodic_mean(&f.cos_theta), periodic_mean(&theta)))
        })
        .collect::<std::result::Result<Vec<(f64, f64)>, berryphase_core::Error>>()?;

    let n = means.len() as f64;
    let mean_cos = means.iter().map(|m| m.0).sum::<f64>() / n;
    let mean_theta = means.iter().map(|m| m.1).sum::<f64>() / n;
    let phase_correct = -PI * (1.0 - mean_cos);
    let phase_incorrect = -PI * (1.0 - mean_theta.cos());
    let target = phi_plus(theta0);
    let shift_correct = target - phase_correct;
    let shift_incorrect = target - phase_incorrect;

    let defined = shift_correct != 0.0 && shift_incorrect != 0.0 && epsilon > 0.0;
    let (shift_ratio, shift_ratio_std_error) = if defined {
        let r = shift_correct / shift_incorrect;
        let s = mean_theta.sin();
        let u: Vec<f64> = means
            .iter()
            .map(|(c, t)| -PI * (c - mean_cos) / shift_correct - PI * s * (t - mean_theta) / shift_incorrect)
            .collect();
        let mu = u.iter().sum::<f64>() / n;
        let var = u.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0);
        (Some(r), Some(r.abs() * (var / n).sqrt()))
    } else {
        (None, None)
    };
    let strength_ratio = shift_ratio.filter(|r| *r > 0.0).map(f64::sqrt);
    let strength_ratio_std_error = strength_ratio.zip(shift_ratio_std_error).map(|(s, e)| e / (2.0 * s));
    let expected_strength_ratio = match stats.mode {
        NoiseMode::ZOnly => 1.5f64.sqrt(),
        NoiseMode::Isotropic3 => 2f64.sqrt(),
    };

    Ok(AveragingDiagnostic {
        theta0,
        epsilon,
        n_realizations,
        phase_correct,
        phase_incorrect,
        shift_correct,
        shift_incorrect,
        shift_ratio,
        shift_ratio_std_error,
        strength_ratio,
        strength_ratio_std_error,
        expected_strength_ratio,
    })
}
