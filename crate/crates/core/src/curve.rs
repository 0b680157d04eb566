//! Curves on the unit sphere parametrized by azimuth, and the geometric phase
//! they enclose.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of samples accepted by [`solid_angle_phase`].
pub const MIN_QUADRATURE_SAMPLES: usize = 8;

/// Curves may not come closer than this (in polar angle) to either pole.
pub const POLE_MARGIN: f64 = 1e-9;

/// Absolute tolerance on the azimuthal span being a whole number of turns.
pub const TURN_TOLERANCE: f64 = 1e-6;

/// Endpoint mismatch in polar angle below which a curve counts as closed.
pub const CLOSURE_TOLERANCE: f64 = 1e-8;

/// A curve `Θ(Φ)` on the unit sphere sampled at strictly increasing azimuths.
///
/// Azimuths are stored relative to the first sample, so they run over
/// `[0, 2π·n_turns]`. Open curves are closed along the meridian through the
/// first sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalCurve {
    phi: Vec<f64>,
    theta: Vec<f64>,
    phi_start: f64,
    periodic: bool,
    n_turns: u32,
}

impl SphericalCurve {
    /// Builds a curve from azimuth/polar-angle samples. The azimuths must be
    /// strictly increasing and span a whole number of turns.
    pub fn new(phi: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        if phi.len() != theta.len() {
            return Err(Error::DimensionMismatch {
                expected: phi.len(),
                found: theta.len(),
            });
        }
        if phi.len() < 2 {
            return Err(Error::InsufficientResolution {
                needed: 2,
                got: phi.len(),
            });
        }
        if let Some(k) = phi.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::ParametrizationError(format!(
                "azimuth not strictly increasing at sample {}",
                k + 1
            )));
        }
        for (index, &t) in theta.iter().enumerate() {
            if !t.is_finite() || t <= POLE_MARGIN || t >= PI - POLE_MARGIN {
                return Err(Error::PoleCrossing {
                    index,
                    margin: POLE_MARGIN,
                });
            }
        }
        let phi_start = phi[0];
        let span = phi[phi.len() - 1] - phi_start;
        let turns = (span / TAU).round();
        if turns < 1.0 || (span - turns * TAU).abs() > TURN_TOLERANCE {
            return Err(Error::ParametrizationError(format!(
                "azimuthal span {span} is not a whole number of turns"
            )));
        }
        let periodic = (theta[theta.len() - 1] - theta[0]).abs() < CLOSURE_TOLERANCE;
        let phi = phi.into_iter().map(|p| p - phi_start).collect();
        Ok(Self {
            phi,
            theta,
            phi_start,
            periodic,
            n_turns: turns as u32,
        })
    }

    /// Samples `theta_of_phi` on a uniform grid of `n_samples` points over
    /// `[0, 2π·n_turns]`, endpoints included.
    pub fn from_fn(theta_of_phi: impl Fn(f64) -> f64, n_samples: usize, n_turns: u32) -> Result<Self> {
        let phi = uniform_grid(n_samples, n_turns);
        let theta = phi.iter().map(|&p| theta_of_phi(p)).collect();
        Self::new(phi, theta)
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Azimuth of the first sample before it was shifted to zero.
    pub fn phi_start(&self) -> f64 {
        self.phi_start
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn n_turns(&self) -> u32 {
        self.n_turns
    }

    /// Polar angle at relative azimuth `phi` by piecewise-linear
    /// interpolation, clamped to the sampled range.
    pub fn theta_at(&self, phi: f64) -> f64 {
        let n = self.phi.len();
        if phi <= self.phi[0] {
            return self.theta[0];
        }
        if phi >= self.phi[n - 1] {
            return self.theta[n - 1];
        }
        let k = self.phi.partition_point(|&p| p <= phi) - 1;
        let w = (phi - self.phi[k]) / (self.phi[k + 1] - self.phi[k]);
        self.theta[k] * (1.0 - w) + self.theta[k + 1] * w
    }
}

/// `n_samples` equally spaced azimuths covering `[0, 2π·n_turns]` inclusive.
pub fn uniform_grid(n_samples: usize, n_turns: u32) -> Vec<f64> {
    let span = TAU * n_turns as f64;
    let last = n_samples.saturating_sub(1).max(1) as f64;
    (0..n_samples).map(|k| span * k as f64 / last).collect()
}

/// Converts samples of a field `B(t)` into the curve traced by its direction,
/// parametrized by the unwrapped azimuth.
///
/// Consecutive azimuths are continued onto the nearest branch; a jump of π
/// or more between samples is ambiguous and rejected, as is any decrease.
pub fn curve_from_field(samples: &[Vector3<f64>], timestamps: &[f64]) -> Result<SphericalCurve> {
    if samples.len() != timestamps.len() {
        return Err(Error::DimensionMismatch {
            expected: samples.len(),
            found: timestamps.len(),
        });
    }
    if let Some(k) = timestamps.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::ParametrizationError(format!(
            "timestamps not strictly increasing at sample {}",
            k + 1
        )));
    }
    let mut phi = Vec::with_capacity(samples.len());
    let mut theta = Vec::with_capacity(samples.len());
    for (index, b) in samples.iter().enumerate() {
        let norm = b.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::DegenerateField { index });
        }
        let rho = b.x.hypot(b.y);
        theta.push(rho.atan2(b.z));
        let raw = b.y.atan2(b.x);
        match phi.last() {
            None => phi.push(raw),
            Some(&prev) => {
                let step = wrap_to_pi(raw - prev);
                if step.abs() >= PI * (1.0 - 1e-9) {
                    return Err(Error::ParametrizationError(format!(
                        "azimuth jump of ~π at sample {index} is ambiguous; sample more densely"
                    )));
                }
                if step <= 0.0 {
                    return Err(Error::ParametrizationError(format!(
                        "azimuth decreases at sample {index}"
                    )));
                }
                phi.push(prev + step);
            }
        }
    }
    SphericalCurve::new(phi, theta)
}

/// Reduces an angle to `(-π, π]`.
pub fn wrap_to_pi(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(TAU) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

/// Geometric phase `−½∮(1 − cosΘ) dΦ` of a spin-1/2 aligned with the curve,
/// by trapezoidal quadrature over the samples.
///
/// Open curves are closed along the meridian through the first sample; that
/// segment has `dΦ = 0` and adds nothing. The result is not reduced modulo
/// 2π, so multi-turn curves accumulate.
pub fn solid_angle_phase(curve: &SphericalCurve) -> Result<f64> {
    if curve.len() < MIN_QUADRATURE_SAMPLES {
        return Err(Error::InsufficientResolution {
            needed: MIN_QUADRATURE_SAMPLES,
            got: curve.len(),
        });
    }
    let f: Vec<f64> = curve.theta.iter().map(|t| 1.0 - t.cos()).collect();
    let integral: f64 = curve
        .phi
        .windows(2)
        .zip(f.windows(2))
        .map(|(p, v)| 0.5 * (v[0] + v[1]) * (p[1] - p[0]))
        .sum();
    Ok(-0.5 * integral)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(theta0: f64, n: usize, turns: u32) -> SphericalCurve {
        SphericalCurve::from_fn(|_| theta0, n, turns).unwrap()
    }

    #[test]
    fn equator_encloses_half_sphere() {
        let p = solid_angle_phase(&circle(PI / 2.0, 64, 1)).unwrap();
        assert!((p + PI).abs() < 1e-14);
    }

    #[test]
    fn cone_phase_matches_closed_form() {
        for theta0 in [0.3, PI / 4.0, 2.0] {
            let p = solid_angle_phase(&circle(theta0, 33, 1)).unwrap();
            assert!((p + PI * (1.0 - theta0.cos())).abs() < 1e-13);
        }
    }

    #[test]
    fn turns_accumulate_without_reduction() {
        let theta0 = 2.5;
        for n in 1..=5 {
            let p = solid_angle_phase(&circle(theta0, 100 * n as usize + 1, n)).unwrap();
            let expected = n as f64 * -PI * (1.0 - theta0.cos());
            assert!((p - expected).abs() < 1e-12, "n={n}: {p} vs {expected}");
        }
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            solid_angle_phase(&circle(1.0, 7, 1)),
            Err(Error::InsufficientResolution { needed: 8, got: 7 })
        ));
    }

    #[test]
    fn precession_curve_is_constant_theta() {
        let theta0 = PI / 4.0;
        let n = 256;
        let ts: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
        let b: Vec<_> = ts
            .iter()
            .map(|t| {
                let p = TAU * t;
                Vector3::new(theta0.sin() * p.cos(), theta0.sin() * p.sin(), theta0.cos()) * 2.0
            })
            .collect();
        let c = curve_from_field(&b, &ts).unwrap();
        assert!(c.is_periodic());
        assert_eq!(c.n_turns(), 1);
        assert!(c.theta().iter().all(|t| (t - theta0).abs() < 1e-12));
        assert!((c.phi()[n] - TAU).abs() < 1e-12);
    }

    #[test]
    fn reversed_timestamps_rejected() {
        let b = vec![Vector3::new(1.0, 0.0, 0.5); 4];
        let ts = vec![3.0, 2.0, 1.0, 0.0];
        assert!(matches!(curve_from_field(&b, &ts), Err(Error::ParametrizationError(_))));
    }

    #[test]
    fn clockwise_field_rejected() {
        let ts: Vec<f64> = (0..=64).map(|k| k as f64).collect();
        let b: Vec<_> = ts
            .iter()
            .map(|t| {
                let p = -TAU * t / 64.0;
                Vector3::new(p.cos(), p.sin(), 0.3)
            })
            .collect();
        assert!(matches!(curve_from_field(&b, &ts), Err(Error::ParametrizationError(_))));
    }

    #[test]
    fn zero_sample_rejected() {
        let b = vec![Vector3::new(1.0, 0.0, 0.0), Vector3::zeros()];
        assert!(matches!(
            curve_from_field(&b, &[0.0, 1.0]),
            Err(Error::DegenerateField { index: 1 })
        ));
    }

    #[test]
    fn coarse_sampling_is_ambiguous() {
        let b = vec![
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(-1.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
        ];
        assert!(matches!(
            curve_from_field(&b, &[0.0, 1.0, 2.0]),
            Err(Error::ParametrizationError(_))
        ));
    }

    #[test]
    fn pole_visits_rejected() {
        let phi = uniform_grid(16, 1);
        let mut theta = vec![1.0; 16];
        theta[5] = 0.0;
        assert!(matches!(
            SphericalCurve::new(phi, theta),
            Err(Error::PoleCrossing { index: 5, .. })
        ));
    }

    #[test]
    fn partial_turn_rejected() {
        let phi: Vec<f64> = (0..10).map(|k| k as f64 * 0.5).collect();
        assert!(SphericalCurve::new(phi, vec![1.0; 10]).is_err());
    }

    #[test]
    fn open_curve_is_flagged() {
        let c = SphericalCurve::from_fn(|p| 1.0 + 0.01 * p, 64, 1).unwrap();
        assert!(!c.is_periodic());
        // closing meridian adds nothing: phase is the plain Φ-integral
        let exact = -0.5 * (TAU - ((1.0 + 0.01 * TAU).sin() - 1f64.sin()) / 0.01);
        assert!((solid_angle_phase(&c).unwrap() - exact).abs() < 1e-4);
    }

    #[test]
    fn interpolation_hits_nodes() {
        let c = SphericalCurve::from_fn(|p| 1.0 + 0.1 * p.sin(), 65, 1).unwrap();
        for k in [0, 10, 64] {
            assert_eq!(c.theta_at(c.phi()[k]), c.theta()[k]);
        }
    }
}
