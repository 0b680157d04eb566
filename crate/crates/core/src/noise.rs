//! Stochastic fluctuation fields expressed in the adapted frame.
//!
//! A realization is a truncated Fourier series in the azimuth `Φ` of the
//! total field, with no constant term. Harmonic amplitudes are i.i.d.
//! Gaussians, so every component is a stationary, zero-mean Gaussian process
//! with variance `σ²` at each `Φ`, and distinct components are independent.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{adapted_frame_unchecked, check_off_pole};

/// Frequency of the extra term added to aperiodic realizations. Irrational,
/// so the series never closes on itself.
pub const APERIODIC_FREQUENCY: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Three independent components `b̃₁, b̃₂, b̃₃`.
    Isotropic3,
    /// A cartesian `b_z` only, projected onto the adapted frame.
    ZOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseStatistics {
    pub sigma: f64,
    pub k_max: u32,
    pub mode: NoiseMode,
    pub periodic: bool,
    pub seed: u64,
}

impl NoiseStatistics {
    pub fn isotropic(sigma: f64, k_max: u32, seed: u64) -> Self {
        Self {
            sigma,
            k_max,
            mode: NoiseMode::Isotropic3,
            periodic: true,
            seed,
        }
    }

    pub fn z_only(sigma: f64, k_max: u32, seed: u64) -> Self {
        Self {
            mode: NoiseMode::ZOnly,
            ..Self::isotropic(sigma, k_max, seed)
        }
    }

    pub fn aperiodic(self) -> Self {
        Self {
            periodic: false,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidStatistics(format!(
                "sigma must be positive and finite, got {}",
                self.sigma
            )));
        }
        if self.k_max == 0 {
            return Err(Error::InvalidStatistics("k_max must be at least 1".into()));
        }
        Ok(())
    }

    fn terms(&self) -> usize {
        self.k_max as usize + usize::from(!self.periodic)
    }
}

/// One real Fourier series `Σ_k a_k cos(kΦ) + c_k sin(kΦ)` for `k = 1..=k_max`,
/// optionally with one incommensurate term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierSeries {
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
    /// `(frequency, cos amplitude, sin amplitude)` of the aperiodic term.
    pub extra: Option<(f64, f64, f64)>,
}

impl FourierSeries {
    pub fn eval(&self, phi: f64) -> f64 {
        let (s1, c1) = phi.sin_cos();
        let (mut s, mut c) = (s1, c1);
        let mut acc = 0.0;
        for (a, b) in self.cos.iter().zip(&self.sin) {
            acc += a * c + b * s;
            // angle addition: (k+1)Φ from kΦ
            let next_c = c * c1 - s * s1;
            s = s * c1 + c * s1;
            c = next_c;
        }
        if let Some((nu, a, b)) = self.extra {
            let (s, c) = (nu * phi).sin_cos();
            acc += a * c + b * s;
        }
        acc
    }

    fn sample(rng: &mut ChaCha8Rng, k_max: u32, periodic: bool, scale: f64) -> Self {
        let mut draw = || scale * rng.sample::<f64, _>(StandardNormal);
        let cos = (0..k_max).map(|_| draw()).collect();
        let sin = (0..k_max).map(|_| draw()).collect();
        let extra = (!periodic).then(|| (APERIODIC_FREQUENCY, draw(), draw()));
        Self { cos, sin, extra }
    }
}

/// Anything that supplies adapted-frame noise components `b̃ᵢ(Φ)`.
pub trait NoisePattern {
    fn components(&self, theta0: f64, phi: f64) -> [f64; 3];
}

impl<F: Fn(f64) -> [f64; 3]> NoisePattern for F {
    fn components(&self, _theta0: f64, phi: f64) -> [f64; 3] {
        self(phi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRealization {
    pub mode: NoiseMode,
    pub k_max: u32,
    pub periodic: bool,
    /// Three series for `Isotropic3`, one (`b_z`) for `ZOnly`.
    pub series: Vec<FourierSeries>,
}

impl NoiseRealization {
    /// The cartesian `b_z(Φ)` of a z-only realization.
    pub fn bz(&self, phi: f64) -> Option<f64> {
        match self.mode {
            NoiseMode::ZOnly => Some(self.series[0].eval(phi)),
            NoiseMode::Isotropic3 => None,
        }
    }
}

impl NoisePattern for NoiseRealization {
    fn components(&self, theta0: f64, phi: f64) -> [f64; 3] {
        match self.mode {
            NoiseMode::Isotropic3 => [
                self.series[0].eval(phi),
                self.series[1].eval(phi),
                self.series[2].eval(phi),
            ],
            NoiseMode::ZOnly => {
                let bz = self.series[0].eval(phi);
                [-theta0.sin() * bz, 0.0, theta0.cos() * bz]
            }
        }
    }
}

/// Draws the realization stored in stream 0 of `stats.seed`.
pub fn sample_noise(stats: &NoiseStatistics) -> Result<NoiseRealization> {
    sample_noise_indexed(stats, 0)
}

/// Draws realization `index` of the ensemble seeded by `stats.seed`. Each
/// index reads its own ChaCha stream, so the result does not depend on which
/// other realizations were drawn or in what order.
pub fn sample_noise_indexed(stats: &NoiseStatistics, index: u64) -> Result<NoiseRealization> {
    stats.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(stats.seed);
    rng.set_stream(index);
    let scale = stats.sigma / (stats.terms() as f64).sqrt();
    let count = match stats.mode {
        NoiseMode::Isotropic3 => 3,
        NoiseMode::ZOnly => 1,
    };
    let series = (0..count)
        .map(|_| FourierSeries::sample(&mut rng, stats.k_max, stats.periodic, scale))
        .collect();
    Ok(NoiseRealization {
        mode: stats.mode,
        k_max: stats.k_max,
        periodic: stats.periodic,
        series,
    })
}

/// Field samples produced by [`field_from_noise`].
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSamples {
    /// Azimuth of the total field at each sample (the requested grid).
    pub phi: Vec<f64>,
    /// Unperturbed precession angle `ωt` at which the field points along `phi`.
    pub phase: Vec<f64>,
    pub field: Vec<Vector3<f64>>,
    /// `cosΘ` of the total field direction.
    pub cos_theta: Vec<f64>,
}

/// Total field `B = e₃ + ε Σ b̃ᵢ eᵢ` whose direction has azimuth exactly `Φ`
/// at every grid point.
///
/// The adapted frame rotates rigidly about `ẑ`, so the vector built at
/// precession angle 0 only needs to be turned by `ωt = Φ − arg(v₀)` to land
/// on azimuth `Φ`. The noise is then literally `b̃ᵢ(Φ) = bᵢ(t(Φ))`.
pub fn field_from_noise(
    theta0: f64,
    epsilon: f64,
    noise: &impl NoisePattern,
    grid: &[f64],
) -> Result<FieldSamples> {
    check_off_pole(theta0)?;
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be finite and nonnegative, got {epsilon}"
        )));
    }
    let frame0 = adapted_frame_unchecked(theta0, 0.0);
    let mut out = FieldSamples {
        phi: grid.to_vec(),
        phase: Vec::with_capacity(grid.len()),
        field: Vec::with_capacity(grid.len()),
        cos_theta: Vec::with_capacity(grid.len()),
    };
    for (index, &phi) in grid.iter().enumerate() {
        let b = noise.components(theta0, phi);
        let v0 = frame0.compose([epsilon * b[0], epsilon * b[1], 1.0 + epsilon * b[2]]);
        let rho = v0.x.hypot(v0.y);
        let norm = v0.norm();
        if !(rho > 0.0) || !norm.is_finite() {
            return Err(Error::DegenerateField { index });
        }
        let s = phi - v0.y.atan2(v0.x);
        let (ss, cs) = s.sin_cos();
        out.field
            .push(Vector3::new(cs * v0.x - ss * v0.y, ss * v0.x + cs * v0.y, v0.z));
        out.phase.push(s);
        out.cos_theta.push(v0.z / norm);
    }
    Ok(out)
}

/// Samples of `b(t)` on a periodic time grid `t_j = jT/n`, `T = 2π/ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub omega: f64,
    pub b: Vec<[f64; 3]>,
    /// `ḃ₂(t_j)`, if known; estimated by finite differences otherwise.
    pub db2: Option<Vec<f64>>,
}

impl TimeSeries {
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn dt(&self) -> f64 {
        self.period() / self.b.len() as f64
    }
}

/// Azimuths `Φ` at which the total field sits at the given precession angles
/// `ωt`; the inverse of the map in [`field_from_noise`].
pub fn invert_azimuth(
    theta0: f64,
    epsilon: f64,
    noise: &impl NoisePattern,
    phases: &[f64],
) -> Result<Vec<f64>> {
    check_off_pole(theta0)?;
    let frame0 = adapted_frame_unchecked(theta0, 0.0);
    let lag = |phi: f64| {
        let b = noise.components(theta0, phi);
        let v0 = frame0.compose([epsilon * b[0], epsilon * b[1], 1.0 + epsilon * b[2]]);
        v0.y.atan2(v0.x)
    };
    let mut out = Vec::with_capacity(phases.len());
    for (j, &target) in phases.iter().enumerate() {
        // Φ = ωt + arg v₀(Φ) is a contraction while ε·k_max ≪ 1
        let mut phi = target + lag(target);
        let mut converged = false;
        for _ in 0..200 {
            let next = target + lag(phi);
            let done = (next - phi).abs() <= 1e-15 * (1.0 + phi.abs());
            phi = next;
            if done {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::ParametrizationError(format!(
                "could not invert azimuth at sample {j}; is eps*k_max small?"
            )));
        }
        out.push(phi);
    }
    Ok(out)
}

/// Resamples a periodic pattern on the uniform time grid `t_j = jT/n`.
pub fn time_series(
    theta0: f64,
    epsilon: f64,
    omega: f64,
    noise: &impl NoisePattern,
    n: usize,
) -> Result<TimeSeries> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::InvalidArgument(format!("omega must be positive, got {omega}")));
    }
    let phases: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
    let phis = invert_azimuth(theta0, epsilon, noise, &phases)?;
    let b = phis.iter().map(|&p| noise.components(theta0, p)).collect();
    Ok(TimeSeries { omega, b, db2: None })
}
