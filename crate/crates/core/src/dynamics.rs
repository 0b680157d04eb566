//! Direct integration of the Schrödinger equation along a slowly varying
//! Hamiltonian, used as an independent check on adiabatic phases.

use std::f64::consts::TAU;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::Serialize;

use crate::curve::wrap_to_pi;
use crate::error::{Error, Result};
use crate::frames::{check_off_pole, Direction};
use crate::noise::{field_from_noise, NoisePattern};
use crate::operators::{c, check_normalized, pauli, rotation_generator, CMatrix, CVector, Operator, VectorOperatorSystem};
use crate::quantum::{build_hamiltonian, reference_state, total_angular_momentum, tracked_eigenstate};

/// Largest tolerated deviation of `‖ψ‖` from 1.
pub const NORM_DRIFT_LIMIT: f64 = 1e-8;
/// Final `|⟨ψ(0)|ψ(T)⟩|` below which the state is not considered to have
/// returned to its initial ray.
pub const MIN_FINAL_OVERLAP: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolutionConfig {
    /// Precession rate `ω`; one turn takes `2π/ω`.
    pub omega: f64,
    pub n_turns: u32,
    /// Requested time step; the step actually used divides `T` evenly and is
    /// never larger.
    pub dt: f64,
}

impl EvolutionConfig {
    pub fn new(omega: f64, n_turns: u32, dt: f64) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::InvalidArgument(format!("omega must be positive, got {omega}")));
        }
        if n_turns == 0 {
            return Err(Error::InvalidArgument("n_turns must be positive".into()));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        Ok(Self { omega, n_turns, dt })
    }

    /// `T = 2π n_turns / ω`.
    pub fn duration(&self) -> f64 {
        TAU * self.n_turns as f64 / self.omega
    }

    pub fn steps(&self) -> usize {
        (self.duration() / self.dt).ceil().max(1.0) as usize
    }

    pub fn step(&self) -> f64 {
        self.duration() / self.steps() as f64
    }
}

/// Summary of one run; serializes to the per-run JSON record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunReport {
    pub config: EvolutionConfig,
    pub steps: usize,
    /// `arg⟨ψ(0)|ψ(T)⟩` in `(−π, π]`.
    pub total_phase: f64,
    /// `∫⟨ψ|H|ψ⟩dt`.
    pub dynamical_phase: f64,
    /// `arg⟨ψ(0)|ψ(t)⟩ + ∫₀ᵗ⟨H⟩` followed continuously from 0 and evaluated at `T`.
    pub geometric_phase: f64,
    pub final_overlap: f64,
    /// Smallest `|⟨ψ(0)|ψ(t)⟩|` met on the way; the continuous tracking is
    /// unreliable when it approaches zero.
    pub min_overlap: f64,
    pub norm_drift: f64,
    /// `ω / Ω`, with `Ω` the distance from `⟨H(0)⟩` to the nearest other
    /// level of `H(0)`; `None` if the spectrum is a single level.
    pub adiabaticity: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub final_state: CVector,
    pub report: RunReport,
}

/// A time-dependent Hamiltonian `t ↦ H(t)`.
pub trait HamiltonianPath {
    fn at(&self, t: f64) -> Result<Operator>;

    /// The propagator for steps of length `dt`. The default diagonalizes
    /// `H(t_mid)` at every step.
    fn stepper(&self, dt: f64) -> Result<Box<dyn Stepper + '_>> {
        Ok(Box::new(GenericStepper { path: self, dt }))
    }
}

impl<F: Fn(f64) -> Result<Operator>> HamiltonianPath for F {
    fn at(&self, t: f64) -> Result<Operator> {
        self(t)
    }
}

/// One midpoint step.
pub trait Stepper {
    /// Returns `exp(−iH(t_mid)dt) ψ` and `⟨ψ|H(t_mid)|ψ⟩`.
    fn step(&self, t_mid: f64, psi: &CVector) -> Result<(CVector, f64)>;
}

struct GenericStepper<'a, H: ?Sized> {
    path: &'a H,
    dt: f64,
}

impl<H: HamiltonianPath + ?Sized> Stepper for GenericStepper<'_, H> {
    fn step(&self, t_mid: f64, psi: &CVector) -> Result<(CVector, f64)> {
        let h = self.path.at(t_mid)?;
        if h.dim() != psi.len() {
            return Err(Error::DimensionMismatch {
                expected: psi.len(),
                found: h.dim(),
            });
        }
        let energy = psi.dotc(&(h.matrix() * psi)).re;
        Ok((h.unitary_exp(self.dt)?.matrix() * psi, energy))
    }
}

/// Distance from `⟨state|h0|state⟩` to the nearest other eigenvalue of `h0`,
/// or `None` for a flat spectrum.
pub fn spectral_gap(h0: &Operator, state: &CVector) -> Result<Option<f64>> {
    let e0 = h0.expectation_real(state)?;
    let (values, _) = h0.eigh()?;
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    Ok(values
        .iter()
        .map(|e| (e - e0).abs())
        .filter(|d| *d > 1e-9 * scale)
        .reduce(f64::min))
}

/// Propagates `iψ̇ = H(t)ψ` over `[0, T]` with `ψ ← exp(−iH(t+dt/2)dt) ψ`.
pub fn evolve<H: HamiltonianPath>(config: &EvolutionConfig, hamiltonian: &H, initial: &CVector) -> Result<Evolution> {
    check_normalized(initial)?;
    let steps = config.steps();
    let dt = config.step();
    let adiabaticity = spectral_gap(&hamiltonian.at(0.0)?, initial)?.map(|g| config.omega / g);
    let stepper = hamiltonian.stepper(dt)?;

    let mut psi = initial.clone();
    let mut dynamical = 0.0;
    let mut tracked = 0.0;
    let mut last_raw = 0.0;
    let mut min_overlap: f64 = 1.0;
    let mut norm_drift: f64 = 0.0;
    for k in 0..steps {
        let (next, energy) = stepper.step((k as f64 + 0.5) * dt, &psi)?;
        dynamical += energy * dt;
        psi = next;

        let drift = (psi.norm() - 1.0).abs();
        norm_drift = norm_drift.max(drift);
        if drift > NORM_DRIFT_LIMIT {
            return Err(Error::IntegratorFailure { drift });
        }
        let overlap = initial.dotc(&psi);
        min_overlap = min_overlap.min(overlap.norm());
        let raw = overlap.arg() + dynamical;
        tracked += wrap_to_pi(raw - last_raw);
        last_raw = raw;
    }
    let overlap = initial.dotc(&psi);
    Ok(Evolution {
        report: RunReport {
            config: *config,
            steps,
            total_phase: overlap.arg(),
            dynamical_phase: dynamical,
            geometric_phase: tracked,
            final_overlap: overlap.norm(),
            min_overlap,
            norm_drift,
            adiabaticity,
        },
        final_state: psi,
    })
}

/// Geometric phase `arg⟨ψ(0)|ψ(T)⟩ + ∫⟨H⟩dt`, unwrapped by following it
/// step by step.
pub fn berry_phase_numeric<H: HamiltonianPath>(
    config: &EvolutionConfig,
    hamiltonian: &H,
    initial: &CVector,
) -> Result<RunReport> {
    let run = evolve(config, hamiltonian, initial)?;
    if run.report.final_overlap < MIN_FINAL_OVERLAP {
        return Err(Error::AdiabaticityBroken {
            overlap: run.report.final_overlap,
        });
    }
    Ok(run.report)
}

/// `H(t) = exp(−iωt G) H₀ exp(iωt G)`: a Hamiltonian carried rigidly around
/// by the rotation generator `G`.
#[derive(Debug, Clone)]
pub struct RotatingHamiltonian {
    h0: CMatrix,
    omega: f64,
    values: Vec<f64>,
    vectors: CMatrix,
}

impl RotatingHamiltonian {
    pub fn new(h0: &Operator, generator: &Operator, omega: f64) -> Result<Self> {
        if !h0.is_hermitian() {
            return Err(Error::NotHermitian {
                deviation: h0.hermiticity_deviation(),
            });
        }
        if h0.dim() != generator.dim() {
            return Err(Error::DimensionMismatch {
                expected: h0.dim(),
                found: generator.dim(),
            });
        }
        let (values, vectors) = generator.eigh()?;
        Ok(Self {
            h0: h0.matrix().clone(),
            omega,
            values,
            vectors,
        })
    }

    /// `exp(−iωt G)`.
    fn rotation(&self, t: f64) -> CMatrix {
        let angle = self.omega * t;
        let n = self.values.len();
        CMatrix::from_fn(n, n, |r, k| self.vectors[(r, k)] * Complex64::from_polar(1.0, -angle * self.values[k]))
            * self.vectors.adjoint()
    }

    /// `exp(iωt G) ψ`, i.e. `ψ` seen from the co-rotating frame.
    fn to_body(&self, t: f64, psi: &CVector) -> CVector {
        let angle = self.omega * t;
        let mut v = self.vectors.adjoint() * psi;
        for (k, z) in v.iter_mut().enumerate() {
            *z *= Complex64::from_polar(1.0, angle * self.values[k]);
        }
        &self.vectors * v
    }

    fn to_lab(&self, t: f64, psi: &CVector) -> CVector {
        self.to_body(-t, psi)
    }
}

impl HamiltonianPath for RotatingHamiltonian {
    fn at(&self, t: f64) -> Result<Operator> {
        let rot = self.rotation(t);
        let m = &rot * &self.h0 * rot.adjoint();
        Operator::hermitian((&m + m.adjoint()) * c(0.5))
    }

    /// `exp(−iH(t)dt) = R(t) exp(−iH₀dt) R(t)†`, so one diagonalization of
    /// `H₀` serves every step.
    fn stepper(&self, dt: f64) -> Result<Box<dyn Stepper + '_>> {
        let u0 = Operator::hermitian(self.h0.clone())?.unitary_exp(dt)?.into_matrix();
        Ok(Box::new(RotatingStepper { path: self, u0 }))
    }
}

struct RotatingStepper<'a> {
    path: &'a RotatingHamiltonian,
    u0: CMatrix,
}

impl Stepper for RotatingStepper<'_> {
    fn step(&self, t_mid: f64, psi: &CVector) -> Result<(CVector, f64)> {
        if psi.len() != self.u0.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.u0.nrows(),
                found: psi.len(),
            });
        }
        let body = self.path.to_body(t_mid, psi);
        let energy = body.dotc(&(&self.path.h0 * &body)).re;
        Ok((self.path.to_lab(t_mid, &(&self.u0 * body)), energy))
    }
}

/// `(Ω/2) n̂·σ` with `n̂` at polar angle `theta0`, azimuth 0, precessing about
/// `ẑ` at rate `omega`.
pub fn precessing_spin(theta0: f64, big_omega: f64, omega: f64) -> Result<RotatingHamiltonian> {
    let s = pauli();
    let n = Vector3::new(theta0.sin(), 0.0, theta0.cos());
    let h0 = rotation_generator(&s, &n).scale(big_omega / 2.0);
    RotatingHamiltonian::new(&h0, &s[2].scale(0.5), omega)
}

/// `(Ω/2) B̂(t)·σ` for the noisy field whose azimuth advances as `ωt`.
pub fn noisy_spin<'a, N: NoisePattern>(
    theta0: f64,
    epsilon: f64,
    noise: &'a N,
    big_omega: f64,
    omega: f64,
) -> Result<impl Fn(f64) -> Result<Operator> + 'a> {
    check_off_pole(theta0)?;
    let s = pauli();
    Ok(move |t: f64| {
        let f = field_from_noise(theta0, epsilon, noise, &[omega * t])?;
        let b = f.field[0].normalize();
        Ok(rotation_generator(&s, &b).scale(big_omega / 2.0))
    })
}

/// The composite Hamiltonian of `sys` with its field at polar angle `theta0`
/// precessing about `ẑ`, and the tracked eigenstate to start from.
pub fn precessing_composite(
    sys: &VectorOperatorSystem,
    lambda: f64,
    theta0: f64,
    omega: f64,
) -> Result<(RotatingHamiltonian, CVector)> {
    if sys.n_hat().theta() != 0.0 {
        return Err(Error::InvalidArgument("system must start with its field along z".into()));
    }
    let n = Direction::new(theta0, 0.0)?;
    let h0 = build_hamiltonian(sys, lambda, &n)?;
    let start = tracked_eigenstate(&h0, &reference_state(sys, &n)?)?;
    let jz = &total_angular_momentum(sys)[2];
    Ok((RotatingHamiltonian::new(&h0, jz, omega)?, start.state.amplitudes().clone()))
}

/// Eigenvector of `h` with the largest overlap with `guess`, phased so the
/// overlap is real and positive.
pub fn nearest_eigenstate(h: &Operator, guess: &CVector) -> Result<CVector> {
    let (_, vectors) = h.eigh()?;
    let (k, z) = (0..vectors.ncols())
        .map(|k| (k, vectors.column(k).dotc(guess)))
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .ok_or_else(|| Error::InvalidArgument("empty operator".into()))?;
    Ok(vectors.column(k) * (z / c(z.norm())))
}

/// Phase difference folded into `(−π, π]`, for comparing phases known only
/// modulo `2π`.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    wrap_to_pi(a - b).abs()
}
