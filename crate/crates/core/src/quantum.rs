//! A spin-1/2 coupled to a quantum vector operator: composite Hamiltonian,
//! adiabatically tracked eigenstate, Schmidt decomposition and the spin's
//! geometric phase.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::classical::phi_plus;
use crate::error::{Error, Result};
use crate::frames::{transverse_frame, AdaptedFrame, Direction};
use crate::operators::{
    angular_momentum, c, check_normalized, pauli, rotation_generator, sho_quadratures, spin_half, tensor_state,
    rotation_between, CMatrix, CVector, Operator, VectorOperatorSystem, I,
};

/// Eigenvalues closer than this (relative to the spectral scale) are treated
/// as one degenerate level.
const DEGENERACY_TOLERANCE: f64 = 1e-9;
/// Schmidt weights closer than this are flagged as degenerate.
const SCHMIDT_TIE_TOLERANCE: f64 = 1e-12;

/// A normalized state on `H_particle ⊗ C²`, particle index slow.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeState {
    amplitudes: CVector,
    d_particle: usize,
}

impl CompositeState {
    pub fn new(amplitudes: CVector, d_particle: usize) -> Result<Self> {
        if amplitudes.len() != 2 * d_particle {
            return Err(Error::DimensionMismatch {
                expected: 2 * d_particle,
                found: amplitudes.len(),
            });
        }
        check_normalized(&amplitudes)?;
        Ok(Self {
            amplitudes,
            d_particle,
        })
    }

    pub fn product(particle: &CVector, spin: &CVector) -> Result<Self> {
        if spin.len() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: spin.len(),
            });
        }
        Self::new(tensor_state(particle, spin), particle.len())
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn d_particle(&self) -> usize {
        self.d_particle
    }

    /// The `d_particle × 2` matrix `M[p, s]` of amplitudes.
    pub fn coefficient_matrix(&self) -> CMatrix {
        CMatrix::from_fn(self.d_particle, 2, |p, s| self.amplitudes[2 * p + s])
    }

    pub fn overlap(&self, other: &CompositeState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

/// `|n̂+⟩ = (cos(Θ/2), e^{iΦ} sin(Θ/2))`.
pub fn spin_up_along(n: &Direction) -> CVector {
    let (s, co) = (n.theta() / 2.0).sin_cos();
    CVector::from_vec(vec![c(co), Complex64::from_polar(s, n.phi())])
}

/// `|n̂−⟩ = (−e^{−iΦ} sin(Θ/2), cos(Θ/2))`.
pub fn spin_down_along(n: &Direction) -> CVector {
    let (s, co) = (n.theta() / 2.0).sin_cos();
    CVector::from_vec(vec![-Complex64::from_polar(s, -n.phi()), c(co)])
}

/// `J⃗ = L⃗ ⊗ 1 + 1 ⊗ σ⃗/2`.
pub fn total_angular_momentum(sys: &VectorOperatorSystem) -> [Operator; 3] {
    let one_p = Operator::identity(sys.dim());
    let one_s = Operator::identity(2);
    let s = spin_half();
    [0, 1, 2].map(|i| &sys.l()[i].tensor(&one_s) + &one_p.tensor(&s[i]))
}

fn rotation_unitary(sys: &VectorOperatorSystem, target: &Direction) -> Result<Option<Operator>> {
    let (axis, angle) = rotation_between(&sys.n_hat(), target);
    if angle == 0.0 {
        return Ok(None);
    }
    let j = total_angular_momentum(sys);
    Ok(Some(rotation_generator(&j, &axis).unitary_exp(angle)?))
}

/// `H = H_A ⊗ 1 + (λ/2) Σ Aᵢ ⊗ σᵢ`, rotated as a whole by `exp(−iα k̂·J⃗)`
/// so that the reference field direction moves from `sys.n_hat()` to `n_hat`.
pub fn build_hamiltonian(sys: &VectorOperatorSystem, lambda: f64, n_hat: &Direction) -> Result<Operator> {
    let s = pauli();
    let mut h = sys.h_a().tensor(&Operator::identity(2));
    for i in 0..3 {
        h = h.try_add(&sys.a()[i].tensor(&s[i]).scale(lambda / 2.0))?;
    }
    let Some(u) = rotation_unitary(sys, n_hat)? else {
        return Ok(h);
    };
    let m = u.matrix() * h.matrix() * u.matrix().adjoint();
    let sym = (&m + m.adjoint()) * c(0.5);
    Operator::hermitian(sym)
}

/// The unperturbed reference `|n, m⟩ ⊗ |n̂+⟩` rotated along with
/// [`build_hamiltonian`].
pub fn reference_state(sys: &VectorOperatorSystem, n_hat: &Direction) -> Result<CompositeState> {
    let state = CompositeState::product(sys.reference_state(), &spin_up_along(&sys.n_hat()))?;
    let Some(u) = rotation_unitary(sys, n_hat)? else {
        return Ok(state);
    };
    let v = u.apply(state.amplitudes())?;
    let norm = v.norm();
    CompositeState::new(v / c(norm), sys.dim())
}

#[derive(Debug, Clone)]
pub struct TrackedEigenstate {
    pub state: CompositeState,
    pub energy: f64,
    /// `|⟨reference|state⟩|`.
    pub overlap: f64,
    /// Dimension of the eigenspace the state was taken from.
    pub degeneracy: usize,
}

/// The eigenstate of `h` continuously connected to `reference`: the
/// normalized projection of `reference` onto the eigenspace carrying the
/// largest weight, phased so the overlap is real and positive.
pub fn tracked_eigenstate(h: &Operator, reference: &CompositeState) -> Result<TrackedEigenstate> {
    if h.dim() != reference.amplitudes().len() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: reference.amplitudes().len(),
        });
    }
    let (values, vectors) = h.eigh()?;
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let coeffs: Vec<Complex64> = (0..values.len())
        .map(|k| vectors.column(k).dotc(reference.amplitudes()))
        .collect();

    let mut best: Option<(f64, usize, usize)> = None;
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && values[end] - values[end - 1] <= DEGENERACY_TOLERANCE * scale {
            end += 1;
        }
        let weight: f64 = coeffs[start..end].iter().map(|z| z.norm_sqr()).sum();
        if best.is_none_or(|(w, _, _)| weight > w) {
            best = Some((weight, start, end));
        }
        start = end;
    }
    let (weight, start, end) = best.expect("nonempty spectrum");
    let overlap = weight.sqrt();
    if overlap < std::f64::consts::FRAC_1_SQRT_2 {
        return Err(Error::TrackingAmbiguity { best_overlap: overlap });
    }
    let mut v = CVector::zeros(h.dim());
    for k in start..end {
        v += vectors.column(k) * coeffs[k];
    }
    v /= c(overlap);
    let energy = values[start..end].iter().sum::<f64>() / (end - start) as f64;
    Ok(TrackedEigenstate {
        state: CompositeState::new(v, reference.d_particle())?,
        energy,
        overlap,
        degeneracy: end - start,
    })
}

/// `|ψ⟩ = √p₊ |e₊⟩|s₊⟩ + √p₋ |e₋⟩|s₋⟩`.
#[derive(Debug, Clone)]
pub struct SchmidtResult {
    pub p_plus: f64,
    pub p_minus: f64,
    pub e_plus: CVector,
    pub e_minus: CVector,
    pub spin_plus: CVector,
    pub spin_minus: CVector,
    /// The two weights coincide, so the split is not unique; the spin
    /// vectors were then fixed to `|n̂±⟩`.
    pub degenerate: bool,
}

impl SchmidtResult {
    pub fn reconstruct(&self) -> CVector {
        tensor_state(&self.e_plus, &self.spin_plus) * c(self.p_plus.sqrt())
            + tensor_state(&self.e_minus, &self.spin_minus) * c(self.p_minus.sqrt())
    }
}

/// Schmidt decomposition via the singular values of the coefficient matrix.
/// The `+` branch is the one whose spin vector overlaps more with `|n̂+⟩`.
pub fn schmidt(state: &CompositeState, spin_axis: &Direction) -> Result<SchmidtResult> {
    let d = state.d_particle();
    if d < 2 {
        return Err(Error::InvalidArgument(
            "Schmidt split needs a particle space of dimension at least 2".into(),
        ));
    }
    let m = state.coefficient_matrix();
    let up = spin_up_along(spin_axis);
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    let sv = &svd.singular_values;
    let p = [sv[0] * sv[0], sv[1] * sv[1]];
    let spins = [v_t.row(0).transpose(), v_t.row(1).transpose()];

    if (p[0] - p[1]).abs() < SCHMIDT_TIE_TOLERANCE {
        let down = spin_down_along(spin_axis);
        let project = |s: &CVector| -> CVector { &m * s.conjugate() };
        let ep = project(&up);
        let em = project(&down);
        let (np, nm) = (ep.norm(), em.norm());
        return Ok(SchmidtResult {
            p_plus: np * np,
            p_minus: nm * nm,
            e_plus: ep / c(np),
            e_minus: em / c(nm),
            spin_plus: up,
            spin_minus: down,
            degenerate: true,
        });
    }
    let (kp, km) = if up.dotc(&spins[0]).norm() >= up.dotc(&spins[1]).norm() {
        (0, 1)
    } else {
        (1, 0)
    };
    let total = p[0] + p[1];
    Ok(SchmidtResult {
        p_plus: p[kp] / total,
        p_minus: p[km] / total,
        e_plus: u.column(kp).into_owned(),
        e_minus: u.column(km).into_owned(),
        spin_plus: spins[kp].clone(),
        spin_minus: spins[km].clone(),
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMethod {
    Exact,
    Perturbative,
}

/// The two parts of `⟨A₋A₊⟩/ρ²`: `⟨A₁²+A₂²⟩/ρ²` and `i⟨[A₁,A₂]⟩/ρ²`, with
/// `A₁, A₂` the transverse components of `A⃗` in a frame adapted to `n̂`.
/// Writing `A⃗ = ρn̂ + r₀b⃗` and `ε = r₀/ρ`, these are `ε²⟨b₁²+b₂²⟩` and
/// `ε² i⟨[b₁,b₂]⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpinFlipBreakdown {
    pub fluctuation: f64,
    pub commutator: f64,
}

impl SpinFlipBreakdown {
    pub fn p_minus(&self) -> f64 {
        (self.fluctuation + self.commutator) / 4.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseReport {
    pub method: PhaseMethod,
    pub theta0: f64,
    pub phi_classical: f64,
    pub phi_correction: f64,
    pub phi_total: f64,
    pub p_minus: f64,
    pub breakdown: Option<SpinFlipBreakdown>,
    /// The value obtained by dropping the commutator term, i.e. treating
    /// the fluctuations as a classical noise field.
    pub classical_correspondence: Option<f64>,
}

impl PhaseReport {
    /// The polar angle of a classical field giving the same phase,
    /// `cos Θ_eff = 1 + φ/π`; `None` when out of range.
    pub fn effective_polar_angle(&self) -> Option<f64> {
        let cos = 1.0 + self.phi_total / PI;
        (-1.0..=1.0).contains(&cos).then(|| cos.acos())
    }
}

fn check_probability(p: f64) -> Result<f64> {
    if !(-1e-12..=1.0 + 1e-12).contains(&p) {
        return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// `φ = p₊φ₊ + p₋φ₋ = −π(1−cosΘ₀) − 2π cosΘ₀ p₋`.
pub fn spin_phase_from_schmidt(p_minus: f64, theta0: f64) -> Result<PhaseReport> {
    let p_minus = check_probability(p_minus)?;
    let classical = phi_plus(theta0);
    let correction = -2.0 * PI * theta0.cos() * p_minus;
    Ok(PhaseReport {
        method: PhaseMethod::Exact,
        theta0,
        phi_classical: classical,
        phi_correction: correction,
        phi_total: classical + correction,
        p_minus,
        breakdown: None,
        classical_correspondence: None,
    })
}

/// Transverse-moment breakdown in an arbitrary frame whose third axis is
/// `n̂`; the result does not depend on how `e1, e2` are turned about it.
pub fn spin_flip_terms(sys: &VectorOperatorSystem, frame: &AdaptedFrame) -> Result<SpinFlipBreakdown> {
    if sys.rho() == 0.0 {
        return Err(Error::DegenerateDrivingField);
    }
    let a1 = rotation_generator(sys.a(), &frame.e1);
    let a2 = rotation_generator(sys.a(), &frame.e2);
    let psi = sys.reference_state();
    let sq = (&(&a1 * &a1) + &(&a2 * &a2)).expectation(psi)?;
    let comm = (a1.commutator(&a2)?.expectation(psi)?) * I;
    let rho2 = sys.rho() * sys.rho();
    Ok(SpinFlipBreakdown {
        fluctuation: sq.re / rho2,
        commutator: comm.re / rho2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbativeSpinFlip {
    pub p_minus: f64,
    pub breakdown: SpinFlipBreakdown,
    /// `p₋ > 1`: the small-fluctuation assumption does not hold.
    pub bound_violated: bool,
}

/// `p₋ = ⟨A₋A₊⟩ / (4ρ²)` in the reference state.
pub fn p_minus_perturbative(sys: &VectorOperatorSystem) -> Result<PerturbativeSpinFlip> {
    let breakdown = spin_flip_terms(sys, &transverse_frame(&sys.n_hat()))?;
    let p_minus = breakdown.p_minus();
    Ok(PerturbativeSpinFlip {
        p_minus,
        breakdown,
        bound_violated: p_minus > 1.0 + 1e-12,
    })
}

/// Perturbative spin phase at precession angle `theta0`, together with the
/// commutator-free classical-correspondence value.
pub fn spin_phase_perturbative(sys: &VectorOperatorSystem, theta0: f64) -> Result<PhaseReport> {
    let flip = p_minus_perturbative(sys)?;
    let classical = phi_plus(theta0);
    let cos = theta0.cos();
    let correction = -2.0 * PI * cos * flip.p_minus;
    Ok(PhaseReport {
        method: PhaseMethod::Perturbative,
        theta0,
        phi_classical: classical,
        phi_correction: correction,
        phi_total: classical + correction,
        p_minus: flip.p_minus,
        breakdown: Some(flip.breakdown),
        classical_correspondence: Some(classical - PI / 2.0 * cos * flip.breakdown.fluctuation),
    })
}

/// Reference-state moments whose classical counterparts vanish or are
/// direction independent, in units of `A`: `⟨Aᵢ⟩ − ρ n̂ᵢ` in the adapted
/// frame, `⟨A₁A₃+A₃A₁⟩ − 2ρ⟨A₁⟩`, and `⟨A₁²+A₂²⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrespondenceMoments {
    pub mean_fluctuation: [f64; 3],
    pub symmetric_13: f64,
    pub transverse_square: f64,
}

pub fn correspondence_moments(sys: &VectorOperatorSystem) -> Result<CorrespondenceMoments> {
    let frame = transverse_frame(&sys.n_hat());
    let psi = sys.reference_state();
    let comp = [frame.e1, frame.e2, frame.e3].map(|e| rotation_generator(sys.a(), &e));
    let mut mean = [0.0; 3];
    for i in 0..3 {
        mean[i] = comp[i].expectation_real(psi)?;
    }
    mean[2] -= sys.rho();
    let sym = comp[0].anticommutator(&comp[2])?.expectation_real(psi)? - 2.0 * sys.rho() * (mean[0]);
    let sq = (&(&comp[0] * &comp[0]) + &(&comp[1] * &comp[1])).expectation(psi)?.re;
    Ok(CorrespondenceMoments {
        mean_fluctuation: mean,
        symmetric_13: sym,
        transverse_square: sq,
    })
}

/// `−(2m+1) π (1 − cosΘ₀)`: the phase of the whole particle-plus-spin
/// system in the aligned state.
pub fn total_system_phase(m: f64, theta0: f64) -> f64 {
    (2.0 * m + 1.0) * phi_plus(theta0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactLmResult {
    pub l: f64,
    pub m: f64,
    pub theta0: f64,
    pub p_minus_exact: f64,
    /// `(l(l+1) − m(m+1)) / (4m²)`; absent for `m = 0`.
    pub p_minus_perturbative: Option<f64>,
    pub phi_exact: f64,
    pub phi_perturbative: Option<f64>,
    /// Eigenvalue of the tracked state within the two-level block.
    pub energy: f64,
}

/// Spin coupled to angular momentum by `H_A + (λ/2) L⃗·σ⃗`, with `H_A`
/// diagonal in `m` with eigenvalues `energy(m)`. The tracked state
/// `|l,m,+⟩` only mixes with `|l,m+1,−⟩`, so the problem is solved in that
/// two-dimensional block.
pub fn exact_lm_scenario<F: Fn(f64) -> f64>(l: f64, m: f64, lambda: f64, energy: F, theta0: f64) -> Result<ExactLmResult> {
    angular_momentum_check(l, m)?;
    if m < 0.0 {
        return Err(Error::InvalidArgument(format!("projection m = {m} must be nonnegative")));
    }
    let p_minus_perturbative = (m > 0.0).then(|| (l * (l + 1.0) - m * (m + 1.0)) / (4.0 * m * m));

    let (p_minus_exact, block_energy) = if (l - m).abs() < 1e-12 {
        (0.0, energy(m) + lambda * m / 2.0)
    } else {
        let a = energy(m) + lambda * m / 2.0;
        let d = energy(m + 1.0) - lambda * (m + 1.0) / 2.0;
        let off = lambda / 2.0 * (l * (l + 1.0) - m * (m + 1.0)).sqrt();
        let block = DMatrix::from_row_slice(2, 2, &[a, off, off, d]);
        let eig = block.symmetric_eigen();
        let k = if eig.eigenvectors[(0, 0)].abs() >= eig.eigenvectors[(0, 1)].abs() { 0 } else { 1 };
        let lower = eig.eigenvectors[(1, k)];
        (lower * lower, eig.eigenvalues[k])
    };
    let phi_exact = spin_phase_from_schmidt(p_minus_exact, theta0)?.phi_total;
    let phi_perturbative = p_minus_perturbative.map(|p| phi_plus(theta0) - 2.0 * PI * theta0.cos() * p);
    Ok(ExactLmResult {
        l,
        m,
        theta0,
        p_minus_exact,
        p_minus_perturbative,
        phi_exact,
        phi_perturbative,
        energy: block_energy,
    })
}

fn angular_momentum_check(l: f64, m: f64) -> Result<()> {
    angular_momentum_index(l, m).map(|_| ())
}

/// Basis index of `|l, m⟩` in the ordering of [`angular_momentum`].
fn angular_momentum_index(l: f64, m: f64) -> Result<usize> {
    let twice = 2.0 * l;
    if !l.is_finite() || l < 0.0 || (twice - twice.round()).abs() > 1e-12 {
        return Err(Error::InvalidSpin(l));
    }
    let k = l - m;
    if !m.is_finite() || m.abs() > l + 1e-12 || (k - k.round()).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("m = {m} is not a projection for l = {l}")));
    }
    Ok(k.round() as usize)
}

/// Angular momentum `l` with `A⃗ = L⃗`, `H_A = b L_z` and reference `|l, m⟩`.
/// `b = 0` gives the flat spectrum of the adiabatic limit.
pub fn angular_momentum_system(l: f64, m: f64, b: f64) -> Result<VectorOperatorSystem> {
    let k = angular_momentum_index(l, m)?;
    let ops = angular_momentum(l)?;
    let mut reference = CVector::zeros(ops[0].dim());
    reference[k] = c(1.0);
    VectorOperatorSystem::new(ops[2].scale(b), ops.clone(), ops, reference)
}

/// A second spin `s⃗₁` as the driving system: `A⃗ = L⃗ = s⃗₁`, `H_A = b s₁z`,
/// reference `|↑⟩`. The composite Hamiltonian is `H_A + λ s⃗₁·s⃗₂`.
pub fn two_spin_system(b: f64) -> Result<VectorOperatorSystem> {
    let s = spin_half();
    let reference = CVector::from_vec(vec![c(1.0), c(0.0)]);
    VectorOperatorSystem::new(s[2].scale(b), s.clone(), s, reference)
}

/// Ground state of a three-dimensional oscillator, displaced so that
/// `A⃗ = ρ ẑ + r₀ b⃗` with quadratures `b⃗`, i.e. `ε = r₀/ρ`.
pub fn sho_system(n_max: usize, rho: f64, r0: f64) -> Result<VectorOperatorSystem> {
    let modes = sho_quadratures(n_max)?;
    let dim = modes.dim();
    let offset = [0.0, 0.0, rho];
    let a = [0, 1, 2].map(|i| {
        let shifted = Operator::identity(dim).scale(offset[i]);
        &shifted + &modes.b[i].scale(r0)
    });
    VectorOperatorSystem::new(modes.number, modes.l, a, modes.ground)
}

/// `‖[H, J_z]‖` for `H` built with `n̂ = ẑ`.
pub fn jz_commutator_norm(sys: &VectorOperatorSystem, lambda: f64) -> Result<f64> {
    let h = build_hamiltonian(sys, lambda, &Direction::z())?;
    let jz = &total_angular_momentum(sys)[2];
    Ok(h.commutator(jz)?.norm())
}

/// Tracked eigenstate and its Schmidt split for a system whose field points
/// along `n_hat`.
pub fn solve_adiabatic(sys: &VectorOperatorSystem, lambda: f64, n_hat: &Direction) -> Result<(TrackedEigenstate, SchmidtResult)> {
    let h = build_hamiltonian(sys, lambda, n_hat)?;
    let reference = reference_state(sys, n_hat)?;
    let tracked = tracked_eigenstate(&h, &reference)?;
    let split = schmidt(&tracked.state, n_hat)?;
    Ok((tracked, split))
}

/// Frame `(e1, e2)` turned by `alpha` about `e3`.
pub fn turn_frame(frame: &AdaptedFrame, alpha: f64) -> AdaptedFrame {
    let (s, co) = alpha.sin_cos();
    AdaptedFrame {
        e1: frame.e1 * co + frame.e2 * s,
        e2: frame.e2 * co - frame.e1 * s,
        e3: frame.e3,
    }
}
