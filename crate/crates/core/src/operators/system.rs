use nalgebra::Vector3;

use super::{check_normalized, linear_combination, CVector, Operator};
use crate::error::{Error, Result};
use crate::frames::Direction;

/// Below this magnitude `⟨A⟩` is treated as zero.
const RHO_FLOOR: f64 = 1e-14;
/// Allowed `‖[H_A, n̂·L]‖`, relative to `max(1, ‖H_A‖)`.
const COMMUTING_TOLERANCE: f64 = 1e-10;

/// `Σ kᵢ Oᵢ` for a real axis `k`.
pub fn rotation_generator(ops: &[Operator; 3], axis: &Vector3<f64>) -> Operator {
    linear_combination(axis.as_slice(), ops).expect("three operators of equal dimension")
}

/// A quantum system `A` whose vector operator `A⃗` plays the role of the
/// driving field for a spin, together with its reference state `|n, m⟩`.
#[derive(Debug, Clone)]
pub struct VectorOperatorSystem {
    h_a: Operator,
    l: [Operator; 3],
    a: [Operator; 3],
    reference: CVector,
    mean_a: Vector3<f64>,
    rho: f64,
    n_hat: Direction,
}

impl VectorOperatorSystem {
    /// Validates the inputs and computes `⟨A⃗⟩ = ρ n̂` in the reference state.
    /// When `⟨A⃗⟩` vanishes, `ρ = 0` and `n̂` defaults to `ẑ`.
    pub fn new(h_a: Operator, l: [Operator; 3], a: [Operator; 3], reference: CVector) -> Result<Self> {
        let dim = h_a.dim();
        for op in l.iter().chain(&a) {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: op.dim(),
                });
            }
        }
        if reference.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: reference.len(),
            });
        }
        check_normalized(&reference)?;
        for op in std::iter::once(&h_a).chain(&l).chain(&a) {
            if !op.is_hermitian() {
                return Err(Error::NotHermitian {
                    deviation: op.hermiticity_deviation(),
                });
            }
        }
        let mut mean_a = Vector3::zeros();
        for (i, op) in a.iter().enumerate() {
            mean_a[i] = op.expectation_real(&reference)?;
        }
        let rho = mean_a.norm();
        let (rho, n_hat) = if rho < RHO_FLOOR {
            (0.0, Direction::z())
        } else {
            (rho, Direction::from_cartesian(&mean_a)?)
        };
        let n_dot_l = rotation_generator(&l, &n_hat.cartesian());
        let norm = h_a.commutator(&n_dot_l)?.norm();
        if norm > COMMUTING_TOLERANCE * h_a.norm().max(1.0) {
            return Err(Error::NonCommutingReference { norm });
        }
        Ok(Self {
            h_a,
            l,
            a,
            reference,
            mean_a,
            rho,
            n_hat,
        })
    }

    pub fn dim(&self) -> usize {
        self.h_a.dim()
    }

    pub fn h_a(&self) -> &Operator {
        &self.h_a
    }

    pub fn l(&self) -> &[Operator; 3] {
        &self.l
    }

    pub fn a(&self) -> &[Operator; 3] {
        &self.a
    }

    pub fn reference_state(&self) -> &CVector {
        &self.reference
    }

    /// `⟨A⃗⟩` in the reference state.
    pub fn mean_a(&self) -> Vector3<f64> {
        self.mean_a
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn n_hat(&self) -> Direction {
        self.n_hat
    }

    /// `⟨n̂·L⟩`, the projection quantum number `m` when the reference is an
    /// eigenstate of `n̂·L`.
    pub fn projection(&self) -> Result<f64> {
        rotation_generator(&self.l, &self.n_hat.cartesian()).expectation_real(&self.reference)
    }

    /// Axis and angle of the rotation carrying `n̂` to `target`: about
    /// `n̂ × target`, or about an axis perpendicular to `n̂` when the two are
    /// antiparallel. From `ẑ` this is the rotation about `ẑ × n̂` by `Θ₀`.
    pub fn rotation_to(&self, target: &Direction) -> (Vector3<f64>, f64) {
        rotation_between(&self.n_hat, target)
    }

    /// The same system with `H_A` and the reference state rotated by
    /// `R = exp(−iα k̂·L)` so that `⟨A⃗⟩` points along `target`. `A⃗` and `L⃗` are
    /// left unchanged.
    pub fn rotated_to(&self, target: &Direction) -> Result<Self> {
        let (axis, angle) = self.rotation_to(target);
        if angle == 0.0 {
            return Ok(self.clone());
        }
        let r = rotation_generator(&self.l, &axis).unitary_exp(angle)?;
        let h = Operator::hermitian(r.matrix() * self.h_a.matrix() * r.matrix().adjoint())?;
        let reference = r.apply(&self.reference)?;
        let reference = &reference / nalgebra::Complex::new(reference.norm(), 0.0);
        Self::new(h, self.l.clone(), self.a.clone(), reference)
    }
}

pub(crate) fn rotation_between(from: &Direction, to: &Direction) -> (Vector3<f64>, f64) {
    let u = from.cartesian();
    let v = to.cartesian();
    let cross = u.cross(&v);
    let angle = cross.norm().atan2(u.dot(&v));
    if cross.norm() > 1e-12 {
        return (cross.normalize(), angle);
    }
    if u.dot(&v) > 0.0 {
        return (Vector3::z(), 0.0);
    }
    let trial = if u.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    (u.cross(&trial).normalize(), std::f64::consts::PI)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::operators::{angular_momentum, c, spin_half};

    fn basis(dim: usize, k: usize) -> CVector {
        let mut v = CVector::zeros(dim);
        v[k] = c(1.0);
        v
    }

    fn lm_system(l: f64, k: usize) -> VectorOperatorSystem {
        let ops = angular_momentum(l).unwrap();
        let dim = ops[0].dim();
        VectorOperatorSystem::new(Operator::zeros(dim), ops.clone(), ops, basis(dim, k)).unwrap()
    }

    #[test]
    fn reference_expectation_gives_rho_and_direction() {
        let sys = lm_system(2.0, 1);
        assert!((sys.rho() - 1.0).abs() < 1e-14);
        assert!(sys.n_hat().theta().abs() < 1e-14);
        assert!((sys.projection().unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn negative_projection_points_down() {
        let sys = lm_system(1.0, 2);
        assert!((sys.n_hat().theta() - PI).abs() < 1e-14);
        assert!((sys.rho() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_projection_gives_zero_rho() {
        let sys = lm_system(1.0, 1);
        assert_eq!(sys.rho(), 0.0);
    }

    #[test]
    fn non_commuting_energy_is_rejected() {
        let ops = spin_half();
        let err = VectorOperatorSystem::new(ops[0].clone(), ops.clone(), ops, basis(2, 0)).unwrap_err();
        assert!(matches!(err, Error::NonCommutingReference { .. }));
    }

    #[test]
    fn unnormalized_reference_is_rejected() {
        let ops = spin_half();
        let v = basis(2, 0) * c(1.5);
        let err = VectorOperatorSystem::new(Operator::zeros(2), ops.clone(), ops, v).unwrap_err();
        assert!(matches!(err, Error::NotNormalized { .. }));
    }

    #[test]
    fn rotation_carries_mean_field() {
        let ops = angular_momentum(3.0).unwrap();
        let h = ops[2].scale(0.7);
        let sys = VectorOperatorSystem::new(h, ops.clone(), ops, basis(7, 1)).unwrap();
        let target = Direction::new(1.1, 2.3).unwrap();
        let rot = sys.rotated_to(&target).unwrap();
        assert!((rot.mean_a() - target.cartesian() * 2.0).norm() < 1e-12);
        assert!((rot.projection().unwrap() - 2.0).abs() < 1e-12);
        let spectrum = |s: &VectorOperatorSystem| s.h_a().eigh().unwrap().0;
        for (x, y) in spectrum(&sys).iter().zip(spectrum(&rot)) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_from_z_is_about_z_cross_n() {
        let sys = lm_system(1.0, 0);
        let target = Direction::new(0.6, 1.0).unwrap();
        let (axis, angle) = sys.rotation_to(&target);
        assert!((angle - 0.6).abs() < 1e-14);
        assert!((axis - Vector3::new(-(1.0f64).sin(), 1.0f64.cos(), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn antiparallel_rotation() {
        let sys = lm_system(1.0, 0);
        let rot = sys.rotated_to(&Direction::new(PI, 0.0).unwrap()).unwrap();
        assert!((rot.mean_a() + Vector3::z()).norm() < 1e-12);
    }
}
