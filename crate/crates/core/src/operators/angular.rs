use num_complex::Complex64;

use super::{c, CMatrix, Operator, I};
use crate::error::{Error, Result};

/// Pauli matrices `(σ_x, σ_y, σ_z)` in the basis `(|↑⟩, |↓⟩)`.
pub fn pauli() -> [Operator; 3] {
    let z = c(0.0);
    let one = c(1.0);
    [
        Operator::trusted_hermitian(CMatrix::from_row_slice(2, 2, &[z, one, one, z])),
        Operator::trusted_hermitian(CMatrix::from_row_slice(2, 2, &[z, -I, I, z])),
        Operator::trusted_hermitian(CMatrix::from_row_slice(2, 2, &[one, z, z, -one])),
    ]
}

/// Spin-1/2 operators `σ/2`.
pub fn spin_half() -> [Operator; 3] {
    pauli().map(|s| s.scale(0.5))
}

/// Angular-momentum matrices for quantum number `l` (integer or half-integer).
/// Basis index `k` carries `m = l − k`, so `L_z` is diagonal with entries
/// `l, l−1, …, −l`.
pub fn angular_momentum(l: f64) -> Result<[Operator; 3]> {
    let twice = 2.0 * l;
    if !l.is_finite() || l < 0.0 || (twice - twice.round()).abs() > 1e-12 {
        return Err(Error::InvalidSpin(l));
    }
    let dim = twice.round() as usize + 1;
    let l = twice.round() / 2.0;
    let m_of = |k: usize| l - k as f64;

    // L₊|m⟩ = √(l(l+1) − m(m+1)) |m+1⟩; |m+1⟩ sits one index lower.
    let mut raise = CMatrix::zeros(dim, dim);
    for k in 1..dim {
        let m = m_of(k);
        raise[(k - 1, k)] = c((l * (l + 1.0) - m * (m + 1.0)).sqrt());
    }
    let lower = raise.adjoint();
    let lx = (&raise + &lower) * c(0.5);
    let ly = (&raise - &lower) * Complex64::new(0.0, -0.5);
    let lz = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(dim, (0..dim).map(|k| c(m_of(k)))));
    Ok([
        Operator::trusted_hermitian(lx),
        Operator::trusted_hermitian(ly),
        Operator::trusted_hermitian(lz),
    ])
}

/// Residuals of the su(2) algebra for a candidate angular-momentum triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2Report {
    /// Largest Frobenius norm of `[Lᵢ, Lⱼ] − iεᵢⱼₖLₖ`.
    pub commutator_violation: f64,
    /// Frobenius norm of `L² − l(l+1)·1`.
    pub casimir_violation: f64,
}

pub fn verify_su2(ops: &[Operator; 3], l: f64) -> Result<Su2Report> {
    let r = super::verify_vector_operator(ops, ops)?;
    let casimir = ops
        .iter()
        .map(|o| o * o)
        .reduce(|a, b| &a + &b)
        .expect("three operators");
    let target = Operator::identity(ops[0].dim()).scale(l * (l + 1.0));
    Ok(Su2Report {
        commutator_violation: r.max_violation,
        casimir_violation: (&casimir - &target).norm(),
    })
}
