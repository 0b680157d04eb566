//! Dense complex operators on small Hilbert spaces: spin and angular-momentum
//! matrices, oscillator quadratures, tensor products and vector-operator
//! checks.

mod angular;
mod sho;
mod system;

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub use angular::{angular_momentum, pauli, spin_half, verify_su2, Su2Report};
pub use sho::{sho_quadratures, ShoModes};
pub use system::{rotation_generator, VectorOperatorSystem};
pub(crate) use system::rotation_between;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Tolerance used when a hermiticity claim is checked.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

pub(crate) fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// A square complex matrix. The `hermitian` flag is only ever set after the
/// matrix has been checked, or when it is produced from hermitian inputs by an
/// operation that preserves hermiticity.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    matrix: CMatrix,
    hermitian: bool,
}

impl Operator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("operator has non-finite entries".into()));
        }
        Ok(Self {
            matrix,
            hermitian: false,
        })
    }

    /// Wraps `matrix` and verifies `‖M − M†‖ < 1e-12` (scaled by `max(1, ‖M‖)`).
    pub fn hermitian(matrix: CMatrix) -> Result<Self> {
        let mut op = Self::new(matrix)?;
        let deviation = op.hermiticity_deviation();
        if deviation > HERMITIAN_TOLERANCE * op.norm().max(1.0) {
            return Err(Error::NotHermitian { deviation });
        }
        op.hermitian = true;
        Ok(op)
    }

    pub(crate) fn trusted_hermitian(matrix: CMatrix) -> Self {
        Self {
            matrix,
            hermitian: true,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::trusted_hermitian(CMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::trusted_hermitian(CMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Frobenius norm of `M − M†`.
    pub fn hermiticity_deviation(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).norm()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn dagger(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            hermitian: self.hermitian,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            matrix: &self.matrix * c(s),
            hermitian: self.hermitian,
        }
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self {
            matrix: &self.matrix * s,
            hermitian: self.hermitian && s.im == 0.0,
        }
    }

    /// Kronecker product `self ⊗ other`; the first factor is the slow index.
    pub fn tensor(&self, other: &Operator) -> Self {
        Self {
            matrix: self.matrix.kronecker(&other.matrix),
            hermitian: self.hermitian && other.hermitian,
        }
    }

    fn check_dim(&self, other: usize) -> Result<()> {
        if self.dim() != other {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Operator) -> Result<Self> {
        self.check_dim(other.dim())?;
        Ok(Self {
            matrix: &self.matrix + &other.matrix,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn try_mul(&self, other: &Operator) -> Result<Self> {
        self.check_dim(other.dim())?;
        Ok(Self {
            matrix: &self.matrix * &other.matrix,
            hermitian: false,
        })
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Operator) -> Result<Self> {
        self.check_dim(other.dim())?;
        Ok(Self {
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
            hermitian: false,
        })
    }

    /// `{self, other}`.
    pub fn anticommutator(&self, other: &Operator) -> Result<Self> {
        self.check_dim(other.dim())?;
        Ok(Self {
            matrix: &self.matrix * &other.matrix + &other.matrix * &self.matrix,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn apply(&self, state: &CVector) -> Result<CVector> {
        self.check_dim(state.len())?;
        Ok(&self.matrix * state)
    }

    /// `⟨ψ|M|ψ⟩` for a normalized `ψ`.
    pub fn expectation(&self, state: &CVector) -> Result<Complex64> {
        check_normalized(state)?;
        Ok(state.dotc(&self.apply(state)?))
    }

    /// `⟨ψ|M|ψ⟩` as a real number; the operator must be hermitian.
    pub fn expectation_real(&self, state: &CVector) -> Result<f64> {
        if !self.hermitian {
            return Err(Error::NotHermitian {
                deviation: self.hermiticity_deviation(),
            });
        }
        Ok(self.expectation(state)?.re)
    }

    /// Eigenvalues in ascending order with the matching orthonormal
    /// eigenvectors as columns.
    pub fn eigh(&self) -> Result<(Vec<f64>, CMatrix)> {
        if !self.hermitian {
            return Err(Error::NotHermitian {
                deviation: self.hermiticity_deviation(),
            });
        }
        let eig = self.matrix.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = CMatrix::from_columns(
            &order
                .iter()
                .map(|&k| eig.eigenvectors.column(k).into_owned())
                .collect::<Vec<_>>(),
        );
        Ok((values, vectors))
    }

    /// `exp(−i t M)` for hermitian `M`, built from its spectral decomposition.
    pub fn unitary_exp(&self, t: f64) -> Result<Self> {
        let (values, vectors) = self.eigh()?;
        let phases = CVector::from_iterator(
            values.len(),
            values.iter().map(|e| Complex64::from_polar(1.0, -e * t)),
        );
        let scaled = CMatrix::from_fn(self.dim(), self.dim(), |r, k| vectors[(r, k)] * phases[k]);
        Ok(Self {
            matrix: scaled * vectors.adjoint(),
            hermitian: false,
        })
    }
}

impl Add for &Operator {
    type Output = Operator;

    fn add(self, rhs: &Operator) -> Operator {
        self.try_add(rhs).expect("operator dimensions must match")
    }
}

impl Sub for &Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        self.try_add(&-rhs).expect("operator dimensions must match")
    }
}

impl Mul for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        self.try_mul(rhs).expect("operator dimensions must match")
    }
}

impl Neg for &Operator {
    type Output = Operator;

    fn neg(self) -> Operator {
        self.scale(-1.0)
    }
}

pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    a.tensor(b)
}

pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    a.commutator(b)
}

pub fn expectation(a: &Operator, state: &CVector) -> Result<Complex64> {
    a.expectation(state)
}

/// `Σ cᵢ Oᵢ` for real coefficients; hermitian if every `Oᵢ` is.
pub fn linear_combination(coeffs: &[f64], ops: &[Operator]) -> Result<Operator> {
    let first = ops
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty operator list".into()))?;
    if coeffs.len() != ops.len() {
        return Err(Error::DimensionMismatch {
            expected: ops.len(),
            found: coeffs.len(),
        });
    }
    let mut acc = Operator::zeros(first.dim());
    for (&k, op) in coeffs.iter().zip(ops) {
        acc = acc.try_add(&op.scale(k))?;
    }
    Ok(acc)
}

/// Tensor product of state vectors, first factor slow.
pub fn tensor_state(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

pub(crate) fn check_normalized(state: &CVector) -> Result<()> {
    let norm = state.norm();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized { norm });
    }
    Ok(())
}

pub(crate) fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Violations of `[Lᵢ, Aⱼ] = i εᵢⱼₖ Aₖ` and `[L_z, A_±] = ±A_±`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorOperatorReport {
    /// Largest Frobenius norm of `[Lᵢ, Aⱼ] − iεᵢⱼₖAₖ` over `(i, j)`.
    pub max_violation: f64,
    /// Largest Frobenius norm of `[L_z, A_±] ∓ A_±`.
    pub ladder_violation: f64,
}

impl VectorOperatorReport {
    pub fn worst(&self) -> f64 {
        self.max_violation.max(self.ladder_violation)
    }
}

pub fn verify_vector_operator(l: &[Operator; 3], a: &[Operator; 3]) -> Result<VectorOperatorReport> {
    let dim = l[0].dim();
    verify_vector_operator_on(l, a, &(0..dim).collect::<Vec<_>>())
}

/// As [`verify_vector_operator`], but the residual matrices are only measured
/// on the given columns, i.e. acting on the subspace spanned by those basis
/// states.
pub fn verify_vector_operator_on(
    l: &[Operator; 3],
    a: &[Operator; 3],
    columns: &[usize],
) -> Result<VectorOperatorReport> {
    let dim = l[0].dim();
    for op in l.iter().chain(a) {
        op.check_dim(dim).map_err(|_| Error::DimensionMismatch {
            expected: dim,
            found: op.dim(),
        })?;
    }
    if let Some(&bad) = columns.iter().find(|&&k| k >= dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad + 1,
        });
    }
    let measure = |m: &CMatrix| -> f64 {
        columns
            .iter()
            .map(|&k| m.column(k).norm_squared())
            .sum::<f64>()
            .sqrt()
    };
    let mut max_violation: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let mut residual = l[i].commutator(&a[j])?.into_matrix();
            for k in 0..3 {
                let e = levi_civita(i, j, k);
                if e != 0.0 {
                    residual -= a[k].matrix() * (I * e);
                }
            }
            max_violation = max_violation.max(measure(&residual));
        }
    }
    let mut ladder_violation: f64 = 0.0;
    for sign in [1.0, -1.0] {
        let a_pm = a[0].matrix() + a[1].matrix() * (I * sign);
        let residual = l[2].matrix() * &a_pm - &a_pm * l[2].matrix() - &a_pm * c(sign);
        ladder_violation = ladder_violation.max(measure(&residual));
    }
    Ok(VectorOperatorReport {
        max_violation,
        ladder_violation,
    })
}
