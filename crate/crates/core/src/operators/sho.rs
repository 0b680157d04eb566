use super::{c, CMatrix, CVector, Operator, I};
use crate::error::{Error, Result};

/// Three-dimensional harmonic oscillator on a Fock space truncated at
/// `n_max` quanta per mode. Basis index is `(nx·(n_max+1) + ny)·(n_max+1) + nz`.
#[derive(Debug, Clone)]
pub struct ShoModes {
    pub n_max: usize,
    /// Quadratures `bᵢ = aᵢ + aᵢ†`; ground-state variance 1.
    pub b: [Operator; 3],
    /// Orbital generators `Lᵢ = −i εᵢⱼₖ aⱼ† aₖ`.
    pub l: [Operator; 3],
    /// Total number operator `Σ aᵢ† aᵢ`.
    pub number: Operator,
    pub ground: CVector,
}

impl ShoModes {
    pub fn dim(&self) -> usize {
        (self.n_max + 1).pow(3)
    }

    /// Occupations `(nx, ny, nz)` of basis state `index`.
    pub fn occupations(&self, index: usize) -> [usize; 3] {
        let n = self.n_max + 1;
        [index / (n * n), (index / n) % n, index % n]
    }

    /// Basis states with every occupation at most `n_max − margin`, where
    /// truncation does not affect operators of degree ≤ `margin`.
    pub fn interior_columns(&self, margin: usize) -> Vec<usize> {
        (0..self.dim())
            .filter(|&k| self.occupations(k).iter().all(|&n| n + margin <= self.n_max))
            .collect()
    }
}

pub fn sho_quadratures(n_max: usize) -> Result<ShoModes> {
    if n_max < 1 {
        return Err(Error::InvalidArgument("Fock cutoff must be at least 1".into()));
    }
    let n = n_max + 1;
    let mut a = CMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = c((k as f64).sqrt());
    }
    let one = CMatrix::identity(n, n);
    let embed = |op: &CMatrix, mode: usize| -> CMatrix {
        let factors: [&CMatrix; 3] = match mode {
            0 => [op, &one, &one],
            1 => [&one, op, &one],
            _ => [&one, &one, op],
        };
        factors[0].kronecker(factors[1]).kronecker(factors[2])
    };
    let ann: Vec<CMatrix> = (0..3).map(|i| embed(&a, i)).collect();
    let cre: Vec<CMatrix> = ann.iter().map(|m| m.adjoint()).collect();

    let b = [0, 1, 2].map(|i| Operator::trusted_hermitian(&ann[i] + &cre[i]));
    let l = [(1, 2), (2, 0), (0, 1)].map(|(j, k)| {
        let m = (&cre[j] * &ann[k] - &cre[k] * &ann[j]) * (-I);
        Operator::trusted_hermitian(m)
    });
    let number = Operator::trusted_hermitian((0..3).map(|i| &cre[i] * &ann[i]).sum());
    let mut ground = CVector::zeros(n * n * n);
    ground[0] = c(1.0);
    Ok(ShoModes {
        n_max,
        b,
        l,
        number,
        ground,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{verify_vector_operator, verify_vector_operator_on};

    #[test]
    fn ground_state_moments() {
        for n_max in [2, 3, 5] {
            let s = sho_quadratures(n_max).unwrap();
            for b in &s.b {
                assert!(b.expectation(&s.ground).unwrap().norm() < 1e-15);
            }
            let transverse = &(&s.b[0] * &s.b[0]) + &(&s.b[1] * &s.b[1]);
            let v = transverse.expectation(&s.ground).unwrap();
            assert!((v - c(2.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn quadratures_commute() {
        let s = sho_quadratures(3).unwrap();
        assert!(s.b[0].commutator(&s.b[1]).unwrap().norm() < 1e-14);
    }

    #[test]
    fn lz_matches_position_momentum_form() {
        // x p_y − y p_x with x = b/√2, p = i(a† − a)/√2 on the untruncated
        // interior.
        let s = sho_quadratures(4).unwrap();
        let p = |i: usize| {
            let b = s.b[i].matrix();
            // a and a† are the strictly upper and lower parts of b.
            let upper = CMatrix::from_fn(b.nrows(), b.ncols(), |r, k| if r < k { b[(r, k)] } else { c(0.0) });
            let lower = CMatrix::from_fn(b.nrows(), b.ncols(), |r, k| if r > k { b[(r, k)] } else { c(0.0) });
            (lower - upper) * (I * std::f64::consts::FRAC_1_SQRT_2)
        };
        let x = |i: usize| s.b[i].matrix() * c(std::f64::consts::FRAC_1_SQRT_2);
        let lz = x(0) * p(1) - x(1) * p(0);
        let diff = lz - s.l[2].matrix();
        let interior = s.interior_columns(1);
        let worst = interior.iter().map(|&k| diff.column(k).norm()).fold(0.0, f64::max);
        assert!(worst < 1e-12);
    }

    #[test]
    fn orbital_generators_close_su2_on_interior() {
        // L moves quanta between modes, so the cutoff breaks the algebra
        // unless two hops stay inside the truncated space.
        let s = sho_quadratures(3).unwrap();
        let interior = verify_vector_operator_on(&s.l, &s.l, &s.interior_columns(2)).unwrap();
        assert!(interior.worst() < 1e-12);
        assert!(verify_vector_operator(&s.l, &s.l).unwrap().worst() > 1e-3);
    }

    #[test]
    fn quadratures_are_vector_operators_away_from_cutoff() {
        let s = sho_quadratures(4).unwrap();
        let full = verify_vector_operator(&s.l, &s.b).unwrap();
        let interior = verify_vector_operator_on(&s.l, &s.b, &s.interior_columns(2)).unwrap();
        assert!(interior.worst() < 1e-12);
        assert!(full.worst() > 1e-3, "cutoff violation should be visible");
    }

    #[test]
    fn number_operator_commutes_with_l() {
        let s = sho_quadratures(3).unwrap();
        for l in &s.l {
            assert!(s.number.commutator(l).unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn ground_moments_do_not_depend_on_cutoff() {
        let moment = |n_max: usize| {
            let s = sho_quadratures(n_max).unwrap();
            let bm = &s.b[0] - &s.b[1].scale_complex(I);
            let bp = &s.b[0] + &s.b[1].scale_complex(I);
            let sq = &s.b[2] * &s.b[2];
            (
                (&bm * &bp).expectation(&s.ground).unwrap(),
                sq.expectation(&s.ground).unwrap(),
            )
        };
        let reference = moment(2);
        for n_max in 3..=5 {
            let m = moment(n_max);
            assert_eq!(m, reference);
        }
        assert!((reference.0 - c(2.0)).norm() < 1e-14);
        assert!((reference.1 - c(1.0)).norm() < 1e-14);
    }

    #[test]
    fn zero_cutoff_is_rejected() {
        assert!(sho_quadratures(0).is_err());
    }
}
