use super::{ComplexMatrix, C64};
use crate::{Error, Result};

/// Inversion refuses matrices whose 1-norm condition estimate exceeds this.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Gauss–Jordan inversion with partial pivoting.
pub fn invert(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = m.require_square()?;
    if !m.is_finite() {
        return Err(Error::NonFinite("matrix to invert"));
    }
    let mut a = m.clone();
    let mut inv = ComplexMatrix::identity(n);

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[(i, col)].norm().total_cmp(&a[(j, col)].norm()))
            .unwrap_or(col);
        let pivot = a[(pivot_row, col)];
        if pivot.norm() == 0.0 {
            return Err(Error::Singular { column: col });
        }
        if pivot_row != col {
            for k in 0..n {
                let t = a[(col, k)];
                a[(col, k)] = a[(pivot_row, k)];
                a[(pivot_row, k)] = t;
                let t = inv[(col, k)];
                inv[(col, k)] = inv[(pivot_row, k)];
                inv[(pivot_row, k)] = t;
            }
        }
        let recip = C64::new(1.0, 0.0) / pivot;
        for k in 0..n {
            a[(col, k)] *= recip;
            inv[(col, k)] *= recip;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[(row, col)];
            if factor.norm_sqr() == 0.0 {
                continue;
            }
            for k in 0..n {
                let ak = a[(col, k)];
                let ik = inv[(col, k)];
                a[(row, k)] -= factor * ak;
                inv[(row, k)] -= factor * ik;
            }
        }
    }

    let condition = m.norm_one() * inv.norm_one();
    if !condition.is_finite() || condition > CONDITION_LIMIT {
        return Err(Error::IllConditioned { condition });
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::complex_gaussian;
    use crate::seed::{stream, Namespace};

    #[test]
    fn identity_and_diagonal() {
        let i = ComplexMatrix::identity(4);
        assert_eq!(invert(&i).unwrap(), i);
        let d = invert(&ComplexMatrix::from_real_diag(&[2.0, 0.5])).unwrap();
        assert!(d.max_abs_diff(&ComplexMatrix::from_real_diag(&[0.5, 2.0])) < 1e-15);
    }

    #[test]
    fn random_residual() {
        let mut rng = stream(1, Namespace::Oracle, 10);
        for _ in 0..50 {
            let m = complex_gaussian(6, 6, &mut rng);
            let inv = invert(&m).unwrap();
            assert!((&m * &inv).max_abs_diff(&ComplexMatrix::identity(6)) < 1e-9);
        }
    }

    #[test]
    fn singular_and_ill_conditioned_fail() {
        let mut s = ComplexMatrix::zeros(2, 2);
        s[(0, 0)] = C64::new(1.0, 0.0);
        s[(1, 0)] = C64::new(2.0, 0.0);
        assert!(matches!(invert(&s), Err(Error::Singular { .. })));
        let ill = ComplexMatrix::from_real_diag(&[1.0, 1e-13]);
        assert!(matches!(invert(&ill), Err(Error::IllConditioned { .. })));
    }
}
