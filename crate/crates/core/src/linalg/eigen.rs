use alloc::vec::Vec;


use super::{ComplexMatrix, C64};
use crate::{Error, Result};

/// Largest `|M − M^H|` entry accepted, relative to `max(1, max|M|)`.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;
/// Sweeps stop once the off-diagonal Frobenius norm falls below this
/// fraction of the diagonal norm.
pub const OFF_DIAGONAL_TOLERANCE: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the eigenvector of `eigenvalues[i]`.
    pub eigenvectors: Option<ComplexMatrix>,
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    hermitian_eigen(m, false).map(|r| r.eigenvalues)
}

/// Cyclic Jacobi eigendecomposition of a Hermitian matrix.
///
/// Each rotation first removes the phase of the pivot `a_pq` with a diagonal
/// unitary, then applies the real symmetric Jacobi rotation that zeroes it.
pub fn hermitian_eigen(m: &ComplexMatrix, want_vectors: bool) -> Result<EigenResult> {
    let n = m.require_square()?;
    if !m.is_finite() {
        return Err(Error::NonFinite("Hermitian eigensolver input"));
    }
    let defect = m.hermitian_defect();
    if defect > HERMITIAN_TOLERANCE * m.max_abs().max(1.0) {
        return Err(Error::NotHermitian { defect });
    }

    let mut a = m.clone();
    for i in 0..n {
        a[(i, i)].im = 0.0;
        for j in i + 1..n {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    let mut v = want_vectors.then(|| ComplexMatrix::identity(n));

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let (off, diag) = off_and_diag_norms(&a);
        if off <= OFF_DIAGONAL_TOLERANCE * diag {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, v.as_mut(), p, q);
            }
        }
    }
    if !converged {
        let (off, diag) = off_and_diag_norms(&a);
        if off > OFF_DIAGONAL_TOLERANCE * diag {
            return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = v.map(|v| {
        let mut sorted = ComplexMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            for r in 0..n {
                sorted[(r, dst)] = v[(r, src)];
            }
        }
        sorted
    });
    Ok(EigenResult { eigenvalues, eigenvectors })
}

fn off_and_diag_norms(a: &ComplexMatrix) -> (f64, f64) {
    let n = a.rows();
    let mut off = 0.0;
    let mut diag = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                diag += a[(i, i)].re * a[(i, i)].re;
            } else {
                off += a[(i, j)].norm_sqr();
            }
        }
    }
    (off.sqrt(), diag.sqrt())
}

fn rotate(a: &mut ComplexMatrix, v: Option<&mut ComplexMatrix>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let magnitude = apq.norm();
    if magnitude == 0.0 {
        return;
    }
    let phase_conj = (apq / magnitude).conj();
    let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * magnitude);
    let t = if theta.is_infinite() {
        0.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // G acts on the (p, q) plane: [[g_pp, g_pq], [g_qp, g_qq]].
    let g_pp = C64::new(c, 0.0);
    let g_pq = C64::new(s, 0.0);
    let g_qp = phase_conj * -s;
    let g_qq = phase_conj * c;

    let n = a.rows();
    let rotate_columns = |m: &mut ComplexMatrix| {
        for k in 0..n {
            let x = m[(k, p)];
            let y = m[(k, q)];
            m[(k, p)] = x * g_pp + y * g_qp;
            m[(k, q)] = x * g_pq + y * g_qq;
        }
    };
    rotate_columns(a);
    for k in 0..n {
        let x = a[(p, k)];
        let y = a[(q, k)];
        a[(p, k)] = g_pp.conj() * x + g_qp.conj() * y;
        a[(q, k)] = g_pq.conj() * x + g_qq.conj() * y;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;
    if let Some(v) = v {
        rotate_columns(v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sample_haar_unitary;
    use crate::seed::{stream, Namespace};
    use alloc::vec;

    fn random_hermitian(n: usize, seed: u64) -> ComplexMatrix {
        let mut rng = stream(seed, Namespace::Oracle, 0);
        let g = crate::linalg::complex_gaussian(n, n, &mut rng);
        g.add(&g.adjoint()).scale_real(0.5)
    }

    #[test]
    fn identity_and_diagonal() {
        let eig = hermitian_eigenvalues(&ComplexMatrix::identity(6)).unwrap();
        assert_eq!(eig, vec![1.0; 6]);
        let eig = hermitian_eigenvalues(&ComplexMatrix::from_real_diag(&[4.0, 0.25])).unwrap();
        assert_eq!(eig, vec![0.25, 4.0]);
    }

    #[test]
    fn reconstruction_and_trace() {
        for seed in 0..20 {
            let m = random_hermitian(6, seed);
            let r = hermitian_eigen(&m, true).unwrap();
            assert!(r.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            let v = r.eigenvectors.unwrap();
            let lambda = ComplexMatrix::from_real_diag(&r.eigenvalues);
            let rebuilt = &(&v * &lambda) * &v.adjoint();
            let err = rebuilt.sub(&m).frobenius_norm_sqr().sqrt() / m.frobenius_norm_sqr().sqrt();
            assert!(err < 1e-9, "reconstruction error {err}");
            let trace: f64 = r.eigenvalues.iter().sum();
            assert!((trace - m.trace().re).abs() <= 1e-9 * m.trace().re.abs().max(1.0));
        }
    }

    #[test]
    fn rejects_non_hermitian_and_non_square() {
        let mut m = ComplexMatrix::identity(3);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(hermitian_eigenvalues(&m), Err(Error::NotHermitian { .. })));
        let r = ComplexMatrix::zeros(2, 3);
        assert_eq!(hermitian_eigenvalues(&r), Err(Error::NotSquare { rows: 2, cols: 3 }));
    }

    #[test]
    fn gram_eigenvalues_non_negative() {
        let mut rng = stream(3, Namespace::Oracle, 1);
        for _ in 0..20 {
            let h = crate::linalg::complex_gaussian(6, 6, &mut rng);
            let eig = hermitian_eigenvalues(&h.outer_gram()).unwrap();
            assert!(eig[0] >= -1e-12);
        }
    }

    #[test]
    fn unitary_similarity_preserves_spectrum() {
        let mut rng = stream(5, Namespace::Oracle, 2);
        let m = random_hermitian(6, 11);
        let u = sample_haar_unitary(6, &mut rng).unwrap();
        let rotated = &(&u * &m) * &u.adjoint();
        let a = hermitian_eigenvalues(&m).unwrap();
        let b = hermitian_eigenvalues(&rotated.add(&rotated.adjoint()).scale_real(0.5)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}
