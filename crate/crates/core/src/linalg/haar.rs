use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{ComplexMatrix, C64};
use crate::{Error, Result};

/// `rows × cols` matrix of i.i.d. standard circular complex Gaussians
/// (`E|z|² = 1`).
pub fn complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let scale = core::f64::consts::FRAC_1_SQRT_2;
    let data = (0..rows * cols)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re * scale, im * scale)
        })
        .collect();
    ComplexMatrix::from_row_major(rows, cols, data).expect("gaussian entries are finite")
}

/// Haar-distributed `n × n` unitary.
///
/// Householder QR of a complex Ginibre matrix; the columns of `Q` are then
/// rotated by the phases of `R`'s diagonal, which makes the law invariant
/// under left multiplication by any fixed unitary.
pub fn sample_haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::InvalidConfig("unitary dimension must be at least 1".into()));
    }
    let mut a = complex_gaussian(n, n, rng);
    let mut q = ComplexMatrix::identity(n);
    let mut r_diag = Vec::with_capacity(n);
    let mut v: Vec<C64> = Vec::with_capacity(n);

    for k in 0..n {
        let norm = (k..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        let x0 = a[(k, k)];
        let phase = if x0.norm() == 0.0 { C64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * norm;
        r_diag.push(alpha);

        v.clear();
        v.extend((k..n).map(|i| a[(i, k)]));
        v[0] -= alpha;
        let v_norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if v_norm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= v_norm;
        }
        // A ← (I − 2vv^H) A on rows k.., columns k..
        for j in k..n {
            let dot: C64 = v.iter().enumerate().map(|(t, vi)| vi.conj() * a[(k + t, j)]).sum();
            for (t, vi) in v.iter().enumerate() {
                a[(k + t, j)] -= vi * dot * 2.0;
            }
        }
        // Q ← Q (I − 2vv^H) on columns k..
        for i in 0..n {
            let dot: C64 = v.iter().enumerate().map(|(t, vi)| q[(i, k + t)] * vi).sum();
            for (t, vi) in v.iter().enumerate() {
                q[(i, k + t)] -= dot * vi.conj() * 2.0;
            }
        }
    }

    for (j, r) in r_diag.iter().enumerate() {
        let phase = if r.norm() == 0.0 { C64::new(1.0, 0.0) } else { r / r.norm() };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::{stream, Namespace};

    #[test]
    fn scalar_is_unit_modulus() {
        let mut rng = stream(1, Namespace::Oracle, 20);
        for _ in 0..10 {
            let u = sample_haar_unitary(1, &mut rng).unwrap();
            assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn draws_are_unitary() {
        let mut rng = stream(2, Namespace::Oracle, 21);
        for _ in 0..200 {
            let u = sample_haar_unitary(6, &mut rng).unwrap();
            assert!(u.unitarity_residual() <= 1e-12);
        }
        assert!(sample_haar_unitary(0, &mut rng).is_err());
    }
}
