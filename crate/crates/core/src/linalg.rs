//! Dense eigensolvers for the small symmetric and Hermitian matrices of this
//! crate, both by cyclic Jacobi rotation.

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;
const OFF_TOL: f64 = 1e-14;

/// Eigenvalues ascending, eigenvectors stored as `vectors[k]` for `values[k]`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<Complex64>>,
}

/// Cyclic Jacobi on a row-major `n × n` real symmetric matrix.
pub fn symmetric_eigen(a: &[f64], n: usize) -> Result<SymmetricEigen> {
    check_square(a.len(), n)?;
    let mut a = a.to_vec();
    let mut v = identity::<f64>(n, 1.0, 0.0);
    let fro = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let thresh = OFF_TOL * fro;
    let mut converged = n < 2 || fro == 0.0;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let off = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= thresh {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-3 * thresh / n as f64 {
                    continue;
                }
                let (c, s) = rotation(a[p * n + p], a[q * n + q], apq);
                rotate_real(&mut a, &mut v, n, p, q, c, s);
            }
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            what: "Jacobi eigensolver",
            change: f64::NAN,
            tol: OFF_TOL,
        });
    }
    let values: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let vectors = (0..n)
        .map(|k| (0..n).map(|i| v[i * n + k]).collect())
        .collect();
    let (values, vectors) = sorted(values, vectors);
    Ok(SymmetricEigen { values, vectors })
}

/// Cyclic Jacobi on a row-major `n × n` Hermitian matrix. Each pivot is first
/// made real by a diagonal phase, then annihilated by a real rotation.
pub fn hermitian_eigen(a: &[Complex64], n: usize) -> Result<HermitianEigen> {
    check_square(a.len(), n)?;
    let mut a = a.to_vec();
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut v = identity(n, one, zero);
    let fro = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let thresh = OFF_TOL * fro;
    let mut converged = n < 2 || fro == 0.0;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let off = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= thresh {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let r = apq.norm();
                if r <= 1e-3 * thresh / n as f64 {
                    continue;
                }
                // A ← P†AP with P = diag(.., e^{-iφ} at q, ..) makes a_pq real
                let ph = apq.conj() / r;
                for k in 0..n {
                    a[k * n + q] *= ph;
                    v[k * n + q] *= ph;
                }
                for k in 0..n {
                    a[q * n + k] *= ph.conj();
                }
                a[q * n + q] = Complex64::new(a[q * n + q].re, 0.0);
                let (c, s) = rotation(a[p * n + p].re, a[q * n + q].re, r);
                rotate_complex(&mut a, &mut v, n, p, q, c, s);
            }
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            what: "Hermitian Jacobi eigensolver",
            change: f64::NAN,
            tol: OFF_TOL,
        });
    }
    let values: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    let vectors: Vec<Vec<Complex64>> = (0..n)
        .map(|k| (0..n).map(|i| v[i * n + k]).collect())
        .collect();
    let (values, vectors) = sorted(values, vectors);
    Ok(HermitianEigen { values, vectors })
}

fn sorted<T>(values: Vec<f64>, vectors: Vec<Vec<T>>) -> (Vec<f64>, Vec<Vec<T>>) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    // stable: degenerate pairs keep solver order
    idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut vecs: Vec<Option<Vec<T>>> = vectors.into_iter().map(Some).collect();
    (
        idx.iter().map(|&i| values[i]).collect(),
        idx.iter().map(|&i| vecs[i].take().unwrap()).collect(),
    )
}

/// Jacobi angle annihilating `a_pq` of a real 2×2 block.
fn rotation(app: f64, aqq: f64, apq: f64) -> (f64, f64) {
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    (c, t * c)
}

fn rotate_real(a: &mut [f64], v: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..n {
        let (akp, akq) = (a[k * n + p], a[k * n + q]);
        a[k * n + p] = c * akp - s * akq;
        a[k * n + q] = s * akp + c * akq;
    }
    for k in 0..n {
        let (apk, aqk) = (a[p * n + k], a[q * n + k]);
        a[p * n + k] = c * apk - s * aqk;
        a[q * n + k] = s * apk + c * aqk;
    }
    a[p * n + q] = 0.0;
    a[q * n + p] = 0.0;
    for k in 0..n {
        let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
        v[k * n + p] = c * vkp - s * vkq;
        v[k * n + q] = s * vkp + c * vkq;
    }
}

fn rotate_complex(
    a: &mut [Complex64],
    v: &mut [Complex64],
    n: usize,
    p: usize,
    q: usize,
    c: f64,
    s: f64,
) {
    for k in 0..n {
        let (akp, akq) = (a[k * n + p], a[k * n + q]);
        a[k * n + p] = akp * c - akq * s;
        a[k * n + q] = akp * s + akq * c;
    }
    for k in 0..n {
        let (apk, aqk) = (a[p * n + k], a[q * n + k]);
        a[p * n + k] = apk * c - aqk * s;
        a[q * n + k] = apk * s + aqk * c;
    }
    a[p * n + q] = Complex64::new(0.0, 0.0);
    a[q * n + p] = Complex64::new(0.0, 0.0);
    a[p * n + p].im = 0.0;
    a[q * n + q].im = 0.0;
    for k in 0..n {
        let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
        v[k * n + p] = vkp * c - vkq * s;
        v[k * n + q] = vkp * s + vkq * c;
    }
}

fn identity<T: Copy>(n: usize, one: T, zero: T) -> Vec<T> {
    let mut m = vec![zero; n * n];
    for i in 0..n {
        m[i * n + i] = one;
    }
    m
}

fn check_square(len: usize, n: usize) -> Result<()> {
    if len != n * n {
        return Err(Error::invalid(
            "matrix",
            format!("expected {n}x{n} entries, got {len}"),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn residual_real(a: &[f64], n: usize, e: &SymmetricEigen) -> f64 {
        let mut worst = 0.0f64;
        for (lam, x) in e.values.iter().zip(&e.vectors) {
            for i in 0..n {
                let ax: f64 = (0..n).map(|j| a[i * n + j] * x[j]).sum();
                worst = worst.max((ax - lam * x[i]).abs());
            }
        }
        worst
    }

    #[test]
    fn diagonal_and_two_by_two() {
        let e = symmetric_eigen(&[3.0, 0.0, 0.0, -1.0], 2).unwrap();
        assert_eq!(e.values, vec![-1.0, 3.0]);
        let e = symmetric_eigen(&[2.0, 1.0, 1.0, 2.0], 2).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-15 && (e.values[1] - 3.0).abs() < 1e-15);
        let h = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 2.0),
            Complex64::new(0.0, -2.0),
            Complex64::new(1.0, 0.0),
        ];
        let e = hermitian_eigen(&h, 2).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15 && (e.values[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_wrong_shape() {
        assert!(symmetric_eigen(&[1.0, 2.0, 3.0], 2).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_matches_nalgebra(entries in prop::collection::vec(-5.0f64..5.0, 36)) {
            let n = 6;
            let mut a = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..=i {
                    a[i * n + j] = entries[i * n + j];
                    a[j * n + i] = entries[i * n + j];
                }
            }
            let e = symmetric_eigen(&a, n).unwrap();
            let m = nalgebra::DMatrix::from_row_slice(n, n, &a);
            let mut oracle: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
            oracle.sort_by(f64::total_cmp);
            let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
            for (x, y) in e.values.iter().zip(&oracle) {
                prop_assert!((x - y).abs() < 1e-12 * scale);
            }
            prop_assert!(residual_real(&a, n, &e) < 1e-12 * scale);
            for i in 0..n {
                for j in 0..n {
                    let dot: f64 = (0..n).map(|k| e.vectors[i][k] * e.vectors[j][k]).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((dot - want).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn hermitian_matches_nalgebra(re in prop::collection::vec(-3.0f64..3.0, 25),
                                      im in prop::collection::vec(-3.0f64..3.0, 25)) {
            let n = 5;
            let mut a = vec![Complex64::new(0.0, 0.0); n * n];
            for i in 0..n {
                for j in 0..i {
                    let z = Complex64::new(re[i * n + j], im[i * n + j]);
                    a[i * n + j] = z;
                    a[j * n + i] = z.conj();
                }
                a[i * n + i] = Complex64::new(re[i * n + i], 0.0);
            }
            let e = hermitian_eigen(&a, n).unwrap();
            let m = nalgebra::DMatrix::from_row_slice(n, n, &a);
            let mut oracle: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
            oracle.sort_by(f64::total_cmp);
            for (x, y) in e.values.iter().zip(&oracle) {
                prop_assert!((x - y).abs() < 1e-11);
            }
            for (lam, x) in e.values.iter().zip(&e.vectors) {
                for i in 0..n {
                    let ax: Complex64 = (0..n).map(|j| a[i * n + j] * x[j]).sum();
                    prop_assert!((ax - x[i] * *lam).norm() < 1e-11);
                }
            }
        }
    }
}
