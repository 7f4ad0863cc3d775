//! Small dense complex-matrix helpers for the low-dimensional kernels.
//!
//! Matrices are row-major `&[Complex64]` slices of length dim², with dim in
//! the single digits; nothing here is meant for large systems.

use num_complex::Complex64;

/// Row-major matrix product of two dim×dim matrices.
pub fn matmul(dim: usize, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(a.len(), dim * dim);
    assert_eq!(b.len(), dim * dim);
    let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for k in 0..dim {
            let aik = a[i * dim + k];
            if aik == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..dim {
                out[i * dim + j] += aik * b[k * dim + j];
            }
        }
    }
    out
}

/// Conjugate transpose.
pub fn dagger(dim: usize, a: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            out[j * dim + i] = a[i * dim + j].conj();
        }
    }
    out
}

pub fn frobenius_norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations,
/// sorted ascending. The input is taken by value and destroyed.
pub fn hermitian_eigenvalues(dim: usize, mut a: Vec<Complex64>) -> Vec<f64> {
    assert_eq!(a.len(), dim * dim);
    let scale = frobenius_norm(&a).max(1e-300);
    let tol = 1e-15 * scale;

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..dim {
            for q in (p + 1)..dim {
                off += a[p * dim + q].norm_sqr();
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let apq = a[p * dim + q];
                let g = apq.norm();
                if g <= tol * 1e-2 {
                    continue;
                }
                let alpha = a[p * dim + p].re;
                let beta = a[q * dim + q].re;
                // Phase that makes the off-diagonal real, then a real
                // Jacobi rotation on the 2×2 block.
                let phase = apq / g;
                let theta = 0.5 * (2.0 * g).atan2(alpha - beta);
                let (s, c) = theta.sin_cos();
                let sp = phase * s; // s·e^{iφ}

                // Right-multiply by U: columns p, q.
                for k in 0..dim {
                    let akp = a[k * dim + p];
                    let akq = a[k * dim + q];
                    a[k * dim + p] = akp * c + akq * sp.conj();
                    a[k * dim + q] = -akp * sp + akq * c;
                }
                // Left-multiply by U†: rows p, q.
                for k in 0..dim {
                    let apk = a[p * dim + k];
                    let aqk = a[q * dim + k];
                    a[p * dim + k] = apk * c + aqk * sp;
                    a[q * dim + k] = -apk * sp.conj() + aqk * c;
                }
            }
        }
    }

    let mut eig: Vec<f64> = (0..dim).map(|i| a[i * dim + i].re).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_hermitian_eigenvalue(dim: usize, a: Vec<Complex64>) -> f64 {
    hermitian_eigenvalues(dim, a)[0]
}
