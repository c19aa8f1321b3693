//! Dense linear-algebra helpers shared by the analysis modules.
//!
//! Dense non-symmetric eigendecompositions go through LAPACK (zgeev via
//! `ndarray-linalg`). Polynomial roots are computed as eigenvalues of the
//! companion matrix, which is robust for the degrees that occur here
//! (boundary characteristic polynomials of degree <= ~40).

use ndarray::{Array1, Array2, ArrayView2};
use ndarray_linalg::{Eig, EigVals};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Eigenvalues of a general complex matrix.
pub fn eigenvalues(m: &Array2<Complex64>) -> Result<Vec<Complex64>> {
    let vals: Array1<Complex64> =
        m.eigvals().map_err(|e| Error::Eigensolver(e.to_string()))?;
    Ok(vals.to_vec())
}

/// Eigenvalues and unit-normalized right eigenvectors (columns).
pub fn eigenpairs(m: &Array2<Complex64>) -> Result<(Vec<Complex64>, Array2<Complex64>)> {
    let (vals, mut vecs) = m.eig().map_err(|e| Error::Eigensolver(e.to_string()))?;
    for mut col in vecs.columns_mut() {
        let norm = col.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            col.mapv_inplace(|c| c / norm);
        }
    }
    Ok((vals.to_vec(), vecs))
}

/// Coefficients of `det(M - lambda I)` in ascending powers of `lambda`,
/// by cofactor expansion over the degree-one polynomial entries. No
/// divisions, so the result is exact up to multiply-add rounding;
/// intended for small matrices (q <= 4 in practice).
pub fn char_poly(m: &ArrayView2<Complex64>) -> Vec<Complex64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    // entry (i, j) as the polynomial M_ij - lambda * delta_ij
    let entries: Vec<Vec<Complex64>> = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            if i == j {
                vec![m[(i, j)], -ONE]
            } else {
                vec![m[(i, j)]]
            }
        })
        .collect();
    poly_det(&entries, n)
}

/// Determinant of a small matrix of ascending-coefficient polynomials by
/// cofactor expansion along the first row.
fn poly_det(mat: &[Vec<Complex64>], n: usize) -> Vec<Complex64> {
    if n == 1 {
        return mat[0].clone();
    }
    let mut det = vec![ZERO];
    for col in 0..n {
        let entry = &mat[col];
        if entry.iter().all(|c| *c == ZERO) {
            continue;
        }
        let minor: Vec<Vec<Complex64>> = (1..n)
            .flat_map(|r| (0..n).filter(|&c| c != col).map(move |c| mat[r * n + c].clone()))
            .collect();
        let cofactor = poly_mul(entry, &poly_det(&minor, n - 1));
        let sign = if col % 2 == 0 { ONE } else { -ONE };
        det = poly_add(&det, &cofactor, sign);
    }
    det
}

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![ZERO; a.len() + b.len() - 1];
    for (i, &ca) in a.iter().enumerate() {
        for (j, &cb) in b.iter().enumerate() {
            out[i + j] += ca * cb;
        }
    }
    out
}

fn poly_add(a: &[Complex64], b: &[Complex64], b_scale: Complex64) -> Vec<Complex64> {
    let mut out = vec![ZERO; a.len().max(b.len())];
    for (i, &c) in a.iter().enumerate() {
        out[i] += c;
    }
    for (i, &c) in b.iter().enumerate() {
        out[i] += b_scale * c;
    }
    out
}

/// Roots of a complex polynomial given by ascending coefficients, via the
/// companion matrix. Leading zero coefficients are stripped first.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
    if scale == 0.0 {
        return Err(Error::InvalidArgument("zero polynomial has no roots".into()));
    }
    let mut top = coeffs.len();
    while top > 0 && coeffs[top - 1].norm() <= 1e-14 * scale {
        top -= 1;
    }
    let deg = top.saturating_sub(1);
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[deg];
    let mut companion = Array2::<Complex64>::zeros((deg, deg));
    for row in 1..deg {
        companion[(row, row - 1)] = ONE;
    }
    for row in 0..deg {
        companion[(row, deg - 1)] = -coeffs[row] / lead;
    }
    eigenvalues(&companion)
}

/// Evaluate an ascending-coefficient polynomial by Horner's rule.
pub fn poly_eval(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
}

/// Determinant of a real matrix by partial-pivot LU.
pub fn det_real(m: &Array2<f64>) -> f64 {
    let n = m.nrows();
    let mut a = m.clone();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))
            .unwrap();
        if a[(pivot, col)] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for j in 0..n {
                a.swap((col, j), (pivot, j));
            }
            det = -det;
        }
        det *= a[(col, col)];
        for row in col + 1..n {
            let factor = a[(row, col)] / a[(col, col)];
            for j in col..n {
                let v = a[(col, j)];
                a[(row, j)] -= factor * v;
            }
        }
    }
    det
}

/// Trace of the inverse of a small complex matrix by Gaussian elimination
/// with partial pivoting; errors if the matrix is numerically singular.
pub fn trace_inverse(m: &Array2<Complex64>) -> Result<Complex64> {
    let n = m.nrows();
    let mut a = m.clone();
    let mut inv = Array2::<Complex64>::eye(n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[(i, col)].norm().total_cmp(&a[(j, col)].norm()))
            .unwrap();
        if a[(pivot, col)].norm() < 1e-300 {
            return Err(Error::Eigensolver("singular matrix in trace_inverse".into()));
        }
        if pivot != col {
            for j in 0..n {
                a.swap((col, j), (pivot, j));
                inv.swap((col, j), (pivot, j));
            }
        }
        let d = a[(col, col)];
        for j in 0..n {
            a[(col, j)] /= d;
            inv[(col, j)] /= d;
        }
        for row in 0..n {
            if row != col {
                let factor = a[(row, col)];
                if factor != ZERO {
                    for j in 0..n {
                        let av = a[(col, j)];
                        let iv = inv[(col, j)];
                        a[(row, j)] -= factor * av;
                        inv[(row, j)] -= factor * iv;
                    }
                }
            }
        }
    }
    Ok((0..n).map(|i| inv[(i, i)]).sum())
}
