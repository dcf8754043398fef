//! Dense helpers on column-major `nalgebra` matrices.

use nalgebra::{DMatrix, DVector};

/// `c = alpha * op(a) * op(b) + beta * c` where `op` optionally transposes.
///
/// Single-threaded and deterministic.
pub fn gemm(
    alpha: f64,
    a: &DMatrix<f64>,
    trans_a: bool,
    b: &DMatrix<f64>,
    trans_b: bool,
    beta: f64,
    c: &mut DMatrix<f64>,
) {
    let (m, k) = if trans_a {
        (a.ncols(), a.nrows())
    } else {
        (a.nrows(), a.ncols())
    };
    let (kb, n) = if trans_b {
        (b.ncols(), b.nrows())
    } else {
        (b.nrows(), b.ncols())
    };
    assert_eq!(k, kb, "gemm inner dimension");
    assert_eq!((c.nrows(), c.ncols()), (m, n), "gemm output shape");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.scale_mut(beta);
        return;
    }
    let (rsa, csa) = if trans_a {
        (a.nrows() as isize, 1)
    } else {
        (1, a.nrows() as isize)
    };
    let (rsb, csb) = if trans_b {
        (b.nrows() as isize, 1)
    } else {
        (1, b.nrows() as isize)
    };
    let rsc = 1;
    let csc = c.nrows() as isize;
    // SAFETY: strides describe the column-major storage of each matrix and the
    // asserted shapes keep every access in bounds.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            rsc,
            csc,
        );
    }
}

pub fn matmul(a: &DMatrix<f64>, trans_a: bool, b: &DMatrix<f64>, trans_b: bool) -> DMatrix<f64> {
    let m = if trans_a { a.ncols() } else { a.nrows() };
    let n = if trans_b { b.nrows() } else { b.ncols() };
    let mut c = DMatrix::zeros(m, n);
    gemm(1.0, a, trans_a, b, trans_b, 0.0, &mut c);
    c
}

pub fn frob2(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum()
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Orthonormal basis for the column span of `m`, by modified Gram–Schmidt
/// with one re-orthogonalization pass.
///
/// Columns are processed left to right; a column whose residual norm falls
/// below `rel_tol` times its original norm (or is exactly zero) is dropped,
/// so the result has `rank(m)` columns.
pub fn orthonormal_columns(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let rows = m.nrows();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for j in 0..m.ncols() {
        let mut v: DVector<f64> = m.column(j).into_owned();
        let original = v.norm();
        if original == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dot(&v);
                v.axpy(-proj, q, 1.0);
            }
        }
        let norm = v.norm();
        if norm > rel_tol * original {
            basis.push(v / norm);
        }
    }
    let mut out = DMatrix::zeros(rows, basis.len());
    for (j, q) in basis.iter().enumerate() {
        out.set_column(j, q);
    }
    out
}

/// Largest `|QᵀQ − I|` entry.
pub fn orthonormality_error(q: &DMatrix<f64>) -> f64 {
    let gram = matmul(q, true, q, false);
    let k = gram.nrows();
    max_abs_diff(&gram, &DMatrix::identity(k, k))
}

/// Least-squares solution of `a x = b` via SVD, discarding singular values
/// below `cutoff`. Returns the solution and the retained rank.
pub fn lstsq(a: &DMatrix<f64>, b: &DMatrix<f64>, cutoff: f64) -> (DMatrix<f64>, usize) {
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd u");
    let vt = svd.v_t.as_ref().expect("svd v_t");
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let utb = matmul(u, true, b, false);
    let mut scaled = DMatrix::zeros(vt.nrows(), b.ncols());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            for j in 0..b.ncols() {
                scaled[(i, j)] = utb[(i, j)] / s;
            }
        }
    }
    (matmul(vt, true, &scaled, false), rank)
}

/// Cosine similarity of two equal-length slices; `None` if either is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        None
    } else {
        Some(ab / (aa.sqrt() * bb.sqrt()))
    }
}
