//! Complex linear-algebra helpers shared across the crate: Kronecker
//! products, column-stacking vectorization and Hermitian eigenvalue probes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            for p in 0..br {
                for q in 0..bc {
                    out[(i * br + p, j * bc + q)] = s * b[(p, q)];
                }
            }
        }
    }
    out
}

/// Column-stacking vectorization: vec(H) = [h_1; h_2; ...; h_N].
pub fn vec_cols(m: &CMat) -> CVec {
    let (r, c) = m.shape();
    CVec::from_fn(r * c, |i, _| m[(i % r, i / r)])
}

/// Inverse of [`vec_cols`].
pub fn unvec_cols(v: &CVec, rows: usize) -> CMat {
    assert_eq!(v.len() % rows, 0);
    let cols = v.len() / rows;
    CMat::from_fn(rows, cols, |i, j| v[j * rows + i])
}

/// Smallest eigenvalue of a Hermitian matrix (symmetrized before the solve).
pub fn hermitian_min_eig(m: &CMat) -> f64 {
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b))
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
/// Returns (eigenvalues, eigenvectors-as-columns).
pub fn hermitian_eigen_desc(m: &CMat) -> (Vec<f64>, CMat) {
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let vals: Vec<f64> = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let n = m.nrows();
    let vecs = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// Frobenius norm of a complex matrix.
pub fn fro_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Cholesky factorization of a Hermitian positive-definite matrix, returning
/// the lower factor with real positive diagonal, or `None` when a pivot is
/// non-positive. (nalgebra's complex `Cholesky` takes complex square roots of
/// negative pivots instead of failing, so it cannot be used as a PD test.)
pub fn hermitian_cholesky(m: &CMat) -> Option<CMat> {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return None;
        }
        let dj = d.sqrt();
        l[(j, j)] = C64::new(dj, 0.0);
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / dj;
        }
    }
    Some(l)
}

/// log det(A) from the lower Cholesky factor of A.
pub fn cholesky_logdet(l: &CMat) -> f64 {
    (0..l.nrows()).map(|i| l[(i, i)].re.ln()).sum::<f64>() * 2.0
}

/// A^{-1} from the lower Cholesky factor of A, via forward/back substitution.
pub fn cholesky_inverse(l: &CMat) -> CMat {
    let n = l.nrows();
    // forward-solve L X = I, then back-solve L^H A^{-1} = X
    let mut x = CMat::identity(n, n);
    for col in 0..n {
        for i in 0..n {
            let mut s = x[(i, col)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)].re;
        }
        for i in (0..n).rev() {
            let mut s = x[(i, col)];
            for k in (i + 1)..n {
                s -= l[(k, i)].conj() * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)].re;
        }
    }
    x
}

/// Real symmetric positive-definite Cholesky (lower factor), `None` when a
/// pivot is non-positive.
pub fn real_cholesky(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = m.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return None;
        }
        let dj = d.sqrt();
        l[(j, j)] = dj;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / dj;
        }
    }
    Some(l)
}

/// Solves A x = b given the lower Cholesky factor of A.
pub fn real_cholesky_solve(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[(i, k)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}
