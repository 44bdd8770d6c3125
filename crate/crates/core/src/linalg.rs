//! Dense complex linear-algebra helpers shared by every module.
//!
//! Composite systems use the product basis `|a⟩⊗|b⟩` with the second
//! factor's index running fastest, which is exactly what
//! [`nalgebra::Matrix::kronecker`] produces.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;
pub type RMat = DMatrix<f64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative tolerance used when deciding whether a matrix is Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-9;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// `[𝟙, X, Y, Z]`
pub fn paulis() -> [CMat; 4] {
    [
        identity(2),
        CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    ]
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// `|v⟩⟨v|`
pub fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}

pub fn basis_vector(dim: usize, index: usize) -> CVec {
    let mut v = CVec::zeros(dim);
    v[index] = ONE;
    v
}

pub fn hermitian_defect(m: &CMat) -> f64 {
    (m - m.adjoint()).norm()
}

pub fn is_hermitian(m: &CMat) -> bool {
    m.is_square() && hermitian_defect(m) <= HERMITIAN_TOL * m.norm().max(1.0)
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5, 0.0)
}

pub fn trace_re(m: &CMat) -> f64 {
    m.trace().re
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues come back ascending, eigenvectors as the matching columns.
pub fn eig_hermitian(h: &CMat) -> Result<(Vec<f64>, CMat)> {
    if !h.is_square() {
        return Err(Error::NotSquare { rows: h.nrows(), cols: h.ncols() });
    }
    if !is_hermitian(h) {
        return Err(Error::NotHermitian { defect: hermitian_defect(h) });
    }
    Ok(eigh(h))
}

/// Unchecked variant of [`eig_hermitian`]; the anti-Hermitian part is dropped.
pub(crate) fn eigh(h: &CMat) -> (Vec<f64>, CMat) {
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = hermitian_part(h).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Eigenvalues only, ascending. Closed form for 1x1 and 2x2.
pub(crate) fn eigvalsh(h: &CMat) -> Vec<f64> {
    match h.nrows() {
        0 => Vec::new(),
        1 => vec![h[(0, 0)].re],
        2 => {
            let a = h[(0, 0)].re;
            let d = h[(1, 1)].re;
            let off = 0.5 * (h[(0, 1)] + h[(1, 0)].conj());
            let mean = 0.5 * (a + d);
            let radius = (0.25 * (a - d) * (a - d) + off.norm_sqr()).sqrt();
            vec![mean - radius, mean + radius]
        }
        _ => {
            let mut v: Vec<f64> = hermitian_part(h).symmetric_eigenvalues().iter().copied().collect();
            v.sort_by(f64::total_cmp);
            v
        }
    }
}

pub(crate) fn min_eigenvalue(h: &CMat) -> f64 {
    eigvalsh(h).first().copied().unwrap_or(0.0)
}

/// `f(H)` for Hermitian `H` through its spectral decomposition.
pub(crate) fn hermitian_map(h: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (values, vectors) = eigh(h);
    let diag = CMat::from_diagonal(&CVec::from_iterator(values.len(), values.iter().map(|&x| c(f(x), 0.0))));
    &vectors * diag * vectors.adjoint()
}

/// Orthonormality defect `‖V†V − 𝟙‖_F` of the columns of `v`.
pub fn orthonormality_defect(v: &CMat) -> f64 {
    (v.adjoint() * v - identity(v.ncols())).norm()
}

/// Orthonormal basis of the range of a projector (eigenvectors with eigenvalue near 1).
pub(crate) fn projector_range(p: &CMat) -> CMat {
    let (values, vectors) = eigh(p);
    let cols: Vec<usize> = (0..values.len()).filter(|&i| values[i] > 0.5).collect();
    let mut out = CMat::zeros(p.nrows(), cols.len());
    for (k, &i) in cols.iter().enumerate() {
        out.set_column(k, &vectors.column(i));
    }
    out
}

/// Fix the global phase of a vector so its largest-magnitude component is real positive.
pub(crate) fn canonical_phase(v: &CVec) -> CVec {
    let mut best = 0;
    for i in 0..v.len() {
        if v[i].norm() > v[best].norm() + 1e-9 {
            best = i;
        }
    }
    let pivot = v[best];
    if pivot.norm() == 0.0 {
        return v.clone();
    }
    v * (pivot.conj() / pivot.norm())
}

/// Non-negative least squares `min ‖Ax − b‖₂, x ≥ 0` (Lawson–Hanson active set).
pub fn nnls(a: &RMat, b: &[f64]) -> (Vec<f64>, f64) {
    let (m, n) = a.shape();
    assert_eq!(m, b.len(), "nnls: row count mismatch");
    let b = DVector::from_column_slice(b);
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-13 * a.norm().max(1.0) * b.norm().max(1.0);

    for _outer in 0..(3 * n + 10) {
        let w = a.transpose() * (&b - a * &x);
        let candidate = (0..n).filter(|&j| !passive[j] && w[j] > tol).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        passive[j] = true;

        for _inner in 0..(3 * n + 10) {
            let cols: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let sub = RMat::from_fn(m, cols.len(), |r, k| a[(r, cols[k])]);
            let Ok(z_sub) = sub.clone().svd(true, true).solve(&b, 1e-14) else { break };
            let mut z = DVector::<f64>::zeros(n);
            for (k, &col) in cols.iter().enumerate() {
                z[col] = z_sub[k];
            }
            if cols.iter().all(|&k| z[k] > 0.0) {
                x = z;
                break;
            }
            let mut alpha = f64::INFINITY;
            for &k in &cols {
                if z[k] <= 0.0 {
                    alpha = alpha.min(x[k] / (x[k] - z[k]));
                }
            }
            x = &x + (z - &x) * alpha;
            for &k in &cols {
                if x[k] <= 1e-15 {
                    passive[k] = false;
                    x[k] = 0.0;
                }
            }
        }
    }
    let residual = (a * &x - b).norm();
    (x.iter().copied().collect(), residual)
}
