//! Dense complex linear algebra helpers shared by the pipelines.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Pauli matrices σ1, σ2, σ3.
pub fn pauli(which: usize) -> CMat {
    match which {
        1 => CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        2 => CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        3 => CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        _ => panic!("no Pauli matrix σ{which}"),
    }
}

/// Matrix unit E_ij (zero-based indices).
pub fn unit(n: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    m[(i, j)] = ONE;
    m
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest entrywise modulus of `a - a†`.
pub fn hermitian_deviation(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Replace `a` by (a + a†)/2.
pub fn symmetrize(a: &mut CMat) {
    let n = a.nrows();
    for i in 0..n {
        a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let v = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = v;
            a[(j, i)] = v.conj();
        }
    }
}

/// Spectral norm upper bound: max absolute row sum.
pub fn inf_norm(a: &CMat) -> f64 {
    (0..a.nrows())
        .map(|i| a.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest singular value.
pub fn spectral_norm(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().max()
}

fn to_faer(a: &CMat) -> faer::Mat<Complex64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Full eigendecomposition of a Hermitian matrix, eigenvalues ascending and
/// eigenvectors as the matching columns. Only the lower triangle is read.
pub fn eigh(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), CMat::zeros(0, 0)));
    }
    let evd = to_faer(a)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?} (n = {n})")))?;
    let s = evd.S().column_vector();
    let values: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigensolver(format!(
            "non-finite eigenvalue (n = {n})"
        )));
    }
    let u = evd.U();
    Ok((values, CMat::from_fn(n, n, |i, j| u[(i, j)])))
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(a: &CMat) -> Result<Vec<f64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut v = to_faer(a)
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?} (n = {n})")))?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Eigensolver(format!(
            "non-finite eigenvalue (n = {n})"
        )));
    }
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// In-place modified Gram-Schmidt with one reorthogonalisation pass.
/// Returns the number of columns whose norm collapsed below `1e-12` of their
/// original size; those columns are left zeroed.
pub fn orthonormalize(q: &mut CMat) -> usize {
    let (n, p) = q.shape();
    let mut collapsed = 0;
    for j in 0..p {
        let norm0 = q.column(j).norm();
        for _pass in 0..2 {
            for k in 0..j {
                let proj: Complex64 = (0..n).map(|i| q[(i, k)].conj() * q[(i, j)]).sum();
                for i in 0..n {
                    let v = q[(i, k)];
                    q[(i, j)] -= proj * v;
                }
            }
        }
        let norm = q.column(j).norm();
        if norm <= 1e-12 * norm0.max(f64::MIN_POSITIVE) || norm == 0.0 {
            q.column_mut(j).fill(ZERO);
            collapsed += 1;
        } else {
            q.column_mut(j).scale_mut(1.0 / norm);
        }
    }
    collapsed
}

/// Groups consecutive (sorted) eigenvalues closer than `tol` into clusters.
pub fn clusters(values: &[f64], tol: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > tol {
            if i > start {
                out.push(start..i);
            }
            start = i;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_algebra() {
        let s1 = pauli(1);
        let s2 = pauli(2);
        let s3 = pauli(3);
        let prod = &s1 * &s2;
        assert!(max_abs_diff(&prod, &(s3.clone() * I)) < 1e-15);
        let anti = &s1 * &s3 + &s3 * &s1;
        assert!(anti.norm() < 1e-15);
    }

    #[test]
    fn eigh_sorts_ascending() {
        let m = CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let (vals, vecs) = eigh(&m).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
        let back = &vecs
            * CMat::from_diagonal(&nalgebra::DVector::from_iterator(
                2,
                vals.iter().map(|&v| c(v, 0.0)),
            ))
            * vecs.adjoint();
        assert!(max_abs_diff(&back, &m) < 1e-14);
    }

    #[test]
    fn cluster_grouping() {
        let v = [-1.0, -1.0 + 1e-12, 0.0, 0.5, 0.5 + 1e-10, 0.5 + 2e-10];
        let cl = clusters(&v, 1e-9);
        assert_eq!(cl, vec![0..2, 2..3, 3..6]);
    }

    #[test]
    fn gram_schmidt_detects_dependence() {
        let mut q = CMat::from_row_slice(3, 2, &[ONE, ONE, ZERO, ZERO, ZERO, ZERO]);
        assert_eq!(orthonormalize(&mut q), 1);
    }
}
