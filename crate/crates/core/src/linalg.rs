//! Dense complex linear algebra on top of nalgebra: eigenpairs from the
//! complex Schur form, SVD null spaces, subspace angles, and LU solves with a
//! condition estimate.

use nalgebra::{DMatrix, DVector, Schur, SVD};
use num_complex::Complex64;
use thiserror::Error;

type C = Complex64;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("Schur decomposition did not converge")]
    EigenNoConvergence,
    #[error("matrix is singular")]
    Singular,
}

/// Eigenvalues and unit eigenvectors of a square matrix.
///
/// Eigenvectors come from back-substitution on the triangular Schur factor,
/// so a defective eigenvalue still yields one unit vector per diagonal entry.
pub fn eigenpairs(m: &DMatrix<C>) -> Result<Vec<(C, DVector<C>)>, LinalgError> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000).ok_or(LinalgError::EigenNoConvergence)?;
    let (q, t) = schur.unpack();
    // Floor keeps the regularised pivot squarable without underflow.
    let scale = t.norm().max(1e-100);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lambda = t[(i, i)];
        let mut y = DVector::<C>::zeros(n);
        y[i] = C::new(1.0, 0.0);
        for j in (0..i).rev() {
            let mut s = C::new(0.0, 0.0);
            for k in j + 1..=i {
                s += t[(j, k)] * y[k];
            }
            let mut d = t[(j, j)] - lambda;
            if d.norm() < f64::EPSILON * scale {
                d = C::new(f64::EPSILON * scale, 0.0);
            }
            y[j] = -s / d;
            if y[j].norm() > 1e150 {
                let f = 1.0 / y[j].norm();
                y.iter_mut().for_each(|v| *v *= f);
            }
        }
        let mut v = &q * y;
        let f = 1.0 / v.norm();
        v.iter_mut().for_each(|x| *x *= f);
        out.push((lambda, v));
    }
    Ok(out)
}

/// Orthonormal basis (as columns) of the `dim` right singular vectors of `m`
/// with the smallest singular values, together with the largest singular
/// value among them.
pub fn smallest_singular_subspace(m: &DMatrix<C>, dim: usize) -> (DMatrix<C>, f64) {
    let n = m.ncols();
    let svd = SVD::new(m.clone(), false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let dim = dim.min(order.len());
    let mut basis = DMatrix::<C>::zeros(n, dim);
    let mut worst: f64 = 0.0;
    for (c, &k) in order.iter().take(dim).enumerate() {
        worst = worst.max(svd.singular_values[k]);
        for r in 0..n {
            basis[(r, c)] = v_t[(k, r)].conj();
        }
    }
    (basis, worst)
}

pub fn spectral_norm(m: &DMatrix<C>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    SVD::new(m.clone(), false, false)
        .singular_values
        .iter()
        .fold(0.0, |a: f64, &s| a.max(s))
}

/// Sine of the largest principal angle between the column spans of two
/// matrices with orthonormal columns. `1.0` if the dimensions differ.
pub fn subspace_distance(a: &DMatrix<C>, b: &DMatrix<C>) -> f64 {
    if a.ncols() != b.ncols() || a.nrows() != b.nrows() {
        return 1.0;
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    let residual = b - a * (a.adjoint() * b);
    spectral_norm(&residual)
}

/// Modified Gram-Schmidt on the columns of `m`; columns that become
/// numerically dependent are dropped.
pub fn orthonormalize(m: &DMatrix<C>) -> DMatrix<C> {
    let mut cols: Vec<DVector<C>> = Vec::new();
    for j in 0..m.ncols() {
        let mut v = m.column(j).into_owned();
        let original = v.norm();
        for _ in 0..2 {
            for u in &cols {
                let p = u.dotc(&v);
                v -= u * p;
            }
        }
        let nv = v.norm();
        if nv > 1e-10 * original.max(f64::MIN_POSITIVE) {
            cols.push(v / C::new(nv, 0.0));
        }
    }
    if cols.is_empty() {
        DMatrix::zeros(m.nrows(), 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Solution of `a x = b` by partial-pivot LU.
pub fn solve(a: &DMatrix<C>, b: &DVector<C>) -> Result<DVector<C>, LinalgError> {
    if a.nrows() == 0 {
        return Ok(DVector::zeros(0));
    }
    a.clone().lu().solve(b).ok_or(LinalgError::Singular)
}

/// Solution of `a x = b` together with the 1-norm condition number of `a`.
pub fn solve_with_condition(a: &DMatrix<C>, b: &DVector<C>) -> Result<(DVector<C>, f64), LinalgError> {
    if a.nrows() == 0 {
        return Ok((DVector::zeros(0), 1.0));
    }
    let lu = a.clone().lu();
    let inv = lu.try_inverse().ok_or(LinalgError::Singular)?;
    let x = &inv * b;
    let cond = norm_1(a) * norm_1(&inv);
    if !cond.is_finite() {
        return Err(LinalgError::Singular);
    }
    Ok((x, cond))
}

fn norm_1(m: &DMatrix<C>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Groups eigenvalues lying within `tol` of the unit circle into clusters of
/// mutually close values (within `cluster_tol`). Returns the cluster means and
/// multiplicities, ordered by argument in `[0, 2 pi)`.
pub fn unit_circle_clusters(eigenvalues: &[C], tol: f64, cluster_tol: f64) -> Vec<(C, usize)> {
    let mut on_circle: Vec<C> = eigenvalues
        .iter()
        .copied()
        .filter(|l| (l.norm() - 1.0).abs() < tol)
        .collect();
    let arg = |l: &C| l.arg().rem_euclid(std::f64::consts::TAU);
    on_circle.sort_by(|a, b| arg(a).total_cmp(&arg(b)));
    let mut clusters: Vec<Vec<C>> = Vec::new();
    for l in on_circle {
        match clusters
            .iter_mut()
            .find(|c| c.iter().any(|m| (m - l).norm() < cluster_tol))
        {
            Some(c) => c.push(l),
            None => clusters.push(vec![l]),
        }
    }
    let mut out: Vec<(C, usize)> = clusters
        .into_iter()
        .map(|c| {
            let mean = c.iter().sum::<C>() / c.len() as f64;
            (mean / mean.norm(), c.len())
        })
        .collect();
    out.sort_by(|a, b| arg(&a.0).total_cmp(&arg(&b.0)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn eigenpairs_of_triangular_and_rotation() {
        let m = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let mut pairs = eigenpairs(&m).unwrap();
        pairs.sort_by(|a, b| a.0.im.total_cmp(&b.0.im));
        assert!((pairs[0].0 - c(0.0, -1.0)).norm() < 1e-14);
        assert!((pairs[1].0 - c(0.0, 1.0)).norm() < 1e-14);
        for (l, v) in &pairs {
            assert!((&m * v - v * *l).norm() < 1e-14);
        }
    }

    #[test]
    fn eigenpairs_random_matrix() {
        let n = 9;
        let m = DMatrix::from_fn(n, n, |i, j| {
            c(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64)
        });
        for (l, v) in eigenpairs(&m).unwrap() {
            assert!((&m * &v - &v * l).norm() < 1e-10);
            assert!((v.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn nilpotent_block_stays_finite() {
        let n = 40;
        let m = DMatrix::from_fn(n, n, |i, j| if j == i + 1 { c(1.0, 0.0) } else { c(0.0, 0.0) });
        for (l, v) in eigenpairs(&m).unwrap() {
            assert_eq!(l, c(0.0, 0.0));
            assert!(v.iter().all(|x| x.re.is_finite() && x.im.is_finite()));
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_matrix_has_unit_eigenvectors() {
        let m = DMatrix::<C>::zeros(3, 3);
        for (_, v) in eigenpairs(&m).unwrap() {
            assert!((v.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn null_space_of_rank_one() {
        let u = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0), c(1.0, 1.0)]);
        let m = &u * u.adjoint();
        let (basis, worst) = smallest_singular_subspace(&m, 2);
        assert!(worst < 1e-14);
        assert!((&m * &basis).norm() < 1e-14);
        assert!((basis.adjoint() * &basis - DMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn subspace_distance_detects_rotation() {
        let a = DMatrix::from_column_slice(2, 1, &[c(1.0, 0.0), c(0.0, 0.0)]);
        let b = DMatrix::from_column_slice(2, 1, &[c(0.0, 1.0), c(0.0, 0.0)]);
        assert!(subspace_distance(&a, &b) < 1e-15);
        let t = 1e-3f64;
        let r = DMatrix::from_column_slice(2, 1, &[c(t.cos(), 0.0), c(t.sin(), 0.0)]);
        assert!((subspace_distance(&a, &r) - t.sin()).abs() < 1e-15);
    }

    #[test]
    fn clusters_on_circle() {
        let eig = [c(1.0, 0.0), c(0.0, 1.0), c(0.0, 1.0 + 1e-12), c(0.5, 0.0), c(-1.0, 0.0)];
        let cl = unit_circle_clusters(&eig, 1e-8, 1e-6);
        assert_eq!(cl.len(), 3);
        assert_eq!(cl[1].1, 2);
    }

    #[test]
    fn solve_reports_condition() {
        let a = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1e-6, 0.0)]);
        let b = DVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let (x, cond) = solve_with_condition(&a, &b).unwrap();
        assert!((x[1] - c(1e6, 0.0)).norm() < 1e-6);
        assert!((cond - 1e6).abs() < 1e-3);
        let z = DMatrix::<C>::zeros(2, 2);
        assert_eq!(solve_with_condition(&z, &b), Err(LinalgError::Singular));
    }
}
