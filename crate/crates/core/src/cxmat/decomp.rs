//! Factorizations built on a one-sided (Hestenes) Jacobi sweep.
//!
//! The sweep right-multiplies a working copy of `A` by 2x2 unitary
//! rotations until its columns are mutually orthogonal, so `A V = W` with
//! `V` unitary and `W` having orthogonal columns whose norms are the
//! singular values. Keeping the full `V` gives the kernel directly, which
//! is what nullspace and the smallest-eigenvector routines need.

use super::{ComplexMatrix, C64};
use crate::error::{invalid, Error, Result};

/// Relative rank tolerance for generic channels ("with probability one").
pub const DEFAULT_REL_TOL: f64 = 1e-8;

const MAX_SWEEPS: usize = 100;

/// Thin SVD, `A = U diag(s) V†` with `p = min(rows, cols)` columns in `U` and `V`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: ComplexMatrix,
    /// Nonnegative, descending.
    pub s: Vec<f64>,
    pub v: ComplexMatrix,
}

#[derive(Clone, Debug)]
pub struct Qr {
    /// Orthonormal columns, same shape as the input.
    pub q: ComplexMatrix,
    /// Upper triangular with a real nonnegative diagonal.
    pub r: ComplexMatrix,
}

fn norm_sqr(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Returns the columns of `A V` and of `V`.
fn jacobi_columns(a: &ComplexMatrix) -> Result<(Vec<Vec<C64>>, Vec<Vec<C64>>)> {
    if !a.is_finite() {
        return Err(Error::NumericalFailure("non-finite matrix entry".into()));
    }
    let (m, n) = a.shape();
    let mut w = a.columns();
    let mut v = ComplexMatrix::identity(n).columns();
    let fro = a.frobenius_norm();
    if fro == 0.0 || n < 2 {
        return Ok((w, v));
    }
    let zero_floor = (f64::EPSILON * fro).powi(2);
    let tol = f64::EPSILON * m.max(4) as f64;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for j in 0..n - 1 {
            for k in j + 1..n {
                let alpha = norm_sqr(&w[j]);
                let beta = norm_sqr(&w[k]);
                if alpha <= zero_floor || beta <= zero_floor {
                    continue;
                }
                let gamma = inner(&w[j], &w[k]);
                let g = gamma.norm();
                if g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, j, k, c, s, phase);
                rotate(&mut v, j, k, c, s, phase);
            }
        }
        if !rotated {
            return Ok((w, v));
        }
    }
    Err(Error::NumericalFailure(format!(
        "Jacobi SVD did not converge within {MAX_SWEEPS} sweeps"
    )))
}

// [x_j x_k] <- [x_j x_k] [[c, s e^{iφ}], [-s e^{-iφ}, c]]
fn rotate(cols: &mut [Vec<C64>], j: usize, k: usize, c: f64, s: f64, phase: C64) {
    let (left, right) = cols.split_at_mut(k);
    let (xj, xk) = (&mut left[j], &mut right[0]);
    let pc = phase.conj();
    for (a, b) in xj.iter_mut().zip(xk.iter_mut()) {
        let (p, q) = (*a, *b);
        *a = p * c - pc * q * s;
        *b = phase * p * s + q * c;
    }
}

fn descending_order(norms: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..norms.len()).collect();
    idx.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    idx
}

/// Extends a set of orthonormal vectors in C^m with standard basis
/// directions until it has `target` members.
fn complete_orthonormal(mut basis: Vec<Vec<C64>>, m: usize, target: usize) -> Vec<Vec<C64>> {
    while basis.len() < target {
        let mut best: Option<(f64, Vec<C64>)> = None;
        for e in 0..m {
            let mut x = vec![C64::new(0.0, 0.0); m];
            x[e] = C64::new(1.0, 0.0);
            // two Gram–Schmidt passes
            for _ in 0..2 {
                for b in &basis {
                    let p = inner(b, &x);
                    for (xi, bi) in x.iter_mut().zip(b) {
                        *xi -= p * bi;
                    }
                }
            }
            let nrm = norm_sqr(&x).sqrt();
            if best.as_ref().map_or(true, |(bn, _)| nrm > *bn) {
                best = Some((nrm, x));
            }
        }
        let (nrm, x) = best.expect("m > basis.len()");
        basis.push(x.into_iter().map(|z| z / nrm).collect());
    }
    basis
}

pub fn svd(a: &ComplexMatrix) -> Result<Svd> {
    let (m, n) = a.shape();
    if m < n {
        let t = svd(&a.adjoint())?;
        return Ok(Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        });
    }
    let (w, v) = jacobi_columns(a)?;
    let norms: Vec<f64> = w.iter().map(|c| norm_sqr(c).sqrt()).collect();
    let order = descending_order(&norms);
    let smax = order.first().map_or(0.0, |&i| norms[i]);
    let floor = smax * f64::EPSILON * m.max(1) as f64;

    let mut s = Vec::with_capacity(n);
    let mut u_cols = Vec::with_capacity(n);
    for &i in &order {
        s.push(norms[i]);
        if norms[i] > floor && norms[i] > 0.0 {
            u_cols.push(w[i].iter().map(|z| z / norms[i]).collect());
        }
    }
    let u_cols = complete_orthonormal(u_cols, m, n);
    let v_cols: Vec<Vec<C64>> = order.iter().map(|&i| v[i].clone()).collect();
    Ok(Svd {
        u: ComplexMatrix::from_columns(m, &u_cols)?,
        s,
        v: ComplexMatrix::from_columns(n, &v_cols)?,
    })
}

/// All `cols(A)` singular values (descending, zeros included) together with
/// a full unitary basis of right singular vectors.
pub fn right_singular_basis(a: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let (w, v) = jacobi_columns(a)?;
    let norms: Vec<f64> = w.iter().map(|c| norm_sqr(c).sqrt()).collect();
    let order = descending_order(&norms);
    let s = order.iter().map(|&i| norms[i]).collect();
    let v_cols: Vec<Vec<C64>> = order.iter().map(|&i| v[i].clone()).collect();
    Ok((s, ComplexMatrix::from_columns(a.cols(), &v_cols)?))
}

fn check_tol(rel_tol: f64) -> Result<()> {
    if rel_tol > 0.0 && rel_tol.is_finite() {
        Ok(())
    } else {
        invalid(format!("relative tolerance must be positive, got {rel_tol}"))
    }
}

fn numerical_rank(s: &[f64], rel_tol: f64) -> usize {
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rel_tol * smax).count()
}

/// Number of singular values above `rel_tol` times the largest one.
pub fn rank(a: &ComplexMatrix, rel_tol: f64) -> Result<usize> {
    check_tol(rel_tol)?;
    let (s, _) = right_singular_basis(a)?;
    Ok(numerical_rank(&s, rel_tol))
}

/// Orthonormal basis of `{x : A x = 0}` as the columns of the result;
/// a matrix with zero columns when the kernel is trivial.
pub fn nullspace(a: &ComplexMatrix, rel_tol: f64) -> Result<ComplexMatrix> {
    check_tol(rel_tol)?;
    let (s, v) = right_singular_basis(a)?;
    let r = numerical_rank(&s, rel_tol);
    let idx: Vec<usize> = (r..a.cols()).collect();
    Ok(v.select_columns(&idx))
}

/// Eigenvectors for the `d` smallest eigenvalues of `B B†`, found from the
/// right singular vectors of `B†` (no explicit covariance is formed).
/// Eigenvalues are returned ascending.
pub fn least_dominant_subspace(
    factor: &ComplexMatrix,
    d: usize,
) -> Result<(ComplexMatrix, Vec<f64>)> {
    let n = factor.rows();
    if d > n {
        return invalid(format!("requested {d} eigenvectors of a {n}x{n} matrix"));
    }
    let (s, v) = right_singular_basis(&factor.adjoint())?;
    let idx: Vec<usize> = (0..d).map(|k| n - 1 - k).collect();
    let vals = idx.iter().map(|&i| s[i] * s[i]).collect();
    Ok((v.select_columns(&idx), vals))
}

/// Householder QR with a thin `Q`; requires `rows >= cols`.
pub fn qr(a: &ComplexMatrix) -> Result<Qr> {
    let (m, n) = a.shape();
    if m < n {
        return invalid(format!("qr needs rows >= cols, got {m}x{n}"));
    }
    let mut r = a.clone();
    let mut reflectors: Vec<Option<Vec<C64>>> = Vec::with_capacity(n);
    for k in 0..n {
        let x: Vec<C64> = (k..m).map(|i| r[(i, k)]).collect();
        let xnorm = norm_sqr(&x).sqrt();
        if xnorm == 0.0 {
            reflectors.push(None);
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { C64::new(1.0, 0.0) };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm = norm_sqr(&v).sqrt();
        if vnorm == 0.0 {
            reflectors.push(None);
            continue;
        }
        v.iter_mut().for_each(|z| *z /= vnorm);
        apply_reflector(&mut r, &v, k, k);
        r[(k, k)] = alpha;
        for i in k + 1..m {
            r[(i, k)] = C64::new(0.0, 0.0);
        }
        reflectors.push(Some(v));
    }

    let mut q = ComplexMatrix::zeros(m, n);
    for i in 0..n {
        q[(i, i)] = C64::new(1.0, 0.0);
    }
    for (k, v) in reflectors.iter().enumerate().rev() {
        if let Some(v) = v {
            apply_reflector(&mut q, v, k, 0);
        }
    }

    let mut r_up = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            r_up[(i, j)] = r[(i, j)];
        }
    }
    for k in 0..n {
        let d = r_up[(k, k)];
        if d.norm() > 0.0 {
            let ph = d / d.norm();
            for j in k..n {
                r_up[(k, j)] *= ph.conj();
            }
            r_up[(k, k)] = C64::new(d.norm(), 0.0);
            for i in 0..m {
                q[(i, k)] *= ph;
            }
        }
    }
    Ok(Qr { q, r: r_up })
}

// rows k.., columns from `col0`: M <- (I - 2 v v†) M
fn apply_reflector(mat: &mut ComplexMatrix, v: &[C64], k: usize, col0: usize) {
    for j in col0..mat.cols() {
        let dot: C64 = v
            .iter()
            .enumerate()
            .map(|(i, vi)| vi.conj() * mat[(k + i, j)])
            .sum();
        for (i, vi) in v.iter().enumerate() {
            mat[(k + i, j)] -= vi * dot * 2.0;
        }
    }
}

/// Natural log of the determinant of a Hermitian positive definite matrix,
/// via Cholesky.
pub fn logdet_hpd(a: &ComplexMatrix) -> Result<f64> {
    let (n, m) = a.shape();
    if n != m {
        return invalid(format!("logdet needs a square matrix, got {n}x{m}"));
    }
    if !a.is_finite() {
        return invalid("logdet of a matrix with non-finite entries");
    }
    let scale = a.max_abs().max(1.0);
    for i in 0..n {
        for j in 0..=i {
            if (a[(i, j)] - a[(j, i)].conj()).norm() > 1e-10 * scale {
                return invalid(format!("matrix is not Hermitian at ({i}, {j})"));
            }
        }
    }
    let mut l = ComplexMatrix::zeros(n, n);
    let mut logdet = 0.0;
    for j in 0..n {
        let mut pivot = a[(j, j)].re;
        for k in 0..j {
            pivot -= l[(j, k)].norm_sqr();
        }
        if !(pivot > 0.0) {
            return invalid(format!("matrix is not positive definite (pivot {j} = {pivot:e})"));
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = C64::new(ljj, 0.0);
        logdet += 2.0 * ljj.ln();
        for i in j + 1..n {
            let mut acc = a[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = acc / ljj;
        }
    }
    Ok(logdet)
}
