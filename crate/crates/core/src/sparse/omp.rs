use super::{Dictionary, SparseCode, SparseError};
use crate::scalar::{dot, norm, Real};

/// Stop after `max_atoms` atoms or once the residual norm is at most `residual_tol`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OmpStop<T> {
    pub max_atoms: usize,
    pub residual_tol: T,
}

impl<T: Real> OmpStop<T> {
    pub fn sparsity(max_atoms: usize) -> Self {
        Self { max_atoms, residual_tol: T::zero() }
    }
}

/// Orthogonal matching pursuit; ties go to the lowest atom index.
pub fn omp<T: Real>(x: &[T], dict: &Dictionary<T>, stop: OmpStop<T>) -> Result<SparseCode<T>, SparseError> {
    omp_traced(x, dict, stop).map(|(code, _)| code)
}

/// [`omp`] plus the residual norm before the first and after every selection.
pub fn omp_traced<T: Real>(
    x: &[T],
    dict: &Dictionary<T>,
    stop: OmpStop<T>,
) -> Result<(SparseCode<T>, Vec<T>), SparseError> {
    let (n, m) = (dict.n(), dict.m());
    if x.len() != n {
        return Err(SparseError::DimensionMismatch(format!("signal length {} vs atom length {n}", x.len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(SparseError::NonFiniteInput);
    }
    let max_atoms = stop.max_atoms.min(n).min(m);
    let projections: Vec<T> = (0..m).map(|j| dot(dict.atom(j), x)).collect();
    let mut correlations = projections.clone();
    let mut residual = x.to_vec();
    let mut rnorm = norm(x);
    let mut trace = vec![rnorm];

    let mut support: Vec<usize> = Vec::with_capacity(max_atoms);
    let mut selected = vec![false; m];
    // lower-triangular Cholesky factor of the support Gram, row-major k×k
    let mut chol: Vec<T> = Vec::with_capacity(max_atoms * max_atoms);
    let mut coefficients: Vec<T> = Vec::new();
    let negligible = T::epsilon() * T::lit(16.0) * (rnorm + T::min_positive_value());

    while support.len() < max_atoms && rnorm > stop.residual_tol {
        let mut best: Option<(usize, T)> = None;
        for (j, &c) in correlations.iter().enumerate() {
            if !selected[j] && best.is_none_or(|(_, b)| c.abs() > b) {
                best = Some((j, c.abs()));
            }
        }
        let Some((j, peak)) = best else { break };
        if peak <= negligible {
            break;
        }

        let k = support.len();
        let mut w = vec![T::zero(); k];
        for r in 0..k {
            let mut acc = dict.gram(support[r], j);
            for c in 0..r {
                acc -= chol[r * k + c] * w[c];
            }
            w[r] = acc / chol[r * k + r];
        }
        let diag_sq = T::one() - dot(&w, &w);
        if diag_sq <= T::lit(1e-10).max(T::epsilon() * T::lit(1e3)) {
            break;
        }
        chol = grow_factor(&chol, k, &w, diag_sq.sqrt());
        support.push(j);
        selected[j] = true;

        let rhs: Vec<T> = support.iter().map(|&s| projections[s]).collect();
        coefficients = cholesky_solve(&chol, k + 1, &rhs);

        residual.copy_from_slice(x);
        for (&s, &a) in support.iter().zip(&coefficients) {
            for (r, &d) in residual.iter_mut().zip(dict.atom(s)) {
                *r -= a * d;
            }
        }
        rnorm = norm(&residual);
        trace.push(rnorm);
        for (jj, c) in correlations.iter_mut().enumerate() {
            let mut acc = projections[jj];
            for (&s, &a) in support.iter().zip(&coefficients) {
                acc -= dict.gram(jj, s) * a;
            }
            *c = acc;
        }
    }
    Ok((SparseCode { support, coefficients }, trace))
}

fn grow_factor<T: Real>(old: &[T], k: usize, row: &[T], diag: T) -> Vec<T> {
    let size = k + 1;
    let mut out = vec![T::zero(); size * size];
    for r in 0..k {
        out[r * size..r * size + r + 1].copy_from_slice(&old[r * k..r * k + r + 1]);
    }
    out[k * size..k * size + k].copy_from_slice(row);
    out[k * size + k] = diag;
    out
}

fn cholesky_solve<T: Real>(l: &[T], k: usize, b: &[T]) -> Vec<T> {
    let mut y = vec![T::zero(); k];
    for r in 0..k {
        let mut acc = b[r];
        for c in 0..r {
            acc -= l[r * k + c] * y[c];
        }
        y[r] = acc / l[r * k + r];
    }
    let mut x = vec![T::zero(); k];
    for r in (0..k).rev() {
        let mut acc = y[r];
        for c in r + 1..k {
            acc -= l[c * k + r] * x[c];
        }
        x[r] = acc / l[r * k + r];
    }
    x
}
