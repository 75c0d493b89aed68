//! Projected gradient for `min ‖x − t‖² + λ xᵀAx` over a convex set with a cheap
//! Euclidean projection.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dct::Dct8x8;
use crate::graph::{PatchGraph, RegularizerKind};
use crate::jpeg::QBlock;
use crate::jpeg::QuantTable;
use crate::patching::{block_of_patch, write_block};
use crate::scalar::{dot, norm, Real};

/// Consecutive objective increases tolerated before giving up.
pub const DIVERGENCE_STREAK: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("objective increased for {DIVERGENCE_STREAK} consecutive projected-gradient steps")]
    QpDivergence,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QpConfig {
    pub max_iters: usize,
    /// Stop once the gradient-map norm `‖x − P(x − η∇f)‖ / η` drops below this.
    pub tolerance: f64,
}

impl Default for QpConfig {
    fn default() -> Self {
        Self { max_iters: 300, tolerance: 1e-3 }
    }
}

/// Symmetric positive semidefinite operator `A`.
pub trait HessianOp<T: Real> {
    fn apply(&self, x: &[T]) -> Vec<T>;
    /// Any upper bound on the spectral norm.
    fn norm_bound(&self) -> T;
    fn quadratic(&self, x: &[T]) -> T {
        dot(x, &self.apply(x))
    }
}

/// Euclidean projection onto a closed convex set.
pub trait Projector<T: Real> {
    fn project(&self, x: &mut [T]);
}

/// Graph regularizer of the chosen kind viewed as a quadratic form.
pub struct GraphRegularizer<'a, T> {
    pub graph: &'a PatchGraph<T>,
    pub kind: RegularizerKind,
}

impl<T: Real> HessianOp<T> for GraphRegularizer<'_, T> {
    fn apply(&self, x: &[T]) -> Vec<T> {
        self.graph.regularizer_gradient(x, self.kind).into_iter().map(|v| v * T::lit(0.5)).collect()
    }

    fn norm_bound(&self) -> T {
        self.graph.regularizer_norm_bound(self.kind)
    }

    fn quadratic(&self, x: &[T]) -> T {
        self.graph.regularizer_value(x, self.kind)
    }
}

/// Round-consistent bin box on the DCT of a patch's enclosed block.
#[derive(Clone, Debug)]
pub struct BinProjector<'a, T> {
    selection: [usize; 64],
    lower: [T; 64],
    upper: [T; 64],
    level_shift: T,
    dct: &'a Dct8x8<T>,
}

impl<'a, T: Real> BinProjector<'a, T> {
    /// Bins `[(q − ½)Q, (q + ½)Q − ε]` for every coefficient of `block`; pixel values
    /// carry the JPEG level shift of 128.
    pub fn new(block: &QBlock, qtable: &QuantTable, selection: [usize; 64], dct: &'a Dct8x8<T>) -> Self {
        let mut lower = [T::zero(); 64];
        let mut upper = [T::zero(); 64];
        for i in 0..64 {
            let step = f64::from(qtable.natural(i));
            let (lo, hi) = ((f64::from(block[i]) - 0.5) * step, (f64::from(block[i]) + 0.5) * step);
            let inset = (step * 1e-7).max(hi.abs() * f64::EPSILON * 8.0);
            lower[i] = T::lit(lo);
            upper[i] = T::lit(hi - inset).max(T::lit(lo));
        }
        Self { selection, lower, upper, level_shift: T::lit(128.0), dct }
    }

    /// Explicit box, for tests and diagnostics.
    pub fn with_bounds(selection: [usize; 64], lower: [T; 64], upper: [T; 64], level_shift: T, dct: &'a Dct8x8<T>) -> Self {
        Self { selection, lower, upper, level_shift, dct }
    }

    pub fn coefficients(&self, patch: &[T]) -> [T; 64] {
        let mut block = block_of_patch(patch, &self.selection);
        block.iter_mut().for_each(|v| *v -= self.level_shift);
        self.dct.forward(&block)
    }

    /// Largest distance of a coefficient outside its closed bin.
    pub fn violation(&self, patch: &[T]) -> T {
        let c = self.coefficients(patch);
        (0..64).fold(T::zero(), |worst, i| {
            worst.max(self.lower[i] - c[i]).max(c[i] - self.upper[i])
        })
    }
}

impl<T: Real> Projector<T> for BinProjector<'_, T> {
    fn project(&self, x: &mut [T]) {
        let mut c = self.coefficients(x);
        let mut moved = false;
        for i in 0..64 {
            let clamped = c[i].max(self.lower[i]).min(self.upper[i]);
            moved |= clamped != c[i];
            c[i] = clamped;
        }
        if !moved {
            return;
        }
        let mut block = self.dct.inverse(&c);
        block.iter_mut().for_each(|v| *v += self.level_shift);
        write_block(x, &self.selection, &block);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpOutcome<T> {
    pub x: Vec<T>,
    pub objective: T,
    pub iterations: usize,
    pub gradient_map_norm: T,
}

pub fn qp_objective<T: Real, A: HessianOp<T>>(x: &[T], target: &[T], op: &A, lambda: T) -> T {
    let fidelity: T = x.iter().zip(target).map(|(&a, &b)| (a - b) * (a - b)).sum();
    fidelity + lambda * op.quadratic(x)
}

/// Projected gradient with step `1 / (2 (1 + λ‖A‖))`, started from `start` (projected first).
pub fn qp_solve<T: Real, A: HessianOp<T>, P: Projector<T>>(
    target: &[T],
    start: &[T],
    op: &A,
    lambda: T,
    projector: &P,
    cfg: &QpConfig,
) -> Result<QpOutcome<T>, QpError> {
    assert_eq!(target.len(), start.len());
    let two = T::lit(2.0);
    let step = (two * (T::one() + lambda * op.norm_bound())).recip();
    let tol = T::lit(cfg.tolerance);
    let mut x = start.to_vec();
    projector.project(&mut x);
    let mut f = qp_objective(&x, target, op, lambda);
    let mut streak = 0;
    let mut gm = T::infinity();
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        let ax = op.apply(&x);
        let mut y: Vec<T> = x
            .iter()
            .zip(target)
            .zip(&ax)
            .map(|((&xi, &ti), &ai)| xi - step * two * ((xi - ti) + lambda * ai))
            .collect();
        projector.project(&mut y);
        let diff: Vec<T> = x.iter().zip(&y).map(|(&a, &b)| a - b).collect();
        gm = norm(&diff) / step;
        let f_new = qp_objective(&y, target, op, lambda);
        if f_new > f + T::lit(1e-12) * f.abs().max(T::one()) {
            streak += 1;
            if streak >= DIVERGENCE_STREAK {
                return Err(QpError::QpDivergence);
            }
        } else {
            streak = 0;
        }
        x = y;
        f = f_new;
        if gm < tol {
            break;
        }
    }
    Ok(QpOutcome { x, objective: f, iterations, gradient_map_norm: gm })
}

/// The soft decoder's QP: fidelity to `target` plus `λ₂_eff` times the graph
/// regularizer, subject to the bin box of the enclosed block.
pub fn qp_step<T: Real>(
    target: &[T],
    start: &[T],
    graph: &PatchGraph<T>,
    kind: RegularizerKind,
    bins: &BinProjector<'_, T>,
    lambda2_eff: T,
    cfg: &QpConfig,
) -> Result<QpOutcome<T>, QpError> {
    qp_solve(target, start, &GraphRegularizer { graph, kind }, lambda2_eff, bins, cfg)
}
