//! Soft decoding by alternating sparse coding and a bin-constrained QP with a
//! graph smoothness term, per overlapping patch.
//!
//! Per patch the objective is
//! `‖x − Φα − m‖² + λ₁‖α‖₀ + λ₂ R_G(x)` where `m` is the patch offset carried
//! with the code (the dictionary models mean-removed patches) and `R_G` is the
//! chosen graph regularizer. Each outer iteration rebuilds the graph from the
//! current patch, re-codes with OMP and re-solves the QP from the previous,
//! feasible estimate.

mod qp;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use qp::{
    qp_objective, qp_solve, qp_step, BinProjector, GraphRegularizer, HessianOp, Projector, QpConfig, QpError,
    QpOutcome, DIVERGENCE_STREAK,
};

use crate::dct::Dct8x8;
use crate::graph::{build_graph, GraphError, PatchGraph, RegularizerKind, Sigmas};
use crate::jpeg::tables::ZIGZAG;
use crate::jpeg::{hard_decode_plane, QBlock, QuantizedImage};
use crate::laplacian::{fit_laplacian, mmse_decode_plane, LaplacianParams};
use crate::metrics::psnr;
use crate::patching::{assemble_patches, extract_patches, PatchError, PatchLayout, BLOCK};
use crate::raster::{GrayImage, Plane};
use crate::scalar::{norm, Real};
use crate::sparse::{omp, Dictionary, OmpStop, SparseCode};

/// First zig-zag position counted as high frequency by [`lambda2_effective`].
pub const HIGH_FREQUENCY_START: usize = 32;

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("dictionary atoms have {atom_len} pixels but patches have {patch_len}")]
    DictMismatch { atom_len: usize, patch_len: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Layout(#[from] PatchError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub lambda1: f64,
    pub lambda2_base: f64,
    pub lambda2_boost: f64,
    pub max_outer_iters: usize,
    pub qp: QpConfig,
    /// Intensity kernel width; `None` picks `max(5, std)` per patch.
    pub sigma1: Option<f64>,
    /// Spatial kernel width; `None` uses the patch side.
    pub sigma2: Option<f64>,
    pub patch_size: usize,
    /// OMP atom limit; `None` uses the dictionary's training sparsity.
    pub sparsity: Option<usize>,
    /// OMP residual tolerance; `None` uses `√λ₁ · √n`.
    pub omp_residual_tol: Option<f64>,
    pub regularizer: RegularizerKind,
    /// Per-patch relative change below which a patch is frozen.
    pub convergence_tol: f64,
    /// Re-extract every patch from the overlap-averaged, bin-projected estimate
    /// after each outer iteration so neighbouring patches see each other.
    pub consensus: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda1: 0.001,
            lambda2_base: 0.5,
            lambda2_boost: 0.0,
            max_outer_iters: 4,
            qp: QpConfig::default(),
            sigma1: Some(30.0),
            sigma2: Some(4.0),
            patch_size: 10,
            sparsity: None,
            omp_residual_tol: None,
            regularizer: RegularizerKind::Lerag,
            convergence_tol: 1e-4,
            consensus: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), DecodeError> {
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(DecodeError::InvalidConfig(format!("{name} must be finite and >= 0, got {v}")))
            }
        };
        nonneg("lambda1", self.lambda1)?;
        nonneg("lambda2_base", self.lambda2_base)?;
        nonneg("lambda2_boost", self.lambda2_boost)?;
        nonneg("qp.tolerance", self.qp.tolerance)?;
        nonneg("convergence_tol", self.convergence_tol)?;
        if let Some(t) = self.omp_residual_tol {
            nonneg("omp_residual_tol", t)?;
        }
        for (name, s) in [("sigma1", self.sigma1), ("sigma2", self.sigma2)] {
            if let Some(s) = s.filter(|s| !(s.is_finite() && *s > 0.0)) {
                return Err(DecodeError::InvalidConfig(format!("{name} must be finite and > 0, got {s}")));
            }
        }
        if self.max_outer_iters == 0 || self.qp.max_iters == 0 {
            return Err(DecodeError::InvalidConfig("iteration counts must be >= 1".into()));
        }
        if self.sparsity == Some(0) {
            return Err(DecodeError::InvalidConfig("sparsity must be >= 1".into()));
        }
        Ok(())
    }
}

/// `λ₂_base · (1 + boost · Σ_{zig-zag k ≥ 32} |q_k|)` for one code block.
pub fn lambda2_effective(block: &QBlock, cfg: &SolverConfig) -> f64 {
    let hf: i64 = ZIGZAG[HIGH_FREQUENCY_START..].iter().map(|&i| i64::from(block[i].unsigned_abs())).sum();
    cfg.lambda2_base * (1.0 + cfg.lambda2_boost * hf as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveTerms<T> {
    pub fidelity: T,
    pub sparsity: T,
    pub smoothness: T,
}

impl<T: Real> ObjectiveTerms<T> {
    pub fn total(&self) -> T {
        self.fidelity + self.sparsity + self.smoothness
    }
}

/// Evaluates `‖x − Φα − m‖² + λ₁‖α‖₀ + λ₂ R_G(x)`.
#[allow(clippy::too_many_arguments)]
pub fn objective_value<T: Real>(
    x: &[T],
    code: &SparseCode<T>,
    offset: T,
    dict: &Dictionary<T>,
    graph: &PatchGraph<T>,
    kind: RegularizerKind,
    lambda1: T,
    lambda2: T,
) -> ObjectiveTerms<T> {
    let target = sparse_target(dict, code, offset);
    ObjectiveTerms {
        fidelity: x.iter().zip(&target).map(|(&a, &b)| (a - b) * (a - b)).sum(),
        sparsity: lambda1 * T::from_usize_lossy(code.len()),
        smoothness: lambda2 * graph.regularizer_value(x, kind),
    }
}

fn sparse_target<T: Real>(dict: &Dictionary<T>, code: &SparseCode<T>, offset: T) -> Vec<T> {
    dict.reconstruct(code).into_iter().map(|v| v + offset).collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub outer_iterations: usize,
    pub converged: bool,
    /// Mean per-patch objective at the end of each outer iteration.
    pub mean_objective: Vec<f64>,
    /// PSNR of the running estimate against the hard-decoded image, per iteration.
    pub psnr_vs_hard: Vec<f64>,
    /// Projected-gradient iterations summed over outer iterations, per patch.
    pub qp_iterations: Vec<usize>,
    /// Patches that hit a QP divergence and were reset to the MMSE initialization.
    pub fallback_patches: Vec<usize>,
    /// Largest relative objective increase seen inside any epoch (0 when monotone).
    pub max_epoch_increase: f64,
    /// Whether the Laplacian prior could be fitted (otherwise bin centers seed the solver).
    pub laplacian_prior: bool,
    pub wall_time_ms: f64,
    /// Objective after (graph rebuild, coding, QP) for every patch and outer iteration.
    #[serde(skip)]
    pub epoch_traces: Vec<Vec<[f64; 3]>>,
}

/// Relative slack allowed when comparing objective values.
pub fn monotone_slack(f: f64) -> f64 {
    1e-9 * f.abs().max(1.0)
}

struct PatchState<T> {
    x: Vec<T>,
    code: SparseCode<T>,
    offset: T,
    frozen: bool,
}

struct EpochOutcome<T> {
    x: Vec<T>,
    code: SparseCode<T>,
    offset: T,
    trace: [f64; 3],
    qp_iterations: usize,
    diverged: bool,
}

struct Context<'a, T> {
    dict: &'a Dictionary<T>,
    cfg: &'a SolverConfig,
    side: usize,
    stop: OmpStop<T>,
    lambda1: T,
}

impl<T: Real> Context<'_, T> {
    fn graph(&self, x: &[T]) -> Result<PatchGraph<T>, GraphError> {
        let mut sigmas = Sigmas::for_patch(x, self.side);
        if let Some(s) = self.cfg.sigma1 {
            sigmas.intensity = T::lit(s);
        }
        if let Some(s) = self.cfg.sigma2 {
            sigmas.spatial = T::lit(s);
        }
        build_graph(x, self.side, sigmas)
    }

    fn epoch(&self, state: &PatchState<T>, bins: &BinProjector<'_, T>, lambda2: T) -> Result<EpochOutcome<T>, GraphError> {
        let kind = self.cfg.regularizer;
        let graph = self.graph(&state.x)?;
        let objective = |x: &[T], code: &SparseCode<T>, offset: T| {
            objective_value(x, code, offset, self.dict, &graph, kind, self.lambda1, lambda2).total()
        };
        let f_start = objective(&state.x, &state.code, state.offset);

        let n = T::from_usize_lossy(state.x.len());
        let mean = state.x.iter().copied().sum::<T>() / n;
        let centered: Vec<T> = state.x.iter().map(|&v| v - mean).collect();
        let fresh = omp(&centered, self.dict, self.stop).expect("patch length checked against dictionary");
        let f_fresh = objective(&state.x, &fresh, mean);
        let (code, offset, f_code) = if f_fresh <= f_start + T::lit(monotone_slack(f_start.to_f64_lossy())) {
            (fresh, mean, f_fresh)
        } else {
            (state.code.clone(), state.offset, f_start)
        };

        let target = sparse_target(self.dict, &code, offset);
        match qp_step(&target, &state.x, &graph, kind, bins, lambda2, &self.cfg.qp) {
            Ok(out) => {
                let f_qp = objective(&out.x, &code, offset);
                let (x, f_end) = if f_qp <= f_code { (out.x, f_qp) } else { (state.x.clone(), f_code) };
                Ok(EpochOutcome {
                    x,
                    code,
                    offset,
                    trace: [f_start, f_code, f_end].map(|v| v.to_f64_lossy()),
                    qp_iterations: out.iterations,
                    diverged: false,
                })
            }
            Err(QpError::QpDivergence) => Ok(EpochOutcome {
                x: state.x.clone(),
                code,
                offset,
                trace: [f_start, f_code, f_code].map(|v| v.to_f64_lossy()),
                qp_iterations: self.cfg.qp.max_iters,
                diverged: true,
            }),
        }
    }
}

/// Soft decode with the combined priors. Returns the cropped 8-bit raster.
pub fn soft_decode<T: Real>(
    qimg: &QuantizedImage,
    dict: &Dictionary<T>,
    cfg: &SolverConfig,
) -> Result<(GrayImage, SolverReport), DecodeError> {
    let (plane, report) = soft_decode_plane(qimg, dict, cfg)?;
    Ok((plane.to_gray_cropped(qimg.width(), qimg.height()), report))
}

/// Like [`soft_decode`] but returns the padded, unclamped estimate.
pub fn soft_decode_plane<T: Real>(
    qimg: &QuantizedImage,
    dict: &Dictionary<T>,
    cfg: &SolverConfig,
) -> Result<(Plane<T>, SolverReport), DecodeError> {
    let started = Instant::now();
    cfg.validate()?;
    let patch_len = cfg.patch_size * cfg.patch_size;
    if dict.n() != patch_len {
        return Err(DecodeError::DictMismatch { atom_len: dict.n(), patch_len });
    }
    let layout = PatchLayout::new(qimg.padded_width(), qimg.padded_height(), cfg.patch_size)?;

    let (params, laplacian_prior) = match fit_laplacian::<T>(qimg) {
        Ok(p) => (p, true),
        Err(_) => (LaplacianParams::uniform(), false),
    };
    let init = mmse_decode_plane(qimg, &params);
    let hard = hard_decode_plane::<T>(qimg).to_gray();
    let initial_patches = extract_patches(&init, &layout)?;

    let dct = Dct8x8::<T>::new();
    let bins: Vec<BinProjector<'_, T>> = layout
        .enclosures()
        .iter()
        .enumerate()
        .map(|(k, e)| BinProjector::new(qimg.block(e.block.0, e.block.1), qimg.qtable(), layout.selection(k), &dct))
        .collect();
    let lambda2: Vec<T> = layout
        .enclosures()
        .iter()
        .map(|e| T::lit(lambda2_effective(qimg.block(e.block.0, e.block.1), cfg)))
        .collect();

    let sparsity = cfg.sparsity.unwrap_or(dict.meta().sparsity.max(1) as usize);
    let tol = cfg.omp_residual_tol.unwrap_or_else(|| cfg.lambda1.sqrt() * (patch_len as f64).sqrt());
    let ctx = Context {
        dict,
        cfg,
        side: cfg.patch_size,
        stop: OmpStop { max_atoms: sparsity, residual_tol: T::lit(tol) },
        lambda1: T::lit(cfg.lambda1),
    };

    let mut states: Vec<PatchState<T>> = initial_patches
        .iter()
        .map(|x| {
            let mean = x.iter().copied().sum::<T>() / T::from_usize_lossy(x.len());
            PatchState { x: x.clone(), code: SparseCode::empty(), offset: mean, frozen: false }
        })
        .collect();

    let mut report = SolverReport {
        qp_iterations: vec![0; layout.len()],
        epoch_traces: vec![Vec::new(); layout.len()],
        laplacian_prior,
        ..SolverReport::default()
    };
    let mut last_objective = vec![0.0f64; layout.len()];

    for _ in 0..cfg.max_outer_iters {
        report.outer_iterations += 1;
        let outcomes: Vec<Option<EpochOutcome<T>>> = states
            .par_iter()
            .enumerate()
            .map(|(k, s)| if s.frozen { Ok(None) } else { ctx.epoch(s, &bins[k], lambda2[k]).map(Some) })
            .collect::<Result<_, GraphError>>()?;

        for (k, outcome) in outcomes.into_iter().enumerate() {
            let Some(out) = outcome else { continue };
            let state = &mut states[k];
            report.qp_iterations[k] += out.qp_iterations;
            let [a, b, c] = out.trace;
            let rise = (b - a).max(c - b) / a.abs().max(1.0);
            report.max_epoch_increase = report.max_epoch_increase.max(rise.max(0.0));
            report.epoch_traces[k].push(out.trace);
            last_objective[k] = c;
            if out.diverged {
                state.x = initial_patches[k].clone();
                state.frozen = true;
                report.fallback_patches.push(k);
                continue;
            }
            let change = norm(&out.x.iter().zip(&state.x).map(|(&a, &b)| a - b).collect::<Vec<T>>());
            let scale = norm(&state.x).max(T::min_positive_value());
            state.frozen = change / scale < T::lit(cfg.convergence_tol);
            state.x = out.x;
            state.code = out.code;
            state.offset = out.offset;
        }

        report.mean_objective.push(last_objective.iter().sum::<f64>() / last_objective.len() as f64);
        let estimate = finalize(&states, &layout, &bins)?;
        if cfg.consensus {
            for (state, patch) in states.iter_mut().zip(extract_patches(&estimate, &layout)?) {
                state.x = patch;
            }
        }
        report.psnr_vs_hard.push(psnr(&hard, &estimate.to_gray()));
        if states.iter().all(|s| s.frozen) {
            report.converged = true;
            break;
        }
    }
    report.fallback_patches.sort_unstable();
    let plane = finalize(&states, &layout, &bins)?;
    report.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok((plane, report))
}

/// Overlap-averages the patches, then projects every code block back into its bins.
fn finalize<T: Real>(states: &[PatchState<T>], layout: &PatchLayout, bins: &[BinProjector<'_, T>]) -> Result<Plane<T>, PatchError> {
    let patches: Vec<Vec<T>> = states.iter().map(|s| s.x.clone()).collect();
    let mut plane = assemble_patches(&patches, layout)?;
    let width = plane.width();
    let data = plane.data_mut();
    for (k, e) in layout.enclosures().iter().enumerate() {
        // reuse the patch projector on a patch-shaped view of the assembled pixels
        let p = layout.patch_size();
        let mut window = vec![T::zero(); p * p];
        for y in 0..p {
            let row = (e.origin.1 + y) * width + e.origin.0;
            window[y * p..(y + 1) * p].copy_from_slice(&data[row..row + p]);
        }
        bins[k].project(&mut window);
        let (bx, by) = (e.block.0 * BLOCK, e.block.1 * BLOCK);
        for y in 0..BLOCK {
            let src = (e.offset.1 + y) * p + e.offset.0;
            let dst = (by + y) * width + bx;
            data[dst..dst + BLOCK].copy_from_slice(&window[src..src + BLOCK]);
        }
    }
    Ok(plane)
}
