//! Fully connected patch graphs, their Laplacians, and the LERaG smoothness
//! prior `(1/d_min) xᵀ L D⁻¹ L x`.

mod demo;
mod eigen;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{dot, Real};

pub use demo::{ncut_demo, pws_signal, two_term_reconstruction, NcutReport, ReconstructionComparison};
pub use eigen::symmetric_eigen;

/// Smallest admissible vertex degree.
pub const DEGREE_FLOOR: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph kernel widths must be positive and finite (sigma1 = {0}, sigma2 = {1})")]
    BadSigma(f64, f64),
    #[error("eigensolver did not converge")]
    ConvergenceFailure,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sigmas<T> {
    /// Intensity kernel width.
    pub intensity: T,
    /// Spatial kernel width.
    pub spatial: T,
}

impl<T: Real> Sigmas<T> {
    /// `σ₁ = max(5, std(patch))`, `σ₂ = patch side`.
    pub fn for_patch(values: &[T], side: usize) -> Self {
        let n = T::from_usize_lossy(values.len().max(1));
        let mean = values.iter().copied().sum::<T>() / n;
        let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
        Self { intensity: var.sqrt().max(T::lit(5.0)), spatial: T::from_usize_lossy(side) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LaplacianKind {
    /// `L = D − W`
    Combinatorial,
    /// `D^{−1/2} L D^{−1/2}`
    Normalized,
    /// `D⁻¹ L`
    RandomWalk,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegularizerKind {
    Combinatorial,
    Normalized,
    Lerag,
}

impl RegularizerKind {
    pub const ALL: [RegularizerKind; 3] = [Self::Combinatorial, Self::Normalized, Self::Lerag];

    pub fn name(self) -> &'static str {
        match self {
            Self::Combinatorial => "combinatorial",
            Self::Normalized => "normalized",
            Self::Lerag => "lerag",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Dense Gaussian-kernel graph over the pixels of one patch.
#[derive(Clone, Debug)]
pub struct PatchGraph<T> {
    n: usize,
    weights: Vec<T>,
    degrees: Vec<T>,
    // degree floor minus row sum; zero unless the floor kicked in
    excess: Vec<T>,
    d_min: T,
    d_max: T,
}

/// Graph over `values` laid out row-major with `width` columns.
pub fn build_graph<T: Real>(values: &[T], width: usize, sigmas: Sigmas<T>) -> Result<PatchGraph<T>, GraphError> {
    let ok = |s: T| s > T::zero() && s.is_finite();
    if !ok(sigmas.intensity) || !ok(sigmas.spatial) {
        return Err(GraphError::BadSigma(sigmas.intensity.to_f64_lossy(), sigmas.spatial.to_f64_lossy()));
    }
    if width == 0 || !values.len().is_multiple_of(width) {
        return Err(GraphError::DimensionMismatch(format!("{} values in rows of {width}", values.len())));
    }
    let n = values.len();
    let inv_s1 = (sigmas.intensity * sigmas.intensity).recip();
    let inv_s2 = (sigmas.spatial * sigmas.spatial).recip();
    let mut weights = vec![T::zero(); n * n];
    for i in 0..n {
        let (xi, yi) = (T::from_usize_lossy(i % width), T::from_usize_lossy(i / width));
        for j in i + 1..n {
            let (xj, yj) = (T::from_usize_lossy(j % width), T::from_usize_lossy(j / width));
            let dv = values[i] - values[j];
            let dl = (xi - xj) * (xi - xj) + (yi - yj) * (yi - yj);
            let w = (-(dv * dv) * inv_s1 - dl * inv_s2).exp();
            weights[i * n + j] = w;
            weights[j * n + i] = w;
        }
    }
    let floor = T::lit(DEGREE_FLOOR);
    let row_sums: Vec<T> = weights.chunks_exact(n).map(|row| row.iter().copied().sum::<T>()).collect();
    let degrees: Vec<T> = row_sums.iter().map(|&s| s.max(floor)).collect();
    let excess = degrees.iter().zip(&row_sums).map(|(&d, &s)| d - s).collect();
    let d_min = degrees.iter().copied().fold(T::infinity(), T::min);
    let d_max = degrees.iter().copied().fold(T::zero(), T::max);
    Ok(PatchGraph { n, weights, degrees, excess, d_min, d_max })
}

impl<T: Real> PatchGraph<T> {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn weight(&self, i: usize, j: usize) -> T {
        self.weights[i * self.n + j]
    }

    pub fn degrees(&self) -> &[T] {
        &self.degrees
    }

    pub fn d_min(&self) -> T {
        self.d_min
    }

    pub fn d_max(&self) -> T {
        self.d_max
    }

    /// `L x = D x − W x`, as `Σ_j W_ij (x_i − x_j)` so constants map to exactly zero.
    pub fn apply_laplacian(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        self.weights
            .chunks_exact(self.n)
            .zip(&self.excess)
            .zip(x)
            .map(|((row, &extra), &xi)| {
                let mut acc = extra * xi;
                for (&w, &xj) in row.iter().zip(x) {
                    acc += w * (xi - xj);
                }
                acc
            })
            .collect()
    }

    pub fn apply(&self, kind: LaplacianKind, x: &[T]) -> Vec<T> {
        match kind {
            LaplacianKind::Combinatorial => self.apply_laplacian(x),
            LaplacianKind::Normalized => {
                let scaled: Vec<T> = x.iter().zip(&self.degrees).map(|(&v, &d)| v / d.sqrt()).collect();
                let lx = self.apply_laplacian(&scaled);
                lx.iter().zip(&self.degrees).map(|(&v, &d)| v / d.sqrt()).collect()
            }
            LaplacianKind::RandomWalk => {
                self.apply_laplacian(x).iter().zip(&self.degrees).map(|(&v, &d)| v / d).collect()
            }
        }
    }

    /// `G x` with `G = (1/d_min) L D⁻¹ L`.
    pub fn apply_lerag_kernel(&self, x: &[T]) -> Vec<T> {
        let lx = self.apply_laplacian(x);
        let scaled: Vec<T> = lx.iter().zip(&self.degrees).map(|(&v, &d)| v / d).collect();
        self.apply_laplacian(&scaled).into_iter().map(|v| v / self.d_min).collect()
    }

    /// `(1/d_min) ‖D^{−1/2} L x‖²`.
    pub fn lerag_value(&self, x: &[T]) -> T {
        let lx = self.apply_laplacian(x);
        lx.iter().zip(&self.degrees).map(|(&v, &d)| v * v / d).sum::<T>() / self.d_min
    }

    pub fn regularizer_value(&self, x: &[T], kind: RegularizerKind) -> T {
        match kind {
            RegularizerKind::Combinatorial => dot(x, &self.apply_laplacian(x)),
            RegularizerKind::Normalized => dot(x, &self.apply(LaplacianKind::Normalized, x)),
            RegularizerKind::Lerag => self.lerag_value(x),
        }
    }

    /// Gradient of [`PatchGraph::regularizer_value`]; every kind is a quadratic `xᵀAx`.
    pub fn regularizer_gradient(&self, x: &[T], kind: RegularizerKind) -> Vec<T> {
        let ax = match kind {
            RegularizerKind::Combinatorial => self.apply_laplacian(x),
            RegularizerKind::Normalized => self.apply(LaplacianKind::Normalized, x),
            RegularizerKind::Lerag => self.apply_lerag_kernel(x),
        };
        ax.into_iter().map(|v| v + v).collect()
    }

    /// Upper bound on the spectral norm of the regularizer matrix, from Gershgorin
    /// discs on `L` (`‖L‖ ≤ 2 d_max`) and `‖L_n‖ ≤ 2`.
    pub fn regularizer_norm_bound(&self, kind: RegularizerKind) -> T {
        let two = T::lit(2.0);
        match kind {
            RegularizerKind::Combinatorial => two * self.d_max,
            RegularizerKind::Normalized => two,
            // L D⁻¹ L = D^{1/2} L_n² D^{1/2}
            RegularizerKind::Lerag => two * two * self.d_max / self.d_min,
        }
    }

    /// Dense row-major matrix of the chosen Laplacian.
    pub fn laplacian_matrix(&self, kind: LaplacianKind) -> Vec<T> {
        let n = self.n;
        let mut l = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                let lij = if i == j { self.degrees[i] } else { -self.weights[i * n + j] };
                l[i * n + j] = match kind {
                    LaplacianKind::Combinatorial => lij,
                    LaplacianKind::Normalized => lij / (self.degrees[i] * self.degrees[j]).sqrt(),
                    LaplacianKind::RandomWalk => lij / self.degrees[i],
                };
            }
        }
        l
    }
}

/// Eigenpairs of a graph Laplacian.
///
/// For the random-walk Laplacian the decomposition is carried through the
/// normalized one: right eigenvectors are `D^{−1/2} V`, left eigenvectors are the
/// rows of `Vᵀ D^{1/2}`, and the transform pair below uses left for analysis
/// and right for synthesis.
#[derive(Clone, Debug)]
pub struct SpectralDecomp<T> {
    pub kind: LaplacianKind,
    pub eigenvalues: Vec<T>,
    /// Orthonormal eigenvectors as columns (row-major `n × n`).
    pub vectors: Vec<T>,
    sqrt_degrees: Vec<T>,
}

pub fn spectral_decompose<T: Real>(g: &PatchGraph<T>, kind: LaplacianKind) -> Result<SpectralDecomp<T>, GraphError> {
    let base = if kind == LaplacianKind::Combinatorial { kind } else { LaplacianKind::Normalized };
    let (eigenvalues, vectors) =
        symmetric_eigen(&g.laplacian_matrix(base), g.n).ok_or(GraphError::ConvergenceFailure)?;
    Ok(SpectralDecomp { kind, eigenvalues, vectors, sqrt_degrees: g.degrees.iter().map(|d| d.sqrt()).collect() })
}

impl<T: Real> SpectralDecomp<T> {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Column `k` of the orthonormal basis.
    pub fn vector(&self, k: usize) -> Vec<T> {
        let n = self.len();
        (0..n).map(|i| self.vectors[i * n + k]).collect()
    }

    pub fn right_eigenvector(&self, k: usize) -> Vec<T> {
        let v = self.vector(k);
        match self.kind {
            LaplacianKind::RandomWalk => v.iter().zip(&self.sqrt_degrees).map(|(&a, &s)| a / s).collect(),
            _ => v,
        }
    }

    pub fn left_eigenvector(&self, k: usize) -> Vec<T> {
        let v = self.vector(k);
        match self.kind {
            LaplacianKind::RandomWalk => v.iter().zip(&self.sqrt_degrees).map(|(&a, &s)| a * s).collect(),
            _ => v,
        }
    }

    /// Graph Fourier coefficients (projections on the left eigenvectors).
    pub fn forward(&self, x: &[T]) -> Vec<T> {
        (0..self.len()).map(|k| dot(&self.left_eigenvector(k), x)).collect()
    }

    /// Synthesis from the first `coeffs.len()` right eigenvectors.
    pub fn inverse(&self, coeffs: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.len()];
        for (k, &c) in coeffs.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(self.right_eigenvector(k)) {
                *o += c * v;
            }
        }
        out
    }
}
