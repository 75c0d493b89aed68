use super::{build_graph, spectral_decompose, GraphError, LaplacianKind, Sigmas};
use crate::scalar::Real;

/// Spectral-clustering view of a 1-D signal on its complete graph.
#[derive(Clone, Debug)]
pub struct NcutReport<T> {
    /// Second-smallest eigenvalue of the normalized Laplacian.
    pub fiedler_number: T,
    pub eigenvalues: Vec<T>,
    /// Relaxed Ncut indicator `D^{−1/2} v₂`, unit norm.
    pub indicator: Vec<T>,
    /// Relative ℓ₂ distance of the indicator from its best two-level fit.
    pub pwc_error: T,
    /// `v₂` is not unique (repeated eigenvalue) or the signal is constant.
    pub degenerate: bool,
}

/// Two smooth ramps of length `l` and `n − l`, each varying by at most `delta`,
/// separated by a jump larger than `gap`.
pub fn pws_signal<T: Real>(n: usize, l: usize, delta: T, gap: T) -> Vec<T> {
    assert!(l >= 1 && l < n, "split must leave two non-empty pieces");
    let ramp = |i: usize, len: usize| {
        if len > 1 {
            delta * T::from_usize_lossy(i) / T::from_usize_lossy(len - 1)
        } else {
            T::zero()
        }
    };
    let offset = delta + delta + gap;
    (0..n).map(|i| if i < l { ramp(i, l) } else { offset + ramp(i - l, n - l) }).collect()
}

pub fn ncut_demo<T: Real>(signal: &[T], sigmas: Sigmas<T>) -> Result<NcutReport<T>, GraphError> {
    let n = signal.len();
    if n < 3 {
        return Err(GraphError::DimensionMismatch(format!("need at least 3 samples, got {n}")));
    }
    let graph = build_graph(signal, n, sigmas)?;
    let spectrum = spectral_decompose(&graph, LaplacianKind::RandomWalk)?;
    let mut indicator = spectrum.right_eigenvector(1);
    let norm = indicator.iter().map(|&v| v * v).sum::<T>().sqrt();
    indicator.iter_mut().for_each(|v| *v /= norm);
    let pwc_error = two_level_fit_error(&indicator);
    let constant = signal.iter().all(|&v| v == signal[0]);
    let tie = (spectrum.eigenvalues[2] - spectrum.eigenvalues[1]).abs() <= T::lit(1e-9);
    Ok(NcutReport {
        fiedler_number: spectrum.eigenvalues[1],
        eigenvalues: spectrum.eigenvalues,
        indicator,
        pwc_error,
        degenerate: constant || tie,
    })
}

/// Best split of the sorted values into two constant levels.
fn two_level_fit_error<T: Real>(u: &[T]) -> T {
    let mut sorted = u.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let total_sq = sorted.iter().map(|&v| v * v).sum::<T>();
    let total = sorted.iter().copied().sum::<T>();
    let n = sorted.len();
    let mut best = T::infinity();
    let mut left = T::zero();
    for k in 1..n {
        left += sorted[k - 1];
        let right = total - left;
        let (nl, nr) = (T::from_usize_lossy(k), T::from_usize_lossy(n - k));
        // SSE = Σv² − (Σ_A v)²/|A| − (Σ_B v)²/|B|
        best = best.min(total_sq - left * left / nl - right * right / nr);
    }
    best.max(T::zero()).sqrt() / total_sq.sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReconstructionComparison<T> {
    /// Relative error using the first two random-walk eigenvectors.
    pub graph_error: T,
    /// Relative error using the first two DCT basis vectors.
    pub dct_error: T,
}

/// Two-term approximations of `signal`: graph (left-eigenvector analysis,
/// right-eigenvector synthesis) against the DCT.
pub fn two_term_reconstruction<T: Real>(signal: &[T], sigmas: Sigmas<T>) -> Result<ReconstructionComparison<T>, GraphError> {
    let n = signal.len();
    let graph = build_graph(signal, n, sigmas)?;
    let spectrum = spectral_decompose(&graph, LaplacianKind::RandomWalk)?;
    let coeffs = spectrum.forward(signal);
    let graph_approx = spectrum.inverse(&coeffs[..2]);

    let nf = T::from_usize_lossy(n);
    let basis = |k: usize, i: usize| {
        let scale = if k == 0 { (T::one() / nf).sqrt() } else { (T::lit(2.0) / nf).sqrt() };
        let angle = T::PI() * T::from_usize_lossy((2 * i + 1) * k) / (T::lit(2.0) * nf);
        scale * angle.cos()
    };
    let mut dct_approx = vec![T::zero(); n];
    for k in 0..2 {
        let c = (0..n).map(|i| basis(k, i) * signal[i]).sum::<T>();
        for (i, v) in dct_approx.iter_mut().enumerate() {
            *v += c * basis(k, i);
        }
    }
    let norm = signal.iter().map(|&v| v * v).sum::<T>().sqrt();
    let err = |approx: &[T]| {
        approx.iter().zip(signal).map(|(&a, &s)| (a - s) * (a - s)).sum::<T>().sqrt() / norm
    };
    Ok(ReconstructionComparison { graph_error: err(&graph_approx), dct_error: err(&dct_approx) })
}
