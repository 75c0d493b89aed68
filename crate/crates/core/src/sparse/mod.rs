//! Sparse coding over a learned dictionary: OMP, K-SVD training, persistence
//! and the mean-frequency diagnostic.

mod io;
mod ksvd;
mod omp;

use std::io as stdio;

use thiserror::Error;

use crate::dct::DctBasis;
use crate::scalar::{dot, norm, Real};

pub use io::{load_dict, load_dict_file, save_dict, save_dict_file, DICT_MAGIC, DICT_VERSION};
pub use ksvd::{ksvd_train, KsvdConfig, Trained};
pub use omp::{omp, omp_traced, OmpStop};

#[derive(Debug, Error)]
pub enum SparseError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite input")]
    NonFiniteInput,
    #[error("atom {0} does not have unit norm")]
    NotUnitNorm(usize),
    #[error("dictionary with {atoms} atoms of length {n} is undercomplete")]
    Undercomplete { n: usize, atoms: usize },
    #[error("insufficient training data: {0}")]
    InsufficientData(String),
    #[error("not a dictionary file")]
    BadMagic,
    #[error("unsupported dictionary file version {0}")]
    VersionMismatch(u32),
    #[error("corrupt dictionary payload: {0}")]
    CorruptPayload(String),
    #[error(transparent)]
    Io(#[from] stdio::Error),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrainingMeta {
    /// Sparsity limit `K` used for training and, by default, for decoding.
    pub sparsity: u32,
    pub iterations: u32,
    /// Free-form provenance; not persisted.
    pub source: String,
}

/// Column-major `n × M` matrix of unit-norm atoms with a cached Gram matrix.
#[derive(Clone, Debug)]
pub struct Dictionary<T> {
    n: usize,
    m: usize,
    atoms: Vec<T>,
    gram: Vec<T>,
    meta: TrainingMeta,
}

impl<T: Real> PartialEq for Dictionary<T> {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.m == other.m
            && self.atoms == other.atoms
            && self.meta.sparsity == other.meta.sparsity
            && self.meta.iterations == other.meta.iterations
    }
}

fn norm_tolerance<T: Real>() -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(64.0))
}

impl<T: Real> Dictionary<T> {
    /// Validates unit-norm finite atoms and `M ≥ n`.
    pub fn new(n: usize, atoms: Vec<T>, meta: TrainingMeta) -> Result<Self, SparseError> {
        let dict = Self::new_undercomplete(n, atoms, meta)?;
        if dict.m < n {
            return Err(SparseError::Undercomplete { n, atoms: dict.m });
        }
        Ok(dict)
    }

    /// Like [`Dictionary::new`] without the over-completeness requirement.
    pub fn new_undercomplete(n: usize, atoms: Vec<T>, meta: TrainingMeta) -> Result<Self, SparseError> {
        if n == 0 || atoms.is_empty() || !atoms.len().is_multiple_of(n) {
            return Err(SparseError::DimensionMismatch(format!(
                "{} values do not form columns of length {n}",
                atoms.len()
            )));
        }
        if atoms.iter().any(|v| !v.is_finite()) {
            return Err(SparseError::NonFiniteInput);
        }
        let m = atoms.len() / n;
        for (j, col) in atoms.chunks_exact(n).enumerate() {
            if (norm(col) - T::one()).abs() > norm_tolerance() {
                return Err(SparseError::NotUnitNorm(j));
            }
        }
        let mut gram = vec![T::zero(); m * m];
        for i in 0..m {
            for j in i..m {
                let g = dot(&atoms[i * n..(i + 1) * n], &atoms[j * n..(j + 1) * n]);
                gram[i * m + j] = g;
                gram[j * m + i] = g;
            }
        }
        Ok(Self { n, m, atoms, gram, meta })
    }

    /// Normalizes each column first; zero columns are rejected.
    pub fn from_columns(n: usize, mut atoms: Vec<T>, meta: TrainingMeta) -> Result<Self, SparseError> {
        if n > 0 {
            for (j, col) in atoms.chunks_exact_mut(n).enumerate() {
                let norm = norm(col);
                if !(norm > T::zero()) {
                    return Err(SparseError::NotUnitNorm(j));
                }
                col.iter_mut().for_each(|v| *v /= norm);
            }
        }
        Self::new_undercomplete(n, atoms, meta)
    }

    /// Atom length (pixels per patch).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Atom count.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn atom(&self, j: usize) -> &[T] {
        &self.atoms[j * self.n..(j + 1) * self.n]
    }

    pub fn atoms(&self) -> &[T] {
        &self.atoms
    }

    pub fn gram(&self, i: usize, j: usize) -> T {
        self.gram[i * self.m + j]
    }

    pub fn meta(&self) -> &TrainingMeta {
        &self.meta
    }

    pub fn set_source(&mut self, source: impl Into<String>) {
        self.meta.source = source.into();
    }

    /// `Φα` for a sparse code.
    pub fn reconstruct(&self, code: &SparseCode<T>) -> Vec<T> {
        let mut out = vec![T::zero(); self.n];
        for (&j, &c) in code.support.iter().zip(&code.coefficients) {
            for (o, &a) in out.iter_mut().zip(self.atom(j)) {
                *o += c * a;
            }
        }
        out
    }
}

/// Sparse vector `α`: coefficients on the listed atoms, in selection order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseCode<T> {
    pub support: Vec<usize>,
    pub coefficients: Vec<T>,
}

impl<T: Real> SparseCode<T> {
    pub fn empty() -> Self {
        Self { support: Vec::new(), coefficients: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn coefficient(&self, atom: usize) -> T {
        self.support.iter().position(|&j| j == atom).map_or(T::zero(), |p| self.coefficients[p])
    }
}

/// Energy-weighted mean of the Manhattan DCT frequency `u + v` over all atoms,
/// each atom viewed as a square patch.
pub fn mean_frequency<T: Real>(dict: &Dictionary<T>) -> Result<T, SparseError> {
    let side = (dict.n as f64).sqrt().round() as usize;
    if side * side != dict.n {
        return Err(SparseError::DimensionMismatch(format!("atom length {} is not a square", dict.n)));
    }
    let dct = DctBasis::new(side);
    let mut coeffs = vec![T::zero(); dict.n];
    let mut total = T::zero();
    for j in 0..dict.m {
        dct.forward(dict.atom(j), &mut coeffs);
        for (i, &y) in coeffs.iter().enumerate() {
            total += T::from_usize_lossy(i / side + i % side) * y * y;
        }
    }
    Ok(total / T::from_usize_lossy(dict.m))
}

/// Draws `count` mean-removed `side × side` patches uniformly at random (with
/// replacement) from `images`, in a seed-determined order.
pub fn sample_training_patches<T: Real>(
    images: &[crate::raster::GrayImage],
    side: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<T>>, SparseError> {
    use rand::{Rng, SeedableRng};
    let usable: Vec<&crate::raster::GrayImage> =
        images.iter().filter(|im| im.width() >= side && im.height() >= side).collect();
    if usable.is_empty() {
        return Err(SparseError::InsufficientData(format!("no training image holds a {side}x{side} patch")));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let im = usable[rng.gen_range(0..usable.len())];
            let x0 = rng.gen_range(0..=im.width() - side);
            let y0 = rng.gen_range(0..=im.height() - side);
            let mut patch: Vec<T> = (0..side * side)
                .map(|i| T::lit(f64::from(im.get(x0 + i % side, y0 + i / side))))
                .collect();
            let mean = patch.iter().copied().sum::<T>() / T::from_usize_lossy(patch.len());
            patch.iter_mut().for_each(|v| *v -= mean);
            patch
        })
        .collect())
}
