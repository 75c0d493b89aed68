use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{omp, Dictionary, OmpStop, SparseCode, SparseError, TrainingMeta};
use crate::scalar::{dot, norm, norm_sq, Real};

const POWER_STEPS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KsvdConfig {
    pub atoms: usize,
    pub sparsity: usize,
    pub iterations: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct Trained<T> {
    pub dictionary: Dictionary<T>,
    /// `Σ‖x_i − Φα_i‖²` after each iteration.
    pub objective: Vec<T>,
}

/// K-SVD. Patches are expected to be mean-removed already.
pub fn ksvd_train<T: Real>(patches: &[Vec<T>], config: KsvdConfig) -> Result<Trained<T>, SparseError> {
    let m = config.atoms;
    if m == 0 || config.sparsity == 0 {
        return Err(SparseError::InsufficientData("atom count and sparsity must be positive".into()));
    }
    if patches.len() < m {
        return Err(SparseError::InsufficientData(format!("{} patches for {m} atoms", patches.len())));
    }
    let n = patches[0].len();
    if n == 0 || patches.iter().any(|p| p.len() != n) {
        return Err(SparseError::DimensionMismatch("training patches differ in length".into()));
    }
    if patches.iter().flatten().any(|v| !v.is_finite()) {
        return Err(SparseError::NonFiniteInput);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut atoms = initial_atoms(patches, n, m, &mut rng)?;
    let meta = |iters: usize| TrainingMeta {
        sparsity: config.sparsity as u32,
        iterations: iters as u32,
        source: String::new(),
    };
    let stop = OmpStop::sparsity(config.sparsity);

    let mut codes: Vec<SparseCode<T>> = vec![SparseCode::empty(); patches.len()];
    let mut residuals: Vec<Vec<T>> = patches.to_vec();
    let mut objective = Vec::with_capacity(config.iterations);

    for _ in 0..config.iterations {
        let dict = Dictionary::new_undercomplete(n, atoms.clone(), meta(0))?;
        let fresh: Vec<(SparseCode<T>, Vec<T>)> = patches
            .par_iter()
            .map(|x| {
                let code = omp(x, &dict, stop).expect("validated training patch");
                let r = residual_of(x, &dict, &code);
                (code, r)
            })
            .collect();
        for ((old, old_r), (code, r)) in codes.iter_mut().zip(residuals.iter_mut()).zip(fresh) {
            if norm_sq(&r) <= norm_sq(old_r) {
                *old = code;
                *old_r = r;
            }
        }

        let mut users: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m];
        for (i, code) in codes.iter().enumerate() {
            for (p, &j) in code.support.iter().enumerate() {
                users[j].push((i, p));
            }
        }
        let mut reseeded = vec![false; patches.len()];
        for k in 0..m {
            let atom = &mut atoms[k * n..(k + 1) * n];
            if users[k].is_empty() {
                reseed(atom, &residuals, &mut reseeded);
                continue;
            }
            update_atom(atom, &users[k], &mut codes, &mut residuals);
        }
        objective.push(residuals.iter().map(|r| norm_sq(r)).sum());
    }

    let dictionary = Dictionary::new_undercomplete(n, atoms, meta(config.iterations))?;
    Ok(Trained { dictionary, objective })
}

fn initial_atoms<T: Real>(patches: &[Vec<T>], n: usize, m: usize, rng: &mut ChaCha8Rng) -> Result<Vec<T>, SparseError> {
    let mut order: Vec<usize> = (0..patches.len()).collect();
    order.shuffle(rng);
    let mut atoms = Vec::with_capacity(n * m);
    for i in order {
        let norm = norm(&patches[i]);
        if norm > T::lit(1e-8) {
            atoms.extend(patches[i].iter().map(|&v| v / norm));
            if atoms.len() == n * m {
                return Ok(atoms);
            }
        }
    }
    Err(SparseError::InsufficientData(format!("fewer than {m} non-zero training patches")))
}

fn residual_of<T: Real>(x: &[T], dict: &Dictionary<T>, code: &SparseCode<T>) -> Vec<T> {
    let approx = dict.reconstruct(code);
    x.iter().zip(approx).map(|(&a, b)| a - b).collect()
}

/// Replaces an unused atom with the normalized residual of the worst-represented patch.
fn reseed<T: Real>(atom: &mut [T], residuals: &[Vec<T>], taken: &mut [bool]) {
    let worst = residuals
        .iter()
        .enumerate()
        .filter(|(i, _)| !taken[*i])
        .map(|(i, r)| (i, norm_sq(r)))
        .fold(None, |best: Option<(usize, T)>, (i, e)| match best {
            Some((_, b)) if b >= e => best,
            _ => Some((i, e)),
        });
    if let Some((i, energy)) = worst {
        taken[i] = true;
        if energy > T::zero() {
            let norm = energy.sqrt();
            for (a, &r) in atom.iter_mut().zip(&residuals[i]) {
                *a = r / norm;
            }
        }
    }
}

/// Rank-1 refit of one atom on the patches that use it, by power iteration
/// warm-started at the current atom. Never increases the objective.
fn update_atom<T: Real>(atom: &mut [T], users: &[(usize, usize)], codes: &mut [SparseCode<T>], residuals: &mut [Vec<T>]) {
    let n = atom.len();
    // columns of E_k: residual with this atom's contribution added back
    let columns: Vec<Vec<T>> = users
        .iter()
        .map(|&(i, p)| {
            let g = codes[i].coefficients[p];
            residuals[i].iter().zip(atom.iter()).map(|(&r, &a)| r + g * a).collect()
        })
        .collect();
    let project = |u: &[T]| -> Vec<T> { columns.iter().map(|e| dot(e, u)).collect() };

    let start = project(atom);
    let start_gain = norm_sq(&start);
    let mut u = atom.to_vec();
    let mut g = start.clone();
    for _ in 0..POWER_STEPS {
        let mut next = vec![T::zero(); n];
        for (e, &c) in columns.iter().zip(&g) {
            for (v, &x) in next.iter_mut().zip(e) {
                *v += c * x;
            }
        }
        let norm = norm(&next);
        if !(norm > T::zero()) {
            break;
        }
        next.iter_mut().for_each(|v| *v /= norm);
        u = next;
        g = project(&u);
    }
    if norm_sq(&g) < start_gain {
        u = atom.to_vec();
        g = start;
    }
    atom.copy_from_slice(&u);
    for ((&(i, p), e), &c) in users.iter().zip(&columns).zip(&g) {
        codes[i].coefficients[p] = c;
        for ((r, &x), &a) in residuals[i].iter_mut().zip(e).zip(atom.iter()) {
            *r = x - c * a;
        }
    }
}
