use crate::scalar::Real;

const MAX_SWEEPS: usize = 100;

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// `a` is a row-major `n × n` symmetric matrix. Returns ascending eigenvalues and
/// the matching orthonormal eigenvectors as columns of a row-major matrix, each
/// signed so that its largest-magnitude entry is positive. `None` if the sweep
/// budget runs out.
pub fn symmetric_eigen<T: Real>(a: &[T], n: usize) -> Option<(Vec<T>, Vec<T>)> {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let scale = m.iter().map(|&x| x * x).sum::<T>().sqrt();
    let tol = T::epsilon() * T::lit(4.0) * scale;
    let mut converged = n < 2 || scale == T::zero();
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let off = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| m[p * n + q] * m[p * n + q])
            .sum::<T>()
            .sqrt();
        if off <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() <= T::min_positive_value() {
                    continue;
                }
                let (app, aqq) = (m[p * n + p], m[q * n + q]);
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = (t * t + T::one()).sqrt().recip();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k * n + p], m[k * n + q]);
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p * n + k], m[q * n + k]);
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].partial_cmp(&m[j * n + j]).expect("finite eigenvalues"));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = vec![T::zero(); n * n];
    for (col, &src) in order.iter().enumerate() {
        let peak = (0..n)
            .map(|k| v[k * n + src])
            .fold(T::zero(), |best, x| if x.abs() > best.abs() { x } else { best });
        let sign = if peak < T::zero() { -T::one() } else { T::one() };
        for k in 0..n {
            vectors[k * n + col] = sign * v[k * n + src];
        }
    }
    Some((values, vectors))
}
