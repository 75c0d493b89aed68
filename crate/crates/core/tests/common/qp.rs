use rand::Rng;
use rand_chacha::ChaCha8Rng;
use softjpeg::decoder::{HessianOp, Projector};

pub struct Dense {
    pub n: usize,
    pub a: Vec<f64>,
}

impl HessianOp<f64> for Dense {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.a[i * self.n + j] * x[j]).sum()).collect()
    }

    fn norm_bound(&self) -> f64 {
        (0..self.n).map(|i| (0..self.n).map(|j| self.a[i * self.n + j].abs()).sum::<f64>()).fold(0.0, f64::max)
    }
}

pub struct Boxed {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Projector<f64> for Boxed {
    fn project(&self, x: &mut [f64]) {
        for ((v, &l), &h) in x.iter_mut().zip(&self.lo).zip(&self.hi) {
            *v = v.clamp(l, h);
        }
    }
}

pub fn objective(x: &[f64], t: &[f64], op: &Dense, lambda: f64) -> f64 {
    let ax = op.apply(x);
    x.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        + lambda * x.iter().zip(&ax).map(|(a, b)| a * b).sum::<f64>()
}

/// Gaussian elimination with partial pivoting.
pub fn solve_linear(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Vec<f64> {
    let n = rhs.len();
    for c in 0..n {
        let p = (c..n).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
        m.swap(c, p);
        rhs.swap(c, p);
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
            rhs[r] -= f * rhs[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| m[r][k] * x[k]).sum();
        x[r] = (rhs[r] - s) / m[r][r];
    }
    x
}

/// Minimizes over every assignment of each coordinate to {lower, upper, free}.
pub fn brute_force(t: &[f64], op: &Dense, lambda: f64, bx: &Boxed) -> f64 {
    let n = t.len();
    let h = |i: usize, j: usize| f64::from(u8::from(i == j)) + lambda * op.a[i * n + j];
    let mut best = f64::INFINITY;
    for code in 0..3usize.pow(n as u32) {
        let mut state = vec![0u8; n];
        let mut c = code;
        for s in state.iter_mut() {
            *s = (c % 3) as u8;
            c /= 3;
        }
        let mut x = vec![0.0; n];
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        for i in 0..n {
            match state[i] {
                0 => x[i] = bx.lo[i],
                1 => x[i] = bx.hi[i],
                _ => {}
            }
        }
        if !free.is_empty() {
            let m: Vec<Vec<f64>> = free.iter().map(|&i| free.iter().map(|&j| h(i, j)).collect()).collect();
            let rhs: Vec<f64> = free
                .iter()
                .map(|&i| t[i] - (0..n).filter(|j| state[*j] != 2).map(|j| h(i, j) * x[j]).sum::<f64>())
                .collect();
            for (&i, v) in free.iter().zip(solve_linear(m, rhs)) {
                x[i] = v;
            }
        }
        let feasible = (0..n).all(|i| x[i] >= bx.lo[i] - 1e-12 && x[i] <= bx.hi[i] + 1e-12);
        if feasible {
            best = best.min(objective(&x, t, op, lambda));
        }
    }
    best
}

pub fn random_toy(rng: &mut ChaCha8Rng) -> (Vec<f64>, Dense, f64, Boxed) {
    let n = rng.gen_range(1..=10);
    let b: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let a = (0..n * n)
        .map(|ij| {
            let (i, j) = (ij / n, ij % n);
            (0..n).map(|k| b[k * n + i] * b[k * n + j]).sum::<f64>() / n as f64
        })
        .collect();
    let t = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let lo: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..0.5)).collect();
    let hi = lo.iter().map(|l| l + rng.gen_range(0.1..1.5)).collect();
    (t, Dense { n, a }, rng.gen_range(0.0..3.0), Boxed { lo, hi })
}
