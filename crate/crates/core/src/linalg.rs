//! Small dense linear-algebra helpers shared by the benchmark suite and the
//! analysis tools. Matrices are row-major `Vec<f64>`.

use crate::rng::SplitMix64;

/// y = A x for a square row-major matrix.
pub fn matvec(a: &[f64], x: &[f64], out: &mut [f64]) {
    let d = x.len();
    debug_assert_eq!(a.len(), d * d);
    for (r, slot) in out.iter_mut().enumerate() {
        let row = &a[r * d..(r + 1) * d];
        *slot = row.iter().zip(x).map(|(m, v)| m * v).sum();
    }
}

pub fn identity(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

/// Random orthogonal matrix: Householder QR of a seeded Gaussian matrix with
/// the sign convention `diag(R) > 0`, which makes the factor unique and the
/// result Haar-distributed.
pub fn random_orthogonal(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = SplitMix64::new(seed);
    let mut a: Vec<f64> = (0..d * d).map(|_| rng.normal()).collect();
    let mut q = identity(d);

    // Householder vectors applied in place; Q accumulated alongside.
    let mut v = vec![0.0; d];
    for k in 0..d {
        let mut norm2 = 0.0;
        for i in k..d {
            norm2 += a[i * d + k] * a[i * d + k];
        }
        let norm = norm2.sqrt();
        if norm == 0.0 {
            continue;
        }
        let akk = a[k * d + k];
        let alpha = if akk >= 0.0 { -norm } else { norm };
        for i in k..d {
            v[i] = a[i * d + k];
        }
        v[k] -= alpha;
        let vnorm2: f64 = v[k..d].iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // A <- (I - 2 v v^T / |v|^2) A
        for j in k..d {
            let dot: f64 = (k..d).map(|i| v[i] * a[i * d + j]).sum();
            let scale = 2.0 * dot / vnorm2;
            for i in k..d {
                a[i * d + j] -= scale * v[i];
            }
        }
        // Q <- (I - 2 v v^T / |v|^2) Q   (accumulates H_{d-1}..H_0, i.e. Q^T)
        for j in 0..d {
            let dot: f64 = (k..d).map(|i| v[i] * q[i * d + j]).sum();
            let scale = 2.0 * dot / vnorm2;
            for i in k..d {
                q[i * d + j] -= scale * v[i];
            }
        }
    }
    // Here q = H_{d-1}...H_0 = Q^T and a = R. Fix signs so diag(R) > 0,
    // then return Q = (sign-fixed q)^T.
    for k in 0..d {
        if a[k * d + k] < 0.0 {
            for j in 0..d {
                q[k * d + j] = -q[k * d + j];
            }
        }
    }
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = q[j * d + i];
        }
    }
    out
}

/// Solve `A x = b` in place by Gaussian elimination with partial pivoting.
/// `a` is `n x n` row-major and is consumed. Returns `None` when a pivot
/// underflows (singular system).
pub fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    for col in 0..n {
        let mut pivot = col;
        for r in col + 1..n {
            if a[r * n + col].abs() > a[pivot * n + col].abs() {
                pivot = r;
            }
        }
        if a[pivot * n + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                a.swap(col * n + j, pivot * n + j);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * n + col];
        for r in col + 1..n {
            let factor = a[r * n + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                a[r * n + j] -= factor * a[col * n + j];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for j in col + 1..n {
            acc -= a[col * n + j] * x[j];
        }
        x[col] = acc / a[col * n + col];
    }
    Some(x)
}

/// max |(M^T M - I)_{ij}|, a cheap orthogonality residual.
pub fn orthogonality_residual(m: &[f64], d: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let dot: f64 = (0..d).map(|k| m[k * d + i] * m[k * d + j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_factors_are_orthogonal() {
        for d in [2usize, 3, 5, 10, 20] {
            for seed in 0..5u64 {
                let q = random_orthogonal(d, seed);
                assert!(
                    orthogonality_residual(&q, d) < 1e-12,
                    "d={d} seed={seed}"
                );
            }
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(random_orthogonal(7, 42), random_orthogonal(7, 42));
        assert_ne!(random_orthogonal(7, 42), random_orthogonal(7, 43));
    }

    #[test]
    fn matvec_identity() {
        let m = identity(3);
        let mut out = vec![0.0; 3];
        matvec(&m, &[1.0, 2.0, 3.0], &mut out);
        assert_eq!(out, vec![1.0, 2.0, 3.0]);
    }
}
