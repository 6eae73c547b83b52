//! Small dense vector/matrix helpers shared across the crate.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub(crate) fn scale(a: &[f64], c: f64) -> Vec<f64> {
    a.iter().map(|x| c * x).collect()
}

/// y += c * x
pub(crate) fn axpy(y: &mut [f64], c: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Euclidean projection onto {x >= 0, sum(x) = scale} by the sort-based rule.
pub(crate) fn project_simplex(v: &[f64], scale: f64) -> Vec<f64> {
    let n = v.len();
    if n == 0 {
        return Vec::new();
    }
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut rho = 0usize;
    let mut theta = 0.0;
    for (j, uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - scale) / (j + 1) as f64;
        if uj - t > 0.0 {
            rho = j + 1;
            theta = t;
        }
    }
    debug_assert!(rho > 0);
    let _ = rho;
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Dense symmetric matrix-vector product; `m` is row-major n*n.
pub(crate) fn mat_vec(m: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for i in 0..n {
        out[i] = dot(&m[i * n..(i + 1) * n], x);
    }
    out
}

/// Spectral norm of a symmetric matrix by power iteration on M^2
/// (squaring makes sign-tied extreme eigenvalues converge too).
/// Relative tolerance on the Rayleigh quotient of M^2.
pub(crate) fn spectral_norm_sym(m: &[f64], n: usize, rel_tol: f64, max_iter: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    // deterministic start, not orthogonal to anything in practice
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * (i as f64 + 1.0).sin()).collect();
    let nv = norm(&v);
    for x in v.iter_mut() {
        *x /= nv;
    }
    let mut lambda_sq = 0.0_f64;
    for _ in 0..max_iter {
        let w = mat_vec(m, n, &v);
        let w2 = mat_vec(m, n, &w); // M^2 v
        let new_lambda_sq = dot(&v, &w2).max(0.0);
        let nw = norm(&w2);
        if nw <= f64::MIN_POSITIVE {
            return 0.0;
        }
        for (vi, wi) in v.iter_mut().zip(&w2) {
            *vi = wi / nw;
        }
        if (new_lambda_sq - lambda_sq).abs() <= rel_tol * new_lambda_sq.max(f64::MIN_POSITIVE) {
            return new_lambda_sq.sqrt();
        }
        lambda_sq = new_lambda_sq;
    }
    lambda_sq.sqrt()
}

/// Smallest eigenvalue of a symmetric matrix via a shifted power iteration:
/// lambda_min(M) = s - lambda_max(s*I - M) with s = ||M||.
pub(crate) fn min_eigenvalue_sym(m: &[f64], n: usize, rel_tol: f64, max_iter: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let s = spectral_norm_sym(m, n, rel_tol, max_iter);
    if s == 0.0 {
        return 0.0;
    }
    // shifted = s*I - M, spectrum in [0, s - lambda_min] (all nonnegative)
    let mut shifted = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            shifted[i * n + j] = if i == j { s - m[i * n + j] } else { -m[i * n + j] };
        }
    }
    let top = spectral_norm_sym(&shifted, n, rel_tol, max_iter);
    s - top
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_norm_of_diag() {
        let m = vec![1.0, 0.0, 0.0, 4.0];
        let s = spectral_norm_sym(&m, 2, 1e-10, 100_000);
        assert!((s - 4.0).abs() < 1e-8, "got {s}");
    }

    #[test]
    fn spectral_norm_handles_sign_ties() {
        // eigenvalues +2 and -2: plain power iteration oscillates, M^2 does not
        let m = vec![0.0, 2.0, 2.0, 0.0];
        let s = spectral_norm_sym(&m, 2, 1e-10, 100_000);
        assert!((s - 2.0).abs() < 1e-8, "got {s}");
    }

    #[test]
    fn min_eigenvalue_of_indefinite() {
        let m = vec![1.0, 0.0, 0.0, -3.0];
        let lo = min_eigenvalue_sym(&m, 2, 1e-10, 100_000);
        assert!((lo + 3.0).abs() < 1e-7, "got {lo}");
    }

    #[test]
    fn zero_matrix() {
        let m = vec![0.0; 9];
        assert_eq!(spectral_norm_sym(&m, 3, 1e-10, 1000), 0.0);
        assert_eq!(min_eigenvalue_sym(&m, 3, 1e-10, 1000), 0.0);
    }
}
