//! Small numeric helpers: 1-D least squares, low-discrepancy sampling,
//! spectral norms, Gauss-Legendre nodes.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares y = slope*x + intercept with R^2.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "need >= 2 paired samples, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit { slope, intercept, r2 })
}

/// i-th element of the Halton sequence in the given prime base, in (0,1).
pub fn halton(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Spectral norm estimate by power iteration on A* A.
pub fn spectral_norm(a: &DMatrix<Complex64>, iters: usize) -> f64 {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return 0.0;
    }
    // Deterministic start vector with all frequencies populated.
    let mut v = nalgebra::DVector::<Complex64>::from_fn(n, |i, _| {
        Complex64::new(1.0 + (i as f64 * 0.7).sin(), (i as f64 * 1.3).cos())
    });
    let mut norm = 0.0;
    for _ in 0..iters {
        let av = a * &v;
        let atav = a.adjoint() * &av;
        let vn = atav.norm();
        if vn == 0.0 {
            return 0.0;
        }
        norm = av.norm() / v.norm();
        v = atav / Complex64::new(vn, 0.0);
    }
    norm
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess for the i-th positive root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // p_n(x) and p_n'(x) via the Bonnet recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Scale Gauss-Legendre nodes/weights to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        xs.iter().map(|x| mid + half * x).collect(),
        ws.iter().map(|w| w * half).collect(),
    )
}

/// FNV-1a hash of a byte string, for config fingerprints in manifests.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        // n nodes are exact through degree 2n-1.
        let (xs, ws) = gauss_legendre(5);
        let int_x8: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.powi(8)).sum();
        assert!((int_x8 - 2.0 / 9.0).abs() < 1e-13);
        let (xs, ws) = gauss_legendre_on(20, 0.0, 1.0);
        let int: f64 = xs.iter().zip(&ws).map(|(x, w)| w * (3.0 * x).exp()).sum();
        assert!((int - ((3.0f64).exp() - 1.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn linear_fit_recovers_exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [2.0, 4.0, 6.0, 8.0];
        let f = linear_fit(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14);
        assert!(f.intercept.abs() < 1e-13);
        assert!((f.r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn halton_is_in_unit_interval_and_low_discrepancy() {
        let pts: Vec<f64> = (1..=64).map(|i| halton(i, 2)).collect();
        assert!(pts.iter().all(|&p| (0.0..1.0).contains(&p)));
        // First few base-2 values are the van der Corput sequence.
        assert_eq!(pts[0], 0.5);
        assert_eq!(pts[1], 0.25);
        assert_eq!(pts[2], 0.75);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let mut a = DMatrix::<Complex64>::zeros(3, 3);
        a[(0, 0)] = Complex64::new(2.0, 0.0);
        a[(1, 1)] = Complex64::new(-5.0, 0.0);
        a[(2, 2)] = Complex64::new(1.0, 1.0);
        assert!((spectral_norm(&a, 60) - 5.0).abs() < 1e-9);
    }
}
