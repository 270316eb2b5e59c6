//! One-dimensional quadrature rules.

use crate::linalg::{c, C64};

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss-Legendre rule on `[a, b]` after the endpoint-clustering substitution
/// `u = s^q / (s^q + (1-s)^q)`, suited to integrands with weak endpoint
/// singularities.
pub fn graded_gauss(n: usize, a: f64, b: f64, q: f64) -> (Vec<f64>, Vec<f64>) {
    let (g, gw) = gauss_legendre(n);
    let mut x = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for (gi, wi) in g.iter().zip(&gw) {
        let s = 0.5 * (gi + 1.0);
        let (sq, rq) = (s.powf(q), (1.0 - s).powf(q));
        let den = sq + rq;
        let u = sq / den;
        let du = q * s.powf(q - 1.0) * (1.0 - s).powf(q - 1.0) / (den * den);
        x.push(a + (b - a) * u);
        w.push(0.5 * wi * du * (b - a));
    }
    (x, w)
}

/// Adaptive Simpson quadrature of a complex integrand with absolute
/// tolerance `tol`. Returns the estimate and whether the tolerance was met
/// everywhere before the depth limit.
pub fn adaptive_simpson<F: FnMut(f64) -> C64>(mut f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> (C64, bool) {
    if a == b {
        return (c(0.0, 0.0), true);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (fa + fm * 4.0 + fb) * ((b - a) / 6.0);
    let mut ok = true;
    let v = simpson_rec(&mut f, a, b, fa, fm, fb, whole, tol, max_depth, &mut ok);
    (v, ok)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: FnMut(f64) -> C64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: C64,
    fm: C64,
    fb: C64,
    whole: C64,
    tol: f64,
    depth: u32,
    ok: &mut bool,
) -> C64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (fa + flm * 4.0 + fm) * ((m - a) / 6.0);
    let right = (fm + frm * 4.0 + fb) * ((b - m) / 6.0);
    let delta = left + right - whole;
    if depth == 0 {
        *ok = false;
        return left + right + delta / 15.0;
    }
    if delta.norm() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, ok)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 10, 33] {
            let (x, w) = gauss_legendre(n);
            let deg = 2 * n - 1;
            let s: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((s - exact).abs() < 1e-13, "n={n}");
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn graded_rule_handles_log_endpoint() {
        let (x, w) = graded_gauss(60, 0.0, 1.0, 3.0);
        let s: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.ln()).sum();
        assert!((s + 1.0).abs() < 1e-10);
    }

    #[test]
    fn simpson_exponential() {
        let (v, ok) = adaptive_simpson(|t| c(0.0, t).exp(), 0.0, 2.0, 1e-12, 40);
        let exact = (c(0.0, 2.0).exp() - 1.0) / c(0.0, 1.0);
        assert!(ok);
        assert!((v - exact).norm() < 1e-11);
    }
}
