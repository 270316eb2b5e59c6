//! Discretization of the Volterra model with `B = b(x)` and
//! `A f = a(x) f(x) + i \int_0^x f(t) dt` on `L^2(0, l)`.
//!
//! On a midpoint grid with spacing `h` the integral becomes
//! `i h (strict lower part) + (i h / 2) diag`, which makes the discrete model
//! an exact chain of elementary factors with `beta^2 = h` and
//! `lambda_k = a(x_k) + i h / 2`. Its triangular roots then give a discrete
//! kernel `K_d = gamma / (i h)` for the root representation
//! `X f = w_1(x) f(x) + i \int_0^x K(x, t) f(t) dt`.

use crate::charfn::char_fn_sample;
use crate::colligation::PencilSystem;
use crate::coupling::{chain_build, ChainFactor, ChainSpec, ContinuousLimitSpec};
use crate::error::{Error, Result};
use crate::factor::{FactorResiduals, FactoredPencil};
use crate::linalg::{c, CMatrix, C64, I};

pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct VolterraModel {
    pub l: f64,
    pub h: f64,
    pub nodes: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Roots of `z^2 + b(x) z + a(x) = 0` at the nodes, `w1 + w2 = -b`.
    pub w1: Vec<C64>,
    pub w2: Vec<C64>,
    pub pencil: PencilSystem,
    pub roots: FactoredPencil,
    /// Discrete kernel, strictly lower triangular.
    pub kernel: CMatrix,
}

/// Roots of `z^2 + b z + a` for real `a`, `b`: with `D = b^2 - 4a`, the square
/// root is `sqrt(D)` for `D >= 0` and `-i sqrt(-D)` otherwise, and
/// `w1 = (-b - sqrt D)/2`, `w2 = (-b + sqrt D)/2`.
pub fn real_roots(b: f64, a: f64) -> (C64, C64) {
    let d = b * b - 4.0 * a;
    let sd = if d >= 0.0 { c(d.sqrt(), 0.0) } else { c(0.0, -(-d).sqrt()) };
    ((-sd - b) * 0.5, (sd - b) * 0.5)
}

pub fn volterra_build(spec: &ContinuousLimitSpec, n: usize) -> Result<VolterraModel> {
    if n == 0 {
        return Err(Error::Grid("need at least one node".into()));
    }
    let (n, h) = if spec.l == 0.0 { (1, 0.0) } else { (n, spec.l / n as f64) };
    let nodes: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) * h).collect();
    let a: Vec<f64> = nodes.iter().map(|&t| spec.a_at(t)).collect();
    let b: Vec<f64> = nodes.iter().map(|&t| spec.b_at(t)).collect();
    let mut w1 = Vec::with_capacity(n);
    let mut w2 = Vec::with_capacity(n);
    for k in 0..n {
        let (r1, r2) = real_roots(b[k], a[k]);
        if (r2 - r1).norm() <= DEGENERACY_TOL {
            return Err(Error::Degenerate(format!(
                "w1 = w2 at x = {} (2 sqrt(a) = -b with a = {}, b = {})",
                nodes[k], a[k], b[k]
            )));
        }
        w1.push(r1);
        w2.push(r2);
    }
    let beta = h.sqrt();
    let chain = ChainSpec {
        factors: (0..n).map(|k| ChainFactor { b: b[k], lambda: c(a[k], 0.5 * h), beta }).collect(),
    };
    let (pencil, roots) = chain_build(&chain)?;
    let kernel = if h > 0.0 {
        CMatrix::from_fn(n, n, |k, s| if k > s { roots.x[(k, s)] / (I * h) } else { c(0.0, 0.0) })
    } else {
        CMatrix::zeros(n, n)
    };
    Ok(VolterraModel { l: spec.l, h, nodes, a, b, w1, w2, pencil, roots, kernel })
}

impl VolterraModel {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root_residuals(&self) -> FactorResiduals {
        self.roots.residuals(&self.pencil)
    }

    /// `max |X~ + Y~ + B~|`.
    pub fn sum_residual(&self) -> f64 {
        crate::linalg::max_abs(&(&self.roots.x + &self.roots.y + &self.pencil.b))
    }

    /// Kernel `{w2(x) - w1(t) - i \int_t^x dxi / (w2 - w1)}^{-1}` with the
    /// integral by the trapezoid rule over the nodes. The diagonal holds
    /// `1 / (w2(x) - w1(x))`.
    pub fn closed_form_kernel(&self) -> CMatrix {
        let n = self.len();
        let inv: Vec<C64> = (0..n).map(|k| (self.w2[k] - self.w1[k]).inv()).collect();
        let mut cum = vec![c(0.0, 0.0); n];
        for k in 1..n {
            cum[k] = cum[k - 1] + (inv[k] + inv[k - 1]) * (0.5 * self.h);
        }
        CMatrix::from_fn(n, n, |k, s| {
            if k < s {
                c(0.0, 0.0)
            } else {
                (self.w2[k] - self.w1[s] - I * (cum[k] - cum[s])).inv()
            }
        })
    }

    /// Max over nodes `x_k > t_s` of
    /// `|(w2(x) - w1(t)) K(x,t) - i \int_t^x K(x,xi) K(xi,t) dxi - 1|`,
    /// with the integral by the trapezoid rule. Diagonal values of `kernel`
    /// are replaced by `1 / (w2 - w1)`.
    pub fn kernel_equation_residual(&self, kernel: &CMatrix) -> f64 {
        let n = self.len();
        let kv = |k: usize, s: usize| if k == s { (self.w2[k] - self.w1[k]).inv() } else { kernel[(k, s)] };
        let mut worst = 0.0f64;
        for k in 1..n {
            for s in 0..k {
                let mut integral = (kv(k, k) * kv(k, s) + kv(k, s) * kv(s, s)) * 0.5;
                for l in s + 1..k {
                    integral += kv(k, l) * kv(l, s);
                }
                integral *= self.h;
                let r = (self.w2[k] - self.w1[s]) * kv(k, s) - I * integral - 1.0;
                worst = worst.max(r.norm());
            }
        }
        worst
    }

    pub fn char_fn(&self, lambda: C64) -> Result<C64> {
        Ok(char_fn_sample(&self.pencil, lambda)?.s[(0, 0)])
    }
}
