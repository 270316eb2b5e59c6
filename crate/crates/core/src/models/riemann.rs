//! Characteristic function of the scalar model pair on `[a, b]` through the
//! solution of a Riemann boundary problem, and the direct grid route it is
//! checked against.
//!
//! With `zeta = lambda + x + b(x)`, `omega = J |v(x)|^2` and
//! `d = (zeta - pi omega) / (zeta + pi omega)`,
//!
//! `S = 1 + i \int_a^b omega / [zeta^2 - pi^2 omega^2]^{1/2}
//!        exp{ (lambda - x)/(2 pi i) PV\int_a^b ln d(t) / ((t - lambda)(t - x)) dt }
//!        dx / (x - lambda)`.
//!
//! The polynomial part of the general solution is taken to be zero, which is
//! what the normalization `S(infinity) = 1` requires.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use super::{model_pencil, GridModel};
use crate::charfn::char_fn_sample;
use crate::error::{Error, Result};
use crate::linalg::{c, C64, I};
use crate::quad::graded_gauss;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type ComplexFn = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

#[derive(Clone)]
pub struct RiemannProblemData {
    pub lo: f64,
    pub hi: f64,
    pub v: ComplexFn,
    pub mult_b: RealFn,
    pub j: f64,
}

impl std::fmt::Debug for RiemannProblemData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RiemannProblemData {{ [{}, {}], J = {} }}", self.lo, self.hi, self.j)
    }
}

/// Quadrature settings. Inner and outer node counts must differ so that no
/// inner node lands on an outer one.
#[derive(Debug, Clone, Copy)]
pub struct RiemannQuad {
    pub n_outer: usize,
    pub n_inner: usize,
    pub grading: f64,
    /// Points of the reference grid used to unwrap `ln d`.
    pub log_ref: usize,
}

impl Default for RiemannQuad {
    fn default() -> Self {
        RiemannQuad { n_outer: 301, n_inner: 400, grading: 3.0, log_ref: 20001 }
    }
}

impl RiemannProblemData {
    pub fn new(lo: f64, hi: f64, v: ComplexFn, mult_b: RealFn, j: f64) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Grid(format!("need a finite interval with a < b, got [{lo}, {hi}]")));
        }
        if j != 1.0 && j != -1.0 {
            return Err(Error::Invalid(format!("J must be +1 or -1, got {j}")));
        }
        Ok(RiemannProblemData { lo, hi, v, mult_b, j })
    }

    pub fn zeta(&self, lambda: C64, x: f64) -> C64 {
        lambda + x + (self.mult_b)(x)
    }

    pub fn omega(&self, x: f64) -> f64 {
        self.j * (self.v)(x).norm_sqr()
    }

    pub fn d(&self, lambda: C64, x: f64) -> C64 {
        let (z, w) = (self.zeta(lambda, x), PI * self.omega(x));
        (z - w) / (z + w)
    }

    /// Midpoint grid of `n` nodes carrying the same data.
    pub fn grid(&self, n: usize) -> Result<GridModel> {
        let v = self.v.clone();
        let b = self.mult_b.clone();
        GridModel::midpoint(self.lo, self.hi, n, move |x| vec![v(x)], move |x| b(x), vec![self.j])
    }

    fn check_point(&self, lambda: C64, x: f64) -> Result<()> {
        let (z, w) = (self.zeta(lambda, x), PI * self.omega(x));
        let scale = z.norm() + w.abs() + 1.0;
        if (z - w).norm() <= 1e-12 * scale || (z + w).norm() <= 1e-12 * scale {
            return Err(Error::Inadmissible(format!("zeta +- pi omega vanishes at x = {x} for lambda = {lambda}")));
        }
        Ok(())
    }
}

/// Continuous branch of `ln d(., lambda)` on `[a, b]`, anchored at the
/// principal value at `a` and unwrapped along a fine reference grid.
struct ContinuousLog<'a> {
    r: &'a RiemannProblemData,
    lambda: C64,
    step: f64,
    reference: Vec<C64>,
}

impl<'a> ContinuousLog<'a> {
    fn new(r: &'a RiemannProblemData, lambda: C64, m: usize) -> Result<Self> {
        let m = m.max(2);
        let step = (r.hi - r.lo) / (m - 1) as f64;
        let mut reference = Vec::with_capacity(m);
        let mut prev = 0.0;
        for k in 0..m {
            let x = r.lo + k as f64 * step;
            r.check_point(lambda, x)?;
            let p = r.d(lambda, x).ln();
            let im = if k == 0 { p.im } else { p.im + 2.0 * PI * ((prev - p.im) / (2.0 * PI)).round() };
            prev = im;
            reference.push(c(p.re, im));
        }
        Ok(ContinuousLog { r, lambda, step, reference })
    }

    fn eval(&self, x: f64) -> C64 {
        let pos = ((x - self.r.lo) / self.step).clamp(0.0, (self.reference.len() - 1) as f64);
        let k = (pos.floor() as usize).min(self.reference.len() - 2);
        let w = pos - k as f64;
        let ref_im = self.reference[k].im * (1.0 - w) + self.reference[k + 1].im * w;
        let p = self.r.d(self.lambda, x).ln();
        c(p.re, p.im + 2.0 * PI * ((ref_im - p.im) / (2.0 * PI)).round())
    }
}

pub fn riemann_charfn_scalar(r: &RiemannProblemData, lambda: C64) -> Result<C64> {
    riemann_charfn_scalar_with(r, lambda, &RiemannQuad::default())
}

pub fn riemann_charfn_scalar_with(r: &RiemannProblemData, lambda: C64, q: &RiemannQuad) -> Result<C64> {
    if q.n_inner == q.n_outer || q.n_inner == 0 || q.n_outer == 0 {
        return Err(Error::Invalid("inner and outer node counts must be positive and different".into()));
    }
    let width = r.hi - r.lo;
    if lambda.im.abs() <= 1e-12 * (1.0 + lambda.norm()) && lambda.re >= r.lo && lambda.re <= r.hi {
        return Err(Error::Inadmissible(format!("lambda = {lambda} lies on [{}, {}]", r.lo, r.hi)));
    }
    let lnd = ContinuousLog::new(r, lambda, q.log_ref)?;
    let (t, wt) = graded_gauss(q.n_inner, r.lo, r.hi, q.grading);
    let (xs, wx) = graded_gauss(q.n_outer, r.lo, r.hi, q.grading);
    for &x in t.iter().chain(&xs) {
        r.check_point(lambda, x)?;
    }
    let g: Vec<C64> = t.iter().map(|&ti| lnd.eval(ti) / (ti - lambda)).collect();
    let terms: Vec<C64> = xs
        .par_iter()
        .zip(wx.par_iter())
        .map(|(&x, &w)| {
            let om = r.omega(x);
            if om == 0.0 {
                return c(0.0, 0.0);
            }
            let lx = lnd.eval(x);
            let gx = lx / (x - lambda);
            let mut pv = gx * ((r.hi - x) / (x - r.lo)).ln();
            for (k, &ti) in t.iter().enumerate() {
                if (ti - x).abs() > 1e-15 * width {
                    pv += (g[k] - gx) * (wt[k] / (ti - x));
                }
            }
            let root = (lx * 0.5).exp() * (r.zeta(lambda, x) + PI * om);
            let expo = ((lambda - x) / (I * (2.0 * PI))) * pv;
            expo.exp() * (w * om) / (root * (x - lambda))
        })
        .collect();
    let total: C64 = terms.iter().sum();
    let s = c(1.0, 0.0) + I * total;
    if !s.re.is_finite() || !s.im.is_finite() {
        return Err(Error::Numerical(format!("non-finite result at lambda = {lambda}")));
    }
    Ok(s)
}

/// Characteristic function of the model pencil on a midpoint grid of `n`
/// nodes, `1 - i phi~ (lambda - X~)^{-1} (lambda - Y~)^{-1} phi~* J`.
pub fn riemann_charfn_direct(r: &RiemannProblemData, lambda: C64, n: usize) -> Result<C64> {
    let g = r.grid(n)?;
    let (p, _) = model_pencil(&g)?;
    Ok(char_fn_sample(&p, lambda)?.s[(0, 0)])
}
