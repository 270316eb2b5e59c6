//! Characteristic functions `S(lambda) = I - i phi L^{-1}(lambda) phi* sigma`
//! and `V(lambda) = phi L_R^{-1}(lambda) phi*`, their metric relations, and
//! sign regions of `1 - |S|^2` for scalar chains.

use rayon::prelude::*;

use crate::colligation::{resolvent_eval, resolvent_parts, PencilSystem};
use crate::error::{Error, Result};
use crate::linalg::{self, c, eye, spectral_norm, CMatrix, C64, I};

#[derive(Debug, Clone)]
pub struct CharFnSample {
    pub lambda: C64,
    pub s: CMatrix,
    pub residual_metric: Option<f64>,
}

pub fn char_fn_sample(p: &PencilSystem, lambda: C64) -> Result<CharFnSample> {
    let m = p.colligation.dim_e();
    let linv = resolvent_eval(p, lambda)?;
    let s = eye(m) - p.phi() * linv * p.phi().adjoint() * p.sigma() * I;
    Ok(CharFnSample { lambda, s, residual_metric: None })
}

fn near_conjugate(lambda: C64, w: C64) -> bool {
    (lambda - w.conj()).norm() <= 1e-12 * (1.0 + lambda.norm())
}

/// Residual of the metric relation
/// `i/(lambda - conj w) (sigma - S*(w) sigma S(lambda))
///   = sigma phi L*(w)^{-1} [(lambda + conj w) I + B] L^{-1}(lambda) phi* sigma`.
pub fn metric_relation_residual(p: &PencilSystem, lambda: C64, w: C64) -> Result<f64> {
    if near_conjugate(lambda, w) {
        return Err(Error::RemovableSingularity);
    }
    let n = p.n();
    let sigma = p.sigma();
    let sl = char_fn_sample(p, lambda)?.s;
    let sw = char_fn_sample(p, w)?.s;
    let lhs = (sigma - sw.adjoint() * sigma * &sl) * (I / (lambda - w.conj()));
    let ll = resolvent_eval(p, lambda)?;
    let lw = resolvent_eval(p, w)?;
    let mid = eye(n) * (lambda + w.conj()) + &p.b;
    let rhs = sigma * p.phi() * lw.adjoint() * mid * ll * p.phi().adjoint() * sigma;
    Ok(spectral_norm(&(lhs - rhs)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdentityStatus {
    /// `V = 2i (S - I)(S + I)^{-1} sigma^{-1}` holds within tolerance.
    Verified,
    Mismatch,
    /// `S + I` or `sigma` is singular, so the right side is undefined.
    Unverifiable,
}

#[derive(Debug, Clone)]
pub struct VSample {
    pub lambda: C64,
    pub v: CMatrix,
    pub identity_residual: Option<f64>,
    pub status: IdentityStatus,
}

pub const V_IDENTITY_TOL: f64 = 1e-9;

fn real_part_op(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * c(0.5, 0.0)
}

/// `V(lambda) = phi L_R^{-1}(lambda) phi*` with `L_R = lambda^2 + lambda B + (A + A*)/2`,
/// checked against the fractional-linear expression in `S`.
pub fn v_function(p: &PencilSystem, lambda: C64) -> Result<VSample> {
    let ar = real_part_op(p.a());
    let lr = resolvent_parts(&ar, &p.b, lambda)?;
    let v = p.phi() * lr * p.phi().adjoint();
    let m = p.colligation.dim_e();
    let mut status = IdentityStatus::Unverifiable;
    let mut identity_residual = None;
    if m > 0 {
        let s = char_fn_sample(p, lambda)?.s;
        let inv_sp = linalg::inverse(&(&s + eye(m)));
        let inv_sigma = linalg::inverse(p.sigma());
        if let (Ok(a), Ok(b)) = (inv_sp, inv_sigma) {
            let rhs = (&s - eye(m)) * a * b * (I * 2.0);
            let r = spectral_norm(&(&v - rhs));
            identity_residual = Some(r);
            status = if r <= V_IDENTITY_TOL * (1.0 + spectral_norm(&v)) {
                IdentityStatus::Verified
            } else {
                IdentityStatus::Mismatch
            };
        }
    }
    Ok(VSample { lambda, v, identity_residual, status })
}

/// Residual of
/// `(V(lambda) - V*(w))/(lambda - conj w) = -phi L_R*(w)^{-1} [(lambda + conj w) I + B] L_R^{-1}(lambda) phi*`.
pub fn v_metric_residual(p: &PencilSystem, lambda: C64, w: C64) -> Result<f64> {
    if near_conjugate(lambda, w) {
        return Err(Error::RemovableSingularity);
    }
    let n = p.n();
    let ar = real_part_op(p.a());
    let vl = v_function(p, lambda)?.v;
    let vw = v_function(p, w)?.v;
    let lhs = (vl - vw.adjoint()) / (lambda - w.conj());
    let ll = resolvent_parts(&ar, &p.b, lambda)?;
    let lw = resolvent_parts(&ar, &p.b, w)?;
    let mid = eye(n) * (lambda + w.conj()) + &p.b;
    let rhs = -(p.phi() * lw.adjoint() * mid * ll * p.phi().adjoint());
    Ok(spectral_norm(&(lhs - rhs)))
}

#[derive(Debug, Clone)]
pub struct AsymptoticCheck {
    pub radius: f64,
    pub deviation: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Check `||S(R d) - I|| <= 2 ||phi||^2 ||sigma|| / R^2` in direction `d`
/// for `R` ten times a bound on the pencil spectral radius.
pub fn asymptotic_probe(p: &PencilSystem, direction: C64) -> Result<AsymptoticCheck> {
    let d = direction / direction.norm();
    let r0 = spectral_norm(&p.b) + spectral_norm(p.a()).sqrt();
    let radius = 10.0 * r0.max(1.0);
    let m = p.colligation.dim_e();
    let s = char_fn_sample(p, d * radius)?.s;
    let deviation = spectral_norm(&(s - eye(m)));
    let np = spectral_norm(p.phi());
    let bound = 2.0 * np * np * spectral_norm(p.sigma()) / (radius * radius);
    Ok(AsymptoticCheck { radius, deviation, bound, pass: deviation <= bound })
}

/// Rectangle of sample points `re0:re1:n,im0:im1:m`, row-major in the
/// imaginary part (outer) and real part (inner).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaGrid {
    pub re: (f64, f64, usize),
    pub im: (f64, f64, usize),
}

impl LambdaGrid {
    pub fn parse(s: &str) -> Result<Self> {
        let axis = |part: &str| -> Result<(f64, f64, usize)> {
            let f: Vec<&str> = part.split(':').collect();
            if f.len() != 3 {
                return Err(Error::Parse(format!("grid axis '{part}' must be a:b:n")));
            }
            let a: f64 = f[0].trim().parse().map_err(|_| Error::Parse(format!("bad number '{}'", f[0])))?;
            let b: f64 = f[1].trim().parse().map_err(|_| Error::Parse(format!("bad number '{}'", f[1])))?;
            let n: usize = f[2].trim().parse().map_err(|_| Error::Parse(format!("bad count '{}'", f[2])))?;
            if n == 0 || !a.is_finite() || !b.is_finite() {
                return Err(Error::Parse(format!("grid axis '{part}' is empty or non-finite")));
            }
            Ok((a, b, n))
        };
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::Parse(format!("grid '{s}' must be re0:re1:n,im0:im1:m")));
        }
        Ok(LambdaGrid { re: axis(parts[0])?, im: axis(parts[1])? })
    }

    fn axis_points((a, b, n): (f64, f64, usize)) -> Vec<f64> {
        if n == 1 {
            return vec![a];
        }
        (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
    }

    pub fn points(&self) -> Vec<C64> {
        let re = Self::axis_points(self.re);
        let im = Self::axis_points(self.im);
        im.iter().flat_map(|&y| re.iter().map(move |&x| c(x, y))).collect()
    }
}

/// Evaluate `f` at each point in parallel; results keep the input order.
pub fn sweep<T: Send, F>(points: &[C64], f: F) -> Vec<Result<T>>
where
    F: Fn(C64) -> Result<T> + Sync + Send,
{
    points.par_iter().map(|&z| f(z)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignRegion {
    Positive,
    Zero,
    Negative,
    /// Between the lines `Re = -b_1/2` and `Re = -b_N/2`, where factors of
    /// both signs combine.
    Indeterminate,
    /// Within the band of a dividing line that is not a zero set.
    Boundary,
}

#[derive(Debug, Clone)]
pub struct SignRegionQuery {
    pub lambda: C64,
    pub b_list: Vec<f64>,
}

pub const SIGN_BAND: f64 = 1e-10;

/// Predicted sign of `1 - |S(lambda)|^2` for a scalar chain with dissipation
/// constants `b_1 >= ... >= b_N`.
///
/// With `x = Re lambda`, `y = Im lambda`, each factor contributes the sign
/// of `y (x + b_k/2)`; the product has a definite sign when all agree.
pub fn sign_region(q: &SignRegionQuery) -> Result<SignRegion> {
    sign_region_with_band(q, SIGN_BAND)
}

pub fn sign_region_with_band(q: &SignRegionQuery, band: f64) -> Result<SignRegion> {
    let b = &q.b_list;
    if b.is_empty() {
        return Err(Error::Invalid("b_list must be nonempty".into()));
    }
    if b.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Invalid("b_list must be sorted non-increasing".into()));
    }
    let (x, y) = (q.lambda.re, q.lambda.im);
    let left = -b[0] / 2.0;
    let right = -b[b.len() - 1] / 2.0;
    if y.abs() <= band {
        return Ok(SignRegion::Zero);
    }
    let all_equal = right - left <= band;
    if all_equal && (x - left).abs() <= band {
        return Ok(SignRegion::Zero);
    }
    if (x - left).abs() <= band || (x - right).abs() <= band {
        return Ok(SignRegion::Boundary);
    }
    if x > right {
        Ok(if y > 0.0 { SignRegion::Positive } else { SignRegion::Negative })
    } else if x < left {
        Ok(if y > 0.0 { SignRegion::Negative } else { SignRegion::Positive })
    } else {
        Ok(SignRegion::Indeterminate)
    }
}

/// Sign of a computed value of `1 - |S|^2`, with `|value| <= tol` read as zero.
pub fn classify_value(value: f64, tol: f64) -> SignRegion {
    if value.abs() <= tol {
        SignRegion::Zero
    } else if value > 0.0 {
        SignRegion::Positive
    } else {
        SignRegion::Negative
    }
}
