//! Coupling of open systems, synthesis of triangular roots, scalar chains of
//! elementary factors and their continuous limit.

use std::sync::Arc;

use crate::colligation::{Colligation, PencilSystem, SpectrumInfo};
use crate::error::{Error, Result};
use crate::factor::{coupling_k_sylvester, FactoredPencil, Method};
use crate::linalg::{self, block2, block_diag, c, hstack, zeros, CMatrix, C64, I};
use crate::quad::adaptive_simpson;

#[derive(Debug, Clone)]
pub struct CoupledSystem {
    pub system: PencilSystem,
    pub parts: (PencilSystem, PencilSystem),
}

/// Couple two open systems with the same channel space: the output of the
/// first drives the second.
///
/// `A~ = [[A1, 0], [i phi2* sigma phi1, A2]]`, `phi~ = [phi1, phi2]`,
/// `B~ = diag(B1, B2)`.
pub fn couple(p1: &PencilSystem, p2: &PencilSystem) -> Result<CoupledSystem> {
    let (s1, s2) = (p1.sigma(), p2.sigma());
    if s1.shape() != s2.shape() {
        return Err(Error::CouplingIncompatible(format!(
            "channel dimensions {} and {} differ",
            s1.nrows(),
            s2.nrows()
        )));
    }
    if s1 != s2 {
        return Err(Error::CouplingIncompatible("signatures differ".into()));
    }
    let link = p2.phi().adjoint() * s1 * p1.phi() * I;
    let a = block2(p1.a(), &zeros(p1.n(), p2.n()), &link, p2.a());
    let phi = hstack(p1.phi(), p2.phi());
    let col = Colligation::new(a, phi, s1.clone())?;
    let system = PencilSystem::new(col, block_diag(&p1.b, &p2.b))?;
    Ok(CoupledSystem { system, parts: (p1.clone(), p2.clone()) })
}

/// Roots of the coupled pencil from roots of the parts:
/// `X~ = [[X1, 0], [g, X2]]`, `Y~ = [[Y1, 0], [-g, Y2]]` with
/// `Y2 g - g X1 = i phi2* sigma phi1`.
pub fn synthesize_roots(cs: &CoupledSystem, f1: &FactoredPencil, f2: &FactoredPencil) -> Result<FactoredPencil> {
    let (p1, p2) = &cs.parts;
    if f1.n() != p1.n() || f2.n() != p2.n() {
        return Err(Error::Dimension("root sizes do not match the coupled parts".into()));
    }
    let rhs = p2.phi().adjoint() * p2.sigma() * p1.phi() * I;
    let (gamma, _) = linalg::sylvester(&f2.y, &(-&f1.x), &rhs)?;
    let (n1, n2) = (p1.n(), p2.n());
    let x = block2(&f1.x, &zeros(n1, n2), &gamma, &f2.x);
    let y = block2(&f1.y, &zeros(n1, n2), &(-&gamma), &f2.y);
    let sx: Vec<C64> = f1.spec_x.eigenvalues.iter().chain(&f2.spec_x.eigenvalues).copied().collect();
    let sy: Vec<C64> = f1.spec_y.eigenvalues.iter().chain(&f2.spec_y.eigenvalues).copied().collect();
    let sep = linalg::set_distance(&sx, &sy);
    let mut f = FactoredPencil {
        x,
        y,
        k: zeros(n1 + n2, n1 + n2),
        spec_x: SpectrumInfo { eigenvalues: sx, separation: sep },
        spec_y: SpectrumInfo { eigenvalues: sy, separation: sep },
        method: f1.method,
        graph_cond: f1.graph_cond.max(f2.graph_cond),
        iterations: 0,
    };
    f.k = coupling_k_sylvester(&f)?;
    Ok(f)
}

/// One elementary factor `(b, lambda, beta)` with `lambda - conj(lambda) = i beta^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainFactor {
    pub b: f64,
    pub lambda: C64,
    pub beta: f64,
}

impl ChainFactor {
    /// Factor with `beta = sqrt(2 Im lambda)`.
    pub fn new(b: f64, lambda: C64) -> Result<Self> {
        if !(lambda.im > 0.0) || !b.is_finite() || !lambda.re.is_finite() || !lambda.im.is_finite() {
            return Err(Error::Invalid(format!("need finite b and Im lambda > 0 (b = {b}, lambda = {lambda})")));
        }
        Ok(ChainFactor { b, lambda, beta: (2.0 * lambda.im).sqrt() })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.im > 0.0) {
            return Err(Error::Invalid(format!("Im lambda must be positive, got {}", self.lambda)));
        }
        if !(self.beta > 0.0) {
            return Err(Error::Invalid(format!("beta must be positive, got {}", self.beta)));
        }
        let b2 = self.beta * self.beta;
        if (b2 - 2.0 * self.lambda.im).abs() > 1e-12 * b2.max(1.0) {
            return Err(Error::Invalid(format!(
                "beta^2 = {b2} but 2 Im lambda = {}",
                2.0 * self.lambda.im
            )));
        }
        Ok(())
    }

    /// Roots of `z^2 + b z + lambda = 0` as `(w1, w2)` with `w1` in the upper
    /// and `w2` in the lower half-plane.
    pub fn roots(&self) -> (C64, C64) {
        let d = (c(self.b * self.b, 0.0) - self.lambda * 4.0).sqrt();
        let r1 = (-self.b + d) * 0.5;
        let r2 = (-self.b - d) * 0.5;
        if r1.im > r2.im {
            (r1, r2)
        } else {
            (r2, r1)
        }
    }

    /// `(z^2 + b z + conj(lambda)) / (z^2 + b z + lambda)`.
    pub fn eval(&self, z: C64) -> Result<C64> {
        let base = z * z + z * self.b;
        let den = base + self.lambda;
        let scale = z.norm_sqr() + z.norm() * self.b.abs() + self.lambda.norm();
        if den.norm() <= 1e-14 * scale.max(1e-300) {
            return Err(Error::SpectralPoint(format!("{z} is a root of a chain factor")));
        }
        Ok((base + self.lambda.conj()) / den)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ChainSpec {
    pub factors: Vec<ChainFactor>,
}

impl ChainSpec {
    pub fn new(factors: Vec<ChainFactor>) -> Result<Self> {
        for f in &factors {
            f.validate()?;
        }
        Ok(ChainSpec { factors })
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// `b_k` in factor order.
    pub fn b_list(&self) -> Vec<f64> {
        self.factors.iter().map(|f| f.b).collect()
    }
}

pub const GAMMA_DIVISOR_MIN: f64 = 1e-12;

/// Sub-diagonal entries of the triangular chain roots, solved diagonal by
/// diagonal from
/// `(w2_k - w1_s) g_ks = i beta_k beta_s + sum_{s<l<k} g_kl g_ls`.
/// Entry `[k][s]` is meaningful for `k > s`.
#[allow(clippy::needless_range_loop)]
pub fn chain_gammas(w1: &[C64], w2: &[C64], beta: &[f64]) -> Result<Vec<Vec<C64>>> {
    let n = w1.len();
    if w2.len() != n || beta.len() != n {
        return Err(Error::Dimension("w1, w2 and beta must have equal length".into()));
    }
    let mut g = vec![vec![c(0.0, 0.0); n]; n];
    for d in 1..n {
        for s in 0..n - d {
            let k = s + d;
            let div = w2[k] - w1[s];
            if div.norm() <= GAMMA_DIVISOR_MIN {
                return Err(Error::Numerical(format!("w2[{k}] and w1[{s}] collide")));
            }
            let mut rhs = I * (beta[k] * beta[s]);
            for l in s + 1..k {
                rhs += g[k][l] * g[l][s];
            }
            g[k][s] = rhs / div;
        }
    }
    Ok(g)
}

/// Model pencil of a chain and its triangular roots.
///
/// `A~` is lower triangular with diagonal `lambda_k` and entries
/// `i beta_k beta_s` below it, `B~ = diag(b_k)`, `phi~ = [beta_1 ... beta_N]`,
/// `sigma = 1`.
pub fn chain_build(spec: &ChainSpec) -> Result<(PencilSystem, FactoredPencil)> {
    let n = spec.len();
    let beta: Vec<f64> = spec.factors.iter().map(|f| f.beta).collect();
    let a = CMatrix::from_fn(n, n, |k, s| {
        if k == s {
            spec.factors[k].lambda
        } else if k > s {
            I * (beta[k] * beta[s])
        } else {
            c(0.0, 0.0)
        }
    });
    let phi = CMatrix::from_fn(1, n, |_, k| c(beta[k], 0.0));
    let col = Colligation::new(a, phi, linalg::scalar(c(1.0, 0.0)))?;
    let b = linalg::from_real_diag(&spec.b_list());
    let p = PencilSystem::new(col, b)?;

    let (w1, w2): (Vec<C64>, Vec<C64>) = spec.factors.iter().map(|f| f.roots()).unzip();
    let g = chain_gammas(&w1, &w2, &beta)?;
    let x = CMatrix::from_fn(n, n, |k, s| if k == s { w1[k] } else if k > s { g[k][s] } else { c(0.0, 0.0) });
    let y = CMatrix::from_fn(n, n, |k, s| if k == s { w2[k] } else if k > s { -g[k][s] } else { c(0.0, 0.0) });
    let sep = linalg::set_distance(&w1, &w2);
    let mut f = FactoredPencil {
        x,
        y,
        k: zeros(n, n),
        spec_x: SpectrumInfo { eigenvalues: w1, separation: sep },
        spec_y: SpectrumInfo { eigenvalues: w2, separation: sep },
        method: Method::SchurSplit,
        graph_cond: 1.0,
        iterations: 0,
    };
    f.k = coupling_k_sylvester(&f)?;
    Ok((p, f))
}

/// `prod_k (z^2 + z b_k + conj(lambda_k)) / (z^2 + z b_k + lambda_k)`.
pub fn blaschke_product_eval(spec: &ChainSpec, z: C64) -> Result<C64> {
    let mut s = c(1.0, 0.0);
    for f in &spec.factors {
        s *= f.eval(z)?;
    }
    Ok(s)
}

/// A real function on `[0, l]`.
#[derive(Clone)]
pub enum Profile {
    Constant(f64),
    /// Uniform samples including both endpoints, linearly interpolated.
    Samples(Vec<f64>),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Profile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Profile::Constant(v) => write!(f, "Constant({v})"),
            Profile::Samples(s) => write!(f, "Samples({} points)", s.len()),
            Profile::Function(_) => write!(f, "Function(..)"),
        }
    }
}

impl Profile {
    pub fn eval(&self, t: f64, l: f64) -> f64 {
        match self {
            Profile::Constant(v) => *v,
            Profile::Function(g) => g(t),
            Profile::Samples(s) => {
                if s.len() == 1 || l <= 0.0 {
                    return s[0];
                }
                let pos = (t / l).clamp(0.0, 1.0) * (s.len() - 1) as f64;
                let k = (pos.floor() as usize).min(s.len() - 2);
                let w = pos - k as f64;
                s[k] * (1.0 - w) + s[k + 1] * w
            }
        }
    }

    fn check(&self, name: &str) -> Result<()> {
        if let Profile::Samples(s) = self {
            if s.is_empty() {
                return Err(Error::Invalid(format!("{name} has no samples")));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid(format!("{name} has non-finite samples")));
            }
        }
        if let Profile::Constant(v) = self {
            if !v.is_finite() {
                return Err(Error::Invalid(format!("{name} is not finite")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ContinuousLimitSpec {
    pub l: f64,
    pub b: Profile,
    pub a: Profile,
}

impl ContinuousLimitSpec {
    pub fn new(l: f64, b: Profile, a: Profile) -> Result<Self> {
        if !(l >= 0.0) || !l.is_finite() {
            return Err(Error::Invalid(format!("length l = {l} must be finite and non-negative")));
        }
        b.check("b")?;
        a.check("a")?;
        Ok(ContinuousLimitSpec { l, b, a })
    }

    pub fn b_at(&self, t: f64) -> f64 {
        self.b.eval(t, self.l)
    }

    pub fn a_at(&self, t: f64) -> f64 {
        self.a.eval(t, self.l)
    }
}

pub const LIMIT_QUAD_TOL: f64 = 1e-10;

/// `exp(-i \int_0^l dt / (z^2 + z b(t) + a(t)))` by adaptive Simpson.
pub fn continuous_limit_eval(spec: &ContinuousLimitSpec, z: C64) -> Result<C64> {
    if spec.l == 0.0 {
        return Ok(c(1.0, 0.0));
    }
    let mut singular = false;
    let integrand = |t: f64| {
        let (b, a) = (spec.b_at(t), spec.a_at(t));
        let den = z * z + z * b + a;
        let scale = z.norm_sqr() + z.norm() * b.abs() + a.abs();
        if den.norm() <= 1e-12 * scale.max(1e-300) {
            singular = true;
            return c(0.0, 0.0);
        }
        den.inv()
    };
    let (v, _) = adaptive_simpson(integrand, 0.0, spec.l, LIMIT_QUAD_TOL, 48);
    if singular {
        return Err(Error::SpectralPoint(format!("integrand is singular on [0, l] at lambda = {z}")));
    }
    Ok((-I * v).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfn::char_fn_sample;

    #[test]
    fn two_factor_model_matrix() {
        let spec = ChainSpec::new(vec![
            ChainFactor::new(0.3, c(0.5, 1.0)).unwrap(),
            ChainFactor::new(-0.2, c(-1.0, 0.5)).unwrap(),
        ])
        .unwrap();
        let (p, _) = chain_build(&spec).unwrap();
        let (b1, b2) = (spec.factors[0].beta, spec.factors[1].beta);
        assert_eq!(p.a()[(0, 0)], c(0.5, 1.0));
        assert_eq!(p.a()[(1, 1)], c(-1.0, 0.5));
        assert_eq!(p.a()[(0, 1)], c(0.0, 0.0));
        assert!((p.a()[(1, 0)] - I * (b1 * b2)).norm() < 1e-15);
    }

    #[test]
    fn gamma_minus_half() {
        let g = chain_gammas(&[I, I], &[-I, -I], &[1.0, 1.0]).unwrap();
        assert!((g[1][0] - c(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn gamma_minus_half_from_chain() {
        // b = -1/2, lambda = 1 + i/2 gives w1 = i; b = 1/2 gives w2 = -i.
        let spec = ChainSpec {
            factors: vec![
                ChainFactor { b: -0.5, lambda: c(1.0, 0.5), beta: 1.0 },
                ChainFactor { b: 0.5, lambda: c(1.0, 0.5), beta: 1.0 },
            ],
        };
        spec.factors.iter().for_each(|f| f.validate().unwrap());
        assert!((spec.factors[0].roots().0 - I).norm() < 1e-15);
        assert!((spec.factors[1].roots().1 + I).norm() < 1e-15);
        let (_, f) = chain_build(&spec).unwrap();
        assert!((f.x[(1, 0)] - c(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn empty_and_single() {
        let empty = ChainSpec::default();
        assert_eq!(blaschke_product_eval(&empty, c(0.3, 0.2)).unwrap(), c(1.0, 0.0));
        let one = ChainSpec::new(vec![ChainFactor::new(0.0, I).unwrap()]).unwrap();
        let s = blaschke_product_eval(&one, c(1.0, 1.0)).unwrap();
        assert!((s - c(1.0 / 3.0, 0.0)).norm() < 1e-15);
        let (p, f) = chain_build(&one).unwrap();
        let (w1, w2) = one.factors[0].roots();
        assert_eq!(f.x[(0, 0)], w1);
        assert_eq!(f.y[(0, 0)], w2);
        let s2 = char_fn_sample(&p, c(1.0, 1.0)).unwrap().s[(0, 0)];
        assert!((s2 - s).norm() < 1e-15);
    }

    #[test]
    fn continuous_limit_closed_form() {
        let spec = ContinuousLimitSpec::new(1.0, Profile::Constant(0.0), Profile::Constant(1.0)).unwrap();
        let s = continuous_limit_eval(&spec, c(0.0, 2.0)).unwrap();
        assert!((s - c(0.0, 1.0 / 3.0).exp()).norm() < 1e-12);
        let zero = ContinuousLimitSpec::new(0.0, Profile::Constant(0.0), Profile::Constant(1.0)).unwrap();
        assert_eq!(continuous_limit_eval(&zero, c(0.0, 2.0)).unwrap(), c(1.0, 0.0));
        assert!(matches!(continuous_limit_eval(&spec, I), Err(Error::SpectralPoint(_))));
    }

    #[test]
    fn sigma_mismatch_rejected() {
        let mk = |s: f64| {
            let col = Colligation::new(
                linalg::scalar(c(0.0, 0.5 * s)),
                linalg::scalar(c(1.0, 0.0)),
                linalg::scalar(c(s, 0.0)),
            )
            .unwrap();
            PencilSystem::new(col, zeros(1, 1)).unwrap()
        };
        assert!(matches!(couple(&mk(1.0), &mk(-1.0)), Err(Error::CouplingIncompatible(_))));
    }
}
