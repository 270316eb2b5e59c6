//! Spectral factorization `L(lambda) = (lambda I - Y)(lambda I - X)` and the
//! coupling operator `K` with `KY - XK = I`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::colligation::{companion, resolvent_eval, PencilSystem, SpectrumInfo};
use crate::error::{Error, Result};
use crate::linalg::{self, c, eye, spectral_norm, CMatrix, C64};

pub const SEP_MIN: f64 = 1e-8;
/// Largest condition number of the top block of the invariant-subspace basis.
pub const GRAPH_COND_MAX: f64 = 1e12;
pub const CONTOUR_MAX_NODES: usize = 8192;

/// Which half of the linearization spectrum goes to the right root `X`.
#[derive(Clone)]
pub enum SplitRule {
    /// Split at the median of the real parts; `X` takes the larger half.
    Gap,
    /// `X` takes `Re > 0`.
    HalfPlaneRe,
    /// `X` takes `Im > 0`.
    HalfPlaneIm,
    /// `X` takes the `n` eigenvalues of smallest modulus.
    SmallestModulus,
    /// `X` takes the eigenvalues for which the predicate holds.
    Predicate(Arc<dyn Fn(C64) -> bool + Send + Sync>),
}

impl fmt::Debug for SplitRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitRule::Gap => write!(f, "Gap"),
            SplitRule::HalfPlaneRe => write!(f, "HalfPlaneRe"),
            SplitRule::HalfPlaneIm => write!(f, "HalfPlaneIm"),
            SplitRule::SmallestModulus => write!(f, "SmallestModulus"),
            SplitRule::Predicate(_) => write!(f, "Predicate(..)"),
        }
    }
}

impl SplitRule {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gap" => Ok(SplitRule::Gap),
            "halfplane-re" => Ok(SplitRule::HalfPlaneRe),
            "halfplane-im" => Ok(SplitRule::HalfPlaneIm),
            "smallest" => Ok(SplitRule::SmallestModulus),
            _ => Err(Error::Parse(format!("unknown split rule '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    SchurSplit,
    Bernoulli,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::SchurSplit => write!(f, "schur-split"),
            Method::Bernoulli => write!(f, "bernoulli"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FactoredPencil {
    pub x: CMatrix,
    pub y: CMatrix,
    pub k: CMatrix,
    pub spec_x: SpectrumInfo,
    pub spec_y: SpectrumInfo,
    pub method: Method,
    /// Condition number of the graph basis block (1 for Bernoulli).
    pub graph_cond: f64,
    /// Fixed-point iterations used (0 for the Schur split).
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct FactorResiduals {
    pub sum: f64,
    pub product: f64,
    pub right_root: f64,
    pub left_root: f64,
    pub sylvester: f64,
    pub separation: f64,
    /// `1 + ||A|| + ||B|| ||X|| + ||X||^2`, the natural size of the root equations.
    pub scale: f64,
}

/// Partition the spectrum according to the rule; `true` marks eigenvalues of `X`.
fn select(eigs: &[C64], n: usize, rule: &SplitRule) -> Result<Vec<bool>> {
    let by_rank = |key: &dyn Fn(C64) -> f64, largest: bool| -> Result<Vec<bool>> {
        let mut idx: Vec<usize> = (0..eigs.len()).collect();
        idx.sort_by(|&i, &j| {
            key(eigs[i]).total_cmp(&key(eigs[j])).then(eigs[i].im.total_cmp(&eigs[j].im))
        });
        if largest {
            idx.reverse();
        }
        let gap = (key(eigs[idx[n - 1]]) - key(eigs[idx[n]])).abs();
        if gap < SEP_MIN {
            return Err(Error::Infeasible(format!(
                "no gap at the median of the spectrum (gap {gap:.3e})"
            )));
        }
        let mut sel = vec![false; eigs.len()];
        for &i in &idx[..n] {
            sel[i] = true;
        }
        Ok(sel)
    };
    let pointwise = |p: &dyn Fn(C64) -> bool| -> Result<Vec<bool>> {
        let sel: Vec<bool> = eigs.iter().map(|&z| p(z)).collect();
        let k = sel.iter().filter(|&&s| s).count();
        if k != n {
            return Err(Error::Infeasible(format!(
                "split selects {k} eigenvalues, need {n}"
            )));
        }
        Ok(sel)
    };
    match rule {
        SplitRule::Gap => by_rank(&|z| z.re, true),
        SplitRule::SmallestModulus => by_rank(&|z| z.norm(), false),
        SplitRule::HalfPlaneRe => pointwise(&|z| z.re > 0.0),
        SplitRule::HalfPlaneIm => pointwise(&|z| z.im > 0.0),
        SplitRule::Predicate(p) => pointwise(&|z| p(z)),
    }
}

fn factor_from_selection(p: &PencilSystem, lin_q: CMatrix, lin_t: CMatrix, sel: &[bool]) -> Result<FactoredPencil> {
    let n = p.n();
    let (mut q, mut t) = (lin_q, lin_t);
    let eigs: Vec<C64> = (0..2 * n).map(|i| t[(i, i)]).collect();
    let sx: Vec<C64> = (0..2 * n).filter(|&i| sel[i]).map(|i| eigs[i]).collect();
    let sy: Vec<C64> = (0..2 * n).filter(|&i| !sel[i]).map(|i| eigs[i]).collect();
    let sep = linalg::set_distance(&sx, &sy);
    if !(sep > SEP_MIN) {
        return Err(Error::Infeasible(format!("spectral separation {sep:.3e} below {SEP_MIN:.0e}")));
    }
    linalg::schur_reorder(&mut q, &mut t, sel);
    let u1 = q.view((0, 0), (n, n)).into_owned();
    let u2 = q.view((n, 0), (n, n)).into_owned();
    let (u1inv, cond) = linalg::inverse_cond(&u1).map_err(|e| match e {
        Error::Singular { cond } => Error::SplitInvalid { cond },
        other => other,
    })?;
    if cond > GRAPH_COND_MAX {
        return Err(Error::SplitInvalid { cond });
    }
    let x = u2 * u1inv;
    let y = -&p.b - &x;
    let k = sylvester_k(&x, &y)?;
    Ok(FactoredPencil {
        x,
        y,
        k,
        spec_x: SpectrumInfo { eigenvalues: sx, separation: sep },
        spec_y: SpectrumInfo { eigenvalues: sy, separation: sep },
        method: Method::SchurSplit,
        graph_cond: cond,
        iterations: 0,
    })
}

/// Spectral roots from an invariant subspace of the companion linearization.
pub fn factor_spectral(p: &PencilSystem, rule: &SplitRule) -> Result<FactoredPencil> {
    let n = p.n();
    if n == 0 {
        return Ok(empty_factor(Method::SchurSplit));
    }
    let (q, t) = linalg::schur(&companion(p.a(), &p.b))?;
    let eigs: Vec<C64> = (0..2 * n).map(|i| t[(i, i)]).collect();
    let sel = select(&eigs, n, rule)?;
    factor_from_selection(p, q, t, &sel)
}

/// Factor with `X` and `Y` exchanged relative to `f`: the new right root
/// carries the old `spec(Y)`.
pub fn factor_complementary(p: &PencilSystem, f: &FactoredPencil) -> Result<FactoredPencil> {
    let n = p.n();
    if n == 0 {
        return Ok(empty_factor(Method::SchurSplit));
    }
    let (q, t) = linalg::schur(&companion(p.a(), &p.b))?;
    let eigs: Vec<C64> = (0..2 * n).map(|i| t[(i, i)]).collect();
    // Match each linearization eigenvalue to the nearest member of spec(Y).
    let mut taken = vec![false; 2 * n];
    for &z in &f.spec_y.eigenvalues {
        let best = (0..2 * n)
            .filter(|&i| !taken[i])
            .min_by(|&i, &j| (eigs[i] - z).norm().total_cmp(&(eigs[j] - z).norm()))
            .expect("spectrum sizes agree");
        taken[best] = true;
    }
    factor_from_selection(p, q, t, &taken)
}

fn empty_factor(method: Method) -> FactoredPencil {
    let e = SpectrumInfo { eigenvalues: vec![], separation: f64::INFINITY };
    FactoredPencil {
        x: linalg::zeros(0, 0),
        y: linalg::zeros(0, 0),
        k: linalg::zeros(0, 0),
        spec_x: e.clone(),
        spec_y: e,
        method,
        graph_cond: 1.0,
        iterations: 0,
    }
}

fn sylvester_k(x: &CMatrix, y: &CMatrix) -> Result<CMatrix> {
    let n = x.nrows();
    linalg::sylvester(&(-x), y, &eye(n)).map(|(k, _)| k)
}

/// Bernoulli fixed point `X <- -B^{-1}(A + X^2)` from `X = 0`.
///
/// Refuses unless `B` is invertible and `4 ||B^{-1}|| ||B^{-1} A|| < 1`.
pub fn factor_bernoulli(p: &PencilSystem, max_iter: usize, tol: f64) -> Result<FactoredPencil> {
    let n = p.n();
    if n == 0 {
        return Ok(empty_factor(Method::Bernoulli));
    }
    let binv = linalg::inverse(&p.b)
        .map_err(|_| Error::Precondition("B is not invertible".into()))?;
    let q = 4.0 * spectral_norm(&binv) * spectral_norm(&(&binv * p.a()));
    if !(q < 1.0) {
        return Err(Error::Precondition(format!(
            "4 ||B^-1|| ||B^-1 A|| = {q:.4} is not below 1"
        )));
    }
    let mut x = linalg::zeros(n, n);
    let mut step = f64::INFINITY;
    let mut iters = 0;
    while iters < max_iter {
        let next = -(&binv * (p.a() + &x * &x));
        step = spectral_norm(&(&next - &x));
        x = next;
        iters += 1;
        if step <= tol {
            break;
        }
    }
    if !(step <= tol) {
        return Err(Error::Divergence { iters, last_step: step });
    }
    let y = -&p.b - &x;
    let sx = linalg::eigenvalues(&x)?;
    let sy = linalg::eigenvalues(&y)?;
    let sep = linalg::set_distance(&sx, &sy);
    let k = sylvester_k(&x, &y)?;
    Ok(FactoredPencil {
        x,
        y,
        k,
        spec_x: SpectrumInfo { eigenvalues: sx, separation: sep },
        spec_y: SpectrumInfo { eigenvalues: sy, separation: sep },
        method: Method::Bernoulli,
        graph_cond: 1.0,
        iterations: iters,
    })
}

impl FactoredPencil {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn residuals(&self, p: &PencilSystem) -> FactorResiduals {
        let (x, y, a, b) = (&self.x, &self.y, p.a(), &p.b);
        let n = self.n();
        let nx = spectral_norm(x);
        let scale = 1.0 + spectral_norm(a) + spectral_norm(b) * nx + nx * nx;
        FactorResiduals {
            sum: spectral_norm(&(x + y + b)),
            product: spectral_norm(&(y * x - a)),
            right_root: spectral_norm(&(x * x + b * x + a)),
            left_root: spectral_norm(&(y * y + y * b + a)),
            sylvester: spectral_norm(&(&self.k * y - x * &self.k - eye(n))),
            separation: self.spec_x.separation,
            scale,
        }
    }
}

/// `K` as the unique solution of `KY - XK = I`.
pub fn coupling_k_sylvester(f: &FactoredPencil) -> Result<CMatrix> {
    sylvester_k(&f.x, &f.y)
}

#[derive(Debug, Clone, Copy)]
pub struct ContourSpec {
    pub center: C64,
    pub radius: f64,
    pub nodes: usize,
}

impl ContourSpec {
    pub fn new(center: C64, radius: f64, nodes: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::ContourInvalid(format!("radius {radius} must be positive")));
        }
        if nodes < 16 {
            return Err(Error::ContourInvalid(format!("{nodes} nodes; at least 16 required")));
        }
        Ok(ContourSpec { center, radius, nodes })
    }

    /// Circle around `inside` that excludes `outside`: centered at the mean,
    /// radius 1.5 times the spread, shrunk if it would reach `outside`.
    pub fn enclosing(inside: &[C64], outside: &[C64]) -> Result<Self> {
        if inside.is_empty() {
            return Err(Error::ContourInvalid("nothing to enclose".into()));
        }
        let center = inside.iter().sum::<C64>() / c(inside.len() as f64, 0.0);
        let spread = inside.iter().map(|z| (z - center).norm()).fold(0.0, f64::max);
        let reach = outside.iter().map(|z| (z - center).norm()).fold(f64::INFINITY, f64::min);
        if reach <= spread * (1.0 + 1e-9) {
            return Err(Error::ContourInvalid(
                "no circle about the mean separates the two spectra".into(),
            ));
        }
        let mut radius = if spread > 0.0 { 1.5 * spread } else { 0.5 * reach.min(1.0) };
        if radius >= reach {
            radius = 0.5 * (spread + reach);
        }
        ContourSpec::new(center, radius, 64)
    }

    /// Default contour around `spec(Y)`.
    pub fn around_left_root(f: &FactoredPencil) -> Result<Self> {
        Self::enclosing(&f.spec_y.eigenvalues, &f.spec_x.eigenvalues)
    }

    pub fn around_right_root(f: &FactoredPencil) -> Result<Self> {
        Self::enclosing(&f.spec_x.eigenvalues, &f.spec_y.eigenvalues)
    }

    fn inside(&self, z: C64) -> bool {
        (z - self.center).norm() < self.radius
    }
}

#[derive(Debug, Clone)]
pub struct ContourResult {
    pub k: CMatrix,
    pub nodes: usize,
    /// Norm of the change at the last doubling.
    pub last_change: f64,
    pub converged: bool,
}

fn contour_sum(p: &PencilSystem, g: &ContourSpec, n_total: usize, offset: usize, stride: usize) -> Result<CMatrix> {
    let idx: Vec<usize> = (offset..n_total).step_by(stride).collect();
    let terms: Vec<Result<CMatrix>> = idx
        .par_iter()
        .map(|&k| {
            let e = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n_total as f64);
            let z = g.center + e * g.radius;
            resolvent_eval(p, z).map(|r| r * (e * g.radius))
        })
        .collect();
    let n = p.n();
    let mut acc = linalg::zeros(n, n);
    for t in terms {
        acc += t.map_err(|e| Error::ContourInvalid(format!("resolvent blows up on the contour: {e}")))?;
    }
    Ok(acc)
}

/// `K = (1/2 pi i) \oint L^{-1}(z) dz` by the trapezoid rule on a circle.
///
/// The node count starts at `g.nodes` and doubles until successive estimates
/// differ by at most `quad_tol` or [`CONTOUR_MAX_NODES`] is reached.
pub fn coupling_k_contour(p: &PencilSystem, f: &FactoredPencil, g: &ContourSpec, quad_tol: f64) -> Result<ContourResult> {
    let all: Vec<C64> = f.spec_x.eigenvalues.iter().chain(&f.spec_y.eigenvalues).copied().collect();
    let band = 1e-10 * (1.0 + g.radius);
    for &z in &all {
        if ((z - g.center).norm() - g.radius).abs() <= band {
            return Err(Error::ContourInvalid(format!("eigenvalue {z} lies on the contour")));
        }
    }
    for (name, s) in [("spec(X)", &f.spec_x.eigenvalues), ("spec(Y)", &f.spec_y.eigenvalues)] {
        let k = s.iter().filter(|&&z| g.inside(z)).count();
        if k != 0 && k != s.len() {
            return Err(Error::ContourInvalid(format!("contour splits {name}")));
        }
    }
    let mut nodes = g.nodes.max(16);
    let mut sum = contour_sum(p, g, nodes, 0, 1)?;
    let mut k = &sum / c(nodes as f64, 0.0);
    let mut change = f64::INFINITY;
    while nodes < CONTOUR_MAX_NODES {
        let extra = contour_sum(p, g, 2 * nodes, 1, 2)?;
        sum += extra;
        nodes *= 2;
        let next = &sum / c(nodes as f64, 0.0);
        change = spectral_norm(&(&next - &k));
        k = next;
        if change <= quad_tol {
            return Ok(ContourResult { k, nodes, last_change: change, converged: true });
        }
    }
    Ok(ContourResult { k, nodes, last_change: change, converged: change <= quad_tol })
}

/// Fixed-node trapezoid estimate without refinement, for convergence studies.
pub fn coupling_k_contour_fixed(p: &PencilSystem, g: &ContourSpec) -> Result<CMatrix> {
    let sum = contour_sum(p, g, g.nodes, 0, 1)?;
    Ok(sum / c(g.nodes as f64, 0.0))
}

#[derive(Debug, Clone)]
pub struct IdentityReport {
    /// `||K (lambda - Y)^{-1} - (lambda - X)^{-1} K - L^{-1}(lambda)||`
    pub resolvent: f64,
    /// `||K Y^2 + B K Y + A K||`
    pub k_equation: f64,
}

pub fn verify_identities(p: &PencilSystem, f: &FactoredPencil, lambda: C64) -> Result<IdentityReport> {
    let spec_err = |e: Error| match e {
        Error::Singular { cond } => Error::SpectralPoint(format!(
            "lambda = {lambda} is on a root spectrum (condition {cond:.3e})"
        )),
        other => other,
    };
    let ry = linalg::shifted_inverse(&f.y, lambda).map_err(spec_err)?;
    let rx = linalg::shifted_inverse(&f.x, lambda).map_err(spec_err)?;
    let linv = resolvent_eval(p, lambda)?;
    let k = &f.k;
    Ok(IdentityReport {
        resolvent: spectral_norm(&(k * ry - rx * k - linv)),
        k_equation: spectral_norm(&(k * &f.y * &f.y + &p.b * k * &f.y + p.a() * k)),
    })
}
