//! The identity suite: defect, root equations, `KY - XK = I`, the resolvent
//! identity, the metric relation and multiplicativity under coupling.

use serde::Serialize;

use crate::charfn::{char_fn_sample, metric_relation_residual};
use crate::colligation::{validate_colligation, PencilSystem};
use crate::coupling::couple;
use crate::error::Result;
use crate::factor::{factor_spectral, verify_identities, SplitRule};
use crate::linalg::{spectral_norm, C64};
use crate::random;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Check { name: name.into(), value, tol, pass: value <= tol }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub rule: SplitRule,
    /// Random sample points for the frequency-domain checks.
    pub samples: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { rule: SplitRule::Gap, samples: 8, seed: 0 }
    }
}

/// Sample points off the real axis at distance at least 1/2 from the pencil
/// spectrum, seeded.
fn sample_points(p: &PencilSystem, spectrum: &[C64], count: usize, seed: u64) -> Vec<C64> {
    let radius = 1.0 + spectrum.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let mut r = random::rng(seed);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count && tries < 1000 * count.max(1) {
        tries += 1;
        let z = random::off_axis(&mut r, radius, 0.5);
        if spectrum.iter().all(|e| (e - z).norm() >= 0.5) && char_fn_sample(p, z).is_ok() {
            out.push(z);
        }
    }
    out
}

pub fn verify_pencil(p: &PencilSystem, cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let d = validate_colligation(&p.colligation)?;
    checks.push(Check::new("colligation defect", d.defect_residual, d.tol_defect.max(1e-300)));

    let f = factor_spectral(p, &cfg.rule)?;
    let r = f.residuals(p);
    checks.push(Check::new("X + Y + B", r.sum, 1e-12 * r.scale));
    checks.push(Check::new("YX - A", r.product, 1e-9 * r.scale));
    checks.push(Check::new("X^2 + BX + A", r.right_root, 1e-9 * r.scale));
    checks.push(Check::new("Y^2 + YB + A", r.left_root, 1e-9 * r.scale));
    let kscale = 1.0 + spectral_norm(&f.k) * (spectral_norm(&f.x) + spectral_norm(&f.y));
    checks.push(Check::new("KY - XK - I", r.sylvester, 1e-10 * kscale));

    let spectrum: Vec<C64> = f.spec_x.eigenvalues.iter().chain(&f.spec_y.eigenvalues).copied().collect();
    let pts = sample_points(p, &spectrum, cfg.samples.max(2), cfg.seed);
    let mut resolvent = (0.0f64, 0.0f64);
    let mut metric = (0.0f64, 0.0f64);
    let mut mult = (0.0f64, 0.0f64);
    let coupled = couple(p, p)?.system;
    for (k, &lam) in pts.iter().enumerate() {
        let id = verify_identities(p, &f, lam)?;
        resolvent.0 = resolvent.0.max(id.resolvent);
        resolvent.1 = resolvent.1.max(1e-9 * kscale * kscale);

        let w = pts[(k + 1) % pts.len()];
        let sl = char_fn_sample(p, lam)?.s;
        let sw = char_fn_sample(p, w)?.s;
        let ns = spectral_norm(p.sigma());
        let mscale = 1.0 + ns * spectral_norm(&sl) * spectral_norm(&sw) / (lam - w.conj()).norm();
        metric.0 = metric.0.max(metric_relation_residual(p, lam, w)?);
        metric.1 = metric.1.max(1e-9 * mscale);

        let s2 = char_fn_sample(&coupled, lam)?.s;
        let prod = &sl * &sl;
        mult.0 = mult.0.max(spectral_norm(&(s2 - &prod)));
        mult.1 = mult.1.max(1e-10 * (1.0 + spectral_norm(&prod)));
    }
    checks.push(Check::new("resolvent identity", resolvent.0, resolvent.1));
    checks.push(Check::new("metric relation", metric.0, metric.1));
    checks.push(Check::new("multiplicativity", mult.0, mult.1));
    Ok(checks)
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

/// Checks over `count` random pencils of size `n`, seeded per instance.
pub fn verify_random(count: usize, n: usize, seed: u64) -> Result<Vec<(u64, Vec<Check>)>> {
    (0..count as u64)
        .map(|i| {
            let s = seed.wrapping_add(i);
            let (p, _) = random::gapped_pencil(&mut random::rng(s), n)?;
            let cfg = VerifyConfig { seed: s, ..Default::default() };
            Ok((s, verify_pencil(&p, &cfg)?))
        })
        .collect()
}
