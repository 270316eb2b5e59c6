//! Seeded random instances. All generators draw from ChaCha8 seeded with a
//! `u64`, so a seed fixes the instance on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::colligation::{Colligation, PencilSystem};
use crate::coupling::{ChainFactor, ChainSpec};
use crate::error::Result;
use crate::factor::{factor_spectral, FactoredPencil, SplitRule};
use crate::linalg::{c, eye, herm_eig, CMatrix, C64};

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Real and imaginary parts uniform on `[-1, 1]`.
pub fn complex(r: &mut Rng64) -> C64 {
    c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))
}

pub fn matrix(r: &mut Rng64, rows: usize, cols: usize) -> CMatrix {
    let mut m = CMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = complex(r);
        }
    }
    m
}

pub fn hermitian(r: &mut Rng64, n: usize) -> CMatrix {
    let m = matrix(r, n, n);
    (&m + m.adjoint()) * c(0.5, 0.0)
}

pub fn unitary(r: &mut Rng64, n: usize) -> CMatrix {
    herm_eig(&hermitian(r, n)).1
}

/// Colligation with a random `A` and channel data from its defect.
pub fn colligation(r: &mut Rng64, n: usize) -> Result<Colligation> {
    Colligation::from_operator(matrix(r, n, n))
}

/// Colligation with a prescribed signature: `A = H + (i/2) phi* sigma phi`
/// with `H` Hermitian and `phi` random.
pub fn colligation_with_sigma(r: &mut Rng64, n: usize, sigma: &[f64]) -> Result<Colligation> {
    let phi = matrix(r, sigma.len(), n);
    let s = crate::linalg::from_real_diag(sigma);
    let a = hermitian(r, n) + phi.adjoint() * &s * &phi * c(0.0, 0.5);
    Colligation::new(a, phi, s)
}

/// Pencil over [`colligation_with_sigma`] with a random Hermitian `B`.
pub fn pencil_with_sigma(r: &mut Rng64, n: usize, sigma: &[f64]) -> Result<PencilSystem> {
    let col = colligation_with_sigma(r, n, sigma)?;
    PencilSystem::new(col, hermitian(r, n))
}

/// Random `A` and Hermitian `B`.
pub fn pencil(r: &mut Rng64, n: usize) -> Result<PencilSystem> {
    let col = colligation(r, n)?;
    PencilSystem::new(col, hermitian(r, n) * c(2.0, 0.0))
}

/// Pencil with strong damping, `B = 4 I + H/2` and `||A|| <~ 1/2`, for which
/// the Bernoulli iteration converges.
pub fn damped_pencil(r: &mut Rng64, n: usize) -> Result<PencilSystem> {
    let a = matrix(r, n, n) * c(0.5 / (n as f64).sqrt(), 0.0);
    let col = Colligation::from_operator(a)?;
    let b = eye(n) * c(4.0, 0.0) + hermitian(r, n) * c(0.5 / (n as f64).sqrt(), 0.0);
    PencilSystem::new(col, b)
}

/// Smallest accepted spectral separation for [`gapped_pencil`].
pub const CERTIFIED_GAP: f64 = 1e-2;
/// Largest accepted graph-basis condition for [`gapped_pencil`].
pub const CERTIFIED_COND: f64 = 1e6;

/// Random pencil whose median split has separation at least
/// [`CERTIFIED_GAP`] and a well-conditioned graph basis. Draws until one is
/// found.
pub fn gapped_pencil(r: &mut Rng64, n: usize) -> Result<(PencilSystem, FactoredPencil)> {
    loop {
        let p = pencil(r, n)?;
        if let Ok(f) = factor_spectral(&p, &SplitRule::Gap) {
            if f.spec_x.separation >= CERTIFIED_GAP && f.graph_cond <= CERTIFIED_COND {
                return Ok((p, f));
            }
        }
    }
}

/// Point with `|Im| >= min_im` in a box of half-width `scale`.
pub fn off_axis(r: &mut Rng64, scale: f64, min_im: f64) -> C64 {
    let re = r.random_range(-scale..scale);
    let im = r.random_range(min_im..scale) * if r.random_bool(0.5) { 1.0 } else { -1.0 };
    c(re, im)
}

/// Chain of `n` factors with `b` uniform on `[-1, 1]`, `Re lambda` on
/// `[-1, 1]` and `Im lambda` on `[0.1, 1]`.
pub fn chain(r: &mut Rng64, n: usize) -> Result<ChainSpec> {
    let factors = (0..n)
        .map(|_| {
            let b = r.random_range(-1.0..1.0);
            let lam = c(r.random_range(-1.0..1.0), r.random_range(0.1..1.0));
            ChainFactor::new(b, lam)
        })
        .collect::<Result<Vec<_>>>()?;
    ChainSpec::new(factors)
}
