//! Roots built from a Hilbert-type transform of a kernel on the grid.

use super::{offdiag, GridModel, KernelOnGrid};
use crate::colligation::{Colligation, PencilSystem};
use crate::error::{Error, Result};
use crate::linalg::{self, c, from_real_diag, CMatrix, I};

/// `X~_ij = i K^_ij / (x_j - x_i)` off the diagonal and `n(x_i)` on it, in the
/// orthonormal basis. The diagonal of the principal value is dropped.
///
/// `X~` is Hermitian and `X~ B~ - B~ X~ = i K^` off the diagonal, with
/// `B~ = diag(x)`.
pub fn hilbert_root(g: &GridModel, k: &KernelOnGrid, n_mult: Option<&[f64]>) -> Result<CMatrix> {
    k.check(g, true)?;
    let n = g.len();
    if let Some(m) = n_mult {
        if m.len() != n {
            return Err(Error::Dimension(format!("{} multiplier values on {n} nodes", m.len())));
        }
    }
    let kh = k.weighted(g);
    let x = &g.nodes;
    Ok(CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            c(n_mult.map_or(0.0, |m| m[i]), 0.0)
        } else {
            kh[(i, j)] * I / (x[j] - x[i])
        }
    }))
}

#[derive(Debug, Clone)]
pub struct ModelQuadruple {
    pub x: CMatrix,
    pub b: CMatrix,
    pub y: CMatrix,
    pub a: CMatrix,
}

/// `X~ = diag(x)`, `Y~ = diag(-b - x) + H`, `B~ = diag(b) - H`, `A~ = Y~ X~`,
/// where `H` is the Hilbert root of the kernel with zero multiplier and `b`
/// is the grid multiplier.
pub fn model_quadruple(g: &GridModel, k: &KernelOnGrid) -> Result<ModelQuadruple> {
    let h = hilbert_root(g, k, None)?;
    let x = from_real_diag(&g.nodes);
    let av: Vec<f64> = g.nodes.iter().zip(&g.mult_b).map(|(x, b)| -b - x).collect();
    let y = from_real_diag(&av) + &h;
    let b = from_real_diag(&g.mult_b) - &h;
    let a = &y * &x;
    Ok(ModelQuadruple { x, b, y, a })
}

/// Model pencil with `phi~` from the channel values and `sigma = J`.
///
/// The defect identity holds off the diagonal only; the diagonal of
/// `phi~* J phi~` is a quadrature mass of size `O(w)`, so the colligation is
/// assembled without the defect check. See [`model_defect`].
pub fn model_pencil(g: &GridModel) -> Result<(PencilSystem, ModelQuadruple)> {
    let q = model_quadruple(g, &g.channel_kernel())?;
    let col = Colligation::from_parts(q.a.clone(), g.phi(), g.signature())?;
    let p = PencilSystem::new(col, q.b.clone())?;
    Ok((p, q))
}

#[derive(Debug, Clone, Copy)]
pub struct ModelDefect {
    /// `max |(A~ - A~*) - i phi~* J phi~|` over off-diagonal entries.
    pub offdiag: f64,
    /// The same over the diagonal, which is the dropped principal-value mass.
    pub diagonal: f64,
}

pub fn model_defect(g: &GridModel, q: &ModelQuadruple) -> ModelDefect {
    let phi = g.phi();
    let r = &q.a - q.a.adjoint() - phi.adjoint() * g.signature() * &phi * I;
    let off = linalg::max_abs(&offdiag(&r));
    let diagonal = (0..r.nrows()).fold(0.0f64, |m, i| m.max(r[(i, i)].norm()));
    ModelDefect { offdiag: off, diagonal }
}
