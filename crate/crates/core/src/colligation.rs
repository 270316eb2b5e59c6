//! Colligations, pencil systems and pencil evaluation.
//!
//! A colligation packages a main operator `A` on `H = C^n` with a channel map
//! `phi: H -> E = C^m` and a Hermitian signature `sigma` on `E` such that
//! `A - A* = i phi* sigma phi`.

use crate::error::{Error, Result};
use crate::linalg::{self, c, eye, herm_eig, spectral_norm, CMatrix, C64, I};

pub const DEFECT_RTOL: f64 = 1e-10;
pub const HERM_RTOL: f64 = 1e-12;
/// Eigenvalues of `(A - A*)/i` below this fraction of `||A||` are dropped.
pub const RANK_RTOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Colligation {
    pub a: CMatrix,
    pub phi: CMatrix,
    pub sigma: CMatrix,
}

#[derive(Debug, Clone)]
pub struct PencilSystem {
    pub colligation: Colligation,
    pub b: CMatrix,
}

#[derive(Debug, Clone)]
pub struct SpectrumInfo {
    pub eigenvalues: Vec<C64>,
    /// Smallest distance to the complementary spectrum.
    pub separation: f64,
}

#[derive(Debug, Clone)]
pub struct DefectReport {
    pub defect_residual: f64,
    pub sigma_hermiticity: f64,
    pub tol_defect: f64,
    pub tol_herm: f64,
    pub pass: bool,
}

fn check_shapes(a: &CMatrix, phi: &CMatrix, sigma: &CMatrix) -> Result<()> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension(format!("A is {}x{}, not square", n, a.ncols())));
    }
    let m = sigma.nrows();
    if sigma.ncols() != m {
        return Err(Error::Dimension(format!("sigma is {}x{}, not square", m, sigma.ncols())));
    }
    if phi.nrows() != m || phi.ncols() != n {
        return Err(Error::Dimension(format!(
            "phi is {}x{}, expected {}x{}",
            phi.nrows(),
            phi.ncols(),
            m,
            n
        )));
    }
    for (name, mat) in [("A", a), ("phi", phi), ("sigma", sigma)] {
        if !linalg::all_finite(mat) {
            return Err(Error::Invalid(format!("{name} has non-finite entries")));
        }
    }
    Ok(())
}

impl Colligation {
    /// Build a colligation after checking shapes and the defect identity.
    pub fn new(a: CMatrix, phi: CMatrix, sigma: CMatrix) -> Result<Self> {
        let c = Self::from_parts(a, phi, sigma)?;
        let rep = validate_colligation(&c)?;
        if !rep.pass {
            return Err(Error::Invalid(format!(
                "defect residual {:.3e} (tol {:.3e}), sigma hermiticity {:.3e} (tol {:.3e})",
                rep.defect_residual, rep.tol_defect, rep.sigma_hermiticity, rep.tol_herm
            )));
        }
        Ok(c)
    }

    /// Build without checking the defect identity; shapes are still checked.
    pub fn from_parts(a: CMatrix, phi: CMatrix, sigma: CMatrix) -> Result<Self> {
        check_shapes(&a, &phi, &sigma)?;
        Ok(Colligation { a, phi, sigma })
    }

    /// Colligation whose channel data is obtained from `A` via [`embed_defect`].
    pub fn from_operator(a: CMatrix) -> Result<Self> {
        let (phi, sigma) = embed_defect(&a)?;
        Colligation::new(a, phi, sigma)
    }

    pub fn dim_h(&self) -> usize {
        self.a.nrows()
    }

    pub fn dim_e(&self) -> usize {
        self.sigma.nrows()
    }

    /// `i phi* sigma phi`.
    pub fn channel_defect(&self) -> CMatrix {
        self.phi.adjoint() * &self.sigma * &self.phi * I
    }
}

/// Residuals of the defect identity and of the Hermiticity of `sigma`.
pub fn validate_colligation(col: &Colligation) -> Result<DefectReport> {
    check_shapes(&col.a, &col.phi, &col.sigma)?;
    let na = spectral_norm(&col.a);
    let ns = spectral_norm(&col.sigma);
    let r = &col.a - col.a.adjoint() - col.channel_defect();
    let defect_residual = spectral_norm(&r);
    let sigma_hermiticity = linalg::hermitian_residual(&col.sigma);
    let tol_defect = DEFECT_RTOL * na;
    let tol_herm = HERM_RTOL * ns;
    Ok(DefectReport {
        defect_residual,
        sigma_hermiticity,
        tol_defect,
        tol_herm,
        pass: defect_residual <= tol_defect && sigma_hermiticity <= tol_herm,
    })
}

/// Factor `A - A* = i phi* sigma phi` with `sigma = diag(+-1)`.
///
/// Positive channels come first, each group ordered by decreasing magnitude.
/// Each row of `phi` is `sqrt|mu| u*` for an eigenpair `(mu, u)` of
/// `(A - A*)/i`, with `u` phased so its largest entry is real positive.
pub fn embed_defect(a: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    embed_defect_with(a, RANK_RTOL)
}

pub fn embed_defect_with(a: &CMatrix, rank_rtol: f64) -> Result<(CMatrix, CMatrix)> {
    if !linalg::is_square(a) {
        return Err(Error::Dimension(format!("A is {}x{}, not square", a.nrows(), a.ncols())));
    }
    let n = a.nrows();
    let cutoff = rank_rtol * spectral_norm(a);
    let m = (a - a.adjoint()) * (-I);
    let (vals, vecs) = herm_eig(&m);
    let mut pos: Vec<usize> = (0..n).filter(|&k| vals[k] > cutoff).collect();
    let mut neg: Vec<usize> = (0..n).filter(|&k| vals[k] < -cutoff).collect();
    pos.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]));
    neg.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    let order: Vec<usize> = pos.iter().chain(neg.iter()).copied().collect();
    let r = order.len();
    let mut phi = CMatrix::zeros(r, n);
    let mut sig = vec![0.0; r];
    for (row, &k) in order.iter().enumerate() {
        let u = vecs.column(k);
        let mut piv = 0;
        for i in 0..n {
            if u[i].norm() > u[piv].norm() + 1e-14 {
                piv = i;
            }
        }
        let phase = if u[piv].norm() > 0.0 { u[piv].conj() / u[piv].norm() } else { c(1.0, 0.0) };
        let s = vals[k].abs().sqrt();
        for i in 0..n {
            phi[(row, i)] = (u[i] * phase).conj() * s;
        }
        sig[row] = vals[k].signum();
    }
    Ok((phi, linalg::from_real_diag(&sig)))
}

impl PencilSystem {
    pub fn new(colligation: Colligation, b: CMatrix) -> Result<Self> {
        let n = colligation.dim_h();
        if b.nrows() != n || b.ncols() != n {
            return Err(Error::Dimension(format!(
                "B is {}x{}, expected {}x{}",
                b.nrows(),
                b.ncols(),
                n,
                n
            )));
        }
        if !linalg::all_finite(&b) {
            return Err(Error::Invalid("B has non-finite entries".into()));
        }
        let hr = linalg::hermitian_residual(&b);
        if hr > HERM_RTOL * spectral_norm(&b) {
            return Err(Error::Invalid(format!("B is not Hermitian (residual {hr:.3e})")));
        }
        Ok(PencilSystem { colligation, b })
    }

    pub fn n(&self) -> usize {
        self.colligation.dim_h()
    }

    pub fn a(&self) -> &CMatrix {
        &self.colligation.a
    }

    pub fn phi(&self) -> &CMatrix {
        &self.colligation.phi
    }

    pub fn sigma(&self) -> &CMatrix {
        &self.colligation.sigma
    }
}

/// `L(lambda) = lambda^2 I + lambda B + A`.
pub fn pencil_eval(p: &PencilSystem, lambda: C64) -> CMatrix {
    pencil_eval_parts(p.a(), &p.b, lambda)
}

pub fn pencil_eval_parts(a: &CMatrix, b: &CMatrix, lambda: C64) -> CMatrix {
    eye(a.nrows()) * (lambda * lambda) + b * lambda + a
}

/// `L(lambda)^{-1}`; a numerically singular pencil value is a spectral point.
///
/// Singularity is judged by `||L^{-1}|| (|lambda|^2 + |lambda| ||B|| + ||A||)`
/// in the 1-norm, which measures the distance to the pencil spectrum relative
/// to the size of the coefficients.
pub fn resolvent_eval(p: &PencilSystem, lambda: C64) -> Result<CMatrix> {
    resolvent_parts(p.a(), &p.b, lambda)
}

pub fn resolvent_parts(a: &CMatrix, b: &CMatrix, lambda: C64) -> Result<CMatrix> {
    let l = pencil_eval_parts(a, b, lambda);
    let singular = |cond: f64| {
        Error::SpectralPoint(format!("L({lambda}) is singular (condition estimate {cond:.3e})"))
    };
    let (inv, _) = linalg::inverse_cond(&l).map_err(|e| match e {
        Error::Singular { cond } => singular(cond),
        other => other,
    })?;
    let mag = lambda.norm_sqr() + lambda.norm() * linalg::norm1(b) + linalg::norm1(a);
    let cond = linalg::norm1(&inv) * mag.max(linalg::norm1(&l));
    if !(cond <= linalg::COND_LIMIT) {
        return Err(singular(cond));
    }
    Ok(inv)
}

/// Eigenvalues of the companion linearization `[[0, I], [-A, -B]]`.
pub fn pencil_spectrum(p: &PencilSystem) -> Result<Vec<C64>> {
    linalg::eigenvalues(&companion(p.a(), &p.b))
}

pub fn companion(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = a.nrows();
    linalg::block2(&CMatrix::zeros(n, n), &eye(n), &(-a), &(-b))
}
