//! Hermitian solutions of `{D, B} = -K` on a grid and the canonical form of
//! an anti-commuting Hermitian pair.

use super::{GridModel, KernelOnGrid};
use crate::error::{Error, Result};
use crate::linalg::{self, c, eye, from_real_diag, herm_eig, hstack, spectral_norm, svd, CMatrix};

/// `D~_ij = -K^_ij / (x_i + x_j)` for a grid of positive nodes, so that
/// `D~ B~ + B~ D~ = -K^` with `B~ = diag(x)`.
pub fn stieltjes_anticommutator(g: &GridModel, k: &KernelOnGrid) -> Result<CMatrix> {
    k.check(g, true)?;
    if let Some(x) = g.nodes.iter().find(|x| **x <= 0.0) {
        return Err(Error::Precondition(format!("nodes must be positive, found {x}")));
    }
    let kh = k.weighted(g);
    let x = &g.nodes;
    let n = g.len();
    Ok(CMatrix::from_fn(n, n, |i, j| -kh[(i, j)] / (x[i] + x[j])))
}

#[derive(Debug, Clone)]
pub struct GeneralAnticommutator {
    pub d: CMatrix,
    /// Index of the node at `-x_i`, if present.
    pub partner: Vec<Option<usize>>,
    /// `max |K^_ij|` over antipodal pairs. The Stieltjes term is undefined
    /// there, so `{D, B} = -K^` can only hold if this vanishes.
    pub antipodal_defect: f64,
}

const PAIR_RTOL: f64 = 1e-12;

/// Anti-commutator solution on a grid with nodes of both signs.
///
/// `D~ = S + M` where `S` is the Stieltjes term `-K^_ij / (x_i + x_j)` on
/// non-antipodal pairs and `M` swaps `x` and `-x` with the even multiplier
/// `n_sym` (only for channel values `v = I`). Antipodal nodes must carry equal
/// weights.
pub fn anticommutator_general(g: &GridModel, k: &KernelOnGrid, n_sym: Option<&[f64]>) -> Result<GeneralAnticommutator> {
    k.check(g, true)?;
    let n = g.len();
    let x = &g.nodes;
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    if let Some(z) = x.iter().find(|v| v.abs() <= super::NODE_SEP_RTOL * scale) {
        return Err(Error::Precondition(format!("nodes must avoid 0, found {z}")));
    }
    let partner: Vec<Option<usize>> =
        (0..n).map(|i| (0..n).find(|&j| (x[i] + x[j]).abs() <= PAIR_RTOL * scale)).collect();
    if let Some(m) = n_sym {
        if m.len() != n {
            return Err(Error::Dimension(format!("{} symmetric multipliers on {n} nodes", m.len())));
        }
        for i in 0..n {
            if m[i] < 0.0 || !m[i].is_finite() {
                return Err(Error::Invalid(format!("symmetric multiplier must be finite and >= 0, got {}", m[i])));
            }
            if m[i] == 0.0 {
                continue;
            }
            let Some(p) = partner[i] else {
                return Err(Error::Pairing(format!("node {} has no mirror node", x[i])));
            };
            if (g.weights[i] - g.weights[p]).abs() > PAIR_RTOL * g.weights[i].max(g.weights[p]) {
                return Err(Error::Pairing(format!("nodes {} and {} have unequal weights", x[i], x[p])));
            }
            if (m[i] - m[p]).abs() > PAIR_RTOL * m[i].max(m[p]) {
                return Err(Error::Pairing(format!("multiplier is not even at {}", x[i])));
            }
        }
    }
    let kh = k.weighted(g);
    let mut antipodal_defect = 0.0f64;
    let d = CMatrix::from_fn(n, n, |i, j| {
        if partner[i] == Some(j) {
            antipodal_defect = antipodal_defect.max(kh[(i, j)].norm());
            c(n_sym.map_or(0.0, |m| m[i]), 0.0)
        } else {
            -kh[(i, j)] / (x[i] + x[j])
        }
    });
    Ok(GeneralAnticommutator { d, partner, antipodal_defect })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CanonicalResiduals {
    pub anticommutator: f64,
    pub corner_plus: f64,
    pub corner_minus: f64,
    pub reconstruction_b: f64,
    pub reconstruction_d: f64,
    /// `||B_- |G| - |G| B_-||`.
    pub commutator: f64,
    /// `||E_+* B E_+ - V B_- V*||`.
    pub equivalence: f64,
}

/// `B = E+ B- E+* - E- B- E-* + E0 B0 E0*`,
/// `D = E+ |G| E-* + E- |G| E+* + E0 D0 E0*`, where the columns of
/// `[E+, E-, E0]` are orthonormal and `V = I` identifies `G-` with `G+`.
#[derive(Debug, Clone)]
pub struct AnticommutingDecomposition {
    pub e_plus: CMatrix,
    pub e_minus: CMatrix,
    pub e_zero: CMatrix,
    pub b_minus: CMatrix,
    pub gamma_abs: CMatrix,
    pub v: CMatrix,
    pub b_zero: CMatrix,
    pub d_zero: CMatrix,
    pub residuals: CanonicalResiduals,
}

impl AnticommutingDecomposition {
    pub fn rank(&self) -> usize {
        self.b_minus.nrows()
    }

    pub fn reconstruct(&self) -> (CMatrix, CMatrix) {
        let vb = &self.v * &self.b_minus * self.v.adjoint();
        let b = &self.e_plus * vb * self.e_plus.adjoint() - &self.e_minus * &self.b_minus * self.e_minus.adjoint()
            + &self.e_zero * &self.b_zero * self.e_zero.adjoint();
        let vg = &self.v * &self.gamma_abs;
        let d = &self.e_plus * &vg * self.e_minus.adjoint()
            + &self.e_minus * vg.adjoint() * self.e_plus.adjoint()
            + &self.e_zero * &self.d_zero * self.e_zero.adjoint();
        (b, d)
    }
}

pub const ANTICOMMUTE_RTOL: f64 = 1e-10;
const RANK_RTOL: f64 = 1e-10;

pub fn anticommuting_canonical_form(b: &CMatrix, d: &CMatrix) -> Result<AnticommutingDecomposition> {
    let n = b.nrows();
    if !b.is_square() || d.shape() != b.shape() {
        return Err(Error::Dimension(format!("B is {:?}, D is {:?}", b.shape(), d.shape())));
    }
    if !linalg::all_finite(b) || !linalg::all_finite(d) {
        return Err(Error::Invalid("B and D must be finite".into()));
    }
    let (nb, nd) = (spectral_norm(b), spectral_norm(d));
    for (name, m, s) in [("B", b, nb), ("D", d, nd)] {
        if linalg::hermitian_residual(m) > 1e-12 * s {
            return Err(Error::Invalid(format!("{name} is not Hermitian")));
        }
    }
    let anti = spectral_norm(&(d * b + b * d));
    if anti > ANTICOMMUTE_RTOL * (nb * nd).max(f64::MIN_POSITIVE) {
        return Err(Error::Precondition(format!("||DB + BD|| = {anti:.3e} exceeds tolerance")));
    }

    let (vals, vecs) = herm_eig(b);
    let tol = RANK_RTOL * nb;
    let pick = |f: &dyn Fn(f64) -> bool| {
        let cols: Vec<usize> = (0..n).filter(|&i| f(vals[i])).collect();
        CMatrix::from_fn(n, cols.len(), |r, k| vecs[(r, cols[k])])
    };
    let u_plus = pick(&|v| v > tol);
    let u_minus = pick(&|v| v < -tol);

    let corner_plus = spectral_norm(&(u_plus.adjoint() * d * &u_plus));
    let corner_minus = spectral_norm(&(u_minus.adjoint() * d * &u_minus));

    let gamma = u_plus.adjoint() * d * &u_minus;
    let (w, s, z) = svd(&gamma);
    let r = s.iter().filter(|&&v| v > RANK_RTOL * nd).count();
    let w_r = w.columns(0, r).into_owned();
    let z_r = z.columns(0, r).into_owned();
    let e_plus = &u_plus * w_r;
    let e_minus = &u_minus * z_r;
    let e_zero = linalg::orth_complement(&hstack(&e_plus, &e_minus), n);

    let b_minus = -(e_minus.adjoint() * b * &e_minus);
    let b_plus = e_plus.adjoint() * b * &e_plus;
    let gamma_abs = from_real_diag(&s[..r]);
    let v = eye(r);
    let b_zero = e_zero.adjoint() * b * &e_zero;
    let d_zero = e_zero.adjoint() * d * &e_zero;

    let mut dec = AnticommutingDecomposition {
        e_plus,
        e_minus,
        e_zero,
        b_minus,
        gamma_abs,
        v,
        b_zero,
        d_zero,
        residuals: CanonicalResiduals::default(),
    };
    let (br, dr) = dec.reconstruct();
    dec.residuals = CanonicalResiduals {
        anticommutator: anti,
        corner_plus,
        corner_minus,
        reconstruction_b: spectral_norm(&(b - br)),
        reconstruction_d: spectral_norm(&(d - dr)),
        commutator: spectral_norm(&(&dec.b_minus * &dec.gamma_abs - &dec.gamma_abs * &dec.b_minus)),
        equivalence: spectral_norm(&(b_plus - &dec.v * &dec.b_minus * dec.v.adjoint())),
    };
    Ok(dec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, ONE};

    fn grid(nodes: Vec<f64>) -> GridModel {
        let n = nodes.len();
        GridModel::new(nodes, vec![1.0; n], vec![0.0; n], CMatrix::from_element(1, n, ONE), vec![1.0]).unwrap()
    }

    #[test]
    fn single_node_stieltjes() {
        let g = grid(vec![2.0]);
        let k = KernelOnGrid::new(CMatrix::from_element(1, 1, c(3.0, 0.0)));
        let d = stieltjes_anticommutator(&g, &k).unwrap();
        assert_eq!(d[(0, 0)], c(-0.75, 0.0));
        assert_eq!(d[(0, 0)] * 4.0, c(-3.0, 0.0));
    }

    #[test]
    fn pauli_swap() {
        let g = grid(vec![-1.0, 1.0]);
        let r = anticommutator_general(&g, &KernelOnGrid::zero(2), Some(&[1.0, 1.0])).unwrap();
        assert_eq!(r.d, CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), ONE, ONE, c(0.0, 0.0)]));
        let b = from_real_diag(&g.nodes);
        assert_eq!(max_abs(&(&r.d * &b + &b * &r.d)), 0.0);
    }

    #[test]
    fn unpaired_symmetric_term_rejected() {
        let g = grid(vec![-1.0, 2.0]);
        let r = anticommutator_general(&g, &KernelOnGrid::zero(2), Some(&[1.0, 1.0]));
        assert!(matches!(r, Err(Error::Pairing(_))));
        assert!(matches!(stieltjes_anticommutator(&g, &KernelOnGrid::zero(2)), Err(Error::Precondition(_))));
    }

    #[test]
    fn zero_d_goes_to_g0() {
        let b = from_real_diag(&[1.0, -2.0, 0.0]);
        let dec = anticommuting_canonical_form(&b, &CMatrix::zeros(3, 3)).unwrap();
        assert_eq!(dec.rank(), 0);
        assert_eq!(dec.e_zero.ncols(), 3);
        assert!(max_abs(&dec.d_zero) == 0.0);
        assert!(dec.residuals.reconstruction_b < 1e-14);
    }

    #[test]
    fn pauli_blocks_recovered() {
        let x = [0.5, 1.5];
        let nn = [2.0, 0.25];
        let b = from_real_diag(&[x[0], x[1], -x[0], -x[1]]);
        let mut d = CMatrix::zeros(4, 4);
        for k in 0..2 {
            d[(k, k + 2)] = c(nn[k], 0.0);
            d[(k + 2, k)] = c(nn[k], 0.0);
        }
        let dec = anticommuting_canonical_form(&b, &d).unwrap();
        assert_eq!(dec.rank(), 2);
        let (bm, _) = herm_eig(&dec.b_minus);
        assert!((bm[0] - 0.5).abs() < 1e-12 && (bm[1] - 1.5).abs() < 1e-12);
        assert!((dec.gamma_abs[(0, 0)].re - 2.0).abs() < 1e-12);
        assert!((dec.gamma_abs[(1, 1)].re - 0.25).abs() < 1e-12);
        assert!(max_abs(&(&dec.v - eye(2))) == 0.0);
        let r = dec.residuals;
        assert!(r.reconstruction_b < 1e-12 && r.reconstruction_d < 1e-12 && r.commutator < 1e-12);
        assert!(r.equivalence < 1e-12);
    }

    #[test]
    fn non_anticommuting_rejected() {
        let b = from_real_diag(&[1.0, 2.0]);
        let d = eye(2);
        assert!(matches!(anticommuting_canonical_form(&b, &d), Err(Error::Precondition(_))));
    }
}
