//! Dense complex linear algebra used throughout the crate.
//!
//! Decompositions (LU, Schur, Hermitian eigen, SVD, matrix exponential) come
//! from nalgebra. Schur reordering and the triangular Sylvester solver are
//! implemented here because nalgebra does not provide them.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

/// Condition numbers above this are treated as numerically singular.
pub const COND_LIMIT: f64 = 1.0 / (64.0 * f64::EPSILON);

const POWER_ITERS: usize = 300;
const POWER_RTOL: f64 = 1e-13;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn eye(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> CMatrix {
    CMatrix::zeros(r, c)
}

pub fn from_diag(d: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(d))
}

pub fn from_real_diag(d: &[f64]) -> CMatrix {
    let n = d.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { c(d[i], 0.0) } else { ZERO })
}

pub fn scalar(z: C64) -> CMatrix {
    CMatrix::from_element(1, 1, z)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.norm()
}

/// Maximum absolute column sum.
pub fn norm1(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Spectral norm estimated by power iteration on `M*M` from a fixed start
/// vector. Falls back to the Frobenius norm if the iteration degenerates.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    let (r, n) = m.shape();
    if r == 0 || n == 0 {
        return 0.0;
    }
    let fro = m.norm();
    if fro == 0.0 || !fro.is_finite() {
        return fro;
    }
    if r == 1 || n == 1 {
        return fro;
    }
    let mut v = CVector::from_fn(n, |j, _| c(1.0 + j as f64 / n as f64, 0.1 * ((j % 3) as f64)));
    v /= c(v.norm(), 0.0);
    let mut est = 0.0;
    for _ in 0..POWER_ITERS {
        let w = m * &v;
        let z = m.adjoint() * &w;
        let zn = z.norm();
        if zn == 0.0 || !zn.is_finite() {
            return fro;
        }
        let new_est = w.norm();
        v = z / c(zn, 0.0);
        if (new_est - est).abs() <= POWER_RTOL * new_est {
            return new_est;
        }
        est = new_est;
    }
    est
}

pub fn is_square(m: &CMatrix) -> bool {
    m.nrows() == m.ncols()
}

pub fn hermitian_residual(m: &CMatrix) -> f64 {
    spectral_norm(&(m - m.adjoint()))
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Inverse with a 1-norm condition estimate. Fails if the matrix is
/// numerically singular.
pub fn inverse_cond(m: &CMatrix) -> Result<(CMatrix, f64)> {
    if !is_square(m) {
        return Err(Error::Dimension(format!(
            "cannot invert a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok((zeros(0, 0), 1.0));
    }
    let inv = m.clone().lu().try_inverse();
    match inv {
        Some(inv) if all_finite(&inv) => {
            let cond = norm1(m) * norm1(&inv);
            if cond.is_finite() && cond <= COND_LIMIT {
                Ok((inv, cond))
            } else {
                Err(Error::Singular { cond })
            }
        }
        _ => Err(Error::Singular { cond: f64::INFINITY }),
    }
}

pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    inverse_cond(m).map(|(inv, _)| inv)
}

/// Solve `M Z = R` with the same singularity test as [`inverse_cond`].
pub fn solve(m: &CMatrix, rhs: &CMatrix) -> Result<CMatrix> {
    Ok(inverse(m)? * rhs)
}

/// `(z I - M)^{-1}`, judged singular relative to `|z| + ||M||`.
pub fn shifted_inverse(m: &CMatrix, z: C64) -> Result<CMatrix> {
    let n = m.nrows();
    let (inv, _) = inverse_cond(&(eye(n) * z - m))?;
    let cond = norm1(&inv) * (z.norm() + norm1(m));
    if !(cond <= COND_LIMIT) {
        return Err(Error::Singular { cond });
    }
    Ok(inv)
}

/// Complex Schur form `M = Q T Q*` with `T` upper triangular.
pub fn schur(m: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((zeros(0, 0), zeros(0, 0)));
    }
    let s = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
    let (q, mut t) = s.unpack();
    for j in 0..n {
        for i in j + 1..n {
            t[(i, j)] = ZERO;
        }
    }
    Ok((q, t))
}

pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    let (_, t) = schur(m)?;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Swap the adjacent diagonal entries `k` and `k+1` of an upper triangular
/// `t`, updating `q` so that `q t q*` is unchanged.
fn swap_adjacent(q: &mut CMatrix, t: &mut CMatrix, k: usize) {
    let t11 = t[(k, k)];
    let t22 = t[(k + 1, k + 1)];
    let x0 = t[(k, k + 1)];
    let x1 = t22 - t11;
    let r = (x0.norm_sqr() + x1.norm_sqr()).sqrt();
    if r == 0.0 {
        return;
    }
    // Unitary G = [[g0, -conj(g1)], [g1, conj(g0)]] whose first column is
    // the eigenvector of the 2x2 block for t22.
    let g0 = x0 / r;
    let g1 = x1 / r;
    let n = t.nrows();
    for j in 0..n {
        let a = t[(k, j)];
        let b = t[(k + 1, j)];
        t[(k, j)] = g0.conj() * a + g1.conj() * b;
        t[(k + 1, j)] = -g1 * a + g0 * b;
    }
    for i in 0..n {
        let a = t[(i, k)];
        let b = t[(i, k + 1)];
        t[(i, k)] = a * g0 + b * g1;
        t[(i, k + 1)] = -a * g1.conj() + b * g0.conj();
    }
    for i in 0..q.nrows() {
        let a = q[(i, k)];
        let b = q[(i, k + 1)];
        q[(i, k)] = a * g0 + b * g1;
        q[(i, k + 1)] = -a * g1.conj() + b * g0.conj();
    }
    t[(k + 1, k)] = ZERO;
    t[(k, k)] = t22;
    t[(k + 1, k + 1)] = t11;
}

/// Reorder a complex Schur form so that the diagonal entries flagged in
/// `select` (indexed by current diagonal position) come first, preserving
/// relative order within each group. Returns the number selected.
pub fn schur_reorder(q: &mut CMatrix, t: &mut CMatrix, select: &[bool]) -> usize {
    let n = t.nrows();
    let mut flags = select.to_vec();
    let mut placed = 0;
    for i in 0..n {
        if flags[i] {
            let mut k = i;
            while k > placed {
                swap_adjacent(q, t, k - 1);
                flags.swap(k - 1, k);
                k -= 1;
            }
            placed += 1;
        }
    }
    placed
}

/// Errors from the Sylvester solver carry the smallest `|a_i + b_j|`.
#[derive(Debug, Clone, Copy)]
pub struct SylvesterInfo {
    pub min_sep: f64,
}

/// Solve `A Z + Z B = C` by the Bartels-Stewart method on complex Schur forms.
pub fn sylvester(a: &CMatrix, b: &CMatrix, cm: &CMatrix) -> Result<(CMatrix, SylvesterInfo)> {
    let m = a.nrows();
    let n = b.nrows();
    if !is_square(a) || !is_square(b) || cm.nrows() != m || cm.ncols() != n {
        return Err(Error::Dimension(format!(
            "sylvester: A {}x{}, B {}x{}, C {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols(),
            cm.nrows(),
            cm.ncols()
        )));
    }
    if m == 0 || n == 0 {
        return Ok((zeros(m, n), SylvesterInfo { min_sep: f64::INFINITY }));
    }
    let (qa, ta) = schur(a)?;
    let (qb, tb) = schur(b)?;
    let mut min_sep = f64::INFINITY;
    for i in 0..m {
        for j in 0..n {
            min_sep = min_sep.min((ta[(i, i)] + tb[(j, j)]).norm());
        }
    }
    let scale = 1.0 + max_abs(&ta) + max_abs(&tb);
    if !(min_sep > 1e3 * f64::EPSILON * scale) {
        return Err(Error::Overlap { min_sep });
    }
    let f = qa.adjoint() * cm * &qb;
    let mut w = zeros(m, n);
    for j in 0..n {
        let mut rhs: Vec<C64> = (0..m).map(|i| f[(i, j)]).collect();
        for k in 0..j {
            let tkj = tb[(k, j)];
            if tkj != ZERO {
                for i in 0..m {
                    rhs[i] -= w[(i, k)] * tkj;
                }
            }
        }
        let shift = tb[(j, j)];
        for i in (0..m).rev() {
            let mut s = rhs[i];
            for l in i + 1..m {
                s -= ta[(i, l)] * w[(l, j)];
            }
            w[(i, j)] = s / (ta[(i, i)] + shift);
        }
    }
    Ok((&qa * w * qb.adjoint(), SylvesterInfo { min_sep }))
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn herm_eig(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (vec![], zeros(0, 0));
    }
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let e = SymmetricEigen::new(h);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| e.eigenvalues[i].total_cmp(&e.eigenvalues[j]));
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = CMatrix::from_fn(n, n, |r, k| e.eigenvectors[(r, idx[k])]);
    (vals, vecs)
}

/// Thin SVD `m = U diag(s) V*`, singular values descending.
pub fn svd(m: &CMatrix) -> (CMatrix, Vec<f64>, CMatrix) {
    let (r, cc) = m.shape();
    let k = r.min(cc);
    if k == 0 {
        return (zeros(r, 0), vec![], zeros(cc, 0));
    }
    let s = SVD::new(m.clone(), true, true);
    let u = s.u.expect("U requested");
    let vt = s.v_t.expect("V requested");
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&i, &j| s.singular_values[j].total_cmp(&s.singular_values[i]));
    let sv = idx.iter().map(|&i| s.singular_values[i]).collect();
    let uu = CMatrix::from_fn(r, k, |a, b| u[(a, idx[b])]);
    let vv = CMatrix::from_fn(cc, k, |a, b| vt[(idx[b], a)].conj());
    (uu, sv, vv)
}

/// Orthonormal basis of the orthogonal complement of the column span of `m`
/// (columns of `m` assumed orthonormal).
pub fn orth_complement(m: &CMatrix, n: usize) -> CMatrix {
    let k = m.ncols();
    if k == 0 {
        return eye(n);
    }
    let p = eye(n) - m * m.adjoint();
    let (vals, vecs) = herm_eig(&p);
    let cols: Vec<usize> = (0..n).filter(|&i| vals[i] > 0.5).collect();
    CMatrix::from_fn(n, cols.len(), |r, j| vecs[(r, cols[j])])
}

/// Matrix exponential (scaling and squaring with Pade approximants).
pub fn expm(m: &CMatrix) -> CMatrix {
    if m.nrows() == 0 {
        return zeros(0, 0);
    }
    m.exp()
}

pub fn hstack(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.nrows(), b.nrows());
    let (r, ca, cb) = (a.nrows(), a.ncols(), b.ncols());
    CMatrix::from_fn(r, ca + cb, |i, j| if j < ca { a[(i, j)] } else { b[(i, j - ca)] })
}

pub fn vstack(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.ncols());
    let (ra, rb, cc) = (a.nrows(), b.nrows(), a.ncols());
    CMatrix::from_fn(ra + rb, cc, |i, j| if i < ra { a[(i, j)] } else { b[(i - ra, j)] })
}

/// Block matrix `[[a, b], [c, d]]`.
pub fn block2(a: &CMatrix, b: &CMatrix, cc: &CMatrix, d: &CMatrix) -> CMatrix {
    vstack(&hstack(a, b), &hstack(cc, d))
}

pub fn block_diag(a: &CMatrix, b: &CMatrix) -> CMatrix {
    block2(a, &zeros(a.nrows(), b.ncols()), &zeros(b.nrows(), a.ncols()), b)
}

/// Smallest distance between a point of `a` and a point of `b`.
pub fn set_distance(a: &[C64], b: &[C64]) -> f64 {
    let mut d = f64::INFINITY;
    for x in a {
        for y in b {
            d = d.min((x - y).norm());
        }
    }
    d
}
