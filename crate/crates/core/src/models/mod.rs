//! Discretized functional models on a grid of nodes with quadrature weights.
//!
//! Operators are represented in the orthonormal basis `sqrt(w_i) delta_i`, so
//! an integral operator with kernel `K(x, t)` becomes the matrix
//! `sqrt(w_i) K(x_i, x_j) sqrt(w_j)`.

pub mod anticommute;
pub mod hilbert;
pub mod riemann;
pub mod volterra;

pub use anticommute::{
    anticommutator_general, anticommuting_canonical_form, stieltjes_anticommutator, AnticommutingDecomposition,
    GeneralAnticommutator,
};
pub use hilbert::{hilbert_root, model_defect, model_pencil, model_quadruple, ModelDefect, ModelQuadruple};

pub use riemann::{riemann_charfn_direct, riemann_charfn_scalar, riemann_charfn_scalar_with, RiemannProblemData, RiemannQuad};
pub use volterra::{volterra_build, VolterraModel};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, C64};

/// Relative separation below which two nodes count as duplicates.
pub const NODE_SEP_RTOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct GridModel {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// The multiplier `b(x_i)`.
    pub mult_b: Vec<f64>,
    /// Channel values, `m x n`; column `i` is `v(x_i)`.
    pub v: CMatrix,
    /// Diagonal of the signature `J`.
    pub j: Vec<f64>,
}

impl GridModel {
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>, mult_b: Vec<f64>, v: CMatrix, j: Vec<f64>) -> Result<Self> {
        let n = nodes.len();
        if weights.len() != n || mult_b.len() != n || v.ncols() != n {
            return Err(Error::Dimension(format!(
                "{} nodes, {} weights, {} multiplier values, {} channel columns",
                n,
                weights.len(),
                mult_b.len(),
                v.ncols()
            )));
        }
        if j.len() != v.nrows() {
            return Err(Error::Dimension(format!("J has {} entries for {} channels", j.len(), v.nrows())));
        }
        if nodes.iter().chain(&weights).chain(&mult_b).any(|x| !x.is_finite()) || !linalg::all_finite(&v) {
            return Err(Error::Invalid("grid data must be finite".into()));
        }
        let scale = nodes.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
        for k in 1..n {
            if nodes[k] - nodes[k - 1] <= NODE_SEP_RTOL * scale {
                return Err(Error::Grid(format!(
                    "nodes must be strictly increasing (x[{}] = {}, x[{}] = {})",
                    k - 1,
                    nodes[k - 1],
                    k,
                    nodes[k]
                )));
            }
        }
        if let Some(w) = weights.iter().find(|w| **w <= 0.0) {
            return Err(Error::Invalid(format!("weights must be positive, found {w}")));
        }
        if let Some(s) = j.iter().find(|s| **s != 1.0 && **s != -1.0) {
            return Err(Error::Invalid(format!("J entries must be +1 or -1, found {s}")));
        }
        Ok(GridModel { nodes, weights, mult_b, v, j })
    }

    /// Midpoint grid of `n` nodes on `[a, b]` with weights `h`.
    pub fn midpoint<V, B>(a: f64, b: f64, n: usize, v: V, mult_b: B, j: Vec<f64>) -> Result<Self>
    where
        V: Fn(f64) -> Vec<C64>,
        B: Fn(f64) -> f64,
    {
        if n == 0 || !(b > a) {
            return Err(Error::Grid(format!("need n > 0 and a < b (n = {n}, [{a}, {b}])")));
        }
        let h = (b - a) / n as f64;
        let nodes: Vec<f64> = (0..n).map(|k| a + (k as f64 + 0.5) * h).collect();
        let m = j.len();
        let mut vm = CMatrix::zeros(m, n);
        for (k, &x) in nodes.iter().enumerate() {
            let col = v(x);
            if col.len() != m {
                return Err(Error::Dimension(format!("v(x) has {} entries, expected {m}", col.len())));
            }
            for (a, val) in col.into_iter().enumerate() {
                vm[(a, k)] = val;
            }
        }
        let mb = nodes.iter().map(|&x| mult_b(x)).collect();
        GridModel::new(nodes, vec![h; n], mb, vm, j)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.v.nrows()
    }

    pub fn sqrt_weights(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.sqrt()).collect()
    }

    /// `K(x, t) = sum_a v_a(x) J_a conj(v_a(t))`.
    pub fn channel_kernel(&self) -> KernelOnGrid {
        let n = self.len();
        let k = CMatrix::from_fn(n, n, |i, l| {
            (0..self.channels()).map(|a| self.v[(a, i)] * self.j[a] * self.v[(a, l)].conj()).sum()
        });
        KernelOnGrid::new(k)
    }

    /// `phi~`: column `j` is `sqrt(w_j) conj(v(x_j))`.
    pub fn phi(&self) -> CMatrix {
        let sw = self.sqrt_weights();
        CMatrix::from_fn(self.channels(), self.len(), |a, l| self.v[(a, l)].conj() * sw[l])
    }

    pub fn signature(&self) -> CMatrix {
        linalg::from_real_diag(&self.j)
    }
}

/// Kernel values `K(x_i, x_j)` on the grid.
#[derive(Debug, Clone)]
pub struct KernelOnGrid {
    pub k: CMatrix,
    pub hermitian: bool,
}

pub const KERNEL_HERM_RTOL: f64 = 1e-12;

impl KernelOnGrid {
    pub fn new(k: CMatrix) -> Self {
        let scale = linalg::max_abs(&k).max(f64::MIN_POSITIVE);
        let hermitian = k.is_square() && linalg::max_abs(&(&k - k.adjoint())) <= KERNEL_HERM_RTOL * scale;
        KernelOnGrid { k, hermitian }
    }

    pub fn from_fn<F: Fn(f64, f64) -> C64>(g: &GridModel, f: F) -> Self {
        let n = g.len();
        KernelOnGrid::new(CMatrix::from_fn(n, n, |i, j| f(g.nodes[i], g.nodes[j])))
    }

    pub fn zero(n: usize) -> Self {
        KernelOnGrid::new(CMatrix::zeros(n, n))
    }

    /// `sqrt(w_i) K_ij sqrt(w_j)`.
    pub fn weighted(&self, g: &GridModel) -> CMatrix {
        let sw = g.sqrt_weights();
        CMatrix::from_fn(self.k.nrows(), self.k.ncols(), |i, j| self.k[(i, j)] * (sw[i] * sw[j]))
    }

    pub(crate) fn check(&self, g: &GridModel, need_hermitian: bool) -> Result<()> {
        if self.k.nrows() != g.len() || self.k.ncols() != g.len() {
            return Err(Error::Dimension(format!(
                "kernel is {}x{} on a grid of {} nodes",
                self.k.nrows(),
                self.k.ncols(),
                g.len()
            )));
        }
        if !linalg::all_finite(&self.k) {
            return Err(Error::Invalid("kernel has non-finite entries".into()));
        }
        if need_hermitian && !self.hermitian {
            return Err(Error::Precondition("kernel must satisfy K(x,t)* = K(t,x)".into()));
        }
        Ok(())
    }
}

/// The same matrix with its diagonal set to zero.
pub fn offdiag(m: &CMatrix) -> CMatrix {
    let mut r = m.clone();
    for i in 0..r.nrows().min(r.ncols()) {
        r[(i, i)] = c(0.0, 0.0);
    }
    r
}
