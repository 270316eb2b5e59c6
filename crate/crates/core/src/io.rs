//! JSON file formats. Complex numbers are `[re, im]` pairs; plain numbers are
//! accepted as real values.

use serde::{Deserialize, Serialize};

use crate::colligation::{Colligation, PencilSystem};
use crate::coupling::{ChainFactor, ChainSpec, ContinuousLimitSpec, Profile};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, C64};
use crate::models::{GridModel, KernelOnGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CNum {
    Pair([f64; 2]),
    Real(f64),
}

impl CNum {
    pub fn value(self) -> C64 {
        match self {
            CNum::Pair([re, im]) => c(re, im),
            CNum::Real(re) => c(re, 0.0),
        }
    }
}

impl From<C64> for CNum {
    fn from(z: C64) -> Self {
        CNum::Pair([z.re, z.im])
    }
}

pub type MatrixJson = Vec<Vec<CNum>>;

pub fn matrix_from_json(rows: &MatrixJson) -> Result<CMatrix> {
    let r = rows.len();
    let cc = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != cc) {
        return Err(Error::Dimension("matrix rows have different lengths".into()));
    }
    Ok(CMatrix::from_fn(r, cc, |i, j| rows[i][j].value()))
}

pub fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].into()).collect()).collect()
}

pub fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

/// A pencil system. Without `phi` and `sigma` the channel is obtained from
/// the defect of `A`; without `b` the damping is zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PencilFile {
    pub a: MatrixJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<MatrixJson>,
}

impl PencilFile {
    pub fn to_system(&self) -> Result<PencilSystem> {
        let a = matrix_from_json(&self.a)?;
        let col = match (&self.phi, &self.sigma) {
            (Some(phi), Some(sigma)) => {
                let phi = matrix_from_json(phi)?;
                // An empty channel still needs the right number of columns.
                let phi = if phi.nrows() == 0 { CMatrix::zeros(0, a.nrows()) } else { phi };
                Colligation::new(a, phi, matrix_from_json(sigma)?)?
            }
            (None, None) => Colligation::from_operator(a)?,
            _ => return Err(Error::Invalid("phi and sigma must be given together".into())),
        };
        let n = col.dim_h();
        let b = match &self.b {
            Some(b) => matrix_from_json(b)?,
            None => CMatrix::zeros(n, n),
        };
        PencilSystem::new(col, b)
    }

    pub fn from_system(p: &PencilSystem) -> Self {
        PencilFile {
            a: matrix_to_json(p.a()),
            b: Some(matrix_to_json(&p.b)),
            phi: Some(matrix_to_json(p.phi())),
            sigma: Some(matrix_to_json(p.sigma())),
        }
    }
}

pub fn parse_pencil(text: &str) -> Result<PencilSystem> {
    parse::<PencilFile>(text)?.to_system()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileJson {
    Constant(f64),
    Samples(Vec<f64>),
}

impl ProfileJson {
    pub fn to_profile(&self) -> Profile {
        match self {
            ProfileJson::Constant(v) => Profile::Constant(*v),
            ProfileJson::Samples(s) => Profile::Samples(s.clone()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorJson {
    pub b: f64,
    pub lambda: CNum,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuousJson {
    pub l: f64,
    pub b: ProfileJson,
    pub a: ProfileJson,
}

impl ContinuousJson {
    pub fn to_spec(&self) -> Result<ContinuousLimitSpec> {
        ContinuousLimitSpec::new(self.l, self.b.to_profile(), self.a.to_profile())
    }
}

/// A chain of elementary factors, a continuous limit, or both (the product
/// of the two).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ChainFile {
    #[serde(default)]
    pub factors: Vec<FactorJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuous: Option<ContinuousJson>,
}

impl ChainFile {
    pub fn to_spec(&self) -> Result<(ChainSpec, Option<ContinuousLimitSpec>)> {
        let factors = self
            .factors
            .iter()
            .map(|f| {
                let mut cf = ChainFactor::new(f.b, f.lambda.value())?;
                if let Some(beta) = f.beta {
                    cf.beta = beta;
                }
                Ok(cf)
            })
            .collect::<Result<Vec<_>>>()?;
        let cont = self.continuous.as_ref().map(|c| c.to_spec()).transpose()?;
        Ok((ChainSpec::new(factors)?, cont))
    }
}

/// A grid model. `v` lists channel values per channel (rows) and node
/// (columns) and defaults to one channel equal to 1; `j` defaults to +1 per
/// channel; `b` defaults to 0; `kernel` defaults to the channel kernel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridFile {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<MatrixJson>,
    /// Diagonal multiplier for the Hilbert root, or the even multiplier of
    /// the symmetric term for the general anti-commutator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<f64>>,
}

impl GridFile {
    pub fn to_grid(&self) -> Result<GridModel> {
        let n = self.nodes.len();
        let v = match &self.v {
            Some(v) => matrix_from_json(v)?,
            None => CMatrix::from_element(1, n, c(1.0, 0.0)),
        };
        let j = self.j.clone().unwrap_or_else(|| vec![1.0; v.nrows()]);
        let b = self.b.clone().unwrap_or_else(|| vec![0.0; n]);
        GridModel::new(self.nodes.clone(), self.weights.clone(), b, v, j)
    }

    pub fn kernel(&self, g: &GridModel) -> Result<KernelOnGrid> {
        match &self.kernel {
            Some(k) => Ok(KernelOnGrid::new(matrix_from_json(k)?)),
            None => Ok(g.channel_kernel()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnticanonFile {
    pub b: MatrixJson,
    pub d: MatrixJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VolterraFile {
    pub l: f64,
    pub b: ProfileJson,
    pub a: ProfileJson,
    #[serde(default = "default_volterra_nodes")]
    pub nodes: usize,
}

fn default_volterra_nodes() -> usize {
    256
}

/// Scalar Riemann problem data on `interval`; `v` and `b` are constants or
/// uniform samples including both endpoints.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiemannFile {
    pub interval: [f64; 2],
    pub v: ProfileJson,
    #[serde(default = "zero_profile")]
    pub b: ProfileJson,
    #[serde(default = "plus_one")]
    pub j: f64,
}

fn zero_profile() -> ProfileJson {
    ProfileJson::Constant(0.0)
}

fn plus_one() -> f64 {
    1.0
}

impl RiemannFile {
    pub fn to_data(&self) -> Result<crate::models::RiemannProblemData> {
        use std::sync::Arc;
        let [lo, hi] = self.interval;
        let width = hi - lo;
        let sampled = |p: Profile| move |x: f64| p.eval(x - lo, width);
        let v = sampled(self.v.to_profile());
        let b = sampled(self.b.to_profile());
        crate::models::RiemannProblemData::new(lo, hi, Arc::new(move |x| c(v(x), 0.0)), Arc::new(b), self.j)
    }
}
