//! Second-order open system `h'' + B h' + A h = phi* sigma u`, `v = u - i phi h`,
//! solved through the factored closed forms.

use crate::charfn::char_fn_sample;
use crate::colligation::{resolvent_eval, PencilSystem};
use crate::error::{Error, Result};
use crate::factor::FactoredPencil;
use crate::linalg::{self, c, expm, CMatrix, CVector, C64, I};

/// Input signal for the open system.
#[derive(Debug, Clone)]
pub enum InputSignal {
    Zero,
    /// `u(t) = exp(lambda t) u0`.
    PlaneWave { lambda: C64, u0: CVector },
    /// Samples at increasing times, linearly interpolated in between.
    Sampled { times: Vec<f64>, values: Vec<CVector> },
}

impl InputSignal {
    pub fn eval(&self, t: f64, m: usize) -> CVector {
        match self {
            InputSignal::Zero => CVector::zeros(m),
            InputSignal::PlaneWave { lambda, u0 } => u0 * (lambda * t).exp(),
            InputSignal::Sampled { times, values } => {
                let k = times.partition_point(|&s| s <= t);
                if k == 0 {
                    return values[0].clone();
                }
                if k >= times.len() {
                    return values[times.len() - 1].clone();
                }
                let (t0, t1) = (times[k - 1], times[k]);
                let w = (t - t0) / (t1 - t0);
                &values[k - 1] * c(1.0 - w, 0.0) + &values[k] * c(w, 0.0)
            }
        }
    }

    fn check(&self, m: usize, horizon: f64) -> Result<()> {
        match self {
            InputSignal::Zero => Ok(()),
            InputSignal::PlaneWave { u0, .. } => {
                if u0.len() != m {
                    return Err(Error::Dimension(format!("u0 has {} entries, dim E is {m}", u0.len())));
                }
                Ok(())
            }
            InputSignal::Sampled { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return Err(Error::Invalid("sampled input needs matching nonempty times and values".into()));
                }
                if values.iter().any(|v| v.len() != m) {
                    return Err(Error::Dimension(format!("input samples must have {m} entries")));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::Invalid("input sample times must increase".into()));
                }
                let tol = 1e-9 * horizon.max(1.0);
                if times[0] > tol || times[times.len() - 1] < horizon - tol {
                    return Err(Error::Invalid("input samples must cover [0, T]".into()));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub h: Vec<CVector>,
    pub hdot: Vec<CVector>,
    pub u: Vec<CVector>,
    pub v: Vec<CVector>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Uniform grid `0, dt, ..., T`; `dt` must divide `T` up to rounding.
pub fn uniform_times(horizon: f64, dt: f64) -> Result<Vec<f64>> {
    if !(horizon > 0.0) || !(dt > 0.0) || !horizon.is_finite() || !dt.is_finite() {
        return Err(Error::Invalid(format!("need T > 0 and dt > 0 (T = {horizon}, dt = {dt})")));
    }
    let steps = (horizon / dt).round();
    if (steps * dt - horizon).abs() > 1e-9 * horizon || steps < 1.0 {
        return Err(Error::Invalid(format!("dt = {dt} does not divide T = {horizon}")));
    }
    let steps = steps as usize;
    Ok((0..=steps).map(|j| horizon * j as f64 / steps as f64).collect())
}

fn check_uniform(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::Invalid("need at least two sample times".into()));
    }
    if times[0].abs() > 1e-14 {
        return Err(Error::Invalid("time grid must start at 0".into()));
    }
    let h = times[1] - times[0];
    for w in times.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1e-300) * times.len() as f64 {
            return Err(Error::Invalid("time grid must be uniform".into()));
        }
    }
    Ok(h)
}

fn outputs(p: &PencilSystem, h: &[CVector], u: &[CVector]) -> Vec<CVector> {
    h.iter().zip(u).map(|(hh, uu)| uu - (p.phi() * hh) * I).collect()
}

/// Initial-data part `F0(t) = e^{tX} g + K e^{tY} g~` with `g~ = h1 - X h0`,
/// `g = h0 - K g~`. Returns `(F0, F0')` at each time.
fn homogeneous_parts(f: &FactoredPencil, h0: &CVector, h1: &CVector, times: &[f64]) -> (Vec<CVector>, Vec<CVector>) {
    let gt = h1 - &f.x * h0;
    let g = h0 - &f.k * &gt;
    let mut hs = Vec::with_capacity(times.len());
    let mut ds = Vec::with_capacity(times.len());
    for &t in times {
        let ex = expm(&(&f.x * c(t, 0.0))) * &g;
        let ey = expm(&(&f.y * c(t, 0.0))) * &gt;
        hs.push(&ex + &f.k * &ey);
        ds.push(&f.x * ex + &f.k * (&f.y * ey));
    }
    (hs, ds)
}

fn check_initial(p: &PencilSystem, f: &FactoredPencil, h0: &CVector, h1: &CVector) -> Result<()> {
    let n = p.n();
    if f.n() != n || h0.len() != n || h1.len() != n {
        return Err(Error::Dimension(format!(
            "state dimension {n}, roots {}, h0 {}, h1 {}",
            f.n(),
            h0.len(),
            h1.len()
        )));
    }
    Ok(())
}

/// Free motion from `(h0, h1)` with `u = 0`.
pub fn solve_homogeneous(p: &PencilSystem, f: &FactoredPencil, h0: &CVector, h1: &CVector, times: &[f64]) -> Result<Trajectory> {
    check_initial(p, f, h0, h1)?;
    let m = p.colligation.dim_e();
    let (h, hdot) = homogeneous_parts(f, h0, h1, times);
    let u = vec![CVector::zeros(m); times.len()];
    let v = outputs(p, &h, &u);
    Ok(Trajectory { times: times.to_vec(), h, hdot, u, v })
}

/// `J(t_j) = \int_0^{t_j} e^{(t_j - s) M} g(s) ds` on a uniform grid by
/// composite Simpson, run as two interleaved recursions (even and odd nodes).
fn convolve(m: &CMatrix, g: &[CVector], h: f64) -> Vec<CVector> {
    let n = m.nrows();
    let len = g.len();
    let mut out = vec![CVector::zeros(n); len];
    if len < 2 {
        return out;
    }
    let e1 = expm(&(m * c(h, 0.0)));
    if len == 2 {
        out[1] = (&e1 * &g[0] + &g[1]) * c(0.5 * h, 0.0);
        return out;
    }
    let e2 = &e1 * &e1;
    let em1 = expm(&(m * c(-h, 0.0)));
    // First step by the three-point rule on [0, h] using samples at 0, h, 2h.
    out[1] = (&e1 * &g[0] * c(5.0, 0.0) + &g[1] * c(8.0, 0.0) - &em1 * &g[2]) * c(h / 12.0, 0.0);
    let w = c(h / 3.0, 0.0);
    for j in 2..len {
        let panel = (&e2 * &g[j - 2] + &e1 * &g[j - 1] * c(4.0, 0.0) + &g[j]) * w;
        out[j] = &e2 * &out[j - 2] + panel;
    }
    out
}

/// Zero-initial-data response to the input:
/// `F1(t) = -\int e^{(t-s)X} K f(s) ds + K \int e^{(t-s)Y} f(s) ds`,
/// `f = phi* sigma u`.
fn forced_parts(p: &PencilSystem, f: &FactoredPencil, u: &[CVector], h: f64) -> (Vec<CVector>, Vec<CVector>) {
    let drive = p.phi().adjoint() * p.sigma();
    let fs: Vec<CVector> = u.iter().map(|uu| &drive * uu).collect();
    let kfs: Vec<CVector> = fs.iter().map(|v| &f.k * v).collect();
    let ix = convolve(&f.x, &kfs, h);
    let iy = convolve(&f.y, &fs, h);
    let hs = ix.iter().zip(&iy).map(|(a, b)| &f.k * b - a).collect();
    let ds = ix.iter().zip(&iy).map(|(a, b)| &f.k * (&f.y * b) - &f.x * a).collect();
    (hs, ds)
}

/// Response to the input with zero initial data. `times` must be a uniform
/// grid starting at 0.
pub fn solve_forced(p: &PencilSystem, f: &FactoredPencil, input: &InputSignal, times: &[f64]) -> Result<Trajectory> {
    let n = p.n();
    solve_full(p, f, &CVector::zeros(n), &CVector::zeros(n), input, times)
}

/// Full Cauchy solution `h = F0 + F1`.
pub fn solve_full(p: &PencilSystem, f: &FactoredPencil, h0: &CVector, h1: &CVector, input: &InputSignal, times: &[f64]) -> Result<Trajectory> {
    check_initial(p, f, h0, h1)?;
    let dt = check_uniform(times)?;
    let m = p.colligation.dim_e();
    input.check(m, times[times.len() - 1])?;
    let u: Vec<CVector> = times.iter().map(|&t| input.eval(t, m)).collect();
    let (h_free, d_free) = homogeneous_parts(f, h0, h1, times);
    let (h_forced, d_forced) = forced_parts(p, f, &u, dt);
    let h: Vec<CVector> = h_free.iter().zip(&h_forced).map(|(a, b)| a + b).collect();
    let hdot = d_free.iter().zip(&d_forced).map(|(a, b)| a + b).collect();
    let v = outputs(p, &h, &u);
    Ok(Trajectory { times: times.to_vec(), h, hdot, u, v })
}

#[derive(Debug, Clone)]
pub struct PlaneWaveResponse {
    pub h0: CVector,
    pub h1: CVector,
    pub v0: CVector,
    /// `||(lambda^2 + lambda B + A) h0 - phi* sigma u0||`
    pub ode_residual: f64,
    /// Coefficients of `e^{tX}` and `K e^{tY}` left in the general solution
    /// started from `(h0, h1)`; both vanish for the steady state.
    pub transient_x: f64,
    pub transient_y: f64,
}

/// Steady response to `u = e^{lambda t} u0`: `h = e^{lambda t} h0` with
/// `h0 = L^{-1}(lambda) phi* sigma u0`, `h1 = lambda h0`, `v0 = S(lambda) u0`.
pub fn plane_wave_response(p: &PencilSystem, f: &FactoredPencil, lambda: C64, u0: &CVector) -> Result<PlaneWaveResponse> {
    if u0.len() != p.colligation.dim_e() {
        return Err(Error::Dimension(format!(
            "u0 has {} entries, dim E is {}",
            u0.len(),
            p.colligation.dim_e()
        )));
    }
    let drive = p.phi().adjoint() * p.sigma() * u0;
    let linv = resolvent_eval(p, lambda)?;
    let h0 = &linv * &drive;
    let h1 = &h0 * lambda;
    let s = char_fn_sample(p, lambda)?.s;
    let v0 = s * u0;
    let ode = crate::colligation::pencil_eval(p, lambda) * &h0 - &drive;
    let rx = linalg::shifted_inverse(&f.x, lambda)
        .map_err(|_| Error::SpectralPoint(format!("lambda = {lambda} is on spec(X)")))?;
    let ry = linalg::shifted_inverse(&f.y, lambda)
        .map_err(|_| Error::SpectralPoint(format!("lambda = {lambda} is on spec(Y)")))?;
    let gt = &h1 - &f.x * &h0;
    let g = &h0 - &f.k * &gt;
    let cx = g + rx * (&f.k * &drive);
    let cy = gt - ry * &drive;
    Ok(PlaneWaveResponse {
        h0,
        h1,
        v0,
        ode_residual: ode.norm(),
        transient_x: cx.norm(),
        transient_y: cy.norm(),
    })
}

#[derive(Debug, Clone)]
pub struct ConservationReport {
    pub times: Vec<f64>,
    /// `<sigma u, u> - <sigma v, v>`
    pub lhs: Vec<f64>,
    /// `d/dt 2 Im<h', h> + 2 Im<B h', h>`, derivative by finite differences.
    pub rhs: Vec<f64>,
    pub residual: Vec<f64>,
    pub max_residual: f64,
    /// Imbalance of the integrated law with `B = B+ - B-`.
    pub integral_residual: f64,
}

fn inner(a: &CVector, b: &CVector) -> C64 {
    b.dotc(a)
}

/// Pointwise and integrated energy balance along a trajectory.
pub fn conservation_report(traj: &Trajectory, p: &PencilSystem) -> Result<ConservationReport> {
    let len = traj.len();
    if len < 3 {
        return Err(Error::Invalid("need at least three samples for differencing".into()));
    }
    let dt = check_uniform(&traj.times)?;
    let sigma = p.sigma();
    let energy: Vec<f64> = (0..len).map(|j| 2.0 * inner(&traj.hdot[j], &traj.h[j]).im).collect();
    let diss: Vec<f64> = (0..len).map(|j| 2.0 * inner(&(&p.b * &traj.hdot[j]), &traj.h[j]).im).collect();
    let lhs: Vec<f64> = (0..len)
        .map(|j| inner(&(sigma * &traj.u[j]), &traj.u[j]).re - inner(&(sigma * &traj.v[j]), &traj.v[j]).re)
        .collect();
    let deriv = |j: usize| -> f64 {
        if j == 0 {
            (-3.0 * energy[0] + 4.0 * energy[1] - energy[2]) / (2.0 * dt)
        } else if j == len - 1 {
            (3.0 * energy[j] - 4.0 * energy[j - 1] + energy[j - 2]) / (2.0 * dt)
        } else {
            (energy[j + 1] - energy[j - 1]) / (2.0 * dt)
        }
    };
    let rhs: Vec<f64> = (0..len).map(|j| deriv(j) + diss[j]).collect();
    let residual: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).collect();
    let max_residual = residual.iter().cloned().fold(0.0, f64::max);

    let (vals, vecs) = linalg::herm_eig(&p.b);
    let split = |positive: bool| -> CMatrix {
        let d: Vec<f64> = vals.iter().map(|&x| if (x > 0.0) == positive { x.abs() } else { 0.0 }).collect();
        &vecs * linalg::from_real_diag(&d) * vecs.adjoint()
    };
    let (bp, bm) = (split(true), split(false));
    let trap = |g: &dyn Fn(usize) -> f64| -> f64 {
        let mut s = 0.5 * (g(0) + g(len - 1));
        for j in 1..len - 1 {
            s += g(j);
        }
        s * dt
    };
    let su = trap(&|j| inner(&(sigma * &traj.u[j]), &traj.u[j]).re);
    let sv = trap(&|j| inner(&(sigma * &traj.v[j]), &traj.v[j]).re);
    let lm = trap(&|j| 2.0 * inner(&(&bm * &traj.hdot[j]), &traj.h[j]).im);
    let lp = trap(&|j| 2.0 * inner(&(&bp * &traj.hdot[j]), &traj.h[j]).im);
    let initial = su + energy[0] + lm;
    let fin = sv + energy[len - 1] + lp;
    Ok(ConservationReport {
        times: traj.times.clone(),
        lhs,
        rhs,
        residual,
        max_residual,
        integral_residual: (initial - fin).abs(),
    })
}

/// Energy balance for the steady plane wave at time `t`, using the exact
/// derivative of `2 Im<h', h> = 2 Im(lambda) e^{2 Re(lambda) t} |h0|^2`.
pub fn conservation_plane_wave(p: &PencilSystem, lambda: C64, u0: &CVector, t: f64) -> Result<f64> {
    let linv = resolvent_eval(p, lambda)?;
    let e = (lambda * t).exp();
    let h0 = linv * (p.phi().adjoint() * p.sigma() * u0);
    let h = &h0 * e;
    let hd = &h * lambda;
    let u = u0 * e;
    let v = &u - (p.phi() * &h) * I;
    let sigma = p.sigma();
    let lhs = inner(&(sigma * &u), &u).re - inner(&(sigma * &v), &v).re;
    let de = 4.0 * lambda.re * lambda.im * (2.0 * lambda.re * t).exp() * h0.norm_squared();
    let rhs = de + 2.0 * inner(&(&p.b * &hd), &h).im;
    Ok((lhs - rhs).abs())
}

/// Classical fourth-order Runge-Kutta on the first-order form; a reference
/// integrator independent of the factorization.
pub mod reference {
    use super::*;

    pub fn rk4(p: &PencilSystem, h0: &CVector, h1: &CVector, input: &InputSignal, times: &[f64]) -> Result<Trajectory> {
        let n = p.n();
        let m = p.colligation.dim_e();
        if h0.len() != n || h1.len() != n {
            return Err(Error::Dimension("initial data has the wrong length".into()));
        }
        let dt = check_uniform(times)?;
        input.check(m, times[times.len() - 1])?;
        let drive = p.phi().adjoint() * p.sigma();
        let rhs = |t: f64, x: &CVector, xd: &CVector| -> (CVector, CVector) {
            let u = input.eval(t, m);
            (xd.clone(), &drive * u - &p.b * xd - p.a() * x)
        };
        let mut h = vec![h0.clone()];
        let mut hd = vec![h1.clone()];
        for j in 0..times.len() - 1 {
            let t = times[j];
            let (x, xd) = (&h[j], &hd[j]);
            let half = c(0.5 * dt, 0.0);
            let full = c(dt, 0.0);
            let (k1a, k1b) = rhs(t, x, xd);
            let (k2a, k2b) = rhs(t + 0.5 * dt, &(x + &k1a * half), &(xd + &k1b * half));
            let (k3a, k3b) = rhs(t + 0.5 * dt, &(x + &k2a * half), &(xd + &k2b * half));
            let (k4a, k4b) = rhs(t + dt, &(x + &k3a * full), &(xd + &k3b * full));
            let w = c(dt / 6.0, 0.0);
            let two = c(2.0, 0.0);
            h.push(x + (k1a + k2a * two + k3a * two + k4a) * w);
            hd.push(xd + (k1b + k2b * two + k3b * two + k4b) * w);
        }
        let u: Vec<CVector> = times.iter().map(|&t| input.eval(t, m)).collect();
        let v = outputs(p, &h, &u);
        Ok(Trajectory { times: times.to_vec(), h, hdot: hd, u, v })
    }
}
