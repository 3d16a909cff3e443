//! Mode-by-mode time integration of the linearized Euler equation
//! ∂_tω_k = −ik(Uω_k − U″ψ_k), (∂²_y − k²)ψ_k = ω_k, ψ_k(±1) = 0.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::profiles::PerturbedFlow;
use crate::tridiag;

/// Default number of uniform grid points on [−1, 1].
pub const EVOLUTION_GRID: usize = 1025;
/// Trailing fraction of a run used for rate fits.
pub const RATE_WINDOW: f64 = 0.5;
const POISSON_TOL: f64 = 1e-10;

/// Precomputed grid and coefficients for one wavenumber.
#[derive(Debug, Clone)]
pub struct ModeGrid {
    pub k: f64,
    pub y: Vec<f64>,
    pub h: f64,
    pub u: Vec<f64>,
    pub upp: Vec<f64>,
}

impl ModeGrid {
    pub fn new(flow: &PerturbedFlow, k: f64, n: usize) -> Result<Self> {
        if k == 0.0 {
            return Err(Error::domain("k = 0 is the invariant mean mode"));
        }
        if n < 5 {
            return Err(Error::domain("grid needs at least 5 points"));
        }
        let h = 2.0 / (n - 1) as f64;
        let y: Vec<f64> = (0..n).map(|i| -1.0 + h * i as f64).collect();
        let u = y.iter().map(|&y| flow.u(y)).collect();
        let upp = y.iter().map(|&y| flow.eval_raw(y, 2)).collect();
        Ok(Self { k, y, h, u, upp })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// ‖kU‖_∞ + k‖U″‖_∞·P with P = 1/(π²/4 + k²) the Poincaré constant.
    pub fn spectral_radius(&self) -> f64 {
        let k = self.k.abs();
        let umax = self.u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        k * umax + k * self.upp_bound()
    }

    fn upp_bound(&self) -> f64 {
        let p = 1.0 / (std::f64::consts::PI.powi(2) / 4.0 + self.k * self.k);
        self.upp.iter().fold(0.0f64, |a, v| a.max(v.abs())) * p
    }

    /// RK4 step bound on the imaginary axis.
    pub fn dt_max(&self) -> f64 {
        2.5 / self.spectral_radius()
    }

    pub fn default_dt(&self) -> f64 {
        0.5 / self.spectral_radius()
    }

    /// Dirichlet solve of (∂² − k²)ψ = ω; returns ψ and the relative residual.
    pub fn poisson(&self, omega: &[Complex64]) -> (Vec<Complex64>, f64) {
        let n = self.len();
        let m = n - 2;
        let ih2 = 1.0 / (self.h * self.h);
        let off = vec![Complex64::new(ih2, 0.0); m - 1];
        let diag = vec![Complex64::new(-2.0 * ih2 - self.k * self.k, 0.0); m];
        let inner = tridiag::solve(&off, &diag, &off, &omega[1..n - 1]);
        let mut psi = vec![Complex64::default(); n];
        psi[1..n - 1].copy_from_slice(&inner);
        let mut res = 0.0f64;
        let mut scale = 0.0f64;
        for i in 1..n - 1 {
            let lap = (psi[i + 1] - 2.0 * psi[i] + psi[i - 1]) * ih2 - self.k * self.k * psi[i];
            res = res.max((lap - omega[i]).norm());
            scale = scale.max(omega[i].norm());
        }
        (psi, if scale > 0.0 { res / scale } else { 0.0 })
    }

    fn rhs(&self, omega: &[Complex64], out: &mut [Complex64]) -> f64 {
        let (psi, res) = self.poisson(omega);
        let ik = Complex64::new(0.0, -self.k);
        for i in 0..self.len() {
            out[i] = ik * (self.u[i] * omega[i] - self.upp[i] * psi[i]);
        }
        res
    }

    /// Trapezoidal ∫|f|².
    pub fn l2_sq(&self, f: &[Complex64]) -> f64 {
        let n = f.len();
        let inner: f64 = f[1..n - 1].iter().map(|v| v.norm_sqr()).sum();
        self.h * (inner + 0.5 * (f[0].norm_sqr() + f[n - 1].norm_sqr()))
    }

    /// ‖u_k‖² = ∫|ψ′|² + k²|ψ|².
    pub fn velocity_sq(&self, psi: &[Complex64]) -> f64 {
        let d: f64 = psi.windows(2).map(|w| ((w[1] - w[0]) / self.h).norm_sqr()).sum::<f64>() * self.h;
        d + self.k * self.k * self.l2_sq(psi)
    }
}

/// State of one Fourier mode.
#[derive(Debug, Clone, Serialize)]
pub struct ModeState {
    pub k: f64,
    pub t: f64,
    pub omega: Vec<Complex64>,
    pub psi: Vec<Complex64>,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergySample {
    pub t: f64,
    pub energy: f64,
    pub stream_norm: f64,
    pub velocity_norm: f64,
    pub rate_so_far: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolutionSeries {
    pub k: f64,
    pub dt: f64,
    pub samples: Vec<EnergySample>,
    pub final_state: ModeState,
    pub max_poisson_residual: f64,
}

impl EvolutionSeries {
    /// CSV rows: t, energy, stream_norm, fitted_rate_so_far.
    pub fn rows(&self) -> Vec<[f64; 4]> {
        self.samples.iter().map(|s| [s.t, s.energy, s.stream_norm, s.rate_so_far]).collect()
    }
}

/// Least-squares slope of log‖ω_k‖ over the trailing `window_fraction` of the series.
pub fn growth_rate(samples: &[EnergySample], window_fraction: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain("empty series"));
    }
    let t_end = samples.last().unwrap().t;
    let t0 = samples[0].t;
    let t_start = t_end - window_fraction * (t_end - t0);
    let window: Vec<&EnergySample> = samples.iter().filter(|s| s.t >= t_start - 1e-12).collect();
    if window.len() < 10 {
        return Err(Error::domain(format!("trailing window holds {} < 10 samples", window.len())));
    }
    if window.iter().any(|s| s.energy <= 0.0 || !s.energy.is_finite()) {
        return Err(Error::NonConvergence("non-positive energy in series".into()));
    }
    let pts: Vec<(f64, f64)> = window.iter().map(|s| (s.t, 0.5 * s.energy.ln())).collect();
    Ok(ls_slope(&pts))
}

fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Classical RK4 integration to time `t_end`, recording every `stride` steps.
pub fn evolve_on(grid: &ModeGrid, omega0: &[Complex64], t_end: f64, dt: f64, stride: usize) -> Result<EvolutionSeries> {
    let n = grid.len();
    if omega0.len() != n {
        return Err(Error::domain(format!("ω₀ has {} samples, grid has {n}", omega0.len())));
    }
    if dt.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || dt > grid.dt_max() {
        return Err(Error::domain(format!("dt = {dt} outside (0, {}]", grid.dt_max())));
    }
    let steps = (t_end / dt).round() as usize;
    let stride = stride.max(1);
    let mut omega = omega0.to_vec();
    let e0 = grid.l2_sq(&omega);
    let bound_rate = grid.k.abs() * grid.upp_bound();
    let mut samples = Vec::new();
    let mut max_res = 0.0f64;
    let record = |t: f64, omega: &[Complex64], samples: &mut Vec<EnergySample>| -> f64 {
        let (psi, res) = grid.poisson(omega);
        let energy = grid.l2_sq(omega);
        let rate = if samples.len() >= 19 {
            let mut tmp = samples.clone();
            tmp.push(EnergySample { t, energy, stream_norm: 0.0, velocity_norm: 0.0, rate_so_far: 0.0 });
            growth_rate(&tmp, RATE_WINDOW).unwrap_or(f64::NAN)
        } else {
            f64::NAN
        };
        samples.push(EnergySample {
            t,
            energy,
            stream_norm: grid.l2_sq(&psi).sqrt(),
            velocity_norm: grid.velocity_sq(&psi).sqrt(),
            rate_so_far: rate,
        });
        res
    };
    max_res = max_res.max(record(0.0, &omega, &mut samples));
    let mut k1 = vec![Complex64::default(); n];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut stage = k1.clone();
    for step in 1..=steps {
        max_res = max_res.max(grid.rhs(&omega, &mut k1));
        for i in 0..n {
            stage[i] = omega[i] + 0.5 * dt * k1[i];
        }
        max_res = max_res.max(grid.rhs(&stage, &mut k2));
        for i in 0..n {
            stage[i] = omega[i] + 0.5 * dt * k2[i];
        }
        max_res = max_res.max(grid.rhs(&stage, &mut k3));
        for i in 0..n {
            stage[i] = omega[i] + dt * k3[i];
        }
        max_res = max_res.max(grid.rhs(&stage, &mut k4));
        for i in 0..n {
            omega[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if step % stride == 0 || step == steps {
            let t = step as f64 * dt;
            max_res = max_res.max(record(t, &omega, &mut samples));
            let e = samples.last().unwrap().energy;
            if !e.is_finite() || e > e0 * (2.0 * bound_rate * t).exp() * (1.0 + 1e-6) + 1e-300 {
                return Err(Error::NonConvergence(format!(
                    "energy {e:e} at t = {t} exceeds the a-priori bound; dt too large"
                )));
            }
        }
    }
    if max_res > POISSON_TOL {
        return Err(Error::NonConvergence(format!("Poisson residual {max_res:e}")));
    }
    let (psi, _) = grid.poisson(&omega);
    let energy = grid.l2_sq(&omega);
    Ok(EvolutionSeries {
        k: grid.k,
        dt,
        samples,
        final_state: ModeState { k: grid.k, t: steps as f64 * dt, omega, psi, energy },
        max_poisson_residual: max_res,
    })
}

/// Evolve ω₀ (sampled on the default grid) under the flow.
pub fn evolve_mode(
    flow: &PerturbedFlow,
    k: f64,
    omega0: &[Complex64],
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<EvolutionSeries> {
    let grid = ModeGrid::new(flow, k, omega0.len())?;
    evolve_on(&grid, omega0, t_end, dt, stride)
}

/// Independent modes evolved in parallel.
pub fn evolve_modes(
    flow: &PerturbedFlow,
    modes: &[(f64, Vec<Complex64>)],
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<Vec<EvolutionSeries>> {
    modes.par_iter().map(|(k, w)| evolve_mode(flow, *k, w, t_end, dt, stride)).collect()
}

/// A smooth generic initial vorticity vanishing at the walls.
pub fn smooth_initial(grid: &ModeGrid) -> Vec<Complex64> {
    grid.y
        .iter()
        .map(|&y| Complex64::new((1.0 - y * y) * (1.0 + 0.5 * y) * (-2.0 * y * y).exp(), 0.0))
        .collect()
}

/// Eigenpair of the discrete problem c(D² − k²)ψ = U(D² − k²)ψ − U″ψ nearest a shift.
#[derive(Debug, Clone, Serialize)]
pub struct DiscreteMode {
    pub c: Complex64,
    pub omega: Vec<Complex64>,
    pub psi: Vec<Complex64>,
    pub residual: f64,
}

pub fn discrete_mode(grid: &ModeGrid, shift: Complex64, iters: usize) -> Result<DiscreteMode> {
    let n = grid.len();
    let m = n - 2;
    let ih2 = 1.0 / (grid.h * grid.h);
    let k2 = grid.k * grid.k;
    let apply_b = |x: &[Complex64]| -> Vec<Complex64> {
        (0..m)
            .map(|i| {
                let l = if i > 0 { x[i - 1] } else { Complex64::default() };
                let r = if i + 1 < m { x[i + 1] } else { Complex64::default() };
                (l + r - 2.0 * x[i]) * ih2 - k2 * x[i]
            })
            .collect()
    };
    let apply_a = |x: &[Complex64]| -> Vec<Complex64> {
        let b = apply_b(x);
        (0..m).map(|i| grid.u[i + 1] * b[i] - grid.upp[i + 1] * x[i]).collect()
    };
    let mut sigma = shift;
    let mut x: Vec<Complex64> = (0..m).map(|i| Complex64::new((std::f64::consts::PI * (i + 1) as f64 / (m + 1) as f64).sin(), 0.0)).collect();
    let mut c = sigma;
    for it in 0..iters {
        let s: Vec<Complex64> = (0..m).map(|i| grid.u[i + 1] - sigma).collect();
        let sub: Vec<Complex64> = (1..m).map(|i| s[i] * ih2).collect();
        let sup: Vec<Complex64> = (0..m - 1).map(|i| s[i] * ih2).collect();
        let diag: Vec<Complex64> = (0..m).map(|i| s[i] * (-2.0 * ih2 - k2) - grid.upp[i + 1]).collect();
        let bx = apply_b(&x);
        let y = tridiag::solve(&sub, &diag, &sup, &bx);
        let xx: Complex64 = x.iter().map(|v| v.norm_sqr()).sum::<f64>().into();
        let xy: Complex64 = x.iter().zip(&y).map(|(a, b)| a.conj() * b).sum();
        c = sigma + xx / xy;
        let nrm = tridiag::norm2(&y);
        x = y.iter().map(|v| v / nrm).collect();
        // one Rayleigh-type shift update after the initial sweeps
        if it == iters / 2 {
            sigma = c;
        }
    }
    let ax = apply_a(&x);
    let bx = apply_b(&x);
    let res: f64 = ax.iter().zip(&bx).map(|(a, b)| (a - c * b).norm_sqr()).sum::<f64>().sqrt() / tridiag::norm2(&bx);
    let mut psi = vec![Complex64::default(); n];
    psi[1..n - 1].copy_from_slice(&x);
    let mut omega = vec![Complex64::default(); n];
    omega[1..n - 1].copy_from_slice(&bx);
    let scale = grid.l2_sq(&omega).sqrt();
    psi.iter_mut().for_each(|v| *v /= scale);
    omega.iter_mut().for_each(|v| *v /= scale);
    Ok(DiscreteMode { c, omega, psi, residual: res })
}

/// Cosine similarity |⟨a, b⟩|/(‖a‖‖b‖).
pub fn cosine_similarity(a: &[Complex64], b: &[Complex64]) -> f64 {
    let ab: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    ab.norm() / (tridiag::norm2(a) * tridiag::norm2(b))
}

#[derive(Debug, Clone, Serialize)]
pub struct DampingReport {
    pub k: f64,
    pub t_end: f64,
    pub stream_ratio: f64,
    pub velocity_ratio: f64,
    /// Fitted p in ‖ψ_k(t)‖ ~ t^p over the trailing window.
    pub stream_exponent: f64,
    pub velocity_exponent: f64,
    /// Envelope of ‖ψ_k‖ decreasing over the quarters of the trailing window.
    pub monotone_trend: bool,
}

/// Decay metrics of ‖ψ_k‖ and ‖u_k‖ from the smooth initial datum.
pub fn damping_probe(flow: &PerturbedFlow, m_star: f64, k: f64, t_end: f64, dt: f64) -> Result<DampingReport> {
    if flow.m >= m_star {
        return Err(Error::Hypothesis(format!("damping probe needs m < m_* (m = {}, m_* = {m_star})", flow.m)));
    }
    let grid = ModeGrid::new(flow, k, EVOLUTION_GRID)?;
    let w0 = smooth_initial(&grid);
    let stride = ((t_end / dt) / 400.0).ceil().max(1.0) as usize;
    let series = evolve_on(&grid, &w0, t_end, dt, stride)?;
    let s = &series.samples;
    let first = s[0];
    let last = *s.last().unwrap();
    let t_start = 0.5 * t_end;
    let tail: Vec<&EnergySample> = s.iter().filter(|x| x.t >= t_start && x.t > 0.0).collect();
    let fit = |f: &dyn Fn(&EnergySample) -> f64| -> f64 {
        let pts: Vec<(f64, f64)> = tail.iter().map(|x| (x.t.ln(), f(x).ln())).collect();
        ls_slope(&pts)
    };
    let quarters: Vec<f64> = tail
        .chunks((tail.len() / 4).max(1))
        .map(|c| c.iter().map(|x| x.stream_norm).fold(0.0, f64::max))
        .collect();
    Ok(DampingReport {
        k,
        t_end,
        stream_ratio: last.stream_norm / first.stream_norm,
        velocity_ratio: last.velocity_norm / first.velocity_norm,
        stream_exponent: fit(&|x| x.stream_norm),
        velocity_exponent: fit(&|x| x.velocity_norm),
        monotone_trend: quarters.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)),
    })
}

/// Observed temporal order from runs at dt, dt/2, dt/4.
pub fn temporal_order(grid: &ModeGrid, omega0: &[Complex64], t_end: f64, dt: f64) -> Result<f64> {
    let run = |h: f64| evolve_on(grid, omega0, t_end, h, usize::MAX).map(|s| s.final_state.omega);
    let (a, b, c) = (run(dt)?, run(dt / 2.0)?, run(dt / 4.0)?);
    let d1: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let d2: Vec<Complex64> = b.iter().zip(&c).map(|(x, y)| x - y).collect();
    Ok((grid.l2_sq(&d1) / grid.l2_sq(&d2)).sqrt().log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{BaseProfile, PerturbationProfile};

    #[test]
    fn exact_exponential_rate() {
        let s: Vec<EnergySample> = (0..100)
            .map(|i| {
                let t = i as f64;
                EnergySample { t, energy: (0.1 * t).exp(), stream_norm: 1.0, velocity_norm: 1.0, rate_so_far: 0.0 }
            })
            .collect();
        assert!((growth_rate(&s, 0.5).unwrap() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn poisson_residual_small() {
        let f = PerturbedFlow::new(BaseProfile::couette(), PerturbationProfile::gaussian(), 0.0, 0.1).unwrap();
        let g = ModeGrid::new(&f, 2.0, 257).unwrap();
        let (_, res) = g.poisson(&smooth_initial(&g));
        assert!(res < 1e-12);
    }
}
