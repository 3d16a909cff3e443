//! Minimal eigenvalue of −∂² + Q_{m,γ}, the threshold map 𝔐(λ), the γ = 0
//! delta-potential eigenvalue λ_{m,0}, and the critical amplitude m_*.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::{BaseProfile, PerturbationProfile, PerturbedFlow};
use crate::quad::{Grading, Mesh};
use crate::rayleigh::solve_phi1_on;
use crate::tridiag;

/// Default finite-difference intervals on [−1, 1].
pub const GRID_N: usize = 2048;
/// Lower end of the λ search when inverting the threshold map.
pub const LAMBDA_LO: f64 = -50.0;
/// Target residual |λ_{m_*,γ} + 1| of the threshold bisection.
pub const MSTAR_TOL: f64 = 1e-10;
const MAP_TOL: f64 = 1e-13;

/// Ground state of −∂² + Q on a uniform grid with Dirichlet walls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenReport {
    pub lambda_min: f64,
    /// Interior nodes of the fine grid.
    pub grid: Vec<f64>,
    /// Positive, L²-normalized ground state on `grid`.
    pub eigenfunction: Vec<f64>,
    pub residual: f64,
    pub grid_n: usize,
    pub extrapolated: bool,
    pub lambda_coarse: f64,
    pub lambda_fine: f64,
}

/// Discrete ground state on N intervals: (λ, interior nodes, normalized vector, residual).
pub fn fd_ground_state(potential: &dyn Fn(f64) -> f64, n: usize) -> (f64, Vec<f64>, Vec<f64>, f64) {
    let h = 2.0 / n as f64;
    let ys: Vec<f64> = (1..n).map(|j| -1.0 + j as f64 * h).collect();
    let q: Vec<f64> = ys.iter().map(|&y| potential(y)).collect();
    fd_ground_state_with(&ys, &q, h, None)
}

fn fd_ground_state_with(ys: &[f64], q: &[f64], h: f64, node_mass: Option<(usize, f64)>) -> (f64, Vec<f64>, Vec<f64>, f64) {
    let ih2 = 1.0 / (h * h);
    let mut diag: Vec<f64> = q.iter().map(|v| 2.0 * ih2 + v).collect();
    if let Some((j, extra)) = node_mass {
        diag[j] += extra;
    }
    let off = vec![-ih2; q.len() - 1];
    let guess = tridiag::smallest_eigenvalue(&diag, &off);
    let mut v = tridiag::inverse_iteration(&diag, &off, guess, 3);
    // Rayleigh quotient in difference form: no cancellation against 2/h²
    let rq = |v: &[f64]| -> f64 {
        let mut num = v[0] * v[0] * ih2 + v[v.len() - 1] * v[v.len() - 1] * ih2;
        for k in 0..v.len() - 1 {
            num += (v[k + 1] - v[k]).powi(2) * ih2;
        }
        for k in 0..v.len() {
            num += (diag[k] - 2.0 * ih2) * v[k] * v[k];
        }
        num / v.iter().map(|x| x * x).sum::<f64>()
    };
    let lambda = rq(&v);
    let norm = (h * v.iter().map(|x| x * x).sum::<f64>()).sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let mut res = 0.0;
    for k in 0..v.len() {
        let left = if k > 0 { v[k - 1] } else { 0.0 };
        let right = if k + 1 < v.len() { v[k + 1] } else { 0.0 };
        let r = (-left + 2.0 * v[k] - right) * ih2 + (diag[k] - 2.0 * ih2) * v[k] - lambda * v[k];
        res += h * r * r;
    }
    (lambda, ys.to_vec(), v, res.sqrt())
}

/// min_eigenvalue with an explicit coarse grid size; Richardson over (n, 2n).
pub fn min_eigenvalue_n(flow: &PerturbedFlow, n: usize) -> Result<EigenReport> {
    let pot = |y: f64| flow.potential(y);
    if !pot(0.0).is_finite() || !pot(1.0).is_finite() {
        return Err(Error::Hypothesis("potential U″/U is not finite".into()));
    }
    let (l1, _, _, _) = fd_ground_state(&pot, n);
    let (l2, grid, eigenfunction, residual) = fd_ground_state(&pot, 2 * n);
    Ok(EigenReport {
        lambda_min: (4.0 * l2 - l1) / 3.0,
        grid,
        eigenfunction,
        residual,
        grid_n: n,
        extrapolated: true,
        lambda_coarse: l1,
        lambda_fine: l2,
    })
}

/// Ground state of ℋ_{m,γ} = −∂² + Q_{m,γ}, N = 2048 with Richardson to 2N.
pub fn min_eigenvalue(flow: &PerturbedFlow) -> Result<EigenReport> {
    min_eigenvalue_n(flow, GRID_N)
}

/// Observed order of the unextrapolated eigenvalue over n, 2n, 4n.
pub fn convergence_order(flow: &PerturbedFlow, n: usize) -> f64 {
    let pot = |y: f64| flow.potential(y);
    let l: Vec<f64> = [n, 2 * n, 4 * n].iter().map(|&k| fd_ground_state(&pot, k).0).collect();
    ((l[0] - l[1]) / (l[1] - l[2])).log2()
}

fn base_flow(base: &BaseProfile) -> PerturbedFlow {
    PerturbedFlow::unchecked(base.clone(), PerturbationProfile::gaussian(), 0.0, 1.0)
}

/// ∫(1/U²)(1/φ₁² − 1) and ∫(1/U² − 1/(a²y²)) for the base profile at y_c = 0.
fn map_integrals(base: &BaseProfile, lambda: f64) -> Result<(f64, f64, f64)> {
    let flow = base_flow(base);
    let a = base.derivative(0.0, 1);
    let mesh = Mesh::graded(-1.0, 1.0, &[0.0], 0.0, Grading { floor: 0.02, ..Grading::default() });
    let phi1 = solve_phi1_on(&flow, mesh, 0.0, lambda, MAP_TOL)?;
    let mesh = &phi1.mesh;
    // φ₁ − 1 = −λ∫q is recomputed from its integral to avoid cancellation in 1/φ₁² − 1
    let q: Vec<f64> = phi1.der.iter().map(|d| d / -lambda).collect();
    let (cq, _) = mesh.cumulative(&q);
    let mut f_int = Vec::with_capacity(mesh.len());
    let mut r_int = Vec::with_capacity(mesh.len());
    for j in 0..mesh.len() {
        let y = mesh.nodes[j];
        let v = flow.u_over_y(y);
        let p = phi1.val[j];
        // (1/U²)(1/φ₁² − 1) = λ·∫q·(φ₁ + 1)/(U²φ₁²)
        f_int.push(lambda * (cq[j] / (y * y)) * (p + 1.0) / (v * v * p * p));
        r_int.push((a - v) * (a + v) / (a * a * v * v) / (y * y));
    }
    Ok((mesh.integrate(&f_int), mesh.integrate(&r_int), a))
}

/// 𝔐(λ) = −U′(0)²∫(1/U²)(1/φ₁² − 1) dy, as printed.
pub fn threshold_function_m(base: &BaseProfile, lambda: f64) -> Result<f64> {
    if lambda >= 0.0 {
        return Err(Error::domain(format!("threshold map needs λ < 0, got {lambda}")));
    }
    let (f, _, a) = map_integrals(base, lambda)?;
    Ok(-a * a * f)
}

/// Amplitude m for which the delta problem with jump [Ψ′]₀ = −mΨ(0)/U′(0)
/// has ground state λ: m = 2a − a³∫(R + F), R = 1/U² − 1/(a²y²),
/// F = (1/U²)(1/φ₁² − 1).
pub fn threshold_map_jump(base: &BaseProfile, lambda: f64) -> Result<f64> {
    if lambda == 0.0 {
        return threshold_map_jump(base, -1e-12);
    }
    let (f, r, a) = map_integrals(base, lambda)?;
    Ok(2.0 * a - a * a * a * (r + f))
}

/// λ_{m,0}: ground state of −∂² + U″/U − (m/U′(0))δ₀, by inverting the jump map.
pub fn lambda_m0(base: &BaseProfile, m: f64) -> Result<f64> {
    if m < 0.0 {
        return Err(Error::domain("m must be nonnegative"));
    }
    let lam0 = min_eigenvalue(&base_flow(base))?.lambda_min;
    if m == 0.0 {
        return Ok(lam0);
    }
    let m_hi = threshold_map_jump(base, LAMBDA_LO)?;
    if m > m_hi {
        return Err(Error::domain(format!("m = {m} beyond the attainable range (≤ {m_hi:.6})")));
    }
    let (mut lo, mut hi) = (LAMBDA_LO, lam0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 1e-13 * (1.0 + mid.abs()) {
            break;
        }
        if threshold_map_jump(base, mid)? > m {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Direct finite-difference solve of the γ = 0 delta problem (node at y = 0),
/// Richardson-extrapolated over (n, 2n).
pub fn lambda_m0_fd(base: &BaseProfile, m: f64, n: usize) -> f64 {
    let flow = base_flow(base);
    let a = base.derivative(0.0, 1);
    let solve = |n: usize| -> f64 {
        let n = n + n % 2;
        let h = 2.0 / n as f64;
        let ys: Vec<f64> = (1..n).map(|j| -1.0 + j as f64 * h).collect();
        let q: Vec<f64> = ys.iter().map(|&y| flow.potential(y)).collect();
        let mid = n / 2 - 1;
        fd_ground_state_with(&ys, &q, h, Some((mid, -m / (a * h)))).0
    };
    (4.0 * solve(2 * n) - solve(n)) / 3.0
}

/// Result of the critical-amplitude bisection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub base: String,
    pub pert: String,
    pub gamma: f64,
    pub m_star: f64,
    pub bracket: (f64, f64),
    pub residual: f64,
    pub trace: Vec<(f64, f64)>,
}

impl ThresholdResult {
    /// λ strictly decreasing along the trace sorted by m.
    pub fn trace_monotone(&self) -> bool {
        let mut t = self.trace.clone();
        t.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        t.dedup_by(|a, b| a.0 == b.0);
        t.windows(2).all(|w| w[1].1 < w[0].1)
    }
}

/// m_* with λ_{m_*,γ} = −1, bracketing around 𝔐(−1) ± Kγ with K doubling.
pub fn find_mstar(base: &BaseProfile, pert: &PerturbationProfile, gamma: f64) -> Result<ThresholdResult> {
    find_mstar_with(base, pert, gamma, &|flow| Ok(min_eigenvalue(flow)?.lambda_min))
}

/// find_mstar with an injectable eigenvalue oracle (used for caching).
pub fn find_mstar_with(
    base: &BaseProfile,
    pert: &PerturbationProfile,
    gamma: f64,
    eigen: &dyn Fn(&PerturbedFlow) -> Result<f64>,
) -> Result<ThresholdResult> {
    let center = threshold_function_m(base, -1.0)?;
    let mut trace = Vec::new();
    let lam = |m: f64, trace: &mut Vec<(f64, f64)>| -> Result<f64> {
        let flow = PerturbedFlow::new(base.clone(), pert.clone(), m, gamma)?;
        let l = eigen(&flow)?;
        trace.push((m, l));
        Ok(l)
    };
    let mut k = 1.0;
    let mut bracket = None;
    for _ in 0..=10 {
        let lo = (center - k * gamma).max(0.0);
        let hi = center + k * gamma;
        if lam(lo, &mut trace)? > -1.0 && lam(hi, &mut trace)? < -1.0 {
            bracket = Some((lo, hi));
            break;
        }
        k *= 2.0;
    }
    let (mut lo, mut hi) =
        bracket.ok_or_else(|| Error::NonConvergence("threshold bracket failed after 10 doublings".into()))?;
    let initial = (lo, hi);
    let mut m_star = 0.5 * (lo + hi);
    let mut residual = f64::INFINITY;
    for _ in 0..200 {
        m_star = 0.5 * (lo + hi);
        let l = lam(m_star, &mut trace)?;
        residual = (l + 1.0).abs();
        if residual <= MSTAR_TOL || hi - lo < 1e-14 * m_star {
            break;
        }
        if l > -1.0 {
            lo = m_star;
        } else {
            hi = m_star;
        }
    }
    let r = ThresholdResult {
        base: base.name.clone(),
        pert: pert.name.clone(),
        gamma,
        m_star,
        bracket: initial,
        residual,
        trace,
    };
    if !r.trace_monotone() {
        return Err(Error::NonConvergence("λ_(m,γ) not monotone along the bisection trace".into()));
    }
    Ok(r)
}

/// One row of the distance sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub gamma: f64,
    pub lambda_m_gamma: f64,
    pub lambda_m0: f64,
    pub ratio: f64,
}

/// |λ_{m,γ} − λ_{m,0}|/(mγ) over a list of γ.
pub fn distance_sweep(
    base: &BaseProfile,
    pert: &PerturbationProfile,
    m: f64,
    gammas: &[f64],
) -> Result<Vec<DistanceRow>> {
    let l0 = lambda_m0(base, m)?;
    gammas
        .iter()
        .map(|&g| {
            let flow = PerturbedFlow::new(base.clone(), pert.clone(), m, g)?;
            let l = min_eigenvalue(&flow)?.lambda_min;
            let ratio = if m == 0.0 { 0.0 } else { (l - l0).abs() / (m * g) };
            Ok(DistanceRow { gamma: g, lambda_m_gamma: l, lambda_m0: l0, ratio })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn couette_threshold_map_oracles() {
        let b = BaseProfile::couette();
        let m1 = threshold_function_m(&b, -1.0).unwrap();
        assert!((m1 - 2.0 * (1.0 / 1f64.tanh() - 1.0)).abs() < 1e-10, "{m1}");
        let j = threshold_map_jump(&b, -4.0).unwrap();
        assert!((j - 4.0 / 2f64.tanh()).abs() < 1e-10, "{j}");
    }

    #[test]
    fn couette_ground_state() {
        let f = base_flow(&BaseProfile::couette());
        let r = min_eigenvalue(&f).unwrap();
        let exact = std::f64::consts::PI.powi(2) / 4.0;
        assert!((r.lambda_min - exact).abs() < 1e-8, "{}", r.lambda_min - exact);
    }
}
