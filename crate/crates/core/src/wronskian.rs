//! Modified Wronskian W = ∫ φ⁻², full Wronskian 𝒲 = φ⁻(1), one-sided real-axis
//! limits A ∓ iB and finite-difference probes of ∂_{c_i}W and ∂_mW.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::OdeOptions;
use crate::profiles::PerturbedFlow;
use crate::quad::Mesh;
use crate::rayleigh::{
    assemble_on, graded_mesh, shoot_boundary_solution, solve_phi1, RayleighSolution, Side, SpectralPoint,
};

/// Picard tolerance used for every Wronskian evaluation.
pub const WRONSKIAN_TOL: f64 = 1e-13;
/// Contour-scan floor on |Im c|.
pub const EPS_SCAN: f64 = 0.2;
/// Number of halvings in the ε-extrapolation of A.
pub const RICHARDSON_LEVELS: usize = 6;
/// |φ| below this on a node marks a degenerate evaluation.
const DEGENERATE_PHI: f64 = 1e-13;
/// Spectral parameter cap.
pub const LAMBDA_CAP: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WronskianKind {
    Modified,
    Full,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct WronskianValue {
    pub kind: WronskianKind,
    pub value: Complex64,
    pub point: SpectralPoint,
    pub quadrature_error: f64,
    /// φ(−1)·φ(1) of the regular solution (modified kind only).
    pub boundary_product: Option<Complex64>,
}

impl WronskianValue {
    /// φ(−1)φ(1)·W, the full Wronskian recovered from the modified one.
    pub fn as_full(&self) -> Option<Complex64> {
        match self.kind {
            WronskianKind::Full => Some(self.value),
            WronskianKind::Modified => self.boundary_product.map(|p| p * self.value),
        }
    }
}

/// Default strip half-width ε₀ = 0.5·γ·ε_scan.
pub fn default_eps0(flow: &PerturbedFlow) -> f64 {
    0.5 * flow.gamma * EPS_SCAN
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.abs() > LAMBDA_CAP || !lambda.is_finite() {
        return Err(Error::domain(format!("|λ| = {} exceeds the cap {LAMBDA_CAP}", lambda.abs())));
    }
    Ok(())
}

fn integrate_inverse_square(sol: &RayleighSolution) -> (Complex64, f64, bool) {
    let inv: Vec<Complex64> = sol.phi.iter().map(|p| 1.0 / (p * p)).collect();
    let degenerate = sol.phi.iter().any(|p| p.norm() < DEGENERATE_PHI);
    (sol.mesh().integrate(&inv), sol.mesh().tail_error(&inv), degenerate)
}

/// W on a given mesh (anchored at y_c).
pub fn modified_wronskian_on(flow: &PerturbedFlow, point: SpectralPoint, mesh: Mesh) -> Result<WronskianValue> {
    if point.c.im == 0.0 {
        return Err(Error::domain("modified Wronskian needs Im c ≠ 0; use boundary_limits"));
    }
    check_lambda(point.lambda)?;
    let sol = assemble_on(flow, point, mesh.clone(), WRONSKIAN_TOL)?;
    let (mut value, mut err, degenerate) = integrate_inverse_square(&sol);
    let (mut lo, mut hi) = sol.boundary_values();
    if degenerate {
        // move every node by half a panel of the finest grading
        let shift = 0.5 * mesh.breaks.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let mut breaks: Vec<f64> = mesh.breaks.iter().map(|b| b + shift).collect();
        breaks[0] = -1.0;
        *breaks.last_mut().unwrap() = 1.0;
        breaks.retain(|b| (-1.0..=1.0).contains(b));
        breaks.push(mesh.anchor_point());
        let sol = assemble_on(flow, point, Mesh::from_breaks(breaks, mesh.anchor_point()), WRONSKIAN_TOL)?;
        let (v, e, still) = integrate_inverse_square(&sol);
        if still {
            return Err(Error::NonConvergence("regular solution vanishes on the quadrature grid".into()));
        }
        value = v;
        err = e;
        (lo, hi) = sol.boundary_values();
    }
    Ok(WronskianValue {
        kind: WronskianKind::Modified,
        value,
        point,
        quadrature_error: err,
        boundary_product: Some(lo * hi),
    })
}

/// W(m, γ, c, λ) = ∫ φ⁻² on the default graded mesh.
pub fn modified_wronskian(flow: &PerturbedFlow, c: Complex64, lambda: f64) -> Result<WronskianValue> {
    let point = SpectralPoint::new(flow, c, lambda);
    let y_c = point
        .y_c
        .ok_or_else(|| Error::domain(format!("Re c = {} outside Ran U_(m,γ)", c.re)))?;
    modified_wronskian_on(flow, point, graded_mesh(flow, y_c, c.im))
}

/// Shooting tolerances used by the full Wronskian.
pub fn shooting_options() -> OdeOptions {
    OdeOptions { rtol: 1e-12, atol: 1e-15, ..OdeOptions::default() }
}

/// 𝒲 = φ⁻(1) by shooting from y = −1.
pub fn full_wronskian(flow: &PerturbedFlow, c: Complex64, lambda: f64) -> Result<WronskianValue> {
    check_lambda(lambda)?;
    let opts = shooting_options();
    let out = shoot_boundary_solution(flow, c, lambda, Side::Lower, &[1.0], &opts)?;
    let value = out[0][0];
    Ok(WronskianValue {
        kind: WronskianKind::Full,
        value,
        point: SpectralPoint::new(flow, c, lambda),
        quadrature_error: opts.rtol * value.norm(),
        boundary_product: None,
    })
}

/// One-sided real-axis limit 𝒲(c_r ± i0) = A ∓ iB.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryLimit {
    pub c_r: f64,
    pub lambda: f64,
    pub a: f64,
    /// B from the closed formula.
    pub b: f64,
    /// −Im of the ε-extrapolated 𝒲(c_r + iε), the ε-limit ground truth for B.
    pub b_limit: f64,
    pub extrapolation_residual: f64,
    pub eps: Vec<f64>,
    pub samples: Vec<Complex64>,
}

impl BoundaryLimit {
    /// A² + B², zero exactly at an embedded eigenvalue.
    pub fn indicator(&self) -> f64 {
        self.a * self.a + self.b * self.b
    }
}

/// Polynomial (Neville) extrapolation of samples (x_k, y_k) to x = 0.
pub fn extrapolate_to_zero(xs: &[f64], ys: &[Complex64]) -> Complex64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for level in 1..n {
        for i in 0..n - level {
            let (xi, xj) = (xs[i], xs[i + level]);
            p[i] = (p[i + 1] * xi - p[i] * xj) / (xi - xj);
        }
    }
    p[0]
}

/// B = π·U″(y_c)/U′(y_c)³·(U(−1) − c_r)(U(1) − c_r)·φ₁(1)φ₁(−1).
pub fn b_closed_form(flow: &PerturbedFlow, c_r: f64, lambda: f64) -> Result<f64> {
    let y_c = flow
        .critical_layer(c_r)
        .ok_or_else(|| Error::domain(format!("c_r = {c_r} outside Ran U_(m,γ)")))?;
    let upp = flow.eval_raw(y_c, 2);
    if upp == 0.0 {
        return Ok(0.0);
    }
    let up = flow.eval_raw(y_c, 1);
    let phi1 = solve_phi1(flow, y_c, lambda, WRONSKIAN_TOL)?;
    let (p_lo, p_hi) = (phi1.val_breaks[0], *phi1.val_breaks.last().unwrap());
    Ok(std::f64::consts::PI * upp / (up * up * up) * (flow.u(-1.0) - c_r) * (flow.u(1.0) - c_r) * p_lo * p_hi)
}

/// A by ε-extrapolation of Re 𝒲(c_r + iε_k), ε_k = ε₀2^{−k}; B from the closed formula.
pub fn boundary_limits_with(flow: &PerturbedFlow, c_r: f64, lambda: f64, eps0: f64) -> Result<BoundaryLimit> {
    check_lambda(lambda)?;
    let (lo, hi) = (flow.u(-1.0), flow.u(1.0));
    let margin = 1e-9 * (hi - lo);
    if !(c_r > lo + margin && c_r < hi - margin) {
        return Err(Error::domain(format!("c_r = {c_r} not strictly inside Ran U_(m,γ) = [{lo}, {hi}]")));
    }
    let eps: Vec<f64> = (0..RICHARDSON_LEVELS).map(|k| eps0 * 0.5f64.powi(k as i32)).collect();
    let mut samples = Vec::with_capacity(eps.len());
    for &e in &eps {
        let w = modified_wronskian(flow, Complex64::new(c_r, e), lambda)?;
        samples.push(w.as_full().unwrap());
    }
    let full = extrapolate_to_zero(&eps, &samples);
    let coarse = extrapolate_to_zero(&eps[1..], &samples[1..]);
    let b = b_closed_form(flow, c_r, lambda)?;
    Ok(BoundaryLimit {
        c_r,
        lambda,
        a: full.re,
        b,
        b_limit: -full.im,
        extrapolation_residual: (full - coarse).norm(),
        eps,
        samples,
    })
}

pub fn boundary_limits(flow: &PerturbedFlow, c_r: f64, lambda: f64) -> Result<BoundaryLimit> {
    boundary_limits_with(flow, c_r, lambda, default_eps0(flow))
}

/// Finite-difference derivatives of W at c = i·c_i.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WronskianProbes {
    pub c_i: f64,
    pub w: Complex64,
    pub dw_dci: Complex64,
    pub dw_dm: Complex64,
    pub gamma_abs_dci: f64,
    pub abs_dm: f64,
}

/// Central differences with step 10⁻³·min(|c_i|, γ) in c_i and 10⁻⁴ in m.
pub fn wronskian_probes(flow: &PerturbedFlow, c_i: f64, lambda: f64) -> Result<WronskianProbes> {
    let eps0 = default_eps0(flow);
    if c_i == 0.0 || c_i.abs() > eps0 {
        return Err(Error::domain(format!("probe needs 0 < |c_i| ≤ ε₀ = {eps0}, got {c_i}")));
    }
    let hc = 1e-3 * c_i.abs().min(flow.gamma);
    let hm = 1e-4;
    let mesh = graded_mesh(flow, 0.0, c_i);
    let w_at = |f: &PerturbedFlow, ci: f64| -> Result<Complex64> {
        let point = SpectralPoint { c: Complex64::new(0.0, ci), lambda, y_c: Some(0.0) };
        Ok(modified_wronskian_on(f, point, mesh.clone())?.value)
    };
    let w = w_at(flow, c_i)?;
    let dw_dci = (w_at(flow, c_i + hc)? - w_at(flow, c_i - hc)?) / (2.0 * hc);
    let dw_dm = (w_at(&flow.with_m(flow.m + hm), c_i)? - w_at(&flow.with_m(flow.m - hm), c_i)?) / (2.0 * hm);
    Ok(WronskianProbes {
        c_i,
        w,
        dw_dci,
        dw_dm,
        gamma_abs_dci: flow.gamma * dw_dci.norm(),
        abs_dm: dw_dm.norm(),
    })
}
