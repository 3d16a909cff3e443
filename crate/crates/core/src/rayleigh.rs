//! Rayleigh-equation solutions: the regular solution φ = (U−c)φ₁φ₂ built from
//! Volterra fixed points on a graded mesh, and boundary-shot solutions φ∓.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions, State};
use crate::profiles::PerturbedFlow;
use crate::quad::{Grading, Mesh};

/// Default sup-norm tolerance of the Picard iterations.
pub const PICARD_TOL: f64 = 1e-10;
/// Iteration cap before a Picard iteration is declared divergent.
pub const PICARD_MAX_ITER: usize = 200;
/// Below this distance from y_c the shifted profile U − c_r uses its Taylor form.
const SHIFT_TAYLOR: f64 = 1e-4;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// A phase speed c with spectral parameter λ and the critical layer of Re c.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralPoint {
    pub c: Complex64,
    pub lambda: f64,
    pub y_c: Option<f64>,
}

impl SpectralPoint {
    pub fn new(flow: &PerturbedFlow, c: Complex64, lambda: f64) -> Self {
        Self { c, lambda, y_c: flow.critical_layer(c.re) }
    }
}

/// Mesh graded toward y_c and the perturbation core y = 0.
pub fn graded_mesh(flow: &PerturbedFlow, y_c: f64, c_i: f64) -> Mesh {
    let width = if c_i != 0.0 { c_i.abs().min(flow.gamma) } else { flow.gamma };
    let floor = (width / 10.0).max(1e-12);
    Mesh::graded(-1.0, 1.0, &[y_c, 0.0], y_c, Grading { floor, ..Grading::default() })
}

/// U(y) − U(y_c) without cancellation near y_c.
fn shifted(flow: &PerturbedFlow, y: f64, y_c: f64, u_c: f64) -> f64 {
    let d = y - y_c;
    if d.abs() < SHIFT_TAYLOR && y_c != 0.0 {
        let (d1, d2, d3) = (flow.eval_raw(y_c, 1), flow.eval_raw(y_c, 2), flow.eval_raw(y_c, 3));
        d * (d1 + d * (d2 / 2.0 + d * d3 / 6.0))
    } else if y_c == 0.0 {
        flow.u(y)
    } else {
        flow.u(y) - u_c
    }
}

/// The real factor φ₁ of the regular solution.
#[derive(Debug, Clone)]
pub struct Phi1 {
    pub mesh: Mesh,
    pub y_c: f64,
    pub lambda: f64,
    pub val: Vec<f64>,
    pub der: Vec<f64>,
    pub val_breaks: Vec<f64>,
    pub der_breaks: Vec<f64>,
    /// φ₁′/(U − c_r) at the nodes (smooth through y_c).
    pub der_over_shift: Vec<f64>,
    /// U − c_r at the nodes and breakpoints.
    pub shift: Vec<f64>,
    pub shift_breaks: Vec<f64>,
    pub iterations: usize,
}

impl Phi1 {
    pub fn at(&self, y: f64) -> f64 {
        if let Some(i) = self.mesh.breaks.iter().position(|b| *b == y) {
            return self.val_breaks[i];
        }
        self.mesh.interpolate(&self.val, y)
    }
}

/// φ₁(y) = 1 + ∫_{y_c}^y (−λ)/(U−c_r)² ∫_{y_c}^w (U−c_r)²φ₁ dz dw by Picard iteration.
pub fn solve_phi1_on(flow: &PerturbedFlow, mesh: Mesh, y_c: f64, lambda: f64, tol: f64) -> Result<Phi1> {
    if !(-1.0..=1.0).contains(&y_c) {
        return Err(Error::domain(format!("critical layer {y_c} outside [-1, 1]")));
    }
    let u_c = flow.u(y_c);
    let shift: Vec<f64> = mesh.nodes.iter().map(|&y| shifted(flow, y, y_c, u_c)).collect();
    let shift_breaks: Vec<f64> = mesh
        .breaks
        .iter()
        .enumerate()
        .map(|(i, &y)| if i == mesh.anchor { 0.0 } else { shifted(flow, y, y_c, u_c) })
        .collect();
    let r2: Vec<f64> = shift.iter().map(|r| r * r).collect();
    let n = mesh.len();
    let mut val = vec![1.0; n];
    let mut iterations = 0;
    if lambda != 0.0 {
        let mut converged = false;
        for it in 1..=PICARD_MAX_ITER {
            iterations = it;
            let g: Vec<f64> = val.iter().zip(&r2).map(|(v, r)| v * r).collect();
            let (inner, _) = mesh.cumulative(&g);
            let q: Vec<f64> = inner.iter().zip(&r2).map(|(a, r)| a / r).collect();
            let (cq, _) = mesh.cumulative(&q);
            let new: Vec<f64> = cq.iter().map(|v| 1.0 - lambda * v).collect();
            let scale = new.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let diff = new.iter().zip(&val).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            val = new;
            if diff <= tol * scale {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence(format!(
                "φ₁ Picard iteration did not converge in {PICARD_MAX_ITER} steps (λ = {lambda})"
            )));
        }
    }
    let g: Vec<f64> = val.iter().zip(&r2).map(|(v, r)| v * r).collect();
    let (inner, inner_b) = mesh.cumulative(&g);
    let q: Vec<f64> = inner.iter().zip(&r2).map(|(a, r)| a / r).collect();
    let (cq, cq_b) = mesh.cumulative(&q);
    let val: Vec<f64> = cq.iter().map(|v| 1.0 - lambda * v).collect();
    let val_breaks: Vec<f64> = cq_b.iter().map(|v| 1.0 - lambda * v).collect();
    let der: Vec<f64> = q.iter().map(|v| -lambda * v).collect();
    let der_breaks: Vec<f64> = inner_b
        .iter()
        .zip(&shift_breaks)
        .enumerate()
        .map(|(i, (a, r))| if i == mesh.anchor { 0.0 } else { -lambda * a / (r * r) })
        .collect();
    let der_over_shift: Vec<f64> = der.iter().zip(&shift).map(|(d, r)| d / r).collect();
    Ok(Phi1 { mesh, y_c, lambda, val, der, val_breaks, der_breaks, der_over_shift, shift, shift_breaks, iterations })
}

/// φ₁ on the default graded mesh.
pub fn solve_phi1(flow: &PerturbedFlow, y_c: f64, lambda: f64, tol: f64) -> Result<Phi1> {
    solve_phi1_on(flow, graded_mesh(flow, y_c, 0.0), y_c, lambda, tol)
}

/// The complex factor φ₂ of the regular solution.
#[derive(Debug, Clone)]
pub struct Phi2 {
    pub val: Vec<Complex64>,
    pub der: Vec<Complex64>,
    pub val_breaks: Vec<Complex64>,
    pub der_breaks: Vec<Complex64>,
    pub iterations: usize,
}

/// φ₂ from (f²φ₁²φ₂′)′ + 2ic_iU′(f/f_r)φ₁φ₁′φ₂ = 0, f = U − c, f_r = U − c_r.
pub fn solve_phi2(flow: &PerturbedFlow, c_i: f64, phi1: &Phi1, tol: f64) -> Result<Phi2> {
    let mesh = &phi1.mesh;
    let n = mesh.len();
    let one = Complex64::new(1.0, 0.0);
    if c_i == 0.0 {
        return Ok(Phi2 {
            val: vec![one; n],
            der: vec![Complex64::default(); n],
            val_breaks: vec![one; mesh.breaks.len()],
            der_breaks: vec![Complex64::default(); mesh.breaks.len()],
            iterations: 0,
        });
    }
    let f: Vec<Complex64> = phi1.shift.iter().map(|r| Complex64::new(*r, -c_i)).collect();
    let kern: Vec<Complex64> = (0..n)
        .map(|j| {
            let up = flow.eval_raw(mesh.nodes[j], 1);
            I * (2.0 * c_i * up) * f[j] * (phi1.der_over_shift[j] * phi1.val[j])
        })
        .collect();
    let den: Vec<Complex64> = (0..n).map(|j| f[j] * f[j] * (phi1.val[j] * phi1.val[j])).collect();
    let mut val = vec![one; n];
    let mut iterations = 0;
    let mut converged = false;
    for it in 1..=PICARD_MAX_ITER {
        iterations = it;
        let g: Vec<Complex64> = kern.iter().zip(&val).map(|(k, v)| k * v).collect();
        let (j_int, _) = mesh.cumulative(&g);
        let h: Vec<Complex64> = j_int.iter().zip(&den).map(|(a, d)| -a / d).collect();
        let (hi, _) = mesh.cumulative(&h);
        let new: Vec<Complex64> = hi.iter().map(|v| one + v).collect();
        let scale = new.iter().fold(1.0f64, |m, v| m.max(v.norm()));
        let diff = new.iter().zip(&val).fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        val = new;
        if diff <= tol * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence(format!("φ₂ Picard iteration did not converge (c_i = {c_i})")));
    }
    let g: Vec<Complex64> = kern.iter().zip(&val).map(|(k, v)| k * v).collect();
    let (j_int, j_b) = mesh.cumulative(&g);
    let der: Vec<Complex64> = j_int.iter().zip(&den).map(|(a, d)| -a / d).collect();
    let (hi, hi_b) = mesh.cumulative(&der);
    let val: Vec<Complex64> = hi.iter().map(|v| one + v).collect();
    let val_breaks: Vec<Complex64> = hi_b.iter().map(|v| one + v).collect();
    let der_breaks: Vec<Complex64> = (0..mesh.breaks.len())
        .map(|i| {
            let fb = Complex64::new(phi1.shift_breaks[i], -c_i);
            let d = fb * fb * (phi1.val_breaks[i] * phi1.val_breaks[i]);
            -j_b[i] / d
        })
        .collect();
    Ok(Phi2 { val, der, val_breaks, der_breaks, iterations })
}

/// The assembled regular solution φ = (U − c)φ₁φ₂ on its graded mesh.
#[derive(Debug, Clone)]
pub struct RayleighSolution {
    pub point: SpectralPoint,
    pub phi1: Phi1,
    pub phi2: Phi2,
    pub phi: Vec<Complex64>,
    pub dphi: Vec<Complex64>,
    pub phi_breaks: Vec<Complex64>,
    pub dphi_breaks: Vec<Complex64>,
    /// Max pointwise Rayleigh defect relative to max |φ|, away from the critical layer.
    pub residual: f64,
}

impl RayleighSolution {
    pub fn mesh(&self) -> &Mesh {
        &self.phi1.mesh
    }

    /// φ(−1) and φ(1).
    pub fn boundary_values(&self) -> (Complex64, Complex64) {
        (self.phi_breaks[0], *self.phi_breaks.last().unwrap())
    }

    /// CSV rows: y, Re φ, Im φ, Re φ′, Im φ′, φ₁, Re φ₂, Im φ₂, defect.
    pub fn rows(&self, flow: &PerturbedFlow) -> Vec<[f64; 9]> {
        let defect = pointwise_defect(flow, self);
        let m = self.mesh();
        (0..m.len())
            .map(|j| {
                [
                    m.nodes[j],
                    self.phi[j].re,
                    self.phi[j].im,
                    self.dphi[j].re,
                    self.dphi[j].im,
                    self.phi1.val[j],
                    self.phi2.val[j].re,
                    self.phi2.val[j].im,
                    defect[j],
                ]
            })
            .collect()
    }
}

fn pointwise_defect(flow: &PerturbedFlow, sol: &RayleighSolution) -> Vec<f64> {
    let mesh = sol.mesh();
    let d2 = mesh.differentiate(&sol.dphi);
    let c = sol.point.c;
    (0..mesh.len())
        .map(|j| {
            let y = mesh.nodes[j];
            let coef = flow.eval_raw(y, 2) / (flow.u(y) - c);
            (-d2[j] + coef * sol.phi[j] - sol.point.lambda * sol.phi[j]).norm()
        })
        .collect()
}

/// Regular solution on an explicit mesh anchored at the critical layer.
pub fn assemble_on(flow: &PerturbedFlow, point: SpectralPoint, mesh: Mesh, tol: f64) -> Result<RayleighSolution> {
    let y_c = point
        .y_c
        .ok_or_else(|| Error::domain(format!("Re c = {} outside Ran U_(m,γ)", point.c.re)))?;
    let c_i = point.c.im;
    let phi1 = solve_phi1_on(flow, mesh, y_c, point.lambda, tol)?;
    let phi2 = solve_phi2(flow, c_i, &phi1, tol)?;
    let mesh = &phi1.mesh;
    let build = |r: f64, y: f64, p1: f64, d1: f64, p2: Complex64, d2: Complex64| -> (Complex64, Complex64) {
        let f = Complex64::new(r, -c_i);
        let up = flow.eval_raw(y, 1);
        (f * p1 * p2, up * p1 * p2 + f * (d1 * p2 + p1 * d2))
    };
    let mut phi = Vec::with_capacity(mesh.len());
    let mut dphi = Vec::with_capacity(mesh.len());
    for j in 0..mesh.len() {
        let (a, b) = build(phi1.shift[j], mesh.nodes[j], phi1.val[j], phi1.der[j], phi2.val[j], phi2.der[j]);
        phi.push(a);
        dphi.push(b);
    }
    let mut phi_breaks = Vec::with_capacity(mesh.breaks.len());
    let mut dphi_breaks = Vec::with_capacity(mesh.breaks.len());
    for i in 0..mesh.breaks.len() {
        let (a, b) = build(
            phi1.shift_breaks[i],
            mesh.breaks[i],
            phi1.val_breaks[i],
            phi1.der_breaks[i],
            phi2.val_breaks[i],
            phi2.der_breaks[i],
        );
        phi_breaks.push(a);
        dphi_breaks.push(b);
    }
    let mut sol = RayleighSolution { point, phi1, phi2, phi, dphi, phi_breaks, dphi_breaks, residual: 0.0 };
    let defect = pointwise_defect(flow, &sol);
    let floor = c_i.abs().min(flow.gamma).max(1e-12);
    let scale = sol.phi.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    sol.residual = sol
        .mesh()
        .nodes
        .iter()
        .zip(&defect)
        .filter(|(y, _)| (**y - y_c).abs() > floor)
        .fold(0.0f64, |m, (_, d)| m.max(*d))
        / scale;
    Ok(sol)
}

/// Regular solution φ = (U − c)φ₁φ₂ on the default graded mesh.
pub fn assemble_regular_solution(flow: &PerturbedFlow, point: SpectralPoint, tol: f64) -> Result<RayleighSolution> {
    let y_c = point
        .y_c
        .ok_or_else(|| Error::domain(format!("Re c = {} outside Ran U_(m,γ)", point.c.re)))?;
    assemble_on(flow, point, graded_mesh(flow, y_c, point.c.im), tol)
}

/// Which wall a boundary solution is launched from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Lower,
    Upper,
}

impl Side {
    pub fn wall(self) -> f64 {
        match self {
            Side::Lower => -1.0,
            Side::Upper => 1.0,
        }
    }
}

/// Shoot φ∓ from the wall with φ = 0, φ′ = 1 and report the state at `outputs`
/// (ordered away from the wall).
pub fn shoot_boundary_solution(
    flow: &PerturbedFlow,
    c: Complex64,
    lambda: f64,
    side: Side,
    outputs: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<State>> {
    if c.im == 0.0 {
        return Err(Error::domain("boundary shooting requires Im c ≠ 0; use the boundary limits for real c"));
    }
    let p = |y: f64| flow.eval_raw(y, 2) / (flow.u(y) - c) - lambda;
    ode::integrate_linear(
        &p,
        side.wall(),
        [Complex64::default(), Complex64::new(1.0, 0.0)],
        outputs,
        opts,
    )
}

/// Values of φ₁ᴱ = φ₁(·; c_r)φ₂(·; c) and (φ₁ᴱ)′ at the nodes of `phi1.mesh`.
pub fn phi1_extension(flow: &PerturbedFlow, phi1: &Phi1, c_i: f64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let p2 = solve_phi2(flow, c_i, phi1, PICARD_TOL)?;
    let val = phi1.val.iter().zip(&p2.val).map(|(a, b)| b * *a).collect();
    let der = (0..phi1.val.len()).map(|j| p2.val[j] * phi1.der[j] + p2.der[j] * phi1.val[j]).collect();
    Ok((val, der))
}

/// A finite-difference estimate sampled at points y, divided by (y − y_c)².
#[derive(Debug, Clone, Serialize)]
pub struct EstimateProfile {
    pub y: Vec<f64>,
    pub value: Vec<f64>,
}

impl EstimateProfile {
    pub fn sup(&self) -> f64 {
        self.value.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn range(&self) -> (f64, f64) {
        self.value.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
    }
}

fn check_points(ys: &[f64], y_c: f64) -> Result<()> {
    if ys.iter().any(|&y| !(-1.0..=1.0).contains(&y) || y == y_c) {
        return Err(Error::domain("estimate points must lie in [-1, 1] away from the critical layer"));
    }
    Ok(())
}

/// ∂_Gφ₁ᴱ/φ₁ᴱ = (∂_{c_i} + i∂_y/U′(0))φ₁ᴱ/φ₁ᴱ at c = ic_i, central differences in c_i.
pub fn good_derivative(flow: &PerturbedFlow, c_i: f64, lambda: f64, ys: &[f64]) -> Result<Vec<Complex64>> {
    if flow.critical_layer(0.0).is_none() || c_i <= 0.0 {
        return Err(Error::domain("good-derivative estimate needs 0 ∈ Ran U and c_i > 0"));
    }
    check_points(ys, 0.0)?;
    let phi1 = solve_phi1_on(flow, graded_mesh(flow, 0.0, c_i), 0.0, lambda, PICARD_TOL)?;
    let h = 1e-3 * c_i;
    let (v, d) = phi1_extension(flow, &phi1, c_i)?;
    let (vp, _) = phi1_extension(flow, &phi1, c_i + h)?;
    let (vm, _) = phi1_extension(flow, &phi1, c_i - h)?;
    let dci: Vec<Complex64> = vp.iter().zip(&vm).map(|(p, m)| (p - m) / (2.0 * h)).collect();
    let up0 = flow.eval_raw(0.0, 1);
    let mesh = &phi1.mesh;
    Ok(ys
        .iter()
        .map(|&y| (mesh.interpolate(&dci, y) + I * mesh.interpolate(&d, y) / up0) / mesh.interpolate(&v, y))
        .collect())
}

/// |∂_Gφ₁ᴱ/φ₁ᴱ|/y².
pub fn good_derivative_profile(flow: &PerturbedFlow, c_i: f64, lambda: f64, ys: &[f64]) -> Result<EstimateProfile> {
    let g = good_derivative(flow, c_i, lambda, ys)?;
    Ok(EstimateProfile { y: ys.to_vec(), value: ys.iter().zip(&g).map(|(y, q)| q.norm() / (y * y)).collect() })
}

/// |∂_mφ₁ᴱ/(γφ₁ᴱ)|/y² at c = ic_i, central differences in m on a common mesh.
pub fn amplitude_derivative_profile(flow: &PerturbedFlow, c_i: f64, lambda: f64, ys: &[f64]) -> Result<EstimateProfile> {
    if flow.critical_layer(0.0).is_none() || c_i <= 0.0 {
        return Err(Error::domain("amplitude-derivative estimate needs 0 ∈ Ran U and c_i > 0"));
    }
    check_points(ys, 0.0)?;
    let mesh = graded_mesh(flow, 0.0, c_i);
    let h = 1e-5 * flow.m.max(1.0);
    let ext = |m: f64| -> Result<Vec<Complex64>> {
        let f = flow.with_m(m);
        let y_c = f.critical_layer(0.0).ok_or_else(|| Error::domain("0 left Ran U"))?;
        let phi1 = solve_phi1_on(&f, mesh.clone(), y_c, lambda, PICARD_TOL)?;
        Ok(phi1_extension(&f, &phi1, c_i)?.0)
    };
    let (v, vp, vm) = (ext(flow.m)?, ext(flow.m + h)?, ext(flow.m - h)?);
    let dm: Vec<Complex64> = vp.iter().zip(&vm).map(|(p, m)| (p - m) / (2.0 * h)).collect();
    let value = ys
        .iter()
        .map(|&y| (mesh.interpolate(&dm, y) / mesh.interpolate(&v, y)).norm() / (flow.gamma * y * y))
        .collect();
    Ok(EstimateProfile { y: ys.to_vec(), value })
}

/// (∂_λφ₁/φ₁)·√−λ/(y − y_c)² at c_r, central differences in λ.
pub fn lambda_derivative_profile(flow: &PerturbedFlow, c_r: f64, lambda: f64, ys: &[f64]) -> Result<EstimateProfile> {
    if lambda >= 0.0 {
        return Err(Error::domain("λ-derivative estimate needs λ < 0"));
    }
    let y_c = flow.critical_layer(c_r).ok_or_else(|| Error::domain(format!("c_r = {c_r} outside Ran U")))?;
    check_points(ys, y_c)?;
    let mesh = graded_mesh(flow, y_c, 0.0);
    let h = 1e-5 * lambda.abs();
    let at = |l: f64| solve_phi1_on(flow, mesh.clone(), y_c, l, PICARD_TOL);
    let (v, vp, vm) = (at(lambda)?, at(lambda + h)?, at(lambda - h)?);
    let dl: Vec<f64> = vp.val.iter().zip(&vm.val).map(|(p, m)| (p - m) / (2.0 * h)).collect();
    let a = (-lambda).sqrt();
    let value = ys
        .iter()
        .map(|&y| mesh.interpolate(&dl, y) / v.at(y) * a / ((y - y_c) * (y - y_c)))
        .collect();
    Ok(EstimateProfile { y: ys.to_vec(), value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{BaseProfile, PerturbationProfile};

    fn couette() -> PerturbedFlow {
        PerturbedFlow::new(BaseProfile::couette(), PerturbationProfile::gaussian(), 0.0, 0.1).unwrap()
    }

    #[test]
    fn phi1_couette_closed_form() {
        let p = solve_phi1(&couette(), 0.0, -1.0, 1e-13).unwrap();
        for (y, v) in p.mesh.nodes.iter().zip(&p.val) {
            assert!((v - y.sinh() / y).abs() < 1e-12, "{y}");
        }
        assert!((p.val_breaks.last().unwrap() - 1f64.sinh()).abs() < 1e-12);
    }

    #[test]
    fn couette_regular_solution_with_complex_c() {
        let f = couette();
        let pt = SpectralPoint::new(&f, Complex64::new(0.0, 0.1), -1.0);
        let s = assemble_regular_solution(&f, pt, 1e-13).unwrap();
        for (y, v) in s.mesh().nodes.iter().zip(&s.phi) {
            let exact = Complex64::new(y.sinh(), -0.1 * y.cosh());
            assert!((v - exact).norm() < 1e-11, "{y}");
        }
        assert!(s.residual < 1e-8, "{}", s.residual);
    }
}
