//! Unstable-branch continuation c(m) for m > m_*, argument-principle zero
//! counts over the Howard region, and real-axis embedded-eigenvalue checks.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::profiles::PerturbedFlow;
use crate::wronskian::{boundary_limits, default_eps0, full_wronskian, modified_wronskian, wronskian_probes, WronskianProbes};

/// Newton stopping rule: |W| ≤ NEWTON_TOL·|∂_{c_i}W|.
pub const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 30;
/// Default number of real-axis samples in the embedded-mode check.
pub const REAL_AXIS_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HowardRegion {
    pub center: f64,
    pub radius: f64,
}

impl HowardRegion {
    pub fn contains(&self, c: Complex64) -> bool {
        (c.re - self.center).powi(2) + c.im * c.im <= self.radius * self.radius
    }
}

/// Center (U(−1)+U(1))/2 and radius (U(1)−U(−1))/√2.
pub fn howard_region(flow: &PerturbedFlow) -> HowardRegion {
    let (center, radius) = flow.howard_region();
    HowardRegion { center, radius }
}

/// A converged root of W(c) = 0 at fixed m.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Root {
    pub c: Complex64,
    pub residual: f64,
    pub iterations: usize,
}

/// Two-real-unknown Newton on (Re W, Im W) over (Re c, Im c).
pub fn refine_root(flow: &PerturbedFlow, guess: Complex64, lambda: f64) -> Result<Root> {
    refine_root_tol(flow, guess, lambda, NEWTON_TOL)
}

/// refine_root stopping at |W| ≤ tol·|∂_{c_i}W|.
pub fn refine_root_tol(flow: &PerturbedFlow, guess: Complex64, lambda: f64, tol: f64) -> Result<Root> {
    let mut c = guess;
    if c.im == 0.0 {
        return Err(Error::domain("root refinement needs Im c ≠ 0"));
    }
    let w_of = |c: Complex64| -> Result<Complex64> { Ok(modified_wronskian(flow, c, lambda)?.value) };
    let mut w = w_of(c)?;
    for it in 0..NEWTON_MAX_ITER {
        let h = 1e-4 * c.im.abs();
        let dr = (w_of(c + h)? - w_of(c - h)?) / (2.0 * h);
        let di = (w_of(c + Complex64::new(0.0, h))? - w_of(c - Complex64::new(0.0, h))?) / (2.0 * h);
        if w.norm() <= tol * di.norm() {
            return Ok(Root { c, residual: w.norm() / di.norm(), iterations: it });
        }
        // [dr.re di.re; dr.im di.im] [δr; δi] = −[w.re; w.im]
        let det = dr.re * di.im - di.re * dr.im;
        if det == 0.0 || !det.is_finite() {
            return Err(Error::NonConvergence("singular Newton Jacobian".into()));
        }
        let dx = (-w.re * di.im + di.re * w.im) / det;
        let dy = (-dr.re * w.im + dr.im * w.re) / det;
        let mut step = Complex64::new(dx, dy);
        // keep the iterate in the same half-plane
        while (c + step).im * c.im <= 0.0 {
            step *= 0.5;
        }
        c += step;
        w = w_of(c)?;
    }
    let h = 1e-4 * c.im.abs();
    let di = (w_of(c + Complex64::new(0.0, h))? - w_of(c - Complex64::new(0.0, h))?) / (2.0 * h);
    if w.norm() <= tol * di.norm() {
        return Ok(Root { c, residual: w.norm() / di.norm(), iterations: NEWTON_MAX_ITER });
    }
    Err(Error::NonConvergence(format!("Newton did not converge near c = {c}")))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BranchSample {
    pub m: f64,
    pub c: Complex64,
    pub newton_residual: f64,
    /// |Im c|/(γ(m − m_*)).
    pub ratio: f64,
    pub probes: Option<WronskianProbes>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeBranch {
    pub gamma: f64,
    pub m_star: f64,
    pub lambda: f64,
    pub samples: Vec<BranchSample>,
}

impl ModeBranch {
    /// Smallest C with every ratio in [C⁻¹, C].
    pub fn ratio_constant(&self) -> f64 {
        self.samples
            .iter()
            .filter(|s| s.m > self.m_star)
            .map(|s| s.ratio.max(1.0 / s.ratio))
            .fold(1.0, f64::max)
    }

    /// CSV rows: m, Re c, Im c, residual, ratio.
    pub fn rows(&self) -> Vec<[f64; 5]> {
        self.samples.iter().map(|s| [s.m, s.c.re, s.c.im, s.newton_residual, s.ratio]).collect()
    }
}

/// Options of the branch continuation.
#[derive(Debug, Clone, Copy)]
pub struct BranchOptions {
    pub lambda: f64,
    /// Also record ∂_{c_i}W and ∂_mW probes at every sample.
    pub probes: bool,
    /// Relative Newton tolerance of each root refinement.
    pub tol: f64,
}

impl Default for BranchOptions {
    fn default() -> Self {
        Self { lambda: -1.0, probes: false, tol: NEWTON_TOL }
    }
}

/// Continue the upper root from (m_*, 0) through the increasing amplitudes `targets`.
pub fn continue_branch_to(
    flow_at: &dyn Fn(f64) -> Result<PerturbedFlow>,
    m_star: f64,
    targets: &[f64],
    opts: BranchOptions,
) -> Result<ModeBranch> {
    let anchor = flow_at(m_star)?;
    let gamma = anchor.gamma;
    let lambda = opts.lambda;
    let mut samples =
        vec![BranchSample { m: m_star, c: Complex64::default(), newton_residual: 0.0, ratio: f64::NAN, probes: None }];
    // tangent at the neutral point: dc/dm = −i·∂_mW/∂_{c_i}W
    let probe = wronskian_probes(&anchor, 0.01 * gamma * gamma.min(1.0), lambda)?;
    let mut slope = Complex64::new(0.0, -1.0) * probe.dw_dm / probe.dw_dci;
    if slope.im <= 0.0 {
        slope = Complex64::new(slope.re, slope.im.abs().max(1e-3 * gamma));
    }
    let (dm_min, dm_max) = (1e-4 * m_star, 0.1 * m_star);
    let mut m = m_star;
    let mut c = Complex64::default();
    for &target in targets {
        if target <= m {
            return Err(Error::domain("branch targets must increase beyond m_*"));
        }
        while m < target {
            let mut dm = (target - m).min(dm_max);
            loop {
                let m_new = m + dm;
                let flow = flow_at(m_new)?;
                let guess = c + slope * dm;
                let guess = if guess.im <= 0.0 { Complex64::new(guess.re, 0.5 * (c.im + 1e-6 * gamma)) } else { guess };
                match refine_root_tol(&flow, guess, lambda, opts.tol) {
                    Ok(root) if root.c.im > 0.0 => {
                        slope = (root.c - c) / dm;
                        c = root.c;
                        m = m_new;
                        if (m - target).abs() <= 1e-14 * target || m >= target {
                            m = target;
                            let probes = if opts.probes && c.im <= default_eps0(&flow) {
                                Some(wronskian_probes(&flow, c.im, lambda)?)
                            } else {
                                None
                            };
                            samples.push(BranchSample {
                                m,
                                c,
                                newton_residual: root.residual,
                                ratio: c.im.abs() / (gamma * (m - m_star)),
                                probes,
                            });
                        }
                        break;
                    }
                    _ => {
                        dm *= 0.5;
                        if dm < dm_min {
                            return Err(Error::NonConvergence(format!(
                                "branch lost after m = {m} (last c = {c})"
                            )));
                        }
                    }
                }
            }
        }
    }
    Ok(ModeBranch { gamma, m_star, lambda, samples })
}

/// Continue the branch on a uniform grid of `steps` amplitudes up to `m_max`.
pub fn continue_branch(
    flow_at: &dyn Fn(f64) -> Result<PerturbedFlow>,
    m_star: f64,
    m_max: f64,
    steps: usize,
    opts: BranchOptions,
) -> Result<ModeBranch> {
    let targets: Vec<f64> = (1..=steps).map(|j| m_star + (m_max - m_star) * j as f64 / steps as f64).collect();
    continue_branch_to(flow_at, m_star, &targets, opts)
}

/// 𝒲 at any non-real c: regular-solution route near the continuous spectrum,
/// shooting elsewhere.
pub fn wronskian_anywhere(flow: &PerturbedFlow, c: Complex64, lambda: f64) -> Result<Complex64> {
    let (lo, hi) = (flow.u(-1.0), flow.u(1.0));
    if c.re > lo && c.re < hi && c.im.abs() < 0.1 {
        if let Ok(w) = modified_wronskian(flow, c, lambda) {
            return Ok(w.as_full().unwrap());
        }
    }
    Ok(full_wronskian(flow, c, lambda)?.value)
}

#[derive(Debug, Clone, Serialize)]
pub struct Tile {
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub winding: f64,
    pub count: i64,
    pub min_abs_w: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaScan {
    pub lambda: f64,
    pub tiles: Vec<Tile>,
    pub count: i64,
    pub real_axis_min: f64,
    pub real_axis_argmin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroCount {
    pub eps_scan: f64,
    pub region: HowardRegion,
    pub scans: Vec<LambdaScan>,
}

impl ZeroCount {
    pub fn total(&self) -> i64 {
        self.scans.iter().map(|s| s.count).sum()
    }

    /// Largest distance of any winding number from its rounded value.
    pub fn integrality_defect(&self) -> f64 {
        self.scans
            .iter()
            .flat_map(|s| s.tiles.iter())
            .map(|t| (t.winding - t.count as f64).abs())
            .fold(0.0, f64::max)
    }
}

/// Scan options.
#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    pub eps_scan: f64,
    pub columns: usize,
    pub rows: usize,
    pub real_axis_samples: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { eps_scan: 0.02, columns: 5, rows: 3, real_axis_samples: REAL_AXIS_SAMPLES }
    }
}

/// Accumulated arg change of 𝒲 along the segment a → b with adaptive refinement.
fn phase_along(w: &dyn Fn(Complex64) -> Result<Complex64>, a: Complex64, b: Complex64, min_abs: &mut f64) -> Result<f64> {
    const MAX_STEP: f64 = 0.3;
    let mut stack = Vec::new();
    let (wa, wb) = (w(a)?, w(b)?);
    *min_abs = min_abs.min(wa.norm()).min(wb.norm());
    stack.push((a, wa, b, wb, 0usize));
    let mut total = 0.0;
    while let Some((p, wp, q, wq, depth)) = stack.pop() {
        let d = (wq / wp).arg();
        let ratio = (wq.norm() / wp.norm()).ln().abs();
        if (d.abs() <= MAX_STEP && ratio <= 1.0) || depth >= 40 {
            total += d;
            continue;
        }
        let mid = (p + q) * 0.5;
        let wm = w(mid)?;
        *min_abs = min_abs.min(wm.norm());
        stack.push((mid, wm, q, wq, depth + 1));
        stack.push((p, wp, mid, wm, depth + 1));
    }
    Ok(total)
}

fn tile_winding(
    w: &dyn Fn(Complex64) -> Result<Complex64>,
    re: (f64, f64),
    im: (f64, f64),
) -> Result<Tile> {
    let corners = [
        Complex64::new(re.0, im.0),
        Complex64::new(re.1, im.0),
        Complex64::new(re.1, im.1),
        Complex64::new(re.0, im.1),
    ];
    let mut min_abs = f64::INFINITY;
    let mut total = 0.0;
    for k in 0..4 {
        // split each edge so the phase tracker starts from a reasonable sampling
        let (a, b) = (corners[k], corners[(k + 1) % 4]);
        let pieces = 8;
        for s in 0..pieces {
            let p = a + (b - a) * (s as f64 / pieces as f64);
            let q = a + (b - a) * ((s + 1) as f64 / pieces as f64);
            total += phase_along(w, p, q, &mut min_abs)?;
        }
    }
    let winding = total / (2.0 * PI);
    Ok(Tile { re, im, winding, count: winding.round() as i64, min_abs_w: min_abs })
}

/// Argument-principle zero count over 𝔅 ∩ {|Im c| ≥ ε_scan} plus the real-axis
/// A² + B² minimum, for each λ.
pub fn stability_scan(flow: &PerturbedFlow, lambdas: &[f64], opts: ScanOptions) -> Result<ZeroCount> {
    let region = howard_region(flow);
    let scans: Result<Vec<LambdaScan>> = lambdas
        .par_iter()
        .map(|&lambda| {
            let w = |c: Complex64| wronskian_anywhere(flow, c, lambda);
            let mut offset = 0.0;
            let tiles = 'retile: loop {
                let (r0, r1) = (region.center - region.radius, region.center + region.radius);
                let width = (r1 - r0) / opts.columns as f64;
                let height = (region.radius - opts.eps_scan) / opts.rows as f64;
                let mut specs = Vec::new();
                for i in 0..opts.columns {
                    let re = (r0 + width * (i as f64 + offset), r0 + width * (i as f64 + 1.0 + offset));
                    let re = (if i == 0 { r0 } else { re.0 }, if i + 1 == opts.columns { r1 } else { re.1 });
                    for j in 0..opts.rows {
                        let im = (opts.eps_scan + height * j as f64, opts.eps_scan + height * (j + 1) as f64);
                        let nearest_re = region.center.clamp(re.0, re.1);
                        let nearest = Complex64::new(nearest_re, im.0);
                        if region.contains(nearest) {
                            specs.push((re, im));
                            specs.push((re, (-im.1, -im.0)));
                        }
                    }
                }
                let tiles: Result<Vec<Tile>> = specs.iter().map(|&(re, im)| tile_winding(&w, re, im)).collect();
                let tiles = tiles?;
                if tiles.iter().any(|t| t.min_abs_w < 1e-6) && offset < 0.5 {
                    offset += 0.37;
                    continue 'retile;
                }
                break tiles;
            };
            let count = tiles.iter().map(|t| t.count).sum();
            let (lo, hi) = (flow.u(-1.0), flow.u(1.0));
            let mut real_min = f64::INFINITY;
            let mut argmin = f64::NAN;
            for j in 0..opts.real_axis_samples {
                let c_r = lo + (hi - lo) * (j as f64 + 0.5) / opts.real_axis_samples as f64;
                let v = boundary_limits(flow, c_r, lambda)?.indicator();
                if v < real_min {
                    real_min = v;
                    argmin = c_r;
                }
            }
            Ok(LambdaScan { lambda, tiles, count, real_axis_min: real_min, real_axis_argmin: argmin })
        })
        .collect();
    Ok(ZeroCount { eps_scan: opts.eps_scan, region, scans: scans? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{BaseProfile, PerturbationProfile};

    #[test]
    fn howard_region_of_builtins() {
        let g = PerturbationProfile::gaussian();
        let f = PerturbedFlow::new(BaseProfile::couette(), g.clone(), 0.0, 0.1).unwrap();
        let r = howard_region(&f);
        assert!(r.center.abs() < 1e-15 && (r.radius - 2f64.sqrt()).abs() < 1e-15);
        let f = PerturbedFlow::new(BaseProfile::cubic(), g, 0.0, 0.1).unwrap();
        let r = howard_region(&f);
        assert!((r.radius - 2f64.sqrt() * 5.0 / 6.0).abs() < 1e-15);
    }
}
