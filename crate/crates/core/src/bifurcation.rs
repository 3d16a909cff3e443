//! Steady Euler states Δψ = G̃(ψ) bifurcating from U_{m,γ}: vorticity map,
//! kernel mode and Newton continuation in the amplitude ε.

use faer::prelude::*;
use faer::Mat;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::profiles::{fourier_extension_norm, PerturbedFlow};
use crate::quad::{gauss_legendre, integrate_adaptive};
use crate::threshold::min_eigenvalue;

/// Relative width of the blend margin outside the tabulated ψ-range.
pub const BLEND_MARGIN: f64 = 0.1;
/// Largest admissible G′ mismatch at the y = 0 image.
pub const C1_TOL: f64 = 1e-6;
/// Newton stopping tolerance on the max-norm residual.
pub const NEWTON_TOL: f64 = 1e-10;
/// Default tabulation size of the vorticity map.
pub const MAP_SAMPLES: usize = 4001;

/// Chebyshev–Gauss–Lobatto points x_i = cos(πi/n), descending, with the
/// first-derivative matrix.
pub fn chebyshev(n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let x: Vec<f64> = (0..=n).map(|i| (std::f64::consts::PI * i as f64 / n as f64).cos()).collect();
    let c = |i: usize| (if i == 0 || i == n { 2.0 } else { 1.0 }) * if i.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut d = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[i][j] = c(i) / c(j) / (x[i] - x[j]);
            }
        }
    }
    for i in 0..=n {
        let s: f64 = (0..=n).filter(|&j| j != i).map(|j| d[i][j]).sum();
        d[i][i] = -s;
    }
    (x, d)
}

/// Clenshaw–Curtis weights on the Chebyshev–Lobatto points.
pub fn clenshaw_curtis(n: usize) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    let mut w = vec![0.0; n + 1];
    for (i, wi) in w.iter_mut().enumerate() {
        let theta = pi * i as f64 / n as f64;
        let mut v = 1.0;
        let half = n / 2;
        for k in 1..=half {
            let b = if 2 * k == n { 1.0 } else { 2.0 };
            v -= b / (4.0 * (k * k) as f64 - 1.0) * (2.0 * k as f64 * theta).cos();
        }
        let c = if i == 0 || i == n { 1.0 } else { 2.0 };
        *wi = c * v / n as f64;
    }
    w
}

/// Barycentric interpolation on the Chebyshev–Lobatto points.
pub fn barycentric(x: &[f64], f: &[f64], t: f64) -> f64 {
    let n = x.len() - 1;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..=n {
        let d = t - x[i];
        if d == 0.0 {
            return f[i];
        }
        let w = (if i == 0 || i == n { 0.5 } else { 1.0 }) * if i.is_multiple_of(2) { 1.0 } else { -1.0 } / d;
        num += w * f[i];
        den += w;
    }
    num / den
}

fn matvec(d: &[Vec<f64>], f: &[f64]) -> Vec<f64> {
    d.iter().map(|row| row.iter().zip(f).map(|(a, b)| a * b).sum()).collect()
}

/// Background stream function ψ₀(y) = ∫₀^y U.
pub fn psi0(flow: &PerturbedFlow, y: f64) -> f64 {
    integrate_adaptive(&|t| flow.u(t), 0.0, y, 1e-15)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// ψ₀ restricted to y ≥ 0; needs U′ even.
    Plain,
    /// ψ̃₀ = sign(y)ψ₀ on the whole channel.
    Signed,
}

#[derive(Debug, Clone, Serialize)]
pub struct OneSided {
    pub order: usize,
    pub left: f64,
    pub right: f64,
    pub mismatch: f64,
}

/// Tabulated G with G(ψ̃₀(y)) = U′(y), C¹ Hermite interpolation and a quintic
/// taper to zero outside the range.
#[derive(Debug, Clone, Serialize)]
pub struct VorticityMap {
    pub construction: Construction,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub g: Vec<f64>,
    /// dG/ds at the left end of the interval starting at each node.
    pub gp_right: Vec<f64>,
    /// dG/ds at the right end of the interval ending at each node.
    pub gp_left: Vec<f64>,
    pub s_min: f64,
    pub s_max: f64,
    pub margin: f64,
    /// Taylor data (G, G′, G″, G‴) at s_min and s_max used by the extension.
    pub ext_lo: [f64; 4],
    pub ext_hi: [f64; 4],
    pub diagnostics: Vec<OneSided>,
    #[serde(skip)]
    flow: PerturbedFlow,
}

fn taper(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        (1.0, 0.0)
    } else if t >= 1.0 {
        (0.0, 0.0)
    } else {
        let t2 = t * t;
        (1.0 - t2 * t * (10.0 - 15.0 * t + 6.0 * t2), -30.0 * t2 * (1.0 - t).powi(2))
    }
}

/// Fornberg weights for the k-th derivative at x0 on the given offsets.
fn fd_weights(x0: f64, xs: &[f64], k: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; k + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(k);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for l in (1..=mn).rev() {
                    c[i][l] = c1 * (l as f64 * c[i - 1][l - 1] - c5 * c[i - 1][l]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for l in (1..=mn).rev() {
                c[j][l] = (c4 * c[j][l] - l as f64 * c[j][l - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|r| r[k]).collect()
}

impl VorticityMap {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// G̃(s) and G̃′(s).
    pub fn eval(&self, s: f64) -> (f64, f64) {
        let n = self.s.len();
        if s < self.s_min || s > self.s_max {
            let (end, c, dir) = if s < self.s_min { (self.s_min, &self.ext_lo, -1.0) } else { (self.s_max, &self.ext_hi, 1.0) };
            let d = s - end;
            let p = c[0] + d * (c[1] + d * (c[2] / 2.0 + d * c[3] / 6.0));
            let dp = c[1] + d * (c[2] + d * c[3] / 2.0);
            // cubic continuation on the inner half of the margin, quintic taper on the outer half
            let half = 0.5 * self.margin;
            let (t, dt) = taper((d.abs() - half) / half);
            return (t * p, t * dp + dir * dt / half * p);
        }
        let i = match self.s.partition_point(|&v| v <= s) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let (s0, s1) = (self.s[i], self.s[i + 1]);
        let h = s1 - s0;
        let t = (s - s0) / h;
        let (g0, g1) = (self.g[i], self.g[i + 1]);
        let (d0, d1) = (self.gp_right[i] * h, self.gp_left[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let val = (2.0 * t3 - 3.0 * t2 + 1.0) * g0 + (t3 - 2.0 * t2 + t) * d0 + (-2.0 * t3 + 3.0 * t2) * g1 + (t3 - t2) * d1;
        let der = ((6.0 * t2 - 6.0 * t) * g0 + (3.0 * t2 - 4.0 * t + 1.0) * d0 + (-6.0 * t2 + 6.0 * t) * g1 + (3.0 * t2 - 2.0 * t) * d1) / h;
        (val, der)
    }

    /// Exact composition U′(Y(s)) inside the range, the blend outside.
    pub fn exact(&self, s: f64) -> f64 {
        if s < self.s_min || s > self.s_max {
            return self.eval(s).0;
        }
        let sign = if self.construction == Construction::Signed && s < 0.0 { -1.0 } else { 1.0 };
        let target = sign * s;
        let (mut lo, mut hi) = if sign > 0.0 { (0.0, 1.0) } else { (-1.0, 0.0) };
        let val = |y: f64| sign * psi0(&self.flow, y);
        let idx = self.s.partition_point(|&v| v <= s);
        if idx > 0 && idx < self.s.len() {
            let (a, b) = (self.y[idx - 1], self.y[idx]);
            lo = a.min(b);
            hi = a.max(b);
        }
        let f = |y: f64| val(y) - sign * target;
        let increasing = f(hi) >= f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) < 0.0) == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        let mut y = 0.5 * (lo + hi);
        // Newton polish: d(±ψ₀)/dy = ±U
        for _ in 0..3 {
            let d = sign * self.flow.u(y);
            if d == 0.0 {
                break;
            }
            y -= f(y) / d;
        }
        self.flow.eval_raw(y, 1)
    }

    fn exact_end(&self, end: f64) -> f64 {
        if end == self.s_min {
            self.g[0]
        } else {
            self.g[self.g.len() - 1]
        }
    }

    /// One-sided derivative limits of G̃ at ψ̃₀(0) = 0, orders 1..=max_order.
    pub fn smoothness(&self, max_order: usize) -> Vec<OneSided> {
        let width = self.s_max - self.s_min;
        (1..=max_order)
            .map(|k| {
                let h = width * 1e-5 * 10f64.powf((k as f64 - 1.0) / 2.0);
                let pts = k + 4;
                let right: Vec<f64> = (0..pts).map(|i| h * i as f64).collect();
                let left: Vec<f64> = (0..pts).map(|i| -h * i as f64).collect();
                let eval = |s: f64| if s == 0.0 { self.g[self.zero_index()] } else { self.exact(s) };
                let d = |xs: &[f64]| -> f64 {
                    let w = fd_weights(0.0, xs, k);
                    xs.iter().zip(&w).map(|(x, w)| w * eval(*x)).sum()
                };
                let (l, r) = (d(&left), d(&right));
                OneSided { order: k, left: l, right: r, mismatch: (l - r).abs() }
            })
            .collect()
    }

    fn zero_index(&self) -> usize {
        self.s.iter().enumerate().min_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap().0
    }

    /// |G′(0⁻) − G′(0⁺)|.
    pub fn c1_mismatch(&self) -> f64 {
        self.diagnostics.first().map(|d| d.mismatch).unwrap_or(0.0)
    }
}

/// Tabulate G and build the extended map G̃.
pub fn build_vorticity_map(flow: &PerturbedFlow, construction: Construction, n_samples: usize) -> Result<VorticityMap> {
    if n_samples < 16 {
        return Err(Error::domain("vorticity map needs at least 16 samples"));
    }
    let du = |y: f64| flow.eval_raw(y, 1);
    if construction == Construction::Plain {
        let scale = (0..=200).map(|i| du(i as f64 / 200.0).abs()).fold(0.0, f64::max);
        let asym = (0..=200).map(|i| {
            let y = i as f64 / 200.0;
            (du(y) - du(-y)).abs()
        });
        let asym = asym.fold(0.0, f64::max);
        if asym > 1e-10 * scale {
            return Err(Error::Hypothesis(format!("plain construction needs even U′ (asymmetry {asym:e})")));
        }
    }
    let ys: Vec<f64> = match construction {
        Construction::Plain => (0..n_samples).map(|i| i as f64 / (n_samples - 1) as f64).collect(),
        Construction::Signed => (0..n_samples).map(|i| -1.0 + 2.0 * i as f64 / (n_samples - 1) as f64).collect(),
    };
    // cumulative ψ₀ from y = 0 outward with 16-point Gauss on each interval
    let (gx, gw) = gauss_legendre(16);
    let seg = |a: f64, b: f64| -> f64 {
        let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
        gx.iter().zip(&gw).map(|(x, w)| w * flow.u(c + r * x)).sum::<f64>() * r
    };
    let i0 = ys.iter().enumerate().min_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap().0;
    let mut psi = vec![0.0; ys.len()];
    psi[i0] = seg(0.0, ys[i0]);
    for i in i0 + 1..ys.len() {
        psi[i] = psi[i - 1] + seg(ys[i - 1], ys[i]);
    }
    for i in (0..i0).rev() {
        psi[i] = psi[i + 1] - seg(ys[i], ys[i + 1]);
    }
    let sgn = |y: f64| if construction == Construction::Signed && y < 0.0 { -1.0 } else { 1.0 };
    let s: Vec<f64> = ys.iter().zip(&psi).map(|(&y, &p)| sgn(y) * p).collect();
    if s.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Hypothesis("ψ̃₀ is not strictly increasing".into()));
    }
    let g: Vec<f64> = ys.iter().map(|&y| du(y)).collect();
    let q0 = flow.potential(0.0);
    let slope = |y: f64, from_left: bool| -> f64 {
        // dG/ds = U″/(dψ̃₀/dy), dψ̃₀/dy = sign·U
        if y == 0.0 {
            let side = if from_left { -1.0 } else { 1.0 };
            return if construction == Construction::Signed { side * q0 } else { q0 };
        }
        flow.eval_raw(y, 2) / (sgn(y) * flow.u(y))
    };
    let gp_right: Vec<f64> = ys.iter().map(|&y| slope(y, false)).collect();
    let gp_left: Vec<f64> = ys.iter().map(|&y| slope(y, true)).collect();
    let (s_min, s_max) = (s[0], *s.last().unwrap());
    let n = s.len();
    let ext_lo = [g[0], gp_right[0], 0.0, 0.0];
    let ext_hi = [g[n - 1], gp_left[n - 1], 0.0, 0.0];
    let mut map = VorticityMap {
        construction,
        y: ys,
        s,
        g,
        gp_right,
        gp_left,
        s_min,
        s_max,
        margin: BLEND_MARGIN * (s_max - s_min),
        ext_lo,
        ext_hi,
        diagnostics: Vec::new(),
        flow: flow.clone(),
    };
    // higher Taylor data at the range ends from one-sided stencils on U′∘Y
    let h = 1e-4 * (s_max - s_min);
    for (end, dir) in [(s_min, 1.0), (s_max, -1.0)] {
        let xs: Vec<f64> = (0..8).map(|i| dir * h * i as f64).collect();
        let vals: Vec<f64> = xs.iter().map(|x| if *x == 0.0 { map.exact_end(end) } else { map.exact(end + x) }).collect();
        for k in 2..4 {
            let w = fd_weights(0.0, &xs, k);
            let d: f64 = w.iter().zip(&vals).map(|(a, b)| a * b).sum();
            if dir > 0.0 {
                map.ext_lo[k] = d;
            } else {
                map.ext_hi[k] = d;
            }
        }
    }
    let orders = flow.base.smoothness_order as usize + 1;
    map.diagnostics = map.smoothness(orders);
    Ok(map)
}

/// Chebyshev collocation grid on [−1, 1].
#[derive(Debug, Clone)]
pub struct ChebGrid {
    pub y: Vec<f64>,
    pub d1: Vec<Vec<f64>>,
    pub d2: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl ChebGrid {
    pub fn new(n: usize) -> Self {
        let (y, d1) = chebyshev(n);
        let d2 = d1.iter().map(|row| (0..=n).map(|j| (0..=n).map(|k| row[k] * d1[k][j]).sum()).collect()).collect();
        Self { y, d1, d2, weights: clenshaw_curtis(n) }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.weights).map(|(a, b)| a * b).sum()
    }

    pub fn diff(&self, f: &[f64]) -> Vec<f64> {
        matvec(&self.d1, f)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelMode {
    /// −λ_{m,γ} from the ground-state solver.
    pub k0_sq: f64,
    /// Ground-state eigenvalue of the collocation operator.
    pub lambda_collocation: f64,
    pub y: Vec<f64>,
    /// Positive, L²-normalized, zero at the walls.
    pub phi0: Vec<f64>,
    /// max |𝔏(φ₀ cos ζ)| on the grid with k² = k₀².
    pub residual_2d: f64,
    /// ⟨−φ₀cos ζ, φ₀cos ζ⟩/‖φ₀cos ζ‖² of the discrete transversality condition.
    pub transversality: f64,
}

fn dense_lu_solve(a: &Mat<f64>, b: &[f64]) -> Vec<f64> {
    let lu = a.partial_piv_lu();
    let mut rhs = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
    lu.solve_in_place(rhs.as_mut());
    (0..b.len()).map(|i| rhs[(i, 0)]).collect()
}

/// Kernel of the linearized steady operator: k₀² = −λ_{m,γ}, φ₀ the ground state.
pub fn kernel_mode(flow: &PerturbedFlow, grid: &ChebGrid) -> Result<KernelMode> {
    let lambda = min_eigenvalue(flow)?.lambda_min;
    if lambda >= 0.0 {
        return Err(Error::Hypothesis(format!("λ_(m,γ) = {lambda} ≥ 0: no negative eigenvalue, no bifurcation point")));
    }
    let n = grid.len();
    let m = n - 2;
    let q: Vec<f64> = grid.y.iter().map(|&y| flow.potential(y)).collect();
    let shift = lambda - 1e-9;
    let a = Mat::<f64>::from_fn(m, m, |i, j| {
        let mut v = -grid.d2[i + 1][j + 1];
        if i == j {
            v += q[i + 1] - shift;
        }
        v
    });
    let lu = a.partial_piv_lu();
    let mut x: Vec<f64> = (0..m).map(|i| (std::f64::consts::PI * 0.5 * (grid.y[i + 1] + 1.0)).sin()).collect();
    let mut mu = 0.0;
    for _ in 0..6 {
        let mut rhs = Mat::<f64>::from_fn(m, 1, |i, _| x[i]);
        lu.solve_in_place(rhs.as_mut());
        let y: Vec<f64> = (0..m).map(|i| rhs[(i, 0)]).collect();
        mu = x.iter().map(|v| v * v).sum::<f64>() / x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
        let nrm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        x = y.iter().map(|v| v / nrm).collect();
    }
    let lambda_collocation = shift + mu;
    let mut phi0 = vec![0.0; n];
    phi0[1..n - 1].copy_from_slice(&x);
    let norm = grid.integrate(&phi0.iter().map(|v| v * v).collect::<Vec<_>>()).sqrt();
    let sgn = if grid.integrate(&phi0) < 0.0 { -1.0 } else { 1.0 };
    phi0.iter_mut().for_each(|v| *v *= sgn / norm);
    let k0_sq = -lambda;
    let d2phi = matvec(&grid.d2, &phi0);
    let residual_2d = (1..n - 1).map(|i| (-k0_sq * phi0[i] + d2phi[i] - q[i] * phi0[i]).abs()).fold(0.0, f64::max);
    let transversality = -grid.integrate(&phi0.iter().map(|v| v * v).collect::<Vec<_>>());
    Ok(KernelMode { k0_sq, lambda_collocation, y: grid.y.clone(), phi0, residual_2d, transversality })
}

#[derive(Debug, Clone, Copy)]
pub struct SteadyOptions {
    /// Cosine modes j = 0..=modes in ζ.
    pub modes: usize,
    /// Midpoint samples of [0, π] used for the ζ-projections.
    pub zeta_points: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Sobolev index 5/2 − τ + N of the second deviation norm.
    pub tau: f64,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        Self { modes: 16, zeta_points: 64, tol: NEWTON_TOL, max_iter: 20, tau: 0.5 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SteadyState {
    pub eps: f64,
    pub k_sq: f64,
    pub y: Vec<f64>,
    /// Cosine coefficients a_j(y) of ψ_per, j = 0..=J, on the collocation grid.
    pub modes: Vec<Vec<f64>>,
    pub newton_residual: f64,
    pub iterations: usize,
    /// ‖ψ_per − εφ₀cos ζ‖/ε (L² over one ζ-period), 0 at ε = 0.
    pub linear_deviation: f64,
    /// ‖(u,v) − (U,0)‖_{H²} over one x-period.
    pub h2_deviation: f64,
    /// Same in H^{5/2−τ+N}.
    pub hs_deviation: f64,
    pub hs_index: f64,
    /// Share of the j = 1 mode in the L² energy of ψ_per.
    pub j1_fraction: f64,
    /// max|u·∇ω| / max(|u ω_x| + |v ω_y|) on the full grid, walls included.
    pub substitution_defect: f64,
    /// Same over interior collocation nodes only.
    pub interior_defect: f64,
}

impl SteadyState {
    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.k_sq.sqrt()
    }

    /// ψ_per on a tensor grid of `nz` uniform ζ-points times the collocation points.
    pub fn psi_grid(&self, nz: usize) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(nz * self.y.len());
        for l in 0..nz {
            let z = 2.0 * std::f64::consts::PI * l as f64 / nz as f64;
            for (i, &y) in self.y.iter().enumerate() {
                let v: f64 = self.modes.iter().enumerate().map(|(j, a)| a[i] * (j as f64 * z).cos()).sum();
                out.push((z, y, v));
            }
        }
        out
    }

    /// Velocity (u, v) of the full stream function at (ζ, node i).
    pub fn velocity(&self, flow: &PerturbedFlow, grid: &ChebGrid, zeta: f64) -> Vec<(f64, f64)> {
        let k = self.k_sq.sqrt();
        let da: Vec<Vec<f64>> = self.modes.iter().map(|a| grid.diff(a)).collect();
        (0..self.y.len())
            .map(|i| {
                let mut u = flow.u(self.y[i]);
                let mut v = 0.0;
                for (j, a) in self.modes.iter().enumerate() {
                    let jf = j as f64;
                    u += da[j][i] * (jf * zeta).cos();
                    v += k * jf * a[i] * (jf * zeta).sin();
                }
                (u, v)
            })
            .collect()
    }
}

/// Shared precomputation for steady solves on one flow.
pub struct SteadyProblem<'a> {
    pub flow: &'a PerturbedFlow,
    pub map: &'a VorticityMap,
    pub kernel: &'a KernelMode,
    pub grid: &'a ChebGrid,
    pub opts: SteadyOptions,
    psi0: Vec<f64>,
    g0: Vec<f64>,
    cos: Vec<Vec<f64>>,
}

impl<'a> SteadyProblem<'a> {
    pub fn new(
        flow: &'a PerturbedFlow,
        map: &'a VorticityMap,
        kernel: &'a KernelMode,
        grid: &'a ChebGrid,
        opts: SteadyOptions,
    ) -> Result<Self> {
        if map.c1_mismatch() > C1_TOL {
            return Err(Error::Hypothesis(format!(
                "vorticity map fails the C¹ diagnostic: G′ mismatch {:e} at the y = 0 image ({:?})",
                map.c1_mismatch(),
                map.diagnostics
            )));
        }
        if kernel.y.len() != grid.len() {
            return Err(Error::domain("kernel mode and grid sizes differ"));
        }
        let psi0: Vec<f64> = grid.y.iter().map(|&y| psi0(flow, y)).collect();
        let g0 = psi0.iter().map(|&s| map.eval(s).0).collect();
        let mz = opts.zeta_points;
        let cos = (0..=opts.modes)
            .map(|j| (0..mz).map(|l| (j as f64 * std::f64::consts::PI * (l as f64 + 0.5) / mz as f64).cos()).collect())
            .collect();
        Ok(Self { flow, map, kernel, grid, opts, psi0, g0, cos })
    }

    fn size(&self) -> usize {
        (self.opts.modes + 1) * (self.grid.len() - 2) + 1
    }

    /// Residual and, if requested, the dense Jacobian.
    fn residual(&self, x: &[f64], eps: f64, jac: Option<&mut Mat<f64>>) -> Vec<f64> {
        let n = self.grid.len();
        let m = n - 2;
        let nj = self.opts.modes + 1;
        let mz = self.opts.zeta_points;
        let k_sq = x[nj * m];
        let a = |j: usize, i: usize| -> f64 {
            if i == 0 || i == n - 1 {
                0.0
            } else {
                x[j * m + i - 1]
            }
        };
        let mut res = vec![0.0; nj * m + 1];
        // nonlinear term and its ζ-projections at each interior node
        let mut proj = vec![vec![0.0; nj]; m];
        let mut gprime = vec![vec![0.0; mz]; m];
        for i in 1..n - 1 {
            for l in 0..mz {
                let psi_per: f64 = (0..nj).map(|j| a(j, i) * self.cos[j][l]).sum();
                let (g, gp) = self.map.eval(self.psi0[i] + psi_per);
                let d = g - self.g0[i];
                for j in 0..nj {
                    proj[i - 1][j] += d * self.cos[j][l];
                }
                gprime[i - 1][l] = gp;
            }
            for j in 0..nj {
                proj[i - 1][j] *= if j == 0 { 1.0 } else { 2.0 } / mz as f64;
            }
        }
        for j in 0..nj {
            let jk = (j * j) as f64 * k_sq;
            for i in 1..n - 1 {
                let lap: f64 = (1..n - 1).map(|p| self.grid.d2[i][p] * a(j, p)).sum();
                res[j * m + i - 1] = lap - jk * a(j, i) - proj[i - 1][j];
            }
        }
        let w = &self.grid.weights;
        let phi = &self.kernel.phi0;
        let amp: f64 = (1..n - 1).map(|i| w[i] * a(1, i) * phi[i]).sum();
        let norm: f64 = (0..n).map(|i| w[i] * phi[i] * phi[i]).sum();
        res[nj * m] = amp - eps * norm;
        if let Some(jm) = jac {
            let size = nj * m + 1;
            jm.fill(0.0);
            for j in 0..nj {
                let jk = (j * j) as f64 * k_sq;
                for i in 0..m {
                    let row = j * m + i;
                    for p in 0..m {
                        jm[(row, j * m + p)] = self.grid.d2[i + 1][p + 1];
                    }
                    jm[(row, j * m + i)] -= jk;
                    jm[(row, size - 1)] = -((j * j) as f64) * a(j, i + 1);
                    for jj in 0..nj {
                        let c: f64 = (0..mz).map(|l| gprime[i][l] * self.cos[jj][l] * self.cos[j][l]).sum::<f64>()
                            * if j == 0 { 1.0 } else { 2.0 }
                            / mz as f64;
                        jm[(row, jj * m + i)] -= c;
                    }
                }
            }
            for i in 0..m {
                jm[(size - 1, m + i)] = w[i + 1] * phi[i + 1];
            }
        }
        res
    }

    fn trivial(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.size()];
        let last = x.len() - 1;
        x[last] = -self.kernel.lambda_collocation;
        x
    }

    fn newton(&self, mut x: Vec<f64>, eps: f64) -> Result<(Vec<f64>, f64, usize)> {
        let size = self.size();
        let mut jac = Mat::<f64>::zeros(size, size);
        let mut it = 0;
        let mut best = f64::INFINITY;
        loop {
            let r = self.residual(&x, eps, Some(&mut jac));
            let rn = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if rn <= self.opts.tol && x[size - 1] > 0.0 {
                return Ok((x, rn, it));
            }
            best = best.min(rn);
            let diverging = it >= 3 && rn > 1e3 * best;
            if it >= self.opts.max_iter || !rn.is_finite() || diverging {
                return Err(Error::NonConvergence(format!(
                    "steady Newton at ε = {eps}: residual {rn:e} after {it} iterations (k² = {})",
                    x[size - 1]
                )));
            }
            if rn <= self.opts.tol {
                return Err(Error::NonConvergence(format!(
                    "steady branch at ε = {eps} has k² = {} ≤ 0: no periodic state",
                    x[size - 1]
                )));
            }
            let dx = dense_lu_solve(&jac, &r);
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi -= d;
            }
            it += 1;
        }
    }

    fn solve_vec(&self, eps: f64, depth: usize) -> Result<(Vec<f64>, f64, usize)> {
        let m = self.grid.len() - 2;
        let mut x = self.trivial();
        for i in 0..m {
            x[m + i] = eps * self.kernel.phi0[i + 1];
        }
        match self.newton(x, eps) {
            Ok(v) => Ok(v),
            Err(e) if depth >= 8 => Err(e),
            Err(_) => {
                // continue from ε/2 with a secant predictor through the trivial state
                let (half, _, it_half) = self.solve_vec(0.5 * eps, depth + 1)?;
                let x0 = self.trivial();
                let guess: Vec<f64> = half.iter().zip(&x0).map(|(h, z)| z + 2.0 * (h - z)).collect();
                let (x, rn, it) = self.newton(guess, eps)?;
                Ok((x, rn, it + it_half))
            }
        }
    }

    /// Newton on (ψ_per, k²) with the amplitude constraint, from εφ₀cos ζ and
    /// k² = k₀²; amplitudes too far from the trivial branch are reached by halving.
    pub fn solve(&self, eps: f64) -> Result<SteadyState> {
        if eps == 0.0 {
            return Ok(self.finish(&self.trivial(), 0.0, 0.0, 0));
        }
        let (x, rn, it) = self.solve_vec(eps, 0)?;
        Ok(self.finish(&x, eps, rn, it))
    }

    /// Newton from a converged state at another amplitude, rescaled to ε.
    pub fn solve_warm(&self, eps: f64, warm: &SteadyState) -> Result<SteadyState> {
        if warm.eps == 0.0 {
            return self.solve(eps);
        }
        let m = self.grid.len() - 2;
        let r = eps / warm.eps;
        let x0 = self.trivial();
        let mut x = Vec::with_capacity(self.size());
        for a in &warm.modes {
            x.extend(a[1..m + 1].iter().map(|v| r * v));
        }
        let k0 = x0[x0.len() - 1];
        x.push(k0 + r * (warm.k_sq - k0));
        let (x, rn, it) = self.newton(x, eps)?;
        Ok(self.finish(&x, eps, rn, it))
    }

    fn finish(&self, x: &[f64], eps: f64, residual: f64, iterations: usize) -> SteadyState {
        let n = self.grid.len();
        let m = n - 2;
        let nj = self.opts.modes + 1;
        let modes: Vec<Vec<f64>> = (0..nj)
            .map(|j| {
                let mut a = vec![0.0; n];
                a[1..n - 1].copy_from_slice(&x[j * m..(j + 1) * m]);
                a
            })
            .collect();
        let k_sq = x[nj * m];
        let g = self.grid;
        let pi = std::f64::consts::PI;
        let l2 = |f: &[f64]| g.integrate(&f.iter().map(|v| v * v).collect::<Vec<_>>());
        let mode_weight = |j: usize| if j == 0 { 2.0 * pi } else { pi };
        let energies: Vec<f64> = modes.iter().enumerate().map(|(j, a)| mode_weight(j) * l2(a)).collect();
        let total: f64 = energies.iter().sum();
        let j1_fraction = if total > 0.0 { energies[1] / total } else { 0.0 };
        let linear_deviation = if eps == 0.0 {
            0.0
        } else {
            let dev: f64 = modes
                .iter()
                .enumerate()
                .map(|(j, a)| {
                    let d: Vec<f64> =
                        a.iter().zip(&self.kernel.phi0).map(|(v, p)| v - if j == 1 { eps * p } else { 0.0 }).collect();
                    mode_weight(j) * l2(&d)
                })
                .sum();
            let base = pi * eps * eps * l2(&self.kernel.phi0);
            (dev / base).sqrt()
        };
        let k = k_sq.sqrt();
        let hs_index = 2.5 - self.opts.tau + self.flow.base.smoothness_order as f64;
        let h2_deviation = deviation_norm(g, &modes, k, 2.0);
        let hs_deviation = deviation_norm(g, &modes, k, hs_index);
        let (substitution_defect, interior_defect) = substitution_defect(self.flow, g, &modes, k, 2 * self.opts.zeta_points);
        SteadyState {
            eps,
            k_sq,
            y: g.y.clone(),
            modes,
            newton_residual: residual,
            iterations,
            linear_deviation,
            h2_deviation,
            hs_deviation,
            hs_index,
            j1_fraction,
            substitution_defect,
            interior_defect,
        }
    }
}

/// H^s norm of (∂_yψ_per, −∂_xψ_per) over one x-period 2π/k.
pub fn deviation_norm(grid: &ChebGrid, modes: &[Vec<f64>], k: f64, s: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let l2 = |f: &[f64]| grid.integrate(&f.iter().map(|v| v * v).collect::<Vec<_>>());
    let mut total = 0.0;
    for (j, a) in modes.iter().enumerate() {
        let w = if j == 0 { 2.0 * pi / k } else { pi / k };
        let kj = k * j as f64;
        let da = grid.diff(a);
        if s.fract() == 0.0 {
            let order = s as usize;
            // y-derivatives of u′ = a′ and v′ = kj·a
            let mut du = vec![da.clone()];
            let mut dv = vec![a.iter().map(|v| kj * v).collect::<Vec<_>>()];
            for q in 1..=order {
                du.push(grid.diff(&du[q - 1]));
                dv.push(grid.diff(&dv[q - 1]));
            }
            for p in 0..=order {
                for q in 0..=order - p {
                    let fx = kj.powi(p as i32);
                    if p > 0 && j == 0 {
                        continue;
                    }
                    total += w * fx * fx * (l2(&du[q]) + if j == 0 { 0.0 } else { l2(&dv[q]) });
                }
            }
        } else {
            let f = |v: &[f64]| -> f64 {
                let xs = &grid.y;
                let vv = v.to_vec();
                let norm = fourier_extension_norm(&|t: f64| if t.abs() <= 1.0 { barycentric(xs, &vv, t) } else { 0.0 }, s);
                norm * norm
            };
            let mut hs = f(&da) + (1.0 + kj * kj).powf(s) * l2(&da);
            if j > 0 {
                let v: Vec<f64> = a.iter().map(|v| kj * v).collect();
                hs += f(&v) + (1.0 + kj * kj).powf(s) * l2(&v);
            }
            total += w * hs;
        }
    }
    total.sqrt()
}

/// Relative u·∇ω defect of ψ = ψ₀ + ψ_per from derivatives only: (full grid, interior).
pub fn substitution_defect(flow: &PerturbedFlow, grid: &ChebGrid, modes: &[Vec<f64>], k: f64, nz: usize) -> (f64, f64) {
    let n = grid.len();
    let da: Vec<Vec<f64>> = modes.iter().map(|a| grid.diff(a)).collect();
    let b: Vec<Vec<f64>> = modes
        .iter()
        .enumerate()
        .map(|(j, a)| {
            let d2 = matvec(&grid.d2, a);
            d2.iter().zip(a).map(|(x, y)| x - (k * j as f64).powi(2) * y).collect()
        })
        .collect();
    let db: Vec<Vec<f64>> = b.iter().map(|v| grid.diff(v)).collect();
    let mut worst: f64 = 0.0;
    let mut worst_inner: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for l in 0..nz {
        let z = 2.0 * std::f64::consts::PI * l as f64 / nz as f64;
        for i in 0..n {
            let y = grid.y[i];
            let mut u = flow.u(y);
            let mut v = 0.0;
            let mut wx = 0.0;
            let mut wy = flow.eval_raw(y, 2);
            for j in 0..modes.len() {
                let jf = j as f64;
                let (c, s) = ((jf * z).cos(), (jf * z).sin());
                u += da[j][i] * c;
                v += k * jf * modes[j][i] * s;
                wx -= k * jf * b[j][i] * s;
                wy += db[j][i] * c;
            }
            let d = (u * wx + v * wy).abs();
            worst = worst.max(d);
            if i > 0 && i + 1 < n {
                worst_inner = worst_inner.max(d);
            }
            scale = scale.max((u * wx).abs() + (v * wy).abs());
        }
    }
    if scale == 0.0 {
        (0.0, 0.0)
    } else {
        (worst / scale, worst_inner / scale)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchSweep {
    pub kernel: KernelMode,
    pub states: Vec<SteadyState>,
    /// max |k²(ε) − k²(0)|/ε over nonzero ε.
    pub k_sq_slope: f64,
    /// (max − min)/min of ‖deviation‖_{H²}/ε.
    pub h2_spread: f64,
    pub hs_spread: f64,
}

/// Steady solves for every ε, in parallel.
pub fn branch_sweep(flow: &PerturbedFlow, map: &VorticityMap, grid: &ChebGrid, eps: &[f64], opts: SteadyOptions) -> Result<BranchSweep> {
    let kernel = kernel_mode(flow, grid)?;
    let problem = SteadyProblem::new(flow, map, &kernel, grid, opts)?;
    let states: Result<Vec<SteadyState>> = eps.par_iter().map(|&e| problem.solve(e)).collect();
    let states = states?;
    let k_lim = -kernel.lambda_collocation;
    let nz: Vec<&SteadyState> = states.iter().filter(|s| s.eps != 0.0).collect();
    let spread = |f: &dyn Fn(&SteadyState) -> f64| -> f64 {
        let r: Vec<f64> = nz.iter().map(|s| f(s) / s.eps.abs()).collect();
        let (lo, hi) = r.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        if r.is_empty() {
            0.0
        } else {
            (hi - lo) / lo
        }
    };
    let k_sq_slope = nz.iter().map(|s| (s.k_sq - k_lim).abs() / s.eps.abs()).fold(0.0, f64::max);
    let h2_spread = spread(&|s| s.h2_deviation);
    let hs_spread = spread(&|s| s.hs_deviation);
    drop(problem);
    Ok(BranchSweep { kernel, states, k_sq_slope, h2_spread, hs_spread })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebyshev_differentiates_polynomials() {
        let g = ChebGrid::new(16);
        let f: Vec<f64> = g.y.iter().map(|y| y.powi(5)).collect();
        let d = g.diff(&f);
        for (y, v) in g.y.iter().zip(&d) {
            assert!((v - 5.0 * y.powi(4)).abs() < 1e-11);
        }
        let w: f64 = g.integrate(&g.y.iter().map(|y| y * y).collect::<Vec<_>>());
        assert!((w - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn fornberg_first_derivative() {
        let w = fd_weights(0.0, &[0.0, 1.0, 2.0], 1);
        assert!((w[0] + 1.5).abs() < 1e-14 && (w[1] - 2.0).abs() < 1e-14 && (w[2] + 0.5).abs() < 1e-14);
    }

    #[test]
    fn quintic_taper_ends() {
        assert_eq!(taper(0.0), (1.0, 0.0));
        assert_eq!(taper(1.0), (0.0, 0.0));
        let (v, d) = taper(0.5);
        assert!((v - 0.5).abs() < 1e-15 && (d + 1.875).abs() < 1e-15);
    }
}
