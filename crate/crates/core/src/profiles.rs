//! Base shear profiles U, perturbation profiles Γ, and the perturbed family
//! U_{m,γ}(y) = U(y) + mγ²Γ̃(y/γ).

use std::f64::consts::{FRAC_PI_2, PI};

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::integrate_adaptive;

/// Below this |y| the removable-singularity quotients switch to Taylor data.
pub const Y_SWITCH: f64 = 1e-3;
/// Sample count of the admissibility grids.
pub const VALIDATION_GRID: usize = 10_000;
/// Largest γ for which the ∂_m Q < 0 precondition is asserted.
pub const GAMMA_MAX: f64 = 0.2;

const TAB_DEGREE: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseKind {
    Couette,
    Cubic,
    Sine { b: f64 },
    Polynomial { coeffs: Vec<f64> },
    /// Chebyshev series on [-1, 1] resampled from a cubic spline through tabulated data.
    Tabulated { cheb: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaseProfile {
    pub name: String,
    pub kind: BaseKind,
    /// Declared monotonicity floor c₀.
    pub c0: f64,
    /// Declared bound C in −C ≤ U″/U ≤ 0.
    pub ratio_bound: f64,
    /// Smoothness order N (vanishing even derivatives at 0).
    pub smoothness_order: u32,
    /// Derivatives U^{(k)}(0), k = 0..7.
    #[serde(skip)]
    taylor0: [f64; 8],
}

impl BaseProfile {
    fn build(name: &str, kind: BaseKind, c0: f64, ratio_bound: f64, smoothness_order: u32) -> Self {
        let mut p = Self { name: name.into(), kind, c0, ratio_bound, smoothness_order, taylor0: [0.0; 8] };
        for k in 0..8 {
            p.taylor0[k] = p.derivative(0.0, k);
        }
        p
    }

    pub fn couette() -> Self {
        Self::build("couette", BaseKind::Couette, 1.0, 0.0, 0)
    }

    /// U = y − y³/6.
    pub fn cubic() -> Self {
        Self::build("cubic", BaseKind::Cubic, 0.5, 1.2, 0)
    }

    /// U = sin(by)/b with b ∈ (0, π/2).
    pub fn sine(b: f64) -> Result<Self> {
        if !(b > 0.0 && b < FRAC_PI_2) {
            return Err(Error::domain(format!("sine parameter b = {b} outside (0, π/2)")));
        }
        Ok(Self::build("sine", BaseKind::Sine { b }, 0.99 * b.cos(), b * b, 0))
    }

    /// U = Σ a_k y^k. The declared floor defaults to a tiny positive value.
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        Self::build("poly", BaseKind::Polynomial { coeffs }, 1e-6, 1e6, 0)
    }

    /// Tabulated profile from (y, U) samples covering [-1, 1].
    pub fn tabulated(ys: &[f64], us: &[f64]) -> Result<Self> {
        if ys.len() != us.len() || ys.len() < 4 {
            return Err(Error::domain("tabulated profile needs at least 4 (y, U) pairs"));
        }
        if ys.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("tabulated y values must be strictly increasing"));
        }
        if ys[0] > -1.0 + 1e-12 || *ys.last().unwrap() < 1.0 - 1e-12 {
            return Err(Error::domain("tabulated y values must cover [-1, 1]"));
        }
        let spline = CubicSpline::natural(ys, us);
        let n = TAB_DEGREE;
        let vals: Vec<f64> = (0..=n).map(|j| spline.eval((PI * j as f64 / n as f64).cos())).collect();
        let mut cheb = vec![0.0; n + 1];
        for (k, ck) in cheb.iter_mut().enumerate() {
            let mut s = 0.0;
            for (j, v) in vals.iter().enumerate() {
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                s += w * v * (PI * (j * k) as f64 / n as f64).cos();
            }
            *ck = s * 2.0 / n as f64 * if k == 0 || k == n { 0.5 } else { 1.0 };
        }
        Ok(Self::build("tabulated", BaseKind::Tabulated { cheb }, 1e-6, 1e6, 0))
    }

    pub fn with_bounds(mut self, c0: f64, ratio_bound: f64) -> Self {
        self.c0 = c0;
        self.ratio_bound = ratio_bound;
        self
    }

    pub fn with_smoothness(mut self, n: u32) -> Self {
        self.smoothness_order = n;
        self
    }

    /// k-th derivative of U at y (any k for closed forms; tabulated via Chebyshev recurrence).
    pub fn derivative(&self, y: f64, k: usize) -> f64 {
        match &self.kind {
            BaseKind::Couette => match k {
                0 => y,
                1 => 1.0,
                _ => 0.0,
            },
            BaseKind::Cubic => match k {
                0 => y - y * y * y / 6.0,
                1 => 1.0 - 0.5 * y * y,
                2 => -y,
                3 => -1.0,
                _ => 0.0,
            },
            BaseKind::Sine { b } => b.powi(k as i32 - 1) * (b * y + k as f64 * FRAC_PI_2).sin(),
            BaseKind::Polynomial { coeffs } => {
                // Horner on the k-th derivative's coefficients
                let mut s = 0.0;
                for (p, a) in coeffs.iter().enumerate().skip(k).rev() {
                    let f: f64 = (0..k).map(|q| (p - q) as f64).product();
                    s = s * y + a * f;
                }
                s
            }
            BaseKind::Tabulated { cheb } => {
                let mut c = cheb.clone();
                for _ in 0..k {
                    c = chebyshev_derivative(&c);
                }
                clenshaw(&c, y)
            }
        }
    }

    pub fn u(&self, y: f64) -> f64 {
        self.derivative(y, 0)
    }

    /// U(y)/y with the Taylor branch near 0.
    pub fn u_over_y(&self, y: f64) -> f64 {
        if y.abs() >= Y_SWITCH {
            return self.u(y) / y;
        }
        let t = &self.taylor0;
        t[1] + y * (t[2] / 2.0 + y * (t[3] / 6.0 + y * (t[4] / 24.0 + y * t[5] / 120.0)))
    }

    /// U″(y)/y with the Taylor branch near 0 (assumes U″(0) = 0).
    pub fn upp_over_y(&self, y: f64) -> f64 {
        if y.abs() >= Y_SWITCH {
            return self.derivative(y, 2) / y;
        }
        let t = &self.taylor0;
        t[3] + y * (t[4] / 2.0 + y * (t[5] / 6.0 + y * (t[6] / 24.0 + y * t[7] / 120.0)))
    }

    pub fn taylor_at_zero(&self) -> [f64; 8] {
        self.taylor0
    }
}

fn chebyshev_derivative(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    if n <= 1 {
        return vec![0.0];
    }
    let mut d = vec![0.0; n];
    for k in (0..n - 1).rev() {
        d[k] = if k + 2 < n { d[k + 2] } else { 0.0 } + 2.0 * (k + 1) as f64 * c[k + 1];
    }
    d[0] *= 0.5;
    d.truncate(n - 1);
    d
}

fn clenshaw(c: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    x * b1 - b2 + c[0]
}

/// Natural cubic spline used to resample tabulated profiles.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(x: &[f64], y: &[f64]) -> Self {
        let n = x.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            let k = n - 2;
            let mut sub = vec![0.0; k.saturating_sub(1)];
            let mut sup = vec![0.0; k.saturating_sub(1)];
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 1..n - 1 {
                let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
                diag[i - 1] = (h0 + h1) / 3.0;
                rhs[i - 1] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
                if i >= 2 {
                    sub[i - 2] = h0 / 6.0;
                }
                if i < n - 2 {
                    sup[i - 1] = h1 / 6.0;
                }
            }
            let inner = crate::tridiag::solve(&sub, &diag, &sup, &rhs);
            m[1..n - 1].copy_from_slice(&inner);
        }
        Self { x: x.to_vec(), y: y.to_vec(), m }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        let h = self.x[i + 1] - self.x[i];
        let (a, b) = ((self.x[i + 1] - t) / h, (t - self.x[i]) / h);
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PertKind {
    /// Γ = c·e^{−x²}
    Gaussian,
    /// Γ = c·sech²(x)
    Sech2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationProfile {
    pub name: String,
    pub kind: PertKind,
    /// Amplitude c multiplying the shape.
    pub scale: f64,
    /// ∫_ℝ σ(x) dx at the current scale.
    pub sigma_integral: f64,
}

impl PerturbationProfile {
    pub fn raw(kind: PertKind, scale: f64) -> Self {
        let name = match kind {
            PertKind::Gaussian => "gaussian",
            PertKind::Sech2 => "sech2",
        };
        let mut p = Self { name: name.into(), kind, scale, sigma_integral: 0.0 };
        p.sigma_integral = integrate_adaptive(&|x| p.sigma(x), -40.0, 40.0, 1e-14);
        p
    }

    /// Rescaled copy with ∫σ = −1.
    pub fn normalized(&self) -> Self {
        let scale = self.scale * (-1.0 / self.sigma_integral);
        Self::raw(self.kind, scale)
    }

    /// Normalized Gaussian, scale = 1/(2√π).
    pub fn gaussian() -> Self {
        Self::raw(PertKind::Gaussian, 1.0).normalized()
    }

    pub fn sech2() -> Self {
        Self::raw(PertKind::Sech2, 1.0).normalized()
    }

    /// Γ^{(k)}(x), k = 0..2.
    pub fn gamma(&self, x: f64, k: usize) -> f64 {
        let c = self.scale;
        match self.kind {
            PertKind::Gaussian => {
                let e = (-x * x).exp();
                match k {
                    0 => c * e,
                    1 => -2.0 * c * x * e,
                    _ => c * (4.0 * x * x - 2.0) * e,
                }
            }
            PertKind::Sech2 => {
                let s = sech2(x);
                let t = x.tanh();
                match k {
                    0 => c * s,
                    1 => -2.0 * c * s * t,
                    _ => c * (4.0 * s * t * t - 2.0 * s * s),
                }
            }
        }
    }

    /// Γ̃(x) = ∫₀ˣ Γ.
    pub fn antiderivative(&self, x: f64) -> f64 {
        match self.kind {
            PertKind::Gaussian => self.scale * PI.sqrt() / 2.0 * libm::erf(x),
            PertKind::Sech2 => self.scale * x.tanh(),
        }
    }

    /// Γ̃(x)/x with its series near 0.
    pub fn antiderivative_over_x(&self, x: f64) -> f64 {
        if x.abs() >= Y_SWITCH {
            return self.antiderivative(x) / x;
        }
        let x2 = x * x;
        match self.kind {
            PertKind::Gaussian => self.scale * (1.0 - x2 / 3.0 + x2 * x2 / 10.0),
            PertKind::Sech2 => self.scale * tanh_over_x(x),
        }
    }

    /// σ(x) = Γ′(x)/x.
    pub fn sigma(&self, x: f64) -> f64 {
        match self.kind {
            PertKind::Gaussian => -2.0 * self.scale * (-x * x).exp(),
            PertKind::Sech2 => -2.0 * self.scale * sech2(x) * tanh_over_x(x),
        }
    }

    /// ∫₀ˣ Γ̃(t) dt (used by exact Sobolev oracles).
    pub fn second_antiderivative(&self, x: f64) -> f64 {
        match self.kind {
            PertKind::Gaussian => {
                self.scale * PI.sqrt() / 2.0 * (x * libm::erf(x) + ((-x * x).exp() - 1.0) / PI.sqrt())
            }
            PertKind::Sech2 => self.scale * x.cosh().ln(),
        }
    }
}

fn sech2(x: f64) -> f64 {
    let c = x.cosh();
    1.0 / (c * c)
}

fn tanh_over_x(x: f64) -> f64 {
    if x.abs() < Y_SWITCH {
        let x2 = x * x;
        1.0 - x2 / 3.0 + 2.0 * x2 * x2 / 15.0
    } else {
        x.tanh() / x
    }
}

/// One hypothesis check with its measured extreme value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: &str, passed: bool, measured: f64, bound: f64) {
        self.checks.push(Check { name: name.into(), passed, measured, bound });
    }
}

fn grid(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| -1.0 + 2.0 * i as f64 / (n - 1) as f64)
}

/// Check every hypothesis on (U, Γ, m, γ); never fails, the report carries failures.
pub fn validate(base: &BaseProfile, pert: &PerturbationProfile, m: f64, gamma: f64) -> ValidationReport {
    let mut r = ValidationReport::default();
    r.push("parameters", m >= 0.0 && gamma > 0.0 && m.is_finite() && gamma.is_finite(), m.min(gamma), 0.0);

    let origin = base.u(0.0).abs().max(base.derivative(0.0, 2).abs());
    r.push("origin", origin <= 1e-12, origin, 1e-12);

    let min_du = grid(VALIDATION_GRID).map(|y| base.derivative(y, 1)).fold(f64::INFINITY, f64::min);
    r.push("monotonicity_floor", min_du >= base.c0 && min_du > 0.0, min_du, base.c0);

    let ratio_ok = origin <= 1e-12 && min_du > 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for y in grid(VALIDATION_GRID) {
        let q = if ratio_ok { base.upp_over_y(y) / base.u_over_y(y) } else { base.derivative(y, 2) / base.u(y) };
        let q = if q.is_finite() { q } else { f64::INFINITY };
        lo = lo.min(q);
        hi = hi.max(q);
    }
    let ratio_pass = ratio_ok && hi <= 1e-12 && lo >= -base.ratio_bound - 1e-12;
    r.push("potential_upper", ratio_pass || hi <= 1e-12, hi, 0.0);
    r.push("potential_lower", ratio_pass || lo >= -base.ratio_bound, lo, -base.ratio_bound);

    if base.smoothness_order > 0 {
        let mut worst: f64 = 0.0;
        for n in 1..=(base.smoothness_order as usize + 1) {
            let k = 2 * n;
            let d = if k < 8 { base.taylor0[k] } else { base.derivative(0.0, k) };
            worst = worst.max(d.abs());
        }
        r.push("even_derivatives", worst <= 1e-10, worst, 1e-10);
    }

    let xs: Vec<f64> = (0..4001).map(|i| -10.0 + 20.0 * i as f64 / 4000.0).collect();
    let sig_max = xs.iter().map(|&x| pert.sigma(x)).filter(|s| s.abs() > 1e-300).fold(f64::NEG_INFINITY, f64::max);
    r.push("sigma_negative", sig_max < 0.0, sig_max, 0.0);
    r.push(
        "sigma_integral",
        (pert.sigma_integral + 1.0).abs() <= 1e-8,
        pert.sigma_integral,
        -1.0,
    );
    let gt_max = xs.iter().map(|&x| pert.antiderivative_over_x(x).abs()).fold(0.0, f64::max);
    r.push("antiderivative_ratio_bounded", gt_max.is_finite(), gt_max, f64::INFINITY);

    if gamma > 0.0 {
        let flow = PerturbedFlow::unchecked(base.clone(), pert.clone(), m, gamma);
        let min_dup = grid(VALIDATION_GRID).map(|y| flow.eval_raw(y, 1)).fold(f64::INFINITY, f64::min);
        r.push("perturbed_monotone", min_dup > 0.0, min_dup, 0.0);
    }
    r
}

/// The perturbed shear U_{m,γ} with its first three derivatives.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbedFlow {
    pub base: BaseProfile,
    pub pert: PerturbationProfile,
    pub m: f64,
    pub gamma: f64,
}

impl PerturbedFlow {
    /// Validated construction; an all-pass report is required.
    pub fn new(base: BaseProfile, pert: PerturbationProfile, m: f64, gamma: f64) -> Result<Self> {
        let report = validate(&base, &pert, m, gamma);
        if !report.all_pass() {
            let names: Vec<String> =
                report.failures().iter().map(|c| format!("{} (measured {:.6e})", c.name, c.measured)).collect();
            return Err(Error::Hypothesis(names.join(", ")));
        }
        Ok(Self { base, pert, m, gamma })
    }

    /// Construction without hypothesis checks (for finite-difference probes near a validated flow).
    pub fn unchecked(base: BaseProfile, pert: PerturbationProfile, m: f64, gamma: f64) -> Self {
        Self { base, pert, m, gamma }
    }

    pub fn with_m(&self, m: f64) -> Self {
        Self { m, ..self.clone() }
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self { gamma, ..self.clone() }
    }

    /// Order-th derivative of U_{m,γ}, checked.
    pub fn eval(&self, y: f64, order: usize) -> Result<f64> {
        if y.abs() > 1.0 + 1e-12 || !y.is_finite() {
            return Err(Error::domain(format!("y = {y} outside [-1, 1]")));
        }
        if order > 3 {
            return Err(Error::domain(format!("derivative order {order} > 3")));
        }
        Ok(self.eval_raw(y, order))
    }

    #[inline]
    pub fn eval_raw(&self, y: f64, order: usize) -> f64 {
        let (m, g) = (self.m, self.gamma);
        let x = y / g;
        let b = self.base.derivative(y, order);
        if m == 0.0 {
            return b;
        }
        match order {
            0 => b + m * g * g * self.pert.antiderivative(x),
            1 => b + m * g * self.pert.gamma(x, 0),
            2 => b + m * self.pert.gamma(x, 1),
            _ => b + m / g * self.pert.gamma(x, 2),
        }
    }

    #[inline]
    pub fn u(&self, y: f64) -> f64 {
        self.eval_raw(y, 0)
    }

    /// U_{m,γ}(y)/y (finite at 0).
    pub fn u_over_y(&self, y: f64) -> f64 {
        if y.abs() >= Y_SWITCH {
            return self.u(y) / y;
        }
        self.base.u_over_y(y) + self.m * self.gamma * self.pert.antiderivative_over_x(y / self.gamma)
    }

    /// U″_{m,γ}(y)/y (finite at 0).
    pub fn upp_over_y(&self, y: f64) -> f64 {
        if y.abs() >= Y_SWITCH {
            return self.eval_raw(y, 2) / y;
        }
        self.base.upp_over_y(y) + self.m / self.gamma * self.pert.sigma(y / self.gamma)
    }

    /// Q_{m,γ} = U″/U with the removable singularity at 0 resolved.
    pub fn potential(&self, y: f64) -> f64 {
        if y.abs() < Y_SWITCH {
            self.upp_over_y(y) / self.u_over_y(y)
        } else {
            self.eval_raw(y, 2) / self.u(y)
        }
    }

    /// Checked potential evaluation.
    pub fn eval_potential(&self, y: f64) -> Result<f64> {
        if y.abs() > 1.0 + 1e-12 {
            return Err(Error::domain(format!("y = {y} outside [-1, 1]")));
        }
        let q = self.potential(y);
        if !q.is_finite() {
            return Err(Error::Hypothesis(format!("U_(m,γ) vanishes away from 0 near y = {y}")));
        }
        Ok(q)
    }

    /// Critical layer: the unique y with U_{m,γ}(y) = c, if c ∈ Ran U_{m,γ}.
    pub fn critical_layer(&self, c: f64) -> Option<f64> {
        let (lo_v, hi_v) = (self.u(-1.0), self.u(1.0));
        if c < lo_v || c > hi_v {
            return None;
        }
        if c == 0.0 {
            return Some(0.0);
        }
        let (mut a, mut b) = (-1.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if self.u(mid) < c {
                a = mid;
            } else {
                b = mid;
            }
            if b - a < 1e-16 {
                break;
            }
        }
        // Newton polish
        let mut y = 0.5 * (a + b);
        for _ in 0..3 {
            let d = self.eval_raw(y, 1);
            let step = (self.u(y) - c) / d;
            if (y - step).abs() <= 1.0 {
                y -= step;
            }
        }
        Some(y)
    }

    /// Howard-region center and radius per the printed set definition.
    pub fn howard_region(&self) -> (f64, f64) {
        let (a, b) = (self.u(-1.0), self.u(1.0));
        (0.5 * (a + b), (b - a) / 2f64.sqrt())
    }
}

/// H^s(−1,1) norm of U_{m_a,γ} − U_{m_b,γ}.
///
/// Integer s ≤ 2 uses direct quadrature of the derivatives on (−1, 1); other s
/// use a Fourier extension with a smooth cutoff.
pub fn sobolev_distance(a: &PerturbedFlow, b: &PerturbedFlow, s: f64) -> Result<f64> {
    if a.base != b.base || a.pert != b.pert || a.gamma != b.gamma {
        return Err(Error::domain("flows must share base, perturbation and γ"));
    }
    if s < 0.0 {
        return Err(Error::domain("s must be nonnegative"));
    }
    let dm = a.m - b.m;
    if dm == 0.0 {
        return Ok(0.0);
    }
    let g = a.gamma;
    let pert = &a.pert;
    let diff = |y: f64, k: usize| -> f64 {
        let x = y / g;
        match k {
            0 => dm * g * g * pert.antiderivative(x),
            1 => dm * g * pert.gamma(x, 0),
            2 => dm * pert.gamma(x, 1),
            _ => dm / g * pert.gamma(x, 2),
        }
    };
    if s.fract() == 0.0 && s <= 3.0 {
        let mut total = 0.0;
        for k in 0..=(s as usize) {
            let f = |y: f64| diff(y, k).powi(2);
            total += integrate_adaptive(&f, -1.0, 0.0, 1e-16) + integrate_adaptive(&f, 0.0, 1.0, 1e-16);
        }
        return Ok(total.sqrt());
    }
    Ok(fourier_extension_norm(&|y| diff(y, 0), s))
}

fn smooth_step(t: f64) -> f64 {
    let bump = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let (p, q) = (bump(t), bump(1.0 - t));
    p / (p + q)
}

/// H^s(ℝ) norm of χ·f on a periodic box, χ = 1 on [−1,1] tapering to 0 on [1,2].
pub fn fourier_extension_norm(f: &dyn Fn(f64) -> f64, s: f64) -> f64 {
    let (half, n) = (4.0, 1usize << 15);
    let mut buf: Vec<Complex<f64>> = (0..n)
        .map(|j| {
            let y = -half + 2.0 * half * j as f64 / n as f64;
            let chi = 1.0 - smooth_step(y.abs() - 1.0);
            Complex::new(chi * f(y), 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mut total = 0.0;
    for (k, v) in buf.iter().enumerate() {
        let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        let xi = PI * kk / half;
        total += (1.0 + xi * xi).powf(s) * (v.norm() / n as f64).powi(2);
    }
    (2.0 * half * total).sqrt()
}
