//! Gauss–Legendre panels, graded meshes and spectral cumulative integration.

use std::ops::{Add, Mul, Sub};
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

/// Default number of Gauss–Legendre nodes per panel.
pub const PANEL_ORDER: usize = 16;

/// Values that can be integrated on a mesh (real or complex).
pub trait Field:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn modulus(self) -> f64;
}

impl Field for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Field for Complex64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Legendre polynomials P_0..P_{n} at x.
fn legendre_all(n: usize, x: f64) -> Vec<f64> {
    let mut p = vec![0.0; n + 1];
    p[0] = 1.0;
    if n >= 1 {
        p[1] = x;
    }
    for k in 1..n {
        p[k + 1] = ((2 * k + 1) as f64 * x * p[k] - k as f64 * p[k - 1]) / (k + 1) as f64;
    }
    p
}

/// Gauss–Legendre nodes (ascending) and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let p = legendre_all(n, z);
            dp = n as f64 * (z * p[n] - p[n - 1]) / (z * z - 1.0);
            let dz = p[n] / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let p = legendre_all(n, z);
        dp = if dp == 0.0 { 1.0 } else { n as f64 * (z * p[n] - p[n - 1]) / (z * z - 1.0) };
        x[n - 1 - i] = z;
        w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// A Gauss–Legendre rule with its spectral integration and differentiation matrices.
#[derive(Debug)]
pub struct GaussRule {
    pub n: usize,
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    /// `cum[i*n + j]`: weight of f(x_j) in the integral from -1 to x_i.
    cum: Vec<f64>,
    /// `coef[k*n + j]`: weight of f(x_j) in the k-th Legendre coefficient.
    coef: Vec<f64>,
    /// `diff[i*n + j]`: weight of f(x_j) in f'(x_i).
    diff: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let mut coef = vec![0.0; n * n];
        let pj: Vec<Vec<f64>> = x.iter().map(|&xj| legendre_all(n, xj)).collect();
        for k in 0..n {
            for j in 0..n {
                coef[k * n + j] = (2 * k + 1) as f64 / 2.0 * w[j] * pj[j][k];
            }
        }
        let mut cum = vec![0.0; n * n];
        let mut diff = vec![0.0; n * n];
        for i in 0..n {
            let p = legendre_all(n + 1, x[i]);
            // integral of P_k from -1 to x
            let mut ip = vec![0.0; n];
            ip[0] = x[i] + 1.0;
            for k in 1..n {
                ip[k] = (p[k + 1] - p[k - 1]) / (2 * k + 1) as f64;
            }
            // derivative of P_k at x via the recurrence P'_{k+1} = P'_{k-1} + (2k+1) P_k
            let mut dp = vec![0.0; n];
            for k in 1..n {
                dp[k] = (2 * k - 1) as f64 * p[k - 1] + if k >= 2 { dp[k - 2] } else { 0.0 };
            }
            for j in 0..n {
                let mut s = 0.0;
                let mut d = 0.0;
                for k in 0..n {
                    s += ip[k] * coef[k * n + j];
                    d += dp[k] * coef[k * n + j];
                }
                cum[i * n + j] = s;
                diff[i * n + j] = d;
            }
        }
        Self { n, x, w, cum, coef, diff }
    }

    /// Shared rule of the default panel order.
    pub fn standard() -> Arc<GaussRule> {
        static RULE: OnceLock<Arc<GaussRule>> = OnceLock::new();
        RULE.get_or_init(|| Arc::new(GaussRule::new(PANEL_ORDER))).clone()
    }

    fn legendre_coefficients<T: Field>(&self, f: &[T]) -> Vec<T> {
        let n = self.n;
        (0..n)
            .map(|k| {
                let mut s = T::default();
                for j in 0..n {
                    s = s + f[j] * self.coef[k * n + j];
                }
                s
            })
            .collect()
    }
}

/// Composite Gauss–Legendre mesh on [a, b] with an anchor breakpoint for
/// cumulative (Volterra-type) integrals.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub breaks: Vec<f64>,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub anchor: usize,
    rule: Arc<GaussRule>,
}

/// Grading parameters for [`Mesh::graded`].
#[derive(Debug, Clone, Copy)]
pub struct Grading {
    pub floor: f64,
    pub ratio: f64,
    pub cap: usize,
    pub max_width: f64,
}

impl Default for Grading {
    fn default() -> Self {
        Self { floor: 1e-2, ratio: 2.0, cap: 64, max_width: 0.125 }
    }
}

impl Mesh {
    pub fn from_breaks(mut breaks: Vec<f64>, anchor_at: f64) -> Self {
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * (1.0 + b.abs()));
        let anchor = breaks
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - anchor_at).abs().partial_cmp(&(b.1 - anchor_at).abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let rule = GaussRule::standard();
        let mut nodes = Vec::with_capacity((breaks.len() - 1) * rule.n);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for p in breaks.windows(2) {
            let (mid, half) = (0.5 * (p[0] + p[1]), 0.5 * (p[1] - p[0]));
            for k in 0..rule.n {
                nodes.push(mid + half * rule.x[k]);
                weights.push(half * rule.w[k]);
            }
        }
        Self { breaks, nodes, weights, anchor, rule }
    }

    /// Mesh on [a, b] graded geometrically toward each cluster point, with the
    /// anchor placed at `anchor_at` (which becomes a breakpoint).
    pub fn graded(a: f64, b: f64, clusters: &[f64], anchor_at: f64, g: Grading) -> Self {
        let mut pts = vec![a, b, anchor_at];
        let floor = g.floor.max(1e-13);
        for &c in clusters {
            if !(a..=b).contains(&c) {
                continue;
            }
            pts.push(c);
            let mut h = floor;
            let mut count = 0;
            while count < g.cap && (c - h > a || c + h < b) {
                if c - h > a {
                    pts.push(c - h);
                }
                if c + h < b {
                    pts.push(c + h);
                }
                h *= g.ratio;
                count += 1;
            }
        }
        pts.retain(|p| (a..=b).contains(p));
        pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        // drop points that would create slivers much narrower than the floor
        let mut clean: Vec<f64> = Vec::with_capacity(pts.len());
        for p in pts {
            match clean.last() {
                Some(&q) if p - q < 0.25 * floor => {
                    let keep_new = p == anchor_at || p == b || clusters.contains(&p);
                    if keep_new && q != a && q != anchor_at {
                        clean.pop();
                        clean.push(p);
                    }
                }
                _ => clean.push(p),
            }
        }
        let mut breaks = Vec::with_capacity(clean.len() * 2);
        for w in clean.windows(2) {
            let pieces = ((w[1] - w[0]) / g.max_width).ceil().max(1.0) as usize;
            for s in 0..pieces {
                breaks.push(w[0] + (w[1] - w[0]) * s as f64 / pieces as f64);
            }
        }
        breaks.push(*clean.last().unwrap());
        Self::from_breaks(breaks, anchor_at)
    }

    pub fn order(&self) -> usize {
        self.rule.n
    }

    pub fn panels(&self) -> usize {
        self.breaks.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn anchor_point(&self) -> f64 {
        self.breaks[self.anchor]
    }

    /// Integral over the whole mesh.
    pub fn integrate<T: Field>(&self, f: &[T]) -> T {
        let mut s = T::default();
        for (v, w) in f.iter().zip(&self.weights) {
            s = s + *v * *w;
        }
        s
    }

    /// Cumulative integral from the anchor: values at the nodes and at the breakpoints.
    pub fn cumulative<T: Field>(&self, f: &[T]) -> (Vec<T>, Vec<T>) {
        let n = self.rule.n;
        let np = self.panels();
        let mut at_nodes = vec![T::default(); f.len()];
        let mut at_breaks = vec![T::default(); np + 1];
        // panels right of the anchor
        let mut run = T::default();
        for p in self.anchor..np {
            let half = 0.5 * (self.breaks[p + 1] - self.breaks[p]);
            let fp = &f[p * n..(p + 1) * n];
            for i in 0..n {
                let mut s = T::default();
                for j in 0..n {
                    s = s + fp[j] * self.rule.cum[i * n + j];
                }
                at_nodes[p * n + i] = run + s * half;
            }
            let mut tot = T::default();
            for j in 0..n {
                tot = tot + fp[j] * self.rule.w[j];
            }
            run = run + tot * half;
            at_breaks[p + 1] = run;
        }
        // panels left of the anchor, integrating backwards
        let mut run = T::default();
        for p in (0..self.anchor).rev() {
            let half = 0.5 * (self.breaks[p + 1] - self.breaks[p]);
            let fp = &f[p * n..(p + 1) * n];
            let mut tot = T::default();
            for j in 0..n {
                tot = tot + fp[j] * self.rule.w[j];
            }
            for i in 0..n {
                let mut s = T::default();
                for j in 0..n {
                    s = s + fp[j] * self.rule.cum[i * n + j];
                }
                // integral from x_i to the right end of the panel
                let to_right = (tot - s) * half;
                at_nodes[p * n + i] = T::default() - (run + to_right);
            }
            run = run + tot * half;
            at_breaks[p] = T::default() - run;
        }
        (at_nodes, at_breaks)
    }

    /// Spectral derivative of nodal values, panel by panel.
    pub fn differentiate<T: Field>(&self, f: &[T]) -> Vec<T> {
        let n = self.rule.n;
        let mut out = vec![T::default(); f.len()];
        for p in 0..self.panels() {
            let inv_half = 2.0 / (self.breaks[p + 1] - self.breaks[p]);
            for i in 0..n {
                let mut s = T::default();
                for j in 0..n {
                    s = s + f[p * n + j] * self.rule.diff[i * n + j];
                }
                out[p * n + i] = s * inv_half;
            }
        }
        out
    }

    /// Legendre-series interpolation of nodal values at `y`.
    pub fn interpolate<T: Field>(&self, f: &[T], y: f64) -> T {
        let n = self.rule.n;
        let p = match self.breaks.binary_search_by(|b| b.partial_cmp(&y).unwrap()) {
            Ok(i) => i.min(self.panels() - 1),
            Err(i) => i.saturating_sub(1).min(self.panels() - 1),
        };
        let (a, b) = (self.breaks[p], self.breaks[p + 1]);
        let t = (2.0 * y - a - b) / (b - a);
        let c = self.rule.legendre_coefficients(&f[p * n..(p + 1) * n]);
        let pl = legendre_all(n, t);
        let mut s = T::default();
        for k in 0..n {
            s = s + c[k] * pl[k];
        }
        s
    }

    /// Quadrature error estimate from the trailing Legendre coefficients of each panel.
    pub fn tail_error<T: Field>(&self, f: &[T]) -> f64 {
        let n = self.rule.n;
        let mut err = 0.0;
        for p in 0..self.panels() {
            let half = 0.5 * (self.breaks[p + 1] - self.breaks[p]);
            let c = self.rule.legendre_coefficients(&f[p * n..(p + 1) * n]);
            err += half * (c[n - 1].modulus() + c[n - 2].modulus());
        }
        err
    }
}

/// Adaptive Gauss–Kronrod-free integration of a smooth function on [a, b] by
/// panel bisection until two-level agreement.
pub fn integrate_adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let rule = GaussRule::standard();
    let panel = |lo: f64, hi: f64| -> f64 {
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        (0..rule.n).map(|k| rule.w[k] * f(mid + half * rule.x[k])).sum::<f64>() * half
    };
    fn rec(
        panel: &dyn Fn(f64, f64) -> f64,
        lo: f64,
        hi: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let mid = 0.5 * (lo + hi);
        let (l, r) = (panel(lo, mid), panel(mid, hi));
        if depth == 0 || (l + r - whole).abs() <= tol {
            return l + r;
        }
        rec(panel, lo, mid, l, 0.5 * tol, depth - 1) + rec(panel, mid, hi, r, 0.5 * tol, depth - 1)
    }
    rec(&panel, a, b, panel(a, b), tol, 40)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(16);
        for p in 0..31 {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            let exact = if p % 2 == 0 { 2.0 / (p as f64 + 1.0) } else { 0.0 };
            assert!((s - exact).abs() < 1e-14, "degree {p}");
        }
    }

    #[test]
    fn cumulative_matches_antiderivative_both_sides() {
        let mesh = Mesh::graded(-1.0, 1.0, &[0.3], 0.3, Grading { floor: 1e-3, ..Default::default() });
        let f: Vec<f64> = mesh.nodes.iter().map(|y| y.cos()).collect();
        let (cn, cb) = mesh.cumulative(&f);
        for (y, v) in mesh.nodes.iter().zip(&cn) {
            assert!((v - (y.sin() - 0.3f64.sin())).abs() < 1e-14);
        }
        for (y, v) in mesh.breaks.iter().zip(&cb) {
            assert!((v - (y.sin() - 0.3f64.sin())).abs() < 1e-14);
        }
    }

    #[test]
    fn differentiation_and_interpolation_are_spectral() {
        let mesh = Mesh::graded(-1.0, 1.0, &[0.0], 0.0, Grading::default());
        let f: Vec<f64> = mesh.nodes.iter().map(|y| (2.0 * y).exp()).collect();
        let d = mesh.differentiate(&f);
        for (y, v) in mesh.nodes.iter().zip(&d) {
            assert!((v - 2.0 * (2.0 * y).exp()).abs() < 1e-10);
        }
        for y in [-1.0, -0.37, 0.0, 0.81, 1.0] {
            assert!((mesh.interpolate(&f, y) - (2.0 * y).exp()).abs() < 1e-13);
        }
        assert!(mesh.tail_error(&f) < 1e-12);
    }

    #[test]
    fn adaptive_integration_of_peaked_function() {
        let v = integrate_adaptive(&|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-12);
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((v - exact).abs() < 1e-8 * exact);
    }
}
