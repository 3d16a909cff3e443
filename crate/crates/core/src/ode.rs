//! Adaptive Dormand–Prince 5(4) integration of complex second-order linear ODEs
//! written as first-order systems in (φ, φ′).

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type State = [Complex64; 2];

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub h_init: f64,
    pub h_min: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-14, max_steps: 2_000_000, h_init: 1e-3, h_min: 1e-14 }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate φ″ = p(y)·φ from `y0` to each of `outputs` (monotone in the
/// direction of integration), returning the state at every output point.
pub fn integrate_linear(
    p: &dyn Fn(f64) -> Complex64,
    y0: f64,
    state0: State,
    outputs: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<State>> {
    let rhs = |y: f64, s: &State| -> State { [s[1], p(y) * s[0]] };
    integrate(&rhs, y0, state0, outputs, opts)
}

/// General Dormand–Prince driver for a two-component complex system.
pub fn integrate(
    rhs: &dyn Fn(f64, &State) -> State,
    y0: f64,
    state0: State,
    outputs: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<State>> {
    let mut out = Vec::with_capacity(outputs.len());
    let mut y = y0;
    let mut s = state0;
    let Some(&last) = outputs.last() else { return Ok(out) };
    let dir = if last >= y0 { 1.0 } else { -1.0 };
    let mut h = opts.h_init.abs() * dir;
    let mut k = [[Complex64::default(); 2]; 7];
    k[0] = rhs(y, &s);
    let mut steps = 0;
    for &target in outputs {
        while (target - y) * dir > 0.0 {
            if steps >= opts.max_steps {
                return Err(Error::NonConvergence(format!("ode step budget exhausted at y = {y}")));
            }
            steps += 1;
            let mut hs = h;
            let clipped = (y + hs - target) * dir > 0.0;
            if clipped {
                hs = target - y;
            }
            for st in 1..7 {
                let mut tmp = s;
                for (j, kj) in k.iter().enumerate().take(st) {
                    let a = A[st][j];
                    if a != 0.0 {
                        tmp[0] += kj[0] * (a * hs);
                        tmp[1] += kj[1] * (a * hs);
                    }
                }
                k[st] = rhs(y + C[st] * hs, &tmp);
            }
            let mut s5 = s;
            let mut err = 0.0f64;
            for c in 0..2 {
                let mut d5 = Complex64::default();
                let mut d4 = Complex64::default();
                for st in 0..7 {
                    d5 += k[st][c] * B5[st];
                    d4 += k[st][c] * B4[st];
                }
                s5[c] = s[c] + d5 * hs;
                let sc = opts.atol + opts.rtol * s[c].norm().max(s5[c].norm());
                err = err.max(((d5 - d4) * hs).norm() / sc);
            }
            if err <= 1.0 {
                y += hs;
                if clipped {
                    y = target;
                }
                s = s5;
                k[0] = k[6];
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !clipped {
                    h = hs * fac;
                } else {
                    h = h.abs().max(hs.abs() * fac) * dir;
                }
            } else {
                h = hs * (0.9 * err.powf(-0.2)).clamp(0.1, 0.5);
                if h.abs() < opts.h_min {
                    return Err(Error::NonConvergence(format!("ode step underflow at y = {y}")));
                }
            }
        }
        out.push(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinh_oracle() {
        let one = Complex64::new(1.0, 0.0);
        let out = integrate_linear(
            &|_| one,
            -1.0,
            [Complex64::default(), one],
            &[0.0, 1.0],
            &OdeOptions::default(),
        )
        .unwrap();
        assert!((out[1][0].re - 2f64.sinh()).abs() < 1e-11);
        assert!((out[0][1].re - 1f64.cosh()).abs() < 1e-11);
    }

    #[test]
    fn backward_integration_with_complex_coefficient() {
        // φ'' = -(1+i)^2 φ has φ = sin((1+i)(y-1)) through φ(1)=0, φ'(1)=1+i
        let w = Complex64::new(1.0, 1.0);
        let out = integrate_linear(
            &|_| -w * w,
            1.0,
            [Complex64::default(), w],
            &[-1.0],
            &OdeOptions::default(),
        )
        .unwrap();
        let exact = (w * -2.0).sin();
        assert!((out[0][0] - exact).norm() < 1e-10 * exact.norm());
    }
}
