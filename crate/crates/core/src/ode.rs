//! Adaptive embedded Runge-Kutta integration (Dormand-Prince 5(4)).
//!
//! The shooting problems in this crate are stiff only through scale, not
//! through spectrum, so an explicit adaptive pair at tight tolerance is the
//! right tool. Steps are clamped to interval ends so solutions can be
//! recorded exactly at grid nodes.

use crate::error::{KsError, Result};

pub const DEFAULT_ABS_TOL: f64 = 1e-10;
pub const DEFAULT_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            abs_tol: DEFAULT_ABS_TOL,
            rel_tol: DEFAULT_REL_TOL,
            max_steps: 4_000_000,
        }
    }
}

// Dormand-Prince coefficients.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// 4th-order weights for the error estimate.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrate y' = f(s, y) from `s0` to `s1` (s1 > s0), mutating `y` in place.
/// Returns the number of accepted steps.
pub fn integrate<const N: usize, F>(
    f: &F,
    s0: f64,
    s1: f64,
    y: &mut [f64; N],
    opts: &OdeOptions,
) -> Result<usize>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    if s1 <= s0 {
        return Ok(0);
    }
    let mut s = s0;
    let mut h = ((s1 - s0) * 0.01).min(0.1 * s0.max(1e-12)).max(1e-14);
    let mut accepted = 0usize;
    let mut k1 = f(s, y);

    for _ in 0..opts.max_steps {
        if s >= s1 {
            return Ok(accepted);
        }
        if s + h > s1 {
            h = s1 - s;
        }

        let mut y2 = [0.0; N];
        for i in 0..N {
            y2[i] = y[i] + h * A21 * k1[i];
        }
        let k2 = f(s + h / 5.0, &y2);
        for i in 0..N {
            y2[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        let k3 = f(s + 0.3 * h, &y2);
        for i in 0..N {
            y2[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        let k4 = f(s + 0.8 * h, &y2);
        for i in 0..N {
            y2[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        let k5 = f(s + 8.0 / 9.0 * h, &y2);
        for i in 0..N {
            y2[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let k6 = f(s + h, &y2);
        let mut y_new = [0.0; N];
        for i in 0..N {
            y_new[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        let k7 = f(s + h, &y_new);

        let mut err = 0.0f64;
        for i in 0..N {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / sc).abs());
        }

        if !err.is_finite() {
            return Err(KsError::IntegrationFailure {
                location: s,
                reason: "non-finite error estimate".into(),
            });
        }

        if err <= 1.0 {
            s += h;
            *y = y_new;
            k1 = k7; // FSAL
            accepted += 1;
        }

        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
        if h < 1e-15 * s.max(1.0) {
            return Err(KsError::IntegrationFailure {
                location: s,
                reason: format!("step size underflow (h = {h:.3e})"),
            });
        }
    }
    Err(KsError::IntegrationFailure {
        location: s,
        reason: "maximum step count exceeded".into(),
    })
}

/// Walk an increasing node list, integrating node to node and invoking
/// `record(index, s, y)` at every node (including the first).
pub fn integrate_over_nodes<const N: usize, F, R>(
    f: &F,
    nodes: &[f64],
    y: &mut [f64; N],
    opts: &OdeOptions,
    mut record: R,
) -> Result<()>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    R: FnMut(usize, f64, &[f64; N]),
{
    record(0, nodes[0], y);
    for i in 1..nodes.len() {
        integrate(f, nodes[i - 1], nodes[i], y, opts)?;
        record(i, nodes[i], y);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_to_tolerance() {
        let f = |_s: f64, y: &[f64; 1]| [-0.5 * y[0]];
        let mut y = [1.0];
        integrate(&f, 0.0, 10.0, &mut y, &OdeOptions::default()).unwrap();
        let exact = (-5.0f64).exp();
        assert!((y[0] - exact).abs() < 1e-9, "got {} want {}", y[0], exact);
    }

    #[test]
    fn harmonic_oscillator_energy() {
        let f = |_s: f64, y: &[f64; 2]| [y[1], -y[0]];
        let mut y = [1.0, 0.0];
        integrate(&f, 0.0, 20.0, &mut y, &OdeOptions::default()).unwrap();
        let energy = y[0] * y[0] + y[1] * y[1];
        assert!((energy - 1.0).abs() < 1e-8);
    }

    #[test]
    fn records_at_every_node() {
        let f = |_s: f64, y: &[f64; 1]| [y[0]];
        let nodes = [1.0, 2.0, 3.0];
        let mut y = [1.0];
        let mut seen = Vec::new();
        integrate_over_nodes(&f, &nodes, &mut y, &OdeOptions::default(), |i, s, y| {
            seen.push((i, s, y[0]));
        })
        .unwrap();
        assert_eq!(seen.len(), 3);
        assert!((seen[2].2 - (2.0f64).exp()).abs() < 1e-8);
    }
}
