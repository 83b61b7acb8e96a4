//! Nonlinear relaxation of radial densities in self-similar variables.
//!
//! A radial solution is evolved through its cumulated mass
//! Φ(t, s) = (1/2π) ∫_{B(0,√s)} n dx, which satisfies the closed
//! advection-diffusion equation
//!
//!   Φ_t = 4 s Φ_ss + 2 (Φ + s) Φ_s,
//!
//! with Φ(t, 0) = 0 and Φ pinned to M/2π at the truncation point, so mass
//! is conserved exactly. Dividing the right-hand side by 4s recovers the
//! stationary equation of the shooting profiles. Time stepping is backward
//! Euler with the advection coefficient 2(Φ + s) frozen at the current
//! state: one tridiagonal solve per step, unconditionally stable, and an
//! exact fixed point at the discrete steady state. Diagnostics are measured
//! against that discrete steady state, not the shooting profile, so the
//! spatial truncation error cancels from decay-rate fits.

use crate::error::{KsError, Result};
use crate::forms::{self, Perturbation};
use crate::linalg::{fd3, fd_derivative, Tridiag};
use crate::profile::StationaryProfile;

const TAU: f64 = std::f64::consts::TAU;

/// Ratio f = φ'/Φ' in diagnostics is held once Φ' falls below this; the
/// integrated profile slope is integrator noise further out.
const DPHI_FLOOR: f64 = 1e-10;

/// Nonlinear spatial operator 4 s Φ_ss + 2 (Φ + s) Φ_s on the interior
/// nodes, with a ghost value Φ(0) = 0 closing the first stencil. The last
/// entry is left at zero: that node carries the Dirichlet condition.
pub fn spatial_operator(s: &[f64], phi: &[f64]) -> Vec<f64> {
    let n = s.len();
    assert_eq!(phi.len(), n);
    let mut out = vec![0.0; n];
    for i in 0..n - 1 {
        let hm = if i == 0 { s[0] } else { s[i] - s[i - 1] };
        let hp = s[i + 1] - s[i];
        let (d1, d2) = fd3(hm, hp);
        let left = if i == 0 { 0.0 } else { phi[i - 1] };
        let grad = d1[0] * left + d1[1] * phi[i] + d1[2] * phi[i + 1];
        let lap = d2[0] * left + d2[1] * phi[i] + d2[2] * phi[i + 1];
        out[i] = 4.0 * s[i] * lap + 2.0 * (phi[i] + s[i]) * grad;
    }
    out
}

/// Steady state of the discrete flow: Newton iteration on the finite
/// difference residual, starting from the shooting profile. Converges in a
/// handful of steps; the result is the exact fixed point of [`step`], which
/// criterion-level drift checks and decay-rate fits rely on.
pub fn steady_state(profile: &StationaryProfile) -> Result<Vec<f64>> {
    let s = profile.grid.nodes();
    let n = s.len();
    let boundary = profile.mass / TAU;
    let mut phi = profile.phi.clone();
    phi[n - 1] = boundary;
    let scale = boundary.max(1e-300);
    for _ in 0..25 {
        let mut res = spatial_operator(s, &phi);
        res[n - 1] = phi[n - 1] - boundary;
        let mut jac = Tridiag::zeros(n);
        for i in 0..n - 1 {
            let hm = if i == 0 { s[0] } else { s[i] - s[i - 1] };
            let hp = s[i + 1] - s[i];
            let (d1, d2) = fd3(hm, hp);
            let left = if i == 0 { 0.0 } else { phi[i - 1] };
            let grad = d1[0] * left + d1[1] * phi[i] + d1[2] * phi[i + 1];
            if i > 0 {
                jac.lower[i] = 4.0 * s[i] * d2[0] + 2.0 * (phi[i] + s[i]) * d1[0];
            }
            jac.diag[i] = 4.0 * s[i] * d2[1] + 2.0 * (phi[i] + s[i]) * d1[1] + 2.0 * grad;
            jac.upper[i] = 4.0 * s[i] * d2[2] + 2.0 * (phi[i] + s[i]) * d1[2];
        }
        jac.diag[n - 1] = 1.0;
        let delta = jac.solve(&res)?;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            phi[i] -= delta[i];
            worst = worst.max(delta[i].abs());
        }
        // Quadratic convergence bottoms out at the roundoff plateau of the
        // tridiagonal solve, around 1e-13 in units of M/2pi.
        if worst <= 1e-12 * scale {
            return Ok(phi);
        }
    }
    Err(KsError::LinearSolveFailure(
        "steady-state Newton iteration did not converge".into(),
    ))
}

/// One backward-Euler step of length `dt` with the advection coefficient
/// frozen at the current state. `boundary` is the pinned value M/2π.
pub fn step(s: &[f64], phi: &mut [f64], boundary: f64, dt: f64) -> Result<()> {
    let n = s.len();
    assert_eq!(phi.len(), n);
    let mut a = Tridiag::zeros(n);
    let mut rhs = vec![0.0; n];
    for i in 0..n - 1 {
        let hm = if i == 0 { s[0] } else { s[i] - s[i - 1] };
        let hp = s[i + 1] - s[i];
        let (d1, d2) = fd3(hm, hp);
        let adv = 2.0 * (phi[i] + s[i]);
        if i > 0 {
            a.lower[i] = -dt * (4.0 * s[i] * d2[0] + adv * d1[0]);
        }
        a.diag[i] = 1.0 - dt * (4.0 * s[i] * d2[1] + adv * d1[1]);
        a.upper[i] = -dt * (4.0 * s[i] * d2[2] + adv * d1[2]);
        rhs[i] = phi[i];
    }
    a.diag[n - 1] = 1.0;
    rhs[n - 1] = boundary;
    let next = a.solve(&rhs)?;
    // Cumulated mass of a nonnegative density must stay nondecreasing from
    // zero; tolerate quadrature-level wiggle, reject anything larger.
    let tol = 1e-9 * boundary.max(1e-300);
    let mut worst: f64 = (-next[0]).max(0.0);
    for w in next.windows(2) {
        worst = worst.max(w[0] - w[1]);
    }
    if worst > tol {
        return Err(KsError::MonotonicityViolation(worst));
    }
    phi.copy_from_slice(&next);
    Ok(())
}

/// Time series of diagnostics along a run, sampled at the checkpoints.
/// `states` keeps the cumulated samples themselves for comparison checks.
#[derive(Debug, Clone)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    /// First quadratic form of Φ(t) − Φ_steady (NaN when the perturbation
    /// fails the zero-mass precondition).
    pub q1: Vec<f64>,
    /// ∫ (n − n_steady)² / n∞ dx.
    pub weighted_l2: Vec<f64>,
    /// |2π Φ(t, s_max) − M|; identically zero for the pinned scheme.
    pub mass_defect: Vec<f64>,
    /// min over nodes of the reconstructed density 2 Φ_s.
    pub min_density: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

/// Evolve `initial` to `t_end`, recording diagnostics every
/// `checkpoint_every` steps (and at both endpoints).
pub fn run(
    profile: &StationaryProfile,
    initial: &[f64],
    t_end: f64,
    dt: f64,
    checkpoint_every: usize,
) -> Result<EvolutionTrace> {
    let s = profile.grid.nodes();
    let n = s.len();
    if initial.len() != n {
        return Err(KsError::InvalidGrid(format!(
            "initial data has {} samples, grid has {n}",
            initial.len()
        )));
    }
    if !(dt > 0.0) {
        return Err(KsError::InvalidParameter {
            name: "dt",
            value: dt,
            reason: "time step must be positive",
        });
    }
    if !(t_end >= 0.0) {
        return Err(KsError::InvalidParameter {
            name: "t_end",
            value: t_end,
            reason: "final time must be nonnegative",
        });
    }
    let boundary = profile.mass / TAU;
    let defect = (initial[n - 1] - boundary).abs();
    if defect > 1e-10 * boundary.max(1e-300) {
        return Err(KsError::InvalidParameter {
            name: "initial_boundary",
            value: defect,
            reason: "initial cumulated mass must equal M/2pi at the truncation point",
        });
    }
    let steady = steady_state(profile)?;
    let steps = (t_end / dt).round().max(0.0) as usize;
    let every = checkpoint_every.max(1);

    let mut trace = EvolutionTrace {
        times: Vec::new(),
        q1: Vec::new(),
        weighted_l2: Vec::new(),
        mass_defect: Vec::new(),
        min_density: Vec::new(),
        states: Vec::new(),
    };
    let record = |time: f64, phi: &[f64], trace: &mut EvolutionTrace| {
        let diff: Vec<f64> = (0..n).map(|i| phi[i] - steady[i]).collect();
        let pert = Perturbation::from_phi_fd(profile, &diff, DPHI_FLOOR);
        let q1v = forms::q1(profile, &pert).unwrap_or(f64::NAN);
        let l2 = pert.l2_weighted(profile);
        let density = fd_derivative(s, phi);
        let min_density = density.iter().fold(f64::INFINITY, |m, d| m.min(2.0 * d));
        trace.times.push(time);
        trace.q1.push(q1v);
        trace.weighted_l2.push(l2);
        trace
            .mass_defect
            .push((TAU * phi[n - 1] - profile.mass).abs());
        trace.min_density.push(min_density);
        trace.states.push(phi.to_vec());
    };

    let mut phi = initial.to_vec();
    phi[n - 1] = boundary;
    record(0.0, &phi, &mut trace);
    for k in 1..=steps {
        step(s, &mut phi, boundary, dt)?;
        if k % every == 0 || k == steps {
            record(k as f64 * dt, &phi, &mut trace);
        }
    }
    Ok(trace)
}

/// Exponential decay rate fitted to a diagnostic over a time window.
#[derive(Debug, Clone, Copy)]
pub struct RateFit {
    /// Fitted rate γ in v(t) ≈ C e^{-γ t}.
    pub rate: f64,
    /// Root-mean-square residual of the log-linear fit.
    pub residual: f64,
    pub samples: usize,
}

/// Least-squares fit of log v against t over `window = (t0, t1)`. Rejects
/// windows with fewer than 10 samples or nonpositive values: both mean the
/// signal is not an exponential decay worth quoting.
pub fn decay_rate(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<RateFit> {
    assert_eq!(times.len(), values.len());
    let mut ts = Vec::new();
    let mut logs = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(v > 0.0) {
            return Err(KsError::RateFitRejected(format!(
                "nonpositive diagnostic {v:.3e} at t = {t}"
            )));
        }
        ts.push(t);
        logs.push(v.ln());
    }
    if ts.len() < 10 {
        return Err(KsError::RateFitRejected(format!(
            "only {} samples in the fit window, need at least 10",
            ts.len()
        )));
    }
    let m = ts.len() as f64;
    let tbar = ts.iter().sum::<f64>() / m;
    let lbar = logs.iter().sum::<f64>() / m;
    let mut stt = 0.0;
    let mut stl = 0.0;
    for (&t, &l) in ts.iter().zip(&logs) {
        stt += (t - tbar) * (t - tbar);
        stl += (t - tbar) * (l - lbar);
    }
    if stt == 0.0 {
        return Err(KsError::RateFitRejected("degenerate time window".into()));
    }
    let slope = stl / stt;
    let mut ss = 0.0;
    for (&t, &l) in ts.iter().zip(&logs) {
        let r = l - lbar - slope * (t - tbar);
        ss += r * r;
    }
    Ok(RateFit {
        rate: -slope,
        residual: (ss / m).sqrt(),
        samples: ts.len(),
    })
}

/// Result of checking k(t, σ) ≤ k_bound(σ) along a trace, in mass units.
#[derive(Debug, Clone, Copy)]
pub struct ComparisonReport {
    /// min over checkpoints and nodes of 2π (Φ_bound − Φ(t)); domination
    /// holds when this is not below the caller's tolerance.
    pub worst_margin: f64,
    pub worst_time: f64,
    /// Whether the initial state already sat below the bound. A violated
    /// precondition makes later margins meaningless, so it is reported
    /// separately rather than folded into the worst margin.
    pub initially_dominated: bool,
}

/// Check pointwise domination of the cumulated mass by a larger-mass
/// stationary state at every checkpoint. Both must live on the same grid.
pub fn comparison_check(trace: &EvolutionTrace, bound: &StationaryProfile) -> ComparisonReport {
    let mut worst_margin = f64::INFINITY;
    let mut worst_time = 0.0;
    let mut initially_dominated = true;
    for (k, state) in trace.states.iter().enumerate() {
        assert_eq!(state.len(), bound.phi.len());
        let margin = state
            .iter()
            .zip(&bound.phi)
            .map(|(v, b)| TAU * (b - v))
            .fold(f64::INFINITY, f64::min);
        if k == 0 && margin < 0.0 {
            initially_dominated = false;
        }
        if margin < worst_margin {
            worst_margin = margin;
            worst_time = trace.times[k];
        }
    }
    ComparisonReport {
        worst_margin,
        worst_time,
        initially_dominated,
    }
}

/// Piecewise-linear sample of a cumulated function at an off-grid point,
/// with Φ(0) = 0 below the first node and the boundary value beyond s_max.
fn interp_cumulated(s: &[f64], phi: &[f64], sigma: f64) -> f64 {
    let n = s.len();
    if sigma <= 0.0 {
        return 0.0;
    }
    if sigma <= s[0] {
        return phi[0] * sigma / s[0];
    }
    if sigma >= s[n - 1] {
        return phi[n - 1];
    }
    let j = s.partition_point(|&x| x < sigma);
    let (s0, s1) = (s[j - 1], s[j]);
    let w = (sigma - s0) / (s1 - s0);
    phi[j - 1] * (1.0 - w) + phi[j] * w
}

/// Initial data Φ₀(s) = Φ_steady((1 + δ) s): an infinitesimal dilation of
/// the steady state, mass-preserving, dominated by the pure dilation
/// eigenmode. The workhorse for decay-rate extraction.
pub fn dilated_initial(s: &[f64], steady: &[f64], delta: f64) -> Vec<f64> {
    let n = s.len();
    let mut out: Vec<f64> = s
        .iter()
        .map(|&x| interp_cumulated(s, steady, (1.0 + delta) * x))
        .collect();
    out[n - 1] = steady[n - 1];
    out
}

/// Initial data spread outward: Φ₀(s) = c Φ_steady(γ s) with γ ≤ 1 and c
/// restoring the boundary value. Monotone in s, and pointwise below the
/// steady state of any strictly larger mass (Φ_M(γs) ≤ Φ_M(s) and the
/// normalization excess is exponentially small in s_max), which makes it a
/// convenient dominated family.
pub fn spread_initial(s: &[f64], steady: &[f64], gamma: f64) -> Vec<f64> {
    let n = s.len();
    let boundary = steady[n - 1];
    let c = boundary / interp_cumulated(s, steady, gamma * s[n - 1]);
    let mut out: Vec<f64> = s
        .iter()
        .map(|&x| c * interp_cumulated(s, steady, gamma * x))
        .collect();
    out[n - 1] = boundary;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;
    use crate::ode::OdeOptions;
    use crate::profile::solve_stationary;

    fn opts() -> OdeOptions {
        OdeOptions::default()
    }

    #[test]
    fn newton_steady_state_tracks_the_shooting_profile() {
        let g = RadialGrid::default_grid();
        let p = solve_stationary(10.0, &g, 1e-10, &opts()).unwrap();
        let steady = steady_state(&p).unwrap();
        let scale = p.mass / TAU;
        let worst = steady
            .iter()
            .zip(&p.phi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(
            worst < 1e-3 * scale,
            "discrete steady deviates {worst:.3e} from the shot profile"
        );
        // The discrete residual itself must be at solver level once put in
        // units of Phi (each row scales like 4s/h^2).
        let s = g.nodes();
        let res = spatial_operator(s, &steady);
        let mut rnorm: f64 = 0.0;
        for i in 0..g.len() - 1 {
            let hm = if i == 0 { s[0] } else { s[i] - s[i - 1] };
            let hp = s[i + 1] - s[i];
            rnorm = rnorm.max(res[i].abs() * hm * hp / (4.0 * s[i]));
        }
        assert!(rnorm < 1e-12 * scale, "steady residual {rnorm:.3e}");
    }

    #[test]
    fn steady_state_is_a_fixed_point_of_the_stepper() {
        let g = RadialGrid::default_grid();
        let p = solve_stationary(10.0, &g, 1e-10, &opts()).unwrap();
        let steady = steady_state(&p).unwrap();
        let trace = run(&p, &steady, 1.0, 1e-3, 100).unwrap();
        let last = trace.states.last().unwrap();
        let scale = p.mass / TAU;
        let drift = last
            .iter()
            .zip(&steady)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(drift <= 1e-8 * scale, "steady-state drift {drift:.3e}");
        assert!(trace.mass_defect.iter().all(|&d| d <= 1e-10));
    }

    #[test]
    fn small_mass_gaussian_relaxes_at_the_heat_rate() {
        // Oracle: for vanishing mass the flow is the radial heat flow with
        // confinement, under which a centered Gaussian stays Gaussian with
        // variance v(t) = 1 + (v0 - 1) e^{-2t}.
        let g = RadialGrid::default_grid();
        let p = solve_stationary(1e-4, &g, 1e-12, &opts()).unwrap();
        let s = g.nodes();
        let boundary = p.mass / TAU;
        let v0: f64 = 1.5;
        let initial: Vec<f64> = s
            .iter()
            .map(|&x| boundary * (1.0 - (-x / (2.0 * v0)).exp()))
            .collect();
        let t_end = 0.5;
        let trace = run(&p, &initial, t_end, 2e-4, 250).unwrap();
        let vt = 1.0 + (v0 - 1.0) * (-2.0 * t_end).exp();
        let last = trace.states.last().unwrap();
        let worst = s
            .iter()
            .zip(last)
            .map(|(&x, &phi)| {
                let exact = boundary * (1.0 - (-x / (2.0 * vt)).exp());
                (phi - exact).abs()
            })
            .fold(0.0, f64::max);
        assert!(
            worst < 1e-2 * boundary,
            "Gaussian variance oracle violated by {:.3e} (scale {boundary:.3e})",
            worst
        );
    }

    #[test]
    fn dilated_data_decay_at_twice_the_dilation_eigenvalue() {
        let g = RadialGrid::default_grid();
        let p = solve_stationary(10.0, &g, 1e-10, &opts()).unwrap();
        let steady = steady_state(&p).unwrap();
        let initial = dilated_initial(g.nodes(), &steady, 1e-3);
        let trace = run(&p, &initial, 2.0, 1e-3, 20).unwrap();
        let fit_l2 = decay_rate(&trace.times, &trace.weighted_l2, (1.0, 2.0)).unwrap();
        assert!(
            (fit_l2.rate - 4.0).abs() < 0.05 * 4.0,
            "weighted L2 rate {:.4} (residual {:.2e})",
            fit_l2.rate,
            fit_l2.residual
        );
        let fit_q1 = decay_rate(&trace.times, &trace.q1, (1.0, 2.0)).unwrap();
        assert!(
            (fit_q1.rate - 4.0).abs() < 0.05 * 4.0,
            "q1 rate {:.4} (residual {:.2e})",
            fit_q1.rate,
            fit_q1.residual
        );
    }

    #[test]
    fn spread_data_stay_dominated_and_monotone() {
        let g = RadialGrid::default_grid();
        let p = solve_stationary(6.0, &g, 1e-10, &opts()).unwrap();
        let bound = solve_stationary(7.0, &g, 1e-10, &opts()).unwrap();
        let steady = steady_state(&p).unwrap();
        let initial = spread_initial(g.nodes(), &steady, 0.8);
        let trace = run(&p, &initial, 1.0, 1e-3, 50).unwrap();
        let report = comparison_check(&trace, &bound);
        assert!(report.initially_dominated);
        assert!(
            report.worst_margin > -1e-8 * p.mass,
            "domination violated by {:.3e} at t = {}",
            -report.worst_margin,
            report.worst_time
        );
        for state in &trace.states {
            assert!(state.windows(2).all(|w| w[1] >= w[0] - 1e-9 * p.mass));
        }
        assert!(trace.min_density.iter().all(|&d| d > -1e-8));
    }

    #[test]
    fn halving_the_step_converges_at_first_order() {
        let g = RadialGrid::default_grid();
        let p = solve_stationary(10.0, &g, 1e-10, &opts()).unwrap();
        let steady = steady_state(&p).unwrap();
        let initial = spread_initial(g.nodes(), &steady, 0.9);
        let t_end = 0.25;
        let ends: Vec<Vec<f64>> = [2e-3, 1e-3, 5e-4]
            .iter()
            .map(|&dt| {
                run(&p, &initial, t_end, dt, usize::MAX)
                    .unwrap()
                    .states
                    .last()
                    .unwrap()
                    .clone()
            })
            .collect();
        let diff = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        };
        let coarse = diff(&ends[0], &ends[1]);
        let fine = diff(&ends[1], &ends[2]);
        let order = (coarse / fine).log2();
        assert!(
            (order - 1.0).abs() < 0.3,
            "observed order {order:.2} (coarse {coarse:.3e}, fine {fine:.3e})"
        );
    }

    #[test]
    fn decay_rate_rejects_bad_series() {
        let times: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let clean: Vec<f64> = times.iter().map(|t| (-3.0 * t).exp()).collect();
        let fit = decay_rate(&times, &clean, (1.0, 4.0)).unwrap();
        assert!((fit.rate - 3.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);

        let mut with_zero = clean.clone();
        with_zero[20] = 0.0;
        assert!(matches!(
            decay_rate(&times, &with_zero, (1.0, 4.0)),
            Err(KsError::RateFitRejected(_))
        ));
        assert!(matches!(
            decay_rate(&times, &clean, (1.0, 1.3)),
            Err(KsError::RateFitRejected(_))
        ));
    }

    #[test]
    fn run_validates_its_inputs() {
        let g = RadialGrid::default_grid();
        let p = solve_stationary(1.0, &g, 1e-10, &opts()).unwrap();
        let steady = steady_state(&p).unwrap();
        assert!(run(&p, &steady[1..], 1.0, 1e-3, 10).is_err());
        assert!(run(&p, &steady, 1.0, -1e-3, 10).is_err());
        let mut off = steady.clone();
        let last = off.len() - 1;
        off[last] *= 1.5;
        assert!(matches!(
            run(&p, &off, 1.0, 1e-3, 10),
            Err(KsError::InvalidParameter { .. })
        ));
        // Zero-length run still yields the initial checkpoint.
        let trace = run(&p, &steady, 0.0, 1e-3, 10).unwrap();
        assert_eq!(trace.times, vec![0.0]);
        assert_eq!(trace.states.len(), 1);
    }
}
