//! Stationary states in self-similar variables via shooting.
//!
//! Everything is phrased in the cumulated variable Φ(s) = (1/2π) * (mass
//! inside radius √s), which turns the stationary system into a single ODE
//!
//!   Φ'' + Φ'/2 + Φ Φ'/(2s) = 0,   Φ(0) = 0,  Φ'(0) = a,
//!
//! with a = n(0)/2. The map a -> M = 2π Φ(∞) is strictly increasing onto
//! (0, 8π), so a profile of any subcritical mass is found by bracketing.

use crate::error::{KsError, Result};
use crate::grid::RadialGrid;
use crate::ode::{self, OdeOptions};
use crate::quad;

pub const EIGHT_PI: f64 = 8.0 * std::f64::consts::PI;

/// A fully reconstructed stationary state of mass M < 8π.
///
/// `f00` is the kernel function of the linearized operator, normalized to
/// f(0) = 1; the mass-derivative normalization ∂_M log n∞ equals
/// f00 / (a * dmass_da). `mu0_prime` is the constant relating that kernel
/// function to its own Newtonian potential.
#[derive(Debug, Clone)]
pub struct StationaryProfile {
    pub grid: RadialGrid,
    pub mass: f64,
    /// a = Φ'(0) = n∞(0)/2.
    pub slope: f64,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub c_inf: Vec<f64>,
    /// Kernel function, f(0) = 1, sampled at the nodes.
    pub f00: Vec<f64>,
    /// d f00 / ds at the nodes.
    pub f00_ds: Vec<f64>,
    /// Variational solution dΦ/da and its s-derivative.
    pub phik: Vec<f64>,
    pub dphik: Vec<f64>,
    pub mu0_prime: f64,
    /// dM/da = 2π dΦ/da (s_max).
    pub dmass_da: f64,
    /// Certified bound on the mass beyond s_max.
    pub tail_mass_bound: f64,
    /// Sup distance between the two independent routes to the kernel mode.
    pub kernel_residual: f64,
}

impl StationaryProfile {
    pub fn n_inf(&self) -> Vec<f64> {
        self.dphi.iter().map(|d| 2.0 * d).collect()
    }

    pub fn n_inf_at(&self, i: usize) -> f64 {
        2.0 * self.dphi[i]
    }

    /// Central density n∞(0) = 2a.
    pub fn central_density(&self) -> f64 {
        2.0 * self.slope
    }

    /// Tail exponent α = M/(2π) in n∞(r) ~ r^{-α} e^{-r²/2}.
    pub fn tail_exponent(&self) -> f64 {
        self.mass / (2.0 * std::f64::consts::PI)
    }

    /// ∂_M log n∞ at node i (mass-derivative normalization of the kernel).
    pub fn f00_mass_normalized(&self, i: usize) -> f64 {
        self.f00[i] / (self.slope * self.dmass_da)
    }
}

/// Three-term series start for Φ at the regular singular point s = 0.
fn phi_series(a: f64, s: f64) -> [f64; 2] {
    let c2 = -a * (1.0 + a) / 4.0;
    let c3 = a * (1.0 + a) * (2.0 + 3.0 * a) / 48.0;
    [
        s * (a + s * (c2 + s * c3)),
        a + s * (2.0 * c2 + 3.0 * s * c3),
    ]
}

/// Series start for the variational solution dΦ/da (d/da of `phi_series`).
fn phik_series(a: f64, s: f64) -> [f64; 2] {
    let d2 = -(1.0 + 2.0 * a) / 4.0;
    let d3 = (2.0 + 10.0 * a + 9.0 * a * a) / 48.0;
    [
        s * (1.0 + s * (d2 + s * d3)),
        1.0 + s * (2.0 * d2 + 3.0 * s * d3),
    ]
}

/// Series start for the kernel function: 4s f'' + 4 f' + 2Φ' f = 0, f(0)=1.
fn f00_series(a: f64, s: f64) -> [f64; 2] {
    let e1 = -a / 2.0;
    let e2 = a * (1.0 + 2.0 * a) / 16.0;
    [1.0 + s * (e1 + s * e2), e1 + 2.0 * e2 * s]
}

fn phi_rhs(s: f64, y: &[f64; 2]) -> [f64; 2] {
    [y[1], -0.5 * y[1] - y[0] * y[1] / (2.0 * s)]
}

/// The series in powers of s is really a series in a*s, so for steep
/// profiles the expansion point must sit well inside s < 1/a.
fn series_start(a: f64, s_first: f64) -> f64 {
    s_first.min(1e-3 / a)
}

/// Integrate the profile ODE alone over the grid nodes.
pub fn integrate_phi(a: f64, grid: &RadialGrid, opts: &OdeOptions) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(KsError::InvalidParameter {
            name: "a",
            value: a,
            reason: "initial slope must be positive and finite",
        });
    }
    let s_start = series_start(a, grid.s_first());
    let mut y = phi_series(a, s_start);
    ode::integrate(&phi_rhs, s_start, grid.s_first(), &mut y, opts)?;
    let n = grid.len();
    let mut phi = vec![0.0; n];
    let mut dphi = vec![0.0; n];
    ode::integrate_over_nodes(&phi_rhs, grid.nodes(), &mut y, opts, |i, _s, y| {
        phi[i] = y[0];
        dphi[i] = y[1];
    })?;
    for (i, d) in dphi.iter().enumerate() {
        if !(*d > 0.0) {
            return Err(KsError::NegativeDensity(2.0 * dphi[i]));
        }
    }
    Ok((phi, dphi))
}

/// Mass of the profile with initial slope a, M = 2π Φ(s_max), together with
/// a bound on the truncated tail. Φ' decays like e^{-s/4} at worst (the
/// effective drift in Φ'' = -(1/2 + Φ/(2s))Φ' exceeds 1/4 once s > 2Φ), so
/// the tail of 2π ∫ Φ' is at most 2π * 4 Φ'(s_max).
pub fn mass_of(a: f64, grid: &RadialGrid, opts: &OdeOptions) -> Result<(f64, f64)> {
    let (phi, dphi) = integrate_phi(a, grid, opts)?;
    let mass = 2.0 * std::f64::consts::PI * phi[grid.len() - 1];
    let tail = 2.0 * std::f64::consts::PI * 4.0 * dphi[grid.len() - 1];
    Ok((mass, tail))
}

/// Find the initial slope whose profile carries mass M, by bracketing and
/// bisection on the monotone map a -> mass_of(a).
fn solve_slope(mass: f64, grid: &RadialGrid, tol: f64, opts: &OdeOptions) -> Result<f64> {
    let mut lo = mass / EIGHT_PI;
    let mut hi = 10.0 * mass / (4.0 * std::f64::consts::PI);
    // Expand downward until below, upward until above.
    let mut m_lo = mass_of(lo, grid, opts)?.0;
    let mut guard = 0;
    while m_lo >= mass {
        lo *= 0.25;
        m_lo = mass_of(lo, grid, opts)?.0;
        guard += 1;
        if guard > 200 {
            return Err(KsError::BracketNotFound {
                what: format!("slope for mass {mass}"),
                limit: lo,
            });
        }
    }
    let mut m_hi = mass_of(hi, grid, opts)?.0;
    guard = 0;
    while m_hi <= mass {
        hi *= 4.0;
        m_hi = mass_of(hi, grid, opts)?.0;
        guard += 1;
        if guard > 200 || !hi.is_finite() {
            // The truncated mass map saturates below 8π when s_max is too
            // small to resolve masses this close to critical.
            return Err(KsError::BracketNotFound {
                what: format!("slope for mass {mass}"),
                limit: hi,
            });
        }
    }
    for _ in 0..200 {
        let mid = if hi / lo > 100.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        let m_mid = mass_of(mid, grid, opts)?.0;
        if (m_mid - mass).abs() <= 0.5 * tol && (hi - lo) <= 1e-13 * hi.abs().max(1.0) {
            return Ok(mid);
        }
        if m_mid < mass {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= f64::EPSILON * hi {
            break;
        }
    }
    let mid = 0.5 * (lo + hi);
    let m_mid = mass_of(mid, grid, opts)?.0;
    if (m_mid - mass).abs() <= tol {
        Ok(mid)
    } else {
        Err(KsError::TruncationTooSmall {
            s_max: grid.s_max(),
            tol,
        })
    }
}

/// Newtonian potential on a radial grid from a cumulated charge.
///
/// For a radial charge density with cumulated charge Q(s) (charge inside
/// radius √s), the potential u with -Δu = ρ reads
///
///   u(s) = -(1/4π) [ log s * Q(s) + ∫_s^{s_max} log s' Q'(s') ds' ],
///
/// up to the tail beyond s_max, which is negligible for Gaussian-tailed
/// charges. `q` and `dq` are Q and Q' at the nodes; `d2q` is Q'' (used by
/// the corrected quadrature).
fn radial_potential(grid: &RadialGrid, q: &[f64], dq: &[f64], d2q: &[f64]) -> Vec<f64> {
    let s = grid.nodes();
    let n = s.len();
    let g: Vec<f64> = (0..n).map(|i| s[i].ln() * dq[i]).collect();
    let gp: Vec<f64> = (0..n).map(|i| dq[i] / s[i] + s[i].ln() * d2q[i]).collect();
    let cum = quad::hermite_cumulative(s, &g, &gp);
    let total = cum[n - 1];
    (0..n)
        .map(|i| {
            let integral_above = total - cum[i];
            -(s[i].ln() * q[i] + integral_above) / (4.0 * std::f64::consts::PI)
        })
        .collect()
}

/// Solve for the stationary profile of mass M and reconstruct every derived
/// quantity (potential, kernel mode, mass derivative).
pub fn solve_stationary(
    mass: f64,
    grid: &RadialGrid,
    tol: f64,
    opts: &OdeOptions,
) -> Result<StationaryProfile> {
    if !(mass > 0.0 && mass < EIGHT_PI) {
        return Err(KsError::MassOutOfRange(mass));
    }
    if !(tol > 0.0) {
        return Err(KsError::InvalidParameter {
            name: "tol",
            value: tol,
            reason: "mass tolerance must be positive",
        });
    }
    let a = solve_slope(mass, grid, tol, opts)?;
    build_profile(a, mass, grid, opts)
}

/// Assemble the full profile for a known slope. The augmented system carries
/// Φ, Φ', the variational solution dΦ/da, and the kernel function together,
/// so every component sees Φ at integrator accuracy rather than interpolated.
fn build_profile(
    a: f64,
    mass: f64,
    grid: &RadialGrid,
    opts: &OdeOptions,
) -> Result<StationaryProfile> {
    let s_start = series_start(a, grid.s_first());
    let [p, dp] = phi_series(a, s_start);
    let [pk, dpk] = phik_series(a, s_start);
    let [f, df] = f00_series(a, s_start);
    let mut y = [p, dp, pk, dpk, f, df];

    let rhs = |s: f64, y: &[f64; 6]| {
        let [phi, dphi, phik, dphik, f, df] = *y;
        [
            dphi,
            -0.5 * dphi - phi * dphi / (2.0 * s),
            dphik,
            // d/da of the profile ODE with Φ frozen along the trajectory.
            -0.5 * dphik - (phik * dphi + phi * dphik) / (2.0 * s),
            df,
            -df / s - dphi * f / (2.0 * s),
        ]
    };

    ode::integrate(&rhs, s_start, grid.s_first(), &mut y, opts)?;
    let n = grid.len();
    let mut phi = vec![0.0; n];
    let mut dphi = vec![0.0; n];
    let mut phik = vec![0.0; n];
    let mut dphik = vec![0.0; n];
    let mut f00 = vec![0.0; n];
    let mut f00_ds = vec![0.0; n];
    ode::integrate_over_nodes(&rhs, grid.nodes(), &mut y, opts, |i, _s, y| {
        phi[i] = y[0];
        dphi[i] = y[1];
        phik[i] = y[2];
        dphik[i] = y[3];
        f00[i] = y[4];
        f00_ds[i] = y[5];
    })?;

    if let Some(bad) = dphi.iter().find(|d| !(**d > 0.0)) {
        return Err(KsError::NegativeDensity(2.0 * bad));
    }

    let s = grid.nodes();
    let dmass_da = 2.0 * std::f64::consts::PI * phik[n - 1];
    let tail_mass_bound = 2.0 * std::f64::consts::PI * 4.0 * dphi[n - 1];

    // Ratios of exponentially small tail values are noise below the
    // integrator's absolute tolerance; ratio-based diagnostics are
    // restricted to nodes where Φ' clears that floor by a wide margin.
    let noise_floor = 1e6 * opts.abs_tol.max(1e-300);

    // Independent route to the kernel function: f = a (dΦ/da)' / Φ'.
    let mut kernel_residual = 0.0f64;
    for i in 0..n {
        if dphi[i] > noise_floor {
            kernel_residual = kernel_residual.max((f00[i] - a * dphik[i] / dphi[i]).abs());
        }
    }

    // Potential: cumulated charge 2πΦ, so Q' = 2πΦ', Q'' = 2πΦ''.
    let two_pi = 2.0 * std::f64::consts::PI;
    let q: Vec<f64> = phi.iter().map(|p| two_pi * p).collect();
    let dq: Vec<f64> = dphi.iter().map(|d| two_pi * d).collect();
    let d2q: Vec<f64> = (0..n)
        .map(|i| two_pi * (-0.5 * dphi[i] - phi[i] * dphi[i] / (2.0 * s[i])))
        .collect();
    let c_inf = radial_potential(grid, &q, &dq, &d2q);

    // μ₀': the mass-normalized kernel mode minus its own Newtonian
    // potential is constant in s. Average over the interior (truncation
    // pollutes the last decades of the potential integral).
    let mu0_prime = {
        let pmax = phik[n - 1];
        let qk: Vec<f64> = phik.iter().map(|v| v / pmax).collect();
        let dqk: Vec<f64> = dphik.iter().map(|v| v / pmax).collect();
        let d2qk: Vec<f64> = (0..n)
            .map(|i| {
                (-0.5 * dphik[i] - (phik[i] * dphi[i] + phi[i] * dphik[i]) / (2.0 * s[i])) / pmax
            })
            .collect();
        let g00c = radial_potential(grid, &qk, &dqk, &d2qk);
        let mut acc = 0.0;
        let mut count = 0usize;
        for i in 0..n {
            if s[i] <= grid.s_max() / 4.0 && dphi[i] > noise_floor {
                let f_true = (dphik[i] / dphi[i]) / dmass_da;
                acc += f_true - g00c[i];
                count += 1;
            }
        }
        acc / count as f64
    };

    Ok(StationaryProfile {
        grid: grid.clone(),
        mass,
        slope: a,
        phi,
        dphi,
        c_inf,
        f00,
        f00_ds,
        phik,
        dphik,
        mu0_prime,
        dmass_da,
        tail_mass_bound,
        kernel_residual,
    })
}

/// Profile for a prescribed slope instead of a prescribed mass; the mass
/// field is filled with the truncated value 2πΦ(s_max).
pub fn profile_from_slope(
    a: f64,
    grid: &RadialGrid,
    opts: &OdeOptions,
) -> Result<StationaryProfile> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(KsError::InvalidParameter {
            name: "a",
            value: a,
            reason: "initial slope must be positive and finite",
        });
    }
    let (m, _) = mass_of(a, grid, opts)?;
    build_profile(a, m, grid, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;

    fn opts() -> OdeOptions {
        OdeOptions::default()
    }

    #[test]
    fn small_slope_matches_linearized_solution() {
        // For a -> 0 the quadratic term drops and Φ = 2a(1 - e^{-s/2}).
        let g = RadialGrid::default_grid();
        let a = 1e-4;
        let (phi, _) = integrate_phi(a, &g, &opts()).unwrap();
        let mut worst = 0.0f64;
        for (i, &s) in g.nodes().iter().enumerate() {
            let exact = 2.0 * a * (1.0 - (-s / 2.0).exp());
            worst = worst.max((phi[i] - exact).abs() / exact);
        }
        assert!(worst < 10.0 * a, "relative error {worst:.3e}");
    }

    #[test]
    fn small_slope_limiting_mass() {
        let g = RadialGrid::default_grid();
        let a = 1e-4;
        let (m, tail) = mass_of(a, &g, &opts()).unwrap();
        let expected = 4.0 * std::f64::consts::PI * a;
        assert!((m - expected).abs() / expected < 10.0 * a);
        assert!(tail < 1e-12 * m);
    }

    #[test]
    fn mass_map_is_monotone_and_subcritical() {
        let g = RadialGrid::default_grid();
        let mut prev = 0.0;
        for k in -4..=6 {
            let a = 10.0f64.powi(k);
            let (m, _) = mass_of(a, &g, &opts()).unwrap();
            assert!(m > prev, "mass not increasing at a = {a}");
            assert!(m < EIGHT_PI, "mass {m} exceeds 8*pi at a = {a}");
            prev = m;
        }
    }

    #[test]
    fn small_mass_profile_is_gaussian() {
        let g = RadialGrid::default_grid();
        let m = 1e-3;
        let p = solve_stationary(m, &g, 1e-12, &opts()).unwrap();
        let amp = m / (2.0 * std::f64::consts::PI);
        let mut worst = 0.0f64;
        for (i, &s) in g.nodes().iter().enumerate() {
            let n_exact = amp * (-s / 2.0).exp();
            worst = worst.max((p.n_inf_at(i) - n_exact).abs() / amp);
        }
        assert!(worst <= 10.0 * m, "sup relative deviation {worst:.3e}");
        let a_expect = m / (4.0 * std::f64::consts::PI);
        assert!((p.slope - a_expect).abs() / a_expect < 10.0 * m);
    }

    #[test]
    fn half_critical_profile_and_tail_exponent() {
        let g = RadialGrid::default_grid();
        let m = 4.0 * std::f64::consts::PI;
        let tight = OdeOptions {
            abs_tol: 1e-16,
            ..OdeOptions::default()
        };
        let p = solve_stationary(m, &g, 1e-10, &tight).unwrap();
        assert!(p.dphi.iter().all(|d| *d > 0.0));
        assert!(p.dphi.windows(2).all(|w| w[1] < w[0] || w[0] < 1e-12));
        // Fit alpha in n ~ C r^{-alpha} e^{-r^2/2} over a window where the
        // density is still far above the integrator noise floor.
        let s = g.nodes();
        let i = s.iter().position(|&v| v >= 20.0).unwrap();
        let j = s.iter().position(|&v| v >= 36.0).unwrap();
        let li = (p.n_inf_at(i)).ln() + s[i] / 2.0;
        let lj = (p.n_inf_at(j)).ln() + s[j] / 2.0;
        let alpha = -(lj - li) / ((s[j].sqrt()).ln() - (s[i].sqrt()).ln());
        assert!(
            (alpha - 2.0).abs() < 0.01,
            "tail exponent {alpha} should be ~2"
        );
    }

    #[test]
    fn cumulated_mass_bounded_by_total() {
        let g = RadialGrid::default_grid();
        let m = 10.0;
        let p = solve_stationary(m, &g, 1e-10, &opts()).unwrap();
        let two_pi = 2.0 * std::f64::consts::PI;
        assert!(p.phi.windows(2).all(|w| w[1] >= w[0]));
        assert!(p.phi.iter().all(|&v| v >= 0.0 && two_pi * v <= m + 1e-9));
        assert!((two_pi * p.phi[g.len() - 1] - m).abs() < 1e-9);
    }

    #[test]
    fn potential_derivative_consistency() {
        // dc∞/ds = -Φ/(2s): check against centered differences of c_inf.
        let g = RadialGrid::default_grid();
        let p = solve_stationary(10.0, &g, 1e-10, &opts()).unwrap();
        let s = g.nodes();
        let mut worst = 0.0f64;
        for i in 1..g.len() - 1 {
            if s[i] > 100.0 {
                break; // truncation pollutes the far potential tail
            }
            let num = (p.c_inf[i + 1] - p.c_inf[i - 1]) / (s[i + 1] - s[i - 1]);
            let exact = -p.phi[i] / (2.0 * s[i]);
            worst = worst.max((num - exact).abs() / exact.abs().max(1e-30));
        }
        assert!(worst < 5e-3, "derivative mismatch {worst:.3e}");
    }

    #[test]
    fn potential_center_matches_gaussian_quadrature() {
        // M small: c∞(0) = ∫ log(1/σ) n∞(σ) σ dσ with n∞ Gaussian.
        let g = RadialGrid::default_grid();
        let m = 1e-3;
        let p = solve_stationary(m, &g, 1e-12, &opts()).unwrap();
        let amp = m / (2.0 * std::f64::consts::PI);
        // Fine uniform quadrature of the closed-form limit.
        let nq = 200_000;
        let rmax = 20.0;
        let h = rmax / nq as f64;
        let mut oracle = 0.0;
        for k in 0..nq {
            let r = (k as f64 + 0.5) * h;
            oracle += -(r.ln()) * amp * (-r * r / 2.0).exp() * r * h;
        }
        assert!(
            (p.c_inf[0] - oracle).abs() < 1e-3 * m,
            "c_inf(0) = {:.6e}, oracle {:.6e}",
            p.c_inf[0],
            oracle
        );
    }

    #[test]
    fn potential_has_log_tail() {
        let g = RadialGrid::default_grid();
        let m = 10.0;
        let p = solve_stationary(m, &g, 1e-10, &opts()).unwrap();
        let s = g.nodes();
        let alpha = m / (2.0 * std::f64::consts::PI);
        // c∞ + (M/2π) log r should flatten with growing r.
        let vals: Vec<f64> = (0..g.len())
            .filter(|&i| s[i] > 50.0 && s[i] < 300.0)
            .map(|i| p.c_inf[i] + alpha * s[i].sqrt().ln())
            .collect();
        let spread = vals.iter().cloned().fold(f64::MIN, f64::max)
            - vals.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-3, "log-corrected tail spread {spread:.3e}");
    }

    #[test]
    fn kernel_dual_route_agreement() {
        for m in [0.5, 10.0, 20.0] {
            let g = RadialGrid::default_grid();
            let p = solve_stationary(m, &g, 1e-10, &opts()).unwrap();
            assert!(
                p.kernel_residual < 1e-6,
                "kernel routes disagree by {:.3e} at M = {m}",
                p.kernel_residual
            );
        }
    }

    #[test]
    fn kernel_flattens_in_small_mass_limit() {
        let g = RadialGrid::default_grid();
        let p = solve_stationary(1e-4, &g, 1e-12, &opts()).unwrap();
        let mut worst = 0.0f64;
        for (i, &s) in g.nodes().iter().enumerate() {
            if s <= 50.0 {
                worst = worst.max((p.f00[i] - 1.0).abs());
            }
        }
        assert!(worst < 1e-3, "kernel deviates from constant by {worst:.3e}");
    }

    #[test]
    fn mu0_prime_integral_identity() {
        // μ₀' = (1/M) [1 - ∫ g00 n∞ c∞ dx], with g00 c∞ the potential of
        // the mass-normalized kernel density.
        let g = RadialGrid::default_grid();
        let m = 10.0;
        let p = solve_stationary(m, &g, 1e-10, &opts()).unwrap();
        let n = g.len();
        let s = g.nodes();
        let pmax = p.phik[n - 1];
        let qk: Vec<f64> = p.phik.iter().map(|v| v / pmax).collect();
        let dqk: Vec<f64> = p.dphik.iter().map(|v| v / pmax).collect();
        let d2qk: Vec<f64> = (0..n)
            .map(|i| {
                (-0.5 * p.dphik[i] - (p.phik[i] * p.dphi[i] + p.phi[i] * p.dphik[i]) / (2.0 * s[i]))
                    / pmax
            })
            .collect();
        let g00c = radial_potential(&g, &qk, &dqk, &d2qk);
        // ∫ (g00 c∞) n∞ dx = π ∫ g00c * 2Φ' ds.
        let integrand: Vec<f64> = (0..n).map(|i| g00c[i] * 2.0 * p.dphi[i]).collect();
        let integral = std::f64::consts::PI * quad::trapezoid(s, &integrand);
        let mu_from_identity = (1.0 - integral) / m;
        assert!(
            (p.mu0_prime - mu_from_identity).abs() < 1e-4,
            "mu0' {:.6e} vs identity {:.6e}",
            p.mu0_prime,
            mu_from_identity
        );
    }

    #[test]
    fn rejects_out_of_range_mass() {
        let g = RadialGrid::default_grid();
        assert!(matches!(
            solve_stationary(EIGHT_PI, &g, 1e-10, &opts()),
            Err(KsError::MassOutOfRange(_))
        ));
        assert!(matches!(
            solve_stationary(-1.0, &g, 1e-10, &opts()),
            Err(KsError::MassOutOfRange(_))
        ));
    }
}
