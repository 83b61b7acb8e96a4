//! Decreasing rearrangement of radial densities and the cumulated-mass
//! admissibility check against a larger-mass stationary state.
//!
//! A radial sample u(r_i) is viewed as a step function on annuli. Sorting
//! the (value, annulus-area) pairs by value gives the decreasing
//! rearrangement u_*(σ) on the area variable σ = π r²; its running
//! integral k₀(σ) is what the comparison arguments consume. Rearrangement
//! here is a permutation of annuli, so the L¹ and L² masses are preserved
//! exactly, not just to quadrature accuracy.

use crate::error::{KsError, Result};
use crate::grid::RadialGrid;
use crate::profile::StationaryProfile;

const PI: f64 = std::f64::consts::PI;
const TAU: f64 = std::f64::consts::TAU;

/// Decreasing rearrangement of a radial density on the shared area grid
/// σ_i = π s_i.
#[derive(Debug, Clone)]
pub struct RearrangedDatum {
    /// Area nodes σ_i = π s_i.
    pub sigma: Vec<f64>,
    /// u_*(σ_i): non-increasing, non-negative.
    pub u_star: Vec<f64>,
    /// k₀(σ_i) = ∫₀^{σ_i} u_* dσ': non-decreasing, concave, k₀(0) = 0.
    pub k0: Vec<f64>,
    /// Total mass Σ u_i · area_i = k₀(σ_max).
    pub mass: f64,
}

/// Annulus areas of the cells around each node: cell i spans the midpoints
/// towards its neighbors, the first cell reaches down to the origin. The
/// areas tile the full disk of area π s_max.
fn cell_areas(s: &[f64]) -> Vec<f64> {
    let n = s.len();
    let mut edges = Vec::with_capacity(n + 1);
    edges.push(0.0);
    for i in 0..n - 1 {
        edges.push(0.5 * (s[i] + s[i + 1]));
    }
    edges.push(s[n - 1]);
    (0..n).map(|i| PI * (edges[i + 1] - edges[i])).collect()
}

/// Decreasing rearrangement by level-set sorting. `density` holds u(r_i)
/// at the grid radii r_i = √s_i.
pub fn rearrange_radial(grid: &RadialGrid, density: &[f64]) -> Result<RearrangedDatum> {
    let s = grid.nodes();
    let n = s.len();
    assert_eq!(density.len(), n);
    if let Some(&bad) = density.iter().find(|v| !(**v >= 0.0)) {
        return Err(KsError::NegativeDensity(bad));
    }
    let areas = cell_areas(s);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| density[j].total_cmp(&density[i]));

    // Step function of the rearrangement: value v_k on [c_k, c_{k+1}).
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    let mut integral = Vec::with_capacity(n + 1);
    integral.push(0.0);
    for &i in &order {
        cum.push(cum.last().unwrap() + areas[i]);
        integral.push(integral.last().unwrap() + density[i] * areas[i]);
    }
    let mass = *integral.last().unwrap();

    let sigma: Vec<f64> = s.iter().map(|&x| PI * x).collect();
    let mut u_star = vec![0.0; n];
    let mut k0 = vec![0.0; n];
    for j in 0..n {
        // Locate the step cell containing sigma_j.
        let k = cum.partition_point(|&c| c <= sigma[j]).min(n) - 1;
        let v = density[order[k]];
        u_star[j] = v;
        k0[j] = integral[k] + v * (sigma[j] - cum[k]);
    }
    Ok(RearrangedDatum {
        sigma,
        u_star,
        k0,
        mass,
    })
}

/// Result of the domination check k₀(σ) ≤ 2π Φ_bound(σ/π).
#[derive(Debug, Clone, Copy)]
pub struct AdmissibilityReport {
    pub holds: bool,
    /// min over nodes of 2π Φ_bound − k₀, in mass units.
    pub worst_margin: f64,
    pub worst_sigma: f64,
}

/// Check that the cumulated rearranged mass sits below the cumulated mass
/// of a stationary state of strictly larger (still subcritical) mass. The
/// datum and the bound must live on the same grid, so the comparison is a
/// nodewise subtraction with no interpolation.
pub fn check_technical_assumption(
    datum: &RearrangedDatum,
    bound: &StationaryProfile,
) -> Result<AdmissibilityReport> {
    let eps = bound.mass - datum.mass;
    if !(eps > 0.0) {
        return Err(KsError::InvalidParameter {
            name: "eps",
            value: eps,
            reason: "the comparison state needs strictly larger mass",
        });
    }
    let n = datum.sigma.len();
    assert_eq!(bound.phi.len(), n);
    let mut worst_margin = f64::INFINITY;
    let mut worst_sigma = 0.0;
    for j in 0..n {
        let margin = TAU * bound.phi[j] - datum.k0[j];
        if margin < worst_margin {
            worst_margin = margin;
            worst_sigma = datum.sigma[j];
        }
    }
    Ok(AdmissibilityReport {
        holds: worst_margin >= 0.0,
        worst_margin,
        worst_sigma,
    })
}
