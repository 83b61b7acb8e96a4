//! Quadratic forms for radial perturbations of the stationary state.
//!
//! A radial perturbation f of the density is carried around as its
//! cumulated slope representation: with φ(s) the cumulated perturbed mass,
//!
//!   (n∞ f)(√s) = 2 φ'(s),   (g c∞)'(√s) = -φ(s)/√s,
//!
//! which collapses every form to a one-dimensional integral. The
//! logarithmic convolution is never evaluated directly: the gradient
//! representation of the interaction term requires ∫ f n∞ dx = 0, which is
//! tracked by the `zero_mass` flag.

use crate::error::{KsError, Result};
use crate::profile::StationaryProfile;
use crate::quad;
use rand::Rng;

const PI: f64 = std::f64::consts::PI;
const TAU: f64 = std::f64::consts::TAU;

/// Flag tolerance: quadrature checks of the orthogonality conditions are
/// compared against 1e-8 times the size of the perturbation.
const FLAG_TOL: f64 = 1e-8;

/// Radial perturbation in cumulated form. `f` is the relative density
/// perturbation as a function of s = r², together with its first two
/// s-derivatives so that all quadratures can use derivative-corrected
/// trapezoid rules.
#[derive(Debug, Clone)]
pub struct Perturbation {
    /// Cumulated perturbation φ(s) = (1/2π) ∫_{B(0,√s)} f n∞ dx.
    pub phi: Vec<f64>,
    /// f(√s) = φ'(s)/Φ'(s) sampled at the nodes.
    pub f: Vec<f64>,
    /// df/ds and d²f/ds² at the nodes.
    pub f_s: Vec<f64>,
    pub f_ss: Vec<f64>,
    /// ∫ f n∞ dx ≈ 0 (the gradient representation of the log kernel is
    /// valid only then).
    pub zero_mass: bool,
    /// ∫ f f₀,₀ n∞ dx ≈ 0.
    pub orthogonal_to_kernel: bool,
}

/// Second and third s-derivatives of the profile from its own equation,
/// Φ'' = -Φ'/2 - ΦΦ'/(2s).
fn profile_d2(p: &StationaryProfile, i: usize) -> f64 {
    let s = p.grid.nodes()[i];
    -0.5 * p.dphi[i] - p.phi[i] * p.dphi[i] / (2.0 * s)
}

fn profile_d3(p: &StationaryProfile, i: usize) -> f64 {
    let s = p.grid.nodes()[i];
    let d2 = profile_d2(p, i);
    -0.5 * d2 - (p.dphi[i] * p.dphi[i] + p.phi[i] * d2) / (2.0 * s)
        + p.phi[i] * p.dphi[i] / (2.0 * s * s)
}

/// Weighted inner product ∫ F G n∞ dx = 2π ∫ F G Φ' ds for nodal samples
/// with analytic s-derivatives.
fn weighted_inner(
    p: &StationaryProfile,
    fa: &[f64],
    fa_s: &[f64],
    fb: &[f64],
    fb_s: &[f64],
) -> f64 {
    let s = p.grid.nodes();
    let n = s.len();
    let mut g = vec![0.0; n];
    let mut gp = vec![0.0; n];
    for i in 0..n {
        g[i] = fa[i] * fb[i] * p.dphi[i];
        gp[i] = (fa_s[i] * fb[i] + fa[i] * fb_s[i]) * p.dphi[i] + fa[i] * fb[i] * profile_d2(p, i);
    }
    // Head below the first node: both factors are regular there, so the
    // missing piece is fa(0) fb(0) ∫₀^{s₀} Φ' ds = fa(0) fb(0) Φ(s₀).
    let head = fa[0] * fb[0] * p.phi[0];
    TAU * (head + quad::hermite_trapezoid(s, &g, &gp))
}

impl Perturbation {
    /// Build a perturbation from nodal samples of f(√s) and its first two
    /// s-derivatives. φ is reconstructed by corrected-trapezoid cumulation
    /// of φ' = f Φ', with the head below the first node taken from the
    /// regular behavior φ ≈ f(0) Φ.
    pub fn from_f_samples(
        profile: &StationaryProfile,
        f: Vec<f64>,
        f_s: Vec<f64>,
        f_ss: Vec<f64>,
    ) -> Self {
        let s = profile.grid.nodes();
        let n = s.len();
        assert_eq!(f.len(), n);
        assert_eq!(f_s.len(), n);
        assert_eq!(f_ss.len(), n);
        let mut dphi = vec![0.0; n];
        let mut d2phi = vec![0.0; n];
        for i in 0..n {
            dphi[i] = f[i] * profile.dphi[i];
            d2phi[i] = f_s[i] * profile.dphi[i] + f[i] * profile_d2(profile, i);
        }
        let mut phi = quad::hermite_cumulative(s, &dphi, &d2phi);
        let head = f[0] * profile.phi[0];
        for v in phi.iter_mut() {
            *v += head;
        }
        let mut pert = Self {
            phi,
            f,
            f_s,
            f_ss,
            zero_mass: false,
            orthogonal_to_kernel: false,
        };
        pert.refresh_flags(profile);
        pert
    }

    /// Build a perturbation from an analytic density profile F(s) given with
    /// its first two derivatives.
    pub fn from_density(
        profile: &StationaryProfile,
        density: impl Fn(f64) -> (f64, f64, f64),
    ) -> Self {
        let s = profile.grid.nodes();
        let n = s.len();
        let mut f = vec![0.0; n];
        let mut f_s = vec![0.0; n];
        let mut f_ss = vec![0.0; n];
        for i in 0..n {
            let (v, d1, d2) = density(s[i]);
            f[i] = v;
            f_s[i] = d1;
            f_ss[i] = d2;
        }
        Self::from_f_samples(profile, f, f_s, f_ss)
    }

    /// Build a perturbation from a shot eigenfunction (cumulated samples
    /// φ, φ' and the trial eigenvalue, which supplies φ'' and φ''' through
    /// the linearized equation). The ratio f = φ'/Φ' is held at its last
    /// reliable value once Φ' drops below `dphi_floor` (integrator noise
    /// dominates the quotient there); contributions beyond are damped by
    /// the Gaussian weight.
    pub fn from_mode(
        profile: &StationaryProfile,
        phi: &[f64],
        dphi: &[f64],
        lambda: f64,
        dphi_floor: f64,
    ) -> Self {
        let s = profile.grid.nodes();
        let n = s.len();
        assert_eq!(phi.len(), n);
        assert_eq!(dphi.len(), n);
        let mut f = vec![0.0; n];
        let mut f_s = vec![0.0; n];
        let mut f_ss = vec![0.0; n];
        let mut held = false;
        for i in 0..n {
            if !held && profile.dphi[i] > dphi_floor {
                let v = profile.dphi[i];
                let dv = profile_d2(profile, i);
                let d2v = profile_d3(profile, i);
                let u = dphi[i];
                let pc = (s[i] + profile.phi[i]) / (2.0 * s[i]);
                let qc = (lambda + 2.0 * profile.dphi[i]) / (4.0 * s[i]);
                let du = -pc * u - qc * phi[i];
                let pc_s = (1.0 + profile.dphi[i]) / (2.0 * s[i])
                    - (s[i] + profile.phi[i]) / (2.0 * s[i] * s[i]);
                let qc_s = profile_d2(profile, i) / (2.0 * s[i])
                    - (lambda + 2.0 * profile.dphi[i]) / (4.0 * s[i] * s[i]);
                let d2u = -pc * du - pc_s * u - qc * u - qc_s * phi[i];
                f[i] = u / v;
                f_s[i] = (du * v - u * dv) / (v * v);
                f_ss[i] =
                    (d2u * v - u * d2v) / (v * v) - 2.0 * dv * (du * v - u * dv) / (v * v * v);
            } else {
                held = true;
                f[i] = if i > 0 { f[i - 1] } else { 0.0 };
                f_s[i] = 0.0;
                f_ss[i] = 0.0;
            }
        }
        let mut pert = Self {
            phi: phi.to_vec(),
            f,
            f_s,
            f_ss,
            zero_mass: false,
            orthogonal_to_kernel: false,
        };
        pert.refresh_flags(profile);
        pert
    }

    /// Build a perturbation from nodal samples of its cumulated function
    /// alone, differentiating numerically. Used for time-evolution states,
    /// where only φ = Φ(t) − Φ_steady is available. The ratio f = φ'/Φ' is
    /// held at its last reliable value once Φ' drops below `dphi_floor`,
    /// as in [`Perturbation::from_mode`].
    pub fn from_phi_fd(profile: &StationaryProfile, phi: &[f64], dphi_floor: f64) -> Self {
        let s = profile.grid.nodes();
        let n = s.len();
        assert_eq!(phi.len(), n);
        let dphi = crate::linalg::fd_derivative(s, phi);
        let hold = profile
            .dphi
            .iter()
            .position(|&v| v <= dphi_floor)
            .unwrap_or(n);
        let mut f = vec![0.0; n];
        for i in 0..n {
            if i < hold {
                f[i] = dphi[i] / profile.dphi[i];
            } else {
                f[i] = if i > 0 { f[i - 1] } else { 0.0 };
            }
        }
        let mut f_s = crate::linalg::fd_derivative(s, &f);
        let mut f_ss = crate::linalg::fd_derivative(s, &f_s);
        for i in hold..n {
            f_s[i] = 0.0;
            f_ss[i] = 0.0;
        }
        let mut pert = Self {
            phi: phi.to_vec(),
            f,
            f_s,
            f_ss,
            zero_mass: false,
            orthogonal_to_kernel: false,
        };
        pert.refresh_flags(profile);
        pert
    }

    /// Project onto the admissible subspace: remove the components along 1
    /// (total mass) and f₀,₀ (kernel direction) in L²(n∞ dx), then rebuild
    /// φ and the flags.
    pub fn project(&mut self, profile: &StationaryProfile) {
        let n = self.f.len();
        let ones = vec![1.0; n];
        let zeros = vec![0.0; n];
        let f00 = &profile.f00;
        let f00_s = &profile.f00_ds;
        // Gram matrix of {1, f00} and moments of f.
        let g11 = weighted_inner(profile, &ones, &zeros, &ones, &zeros);
        let g12 = weighted_inner(profile, &ones, &zeros, f00, f00_s);
        let g22 = weighted_inner(profile, f00, f00_s, f00, f00_s);
        let m1 = weighted_inner(profile, &self.f, &self.f_s, &ones, &zeros);
        let m2 = weighted_inner(profile, &self.f, &self.f_s, f00, f00_s);
        let det = g11 * g22 - g12 * g12;
        let alpha = (m1 * g22 - m2 * g12) / det;
        let beta = (g11 * m2 - g12 * m1) / det;
        let s = profile.grid.nodes();
        for i in 0..n {
            // f00'' from its own equation 4s f'' + 4f' + 2Φ' f = 0.
            let f00_ss = -f00_s[i] / s[i] - profile.dphi[i] * f00[i] / (2.0 * s[i]);
            self.f[i] -= alpha + beta * f00[i];
            self.f_s[i] -= beta * f00_s[i];
            self.f_ss[i] -= beta * f00_ss;
        }
        *self = Self::from_f_samples(
            profile,
            std::mem::take(&mut self.f),
            std::mem::take(&mut self.f_s),
            std::mem::take(&mut self.f_ss),
        );
    }

    /// Recompute the orthogonality flags from quadrature.
    pub fn refresh_flags(&mut self, profile: &StationaryProfile) {
        let norm = self.l2_weighted(profile).sqrt();
        let mass = TAU * self.phi.last().copied().unwrap_or(0.0);
        let kernel = weighted_inner(profile, &self.f, &self.f_s, &profile.f00, &profile.f00_ds);
        self.zero_mass = mass.abs() <= FLAG_TOL * (1.0 + norm);
        self.orthogonal_to_kernel = kernel.abs() <= FLAG_TOL * (1.0 + norm);
    }

    /// ∫ f² n∞ dx.
    pub fn l2_weighted(&self, profile: &StationaryProfile) -> f64 {
        weighted_inner(profile, &self.f, &self.f_s, &self.f, &self.f_s)
    }
}

/// Scalar product induced by the first form: ⟨a,b⟩ = ∫ a b n∞ dx −
/// ∫ ∇(g_a c∞)·∇(g_b c∞) dx, in cumulated variables
/// 2π ∫ φ_a' φ_b'/Φ' ds − π ∫ φ_a φ_b / s ds.
///
/// Valid only when at least one argument has zero mass (otherwise the
/// interaction term does not reduce to the gradient representation).
pub fn scalar_product(
    profile: &StationaryProfile,
    a: &Perturbation,
    b: &Perturbation,
) -> Result<f64> {
    if !a.zero_mass && !b.zero_mass {
        return Err(KsError::FormPrecondition(
            "scalar product needs a zero-mass argument for the gradient representation".into(),
        ));
    }
    let s = profile.grid.nodes();
    let n = s.len();
    // First term: φ_a' φ_b' / Φ' = f_a f_b Φ'.
    let first = weighted_inner(profile, &a.f, &a.f_s, &b.f, &b.f_s);
    // Second term: φ_a φ_b / s, with derivative using φ' = f Φ'.
    let mut g = vec![0.0; n];
    let mut gp = vec![0.0; n];
    for i in 0..n {
        let (pa, pb) = (a.phi[i], b.phi[i]);
        let (dpa, dpb) = (a.f[i] * profile.dphi[i], b.f[i] * profile.dphi[i]);
        g[i] = pa * pb / s[i];
        gp[i] = (dpa * pb + pa * dpb) / s[i] - pa * pb / (s[i] * s[i]);
    }
    let second = PI * quad::hermite_trapezoid(s, &g, &gp);
    Ok(first - second)
}

/// First quadratic form Q1[f] = ∫ f² n∞ dx − ∫ |∇(g c∞)|² dx.
pub fn q1(profile: &StationaryProfile, pert: &Perturbation) -> Result<f64> {
    if !pert.zero_mass {
        return Err(KsError::FormPrecondition(
            "q1 requires zero total mass of the perturbation".into(),
        ));
    }
    scalar_product(profile, pert, pert)
}

/// Second quadratic form Q2[f] = ∫ |∇(f − g c∞)|² n∞ dx. In cumulated
/// variables the radial derivative difference is 2√s f'(s) + φ/√s, so
/// Q2 = 2π ∫ Φ' (2√s f' + φ/√s)² ds.
pub fn q2(profile: &StationaryProfile, pert: &Perturbation) -> Result<f64> {
    let s = profile.grid.nodes();
    let n = s.len();
    let mut g = vec![0.0; n];
    let mut gp = vec![0.0; n];
    for i in 0..n {
        let rt = s[i].sqrt();
        let w = 2.0 * rt * pert.f_s[i] + pert.phi[i] / rt;
        let dphi_p = pert.f[i] * profile.dphi[i];
        let w_s = pert.f_s[i] / rt + 2.0 * rt * pert.f_ss[i] + dphi_p / rt
            - pert.phi[i] / (2.0 * s[i] * rt);
        g[i] = profile.dphi[i] * w * w;
        gp[i] = profile_d2(profile, i) * w * w + 2.0 * profile.dphi[i] * w * w_s;
    }
    let out = TAU * quad::hermite_trapezoid(s, &g, &gp);
    if !out.is_finite() {
        return Err(KsError::FormPrecondition(
            "q2 integrand is not finite for this perturbation".into(),
        ));
    }
    Ok(out)
}

/// Report of the form values and the gap-inequality margins for one
/// perturbation.
#[derive(Debug, Clone)]
pub struct FormsReport {
    pub mass: f64,
    pub q1: f64,
    pub q2: f64,
    pub l2_weighted: f64,
    /// q2/q1 (infinite when q1 vanishes).
    pub ratio: f64,
    pub zero_mass: bool,
    pub orthogonal_to_kernel: bool,
    /// Poincaré constant used for the third margin.
    pub lambda_used: f64,
    /// Margins of: q1 ≥ 0, q2 − 2 q1 ≥ 0 (radial gap), (Λ/(Λ−1)) q1 −
    /// ∫f²n∞ ≥ 0. All must exceed −eps_quad.
    pub margins: [f64; 3],
    /// Roundoff slack 1e-8 (|q1| + |q2|).
    pub eps_quad: f64,
}

impl FormsReport {
    pub fn all_hold(&self) -> bool {
        self.margins.iter().all(|m| *m >= -self.eps_quad)
    }
}

/// Evaluate both forms and the three gap inequalities for an admissible
/// perturbation. `lambda` is the Poincaré constant from the spectrum
/// module. Violations are reported through the margins, not as errors.
pub fn check_inequalities(
    profile: &StationaryProfile,
    pert: &Perturbation,
    lambda: f64,
) -> Result<FormsReport> {
    if !pert.orthogonal_to_kernel {
        return Err(KsError::FormPrecondition(
            "inequality checks need kernel orthogonality".into(),
        ));
    }
    let q1v = q1(profile, pert)?;
    let q2v = q2(profile, pert)?;
    let l2w = pert.l2_weighted(profile);
    let eps_quad = 1e-8 * (q1v.abs() + q2v.abs());
    Ok(FormsReport {
        mass: profile.mass,
        q1: q1v,
        q2: q2v,
        l2_weighted: l2w,
        ratio: if q1v != 0.0 { q2v / q1v } else { f64::INFINITY },
        zero_mass: pert.zero_mass,
        orthogonal_to_kernel: pert.orthogonal_to_kernel,
        lambda_used: lambda,
        margins: [q1v, q2v - 2.0 * q1v, lambda / (lambda - 1.0) * q1v - l2w],
        eps_quad,
    })
}

/// Random smooth admissible perturbation: a few Gaussian bumps in the s
/// variable, projected against mass and the kernel direction.
pub fn random_perturbation(profile: &StationaryProfile, rng: &mut impl Rng) -> Perturbation {
    let mut bumps = Vec::new();
    for _ in 0..3 {
        let amp: f64 = rng.gen_range(-1.0..1.0);
        let center: f64 = rng.gen_range(0.1..8.0);
        let width: f64 = rng.gen_range(0.5..2.5);
        bumps.push((amp, center, width));
    }
    let mut pert = Perturbation::from_density(profile, |s| {
        let mut v = 0.0;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for &(a, c, w) in &bumps {
            let z = (s - c) / w;
            let e = a * (-z * z).exp();
            v += e;
            d1 += -2.0 * z / w * e;
            d2 += (4.0 * z * z - 2.0) / (w * w) * e;
        }
        (v, d1, d2)
    });
    pert.project(profile);
    pert
}

/// Explicit constants of the gradient bound ‖∇(-Δ)⁻¹ρ‖_∞ ≤
/// C (‖ρ‖_{2-ε} + ‖ρ‖_{2+ε}): C₁ controls the near field via the
/// L^{2+ε} norm, C₂ the far field via the L^{2-ε} norm.
pub fn gradient_bound_constants(eps: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&eps) || eps == 0.0 {
        return Err(KsError::InvalidParameter {
            name: "eps",
            value: eps,
            reason: "the gradient bound needs 0 < eps < 1",
        });
    }
    let c1 = (TAU * (1.0 + eps) / eps).powf((1.0 + eps) / (2.0 + eps)) / TAU;
    let c2 = (TAU * (1.0 - eps) / eps).powf((1.0 - eps) / (2.0 - eps)) / TAU;
    Ok((c1, c2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;
    use crate::ode::OdeOptions;
    use crate::profile::solve_stationary;
    use crate::spectrum::{find_radial_eigenvalues, poincare_constant, shoot_radial};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn opts() -> OdeOptions {
        OdeOptions::default()
    }

    /// f = 1 − s/2 − Φ/2 is the dilation eigenfunction in density form
    /// (the cumulated solution s Φ' at λ = 2).
    fn dilation(profile: &StationaryProfile) -> Perturbation {
        let s = profile.grid.nodes();
        let n = s.len();
        let mut f = vec![0.0; n];
        let mut f_s = vec![0.0; n];
        let mut f_ss = vec![0.0; n];
        for i in 0..n {
            f[i] = 1.0 - 0.5 * s[i] - 0.5 * profile.phi[i];
            f_s[i] = -0.5 - 0.5 * profile.dphi[i];
            f_ss[i] = -0.5 * profile_d2(profile, i);
        }
        Perturbation::from_f_samples(profile, f, f_s, f_ss)
    }

    #[test]
    fn zero_perturbation_gives_zero_forms() {
        let g = RadialGrid::default_grid();
        let p = solve_stationary(1.0, &g, 1e-10, &opts()).unwrap();
        let n = g.len();
        let pert = Perturbation::from_f_samples(&p, vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        assert!(pert.zero_mass);
        assert_eq!(q1(&p, &pert).unwrap(), 0.0);
        assert_eq!(q2(&p, &pert).unwrap(), 0.0);
    }

    #[test]
    fn dilation_mode_is_positive_and_saturates_radial_gap() {
        let g = RadialGrid::default_grid();
        for m in [1.0, 10.0] {
            let p = solve_stationary(m, &g, 1e-10, &opts()).unwrap();
            let pert = dilation(&p);
            assert!(pert.zero_mass, "dilation mode should carry zero mass");
            let q1v = q1(&p, &pert).unwrap();
            let q2v = q2(&p, &pert).unwrap();
            assert!(q1v > 0.0);
            let ratio = q2v / q1v;
            assert!((ratio - 2.0).abs() < 1e-4, "Q2/Q1 = {ratio} at M = {m}");
        }
    }

    #[test]
    fn kernel_mode_annihilates_q2() {
        let g = RadialGrid::default_grid();
        let p = solve_stationary(10.0, &g, 1e-10, &opts()).unwrap();
        let s = g.nodes();
        let n = s.len();
        let mut f = p.f00.clone();
        let mut f_s = p.f00_ds.clone();
        let mut f_ss = vec![0.0; n];
        for i in 0..n {
            f_ss[i] = -f_s[i] / s[i] - p.dphi[i] * f[i] / (2.0 * s[i]);
        }
        let scale = 1.0; // any amplitude
        for v in f.iter_mut() {
            *v *= scale;
        }
        for v in f_s.iter_mut() {
            *v *= scale;
        }
        let pert = Perturbation::from_f_samples(&p, f, f_s, f_ss);
        let q2v = q2(&p, &pert).unwrap();
        let l2 = pert.l2_weighted(&p);
        assert!(q2v.abs() < 1e-8 * l2, "Q2[f00] = {q2v:.3e}, l2 = {l2:.3e}");
    }

    #[test]
    fn log_kernel_double_integral_matches_reduction_at_small_mass() {
        // Independent oracle for the interaction term: the angular average
        // of log|x-y| over a circle is log max(|x|,|y|), so the double
        // integral collapses to a double sum over radii.
        let g = RadialGrid::default_grid();
        let p = solve_stationary(1e-3, &g, 1e-12, &opts()).unwrap();
        let mut pert = Perturbation::from_density(&p, |s| {
            let z: f64 = s - 2.0;
            let e = (-z * z).exp();
            (e, -2.0 * z * e, (4.0 * z * z - 2.0) * e)
        });
        pert.project(&p);
        assert!(pert.zero_mass);
        let q1v = q1(&p, &pert).unwrap();
        let l2 = pert.l2_weighted(&p);
        // Interaction term = (1/2π) ∬ fn∞ log|x-y| fn∞ dx dy
        //                  = π ∬ φ'(s) φ'(t) log max(s,t) ds dt
        // (φ' ds pairs carry 2π each; log √· halves once).
        let s = g.nodes();
        let n = s.len();
        let dphi_p: Vec<f64> = (0..n).map(|i| pert.f[i] * p.dphi[i]).collect();
        // Trapezoid weights on the node list.
        let mut wts = vec![0.0; n];
        for i in 0..n - 1 {
            let h = s[i + 1] - s[i];
            wts[i] += 0.5 * h;
            wts[i + 1] += 0.5 * h;
        }
        let mut interaction = 0.0;
        for i in 0..n {
            let mut inner = 0.0;
            for j in 0..n {
                inner += wts[j] * dphi_p[j] * s[i].max(s[j]).ln();
            }
            interaction += wts[i] * dphi_p[i] * inner;
        }
        interaction *= PI;
        let q1_direct = l2 + interaction;
        let rel = (q1v - q1_direct).abs() / q1v.abs();
        assert!(
            rel < 1e-4,
            "reduction {q1v:.8e} vs direct {q1_direct:.8e} (rel {rel:.2e})"
        );
    }

    #[test]
    fn scalar_product_is_symmetric_and_kills_kernel() {
        let g = RadialGrid::default_grid();
        let p = solve_stationary(4.0, &g, 1e-10, &opts()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_perturbation(&p, &mut rng);
        let b = random_perturbation(&p, &mut rng);
        let ab = scalar_product(&p, &a, &b).unwrap();
        let ba = scalar_product(&p, &b, &a).unwrap();
        assert!((ab - ba).abs() <= 1e-14 * ab.abs().max(1.0));
        // ⟨f, f00⟩ = 0 for zero-mass f.
        let s = g.nodes();
        let n = s.len();
        let mut f_ss = vec![0.0; n];
        for i in 0..n {
            f_ss[i] = -p.f00_ds[i] / s[i] - p.dphi[i] * p.f00[i] / (2.0 * s[i]);
        }
        let kernel = Perturbation::from_f_samples(&p, p.f00.clone(), p.f00_ds.clone(), f_ss);
        let with_kernel = scalar_product(&p, &a, &kernel).unwrap();
        let scale = a.l2_weighted(&p).sqrt() * kernel.l2_weighted(&p).sqrt();
        assert!(
            with_kernel.abs() < 1e-6 * scale,
            "⟨f, f00⟩ = {with_kernel:.3e}"
        );
    }

    #[test]
    fn random_perturbations_satisfy_gap_inequalities() {
        let g = RadialGrid::default_grid();
        let p = solve_stationary(10.0, &g, 1e-10, &opts()).unwrap();
        let lambda = poincare_constant(&p, 0)
            .unwrap()
            .lambda
            .min(poincare_constant(&p, 1).unwrap().lambda);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for k in 0..20 {
            let pert = random_perturbation(&p, &mut rng);
            let report = check_inequalities(&p, &pert, lambda).unwrap();
            assert!(
                report.all_hold(),
                "violation at draw {k}: margins {:?}",
                report.margins
            );
            assert!(report.q1 <= report.q2 + report.eps_quad);
        }
    }

    #[test]
    fn forms_are_stable_under_grid_doubling() {
        let g = RadialGrid::default_grid();
        let fine = g.refined();
        let density = |s: f64| {
            let z: f64 = s - 3.0;
            let e = (-0.5 * z * z).exp();
            (e, -z * e, (z * z - 1.0) * e)
        };
        let mut vals = Vec::new();
        for grid in [&g, &fine] {
            let p = solve_stationary(10.0, grid, 1e-10, &opts()).unwrap();
            let mut pert = Perturbation::from_density(&p, density);
            pert.project(&p);
            vals.push((q1(&p, &pert).unwrap(), q2(&p, &pert).unwrap()));
        }
        let (q1c, q2c) = vals[0];
        let (q1f, q2f) = vals[1];
        assert!(
            (q1c - q1f).abs() <= 1e-6 * q1f.abs(),
            "q1 drift {q1c:.10e} vs {q1f:.10e}"
        );
        assert!(
            (q2c - q2f).abs() <= 1e-6 * q2f.abs(),
            "q2 drift {q2c:.10e} vs {q2f:.10e}"
        );
    }

    #[test]
    fn rayleigh_quotients_match_eigenvalues() {
        let g = RadialGrid::default_grid();
        let p = solve_stationary(10.0, &g, 1e-10, &opts()).unwrap();
        let modes = find_radial_eigenvalues(&p, 5.0, 3, &opts()).unwrap();
        for mode in modes.iter().filter(|m| m.eigenvalue > 1e-6) {
            let shot = shoot_radial(&p, mode.eigenvalue, &opts()).unwrap();
            let pert = Perturbation::from_mode(&p, &shot.phi, &shot.dphi, mode.eigenvalue, 1e-10);
            let q1v = q1(&p, &pert).unwrap();
            let q2v = q2(&p, &pert).unwrap();
            let ratio = q2v / q1v;
            assert!(
                (ratio - mode.eigenvalue).abs() < 1e-4 * mode.eigenvalue,
                "Q2/Q1 = {ratio} vs λ = {}",
                mode.eigenvalue
            );
        }
    }

    #[test]
    fn gradient_constants_match_closed_forms() {
        let (c1, c2) = gradient_bound_constants(0.5).unwrap();
        let c1_exact = (6.0 * PI).powf(0.6) / TAU;
        let c2_exact = TAU.powf(1.0 / 3.0) / TAU;
        assert!((c1 - c1_exact).abs() < 1e-15 * c1_exact);
        assert!((c2 - c2_exact).abs() < 1e-15 * c2_exact);
        for i in 1..99 {
            let eps = i as f64 / 100.0;
            let (a, b) = gradient_bound_constants(eps).unwrap();
            assert!(a > 0.0 && b > 0.0);
        }
        assert!(gradient_bound_constants(0.0).is_err());
        assert!(gradient_bound_constants(1.0).is_err());
    }
}
