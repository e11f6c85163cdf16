//! Dispersion density of one core–coating ball and the periodic
//! Hashin–Shtrikman dispersion coefficient of a packing.
//!
//! With the direction η = e_k, the second-order cell function combined with
//! the square of the first-order one is
//!
//! ```text
//! X(y) = w_kk(y) − y_k² (f(r) − 1)² / 2 = y_k² G(r) + h(r),   G = g − (f−1)²/2,
//! ```
//!
//! and the density is the energy J = ∫_B a |∇X|² dy ≥ 0, which vanishes iff the
//! ball is homogeneous. Each ball of radius ε contributes −ε^{N+2} J to the
//! coefficient on the unit torus. The two bracket forms as printed in the
//! source derivation are evaluated by [`printed_brackets`] for reporting only:
//! neither vanishes on a homogeneous ball.

use serde::Serialize;

use crate::corrector::{eval_g_h, eval_g_h_prime, solve_regular, SecondCorrector};
use crate::error::{Error, Result};
use crate::geometry::{
    compensated_sum, sphere_mean_y2, sphere_mean_y4, unit_ball_volume, unit_sphere_area,
};
use crate::material::{eval_f, eval_f_prime, first_corrector, FirstCorrector, TwoPhaseProfile};
use crate::quadrature::GaussLegendre;

/// Slack on Σ ω_N ε^N when checking that radii fit on the unit torus.
pub const RADII_COVERAGE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadSpec {
    /// Gauss–Legendre nodes per subinterval.
    pub nodes: usize,
    /// Relative tolerance between the base rule and its doubling.
    pub tol: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            nodes: 64,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionDensity {
    pub j_value: f64,
    pub quad_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionResult {
    pub d_phs: f64,
    pub sum_radii_n2: f64,
    pub cell_volume: f64,
    pub density: DispersionDensity,
}

/// Values of the printed bracket forms, kept for comparison only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrintedBrackets {
    /// ∫ a|∇(y_k² f²/2)|² + m ∫ y_k² (f−1)²/2.
    pub phs_density: f64,
    /// ∫ f² (m − a|∇(y_k f)|²) y_k², read with the same integrand in core and shell.
    pub frn: f64,
}

/// Ingredients of X at radius r: (a, G, G', h').
fn x_parts(
    fc: &FirstCorrector,
    sc: &SecondCorrector,
    profile: &TwoPhaseProfile,
    r: f64,
) -> (f64, f64, f64, f64) {
    let a = profile.conductivity_at(r);
    let f = eval_f(fc, profile, r);
    let fp = if r < profile.core_radius() {
        0.0
    } else {
        eval_f_prime(fc, profile, r)
    };
    let (g, _) = eval_g_h(sc, profile, r).expect("radius inside the ball");
    let (gp, hp) = eval_g_h_prime(sc, profile, r).expect("radius inside the ball");
    (a, g - 0.5 * (f - 1.0).powi(2), gp - (f - 1.0) * fp, hp)
}

/// Sphere integral of a|∇X|² at radius r (the radial integrand of J).
pub fn j_radial_integrand(
    fc: &FirstCorrector,
    sc: &SecondCorrector,
    profile: &TwoPhaseProfile,
    r: f64,
) -> f64 {
    let n = profile.dim;
    let (a, g, gp, hp) = x_parts(fc, sc, profile, r);
    let m2 = sphere_mean_y2(n, r);
    let m4 = sphere_mean_y4(n, r);
    // |∇X|² = 4y²G² + 4y⁴GG'/r + 4y²Gh'/r + y⁴G'² + 2y²G'h' + h'²  (y = y_k)
    let mean = 4.0 * g * g * m2
        + 4.0 * g * gp * m4 / r
        + 4.0 * g * hp * m2 / r
        + gp * gp * m4
        + 2.0 * gp * hp * m2
        + hp * hp;
    a * mean * unit_sphere_area(n) * r.powi(n as i32 - 1)
}

/// Pointwise a|∇X|² at y in Cartesian form (used by volume-sampling oracles).
pub fn j_point_density(
    fc: &FirstCorrector,
    sc: &SecondCorrector,
    profile: &TwoPhaseProfile,
    y: &[f64],
    k: usize,
) -> f64 {
    let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r >= 1.0 || r == 0.0 {
        return 0.0;
    }
    let (a, g, gp, hp) = x_parts(fc, sc, profile, r);
    let yk = y[k];
    let radial = yk * yk * gp + hp;
    let mut s = 0.0;
    for (i, yi) in y.iter().enumerate() {
        let mut c = radial * yi / r;
        if i == k {
            c += 2.0 * yk * g;
        }
        s += c * c;
    }
    a * s
}

fn integrate_split<F: Fn(f64) -> f64 + Copy>(f: F, big_r: f64, nodes: usize, pieces: usize) -> f64 {
    let gl = GaussLegendre::new(nodes);
    gl.integrate_composite(f, 0.0, big_r, pieces) + gl.integrate_composite(f, big_r, 1.0, pieces)
}

/// Evaluates a radial integral with the base rule and a doubled rule.
fn checked_integral<F: Fn(f64) -> f64 + Copy>(
    f: F,
    big_r: f64,
    quad: &QuadSpec,
) -> Result<(f64, f64)> {
    if quad.nodes == 0 {
        return Err(Error::invalid("quadrature needs at least one node"));
    }
    let coarse = integrate_split(f, big_r, quad.nodes, 1);
    let fine = integrate_split(f, big_r, quad.nodes, 2);
    let err = (fine - coarse).abs();
    let scale = fine.abs().max(f64::MIN_POSITIVE);
    if err > quad.tol * scale && err > 1e-300 {
        return Err(Error::QuadratureNonconvergence {
            relative_change: err / scale,
        });
    }
    Ok((fine, err))
}

/// J = ∫_B a|∇X|² for the ball described by `profile`.
pub fn ball_dispersion_density(
    fc: &FirstCorrector,
    profile: &TwoPhaseProfile,
    quad: &QuadSpec,
) -> Result<DispersionDensity> {
    profile.validate()?;
    let sc = solve_regular(fc, profile)?;
    if profile.is_homogeneous() {
        return Ok(DispersionDensity {
            j_value: 0.0,
            quad_error: 0.0,
        });
    }
    let (j, err) = checked_integral(
        |r| j_radial_integrand(fc, &sc, profile, r),
        profile.core_radius(),
        quad,
    )?;
    Ok(DispersionDensity {
        j_value: j.max(0.0),
        quad_error: err,
    })
}

/// Convenience wrapper computing the first corrector internally.
pub fn density_for(profile: &TwoPhaseProfile, quad: &QuadSpec) -> Result<DispersionDensity> {
    ball_dispersion_density(&first_corrector(profile)?, profile, quad)
}

pub fn printed_brackets(
    fc: &FirstCorrector,
    profile: &TwoPhaseProfile,
    quad: &QuadSpec,
) -> Result<PrintedBrackets> {
    profile.validate()?;
    let n = profile.dim;
    let big_r = profile.core_radius();
    let area = unit_sphere_area(n);
    let parts = |r: f64| {
        let a = profile.conductivity_at(r);
        let f = eval_f(fc, profile, r);
        let fp = if r < big_r {
            0.0
        } else {
            eval_f_prime(fc, profile, r)
        };
        (
            a,
            f,
            fp,
            sphere_mean_y2(n, r),
            sphere_mean_y4(n, r),
            area * r.powi(n as i32 - 1),
        )
    };
    let phs_density = |r: f64| {
        let (a, f, fp, m2, m4, w) = parts(r);
        let grad = f.powi(4) * m2 + (f * f * fp * fp + 2.0 * f.powi(3) * fp / r) * m4;
        (a * grad + fc.m * m2 * 0.5 * (f - 1.0).powi(2)) * w
    };
    let frn = |r: f64| {
        let (a, f, fp, m2, m4, w) = parts(r);
        (f * f * (fc.m - a * f * f) * m2 - a * f * f * (2.0 * f * fp / r + fp * fp) * m4) * w
    };
    let loose = QuadSpec { tol: 1e-6, ..*quad };
    Ok(PrintedBrackets {
        phs_density: checked_integral(phs_density, big_r, &loose)?.0,
        frn: checked_integral(frn, big_r, &loose)?.0,
    })
}

/// d_PHS = −Σ ε_p^{N+2} J on the unit torus.
pub fn dispersion_phs(
    density: &DispersionDensity,
    radii: &[f64],
    dim: usize,
) -> Result<DispersionResult> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    for (i, r) in radii.iter().enumerate() {
        if !(*r > 0.0 && *r <= 0.5) {
            return Err(Error::invalid(format!("radius {i} = {r} outside (0, 1/2]")));
        }
    }
    let mut sorted = radii.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let coverage =
        unit_ball_volume(dim) * compensated_sum(sorted.iter().map(|r| r.powi(dim as i32)));
    if coverage > 1.0 + RADII_COVERAGE_TOL {
        return Err(Error::InfeasibleRadii { coverage });
    }
    let sum = compensated_sum(sorted.iter().map(|r| r.powi(dim as i32 + 2)));
    let d = -sum * density.j_value;
    Ok(DispersionResult {
        d_phs: if d == 0.0 { 0.0 } else { d },
        sum_radii_n2: sum,
        cell_volume: 1.0,
        density: *density,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleFactors {
    /// κ_n^{−2} Σ_p ε_{p,n}^{N+2} per family.
    pub factors: Vec<f64>,
    /// Σ_p ε_{p,n}^N per family, an upper bound for each factor.
    pub bounds: Vec<f64>,
    /// Maximum of the factors over the trailing window.
    pub limsup_estimate: f64,
}

pub fn hs_scale_factor(families: &[Vec<f64>], dim: usize, window: usize) -> Result<ScaleFactors> {
    if families.is_empty() {
        return Err(Error::invalid("at least one radii family is required"));
    }
    if window == 0 {
        return Err(Error::invalid("window must be positive"));
    }
    let mut factors = Vec::with_capacity(families.len());
    let mut bounds = Vec::with_capacity(families.len());
    for (n, fam) in families.iter().enumerate() {
        if fam.is_empty() {
            return Err(Error::invalid(format!("radii family {n} is empty")));
        }
        if fam.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::invalid(format!(
                "radii family {n} has a non-positive radius"
            )));
        }
        let mut sorted = fam.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let kappa = sorted[0];
        let s2 = compensated_sum(sorted.iter().map(|r| r.powi(dim as i32 + 2)));
        let sn = compensated_sum(sorted.iter().map(|r| r.powi(dim as i32)));
        let factor = s2 / (kappa * kappa);
        debug_assert!(factor <= sn * (1.0 + 1e-12));
        factors.push(factor);
        bounds.push(sn);
    }
    let start = factors.len().saturating_sub(window);
    let limsup_estimate = factors[start..]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ScaleFactors {
        factors,
        bounds,
        limsup_estimate,
    })
}

/// JSON record of a dispersion run.
#[derive(Debug, Clone, Serialize)]
pub struct DispersionRecord {
    pub d_phs: f64,
    pub sum_radii_n2: f64,
    pub j_value: f64,
    pub quad_error: f64,
    pub profile: TwoPhaseProfile,
}

impl DispersionRecord {
    pub fn new(result: &DispersionResult, profile: &TwoPhaseProfile) -> Self {
        Self {
            d_phs: result.d_phs,
            sum_radii_n2: result.sum_radii_n2,
            j_value: result.density.j_value,
            quad_error: result.density.quad_error,
            profile: *profile,
        }
    }
}

/// CSV table for parameter sweeps: alpha,beta,theta,dim,m,j_value,d_phs.
pub fn sweep_csv(rows: &[(TwoPhaseProfile, f64, DispersionResult)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["alpha", "beta", "theta", "dim", "m", "j_value", "d_phs"])?;
    for (p, m, res) in rows {
        w.write_record([
            format!("{:.16e}", p.alpha),
            format!("{:.16e}", p.beta),
            format!("{:.16e}", p.theta),
            p.dim.to_string(),
            format!("{m:.16e}"),
            format!("{:.16e}", res.density.j_value),
            format!("{:.16e}", res.d_phs),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
