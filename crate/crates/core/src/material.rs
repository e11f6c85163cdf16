//! Two-phase core–coating ball: equivalent conductivity and first corrector.
//!
//! The unit ball carries conductivity `alpha` on the core |y| < R and `beta` on
//! the shell R < |y| < 1, with θ = R^N the core volume fraction. Inside the
//! ball the first corrector is w_{e_l}(y) = y_l f(r) with
//!
//! ```text
//! f(r) = b̃₁              r < R
//!        b̃₂ + c̃ / r^N     R < r < 1
//!        1               r > 1
//! ```
//!
//! and the coefficients are fixed by continuity of w and of the flux
//! a(r)(f + r f') across r = R and r = 1. The outer flux equals the
//! equivalent conductivity m, which makes the coated ball invisible in a
//! medium of conductivity m.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible distance of θ from {0, 1}.
pub const THETA_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoPhaseProfile {
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    pub dim: usize,
}

impl TwoPhaseProfile {
    pub fn new(alpha: f64, beta: f64, theta: f64, dim: usize) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            theta,
            dim,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.beta.is_finite() && self.theta.is_finite()) {
            return Err(Error::invalid("profile parameters must be finite"));
        }
        if self.alpha <= 0.0 || self.beta <= 0.0 {
            return Err(Error::invalid(format!(
                "conductivities must be positive (alpha={}, beta={})",
                self.alpha, self.beta
            )));
        }
        if self.alpha > self.beta {
            return Err(Error::invalid(format!(
                "core conductivity must not exceed coating conductivity (alpha={} > beta={})",
                self.alpha, self.beta
            )));
        }
        if self.dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if !(THETA_MARGIN..=1.0 - THETA_MARGIN).contains(&self.theta) {
            return Err(Error::Degenerate(format!(
                "volume fraction theta={} outside [{:e}, 1-{:e}]; single-phase media must be modelled explicitly",
                self.theta, THETA_MARGIN, THETA_MARGIN
            )));
        }
        Ok(())
    }

    pub fn core_radius(&self) -> f64 {
        self.theta.powf(1.0 / self.dim as f64)
    }

    /// Conductivity at radius r; the shell value is used for r ≥ R.
    pub fn conductivity_at(&self, r: f64) -> f64 {
        if r < self.core_radius() {
            self.alpha
        } else {
            self.beta
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        self.alpha == self.beta
    }

    /// Same geometry with both conductivities multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.alpha * c, self.beta * c, self.theta, self.dim)
    }
}

/// Radial profile coefficients of the first corrector and the equivalent conductivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstCorrector {
    pub m: f64,
    pub b1t: f64,
    pub b2t: f64,
    pub ct: f64,
}

/// Solves (m−β)/(m+(N−1)β) = θ(α−β)/(α+(N−1)β) for m. The relation is linear in m.
pub fn solve_equivalent_conductivity(profile: &TwoPhaseProfile) -> Result<f64> {
    profile.validate()?;
    let TwoPhaseProfile {
        alpha,
        beta,
        theta,
        dim,
    } = *profile;
    let n1 = dim as f64 - 1.0;
    let rho = theta * (alpha - beta) / (alpha + n1 * beta);
    Ok(beta * (1.0 + n1 * rho) / (1.0 - rho))
}

/// First-corrector coefficients b̃₁, b̃₂, c̃ and m.
///
/// With D = (1−θ)α + (N+θ−1)β the closed forms are b̃₁ = Nβ/D,
/// b̃₂ = (1 − b̃₁θ)/(1−θ) and c̃ = (b̃₁−1)θ/(1−θ). They are evaluated in the
/// algebraically equivalent cancellation-free form c̃ = θ(β−α)/D,
/// b̃₁ = 1 + (1−θ)(β−α)/D, b̃₂ = 1 − c̃, so that α = β gives c̃ = 0 exactly.
pub fn first_corrector(profile: &TwoPhaseProfile) -> Result<FirstCorrector> {
    let m = solve_equivalent_conductivity(profile)?;
    let TwoPhaseProfile {
        alpha,
        beta,
        theta,
        dim,
    } = *profile;
    let n = dim as f64;
    let denom = (1.0 - theta) * alpha + (n + theta - 1.0) * beta;
    let ct = theta * (beta - alpha) / denom;
    let b1t = 1.0 + (1.0 - theta) * (beta - alpha) / denom;
    let b2t = 1.0 - ct;
    Ok(FirstCorrector { m, b1t, b2t, ct })
}

impl FirstCorrector {
    /// Checks α ≤ m ≤ β (to rounding) and c̃ ≥ 0; returns a description of the first violation.
    pub fn check_invariants(&self, profile: &TwoPhaseProfile) -> Result<()> {
        let tol = 1e-12 * profile.beta;
        if self.m < profile.alpha - tol || self.m > profile.beta + tol {
            return Err(Error::Numerical(format!(
                "equivalent conductivity m={} outside [alpha, beta] = [{}, {}]",
                self.m, profile.alpha, profile.beta
            )));
        }
        if self.ct < 0.0 {
            return Err(Error::Numerical(format!(
                "negative shell coefficient c~={}",
                self.ct
            )));
        }
        Ok(())
    }
}

/// Evaluates the radial profile f(r); at r = R and r = 1 the shared value is returned.
pub fn eval_f(fc: &FirstCorrector, profile: &TwoPhaseProfile, r: f64) -> f64 {
    let big_r = profile.core_radius();
    if r <= big_r {
        fc.b1t
    } else if r <= 1.0 {
        fc.b2t + fc.ct / r.powi(profile.dim as i32)
    } else {
        1.0
    }
}

/// Derivative f'(r) (zero in the core and outside the ball).
pub fn eval_f_prime(fc: &FirstCorrector, profile: &TwoPhaseProfile, r: f64) -> f64 {
    let big_r = profile.core_radius();
    if r > big_r && r < 1.0 {
        let n = profile.dim as i32;
        -(n as f64) * fc.ct / r.powi(n + 1)
    } else {
        0.0
    }
}

/// Residuals of the two flux conditions: continuity at r = R and outer flux = m.
pub fn flux_jump_residuals(fc: &FirstCorrector, profile: &TwoPhaseProfile) -> (f64, f64) {
    let n = profile.dim as f64;
    let theta = profile.theta;
    let inner =
        (profile.alpha * fc.b1t - profile.beta * (fc.b2t + (1.0 - n) * fc.ct / theta)).abs();
    let outer = (profile.beta * (fc.b2t + (1.0 - n) * fc.ct) - fc.m).abs();
    (inner, outer)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConductivityBounds {
    pub harmonic: f64,
    pub arithmetic: f64,
    pub hs_lower: f64,
}

/// Harmonic and arithmetic means and the Hashin–Shtrikman value attained by the α-core assemblage.
pub fn conductivity_bounds(profile: &TwoPhaseProfile) -> Result<ConductivityBounds> {
    let hs_lower = solve_equivalent_conductivity(profile)?;
    let TwoPhaseProfile {
        alpha, beta, theta, ..
    } = *profile;
    Ok(ConductivityBounds {
        harmonic: 1.0 / (theta / alpha + (1.0 - theta) / beta),
        arithmetic: theta * alpha + (1.0 - theta) * beta,
        hs_lower,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(alpha: f64, beta: f64, theta: f64, dim: usize) -> TwoPhaseProfile {
        TwoPhaseProfile::new(alpha, beta, theta, dim).unwrap()
    }

    #[test]
    fn homogeneous_medium_is_identity() {
        let prof = p(2.0, 2.0, 0.5, 3);
        assert_eq!(solve_equivalent_conductivity(&prof).unwrap(), 2.0);
        let fc = first_corrector(&prof).unwrap();
        assert_eq!(fc.ct, 0.0);
        assert_eq!(fc.b1t, 1.0);
        assert_eq!(fc.b2t, 1.0);
        assert_eq!(eval_f(&fc, &prof, 0.3), 1.0);
    }

    #[test]
    fn equivalent_conductivity_reference_values() {
        let m2 = solve_equivalent_conductivity(&p(1.0, 2.0, 0.5, 2)).unwrap();
        assert!((m2 - 10.0 / 7.0).abs() < 1e-14);
        let m3 = solve_equivalent_conductivity(&p(1.0, 2.0, 0.5, 3)).unwrap();
        assert!((m3 - 16.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn one_dimensional_value_is_harmonic_mean() {
        let prof = p(1.0, 3.0, 0.25, 1);
        let b = conductivity_bounds(&prof).unwrap();
        assert!((b.hs_lower - b.harmonic).abs() < 1e-14);
    }

    #[test]
    fn first_corrector_reference_values() {
        let prof = p(1.0, 2.0, 0.5, 2);
        let fc = first_corrector(&prof).unwrap();
        assert!((fc.b1t - 8.0 / 7.0).abs() < 1e-14);
        assert!((fc.b2t - 6.0 / 7.0).abs() < 1e-14);
        assert!((fc.ct - 1.0 / 7.0).abs() < 1e-14);
        assert!((2.0 * (fc.b2t - fc.ct) - 10.0 / 7.0).abs() < 1e-14);

        let prof3 = p(1.0, 2.0, 0.5, 3);
        let fc3 = first_corrector(&prof3).unwrap();
        assert!((fc3.b1t - 12.0 / 11.0).abs() < 1e-14);
        assert!((fc3.b2t - 10.0 / 11.0).abs() < 1e-14);
        assert!((fc3.ct - 1.0 / 11.0).abs() < 1e-14);
        assert!((2.0 * (fc3.b2t - 2.0 * fc3.ct) - 16.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn pn2_literal_form_agrees() {
        let prof = p(0.3, 4.0, 0.37, 3);
        let fc = first_corrector(&prof).unwrap();
        let n = 3.0;
        let th = prof.theta;
        let b1 = n * prof.beta / ((1.0 - th) * prof.alpha + (n + th - 1.0) * prof.beta);
        let b2 = (1.0 - b1 * th) / (1.0 - th);
        let c = (b1 - 1.0) * th / (1.0 - th);
        assert!((fc.b1t - b1).abs() < 1e-14);
        assert!((fc.b2t - b2).abs() < 1e-14);
        assert!((fc.ct - c).abs() < 1e-14);
    }

    #[test]
    fn f_is_continuous_at_interfaces() {
        let prof = p(1.0, 2.0, 0.5, 2);
        let fc = first_corrector(&prof).unwrap();
        let big_r = prof.core_radius();
        assert!((big_r - 0.5_f64.sqrt()).abs() < 1e-15);
        let shell_at_r = fc.b2t + fc.ct / big_r.powi(2);
        assert!((shell_at_r - 8.0 / 7.0).abs() < 1e-14);
        assert!((eval_f(&fc, &prof, big_r) - 8.0 / 7.0).abs() < 1e-14);
        assert!((eval_f(&fc, &prof, 1.0) - 1.0).abs() < 1e-15);
        assert_eq!(eval_f(&fc, &prof, 1.5), 1.0);
    }

    #[test]
    fn flux_residuals_reference_case() {
        let prof = p(1.0, 2.0, 0.5, 2);
        let fc = first_corrector(&prof).unwrap();
        let (a, b) = flux_jump_residuals(&fc, &prof);
        assert!(a < 1e-12 && b < 1e-12);
        let hom = p(3.0, 3.0, 0.2, 4);
        let fch = first_corrector(&hom).unwrap();
        assert_eq!(flux_jump_residuals(&fch, &hom), (0.0, 0.0));
    }

    #[test]
    fn bounds_reference_case() {
        let b = conductivity_bounds(&p(1.0, 2.0, 0.5, 2)).unwrap();
        assert!((b.harmonic - 4.0 / 3.0).abs() < 1e-15);
        assert!((b.arithmetic - 1.5).abs() < 1e-15);
        assert!((b.hs_lower - 10.0 / 7.0).abs() < 1e-14);
        let h = conductivity_bounds(&p(2.5, 2.5, 0.4, 2)).unwrap();
        assert!((h.harmonic - 2.5).abs() < 1e-15);
        assert!((h.arithmetic - 2.5).abs() < 1e-15);
        assert!((h.hs_lower - 2.5).abs() < 1e-15);
    }

    #[test]
    fn limits_in_theta() {
        let lo = solve_equivalent_conductivity(&p(1.0, 2.0, 1e-6, 3)).unwrap();
        let hi = solve_equivalent_conductivity(&p(1.0, 2.0, 1.0 - 1e-6, 3)).unwrap();
        assert!((lo - 2.0).abs() < 1e-4);
        assert!((hi - 1.0).abs() < 1e-4);
    }

    #[test]
    fn rejects_invalid_profiles() {
        assert!(matches!(
            TwoPhaseProfile::new(1.0, 2.0, 1.0, 2),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            TwoPhaseProfile::new(1.0, 2.0, 0.0, 2),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            TwoPhaseProfile::new(3.0, 2.0, 0.5, 2),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            TwoPhaseProfile::new(-1.0, 2.0, 0.5, 2),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            TwoPhaseProfile::new(1.0, 2.0, 0.5, 0),
            Err(Error::InvalidInput(_))
        ));
        assert!(TwoPhaseProfile::new(1.0, 2.0, 1e-9, 2).is_ok());
    }

    fn admissible() -> impl Strategy<Value = TwoPhaseProfile> {
        (0.01f64..1.0, 0.1f64..10.0, 0.001f64..0.999, 1usize..=6)
            .prop_map(|(ratio, beta, theta, dim)| p(ratio * beta, beta, theta, dim))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn corrector_identities_hold(prof in admissible()) {
            let fc = first_corrector(&prof).unwrap();
            fc.check_invariants(&prof).unwrap();
            prop_assert!((fc.b2t + fc.ct - 1.0).abs() <= 1e-12);
            let (inner, outer) = flux_jump_residuals(&fc, &prof);
            prop_assert!(inner <= 1e-12 * prof.beta, "inner {inner}");
            prop_assert!(outer <= 1e-12 * prof.beta, "outer {outer}");
            let b = conductivity_bounds(&prof).unwrap();
            prop_assert!(b.harmonic <= b.hs_lower * (1.0 + 1e-14));
            prop_assert!(b.hs_lower <= b.arithmetic * (1.0 + 1e-14));
        }

        #[test]
        fn m_non_increasing_in_theta(prof in admissible(), dt in 0.0f64..0.5) {
            let theta2 = (prof.theta + dt).min(0.999);
            let m1 = solve_equivalent_conductivity(&prof).unwrap();
            let m2 = solve_equivalent_conductivity(&p(prof.alpha, prof.beta, theta2, prof.dim)).unwrap();
            prop_assert!(m2 <= m1 * (1.0 + 1e-14));
        }
    }
}
