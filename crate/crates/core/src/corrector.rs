//! Second-order corrector w_kl(y) = y_k y_l g(r) + h(r) δ_kl on the unit ball.
//!
//! In each region g(r) = b + c/r^N + d/r^{N+2} and h(r) = p/r^N + q r² + t.
//! Substituting into the cell equation forces c₁ = 0 and c₂ = −c̃; the
//! remaining ten unknowns (b₁,d₁,p₁,q₁,t₁,b₂,d₂,p₂,q₂,t₂) are tied by twelve
//! linear equations:
//!
//! | row            | meaning                                   |
//! |----------------|-------------------------------------------|
//! | core_singular  | core 1/r^{N+2} balance: d₁ + N p₁ = 0     |
//! | core_const     | core constant balance                     |
//! | shell_singular | shell 1/r^{N+2} balance: d₂ + N p₂ = 0    |
//! | shell_const    | shell constant balance                    |
//! | g_cont         | continuity of g at R                      |
//! | h_cont         | continuity of h at R                      |
//! | g_outer        | g(1) = 0                                  |
//! | h_outer        | h(1) = 0                                  |
//! | g_flux         | continuity of the y_k y_l normal flux at R|
//! | h_flux         | continuity of a h' at R                   |
//! | g_neumann      | zero Neumann data for the y_k y_l part    |
//! | h_neumann      | zero Neumann data for h                   |
//!
//! Two solutions are provided. [`solve_closed_form`] drops shell_const/h_flux, solves
//! the remaining ten equations in closed form and satisfies all twelve. Its
//! core coefficients d₁ = −N p₁ are in general non-zero, so it is singular at
//! the origin. [`solve_regular`] imposes d₁ = p₁ = 0 and drops the two Neumann
//! rows; it is the finite-energy solution of the Dirichlet problem and is the
//! one used for dispersion energies. Its Neumann data is generally non-zero.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::material::{eval_f, eval_f_prime, FirstCorrector, TwoPhaseProfile};

pub const ROW_LABELS: [&str; 12] = [
    "core_singular",
    "core_const",
    "shell_singular",
    "shell_const",
    "g_cont",
    "h_cont",
    "g_outer",
    "h_outer",
    "g_flux",
    "h_flux",
    "g_neumann",
    "h_neumann",
];

pub const UNKNOWN_LABELS: [&str; 10] = ["b1", "d1", "p1", "q1", "t1", "b2", "d2", "p2", "q2", "t2"];

/// Relative singular-value threshold used for rank decisions.
pub const RANK_THRESHOLD: f64 = 1e-9;

/// Inner radius below which the corrector is not evaluated.
pub const R_FLOOR: f64 = 1e-3;

/// Coefficients of g and h in both regions (diagonal case k = l).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondCorrector {
    pub b1: f64,
    pub c1: f64,
    pub d1: f64,
    pub p1: f64,
    pub q1: f64,
    pub t1: f64,
    pub b2: f64,
    pub c2: f64,
    pub d2: f64,
    pub p2: f64,
    pub q2: f64,
    pub t2: f64,
}

impl SecondCorrector {
    /// The ten free unknowns in [`UNKNOWN_LABELS`] order.
    pub fn unknowns(&self) -> [f64; 10] {
        [
            self.b1, self.d1, self.p1, self.q1, self.t1, self.b2, self.d2, self.p2, self.q2,
            self.t2,
        ]
    }

    pub fn from_unknowns(x: &[f64], ct: f64) -> Self {
        Self {
            b1: x[0],
            c1: 0.0,
            d1: x[1],
            p1: x[2],
            q1: x[3],
            t1: x[4],
            b2: x[5],
            c2: -ct,
            d2: x[6],
            p2: x[7],
            q2: x[8],
            t2: x[9],
        }
    }

    /// Whether the core coefficients are free of r^{-N}, r^{-N-2} terms.
    pub fn is_regular_at_origin(&self) -> bool {
        self.c1 == 0.0 && self.d1 == 0.0 && self.p1 == 0.0
    }
}

/// Coefficients of y_k y_l and δ_kl in the source of div(a ∇w_kl).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhsTerms {
    pub quadratic: f64,
    pub constant: f64,
}

/// Reduced source of the second-order cell problem at radius r.
///
/// Returns the right-hand sides of the radial coefficient equations:
/// `quadratic = −[a f'/r + (a(f−1))'/r]` and `constant = −[a − m + 2a(f−1)]`.
pub fn rhs_reduction(fc: &FirstCorrector, profile: &TwoPhaseProfile, r: f64) -> Result<RhsTerms> {
    let big_r = profile.core_radius();
    if !(r > 0.0 && r < 1.0) || r == big_r {
        return Err(Error::invalid(format!(
            "rhs_reduction needs r in (0,R) or (R,1); got r={r} with R={big_r}"
        )));
    }
    let a = profile.conductivity_at(r);
    let f = eval_f(fc, profile, r);
    let fp = eval_f_prime(fc, profile, r);
    Ok(RhsTerms {
        quadratic: -2.0 * a * fp / r,
        constant: -(a - fc.m + 2.0 * a * (f - 1.0)),
    })
}

struct Powers {
    n: f64,
    rn: f64,
    rn2: f64,
    r: f64,
}

impl Powers {
    fn new(profile: &TwoPhaseProfile) -> Self {
        let r = profile.core_radius();
        let rn = profile.theta;
        Self {
            n: profile.dim as f64,
            rn,
            rn2: rn * r * r,
            r,
        }
    }
}

/// Closed-form solution that enforces the zero Neumann rows (g_neumann, h_neumann)
/// in place of shell_const and h_flux.
pub fn solve_closed_form(
    fc: &FirstCorrector,
    profile: &TwoPhaseProfile,
) -> Result<SecondCorrector> {
    profile.validate()?;
    let Powers { n, rn, rn2, r } = Powers::new(profile);
    let (alpha, beta) = (profile.alpha, profile.beta);
    let ct = fc.ct;
    let np2 = n + 2.0;

    let d2 = n * ct / np2;
    let p2 = -ct / np2;
    let q2 = -n * ct / (2.0 * np2);
    let b2 = 2.0 * ct / np2;
    let t2 = 0.5 * ct;

    // g₂(R): shell value that the core must match.
    let g_r = (2.0 / np2 - 1.0 / rn + n / (np2 * rn2)) * ct;
    let shell_flux = beta * (fc.b2t + ct / rn - 1.0)
        + beta * (4.0 / np2 + (n - 2.0) / rn - n * n / (np2 * rn2)) * ct;
    let core_jump = alpha * (fc.b1t - 1.0);
    // α(N+2)b₁ = β-flux − α(b̃₁−1) + αN g₂(R)
    let b1 = (shell_flux - core_jump + alpha * n * g_r) / (alpha * np2);
    // α(N+2)d₁/R^{N+2} = −(β-flux − α(b̃₁−1)) + 2α g₂(R)
    let d1 = (-(shell_flux - core_jump) + 2.0 * alpha * g_r) / (alpha * np2) * rn2;
    let p1 = -d1 / n;
    let q1 =
        (-(alpha - fc.m) - 2.0 * alpha * (fc.b1t - 1.0) - 2.0 * alpha * b1) / (2.0 * n * alpha);
    let t1 = p2 / rn + q2 * r * r + t2 - p1 / rn - q1 * r * r;

    Ok(SecondCorrector {
        b1,
        c1: 0.0,
        d1,
        p1,
        q1,
        t1,
        b2,
        c2: -ct,
        d2,
        p2,
        q2,
        t2,
    })
}

/// Finite-energy solution of the Dirichlet problem: d₁ = p₁ = 0, Neumann rows not imposed.
pub fn solve_regular(fc: &FirstCorrector, profile: &TwoPhaseProfile) -> Result<SecondCorrector> {
    profile.validate()?;
    let Powers { n, rn, rn2, r } = Powers::new(profile);
    let (alpha, beta) = (profile.alpha, profile.beta);
    let ct = fc.ct;

    // g-part: b₂ = c̃ − d₂ (Dirichlet), b₁ = g₂(R) (continuity), flux continuity fixes d₂.
    let inv_rn2 = 1.0 / rn2;
    let coef = 2.0 * alpha * (inv_rn2 - 1.0) + beta * (2.0 + n * inv_rn2);
    let rhs = beta * (2.0 * ct + (n - 1.0) * ct / rn + fc.b2t - 1.0)
        - alpha * (2.0 * ct - 2.0 * ct / rn + fc.b1t - 1.0);
    let d2 = rhs / coef;
    let b2 = ct - d2;
    let b1 = b2 - ct / rn + d2 * inv_rn2;

    // h-part: constant balances fix q, the r^{-N-2} balance fixes p₂, Dirichlet and continuity fix t.
    let k1 = -(alpha - fc.m + 2.0 * alpha * (fc.b1t - 1.0)) / (2.0 * alpha);
    let k2 = -(beta - fc.m + 2.0 * beta * (fc.b2t - 1.0)) / (2.0 * beta);
    let q1 = (k1 - b1) / n;
    let q2 = (k2 - b2) / n;
    let p2 = -d2 / n;
    let t2 = -p2 - q2;
    let t1 = p2 / rn + q2 * r * r + t2 - q1 * r * r;

    Ok(SecondCorrector {
        b1,
        c1: 0.0,
        d1: 0.0,
        p1: 0.0,
        q1,
        t1,
        b2,
        c2: -ct,
        d2,
        p2,
        q2,
        t2,
    })
}

/// The twelve coefficient equations A x = rhs in the unknowns of [`UNKNOWN_LABELS`].
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorSystem {
    pub matrix: [[f64; 10]; 12],
    pub rhs: [f64; 12],
    pub row_labels: [&'static str; 12],
}

pub fn assemble_system(fc: &FirstCorrector, profile: &TwoPhaseProfile) -> Result<CorrectorSystem> {
    profile.validate()?;
    let Powers { n, rn, rn2, r } = Powers::new(profile);
    let (alpha, beta, m, ct) = (profile.alpha, profile.beta, fc.m, fc.ct);
    let rn1 = rn * r;
    let rn3 = rn2 * r;
    let mut a = [[0.0; 10]; 12];
    let mut b = [0.0; 12];
    const B1: usize = 0;
    const D1: usize = 1;
    const P1: usize = 2;
    const Q1: usize = 3;
    const T1: usize = 4;
    const B2: usize = 5;
    const D2: usize = 6;
    const P2: usize = 7;
    const Q2: usize = 8;
    const T2: usize = 9;

    // core_singular
    a[0][D1] = 1.0;
    a[0][P1] = n;
    // core_const
    a[1][B1] = 2.0 * alpha;
    a[1][Q1] = 2.0 * n * alpha;
    b[1] = -(alpha - m + 2.0 * alpha * (fc.b1t - 1.0));
    // shell_singular
    a[2][D2] = 1.0;
    a[2][P2] = n;
    // shell_const
    a[3][B2] = 2.0 * beta;
    a[3][Q2] = 2.0 * n * beta;
    b[3] = -(beta - m + 2.0 * beta * (fc.b2t - 1.0));
    // g_cont
    a[4][B1] = 1.0;
    a[4][D1] = 1.0 / rn2;
    a[4][B2] = -1.0;
    a[4][D2] = -1.0 / rn2;
    b[4] = -ct / rn;
    // h_cont
    a[5][P1] = 1.0 / rn;
    a[5][Q1] = r * r;
    a[5][T1] = 1.0;
    a[5][P2] = -1.0 / rn;
    a[5][Q2] = -r * r;
    a[5][T2] = -1.0;
    // g_outer
    a[6][B2] = 1.0;
    a[6][D2] = 1.0;
    b[6] = ct;
    // h_outer
    a[7][P2] = 1.0;
    a[7][Q2] = 1.0;
    a[7][T2] = 1.0;
    // g_flux: α[g₁' + 2g₁/r + (b̃₁−1)/r] = β[g₂' + 2g₂/r + (f₂−1)/r] at r = R
    a[8][B1] = 2.0 * alpha / r;
    a[8][D1] = -n * alpha / rn3;
    a[8][B2] = -2.0 * beta / r;
    a[8][D2] = n * beta / rn3;
    b[8] = beta * ((n - 1.0) * ct / rn1 + (fc.b2t - 1.0) / r) - alpha * (fc.b1t - 1.0) / r;
    // h_flux: α h₁'(R) = β h₂'(R)
    a[9][P1] = -n * alpha / rn1;
    a[9][Q1] = 2.0 * alpha * r;
    a[9][P2] = n * beta / rn1;
    a[9][Q2] = -2.0 * beta * r;
    // g_neumann: g₂'(1) + 2 g₂(1) = 0
    a[10][B2] = 2.0;
    a[10][D2] = -n;
    b[10] = -(n - 2.0) * ct;
    // h_neumann: h₂'(1) = 0
    a[11][P2] = -n;
    a[11][Q2] = 2.0;

    Ok(CorrectorSystem {
        matrix: a,
        rhs: b,
        row_labels: ROW_LABELS,
    })
}

impl CorrectorSystem {
    fn dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(12, 10, |i, j| self.matrix[i][j])
    }

    /// Per-row residual A x − rhs.
    pub fn residuals(&self, sc: &SecondCorrector) -> [f64; 12] {
        let x = sc.unknowns();
        let mut out = [0.0; 12];
        for (i, row) in self.matrix.iter().enumerate() {
            let lhs: f64 = row.iter().zip(&x).map(|(a, x)| a * x).sum();
            out[i] = lhs - self.rhs[i];
        }
        out
    }

    pub fn max_abs_residual(&self, sc: &SecondCorrector) -> f64 {
        self.residuals(sc)
            .iter()
            .fold(0.0_f64, |m, r| m.max(r.abs()))
    }

    /// Numerical rank of the coefficient matrix and of the augmented matrix.
    pub fn ranks(&self) -> (usize, usize) {
        let a = self.dmatrix();
        let aug = DMatrix::from_fn(12, 11, |i, j| {
            if j < 10 {
                self.matrix[i][j]
            } else {
                self.rhs[i]
            }
        });
        (numerical_rank(a), numerical_rank(aug))
    }

    /// Least-squares solution of all twelve rows.
    pub fn least_squares(&self, ct: f64) -> Result<SecondCorrector> {
        let a = self.dmatrix();
        let b = DVector::from_row_slice(&self.rhs);
        let svd = a.svd(true, true);
        let smax = svd.singular_values.max();
        let x = svd
            .solve(&b, RANK_THRESHOLD * smax)
            .map_err(|e| Error::Numerical(format!("least-squares solve failed: {e}")))?;
        Ok(SecondCorrector::from_unknowns(x.as_slice(), ct))
    }
}

fn numerical_rank(m: DMatrix<f64>) -> usize {
    let sv = m.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > RANK_THRESHOLD * smax).count()
}

/// Residuals of the two rows the closed form does not impose: (shell_const, h_flux).
pub fn verify_consistency(
    sc: &SecondCorrector,
    fc: &FirstCorrector,
    profile: &TwoPhaseProfile,
) -> (f64, f64) {
    let n = profile.dim as f64;
    let r = profile.core_radius();
    let rn1 = profile.theta * r;
    let beta = profile.beta;
    let alpha = profile.alpha;
    let r82 =
        (beta * (2.0 * sc.b2 + 2.0 * n * sc.q2) + (beta - fc.m) + 2.0 * beta * (fc.b2t - 1.0))
            .abs();
    let lhs112 = alpha * (-n * sc.p1 / rn1 + 2.0 * sc.q1 * r);
    let rhs112 = beta * (-n * sc.p2 / rn1 + 2.0 * sc.q2 * r);
    (r82, (lhs112 - rhs112).abs())
}

/// Both sides of the inner flux identity for h evaluate to R β N/(N+2) (R^{-(N+2)} − 1) c̃.
pub fn h_flux_identity_value(fc: &FirstCorrector, profile: &TwoPhaseProfile) -> f64 {
    let n = profile.dim as f64;
    let r = profile.core_radius();
    let rn2 = profile.theta * r * r;
    r * profile.beta * n / (n + 2.0) * (1.0 / rn2 - 1.0) * fc.ct
}

/// Sides of h_flux (α h₁'(R), β h₂'(R)).
pub fn h_flux_sides(sc: &SecondCorrector, profile: &TwoPhaseProfile) -> (f64, f64) {
    let n = profile.dim as f64;
    let r = profile.core_radius();
    let rn1 = profile.theta * r;
    (
        profile.alpha * (-n * sc.p1 / rn1 + 2.0 * sc.q1 * r),
        profile.beta * (-n * sc.p2 / rn1 + 2.0 * sc.q2 * r),
    )
}

/// (g(r), h(r)) in the region containing r; zero outside the ball.
pub fn eval_g_h(sc: &SecondCorrector, profile: &TwoPhaseProfile, r: f64) -> Result<(f64, f64)> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::invalid(format!(
            "radius must be non-negative, got {r}"
        )));
    }
    if r >= 1.0 {
        return Ok((0.0, 0.0));
    }
    let n = profile.dim as i32;
    let inner = r <= profile.core_radius();
    let (b, c, d, p, q, t) = if inner {
        (sc.b1, sc.c1, sc.d1, sc.p1, sc.q1, sc.t1)
    } else {
        (sc.b2, sc.c2, sc.d2, sc.p2, sc.q2, sc.t2)
    };
    if r == 0.0 {
        if c != 0.0 || d != 0.0 || p != 0.0 {
            return Err(Error::invalid("corrector is singular at r = 0"));
        }
        return Ok((b, t));
    }
    let rn = r.powi(n);
    let g = b + c / rn + d / (rn * r * r);
    let h = p / rn + q * r * r + t;
    Ok((g, h))
}

/// Radial derivatives (g'(r), h'(r)); zero outside the ball.
pub fn eval_g_h_prime(
    sc: &SecondCorrector,
    profile: &TwoPhaseProfile,
    r: f64,
) -> Result<(f64, f64)> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::invalid(format!(
            "radius must be non-negative, got {r}"
        )));
    }
    if r >= 1.0 {
        return Ok((0.0, 0.0));
    }
    let nn = profile.dim as i32;
    let n = nn as f64;
    let inner = r <= profile.core_radius();
    let (c, d, p, q) = if inner {
        (sc.c1, sc.d1, sc.p1, sc.q1)
    } else {
        (sc.c2, sc.d2, sc.p2, sc.q2)
    };
    if r == 0.0 {
        if c != 0.0 || d != 0.0 || p != 0.0 {
            return Err(Error::invalid("corrector is singular at r = 0"));
        }
        return Ok((0.0, 0.0));
    }
    let rn1 = r.powi(nn + 1);
    let gp = -n * c / rn1 - (n + 2.0) * d / (rn1 * r * r);
    let hp = -n * p / rn1 + 2.0 * q * r;
    Ok((gp, hp))
}

/// Neumann residuals at r = 1: (|(N+2)d₂ − N c̃|, |−N p₂ + 2 q₂|).
pub fn neumann_residual(sc: &SecondCorrector, profile: &TwoPhaseProfile) -> (f64, f64) {
    let n = profile.dim as f64;
    let ct = -sc.c2;
    (
        ((n + 2.0) * sc.d2 - n * ct).abs(),
        (-n * sc.p2 + 2.0 * sc.q2).abs(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{first_corrector, TwoPhaseProfile};

    fn setup(alpha: f64, beta: f64, theta: f64, dim: usize) -> (TwoPhaseProfile, FirstCorrector) {
        let p = TwoPhaseProfile::new(alpha, beta, theta, dim).unwrap();
        let fc = first_corrector(&p).unwrap();
        (p, fc)
    }

    #[test]
    fn homogeneous_corrector_vanishes() {
        let (p, fc) = setup(1.5, 1.5, 0.4, 3);
        for sc in [
            solve_closed_form(&fc, &p).unwrap(),
            solve_regular(&fc, &p).unwrap(),
        ] {
            assert!(sc.unknowns().iter().all(|v| *v == 0.0), "{sc:?}");
        }
        let sys = assemble_system(&fc, &p).unwrap();
        assert!(sys.rhs.iter().all(|v| *v == 0.0));
        let rhs = rhs_reduction(&fc, &p, 0.5).unwrap();
        assert_eq!((rhs.quadratic, rhs.constant), (0.0, 0.0));
    }

    #[test]
    fn rhs_reduction_core_value() {
        let (p, fc) = setup(1.0, 2.0, 0.5, 2);
        let t = rhs_reduction(&fc, &p, 0.3).unwrap();
        assert_eq!(t.quadratic, 0.0);
        assert!((t.constant - 1.0 / 7.0).abs() < 1e-14);
        assert!(rhs_reduction(&fc, &p, p.core_radius()).is_err());
        assert!(rhs_reduction(&fc, &p, 1.0).is_err());
    }

    #[test]
    fn closed_form_reference_n2() {
        let (p, fc) = setup(1.0, 2.0, 0.5, 2);
        let sc = solve_closed_form(&fc, &p).unwrap();
        let want = [
            (sc.d2, 1.0 / 14.0),
            (sc.p2, -1.0 / 28.0),
            (sc.q2, -1.0 / 28.0),
            (sc.b2, 1.0 / 14.0),
            (sc.t2, 1.0 / 14.0),
            // core values from an exact rational solve of the ten retained rows
            (sc.b1, -1.0 / 7.0),
            (sc.d1, 3.0 / 56.0),
            (sc.p1, -3.0 / 112.0),
            (sc.q1, 3.0 / 28.0),
            (sc.t1, -1.0 / 56.0),
        ];
        for (got, w) in want {
            assert!((got - w).abs() < 1e-14, "got {got} want {w}");
        }
        assert_eq!(sc.c1, 0.0);
        assert!((sc.c2 + 1.0 / 7.0).abs() < 1e-15);
        assert!((sc.b2 - fc.ct + sc.d2).abs() < 1e-15);
        assert!((sc.p2 + sc.q2 + sc.t2).abs() < 1e-15);
    }

    #[test]
    fn closed_form_reference_n3() {
        let (p, fc) = setup(1.0, 2.0, 0.5, 3);
        let sc = solve_closed_form(&fc, &p).unwrap();
        let c = 1.0 / 11.0;
        for (got, w) in [
            (sc.d2, 3.0 * c / 5.0),
            (sc.p2, -c / 5.0),
            (sc.q2, -3.0 * c / 10.0),
            (sc.b2, 2.0 * c / 5.0),
            (sc.t2, c / 2.0),
        ] {
            assert!((got - w).abs() < 1e-15);
        }
        // exact: b1 = 9/275 − 18·2^{2/3}/275
        let b1 = 9.0 / 275.0 - 18.0 * 2f64.powf(2.0 / 3.0) / 275.0;
        assert!((sc.b1 - b1).abs() < 1e-14);
    }

    #[test]
    fn regular_reference_n2() {
        // exact rational solve with d1 = p1 = 0 of the ten non-Neumann rows
        let (p, fc) = setup(1.0, 2.0, 0.5, 2);
        let sc = solve_regular(&fc, &p).unwrap();
        for (got, w) in [
            (sc.b1, -5.0 / 182.0),
            (sc.q1, 9.0 / 182.0),
            (sc.t1, -1.0 / 56.0),
            (sc.b2, 19.0 / 182.0),
            (sc.d2, 1.0 / 26.0),
            (sc.p2, -1.0 / 52.0),
            (sc.q2, -19.0 / 364.0),
            (sc.t2, 1.0 / 14.0),
        ] {
            assert!((got - w).abs() < 1e-14, "got {got} want {w}");
        }
        assert!(sc.is_regular_at_origin());
        let (ng, nh) = neumann_residual(&sc, &p);
        assert!((ng - 12.0 / 91.0).abs() < 1e-14);
        assert!((nh - 6.0 / 91.0).abs() < 1e-14);
    }

    #[test]
    fn regular_solution_satisfies_non_neumann_rows() {
        let (p, fc) = setup(0.4, 3.0, 0.3, 3);
        let sc = solve_regular(&fc, &p).unwrap();
        let res = assemble_system(&fc, &p).unwrap().residuals(&sc);
        for (i, r) in res.iter().enumerate().take(10) {
            assert!(r.abs() < 1e-12, "{} residual {r}", ROW_LABELS[i]);
        }
    }

    #[test]
    fn closed_form_satisfies_all_rows_and_matches_least_squares() {
        let (p, fc) = setup(1.0, 2.0, 0.5, 2);
        let sys = assemble_system(&fc, &p).unwrap();
        let sc = solve_closed_form(&fc, &p).unwrap();
        assert!(sys.max_abs_residual(&sc) < 1e-12);
        assert_eq!(sys.ranks(), (10, 10));
        let ls = sys.least_squares(fc.ct).unwrap();
        for (a, b) in ls.unknowns().iter().zip(sc.unknowns()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn consistency_and_identity() {
        let (p, fc) = setup(1.0, 2.0, 0.5, 2);
        let sc = solve_closed_form(&fc, &p).unwrap();
        let (r82, r112) = verify_consistency(&sc, &fc, &p);
        assert!(r82 < 1e-12 && r112 < 1e-12);
        // at N = 2 the shell constant balance reads β(2−N)c̃ = 0 on both sides
        let lhs82 = p.beta * (2.0 * sc.b2 + 2.0 * 2.0 * sc.q2);
        assert!(lhs82.abs() < 1e-15);
        let target = h_flux_identity_value(&fc, &p);
        let (l, r) = h_flux_sides(&sc, &p);
        assert!((l - target).abs() < 1e-12 && (r - target).abs() < 1e-12);
    }

    #[test]
    fn g_h_boundary_and_interface() {
        let (p, fc) = setup(1.0, 2.0, 0.5, 2);
        for sc in [
            solve_closed_form(&fc, &p).unwrap(),
            solve_regular(&fc, &p).unwrap(),
        ] {
            let (g1, h1) = eval_g_h(&sc, &p, 1.0 - 1e-15).unwrap();
            assert!(g1.abs() < 1e-13 && h1.abs() < 1e-13);
            let big_r = p.core_radius();
            let (gi, hi) = eval_g_h(&sc, &p, big_r * (1.0 - 1e-14)).unwrap();
            let (go, ho) = eval_g_h(&sc, &p, big_r * (1.0 + 1e-14)).unwrap();
            assert!((gi - go).abs() < 1e-10 && (hi - ho).abs() < 1e-10);
        }
        let sc = solve_closed_form(&fc, &p).unwrap();
        assert!(eval_g_h(&sc, &p, 0.0).is_err());
        let reg = solve_regular(&fc, &p).unwrap();
        assert_eq!(eval_g_h(&reg, &p, 0.0).unwrap(), (reg.b1, reg.t1));
    }

    #[test]
    fn neumann_residual_of_closed_form() {
        let (p, fc) = setup(1.0, 2.0, 0.5, 2);
        let sc = solve_closed_form(&fc, &p).unwrap();
        assert!((4.0 * sc.d2 - 2.0 * fc.ct).abs() < 1e-15);
        let (a, b) = neumann_residual(&sc, &p);
        assert!(a < 1e-15 && b < 1e-15);
    }
}
