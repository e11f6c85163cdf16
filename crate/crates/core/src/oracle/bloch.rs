//! Lowest Bloch eigenvalue of the shifted 1-D operator −(d/dy + iη) a (d/dy + iη)
//! on the unit period, and an even polynomial fit λ(η)/η² = q + d η² + ….
//!
//! Two independent routes are provided:
//! * [`bloch_1d`]: Hermitian finite differences for the quasi-periodic
//!   problem, inverse iteration, then Richardson extrapolation over the mesh
//!   pair (M, 2M) which removes the O(h²) discretization error;
//! * [`bloch_1d_exact`]: the transfer-matrix dispersion relation
//!   ½ tr T(λ) = cos η for piecewise-constant a, solved by bisection.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

pub const MIN_MESH: usize = 1024;
pub const MAX_ETA: f64 = 0.2;

/// Piecewise-constant conductivity on [0, 1): consecutive (length, a) segments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell1D {
    segments: Vec<(f64, f64)>,
}

impl Cell1D {
    pub fn new(segments: Vec<(f64, f64)>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::invalid("cell needs at least one segment"));
        }
        if segments
            .iter()
            .any(|(l, a)| !(*l > 0.0 && *a > 0.0 && l.is_finite() && a.is_finite()))
        {
            return Err(Error::invalid(
                "segment lengths and conductivities must be positive",
            ));
        }
        let total: f64 = segments.iter().map(|s| s.0).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "segment lengths sum to {total}, expected 1"
            )));
        }
        Ok(Self { segments })
    }

    pub fn homogeneous(a: f64) -> Result<Self> {
        Self::new(vec![(1.0, a)])
    }

    /// Conductivity `a1` on [0, frac), `a2` on [frac, 1).
    pub fn two_phase(a1: f64, a2: f64, frac: f64) -> Result<Self> {
        if !(frac > 0.0 && frac < 1.0) {
            return Err(Error::invalid(format!(
                "phase fraction {frac} must lie in (0, 1)"
            )));
        }
        Self::new(vec![(frac, a1), (1.0 - frac, a2)])
    }

    pub fn mean(&self) -> f64 {
        self.segments.iter().map(|(l, a)| l * a).sum()
    }

    pub fn harmonic_mean(&self) -> f64 {
        1.0 / self.segments.iter().map(|(l, a)| l / a).sum::<f64>()
    }

    /// Harmonic average of a over [lo, hi].
    fn harmonic_average(&self, lo: f64, hi: f64) -> f64 {
        let mut start = 0.0;
        let mut resist = 0.0;
        for (l, a) in &self.segments {
            let end = start + l;
            let overlap = hi.min(end) - lo.max(start);
            if overlap > 0.0 {
                resist += overlap / a;
            }
            start = end;
        }
        (hi - lo) / resist
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bloch1DResult {
    pub eta_samples: Vec<f64>,
    pub lambda1_samples: Vec<f64>,
    /// λ″(0)/2.
    pub q: f64,
    /// λ⁗(0)/4!.
    pub burnett: f64,
    /// Remaining fitted coefficients of η⁶, η⁸, ….
    pub higher: Vec<f64>,
    /// Largest |λ_fit − λ| over the samples.
    pub fit_residual: f64,
    /// Largest |λ(η) − λ(−η)|.
    pub parity_defect: f64,
    pub lambda_at_zero: f64,
}

fn check_etas(etas: &[f64]) -> Result<()> {
    if etas.len() < 4 {
        return Err(Error::invalid(
            "at least four η samples are needed for the fit",
        ));
    }
    for e in etas {
        if !(*e != 0.0 && e.abs() <= MAX_ETA) {
            return Err(Error::invalid(format!(
                "η = {e} must be non-zero with |η| ≤ {MAX_ETA}"
            )));
        }
    }
    Ok(())
}

/// Evenly spaced η in [0.02, 0.2].
pub fn default_etas(count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| 0.02 + 0.18 * i as f64 / (count - 1).max(1) as f64)
        .collect()
}

/// Least-squares fit of λ/η² by a polynomial in η² with `terms` coefficients.
fn fit_even(etas: &[f64], lambdas: &[f64], terms: usize) -> Result<(Vec<f64>, f64)> {
    let rows = etas.len();
    let a = DMatrix::from_fn(rows, terms, |i, j| (etas[i] * etas[i]).powi(j as i32));
    let b = DVector::from_iterator(rows, etas.iter().zip(lambdas).map(|(e, l)| l / (e * e)));
    let svd = a.clone().svd(true, true);
    let coef = svd
        .solve(&b, 1e-14)
        .map_err(|e| Error::Numerical(format!("fit failed: {e}")))?;
    let resid = (&a * &coef - &b)
        .iter()
        .zip(etas)
        .map(|(r, e)| (r * e * e).abs())
        .fold(0.0_f64, f64::max);
    Ok((coef.iter().copied().collect(), resid))
}

fn assemble(
    coef: Vec<f64>,
    resid: f64,
    etas: &[f64],
    lambdas: Vec<f64>,
    parity: f64,
    zero: f64,
) -> Bloch1DResult {
    Bloch1DResult {
        eta_samples: etas.to_vec(),
        lambda1_samples: lambdas,
        q: coef[0],
        burnett: coef[1],
        higher: coef[2..].to_vec(),
        fit_residual: resid,
        parity_defect: parity,
        lambda_at_zero: zero,
    }
}

const FIT_TERMS: usize = 4;

struct FdOperator {
    m: usize,
    h2: f64,
    /// a at the interface between node j and j+1.
    a_half: Vec<f64>,
}

impl FdOperator {
    fn new(cell: &Cell1D, m: usize) -> Self {
        let h = 1.0 / m as f64;
        let a_half = (0..m)
            .map(|j| cell.harmonic_average(j as f64 * h, (j + 1) as f64 * h))
            .collect();
        Self {
            m,
            h2: h * h,
            a_half,
        }
    }

    /// Solves (A − σ I) x = rhs for the cyclic Hermitian tridiagonal A.
    fn shifted_solve(&self, eta: f64, sigma: f64, rhs: &[Complex64]) -> Vec<Complex64> {
        let m = self.m;
        let phase = Complex64::from_polar(1.0, eta);
        let sub: Vec<Complex64> = (0..m)
            .map(|j| Complex64::new(-self.a_half[(j + m - 1) % m] / self.h2, 0.0))
            .collect();
        let sup: Vec<Complex64> = (0..m)
            .map(|j| Complex64::new(-self.a_half[j] / self.h2, 0.0))
            .collect();
        let diag: Vec<Complex64> = (0..m)
            .map(|j| {
                Complex64::new(
                    (self.a_half[(j + m - 1) % m] + self.a_half[j]) / self.h2 - sigma,
                    0.0,
                )
            })
            .collect();
        // corners: A[m−1][0] = −a e^{iη}/h², A[0][m−1] = conj
        let alpha = sup[m - 1] * phase;
        let beta = sub[0] * phase.conj();
        let gamma = -diag[0];
        let mut bb = diag.clone();
        bb[0] -= gamma;
        bb[m - 1] -= alpha * beta / gamma;
        let x = tridiag(&sub, &bb, &sup, rhs);
        let mut u = vec![Complex64::new(0.0, 0.0); m];
        u[0] = gamma;
        u[m - 1] = alpha;
        let z = tridiag(&sub, &bb, &sup, &u);
        let fact = (x[0] + beta * x[m - 1] / gamma)
            / (Complex64::new(1.0, 0.0) + z[0] + beta * z[m - 1] / gamma);
        x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
    }

    /// Rayleigh quotient as a sum of squared differences (non-negative by construction).
    fn rayleigh(&self, eta: f64, v: &[Complex64]) -> f64 {
        let m = self.m;
        let phase = Complex64::from_polar(1.0, eta);
        let num: f64 = (0..m)
            .map(|j| {
                let next = if j + 1 < m { v[j + 1] } else { phase * v[0] };
                self.a_half[j] * (next - v[j]).norm_sqr()
            })
            .sum();
        let den: f64 = v.iter().map(|c| c.norm_sqr()).sum();
        num / (den * self.h2)
    }

    fn lowest(&self, eta: f64, sigma: f64) -> Result<f64> {
        let m = self.m;
        let floor = 1e-18 * self.a_half.iter().fold(0.0_f64, |a, b| a.max(*b));
        let mut v: Vec<Complex64> = (0..m)
            .map(|j| Complex64::from_polar(1.0, eta * j as f64 / m as f64))
            .collect();
        let mut lam = self.rayleigh(eta, &v);
        for _ in 0..100 {
            let w = self.shifted_solve(eta, sigma, &v);
            let norm = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if !norm.is_finite() || norm == 0.0 {
                return Err(Error::Numerical("inverse iteration broke down".into()));
            }
            v = w.into_iter().map(|c| c / norm).collect();
            let next = self.rayleigh(eta, &v);
            let done = (next - lam).abs() <= 1e-15 * next.abs() + floor;
            lam = next;
            if done {
                return Ok(lam);
            }
        }
        Err(Error::Numerical(format!(
            "inverse iteration did not converge at η = {eta}"
        )))
    }
}

fn tridiag(
    sub: &[Complex64],
    diag: &[Complex64],
    sup: &[Complex64],
    rhs: &[Complex64],
) -> Vec<Complex64> {
    let n = diag.len();
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / m;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

fn fd_lambda(cell: &Cell1D, eta: f64, mesh: usize) -> Result<f64> {
    let sigma = -1e-3 * cell.harmonic_mean();
    let coarse = FdOperator::new(cell, mesh).lowest(eta, sigma)?;
    let fine = FdOperator::new(cell, 2 * mesh).lowest(eta, sigma)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Finite-difference route with Richardson extrapolation over (mesh, 2·mesh).
pub fn bloch_1d(cell: &Cell1D, etas: &[f64], mesh: usize) -> Result<Bloch1DResult> {
    check_etas(etas)?;
    if mesh < MIN_MESH {
        return Err(Error::invalid(format!(
            "mesh must have at least {MIN_MESH} cells, got {mesh}"
        )));
    }
    let mut lambdas = Vec::with_capacity(etas.len());
    let mut parity: f64 = 0.0;
    for &eta in etas {
        let plus = fd_lambda(cell, eta, mesh)?;
        let minus = fd_lambda(cell, -eta, mesh)?;
        parity = parity.max((plus - minus).abs());
        lambdas.push(plus);
    }
    let zero = FdOperator::new(cell, mesh).lowest(0.0, -1e-3 * cell.harmonic_mean())?;
    let (coef, resid) = fit_even(etas, &lambdas, FIT_TERMS)?;
    Ok(assemble(coef, resid, etas, lambdas, parity, zero))
}

/// G(μ) = (½ tr T(μη²) − cos η)/η², with T = T_n ⋯ T_1 tracked as I + Δ.
fn dispersion_relation(cell: &Cell1D, eta: f64, mu: f64) -> f64 {
    let lam = mu * eta * eta;
    // Δ for the product, starting from the identity
    let mut delta = [[0.0_f64; 2]; 2];
    for &(l, a) in &cell.segments {
        let k = (lam / a).sqrt();
        let half = 0.5 * k * l;
        let cm1 = -2.0 * half.sin().powi(2);
        // sin(kl)/(a k) with the k → 0 limit l/a
        let s_over = if k * l < 1e-8 {
            l / a
        } else {
            (k * l).sin() / (a * k)
        };
        let aks = a * k * (k * l).sin();
        let d = [[cm1, s_over], [-aks, cm1]];
        // (I + d)(I + Δ) − I = d + Δ + dΔ
        let mut next = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                next[i][j] = d[i][j] + delta[i][j] + d[i][0] * delta[0][j] + d[i][1] * delta[1][j];
            }
        }
        delta = next;
    }
    let half_trace_minus_one = 0.5 * (delta[0][0] + delta[1][1]);
    (half_trace_minus_one + 2.0 * (0.5 * eta).sin().powi(2)) / (eta * eta)
}

/// λ₁(η) from the exact dispersion relation.
pub fn exact_lambda(cell: &Cell1D, eta: f64) -> Result<f64> {
    if eta == 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.01 * cell.mean();
    let g_lo = dispersion_relation(cell, eta, lo);
    let g_hi = dispersion_relation(cell, eta, hi);
    if !(g_lo > 0.0 && g_hi < 0.0) {
        return Err(Error::Numerical(format!(
            "dispersion relation not bracketed at η = {eta}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if dispersion_relation(cell, eta, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi) * eta * eta)
}

/// Transfer-matrix route.
pub fn bloch_1d_exact(cell: &Cell1D, etas: &[f64]) -> Result<Bloch1DResult> {
    check_etas(etas)?;
    let mut lambdas = Vec::with_capacity(etas.len());
    let mut parity: f64 = 0.0;
    for &eta in etas {
        let plus = exact_lambda(cell, eta)?;
        parity = parity.max((plus - exact_lambda(cell, -eta)?).abs());
        lambdas.push(plus);
    }
    let (coef, resid) = fit_even(etas, &lambdas, FIT_TERMS + 1)?;
    Ok(assemble(coef, resid, etas, lambdas, parity, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_average_over_interface() {
        let c = Cell1D::two_phase(1.0, 2.0, 0.5).unwrap();
        assert!((c.harmonic_average(0.25, 0.75) - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.harmonic_mean(), 4.0 / 3.0);
    }

    #[test]
    fn exact_homogeneous() {
        let c = Cell1D::homogeneous(1.7).unwrap();
        for eta in [0.02, 0.1, 0.2] {
            let l = exact_lambda(&c, eta).unwrap();
            assert!((l - 1.7 * eta * eta).abs() < 1e-16, "{l}");
        }
    }

    #[test]
    fn exact_two_phase_coefficients() {
        let c = Cell1D::two_phase(1.0, 2.0, 0.5).unwrap();
        let r = bloch_1d_exact(&c, &default_etas(12)).unwrap();
        assert!((r.q - 4.0 / 3.0).abs() < 1e-12, "{}", r.q);
        assert!((r.burnett + 1.0 / 324.0).abs() < 1e-9, "{}", r.burnett);
    }

    #[test]
    fn finite_differences_agree_with_exact_route() {
        let etas = default_etas(10);
        let c = Cell1D::two_phase(1.0, 2.0, 0.5).unwrap();
        let fd = bloch_1d(&c, &etas, MIN_MESH).unwrap();
        let ex = bloch_1d_exact(&c, &etas).unwrap();
        for (a, b) in fd.lambda1_samples.iter().zip(&ex.lambda1_samples) {
            assert!((a - b).abs() < 1e-12 * b);
        }
        assert!((fd.q - 4.0 / 3.0).abs() < 1e-6);
        assert!(fd.parity_defect < 1e-10);
        assert!(fd.burnett < 0.0);
        assert!((fd.burnett - ex.burnett).abs() < 1e-8);

        let h = bloch_1d(&Cell1D::homogeneous(1.5).unwrap(), &etas, MIN_MESH).unwrap();
        assert!((h.q - 1.5).abs() < 1e-6);
        assert!(h.burnett.abs() < 1e-9);
    }
}
