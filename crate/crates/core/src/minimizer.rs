//! The dispersion functional on normalized scale sequences.
//!
//! For radii ε_p on the unit torus put c_N = 1/ω_N and d_p = ε_p^N / c_N, so
//! the covering condition reads Σ d_p = 1 and
//!
//! ```text
//! I(d) = −c_N^{(N+2)/N} Σ_p d_p^{(N+2)/N} = −Σ_p ε_p^{N+2}.
//! ```
//!
//! Since d_p^{(N+2)/N} ≤ d_1^{2/N} d_p, every normalized sequence satisfies
//! |I| ≤ c_N^{(N+2)/N} d_1^{2/N}, with equality iff all non-zero terms are equal.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{compensated_sum, unit_ball_volume};
use crate::packing::{greedy_apollonian, BallPacking, SearchSpec, StopCriterion};

/// Allowed deviation of Σ d_p from 1 for a complete sequence.
pub const CONSTRAINT_TOL: f64 = 1e-6;
const ORDER_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleSequence {
    d: Vec<f64>,
    dim: usize,
    c_n: f64,
    partial: bool,
    deficit: f64,
    realizable: bool,
}

impl ScaleSequence {
    /// A complete sequence; Σ d_p must equal 1 within [`CONSTRAINT_TOL`].
    pub fn new(d: Vec<f64>, dim: usize) -> Result<Self> {
        Self::build(d, dim, false)
    }

    /// A sequence that may cover only part of the torus.
    pub fn partial(d: Vec<f64>, dim: usize) -> Result<Self> {
        Self::build(d, dim, true)
    }

    /// d_p = ω_N ε_p^N from radii (sorted internally), flagged partial.
    pub fn from_radii(radii: &[f64], dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        let omega = unit_ball_volume(dim);
        let mut d: Vec<f64> = radii.iter().map(|r| omega * r.powi(dim as i32)).collect();
        d.sort_by(|a, b| b.total_cmp(a));
        Self::build(d, dim, true)
    }

    fn build(d: Vec<f64>, dim: usize, partial: bool) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        for (i, v) in d.iter().enumerate() {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(Error::invalid(format!(
                    "d[{i}] = {v} is not a non-negative number"
                )));
            }
            if i > 0 && *v > d[i - 1] + ORDER_SLACK {
                return Err(Error::invalid(format!(
                    "sequence must be non-increasing (d[{i}] > d[{}])",
                    i - 1
                )));
            }
        }
        let omega = unit_ball_volume(dim);
        let sum = compensated_sum(d.iter().copied());
        if !partial && (sum - 1.0).abs() > CONSTRAINT_TOL {
            return Err(Error::Constraint { sum });
        }
        if partial && sum > 1.0 + CONSTRAINT_TOL {
            return Err(Error::Constraint { sum });
        }
        let cap = omega / 2f64.powi(dim as i32);
        let realizable = d.first().is_none_or(|d1| *d1 <= cap * (1.0 + 1e-12));
        Ok(Self {
            d,
            dim,
            c_n: 1.0 / omega,
            partial,
            deficit: (1.0 - sum).max(0.0),
            realizable,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.d
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn c_n(&self) -> f64 {
        self.c_n
    }

    pub fn is_partial(&self) -> bool {
        self.partial
    }

    pub fn deficit(&self) -> f64 {
        self.deficit
    }

    /// Whether every term fits a ball of radius at most 1/2 on the torus.
    pub fn is_realizable(&self) -> bool {
        self.realizable
    }

    fn exponent(&self) -> f64 {
        (self.dim as f64 + 2.0) / self.dim as f64
    }

    /// c_N^{(N+2)/N}.
    pub fn vertex_magnitude(&self) -> f64 {
        self.c_n.powf(self.exponent())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalValue {
    pub i_value: f64,
    /// −Σ ε_p^{N+2} evaluated from the radii.
    pub upper_env: f64,
    pub bound_from_d1: f64,
}

pub fn functional_i(s: &ScaleSequence) -> Result<FunctionalValue> {
    let sum = compensated_sum(s.d.iter().copied());
    if !s.partial && (sum - 1.0).abs() > CONSTRAINT_TOL {
        return Err(Error::Constraint { sum });
    }
    let p = s.exponent();
    let n = s.dim as f64;
    let i_value = -s.vertex_magnitude() * compensated_sum(s.d.iter().map(|d| d.powf(p)));
    let radii_form = -compensated_sum(
        s.d.iter()
            .map(|d| (d * s.c_n).powf(1.0 / n).powi(s.dim as i32 + 2)),
    );
    let d1 = s.d.first().copied().unwrap_or(0.0);
    Ok(FunctionalValue {
        i_value,
        upper_env: radii_form,
        bound_from_d1: s.vertex_magnitude() * d1.powf(2.0 / n),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub abs_i: f64,
    pub bound: f64,
    pub satisfied: bool,
}

/// |I| ≤ c_N^{(N+2)/N} d_1^{2/N}, checked with a relative slack of 1e−12.
pub fn bound_check(s: &ScaleSequence) -> Result<BoundCheck> {
    let v = functional_i(s)?;
    let abs_i = v.i_value.abs();
    Ok(BoundCheck {
        abs_i,
        bound: v.bound_from_d1,
        satisfied: abs_i <= v.bound_from_d1 * (1.0 + 1e-12),
    })
}

/// k equal parts of the simplex.
pub fn equal_split(k: usize, dim: usize) -> Result<ScaleSequence> {
    if k == 0 {
        return Err(Error::invalid("equal split needs at least one part"));
    }
    ScaleSequence::new(vec![1.0 / k as f64; k], dim)
}

/// Moves `delta` of mass from term i to term j (d_i − d_j ≥ 2 delta), re-sorting the result.
/// The input majorizes the output.
pub fn robin_hood_transfer(
    s: &ScaleSequence,
    i: usize,
    j: usize,
    delta: f64,
) -> Result<ScaleSequence> {
    let d = &s.d;
    if i >= d.len() || j >= d.len() || i == j {
        return Err(Error::invalid(
            "transfer indices must be distinct and in range",
        ));
    }
    if !(delta >= 0.0 && d[i] - d[j] >= 2.0 * delta) {
        return Err(Error::invalid(
            "transfer must go from a richer to a poorer term without reversing them",
        ));
    }
    let mut t = d.clone();
    t[i] -= delta;
    t[j] += delta;
    t.sort_by(|a, b| b.total_cmp(a));
    ScaleSequence::build(t, s.dim, s.partial)
}

#[derive(Debug, Clone, Serialize)]
pub struct ApollonianMinimum {
    pub sequence: ScaleSequence,
    /// Lower end of the bracket for I_min (includes the worst case of the uncovered mass).
    pub i_lower: f64,
    /// Value of I on the truncated packing.
    pub i_upper: f64,
    pub coverage: f64,
    pub deficit: f64,
    #[serde(skip)]
    pub packing: BallPacking,
}

/// Truncated Apollonian estimate of I_min with an error bracket.
///
/// Every ball omitted by the truncation has radius at most the smallest
/// inserted one and the omitted volume is at most 1 − coverage, so the
/// omitted part of Σ ε^{N+2} is at most ε_min² (1 − coverage)/ω_N.
pub fn minimize_via_apollonian(
    dim: usize,
    budget: usize,
    spec: &SearchSpec,
) -> Result<ApollonianMinimum> {
    if !(1..=3).contains(&dim) {
        return Err(Error::invalid(format!(
            "Apollonian minimization supports N in 1..=3, got {dim}"
        )));
    }
    let stop = StopCriterion {
        max_balls: Some(budget),
        ..Default::default()
    };
    let packing = greedy_apollonian(dim, &stop, spec)?;
    minimum_from_packing(packing)
}

pub fn minimum_from_packing(packing: BallPacking) -> Result<ApollonianMinimum> {
    let dim = packing.dim();
    let radii = packing.radii();
    let sequence = ScaleSequence::from_radii(&radii, dim)?;
    let v = functional_i(&sequence)?;
    let cov = packing.coverage().fraction.min(1.0);
    let deficit = 1.0 - cov;
    let eps_min = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let tail = if radii.is_empty() || deficit <= 0.0 {
        0.0
    } else {
        eps_min * eps_min * deficit / unit_ball_volume(dim)
    };
    Ok(ApollonianMinimum {
        i_lower: v.i_value - tail,
        i_upper: v.i_value,
        coverage: cov,
        deficit,
        sequence,
        packing,
    })
}

/// Indices of `sequences` sorted ascending by I; ties keep input order.
pub fn compare_structures(sequences: &[ScaleSequence]) -> Result<Vec<usize>> {
    let Some(first) = sequences.first() else {
        return Ok(Vec::new());
    };
    for s in sequences {
        if s.dim != first.dim {
            return Err(Error::MixedDimension {
                expected: first.dim,
                found: s.dim,
            });
        }
    }
    let values: Vec<f64> = sequences
        .iter()
        .map(|s| functional_i(s).map(|v| v.i_value))
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..sequences.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    Ok(order)
}
