//! Disjoint ball families on the flat torus [0,1)^N.

mod buckets;
mod io;
mod search;

pub(crate) use io::write_atomic;
pub use io::{load_packing, parse_packing, radii_csv, save_packing, to_json_string};
pub use search::{
    greedy_apollonian, largest_empty_ball, largest_empty_balls, random_greedy, EmptyBall,
    SearchSpec, StopCriterion,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{compensated_sum, unit_ball_volume};

/// Slack allowed in pairwise disjointness checks.
pub const DISJOINT_TOL: f64 = 1e-12;
/// Slack allowed on total coverage.
pub const COVERAGE_TOL: f64 = 1e-9;
/// Slack allowed when checking that radii are non-increasing.
pub const ORDER_TOL: f64 = 1e-9;

pub const MAX_PACKING_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusBall {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    Apollonian,
    RandomGreedy,
    File,
}

impl Generator {
    pub fn as_str(&self) -> &'static str {
        match self {
            Generator::Apollonian => "apollonian",
            Generator::RandomGreedy => "random-greedy",
            Generator::File => "file",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "apollonian" => Some(Generator::Apollonian),
            "random-greedy" => Some(Generator::RandomGreedy),
            "file" => Some(Generator::File),
            _ => None,
        }
    }
}

/// Coverage accounting of a packing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coverage {
    /// Σ ω_N ε_p^N.
    pub fraction: f64,
    /// Σ ε_p^N.
    pub sum_radii_n: f64,
    /// Σ ε_p^N divided by c_N = 1/ω_N.
    pub ratio_to_cn: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallPacking {
    dim: usize,
    balls: Vec<TorusBall>,
    generator: Generator,
}

/// Reduces x modulo 1 into [0, 1).
pub fn canonical_coord(x: f64) -> f64 {
    let y = x - x.floor();
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

/// Minimal-image difference a − b, each coordinate in [−1/2, 1/2].
#[inline]
pub(crate) fn wrap_delta(d: f64) -> f64 {
    d - d.round()
}

/// Euclidean length of the minimal-image difference of two torus points.
pub fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = wrap_delta(x - y);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

impl BallPacking {
    pub fn empty(dim: usize, generator: Generator) -> Result<Self> {
        if dim == 0 || dim > MAX_PACKING_DIM {
            return Err(Error::invalid(format!(
                "packings are supported for dimensions 1..={MAX_PACKING_DIM}, got {dim}"
            )));
        }
        Ok(Self {
            dim,
            balls: Vec::new(),
            generator,
        })
    }

    /// Builds a packing from explicit balls and validates every invariant.
    pub fn from_balls(dim: usize, generator: Generator, balls: Vec<TorusBall>) -> Result<Self> {
        let mut p = Self::empty(dim, generator)?;
        p.balls = balls;
        for b in &mut p.balls {
            if b.center.len() != dim {
                return Err(Error::MixedDimension {
                    expected: dim,
                    found: b.center.len(),
                });
            }
            for c in &mut b.center {
                *c = canonical_coord(*c);
            }
        }
        p.validate()?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generator(&self) -> Generator {
        self.generator
    }

    pub fn balls(&self) -> &[TorusBall] {
        &self.balls
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    pub fn radii(&self) -> Vec<f64> {
        self.balls.iter().map(|b| b.radius).collect()
    }

    pub fn coverage(&self) -> Coverage {
        let n = self.dim as i32;
        let omega = unit_ball_volume(self.dim);
        let mut rn: Vec<f64> = self.balls.iter().map(|b| b.radius.powi(n)).collect();
        rn.sort_by(|a, b| b.total_cmp(a));
        let s = compensated_sum(rn);
        Coverage {
            fraction: omega * s,
            sum_radii_n: s,
            ratio_to_cn: omega * s,
        }
    }

    /// Checks every invariant, naming the first offending ball or pair.
    pub fn validate(&self) -> Result<()> {
        for (i, b) in self.balls.iter().enumerate() {
            if b.center.len() != self.dim {
                return Err(Error::MixedDimension {
                    expected: self.dim,
                    found: b.center.len(),
                });
            }
            if !(b.radius > 0.0 && b.radius <= 0.5) {
                return Err(Error::PackingInvariant(format!(
                    "ball {i} has radius {} outside (0, 1/2]",
                    b.radius
                )));
            }
            if b.center.iter().any(|c| !(0.0..1.0).contains(c)) {
                return Err(Error::PackingInvariant(format!(
                    "ball {i} center {:?} is not in [0,1)^N",
                    b.center
                )));
            }
            if i > 0 && b.radius > self.balls[i - 1].radius + ORDER_TOL {
                return Err(Error::PackingInvariant(format!(
                    "radii not non-increasing: ball {} has {} after ball {} with {}",
                    i,
                    b.radius,
                    i - 1,
                    self.balls[i - 1].radius
                )));
            }
        }
        if let Some((i, j, d)) = self.first_overlap() {
            return Err(Error::PackingInvariant(format!(
                "balls {i} and {j} overlap: distance {d:.17e} < radii sum {:.17e}",
                self.balls[i].radius + self.balls[j].radius
            )));
        }
        let cov = self.coverage().fraction;
        if cov > 1.0 + COVERAGE_TOL {
            return Err(Error::InfeasibleRadii { coverage: cov });
        }
        Ok(())
    }

    fn first_overlap(&self) -> Option<(usize, usize, f64)> {
        for i in 0..self.balls.len() {
            for j in i + 1..self.balls.len() {
                let d = torus_distance(&self.balls[i].center, &self.balls[j].center);
                if d < self.balls[i].radius + self.balls[j].radius - DISJOINT_TOL {
                    return Some((i, j, d));
                }
            }
        }
        None
    }

    /// Appends a ball after checking it against every existing ball.
    pub fn push(&mut self, mut ball: TorusBall) -> Result<()> {
        if ball.center.len() != self.dim {
            return Err(Error::MixedDimension {
                expected: self.dim,
                found: ball.center.len(),
            });
        }
        if !(ball.radius > 0.0 && ball.radius <= 0.5) {
            return Err(Error::PackingInvariant(format!(
                "radius {} outside (0, 1/2]",
                ball.radius
            )));
        }
        for c in &mut ball.center {
            *c = canonical_coord(*c);
        }
        for (i, b) in self.balls.iter().enumerate() {
            let d = torus_distance(&b.center, &ball.center);
            if d < b.radius + ball.radius - DISJOINT_TOL {
                return Err(Error::PackingInvariant(format!(
                    "new ball at {:?} overlaps ball {i}",
                    ball.center
                )));
            }
        }
        self.balls.push(ball);
        Ok(())
    }

    /// Stable sort by radius, largest first.
    pub(crate) fn sort_by_radius(&mut self) {
        self.balls.sort_by(|a, b| b.radius.total_cmp(&a.radius));
    }

    /// The same packing shifted by a common torus translation.
    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.dim {
            return Err(Error::MixedDimension {
                expected: self.dim,
                found: shift.len(),
            });
        }
        let balls = self
            .balls
            .iter()
            .map(|b| TorusBall {
                center: b
                    .center
                    .iter()
                    .zip(shift)
                    .map(|(c, s)| canonical_coord(c + s))
                    .collect(),
                radius: b.radius,
            })
            .collect();
        Ok(Self {
            dim: self.dim,
            balls,
            generator: self.generator,
        })
    }
}

/// Radius of the largest ball centered at x disjoint from the packing, clamped at 1/2.
pub fn clearance(p: &BallPacking, x: &[f64]) -> f64 {
    p.balls
        .iter()
        .map(|b| torus_distance(&b.center, x) - b.radius)
        .fold(0.5_f64, f64::min)
}

pub fn coverage(p: &BallPacking) -> Coverage {
    p.coverage()
}
