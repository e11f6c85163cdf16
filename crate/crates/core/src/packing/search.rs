//! Largest-empty-ball search and greedy insertion.
//!
//! The clearance field is sampled on a uniform periodic grid that is updated
//! incrementally after every insertion. Grid local maxima (ordered by value,
//! then flat index) seed a Newton polish that solves for points equidistant
//! from N+1 nearby balls; a polished point is accepted only when its exact
//! clearance beats the seed.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::buckets::BallBuckets;
use super::{
    canonical_coord, torus_distance, wrap_delta, BallPacking, Generator, TorusBall, DISJOINT_TOL,
};
use crate::error::{Error, Result};

/// Hard cap on insertions when only a coverage target is given.
pub const DEFAULT_BALL_CAP: usize = 200_000;

const DEDUP_TOL: f64 = 1e-6;
const POLISH_CONSTRAINTS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSpec {
    /// Grid points per axis; `None` picks 4096, 512 or 96 for N = 1, 2, 3.
    pub grid: Option<usize>,
    pub top_k: usize,
    /// Polish grid candidates to machine precision.
    pub refine: bool,
    /// Candidates within this distance of the best radius are inserted together.
    pub tie_tol: f64,
    pub min_radius_floor: f64,
}

impl Default for SearchSpec {
    fn default() -> Self {
        Self {
            grid: None,
            top_k: 32,
            refine: true,
            tie_tol: 1e-9,
            min_radius_floor: 1e-4,
        }
    }
}

impl SearchSpec {
    pub fn grid_for(&self, dim: usize) -> usize {
        self.grid.unwrap_or(match dim {
            1 => 4096,
            2 => 512,
            _ => 96,
        })
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let g = self.grid_for(dim);
        if g < 4 {
            return Err(Error::invalid(format!(
                "grid must have at least 4 points per axis, got {g}"
            )));
        }
        if (g as f64).powi(dim as i32) > 5e8 {
            return Err(Error::invalid(format!("grid {g}^{dim} is too large")));
        }
        if self.top_k == 0 {
            return Err(Error::invalid("top_k must be positive"));
        }
        if !(self.tie_tol >= 0.0 && self.tie_tol < 1e-3) {
            return Err(Error::invalid(format!(
                "tie_tol must lie in [0, 1e-3), got {}",
                self.tie_tol
            )));
        }
        if !(self.min_radius_floor > 0.0 && self.min_radius_floor < 0.5) {
            return Err(Error::invalid(format!(
                "min_radius_floor must lie in (0, 1/2), got {}",
                self.min_radius_floor
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StopCriterion {
    pub max_balls: Option<usize>,
    pub min_radius: Option<f64>,
    pub target_coverage: Option<f64>,
}

impl StopCriterion {
    fn validate(&self) -> Result<()> {
        if self.max_balls.is_none() && self.min_radius.is_none() && self.target_coverage.is_none() {
            return Err(Error::invalid(
                "a stop criterion (max_balls, min_radius or target_coverage) is required",
            ));
        }
        if self.max_balls == Some(0) {
            return Err(Error::invalid("max_balls must be positive"));
        }
        if let Some(r) = self.min_radius {
            if !(r > 0.0 && r <= 0.5) {
                return Err(Error::invalid(format!(
                    "min_radius must lie in (0, 1/2], got {r}"
                )));
            }
        }
        if let Some(c) = self.target_coverage {
            if !(c > 0.0 && c <= 1.0) {
                return Err(Error::invalid(format!(
                    "target_coverage must lie in (0, 1], got {c}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmptyBall {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Clone, Copy, Debug)]
struct Key {
    value: f64,
    index: usize,
}

impl PartialEq for Key {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Key {}
impl PartialOrd for Key {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Key {
    fn cmp(&self, o: &Self) -> Ordering {
        o.value
            .total_cmp(&self.value)
            .then(self.index.cmp(&o.index))
    }
}

/// Balls plus a bucket index for local clearance queries.
struct BallIndex {
    dim: usize,
    balls: Vec<TorusBall>,
    buckets: BallBuckets,
}

impl BallIndex {
    fn new(dim: usize) -> Self {
        let per_axis = match dim {
            1 => 256,
            2 => 64,
            _ => 32,
        };
        Self {
            dim,
            balls: Vec::new(),
            buckets: BallBuckets::new(dim, per_axis),
        }
    }

    fn insert(&mut self, b: &TorusBall) {
        self.buckets
            .insert(self.balls.len() as u32, &b.center, b.radius);
        self.balls.push(b.clone());
    }

    /// Exact clearance at x, clamped at 1/2.
    fn clearance(&self, x: &[f64]) -> f64 {
        let mut u = 1.0 / 64.0;
        loop {
            let m = self
                .buckets
                .query(x, u)
                .into_iter()
                .map(|i| {
                    let b = &self.balls[i as usize];
                    torus_distance(&b.center, x) - b.radius
                })
                .fold(f64::INFINITY, f64::min);
            if m <= u || u >= 0.5 {
                return m.min(0.5);
            }
            u *= 2.0;
        }
    }

    /// Lattice images of nearby balls as (gap, unwrapped center, radius), sorted by gap.
    fn constraints(&self, x: &[f64], reach: f64) -> Vec<(f64, Vec<f64>, f64)> {
        let dim = self.dim;
        let mut out = Vec::new();
        let images = 3usize.pow(dim as u32);
        for id in self.buckets.query(x, reach) {
            let b = &self.balls[id as usize];
            for code in 0..images {
                let mut c = code;
                let mut z = vec![0.0; dim];
                let mut d2 = 0.0;
                for k in 0..dim {
                    let shift = (c % 3) as f64 - 1.0;
                    c /= 3;
                    let delta = wrap_delta(x[k] - b.center[k]) + shift;
                    z[k] = x[k] - delta;
                    d2 += delta * delta;
                }
                let gap = d2.sqrt() - b.radius;
                if gap <= reach {
                    out.push((gap, z, b.radius));
                }
            }
        }
        out.sort_by(|a, b| {
            a.0.total_cmp(&b.0).then_with(|| {
                a.1.iter()
                    .zip(&b.1)
                    .fold(Ordering::Equal, |o, (p, q)| o.then(p.total_cmp(q)))
            })
        });
        out
    }
}

struct Searcher {
    dim: usize,
    n: usize,
    spec: SearchSpec,
    values: Vec<f64>,
    is_max: Vec<bool>,
    maxima: BTreeSet<Key>,
    index: BallIndex,
    offsets: Vec<Vec<i64>>,
}

fn neighbor_offsets(dim: usize) -> Vec<Vec<i64>> {
    let total = 3usize.pow(dim as u32);
    (0..total)
        .filter(|&c| c != (total - 1) / 2)
        .map(|mut c| {
            (0..dim)
                .map(|_| {
                    let o = (c % 3) as i64 - 1;
                    c /= 3;
                    o
                })
                .collect()
        })
        .collect()
}

impl Searcher {
    fn new(dim: usize, spec: SearchSpec, packing: &BallPacking) -> Result<Self> {
        spec.validate(dim)?;
        let n = spec.grid_for(dim);
        let total = n.pow(dim as u32);
        let mut s = Self {
            dim,
            n,
            spec,
            values: vec![0.5; total],
            is_max: vec![false; total],
            maxima: BTreeSet::new(),
            index: BallIndex::new(dim),
            offsets: neighbor_offsets(dim),
        };
        let all: Vec<usize> = (0..total).collect();
        s.refresh_maxima(&all);
        for b in packing.balls() {
            s.apply(b);
        }
        Ok(s)
    }

    fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    fn coords(&self, mut flat: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        for k in (0..self.dim).rev() {
            x[k] = (flat % self.n) as f64 / self.n as f64;
            flat /= self.n;
        }
        x
    }

    fn axis_indices(&self, c: f64, half: f64, pad: i64) -> Vec<usize> {
        let n = self.n as i64;
        let a = ((c - half) * n as f64).ceil() as i64 - pad;
        let b = ((c + half) * n as f64).floor() as i64 + pad;
        if b - a + 1 >= n {
            return (0..self.n).collect();
        }
        (a..=b).map(|i| i.rem_euclid(n) as usize).collect()
    }

    fn box_cells(&self, center: &[f64], half: f64, pad: i64) -> Vec<usize> {
        let ranges: Vec<Vec<usize>> = (0..self.dim)
            .map(|k| self.axis_indices(center[k], half, pad))
            .collect();
        let mut cells = vec![0usize];
        for r in &ranges {
            let mut next = Vec::with_capacity(cells.len() * r.len());
            for &c in &cells {
                for &i in r {
                    next.push(c * self.n + i);
                }
            }
            cells = next;
        }
        cells
    }

    fn neighbor(&self, flat: usize, off: &[i64]) -> usize {
        let n = self.n as i64;
        let mut rem = flat;
        let mut idx = vec![0i64; self.dim];
        for k in (0..self.dim).rev() {
            idx[k] = (rem % self.n) as i64;
            rem /= self.n;
        }
        idx.iter().zip(off).fold(0usize, |acc, (i, o)| {
            acc * self.n + (i + o).rem_euclid(n) as usize
        })
    }

    fn is_local_max(&self, i: usize) -> bool {
        let v = self.values[i];
        if v <= self.spec.min_radius_floor {
            return false;
        }
        self.offsets.iter().all(|off| {
            let j = self.neighbor(i, off);
            j == i || v > self.values[j] || (v == self.values[j] && i < j)
        })
    }

    fn refresh_maxima(&mut self, cells: &[usize]) {
        for &i in cells {
            if self.is_max[i] {
                self.maxima.remove(&Key {
                    value: self.values[i],
                    index: i,
                });
                self.is_max[i] = false;
            }
        }
        let flags: Vec<bool> = cells.par_iter().map(|&i| self.is_local_max(i)).collect();
        for (&i, f) in cells.iter().zip(flags) {
            if f {
                self.is_max[i] = true;
                self.maxima.insert(Key {
                    value: self.values[i],
                    index: i,
                });
            }
        }
    }

    fn apply(&mut self, ball: &TorusBall) {
        let gmax = self.maxima.first().map_or(0.0, |k| k.value);
        let half = ball.radius + gmax.max(self.spec.min_radius_floor);
        let cells = self.box_cells(&ball.center, half, 0);
        // stale maxima must be removed with the values they were keyed by
        let padded = self.box_cells(&ball.center, half, 1);
        for &i in &padded {
            if self.is_max[i] {
                self.maxima.remove(&Key {
                    value: self.values[i],
                    index: i,
                });
                self.is_max[i] = false;
            }
        }
        let updates: Vec<f64> = cells
            .par_iter()
            .map(|&i| {
                let x = self.coords(i);
                torus_distance(&x, &ball.center) - ball.radius
            })
            .collect();
        for (&i, v) in cells.iter().zip(updates) {
            if v < self.values[i] {
                self.values[i] = v;
            }
        }
        self.refresh_maxima(&padded);
        self.index.insert(ball);
    }

    fn polish(&self, x0: &[f64], v0: f64) -> EmptyBall {
        let h = self.h();
        let step_cap = 3.0 * h * (self.dim as f64).sqrt();
        let reach = (v0 + step_cap + h).min(0.5);
        let cons = self.index.constraints(x0, reach);
        let mut best = EmptyBall {
            center: x0.to_vec(),
            radius: v0,
        };
        let take = cons.len().min(POLISH_CONSTRAINTS);
        let m = self.dim + 1;
        if take < m {
            return best;
        }
        for combo in combinations(take, m) {
            let active: Vec<&(f64, Vec<f64>, f64)> = combo.iter().map(|&i| &cons[i]).collect();
            let Some((x, rho)) = newton_equidistant(x0, v0, &active) else {
                continue;
            };
            if rho <= 0.0 {
                continue;
            }
            let moved = x
                .iter()
                .zip(x0)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if moved > step_cap {
                continue;
            }
            let xc: Vec<f64> = x.iter().map(|c| canonical_coord(*c)).collect();
            let r = self.index.clearance(&xc);
            if r > best.radius {
                best = EmptyBall {
                    center: xc,
                    radius: r,
                };
            }
        }
        best
    }

    /// All optimal empty balls within `tie_tol` of the best, in lexicographic center order.
    fn optimal_set(&self) -> Result<Vec<EmptyBall>> {
        let seeds: Vec<Key> = self.maxima.iter().take(self.spec.top_k).copied().collect();
        if seeds.is_empty() {
            return Err(Error::CoverageComplete {
                floor: self.spec.min_radius_floor,
            });
        }
        let mut cands: Vec<EmptyBall> = seeds
            .par_iter()
            .map(|k| {
                let x0 = self.coords(k.index);
                if self.spec.refine {
                    self.polish(&x0, k.value)
                } else {
                    EmptyBall {
                        center: x0,
                        radius: k.value,
                    }
                }
            })
            .collect();
        cands.sort_by(|a, b| {
            b.radius
                .total_cmp(&a.radius)
                .then_with(|| lex_cmp(&a.center, &b.center))
        });
        let best = cands[0].radius;
        let mut kept: Vec<EmptyBall> = Vec::new();
        for c in cands {
            if c.radius < best - self.spec.tie_tol {
                break;
            }
            if kept
                .iter()
                .all(|k| torus_distance(&k.center, &c.center) > DEDUP_TOL)
            {
                kept.push(c);
            }
        }
        kept.sort_by(|a, b| lex_cmp(&a.center, &b.center));
        Ok(kept)
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .fold(Ordering::Equal, |o, (p, q)| o.then(p.total_cmp(q)))
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < n - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Solves |x − z_i| − r_i = ρ for the N+1 active constraints by Newton's method.
fn newton_equidistant(
    x0: &[f64],
    rho0: f64,
    active: &[&(f64, Vec<f64>, f64)],
) -> Option<(Vec<f64>, f64)> {
    let dim = x0.len();
    let m = dim + 1;
    let mut x = x0.to_vec();
    let mut rho = rho0;
    for _ in 0..60 {
        let mut a = vec![vec![0.0; m + 1]; m];
        let mut fmax: f64 = 0.0;
        for (row, (_, z, r)) in a.iter_mut().zip(active) {
            let d: Vec<f64> = x.iter().zip(z).map(|(p, q)| p - q).collect();
            let dist = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if dist == 0.0 {
                return None;
            }
            for k in 0..dim {
                row[k] = d[k] / dist;
            }
            row[dim] = -1.0;
            let f = dist - r - rho;
            row[m] = -f;
            fmax = fmax.max(f.abs());
        }
        let step = solve_dense(a)?;
        for k in 0..dim {
            x[k] += step[k];
        }
        rho += step[dim];
        let smax = step.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
        if !smax.is_finite() || smax > 1.0 {
            return None;
        }
        if smax < 1e-15 || (fmax < 1e-16 && smax < 1e-13) {
            return Some((x, rho));
        }
    }
    None
}

/// Gaussian elimination with partial pivoting on an augmented m × (m+1) system.
fn solve_dense(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let m = a.len();
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-13 {
            return None;
        }
        a.swap(col, piv);
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot = &upper[col];
        for r in lower.iter_mut().take(m - col - 1) {
            let f = r[col] / pivot[col];
            for (x, p) in r[col..=m].iter_mut().zip(&pivot[col..=m]) {
                *x -= f * p;
            }
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let s: f64 = (row + 1..m).map(|k| a[row][k] * x[k]).sum();
        x[row] = (a[row][m] - s) / a[row][row];
    }
    Some(x)
}

/// The lexicographically first maximizer of the clearance field.
pub fn largest_empty_ball(p: &BallPacking, spec: &SearchSpec) -> Result<EmptyBall> {
    Ok(largest_empty_balls(p, spec)?.remove(0))
}

/// Every maximizer within `spec.tie_tol` of the optimum, in lexicographic center order.
pub fn largest_empty_balls(p: &BallPacking, spec: &SearchSpec) -> Result<Vec<EmptyBall>> {
    if p.coverage().fraction >= 1.0 - 1e-9 {
        return Err(Error::CoverageComplete {
            floor: spec.min_radius_floor,
        });
    }
    Searcher::new(p.dim(), *spec, p)?.optimal_set()
}

fn budget_outcome(mut packing: BallPacking, stop: &StopCriterion) -> Result<BallPacking> {
    packing.sort_by_radius();
    if let Some(t) = stop.target_coverage {
        if packing.coverage().fraction < t {
            return Err(Error::SearchBudgetExceeded {
                partial: Box::new(packing),
            });
        }
    }
    Ok(packing)
}

/// Greedy Apollonian construction: repeatedly insert every largest empty ball.
pub fn greedy_apollonian(
    dim: usize,
    stop: &StopCriterion,
    spec: &SearchSpec,
) -> Result<BallPacking> {
    stop.validate()?;
    let mut packing = BallPacking::empty(dim, Generator::Apollonian)?;
    let mut searcher = Searcher::new(dim, *spec, &packing)?;
    let cap = stop.max_balls.unwrap_or(DEFAULT_BALL_CAP);
    'outer: loop {
        if packing.len() >= cap
            || stop
                .target_coverage
                .is_some_and(|t| packing.coverage().fraction >= t)
        {
            break;
        }
        let batch = match searcher.optimal_set() {
            Ok(b) => b,
            Err(Error::CoverageComplete { .. }) => break,
            Err(e) => return Err(e),
        };
        if stop.min_radius.is_some_and(|r| batch[0].radius < r) {
            break;
        }
        let start = packing.len();
        for cand in batch {
            if packing.len() >= cap {
                break 'outer;
            }
            let clash = packing.balls()[start..].iter().any(|b| {
                torus_distance(&b.center, &cand.center) < b.radius + cand.radius - DISJOINT_TOL
            });
            if clash || cand.radius <= 0.0 {
                continue;
            }
            let ball = TorusBall {
                center: cand.center,
                radius: cand.radius.min(0.5),
            };
            packing.push(ball.clone())?;
            searcher.apply(&ball);
        }
    }
    budget_outcome(packing, stop)
}

/// Random sequential covering: each step places the maximal ball at a uniformly random uncovered point.
pub fn random_greedy(
    dim: usize,
    stop: &StopCriterion,
    spec: &SearchSpec,
    seed: u64,
) -> Result<BallPacking> {
    stop.validate()?;
    spec.validate(dim)?;
    let mut packing = BallPacking::empty(dim, Generator::RandomGreedy)?;
    let mut index = BallIndex::new(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cap = stop.max_balls.unwrap_or(DEFAULT_BALL_CAP);
    let floor = stop
        .min_radius
        .unwrap_or(spec.min_radius_floor)
        .max(spec.min_radius_floor);
    const ATTEMPTS: usize = 100_000;
    'outer: while packing.len() < cap {
        if stop
            .target_coverage
            .is_some_and(|t| packing.coverage().fraction >= t)
        {
            break;
        }
        for _ in 0..ATTEMPTS {
            let x: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
            let r = index.clearance(&x);
            if r >= floor {
                let ball = TorusBall {
                    center: x,
                    radius: r,
                };
                packing.push(ball.clone())?;
                index.insert(&ball);
                continue 'outer;
            }
        }
        break;
    }
    budget_outcome(packing, stop)
}
