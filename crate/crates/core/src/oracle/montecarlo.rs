//! Seeded Monte-Carlo integration over the unit ball and sphere.
//!
//! Samples are drawn in fixed-size chunks; chunk c uses a ChaCha8 stream
//! (seed, stream = c), and chunk sums are combined in chunk order, so the
//! result does not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::geometry::{unit_ball_volume, unit_sphere_area};

const CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

fn direction(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    loop {
        let mut s = 0.0;
        for v in out.iter_mut() {
            *v = rng.sample(StandardNormal);
            s += *v * *v;
        }
        if s > 0.0 {
            let inv = 1.0 / s.sqrt();
            out.iter_mut().for_each(|v| *v *= inv);
            return;
        }
    }
}

fn chunked<F>(dim: usize, samples: usize, seed: u64, ball: bool, f: &F) -> (f64, f64)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut y = vec![0.0; dim];
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                direction(&mut rng, &mut y);
                if ball {
                    let u: f64 = rng.random();
                    let r = u.powf(1.0 / dim as f64);
                    y.iter_mut().for_each(|v| *v *= r);
                }
                let v = f(&y);
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect();
    sums.iter()
        .fold((0.0, 0.0), |(a, b), (s, s2)| (a + s, b + s2))
}

fn finish(sum: f64, sum2: f64, samples: usize, measure: f64) -> McEstimate {
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum2 / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
    McEstimate {
        estimate: measure * mean,
        stderr: measure * (var / n).sqrt(),
        samples,
    }
}

/// ∫_{B(0,1)} f dy with uniformly distributed samples.
pub fn mc_volume_integral<F>(dim: usize, f: F, samples: usize, seed: u64) -> McEstimate
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    assert!(
        dim >= 1 && samples >= 2,
        "need dim >= 1 and at least two samples"
    );
    let (s, s2) = chunked(dim, samples, seed, true, &f);
    finish(s, s2, samples, unit_ball_volume(dim))
}

/// ∫_{S^{N−1}} f dσ over the unit sphere.
pub fn mc_sphere_integral<F>(dim: usize, f: F, samples: usize, seed: u64) -> McEstimate
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    assert!(
        dim >= 1 && samples >= 2,
        "need dim >= 1 and at least two samples"
    );
    let (s, s2) = chunked(dim, samples, seed, false, &f);
    finish(s, s2, samples, unit_sphere_area(dim))
}
