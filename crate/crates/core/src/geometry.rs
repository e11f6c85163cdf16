//! Unit-ball constants and the sphere moments used by radial reductions.

use std::f64::consts::PI;

/// Volume ω_N of the unit ball in R^N, via ω_N = 2π/N · ω_{N-2}.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        0 => 1.0,
        1 => 2.0,
        n => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Surface measure |S^{N-1}| = N ω_N of the unit sphere.
pub fn unit_sphere_area(dim: usize) -> f64 {
    dim as f64 * unit_ball_volume(dim)
}

/// Average of y_k² over the sphere |y| = r: r²/N.
pub fn sphere_mean_y2(dim: usize, r: f64) -> f64 {
    r * r / dim as f64
}

/// Average of y_k⁴ over the sphere |y| = r: 3r⁴/(N(N+2)).
pub fn sphere_mean_y4(dim: usize, r: f64) -> f64 {
    let n = dim as f64;
    3.0 * r.powi(4) / (n * (n + 2.0))
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1.0, 1e-16, 1e-16, 1e-16, -1.0];
        assert!((compensated_sum(v) - 3e-16).abs() < 1e-30);
    }
}
