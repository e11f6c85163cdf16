//! Finite-volume solves of the radial transmission problems on [r_lo, 1].
//!
//! Every equation is written in flux form (P u')' + jump terms = s with
//! P = r^k a(r); the core radius R is a grid node and the jump of the flux at
//! R enters the balance of that node's control volume. The first corrector is
//! taken from its closed form when it appears as data in the g and h problems.

use crate::error::{Error, Result};
use crate::material::{eval_f, eval_f_prime, FirstCorrector, TwoPhaseProfile};

pub const DEFAULT_R_LO: f64 = 1e-4;
pub const MIN_NODES: usize = 1000;

// 4-point Gauss–Legendre on [-1, 1] for control-volume source integrals.
const GL4_X: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL4_W: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    interface: usize,
    core_intervals: usize,
    shell_intervals: usize,
    r_lo: f64,
}

impl RadialGrid {
    /// Uniform spacing in each region with about `n_nodes` nodes in total.
    pub fn new(profile: &TwoPhaseProfile, n_nodes: usize, r_lo: f64) -> Result<Self> {
        let big_r = profile.core_radius();
        if !(r_lo > 0.0 && r_lo < big_r) {
            return Err(Error::invalid(format!(
                "r_lo = {r_lo} must lie in (0, R = {big_r})"
            )));
        }
        if n_nodes < MIN_NODES {
            return Err(Error::invalid(format!(
                "radial grid needs at least {MIN_NODES} nodes, got {n_nodes}"
            )));
        }
        let total = (n_nodes - 1) as f64;
        let core = ((total * (big_r - r_lo) / (1.0 - r_lo)).round() as usize).clamp(2, n_nodes - 3);
        Self::with_intervals(profile, core, n_nodes - 1 - core, r_lo)
    }

    pub fn with_intervals(
        profile: &TwoPhaseProfile,
        core: usize,
        shell: usize,
        r_lo: f64,
    ) -> Result<Self> {
        let big_r = profile.core_radius();
        if core < 2 || shell < 2 {
            return Err(Error::invalid("each region needs at least two intervals"));
        }
        let hc = (big_r - r_lo) / core as f64;
        let hs = (1.0 - big_r) / shell as f64;
        if hc / hs > 2.0 || hs / hc > 2.0 {
            return Err(Error::invalid(format!(
                "spacing ratio {} exceeds 2",
                (hc / hs).max(hs / hc)
            )));
        }
        let mut nodes: Vec<f64> = (0..core).map(|i| r_lo + hc * i as f64).collect();
        nodes.extend((0..shell).map(|i| big_r + hs * i as f64));
        nodes.push(1.0);
        Ok(Self {
            nodes,
            interface: core,
            core_intervals: core,
            shell_intervals: shell,
            r_lo,
        })
    }

    /// Halves every interval; all old nodes are kept.
    pub fn refined(&self, profile: &TwoPhaseProfile) -> Result<Self> {
        Self::with_intervals(
            profile,
            2 * self.core_intervals,
            2 * self.shell_intervals,
            self.r_lo,
        )
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn interface_index(&self) -> usize {
        self.interface
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_lo(&self) -> f64 {
        self.r_lo
    }

    fn is_core_interval(&self, i: usize) -> bool {
        i < self.interface
    }

    /// Linear interpolation of a grid function; `core_side` selects the region at r = R.
    pub fn interpolate(&self, values: &[f64], r: f64) -> f64 {
        let n = self.nodes.len();
        if r <= self.nodes[0] {
            return values[0];
        }
        if r >= 1.0 {
            return values[n - 1];
        }
        let i = self
            .nodes
            .partition_point(|x| *x <= r)
            .saturating_sub(1)
            .min(n - 2);
        let t = (r - self.nodes[i]) / (self.nodes[i + 1] - self.nodes[i]);
        values[i] + t * (values[i + 1] - values[i])
    }
}

/// Grid function with its grid.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub grid: RadialGrid,
    pub values: Vec<f64>,
}

impl RadialSolution {
    pub fn at(&self, r: f64) -> f64 {
        self.grid.interpolate(&self.values, r)
    }
}

struct FluxProblem<'a> {
    grid: &'a RadialGrid,
    /// Flux coefficient on each interval (evaluated at its midpoint).
    p_mid: Vec<f64>,
    /// Extra diagonal term at each node.
    diag: Vec<f64>,
    rhs: Vec<f64>,
    outer_value: f64,
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

impl FluxProblem<'_> {
    fn solve(self) -> Result<Vec<f64>> {
        let nodes = self.grid.nodes();
        let n = nodes.len();
        let m = n - 1; // unknowns; the last node carries the Dirichlet value
        let k: Vec<f64> = (0..n - 1)
            .map(|i| self.p_mid[i] / (nodes[i + 1] - nodes[i]))
            .collect();
        let mut lower = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        let mut rhs = self.rhs[..m].to_vec();
        for i in 0..m {
            let left = if i > 0 { k[i - 1] } else { 0.0 };
            lower[i] = left;
            upper[i] = k[i];
            diag[i] = -(left + k[i]) + self.diag[i];
        }
        rhs[m - 1] -= upper[m - 1] * self.outer_value;
        upper[m - 1] = 0.0;
        let x = thomas(&lower, &diag, &upper, &rhs);
        let mut res: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..m {
            let mut r = diag[i] * x[i] - rhs[i];
            if i > 0 {
                r += lower[i] * x[i - 1];
            }
            if i + 1 < m {
                r += upper[i] * x[i + 1];
            }
            res = res.max(r.abs());
            scale = scale.max((diag[i] * x[i]).abs()).max(rhs[i].abs());
        }
        if res > 1e-10 * scale.max(1e-300) {
            return Err(Error::Numerical(format!(
                "radial linear solve residual {res:e} exceeds tolerance"
            )));
        }
        let mut out = x;
        out.push(self.outer_value);
        Ok(out)
    }
}

/// Integral of `s(r, core)` over the control volume of every node.
fn control_volume_sources<S: Fn(f64, bool) -> f64>(grid: &RadialGrid, s: S) -> Vec<f64> {
    let nodes = grid.nodes();
    let n = nodes.len();
    let mut out = vec![0.0; n];
    for i in 0..n - 1 {
        let core = grid.is_core_interval(i);
        let (a, b) = (nodes[i], nodes[i + 1]);
        let mid = 0.5 * (a + b);
        let half = |lo: f64, hi: f64| {
            let c = 0.5 * (lo + hi);
            let h = 0.5 * (hi - lo);
            GL4_X
                .iter()
                .zip(GL4_W)
                .map(|(x, w)| w * s(c + h * x, core))
                .sum::<f64>()
                * h
        };
        out[i] += half(a, mid);
        out[i + 1] += half(mid, b);
    }
    out
}

fn conductivity(profile: &TwoPhaseProfile, core: bool) -> f64 {
    if core {
        profile.alpha
    } else {
        profile.beta
    }
}

fn midpoint_coefficients(grid: &RadialGrid, profile: &TwoPhaseProfile, power: i32) -> Vec<f64> {
    let nodes = grid.nodes();
    (0..nodes.len() - 1)
        .map(|i| {
            let r = 0.5 * (nodes[i] + nodes[i + 1]);
            r.powi(power) * conductivity(profile, grid.is_core_interval(i))
        })
        .collect()
}

/// f with (r^{N+1} a f')' = 0, f(1) = 1 and flux a(f + r f') continuous at R.
pub fn solve_radial_f(profile: &TwoPhaseProfile, grid: &RadialGrid) -> Result<RadialSolution> {
    let n = profile.dim as i32;
    let mut diag = vec![0.0; grid.len()];
    diag[grid.interface] = (profile.beta - profile.alpha) * profile.theta;
    let values = FluxProblem {
        grid,
        p_mid: midpoint_coefficients(grid, profile, n + 1),
        diag,
        rhs: vec![0.0; grid.len()],
        outer_value: 1.0,
    }
    .solve()?;
    Ok(RadialSolution {
        grid: grid.clone(),
        values,
    })
}

/// g and h from their coefficient equations with g(1) = h(1) = 0.
pub fn solve_radial_gh(
    profile: &TwoPhaseProfile,
    fc: &FirstCorrector,
    grid: &RadialGrid,
) -> Result<(RadialSolution, RadialSolution)> {
    profile.validate()?;
    let n = profile.dim as i32;
    let big_r = profile.core_radius();
    let jump = profile.beta - profile.alpha;
    let rn2 = profile.theta * big_r * big_r;
    let f_prime = |r: f64, core: bool| {
        if core {
            0.0
        } else {
            eval_f_prime(fc, profile, r.max(big_r))
        }
    };
    let f_val = |r: f64, core: bool| {
        if core {
            fc.b1t
        } else {
            eval_f(fc, profile, r.max(big_r))
        }
    };

    // (r^{N+3} a g')' = −2 a f' r^{N+2};  [a(g' + 2g/r + (f−1)/r)] = 0 at R
    let mut rhs = control_volume_sources(grid, |r, core| {
        -2.0 * conductivity(profile, core) * f_prime(r, core) * r.powi(n + 2)
    });
    rhs[grid.interface] -= jump * (fc.b1t - 1.0) * rn2;
    let mut diag = vec![0.0; grid.len()];
    diag[grid.interface] = 2.0 * jump * rn2;
    let g_vals = FluxProblem {
        grid,
        p_mid: midpoint_coefficients(grid, profile, n + 3),
        diag,
        rhs,
        outer_value: 0.0,
    }
    .solve()?;
    let g = RadialSolution {
        grid: grid.clone(),
        values: g_vals,
    };

    // (r^{N−1} a h')' = −r^{N−1} (2 a g + a − m + 2 a (f − 1));  [a h'] = 0 at R
    let rhs = control_volume_sources(grid, |r, core| {
        let a = conductivity(profile, core);
        -r.powi(n - 1) * (2.0 * a * g.at(r) + a - fc.m + 2.0 * a * (f_val(r, core) - 1.0))
    });
    let h_vals = FluxProblem {
        grid,
        p_mid: midpoint_coefficients(grid, profile, n - 1),
        diag: vec![0.0; grid.len()],
        rhs,
        outer_value: 0.0,
    }
    .solve()?;
    let h = RadialSolution {
        grid: grid.clone(),
        values: h_vals,
    };
    Ok((g, h))
}

/// (1/|B|) ∫_B a |∇(y_k f)|² from a grid solution of f (midpoint rule per interval).
pub fn energy_integral_m(profile: &TwoPhaseProfile, f: &RadialSolution) -> f64 {
    let nn = profile.dim as i32;
    let n = profile.dim as f64;
    let nodes = f.grid.nodes();
    let v = &f.values;
    let mut terms = Vec::with_capacity(nodes.len());
    // [0, r_lo]: f is constant to within the closure
    terms.push(profile.alpha * v[0] * v[0] * nodes[0].powi(nn));
    for i in 0..nodes.len() - 1 {
        let (lo, hi) = (nodes[i], nodes[i + 1]);
        let fm = 0.5 * (v[i] + v[i + 1]);
        let fp = (v[i + 1] - v[i]) / (hi - lo);
        let a = conductivity(profile, f.grid.is_core_interval(i));
        // exact moments ∫ r^k dr over the interval
        let moment = |k: i32| (hi.powi(k + 1) - lo.powi(k + 1)) / f64::from(k + 1);
        terms.push(
            a * (n * fm * fm * moment(nn - 1)
                + 2.0 * fm * fp * moment(nn)
                + fp * fp * moment(nn + 1)),
        );
    }
    crate::geometry::compensated_sum(terms)
}

/// One-sided second-order estimate of u'(1).
pub fn outer_derivative(sol: &RadialSolution) -> f64 {
    let x = sol.grid.nodes();
    let n = x.len();
    let h = x[n - 1] - x[n - 2];
    (3.0 * sol.values[n - 1] - 4.0 * sol.values[n - 2] + sol.values[n - 3]) / (2.0 * h)
}

/// Observed order log₂(|u_h − u_{h/2}| / |u_{h/2} − u_{h/4}|) in sup-norm over shared nodes with r ≥ r_min.
pub fn richardson_slope(
    coarse: &RadialSolution,
    mid: &RadialSolution,
    fine: &RadialSolution,
    r_min: f64,
) -> f64 {
    let sup_diff = |a: &RadialSolution, b: &RadialSolution| {
        a.grid
            .nodes()
            .iter()
            .enumerate()
            .filter(|(_, r)| **r >= r_min)
            .map(|(i, _)| (a.values[i] - b.values[2 * i]).abs())
            .fold(0.0_f64, f64::max)
    };
    let e1 = sup_diff(coarse, mid);
    let e2 = sup_diff(mid, fine);
    (e1 / e2).log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrector::{eval_g_h, solve_regular};
    use crate::material::first_corrector;

    fn setup() -> (TwoPhaseProfile, FirstCorrector) {
        let p = TwoPhaseProfile::new(1.0, 2.0, 0.5, 2).unwrap();
        let fc = first_corrector(&p).unwrap();
        (p, fc)
    }

    #[test]
    fn grid_has_interface_node() {
        let (p, _) = setup();
        let g = RadialGrid::new(&p, 10_000, DEFAULT_R_LO).unwrap();
        assert_eq!(g.nodes()[g.interface_index()], p.core_radius());
        assert_eq!(*g.nodes().last().unwrap(), 1.0);
        assert!(RadialGrid::new(&p, 10, DEFAULT_R_LO).is_err());
    }

    #[test]
    fn f_matches_closed_form() {
        let (p, fc) = setup();
        let g = RadialGrid::new(&p, 10_000, DEFAULT_R_LO).unwrap();
        let f = solve_radial_f(&p, &g).unwrap();
        for (r, v) in g.nodes().iter().zip(&f.values) {
            assert!((v - eval_f(&fc, &p, *r)).abs() < 1e-5, "r={r}");
        }
        assert!((f.values[0] - 8.0 / 7.0).abs() < 1e-5);
    }

    #[test]
    fn homogeneous_solutions_are_trivial() {
        let p = TwoPhaseProfile::new(1.3, 1.3, 0.4, 3).unwrap();
        let fc = first_corrector(&p).unwrap();
        let grid = RadialGrid::new(&p, 1000, DEFAULT_R_LO).unwrap();
        let f = solve_radial_f(&p, &grid).unwrap();
        let worst = f.values.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-10, "{worst:e}");
        let (g, h) = solve_radial_gh(&p, &fc, &grid).unwrap();
        assert!(g.values.iter().chain(&h.values).all(|v| v.abs() < 1e-10));
        assert!((energy_integral_m(&p, &f) - 1.3).abs() < 1e-12);
    }

    #[test]
    fn gh_match_regular_corrector() {
        let (p, fc) = setup();
        let grid = RadialGrid::new(&p, 10_000, DEFAULT_R_LO).unwrap();
        let (g, h) = solve_radial_gh(&p, &fc, &grid).unwrap();
        let sc = solve_regular(&fc, &p).unwrap();
        for (i, r) in grid.nodes().iter().enumerate() {
            if *r < 1e-2 {
                continue;
            }
            let (ge, he) = eval_g_h(&sc, &p, r.min(1.0 - 1e-16)).unwrap();
            assert!(
                (g.values[i] - ge).abs() < 1e-5 && (h.values[i] - he).abs() < 1e-5,
                "r={r}"
            );
        }
        // the finite-energy solution has non-zero Neumann data
        let neumann = outer_derivative(&g) + 2.0 * g.values[g.values.len() - 1];
        assert!((neumann.abs() - 12.0 / 91.0).abs() < 1e-5, "{neumann}");
    }

    #[test]
    fn energy_matches_conductivity() {
        let (p, fc) = setup();
        let grid = RadialGrid::new(&p, 10_000, DEFAULT_R_LO).unwrap();
        let f = solve_radial_f(&p, &grid).unwrap();
        assert!((energy_integral_m(&p, &f) / fc.m - 1.0).abs() < 1e-6);
    }
}
