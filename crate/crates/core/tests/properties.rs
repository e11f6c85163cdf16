use proptest::prelude::*;

use hsdisp::corrector::{assemble_system, neumann_residual, solve_closed_form, solve_regular};
use hsdisp::dispersion::{density_for, dispersion_phs, QuadSpec};
use hsdisp::geometry::unit_ball_volume;
use hsdisp::material::{conductivity_bounds, first_corrector, TwoPhaseProfile};
use hsdisp::oracle::{exact_lambda, mc_volume_integral, Cell1D};

fn profiles() -> impl Strategy<Value = TwoPhaseProfile> {
    (0.05f64..20.0, 1.0f64..50.0, 0.01f64..0.99, 1usize..=4)
        .prop_map(|(a, ratio, theta, dim)| TwoPhaseProfile::new(a, a * ratio, theta, dim).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn conductivity_lies_between_means(p in profiles()) {
        let b = conductivity_bounds(&p).unwrap();
        let m = first_corrector(&p).unwrap().m;
        prop_assert!(m >= b.harmonic * (1.0 - 1e-12) && m <= b.arithmetic * (1.0 + 1e-12));
    }

    #[test]
    fn closed_form_corrector_is_consistent(p in profiles().prop_filter("N >= 2", |p| p.dim >= 2)) {
        let fc = first_corrector(&p).unwrap();
        let sc = solve_closed_form(&fc, &p).unwrap();
        let sys = assemble_system(&fc, &p).unwrap();
        let scale = sc.unknowns().iter().fold(1.0f64, |a, v| a.max(v.abs()));
        prop_assert!(sys.max_abs_residual(&sc) <= 1e-10 * scale);
        let (n1, n2) = neumann_residual(&sc, &p);
        prop_assert!(n1.max(n2) <= 1e-12 * scale);
        prop_assert!(solve_regular(&fc, &p).unwrap().is_regular_at_origin());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dispersion_is_non_positive_and_scales(p in profiles(), r in 0.01f64..0.5, k in 1usize..5) {
        let density = density_for(&p, &QuadSpec::default()).unwrap();
        prop_assume!(k as f64 * unit_ball_volume(p.dim) * r.powi(p.dim as i32) <= 1.0);
        let one = dispersion_phs(&density, &[r], p.dim).unwrap().d_phs;
        let many = dispersion_phs(&density, &vec![r; k], p.dim).unwrap().d_phs;
        prop_assert!(one <= 0.0);
        prop_assert!((many - k as f64 * one).abs() <= 1e-14 * many.abs());
    }

    #[test]
    fn bloch_branch_is_even_and_below_harmonic_symbol(a in 0.1f64..10.0, ratio in 1.0f64..20.0, frac in 0.05f64..0.95, eta in 0.01f64..0.2) {
        let c = Cell1D::two_phase(a, a * ratio, frac).unwrap();
        let plus = exact_lambda(&c, eta).unwrap();
        prop_assert_eq!(plus, exact_lambda(&c, -eta).unwrap());
        // the Burnett term is non-positive, so the branch sits below q η²
        prop_assert!(plus <= c.harmonic_mean() * eta * eta * (1.0 + 1e-12));
    }
}

#[test]
fn monte_carlo_error_bars_cover_the_truth() {
    // ∫_B y_1² y_2² = ω_N / ((N+2)(N+4)) for N ≥ 2
    let mut covered = 0;
    for seed in 0..30u64 {
        for dim in [2usize, 3] {
            let want = unit_ball_volume(dim) / ((dim as f64 + 2.0) * (dim as f64 + 4.0));
            let e = mc_volume_integral(dim, |y| y[0] * y[0] * y[1] * y[1], 100_000, seed);
            if (e.estimate - want).abs() <= 4.0 * e.stderr {
                covered += 1;
            }
        }
    }
    assert!(covered as f64 >= 0.99 * 60.0, "{covered} of 60");
}
