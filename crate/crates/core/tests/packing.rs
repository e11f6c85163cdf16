use hsdisp::packing::{
    clearance, greedy_apollonian, largest_empty_ball, load_packing, save_packing, BallPacking,
    Generator, SearchSpec, StopCriterion, TorusBall,
};
use hsdisp::Error;

fn eps2() -> f64 {
    (2f64.sqrt() - 1.0) / 2.0
}

fn eps3() -> f64 {
    (2f64.sqrt() - 1.0) * (2.0 * 2f64.sqrt() - 1.0) / 14.0
}

fn six_balls(refine: bool) -> BallPacking {
    let stop = StopCriterion {
        max_balls: Some(6),
        ..Default::default()
    };
    let spec = SearchSpec {
        refine,
        ..Default::default()
    };
    greedy_apollonian(2, &stop, &spec).unwrap()
}

#[test]
fn third_level_radius_is_exact() {
    // ε₃ = x − ε₂ where x solves x(2a+1) = 1/2 − a², a = 1 − √2/2
    let a = 1.0 - 2f64.sqrt() / 2.0;
    let x = (0.5 - a * a) / (2.0 * a + 1.0);
    assert!((x - eps2() - eps3()).abs() < 1e-15);
    assert!((eps3() - 0.054_097_1).abs() < 1e-7);
}

#[test]
fn refined_apollonian_levels() {
    let p = six_balls(true);
    let r = p.radii();
    assert_eq!(r.len(), 6);
    assert_eq!(r[0], 0.5);
    assert!((r[1] - eps2()).abs() < 1e-12, "{}", r[1]);
    for v in &r[2..] {
        assert!((v - eps3()).abs() < 1e-12, "{v}");
    }
    assert_eq!(p.balls()[0].center, vec![0.0, 0.0]);
    p.validate().unwrap();
}

#[test]
fn grid_only_apollonian_levels() {
    let r = six_balls(false).radii();
    assert_eq!(r[0], 0.5);
    assert!((r[1] - eps2()).abs() < 1e-3);
    for v in &r[2..] {
        assert!((v - eps3()).abs() < 1e-3, "{v}");
    }
}

#[test]
fn exactly_four_third_level_maximizers() {
    let stop = StopCriterion {
        max_balls: Some(2),
        ..Default::default()
    };
    let two = greedy_apollonian(2, &stop, &SearchSpec::default()).unwrap();
    let best = largest_empty_ball(&two, &SearchSpec::default()).unwrap();
    assert!((best.radius - eps3()).abs() < 1e-12);
    let all = hsdisp::packing::largest_empty_balls(&two, &SearchSpec::default()).unwrap();
    assert_eq!(all.len(), 4);
    assert_eq!(all[0].center, best.center);
}

#[test]
fn rerun_is_bit_identical() {
    assert_eq!(six_balls(true), six_balls(true));
}

#[test]
fn file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    let p = six_balls(true);
    save_packing(&p, &path).unwrap();
    let q = load_packing(&path).unwrap();
    assert_eq!(p.radii(), q.radii());
    assert_eq!(p, q);
}

#[test]
fn tampered_file_names_pair() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"dim": 2, "generator": "file", "balls": [
            {"center": [0.0, 0.0], "radius": 0.5},
            {"center": [0.5, 0.5], "radius": 0.3}]}"#,
    )
    .unwrap();
    let err = load_packing(&path).unwrap_err();
    assert!(matches!(err, Error::PackingInvariant(_)));
    assert!(err.to_string().contains("balls 0 and 1"), "{err}");
}

#[test]
fn coverage_target_matches_grid_count() {
    let stop = StopCriterion {
        target_coverage: Some(0.95),
        ..Default::default()
    };
    let p = greedy_apollonian(2, &stop, &SearchSpec::default()).unwrap();
    let cov = p.coverage().fraction;
    assert!(cov >= 0.95);
    // brute-force point count on a 4096² lattice
    let n = 4096;
    let mut inside = 0usize;
    for i in 0..n {
        for j in 0..n {
            let x = [(i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64];
            if clearance(&p, &x) < 0.0 {
                inside += 1;
            }
        }
    }
    let frac = inside as f64 / (n * n) as f64;
    assert!(
        (frac - cov).abs() < 2e-3,
        "grid {frac} analytic {cov} balls {}",
        p.len()
    );
}

#[test]
fn apollonian_coverage_gate() {
    let stop = StopCriterion {
        target_coverage: Some(0.99),
        max_balls: Some(20_000),
        ..Default::default()
    };
    let p = greedy_apollonian(2, &stop, &SearchSpec::default()).unwrap();
    assert!(p.coverage().fraction >= 0.99);
    p.validate().unwrap();
}

#[test]
fn budget_exceeded_carries_partial_packing() {
    let stop = StopCriterion {
        target_coverage: Some(0.99),
        max_balls: Some(3),
        ..Default::default()
    };
    match greedy_apollonian(2, &stop, &SearchSpec::default()) {
        Err(Error::SearchBudgetExceeded { partial }) => assert_eq!(partial.len(), 3),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn three_dimensional_first_levels() {
    let stop = StopCriterion {
        max_balls: Some(2),
        ..Default::default()
    };
    let p = greedy_apollonian(3, &stop, &SearchSpec::default()).unwrap();
    assert_eq!(p.radii()[0], 0.5);
    assert!((p.radii()[1] - (3f64.sqrt() - 1.0) / 2.0).abs() < 1e-12);
}

#[test]
fn translation_preserves_radii() {
    let p = six_balls(true);
    let q = p.translated(&[0.123, 0.77]).unwrap();
    q.validate().unwrap();
    assert_eq!(p.radii(), q.radii());
    let empty = BallPacking::from_balls(2, Generator::File, Vec::<TorusBall>::new()).unwrap();
    assert!(empty.is_empty());
}
