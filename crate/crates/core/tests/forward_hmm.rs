use histmoran::forward::{
    cat_fixation_type, init_forest, run_until, sample_iid_types, step_forest, total_rate, CatOutcome, HmmEventKind,
};
use histmoran::rng::stream;
use histmoran::transformed::mean_se;
use histmoran::ModelParams;
use rayon::prelude::*;

fn neutral(n: usize) -> ModelParams {
    ModelParams::two_type(n, 0.0, 0.5, 0.0).unwrap()
}

#[test]
fn holding_times_have_the_total_rate() {
    let p = neutral(2);
    let mut f = init_forest(&p, 0.0, &[0, 1]).unwrap();
    let mut rng = stream(1, 0);
    let mut last = 0.0;
    let mut sum = 0.0;
    const EVENTS: usize = 100_000;
    for _ in 0..EVENTS {
        let e = step_forest(&mut f, &p, &mut rng);
        sum += e.time - last;
        last = e.time;
    }
    let mean = sum / EVENTS as f64;
    let want = 1.0 / total_rate(&p);
    assert!((mean - want).abs() < 0.01 * want, "{mean} vs {want}");
}

#[test]
fn no_resampling_probability_and_distance_without_ancestor() {
    let p = neutral(2);
    let horizon = 1.0;
    let runs: Vec<(bool, f64)> = (0..100_000u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(2, r);
            let mut f = init_forest(&p, -horizon, &[0, 1]).unwrap();
            let events = run_until(&mut f, &p, 0.0, &mut rng).unwrap();
            let quiet = events.iter().all(|e| !matches!(e.kind, HmmEventKind::Resampling { src, dst } if src != dst));
            (quiet, f.genealogical_distance(0, 1))
        })
        .collect();
    let xs: Vec<f64> = runs.iter().map(|r| f64::from(u8::from(r.0))).collect();
    let (m, se) = mean_se(&xs);
    let want = (-horizon).exp();
    assert!((m - want).abs() <= 3.0 * se, "{m} vs {want}");
    for (quiet, d) in runs {
        if quiet {
            assert_eq!(d, 2.0 * horizon);
        } else {
            assert!(d < 2.0 * horizon);
        }
    }
}

#[test]
fn neutral_fixation_probability_is_initial_frequency() {
    let p = neutral(4);
    let ones: Vec<f64> = (0..100_000u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(3, r);
            match cat_fixation_type(&p, 0.0, &[0, 0, 1, 1], 0.0, &mut rng).unwrap() {
                CatOutcome::Fixed(u) => u as f64,
                CatOutcome::Pending => panic!("no fixation within the horizon"),
            }
        })
        .collect();
    let (m, se) = mean_se(&ones);
    assert!((m - 0.5).abs() <= 3.0 * se, "{m}");
}

#[test]
fn tagged_types_are_exchangeable() {
    let p = ModelParams::two_type(3, 1.0, 0.4, 1.0).unwrap();
    let pairs: Vec<(f64, f64)> = (0..100_000u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(4, r);
            let types = sample_iid_types(&[0.3, 0.7], 3, &mut rng);
            let mut f = init_forest(&p, -1.0, &types).unwrap();
            run_until(&mut f, &p, 0.0, &mut rng).unwrap();
            let t = f.types();
            let a = f64::from(u8::from(t[0] == 1 && t[1] == 0));
            let b = f64::from(u8::from(t[1] == 1 && t[2] == 0));
            (a, b)
        })
        .collect();
    let diffs: Vec<f64> = pairs.iter().map(|(a, b)| a - b).collect();
    let (m, se) = mean_se(&diffs);
    assert!(m.abs() <= 4.0 * se, "{m} (se {se})");
}

#[test]
fn without_mutation_all_lines_reach_one_root() {
    let p = neutral(4);
    let fixed = (0..1000u64)
        .filter(|&r| {
            let mut rng = stream(5, r);
            let mut f = init_forest(&p, -30.0, &[0, 1, 0, 1]).unwrap();
            run_until(&mut f, &p, 0.0, &mut rng).unwrap();
            let root = f.ancestor_at(0, -30.0);
            (1..4).all(|i| f.ancestor_at(i, -30.0) == root)
        })
        .count();
    assert!(fixed >= 999, "{fixed}");
}

#[test]
fn lines_meeting_at_a_site_agree_before() {
    let p = ModelParams::two_type(5, 1.0, 0.5, 2.0).unwrap();
    let mut rng = stream(6, 0);
    let mut f = init_forest(&p, -3.0, &[0, 1, 0, 1, 1]).unwrap();
    run_until(&mut f, &p, 0.0, &mut rng).unwrap();
    let lines: Vec<_> = (0..5).map(|i| f.ancestral_line(i)).collect();
    let grid: Vec<f64> = (0..300).map(|k| -3.0 + 0.01 * k as f64 + 0.00123).collect();
    for i in 0..5 {
        for j in 0..5 {
            for (k, &t) in grid.iter().enumerate() {
                if lines[i].value_at(t).1 == lines[j].value_at(t).1 {
                    for &s in &grid[..k] {
                        assert_eq!(lines[i].value_at(s), lines[j].value_at(s));
                    }
                }
            }
        }
    }
    for (i, line) in lines.iter().enumerate() {
        assert_eq!(line.value_at(0.0).1, i);
        assert_eq!(line.value_at(0.0).0, f.types()[i]);
    }
}
