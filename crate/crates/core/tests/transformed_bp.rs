#![allow(clippy::needless_range_loop)]

use histmoran::backward::BpState;
use histmoran::exact::{build_type_generator, decode_config, product_law};
use histmoran::rng::stream;
use histmoran::transformed::{
    conditioned_functional_check, mean_se, sample_conditioned_lines, HTransformedKernel, LineWindow,
};
use histmoran::ModelParams;
use rayon::prelude::*;

#[test]
fn ancestor_type_at_half_horizon_matches_exact_law() {
    let p =
        ModelParams::new(3, 3, 1.0, vec![0.2, 0.5, 0.3, 0.1, 0.1, 0.8, 0.3, 0.3, 0.4], 1.0, ModelParams::linear_chi(3))
            .unwrap();
    let horizon = 1.0;
    let mu = product_law(&[0.5, 0.2, 0.3], 3);
    let kernel = HTransformedKernel::inhomogeneous(&p, &[0, 1], &mu, horizon).unwrap();
    let xi = [2, 0];
    let start = BpState::canonical_start(&p, &xi).unwrap();
    let marginal = kernel.exact_marginal(&start, horizon / 2.0).unwrap();
    let mut expected = [0.0; 3];
    for (s, w) in kernel.chain.states.iter().zip(&marginal) {
        expected[s.marks[0].0] += w;
    }
    const REPS: u64 = 100_000;
    let counts = (0..REPS)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(21, r);
            let lines = sample_conditioned_lines(&kernel, &xi, horizon, &mut rng).unwrap();
            let mut c = [0u64; 3];
            c[lines[0].value_at(-horizon / 2.0).0] += 1;
            c
        })
        .reduce(|| [0; 3], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]]);
    let chi2: f64 = (0..3)
        .map(|u| {
            let e = expected[u] * REPS as f64;
            (counts[u] as f64 - e).powi(2) / e
        })
        .sum();
    // 1% critical value with two degrees of freedom
    assert!(chi2 < 9.21, "chi2 = {chi2}, counts {counts:?}, expected {expected:?}");
}

fn indicator_check(s: f64) {
    let p = ModelParams::two_type(2, 1.0, 0.5, s).unwrap();
    let windows = [LineWindow { tag: 0, from: 0.2, to: 0.8, type_is: Some(1) }];
    let mu = product_law(&[0.5, 0.5], 2);
    let c = conditioned_functional_check(&p, &[0, 1], &[1, 0], 1.0, &mu, &windows, 100_000, 31).unwrap();
    assert!(c.z <= 3.0, "S = {s}: {c:?}");
}

#[test]
fn functional_agrees_with_forward_rejection_neutral() {
    indicator_check(0.0);
}

#[test]
fn functional_agrees_with_forward_rejection_selection() {
    indicator_check(1.0);
}

#[test]
fn conditioned_distances_mix_to_unconditioned_law() {
    let n = 3;
    let horizon = 2.0;
    let p = ModelParams::two_type(n, 0.0, 0.5, 0.0).unwrap();
    let mu = product_law(&[0.3, 0.7], n);
    let kernel = HTransformedKernel::inhomogeneous(&p, &[0, 1], &mu, horizon).unwrap();
    let law = build_type_generator(&p).unwrap().law_at(&mu, horizon).unwrap();
    let mut pair_law = [[0.0; 2]; 2];
    for (idx, w) in law.iter().enumerate() {
        let c = decode_config(idx, n, 2);
        pair_law[c[0]][c[1]] += w;
    }
    const REPS: u64 = 50_000;
    let t = 0.7;
    let mut mixture = 0.0;
    let mut var = 0.0;
    for u in 0..2 {
        for v in 0..2 {
            let start = BpState::canonical_start(&p, &[u, v]).unwrap();
            let xs: Vec<f64> = (0..REPS)
                .into_par_iter()
                .map(|r| {
                    let mut rng = stream(40 + (2 * u + v) as u64, r);
                    let path = kernel.simulate(&start, horizon, &mut rng).unwrap();
                    f64::from(u8::from(path.coalescence_time(0, 1).is_none_or(|c| c > t)))
                })
                .collect();
            let (m, se) = mean_se(&xs);
            mixture += pair_law[u][v] * m;
            var += (pair_law[u][v] * se).powi(2);
        }
    }
    let want = (-t).exp();
    assert!((mixture - want).abs() <= 3.0 * var.sqrt(), "{mixture} vs {want}");
}
