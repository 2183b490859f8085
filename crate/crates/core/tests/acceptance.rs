//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any fails.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use histmoran::backward::{simulate_bp, BpState};
use histmoran::exact::{compute_h, product_law, DualitySetup};
use histmoran::forward::{init_forest, run_until, sample_iid_types};
use histmoran::moments::wf_mixed_moments;
use histmoran::reduced::{
    cat_chain_vs_bp, cat_equilibrium, dist_chain_vs_bp, dist_survival, dist_taylor_coeffs, lemma_ode_residual,
    CatChainSpec, DistChainSpec, Pair,
};
use histmoran::rng::stream;
use histmoran::stationary::finite_stationary_law;
use histmoran::transformed::{mean_se, HTransformedKernel};
use histmoran::ModelParams;
use rand::Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;

struct Criterion {
    id: u8,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn two(n: usize, b: f64, b0: f64, s: f64) -> ModelParams {
    ModelParams::two_type(n, b, b0, s).unwrap()
}

fn random_law<R: Rng>(rng: &mut R, size: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..size).map(|_| 0.05 + rng.random::<f64>()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

/// Random model, random dual state (a canonical start on a random set of
/// tagged sites, moved by the backward dynamics for a random time) and a
/// random initial law.
fn duality_case(n: usize, d: usize, s: f64, draw: u64) -> (ModelParams, BpState, Vec<f64>) {
    let mut rng = stream(0xD0A1, (n * 100 + d * 10) as u64 * 1000 + s as u64 * 7 + draw);
    let b: Vec<f64> = (0..d).flat_map(|_| random_law(&mut rng, d)).collect();
    let p = ModelParams::new(n, d, 0.2 + 1.8 * rng.random::<f64>(), b, s, ModelParams::linear_chi(d)).unwrap();
    let k = rng.random_range(1..=n);
    let mut sites: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        sites.swap(i, j);
    }
    sites.truncate(k);
    let xi: Vec<usize> = (0..k).map(|_| rng.random_range(0..d)).collect();
    let start = BpState::canonical_start_at(&p, &sites, &xi).unwrap();
    let t = rng.random::<f64>();
    let eta = simulate_bp(&start, &p, t, &mut rng).unwrap().final_state().clone();
    let mu = random_law(&mut rng, d.pow(n as u32));
    (p, eta, mu)
}

fn c1_duality() -> Outcome {
    let mut grid = Vec::new();
    for n in [2usize, 3] {
        for d in [2usize, 3] {
            for s in [0.0, 1.0, n as f64] {
                for draw in 0..50 {
                    grid.push((n, d, s, draw));
                }
            }
        }
    }
    let times = [0.1, 0.5, 1.0, 2.0];
    let gaps: Vec<f64> = grid
        .par_iter()
        .map(|&(n, d, s, draw)| {
            let (p, eta, mu) = duality_case(n, d, s, draw);
            let setup = DualitySetup::new(&p, &eta).unwrap();
            times.iter().map(|&t| setup.report(&mu, t).unwrap().abs_gap).fold(0.0, f64::max)
        })
        .collect();
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    check(worst <= 1e-9, format!("max |lhs - rhs| = {worst:.2e} over {} cases", gaps.len() * times.len()))
}

fn c2_neutral_closed_forms() -> Outcome {
    let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.05).collect();
    let mut worst = 0.0f64;
    for (b, b0, b1) in [(1.0, 0.5, 0.5), (2.0, 0.3, 0.7)] {
        let spec = DistChainSpec::limit(&two(10, b, b0, 0.0), 4).map_err(|e| e.to_string())?;
        let table = dist_survival(&spec, &times).map_err(|e| e.to_string())?;
        for (ti, &t) in times.iter().enumerate() {
            let e2 = (-2.0 * b * t).exp() - 1.0;
            let want = [
                (-t).exp() * (1.0 + b1 * e2 / (1.0 + 2.0 * b * b0)),
                (-t).exp() * (1.0 + b0 * e2 / (1.0 + 2.0 * b * b1)),
                (-t).exp() * (1.0 - e2 / (2.0 * b)),
            ];
            for (y, w) in Pair::ALL.iter().zip(want) {
                worst = worst.max((table.get(ti, *y, 0) - w).abs());
            }
            worst = worst.max((table.pf(ti, 0) - (-t).exp()).abs());
        }
    }
    check(worst <= 1e-8, format!("max error {worst:.2e} on t in [0, 5]"))
}

fn c3_taylor() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for s in [0.5, 1.0, 2.0] {
        let spec = DistChainSpec::limit(&two(10, 1.0, 0.5, s), 8).map_err(|e| e.to_string())?;
        let r = dist_taylor_coeffs(&spec, 3).map_err(|e| e.to_string())?;
        let low = (r.pf[0] - 1.0).abs().max((r.pf[1] + 1.0).abs()).max((r.pf[2] - 1.0).abs());
        let rel = (r.pf[3] - r.predicted_third).abs() / r.predicted_third.abs();
        ok &= low <= 1e-12 && rel <= 1e-6;
        notes.push(format!("S={s}: pf'''={:.10} rel {rel:.1e}, low-order error {low:.1e}", r.pf[3]));
    }
    check(ok, notes.join("; "))
}

fn c4_cat_neutral() -> Outcome {
    let (b0, b1) = (0.3, 0.7);
    let mut worst = 0.0f64;
    for n in [5, 50] {
        let p = two(n, 1.5, b0, 0.0);
        let eq = cat_equilibrium(&CatChainSpec::finite(&p).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        worst = worst.max((eq.marginal[0] - b0).abs()).max((eq.marginal[1] - b1).abs());
    }
    let (_, eq) = CatChainSpec::limit_adaptive(&two(10, 1.5, b0, 0.0), 8).map_err(|e| e.to_string())?;
    worst = worst.max((eq.marginal[0] - b0).abs()).max((eq.marginal[1] - b1).abs());
    check(worst <= 1e-10, format!("max marginal error {worst:.2e} (N = 5, 50 and limit)"))
}

fn c5_reduced_vs_bp() -> Outcome {
    let mut cases = Vec::new();
    for n in [3, 4] {
        for s in [0.0, 1.0] {
            for t in [0.5, 1.0] {
                cases.push((n, s, t));
            }
        }
    }
    let gaps: Vec<(f64, f64)> = cases
        .par_iter()
        .map(|&(n, s, t)| {
            let p = two(n, 1.0, 0.4, s);
            let cat = (0..2).map(|u| cat_chain_vs_bp(&p, u, t).unwrap().max_gap).fold(0.0, f64::max);
            let dist = Pair::ALL.iter().map(|&y| dist_chain_vs_bp(&p, y, t).unwrap().max_gap).fold(0.0, f64::max);
            (cat, dist)
        })
        .collect();
    let cat = gaps.iter().map(|g| g.0).fold(0.0, f64::max);
    let dist = gaps.iter().map(|g| g.1).fold(0.0, f64::max);
    check(cat <= 1e-9 && dist <= 1e-9, format!("max gap CAT {cat:.2e}, distance {dist:.2e}"))
}

fn c6_conditioned_distance() -> Outcome {
    const REPS: u64 = 100_000;
    let horizon = 2.0;
    let p = two(4, 0.0, 0.5, 0.0);
    let kernel = HTransformedKernel::inhomogeneous(&p, &[0, 1], &product_law(&[0.5, 0.5], 4), horizon)
        .map_err(|e| e.to_string())?;
    let times = [0.5, 1.0];
    let mut notes = Vec::new();
    let mut ok = true;
    for (case, xi) in [[0usize, 0], [1, 1], [0, 1]].iter().enumerate() {
        let start = BpState::canonical_start(&p, xi).unwrap();
        let coal: Vec<Option<f64>> = (0..REPS)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream(600 + case as u64, r);
                kernel.simulate(&start, horizon, &mut rng).unwrap().coalescence_time(0, 1)
            })
            .collect();
        for &t in &times {
            let xs: Vec<f64> = coal.iter().map(|c| f64::from(u8::from(c.is_none_or(|c| c > t)))).collect();
            let (m, se) = mean_se(&xs);
            let target = if xi[0] == xi[1] {
                let tail = (-horizon).exp() * 0.5;
                ((-t).exp() - tail) / (1.0 - tail)
            } else {
                1.0
            };
            let good = if xi[0] == xi[1] { (m - target).abs() <= 3.0 * se } else { m == 1.0 };
            ok &= good;
            notes.push(format!("xi={xi:?} t={t}: {m:.5} vs {target:.6} (se {se:.1e})"));
        }
    }
    check(ok, notes.join("; "))
}

fn c7_forward_distance() -> Outcome {
    const REPS: u64 = 100_000;
    let horizon = 2.0;
    let p = two(50, 0.0, 0.5, 0.0);
    let distances: Vec<f64> = (0..REPS)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(700, r);
            let types = sample_iid_types(&[0.5, 0.5], 50, &mut rng);
            let mut f = init_forest(&p, -horizon, &types).unwrap();
            run_until(&mut f, &p, 0.0, &mut rng).unwrap();
            f.genealogical_distance(0, 1)
        })
        .collect();
    let mut ok = true;
    let mut notes = Vec::new();
    for t in [0.25, 0.5, 1.0] {
        let xs: Vec<f64> = distances.iter().map(|&d| f64::from(u8::from(d > 2.0 * t))).collect();
        let (m, se) = mean_se(&xs);
        let target = (-t).exp();
        ok &= (m - target).abs() <= 3.0 * se;
        notes.push(format!("t={t}: {m:.5} vs {target:.5} (se {se:.1e})"));
    }
    check(ok, notes.join("; "))
}

fn c8_moment_recurrences() -> Outcome {
    let mut worst = 0.0f64;
    for b in [0.5, 1.0, 2.0] {
        for s in [0.0, 1.0, 4.0] {
            let p = two(10, b, 0.4, s);
            let (bb0, bb1) = (b * 0.4, b * 0.6);
            let m = wf_mixed_moments(&p, 24).map_err(|e| e.to_string())?;
            let e = |a: usize, z: usize| m.e(a, z);
            for n in 0..=20usize {
                let nf = n as f64;
                let rel = |l: f64, r: f64| (l - r).abs() / l.abs().max(r.abs());
                worst = worst.max(rel(
                    (nf + 1.0 + 2.0 * b + 2.0 * s) * e(0, n + 2),
                    (nf + 1.0 + 2.0 * bb0) * e(0, n + 1) + 2.0 * s * e(0, n + 3),
                ));
                worst = worst.max(rel(
                    ((nf + 2.0) * (nf + 1.0 + 2.0 * b + 2.0 * s) - 2.0 * s) * e(1, n + 1),
                    (nf + 1.0) * (nf + 2.0 * bb0) * e(1, n)
                        + 2.0 * bb1 * e(0, n + 1)
                        + (nf + 2.0) * 2.0 * s * e(1, n + 2),
                ));
                let below = if n == 0 { 0.0 } else { nf * (nf + 2.0 * bb0 - 1.0) * e(2, n - 1) };
                worst = worst.max(rel(
                    ((nf + 2.0) * (nf + 1.0 + 2.0 * b + 2.0 * s) - 4.0 * s) * e(2, n),
                    below + 2.0 * (1.0 + 2.0 * bb1) * e(1, n) + (nf + 2.0) * 2.0 * s * e(2, n + 1),
                ));
            }
        }
    }
    check(worst <= 1e-8, format!("max relative residual {worst:.2e} for n <= 20 on a 3x3 (B, S) grid"))
}

fn c9_harmonic_h() -> Outcome {
    let mut worst = 0.0f64;
    for n in [2usize, 3] {
        for s in [0.0, 1.0] {
            let p = two(n, 1.0, 0.4, s);
            let law = finite_stationary_law(&p).map_err(|e| e.to_string())?;
            let sites: Vec<usize> = (0..n).collect();
            for tagged in [&sites[..1], &sites[..2], &sites[..]] {
                let table = compute_h(&p, tagged, &law).map_err(|e| e.to_string())?;
                worst = worst.max(table.harmonic_residual);
            }
        }
    }
    check(worst <= 1e-8, format!("max |(L + V) h| = {worst:.2e}"))
}

fn c10_lemma() -> Outcome {
    let times: Vec<f64> = (0..=50).map(|k| k as f64 * 0.1).collect();
    let mut worst = 0.0f64;
    for s in [0.0, 1.0] {
        let spec = DistChainSpec::limit(&two(10, 1.0, 0.4, s), 32).map_err(|e| e.to_string())?;
        let table = dist_survival(&spec, &times).map_err(|e| e.to_string())?;
        worst = worst.max(lemma_ode_residual(&spec, &table, 10).map_err(|e| e.to_string())?);
    }
    check(worst <= 1e-8, format!("max residual {worst:.2e} for n <= 10"))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "exact Feynman-Kac duality", budget: Duration::from_secs(300), run: c1_duality },
        Criterion {
            id: 2,
            name: "neutral distance closed forms",
            budget: Duration::from_secs(60),
            run: c2_neutral_closed_forms,
        },
        Criterion {
            id: 3,
            name: "Taylor coefficients with selection",
            budget: Duration::from_secs(60),
            run: c3_taylor,
        },
        Criterion { id: 4, name: "CAT neutral equilibrium", budget: Duration::from_secs(30), run: c4_cat_neutral },
        Criterion {
            id: 5,
            name: "reduced chains vs transformed BP",
            budget: Duration::from_secs(600),
            run: c5_reduced_vs_bp,
        },
        Criterion {
            id: 6,
            name: "conditioned distance example",
            budget: Duration::from_secs(300),
            run: c6_conditioned_distance,
        },
        Criterion {
            id: 7,
            name: "forward neutral distance law",
            budget: Duration::from_secs(600),
            run: c7_forward_distance,
        },
        Criterion { id: 8, name: "moment recurrences", budget: Duration::from_secs(30), run: c8_moment_recurrences },
        Criterion { id: 9, name: "harmonicity of h", budget: Duration::from_secs(60), run: c9_harmonic_h },
        Criterion { id: 10, name: "Lemma ODE residuals", budget: Duration::from_secs(60), run: c10_lemma },
    ];
    let mut failures = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(msg) if elapsed <= c.budget => (true, msg),
            Ok(msg) => (false, format!("{msg}; over the {:?} budget", c.budget)),
            Err(msg) => (false, msg),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "{} [{}] {}: {detail} ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
