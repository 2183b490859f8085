//! Samples ancestral lines of two sampled individuals conditioned on their
//! present types and compares one ancestor's type law with the exact one.
use histmoran::backward::BpState;
use histmoran::exact::product_law;
use histmoran::rng::stream;
use histmoran::transformed::{sample_conditioned_lines, HTransformedKernel};
use histmoran::ModelParams;

fn main() -> histmoran::Result<()> {
    let p = ModelParams::two_type(3, 1.0, 0.5, 2.0)?;
    let horizon = 1.0;
    let kernel = HTransformedKernel::inhomogeneous(&p, &[0, 1], &product_law(&[0.5, 0.5], p.n), horizon)?;
    let xi = [1, 0];
    let start = BpState::canonical_start(&p, &xi)?;
    let mut exact = [0.0; 2];
    for (s, w) in kernel.chain.states.iter().zip(kernel.exact_marginal(&start, 0.5)?) {
        exact[s.marks[0].0] += w;
    }
    let reps = 20_000;
    let mut ones = 0;
    let mut rng = stream(5, 0);
    for _ in 0..reps {
        let lines = sample_conditioned_lines(&kernel, &xi, horizon, &mut rng)?;
        ones += lines[0].value_at(-0.5).0;
    }
    println!("P(ancestor of a type-1 sample had type 1 at -0.5)");
    println!("  exact     {:.4}", exact[1]);
    println!("  simulated {:.4}", ones as f64 / reps as f64);
    Ok(())
}
