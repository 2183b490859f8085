//! Stationary type law of a small population and the Wright-Fisher mixed
//! moments it approaches as the population grows.
use histmoran::moments::wf_mixed_moments;
use histmoran::stationary::{finite_stationary_law, pn_probability};
use histmoran::ModelParams;

fn main() -> histmoran::Result<()> {
    let limit = wf_mixed_moments(&ModelParams::two_type(10, 1.0, 0.5, 1.0)?, 8)?;
    println!("N      P_N(1,0)    P_N(0^2)");
    for n in [10, 20, 40, 80] {
        let p = ModelParams::two_type(n, 1.0, 0.5, 1.0)?;
        let law = finite_stationary_law(&p)?;
        println!("{n:<6} {:.6}    {:.6}", pn_probability(&law, 1, 1)?, pn_probability(&law, 0, 2)?);
    }
    println!("limit  {:.6}    {:.6}", limit.e(1, 1), limit.e(0, 2));
    Ok(())
}
