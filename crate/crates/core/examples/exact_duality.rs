//! Checks the Feynman-Kac duality between the type chain and the backward
//! process exactly for a three-site population.
use histmoran::backward::BpState;
use histmoran::exact::{check_duality, product_law};
use histmoran::ModelParams;

fn main() -> histmoran::Result<()> {
    let p = ModelParams::two_type(3, 1.0, 0.3, 1.0)?;
    let eta = BpState::canonical_start(&p, &[1, 0])?;
    let mu = product_law(&[0.4, 0.6], p.n);
    for t in [0.0, 0.5, 1.0, 4.0] {
        let r = check_duality(&p, &mu, &eta, t)?;
        println!("t = {t:<4} lhs = {:.12} rhs = {:.12} gap = {:.1e}", r.lhs, r.rhs, r.abs_gap);
    }
    Ok(())
}
