//! Simulates the backward process from two tagged sites and reports its
//! Feynman-Kac weight along the path.
use histmoran::backward::{path_v_integral, simulate_bp, BpState};
use histmoran::rng::stream;
use histmoran::ModelParams;

fn main() -> histmoran::Result<()> {
    let p = ModelParams::two_type(5, 1.0, 0.5, 2.0)?;
    let start = BpState::canonical_start(&p, &[0, 1])?;
    let path = simulate_bp(&start, &p, 1.5, &mut stream(3, 0))?;
    print!("{}", path.to_csv());
    println!("integral of V over [0, 1.5]: {:.6}", path_v_integral(&path, &p, 1.5)?);
    match path.coalescence_time(0, 1) {
        Some(t) => println!("tags coalesce at {t:.4}"),
        None => println!("tags stay apart"),
    }
    Ok(())
}
