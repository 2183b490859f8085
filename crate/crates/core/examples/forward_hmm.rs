//! Runs the forward historical Moran model and prints the pairwise
//! genealogical distances at the end of the run.
use histmoran::forward::{distance_matrix_csv, init_forest, run_until, sample_iid_types};
use histmoran::rng::stream;
use histmoran::ModelParams;

fn main() -> histmoran::Result<()> {
    let p = ModelParams::two_type(6, 0.8, 0.4, 1.5)?;
    let mut rng = stream(7, 0);
    let types = sample_iid_types(&[0.5, 0.5], p.n, &mut rng);
    let mut forest = init_forest(&p, -4.0, &types)?;
    let events = run_until(&mut forest, &p, 0.0, &mut rng)?;
    println!("{} events, present types {:?}", events.len(), forest.types());
    print!("{}", distance_matrix_csv(&forest));
    Ok(())
}
