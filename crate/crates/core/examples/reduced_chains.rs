//! Common ancestor type law and genealogical distance survival from the
//! reduced chains in the large population limit.
use histmoran::reduced::{dist_survival_adaptive, dist_taylor_coeffs, CatChainSpec, DistChainSpec, Pair};
use histmoran::ModelParams;

fn main() -> histmoran::Result<()> {
    let p = ModelParams::two_type(100, 1.0, 0.5, 2.0)?;
    let (spec, eq) = CatChainSpec::limit_adaptive(&p, 8)?;
    println!("common ancestor type law {:?} (truncated at {})", eq.marginal, spec.top);

    let times: Vec<f64> = (0..=5).map(f64::from).collect();
    let (_, table) = dist_survival_adaptive(&p, &times, 8)?;
    println!("t  zeros     ones      mixed     pf");
    for (ti, t) in times.iter().enumerate() {
        let f = |y| table.get(ti, y, 0);
        println!("{t}  {:.6}  {:.6}  {:.6}  {:.6}", f(Pair::Zeros), f(Pair::Ones), f(Pair::Mixed), table.pf(ti, 0));
    }

    let taylor = dist_taylor_coeffs(&DistChainSpec::limit(&p, 16)?, 3)?;
    println!("third derivative of pf at 0: {:.6} (closed form {:.6})", taylor.pf[3], taylor.predicted_third);
    Ok(())
}
