use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::reduced::{CatEquilibrium, Pair, SurvivalTable};

/// Anything that can be flattened to `(series, x, y)` rows.
#[derive(Debug, Clone, Copy)]
pub enum PlotSource<'a> {
    /// One series `<pair>/<n>` per state, `x = t`, `y = f_t`.
    Survival(&'a SurvivalTable),
    /// Series `cat-marginal`, `x = type`, `y = probability`.
    Equilibrium(&'a CatEquilibrium),
    /// Named series of points.
    Series(&'a [(String, Vec<(f64, f64)>)]),
}

/// Long-format CSV with header `series,x,y`.
pub fn emit_plotdata(source: PlotSource<'_>) -> Result<String> {
    let mut out = String::from("series,x,y\n");
    match source {
        PlotSource::Survival(table) => {
            if table.times.is_empty() {
                return Err(Error::EmptyInput("survival table".into()));
            }
            for y in Pair::ALL {
                for n in 0..=table.top {
                    for (ti, t) in table.times.iter().enumerate() {
                        writeln!(out, "{}/{n},{t},{:.17e}", y.label(), table.get(ti, y, n)).unwrap();
                    }
                }
            }
        }
        PlotSource::Equilibrium(eq) => {
            if eq.probabilities.is_empty() {
                return Err(Error::EmptyInput("equilibrium vector".into()));
            }
            for (u, p) in eq.marginal.iter().enumerate() {
                writeln!(out, "cat-marginal,{u},{p:.17e}").unwrap();
            }
        }
        PlotSource::Series(series) => {
            if series.iter().all(|(_, pts)| pts.is_empty()) {
                return Err(Error::EmptyInput("plot series".into()));
            }
            for (name, pts) in series {
                for (x, y) in pts {
                    writeln!(out, "{name},{x},{y:.17e}").unwrap();
                }
            }
        }
    }
    Ok(out)
}
