//! Small dense linear algebra used by the exact solvers.

use crate::error::{Error, Result};

/// Stationary distribution of an irreducible continuous-time chain given
/// its off-diagonal rates `rates[i][j]` (diagonal ignored), by the
/// Grassmann-Taksar-Heyman elimination. Subtraction free, so small
/// probabilities keep full relative precision.
pub fn gth_stationary(mut rates: Vec<Vec<f64>>) -> Result<Vec<f64>> {
    let n = rates.len();
    if n == 0 {
        return Err(Error::EmptyInput("empty generator".into()));
    }
    for (i, row) in rates.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for k in (1..n).rev() {
        let s: f64 = rates[k][..k].iter().sum();
        if !(s > 0.0) {
            return Err(Error::NoUniqueStationaryLaw(format!("state {k} cannot reach lower states")));
        }
        for i in 0..k {
            rates[i][k] /= s;
        }
        for i in 0..k {
            let aik = rates[i][k];
            if aik == 0.0 {
                continue;
            }
            let (upper, lower) = rates.split_at_mut(k);
            let row_k = &lower[0];
            let row_i = &mut upper[i];
            for j in 0..k {
                row_i[j] += aik * row_k[j];
            }
        }
    }
    let mut pi = vec![0.0; n];
    pi[0] = 1.0;
    for k in 1..n {
        pi[k] = (0..k).map(|i| pi[i] * rates[i][k]).sum();
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= total);
    Ok(pi)
}

/// Solves `a x = rhs` by Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Result<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).ok_or(Error::Singular)?;
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::Singular);
        }
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (rhs[row] - s) / a[row][row];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gth_two_state() {
        // 0 -> 1 at rate 2, 1 -> 0 at rate 3: pi = (3/5, 2/5)
        let pi = gth_stationary(vec![vec![0.0, 2.0], vec![3.0, 0.0]]).unwrap();
        assert!((pi[0] - 0.6).abs() < 1e-15 && (pi[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn gth_matches_balance_on_cycle() {
        let rates = vec![vec![0.0, 1.0, 0.5], vec![0.2, 0.0, 2.0], vec![1.5, 0.3, 0.0]];
        let pi = gth_stationary(rates.clone()).unwrap();
        for j in 0..3 {
            let inflow: f64 = (0..3).filter(|&i| i != j).map(|i| pi[i] * rates[i][j]).sum();
            let outflow: f64 = pi[j] * (0..3).filter(|&k| k != j).map(|k| rates[j][k]).sum::<f64>();
            assert!((inflow - outflow).abs() < 1e-14);
        }
    }

    #[test]
    fn gaussian_solve() {
        let x = solve_dense(vec![vec![2.0, 1.0], vec![1.0, 3.0]], vec![3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
    }
}
