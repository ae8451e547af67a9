//! Zero-sum matrix games solved by a dense tableau simplex.

use crate::{Error, Result};

const PIVOT_EPS: f64 = 1e-12;

/// Optimal strategies of a finite zero-sum game.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSolution {
    pub value: f64,
    /// Mixed strategy of the minimizing row player.
    pub row_strategy: Vec<f64>,
    /// Mixed strategy of the maximizing column player.
    pub col_strategy: Vec<f64>,
}

/// Solves `min_x max_y x^T M y` for the payoff matrix `payoff[row][col]`.
///
/// After shifting the matrix to be strictly positive, the row player's
/// problem becomes `max sum(x)` subject to `M^T x <= 1, x >= 0`. The column
/// player's strategy is read off the dual values of that LP. Bland's rule
/// keeps the simplex from cycling.
pub fn solve_min_max(payoff: &[Vec<f64>]) -> Result<GameSolution> {
    let nr = payoff.len();
    let nc = payoff.first().map_or(0, Vec::len);
    if nr == 0 || nc == 0 || payoff.iter().any(|r| r.len() != nc) {
        return Err(Error::Internal(
            "matrix game needs a non-empty rectangular payoff".into(),
        ));
    }
    let min = payoff
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if !min.is_finite() || payoff.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Internal("matrix game payoff is not finite".into()));
    }
    let shift = 1.0 - min;

    // Tableau: one constraint per column, variables x_0..x_{nr-1} then one
    // slack per constraint, then the right-hand side.
    let width = nr + nc + 1;
    let rhs = width - 1;
    let mut t = vec![vec![0.0; width]; nc + 1];
    for c in 0..nc {
        for r in 0..nr {
            t[c][r] = payoff[r][c] + shift;
        }
        t[c][nr + c] = 1.0;
        t[c][rhs] = 1.0;
    }
    let obj = nc;
    for r in 0..nr {
        t[obj][r] = -1.0;
    }
    let mut basis: Vec<usize> = (0..nc).map(|c| nr + c).collect();

    let max_pivots = 50 * (nr + nc) + 1000;
    let mut pivots = 0;
    while let Some(enter) = (0..nr + nc).find(|&j| t[obj][j] < -PIVOT_EPS) {
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..nc {
            let a = t[i][enter];
            if a > PIVOT_EPS {
                let ratio = t[i][rhs] / a;
                let better = match leave {
                    None => true,
                    Some(l) => {
                        ratio < best - PIVOT_EPS
                            || (ratio <= best + PIVOT_EPS && basis[i] < basis[l])
                    }
                };
                if better {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let leave = leave.ok_or_else(|| Error::Internal("matrix game LP is unbounded".into()))?;
        pivot(&mut t, leave, enter);
        basis[leave] = enter;
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Internal(
                "matrix game simplex did not terminate".into(),
            ));
        }
    }

    let mut x = vec![0.0; nr];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < nr {
            x[bv] = t[i][rhs].max(0.0);
        }
    }
    let total: f64 = x.iter().sum();
    if total <= 0.0 {
        return Err(Error::Internal(
            "matrix game LP returned a zero solution".into(),
        ));
    }
    let row_strategy: Vec<f64> = x.iter().map(|v| v / total).collect();
    let y: Vec<f64> = (0..nc).map(|c| t[obj][nr + c].max(0.0)).collect();
    let ysum: f64 = y.iter().sum();
    let col_strategy = if ysum > 0.0 {
        y.iter().map(|v| v / ysum).collect()
    } else {
        vec![1.0 / nc as f64; nc]
    };
    Ok(GameSolution {
        value: 1.0 / total - shift,
        row_strategy,
        col_strategy,
    })
}

fn pivot(t: &mut [Vec<f64>], row: usize, col: usize) {
    let p = t[row][col];
    for v in t[row].iter_mut() {
        *v /= p;
    }
    let pivot_row = t[row].clone();
    for (i, r) in t.iter_mut().enumerate() {
        if i == row {
            continue;
        }
        let f = r[col];
        if f != 0.0 {
            for (v, pv) in r.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            r[col] = 0.0;
        }
    }
}
