//! Vertex enumeration of interval rows.

use crate::model::{UncertainRow, PROB_EPS};

/// Every vertex of `{p : lo <= p <= hi, sum p = 1}`, aligned with the row's
/// entries (duplicates possible).
///
/// At a vertex all coordinates but at most one sit on a bound, so trying each
/// free coordinate against every lo/hi assignment of the others finds them all.
pub fn row_vertices(row: &UncertainRow) -> Vec<Vec<f64>> {
    let n = row.len();
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    for free in 0..n {
        for mask in 0u64..(1u64 << (n - 1)) {
            let mut p = vec![0.0; n];
            let mut bit = 0;
            let mut rest = 0.0;
            for (k, (_, iv)) in row.entries.iter().enumerate() {
                if k == free {
                    continue;
                }
                p[k] = if mask >> bit & 1 == 1 { iv.hi } else { iv.lo };
                rest += p[k];
                bit += 1;
            }
            let iv = row.entries[free].1;
            let pf = 1.0 - rest;
            if pf >= iv.lo - PROB_EPS && pf <= iv.hi + PROB_EPS {
                p[free] = pf.clamp(iv.lo, iv.hi);
                out.push(p);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ProbInterval, StateId};

    #[test]
    fn unit_box_on_two_entries_has_two_vertices() {
        let row = UncertainRow::new(vec![
            (StateId(0), ProbInterval::new(0.0, 1.0)),
            (StateId(1), ProbInterval::new(0.0, 1.0)),
        ]);
        let mut v = row_vertices(&row);
        v.sort_by(|a, b| a[0].total_cmp(&b[0]));
        v.dedup();
        assert_eq!(v, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn infeasible_row_has_no_vertices() {
        let row = UncertainRow::new(vec![(StateId(0), ProbInterval::new(0.0, 0.5))]);
        assert!(row_vertices(&row).is_empty());
    }
}
