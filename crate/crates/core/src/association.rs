//! Per-frame correspondence between predicted tracklet boxes and detections.
//!
//! The solver is the shortest-augmenting-path form of the Hungarian (Kuhn-Munkres)
//! method with row/column potentials. It works on rectangular matrices directly:
//! when there are more rows than columns it solves the transpose.

use crate::error::{Error, Result};
use crate::geometry::{iou, BBox};

/// Dense row-major score matrix. Rows are tracklet predictions, columns detections.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Config(format!(
                "cost matrix {rows}x{cols} needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Config(format!(
                "cost matrix entry {v} outside [0, 1]"
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                values.push(f(r, c).clamp(0.0, 1.0));
            }
        }
        Self { rows, cols, values }
    }

    /// IOU of every prediction against every detection.
    pub fn iou(predictions: &[BBox], detections: &[BBox]) -> Self {
        Self::from_fn(predictions.len(), detections.len(), |r, c| {
            iou(&predictions[r], &detections[c])
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssociationResult {
    /// `(row, col)` pairs sorted by row.
    pub matches: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
}

impl AssociationResult {
    /// Sum of matched scores, accumulated in row order.
    pub fn total(&self, costs: &CostMatrix) -> f64 {
        self.matches.iter().map(|&(r, c)| costs.get(r, c)).sum()
    }

    fn from_matches(mut matches: Vec<(usize, usize)>, rows: usize, cols: usize) -> Self {
        matches.sort_unstable();
        let mut row_used = vec![false; rows];
        let mut col_used = vec![false; cols];
        for &(r, c) in &matches {
            row_used[r] = true;
            col_used[c] = true;
        }
        Self {
            unmatched_rows: (0..rows).filter(|&r| !row_used[r]).collect(),
            unmatched_cols: (0..cols).filter(|&c| !col_used[c]).collect(),
            matches,
        }
    }
}

/// Maximum-total matching of size `min(rows, cols)`.
pub fn solve_assignment(costs: &CostMatrix) -> AssociationResult {
    let (rows, cols) = (costs.rows, costs.cols);
    if rows == 0 || cols == 0 {
        return AssociationResult::from_matches(Vec::new(), rows, cols);
    }
    let matches = if rows <= cols {
        min_cost_assignment(rows, cols, |r, c| -costs.get(r, c))
            .into_iter()
            .enumerate()
            .collect()
    } else {
        min_cost_assignment(cols, rows, |c, r| -costs.get(r, c))
            .into_iter()
            .enumerate()
            .map(|(c, r)| (r, c))
            .collect()
    };
    AssociationResult::from_matches(matches, rows, cols)
}

/// Minimum-cost assignment of every one of `n` rows to a distinct column out of `m >= n`.
/// Returns the column chosen for each row.
fn min_cost_assignment(n: usize, m: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    debug_assert!(n <= m);
    // 1-based indices; column 0 is the virtual root of each augmenting search.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0usize;
        let mut min_slack = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < min_slack[j] {
                    min_slack[j] = reduced;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=m {
        if owner[j] != 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Demotes every match whose score is not strictly above `threshold`.
pub fn gate_matches(
    result: &AssociationResult,
    costs: &CostMatrix,
    threshold: f64,
) -> AssociationResult {
    let matches = result
        .matches
        .iter()
        .copied()
        .filter(|&(r, c)| costs.get(r, c) > threshold)
        .collect();
    AssociationResult::from_matches(matches, costs.rows, costs.cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive maximum over all injective row-to-column maps.
    fn brute_force_max(costs: &CostMatrix) -> f64 {
        fn rec(costs: &CostMatrix, row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if row == costs.rows() {
                *best = best.max(acc);
                return;
            }
            let mut any = false;
            for c in 0..costs.cols() {
                if !used[c] {
                    any = true;
                    used[c] = true;
                    rec(costs, row + 1, used, acc + costs.get(row, c), best);
                    used[c] = false;
                }
            }
            // More rows than columns: a row may stay unmatched.
            if !any || costs.rows() > costs.cols() {
                rec(costs, row + 1, used, acc, best);
            }
        }
        let mut best = f64::NEG_INFINITY;
        rec(costs, 0, &mut vec![false; costs.cols()], 0.0, &mut best);
        best
    }

    #[test]
    fn single_entry() {
        let m = CostMatrix::new(1, 1, vec![0.9]).unwrap();
        assert_eq!(solve_assignment(&m).matches, vec![(0, 0)]);
    }

    #[test]
    fn dominant_diagonal() {
        let m = CostMatrix::from_fn(3, 3, |r, c| if r == c { 0.9 } else { 0.1 });
        let res = solve_assignment(&m);
        assert_eq!(res.matches, vec![(0, 0), (1, 1), (2, 2)]);
        assert!(res.unmatched_rows.is_empty() && res.unmatched_cols.is_empty());
    }

    #[test]
    fn empty_dimensions() {
        let m = CostMatrix::new(0, 3, vec![]).unwrap();
        let res = solve_assignment(&m);
        assert!(res.matches.is_empty());
        assert_eq!(res.unmatched_cols, vec![0, 1, 2]);
        let m = CostMatrix::new(2, 0, vec![]).unwrap();
        assert_eq!(solve_assignment(&m).unmatched_rows, vec![0, 1]);
    }

    #[test]
    fn uniform_ties_resolve_to_lowest_indices() {
        let m = CostMatrix::from_fn(3, 3, |_, _| 0.5);
        assert_eq!(solve_assignment(&m).matches, vec![(0, 0), (1, 1), (2, 2)]);
        let m = CostMatrix::from_fn(2, 4, |_, _| 0.5);
        assert_eq!(solve_assignment(&m).matches, vec![(0, 0), (1, 1)]);
        let m = CostMatrix::from_fn(4, 2, |_, _| 0.5);
        assert_eq!(solve_assignment(&m).matches, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn rectangular_reports_unmatched() {
        let m = CostMatrix::new(2, 3, vec![0.1, 0.8, 0.0, 0.7, 0.6, 0.0]).unwrap();
        let res = solve_assignment(&m);
        assert_eq!(res.matches, vec![(0, 1), (1, 0)]);
        assert_eq!(res.unmatched_cols, vec![2]);
        let t = CostMatrix::new(3, 2, vec![0.1, 0.7, 0.8, 0.6, 0.0, 0.0]).unwrap();
        let res = solve_assignment(&t);
        assert_eq!(res.matches, vec![(0, 1), (1, 0)]);
        assert_eq!(res.unmatched_rows, vec![2]);
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(CostMatrix::new(2, 2, vec![0.1; 3]).is_err());
        assert!(CostMatrix::new(1, 1, vec![1.5]).is_err());
    }

    #[test]
    fn gate_is_strict() {
        let m = CostMatrix::new(1, 1, vec![0.25]).unwrap();
        let gated = gate_matches(&solve_assignment(&m), &m, 0.25);
        assert!(gated.matches.is_empty());
        assert_eq!(gated.unmatched_rows, vec![0]);
        assert_eq!(gated.unmatched_cols, vec![0]);
    }

    #[test]
    fn gate_keeps_all_above() {
        let m = CostMatrix::from_fn(2, 2, |r, c| if r == c { 0.8 } else { 0.0 });
        let res = solve_assignment(&m);
        assert_eq!(gate_matches(&res, &m, 0.25), res);
    }

    #[test]
    fn gate_mixed_fixture() {
        // Optimal matching is the diagonal (0.9 + 0.25 + 0.3 = 1.45, beating every
        // other permutation); of those only 0.9 and 0.3 are above 0.25.
        let m = CostMatrix::new(
            3,
            3,
            vec![
                0.9, 0.2, 0.0, //
                0.1, 0.25, 0.1, //
                0.0, 0.2, 0.3,
            ],
        )
        .unwrap();
        let res = solve_assignment(&m);
        assert_eq!(res.matches, vec![(0, 0), (1, 1), (2, 2)]);
        let gated = gate_matches(&res, &m, 0.25);
        assert_eq!(gated.matches, vec![(0, 0), (2, 2)]);
        assert_eq!(gated.unmatched_rows, vec![1]);
        assert_eq!(gated.unmatched_cols, vec![1]);
    }

    fn matrix() -> impl Strategy<Value = CostMatrix> {
        (0usize..=7, 0usize..=7).prop_flat_map(|(r, c)| {
            prop::collection::vec(0u32..=1024, r * c).prop_map(move |v| {
                CostMatrix::new(r, c, v.into_iter().map(|x| x as f64 / 1024.0).collect()).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn optimal_against_brute_force(m in matrix()) {
            let res = solve_assignment(&m);
            prop_assert_eq!(res.matches.len(), m.rows().min(m.cols()));
            prop_assert_eq!(res.total(&m), brute_force_max(&m));
        }

        #[test]
        fn deterministic(m in matrix()) {
            prop_assert_eq!(solve_assignment(&m), solve_assignment(&m));
        }

        #[test]
        fn gate_monotone(m in matrix(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let res = solve_assignment(&m);
            prop_assert!(gate_matches(&res, &m, hi).matches.len() <= gate_matches(&res, &m, lo).matches.len());
        }
    }
}
