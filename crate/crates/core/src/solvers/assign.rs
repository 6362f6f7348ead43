//! Minimum-cost rectangular assignment (shortest augmenting paths with
//! potentials).

/// Assigns every row to a distinct column minimizing the total cost.
/// `cost[i][j]` may be infinite to forbid a pair. Requires
/// `rows ≤ columns`; returns `None` when no finite assignment exists.
pub(crate) fn min_cost_assignment(cost: &[Vec<f64>]) -> Option<(f64, Vec<usize>)> {
    let n = cost.len();
    if n == 0 {
        return Some((0.0, Vec::new()));
    }
    let m = cost[0].len();
    assert!(n <= m, "more rows than columns");
    // 1-based with a virtual column 0, as in the classic formulation.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut row_of = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut min_to = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let reduced = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if reduced < min_to[j] {
                    min_to[j] = reduced;
                    way[j] = j0;
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    j1 = j;
                }
            }
            if !delta.is_finite() {
                return None;
            }
            for j in 0..=m {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut column = vec![0; n];
    for j in 1..=m {
        if row_of[j] > 0 {
            column[row_of[j] - 1] = j - 1;
        }
    }
    let total = column.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    Some((total, column))
}
