//! Maximum-weight one-to-one assignment (Kuhn-Munkres with potentials).

/// Assignment of rows to columns maximizing the summed weight.
///
/// `weights` is `rows x cols`, row-major, non-negative. Every row is matched
/// when `rows <= cols`, every column otherwise. Returns `assignment[row]`.
pub fn max_weight_assignment(weights: &[i64], rows: usize, cols: usize) -> Vec<Option<usize>> {
    assert_eq!(weights.len(), rows * cols, "weight matrix shape");
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    let n = rows.max(cols);
    let big = weights.iter().copied().max().unwrap_or(0);
    // square min-cost problem; padding cells cost as much as a zero weight
    let cost = |i: usize, j: usize| -> i64 {
        if i < rows && j < cols {
            big - weights[i * cols + j]
        } else {
            big
        }
    };
    // 1-based potentials, p[j] = row matched to column j
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![None; rows];
    for j in 1..=n {
        let i = p[j];
        if i >= 1 && i <= rows && j <= cols {
            assignment[i - 1] = Some(j - 1);
        }
    }
    assignment
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn total(w: &[i64], cols: usize, a: &[Option<usize>]) -> i64 {
        a.iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| w[i * cols + j]))
            .sum()
    }

    /// Best total over all injective maps of the smaller side.
    fn brute(w: &[i64], rows: usize, cols: usize) -> i64 {
        fn go(w: &[i64], rows: usize, cols: usize, i: usize, used: &mut Vec<bool>) -> i64 {
            if i == rows {
                return 0;
            }
            // row i may stay unmatched only if columns run out
            let mut best = if rows > cols {
                go(w, rows, cols, i + 1, used)
            } else {
                i64::MIN
            };
            for j in 0..cols {
                if !used[j] {
                    used[j] = true;
                    best = best.max(w[i * cols + j] + go(w, rows, cols, i + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        go(w, rows, cols, 0, &mut vec![false; cols])
    }

    #[test]
    fn small_example() {
        let w = [4, 1, 3, 2, 0, 5, 3, 2, 2];
        let a = max_weight_assignment(&w, 3, 3);
        assert_eq!(total(&w, 3, &a), 11);
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            (rows, cols, w) in (1usize..5, 1usize..5)
                .prop_flat_map(|(r, c)| (Just(r), Just(c), prop::collection::vec(0i64..50, r * c)))
        ) {
            let a = max_weight_assignment(&w, rows, cols);
            let matched: Vec<usize> = a.iter().flatten().copied().collect();
            let mut dedup = matched.clone();
            dedup.sort_unstable();
            dedup.dedup();
            prop_assert_eq!(dedup.len(), matched.len());
            prop_assert_eq!(matched.len(), rows.min(cols));
            prop_assert_eq!(total(&w, cols, &a), brute(&w, rows, cols));
        }
    }
}
