//! Rectangular linear assignment (Hungarian / shortest augmenting path).

/// Assignment that maximizes the total of `similarity[row][col]` over a
/// matching of size `min(rows, cols)`. Returns `(row, col)` pairs sorted by
/// row. Every row of `similarity` must have the same length.
pub fn maximize(similarity: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let rows = similarity.len();
    let cols = similarity.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let mut pairs = if rows <= cols {
        solve(rows, cols, |r, c| -similarity[r][c])
    } else {
        solve(cols, rows, |r, c| -similarity[c][r])
            .into_iter()
            .map(|(c, r)| (r, c))
            .collect()
    };
    pairs.sort_unstable();
    pairs
}

/// Like [`maximize`] but drops assigned pairs whose similarity is below
/// `min_similarity` after the optimal assignment has been found.
pub fn maximize_gated(similarity: &[Vec<f64>], min_similarity: f64) -> Vec<(usize, usize)> {
    maximize(similarity)
        .into_iter()
        .filter(|&(r, c)| similarity[r][c] >= min_similarity)
        .collect()
}

/// Greedy matching by descending similarity, for ablations.
pub fn greedy_gated(similarity: &[Vec<f64>], min_similarity: f64) -> Vec<(usize, usize)> {
    let mut candidates: Vec<(f64, usize, usize)> = similarity
        .iter()
        .enumerate()
        .flat_map(|(r, row)| row.iter().enumerate().map(move |(c, &s)| (s, r, c)))
        .filter(|&(s, _, _)| s >= min_similarity)
        .collect();
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let rows = similarity.len();
    let cols = similarity.first().map_or(0, Vec::len);
    let (mut row_used, mut col_used) = (vec![false; rows], vec![false; cols]);
    let mut out = Vec::new();
    for (_, r, c) in candidates {
        if !row_used[r] && !col_used[c] {
            row_used[r] = true;
            col_used[c] = true;
            out.push((r, c));
        }
    }
    out.sort_unstable();
    out
}

/// Min-cost assignment of every row to a distinct column, `n <= m`.
fn solve(n: usize, m: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<(usize, usize)> {
    // 1-based potentials; column 0 is the virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut min_v = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < min_v[j] {
                    min_v[j] = reduced;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
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

    (1..=m)
        .filter(|&j| owner[j] != 0)
        .map(|j| (owner[j] - 1, j - 1))
        .collect()
}
