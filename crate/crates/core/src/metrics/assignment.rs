//! Exact W1 between equal-size point clouds as a linear assignment problem.
//!
//! Solved by shortest augmenting paths with dual potentials (Hungarian
//! method, O(m³)) directly on `f64` Euclidean costs.

use crate::error::{Error, Result};

use super::{TransportMethod, TransportResult};

pub const DEFAULT_ASSIGNMENT_CAP: usize = 2048;

/// Minimum-cost perfect matching on a square row-major cost matrix.
/// Returns `assign` with row `i` matched to column `assign[i]`.
pub fn solve_assignment(cost: &[f64], m: usize) -> Vec<usize> {
    assert_eq!(cost.len(), m * m, "cost matrix must be m x m");
    if m == 0 {
        return Vec::new();
    }
    // 1-based duals; column 0 is the virtual root of each search.
    let mut u = vec![0.0f64; m + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut row_of = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut min_slack = vec![0.0f64; m + 1];
    let mut used = vec![false; m + 1];

    for i in 1..=m {
        row_of[0] = i;
        let mut j0 = 0usize;
        min_slack.iter_mut().for_each(|s| *s = f64::INFINITY);
        used.iter_mut().for_each(|s| *s = false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let row = &cost[(i0 - 1) * m..i0 * m];
            let ui0 = u[i0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = row[j - 1] - ui0 - v[j];
                if cur < min_slack[j] {
                    min_slack[j] = cur;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
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
    let mut assign = vec![0usize; m];
    for j in 1..=m {
        assign[row_of[j] - 1] = j - 1;
    }
    assign
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn w1_assignment(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<TransportResult> {
    w1_assignment_capped(a, b, DEFAULT_ASSIGNMENT_CAP)
}

/// Exact W1 with an explicit size cap.
pub fn w1_assignment_capped(a: &[Vec<f64>], b: &[Vec<f64>], cap: usize) -> Result<TransportResult> {
    let m = a.len();
    if m != b.len() {
        return Err(Error::input(format!("assignment W1 needs equal sizes, got {m} and {}", b.len())));
    }
    if m == 0 {
        return Err(Error::input("assignment W1 needs non-empty samples"));
    }
    if m > cap {
        return Err(Error::Size { size: m, cap, advice: "subsample, or use w1_sliced as a diagnostic" });
    }
    let d = a[0].len();
    if a.iter().chain(b).any(|p| p.len() != d) {
        return Err(Error::input("assignment W1: inconsistent point dimensions"));
    }
    let mut cost = Vec::with_capacity(m * m);
    for p in a {
        for q in b {
            cost.push(euclid(p, q));
        }
    }
    let assign = solve_assignment(&cost, m);
    let total: f64 = assign.iter().enumerate().map(|(i, &j)| cost[i * m + j]).sum();
    Ok(TransportResult {
        cost: total / m as f64,
        plan: Some(assign.into_iter().enumerate().collect()),
        method: TransportMethod::Assignment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::w1_1d;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn brute_force(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
        let m = a.len();
        let mut perm: Vec<usize> = (0..m).collect();
        let mut best = f64::INFINITY;
        // Heap's algorithm over all m! matchings.
        fn heap(k: usize, perm: &mut Vec<usize>, a: &[Vec<f64>], b: &[Vec<f64>], best: &mut f64) {
            if k <= 1 {
                let c: f64 = perm.iter().enumerate().map(|(i, &j)| euclid(&a[i], &b[j])).sum();
                *best = best.min(c);
                return;
            }
            for i in 0..k {
                heap(k - 1, perm, a, b, best);
                if k.is_multiple_of(2) {
                    perm.swap(i, k - 1);
                } else {
                    perm.swap(0, k - 1);
                }
            }
        }
        heap(m, &mut perm, a, b, &mut best);
        best / m as f64
    }

    #[test]
    fn examples() {
        let a = vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![-1.0, 0.5]];
        let mut b = a.clone();
        b.rotate_left(1);
        assert!(w1_assignment(&a, &b).unwrap().cost.abs() < 1e-15);
        let r = w1_assignment(&[vec![0.0, 0.0]], &[vec![3.0, 4.0]]).unwrap();
        assert_eq!(r.cost, 5.0);
        assert_eq!(r.plan, Some(vec![(0, 0)]));
    }

    #[test]
    fn matches_permutation_brute_force() {
        let mut rng = rng_from_seed(31);
        for _ in 0..60 {
            let m = rng.gen_range(1..=6);
            let d = rng.gen_range(1..=3);
            let a: Vec<Vec<f64>> = (0..m).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
            let b: Vec<Vec<f64>> = (0..m).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
            let r = w1_assignment(&a, &b).unwrap();
            assert!((r.cost - brute_force(&a, &b)).abs() < 1e-9);
            let plan = r.plan.unwrap();
            let mut cols: Vec<usize> = plan.iter().map(|p| p.1).collect();
            cols.sort_unstable();
            assert_eq!(cols, (0..m).collect::<Vec<_>>());
        }
    }

    #[test]
    fn one_dimensional_agrees_with_sorting() {
        let mut rng = rng_from_seed(8);
        for m in [5, 40, 300] {
            let a: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-0.5..2.0)).collect();
            let av: Vec<Vec<f64>> = a.iter().map(|&v| vec![v]).collect();
            let bv: Vec<Vec<f64>> = b.iter().map(|&v| vec![v]).collect();
            assert!((w1_assignment(&av, &bv).unwrap().cost - w1_1d(&a, &b).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn size_cap_and_input_errors() {
        let a = vec![vec![0.0]; 5];
        assert!(matches!(w1_assignment_capped(&a, &a, 4), Err(Error::Size { .. })));
        assert!(w1_assignment(&a, &a[..4]).is_err());
        assert!(w1_assignment(&[], &[]).is_err());
        assert!(w1_assignment(&[vec![0.0]], &[vec![0.0, 1.0]]).is_err());
    }
}
