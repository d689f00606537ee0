use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportMethod {
    Sorted1d,
    Assignment,
    Sliced,
}

/// Empirical W1 between two equal-size samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportResult {
    pub cost: f64,
    /// Matching `(i, j)`: `a[i]` is sent to `b[j]`.
    pub plan: Option<Vec<(usize, usize)>>,
    pub method: TransportMethod,
}

/// Exact W1 between two equal-size 1D samples via the sorted (quantile) coupling.
pub fn w1_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::input(format!("w1_1d needs equal sizes, got {} and {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::input("w1_1d needs non-empty samples"));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_unstable_by(f64::total_cmp);
    sb.sort_unstable_by(f64::total_cmp);
    Ok(sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

/// Sliced W1: mean of [`w1_1d`] over random unit directions.
///
/// Each slice is a lower bound on the true W1, so this is a diagnostic only.
pub fn w1_sliced(a: &[Vec<f64>], b: &[Vec<f64>], projections: usize, seed: u64) -> Result<f64> {
    if projections == 0 {
        return Err(Error::input("sliced W1 needs at least one projection"));
    }
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::input("sliced W1 needs equal, non-empty samples"));
    }
    let d = a[0].len();
    if a.iter().chain(b).any(|p| p.len() != d) {
        return Err(Error::input("sliced W1: inconsistent point dimensions"));
    }
    let mut rng = rng_from_seed(seed);
    let mut total = 0.0;
    let mut pa = vec![0.0; a.len()];
    let mut pb = vec![0.0; b.len()];
    for _ in 0..projections {
        let mut u: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        // Directions are taken up to sign; pinning the sign makes d = 1 exact.
        let sign = if u.iter().find(|v| **v != 0.0).copied().unwrap_or(1.0) < 0.0 { -1.0 } else { 1.0 };
        u.iter_mut().for_each(|v| *v *= sign / norm);
        for (dst, p) in pa.iter_mut().zip(a) {
            *dst = p.iter().zip(&u).map(|(x, w)| x * w).sum();
        }
        for (dst, p) in pb.iter_mut().zip(b) {
            *dst = p.iter().zip(&u).map(|(x, w)| x * w).sum();
        }
        total += w1_1d(&pa, &pb)?;
    }
    Ok(total / projections as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn brute_force_1d(a: &[f64], b: &[f64]) -> f64 {
        fn rec(a: &[f64], b: &[f64], used: &mut Vec<bool>, i: usize, acc: f64, best: &mut f64) {
            if i == a.len() {
                *best = best.min(acc);
                return;
            }
            for j in 0..b.len() {
                if !used[j] {
                    used[j] = true;
                    rec(a, b, used, i + 1, acc + (a[i] - b[j]).abs(), best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(a, b, &mut vec![false; b.len()], 0, 0.0, &mut best);
        best / a.len() as f64
    }

    #[test]
    fn small_examples() {
        assert_eq!(w1_1d(&[0.0], &[1.0]).unwrap(), 1.0);
        assert_eq!(w1_1d(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert!((w1_1d(&[0.0, 0.0, 1.0], &[0.0, 1.0, 1.0]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((brute_force_1d(&[0.0, 0.0, 1.0], &[0.0, 1.0, 1.0]) - 1.0 / 3.0).abs() < 1e-15);
        assert!(w1_1d(&[0.0], &[1.0, 2.0]).is_err());
        assert!(w1_1d(&[], &[]).is_err());
    }

    #[test]
    fn sorted_coupling_is_optimal() {
        let mut rng = rng_from_seed(12);
        for m in 1..=6 {
            for _ in 0..20 {
                let a: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
                assert!((w1_1d(&a, &b).unwrap() - brute_force_1d(&a, &b)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sliced_examples() {
        let pts = vec![vec![0.1, 0.2], vec![-1.0, 0.5], vec![0.3, 0.3]];
        assert_eq!(w1_sliced(&pts, &pts, 50, 1).unwrap(), 0.0);

        let a: Vec<Vec<f64>> = [0.5, -1.2, 3.0, 0.0].iter().map(|&v| vec![v]).collect();
        let b: Vec<Vec<f64>> = [1.5, 0.2, -3.0, 2.0].iter().map(|&v| vec![v]).collect();
        let exact = w1_1d(&[0.5, -1.2, 3.0, 0.0], &[1.5, 0.2, -3.0, 2.0]).unwrap();
        for k in [1, 7, 100] {
            assert_eq!(w1_sliced(&a, &b, k, 5).unwrap(), exact);
        }

        // E|cos θ| over uniform directions in the plane is 2/π.
        let v = w1_sliced(&[vec![0.0, 0.0]], &[vec![1.0, 0.0]], 10_000, 3).unwrap();
        assert!((v - 2.0 / std::f64::consts::PI).abs() < 0.02, "{v}");
        assert!(w1_sliced(&a, &b, 0, 1).is_err());
    }
}
