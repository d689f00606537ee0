use crate::error::{Error, Result};

/// A 1D density tabulated on a uniform grid over `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Density1D {
    lo: f64,
    hi: f64,
    values: Vec<f64>,
}

impl Density1D {
    /// Evaluates `f` at `points` equally spaced nodes including both ends.
    pub fn tabulate(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(hi > lo) || points < 2 {
            return Err(Error::input("density grid needs hi > lo and at least two points"));
        }
        let h = (hi - lo) / (points - 1) as f64;
        let values: Vec<f64> = (0..points).map(|i| f(lo + i as f64 * h)).collect();
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::input(format!("density value {} at node {i} is not a finite non-negative number", values[i])));
        }
        Ok(Self { lo, hi, values })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.values.len() - 1) as f64
    }

    /// Trapezoid-rule mass over the grid.
    pub fn mass(&self) -> f64 {
        trapezoid(self.values.iter().copied(), self.step())
    }
}

fn trapezoid(values: impl ExactSizeIterator<Item = f64>, h: f64) -> f64 {
    let n = values.len();
    values
        .enumerate()
        .map(|(i, v)| if i == 0 || i + 1 == n { 0.5 * v } else { v })
        .sum::<f64>()
        * h
}

/// Total variation `½∫|p − q|` by the trapezoid rule, clipped to `[0, 1]`.
pub fn tv_1d(p: &Density1D, q: &Density1D) -> Result<f64> {
    if p.lo != q.lo || p.hi != q.hi || p.values.len() != q.values.len() {
        return Err(Error::input("total variation needs densities on the same grid"));
    }
    let tv = 0.5 * trapezoid(p.values.iter().zip(&q.values).map(|(a, b)| (a - b).abs()), p.step());
    Ok(tv.clamp(0.0, 1.0))
}
