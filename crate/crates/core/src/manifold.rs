//! The sine curve `{(y, sin y) : y ∈ [−3, 3]}` as a one-dimensional manifold
//! in the plane: sampling, nearest-point projection and the statistics used to
//! judge generated samples against it.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::w1_1d;
use crate::rng::rng_from_seed;

pub const PARAM_LO: f64 = -3.0;
pub const PARAM_HI: f64 = 3.0;
pub const DEFAULT_TUBE_RADIUS: f64 = 0.25;

const ARC_TABLE_POINTS: usize = 60_001;
const PROJECTION_GRID_STEP: f64 = 1e-3;
const NEWTON_TOL: f64 = 1e-10;
const COARSE_STRIDE: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Uniform in arc length.
    ArcUniform,
    /// Uniform in the first coordinate.
    XUniform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub foot: [f64; 2],
    pub param: f64,
    /// Arc-length coordinate of the foot, in `[0, L]`.
    pub arc: f64,
    pub dist: f64,
    pub in_tube: bool,
}

/// Result of [`SineChart::arc_w1`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcW1 {
    pub w1: f64,
    pub out_of_tube_a: usize,
    pub out_of_tube_b: usize,
}

#[derive(Debug, Clone)]
pub struct SineChart {
    table_params: Vec<f64>,
    table_arcs: Vec<f64>,
    grid_params: Vec<f64>,
    grid_sines: Vec<f64>,
    tube_radius: f64,
    reach: f64,
}

fn speed(y: f64) -> f64 {
    (1.0 + y.cos().powi(2)).sqrt()
}

impl SineChart {
    /// Builds the chart; fails when `tube_radius` is not below the estimated reach.
    pub fn new(tube_radius: f64) -> Result<Self> {
        let n = ARC_TABLE_POINTS;
        let h = (PARAM_HI - PARAM_LO) / (n - 1) as f64;
        let table_params: Vec<f64> = (0..n).map(|i| PARAM_LO + i as f64 * h).collect();
        let mut table_arcs = Vec::with_capacity(n);
        table_arcs.push(0.0);
        for i in 1..n {
            let step = 0.5 * h * (speed(table_params[i - 1]) + speed(table_params[i]));
            table_arcs.push(table_arcs[i - 1] + step);
        }
        let g = ((PARAM_HI - PARAM_LO) / PROJECTION_GRID_STEP).round() as usize + 1;
        let grid_params: Vec<f64> =
            (0..g).map(|i| (PARAM_LO + i as f64 * PROJECTION_GRID_STEP).min(PARAM_HI)).collect();
        let grid_sines = grid_params.iter().map(|y| y.sin()).collect();
        let mut chart =
            Self { table_params, table_arcs, grid_params, grid_sines, tube_radius, reach: f64::NAN };
        chart.reach = chart.estimate_reach();
        if !(tube_radius > 0.0 && tube_radius < chart.reach) {
            return Err(Error::input(format!(
                "tube radius {tube_radius} must lie in (0, {:.6}), the estimated reach",
                chart.reach
            )));
        }
        Ok(chart)
    }

    /// min(1/max curvature, half the smallest distance between points that are
    /// far apart along the curve).
    fn estimate_reach(&self) -> f64 {
        let curvature_radius = 1.0
            / self
                .table_params
                .iter()
                .map(|&y| y.sin().abs() / (1.0 + y.cos().powi(2)).powf(1.5))
                .fold(0.0, f64::max);
        let coarse: Vec<(f64, [f64; 2])> =
            (0..=600).map(|i| PARAM_LO + i as f64 * 0.01).map(|y| (self.arc_of_param(y), self.point(y))).collect();
        let mut bottleneck = f64::INFINITY;
        for (i, (si, pi)) in coarse.iter().enumerate() {
            for (sj, pj) in &coarse[i + 1..] {
                if sj - si >= std::f64::consts::PI * curvature_radius {
                    let d = ((pi[0] - pj[0]).powi(2) + (pi[1] - pj[1]).powi(2)).sqrt();
                    bottleneck = bottleneck.min(0.5 * d);
                }
            }
        }
        curvature_radius.min(bottleneck)
    }

    pub fn reach(&self) -> f64 {
        self.reach
    }

    pub fn tube_radius(&self) -> f64 {
        self.tube_radius
    }

    pub fn total_length(&self) -> f64 {
        *self.table_arcs.last().unwrap()
    }

    pub fn point(&self, param: f64) -> [f64; 2] {
        [param, param.sin()]
    }

    pub fn arc_of_param(&self, param: f64) -> f64 {
        let y = param.clamp(PARAM_LO, PARAM_HI);
        let h = (PARAM_HI - PARAM_LO) / (ARC_TABLE_POINTS - 1) as f64;
        let i = (((y - PARAM_LO) / h).floor() as usize).min(ARC_TABLE_POINTS - 2);
        let frac = (y - self.table_params[i]) / h;
        self.table_arcs[i] + frac * (self.table_arcs[i + 1] - self.table_arcs[i])
    }

    pub fn param_of_arc(&self, arc: f64) -> f64 {
        let s = arc.clamp(0.0, self.total_length());
        let i = self.table_arcs.partition_point(|&a| a <= s).clamp(1, ARC_TABLE_POINTS - 1) - 1;
        let (a0, a1) = (self.table_arcs[i], self.table_arcs[i + 1]);
        let frac = if a1 > a0 { (s - a0) / (a1 - a0) } else { 0.0 };
        self.table_params[i] + frac * (self.table_params[i + 1] - self.table_params[i])
    }

    pub fn sample(&self, count: usize, seed: u64, mode: SamplingMode) -> Result<Vec<Vec<f64>>> {
        Ok(self.sample_params(count, seed, mode)?.into_iter().map(|y| self.point(y).to_vec()).collect())
    }

    /// Curve parameters of `count` draws.
    pub fn sample_params(&self, count: usize, seed: u64, mode: SamplingMode) -> Result<Vec<f64>> {
        if count == 0 {
            return Err(Error::input("sample count must be at least 1"));
        }
        let mut rng = rng_from_seed(seed);
        let total = self.total_length();
        Ok((0..count)
            .map(|_| match mode {
                SamplingMode::ArcUniform => self.param_of_arc(rng.gen_range(0.0..=total)),
                SamplingMode::XUniform => rng.gen_range(PARAM_LO..=PARAM_HI),
            })
            .collect())
    }

    /// Nearest point of the curve: dense grid search, then Newton refinement
    /// of the squared distance. Newton failures fall back to the grid point.
    ///
    /// The dense scan only visits coarse cells that can still contain the
    /// minimum: between coarse nodes the curve moves at speed ≤ √2, so a cell
    /// whose node is farther than the best node plus √2·half-width is skipped.
    /// The result equals a full scan of the dense grid.
    pub fn project(&self, p: &[f64]) -> Projection {
        debug_assert_eq!(p.len(), 2);
        let (px, py) = (p[0], p[1]);
        let d2_at = |i: usize| {
            let (y, s) = (self.grid_params[i], self.grid_sines[i]);
            (y - px) * (y - px) + (s - py) * (s - py)
        };
        let last = self.grid_params.len() - 1;
        let coarse: Vec<(usize, f64)> =
            (0..=last).step_by(COARSE_STRIDE).map(|i| (i, d2_at(i).sqrt())).collect();
        let best_coarse = coarse.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        let slack = std::f64::consts::SQRT_2 * PROJECTION_GRID_STEP * (COARSE_STRIDE / 2 + 1) as f64;
        let mut best = 0;
        let mut best_d2 = f64::INFINITY;
        for &(centre, d) in &coarse {
            if d - slack > best_coarse {
                continue;
            }
            let lo = centre.saturating_sub(COARSE_STRIDE / 2);
            let hi = (centre + COARSE_STRIDE / 2).min(last);
            for i in lo..=hi {
                let d2 = d2_at(i);
                if d2 < best_d2 || (d2 == best_d2 && i < best) {
                    best_d2 = d2;
                    best = i;
                }
            }
        }
        let grid_y = self.grid_params[best];
        let param = self.newton_refine(grid_y, px, py).unwrap_or(grid_y);
        let foot = self.point(param);
        let dist = ((foot[0] - px).powi(2) + (foot[1] - py).powi(2)).sqrt();
        Projection { foot, param, arc: self.arc_of_param(param), dist, in_tube: dist <= self.tube_radius }
    }

    fn newton_refine(&self, start: f64, px: f64, py: f64) -> Option<f64> {
        let d2 = |y: f64| (y - px).powi(2) + (y.sin() - py).powi(2);
        let grad = |y: f64| (y - px) + (y.sin() - py) * y.cos();
        let bracket = (start - 2.0 * PROJECTION_GRID_STEP, start + 2.0 * PROJECTION_GRID_STEP);
        let mut y = start;
        for _ in 0..50 {
            let g = grad(y);
            if (y <= PARAM_LO && g >= 0.0) || (y >= PARAM_HI && g <= 0.0) || g.abs() <= NEWTON_TOL {
                return (d2(y) <= d2(start)).then_some(y);
            }
            let curv = 1.0 + y.cos().powi(2) - (y.sin() - py) * y.sin();
            if !(curv > 0.0) {
                return None;
            }
            y = (y - g / curv).clamp(PARAM_LO, PARAM_HI);
            if y < bracket.0 || y > bracket.1 {
                return None;
            }
        }
        None
    }

    pub fn mean_distance(&self, samples: &[Vec<f64>]) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::input("mean distance needs at least one sample"));
        }
        Ok(samples.iter().map(|p| self.project(p).dist).sum::<f64>() / samples.len() as f64)
    }

    /// Largest spacing between consecutive projected arc coordinates.
    /// With `include_boundary` the stretches from 0 to the first projection
    /// and from the last projection to `L` count as gaps too.
    pub fn largest_gap(&self, samples: &[Vec<f64>], include_boundary: bool) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::input("largest gap needs at least one sample"));
        }
        let mut arcs: Vec<f64> = samples.iter().map(|p| self.project(p).arc).collect();
        arcs.sort_by(f64::total_cmp);
        Ok(max_gap(&arcs, include_boundary.then(|| self.total_length())))
    }

    /// Arc coordinate used for samples outside the tube: the foot of the
    /// origin, which lies on the curve.
    pub fn sentinel_arc(&self) -> f64 {
        self.arc_of_param(0.0)
    }

    /// Projected arc coordinate; out-of-tube points go to [`sentinel_arc`](Self::sentinel_arc).
    pub fn tube_arc(&self, p: &[f64]) -> (f64, bool) {
        let pr = self.project(p);
        if pr.in_tube {
            (pr.arc, true)
        } else {
            (self.sentinel_arc(), false)
        }
    }

    /// Exact 1D W1 between the projected arc coordinates of two equal-size samples.
    pub fn arc_w1(&self, a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<ArcW1> {
        if a.len() != b.len() {
            return Err(Error::input(format!("arc W1 needs equal sizes, got {} and {}", a.len(), b.len())));
        }
        let project_all = |xs: &[Vec<f64>]| {
            let mut outside = 0;
            let arcs: Vec<f64> = xs
                .iter()
                .map(|p| {
                    let (s, inside) = self.tube_arc(p);
                    outside += usize::from(!inside);
                    s
                })
                .collect();
            (arcs, outside)
        };
        let (sa, oa) = project_all(a);
        let (sb, ob) = project_all(b);
        Ok(ArcW1 { w1: w1_1d(&sa, &sb)?, out_of_tube_a: oa, out_of_tube_b: ob })
    }
}

pub(crate) fn max_gap(sorted: &[f64], boundary: Option<f64>) -> f64 {
    let inner = sorted.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    match boundary {
        Some(total) => inner.max(sorted[0]).max(total - sorted[sorted.len() - 1]),
        None => inner,
    }
}
