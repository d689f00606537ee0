use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metrics::{slope_fit, SlopeFit};

/// One measured value. For `tv_example` the `sigma_min` column carries ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub experiment: String,
    pub repeat: usize,
    pub n: usize,
    pub sigma_min: f64,
    pub metric: String,
    pub value: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub metric: String,
    pub n: usize,
    pub sigma_min: f64,
    pub count: usize,
    pub median: f64,
    pub iqr: f64,
}

/// A fitted log–log slope with the band it is judged against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeRecord {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub fit: Option<SlopeFit>,
    pub target: f64,
    pub band: (f64, f64),
    pub note: Option<String>,
}

impl SlopeRecord {
    /// Fits `log y` against `log x`; too few or non-positive points leave `fit` empty.
    pub fn fit_loglog(name: &str, points: Vec<(f64, f64)>, target: f64, band: (f64, f64)) -> Self {
        let usable = points.iter().all(|&(x, y)| x > 0.0 && y > 0.0);
        let (fit, note) = if !usable {
            (None, Some("non-positive values; slope not fitted".to_string()))
        } else {
            let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
            let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
            match slope_fit(&xs, &ys) {
                Ok(f) => (Some(f), None),
                Err(e) => (None, Some(format!("slope fit refused: {e}"))),
            }
        };
        Self { name: name.into(), points, fit, target, band, note }
    }

    pub fn in_band(&self) -> bool {
        self.fit.is_some_and(|f| f.slope >= self.band.0 && f.slope <= self.band.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub rows: Vec<Row>,
    pub aggregates: Vec<Aggregate>,
    pub slopes: Vec<SlopeRecord>,
    /// Named derived quantities (ratios, margins, verdicts as 0/1).
    pub summary: BTreeMap<String, f64>,
    pub flags: Vec<String>,
    pub wall_clock_s: f64,
}

impl RunRecord {
    pub fn new(experiment: &str, config_hash: String, seed: u64) -> Self {
        Self {
            experiment: experiment.into(),
            config_hash,
            seed,
            rows: Vec::new(),
            aggregates: Vec::new(),
            slopes: Vec::new(),
            summary: BTreeMap::new(),
            flags: Vec::new(),
            wall_clock_s: 0.0,
        }
    }

    pub fn push(&mut self, repeat: usize, n: usize, sigma_min: f64, metric: &str, value: f64, seed: u64) {
        self.rows.push(Row {
            experiment: self.experiment.clone(),
            repeat,
            n,
            sigma_min,
            metric: metric.into(),
            value,
            seed,
        });
    }

    pub fn flag(&mut self, msg: impl Into<String>) {
        self.flags.push(msg.into());
    }

    /// Sorts rows and recomputes every aggregate from them.
    pub fn finish(&mut self) {
        self.rows.sort_by(|a, b| {
            a.metric
                .cmp(&b.metric)
                .then(a.n.cmp(&b.n))
                .then(a.sigma_min.total_cmp(&b.sigma_min))
                .then(a.repeat.cmp(&b.repeat))
        });
        self.aggregates = aggregate(&self.rows);
    }

    pub fn values(&self, metric: &str, n: usize, sigma_min: f64) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.metric == metric && r.n == n && r.sigma_min == sigma_min)
            .map(|r| r.value)
            .collect()
    }

    pub fn aggregate_for(&self, metric: &str, n: usize, sigma_min: f64) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.metric == metric && a.n == n && a.sigma_min == sigma_min)
    }

    pub fn slope(&self, name: &str) -> Option<&SlopeRecord> {
        self.slopes.iter().find(|s| s.name == name)
    }

    /// Rows must already be sorted (see [`finish`](Self::finish)).
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn aggregate(rows: &[Row]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(String, usize, u64), Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.metric.clone(), r.n, r.sigma_min.to_bits())).or_default().push(r.value);
    }
    let mut out: Vec<Aggregate> = groups
        .into_iter()
        .map(|((metric, n, bits), values)| {
            let (median, iqr) = median_iqr(&values);
            Aggregate { metric, n, sigma_min: f64::from_bits(bits), count: values.len(), median, iqr }
        })
        .collect();
    out.sort_by(|a, b| a.metric.cmp(&b.metric).then(a.n.cmp(&b.n)).then(a.sigma_min.total_cmp(&b.sigma_min)));
    out
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median_iqr(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    (quantile(&v, 0.5), quantile(&v, 0.75) - quantile(&v, 0.25))
}

pub fn median(values: &[f64]) -> f64 {
    median_iqr(values).0
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}
