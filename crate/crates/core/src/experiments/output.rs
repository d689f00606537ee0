//! CSV, JSON and SVG emission for run records.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::record::RunRecord;
use crate::error::Result;

pub const CSV_HEADER: &str = "experiment,repeat,n,sigma_min,metric_name,value,seed";

/// Shortest round-trip decimal form; deterministic and locale-free.
fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn to_csv(rec: &RunRecord) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in &rec.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.experiment,
            r.repeat,
            r.n,
            fmt_f64(r.sigma_min),
            r.metric,
            fmt_f64(r.value),
            r.seed
        );
    }
    s
}

/// Files written for one record.
#[derive(Debug, Clone, PartialEq)]
pub struct Written {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub svg: Option<PathBuf>,
}

pub fn write_record(rec: &RunRecord, dir: &Path, plots: bool) -> Result<Written> {
    fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{}.csv", rec.experiment));
    fs::write(&csv, to_csv(rec))?;
    let json = dir.join(format!("{}_summary.json", rec.experiment));
    fs::write(&json, rec.to_json()?)?;
    let svg = if plots {
        let path = dir.join(format!("{}.svg", rec.experiment));
        fs::write(&path, to_svg(rec))?;
        Some(path)
    } else {
        None
    };
    Ok(Written { csv, json, svg })
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Log–log plot of aggregate medians per metric. The x axis is `n` when it
/// varies within a metric, otherwise `sigma_min`.
pub fn to_svg(rec: &RunRecord) -> String {
    let mut series: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for a in &rec.aggregates {
        series.entry(a.metric.as_str()).or_default().push((a.n as f64, a.median));
    }
    let mut by_sigma: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for a in &rec.aggregates {
        by_sigma.entry(a.metric.as_str()).or_default().push((a.sigma_min, a.median));
    }
    let lines: Vec<(&str, Vec<(f64, f64)>)> = series
        .into_iter()
        .map(|(name, pts)| {
            let varies = pts.iter().any(|p| p.0 != pts[0].0);
            let pts = if varies { pts } else { by_sigma[name].clone() };
            (name, pts.into_iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).map(|(x, y)| (x.log10(), y.log10())).collect())
        })
        .filter(|(_, pts): &(&str, Vec<(f64, f64)>)| pts.len() >= 2)
        .collect();

    let (w, h, pad) = (720.0, 480.0, 60.0);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{pad}\" y=\"20\" font-size=\"14\">{} (log10 median vs log10 x)</text>\n",
        rec.experiment
    );
    let all: Vec<(f64, f64)> = lines.iter().flat_map(|(_, p)| p.iter().copied()).collect();
    if all.is_empty() {
        svg.push_str("<text x=\"60\" y=\"60\">no plottable series</text>\n</svg>\n");
        return svg;
    }
    let span = |f: fn(&(f64, f64)) -> f64| {
        let lo = all.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = all.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) }
    };
    let (x0, x1) = span(|p| p.0);
    let (y0, y1) = span(|p| p.1);
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad - 160.0);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let _ = writeln!(
        svg,
        "<line x1=\"{pad}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n<line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{0}\" stroke=\"black\"/>",
        h - pad,
        w - pad - 160.0
    );
    let _ = writeln!(svg, "<text x=\"{pad}\" y=\"{}\">{x0:.2}</text>", h - pad + 16.0);
    let _ = writeln!(svg, "<text x=\"{}\" y=\"{}\">{x1:.2}</text>", w - pad - 180.0, h - pad + 16.0);
    let _ = writeln!(svg, "<text x=\"8\" y=\"{}\">{y0:.2}</text>", h - pad);
    let _ = writeln!(svg, "<text x=\"8\" y=\"{}\">{y1:.2}</text>", pad + 4.0);
    for (i, (name, pts)) in lines.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(svg, "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\" points=\"{}\"/>", path.join(" "));
        for &(x, y) in pts {
            let _ = writeln!(svg, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{colour}\"/>", sx(x), sy(y));
        }
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" fill=\"{colour}\">{name}</text>",
            w - pad - 150.0,
            pad + 14.0 * i as f64
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> RunRecord {
        let mut rec = RunRecord::new("demo", "abc".into(), 5);
        for (i, n) in [10usize, 20, 40].into_iter().enumerate() {
            rec.push(0, n, 0.1, "w1", 1.0 / (i + 1) as f64, 77);
        }
        rec.finish();
        rec
    }

    #[test]
    fn csv_layout() {
        let csv = to_csv(&record());
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("demo,0,10,0.1,w1,1.0,77"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn files_and_plot() {
        let dir = tempfile::tempdir().unwrap();
        let written = write_record(&record(), dir.path(), true).unwrap();
        let svg = fs::read_to_string(written.svg.unwrap()).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("polyline"));
        let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(written.json).unwrap()).unwrap();
        assert_eq!(json["config_hash"], "abc");
    }
}
