//! Summary tables and static SVG plots built from a finished run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{Metric, MetricsReport, Role, Split};

/// Linearly interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Five-number summary of one report cell across folds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxStats {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl BoxStats {
    pub fn of(values: &[f64]) -> Option<BoxStats> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        Some(BoxStats {
            n: v.len(),
            min: v[0],
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

/// Writes `predictor,role,split,metric,n,mean,std,min,q1,median,q3,max`.
pub fn write_summary<W: Write>(report: &MetricsReport, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "predictor",
        "role",
        "split",
        "metric",
        "n",
        "mean",
        "std",
        "min",
        "q1",
        "median",
        "q3",
        "max",
    ])?;
    for p in report.predictors() {
        for role in Role::ALL {
            for split in Split::ALL {
                for m in Metric::ALL {
                    let Some(b) = BoxStats::of(&report.values(&p, role, split, m)) else {
                        continue;
                    };
                    let (mean, std) = report.aggregate(&p, role, split, m);
                    let nums = [mean, std, b.min, b.q1, b.median, b.q3, b.max].map(|v| v.to_string());
                    let mut rec = vec![
                        p.clone(),
                        role.to_string(),
                        split.to_string(),
                        m.to_string(),
                        b.n.to_string(),
                    ];
                    rec.extend(nums);
                    wr.write_record(&rec)?;
                }
            }
        }
    }
    wr.flush().map_err(|e| Error::io("summary", e))?;
    Ok(())
}

/// One predicted-versus-observed sample, as stored in `series.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub predictor: String,
    pub well_id: String,
    pub role: Role,
    pub t: usize,
    pub month: String,
    pub observed: f64,
    pub predicted: f64,
}

const PALETTE: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Frame {
    width: f64,
    height: f64,
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn new(width: f64, height: f64, y_lo: f64, y_hi: f64) -> Frame {
        let (y_lo, y_hi) = if y_hi > y_lo {
            let pad = 0.05 * (y_hi - y_lo);
            (y_lo - pad, y_hi + pad)
        } else {
            (y_lo - 0.5, y_hi + 0.5)
        };
        Frame {
            width,
            height,
            left: 60.0,
            right: 150.0,
            top: 30.0,
            bottom: 40.0,
            y_lo,
            y_hi,
        }
    }

    fn plot_w(&self) -> f64 {
        self.width - self.left - self.right
    }

    fn y(&self, v: f64) -> f64 {
        let h = self.height - self.top - self.bottom;
        self.top + h * (1.0 - (v - self.y_lo) / (self.y_hi - self.y_lo))
    }

    fn open(&self, title: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#,
            w = self.width,
            h = self.height
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="18" font-size="13">{}</text>"#,
            self.left,
            escape(title)
        );
        let x0 = self.left;
        let x1 = self.left + self.plot_w();
        for k in 0..=4 {
            let v = self.y_lo + (self.y_hi - self.y_lo) * k as f64 / 4.0;
            let y = self.y(v);
            let _ = writeln!(
                s,
                r##"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                x0 - 4.0,
                y + 4.0,
                format_tick(v)
            );
        }
        let _ = writeln!(
            s,
            r#"<rect x="{x0}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            self.top,
            self.plot_w(),
            self.height - self.top - self.bottom
        );
        s
    }

    fn legend(&self, s: &mut String, items: &[(String, &str)]) {
        let x = self.width - self.right + 10.0;
        for (k, (label, color)) in items.iter().enumerate() {
            let y = self.top + 14.0 * k as f64 + 6.0;
            let _ = writeln!(
                s,
                r#"<rect x="{x}" y="{:.1}" width="10" height="10" fill="{color}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                y - 8.0,
                x + 14.0,
                y + 1.0,
                escape(label)
            );
        }
    }
}

fn format_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

/// Box plot of fold scores: one group per predictor, one box per split.
pub fn boxplot_svg(report: &MetricsReport, role: Role, metric: Metric) -> Option<String> {
    let predictors = report.predictors();
    let mut boxes: Vec<(usize, usize, BoxStats)> = Vec::new();
    for (pi, p) in predictors.iter().enumerate() {
        for (si, s) in Split::ALL.iter().enumerate() {
            if let Some(b) = BoxStats::of(&report.values(p, role, *s, metric)) {
                boxes.push((pi, si, b));
            }
        }
    }
    if boxes.is_empty() {
        return None;
    }
    let lo = boxes.iter().map(|b| b.2.min).fold(f64::INFINITY, f64::min);
    let hi = boxes.iter().map(|b| b.2.max).fold(f64::NEG_INFINITY, f64::max);
    let width = (90.0 * predictors.len() as f64 + 210.0).max(420.0);
    let f = Frame::new(width, 360.0, lo, hi);
    let mut s = f.open(&format!("{role} {metric} across folds"));
    let group = f.plot_w() / predictors.len() as f64;
    let bw = group / 4.5;
    for (pi, p) in predictors.iter().enumerate() {
        let cx = f.left + group * (pi as f64 + 0.5);
        let _ = writeln!(
            s,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            f.height - f.bottom + 16.0,
            escape(p)
        );
    }
    for (pi, si, b) in &boxes {
        let cx = f.left + group * (*pi as f64 + 0.5) + (*si as f64 - 1.0) * bw * 1.2;
        let color = PALETTE[*si];
        let (x0, x1) = (cx - bw / 2.0, cx + bw / 2.0);
        let _ = writeln!(
            s,
            r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="{color}"/>"#,
            f.y(b.min),
            f.y(b.max)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{x0:.2}" y="{:.2}" width="{bw:.2}" height="{:.2}" fill="{color}" fill-opacity="0.35" stroke="{color}"/>"#,
            f.y(b.q3),
            (f.y(b.q1) - f.y(b.q3)).max(0.5)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/>"#,
            y = f.y(b.median)
        );
    }
    let items: Vec<(String, &str)> = Split::ALL
        .iter()
        .enumerate()
        .map(|(k, s)| (s.to_string(), PALETTE[k]))
        .collect();
    f.legend(&mut s, &items);
    s.push_str("</svg>\n");
    Some(s)
}

/// Observed series and every predictor's series at one well.
pub fn series_svg(well_id: &str, rows: &[&SeriesRow]) -> Option<String> {
    if rows.is_empty() {
        return None;
    }
    let t_lo = rows.iter().map(|r| r.t).min()?;
    let t_hi = rows.iter().map(|r| r.t).max()?;
    let vals = rows
        .iter()
        .flat_map(|r| [r.observed, r.predicted])
        .filter(|v| v.is_finite());
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return None;
    }
    let f = Frame::new(720.0, 320.0, lo, hi);
    let x = |t: usize| {
        let span = (t_hi - t_lo).max(1) as f64;
        f.left + f.plot_w() * (t - t_lo) as f64 / span
    };
    let role = rows[0].role;
    let mut s = f.open(&format!("{well_id} ({role})"));
    for (t, label) in [
        (t_lo, &rows[0].month),
        (t_hi, &rows.iter().find(|r| r.t == t_hi)?.month),
    ] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            x(t),
            f.height - f.bottom + 16.0,
            escape(label)
        );
    }
    let mut observed: BTreeMap<usize, f64> = BTreeMap::new();
    let mut by_pred: BTreeMap<&str, Vec<(usize, f64)>> = BTreeMap::new();
    let mut order: Vec<&str> = Vec::new();
    for r in rows {
        observed.insert(r.t, r.observed);
        if !order.contains(&r.predictor.as_str()) {
            order.push(&r.predictor);
        }
        by_pred.entry(&r.predictor).or_default().push((r.t, r.predicted));
    }
    let path = |pts: &mut dyn Iterator<Item = (usize, f64)>| {
        let mut d = String::new();
        let mut pen = false;
        for (t, v) in pts {
            if !v.is_finite() {
                pen = false;
                continue;
            }
            let _ = write!(d, "{}{:.2},{:.2} ", if pen { "L" } else { "M" }, x(t), f.y(v));
            pen = true;
        }
        d
    };
    let _ = writeln!(
        s,
        r#"<path d="{}" fill="none" stroke="black" stroke-width="2"/>"#,
        path(&mut observed.iter().map(|(t, v)| (*t, *v)))
    );
    let mut items = vec![("observed".to_string(), "black")];
    for (k, p) in order.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut pts = by_pred[p].clone();
        pts.sort_by_key(|x| x.0);
        let _ = writeln!(
            s,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"#,
            path(&mut pts.into_iter())
        );
        items.push((p.to_string(), color));
    }
    f.legend(&mut s, &items);
    s.push_str("</svg>\n");
    Some(s)
}

/// File-name-safe version of an identifier.
pub fn slug(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
