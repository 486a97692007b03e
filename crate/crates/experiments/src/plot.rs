//! Test accuracy against the sweep variable as a self-contained SVG.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use crate::error::{ExpError, ExpResult};
use crate::metrics::{read_csv, MetricRow};

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 130.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Data-to-pixel map of the plotting area. The y range is fixed to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axes {
    pub x_min: f64,
    pub x_max: f64,
}

impl Axes {
    pub fn fit(xs: impl IntoIterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for x in xs {
            lo = lo.min(x);
            hi = hi.max(x);
        }
        if !(hi > lo) {
            lo -= 1.0;
            hi = lo + 2.0;
        }
        Self { x_min: lo, x_max: hi }
    }

    pub fn to_px(&self, x: f64, y: f64) -> (f64, f64) {
        let w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        (
            MARGIN_LEFT + (x - self.x_min) / (self.x_max - self.x_min) * w,
            MARGIN_TOP + (1.0 - y) * h,
        )
    }

    pub fn from_px(&self, px: f64, py: f64) -> (f64, f64) {
        let w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        (
            self.x_min + (px - MARGIN_LEFT) / w * (self.x_max - self.x_min),
            1.0 - (py - MARGIN_TOP) / h,
        )
    }
}

/// Mean test accuracy per model and sweep value, in first-seen model order.
fn curves(rows: &[MetricRow]) -> Vec<(String, Vec<(f64, f64)>)> {
    let mut order: Vec<String> = Vec::new();
    let mut acc: BTreeMap<String, BTreeMap<u64, (f64, f64, usize)>> = BTreeMap::new();
    for r in rows {
        if !order.contains(&r.model) {
            order.push(r.model.clone());
        }
        let key = ordered_bits(r.sweep_value);
        let e = acc.entry(r.model.clone()).or_default().entry(key).or_insert((r.sweep_value, 0.0, 0));
        e.1 += r.test_acc;
        e.2 += 1;
    }
    order
        .into_iter()
        .map(|model| {
            let pts = acc[&model].values().map(|&(x, s, k)| (x, s / k as f64)).collect();
            (model, pts)
        })
        .collect()
}

/// Order-preserving map of an f64 onto u64.
fn ordered_bits(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

pub fn render_svg(rows: &[MetricRow]) -> ExpResult<String> {
    let Some(first) = rows.first() else {
        return Err(ExpError::MissingData("cannot plot an empty metrics file".into()));
    };
    let axes = Axes::fit(rows.iter().map(|r| r.sweep_value));
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, first.task);

    let (x0, y0) = axes.to_px(axes.x_min, 0.0);
    let (x1, y1) = axes.to_px(axes.x_max, 1.0);
    let _ = writeln!(s, r#"<g class="axes" stroke="black" fill="none"><path d="M{x0:.2},{y1:.2} L{x0:.2},{y0:.2} L{x1:.2},{y0:.2}"/></g>"#);
    for k in 0..=5 {
        let y = k as f64 / 5.0;
        let (_, py) = axes.to_px(axes.x_min, y);
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0:.2}" y2="{py:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y:.1}</text>"#, x0 - 8.0, py + 4.0);
    }
    let mut ticks: Vec<f64> = rows.iter().map(|r| r.sweep_value).collect();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    for x in ticks {
        let (px, _) = axes.to_px(x, 0.0);
        let _ = writeln!(s, r#"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#, y0 + 5.0);
        let _ = writeln!(s, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{x}</text>"#, y0 + 18.0);
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 15.0, first.sweep_name);
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">test accuracy</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );

    for (k, (model, pts)) in curves(rows).iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let coords: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| axes.to_px(x, y)).collect();
        if coords.len() > 1 {
            let list: Vec<String> = coords.iter().map(|(px, py)| format!("{px:.2},{py:.2}")).collect();
            let _ = writeln!(
                s,
                r#"<polyline data-model="{model}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                list.join(" ")
            );
        }
        for (px, py) in &coords {
            let _ = writeln!(s, r#"<circle data-model="{model}" cx="{px:.2}" cy="{py:.2}" r="3.5" fill="{color}"/>"#);
        }
        let ly = MARGIN_TOP + 10.0 + 20.0 * k as f64;
        let lx = WIDTH - MARGIN_RIGHT + 15.0;
        let _ = writeln!(s, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{model}</text>"#, lx + 26.0, ly + 4.0);
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_plot(csv: &Path, out: &Path) -> ExpResult<()> {
    let svg = render_svg(&read_csv(csv)?)?;
    std::fs::write(out, svg).map_err(|e| ExpError::io(out, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(model: &str, x: f64, acc: f64) -> MetricRow {
        MetricRow {
            task: "synth-n-sweep".into(),
            model: model.into(),
            sweep_name: "n".into(),
            sweep_value: x,
            seed: 0,
            train_acc: 1.0,
            test_acc: acc,
            final_loss: 0.1,
            wall_ms: 0,
            test_acc_std: None,
        }
    }

    fn attr<'a>(tag: &'a str, name: &str) -> &'a str {
        let key = format!(" {name}=\"");
        let start = tag.find(&key).unwrap() + key.len();
        let end = start + tag[start..].find('"').unwrap();
        &tag[start..end]
    }

    fn sample_rows() -> Vec<MetricRow> {
        let mut rows = Vec::new();
        for (x, base) in [(8.0, 0.6), (24.0, 0.8), (96.0, 0.95)] {
            rows.push(row("hvn", x, base));
            rows.push(row("mlp", x, base - 0.2));
            rows.push(row("fpca", x, 0.5));
        }
        rows
    }

    #[test]
    fn three_models_three_polylines() {
        let svg = render_svg(&sample_rows()).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert_eq!(svg.matches("<circle").count(), 9);
        assert!(svg.contains(">test accuracy<") && svg.contains(">n<"));
        assert!(svg.contains(">hvn<") && svg.contains(">fpca<"));
    }

    #[test]
    fn single_row_gives_marker() {
        let svg = render_svg(&[row("hvn", 24.0, 0.7)]).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 0);
        assert_eq!(svg.matches("<circle").count(), 1);
    }

    #[test]
    fn empty_is_error() {
        assert!(render_svg(&[]).is_err());
    }

    #[test]
    fn coordinates_round_trip() {
        let rows = sample_rows();
        let svg = render_svg(&rows).unwrap();
        let axes = Axes::fit(rows.iter().map(|r| r.sweep_value));
        let mut recovered = Vec::new();
        for line in svg.lines().filter(|l| l.starts_with("<circle")) {
            let (px, py) = (attr(line, "cx").parse().unwrap(), attr(line, "cy").parse().unwrap());
            let (x, y) = axes.from_px(px, py);
            recovered.push((attr(line, "data-model").to_string(), x, y));
        }
        assert_eq!(recovered.len(), rows.len());
        // two decimals of a pixel over a span of ~440 px
        let res = 0.01 / (WIDTH - MARGIN_LEFT - MARGIN_RIGHT);
        for r in &rows {
            let hit = recovered.iter().any(|(m, x, y)| {
                *m == r.model && (x - r.sweep_value).abs() <= res * 88.0 && (y - r.test_acc).abs() <= 1e-4
            });
            assert!(hit, "{r:?}");
        }
    }

    #[test]
    fn inverse_transform() {
        let axes = Axes { x_min: -10.0, x_max: 30.0 };
        for (x, y) in [(-10.0, 0.0), (5.5, 0.37), (30.0, 1.0)] {
            let (px, py) = axes.to_px(x, y);
            let (bx, by) = axes.from_px(px, py);
            assert!((bx - x).abs() < 1e-12 && (by - y).abs() < 1e-12);
        }
        let flat = Axes::fit([3.0]);
        assert!(flat.x_max > flat.x_min);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("metrics.csv");
        crate::metrics::save_csv(&sample_rows(), &csv).unwrap();
        let out = dir.path().join("plot.svg");
        emit_plot(&csv, &out).unwrap();
        assert!(std::fs::read_to_string(out).unwrap().starts_with("<svg"));
    }
}
