//! Artifacts of a run: a JSON document, a CSV table and an SVG line plot.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde_json::Value;

/// Columns of numbers, written as CSV.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().collect());
    }

    pub fn to_csv(&self) -> anyhow::Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }
}

/// A named polyline.
#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// A standalone line plot.
#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

impl Plot {
    pub fn to_svg(&self) -> String {
        let tx = |v: f64| if self.log_x { v.log10() } else { v };
        let ty = |v: f64| if self.log_y { v.log10() } else { v };
        let pts: Vec<Vec<(f64, f64)>> = self
            .series
            .iter()
            .map(|s| {
                s.points
                    .iter()
                    .map(|&(x, y)| (tx(x), ty(y)))
                    .filter(|(x, y)| x.is_finite() && y.is_finite())
                    .collect()
            })
            .collect();
        let bounds = |f: fn(&(f64, f64)) -> f64| {
            let (lo, hi) = pts
                .iter()
                .flatten()
                .map(f)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let (x0, x1) = bounds(|p| p.0);
        let (y0, y1) = bounds(|p| p.1);
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
        let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
        let tick = |v: f64, log: bool| {
            if log {
                format!("1e{v:.2}")
            } else {
                format!("{v:.4}")
            }
        };

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            svg,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            WIDTH - 2.0 * MARGIN,
            HEIGHT - 2.0 * MARGIN
        );
        for (v, anchor_x, anchor) in [(x0, MARGIN, "start"), (x1, WIDTH - MARGIN, "end")] {
            let _ = writeln!(
                svg,
                r#"<text x="{anchor_x}" y="{}" text-anchor="{anchor}">{}</text>"#,
                HEIGHT - MARGIN + 16.0,
                tick(v, self.log_x)
            );
        }
        for (v, y) in [(y0, HEIGHT - MARGIN), (y1, MARGIN + 10.0)] {
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{y}" text-anchor="end">{}</text>"#,
                MARGIN - 4.0,
                tick(v, self.log_y)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 16.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );
        for (i, (s, line)) in self.series.iter().zip(&pts).enumerate() {
            let color = COLORS[i % COLORS.len()];
            let path: Vec<String> = line
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                path.join(" ")
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
                MARGIN + 8.0,
                MARGIN + 16.0 * (i + 1) as f64,
                escape(&s.name)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// What a command produced.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub json: Option<Value>,
    pub table: Option<Table>,
    pub plot: Option<Plot>,
    /// Printed instead of the JSON document on standard output.
    pub text: Option<String>,
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Writes the artifacts to the requested paths and the primary result to `out`:
/// the text summary if present, else the JSON document, else the CSV table.
pub fn emit(
    report: &Report,
    json: Option<&Path>,
    csv: Option<&Path>,
    svg: Option<&Path>,
    out: &mut dyn Write,
) -> anyhow::Result<()> {
    let json_text = report
        .json
        .as_ref()
        .map(|v| serde_json::to_string_pretty(v).map(|s| s + "\n"))
        .transpose()?;
    let csv_text = report.table.as_ref().map(Table::to_csv).transpose()?;
    if let (Some(path), Some(text)) = (json, &json_text) {
        write_file(path, text)?;
    }
    if let (Some(path), Some(text)) = (csv, &csv_text) {
        write_file(path, text)?;
    }
    if let (Some(path), Some(plot)) = (svg, &report.plot) {
        write_file(path, &plot.to_svg())?;
    }
    if let Some(text) = &report.text {
        out.write_all(text.as_bytes())?;
    } else if let Some(text) = &json_text {
        out.write_all(text.as_bytes())?;
    } else if let Some(text) = &csv_text {
        out.write_all(text.as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_svg_render() {
        let mut t = Table::new(&["x", "y"]);
        t.push(["1".to_string(), "2".to_string()]);
        assert_eq!(t.to_csv().unwrap(), "x,y\n1,2\n");
        let plot = Plot {
            title: "a < b".into(),
            x_label: "t".into(),
            y_label: "p".into(),
            log_x: true,
            log_y: true,
            series: vec![Series {
                name: "p".into(),
                points: vec![(0.1, 1.0), (1.0, 0.1), (0.0, 1.0)],
            }],
        };
        let svg = plot.to_svg();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("a &lt; b"));
        assert!(svg.contains("<polyline"));
    }
}
