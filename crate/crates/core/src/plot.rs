//! Report emission for difficulty distributions: KDE curves as CSV and a
//! small self-contained SVG of interval histograms with overlaid curves.

use std::fmt::Write as _;

use crate::distribution::{DifficultyHistogram, INTERVALS};

pub fn curve_csv(curve: &[(f64, f64)]) -> String {
    let mut out = String::from("x,density\n");
    for (x, d) in curve {
        writeln!(out, "{x},{d}").expect("string write");
    }
    out
}

/// One distribution drawn in a chart.
#[derive(Debug, Clone)]
pub struct Series<'a> {
    pub name: &'a str,
    pub color: &'a str,
    pub histogram: &'a DifficultyHistogram,
    pub curve: &'a [(f64, f64)],
}

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 300.0;
const MARGIN: f64 = 40.0;

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Normalized interval histograms as side-by-side bars, with each series' KDE
/// curve on the density scale (bar height × 10).
pub fn render_svg(title: &str, series: &[Series<'_>]) -> String {
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let max_density = series
        .iter()
        .flat_map(|s| {
            let bars = s
                .histogram
                .normalized()
                .into_iter()
                .map(|p| p * INTERVALS as f64);
            bars.chain(s.curve.iter().map(|&(_, d)| d))
                .collect::<Vec<_>>()
        })
        .fold(1e-9, f64::max);
    let x_of = |x: f64| MARGIN + x * plot_w;
    let y_of = |d: f64| HEIGHT - MARGIN - d / max_density * plot_h;

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        svg,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    )
    .unwrap();
    writeln!(
        svg,
        r#"<line x1="{MARGIN}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#,
        HEIGHT - MARGIN,
        WIDTH - MARGIN
    )
    .unwrap();
    for k in 0..=INTERVALS {
        let x = x_of(k as f64 / 10.0);
        writeln!(
            svg,
            r#"<text x="{x:.1}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="middle">{:.1}</text>"#,
            HEIGHT - MARGIN + 14.0,
            k as f64 / 10.0
        )
        .unwrap();
    }

    let bar_w = plot_w / INTERVALS as f64 / series.len().max(1) as f64;
    for (s_idx, s) in series.iter().enumerate() {
        for (k, p) in s.histogram.normalized().into_iter().enumerate() {
            let top = y_of(p * INTERVALS as f64);
            writeln!(
                svg,
                r#"<rect x="{:.2}" y="{top:.2}" width="{bar_w:.2}" height="{:.2}" fill="{}" fill-opacity="0.35"/>"#,
                x_of(k as f64 / 10.0) + s_idx as f64 * bar_w,
                HEIGHT - MARGIN - top,
                s.color
            )
            .unwrap();
        }
        if !s.curve.is_empty() {
            let points: Vec<String> = s
                .curve
                .iter()
                .map(|&(x, d)| format!("{:.2},{:.2}", x_of(x), y_of(d)))
                .collect();
            writeln!(
                svg,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                s.color,
                points.join(" ")
            )
            .unwrap();
        }
        writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" fill="{}">{}</text>"#,
            WIDTH - MARGIN - 120.0,
            MARGIN + 14.0 * (s_idx as f64 + 1.0),
            s.color,
            escape(s.name)
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

/// File-name-safe form of a class label.
pub fn slug(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_and_rows() {
        let csv = curve_csv(&[(0.0, 1.5), (1.0, 0.25)]);
        assert_eq!(csv, "x,density\n0,1.5\n1,0.25\n");
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let h = DifficultyHistogram::from_counts("a<b", [1, 2, 3, 0, 0, 0, 0, 0, 0, 4]);
        let curve = [(0.0, 1.0), (0.5, 2.0), (1.0, 0.5)];
        let svg = render_svg(
            "a<b",
            &[Series {
                name: "original",
                color: "#1f77b4",
                histogram: &h,
                curve: &curve,
            }],
        );
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<rect x=").count(), 10);
        assert!(svg.contains("a&lt;b"));
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("n01440764 tench/x"), "n01440764_tench_x");
    }
}
