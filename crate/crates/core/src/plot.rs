//! Static SVG charts: spectrum histograms and cumulative t curves, both over a fixed `[-1, +1]` x axis.

use std::fmt::Write as _;

use crate::spectra::{bucket_bounds, CorrelationSpectrum};
use crate::stats::TValue;

const W: f64 = 640.0;
const H: f64 = 360.0;
const LEFT: f64 = 56.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 32.0;
const BOTTOM: f64 = 40.0;

fn x_of(c: f64) -> f64 {
    LEFT + (c + 1.0) / 2.0 * (W - LEFT - RIGHT)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// XML comments may not contain `--`.
fn comment(s: &str) -> String {
    s.replace("--", "- -")
}

fn open(out: &mut String, title: &str, echo: &str) {
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    )
    .unwrap();
    writeln!(out, "<!-- {} -->", comment(echo)).unwrap();
    writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    )
    .unwrap();
}

fn x_axis(out: &mut String, baseline: f64) {
    writeln!(
        out,
        r#"<line x1="{LEFT}" y1="{baseline:.2}" x2="{}" y2="{baseline:.2}" stroke="black"/>"#,
        W - RIGHT
    )
    .unwrap();
    for tick in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        let x = x_of(tick);
        writeln!(
            out,
            r#"<text x="{x:.2}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{tick}</text>"#,
            H - BOTTOM + 16.0
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">correlation coefficient</text>"#,
        W / 2.0,
        H - 6.0
    )
    .unwrap();
}

fn y_label(out: &mut String, y: f64, label: &str) {
    writeln!(
        out,
        r#"<text x="{}" y="{y:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{label}</text>"#,
        LEFT - 6.0
    )
    .unwrap();
}

/// Bar chart of bucket counts.
pub fn histogram_svg(s: &CorrelationSpectrum, title: &str, echo: &str) -> String {
    let mut out = String::new();
    open(&mut out, title, echo);
    let max = s.counts().iter().copied().max().unwrap_or(0).max(1) as f64;
    let plot_h = H - TOP - BOTTOM;
    let base = H - BOTTOM;
    for (b, &count) in s.counts().iter().enumerate() {
        if count == 0 {
            continue;
        }
        let (lo, hi) = bucket_bounds(b, s.bucket_count());
        let h = count as f64 / max * plot_h;
        writeln!(
            out,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" fill="#4a7ab5"/>"##,
            x_of(lo),
            base - h,
            (x_of(hi) - x_of(lo)).max(0.5)
        )
        .unwrap();
    }
    x_axis(&mut out, base);
    y_label(&mut out, TOP + 4.0, &format!("{}", max as u64));
    y_label(&mut out, base, "0");
    out.push_str("</svg>\n");
    out
}

/// Cumulative t per segment, plotted at each segment's upper edge, with `+-t0` guide lines.
/// Undefined entries break the polyline.
pub fn cumulative_t_svg(cumulative: &[Option<TValue>], t0: f64, title: &str, echo: &str) -> String {
    let mut out = String::new();
    open(&mut out, title, echo);
    let finite = |t: &TValue| t.value().is_finite().then(|| t.value());
    let peak = cumulative
        .iter()
        .flatten()
        .filter_map(finite)
        .map(f64::abs)
        .fold(if t0.is_finite() { t0 } else { 1.0 }, f64::max)
        .max(1.0)
        * 1.1;
    let plot_h = H - TOP - BOTTOM;
    let y_of = |t: f64| TOP + (1.0 - (t.clamp(-peak, peak) + peak) / (2.0 * peak)) * plot_h;
    if t0.is_finite() {
        for g in [t0, -t0] {
            writeln!(
                out,
                r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#c0392b" stroke-dasharray="4 3"/>"##,
                W - RIGHT,
                y = y_of(g)
            )
            .unwrap();
        }
    }
    let n = cumulative.len();
    let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
    for (k, t) in cumulative.iter().enumerate() {
        let edge = -1.0 + 2.0 * (k + 1) as f64 / n as f64;
        match t {
            Some(t) => runs.last_mut().unwrap().push((x_of(edge), y_of(t.value()))),
            None => runs.push(Vec::new()),
        }
    }
    for run in runs.iter().filter(|r| !r.is_empty()) {
        let pts: Vec<String> = run.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="#2c3e50" stroke-width="1.5"/>"##,
            pts.join(" ")
        )
        .unwrap();
        for (x, y) in run {
            writeln!(out, r##"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="#2c3e50"/>"##).unwrap();
        }
    }
    x_axis(&mut out, y_of(0.0));
    y_label(&mut out, y_of(peak) + 10.0, &format!("{peak:.1}"));
    y_label(&mut out, y_of(-peak), &format!("{:.1}", -peak));
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolean::{ChallengeSetId, ResponseBitVector};
    use crate::spectra::{build_spectrum, PairMode};

    #[test]
    fn histogram_has_one_bar_per_occupied_bucket() {
        let v: Vec<_> = ["1100", "1010", "1101"]
            .iter()
            .map(|s| ResponseBitVector::new(s.parse().unwrap(), ChallengeSetId(0), None).unwrap())
            .collect();
        let s = build_spectrum(&v, 8, PairMode::UnorderedDistinct).unwrap();
        let svg = histogram_svg(&s, "a < b", "cfg --x");
        assert_eq!(svg.matches("<rect x=").count(), 3);
        assert!(svg.contains("a &lt; b"));
        assert!(svg.contains("<!-- cfg - -x -->"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn undefined_points_split_the_curve() {
        let c = [Some(TValue::Finite(1.0)), None, Some(TValue::Finite(2.0)), Some(TValue::Overflow { positive: true })];
        let svg = cumulative_t_svg(&c, 4.5, "t", "");
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 3);
    }
}
