//! Minimal standalone SVG charts for benchmark output.

use std::fmt::Write as _;

use super::summary::{Histogram, RegretSummary};

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 6] = [
    "#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee", "#aa3377",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn open(title: &str) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    )
    .unwrap();
    writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{y}" x2="{x2}" y2="{y}" stroke="black"/><line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{y}" stroke="black"/>"#,
        y = H - MARGIN,
        x2 = W - MARGIN / 2.0,
    )
    .unwrap();
    s
}

/// Bars of relative regret (percent of baseline) with ±1 SE whiskers.
/// Policies without a relative value are drawn as empty slots.
pub fn bar_chart(title: &str, summaries: &[RegretSummary]) -> String {
    let mut s = open(title);
    let top = summaries
        .iter()
        .filter_map(|r| Some(r.relative? + r.relative_se.unwrap_or(0.0)))
        .fold(100.0_f64, f64::max)
        * 1.1;
    let plot_h = H - 2.0 * MARGIN;
    let slot = (W - 1.5 * MARGIN) / summaries.len().max(1) as f64;
    let y_of = |v: f64| H - MARGIN - v / top * plot_h;
    writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{y}" x2="{x2}" y2="{y}" stroke="gray" stroke-dasharray="4 3"/><text x="{tx}" y="{y}" text-anchor="end">100</text>"#,
        y = y_of(100.0),
        x2 = W - MARGIN / 2.0,
        tx = MARGIN - 4.0,
    )
    .unwrap();
    for (i, r) in summaries.iter().enumerate() {
        let x = MARGIN + i as f64 * slot + 0.15 * slot;
        let bw = 0.7 * slot;
        if let Some(v) = r.relative {
            writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{bw:.2}" height="{h:.2}" fill="{c}"/><text x="{cx:.2}" y="{ty:.2}" text-anchor="middle">{v:.1}</text>"#,
                y = y_of(v),
                h = v / top * plot_h,
                c = PALETTE[i % PALETTE.len()],
                cx = x + bw / 2.0,
                ty = y_of(v) - 4.0,
            )
            .unwrap();
            if let Some(e) = r.relative_se {
                writeln!(
                    s,
                    r#"<line x1="{cx:.2}" y1="{a:.2}" x2="{cx:.2}" y2="{b:.2}" stroke="black"/>"#,
                    cx = x + bw / 2.0,
                    a = y_of((v - e).max(0.0)),
                    b = y_of(v + e),
                )
                .unwrap();
            }
        }
        writeln!(
            s,
            r#"<text transform="translate({cx:.2},{y:.2}) rotate(30)">{}</text>"#,
            escape(&r.policy),
            cx = x + bw / 2.0,
            y = H - MARGIN + 14.0,
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Overlaid step outlines of normalised histograms sharing one x axis.
pub fn histogram_chart(title: &str, series: &[(String, Histogram)]) -> String {
    let mut s = open(title);
    let x_max = series
        .iter()
        .filter_map(|(_, h)| h.edges.last().copied())
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let density = |h: &Histogram| -> Vec<f64> {
        let n = h.counts.iter().sum::<u64>().max(1) as f64;
        h.counts.iter().map(|&c| c as f64 / n).collect()
    };
    let y_max = series
        .iter()
        .flat_map(|(_, h)| density(h))
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE)
        * 1.1;
    let plot_w = W - 1.5 * MARGIN;
    let plot_h = H - 2.0 * MARGIN;
    let px = |x: f64| MARGIN + x / x_max * plot_w;
    let py = |y: f64| H - MARGIN - y / y_max * plot_h;
    for (i, (label, h)) in series.iter().enumerate() {
        let c = PALETTE[i % PALETTE.len()];
        let mut d = format!("M{:.2},{:.2}", px(h.edges[0]), py(0.0));
        for (j, p) in density(h).iter().enumerate() {
            write!(
                d,
                " L{:.2},{:.2} L{:.2},{:.2}",
                px(h.edges[j]),
                py(*p),
                px(h.edges[j + 1]),
                py(*p)
            )
            .unwrap();
        }
        write!(d, " L{:.2},{:.2}", px(*h.edges.last().unwrap()), py(0.0)).unwrap();
        writeln!(
            s,
            r#"<path d="{d}" fill="none" stroke="{c}" stroke-width="1.5"/>"#
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{x}" y="{y}" fill="{c}">{}</text>"#,
            escape(label),
            x = W - 2.5 * MARGIN,
            y = MARGIN + 14.0 * i as f64,
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{MARGIN}" y="{y}">0</text><text x="{x}" y="{y}" text-anchor="end">{x_max:.3}</text>"#,
        y = H - MARGIN + 14.0,
        x = W - MARGIN / 2.0,
    )
    .unwrap();
    s.push_str("</svg>\n");
    s
}
