//! Static SVG plots: a time-by-site heatmap and line plots of the atomic levels.

use std::fmt::Write;

use synthdim::dynamics::Trajectory;
use synthdim::model::BasisLabel;
use synthdim::observables::confined_series;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 60.0;
const TOP: f64 = 30.0;
const PLOT_W: f64 = 520.0;
const PLOT_H: f64 = 320.0;
const MAX_COLUMNS: usize = 200;

// viridis anchors
const MAP: [(f64, [f64; 3]); 5] = [
    (0.0, [68.0, 1.0, 84.0]),
    (0.25, [59.0, 82.0, 139.0]),
    (0.5, [33.0, 145.0, 140.0]),
    (0.75, [94.0, 201.0, 98.0]),
    (1.0, [253.0, 231.0, 37.0]),
];

fn color(x: f64) -> String {
    let x = x.clamp(0.0, 1.0);
    let k = MAP.iter().position(|(s, _)| *s >= x).unwrap_or(MAP.len() - 1).max(1);
    let ((s0, c0), (s1, c1)) = (MAP[k - 1], MAP[k]);
    let f = (x - s0) / (s1 - s0);
    let c: Vec<u8> = (0..3).map(|i| (c0[i] + f * (c1[i] - c0[i])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="18" text-anchor="middle">{}</text>"#, LEFT + PLOT_W / 2.0, escape(title));
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(out: &mut String, x_label: &str, y_label: &str, x_range: (f64, f64), y_range: (f64, f64)) {
    let (x0, y0) = (LEFT, TOP + PLOT_H);
    let _ = writeln!(out, r#"<rect x="{LEFT}" y="{TOP}" width="{PLOT_W}" height="{PLOT_H}" fill="none" stroke="black"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + PLOT_W / 2.0, H - 8.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        TOP + PLOT_H / 2.0,
        TOP + PLOT_H / 2.0,
        escape(y_label)
    );
    let _ = writeln!(out, r#"<text x="{x0}" y="{}" text-anchor="middle">{}</text>"#, y0 + 16.0, tick(x_range.0));
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, x0 + PLOT_W, y0 + 16.0, tick(x_range.1));
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, x0 - 4.0, y0, tick(y_range.0));
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, x0 - 4.0, TOP + 10.0, tick(y_range.1));
}

fn tick(x: f64) -> String {
    let s = format!("{x:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Site populations over time, time on the horizontal axis.
pub fn heatmap(tr: &Trajectory, title: &str) -> String {
    let sites: Vec<(usize, i64)> = tr.labels.iter().enumerate().filter_map(|(i, l)| l.site().map(|m| (i, m))).collect();
    let mut out = String::new();
    open(&mut out, &format!("{title}: P_m(t)"));
    if sites.is_empty() || tr.times.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    let stride = tr.times.len().div_ceil(MAX_COLUMNS);
    let cols: Vec<usize> = (0..tr.times.len()).step_by(stride).collect();
    let peak = cols.iter().flat_map(|&k| sites.iter().map(move |s| (k, s.0))).map(|(k, i)| tr.probs[k][i]).fold(0.0, f64::max);
    let scale = if peak > 0.0 { peak } else { 1.0 };
    let (cw, rh) = (PLOT_W / cols.len() as f64, PLOT_H / sites.len() as f64);
    for (c, &k) in cols.iter().enumerate() {
        for (r, &(i, _)) in sites.iter().enumerate() {
            // highest site on top
            let y = TOP + PLOT_H - (r + 1) as f64 * rh;
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                LEFT + c as f64 * cw,
                y,
                cw + 0.05,
                rh + 0.05,
                color(tr.probs[k][i] / scale)
            );
        }
    }
    let (lo, hi) = (sites[0].1 as f64, sites[sites.len() - 1].1 as f64);
    axes(&mut out, "Jt", "m", (tr.times[0], *tr.times.last().unwrap()), (lo, hi));
    let _ = writeln!(out, r#"<text x="{}" y="{}">max {}</text>"#, LEFT + PLOT_W + 4.0, TOP + 10.0, tick(peak));
    out.push_str("</svg>\n");
    out
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Populations of the excited atomic levels and the confined mass.
pub fn lines(tr: &Trajectory, span: i64, title: &str) -> String {
    let mut series: Vec<(String, Vec<f64>)> = tr
        .labels
        .iter()
        .filter(|l| matches!(l, BasisLabel::Atom { level: synthdim::model::Level::E, .. }))
        .map(|l| (format!("P[{l}]"), tr.series(l).unwrap()))
        .collect();
    series.push((format!("sites 0..={span} + atom_e"), confined_series(tr, span)));
    let mut out = String::new();
    open(&mut out, &format!("{title}: populations"));
    let (t0, t1) = (tr.times.first().copied().unwrap_or(0.0), tr.times.last().copied().unwrap_or(1.0));
    let span_t = if t1 > t0 { t1 - t0 } else { 1.0 };
    for (k, (name, s)) in series.iter().enumerate() {
        let pts: Vec<String> = tr
            .times
            .iter()
            .zip(s)
            .map(|(t, p)| format!("{:.2},{:.2}", LEFT + (t - t0) / span_t * PLOT_W, TOP + PLOT_H - p.clamp(0.0, 1.0) * PLOT_H))
            .collect();
        let c = PALETTE[k % PALETTE.len()];
        let _ = writeln!(out, r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let _ = writeln!(out, r#"<text x="{}" y="{}" fill="{c}">{}</text>"#, LEFT + 8.0, TOP + 16.0 + 14.0 * k as f64, escape(name));
    }
    axes(&mut out, "Jt", "population", (t0, t1), (0.0, 1.0));
    out.push_str("</svg>\n");
    out
}
