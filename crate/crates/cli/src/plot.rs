//! Static SVG rendering of a run: exploitability on a log axis next to the
//! trajectory of one state's action distribution.

use std::fmt::Write as _;

const PANEL_W: f64 = 440.0;
const PANEL_H: f64 = 360.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Data behind the figure.
pub struct PlotData<'a> {
    pub title: &'a str,
    /// (cumulative inner steps, exploitability).
    pub exploitability: &'a [(f64, f64)],
    /// (cumulative inner steps, action distribution at the chosen (h, s)).
    pub policy_path: &'a [(f64, Vec<f64>)],
    pub plot_h: usize,
    pub plot_s: usize,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x0: f64,
    y0: f64,
}

impl Frame {
    fn axes(&self, svg: &mut String, title: &str, x_label: &str, y_label: &str) {
        let (x0, y0) = (self.x0, self.y0);
        writeln!(
            svg,
            r##"<rect x="{x0}" y="{y0}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="#333"/>"##
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
            x0 + PANEL_W / 2.0,
            y0 - 10.0,
            escape(title)
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
            x0 + PANEL_W / 2.0,
            y0 + PANEL_H + 35.0,
            escape(x_label)
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{x}" y="{y}" text-anchor="middle" font-size="12" transform="rotate(-90 {x} {y})">{}</text>"#,
            escape(y_label),
            x = x0 - 38.0,
            y = y0 + PANEL_H / 2.0,
        )
        .unwrap();
    }
}

fn polyline(svg: &mut String, points: &[(f64, f64)], color: &str) {
    if points.is_empty() {
        return;
    }
    let coords: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
        coords.join(" ")
    )
    .unwrap();
    for (x, y) in points {
        writeln!(svg, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2" fill="{color}"/>"#).unwrap();
    }
}

fn x_range(points: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = points.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

fn exploitability_panel(svg: &mut String, frame: &Frame, data: &[(f64, f64)]) {
    frame.axes(svg, "Exploitability", "inner steps", "log10 exploitability");
    // Values at or below zero are drawn at the floor of the axis.
    let logs: Vec<(f64, f64)> = data.iter().map(|&(t, e)| (t, e.max(1e-16).log10())).collect();
    let (tx0, tx1) = x_range(logs.iter().map(|p| p.0));
    let lo = logs.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).floor();
    let hi = logs.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).ceil();
    let (lo, hi) = if lo.is_finite() && hi > lo {
        (lo, hi)
    } else {
        (lo.min(0.0) - 1.0, lo.min(0.0) + 1.0)
    };
    let px = |t: f64| frame.x0 + (t - tx0) / (tx1 - tx0) * PANEL_W;
    let py = |y: f64| frame.y0 + PANEL_H - (y - lo) / (hi - lo) * PANEL_H;
    let mut decade = lo;
    while decade <= hi {
        let y = py(decade);
        writeln!(
            svg,
            r##"<line x1="{}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end" font-size="10">1e{decade}</text>"##,
            frame.x0,
            frame.x0 + PANEL_W,
            frame.x0 - 4.0,
            y + 3.0
        )
        .unwrap();
        decade += ((hi - lo) / 8.0).ceil().max(1.0);
    }
    for (t, anchor) in [(tx0, "start"), (tx1, "end")] {
        writeln!(
            svg,
            r#"<text x="{:.2}" y="{}" text-anchor="{anchor}" font-size="10">{t}</text>"#,
            px(t),
            frame.y0 + PANEL_H + 14.0
        )
        .unwrap();
    }
    let points: Vec<(f64, f64)> = logs.iter().map(|&(t, y)| (px(t), py(y))).collect();
    polyline(svg, &points, COLORS[0]);
}

/// Three actions: barycentric coordinates inside a triangle.
fn simplex_panel(svg: &mut String, frame: &Frame, path: &[(f64, Vec<f64>)], h: usize, s: usize) {
    frame.axes(svg, &format!("Policy at h={h}, s={s}"), "", "");
    let pad = 30.0;
    let corners = [
        (frame.x0 + pad, frame.y0 + PANEL_H - pad),
        (frame.x0 + PANEL_W - pad, frame.y0 + PANEL_H - pad),
        (frame.x0 + PANEL_W / 2.0, frame.y0 + pad),
    ];
    let outline: Vec<String> = corners.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    writeln!(
        svg,
        r##"<polygon points="{}" fill="none" stroke="#666"/>"##,
        outline.join(" ")
    )
    .unwrap();
    for (a, (x, y)) in corners.iter().enumerate() {
        let dy = if a == 2 { -8.0 } else { 18.0 };
        writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="12">a={a}</text>"#,
            y + dy
        )
        .unwrap();
    }
    let points: Vec<(f64, f64)> = path
        .iter()
        .map(|(_, p)| {
            let x = (0..3).map(|a| p[a] * corners[a].0).sum();
            let y = (0..3).map(|a| p[a] * corners[a].1).sum();
            (x, y)
        })
        .collect();
    polyline(svg, &points, COLORS[1]);
    if let Some(&(x, y)) = points.last() {
        writeln!(
            svg,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="none" stroke="black"/>"#
        )
        .unwrap();
    }
}

/// Any other action count: one probability curve per action.
fn probability_panel(svg: &mut String, frame: &Frame, path: &[(f64, Vec<f64>)], h: usize, s: usize) {
    frame.axes(svg, &format!("Policy at h={h}, s={s}"), "inner steps", "probability");
    let (tx0, tx1) = x_range(path.iter().map(|p| p.0));
    let px = |t: f64| frame.x0 + (t - tx0) / (tx1 - tx0) * PANEL_W;
    let py = |p: f64| frame.y0 + PANEL_H - p * PANEL_H;
    let na = path.first().map_or(0, |p| p.1.len());
    for a in 0..na {
        let points: Vec<(f64, f64)> = path.iter().map(|(t, p)| (px(*t), py(p[a]))).collect();
        polyline(svg, &points, COLORS[a % COLORS.len()]);
    }
}

pub fn render(data: &PlotData<'_>) -> String {
    let width = 2.0 * PANEL_W + 3.0 * MARGIN + 20.0;
    let height = PANEL_H + 2.0 * MARGIN + 30.0;
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(svg, r#"<title>{}</title>"#, escape(data.title)).unwrap();
    let left = Frame {
        x0: MARGIN + 10.0,
        y0: MARGIN,
    };
    let right = Frame {
        x0: 2.0 * MARGIN + PANEL_W + 20.0,
        y0: MARGIN,
    };
    exploitability_panel(&mut svg, &left, data.exploitability);
    if data.policy_path.first().is_some_and(|p| p.1.len() == 3) {
        simplex_panel(&mut svg, &right, data.policy_path, data.plot_h, data.plot_s);
    } else {
        probability_panel(&mut svg, &right, data.policy_path, data.plot_h, data.plot_s);
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_both_layouts() {
        let e = [(100.0, 0.5), (200.0, 0.01), (300.0, 0.0)];
        let three = [(0.0, vec![0.2, 0.3, 0.5]), (100.0, vec![0.1, 0.1, 0.8])];
        let svg = render(&PlotData {
            title: "a < b",
            exploitability: &e,
            policy_path: &three,
            plot_h: 0,
            plot_s: 1,
        });
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("polygon") && svg.contains("a &lt; b"));
        assert!(!svg.contains("NaN"));

        let two = [(0.0, vec![0.5, 0.5]), (10.0, vec![0.9, 0.1])];
        let svg = render(&PlotData {
            title: "t",
            exploitability: &e[..1],
            policy_path: &two,
            plot_h: 0,
            plot_s: 0,
        });
        assert!(!svg.contains("polygon") && !svg.contains("NaN"));
    }
}
