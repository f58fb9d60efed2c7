//! Two-panel feature contour plots as plain SVG.

use std::fmt::Write as _;

use lctid_core::FeatureId;

pub struct Contour<'a> {
    pub label: &'a str,
    pub values: &'a [f64],
}

const WIDTH: f64 = 800.0;
const PANEL_H: f64 = 220.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const GAP: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

/// One panel per contour, stacked, sharing the time and value axes so the
/// two utterances compare directly.
pub fn contour_svg(feature: FeatureId, hop_s: f64, a: &Contour, b: &Contour) -> String {
    let frames = a.values.len().max(b.values.len()).max(2);
    let t_max = (frames - 1) as f64 * hop_s;
    let all = a.values.iter().chain(b.values);
    let (mut lo, mut hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let height = TOP + 2.0 * PANEL_H + GAP + 40.0;
    let y_label = match feature {
        FeatureId::Hnr => "log-HNR".to_string(),
        f => format!("{} ({})", f.name(), f.unit()),
    };

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    for (k, c) in [a, b].into_iter().enumerate() {
        let y0 = TOP + k as f64 * (PANEL_H + GAP);
        let to_x = |i: usize| LEFT + plot_w * (i as f64 * hop_s) / t_max;
        let to_y = |v: f64| y0 + PANEL_H * (1.0 - (v - lo) / (hi - lo));
        writeln!(s, r#"<g class="panel" id="panel-{k}">"#).unwrap();
        writeln!(
            s,
            r#"<rect x="{LEFT}" y="{y0}" width="{plot_w}" height="{PANEL_H}" fill="none" stroke="black"/>"#
        )
        .unwrap();
        writeln!(s, r#"<text x="{LEFT}" y="{}" font-weight="bold">{}</text>"#, y0 - 8.0, escape(c.label)).unwrap();
        for (v, y) in [(hi, y0), (lo, y0 + PANEL_H)] {
            writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, LEFT - 5.0, y + 4.0, tick(v)).unwrap();
        }
        let yc = y0 + PANEL_H / 2.0;
        writeln!(
            s,
            r#"<text x="15" y="{yc}" text-anchor="middle" transform="rotate(-90 15 {yc})">{}</text>"#,
            escape(&y_label)
        )
        .unwrap();
        let pts: Vec<String> = c
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| format!("{:.2},{:.2}", to_x(i), to_y(v)))
            .collect();
        writeln!(s, r#"<polyline fill="none" stroke="steelblue" stroke-width="1.2" points="{}"/>"#, pts.join(" ")).unwrap();
        writeln!(s, "</g>").unwrap();
    }
    let y_axis = TOP + 2.0 * PANEL_H + GAP;
    writeln!(s, r#"<text x="{LEFT}" y="{}">0</text>"#, y_axis + 16.0).unwrap();
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{t_max:.2}</text>"#, WIDTH - RIGHT, y_axis + 16.0).unwrap();
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">time (s)</text>"#, LEFT + plot_w / 2.0, y_axis + 32.0).unwrap();
    s.push_str("</svg>\n");
    s
}

/// `time_s,<label a>,<label b>`; the shorter contour leaves blanks.
pub fn contour_csv(hop_s: f64, a: &Contour, b: &Contour) -> String {
    let mut s = format!("time_s,{},{}\n", a.label, b.label);
    let cell = |v: &[f64], i: usize| v.get(i).map(|x| x.to_string()).unwrap_or_default();
    for i in 0..a.values.len().max(b.values.len()) {
        writeln!(s, "{:.3},{},{}", i as f64 * hop_s, cell(a.values, i), cell(b.values, i)).unwrap();
    }
    s
}
