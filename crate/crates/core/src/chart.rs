//! Tiny hand-rolled SVG line charts.
//!
//! Just enough for the bound-curve and power-grid plots: one or more panels
//! laid out in a row grid, each with axes, tick labels, colored polylines and
//! a legend. No external renderer involved; output is a standalone SVG string.

/// One polyline with a legend label.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// One sub-plot with its own title and series.
#[derive(Debug, Clone)]
pub struct Panel {
    pub title: String,
    pub series: Vec<Series>,
}

const PANEL_W: f64 = 380.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 56.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 44.0;
const PANELS_PER_ROW: usize = 3;

const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

fn fmt(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(0.001..1000.0).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn bounds_of(panel: &Panel) -> ((f64, f64), (f64, f64)) {
    let mut xs = (f64::INFINITY, f64::NEG_INFINITY);
    let mut ys = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &panel.series {
        for &(x, y) in &s.points {
            xs = (xs.0.min(x), xs.1.max(x));
            ys = (ys.0.min(y), ys.1.max(y));
        }
    }
    if !xs.0.is_finite() {
        xs = (0.0, 1.0);
        ys = (0.0, 1.0);
    }
    if xs.0 == xs.1 {
        xs = (xs.0 - 0.5, xs.1 + 0.5);
    }
    if ys.0 == ys.1 {
        ys = (ys.0 - 0.5, ys.1 + 0.5);
    }
    (xs, ys)
}

fn render_panel(out: &mut String, panel: &Panel, ox: f64, oy: f64, x_label: &str, y_label: &str) {
    use std::fmt::Write;
    let ((x0, x1), (y0, y1)) = bounds_of(panel);
    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let sx = |x: f64| ox + MARGIN_L + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| oy + MARGIN_T + (1.0 - (y - y0) / (y1 - y0)) * plot_h;

    writeln!(out, "<g>").unwrap();
    writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13" font-weight="bold">{}</text>"#,
        ox + PANEL_W / 2.0,
        oy + 18.0,
        escape(&panel.title)
    )
    .unwrap();
    // axes
    writeln!(
        out,
        r##"<path d="M{:.1} {:.1} L{:.1} {:.1} L{:.1} {:.1}" fill="none" stroke="#333" stroke-width="1"/>"##,
        sx(x0), sy(y1), sx(x0), sy(y0), sx(x1), sy(y0)
    )
    .unwrap();
    // tick labels at the corners plus midpoints
    for (t, frac) in [(x0, 0.0), ((x0 + x1) / 2.0, 0.5), (x1, 1.0)] {
        let x = ox + MARGIN_L + frac * plot_w;
        writeln!(
            out,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle" font-size="10">{}</text>"#,
            oy + PANEL_H - MARGIN_B + 14.0,
            fmt(t)
        )
        .unwrap();
    }
    for (t, frac) in [(y0, 0.0), ((y0 + y1) / 2.0, 0.5), (y1, 1.0)] {
        let y = oy + MARGIN_T + (1.0 - frac) * plot_h;
        writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="10">{}</text>"#,
            ox + MARGIN_L - 5.0,
            y + 3.0,
            fmt(t)
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11">{}</text>"#,
        ox + MARGIN_L + plot_w / 2.0,
        oy + PANEL_H - 8.0,
        escape(x_label)
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
        ox + 14.0,
        oy + MARGIN_T + plot_h / 2.0,
        ox + 14.0,
        oy + MARGIN_T + plot_h / 2.0,
        escape(y_label)
    )
    .unwrap();

    for (i, series) in panel.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        if !series.points.is_empty() {
            let path: Vec<String> = series
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                path.join(" ")
            )
            .unwrap();
        }
        // legend entry
        let ly = oy + MARGIN_T + 6.0 + i as f64 * 13.0;
        let lx = ox + MARGIN_L + 8.0;
        writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="1.5"/>"#,
            lx + 16.0
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="10">{}</text>"#,
            lx + 20.0,
            ly + 3.0,
            escape(&series.label)
        )
        .unwrap();
    }
    writeln!(out, "</g>").unwrap();
}

/// Renders panels on a row grid and returns the SVG document.
pub fn line_chart(panels: &[Panel], x_label: &str, y_label: &str) -> String {
    use std::fmt::Write;
    let cols = panels.len().clamp(1, PANELS_PER_ROW);
    let rows = panels.len().div_ceil(PANELS_PER_ROW).max(1);
    let width = cols as f64 * PANEL_W;
    let height = rows as f64 * PANEL_H;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    for (i, panel) in panels.iter().enumerate() {
        let ox = (i % PANELS_PER_ROW) as f64 * PANEL_W;
        let oy = (i / PANELS_PER_ROW) as f64 * PANEL_H;
        render_panel(&mut out, panel, ox, oy, x_label, y_label);
    }
    out.push_str("</svg>\n");
    out
}
