//! Minimal self-contained SVG line charts; no plotting dependency so the
//! output bytes are fully reproducible.

/// One curve: a label and the sample values (x is the sample index).
pub struct Series {
    pub label: String,
    pub values: Vec<f64>,
}

pub struct Panel {
    pub title: String,
    pub series: Vec<Series>,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const WIDTH: f64 = 900.0;
const PANEL_HEIGHT: f64 = 260.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 35.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn fmt(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

/// Render stacked panels sharing the sample-index x axis into a standalone
/// SVG document.
pub fn render(panels: &[Panel]) -> String {
    let total_h = PANEL_HEIGHT * panels.len() as f64;
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{total_h}\" viewBox=\"0 0 {WIDTH} {total_h}\">\n"
    ));
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{total_h}\" fill=\"white\"/>\n"
    ));
    for (pi, panel) in panels.iter().enumerate() {
        let y0 = pi as f64 * PANEL_HEIGHT;
        render_panel(&mut out, panel, y0);
    }
    out.push_str("</svg>\n");
    out
}

fn render_panel(out: &mut String, panel: &Panel, y0: f64) {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = PANEL_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let len = panel.series.iter().map(|s| s.values.len()).max().unwrap_or(0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &panel.series {
        for v in &s.values {
            if v.is_finite() {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    if hi - lo < 1e-12 {
        hi += 0.5;
        lo -= 0.5;
    }
    let pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    let x_of = |i: usize| MARGIN_LEFT + plot_w * i as f64 / (len.max(2) - 1) as f64;
    let y_of = |v: f64| y0 + MARGIN_TOP + plot_h * (1.0 - (v - lo) / (hi - lo));

    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\" font-weight=\"bold\">{}</text>\n",
        MARGIN_LEFT,
        y0 + 18.0,
        esc(&panel.title)
    ));
    // frame
    out.push_str(&format!(
        "<rect x=\"{MARGIN_LEFT}\" y=\"{}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n",
        y0 + MARGIN_TOP
    ));
    // y ticks
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let y = y_of(v);
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#ccc\" stroke-width=\"0.5\"/>\n",
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{}</text>\n",
            MARGIN_LEFT - 5.0,
            y + 3.0,
            fmt(v)
        ));
    }
    // x ticks
    for k in 0..=5 {
        let i = (len.saturating_sub(1)) * k / 5;
        let x = x_of(i);
        out.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{i}</text>\n",
            y0 + MARGIN_TOP + plot_h + 15.0
        ));
    }
    // series
    for (si, s) in panel.series.iter().enumerate() {
        let color = COLORS[si % COLORS.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for (i, v) in s.values.iter().enumerate() {
            if !v.is_finite() {
                pen_down = false;
                continue;
            }
            let cmd = if pen_down { 'L' } else { 'M' };
            d.push_str(&format!("{cmd}{:.2},{:.2} ", x_of(i), y_of(*v)));
            pen_down = true;
        }
        if !d.is_empty() {
            out.push_str(&format!(
                "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\"/>\n",
                d.trim_end()
            ));
        }
        // legend entry
        let lx = MARGIN_LEFT + plot_w - 150.0;
        let ly = y0 + MARGIN_TOP + 14.0 + 14.0 * si as f64;
        out.push_str(&format!(
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            lx + 20.0
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            lx + 25.0,
            ly + 3.5,
            esc(&s.label)
        ));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_well_formed_document() {
        let panels = vec![Panel {
            title: "test <&>".into(),
            series: vec![
                Series { label: "a".into(), values: vec![0.0, 1.0, f64::NAN, 0.5] },
                Series { label: "b".into(), values: vec![1.0, -1.0, 2.0, 0.0] },
            ],
        }];
        let doc = render(&panels);
        assert!(doc.starts_with("<?xml"));
        assert!(doc.contains("width=\"900\""));
        assert!(doc.trim_end().ends_with("</svg>"));
        assert!(!doc.contains("NaN"));
        // no raw special characters leaked from labels
        assert!(doc.contains("test &lt;&amp;&gt;"));
    }
}
