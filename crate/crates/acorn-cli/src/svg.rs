//! Minimal SVG bar charts. Text output only, diffable in tests.

/// One labeled bar chart. Values may be negative (bars extend below the
/// zero axis). Returns the full SVG document.
pub fn bar_chart(title: &str, labels: &[String], values: &[f64]) -> String {
    let n = values.len().max(1);
    let width = 160.0 + 120.0 * n as f64;
    let height = 320.0;
    let plot_left = 80.0;
    let plot_top = 50.0;
    let plot_bottom = height - 60.0;
    let plot_height = plot_bottom - plot_top;

    let max_v = values.iter().cloned().fold(0.0f64, f64::max).max(1e-9);
    let min_v = values.iter().cloned().fold(0.0f64, f64::min);
    let span = (max_v - min_v).max(1e-9);
    let y_of = |v: f64| plot_bottom - (v - min_v) / span * plot_height;

    let mut svg = String::new();
    svg += &format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {width:.0} {height:.0}\" \
         font-family=\"sans-serif\" font-size=\"14\">\n"
    );
    svg += &format!("  <text x=\"{:.0}\" y=\"28\" font-size=\"18\">{}</text>\n", plot_left, escape(title));
    // zero axis
    let y0 = y_of(0.0);
    svg += &format!(
        "  <line x1=\"{plot_left:.0}\" y1=\"{y0:.1}\" x2=\"{:.1}\" y2=\"{y0:.1}\" stroke=\"#333\"/>\n",
        width - 40.0
    );
    for (i, (label, &v)) in labels.iter().zip(values).enumerate() {
        let x = plot_left + 20.0 + 120.0 * i as f64;
        let y_top = y_of(v.max(0.0));
        let bar_h = (y_of(v.min(0.0)) - y_top).max(0.5);
        svg += &format!(
            "  <rect x=\"{x:.1}\" y=\"{y_top:.1}\" width=\"80\" height=\"{bar_h:.1}\" fill=\"#4878a8\"/>\n"
        );
        let value_y = if v >= 0.0 { y_top - 6.0 } else { y_of(v) + 16.0 };
        svg += &format!(
            "  <text x=\"{:.1}\" y=\"{value_y:.1}\" text-anchor=\"middle\">{v:.3}</text>\n",
            x + 40.0
        );
        svg += &format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            x + 40.0,
            height - 30.0,
            escape(label)
        );
    }
    svg += "</svg>\n";
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
