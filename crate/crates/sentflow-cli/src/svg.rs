//! Minimal self-contained SVG scatter writer. Output depends only on the
//! inputs, so identical data gives identical bytes.

/// One dot: plot coordinates plus a class index into the legend.
pub struct ScatterPoint {
    pub x: f64,
    pub y: f64,
    pub class: usize,
}

const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1", "#76b7b2", "#edc948", "#9c755f",
];

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 56.0;
const RIGHT: f64 = 168.0;
const TOP: f64 = 44.0;
const BOTTOM: f64 = 40.0;

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    // Degenerate clouds still get a visible span.
    let span = (hi - lo).max(1e-9);
    (lo - 0.05 * span, hi + 0.05 * span)
}

/// Renders `points` as a scatter plot with one legend entry per class.
pub fn scatter_svg(points: &[ScatterPoint], classes: &[String], title: &str) -> String {
    let (x0, x1) = padded_range(points.iter().map(|p| p.x));
    let (y0, y1) = padded_range(points.iter().map(|p| p.y));
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * plot_h;

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\">\n"
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"26\" text-anchor=\"middle\" font-size=\"15\" \
         fill=\"#222\">{}</text>\n",
        LEFT + plot_w / 2.0,
        xml_escape(title)
    ));
    svg.push_str(&format!(
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"#444\"/>\n"
    ));
    // Axis extents, bottom-left to top-right.
    svg.push_str(&format!(
        "<text x=\"{LEFT}\" y=\"{:.1}\" font-size=\"11\" fill=\"#555\">{:.2}</text>\n",
        TOP + plot_h + 16.0,
        x0
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"11\" \
         fill=\"#555\">{:.2}</text>\n",
        LEFT + plot_w,
        TOP + plot_h + 16.0,
        x1
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"11\" \
         fill=\"#555\">{:.2}</text>\n",
        LEFT - 6.0,
        TOP + plot_h,
        y0
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"11\" \
         fill=\"#555\">{:.2}</text>\n",
        LEFT - 6.0,
        TOP + 10.0,
        y1
    ));
    for p in points {
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{}\" fill-opacity=\"0.75\"/>\n",
            sx(p.x),
            sy(p.y),
            PALETTE[p.class % PALETTE.len()]
        ));
    }
    for (i, name) in classes.iter().enumerate() {
        let y = TOP + 8.0 + 20.0 * i as f64;
        svg.push_str(&format!(
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"11\" height=\"11\" fill=\"{}\"/>\n",
            LEFT + plot_w + 18.0,
            y,
            PALETTE[i % PALETTE.len()]
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" fill=\"#222\">{}</text>\n",
            LEFT + plot_w + 34.0,
            y + 10.0,
            xml_escape(name)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
