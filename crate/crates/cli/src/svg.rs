//! Minimal SVG output: one polyline per curve, view box fitted to the data.

use std::fmt::Write as _;

pub type Polyline = Vec<(f64, f64)>;

/// Bounding box `(xmin, ymin, xmax, ymax)` grown by 5% of the larger extent on each side.
fn view_box(curves: &[Polyline]) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(x, y) in curves.iter().flatten() {
        b = (b.0.min(x), b.1.min(y), b.2.max(x), b.3.max(y));
    }
    if !b.0.is_finite() {
        return (-1.0, -1.0, 1.0, 1.0);
    }
    let span = (b.2 - b.0).max(b.3 - b.1).max(1e-12);
    let m = 0.05 * span;
    (b.0 - m, b.1 - m, b.2 + m, b.3 + m)
}

/// SVG document with the y axis pointing up. `aspect_equal = false` stretches each axis
/// independently, which suits function plots such as `alpha(t)`.
pub fn render(curves: &[Polyline], aspect_equal: bool) -> String {
    let (x0, y0, x1, y1) = if aspect_equal {
        view_box(curves)
    } else {
        independent_box(curves)
    };
    let (w, h) = (x1 - x0, y1 - y0);
    let stroke = 0.002 * w.max(h);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="800" height="{}" preserveAspectRatio="{}">"#,
        x0,
        -y1,
        w,
        h,
        if aspect_equal { (800.0 * h / w).round().max(1.0) } else { 500.0 },
        if aspect_equal { "xMidYMid meet" } else { "none" }
    );
    let _ = writeln!(s, r#"<g transform="scale(1,-1)">"#);
    for c in curves {
        let pts: Vec<String> = c.iter().map(|(x, y)| format!("{x:.9},{y:.9}")).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="black" stroke-width="{stroke}" vector-effect="non-scaling-stroke" points="{}"/>"#,
            pts.join(" ")
        );
    }
    s.push_str("</g>\n</svg>\n");
    s
}

fn independent_box(curves: &[Polyline]) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(x, y) in curves.iter().flatten() {
        b = (b.0.min(x), b.1.min(y), b.2.max(x), b.3.max(y));
    }
    if !b.0.is_finite() {
        return (-1.0, -1.0, 1.0, 1.0);
    }
    let mx = 0.05 * (b.2 - b.0).max(1e-12);
    let my = 0.05 * (b.3 - b.1).max(1e-12);
    (b.0 - mx, b.1 - my, b.2 + mx, b.3 + my)
}
