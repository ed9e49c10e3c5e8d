//! Minimal self-contained SVG density plot.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;

/// One density curve with a solid marker at `mean` and a dashed one at `mode`.
pub fn density_plot(title: &str, xs: &[f64], ys: &[f64], mean: f64, mode: f64) -> String {
    assert_eq!(xs.len(), ys.len());
    // Zoom on the region holding the mass instead of the full [0, 1].
    let peak = ys.iter().cloned().fold(0.0, f64::max);
    let visible: Vec<f64> = xs
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y > peak * 1e-3)
        .map(|(&x, _)| x)
        .collect();
    let (mut x0, mut x1) = match (visible.first(), visible.last()) {
        (Some(&a), Some(&b)) if b > a => (a, b),
        _ => (0.0, 1.0),
    };
    let pad = 0.05 * (x1 - x0);
    x0 = (x0 - pad).max(xs[0]);
    x1 = (x1 + pad).min(xs[xs.len() - 1]);
    let y1 = if peak > 0.0 { peak * 1.08 } else { 1.0 };

    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - y / y1 * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));

    // axes and ticks
    let (bx, by) = (MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{bx} {MARGIN} V{by} H{}" fill="none" stroke="black"/>"#,
        WIDTH - MARGIN
    );
    for i in 0..=5 {
        let x = x0 + (x1 - x0) * i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<line x1="{0:.1}" y1="{by}" x2="{0:.1}" y2="{1}" stroke="black"/><text x="{0:.1}" y="{2}" text-anchor="middle">{3:.3}</text>"#,
            px(x),
            by + 5.0,
            by + 18.0,
            x
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">ε</text>"#, WIDTH / 2.0, HEIGHT - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">density</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );

    let mut path = String::new();
    for (&x, &y) in xs.iter().zip(ys).filter(|(&x, _)| x >= x0 && x <= x1) {
        let cmd = if path.is_empty() { 'M' } else { 'L' };
        let _ = write!(path, "{cmd}{:.2} {:.2} ", px(x), py(y));
    }
    let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#, path.trim_end());

    for (x, dash, name) in [(mean, "", "mean"), (mode, r#" stroke-dasharray="6 4""#, "mode")] {
        if x >= x0 && x <= x1 {
            let _ = writeln!(
                s,
                r#"<line x1="{0:.2}" y1="{MARGIN}" x2="{0:.2}" y2="{by}" stroke="firebrick"{dash}/><text x="{1:.2}" y="{2}" fill="firebrick">{name} {3:.4}</text>"#,
                px(x),
                px(x) + 4.0,
                if name == "mean" { MARGIN + 12.0 } else { MARGIN + 28.0 },
                x
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
