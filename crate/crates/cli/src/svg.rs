//! Hand-assembled SVG bifurcation diagram: `lambda` across, `w(0)` up.

use std::fmt::Write as _;

use htbif_core::nodal::LoopTrace;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 770.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 440.0;
/// Samples of the constant branch between the ceiling and `lambda = beta`.
const CONSTANT_SAMPLES: usize = 400;
const COLORS: [&str; 6] = ["#c0392b", "#2471a3", "#1e8449", "#b9770e", "#7d3c98", "#117a65"];

/// Vertical extent of the plot. `w_0(lambda)` is cut off here as `lambda -> 0`.
pub fn ceiling(beta: f64, loops: &[LoopTrace]) -> f64 {
    let loop_max = loops
        .iter()
        .flat_map(|t| t.points.iter())
        .map(|q| q.w_plus_upper.max(q.w_minus_lower))
        .fold(0.0, f64::max);
    // w_0 at lambda = beta/4 is 3
    1.25 * loop_max.max(beta / (beta / 4.0) - 1.0)
}

struct Frame {
    beta: f64,
    top: f64,
}

impl Frame {
    fn x(&self, lambda: f64) -> f64 {
        LEFT + (RIGHT - LEFT) * lambda / self.beta
    }

    fn y(&self, w: f64) -> f64 {
        BOTTOM - (BOTTOM - TOP) * w.min(self.top).max(0.0) / self.top
    }

    fn point(&self, out: &mut String, lambda: f64, w: f64) {
        let _ = write!(out, "{:.3},{:.3} ", self.x(lambda), self.y(w));
    }
}

/// The full SVG document. `loops` may be empty (no nodal branches).
pub fn diagram(beta: f64, mu: f64, loops: &[LoopTrace]) -> String {
    let top = ceiling(beta, loops);
    let fr = Frame { beta, top };
    let w0 = |l: f64| beta / l - 1.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">Steady states at mu = {mu}, b mu/d = {beta}</text>"#,
        WIDTH / 2.0
    );

    // axes and ticks
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="black" points="{LEFT},{TOP} {LEFT},{BOTTOM} {RIGHT},{BOTTOM}"/>"#
    );
    for i in 0..=4 {
        let l = beta * i as f64 / 4.0;
        let x = fr.x(l);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.3}" y1="{BOTTOM}" x2="{x:.3}" y2="{:.1}" stroke="black"/><text x="{x:.3}" y="{:.1}" text-anchor="middle">{l:.4}</text>"#,
            BOTTOM + 5.0,
            BOTTOM + 20.0
        );
        let w = top * i as f64 / 4.0;
        let y = fr.y(w);
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{y:.3}" x2="{LEFT}" y2="{y:.3}" stroke="black"/><text x="{:.1}" y="{:.3}" text-anchor="end">{w:.4}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">lambda</text>"#,
        (LEFT + RIGHT) / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">w(0)</text>"#,
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0
    );

    // constant branch, from the ceiling crossing down to zero at lambda = beta
    let l_start = beta / (1.0 + top);
    let mut pts = String::new();
    for i in 0..=CONSTANT_SAMPLES {
        let l = l_start + (beta - l_start) * i as f64 / CONSTANT_SAMPLES as f64;
        fr.point(&mut pts, l, w0(l));
    }
    let _ = writeln!(
        s,
        r#"<polyline id="C0" fill="none" stroke="black" stroke-width="1.5" points="{}"/>"#,
        pts.trim_end()
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="{:.1}">C0 (w0 clipped at {top:.4}, unbounded as lambda -> 0)</text>"#,
        fr.x(l_start) + 6.0,
        TOP + 12.0
    );

    for (k, t) in loops.iter().enumerate() {
        if t.points.is_empty() {
            continue;
        }
        let color = COLORS[k % COLORS.len()];
        let (lo, hi) = t.window;
        let mut pts = String::new();
        fr.point(&mut pts, lo, w0(lo));
        for q in &t.points {
            fr.point(&mut pts, q.lambda, q.w_minus_lower);
        }
        fr.point(&mut pts, hi, w0(hi));
        for q in t.points.iter().rev() {
            fr.point(&mut pts, q.lambda, q.w_plus_upper);
        }
        let _ = writeln!(
            s,
            r#"<polygon id="C{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            t.n,
            pts.trim_end()
        );
        let peak = t.points.iter().map(|q| q.w_plus_upper).fold(0.0, f64::max);
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" fill="{color}" text-anchor="middle">C{}</text>"#,
            fr.x(0.5 * (lo + hi)),
            fr.y(peak) - 6.0,
            t.n
        );
    }
    s.push_str("</svg>\n");
    s
}
