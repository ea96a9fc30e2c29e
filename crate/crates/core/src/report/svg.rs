//! Minimal deterministic SVG scatterplots.

use std::fmt::Write as _;

use thiserror::Error;

use crate::analyses::ScatterPoint;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;
const TICKS: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("cannot plot {name}: non-finite coordinate ({x}, {y})")]
pub struct NonFinitePoint {
    pub name: String,
    pub x: f64,
    pub y: f64,
}

pub fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if (c as u32) < 0x20 && c != '\t' => out.push(' '),
            c => out.push(c),
        }
    }
    out
}

/// Data range padded by 5% on each side; degenerate ranges widen to +-1.
fn padded(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo == 0.0 {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn num(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

pub fn scatter_svg(points: &[ScatterPoint], x_label: &str, y_label: &str, title: &str) -> Result<String, NonFinitePoint> {
    if let Some(p) = points.iter().find(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(NonFinitePoint {
            name: p.name.clone(),
            x: p.x,
            y: p.y,
        });
    }
    let (x0, x1) = padded(points.iter().map(|p| p.x));
    let (y0, y1) = padded(points.iter().map(|p| p.y));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text class="title" x="{}" y="30" text-anchor="middle" font-size="16">{}</text>"#,
        num(WIDTH / 2.0),
        escape_xml(title)
    );
    let _ = writeln!(s, r#"<g class="axes" stroke="black" stroke-width="1">"#);
    let _ = writeln!(
        s,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
        num(LEFT),
        num(TOP + ph),
        num(LEFT + pw),
        num(TOP + ph)
    );
    let _ = writeln!(s, r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#, num(LEFT), num(TOP), num(LEFT), num(TOP + ph));
    for i in 0..=TICKS {
        let t = i as f64 / TICKS as f64;
        let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}"/>"#,
            num(sx(xv)),
            num(TOP + ph),
            num(TOP + ph + 5.0)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}"/>"#,
            num(LEFT - 5.0),
            num(sy(yv)),
            num(LEFT)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g class="ticks" font-size="10" fill="black">"#);
    for i in 0..=TICKS {
        let t = i as f64 / TICKS as f64;
        let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let _ = writeln!(
            s,
            r#"<text class="tick" x="{}" y="{}" text-anchor="middle">{}</text>"#,
            num(sx(xv)),
            num(TOP + ph + 18.0),
            num(xv)
        );
        let _ = writeln!(
            s,
            r#"<text class="tick" x="{}" y="{}" text-anchor="end">{}</text>"#,
            num(LEFT - 8.0),
            num(sy(yv) + 3.0),
            num(yv)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<text class="axis-label" x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
        num(LEFT + pw / 2.0),
        num(HEIGHT - 20.0),
        escape_xml(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text class="axis-label" x="20" y="{0}" text-anchor="middle" font-size="12" transform="rotate(-90 20 {0})">{1}</text>"#,
        num(TOP + ph / 2.0),
        escape_xml(y_label)
    );
    let _ = writeln!(s, r#"<g class="points" fill="steelblue" fill-opacity="0.6">"#);
    for p in points {
        let _ = writeln!(s, r#"<circle cx="{}" cy="{}" r="3"/>"#, num(sx(p.x)), num(sy(p.y)));
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g class="labels" font-size="9" fill="black">"#);
    for p in points.iter().filter(|p| p.labeled) {
        let _ = writeln!(
            s,
            r#"<text class="point-label" x="{}" y="{}">{}</text>"#,
            num(sx(p.x) + 4.0),
            num(sy(p.y) - 4.0),
            escape_xml(&p.name)
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::country::Country;
    use crate::model::CanonicalId;

    fn pt(name: &str, x: f64, y: f64, labeled: bool) -> ScatterPoint {
        ScatterPoint {
            id: CanonicalId(name.into()),
            name: name.into(),
            country: Country::parse("US").unwrap(),
            x,
            y,
            labeled,
        }
    }

    #[test]
    fn empty_plot_has_axes_only() {
        let s = scatter_svg(&[], "x", "y", "t").unwrap();
        assert!(s.contains("viewBox=\"0 0 800 600\""));
        assert!(s.contains("<line"));
        assert!(!s.contains("<circle"));
        assert!(!s.contains("point-label"));
    }

    #[test]
    fn one_labeled_point_one_label() {
        let s = scatter_svg(&[pt("Univ <A> & B", 1.0, 2.0, true)], "x", "y", "t").unwrap();
        assert_eq!(s.matches("class=\"point-label\"").count(), 1);
        assert_eq!(s.matches("Univ &lt;A&gt; &amp; B").count(), 1);
        assert_eq!(s.matches("<circle").count(), 1);
    }

    #[test]
    fn non_finite_is_rejected() {
        assert!(scatter_svg(&[pt("a", f64::NAN, 1.0, false)], "x", "y", "t").is_err());
    }

    #[test]
    fn points_stay_inside_plot_area() {
        let pts: Vec<ScatterPoint> = (0..20).map(|i| pt(&i.to_string(), i as f64, (i * i) as f64, false)).collect();
        let s = scatter_svg(&pts, "x", "y", "t").unwrap();
        for line in s.lines().filter(|l| l.starts_with("<circle")) {
            let cx: f64 = line.split("cx=\"").nth(1).unwrap().split('"').next().unwrap().parse().unwrap();
            assert!(cx > LEFT && cx < WIDTH - RIGHT);
        }
    }
}
