//! Minimal SVG 1.1 charts: log-log profiles and an eigenvalue scatter.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLOURS: [&str; 4] = ["#1f4e9c", "#c0392b", "#27ae60", "#8e44ad"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, title: &str, stamp: Option<u64>) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    if let Some(t) = stamp {
        let _ = writeln!(out, "<metadata>generated-unix-seconds: {t}</metadata>");
    }
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="13">{}</text>"#, W / 2.0, esc(title));
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if log {
            lo = lo.floor();
            hi = hi.ceil().max(lo + 1.0);
        } else if hi - lo < 1e-12 {
            lo -= 1.0;
            hi += 1.0;
        } else {
            let pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        Axis { lo, hi, log }
    }

    fn frac(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let step = ((self.hi - self.lo) / 8.0).ceil().max(1.0) as i64;
            (self.lo as i64..=self.hi as i64)
                .step_by(step as usize)
                .map(|e| (10f64.powi(e as i32), format!("1e{e}")))
                .collect()
        } else {
            (0..=5)
                .map(|i| {
                    let v = self.lo + (self.hi - self.lo) * i as f64 / 5.0;
                    (v, format!("{v:.3}"))
                })
                .collect()
        }
    }
}

fn frame(out: &mut String, xa: &Axis, ya: &Axis, xlabel: &str, ylabel: &str) {
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let _ = writeln!(out, r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##);
    for (v, label) in xa.ticks() {
        let x = LEFT + xa.frac(v) * pw;
        let _ = writeln!(out, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#eee"/>"##, TOP + ph);
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#, TOP + ph + 15.0);
    }
    for (v, label) in ya.ticks() {
        let y = TOP + (1.0 - ya.frac(v)) * ph;
        let _ = writeln!(out, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#eee"/>"##, LEFT + pw);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#, LEFT - 5.0, y + 4.0);
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 12.0, esc(xlabel));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        esc(ylabel)
    );
}

/// Log-log line chart; non-positive values cannot be drawn and are dropped.
pub fn profile_plot(title: &str, ylabel: &str, series: &[(&str, Vec<(f64, f64)>)], stamp: Option<u64>) -> String {
    let pos: Vec<(&str, Vec<(f64, f64)>)> = series
        .iter()
        .map(|(l, pts)| (*l, pts.iter().copied().filter(|(x, y)| *x > 0.0 && *y > 0.0 && y.is_finite()).collect()))
        .collect();
    let xa = Axis::fit(pos.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)), true);
    let ya = Axis::fit(pos.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)), true);
    let mut out = String::new();
    header(&mut out, title, stamp);
    frame(&mut out, &xa, &ya, "r", ylabel);
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    for (k, (label, pts)) in pos.iter().enumerate() {
        let colour = COLOURS[k % COLOURS.len()];
        let mut path = String::new();
        for (x, y) in pts {
            let _ = write!(path, "{:.2},{:.2} ", LEFT + xa.frac(*x) * pw, TOP + (1.0 - ya.frac(*y)) * ph);
        }
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#, path.trim_end());
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" fill="{colour}">{}</text>"#,
            LEFT + 10.0,
            TOP + 15.0 + 14.0 * k as f64,
            esc(label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Sampled eigenvalues in the complex plane with the band `[0, ε)` marked.
pub fn spectrum_plot(title: &str, eigenvalues: &[[f64; 2]], epsilon: f64, stamp: Option<u64>) -> String {
    let clip = |v: f64| v.clamp(-50.0, 50.0);
    let pts: Vec<[f64; 2]> = eigenvalues.iter().filter(|e| e[0].is_finite() && e[1].is_finite()).map(|e| [clip(e[0]), clip(e[1])]).collect();
    let xa = Axis::fit(pts.iter().map(|p| p[0]).chain([0.0, epsilon]), false);
    let ya = Axis::fit(pts.iter().map(|p| p[1]).chain([-1.0, 1.0]), false);
    let mut out = String::new();
    header(&mut out, title, stamp);
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let (x0, x1) = (LEFT + xa.frac(0.0) * pw, LEFT + xa.frac(epsilon) * pw);
    let _ = writeln!(out, r##"<rect x="{x0:.2}" y="{TOP}" width="{:.2}" height="{ph}" fill="#f9d6d5"/>"##, x1 - x0);
    frame(&mut out, &xa, &ya, "Re λ (clipped to ±50)", "Im λ");
    for p in &pts {
        let _ = writeln!(
            out,
            r##"<circle cx="{:.2}" cy="{:.2}" r="1.6" fill="#1f4e9c" fill-opacity="0.5"/>"##,
            LEFT + xa.frac(p[0]) * pw,
            TOP + (1.0 - ya.frac(p[1])) * ph
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stamp_only_when_requested() {
        let s = profile_plot("m(r)", "value", &[("m", vec![(1.0, 1.0), (10.0, 0.01)])], None);
        assert!(s.starts_with("<?xml") && s.ends_with("</svg>\n"));
        assert!(!s.contains("<metadata>"));
        assert!(profile_plot("m", "v", &[], Some(5)).contains("generated-unix-seconds: 5"));
    }

    #[test]
    fn spectrum_marks_band() {
        let s = spectrum_plot("spec", &[[1.0, 0.0], [-2.0, 0.5]], 0.5, None);
        assert!(s.contains("#f9d6d5"));
        assert_eq!(s.matches("<circle").count(), 2);
    }
}
