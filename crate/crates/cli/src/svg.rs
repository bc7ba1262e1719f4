//! Hand-emitted SVG charts. Output is a pure function of the inputs; all
//! coordinates are printed with two decimals.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct LineSeries {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bar {
    pub label: String,
    pub value: f64,
    /// Training window `(start, size)` as trajectory fractions, drawn under the bar.
    pub window: Option<(f64, f64)>,
}

pub fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(out, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"28\" text-anchor=\"middle\" font-size=\"15\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );
}

/// Round tick positions covering `[lo, hi]`.
pub fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    if hi.is_nan() || lo.is_nan() || hi <= lo {
        return vec![lo];
    }
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).floor() as i64;
    let last = (hi / step).ceil() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-2..1e4).contains(&a) {
        format!("{v:.1e}")
    } else if a >= 10.0 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

struct Frame2d {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    log_x: bool,
}

impl Frame2d {
    fn px(&self, x: f64) -> f64 {
        let (x, a, b) = if self.log_x { (x.log10(), self.x0.log10(), self.x1.log10()) } else { (x, self.x0, self.x1) };
        let t = if b > a { (x - a) / (b - a) } else { 0.5 };
        LEFT + t * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        let t = if self.y1 > self.y0 { (y - self.y0) / (self.y1 - self.y0) } else { 0.5 };
        HEIGHT - BOTTOM - t * (HEIGHT - TOP - BOTTOM)
    }
}

fn axes(out: &mut String, f: &Frame2d, y_ticks: &[f64], x_label: &str, y_label: &str) {
    let (l, r, t, b) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(out, "<path d=\"M{l:.2} {t:.2} V{b:.2} H{r:.2}\" fill=\"none\" stroke=\"black\"/>");
    for &y in y_ticks {
        let py = f.py(y);
        let _ = writeln!(out, "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{r:.2}\" y2=\"{py:.2}\" stroke=\"#dddddd\"/>", l);
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            l - 6.0,
            py + 4.0,
            format_tick(y)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
        (l + r) / 2.0,
        HEIGHT - 18.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        "<text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">{}</text>",
        (t + b) / 2.0,
        (t + b) / 2.0,
        escape(y_label)
    );
}

fn y_range(values: impl Iterator<Item = f64>, from_zero: bool) -> (f64, f64, Vec<f64>) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if from_zero {
        lo = lo.min(0.0);
    }
    if hi <= lo {
        hi = lo + 1.0;
    }
    let ticks = nice_ticks(lo, hi);
    (ticks[0], *ticks.last().expect("ticks"), ticks)
}

/// Lines with markers; optional logarithmic x axis ticked at the data points.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[LineSeries],
    log_x: bool,
    y_from_zero: bool,
) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let xs: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).filter(|x| x.is_finite()).collect();
    let mut x_ticks = xs.clone();
    x_ticks.sort_by(f64::total_cmp);
    x_ticks.dedup();
    let (mut x0, mut x1) = match (x_ticks.first(), x_ticks.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => (0.0, 1.0),
    };
    if !log_x {
        let t = nice_ticks(x0, x1);
        x0 = t[0];
        x1 = *t.last().expect("ticks");
        x_ticks = t;
    } else if x0 <= 0.0 {
        x0 = 1.0;
    }
    if x1 <= x0 {
        x1 = x0 * 2.0 + 1.0;
    }
    let (y0, y1, y_ticks) = y_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)), y_from_zero);
    let f = Frame2d { x0, x1, y0, y1, log_x };
    axes(&mut out, &f, &y_ticks, x_label, y_label);
    for &x in &x_ticks {
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            f.px(x),
            HEIGHT - BOTTOM + 18.0,
            format_tick(x)
        );
    }
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
            .collect();
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>",
            pts.join(" ")
        );
        for p in &pts {
            let (x, y) = p.split_once(',').expect("point");
            let _ = writeln!(out, "<circle cx=\"{x}\" cy=\"{y}\" r=\"3\" fill=\"{color}\"/>");
        }
        let ly = TOP + 16.0 * k as f64 + 8.0;
        let lx = WIDTH - RIGHT + 14.0;
        let _ = writeln!(
            out,
            "<line x1=\"{lx:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            lx + 18.0
        );
        let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\">{}</text>", lx + 24.0, ly + 4.0, escape(&s.name));
    }
    out.push_str("</svg>\n");
    out
}

/// Vertical bars in the given order. Bars with a window get a strip below
/// showing the training window (filled) against the held-out tail (grey).
pub fn bar_chart(title: &str, y_label: &str, bars: &[Bar]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let (y0, y1, y_ticks) = y_range(bars.iter().map(|b| b.value), true);
    let f = Frame2d { x0: 0.0, x1: 1.0, y0, y1, log_x: false };
    axes(&mut out, &f, &y_ticks, "", y_label);
    let n = bars.len().max(1) as f64;
    let slot = (WIDTH - LEFT - RIGHT) / n;
    let width = (slot * 0.7).max(1.0);
    for (k, b) in bars.iter().enumerate() {
        let x = LEFT + slot * k as f64 + (slot - width) / 2.0;
        let color = PALETTE[0];
        if b.value.is_finite() {
            let top = f.py(b.value);
            let base = f.py(y0.max(0.0));
            let _ = writeln!(
                out,
                "<rect x=\"{x:.2}\" y=\"{:.2}\" width=\"{width:.2}\" height=\"{:.2}\" fill=\"{color}\"><title>{} {}</title></rect>",
                top.min(base),
                (base - top).abs(),
                escape(&b.label),
                format_tick(b.value)
            );
        }
        if let Some((start, size)) = b.window {
            let gy = HEIGHT - BOTTOM + 8.0;
            let _ = writeln!(
                out,
                "<rect x=\"{x:.2}\" y=\"{gy:.2}\" width=\"{width:.2}\" height=\"6\" fill=\"none\" stroke=\"#999999\" stroke-width=\"0.5\"/>"
            );
            let _ = writeln!(
                out,
                "<rect x=\"{:.2}\" y=\"{gy:.2}\" width=\"{:.2}\" height=\"6\" fill=\"#333333\"/>",
                x + start * width,
                size * width
            );
            let _ = writeln!(
                out,
                "<rect x=\"{:.2}\" y=\"{gy:.2}\" width=\"{:.2}\" height=\"6\" fill=\"#bbbbbb\"/>",
                x + 0.9 * width,
                0.1 * width
            );
        }
        if bars.len() <= 40 {
            let ty = HEIGHT - BOTTOM + 26.0;
            let cx = x + width / 2.0;
            let _ = writeln!(
                out,
                "<text x=\"{cx:.2}\" y=\"{ty:.2}\" text-anchor=\"end\" font-size=\"9\" transform=\"rotate(-40 {cx:.2} {ty:.2})\">{}</text>",
                escape(&b.label)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_cover_range() {
        let t = nice_ticks(0.0, 7.3);
        assert_eq!(t.first(), Some(&0.0));
        assert!(*t.last().unwrap() >= 7.3);
        assert_eq!(nice_ticks(2.0, 2.0), vec![2.0]);
    }

    #[test]
    fn charts_are_deterministic_and_escaped() {
        let s = vec![LineSeries { name: "a<b".into(), points: vec![(200.0, 3.0), (400.0, 2.0)] }];
        let a = line_chart("t", "x", "y", &s, true, true);
        assert_eq!(a, line_chart("t", "x", "y", &s, true, true));
        assert!(a.contains("a&lt;b"));
        assert!(a.starts_with("<svg"));
        let bars = vec![Bar { label: "w".into(), value: 1.5, window: Some((0.0, 0.3)) }];
        let b = bar_chart("t", "y", &bars);
        assert!(b.contains("fill=\"#333333\""));
    }
}
