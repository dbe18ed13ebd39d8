use std::fmt::Write as _;

use crate::eval::TrialRecord;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 32.0;
const BOTTOM: f64 = 48.0;
const MEAN_POINTS: usize = 200;

/// (cumulative frames, trailing-k mean) after every episode.
pub fn trailing_curve(rec: &TrialRecord, k: usize) -> Vec<(f64, f64)> {
    let k = k.max(1);
    let mut sum = 0.0;
    rec.episodes
        .iter()
        .enumerate()
        .map(|(i, e)| {
            sum += e.score as f64;
            if i >= k {
                sum -= rec.episodes[i - k].score as f64;
            }
            (e.cum_frames as f64, sum / (i + 1).min(k) as f64)
        })
        .collect()
}

/// Value of a step curve at `x`: the last point at or before `x`.
fn step_at(curve: &[(f64, f64)], x: f64) -> f64 {
    let i = curve.partition_point(|p| p.0 <= x);
    curve[i.saturating_sub(1)].1
}

/// Cross-trial mean on an even grid over the span every trial covers.
pub fn mean_curve(curves: &[Vec<(f64, f64)>]) -> Vec<(f64, f64)> {
    let live: Vec<&Vec<(f64, f64)>> = curves.iter().filter(|c| !c.is_empty()).collect();
    if live.is_empty() {
        return Vec::new();
    }
    let lo = live.iter().map(|c| c[0].0).fold(f64::NEG_INFINITY, f64::max);
    let hi = live.iter().map(|c| c[c.len() - 1].0).fold(f64::INFINITY, f64::min);
    if hi < lo {
        return Vec::new();
    }
    let n = if hi > lo { MEAN_POINTS } else { 1 };
    (0..n)
        .map(|i| {
            let x = if n == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            };
            let y = live.iter().map(|c| step_at(c, x)).sum::<f64>() / live.len() as f64;
            (x, y)
        })
        .collect()
}

struct Frame {
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (WIDTH - LEFT - RIGHT) * x / self.x_max
    }
    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (HEIGHT - TOP - BOTTOM) * (y - self.y_min) / (self.y_max - self.y_min)
    }
    fn polyline(&self, pts: &[(f64, f64)], style: &str) -> String {
        let mut s = String::from("<polyline fill=\"none\" ");
        s.push_str(style);
        s.push_str(" points=\"");
        for (i, (x, y)) in pts.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{:.2},{:.2}", self.px(*x), self.py(*y));
        }
        s.push_str("\"/>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Learning curves: one grey line per trial and the red cross-trial mean.
pub fn emit_curves(records: &[TrialRecord], k: usize, title: &str) -> String {
    let curves: Vec<Vec<(f64, f64)>> = records.iter().map(|r| trailing_curve(r, k)).collect();
    let mean = mean_curve(&curves);
    let all = curves.iter().flatten().chain(mean.iter());
    let (mut y_min, mut y_max, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for (x, y) in all {
        y_min = y_min.min(*y);
        y_max = y_max.max(*y);
        x_max = x_max.max(*x);
    }
    if !y_min.is_finite() {
        (y_min, y_max) = (0.0, 1.0);
    }
    if y_max - y_min < 1e-9 {
        y_min -= 1.0;
        y_max += 1.0;
    }
    if x_max <= 0.0 {
        x_max = 1.0;
    }
    let f = Frame { x_max, y_min, y_max };

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, y0, x1, y1) = (LEFT, HEIGHT - BOTTOM, WIDTH - RIGHT, TOP);
    let _ = writeln!(
        s,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>"
    );
    let _ = writeln!(
        s,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>"
    );
    for i in 0..=4 {
        let xv = x_max * i as f64 / 4.0;
        let yv = y_min + (y_max - y_min) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{:.0}</text>",
            f.px(xv),
            y0 + 14.0,
            xv
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{:.2}</text>",
            x0 - 4.0,
            f.py(yv) + 3.0,
            yv
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">frames</text>",
        (x0 + x1) / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        "<text x=\"14\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.2})\">score (last {k} episodes)</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    for c in &curves {
        if !c.is_empty() {
            s.push_str(&f.polyline(c, "stroke=\"#999999\" stroke-width=\"1\""));
        }
    }
    if !mean.is_empty() {
        s.push_str(&f.polyline(&mean, "stroke=\"#d62728\" stroke-width=\"2\""));
    }
    s.push_str("</svg>\n");
    s
}
