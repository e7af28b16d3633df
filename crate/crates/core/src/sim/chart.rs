//! Minimal SVG line charts of a [`Trace`]. Output is plain text and
//! deterministic.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{SimError, Trace};

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// A named series sampled at every slot.
pub struct Series {
    pub label: String,
    pub values: Vec<f64>,
}

fn nice_step(range: f64, ticks: usize) -> f64 {
    let raw = range / ticks as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let f = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    f * mag
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Renders series against slot numbers `slots`. Lines are drawn when there
/// are at least two slots, markers otherwise. Non-finite values are skipped.
pub fn render_svg(title: &str, y_label: &str, slots: &[u64], series: &[Series]) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let finite = series
        .iter()
        .flat_map(|s| s.values.iter())
        .copied()
        .filter(|v| v.is_finite());
    let (mut lo, mut hi) = finite.fold((0.0f64, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    if !hi.is_finite() || hi <= lo {
        hi = lo + 1.0;
    }
    let step = nice_step(hi - lo, 5);
    lo = (lo / step).floor() * step;
    hi = (hi / step).ceil() * step;
    let x0 = slots.first().copied().unwrap_or(1) as f64;
    let x1 = (slots.last().copied().unwrap_or(1) as f64).max(x0 + 1.0);
    let px = |t: f64| LEFT + (t - x0) / (x1 - x0) * plot_w;
    let py = |v: f64| TOP + (hi - v) / (hi - lo) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );
    // axes
    let _ = writeln!(
        s,
        r#"<path d="M{LEFT:.1},{TOP:.1} V{:.1} H{:.1}" fill="none" stroke="black"/>"#,
        TOP + plot_h,
        LEFT + plot_w
    );
    let mut v = lo;
    while v <= hi + step * 1e-9 {
        let y = py(v);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#dddddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            LEFT + plot_w,
            LEFT - 6.0,
            y + 4.0,
            super::format_g6((v / step).round() * step)
        );
        v += step;
    }
    let xstep = nice_step(x1 - x0, 8).max(1.0);
    let mut t = (x0 / xstep).ceil() * xstep;
    while t <= x1 + 1e-9 {
        let x = px(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 18.0,
            t
        );
        t += xstep;
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">slot</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(16,{:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        TOP + plot_h / 2.0,
        escape(y_label)
    );

    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let dash = if i >= PALETTE.len() {
            r#" stroke-dasharray="6,3""#
        } else {
            ""
        };
        let pts: Vec<(f64, f64)> = slots
            .iter()
            .zip(&ser.values)
            .filter(|(_, v)| v.is_finite())
            .map(|(&t, &v)| (px(t as f64), py(v)))
            .collect();
        if slots.len() >= 2 {
            let mut d = String::new();
            for (x, y) in &pts {
                let _ = write!(d, "{x:.1},{y:.1} ");
            }
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"{dash}/>"#,
                d.trim_end()
            );
        } else {
            for (x, y) in &pts {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{x:.1}" cy="{y:.1}" r="4" fill="{color}"/>"#
                );
            }
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 22.0,
            lx + 28.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `rates.svg` (path rates) and `margins.svg` (link margins) into
/// `dir`.
pub fn emit_charts(trace: &Trace, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, SimError> {
    if trace.records.is_empty() {
        return Err(SimError::EmptyTrace);
    }
    let slots: Vec<u64> = trace.records.iter().map(|r| r.slot).collect();
    let column =
        |f: &dyn Fn(&super::TraceRecord) -> f64| trace.records.iter().map(f).collect::<Vec<_>>();
    let mut rates = Vec::new();
    let mut k = 0;
    for (s, row) in trace.records[0].x.iter().enumerate() {
        for p in 0..row.len() {
            rates.push(Series {
                label: format!("x_{}", trace.path_labels[k]),
                values: column(&|r| r.x[s][p]),
            });
            k += 1;
        }
    }
    let margins: Vec<Series> = trace
        .link_labels
        .iter()
        .enumerate()
        .map(|(e, l)| Series {
            label: format!("sigma_{l}"),
            values: column(&|r| r.sigma[e]),
        })
        .collect();
    let title = |what: &str| {
        let rates: Vec<String> = trace
            .max_rates
            .iter()
            .map(|&r| super::format_g6(r))
            .collect();
        format!("{}: {what} (R = {})", trace.scenario, rates.join(", "))
    };
    std::fs::create_dir_all(dir.as_ref())?;
    let mut out = Vec::new();
    for (name, what, unit, series) in [
        ("rates", "path rates", "rate (kbps)", rates),
        ("margins", "link margins", "margin (kbps)", margins),
    ] {
        let path = dir.as_ref().join(format!("{name}.svg"));
        std::fs::write(&path, render_svg(&title(what), unit, &slots, &series))?;
        out.push(path);
    }
    Ok(out)
}
