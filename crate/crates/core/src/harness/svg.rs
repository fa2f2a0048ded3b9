//! Static SVG panels: mean MSE against MCAR level with ±1 SD bars.
//!
//! One panel per scenario, three series: plain completion at missing
//! entries (black), spatial completion at missing entries (red) and spatial
//! completion at new locations (blue). Coordinates are printed with fixed
//! precision so identical reports give identical bytes.

use std::fmt::Write;

use crate::harness::report::{ExperimentReport, Method, Metric};

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 360.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 52.0;

struct Series {
    label: &'static str,
    color: &'static str,
    /// `(level, mean, sd)`
    points: Vec<(f64, f64, f64)>,
}

fn series(report: &ExperimentReport, scenario: &str) -> Vec<Series> {
    let spec = [
        ("LRMC (missing entries)", "black", Method::Lrmc, Metric::MseMissing),
        ("SMC (missing entries)", "red", Method::Smc, Metric::MseMissing),
        ("SMC (new locations)", "blue", Method::Smc, Metric::MseNew),
    ];
    spec.iter()
        .map(|&(label, color, method, metric)| Series {
            label,
            color,
            points: report
                .aggregates()
                .iter()
                .filter(|a| a.scenario == scenario && a.method == method && a.metric == metric)
                .map(|a| (a.mcar_level, a.mean, a.sd.unwrap_or(0.0)))
                .collect(),
        })
        .filter(|s| !s.points.is_empty())
        .collect()
}

/// Round-number tick step covering `span` in about `target` steps.
fn nice_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

/// Renders one scenario panel. Returns `None` if the report has no
/// aggregates for it.
pub fn render_panel(report: &ExperimentReport, scenario: &str) -> Option<String> {
    let series = series(report, scenario);
    if series.is_empty() {
        return None;
    }
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut y_max: f64 = 0.0;
    for &(x, m, sd) in pts {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_max = y_max.max(m + sd);
    }
    if x_max - x_min < 1e-12 {
        x_min -= 0.05;
        x_max += 0.05;
    }
    let y_step = nice_step(if y_max > 0.0 { y_max } else { 1.0 }, 5.0);
    let y_top = (y_max / y_step).ceil().max(1.0) * y_step;

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| TOP + plot_h - y / y_top * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">Scenario {scenario}</text>"#,
        WIDTH / 2.0
    );

    // Axes and ticks.
    let _ = writeln!(
        s,
        r#"<path d="M{LEFT:.2},{TOP:.2}V{:.2}H{:.2}" fill="none" stroke="black"/>"#,
        TOP + plot_h,
        LEFT + plot_w
    );
    let mut levels: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup_by(|a, b| a.to_bits() == b.to_bits());
    for &x in &levels {
        let px = sx(x);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{:.0}</text>"#,
            TOP + plot_h,
            TOP + plot_h + 4.0,
            TOP + plot_h + 16.0,
            x * 100.0
        );
    }
    let ticks = (y_top / y_step).round() as usize;
    for k in 0..=ticks {
        let y = k as f64 * y_step;
        let py = sy(y);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT:.2}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 4.0,
            LEFT - 6.0,
            py + 4.0,
            format_tick(y, y_step)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">MCAR level (%)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">MSE</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for ser in &series {
        let path: Vec<String> = ser
            .points
            .iter()
            .map(|&(x, m, _)| format!("{:.2},{:.2}", sx(x), sy(m)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            path.join(" "),
            ser.color
        );
        for &(x, m, sd) in &ser.points {
            let px = sx(x);
            let _ = writeln!(
                s,
                r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="{c}"/><circle cx="{px:.2}" cy="{:.2}" r="2.5" fill="{c}"/>"#,
                sy((m - sd).max(0.0)),
                sy(m + sd),
                sy(m),
                c = ser.color
            );
        }
    }

    for (k, ser) in series.iter().enumerate() {
        let y = TOP + 10.0 + 16.0 * k as f64;
        let x = LEFT + plot_w - 170.0;
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            x + 18.0,
            ser.color,
            x + 24.0,
            y + 4.0,
            ser.label
        );
    }
    s.push_str("</svg>\n");
    Some(s)
}

fn format_tick(y: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    format!("{y:.decimals$}")
}
