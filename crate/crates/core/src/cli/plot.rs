//! CSV and SVG output for trajectories.

use std::fmt::Write;

use crate::flow::Trajectory;

pub const CSV_HEADER: &str = "t,dist_avg,dist_sigma,W,residual";

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// One row per recorded sample, 17 significant digits.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut s = String::with_capacity(96 * (traj.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for (t, d) in traj.times.iter().zip(&traj.diagnostics) {
        let nan = f64::NAN;
        let _ = writeln!(
            s,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            t,
            d.dist_avg.unwrap_or(nan),
            d.dist_sigma.unwrap_or(nan),
            d.w.unwrap_or(nan),
            d.residual
        );
    }
    s
}

/// One line per agent, coordinates comma separated.
pub(super) fn xbar_csv(xbar: &[f64], n: usize) -> String {
    let mut s = String::new();
    for block in xbar.chunks_exact(n) {
        let row: Vec<String> = block.iter().map(|v| format!("{v:.16e}")).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// `dist_avg` and `dist_sigma` against time.
pub fn trajectory_svg(traj: &Trajectory, title: &str) -> String {
    let pick = |f: fn(&crate::flow::Diagnostics) -> Option<f64>| -> Vec<(f64, f64)> {
        traj.times
            .iter()
            .zip(&traj.diagnostics)
            .filter_map(|(&t, d)| f(d).map(|v| (t, v)))
            .collect()
    };
    let series = vec![
        Series {
            label: "‖avg(x) − σ̄‖".into(),
            points: pick(|d| d.dist_avg),
        },
        Series {
            label: "‖σ − σ̄‖".into(),
            points: pick(|d| d.dist_sigma),
        },
    ];
    render(title, "t", "distance", &series)
}

/// `dist_avg` for several gains on shared axes.
pub fn comparison_svg(runs: &[(f64, &Trajectory)]) -> String {
    let series: Vec<Series> = runs
        .iter()
        .map(|(k, traj)| Series {
            label: format!("k = {k}"),
            points: traj
                .times
                .iter()
                .zip(&traj.diagnostics)
                .filter_map(|(&t, d)| d.dist_avg.map(|v| (t, v)))
                .collect(),
        })
        .collect();
    render("‖avg(x) − σ̄‖ by gain", "t", "distance", &series)
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let lo = lo.min(0.0);
    if hi > lo {
        (lo, hi)
    } else {
        (lo, lo + 1.0)
    }
}

fn render(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let all = || series.iter().flat_map(|s| s.points.iter());
    let (x0, x1) = extent(all().map(|p| p.0));
    let (y0, y1) = extent(all().map(|p| p.1));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        TOP / 2.0 + 5.0,
        escape(title)
    );
    // axes
    let _ = writeln!(
        s,
        r#"<g stroke="black" fill="none"><line x1="{LEFT}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{b}"/></g>"#,
        b = TOP + ph,
        r = LEFT + pw
    );
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(xv),
            TOP + ph + 18.0,
            tick_label(xv)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            sy(yv) + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0,
        escape(xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{y}" text-anchor="middle" transform="rotate(-90 20 {y})">{}</text>"#,
        escape(ylabel),
        y = TOP + ph / 2.0
    );

    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut pts = String::with_capacity(ser.points.len() * 16);
        for &(x, y) in ser.points.iter().filter(|p| p.1.is_finite()) {
            let _ = write!(pts, "{:.2},{:.2} ", sx(x), sy(y));
        }
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.trim_end()
        );
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<g class="legend"><line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text></g>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e-2 && v.abs() < 1e4 {
        format!("{}", (v * 1000.0).round() / 1000.0)
    } else {
        format!("{v:.1e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::Diagnostics;
    use crate::model::SystemState;

    fn tiny() -> Trajectory {
        Trajectory {
            times: vec![0.0, 0.5, 1.0],
            states: vec![SystemState::new(vec![0.0], vec![0.0]); 3],
            diagnostics: [0.4, 0.1, 0.0]
                .iter()
                .map(|&d| Diagnostics {
                    residual: d,
                    w: Some(d * d),
                    dist_avg: Some(d),
                    dist_sigma: Some(2.0 * d),
                })
                .collect(),
            steps: 2,
        }
    }

    #[test]
    fn csv_layout() {
        let text = trajectory_csv(&tiny());
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row, vec![0.0, 0.4, 0.8, 0.4 * 0.4, 0.4]);
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn csv_values_round_trip_exactly() {
        let v = 0.1f64 + 0.2;
        let printed = format!("{v:.16e}");
        assert_eq!(printed.parse::<f64>().unwrap().to_bits(), v.to_bits());
    }

    #[test]
    fn svg_has_one_polyline_per_series() {
        let t = tiny();
        let svg = trajectory_svg(&t, "a & b");
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a &amp; b"));
        let cmp = comparison_svg(&[(0.2, &t), (0.4, &t), (0.6, &t)]);
        assert_eq!(cmp.matches("<polyline").count(), 3);
    }

    #[test]
    fn flat_series_do_not_divide_by_zero() {
        let (lo, hi) = extent([0.0, 0.0].into_iter());
        assert!(hi > lo);
    }
}
