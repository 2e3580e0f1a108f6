//! Minimal self-contained SVG plotting for logged runs: two stacked panels
//! (pendulum angles, gimbal angles) with references dashed.

use std::fmt::Write as _;

use crate::harness::report::CsvData;

const WIDTH: f64 = 960.0;
const PANEL_HEIGHT: f64 = 280.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 36.0;
const PANEL_GAP: f64 = 46.0;
const MARGIN_BOTTOM: f64 = 46.0;

struct Series<'a> {
    column: &'a str,
    label: &'a str,
    color: &'a str,
    dashed: bool,
}

const PENDULUM_PANEL: [Series<'static>; 4] = [
    Series { column: "theta1", label: "theta1", color: "#1f77b4", dashed: false },
    Series { column: "ref_theta1", label: "theta1 ref", color: "#1f77b4", dashed: true },
    Series { column: "theta2", label: "theta2", color: "#d62728", dashed: false },
    Series { column: "ref_theta2", label: "theta2 ref", color: "#d62728", dashed: true },
];

const GIMBAL_PANEL: [Series<'static>; 4] = [
    Series { column: "alpha", label: "alpha", color: "#2ca02c", dashed: false },
    Series { column: "ref_alpha", label: "alpha ref", color: "#2ca02c", dashed: true },
    Series { column: "beta", label: "beta", color: "#9467bd", dashed: false },
    Series { column: "ref_beta", label: "beta ref", color: "#9467bd", dashed: true },
];

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (-1.0, 1.0);
    }
    let span = hi - lo;
    if span < 1e-9 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo - 0.05 * span, hi + 0.05 * span)
    }
}

fn draw_panel(
    out: &mut String,
    data: &CsvData,
    t: &[f64],
    series: &[Series<'_>],
    caption: &str,
    top: f64,
) {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = PANEL_HEIGHT;

    let present: Vec<(&Series, &[f64])> = series
        .iter()
        .filter_map(|s| data.column(s.column).map(|c| (s, c)))
        .collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, col) in &present {
        for &v in *col {
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    let (lo, hi) = nice_range(lo, hi);
    let (t0, t1) = (t.first().copied().unwrap_or(0.0), t.last().copied().unwrap_or(1.0));
    let t_span = (t1 - t0).max(1e-9);

    let x_of = |tv: f64| MARGIN_LEFT + (tv - t0) / t_span * plot_w;
    let y_of = |v: f64| top + plot_h - (v - lo) / (hi - lo) * plot_h;

    // frame and caption
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN_LEFT}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#888" stroke-width="1"/>"##
    );
    let _ = writeln!(
        out,
        r##"<text x="{MARGIN_LEFT}" y="{}" font-family="monospace" font-size="14" fill="#222">{caption}</text>"##,
        top - 8.0
    );

    // grid and ticks
    for i in 0..=4 {
        let v = lo + (hi - lo) * i as f64 / 4.0;
        let y = y_of(v);
        let _ = writeln!(
            out,
            r##"<line x1="{MARGIN_LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd" stroke-width="0.5"/>"##,
            MARGIN_LEFT + plot_w
        );
        let _ = writeln!(
            out,
            r##"<text x="{:.1}" y="{:.1}" font-family="monospace" font-size="11" fill="#444" text-anchor="end">{v:.2}</text>"##,
            MARGIN_LEFT - 6.0,
            y + 4.0
        );
    }
    for i in 0..=5 {
        let tv = t0 + t_span * i as f64 / 5.0;
        let x = x_of(tv);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.1}" y1="{top}" x2="{x:.1}" y2="{:.1}" stroke="#ddd" stroke-width="0.5"/>"##,
            top + plot_h
        );
        let _ = writeln!(
            out,
            r##"<text x="{x:.1}" y="{:.1}" font-family="monospace" font-size="11" fill="#444" text-anchor="middle">{tv:.1}</text>"##,
            top + plot_h + 16.0
        );
    }

    // the traces, decimated to keep the file small
    let stride = (t.len() / 1500).max(1);
    for (s, col) in &present {
        let mut points = String::new();
        for (i, (&tv, &v)) in t.iter().zip(col.iter()).enumerate() {
            if i % stride != 0 && i != t.len() - 1 {
                continue;
            }
            if v.is_finite() {
                let _ = write!(points, "{:.2},{:.2} ", x_of(tv), y_of(v));
            }
        }
        let dash = if s.dashed { r##" stroke-dasharray="6 4""## } else { "" };
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.4"{dash}/>"##,
            points.trim_end(),
            s.color
        );
    }

    // legend
    let mut lx = MARGIN_LEFT + plot_w - 110.0 * present.len() as f64;
    for (s, _) in &present {
        let dash = if s.dashed { r##" stroke-dasharray="6 4""## } else { "" };
        let _ = writeln!(
            out,
            r##"<line x1="{lx:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{}" stroke-width="2"{dash}/>"##,
            top + 12.0,
            lx + 22.0,
            top + 12.0,
            s.color
        );
        let _ = writeln!(
            out,
            r##"<text x="{:.1}" y="{:.1}" font-family="monospace" font-size="11" fill="#222">{}</text>"##,
            lx + 27.0,
            top + 16.0,
            s.label
        );
        lx += 110.0;
    }
}

/// Renders the logged channels as a standalone SVG document with the
/// pendulum angles on top and the gimbal angles below, references dashed.
pub fn plot(data: &CsvData, title: &str) -> Result<String, String> {
    let t = data.column("t").ok_or("CSV has no `t` column")?;
    if t.len() < 2 {
        return Err("need at least two rows to plot".to_string());
    }
    let height = MARGIN_TOP + 2.0 * PANEL_HEIGHT + PANEL_GAP + MARGIN_BOTTOM;
    let mut out = String::with_capacity(64 * 1024);
    let _ = writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"##
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="white"/>"##);
    let _ = writeln!(
        out,
        r##"<text x="{:.1}" y="20" font-family="monospace" font-size="15" fill="#000" text-anchor="middle">{title}</text>"##,
        WIDTH / 2.0
    );
    draw_panel(
        &mut out,
        data,
        t,
        &PENDULUM_PANEL,
        "pendulum angles (rad)",
        MARGIN_TOP + 10.0,
    );
    draw_panel(
        &mut out,
        data,
        t,
        &GIMBAL_PANEL,
        "gimbal angles (rad)",
        MARGIN_TOP + PANEL_HEIGHT + PANEL_GAP + 10.0,
    );
    let _ = writeln!(out, "</svg>");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::report::parse_csv;

    #[test]
    fn plot_emits_polylines_for_present_channels() {
        let csv = "t,theta1,ref_theta1,alpha\n0,0.1,0,0\n1,0.2,0,0.5\n2,0.15,0,0.4\n";
        let data = parse_csv(csv).unwrap();
        let svg = plot(&data, "demo").unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        // theta1, ref_theta1, alpha present; theta2/beta columns absent
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.contains("demo"));
    }

    #[test]
    fn plot_needs_time_and_rows() {
        let no_t = parse_csv("t,x\n").map(|d| plot(&d, "x"));
        assert!(matches!(no_t, Ok(Err(_))));
        let data = parse_csv("t,theta1\n0,0\n").unwrap();
        assert!(plot(&data, "x").is_err());
    }

    #[test]
    fn long_logs_are_decimated() {
        let mut csv = String::from("t,theta1\n");
        for i in 0..30_000 {
            csv.push_str(&format!("{},{}\n", i as f64 * 1e-3, (i as f64 * 1e-3).sin()));
        }
        let data = parse_csv(&csv).unwrap();
        let svg = plot(&data, "big").unwrap();
        // one polyline, far fewer points than rows
        let points = svg.matches(",").count();
        assert!(points < 10_000, "svg too dense: {points} commas");
    }
}
