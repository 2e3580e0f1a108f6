//! Run artifacts: the CSV log format (fixed, documented column order), the
//! human-readable metrics summary, and the suite comparison tables.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::harness::metrics::Metrics;
use crate::harness::scenario::Scenario;
use crate::sim::TrajectoryLog;
use crate::Method;

/// The CSV column order. This is the external file contract: parsers may
/// rely on it, and it never changes without a version bump.
pub const CSV_COLUMNS: [&str; 27] = [
    "t",
    "ref_theta1",
    "ref_theta2",
    "ref_alpha",
    "ref_beta",
    "theta1",
    "theta2",
    "alpha",
    "beta",
    "meas_theta1",
    "meas_theta2",
    "meas_alpha",
    "meas_beta",
    "t_y",
    "t_z",
    "f",
    "alpha_d",
    "beta_d",
    "tau_alpha",
    "tau_beta",
    "rotor1",
    "rotor2",
    "rotor3",
    "rotor4",
    "saturated",
    "singular",
    "mode_weight",
];

/// Azimuth wrapped to [0, 2π) for emission. Internal records keep the
/// unwrapped integration value; the file boundary normalizes it.
fn wrap_azimuth(theta2: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let w = theta2.rem_euclid(two_pi);
    if w == two_pi {
        0.0
    } else {
        w
    }
}

/// Renders the log as CSV text. Floats use the shortest representation
/// that round-trips exactly.
pub fn csv_string(log: &TrajectoryLog) -> String {
    let mut out = String::with_capacity(64 * (log.records.len() + 1));
    out.push_str(&CSV_COLUMNS.join(","));
    out.push('\n');
    for r in &log.records {
        let fields: [f64; 24] = [
            r.t,
            r.ref_theta1,
            wrap_azimuth(r.ref_theta2),
            r.ref_alpha,
            r.ref_beta,
            r.theta1,
            wrap_azimuth(r.theta2),
            r.alpha,
            r.beta,
            r.meas_theta1,
            wrap_azimuth(r.meas_theta2),
            r.meas_alpha,
            r.meas_beta,
            r.t_y,
            r.t_z,
            r.f_cmd,
            r.alpha_d,
            r.beta_d,
            r.tau_alpha,
            r.tau_beta,
            r.rotors[0],
            r.rotors[1],
            r.rotors[2],
            r.rotors[3],
        ];
        for v in fields {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(
            out,
            "{},{},{}",
            u8::from(r.saturated),
            u8::from(r.singular),
            r.mode_weight
        );
    }
    out
}

pub fn write_csv(path: &Path, log: &TrajectoryLog) -> std::io::Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(csv_string(log).as_bytes())
}

/// A parsed CSV log: the header and one numeric column per header entry
/// (flags come back as 0/1).
#[derive(Debug, Clone)]
pub struct CsvData {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl CsvData {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.header
            .iter()
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map(|c| c.len()).unwrap_or(0)
    }
}

pub fn parse_csv(text: &str) -> Result<CsvData, String> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or("empty CSV")?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    if header.is_empty() || header[0] != "t" {
        return Err("CSV header must start with a `t` column".to_string());
    }
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut n = 0;
        for (i, cell) in line.split(',').enumerate() {
            if i >= header.len() {
                return Err(format!("row {} has more cells than the header", ln + 2));
            }
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|e| format!("row {}, column {}: {e}", ln + 2, header[i]))?;
            columns[i].push(v);
            n = i + 1;
        }
        if n != header.len() {
            return Err(format!(
                "row {} has {n} cells, header has {}",
                ln + 2,
                header.len()
            ));
        }
    }
    Ok(CsvData { header, columns })
}

pub fn read_csv(path: &Path) -> Result<CsvData, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_csv(&text)
}

fn fmt_seconds(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.3}")
    } else {
        "never".to_string()
    }
}

/// The human-readable per-run summary.
pub fn render_metrics(scenario: &Scenario, metrics: &Metrics) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario  {}", scenario.name);
    let _ = writeln!(out, "method    {}", scenario.method.name());
    let _ = writeln!(
        out,
        "noise     {}   seed {}",
        if scenario.noise { "on" } else { "off" },
        scenario.seed
    );
    match metrics.diverged_at {
        Some(t) => {
            let _ = writeln!(out, "verdict   {} at t = {t:.3} s", metrics.verdict);
        }
        None => {
            let _ = writeln!(out, "verdict   {}", metrics.verdict);
        }
    }
    for c in &metrics.channels {
        let _ = writeln!(
            out,
            "{:<8} rms {:.5} rad   peak {:.5} rad   steady-state {:.5} rad",
            c.channel, c.rms, c.peak_error, c.steady_state_error
        );
        if let Some(s) = c.step {
            let _ = writeln!(
                out,
                "{:<8} step: rise {} s   overshoot {:.2} %   settling {} s",
                c.channel,
                fmt_seconds(s.rise_time),
                s.overshoot_pct,
                fmt_seconds(s.settling_time)
            );
        }
    }
    for r in &metrics.recoveries {
        let recovery = match r.recovery_time {
            Some(t) => format!("{t:.3} s"),
            None => "not within window".to_string(),
        };
        let _ = writeln!(
            out,
            "{:<8} disturbance at {:.1} s: peak deviation {:.5} rad   recovery {}",
            r.channel, r.t_event, r.peak_deviation, recovery
        );
    }
    out
}

/// One suite entry: a scenario, its metrics, and the log row count.
#[derive(Debug, Clone)]
pub struct SuiteRow {
    pub scenario: Scenario,
    pub metrics: Metrics,
    pub rows: usize,
}

fn method_order(m: Method) -> usize {
    match m {
        Method::Spl => 0,
        Method::Sfl => 1,
        Method::Pfl => 2,
    }
}

/// The comparison tables over a full suite run: gimbal step figures,
/// regulation / tracking RMS, and disturbance recovery.
pub fn render_suite_tables(rows: &[SuiteRow]) -> String {
    let mut out = String::new();

    let mut gimbal: Vec<&SuiteRow> = rows
        .iter()
        .filter(|r| r.scenario.gimbal_only)
        .collect();
    gimbal.sort_by(|a, b| {
        a.scenario
            .name
            .cmp(&b.scenario.name)
            .then(method_order(a.scenario.method).cmp(&method_order(b.scenario.method)))
    });
    if !gimbal.is_empty() {
        let _ = writeln!(out, "== gimbal step response (outer axis) ==");
        let _ = writeln!(
            out,
            "{:<22} {:>6} {:>10} {:>12} {:>12}",
            "scenario", "method", "rise (s)", "overshoot %", "settling (s)"
        );
        for r in gimbal {
            let step = r
                .metrics
                .channel("alpha")
                .and_then(|c| c.step);
            match step {
                Some(s) => {
                    let _ = writeln!(
                        out,
                        "{:<22} {:>6} {:>10} {:>12.2} {:>12}",
                        r.scenario.name,
                        r.scenario.method.name(),
                        fmt_seconds(s.rise_time),
                        s.overshoot_pct,
                        fmt_seconds(s.settling_time)
                    );
                }
                None => {
                    let _ = writeln!(
                        out,
                        "{:<22} {:>6} {:>10} {:>12} {:>12}",
                        r.scenario.name,
                        r.scenario.method.name(),
                        "-",
                        "-",
                        "-"
                    );
                }
            }
        }
        let _ = writeln!(out);
    }

    let tracking: Vec<&SuiteRow> = rows
        .iter()
        .filter(|r| !r.scenario.gimbal_only && r.scenario.disturbances.is_empty())
        .collect();
    if !tracking.is_empty() {
        let _ = writeln!(out, "== pendulum regulation and tracking ==");
        let _ = writeln!(
            out,
            "{:<22} {:>6} {:>14} {:>14} {:>18}",
            "scenario", "method", "theta1 rms", "theta2 rms", "verdict"
        );
        for r in tracking {
            let th1 = r.metrics.channel("theta1").map(|c| c.rms).unwrap_or(f64::NAN);
            let th2 = r.metrics.channel("theta2").map(|c| c.rms).unwrap_or(f64::NAN);
            let verdict = match r.metrics.diverged_at {
                Some(t) => format!("diverged @ {t:.2} s"),
                None => "stable".to_string(),
            };
            let _ = writeln!(
                out,
                "{:<22} {:>6} {:>14.5} {:>14.5} {:>18}",
                r.scenario.name,
                r.scenario.method.name(),
                th1,
                th2,
                verdict
            );
        }
        let _ = writeln!(out);
    }

    let disturbed: Vec<&SuiteRow> = rows
        .iter()
        .filter(|r| !r.scenario.disturbances.is_empty())
        .collect();
    if !disturbed.is_empty() {
        let _ = writeln!(out, "== disturbance recovery ==");
        let _ = writeln!(
            out,
            "{:<22} {:>8} {:>10} {:>12} {:>14}",
            "scenario", "channel", "onset (s)", "peak (rad)", "recovery (s)"
        );
        for r in disturbed {
            for rec in &r.metrics.recoveries {
                let recovery = match rec.recovery_time {
                    Some(t) => format!("{t:.3}"),
                    None => "never".to_string(),
                };
                let _ = writeln!(
                    out,
                    "{:<22} {:>8} {:>10.1} {:>12.5} {:>14}",
                    r.scenario.name, rec.channel, rec.t_event, rec.peak_deviation, recovery
                );
            }
        }
        let _ = writeln!(out);
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::metrics::compute_metrics;
    use crate::harness::scenario::find_scenario;
    use crate::sim::{run, RunSetup};

    #[test]
    fn csv_has_header_plus_one_row_per_logged_tick() {
        let mut setup = RunSetup::gimbal_only(crate::Method::Sfl, 0.5);
        setup.schedule.log_every = 10;
        let log = run(&setup, &find_scenario("gimbal-step-45-sfl", None).unwrap()).unwrap();
        let text = csv_string(&log);
        let lines: Vec<&str> = text.trim_end().lines().collect();
        assert_eq!(lines.len(), 52); // header + duration/log-period + 1
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
    }

    #[test]
    fn csv_round_trips_exact_values() {
        let mut setup = RunSetup::gimbal_only(crate::Method::Pfl, 0.2);
        setup.schedule.log_every = 50;
        let scenario = find_scenario("gimbal-step-45-pfl", None).unwrap();
        let log = run(&setup, &scenario).unwrap();
        let data = parse_csv(&csv_string(&log)).unwrap();
        assert_eq!(data.header, CSV_COLUMNS.to_vec());
        assert_eq!(data.rows(), log.records.len());
        let alpha = data.column("alpha").unwrap();
        for (parsed, rec) in alpha.iter().zip(log.records.iter()) {
            assert_eq!(parsed.to_bits(), rec.alpha.to_bits());
        }
        let tau = data.column("tau_alpha").unwrap();
        for (parsed, rec) in tau.iter().zip(log.records.iter()) {
            assert_eq!(parsed.to_bits(), rec.tau_alpha.to_bits());
        }
    }

    #[test]
    fn azimuth_is_wrapped_at_the_file_boundary() {
        assert!((wrap_azimuth(-0.1) - (2.0 * std::f64::consts::PI - 0.1)).abs() < 1e-12);
        assert_eq!(wrap_azimuth(0.0), 0.0);
        assert!((wrap_azimuth(7.0) - (7.0 - 2.0 * std::f64::consts::PI)).abs() < 1e-12);
    }

    #[test]
    fn parse_rejects_malformed_csv() {
        assert!(parse_csv("").is_err());
        assert!(parse_csv("a,b\n1,2\n").is_err()); // no t column
        assert!(parse_csv("t,x\n1\n").is_err()); // short row
        assert!(parse_csv("t,x\n1,2,3\n").is_err()); // long row
        assert!(parse_csv("t,x\n1,abc\n").is_err()); // non-numeric
    }

    #[test]
    fn metrics_summary_names_the_verdict() {
        let scenario = find_scenario("regulation-eq-pfl", None).unwrap();
        let mut setup = RunSetup::full(crate::Method::Pfl, 1.0, 3.0);
        setup.sensors.noise = false;
        setup.schedule.log_every = 10;
        let log = run(&setup, &scenario).unwrap();
        let metrics = compute_metrics(&log, &scenario).unwrap();
        let text = render_metrics(&scenario, &metrics);
        assert!(text.contains("verdict   stable"));
        assert!(text.contains("theta1"));
        let tables = render_suite_tables(&[SuiteRow {
            scenario,
            metrics,
            rows: log.records.len(),
        }]);
        assert!(tables.contains("pendulum regulation and tracking"));
    }
}
