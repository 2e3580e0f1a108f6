//! The metrics engine: step-response figures (rise, overshoot, settling),
//! tracking RMS with a circular azimuth error, disturbance-recovery times,
//! and the stability verdict.

use thiserror::Error;

use crate::harness::scenario::{Profile, Scenario};
use crate::highlevel::wrap_to_pi;
use crate::plant::DisturbanceChannel;
use crate::sim::{Record, TrajectoryLog};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("metrics need a non-empty log")]
    EmptyLog,
    #[error("metric undefined: {0}")]
    MetricUndefined(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Diverged,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Stable => write!(f, "stable"),
            Verdict::Diverged => write!(f, "diverged"),
        }
    }
}

/// Step-response figures. A response that never reaches 90% of the step
/// reports an infinite rise time; one still outside the band at the end of
/// the step window reports an infinite settling time.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct StepMetrics {
    /// 10%-to-90% rise time, s (crossings linearly interpolated).
    pub rise_time: f64,
    /// Peak excursion past the commanded value, % of the step magnitude.
    pub overshoot_pct: f64,
    /// Time after the step of the last exit from the ±2% band around the
    /// commanded value, s.
    pub settling_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ChannelMetrics {
    pub channel: &'static str,
    /// RMS tracking error over the assessment window, rad.
    pub rms: f64,
    /// Largest absolute tracking error in the window, rad.
    pub peak_error: f64,
    /// Mean absolute error over the final two seconds, rad.
    pub steady_state_error: f64,
    /// Step-response figures, when this channel's reference has a step.
    pub step: Option<StepMetrics>,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RecoveryMetrics {
    pub channel: &'static str,
    /// Disturbance onset, s.
    pub t_event: f64,
    /// Largest deviation from the reference after the onset, rad.
    pub peak_deviation: f64,
    /// Time from onset until the error last leaves the ±2%-of-peak band,
    /// s; `None` when it is still outside the band at the window end.
    pub recovery_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Metrics {
    pub verdict: Verdict,
    pub diverged_at: Option<f64>,
    pub channels: Vec<ChannelMetrics>,
    pub recoveries: Vec<RecoveryMetrics>,
}

/// The settling / recovery band, as a fraction of the step magnitude or
/// peak deviation respectively.
pub const SETTLING_BAND: f64 = 0.02;

/// Step-response figures from `(t, y)` samples of a response to a step
/// commanded at `t0` from `from` to `to`. Samples before `t0` are ignored.
pub fn step_metrics(
    samples: &[(f64, f64)],
    t0: f64,
    from: f64,
    to: f64,
) -> Result<StepMetrics, MetricsError> {
    let step = to - from;
    if step.abs() < 1e-12 {
        return Err(MetricsError::MetricUndefined(
            "zero-magnitude step".to_string(),
        ));
    }
    let window: Vec<(f64, f64)> = samples.iter().copied().filter(|&(t, _)| t >= t0).collect();
    if window.len() < 2 {
        return Err(MetricsError::MetricUndefined(
            "not enough samples after the step".to_string(),
        ));
    }

    // Normalized progress towards the target.
    let progress = |y: f64| (y - from) / step;
    let crossing = |level: f64| -> Option<f64> {
        let mut prev = window[0];
        if progress(prev.1) >= level {
            return Some(prev.0);
        }
        for &cur in &window[1..] {
            let (p0, p1) = (progress(prev.1), progress(cur.1));
            if p0 < level && p1 >= level {
                let frac = (level - p0) / (p1 - p0);
                return Some(prev.0 + frac * (cur.0 - prev.0));
            }
            prev = cur;
        }
        None
    };
    let rise_time = match (crossing(0.1), crossing(0.9)) {
        (Some(a), Some(b)) => (b - a).max(0.0),
        _ => f64::INFINITY,
    };

    let peak = window
        .iter()
        .map(|&(_, y)| progress(y))
        .fold(f64::NEG_INFINITY, f64::max);
    let overshoot_pct = ((peak - 1.0) * 100.0).max(0.0);

    let band = SETTLING_BAND * step.abs();
    let mut settling_time = 0.0;
    for &(t, y) in &window {
        if (y - to).abs() > band {
            settling_time = t - t0;
        }
    }
    if let Some(&(_, y_last)) = window.last() {
        if (y_last - to).abs() > band {
            settling_time = f64::INFINITY;
        }
    }

    Ok(StepMetrics {
        rise_time,
        overshoot_pct,
        settling_time,
    })
}

fn channel_value(record: &Record, channel: &str) -> (f64, f64) {
    match channel {
        "theta1" => (record.theta1, record.ref_theta1),
        "theta2" => (record.theta2, record.ref_theta2),
        "alpha" => (record.alpha, record.ref_alpha),
        "beta" => (record.beta, record.ref_beta),
        other => unreachable!("unknown metric channel {other}"),
    }
}

fn channel_error(record: &Record, channel: &str) -> f64 {
    let (y, r) = channel_value(record, channel);
    if channel == "theta2" {
        // Azimuth is an angle on the circle; compare along the short way.
        wrap_to_pi(y - r)
    } else {
        y - r
    }
}

fn channel_profile<'a>(scenario: &'a Scenario, channel: &str) -> &'a Profile {
    match channel {
        "theta1" => &scenario.theta1_ref,
        "theta2" => &scenario.theta2_ref,
        "alpha" => &scenario.alpha_ref,
        "beta" => &scenario.beta_ref,
        other => unreachable!("unknown metric channel {other}"),
    }
}

fn channel_metrics(
    log: &TrajectoryLog,
    scenario: &Scenario,
    channel: &'static str,
    window_start: f64,
) -> ChannelMetrics {
    let errors: Vec<(f64, f64)> = log
        .records
        .iter()
        .filter(|r| r.t >= window_start)
        .map(|r| (r.t, channel_error(r, channel)))
        .collect();
    let (rms, peak_error) = if errors.is_empty() {
        (0.0, 0.0)
    } else {
        let sq: f64 = errors.iter().map(|&(_, e)| e * e).sum();
        let peak = errors.iter().map(|&(_, e)| e.abs()).fold(0.0, f64::max);
        ((sq / errors.len() as f64).sqrt(), peak)
    };

    let t_end = log.records.last().map(|r| r.t).unwrap_or(0.0);
    let tail_start = (t_end - 2.0).max(window_start);
    let tail: Vec<f64> = errors
        .iter()
        .filter(|&&(t, _)| t >= tail_start)
        .map(|&(_, e)| e.abs())
        .collect();
    let steady_state_error = if tail.is_empty() {
        0.0
    } else {
        tail.iter().sum::<f64>() / tail.len() as f64
    };

    let profile = channel_profile(scenario, channel);
    let step = profile.steps().first().map(|&(t0, from, to)| {
        let window_end = profile.next_knot_after(t0).unwrap_or(scenario.duration);
        let samples: Vec<(f64, f64)> = log
            .records
            .iter()
            .filter(|r| r.t >= t0 && r.t <= window_end)
            .map(|r| (r.t, channel_value(r, channel).0))
            .collect();
        step_metrics(&samples, t0, from, to)
    });
    let step = match step {
        Some(Ok(m)) => Some(m),
        _ => None,
    };

    ChannelMetrics {
        channel,
        rms,
        peak_error,
        steady_state_error,
        step,
    }
}

fn recovery_metrics(log: &TrajectoryLog, scenario: &Scenario) -> Vec<RecoveryMetrics> {
    let mut events: Vec<(&'static str, f64)> = scenario
        .disturbances
        .iter()
        .map(|d| {
            let channel = match d.channel {
                DisturbanceChannel::Theta1 => "theta1",
                DisturbanceChannel::Theta2 => "theta2",
            };
            (channel, d.start)
        })
        .collect();
    events.sort_by(|a, b| a.1.total_cmp(&b.1));

    let mut out = Vec::new();
    for (i, &(channel, start)) in events.iter().enumerate() {
        let window_end = events
            .get(i + 1)
            .map(|&(_, t)| t)
            .unwrap_or(scenario.duration);
        let window: Vec<(f64, f64)> = log
            .records
            .iter()
            .filter(|r| r.t >= start && r.t <= window_end)
            .map(|r| (r.t, channel_error(r, channel)))
            .collect();
        if window.is_empty() {
            continue;
        }
        let peak_deviation = window.iter().map(|&(_, e)| e.abs()).fold(0.0, f64::max);
        let band = SETTLING_BAND * peak_deviation;
        let mut last_exit = start;
        for &(t, e) in &window {
            if e.abs() > band {
                last_exit = t;
            }
        }
        let recovered = window
            .last()
            .map(|&(_, e)| e.abs() <= band)
            .unwrap_or(false);
        out.push(RecoveryMetrics {
            channel,
            t_event: start,
            peak_deviation,
            recovery_time: recovered.then_some(last_exit - start),
        });
    }
    out
}

/// Assesses one run: per-channel tracking metrics over the active window
/// (post-release for full-loop runs), step-response figures where the
/// reference steps, recovery times for each disturbance, and the verdict.
pub fn compute_metrics(log: &TrajectoryLog, scenario: &Scenario) -> Result<Metrics, MetricsError> {
    if log.records.is_empty() {
        return Err(MetricsError::EmptyLog);
    }
    let window_start = if scenario.gimbal_only {
        0.0
    } else {
        scenario.release_time
    };
    let channels = scenario
        .metric_channels()
        .into_iter()
        .map(|c| channel_metrics(log, scenario, c, window_start))
        .collect();
    let recoveries = if scenario.gimbal_only {
        Vec::new()
    } else {
        recovery_metrics(log, scenario)
    };
    Ok(Metrics {
        verdict: if log.diverged.is_some() {
            Verdict::Diverged
        } else {
            Verdict::Stable
        },
        diverged_at: log.diverged,
        channels,
        recoveries,
    })
}

impl Metrics {
    pub fn channel(&self, name: &str) -> Option<&ChannelMetrics> {
        self.channels.iter().find(|c| c.channel == name)
    }

    pub fn recovery(&self, channel: &str) -> Option<&RecoveryMetrics> {
        self.recoveries.iter().find(|r| r.channel == channel)
    }
}
