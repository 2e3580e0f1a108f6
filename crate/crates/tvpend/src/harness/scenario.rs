//! Piecewise reference profiles and the builtin scenario catalog.

use serde::{Deserialize, Serialize};

use crate::highlevel::PendulumReference;
use crate::lowlevel::GimbalReference;
use crate::plant::{Disturbance, DisturbanceChannel};
use crate::sim::ReferenceSource;
use crate::Method;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};

/// How a profile moves from the previous target to a knot's value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transition {
    /// Instantaneous jump at the knot time (duration must be 0).
    Step,
    /// Constant-rate interpolation over the knot duration.
    Ramp,
    /// Half-cosine ease-in/ease-out over the knot duration: continuous in
    /// value and rate at both ends.
    HalfCosine,
}

/// One breakpoint of a piecewise reference: starting at `t`, move to
/// `value` using `transition` over `duration` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Knot {
    pub t: f64,
    pub value: f64,
    pub transition: Transition,
    #[serde(default)]
    pub duration: f64,
}

/// A piecewise reference profile: holds `initial` until the first knot,
/// then each knot transitions to its value and holds until the next.
/// The gaps between knots are implicit holds, so the profile covers all of
/// `[0, duration]` with no overlaps by construction once validated.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Profile {
    pub initial: f64,
    pub knots: Vec<Knot>,
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Self {
            initial: value,
            knots: Vec::new(),
        }
    }

    pub fn validate(&self, duration: f64) -> Result<(), String> {
        let mut prev_end = 0.0_f64;
        for (i, k) in self.knots.iter().enumerate() {
            if !(k.t.is_finite() && k.value.is_finite() && k.duration.is_finite()) {
                return Err(format!("knot {i} has a non-finite field"));
            }
            if k.duration < 0.0 {
                return Err(format!("knot {i} has negative duration {}", k.duration));
            }
            match k.transition {
                Transition::Step => {
                    if k.duration != 0.0 {
                        return Err(format!(
                            "knot {i} is a step but has duration {} (must be 0)",
                            k.duration
                        ));
                    }
                }
                Transition::Ramp | Transition::HalfCosine => {
                    if k.duration <= 0.0 {
                        return Err(format!(
                            "knot {i} needs a positive duration for its transition"
                        ));
                    }
                }
            }
            if k.t < prev_end {
                return Err(format!(
                    "knot {i} at t = {} overlaps the previous transition ending at {prev_end}",
                    k.t
                ));
            }
            prev_end = k.t + k.duration;
            if prev_end > duration + 1e-9 {
                return Err(format!(
                    "knot {i} transition ends at {prev_end} s, past the scenario duration {duration} s"
                ));
            }
        }
        Ok(())
    }

    /// Reference value at time `t`.
    pub fn value(&self, t: f64) -> f64 {
        let mut from = self.initial;
        for k in &self.knots {
            if t < k.t {
                return from;
            }
            if t < k.t + k.duration {
                let s = (t - k.t) / k.duration;
                return match k.transition {
                    Transition::Step => k.value,
                    Transition::Ramp => from + (k.value - from) * s,
                    Transition::HalfCosine => {
                        from + (k.value - from) * 0.5 * (1.0 - (std::f64::consts::PI * s).cos())
                    }
                };
            }
            from = k.value;
        }
        from
    }

    /// Reference rate (time derivative) at time `t`.
    pub fn rate(&self, t: f64) -> f64 {
        let mut from = self.initial;
        for k in &self.knots {
            if t < k.t {
                return 0.0;
            }
            if t < k.t + k.duration {
                let s = (t - k.t) / k.duration;
                return match k.transition {
                    Transition::Step => 0.0,
                    Transition::Ramp => (k.value - from) / k.duration,
                    Transition::HalfCosine => {
                        (k.value - from) * 0.5 * std::f64::consts::PI / k.duration
                            * (std::f64::consts::PI * s).sin()
                    }
                };
            }
            from = k.value;
        }
        0.0
    }

    /// The step knots of this profile, with the value they stepped from:
    /// `(time, from, to)`.
    pub fn steps(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        let mut from = self.initial;
        for k in &self.knots {
            if k.transition == Transition::Step {
                out.push((k.t, from, k.value));
            }
            from = k.value;
        }
        out
    }

    /// End of the knot window that starts at or after `t`, or `None`.
    pub fn next_knot_after(&self, t: f64) -> Option<f64> {
        self.knots.iter().map(|k| k.t).find(|&kt| kt > t)
    }
}

fn default_true() -> bool {
    true
}

fn default_seed() -> u64 {
    1
}

/// A complete experiment description: what the references do, which method
/// runs, what gets disturbed, and what counts as the expected outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub summary: String,
    pub duration: f64,
    pub method: Method,
    /// When true the pendulum stays clamped and the scenario drives the
    /// gimbal references directly.
    #[serde(default)]
    pub gimbal_only: bool,
    /// Time at which the pendulum is released (full-loop runs).
    #[serde(default)]
    pub release_time: f64,
    #[serde(default)]
    pub theta1_ref: Profile,
    #[serde(default)]
    pub theta2_ref: Profile,
    #[serde(default)]
    pub alpha_ref: Profile,
    #[serde(default)]
    pub beta_ref: Profile,
    /// Pendulum elevation the run starts (and is held) at, rad.
    #[serde(default)]
    pub initial_theta1: f64,
    /// Pendulum azimuth the run starts at, rad.
    #[serde(default)]
    pub initial_theta2: f64,
    #[serde(default)]
    pub disturbances: Vec<Disturbance>,
    #[serde(default = "default_true")]
    pub noise: bool,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// This run is expected to lose the pendulum; a diverged verdict is a
    /// successful reproduction, not an error.
    #[serde(default)]
    pub expect_divergence: bool,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(format!("duration must be non-negative, got {}", self.duration));
        }
        if !(0.0..=self.duration).contains(&self.release_time) {
            return Err(format!(
                "release time {} outside [0, {}]",
                self.release_time, self.duration
            ));
        }
        for (name, p) in [
            ("theta1_ref", &self.theta1_ref),
            ("theta2_ref", &self.theta2_ref),
            ("alpha_ref", &self.alpha_ref),
            ("beta_ref", &self.beta_ref),
        ] {
            p.validate(self.duration)
                .map_err(|e| format!("{name}: {e}"))?;
        }
        for (i, d) in self.disturbances.iter().enumerate() {
            if !(d.start.is_finite() && d.start >= 0.0 && d.magnitude.is_finite()) {
                return Err(format!("disturbance {i} has invalid start/magnitude"));
            }
        }
        Ok(())
    }

    /// Channels the metrics engine should assess for this scenario.
    pub fn metric_channels(&self) -> [&'static str; 2] {
        if self.gimbal_only {
            ["alpha", "beta"]
        } else {
            ["theta1", "theta2"]
        }
    }
}

impl ReferenceSource for Scenario {
    fn pendulum(&self, t: f64) -> PendulumReference {
        PendulumReference {
            theta1: self.theta1_ref.value(t),
            theta2: self.theta2_ref.value(t),
            theta1_dot: self.theta1_ref.rate(t),
            theta2_dot: self.theta2_ref.rate(t),
        }
    }

    fn gimbal(&self, t: f64) -> GimbalReference {
        GimbalReference {
            alpha: self.alpha_ref.value(t),
            beta: self.beta_ref.value(t),
            alpha_rate_ff: self.alpha_ref.rate(t),
            beta_rate_ff: self.beta_ref.rate(t),
        }
    }
}

fn knot(t: f64, value: f64, transition: Transition, duration: f64) -> Knot {
    Knot {
        t,
        value,
        transition,
        duration,
    }
}

fn gimbal_step(step_deg: f64, method: Method) -> Scenario {
    Scenario {
        name: format!("gimbal-step-{}-{}", step_deg as i64, method.name()),
        summary: format!(
            "gimbal servo only: ramp the inner axis 0->45 deg over 1..4 s, then step the outer axis by {step_deg} deg at t = 6 s"
        ),
        duration: 10.0,
        method,
        gimbal_only: true,
        release_time: 0.0,
        theta1_ref: Profile::default(),
        theta2_ref: Profile::default(),
        alpha_ref: Profile {
            initial: 0.0,
            knots: vec![knot(6.0, step_deg.to_radians(), Transition::Step, 0.0)],
        },
        beta_ref: Profile {
            initial: 0.0,
            knots: vec![knot(1.0, FRAC_PI_4, Transition::Ramp, 3.0)],
        },
        initial_theta1: 0.0,
        initial_theta2: 0.0,
        disturbances: Vec::new(),
        noise: true,
        seed: 1,
        expect_divergence: false,
    }
}

fn regulation(at_equilibrium: bool, method: Method) -> Scenario {
    let target = if at_equilibrium { 0.0 } else { FRAC_PI_6 };
    let tag = if at_equilibrium { "eq" } else { "noneq" };
    Scenario {
        name: format!("regulation-{}-{}", tag, method.name()),
        summary: format!(
            "hold the pendulum at elevation {target:.4} rad; released at t = 5 s from the reference"
        ),
        duration: 20.0,
        method,
        gimbal_only: false,
        release_time: 5.0,
        theta1_ref: Profile::constant(target),
        theta2_ref: Profile::constant(0.0),
        alpha_ref: Profile::default(),
        beta_ref: Profile::default(),
        initial_theta1: target,
        initial_theta2: 0.0,
        disturbances: Vec::new(),
        noise: true,
        seed: 1,
        // A controller designed around the level equilibrium cannot hold
        // the raised setpoint; its loss of the pendulum is the expected
        // outcome of this run.
        expect_divergence: !at_equilibrium && method == Method::Spl,
    }
}

fn disturbance(impulse: bool) -> Scenario {
    let (tag, magnitude, duration) = if impulse {
        ("impulse", 0.1, Some(0.05))
    } else {
        ("step", 0.02, None)
    };
    Scenario {
        name: format!("disturbance-{tag}-spl"),
        summary: format!(
            "regulation at the level equilibrium under {magnitude} N·m {tag} torques: elevation channel hit at t = 5 s, azimuth at t = 15 s"
        ),
        duration: 30.0,
        method: Method::Spl,
        gimbal_only: false,
        release_time: 2.0,
        theta1_ref: Profile::constant(0.0),
        theta2_ref: Profile::constant(0.0),
        alpha_ref: Profile::default(),
        beta_ref: Profile::default(),
        initial_theta1: 0.0,
        initial_theta2: 0.0,
        disturbances: vec![
            Disturbance {
                channel: DisturbanceChannel::Theta1,
                start: 5.0,
                duration,
                magnitude,
            },
            Disturbance {
                channel: DisturbanceChannel::Theta2,
                start: 15.0,
                duration,
                magnitude,
            },
        ],
        noise: true,
        seed: 1,
        expect_divergence: false,
    }
}

fn combined(method: Method) -> Scenario {
    let blend = 15.0;
    Scenario {
        name: format!("combined-{}", method.name()),
        summary:
            "track elevation 0 -> pi/6 -> pi/4 -> 0 and azimuth 0 -> pi/2 -> pi/3 -> 0 simultaneously with half-cosine blends"
                .to_string(),
        duration: 90.0,
        method,
        gimbal_only: false,
        release_time: 5.0,
        theta1_ref: Profile {
            initial: 0.0,
            knots: vec![
                knot(10.0, FRAC_PI_6, Transition::HalfCosine, blend),
                knot(40.0, FRAC_PI_4, Transition::HalfCosine, blend),
                knot(70.0, 0.0, Transition::HalfCosine, blend),
            ],
        },
        theta2_ref: Profile {
            initial: 0.0,
            knots: vec![
                knot(10.0, FRAC_PI_2, Transition::HalfCosine, blend),
                knot(40.0, FRAC_PI_3, Transition::HalfCosine, blend),
                knot(70.0, 0.0, Transition::HalfCosine, blend),
            ],
        },
        alpha_ref: Profile::default(),
        beta_ref: Profile::default(),
        initial_theta1: 0.0,
        initial_theta2: 0.0,
        disturbances: Vec::new(),
        noise: true,
        seed: 1,
        expect_divergence: false,
    }
}

fn inverted(method: Method) -> Scenario {
    Scenario {
        name: format!("inverted-{}", method.name()),
        summary:
            "raise the pendulum from level to straight up (pi/2) in two half-cosine stages between 10 and 50 s, then hold inverted"
                .to_string(),
        duration: 60.0,
        method,
        gimbal_only: false,
        release_time: 5.0,
        theta1_ref: Profile {
            initial: 0.0,
            knots: vec![
                knot(10.0, FRAC_PI_4, Transition::HalfCosine, 15.0),
                knot(35.0, FRAC_PI_2, Transition::HalfCosine, 15.0),
            ],
        },
        theta2_ref: Profile::constant(0.0),
        alpha_ref: Profile::default(),
        beta_ref: Profile::default(),
        initial_theta1: 0.0,
        initial_theta2: 0.0,
        disturbances: Vec::new(),
        noise: true,
        seed: 1,
        // The locally linearized design loses the pendulum well before the
        // reference reaches vertical.
        expect_divergence: method == Method::Spl,
    }
}

/// The full catalog: three gimbal step magnitudes, regulation at and away
/// from the level equilibrium, impulse and step disturbance recovery,
/// combined two-axis tracking, and inversion — each under every applicable
/// method.
pub fn builtin_scenarios() -> Vec<Scenario> {
    let mut out = Vec::new();
    for mag in [15.0, 45.0, 70.0] {
        for m in Method::ALL {
            out.push(gimbal_step(mag, m));
        }
    }
    for m in Method::ALL {
        out.push(regulation(true, m));
    }
    for m in Method::ALL {
        out.push(regulation(false, m));
    }
    out.push(disturbance(true));
    out.push(disturbance(false));
    for m in Method::ALL {
        out.push(combined(m));
    }
    for m in Method::ALL {
        out.push(inverted(m));
    }
    out
}

/// Resolves a scenario by exact instance name (`regulation-eq-spl`) or by
/// base name plus a method (`regulation-eq` + method override). Without an
/// override, a base name resolves to its PFL instance when one exists.
pub fn find_scenario(name: &str, method: Option<Method>) -> Option<Scenario> {
    let all = builtin_scenarios();
    if let Some(hit) = all.iter().find(|s| s.name == name) {
        let mut s = hit.clone();
        if let Some(m) = method {
            // Same base, different method: prefer the catalog instance so
            // expectation flags stay right.
            let base = s.name.trim_end_matches(s.method.name()).to_string();
            let target = format!("{base}{}", m.name());
            if let Some(other) = all.iter().find(|c| c.name == target) {
                return Some(other.clone());
            }
            s.method = m;
            s.name = target;
        }
        return Some(s);
    }
    // Base-name lookup: try each method suffix.
    let order = match method {
        Some(m) => vec![m],
        None => vec![Method::Pfl, Method::Spl, Method::Sfl],
    };
    for m in order {
        let candidate = format!("{name}-{}", m.name());
        if let Some(hit) = all.iter().find(|s| s.name == candidate) {
            return Some(hit.clone());
        }
    }
    None
}
