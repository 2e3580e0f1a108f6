//! Fixed-step integration and the multirate scheduler: physics at 1 kHz,
//! gimbal servo at 500 Hz, pendulum controller at 100 Hz, encoder packets
//! at 120 Hz — all derived from one tick counter, zero-order hold at every
//! boundary, fully deterministic for a given seed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::{
    allocate_rotors, gimbal_torque_to_body, torque_to_thrust_vector, AllocationMode,
    SingularityPolicy, ThrustCommand,
};
use crate::frames::Vec3;
use crate::highlevel::{
    synthesize_gain, HighLevelCtl, LqiWeights, PendulumMeasurement, PendulumReference,
    TorqueCommand,
};
use crate::kinematics::{RotorCommand, RotorParams};
use crate::lowlevel::{
    cascade_step, equivalent_inertia_spl, torque_pfl, torque_sfl, AccelCommand, GimbalReference,
    GimbalTorque, ServoGains, ServoState,
};
use crate::plant::{Disturbance, Plant, PlantParams, PlantState, STATE_DIM};
use crate::sensors::{AttitudeMeasurement, FirstDifference, SensorParams, SensorSuite};
use crate::Method;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("state became non-finite at t = {t} s")]
    NonFiniteState { t: f64 },
}

/// Elevation band outside which a run is declared diverged, rad.
pub const DIVERGENCE_THETA1_MIN: f64 = -std::f64::consts::FRAC_PI_4;
pub const DIVERGENCE_THETA1_MAX: f64 = 5.0 * std::f64::consts::FRAC_PI_4;

/// One classical Runge–Kutta 4 update of an `N`-dimensional first-order
/// system. Errors if the state leaves the finite range.
pub fn rk4_step<const N: usize>(
    deriv: &mut impl FnMut(f64, &[f64; N]) -> [f64; N],
    t: f64,
    y: &[f64; N],
    dt: f64,
) -> Result<[f64; N], SimError> {
    let k1 = deriv(t, y);
    let mut y2 = [0.0; N];
    for i in 0..N {
        y2[i] = y[i] + 0.5 * dt * k1[i];
    }
    let k2 = deriv(t + 0.5 * dt, &y2);
    let mut y3 = [0.0; N];
    for i in 0..N {
        y3[i] = y[i] + 0.5 * dt * k2[i];
    }
    let k3 = deriv(t + 0.5 * dt, &y3);
    let mut y4 = [0.0; N];
    for i in 0..N {
        y4[i] = y[i] + dt * k3[i];
    }
    let k4 = deriv(t + dt, &y4);
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if !out[i].is_finite() {
            return Err(SimError::NonFiniteState { t: t + dt });
        }
    }
    Ok(out)
}

/// The loop rates, all expressed against the physics step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateSchedule {
    /// Physics integration step, s.
    pub physics_step: f64,
    /// Gimbal servo period, s (must be an integer multiple of the step).
    pub low_level_period: f64,
    /// Pendulum controller period, s (integer multiple of the step).
    pub high_level_period: f64,
    /// Encoder packet rate, Hz; scheduled by accumulated phase against the
    /// physics grid, so rates that do not divide it stay drift-free.
    pub encoder_rate_hz: f64,
    /// Log every this many physics ticks.
    pub log_every: usize,
}

impl Default for RateSchedule {
    fn default() -> Self {
        Self {
            physics_step: 1e-3,
            low_level_period: 2e-3,
            high_level_period: 1e-2,
            encoder_rate_hz: 120.0,
            log_every: 1,
        }
    }
}

fn ticks_of(period: f64, dt: f64, what: &str) -> Result<usize, SimError> {
    let ratio = period / dt;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
        return Err(SimError::Config(format!(
            "{what} period {period} s is not an integer multiple of the physics step {dt} s"
        )));
    }
    Ok(n as usize)
}

impl RateSchedule {
    pub fn validate(&self) -> Result<(), SimError> {
        for (name, v) in [
            ("physics step", self.physics_step),
            ("low-level period", self.low_level_period),
            ("high-level period", self.high_level_period),
            ("encoder rate", self.encoder_rate_hz),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::Config(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        ticks_of(self.low_level_period, self.physics_step, "low-level")?;
        ticks_of(self.high_level_period, self.physics_step, "high-level")?;
        if self.encoder_rate_hz * self.physics_step > 1.0 + 1e-12 {
            return Err(SimError::Config(format!(
                "encoder rate {} Hz exceeds the physics rate",
                self.encoder_rate_hz
            )));
        }
        if self.log_every == 0 {
            return Err(SimError::Config("log_every must be at least 1".into()));
        }
        Ok(())
    }

    pub fn low_level_ticks(&self) -> usize {
        ticks_of(self.low_level_period, self.physics_step, "low-level").expect("validated")
    }

    pub fn high_level_ticks(&self) -> usize {
        ticks_of(self.high_level_period, self.physics_step, "high-level").expect("validated")
    }
}

/// Whether the encoder packet clock fires on physics tick `k`: accumulated
/// phase `k * rate * dt` crossed an integer since the previous tick. Always
/// fires at `k = 0`.
pub fn encoder_fires(k: usize, rate_hz: f64, dt: f64) -> bool {
    if k == 0 {
        return true;
    }
    let phase = (k as f64 * rate_hz * dt).floor();
    let prev = ((k - 1) as f64 * rate_hz * dt).floor();
    phase > prev
}

/// Supplies the reference trajectories. Full-loop runs read the pendulum
/// channel; gimbal-only runs read the gimbal channel.
pub trait ReferenceSource {
    fn pendulum(&self, t: f64) -> PendulumReference;
    fn gimbal(&self, t: f64) -> GimbalReference;
}

/// What closes the loop in a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunMode {
    /// Pendulum clamped for the whole run; the scenario drives the gimbal
    /// directly and thrust is held at the hover value so differential
    /// rotor torque is available.
    GimbalOnly,
    /// Full cascade; the pendulum is clamped (warm start: controllers,
    /// sensors, and rotors all running) until `release_time`.
    Full { release_time: f64 },
}

/// Everything one run needs besides the reference trajectories.
#[derive(Debug, Clone)]
pub struct RunSetup {
    pub plant: PlantParams,
    pub rotor: RotorParams,
    /// Rotor thrust lag time constant, s (0 = ideal rotors).
    pub rotor_tau: f64,
    pub sensors: SensorParams,
    pub schedule: RateSchedule,
    pub method: Method,
    pub servo: ServoGains,
    pub policy: SingularityPolicy,
    pub weights: LqiWeights,
    /// Design elevation for the SPL pendulum gain, rad.
    pub spl_theta1_eq: f64,
    /// Design inner-gimbal angle for the SPL servo torque, rad.
    pub spl_beta_eq: f64,
    pub mode: RunMode,
    pub initial: PlantState,
    pub duration: f64,
    pub disturbances: Vec<Disturbance>,
}

impl RunSetup {
    /// A full-loop setup with all defaults, regulating at level.
    pub fn full(method: Method, release_time: f64, duration: f64) -> Self {
        Self {
            plant: PlantParams::default(),
            rotor: RotorParams::default(),
            rotor_tau: 0.02,
            sensors: SensorParams::default(),
            schedule: RateSchedule::default(),
            method,
            servo: ServoGains::default(),
            policy: SingularityPolicy::default(),
            weights: LqiWeights::default(),
            spl_theta1_eq: 0.0,
            spl_beta_eq: 0.0,
            mode: RunMode::Full { release_time },
            initial: PlantState::at_rest(0.0, 0.0, 0.0, 0.0, [0.0; 4]),
            duration,
            disturbances: Vec::new(),
        }
    }

    /// A gimbal-only setup with all defaults.
    pub fn gimbal_only(method: Method, duration: f64) -> Self {
        Self {
            mode: RunMode::GimbalOnly,
            ..Self::full(method, 0.0, duration)
        }
    }
}

/// One logged tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub t: f64,
    pub ref_theta1: f64,
    pub ref_theta2: f64,
    pub ref_alpha: f64,
    pub ref_beta: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub theta1_dot: f64,
    pub theta2_dot: f64,
    pub alpha_dot: f64,
    pub beta_dot: f64,
    pub meas_theta1: f64,
    pub meas_theta2: f64,
    pub meas_alpha: f64,
    pub meas_beta: f64,
    pub t_y: f64,
    pub t_z: f64,
    pub f_cmd: f64,
    pub alpha_d: f64,
    pub beta_d: f64,
    pub tau_alpha: f64,
    pub tau_beta: f64,
    pub rotors: [f64; 4],
    pub saturated: bool,
    pub singular: bool,
    /// Vertical-mode blend weight of the thrust allocation at this tick.
    pub mode_weight: f64,
}

/// The full time history of a run.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryLog {
    pub records: Vec<Record>,
    /// Time at which the run was declared diverged, if it was.
    pub diverged: Option<f64>,
}

impl TrajectoryLog {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn last_t(&self) -> Option<f64> {
        self.records.last().map(|r| r.t)
    }
}

fn mode_weight(mode: AllocationMode) -> f64 {
    match mode {
        AllocationMode::Normal => 0.0,
        AllocationMode::Blend { weight } => weight,
        AllocationMode::Singular => 1.0,
    }
}

/// Runs one scenario to completion (or divergence). Deterministic: the
/// only randomness is the seeded sensor noise.
pub fn run(setup: &RunSetup, refs: &dyn ReferenceSource) -> Result<TrajectoryLog, SimError> {
    setup.plant.validate().map_err(SimError::Config)?;
    setup.rotor.validate().map_err(SimError::Config)?;
    setup.sensors.validate().map_err(SimError::Config)?;
    setup.servo.validate().map_err(SimError::Config)?;
    setup.policy.validate().map_err(SimError::Config)?;
    setup.schedule.validate()?;
    if !(setup.duration.is_finite() && setup.duration >= 0.0) {
        return Err(SimError::Config(format!(
            "duration must be finite and non-negative, got {}",
            setup.duration
        )));
    }
    if !(setup.rotor_tau.is_finite() && setup.rotor_tau >= 0.0) {
        return Err(SimError::Config(format!(
            "rotor time constant must be finite and non-negative, got {}",
            setup.rotor_tau
        )));
    }

    let dt = setup.schedule.physics_step;
    let n_steps = (setup.duration / dt).round() as usize;
    let ll_every = setup.schedule.low_level_ticks();
    let hl_every = setup.schedule.high_level_ticks();
    let log_every = setup.schedule.log_every;

    let mut log = TrajectoryLog {
        records: Vec::with_capacity(n_steps / log_every + 2),
        diverged: None,
    };
    if n_steps == 0 {
        return Ok(log);
    }

    // SPL servo inertias are frozen at the design angle; reject a
    // degenerate design configuration up front.
    let spl_inertia = equivalent_inertia_spl(setup.spl_beta_eq, &setup.plant)
        .map_err(|e| SimError::Config(e.to_string()))?;

    // The pendulum gain is only needed (and only synthesized) in full mode.
    let mut highlevel = match setup.mode {
        RunMode::Full { .. } => {
            let gain = synthesize_gain(
                setup.method,
                setup.spl_theta1_eq,
                &setup.plant,
                &setup.weights,
            )
            .map_err(|e| SimError::Config(e.to_string()))?;
            Some(HighLevelCtl::new(gain, &setup.weights))
        }
        RunMode::GimbalOnly => None,
    };

    let plant = Plant::new(setup.plant, setup.rotor, setup.rotor_tau);
    let mut sensors = SensorSuite::new(&setup.sensors);
    let mut rate1 = FirstDifference::default();
    let mut rate2 = FirstDifference::default();
    let mut servo_state = ServoState::default();

    let mut y = setup.initial.to_vector();

    // Held (zero-order-hold) values, all refreshed on tick 0 before use.
    let mut enc = (setup.initial.theta1, setup.initial.theta2);
    let mut pend_meas = PendulumMeasurement {
        theta1: enc.0,
        theta2: enc.1,
        theta1_dot: 0.0,
        theta2_dot: 0.0,
    };
    let mut attitude = AttitudeMeasurement {
        alpha: setup.initial.alpha,
        beta: setup.initial.beta,
        alpha_dot: 0.0,
        beta_dot: 0.0,
    };
    let mut torque_cmd = TorqueCommand {
        t_y: 0.0,
        t_z: 0.0,
        saturated: false,
        singular: false,
    };
    let mut thrust_cmd = ThrustCommand {
        f: match setup.mode {
            RunMode::GimbalOnly => setup.plant.hover_thrust(),
            RunMode::Full { .. } => 0.0,
        },
        alpha_d: 0.0,
        beta_d: 0.0,
        force: Vec3::zero(),
        mode: AllocationMode::Normal,
        infeasible: false,
    };
    let mut gimbal_ref = GimbalReference::default();
    let mut pend_ref = PendulumReference {
        theta1: 0.0,
        theta2: 0.0,
        theta1_dot: 0.0,
        theta2_dot: 0.0,
    };
    let mut gimbal_torque = GimbalTorque {
        tau_alpha: 0.0,
        tau_beta: 0.0,
        degenerate: false,
    };
    let mut rotor_cmd = RotorCommand {
        thrusts: [0.0; 4],
        negative: false,
        saturated: false,
    };

    for k in 0..n_steps {
        let t = k as f64 * dt;
        let state = PlantState::from_vector(&y);

        if encoder_fires(k, setup.schedule.encoder_rate_hz, dt) {
            enc = sensors.read_encoders(state.theta1, state.theta2);
        }

        if k % hl_every == 0 {
            if let Some(ctl) = highlevel.as_mut() {
                pend_ref = refs.pendulum(t);
                pend_meas = PendulumMeasurement {
                    theta1: enc.0,
                    theta2: enc.1,
                    theta1_dot: rate1.rate(t, enc.0),
                    theta2_dot: rate2.rate(t, enc.1),
                };
                torque_cmd = ctl.step(&pend_meas, &pend_ref, setup.schedule.high_level_period, &setup.plant);
                thrust_cmd = torque_to_thrust_vector(
                    torque_cmd.t_y,
                    torque_cmd.t_z,
                    pend_meas.theta1,
                    &setup.plant,
                    &setup.rotor,
                    &setup.policy,
                );
                gimbal_ref = GimbalReference {
                    alpha: thrust_cmd.alpha_d,
                    beta: thrust_cmd.beta_d,
                    alpha_rate_ff: 0.0,
                    beta_rate_ff: 0.0,
                };
            }
        }

        if k % ll_every == 0 {
            attitude = sensors.read_attitude(
                state.alpha,
                state.beta,
                state.alpha_dot,
                state.beta_dot,
            );
            if matches!(setup.mode, RunMode::GimbalOnly) {
                gimbal_ref = refs.gimbal(t);
            }
            let accel: AccelCommand = cascade_step(
                &gimbal_ref,
                &attitude,
                &setup.servo,
                &mut servo_state,
                setup.schedule.low_level_period,
            );
            gimbal_torque = match setup.method {
                Method::Sfl => torque_sfl(&accel, &attitude, &setup.plant),
                Method::Pfl => torque_pfl(&accel, attitude.beta, &setup.plant),
                Method::Spl => GimbalTorque {
                    tau_alpha: spl_inertia.0 * accel.alpha_ddot,
                    tau_beta: spl_inertia.1 * accel.beta_ddot,
                    degenerate: false,
                },
            };
            let body = gimbal_torque_to_body(
                gimbal_torque.tau_alpha,
                gimbal_torque.tau_beta,
                attitude.beta,
            );
            rotor_cmd = allocate_rotors(thrust_cmd.f, body, &setup.rotor);
        }

        if k % log_every == 0 {
            log.records.push(make_record(
                t,
                &state,
                &pend_ref,
                &gimbal_ref,
                &pend_meas,
                &attitude,
                &torque_cmd,
                &thrust_cmd,
                &gimbal_torque,
                &rotor_cmd,
            ));
        }

        let pinned = match setup.mode {
            RunMode::GimbalOnly => true,
            RunMode::Full { release_time } => t < release_time,
        };
        if setup.rotor_tau == 0.0 {
            y[8] = rotor_cmd.thrusts[0];
            y[9] = rotor_cmd.thrusts[1];
            y[10] = rotor_cmd.thrusts[2];
            y[11] = rotor_cmd.thrusts[3];
        }
        let next = rk4_step(
            &mut |tt, yy: &[f64; STATE_DIM]| {
                plant
                    .derivative(tt, yy, &rotor_cmd.thrusts, &setup.disturbances, pinned)
                    .0
            },
            t,
            &y,
            dt,
        );
        match next {
            Ok(v) => y = v,
            Err(SimError::NonFiniteState { t }) => {
                log.diverged = Some(t);
                return Ok(log);
            }
            Err(e) => return Err(e),
        }

        let after = PlantState::from_vector(&y);
        if !after.is_finite() {
            log.diverged = Some(t + dt);
            return Ok(log);
        }
        if after.theta1 < DIVERGENCE_THETA1_MIN || after.theta1 > DIVERGENCE_THETA1_MAX {
            log.diverged = Some(t + dt);
            log.records.push(make_record(
                t + dt,
                &after,
                &pend_ref,
                &gimbal_ref,
                &pend_meas,
                &attitude,
                &torque_cmd,
                &thrust_cmd,
                &gimbal_torque,
                &rotor_cmd,
            ));
            return Ok(log);
        }
    }

    let t_end = n_steps as f64 * dt;
    let state = PlantState::from_vector(&y);
    log.records.push(make_record(
        t_end,
        &state,
        &pend_ref,
        &gimbal_ref,
        &pend_meas,
        &attitude,
        &torque_cmd,
        &thrust_cmd,
        &gimbal_torque,
        &rotor_cmd,
    ));
    Ok(log)
}

#[allow(clippy::too_many_arguments)]
fn make_record(
    t: f64,
    state: &PlantState,
    pend_ref: &PendulumReference,
    gimbal_ref: &GimbalReference,
    pend_meas: &PendulumMeasurement,
    attitude: &AttitudeMeasurement,
    torque_cmd: &TorqueCommand,
    thrust_cmd: &ThrustCommand,
    gimbal_torque: &GimbalTorque,
    rotor_cmd: &RotorCommand,
) -> Record {
    Record {
        t,
        ref_theta1: pend_ref.theta1,
        ref_theta2: pend_ref.theta2,
        ref_alpha: gimbal_ref.alpha,
        ref_beta: gimbal_ref.beta,
        theta1: state.theta1,
        theta2: state.theta2,
        alpha: state.alpha,
        beta: state.beta,
        theta1_dot: state.theta1_dot,
        theta2_dot: state.theta2_dot,
        alpha_dot: state.alpha_dot,
        beta_dot: state.beta_dot,
        meas_theta1: pend_meas.theta1,
        meas_theta2: pend_meas.theta2,
        meas_alpha: attitude.alpha,
        meas_beta: attitude.beta,
        t_y: torque_cmd.t_y,
        t_z: torque_cmd.t_z,
        f_cmd: thrust_cmd.f,
        alpha_d: thrust_cmd.alpha_d,
        beta_d: thrust_cmd.beta_d,
        tau_alpha: gimbal_torque.tau_alpha,
        tau_beta: gimbal_torque.tau_beta,
        rotors: rotor_cmd.thrusts,
        saturated: torque_cmd.saturated
            || thrust_cmd.infeasible
            || rotor_cmd.negative
            || rotor_cmd.saturated,
        singular: torque_cmd.singular || gimbal_torque.degenerate,
        mode_weight: mode_weight(thrust_cmd.mode),
    }
}
