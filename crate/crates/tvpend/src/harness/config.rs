//! The run configuration file: one TOML document with `plant`, `rotor`,
//! `sensor`, `controller`, and `scenario` sections. Every field has a
//! default, so a file may override only what it cares about; a missing
//! `scenario` section means the file only retunes an existing scenario.

use serde::{Deserialize, Serialize};

use crate::allocation::SingularityPolicy;
use crate::harness::scenario::Scenario;
use crate::highlevel::LqiWeights;
use crate::kinematics::RotorParams;
use crate::lowlevel::ServoGains;
use crate::plant::{PlantParams, PlantState};
use crate::sensors::SensorParams;
use crate::sim::{RateSchedule, RunMode, RunSetup};

fn default_rotor_tau() -> f64 {
    0.02
}

/// Everything below the scenario: loop rates, servo gains, weighting, the
/// allocation policy, and the design equilibria of the locally linearized
/// method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub schedule: RateSchedule,
    pub servo: ServoGains,
    pub weights: LqiWeights,
    pub policy: SingularityPolicy,
    /// Rotor thrust first-order lag time constant, s (0 = ideal rotors).
    pub rotor_tau: f64,
    /// Elevation the locally linearized pendulum gain is designed at, rad.
    pub spl_theta1_eq: f64,
    /// Inner gimbal angle the locally linearized servo torque is designed
    /// at, rad.
    pub spl_beta_eq: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            schedule: RateSchedule::default(),
            servo: ServoGains::default(),
            weights: LqiWeights::default(),
            policy: SingularityPolicy::default(),
            rotor_tau: default_rotor_tau(),
            spl_theta1_eq: 0.0,
            spl_beta_eq: 0.0,
        }
    }
}

/// A full run description as read from disk.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub plant: PlantParams,
    pub rotor: RotorParams,
    pub sensor: SensorParams,
    pub controller: ControllerConfig,
    pub scenario: Option<Scenario>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| format!("config parse error: {e}"))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run configurations always serialize")
    }

    /// The config with a scenario slotted in (used when the scenario comes
    /// from the builtin catalog rather than the file).
    pub fn with_scenario(mut self, scenario: Scenario) -> Self {
        self.scenario = Some(scenario);
        self
    }
}

/// Assembles the engine setup for one scenario under one configuration.
/// The scenario's own noise switch and seed drive the sensor suite, and the
/// sensor packet rate is mirrored into the scheduler so the encoder filter
/// design and the packet clock always agree.
pub fn build_setup(config: &RunConfig, scenario: &Scenario) -> Result<RunSetup, String> {
    scenario.validate().map_err(|e| format!("scenario `{}`: {e}", scenario.name))?;
    let mut sensors = config.sensor;
    sensors.noise = scenario.noise;
    sensors.seed = scenario.seed;
    let mut schedule = config.controller.schedule;
    schedule.encoder_rate_hz = sensors.encoder_rate_hz;
    let mode = if scenario.gimbal_only {
        RunMode::GimbalOnly
    } else {
        RunMode::Full {
            release_time: scenario.release_time,
        }
    };
    Ok(RunSetup {
        plant: config.plant,
        rotor: config.rotor,
        rotor_tau: config.controller.rotor_tau,
        sensors,
        schedule,
        method: scenario.method,
        servo: config.controller.servo,
        policy: config.controller.policy,
        weights: config.controller.weights.clone(),
        spl_theta1_eq: config.controller.spl_theta1_eq,
        spl_beta_eq: config.controller.spl_beta_eq,
        mode,
        initial: PlantState::at_rest(
            scenario.initial_theta1,
            scenario.initial_theta2,
            0.0,
            0.0,
            [0.0; 4],
        ),
        duration: scenario.duration,
        disturbances: scenario.disturbances.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::scenario::find_scenario;
    use crate::Method;

    #[test]
    fn empty_config_gives_all_defaults() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.controller.rotor_tau, 0.02);
        assert!(c.scenario.is_none());
    }

    #[test]
    fn partial_overrides_leave_the_rest_at_defaults() {
        let c = RunConfig::from_toml(
            r#"
            [controller]
            rotor_tau = 0.0

            [controller.servo]
            k_p_pos = 9.5

            [sensor]
            seed = 42
            "#,
        )
        .unwrap();
        assert_eq!(c.controller.rotor_tau, 0.0);
        assert_eq!(c.controller.servo.k_p_pos, 9.5);
        assert_eq!(c.sensor.seed, 42);
        assert_eq!(c.plant, PlantParams::default());
        assert_eq!(c.controller.weights, LqiWeights::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("[controller]\nbogus = 1\n").is_err());
        assert!(RunConfig::from_toml("[plnt]\n").is_err());
    }

    #[test]
    fn scenario_section_round_trips_through_toml() {
        let scenario = find_scenario("combined-sfl", None).unwrap();
        let config = RunConfig::default().with_scenario(scenario.clone());
        let text = config.to_toml();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(back.scenario.as_ref().unwrap(), &scenario);
        assert_eq!(&back, &config);
    }

    #[test]
    fn build_setup_wires_scenario_noise_seed_and_mode() {
        let config = RunConfig::default();
        let mut scenario = find_scenario("regulation-eq-pfl", None).unwrap();
        scenario.noise = false;
        scenario.seed = 7;
        let setup = build_setup(&config, &scenario).unwrap();
        assert!(!setup.sensors.noise);
        assert_eq!(setup.sensors.seed, 7);
        assert_eq!(setup.method, Method::Pfl);
        assert!(matches!(setup.mode, RunMode::Full { release_time } if release_time == 5.0));
        assert_eq!(setup.schedule.encoder_rate_hz, setup.sensors.encoder_rate_hz);

        let gimbal = find_scenario("gimbal-step-45-spl", None).unwrap();
        let setup = build_setup(&config, &gimbal).unwrap();
        assert!(matches!(setup.mode, RunMode::GimbalOnly));
    }

    #[test]
    fn build_setup_rejects_invalid_scenarios() {
        let config = RunConfig::default();
        let mut scenario = find_scenario("regulation-eq-pfl", None).unwrap();
        scenario.release_time = 100.0;
        assert!(build_setup(&config, &scenario).is_err());
    }
}
