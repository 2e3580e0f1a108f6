//! Deterministic multirate simulator and hierarchical controllers for a
//! 2-DoF spherical pendulum actuated by the vectored thrust of a
//! gimbal-mounted quadcopter.
//!
//! The crate is layered bottom-up:
//!
//! * [`frames`] / [`kinematics`] — frame-tagged vectors, rotation builders,
//!   angular-velocity composition, and the rotor mixing algebra.
//! * [`plant`] / [`sensors`] — the continuous-time nonlinear dynamics
//!   (gimbal attitude, pendulum attitude driven by the actual thrust vector,
//!   rotor lag, disturbances) and the measurement chain (encoder quantization,
//!   low-pass filtering, attitude noise).
//! * [`riccati`] / [`highlevel`] — LQI gain synthesis via a continuous
//!   algebraic Riccati solver, and the pendulum attitude controller in its
//!   three linearization flavors (SPL, SFL, PFL).
//! * [`lowlevel`] — the cascaded gimbal servo (P position, PI velocity) with
//!   the matching SPL/SFL/PFL torque computations.
//! * [`allocation`] — the over-actuation resolution chain from pendulum
//!   torque commands to per-rotor thrusts, including the gimbal-lock
//!   singularity policy.
//! * [`sim`] — fixed-step RK4 integration and the multirate scheduler
//!   (1 kHz physics, 500 Hz gimbal servo, 120 Hz encoder packets, 100 Hz
//!   pendulum controller).
//! * [`harness`] — scenario definitions, metrics, config files, CSV/SVG
//!   emission, and the scenario suite.
//!
//! Every run is deterministic: controllers only ever see sensor outputs, all
//! randomness flows from one seed, and identical configurations produce
//! bit-identical logs.

pub mod allocation;
pub mod frames;
pub mod harness;
pub mod highlevel;
pub mod kinematics;
pub mod lowlevel;
pub mod plant;
pub mod riccati;
pub mod sensors;
pub mod sim;

/// Linearization method used by both control layers.
///
/// * `Spl` — small perturbation (Taylor) linearization at a fixed
///   equilibrium; valid only locally.
/// * `Sfl` — state feedback linearization: exact cancellation of the
///   nonlinear terms using measured state.
/// * `Pfl` — partial feedback linearization: the nonlinear compensation
///   terms use commanded rates instead of measured ones, trading exactness
///   for noise immunity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Spl,
    Sfl,
    Pfl,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Spl, Method::Sfl, Method::Pfl];

    pub fn name(self) -> &'static str {
        match self {
            Method::Spl => "spl",
            Method::Sfl => "sfl",
            Method::Pfl => "pfl",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "spl" => Ok(Method::Spl),
            "sfl" => Ok(Method::Sfl),
            "pfl" => Ok(Method::Pfl),
            other => Err(format!("unknown method `{other}` (expected spl, sfl or pfl)")),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
