//! Gimbal servo: a cascaded P position loop and PI velocity loop per joint
//! axis, followed by the torque computation that realizes the commanded
//! joint accelerations on the copter body.
//!
//! The copter seen from the gimbal joints has an outer-axis inertia that
//! varies with the inner angle, `sigma(beta) = j_cx cos^2 + j_cz sin^2`, and
//! rate-product coupling between the axes. The SFL torque inverts that
//! model exactly with measured rates, PFL does the same with commanded
//! rates, and SPL multiplies the acceleration commands by constant
//! equivalent inertias frozen at a design angle.

use thiserror::Error;

use crate::plant::PlantParams;
use crate::sensors::AttitudeMeasurement;

#[derive(Debug, Error)]
pub enum LowLevelError {
    #[error(
        "design angle beta_eq = {beta_eq} rad is degenerate: the equivalent \
         outer-axis inertia is unbounded where cos + sin vanishes"
    )]
    DegenerateEquilibrium { beta_eq: f64 },
}

/// Threshold on `|cos(beta) + sin(beta)|` below which the constant-inertia
/// design model degenerates.
pub const DEGENERATE_CONFIG_TOL: f64 = 1e-6;

/// Cascade gains, shared by both gimbal axes.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServoGains {
    /// Position-loop proportional gain, 1/s.
    pub k_p_pos: f64,
    /// Velocity-loop proportional gain, 1/s.
    pub k_p_vel: f64,
    /// Velocity-loop integral gain, 1/s^2.
    pub k_i_vel: f64,
    /// Anti-windup clamp on the integral contribution, rad/s^2.
    pub accel_clamp: f64,
}

impl Default for ServoGains {
    fn default() -> Self {
        Self { k_p_pos: 8.0, k_p_vel: 40.0, k_i_vel: 400.0, accel_clamp: 20.0 }
    }
}

impl ServoGains {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("k_p_pos", self.k_p_pos),
            ("k_p_vel", self.k_p_vel),
            ("k_i_vel", self.k_i_vel),
            ("accel_clamp", self.accel_clamp),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("servo gain {name} must be finite and positive, got {v}"));
            }
        }
        if self.k_p_vel <= self.k_p_pos {
            return Err(format!(
                "velocity loop must be faster than the position loop: \
                 k_p_vel = {} must exceed k_p_pos = {}",
                self.k_p_vel, self.k_p_pos
            ));
        }
        Ok(())
    }
}

/// Gimbal angle references with optional feedforward rates (nonzero during
/// reference ramps).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GimbalReference {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_rate_ff: f64,
    pub beta_rate_ff: f64,
}

/// Integrator state of the two velocity loops, stored directly as the
/// acceleration contribution (rad/s^2).
#[derive(Debug, Clone, Copy, Default)]
pub struct ServoState {
    int_alpha: f64,
    int_beta: f64,
}

impl ServoState {
    pub fn integral_contribution(&self) -> (f64, f64) {
        (self.int_alpha, self.int_beta)
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

/// Output of one servo tick: commanded joint accelerations plus the
/// commanded rates (the velocity-loop setpoints), which the PFL torque uses
/// in place of measured rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelCommand {
    pub alpha_ddot: f64,
    pub beta_ddot: f64,
    pub alpha_rate_cmd: f64,
    pub beta_rate_cmd: f64,
}

/// One cascade tick at period `dt`: P position loop produces a rate
/// command (plus feedforward), PI velocity loop produces an acceleration
/// command. The integral contribution is clamped at `accel_clamp`.
pub fn cascade_step(
    reference: &GimbalReference,
    meas: &AttitudeMeasurement,
    gains: &ServoGains,
    state: &mut ServoState,
    dt: f64,
) -> AccelCommand {
    let alpha_rate_cmd = gains.k_p_pos * (reference.alpha - meas.alpha) + reference.alpha_rate_ff;
    let beta_rate_cmd = gains.k_p_pos * (reference.beta - meas.beta) + reference.beta_rate_ff;

    let e_alpha = alpha_rate_cmd - meas.alpha_dot;
    let e_beta = beta_rate_cmd - meas.beta_dot;

    let clamp = gains.accel_clamp;
    state.int_alpha = (state.int_alpha + gains.k_i_vel * e_alpha * dt).clamp(-clamp, clamp);
    state.int_beta = (state.int_beta + gains.k_i_vel * e_beta * dt).clamp(-clamp, clamp);

    AccelCommand {
        alpha_ddot: gains.k_p_vel * e_alpha + state.int_alpha,
        beta_ddot: gains.k_p_vel * e_beta + state.int_beta,
        alpha_rate_cmd,
        beta_rate_cmd,
    }
}

/// Torque pair for the gimbal joint axes, N·m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GimbalTorque {
    pub tau_alpha: f64,
    pub tau_beta: f64,
    /// The configuration sits where the constant-inertia design model is
    /// invalid (`cos(beta) + sin(beta)` near zero). The exact-inversion
    /// torques remain finite; the flag marks that the servo gains were not
    /// designed for this region.
    pub degenerate: bool,
}

/// Variable outer-axis inertia `j_cx cos^2(beta) + j_cz sin^2(beta)`,
/// kg·m^2.
pub fn outer_axis_inertia(beta: f64, p: &PlantParams) -> f64 {
    let (sb, cb) = beta.sin_cos();
    p.j_cx * cb * cb + p.j_cz * sb * sb
}

fn inversion_torque(
    accel: &AccelCommand,
    beta: f64,
    rate_alpha: f64,
    rate_beta: f64,
    p: &PlantParams,
) -> GimbalTorque {
    let (sb, cb) = beta.sin_cos();
    let sigma = p.j_cx * cb * cb + p.j_cz * sb * sb;
    let coupling = (p.j_cz - p.j_cx) * sb * cb;
    GimbalTorque {
        tau_alpha: sigma * accel.alpha_ddot + 2.0 * coupling * rate_alpha * rate_beta,
        tau_beta: p.j_cy * accel.beta_ddot - coupling * rate_alpha * rate_alpha,
        degenerate: (cb + sb).abs() < DEGENERATE_CONFIG_TOL,
    }
}

/// Exact model inversion with measured rates: in the noise-free plant the
/// joint accelerations equal the commands exactly.
pub fn torque_sfl(accel: &AccelCommand, meas: &AttitudeMeasurement, p: &PlantParams) -> GimbalTorque {
    inversion_torque(accel, meas.beta, meas.alpha_dot, meas.beta_dot, p)
}

/// Exact model inversion with commanded rates: bit-identical to
/// [`torque_sfl`] when the measured rates equal the commanded rates, and
/// free of squared measurement noise otherwise.
pub fn torque_pfl(accel: &AccelCommand, beta_meas: f64, p: &PlantParams) -> GimbalTorque {
    inversion_torque(
        accel,
        beta_meas,
        accel.alpha_rate_cmd,
        accel.beta_rate_cmd,
        p,
    )
}

/// Constant equivalent inertias `(J_alpha, J_beta)` used by the SPL
/// torque: the outer axis sees `(j_cx cos + j_cz sin) / (cos + sin)` at
/// the design angle, the inner axis always `j_cy`. Both kg·m^2.
///
/// The outer expression comes from collapsing the two coupled torque rows
/// into one input channel around a frozen inner angle; it agrees with the
/// true variable inertia at 0, pi/4, and pi/2, and diverges toward
/// `beta = -pi/4` where the collapse is invalid.
pub fn equivalent_inertia_spl(beta_eq: f64, p: &PlantParams) -> Result<(f64, f64), LowLevelError> {
    let (sb, cb) = beta_eq.sin_cos();
    if (cb + sb).abs() < DEGENERATE_CONFIG_TOL {
        return Err(LowLevelError::DegenerateEquilibrium { beta_eq });
    }
    Ok(((p.j_cx * cb + p.j_cz * sb) / (cb + sb), p.j_cy))
}

/// Constant-inertia torque: acceleration commands scaled by the inertias of
/// the design configuration, with no rate compensation. Errors at the
/// degenerate design angle.
pub fn torque_spl(
    accel: &AccelCommand,
    beta_eq: f64,
    p: &PlantParams,
) -> Result<GimbalTorque, LowLevelError> {
    let (j_alpha, j_beta) = equivalent_inertia_spl(beta_eq, p)?;
    Ok(GimbalTorque {
        tau_alpha: j_alpha * accel.alpha_ddot,
        tau_beta: j_beta * accel.beta_ddot,
        degenerate: false,
    })
}
