//! Rotation builders, angular-velocity composition, and rotor mixing.
//!
//! Angle conventions:
//!
//! * `alpha` — gimbal outer-axis angle, rotation about the gimbal `x` axis.
//! * `beta` — gimbal inner-axis angle, rotation about the intermediate `y`
//!   axis.
//! * `theta1` — pendulum elevation measured from the horizontal plane
//!   (`theta1 = pi/2` is the inverted, straight-up configuration).
//! * `theta2` — pendulum azimuth about the world `z` axis.

use crate::frames::{Copter, Gimbal, Pendulum, Rotation, Vec3, World};

/// Attitude of the copter body relative to the gimbal base for gimbal angles
/// `(alpha, beta)`: the rotation carrying the gimbal axes onto the copter
/// axes. As a coordinate map it takes copter-frame components to
/// gimbal-frame components.
pub fn rot_gimbal_to_copter(alpha: f64, beta: f64) -> Rotation<Copter, Gimbal> {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    Rotation::from_rows([
        [cb, 0.0, sb],
        [sa * sb, ca, -sa * cb],
        [-ca * sb, sa, ca * cb],
    ])
}

/// Attitude of the pendulum rod relative to the world for elevation `theta1`
/// and azimuth `theta2`. As a coordinate map it takes rod-frame components
/// to world-frame components; the rod axis `x_P` maps to
/// `(cos t1 cos t2, cos t1 sin t2, sin t1)` in world coordinates.
pub fn rot_world_to_pendulum(theta1: f64, theta2: f64) -> Rotation<Pendulum, World> {
    let (s1, c1) = theta1.sin_cos();
    let (s2, c2) = theta2.sin_cos();
    Rotation::from_rows([
        [c1 * c2, -s2, -s1 * c2],
        [c1 * s2, c2, -s1 * s2],
        [s1, 0.0, c1],
    ])
}

/// Body angular velocity of the copter (rad/s, copter frame) produced by
/// gimbal joint rates `(alpha_dot, beta_dot)` at inner angle `beta`. The
/// outer-axis rate enters through the inner rotation, splitting it between
/// the body `x` and `z` axes.
pub fn copter_angular_velocity(beta: f64, alpha_dot: f64, beta_dot: f64) -> Vec3<Copter> {
    let (sb, cb) = beta.sin_cos();
    Vec3::new(alpha_dot * cb, beta_dot, alpha_dot * sb)
}

/// Body angular velocity of the pendulum rod (rad/s, rod frame) produced by
/// joint rates `(theta1_dot, theta2_dot)` at elevation `theta1`. The azimuth
/// rate splits between the rod `x` and `z` axes; the elevation rate enters
/// about `-y`.
pub fn pendulum_angular_velocity(theta1: f64, theta1_dot: f64, theta2_dot: f64) -> Vec3<Pendulum> {
    let (s1, c1) = theta1.sin_cos();
    Vec3::new(theta2_dot * s1, -theta1_dot, theta2_dot * c1)
}

/// Rotor geometry and aerodynamic coefficients for the X-configuration
/// quadcopter.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RotorParams {
    /// Thrust coefficient, N per (rad/s)^2 of rotor speed.
    pub k_f: f64,
    /// Drag-torque coefficient, N·m per (rad/s)^2 of rotor speed.
    pub k_m: f64,
    /// Moment arm of each rotor about the body x/y axes, m.
    pub d_r: f64,
    /// Maximum thrust a single rotor can produce, N.
    pub f_rotor_max: f64,
}

impl Default for RotorParams {
    fn default() -> Self {
        Self {
            k_f: 2.37523e-8,
            k_m: 0.006 * 2.37523e-8,
            d_r: 0.0325,
            f_rotor_max: 0.1472,
        }
    }
}

impl RotorParams {
    /// Maximum total thrust with all rotors at their limit, N.
    pub fn f_total_max(&self) -> f64 {
        4.0 * self.f_rotor_max
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("k_f", self.k_f),
            ("k_m", self.k_m),
            ("d_r", self.d_r),
            ("f_rotor_max", self.f_rotor_max),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("rotor parameter {name} must be finite and positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// Result of resolving a body-wrench command into per-rotor thrusts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotorCommand {
    /// Per-rotor thrusts after clamping to `[0, f_rotor_max]`, N.
    pub thrusts: [f64; 4],
    /// True when the exact solution required a negative squared rotor speed.
    pub negative: bool,
    /// True when the exact solution exceeded the per-rotor thrust limit.
    pub saturated: bool,
}

impl RotorCommand {
    /// The command could not be realized exactly and was clamped.
    pub fn infeasible(&self) -> bool {
        self.negative || self.saturated
    }
}

/// Tolerance (N) below zero / above the limit before a solution counts as
/// infeasible, absorbing round-off from the mixing algebra.
const MIX_TOL: f64 = 1e-12;

/// Resolves a total-thrust and body-torque command into four rotor thrusts.
///
/// The X configuration gives, with per-rotor thrusts `f_i`:
/// total `f = f1+f2+f3+f4`, roll `tau_x = d_r (f1+f2-f3-f4)`, pitch
/// `tau_y = d_r (f1-f2-f3+f4)`, yaw `tau_z = (k_m/k_f)(f1-f2+f3-f4)`.
/// That 4x4 map is orthogonal up to scaling, so the exact inverse is a sum
/// of the four normalized commands. Rotor thrusts cannot be negative and are
/// limited above; an unrealizable command is clamped and flagged, never an
/// abort.
pub fn mix_to_rotors(f: f64, tau: Vec3<Copter>, p: &RotorParams) -> RotorCommand {
    let a = f;
    let b = tau.x / p.d_r;
    let c = tau.y / p.d_r;
    let d = tau.z * p.k_f / p.k_m;
    let exact = [
        0.25 * (a + b + c + d),
        0.25 * (a + b - c - d),
        0.25 * (a - b - c + d),
        0.25 * (a - b + c - d),
    ];
    let mut negative = false;
    let mut saturated = false;
    let mut thrusts = [0.0; 4];
    for (out, &fi) in thrusts.iter_mut().zip(exact.iter()) {
        if fi < -MIX_TOL {
            negative = true;
        }
        if fi > p.f_rotor_max + MIX_TOL {
            saturated = true;
        }
        *out = fi.clamp(0.0, p.f_rotor_max);
    }
    RotorCommand { thrusts, negative, saturated }
}

/// Forward rotor map: total thrust (N) and body torque (N·m, copter frame)
/// produced by four rotor thrusts.
pub fn rotor_wrench(thrusts: &[f64; 4], p: &RotorParams) -> (f64, Vec3<Copter>) {
    let [f1, f2, f3, f4] = *thrusts;
    let f = f1 + f2 + f3 + f4;
    let tau = Vec3::new(
        p.d_r * (f1 + f2 - f3 - f4),
        p.d_r * (f1 - f2 - f3 + f4),
        (p.k_m / p.k_f) * (f1 - f2 + f3 - f4),
    );
    (f, tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_gimbal_angles_give_identity() {
        let r = rot_gimbal_to_copter(0.0, 0.0);
        assert_eq!(*r.rows(), [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let r = rot_world_to_pendulum(0.0, 0.0);
        assert_eq!(*r.rows(), [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    }

    #[test]
    fn quarter_turn_outer_axis() {
        let r = rot_gimbal_to_copter(std::f64::consts::FRAC_PI_2, 0.0);
        let expect = [[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(r.entry(i, j), expect[i][j], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn rod_axis_maps_to_elevation_azimuth_direction() {
        let (t1, t2) = (0.4, -1.1);
        let r = rot_world_to_pendulum(t1, t2);
        let tip = r.apply(Vec3::new(1.0, 0.0, 0.0));
        assert_abs_diff_eq!(tip.x, t1.cos() * t2.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(tip.y, t1.cos() * t2.sin(), epsilon = 1e-15);
        assert_abs_diff_eq!(tip.z, t1.sin(), epsilon = 1e-15);
    }

    #[test]
    fn zero_rates_give_zero_angular_velocity() {
        assert_eq!(copter_angular_velocity(0.7, 0.0, 0.0).as_array(), [0.0, 0.0, 0.0]);
        assert_eq!(pendulum_angular_velocity(1.2, 0.0, 0.0).as_array(), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn pure_azimuth_rate_has_magnitude_of_rate() {
        let w = pendulum_angular_velocity(0.9, 0.0, -2.5);
        assert_abs_diff_eq!(w.norm(), 2.5, epsilon = 1e-14);
        assert_eq!(w.y, 0.0);
    }

    #[test]
    fn uniform_thrust_splits_evenly() {
        let p = RotorParams::default();
        let cmd = mix_to_rotors(0.4, Vec3::zero(), &p);
        assert!(!cmd.infeasible());
        for fi in cmd.thrusts {
            assert_abs_diff_eq!(fi, 0.1, epsilon = 1e-15);
        }
    }

    #[test]
    fn yaw_without_thrust_is_infeasible() {
        let p = RotorParams::default();
        let cmd = mix_to_rotors(0.0, Vec3::new(0.0, 0.0, 1e-4), &p);
        assert!(cmd.negative);
        assert!(cmd.infeasible());
        // clamped output stays non-negative
        for fi in cmd.thrusts {
            assert!(fi >= 0.0);
        }
    }

    #[test]
    fn over_limit_thrust_saturates() {
        let p = RotorParams::default();
        let cmd = mix_to_rotors(p.f_total_max() * 1.5, Vec3::zero(), &p);
        assert!(cmd.saturated);
        for fi in cmd.thrusts {
            assert!(fi <= p.f_rotor_max);
        }
    }

    proptest! {
        #[test]
        fn rotation_matrices_are_orthonormal(
            a in -std::f64::consts::PI..std::f64::consts::PI,
            b in -std::f64::consts::PI..std::f64::consts::PI,
        ) {
            for (err, det) in [
                {
                    let r = rot_gimbal_to_copter(a, b);
                    (r.orthonormality_error(), r.determinant())
                },
                {
                    let r = rot_world_to_pendulum(a, b);
                    (r.orthonormality_error(), r.determinant())
                },
            ] {
                prop_assert!(err <= 1e-12, "orthonormality error {err}");
                prop_assert!((det - 1.0).abs() <= 1e-12, "determinant {det}");
            }
        }

        #[test]
        fn transpose_is_inverse(
            a in -std::f64::consts::PI..std::f64::consts::PI,
            b in -std::f64::consts::PI..std::f64::consts::PI,
            vx in -2.0f64..2.0,
            vy in -2.0f64..2.0,
            vz in -2.0f64..2.0,
        ) {
            let r = rot_gimbal_to_copter(a, b);
            let v = Vec3::new(vx, vy, vz);
            let back = r.transpose().apply(r.apply(v));
            prop_assert!((back - v).norm() <= 1e-12 * (1.0 + v.norm()));
        }

        #[test]
        fn angular_velocity_is_linear_in_rates(
            beta in -std::f64::consts::PI..std::f64::consts::PI,
            a1 in -5.0f64..5.0, b1 in -5.0f64..5.0,
            a2 in -5.0f64..5.0, b2 in -5.0f64..5.0,
        ) {
            let w_sum = copter_angular_velocity(beta, a1 + a2, b1 + b2);
            let w_parts = copter_angular_velocity(beta, a1, b1)
                + copter_angular_velocity(beta, a2, b2);
            prop_assert!((w_sum - w_parts).norm() <= 1e-12 * (1.0 + w_sum.norm()));
        }

        #[test]
        fn feasible_mix_round_trips(
            f in 0.05f64..0.55,
            tx in -3e-3f64..3e-3,
            ty in -3e-3f64..3e-3,
            tz in -2e-4f64..2e-4,
        ) {
            let p = RotorParams::default();
            let tau = Vec3::new(tx, ty, tz);
            let cmd = mix_to_rotors(f, tau, &p);
            prop_assume!(!cmd.infeasible());
            let (f_back, tau_back) = rotor_wrench(&cmd.thrusts, &p);
            prop_assert!((f_back - f).abs() <= 1e-12 * (1.0 + f.abs()));
            prop_assert!((tau_back - tau).norm() <= 1e-12 * (1.0 + tau.norm()));
        }
    }
}
