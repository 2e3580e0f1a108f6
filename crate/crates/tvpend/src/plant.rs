//! Continuous-time dynamics of the gimbal-mounted quadcopter on the
//! spherical pendulum.
//!
//! The pendulum rod pivots about a universal joint: elevation `theta1` from
//! the horizontal plane and azimuth `theta2` about the vertical. The copter
//! hangs in a two-axis gimbal at rod distance `l_g`; its rotors produce a
//! total thrust `f` along the copter `z` axis plus body torques. Thrust
//! tilted by the gimbal angles `(alpha, beta)` applies a torque on the rod;
//! the body torques drive the gimbal joints.
//!
//! The gimbal rotational dynamics depend only on the gimbal state and the
//! applied torques — the function signature of [`gimbal_accel`] admits no
//! pendulum quantities, which encodes the decoupling: the universal joint
//! transmits forces, not torques, below the gimbal.

use crate::kinematics::{rotor_wrench, RotorParams};

/// Mechanical parameters of the pendulum-gimbal-copter assembly.
///
/// The copter body is symmetric about its vertical axis (`j_cx = j_cy`) and
/// the rod assembly is symmetric about the rod axis (`j_py = j_pz`, rod-axis
/// inertia zero). Both symmetries are load-bearing for the closed-form
/// dynamics and are checked by [`PlantParams::validate`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantParams {
    /// Copter mass, kg.
    pub m_c: f64,
    /// Pendulum rod assembly mass, kg.
    pub m_p: f64,
    /// Gravitational acceleration, m/s^2.
    pub g: f64,
    /// Joint-to-gimbal distance along the rod, m.
    pub l_g: f64,
    /// Joint-to-rod-center-of-mass distance, m.
    pub l_p: f64,
    /// Copter body inertia about its x axis, kg·m^2.
    pub j_cx: f64,
    /// Copter body inertia about its y axis, kg·m^2 (equals `j_cx`).
    pub j_cy: f64,
    /// Copter body inertia about its thrust axis, kg·m^2.
    pub j_cz: f64,
    /// Rod assembly inertia about the joint y axis, kg·m^2.
    pub j_py: f64,
    /// Rod assembly inertia about the joint z axis, kg·m^2 (equals `j_py`).
    pub j_pz: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            m_c: 0.026,
            m_p: 0.011,
            g: 9.81,
            l_g: 0.337,
            l_p: 0.285,
            j_cx: 1.66e-5,
            j_cy: 1.66e-5,
            j_cz: 2.93e-5,
            j_py: 8.9347e-4,
            j_pz: 8.9347e-4,
        }
    }
}

impl PlantParams {
    /// Effective elevation inertia: rod inertia plus the copter point mass
    /// at the gimbal, kg·m^2.
    pub fn j1(&self) -> f64 {
        self.j_py + self.m_c * self.l_g * self.l_g
    }

    /// Effective azimuth inertia at zero elevation, kg·m^2.
    pub fn j2(&self) -> f64 {
        self.j_pz + self.m_c * self.l_g * self.l_g
    }

    /// Gravity moment coefficient `m_c l_g + m_p l_p`, kg·m. The gravity
    /// torque about the elevation axis is `-w_eff * g * cos(theta1)`.
    pub fn w_eff(&self) -> f64 {
        self.m_c * self.l_g + self.m_p * self.l_p
    }

    /// Thrust magnitude that exactly cancels gravity at zero elevation with
    /// a centered gimbal, N.
    pub fn hover_thrust(&self) -> f64 {
        self.w_eff() * self.g / self.l_g
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("m_c", self.m_c),
            ("m_p", self.m_p),
            ("g", self.g),
            ("l_g", self.l_g),
            ("l_p", self.l_p),
            ("j_cx", self.j_cx),
            ("j_cy", self.j_cy),
            ("j_cz", self.j_cz),
            ("j_py", self.j_py),
            ("j_pz", self.j_pz),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("plant parameter {name} must be finite and positive, got {v}"));
            }
        }
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());
        if rel(self.j_cx, self.j_cy) > 1e-12 {
            return Err(format!(
                "copter inertia must satisfy j_cx = j_cy (axisymmetric body), got {} vs {}",
                self.j_cx, self.j_cy
            ));
        }
        if rel(self.j_py, self.j_pz) > 1e-12 {
            return Err(format!(
                "rod inertia must satisfy j_py = j_pz (rod-symmetric assembly), got {} vs {}",
                self.j_py, self.j_pz
            ));
        }
        Ok(())
    }
}

/// Full continuous state of the plant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState {
    /// Pendulum elevation from horizontal, rad.
    pub theta1: f64,
    /// Pendulum azimuth, rad.
    pub theta2: f64,
    pub theta1_dot: f64,
    pub theta2_dot: f64,
    /// Gimbal outer angle, rad.
    pub alpha: f64,
    /// Gimbal inner angle, rad.
    pub beta: f64,
    pub alpha_dot: f64,
    pub beta_dot: f64,
    /// Actual per-rotor thrusts after the first-order rotor lag, N.
    pub rotors: [f64; 4],
}

/// Number of scalar states in [`PlantState`].
pub const STATE_DIM: usize = 12;

impl PlantState {
    /// Rest state at the given pendulum and gimbal angles with rotors spun
    /// to the given thrusts.
    pub fn at_rest(theta1: f64, theta2: f64, alpha: f64, beta: f64, rotors: [f64; 4]) -> Self {
        Self {
            theta1,
            theta2,
            theta1_dot: 0.0,
            theta2_dot: 0.0,
            alpha,
            beta,
            alpha_dot: 0.0,
            beta_dot: 0.0,
            rotors,
        }
    }

    pub fn to_vector(&self) -> [f64; STATE_DIM] {
        [
            self.theta1,
            self.theta2,
            self.theta1_dot,
            self.theta2_dot,
            self.alpha,
            self.beta,
            self.alpha_dot,
            self.beta_dot,
            self.rotors[0],
            self.rotors[1],
            self.rotors[2],
            self.rotors[3],
        ]
    }

    pub fn from_vector(v: &[f64; STATE_DIM]) -> Self {
        Self {
            theta1: v[0],
            theta2: v[1],
            theta1_dot: v[2],
            theta2_dot: v[3],
            alpha: v[4],
            beta: v[5],
            alpha_dot: v[6],
            beta_dot: v[7],
            rotors: [v[8], v[9], v[10], v[11]],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|x| x.is_finite())
    }

    /// Mechanical energy of the free pendulum (no thrust, no gimbal motion),
    /// J, with the zero of potential at the horizontal. Conserved exactly by
    /// the continuous dynamics when no thrust or disturbance acts.
    pub fn pendulum_energy(&self, p: &PlantParams) -> f64 {
        let c1 = self.theta1.cos();
        let kinetic = 0.5 * p.j1() * self.theta1_dot * self.theta1_dot
            + 0.5 * p.j2() * self.theta2_dot * self.theta2_dot * c1 * c1;
        let potential = p.w_eff() * p.g * self.theta1.sin();
        kinetic + potential
    }
}

/// Which pendulum channel an external disturbance torque acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisturbanceChannel {
    Theta1,
    Theta2,
}

/// A rectangular disturbance torque pulse applied at the pendulum base.
/// Omitting `duration` makes it a step that stays on to the end of the run.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disturbance {
    pub channel: DisturbanceChannel,
    /// Onset time, s.
    pub start: f64,
    /// Pulse length, s; `None` means a permanent step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    /// Torque magnitude, N·m.
    pub magnitude: f64,
}

impl Disturbance {
    /// Torque on (theta1, theta2) channels at time `t`, N·m.
    pub fn torque_at(&self, t: f64) -> (f64, f64) {
        let active = t >= self.start
            && match self.duration {
                Some(d) => t < self.start + d,
                None => true,
            };
        if !active {
            return (0.0, 0.0);
        }
        match self.channel {
            DisturbanceChannel::Theta1 => (self.magnitude, 0.0),
            DisturbanceChannel::Theta2 => (0.0, self.magnitude),
        }
    }
}

/// Sums the torques of several disturbances at time `t`.
pub fn disturbance_torque(disturbances: &[Disturbance], t: f64) -> (f64, f64) {
    let mut d = (0.0, 0.0);
    for dist in disturbances {
        let (d1, d2) = dist.torque_at(t);
        d.0 += d1;
        d.1 += d2;
    }
    d
}

/// Gimbal joint accelerations under applied joint torques.
///
/// The copter body seen from the gimbal joints has outer-axis inertia
/// `j_cx cos^2 b + j_cz sin^2 b` (the outer rotation splits between the body
/// x and z axes) and constant inner-axis inertia `j_cy`. The rate-product
/// terms exchange momentum between the axes when `j_cz != j_cx`.
///
/// Takes no pendulum state: the joint reaction forces do not torque the
/// gimbal axes.
pub fn gimbal_accel(
    beta: f64,
    alpha_dot: f64,
    beta_dot: f64,
    tau_alpha: f64,
    tau_beta: f64,
    p: &PlantParams,
) -> (f64, f64) {
    let (sb, cb) = beta.sin_cos();
    let sigma = p.j_cx * cb * cb + p.j_cz * sb * sb;
    let coupling = (p.j_cz - p.j_cx) * sb * cb;
    let alpha_ddot = (-2.0 * coupling * alpha_dot * beta_dot + tau_alpha) / sigma;
    let beta_ddot = (coupling * alpha_dot * alpha_dot + tau_beta) / p.j_cy;
    (alpha_ddot, beta_ddot)
}

/// Pendulum joint accelerations, with a graceful-degradation flag at the
/// vertical configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumAccel {
    pub theta1_ddot: f64,
    pub theta2_ddot: f64,
    /// True when `|cos(theta1)|` is below the singularity threshold: the
    /// azimuth acceleration is undefined there, so the azimuth rate is held
    /// (`theta2_ddot = 0`) instead of producing a non-finite value.
    pub singular: bool,
}

/// Elevation threshold on `|cos(theta1)|` below which the azimuth equation
/// degenerates (rod vertical).
pub const VERTICAL_SINGULARITY_TOL: f64 = 1e-6;

/// Torque exerted on the rod by the thrust vector, about the rod y and z
/// axes (N·m). The thrust acts at the gimbal mount, `l_g` out along the rod;
/// only its components perpendicular to the rod produce torque.
pub fn thrust_torque(f: f64, alpha: f64, beta: f64, l_g: f64) -> (f64, f64) {
    let (sa, ca) = alpha.sin_cos();
    let cb = beta.cos();
    let t_y = -f * l_g * ca * cb;
    let t_z = -f * l_g * sa * cb;
    (t_y, t_z)
}

/// Pendulum joint accelerations under the actual thrust vector
/// `(f, alpha, beta)` and external disturbance torques `(tau_d1, tau_d2)`
/// on the elevation/azimuth channels.
///
/// Elevation: gravity plus the centrifugal moment of the azimuth rate, plus
/// the thrust torque. Azimuth: the torque balance holds for
/// `theta2_ddot * cos(theta1)`, so the azimuth acceleration grows as the rod
/// approaches vertical and is held at the singularity (see
/// [`PendulumAccel::singular`]).
pub fn pendulum_accel(
    state: &PlantState,
    f: f64,
    tau_d: (f64, f64),
    p: &PlantParams,
) -> PendulumAccel {
    let (s1, c1) = state.theta1.sin_cos();
    let j1 = p.j1();
    let j2 = p.j2();
    let (t_y, t_z) = thrust_torque(f, state.alpha, state.beta, p.l_g);

    let theta1_ddot = -(p.w_eff() * p.g * c1 + p.j_pz * state.theta2_dot * state.theta2_dot * s1 * c1)
        / j1
        - t_y / j1
        + tau_d.0 / j1;

    // Azimuth torque row, solved for theta2_ddot * cos(theta1):
    let rhs = state.theta1_dot * state.theta2_dot * s1 * (1.0 + p.j_py / j2) + (t_z + tau_d.1) / j2;
    let singular = c1.abs() < VERTICAL_SINGULARITY_TOL;
    let theta2_ddot = if singular { 0.0 } else { rhs / c1 };

    PendulumAccel { theta1_ddot, theta2_ddot, singular }
}

/// The assembled plant: mechanical parameters, rotor coefficients, and the
/// rotor first-order lag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plant {
    pub params: PlantParams,
    pub rotor: RotorParams,
    /// Rotor thrust first-order lag time constant, s. Zero disables the lag:
    /// the integrator then pins rotor states to the commanded thrusts.
    pub rotor_tau: f64,
}

impl Plant {
    pub fn new(params: PlantParams, rotor: RotorParams, rotor_tau: f64) -> Self {
        Self { params, rotor, rotor_tau }
    }

    /// Full state derivative under commanded rotor thrusts and external
    /// disturbances. With `pin_pendulum` the pendulum states are frozen
    /// (launch clamp engaged / bench-mounted gimbal test); the gimbal and
    /// rotor states still evolve.
    ///
    /// Returns the derivative and the azimuth-singularity flag encountered
    /// at this evaluation.
    pub fn derivative(
        &self,
        t: f64,
        y: &[f64; STATE_DIM],
        commanded: &[f64; 4],
        disturbances: &[Disturbance],
        pin_pendulum: bool,
    ) -> ([f64; STATE_DIM], bool) {
        let state = PlantState::from_vector(y);
        let (f, tau_body) = rotor_wrench(&state.rotors, &self.rotor);

        // Torques about the gimbal joint axes from the copter body torque.
        let (sb, cb) = state.beta.sin_cos();
        let tau_alpha = tau_body.x * cb + tau_body.z * sb;
        let tau_beta = tau_body.y;
        let (alpha_ddot, beta_ddot) = gimbal_accel(
            state.beta,
            state.alpha_dot,
            state.beta_dot,
            tau_alpha,
            tau_beta,
            &self.params,
        );

        let mut deriv = [0.0; STATE_DIM];
        let mut singular = false;
        if !pin_pendulum {
            let tau_d = disturbance_torque(disturbances, t);
            let acc = pendulum_accel(&state, f, tau_d, &self.params);
            deriv[0] = state.theta1_dot;
            deriv[1] = state.theta2_dot;
            deriv[2] = acc.theta1_ddot;
            deriv[3] = acc.theta2_ddot;
            singular = acc.singular;
        }
        deriv[4] = state.alpha_dot;
        deriv[5] = state.beta_dot;
        deriv[6] = alpha_ddot;
        deriv[7] = beta_ddot;
        if self.rotor_tau > 0.0 {
            for i in 0..4 {
                deriv[8 + i] = (commanded[i] - state.rotors[i]) / self.rotor_tau;
            }
        }
        (deriv, singular)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p() -> PlantParams {
        PlantParams::default()
    }

    #[test]
    fn default_params_validate() {
        p().validate().unwrap();
        RotorParams::default().validate().unwrap();
    }

    #[test]
    fn asymmetric_inertia_is_rejected() {
        let mut bad = p();
        bad.j_cy = 2.0 * bad.j_cx;
        assert!(bad.validate().is_err());
        let mut bad = p();
        bad.j_pz = 1.1 * bad.j_py;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn unpowered_horizontal_rod_falls_at_gravity_moment_rate() {
        let state = PlantState::at_rest(0.0, 0.0, 0.0, 0.0, [0.0; 4]);
        let acc = pendulum_accel(&state, 0.0, (0.0, 0.0), &p());
        // hand-derived -w_eff*g/j1 = -(0.026*0.337 + 0.011*0.285)*9.81
        //                            / (8.9347e-4 + 0.026*0.337^2)
        assert_abs_diff_eq!(acc.theta1_ddot, -30.343619158747295, epsilon = 1e-9);
        assert_eq!(acc.theta2_ddot, 0.0);
        assert!(!acc.singular);
    }

    #[test]
    fn hover_thrust_balances_gravity_exactly() {
        let plant = p();
        let state = PlantState::at_rest(0.0, 0.0, 0.0, 0.0, [0.0; 4]);
        let acc = pendulum_accel(&state, plant.hover_thrust(), (0.0, 0.0), &plant);
        assert_abs_diff_eq!(acc.theta1_ddot, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(acc.theta2_ddot, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn azimuth_step_torque_accelerates_at_effective_inertia() {
        let plant = p();
        let state = PlantState::at_rest(0.0, 0.0, 0.0, 0.0, [0.0; 4]);
        let acc = pendulum_accel(&state, plant.hover_thrust(), (0.0, 0.02), &plant);
        assert_abs_diff_eq!(acc.theta2_ddot, 0.02 / plant.j2(), epsilon = 1e-12);
        assert_abs_diff_eq!(acc.theta2_ddot, 5.20, epsilon = 5e-3);
    }

    #[test]
    fn vertical_rod_holds_azimuth_rate_without_nan() {
        let plant = p();
        let mut state = PlantState::at_rest(std::f64::consts::FRAC_PI_2, 0.3, 0.0, 0.0, [0.0; 4]);
        state.theta1_dot = 0.1;
        state.theta2_dot = 2.0;
        let acc = pendulum_accel(&state, 0.2, (0.0, 0.01), &plant);
        assert!(acc.singular);
        assert_eq!(acc.theta2_ddot, 0.0);
        assert!(acc.theta1_ddot.is_finite());
    }

    #[test]
    fn gimbal_accel_is_torque_over_inertia_at_rest() {
        let plant = p();
        // centered inner axis: outer inertia is j_cx
        let (add, bdd) = gimbal_accel(0.0, 0.0, 0.0, 1e-4, 2e-4, &plant);
        assert_abs_diff_eq!(add, 1e-4 / plant.j_cx, epsilon = 1e-9);
        assert_abs_diff_eq!(bdd, 2e-4 / plant.j_cy, epsilon = 1e-9);
        // inner axis at 90 deg: outer inertia becomes j_cz
        let (add, _) = gimbal_accel(std::f64::consts::FRAC_PI_2, 0.0, 0.0, 1e-4, 0.0, &plant);
        assert_abs_diff_eq!(add, 1e-4 / plant.j_cz, epsilon = 1e-6);
    }

    #[test]
    fn gimbal_rate_coupling_matches_closed_form() {
        let plant = p();
        let (beta, a_dot, b_dot): (f64, f64, f64) = (0.6, 2.0, -1.5);
        let (sb, cb) = beta.sin_cos();
        let sigma = plant.j_cx * cb * cb + plant.j_cz * sb * sb;
        let k = (plant.j_cz - plant.j_cx) * sb * cb;
        let (add, bdd) = gimbal_accel(beta, a_dot, b_dot, 0.0, 0.0, &plant);
        assert_abs_diff_eq!(add, -2.0 * k * a_dot * b_dot / sigma, epsilon = 1e-12);
        assert_abs_diff_eq!(bdd, k * a_dot * a_dot / plant.j_cy, epsilon = 1e-12);
    }

    #[test]
    fn disturbance_pulse_windows() {
        let d = Disturbance {
            channel: DisturbanceChannel::Theta1,
            start: 5.0,
            duration: Some(0.05),
            magnitude: 0.1,
        };
        assert_eq!(d.torque_at(4.999), (0.0, 0.0));
        assert_eq!(d.torque_at(5.0), (0.1, 0.0));
        assert_eq!(d.torque_at(5.049), (0.1, 0.0));
        assert_eq!(d.torque_at(5.051), (0.0, 0.0));
        let step = Disturbance {
            channel: DisturbanceChannel::Theta2,
            start: 15.0,
            duration: None,
            magnitude: 0.02,
        };
        assert_eq!(step.torque_at(14.0), (0.0, 0.0));
        assert_eq!(step.torque_at(1e6), (0.0, 0.02));
    }

    #[test]
    fn state_vector_round_trip() {
        let mut s = PlantState::at_rest(0.1, -0.2, 0.3, -0.4, [0.01, 0.02, 0.03, 0.04]);
        s.theta1_dot = 0.5;
        s.beta_dot = -0.6;
        assert_eq!(PlantState::from_vector(&s.to_vector()), s);
    }

    #[test]
    fn pinned_pendulum_keeps_pendulum_rows_zero() {
        let plant = Plant::new(p(), RotorParams::default(), 0.02);
        let state = PlantState::at_rest(0.3, 0.0, 0.0, 0.0, [0.05; 4]);
        let (deriv, _) = plant.derivative(0.0, &state.to_vector(), &[0.08; 4], &[], true);
        assert_eq!(&deriv[0..4], &[0.0; 4]);
        // rotor lag still active
        assert_abs_diff_eq!(deriv[8], (0.08 - 0.05) / 0.02, epsilon = 1e-12);
    }
}
