//! Pendulum attitude controller.
//!
//! The controller regulates the pendulum angles `(theta1, theta2)` by
//! commanding a torque pair `u = (T_Y, T_Z)` about the rod y/z axes, later
//! realized by the thrust allocation chain. One LQI gain acts on the
//! 6-state error vector `[e1, e2, e1_dot, e2_dot, int e1, int e2]`; the
//! three methods differ in the model the gain is designed for and in how
//! the virtual input is mapped to torque:
//!
//! * **SPL** — Taylor linearization at a fixed equilibrium elevation; the
//!   torque is the virtual input plus the equilibrium gravity compensation.
//!   Valid only near the design elevation.
//! * **SFL** — exact feedback linearization: the gravity, centrifugal, and
//!   gyroscopic terms are cancelled using measured state, leaving two
//!   decoupled double integrators.
//! * **PFL** — identical cancellation, except every rate product uses the
//!   commanded (reference) rates instead of measured rates, which blocks
//!   the noise-squaring path of SFL at the price of exactness during
//!   transients.

use nalgebra::{DMatrix, Matrix2, SMatrix, SVector, Vector2};
use thiserror::Error;

use crate::plant::PlantParams;
use crate::riccati::{solve_care, RiccatiError};
use crate::Method;

/// Threshold on `|cos(theta1)|` below which the azimuth input channel
/// vanishes and equilibrium models degenerate.
pub const EQUILIBRIUM_SINGULARITY_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum HighLevelError {
    #[error(
        "equilibrium elevation {theta1_eq} rad is too close to vertical: \
         the azimuth input channel vanishes there"
    )]
    SingularEquilibrium { theta1_eq: f64 },
    #[error(transparent)]
    Riccati(#[from] RiccatiError),
}

/// Wraps an angle to `[-pi, pi)`; azimuth errors are circular.
pub fn wrap_to_pi(x: f64) -> f64 {
    x - std::f64::consts::TAU * (x / std::f64::consts::TAU).round()
}

/// A linear (or feedback-linearized equivalent) pendulum model
/// `x_dot = A x + B u` on the state `[theta1, theta2, theta1_dot,
/// theta2_dot]` measured as deviations from the design point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearModel {
    pub a: SMatrix<f64, 4, 4>,
    pub b: SMatrix<f64, 4, 2>,
    /// Input holding the model at its design point (torque units; zero for
    /// the feedback-linearized models).
    pub u_eq: Vector2<f64>,
    /// Design elevation, rad.
    pub theta1_eq: f64,
}

/// Taylor linearization of the pendulum about a rest equilibrium at
/// elevation `theta1_eq`, with the torque pair as input.
///
/// The only nonzero dynamic entry is the gravity slope
/// `d(theta1_ddot)/d(theta1) = w_eff g sin(theta1_eq) / j1`: above the
/// horizontal, gravity destiffens the elevation axis. The azimuth input
/// gain carries the `1/cos(theta1_eq)` geometry factor.
pub fn linearize_spl(theta1_eq: f64, p: &PlantParams) -> Result<LinearModel, HighLevelError> {
    let (s1, c1) = theta1_eq.sin_cos();
    if c1.abs() <= EQUILIBRIUM_SINGULARITY_TOL {
        return Err(HighLevelError::SingularEquilibrium { theta1_eq });
    }
    let j1 = p.j1();
    let j2 = p.j2();
    let mut a = SMatrix::<f64, 4, 4>::zeros();
    a[(0, 2)] = 1.0;
    a[(1, 3)] = 1.0;
    a[(2, 0)] = p.w_eff() * p.g * s1 / j1;
    let mut b = SMatrix::<f64, 4, 2>::zeros();
    b[(2, 0)] = -1.0 / j1;
    b[(3, 1)] = 1.0 / (j2 * c1);
    Ok(LinearModel {
        a,
        b,
        u_eq: Vector2::new(-p.w_eff() * p.g * c1, 0.0),
        theta1_eq,
    })
}

/// The equivalent system seen through exact feedback linearization: two
/// decoupled double integrators with the virtual input in acceleration
/// units (zero drift block, identity input block).
pub fn sfl_model() -> LinearModel {
    let mut a = SMatrix::<f64, 4, 4>::zeros();
    a[(0, 2)] = 1.0;
    a[(1, 3)] = 1.0;
    let mut b = SMatrix::<f64, 4, 2>::zeros();
    b[(2, 0)] = 1.0;
    b[(3, 1)] = 1.0;
    LinearModel { a, b, u_eq: Vector2::zeros(), theta1_eq: 0.0 }
}

/// The model the LQI gain is synthesized on. For SPL this is the Taylor
/// model at the requested equilibrium. For SFL/PFL the shape is the double
/// integrator, but the input columns keep the physical torque scaling of
/// the level configuration — so one set of weights in torque units covers
/// all three methods, and the resulting virtual input is torque-dimensioned
/// everywhere.
pub fn design_model(
    method: Method,
    theta1_eq: f64,
    p: &PlantParams,
) -> Result<LinearModel, HighLevelError> {
    match method {
        Method::Spl => linearize_spl(theta1_eq, p),
        Method::Sfl | Method::Pfl => {
            let mut model = linearize_spl(0.0, p)?;
            model.u_eq = Vector2::zeros();
            Ok(model)
        }
    }
}

/// Augments a pendulum model with integrators on the two position errors:
/// state `[e1, e2, e1_dot, e2_dot, int e1, int e2]`.
pub fn augment(model: &LinearModel) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut a = DMatrix::<f64>::zeros(6, 6);
    for i in 0..4 {
        for j in 0..4 {
            a[(i, j)] = model.a[(i, j)];
        }
    }
    a[(4, 0)] = 1.0;
    a[(5, 1)] = 1.0;
    let mut b = DMatrix::<f64>::zeros(6, 2);
    for i in 0..4 {
        for j in 0..2 {
            b[(i, j)] = model.b[(i, j)];
        }
    }
    (a, b)
}

/// LQI weights and actuator limits for the pendulum loop.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LqiWeights {
    /// Diagonal of Q over `[e1, e2, e1_dot, e2_dot, int e1, int e2]`.
    pub q_diag: [f64; 6],
    /// Diagonal of R over the two torque channels.
    pub r_diag: [f64; 2],
    /// Anti-windup clamp on each integral state, rad·s.
    pub integral_clamp: f64,
    /// Saturation bound on each torque channel, N·m.
    pub torque_bound: f64,
}

impl Default for LqiWeights {
    fn default() -> Self {
        Self {
            q_diag: [1e4, 1e2, 0.0, 0.0, 1e2, 1e2],
            r_diag: [1e6, 1e6],
            integral_clamp: 5.0,
            torque_bound: 0.2022,
        }
    }
}

/// A synthesized LQI gain with its provenance.
#[derive(Debug, Clone)]
pub struct LqiGain {
    pub method: Method,
    /// Design elevation of the underlying model, rad.
    pub theta1_eq: f64,
    /// Feedback gain over the augmented error state; the virtual input is
    /// `eta = -K x_aug`, torque-dimensioned.
    pub k: SMatrix<f64, 2, 6>,
    /// Riccati cost matrix.
    pub p_cost: DMatrix<f64>,
    /// Riccati residual achieved at synthesis.
    pub residual: f64,
    /// Newton steps used by the Riccati solve.
    pub iterations: usize,
    /// Equilibrium torque of the design model (SPL only; zero otherwise).
    pub u_eq: Vector2<f64>,
    /// Input map of the design model (torque to acceleration), used to
    /// convert the virtual input for the feedback-linearizing methods.
    pub b2: Matrix2<f64>,
}

/// Synthesizes the LQI gain for a method at a design elevation. The
/// closed design loop is verified Hurwitz and the Riccati residual is
/// checked at synthesis time; both are hard errors otherwise.
pub fn synthesize_gain(
    method: Method,
    theta1_eq: f64,
    p: &PlantParams,
    w: &LqiWeights,
) -> Result<LqiGain, HighLevelError> {
    let model = design_model(method, theta1_eq, p)?;
    let (a_aug, b_aug) = augment(&model);
    let q = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&w.q_diag));
    let r = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&w.r_diag));
    let sol = solve_care(&a_aug, &b_aug, &q, &r)?;
    let k = SMatrix::<f64, 2, 6>::from_iterator(sol.k.iter().cloned());
    let b2 = Matrix2::new(
        model.b[(2, 0)],
        model.b[(2, 1)],
        model.b[(3, 0)],
        model.b[(3, 1)],
    );
    Ok(LqiGain {
        method,
        theta1_eq: model.theta1_eq,
        k,
        p_cost: sol.p,
        residual: sol.residual,
        iterations: sol.iterations,
        u_eq: model.u_eq,
        b2,
    })
}

/// Pendulum measurements as delivered by the sensor chain (filtered encoder
/// angles and first-difference rates). Controllers consume this record type
/// only — nothing in the control path accepts a true plant state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumMeasurement {
    pub theta1: f64,
    pub theta2: f64,
    pub theta1_dot: f64,
    pub theta2_dot: f64,
}

/// Reference pose and feedforward rates for the pendulum loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumReference {
    pub theta1: f64,
    pub theta2: f64,
    pub theta1_dot: f64,
    pub theta2_dot: f64,
}

/// Torque command for the rod axes, with saturation/singularity flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorqueCommand {
    /// Torque about the rod y axis, N·m.
    pub t_y: f64,
    /// Torque about the rod z axis, N·m.
    pub t_z: f64,
    /// A channel hit the torque bound and was clamped.
    pub saturated: bool,
    /// The rod is inside the vertical singularity band: the azimuth channel
    /// has (nearly) no authority. The command stays finite.
    pub singular: bool,
}

/// Exact feedback-linearizing torque for a desired acceleration pair
/// `eta = (theta1_ddot, theta2_ddot)`, using the given rates in the
/// centrifugal/gyroscopic terms.
///
/// Written division-free: `T_Z` carries a `cos(theta1)` factor instead of
/// the input map carrying `1/cos`, so the command stays finite through the
/// vertical — where the flag reports that azimuth authority is lost.
fn feedback_linearized_torque(
    theta1: f64,
    rate1: f64,
    rate2: f64,
    eta: (f64, f64),
    p: &PlantParams,
) -> TorqueCommand {
    let (s1, c1) = theta1.sin_cos();
    let j1 = p.j1();
    let j2 = p.j2();
    let t_y = -j1 * eta.0 - p.w_eff() * p.g * c1 - p.j_pz * rate2 * rate2 * s1 * c1;
    let t_z = j2 * c1 * eta.1 - (j2 + p.j_py) * rate1 * rate2 * s1;
    TorqueCommand {
        t_y,
        t_z,
        saturated: false,
        singular: c1.abs() < EQUILIBRIUM_SINGULARITY_TOL,
    }
}

/// State feedback linearization: cancellation terms use the measured rates.
/// In the noise-free plant the closed dynamics become exactly
/// `theta_ddot = eta`.
pub fn sfl_input(meas: &PendulumMeasurement, eta: (f64, f64), p: &PlantParams) -> TorqueCommand {
    feedback_linearized_torque(meas.theta1, meas.theta1_dot, meas.theta2_dot, eta, p)
}

/// Partial feedback linearization: cancellation terms use the commanded
/// rates, so measurement noise never enters quadratically. With commanded
/// rates equal to measured rates this is bit-identical to [`sfl_input`].
pub fn pfl_input(
    meas: &PendulumMeasurement,
    commanded_rates: (f64, f64),
    eta: (f64, f64),
    p: &PlantParams,
) -> TorqueCommand {
    feedback_linearized_torque(meas.theta1, commanded_rates.0, commanded_rates.1, eta, p)
}

/// The stateful pendulum controller: one LQI gain plus the trapezoidal
/// error integrators with anti-windup.
#[derive(Debug, Clone)]
pub struct HighLevelCtl {
    pub gain: LqiGain,
    integral_clamp: f64,
    torque_bound: f64,
    x_int: Vector2<f64>,
    prev_err: Option<Vector2<f64>>,
}

impl HighLevelCtl {
    pub fn new(gain: LqiGain, w: &LqiWeights) -> Self {
        Self {
            gain,
            integral_clamp: w.integral_clamp,
            torque_bound: w.torque_bound,
            x_int: Vector2::zeros(),
            prev_err: None,
        }
    }

    /// Current integral states, rad·s.
    pub fn integral_state(&self) -> (f64, f64) {
        (self.x_int[0], self.x_int[1])
    }

    pub fn reset(&mut self) {
        self.x_int = Vector2::zeros();
        self.prev_err = None;
    }

    /// One controller tick at period `dt`. Integrates the position errors
    /// by the trapezoid rule (the first tick only latches the error), forms
    /// the virtual input from the augmented error state, and maps it to a
    /// torque command by the configured method.
    pub fn step(
        &mut self,
        meas: &PendulumMeasurement,
        reference: &PendulumReference,
        dt: f64,
        p: &PlantParams,
    ) -> TorqueCommand {
        let e = Vector2::new(
            meas.theta1 - reference.theta1,
            wrap_to_pi(meas.theta2 - reference.theta2),
        );
        let e_dot = Vector2::new(
            meas.theta1_dot - reference.theta1_dot,
            meas.theta2_dot - reference.theta2_dot,
        );
        if let Some(prev) = self.prev_err {
            self.x_int += (e + prev) * (0.5 * dt);
            for i in 0..2 {
                self.x_int[i] = self.x_int[i].clamp(-self.integral_clamp, self.integral_clamp);
            }
        }
        self.prev_err = Some(e);

        let x_aug = SVector::<f64, 6>::from_column_slice(&[
            e[0], e[1], e_dot[0], e_dot[1], self.x_int[0], self.x_int[1],
        ]);
        let eta = -(self.gain.k * x_aug);

        let (u, singular) = match self.gain.method {
            Method::Spl => (eta + self.gain.u_eq, false),
            Method::Sfl => {
                let eta_acc = self.gain.b2 * eta;
                let cmd = sfl_input(meas, (eta_acc[0], eta_acc[1]), p);
                (Vector2::new(cmd.t_y, cmd.t_z), cmd.singular)
            }
            Method::Pfl => {
                let eta_acc = self.gain.b2 * eta;
                let cmd = pfl_input(
                    meas,
                    (reference.theta1_dot, reference.theta2_dot),
                    (eta_acc[0], eta_acc[1]),
                    p,
                );
                (Vector2::new(cmd.t_y, cmd.t_z), cmd.singular)
            }
        };

        let bound = self.torque_bound;
        let saturated = u[0].abs() > bound || u[1].abs() > bound;
        TorqueCommand {
            t_y: u[0].clamp(-bound, bound),
            t_z: u[1].clamp(-bound, bound),
            saturated,
            singular,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{pendulum_accel, PlantState};
    use approx::assert_abs_diff_eq;

    fn p() -> PlantParams {
        PlantParams::default()
    }

    /// Evaluates the true pendulum acceleration under a torque-pair input by
    /// converting the torques to an equivalent thrust vector and running the
    /// full nonlinear dynamics — an oracle independent of the controller
    /// algebra.
    fn plant_accel(state: [f64; 4], u: (f64, f64), plant: &PlantParams) -> [f64; 4] {
        let f_z = -u.0 / plant.l_g;
        let f_y = u.1 / plant.l_g;
        let f = (f_y * f_y + f_z * f_z).sqrt();
        let alpha = (-f_y).atan2(f_z);
        let mut s = PlantState::at_rest(state[0], state[1], alpha, 0.0, [0.0; 4]);
        s.theta1_dot = state[2];
        s.theta2_dot = state[3];
        let acc = pendulum_accel(&s, f, (0.0, 0.0), plant);
        [state[2], state[3], acc.theta1_ddot, acc.theta2_ddot]
    }

    #[test]
    fn level_equilibrium_model_values() {
        let m = linearize_spl(0.0, &p()).unwrap();
        assert_eq!(m.a[(2, 0)], 0.0); // gravity slope vanishes at level
        assert_abs_diff_eq!(m.b[(2, 0)], -260.0, epsilon = 0.05);
        assert_abs_diff_eq!(m.u_eq[0], -0.11670, epsilon = 2e-5);
        assert_eq!(m.u_eq[1], 0.0);
    }

    #[test]
    fn raised_equilibrium_is_destiffened() {
        let m = linearize_spl(std::f64::consts::FRAC_PI_4, &p()).unwrap();
        assert!(m.a[(2, 0)] > 0.0);
        // azimuth input gain grows with elevation
        let m0 = linearize_spl(0.0, &p()).unwrap();
        assert!(m.b[(3, 1)] > m0.b[(3, 1)]);
    }

    #[test]
    fn vertical_equilibrium_is_rejected() {
        assert!(matches!(
            linearize_spl(std::f64::consts::FRAC_PI_2, &p()),
            Err(HighLevelError::SingularEquilibrium { .. })
        ));
    }

    #[test]
    fn equilibrium_torque_matches_root_found_balance() {
        // bisection on the true dynamics: T_Y with zero elevation accel
        let plant = p();
        for theta1_eq in [0.0, 0.5, -0.4] {
            let m = linearize_spl(theta1_eq, &plant).unwrap();
            let f = |t_y: f64| plant_accel([theta1_eq, 0.0, 0.0, 0.0], (t_y, 0.0), &plant)[2];
            let (mut lo, mut hi) = (-0.5, 0.5);
            assert!(f(lo) * f(hi) < 0.0);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if f(lo) * f(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            assert_abs_diff_eq!(m.u_eq[0], 0.5 * (lo + hi), epsilon = 1e-10);
        }
    }

    #[test]
    fn taylor_model_matches_central_finite_differences() {
        let plant = p();
        let h = 1e-6;
        for theta1_eq in [0.0, 0.3, -0.6] {
            let m = linearize_spl(theta1_eq, &plant).unwrap();
            let x_eq = [theta1_eq, 0.0, 0.0, 0.0];
            let u_eq = (m.u_eq[0], m.u_eq[1]);
            for j in 0..4 {
                let mut xp = x_eq;
                let mut xm = x_eq;
                xp[j] += h;
                xm[j] -= h;
                let gp = plant_accel(xp, u_eq, &plant);
                let gm = plant_accel(xm, u_eq, &plant);
                for i in 0..4 {
                    let fd = (gp[i] - gm[i]) / (2.0 * h);
                    let a = m.a[(i, j)];
                    assert!(
                        (fd - a).abs() <= 1e-6 * (1.0 + a.abs().max(fd.abs())),
                        "A[{i}][{j}] at eq {theta1_eq}: fd {fd} vs model {a}"
                    );
                }
            }
            for j in 0..2 {
                let mut up = u_eq;
                let mut um = u_eq;
                if j == 0 {
                    up.0 += h;
                    um.0 -= h;
                } else {
                    up.1 += h;
                    um.1 -= h;
                }
                let gp = plant_accel(x_eq, up, &plant);
                let gm = plant_accel(x_eq, um, &plant);
                for i in 0..4 {
                    let fd = (gp[i] - gm[i]) / (2.0 * h);
                    let b = m.b[(i, j)];
                    assert!(
                        (fd - b).abs() <= 1e-6 * (1.0 + b.abs().max(fd.abs())),
                        "B[{i}][{j}] at eq {theta1_eq}: fd {fd} vs model {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn sfl_produces_requested_acceleration_exactly() {
        let plant = p();
        // from rest at level: unit elevation acceleration
        let meas = PendulumMeasurement { theta1: 0.0, theta2: 0.0, theta1_dot: 0.0, theta2_dot: 0.0 };
        let cmd = sfl_input(&meas, (1.0, 0.0), &plant);
        let acc = plant_accel([0.0, 0.0, 0.0, 0.0], (cmd.t_y, cmd.t_z), &plant);
        assert_abs_diff_eq!(acc[2], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(acc[3], 0.0, epsilon = 1e-9);

        // at a generic state with rates, both channels
        let meas = PendulumMeasurement { theta1: 0.7, theta2: -0.9, theta1_dot: 0.5, theta2_dot: -1.2 };
        let eta = (0.3, -0.4);
        let cmd = sfl_input(&meas, eta, &plant);
        assert!(!cmd.singular);
        let acc = plant_accel([0.7, -0.9, 0.5, -1.2], (cmd.t_y, cmd.t_z), &plant);
        assert_abs_diff_eq!(acc[2], eta.0, epsilon = 1e-9);
        assert_abs_diff_eq!(acc[3], eta.1, epsilon = 1e-9);
    }

    #[test]
    fn sfl_stays_finite_through_vertical() {
        let plant = p();
        let meas = PendulumMeasurement {
            theta1: std::f64::consts::FRAC_PI_2,
            theta2: 0.0,
            theta1_dot: 0.4,
            theta2_dot: 1.0,
        };
        let cmd = sfl_input(&meas, (1.0, 1.0), &plant);
        assert!(cmd.singular);
        assert!(cmd.t_y.is_finite() && cmd.t_z.is_finite());
    }

    #[test]
    fn pfl_with_zero_commanded_rates_has_no_rate_compensation() {
        let plant = p();
        let meas = PendulumMeasurement { theta1: 0.4, theta2: 0.0, theta1_dot: 3.0, theta2_dot: -2.0 };
        let cmd = pfl_input(&meas, (0.0, 0.0), (0.0, 0.0), &plant);
        // pure gravity compensation: measured rates never enter
        assert_eq!(cmd.t_y, -plant.w_eff() * plant.g * 0.4f64.cos());
        assert_eq!(cmd.t_z, 0.0);
    }

    #[test]
    fn pfl_equals_sfl_bitwise_when_rates_match() {
        let plant = p();
        let meas = PendulumMeasurement { theta1: 0.37, theta2: 1.1, theta1_dot: -0.8, theta2_dot: 0.65 };
        let eta = (0.21, -0.13);
        let a = sfl_input(&meas, eta, &plant);
        let b = pfl_input(&meas, (meas.theta1_dot, meas.theta2_dot), eta, &plant);
        assert_eq!(a.t_y.to_bits(), b.t_y.to_bits());
        assert_eq!(a.t_z.to_bits(), b.t_z.to_bits());
    }

    #[test]
    fn augmented_model_has_integrator_rows() {
        let m = sfl_model();
        let (a, b) = augment(&m);
        assert_eq!((a.nrows(), a.ncols()), (6, 6));
        assert_eq!((b.nrows(), b.ncols()), (6, 2));
        assert_eq!(a[(4, 0)], 1.0);
        assert_eq!(a[(5, 1)], 1.0);
        // integrators feed from positions only and have no dynamics of their own
        for j in 2..6 {
            assert_eq!(a[(4, j)], 0.0);
            assert_eq!(a[(5, j)], 0.0);
        }
        assert_eq!(b[(4, 0)], 0.0);
        assert_eq!(b[(5, 1)], 0.0);
    }

    #[test]
    fn synthesized_gains_close_the_design_loop() {
        let plant = p();
        let w = LqiWeights::default();
        for (method, eq) in [
            (Method::Spl, 0.0),
            (Method::Spl, std::f64::consts::FRAC_PI_6),
            (Method::Sfl, 0.0),
            (Method::Pfl, 0.0),
        ] {
            let gain = synthesize_gain(method, eq, &plant, &w).unwrap();
            assert!(gain.residual < 1e-9 * (1.0 + gain.p_cost.norm()));
            // closed-loop bandwidth envelope of the elevation channel
            let omega1 = (gain.k[(0, 0)].abs() / plant.j1()).sqrt();
            assert!(
                (3.0..8.0).contains(&omega1),
                "{method} elevation stiffness out of envelope: {omega1} rad/s"
            );
            let omega2 = (gain.k[(1, 1)].abs() / plant.j2()).sqrt();
            assert!(
                (0.8..3.0).contains(&omega2),
                "{method} azimuth stiffness out of envelope: {omega2} rad/s"
            );
        }
    }

    #[test]
    fn sfl_and_level_spl_share_the_same_design_gain() {
        let plant = p();
        let w = LqiWeights::default();
        let spl = synthesize_gain(Method::Spl, 0.0, &plant, &w).unwrap();
        let sfl = synthesize_gain(Method::Sfl, 0.0, &plant, &w).unwrap();
        // at the level equilibrium the gravity slope vanishes, so the design
        // models coincide
        assert_abs_diff_eq!((spl.k - sfl.k).norm(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn integral_state_respects_antiwindup_clamp() {
        let plant = p();
        let w = LqiWeights { integral_clamp: 0.1, ..LqiWeights::default() };
        let gain = synthesize_gain(Method::Pfl, 0.0, &plant, &w).unwrap();
        let mut ctl = HighLevelCtl::new(gain, &w);
        let meas = PendulumMeasurement { theta1: 1.0, theta2: -1.0, theta1_dot: 0.0, theta2_dot: 0.0 };
        let refr = PendulumReference { theta1: 0.0, theta2: 0.0, theta1_dot: 0.0, theta2_dot: 0.0 };
        for _ in 0..10_000 {
            let cmd = ctl.step(&meas, &refr, 0.01, &plant);
            let (i1, i2) = ctl.integral_state();
            assert!(i1.abs() <= 0.1 + 1e-12 && i2.abs() <= 0.1 + 1e-12);
            assert!(cmd.t_y.abs() <= w.torque_bound && cmd.t_z.abs() <= w.torque_bound);
        }
        let (i1, i2) = ctl.integral_state();
        assert_eq!(i1, 0.1);
        assert_eq!(i2, -0.1);
    }

    #[test]
    fn torque_saturation_clamps_and_flags() {
        let plant = p();
        let w = LqiWeights::default();
        let gain = synthesize_gain(Method::Sfl, 0.0, &plant, &w).unwrap();
        let mut ctl = HighLevelCtl::new(gain, &w);
        let meas = PendulumMeasurement { theta1: 2.0, theta2: 3.0, theta1_dot: 5.0, theta2_dot: -5.0 };
        let refr = PendulumReference { theta1: 0.0, theta2: 0.0, theta1_dot: 0.0, theta2_dot: 0.0 };
        let cmd = ctl.step(&meas, &refr, 0.01, &plant);
        assert!(cmd.saturated);
        assert!(cmd.t_y.abs() <= w.torque_bound + 1e-15);
        assert!(cmd.t_z.abs() <= w.torque_bound + 1e-15);
    }

    #[test]
    fn azimuth_error_wraps_across_the_seam() {
        assert_abs_diff_eq!(wrap_to_pi(3.0 * std::f64::consts::PI), -std::f64::consts::PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_to_pi(0.3), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(
            wrap_to_pi(std::f64::consts::TAU + 0.2),
            0.2,
            epsilon = 1e-12
        );
    }
}
