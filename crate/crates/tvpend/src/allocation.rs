//! Over-actuation resolution: pendulum torque command -> gimbal-frame
//! thrust vector -> (total thrust, gimbal angle references) -> body
//! torques -> rotor thrusts.
//!
//! The lateral components are fixed by the torque demand
//! (`F_z = -T_Y / L_g`, `F_y = T_Z / L_g`); the component along the
//! pendulum arm is free. Away from vertical it is chosen to keep the
//! copter horizontal (`F_x = |tan(theta1)| * ||(F_y, F_z)||`), near
//! vertical it instead supports the combined weight along the world
//! up-axis, and a linear blend connects the two regimes. Inside the
//! vertical band the azimuth channel is faded out and then cut: the
//! thrust vector cannot produce an azimuth torque without tilting away
//! from the balance-critical plane.

use serde::{Deserialize, Serialize};

use crate::frames::{Copter, Gimbal, Vec3};
use crate::kinematics::{mix_to_rotors, RotorCommand, RotorParams};
use crate::plant::PlantParams;

/// Vertical-band policy: `band` is the half-width of the singular region
/// around `theta1 = pi/2`; the blend from the horizontal-copter rule to
/// the weight-support rule spans the outer `blend_width` of that band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SingularityPolicy {
    pub band: f64,
    pub blend_width: f64,
}

impl Default for SingularityPolicy {
    fn default() -> Self {
        Self {
            band: std::f64::consts::PI / 9.0,
            blend_width: std::f64::consts::PI / 18.0,
        }
    }
}

impl SingularityPolicy {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.band.is_finite() && self.band > 0.0 && self.band < std::f64::consts::FRAC_PI_2) {
            return Err(format!(
                "singularity band must lie in (0, pi/2), got {}",
                self.band
            ));
        }
        if !(self.blend_width.is_finite() && self.blend_width > 0.0 && self.blend_width <= self.band)
        {
            return Err(format!(
                "blend width must lie in (0, band = {}], got {}",
                self.band, self.blend_width
            ));
        }
        Ok(())
    }

    /// Weight of the vertical-mode thrust policy at elevation `theta1`:
    /// 0 outside the band, ramping linearly to 1 across the blend zone,
    /// 1 in the core around vertical.
    pub fn vertical_weight(&self, theta1: f64) -> f64 {
        let s = (theta1 - std::f64::consts::FRAC_PI_2).abs();
        ((self.band - s) / self.blend_width).clamp(0.0, 1.0)
    }
}

/// Which thrust policy produced a command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AllocationMode {
    /// Horizontal-copter rule, full azimuth authority.
    Normal,
    /// Linear mix of the two rules with the given vertical weight in (0, 1).
    Blend { weight: f64 },
    /// Weight-support rule, azimuth channel cut.
    Singular,
}

/// Resolved thrust command: total thrust magnitude, gimbal angle
/// references realizing the thrust direction, and the gimbal-frame force
/// vector they encode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThrustCommand {
    /// Total thrust, N (`= ||force||`).
    pub f: f64,
    /// Outer gimbal angle reference, rad.
    pub alpha_d: f64,
    /// Inner gimbal angle reference, rad (in [-pi/2, pi/2]).
    pub beta_d: f64,
    /// Thrust vector in the gimbal base frame, N.
    pub force: Vec3<Gimbal>,
    pub mode: AllocationMode,
    /// The torque-bearing lateral components themselves exceeded the
    /// total-thrust capability and had to be scaled down: the commanded
    /// pendulum torque is not realized this tick. Shrinking only the free
    /// axial component (the first resort) does not raise this flag — the
    /// torque demand is still met exactly there.
    pub infeasible: bool,
}

/// Thrust direction encoded by gimbal angles, scaled to magnitude `f`:
/// the rotor axis seen from the gimbal base frame.
pub fn thrust_vector_from_fab(f: f64, alpha: f64, beta: f64) -> Vec3<Gimbal> {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    Vec3::new(f * sb, -f * sa * cb, f * ca * cb)
}

/// Inverse of [`thrust_vector_from_fab`]: magnitude plus the gimbal
/// angles pointing the rotor axis along `force`. Zero force maps to
/// (0, 0, 0) so the gimbal holds attitude under zero thrust.
pub fn fab_from_thrust_vector(force: &Vec3<Gimbal>) -> (f64, f64, f64) {
    let f = force.norm();
    if f == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let alpha = (-force.y).atan2(force.z);
    let beta = (force.x / f).clamp(-1.0, 1.0).asin();
    (f, alpha, beta)
}

/// Resolve a pendulum torque demand `(t_y, t_z)` at elevation `theta1`
/// into a thrust command.
pub fn torque_to_thrust_vector(
    t_y: f64,
    t_z: f64,
    theta1: f64,
    plant: &PlantParams,
    rotor: &RotorParams,
    policy: &SingularityPolicy,
) -> ThrustCommand {
    let f_z = -t_y / plant.l_g;
    let w = policy.vertical_weight(theta1);
    // Azimuth authority fades out across the blend zone and is cut in the
    // vertical core, where tilting the thrust vector would cost balance.
    let f_y = (1.0 - w) * (t_z / plant.l_g);

    let lateral = (f_y * f_y + f_z * f_z).sqrt();
    let mut f_x = 0.0;
    if w < 1.0 {
        // horizontal-copter rule; |tan| diverges toward vertical but the
        // (1 - w) factor has already vanished by then
        f_x += (1.0 - w) * theta1.tan().abs() * lateral;
    }
    if w > 0.0 {
        // support the combined weight along world-up: F_x s1 + F_z c1 = W g
        let (s1, c1) = theta1.sin_cos();
        f_x += w * ((plant.m_c + plant.m_p) * plant.g - f_z * c1) / s1;
    }

    // capability cap: shrink the free component first, the torque-bearing
    // lateral components only when those alone exceed the cap
    let cap = rotor.f_total_max();
    let mut force = Vec3::<Gimbal>::new(f_x, f_y, f_z);
    let mut infeasible = false;
    if force.norm() > cap {
        if lateral <= cap {
            let room = (cap * cap - lateral * lateral).max(0.0).sqrt();
            force = Vec3::new(f_x.signum() * room.min(f_x.abs()), f_y, f_z);
        } else {
            infeasible = true;
            let shrink = cap / lateral;
            force = Vec3::new(0.0, f_y * shrink, f_z * shrink);
        }
    }

    let (f, alpha_d, beta_d) = fab_from_thrust_vector(&force);
    let mode = if w <= 0.0 {
        AllocationMode::Normal
    } else if w >= 1.0 {
        AllocationMode::Singular
    } else {
        AllocationMode::Blend { weight: w }
    };
    ThrustCommand { f, alpha_d, beta_d, force, mode, infeasible }
}

/// Map gimbal joint torques to the copter body torque that realizes them
/// while putting no moment along the gimbal-frame z axis (the axis the
/// joints cannot react).
pub fn gimbal_torque_to_body(tau_alpha: f64, tau_beta: f64, beta: f64) -> Vec3<Copter> {
    let (sb, cb) = beta.sin_cos();
    Vec3::new(tau_alpha * cb, tau_beta, tau_alpha * sb)
}

/// Final stage: total thrust plus body torque into four rotor thrusts,
/// with per-rotor clamping flagged rather than aborted.
pub fn allocate_rotors(f: f64, tau: Vec3<Copter>, params: &RotorParams) -> RotorCommand {
    mix_to_rotors(f, tau, params)
}
