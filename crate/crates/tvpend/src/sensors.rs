//! Measurement chain: encoder quantization and filtering for the pendulum
//! angles, additive Gaussian noise for the gimbal attitude feedback, and the
//! first-difference rate estimator used by the pendulum controller.
//!
//! Controllers never see the true state — every feedback path runs through
//! this module. All randomness flows from the single seed in
//! [`SensorParams`], so runs are reproducible bit-for-bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Configuration of the full measurement chain.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorParams {
    /// Encoder resolution in counts per revolution; 0 disables quantization.
    pub encoder_counts: u32,
    /// Encoder packet rate, Hz. Packets arrive on the integer-phase grid of
    /// the physics clock (see the scheduler), giving the true uneven packet
    /// spacing of a slower asynchronous bus.
    pub encoder_rate_hz: f64,
    /// Single-pole low-pass cutoff applied to the quantized encoder angles,
    /// Hz. 0 (or anything at/above Nyquist of the packet rate) disables the
    /// filter.
    pub lowpass_cutoff_hz: f64,
    /// Std of the additive noise on the gimbal angles, rad.
    pub attitude_angle_std: f64,
    /// Std of the additive noise on the gimbal rates, rad/s.
    pub attitude_rate_std: f64,
    /// Seed for the noise generator.
    pub seed: u64,
    /// Master noise switch. When false, the noise stds act as zero and the
    /// encoder quantization is bypassed; the low-pass filter (a structural
    /// part of the loop, not a noise source) stays active.
    pub noise: bool,
}

impl Default for SensorParams {
    fn default() -> Self {
        Self {
            encoder_counts: 2048,
            encoder_rate_hz: 120.0,
            lowpass_cutoff_hz: 20.0,
            attitude_angle_std: 0.005,
            attitude_rate_std: 0.02,
            seed: 1,
            noise: true,
        }
    }
}

impl SensorParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.encoder_rate_hz.is_finite() && self.encoder_rate_hz > 0.0) {
            return Err(format!(
                "encoder_rate_hz must be finite and positive, got {}",
                self.encoder_rate_hz
            ));
        }
        for (name, v) in [
            ("lowpass_cutoff_hz", self.lowpass_cutoff_hz),
            ("attitude_angle_std", self.attitude_angle_std),
            ("attitude_rate_std", self.attitude_rate_std),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        Ok(())
    }
}

/// One encoder channel: quantize to the count grid, then low-pass at the
/// packet rate.
///
/// The filter is the bilinear discretization of a single-pole low-pass with
/// the cutoff prewarped, so the discrete gain at the cutoff frequency is
/// exactly `1/sqrt(2)`. The first packet initializes the filter state, so a
/// channel that starts at rest reports the (quantized) rest angle
/// immediately, with no startup transient.
#[derive(Debug, Clone, Copy)]
pub struct EncoderChannel {
    /// Angle quantum, rad; 0 disables quantization.
    quantum: f64,
    /// Prewarped coefficient `tan(pi * f_c * T)`; `None` disables filtering.
    coeff: Option<f64>,
    /// `(previous output, previous quantized input)`.
    state: Option<(f64, f64)>,
}

impl EncoderChannel {
    pub fn new(p: &SensorParams) -> Self {
        let quantum = if p.noise && p.encoder_counts > 0 {
            std::f64::consts::TAU / f64::from(p.encoder_counts)
        } else {
            0.0
        };
        let t = 1.0 / p.encoder_rate_hz;
        let fc = p.lowpass_cutoff_hz;
        let coeff = if fc > 0.0 && fc * t < 0.5 {
            Some((std::f64::consts::PI * fc * t).tan())
        } else {
            None
        };
        Self { quantum, coeff, state: None }
    }

    /// Processes one packet and returns the filtered angle, rad.
    pub fn sample(&mut self, angle: f64) -> f64 {
        let x = if self.quantum > 0.0 {
            (angle / self.quantum).round() * self.quantum
        } else {
            angle
        };
        let y = match (self.coeff, self.state) {
            (Some(c), Some((y_prev, x_prev))) => {
                ((1.0 - c) * y_prev + c * (x + x_prev)) / (1.0 + c)
            }
            _ => x,
        };
        self.state = Some((y, x));
        y
    }
}

/// Additive Gaussian noise on the gimbal attitude feedback, fed from a
/// seeded counter-based generator. Values are drawn in a fixed order
/// (angle a, angle b, rate a, rate b), so a given seed always produces the
/// same run.
#[derive(Debug, Clone)]
pub struct AttitudeSensor {
    rng: ChaCha8Rng,
    angle_std: f64,
    rate_std: f64,
}

/// One attitude feedback packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeMeasurement {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_dot: f64,
    pub beta_dot: f64,
}

impl AttitudeSensor {
    pub fn new(p: &SensorParams) -> Self {
        let (angle_std, rate_std) = if p.noise {
            (p.attitude_angle_std, p.attitude_rate_std)
        } else {
            (0.0, 0.0)
        };
        Self { rng: ChaCha8Rng::seed_from_u64(p.seed), angle_std, rate_std }
    }

    /// Standard normal draw via the Box-Muller transform (the cosine
    /// branch). Two uniforms per draw keeps the stream length fixed, which
    /// keeps runs bit-reproducible regardless of the values drawn.
    fn standard_normal(&mut self) -> f64 {
        let u1: f64 = 1.0 - self.rng.gen::<f64>(); // (0, 1]: log stays finite
        let u2: f64 = self.rng.gen();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn sample(
        &mut self,
        alpha: f64,
        beta: f64,
        alpha_dot: f64,
        beta_dot: f64,
    ) -> AttitudeMeasurement {
        if self.angle_std == 0.0 && self.rate_std == 0.0 {
            return AttitudeMeasurement { alpha, beta, alpha_dot, beta_dot };
        }
        AttitudeMeasurement {
            alpha: alpha + self.angle_std * self.standard_normal(),
            beta: beta + self.angle_std * self.standard_normal(),
            alpha_dot: alpha_dot + self.rate_std * self.standard_normal(),
            beta_dot: beta_dot + self.rate_std * self.standard_normal(),
        }
    }
}

/// First-difference rate estimator. Returns 0 until two samples have been
/// seen; callers sample it on their own fixed clock.
#[derive(Debug, Clone, Copy, Default)]
pub struct FirstDifference {
    prev: Option<(f64, f64)>,
}

impl FirstDifference {
    pub fn rate(&mut self, t: f64, value: f64) -> f64 {
        let rate = match self.prev {
            Some((t_prev, v_prev)) if t > t_prev => (value - v_prev) / (t - t_prev),
            _ => 0.0,
        };
        self.prev = Some((t, value));
        rate
    }
}

/// The assembled measurement chain for one run.
#[derive(Debug, Clone)]
pub struct SensorSuite {
    pub encoder_theta1: EncoderChannel,
    pub encoder_theta2: EncoderChannel,
    pub attitude: AttitudeSensor,
}

impl SensorSuite {
    pub fn new(p: &SensorParams) -> Self {
        Self {
            encoder_theta1: EncoderChannel::new(p),
            encoder_theta2: EncoderChannel::new(p),
            attitude: AttitudeSensor::new(p),
        }
    }

    /// Processes one encoder packet for both pendulum angles.
    pub fn read_encoders(&mut self, theta1: f64, theta2: f64) -> (f64, f64) {
        (self.encoder_theta1.sample(theta1), self.encoder_theta2.sample(theta2))
    }

    /// Produces one attitude feedback packet for the gimbal servo.
    pub fn read_attitude(&mut self, alpha: f64, beta: f64, alpha_dot: f64, beta_dot: f64) -> AttitudeMeasurement {
        self.attitude.sample(alpha, beta, alpha_dot, beta_dot)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(noise: bool) -> SensorParams {
        SensorParams { noise, ..SensorParams::default() }
    }

    #[test]
    fn constant_input_settles_at_quantized_value() {
        let mut ch = EncoderChannel::new(&params(true));
        let quantum = std::f64::consts::TAU / 2048.0;
        let angle = 0.1;
        let expected = (angle / quantum).round() * quantum;
        let mut y = 0.0;
        for _ in 0..50 {
            y = ch.sample(angle);
        }
        assert_abs_diff_eq!(y, expected, epsilon = 1e-12);
        assert!((expected - angle).abs() <= quantum / 2.0 + 1e-15);
    }

    #[test]
    fn filter_gain_at_cutoff_is_half_power() {
        // quantization off so the gain measurement is clean
        let p = params(false);
        let mut ch = EncoderChannel::new(&p);
        let t_s = 1.0 / p.encoder_rate_hz;
        let f = p.lowpass_cutoff_hz;
        let mut samples = Vec::new();
        for k in 0..1200 {
            let t = k as f64 * t_s;
            let y = ch.sample((std::f64::consts::TAU * f * t).sin());
            if k >= 600 {
                samples.push(y);
            }
        }
        // amplitude from the RMS of an integer number of periods
        let rms = (samples.iter().map(|y| y * y).sum::<f64>() / samples.len() as f64).sqrt();
        let amplitude = rms * std::f64::consts::SQRT_2;
        let target = std::f64::consts::FRAC_1_SQRT_2;
        assert!(
            (amplitude - target).abs() <= 0.02 * target,
            "amplitude {amplitude} vs {target}"
        );
    }

    #[test]
    fn degenerate_chain_is_identity() {
        let p = SensorParams {
            encoder_counts: 0,
            lowpass_cutoff_hz: 0.0,
            ..params(true)
        };
        let mut ch = EncoderChannel::new(&p);
        for &x in &[0.0, 0.1, -2.7, 1e-9, 3.0] {
            assert_eq!(ch.sample(x), x);
        }
    }

    #[test]
    fn noise_off_passes_attitude_through() {
        let mut s = AttitudeSensor::new(&params(false));
        let m = s.sample(0.1, -0.2, 0.3, -0.4);
        assert_eq!((m.alpha, m.beta, m.alpha_dot, m.beta_dot), (0.1, -0.2, 0.3, -0.4));
    }

    #[test]
    fn same_seed_same_noise_stream() {
        let p = params(true);
        let mut a = AttitudeSensor::new(&p);
        let mut b = AttitudeSensor::new(&p);
        for _ in 0..100 {
            let ma = a.sample(0.0, 0.0, 0.0, 0.0);
            let mb = b.sample(0.0, 0.0, 0.0, 0.0);
            assert_eq!(ma, mb);
        }
        let mut c = AttitudeSensor::new(&SensorParams { seed: 2, ..p });
        let mc = c.sample(0.0, 0.0, 0.0, 0.0);
        let ma = a.sample(0.0, 0.0, 0.0, 0.0);
        assert_ne!(ma, mc);
    }

    #[test]
    fn noise_statistics_are_plausible() {
        let mut s = AttitudeSensor::new(&params(true));
        let n = 20_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let m = s.sample(0.0, 0.0, 0.0, 0.0);
            sum += m.alpha;
            sum_sq += m.alpha * m.alpha;
        }
        let mean = sum / n as f64;
        let std = (sum_sq / n as f64 - mean * mean).sqrt();
        assert_abs_diff_eq!(mean, 0.0, epsilon = 3.0 * 0.005 / (n as f64).sqrt());
        assert_abs_diff_eq!(std, 0.005, epsilon = 0.0005);
    }

    #[test]
    fn first_difference_recovers_slope() {
        let mut fd = FirstDifference::default();
        assert_eq!(fd.rate(0.0, 1.0), 0.0);
        assert_abs_diff_eq!(fd.rate(0.01, 1.02), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fd.rate(0.02, 1.01), -1.0, epsilon = 1e-12);
    }
}
