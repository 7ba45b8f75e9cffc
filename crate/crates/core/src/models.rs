//! Closed-form link and task-performance formulas.
//!
//! Everything here is a pure function of its inputs: the Gaussian tail
//! function and its exponential upper bound, Shannon rate, transmission
//! delay, the success-transmission probability of a payload under a random
//! channel gain (with a Monte-Carlo oracle for validation), the fitted
//! accuracy curve, and the effective accuracy that combines the two.

use crate::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::SQRT_2;

/// Step of the validation grid used by [`AccuracyModel::new`].
pub const ACCURACY_GRID_STEP: f64 = 1e-3;

/// Evaluate the double-exponential curve `b1*e^(b2*o) + b3*e^(b4*o)`.
pub(crate) fn eval_exponential(betas: &[f64; 4], o: f64) -> f64 {
    betas[0] * (betas[1] * o).exp() + betas[2] * (betas[3] * o).exp()
}

/// Four-parameter exponential accuracy curve eta(o) mapping a compression
/// ratio in [0, 1] to task accuracy.
///
/// Construction validates that the curve is finite and stays inside [0, 1]
/// on a 1e-3 grid over [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyModel {
    betas: [f64; 4],
}

impl AccuracyModel {
    pub fn new(betas: [f64; 4]) -> Result<Self> {
        if betas.iter().any(|b| !b.is_finite()) {
            return Err(Error::Domain("accuracy model parameters must be finite".into()));
        }
        let n = (1.0 / ACCURACY_GRID_STEP).round() as usize;
        for k in 0..=n {
            let o = k as f64 * ACCURACY_GRID_STEP;
            let v = eval_exponential(&betas, o);
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!(
                    "accuracy curve leaves [0,1]: eta({o}) = {v}"
                )));
            }
        }
        Ok(Self { betas })
    }

    /// Build without the range check. Used when reporting fit results whose
    /// parameters may violate the [0, 1] envelope; everything downstream of
    /// the solvers should come through [`AccuracyModel::new`].
    pub fn from_betas_unchecked(betas: [f64; 4]) -> Self {
        Self { betas }
    }

    pub fn betas(&self) -> [f64; 4] {
        self.betas
    }

    /// eta(o) for o in [0, 1].
    pub fn evaluate(&self, o: f64) -> Result<f64> {
        if !o.is_finite() || !(0.0..=1.0).contains(&o) {
            return Err(Error::Domain(format!(
                "compression ratio {o} outside [0, 1]"
            )));
        }
        Ok(self.eval_raw(o))
    }

    pub(crate) fn eval_raw(&self, o: f64) -> f64 {
        eval_exponential(&self.betas, o)
    }
}

/// Semantic compression ratio: the fraction of extracted features removed
/// before transmission, so the transmitted payload is `d0 * (1 - o)`.
///
/// Strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct CompressionRatio(f64);

impl CompressionRatio {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value <= 0.0 || value >= 1.0 {
            return Err(Error::Domain(format!(
                "compression ratio must lie strictly inside (0, 1), got {value}"
            )));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// One user's physical link parameters together with its currently allocated
/// bandwidth and transmit power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserLink {
    data_bits: f64,
    deadline_s: f64,
    delta: f64,
    noise_density: f64,
    bandwidth_hz: f64,
    power_w: f64,
}

impl UserLink {
    /// `data_bits`: uncompressed payload size in bits; `deadline_s`: delay
    /// budget in seconds; `delta`: standard deviation of the channel gain;
    /// `noise_density`: noise power spectral density in W/Hz;
    /// `bandwidth_hz`, `power_w`: allocated resources. All must be positive.
    pub fn new(
        data_bits: f64,
        deadline_s: f64,
        delta: f64,
        noise_density: f64,
        bandwidth_hz: f64,
        power_w: f64,
    ) -> Result<Self> {
        let fields = [
            ("data_bits", data_bits),
            ("deadline_s", deadline_s),
            ("delta", delta),
            ("noise_density", noise_density),
            ("bandwidth_hz", bandwidth_hz),
            ("power_w", power_w),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Domain(format!(
                    "UserLink field {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self {
            data_bits,
            deadline_s,
            delta,
            noise_density,
            bandwidth_hz,
            power_w,
        })
    }

    pub fn data_bits(&self) -> f64 {
        self.data_bits
    }
    pub fn deadline_s(&self) -> f64 {
        self.deadline_s
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn noise_density(&self) -> f64 {
        self.noise_density
    }
    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }
    pub fn power_w(&self) -> f64 {
        self.power_w
    }

    /// Same link with a different resource allocation.
    pub fn with_allocation(&self, bandwidth_hz: f64, power_w: f64) -> Result<Self> {
        Self::new(
            self.data_bits,
            self.deadline_s,
            self.delta,
            self.noise_density,
            bandwidth_hz,
            power_w,
        )
    }

    /// Spectral efficiency (bit/s/Hz) the uncompressed payload would need to
    /// meet the deadline: `d0 / (B * t0)`.
    pub fn spectral_load(&self) -> f64 {
        self.data_bits / (self.bandwidth_hz * self.deadline_s)
    }

    /// SNR per unit channel gain: `P / (N0 * B)`.
    pub fn snr_scale(&self) -> f64 {
        self.power_w / (self.noise_density * self.bandwidth_hz)
    }

    /// Argument of the Gaussian tail in the success probability:
    /// `(2^(a*(1-o)) - 1) / (b * delta)`. Always >= 0; may overflow to +inf
    /// for hopeless payloads, which downstream formulas treat as zero
    /// success probability.
    pub(crate) fn q_argument(&self, o: f64) -> f64 {
        let exponent = self.spectral_load() * (1.0 - o);
        (libm::exp2(exponent) - 1.0) / (self.snr_scale() * self.delta)
    }
}

/// Tail distribution function of the standard normal: Q(x) = P(Z > x).
///
/// Evaluated through the complementary error function, giving relative
/// accuracy at the 1e-15 level over the range exercised here; the surrogate
/// objective is exponentially sensitive to this argument.
pub fn q_function(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("q_function needs finite input, got {x}")));
    }
    Ok(0.5 * libm::erfc(x / SQRT_2))
}

/// Exponential upper bound on the Gaussian tail: `Q(x) <= exp(-x^2/2) / 2`
/// for x >= 0.
pub fn q_bound(x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!(
            "q_bound is only valid for finite x >= 0, got {x}"
        )));
    }
    Ok(0.5 * (-0.5 * x * x).exp())
}

/// Shannon rate `B * log2(1 + h*P/(N0*B))` in bit/s for channel gain `h >= 0`.
pub fn transmission_rate(link: &UserLink, h: f64) -> Result<f64> {
    if !h.is_finite() || h < 0.0 {
        return Err(Error::Domain(format!(
            "channel gain must be finite and >= 0, got {h}"
        )));
    }
    Ok(link.bandwidth_hz * (1.0 + h * link.snr_scale()).log2())
}

/// Transmission delay of the compressed payload `d0*(1-o)` in seconds.
pub fn transmission_delay(link: &UserLink, o: CompressionRatio, h: f64) -> Result<f64> {
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::UndefinedDelay(h));
    }
    let rate = transmission_rate(link, h)?;
    Ok(link.data_bits * (1.0 - o.value()) / rate)
}

/// Probability that the compressed payload meets the deadline under a
/// channel gain with standard deviation `delta`:
/// `2 Q((2^(a*(1-o)) - 1) / (b * delta))`.
///
/// Clamped to [0, 1] to absorb floating-point overshoot near o -> 1.
pub fn success_probability(link: &UserLink, o: CompressionRatio) -> f64 {
    let arg = link.q_argument(o.value());
    if arg.is_infinite() {
        return 0.0;
    }
    let q = 0.5 * libm::erfc(arg / SQRT_2);
    (2.0 * q).clamp(0.0, 1.0)
}

/// Monte-Carlo estimate of [`success_probability`]: draws `h ~ N(0, delta^2)`
/// and counts the fraction of draws whose magnitude clears the rate needed to
/// meet the deadline. Deterministic given `seed`; independent of the closed
/// form it validates.
pub fn success_probability_mc(
    link: &UserLink,
    o: CompressionRatio,
    samples: u64,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::Domain("need at least one Monte-Carlo sample".into()));
    }
    let threshold = (libm::exp2(link.spectral_load() * (1.0 - o.value())) - 1.0) / link.snr_scale();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    for _ in 0..samples {
        let z: f64 = rng.sample(StandardNormal);
        if (z * link.delta).abs() >= threshold {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples as f64)
}

/// eta(o) for the given model; o must lie in [0, 1].
pub fn accuracy(model: &AccuracyModel, o: f64) -> Result<f64> {
    model.evaluate(o)
}

/// Effective accuracy: success probability times post-compression accuracy.
pub fn effective_accuracy(link: &UserLink, o: CompressionRatio, model: &AccuracyModel) -> f64 {
    success_probability(link, o) * model.eval_raw(o.value())
}

/// Surrogate effective accuracy obtained by replacing the Gaussian tail with
/// its exponential bound: `exp(-arg^2/2) * eta(o)`. This is the quantity the
/// optimizer maximizes; it dominates [`effective_accuracy`] pointwise.
pub fn effective_accuracy_bound(
    link: &UserLink,
    o: CompressionRatio,
    model: &AccuracyModel,
) -> f64 {
    let arg = link.q_argument(o.value());
    if arg.is_infinite() {
        return 0.0;
    }
    (-0.5 * arg * arg).exp() * model.eval_raw(o.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Standard normal density.
    fn phi(t: f64) -> f64 {
        (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }

    /// Adaptive Simpson quadrature of the normal density on [a, b]; the
    /// independent oracle for the tail function.
    fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64, eps: f64, whole: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = phi(lm);
        let frm = phi(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
            return left + right + (left + right - whole) / 15.0;
        }
        simpson(a, m, fa, flm, fm, eps / 2.0, left, depth - 1)
            + simpson(m, b, fm, frm, fb, eps / 2.0, right, depth - 1)
    }

    fn q_oracle(x: f64) -> f64 {
        // Integrate the density from x out to 40 sigma; the remainder is
        // below 1e-300.
        let a = x;
        let b = 40.0f64.max(x + 1.0);
        let m = 0.5 * (a + b);
        let whole = (b - a) / 6.0 * (phi(a) + 4.0 * phi(m) + phi(b));
        simpson(a, b, phi(a), phi(m), phi(b), 1e-12, whole, 40)
    }

    fn canonical_link() -> UserLink {
        // a = d0/(B*t0) = 1, b = P/(N0*B) = 1, delta = 1.
        UserLink::new(1e6, 1.0, 1.0, 1e-6, 1e6, 1.0).unwrap()
    }

    fn test_model() -> AccuracyModel {
        AccuracyModel::new([0.8, -0.5, 0.1, -10.0]).unwrap()
    }

    #[test]
    fn q_function_at_zero_is_half() {
        assert_relative_eq!(q_function(0.0).unwrap(), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn q_function_matches_quadrature_oracle() {
        // Frozen from the quadrature oracle (agrees with high-precision
        // reference 0.00134989803163009...).
        let q3 = q_function(3.0).unwrap();
        assert!((q3 - 0.0013498980316300945).abs() < 1e-12);
        assert!((q3 - q_oracle(3.0)).abs() < 1e-9);
        for x in [0.1, 0.5, 1.0, 2.0, 4.0, 6.0] {
            let q = q_function(x).unwrap();
            assert!(
                (q - q_oracle(x)).abs() < 1e-9,
                "Q({x}) = {q} deviates from quadrature {}",
                q_oracle(x)
            );
        }
    }

    #[test]
    fn q_function_reflection_identity() {
        let lhs = q_function(-2.0).unwrap();
        let rhs = 1.0 - q_function(2.0).unwrap();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-14);
    }

    #[test]
    fn q_function_symmetry_on_grid() {
        let mut x = -8.0;
        while x <= 8.0 {
            let s = q_function(x).unwrap() + q_function(-x).unwrap();
            assert!((s - 1.0).abs() < 1e-12, "Q({x}) + Q({}) = {s}", -x);
            x += 0.05;
        }
    }

    #[test]
    fn q_function_strictly_decreasing() {
        let mut prev = q_function(-6.0).unwrap();
        let mut x = -6.0 + 0.01;
        while x <= 6.0 {
            let q = q_function(x).unwrap();
            assert!(q < prev, "Q not strictly decreasing at {x}");
            prev = q;
            x += 0.01;
        }
    }

    #[test]
    fn q_function_rejects_non_finite() {
        assert!(q_function(f64::NAN).is_err());
        assert!(q_function(f64::INFINITY).is_err());
    }

    #[test]
    fn q_bound_values_and_domain() {
        assert_relative_eq!(q_bound(0.0).unwrap(), 0.5, max_relative = 1e-15);
        // 0.5 * exp(-1/2), frozen from scalar evaluation.
        assert_relative_eq!(q_bound(1.0).unwrap(), 0.3032653298563167, max_relative = 1e-15);
        assert!(q_bound(-0.1).is_err());
        assert!(q_bound(f64::NAN).is_err());
    }

    #[test]
    fn q_bound_dominates_q_function() {
        let mut x = 0.0;
        while x <= 10.0 {
            assert!(
                q_bound(x).unwrap() >= q_function(x).unwrap(),
                "bound violated at {x}"
            );
            x += 0.01;
        }
    }

    #[test]
    fn transmission_rate_examples() {
        let link = canonical_link();
        assert_eq!(transmission_rate(&link, 0.0).unwrap(), 0.0);
        // b = 1, so h = 1 gives log2(2) = 1 bit/s/Hz over 1 MHz.
        assert_relative_eq!(transmission_rate(&link, 1.0).unwrap(), 1e6, max_relative = 1e-12);
        assert_relative_eq!(transmission_rate(&link, 3.0).unwrap(), 2e6, max_relative = 1e-12);
        assert!(transmission_rate(&link, -1.0).is_err());
    }

    #[test]
    fn transmission_delay_examples() {
        let link = canonical_link();
        let half = CompressionRatio::new(0.5).unwrap();
        // Payload 5e5 bits at rate 1e6 bit/s.
        assert_relative_eq!(
            transmission_delay(&link, half, 1.0).unwrap(),
            0.5,
            max_relative = 1e-12
        );
        // Zero payload limit.
        let near_one = CompressionRatio::new(1.0 - 1e-12).unwrap();
        assert!(transmission_delay(&link, near_one, 1.0).unwrap() < 1e-11);
        // Halving (1 - o) halves delay at fixed h.
        let quarter = CompressionRatio::new(0.75).unwrap();
        let d_half = transmission_delay(&link, half, 2.0).unwrap();
        let d_quarter = transmission_delay(&link, quarter, 2.0).unwrap();
        assert_relative_eq!(d_half, 2.0 * d_quarter, max_relative = 1e-12);
        assert!(matches!(
            transmission_delay(&link, half, 0.0),
            Err(Error::UndefinedDelay(_))
        ));
    }

    #[test]
    fn success_probability_zero_payload_limit() {
        let link = canonical_link();
        let o = CompressionRatio::new(1.0 - 1e-13).unwrap();
        assert_relative_eq!(success_probability(&link, o), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn success_probability_canonical_value() {
        // a = 1, b = 1, delta = 1, o = 0.5: 2 Q(2^0.5 - 1).
        // Frozen: 0.678717710189378 (validated against the MC oracle below).
        let link = canonical_link();
        let o = CompressionRatio::new(0.5).unwrap();
        let p = success_probability(&link, o);
        assert_relative_eq!(p, 0.6787177101893781, max_relative = 1e-12);
        let mc = success_probability_mc(&link, o, 10_000_000, 1234).unwrap();
        assert!((p - mc).abs() < 1e-3, "closed {p} vs mc {mc}");
    }

    #[test]
    fn success_probability_saturates_with_power() {
        let link = UserLink::new(1e6, 1.0, 1.0, 1e-6, 1e6, 1e30).unwrap();
        let o = CompressionRatio::new(0.5).unwrap();
        assert_relative_eq!(success_probability(&link, o), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn success_probability_mc_contracts() {
        let link = canonical_link();
        let near_one = CompressionRatio::new(1.0 - 1e-13).unwrap();
        // Zero payload: threshold 0, every draw counts.
        assert_eq!(
            success_probability_mc(&link, near_one, 1000, 99).unwrap(),
            1.0
        );
        let o = CompressionRatio::new(0.5).unwrap();
        let a = success_probability_mc(&link, o, 100_000, 7).unwrap();
        let b = success_probability_mc(&link, o, 100_000, 7).unwrap();
        assert_eq!(a, b, "same seed must reproduce bit-identical output");
        assert!(success_probability_mc(&link, o, 0, 7).is_err());
    }

    #[test]
    fn success_probability_nondecreasing_in_ratio() {
        let link = canonical_link();
        let mut prev = 0.0;
        let mut k = 1;
        while k < 100 {
            let o = CompressionRatio::new(k as f64 / 100.0).unwrap();
            let p = success_probability(&link, o);
            assert!(p >= prev - 1e-12, "success dropped at o = {}", o.value());
            prev = p;
            k += 1;
        }
    }

    #[test]
    fn accuracy_examples() {
        let model = test_model();
        assert_relative_eq!(accuracy(&model, 0.0).unwrap(), 0.9, max_relative = 1e-12);
        // Frozen from high-precision evaluation of 0.8 e^-0.5 + 0.1 e^-10.
        assert_relative_eq!(
            accuracy(&model, 1.0).unwrap(),
            0.4852290677630830,
            max_relative = 1e-12
        );
        let flat = AccuracyModel::new([0.9, 0.0, 0.0, 0.0]).unwrap();
        for o in [0.0, 0.3, 1.0] {
            assert_relative_eq!(accuracy(&flat, o).unwrap(), 0.9, max_relative = 1e-15);
        }
        assert!(accuracy(&model, -0.1).is_err());
        assert!(accuracy(&model, 1.1).is_err());
    }

    #[test]
    fn accuracy_model_rejects_out_of_range_curves() {
        assert!(AccuracyModel::new([2.0, 0.0, 0.0, 0.0]).is_err());
        assert!(AccuracyModel::new([0.5, 1.0, 0.0, 0.0]).is_err()); // rises above 1 at o=1
        assert!(AccuracyModel::new([0.8, f64::NAN, 0.1, -10.0]).is_err());
    }

    #[test]
    fn user_link_invariants() {
        assert!(UserLink::new(0.0, 1.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(UserLink::new(1.0, -1.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(UserLink::new(1.0, 1.0, 1.0, 1.0, 1.0, f64::INFINITY).is_err());
        assert!(CompressionRatio::new(0.0).is_err());
        assert!(CompressionRatio::new(1.0).is_err());
    }

    #[test]
    fn effective_accuracy_examples() {
        let link = canonical_link();
        let model = test_model();
        // Certain transmission at o -> 1.
        let near_one = CompressionRatio::new(1.0 - 1e-13).unwrap();
        assert_relative_eq!(
            effective_accuracy(&link, near_one, &model),
            model.evaluate(1.0).unwrap(),
            max_relative = 1e-6
        );
        // Vanishing power kills the success probability.
        let starved = UserLink::new(1e6, 1.0, 1.0, 1e-6, 1e6, 1e-300).unwrap();
        let o = CompressionRatio::new(0.5).unwrap();
        assert_eq!(effective_accuracy(&starved, o, &model), 0.0);
        // Product of the two oracled values: 2Q(2^0.5 - 1) * eta(0.5).
        assert_relative_eq!(
            effective_accuracy(&link, o, &model),
            0.4233260237397944,
            max_relative = 1e-12
        );
    }

    #[test]
    fn effective_accuracy_bound_examples() {
        let link = canonical_link();
        let model = test_model();
        let near_one = CompressionRatio::new(1.0 - 1e-13).unwrap();
        assert_relative_eq!(
            effective_accuracy_bound(&link, near_one, &model),
            model.evaluate(1.0).unwrap(),
            max_relative = 1e-6
        );
        // Link tuned so the exponent argument is exactly 1 at o = 0.5:
        // delta = 2^0.5 - 1 makes arg = 1, value = e^-0.5 * eta(0.5).
        let tuned = UserLink::new(1e6, 1.0, SQRT_2 - 1.0, 1e-6, 1e6, 1.0).unwrap();
        let o = CompressionRatio::new(0.5).unwrap();
        assert_relative_eq!(
            effective_accuracy_bound(&tuned, o, &model),
            0.3783019193366582,
            max_relative = 1e-12
        );
    }

    #[test]
    fn bound_dominates_exact_on_random_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let model = test_model();
        for _ in 0..200 {
            let a = 10f64.powf(rng.random_range(-1.0..1.5));
            let b = 10f64.powf(rng.random_range(-1.0..2.0));
            let delta = 10f64.powf(rng.random_range(-1.0..1.0));
            let o = rng.random_range(0.01..0.99);
            // Realize (a, b, delta) with t0 = 1 s, B = 1e6 Hz.
            let link = UserLink::new(a * 1e6, 1.0, delta, 1e-6 * b.recip(), 1e6, 1.0).unwrap();
            assert!((link.spectral_load() - a).abs() / a < 1e-12);
            assert!((link.snr_scale() - b).abs() / b < 1e-9);
            let ratio = CompressionRatio::new(o).unwrap();
            let exact = effective_accuracy(&link, ratio, &model);
            let bound = effective_accuracy_bound(&link, ratio, &model);
            assert!(
                bound >= exact - 1e-15,
                "bound {bound} < exact {exact} at a={a} b={b} delta={delta} o={o}"
            );
        }
    }

    #[test]
    fn formulas_are_pure() {
        let link = canonical_link();
        let model = test_model();
        let o = CompressionRatio::new(0.37).unwrap();
        let first = (
            success_probability(&link, o),
            effective_accuracy(&link, o, &model),
            effective_accuracy_bound(&link, o, &model),
        );
        let second = (
            success_probability(&link, o),
            effective_accuracy(&link, o, &model),
            effective_accuracy_bound(&link, o, &model),
        );
        assert_eq!(first, second);
    }
}
