//! Stochastic TOA perturbation models and deterministic random streams.
//!
//! Measurement noise on a line-of-sight (LOS) path is zero-mean Gaussian.
//! In non-line-of-sight (NLOS) conditions the direct path is only detected
//! with some probability; when it is buried, the first detectable arrival
//! is a longer non-direct path, which biases the measurement by a positive
//! excess delay `bias_bp` on top of its own noise.
//!
//! Randomness comes from [`RandomStream`], a counter-based ChaCha8 stream
//! keyed by `(seed, stream_id)`. Equal keys give bit-identical sequences on
//! every platform and thread layout, so Monte Carlo trials can be
//! partitioned across workers freely by assigning one stream per trial.
//!
//! Gaussian variates use the Marsaglia polar method, one variate per
//! accepted pair, with `libm` for the logarithm. The draw sequence per
//! sample is fixed (NLOS: one uniform for direct-path detection, then the
//! Gaussian rejection loop), which is what makes sequences reproducible.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Deterministic random stream keyed by `(seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
    seed: u64,
    stream_id: u64,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            rng,
            seed,
            stream_id,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.next_f64() * (hi - lo)
    }

    /// Standard normal draw via the Marsaglia polar method.
    ///
    /// Each accepted `(u, v)` pair yields exactly one variate; the second
    /// is discarded so the stream carries no hidden state.
    pub fn next_standard_normal(&mut self) -> f64 {
        loop {
            let u = 2.0 * self.next_f64() - 1.0;
            let v = 2.0 * self.next_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                return u * (-2.0 * libm::log(s) / s).sqrt();
            }
        }
    }
}

/// Zero-mean Gaussian measurement noise for a LOS path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosGaussianModel {
    /// Standard deviation of the TOA error, seconds.
    pub sigma: f64,
}

impl LosGaussianModel {
    pub fn new(sigma: f64) -> Result<Self> {
        let model = Self { sigma };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidScenario(format!(
                "LOS sigma must be finite and >= 0, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Two-state NLOS perturbation: the attenuated direct path is detected with
/// probability `p_detect`; otherwise the measurement locks onto a longer
/// first non-direct path, `bias_bp` seconds late.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlosModel {
    /// Noise std when the direct path is detected, seconds.
    pub sigma_detected: f64,
    /// Noise std when the direct path is buried, seconds.
    pub sigma_blocked: f64,
    /// Excess delay toward the first non-direct path, seconds (>= 0).
    pub bias_bp: f64,
    /// Probability that the attenuated direct path is detectable.
    pub p_detect: f64,
}

impl NlosModel {
    pub fn new(
        sigma_detected: f64,
        sigma_blocked: f64,
        bias_bp: f64,
        p_detect: f64,
    ) -> Result<Self> {
        let model = Self {
            sigma_detected,
            sigma_blocked,
            bias_bp,
            p_detect,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if !finite_nonneg(self.sigma_detected) || !finite_nonneg(self.sigma_blocked) {
            return Err(Error::InvalidScenario(
                "NLOS sigmas must be finite and >= 0".into(),
            ));
        }
        if !finite_nonneg(self.bias_bp) {
            return Err(Error::InvalidScenario(
                "NLOS bias must be finite and >= 0".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.p_detect) {
            return Err(Error::InvalidScenario(format!(
                "p_detect must be in [0, 1], got {}",
                self.p_detect
            )));
        }
        Ok(())
    }
}

/// Perturbation applied to a true TOA before quantization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ToaErrorModel {
    Los(LosGaussianModel),
    Nlos(NlosModel),
}

impl ToaErrorModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            ToaErrorModel::Los(m) => m.validate(),
            ToaErrorModel::Nlos(m) => m.validate(),
        }
    }
}

/// Draw one TOA measurement error (seconds) from the model.
pub fn sample_error(model: &ToaErrorModel, stream: &mut RandomStream) -> f64 {
    match model {
        ToaErrorModel::Los(m) => m.sigma * stream.next_standard_normal(),
        ToaErrorModel::Nlos(m) => {
            // Detection uniform first, then the Gaussian; order is part of
            // the reproducibility contract.
            if stream.next_f64() < m.p_detect {
                m.sigma_detected * stream.next_standard_normal()
            } else {
                m.bias_bp + m.sigma_blocked * stream.next_standard_normal()
            }
        }
    }
}

/// Perturb a true TOA with one sampled measurement error. The result may be
/// negative; the quantizer downstream clamps and flags it.
pub fn perturb_toa(true_toa: f64, model: &ToaErrorModel, stream: &mut RandomStream) -> f64 {
    debug_assert!(true_toa >= 0.0, "true TOA must be non-negative");
    true_toa + sample_error(model, stream)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_keys_give_identical_sequences() {
        let mut a = RandomStream::new(42, 7);
        let mut b = RandomStream::new(42, 7);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut a = RandomStream::new(42, 7);
        let mut b = RandomStream::new(42, 7);
        for _ in 0..1000 {
            assert_eq!(
                a.next_standard_normal().to_bits(),
                b.next_standard_normal().to_bits()
            );
        }
    }

    #[test]
    fn different_stream_ids_differ() {
        let mut a = RandomStream::new(42, 0);
        let mut b = RandomStream::new(42, 1);
        let same = (0..64).filter(|_| a.next_u64() == b.next_u64()).count();
        assert_eq!(same, 0);
    }

    // Golden values pin the (seed, stream_id) -> sequence mapping. If this
    // test ever fails after a dependency bump, the stream derivation
    // changed and stored seeds no longer reproduce published runs.
    #[test]
    fn golden_sequence_is_stable() {
        let mut s = RandomStream::new(42, 0);
        let got: Vec<u64> = (0..4).map(|_| s.next_u64()).collect();
        let want = [
            0xae90bfb5395d5ba1u64,
            0xf3453fc625799188,
            0x6d71b708c5b6538c,
            0xa09ab2f958166752,
        ];
        assert_eq!(got, want);
    }

    #[test]
    fn uniform_in_unit_interval() {
        let mut s = RandomStream::new(1, 0);
        for _ in 0..10_000 {
            let x = s.next_f64();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn los_zero_sigma_is_exactly_zero() {
        let model = ToaErrorModel::Los(LosGaussianModel::new(0.0).unwrap());
        let mut s = RandomStream::new(3, 0);
        for _ in 0..100 {
            assert_eq!(sample_error(&model, &mut s), 0.0);
        }
    }

    #[test]
    fn perturb_with_zero_sigma_is_identity() {
        let model = ToaErrorModel::Los(LosGaussianModel::new(0.0).unwrap());
        let mut s = RandomStream::new(3, 0);
        assert_eq!(perturb_toa(1e-6, &model, &mut s), 1e-6);
    }

    #[test]
    fn nlos_blocked_with_zero_sigma_is_pure_bias() {
        let bias = 50e-9;
        let model = ToaErrorModel::Nlos(NlosModel::new(1e-9, 0.0, bias, 0.0).unwrap());
        let mut s = RandomStream::new(9, 0);
        for _ in 0..100 {
            assert_eq!(perturb_toa(1e-6, &model, &mut s), 1e-6 + bias);
        }
    }

    #[test]
    fn nlos_full_detection_matches_los() {
        // p_detect = 1 consumes one extra uniform per sample, so compare
        // distributions via moments rather than the raw stream.
        let sigma = 130e-9;
        let nlos = ToaErrorModel::Nlos(NlosModel::new(sigma, 99.0, 1.0, 1.0).unwrap());
        let mut s = RandomStream::new(11, 0);
        let n = 200_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n {
            let e = sample_error(&nlos, &mut s);
            sum += e;
            sum_sq += e * e;
        }
        let mean = sum / n as f64;
        let std = (sum_sq / n as f64 - mean * mean).sqrt();
        assert!(mean.abs() < 4.0 * sigma / (n as f64).sqrt());
        assert!((std - sigma).abs() < 0.01 * sigma);
    }

    #[test]
    fn gaussian_sample_std_matches_sigma() {
        // LOS sigmafixed at half the mu=0 slot width (130.2 ns); the
        // sample std over 1e6 draws must land within 0.5 ns.
        let sigma = 130.2083e-9;
        let model = ToaErrorModel::Los(LosGaussianModel::new(sigma).unwrap());
        let mut s = RandomStream::new(20, 0);
        let n = 1_000_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n {
            let e = sample_error(&model, &mut s);
            sum += e;
            sum_sq += e * e;
        }
        let mean = sum / n as f64;
        let std = (sum_sq / n as f64 - mean * mean).sqrt();
        assert!((std - sigma).abs() < 0.5e-9, "std {} vs {}", std, sigma);
        assert!(mean.abs() < 4.0 * sigma / (n as f64).sqrt());
    }

    #[test]
    fn model_validation_rejects_bad_parameters() {
        assert!(LosGaussianModel::new(-1.0).is_err());
        assert!(LosGaussianModel::new(f64::NAN).is_err());
        assert!(NlosModel::new(1e-9, 1e-9, -1e-9, 0.5).is_err());
        assert!(NlosModel::new(1e-9, 1e-9, 1e-9, 1.5).is_err());
        assert!(NlosModel::new(1e-9, 1e-9, 1e-9, 1.0).is_ok());
    }
}
