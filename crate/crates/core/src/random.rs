//! Seeded per-trial random streams and fading samplers shared by the
//! rank experiments and the link simulator.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

/// Independent stream for trial `trial` of a run seeded with `seed`; the
/// same pair always yields the same sequence regardless of thread layout.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Circularly-symmetric complex Gaussian with `E|z|^2 = variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * scale, im * scale)
}

/// Distribution used to draw channel coefficients for rank experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FadeLaw {
    /// Unit-variance complex Gaussian.
    #[default]
    ComplexGaussian,
    /// Real, uniform on `[0.5, 1.5)`; better conditioned at larger extensions.
    RealUniform,
    /// Every fade equal to one. Degenerate on purpose.
    Ones,
}

impl FadeLaw {
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> Complex64 {
        match self {
            FadeLaw::ComplexGaussian => complex_gaussian(rng, 1.0),
            FadeLaw::RealUniform => Complex64::new(uniform_weight(rng), 0.0),
            FadeLaw::Ones => Complex64::new(1.0, 0.0),
        }
    }
}

/// Real weight drawn uniformly from `[0.5, 1.5)`.
pub fn uniform_weight<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Uniform::new(0.5, 1.5).expect("valid range").sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| trial_rng(7, 3).random()).collect();
        let b: Vec<u64> = (0..4).map(|_| trial_rng(7, 3).random()).collect();
        assert_eq!(a, b);
        let x: u64 = trial_rng(7, 3).random();
        let y: u64 = trial_rng(7, 4).random();
        assert_ne!(x, y);
    }

    #[test]
    fn gaussian_power_is_close_to_variance() {
        let mut rng = trial_rng(1, 0);
        let n = 200_000;
        let p: f64 = (0..n)
            .map(|_| complex_gaussian(&mut rng, 2.0).norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((p - 2.0).abs() < 0.02, "{p}");
    }
}
