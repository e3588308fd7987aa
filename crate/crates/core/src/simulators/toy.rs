use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub const TOY_NOISE_STD: f64 = 10.0;

fn check(theta: f64) -> Result<()> {
    if (0.0..=5.0).contains(&theta) {
        Ok(())
    } else {
        Err(Error::OutOfSupport {
            value: theta,
            support: "[0, 5]",
        })
    }
}

/// Noise-free forward curve `50 + 0.5 θ (5 − θ)^4`.
pub fn toy_mean(theta: f64) -> Result<f64> {
    check(theta)?;
    super::record_call();
    Ok(toy_curve(theta))
}

pub(crate) fn toy_curve(theta: f64) -> f64 {
    50.0 + 0.5 * theta * (5.0 - theta).powi(4)
}

pub fn simulate_toy<R: Rng + ?Sized>(theta: f64, rng: &mut R) -> Result<f64> {
    let mean = toy_mean(theta)?;
    let z: f64 = StandardNormal.sample(rng);
    Ok(mean + TOY_NOISE_STD * z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_free_values() {
        assert_eq!(toy_mean(0.0).unwrap(), 50.0);
        assert_eq!(toy_mean(5.0).unwrap(), 50.0);
        assert_eq!(toy_mean(1.0).unwrap(), 178.0);
    }

    #[test]
    fn rejects_out_of_support() {
        assert!(toy_mean(-0.1).is_err());
        assert!(simulate_toy(5.5, &mut crate::domain::seeded_rng(0)).is_err());
    }
}
