use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Per-coordinate likelihood variance.
pub const LG_NOISE_VAR: f64 = 0.1;
pub const LG_DIM: usize = 10;

/// `x = θ + ν`, `ν ~ N(0, 0.1 I)`.
pub fn simulate_linear_gaussian<R: Rng + ?Sized>(theta: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if theta.len() != LG_DIM {
        return Err(Error::Dimension {
            what: "linear-gaussian theta",
            found: theta.len(),
            expected: LG_DIM,
        });
    }
    if let Some(&bad) = theta.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("theta entry {bad}")));
    }
    super::record_call();
    let std = LG_NOISE_VAR.sqrt();
    Ok(theta
        .iter()
        .map(|&t| {
            let z: f64 = StandardNormal.sample(rng);
            t + std * z
        })
        .collect())
}
