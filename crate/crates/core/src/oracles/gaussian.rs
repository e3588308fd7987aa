use crate::domain::TaskId;
use crate::error::{Error, Result};
use crate::simulators::{LG_DIM, LG_NOISE_VAR};

/// Gaussian posterior with diagonal covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPosterior {
    pub task: TaskId,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl GaussianPosterior {
    /// Full covariance matrix, row-major.
    pub fn covariance(&self) -> Vec<f64> {
        let d = self.mean.len();
        let mut c = vec![0.0; d * d];
        for (i, v) in self.variance.iter().enumerate() {
            c[i * d + i] = *v;
        }
        c
    }
}

/// Conjugate posterior for a `N(0, I)` prior and `N(θ, noise_var · I)` likelihood.
pub fn posterior_linear_gaussian_with(x_o: &[f64], noise_var: f64) -> Result<GaussianPosterior> {
    if !(noise_var > 0.0) {
        return Err(Error::invalid("noise variance must be positive"));
    }
    let precision = 1.0 + 1.0 / noise_var;
    Ok(GaussianPosterior {
        task: TaskId::LinearGaussian,
        mean: x_o.iter().map(|x| x / noise_var / precision).collect(),
        variance: vec![1.0 / precision; x_o.len()],
    })
}

pub fn posterior_linear_gaussian(x_o: &[f64]) -> Result<GaussianPosterior> {
    if x_o.len() != LG_DIM {
        return Err(Error::Dimension {
            what: "observation",
            found: x_o.len(),
            expected: LG_DIM,
        });
    }
    posterior_linear_gaussian_with(x_o, LG_NOISE_VAR)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugate_update() {
        let p = posterior_linear_gaussian(&[0.0; 10]).unwrap();
        assert!(p.mean.iter().all(|&m| m == 0.0));
        let x: Vec<f64> = (0..10).map(|i| i as f64 - 4.5).collect();
        let p = posterior_linear_gaussian(&x).unwrap();
        for (m, xi) in p.mean.iter().zip(&x) {
            assert!((m - 10.0 / 11.0 * xi).abs() < 1e-12);
        }
        let c = p.covariance();
        for i in 0..10 {
            for j in 0..10 {
                let want = if i == j { 1.0 / 11.0 } else { 0.0 };
                assert!((c[i * 10 + j] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn mean_approaches_observation_as_noise_vanishes() {
        let x = [1.5; 10];
        let mut prev = f64::INFINITY;
        for v in [1e-1, 1e-3, 1e-6, 1e-9] {
            let gap = (posterior_linear_gaussian_with(&x, v).unwrap().mean[0] - 1.5).abs();
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 1e-8);
    }
}
