use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::domain::TaskId;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// One independent prior coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Marginal {
    Uniform {
        lo: f64,
        hi: f64,
    },
    Normal {
        mean: f64,
        std: f64,
    },
    /// `exp(N(mu, sigma^2))`.
    LogNormal {
        mu: f64,
        sigma: f64,
    },
}

fn standard_normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

impl Marginal {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => rng.random_range(lo..hi),
            Marginal::Normal { mean, std } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + std * z
            }
            Marginal::LogNormal { mu, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                (mu + sigma * z).exp()
            }
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        if !v.is_finite() {
            return false;
        }
        match *self {
            Marginal::Uniform { lo, hi } => (lo..=hi).contains(&v),
            Marginal::Normal { .. } => true,
            Marginal::LogNormal { .. } => v > 0.0,
        }
    }

    /// Open interval holding the support.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Marginal::Uniform { lo, hi } => (lo, hi),
            Marginal::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Marginal::LogNormal { .. } => (0.0, f64::INFINITY),
        }
    }

    pub fn ln_pdf(&self, v: f64) -> f64 {
        if !self.contains(v) {
            return f64::NEG_INFINITY;
        }
        match *self {
            Marginal::Uniform { lo, hi } => -(hi - lo).ln(),
            Marginal::Normal { mean, std } => {
                let z = (v - mean) / std;
                -0.5 * z * z - std.ln() - LN_SQRT_2PI
            }
            Marginal::LogNormal { mu, sigma } => {
                let lv = v.ln();
                let z = (lv - mu) / sigma;
                -0.5 * z * z - sigma.ln() - LN_SQRT_2PI - lv
            }
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => lo + p * (hi - lo),
            Marginal::Normal { mean, std } => mean + std * standard_normal_quantile(p),
            Marginal::LogNormal { mu, sigma } => (mu + sigma * standard_normal_quantile(p)).exp(),
        }
    }
}

/// Product of independent marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    pub marginals: Vec<Marginal>,
}

impl Prior {
    pub fn for_task(task: TaskId) -> Prior {
        let marginals = match task {
            TaskId::Toy => vec![Marginal::Uniform { lo: 0.0, hi: 5.0 }],
            TaskId::LinearGaussian => vec![Marginal::Normal { mean: 0.0, std: 1.0 }; 10],
            TaskId::Sir => vec![
                Marginal::LogNormal { mu: 0.4f64.ln(), sigma: 0.5 },
                Marginal::LogNormal { mu: 0.125f64.ln(), sigma: 0.2 },
            ],
            TaskId::LotkaVolterra => [-0.125, -3.0, -0.125, -3.0].iter().map(|&mu| Marginal::LogNormal { mu, sigma: 0.5 }).collect(),
            TaskId::Bvep => vec![
                Marginal::Uniform { lo: -5.0, hi: -1.0 },
                Marginal::Uniform { lo: 10.0, hi: 50.0 },
                Marginal::Uniform { lo: -2.5, hi: -1.5 },
                Marginal::Uniform { lo: 2.5, hi: 4.0 },
            ],
        };
        Prior { marginals }
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.marginals.iter().map(|m| m.sample(rng)).collect()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim() && self.marginals.iter().zip(theta).all(|(m, &v)| m.contains(v))
    }

    pub fn ln_pdf(&self, theta: &[f64]) -> f64 {
        if theta.len() != self.dim() {
            return f64::NEG_INFINITY;
        }
        self.marginals.iter().zip(theta).map(|(m, &v)| m.ln_pdf(v)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::seeded_rng;

    #[test]
    fn draws_lie_in_support() {
        let mut rng = seeded_rng(3);
        for task in TaskId::ALL {
            let prior = Prior::for_task(task);
            assert_eq!(prior.dim(), task.param_dim());
            for _ in 0..2000 {
                let th = prior.sample(&mut rng);
                assert!(prior.contains(&th), "{task}: {th:?}");
                assert!(prior.ln_pdf(&th).is_finite());
            }
        }
    }

    #[test]
    fn lognormal_quantiles_bracket_median() {
        let m = Marginal::LogNormal { mu: -3.0, sigma: 0.5 };
        assert!((m.quantile(0.5) - (-3.0f64).exp()).abs() < 1e-12);
        assert!(m.quantile(0.001) < m.quantile(0.999));
    }

    #[test]
    fn uniform_density_outside_support_is_zero() {
        let m = Marginal::Uniform { lo: 0.0, hi: 5.0 };
        assert_eq!(m.ln_pdf(5.1), f64::NEG_INFINITY);
        assert!((m.ln_pdf(1.0) + 5f64.ln()).abs() < 1e-15);
    }
}
