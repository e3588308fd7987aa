use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::mlp::{sigmoid, Mlp, MlpArch};
use super::truncnorm::{ln_interval_mass, sample_interval};
use crate::error::{Error, Result};

/// Lower bound added to every mixture scale.
pub const SCALE_FLOOR: f64 = 1e-3;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

fn softplus(v: f64) -> f64 {
    v.max(0.0) + (-v.abs()).exp().ln_1p()
}

fn log_sum_exp(vs: &[f64]) -> f64 {
    let m = vs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + vs.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Number of raw network outputs for `K` components over `D` dimensions.
pub fn mixture_output_dim(components: usize, theta_dim: usize) -> usize {
    components * (1 + 2 * theta_dim)
}

/// A diagonal Gaussian mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub log_weights: Vec<f64>,
    /// `K × D`, row-major.
    pub means: Vec<f64>,
    /// `K × D`, row-major; every entry ≥ `SCALE_FLOOR`.
    pub scales: Vec<f64>,
    pub theta_dim: usize,
}

impl Mixture {
    /// Decodes raw outputs `[logits (K) | means (K·D) | pre-scales (K·D)]`.
    pub fn from_raw(raw: &[f64], components: usize, theta_dim: usize) -> Mixture {
        let k = components;
        let kd = k * theta_dim;
        let logits = &raw[..k];
        let lse = log_sum_exp(logits);
        Mixture {
            log_weights: logits.iter().map(|l| l - lse).collect(),
            means: raw[k..k + kd].to_vec(),
            scales: raw[k + kd..k + 2 * kd].iter().map(|&s| softplus(s) + SCALE_FLOOR).collect(),
            theta_dim,
        }
    }

    pub fn components(&self) -> usize {
        self.log_weights.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|l| l.exp()).collect()
    }

    fn component_log_densities(&self, theta: &[f64]) -> Vec<f64> {
        let d = self.theta_dim;
        (0..self.components())
            .map(|k| {
                let mut lp = self.log_weights[k];
                for j in 0..d {
                    let s = self.scales[k * d + j];
                    let z = (theta[j] - self.means[k * d + j]) / s;
                    lp += -0.5 * z * z - s.ln() - LN_SQRT_2PI;
                }
                lp
            })
            .collect()
    }

    pub fn log_prob(&self, theta: &[f64]) -> f64 {
        log_sum_exp(&self.component_log_densities(theta))
    }

    /// Ancestral sample: component index, then a diagonal Gaussian draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut comp = self.components() - 1;
        for (k, lw) in self.log_weights.iter().enumerate() {
            acc += lw.exp();
            if u < acc {
                comp = k;
                break;
            }
        }
        let d = self.theta_dim;
        (0..d)
            .map(|j| {
                let z: f64 = StandardNormal.sample(rng);
                self.means[comp * d + j] + self.scales[comp * d + j] * z
            })
            .collect()
    }

    /// `n` draws from the mixture restricted to the box `lo < θ < hi`, or
    /// `None` when the box carries no mass. Components are reweighted by
    /// their mass inside the box.
    pub fn sample_in_box<R: Rng + ?Sized>(&self, lo: &[f64], hi: &[f64], n: usize, rng: &mut R) -> Option<Vec<Vec<f64>>> {
        let d = self.theta_dim;
        let bound = |k: usize, j: usize| {
            let (m, s) = (self.means[k * d + j], self.scales[k * d + j]);
            ((lo[j] - m) / s, (hi[j] - m) / s)
        };
        let log_mass: Vec<f64> = (0..self.components())
            .map(|k| {
                self.log_weights[k]
                    + (0..d)
                        .map(|j| {
                            let (a, b) = bound(k, j);
                            ln_interval_mass(a, b)
                        })
                        .sum::<f64>()
            })
            .collect();
        let total = log_sum_exp(&log_mass);
        if !total.is_finite() {
            return None;
        }
        let weights: Vec<f64> = log_mass.iter().map(|l| (l - total).exp()).collect();
        let draws = (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut comp = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
                for (k, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        comp = k;
                        break;
                    }
                }
                (0..d)
                    .map(|j| {
                        let (a, b) = bound(comp, j);
                        self.means[comp * d + j] + self.scales[comp * d + j] * sample_interval(a, b, rng)
                    })
                    .collect()
            })
            .collect();
        Some(draws)
    }
}

/// Negative log-likelihood of `theta` under the mixture decoded from `raw`,
/// and its gradient with respect to `raw`.
pub(crate) fn mixture_nll_grad(raw: &[f64], theta: &[f64], components: usize, d: usize, grad: &mut [f64]) -> f64 {
    let k = components;
    let kd = k * d;
    let mix = Mixture::from_raw(raw, k, d);
    let comp = mix.component_log_densities(theta);
    let lp = log_sum_exp(&comp);
    for c in 0..k {
        let resp = (comp[c] - lp).exp();
        grad[c] = mix.log_weights[c].exp() - resp;
        for j in 0..d {
            let idx = c * d + j;
            let s = mix.scales[idx];
            let diff = theta[j] - mix.means[idx];
            grad[k + idx] = -resp * diff / (s * s);
            let d_scale = -resp * (diff * diff / (s * s * s) - 1.0 / s);
            grad[k + kd + idx] = d_scale * sigmoid(raw[k + kd + idx]);
        }
    }
    -lp
}

/// Conditional Gaussian mixture `q(θ | x)` whose parameters are the output
/// of an MLP.
#[derive(Debug, Clone, PartialEq)]
pub struct Mdn {
    pub net: Mlp,
    pub components: usize,
    pub theta_dim: usize,
}

impl Mdn {
    pub fn new(x_dim: usize, theta_dim: usize, components: usize, hidden_units: usize, hidden_layers: usize, seed: u64) -> Result<Mdn> {
        if components == 0 || theta_dim == 0 {
            return Err(Error::invalid("mixture needs at least one component and dimension"));
        }
        let arch = MlpArch {
            input_dim: x_dim,
            hidden_units,
            hidden_layers,
            output_dim: mixture_output_dim(components, theta_dim),
            squash: false,
        };
        Ok(Mdn {
            net: Mlp::init(arch, seed),
            components,
            theta_dim,
        })
    }

    pub fn from_net(net: Mlp, components: usize, theta_dim: usize) -> Result<Mdn> {
        let expected = mixture_output_dim(components, theta_dim);
        if net.arch().output_dim != expected || net.arch().squash {
            return Err(Error::Dimension {
                what: "mixture head outputs",
                found: net.arch().output_dim,
                expected,
            });
        }
        Ok(Mdn { net, components, theta_dim })
    }

    pub fn mixture(&self, x: &[f64]) -> Result<Mixture> {
        let raw = self.net.forward(x)?;
        Ok(Mixture::from_raw(&raw, self.components, self.theta_dim))
    }

    pub fn log_prob(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        if theta.len() != self.theta_dim {
            return Err(Error::Dimension {
                what: "theta",
                found: theta.len(),
                expected: self.theta_dim,
            });
        }
        Ok(self.mixture(x)?.log_prob(theta))
    }

    pub fn sample<R: Rng + ?Sized>(&self, x: &[f64], n: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
        if n == 0 {
            return Err(Error::invalid("sample count must be at least 1"));
        }
        let mix = self.mixture(x)?;
        Ok((0..n).map(|_| mix.sample(rng)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::seeded_rng;

    fn perturbed(mut mdn: Mdn, seed: u64, scale: f64) -> Mdn {
        let mut rng = seeded_rng(seed);
        for p in mdn.net.params_mut() {
            *p += rng.random_range(-scale..scale);
        }
        mdn
    }

    #[test]
    fn standard_normal_mode() {
        // softplus(r) + floor = 1 at r = ln(e^(1 - floor) - 1).
        let r = ((1.0 - SCALE_FLOOR).exp() - 1.0).ln();
        let mix = Mixture::from_raw(&[0.0, 0.0, r], 1, 1);
        assert!((mix.scales[0] - 1.0).abs() < 1e-12);
        assert!((mix.log_prob(&[0.0]) + LN_SQRT_2PI).abs() < 1e-12);
    }

    #[test]
    fn weights_normalize_and_scales_are_floored() {
        let raw = [3.0, -1.0, 250.0, 0.1, 0.2, 0.3, -800.0, 0.0, 5.0];
        let mix = Mixture::from_raw(&raw, 3, 1);
        assert!((mix.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(mix.scales.iter().all(|&s| s >= SCALE_FLOOR));
    }

    #[test]
    fn log_sum_exp_bounds_each_component() {
        let mix = Mixture::from_raw(&[0.2, -0.4, 1.0, -1.0, 0.1, -0.3], 2, 1);
        for th in [-2.0, 0.0, 0.7, 3.0] {
            let comps = mix.component_log_densities(&[th]);
            let lp = mix.log_prob(&[th]);
            assert!(comps.iter().all(|&c| lp >= c));
        }
    }

    #[test]
    fn box_sampling_matches_rejection() {
        let mix = Mixture {
            log_weights: vec![0.3f64.ln(), 0.7f64.ln()],
            means: vec![-1.0, 0.5, 1.5, -0.5],
            scales: vec![0.8, 1.0, 0.5, 0.7],
            theta_dim: 2,
        };
        let (lo, hi) = ([-1.5, f64::NEG_INFINITY], [1.0, 0.0]);
        let inside = |t: &[f64]| t.iter().zip(lo.iter().zip(&hi)).all(|(v, (a, b))| a < v && v < b);
        let mut rng = seeded_rng(9);
        let n = 40_000;
        let boxed = mix.sample_in_box(&lo, &hi, n, &mut rng).unwrap();
        assert!(boxed.iter().all(|t| inside(t)));
        let mut rejected = Vec::new();
        while rejected.len() < n {
            let t = mix.sample(&mut rng);
            if inside(&t) {
                rejected.push(t);
            }
        }
        for j in 0..2 {
            let m = |v: &[Vec<f64>]| v.iter().map(|t| t[j]).sum::<f64>() / n as f64;
            assert!((m(&boxed) - m(&rejected)).abs() < 0.02, "coordinate {j}");
        }
        assert!(mix.sample_in_box(&[1.0, 0.0], &[1.0, 1.0], 1, &mut rng).is_none());
    }

    #[test]
    fn density_integrates_to_one_in_1d_and_2d() {
        for seed in 0..5 {
            let mdn = perturbed(Mdn::new(2, 1, 3, 8, 2, seed).unwrap(), seed + 100, 0.3);
            let x = [0.3, -0.7];
            let (lo, hi, n) = (-25.0, 25.0, 200_000);
            let h = (hi - lo) / n as f64;
            let mix = mdn.mixture(&x).unwrap();
            let total: f64 = (0..n).map(|i| mix.log_prob(&[lo + (i as f64 + 0.5) * h]).exp() * h).sum();
            assert!((total - 1.0).abs() < 1e-3, "1d seed {seed}: {total}");

            let mdn2 = perturbed(Mdn::new(2, 2, 2, 8, 2, seed).unwrap(), seed + 200, 0.3);
            let mix2 = mdn2.mixture(&x).unwrap();
            let (lo, hi, n) = (-15.0, 15.0, 600);
            let h = (hi - lo) / n as f64;
            let mut total = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let th = [lo + (i as f64 + 0.5) * h, lo + (j as f64 + 0.5) * h];
                    total += mix2.log_prob(&th).exp() * h * h;
                }
            }
            assert!((total - 1.0).abs() < 1e-3, "2d seed {seed}: {total}");
        }
    }

    #[test]
    fn samples_recover_component_mean() {
        let mix = Mixture::from_raw(&[0.0, 2.5, -1.0], 1, 1);
        let sigma = mix.scales[0];
        let mut rng = seeded_rng(8);
        let n = 100_000;
        let mean = (0..n).map(|_| mix.sample(&mut rng)[0]).sum::<f64>() / n as f64;
        assert!((mean - 2.5).abs() < 5.0 * sigma / (n as f64).sqrt());
    }

    #[test]
    fn component_frequencies_follow_weights() {
        let mix = Mixture::from_raw(&[0.0, 0.0, -50.0, 50.0, -5.0, -5.0], 2, 1);
        let mut rng = seeded_rng(21);
        let n = 10_000;
        let left = (0..n).filter(|_| mix.sample(&mut rng)[0] < 0.0).count();
        assert!((left as f64 / n as f64 - 0.5).abs() < 0.02);
    }

    #[test]
    fn seeded_sampling_is_deterministic() {
        let mdn = Mdn::new(1, 2, 3, 6, 2, 4).unwrap();
        let a = mdn.sample(&[0.1], 50, &mut seeded_rng(3)).unwrap();
        let b = mdn.sample(&[0.1], 50, &mut seeded_rng(3)).unwrap();
        assert_eq!(a, b);
        assert!(mdn.sample(&[0.1], 0, &mut seeded_rng(3)).is_err());
    }
}
