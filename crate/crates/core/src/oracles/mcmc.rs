//! Adaptive random-walk Metropolis with multiple chains.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::domain::{seeded_rng, split_seed, TaskId};
use crate::error::{Error, Result};
use crate::simulators::{LvModel, Prior};

pub const RHAT_LIMIT: f64 = 1.05;

/// An unnormalized log density.
pub trait LogDensity {
    fn dim(&self) -> usize;
    fn log_density(&self, z: &[f64]) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub chains: usize,
    /// Adaptation steps per chain, discarded.
    pub burn_in: usize,
    /// Retained draws per chain.
    pub samples: usize,
    pub thin: usize,
    /// Prior draws screened for starting points.
    pub init_candidates: usize,
    pub target_acceptance: f64,
    /// Transitions recorded per chain for inspection.
    pub trace_len: usize,
    pub seed: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            chains: 4,
            burn_in: 5_000,
            samples: 10_000,
            thin: 1,
            init_candidates: 1_000,
            target_acceptance: 0.234,
            trace_len: 0,
            seed: 0,
        }
    }
}

impl ChainConfig {
    /// Digest of every field, used to key cached references.
    pub fn fingerprint(&self) -> Vec<u8> {
        let mut b = Vec::new();
        for v in [self.chains, self.burn_in, self.samples, self.thin, self.init_candidates, self.trace_len] {
            b.extend((v as u64).to_le_bytes());
        }
        b.extend(self.target_acceptance.to_le_bytes());
        b.extend(self.seed.to_le_bytes());
        b
    }
}

/// One Metropolis proposal, as evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub current: Vec<f64>,
    pub proposal: Vec<f64>,
    pub log_ratio: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McmcChain {
    pub dim: usize,
    /// Retained draws per chain, each `samples × dim` row-major.
    pub chains: Vec<Vec<f64>>,
    /// Post-adaptation acceptance rate averaged over chains.
    pub acceptance_rate: f64,
    pub rhat: Vec<f64>,
    pub seed: u64,
    pub trace: Vec<Transition>,
}

impl McmcChain {
    pub fn draws(&self) -> impl Iterator<Item = &[f64]> {
        self.chains.iter().flat_map(move |c| c.chunks_exact(self.dim))
    }

    pub fn len(&self) -> usize {
        self.chains.iter().map(|c| c.len() / self.dim).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.len() as f64;
        let mut m = vec![0.0; self.dim];
        for d in self.draws() {
            for (mi, v) in m.iter_mut().zip(d) {
                *mi += v / n;
            }
        }
        m
    }

    /// Monte-Carlo standard error of each marginal mean, by batch means
    /// within each chain.
    pub fn mcse(&self) -> Vec<f64> {
        let per = self.chains[0].len() / self.dim;
        let batch = ((per as f64).sqrt() as usize).max(1);
        let nb = per / batch;
        (0..self.dim)
            .map(|d| {
                let mut means = Vec::new();
                for c in &self.chains {
                    for b in 0..nb {
                        let s: f64 = (b * batch..(b + 1) * batch).map(|i| c[i * self.dim + d]).sum();
                        means.push(s / batch as f64);
                    }
                }
                let k = means.len() as f64;
                let mu = means.iter().sum::<f64>() / k;
                let var = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (k - 1.0);
                (var / k).sqrt()
            })
            .collect()
    }

    /// Maps every draw through `f`, e.g. from log space to rates.
    pub fn map(mut self, f: impl Fn(f64) -> f64) -> Self {
        for c in &mut self.chains {
            c.iter_mut().for_each(|v| *v = f(*v));
        }
        self
    }
}

/// Gelman-Rubin potential scale reduction for each marginal.
pub fn gelman_rubin(chains: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let m = chains.len() as f64;
    let n = (chains[0].len() / dim) as f64;
    (0..dim)
        .map(|d| {
            let stats: Vec<(f64, f64)> = chains
                .iter()
                .map(|c| {
                    let vals = c.chunks_exact(dim).map(|r| r[d]);
                    let mean = vals.clone().sum::<f64>() / n;
                    let var = vals.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
                    (mean, var)
                })
                .collect();
            let grand = stats.iter().map(|s| s.0).sum::<f64>() / m;
            let b = n / (m - 1.0) * stats.iter().map(|s| (s.0 - grand).powi(2)).sum::<f64>();
            let w = stats.iter().map(|s| s.1).sum::<f64>() / m;
            let var_plus = (n - 1.0) / n * w + b / n;
            (var_plus / w).sqrt()
        })
        .collect()
}

/// Lower-triangular Cholesky factor of a small SPD matrix, with jitter.
fn cholesky(a: &[f64], d: usize) -> Vec<f64> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            l[i * d + j] = if i == j { s.max(1e-12).sqrt() } else { s / l[j * d + j] };
        }
    }
    l
}

struct Walker<'a, T: LogDensity> {
    target: &'a T,
    rng: ChaCha8Rng,
    z: Vec<f64>,
    lp: f64,
    chol: Vec<f64>,
    scale: f64,
}

impl<T: LogDensity> Walker<'_, T> {
    fn step(&mut self, trace: Option<&mut Vec<Transition>>) -> bool {
        let d = self.z.len();
        let eps: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut self.rng)).collect();
        let mut prop = self.z.clone();
        for i in 0..d {
            prop[i] += self.scale * (0..=i).map(|k| self.chol[i * d + k] * eps[k]).sum::<f64>();
        }
        let lp_new = self.target.log_density(&prop);
        let log_ratio = lp_new - self.lp;
        let u: f64 = self.rng.random();
        let accepted = lp_new.is_finite() && (log_ratio >= 0.0 || u.ln() < log_ratio);
        if let Some(t) = trace {
            t.push(Transition {
                current: self.z.clone(),
                proposal: prop.clone(),
                log_ratio,
                accepted,
            });
        }
        if accepted {
            self.z = prop;
            self.lp = lp_new;
        }
        accepted
    }
}

/// Runs `cfg.chains` chains started from the highest-density prior draws.
///
/// During burn-in the proposal covariance tracks the empirical covariance of
/// the chain and a global scale is tuned towards the target acceptance;
/// both are frozen afterwards.
pub fn run_chains<T: LogDensity>(target: &T, mut init: impl FnMut(&mut ChaCha8Rng) -> Vec<f64>, cfg: &ChainConfig) -> Result<McmcChain> {
    if cfg.chains < 2 || cfg.samples < 2 || cfg.thin == 0 || cfg.init_candidates < cfg.chains {
        return Err(Error::invalid("MCMC needs ≥ 2 chains, ≥ 2 samples, thin ≥ 1 and enough start candidates"));
    }
    let d = target.dim();
    let mut rng = seeded_rng(split_seed(cfg.seed, 0));
    let mut cands: Vec<(f64, Vec<f64>)> = (0..cfg.init_candidates)
        .map(|_| {
            let z = init(&mut rng);
            (target.log_density(&z), z)
        })
        .filter(|(lp, _)| lp.is_finite())
        .collect();
    if cands.len() < cfg.chains {
        return Err(Error::invalid("too few starting points with finite density"));
    }
    cands.sort_by(|a, b| b.0.total_cmp(&a.0));

    // Initial proposal scale from the spread of the best candidates.
    let top = &cands[..cands.len().min(50)];
    let spread: Vec<f64> = (0..d)
        .map(|i| {
            let m = top.iter().map(|c| c.1[i]).sum::<f64>() / top.len() as f64;
            let v = top.iter().map(|c| (c.1[i] - m).powi(2)).sum::<f64>() / top.len() as f64;
            v.sqrt().max(1e-3) * 0.1
        })
        .collect();

    let mut out = McmcChain {
        dim: d,
        chains: Vec::new(),
        acceptance_rate: 0.0,
        rhat: Vec::new(),
        seed: cfg.seed,
        trace: Vec::new(),
    };
    for c in 0..cfg.chains {
        let (lp, z) = cands[c].clone();
        let mut chol = vec![0.0; d * d];
        for i in 0..d {
            chol[i * d + i] = spread[i];
        }
        let mut w = Walker {
            target,
            rng: seeded_rng(split_seed(cfg.seed, c as u64 + 1)),
            z,
            lp,
            chol,
            scale: 1.0,
        };
        let mut mean = vec![0.0; d];
        let mut cov = vec![0.0; d * d];
        let mut window_acc = 0usize;
        let window = 100;
        for t in 1..=cfg.burn_in {
            let trace = (out.trace.len() < cfg.trace_len * (c + 1)).then_some(&mut out.trace);
            window_acc += usize::from(w.step(trace));
            // Running moments of the burn-in path.
            let tf = t as f64;
            let delta: Vec<f64> = w.z.iter().zip(&mean).map(|(z, m)| z - m).collect();
            for i in 0..d {
                mean[i] += delta[i] / tf;
            }
            for i in 0..d {
                for j in 0..d {
                    cov[i * d + j] += (delta[i] * (w.z[j] - mean[j]) - cov[i * d + j]) / tf;
                }
            }
            if t % window == 0 {
                let rate = window_acc as f64 / window as f64;
                w.scale *= (rate - cfg.target_acceptance).exp();
                window_acc = 0;
                if t >= 10 * window {
                    let mut c2 = cov.clone();
                    for i in 0..d {
                        c2[i * d + i] += 1e-10;
                    }
                    let factor = 2.38 / (d as f64).sqrt();
                    w.chol = cholesky(&c2, d).into_iter().map(|v| v * factor).collect();
                    w.scale = w.scale.clamp(0.05, 20.0);
                }
            }
        }
        let mut kept = Vec::with_capacity(cfg.samples * d);
        let mut accepted = 0usize;
        let total = cfg.samples * cfg.thin;
        for t in 0..total {
            let trace = (out.trace.len() < cfg.trace_len * (c + 1)).then_some(&mut out.trace);
            accepted += usize::from(w.step(trace));
            if (t + 1) % cfg.thin == 0 {
                kept.extend_from_slice(&w.z);
            }
        }
        out.acceptance_rate += accepted as f64 / total as f64 / cfg.chains as f64;
        out.chains.push(kept);
    }
    out.rhat = gelman_rubin(&out.chains, d);
    Ok(out)
}

/// Fails with the worst marginal when any R̂ reaches the limit.
pub fn check_convergence(chain: &McmcChain) -> Result<()> {
    let (marginal, rhat) = chain
        .rhat
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, f64::NAN));
    if !(rhat < RHAT_LIMIT) {
        return Err(Error::NonConvergence { marginal, rhat });
    }
    Ok(())
}

/// Log posterior of the Lotka-Volterra rates in log space.
pub struct LvLogPosterior<'a> {
    pub model: LvModel,
    pub x_o: &'a [f64],
    prior: Prior,
}

impl<'a> LvLogPosterior<'a> {
    pub fn new(x_o: &'a [f64]) -> Result<Self> {
        let model = LvModel::default();
        if x_o.len() != 2 * model.n_obs || x_o.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::invalid("Lotka-Volterra observations must be 20 positive finite readings"));
        }
        Ok(LvLogPosterior {
            model,
            x_o,
            prior: Prior::for_task(TaskId::LotkaVolterra),
        })
    }
}

impl LogDensity for LvLogPosterior<'_> {
    fn dim(&self) -> usize {
        4
    }

    fn log_density(&self, z: &[f64]) -> f64 {
        let rates: Vec<f64> = z.iter().map(|v| v.exp()).collect();
        // Prior density of θ times the Jacobian e^z.
        let lp = self.prior.ln_pdf(&rates) + z.iter().sum::<f64>();
        if !lp.is_finite() {
            return f64::NEG_INFINITY;
        }
        let Ok(mean) = self.model.mean_observation(&rates) else {
            return f64::NEG_INFINITY;
        };
        let s2 = self.model.log_noise * self.model.log_noise;
        lp - self.x_o.iter().zip(&mean).map(|(o, m)| (o.ln() - m.ln()).powi(2)).sum::<f64>() / (2.0 * s2)
    }
}

/// Reference posterior samples for a Lotka-Volterra observation, in rate
/// space. Errors if the chains have not mixed.
pub fn posterior_mcmc_lv(x_o: &[f64], cfg: &ChainConfig) -> Result<McmcChain> {
    let target = LvLogPosterior::new(x_o)?;
    let prior = Prior::for_task(TaskId::LotkaVolterra);
    let chain = run_chains(&target, |rng| prior.sample(rng).iter().map(|v| v.ln()).collect(), cfg)?;
    check_convergence(&chain)?;
    Ok(chain.map(f64::exp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::gaussian::posterior_linear_gaussian;
    use crate::simulators::{simulate_linear_gaussian, simulate_lotka_volterra, LG_NOISE_VAR};

    struct LgTarget(Vec<f64>);

    impl LogDensity for LgTarget {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn log_density(&self, z: &[f64]) -> f64 {
            z.iter().zip(&self.0).map(|(t, x)| -0.5 * t * t - 0.5 * (x - t).powi(2) / LG_NOISE_VAR).sum()
        }
    }

    fn lg_chain(seed: u64, trace_len: usize) -> (McmcChain, Vec<f64>, LgTarget) {
        let theta = Prior::for_task(TaskId::LinearGaussian).sample(&mut seeded_rng(5));
        let x = simulate_linear_gaussian(&theta, &mut seeded_rng(6)).unwrap();
        let target = LgTarget(x.clone());
        let prior = Prior::for_task(TaskId::LinearGaussian);
        let cfg = ChainConfig {
            seed,
            trace_len,
            ..Default::default()
        };
        (run_chains(&target, |r| prior.sample(r), &cfg).unwrap(), x, target)
    }

    #[test]
    fn linear_gaussian_mean_matches_analytic() {
        let (chain, x, _) = lg_chain(1, 0);
        check_convergence(&chain).unwrap();
        assert!(chain.acceptance_rate > 0.1 && chain.acceptance_rate < 0.6, "{}", chain.acceptance_rate);
        let exact = posterior_linear_gaussian(&x).unwrap();
        let (m, se) = (chain.mean(), chain.mcse());
        for d in 0..10 {
            assert!(
                (m[d] - exact.mean[d]).abs() < 3.0 * se[d] + 1e-3,
                "coord {d}: {} vs {} (se {})",
                m[d],
                exact.mean[d],
                se[d]
            );
        }
    }

    #[test]
    fn transitions_follow_the_metropolis_rule() {
        let (chain, _, target) = lg_chain(2, 200);
        assert_eq!(chain.trace.len(), 800);
        for t in &chain.trace {
            let want = target.log_density(&t.proposal) - target.log_density(&t.current);
            assert!((t.log_ratio - want).abs() < 1e-9);
            if t.log_ratio >= 0.0 {
                assert!(t.accepted);
            }
        }
    }

    #[test]
    fn lotka_volterra_chains_agree_across_seeds() {
        let theta = [0.9, 0.05, 0.9, 0.05];
        let x = simulate_lotka_volterra(&theta, &mut seeded_rng(4)).unwrap();
        let a = posterior_mcmc_lv(&x, &ChainConfig { seed: 1, ..Default::default() }).unwrap();
        let b = posterior_mcmc_lv(&x, &ChainConfig { seed: 2, ..Default::default() }).unwrap();
        assert!(a.chains.iter().all(|c| c.len() / 4 >= 10_000));
        let (ma, mb, sa, sb) = (a.mean(), b.mean(), a.mcse(), b.mcse());
        for d in 0..4 {
            let tol = 3.0 * (sa[d].powi(2) + sb[d].powi(2)).sqrt();
            assert!((ma[d] - mb[d]).abs() < tol, "marginal {d}: {} vs {} (tol {tol})", ma[d], mb[d]);
        }
        for d in 0..4 {
            assert!((ma[d] / theta[d]).ln().abs() < 0.5, "{ma:?}");
        }
    }

    #[test]
    fn rhat_flags_disagreeing_chains() {
        let c1: Vec<f64> = (0..500).map(|i| (i as f64 * 0.1).sin()).collect();
        let c2: Vec<f64> = c1.iter().map(|v| v + 5.0).collect();
        let r = gelman_rubin(&[c1.clone(), c2], 1);
        assert!(r[0] > 2.0);
        let chain = McmcChain {
            dim: 1,
            chains: vec![c1.clone(), c1],
            acceptance_rate: 0.3,
            rhat: vec![2.0],
            seed: 0,
            trace: vec![],
        };
        assert!(matches!(check_convergence(&chain), Err(Error::NonConvergence { .. })));
    }
}
