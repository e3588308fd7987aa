use super::mdn::{mixture_nll_grad, mixture_output_dim};
use super::mlp::Mlp;
use crate::error::{Error, Result};

/// Training objective of a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Mean squared error against `output_dim` targets per row.
    Mse,
    /// Mean negative log-likelihood of `theta_dim` targets per row under the
    /// mixture decoded from the outputs.
    MixtureNll { components: usize, theta_dim: usize },
}

impl LossKind {
    pub fn target_dim(&self, net: &Mlp) -> usize {
        match *self {
            LossKind::Mse => net.arch().output_dim,
            LossKind::MixtureNll { theta_dim, .. } => theta_dim,
        }
    }
}

/// Row-major inputs and targets.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    pub inputs: &'a [f64],
    pub targets: &'a [f64],
    pub len: usize,
}

fn check(net: &Mlp, batch: &Batch<'_>, kind: LossKind) -> Result<()> {
    if batch.len == 0 {
        return Err(Error::invalid("empty batch"));
    }
    let t = kind.target_dim(net);
    if batch.targets.len() != batch.len * t {
        return Err(Error::Dimension {
            what: "targets",
            found: batch.targets.len(),
            expected: batch.len * t,
        });
    }
    if let LossKind::MixtureNll { components, theta_dim } = kind {
        let want = mixture_output_dim(components, theta_dim);
        if net.arch().output_dim != want {
            return Err(Error::Dimension {
                what: "mixture head outputs",
                found: net.arch().output_dim,
                expected: want,
            });
        }
    }
    Ok(())
}

/// Mean loss over the batch and `dL/d(output)`.
fn loss_and_output_grad(out: &[f64], batch: &Batch<'_>, kind: LossKind, out_dim: usize) -> (f64, Vec<f64>) {
    let n = batch.len as f64;
    let mut d_out = vec![0.0; out.len()];
    let mut total = 0.0;
    match kind {
        LossKind::Mse => {
            for ((d, &o), &t) in d_out.iter_mut().zip(out).zip(batch.targets) {
                let r = o - t;
                total += r * r;
                *d = 2.0 * r / n;
            }
        }
        LossKind::MixtureNll { components, theta_dim } => {
            for i in 0..batch.len {
                let raw = &out[i * out_dim..(i + 1) * out_dim];
                let th = &batch.targets[i * theta_dim..(i + 1) * theta_dim];
                let g = &mut d_out[i * out_dim..(i + 1) * out_dim];
                total += mixture_nll_grad(raw, th, components, theta_dim, g);
                g.iter_mut().for_each(|v| *v /= n);
            }
        }
    }
    (total / n, d_out)
}

pub fn loss(net: &Mlp, batch: &Batch<'_>, kind: LossKind) -> Result<f64> {
    check(net, batch, kind)?;
    let acts = net.forward_batch(batch.inputs, batch.len)?;
    let (l, _) = loss_and_output_grad(&acts.output, batch, kind, net.arch().output_dim);
    if !l.is_finite() {
        return Err(Error::NonFinite(format!("loss {l}")));
    }
    Ok(l)
}

/// Mean loss over the batch and its gradient with respect to every parameter.
pub fn grad_loss(net: &Mlp, batch: &Batch<'_>, kind: LossKind) -> Result<(f64, Vec<f64>)> {
    check(net, batch, kind)?;
    let acts = net.forward_batch(batch.inputs, batch.len)?;
    if acts.output.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("network output".into()));
    }
    let (l, d_out) = loss_and_output_grad(&acts.output, batch, kind, net.arch().output_dim);
    if !l.is_finite() {
        return Err(Error::NonFinite(format!("loss {l}")));
    }
    Ok((l, net.backward(&acts, &d_out)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::seeded_rng;
    use crate::nets::mlp::MlpArch;
    use rand::Rng;

    fn random_net(arch: MlpArch, seed: u64) -> Mlp {
        let mut rng = seeded_rng(seed);
        let n = arch.param_count();
        Mlp::from_params(arch, (0..n).map(|_| rng.random_range(-0.8..0.8)).collect()).unwrap()
    }

    fn finite_difference(net: &Mlp, batch: &Batch<'_>, kind: LossKind) -> Vec<f64> {
        let h = 1e-5;
        let mut probe = net.clone();
        (0..net.params().len())
            .map(|i| {
                let p0 = net.params()[i];
                probe.params_mut()[i] = p0 + h;
                let up = loss(&probe, batch, kind).unwrap();
                probe.params_mut()[i] = p0 - h;
                let down = loss(&probe, batch, kind).unwrap();
                probe.params_mut()[i] = p0;
                (up - down) / (2.0 * h)
            })
            .collect()
    }

    fn relative_error(a: &[f64], b: &[f64]) -> f64 {
        let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
        diff / scale.max(1e-12)
    }

    /// Finite-difference check over random small networks; returns the worst relative error.
    pub(crate) fn worst_fd_error(kind_of: impl Fn(u64) -> (MlpArch, LossKind), configs: u64) -> f64 {
        let mut worst: f64 = 0.0;
        for seed in 0..configs {
            let (arch, kind) = kind_of(seed);
            let net = random_net(arch, seed);
            let mut rng = seeded_rng(1000 + seed);
            let len = 5;
            let inputs: Vec<f64> = (0..len * arch.input_dim).map(|_| rng.random_range(-1.5..1.5)).collect();
            let targets: Vec<f64> = (0..len * kind.target_dim(&net)).map(|_| rng.random_range(-1.0..1.0)).collect();
            let batch = Batch {
                inputs: &inputs,
                targets: &targets,
                len,
            };
            let (_, g) = grad_loss(&net, &batch, kind).unwrap();
            worst = worst.max(relative_error(&g, &finite_difference(&net, &batch, kind)));
        }
        worst
    }

    fn mse_config(seed: u64) -> (MlpArch, LossKind) {
        let arch = MlpArch {
            input_dim: 3,
            hidden_units: 6,
            hidden_layers: 3,
            output_dim: 1 + (seed % 2) as usize,
            squash: seed % 3 != 0,
        };
        (arch, LossKind::Mse)
    }

    fn nll_config(seed: u64) -> (MlpArch, LossKind) {
        let components = 1 + (seed % 3) as usize;
        let theta_dim = 1 + (seed % 2) as usize;
        let arch = MlpArch {
            input_dim: 2,
            hidden_units: 6,
            hidden_layers: 3,
            output_dim: mixture_output_dim(components, theta_dim),
            squash: false,
        };
        (arch, LossKind::MixtureNll { components, theta_dim })
    }

    #[test]
    fn mse_gradient_matches_finite_differences() {
        let worst = worst_fd_error(mse_config, 20);
        assert!(worst < 1e-4, "{worst}");
    }

    #[test]
    fn nll_gradient_matches_finite_differences() {
        let worst = worst_fd_error(nll_config, 20);
        assert!(worst < 1e-4, "{worst}");
    }

    #[test]
    fn exact_fit_has_zero_gradient() {
        let net = Mlp::zeros(MlpArch::new(2, 1).with_squash(true));
        let inputs = [0.3, -1.0, 2.0, 0.5];
        let targets = [0.5, 0.5];
        let (l, g) = grad_loss(
            &net,
            &Batch {
                inputs: &inputs,
                targets: &targets,
                len: 2,
            },
            LossKind::Mse,
        )
        .unwrap();
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn batch_gradient_is_mean_of_sample_gradients() {
        for (arch, kind) in [mse_config(1), nll_config(4)] {
            let net = random_net(arch, 9);
            let mut rng = seeded_rng(10);
            let len = 6;
            let td = kind.target_dim(&net);
            let inputs: Vec<f64> = (0..len * arch.input_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let targets: Vec<f64> = (0..len * td).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (_, full) = grad_loss(
                &net,
                &Batch {
                    inputs: &inputs,
                    targets: &targets,
                    len,
                },
                kind,
            )
            .unwrap();
            let mut mean = vec![0.0; full.len()];
            for i in 0..len {
                let b = Batch {
                    inputs: &inputs[i * arch.input_dim..(i + 1) * arch.input_dim],
                    targets: &targets[i * td..(i + 1) * td],
                    len: 1,
                };
                let (_, g) = grad_loss(&net, &b, kind).unwrap();
                mean.iter_mut().zip(&g).for_each(|(m, v)| *m += v / len as f64);
            }
            assert!(full.iter().zip(&mean).all(|(a, b)| (a - b).abs() < 1e-10));
        }
    }

    #[test]
    fn empty_batch_and_bad_targets_are_errors() {
        let net = Mlp::zeros(MlpArch::new(2, 1));
        let empty = Batch {
            inputs: &[],
            targets: &[],
            len: 0,
        };
        assert!(grad_loss(&net, &empty, LossKind::Mse).is_err());
        let bad = Batch {
            inputs: &[0.0, 0.0],
            targets: &[0.0, 1.0],
            len: 1,
        };
        assert!(grad_loss(&net, &bad, LossKind::Mse).is_err());
    }

    #[test]
    fn non_finite_output_is_reported() {
        let mut net = Mlp::zeros(MlpArch::new(1, 1));
        let last = net.params().len() - 1;
        net.params_mut()[last] = f64::NAN;
        let batch = Batch {
            inputs: &[1.0],
            targets: &[0.0],
            len: 1,
        };
        assert!(matches!(grad_loss(&net, &batch, LossKind::Mse), Err(Error::NonFinite(_))));
    }
}
