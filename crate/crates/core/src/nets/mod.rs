//! Feedforward networks with hand-derived reverse-mode gradients, Adam,
//! and a conditional Gaussian mixture head.

mod adam;
mod gemm;
mod loss;
mod mdn;
mod mlp;
mod standardize;
mod truncnorm;

pub use adam::AdamState;
pub use loss::{grad_loss, loss, Batch, LossKind};
pub use mdn::{mixture_output_dim, Mdn, Mixture, SCALE_FLOOR};
pub use mlp::{Activations, Mlp, MlpArch};
pub use standardize::Standardizer;
