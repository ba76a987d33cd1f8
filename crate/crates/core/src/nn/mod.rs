//! Feed-forward networks, the adaptive-moment optimizer and parameter snapshots.

mod adam;
mod mlp;
pub mod snapshot;

pub use adam::{clip_global_norm, Adam, AdamConfig};
pub use mlp::{param_count, softmax_in_place, Activation, Head, Mlp, Tape};

use crate::error::{check_len, Result};

/// Applies one optimizer step to several networks trained as one parameter
/// vector: gradients are clipped to `max_norm` by their joint norm, then
/// each network takes its own Adam step. Returns the pre-clip norm.
///
/// Non-finite gradients abort before any network changes.
pub fn joint_step(nets: &mut [&mut Mlp], optimizers: &mut [Adam], grads: &mut [Vec<f64>], max_norm: f64) -> Result<f64> {
    check_len("optimizer count", nets.len(), optimizers.len())?;
    check_len("gradient count", nets.len(), grads.len())?;
    for (net, g) in nets.iter().zip(grads.iter()) {
        check_len("network gradient", net.params().len(), g.len())?;
        crate::error::check_finite("network gradient", g)?;
    }
    let norm = grads.iter().flatten().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        grads.iter_mut().flatten().for_each(|g| *g *= scale);
    }
    for ((net, opt), g) in nets.iter_mut().zip(optimizers.iter_mut()).zip(grads.iter()) {
        opt.step(net.params_mut(), g)?;
    }
    Ok(norm)
}

/// Hidden-layer widths and activation shared by every learned map.
#[derive(Clone, Debug, PartialEq)]
pub struct NetShape {
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for NetShape {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            activation: Activation::Tanh,
        }
    }
}

impl NetShape {
    pub fn layer_sizes(&self, input: usize, output: usize) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden.len() + 2);
        sizes.push(input);
        sizes.extend_from_slice(&self.hidden);
        sizes.push(output);
        sizes
    }
}
