//! Weight-update rules.
//!
//! Every rule is a pure function of a [`ForwardTrace`] (plus a label, teacher
//! signal or reward where the rule needs one) returning a [`WeightDelta`].
//! Deltas are applied by [`WeightDelta::apply`], which clips weights to
//! `[-w_max, w_max]`.

mod config;
mod correlation;
mod gradient;
mod hybrid;
mod timing;
mod unsupervised;

pub use config::*;
pub use correlation::{exp_window_kernel, resume_update, reward_stdp_update, window_correlation};
pub use gradient::{
    bp_surrogate_loss, bp_update, soft_spike, soft_spike_derivative, stbp_surrogate_loss,
    stbp_update,
};
pub use hybrid::{
    ann_snn_convert, bal_update, convert_weights, frame_average, plug_in_mutual_information,
    sample_uncertainty, BalSelection,
};
pub use timing::{
    accumulate_timing_delta, chronotron_error, chronotron_update, output_crossings,
    spike_time_error, spikeprop_update, tempotron_kernel, tempotron_update, Crossing,
};
pub use unsupervised::{hebbian_update, sdsp_update, stdp_kernel, stdp_pair, stdp_update};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::network::{ForwardTrace, Network};
use crate::neuron::SpikeRaster;

/// Flags raised while computing a delta.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Diagnostics {
    /// Threshold crossings whose slope was too shallow to linearize.
    pub singular_crossings: usize,
    /// Spike-time terms that used the no-fire fallback.
    pub no_fire_fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightDelta {
    pub d_ih: Array2<f64>,
    pub d_ho: Array2<f64>,
    pub diagnostics: Diagnostics,
}

impl WeightDelta {
    pub fn zeros(n: usize) -> Self {
        Self {
            d_ih: Array2::zeros((n, n)),
            d_ho: Array2::zeros((n, n)),
            diagnostics: Diagnostics::default(),
        }
    }

    pub fn from_parts(d_ih: Array2<f64>, d_ho: Array2<f64>) -> Self {
        Self {
            d_ih,
            d_ho,
            diagnostics: Diagnostics::default(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.d_ih.iter().chain(self.d_ho.iter()).all(|&d| d == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.d_ih.iter().chain(self.d_ho.iter()).all(|d| d.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.d_ih
            .iter()
            .chain(self.d_ho.iter())
            .fold(0.0, |m, d| m.max(d.abs()))
    }

    /// Adds the delta to the network and clips every weight to
    /// `[-w_max, w_max]`.
    pub fn apply(&self, net: &mut Network, w_max: f64) -> Result<()> {
        if self.d_ih.dim() != net.w_ih.dim() || self.d_ho.dim() != net.w_ho.dim() {
            return Err(Error::param("delta shape does not match network"));
        }
        if !self.is_finite() {
            return Err(Error::numeric("non-finite weight delta"));
        }
        net.w_ih.zip_mut_with(&self.d_ih, |w, d| *w = (*w + d).clamp(-w_max, w_max));
        net.w_ho.zip_mut_with(&self.d_ho, |w, d| *w = (*w + d).clamp(-w_max, w_max));
        Ok(())
    }
}

/// Supervisory spike pattern for the output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct TeacherSignal {
    pub raster: SpikeRaster,
    /// Desired spike times (ms) per output neuron, ascending. An empty list
    /// asks the neuron to stay silent.
    pub target_times: Vec<Vec<f64>>,
}

impl TeacherSignal {
    pub fn from_raster(raster: SpikeRaster) -> Self {
        let dt = raster.dt;
        let target_times = (0..raster.neurons())
            .map(|i| raster.spike_steps(i).into_iter().map(|t| t as f64 * dt).collect())
            .collect();
        Self { raster, target_times }
    }

    /// Class 1 asks every output neuron to fire on every step, class 0 asks
    /// for a single spike at step 0.
    pub fn for_label(label: u8, n: usize, steps: usize, dt: f64) -> Self {
        let spikes = Array2::from_shape_fn((n, steps), |(_, t)| {
            u8::from(label == 1 || t == 0)
        });
        Self::from_raster(SpikeRaster::from_spikes(spikes, dt))
    }

    /// Teacher that the trace's output already satisfies exactly: the raster
    /// is the output raster and the target times are the interpolated
    /// threshold crossings of the output layer.
    pub fn matching_output(trace: &ForwardTrace) -> Self {
        let target_times = (0..trace.n())
            .map(|i| output_crossings(trace, i).into_iter().map(|c| c.time).collect())
            .collect();
        Self {
            raster: trace.output.clone(),
            target_times,
        }
    }

    pub(crate) fn check_against(&self, trace: &ForwardTrace) -> Result<()> {
        if self.raster.spikes.dim() != trace.output.spikes.dim() {
            return Err(Error::param(format!(
                "teacher raster {:?} does not match output layer {:?}",
                self.raster.spikes.dim(),
                trace.output.spikes.dim()
            )));
        }
        if self.target_times.len() != trace.n() {
            return Err(Error::param("teacher needs one target list per output neuron"));
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod test_support;
