//! Leaky integrate-and-fire dynamics and the bit-string/raster boundary.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sources::BinarySequence;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifParams {
    /// Membrane time constant in ms.
    pub tau_m: f64,
    pub threshold: f64,
    pub reset: f64,
    /// Step width in ms.
    pub dt: f64,
    /// Per-step leak factor applied to the membrane potential.
    pub decay: f64,
}

impl LifParams {
    /// Parameters whose leak factor follows from the membrane time constant.
    pub fn from_tau(tau_m: f64, threshold: f64) -> Result<Self> {
        let dt = 1.0;
        let p = Self {
            tau_m,
            threshold,
            reset: 0.0,
            dt,
            decay: (-dt / tau_m).exp(),
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with an explicit leak factor, which takes precedence over
    /// `tau_m`. The stored `tau_m` is the equivalent time constant.
    pub fn from_decay(decay: f64, threshold: f64) -> Result<Self> {
        let dt = 1.0;
        let tau_m = if decay < 1.0 { -dt / decay.ln() } else { f64::INFINITY };
        let p = Self {
            tau_m,
            threshold,
            reset: 0.0,
            dt,
            decay,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_m > 0.0) {
            return Err(Error::param(format!("tau_m must be > 0, got {}", self.tau_m)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.threshold.is_finite() && self.reset.is_finite() && self.threshold > self.reset) {
            return Err(Error::param(format!(
                "threshold ({}) must exceed reset ({})",
                self.threshold, self.reset
            )));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::param(format!("decay must lie in (0, 1], got {}", self.decay)));
        }
        Ok(())
    }
}

impl Default for LifParams {
    fn default() -> Self {
        Self::from_decay(0.1, 0.1).expect("default LIF parameters are valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifState {
    pub u: f64,
    /// Time of the most recent spike in ms.
    pub last_spike_time: Option<f64>,
}

impl LifState {
    pub fn resting(params: &LifParams) -> Self {
        Self {
            u: params.reset,
            last_spike_time: None,
        }
    }
}

/// Outcome of one integration step. `potential` is the value compared against
/// the threshold, recorded before any reset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    pub state: LifState,
    pub spike: u8,
    pub potential: f64,
}

/// Advances one neuron by `dt` under constant drive `z`.
///
/// The update `u <- decay * u + (1 - decay) * z` integrates
/// `tau_m du/dt = -u + z` exactly for piecewise-constant input.
pub fn lif_step(state: LifState, z: f64, time: f64, params: &LifParams) -> Result<StepOutput> {
    if !z.is_finite() || !state.u.is_finite() {
        return Err(Error::numeric(format!("non-finite LIF input: u={}, z={z}", state.u)));
    }
    let u = params.decay * state.u + (1.0 - params.decay) * z;
    if u >= params.threshold {
        Ok(StepOutput {
            state: LifState {
                u: params.reset,
                last_spike_time: Some(time),
            },
            spike: 1,
            potential: u,
        })
    } else {
        Ok(StepOutput {
            state: LifState {
                u,
                last_spike_time: state.last_spike_time,
            },
            spike: 0,
            potential: u,
        })
    }
}

/// `w . x + b`.
pub fn input_current(weights: &[f64], x: &[f64], bias: f64) -> Result<f64> {
    if weights.len() != x.len() {
        return Err(Error::param(format!(
            "weight vector has {} entries, input has {}",
            weights.len(),
            x.len()
        )));
    }
    Ok(weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + bias)
}

/// Spike matrix (neurons x steps) with the potentials that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeRaster {
    pub spikes: Array2<u8>,
    pub potentials: Array2<f64>,
    pub dt: f64,
}

impl SpikeRaster {
    pub fn zeros(neurons: usize, steps: usize, dt: f64) -> Self {
        Self {
            spikes: Array2::zeros((neurons, steps)),
            potentials: Array2::zeros((neurons, steps)),
            dt,
        }
    }

    /// Raster whose potentials mirror the spikes, as for externally driven
    /// inputs and teacher signals.
    pub fn from_spikes(spikes: Array2<u8>, dt: f64) -> Self {
        let potentials = spikes.mapv(f64::from);
        Self { spikes, potentials, dt }
    }

    pub fn neurons(&self) -> usize {
        self.spikes.nrows()
    }

    pub fn steps(&self) -> usize {
        self.spikes.ncols()
    }

    pub fn spike_count(&self) -> usize {
        self.spikes.iter().map(|&s| s as usize).sum()
    }

    /// Spike step indices of one neuron.
    pub fn spike_steps(&self, neuron: usize) -> Vec<usize> {
        self.spikes
            .row(neuron)
            .iter()
            .enumerate()
            .filter_map(|(t, &s)| (s == 1).then_some(t))
            .collect()
    }

    /// Spike matrix as floats, for correlation arithmetic.
    pub fn spikes_f64(&self) -> Array2<f64> {
        self.spikes.mapv(f64::from)
    }
}

/// Splits `seq` into frames of `n` bits; frame `t` drives the `n` input
/// neurons at step `t`. The last frame is zero-padded.
pub fn encode(seq: &BinarySequence, n: usize) -> Result<SpikeRaster> {
    if n == 0 {
        return Err(Error::param("layer width must be positive"));
    }
    let bits = seq.bits();
    let steps = bits.len().div_ceil(n);
    let mut spikes = Array2::<u8>::zeros((n, steps));
    for (k, &b) in bits.iter().enumerate() {
        spikes[[k % n, k / n]] = b;
    }
    Ok(SpikeRaster::from_spikes(spikes, 1.0))
}

/// Concatenates the raster's columns (time-major) and truncates to
/// `target_length` bits.
pub fn decode(raster: &SpikeRaster, target_length: usize) -> Result<BinarySequence> {
    let (n, steps) = raster.spikes.dim();
    if n == 0 || steps == 0 {
        return Err(Error::param("cannot decode an empty raster"));
    }
    if target_length > n * steps {
        return Err(Error::param(format!(
            "target length {target_length} exceeds raster capacity {}",
            n * steps
        )));
    }
    let bits = (0..target_length)
        .map(|k| raster.spikes[[k % n, k / n]])
        .collect();
    BinarySequence::new(bits)
}
