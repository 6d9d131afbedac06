use ndarray::Array2;

use crate::network::ForwardTrace;
use crate::neuron::{LifParams, SpikeRaster};

/// Trace with the given spike matrices; potentials mirror the spikes.
pub(crate) fn trace_from_spikes(x: Array2<u8>, h: Array2<u8>, o: Array2<u8>) -> ForwardTrace {
    let dim = x.dim();
    ForwardTrace {
        input: SpikeRaster::from_spikes(x, 1.0),
        hidden: SpikeRaster::from_spikes(h, 1.0),
        output: SpikeRaster::from_spikes(o, 1.0),
        z_hidden: Array2::zeros(dim),
        z_output: Array2::zeros(dim),
        params: LifParams::from_decay(0.5, 1.0).unwrap(),
    }
}
