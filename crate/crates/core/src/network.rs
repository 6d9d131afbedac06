//! Three-layer feed-forward LIF network and its forward simulation.

use std::io::{Read, Write};

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::neuron::{lif_step, LifParams, LifState, SpikeRaster};
use crate::rng::{derived_rng, stream};

/// Layer widths supported by `init_network`.
pub const WIDTH_GRID: [usize; 7] = [16, 32, 64, 128, 256, 512, 1024];

/// Input, hidden and output layers of equal width, densely connected.
///
/// `w_ih[[i, j]]` is the weight from input `j` onto hidden neuron `i`, and
/// likewise for `w_ho`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub n: usize,
    pub w_ih: Array2<f64>,
    pub w_ho: Array2<f64>,
    pub bias_h: Array1<f64>,
    pub bias_o: Array1<f64>,
    pub params: LifParams,
}

impl Network {
    pub fn from_parts(
        w_ih: Array2<f64>,
        w_ho: Array2<f64>,
        bias_h: Array1<f64>,
        bias_o: Array1<f64>,
        params: LifParams,
    ) -> Result<Self> {
        let n = w_ih.nrows();
        if n == 0 {
            return Err(Error::param("network width must be positive"));
        }
        if w_ih.dim() != (n, n) || w_ho.dim() != (n, n) || bias_h.len() != n || bias_o.len() != n {
            return Err(Error::param(format!(
                "inconsistent shapes: w_ih {:?}, w_ho {:?}, bias_h {}, bias_o {}",
                w_ih.dim(),
                w_ho.dim(),
                bias_h.len(),
                bias_o.len()
            )));
        }
        params.validate()?;
        let net = Self {
            n,
            w_ih,
            w_ho,
            bias_h,
            bias_o,
            params,
        };
        net.check_finite()?;
        Ok(net)
    }

    pub fn zeros(n: usize, params: LifParams) -> Result<Self> {
        Self::from_parts(
            Array2::zeros((n, n)),
            Array2::zeros((n, n)),
            Array1::zeros(n),
            Array1::zeros(n),
            params,
        )
    }

    pub fn check_finite(&self) -> Result<()> {
        let finite = self.w_ih.iter().all(|w| w.is_finite())
            && self.w_ho.iter().all(|w| w.is_finite())
            && self.bias_h.iter().all(|b| b.is_finite())
            && self.bias_o.iter().all(|b| b.is_finite());
        if finite {
            Ok(())
        } else {
            Err(Error::numeric("network contains non-finite weights"))
        }
    }

    /// Serializes to the versioned little-endian checkpoint format: magic,
    /// version, width, LIF parameters, then row-major `w_ih`, `w_ho`,
    /// `bias_h` and `bias_o` as f64.
    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        let p = &self.params;
        for v in [p.tau_m, p.threshold, p.reset, p.dt, p.decay] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in self
            .w_ih
            .iter()
            .chain(self.w_ho.iter())
            .chain(self.bias_h.iter())
            .chain(self.bias_o.iter())
        {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Self> {
        let fmt = |e: std::io::Error| Error::Format(format!("truncated checkpoint: {e}"));
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(fmt)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4).map_err(fmt)?;
        let version = u32::from_le_bytes(b4);
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8).map_err(fmt)?;
        let n = u64::from_le_bytes(b8) as usize;
        if n == 0 || n > 1 << 16 {
            return Err(Error::Format(format!("implausible width {n}")));
        }
        let mut read_f64s = |count: usize| -> Result<Vec<f64>> {
            let mut buf = vec![0u8; count * 8];
            r.read_exact(&mut buf).map_err(fmt)?;
            Ok(buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect())
        };
        let p = read_f64s(5)?;
        let params = LifParams {
            tau_m: p[0],
            threshold: p[1],
            reset: p[2],
            dt: p[3],
            decay: p[4],
        };
        let w_ih = Array2::from_shape_vec((n, n), read_f64s(n * n)?).unwrap();
        let w_ho = Array2::from_shape_vec((n, n), read_f64s(n * n)?).unwrap();
        let bias_h = Array1::from(read_f64s(n)?);
        let bias_o = Array1::from(read_f64s(n)?);
        Self::from_parts(w_ih, w_ho, bias_h, bias_o, params)
    }
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"SNNW";
const CHECKPOINT_VERSION: u32 = 1;

/// Default init half-width `0.5 / sqrt(n)`.
pub fn default_init_scale(n: usize) -> f64 {
    0.5 / (n as f64).sqrt()
}

/// Uniform `[-scale, scale]` weights, zero biases.
pub fn init_network(n: usize, seed: u64, scale: f64, params: LifParams) -> Result<Network> {
    if !WIDTH_GRID.contains(&n) {
        return Err(Error::param(format!("layer width {n} is not in {WIDTH_GRID:?}")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::param(format!("init scale must be > 0, got {scale}")));
    }
    let mut rng = derived_rng(seed, stream::INIT, n as u64);
    let mut sample = || Array2::from_shape_fn((n, n), |_| rng.random_range(-scale..=scale));
    let w_ih = sample();
    let w_ho = sample();
    Network::from_parts(w_ih, w_ho, Array1::zeros(n), Array1::zeros(n), params)
}

/// Full activity record of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub input: SpikeRaster,
    pub hidden: SpikeRaster,
    pub output: SpikeRaster,
    /// Net drive onto each hidden neuron per step.
    pub z_hidden: Array2<f64>,
    /// Net drive onto each output neuron per step.
    pub z_output: Array2<f64>,
    pub params: LifParams,
}

impl ForwardTrace {
    pub fn steps(&self) -> usize {
        self.input.steps()
    }

    pub fn n(&self) -> usize {
        self.input.neurons()
    }
}

/// Simulates the network on an input raster. Spikes propagate through all
/// three layers within the same step.
pub fn forward(net: &Network, input: &SpikeRaster) -> Result<ForwardTrace> {
    let n = net.n;
    if input.neurons() != n {
        return Err(Error::param(format!(
            "input raster has {} neurons, network expects {n}",
            input.neurons()
        )));
    }
    let steps = input.steps();
    let params = net.params;
    let mut hidden = SpikeRaster::zeros(n, steps, params.dt);
    let mut output = SpikeRaster::zeros(n, steps, params.dt);
    let mut z_hidden = Array2::zeros((n, steps));
    let mut z_output = Array2::zeros((n, steps));
    let mut hidden_state = vec![LifState::resting(&params); n];
    let mut output_state = vec![LifState::resting(&params); n];
    let mut active = Vec::with_capacity(n);

    for t in 0..steps {
        let time = t as f64 * params.dt;

        active.clear();
        active.extend((0..n).filter(|&j| input.spikes[[j, t]] == 1));
        for i in 0..n {
            let row = net.w_ih.row(i);
            let z = net.bias_h[i] + active.iter().map(|&j| row[j]).sum::<f64>();
            let out = lif_step(hidden_state[i], z, time, &params)?;
            hidden_state[i] = out.state;
            z_hidden[[i, t]] = z;
            hidden.potentials[[i, t]] = out.potential;
            hidden.spikes[[i, t]] = out.spike;
        }

        active.clear();
        active.extend((0..n).filter(|&j| hidden.spikes[[j, t]] == 1));
        for i in 0..n {
            let row = net.w_ho.row(i);
            let z = net.bias_o[i] + active.iter().map(|&j| row[j]).sum::<f64>();
            let out = lif_step(output_state[i], z, time, &params)?;
            output_state[i] = out.state;
            z_output[[i, t]] = z;
            output.potentials[[i, t]] = out.potential;
            output.spikes[[i, t]] = out.spike;
        }
    }

    Ok(ForwardTrace {
        input: input.clone(),
        hidden,
        output,
        z_hidden,
        z_output,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuron::encode;
    use crate::sources::gen_bernoulli;
    use ndarray::array;

    fn params() -> LifParams {
        LifParams::from_decay(0.5, 1.0).unwrap()
    }

    #[test]
    fn zero_network_is_silent() {
        let net = Network::zeros(16, params()).unwrap();
        let seq = gen_bernoulli(0.7, 1024, 1).unwrap();
        let tr = forward(&net, &encode(&seq, 16).unwrap()).unwrap();
        assert_eq!(tr.hidden.spike_count(), 0);
        assert_eq!(tr.output.spike_count(), 0);
    }

    #[test]
    fn init_is_deterministic_and_centered() {
        let a = init_network(128, 3, 0.1, params()).unwrap();
        let b = init_network(128, 3, 0.1, params()).unwrap();
        assert_eq!(a, b);
        assert!(a.w_ih.mean().unwrap().abs() < 0.005);
        assert!(a.w_ih.iter().all(|w| w.abs() <= 0.1));
        assert!(a.bias_h.iter().all(|&b| b == 0.0));
        assert!(init_network(100, 3, 0.1, params()).is_err());
        assert!(init_network(128, 3, 0.0, params()).is_err());
    }

    #[test]
    fn same_step_propagation() {
        // Input 0 fires at step 0; (1 - 0.5) * 2.0 = 1.0 reaches threshold in
        // one step at both layers.
        let w_ih = array![[2.0, 0.0], [0.0, 0.0]];
        let w_ho = array![[0.0, 0.0], [2.0, 0.0]];
        let net =
            Network::from_parts(w_ih, w_ho, Array1::zeros(2), Array1::zeros(2), params()).unwrap();
        let input = SpikeRaster::from_spikes(array![[1, 0], [0, 0]], 1.0);
        let tr = forward(&net, &input).unwrap();
        assert_eq!(tr.hidden.spikes, array![[1, 0], [0, 0]]);
        assert_eq!(tr.output.spikes, array![[0, 0], [1, 0]]);
        assert_eq!(tr.output.potentials[[1, 0]], 1.0);
        assert_eq!(tr.z_output[[1, 0]], 2.0);
    }

    #[test]
    fn shape_mismatch() {
        let net = Network::zeros(4, params()).unwrap();
        let input = SpikeRaster::zeros(3, 2, 1.0);
        assert!(forward(&net, &input).is_err());
        assert!(Network::from_parts(
            Array2::zeros((2, 2)),
            Array2::zeros((3, 3)),
            Array1::zeros(2),
            Array1::zeros(2),
            params()
        )
        .is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let net = init_network(16, 9, 0.3, params()).unwrap();
        let mut buf = Vec::new();
        net.write_checkpoint(&mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 8 + 5 * 8 + (2 * 16 * 16 + 2 * 16) * 8);
        assert_eq!(Network::read_checkpoint(buf.as_slice()).unwrap(), net);
        buf[0] = b'X';
        assert!(Network::read_checkpoint(buf.as_slice()).is_err());
        assert!(Network::read_checkpoint(&buf[..10]).is_err());
    }
}
