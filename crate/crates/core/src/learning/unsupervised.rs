//! Label-free rules: Hebbian coincidence, pair-based STDP and SDSP.

use ndarray::{Array1, Array2};

use super::{HebbianConfig, SdspConfig, StdpConfig, WeightDelta};
use crate::network::ForwardTrace;

/// `eta * sum_t S_post(t) S_pre(t)` for both weight matrices.
pub fn hebbian_update(trace: &ForwardTrace, cfg: &HebbianConfig) -> WeightDelta {
    let x = trace.input.spikes_f64();
    let h = trace.hidden.spikes_f64();
    let o = trace.output.spikes_f64();
    // Coincidence counts are exact small integers in f64.
    let d_ih = h.dot(&x.t()).mapv(|c| cfg.eta * c);
    let d_ho = o.dot(&h.t()).mapv(|c| cfg.eta * c);
    WeightDelta::from_parts(d_ih, d_ho)
}

/// Contribution of one spike pair separated by `t_post - t_pre` ms.
/// Simultaneous spikes contribute nothing.
pub fn stdp_pair(delta_t: f64, cfg: &StdpConfig) -> f64 {
    if delta_t > 0.0 {
        cfg.a_plus * (-delta_t / cfg.tau_plus).exp()
    } else if delta_t < 0.0 {
        -cfg.a_minus * (delta_t / cfg.tau_minus).exp()
    } else {
        0.0
    }
}

/// Pairing kernel over step indices, `K[[t_post, t_pre]]`, zero beyond
/// `5 * max(tau_plus, tau_minus)`.
pub fn stdp_kernel(steps: usize, dt: f64, cfg: &StdpConfig) -> Array2<f64> {
    let cutoff = 5.0 * cfg.tau_plus.max(cfg.tau_minus);
    Array2::from_shape_fn((steps, steps), |(tp, tq)| {
        let delta = (tp as f64 - tq as f64) * dt;
        if delta.abs() <= cutoff {
            stdp_pair(delta, cfg)
        } else {
            0.0
        }
    })
}

/// All-to-all pair-based STDP: `Delta w_ij = sum over (t_post of i, t_pre of
/// j)` of the pairing kernel.
pub fn stdp_update(trace: &ForwardTrace, cfg: &StdpConfig) -> WeightDelta {
    let k = stdp_kernel(trace.steps(), trace.params.dt, cfg);
    let x = trace.input.spikes_f64();
    let h = trace.hidden.spikes_f64();
    let o = trace.output.spikes_f64();
    let d_ih = h.dot(&k).dot(&x.t());
    let d_ho = o.dot(&k).dot(&h.t());
    WeightDelta::from_parts(d_ih, d_ho)
}

/// `A * sum_t (S_pre(t) - S_post(t))`, i.e. `A * (pre count - post count)`.
pub fn sdsp_update(trace: &ForwardTrace, cfg: &SdspConfig) -> WeightDelta {
    let counts = |r: &crate::neuron::SpikeRaster| -> Array1<i64> {
        r.spikes.rows().into_iter().map(|row| row.iter().map(|&s| s as i64).sum()).collect()
    };
    let x = counts(&trace.input);
    let h = counts(&trace.hidden);
    let o = counts(&trace.output);
    let layer = |post: &Array1<i64>, pre: &Array1<i64>| {
        Array2::from_shape_fn((post.len(), pre.len()), |(i, j)| cfg.a * (pre[j] - post[i]) as f64)
    };
    WeightDelta::from_parts(layer(&h, &x), layer(&o, &h))
}
