//! Hybrid rules: ANN-to-SNN weight conversion and bio-inspired active
//! learning (BAL).

use ndarray::{Array1, Array2};
use rand::Rng;

use super::{AnnSnnConfig, BalConfig, WeightDelta};
use crate::complexity::{normalized_lzc_bits, LzcCalibration};
use crate::error::{Error, Result};
use crate::network::{default_init_scale, ForwardTrace, Network};
use crate::neuron::{encode, LifParams, SpikeRaster};
use crate::rng::{derived_rng, stream};
use crate::sources::LabeledDataset;

/// `w_snn = w_ann / tau_syn`, element-wise.
pub fn convert_weights(w_ann: &Array2<f64>, tau_syn: f64) -> Array2<f64> {
    w_ann / tau_syn
}

/// Mean firing of each input neuron over the frames of `raster`.
pub fn frame_average(raster: &SpikeRaster) -> Array1<f64> {
    let steps = raster.steps() as f64;
    raster
        .spikes
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|&s| f64::from(s)).sum::<f64>() / steps)
        .collect()
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Trains a logistic rate network of the same shape on frame-averaged inputs
/// and maps its weights and biases onto a spiking network.
pub fn ann_snn_convert(
    dataset: &LabeledDataset,
    n: usize,
    params: LifParams,
    cfg: &AnnSnnConfig,
    seed: u64,
) -> Result<Network> {
    if cfg.ann_epochs == 0 {
        return Err(Error::param("ann_epochs must be >= 1"));
    }
    if !(cfg.tau_syn > 0.0) {
        return Err(Error::param("tau_syn must be > 0"));
    }
    let inputs: Vec<(Array1<f64>, f64)> = dataset
        .items
        .iter()
        .map(|(seq, label)| Ok((frame_average(&encode(seq, n)?), f64::from(*label))))
        .collect::<Result<_>>()?;

    let scale = default_init_scale(n);
    let mut rng = derived_rng(seed, stream::ANN_INIT, n as u64);
    let mut init = || Array2::from_shape_fn((n, n), |_| rng.random_range(-scale..=scale));
    let mut w1 = init();
    let mut w2 = init();
    let mut b1 = Array1::<f64>::zeros(n);
    let mut b2 = Array1::<f64>::zeros(n);
    let eta = cfg.ann_eta;

    for epoch in 0..cfg.ann_epochs {
        let mut loss = 0.0;
        for (x, y) in &inputs {
            let h = (w1.dot(x) + &b1).mapv(logistic);
            let out = (w2.dot(&h) + &b2).mapv(logistic);
            let err = &out - *y;
            loss += 0.5 * err.dot(&err);
            let d_out = &err * &out.mapv(|o| o * (1.0 - o));
            let d_h = w2.t().dot(&d_out) * h.mapv(|v| v * (1.0 - v));
            for i in 0..n {
                w2.row_mut(i).scaled_add(-eta * d_out[i], &h);
                w1.row_mut(i).scaled_add(-eta * d_h[i], x);
            }
            b2.scaled_add(-eta, &d_out);
            b1.scaled_add(-eta, &d_h);
        }
        if !loss.is_finite() {
            return Err(Error::numeric(format!("ANN training diverged in epoch {epoch}")));
        }
    }

    Network::from_parts(
        convert_weights(&w1, cfg.tau_syn),
        convert_weights(&w2, cfg.tau_syn),
        &b1 / cfg.tau_syn,
        &b2 / cfg.tau_syn,
        params,
    )
}

/// Uncertainty `1 - |2 p - 1|` of a sample whose output complexity is
/// `c_norm`, with `p` the logistic of the margin to the decision threshold.
pub fn sample_uncertainty(c_norm: f64, calibration: &LzcCalibration, gain: f64) -> f64 {
    let p = logistic(gain * (c_norm - calibration.threshold));
    1.0 - (2.0 * p - 1.0).abs()
}

/// Plug-in mutual information (bits) between two binary trains of equal
/// length, from their 2x2 joint histogram. Zero when either train is
/// constant.
pub fn plug_in_mutual_information(a: &[u8], b: &[u8]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let total = a.len();
    let n11 = a.iter().zip(b).filter(|(&x, &y)| x == 1 && y == 1).count();
    let na = a.iter().filter(|&&x| x == 1).count();
    let nb = b.iter().filter(|&&y| y == 1).count();
    mi_from_counts(n11, na, nb, total)
}

fn mi_from_counts(n11: usize, na: usize, nb: usize, total: usize) -> f64 {
    if na == 0 || na == total || nb == 0 || nb == total {
        return 0.0;
    }
    let t = total as f64;
    let cells = [
        (n11, na, nb),
        (na - n11, na, total - nb),
        (nb - n11, total - na, nb),
        (total + n11 - na - nb, total - na, total - nb),
    ];
    cells
        .iter()
        .filter(|(c, _, _)| *c > 0)
        .map(|&(c, ma, mb)| {
            let p = c as f64 / t;
            p * (p * t * t / (ma as f64 * mb as f64)).log2()
        })
        .sum::<f64>()
        .max(0.0)
}

/// Mutual information for every (post i, pre j) pair of two rasters.
fn mi_matrix(post: &SpikeRaster, pre: &SpikeRaster) -> Array2<f64> {
    let total = post.steps();
    let joint = post.spikes_f64().dot(&pre.spikes_f64().t());
    let post_counts: Vec<usize> = (0..post.neurons()).map(|i| post.spike_steps(i).len()).collect();
    let pre_counts: Vec<usize> = (0..pre.neurons()).map(|j| pre.spike_steps(j).len()).collect();
    Array2::from_shape_fn(joint.dim(), |(i, j)| {
        mi_from_counts(joint[[i, j]] as usize, post_counts[i], pre_counts[j], total)
    })
}

/// Indices picked by [`bal_update`] and their uncertainties.
#[derive(Debug, Clone, PartialEq)]
pub struct BalSelection {
    pub indices: Vec<usize>,
    pub uncertainties: Vec<f64>,
}

/// Bio-inspired active learning over a pool of traces.
///
/// The `ceil(pool_fraction * N)` most uncertain samples are selected and each
/// weight moves by `eta * mean(U) * mean(I(S_post; S_pre))` over the
/// selection.
pub fn bal_update(
    traces: &[ForwardTrace],
    labels: &[u8],
    calibration: &LzcCalibration,
    cfg: &BalConfig,
) -> Result<(WeightDelta, BalSelection)> {
    if traces.is_empty() {
        return Err(Error::param("BAL pool is empty"));
    }
    if traces.len() != labels.len() {
        return Err(Error::param("BAL pool needs one label per trace"));
    }
    let n = traces[0].n();
    let mut scored = Vec::with_capacity(traces.len());
    for (k, tr) in traces.iter().enumerate() {
        let bits = crate::neuron::decode(&tr.output, tr.output.neurons() * tr.output.steps())?;
        let c = normalized_lzc_bits(bits.bits())?;
        scored.push((k, sample_uncertainty(c, calibration, cfg.confidence_gain)));
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let take = ((cfg.pool_fraction * traces.len() as f64).ceil() as usize).clamp(1, traces.len());
    scored.truncate(take);
    let selection = BalSelection {
        indices: scored.iter().map(|s| s.0).collect(),
        uncertainties: scored.iter().map(|s| s.1).collect(),
    };

    let mean_u = selection.uncertainties.iter().sum::<f64>() / take as f64;
    if mean_u == 0.0 {
        return Ok((WeightDelta::zeros(n), selection));
    }
    let mut mi_ih = Array2::<f64>::zeros((n, n));
    let mut mi_ho = Array2::<f64>::zeros((n, n));
    for &k in &selection.indices {
        let tr = &traces[k];
        mi_ih += &mi_matrix(&tr.hidden, &tr.input);
        mi_ho += &mi_matrix(&tr.output, &tr.hidden);
    }
    let scale = cfg.eta * mean_u / take as f64;
    let delta = WeightDelta::from_parts(mi_ih.mapv(|m| scale * m), mi_ho.mapv(|m| scale * m));
    Ok((delta, selection))
}
