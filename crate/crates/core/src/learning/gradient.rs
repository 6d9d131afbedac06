//! Surrogate-gradient rules with a mean-rate logistic readout.
//!
//! Both rules differentiate a smooth stand-in for the spiking network in which
//! the Heaviside spike is replaced by the fast sigmoid
//! `s(x) = (1 + beta x / (1 + beta |x|)) / 2`, `x = u - threshold`. The loss
//! is `0.5 * max(0, |y - label| - margin)^2` with
//! `y = logistic(gain * (mean output rate - 0.5))`.
//!
//! * BP treats the previous membrane state as recorded in the trace (a
//!   constant), so only the layer-to-layer pathway carries gradient.
//! * STBP unrolls the membrane recursion, including a soft reset
//!   `v = u (1 - s) + reset * s`, and backpropagates through time.

use ndarray::{Array1, Array2, ArrayView1};

use super::{SurrogateConfig, WeightDelta};
use crate::error::{Error, Result};
use crate::network::{ForwardTrace, Network};

pub fn soft_spike(x: f64, beta: f64) -> f64 {
    0.5 * (1.0 + beta * x / (1.0 + beta * x.abs()))
}

pub fn soft_spike_derivative(x: f64, beta: f64) -> f64 {
    let d = 1.0 + beta * x.abs();
    0.5 * beta / (d * d)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Pathway {
    /// Spatial only.
    Layerwise,
    /// Spatial and temporal.
    Unrolled,
}

/// Per-step quantities of the smooth forward pass, each neurons x steps.
struct SoftPass {
    u_h: Array2<f64>,
    s_h: Array2<f64>,
    u_o: Array2<f64>,
    s_o: Array2<f64>,
    readout: f64,
}

/// State carried into step `t` by the recorded (hard) trace.
fn recorded_state(raster: &crate::neuron::SpikeRaster, i: usize, t: usize, reset: f64) -> f64 {
    if t == 0 || raster.spikes[[i, t - 1]] == 1 {
        reset
    } else {
        raster.potentials[[i, t - 1]]
    }
}

fn check_shapes(net: &Network, trace: &ForwardTrace) -> Result<()> {
    if trace.n() != net.n {
        return Err(Error::param(format!(
            "trace width {} does not match network width {}",
            trace.n(),
            net.n
        )));
    }
    Ok(())
}

fn soft_forward(net: &Network, trace: &ForwardTrace, cfg: &SurrogateConfig, path: Pathway) -> SoftPass {
    let n = net.n;
    let steps = trace.steps();
    let p = &net.params;
    let (decay, th, reset, beta) = (p.decay, p.threshold, p.reset, cfg.surrogate_beta);

    let mut u_h = Array2::zeros((n, steps));
    let mut s_h = Array2::zeros((n, steps));
    let mut u_o = Array2::zeros((n, steps));
    let mut s_o = Array2::zeros((n, steps));
    let mut v_h = Array1::from_elem(n, reset);
    let mut v_o = Array1::from_elem(n, reset);

    for t in 0..steps {
        let x_t = trace.input.spikes.column(t);
        for i in 0..n {
            let a = net.bias_h[i]
                + net
                    .w_ih
                    .row(i)
                    .iter()
                    .zip(x_t.iter())
                    .filter(|(_, &x)| x == 1)
                    .map(|(w, _)| w)
                    .sum::<f64>();
            let prev = match path {
                Pathway::Layerwise => recorded_state(&trace.hidden, i, t, reset),
                Pathway::Unrolled => v_h[i],
            };
            let u = decay * prev + (1.0 - decay) * a;
            let s = soft_spike(u - th, beta);
            u_h[[i, t]] = u;
            s_h[[i, t]] = s;
            v_h[i] = u * (1.0 - s) + reset * s;
        }
        let sh_t = s_h.column(t);
        for i in 0..n {
            let c = net.bias_o[i] + net.w_ho.row(i).dot(&sh_t);
            let prev = match path {
                Pathway::Layerwise => recorded_state(&trace.output, i, t, reset),
                Pathway::Unrolled => v_o[i],
            };
            let u = decay * prev + (1.0 - decay) * c;
            let s = soft_spike(u - th, beta);
            u_o[[i, t]] = u;
            s_o[[i, t]] = s;
            v_o[i] = u * (1.0 - s) + reset * s;
        }
    }
    let rate = s_o.sum() / (n * steps) as f64;
    let readout = 1.0 / (1.0 + (-cfg.readout_gain * (rate - 0.5)).exp());
    SoftPass {
        u_h,
        s_h,
        u_o,
        s_o,
        readout,
    }
}

fn hinge_loss(readout: f64, label: u8, margin: f64) -> f64 {
    let excess = (readout - f64::from(label)).abs() - margin;
    if excess > 0.0 {
        0.5 * excess * excess
    } else {
        0.0
    }
}

fn surrogate_loss(
    net: &Network,
    trace: &ForwardTrace,
    label: u8,
    cfg: &SurrogateConfig,
    path: Pathway,
) -> Result<f64> {
    check_shapes(net, trace)?;
    let pass = soft_forward(net, trace, cfg, path);
    Ok(hinge_loss(pass.readout, label, cfg.margin))
}

/// Loss whose gradient [`bp_update`] follows. Evaluated on the trace's input
/// with the given (possibly perturbed) network.
pub fn bp_surrogate_loss(
    net: &Network,
    trace: &ForwardTrace,
    label: u8,
    cfg: &SurrogateConfig,
) -> Result<f64> {
    surrogate_loss(net, trace, label, cfg, Pathway::Layerwise)
}

/// Loss whose gradient [`stbp_update`] follows.
pub fn stbp_surrogate_loss(
    net: &Network,
    trace: &ForwardTrace,
    label: u8,
    cfg: &SurrogateConfig,
) -> Result<f64> {
    surrogate_loss(net, trace, label, cfg, Pathway::Unrolled)
}

fn add_outer(acc: &mut Array2<f64>, col: ArrayView1<f64>, row: ArrayView1<f64>) {
    for (i, &c) in col.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let mut r = acc.row_mut(i);
        r.scaled_add(c, &row);
    }
}

fn surrogate_update(
    trace: &ForwardTrace,
    label: u8,
    net: &Network,
    cfg: &SurrogateConfig,
    path: Pathway,
) -> Result<WeightDelta> {
    check_shapes(net, trace)?;
    let n = net.n;
    let steps = trace.steps();
    let pass = soft_forward(net, trace, cfg, path);

    let err = pass.readout - f64::from(label);
    let excess = err.abs() - cfg.margin;
    if excess <= 0.0 {
        return Ok(WeightDelta::zeros(n));
    }
    let p = &net.params;
    let (decay, th, reset, beta) = (p.decay, p.threshold, p.reset, cfg.surrogate_beta);
    let temporal = path == Pathway::Unrolled;

    // dL/d(mean rate), spread evenly over every output soft spike.
    let d_rate = err.signum() * excess * cfg.readout_gain * pass.readout * (1.0 - pass.readout);
    let d_spike = d_rate / (n * steps) as f64;

    let mut g_ih = Array2::<f64>::zeros((n, n));
    let mut g_ho = Array2::<f64>::zeros((n, n));
    // Gradient reaching the post-reset state v_t from step t + 1.
    let mut dv_h = Array1::<f64>::zeros(n);
    let mut dv_o = Array1::<f64>::zeros(n);
    let mut dc = Array1::<f64>::zeros(n);
    let mut da = Array1::<f64>::zeros(n);

    for t in (0..steps).rev() {
        for i in 0..n {
            let u = pass.u_o[[i, t]];
            let s = pass.s_o[[i, t]];
            let ds = d_spike + if temporal { dv_o[i] * (reset - u) } else { 0.0 };
            let mut du = ds * soft_spike_derivative(u - th, beta);
            if temporal {
                du += dv_o[i] * (1.0 - s);
            }
            dc[i] = (1.0 - decay) * du;
            dv_o[i] = decay * du;
        }
        add_outer(&mut g_ho, dc.view(), pass.s_h.column(t));

        let back = net.w_ho.t().dot(&dc);
        for i in 0..n {
            let u = pass.u_h[[i, t]];
            let s = pass.s_h[[i, t]];
            let ds = back[i] + if temporal { dv_h[i] * (reset - u) } else { 0.0 };
            let mut du = ds * soft_spike_derivative(u - th, beta);
            if temporal {
                du += dv_h[i] * (1.0 - s);
            }
            da[i] = (1.0 - decay) * du;
            dv_h[i] = decay * du;
        }
        for (j, &x) in trace.input.spikes.column(t).iter().enumerate() {
            if x == 1 {
                let mut col = g_ih.column_mut(j);
                col += &da;
            }
        }
    }

    let delta = WeightDelta::from_parts(g_ih.mapv(|g| -cfg.eta * g), g_ho.mapv(|g| -cfg.eta * g));
    if !delta.is_finite() {
        return Err(Error::numeric("non-finite surrogate gradient"));
    }
    Ok(delta)
}

/// Backpropagation through the layer pathway of the unrolled trace.
pub fn bp_update(
    trace: &ForwardTrace,
    label: u8,
    net: &Network,
    cfg: &SurrogateConfig,
) -> Result<WeightDelta> {
    surrogate_update(trace, label, net, cfg, Pathway::Layerwise)
}

/// Backpropagation through both the layer pathway and the membrane
/// recursion across steps.
pub fn stbp_update(
    trace: &ForwardTrace,
    label: u8,
    net: &Network,
    cfg: &SurrogateConfig,
) -> Result<WeightDelta> {
    surrogate_update(trace, label, net, cfg, Pathway::Unrolled)
}
