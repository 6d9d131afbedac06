//! Exponential-window spike correlations and the rules built on them
//! (ReSuMe and reward-modulated STDP).

use ndarray::Array2;

use super::{ResumeConfig, RewardStdpConfig, TeacherSignal, WeightDelta};
use crate::error::{Error, Result};
use crate::network::ForwardTrace;

/// `E[[t, s]] = exp(-|t - s| * dt / window)`.
pub fn exp_window_kernel(steps: usize, dt: f64, window: f64) -> Array2<f64> {
    Array2::from_shape_fn((steps, steps), |(t, s)| {
        (-((t as f64 - s as f64).abs() * dt) / window).exp()
    })
}

/// `C[[i, j]] = sum over spike pairs (post_i, pre_j) of the window kernel`,
/// for spike matrices laid out neurons x steps.
pub fn window_correlation(post: &Array2<f64>, pre: &Array2<f64>, kernel: &Array2<f64>) -> Array2<f64> {
    post.dot(kernel).dot(&pre.t())
}

/// Remote supervised method on the hidden->output weights:
/// `eta * [corr(teacher, pre) - corr(output, pre)]`.
pub fn resume_update(
    trace: &ForwardTrace,
    teacher: &TeacherSignal,
    cfg: &ResumeConfig,
) -> Result<WeightDelta> {
    teacher.check_against(trace)?;
    let n = trace.n();
    let kernel = exp_window_kernel(trace.steps(), trace.params.dt, cfg.teacher_window);
    // Difference first, so an output identical to the teacher cancels exactly.
    let mismatch = teacher.raster.spikes_f64() - trace.output.spikes_f64();
    let d_ho = window_correlation(&mismatch, &trace.hidden.spikes_f64(), &kernel)
        .mapv(|c| cfg.eta * c);
    Ok(WeightDelta::from_parts(Array2::zeros((n, n)), d_ho))
}

/// `eta * r * C` on both weight matrices, with `C` the exponential-window
/// pre/post correlation.
pub fn reward_stdp_update(
    trace: &ForwardTrace,
    reward: f64,
    cfg: &RewardStdpConfig,
) -> Result<WeightDelta> {
    if !reward.is_finite() {
        return Err(Error::param(format!("reward must be finite, got {reward}")));
    }
    let n = trace.n();
    if reward == 0.0 {
        return Ok(WeightDelta::zeros(n));
    }
    let kernel = exp_window_kernel(trace.steps(), trace.params.dt, cfg.window);
    let x = trace.input.spikes_f64();
    let h = trace.hidden.spikes_f64();
    let o = trace.output.spikes_f64();
    let scale = cfg.eta * reward;
    let d_ih = window_correlation(&h, &x, &kernel).mapv(|c| scale * c);
    let d_ho = window_correlation(&o, &h, &kernel).mapv(|c| scale * c);
    Ok(WeightDelta::from_parts(d_ih, d_ho))
}
