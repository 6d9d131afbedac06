//! Spike-timing rules on the hidden->output weights: tempotron, SpikeProp
//! and Chronotron.
//!
//! SpikeProp and Chronotron work with continuous spike times. A spike at step
//! `t` is placed at the linear interpolation of the threshold crossing between
//! the state entering the step and the recorded potential, so
//! `t* = (t - 1 + lambda) * dt` with `lambda` in `(0, 1]`. Its sensitivity to
//! a weight follows from the implicit function theorem on that interpolant:
//! `dt*/dw = -(dU/dw at t*) / (dU/dt)`.

use ndarray::{Array1, Array2};

use super::{SpikeTimingConfig, TeacherSignal, TempotronConfig, WeightDelta};
use crate::error::Result;
use crate::network::ForwardTrace;

/// Slopes (potential units per ms) below this are treated as singular.
const MIN_SLOPE: f64 = 1e-9;

/// Peak-normalized double-exponential PSP kernel; zero for `s <= 0`.
pub fn tempotron_kernel(s: f64, tau_m: f64, tau_s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let peak_at = tau_m * tau_s / (tau_m - tau_s) * (tau_m / tau_s).ln();
    let peak = (-peak_at / tau_m).exp() - (-peak_at / tau_s).exp();
    ((-s / tau_m).exp() - (-s / tau_s).exp()) / peak
}

/// Error-driven tempotron update, one tempotron per output neuron.
///
/// A neuron errs when it fires for label 0 or stays silent for label 1. Its
/// weights move by `+-eta * sum_{t_pre} K(t_f - t_pre)` where `t_f` is the
/// first spike time, or the time of maximal potential if it never fired.
pub fn tempotron_update(trace: &ForwardTrace, label: u8, cfg: &TempotronConfig) -> WeightDelta {
    let n = trace.n();
    let dt = trace.params.dt;
    let mut d_ho: Option<Array2<f64>> = None;
    for i in 0..n {
        let spikes = trace.output.spikes.row(i);
        let first = spikes.iter().position(|&s| s == 1);
        let sign = match (label, first) {
            (1, None) => 1.0,
            (0, Some(_)) => -1.0,
            _ => continue,
        };
        let t_f = match first {
            Some(t) => t,
            None => argmax(trace.output.potentials.row(i).iter().copied()),
        };
        let d = d_ho.get_or_insert_with(|| Array2::zeros((n, n)));
        for j in 0..n {
            let mut acc = 0.0;
            for (t, &s) in trace.hidden.spikes.row(j).iter().enumerate().take(t_f + 1) {
                if s == 1 {
                    acc += tempotron_kernel((t_f - t) as f64 * dt, cfg.tau_m_kernel, cfg.tau_s_kernel);
                }
            }
            d[[i, j]] = sign * cfg.eta * acc;
        }
    }
    match d_ho {
        Some(d_ho) => WeightDelta::from_parts(Array2::zeros((n, n)), d_ho),
        None => WeightDelta::zeros(n),
    }
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (k, v) in values.enumerate() {
        if v > best.1 {
            best = (k, v);
        }
    }
    best.0
}

/// Interpolated threshold crossing of one output spike.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossing {
    pub step: usize,
    /// ms
    pub time: f64,
    /// `dt*/dw_ij` for every hidden neuron `j`.
    pub sensitivity: Array1<f64>,
    /// Set when the crossing slope was too shallow; the sensitivity then uses
    /// the unit-slope fallback.
    pub singular: bool,
}

/// Per-neuron scan state: the derivative of the membrane potential with
/// respect to the incoming hidden->output weights, restarted at every reset.
struct PotentialScan<'a> {
    trace: &'a ForwardTrace,
    neuron: usize,
}

struct NoFire {
    sensitivity: Array1<f64>,
}

impl<'a> PotentialScan<'a> {
    /// Returns the crossings and the fallback direction taken at the maximal
    /// potential after the last spike.
    fn run(&self) -> (Vec<Crossing>, NoFire) {
        let tr = self.trace;
        let i = self.neuron;
        let n = tr.n();
        let p = &tr.params;
        let leak_in = 1.0 - p.decay;
        let mut grad = Array1::<f64>::zeros(n);
        let mut grad_prev = Array1::<f64>::zeros(n);
        let mut u_prev = p.reset;
        let mut crossings = Vec::new();
        let mut best: Option<(f64, Array1<f64>)> = None;

        for t in 0..tr.steps() {
            grad.mapv_inplace(|g| g * p.decay);
            for j in 0..n {
                if tr.hidden.spikes[[j, t]] == 1 {
                    grad[j] += leak_in;
                }
            }
            let u = tr.output.potentials[[i, t]];
            if tr.output.spikes[[i, t]] == 1 {
                let rise = u - u_prev;
                let lambda = if rise > 0.0 { ((p.threshold - u_prev) / rise).clamp(0.0, 1.0) } else { 1.0 };
                let time = (t as f64 - 1.0 + lambda) * p.dt;
                let slope = rise / p.dt;
                let at_crossing = &grad_prev * (1.0 - lambda) + &grad * lambda;
                let singular = slope < MIN_SLOPE;
                let sensitivity = if singular { -at_crossing } else { at_crossing / -slope };
                crossings.push(Crossing {
                    step: t,
                    time,
                    sensitivity,
                    singular,
                });
                grad.fill(0.0);
                u_prev = p.reset;
                best = None;
            } else {
                if best.as_ref().is_none_or(|(b, _)| u > *b) {
                    best = Some((u, grad.clone()));
                }
                u_prev = u;
            }
            grad_prev.assign(&grad);
        }
        let sensitivity = match best {
            Some((_, g)) => -g,
            None => Array1::zeros(n),
        };
        (crossings, NoFire { sensitivity })
    }
}

/// Threshold crossings of output neuron `neuron`, in time order.
pub fn output_crossings(trace: &ForwardTrace, neuron: usize) -> Vec<Crossing> {
    PotentialScan { trace, neuron }.run().0
}

/// Time (ms) assigned to a desired spike that never happened.
fn no_fire_time(trace: &ForwardTrace) -> f64 {
    let horizon = trace.steps() as f64 * trace.params.dt;
    let tau = trace.params.tau_m;
    horizon + if tau.is_finite() { tau } else { 0.0 }
}

/// Time (ms) toward which surplus spikes are pushed.
fn horizon(trace: &ForwardTrace) -> f64 {
    trace.steps() as f64 * trace.params.dt
}

/// `-eta * sum_k err_k * dt_k/dw` over `(err, sensitivity)` terms.
pub fn accumulate_timing_delta(eta: f64, terms: &[(f64, &Array1<f64>)]) -> Array1<f64> {
    let mut sum = Array1::<f64>::zeros(terms.first().map_or(0, |(_, s)| s.len()));
    for (err, sens) in terms {
        if *err != 0.0 {
            sum.scaled_add(*err, sens);
        }
    }
    sum.mapv(|g| -eta * g)
}

/// One timing term: error (ms) and sensitivity.
struct Term {
    err: f64,
    sensitivity: Array1<f64>,
}

fn spikeprop_terms(trace: &ForwardTrace, teacher: &TeacherSignal, i: usize, diag: &mut super::Diagnostics) -> Option<Term> {
    let (crossings, no_fire) = PotentialScan { trace, neuron: i }.run();
    let target = teacher.target_times[i].first().copied();
    match (crossings.into_iter().next(), target) {
        (None, None) => None,
        (Some(c), target) => {
            if c.singular {
                diag.singular_crossings += 1;
            }
            Some(Term {
                err: c.time - target.unwrap_or_else(|| horizon(trace)),
                sensitivity: c.sensitivity,
            })
        }
        (None, Some(target)) => {
            diag.no_fire_fallbacks += 1;
            Some(Term {
                err: no_fire_time(trace) - target,
                sensitivity: no_fire.sensitivity,
            })
        }
    }
}

/// `0.5 * sum_i (t_i^actual - t_i^target)^2` over first spikes.
pub fn spike_time_error(trace: &ForwardTrace, teacher: &TeacherSignal) -> Result<f64> {
    teacher.check_against(trace)?;
    let mut diag = super::Diagnostics::default();
    Ok((0..trace.n())
        .filter_map(|i| spikeprop_terms(trace, teacher, i, &mut diag))
        .map(|t| 0.5 * t.err * t.err)
        .sum())
}

/// Gradient descent on the squared first-spike-time error of each output
/// neuron. A neuron with no target is asked to stay silent; a neuron with a
/// target that never fires uses the no-fire fallback.
pub fn spikeprop_update(
    trace: &ForwardTrace,
    teacher: &TeacherSignal,
    cfg: &SpikeTimingConfig,
) -> Result<WeightDelta> {
    teacher.check_against(trace)?;
    let n = trace.n();
    let mut delta = WeightDelta::zeros(n);
    for i in 0..n {
        if let Some(term) = spikeprop_terms(trace, teacher, i, &mut delta.diagnostics) {
            let row = accumulate_timing_delta(cfg.eta, &[(term.err, &term.sensitivity)]);
            delta.d_ho.row_mut(i).assign(&row);
        }
    }
    Ok(delta)
}

fn chronotron_terms(trace: &ForwardTrace, teacher: &TeacherSignal, i: usize, diag: &mut super::Diagnostics) -> Vec<Term> {
    let (crossings, no_fire) = PotentialScan { trace, neuron: i }.run();
    let targets = &teacher.target_times[i];
    let mut terms = Vec::with_capacity(crossings.len().max(targets.len()));
    for (k, c) in crossings.iter().enumerate() {
        if c.singular {
            diag.singular_crossings += 1;
        }
        let target = targets.get(k).copied().unwrap_or_else(|| horizon(trace));
        terms.push(Term {
            err: c.time - target,
            sensitivity: c.sensitivity.clone(),
        });
    }
    for &target in targets.iter().skip(crossings.len()) {
        diag.no_fire_fallbacks += 1;
        terms.push(Term {
            err: no_fire_time(trace) - target,
            sensitivity: no_fire.sensitivity.clone(),
        });
    }
    terms
}

/// `sum_i sum_k (t_ik^actual - t_ik^target)^2 / 2` with order matching.
pub fn chronotron_error(trace: &ForwardTrace, teacher: &TeacherSignal) -> Result<f64> {
    teacher.check_against(trace)?;
    let mut diag = super::Diagnostics::default();
    Ok((0..trace.n())
        .flat_map(|i| chronotron_terms(trace, teacher, i, &mut diag))
        .map(|t| 0.5 * t.err * t.err)
        .sum())
}

/// Multi-spike timing rule. The k-th actual spike is matched to the k-th
/// target; surplus actual spikes are pushed toward the end of the window and
/// missing ones use the no-fire fallback.
pub fn chronotron_update(
    trace: &ForwardTrace,
    teacher: &TeacherSignal,
    cfg: &SpikeTimingConfig,
) -> Result<WeightDelta> {
    teacher.check_against(trace)?;
    let n = trace.n();
    let mut delta = WeightDelta::zeros(n);
    for i in 0..n {
        let terms = chronotron_terms(trace, teacher, i, &mut delta.diagnostics);
        if terms.is_empty() {
            continue;
        }
        let refs: Vec<(f64, &Array1<f64>)> = terms.iter().map(|t| (t.err, &t.sensitivity)).collect();
        delta.d_ho.row_mut(i).assign(&accumulate_timing_delta(cfg.eta, &refs));
    }
    Ok(delta)
}
