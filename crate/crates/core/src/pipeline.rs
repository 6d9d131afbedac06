//! Training and evaluation: encode, simulate, update, decode, classify by
//! output complexity, score.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complexity::{normalized_lzc_bits, LzcCalibration};
use crate::error::{Error, Result};
use crate::learning::{
    ann_snn_convert, bal_update, bp_update, chronotron_update, hebbian_update, resume_update,
    reward_stdp_update, sdsp_update, spikeprop_update, stbp_update, stdp_update,
    tempotron_update, LearningRuleConfig, TeacherSignal, WeightDelta,
};
use crate::network::{default_init_scale, forward, init_network, ForwardTrace, Network, WIDTH_GRID};
use crate::neuron::{decode, encode, LifParams};
use crate::sources::{BinarySequence, LabeledDataset};

/// How the decision threshold is placed between the class complexities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalibrationMode {
    /// Midpoint of the two class means.
    #[default]
    Midpoint,
    /// Split maximizing training accuracy.
    Roc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub n: usize,
    pub rule: LearningRuleConfig,
    pub lif: LifParams,
    /// Half-width of the uniform weight init; `None` uses `0.5 / sqrt(n)`.
    pub init_scale: Option<f64>,
    pub seed: u64,
    /// Weights are clipped to `[-w_max, w_max]` after every update.
    pub w_max: f64,
    pub calibration: CalibrationMode,
}

impl TrainConfig {
    pub fn new(rule: LearningRuleConfig, n: usize, seed: u64) -> Self {
        Self {
            epochs: 10,
            n,
            rule,
            lif: LifParams::default(),
            init_scale: None,
            seed,
            w_max: 5.0,
            calibration: CalibrationMode::Midpoint,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::param("epochs must be >= 1"));
        }
        if !WIDTH_GRID.contains(&self.n) {
            return Err(Error::param(format!("layer width {} is not in {WIDTH_GRID:?}", self.n)));
        }
        if !(self.w_max > 0.0) {
            return Err(Error::param("w_max must be > 0"));
        }
        self.lif.validate()?;
        self.rule.validate()
    }

    fn init_scale(&self) -> f64 {
        self.init_scale.unwrap_or_else(|| default_init_scale(self.n))
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub network: Network,
    pub calibration: LzcCalibration,
    /// Predictions on the training set under the final calibration.
    pub train_predictions: Vec<u8>,
    pub train_accuracy: f64,
    /// Number of sample updates that changed at least one weight.
    pub updates_applied: usize,
}

/// Normalized complexity of the network's decoded output for `seq`.
pub fn output_complexity(net: &Network, seq: &BinarySequence) -> Result<f64> {
    let trace = forward(net, &encode(seq, net.n)?)?;
    trace_complexity(&trace, seq.len())
}

fn trace_complexity(trace: &ForwardTrace, length: usize) -> Result<f64> {
    normalized_lzc_bits(decode(&trace.output, length)?.bits())
}

/// Threshold at the midpoint of the class means. Class 1 is taken to be the
/// higher-mean class; if class 0 is higher the calibration is marked swapped.
pub fn calibrate_lzc_threshold(values0: &[f64], values1: &[f64]) -> Result<LzcCalibration> {
    if values0.is_empty() || values1.is_empty() {
        return Err(Error::param("calibration needs samples from both classes"));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (m0, m1) = (mean(values0), mean(values1));
    if m0 == m1 {
        return Ok(LzcCalibration {
            threshold: m0,
            swapped: false,
            degenerate: true,
        });
    }
    Ok(LzcCalibration {
        threshold: 0.5 * (m0 + m1),
        swapped: m0 > m1,
        degenerate: false,
    })
}

/// Threshold and orientation maximizing training accuracy, scanning the
/// midpoints between consecutive distinct values. Falls back to the midpoint
/// rule when no split beats it.
pub fn calibrate_roc(values0: &[f64], values1: &[f64]) -> Result<LzcCalibration> {
    let base = calibrate_lzc_threshold(values0, values1)?;
    let accuracy = |cal: &LzcCalibration| {
        values0.iter().filter(|&&c| cal.classify(c) == 0).count()
            + values1.iter().filter(|&&c| cal.classify(c) == 1).count()
    };
    let mut all: Vec<f64> = values0.iter().chain(values1).copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    let mut best = (accuracy(&base), base);
    for w in all.windows(2) {
        for swapped in [false, true] {
            let cal = LzcCalibration {
                threshold: 0.5 * (w[0] + w[1]),
                swapped,
                degenerate: false,
            };
            let acc = accuracy(&cal);
            if acc > best.0 {
                best = (acc, cal);
            }
        }
    }
    Ok(best.1)
}

fn calibrate(mode: CalibrationMode, values: &[f64], labels: &[u8]) -> Result<LzcCalibration> {
    let pick = |l: u8| -> Vec<f64> {
        values.iter().zip(labels).filter(|(_, &y)| y == l).map(|(&c, _)| c).collect()
    };
    let (v0, v1) = (pick(0), pick(1));
    match mode {
        CalibrationMode::Midpoint => calibrate_lzc_threshold(&v0, &v1),
        CalibrationMode::Roc => calibrate_roc(&v0, &v1),
    }
}

pub fn predict(net: &Network, calibration: &LzcCalibration, seq: &BinarySequence) -> Result<u8> {
    Ok(calibration.classify(output_complexity(net, seq)?))
}

/// Output complexities of every dataset item, computed in parallel.
pub fn dataset_complexities(net: &Network, dataset: &LabeledDataset) -> Result<Vec<f64>> {
    dataset
        .items
        .par_iter()
        .map(|(seq, _)| output_complexity(net, seq))
        .collect()
}

pub fn predict_dataset(
    net: &Network,
    calibration: &LzcCalibration,
    dataset: &LabeledDataset,
) -> Result<Vec<u8>> {
    Ok(dataset_complexities(net, dataset)?
        .into_iter()
        .map(|c| calibration.classify(c))
        .collect())
}

fn rule_delta(
    rule: &LearningRuleConfig,
    trace: &ForwardTrace,
    label: u8,
    length: usize,
    net: &Network,
    calibration: Option<&LzcCalibration>,
) -> Result<WeightDelta> {
    let teacher = || TeacherSignal::for_label(label, trace.n(), trace.steps(), trace.params.dt);
    Ok(match rule {
        LearningRuleConfig::Hebbian(c) => hebbian_update(trace, c),
        LearningRuleConfig::Stdp(c) => stdp_update(trace, c),
        LearningRuleConfig::Sdsp(c) => sdsp_update(trace, c),
        LearningRuleConfig::Bp(c) => bp_update(trace, label, net, c)?,
        LearningRuleConfig::Stbp(c) => stbp_update(trace, label, net, c)?,
        LearningRuleConfig::Tempotron(c) => tempotron_update(trace, label, c),
        LearningRuleConfig::SpikeProp(c) => spikeprop_update(trace, &teacher(), c)?,
        LearningRuleConfig::Chronotron(c) => chronotron_update(trace, &teacher(), c)?,
        LearningRuleConfig::ReSuMe(c) => resume_update(trace, &teacher(), c)?,
        LearningRuleConfig::RewardStdp(c) => {
            let cal = calibration.expect("reward-modulated STDP runs with a calibration");
            let correct = cal.classify(trace_complexity(trace, length)?) == label;
            reward_stdp_update(trace, c.reward_map.reward(correct), c)?
        }
        LearningRuleConfig::AnnSnn(_) | LearningRuleConfig::Bal(_) => {
            unreachable!("conversion and pooled rules are handled by train")
        }
    })
}

fn apply_checked(
    delta: &WeightDelta,
    net: &mut Network,
    w_max: f64,
    epoch: usize,
    sample: usize,
) -> Result<bool> {
    if delta.is_zero() {
        return Ok(false);
    }
    let diverged = |reason: String| Error::Training {
        epoch,
        sample,
        reason,
    };
    delta.apply(net, w_max).map_err(|e| diverged(e.to_string()))?;
    net.check_finite().map_err(|e| diverged(e.to_string()))?;
    Ok(true)
}

/// Trains a network on `dataset` with the configured rule, then calibrates
/// the complexity threshold on the training outputs.
///
/// Updates are applied online in dataset order. Rules that read the current
/// classification (reward-modulated STDP and BAL) use a threshold
/// recalibrated at the start of every epoch.
pub fn train(dataset: &LabeledDataset, cfg: &TrainConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    if dataset.is_empty() || !dataset.is_balanced() {
        return Err(Error::param("training set must be non-empty and balanced"));
    }
    let labels = dataset.labels();
    let mut updates_applied = 0;

    let mut net = match &cfg.rule {
        LearningRuleConfig::AnnSnn(c) => ann_snn_convert(dataset, cfg.n, cfg.lif, c, cfg.seed)?,
        _ => init_network(cfg.n, cfg.seed, cfg.init_scale(), cfg.lif)?,
    };

    let needs_calibration = matches!(
        cfg.rule,
        LearningRuleConfig::RewardStdp(_) | LearningRuleConfig::Bal(_)
    );

    if !matches!(cfg.rule, LearningRuleConfig::AnnSnn(_)) {
        let mut calibration = if needs_calibration {
            let values = dataset_complexities(&net, dataset)?;
            Some(calibrate(cfg.calibration, &values, &labels)?)
        } else {
            None
        };

        for epoch in 0..cfg.epochs {
            let mut seen = Vec::with_capacity(if needs_calibration { dataset.len() } else { 0 });
            match &cfg.rule {
                LearningRuleConfig::Bal(bal) => {
                    for (chunk_idx, chunk) in dataset.items.chunks(bal.pool_size).enumerate() {
                        let traces = chunk
                            .iter()
                            .map(|(seq, _)| forward(&net, &encode(seq, cfg.n)?))
                            .collect::<Result<Vec<_>>>()?;
                        for (tr, (seq, _)) in traces.iter().zip(chunk) {
                            seen.push(trace_complexity(tr, seq.len())?);
                        }
                        let chunk_labels: Vec<u8> = chunk.iter().map(|(_, l)| *l).collect();
                        let cal = calibration.as_ref().expect("BAL runs with a calibration");
                        let (delta, _) = bal_update(&traces, &chunk_labels, cal, bal)?;
                        let sample = chunk_idx * bal.pool_size;
                        if apply_checked(&delta, &mut net, cfg.w_max, epoch, sample)? {
                            updates_applied += 1;
                        }
                    }
                }
                rule => {
                    for (sample, (seq, label)) in dataset.items.iter().enumerate() {
                        let trace = forward(&net, &encode(seq, cfg.n)?)?;
                        if needs_calibration {
                            seen.push(trace_complexity(&trace, seq.len())?);
                        }
                        let delta =
                            rule_delta(rule, &trace, *label, seq.len(), &net, calibration.as_ref())
                                .map_err(|e| match e {
                                    Error::Numeric(reason) => Error::Training {
                                        epoch,
                                        sample,
                                        reason,
                                    },
                                    other => other,
                                })?;
                        if apply_checked(&delta, &mut net, cfg.w_max, epoch, sample)? {
                            updates_applied += 1;
                        }
                    }
                }
            }
            if needs_calibration {
                calibration = Some(calibrate(cfg.calibration, &seen, &labels)?);
            }
        }
    }

    let values = dataset_complexities(&net, dataset)?;
    let calibration = calibrate(cfg.calibration, &values, &labels)?;
    let train_predictions: Vec<u8> = values.iter().map(|&c| calibration.classify(c)).collect();
    let train_accuracy = evaluate(&train_predictions, &labels)?.accuracy;
    Ok(TrainedModel {
        network: net,
        calibration,
        train_predictions,
        train_accuracy,
        updates_applied,
    })
}

const CALIBRATION_MAGIC: &[u8; 4] = b"LZCT";

/// Writes the network checkpoint followed by a calibration trailer.
pub fn save_model(path: &Path, net: &Network, calibration: &LzcCalibration) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    net.write_checkpoint(&mut w).map_err(io)?;
    w.write_all(CALIBRATION_MAGIC).map_err(io)?;
    w.write_all(&calibration.threshold.to_le_bytes()).map_err(io)?;
    w.write_all(&[u8::from(calibration.swapped), u8::from(calibration.degenerate)])
        .map_err(io)?;
    w.flush().map_err(io)
}

pub fn load_model(path: &Path) -> Result<(Network, LzcCalibration)> {
    let mut r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let net = Network::read_checkpoint(&mut r)?;
    let mut trailer = [0u8; 14];
    r.read_exact(&mut trailer)
        .map_err(|e| Error::Format(format!("missing calibration trailer: {e}")))?;
    if &trailer[..4] != CALIBRATION_MAGIC {
        return Err(Error::Format("bad calibration trailer".into()));
    }
    let threshold = f64::from_le_bytes(trailer[4..12].try_into().expect("8 bytes"));
    let flag = |b: u8| match b {
        0 => Ok(false),
        1 => Ok(true),
        _ => Err(Error::Format(format!("bad calibration flag {b}"))),
    };
    Ok((
        net,
        LzcCalibration {
            threshold,
            swapped: flag(trailer[12])?,
            degenerate: flag(trailer[13])?,
        },
    ))
}

/// Accuracy (percent), MSE, MAE and R^2 of binary predictions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub mse: f64,
    pub mae: f64,
    /// NaN when the labels have zero variance.
    pub r2: f64,
    pub r2_defined: bool,
}

pub fn evaluate(predictions: &[u8], labels: &[u8]) -> Result<Metrics> {
    if predictions.is_empty() || predictions.len() != labels.len() {
        return Err(Error::param(format!(
            "need equal non-empty prediction/label lists, got {} and {}",
            predictions.len(),
            labels.len()
        )));
    }
    let total = labels.len() as f64;
    let mut correct = 0usize;
    let mut ss_res = 0.0;
    let mut abs = 0.0;
    for (&p, &y) in predictions.iter().zip(labels) {
        let e = f64::from(p) - f64::from(y);
        correct += usize::from(p == y);
        ss_res += e * e;
        abs += e.abs();
    }
    let mean = labels.iter().map(|&y| f64::from(y)).sum::<f64>() / total;
    let ss_tot: f64 = labels.iter().map(|&y| (f64::from(y) - mean).powi(2)).sum();
    let (r2, r2_defined) = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot, true)
    } else {
        (f64::NAN, false)
    };
    Ok(Metrics {
        accuracy: 100.0 * correct as f64 / total,
        mse: ss_res / total,
        mae: abs / total,
        r2,
        r2_defined,
    })
}

/// One row of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rule_name: String,
    pub source_name: String,
    pub n: usize,
    pub epochs: usize,
    /// Seconds spent training and evaluating.
    pub wall_time: f64,
    pub accuracy: f64,
    pub mse: f64,
    pub mae: f64,
    pub r2: f64,
}

impl EvalReport {
    pub fn new(
        rule_name: impl Into<String>,
        source_name: impl Into<String>,
        n: usize,
        epochs: usize,
        wall_time: f64,
        m: &Metrics,
    ) -> Self {
        Self {
            rule_name: rule_name.into(),
            source_name: source_name.into(),
            n,
            epochs,
            wall_time,
            accuracy: m.accuracy,
            mse: m.mse,
            mae: m.mae,
            r2: m.r2,
        }
    }

    /// Checks `mse == mae == 1 - accuracy/100` and, for balanced labels,
    /// `r2 == 1 - 4 mse`, to within `tol`.
    pub fn check_identities(&self, balanced: bool, tol: f64) -> Result<()> {
        let err_rate = 1.0 - self.accuracy / 100.0;
        let mut bad = Vec::new();
        if (self.mse - err_rate).abs() > tol {
            bad.push(format!("mse {} vs 1 - acc/100 = {err_rate}", self.mse));
        }
        if (self.mae - err_rate).abs() > tol {
            bad.push(format!("mae {} vs 1 - acc/100 = {err_rate}", self.mae));
        }
        if balanced && (self.r2 - (1.0 - 4.0 * self.mse)).abs() > tol {
            bad.push(format!("r2 {} vs 1 - 4 mse = {}", self.r2, 1.0 - 4.0 * self.mse));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::numeric(bad.join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn balanced_labels() -> Vec<u8> {
        (0..200).map(|i| (i % 2) as u8).collect()
    }

    fn with_errors(labels: &[u8], errors: usize) -> Vec<u8> {
        labels
            .iter()
            .enumerate()
            .map(|(i, &y)| if i < errors { 1 - y } else { y })
            .collect()
    }

    #[test]
    fn table_arithmetic() {
        let y = balanced_labels();
        let m = evaluate(&with_errors(&y, 2), &y).unwrap();
        assert!((m.accuracy - 99.0).abs() < 1e-12);
        assert!((m.mse - 0.01).abs() < 1e-12 && (m.mae - 0.01).abs() < 1e-12);
        assert!((m.r2 - 0.96).abs() < 1e-12);

        let m = evaluate(&with_errors(&y, 20), &y).unwrap();
        assert!((m.accuracy - 90.0).abs() < 1e-12);
        assert!((m.mse - 0.1).abs() < 1e-12);
        assert!((m.r2 - 0.6).abs() < 1e-12);

        let m = evaluate(&y, &y).unwrap();
        assert_eq!((m.accuracy, m.mse, m.mae, m.r2), (100.0, 0.0, 0.0, 1.0));
    }

    #[test]
    fn undefined_r2_is_flagged() {
        let m = evaluate(&[1, 0], &[1, 1]).unwrap();
        assert!(m.r2.is_nan() && !m.r2_defined);
        assert!(evaluate(&[], &[]).is_err());
        assert!(evaluate(&[1], &[1, 0]).is_err());
    }

    #[test]
    fn midpoint_calibration() {
        let c = calibrate_lzc_threshold(&[0.1; 5], &[0.9; 5]).unwrap();
        assert!((c.threshold - 0.5).abs() < 1e-15 && !c.swapped && !c.degenerate);
        let c = calibrate_lzc_threshold(&[0.9; 5], &[0.1; 5]).unwrap();
        assert!(c.swapped);
        assert_eq!(c.classify(0.9), 0);
        let c = calibrate_lzc_threshold(&[0.4, 0.6], &[0.5, 0.5]).unwrap();
        assert!(c.degenerate);
        assert_eq!(c.threshold, 0.5);
        assert!(calibrate_lzc_threshold(&[], &[0.5]).is_err());
    }

    #[test]
    fn roc_calibration_not_worse_than_midpoint() {
        // Skewed classes where the midpoint misplaces the split.
        let v0 = [0.10, 0.11, 0.12, 0.13, 0.90];
        let v1 = [0.20, 0.21, 0.22, 0.23, 0.24];
        let acc = |c: &LzcCalibration| {
            v0.iter().filter(|&&v| c.classify(v) == 0).count()
                + v1.iter().filter(|&&v| c.classify(v) == 1).count()
        };
        let mid = calibrate_lzc_threshold(&v0, &v1).unwrap();
        let roc = calibrate_roc(&v0, &v1).unwrap();
        assert!(acc(&roc) >= acc(&mid));
        assert_eq!(acc(&roc), 9);
    }
}
