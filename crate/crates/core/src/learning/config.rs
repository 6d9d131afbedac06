use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HebbianConfig {
    pub eta: f64,
}

impl Default for HebbianConfig {
    fn default() -> Self {
        Self { eta: 0.0001 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StdpConfig {
    pub a_plus: f64,
    pub a_minus: f64,
    /// ms
    pub tau_plus: f64,
    /// ms
    pub tau_minus: f64,
}

impl Default for StdpConfig {
    fn default() -> Self {
        Self {
            a_plus: 0.0001,
            a_minus: 0.00012,
            tau_plus: 2.0,
            tau_minus: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SdspConfig {
    pub a: f64,
}

impl Default for SdspConfig {
    fn default() -> Self {
        Self { a: 0.0001 }
    }
}

/// Shared by the rate-readout gradient rules (BP and STBP).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogateConfig {
    pub eta: f64,
    /// Sharpness of the fast-sigmoid surrogate.
    pub surrogate_beta: f64,
    /// Gain of the logistic readout on the mean output rate.
    pub readout_gain: f64,
    /// Readout errors within this margin of the label count as correct and
    /// produce no update.
    pub margin: f64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            eta: 0.01,
            surrogate_beta: 5.0,
            readout_gain: 10.0,
            margin: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TempotronConfig {
    pub eta: f64,
    /// ms
    pub tau_m_kernel: f64,
    /// ms
    pub tau_s_kernel: f64,
}

impl Default for TempotronConfig {
    fn default() -> Self {
        Self {
            eta: 0.01,
            tau_m_kernel: 4.0,
            tau_s_kernel: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpikeTimingConfig {
    pub eta: f64,
}

impl Default for SpikeTimingConfig {
    fn default() -> Self {
        Self { eta: 0.0001 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResumeConfig {
    pub eta: f64,
    /// Width (ms) of the exponential correlation window.
    pub teacher_window: f64,
}

impl Default for ResumeConfig {
    fn default() -> Self {
        Self {
            eta: 0.0001,
            teacher_window: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnSnnConfig {
    pub tau_syn: f64,
    pub ann_epochs: usize,
    pub ann_eta: f64,
}

impl Default for AnnSnnConfig {
    fn default() -> Self {
        Self {
            tau_syn: 2.0,
            ann_epochs: 10,
            ann_eta: 0.05,
        }
    }
}

/// Trial-level reward for each classification outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardMap {
    pub correct: f64,
    pub incorrect: f64,
}

impl Default for RewardMap {
    fn default() -> Self {
        Self {
            correct: 0.0,
            incorrect: -1.0,
        }
    }
}

impl RewardMap {
    pub fn reward(&self, correct: bool) -> f64 {
        if correct {
            self.correct
        } else {
            self.incorrect
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardStdpConfig {
    pub eta: f64,
    pub reward_map: RewardMap,
    /// Width (ms) of the exponential correlation window.
    pub window: f64,
}

impl Default for RewardStdpConfig {
    fn default() -> Self {
        Self {
            eta: 0.0001,
            reward_map: RewardMap::default(),
            window: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BalConfig {
    pub eta: f64,
    pub pool_fraction: f64,
    /// Reserved for continuous-valued traces; spike trains always use a 2x2
    /// histogram.
    pub mi_bins: usize,
    /// Slope of the logistic squashing the complexity margin into a
    /// confidence.
    pub confidence_gain: f64,
    /// Samples per active-learning pool during training.
    pub pool_size: usize,
}

impl Default for BalConfig {
    fn default() -> Self {
        Self {
            eta: 0.01,
            pool_fraction: 0.5,
            mi_bins: 2,
            confidence_gain: 20.0,
            pool_size: 20,
        }
    }
}

/// One of the twelve learning rules with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum LearningRuleConfig {
    Hebbian(HebbianConfig),
    Stdp(StdpConfig),
    Sdsp(SdspConfig),
    Bp(SurrogateConfig),
    Stbp(SurrogateConfig),
    Tempotron(TempotronConfig),
    #[serde(rename = "spikeprop")]
    SpikeProp(SpikeTimingConfig),
    Chronotron(SpikeTimingConfig),
    #[serde(rename = "resume")]
    ReSuMe(ResumeConfig),
    AnnSnn(AnnSnnConfig),
    RewardStdp(RewardStdpConfig),
    Bal(BalConfig),
}

impl LearningRuleConfig {
    pub fn kind(&self) -> RuleKind {
        match self {
            LearningRuleConfig::Hebbian(_) => RuleKind::Hebbian,
            LearningRuleConfig::Stdp(_) => RuleKind::Stdp,
            LearningRuleConfig::Sdsp(_) => RuleKind::Sdsp,
            LearningRuleConfig::Bp(_) => RuleKind::Bp,
            LearningRuleConfig::Stbp(_) => RuleKind::Stbp,
            LearningRuleConfig::Tempotron(_) => RuleKind::Tempotron,
            LearningRuleConfig::SpikeProp(_) => RuleKind::SpikeProp,
            LearningRuleConfig::Chronotron(_) => RuleKind::Chronotron,
            LearningRuleConfig::ReSuMe(_) => RuleKind::ReSuMe,
            LearningRuleConfig::AnnSnn(_) => RuleKind::AnnSnn,
            LearningRuleConfig::RewardStdp(_) => RuleKind::RewardStdp,
            LearningRuleConfig::Bal(_) => RuleKind::Bal,
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind().name()
    }

    /// The rule's primary rate (learning rate or amplitude).
    pub fn learning_rate(&self) -> f64 {
        match *self {
            LearningRuleConfig::Hebbian(c) => c.eta,
            LearningRuleConfig::Stdp(c) => c.a_plus,
            LearningRuleConfig::Sdsp(c) => c.a,
            LearningRuleConfig::Bp(c) | LearningRuleConfig::Stbp(c) => c.eta,
            LearningRuleConfig::Tempotron(c) => c.eta,
            LearningRuleConfig::SpikeProp(c) | LearningRuleConfig::Chronotron(c) => c.eta,
            LearningRuleConfig::ReSuMe(c) => c.eta,
            LearningRuleConfig::AnnSnn(c) => c.ann_eta,
            LearningRuleConfig::RewardStdp(c) => c.eta,
            LearningRuleConfig::Bal(c) => c.eta,
        }
    }

    /// Replaces the primary rate. STDP keeps its depression/potentiation
    /// amplitude ratio.
    pub fn with_learning_rate(mut self, lr: f64) -> Self {
        match &mut self {
            LearningRuleConfig::Hebbian(c) => c.eta = lr,
            LearningRuleConfig::Stdp(c) => {
                let ratio = if c.a_plus > 0.0 { c.a_minus / c.a_plus } else { 1.0 };
                c.a_plus = lr;
                c.a_minus = lr * ratio;
            }
            LearningRuleConfig::Sdsp(c) => c.a = lr,
            LearningRuleConfig::Bp(c) | LearningRuleConfig::Stbp(c) => c.eta = lr,
            LearningRuleConfig::Tempotron(c) => c.eta = lr,
            LearningRuleConfig::SpikeProp(c) | LearningRuleConfig::Chronotron(c) => c.eta = lr,
            LearningRuleConfig::ReSuMe(c) => c.eta = lr,
            LearningRuleConfig::AnnSnn(c) => c.ann_eta = lr,
            LearningRuleConfig::RewardStdp(c) => c.eta = lr,
            LearningRuleConfig::Bal(c) => c.eta = lr,
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(format!("{name} must be > 0, got {v}")))
            }
        }
        fn nonneg(name: &str, v: f64) -> Result<()> {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(format!("{name} must be >= 0, got {v}")))
            }
        }
        match *self {
            LearningRuleConfig::Hebbian(c) => positive("eta", c.eta),
            LearningRuleConfig::Stdp(c) => {
                nonneg("a_plus", c.a_plus)?;
                nonneg("a_minus", c.a_minus)?;
                positive("tau_plus", c.tau_plus)?;
                positive("tau_minus", c.tau_minus)
            }
            LearningRuleConfig::Sdsp(c) => nonneg("a", c.a),
            LearningRuleConfig::Bp(c) | LearningRuleConfig::Stbp(c) => {
                positive("eta", c.eta)?;
                positive("surrogate_beta", c.surrogate_beta)?;
                positive("readout_gain", c.readout_gain)?;
                nonneg("margin", c.margin)
            }
            LearningRuleConfig::Tempotron(c) => {
                positive("eta", c.eta)?;
                positive("tau_m_kernel", c.tau_m_kernel)?;
                positive("tau_s_kernel", c.tau_s_kernel)?;
                if c.tau_m_kernel == c.tau_s_kernel {
                    return Err(Error::param("tempotron kernel time constants must differ"));
                }
                Ok(())
            }
            LearningRuleConfig::SpikeProp(c) | LearningRuleConfig::Chronotron(c) => {
                positive("eta", c.eta)
            }
            LearningRuleConfig::ReSuMe(c) => {
                positive("eta", c.eta)?;
                positive("teacher_window", c.teacher_window)
            }
            LearningRuleConfig::AnnSnn(c) => {
                positive("tau_syn", c.tau_syn)?;
                positive("ann_eta", c.ann_eta)?;
                if c.ann_epochs == 0 {
                    return Err(Error::param("ann_epochs must be >= 1"));
                }
                Ok(())
            }
            LearningRuleConfig::RewardStdp(c) => {
                positive("eta", c.eta)?;
                positive("window", c.window)
            }
            LearningRuleConfig::Bal(c) => {
                positive("eta", c.eta)?;
                positive("confidence_gain", c.confidence_gain)?;
                if !(c.pool_fraction > 0.0 && c.pool_fraction <= 1.0) {
                    return Err(Error::param(format!(
                        "pool_fraction must lie in (0, 1], got {}",
                        c.pool_fraction
                    )));
                }
                if c.pool_size == 0 {
                    return Err(Error::param("pool_size must be >= 1"));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleCategory {
    Unsupervised,
    Supervised,
    Hybrid,
}

impl RuleCategory {
    pub fn name(self) -> &'static str {
        match self {
            RuleCategory::Unsupervised => "unsupervised",
            RuleCategory::Supervised => "supervised",
            RuleCategory::Hybrid => "hybrid",
        }
    }
}

/// Rule identifiers in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Hebbian,
    Stdp,
    Sdsp,
    Bp,
    Stbp,
    Tempotron,
    #[serde(rename = "spikeprop")]
    SpikeProp,
    Chronotron,
    #[serde(rename = "resume")]
    ReSuMe,
    AnnSnn,
    RewardStdp,
    Bal,
}

impl RuleKind {
    pub const ALL: [RuleKind; 12] = [
        RuleKind::Hebbian,
        RuleKind::Stdp,
        RuleKind::Sdsp,
        RuleKind::Bp,
        RuleKind::Stbp,
        RuleKind::Tempotron,
        RuleKind::SpikeProp,
        RuleKind::Chronotron,
        RuleKind::ReSuMe,
        RuleKind::AnnSnn,
        RuleKind::RewardStdp,
        RuleKind::Bal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleKind::Hebbian => "hebbian",
            RuleKind::Stdp => "stdp",
            RuleKind::Sdsp => "sdsp",
            RuleKind::Bp => "bp",
            RuleKind::Stbp => "stbp",
            RuleKind::Tempotron => "tempotron",
            RuleKind::SpikeProp => "spikeprop",
            RuleKind::Chronotron => "chronotron",
            RuleKind::ReSuMe => "resume",
            RuleKind::AnnSnn => "ann_snn",
            RuleKind::RewardStdp => "reward_stdp",
            RuleKind::Bal => "bal",
        }
    }

    pub fn category(self) -> RuleCategory {
        match self {
            RuleKind::Hebbian | RuleKind::Stdp | RuleKind::Sdsp => RuleCategory::Unsupervised,
            RuleKind::AnnSnn | RuleKind::RewardStdp | RuleKind::Bal => RuleCategory::Hybrid,
            _ => RuleCategory::Supervised,
        }
    }

    /// Whether the rule is classed as biologically inspired in the result
    /// tables.
    pub fn bio_inspired(self) -> bool {
        !matches!(
            self,
            RuleKind::Bp | RuleKind::Stbp | RuleKind::AnnSnn | RuleKind::RewardStdp
        )
    }

    pub fn default_config(self) -> LearningRuleConfig {
        match self {
            RuleKind::Hebbian => LearningRuleConfig::Hebbian(Default::default()),
            RuleKind::Stdp => LearningRuleConfig::Stdp(Default::default()),
            RuleKind::Sdsp => LearningRuleConfig::Sdsp(Default::default()),
            RuleKind::Bp => LearningRuleConfig::Bp(Default::default()),
            RuleKind::Stbp => LearningRuleConfig::Stbp(Default::default()),
            RuleKind::Tempotron => LearningRuleConfig::Tempotron(Default::default()),
            RuleKind::SpikeProp => LearningRuleConfig::SpikeProp(Default::default()),
            RuleKind::Chronotron => LearningRuleConfig::Chronotron(Default::default()),
            RuleKind::ReSuMe => LearningRuleConfig::ReSuMe(Default::default()),
            RuleKind::AnnSnn => LearningRuleConfig::AnnSnn(Default::default()),
            RuleKind::RewardStdp => LearningRuleConfig::RewardStdp(Default::default()),
            RuleKind::Bal => LearningRuleConfig::Bal(Default::default()),
        }
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        RuleKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::param(format!("unknown learning rule {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in RuleKind::ALL {
            assert_eq!(k.name().parse::<RuleKind>().unwrap(), k);
            let cfg = k.default_config();
            assert_eq!(cfg.kind(), k);
            cfg.validate().unwrap();
            let json = serde_json::to_string(&cfg).unwrap();
            assert!(json.contains(&format!("\"name\":\"{}\"", k.name())), "{json}");
            let back: LearningRuleConfig = serde_json::from_str(&json).unwrap();
            assert_eq!(back, cfg);
        }
        assert!("fo_stdgd".parse::<RuleKind>().is_err());
    }

    #[test]
    fn learning_rate_override() {
        let cfg = RuleKind::Stdp.default_config().with_learning_rate(0.01);
        match cfg {
            LearningRuleConfig::Stdp(c) => {
                assert_eq!(c.a_plus, 0.01);
                assert!((c.a_minus - 0.012).abs() < 1e-15);
            }
            _ => unreachable!(),
        }
        for k in RuleKind::ALL {
            assert_eq!(k.default_config().with_learning_rate(0.05).learning_rate(), 0.05);
        }
    }

    #[test]
    fn invalid_hyperparameters() {
        let bad = LearningRuleConfig::Bal(BalConfig {
            pool_fraction: 0.0,
            ..Default::default()
        });
        assert!(bad.validate().is_err());
        let bad = LearningRuleConfig::Hebbian(HebbianConfig { eta: -1.0 });
        assert!(bad.validate().is_err());
        let bad = LearningRuleConfig::AnnSnn(AnnSnnConfig {
            ann_epochs: 0,
            ..Default::default()
        });
        assert!(bad.validate().is_err());
    }

    #[test]
    fn partial_tables_fill_defaults() {
        let cfg: LearningRuleConfig = toml::from_str("name = \"stdp\"\na_plus = 0.5\n").unwrap();
        match cfg {
            LearningRuleConfig::Stdp(c) => {
                assert_eq!(c.a_plus, 0.5);
                assert_eq!(c.tau_minus, StdpConfig::default().tau_minus);
            }
            _ => unreachable!(),
        }
    }
}
