//! Binary sequence generators and balanced two-class datasets.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derived_rng, rng_from_seed, stream};

pub const DEFAULT_LENGTH: usize = 1024;

/// A non-empty string of bits, stored one bit per byte.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinarySequence(Vec<u8>);

impl BinarySequence {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::param("binary sequence must be non-empty"));
        }
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::param(format!("non-binary symbol at position {pos}")));
        }
        Ok(Self(bits))
    }

    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(vec![0; len])
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.0.iter().map(|&b| b as usize).sum()
    }

    pub fn mean(&self) -> f64 {
        self.ones() as f64 / self.len() as f64
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.0
    }
}

impl fmt::Display for BinarySequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BinarySequence {
    type Err = Error;

    /// Parses `0`/`1` characters, ignoring ASCII whitespace.
    fn from_str(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => bits.push(0),
                '1' => bits.push(1),
                c if c.is_ascii_whitespace() => {}
                c => {
                    return Err(Error::param(format!(
                        "unexpected character {c:?} at offset {i}"
                    )))
                }
            }
        }
        Self::new(bits)
    }
}

/// Parameterization of one stochastic binary source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SourceSpec {
    Bernoulli {
        p: f64,
    },
    Markov {
        p01: f64,
        p10: f64,
        /// Probability that the first bit is 1. When absent the chain starts
        /// from its stationary distribution.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        initial: Option<f64>,
    },
    Poisson {
        /// Events per second.
        rate: f64,
        /// Bin width in seconds.
        dt: f64,
    },
}

impl SourceSpec {
    pub fn family(&self) -> SourceFamily {
        match self {
            SourceSpec::Bernoulli { .. } => SourceFamily::Bernoulli,
            SourceSpec::Markov { .. } => SourceFamily::Markov,
            SourceSpec::Poisson { .. } => SourceFamily::Poisson,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SourceSpec::Bernoulli { p } => check_probability("p", p),
            SourceSpec::Markov { p01, p10, initial } => {
                check_probability("p01", p01)?;
                check_probability("p10", p10)?;
                if let Some(q) = initial {
                    check_probability("initial", q)?;
                } else if p01 + p10 == 0.0 {
                    return Err(Error::param(
                        "absorbing Markov chain (p01 = p10 = 0) needs an initial distribution",
                    ));
                }
                Ok(())
            }
            SourceSpec::Poisson { rate, dt } => {
                if !(rate.is_finite() && rate >= 0.0) {
                    return Err(Error::param(format!("Poisson rate must be >= 0, got {rate}")));
                }
                if !(dt.is_finite() && dt > 0.0) {
                    return Err(Error::param(format!("Poisson dt must be > 0, got {dt}")));
                }
                Ok(())
            }
        }
    }

    pub fn generate(&self, length: usize, seed: u64) -> Result<BinarySequence> {
        match *self {
            SourceSpec::Bernoulli { p } => gen_bernoulli(p, length, seed),
            SourceSpec::Markov { p01, p10, initial } => {
                gen_markov_with_initial(p01, p10, initial, length, seed)
            }
            SourceSpec::Poisson { rate, dt } => gen_poisson(rate, dt, length, seed),
        }
    }
}

/// The three source families, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFamily {
    Bernoulli,
    Markov,
    Poisson,
}

impl SourceFamily {
    pub const ALL: [SourceFamily; 3] =
        [SourceFamily::Bernoulli, SourceFamily::Markov, SourceFamily::Poisson];

    pub fn name(self) -> &'static str {
        match self {
            SourceFamily::Bernoulli => "bernoulli",
            SourceFamily::Markov => "markov",
            SourceFamily::Poisson => "poisson",
        }
    }

    /// Default low-complexity / high-complexity class pair for this family.
    pub fn default_pair(self) -> (SourceSpec, SourceSpec) {
        match self {
            SourceFamily::Bernoulli => (
                SourceSpec::Bernoulli { p: 0.1 },
                SourceSpec::Bernoulli { p: 0.9 },
            ),
            SourceFamily::Markov => (
                SourceSpec::Markov { p01: 0.05, p10: 0.05, initial: None },
                SourceSpec::Markov { p01: 0.45, p10: 0.45, initial: None },
            ),
            SourceFamily::Poisson => (
                SourceSpec::Poisson { rate: 50.0, dt: 1e-3 },
                SourceSpec::Poisson { rate: 500.0, dt: 1e-3 },
            ),
        }
    }
}

impl fmt::Display for SourceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SourceFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bernoulli" => Ok(SourceFamily::Bernoulli),
            "markov" => Ok(SourceFamily::Markov),
            "poisson" => Ok(SourceFamily::Poisson),
            other => Err(Error::param(format!("unknown source family {other:?}"))),
        }
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::param(format!("{name} must lie in [0, 1], got {p}")))
    }
}

fn check_length(length: usize) -> Result<()> {
    if length == 0 {
        Err(Error::param("sequence length must be positive"))
    } else {
        Ok(())
    }
}

// One uniform draw per bin; Bernoulli and Poisson share this path so equal
// per-bin probabilities give bit-identical output.
fn bernoulli_bits(p: f64, length: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    (0..length)
        .map(|_| u8::from(rng.random::<f64>() < p))
        .collect()
}

pub fn gen_bernoulli(p: f64, length: usize, seed: u64) -> Result<BinarySequence> {
    check_probability("p", p)?;
    check_length(length)?;
    let mut rng = rng_from_seed(seed);
    BinarySequence::new(bernoulli_bits(p, length, &mut rng))
}

/// Two-state Markov chain started from its stationary distribution.
pub fn gen_markov(p01: f64, p10: f64, length: usize, seed: u64) -> Result<BinarySequence> {
    gen_markov_with_initial(p01, p10, None, length, seed)
}

/// Two-state Markov chain with transition probabilities `P(1|0) = p01` and
/// `P(0|1) = p10`. An explicit `initial` (probability of a leading 1) takes
/// precedence over the stationary distribution.
pub fn gen_markov_with_initial(
    p01: f64,
    p10: f64,
    initial: Option<f64>,
    length: usize,
    seed: u64,
) -> Result<BinarySequence> {
    SourceSpec::Markov { p01, p10, initial }.validate()?;
    check_length(length)?;
    let first_one = match initial {
        Some(q) => q,
        None => p01 / (p01 + p10),
    };
    let mut rng = rng_from_seed(seed);
    let mut bits = Vec::with_capacity(length);
    let mut state = u8::from(rng.random::<f64>() < first_one);
    bits.push(state);
    for _ in 1..length {
        let u = rng.random::<f64>();
        state = match state {
            0 => u8::from(u < p01),
            _ => u8::from(u >= p10),
        };
        bits.push(state);
    }
    BinarySequence::new(bits)
}

/// Per-bin spike probability of a homogeneous Poisson process.
pub fn poisson_bin_probability(rate: f64, dt: f64) -> f64 {
    1.0 - (-rate * dt).exp()
}

pub fn gen_poisson(rate: f64, dt: f64, length: usize, seed: u64) -> Result<BinarySequence> {
    SourceSpec::Poisson { rate, dt }.validate()?;
    check_length(length)?;
    let q = poisson_bin_probability(rate, dt);
    let mut rng = rng_from_seed(seed);
    BinarySequence::new(bernoulli_bits(q, length, &mut rng))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub items: Vec<(BinarySequence, u8)>,
    pub class0_spec: SourceSpec,
    pub class1_spec: SourceSpec,
    pub seed: u64,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.items.iter().map(|(_, l)| *l).collect()
    }

    pub fn count_label(&self, label: u8) -> usize {
        self.items.iter().filter(|(_, l)| *l == label).count()
    }

    pub fn is_balanced(&self) -> bool {
        self.count_label(0) == self.count_label(1)
    }
}

/// Builds a balanced, deterministically shuffled two-class dataset. Item `i`
/// of class `c` is generated from its own derived seed, so the per-item
/// streams are independent of `count_per_class`.
pub fn make_dataset(
    class0: SourceSpec,
    class1: SourceSpec,
    count_per_class: usize,
    length: usize,
    seed: u64,
) -> Result<LabeledDataset> {
    if count_per_class == 0 {
        return Err(Error::param("count_per_class must be positive"));
    }
    check_length(length)?;
    class0.validate()?;
    class1.validate()?;

    let mut items = Vec::with_capacity(2 * count_per_class);
    for (label, spec, tag) in [(0u8, class0, stream::CLASS0), (1u8, class1, stream::CLASS1)] {
        for i in 0..count_per_class {
            let sub = crate::rng::derive_seed(seed, tag, i as u64);
            items.push((spec.generate(length, sub)?, label));
        }
    }
    let mut rng = derived_rng(seed, stream::SHUFFLE, 0);
    items.shuffle(&mut rng);

    Ok(LabeledDataset {
        items,
        class0_spec: class0,
        class1_spec: class1,
        seed,
    })
}
