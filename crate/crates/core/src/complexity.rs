//! Lempel-Ziv (1976) complexity of binary sequences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sources::BinarySequence;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityResult {
    /// Number of phrases in the exhaustive-history parse.
    pub c_raw: usize,
    /// `c_raw / n * log2(n)`.
    pub c_norm: f64,
    pub n: usize,
    pub alpha: u32,
}

impl ComplexityResult {
    pub fn of(seq: &BinarySequence) -> Result<Self> {
        let c_raw = lz76_complexity(seq)?;
        let n = seq.len();
        if n < 2 {
            return Err(Error::param("normalized complexity needs at least 2 symbols"));
        }
        Ok(Self {
            c_raw,
            c_norm: normalize(c_raw, n),
            n,
            alpha: 2,
        })
    }
}

/// Phrase count of the LZ76 exhaustive-history parse.
pub fn lz76_complexity(seq: &BinarySequence) -> Result<usize> {
    lz76_bits(seq.bits())
}

/// Same as [`lz76_complexity`] on a raw bit slice.
///
/// Linear-scan formulation of Kaspar and Schuster: `l` marks the start of the
/// phrase under construction, `i` the candidate history offset and `k` the
/// current match length. A phrase that runs off the end of the input is
/// counted once.
pub fn lz76_bits(s: &[u8]) -> Result<usize> {
    let n = s.len();
    if n == 0 {
        return Err(Error::param("complexity of an empty sequence is undefined"));
    }
    if n == 1 {
        return Ok(1);
    }
    let (mut c, mut l, mut i, mut k, mut k_max) = (1usize, 1usize, 0usize, 1usize, 1usize);
    loop {
        if s[i + k - 1] == s[l + k - 1] {
            k += 1;
            if l + k > n {
                c += 1;
                break;
            }
        } else {
            k_max = k_max.max(k);
            i += 1;
            if i == l {
                c += 1;
                l += k_max;
                if l + 1 > n {
                    break;
                }
                i = 0;
                k = 1;
                k_max = 1;
            } else {
                k = 1;
            }
        }
    }
    Ok(c)
}

#[inline]
fn normalize(c_raw: usize, n: usize) -> f64 {
    c_raw as f64 / n as f64 * (n as f64).log2()
}

/// Normalized complexity `C / n * log2 n`; tends to 1 for fair-coin input.
pub fn normalized_lzc(seq: &BinarySequence) -> Result<f64> {
    normalized_lzc_bits(seq.bits())
}

pub fn normalized_lzc_bits(bits: &[u8]) -> Result<f64> {
    if bits.len() < 2 {
        return Err(Error::param(format!(
            "normalized complexity needs at least 2 symbols, got {}",
            bits.len()
        )));
    }
    Ok(normalize(lz76_bits(bits)?, bits.len()))
}

/// Class 1 is the high-complexity class; ties go to class 1.
pub fn classify_by_lzc(c_norm: f64, threshold: f64) -> u8 {
    u8::from(c_norm >= threshold)
}


/// Decision rule derived from class-conditional output complexities.
///
/// `swapped` is set when class 0 produced the higher mean complexity during
/// calibration; predictions are then inverted so the threshold still
/// separates the classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LzcCalibration {
    pub threshold: f64,
    pub swapped: bool,
    pub degenerate: bool,
}

impl LzcCalibration {
    pub fn fixed(threshold: f64) -> Self {
        Self {
            threshold,
            swapped: false,
            degenerate: false,
        }
    }

    pub fn classify(&self, c_norm: f64) -> u8 {
        let raw = classify_by_lzc(c_norm, self.threshold);
        if self.swapped {
            1 - raw
        } else {
            raw
        }
    }
}
