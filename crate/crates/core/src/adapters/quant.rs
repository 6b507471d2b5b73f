//! Blockwise 4-bit quantization.
//!
//! Values are cut into blocks of `block_size`; each block is scaled by its
//! largest magnitude. `absmax4` rounds `7·v/absmax` half away from zero to a
//! signed code in `[-7, 7]`. `nf4` maps `v/absmax` to the nearest of 16
//! levels placed at standard-normal quantiles, giving codes in `[0, 15]`.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// NF4 levels: normal quantiles rescaled to `[-1, 1]`, 7 negative, zero,
/// 8 positive.
#[allow(clippy::excessive_precision)]
pub const NF4_CODEBOOK: [f64; 16] = [
    -1.0,
    -0.69619289060372,
    -0.5250730386952291,
    -0.3949174906993099,
    -0.2844413576181077,
    -0.18477343519288886,
    -0.09104999214427931,
    0.0,
    0.07958032909416937,
    0.16093017270493618,
    0.2461122939299359,
    0.33791519352165506,
    0.44070980241319013,
    0.562616970075237,
    0.7229567278928821,
    1.0,
];

const ABSMAX_LEVELS: f64 = 7.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantScheme {
    Absmax4,
    Nf4,
}

impl QuantScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            QuantScheme::Absmax4 => "absmax4",
            QuantScheme::Nf4 => "nf4",
        }
    }
}

impl FromStr for QuantScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absmax4" => Ok(QuantScheme::Absmax4),
            "nf4" => Ok(QuantScheme::Nf4),
            other => Err(Error::InvalidArgument(format!(
                "unknown quantization scheme `{other}` (expected absmax4 or nf4)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedTensor {
    pub codes: Vec<i8>,
    /// Largest magnitude in each block.
    pub absmax: Vec<f64>,
    pub block_size: usize,
    pub scheme: QuantScheme,
    pub original_length: usize,
}

impl QuantizedTensor {
    /// Per-block stored scale: `absmax / 7` for absmax4 (the value of one
    /// code step), `absmax` for nf4.
    pub fn scales(&self) -> Vec<f64> {
        self.absmax
            .iter()
            .map(|&m| match self.scheme {
                QuantScheme::Absmax4 => m / ABSMAX_LEVELS,
                QuantScheme::Nf4 => m,
            })
            .collect()
    }

    pub fn num_blocks(&self) -> usize {
        self.absmax.len()
    }

    /// Bytes needed with two codes packed per byte plus one f64 scale per block.
    pub fn packed_bytes(&self) -> usize {
        self.codes.len().div_ceil(2) + 8 * self.absmax.len()
    }
}

fn nearest_nf4(u: f64) -> i8 {
    let mut best = 0;
    for (i, level) in NF4_CODEBOOK.iter().enumerate().skip(1) {
        if (u - level).abs() < (u - NF4_CODEBOOK[best]).abs() {
            best = i;
        }
    }
    best as i8
}

pub fn quantize_blockwise(values: &[f64], block_size: usize, scheme: QuantScheme) -> Result<QuantizedTensor> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("nothing to quantize".into()));
    }
    if block_size == 0 {
        return Err(Error::InvalidArgument("block size must be at least 1".into()));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("value {i} is not finite")));
    }

    let mut codes = Vec::with_capacity(values.len());
    let mut absmax = Vec::with_capacity(values.len().div_ceil(block_size));
    for block in values.chunks(block_size) {
        let m = block.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        absmax.push(m);
        if m == 0.0 {
            codes.extend(std::iter::repeat_n(0, block.len()));
            continue;
        }
        codes.extend(block.iter().map(|&v| match scheme {
            // f64::round rounds half away from zero
            QuantScheme::Absmax4 => (ABSMAX_LEVELS * v / m).round().clamp(-ABSMAX_LEVELS, ABSMAX_LEVELS) as i8,
            QuantScheme::Nf4 => nearest_nf4(v / m),
        }));
    }
    Ok(QuantizedTensor {
        codes,
        absmax,
        block_size,
        scheme,
        original_length: values.len(),
    })
}

pub fn dequantize(q: &QuantizedTensor) -> Result<Vec<f64>> {
    if q.block_size == 0 {
        return Err(Error::Corrupt("block size is 0".into()));
    }
    if q.codes.len() != q.original_length {
        return Err(Error::Corrupt(format!(
            "{} codes for {} values",
            q.codes.len(),
            q.original_length
        )));
    }
    if q.absmax.len() != q.original_length.div_ceil(q.block_size) {
        return Err(Error::Corrupt(format!(
            "{} scales for {} blocks",
            q.absmax.len(),
            q.original_length.div_ceil(q.block_size)
        )));
    }
    if let Some(m) = q.absmax.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
        return Err(Error::Corrupt(format!("invalid block scale {m}")));
    }
    let valid = match q.scheme {
        QuantScheme::Absmax4 => -7..=7,
        QuantScheme::Nf4 => 0..=15,
    };
    if let Some((i, c)) = q.codes.iter().enumerate().find(|(_, c)| !valid.contains(*c)) {
        return Err(Error::Corrupt(format!("code {c} at position {i} is out of range for {}", q.scheme.as_str())));
    }

    Ok(q
        .codes
        .chunks(q.block_size)
        .zip(&q.absmax)
        .flat_map(|(block, &m)| {
            block.iter().map(move |&c| match q.scheme {
                QuantScheme::Absmax4 => m * (c as f64 / ABSMAX_LEVELS),
                // + 0.0 turns the -0.0 of a zero block's code 0 into +0.0
                QuantScheme::Nf4 => m * NF4_CODEBOOK[c as usize] + 0.0,
            })
        })
        .collect())
}

/// Reconstruction error of a quantize/dequantize roundtrip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantStats {
    pub mse: f64,
    pub max_abs_error: f64,
}

impl QuantStats {
    pub fn measure(original: &[f64], reconstructed: &[f64]) -> Self {
        let n = original.len().max(1) as f64;
        let (sq, max) = original
            .iter()
            .zip(reconstructed)
            .map(|(a, b)| (a - b).abs())
            .fold((0.0, 0.0f64), |(sq, max), e| (sq + e * e, max.max(e)));
        Self {
            mse: sq / n,
            max_abs_error: max,
        }
    }
}
