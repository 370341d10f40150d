use std::fmt;
use std::str::FromStr;

use crate::dense::DenseMatrix;

/// Multiply precision of the dense-tile path.
///
/// `EmulatedTf32` rounds both multiplicands to a 10-bit mantissa before each
/// product; sums stay in `f32`. The scalar path always multiplies in `f32`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrecisionMode {
    #[default]
    ExactF32,
    EmulatedTf32,
}

impl FromStr for PrecisionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fp32" | "f32" | "exact-f32" => Ok(PrecisionMode::ExactF32),
            "tf32" | "emulated-tf32" => Ok(PrecisionMode::EmulatedTf32),
            other => Err(format!(
                "unknown precision {other:?} (expected fp32 or tf32)"
            )),
        }
    }
}

impl fmt::Display for PrecisionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PrecisionMode::ExactF32 => "fp32",
            PrecisionMode::EmulatedTf32 => "tf32",
        })
    }
}

impl PrecisionMode {
    #[inline]
    pub(crate) fn apply(self, v: f32) -> f32 {
        match self {
            PrecisionMode::ExactF32 => v,
            PrecisionMode::EmulatedTf32 => tf32_round_f32(v),
        }
    }
}

const DROPPED_BITS: u32 = 13;

/// Rounds an `f32` mantissa to 10 explicit bits, ties to even. NaN and
/// infinities pass through.
#[inline]
pub fn tf32_round_f32(v: f32) -> f32 {
    if !v.is_finite() {
        return v;
    }
    let bits = v.to_bits();
    let half = (1u32 << (DROPPED_BITS - 1)) - 1;
    let lsb = (bits >> DROPPED_BITS) & 1;
    let rounded = bits.wrapping_add(half + lsb) & !((1u32 << DROPPED_BITS) - 1);
    f32::from_bits(rounded)
}

pub fn tf32_round(m: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(m.rows(), m.cols(), |r, c| tf32_round_f32(m.get(r, c)))
}
