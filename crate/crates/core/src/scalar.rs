//! Floating point abstraction shared by the numeric modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar used throughout the pipeline: `f32` or `f64`.
///
/// `Display` must print the shortest decimal string that parses back to the
/// same value; the text file formats rely on it for bit-exact round trips.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + FromStr
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Formats a scalar in plain decimal notation with at least `min_sig`
/// significant digits, without losing the round-trip property of `Display`.
pub fn format_decimal<T: Scalar>(x: T, min_sig: usize) -> String {
    let mut s = format!("{x}");
    let digits = s.chars().filter(|c| c.is_ascii_digit()).collect::<String>();
    let significant = digits.trim_start_matches('0').len();
    if significant >= min_sig || !x.is_finite() {
        return s;
    }
    let pad = if x.is_zero() {
        // "0" has one significant digit by convention
        min_sig.saturating_sub(1)
    } else {
        min_sig - significant
    };
    if !s.contains('.') {
        s.push('.');
    }
    s.extend(std::iter::repeat_n('0', pad));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pads_short_values() {
        assert_eq!(format_decimal(4.0f64, 6), "4.00000");
        assert_eq!(format_decimal(12.5f64, 6), "12.5000");
        assert_eq!(format_decimal(0.0f64, 6), "0.00000");
        assert_eq!(format_decimal(0.25f32, 6), "0.250000");
    }

    #[test]
    fn keeps_long_values() {
        let x = 1.0f64 / 3.0;
        assert_eq!(format_decimal(x, 6), format!("{x}"));
    }

    #[test]
    fn padded_values_parse_back_exactly() {
        for &x in &[4.0f64, 13.75, 0.5, 63.0, 1e-3, 7.123456789] {
            let s = format_decimal(x, 6);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }
}
