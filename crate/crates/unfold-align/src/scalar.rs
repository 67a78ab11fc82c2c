//! Cost scalar abstraction.
//!
//! All cost accumulation, queue ordering and linear programming in this
//! crate is generic over a totally ordered numeric scalar. Exact rational
//! types keep tie-breaking deterministic and make optimality assertions
//! exact; any type satisfying the bounds (e.g. an ordered float wrapper)
//! can be substituted.

use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Scalar type usable for move costs and heuristic values.
///
/// `Ord` (a total order) is required so priority-queue keys are
/// well-defined; plain `f64` does not qualify, ordered wrappers do.
pub trait CostValue:
    Num
    + Signed
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Ord
    + Clone
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Exact ratio `num/den`; exact for rational scalars, rounded for floats.
    fn ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num).expect("scalar from i64")
            / Self::from_i64(den).expect("scalar from i64")
    }

    /// Lossy conversion for display and plotting.
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> CostValue for T where
    T: Num
        + Signed
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Ord
        + Clone
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Arbitrary-precision exact rational, the default cost scalar.
pub type Rational = num_rational::BigRational;

/// Parses a scalar from decimal (`3.0001`), ratio (`30001/10000`) or
/// integer (`3`) notation. Decimal input is converted exactly.
pub fn parse_cost<C: CostValue>(s: &str) -> Result<C, String> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n
            .trim()
            .parse()
            .map_err(|e| format!("bad numerator in {s:?}: {e}"))?;
        let d: i64 = d
            .trim()
            .parse()
            .map_err(|e| format!("bad denominator in {s:?}: {e}"))?;
        if d == 0 {
            return Err(format!("zero denominator in {s:?}"));
        }
        return Ok(C::ratio(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.trim_start().starts_with('-');
        let int: i64 = if int.is_empty() || int == "-" {
            0
        } else {
            int.parse().map_err(|e| format!("bad number {s:?}: {e}"))?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("bad decimal {s:?}"));
        }
        if frac.len() > 18 {
            return Err(format!("too many decimal digits in {s:?}"));
        }
        let den = 10i64.pow(frac.len() as u32);
        let frac_num: i64 = frac
            .parse()
            .map_err(|e| format!("bad decimal {s:?}: {e}"))?;
        let whole = C::from_i64(int).expect("scalar from i64");
        let part = C::ratio(if neg { -frac_num } else { frac_num }, den);
        return Ok(whole + part);
    }
    let n: i64 = s.parse().map_err(|e| format!("bad number {s:?}: {e}"))?;
    Ok(C::from_i64(n).expect("scalar from i64"))
}

/// Renders a scalar as a short decimal when it has one (denominator a
/// product of 2s and 5s), otherwise falls back to `Display`.
pub fn format_cost<C: CostValue>(c: &C) -> String {
    // Try to recover an exact decimal via f64; verify by parsing back.
    if let Some(f) = c.to_f64() {
        let s = format!("{f}");
        if let Ok(back) = parse_cost::<C>(&s) {
            if &back == c {
                return s;
            }
        }
    }
    format!("{c}")
}
