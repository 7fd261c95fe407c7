//! Exact monetary amounts.

use alloc::string::String;
use core::fmt;
use core::iter::Sum;
use core::ops::{Add, AddAssign, Sub};
use core::str::FromStr;

use num_rational::Ratio;
use num_traits::{Signed, Zero};

/// A rational amount of currency. Costs and budgets are compared exactly, so
/// `0.1 + 0.2` is `3/10` and never drifts past a budget of `0.3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Cost(Ratio<i128>);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid amount {input:?}: {reason}")]
pub struct CostParseError {
    pub input: String,
    pub reason: &'static str,
}

impl Cost {
    pub const ZERO: Cost = Cost(Ratio::new_raw(0, 1));

    pub fn from_integer(value: i128) -> Self {
        Cost(Ratio::from_integer(value))
    }

    /// `numer / denom`, reduced. Panics on a zero denominator.
    pub fn new(numer: i128, denom: i128) -> Self {
        Cost(Ratio::new(numer, denom))
    }

    pub fn ratio(self) -> Ratio<i128> {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(self) -> bool {
        self.0.is_negative()
    }

    pub fn numer(self) -> i128 {
        *self.0.numer()
    }

    pub fn denom(self) -> i128 {
        *self.0.denom()
    }

    /// `self / other`, or `None` when `other` is zero.
    pub fn checked_div(self, other: Cost) -> Option<Ratio<i128>> {
        if other.is_zero() {
            None
        } else {
            Some(self.0 / other.0)
        }
    }

    pub fn to_f64(self) -> f64 {
        ratio_to_f64(self.0)
    }

    /// Exact decimal rendering when the denominator only has factors 2 and 5.
    fn decimal_digits(self) -> Option<u32> {
        let mut d = self.denom();
        let (mut twos, mut fives) = (0u32, 0u32);
        while d % 2 == 0 {
            d /= 2;
            twos += 1;
        }
        while d % 5 == 0 {
            d /= 5;
            fives += 1;
        }
        (d == 1).then_some(twos.max(fives))
    }
}

pub(crate) fn ratio_to_f64(r: Ratio<i128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

impl Add for Cost {
    type Output = Cost;
    fn add(self, rhs: Cost) -> Cost {
        Cost(self.0 + rhs.0)
    }
}

impl AddAssign for Cost {
    fn add_assign(&mut self, rhs: Cost) {
        self.0 += rhs.0;
    }
}

impl Sub for Cost {
    type Output = Cost;
    fn sub(self, rhs: Cost) -> Cost {
        Cost(self.0 - rhs.0)
    }
}

impl Sum for Cost {
    fn sum<I: Iterator<Item = Cost>>(iter: I) -> Cost {
        iter.fold(Cost::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Cost> for Cost {
    fn sum<I: Iterator<Item = &'a Cost>>(iter: I) -> Cost {
        iter.copied().sum()
    }
}

impl From<i64> for Cost {
    fn from(value: i64) -> Self {
        Cost::from_integer(i128::from(value))
    }
}

/// Integers print bare, terminating fractions as decimals, the rest as `p/q`.
impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            return write!(f, "{}", self.numer());
        }
        match self.decimal_digits() {
            Some(digits) if digits <= 30 => {
                let scale = 10i128.pow(digits);
                let scaled = self.numer() * (scale / self.denom());
                let sign = if scaled < 0 { "-" } else { "" };
                let abs = scaled.unsigned_abs();
                let int_part = abs / scale as u128;
                let frac_part = abs % scale as u128;
                write!(f, "{sign}{int_part}.{frac_part:0width$}", width = digits as usize)
            }
            _ => write!(f, "{}/{}", self.numer(), self.denom()),
        }
    }
}

fn parse_int(input: &str, text: &str) -> Result<i128, CostParseError> {
    let cleaned: String = text.chars().filter(|&c| c != '_').collect();
    if cleaned.is_empty() || !cleaned.bytes().all(|b| b.is_ascii_digit()) {
        return Err(CostParseError {
            input: input.into(),
            reason: "expected digits",
        });
    }
    cleaned.parse().map_err(|_| CostParseError {
        input: input.into(),
        reason: "number too large",
    })
}

/// Accepts `17`, `-3`, `12.50`, `7/2` (underscores allowed as digit separators).
impl FromStr for Cost {
    type Err = CostParseError;

    fn from_str(input: &str) -> Result<Self, Self::Err> {
        let s = input.trim();
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let value = if let Some((n, d)) = body.split_once('/') {
            let n = parse_int(input, n.trim())?;
            let d = parse_int(input, d.trim())?;
            if d == 0 {
                return Err(CostParseError {
                    input: input.into(),
                    reason: "zero denominator",
                });
            }
            Ratio::new(n, d)
        } else if let Some((int, frac)) = body.split_once('.') {
            let int_value = if int.is_empty() { 0 } else { parse_int(input, int)? };
            let digits: String = frac.chars().filter(|&c| c != '_').collect();
            let frac_value = parse_int(input, &digits)?;
            let scale = u32::try_from(digits.len())
                .ok()
                .and_then(|n| 10i128.checked_pow(n))
                .ok_or(CostParseError {
                    input: input.into(),
                    reason: "too many decimal places",
                })?;
            Ratio::new(int_value * scale + frac_value, scale)
        } else {
            Ratio::from_integer(parse_int(input, body)?)
        };
        Ok(Cost(if negative { -value } else { value }))
    }
}
