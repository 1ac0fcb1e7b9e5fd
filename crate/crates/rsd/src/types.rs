use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// A probability, validated to lie in [0, 1].
///
/// NaN and out-of-range values are rejected at construction, so downstream
/// arithmetic never has to re-check. The inner value is reachable via
/// `value()` or `f64::from`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(
                "Probability::new",
                format!("{p} is not in [0, 1]"),
            ));
        }
        Ok(Probability(p))
    }

    /// Constructor for values that are in range by construction
    /// (e.g. a CDF that was just clamped by its own mathematics).
    /// Panics in debug builds if the invariant is violated.
    pub(crate) fn new_unchecked(p: f64) -> Self {
        debug_assert!(!p.is_nan() && (0.0..=1.0).contains(&p), "bad probability {p}");
        Probability(p)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// 1 - p, exact at the endpoints.
    pub fn complement(self) -> Self {
        Probability(1.0 - self.0)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;
    fn try_from(p: f64) -> Result<Self> {
        Probability::new(p)
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A nonnegative real carried in log space to avoid underflow.
/// `LogReal::ZERO` represents exact zero (log = -inf).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogReal(f64);

impl LogReal {
    pub const ZERO: LogReal = LogReal(f64::NEG_INFINITY);
    pub const ONE: LogReal = LogReal(0.0);

    pub fn from_ln(ln: f64) -> Result<Self> {
        if ln.is_nan() {
            return Err(Error::domain("LogReal::from_ln", "log value is NaN"));
        }
        Ok(LogReal(ln))
    }

    pub fn from_value(v: f64) -> Result<Self> {
        if v.is_nan() || v < 0.0 {
            return Err(Error::domain(
                "LogReal::from_value",
                format!("{v} is not a nonnegative real"),
            ));
        }
        Ok(LogReal(v.ln()))
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0.exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probability_rejects_out_of_range() {
        assert!(Probability::new(-0.1).is_err());
        assert!(Probability::new(1.0000001).is_err());
        assert!(Probability::new(f64::NAN).is_err());
        assert_eq!(Probability::new(0.0).unwrap().value(), 0.0);
        assert_eq!(Probability::new(1.0).unwrap().value(), 1.0);
    }

    #[test]
    fn probability_complement_is_exact_at_endpoints() {
        assert_eq!(Probability::ONE.complement().value(), 0.0);
        assert_eq!(Probability::ZERO.complement().value(), 1.0);
    }

    #[test]
    fn logreal_round_trips() {
        let x = LogReal::from_value(1e-300).unwrap();
        assert!((x.value() - 1e-300).abs() < 1e-310);
        assert_eq!(LogReal::from_value(0.0).unwrap().value(), 0.0);
        assert!(LogReal::from_value(-1.0).is_err());
    }
}
