//! Millisecond-resolution time values.
//!
//! Every interval in a manifest is stored as whole milliseconds so that clip
//! arithmetic is exact. On the wire a [`Millis`] is a JSON number of seconds.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A point in time (or a duration) in whole milliseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Millis(pub i64);

impl Millis {
    pub const ZERO: Millis = Millis(0);

    pub fn from_secs_f64(secs: f64) -> Self {
        Millis((secs * 1000.0).round() as i64)
    }

    pub const fn from_secs(secs: i64) -> Self {
        Millis(secs * 1000)
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    /// Timestamp of a frame, rounded up to the next millisecond.
    pub fn of_frame(frame: i64, fps: f64) -> Self {
        Millis((frame as f64 * 1000.0 / fps - 1e-9).ceil() as i64)
    }
}

impl Add for Millis {
    type Output = Millis;
    fn add(self, rhs: Millis) -> Millis {
        Millis(self.0 + rhs.0)
    }
}

impl Sub for Millis {
    type Output = Millis;
    fn sub(self, rhs: Millis) -> Millis {
        Millis(self.0 - rhs.0)
    }
}

impl fmt::Display for Millis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:03}s", abs / 1000, abs % 1000)
    }
}

impl Serialize for Millis {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_secs_f64())
    }
}

impl<'de> Deserialize<'de> for Millis {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let secs = f64::deserialize(deserializer)?;
        if !secs.is_finite() {
            return Err(serde::de::Error::custom("non-finite time value"));
        }
        Ok(Millis::from_secs_f64(secs))
    }
}

/// Half-open time interval `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: Millis,
    pub end: Millis,
}

impl Span {
    pub fn new(start: Millis, end: Millis) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> Millis {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains_span(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seconds_round_trip_through_json() {
        for ms in [0i64, 1, 999, 65_000, 3_480_123, 17_999_999] {
            let m = Millis(ms);
            let text = serde_json::to_string(&m).unwrap();
            let back: Millis = serde_json::from_str(&text).unwrap();
            assert_eq!(back, m, "{text}");
        }
    }

    #[test]
    fn frame_grid() {
        assert_eq!(Millis::of_frame(151, 30.0), Millis(5_034));
        assert_eq!(Millis::of_frame(150, 30.0), Millis(5_000));
    }

    #[test]
    fn display() {
        assert_eq!(Millis(65_005).to_string(), "65.005s");
        assert_eq!(Span::new(Millis(0), Millis(1500)).to_string(), "[0.000s, 1.500s)");
    }
}
