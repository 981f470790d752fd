use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize};

/// Inclusive scalar range; a plain number means a fixed value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Range1 {
    pub min: f64,
    pub max: f64,
}

impl Range1 {
    pub const fn fixed(v: f64) -> Self {
        Self { min: v, max: v }
    }

    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    /// Linear interpolation at `u ∈ [0,1)`.
    pub fn at(&self, u: f64) -> f64 {
        if self.max > self.min {
            self.min + (self.max - self.min) * u
        } else {
            self.min
        }
    }

    pub fn is_valid(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && self.min <= self.max
    }
}

/// Range of per-axis scales. Accepts a number, a 3-array or `{min, max}`
/// where each bound is a number or 3-array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Range3 {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Range3 {
    pub const fn iso(v: f64) -> Self {
        Self {
            min: [v; 3],
            max: [v; 3],
        }
    }

    pub const fn fixed(v: [f64; 3]) -> Self {
        Self { min: v, max: v }
    }

    pub const fn iso_range(lo: f64, hi: f64) -> Self {
        Self {
            min: [lo; 3],
            max: [hi; 3],
        }
    }

    pub fn is_valid(&self) -> bool {
        (0..3).all(|a| self.min[a].is_finite() && self.min[a] > 0.0 && self.min[a] <= self.max[a])
    }

    pub fn is_fixed(&self) -> bool {
        self.min == self.max
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Num3 {
    One(f64),
    Three([f64; 3]),
}

impl Num3 {
    fn expand(self) -> [f64; 3] {
        match self {
            Num3::One(v) => [v; 3],
            Num3::Three(v) => v,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Range3Repr {
    Value(Num3),
    Bounds { min: Num3, max: Num3 },
}

impl<'de> Deserialize<'de> for Range3 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Range3Repr::deserialize(d)
            .map_err(|_| de::Error::custom("expected a number, a 3-array or {min, max}"))?
        {
            Range3Repr::Value(v) => Ok(Range3::fixed(v.expand())),
            Range3Repr::Bounds { min, max } => Ok(Range3 {
                min: min.expand(),
                max: max.expand(),
            }),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Range1Repr {
    Value(f64),
    Pair([f64; 2]),
    Bounds { min: f64, max: f64 },
}

impl<'de> Deserialize<'de> for Range1 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Range1Repr::deserialize(d)
            .map_err(|_| de::Error::custom("expected a number, [min, max] or {min, max}"))?
        {
            Range1Repr::Value(v) => Ok(Range1::fixed(v)),
            Range1Repr::Pair([min, max]) | Range1Repr::Bounds { min, max } => Ok(Range1 { min, max }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flexible_forms() {
        let r: Range3 = serde_json::from_str("0.01").unwrap();
        assert_eq!(r, Range3::iso(0.01));
        let r: Range3 = serde_json::from_str("[1,2,3]").unwrap();
        assert_eq!(r, Range3::fixed([1.0, 2.0, 3.0]));
        let r: Range3 = serde_json::from_str(r#"{"min":1,"max":[2,3,4]}"#).unwrap();
        assert_eq!(r.max, [2.0, 3.0, 4.0]);
        let r: Range1 = serde_json::from_str("[0.1, 0.2]").unwrap();
        assert_eq!(r, Range1::new(0.1, 0.2));
        let back: Range1 = serde_json::from_value(serde_json::to_value(r).unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
