//! Ground-truth physical field sampled by the sensors.
//!
//! A field is a list of regions (spatial predicate + step timeline) over a
//! default value. Every position at every round maps to exactly one value:
//! the first matching region wins, the default applies otherwise. The field
//! is immutable after construction; concurrent reads are safe.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::topology::{NodeId, Position};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Circle { cx: f64, cy: f64, radius: f64 },
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
}

impl Shape {
    pub fn contains(&self, p: Position) -> bool {
        match *self {
            Shape::Circle { cx, cy, radius } => {
                let dx = p.x - cx;
                let dy = p.y - cy;
                dx * dx + dy * dy <= radius * radius
            }
            Shape::Rect { x0, y0, x1, y1 } => (x0..=x1).contains(&p.x) && (y0..=y1).contains(&p.y),
        }
    }
}

/// A region's value over time: a step function given as `(round, value)`
/// pairs sorted by round. The value at round `t` is the value of the last
/// step with `round <= t`; before the first step the first value applies.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub shape: Shape,
    pub timeline: Vec<(u64, f64)>,
}

impl Region {
    pub fn constant(shape: Shape, value: f64) -> Self {
        Self {
            shape,
            timeline: vec![(0, value)],
        }
    }

    fn value_at(&self, round: u64) -> f64 {
        let mut v = self.timeline.first().map(|&(_, v)| v).unwrap_or(0.0);
        for &(r, val) in &self.timeline {
            if r <= round {
                v = val;
            } else {
                break;
            }
        }
        v
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Field {
    #[serde(default)]
    pub regions: Vec<Region>,
    #[serde(default)]
    pub default_value: f64,
}

impl Default for Field {
    fn default() -> Self {
        Self::uniform(0.0)
    }
}

impl Field {
    pub fn uniform(value: f64) -> Self {
        Self {
            regions: Vec::new(),
            default_value: value,
        }
    }

    /// Deterministic value for `(pos, round)`.
    pub fn sample(&self, pos: Position, round: u64) -> f64 {
        for region in &self.regions {
            if region.shape.contains(pos) {
                return region.value_at(round);
            }
        }
        self.default_value
    }
}

/// One sensed value, tagged with its producer and the round it was sensed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reading {
    pub source: NodeId,
    pub round: u64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceKind {
    /// Divide by the count. Defined for a single sample (yields 0).
    Population,
    /// Divide by count - 1; a single sample yields 0 by convention.
    Sample,
}

/// Variance of a nonempty value list. Two-pass mean-of-squared-deviations,
/// nonnegative, zero iff all values are equal.
pub fn variance(values: &[f64], kind: VarianceKind) -> Result<f64> {
    if values.is_empty() {
        return Err(SimError::EmptyInput("variance"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let denom = match kind {
        VarianceKind::Population => n,
        VarianceKind::Sample => {
            if values.len() == 1 {
                return Ok(0.0);
            }
            n - 1.0
        }
    };
    Ok(ss / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn circle(cx: f64, cy: f64, radius: f64) -> Shape {
        Shape::Circle { cx, cy, radius }
    }

    #[test]
    fn region_value_wins_over_default() {
        let field = Field {
            regions: vec![Region::constant(circle(0.0, 0.0, 5.0), 10.0)],
            default_value: 0.0,
        };
        for round in [0, 3, 1000] {
            assert_eq!(field.sample(Position::new(1.0, 1.0), round), 10.0);
        }
    }

    #[test]
    fn default_applies_outside_regions() {
        let field = Field {
            regions: vec![Region::constant(circle(0.0, 0.0, 5.0), 10.0)],
            default_value: 0.0,
        };
        assert_eq!(field.sample(Position::new(50.0, 50.0), 0), 0.0);
    }

    #[test]
    fn timeline_step_applies_at_its_round() {
        let field = Field {
            regions: vec![Region {
                shape: circle(0.0, 0.0, 5.0),
                timeline: vec![(0, 10.0), (5, 30.0)],
            }],
            default_value: 0.0,
        };
        let p = Position::new(0.0, 0.0);
        // One-line oracle: scan the timeline for the last step <= t.
        let oracle = |t: u64| if t >= 5 { 30.0 } else { 10.0 };
        for t in 0..10 {
            assert_eq!(field.sample(p, t), oracle(t), "round {t}");
        }
        assert_eq!(field.sample(p, 5), 30.0);
    }

    #[test]
    fn first_matching_region_wins() {
        let field = Field {
            regions: vec![
                Region::constant(circle(0.0, 0.0, 5.0), 1.0),
                Region::constant(circle(0.0, 0.0, 10.0), 2.0),
            ],
            default_value: 0.0,
        };
        assert_eq!(field.sample(Position::new(1.0, 0.0), 0), 1.0);
        assert_eq!(field.sample(Position::new(7.0, 0.0), 0), 2.0);
    }

    #[test]
    fn variance_constant_is_zero() {
        assert_eq!(
            variance(&[10.0, 10.0, 10.0], VarianceKind::Population).unwrap(),
            0.0
        );
    }

    #[test]
    fn variance_hand_computed() {
        // {10,20,30}: mean 20, sum of squared deviations 200, population 200/3.
        let v = variance(&[10.0, 20.0, 30.0], VarianceKind::Population).unwrap();
        assert!((v - 200.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn variance_single_sample_is_zero() {
        assert_eq!(variance(&[42.0], VarianceKind::Population).unwrap(), 0.0);
        assert_eq!(variance(&[42.0], VarianceKind::Sample).unwrap(), 0.0);
    }

    #[test]
    fn variance_empty_is_error() {
        assert!(matches!(
            variance(&[], VarianceKind::Population),
            Err(SimError::EmptyInput(_))
        ));
    }

    #[test]
    fn variance_sample_kind_divides_by_n_minus_one() {
        let v = variance(&[10.0, 20.0, 30.0], VarianceKind::Sample).unwrap();
        assert!((v - 100.0).abs() < 1e-12);
    }

    #[test]
    fn fig3_threshold_classifications() {
        // The two classifications the grid example requires under T = 15.
        let loud = variance(&[10.0, 20.0, 30.0], VarianceKind::Population).unwrap();
        assert!(loud > 15.0);
        let quiet = variance(&[10.0, 10.0, 10.0, 10.0], VarianceKind::Population).unwrap();
        assert!(quiet <= 15.0);
    }

    #[test]
    fn variance_translation_invariance_and_scaling() {
        let mut rng = SplitMix64::new(4);
        for _ in 0..200 {
            let n = 1 + rng.next_below(12) as usize;
            let vals: Vec<f64> = (0..n).map(|_| rng.next_f64() * 50.0).collect();
            let c = rng.next_f64() * 100.0 - 50.0;
            let a = rng.next_f64() * 4.0;
            let base = variance(&vals, VarianceKind::Population).unwrap();
            let shifted: Vec<f64> = vals.iter().map(|v| v + c).collect();
            let vs = variance(&shifted, VarianceKind::Population).unwrap();
            assert!((vs - base).abs() <= 1e-9 * base.max(1.0), "translation");
            let scaled: Vec<f64> = vals.iter().map(|v| a * v).collect();
            let vsc = variance(&scaled, VarianceKind::Population).unwrap();
            assert!(
                (vsc - a * a * base).abs() <= 1e-9 * (a * a * base).max(1.0),
                "scaling"
            );
            assert!(base >= 0.0);
        }
    }
}
