//! Piecewise-linear utility functions mapping raw metric values to
//! satisfaction scores in `[0, 1]`.
//!
//! A utility is a list of breakpoints `(x, u)` with strictly increasing `x`.
//! Between breakpoints the score is interpolated linearly; outside the span
//! it is clamped to the end scores. Lower-better metrics use nonincreasing
//! breakpoint scores instead of negating the metric, so raw values stay
//! readable in reports.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Direction;

#[derive(Debug, Error, PartialEq)]
pub enum UtilityError {
    #[error("utility input must be finite, got {0}")]
    NonFinite(f64),
}

/// Breakpoint-based utility function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearUtility {
    points: Vec<(f64, f64)>,
}

/// Result of evaluating a utility, with a flag for inputs outside the
/// breakpoint span.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityValue {
    pub score: f64,
    pub clamped: bool,
}

impl PiecewiseLinearUtility {
    /// Builds a utility from breakpoints. No validation is done here; use
    /// [`validate_utility`] to check the shape against a metric direction.
    pub fn new(points: Vec<(f64, f64)>) -> Self {
        Self { points }
    }

    /// `u(x) = x` on `[0, 1]`.
    pub fn identity() -> Self {
        Self::new(vec![(0.0, 0.0), (1.0, 1.0)])
    }

    /// Linear utility from the worst to the best value of a metric range.
    pub fn linear(direction: Direction, lower: f64, upper: f64) -> Self {
        match direction {
            Direction::HigherBetter => Self::new(vec![(lower, 0.0), (upper, 1.0)]),
            Direction::LowerBetter => Self::new(vec![(lower, 1.0), (upper, 0.0)]),
        }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Evaluates the utility, reporting whether `x` fell outside the span.
    pub fn evaluate_checked(&self, x: f64) -> Result<UtilityValue, UtilityError> {
        if !x.is_finite() {
            return Err(UtilityError::NonFinite(x));
        }
        let (first, last) = match (self.points.first(), self.points.last()) {
            (Some(f), Some(l)) => (*f, *l),
            _ => return Ok(UtilityValue { score: 0.0, clamped: true }),
        };
        if x <= first.0 {
            return Ok(UtilityValue { score: first.1, clamped: x < first.0 });
        }
        if x >= last.0 {
            return Ok(UtilityValue { score: last.1, clamped: x > last.0 });
        }
        // First breakpoint strictly above x; x > first.0 so idx >= 1.
        let idx = self.points.partition_point(|&(px, _)| px <= x);
        let (x0, u0) = self.points[idx - 1];
        let (x1, u1) = self.points[idx];
        let t = (x - x0) / (x1 - x0);
        Ok(UtilityValue { score: u0 + t * (u1 - u0), clamped: false })
    }

    /// Evaluates the utility, clamping outside the breakpoint span.
    pub fn evaluate(&self, x: f64) -> Result<f64, UtilityError> {
        self.evaluate_checked(x).map(|v| v.score)
    }
}

/// Free-function form of [`PiecewiseLinearUtility::evaluate`].
pub fn evaluate_utility(f: &PiecewiseLinearUtility, x: f64) -> Result<f64, UtilityError> {
    f.evaluate(x)
}

#[derive(Debug, Clone, PartialEq)]
pub enum UtilityViolation {
    TooFewPoints(usize),
    NonFinite { index: usize },
    NotIncreasing { index: usize },
    ScoreOutOfRange { index: usize, score: f64 },
    NotMonotone { index: usize, direction: Direction },
    Endpoint { which: Endpoint, expected: f64, found: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    First,
    Last,
}

impl fmt::Display for UtilityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TooFewPoints(n) => write!(f, "needs at least 2 breakpoints, has {n}"),
            Self::NonFinite { index } => write!(f, "breakpoint {index} is not finite"),
            Self::NotIncreasing { index } => {
                write!(f, "breakpoint {index}: x must be strictly increasing")
            }
            Self::ScoreOutOfRange { index, score } => {
                write!(f, "breakpoint {index}: score {score} outside [0, 1]")
            }
            Self::NotMonotone { index, direction } => {
                write!(f, "breakpoint {index}: scores not monotone for a {direction} metric")
            }
            Self::Endpoint { which, expected, found } => {
                let which = match which {
                    Endpoint::First => "first",
                    Endpoint::Last => "last",
                };
                write!(f, "{which} score must be {expected}, found {found}")
            }
        }
    }
}

/// Checks breakpoint ordering, score range, monotonicity in the metric's
/// preference direction and the 0/1 end scores. An empty report means the
/// utility is well formed.
pub fn validate_utility(f: &PiecewiseLinearUtility, direction: Direction) -> Vec<UtilityViolation> {
    let pts = f.points();
    let mut out = Vec::new();
    if pts.len() < 2 {
        out.push(UtilityViolation::TooFewPoints(pts.len()));
        return out;
    }
    for (i, &(x, u)) in pts.iter().enumerate() {
        if !x.is_finite() || !u.is_finite() {
            out.push(UtilityViolation::NonFinite { index: i });
            continue;
        }
        if !(0.0..=1.0).contains(&u) {
            out.push(UtilityViolation::ScoreOutOfRange { index: i, score: u });
        }
    }
    for (i, w) in pts.windows(2).enumerate() {
        let ((x0, u0), (x1, u1)) = (w[0], w[1]);
        if x1.partial_cmp(&x0) != Some(std::cmp::Ordering::Greater) {
            out.push(UtilityViolation::NotIncreasing { index: i + 1 });
        }
        let ok = match direction {
            Direction::HigherBetter => u1 >= u0,
            Direction::LowerBetter => u1 <= u0,
        };
        if !ok {
            out.push(UtilityViolation::NotMonotone { index: i + 1, direction });
        }
    }
    let (first, last) = match direction {
        Direction::HigherBetter => (0.0, 1.0),
        Direction::LowerBetter => (1.0, 0.0),
    };
    let found_first = pts[0].1;
    let found_last = pts[pts.len() - 1].1;
    if found_first != first {
        out.push(UtilityViolation::Endpoint { which: Endpoint::First, expected: first, found: found_first });
    }
    if found_last != last {
        out.push(UtilityViolation::Endpoint { which: Endpoint::Last, expected: last, found: found_last });
    }
    out
}
