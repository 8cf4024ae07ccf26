use std::fmt;

use num_traits::{Signed, Zero};

use super::rational::Rational;
use super::ModelError;

/// Progress rate of a phase as a function of the processors it holds.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Speedup {
    /// Rate 1 for every allocation, including none.
    Sequential,
    /// Rate equal to the allocation.
    FullyParallel,
    /// Linear interpolation between `(rho, rate)` breakpoints, constant past
    /// the last one.
    PiecewiseLinear(Vec<(Rational, Rational)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhaseKind {
    Seq,
    Par,
    Pwl,
}

impl PhaseKind {
    pub fn tag(self) -> &'static str {
        match self {
            PhaseKind::Seq => "seq",
            PhaseKind::Par => "par",
            PhaseKind::Pwl => "pwl",
        }
    }
}

impl fmt::Display for PhaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A breakpoint-level defect of a piecewise-linear speed-up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpeedupIssue {
    NoBreakpoints,
    FirstNotAtZero,
    NegativeValue,
    ArgumentsNotIncreasing,
    Decreasing { at: usize },
    Superlinear { at: usize },
    IdenticallyZero,
}

impl fmt::Display for SpeedupIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpeedupIssue::NoBreakpoints => write!(f, "no breakpoints"),
            SpeedupIssue::FirstNotAtZero => write!(f, "first breakpoint is not at rho = 0"),
            SpeedupIssue::NegativeValue => write!(f, "negative speed-up value"),
            SpeedupIssue::ArgumentsNotIncreasing => {
                write!(f, "breakpoint arguments are not strictly increasing")
            }
            SpeedupIssue::Decreasing { at } => {
                write!(f, "monotonicity violation at breakpoint {at}")
            }
            SpeedupIssue::Superlinear { at } => {
                write!(f, "sublinearity violation at breakpoint {at}")
            }
            SpeedupIssue::IdenticallyZero => write!(f, "speed-up is identically zero"),
        }
    }
}

impl Speedup {
    pub fn kind(&self) -> PhaseKind {
        match self {
            Speedup::Sequential => PhaseKind::Seq,
            Speedup::FullyParallel => PhaseKind::Par,
            Speedup::PiecewiseLinear(_) => PhaseKind::Pwl,
        }
    }

    pub fn is_sequential(&self) -> bool {
        matches!(self, Speedup::Sequential)
    }

    pub fn is_fully_parallel(&self) -> bool {
        matches!(self, Speedup::FullyParallel)
    }

    pub fn evaluate(&self, rho: &Rational) -> Result<Rational, ModelError> {
        if rho.is_negative() {
            return Err(ModelError::Domain(format!(
                "speed-up evaluated at negative allocation {rho}"
            )));
        }
        Ok(self.rate(rho))
    }

    /// Evaluation without the domain check; `rho` must be non-negative.
    pub fn rate(&self, rho: &Rational) -> Rational {
        match self {
            Speedup::Sequential => Rational::from_integer(1.into()),
            Speedup::FullyParallel => rho.clone(),
            Speedup::PiecewiseLinear(points) => interpolate(points, rho),
        }
    }

    /// Breakpoint checks: starts at rho = 0, non-decreasing, and
    /// `rate(rho) / rho` non-increasing across positive breakpoints.
    pub fn issues(&self) -> Vec<SpeedupIssue> {
        let Speedup::PiecewiseLinear(points) = self else {
            return Vec::new();
        };
        let mut issues = Vec::new();
        let Some((first_rho, _)) = points.first() else {
            issues.push(SpeedupIssue::NoBreakpoints);
            return issues;
        };
        if !first_rho.is_zero() {
            issues.push(SpeedupIssue::FirstNotAtZero);
        }
        if points.iter().any(|(r, v)| r.is_negative() || v.is_negative()) {
            issues.push(SpeedupIssue::NegativeValue);
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            issues.push(SpeedupIssue::ArgumentsNotIncreasing);
            return issues;
        }
        for (i, w) in points.windows(2).enumerate() {
            if w[1].1 < w[0].1 {
                issues.push(SpeedupIssue::Decreasing { at: i + 1 });
            }
        }
        let positive: Vec<_> = points.iter().enumerate().filter(|(_, (r, _))| r.is_positive()).collect();
        for w in positive.windows(2) {
            let (_, (r0, v0)) = w[0];
            let (i1, (r1, v1)) = w[1];
            // v1 / r1 > v0 / r0
            if v1 * r0 > v0 * r1 {
                issues.push(SpeedupIssue::Superlinear { at: i1 });
            }
        }
        if points.last().is_some_and(|(_, v)| v.is_zero()) {
            issues.push(SpeedupIssue::IdenticallyZero);
        }
        issues
    }
}

fn interpolate(points: &[(Rational, Rational)], rho: &Rational) -> Rational {
    let idx = points.partition_point(|(r, _)| r <= rho);
    if idx == 0 {
        // below the first breakpoint; only reachable on unvalidated input
        return points.first().map(|p| p.1.clone()).unwrap_or_default();
    }
    if idx == points.len() {
        return points[idx - 1].1.clone();
    }
    let (r0, v0) = &points[idx - 1];
    let (r1, v1) = &points[idx];
    v0 + (v1 - v0) * (rho - r0) / (r1 - r0)
}
