//! Log-majorization claims between quasi-means: the built-in catalog,
//! randomized verification, structured counterexample search, second-order
//! coefficients of the `A0`/`B_θ` family and region scans.

mod catalog;
mod coefficients;
mod scan;
mod search;
mod verify;

use std::fmt;

use serde::Serialize;

use crate::error::Result;
use crate::means::{MeanKind, MeanSpec};

pub use catalog::{builtin_catalog, find_claim};
pub use coefficients::{numeric_second_order, second_order_coefficient};
pub use scan::{
    boundary_agreement, region_scan, render_table34, table34_layout, theory_verdict, EmpiricalVerdict, RegionRow,
    TableCell, TableRow, TheoryVerdict,
};
pub use search::{counterexample_search, AbThetaPoint, Chart, FoundWitness, GridSpec, SearchStrategy, Witness};
pub use verify::{verify_claim, ClaimReport, Verdict, VerifyConfig};

/// Sampling box for `α`.
pub const ALPHA_BOX: [(f64, f64); 2] = [(0.05, 0.95), (1.05, 3.0)];
/// Sampling box for `p` and `q`.
pub const EXPONENT_BOX: (f64, f64) = (0.1, 4.0);
/// Log-λ₁ band treated as sharp equality.
pub const BOUNDARY_BAND: f64 = 1e-9;
/// Relative λ₁ gap needed to accept a counterexample.
pub const VIOL_BAND: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Assertion {
    HoldsForAllPairs,
    CounterexampleExists,
    /// Unsettled; scanned and reported, never asserted.
    Open,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Domain {
    /// All PSD pairs while both means allow it; dominated pairs otherwise.
    AllPsd,
    DominatedPsd,
    PositiveDefinite2x2,
}

/// Which exponent variable a side uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Exponent {
    P,
    Q,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Side {
    pub kind: MeanKind,
    pub exponent: Exponent,
}

impl Side {
    pub const fn p(kind: MeanKind) -> Self {
        Side { kind, exponent: Exponent::P }
    }

    pub const fn q(kind: MeanKind) -> Self {
        Side { kind, exponent: Exponent::Q }
    }

    pub const fn le() -> Self {
        Side { kind: MeanKind::LogEuclidean, exponent: Exponent::None }
    }

    pub fn spec(&self, alpha: f64, p: f64, q: f64) -> Result<MeanSpec> {
        let e = match self.exponent {
            Exponent::P => p,
            Exponent::Q => q,
            Exponent::None => 1.0,
        };
        MeanSpec::new(self.kind, alpha, e)
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exponent {
            Exponent::P => write!(f, "{}_p", self.kind),
            Exponent::Q => write!(f, "{}_q", self.kind),
            Exponent::None => write!(f, "{}", self.kind),
        }
    }
}

/// `α` interval, never containing 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlphaRange {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl AlphaRange {
    pub const BELOW_ONE: AlphaRange = AlphaRange { lo: 0.0, hi: 1.0, lo_closed: false, hi_closed: false };
    pub const ABOVE_ONE: AlphaRange = AlphaRange { lo: 1.0, hi: f64::INFINITY, lo_closed: false, hi_closed: false };
    pub const ANY: AlphaRange = AlphaRange { lo: 0.0, hi: f64::INFINITY, lo_closed: false, hi_closed: false };

    pub const fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Self {
        AlphaRange { lo, hi, lo_closed, hi_closed }
    }

    pub fn contains(&self, a: f64) -> bool {
        let lo_ok = if self.lo_closed { a >= self.lo } else { a > self.lo };
        let hi_ok = if self.hi_closed { a <= self.hi } else { a < self.hi };
        a != 1.0 && lo_ok && hi_ok
    }

    /// Pieces of the sampling box inside this range.
    pub fn sampling_intervals(&self) -> Vec<(f64, f64)> {
        ALPHA_BOX
            .iter()
            .filter_map(|&(l, h)| {
                let lo = l.max(self.lo);
                let hi = h.min(self.hi);
                (lo < hi || (lo == hi && self.contains(lo))).then_some((lo, hi))
            })
            .collect()
    }
}

/// A machine-checkable log-majorization statement `lhs ≺_log rhs`.
#[derive(Clone, Debug, Serialize)]
pub struct ClaimRecord {
    pub id: &'static str,
    pub lhs: Side,
    pub rhs: Side,
    pub alpha: AlphaRange,
    /// Human-readable parameter condition.
    pub condition: &'static str,
    #[serde(skip)]
    pub predicate: fn(f64, f64, f64) -> bool,
    pub assertion: Assertion,
    pub domain: Domain,
}

impl ClaimRecord {
    /// Whether the claim speaks about `(α, p, q)`.
    pub fn applies(&self, alpha: f64, p: f64, q: f64) -> bool {
        self.alpha.contains(alpha) && (self.predicate)(alpha, p, q)
    }

    pub fn specs(&self, alpha: f64, p: f64, q: f64) -> Result<(MeanSpec, MeanSpec)> {
        Ok((self.lhs.spec(alpha, p, q)?, self.rhs.spec(alpha, p, q)?))
    }

    pub fn statement(&self) -> String {
        let rel = match self.assertion {
            Assertion::CounterexampleExists => "not always ≺_log",
            _ => "≺_log",
        };
        format!("{} {} {} when {}", self.lhs, rel, self.rhs, self.condition)
    }

    /// Same claim with a different condition; handy for mutation tests.
    pub fn with_predicate(&self, condition: &'static str, predicate: fn(f64, f64, f64) -> bool) -> Self {
        ClaimRecord { condition, predicate, ..self.clone() }
    }
}
