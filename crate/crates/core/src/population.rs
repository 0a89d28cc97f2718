//! Core domain types: stratified designs, cost models, allocations, true
//! population states, and observed survey outcomes.

use serde::Serialize;

use crate::error::{Error, Result};

/// Relative slack applied before cost-feasibility comparisons so that exact
/// budget exhaustion survives floating-point rounding of `c1*n1 + c2*n2`.
pub(crate) const COST_SLACK: f64 = 1e-9;

/// Floor with a small relative upward slack.
///
/// Quotients that are mathematically integers can land just below the integer
/// after floating-point division (for example when every cost is scaled by a
/// common factor); plain flooring would then lose a whole unit.
pub(crate) fn floor_slack(q: f64) -> f64 {
    (q + COST_SLACK * q.abs().max(1.0)).floor()
}

/// A population divided into two disjoint strata.
///
/// Weights are carried at full floating-point precision from the integer
/// stratum sizes.
///
/// # Examples
/// ```
/// use strata_core::population::StratifiedDesign;
/// let d = StratifiedDesign::new(100, 300).unwrap();
/// assert_eq!(d.n_total, 400);
/// assert_eq!(d.w1, 0.25);
/// assert_eq!(d.w2, 0.75);
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StratifiedDesign {
    /// Units in stratum 1.
    pub n1_pop: u64,
    /// Units in stratum 2.
    pub n2_pop: u64,
    /// Total population size.
    pub n_total: u64,
    /// Stratum-1 weight, `n1_pop / n_total`.
    pub w1: f64,
    /// Stratum-2 weight, `n2_pop / n_total`.
    pub w2: f64,
}

/// Largest supported stratum size.
///
/// Below this bound every integer power sum over a nuisance grid fits in
/// `u128` and every count product used by the variance formulas stays below
/// `2^53`, so conversions to `f64` are exact.
pub const MAX_STRATUM: u64 = 50_000_000;

impl StratifiedDesign {
    /// Validates the stratum sizes and derives the total and weights.
    ///
    /// Each stratum must hold between 1 and [`MAX_STRATUM`] units.
    pub fn new(n1_pop: u64, n2_pop: u64) -> Result<Self> {
        if n1_pop == 0 {
            return Err(Error::invalid("n1_pop", "stratum 1 must contain at least one unit"));
        }
        if n2_pop == 0 {
            return Err(Error::invalid("n2_pop", "stratum 2 must contain at least one unit"));
        }
        if n1_pop > MAX_STRATUM {
            return Err(Error::invalid("n1_pop", format!("stratum 1 exceeds {MAX_STRATUM} units")));
        }
        if n2_pop > MAX_STRATUM {
            return Err(Error::invalid("n2_pop", format!("stratum 2 exceeds {MAX_STRATUM} units")));
        }
        let n_total = n1_pop
            .checked_add(n2_pop)
            .ok_or_else(|| Error::invalid("n1_pop", "population total overflows u64"))?;
        let w1 = n1_pop as f64 / n_total as f64;
        Ok(Self {
            n1_pop,
            n2_pop,
            n_total,
            w1,
            w2: n2_pop as f64 / n_total as f64,
        })
    }
}

/// Per-unit sampling costs and the total budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostModel {
    /// Cost of sampling one unit from stratum 1.
    pub c1: f64,
    /// Cost of sampling one unit from stratum 2.
    pub c2: f64,
    /// Total budget.
    pub budget: f64,
}

impl CostModel {
    /// Validates positivity and that one unit per stratum is affordable.
    pub fn new(c1: f64, c2: f64, budget: f64) -> Result<Self> {
        if !(c1.is_finite() && c1 > 0.0) {
            return Err(Error::invalid("c1", format!("cost must be finite and positive, got {c1}")));
        }
        if !(c2.is_finite() && c2 > 0.0) {
            return Err(Error::invalid("c2", format!("cost must be finite and positive, got {c2}")));
        }
        if !budget.is_finite() || budget <= 0.0 {
            return Err(Error::invalid("budget", format!("budget must be finite and positive, got {budget}")));
        }
        if c1 + c2 > budget * (1.0 + COST_SLACK) {
            return Err(Error::Budget(format!(
                "budget {budget} cannot afford one unit per stratum (c1 + c2 = {})",
                c1 + c2
            )));
        }
        Ok(Self { c1, c2, budget })
    }

    /// Cost of a concrete allocation.
    pub fn cost_of(&self, n1: u64, n2: u64) -> f64 {
        self.c1 * n1 as f64 + self.c2 * n2 as f64
    }

    /// Whether an allocation fits the budget, with relative slack for exact
    /// exhaustion.
    pub fn affords(&self, n1: u64, n2: u64) -> bool {
        self.cost_of(n1, n2) <= self.budget * (1.0 + COST_SLACK)
    }
}

/// Stratum sample sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Allocation {
    /// Sample size in stratum 1.
    pub n1: u64,
    /// Sample size in stratum 2.
    pub n2: u64,
}

impl Allocation {
    /// Builds an allocation; sizes of zero are rejected.
    pub fn new(n1: u64, n2: u64) -> Result<Self> {
        if n1 == 0 {
            return Err(Error::invalid("n1", "sample size must be at least 1"));
        }
        if n2 == 0 {
            return Err(Error::invalid("n2", "sample size must be at least 1"));
        }
        Ok(Self { n1, n2 })
    }
}

/// Result of checking an allocation against a design and cost model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationCheck {
    /// True when every constraint holds.
    pub feasible: bool,
    /// One entry per violated constraint; empty when feasible.
    pub violations: Vec<String>,
}

/// Checks stratum bounds and cost feasibility, listing every violation.
///
/// # Examples
/// ```
/// use strata_core::population::{validate_allocation, Allocation, CostModel, StratifiedDesign};
/// let design = StratifiedDesign::new(14526524, 16182757).unwrap();
/// let cost = CostModel::new(3.0, 1.0, 1200.0).unwrap();
/// let check = validate_allocation(Allocation { n1: 242, n2: 474 }, &design, &cost);
/// assert!(check.feasible);
/// ```
pub fn validate_allocation(
    alloc: Allocation,
    design: &StratifiedDesign,
    cost: &CostModel,
) -> AllocationCheck {
    let mut violations = Vec::new();
    if alloc.n1 < 1 {
        violations.push("n1 below minimum 1".to_string());
    }
    if alloc.n2 < 1 {
        violations.push("n2 below minimum 1".to_string());
    }
    if alloc.n1 > design.n1_pop {
        violations.push(format!("n1 = {} exceeds stratum size {}", alloc.n1, design.n1_pop));
    }
    if alloc.n2 > design.n2_pop {
        violations.push(format!("n2 = {} exceeds stratum size {}", alloc.n2, design.n2_pop));
    }
    if !cost.affords(alloc.n1, alloc.n2) {
        violations.push(format!(
            "cost {} exceeds budget {}",
            cost.cost_of(alloc.n1, alloc.n2),
            cost.budget
        ));
    }
    AllocationCheck {
        feasible: violations.is_empty(),
        violations,
    }
}

/// The true (usually unknown) composition of the population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrueState {
    /// Attribute holders in stratum 1.
    pub m1: u64,
    /// Attribute holders in stratum 2.
    pub m2: u64,
    /// Total attribute holders, `m1 + m2`.
    pub m: u64,
    /// Stratum-1 fraction `m1 / n1_pop`.
    pub theta1: f64,
    /// Stratum-2 fraction `m2 / n2_pop`.
    pub theta2: f64,
    /// Overall fraction `m / n_total`; equals `w1*theta1 + w2*theta2`.
    pub theta: f64,
}

impl TrueState {
    /// Builds the state from integer attribute counts.
    pub fn from_counts(m1: u64, m2: u64, design: &StratifiedDesign) -> Result<Self> {
        if m1 > design.n1_pop {
            return Err(Error::invalid(
                "m1",
                format!("{m1} attribute holders exceed stratum size {}", design.n1_pop),
            ));
        }
        if m2 > design.n2_pop {
            return Err(Error::invalid(
                "m2",
                format!("{m2} attribute holders exceed stratum size {}", design.n2_pop),
            ));
        }
        Ok(Self {
            m1,
            m2,
            m: m1 + m2,
            theta1: m1 as f64 / design.n1_pop as f64,
            theta2: m2 as f64 / design.n2_pop as f64,
            theta: (m1 + m2) as f64 / design.n_total as f64,
        })
    }

    /// Builds the state from real fractions, snapping each stratum to the
    /// nearest integer attribute count. The snapped fractions are the ones
    /// reported.
    pub fn from_fractions(theta1: f64, theta2: f64, design: &StratifiedDesign) -> Result<Self> {
        for (name, v) in [("theta1", theta1), ("theta2", theta2)] {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::invalid(name, format!("fraction must lie in [0,1], got {v}")));
            }
        }
        let m1 = (theta1 * design.n1_pop as f64).round() as u64;
        let m2 = (theta2 * design.n2_pop as f64).round() as u64;
        Self::from_counts(m1.min(design.n1_pop), m2.min(design.n2_pop), design)
    }
}

/// Observed survey counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SurveyOutcome {
    /// Positive answers in the stratum-1 sample.
    pub xi1: u64,
    /// Positive answers in the stratum-2 sample.
    pub xi2: u64,
    /// Positive answers in a classical (unstratified) sample, when one was
    /// also taken.
    pub xi: Option<u64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_oversized_strata() {
        assert!(StratifiedDesign::new(MAX_STRATUM + 1, 100).is_err());
        assert!(StratifiedDesign::new(100, MAX_STRATUM + 1).is_err());
        assert!(StratifiedDesign::new(MAX_STRATUM, 1).is_ok());
    }

    #[test]
    fn design_derives_weights_at_full_precision() {
        let d = StratifiedDesign::new(14526524, 16182757).unwrap();
        assert_eq!(d.n_total, 30709281);
        assert!((d.w1 - 0.4730337).abs() < 5e-8);
        assert!((d.w2 - 0.5269663).abs() < 5e-8);
        assert!((d.w1 + d.w2 - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn design_symmetric_and_quarter_cases() {
        let d = StratifiedDesign::new(1, 1).unwrap();
        assert_eq!((d.n_total, d.w1, d.w2), (2, 0.5, 0.5));
        let d = StratifiedDesign::new(100, 300).unwrap();
        assert_eq!((d.w1, d.w2), (0.25, 0.75));
    }

    #[test]
    fn design_rejects_empty_stratum() {
        assert!(matches!(
            StratifiedDesign::new(0, 5),
            Err(Error::InvalidParameter { field: "n1_pop", .. })
        ));
        assert!(matches!(
            StratifiedDesign::new(5, 0),
            Err(Error::InvalidParameter { field: "n2_pop", .. })
        ));
    }

    #[test]
    fn cost_model_requires_one_unit_per_stratum() {
        assert!(CostModel::new(3.0, 1.0, 1200.0).is_ok());
        assert!(matches!(CostModel::new(3.0, 1.0, 3.5), Err(Error::Budget(_))));
        assert!(CostModel::new(0.0, 1.0, 10.0).is_err());
        assert!(CostModel::new(1.0, -2.0, 10.0).is_err());
        assert!(CostModel::new(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn reference_allocations_are_feasible_and_exact() {
        let design = StratifiedDesign::new(14526524, 16182757).unwrap();
        let cost = CostModel::new(3.0, 1.0, 1200.0).unwrap();
        let check = validate_allocation(Allocation { n1: 242, n2: 474 }, &design, &cost);
        assert!(check.feasible, "{:?}", check.violations);
        assert_eq!(cost.cost_of(242, 474), 1200.0);

        let cost = CostModel::new(1.0, 3.0, 1200.0).unwrap();
        let check = validate_allocation(Allocation { n1: 405, n2: 265 }, &design, &cost);
        assert!(check.feasible, "{:?}", check.violations);
        assert_eq!(cost.cost_of(405, 265), 1200.0);
    }

    #[test]
    fn validation_lists_every_violation() {
        let design = StratifiedDesign::new(10, 10).unwrap();
        let cost = CostModel::new(1.0, 1.0, 5.0).unwrap();
        let check = validate_allocation(Allocation { n1: 0, n2: 100 }, &design, &cost);
        assert!(!check.feasible);
        assert!(check.violations.iter().any(|v| v.contains("n1 below minimum 1")));
        assert!(check.violations.iter().any(|v| v.contains("exceeds stratum size")));
        assert!(check.violations.iter().any(|v| v.contains("exceeds budget")));
    }

    #[test]
    fn true_state_satisfies_weighted_identity() {
        let design = StratifiedDesign::new(14526524, 16182757).unwrap();
        let s = TrueState::from_counts(600276, 4370104, &design).unwrap();
        let recombined = design.w1 * s.theta1 + design.w2 * s.theta2;
        assert!((s.theta - recombined).abs() <= 1e-12);
        assert_eq!(s.m, 4970380);
    }

    #[test]
    fn true_state_snaps_fractions_to_counts() {
        let design = StratifiedDesign::new(1000, 3000).unwrap();
        let s = TrueState::from_fractions(0.1004, 0.5, &design).unwrap();
        assert_eq!(s.m1, 100);
        assert_eq!(s.m2, 1500);
        assert!(TrueState::from_fractions(-0.1, 0.5, &design).is_err());
        assert!(TrueState::from_fractions(0.5, 1.2, &design).is_err());
    }

    #[test]
    fn floor_slack_recovers_exact_integers() {
        assert_eq!(floor_slack(618.0000000001), 618.0);
        assert_eq!(floor_slack(617.9999999999), 618.0);
        assert_eq!(floor_slack(617.5), 617.0);
        assert_eq!(floor_slack((1200.0 - 3.0 * 242.0) / 1.0), 474.0);
    }
}
