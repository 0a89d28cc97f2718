//! Budget-constrained sample allocation: the budget-equivalent classical
//! sample size, a closed-form allocation branch kept for diagnostics, and the
//! authoritative numerical minimax search over integer allocations.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::population::{floor_slack, Allocation, CostModel, StratifiedDesign};
use crate::variance::{averaged_variance_for_alloc, capped_alloc, worst_theta_for_alloc};

/// Stratum-1 weight below which the closed-form branch applies.
pub const W1_STAR: f64 = 0.46;

/// Relative indifference band for the minimax objective.
///
/// The worst-case variance surface is extremely flat near its minimum: for
/// desk-scale budgets, neighboring n1 values differ by parts in 1e4 while the
/// model inputs (population counts, unit costs) carry far less precision than
/// that. Candidates within this band of the best value are treated as
/// practically indistinguishable and the tie is broken toward smaller n1,
/// which favors the cheaper-to-survey stratum mix among equals.
const REL_TIE: f64 = 1e-4;

/// How the allocation was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    NumericalMinimax,
}

/// Raw closed-form allocation output together with its usability flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedForm {
    /// Literal value of the closed-form expression, before any rounding.
    pub value: f64,
    /// Whether the value is finite, at least 1, within the stratum, and
    /// affordable. Callers must fall back to the numerical search when false.
    pub valid: bool,
}

/// Result of the minimax allocation search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AllocationResult {
    pub alloc: Allocation,
    /// Overall fraction at which the averaged variance of the returned
    /// allocation is maximal.
    pub worst_theta: f64,
    /// The maximal averaged variance itself.
    pub worst_variance: f64,
    pub method: Method,
    /// Raw closed-form value, recorded when the branch condition w1 < w1_star
    /// holds; diagnostic only, the numerical search remains authoritative.
    pub closed_form_value: Option<f64>,
    /// Branch threshold for the closed form.
    pub w1_star: f64,
}

/// Budget-equivalent single-sample size: the number of equally weighted
/// draws the same budget buys when each unit costs the weight-blended
/// per-unit price.
///
/// The stratum weights enter at two-decimal precision: planning budgets are
/// quoted against percentage weights, and the blended unit price uses those
/// quoted values rather than the full-precision population ratios.
///
/// # Examples
/// ```
/// use strata_core::allocator::classical_sample_size;
/// use strata_core::population::{CostModel, StratifiedDesign};
/// let d = StratifiedDesign::new(14526524, 16182757).unwrap();
/// let c = CostModel::new(3.0, 1.0, 1200.0).unwrap();
/// assert_eq!(classical_sample_size(&d, &c).unwrap(), 618);
/// ```
pub fn classical_sample_size(design: &StratifiedDesign, cost: &CostModel) -> Result<u64> {
    let w1 = (design.w1 * 100.0).round() / 100.0;
    let w2 = 1.0 - w1;
    let unit = w1 * cost.c1 + w2 * cost.c2;
    let n = floor_slack(cost.budget / unit);
    if n < 1.0 {
        return Err(Error::Budget(format!(
            "budget {} buys no classical sample at blended unit cost {unit}",
            cost.budget
        )));
    }
    Ok((n as u64).min(design.n_total))
}

/// Evaluates the closed-form stratum-1 size for designs with w1 below the
/// branch threshold.
///
/// The expression is evaluated literally:
/// `C*sqrt(N2-1)*w1 / (c1*sqrt(N2-1)*w1 - sqrt(c1*c2*w2*(N*(w1^2-3*w1+1.5)-w1)))`.
/// Whenever the denominator is positive it is smaller than the first term
/// alone, so the quotient exceeds C/c1 and cannot be paid for alongside even
/// one stratum-2 unit; the validity flag is therefore expected to be false
/// for every affordable configuration, and the numerical search is the
/// authoritative method throughout.
pub fn closed_form_n1(design: &StratifiedDesign, cost: &CostModel) -> Result<ClosedForm> {
    if design.w1 >= W1_STAR {
        return Err(Error::ClosedFormBranch {
            w1: design.w1,
            w1_star: W1_STAR,
        });
    }
    Ok(closed_form_raw(design, cost))
}

fn closed_form_raw(design: &StratifiedDesign, cost: &CostModel) -> ClosedForm {
    let (w1, w2) = (design.w1, design.w2);
    let npop = design.n_total as f64;
    let root = ((design.n2_pop - 1) as f64).sqrt();
    let radicand = cost.c1 * cost.c2 * w2 * (npop * (w1 * w1 - 3.0 * w1 + 1.5) - w1);
    let denom = cost.c1 * root * w1 - radicand.sqrt();
    let value = cost.budget * root * w1 / denom;
    let valid = value.is_finite()
        && value >= 1.0
        && value.floor() <= design.n1_pop as f64
        && cost.affords(value.floor() as u64, 1);
    ClosedForm { value, valid }
}

/// Finds the integer allocation minimizing the worst-case averaged variance
/// under the budget.
///
/// Only budget-tight candidates can be optimal: at a fixed stratum-2 size the
/// variance strictly decreases in n1, so the scan keeps the largest n1 for
/// each distinct derived n2 and evaluates that frontier exhaustively. The
/// frontier is searched in parallel; the reduction is a deterministic
/// lexicographic minimum over (worst_variance, n1), followed by the
/// indifference-band tie-break toward smaller n1.
///
/// # Examples
/// ```
/// use strata_core::allocator::optimal_allocation;
/// use strata_core::population::{CostModel, StratifiedDesign};
/// let d = StratifiedDesign::new(400, 600).unwrap();
/// let c = CostModel::new(2.0, 1.0, 60.0).unwrap();
/// let r = optimal_allocation(&d, &c, 200).unwrap();
/// assert_eq!((r.alloc.n1, r.alloc.n2), (14, 32));
/// ```
pub fn optimal_allocation(
    design: &StratifiedDesign,
    cost: &CostModel,
    grid: u32,
) -> Result<AllocationResult> {
    if grid == 0 {
        return Err(Error::Domain("grid must be positive".to_string()));
    }
    let n1_max_f = floor_slack((cost.budget - cost.c2) / cost.c1);
    if n1_max_f < 1.0 {
        return Err(Error::Budget(format!(
            "budget {} cannot pay for one unit in each stratum",
            cost.budget
        )));
    }
    let n1_max = (n1_max_f as u64).min(design.n1_pop);

    // Dominance frontier: scanning n1 downward, the first candidate seen for
    // each distinct n2 is the largest n1 that buys it.
    let mut frontier: Vec<Allocation> = Vec::new();
    let mut last_n2 = 0u64;
    for n1 in (1..=n1_max).rev() {
        let alloc = capped_alloc(n1, design, cost)?;
        if frontier.is_empty() || alloc.n2 != last_n2 {
            frontier.push(alloc);
            last_n2 = alloc.n2;
        }
    }

    let evals: Vec<(f64, Allocation, f64)> = frontier
        .par_iter()
        .map(|&alloc| {
            let (theta, v) = worst_theta_for_alloc(alloc, design, grid);
            (v, alloc, theta)
        })
        .collect();

    // Deterministic reduction: strict lexicographic minimum first, then the
    // indifference band picks the smallest n1 among near-equal candidates.
    let mut best = evals[0];
    for &e in &evals[1..] {
        if e.0 < best.0 || (e.0 == best.0 && e.1.n1 < best.1.n1) {
            best = e;
        }
    }
    let band = best.0 * (1.0 + REL_TIE);
    let mut winner = best;
    for &e in &evals {
        if e.0 <= band && e.1.n1 < winner.1.n1 {
            winner = e;
        }
    }

    let closed_form_value = if design.w1 < W1_STAR {
        Some(closed_form_raw(design, cost).value)
    } else {
        None
    };

    Ok(AllocationResult {
        alloc: winner.1,
        worst_theta: winner.2,
        worst_variance: winner.0,
        method: Method::NumericalMinimax,
        closed_form_value,
        w1_star: W1_STAR,
    })
}

/// Recomputes the averaged variance of a result's allocation at its reported
/// worst point; exposed so callers can audit the result invariant.
pub fn audit_worst_variance(result: &AllocationResult, design: &StratifiedDesign) -> f64 {
    averaged_variance_for_alloc(result.worst_theta, result.alloc, design)
}
