//! Variance formulas for proportion estimators in a two-stratum finite
//! population: the classical single-sample variance, the exact stratified
//! variance, the admissible nuisance set for the stratum-1 fraction, and the
//! nuisance-averaged variance in both closed form and literal summation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::population::{floor_slack, Allocation, CostModel, StratifiedDesign};

/// Absolute snap tolerance for the real nuisance bounds before ceil/floor.
///
/// When `theta * n_total` is mathematically an integer the floating-point
/// product can land a hair below it; without snapping, `ceil`/`floor` would
/// then move a bound by a whole grid step.
const BOUND_SNAP: f64 = 1e-6;

/// The admissible set of stratum-1 fractions compatible with an overall
/// fraction theta: an arithmetic grid of `l` values `m1 / n1_pop` for
/// `m1_lo <= m1 <= m1_hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NuisanceRange {
    /// Real lower bound for theta1.
    pub a_theta: f64,
    /// Real upper bound for theta1.
    pub b_theta: f64,
    /// Smallest admissible stratum-1 attribute count.
    pub m1_lo: u64,
    /// Largest admissible stratum-1 attribute count.
    pub m1_hi: u64,
    /// Cardinality of the grid, `m1_hi - m1_lo + 1`.
    pub l: u64,
}

/// Variance of the classical estimator: `theta(1-theta)/n * (npop-n)/(npop-1)`.
///
/// Zero at `theta` in {0,1} and for a census; maximal over theta at 1/2.
///
/// # Examples
/// ```
/// use strata_core::variance::classical_variance;
/// let v = classical_variance(100.0 / 618.0, 618, 30709281).unwrap();
/// assert!((v - 2.1946e-4).abs() < 5e-9);
/// assert_eq!(classical_variance(0.5, 100, 100).unwrap(), 0.0);
/// ```
pub fn classical_variance(theta: f64, n: u64, npop: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta) || !theta.is_finite() {
        return Err(Error::Domain(format!("theta must lie in [0,1], got {theta}")));
    }
    if n < 1 {
        return Err(Error::Domain("sample size must be at least 1".to_string()));
    }
    if n > npop {
        return Err(Error::Domain(format!(
            "sample size {n} exceeds population size {npop}"
        )));
    }
    if npop <= 1 || n == npop {
        return Ok(0.0);
    }
    let fpc = (npop - n) as f64 / (npop - 1) as f64;
    Ok(theta * (1.0 - theta) / n as f64 * fpc)
}

/// Computes the admissible stratum-1 range for an overall fraction.
///
/// The real bounds follow from `theta2 = (theta - w1*theta1)/w2` having to
/// stay inside [0,1]; the integer grid takes ceil/floor of the bounds after
/// snapping near-integer products.
///
/// # Examples
/// ```
/// use strata_core::population::StratifiedDesign;
/// use strata_core::variance::nuisance_range;
/// let d = StratifiedDesign::new(14526524, 16182757).unwrap();
/// let r = nuisance_range(0.1, &d);
/// assert_eq!(r.m1_lo, 0);
/// assert!((r.b_theta - 0.211402).abs() < 1e-6);
/// ```
pub fn nuisance_range(theta: f64, design: &StratifiedDesign) -> NuisanceRange {
    let n1f = design.n1_pop as f64;
    let n2f = design.n2_pop as f64;
    // m = theta * n_total, the implied total attribute count (real-valued).
    let m = theta * design.n_total as f64;
    let lo_real = (m - n2f).max(0.0);
    let hi_real = m.min(n1f);
    let m1_lo = (snap(lo_real).ceil().max(0.0) as u64).min(design.n1_pop);
    let m1_hi_f = snap(hi_real).floor();
    let m1_hi = if m1_hi_f < 0.0 { 0 } else { (m1_hi_f as u64).min(design.n1_pop) };
    // Float wobble can in principle invert the bounds by one step; collapse
    // to the nearest admissible single point in that case.
    let (m1_lo, m1_hi) = if m1_hi < m1_lo {
        let k = (m.clamp(0.0, n1f)).round() as u64;
        (k, k)
    } else {
        (m1_lo, m1_hi)
    };
    NuisanceRange {
        a_theta: lo_real / n1f,
        b_theta: (hi_real / n1f).min(1.0),
        m1_lo,
        m1_hi,
        l: m1_hi - m1_lo + 1,
    }
}

fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() <= BOUND_SNAP {
        r
    } else {
        v
    }
}

/// Finite population correction for one stratum; a one-unit stratum is a
/// census of itself.
fn fpc(n: u64, npop: u64) -> f64 {
    if npop <= 1 {
        0.0
    } else {
        (npop - n) as f64 / (npop - 1) as f64
    }
}

/// Exact variance of the weighted two-stratum estimator at known stratum
/// fractions: `sum_h w_h^2 theta_h(1-theta_h)/n_h * (N_h-n_h)/(N_h-1)`.
pub fn stratified_variance_exact(
    theta1: f64,
    theta2: f64,
    alloc: Allocation,
    design: &StratifiedDesign,
) -> f64 {
    let v1 = theta1 * (1.0 - theta1) / alloc.n1 as f64 * fpc(alloc.n1, design.n1_pop);
    let v2 = theta2 * (1.0 - theta2) / alloc.n2 as f64 * fpc(alloc.n2, design.n2_pop);
    design.w1 * design.w1 * v1 + design.w2 * design.w2 * v2
}

/// Derives the stratum-2 size bought by the budget left after `n1`.
pub(crate) fn n2_from_cost(n1: u64, cost: &CostModel) -> f64 {
    floor_slack((cost.budget - cost.c1 * n1 as f64) / cost.c2)
}

fn checked_alloc(n1: u64, design: &StratifiedDesign, cost: &CostModel) -> Result<Allocation> {
    if n1 < 1 || n1 > design.n1_pop {
        return Err(Error::Domain(format!(
            "n1 = {n1} outside [1, {}]",
            design.n1_pop
        )));
    }
    let n2f = n2_from_cost(n1, cost);
    if n2f < 1.0 {
        return Err(Error::Domain(format!(
            "budget leaves no stratum-2 sample for n1 = {n1}"
        )));
    }
    if n2f > design.n2_pop as f64 {
        return Err(Error::Domain(format!(
            "derived n2 = {n2f} exceeds stratum size {}",
            design.n2_pop
        )));
    }
    Ok(Allocation { n1, n2: n2f as u64 })
}

/// Nuisance-averaged variance of the stratified estimator at overall
/// fraction `theta`, with `n2` derived from the budget remainder.
///
/// Averages the exact stratified variance uniformly over every admissible
/// stratum-1 count. The bracket is quadratic in theta1, so the average is
/// evaluated in closed form from the first two power sums of the integer
/// grid; this is exact, not an approximation.
///
/// # Examples
/// ```
/// use strata_core::population::{CostModel, StratifiedDesign};
/// use strata_core::variance::averaged_variance;
/// let d = StratifiedDesign::new(40, 60).unwrap();
/// let c = CostModel::new(1.0, 1.0, 20.0).unwrap();
/// assert_eq!(averaged_variance(0.0, 8, &d, &c).unwrap(), 0.0);
/// assert_eq!(averaged_variance(1.0, 8, &d, &c).unwrap(), 0.0);
/// ```
pub fn averaged_variance(
    theta: f64,
    n1: u64,
    design: &StratifiedDesign,
    cost: &CostModel,
) -> Result<f64> {
    let alloc = checked_alloc(n1, design, cost)?;
    validate_theta(theta)?;
    Ok(averaged_variance_for_alloc(theta, alloc, design))
}

/// Literal term-by-term evaluation of the same average; the oracle for
/// [`averaged_variance`]. Intended for stratum sizes up to about 1e5.
pub fn averaged_variance_bruteforce(
    theta: f64,
    n1: u64,
    design: &StratifiedDesign,
    cost: &CostModel,
) -> Result<f64> {
    let alloc = checked_alloc(n1, design, cost)?;
    validate_theta(theta)?;
    Ok(averaged_variance_bruteforce_for_alloc(theta, alloc, design))
}

fn validate_theta(theta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&theta) || !theta.is_finite() {
        return Err(Error::Domain(format!("theta must lie in [0,1], got {theta}")));
    }
    Ok(())
}

/// Closed-form averaged variance for an explicit allocation.
///
/// Evaluates the grid average of the stratified variance in centered form
/// with exact integer moments, so it tracks literal summation to a few ulps
/// even where the average sits orders of magnitude below individual terms.
///
/// At theta in {0,1} the admissible set is a single point with both stratum
/// fractions at an extreme, so the variance is exactly zero; returning the
/// constant avoids the ~1e-17 float residue the general expression leaves.
pub fn averaged_variance_for_alloc(
    theta: f64,
    alloc: Allocation,
    design: &StratifiedDesign,
) -> f64 {
    if theta == 0.0 || theta == 1.0 {
        return 0.0;
    }
    let range = nuisance_range(theta, design);
    let n1p = design.n1_pop as u128;
    let n2p = design.n2_pop as u128;

    // Power sums of the integer grid, exact in 128-bit arithmetic.
    let (lo, hi) = (range.m1_lo as u128, range.m1_hi as u128);
    let count = hi - lo + 1;
    let s1 = (lo + hi) * count / 2;
    let s2 = sum_sq_to(hi) - if lo == 0 { 0 } else { sum_sq_to(lo - 1) };

    // Grid moments of theta1 = m1 / n1_pop, each from an exact nonnegative
    // integer numerator: mom1 = E[theta1*(1-theta1)], gvar = Var[theta1].
    let mom1 = (n1p * s1 - s2) as f64 / ((count * n1p * n1p) as f64);
    let gvar = (count * s2 - s1 * s1) as f64 / (((count * n1p) as f64).powi(2));

    // u = w2*E[theta2], ubar = w2*E[1-theta2]. Scaled by L*N both have exact
    // integer parts; the fused multiply-add keeps full relative precision in
    // the subtraction even when theta sits against a nuisance bound.
    let ln = (count * (n1p + n2p)) as f64;
    let u = theta.mul_add(ln, -(s1 as f64)) / ln;
    let ubar = (-theta).mul_add(ln, (n2p * count + s1) as f64) / ln;

    let t1 = design.w1 * design.w1 * fpc(alloc.n1, design.n1_pop) / alloc.n1 as f64;
    let t2 = fpc(alloc.n2, design.n2_pop) / alloc.n2 as f64;
    // E[w2^2*theta2*(1-theta2)] = u*ubar - w1^2*Var[theta1].
    let avg2 = u * ubar - design.w1 * design.w1 * gvar;

    (t1 * mom1 + t2 * avg2).max(0.0)
}

fn sum_sq_to(k: u128) -> u128 {
    k * (k + 1) * (2 * k + 1) / 6
}

/// Literal summation over the admissible grid for an explicit allocation.
pub fn averaged_variance_bruteforce_for_alloc(
    theta: f64,
    alloc: Allocation,
    design: &StratifiedDesign,
) -> f64 {
    if theta == 0.0 || theta == 1.0 {
        return 0.0;
    }
    let range = nuisance_range(theta, design);
    let mut total = 0.0;
    for m1 in range.m1_lo..=range.m1_hi {
        let theta1 = m1 as f64 / design.n1_pop as f64;
        let theta2 = (theta - design.w1 * theta1) / design.w2;
        total += stratified_variance_exact(theta1, theta2, alloc, design);
    }
    (total / range.l as f64).max(0.0)
}

/// Golden-section ratio for the refinement stage.
const INVPHI: f64 = 0.618_033_988_749_894_9;

/// Interval width at which the golden-section refinement stops.
const REFINE_TOL: f64 = 1e-6;

/// Finds the overall fraction maximizing the averaged variance for a given
/// stratum-1 size, with `n2` bought by the remaining budget (capped at the
/// stratum size).
///
/// Sweeps a uniform grid of `grid + 1` points on [0,1], then refines inside
/// the bracketing interval by golden section. Every probed value is tracked,
/// so the returned pair is exactly the best evaluation seen: the second
/// component always equals the averaged variance at the first.
pub fn worst_theta(
    n1: u64,
    design: &StratifiedDesign,
    cost: &CostModel,
    grid: u32,
) -> Result<(f64, f64)> {
    if grid == 0 {
        return Err(Error::Domain("grid must be positive".to_string()));
    }
    let alloc = capped_alloc(n1, design, cost)?;
    Ok(worst_theta_for_alloc(alloc, design, grid))
}

/// Like [`worst_theta`] but for an explicit allocation.
pub fn worst_theta_for_alloc(
    alloc: Allocation,
    design: &StratifiedDesign,
    grid: u32,
) -> (f64, f64) {
    let eval = |theta: f64| averaged_variance_for_alloc(theta, alloc, design);

    // Grid sweep; strict comparison keeps the lowest theta among exact ties.
    let mut best_t = 0.0;
    let mut best_v = 0.0;
    for j in 0..=grid {
        let t = j as f64 / grid as f64;
        let v = eval(t);
        if v > best_v {
            best_t = t;
            best_v = v;
        }
    }

    // Golden-section refinement on the bracketing interval.
    let step = 1.0 / grid as f64;
    let mut a = (best_t - step).max(0.0);
    let mut b = (best_t + step).min(1.0);
    while b - a > REFINE_TOL {
        let c = b - INVPHI * (b - a);
        let d = a + INVPHI * (b - a);
        let fc = eval(c);
        let fd = eval(d);
        if fc > best_v {
            best_t = c;
            best_v = fc;
        }
        if fd > best_v {
            best_t = d;
            best_v = fd;
        }
        if fc > fd {
            b = d;
        } else {
            a = c;
        }
    }
    (best_t, best_v)
}

/// Derives the allocation the budget buys for a candidate `n1`, capping the
/// stratum-2 size at its population.
pub(crate) fn capped_alloc(
    n1: u64,
    design: &StratifiedDesign,
    cost: &CostModel,
) -> Result<Allocation> {
    if n1 < 1 || n1 > design.n1_pop {
        return Err(Error::Domain(format!(
            "n1 = {n1} outside [1, {}]",
            design.n1_pop
        )));
    }
    let n2f = n2_from_cost(n1, cost);
    if n2f < 1.0 {
        return Err(Error::Domain(format!(
            "budget leaves no stratum-2 sample for n1 = {n1}"
        )));
    }
    Ok(Allocation {
        n1,
        n2: (n2f as u64).min(design.n2_pop),
    })
}
