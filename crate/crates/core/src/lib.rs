//! Cost-constrained sample allocation and estimation for a proportion in a
//! two-stratum finite population.
//!
//! The crate answers three questions for a population split into two strata
//! with different per-unit survey costs:
//!
//! * **Planning** ([`allocator`]): how many units to draw from each stratum
//!   under a total budget so that the worst-case variance of the weighted
//!   estimator, averaged over the unknown split of the attribute between the
//!   strata, is minimal; plus the budget-equivalent single-sample size for
//!   comparison.
//! * **Estimation** ([`estimator`]): the weighted point estimate for an
//!   observed outcome, plug-in variance estimates for both designs, and the
//!   percent variance reduction.
//! * **Verification** ([`variance`], [`hypergeom`], [`montecarlo`]): exact
//!   hypergeometric sampling laws, closed-form and brute-force routes to the
//!   nuisance-averaged variance, and a reproducible simulation harness that
//!   checks the analytic formulas empirically.
//!
//! Sampling within each stratum is without replacement, so counts follow
//! hypergeometric laws and every variance here carries the finite-population
//! structure explicitly.
//!
//! # Example
//!
//! ```
//! use strata_core::allocator::{classical_sample_size, optimal_allocation};
//! use strata_core::population::{CostModel, StratifiedDesign};
//!
//! let design = StratifiedDesign::new(14526524, 16182757).unwrap();
//! let cost = CostModel::new(3.0, 1.0, 1200.0).unwrap();
//! let n_c = classical_sample_size(&design, &cost).unwrap();
//! let plan = optimal_allocation(&design, &cost, 1000).unwrap();
//! assert_eq!(n_c, 618);
//! assert_eq!((plan.alloc.n1, plan.alloc.n2), (242, 474));
//! ```

pub mod allocator;
pub mod error;
pub mod estimator;
pub mod hypergeom;
pub mod montecarlo;
pub mod population;
pub mod variance;

pub use allocator::{AllocationResult, Method};
pub use error::{Error, Result};
pub use estimator::EstimateReport;
pub use montecarlo::{SimulationConfig, SimulationResult};
pub use population::{Allocation, CostModel, StratifiedDesign, SurveyOutcome, TrueState};
pub use variance::NuisanceRange;
