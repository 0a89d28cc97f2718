//! Simulation harness: draws stratified (and optionally classical) survey
//! outcomes from the exact hypergeometric laws and summarizes the empirical
//! moments next to the analytic variances.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypergeom::HyperParams;
use crate::population::{Allocation, StratifiedDesign, TrueState};
use crate::variance::{classical_variance, stratified_variance_exact};

/// A validated simulation request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub design: StratifiedDesign,
    pub alloc: Allocation,
    pub truth: TrueState,
    pub replicates: u64,
    pub seed: u64,
    /// When present, each replicate also draws a classical sample of this
    /// size from the pooled population.
    pub classical_n: Option<u64>,
}

impl SimulationConfig {
    /// Validates bounds and re-derives the truth from its integer counts so
    /// every stored field is mutually consistent with the design.
    pub fn new(
        design: StratifiedDesign,
        alloc: Allocation,
        truth: TrueState,
        replicates: u64,
        seed: u64,
        classical_n: Option<u64>,
    ) -> Result<Self> {
        if replicates < 100 {
            return Err(Error::invalid(
                "replicates",
                format!("need at least 100 for stable moments, got {replicates}"),
            ));
        }
        if alloc.n1 > design.n1_pop || alloc.n2 > design.n2_pop {
            return Err(Error::invalid(
                "alloc",
                format!(
                    "allocation ({}, {}) exceeds stratum sizes ({}, {})",
                    alloc.n1, alloc.n2, design.n1_pop, design.n2_pop
                ),
            ));
        }
        let truth = TrueState::from_counts(truth.m1, truth.m2, &design)?;
        if let Some(n_c) = classical_n {
            if n_c < 1 || n_c > design.n_total {
                return Err(Error::invalid(
                    "classical_n",
                    format!("must lie in [1, {}], got {n_c}", design.n_total),
                ));
            }
        }
        Ok(Self {
            design,
            alloc,
            truth,
            replicates,
            seed,
            classical_n,
        })
    }
}

/// Empirical and analytic moments from one simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationResult {
    /// Sample mean of the stratified estimator.
    pub mean_w: f64,
    /// Sample variance (denominator `replicates - 1`) of the stratified
    /// estimator.
    pub var_w: f64,
    pub mean_c: Option<f64>,
    pub var_c: Option<f64>,
    /// Monte Carlo standard error of `mean_w`: `sqrt(var_w / replicates)`.
    pub se_mean_w: f64,
    /// Exact design variance of the stratified estimator at the truth.
    pub analytic_var_w: f64,
    /// Exact design variance of the classical estimator, when simulated.
    pub analytic_var_c: Option<f64>,
}

/// Runs the simulation.
///
/// Each replicate owns a counter-based substream of the seeded generator, so
/// the draws are independent of scheduling and the result is bit-identical
/// across worker counts. Aggregation shifts by the first observation and
/// sums pairwise, which keeps constant samples at exactly zero variance.
pub fn run_simulation(cfg: &SimulationConfig) -> Result<SimulationResult> {
    let h1 = HyperParams::new(cfg.design.n1_pop, cfg.truth.m1, cfg.alloc.n1)?;
    let h2 = HyperParams::new(cfg.design.n2_pop, cfg.truth.m2, cfg.alloc.n2)?;
    let hc = match cfg.classical_n {
        Some(n_c) => Some(HyperParams::new(cfg.design.n_total, cfg.truth.m, n_c)?),
        None => None,
    };

    let (w1, w2) = (cfg.design.w1, cfg.design.w2);
    let (n1f, n2f) = (cfg.alloc.n1 as f64, cfg.alloc.n2 as f64);

    let draws: Vec<(f64, f64)> = (0..cfg.replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i);
            let xi1 = h1.sample(&mut rng);
            let xi2 = h2.sample(&mut rng);
            let t_w = w1 * xi1 as f64 / n1f + w2 * xi2 as f64 / n2f;
            let t_c = match &hc {
                Some(h) => {
                    let xi = h.sample(&mut rng);
                    xi as f64 / cfg.classical_n.unwrap() as f64
                }
                None => 0.0,
            };
            (t_w, t_c)
        })
        .collect();

    let w_vals: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let (mean_w, var_w) = mean_and_variance(&w_vals);
    let (mean_c, var_c) = if hc.is_some() {
        let c_vals: Vec<f64> = draws.iter().map(|d| d.1).collect();
        let (m, v) = mean_and_variance(&c_vals);
        (Some(m), Some(v))
    } else {
        (None, None)
    };

    let analytic_var_w =
        stratified_variance_exact(cfg.truth.theta1, cfg.truth.theta2, cfg.alloc, &cfg.design);
    let analytic_var_c = match cfg.classical_n {
        Some(n_c) => Some(classical_variance(cfg.truth.theta, n_c, cfg.design.n_total)?),
        None => None,
    };

    Ok(SimulationResult {
        mean_w,
        var_w,
        mean_c,
        var_c,
        se_mean_w: (var_w / cfg.replicates as f64).sqrt(),
        analytic_var_w,
        analytic_var_c,
    })
}

/// Mean and sample variance via a shift by the first value and pairwise
/// summation; exact zeros for constant inputs, stable for large counts.
fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let shift = values[0];
    let dev: Vec<f64> = values.iter().map(|v| v - shift).collect();
    let sum_d = pairwise_sum(&dev);
    let sq: Vec<f64> = dev.iter().map(|d| d * d).collect();
    let sum_sq = pairwise_sum(&sq);
    let mean = shift + sum_d / n;
    let var = ((sum_sq - sum_d * sum_d / n) / (n - 1.0)).max(0.0);
    (mean, var)
}

fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 32 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
