//! Two-scale estimation of the roughness index from one discretely observed
//! path, plus the Monte Carlo harness that measures bias and RMSE across
//! replicas.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{OreyError, Result};
use crate::gaussmodel::ProcessSpec;
use crate::partition::Partition;
use crate::quadvar::raw_qv_series;
use crate::sampler::{Path, PathSampler, SeedPolicy};
use crate::scalar::{SampleScalar, Scalar};

/// Result of one two-scale estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EstimateResult<F> {
    pub gamma_hat: F,
    /// Raw quadratic variation on the coarse partition.
    pub v_coarse: F,
    /// Raw quadratic variation on the fine partition.
    pub v_fine: F,
    /// Smallest fine step.
    pub fine_min_step: F,
    /// Largest coarse step.
    pub coarse_max_step: F,
    /// `ln(fine_min_step / coarse_max_step)`, always negative.
    pub log_scale: F,
}

/// The scaling-law inversion behind the estimator:
/// `gamma_hat = -1/2 + ln(v_fine / v_coarse) / (2 ln(p_fine / m_coarse))`.
pub fn two_scale_gamma<F: Scalar>(
    v_coarse: F,
    v_fine: F,
    coarse_max_step: F,
    fine_min_step: F,
) -> Result<EstimateResult<F>> {
    if !(v_coarse > F::zero()) || !(v_fine > F::zero()) {
        return Err(OreyError::DegeneratePath(format!(
            "raw variations must be positive, got coarse {v_coarse}, fine {v_fine}"
        )));
    }
    if fine_min_step == coarse_max_step {
        return Err(OreyError::ScaleSeparation(fine_min_step.as_f64()));
    }
    let log_scale = (fine_min_step / coarse_max_step).ln();
    if !(log_scale < F::zero()) {
        return Err(OreyError::Domain(format!(
            "fine mesh must be finer than the coarse max step (log scale {log_scale})"
        )));
    }
    let gamma_hat = (v_fine / v_coarse).ln() / (F::of(2.0) * log_scale) - F::of(0.5);
    Ok(EstimateResult {
        gamma_hat,
        v_coarse,
        v_fine,
        fine_min_step,
        coarse_max_step,
        log_scale,
    })
}

/// Estimate the roughness index of `path` from its raw second-order
/// variations on a nested pair `coarse` inside `fine`.
pub fn orey_estimate<F: Scalar>(
    path: &Path<F>,
    coarse: &Partition<F>,
    fine: &Partition<F>,
) -> Result<EstimateResult<F>> {
    let fine_idx = fine.indices_in(path.partition())?;
    coarse.indices_in(fine)?;
    if coarse.times().len() >= fine.times().len() {
        return Err(OreyError::NotNested(
            "coarse partition must be a proper subset of the fine one".into(),
        ));
    }
    let coarse_idx = coarse.indices_in(path.partition())?;
    let fine_vals: Vec<F> = fine_idx.iter().map(|&i| path.values()[i]).collect();
    let coarse_vals: Vec<F> = coarse_idx.iter().map(|&i| path.values()[i]).collect();
    let v_fine = raw_qv_series(fine.times(), &fine_vals)?;
    let v_coarse = raw_qv_series(coarse.times(), &coarse_vals)?;
    two_scale_gamma(
        v_coarse,
        v_fine,
        coarse.mesh_stats().max_step,
        fine.mesh_stats().min_step,
    )
}

/// One replica's estimate inside a Monte Carlo study.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct McRecord<F> {
    pub replica: u64,
    pub gamma_hat: F,
    pub v_coarse: F,
    pub v_fine: F,
}

/// A replica whose estimate failed (recorded, never imputed).
#[derive(Debug, Clone, Serialize)]
pub struct McFailure {
    pub replica: u64,
    pub error: String,
}

/// Aggregated Monte Carlo study of the estimator on one process family.
#[derive(Debug, Clone, Serialize)]
pub struct McSummary<F> {
    pub replicas: usize,
    pub effective_replicas: usize,
    pub true_gamma: F,
    pub mean: F,
    /// Sample standard deviation (over effective replicas).
    pub std: F,
    pub bias: F,
    /// Root mean squared error against `true_gamma`; satisfies
    /// `rmse^2 = bias^2 + std^2 (R-1)/R`.
    pub rmse: F,
    pub records: Vec<McRecord<F>>,
    pub failures: Vec<McFailure>,
}

/// Simulate `replicas` paths of `spec` on the regular `n_fine`-step grid,
/// estimate each against the `stride`-subsampled coarse grid, and aggregate.
/// Deterministic given `master_seed`.
pub fn mc_study<F: SampleScalar>(
    spec: ProcessSpec<F>,
    n_fine: usize,
    stride: usize,
    replicas: usize,
    horizon: F,
    master_seed: u64,
) -> Result<McSummary<F>> {
    if replicas < 2 {
        return Err(OreyError::InvalidParameter {
            name: "replicas",
            reason: format!("need at least 2, got {replicas}"),
        });
    }
    let fine = Arc::new(Partition::regular(n_fine, horizon)?);
    let coarse = fine.subsample(stride)?;
    if coarse.num_steps() < 3 {
        return Err(OreyError::PartitionSize {
            min: 3,
            got: coarse.num_steps(),
        });
    }
    let true_gamma = spec.orey_profile()?.gamma;
    let sampler = PathSampler::new(spec, Arc::clone(&fine))?;
    let outcomes: Vec<(u64, Result<EstimateResult<F>>)> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let path = sampler
                .sample(SeedPolicy::new(master_seed).replica(r))
                .centered();
            (r, orey_estimate(&path, &coarse, &fine))
        })
        .collect();

    let mut records = Vec::with_capacity(replicas);
    let mut failures = Vec::new();
    for (replica, outcome) in outcomes {
        match outcome {
            Ok(est) => records.push(McRecord {
                replica,
                gamma_hat: est.gamma_hat,
                v_coarse: est.v_coarse,
                v_fine: est.v_fine,
            }),
            Err(e) => failures.push(McFailure {
                replica,
                error: e.to_string(),
            }),
        }
    }
    let r_eff = records.len();
    if r_eff < 2 {
        return Err(OreyError::DegeneratePath(format!(
            "only {r_eff} of {replicas} replicas produced an estimate"
        )));
    }
    let rf = F::of_usize(r_eff);
    let mean = records.iter().map(|r| r.gamma_hat).fold(F::zero(), |a, b| a + b) / rf;
    let ss = records
        .iter()
        .map(|r| (r.gamma_hat - mean) * (r.gamma_hat - mean))
        .fold(F::zero(), |a, b| a + b);
    let std = (ss / (rf - F::one())).sqrt();
    let bias = mean - true_gamma;
    let mse = records
        .iter()
        .map(|r| (r.gamma_hat - true_gamma) * (r.gamma_hat - true_gamma))
        .fold(F::zero(), |a, b| a + b)
        / rf;
    Ok(McSummary {
        replicas,
        effective_replicas: r_eff,
        true_gamma,
        mean,
        std,
        bias,
        rmse: mse.sqrt(),
        records,
        failures,
    })
}
