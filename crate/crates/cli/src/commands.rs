//! Subcommand implementations.  Every artifact embeds the resolved config
//! and tool version; all stochastic output is a pure function of the config
//! plus `--seed`.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::json;

use orey::conditions::{lambda_sweep, log_ratio_profile, remark_check};
use orey::estimator::{mc_study, orey_estimate, McSummary};
use orey::quadvar::{
    d_matrix, eigen_bound, expected_qv, limit_value, normalized_qv, raw_qv, rowsum_diagnostic,
};
use orey::sampler::SeedPolicy;
use orey::{PathSampler, Real};

use crate::args::Resolved;

/// Outcome of a subcommand: artifacts written, and whether every embedded
/// check passed (drives the exit status for CI).
pub struct Outcome {
    pub checks_passed: bool,
}

impl Outcome {
    fn ok() -> Self {
        Self {
            checks_passed: true,
        }
    }
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn json_artifact<T: Serialize>(cfg: &Resolved, payload: &T) -> Result<String> {
    let value = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "result": payload,
    });
    Ok(serde_json::to_string_pretty(&value)? + "\n")
}

pub fn simulate(cfg: &Resolved) -> Result<Outcome> {
    let n = cfg.single_n()?;
    let spec = cfg.spec()?;
    let partition = Arc::new(cfg.build_partition(n)?);
    let sampler = PathSampler::new(spec, Arc::clone(&partition))?;
    write_artifact(
        &cfg.out,
        "partition.csv",
        &(cfg.csv_header() + &partition.to_csv()),
    )?;
    if cfg.replicas == 1 {
        let path = sampler.sample(SeedPolicy::new(cfg.seed));
        write_artifact(&cfg.out, "path.csv", &(cfg.csv_header() + &path.to_csv()))?;
    } else {
        let mut out = cfg.csv_header();
        out.push_str("replica,t,x\n");
        for r in 0..cfg.replicas as u64 {
            let path = sampler.sample(SeedPolicy::new(cfg.seed).replica(r));
            for (&t, &x) in path.times().iter().zip(path.values()) {
                writeln!(out, "{r},{t:.16e},{x:.16e}").unwrap();
            }
        }
        write_artifact(&cfg.out, "paths.csv", &out)?;
    }
    Ok(Outcome::ok())
}

pub fn qv(cfg: &Resolved) -> Result<Outcome> {
    let n = cfg.single_n()?;
    let spec = cfg.spec()?;
    let profile = spec.orey_profile()?;
    let partition = Arc::new(cfg.build_partition(n)?);
    let sampler = PathSampler::new(spec, Arc::clone(&partition))?;
    let mut out = cfg.csv_header();
    out.push_str("replica,normalized_qv,raw_qv\n");
    for r in 0..cfg.replicas as u64 {
        let path = sampler.sample(SeedPolicy::new(cfg.seed).replica(r)).centered();
        let v = normalized_qv(&path, profile.gamma)?;
        let raw = raw_qv(&path)?;
        writeln!(out, "{r},{v:.16e},{raw:.16e}").unwrap();
    }
    write_artifact(&cfg.out, "qv.csv", &out)?;
    Ok(Outcome::ok())
}

pub fn expect(cfg: &Resolved) -> Result<Outcome> {
    use rayon::prelude::*;
    let spec = cfg.spec()?;
    let profile = spec.orey_profile()?;
    // ladder entries run in parallel; output keeps the requested order
    let rows: Vec<String> = cfg
        .n_ladder
        .par_iter()
        .map(|&n| -> Result<String> {
            let partition = cfg.build_partition(n)?;
            let v = expected_qv(&spec, &partition, &profile)?;
            let lim = limit_value(&profile, &partition.ratio_profile(), cfg.t);
            let abs = (v - lim).abs();
            Ok(format!(
                "{n},{v:.16e},{lim:.16e},{abs:.16e},{:.16e}\n",
                abs / lim.abs().max(1e-300)
            ))
        })
        .collect::<Result<_>>()?;
    let mut out = cfg.csv_header();
    out.push_str("n,expected_qv,limit,abs_err,rel_err\n");
    rows.iter().for_each(|r| out.push_str(r));
    write_artifact(&cfg.out, "expect.csv", &out)?;
    Ok(Outcome::ok())
}

pub fn estimate(cfg: &Resolved) -> Result<Outcome> {
    let n = cfg.single_n()?;
    let spec = cfg.spec()?;
    let fine = Arc::new(cfg.build_partition(n)?);
    let coarse = fine.subsample(cfg.stride)?;
    let sampler = PathSampler::new(spec, Arc::clone(&fine))?;
    let path = sampler.sample(SeedPolicy::new(cfg.seed)).centered();
    let est = orey_estimate(&path, &coarse, &fine)?;
    write_artifact(&cfg.out, "estimate.json", &json_artifact(cfg, &est)?)?;
    Ok(Outcome::ok())
}

#[derive(Serialize)]
struct McSummaryOut {
    replicas: usize,
    effective_replicas: usize,
    true_gamma: Real,
    mean: Real,
    std: Real,
    bias: Real,
    rmse: Real,
    failures: Vec<orey::estimator::McFailure>,
}

pub fn mc(cfg: &Resolved) -> Result<Outcome> {
    let n = cfg.single_n()?;
    if cfg.partition != "regular" {
        bail!("the Monte Carlo study runs on regular fine grids (got `{}`)", cfg.partition);
    }
    let spec = cfg.spec()?;
    let summary: McSummary<Real> =
        mc_study(spec, n, cfg.stride, cfg.replicas, cfg.t, cfg.seed)?;
    let mut csv = cfg.csv_header();
    csv.push_str("replica,gamma_hat,v_coarse,v_fine\n");
    for rec in &summary.records {
        writeln!(
            csv,
            "{},{:.16e},{:.16e},{:.16e}",
            rec.replica, rec.gamma_hat, rec.v_coarse, rec.v_fine
        )
        .unwrap();
    }
    write_artifact(&cfg.out, "mc_replicas.csv", &csv)?;
    let out = McSummaryOut {
        replicas: summary.replicas,
        effective_replicas: summary.effective_replicas,
        true_gamma: summary.true_gamma,
        mean: summary.mean,
        std: summary.std,
        bias: summary.bias,
        rmse: summary.rmse,
        failures: summary.failures,
    };
    write_artifact(&cfg.out, "mc_summary.json", &json_artifact(cfg, &out)?)?;
    Ok(Outcome::ok())
}

pub fn diagnose_lambda(cfg: &Resolved) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let profile = spec.orey_profile()?;
    let phi = cfg.phi_function()?;
    let report = lambda_sweep(
        &spec,
        &profile,
        &phi,
        &cfg.deltas,
        cfg.t,
        cfg.t_points,
        cfg.h_points,
    )?;
    write_artifact(&cfg.out, "lambda.csv", &(cfg.csv_header() + &report.to_csv()))?;
    Ok(Outcome {
        checks_passed: report.all_pass(),
    })
}

pub fn diagnose_remark(cfg: &Resolved) -> Result<Outcome> {
    let report = remark_check(cfg.hurst, &cfg.deltas, cfg.t, cfg.s_points, cfg.h_points)?;
    write_artifact(&cfg.out, "remark.csv", &(cfg.csv_header() + &report.to_csv()))?;
    Ok(Outcome {
        checks_passed: report.all_pass(),
    })
}

pub fn diagnose_logratio(cfg: &Resolved) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let phi = cfg.phi_function()?;
    let curves = log_ratio_profile(&spec, &phi, &cfg.h_grid, cfg.t, cfg.s_points)?;
    write_artifact(&cfg.out, "logratio.csv", &(cfg.csv_header() + &curves.to_csv()))?;
    Ok(Outcome::ok())
}

/// Largest partition size for which the full upper-triangle CSV is written
/// alongside the JSON diagnostics.
const DMATRIX_CSV_LIMIT: usize = 512;

pub fn diagnose_rowsum(cfg: &Resolved) -> Result<Outcome> {
    let n = cfg.single_n()?;
    let spec = cfg.spec()?;
    let profile = spec.orey_profile()?;
    let partition = cfg.build_partition(n)?;
    let d = d_matrix(&spec, &partition)?;
    let rs = rowsum_diagnostic(&d);
    let bound = eigen_bound(&d, &partition, profile.gamma)?;
    let mesh = partition.mesh_stats();
    let payload = json!({
        "N": n,
        "p_n": mesh.min_step,
        "m_n": mesh.max_step,
        "max_rowsum": rs.max_rowsum,
        "bound_ratio": rs.bound_ratio,
        "eigen_bound": bound,
    });
    write_artifact(&cfg.out, "rowsum.json", &json_artifact(cfg, &payload)?)?;
    if n <= DMATRIX_CSV_LIMIT {
        write_artifact(
            &cfg.out,
            "dmatrix.csv",
            &(cfg.csv_header() + &d.to_upper_triangle_csv()),
        )?;
    }
    Ok(Outcome::ok())
}
