//! Second-order quadratic variations along arbitrary partitions, their exact
//! expectations through the second-increment covariance matrix, the limit
//! functional `2 kappa^2 int g(l(t)) dt`, and the row-sum / eigenvalue
//! diagnostics behind the almost-sure convergence argument.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{OreyError, Result};
use crate::gaussmodel::{OreyProfile, ProcessSpec};
use crate::linalg::SquareMat;
use crate::partition::{Partition, RatioProfile};
use crate::sampler::Path;
use crate::scalar::Scalar;

/// Dense storage cutoff for the d-matrix (point count of the partition).
const DENSE_LIMIT: usize = 2048;

/// Default half-bandwidth used above the dense cutoff; the off-diagonal
/// entries decay like `|j - k|^{-2(2 - gamma)}`, so 128 terms put the
/// truncated mass far below the diagnostics' resolution.
const DEFAULT_BANDWIDTH: usize = 128;

/// Second-order increments of one path together with the variation weights.
#[derive(Debug, Clone)]
pub struct SecondIncrements<F> {
    /// `step_k * x_{k+1} + step_{k+1} * x_{k-1} - (step_k + step_{k+1}) * x_k`
    /// for `k = 1..N-1`.
    pub increments: Vec<F>,
    /// `mu_k = (step_k + step_{k+1}) (step_k step_{k+1})^{gamma + 1/2}`.
    pub weights: Vec<F>,
    pub gamma: F,
}

fn check_series<F: Scalar>(times: &[F], values: &[F]) -> Result<()> {
    if times.len() != values.len() {
        return Err(OreyError::LengthMismatch {
            values: values.len(),
            points: times.len(),
        });
    }
    if times.len() < 4 {
        return Err(OreyError::PartitionSize {
            min: 3,
            got: times.len().saturating_sub(1),
        });
    }
    Ok(())
}

fn check_gamma<F: Scalar>(gamma: F) -> Result<()> {
    if gamma > F::zero() && gamma < F::one() {
        Ok(())
    } else {
        Err(OreyError::Domain(format!(
            "gamma must lie in (0, 1), got {gamma}"
        )))
    }
}

/// Raw second-order increments of a sampled series, `k = 1..N-1`.
pub fn second_increments<F: Scalar>(times: &[F], values: &[F]) -> Result<Vec<F>> {
    check_series(times, values)?;
    let n = times.len() - 1;
    Ok((1..n)
        .map(|k| {
            let d1 = times[k] - times[k - 1];
            let d2 = times[k + 1] - times[k];
            d1 * values[k + 1] + d2 * values[k - 1] - (d1 + d2) * values[k]
        })
        .collect())
}

/// Variation weights `mu_k` for the given roughness exponent.
pub fn qv_weights<F: Scalar>(times: &[F], gamma: F) -> Result<Vec<F>> {
    check_gamma(gamma)?;
    if times.len() < 4 {
        return Err(OreyError::PartitionSize {
            min: 3,
            got: times.len().saturating_sub(1),
        });
    }
    let e = gamma + F::of(0.5);
    let n = times.len() - 1;
    Ok((1..n)
        .map(|k| {
            let d1 = times[k] - times[k - 1];
            let d2 = times[k + 1] - times[k];
            (d1 + d2) * (d1 * d2).powf(e)
        })
        .collect())
}

/// Increments and weights of a path in one bundle.
pub fn weighted_second_increments<F: Scalar>(
    path: &Path<F>,
    gamma: F,
) -> Result<SecondIncrements<F>> {
    Ok(SecondIncrements {
        increments: second_increments(path.times(), path.values())?,
        weights: qv_weights(path.times(), gamma)?,
        gamma,
    })
}

/// Normalized second-order quadratic variation
/// `2 sum step_{k+1} (inc_k)^2 / mu_k` (compensated summation).
pub fn normalized_qv_series<F: Scalar>(times: &[F], values: &[F], gamma: F) -> Result<F> {
    check_series(times, values)?;
    check_gamma(gamma)?;
    let e = gamma + F::of(0.5);
    let n = times.len() - 1;
    let two = F::of(2.0);
    Ok(kahan_sum((1..n).map(|k| {
        let d1 = times[k] - times[k - 1];
        let d2 = times[k + 1] - times[k];
        let inc = d1 * values[k + 1] + d2 * values[k - 1] - (d1 + d2) * values[k];
        two * d2 * inc * inc / ((d1 + d2) * (d1 * d2).powf(e))
    })))
}

pub fn normalized_qv<F: Scalar>(path: &Path<F>, gamma: F) -> Result<F> {
    normalized_qv_series(path.times(), path.values(), gamma)
}

/// Unweighted sum of squared second-order increments.
pub fn raw_qv_series<F: Scalar>(times: &[F], values: &[F]) -> Result<F> {
    let inc = second_increments(times, values)?;
    Ok(kahan_sum(inc.into_iter().map(|x| x * x)))
}

pub fn raw_qv<F: Scalar>(path: &Path<F>) -> Result<F> {
    raw_qv_series(path.times(), path.values())
}

/// Limit density `g(l) = (1 + l^{2g-1} - (1+l)^{2g-1}) / l^{g-1/2}`;
/// satisfies `g(l) = g(1/l)`.
///
/// The numerator is evaluated through `exp_m1`/`ln_1p` so the two large
/// powers never cancel against each other at extreme ratios.
pub fn g_function<F: Scalar>(lambda: F, gamma: F) -> Result<F> {
    check_gamma(gamma)?;
    if !(lambda > F::zero()) || !lambda.is_finite() {
        return Err(OreyError::Domain(format!(
            "ratio must be positive and finite, got {lambda}"
        )));
    }
    let e = gamma + gamma - F::one();
    let numer = if lambda > F::one() {
        // (1+l)^e = l^e (1 + 1/l)^e, so 1 + l^e - (1+l)^e
        //         = 1 - l^e expm1(e ln1p(1/l))
        F::one() - lambda.powf(e) * (e * lambda.recip().ln_1p()).exp_m1()
    } else {
        // 1 + l^e - (1+l)^e = l^e - expm1(e ln1p(l))
        lambda.powf(e) - (e * lambda.ln_1p()).exp_m1()
    };
    Ok(numer / lambda.powf(gamma - F::of(0.5)))
}

/// `2 kappa^2 int_0^T g(l(t)) dt` over the step-ratio profile.
///
/// The profile's first value is extended down to `t = 0` so the intervals
/// tile all of `[0, T]`; this matches the `n -> infinity` limit (the leading
/// interval vanishes there) and makes the regular case return
/// `kappa^2 (4 - 2^{2 gamma}) T` exactly.
pub fn limit_value<F: Scalar>(profile: &OreyProfile<F>, ratio: &RatioProfile<F>, horizon: F) -> F {
    let kap2 = profile.kappa * profile.kappa;
    let two = F::of(2.0);
    if ratio.values.is_empty() {
        let g1 = two - two.powf(profile.gamma + profile.gamma - F::one());
        return two * kap2 * g1 * horizon;
    }
    let sum = kahan_sum(ratio.values.iter().enumerate().map(|(k, &v)| {
        let left = if k == 0 { F::zero() } else { ratio.breakpoints[k] };
        let len = ratio.breakpoints[k + 1] - left;
        len * g_function(v, profile.gamma).expect("profile ratios are positive")
    }));
    two * kap2 * sum
}

/// Covariance matrix of the second-order increments, dense up to
/// [`DENSE_LIMIT`] points and banded above.
#[derive(Debug, Clone)]
pub struct DMatrix<F> {
    gamma: F,
    min_step: F,
    max_step: F,
    n_rows: usize,
    storage: DStore<F>,
}

#[derive(Debug, Clone)]
enum DStore<F> {
    Dense(SquareMat<F>),
    /// Row-major band: row `k` holds `d_{k,j}` for `j = k-bw ..= k+bw`
    /// (zero-padded at the edges).
    Banded { bandwidth: usize, rows: Vec<F> },
}

impl<F: Scalar> DMatrix<F> {
    /// Wrap a dense matrix (row/column `k` is increment `k+1`).
    pub fn from_dense(gamma: F, min_step: F, max_step: F, m: SquareMat<F>) -> Self {
        Self {
            gamma,
            min_step,
            max_step,
            n_rows: m.n(),
            storage: DStore::Dense(m),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn gamma(&self) -> F {
        self.gamma
    }

    pub fn min_step(&self) -> F {
        self.min_step
    }

    pub fn max_step(&self) -> F {
        self.max_step
    }

    pub fn bandwidth(&self) -> Option<usize> {
        match &self.storage {
            DStore::Dense(_) => None,
            DStore::Banded { bandwidth, .. } => Some(*bandwidth),
        }
    }

    /// Entry for increments `j+1` and `k+1` (zero outside a band).
    pub fn get(&self, j: usize, k: usize) -> F {
        match &self.storage {
            DStore::Dense(m) => m.get(j, k),
            DStore::Banded { bandwidth, rows } => {
                let bw = *bandwidth;
                if j.abs_diff(k) > bw {
                    F::zero()
                } else {
                    rows[j * (2 * bw + 1) + (k + bw - j)]
                }
            }
        }
    }

    pub fn diag(&self, k: usize) -> F {
        self.get(k, k)
    }

    pub fn abs_rowsum(&self, k: usize) -> F {
        match &self.storage {
            DStore::Dense(m) => m.row(k).iter().fold(F::zero(), |a, &v| a + v.abs()),
            DStore::Banded { bandwidth, rows } => {
                let bw = *bandwidth;
                let lo = k.saturating_sub(bw);
                let hi = (k + bw).min(self.n_rows - 1);
                (lo..=hi).fold(F::zero(), |a, j| {
                    a + rows[k * (2 * bw + 1) + (j + bw - k)].abs()
                })
            }
        }
    }

    /// Upper-triangle CSV `(j, k, value)` with 1-based increment indices.
    pub fn to_upper_triangle_csv(&self) -> String {
        let mut out = String::from("j,k,value\n");
        for j in 0..self.n_rows {
            let hi = match self.bandwidth() {
                Some(bw) => (j + bw).min(self.n_rows - 1),
                None => self.n_rows - 1,
            };
            for k in j..=hi {
                out.push_str(&format!("{},{},{:.16e}\n", j + 1, k + 1, self.get(j, k)));
            }
        }
        out
    }
}

/// Coefficients of the 3-point functional whose covariance the d-matrix is:
/// `(step_{k+1}, -(step_k + step_{k+1}), step_k)` at
/// `(t_{k-1}, t_k, t_{k+1})`.
fn stencil<F: Scalar>(times: &[F], k: usize) -> [F; 3] {
    let d1 = times[k] - times[k - 1];
    let d2 = times[k + 1] - times[k];
    [d2, -(d1 + d2), d1]
}

/// Exact covariance matrix of the second-order increments of `spec` on `p`.
pub fn d_matrix<F: Scalar>(spec: &ProcessSpec<F>, p: &Partition<F>) -> Result<DMatrix<F>> {
    let gamma = spec.orey_profile()?.gamma;
    let times = p.times();
    let n = p.num_steps();
    if n < 3 {
        return Err(OreyError::PartitionSize { min: 3, got: n });
    }
    let mesh = p.mesh_stats();
    if times.len() <= DENSE_LIMIT {
        let cov = spec.covariance_matrix(times)?;
        let rows = n - 1;
        let mut m1 = vec![F::zero(); rows * times.len()];
        m1.par_chunks_mut(times.len())
            .enumerate()
            .for_each(|(r, row)| {
                let k = r + 1;
                let c = stencil(times, k);
                for (col, item) in row.iter_mut().enumerate() {
                    *item = c[0] * cov.get(k - 1, col)
                        + c[1] * cov.get(k, col)
                        + c[2] * cov.get(k + 1, col);
                }
            });
        let mut d = SquareMat::zeros(rows);
        let chunks: Vec<Vec<F>> = (0..rows)
            .into_par_iter()
            .map(|r| {
                let row1 = &m1[r * times.len()..(r + 1) * times.len()];
                (0..rows)
                    .map(|s| {
                        let j = s + 1;
                        let c = stencil(times, j);
                        c[0] * row1[j - 1] + c[1] * row1[j] + c[2] * row1[j + 1]
                    })
                    .collect()
            })
            .collect();
        for (r, row) in chunks.iter().enumerate() {
            for (s, &v) in row.iter().enumerate() {
                d.set(r, s, v);
            }
        }
        d.symmetrize();
        Ok(DMatrix {
            gamma,
            min_step: mesh.min_step,
            max_step: mesh.max_step,
            n_rows: rows,
            storage: DStore::Dense(d),
        })
    } else {
        d_matrix_banded(spec, p, DEFAULT_BANDWIDTH)
    }
}

/// Banded assembly with an explicit half-bandwidth (also used to monitor the
/// truncation error against the dense form at moderate sizes).
pub fn d_matrix_banded<F: Scalar>(
    spec: &ProcessSpec<F>,
    p: &Partition<F>,
    bandwidth: usize,
) -> Result<DMatrix<F>> {
    if matches!(spec, ProcessSpec::FracOu { .. }) {
        return Err(OreyError::NotAvailable(
            "banded d-matrix assembly needs a closed-form kernel; \
             the O-U kernel is limited to the dense range"
                .into(),
        ));
    }
    let gamma = spec.orey_profile()?.gamma;
    let times = p.times();
    let n = p.num_steps();
    if n < 3 {
        return Err(OreyError::PartitionSize { min: 3, got: n });
    }
    spec.covariance(F::zero(), times[n])?; // surface domain errors once
    let mesh = p.mesh_stats();
    let rows_n = n - 1;
    let width = 2 * bandwidth + 1;
    let mut rows = vec![F::zero(); rows_n * width];
    rows.par_chunks_mut(width).enumerate().for_each(|(r, row)| {
        let k = r + 1;
        let ck = stencil(times, k);
        let lo = k.saturating_sub(bandwidth).max(1);
        let hi = (k + bandwidth).min(n - 1);
        for j in lo..=hi {
            let cj = stencil(times, j);
            let mut v = F::zero();
            for (a, &ca) in ck.iter().enumerate() {
                for (b, &cb) in cj.iter().enumerate() {
                    v += ca
                        * cb
                        * spec
                            .covariance(times[k + a - 1], times[j + b - 1])
                            .expect("times validated above");
                }
            }
            row[j + bandwidth - k] = v;
        }
    });
    Ok(DMatrix {
        gamma,
        min_step: mesh.min_step,
        max_step: mesh.max_step,
        n_rows: rows_n,
        storage: DStore::Banded { bandwidth, rows },
    })
}

/// Exact expectation `2 sum step_{k+1} d_kk / mu_k` of the normalized
/// variation, through the closed-form incremental variances where they
/// exist.
pub fn expected_qv<F: Scalar>(
    spec: &ProcessSpec<F>,
    p: &Partition<F>,
    profile: &OreyProfile<F>,
) -> Result<F> {
    let times = p.times();
    let n = p.num_steps();
    if n < 3 {
        return Err(OreyError::PartitionSize { min: 3, got: n });
    }
    check_gamma(profile.gamma)?;
    let diag = d_diagonal(spec, p)?;
    let e = profile.gamma + F::of(0.5);
    let two = F::of(2.0);
    Ok(kahan_sum((1..n).map(|k| {
        let d1 = times[k] - times[k - 1];
        let d2 = times[k + 1] - times[k];
        two * d2 * diag[k - 1] / ((d1 + d2) * (d1 * d2).powf(e))
    })))
}

/// Diagonal `d_kk = E (inc_k)^2`, `k = 1..N-1`.
///
/// For mean-zero processes the 3-point expansion reduces to incremental
/// variances:
/// `d_kk = (d1+d2) [ d1 s2(t_k, t_{k+1}) + d2 s2(t_{k-1}, t_k) ]
///         - d1 d2 s2(t_{k-1}, t_{k+1})`.
pub fn d_diagonal<F: Scalar>(spec: &ProcessSpec<F>, p: &Partition<F>) -> Result<Vec<F>> {
    let times = p.times();
    let n = p.num_steps();
    if let ProcessSpec::FracOu { .. } = spec {
        let cov = spec.covariance_matrix(times)?;
        return Ok((1..n)
            .map(|k| {
                let c = stencil(times, k);
                let mut v = F::zero();
                for (a, &ca) in c.iter().enumerate() {
                    for (b, &cb) in c.iter().enumerate() {
                        v += ca * cb * cov.get(k + a - 1, k + b - 1);
                    }
                }
                v
            })
            .collect());
    }
    (1..n)
        .map(|k| {
            let d1 = times[k] - times[k - 1];
            let d2 = times[k + 1] - times[k];
            let s_right = spec.incremental_variance(times[k], times[k + 1])?;
            let s_left = spec.incremental_variance(times[k - 1], times[k])?;
            let s_wide = spec.incremental_variance(times[k - 1], times[k + 1])?;
            Ok((d1 + d2) * (d1 * s_right + d2 * s_left) - d1 * d2 * s_wide)
        })
        .collect()
}

/// Row-sum diagnostic for the almost-sure convergence hypothesis
/// `max_k sum_j |d_jk| <= C p_n^{2 + 2 gamma}`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RowsumDiagnostic<F> {
    pub max_rowsum: F,
    /// `max_rowsum / p_n^{2 + 2 gamma}`; bounded in `n` when the hypothesis
    /// holds.
    pub bound_ratio: F,
}

pub fn rowsum_diagnostic<F: Scalar>(d: &DMatrix<F>) -> RowsumDiagnostic<F> {
    let max_rowsum = (0..d.n_rows())
        .fold(F::zero(), |a, k| a.max(d.abs_rowsum(k)));
    let scale = d
        .min_step()
        .powf(F::of(2.0) + d.gamma() + d.gamma());
    RowsumDiagnostic {
        max_rowsum,
        bound_ratio: max_rowsum / scale,
    }
}

/// Weighted-rowsum bound on the top eigenvalue of the covariance matrix of
/// the scaled increments `sqrt(2 step_{k+1} / mu_k) * inc_k`:
/// `2 max_k sum_j sqrt(step_{j+1} step_{k+1} / (mu_j mu_k)) |d_jk|`.
///
/// The variation weights attach `step_{k+1}` to term `k`, so that step is
/// used here (the same quantity on regular grids either way).
pub fn eigen_bound<F: Scalar>(d: &DMatrix<F>, p: &Partition<F>, gamma: F) -> Result<F> {
    check_gamma(gamma)?;
    let alpha = scaling_weights(p, gamma)?;
    if alpha.len() != d.n_rows() {
        return Err(OreyError::LengthMismatch {
            values: alpha.len(),
            points: d.n_rows(),
        });
    }
    let two = F::of(2.0);
    let mut best = F::zero();
    for k in 0..d.n_rows() {
        let lo = d.bandwidth().map_or(0, |bw| k.saturating_sub(bw));
        let hi = d
            .bandwidth()
            .map_or(d.n_rows() - 1, |bw| (k + bw).min(d.n_rows() - 1));
        let s = (lo..=hi).fold(F::zero(), |a, j| {
            a + alpha[j] * alpha[k] * d.get(j, k).abs()
        });
        best = best.max(two * s);
    }
    Ok(best)
}

/// Covariance matrix of the scaled increment vector itself,
/// `M_jk = 2 alpha_j alpha_k d_jk`; its top eigenvalue is what
/// [`eigen_bound`] dominates.
pub fn scaled_increment_covariance<F: Scalar>(
    d: &DMatrix<F>,
    p: &Partition<F>,
    gamma: F,
) -> Result<SquareMat<F>> {
    check_gamma(gamma)?;
    let alpha = scaling_weights(p, gamma)?;
    let two = F::of(2.0);
    let n = d.n_rows();
    let mut m = SquareMat::zeros(n);
    for j in 0..n {
        for k in 0..n {
            m.set(j, k, two * alpha[j] * alpha[k] * d.get(j, k));
        }
    }
    Ok(m)
}

/// `alpha_k = sqrt(step_{k+1} / mu_k)`.
fn scaling_weights<F: Scalar>(p: &Partition<F>, gamma: F) -> Result<Vec<F>> {
    let times = p.times();
    let weights = qv_weights(times, gamma)?;
    let n = p.num_steps();
    Ok((1..n)
        .map(|k| ((times[k + 1] - times[k]) / weights[k - 1]).sqrt())
        .collect())
}

fn kahan_sum<F: Scalar>(iter: impl Iterator<Item = F>) -> F {
    let mut sum = F::zero();
    let mut comp = F::zero();
    for x in iter {
        let y = x - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{sample_fbm_fast, SeedPolicy};
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;

    fn rel_diff(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-30)
    }

    #[test]
    fn affine_paths_are_annihilated() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(42);
        for case in 0..100 {
            let p = Partition::<f64>::perturbed(20, 2.0, 3.0, case).unwrap();
            let a: f64 = rng.gen_range(-5.0..5.0);
            let b: f64 = rng.gen_range(-5.0..5.0);
            let values: Vec<f64> = p.times().iter().map(|&t| a + b * t).collect();
            let inc = second_increments(p.times(), &values).unwrap();
            let scale = a.abs().max(b.abs()).max(1.0);
            assert!(inc.iter().all(|&x| x.abs() <= 1e-12 * scale));
            assert!(raw_qv_series(p.times(), &values).unwrap() <= 1e-20 * scale);
            assert!(normalized_qv_series(p.times(), &values, 0.5).unwrap() <= 1e-18 * scale);
        }
    }

    #[test]
    fn quadratic_path_increments() {
        let n = 16;
        let h = 1.0 / n as f64;
        let p = Partition::<f64>::regular(n, 1.0).unwrap();
        let values: Vec<f64> = p.times().iter().map(|&t| t * t).collect();
        let inc = second_increments(p.times(), &values).unwrap();
        for &x in &inc {
            assert!(rel_diff(x, 2.0 * h.powi(3)) < 1e-10);
        }
        let raw = raw_qv_series(p.times(), &values).unwrap();
        assert!(rel_diff(raw, (n - 1) as f64 * 4.0 * h.powi(6)) < 1e-10);
    }

    #[test]
    fn regular_normalized_form_matches_shortcut() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        for &gamma in &[0.3, 0.5, 0.8] {
            let n = 64;
            let t = 1.7;
            let p = Partition::<f64>::regular(n, t).unwrap();
            let values: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v = normalized_qv_series(p.times(), &values, gamma).unwrap();
            // (N/T)^{2 gamma - 1} * sum of squared plain second differences
            let shortcut = (n as f64 / t).powf(2.0 * gamma - 1.0)
                * values
                    .windows(3)
                    .map(|w| (w[2] - 2.0 * w[1] + w[0]).powi(2))
                    .sum::<f64>();
            assert!(rel_diff(v, shortcut) < 1e-12, "gamma {gamma}: {v} vs {shortcut}");
        }
    }

    #[test]
    fn g_special_values() {
        for &gamma in &[0.1, 0.25, 0.5, 0.6, 0.9] {
            let g1 = g_function(1.0, gamma).unwrap();
            assert!((g1 - (2.0 - 2f64.powf(2.0 * gamma - 1.0))).abs() < 1e-14);
        }
        for &l in &[0.01, 0.5, 1.0, 3.0, 100.0] {
            assert!((g_function(l, 0.5f64).unwrap() - 1.0).abs() < 1e-14);
        }
        // frozen high-precision evaluation of (1 + 2^0.5 - 3^0.5)/2^0.25
        assert!((g_function(2.0, 0.75f64).unwrap() - 0.5736282151344653489).abs() < 1e-15);
        assert!(matches!(
            g_function(0.0, 0.5),
            Err(OreyError::Domain(_))
        ));
        assert!(g_function(-1.0, 0.5).is_err());
    }

    #[test]
    fn limit_value_regular_and_alternating() {
        let profile = OreyProfile { gamma: 0.5, kappa: 1.0 };
        let p = Partition::<f64>::regular(100, 3.0).unwrap();
        let v = limit_value(&profile, &p.ratio_profile(), 3.0);
        assert!(rel_diff(v, 6.0) < 1e-12);

        // alternating ratios: result is 2 kappa^2 g(alpha) T however the two
        // values interleave
        let profile = OreyProfile { gamma: 0.7, kappa: 1.3 };
        for pairs in [2usize, 5, 20] {
            let p = Partition::<f64>::alternating(2.0, pairs, 1.5).unwrap();
            let v = limit_value(&profile, &p.ratio_profile(), 1.5);
            let expect = 2.0 * 1.3f64.powi(2) * g_function(2.0, 0.7).unwrap() * 1.5;
            assert!(rel_diff(v, expect) < 1e-10, "pairs {pairs}");
        }

        // bifBm profile on a regular grid
        let spec = ProcessSpec::<f64>::BiFbm { hurst: 0.8, k: 0.5 };
        let profile = spec.orey_profile().unwrap();
        let p = Partition::<f64>::regular(64, 1.0).unwrap();
        let v = limit_value(&profile, &p.ratio_profile(), 1.0);
        let expect = 2f64.sqrt() * (4.0 - 2f64.powf(0.8));
        assert!(rel_diff(v, expect) < 1e-12);
    }

    #[test]
    fn g_is_invariant_under_inversion() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let lambda = 10f64.powf(rng.gen_range(-3.0..3.0));
            let gamma = rng.gen_range(0.01..0.99);
            let a = g_function(lambda, gamma).unwrap();
            let b = g_function(1.0 / lambda, gamma).unwrap();
            assert!(rel_diff(a, b) < 1e-12, "l={lambda} g={gamma}");
        }
    }

    #[test]
    fn brownian_d_matrix_is_tridiagonal() {
        let n = 16;
        let h = 1.0 / n as f64;
        let p = Partition::<f64>::regular(n, 1.0).unwrap();
        let d = d_matrix(&ProcessSpec::Fbm { hurst: 0.5 }, &p).unwrap();
        for j in 0..d.n_rows() {
            for k in 0..d.n_rows() {
                let expect = if j == k {
                    2.0 * h.powi(3)
                } else if j.abs_diff(k) == 1 {
                    -h.powi(3)
                } else {
                    0.0
                };
                assert!(
                    (d.get(j, k) - expect).abs() < 1e-15,
                    "({j},{k}): {} vs {expect}",
                    d.get(j, k)
                );
            }
        }
        let diag = rowsum_diagnostic(&d);
        assert!(rel_diff(diag.max_rowsum, 4.0 * h.powi(3)) < 1e-10);
        assert!(rel_diff(diag.bound_ratio, 4.0) < 1e-10);
    }

    #[test]
    fn expected_qv_closed_form_for_fbm() {
        for &(hurst, n) in &[(0.3, 128usize), (0.5, 64), (0.7, 256)] {
            let spec = ProcessSpec::Fbm { hurst };
            let p = Partition::<f64>::regular(n, 1.0).unwrap();
            let profile = spec.orey_profile().unwrap();
            let v = expected_qv(&spec, &p, &profile).unwrap();
            let expect = (n - 1) as f64 / n as f64 * (4.0 - 2f64.powf(2.0 * hurst));
            assert!(rel_diff(v, expect) < 1e-10, "H={hurst} N={n}: {v} vs {expect}");
        }
        // the Brownian case at a fixed size, spelled out
        let spec = ProcessSpec::Fbm { hurst: 0.5 };
        let p = Partition::<f64>::regular(1024, 1.0).unwrap();
        let v = expected_qv(&spec, &p, &spec.orey_profile().unwrap()).unwrap();
        assert!(rel_diff(v, 2.0 * 1023.0 / 1024.0) < 1e-10);
    }

    #[test]
    fn expected_qv_matches_d_matrix_route() {
        let specs: Vec<ProcessSpec<f64>> = vec![
            ProcessSpec::SubFbm { hurst: 0.7 },
            ProcessSpec::BiFbm { hurst: 0.8, k: 0.5 },
            ProcessSpec::FBridge { hurst: 0.6, horizon: 1.0 },
        ];
        let p = Partition::<f64>::perturbed(32, 1.0, 2.0, 5).unwrap();
        for spec in &specs {
            let profile = spec.orey_profile().unwrap();
            let via_sigma = expected_qv(spec, &p, &profile).unwrap();
            let d = d_matrix(spec, &p).unwrap();
            let times = p.times();
            let e = profile.gamma + 0.5;
            let via_d: f64 = (1..p.num_steps())
                .map(|k| {
                    let d1 = times[k] - times[k - 1];
                    let d2 = times[k + 1] - times[k];
                    2.0 * d2 * d.diag(k - 1) / ((d1 + d2) * (d1 * d2).powf(e))
                })
                .sum();
            assert!(rel_diff(via_sigma, via_d) < 1e-9, "{spec:?}: {via_sigma} vs {via_d}");
        }
    }

    #[test]
    fn d_matrix_is_affine_invariant() {
        // adding a deterministic affine function leaves second-increment
        // covariances unchanged; equivalently the stencil sums to zero
        let p = Partition::<f64>::perturbed(12, 1.0, 2.5, 9).unwrap();
        let times = p.times();
        for k in 1..p.num_steps() {
            let c = stencil(times, k);
            assert!((c[0] + c[1] + c[2]).abs() < 1e-16);
            // first moment also vanishes: c . (t_{k-1}, t_k, t_{k+1}) = 0
            let m1 = c[0] * times[k - 1] + c[1] * times[k] + c[2] * times[k + 1];
            assert!(m1.abs() < 1e-15);
        }
    }

    #[test]
    fn banded_assembly_matches_dense() {
        let spec = ProcessSpec::<f64>::SubFbm { hurst: 0.7 };
        let p = Partition::<f64>::regular(512, 1.0).unwrap();
        let dense = d_matrix(&spec, &p).unwrap();
        let banded = d_matrix_banded(&spec, &p, 64).unwrap();
        let mut max_in_band = 0f64;
        let mut max_out_band = 0f64;
        for j in 0..dense.n_rows() {
            for k in 0..dense.n_rows() {
                if j.abs_diff(k) <= 64 {
                    max_in_band = max_in_band.max((dense.get(j, k) - banded.get(j, k)).abs());
                } else {
                    max_out_band = max_out_band.max(dense.get(j, k).abs());
                }
            }
        }
        let scale = dense.diag(dense.n_rows() / 2);
        assert!(max_in_band < 1e-12 * scale, "in-band mismatch {max_in_band}");
        // truncated tail is far below the diagonal scale
        assert!(max_out_band < 1e-4 * scale, "tail {max_out_band} vs {scale}");
        let rd = rowsum_diagnostic(&dense);
        let rb = rowsum_diagnostic(&banded);
        assert!(rel_diff(rd.max_rowsum, rb.max_rowsum) < 1e-3);
    }

    #[test]
    fn large_grids_switch_to_banded_storage() {
        let spec = ProcessSpec::<f64>::Fbm { hurst: 0.7 };
        let n = 2560usize;
        let p = Partition::<f64>::regular(n, 1.0).unwrap();
        let d = d_matrix(&spec, &p).unwrap();
        assert_eq!(d.bandwidth(), Some(128));
        // diagonal still matches the stationary closed form (4 - 2^{2H}) h^{2+2H}
        let h = 1.0 / n as f64;
        let expect = (4.0 - 2f64.powf(1.4)) * h.powf(3.4);
        for k in [0, n / 2, n - 2] {
            assert!(rel_diff(d.diag(k), expect) < 1e-9, "k={k}");
        }
        assert!(matches!(
            d_matrix(
                &ProcessSpec::FracOu { hurst: 0.6, mu: 1.0, theta: 1.0, x0: 0.0, refine: 8 },
                &p
            ),
            Err(OreyError::NotAvailable(_))
        ));
    }

    #[test]
    fn eigen_bound_diagonal_case() {
        // diagonal-only matrix: the bound collapses to the largest scaled
        // diagonal entry
        let p = Partition::<f64>::regular(8, 1.0).unwrap();
        let n = p.num_steps() - 1;
        let mut m = SquareMat::zeros(n);
        for k in 0..n {
            m.set(k, k, (k + 1) as f64);
        }
        let mesh = p.mesh_stats();
        let d = DMatrix::from_dense(0.5, mesh.min_step, mesh.max_step, m);
        let gamma = 0.5;
        let bound = eigen_bound(&d, &p, gamma).unwrap();
        let times = p.times();
        let w = qv_weights(times, gamma).unwrap();
        let expect = (1..p.num_steps())
            .map(|k| 2.0 * (times[k + 1] - times[k]) / w[k - 1] * k as f64)
            .fold(0f64, f64::max);
        assert!(rel_diff(bound, expect) < 1e-12);
    }

    #[test]
    fn normalized_qv_of_sampled_path_is_positive() {
        let path = sample_fbm_fast(0.7, 64, 1.0, SeedPolicy::new(5)).unwrap();
        let v = normalized_qv(&path, 0.7).unwrap();
        assert!(v > 0.0);
        let raw = raw_qv(&path).unwrap();
        assert!(raw > 0.0);
    }

    proptest! {
        #[test]
        fn g_inversion_invariance(
            log_l in -4.0f64..4.0,
            gamma in 0.02f64..0.98,
        ) {
            let l = 10f64.powf(log_l);
            let a = g_function(l, gamma).unwrap();
            let b = g_function(1.0 / l, gamma).unwrap();
            prop_assert!(rel_diff(a, b) < 1e-12);
            prop_assert!(a.is_finite() && a > 0.0);
        }

        #[test]
        fn weights_obey_mesh_envelope(
            n in 4usize..40,
            gamma in 0.05f64..0.95,
            seed in any::<u64>(),
        ) {
            let p = Partition::<f64>::perturbed(n, 1.0, 4.0, seed).unwrap();
            let w = qv_weights(p.times(), gamma).unwrap();
            let mesh = p.mesh_stats();
            let lo = 2.0 * mesh.min_step.powf(2.0 * gamma + 2.0);
            let hi = 2.0 * mesh.max_step.powf(2.0 * gamma + 2.0);
            for &mu in &w {
                prop_assert!(mu >= lo * (1.0 - 1e-12) && mu <= hi * (1.0 + 1e-12));
            }
        }
    }
}
