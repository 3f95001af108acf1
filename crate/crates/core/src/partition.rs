//! Partitions of `[0, T]`: regular, alternating-step and randomly perturbed
//! grids, mesh statistics, consecutive-step ratio profiles and nested
//! subsampling.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{OreyError, Result};
use crate::scalar::Scalar;

/// Strictly increasing grid `0 = t_0 < t_1 < ... < t_N = T`.
///
/// Times are stored absolutely (never as running sums of steps) so nested
/// partitions share bit-identical points.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition<F> {
    times: Vec<F>,
}

/// Mesh numbers of a partition: largest step, smallest step and their ratio.
#[derive(Debug, Clone, Copy)]
pub struct MeshStats<F> {
    pub max_step: F,
    pub min_step: F,
    pub c_ratio: F,
}

/// Step function of consecutive-step ratios `l_k = step_k / step_{k+1}`,
/// constant on `[t_k, t_{k+1})` for `k = 1..N-1`.
#[derive(Debug, Clone)]
pub struct RatioProfile<F> {
    /// `t_1, ..., t_N`: value `k` applies on `[breakpoints[k], breakpoints[k+1])`.
    pub breakpoints: Vec<F>,
    /// `l_1, ..., l_{N-1}`, all positive.
    pub values: Vec<F>,
}

impl<F: Scalar> RatioProfile<F> {
    /// The set of distinct ratio values, merged up to a relative tolerance.
    pub fn range(&self, rel_tol: F) -> Vec<F> {
        let mut sorted = self.values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut out: Vec<F> = Vec::new();
        for v in sorted {
            match out.last() {
                Some(&last) if (v - last).abs() <= rel_tol * last.abs() => {}
                _ => out.push(v),
            }
        }
        out
    }
}

impl<F: Scalar> Partition<F> {
    /// Build a partition from explicit times; must start at 0, be strictly
    /// increasing and contain at least two points.
    pub fn from_times(times: Vec<F>) -> Result<Self> {
        if times.len() < 2 {
            return Err(OreyError::PartitionSize {
                min: 1,
                got: times.len().saturating_sub(1),
            });
        }
        if times[0] != F::zero() {
            return Err(OreyError::Domain(format!(
                "partition must start at 0, got {}",
                times[0]
            )));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(OreyError::Domain(format!(
                    "partition times must be strictly increasing and finite, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { times })
    }

    /// Uniform grid `t_k = T * k / N`.
    pub fn regular(n: usize, horizon: F) -> Result<Self> {
        if n < 3 {
            return Err(OreyError::PartitionSize { min: 3, got: n });
        }
        check_horizon(horizon)?;
        let nf = F::of_usize(n);
        let times = (0..=n)
            .map(|k| horizon * (F::of_usize(k) / nf))
            .collect();
        Ok(Self { times })
    }

    /// Steps alternating `h, alpha*h` with `h` chosen so they sum to `T`.
    ///
    /// The consecutive-step ratios take the two values `{alpha, 1/alpha}`.
    pub fn alternating(alpha: F, pairs: usize, horizon: F) -> Result<Self> {
        if !(alpha > F::zero()) || !alpha.is_finite() {
            return Err(OreyError::InvalidParameter {
                name: "alpha",
                reason: format!("must be a positive finite ratio, got {alpha}"),
            });
        }
        if pairs < 2 {
            return Err(OreyError::PartitionSize {
                min: 4,
                got: 2 * pairs,
            });
        }
        check_horizon(horizon)?;
        // Cumulative step count in units of h: 0, 1, 1+a, 2+a, 2+2a, ...
        // Dividing by the total keeps alpha = 1 bit-identical to `regular`.
        let total = F::of_usize(pairs) * (F::one() + alpha);
        let mut times = Vec::with_capacity(2 * pairs + 1);
        for i in 0..pairs {
            let base = F::of_usize(i) * (F::one() + alpha);
            times.push(horizon * (base / total));
            times.push(horizon * ((base + F::one()) / total));
        }
        times.push(horizon);
        Self::from_times(times)
    }

    /// Random partition with steps drawn uniformly from `[a, c_max * a]` and
    /// rescaled to sum to `T`; the resulting step ratio stays below `c_max`
    /// up to rescaling roundoff.
    pub fn perturbed(n: usize, horizon: F, c_max: F, seed: u64) -> Result<Self> {
        if n < 3 {
            return Err(OreyError::PartitionSize { min: 3, got: n });
        }
        check_horizon(horizon)?;
        if !(c_max >= F::one()) || !c_max.is_finite() {
            return Err(OreyError::InvalidParameter {
                name: "c_max",
                reason: format!("must be >= 1, got {c_max}"),
            });
        }
        if c_max == F::one() {
            return Self::regular(n, horizon);
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let dist = Uniform::new_inclusive(1.0f64, c_max.as_f64());
        let steps: Vec<F> = (0..n).map(|_| F::of(dist.sample(&mut rng))).collect();
        let mut prefix = Vec::with_capacity(n + 1);
        let mut acc = F::zero();
        prefix.push(acc);
        for &s in &steps {
            acc += s;
            prefix.push(acc);
        }
        let total = acc;
        let mut times: Vec<F> = prefix.iter().map(|&p| horizon * (p / total)).collect();
        times[n] = horizon;
        Self::from_times(times)
    }

    /// Keep every `stride`-th point (endpoints included); the result is a
    /// sub-partition with bit-identical times.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        let n = self.num_steps();
        if stride < 2 {
            return Err(OreyError::InvalidParameter {
                name: "stride",
                reason: format!("must be >= 2, got {stride}"),
            });
        }
        if n % stride != 0 {
            return Err(OreyError::Alignment { stride, steps: n });
        }
        let times = self.times.iter().copied().step_by(stride).collect();
        Self::from_times(times)
    }

    pub fn times(&self) -> &[F] {
        &self.times
    }

    /// Number of steps `N` (one less than the point count).
    pub fn num_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn horizon(&self) -> F {
        *self.times.last().unwrap()
    }

    pub fn steps(&self) -> Vec<F> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn mesh_stats(&self) -> MeshStats<F> {
        let mut max_step = F::neg_infinity();
        let mut min_step = F::infinity();
        for w in self.times.windows(2) {
            let s = w[1] - w[0];
            max_step = max_step.max(s);
            min_step = min_step.min(s);
        }
        MeshStats {
            max_step,
            min_step,
            c_ratio: max_step / min_step,
        }
    }

    /// Consecutive-step ratios `l_k = step_k / step_{k+1}`, `k = 1..N-1`.
    pub fn ratio_profile(&self) -> RatioProfile<F> {
        let steps = self.steps();
        let values = steps.windows(2).map(|w| w[0] / w[1]).collect();
        RatioProfile {
            breakpoints: self.times[1..].to_vec(),
            values,
        }
    }

    /// Indices of `self`'s times inside a finer partition, or an error when
    /// some point is missing (times must match bit-exactly).
    pub fn indices_in(&self, finer: &Partition<F>) -> Result<Vec<usize>> {
        self.times
            .iter()
            .map(|t| {
                finer
                    .times
                    .binary_search_by(|x| x.partial_cmp(t).unwrap())
                    .map_err(|_| OreyError::NotNested(format!("time {t} missing from fine grid")))
            })
            .collect()
    }

    /// Single-column CSV (`t` header, 17 significant digits).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t\n");
        for &t in &self.times {
            out.push_str(&format!("{:.16e}\n", t));
        }
        out
    }

    /// Parse the CSV form; lines starting with `#` are skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut times = Vec::new();
        let mut saw_header = false;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !saw_header {
                if line != "t" {
                    return Err(OreyError::Parse(format!(
                        "expected header `t`, got `{line}`"
                    )));
                }
                saw_header = true;
                continue;
            }
            let v: f64 = line
                .parse()
                .map_err(|e| OreyError::Parse(format!("bad time `{line}`: {e}")))?;
            times.push(F::of(v));
        }
        Self::from_times(times)
    }
}

fn check_horizon<F: Scalar>(horizon: F) -> Result<()> {
    if horizon > F::zero() && horizon.is_finite() {
        Ok(())
    } else {
        Err(OreyError::InvalidParameter {
            name: "horizon",
            reason: format!("must be positive and finite, got {horizon}"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn regular_four_steps() {
        let p = Partition::<f64>::regular(4, 1.0).unwrap();
        assert_eq!(p.times(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        let m = p.mesh_stats();
        assert_eq!(m.max_step, m.min_step);
        assert!((m.c_ratio - 1.0).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn regular_three_steps_horizon_two() {
        let p = Partition::<f64>::regular(3, 2.0).unwrap();
        assert_eq!(p.times()[0], 0.0);
        assert!((p.times()[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.times()[2] - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(p.times()[3], 2.0);
        assert!((p.mesh_stats().c_ratio - 1.0).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn regular_rejects_small() {
        assert!(matches!(
            Partition::<f64>::regular(2, 1.0),
            Err(OreyError::PartitionSize { .. })
        ));
    }

    #[test]
    fn alternating_example() {
        let p = Partition::<f64>::alternating(2.0, 2, 6.0).unwrap();
        let expect = [0.0, 1.0, 3.0, 4.0, 6.0];
        for (a, b) in p.times().iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert_eq!(p.mesh_stats().c_ratio, 2.0);
        assert_eq!(Partition::<f64>::alternating(3.0, 4, 1.0).unwrap().mesh_stats().c_ratio, 3.0);
    }

    #[test]
    fn alternating_alpha_one_is_regular() {
        let a = Partition::<f64>::alternating(1.0, 3, 1.7).unwrap();
        let r = Partition::<f64>::regular(6, 1.7).unwrap();
        assert_eq!(a.times(), r.times());
    }

    #[test]
    fn alternating_ratios() {
        let p = Partition::<f64>::alternating(2.0, 3, 1.0).unwrap();
        let prof = p.ratio_profile();
        for (k, &v) in prof.values.iter().enumerate() {
            let expect = if k % 2 == 0 { 0.5 } else { 2.0 };
            assert!((v - expect).abs() < 1e-12);
        }
        // adjacent ratios multiply to 1
        for w in prof.values.windows(2) {
            assert!((w[0] * w[1] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn ratio_profile_small_example() {
        let p = Partition::from_times(vec![0.0, 1.0, 3.0, 4.0]).unwrap();
        let prof = p.ratio_profile();
        assert_eq!(prof.values, vec![0.5, 2.0]);
        assert_eq!(prof.range(1e-12), vec![0.5, 2.0]);
    }

    #[test]
    fn ratio_range_collapses_to_two_values_for_alternating() {
        let p = Partition::<f64>::alternating(3.0, 16, 1.0).unwrap();
        let range = p.ratio_profile().range(1e-12);
        assert_eq!(range.len(), 2);
        assert!((range[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((range[1] - 3.0).abs() < 1e-12);
        let r = Partition::<f64>::regular(16, 1.0).unwrap();
        assert_eq!(r.ratio_profile().range(1e-12).len(), 1);
    }

    #[test]
    fn perturbed_respects_ratio_bound() {
        for seed in 0..100u64 {
            let p = Partition::<f64>::perturbed(100, 1.0, 2.0, seed).unwrap();
            assert!(p.mesh_stats().c_ratio <= 2.0 * (1.0 + 1e-12), "seed {seed}");
            assert_eq!(p.horizon(), 1.0);
        }
    }

    #[test]
    fn perturbed_is_seed_deterministic() {
        let a = Partition::<f64>::perturbed(64, 2.5, 3.0, 7).unwrap();
        let b = Partition::<f64>::perturbed(64, 2.5, 3.0, 7).unwrap();
        assert_eq!(a.times(), b.times());
    }

    #[test]
    fn perturbed_cmax_one_is_regular() {
        let p = Partition::<f64>::perturbed(10, 1.0, 1.0, 3).unwrap();
        let r = Partition::<f64>::regular(10, 1.0).unwrap();
        assert_eq!(p.times(), r.times());
    }

    #[test]
    fn subsample_of_regular_is_regular() {
        for &(n, s, t) in &[(8usize, 2usize, 1.0f64), (12, 3, 0.7), (64, 4, 2.3)] {
            let fine = Partition::<f64>::regular(n, t).unwrap();
            let coarse = fine.subsample(s).unwrap();
            let direct = Partition::<f64>::regular(n / s, t).unwrap();
            assert_eq!(coarse.times(), direct.times(), "n={n} s={s}");
        }
    }

    #[test]
    fn subsample_alignment_error() {
        let p = Partition::<f64>::regular(9, 1.0).unwrap();
        assert!(matches!(
            p.subsample(2),
            Err(OreyError::Alignment { .. })
        ));
    }

    #[test]
    fn subsample_nests() {
        let fine = Partition::<f64>::perturbed(24, 1.0, 3.0, 11).unwrap();
        let coarse = fine.subsample(4).unwrap();
        let idx = coarse.indices_in(&fine).unwrap();
        assert_eq!(idx, vec![0, 4, 8, 12, 16, 20, 24]);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let p = Partition::<f64>::perturbed(37, 1.3, 2.7, 99).unwrap();
        let back = Partition::<f64>::from_csv(&p.to_csv()).unwrap();
        assert_eq!(p.times(), back.times());
    }

    proptest! {
        #[test]
        fn constructed_partitions_are_consistent(
            n in 3usize..200,
            horizon in 1e-3f64..1e3,
            c_max in 1.0f64..8.0,
            seed in any::<u64>(),
        ) {
            let p = Partition::<f64>::perturbed(n, horizon, c_max, seed).unwrap();
            let steps = p.steps();
            let sum: f64 = steps.iter().sum();
            prop_assert!((sum - horizon).abs() <= 1e-12 * horizon);
            prop_assert!(steps.iter().all(|&s| s > 0.0));
            prop_assert!(p.ratio_profile().values.iter().all(|&v| v > 0.0));
        }
    }
}
