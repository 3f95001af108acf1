//! Quadrature machinery for the fractional Ornstein-Uhlenbeck process.
//!
//! The process solves `X_t = x0 - mu * int_0^t X_s ds + theta * B^H_t` and
//! has the explicit form `X_t = x0 e^{-mu t} + theta int_0^t e^{-mu(t-u)}
//! dB^H_u`.  Integrating by parts removes the stochastic integral:
//!
//! ```text
//! X_t = x0 e^{-mu t} + theta [ B^H_t - mu * int_0^t e^{-mu(t-u)} B^H_u du ].
//! ```
//!
//! Everything here discretizes that last integral with the trapezoid rule on
//! a grid `refine` times finer than the request.  The same linear map is
//! used for sampling paths and for covariance matrices, so sampled paths and
//! computed second moments agree by construction, and every covariance
//! matrix produced is a Gram matrix of the fBm kernel (hence PSD up to
//! roundoff).

use rayon::prelude::*;

use crate::linalg::SquareMat;
use crate::scalar::{abs_pow, Scalar};

#[derive(Debug, Clone, Copy)]
pub(crate) struct OuParams<F> {
    pub hurst: F,
    pub mu: F,
    pub theta: F,
    pub x0: F,
    pub refine: usize,
}

/// Refined integration grid over `[0, max(times)]` carrying the trapezoid
/// weights and exponential factors of the integration-by-parts map.
#[derive(Debug, Clone)]
pub(crate) struct OuGrid<F> {
    /// Nodes `u_0 = 0 < u_1 < ... < u_M`; request times appear verbatim.
    pub nodes: Vec<F>,
    /// Index of each request time inside `nodes`.
    pub request: Vec<usize>,
    /// Full trapezoid weights `(u_{l+1} - u_{l-1}) / 2` (one-sided at the ends).
    weights: Vec<F>,
    /// `exp(mu * u_l)` per node.
    pub exp_pos: Vec<F>,
    /// `exp(-mu * t_i)` per request time.
    pub exp_neg: Vec<F>,
}

impl<F: Scalar> OuGrid<F> {
    /// `times` must be strictly increasing and nonnegative.
    pub fn new(mu: F, refine: usize, times: &[F]) -> Self {
        let refine = refine.max(1);
        let mut nodes = vec![F::zero()];
        let mut request = Vec::with_capacity(times.len());
        for &t in times {
            let prev = *nodes.last().unwrap();
            if t == prev {
                request.push(nodes.len() - 1);
                continue;
            }
            let gap = t - prev;
            for j in 1..refine {
                nodes.push(prev + gap * (F::of_usize(j) / F::of_usize(refine)));
            }
            nodes.push(t);
            request.push(nodes.len() - 1);
        }
        let m = nodes.len() - 1;
        let half = F::of(0.5);
        let weights = (0..=m)
            .map(|l| {
                let right = if l < m { nodes[l + 1] } else { nodes[l] };
                let left = if l > 0 { nodes[l - 1] } else { nodes[l] };
                half * (right - left)
            })
            .collect();
        let exp_pos = nodes.iter().map(|&u| (mu * u).exp()).collect();
        let exp_neg = times.iter().map(|&t| (-mu * t).exp()).collect();
        Self {
            nodes,
            request,
            weights,
            exp_pos,
            exp_neg,
        }
    }

    /// Trapezoid values of `int_0^{t_i} f(u) du` for every request time, in
    /// one prefix sweep over the nodes.
    pub fn integral_at_requests(&self, f: &[F]) -> Vec<F> {
        let m = self.nodes.len() - 1;
        let half = F::of(0.5);
        let mut out = Vec::with_capacity(self.request.len());
        let mut prefix = F::zero();
        let mut next = 0;
        for l in 0..=m {
            prefix += self.weights[l] * f[l];
            while next < self.request.len() && self.request[next] == l {
                // The running sum uses the full center weight at node l; an
                // integral ending at l only gets the left half-step.
                let v = if l == m {
                    prefix
                } else {
                    prefix - half * (self.nodes[l + 1] - self.nodes[l]) * f[l]
                };
                out.push(v);
                next += 1;
            }
        }
        debug_assert_eq!(out.len(), self.request.len());
        out
    }
}

/// Path values at the request times given a driving fBm sampled on the
/// refined nodes.  Returns the *uncentered* process (mean `x0 e^{-mu t}`).
pub(crate) fn path_from_driver<F: Scalar>(p: &OuParams<F>, grid: &OuGrid<F>, driver: &[F]) -> Vec<F> {
    debug_assert_eq!(driver.len(), grid.nodes.len());
    let f: Vec<F> = driver
        .iter()
        .zip(&grid.exp_pos)
        .map(|(&b, &e)| e * b)
        .collect();
    let traps = grid.integral_at_requests(&f);
    grid.request
        .iter()
        .zip(grid.exp_neg.iter().zip(&traps))
        .map(|(&g, (&en, &tr))| p.x0 * en + p.theta * (driver[g] - p.mu * en * tr))
        .collect()
}

/// Covariance matrix of the centered discretized process at the request
/// times: `theta^2 * A C_B A^T` with `C_B` the fBm covariance on the refined
/// nodes and `A` the trapezoid integration-by-parts map.
pub(crate) fn covariance_matrix<F: Scalar>(p: &OuParams<F>, times: &[F]) -> SquareMat<F> {
    let n = times.len();
    let grid = OuGrid::new(p.mu, p.refine, times);
    let m1 = grid.nodes.len();
    let two_h = p.hurst + p.hurst;
    let half = F::of(0.5);
    let upow: Vec<F> = grid.nodes.iter().map(|&u| abs_pow(u, two_h)).collect();

    // First pass: G = C_B A^T, one fBm kernel row at a time.
    let mut g = vec![F::zero(); m1 * n];
    g.par_chunks_mut(n).enumerate().for_each(|(j, grow)| {
        let mut row = vec![F::zero(); m1];
        let mut f = vec![F::zero(); m1];
        for l in 0..m1 {
            let r = half * (upow[j] + upow[l] - abs_pow(grid.nodes[j] - grid.nodes[l], two_h));
            row[l] = r;
            f[l] = grid.exp_pos[l] * r;
        }
        let traps = grid.integral_at_requests(&f);
        for i in 0..n {
            grow[i] = row[grid.request[i]] - p.mu * grid.exp_neg[i] * traps[i];
        }
    });

    // Transpose so the second pass walks columns of G contiguously.
    let mut gt = vec![F::zero(); n * m1];
    for l in 0..m1 {
        for i in 0..n {
            gt[i * m1 + l] = g[l * n + i];
        }
    }
    drop(g);

    // Second pass: C = A G, column by column.
    let theta2 = p.theta * p.theta;
    let mut cols: Vec<Vec<F>> = Vec::with_capacity(n);
    gt.par_chunks(m1)
        .map(|col| {
            let f: Vec<F> = col
                .iter()
                .zip(&grid.exp_pos)
                .map(|(&v, &e)| e * v)
                .collect();
            let traps = grid.integral_at_requests(&f);
            (0..n)
                .map(|i| {
                    theta2
                        * (col[grid.request[i]] - p.mu * grid.exp_neg[i] * traps[i])
                })
                .collect::<Vec<F>>()
        })
        .collect_into_vec(&mut cols);

    let mut c = SquareMat::zeros(n);
    for (ic, col) in cols.iter().enumerate() {
        for i in 0..n {
            c.set(i, ic, col[i]);
        }
    }
    c.symmetrize();
    c
}

/// `E[X(t) - X(s)]^2` for the centered process, evaluated in increment form
/// so quadrature error scales with the increment rather than with the
/// process magnitude.
///
/// Writing `Y = int_0^s e^{-mu(s-u)} B_u du`, `Z = int_s^t e^{-mu(t-u)} B_u
/// du` and `q = e^{-mu(t-s)} - 1`, the centered increment is
/// `theta * [B_t - B_s - mu (q Y + Z)]` and its second moment expands over
/// the fBm covariance `R`.
pub(crate) fn incremental_variance<F: Scalar>(p: &OuParams<F>, s: F, t: F) -> F {
    let (s, t) = if s <= t { (s, t) } else { (t, s) };
    if s == t {
        return F::zero();
    }
    let two_h = p.hurst + p.hurst;
    let mu = p.mu;
    let half = F::of(0.5);
    let h = t - s;
    let base = abs_pow(h, two_h);
    let sp = abs_pow(s, two_h);
    let tp = abs_pow(t, two_h);
    // R(u, t) - R(u, s), smooth in u except for the |.|^{2H} kinks.
    let delta_r = |u: F, upw: F| -> F {
        let _ = upw;
        half * (tp - sp - abs_pow(u - t, two_h) + abs_pow(u - s, two_h))
    };
    let r = |u: F, upw: F, v: F, vpw: F| -> F { half * (upw + vpw - abs_pow(u - v, two_h)) };

    let scale = p.refine.max(8);
    let (n1, n2) = if s > F::zero() {
        (8 * scale, 4 * scale)
    } else {
        // Origin increments feed variances; spend more nodes there.
        (0, 32 * scale)
    };

    // Nodes, powers, discount factors and trapezoid weights on [0, s].
    let a: Vec<F> = (0..=n1)
        .map(|i| s * (F::of_usize(i) / F::of_usize(n1.max(1))))
        .collect();
    let apow: Vec<F> = a.iter().map(|&u| abs_pow(u, two_h)).collect();
    let aexp: Vec<F> = a.iter().map(|&u| (-mu * (s - u)).exp()).collect();
    let astep = if n1 > 0 { s / F::of_usize(n1) } else { F::zero() };
    let aw = |i: usize| {
        if i == 0 || i == n1 {
            half * astep
        } else {
            astep
        }
    };
    // Same on [s, t].
    let b: Vec<F> = (0..=n2)
        .map(|j| s + h * (F::of_usize(j) / F::of_usize(n2)))
        .collect();
    let bpow: Vec<F> = b.iter().map(|&v| abs_pow(v, two_h)).collect();
    let bexp: Vec<F> = b.iter().map(|&v| (-mu * (t - v)).exp()).collect();
    let bstep = h / F::of_usize(n2);
    let bw = |j: usize| {
        if j == 0 || j == n2 {
            half * bstep
        } else {
            bstep
        }
    };

    let mut eby = F::zero(); // E[(B_t - B_s) Y]
    let mut eyy = F::zero(); // E[Y^2]
    let mut eyz = F::zero(); // E[Y Z]
    if n1 > 0 {
        for i in 0..=n1 {
            let wi = aw(i) * aexp[i];
            eby += wi * delta_r(a[i], apow[i]);
            let mut inner = F::zero();
            for k in 0..=n1 {
                inner += aw(k) * aexp[k] * r(a[i], apow[i], a[k], apow[k]);
            }
            eyy += wi * inner;
            let mut cross = F::zero();
            for j in 0..=n2 {
                cross += bw(j) * bexp[j] * r(a[i], apow[i], b[j], bpow[j]);
            }
            eyz += wi * cross;
        }
    }
    let mut ebz = F::zero(); // E[(B_t - B_s) Z]
    let mut ezz = F::zero(); // E[Z^2]
    for j in 0..=n2 {
        let wj = bw(j) * bexp[j];
        ebz += wj * delta_r(b[j], bpow[j]);
        let mut inner = F::zero();
        for k in 0..=n2 {
            inner += bw(k) * bexp[k] * r(b[j], bpow[j], b[k], bpow[k]);
        }
        ezz += wj * inner;
    }

    let q = (-mu * h).exp_m1();
    let v = base - (mu + mu) * (q * eby + ebz)
        + mu * mu * (q * q * eyy + (q + q) * eyz + ezz);
    p.theta * p.theta * v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(hurst: f64, mu: f64, theta: f64) -> OuParams<f64> {
        OuParams {
            hurst,
            mu,
            theta,
            x0: 0.0,
            refine: 8,
        }
    }

    #[test]
    fn grid_refines_and_keeps_request_times() {
        let times = [0.0, 0.25, 0.5, 1.0];
        let grid = OuGrid::new(1.0, 4, &times);
        assert_eq!(grid.nodes.len(), 13);
        for (i, &t) in times.iter().enumerate() {
            assert_eq!(grid.nodes[grid.request[i]], t);
        }
    }

    #[test]
    fn trapezoid_prefix_matches_direct_rule() {
        let times = [0.3, 0.7, 1.0];
        let grid = OuGrid::new(0.0, 5, &times);
        // f(u) = u^2; direct trapezoid over nodes up to each request
        let f: Vec<f64> = grid.nodes.iter().map(|u| u * u).collect();
        let got = grid.integral_at_requests(&f);
        for (i, &gi) in grid.request.iter().enumerate() {
            let mut direct = 0.0;
            for l in 1..=gi {
                direct += 0.5 * (f[l] + f[l - 1]) * (grid.nodes[l] - grid.nodes[l - 1]);
            }
            assert!((got[i] - direct).abs() < 1e-15, "{} vs {}", got[i], direct);
        }
    }

    #[test]
    fn tiny_mu_reduces_to_fbm_variance() {
        let p = params(0.7, 1e-12, 1.3);
        for &(s, t) in &[(0.0, 0.5), (0.2, 0.9), (0.5, 0.6)] {
            let v = incremental_variance(&p, s, t);
            let fbm = 1.3f64.powi(2) * (t - s as f64).abs().powf(1.4);
            assert!((v - fbm).abs() < 1e-9, "{v} vs {fbm}");
        }
    }

    #[test]
    fn brownian_case_matches_ou_closed_form() {
        // H = 1/2: Var X_t = theta^2 (1 - e^{-2 mu t}) / (2 mu).
        let p = params(0.5, 2.0, 1.5);
        for &t in &[0.3, 1.0, 2.5] {
            let v = incremental_variance(&p, 0.0, t);
            let expect = 1.5f64.powi(2) * (1.0 - (-4.0 * t).exp()) / 4.0;
            // trapezoid bias only
            assert!(
                (v - expect).abs() < 1e-3 * expect,
                "t={t}: {v} vs {expect}"
            );
        }
    }

    #[test]
    fn covariance_matrix_matches_brownian_ou() {
        // Exact covariance for H = 1/2:
        // c(s,t) = theta^2 e^{-mu(s+t)} (e^{2 mu min} - 1) / (2 mu).
        let p = params(0.5, 1.0, 1.0);
        let times = [0.0, 0.25, 0.5, 0.75, 1.0];
        let c = covariance_matrix(&p, &times);
        for i in 0..times.len() {
            for j in 0..times.len() {
                let (s, t) = (times[i], times[j]);
                let expect = (-(s + t)).exp() * ((2.0 * s.min(t)).exp() - 1.0) / 2.0;
                assert!(
                    (c.get(i, j) - expect).abs() < 5e-4,
                    "({s},{t}): {} vs {expect}",
                    c.get(i, j)
                );
            }
        }
    }

    #[test]
    fn covariance_matrix_is_symmetric_with_zero_first_row() {
        let p = params(0.7, 1.5, 2.0);
        let times = [0.0, 0.2, 0.4, 0.9, 1.0];
        let c = covariance_matrix(&p, &times);
        for i in 0..times.len() {
            assert_eq!(c.get(0, i), 0.0);
            for j in 0..times.len() {
                assert_eq!(c.get(i, j), c.get(j, i));
            }
        }
        for i in 1..times.len() {
            assert!(c.get(i, i) > 0.0);
        }
    }

    #[test]
    fn grid_covariance_agrees_with_increment_quadrature() {
        // Two independent discretizations of the same object; they agree to
        // quadrature accuracy, not machine precision.
        let p = params(0.6, 1.0, 1.0);
        let times = [0.0, 0.25, 0.5, 0.75, 1.0];
        let c = covariance_matrix(&p, &times);
        for i in 1..times.len() {
            for j in i..times.len() {
                let (s, t) = (times[i], times[j]);
                let vs = incremental_variance(&p, 0.0, s);
                let vt = incremental_variance(&p, 0.0, t);
                let inc = incremental_variance(&p, s, t);
                let pair = 0.5 * (vs + vt - inc);
                assert!(
                    (c.get(i, j) - pair).abs() < 2e-3 * pair.abs().max(0.1),
                    "({s},{t}): {} vs {pair}",
                    c.get(i, j)
                );
            }
        }
    }
}
