//! Shared oracles for the integration suites: a dense symmetric eigensolver
//! (cyclic Jacobi) and a normal CDF for distributional checks.  These stay
//! independent of the library's computation paths on purpose.

use orey::SquareMat;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
#[allow(dead_code)]
pub fn jacobi_eigenvalues(a: &SquareMat<f64>) -> Vec<f64> {
    let n = a.n();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let frob: f64 = m
        .iter()
        .flat_map(|r| r.iter().map(|v| v * v))
        .sum::<f64>()
        .sqrt()
        .max(1e-300);
    for _sweep in 0..300 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i][j] * m[i][j];
            }
        }
        if off.sqrt() <= 1e-13 * frob {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[i][i]).collect()
}

#[allow(dead_code)]
pub fn max_eigenvalue(a: &SquareMat<f64>) -> f64 {
    jacobi_eigenvalues(a).into_iter().fold(f64::NEG_INFINITY, f64::max)
}

#[allow(dead_code)]
pub fn min_eigenvalue(a: &SquareMat<f64>) -> f64 {
    jacobi_eigenvalues(a).into_iter().fold(f64::INFINITY, f64::min)
}

/// Standard normal CDF via the Abramowitz-Stegun erf approximation
/// (absolute error below 1.5e-7, plenty for KS checks).
#[allow(dead_code)]
pub fn std_normal_cdf(x: f64) -> f64 {
    let z = x / std::f64::consts::SQRT_2;
    0.5 * (1.0 + erf(z))
}

#[allow(dead_code)]
fn erf(z: f64) -> f64 {
    let sign = z.signum();
    let z = z.abs();
    let t = 1.0 / (1.0 + 0.3275911 * z);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-z * z).exp())
}

/// Asymptotic Kolmogorov-Smirnov p-value for statistic `d` on `n` samples.
#[allow(dead_code)]
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let nf = n as f64;
    let lambda = (nf.sqrt() + 0.12 + 0.11 / nf.sqrt()) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = 2.0 * (-2.0 * kf * kf * lambda * lambda).exp();
        p += if k % 2 == 1 { term } else { -term };
    }
    p.clamp(0.0, 1.0)
}
