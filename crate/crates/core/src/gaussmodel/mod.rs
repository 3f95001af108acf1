//! Covariance kernels, incremental-variance functions and scaling profiles
//! for the five Gaussian process families.
//!
//! Four families have closed-form kernels.  The fractional
//! Ornstein-Uhlenbeck process does not; its covariance is computed by
//! quadrature against the explicit solution (see [`fracou`]).

mod fracou;

pub(crate) use fracou::{path_from_driver as ou_path_from_driver, OuGrid, OuParams};

use crate::error::{OreyError, Result};
use crate::linalg::SquareMat;
use crate::scalar::{abs_pow, Scalar};

/// One of the five Gaussian process families with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProcessSpec<F> {
    /// Fractional Brownian motion with Hurst index `hurst`.
    Fbm { hurst: F },
    /// Sub-fractional Brownian motion.
    SubFbm { hurst: F },
    /// Bifractional Brownian motion with exponents `hurst` and `k`.
    BiFbm { hurst: F, k: F },
    /// Fractional Ornstein-Uhlenbeck process `dX = -mu X dt + theta dB^H`
    /// started at `x0`; `refine` is the internal integration grid multiplier.
    FracOu {
        hurst: F,
        mu: F,
        theta: F,
        x0: F,
        refine: usize,
    },
    /// Fractional Brownian bridge pinned to zero at `horizon`.
    FBridge { hurst: F, horizon: F },
}

/// Scaling profile of a family: incremental standard deviations behave like
/// `kappa * h^gamma` away from the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OreyProfile<F> {
    pub gamma: F,
    pub kappa: F,
}

impl<F: Scalar> ProcessSpec<F> {
    pub fn validate(&self) -> Result<()> {
        let check_unit = |name: &'static str, v: F| -> Result<()> {
            if v > F::zero() && v < F::one() {
                Ok(())
            } else {
                Err(OreyError::InvalidParameter {
                    name,
                    reason: format!("must lie in (0, 1), got {v}"),
                })
            }
        };
        let check_pos = |name: &'static str, v: F| -> Result<()> {
            if v > F::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(OreyError::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                })
            }
        };
        match *self {
            ProcessSpec::Fbm { hurst } | ProcessSpec::SubFbm { hurst } => {
                check_unit("hurst", hurst)
            }
            ProcessSpec::BiFbm { hurst, k } => {
                check_unit("hurst", hurst)?;
                if k > F::zero() && k <= F::one() {
                    Ok(())
                } else {
                    Err(OreyError::InvalidParameter {
                        name: "k",
                        reason: format!("must lie in (0, 1], got {k}"),
                    })
                }
            }
            ProcessSpec::FracOu {
                hurst,
                mu,
                theta,
                x0,
                refine,
            } => {
                check_unit("hurst", hurst)?;
                check_pos("mu", mu)?;
                check_pos("theta", theta)?;
                if !x0.is_finite() {
                    return Err(OreyError::InvalidParameter {
                        name: "x0",
                        reason: "must be finite".into(),
                    });
                }
                if refine < 1 {
                    return Err(OreyError::InvalidParameter {
                        name: "refine",
                        reason: "must be at least 1".into(),
                    });
                }
                Ok(())
            }
            ProcessSpec::FBridge { hurst, horizon } => {
                check_unit("hurst", hurst)?;
                check_pos("horizon", horizon)
            }
        }
    }

    pub fn hurst(&self) -> F {
        match *self {
            ProcessSpec::Fbm { hurst }
            | ProcessSpec::SubFbm { hurst }
            | ProcessSpec::BiFbm { hurst, .. }
            | ProcessSpec::FracOu { hurst, .. }
            | ProcessSpec::FBridge { hurst, .. } => hurst,
        }
    }

    /// `(gamma, kappa)` pair the incremental variance scales with.
    pub fn orey_profile(&self) -> Result<OreyProfile<F>> {
        self.validate()?;
        let one = F::one();
        let half = F::of(0.5);
        Ok(match *self {
            ProcessSpec::Fbm { hurst }
            | ProcessSpec::SubFbm { hurst }
            | ProcessSpec::FBridge { hurst, .. } => OreyProfile {
                gamma: hurst,
                kappa: one,
            },
            ProcessSpec::BiFbm { hurst, k } => OreyProfile {
                gamma: hurst * k,
                kappa: F::of(2.0).powf((one - k) * half),
            },
            ProcessSpec::FracOu { hurst, theta, .. } => OreyProfile {
                gamma: hurst,
                kappa: theta,
            },
        })
    }

    /// Covariance of the centered process at `(s, t)`.
    pub fn covariance(&self, s: F, t: F) -> Result<F> {
        self.validate()?;
        self.check_times(&[s, t])?;
        Ok(match *self {
            ProcessSpec::Fbm { hurst } => fbm_cov(hurst, s, t),
            ProcessSpec::SubFbm { hurst } => subfbm_cov(hurst, s, t),
            ProcessSpec::BiFbm { hurst, k } => bifbm_cov(hurst, k, s, t),
            ProcessSpec::FBridge { hurst, horizon } => bridge_cov(hurst, horizon, s, t),
            ProcessSpec::FracOu { .. } => {
                // No closed form: derive from incremental variances so the
                // bilinear identity sigma^2 = C(s,s) + C(t,t) - 2 C(s,t)
                // holds exactly.
                let p = self.ou_params();
                let half = F::of(0.5);
                if s == t {
                    fracou::incremental_variance(&p, F::zero(), t)
                } else {
                    let vs = fracou::incremental_variance(&p, F::zero(), s);
                    let vt = fracou::incremental_variance(&p, F::zero(), t);
                    let inc = fracou::incremental_variance(&p, s, t);
                    half * (vs + vt - inc)
                }
            }
        })
    }

    /// `E[X(t) - X(s)]^2`, via the closed forms where they exist.
    pub fn incremental_variance(&self, s: F, t: F) -> Result<F> {
        self.validate()?;
        self.check_times(&[s, t])?;
        // Canonical argument order keeps the result bit-identical under swap.
        let (s, t) = if s <= t { (s, t) } else { (t, s) };
        let v = match *self {
            ProcessSpec::Fbm { hurst } => abs_pow(t - s, hurst + hurst),
            ProcessSpec::SubFbm { hurst } => subfbm_increment_var(hurst, s, t),
            ProcessSpec::BiFbm { hurst, k } => bifbm_increment_var(hurst, k, s, t),
            ProcessSpec::FBridge { hurst, horizon } => bridge_increment_var(hurst, horizon, s, t),
            ProcessSpec::FracOu { .. } => fracou::incremental_variance(&self.ou_params(), s, t),
        };
        Ok(v.max(F::zero()))
    }

    /// Incremental standard deviation `sigma_X(s, t)`.
    pub fn incremental_sd(&self, s: F, t: F) -> Result<F> {
        Ok(self.incremental_variance(s, t)?.sqrt())
    }

    /// Covariance matrix of the centered process on a strictly increasing
    /// grid.  For the Ornstein-Uhlenbeck family this is the covariance of
    /// the quadrature-discretized solution, so it agrees with the sampler
    /// by construction and is a Gram matrix.
    pub fn covariance_matrix(&self, times: &[F]) -> Result<SquareMat<F>> {
        self.validate()?;
        self.check_times(times)?;
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(OreyError::Domain(
                    "covariance grid must be strictly increasing".into(),
                ));
            }
        }
        Ok(match *self {
            ProcessSpec::FracOu { .. } => fracou::covariance_matrix(&self.ou_params(), times),
            _ => SquareMat::from_symmetric_fn(times.len(), |i, j| {
                self.cov_closed(times[i], times[j])
            }),
        })
    }

    /// Limit constant of the normalized second-difference variance for the
    /// `kappa = 1` self-similar families.
    pub fn g0_function(&self, t: F) -> Result<F> {
        self.validate()?;
        if !(t > F::zero()) {
            return Err(OreyError::Domain(format!(
                "g0 is defined for interior times, got t = {t}"
            )));
        }
        match *self {
            ProcessSpec::Fbm { hurst } | ProcessSpec::SubFbm { hurst } => {
                Ok(F::of(4.0) - F::of(2.0).powf(hurst + hurst))
            }
            _ => Err(OreyError::NotAvailable(
                "g0 is only derived for the fBm and sub-fractional families".into(),
            )),
        }
    }

    fn cov_closed(&self, s: F, t: F) -> F {
        match *self {
            ProcessSpec::Fbm { hurst } => fbm_cov(hurst, s, t),
            ProcessSpec::SubFbm { hurst } => subfbm_cov(hurst, s, t),
            ProcessSpec::BiFbm { hurst, k } => bifbm_cov(hurst, k, s, t),
            ProcessSpec::FBridge { hurst, horizon } => bridge_cov(hurst, horizon, s, t),
            ProcessSpec::FracOu { .. } => unreachable!("no closed form for the O-U kernel"),
        }
    }

    pub(crate) fn ou_params(&self) -> OuParams<F> {
        match *self {
            ProcessSpec::FracOu {
                hurst,
                mu,
                theta,
                x0,
                refine,
            } => OuParams {
                hurst,
                mu,
                theta,
                x0,
                refine,
            },
            _ => unreachable!("not an Ornstein-Uhlenbeck spec"),
        }
    }

    fn check_times(&self, times: &[F]) -> Result<()> {
        for &t in times {
            if !(t >= F::zero()) || !t.is_finite() {
                return Err(OreyError::Domain(format!(
                    "times must be finite and nonnegative, got {t}"
                )));
            }
            if let ProcessSpec::FBridge { horizon, .. } = *self {
                if t > horizon {
                    return Err(OreyError::Domain(format!(
                        "bridge time {t} beyond horizon {horizon}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn fbm_cov<F: Scalar>(hurst: F, s: F, t: F) -> F {
    let e = hurst + hurst;
    F::of(0.5) * (abs_pow(s, e) + abs_pow(t, e) - abs_pow(t - s, e))
}

fn subfbm_cov<F: Scalar>(hurst: F, s: F, t: F) -> F {
    let e = hurst + hurst;
    abs_pow(s, e) + abs_pow(t, e) - F::of(0.5) * (abs_pow(s + t, e) + abs_pow(t - s, e))
}

fn bifbm_cov<F: Scalar>(hurst: F, k: F, s: F, t: F) -> F {
    let e = hurst + hurst;
    let scale = F::of(2.0).powf(-k);
    scale * (abs_pow(abs_pow(s, e) + abs_pow(t, e), k) - abs_pow(t - s, e * k))
}

/// `t^{2H} + T^{2H} - |t - T|^{2H}`, the bridge pinning weight numerator.
fn bridge_g<F: Scalar>(hurst: F, horizon: F, t: F) -> F {
    let e = hurst + hurst;
    abs_pow(t, e) + abs_pow(horizon, e) - abs_pow(t - horizon, e)
}

fn bridge_cov<F: Scalar>(hurst: F, horizon: F, s: F, t: F) -> F {
    let e = hurst + hurst;
    let denom = F::of(4.0) * abs_pow(horizon, e);
    fbm_cov(hurst, s, t) - bridge_g(hurst, horizon, s) * bridge_g(hurst, horizon, t) / denom
}

fn subfbm_increment_var<F: Scalar>(hurst: F, s: F, t: F) -> F {
    let e = hurst + hurst;
    abs_pow(t - s, e) + abs_pow(s + t, e)
        - F::of(2.0).powf(e - F::one()) * (abs_pow(t, e) + abs_pow(s, e))
}

fn bifbm_increment_var<F: Scalar>(hurst: F, k: F, s: F, t: F) -> F {
    let e = hurst + hurst;
    let ek = e * k;
    F::of(2.0).powf(F::one() - k)
        * (abs_pow(t - s, ek) - abs_pow(abs_pow(t, e) + abs_pow(s, e), k))
        + abs_pow(t, ek)
        + abs_pow(s, ek)
}

fn bridge_increment_var<F: Scalar>(hurst: F, horizon: F, s: F, t: F) -> F {
    let e = hurst + hurst;
    let df = bridge_g(hurst, horizon, t) - bridge_g(hurst, horizon, s);
    abs_pow(t - s, e) - df * df / (F::of(4.0) * abs_pow(horizon, e))
}
