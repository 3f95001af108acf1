//! Exact simulation of five Gaussian process families, second-order
//! quadratic variations along regular and irregular partitions, scaling
//! diagnostics for the incremental variance, and a two-scale estimator of
//! the roughness index from discrete path observations.
//!
//! All numerics are generic over the scalar type (see [`scalar::Scalar`]);
//! the `*64` aliases below fix `f64`, which is what the experiment CLI uses.

pub mod conditions;
pub mod error;
pub mod estimator;
pub mod gaussmodel;
mod linalg;
pub mod partition;
pub mod quadvar;
pub mod sampler;
pub mod scalar;

pub use error::{OreyError, Result};
pub use gaussmodel::{OreyProfile, ProcessSpec};
pub use linalg::SquareMat;
pub use partition::{MeshStats, Partition, RatioProfile};
pub use estimator::{EstimateResult, McSummary};
pub use quadvar::DMatrix;
pub use sampler::{Path, PathSampler, SampleMethod, SeedPolicy};
pub use scalar::{SampleScalar, Scalar};

/// Default scalar for experiments.
pub type Real = f64;

pub type ProcessSpec64 = ProcessSpec<Real>;
pub type OreyProfile64 = OreyProfile<Real>;
pub type Partition64 = Partition<Real>;
pub type Path64 = Path<Real>;
pub type DMatrix64 = DMatrix<Real>;
