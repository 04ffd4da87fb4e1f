//! Ridge regression with fake and missing features.
//!
//! The data are generated by `y = A_S·x_S + A_C·x_C + v` while the model is
//! fit on `[A_F, A_S]`, where `A_F` holds *fake* features unrelated to `y`
//! and `A_C` holds *missing* features the model never sees. The crate draws
//! such problems reproducibly, solves them in closed form, computes the exact
//! generalization error, evaluates a high-probability upper bound on it, and
//! runs Monte Carlo sweeps over λ and the number of fake features.

pub mod bound;
pub mod datagen;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod metrics;
pub mod model;
pub mod planfile;
pub mod plot;
pub mod report;

pub use error::{Error, Result};
pub use model::{Dataset, Estimate, GroundTruth, ProblemConfig};
