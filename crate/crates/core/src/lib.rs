//! Simulation and least-squares modeling attacks on optical physical
//! unclonable functions.
//!
//! - [`pufsim`]: linear and weakly nonlinear transmission-matrix PUFs, noise models,
//!   and orientation counting for non-integrated readers.
//! - [`features`]: monomial expansion that turns the intensity response into a linear model.
//! - [`learner`]: whitening, per-pixel least squares, and PAC evaluation.
//! - [`bounds`]: sample-complexity and concentration bounds with Monte Carlo checks.
//! - [`lwe`]: the same solver against LWE-style samples with and without reduction mod `p`.
//!
//! Trial loops run on rayon when the `parallel` feature is enabled (the default).

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bounds;
pub mod error;
pub mod experiment;
pub mod features;
pub mod learner;
pub mod linalg;
pub mod lwe;
pub mod par;
pub mod pufsim;

pub use error::{Error, Result};
pub use features::{feature_dim, FeatureVector, MonomialBasis};
pub use learner::{fit, pac_evaluate, whiten, CrpSet, LearnedModel, PacReport, WhiteningMap};
pub use pufsim::{ChallengeDistribution, LinearPuf, NoiseModel, NonlinearPuf, OpticalPuf, Puf};
