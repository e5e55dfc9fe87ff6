//! Distributed kernelized UCB (DK-UCB) user association for mmWave vehicular
//! networks.
//!
//! Every vehicle runs a contextual bandit over the base stations in range. The
//! reward of a base station is estimated by kernel ridge regression over past
//! `(context, rate)` pairs using a composite kernel built from blockage, path
//! loss, Doppler and interference similarities. Vehicles share data through
//! base stations only when an information-gain trigger fires, and only the
//! part of the base-station pool near the vehicle's current location is sent
//! back.
//!
//! The crate is `no_std` (with `alloc`). Everything here is pure computation:
//! configuration files, CSV/JSON output and the CLI live in `dkucb-sim`.
//!
//! Modules, bottom-up:
//!
//! | module | contents |
//! |---|---|
//! | [`kernel`] | component kernels, composite kernel, kernel matrices |
//! | [`linalg`] | dense Cholesky with jitter escalation, ridge log-determinant |
//! | [`estimator`] | kernel ridge mean / deviation, cached per-arm factor |
//! | [`agent`] | sample stores, candidate sets, UCB arm selection |
//! | [`sync`] | trigger event, context subspace, base-station pools, ledger |
//! | [`env`] | mobility, channel, interference, rate, counterfactual best arm |
//! | [`baselines`] | policy interface, brute force, WCS, hypercube UCB, Gaussian, random |
//! | [`harness`] | seeded runner and metrics |
#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![warn(missing_docs)]

extern crate alloc;

mod math;

pub mod agent;
pub mod baselines;
pub mod context;
pub mod env;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod harness;
pub mod kernel;
pub mod linalg;
pub mod sync;

pub use context::Context;
pub use error::{Error, Result};
pub use kernel::{CompositeKernel, GaussianKernel, KernelFn, KernelParams};
