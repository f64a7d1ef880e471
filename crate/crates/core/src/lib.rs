//! Decentralized primal-dual optimization of `Σ f_i(x) + g(x)` over a
//! network of agents, with gradient, Newton and BFGS primal updates.

pub mod analysis;
pub mod curvature;
pub mod druid_async;
pub mod druid_sync;
pub mod error;
pub mod harness;
pub mod problems;
pub mod topology;

pub use curvature::{Hyperparams, Scheme};
pub use druid_async::{ActivationMode, ActivationRecord, ActivationSampler, InactiveDual};
pub use druid_sync::{Druid, NetworkState};
pub use error::{DruidError, Result};
pub use problems::{LocalObjective, LossKind, Problem, Regularizer};
pub use topology::Graph;
