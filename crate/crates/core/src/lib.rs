//! Spatial user separability for distributed massive MIMO channels.
//!
//! The crate synthesizes or loads multi-user channel tensors indexed
//! `(snapshot, subcarrier, user, antenna)`, normalizes them per user,
//! slices antenna subarrays for a chosen access-point topology and
//! evaluates:
//!
//! - singular value spread ([`metrics::svs`]),
//! - DPC sum capacity via sum-power iterative water-filling ([`metrics::dpc_capacity`]),
//! - ZF-precoded sum rate via water-filling ([`metrics::zf_sum_rate`]),
//! - the number of users that receive power ([`metrics::count_allocated_users`]).
//!
//! [`experiment::run_experiment`] drives seeded Monte-Carlo sweeps over
//! antenna count, AP count, SNR and user count. See the `examples/`
//! directory for one runnable program per capability.

pub mod config;
pub mod error;
pub mod experiment;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod prep;
pub mod rng;
pub mod stats;
pub mod synth;
pub mod tensor;
pub mod validation;

pub use error::{Error, Result};
pub use linalg::{singular_values, zf_effective_gains};
pub use metrics::{
    count_allocated_users, dpc_capacity, svs, waterfill, zf_sum_rate, AllocationMode, CapacityResult, PowerAllocation,
    SnrSpec, Svs,
};
pub use prep::{normalize, select_subarray, NormalizedTensor, Topology};
pub use rng::RngHandle;
pub use synth::{gen_geometric, gen_iid_rayleigh, gen_trajectory_users, Scene, ScenePreset, UserLayout};
pub use tensor::{ChannelTensor, Dims, SnapshotMatrix};
