//! Overhead prediction, policy assignment and co-scheduling simulation for GPU memory
//! management on integrated CPU/GPU platforms.
//!
//! Three policies are modeled: Device (explicit copies, doubled footprint), Managed (page
//! mapping and cache maintenance at kernel boundaries) and Host-Pinned (uncached shared
//! memory). [`model`] predicts each policy's overhead from profiling counters, [`assigner`]
//! converts device tasks whose extra overhead can be hidden by overlap, and [`sim`] replays a
//! workload on one GPU, overlapping device kernels with the mapping stalls of the others.

pub mod assigner;
pub mod error;
pub mod fixtures;
pub mod model;
pub mod profiles;
pub mod sim;

pub use assigner::{assign_policies, guideline1_eligible, recoverable_portion, PolicyAssignment};
pub use error::{ProfileError, SimError};
pub use model::{best_policy, predict_response, Policy, PolicyOverheads};
pub use profiles::{
    fit_transfer_params, load_platform_profile, load_workload, KernelProfile, PlatformProfile,
    TaskProfile, Workload, WorkloadTrace,
};
pub use sim::{simulate, Mode, PairingRule, SimReport, Timeline};
