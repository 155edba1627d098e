//! Analytical overhead model for the three memory-management policies.
//!
//! Overhead is the response time of a task minus its pure GPU execution time. Under the
//! device policy it is the synchronous copy cost; under the managed policy it is page mapping
//! plus cache maintenance at kernel launch and completion; under the host-pinned policy it is
//! page mapping plus the latency of L2 hits that become main-memory accesses.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::profiles::{Millis, PlatformProfile, TaskProfile};

/// GPU memory-management policy. Declaration order is the tie-break preference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Policy {
    /// Explicit copies between separate host and device regions.
    Device,
    /// One managed allocation mapped into the GPU address space.
    Managed,
    /// Shared uncached allocation.
    HostPinned,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::Device, Policy::Managed, Policy::HostPinned];

    pub fn short_name(self) -> &'static str {
        match self {
            Policy::Device => "D",
            Policy::Managed => "M",
            Policy::HostPinned => "H",
        }
    }

    /// Copies of shared data resident under this policy.
    pub fn footprint_factor(self) -> f64 {
        match self {
            Policy::Device => 2.0,
            Policy::Managed | Policy::HostPinned => 1.0,
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "d" | "device" => Ok(Policy::Device),
            "m" | "managed" => Ok(Policy::Managed),
            "h" | "hostpinned" | "host-pinned" => Ok(Policy::HostPinned),
            other => Err(format!("unknown policy `{other}`")),
        }
    }
}

/// Every model term for one task on one platform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolicyOverheads {
    pub o_d: Millis,
    pub o_m: Millis,
    pub o_h: Millis,
    /// Launch overhead under the managed policy.
    pub t_l: Millis,
    /// Completion (writeback) overhead under the managed policy.
    pub t_s: Millis,
    /// Cache-miss penalty under the host-pinned policy.
    pub t_c: Millis,
    /// Overlappable GPU stall while pages are mapped.
    pub idle: Millis,
}

impl PolicyOverheads {
    pub fn of(&self, policy: Policy) -> Millis {
        match policy {
            Policy::Device => self.o_d,
            Policy::Managed => self.o_m,
            Policy::HostPinned => self.o_h,
        }
    }
}

/// Synchronous copy overhead under the device policy.
pub fn overhead_device(task: &TaskProfile, p: &PlatformProfile) -> Millis {
    let init = if task.first_touch { p.l_ini } else { 0.0 };
    task.n_memcpy as f64 * p.tr_ini + (p.l_dh + init) * task.bytes_dh + p.l_hd * task.bytes_hd
}

/// Mapping plus CPU cache flush for every launch that finds host-dirty data.
pub fn launch_overhead(task: &TaskProfile, p: &PlatformProfile) -> Millis {
    task.dirty_kernels().map(|k| k.data_size * p.l_mapping + p.ca_cpu).sum()
}

/// Writeback at kernel completion, each kernel capped at one full GPU cache flush.
pub fn completion_overhead(task: &TaskProfile, p: &PlatformProfile) -> Millis {
    let sum: Millis = task.kernels.iter().map(|k| (k.bytes_written * p.l_writeback).min(p.ca_gpu)).sum();
    // summing many saturated terms can round a few ulps past the per-kernel cap
    sum.min(task.kernels.len() as f64 * p.ca_gpu)
}

pub fn overhead_managed(task: &TaskProfile, p: &PlatformProfile) -> Millis {
    launch_overhead(task, p) + completion_overhead(task, p)
}

/// Penalty of losing the L2 under the host-pinned policy.
///
/// The task-level L2 instruction count is spread over kernels in proportion to their execution
/// time (evenly when all kernels take zero time); kernels whose memory latency is hidden by the
/// pipeline contribute nothing.
pub fn cache_penalty(task: &TaskProfile, p: &PlatformProfile) -> Millis {
    let total_exec = task.total_exec_time();
    let even_share = 1.0 / task.kernels.len() as f64;
    let penalty = p.miss_penalty();
    let weighted: f64 = task
        .kernels
        .iter()
        .filter(|k| !k.latency_hidden())
        .map(|k| {
            let share = if total_exec > 0.0 { k.exec_time / total_exec } else { even_share };
            share * penalty
        })
        .sum();
    task.l2_hit_rate * task.n_l2 as f64 * weighted
}

/// Mapping cost of every kernel plus the cache-miss penalty.
pub fn overhead_hostpinned(task: &TaskProfile, p: &PlatformProfile) -> Millis {
    cache_penalty(task, p) + host_pinned_mapping(task, p)
}

/// Mapping component of the launch overhead: the GPU stalls but no cache maintenance runs.
pub fn idle_period(task: &TaskProfile, p: &PlatformProfile) -> Millis {
    task.dirty_kernels().map(|k| k.data_size * p.l_mapping).sum()
}

fn host_pinned_mapping(task: &TaskProfile, p: &PlatformProfile) -> Millis {
    task.kernels.iter().map(|k| k.data_size * p.l_mapping).sum()
}

/// Length of the overlappable stall a task shows when dispatched under `policy`.
pub fn mapping_stall(task: &TaskProfile, p: &PlatformProfile, policy: Policy) -> Millis {
    match policy {
        Policy::Device => 0.0,
        Policy::Managed => idle_period(task, p),
        Policy::HostPinned => host_pinned_mapping(task, p),
    }
}

pub fn overhead(task: &TaskProfile, p: &PlatformProfile, policy: Policy) -> Millis {
    match policy {
        Policy::Device => overhead_device(task, p),
        Policy::Managed => overhead_managed(task, p),
        Policy::HostPinned => overhead_hostpinned(task, p),
    }
}

/// Pure execution time plus the overhead of `policy`.
pub fn predict_response(task: &TaskProfile, p: &PlatformProfile, policy: Policy) -> Millis {
    task.total_exec_time() + overhead(task, p, policy)
}

pub fn overheads(task: &TaskProfile, p: &PlatformProfile) -> PolicyOverheads {
    let t_l = launch_overhead(task, p);
    let t_s = completion_overhead(task, p);
    let t_c = cache_penalty(task, p);
    PolicyOverheads {
        o_d: overhead_device(task, p),
        o_m: t_l + t_s,
        o_h: t_c + host_pinned_mapping(task, p),
        t_l,
        t_s,
        t_c,
        idle: idle_period(task, p),
    }
}

/// Policy with the smallest overhead; ties go to Device, then Managed.
pub fn best_policy(task: &TaskProfile, p: &PlatformProfile) -> (Policy, PolicyOverheads) {
    let ov = overheads(task, p);
    let mut best = Policy::Device;
    for policy in [Policy::Managed, Policy::HostPinned] {
        if ov.of(policy) < ov.of(best) {
            best = policy;
        }
    }
    (best, ov)
}
