//! Seeded random platforms and workloads shared by the integration tests.
#![allow(dead_code)]

use memsched::profiles::{Arrival, KernelProfile, PlatformProfile, TaskProfile, Workload, WorkloadTrace};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn log_uniform(rng: &mut TestRng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Reference-like platform with every constant scaled by a factor in [0.5, 2].
pub fn platform(rng: &mut TestRng) -> PlatformProfile {
    let mut s = || rng.gen_range(0.5..2.0);
    let l_mem_access = 1e-4 * s();
    let l_gcache_access = 2e-5 * s();
    PlatformProfile {
        tr_ini: 0.1 * s(),
        l_hd: 2e-8 * s(),
        l_dh: 2e-8 * s(),
        l_ini: 1e-8 * s(),
        l_mapping: 5e-8 * s(),
        l_mem_access: l_mem_access.max(l_gcache_access),
        l_gcache_access,
        l_writeback: 2e-8 * s(),
        ca_cpu: 0.2 * s(),
        ca_gpu: 0.3 * s(),
        total_memory: 8e9,
    }
}

pub fn task(rng: &mut TestRng, name: &str) -> TaskProfile {
    let n_kernels = log_uniform(rng, 1.0, 256.0) as usize;
    let total_exec = log_uniform(rng, 0.05, 30.0);
    let data = log_uniform(rng, 1e4, 2e8);
    let dirty_p = rng.gen_range(0.0..1.0);
    let hidden_p = rng.gen_range(0.0..0.6);
    let kernels: Vec<KernelProfile> = (0..n_kernels)
        .map(|_| {
            let data_size = data * rng.gen_range(0.5..1.0);
            let hidden = rng.gen_bool(hidden_p);
            KernelProfile {
                data_size,
                bytes_written: data_size * rng.gen_range(0.0..1.0),
                exec_time: total_exec / n_kernels as f64 * rng.gen_range(0.5..1.5),
                dirty_cache_launch: rng.gen_bool(dirty_p),
                ipl: rng.gen_range(1.0..4.0),
                tpl: rng.gen_range(1.0..8.0),
                max_parallelism: if hidden { 64.0 } else { 1.0 },
            }
        })
        .collect();
    let bytes_hd = data * rng.gen_range(0.1..2.0);
    let bytes_dh = data * rng.gen_range(0.1..2.0);
    TaskProfile {
        name: name.to_string(),
        kernels,
        n_memcpy: rng.gen_range(1..8),
        bytes_hd,
        bytes_dh,
        n_l2: log_uniform(rng, 1e3, 2e6) as u64,
        l2_hit_rate: rng.gen_range(0.0..1.0),
        data_footprint: bytes_hd.max(bytes_dh) * rng.gen_range(1.0..2.0),
        first_touch: rng.gen_bool(0.5),
    }
}

/// `n_tasks` distinct tasks, one arrival each; arrivals all at 0 when `batch`, otherwise
/// spread over [0, 40) ms.
pub fn workload(rng: &mut TestRng, n_tasks: usize, batch: bool) -> Workload {
    let tasks: Vec<TaskProfile> = (0..n_tasks).map(|i| task(rng, &format!("t{i}"))).collect();
    let arrivals = tasks
        .iter()
        .map(|t| Arrival {
            task: t.name.clone(),
            t_ms: if batch { 0.0 } else { rng.gen_range(0.0..40.0) },
        })
        .collect();
    Workload { tasks, trace: WorkloadTrace { arrivals } }
}
