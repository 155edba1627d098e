//! Reference platform and task profiles used by examples, tests and the CLI docs.
//!
//! The platform has 50 GB/s copy bandwidth and an 8 GB shared pool. `nw_like` is a single
//! large-data kernel; `gaussian_like` launches 1024 small kernels.

use crate::profiles::{Arrival, KernelProfile, PlatformProfile, TaskProfile, Workload, WorkloadTrace};

pub fn reference_platform() -> PlatformProfile {
    PlatformProfile {
        tr_ini: 0.1,
        l_hd: 2e-8,
        l_dh: 2e-8,
        l_ini: 1e-8,
        l_mapping: 5e-8,
        l_mem_access: 1e-4,
        l_gcache_access: 2e-5,
        l_writeback: 2e-8,
        ca_cpu: 0.2,
        ca_gpu: 0.3,
        total_memory: 8e9,
    }
}

/// Kernel whose memory latency is never hidden by the pipeline.
pub fn kernel(data_size: f64, bytes_written: f64, exec_time: f64, dirty: bool) -> KernelProfile {
    KernelProfile {
        data_size,
        bytes_written,
        exec_time,
        dirty_cache_launch: dirty,
        ipl: 4.0,
        tpl: 8.0,
        max_parallelism: 16.0,
    }
}

/// One zero-size kernel and no copies, L2 traffic or footprint.
pub fn blank_task(name: &str) -> TaskProfile {
    TaskProfile {
        name: name.to_string(),
        kernels: vec![kernel(0.0, 0.0, 0.0, false)],
        n_memcpy: 0,
        bytes_hd: 0.0,
        bytes_dh: 0.0,
        n_l2: 0,
        l2_hit_rate: 0.0,
        data_footprint: 0.0,
        first_touch: false,
    }
}

/// O_D = 5.2, O_M = 5.5, O_H = 11.4, I = 5.0, exec = 10 on the reference platform.
pub fn nw_like() -> TaskProfile {
    TaskProfile {
        name: "nw".to_string(),
        kernels: vec![kernel(1e8, 1e8, 10.0, true)],
        n_memcpy: 2,
        bytes_hd: 1e8,
        bytes_dh: 1e8,
        n_l2: 100_000,
        l2_hit_rate: 0.8,
        data_footprint: 1e8,
        first_touch: true,
    }
}

/// Same kernels as [`nw_like`] with 2e8 bytes copied each way, so Managed wins.
pub fn nw_like_large() -> TaskProfile {
    TaskProfile {
        name: "nw-large".to_string(),
        bytes_hd: 2e8,
        bytes_dh: 2e8,
        data_footprint: 2e8,
        ..nw_like()
    }
}

/// 1024 dirty kernels of 1e4 bytes, 2 ms total exec. O_D = 0.205, O_M ~ 205.5.
pub fn gaussian_like() -> TaskProfile {
    TaskProfile {
        name: "gaussian".to_string(),
        kernels: vec![kernel(1e4, 1e4, 2.0 / 1024.0, true); 1024],
        n_memcpy: 2,
        bytes_hd: 1e5,
        bytes_dh: 1e5,
        n_l2: 3_000_000,
        l2_hit_rate: 0.9,
        data_footprint: 1e5,
        first_touch: true,
    }
}

/// Detector instance with working set `footprint`; device-policy footprint is twice that.
pub fn yolo_like(name: &str, footprint: f64) -> TaskProfile {
    TaskProfile {
        name: name.to_string(),
        kernels: vec![kernel(footprint / 4.0, footprint / 8.0, 5.0, true); 4],
        n_memcpy: 4,
        bytes_hd: footprint / 2.0,
        bytes_dh: footprint / 8.0,
        n_l2: 50_000,
        l2_hit_rate: 0.5,
        data_footprint: footprint,
        first_touch: false,
    }
}

/// Every task arriving at t = 0, in list order.
pub fn batch(tasks: Vec<TaskProfile>) -> Workload {
    let arrivals =
        tasks.iter().map(|t| Arrival { task: t.name.clone(), t_ms: 0.0 }).collect();
    Workload { tasks, trace: WorkloadTrace { arrivals } }
}
