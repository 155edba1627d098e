//! Platform and workload descriptions.
//!
//! Both documents are JSON. Loading is all-or-nothing: a document either yields a fully
//! validated value or a [`ProfileError`] naming the offending field.

mod fit;

pub use fit::{fit_transfer_params, load_samples_csv, TransferFit};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::ProfileError;

/// Milliseconds.
pub type Millis = f64;
/// Bytes. Kept as a float so footprints can be expressed as fractions of a normalized pool.
pub type Bytes = f64;

/// Hardware-dependent latencies and constants of one platform.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlatformProfile {
    /// Startup time of one copy call.
    pub tr_ini: Millis,
    /// Host-to-device copy cost, ms/byte.
    pub l_hd: f64,
    /// Device-to-host copy cost, ms/byte.
    pub l_dh: f64,
    /// First-touch initialization of host pages, ms/byte.
    pub l_ini: f64,
    /// GPU page creation and mapping, ms/byte.
    pub l_mapping: f64,
    /// Main-memory latency of one GPU memory instruction, ms.
    pub l_mem_access: Millis,
    /// L2 latency of one GPU memory instruction, ms.
    pub l_gcache_access: Millis,
    /// Dirty-line writeback cost, ms/byte.
    pub l_writeback: f64,
    /// Full CPU cache flush.
    pub ca_cpu: Millis,
    /// Full GPU cache flush.
    pub ca_gpu: Millis,
    /// Capacity of the shared memory pool.
    pub total_memory: Bytes,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlatform {
    tr_ini: Option<f64>,
    l_hd: Option<f64>,
    l_dh: Option<f64>,
    l_ini: Option<f64>,
    l_mapping: Option<f64>,
    l_mem_access: Option<f64>,
    l_gcache_access: Option<f64>,
    l_writeback: Option<f64>,
    ca_cpu: Option<f64>,
    ca_gpu: Option<f64>,
    total_memory: Option<f64>,
}

fn required<T>(value: Option<T>, field: &str) -> Result<T, ProfileError> {
    value.ok_or_else(|| ProfileError::MissingField(field.to_string()))
}

fn check_non_negative(value: f64, field: &str) -> Result<(), ProfileError> {
    if !value.is_finite() {
        return Err(ProfileError::invalid(field, "must be finite"));
    }
    if value < 0.0 {
        return Err(ProfileError::invalid(field, format!("must be >= 0, got {value}")));
    }
    Ok(())
}

fn malformed(err: serde_json::Error) -> ProfileError {
    ProfileError::Malformed(err.to_string())
}

impl PlatformProfile {
    pub fn validate(&self) -> Result<(), ProfileError> {
        let fields = [
            ("tr_ini", self.tr_ini),
            ("l_hd", self.l_hd),
            ("l_dh", self.l_dh),
            ("l_ini", self.l_ini),
            ("l_mapping", self.l_mapping),
            ("l_mem_access", self.l_mem_access),
            ("l_gcache_access", self.l_gcache_access),
            ("l_writeback", self.l_writeback),
            ("ca_cpu", self.ca_cpu),
            ("ca_gpu", self.ca_gpu),
            ("total_memory", self.total_memory),
        ];
        for (name, value) in fields {
            check_non_negative(value, name)?;
        }
        if self.total_memory <= 0.0 {
            return Err(ProfileError::invalid("total_memory", "must be > 0"));
        }
        if self.l_mem_access < self.l_gcache_access {
            return Err(ProfileError::invalid(
                "l_gcache_access",
                format!(
                    "L2 latency {} exceeds main-memory latency l_mem_access {}",
                    self.l_gcache_access, self.l_mem_access
                ),
            ));
        }
        Ok(())
    }

    /// Cost of one L2 hit turned into a main-memory access.
    pub fn miss_penalty(&self) -> Millis {
        self.l_mem_access - self.l_gcache_access
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("platform profile serializes")
    }
}

/// Parses and validates a platform profile document.
pub fn load_platform_profile(text: &str) -> Result<PlatformProfile, ProfileError> {
    let raw: RawPlatform = serde_json::from_str(text).map_err(malformed)?;
    let profile = PlatformProfile {
        tr_ini: required(raw.tr_ini, "tr_ini")?,
        l_hd: required(raw.l_hd, "l_hd")?,
        l_dh: required(raw.l_dh, "l_dh")?,
        l_ini: required(raw.l_ini, "l_ini")?,
        l_mapping: required(raw.l_mapping, "l_mapping")?,
        l_mem_access: required(raw.l_mem_access, "l_mem_access")?,
        l_gcache_access: required(raw.l_gcache_access, "l_gcache_access")?,
        l_writeback: required(raw.l_writeback, "l_writeback")?,
        ca_cpu: required(raw.ca_cpu, "ca_cpu")?,
        ca_gpu: required(raw.ca_gpu, "ca_gpu")?,
        total_memory: required(raw.total_memory, "total_memory")?,
    };
    profile.validate()?;
    Ok(profile)
}

/// Profiling counters of a single kernel launch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelProfile {
    /// Bytes accessed by the kernel.
    pub data_size: Bytes,
    pub bytes_written: Bytes,
    /// Pure compute time, without any memory-management overhead.
    pub exec_time: Millis,
    /// Launch found host-dirty managed data and forces a CPU cache flush.
    pub dirty_cache_launch: bool,
    pub ipl: f64,
    pub tpl: f64,
    /// Parallelism needed to reach peak throughput.
    pub max_parallelism: f64,
}

impl KernelProfile {
    /// Memory latency is hidden by the pipeline when available parallelism is below the peak.
    pub fn latency_hidden(&self) -> bool {
        self.ipl * self.tpl < self.max_parallelism
    }

    fn validate(&self, path: &str) -> Result<(), ProfileError> {
        for (name, value) in [
            ("data_size", self.data_size),
            ("bytes_written", self.bytes_written),
            ("exec_time", self.exec_time),
            ("ipl", self.ipl),
            ("tpl", self.tpl),
            ("max_parallelism", self.max_parallelism),
        ] {
            check_non_negative(value, &format!("{path}.{name}"))?;
        }
        if self.bytes_written > self.data_size {
            return Err(ProfileError::invalid(
                format!("{path}.bytes_written"),
                format!("{} exceeds data_size {}", self.bytes_written, self.data_size),
            ));
        }
        Ok(())
    }
}

/// Profile of one application: its kernels and the counters the overhead model consumes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskProfile {
    pub name: String,
    pub kernels: Vec<KernelProfile>,
    /// Number of copy calls under the device policy.
    pub n_memcpy: u64,
    pub bytes_hd: Bytes,
    pub bytes_dh: Bytes,
    /// Instructions that access the GPU L2.
    pub n_l2: u64,
    /// L2 hit rate measured under the device policy.
    pub l2_hit_rate: f64,
    /// Working-set size held in the shared pool.
    pub data_footprint: Bytes,
    /// The device-to-host destination is not yet allocated, so first-touch cost applies.
    pub first_touch: bool,
}

impl TaskProfile {
    pub fn total_exec_time(&self) -> Millis {
        self.kernels.iter().map(|k| k.exec_time).sum()
    }

    pub fn dirty_kernels(&self) -> impl Iterator<Item = &KernelProfile> {
        self.kernels.iter().filter(|k| k.dirty_cache_launch)
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        let path = format!("tasks[{}]", self.name);
        if self.name.is_empty() {
            return Err(ProfileError::invalid("name", "task name must not be empty"));
        }
        if self.kernels.is_empty() {
            return Err(ProfileError::invalid(format!("{path}.kernels"), "must not be empty"));
        }
        for (i, kernel) in self.kernels.iter().enumerate() {
            kernel.validate(&format!("{path}.kernels[{i}]"))?;
        }
        for (name, value) in [
            ("bytes_hd", self.bytes_hd),
            ("bytes_dh", self.bytes_dh),
            ("l2_hit_rate", self.l2_hit_rate),
            ("data_footprint", self.data_footprint),
        ] {
            check_non_negative(value, &format!("{path}.{name}"))?;
        }
        if self.l2_hit_rate > 1.0 {
            return Err(ProfileError::invalid(
                format!("{path}.l2_hit_rate"),
                format!("must be in [0, 1], got {}", self.l2_hit_rate),
            ));
        }
        if self.data_footprint < self.bytes_hd.max(self.bytes_dh) {
            return Err(ProfileError::invalid(
                format!("{path}.data_footprint"),
                "must be >= max(bytes_hd, bytes_dh)",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Arrival {
    pub task: String,
    pub t_ms: Millis,
}

/// Arrival times of task instances.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct WorkloadTrace {
    pub arrivals: Vec<Arrival>,
}

/// Tasks plus their arrival trace, as read from one workload document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Workload {
    pub tasks: Vec<TaskProfile>,
    pub trace: WorkloadTrace,
}

impl Workload {
    pub fn task(&self, name: &str) -> Option<&TaskProfile> {
        self.tasks.iter().find(|t| t.name == name)
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        let mut names = BTreeSet::new();
        for task in &self.tasks {
            task.validate()?;
            if !names.insert(task.name.as_str()) {
                return Err(ProfileError::DuplicateTask(task.name.clone()));
            }
        }
        for (i, arrival) in self.trace.arrivals.iter().enumerate() {
            check_non_negative(arrival.t_ms, &format!("arrivals[{i}].t_ms"))?;
            if !names.contains(arrival.task.as_str()) {
                return Err(ProfileError::UnknownTask(arrival.task.clone()));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            tasks: &'a [TaskProfile],
            arrivals: &'a [Arrival],
        }
        serde_json::to_string_pretty(&Doc { tasks: &self.tasks, arrivals: &self.trace.arrivals })
            .expect("workload serializes")
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    data_size: Option<f64>,
    bytes_written: Option<f64>,
    exec_time: Option<f64>,
    dirty_cache_launch: Option<bool>,
    ipl: Option<f64>,
    tpl: Option<f64>,
    max_parallelism: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTask {
    name: Option<String>,
    kernels: Option<Vec<RawKernel>>,
    n_memcpy: Option<u64>,
    bytes_hd: Option<f64>,
    bytes_dh: Option<f64>,
    n_l2: Option<u64>,
    l2_hit_rate: Option<f64>,
    data_footprint: Option<f64>,
    first_touch: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArrival {
    task: Option<String>,
    t_ms: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWorkload {
    tasks: Option<Vec<RawTask>>,
    arrivals: Option<Vec<RawArrival>>,
}

impl RawKernel {
    fn build(self, path: &str) -> Result<KernelProfile, ProfileError> {
        let field = |name: &str| format!("{path}.{name}");
        Ok(KernelProfile {
            data_size: required(self.data_size, &field("data_size"))?,
            bytes_written: required(self.bytes_written, &field("bytes_written"))?,
            exec_time: required(self.exec_time, &field("exec_time"))?,
            dirty_cache_launch: required(self.dirty_cache_launch, &field("dirty_cache_launch"))?,
            ipl: required(self.ipl, &field("ipl"))?,
            tpl: required(self.tpl, &field("tpl"))?,
            max_parallelism: required(self.max_parallelism, &field("max_parallelism"))?,
        })
    }
}

impl RawTask {
    fn build(self, index: usize) -> Result<TaskProfile, ProfileError> {
        let path = format!("tasks[{index}]");
        let field = |name: &str| format!("{path}.{name}");
        let kernels = required(self.kernels, &field("kernels"))?
            .into_iter()
            .enumerate()
            .map(|(i, k)| k.build(&format!("{path}.kernels[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TaskProfile {
            name: required(self.name, &field("name"))?,
            kernels,
            n_memcpy: required(self.n_memcpy, &field("n_memcpy"))?,
            bytes_hd: required(self.bytes_hd, &field("bytes_hd"))?,
            bytes_dh: required(self.bytes_dh, &field("bytes_dh"))?,
            n_l2: required(self.n_l2, &field("n_l2"))?,
            l2_hit_rate: required(self.l2_hit_rate, &field("l2_hit_rate"))?,
            data_footprint: required(self.data_footprint, &field("data_footprint"))?,
            first_touch: required(self.first_touch, &field("first_touch"))?,
        })
    }
}

/// Parses and validates a workload document (`tasks` plus `arrivals`).
pub fn load_workload(text: &str) -> Result<Workload, ProfileError> {
    let raw: RawWorkload = serde_json::from_str(text).map_err(malformed)?;
    let tasks = required(raw.tasks, "tasks")?
        .into_iter()
        .enumerate()
        .map(|(i, t)| t.build(i))
        .collect::<Result<Vec<_>, _>>()?;
    let arrivals = raw
        .arrivals
        .unwrap_or_default()
        .into_iter()
        .enumerate()
        .map(|(i, a)| {
            Ok(Arrival {
                task: required(a.task, &format!("arrivals[{i}].task"))?,
                t_ms: required(a.t_ms, &format!("arrivals[{i}].t_ms"))?,
            })
        })
        .collect::<Result<Vec<_>, ProfileError>>()?;
    let workload = Workload { tasks, trace: WorkloadTrace { arrivals } };
    workload.validate()?;
    Ok(workload)
}
