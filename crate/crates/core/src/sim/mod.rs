//! Deterministic discrete-event simulation of tasks sharing one integrated GPU.
//!
//! The GPU runs one release at a time. A release is either a single job or a pair made of a
//! managed/host-pinned job and a device-policy job that fits inside the former's mapping stall.
//! Waiting jobs are kept in earliest-deadline-first order, the deadline being arrival plus the
//! predicted response under the job's policy.

mod brute;
mod memory;
mod timeline;

pub use brute::{brute_force_schedule, BRUTE_FORCE_MAX_JOBS};
pub use memory::{memory_profile, peak_memory, MemoryProfile};
pub use timeline::{gpu_utilization, validate_timeline, JobRecord, Segment, SegmentKind, Timeline};

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::assigner::assign_policies;
use crate::error::SimError;
use crate::model::{self, Policy};
use crate::profiles::{Bytes, Millis, PlatformProfile, TaskProfile, WorkloadTrace};

/// System configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Every task on Device.
    Default,
    /// Every task on Managed.
    #[serde(rename = "mo")]
    MemoryOptimized,
    /// Guideline-driven assignment with idle-period pairing.
    #[serde(rename = "co")]
    CoOptimized,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Default, Mode::MemoryOptimized, Mode::CoOptimized];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Default => "default",
            Mode::MemoryOptimized => "mo",
            Mode::CoOptimized => "co",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "default" => Ok(Mode::Default),
            "mo" => Ok(Mode::MemoryOptimized),
            "co" => Ok(Mode::CoOptimized),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

/// What part of a device-policy job must fit into the partner's mapping stall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairingRule {
    /// Transfer and execution together.
    #[default]
    FullResponse,
    /// Execution only; the transfer runs before the partner's stall begins.
    ExecOnly,
}

impl FromStr for PairingRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full-response" => Ok(PairingRule::FullResponse),
            "exec-only" => Ok(PairingRule::ExecOnly),
            other => Err(format!("unknown pairing rule `{other}`")),
        }
    }
}

/// One arrival, resolved against its task profile and policy.
#[derive(Debug, Clone)]
pub(crate) struct Job {
    pub label: String,
    pub task: usize,
    pub arrival: Millis,
    pub policy: Policy,
    pub response: Millis,
    pub exec: Millis,
    pub stall: Millis,
    pub footprint: Bytes,
}

/// Resolves arrivals to `(label, task index, arrival)`. Labels are task names, suffixed with
/// `#k` (1-based) for tasks that arrive more than once.
pub(crate) fn job_slots(
    tasks: &[TaskProfile],
    trace: &WorkloadTrace,
) -> Result<Vec<(String, usize, Millis)>, SimError> {
    let mut totals: BTreeMap<&str, usize> = BTreeMap::new();
    for a in &trace.arrivals {
        *totals.entry(a.task.as_str()).or_default() += 1;
    }
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    trace
        .arrivals
        .iter()
        .map(|a| {
            let task = tasks
                .iter()
                .position(|t| t.name == a.task)
                .ok_or_else(|| SimError::UnknownTask(a.task.clone()))?;
            let k = seen.entry(a.task.as_str()).or_default();
            *k += 1;
            let label =
                if totals[a.task.as_str()] > 1 { format!("{}#{k}", a.task) } else { a.task.clone() };
            Ok((label, task, a.t_ms))
        })
        .collect()
}

pub(crate) fn build_job(
    label: String,
    task_index: usize,
    task: &TaskProfile,
    arrival: Millis,
    policy: Policy,
    p: &PlatformProfile,
) -> Job {
    Job {
        label,
        task: task_index,
        arrival,
        policy,
        response: model::predict_response(task, p, policy),
        exec: task.total_exec_time(),
        stall: model::mapping_stall(task, p, policy),
        footprint: policy.footprint_factor() * task.data_footprint,
    }
}

/// Per-job policies for `mode`, in slot order.
pub(crate) fn mode_policies(
    tasks: &[TaskProfile],
    slots: &[(String, usize, Millis)],
    p: &PlatformProfile,
    mode: Mode,
) -> Vec<Policy> {
    match mode {
        Mode::Default => vec![Policy::Device; slots.len()],
        Mode::MemoryOptimized => vec![Policy::Managed; slots.len()],
        Mode::CoOptimized => {
            let instances: Vec<TaskProfile> = slots
                .iter()
                .map(|(label, t, _)| TaskProfile { name: label.clone(), ..tasks[*t].clone() })
                .collect();
            assign_policies(&instances, p).policies()
        }
    }
}

/// A waiting job as seen by the dispatcher.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueueEntry {
    pub job: usize,
    pub label: String,
    pub arrival: Millis,
    pub policy: Policy,
    pub deadline: Millis,
    pub response: Millis,
    pub exec: Millis,
    /// Overlappable mapping stall; zero under Device.
    pub stall: Millis,
}

impl QueueEntry {
    fn from_job(index: usize, job: &Job) -> Self {
        QueueEntry {
            job: index,
            label: job.label.clone(),
            arrival: job.arrival,
            policy: job.policy,
            deadline: job.arrival + job.response,
            response: job.response,
            exec: job.exec,
            stall: job.stall,
        }
    }
}

fn edf_order(a: &QueueEntry, b: &QueueEntry) -> Ordering {
    a.deadline
        .total_cmp(&b.deadline)
        .then_with(|| a.arrival.total_cmp(&b.arrival))
        .then_with(|| a.label.cmp(&b.label))
        .then_with(|| a.job.cmp(&b.job))
}

/// Whether device job `d` can run inside the stall of `mh`.
pub(crate) fn fits(
    d_policy: Policy,
    d_response: Millis,
    d_exec: Millis,
    mh_policy: Policy,
    mh_stall: Millis,
    rule: PairingRule,
) -> bool {
    let demand = match rule {
        PairingRule::FullResponse => d_response,
        PairingRule::ExecOnly => d_exec,
    };
    d_policy == Policy::Device && mh_policy != Policy::Device && demand <= mh_stall
}

/// Looks for a partner for the head of an EDF-ordered queue; returns queue positions
/// `(0, partner)` of the first qualifying pair.
pub fn find_pair(queue: &[QueueEntry], rule: PairingRule) -> Option<(usize, usize)> {
    let head = queue.first()?;
    queue.iter().enumerate().skip(1).find_map(|(j, other)| {
        let pairs = fits(head.policy, head.response, head.exec, other.policy, other.stall, rule)
            || fits(other.policy, other.response, other.exec, head.policy, head.stall, rule);
        pairs.then_some((0, j))
    })
}

/// Delay of the managed/host-pinned partner so the device job's execution ends inside its stall.
pub(crate) fn partner_offset(d_response: Millis, mh_stall: Millis) -> Millis {
    (d_response - mh_stall).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JobResponse {
    pub job: String,
    pub task: String,
    pub policy: Policy,
    pub response: Millis,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub mode: Mode,
    pub makespan: Millis,
    /// Completion minus arrival, in trace order.
    pub responses: Vec<JobResponse>,
    pub peak_memory: Bytes,
    pub gpu_utilization: f64,
    pub oom: bool,
    /// First instant at which residency exceeded the pool.
    pub oom_at: Option<Millis>,
}

impl SimReport {
    fn entries(&self) -> Vec<(String, serde_json::Value)> {
        use serde_json::Value;
        let mut out = vec![
            ("mode".to_string(), Value::from(self.mode.name())),
            ("makespan_ms".to_string(), Value::from(self.makespan)),
            ("peak_memory_bytes".to_string(), Value::from(self.peak_memory)),
            ("gpu_utilization".to_string(), Value::from(self.gpu_utilization)),
            ("oom".to_string(), Value::from(self.oom)),
            ("oom_at_ms".to_string(), self.oom_at.map_or(Value::Null, Value::from)),
        ];
        for r in &self.responses {
            out.push((format!("policy.{}", r.job), Value::from(r.policy.short_name())));
            out.push((format!("response_ms.{}", r.job), Value::from(r.response)));
        }
        out
    }

    /// Flat `key,value` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("key,value\n");
        for (key, value) in self.entries() {
            let value = match value {
                serde_json::Value::String(s) => s,
                serde_json::Value::Null => String::new(),
                other => other.to_string(),
            };
            out.push_str(&format!("{key},{value}\n"));
        }
        out
    }

    /// Flat JSON object.
    pub fn to_json(&self) -> String {
        let map: serde_json::Map<String, serde_json::Value> = self.entries().into_iter().collect();
        serde_json::to_string_pretty(&map).expect("report serializes")
    }
}

struct Run<'a> {
    tasks: &'a [TaskProfile],
    p: &'a PlatformProfile,
    jobs: &'a [Job],
    segments: Vec<Segment>,
    records: Vec<Option<JobRecord>>,
}

impl Run<'_> {
    /// Lays out one job's segments from `start`; returns its completion.
    fn place(&mut self, index: usize, start: Millis, partner: Option<usize>) -> Millis {
        let job = &self.jobs[index];
        let task = &self.tasks[job.task];
        let ov = model::overheads(task, self.p);
        let pieces: Vec<(SegmentKind, Millis)> = match job.policy {
            Policy::Device => vec![(SegmentKind::Transfer, ov.o_d), (SegmentKind::Exec, job.exec)],
            Policy::Managed => {
                let flushes = task.dirty_kernels().count() as f64 * self.p.ca_cpu;
                vec![
                    (SegmentKind::Idle, job.stall),
                    (SegmentKind::CpuFlush, flushes),
                    (SegmentKind::Exec, job.exec),
                    (SegmentKind::Writeback, ov.t_s),
                ]
            }
            Policy::HostPinned => {
                vec![(SegmentKind::Idle, job.stall), (SegmentKind::Exec, job.exec + ov.t_c)]
            }
        };
        let completion = start + job.response;
        let mut t = start;
        let mut placed = Vec::new();
        for (kind, duration) in pieces {
            if duration <= 0.0 {
                continue;
            }
            placed.push(Segment {
                job: job.label.clone(),
                task: task.name.clone(),
                policy: job.policy,
                kind,
                start: t,
                end: t + duration,
                overlappable: kind == SegmentKind::Idle,
            });
            t += duration;
        }
        if let Some(last) = placed.last_mut() {
            last.end = completion;
        }
        self.segments.extend(placed);
        self.records[index] = Some(JobRecord {
            job: job.label.clone(),
            task: task.name.clone(),
            policy: job.policy,
            arrival: job.arrival,
            release: start,
            completion,
            footprint: job.footprint,
            paired_with: partner.map(|i| self.jobs[i].label.clone()),
        });
        completion
    }

    fn release_single(&mut self, index: usize, now: Millis) -> Millis {
        self.place(index, now, None)
    }

    fn release_pair(&mut self, a: usize, b: usize, now: Millis) -> Millis {
        let (d, mh) = if self.jobs[a].policy == Policy::Device { (a, b) } else { (b, a) };
        let offset = partner_offset(self.jobs[d].response, self.jobs[mh].stall);
        let d_end = self.place(d, now, Some(mh));
        let mh_end = self.place(mh, now + offset, Some(d));
        d_end.max(mh_end)
    }
}

/// Runs one workload under `mode`.
///
/// An out-of-memory condition does not stop the run; it is reported through
/// [`SimReport::oom`] and [`SimReport::oom_at`].
pub fn simulate(
    tasks: &[TaskProfile],
    trace: &WorkloadTrace,
    p: &PlatformProfile,
    mode: Mode,
    pairing: PairingRule,
) -> Result<(Timeline, SimReport), SimError> {
    let slots = job_slots(tasks, trace)?;
    let policies = mode_policies(tasks, &slots, p, mode);
    let jobs: Vec<Job> = slots
        .into_iter()
        .zip(policies)
        .map(|((label, t, arrival), policy)| build_job(label, t, &tasks[t], arrival, policy, p))
        .collect();

    let mut order: Vec<usize> = (0..jobs.len()).collect();
    order.sort_by(|&a, &b| jobs[a].arrival.total_cmp(&jobs[b].arrival).then(a.cmp(&b)));

    let mut run = Run { tasks, p, jobs: &jobs, segments: Vec::new(), records: vec![None; jobs.len()] };
    let mut queue: Vec<QueueEntry> = Vec::new();
    let mut next = 0;
    let mut now = order.first().map_or(0.0, |&i| jobs[i].arrival);
    loop {
        while next < order.len() && jobs[order[next]].arrival <= now {
            queue.push(QueueEntry::from_job(order[next], &jobs[order[next]]));
            next += 1;
        }
        if queue.is_empty() {
            match order.get(next) {
                Some(&i) => {
                    now = jobs[i].arrival;
                    continue;
                }
                None => break,
            }
        }
        queue.sort_by(edf_order);
        let pair = match mode {
            Mode::CoOptimized => find_pair(&queue, pairing),
            _ => None,
        };
        now = match pair {
            Some((i, j)) => {
                let second = queue.remove(j.max(i));
                let first = queue.remove(j.min(i));
                run.release_pair(first.job, second.job, now)
            }
            None => {
                let head = queue.remove(0);
                run.release_single(head.job, now)
            }
        };
    }

    let records: Vec<JobRecord> =
        run.records.into_iter().map(|r| r.expect("every job is released")).collect();
    let timeline = Timeline { mode, segments: run.segments, jobs: records };
    let report = report_for(&timeline, p);
    Ok((timeline, report))
}

pub(crate) fn report_for(timeline: &Timeline, p: &PlatformProfile) -> SimReport {
    let memory = memory_profile(&timeline.jobs, p.total_memory);
    SimReport {
        mode: timeline.mode,
        makespan: timeline.makespan(),
        responses: timeline
            .jobs
            .iter()
            .map(|j| JobResponse {
                job: j.job.clone(),
                task: j.task.clone(),
                policy: j.policy,
                response: j.completion - j.arrival,
            })
            .collect(),
        peak_memory: memory.peak,
        gpu_utilization: gpu_utilization(timeline),
        oom: memory.first_overflow.is_some(),
        oom_at: memory.first_overflow,
    }
}
