use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::model::Policy;
use crate::profiles::{Bytes, Millis};

use super::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SegmentKind {
    /// Synchronous host/device copies of a device-policy task.
    Transfer,
    /// GPU stalled on page mapping; the only kind another task may overlap.
    Idle,
    CpuFlush,
    Exec,
    Writeback,
}

impl fmt::Display for SegmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SegmentKind::Transfer => "Transfer",
            SegmentKind::Idle => "Idle",
            SegmentKind::CpuFlush => "CpuFlush",
            SegmentKind::Exec => "Exec",
            SegmentKind::Writeback => "Writeback",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    /// Job label: the task name, suffixed with `#k` when the task arrives more than once.
    pub job: String,
    pub task: String,
    pub policy: Policy,
    pub kind: SegmentKind,
    pub start: Millis,
    pub end: Millis,
    pub overlappable: bool,
}

impl Segment {
    pub fn duration(&self) -> Millis {
        self.end - self.start
    }
}

/// Lifetime of one job in a simulated run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JobRecord {
    pub job: String,
    pub task: String,
    pub policy: Policy,
    pub arrival: Millis,
    pub release: Millis,
    pub completion: Millis,
    /// Bytes held in the shared pool from arrival to completion.
    pub footprint: Bytes,
    /// Job whose idle period this job ran in, or that ran in this job's idle period.
    pub paired_with: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timeline {
    pub mode: Mode,
    pub segments: Vec<Segment>,
    pub jobs: Vec<JobRecord>,
}

impl Timeline {
    /// From the first arrival (or first segment) to the last completion.
    pub fn makespan(&self) -> Millis {
        let start = self
            .jobs
            .iter()
            .map(|j| j.arrival)
            .chain(self.segments.iter().map(|s| s.start))
            .fold(f64::INFINITY, f64::min);
        let end = self
            .jobs
            .iter()
            .map(|j| j.completion)
            .chain(self.segments.iter().map(|s| s.end))
            .fold(f64::NEG_INFINITY, f64::max);
        if start.is_finite() && end.is_finite() {
            end - start
        } else {
            0.0
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("job,task,policy,kind,start_ms,end_ms,overlappable\n");
        for s in &self.segments {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.job, s.task, s.policy, s.kind, s.start, s.end, s.overlappable
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            mode: Mode,
            segments: &'a [Segment],
        }
        serde_json::to_string_pretty(&Doc { mode: self.mode, segments: &self.segments })
            .expect("timeline serializes")
    }
}

/// Fraction of the makespan during which at least one Exec segment runs.
pub fn gpu_utilization(timeline: &Timeline) -> f64 {
    let makespan = timeline.makespan();
    if makespan <= 0.0 {
        return 0.0;
    }
    let mut execs: Vec<(f64, f64)> = timeline
        .segments
        .iter()
        .filter(|s| s.kind == SegmentKind::Exec)
        .map(|s| (s.start, s.end))
        .collect();
    execs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut busy = 0.0;
    let mut current: Option<(f64, f64)> = None;
    for (start, end) in execs {
        current = match current {
            Some((cs, ce)) if start <= ce => Some((cs, ce.max(end))),
            Some((cs, ce)) => {
                busy += ce - cs;
                Some((start, end))
            }
            None => Some((start, end)),
        };
    }
    if let Some((cs, ce)) = current {
        busy += ce - cs;
    }
    (busy / makespan).clamp(0.0, 1.0)
}

const EPS: f64 = 1e-9;

fn overlap(a: &Segment, b: &Segment) -> f64 {
    a.end.min(b.end) - a.start.max(b.start)
}

fn legal_overlap(idle: &Segment, other: &Segment) -> bool {
    idle.kind == SegmentKind::Idle
        && idle.policy != Policy::Device
        && other.policy == Policy::Device
        && matches!(other.kind, SegmentKind::Exec | SegmentKind::Transfer)
}

/// Sweeps every segment pair and reports each rule violation as one line.
///
/// Rules: segments are well-formed and only Idle segments are overlappable; a job's own
/// segments never overlap; segments of different jobs overlap only when one is the Idle period
/// of a managed/host-pinned job and the other is a device-policy Transfer or Exec.
pub fn validate_timeline(timeline: &Timeline) -> Vec<String> {
    let mut violations = Vec::new();
    let segs = &timeline.segments;
    for s in segs {
        if !(s.start.is_finite() && s.end.is_finite()) || s.end < s.start {
            violations.push(format!("{} {} has bad bounds [{}, {}]", s.job, s.kind, s.start, s.end));
        }
        if s.overlappable != (s.kind == SegmentKind::Idle) {
            violations.push(format!("{} {} has wrong overlappable flag", s.job, s.kind));
        }
    }
    for (i, a) in segs.iter().enumerate() {
        for b in &segs[i + 1..] {
            if overlap(a, b) <= EPS * a.end.abs().max(1.0) {
                continue;
            }
            let ok = a.job != b.job && (legal_overlap(a, b) || legal_overlap(b, a));
            if !ok {
                violations.push(format!(
                    "{} {} [{}, {}] overlaps {} {} [{}, {}]",
                    a.job, a.kind, a.start, a.end, b.job, b.kind, b.start, b.end
                ));
            }
        }
    }
    violations
}
