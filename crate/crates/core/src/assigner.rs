//! Converts device-policy tasks to managed or host-pinned when the added overhead can be
//! recovered by overlapping, while keeping at least as many device tasks as converted ones.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::Serialize;

use crate::model::{self, Policy, PolicyOverheads};
use crate::profiles::{Millis, PlatformProfile, TaskProfile};

/// Overhead a conversion to `target` can win back by overlap; may be negative.
///
/// Device is not a conversion target and yields 0.
pub fn recoverable_portion(task: &TaskProfile, p: &PlatformProfile, target: Policy) -> Millis {
    let ov = model::overheads(task, p);
    recoverable_from(&ov, p, target)
}

fn recoverable_from(ov: &PolicyOverheads, p: &PlatformProfile, target: Policy) -> Millis {
    match target {
        Policy::Device => 0.0,
        Policy::Managed => ov.idle - p.ca_cpu - p.ca_gpu,
        Policy::HostPinned => ov.idle - ov.t_c,
    }
}

fn eligible_from(ov: &PolicyOverheads, p: &PlatformProfile) -> Option<Policy> {
    let managed = ov.o_m - ov.o_d <= recoverable_from(ov, p, Policy::Managed);
    let pinned = ov.o_h - ov.o_d <= recoverable_from(ov, p, Policy::HostPinned);
    match (managed, pinned) {
        (true, true) if ov.o_h < ov.o_m => Some(Policy::HostPinned),
        (true, _) => Some(Policy::Managed),
        (false, true) => Some(Policy::HostPinned),
        (false, false) => None,
    }
}

/// Conversion target allowed by the per-task overhead-loss test, if any.
pub fn guideline1_eligible(task: &TaskProfile, p: &PlatformProfile) -> Option<Policy> {
    eligible_from(&model::overheads(task, p), p)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssignmentEntry {
    pub task: String,
    pub policy: Policy,
    pub overheads: PolicyOverheads,
    pub recoverable_m: Millis,
    pub recoverable_h: Millis,
    pub converted: bool,
}

impl AssignmentEntry {
    /// Recoverable portion for the policy the task ended up with (Managed when still Device).
    pub fn recoverable(&self) -> Millis {
        match self.policy {
            Policy::HostPinned => self.recoverable_h,
            _ => self.recoverable_m,
        }
    }
}

/// Per-task policies, in input order.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PolicyAssignment {
    pub entries: Vec<AssignmentEntry>,
}

impl PolicyAssignment {
    pub fn policies(&self) -> Vec<Policy> {
        self.entries.iter().map(|e| e.policy).collect()
    }

    pub fn count(&self, policy: Policy) -> usize {
        self.entries.iter().filter(|e| e.policy == policy).count()
    }

    /// Checks both guidelines. Returns the first violation found.
    pub fn check_guidelines(&self, p: &PlatformProfile) -> Result<(), String> {
        let converted = self.count(Policy::Managed) + self.count(Policy::HostPinned);
        let device = self.count(Policy::Device);
        if converted > device {
            return Err(format!("{converted} converted tasks exceed {device} device tasks"));
        }
        for e in self.entries.iter().filter(|e| e.policy != Policy::Device) {
            let ov = &e.overheads;
            let loss = ov.of(e.policy) - ov.o_d;
            let recoverable = recoverable_from(ov, p, e.policy);
            if loss > recoverable {
                return Err(format!(
                    "task `{}` under {} loses {loss} ms > recoverable {recoverable} ms",
                    e.task, e.policy
                ));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("task,policy,o_d_ms,o_m_ms,o_h_ms,idle_ms,recoverable_ms,converted\n");
        for e in &self.entries {
            let ov = &e.overheads;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                e.task,
                e.policy,
                ov.o_d,
                ov.o_m,
                ov.o_h,
                ov.idle,
                e.recoverable(),
                e.converted
            );
        }
        out
    }
}

/// Starts every task on Device and converts eligible tasks, largest recoverable portion first,
/// for as long as converted tasks do not outnumber device tasks.
///
/// Ties in recoverable portion fall back to task name, then input position.
pub fn assign_policies(tasks: &[TaskProfile], p: &PlatformProfile) -> PolicyAssignment {
    let mut entries: Vec<AssignmentEntry> = tasks
        .iter()
        .map(|task| {
            let ov = model::overheads(task, p);
            AssignmentEntry {
                task: task.name.clone(),
                policy: Policy::Device,
                overheads: ov,
                recoverable_m: recoverable_from(&ov, p, Policy::Managed),
                recoverable_h: recoverable_from(&ov, p, Policy::HostPinned),
                converted: false,
            }
        })
        .collect();

    let mut candidates: Vec<(usize, Policy, Millis)> = entries
        .iter()
        .enumerate()
        .filter_map(|(i, e)| {
            eligible_from(&e.overheads, p).map(|target| {
                (i, target, recoverable_from(&e.overheads, p, target))
            })
        })
        .collect();
    candidates.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .unwrap_or(Ordering::Equal)
            .then_with(|| entries[a.0].task.cmp(&entries[b.0].task))
            .then_with(|| a.0.cmp(&b.0))
    });

    let total = entries.len();
    let mut converted = 0;
    for (i, target, _) in candidates {
        if 2 * (converted + 1) > total {
            break;
        }
        entries[i].policy = target;
        entries[i].converted = true;
        converted += 1;
    }
    PolicyAssignment { entries }
}
