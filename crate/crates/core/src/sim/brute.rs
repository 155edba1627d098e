//! Exhaustive search over policy assignments and release sequences for tiny workloads.
//!
//! Used as an optimality oracle for the dispatcher: every assignment that passes both
//! guidelines is tried, and for each one every order of single and paired releases.

use crate::error::SimError;
use crate::model::{self, Policy};
use crate::profiles::{Millis, PlatformProfile, TaskProfile, WorkloadTrace};

use super::{
    build_job, fits, job_slots, memory_profile, partner_offset, Job, JobRecord, JobResponse, Mode,
    PairingRule, SimReport,
};

pub const BRUTE_FORCE_MAX_JOBS: usize = 4;

#[derive(Clone)]
struct Best {
    makespan: Millis,
    jobs: Vec<Job>,
    release: Vec<Millis>,
    completion: Vec<Millis>,
    partner: Vec<Option<usize>>,
}

struct Search<'a> {
    jobs: &'a [Job],
    rule: PairingRule,
    first_arrival: Millis,
    release: Vec<Millis>,
    completion: Vec<Millis>,
    partner: Vec<Option<usize>>,
}

impl Search<'_> {
    fn visit(&mut self, remaining: u32, now: Millis, best: &mut Option<Best>) {
        if remaining == 0 {
            let last = self.completion.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let makespan = last - self.first_arrival;
            if best.as_ref().map_or(true, |b| makespan < b.makespan) {
                *best = Some(Best {
                    makespan,
                    jobs: self.jobs.to_vec(),
                    release: self.release.clone(),
                    completion: self.completion.clone(),
                    partner: self.partner.clone(),
                });
            }
            return;
        }
        let n = self.jobs.len();
        for i in (0..n).filter(|i| remaining & (1 << i) != 0) {
            let a = &self.jobs[i];
            let start = now.max(a.arrival);
            let end = start + a.response;
            self.release[i] = start;
            self.completion[i] = end;
            self.partner[i] = None;
            self.visit(remaining & !(1 << i), end, best);

            for j in (i + 1..n).filter(|j| remaining & (1 << j) != 0) {
                let b = &self.jobs[j];
                let (d, mh) = if fits(a.policy, a.response, a.exec, b.policy, b.stall, self.rule) {
                    (i, j)
                } else if fits(b.policy, b.response, b.exec, a.policy, a.stall, self.rule) {
                    (j, i)
                } else {
                    continue;
                };
                let (dj, mj) = (&self.jobs[d], &self.jobs[mh]);
                let start = now.max(dj.arrival).max(mj.arrival);
                let offset = partner_offset(dj.response, mj.stall);
                let d_end = start + dj.response;
                let mh_end = start + offset + mj.response;
                self.release[d] = start;
                self.release[mh] = start + offset;
                self.completion[d] = d_end;
                self.completion[mh] = mh_end;
                self.partner[d] = Some(mh);
                self.partner[mh] = Some(d);
                self.visit(remaining & !(1 << i) & !(1 << j), d_end.max(mh_end), best);
            }
        }
    }
}

fn empty_report() -> SimReport {
    SimReport {
        mode: Mode::CoOptimized,
        makespan: 0.0,
        responses: Vec::new(),
        peak_memory: 0.0,
        gpu_utilization: 0.0,
        oom: false,
        oom_at: None,
    }
}

/// Policies each task may take without violating the per-task overhead-loss test.
fn allowed_policies(task: &TaskProfile, p: &PlatformProfile) -> Vec<Policy> {
    let ov = model::overheads(task, p);
    let mut allowed = vec![Policy::Device];
    if ov.o_m - ov.o_d <= ov.idle - p.ca_cpu - p.ca_gpu {
        allowed.push(Policy::Managed);
    }
    if ov.o_h - ov.o_d <= ov.idle - ov.t_c {
        allowed.push(Policy::HostPinned);
    }
    allowed
}

/// Minimum-makespan schedule over all guideline-respecting assignments and release orders.
///
/// Refuses workloads with more than [`BRUTE_FORCE_MAX_JOBS`] arrivals.
pub fn brute_force_schedule(
    tasks: &[TaskProfile],
    trace: &WorkloadTrace,
    p: &PlatformProfile,
    rule: PairingRule,
) -> Result<SimReport, SimError> {
    let slots = job_slots(tasks, trace)?;
    if slots.len() > BRUTE_FORCE_MAX_JOBS {
        return Err(SimError::TooManyJobs { max: BRUTE_FORCE_MAX_JOBS, got: slots.len() });
    }
    let n = slots.len();
    if n == 0 {
        return Ok(empty_report());
    }
    let options: Vec<Vec<Policy>> = slots.iter().map(|(_, t, _)| allowed_policies(&tasks[*t], p)).collect();
    let first_arrival = slots.iter().map(|s| s.2).fold(f64::INFINITY, f64::min);

    let mut best: Option<Best> = None;
    let mut choice = vec![0usize; n];
    loop {
        let policies: Vec<Policy> = choice.iter().zip(&options).map(|(&c, o)| o[c]).collect();
        let converted = policies.iter().filter(|&&pol| pol != Policy::Device).count();
        if 2 * converted <= n {
            let jobs: Vec<Job> = slots
                .iter()
                .zip(&policies)
                .map(|((label, t, arrival), &policy)| {
                    build_job(label.clone(), *t, &tasks[*t], *arrival, policy, p)
                })
                .collect();
            let mut search = Search {
                jobs: &jobs,
                rule,
                first_arrival,
                release: vec![0.0; n],
                completion: vec![0.0; n],
                partner: vec![None; n],
            };
            search.visit((1u32 << n) - 1, first_arrival, &mut best);
        }
        // odometer over per-job options
        let mut k = 0;
        while k < n {
            choice[k] += 1;
            if choice[k] < options[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }

    let best = best.expect("the all-device assignment is always searched");
    let records: Vec<JobRecord> = best
        .jobs
        .iter()
        .enumerate()
        .map(|(i, job)| JobRecord {
            job: job.label.clone(),
            task: tasks[job.task].name.clone(),
            policy: job.policy,
            arrival: job.arrival,
            release: best.release[i],
            completion: best.completion[i],
            footprint: job.footprint,
            paired_with: best.partner[i].map(|k| best.jobs[k].label.clone()),
        })
        .collect();
    let busy: Millis = best
        .jobs
        .iter()
        .map(|job| match job.policy {
            Policy::HostPinned => job.exec + model::cache_penalty(&tasks[job.task], p),
            _ => job.exec,
        })
        .sum();
    let memory = memory_profile(&records, p.total_memory);
    Ok(SimReport {
        mode: Mode::CoOptimized,
        makespan: best.makespan,
        responses: records
            .iter()
            .map(|r| JobResponse {
                job: r.job.clone(),
                task: r.task.clone(),
                policy: r.policy,
                response: r.completion - r.arrival,
            })
            .collect(),
        peak_memory: memory.peak,
        gpu_utilization: if best.makespan > 0.0 { (busy / best.makespan).min(1.0) } else { 0.0 },
        oom: memory.first_overflow.is_some(),
        oom_at: memory.first_overflow,
    })
}
