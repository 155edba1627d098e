//! Shared-pool footprint accounting.
//!
//! A job holds its footprint (twice its working set under Device, once otherwise) from arrival
//! to completion; intervals are half-open so a job finishing at `t` frees memory before one
//! arriving at `t` claims it.

use crate::profiles::{Bytes, Millis};

use super::timeline::{JobRecord, Timeline};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryProfile {
    pub peak: Bytes,
    /// First instant at which residency exceeds the capacity, if any.
    pub first_overflow: Option<Millis>,
}

pub fn memory_profile(jobs: &[JobRecord], capacity: Bytes) -> MemoryProfile {
    let mut events: Vec<(Millis, bool, Bytes)> = Vec::with_capacity(jobs.len() * 2);
    for job in jobs.iter().filter(|j| j.completion > j.arrival) {
        events.push((job.arrival, true, job.footprint));
        events.push((job.completion, false, job.footprint));
    }
    // releases (false) sort before claims (true) at equal instants
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut resident: Vec<Bytes> = Vec::new();
    let mut peak: Bytes = 0.0;
    let mut first_overflow = None;
    let mut i = 0;
    while i < events.len() {
        let t = events[i].0;
        while i < events.len() && events[i].0 == t {
            let (_, claim, bytes) = events[i];
            if claim {
                resident.push(bytes);
            } else if let Some(pos) = resident.iter().position(|&b| b == bytes) {
                resident.swap_remove(pos);
            }
            i += 1;
        }
        // summed afresh so long runs do not accumulate cancellation error
        let mut sorted = resident.clone();
        sorted.sort_by(f64::total_cmp);
        let total: Bytes = sorted.iter().sum();
        peak = peak.max(total);
        if first_overflow.is_none() && total > capacity {
            first_overflow = Some(t);
        }
    }
    MemoryProfile { peak, first_overflow }
}

/// Largest total footprint resident at any instant of the run.
pub fn peak_memory(timeline: &Timeline) -> Bytes {
    memory_profile(&timeline.jobs, f64::INFINITY).peak
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Policy;

    fn job(name: &str, policy: Policy, working_set: f64, arrival: f64, completion: f64) -> JobRecord {
        JobRecord {
            job: name.into(),
            task: name.into(),
            policy,
            arrival,
            release: arrival,
            completion,
            footprint: policy.footprint_factor() * working_set,
            paired_with: None,
        }
    }

    #[test]
    fn single_device_job_doubles() {
        let p = memory_profile(&[job("a", Policy::Device, 1e9, 0.0, 1.0)], 8e9);
        assert_eq!(p.peak, 2e9);
        assert_eq!(p.first_overflow, None);
    }

    #[test]
    fn device_and_managed_coresident() {
        let jobs =
            [job("d", Policy::Device, 1e9, 0.0, 2.0), job("m", Policy::Managed, 1e9, 1.0, 3.0)];
        assert_eq!(memory_profile(&jobs, 8e9).peak, 3e9);
    }

    #[test]
    fn sequential_jobs_take_max() {
        let jobs = [
            job("a", Policy::Device, 1e9, 0.0, 1.0),
            job("b", Policy::Managed, 3e9, 1.0, 2.0),
            job("c", Policy::Device, 0.5e9, 2.0, 3.0),
        ];
        assert_eq!(memory_profile(&jobs, 8e9).peak, 3e9);
    }

    #[test]
    fn overflow_instant_reported() {
        let jobs = [
            job("a", Policy::Device, 0.3, 0.0, 5.0),
            job("b", Policy::Device, 0.3, 2.0, 6.0),
        ];
        let p = memory_profile(&jobs, 1.0);
        assert!((p.peak - 1.2).abs() < 1e-12);
        assert_eq!(p.first_overflow, Some(2.0));
    }
}
