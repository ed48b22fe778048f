//! Independent reference schedulers for validating the event engine.
//!
//! These deliberately share no code with the scheduler module: the dynamic
//! reference is a dozen-line greedy dispatcher over plain core clocks, the
//! static references are closed-form per-core sums, and the exhaustive solver
//! brute-forces optimal assignments on tiny instances. They exist to be
//! audited at a glance, and are only meaningful for a single isolated loop.

use thiserror::Error;

use crate::directives::SchedulePolicy;

/// A single-loop scheduling instance: per-iteration costs, a core count, a
/// policy, and the dispatch overhead charged before each dynamic chunk
/// (static policies ignore it; their setup cost is charged region-wide).
#[derive(Debug, Clone)]
pub struct OracleInstance {
    pub durations: Vec<u64>,
    pub cores: u32,
    pub policy: SchedulePolicy,
    pub per_dispatch_overhead: u64,
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("InstanceTooLarge: exhaustive search capped at 12 iterations / 4 cores, got {iterations}/{cores}")]
    InstanceTooLarge { iterations: usize, cores: u32 },
}

fn chunk_sums(durations: &[u64], chunk: u64) -> Vec<u64> {
    durations
        .chunks(chunk as usize)
        .map(|c| c.iter().sum())
        .collect()
}

/// Makespan of the worksharing phase under the instance's policy.
pub fn reference_makespan(instance: &OracleInstance) -> u64 {
    assert!(!instance.durations.is_empty(), "instance needs iterations");
    assert!(instance.cores >= 1, "instance needs cores");
    let cores = instance.cores as usize;
    match instance.policy {
        SchedulePolicy::StaticBlock => {
            let k = instance.durations.len();
            let big = k.div_ceil(cores);
            let small = k / cores;
            let cutoff = k % cores;
            let mut best = 0;
            let mut lo = 0;
            for core in 0..cores {
                let size = if core < cutoff { big } else { small };
                let hi = (lo + size).min(k);
                let sum: u64 = instance.durations[lo..hi].iter().sum();
                best = best.max(sum);
                lo = hi;
            }
            best
        }
        SchedulePolicy::StaticChunk { chunk } => {
            let mut loads = vec![0u64; cores];
            for (j, sum) in chunk_sums(&instance.durations, chunk)
                .into_iter()
                .enumerate()
            {
                loads[j % cores] += sum;
            }
            loads.into_iter().max().unwrap_or(0)
        }
        SchedulePolicy::Dynamic { chunk } => {
            let mut clocks = vec![0u64; cores];
            for sum in chunk_sums(&instance.durations, chunk) {
                // earliest-free core, lowest index on ties
                let core = (0..cores).min_by_key(|&c| (clocks[c], c)).unwrap();
                clocks[core] += instance.per_dispatch_overhead + sum;
            }
            clocks.into_iter().max().unwrap_or(0)
        }
    }
}

/// Optimal (minimal) makespan over all iteration-to-core assignments, by
/// pruned brute force. Any zero-overhead schedule is bounded below by this.
pub fn exhaustive_min_makespan(durations: &[u64], cores: u32) -> Result<u64, OracleError> {
    if durations.len() > 12 || cores > 4 {
        return Err(OracleError::InstanceTooLarge {
            iterations: durations.len(),
            cores,
        });
    }
    if durations.is_empty() || cores == 0 {
        return Ok(0);
    }
    let mut sorted: Vec<u64> = durations.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let mut loads = vec![0u64; cores as usize];
    let mut best = sorted.iter().sum::<u64>(); // all on one core
    search(&sorted, 0, &mut loads, &mut best);
    Ok(best)
}

fn search(durations: &[u64], i: usize, loads: &mut [u64], best: &mut u64) {
    if i == durations.len() {
        *best = (*best).min(loads.iter().copied().max().unwrap_or(0));
        return;
    }
    if loads.iter().copied().max().unwrap_or(0) >= *best {
        return; // cannot improve
    }
    let mut tried: Vec<u64> = Vec::with_capacity(loads.len());
    for c in 0..loads.len() {
        // equal-load cores are symmetric
        if tried.contains(&loads[c]) {
            continue;
        }
        tried.push(loads[c]);
        loads[c] += durations[i];
        search(durations, i + 1, loads, best);
        loads[c] -= durations[i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC_LOOP: [u64; 6] = [5, 3, 3, 2, 2, 1];

    fn instance(policy: SchedulePolicy, cores: u32, overhead: u64) -> OracleInstance {
        OracleInstance {
            durations: SPEC_LOOP.to_vec(),
            cores,
            policy,
            per_dispatch_overhead: overhead,
        }
    }

    #[test]
    fn dynamic_greedy_dispatch() {
        // hand-executed: core0 {5,2,1}=8, core1 {3,3,2}=8
        let m = reference_makespan(&instance(SchedulePolicy::Dynamic { chunk: 1 }, 2, 0));
        assert_eq!(m, 8);
    }

    #[test]
    fn static_block_split() {
        // core0 {5,3,3}=11, core1 {2,2,1}=5
        let m = reference_makespan(&instance(SchedulePolicy::StaticBlock, 2, 0));
        assert_eq!(m, 11);
    }

    #[test]
    fn static_chunk_round_robin() {
        // core0 {5,3,2}=10, core1 {3,2,1}=6
        let m = reference_makespan(&instance(SchedulePolicy::StaticChunk { chunk: 1 }, 2, 0));
        assert_eq!(m, 10);
    }

    #[test]
    fn dynamic_one_iteration_per_core() {
        let m = reference_makespan(&OracleInstance {
            durations: vec![4, 4, 4, 4],
            cores: 4,
            policy: SchedulePolicy::Dynamic { chunk: 1 },
            per_dispatch_overhead: 0,
        });
        assert_eq!(m, 4);
    }

    #[test]
    fn dynamic_charges_dispatch_overhead() {
        let m = reference_makespan(&OracleInstance {
            durations: vec![4, 4, 4, 4],
            cores: 2,
            policy: SchedulePolicy::Dynamic { chunk: 1 },
            per_dispatch_overhead: 3,
        });
        assert_eq!(m, 14); // two chunks per core, (3+4)*2
    }

    #[test]
    fn exhaustive_small_cases() {
        assert_eq!(exhaustive_min_makespan(&SPEC_LOOP, 2).unwrap(), 8);
        assert_eq!(exhaustive_min_makespan(&[7], 4).unwrap(), 7);
        assert_eq!(exhaustive_min_makespan(&[1, 1, 1, 1], 2).unwrap(), 2);
    }

    #[test]
    fn exhaustive_rejects_large_instances() {
        assert!(matches!(
            exhaustive_min_makespan(&[1; 13], 2),
            Err(OracleError::InstanceTooLarge { .. })
        ));
        assert!(matches!(
            exhaustive_min_makespan(&[1; 4], 5),
            Err(OracleError::InstanceTooLarge { .. })
        ));
    }

    #[test]
    fn bounds_hold_on_small_instances() {
        let sets: [&[u64]; 4] = [
            &[9, 1, 1, 1],
            &[2, 2, 2, 2, 2],
            &[10],
            &[3, 1, 4, 1, 5, 9, 2, 6],
        ];
        for durations in sets {
            for cores in 1..=4u32 {
                let optimal = exhaustive_min_makespan(durations, cores).unwrap();
                let greedy = reference_makespan(&OracleInstance {
                    durations: durations.to_vec(),
                    cores,
                    policy: SchedulePolicy::Dynamic { chunk: 1 },
                    per_dispatch_overhead: 0,
                });
                let total: u64 = durations.iter().sum();
                assert!(optimal <= greedy, "{durations:?} @ {cores}");
                assert!(greedy <= total, "{durations:?} @ {cores}");
            }
        }
    }
}
