//! Worksharing chunk plans: how a loop's iteration space is cut up and handed
//! to cores under each schedule policy.

use std::collections::VecDeque;

use crate::directives::SchedulePolicy;

use super::SimError;

/// A contiguous run of loop iterations scheduled as a unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chunk {
    pub loop_id: u64,
    /// Iteration index range `[lo, hi)`.
    pub lo: u64,
    pub hi: u64,
    /// Total cycles of the covered iterations, nested work included.
    pub cost: u64,
}

/// Result of planning one loop at one core count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChunkPlan {
    /// Chunks pre-assigned per core (static policies). Outer index = core.
    PerCore(Vec<Vec<Chunk>>),
    /// FIFO queue dispatched at runtime (dynamic policy).
    Queue(VecDeque<Chunk>),
}

/// Cut `iteration_durations` into chunks for `cores` workers.
///
/// * `static_block`: one contiguous block per core, the first
///   `k mod cores` cores taking `ceil(k/cores)` iterations and the rest
///   `floor(k/cores)`.
/// * `static_chunk(c)`: size-`c` chunks dealt round-robin, chunk `j` to core
///   `j mod cores`.
/// * `dynamic(c)`: size-`c` chunks in an ordered queue, assigned at run time.
///
/// The chunk ranges always partition `0..k`; the final chunk of the chunked
/// policies may be short.
pub fn plan_chunks(
    iteration_durations: &[u64],
    loop_id: u64,
    policy: &SchedulePolicy,
    cores: u32,
) -> Result<ChunkPlan, SimError> {
    let k = iteration_durations.len() as u64;
    if k == 0 {
        return Err(SimError::EmptyLoop { loop_id });
    }
    debug_assert!(cores >= 1);
    let cores = cores as u64;
    let cost =
        |lo: u64, hi: u64| -> u64 { iteration_durations[lo as usize..hi as usize].iter().sum() };

    match *policy {
        SchedulePolicy::StaticBlock => {
            let big = k.div_ceil(cores);
            let small = k / cores;
            let cutoff = k % cores;
            let mut per_core = Vec::with_capacity(cores as usize);
            let mut lo = 0;
            for core in 0..cores {
                let size = if core < cutoff { big } else { small };
                let hi = (lo + size).min(k);
                if hi > lo {
                    per_core.push(vec![Chunk {
                        loop_id,
                        lo,
                        hi,
                        cost: cost(lo, hi),
                    }]);
                } else {
                    per_core.push(Vec::new());
                }
                lo = hi;
            }
            Ok(ChunkPlan::PerCore(per_core))
        }
        SchedulePolicy::StaticChunk { chunk } => {
            let mut per_core: Vec<Vec<Chunk>> = vec![Vec::new(); cores as usize];
            let mut lo = 0;
            let mut j = 0usize;
            while lo < k {
                let hi = (lo + chunk).min(k);
                per_core[j % cores as usize].push(Chunk {
                    loop_id,
                    lo,
                    hi,
                    cost: cost(lo, hi),
                });
                lo = hi;
                j += 1;
            }
            Ok(ChunkPlan::PerCore(per_core))
        }
        SchedulePolicy::Dynamic { chunk } => {
            let mut queue = VecDeque::new();
            let mut lo = 0;
            while lo < k {
                let hi = (lo + chunk).min(k);
                queue.push_back(Chunk {
                    loop_id,
                    lo,
                    hi,
                    cost: cost(lo, hi),
                });
                lo = hi;
            }
            Ok(ChunkPlan::Queue(queue))
        }
    }
}
