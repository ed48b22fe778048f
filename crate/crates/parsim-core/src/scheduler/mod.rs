//! Deterministic parallel-schedule simulation.
//!
//! The scheduler replays a bound program on `p` simulated cores: serial spans
//! run on core 0 while the other cores idle; each directive-bound loop becomes
//! a fork/join region whose iterations are distributed per its schedule
//! policy, charging construct overheads from the characterization database.
//! The output is a per-core timeline of tagged segments that exactly tiles
//! `[0, makespan]` on every core, so cycle-stack accounting is exact.
//!
//! Modeling notes, where the trace underdetermines the parallel execution:
//!
//! * The task DAG is the trace tree plus sequential edges between siblings;
//!   worksharing relaxes the order of one loop's iterations only.
//! * Fork, static-init and join/barrier overheads are charged on all region
//!   cores; dynamic dispatch is charged per chunk on the executing core.
//! * A bound loop's own bookkeeping time (gaps between iterations) and its
//!   non-iteration children run serially before the region forks.
//! * Bound `critical`/`single` bodies execute as atomic blocks of their traced
//!   duration; the lock is held for that duration plus enter/exit overheads.
//! * `single` instances serialize region-wide on an implicit token: the first
//!   core to reach one runs it, later arrivals wait (tagged as barrier time)
//!   until its end plus the `single_enter` overhead, then run their own.
//! * Ties are always broken toward the lowest core index, which makes event
//!   timelines bit-reproducible.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chardb::{CharacterizationDB, Construct, DbError};
use crate::directives::BoundProgram;
use crate::trace::TaskRecord;

mod engine;
pub mod plan;

pub use plan::{plan_chunks, Chunk, ChunkPlan};

/// Classification of every simulated time segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SegmentTag {
    Compute,
    OverheadFork,
    OverheadDispatch,
    OverheadJoin,
    WaitBarrier,
    WaitLock,
    IdleSequential,
}

impl SegmentTag {
    pub const ALL: [SegmentTag; 7] = [
        SegmentTag::Compute,
        SegmentTag::OverheadFork,
        SegmentTag::OverheadDispatch,
        SegmentTag::OverheadJoin,
        SegmentTag::WaitBarrier,
        SegmentTag::WaitLock,
        SegmentTag::IdleSequential,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SegmentTag::Compute => "COMPUTE",
            SegmentTag::OverheadFork => "OVERHEAD_FORK",
            SegmentTag::OverheadDispatch => "OVERHEAD_DISPATCH",
            SegmentTag::OverheadJoin => "OVERHEAD_JOIN",
            SegmentTag::WaitBarrier => "WAIT_BARRIER",
            SegmentTag::WaitLock => "WAIT_LOCK",
            SegmentTag::IdleSequential => "IDLE_SEQUENTIAL",
        }
    }
}

impl fmt::Display for SegmentTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SegmentTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SegmentTag::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown segment tag {s:?}"))
    }
}

/// What a segment was spent on: a traced task, a runtime construct, a named
/// lock, or nothing (sequential idle).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventSource {
    Task(u64),
    Construct(Construct),
    Lock(String),
    Idle,
}

impl fmt::Display for EventSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventSource::Task(id) => write!(f, "task:{id}"),
            EventSource::Construct(c) => f.write_str(c.name()),
            EventSource::Lock(name) => write!(f, "lock:{name}"),
            EventSource::Idle => f.write_str("idle"),
        }
    }
}

impl FromStr for EventSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(id) = s.strip_prefix("task:") {
            let id = id
                .parse::<u64>()
                .map_err(|_| format!("bad task id in source {s:?}"))?;
            return Ok(EventSource::Task(id));
        }
        if let Some(name) = s.strip_prefix("lock:") {
            return Ok(EventSource::Lock(name.to_string()));
        }
        if s == "idle" {
            return Ok(EventSource::Idle);
        }
        Construct::from_name(s)
            .map(EventSource::Construct)
            .ok_or_else(|| format!("unknown event source {s:?}"))
    }
}

impl Serialize for EventSource {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EventSource {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One contiguous segment on one simulated core.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleEvent {
    pub core: u32,
    pub tag: SegmentTag,
    pub start: u64,
    pub end: u64,
    pub source: EventSource,
}

impl ScheduleEvent {
    pub fn len(&self) -> u64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// The simulated schedule for one core count. Every core's event list is
/// ordered, disjoint, and exactly tiles `[0, makespan]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleResult {
    pub cores: u32,
    pub makespan: u64,
    /// Sequential trace duration, the speedup denominator.
    pub seq_baseline: u64,
    /// Per-core ordered event lists; outer index is the core.
    pub events: Vec<Vec<ScheduleEvent>>,
    pub diagnostics: Vec<String>,
}

impl ScheduleResult {
    pub fn iter_events(&self) -> impl Iterator<Item = &ScheduleEvent> {
        self.events.iter().flatten()
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("CoreCountOutOfRange: {cores} not in [1, {max}]")]
    CoreCountOutOfRange { cores: u32, max: u32 },
    #[error("EmptyLoop: loop {loop_id} has no iterations to share")]
    EmptyLoop { loop_id: u64 },
    #[error(transparent)]
    Db(#[from] DbError),
}

impl SimError {
    pub fn code(&self) -> &'static str {
        match self {
            SimError::CoreCountOutOfRange { .. } => "CoreCountOutOfRange",
            SimError::EmptyLoop { .. } => "EmptyLoop",
            SimError::Db(e) => e.code(),
        }
    }
}

/// Optional simulation knobs.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimConfig {
    /// Extra compute cycles charged when a task is entered, intended as the
    /// hook for memory-statistics-based penalties. Defaults to none: memory
    /// parameters carry no timing cost in this model.
    pub mem_penalty: Option<fn(&TaskRecord) -> u64>,
}

/// Simulate `bound` on `cores` simulated cores with default configuration.
pub fn simulate(
    bound: &BoundProgram,
    db: &CharacterizationDB,
    cores: u32,
) -> Result<ScheduleResult, SimError> {
    simulate_with(bound, db, cores, &SimConfig::default())
}

pub fn simulate_with(
    bound: &BoundProgram,
    db: &CharacterizationDB,
    cores: u32,
    config: &SimConfig,
) -> Result<ScheduleResult, SimError> {
    if cores == 0 || cores > db.max_cores {
        return Err(SimError::CoreCountOutOfRange {
            cores,
            max: db.max_cores,
        });
    }
    engine::Engine::new(bound, db, cores, config).run()
}

/// Simulate one schedule per requested core count, preserving order. Counts
/// are independent, so they are evaluated in parallel.
pub fn sweep(
    bound: &BoundProgram,
    db: &CharacterizationDB,
    core_counts: &[u32],
) -> Result<Vec<ScheduleResult>, SimError> {
    for &cores in core_counts {
        if cores == 0 || cores > db.max_cores {
            return Err(SimError::CoreCountOutOfRange {
                cores,
                max: db.max_cores,
            });
        }
    }
    core_counts
        .par_iter()
        .map(|&cores| simulate(bound, db, cores))
        .collect()
}

/// Group construct overheads looked up once per parallel region.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct RegionOverheads {
    pub fork: u64,
    pub static_init: u64,
    pub dispatch: u64,
    pub barrier: u64,
    pub join: u64,
    pub critical_enter: u64,
    pub critical_exit: u64,
    pub single_enter: u64,
}

pub(crate) fn tag_totals(result: &ScheduleResult) -> BTreeMap<SegmentTag, u64> {
    let mut totals = BTreeMap::new();
    for tag in SegmentTag::ALL {
        totals.insert(tag, 0);
    }
    for event in result.iter_events() {
        *totals.get_mut(&event.tag).unwrap() += event.len();
    }
    totals
}

impl Ord for SegmentTag {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (*self as u8).cmp(&(*other as u8))
    }
}

impl PartialOrd for SegmentTag {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
