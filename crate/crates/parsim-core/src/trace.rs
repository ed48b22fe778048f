//! Sequential task traces.
//!
//! A trace is the record of one sequential run of the application: a tree of
//! timestamped tasks (function calls, loops, loop iterations, user-marked
//! regions) plus optional per-task memory statistics. Timestamps are integer
//! cycles so every conservation check in the scheduler is exact.
//!
//! The on-disk format is JSON with top-level fields `version` (currently 1),
//! `clock` (always `"cycles"`) and `tasks`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Trace file format version accepted by [`parse_trace`].
pub const TRACE_FORMAT_VERSION: u32 = 1;

/// Clock unit label required in trace files.
pub const TRACE_CLOCK: &str = "cycles";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Function,
    Loop,
    Iteration,
    Explicit,
    Region,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TaskKind::Function => "function",
            TaskKind::Loop => "loop",
            TaskKind::Iteration => "iteration",
            TaskKind::Explicit => "explicit",
            TaskKind::Region => "region",
        };
        f.write_str(s)
    }
}

/// Summary memory-access counters attached to a task.
///
/// Counts are inclusive of child tasks (the collector reports a task's whole
/// dynamic extent; the trace format does not carry exclusive counts).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemoryStats {
    pub reads: u64,
    pub writes: u64,
    /// Accesses attributed to each memory-hierarchy level, keyed by level name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_level: BTreeMap<String, u64>,
}

/// One node of the task tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskRecord {
    pub id: u64,
    /// Parent task id; `None` exactly for the root.
    pub parent: Option<u64>,
    pub name: String,
    pub kind: TaskKind,
    /// Start timestamp in cycles.
    pub start: u64,
    /// End timestamp in cycles; `end >= start` for well-formed records.
    pub end: u64,
    /// Iteration ordinal, present iff `kind == Iteration`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mem: Option<MemoryStats>,
}

impl TaskRecord {
    pub fn duration(&self) -> u64 {
        self.end.saturating_sub(self.start)
    }
}

/// A full sequential trace. Immutable once parsed; all operations are pure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskTrace {
    pub version: u32,
    pub clock: String,
    pub tasks: Vec<TaskRecord>,
}

/// A maximal sub-interval of a task's span not covered by any of its
/// children, i.e. time the task spent computing itself. The scheduler charges
/// these on the core running the surrounding serial or parallel context.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelfSegment {
    pub owner: u64,
    pub start: u64,
    pub end: u64,
}

impl SelfSegment {
    pub fn len(&self) -> u64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("SyntaxError: {msg} (line {line}, column {column})")]
    Syntax {
        line: usize,
        column: usize,
        msg: String,
    },
    #[error(
        "VersionError: unsupported trace format version {found} (expected {TRACE_FORMAT_VERSION})"
    )]
    Version { found: u32 },
    #[error("SyntaxError: unsupported clock unit {found:?} (expected {TRACE_CLOCK:?})")]
    Clock { found: String },
    #[error("UnknownTask: no task with id {id}")]
    UnknownTask { id: u64 },
}

impl TraceError {
    /// Stable machine-readable class name, used by the CLI error protocol.
    pub fn code(&self) -> &'static str {
        match self {
            TraceError::Syntax { .. } | TraceError::Clock { .. } => "SyntaxError",
            TraceError::Version { .. } => "VersionError",
            TraceError::UnknownTask { .. } => "UnknownTask",
        }
    }
}

/// A broken trace invariant found by [`validate_trace`]. Violations are data,
/// not errors: validation always runs to completion and reports all of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicateId {
        id: u64,
    },
    NoRoot,
    MultipleRoots {
        ids: Vec<u64>,
    },
    UnknownParent {
        id: u64,
        parent: u64,
    },
    ParentCycle {
        id: u64,
    },
    ReversedInterval {
        id: u64,
    },
    Containment {
        child: u64,
        parent: u64,
    },
    SiblingOverlap {
        first: u64,
        second: u64,
    },
    SiblingOrder {
        prev: u64,
        next: u64,
    },
    IterationIndex {
        id: u64,
        expected: u64,
        found: Option<u64>,
    },
    IterationOutsideLoop {
        id: u64,
    },
    IndexOnNonIteration {
        id: u64,
    },
    MemCounts {
        id: u64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateId { id } => write!(f, "duplicate task id {id}"),
            Violation::NoRoot => write!(f, "no root task (every record has a parent)"),
            Violation::MultipleRoots { ids } => write!(f, "multiple root tasks: {ids:?}"),
            Violation::UnknownParent { id, parent } => {
                write!(f, "task {id} references unknown parent {parent}")
            }
            Violation::ParentCycle { id } => {
                write!(f, "task {id} is not reachable from the root (parent cycle)")
            }
            Violation::ReversedInterval { id } => write!(f, "task {id} has end < start"),
            Violation::Containment { child, parent } => {
                write!(f, "task {child} is not contained in parent {parent}")
            }
            Violation::SiblingOverlap { first, second } => {
                write!(f, "sibling tasks {first} and {second} overlap")
            }
            Violation::SiblingOrder { prev, next } => {
                write!(
                    f,
                    "sibling task {next} starts before preceding sibling {prev}"
                )
            }
            Violation::IterationIndex {
                id,
                expected,
                found,
            } => write!(f, "iteration {id} has index {found:?}, expected {expected}"),
            Violation::IterationOutsideLoop { id } => {
                write!(f, "iteration {id} is a child of a non-loop task")
            }
            Violation::IndexOnNonIteration { id } => {
                write!(f, "non-iteration task {id} carries an iteration index")
            }
            Violation::MemCounts { id } => {
                write!(f, "task {id} per-level memory counts exceed reads + writes")
            }
        }
    }
}

/// Parse a trace file. Checks syntax, format version and clock unit only;
/// structural invariants are the business of [`validate_trace`].
pub fn parse_trace(input: &str) -> Result<TaskTrace, TraceError> {
    let trace: TaskTrace = match serde_json::from_str(input) {
        Ok(t) => t,
        Err(err) => {
            // Distinguish "newer format" from plain syntax breakage so the
            // caller gets an actionable message.
            #[derive(Deserialize)]
            struct VersionProbe {
                version: u32,
            }
            if let Ok(probe) = serde_json::from_str::<VersionProbe>(input) {
                if probe.version != TRACE_FORMAT_VERSION {
                    return Err(TraceError::Version {
                        found: probe.version,
                    });
                }
            }
            return Err(TraceError::Syntax {
                line: err.line(),
                column: err.column(),
                msg: err.to_string(),
            });
        }
    };
    if trace.version != TRACE_FORMAT_VERSION {
        return Err(TraceError::Version {
            found: trace.version,
        });
    }
    if trace.clock != TRACE_CLOCK {
        return Err(TraceError::Clock { found: trace.clock });
    }
    Ok(trace)
}

/// Serialize a trace in the documented file format. `parse_trace` of the
/// output reproduces the input value exactly.
pub fn write_trace(trace: &TaskTrace) -> String {
    let mut s = serde_json::to_string_pretty(trace).expect("trace serialization cannot fail");
    s.push('\n');
    s
}

/// Check every structural invariant and return all violations found.
pub fn validate_trace(trace: &TaskTrace) -> Vec<Violation> {
    let tasks = &trace.tasks;
    let mut violations = Vec::new();

    let mut pos_of: HashMap<u64, usize> = HashMap::with_capacity(tasks.len());
    for (pos, task) in tasks.iter().enumerate() {
        if pos_of.insert(task.id, pos).is_some() {
            violations.push(Violation::DuplicateId { id: task.id });
        }
    }

    let roots: Vec<u64> = tasks
        .iter()
        .filter(|t| t.parent.is_none())
        .map(|t| t.id)
        .collect();
    match roots.len() {
        0 if !tasks.is_empty() => violations.push(Violation::NoRoot),
        0 | 1 => {}
        _ => violations.push(Violation::MultipleRoots { ids: roots }),
    }

    for task in tasks {
        if task.end < task.start {
            violations.push(Violation::ReversedInterval { id: task.id });
        }
        match task.kind {
            TaskKind::Iteration if task.index.is_none() => {
                violations.push(Violation::IterationIndex {
                    id: task.id,
                    expected: 0,
                    found: None,
                })
            }
            TaskKind::Iteration => {}
            _ if task.index.is_some() => {
                violations.push(Violation::IndexOnNonIteration { id: task.id })
            }
            _ => {}
        }
        if let Some(mem) = &task.mem {
            let per_level: u128 = mem.per_level.values().map(|&c| u128::from(c)).sum();
            if per_level > u128::from(mem.reads) + u128::from(mem.writes) {
                violations.push(Violation::MemCounts { id: task.id });
            }
        }
    }

    // Parent links: existence, containment, reachability.
    for task in tasks {
        if let Some(parent) = task.parent {
            match pos_of.get(&parent) {
                None => violations.push(Violation::UnknownParent {
                    id: task.id,
                    parent,
                }),
                Some(&ppos) => {
                    let p = &tasks[ppos];
                    if task.start < p.start || task.end > p.end {
                        violations.push(Violation::Containment {
                            child: task.id,
                            parent: p.id,
                        });
                    }
                }
            }
        }
    }
    // Reachability from the root; a parent chain that never reaches a root is
    // a cycle (or hangs off one).
    let mut state = vec![0u8; tasks.len()]; // 0 unknown, 1 on stack, 2 ok, 3 cyclic
    for start in 0..tasks.len() {
        let mut chain = Vec::new();
        let mut cur = start;
        let verdict = loop {
            match state[cur] {
                2 => break 2,
                3 => break 3,
                1 => break 3, // closed a cycle within this walk
                _ => {}
            }
            state[cur] = 1;
            chain.push(cur);
            match tasks[cur].parent {
                None => break 2,
                Some(p) => match pos_of.get(&p) {
                    // Dangling parents are already reported; don't call them cycles.
                    None => break 2,
                    Some(&ppos) => cur = ppos,
                },
            }
        };
        for pos in chain {
            state[pos] = verdict;
            if verdict == 3 {
                violations.push(Violation::ParentCycle { id: tasks[pos].id });
            }
        }
    }

    // Sibling ordering (file order must be start order) and pairwise overlap
    // (a geometric property, checked on start-sorted intervals so an ordering
    // mistake is not double-reported as an overlap).
    let mut siblings: HashMap<u64, Vec<&TaskRecord>> = HashMap::new();
    let mut parents_in_order: Vec<u64> = Vec::new();
    for task in tasks {
        let Some(parent) = task.parent else { continue };
        let entry = siblings.entry(parent).or_default();
        if entry.is_empty() {
            parents_in_order.push(parent);
        }
        if let Some(prev) = entry.last() {
            if task.start < prev.start {
                violations.push(Violation::SiblingOrder {
                    prev: prev.id,
                    next: task.id,
                });
            }
        }
        entry.push(task);
    }
    for parent in parents_in_order {
        let mut group = siblings[&parent].clone();
        group.sort_by_key(|t| (t.start, t.end));
        let mut covered_until: Option<(u64, u64)> = None; // (max end, owner id)
        for task in group {
            if task.end <= task.start {
                continue; // empty intervals overlap nothing
            }
            if let Some((end, owner)) = covered_until {
                if task.start < end {
                    violations.push(Violation::SiblingOverlap {
                        first: owner,
                        second: task.id,
                    });
                }
            }
            if covered_until.is_none_or(|(end, _)| task.end > end) {
                covered_until = Some((task.end, task.id));
            }
        }
    }

    // Iteration children: only under loops, indexed 0..k-1 in order.
    let mut iter_counter: HashMap<u64, u64> = HashMap::new();
    for task in tasks {
        let Some(parent) = task.parent else { continue };
        if task.kind != TaskKind::Iteration {
            continue;
        }
        let parent_is_loop = pos_of
            .get(&parent)
            .map(|&p| tasks[p].kind == TaskKind::Loop)
            .unwrap_or(false);
        if !parent_is_loop {
            violations.push(Violation::IterationOutsideLoop { id: task.id });
            continue;
        }
        let counter = iter_counter.entry(parent).or_insert(0);
        if task.index != Some(*counter) {
            violations.push(Violation::IterationIndex {
                id: task.id,
                expected: *counter,
                found: task.index,
            });
        }
        *counter += 1;
    }

    violations
}

/// Compute the time a task spends outside all of its children: the
/// set-difference of its interval and the union of the children's intervals,
/// as ordered non-empty segments.
pub fn self_segments(trace: &TaskTrace, id: u64) -> Result<Vec<SelfSegment>, TraceError> {
    let task = trace
        .tasks
        .iter()
        .find(|t| t.id == id)
        .ok_or(TraceError::UnknownTask { id })?;
    let mut children: Vec<&TaskRecord> = trace
        .tasks
        .iter()
        .filter(|t| t.parent == Some(id))
        .collect();
    children.sort_by_key(|c| (c.start, c.end));

    let mut segments = Vec::new();
    let mut cursor = task.start;
    for child in children {
        if child.start > cursor {
            segments.push(SelfSegment {
                owner: id,
                start: cursor,
                end: child.start,
            });
        }
        cursor = cursor.max(child.end);
    }
    if cursor < task.end {
        segments.push(SelfSegment {
            owner: id,
            start: cursor,
            end: task.end,
        });
    }
    Ok(segments)
}

/// Duration of the whole run: the root task's span. This is the sequential
/// baseline every speedup is measured against.
pub fn total_cycles(trace: &TaskTrace) -> u64 {
    trace
        .tasks
        .iter()
        .find(|t| t.parent.is_none())
        .map(TaskRecord::duration)
        .unwrap_or(0)
}

/// Position-based lookup tables for one trace: id -> index, children lists in
/// file order, and the root. Built once, then shared by binding and
/// simulation, which are both hot paths.
#[derive(Debug, Clone)]
pub struct TraceIndex {
    pos_of: HashMap<u64, usize>,
    children: Vec<Vec<usize>>,
    root: usize,
}

impl TraceIndex {
    /// Requires a trace that already passed [`validate_trace`].
    pub fn new(trace: &TaskTrace) -> Result<Self, TraceError> {
        let mut pos_of = HashMap::with_capacity(trace.tasks.len());
        for (pos, task) in trace.tasks.iter().enumerate() {
            pos_of.insert(task.id, pos);
        }
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); trace.tasks.len()];
        let mut root = None;
        for (pos, task) in trace.tasks.iter().enumerate() {
            match task.parent {
                Some(parent) => {
                    let ppos = *pos_of
                        .get(&parent)
                        .ok_or(TraceError::UnknownTask { id: parent })?;
                    children[ppos].push(pos);
                }
                None => root = Some(pos),
            }
        }
        let root = root.ok_or(TraceError::UnknownTask { id: 0 })?;
        Ok(TraceIndex {
            pos_of,
            children,
            root,
        })
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn position(&self, id: u64) -> Option<usize> {
        self.pos_of.get(&id).copied()
    }

    /// Child positions in file (= start time) order.
    pub fn children(&self, pos: usize) -> &[usize] {
        &self.children[pos]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: u64, parent: Option<u64>, kind: TaskKind, start: u64, end: u64) -> TaskRecord {
        TaskRecord {
            id,
            parent,
            name: format!("t{id}"),
            kind,
            start,
            end,
            index: None,
            mem: None,
        }
    }

    fn trace_of(tasks: Vec<TaskRecord>) -> TaskTrace {
        TaskTrace {
            version: TRACE_FORMAT_VERSION,
            clock: TRACE_CLOCK.to_string(),
            tasks,
        }
    }

    #[test]
    fn parse_minimal_trace() {
        let input = r#"{
            "version": 1,
            "clock": "cycles",
            "tasks": [
                {"id": 0, "parent": null, "name": "main", "kind": "function", "start": 0, "end": 100}
            ]
        }"#;
        let trace = parse_trace(input).unwrap();
        assert_eq!(trace.tasks.len(), 1);
        assert_eq!(trace.tasks[0].duration(), 100);
        assert_eq!(total_cycles(&trace), 100);
    }

    #[test]
    fn parse_rejects_duplicate_field() {
        let input = r#"{
            "version": 1,
            "clock": "cycles",
            "tasks": [
                {"id": 0, "id": 1, "parent": null, "name": "main", "kind": "function", "start": 0, "end": 100}
            ]
        }"#;
        match parse_trace(input) {
            Err(TraceError::Syntax { line, .. }) => assert!(line >= 1),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_unsupported_version() {
        let input = r#"{"version": 7, "clock": "cycles", "tasks": []}"#;
        match parse_trace(input) {
            Err(TraceError::Version { found: 7 }) => {}
            other => panic!("expected version error, got {other:?}"),
        }
    }

    #[test]
    fn parse_reports_version_even_when_records_changed_shape() {
        // A hypothetical v7 record layout should surface as a version error,
        // not a field-level syntax error.
        let input = r#"{"version": 7, "clock": "cycles", "tasks": [{"span": [0, 10]}]}"#;
        match parse_trace(input) {
            Err(TraceError::Version { found: 7 }) => {}
            other => panic!("expected version error, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_unknown_clock() {
        let input = r#"{"version": 1, "clock": "ns", "tasks": []}"#;
        assert!(matches!(parse_trace(input), Err(TraceError::Clock { .. })));
    }

    #[test]
    fn validate_accepts_well_formed_tree() {
        let trace = trace_of(vec![
            record(0, None, TaskKind::Function, 0, 100),
            record(1, Some(0), TaskKind::Function, 10, 40),
            record(2, Some(0), TaskKind::Function, 40, 90),
        ]);
        assert_eq!(validate_trace(&trace), vec![]);
    }

    #[test]
    fn validate_flags_containment() {
        let trace = trace_of(vec![
            record(0, None, TaskKind::Function, 0, 100),
            record(1, Some(0), TaskKind::Function, 50, 120),
        ]);
        assert_eq!(
            validate_trace(&trace),
            vec![Violation::Containment {
                child: 1,
                parent: 0
            }]
        );
    }

    #[test]
    fn validate_flags_sibling_overlap() {
        let trace = trace_of(vec![
            record(0, None, TaskKind::Function, 0, 100),
            record(1, Some(0), TaskKind::Function, 10, 50),
            record(2, Some(0), TaskKind::Function, 40, 60),
        ]);
        assert_eq!(
            validate_trace(&trace),
            vec![Violation::SiblingOverlap {
                first: 1,
                second: 2
            }]
        );
    }

    #[test]
    fn validate_flags_overlap_hidden_behind_empty_sibling() {
        let trace = trace_of(vec![
            record(0, None, TaskKind::Function, 0, 100),
            record(1, Some(0), TaskKind::Function, 10, 50),
            record(2, Some(0), TaskKind::Function, 20, 20),
            record(3, Some(0), TaskKind::Function, 30, 60),
        ]);
        assert_eq!(
            validate_trace(&trace),
            vec![Violation::SiblingOverlap {
                first: 1,
                second: 3
            }]
        );
    }

    #[test]
    fn validate_flags_file_order() {
        let trace = trace_of(vec![
            record(0, None, TaskKind::Function, 0, 100),
            record(1, Some(0), TaskKind::Function, 50, 60),
            record(2, Some(0), TaskKind::Function, 10, 20),
        ]);
        assert_eq!(
            validate_trace(&trace),
            vec![Violation::SiblingOrder { prev: 1, next: 2 }]
        );
    }

    #[test]
    fn validate_flags_reversed_interval_and_roots() {
        let trace = trace_of(vec![
            record(0, None, TaskKind::Function, 10, 5),
            record(1, None, TaskKind::Function, 0, 0),
        ]);
        let violations = validate_trace(&trace);
        assert!(violations.contains(&Violation::MultipleRoots { ids: vec![0, 1] }));
        assert!(violations.contains(&Violation::ReversedInterval { id: 0 }));
    }

    #[test]
    fn validate_flags_parent_cycle() {
        let trace = trace_of(vec![
            record(0, None, TaskKind::Function, 0, 100),
            record(1, Some(2), TaskKind::Function, 10, 20),
            record(2, Some(1), TaskKind::Function, 10, 20),
        ]);
        let violations = validate_trace(&trace);
        assert!(violations.contains(&Violation::ParentCycle { id: 1 }));
        assert!(violations.contains(&Violation::ParentCycle { id: 2 }));
    }

    #[test]
    fn validate_flags_iteration_problems() {
        let mut iter0 = record(2, Some(1), TaskKind::Iteration, 10, 20);
        iter0.index = Some(0);
        let mut iter2 = record(3, Some(1), TaskKind::Iteration, 20, 30);
        iter2.index = Some(2); // gap
        let mut stray = record(4, Some(0), TaskKind::Iteration, 60, 70);
        stray.index = Some(0);
        let trace = trace_of(vec![
            record(0, None, TaskKind::Function, 0, 100),
            record(1, Some(0), TaskKind::Loop, 10, 50),
            iter0,
            iter2,
            stray,
        ]);
        let violations = validate_trace(&trace);
        assert!(violations.contains(&Violation::IterationIndex {
            id: 3,
            expected: 1,
            found: Some(2)
        }));
        assert!(violations.contains(&Violation::IterationOutsideLoop { id: 4 }));
    }

    #[test]
    fn validate_flags_mem_counts() {
        let mut task = record(0, None, TaskKind::Function, 0, 10);
        task.mem = Some(MemoryStats {
            reads: 2,
            writes: 1,
            per_level: BTreeMap::from([("l1".to_string(), 4)]),
        });
        assert_eq!(
            validate_trace(&trace_of(vec![task])),
            vec![Violation::MemCounts { id: 0 }]
        );
    }

    #[test]
    fn self_segments_leaf() {
        let trace = trace_of(vec![record(0, None, TaskKind::Function, 10, 50)]);
        let segs = self_segments(&trace, 0).unwrap();
        assert_eq!(
            segs,
            vec![SelfSegment {
                owner: 0,
                start: 10,
                end: 50
            }]
        );
    }

    #[test]
    fn self_segments_around_children() {
        let trace = trace_of(vec![
            record(0, None, TaskKind::Function, 0, 100),
            record(1, Some(0), TaskKind::Function, 20, 40),
            record(2, Some(0), TaskKind::Function, 60, 80),
        ]);
        let segs = self_segments(&trace, 0).unwrap();
        let spans: Vec<(u64, u64)> = segs.iter().map(|s| (s.start, s.end)).collect();
        assert_eq!(spans, vec![(0, 20), (40, 60), (80, 100)]);
    }

    #[test]
    fn self_segments_fully_covered() {
        let trace = trace_of(vec![
            record(0, None, TaskKind::Function, 0, 10),
            record(1, Some(0), TaskKind::Function, 0, 10),
        ]);
        assert_eq!(self_segments(&trace, 0).unwrap(), vec![]);
    }

    #[test]
    fn self_segments_unknown_task() {
        let trace = trace_of(vec![record(0, None, TaskKind::Function, 0, 10)]);
        assert!(matches!(
            self_segments(&trace, 7),
            Err(TraceError::UnknownTask { id: 7 })
        ));
    }

    #[test]
    fn total_cycles_degenerate_root() {
        let trace = trace_of(vec![record(0, None, TaskKind::Function, 5, 5)]);
        assert_eq!(total_cycles(&trace), 0);
    }

    #[test]
    fn round_trip_preserves_value() {
        let mut iter = record(2, Some(1), TaskKind::Iteration, 10, 30);
        iter.index = Some(0);
        iter.mem = Some(MemoryStats {
            reads: 10,
            writes: 5,
            per_level: BTreeMap::from([("l1".to_string(), 12), ("l2".to_string(), 3)]),
        });
        let trace = trace_of(vec![
            record(0, None, TaskKind::Function, 0, 100),
            record(1, Some(0), TaskKind::Loop, 10, 30),
            iter,
        ]);
        assert_eq!(parse_trace(&write_trace(&trace)).unwrap(), trace);
    }
}
