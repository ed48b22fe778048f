//! Parallelization directives and their binding onto trace tasks.
//!
//! A directive file describes the hypothetical parallelization to evaluate:
//! `parallel_for` on loops, `critical` on regions that must serialize under a
//! named lock, `single` on regions only one worker should run. Targets are
//! task names; because a source-level annotation applies to every dynamic
//! execution of its region, `critical` and `single` bind to *every* task with
//! the target name (name-class binding). A `parallel_for` defines fork/join
//! structure and must resolve to exactly one loop; use an ordinal selector
//! (`name#k`, zero-based occurrence in file order) to pick one of several.

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::{validate_trace, TaskKind, TaskTrace, TraceIndex, Violation};

pub const DEFAULT_LOCK: &str = "global";

/// Worksharing policy for a `parallel_for`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchedulePolicy {
    /// One contiguous block per core.
    StaticBlock,
    /// Fixed-size chunks dealt round-robin to cores.
    StaticChunk { chunk: u64 },
    /// Fixed-size chunks dispatched at runtime to the earliest-free core.
    Dynamic { chunk: u64 },
}

impl fmt::Display for SchedulePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchedulePolicy::StaticBlock => write!(f, "static_block"),
            SchedulePolicy::StaticChunk { chunk } => write!(f, "static_chunk({chunk})"),
            SchedulePolicy::Dynamic { chunk } => write!(f, "dynamic({chunk})"),
        }
    }
}

/// Task-name selector, optionally narrowed to the k-th occurrence (`name#k`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetSelector {
    pub name: String,
    pub occurrence: Option<usize>,
}

impl TargetSelector {
    /// Parse `name` or `name#k`. Only a trailing `#<integer>` is treated as
    /// an ordinal; any other `#` stays part of the name.
    pub fn parse(raw: &str) -> TargetSelector {
        if let Some((name, ord)) = raw.rsplit_once('#') {
            if !name.is_empty() {
                if let Ok(occurrence) = ord.parse::<usize>() {
                    return TargetSelector {
                        name: name.to_string(),
                        occurrence: Some(occurrence),
                    };
                }
            }
        }
        TargetSelector {
            name: raw.to_string(),
            occurrence: None,
        }
    }
}

impl fmt::Display for TargetSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.occurrence {
            Some(k) => write!(f, "{}#{k}", self.name),
            None => f.write_str(&self.name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DirectiveKind {
    ParallelFor { schedule: SchedulePolicy },
    Critical { lock: String },
    Single,
}

impl DirectiveKind {
    fn type_name(&self) -> &'static str {
        match self {
            DirectiveKind::ParallelFor { .. } => "parallel_for",
            DirectiveKind::Critical { .. } => "critical",
            DirectiveKind::Single => "single",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Directive {
    pub kind: DirectiveKind,
    pub target: TargetSelector,
    /// 0 means "all cores of the simulation run"; explicit values are capped
    /// at the simulated core count with a diagnostic.
    pub num_threads: u32,
}

impl fmt::Display for Directive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            DirectiveKind::ParallelFor { schedule } => {
                write!(f, "parallel_for {} schedule={schedule}", self.target)?
            }
            DirectiveKind::Critical { lock } => write!(f, "critical {} lock={lock}", self.target)?,
            DirectiveKind::Single => write!(f, "single {}", self.target)?,
        }
        if self.num_threads != 0 {
            write!(f, " num_threads={}", self.num_threads)?;
        }
        Ok(())
    }
}

/// Parsed directive file: the Step 3 artifact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectiveSpec {
    pub max_cores_requested: u32,
    pub directives: Vec<Directive>,
}

#[derive(Debug, Error)]
pub enum DirectiveError {
    #[error("SyntaxError: {msg} (line {line}, column {column})")]
    Syntax {
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("InvalidPolicy: {msg}")]
    InvalidPolicy { msg: String },
    #[error("InvalidValue: {msg}")]
    InvalidValue { msg: String },
    #[error("DuplicateTarget: {target} is targeted by more than one directive")]
    DuplicateTarget { target: String },
    #[error("TargetNotFound: no task matches {target}")]
    TargetNotFound { target: String },
    #[error("AmbiguousTarget: {target} matches {count} tasks; parallel_for needs a unique loop (use name#k)")]
    AmbiguousTarget { target: String, count: usize },
    #[error("NotALoop: parallel_for target {target} resolved to task {id}, which is not a loop")]
    NotALoop { target: String, id: u64 },
    #[error(
        "EmptyLoop: parallel_for target {target} resolved to loop {id} with no iteration children"
    )]
    EmptyLoop { target: String, id: u64 },
    #[error("NestedParallelism: directive on task {inner} conflicts with enclosing directive on task {outer}")]
    NestedParallelism { inner: u64, outer: u64 },
    #[error("InvalidTrace: trace fails validation ({first}{rest})", rest = if *.count > 1 { format!(" and {} more violation(s)", count - 1) } else { String::new() })]
    InvalidTrace { first: String, count: usize },
}

impl DirectiveError {
    pub fn code(&self) -> &'static str {
        match self {
            DirectiveError::Syntax { .. } => "SyntaxError",
            DirectiveError::InvalidPolicy { .. } => "InvalidPolicy",
            DirectiveError::InvalidValue { .. } => "InvalidValue",
            DirectiveError::DuplicateTarget { .. } => "DuplicateTarget",
            DirectiveError::TargetNotFound { .. } => "TargetNotFound",
            DirectiveError::AmbiguousTarget { .. } => "AmbiguousTarget",
            DirectiveError::NotALoop { .. } => "NotALoop",
            DirectiveError::EmptyLoop { .. } => "EmptyLoop",
            DirectiveError::NestedParallelism { .. } => "NestedParallelism",
            DirectiveError::InvalidTrace { .. } => "InvalidTrace",
        }
    }
}

// File-level representation.
#[derive(Serialize, Deserialize)]
struct RawSpec {
    max_cores_requested: u32,
    directives: Vec<RawDirective>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDirective {
    #[serde(rename = "type")]
    kind: String,
    target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    schedule: Option<RawPolicy>,
    #[serde(default, skip_serializing_if = "is_zero")]
    num_threads: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lock: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicy {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    chunk: Option<u64>,
}

fn is_zero(n: &u32) -> bool {
    *n == 0
}

fn policy_from_raw(raw: &RawPolicy) -> Result<SchedulePolicy, DirectiveError> {
    let chunk = || -> Result<u64, DirectiveError> {
        match raw.chunk {
            Some(c) if c >= 1 => Ok(c),
            Some(c) => Err(DirectiveError::InvalidPolicy {
                msg: format!("{} chunk must be >= 1, got {c}", raw.kind),
            }),
            None => Err(DirectiveError::InvalidPolicy {
                msg: format!("{} schedule requires a chunk size", raw.kind),
            }),
        }
    };
    match raw.kind.as_str() {
        "static_block" => {
            if raw.chunk.is_some() {
                return Err(DirectiveError::InvalidPolicy {
                    msg: "static_block takes no chunk size".to_string(),
                });
            }
            Ok(SchedulePolicy::StaticBlock)
        }
        "static_chunk" => Ok(SchedulePolicy::StaticChunk { chunk: chunk()? }),
        "dynamic" => Ok(SchedulePolicy::Dynamic { chunk: chunk()? }),
        other => Err(DirectiveError::InvalidPolicy {
            msg: format!("unknown schedule kind {other:?}"),
        }),
    }
}

fn directive_from_raw(raw: &RawDirective) -> Result<Directive, DirectiveError> {
    let kind = match raw.kind.as_str() {
        "parallel_for" => {
            let Some(policy) = &raw.schedule else {
                return Err(DirectiveError::InvalidPolicy {
                    msg: format!("parallel_for on {:?} requires a schedule", raw.target),
                });
            };
            if raw.lock.is_some() {
                return Err(DirectiveError::InvalidPolicy {
                    msg: "lock is only valid on critical directives".to_string(),
                });
            }
            DirectiveKind::ParallelFor {
                schedule: policy_from_raw(policy)?,
            }
        }
        "critical" | "single" => {
            if raw.schedule.is_some() {
                return Err(DirectiveError::InvalidPolicy {
                    msg: format!("{} directives take no schedule", raw.kind),
                });
            }
            if raw.kind == "critical" {
                DirectiveKind::Critical {
                    lock: raw.lock.clone().unwrap_or_else(|| DEFAULT_LOCK.to_string()),
                }
            } else {
                if raw.lock.is_some() {
                    return Err(DirectiveError::InvalidPolicy {
                        msg: "lock is only valid on critical directives".to_string(),
                    });
                }
                DirectiveKind::Single
            }
        }
        other => {
            return Err(DirectiveError::InvalidPolicy {
                msg: format!("unknown directive type {other:?}"),
            })
        }
    };
    Ok(Directive {
        kind,
        target: TargetSelector::parse(&raw.target),
        num_threads: raw.num_threads,
    })
}

fn directive_to_raw(d: &Directive) -> RawDirective {
    let (schedule, lock) = match &d.kind {
        DirectiveKind::ParallelFor { schedule } => {
            let raw = match schedule {
                SchedulePolicy::StaticBlock => RawPolicy {
                    kind: "static_block".to_string(),
                    chunk: None,
                },
                SchedulePolicy::StaticChunk { chunk } => RawPolicy {
                    kind: "static_chunk".to_string(),
                    chunk: Some(*chunk),
                },
                SchedulePolicy::Dynamic { chunk } => RawPolicy {
                    kind: "dynamic".to_string(),
                    chunk: Some(*chunk),
                },
            };
            (Some(raw), None)
        }
        DirectiveKind::Critical { lock } => (None, Some(lock.clone())),
        DirectiveKind::Single => (None, None),
    };
    RawDirective {
        kind: d.kind.type_name().to_string(),
        target: d.target.to_string(),
        schedule,
        num_threads: d.num_threads,
        lock,
    }
}

/// Parse a directive file and check its structural validity.
pub fn parse_spec(input: &str) -> Result<DirectiveSpec, DirectiveError> {
    let raw: RawSpec = serde_json::from_str(input).map_err(|e| DirectiveError::Syntax {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    if raw.max_cores_requested == 0 {
        return Err(DirectiveError::InvalidValue {
            msg: "max_cores_requested must be >= 1".to_string(),
        });
    }
    let mut directives = Vec::with_capacity(raw.directives.len());
    let mut seen: HashMap<String, ()> = HashMap::new();
    for raw_directive in &raw.directives {
        let directive = directive_from_raw(raw_directive)?;
        let key = directive.target.to_string();
        if seen.insert(key.clone(), ()).is_some() {
            return Err(DirectiveError::DuplicateTarget { target: key });
        }
        directives.push(directive);
    }
    Ok(DirectiveSpec {
        max_cores_requested: raw.max_cores_requested,
        directives,
    })
}

/// Serialize a directive spec; `parse_spec` of the output reproduces it.
pub fn write_spec(spec: &DirectiveSpec) -> String {
    let raw = RawSpec {
        max_cores_requested: spec.max_cores_requested,
        directives: spec.directives.iter().map(directive_to_raw).collect(),
    };
    let mut s = serde_json::to_string_pretty(&raw).expect("spec serialization cannot fail");
    s.push('\n');
    s
}

/// A directive spec resolved against a concrete trace: the scheduler's input.
#[derive(Debug, Clone)]
pub struct BoundProgram {
    pub trace: TaskTrace,
    pub index: TraceIndex,
    pub directives: Vec<Directive>,
    /// Task id -> index into `directives`.
    pub bindings: BTreeMap<u64, usize>,
    pub diagnostics: Vec<String>,
}

impl BoundProgram {
    pub fn binding_for(&self, task_id: u64) -> Option<&Directive> {
        self.bindings.get(&task_id).map(|&i| &self.directives[i])
    }

    /// Program with no directives: simulates as the pure sequential schedule.
    pub fn unparallelized(trace: TaskTrace) -> Result<Self, DirectiveError> {
        bind(
            &DirectiveSpec {
                max_cores_requested: 1,
                directives: Vec::new(),
            },
            trace,
        )
    }
}

/// Resolve every directive of `spec` against `trace`.
///
/// `parallel_for` targets must match exactly one loop task; `critical` and
/// `single` bind to every task carrying the target name. The trace is
/// validated first so later stages can assume structural soundness.
pub fn bind(spec: &DirectiveSpec, trace: TaskTrace) -> Result<BoundProgram, DirectiveError> {
    let violations = validate_trace(&trace);
    if let Some(first) = violations.first() {
        return Err(DirectiveError::InvalidTrace {
            first: first.to_string(),
            count: violations.len(),
        });
    }
    let index = TraceIndex::new(&trace).map_err(|_| DirectiveError::InvalidTrace {
        first: Violation::NoRoot.to_string(),
        count: 1,
    })?;

    let mut occurrences: HashMap<&str, Vec<usize>> = HashMap::new();
    for (pos, task) in trace.tasks.iter().enumerate() {
        occurrences.entry(task.name.as_str()).or_default().push(pos);
    }

    let mut bindings: BTreeMap<u64, usize> = BTreeMap::new();
    let mut diagnostics: Vec<String> = Vec::new();
    for (directive_idx, directive) in spec.directives.iter().enumerate() {
        let all = occurrences
            .get(directive.target.name.as_str())
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        let matches: Vec<usize> = match directive.target.occurrence {
            Some(k) => match all.get(k) {
                Some(&pos) => vec![pos],
                None => {
                    return Err(DirectiveError::TargetNotFound {
                        target: directive.target.to_string(),
                    })
                }
            },
            None => all.to_vec(),
        };
        if matches.is_empty() {
            return Err(DirectiveError::TargetNotFound {
                target: directive.target.to_string(),
            });
        }
        if matches!(directive.kind, DirectiveKind::ParallelFor { .. }) {
            if matches.len() > 1 {
                return Err(DirectiveError::AmbiguousTarget {
                    target: directive.target.to_string(),
                    count: matches.len(),
                });
            }
            let pos = matches[0];
            let task = &trace.tasks[pos];
            if task.kind != TaskKind::Loop {
                return Err(DirectiveError::NotALoop {
                    target: directive.target.to_string(),
                    id: task.id,
                });
            }
            let has_iteration = index
                .children(pos)
                .iter()
                .any(|&c| trace.tasks[c].kind == TaskKind::Iteration);
            if !has_iteration {
                return Err(DirectiveError::EmptyLoop {
                    target: directive.target.to_string(),
                    id: task.id,
                });
            }
        }
        for &pos in &matches {
            let id = trace.tasks[pos].id;
            if bindings.insert(id, directive_idx).is_some() {
                return Err(DirectiveError::DuplicateTarget {
                    target: directive.target.to_string(),
                });
            }
        }
    }

    // A worksharing region may not sit under any other bound construct:
    // under another parallel_for that is nested parallelism, under a bound
    // critical/single the region would be swallowed by serialization.
    for (&id, &didx) in &bindings {
        if !matches!(
            spec.directives[didx].kind,
            DirectiveKind::ParallelFor { .. }
        ) {
            continue;
        }
        let mut pos = index.position(id).expect("bound task exists");
        while let Some(parent) = trace.tasks[pos].parent {
            pos = index.position(parent).expect("validated parent");
            if bindings.contains_key(&parent) {
                return Err(DirectiveError::NestedParallelism {
                    inner: id,
                    outer: parent,
                });
            }
        }
    }

    // A bound critical/single executes as one atomic block, so a further
    // critical/single binding inside it can never take effect. Drop those
    // with a diagnostic instead of pretending their overheads are charged.
    let mut shadowed: Vec<(u64, u64)> = Vec::new();
    for &id in bindings.keys() {
        let mut pos = index.position(id).expect("bound task exists");
        while let Some(parent) = trace.tasks[pos].parent {
            pos = index.position(parent).expect("validated parent");
            if let Some(&outer_didx) = bindings.get(&parent) {
                if !matches!(
                    spec.directives[outer_didx].kind,
                    DirectiveKind::ParallelFor { .. }
                ) {
                    shadowed.push((id, parent));
                }
                break; // nearest bound ancestor decides
            }
        }
    }
    for (inner, outer) in shadowed {
        bindings.remove(&inner);
        diagnostics.push(format!(
            "directive on task {inner} is shadowed by the atomic bound region on task {outer} and was dropped"
        ));
    }

    Ok(BoundProgram {
        trace,
        index,
        directives: spec.directives.clone(),
        bindings,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{TaskRecord, TRACE_CLOCK, TRACE_FORMAT_VERSION};

    fn task(
        id: u64,
        parent: Option<u64>,
        name: &str,
        kind: TaskKind,
        span: (u64, u64),
    ) -> TaskRecord {
        TaskRecord {
            id,
            parent,
            name: name.to_string(),
            kind,
            start: span.0,
            end: span.1,
            index: None,
            mem: None,
        }
    }

    fn iteration(id: u64, parent: u64, index: u64, span: (u64, u64)) -> TaskRecord {
        TaskRecord {
            index: Some(index),
            ..task(id, Some(parent), "row", TaskKind::Iteration, span)
        }
    }

    /// root > loop "detect_rows" > 3 iterations of 10 cycles.
    fn loop_trace() -> TaskTrace {
        TaskTrace {
            version: TRACE_FORMAT_VERSION,
            clock: TRACE_CLOCK.to_string(),
            tasks: vec![
                task(0, None, "main", TaskKind::Function, (0, 30)),
                task(1, Some(0), "detect_rows", TaskKind::Loop, (0, 30)),
                iteration(2, 1, 0, (0, 10)),
                iteration(3, 1, 1, (10, 20)),
                iteration(4, 1, 2, (20, 30)),
            ],
        }
    }

    const ONE_FOR: &str = r#"{
        "max_cores_requested": 8,
        "directives": [
            {"type": "parallel_for", "target": "detect_rows",
             "schedule": {"kind": "dynamic", "chunk": 1}}
        ]
    }"#;

    #[test]
    fn parse_single_parallel_for() {
        let spec = parse_spec(ONE_FOR).unwrap();
        assert_eq!(spec.directives.len(), 1);
        assert_eq!(
            spec.directives[0].kind,
            DirectiveKind::ParallelFor {
                schedule: SchedulePolicy::Dynamic { chunk: 1 }
            }
        );
    }

    #[test]
    fn parse_rejects_duplicate_target() {
        let input = r#"{
            "max_cores_requested": 8,
            "directives": [
                {"type": "critical", "target": "detect_rows"},
                {"type": "single", "target": "detect_rows"}
            ]
        }"#;
        assert!(matches!(
            parse_spec(input),
            Err(DirectiveError::DuplicateTarget { .. })
        ));
    }

    #[test]
    fn parse_rejects_zero_chunk() {
        let input = r#"{
            "max_cores_requested": 8,
            "directives": [
                {"type": "parallel_for", "target": "x",
                 "schedule": {"kind": "dynamic", "chunk": 0}}
            ]
        }"#;
        assert!(matches!(
            parse_spec(input),
            Err(DirectiveError::InvalidPolicy { .. })
        ));
    }

    #[test]
    fn parse_rejects_dynamic_without_chunk() {
        let input = r#"{
            "max_cores_requested": 8,
            "directives": [
                {"type": "parallel_for", "target": "x", "schedule": {"kind": "dynamic"}}
            ]
        }"#;
        assert!(matches!(
            parse_spec(input),
            Err(DirectiveError::InvalidPolicy { .. })
        ));
    }

    #[test]
    fn parse_rejects_schedule_on_critical() {
        let input = r#"{
            "max_cores_requested": 8,
            "directives": [
                {"type": "critical", "target": "x", "schedule": {"kind": "static_block"}}
            ]
        }"#;
        assert!(matches!(
            parse_spec(input),
            Err(DirectiveError::InvalidPolicy { .. })
        ));
    }

    #[test]
    fn bind_resolves_loop() {
        let spec = parse_spec(ONE_FOR).unwrap();
        let bound = bind(&spec, loop_trace()).unwrap();
        assert_eq!(bound.bindings.len(), 1);
        assert!(bound.binding_for(1).is_some());
    }

    #[test]
    fn bind_rejects_parallel_for_on_function() {
        let input = r#"{
            "max_cores_requested": 8,
            "directives": [
                {"type": "parallel_for", "target": "main",
                 "schedule": {"kind": "static_block"}}
            ]
        }"#;
        let spec = parse_spec(input).unwrap();
        assert!(matches!(
            bind(&spec, loop_trace()),
            Err(DirectiveError::NotALoop { id: 0, .. })
        ));
    }

    #[test]
    fn bind_name_class_critical_binds_every_occurrence() {
        let mut trace = loop_trace();
        // an "append_kp" region inside each iteration
        trace
            .tasks
            .push(task(5, Some(2), "append_kp", TaskKind::Region, (4, 7)));
        trace
            .tasks
            .push(task(6, Some(3), "append_kp", TaskKind::Region, (14, 17)));
        trace
            .tasks
            .push(task(7, Some(4), "append_kp", TaskKind::Region, (24, 27)));
        let input = r#"{
            "max_cores_requested": 8,
            "directives": [
                {"type": "parallel_for", "target": "detect_rows",
                 "schedule": {"kind": "dynamic", "chunk": 1}},
                {"type": "critical", "target": "append_kp", "lock": "kp"}
            ]
        }"#;
        let spec = parse_spec(input).unwrap();
        let bound = bind(&spec, trace).unwrap();
        assert_eq!(bound.bindings.len(), 4); // loop + three regions
        for id in [5, 6, 7] {
            assert!(matches!(
                bound.binding_for(id).map(|d| &d.kind),
                Some(DirectiveKind::Critical { .. })
            ));
        }
    }

    #[test]
    fn bind_ordinal_selects_one_occurrence() {
        let mut trace = loop_trace();
        trace
            .tasks
            .push(task(5, Some(2), "append_kp", TaskKind::Region, (4, 7)));
        trace
            .tasks
            .push(task(6, Some(3), "append_kp", TaskKind::Region, (14, 17)));
        let input = r#"{
            "max_cores_requested": 8,
            "directives": [{"type": "single", "target": "append_kp#1"}]
        }"#;
        let bound = bind(&parse_spec(input).unwrap(), trace).unwrap();
        assert!(bound.binding_for(5).is_none());
        assert!(bound.binding_for(6).is_some());
    }

    #[test]
    fn bind_rejects_ambiguous_parallel_for() {
        let mut trace = loop_trace();
        trace.tasks[0].end = 70;
        trace
            .tasks
            .push(task(5, Some(0), "detect_rows", TaskKind::Loop, (30, 70)));
        let mut it = iteration(6, 5, 0, (30, 70));
        it.parent = Some(5);
        trace.tasks.push(it);
        let spec = parse_spec(ONE_FOR).unwrap();
        assert!(matches!(
            bind(&spec, trace),
            Err(DirectiveError::AmbiguousTarget { count: 2, .. })
        ));
    }

    #[test]
    fn bind_reports_missing_target() {
        let input = r#"{
            "max_cores_requested": 8,
            "directives": [
                {"type": "parallel_for", "target": "no_such_loop",
                 "schedule": {"kind": "static_block"}}
            ]
        }"#;
        let spec = parse_spec(input).unwrap();
        assert!(matches!(
            bind(&spec, loop_trace()),
            Err(DirectiveError::TargetNotFound { .. })
        ));
    }

    #[test]
    fn bind_rejects_nested_parallel_for() {
        let mut trace = loop_trace();
        // inner loop inside iteration 0
        trace
            .tasks
            .push(task(5, Some(2), "inner", TaskKind::Loop, (2, 8)));
        let mut it = iteration(6, 5, 0, (2, 8));
        it.parent = Some(5);
        trace.tasks.push(it);
        let input = r#"{
            "max_cores_requested": 8,
            "directives": [
                {"type": "parallel_for", "target": "detect_rows",
                 "schedule": {"kind": "static_block"}},
                {"type": "parallel_for", "target": "inner",
                 "schedule": {"kind": "static_block"}}
            ]
        }"#;
        let spec = parse_spec(input).unwrap();
        assert!(matches!(
            bind(&spec, trace),
            Err(DirectiveError::NestedParallelism { inner: 5, outer: 1 })
        ));
    }

    #[test]
    fn bind_rejects_parallel_for_under_bound_critical() {
        let mut trace = loop_trace();
        trace.tasks[0].end = 100;
        trace
            .tasks
            .push(task(5, Some(0), "guarded", TaskKind::Region, (30, 100)));
        trace
            .tasks
            .push(task(6, Some(5), "inner", TaskKind::Loop, (30, 100)));
        let mut it = iteration(7, 6, 0, (30, 100));
        it.parent = Some(6);
        trace.tasks.push(it);
        let input = r#"{
            "max_cores_requested": 8,
            "directives": [
                {"type": "critical", "target": "guarded"},
                {"type": "parallel_for", "target": "inner",
                 "schedule": {"kind": "static_block"}}
            ]
        }"#;
        let spec = parse_spec(input).unwrap();
        assert!(matches!(
            bind(&spec, trace),
            Err(DirectiveError::NestedParallelism { inner: 6, outer: 5 })
        ));
    }

    #[test]
    fn bind_rejects_invalid_trace() {
        let mut trace = loop_trace();
        trace.tasks[2].end = 99; // escapes the loop
        let spec = parse_spec(ONE_FOR).unwrap();
        assert!(matches!(
            bind(&spec, trace),
            Err(DirectiveError::InvalidTrace { .. })
        ));
    }

    #[test]
    fn bind_is_deterministic() {
        let mut trace = loop_trace();
        trace
            .tasks
            .push(task(5, Some(2), "append_kp", TaskKind::Region, (4, 7)));
        let input = r#"{
            "max_cores_requested": 8,
            "directives": [
                {"type": "parallel_for", "target": "detect_rows",
                 "schedule": {"kind": "static_chunk", "chunk": 2}},
                {"type": "critical", "target": "append_kp"}
            ]
        }"#;
        let spec = parse_spec(input).unwrap();
        let a = bind(&spec, trace.clone()).unwrap();
        let b = bind(&spec, trace).unwrap();
        assert_eq!(a.bindings, b.bindings);
        assert_eq!(a.directives, b.directives);
    }

    #[test]
    fn bind_drops_binding_shadowed_by_atomic_region() {
        let mut trace = loop_trace();
        trace
            .tasks
            .push(task(5, Some(2), "guarded", TaskKind::Region, (2, 9)));
        trace
            .tasks
            .push(task(6, Some(5), "inner", TaskKind::Region, (4, 6)));
        let input = r#"{
            "max_cores_requested": 8,
            "directives": [
                {"type": "critical", "target": "guarded"},
                {"type": "single", "target": "inner"}
            ]
        }"#;
        let bound = bind(&parse_spec(input).unwrap(), trace).unwrap();
        assert!(bound.binding_for(5).is_some());
        assert!(
            bound.binding_for(6).is_none(),
            "inner binding must be dropped"
        );
        assert_eq!(bound.diagnostics.len(), 1);
        assert!(bound.diagnostics[0].contains("shadowed"));
    }

    #[test]
    fn bind_keeps_critical_inside_bound_loop() {
        let mut trace = loop_trace();
        trace
            .tasks
            .push(task(5, Some(2), "append_kp", TaskKind::Region, (4, 7)));
        let input = r#"{
            "max_cores_requested": 8,
            "directives": [
                {"type": "parallel_for", "target": "detect_rows",
                 "schedule": {"kind": "static_block"}},
                {"type": "critical", "target": "append_kp"}
            ]
        }"#;
        let bound = bind(&parse_spec(input).unwrap(), trace).unwrap();
        assert!(
            bound.binding_for(5).is_some(),
            "loop is not an atomic region"
        );
        assert!(bound.diagnostics.is_empty());
    }

    #[test]
    fn selector_parsing() {
        assert_eq!(
            TargetSelector::parse("detect_rows"),
            TargetSelector {
                name: "detect_rows".to_string(),
                occurrence: None
            }
        );
        assert_eq!(
            TargetSelector::parse("detect_rows#3"),
            TargetSelector {
                name: "detect_rows".to_string(),
                occurrence: Some(3)
            }
        );
        // non-numeric suffix stays part of the name
        assert_eq!(
            TargetSelector::parse("a#b"),
            TargetSelector {
                name: "a#b".to_string(),
                occurrence: None
            }
        );
    }

    #[test]
    fn spec_round_trip() {
        let input = r#"{
            "max_cores_requested": 16,
            "directives": [
                {"type": "parallel_for", "target": "detect_rows",
                 "schedule": {"kind": "dynamic", "chunk": 4}, "num_threads": 8},
                {"type": "critical", "target": "append_kp", "lock": "kp"},
                {"type": "single", "target": "init#0"}
            ]
        }"#;
        let spec = parse_spec(input).unwrap();
        assert_eq!(parse_spec(&write_spec(&spec)).unwrap(), spec);
    }
}
