//! What-if multicore speedup prediction from sequential traces.
//!
//! The library follows a four-step flow:
//!
//! 1. **Characterize** the target platform: build or load a
//!    [`chardb::CharacterizationDB`] of parallel-runtime construct overheads
//!    per team size, plus memory-level parameters.
//! 2. **Trace** the sequential application: parse or generate a
//!    [`trace::TaskTrace`], a tree of timestamped tasks.
//! 3. **Annotate**: parse a [`directives::DirectiveSpec`] of hypothetical
//!    `parallel_for`/`critical`/`single` directives and bind it onto the
//!    trace.
//! 4. **Analyze**: [`scheduler::simulate`] deterministic parallel schedules
//!    for each core count and reduce them to speedup curves, cycle stacks and
//!    a bottleneck report with [`analysis`].
//!
//! The [`oracle`] module carries intentionally simple reference schedulers
//! used by the test suites, and [`synthgen`] produces the deterministic
//! synthetic workloads the examples and benchmarks run on.

pub mod analysis;
pub mod chardb;
pub mod directives;
pub mod oracle;
pub mod scheduler;
pub mod synthgen;
pub mod trace;

pub use analysis::{
    cycle_stack, emit_gantt, emit_report, error_metrics, speedup, CycleStack, ErrorMetrics, Report,
    ReportFormat, SpeedupCurve, StackCategory, Verdict,
};
pub use chardb::{
    parse_db, synthesize_db, write_db, CharacterizationDB, Construct, MemoryLevel, OverheadSample,
    SynthParams,
};
pub use directives::{
    bind, parse_spec, write_spec, BoundProgram, Directive, DirectiveKind, DirectiveSpec,
    SchedulePolicy, TargetSelector,
};
pub use scheduler::{
    simulate, simulate_with, sweep, EventSource, ScheduleEvent, ScheduleResult, SegmentTag,
    SimConfig,
};
pub use synthgen::{gen_fast_like, gen_loop_trace, CostModel, GeneratedTrace, WorkloadParams};
pub use trace::{
    parse_trace, self_segments, total_cycles, validate_trace, write_trace, MemoryStats,
    SelfSegment, TaskKind, TaskRecord, TaskTrace,
};
