//! Turning schedules into answers: speedup curves, cycle stacks, error
//! metrics, and the parallelization report.
//!
//! A cycle stack decomposes `cores x makespan` into five categories so the
//! dominant scaling limiter is visible at a glance:
//!
//! * `compute` - traced application work
//! * `runtime_overhead` - fork, dispatch/init, join/barrier and critical
//!   enter/exit costs paid to the parallel runtime
//! * `sync_lock` - time blocked waiting for a lock another core holds
//! * `load_imbalance` - time waiting at a region-end barrier (or for a
//!   single token) for slower cores
//! * `sequential` - cores idling while serial code runs elsewhere
//!
//! The five always sum to `cores x makespan` exactly. Speedups divide the raw
//! sequential trace duration by the simulated makespan; the baseline carries
//! no single-core runtime overheads.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::directives::BoundProgram;
use crate::scheduler::{tag_totals, ScheduleResult, SegmentTag};

/// Cycle-stack categories, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StackCategory {
    Compute,
    RuntimeOverhead,
    SyncLock,
    LoadImbalance,
    Sequential,
}

impl StackCategory {
    pub const ALL: [StackCategory; 5] = [
        StackCategory::Compute,
        StackCategory::RuntimeOverhead,
        StackCategory::SyncLock,
        StackCategory::LoadImbalance,
        StackCategory::Sequential,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StackCategory::Compute => "compute",
            StackCategory::RuntimeOverhead => "runtime_overhead",
            StackCategory::SyncLock => "sync_lock",
            StackCategory::LoadImbalance => "load_imbalance",
            StackCategory::Sequential => "sequential",
        }
    }
}

impl fmt::Display for StackCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Exact decomposition of one schedule's `cores x makespan` cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleStack {
    pub cores: u32,
    pub total: u64,
    pub compute: u64,
    pub runtime_overhead: u64,
    pub sync_lock: u64,
    pub load_imbalance: u64,
    pub sequential: u64,
}

impl CycleStack {
    pub fn get(&self, category: StackCategory) -> u64 {
        match category {
            StackCategory::Compute => self.compute,
            StackCategory::RuntimeOverhead => self.runtime_overhead,
            StackCategory::SyncLock => self.sync_lock,
            StackCategory::LoadImbalance => self.load_imbalance,
            StackCategory::Sequential => self.sequential,
        }
    }

    pub fn share(&self, category: StackCategory) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.get(category) as f64 / self.total as f64
        }
    }
}

/// Speedup as a function of core count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupCurve {
    pub points: Vec<SpeedupPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedupPoint {
    pub cores: u32,
    pub makespan: u64,
    pub speedup: f64,
}

impl SpeedupCurve {
    /// Results must come in strictly increasing core order with non-zero
    /// makespans.
    pub fn from_results(results: &[ScheduleResult]) -> Result<SpeedupCurve, AnalysisError> {
        let mut points = Vec::with_capacity(results.len());
        let mut prev_cores = 0;
        for result in results {
            if result.cores <= prev_cores {
                return Err(AnalysisError::NonIncreasingCores {
                    cores: result.cores,
                });
            }
            prev_cores = result.cores;
            points.push(SpeedupPoint {
                cores: result.cores,
                makespan: result.makespan,
                speedup: speedup(result)?,
            });
        }
        Ok(SpeedupCurve { points })
    }
}

/// Signed mean percentage error and maximum absolute percentage error of
/// `estimates` against `references`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub mpe: f64,
    pub max_abs_pct: f64,
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("ZeroMakespan: speedup is undefined for a zero-length schedule")]
    ZeroMakespan,
    #[error("NonTiledResult: core {core} does not tile [0, makespan] at cycle {at}")]
    NonTiled { core: u32, at: u64 },
    #[error("LengthMismatch: {estimates} estimates vs {references} references")]
    LengthMismatch { estimates: usize, references: usize },
    #[error("ZeroReference: reference value at position {index} is zero")]
    ZeroReference { index: usize },
    #[error("EmptyResults: report needs at least one schedule result")]
    EmptyResults,
    #[error("UnsupportedFormat: {found:?} (expected text, structured, or csv)")]
    UnsupportedFormat { found: String },
    #[error("NonIncreasingCores: core counts must increase, got {cores}")]
    NonIncreasingCores { cores: u32 },
}

impl AnalysisError {
    pub fn code(&self) -> &'static str {
        match self {
            AnalysisError::ZeroMakespan => "ZeroMakespan",
            AnalysisError::NonTiled { .. } => "NonTiledResult",
            AnalysisError::LengthMismatch { .. } => "LengthMismatch",
            AnalysisError::ZeroReference { .. } => "ZeroReference",
            AnalysisError::EmptyResults => "EmptyResults",
            AnalysisError::UnsupportedFormat { .. } => "UnsupportedFormat",
            AnalysisError::NonIncreasingCores { .. } => "NonIncreasingCores",
        }
    }
}

fn check_tiled(result: &ScheduleResult) -> Result<(), AnalysisError> {
    for (core, core_events) in result.events.iter().enumerate() {
        let mut cursor = 0;
        for event in core_events {
            if event.start != cursor {
                return Err(AnalysisError::NonTiled {
                    core: core as u32,
                    at: cursor,
                });
            }
            cursor = event.end;
        }
        if cursor != result.makespan {
            return Err(AnalysisError::NonTiled {
                core: core as u32,
                at: cursor,
            });
        }
    }
    Ok(())
}

/// Aggregate a schedule into its cycle stack. Conservation is exact:
/// the five categories sum to `cores x makespan`.
pub fn cycle_stack(result: &ScheduleResult) -> Result<CycleStack, AnalysisError> {
    check_tiled(result)?;
    let totals = tag_totals(result);
    let t = |tag: SegmentTag| totals[&tag];
    Ok(CycleStack {
        cores: result.cores,
        total: u64::from(result.cores) * result.makespan,
        compute: t(SegmentTag::Compute),
        runtime_overhead: t(SegmentTag::OverheadFork)
            + t(SegmentTag::OverheadDispatch)
            + t(SegmentTag::OverheadJoin),
        sync_lock: t(SegmentTag::WaitLock),
        load_imbalance: t(SegmentTag::WaitBarrier),
        sequential: t(SegmentTag::IdleSequential),
    })
}

/// Sequential baseline divided by simulated makespan.
pub fn speedup(result: &ScheduleResult) -> Result<f64, AnalysisError> {
    if result.makespan == 0 {
        return Err(AnalysisError::ZeroMakespan);
    }
    Ok(result.seq_baseline as f64 / result.makespan as f64)
}

/// Per-point percentage errors `100 * (est - ref) / ref`, reduced to the
/// signed mean and the maximum absolute value.
pub fn error_metrics(estimates: &[f64], references: &[f64]) -> Result<ErrorMetrics, AnalysisError> {
    if estimates.len() != references.len() || estimates.is_empty() {
        return Err(AnalysisError::LengthMismatch {
            estimates: estimates.len(),
            references: references.len(),
        });
    }
    let mut sum = 0.0;
    let mut max_abs = 0.0f64;
    for (index, (est, reference)) in estimates.iter().zip(references).enumerate() {
        if *reference == 0.0 {
            return Err(AnalysisError::ZeroReference { index });
        }
        let err = 100.0 * (est - reference) / reference;
        sum += err;
        max_abs = max_abs.max(err.abs());
    }
    Ok(ErrorMetrics {
        mpe: sum / estimates.len() as f64,
        max_abs_pct: max_abs,
    })
}

/// Scaling verdict: the largest non-compute category at the highest simulated
/// core count, or compute-bound when nothing exceeds 1% of total cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ComputeBound,
    Bottleneck(StackCategory),
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::ComputeBound => f.write_str("none (compute-bound)"),
            Verdict::Bottleneck(category) => f.write_str(category.name()),
        }
    }
}

const VERDICT_FLOOR: f64 = 0.01;

fn verdict_of(stack: &CycleStack) -> Verdict {
    let candidates = [
        StackCategory::RuntimeOverhead,
        StackCategory::SyncLock,
        StackCategory::LoadImbalance,
        StackCategory::Sequential,
    ];
    // Ties resolve to the earlier category; order above is fixed.
    let mut best = candidates[0];
    for category in candidates {
        if stack.get(category) > stack.get(best) {
            best = category;
        }
    }
    if stack.share(best) < VERDICT_FLOOR {
        Verdict::ComputeBound
    } else {
        Verdict::Bottleneck(best)
    }
}

/// Everything the report formats render: one entry per simulated core count,
/// the per-directive coverage summary, diagnostics, and the verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub platform: String,
    pub seq_baseline: u64,
    pub entries: Vec<ReportEntry>,
    pub directives: Vec<DirectiveSummary>,
    pub diagnostics: Vec<String>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub cores: u32,
    pub makespan: u64,
    pub speedup: f64,
    pub stack: CycleStack,
}

/// How much of the sequential trace one directive covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectiveSummary {
    pub directive: String,
    pub matched_tasks: usize,
    pub trace_cycles: u64,
    pub pct_of_trace: f64,
}

impl Report {
    pub fn build(
        bound: &BoundProgram,
        platform: &str,
        results: &[ScheduleResult],
    ) -> Result<Report, AnalysisError> {
        if results.is_empty() {
            return Err(AnalysisError::EmptyResults);
        }
        let mut entries = Vec::with_capacity(results.len());
        for result in results {
            entries.push(ReportEntry {
                cores: result.cores,
                makespan: result.makespan,
                speedup: speedup(result)?,
                stack: cycle_stack(result)?,
            });
        }
        let max_entry = entries
            .iter()
            .max_by_key(|e| e.cores)
            .expect("results not empty");
        let verdict = verdict_of(&max_entry.stack);

        let seq_baseline = results[0].seq_baseline;
        let mut directives = Vec::with_capacity(bound.directives.len());
        for (didx, directive) in bound.directives.iter().enumerate() {
            let mut matched_tasks = 0;
            let mut trace_cycles = 0;
            for (&task_id, &bound_didx) in &bound.bindings {
                if bound_didx != didx {
                    continue;
                }
                matched_tasks += 1;
                if let Some(pos) = bound.index.position(task_id) {
                    trace_cycles += bound.trace.tasks[pos].duration();
                }
            }
            directives.push(DirectiveSummary {
                directive: directive.to_string(),
                matched_tasks,
                trace_cycles,
                pct_of_trace: if seq_baseline == 0 {
                    0.0
                } else {
                    100.0 * trace_cycles as f64 / seq_baseline as f64
                },
            });
        }

        let mut diagnostics: Vec<String> = Vec::new();
        for result in results {
            for diag in &result.diagnostics {
                if !diagnostics.contains(diag) {
                    diagnostics.push(diag.clone());
                }
            }
        }

        Ok(Report {
            platform: platform.to_string(),
            seq_baseline,
            entries,
            directives,
            diagnostics,
            verdict,
        })
    }
}

/// Output encodings of [`emit_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Structured,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "structured" => Ok(ReportFormat::Structured),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(AnalysisError::UnsupportedFormat {
                found: other.to_string(),
            }),
        }
    }
}

/// Render a report. `text` is the human table, `structured` a JSON document
/// that round-trips every [`Report`] field, `csv` one row per
/// (cores, category) with columns `cores,category,cycles,percent`.
pub fn emit_report(report: &Report, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Text => render_text(report).into_bytes(),
        ReportFormat::Structured => {
            let mut s =
                serde_json::to_string_pretty(report).expect("report serialization cannot fail");
            s.push('\n');
            s.into_bytes()
        }
        ReportFormat::Csv => render_csv(report).into_bytes(),
    }
}

fn render_csv(report: &Report) -> String {
    let mut out = String::from("cores,category,cycles,percent\n");
    for entry in &report.entries {
        for category in StackCategory::ALL {
            let cycles = entry.stack.get(category);
            let percent = 100.0 * entry.stack.share(category);
            out.push_str(&format!(
                "{},{},{},{:.4}\n",
                entry.cores,
                category.name(),
                cycles,
                percent
            ));
        }
    }
    out
}

fn render_text(report: &Report) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "parallelization report  (platform: {}, sequential baseline: {} cycles)\n\n",
        report.platform, report.seq_baseline
    ));
    out.push_str(
        "cores     makespan   speedup   compute%  runtime%     lock%  imbalance%   serial%\n",
    );
    for e in &report.entries {
        out.push_str(&format!(
            "{:>5} {:>12} {:>9.3} {:>9.1} {:>9.1} {:>9.1} {:>11.1} {:>9.1}\n",
            e.cores,
            e.makespan,
            e.speedup,
            100.0 * e.stack.share(StackCategory::Compute),
            100.0 * e.stack.share(StackCategory::RuntimeOverhead),
            100.0 * e.stack.share(StackCategory::SyncLock),
            100.0 * e.stack.share(StackCategory::LoadImbalance),
            100.0 * e.stack.share(StackCategory::Sequential),
        ));
    }
    out.push_str(&format!("\nbottleneck: {}\n", report.verdict));
    if !report.directives.is_empty() {
        out.push_str("\ndirectives:\n");
        for d in &report.directives {
            out.push_str(&format!(
                "  {}: {} task(s), {} cycles ({:.1}% of trace)\n",
                d.directive, d.matched_tasks, d.trace_cycles, d.pct_of_trace
            ));
        }
    }
    if !report.diagnostics.is_empty() {
        out.push_str("\ndiagnostics:\n");
        for diag in &report.diagnostics {
            out.push_str(&format!("  - {diag}\n"));
        }
    }
    out
}

/// Dump one schedule as CSV rows `core,tag,source,start,end`, core by core in
/// timeline order. Lossless: parsing the rows reconstructs the event lists.
pub fn emit_gantt(result: &ScheduleResult) -> Vec<u8> {
    let mut out = String::from("core,tag,source,start,end\n");
    for core_events in &result.events {
        for event in core_events {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                event.core, event.tag, event.source, event.start, event.end
            ));
        }
    }
    out.into_bytes()
}
