//! Deterministic synthetic trace generation.
//!
//! Stands in for a real trace collector so end-to-end scenarios need no
//! hardware: a serial prologue followed by one loop whose per-iteration costs
//! come from a configurable model, plus a corner-detector-like workload whose
//! rows vary in cost with a pseudo-random "corner" count.
//!
//! All randomness is ChaCha8 (`rand_chacha`), keyed by the user seed with the
//! iteration number as the stream id, and reduced with plain integer
//! arithmetic. Traces are therefore bit-identical across runs, platforms, and
//! implementations that follow the same recipe.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::trace::{TaskKind, TaskRecord, TaskTrace, TRACE_CLOCK, TRACE_FORMAT_VERSION};

/// Per-iteration cost model for [`gen_loop_trace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostModel {
    /// Every iteration costs exactly `c` cycles.
    Uniform(u64),
    /// Iteration cost drawn uniformly from `[lo, hi]` (inclusive).
    Range(u64, u64),
}

/// An optional region of fixed cost embedded in every iteration, centered in
/// the iteration span; the natural target for a `critical` directive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalRegion {
    pub name: String,
    pub cycles: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkloadParams {
    pub seed: u64,
    pub serial_prologue: u64,
    pub n_iterations: u64,
    pub cost_model: CostModel,
    pub critical_region: Option<CriticalRegion>,
}

/// A generated trace plus the cycle totals the generator committed to,
/// kept separate from the trace file so tests can cross-check
/// [`total_cycles`](crate::trace::total_cycles) against an independent ledger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedTrace {
    pub trace: TaskTrace,
    /// Cycles of the serial prologue (root self time before the loop).
    pub prologue_cycles: u64,
    /// Declared total of all iteration costs; equals the loop task's span.
    pub loop_cycles: u64,
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("InvalidParams: {msg}")]
    InvalidParams { msg: String },
}

impl GenError {
    pub fn code(&self) -> &'static str {
        "InvalidParams"
    }
}

fn invalid(msg: impl Into<String>) -> GenError {
    GenError::InvalidParams { msg: msg.into() }
}

/// Uniform draw from `[0, bound)` by modulo reduction. The tiny modulo bias
/// is irrelevant for workload shaping and keeps the recipe portable.
fn draw(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    rng.next_u64() % bound
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn iteration_cost(model: CostModel, seed: u64, iteration: u64) -> u64 {
    match model {
        CostModel::Uniform(c) => c,
        CostModel::Range(lo, hi) => {
            let mut rng = stream_rng(seed, iteration);
            lo + draw(&mut rng, hi - lo + 1)
        }
    }
}

/// Root "main" with `serial_prologue` of self time, then loop "detect_rows"
/// with `n_iterations` children named "row"; each optionally wraps a
/// critical-region child centered in its span.
pub fn gen_loop_trace(params: &WorkloadParams) -> Result<GeneratedTrace, GenError> {
    if params.n_iterations == 0 {
        return Err(invalid("n_iterations must be >= 1"));
    }
    if let CostModel::Range(lo, hi) = params.cost_model {
        if lo > hi {
            return Err(invalid(format!("range lo {lo} exceeds hi {hi}")));
        }
    }
    if let Some(region) = &params.critical_region {
        let min_cost = match params.cost_model {
            CostModel::Uniform(c) => c,
            CostModel::Range(lo, _) => lo,
        };
        if region.cycles > min_cost {
            return Err(invalid(format!(
                "critical region of {} cycles cannot fit in iterations as small as {min_cost}",
                region.cycles
            )));
        }
    }

    let costs: Vec<u64> = (0..params.n_iterations)
        .map(|i| iteration_cost(params.cost_model, params.seed, i))
        .collect();
    let loop_cycles: u64 = costs.iter().sum();
    let trace = assemble(
        params.serial_prologue,
        &costs,
        params.critical_region.as_ref(),
    );
    Ok(GeneratedTrace {
        trace,
        prologue_cycles: params.serial_prologue,
        loop_cycles,
    })
}

/// Cost-model constants for [`gen_fast_like`], exposed so reports and tests
/// can restate the expected totals.
pub const FAST_BASE_PER_PIXEL: u64 = 4;
pub const FAST_EXTRA_PER_CORNER: u64 = 64;
pub const FAST_PROLOGUE_CYCLES: u64 = 1000;

/// Corner-detector-shaped workload: one loop over `height` image rows where
/// row cost is `width * FAST_BASE_PER_PIXEL` plus `FAST_EXTRA_PER_CORNER` per
/// pseudo-random corner. `density` is the per-pixel corner probability, so
/// higher densities mean more (and more uneven) row work.
pub fn gen_fast_like(
    height: u64,
    width: u64,
    density: f64,
    seed: u64,
) -> Result<GeneratedTrace, GenError> {
    if height == 0 || width == 0 {
        return Err(invalid("height and width must be >= 1"));
    }
    if !(0.0..=1.0).contains(&density) {
        return Err(invalid(format!("density {density} not in [0, 1]")));
    }
    // Fixed-point threshold so the corner test is an integer compare.
    let threshold = (density * 4_294_967_296.0).round() as u64;
    let costs: Vec<u64> = (0..height)
        .map(|row| {
            let mut rng = stream_rng(seed, row);
            let corners = (0..width)
                .filter(|_| u64::from(rng.next_u32()) < threshold)
                .count() as u64;
            width * FAST_BASE_PER_PIXEL + corners * FAST_EXTRA_PER_CORNER
        })
        .collect();
    let loop_cycles: u64 = costs.iter().sum();
    let trace = assemble(FAST_PROLOGUE_CYCLES, &costs, None);
    Ok(GeneratedTrace {
        trace,
        prologue_cycles: FAST_PROLOGUE_CYCLES,
        loop_cycles,
    })
}

fn assemble(prologue: u64, costs: &[u64], critical: Option<&CriticalRegion>) -> TaskTrace {
    let n = costs.len() as u64;
    let mut tasks = Vec::with_capacity(2 + costs.len() * (1 + critical.is_some() as usize));
    let total: u64 = costs.iter().sum();
    tasks.push(TaskRecord {
        id: 0,
        parent: None,
        name: "main".to_string(),
        kind: TaskKind::Function,
        start: 0,
        end: prologue + total,
        index: None,
        mem: None,
    });
    tasks.push(TaskRecord {
        id: 1,
        parent: Some(0),
        name: "detect_rows".to_string(),
        kind: TaskKind::Loop,
        start: prologue,
        end: prologue + total,
        index: None,
        mem: None,
    });
    let mut cursor = prologue;
    for (i, &cost) in costs.iter().enumerate() {
        let iteration_id = 2 + i as u64;
        tasks.push(TaskRecord {
            id: iteration_id,
            parent: Some(1),
            name: "row".to_string(),
            kind: TaskKind::Iteration,
            start: cursor,
            end: cursor + cost,
            index: Some(i as u64),
            mem: None,
        });
        if let Some(region) = critical {
            let lead_in = (cost - region.cycles) / 2;
            tasks.push(TaskRecord {
                // iterations take ids 2..2+n, regions n+2..2n+2
                id: iteration_id + n,
                parent: Some(iteration_id),
                name: region.name.clone(),
                kind: TaskKind::Region,
                start: cursor + lead_in,
                end: cursor + lead_in + region.cycles,
                index: None,
                mem: None,
            });
        }
        cursor += cost;
    }
    TaskTrace {
        version: TRACE_FORMAT_VERSION,
        clock: TRACE_CLOCK.to_string(),
        tasks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{total_cycles, validate_trace};

    #[test]
    fn uniform_costs() {
        let generated = gen_loop_trace(&WorkloadParams {
            seed: 1,
            serial_prologue: 0,
            n_iterations: 4,
            cost_model: CostModel::Uniform(10),
            critical_region: None,
        })
        .unwrap();
        assert_eq!(generated.loop_cycles, 40);
        assert_eq!(total_cycles(&generated.trace), 40);
        assert_eq!(generated.trace.tasks.len(), 6); // root + loop + 4 iterations
        assert_eq!(validate_trace(&generated.trace), vec![]);
    }

    #[test]
    fn range_model_is_deterministic() {
        let params = WorkloadParams {
            seed: 42,
            serial_prologue: 100,
            n_iterations: 100,
            cost_model: CostModel::Range(1, 5),
            critical_region: None,
        };
        let a = gen_loop_trace(&params).unwrap();
        let b = gen_loop_trace(&params).unwrap();
        assert_eq!(a, b);
        for task in &a.trace.tasks {
            if task.kind == TaskKind::Iteration {
                let d = task.duration();
                assert!((1..=5).contains(&d), "cost {d} outside range");
            }
        }
    }

    #[test]
    fn critical_region_embedded_per_iteration() {
        let generated = gen_loop_trace(&WorkloadParams {
            seed: 3,
            serial_prologue: 0,
            n_iterations: 4,
            cost_model: CostModel::Uniform(10),
            critical_region: Some(CriticalRegion {
                name: "append_kp".to_string(),
                cycles: 3,
            }),
        })
        .unwrap();
        assert_eq!(validate_trace(&generated.trace), vec![]);
        let regions: Vec<_> = generated
            .trace
            .tasks
            .iter()
            .filter(|t| t.name == "append_kp")
            .collect();
        assert_eq!(regions.len(), 4);
        for region in regions {
            assert_eq!(region.duration(), 3);
            assert_eq!(region.kind, TaskKind::Region);
        }
    }

    #[test]
    fn critical_region_must_fit() {
        let result = gen_loop_trace(&WorkloadParams {
            seed: 3,
            serial_prologue: 0,
            n_iterations: 2,
            cost_model: CostModel::Uniform(2),
            critical_region: Some(CriticalRegion {
                name: "big".to_string(),
                cycles: 3,
            }),
        });
        assert!(matches!(result, Err(GenError::InvalidParams { .. })));
    }

    #[test]
    fn fast_like_zero_density_is_balanced() {
        let generated = gen_fast_like(240, 320, 0.0, 1).unwrap();
        let durations: Vec<u64> = generated
            .trace
            .tasks
            .iter()
            .filter(|t| t.kind == TaskKind::Iteration)
            .map(|t| t.duration())
            .collect();
        assert_eq!(durations.len(), 240);
        assert!(durations.iter().all(|&d| d == 320 * FAST_BASE_PER_PIXEL));
    }

    #[test]
    fn fast_like_deterministic_and_uneven() {
        let a = gen_fast_like(240, 320, 0.1, 7).unwrap();
        let b = gen_fast_like(240, 320, 0.1, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trace.tasks.len(), 242);
        let durations: Vec<u64> = a
            .trace
            .tasks
            .iter()
            .filter(|t| t.kind == TaskKind::Iteration)
            .map(|t| t.duration())
            .collect();
        assert!(
            durations.iter().any(|&d| d != durations[0]),
            "rows should vary"
        );
    }

    #[test]
    fn fast_like_full_density_counts_every_pixel() {
        let generated = gen_fast_like(3, 10, 1.0, 9).unwrap();
        for task in &generated.trace.tasks {
            if task.kind == TaskKind::Iteration {
                assert_eq!(
                    task.duration(),
                    10 * FAST_BASE_PER_PIXEL + 10 * FAST_EXTRA_PER_CORNER
                );
            }
        }
    }

    #[test]
    fn declared_totals_match_trace() {
        let generated = gen_fast_like(240, 320, 0.1, 7).unwrap();
        assert_eq!(
            generated.loop_cycles,
            total_cycles(&generated.trace) - generated.prologue_cycles
        );
        assert_eq!(validate_trace(&generated.trace), vec![]);
    }

    #[test]
    fn density_out_of_range_rejected() {
        assert!(matches!(
            gen_fast_like(10, 10, 1.5, 0),
            Err(GenError::InvalidParams { .. })
        ));
    }
}
