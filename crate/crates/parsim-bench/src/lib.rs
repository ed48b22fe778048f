//! Shared fixtures for the criterion benches.

use parsim_core::chardb::{synthesize_db, CharacterizationDB, SynthParams};
use parsim_core::directives::{bind, parse_spec, BoundProgram};
use parsim_core::synthgen::{gen_loop_trace, CostModel, WorkloadParams};

/// Loop workload with mildly uneven iteration costs, bound to the given
/// schedule, e.g. `r#"{"kind": "dynamic", "chunk": 4}"#`.
pub fn bound_workload(iterations: u64, schedule: &str) -> BoundProgram {
    let generated = gen_loop_trace(&WorkloadParams {
        seed: 7,
        serial_prologue: 1000,
        n_iterations: iterations,
        cost_model: CostModel::Range(50, 150),
        critical_region: None,
    })
    .expect("valid workload");
    let spec = parse_spec(&format!(
        r#"{{"max_cores_requested": 16,
             "directives": [{{"type": "parallel_for", "target": "detect_rows",
                              "schedule": {schedule}}}]}}"#
    ))
    .expect("valid spec");
    bind(&spec, generated.trace).expect("binds")
}

pub fn overhead_db() -> CharacterizationDB {
    synthesize_db(&SynthParams::uniform("bench", 16, 50.0, 10.0)).expect("valid db")
}
