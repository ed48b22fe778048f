//! Platform characterization database.
//!
//! Holds measured (or synthesized) overheads of the parallel-runtime
//! constructs as a function of team size, plus latency/bandwidth parameters
//! for each memory-hierarchy level. The database is produced once per target
//! platform and reused across analyses.
//!
//! Overhead queries interpolate linearly between sampled thread counts and
//! clamp outside the sampled range; results are rounded to whole cycles so the
//! simulation clock stays integral. Memory-level parameters are carried and
//! reported but apply no timing penalty (contention modeling is out of scope).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Parallel-runtime constructs with characterized overheads. Closed set: a
/// database naming anything else is rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construct {
    ParallelFork,
    ParallelJoin,
    ForStaticInit,
    ForDynamicDispatch,
    Barrier,
    CriticalEnter,
    CriticalExit,
    SingleEnter,
}

impl Construct {
    pub const ALL: [Construct; 8] = [
        Construct::ParallelFork,
        Construct::ParallelJoin,
        Construct::ForStaticInit,
        Construct::ForDynamicDispatch,
        Construct::Barrier,
        Construct::CriticalEnter,
        Construct::CriticalExit,
        Construct::SingleEnter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Construct::ParallelFork => "parallel_fork",
            Construct::ParallelJoin => "parallel_join",
            Construct::ForStaticInit => "for_static_init",
            Construct::ForDynamicDispatch => "for_dynamic_dispatch",
            Construct::Barrier => "barrier",
            Construct::CriticalEnter => "critical_enter",
            Construct::CriticalExit => "critical_exit",
            Construct::SingleEnter => "single_enter",
        }
    }

    pub fn from_name(name: &str) -> Option<Construct> {
        Construct::ALL.iter().copied().find(|c| c.name() == name)
    }
}

impl fmt::Display for Construct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One measured overhead point: mean/std cycles at a given team size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverheadSample {
    pub threads: u32,
    pub mean: f64,
    pub std: f64,
}

/// Latency and bandwidth of one memory-hierarchy level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemoryLevel {
    pub name: String,
    /// Cycles per access.
    pub latency: f64,
    /// Bytes per cycle.
    pub bandwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationDB {
    pub platform: String,
    #[serde(default = "default_max_cores")]
    pub max_cores: u32,
    /// Samples per construct, sorted by strictly increasing thread count.
    /// A construct mapped to an empty list means "zero overhead everywhere";
    /// a construct missing from the map is a query error.
    pub constructs: BTreeMap<Construct, Vec<OverheadSample>>,
    #[serde(default)]
    pub memory_levels: Vec<MemoryLevel>,
}

fn default_max_cores() -> u32 {
    16
}

#[derive(Debug, Error)]
pub enum DbError {
    #[error("SyntaxError: {msg} (line {line}, column {column})")]
    Syntax {
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("UnknownConstruct: {name:?} is not a characterized construct")]
    UnknownConstruct { name: String },
    #[error(
        "UnsortedSamples: samples for {construct} are not sorted by strictly increasing threads"
    )]
    UnsortedSamples { construct: Construct },
    #[error("InvalidValue: {msg}")]
    InvalidValue { msg: String },
    #[error("ThreadsOutOfRange: {threads} not in [1, {max}]")]
    ThreadsOutOfRange { threads: u32, max: u32 },
    #[error("InvalidParams: {msg}")]
    InvalidParams { msg: String },
}

impl DbError {
    pub fn code(&self) -> &'static str {
        match self {
            DbError::Syntax { .. } => "SyntaxError",
            DbError::UnknownConstruct { .. } => "UnknownConstruct",
            DbError::UnsortedSamples { .. } => "UnsortedSamples",
            DbError::InvalidValue { .. } => "InvalidValue",
            DbError::ThreadsOutOfRange { .. } => "ThreadsOutOfRange",
            DbError::InvalidParams { .. } => "InvalidParams",
        }
    }
}

// File-level representation: construct names stay strings so an unknown name
// produces a proper UnknownConstruct error instead of a serde message.
#[derive(Deserialize)]
struct RawDb {
    platform: String,
    #[serde(default = "default_max_cores")]
    max_cores: u32,
    constructs: BTreeMap<String, Vec<OverheadSample>>,
    #[serde(default)]
    memory_levels: Vec<MemoryLevel>,
}

/// Parse and fully validate a characterization database file.
pub fn parse_db(input: &str) -> Result<CharacterizationDB, DbError> {
    let raw: RawDb = serde_json::from_str(input).map_err(|e| DbError::Syntax {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    let mut constructs = BTreeMap::new();
    for (name, samples) in raw.constructs {
        let construct = Construct::from_name(&name).ok_or(DbError::UnknownConstruct { name })?;
        constructs.insert(construct, samples);
    }
    let db = CharacterizationDB {
        platform: raw.platform,
        max_cores: raw.max_cores,
        constructs,
        memory_levels: raw.memory_levels,
    };
    db.check()?;
    Ok(db)
}

/// Serialize a database; `parse_db` of the output reproduces the value.
pub fn write_db(db: &CharacterizationDB) -> String {
    let mut s = serde_json::to_string_pretty(db).expect("db serialization cannot fail");
    s.push('\n');
    s
}

impl CharacterizationDB {
    fn check(&self) -> Result<(), DbError> {
        if self.max_cores == 0 {
            return Err(DbError::InvalidValue {
                msg: "max_cores must be >= 1".to_string(),
            });
        }
        for (&construct, samples) in &self.constructs {
            for pair in samples.windows(2) {
                if pair[1].threads <= pair[0].threads {
                    return Err(DbError::UnsortedSamples { construct });
                }
            }
            for s in samples {
                if s.threads == 0 {
                    return Err(DbError::InvalidValue {
                        msg: format!("{construct}: sample thread count must be >= 1"),
                    });
                }
                // negated form rejects NaN as well
                let non_negative = |v: f64| v.is_finite() && v >= 0.0;
                if !non_negative(s.mean) || !non_negative(s.std) {
                    return Err(DbError::InvalidValue {
                        msg: format!("{construct}: mean and std must be non-negative finite"),
                    });
                }
            }
        }
        for level in &self.memory_levels {
            if !(level.latency.is_finite() && level.latency >= 0.0) {
                return Err(DbError::InvalidValue {
                    msg: format!("memory level {:?}: latency must be >= 0", level.name),
                });
            }
            if !(level.bandwidth.is_finite() && level.bandwidth > 0.0) {
                return Err(DbError::InvalidValue {
                    msg: format!("memory level {:?}: bandwidth must be > 0", level.name),
                });
            }
        }
        Ok(())
    }

    /// Overhead of `construct` for a team of `threads`, in whole cycles.
    ///
    /// Exact sample hits return the stored mean; between samples the mean is
    /// interpolated linearly; outside the sampled range it clamps to the
    /// nearest endpoint. Rounds to the nearest cycle (half away from zero).
    pub fn overhead(&self, construct: Construct, threads: u32) -> Result<u64, DbError> {
        if threads == 0 || threads > self.max_cores {
            return Err(DbError::ThreadsOutOfRange {
                threads,
                max: self.max_cores,
            });
        }
        let samples = self
            .constructs
            .get(&construct)
            .ok_or_else(|| DbError::UnknownConstruct {
                name: construct.name().to_string(),
            })?;
        let mean = match samples.binary_search_by_key(&threads, |s| s.threads) {
            Ok(i) => samples[i].mean,
            Err(_) if samples.is_empty() => 0.0,
            Err(0) => samples[0].mean,
            Err(i) if i == samples.len() => samples[i - 1].mean,
            Err(i) => {
                let (lo, hi) = (&samples[i - 1], &samples[i]);
                let t = (threads - lo.threads) as f64 / (hi.threads - lo.threads) as f64;
                lo.mean + t * (hi.mean - lo.mean)
            }
        };
        Ok(mean.max(0.0).round() as u64)
    }
}

/// Parameters for [`synthesize_db`]: an affine overhead model
/// `mean(threads) = base + slope * threads` per construct, sampled on the
/// power-of-two ladder up to `max_cores`.
#[derive(Debug, Clone)]
pub struct SynthParams {
    pub platform: String,
    pub max_cores: u32,
    /// Coefficients applied to every construct without an override.
    pub base: f64,
    pub slope: f64,
    pub overrides: BTreeMap<Construct, (f64, f64)>,
    pub memory_levels: Vec<MemoryLevel>,
}

impl SynthParams {
    pub fn uniform(platform: &str, max_cores: u32, base: f64, slope: f64) -> Self {
        SynthParams {
            platform: platform.to_string(),
            max_cores,
            base,
            slope,
            overrides: BTreeMap::new(),
            memory_levels: default_memory_levels(),
        }
    }

    /// All-zero overheads: the ideal machine.
    pub fn zero(platform: &str, max_cores: u32) -> Self {
        Self::uniform(platform, max_cores, 0.0, 0.0)
    }
}

/// Default three-level hierarchy used by synthesized databases. Placeholder
/// figures in the embedded-SMP range; carried through reports unchanged.
pub fn default_memory_levels() -> Vec<MemoryLevel> {
    vec![
        MemoryLevel {
            name: "local".to_string(),
            latency: 2.0,
            bandwidth: 8.0,
        },
        MemoryLevel {
            name: "shared".to_string(),
            latency: 10.0,
            bandwidth: 4.0,
        },
        MemoryLevel {
            name: "external".to_string(),
            latency: 80.0,
            bandwidth: 1.0,
        },
    ]
}

/// Thread counts sampled by [`synthesize_db`]: 1, 2, 4, ... and `max_cores`
/// itself when it is not a power of two.
pub fn sample_ladder(max_cores: u32) -> Vec<u32> {
    let mut ladder = Vec::new();
    let mut t = 1;
    while t < max_cores {
        ladder.push(t);
        t *= 2;
    }
    ladder.push(max_cores);
    ladder
}

/// Build a database from the affine model, standing in for a microbenchmark
/// characterization run on real hardware.
pub fn synthesize_db(params: &SynthParams) -> Result<CharacterizationDB, DbError> {
    if params.max_cores == 0 {
        return Err(DbError::InvalidParams {
            msg: "max_cores must be >= 1".to_string(),
        });
    }
    let check_coeff = |what: &str, v: f64| -> Result<(), DbError> {
        if !(v.is_finite() && v >= 0.0) {
            return Err(DbError::InvalidParams {
                msg: format!("{what} must be non-negative finite, got {v}"),
            });
        }
        Ok(())
    };
    check_coeff("base", params.base)?;
    check_coeff("slope", params.slope)?;
    for (c, &(base, slope)) in &params.overrides {
        check_coeff(&format!("{c} base"), base)?;
        check_coeff(&format!("{c} slope"), slope)?;
    }

    let ladder = sample_ladder(params.max_cores);
    let mut constructs = BTreeMap::new();
    for construct in Construct::ALL {
        let (base, slope) = params
            .overrides
            .get(&construct)
            .copied()
            .unwrap_or((params.base, params.slope));
        let samples = ladder
            .iter()
            .map(|&threads| OverheadSample {
                threads,
                mean: base + slope * f64::from(threads),
                std: 0.0,
            })
            .collect();
        constructs.insert(construct, samples);
    }
    let db = CharacterizationDB {
        platform: params.platform.clone(),
        max_cores: params.max_cores,
        constructs,
        memory_levels: params.memory_levels.clone(),
    };
    db.check()?;
    Ok(db)
}
