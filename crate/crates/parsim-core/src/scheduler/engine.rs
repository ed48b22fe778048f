//! The deterministic event engine behind [`simulate`](super::simulate).
//!
//! Serial spans advance a single core-0 clock. Each bound loop runs a small
//! conservative discrete-event loop: cores are advanced in global time order
//! (lowest core index on ties), and any action touching shared state — a
//! dynamic chunk pull, a lock request, a single-token request — happens only
//! while the core sits exactly at its scheduled wake-up time. That makes
//! "earliest requester" grant order fall out of the priority queue directly.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use crate::chardb::{CharacterizationDB, Construct};
use crate::directives::{BoundProgram, DirectiveKind, SchedulePolicy};
use crate::trace::TaskKind;

use super::plan::{plan_chunks, Chunk, ChunkPlan};
use super::{
    EventSource, RegionOverheads, ScheduleEvent, ScheduleResult, SegmentTag, SimConfig, SimError,
};

/// One schedulable unit inside a worksharing chunk.
#[derive(Debug, Clone)]
enum Atom {
    Compute { task: u64, len: u64 },
    Critical { task: u64, lock: usize, len: u64 },
    Single { task: u64, len: u64 },
}

struct WalkFrame {
    pos: usize,
    cursor: u64,
    child_i: usize,
}

pub(super) struct Engine<'a> {
    bound: &'a BoundProgram,
    db: &'a CharacterizationDB,
    cores: u32,
    config: &'a SimConfig,
    events: Vec<Vec<ScheduleEvent>>,
    /// Serial frontier: core 0's clock between regions.
    clock: u64,
    diagnostics: Vec<String>,
    lock_names: Vec<String>,
    lock_index: HashMap<String, usize>,
    has_critical: bool,
    has_single: bool,
    in_region: bool,
}

impl<'a> Engine<'a> {
    pub(super) fn new(
        bound: &'a BoundProgram,
        db: &'a CharacterizationDB,
        cores: u32,
        config: &'a SimConfig,
    ) -> Self {
        let mut lock_names = Vec::new();
        let mut lock_index = HashMap::new();
        let mut has_critical = false;
        let mut has_single = false;
        for directive in &bound.directives {
            match &directive.kind {
                DirectiveKind::Critical { lock } => {
                    has_critical = true;
                    if !lock_index.contains_key(lock) {
                        lock_index.insert(lock.clone(), lock_names.len());
                        lock_names.push(lock.clone());
                    }
                }
                DirectiveKind::Single => has_single = true,
                DirectiveKind::ParallelFor { .. } => {}
            }
        }
        Engine {
            bound,
            db,
            cores,
            config,
            events: vec![Vec::new(); cores as usize],
            clock: 0,
            diagnostics: bound.diagnostics.clone(),
            lock_names,
            lock_index,
            has_critical,
            has_single,
            in_region: false,
        }
    }

    pub(super) fn run(mut self) -> Result<ScheduleResult, SimError> {
        let root = self.bound.index.root();
        self.serial_exec(root)?;
        let makespan = self.clock;
        for core in 0..self.cores as usize {
            fill_idle_gaps(&mut self.events[core], core as u32, makespan);
        }
        let result = ScheduleResult {
            cores: self.cores,
            makespan,
            seq_baseline: self.bound.trace.tasks[root].duration(),
            events: self.events,
            diagnostics: self.diagnostics,
        };
        debug_assert!(
            tiling_holds(&result),
            "core timelines must tile the makespan"
        );
        Ok(result)
    }

    fn emit_serial(&mut self, tag: SegmentTag, len: u64, source: EventSource) {
        if len > 0 {
            self.events[0].push(ScheduleEvent {
                core: 0,
                tag,
                start: self.clock,
                end: self.clock + len,
                source,
            });
            self.clock += len;
        }
    }

    /// Run one subtree on core 0, expanding bound loops into parallel regions.
    fn serial_exec(&mut self, root_pos: usize) -> Result<(), SimError> {
        let mut stack: Vec<WalkFrame> = Vec::new();
        self.enter_serial(root_pos, &mut stack)?;
        while let Some(top) = stack.last() {
            let pos = top.pos;
            let child_i = top.child_i;
            match self.bound.index.children(pos).get(child_i).copied() {
                Some(child_pos) => {
                    let top = stack.last_mut().unwrap();
                    top.child_i += 1;
                    let child = &self.bound.trace.tasks[child_pos];
                    let (child_start, child_end) = (child.start, child.end);
                    if child_start > top.cursor {
                        let len = child_start - top.cursor;
                        top.cursor = child_start;
                        let owner = self.bound.trace.tasks[pos].id;
                        self.emit_serial(SegmentTag::Compute, len, EventSource::Task(owner));
                    }
                    let top = stack.last_mut().unwrap();
                    top.cursor = top.cursor.max(child_end);
                    self.enter_serial(child_pos, &mut stack)?;
                }
                None => {
                    let task = &self.bound.trace.tasks[pos];
                    let (task_id, task_end, cursor) = (task.id, task.end, top.cursor);
                    if task_end > cursor {
                        self.emit_serial(
                            SegmentTag::Compute,
                            task_end - cursor,
                            EventSource::Task(task_id),
                        );
                    }
                    stack.pop();
                }
            }
        }
        Ok(())
    }

    fn enter_serial(&mut self, pos: usize, stack: &mut Vec<WalkFrame>) -> Result<(), SimError> {
        let task = &self.bound.trace.tasks[pos];
        let (task_id, task_start, duration) = (task.id, task.start, task.duration());
        if let Some(directive) = self.bound.binding_for(task_id) {
            match &directive.kind {
                DirectiveKind::ParallelFor { schedule } => {
                    let schedule = *schedule;
                    let num_threads = directive.num_threads;
                    return self.region(pos, schedule, num_threads);
                }
                DirectiveKind::Critical { .. } => {
                    // Serial execution still pays lock costs (uncontended);
                    // the body is the atomic block the lock would protect.
                    let enter = self.db.overhead(Construct::CriticalEnter, 1)?;
                    let exit = self.db.overhead(Construct::CriticalExit, 1)?;
                    self.emit_serial(
                        SegmentTag::OverheadDispatch,
                        enter,
                        EventSource::Construct(Construct::CriticalEnter),
                    );
                    self.emit_serial(SegmentTag::Compute, duration, EventSource::Task(task_id));
                    self.emit_serial(
                        SegmentTag::OverheadDispatch,
                        exit,
                        EventSource::Construct(Construct::CriticalExit),
                    );
                    return Ok(());
                }
                // A single outside any parallel region is a no-op.
                DirectiveKind::Single => {}
            }
        }
        if let Some(penalty) = self.config.mem_penalty {
            let extra = penalty(&self.bound.trace.tasks[pos]);
            self.emit_serial(SegmentTag::Compute, extra, EventSource::Task(task_id));
        }
        stack.push(WalkFrame {
            pos,
            cursor: task_start,
            child_i: 0,
        });
        Ok(())
    }

    /// Expand a bound loop into fork / worksharing / barrier / join.
    fn region(
        &mut self,
        loop_pos: usize,
        schedule: SchedulePolicy,
        num_threads: u32,
    ) -> Result<(), SimError> {
        debug_assert!(!self.in_region, "bind() must reject nested parallel_for");
        let loop_task = &self.bound.trace.tasks[loop_pos];
        let (loop_id, loop_start, loop_end) = (loop_task.id, loop_task.start, loop_task.end);
        let team = if num_threads == 0 {
            self.cores
        } else if num_threads > self.cores {
            self.diagnostics.push(format!(
                "num_threads {num_threads} on loop {loop_id} capped at {} simulated cores",
                self.cores
            ));
            self.cores
        } else {
            num_threads
        };

        // The loop's own bookkeeping time and any non-iteration children are
        // serial work; run them before forking.
        let mut iterations: Vec<usize> = Vec::new();
        let mut cursor = loop_start;
        self.in_region = true;
        for i in 0.. {
            let Some(child_pos) = self.bound.index.children(loop_pos).get(i).copied() else {
                break;
            };
            let child = &self.bound.trace.tasks[child_pos];
            let (child_start, child_end, child_kind) = (child.start, child.end, child.kind);
            if child_start > cursor {
                self.emit_serial(
                    SegmentTag::Compute,
                    child_start - cursor,
                    EventSource::Task(loop_id),
                );
            }
            cursor = cursor.max(child_end);
            if child_kind == TaskKind::Iteration {
                iterations.push(child_pos);
            } else {
                self.serial_exec(child_pos)?;
            }
        }
        self.in_region = false;
        if loop_end > cursor {
            self.emit_serial(
                SegmentTag::Compute,
                loop_end - cursor,
                EventSource::Task(loop_id),
            );
        }

        let durations: Vec<u64> = iterations
            .iter()
            .map(|&pos| self.bound.trace.tasks[pos].duration())
            .collect();
        let plan = plan_chunks(&durations, loop_id, &schedule, team)?;
        let is_static = !matches!(schedule, SchedulePolicy::Dynamic { .. });
        let oh = RegionOverheads {
            fork: self.db.overhead(Construct::ParallelFork, team)?,
            static_init: if is_static {
                self.db.overhead(Construct::ForStaticInit, team)?
            } else {
                0
            },
            dispatch: if is_static {
                0
            } else {
                self.db.overhead(Construct::ForDynamicDispatch, team)?
            },
            barrier: self.db.overhead(Construct::Barrier, team)?,
            join: self.db.overhead(Construct::ParallelJoin, team)?,
            critical_enter: if self.has_critical {
                self.db.overhead(Construct::CriticalEnter, team)?
            } else {
                0
            },
            critical_exit: if self.has_critical {
                self.db.overhead(Construct::CriticalExit, team)?
            } else {
                0
            },
            single_enter: if self.has_single {
                self.db.overhead(Construct::SingleEnter, team)?
            } else {
                0
            },
        };

        let fork_start = self.clock;
        for core in 0..team {
            push_event(
                &mut self.events,
                core,
                SegmentTag::OverheadFork,
                fork_start,
                oh.fork,
                EventSource::Construct(Construct::ParallelFork),
            );
        }
        let mut start = fork_start + oh.fork;
        if is_static {
            for core in 0..team {
                push_event(
                    &mut self.events,
                    core,
                    SegmentTag::OverheadDispatch,
                    start,
                    oh.static_init,
                    EventSource::Construct(Construct::ForStaticInit),
                );
            }
            start += oh.static_init;
        }

        let ctx = FlattenCtx {
            bound: self.bound,
            config: self.config,
            lock_index: &self.lock_index,
        };
        let barrier_at = run_worksharing(
            &ctx,
            &mut self.events,
            &self.lock_names,
            &iterations,
            plan,
            &oh,
            team,
            start,
        );

        for core in 0..team {
            push_event(
                &mut self.events,
                core,
                SegmentTag::OverheadJoin,
                barrier_at,
                oh.barrier,
                EventSource::Construct(Construct::Barrier),
            );
            push_event(
                &mut self.events,
                core,
                SegmentTag::OverheadJoin,
                barrier_at + oh.barrier,
                oh.join,
                EventSource::Construct(Construct::ParallelJoin),
            );
        }
        self.clock = barrier_at + oh.barrier + oh.join;
        Ok(())
    }
}

struct FlattenCtx<'a> {
    bound: &'a BoundProgram,
    config: &'a SimConfig,
    lock_index: &'a HashMap<String, usize>,
}

/// Turn one iteration subtree into the atom sequence its core will execute.
/// Bound critical/single descendants become atomic blocking atoms; everything
/// else flattens to plain compute in trace order.
fn flatten_task(ctx: &FlattenCtx<'_>, root_pos: usize, out: &mut Vec<Atom>) {
    let mut stack: Vec<WalkFrame> = Vec::new();
    flatten_enter(ctx, root_pos, out, &mut stack);
    while let Some(top) = stack.last() {
        let pos = top.pos;
        let child_i = top.child_i;
        match ctx.bound.index.children(pos).get(child_i).copied() {
            Some(child_pos) => {
                let top = stack.last_mut().unwrap();
                top.child_i += 1;
                let child = &ctx.bound.trace.tasks[child_pos];
                if child.start > top.cursor {
                    let len = child.start - top.cursor;
                    push_compute(out, ctx.bound.trace.tasks[pos].id, len);
                    top.cursor = child.start;
                }
                top.cursor = top.cursor.max(child.end);
                flatten_enter(ctx, child_pos, out, &mut stack);
            }
            None => {
                let task = &ctx.bound.trace.tasks[pos];
                if task.end > top.cursor {
                    push_compute(out, task.id, task.end - top.cursor);
                }
                stack.pop();
            }
        }
    }
}

fn flatten_enter(
    ctx: &FlattenCtx<'_>,
    pos: usize,
    out: &mut Vec<Atom>,
    stack: &mut Vec<WalkFrame>,
) {
    let task = &ctx.bound.trace.tasks[pos];
    if let Some(directive) = ctx.bound.binding_for(task.id) {
        match &directive.kind {
            DirectiveKind::Critical { lock } => {
                out.push(Atom::Critical {
                    task: task.id,
                    lock: ctx.lock_index[lock],
                    len: task.duration(),
                });
                return;
            }
            DirectiveKind::Single => {
                out.push(Atom::Single {
                    task: task.id,
                    len: task.duration(),
                });
                return;
            }
            DirectiveKind::ParallelFor { .. } => {
                unreachable!("bind() rejects parallel_for nested in a bound loop")
            }
        }
    }
    if let Some(penalty) = ctx.config.mem_penalty {
        push_compute(out, task.id, penalty(task));
    }
    // Leaves dominate real traces; skip the frame machinery for them.
    if ctx.bound.index.children(pos).is_empty() {
        push_compute(out, task.id, task.duration());
        return;
    }
    stack.push(WalkFrame {
        pos,
        cursor: task.start,
        child_i: 0,
    });
}

fn push_compute(out: &mut Vec<Atom>, task: u64, len: u64) {
    if len > 0 {
        out.push(Atom::Compute { task, len });
    }
}

struct CoreRun {
    clock: u64,
    atoms: Vec<Atom>,
    atom_pos: usize,
    own_chunks: VecDeque<Chunk>,
    arrived: bool,
}

/// Execute the worksharing phase of one region; returns the barrier time
/// (when the slowest core finished its share).
#[allow(clippy::too_many_arguments)]
fn run_worksharing(
    ctx: &FlattenCtx<'_>,
    events: &mut [Vec<ScheduleEvent>],
    lock_names: &[String],
    iterations: &[usize],
    plan: ChunkPlan,
    oh: &RegionOverheads,
    team: u32,
    start: u64,
) -> u64 {
    let (mut queue, per_core, dynamic) = match plan {
        ChunkPlan::Queue(q) => (q, Vec::new(), true),
        ChunkPlan::PerCore(v) => (VecDeque::new(), v, false),
    };
    let mut cores: Vec<CoreRun> = (0..team as usize)
        .map(|c| CoreRun {
            clock: start,
            atoms: Vec::new(),
            atom_pos: 0,
            own_chunks: if dynamic {
                VecDeque::new()
            } else {
                per_core[c].iter().cloned().collect()
            },
            arrived: false,
        })
        .collect();
    let mut locks: Vec<u64> = vec![0; lock_names.len()];
    let mut single_free_at: u64 = 0;
    let mut heap: BinaryHeap<Reverse<(u64, u32)>> =
        (0..team).map(|c| Reverse((start, c))).collect();
    let mut arrivals: Vec<u64> = vec![start; team as usize];

    while let Some(Reverse((wake, core_idx))) = heap.pop() {
        let c = core_idx as usize;
        debug_assert_eq!(cores[c].clock, wake);
        loop {
            if cores[c].atom_pos < cores[c].atoms.len() {
                let atom = cores[c].atoms[cores[c].atom_pos].clone();
                match atom {
                    Atom::Compute { task, len } => {
                        push_event(
                            events,
                            core_idx,
                            SegmentTag::Compute,
                            cores[c].clock,
                            len,
                            EventSource::Task(task),
                        );
                        cores[c].clock += len;
                        cores[c].atom_pos += 1;
                    }
                    Atom::Critical { task, lock, len } => {
                        if cores[c].clock > wake {
                            // Shared-state actions happen only at wake-up time
                            // so requests are globally ordered.
                            heap.push(Reverse((cores[c].clock, core_idx)));
                            break;
                        }
                        let t = cores[c].clock;
                        let grant = locks[lock].max(t);
                        if grant > t {
                            push_event(
                                events,
                                core_idx,
                                SegmentTag::WaitLock,
                                t,
                                grant - t,
                                EventSource::Lock(lock_names[lock].clone()),
                            );
                        }
                        push_event(
                            events,
                            core_idx,
                            SegmentTag::OverheadDispatch,
                            grant,
                            oh.critical_enter,
                            EventSource::Construct(Construct::CriticalEnter),
                        );
                        let body_start = grant + oh.critical_enter;
                        push_event(
                            events,
                            core_idx,
                            SegmentTag::Compute,
                            body_start,
                            len,
                            EventSource::Task(task),
                        );
                        push_event(
                            events,
                            core_idx,
                            SegmentTag::OverheadDispatch,
                            body_start + len,
                            oh.critical_exit,
                            EventSource::Construct(Construct::CriticalExit),
                        );
                        let released = body_start + len + oh.critical_exit;
                        locks[lock] = released;
                        cores[c].clock = released;
                        cores[c].atom_pos += 1;
                    }
                    Atom::Single { task, len } => {
                        if cores[c].clock > wake {
                            heap.push(Reverse((cores[c].clock, core_idx)));
                            break;
                        }
                        let t = cores[c].clock;
                        let token = single_free_at.max(t);
                        if token > t {
                            push_event(
                                events,
                                core_idx,
                                SegmentTag::WaitBarrier,
                                t,
                                token - t,
                                EventSource::Task(task),
                            );
                        }
                        push_event(
                            events,
                            core_idx,
                            SegmentTag::OverheadDispatch,
                            token,
                            oh.single_enter,
                            EventSource::Construct(Construct::SingleEnter),
                        );
                        let body_start = token + oh.single_enter;
                        push_event(
                            events,
                            core_idx,
                            SegmentTag::Compute,
                            body_start,
                            len,
                            EventSource::Task(task),
                        );
                        single_free_at = body_start + len;
                        cores[c].clock = body_start + len;
                        cores[c].atom_pos += 1;
                    }
                }
            } else {
                cores[c].atoms.clear();
                cores[c].atom_pos = 0;
                if let Some(chunk) = cores[c].own_chunks.pop_front() {
                    // Pre-assigned chunks touch no shared state; load inline.
                    load_chunk(ctx, iterations, &chunk, &mut cores[c].atoms);
                    continue;
                }
                if dynamic && !queue.is_empty() {
                    if cores[c].clock > wake {
                        heap.push(Reverse((cores[c].clock, core_idx)));
                        break;
                    }
                    let chunk = queue.pop_front().unwrap();
                    push_event(
                        events,
                        core_idx,
                        SegmentTag::OverheadDispatch,
                        cores[c].clock,
                        oh.dispatch,
                        EventSource::Construct(Construct::ForDynamicDispatch),
                    );
                    cores[c].clock += oh.dispatch;
                    load_chunk(ctx, iterations, &chunk, &mut cores[c].atoms);
                    continue;
                }
                arrivals[c] = cores[c].clock;
                cores[c].arrived = true;
                break;
            }
        }
    }

    debug_assert!(cores.iter().all(|c| c.arrived));
    let barrier_at = arrivals.iter().copied().max().unwrap_or(start);
    for (c, &arrived_at) in arrivals.iter().enumerate() {
        push_event(
            events,
            c as u32,
            SegmentTag::WaitBarrier,
            arrived_at,
            barrier_at - arrived_at,
            EventSource::Construct(Construct::Barrier),
        );
    }
    barrier_at
}

fn load_chunk(ctx: &FlattenCtx<'_>, iterations: &[usize], chunk: &Chunk, out: &mut Vec<Atom>) {
    for &pos in &iterations[chunk.lo as usize..chunk.hi as usize] {
        flatten_task(ctx, pos, out);
    }
}

fn push_event(
    events: &mut [Vec<ScheduleEvent>],
    core: u32,
    tag: SegmentTag,
    start: u64,
    len: u64,
    source: EventSource,
) {
    if len > 0 {
        events[core as usize].push(ScheduleEvent {
            core,
            tag,
            start,
            end: start + len,
            source,
        });
    }
}

/// Materialize idle gaps so each core's events exactly tile `[0, makespan]`.
fn fill_idle_gaps(events: &mut Vec<ScheduleEvent>, core: u32, makespan: u64) {
    let mut filled = Vec::with_capacity(events.len() + 2);
    let mut cursor = 0;
    for event in events.drain(..) {
        if event.start > cursor {
            filled.push(ScheduleEvent {
                core,
                tag: SegmentTag::IdleSequential,
                start: cursor,
                end: event.start,
                source: EventSource::Idle,
            });
        }
        cursor = event.end;
        filled.push(event);
    }
    if makespan > cursor {
        filled.push(ScheduleEvent {
            core,
            tag: SegmentTag::IdleSequential,
            start: cursor,
            end: makespan,
            source: EventSource::Idle,
        });
    }
    *events = filled;
}

fn tiling_holds(result: &ScheduleResult) -> bool {
    result.events.iter().all(|core_events| {
        let mut cursor = 0;
        for event in core_events {
            if event.start != cursor || event.end < event.start {
                return false;
            }
            cursor = event.end;
        }
        cursor == result.makespan
    })
}
