//! Verification drivers: BMC with increasing bounds and k-induction.
//!
//! Both drivers keep one incremental solver per unrolling. The base
//! unrolling asks, for each `k`, whether the property fails exactly at frame
//! `k` with all earlier transitions constrained; over `k = 0..=K` this is
//! the same question as the disjunctive base formula at `K`. The step
//! unrolling accumulates property and constraint assertions frame by frame
//! and queries a violation at the newest frame under an assumption.

mod transform;

pub use transform::{transform_step_program, TransformError, KIND_COUNTER};

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::cnf::{lit_value, word_value, StepHavoc, Unroller, DEFAULT_VAR_BUDGET};
use crate::lang::interp::{InputMap, StateVector};
use crate::lang::{validate_shape, TypedProgram};
use crate::sat::{Budget, SatResult, Solver, SolverConfig, UnknownCause};
use crate::ts::TransitionSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProofMethod {
    KInduction,
    BmcExhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnknownReason {
    Timeout,
    OutOfMemory,
    MaxDepthReached,
    SolverUnknown,
    ShapeUnsupported,
    BoundedProof(u64),
}

impl std::fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UnknownReason::Timeout => f.write_str("timeout"),
            UnknownReason::OutOfMemory => f.write_str("out of memory"),
            UnknownReason::MaxDepthReached => f.write_str("max depth reached"),
            UnknownReason::SolverUnknown => f.write_str("solver unknown"),
            UnknownReason::ShapeUnsupported => f.write_str("shape unsupported"),
            UnknownReason::BoundedProof(d) => write!(f, "bounded proof {d}"),
        }
    }
}

/// A concrete path to a violation, with inputs keyed as the interpreter reads them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub init: InputMap,
    /// `steps[i]` feeds iteration `i + 1`.
    pub steps: Vec<InputMap>,
    /// Program cells of each visited state (frame 0 is the initial state).
    pub states: Vec<StateVector>,
    pub depth: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerdictResult {
    True { k: u64, method: ProofMethod },
    False(Box<Counterexample>),
    Unknown(UnknownReason),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub cpu_time_s: f64,
    pub mem_peak_mb: f64,
    pub solver_time_s: f64,
    pub reached_depth: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub result: VerdictResult,
    pub stats: RunStats,
}

impl Verdict {
    pub fn is_true(&self) -> bool {
        matches!(self.result, VerdictResult::True { .. })
    }
    pub fn is_false(&self) -> bool {
        matches!(self.result, VerdictResult::False(_))
    }
    pub fn counterexample(&self) -> Option<&Counterexample> {
        match &self.result {
            VerdictResult::False(c) => Some(c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Schedule {
    #[default]
    Lockstep,
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceBudget {
    pub cpu_seconds: f64,
    pub mem_mb: u64,
}

impl Default for ResourceBudget {
    fn default() -> Self {
        ResourceBudget {
            cpu_seconds: 7200.0,
            mem_mb: 18432,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub max_k: u64,
    pub budget: ResourceBudget,
    pub step_havoc: StepHavoc,
    pub schedule: Schedule,
    pub solver: SolverConfig,
    /// External stop request; checked between frames and inside the solver.
    pub cancel: Option<Arc<AtomicBool>>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            max_k: 1000,
            budget: ResourceBudget::default(),
            step_havoc: StepHavoc::FullState,
            schedule: Schedule::Lockstep,
            solver: SolverConfig::default(),
            cancel: None,
        }
    }
}

/// CPU time consumed by the calling thread.
pub fn thread_cpu_time() -> Duration {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // SAFETY: clock_gettime only writes into the provided timespec.
    unsafe {
        libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts);
    }
    Duration::new(ts.tv_sec as u64, ts.tv_nsec as u32)
}

/// Peak resident set size of this process in MiB.
pub fn peak_rss_mb() -> f64 {
    let mut ru: libc::rusage = unsafe { std::mem::zeroed() };
    // SAFETY: getrusage only writes into the provided struct.
    unsafe {
        libc::getrusage(libc::RUSAGE_SELF, &mut ru);
    }
    ru.ru_maxrss as f64 / 1024.0
}

/// Rough size of a solver holding the given clauses, in MiB.
fn estimated_mb(num_vars: u32, lits: usize, clauses: usize) -> f64 {
    (lits as f64 * 4.0 * 2.0 + clauses as f64 * 64.0 + num_vars as f64 * 96.0) / (1024.0 * 1024.0)
}

enum Step {
    Sat(Vec<bool>),
    Unsat,
    Stop(UnknownReason),
}

/// One incremental unrolling attached to a solver.
struct Track<'a> {
    u: Unroller<'a>,
    solver: Solver,
    lits: usize,
    clauses: usize,
    solver_time: Duration,
}

impl<'a> Track<'a> {
    fn new(u: Unroller<'a>, cfg: SolverConfig) -> Track<'a> {
        let mut t = Track {
            u,
            solver: Solver::new(0, cfg),
            lits: 0,
            clauses: 0,
            solver_time: Duration::ZERO,
        };
        t.sync();
        t
    }

    fn sync(&mut self) {
        let n = self.u.num_vars();
        self.solver.ensure_vars(n);
        for c in self.u.take_clauses() {
            self.lits += c.len();
            self.clauses += 1;
            self.solver.add_clause(c);
        }
    }

    fn check_resources(&self, cfg: &EngineConfig) -> Option<UnknownReason> {
        if self.u.check_budget(DEFAULT_VAR_BUDGET).is_err()
            || estimated_mb(self.u.num_vars(), self.lits, self.clauses) > cfg.budget.mem_mb as f64
        {
            return Some(UnknownReason::OutOfMemory);
        }
        None
    }

    fn solve(&mut self, assumptions: &[i32], budget: &Budget) -> Step {
        self.sync();
        let t = Instant::now();
        let r = self.solver.solve(assumptions, budget);
        self.solver_time += t.elapsed();
        match r {
            SatResult::Sat(m) => Step::Sat(m),
            SatResult::Unsat => Step::Unsat,
            SatResult::Unknown(UnknownCause::Timeout) => Step::Stop(UnknownReason::Timeout),
            SatResult::Unknown(UnknownCause::Cancelled) => Step::Stop(UnknownReason::Timeout),
            SatResult::Unknown(_) => Step::Stop(UnknownReason::SolverUnknown),
        }
    }
}

/// The base unrolling: asks for a violation exactly at frame `k`.
struct Base<'a> {
    t: Track<'a>,
    ts: &'a TransitionSystem,
}

impl<'a> Base<'a> {
    fn new(ts: &'a TransitionSystem, cfg: &EngineConfig) -> Base<'a> {
        let mut u = Unroller::from_init(ts);
        let ic = u.init_constraint.expect("init unrolling");
        u.assert(ic);
        Base {
            t: Track::new(u, cfg.solver),
            ts,
        }
    }

    fn check(&mut self, k: usize, cfg: &EngineConfig, budget: &Budget) -> Result<Option<Counterexample>, UnknownReason> {
        while self.t.u.depth() < k {
            let d = self.t.u.depth();
            if d > 0 {
                // Transitions before the queried frame must satisfy their constraints.
                let c = self.t.u.step_constraints[d - 1];
                self.t.u.assert(c);
            }
            self.t.u.extend();
            if let Some(r) = self.t.check_resources(cfg) {
                return Err(r);
            }
        }
        if k > 0 {
            let c = self.t.u.step_constraints[k - 1];
            self.t.u.assert(c);
        }
        let p = self.t.u.property(k);
        match self.t.solve(&[-p], budget) {
            Step::Sat(m) => Ok(Some(self.decode(&m, k))),
            Step::Unsat => Ok(None),
            Step::Stop(r) => Err(r),
        }
    }

    fn decode(&self, m: &[bool], k: usize) -> Counterexample {
        let fm = &self.t.u.frames;
        let ts = self.ts;
        let named = |vals: &[crate::cnf::Word], vars: &[crate::ts::InputVar]| -> InputMap {
            vars.iter()
                .zip(vals)
                .map(|(v, w)| (v.name.clone(), word_value(m, w)))
                .collect()
        };
        debug_assert!(!lit_value(m, fm.property[k]));
        Counterexample {
            init: named(&fm.init_inputs, &ts.init_inputs),
            steps: (0..k).map(|i| named(&fm.inputs[i], &ts.inputs)).collect(),
            states: (0..=k)
                .map(|i| {
                    fm.state[i][..ts.program_cells]
                        .iter()
                        .map(|w| word_value(m, w))
                        .collect()
                })
                .collect(),
            depth: k as u64,
        }
    }
}

/// The step unrolling: `k` property-satisfying frames, then a violation.
struct StepCase<'a> {
    t: Track<'a>,
}

impl<'a> StepCase<'a> {
    fn new(ts: &'a TransitionSystem, cfg: &EngineConfig) -> StepCase<'a> {
        StepCase {
            t: Track::new(Unroller::from_havoc(ts, cfg.step_havoc), cfg.solver),
        }
    }

    /// True when the step case at `k` is unsatisfiable.
    fn check(&mut self, k: usize, cfg: &EngineConfig, budget: &Budget) -> Result<bool, UnknownReason> {
        while self.t.u.depth() < k {
            let d = self.t.u.depth();
            let p = self.t.u.property(d);
            self.t.u.assert(p);
            self.t.u.extend();
            let c = self.t.u.step_constraints[d];
            self.t.u.assert(c);
            if let Some(r) = self.t.check_resources(cfg) {
                return Err(r);
            }
        }
        let p = self.t.u.property(k);
        match self.t.solve(&[-p], budget) {
            Step::Sat(_) => Ok(false),
            Step::Unsat => Ok(true),
            Step::Stop(r) => Err(r),
        }
    }
}

fn solver_budget(cfg: &EngineConfig, start: Instant, cancel: Option<Arc<AtomicBool>>) -> Budget {
    Budget {
        deadline: Some(start + Duration::from_secs_f64(cfg.budget.cpu_seconds)),
        max_conflicts: None,
        cancel,
    }
}

fn stopped(budget: &Budget) -> Option<UnknownReason> {
    if budget.cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed)) {
        return Some(UnknownReason::Timeout);
    }
    if budget.deadline.is_some_and(|d| Instant::now() >= d) {
        return Some(UnknownReason::Timeout);
    }
    None
}

fn finish(result: VerdictResult, cpu: Duration, solver: Duration, depth: u64) -> Verdict {
    Verdict {
        result,
        stats: RunStats {
            cpu_time_s: cpu.as_secs_f64(),
            mem_peak_mb: peak_rss_mb(),
            solver_time_s: solver.as_secs_f64(),
            reached_depth: depth,
        },
    }
}

/// Bounded model checking for `k = 0, 1, ..., max_k`.
pub fn run_bmc(ts: &TransitionSystem, cfg: &EngineConfig) -> Verdict {
    let start = Instant::now();
    let cpu0 = thread_cpu_time();
    let budget = solver_budget(cfg, start, cfg.cancel.clone());
    let mut base = Base::new(ts, cfg);
    let mut reached: Option<u64> = None;
    let result = 'outer: {
        for k in 0..=cfg.max_k {
            if let Some(r) = stopped(&budget) {
                break 'outer VerdictResult::Unknown(r);
            }
            match base.check(k as usize, cfg, &budget) {
                Ok(Some(cex)) => break 'outer VerdictResult::False(Box::new(cex)),
                Ok(None) => {
                    log::debug!("bmc: no violation at depth {k}");
                    reached = Some(k)
                }
                Err(r) => break 'outer VerdictResult::Unknown(r),
            }
        }
        VerdictResult::Unknown(UnknownReason::MaxDepthReached)
    };
    let depth = match &result {
        VerdictResult::False(c) => c.depth,
        _ => reached.unwrap_or(0),
    };
    finish(result, thread_cpu_time() - cpu0, base.t.solver_time, depth)
}

fn unknown_after_base(r: UnknownReason, base_done: Option<u64>) -> VerdictResult {
    match (r, base_done) {
        (UnknownReason::Timeout | UnknownReason::OutOfMemory, Some(d)) => {
            VerdictResult::Unknown(UnknownReason::BoundedProof(d))
        }
        _ => VerdictResult::Unknown(r),
    }
}

/// k-induction on a program whose shape admits it.
pub fn run_kinduction(tp: &TypedProgram, ts: &TransitionSystem, cfg: &EngineConfig) -> Verdict {
    if !validate_shape(tp).is_ready() {
        return finish(
            VerdictResult::Unknown(UnknownReason::ShapeUnsupported),
            Duration::ZERO,
            Duration::ZERO,
            0,
        );
    }
    run_kinduction_ts(ts, cfg)
}

/// k-induction directly on a transition system.
pub fn run_kinduction_ts(ts: &TransitionSystem, cfg: &EngineConfig) -> Verdict {
    match cfg.schedule {
        Schedule::Lockstep => lockstep(ts, cfg),
        Schedule::Parallel => parallel(ts, cfg),
    }
}

fn lockstep(ts: &TransitionSystem, cfg: &EngineConfig) -> Verdict {
    let start = Instant::now();
    let cpu0 = thread_cpu_time();
    let budget = solver_budget(cfg, start, cfg.cancel.clone());
    let mut base = Base::new(ts, cfg);
    let mut step = StepCase::new(ts, cfg);
    let mut base_done: Option<u64> = None;
    let result = 'outer: {
        for k in 0..=cfg.max_k {
            if let Some(r) = stopped(&budget) {
                break 'outer unknown_after_base(r, base_done);
            }
            match base.check(k as usize, cfg, &budget) {
                Ok(Some(cex)) => break 'outer VerdictResult::False(Box::new(cex)),
                Ok(None) => {
                    log::debug!("base case holds at depth {k}");
                    base_done = Some(k)
                }
                Err(r) => break 'outer unknown_after_base(r, base_done),
            }
            if k == 0 {
                continue;
            }
            match step.check(k as usize, cfg, &budget) {
                Ok(true) => {
                    break 'outer VerdictResult::True {
                        k,
                        method: ProofMethod::KInduction,
                    }
                }
                Ok(false) => log::debug!("step case fails at k={k}"),
                Err(r) => break 'outer unknown_after_base(r, base_done),
            }
        }
        VerdictResult::Unknown(UnknownReason::MaxDepthReached)
    };
    let depth = match &result {
        VerdictResult::False(c) => c.depth,
        _ => base_done.unwrap_or(0),
    };
    finish(
        result,
        thread_cpu_time() - cpu0,
        base.t.solver_time + step.t.solver_time,
        depth,
    )
}

const NONE: u64 = u64::MAX;

/// Base and step race on two threads. The step thread publishes the first
/// `k` it proves; the base thread stops once it has covered that `k`, or on
/// a counterexample, and then cancels the step thread.
fn parallel(ts: &TransitionSystem, cfg: &EngineConfig) -> Verdict {
    let start = Instant::now();
    let stop = Arc::new(AtomicBool::new(false));
    let proved = AtomicU64::new(NONE);
    let outer_cancel = cfg.cancel.clone();
    let watch_cancel = || {
        if outer_cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed)) {
            stop.store(true, Ordering::Relaxed);
        }
    };

    let (base_out, step_out) = std::thread::scope(|s| {
        let step_handle = s.spawn(|| {
            let cpu0 = thread_cpu_time();
            let budget = solver_budget(cfg, start, Some(stop.clone()));
            let mut step = StepCase::new(ts, cfg);
            for k in 1..=cfg.max_k {
                watch_cancel();
                if stopped(&budget).is_some() {
                    break;
                }
                match step.check(k as usize, cfg, &budget) {
                    Ok(true) => {
                        proved.store(k, Ordering::SeqCst);
                        break;
                    }
                    Ok(false) => {}
                    Err(_) => break,
                }
            }
            (thread_cpu_time() - cpu0, step.t.solver_time)
        });

        let cpu0 = thread_cpu_time();
        let budget = solver_budget(cfg, start, Some(stop.clone()));
        let mut base = Base::new(ts, cfg);
        let mut base_done: Option<u64> = None;
        let result = 'outer: {
            for k in 0..=cfg.max_k {
                watch_cancel();
                let p = proved.load(Ordering::SeqCst);
                if p != NONE && base_done.is_some_and(|d| d >= p) {
                    break 'outer VerdictResult::True {
                        k: p,
                        method: ProofMethod::KInduction,
                    };
                }
                if let Some(r) = stopped(&budget) {
                    break 'outer unknown_after_base(r, base_done);
                }
                match base.check(k as usize, cfg, &budget) {
                    Ok(Some(cex)) => break 'outer VerdictResult::False(Box::new(cex)),
                    Ok(None) => base_done = Some(k),
                    Err(r) => break 'outer unknown_after_base(r, base_done),
                }
            }
            // Base covered every depth; the step thread may still prove some k <= max_k.
            VerdictResult::Unknown(UnknownReason::MaxDepthReached)
        };
        let base_stats = (thread_cpu_time() - cpu0, base.t.solver_time, base_done);
        let mut result = result;
        if result == VerdictResult::Unknown(UnknownReason::MaxDepthReached) {
            let step_stats = step_handle.join().expect("step thread");
            let p = proved.load(Ordering::SeqCst);
            if p != NONE {
                result = VerdictResult::True {
                    k: p,
                    method: ProofMethod::KInduction,
                };
            }
            return ((result, base_stats), step_stats);
        }
        stop.store(true, Ordering::SeqCst);
        let step_stats = step_handle.join().expect("step thread");
        ((result, base_stats), step_stats)
    });
    let (result, (bcpu, bsolver, base_done)) = base_out;
    let (scpu, ssolver) = step_out;
    let depth = match &result {
        VerdictResult::False(c) => c.depth,
        _ => base_done.unwrap_or(0),
    };
    finish(result, bcpu + scpu, bsolver + ssolver, depth)
}
