//! The unbounded sequential SAT attack.
//!
//! Two copies of the locked circuit share their inputs and carry separate
//! keys. Within a boundary `b`, BMC looks for an input sequence on which the
//! copies disagree (shortest first); each such sequence is replayed on the
//! oracle and the observed outputs become constraints on both keys. When no
//! sequence of length `<= b` remains, the UC, CE and UMC checks decide
//! whether the remaining keys are settled; otherwise `b` grows.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::cnf::{
    encode_frame, Budget, GateEncoder, IncrementalSolver, Lit, SatStatus, Signal, UnrollOptions,
    UnrolledModel,
};
use crate::equiv::{check_equivalence, check_keys_equivalent, EquivResult, KeySetResult};
use crate::explore::{Explorer, KeyMode};
use crate::netlist::{Driver, Netlist};
use crate::reach::EXPLICIT_LIMIT;
use crate::sim::{BlackBox, SimError, Simulator};
use crate::Bits;

pub const REPORT_SCHEMA: u32 = 1;

/// Up to this many key bits, consistent keys are found by replaying the
/// observations on every key instead of by SAT enumeration.
const SCAN_KEY_BITS: usize = 20;

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("oracle has {oracle} {what}, locked netlist has {netlist}")]
    Interface {
        what: &'static str,
        oracle: usize,
        netlist: usize,
    },
    #[error("initial boundary and boundary step must be at least 1")]
    Config,
    #[error("oracle query failed: {0}")]
    Oracle(#[from] SimError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum UmcMode {
    /// Explicit when the circuit is small enough, induction otherwise.
    Auto,
    Explicit,
    Induction,
    Off,
}

#[derive(Clone, Debug)]
pub struct AttackConfig {
    pub initial_boundary: usize,
    pub boundary_step: usize,
    pub time_budget: Option<Duration>,
    /// Per SAT call.
    pub conflict_budget: Option<u64>,
    pub umc_mode: UmcMode,
    /// Give up (Inconclusive) once the boundary passes this.
    pub max_boundary: usize,
    /// Explicit UMC enumerates at most this many consistent keys.
    pub umc_key_limit: usize,
    /// Keys listed in a key-class sample.
    pub sample_keys: usize,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            initial_boundary: 1,
            boundary_step: 8,
            time_budget: None,
            conflict_budget: None,
            umc_mode: UmcMode::Auto,
            max_boundary: 1024,
            umc_key_limit: 1 << 12,
            sample_keys: 16,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Termination {
    UC,
    CE,
    UMC,
    Timeout,
    Inconclusive,
}

fn secs<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

#[derive(Clone, Debug, Serialize)]
pub struct DisTrace {
    pub seq: Vec<Bits>,
    pub oracle_out: Vec<Bits>,
    pub found_at_boundary: usize,
    pub iteration: usize,
    #[serde(serialize_with = "secs")]
    pub elapsed: Duration,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KeyClass {
    /// Number of consistent keys (a lower bound when `complete` is false).
    pub count: u64,
    pub complete: bool,
    pub sample: Vec<Bits>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct PhaseTimes {
    #[serde(serialize_with = "secs")]
    pub bmc: Duration,
    #[serde(serialize_with = "secs")]
    pub oracle: Duration,
    #[serde(serialize_with = "secs")]
    pub uc: Duration,
    #[serde(serialize_with = "secs")]
    pub ce: Duration,
    #[serde(serialize_with = "secs")]
    pub umc: Duration,
    #[serde(serialize_with = "secs")]
    pub total: Duration,
}

#[derive(Clone, Debug, Serialize)]
pub struct AttackReport {
    pub schema: u32,
    pub termination: Termination,
    pub dis_log: Vec<DisTrace>,
    /// The key when UC terminates.
    pub key: Option<Bits>,
    /// Remaining consistent keys for CE/UMC terminations.
    pub key_class: Option<KeyClass>,
    pub timing: PhaseTimes,
    pub final_boundary: usize,
    pub sat_calls: u64,
    pub conflicts: u64,
}

impl AttackReport {
    pub fn iterations(&self) -> usize {
        self.dis_log.len()
    }

    pub fn last_dis_len(&self) -> usize {
        self.dis_log.last().map_or(0, |d| d.seq.len())
    }

    /// Whether `key` belongs to the reported outcome.
    pub fn accepts(&self, key: &Bits) -> bool {
        match (&self.key, &self.key_class) {
            (Some(k), _) => k == key,
            (None, Some(c)) if c.complete => c.sample.len() as u64 == c.count && c.sample.contains(key),
            _ => false,
        }
    }

    /// Per-DIS rows: `iteration,boundary,dis_len,time_s`.
    pub fn iteration_csv(&self) -> String {
        let mut s = String::from("iteration,boundary,dis_len,time_s\n");
        for d in &self.dis_log {
            let _ = writeln!(
                s,
                "{},{},{},{:.6}",
                d.iteration,
                d.found_at_boundary,
                d.seq.len(),
                d.elapsed.as_secs_f64()
            );
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UcOutcome {
    Unique(Bits),
    Multiple(Bits, Bits),
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckOutcome {
    Holds,
    Fails,
    Unknown,
}

enum Stop {
    Timeout,
    Inconclusive,
}

/// Solver state for one attack run.
pub struct AttackSession<'a> {
    locked: &'a Netlist,
    cfg: AttackConfig,
    model: UnrolledModel,
    solver: IncrementalSolver,
    act: Vec<Option<Lit>>,
    cursor: usize,
    boundary: usize,
    uc_act: Option<Option<Lit>>,
    ce_diff: Option<Signal>,
    deadline: Option<Instant>,
    observations: Vec<(Vec<Bits>, Vec<Bits>)>,
    candidates: Option<Vec<u64>>,
    scanned: usize,
    pub sat_calls: u64,
    pub conflicts: u64,
}

impl<'a> AttackSession<'a> {
    pub fn new(locked: &'a Netlist, cfg: AttackConfig) -> Result<Self, AttackError> {
        if cfg.initial_boundary == 0 || cfg.boundary_step == 0 {
            return Err(AttackError::Config);
        }
        let mut model = UnrolledModel::new(locked, 2, UnrollOptions { fold: true });
        model.extend(cfg.initial_boundary);
        Ok(AttackSession {
            locked,
            boundary: cfg.initial_boundary,
            deadline: cfg.time_budget.map(|d| Instant::now() + d),
            cfg,
            model,
            solver: IncrementalSolver::new(),
            act: Vec::new(),
            cursor: 0,
            uc_act: None,
            ce_diff: None,
            observations: Vec::new(),
            candidates: None,
            scanned: 0,
            sat_calls: 0,
            conflicts: 0,
        })
    }

    pub fn boundary(&self) -> usize {
        self.boundary
    }

    pub fn model(&self) -> &UnrolledModel {
        &self.model
    }

    fn budget(&self) -> Budget {
        Budget {
            conflicts: self.cfg.conflict_budget,
            deadline: self.deadline,
        }
    }

    fn timed_out(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn solve(&mut self, assumptions: &[Lit]) -> (SatStatus, Option<Vec<bool>>) {
        let budget = self.budget();
        let out = self.solver.solve(self.model.formula(), assumptions, &budget);
        self.sat_calls += 1;
        self.conflicts += out.stats.conflicts;
        (out.status, out.assignment)
    }

    /// Literal forcing the copies to differ at frame `t`; `None` when they
    /// cannot differ there.
    fn frame_act(&mut self, t: usize) -> Option<Option<Lit>> {
        if self.act.len() <= t {
            self.act.resize(t + 1, None);
        }
        if let Some(a) = self.act[t] {
            return Some(Some(a));
        }
        match self.model.frame_diff(t).expect("two instances") {
            Signal::Const(false) => None,
            Signal::Const(true) => Some(None),
            Signal::Lit(d) => {
                let a = self.guard(d);
                self.act[t] = Some(a);
                Some(Some(a))
            }
        }
    }

    /// Next DIS of length at most the boundary, shortest first.
    fn next_dis(&mut self) -> Result<Option<Vec<Bits>>, Stop> {
        while self.cursor < self.boundary {
            let t = self.cursor;
            let Some(act) = self.frame_act(t) else {
                self.cursor += 1;
                continue;
            };
            let assumptions: Vec<Lit> = act.into_iter().collect();
            match self.solve(&assumptions) {
                (SatStatus::Sat, Some(a)) => return Ok(Some(self.model.decode_inputs(&a, t + 1))),
                (SatStatus::Unsat, _) => self.cursor += 1,
                _ => return Err(self.stop()),
            }
        }
        Ok(None)
    }

    fn stop(&self) -> Stop {
        if self.timed_out() {
            Stop::Timeout
        } else {
            Stop::Inconclusive
        }
    }

    pub fn add_observation(&mut self, seq: &[Bits], out: &[Bits]) {
        self.model.add_io_constraint(seq, out).expect("widths checked by the caller");
        self.observations.push((seq.to_vec(), out.to_vec()));
    }

    fn grow(&mut self) {
        self.boundary += self.cfg.boundary_step;
        self.model.extend(self.boundary);
    }

    /// Is the key consistent with the observations unique?
    pub fn check_uc(&mut self) -> UcOutcome {
        let act = match self.uc_act {
            Some(a) => a,
            None => {
                let (k1, k2) = (self.model.key_lits(0).to_vec(), self.model.key_lits(1).to_vec());
                let mut enc = GateEncoder {
                    formula: self.model.formula_mut(),
                    fold: true,
                };
                let xs: Vec<Signal> = k1
                    .iter()
                    .zip(&k2)
                    .map(|(&a, &b)| enc.xor2(Signal::Lit(a), Signal::Lit(b)))
                    .collect();
                let a = match enc.or(&xs) {
                    Signal::Lit(d) => Some(self.guard(d)),
                    _ => None,
                };
                self.uc_act = Some(a);
                a
            }
        };
        if let Some(a) = act {
            match self.solve(&[a]) {
                (SatStatus::Sat, Some(m)) => {
                    return UcOutcome::Multiple(self.model.decode_key(&m, 0), self.model.decode_key(&m, 1))
                }
                (SatStatus::Unsat, _) => {}
                _ => return UcOutcome::Unknown,
            }
        }
        match self.solve(&[]) {
            (SatStatus::Sat, Some(m)) => UcOutcome::Unique(self.model.decode_key(&m, 0)),
            _ => UcOutcome::Unknown,
        }
    }

    /// Combinational miter over outputs and next state with the two keys.
    pub fn check_ce(&mut self) -> CheckOutcome {
        let diff = match self.ce_diff {
            Some(d) => d,
            None => {
                let d = self.build_ce_miter();
                self.ce_diff = Some(d);
                d
            }
        };
        match diff {
            Signal::Const(false) => CheckOutcome::Holds,
            Signal::Const(true) => CheckOutcome::Fails,
            Signal::Lit(a) => match self.solve(&[a]) {
                (SatStatus::Sat, _) => CheckOutcome::Fails,
                (SatStatus::Unsat, _) => CheckOutcome::Holds,
                _ => CheckOutcome::Unknown,
            },
        }
    }

    fn build_ce_miter(&mut self) -> Signal {
        let n = self.locked;
        let f = self.model.formula_mut();
        let ins: Vec<Lit> = (0..n.num_inputs()).map(|_| f.new_var().pos()).collect();
        let st: Vec<Lit> = (0..n.num_ffs()).map(|_| f.new_var().pos()).collect();
        let mut sides = Vec::new();
        for inst in 0..2 {
            let keys = self.model.key_lits(inst).to_vec();
            let src = |net| match n.driver(net) {
                Driver::Input(i) => Signal::Lit(ins[i]),
                Driver::Key(i) => Signal::Lit(keys[i]),
                Driver::FlipFlop(i) => Signal::Lit(st[i]),
                Driver::Gate(_) => unreachable!(),
            };
            let sig = encode_frame(self.model.formula_mut(), n, true, u32::MAX - 1, inst as u32, &src);
            let mut v: Vec<Signal> = n.outputs().iter().map(|o| sig[o.index()]).collect();
            v.extend(n.flipflops().iter().map(|ff| sig[ff.d.index()]));
            sides.push(v);
        }
        let mut enc = GateEncoder {
            formula: self.model.formula_mut(),
            fold: true,
        };
        let xs: Vec<Signal> = sides[0].iter().zip(&sides[1]).map(|(&a, &b)| enc.xor2(a, b)).collect();
        match enc.or(&xs) {
            Signal::Lit(d) => Signal::Lit(self.guard(d)),
            c => c,
        }
    }

    /// Fresh literal `a` with `a -> d`.
    fn guard(&mut self, d: Lit) -> Lit {
        let f = self.model.formula_mut();
        let a = f.new_var().pos();
        f.add_clause(&[!a, d]);
        a
    }

    /// Consistent keys, up to `limit` (complete flag false when cut off).
    pub fn enumerate_keys(&mut self, limit: usize) -> Option<(Vec<Bits>, bool)> {
        let kw = self.locked.num_keys();
        if kw <= SCAN_KEY_BITS {
            return Some(self.scan_keys(limit));
        }
        let act = self.model.formula_mut().new_var().pos();
        let lits = self.model.key_lits(0).to_vec();
        let mut keys = Vec::new();
        let mut complete = true;
        loop {
            if keys.len() >= limit {
                complete = false;
                break;
            }
            match self.solve(&[act]) {
                (SatStatus::Sat, Some(m)) => {
                    let k = self.model.decode_key(&m, 0);
                    let mut block: Vec<Lit> = vec![!act];
                    block.extend(lits.iter().zip(k.iter()).map(|(&l, v)| if v { !l } else { l }));
                    keys.push(k);
                    if lits.is_empty() {
                        break;
                    }
                    self.model.formula_mut().add_clause(&block);
                }
                (SatStatus::Unsat, _) => break,
                _ => {
                    self.model.formula_mut().add_clause(&[!act]);
                    return None;
                }
            }
        }
        self.model.formula_mut().add_clause(&[!act]);
        keys.sort_by_key(|k| k.to_string());
        Some((keys, complete))
    }

    /// Same set as the SAT enumeration: the I/O constraints are exact, so a
    /// key is consistent iff it replays every observation. Candidates only
    /// shrink, so each observation is replayed once, 64 keys per word.
    fn scan_keys(&mut self, limit: usize) -> (Vec<Bits>, bool) {
        let n = self.locked;
        let kw = n.num_keys();
        let mut cand = self.candidates.take().unwrap_or_else(|| (0..1u64 << kw).collect());
        let mut sim = Simulator::new(n);
        let new_obs = &self.observations[self.scanned..];
        let mut kept = Vec::with_capacity(cand.len());
        for chunk in cand.chunks(64) {
            let lanes = if chunk.len() == 64 { !0u64 } else { (1u64 << chunk.len()) - 1 };
            let key_words: Vec<u64> = (0..kw)
                .map(|b| chunk.iter().enumerate().fold(0u64, |w, (l, &k)| w | (((k >> b) & 1) << l)))
                .collect();
            let mut alive = lanes;
            for (seq, out) in new_obs {
                let mut state: Vec<u64> = n.flipflops().iter().map(|f| if f.init { !0 } else { 0 }).collect();
                for (x, y) in seq.iter().zip(out) {
                    let ins: Vec<u64> = x.iter().map(|b| if b { !0 } else { 0 }).collect();
                    let o = sim.step_words(&ins, &key_words, &mut state);
                    for (w, v) in o.iter().zip(y.iter()) {
                        alive &= if v { *w } else { !*w };
                    }
                    if alive == 0 {
                        break;
                    }
                }
                if alive == 0 {
                    break;
                }
            }
            kept.extend(chunk.iter().enumerate().filter(|(l, _)| (alive >> l) & 1 == 1).map(|(_, &k)| k));
        }
        cand = kept;
        self.scanned = self.observations.len();
        let complete = cand.len() <= limit;
        let mut keys: Vec<Bits> = cand.iter().take(limit).map(|&v| Bits::from_u64(v, kw)).collect();
        keys.sort_by_key(|k| k.to_string());
        self.candidates = Some(cand);
        (keys, complete)
    }

    /// Are all consistent keys sequentially equivalent?
    pub fn check_umc(&mut self, mode: UmcMode) -> CheckOutcome {
        let n = self.locked;
        let explicit_ok =
            n.num_ffs() <= EXPLICIT_LIMIT && Explorer::new(n, KeyMode::Fixed(Bits::zeros(n.num_keys()))).is_ok();
        let mode = match mode {
            UmcMode::Auto if explicit_ok => UmcMode::Explicit,
            UmcMode::Auto => UmcMode::Induction,
            m => m,
        };
        match mode {
            UmcMode::Off => CheckOutcome::Unknown,
            UmcMode::Explicit => self.umc_explicit(),
            UmcMode::Induction => self.umc_induction(),
            UmcMode::Auto => unreachable!(),
        }
    }

    fn umc_explicit(&mut self) -> CheckOutcome {
        let Some((keys, complete)) = self.enumerate_keys(self.cfg.umc_key_limit) else {
            return CheckOutcome::Unknown;
        };
        if !complete {
            return CheckOutcome::Unknown;
        }
        let Some(first) = keys.first() else {
            return CheckOutcome::Unknown;
        };
        let limit = crate::equiv::DEFAULT_PRODUCT_LIMIT / keys.len().max(1);
        match check_keys_equivalent(self.locked, &keys, limit) {
            Ok(KeySetResult::Equivalent { .. }) => return CheckOutcome::Holds,
            Ok(KeySetResult::Different { .. }) => return CheckOutcome::Fails,
            _ => {}
        }
        // Too many joint states: fall back to pairs.
        for k in &keys[1..] {
            if self.timed_out() {
                return CheckOutcome::Unknown;
            }
            match check_equivalence(self.locked, first, self.locked, k, crate::equiv::DEFAULT_PRODUCT_LIMIT) {
                Ok(EquivResult::Equivalent { .. }) => {}
                Ok(EquivResult::Different { .. }) => return CheckOutcome::Fails,
                _ => return CheckOutcome::Unknown,
            }
        }
        CheckOutcome::Holds
    }

    /// `b`-induction on "outputs agree": from any pair of states, `b` agreeing
    /// frames force agreement in the next. The base case is the drained BMC.
    fn umc_induction(&mut self) -> CheckOutcome {
        let n = self.locked;
        let k = self.boundary;
        let f = self.model.formula_mut();
        let act = f.new_var().pos();
        let mut states: Vec<Vec<Signal>> = (0..2)
            .map(|_| (0..n.num_ffs()).map(|_| Signal::Lit(f.new_var().pos())).collect())
            .collect();
        let mut last_diff = Signal::Const(false);
        for t in 0..=k {
            let ins: Vec<Lit> = (0..n.num_inputs())
                .map(|_| self.model.formula_mut().new_var().pos())
                .collect();
            let mut outs = Vec::new();
            for inst in 0..2 {
                let keys = self.model.key_lits(inst).to_vec();
                let st = states[inst].clone();
                let src = |net| match n.driver(net) {
                    Driver::Input(i) => Signal::Lit(ins[i]),
                    Driver::Key(i) => Signal::Lit(keys[i]),
                    Driver::FlipFlop(i) => st[i],
                    Driver::Gate(_) => unreachable!(),
                };
                let sig = encode_frame(self.model.formula_mut(), n, true, u32::MAX - 2, inst as u32, &src);
                outs.push(n.outputs().iter().map(|o| sig[o.index()]).collect::<Vec<_>>());
                states[inst] = n.flipflops().iter().map(|ff| sig[ff.d.index()]).collect();
            }
            let mut enc = GateEncoder {
                formula: self.model.formula_mut(),
                fold: true,
            };
            let xs: Vec<Signal> = outs[0].iter().zip(&outs[1]).map(|(&a, &b)| enc.xor2(a, b)).collect();
            let d = enc.or(&xs);
            if t < k {
                match d {
                    Signal::Lit(l) => self.model.formula_mut().add_clause(&[!act, !l]),
                    Signal::Const(true) => self.model.formula_mut().add_clause(&[!act]),
                    Signal::Const(false) => {}
                }
            } else {
                last_diff = d;
            }
        }
        let result = match last_diff {
            Signal::Const(false) => CheckOutcome::Holds,
            Signal::Const(true) => CheckOutcome::Fails,
            Signal::Lit(l) => {
                self.model.formula_mut().add_clause(&[!act, l]);
                match self.solve(&[act]) {
                    (SatStatus::Unsat, _) => CheckOutcome::Holds,
                    (SatStatus::Sat, _) => CheckOutcome::Unknown,
                    _ => CheckOutcome::Unknown,
                }
            }
        };
        self.model.formula_mut().add_clause(&[!act]);
        result
    }

    fn key_class(&mut self) -> Option<KeyClass> {
        let (keys, complete) = self.enumerate_keys(self.cfg.umc_key_limit.max(self.cfg.sample_keys))?;
        let count = keys.len() as u64;
        let sample = if complete {
            keys
        } else {
            keys.into_iter().take(self.cfg.sample_keys).collect()
        };
        Some(KeyClass {
            count,
            complete,
            sample,
        })
    }
}

/// Run the attack against a black-box oracle.
pub fn run_attack(locked: &Netlist, oracle: &mut dyn BlackBox, cfg: &AttackConfig) -> Result<AttackReport, AttackError> {
    if oracle.input_width() != locked.num_inputs() {
        return Err(AttackError::Interface {
            what: "inputs",
            oracle: oracle.input_width(),
            netlist: locked.num_inputs(),
        });
    }
    if oracle.output_width() != locked.num_outputs() {
        return Err(AttackError::Interface {
            what: "outputs",
            oracle: oracle.output_width(),
            netlist: locked.num_outputs(),
        });
    }
    let start = Instant::now();
    let mut s = AttackSession::new(locked, cfg.clone())?;
    let mut times = PhaseTimes::default();
    let mut dis_log: Vec<DisTrace> = Vec::new();
    let finish = |s: &AttackSession,
                  termination,
                  key,
                  key_class,
                  dis_log: Vec<DisTrace>,
                  mut times: PhaseTimes| {
        times.total = start.elapsed();
        AttackReport {
            schema: REPORT_SCHEMA,
            termination,
            dis_log,
            key,
            key_class,
            timing: times,
            final_boundary: s.boundary(),
            sat_calls: s.sat_calls,
            conflicts: s.conflicts,
        }
    };
    let stop_term = |st: Stop| match st {
        Stop::Timeout => Termination::Timeout,
        Stop::Inconclusive => Termination::Inconclusive,
    };
    loop {
        // Drain the boundary.
        loop {
            let t0 = Instant::now();
            let dis = s.next_dis();
            times.bmc += t0.elapsed();
            match dis {
                Ok(Some(seq)) => {
                    let t1 = Instant::now();
                    let out = oracle.query(&seq)?;
                    times.oracle += t1.elapsed();
                    s.add_observation(&seq, &out);
                    dis_log.push(DisTrace {
                        seq,
                        oracle_out: out,
                        found_at_boundary: s.boundary(),
                        iteration: dis_log.len() + 1,
                        elapsed: start.elapsed(),
                    });
                }
                Ok(None) => break,
                Err(st) => return Ok(finish(&s, stop_term(st), None, None, dis_log, times)),
            }
        }
        let t0 = Instant::now();
        let uc = s.check_uc();
        times.uc += t0.elapsed();
        match uc {
            UcOutcome::Unique(k) => return Ok(finish(&s, Termination::UC, Some(k), None, dis_log, times)),
            UcOutcome::Multiple(..) => {}
            UcOutcome::Unknown if s.timed_out() => {
                return Ok(finish(&s, Termination::Timeout, None, None, dis_log, times))
            }
            UcOutcome::Unknown => {}
        }
        let t0 = Instant::now();
        let ce = s.check_ce();
        times.ce += t0.elapsed();
        if ce == CheckOutcome::Holds {
            let class = s.key_class();
            return Ok(finish(&s, Termination::CE, None, class, dis_log, times));
        }
        let t0 = Instant::now();
        let umc = s.check_umc(cfg.umc_mode);
        times.umc += t0.elapsed();
        if umc == CheckOutcome::Holds {
            let class = s.key_class();
            return Ok(finish(&s, Termination::UMC, None, class, dis_log, times));
        }
        if s.timed_out() {
            return Ok(finish(&s, Termination::Timeout, None, None, dis_log, times));
        }
        if s.boundary() + cfg.boundary_step > cfg.max_boundary {
            return Ok(finish(&s, Termination::Inconclusive, None, None, dis_log, times));
        }
        s.grow();
    }
}

/// Unlocked reference for tests: is `key` consistent with every DIS?
pub fn consistent_with_log(locked: &Netlist, key: &Bits, log: &[DisTrace]) -> bool {
    log.iter().all(|d| crate::sim::simulate(locked, key, &d.seq).ok().as_deref() == Some(&d.oracle_out[..]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_bench;
    use crate::sim::Oracle;

    #[test]
    fn no_keys_is_immediate_uc() {
        let n = parse_bench("INPUT(x)\nOUTPUT(q)\nq = DFF(x)\n").unwrap();
        let mut o = Oracle::new(n.clone(), Bits::zeros(0)).unwrap();
        let r = run_attack(&n, &mut o, &AttackConfig::default()).unwrap();
        assert_eq!(r.termination, Termination::UC);
        assert_eq!(r.key, Some(Bits::zeros(0)));
        assert!(r.dis_log.is_empty());
    }

    #[test]
    fn xor_lock_recovered() {
        let src = "INPUT(a)\nINPUT(keyinput0)\nINPUT(keyinput1)\nOUTPUT(y)\nq = DFF(t)\nt = XOR(a, keyinput0)\ny = XOR(q, keyinput1)\n";
        let n = parse_bench(src).unwrap();
        for key in ["00", "01", "10", "11"] {
            let k: Bits = key.parse().unwrap();
            let mut o = Oracle::new(n.clone(), k.clone()).unwrap();
            let r = run_attack(&n, &mut o, &AttackConfig::default()).unwrap();
            assert_eq!(r.termination, Termination::UC, "{key}");
            assert_eq!(r.key, Some(k.clone()));
            assert!(consistent_with_log(&n, &k, &r.dis_log));
        }
    }

    #[test]
    fn equivalent_keys_end_in_ce() {
        // y = a XOR k0 XOR k1: keys 00/11 and 01/10 are two classes.
        let src = "INPUT(a)\nINPUT(keyinput0)\nINPUT(keyinput1)\nOUTPUT(y)\nt = XOR(a, keyinput0)\ny = XOR(t, keyinput1)\n";
        let n = parse_bench(src).unwrap();
        let mut o = Oracle::new(n.clone(), "01".parse().unwrap()).unwrap();
        let r = run_attack(&n, &mut o, &AttackConfig::default()).unwrap();
        assert_eq!(r.termination, Termination::CE);
        let c = r.key_class.unwrap();
        assert_eq!(c.count, 2);
        assert!(c.sample.contains(&"01".parse().unwrap()));
        assert!(c.sample.contains(&"10".parse().unwrap()));
    }
}
