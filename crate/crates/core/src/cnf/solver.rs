//! CDCL SAT solver: two watched literals with blockers, VSIDS, first-UIP
//! learning with recursive minimization, Luby restarts, phase saving and
//! LBD-guided learnt clause deletion. Incremental in the MiniSat sense:
//! clauses may be added between calls and each call takes assumptions.

use std::time::Instant;

use super::formula::{SatStats, SatStatus};
use super::lit::{Lit, Var};

const TRUE: u8 = 1;
const FALSE: u8 = 0;
const UNDEF: u8 = 2;
const NO_REASON: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, Default)]
pub struct Budget {
    pub conflicts: Option<u64>,
    pub deadline: Option<Instant>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget::default()
    }

    pub fn exhausted(&self, conflicts: u64) -> bool {
        self.conflicts.is_some_and(|c| conflicts >= c)
            || self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    deleted: bool,
    lbd: u32,
    activity: f32,
}

#[derive(Clone, Copy)]
struct Watcher {
    cref: u32,
    blocker: Lit,
}

#[derive(Default)]
struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<u32>,
}

const NOT_IN_HEAP: u32 = u32::MAX;

impl VarHeap {
    fn grow(&mut self, n: usize) {
        self.pos.resize(n, NOT_IN_HEAP);
    }

    fn contains(&self, v: u32) -> bool {
        self.pos[v as usize] != NOT_IN_HEAP
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            if act[self.heap[parent] as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = self.heap[parent];
            self.pos[self.heap[i] as usize] = i as u32;
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as u32;
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let c = if r < n && act[self.heap[r] as usize] > act[self.heap[l] as usize] {
                r
            } else {
                l
            };
            if act[self.heap[c] as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = self.heap[c];
            self.pos[self.heap[i] as usize] = i as u32;
            i = c;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as u32;
    }

    fn insert(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.heap.push(v);
        let i = self.heap.len() - 1;
        self.pos[v as usize] = i as u32;
        self.up(i, act);
    }

    fn bumped(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            let i = self.pos[v as usize] as usize;
            self.up(i, act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<u32> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().unwrap();
        self.pos[top as usize] = NOT_IN_HEAP;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.down(0, act);
        }
        Some(top)
    }
}

enum SearchResult {
    Sat,
    Unsat,
    Restart,
    Budget,
}

pub struct Solver {
    clauses: Vec<Clause>,
    learnts: Vec<u32>,
    num_deleted: usize,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<u8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    heap: VarHeap,
    polarity: Vec<bool>,
    seen: Vec<bool>,
    cla_inc: f32,
    max_learnts: f64,
    ok: bool,
    model: Vec<bool>,
    conflict: Vec<Lit>,
    stats: SatStats,
    analyze_stack: Vec<Lit>,
    analyze_toclear: Vec<Lit>,
}

impl Default for Solver {
    fn default() -> Self {
        Self::new()
    }
}

fn luby(y: f64, mut x: u64) -> f64 {
    let mut size = 1u64;
    let mut seq = 0i32;
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    y.powi(seq)
}

impl Solver {
    pub fn new() -> Self {
        Solver {
            clauses: Vec::new(),
            learnts: Vec::new(),
            num_deleted: 0,
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: Vec::new(),
            var_inc: 1.0,
            heap: VarHeap::default(),
            polarity: Vec::new(),
            seen: Vec::new(),
            cla_inc: 1.0,
            max_learnts: 0.0,
            ok: true,
            model: Vec::new(),
            conflict: Vec::new(),
            stats: SatStats::default(),
            analyze_stack: Vec::new(),
            analyze_toclear: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    pub fn new_var(&mut self) -> Var {
        let v = self.assigns.len() as u32;
        self.assigns.push(UNDEF);
        self.level.push(0);
        self.reason.push(NO_REASON);
        self.activity.push(0.0);
        self.polarity.push(false);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.heap.grow(self.assigns.len());
        self.heap.insert(v, &self.activity);
        Var(v)
    }

    pub fn ensure_vars(&mut self, n: usize) {
        while self.assigns.len() < n {
            self.new_var();
        }
    }

    pub fn stats(&self) -> &SatStats {
        &self.stats
    }

    /// False once the clause set is known to be UNSAT without assumptions.
    pub fn is_ok(&self) -> bool {
        self.ok
    }

    #[inline]
    fn value(&self, l: Lit) -> u8 {
        let a = self.assigns[l.var().index()];
        if a == UNDEF {
            UNDEF
        } else {
            a ^ l.is_neg() as u8
        }
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    fn enqueue(&mut self, l: Lit, reason: u32) {
        let v = l.var().index();
        debug_assert_eq!(self.assigns[v], UNDEF);
        self.assigns[v] = (!l.is_neg()) as u8;
        self.level[v] = self.decision_level() as u32;
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Add a clause at decision level 0. Returns false if the solver became
    /// inconsistent.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        debug_assert_eq!(self.decision_level(), 0);
        if !self.ok {
            return false;
        }
        if let Some(max) = lits.iter().map(|l| l.var().index()).max() {
            self.ensure_vars(max + 1);
        }
        let mut c: Vec<Lit> = lits.to_vec();
        c.sort();
        c.dedup();
        let mut out = Vec::with_capacity(c.len());
        for (i, &l) in c.iter().enumerate() {
            if i + 1 < c.len() && c[i + 1] == !l {
                return true;
            }
            match self.value(l) {
                TRUE => return true,
                FALSE => {}
                _ => out.push(l),
            }
        }
        match out.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(out[0], NO_REASON);
                if self.propagate().is_some() {
                    self.ok = false;
                }
                self.ok
            }
            _ => {
                let cref = self.alloc(out, false, 0);
                self.attach(cref);
                true
            }
        }
    }

    fn alloc(&mut self, lits: Vec<Lit>, learnt: bool, lbd: u32) -> u32 {
        let cref = self.clauses.len() as u32;
        self.clauses.push(Clause {
            lits,
            learnt,
            deleted: false,
            lbd,
            activity: 0.0,
        });
        cref
    }

    fn attach(&mut self, cref: u32) {
        let c = &self.clauses[cref as usize];
        let (a, b) = (c.lits[0], c.lits[1]);
        self.watches[(!a).index()].push(Watcher { cref, blocker: b });
        self.watches[(!b).index()].push(Watcher { cref, blocker: a });
    }

    fn propagate(&mut self) -> Option<u32> {
        let mut confl = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[p.index()]);
            let (mut i, mut j) = (0, 0);
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == TRUE {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref as usize;
                if self.clauses[cref].deleted {
                    continue;
                }
                {
                    let lits = &mut self.clauses[cref].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                }
                let first = self.clauses[cref].lits[0];
                let nw = Watcher {
                    cref: w.cref,
                    blocker: first,
                };
                if first != w.blocker && self.value(first) == TRUE {
                    ws[j] = nw;
                    j += 1;
                    continue;
                }
                let len = self.clauses[cref].lits.len();
                let mut moved = false;
                for k in 2..len {
                    let l = self.clauses[cref].lits[k];
                    if self.value(l) != FALSE {
                        self.clauses[cref].lits.swap(1, k);
                        self.watches[(!l).index()].push(nw);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = nw;
                j += 1;
                if self.value(first) == FALSE {
                    confl = Some(w.cref);
                    self.qhead = self.trail.len();
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, w.cref);
                }
            }
            ws.truncate(j);
            self.watches[p.index()] = ws;
            if confl.is_some() {
                break;
            }
        }
        confl
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.bumped(v as u32, &self.activity);
    }

    fn bump_clause(&mut self, cref: u32) {
        let c = &mut self.clauses[cref as usize];
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for &l in &self.learnts {
                self.clauses[l as usize].activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn abstract_level(&self, v: usize) -> u32 {
        1 << (self.level[v] & 31)
    }

    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, usize, u32) {
        let mut learnt = vec![Lit::new(Var(0), false)];
        let mut path_c = 0usize;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        let dl = self.decision_level() as u32;
        loop {
            if self.clauses[confl as usize].learnt {
                self.bump_clause(confl);
            }
            let start = if p.is_some() { 1 } else { 0 };
            let len = self.clauses[confl as usize].lits.len();
            for k in start..len {
                let q = self.clauses[confl as usize].lits[k];
                let v = q.var().index();
                if !self.seen[v] && self.level[v] > 0 {
                    self.bump_var(v);
                    self.seen[v] = true;
                    if self.level[v] >= dl {
                        path_c += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var().index()] {
                    break;
                }
            }
            let lit = self.trail[index];
            p = Some(lit);
            confl = self.reason[lit.var().index()];
            self.seen[lit.var().index()] = false;
            path_c -= 1;
            if path_c == 0 {
                break;
            }
        }
        learnt[0] = !p.unwrap();

        // Recursive minimization.
        self.analyze_toclear.clear();
        self.analyze_toclear.extend_from_slice(&learnt);
        let abs = learnt[1..]
            .iter()
            .fold(0u32, |a, l| a | self.abstract_level(l.var().index()));
        let mut keep = 1;
        for i in 1..learnt.len() {
            let l = learnt[i];
            if self.reason[l.var().index()] == NO_REASON || !self.lit_redundant(l, abs) {
                learnt[keep] = l;
                keep += 1;
            }
        }
        learnt.truncate(keep);
        for l in std::mem::take(&mut self.analyze_toclear) {
            self.seen[l.var().index()] = false;
        }

        let bt = if learnt.len() == 1 {
            0
        } else {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var().index()] > self.level[learnt[max_i].var().index()] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            self.level[learnt[1].var().index()] as usize
        };
        let mut levels: Vec<u32> = learnt.iter().map(|l| self.level[l.var().index()]).collect();
        levels.sort_unstable();
        levels.dedup();
        (learnt, bt, levels.len() as u32)
    }

    fn lit_redundant(&mut self, p: Lit, abs: u32) -> bool {
        self.analyze_stack.clear();
        self.analyze_stack.push(p);
        let top = self.analyze_toclear.len();
        while let Some(q) = self.analyze_stack.pop() {
            let cref = self.reason[q.var().index()] as usize;
            let len = self.clauses[cref].lits.len();
            for k in 1..len {
                let l = self.clauses[cref].lits[k];
                let v = l.var().index();
                if !self.seen[v] && self.level[v] > 0 {
                    if self.reason[v] != NO_REASON && (self.abstract_level(v) & abs) != 0 {
                        self.seen[v] = true;
                        self.analyze_stack.push(l);
                        self.analyze_toclear.push(l);
                    } else {
                        for t in self.analyze_toclear.drain(top..) {
                            self.seen[t.var().index()] = false;
                        }
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Failed assumptions: the clause over negated assumptions implied by the
    /// clause set, when the last call returned UNSAT under assumptions.
    fn analyze_final(&mut self, p: Lit) {
        self.conflict.clear();
        self.conflict.push(p);
        if self.decision_level() == 0 {
            return;
        }
        self.seen[p.var().index()] = true;
        for i in (self.trail_lim[0]..self.trail.len()).rev() {
            let x = self.trail[i].var().index();
            if self.seen[x] {
                let r = self.reason[x];
                if r == NO_REASON {
                    self.conflict.push(!self.trail[i]);
                } else {
                    let len = self.clauses[r as usize].lits.len();
                    for k in 1..len {
                        let v = self.clauses[r as usize].lits[k].var().index();
                        if self.level[v] > 0 {
                            self.seen[v] = true;
                        }
                    }
                }
                self.seen[x] = false;
            }
        }
        self.seen[p.var().index()] = false;
    }

    fn cancel_until(&mut self, lvl: usize) {
        if self.decision_level() <= lvl {
            return;
        }
        let lim = self.trail_lim[lvl];
        for i in (lim..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var().index();
            self.assigns[v] = UNDEF;
            self.reason[v] = NO_REASON;
            self.polarity[v] = !l.is_neg();
            self.heap.insert(v as u32, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(lvl);
        self.qhead = lim;
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assigns[v as usize] == UNDEF {
                return Some(Lit::new(Var(v), !self.polarity[v as usize]));
            }
        }
        None
    }

    fn locked(&self, cref: u32) -> bool {
        let l = self.clauses[cref as usize].lits[0];
        self.reason[l.var().index()] == cref && self.value(l) == TRUE
    }

    fn reduce_db(&mut self) {
        let mut cands: Vec<u32> = self
            .learnts
            .iter()
            .copied()
            .filter(|&c| {
                let cl = &self.clauses[c as usize];
                cl.lbd > 2 && cl.lits.len() > 2 && !self.locked(c)
            })
            .collect();
        cands.sort_by(|&a, &b| {
            let (ca, cb) = (&self.clauses[a as usize], &self.clauses[b as usize]);
            cb.lbd
                .cmp(&ca.lbd)
                .then(ca.activity.partial_cmp(&cb.activity).unwrap_or(std::cmp::Ordering::Equal))
        });
        let remove = cands.len() / 2;
        for &c in &cands[..remove] {
            self.clauses[c as usize].deleted = true;
            self.clauses[c as usize].lits.clear();
            self.clauses[c as usize].lits.shrink_to_fit();
        }
        self.num_deleted += remove;
        self.learnts.retain(|&c| !self.clauses[c as usize].deleted);
        if self.num_deleted * 2 > self.clauses.len() {
            self.collect_garbage();
        }
    }

    fn collect_garbage(&mut self) {
        let mut map = vec![NO_REASON; self.clauses.len()];
        let old = std::mem::take(&mut self.clauses);
        for (i, c) in old.into_iter().enumerate() {
            if !c.deleted {
                map[i] = self.clauses.len() as u32;
                self.clauses.push(c);
            }
        }
        for r in &mut self.reason {
            if *r != NO_REASON {
                *r = map[*r as usize];
            }
        }
        for l in &mut self.learnts {
            *l = map[*l as usize];
        }
        for ws in &mut self.watches {
            ws.retain_mut(|w| {
                let m = map[w.cref as usize];
                w.cref = m;
                m != NO_REASON
            });
        }
        self.num_deleted = 0;
    }

    fn search(&mut self, nof_conflicts: u64, assumptions: &[Lit], budget: &Budget) -> SearchResult {
        let mut conflicts = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                conflicts += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return SearchResult::Unsat;
                }
                let (learnt, bt, lbd) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let first = learnt[0];
                    let cref = self.alloc(learnt, true, lbd);
                    self.attach(cref);
                    self.learnts.push(cref);
                    self.bump_clause(cref);
                    self.enqueue(first, cref);
                }
                self.var_inc /= 0.95;
                self.cla_inc /= 0.999;
                if (self.stats.conflicts & 63) == 0 && budget.exhausted(self.stats.conflicts) {
                    return SearchResult::Budget;
                }
                if budget.conflicts.is_some_and(|c| self.stats.conflicts >= c) {
                    return SearchResult::Budget;
                }
            } else {
                if conflicts >= nof_conflicts {
                    self.cancel_until(0);
                    return SearchResult::Restart;
                }
                if self.learnts.len() as f64 - self.trail.len() as f64 >= self.max_learnts {
                    self.reduce_db();
                }
                let mut next = None;
                while self.decision_level() < assumptions.len() {
                    let p = assumptions[self.decision_level()];
                    match self.value(p) {
                        TRUE => self.trail_lim.push(self.trail.len()),
                        FALSE => {
                            self.analyze_final(!p);
                            return SearchResult::Unsat;
                        }
                        _ => {
                            next = Some(p);
                            break;
                        }
                    }
                }
                let next = match next {
                    Some(p) => p,
                    None => {
                        self.stats.decisions += 1;
                        match self.pick_branch() {
                            Some(l) => l,
                            None => return SearchResult::Sat,
                        }
                    }
                };
                self.trail_lim.push(self.trail.len());
                self.enqueue(next, NO_REASON);
            }
        }
    }

    pub fn solve(&mut self, assumptions: &[Lit]) -> SatStatus {
        self.solve_limited(assumptions, &Budget::unlimited())
    }

    pub fn solve_limited(&mut self, assumptions: &[Lit], budget: &Budget) -> SatStatus {
        self.model.clear();
        self.conflict.clear();
        if !self.ok {
            return SatStatus::Unsat;
        }
        if let Some(max) = assumptions.iter().map(|l| l.var().index()).max() {
            self.ensure_vars(max + 1);
        }
        let start = Instant::now();
        let n_orig = (self.clauses.len() - self.learnts.len()) as f64;
        self.max_learnts = self.max_learnts.max(n_orig / 3.0).max(2000.0);
        let mut curr_restarts = 0u64;
        let status = loop {
            if budget.exhausted(self.stats.conflicts) {
                break SatStatus::Unknown;
            }
            let nof = (luby(2.0, curr_restarts) * 100.0) as u64;
            match self.search(nof, assumptions, budget) {
                SearchResult::Sat => {
                    self.model = self.assigns.iter().map(|&a| a == TRUE).collect();
                    break SatStatus::Sat;
                }
                SearchResult::Unsat => break SatStatus::Unsat,
                SearchResult::Budget => break SatStatus::Unknown,
                SearchResult::Restart => {
                    curr_restarts += 1;
                    self.stats.restarts += 1;
                    self.max_learnts *= 1.05;
                }
            }
        };
        self.cancel_until(0);
        self.stats.wall += start.elapsed();
        status
    }

    pub fn model(&self) -> &[bool] {
        &self.model
    }

    pub fn model_value(&self, v: Var) -> Option<bool> {
        self.model.get(v.index()).copied()
    }

    pub fn lit_model_value(&self, l: Lit) -> Option<bool> {
        self.model_value(l.var()).map(|v| l.eval(v))
    }

    /// After UNSAT under assumptions: negations of a subset of the
    /// assumptions that is already contradictory.
    pub fn failed_assumptions(&self) -> &[Lit] {
        &self.conflict
    }

    /// Value fixed at decision level 0, if any.
    pub fn fixed_value(&self, v: Var) -> Option<bool> {
        match self.assigns.get(v.index()) {
            Some(&a) if a != UNDEF && self.level[v.index()] == 0 => Some(a == TRUE),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lits(xs: &[i64]) -> Vec<Lit> {
        xs.iter().map(|&x| Lit::from_dimacs(x)).collect()
    }

    #[test]
    fn contradiction() {
        let mut s = Solver::new();
        s.add_clause(&lits(&[1]));
        s.add_clause(&lits(&[-1]));
        assert_eq!(s.solve(&[]), SatStatus::Unsat);
    }

    #[test]
    fn simple_sat_with_model() {
        let mut s = Solver::new();
        s.add_clause(&lits(&[1, 2]));
        s.add_clause(&lits(&[-1, 2]));
        s.add_clause(&lits(&[-2, 3]));
        assert_eq!(s.solve(&[]), SatStatus::Sat);
        assert_eq!(s.model_value(Var(1)), Some(true));
        assert_eq!(s.model_value(Var(2)), Some(true));
    }

    #[test]
    fn assumptions_and_incremental() {
        let mut s = Solver::new();
        s.add_clause(&lits(&[1, 2]));
        assert_eq!(s.solve(&lits(&[-1, -2])), SatStatus::Unsat);
        assert!(!s.failed_assumptions().is_empty());
        assert_eq!(s.solve(&lits(&[-1])), SatStatus::Sat);
        s.add_clause(&lits(&[-2]));
        assert_eq!(s.solve(&lits(&[-1])), SatStatus::Unsat);
        assert_eq!(s.solve(&[]), SatStatus::Sat);
        assert_eq!(s.model_value(Var(0)), Some(true));
    }

    #[test]
    fn luby_prefix() {
        let seq: Vec<f64> = (0..7).map(|i| luby(2.0, i)).collect();
        assert_eq!(seq, [1.0, 1.0, 2.0, 1.0, 1.0, 2.0, 4.0]);
    }

    #[test]
    fn conflict_budget_yields_unknown() {
        // PHP(8,7) needs far more than one conflict.
        let mut s = Solver::new();
        let p = |i: u32, j: u32| Var(i * 7 + j);
        for i in 0..8 {
            let c: Vec<Lit> = (0..7).map(|j| p(i, j).pos()).collect();
            s.add_clause(&c);
        }
        for j in 0..7 {
            for a in 0..8 {
                for b in a + 1..8 {
                    s.add_clause(&[p(a, j).neg(), p(b, j).neg()]);
                }
            }
        }
        let budget = Budget {
            conflicts: Some(1),
            deadline: None,
        };
        assert_eq!(s.solve_limited(&[], &budget), SatStatus::Unknown);
        assert_eq!(s.solve(&[]), SatStatus::Unsat);
    }
}
