//! Reachable-state analysis and unreachable-state search.
//!
//! Up to [`EXPLICIT_LIMIT`] flip-flops everything is explicit: BFS to a
//! fixpoint over a dense bitset. Beyond that, reachability is bounded and
//! unreachability claims go through SAT (bounded search for a path, then a
//! one-step induction check).

use std::collections::{HashMap, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::bits::lex_key;
use crate::cnf::{encode_frame, Budget, CnfFormula, IncrementalSolver, Lit, SatStatus, Signal};
use crate::explore::{ExploreError, Explorer, KeyMode};
use crate::netlist::{Driver, Netlist};
use crate::Bits;

pub const EXPLICIT_LIMIT: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReachError {
    #[error("{0} flip-flops exceed the explicit limit of {EXPLICIT_LIMIT}; give a finite depth limit")]
    OverLimit(usize),
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error("state width mismatch: expected {expected}, found {found}")]
    Width { expected: usize, found: usize },
}

#[derive(Clone, Debug)]
pub enum StateSet {
    Dense { width: usize, bits: Vec<u64>, len: usize },
    Sparse { width: usize, set: HashSet<u64> },
}

impl StateSet {
    pub fn new(width: usize) -> Self {
        if width <= EXPLICIT_LIMIT {
            let words = ((1usize << width) + 63) / 64;
            StateSet::Dense {
                width,
                bits: vec![0; words],
                len: 0,
            }
        } else {
            StateSet::Sparse {
                width,
                set: HashSet::new(),
            }
        }
    }

    pub fn width(&self) -> usize {
        match self {
            StateSet::Dense { width, .. } | StateSet::Sparse { width, .. } => *width,
        }
    }

    pub fn insert(&mut self, s: u64) -> bool {
        match self {
            StateSet::Dense { bits, len, .. } => {
                let (w, b) = ((s / 64) as usize, s % 64);
                let fresh = bits[w] & (1 << b) == 0;
                if fresh {
                    bits[w] |= 1 << b;
                    *len += 1;
                }
                fresh
            }
            StateSet::Sparse { set, .. } => set.insert(s),
        }
    }

    pub fn contains(&self, s: u64) -> bool {
        match self {
            StateSet::Dense { bits, width, .. } => {
                *width >= 64 || s >> *width == 0 && bits[(s / 64) as usize] & (1 << (s % 64)) != 0
            }
            StateSet::Sparse { set, .. } => set.contains(&s),
        }
    }

    pub fn contains_bits(&self, s: &Bits) -> bool {
        s.width() == self.width() && self.contains(s.to_u64())
    }

    pub fn len(&self) -> usize {
        match self {
            StateSet::Dense { len, .. } => *len,
            StateSet::Sparse { set, .. } => set.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Members in numeric order.
    pub fn to_vec(&self) -> Vec<u64> {
        match self {
            StateSet::Dense { bits, .. } => {
                let mut v = Vec::with_capacity(self.len());
                for (w, &word) in bits.iter().enumerate() {
                    let mut x = word;
                    while x != 0 {
                        let b = x.trailing_zeros() as u64;
                        v.push(w as u64 * 64 + b);
                        x &= x - 1;
                    }
                }
                v
            }
            StateSet::Sparse { set, .. } => {
                let mut v: Vec<u64> = set.iter().copied().collect();
                v.sort_unstable();
                v
            }
        }
    }

    /// Members as bit strings in lexicographic order.
    pub fn to_bits(&self) -> Vec<Bits> {
        let w = self.width();
        let mut v = self.to_vec();
        v.sort_by_key(|&s| lex_key(s, w));
        v.into_iter().map(|s| Bits::from_u64(s, w)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct Reachability {
    pub set: StateSet,
    /// BFS layers: `layers[d]` holds the states first reached after `d` steps.
    pub layers: Vec<Vec<u64>>,
    /// True when the exploration hit a fixpoint (the set is exact).
    pub complete: bool,
    pub key_mode: KeyMode,
}

impl Reachability {
    pub fn width(&self) -> usize {
        self.set.width()
    }

    pub fn depth_map(&self) -> HashMap<u64, usize> {
        let mut m = HashMap::with_capacity(self.set.len());
        for (d, layer) in self.layers.iter().enumerate() {
            for &s in layer {
                m.insert(s, d);
            }
        }
        m
    }

    pub fn max_depth(&self) -> usize {
        self.layers.len().saturating_sub(1)
    }
}

/// Reachable states with keys treated as free inputs.
pub fn reachable_bfs(n: &Netlist, depth_limit: Option<usize>) -> Result<Reachability, ReachError> {
    reachable_bfs_with(n, KeyMode::Free, depth_limit)
}

pub fn reachable_bfs_with(n: &Netlist, key_mode: KeyMode, depth_limit: Option<usize>) -> Result<Reachability, ReachError> {
    let width = n.num_ffs();
    if width > EXPLICIT_LIMIT && depth_limit.is_none() {
        return Err(ReachError::OverLimit(width));
    }
    let mut ex = Explorer::new(n, key_mode.clone())?;
    let mut set = StateSet::new(width);
    let init = n.init_word();
    set.insert(init);
    let mut layers = vec![vec![init]];
    let mut complete = false;
    loop {
        if depth_limit.is_some_and(|l| layers.len() > l) {
            break;
        }
        let mut next = Vec::new();
        for &s in layers.last().unwrap() {
            ex.for_each_successor(s, |_, t| {
                if set.insert(t) {
                    next.push(t);
                }
            });
        }
        if next.is_empty() {
            complete = true;
            break;
        }
        next.sort_unstable();
        layers.push(next);
    }
    Ok(Reachability {
        set,
        layers,
        complete,
        key_mode,
    })
}

/// Hamming distance from every state to the nearest state outside `reach`
/// (multi-source BFS on the hypercube). `u8::MAX` when no such state exists.
pub(crate) fn distance_to_unreachable(reach: &StateSet) -> Vec<u8> {
    let w = reach.width();
    let size = 1usize << w;
    let mut dist = vec![u8::MAX; size];
    let mut frontier: Vec<u64> = Vec::new();
    for s in 0..size as u64 {
        if !reach.contains(s) {
            dist[s as usize] = 0;
            frontier.push(s);
        }
    }
    let mut d = 0u8;
    while !frontier.is_empty() {
        d += 1;
        let mut next = Vec::new();
        for &s in &frontier {
            for b in 0..w {
                let t = s ^ (1 << b);
                if dist[t as usize] == u8::MAX {
                    dist[t as usize] = d;
                    next.push(t);
                }
            }
        }
        frontier = next;
    }
    dist
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CertKind {
    /// Excluded by an exact reachable-set fixpoint.
    Fixpoint,
    /// Proven by one-step induction on `state != s`.
    Induction,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UrsWitness {
    /// State one step before `s_reach` on a shortest exact-step path; `None`
    /// when `s_reach` is the initial state at depth 0.
    pub s_prev: Option<Bits>,
    pub s_reach: Bits,
    pub s_urs: Bits,
    pub hd: usize,
    pub depth: usize,
    pub certificate: CertKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum UrsSearch {
    Found(UrsWitness),
    /// Every encoding is reachable.
    NoUrs,
    /// A candidate exists but only beyond the depth limit.
    NotWithinLimit,
}

/// Minimum-distance unreachable state next to an exact-step reachable set.
///
/// Searches distance outermost and step count innermost; among the states
/// reached in exactly `depth` steps the lexicographically smallest URS wins,
/// then the smallest reachable neighbour, then the smallest predecessor.
pub fn find_urs_min_hd(n: &Netlist, limit: Option<usize>) -> Result<UrsSearch, ReachError> {
    let w = n.num_ffs();
    if w > EXPLICIT_LIMIT {
        return find_urs_symbolic(n, limit.unwrap_or(64));
    }
    let reach = reachable_bfs(n, None)?;
    if reach.set.len() == 1usize << w {
        return Ok(UrsSearch::NoUrs);
    }
    let dist = distance_to_unreachable(&reach.set);
    let hd = reach
        .set
        .to_vec()
        .iter()
        .map(|&s| dist[s as usize])
        .min()
        .unwrap() as usize;
    let near = |s: u64| dist[s as usize] as usize == hd;
    let limit = limit.unwrap_or(usize::MAX);

    let mut ex = Explorer::new(n, KeyMode::Free)?;
    let init = n.init_word();
    let mut prev: Vec<u64> = vec![init];
    let mut found: Option<(usize, Vec<u64>, Vec<u64>)> = None;
    let max_i = reach.max_depth() + 1;
    for i in 1..=max_i.min(limit) {
        let mut cur = Vec::new();
        for &s in &prev {
            cur.extend(ex.successors(s));
        }
        cur.sort_unstable();
        cur.dedup();
        if cur.iter().any(|&s| near(s)) {
            found = Some((i, prev, cur));
            break;
        }
        prev = cur;
    }
    let (depth, s_prev_set, s_set) = match found {
        Some(x) => x,
        None if near(init) => (0, Vec::new(), vec![init]),
        None if max_i > limit => return Ok(UrsSearch::NotWithinLimit),
        None => unreachable!("every reachable state sits in some exact-step set"),
    };

    let mut best: Option<(u64, u64)> = None;
    for &r in s_set.iter().filter(|&&s| near(s)) {
        for u in flips(r, w, hd) {
            if reach.set.contains(u) {
                continue;
            }
            let cand = (lex_key(u, w), lex_key(r, w));
            if best.map_or(true, |b| cand < (lex_key(b.0, w), lex_key(b.1, w))) {
                best = Some((u, r));
            }
        }
    }
    let (u, r) = best.expect("a near state has an unreachable neighbour");
    let s_prev = if depth == 0 {
        None
    } else {
        let mut ps: Vec<u64> = s_prev_set
            .iter()
            .copied()
            .filter(|&p| ex.successors(p).binary_search(&r).is_ok())
            .collect();
        ps.sort_by_key(|&p| lex_key(p, w));
        Some(Bits::from_u64(ps[0], w))
    };
    Ok(UrsSearch::Found(UrsWitness {
        s_prev,
        s_reach: Bits::from_u64(r, w),
        s_urs: Bits::from_u64(u, w),
        hd,
        depth,
        certificate: CertKind::Fixpoint,
    }))
}

/// All states at Hamming distance exactly `k` from `s` within `w` bits.
pub(crate) fn flips(s: u64, w: usize, k: usize) -> Vec<u64> {
    let mut out = Vec::new();
    if k > w {
        return out;
    }
    if k == 0 {
        return vec![s];
    }
    let mut m: u64 = (1u64 << k) - 1;
    let limit = if w >= 64 { u64::MAX } else { 1u64 << w };
    while m < limit {
        out.push(s ^ m);
        // Gosper's hack: next mask with the same popcount.
        let c = m & m.wrapping_neg();
        let r = m + c;
        if r == 0 {
            break;
        }
        m = (((r ^ m) >> 2) / c) | r;
    }
    out
}

/// Beyond the explicit limit: bounded reachable set, then induction-certified
/// candidates in increasing distance.
fn find_urs_symbolic(n: &Netlist, depth: usize) -> Result<UrsSearch, ReachError> {
    let w = n.num_ffs();
    if w > 64 {
        return Err(ReachError::Explore(ExploreError::TooManyFlipFlops(w, 64)));
    }
    let reach = reachable_bfs(n, Some(depth))?;
    let depth_of = reach.depth_map();
    for hd in 1..=w.min(3) {
        let mut cands: Vec<(u64, u64, usize)> = Vec::new();
        for (d, layer) in reach.layers.iter().enumerate().skip(1) {
            for &r in layer {
                for u in flips(r, w, hd) {
                    if !depth_of.contains_key(&u) {
                        cands.push((u, r, d));
                    }
                }
            }
        }
        cands.sort_by_key(|&(u, r, d)| (d, lex_key(u, w), lex_key(r, w)));
        for (u, r, d) in cands {
            let ub = Bits::from_u64(u, w);
            if let Certificate::ProvenUnreachable(kind) = certify_unreachable(n, &ub)? {
                let prev = reach.layers[d - 1]
                    .iter()
                    .copied()
                    .filter(|&p| {
                        Explorer::new(n, KeyMode::Free)
                            .map(|mut e| e.successors(p).contains(&r))
                            .unwrap_or(false)
                    })
                    .min_by_key(|&p| lex_key(p, w));
                return Ok(UrsSearch::Found(UrsWitness {
                    s_prev: prev.map(|p| Bits::from_u64(p, w)),
                    s_reach: Bits::from_u64(r, w),
                    s_urs: ub,
                    hd,
                    depth: d,
                    certificate: kind,
                }));
            }
        }
    }
    Ok(UrsSearch::NotWithinLimit)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Certificate {
    ProvenUnreachable(CertKind),
    /// A witness path: `states[0]` is the initial state, `states[i+1]` is
    /// reached from `states[i]` under `inputs[i]` (and `keys[i]` when keys
    /// were free).
    Reachable {
        inputs: Vec<Bits>,
        keys: Vec<Bits>,
        states: Vec<Bits>,
    },
    Unknown,
}

/// Decide whether `s` is reachable, with keys free.
pub fn certify_unreachable(n: &Netlist, s: &Bits) -> Result<Certificate, ReachError> {
    certify_unreachable_with(n, s, &KeyMode::Free, 32)
}

pub fn certify_unreachable_with(
    n: &Netlist,
    s: &Bits,
    key_mode: &KeyMode,
    bmc_depth: usize,
) -> Result<Certificate, ReachError> {
    let w = n.num_ffs();
    if s.width() != w {
        return Err(ReachError::Width {
            expected: w,
            found: s.width(),
        });
    }
    let explicit_ok = w <= EXPLICIT_LIMIT && Explorer::new(n, key_mode.clone()).is_ok();
    if explicit_ok {
        let reach = reachable_bfs_with(n, key_mode.clone(), None)?;
        let target = s.to_u64();
        if !reach.set.contains(target) {
            return Ok(Certificate::ProvenUnreachable(CertKind::Fixpoint));
        }
        return Ok(explicit_path(n, &reach, target)?);
    }
    symbolic_certify(n, s, key_mode, bmc_depth)
}

fn explicit_path(n: &Netlist, reach: &Reachability, target: u64) -> Result<Certificate, ReachError> {
    let w = n.num_ffs();
    let depth = reach.depth_map()[&target];
    let mut ex = Explorer::new(n, reach.key_mode.clone())?;
    let mut states = vec![target];
    let mut frees = Vec::new();
    let mut cur = target;
    for d in (0..depth).rev() {
        let mut pick = None;
        for &p in &reach.layers[d] {
            ex.for_each_successor(p, |free, t| {
                if t == cur && pick.is_none() {
                    pick = Some((p, free));
                }
            });
            if pick.is_some() {
                break;
            }
        }
        let (p, free) = pick.expect("BFS layers are consistent");
        states.push(p);
        frees.push(free);
        cur = p;
    }
    states.reverse();
    frees.reverse();
    let mut inputs = Vec::new();
    let mut keys = Vec::new();
    for f in frees {
        let (i, k) = ex.decode_free(f);
        inputs.push(i);
        if let Some(k) = k {
            keys.push(k);
        }
    }
    Ok(Certificate::Reachable {
        inputs,
        keys,
        states: states.into_iter().map(|x| Bits::from_u64(x, w)).collect(),
    })
}

fn symbolic_certify(n: &Netlist, s: &Bits, key_mode: &KeyMode, bmc_depth: usize) -> Result<Certificate, ReachError> {
    let w = n.num_ffs();
    if n.init_state() == *s {
        return Ok(Certificate::Reachable {
            inputs: vec![],
            keys: vec![],
            states: vec![s.clone()],
        });
    }
    // Bounded search for a path: one frame at a time, keys free per frame.
    let mut f = CnfFormula::new();
    let mut solver = IncrementalSolver::new();
    let mut state: Vec<Signal> = n.flipflops().iter().map(|ff| Signal::Const(ff.init)).collect();
    let mut frames: Vec<(Vec<Lit>, Vec<Lit>, Vec<Signal>)> = Vec::new();
    for t in 0..bmc_depth {
        let ins: Vec<Lit> = (0..n.num_inputs()).map(|_| f.new_var().pos()).collect();
        let keys: Vec<Signal> = match key_mode {
            KeyMode::Fixed(k) => k.iter().map(Signal::Const).collect(),
            KeyMode::Free => (0..n.num_keys()).map(|_| Signal::Lit(f.new_var().pos())).collect(),
        };
        let st = state.clone();
        let src = |net| match n.driver(net) {
            Driver::Input(i) => Signal::Lit(ins[i]),
            Driver::Key(i) => keys[i],
            Driver::FlipFlop(i) => st[i],
            Driver::Gate(_) => unreachable!(),
        };
        let sig = encode_frame(&mut f, n, true, t as u32, 0, &src);
        let next: Vec<Signal> = n.flipflops().iter().map(|ff| sig[ff.d.index()]).collect();
        let key_lits: Vec<Lit> = keys.iter().filter_map(|k| k.as_lit()).collect();
        frames.push((ins, key_lits, st));
        // Activation literal for "state after frame t equals s".
        let act = f.new_var().pos();
        let mut impossible = false;
        for (j, sg) in next.iter().enumerate() {
            match *sg {
                Signal::Const(c) if c == s[j] => {}
                Signal::Const(_) => impossible = true,
                Signal::Lit(l) => f.add_clause(&[!act, if s[j] { l } else { !l }]),
            }
        }
        if !impossible {
            let out = solver.solve(&f, &[act], &Budget::default());
            if out.status == SatStatus::Sat {
                let a = out.assignment.unwrap();
                let mut inputs = Vec::new();
                let mut keys_out = Vec::new();
                let mut states = Vec::new();
                for (ins, ks, st) in &frames {
                    inputs.push(ins.iter().map(|l| l.eval(a[l.var().index()])).collect());
                    if matches!(key_mode, KeyMode::Free) {
                        keys_out.push(ks.iter().map(|l| l.eval(a[l.var().index()])).collect());
                    }
                    states.push(st.iter().map(|x| x.eval(&a)).collect());
                }
                states.push(s.clone());
                return Ok(Certificate::Reachable {
                    inputs,
                    keys: keys_out,
                    states,
                });
            }
        }
        f.add_clause(&[!act]);
        state = next;
    }
    // One-step induction on P(x) = x != s.
    let mut g = CnfFormula::new();
    let xs: Vec<Lit> = (0..w).map(|_| g.new_var().pos()).collect();
    let ins: Vec<Lit> = (0..n.num_inputs()).map(|_| g.new_var().pos()).collect();
    let keys: Vec<Signal> = match key_mode {
        KeyMode::Fixed(k) => k.iter().map(Signal::Const).collect(),
        KeyMode::Free => (0..n.num_keys()).map(|_| Signal::Lit(g.new_var().pos())).collect(),
    };
    let src = |net| match n.driver(net) {
        Driver::Input(i) => Signal::Lit(ins[i]),
        Driver::Key(i) => keys[i],
        Driver::FlipFlop(i) => Signal::Lit(xs[i]),
        Driver::Gate(_) => unreachable!(),
    };
    let sig = encode_frame(&mut g, n, true, 0, 0, &src);
    let differs: Vec<Lit> = xs.iter().enumerate().map(|(j, &l)| if s[j] { !l } else { l }).collect();
    g.add_clause(&differs);
    for (j, ff) in n.flipflops().iter().enumerate() {
        match sig[ff.d.index()] {
            Signal::Const(c) if c == s[j] => {}
            Signal::Const(_) => return Ok(Certificate::ProvenUnreachable(CertKind::Induction)),
            Signal::Lit(l) => g.add_clause(&[if s[j] { l } else { !l }]),
        }
    }
    let out = crate::cnf::solve(&g, &[], &Budget::default());
    Ok(match out.status {
        SatStatus::Unsat => Certificate::ProvenUnreachable(CertKind::Induction),
        _ => Certificate::Unknown,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_bench;

    #[test]
    fn flips_enumerates_combinations() {
        let v = flips(0, 4, 2);
        assert_eq!(v.len(), 6);
        assert!(v.iter().all(|x| x.count_ones() == 2));
        assert_eq!(flips(0b101, 3, 0), vec![0b101]);
    }

    #[test]
    fn toggle_has_no_urs() {
        let n = parse_bench("INPUT(x)\nOUTPUT(q)\nq = DFF(d)\nd = NOT(q)\n").unwrap();
        assert_eq!(find_urs_min_hd(&n, None).unwrap(), UrsSearch::NoUrs);
    }

    #[test]
    fn zero_ff_circuit_has_empty_state() {
        let n = parse_bench("INPUT(a)\nOUTPUT(y)\ny = NOT(a)\n").unwrap();
        let r = reachable_bfs(&n, None).unwrap();
        assert_eq!(r.set.len(), 1);
        assert!(r.complete);
    }

    #[test]
    fn depth_limit_marks_incomplete() {
        // 3-bit shift register fed by x: everything reachable after 3 steps.
        let n = parse_bench("INPUT(x)\nOUTPUT(c)\na = DFF(x)\nb = DFF(a)\nc = DFF(b)\n").unwrap();
        let r = reachable_bfs(&n, Some(1)).unwrap();
        assert!(!r.complete);
        assert_eq!(r.set.len(), 2);
        let full = reachable_bfs(&n, None).unwrap();
        assert!(full.complete);
        assert_eq!(full.set.len(), 8);
    }
}
