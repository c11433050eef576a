//! Deep faults: a tracer register, a flip circuit that corrupts one output
//! when a protected (state, tracer) pattern is present, and a key-driven
//! recovery circuit that cancels it.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::lex_key;
use crate::equiv::{check_equivalence, EquivResult, DEFAULT_PRODUCT_LIMIT};
use crate::explore::{Explorer, KeyMode};
use crate::netlist::{Driver, GateKind, NetId, Netlist, NetlistBuilder, NetlistError};
use crate::reach::{reachable_bfs, reachable_bfs_with, ReachError, EXPLICIT_LIMIT};
use crate::scc::{ff_graph, tarjan};
use crate::ssd::sampled_equal;
use crate::Bits;

#[derive(Debug, Error)]
pub enum DfError {
    #[error("tracer width must be at least 1")]
    ZeroWidth,
    #[error("netlist has no output {0}")]
    TargetOutput(usize),
    #[error("pattern has {found} bits, expected {expected}")]
    PatternWidth { expected: usize, found: usize },
    #[error("protected pattern {0} is never reached")]
    PatternUnreachable(Bits),
    #[error("trigger transition {0} -> {1} does not occur")]
    TriggerNotFound(Bits, Bits),
    #[error("LFSR taps {taps:#x} are not maximal for width {width}")]
    BadTaps { taps: u64, width: usize },
    #[error("state bit {0} out of range")]
    StateBit(usize),
    #[error("no certified non-occurring combination for {0}")]
    NoNonOccurring(String),
    #[error("dummy connections changed the circuit function")]
    FunctionChanged,
    #[error(transparent)]
    Reach(#[from] ReachError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TracerKind {
    Clock,
    Transition,
    Lfsr,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TracerConfig {
    pub kind: TracerKind,
    pub width: usize,
    /// Full-width (from, to) state codes of the original circuit; the
    /// tracer advances only on this transition.
    pub trigger: Option<(Bits, Bits)>,
    pub lfsr_taps: Option<u64>,
    /// XOR this original flip-flop into the tracer's low bit.
    pub mix_state_bit: Option<usize>,
}

impl TracerConfig {
    pub fn clock(width: usize) -> Self {
        TracerConfig {
            kind: TracerKind::Clock,
            width,
            trigger: None,
            lfsr_taps: None,
            mix_state_bit: None,
        }
    }

    pub fn transition(width: usize, from: Bits, to: Bits) -> Self {
        TracerConfig {
            kind: TracerKind::Transition,
            trigger: Some((from, to)),
            ..Self::clock(width)
        }
    }

    pub fn lfsr(width: usize) -> Self {
        TracerConfig {
            kind: TracerKind::Lfsr,
            ..Self::clock(width)
        }
    }

    /// Distinct tracer values in one cycle.
    pub fn period(&self) -> u64 {
        match self.kind {
            TracerKind::Lfsr => (1u64 << self.width) - 1,
            _ => 1u64 << self.width,
        }
    }
}

pub fn lfsr_next(s: u64, taps: u64, width: usize) -> u64 {
    let fb = (s & taps).count_ones() as u64 & 1;
    ((s << 1) | fb) & crate::explore::mask(width)
}

pub fn lfsr_period(taps: u64, width: usize) -> u64 {
    let mut s = lfsr_next(1, taps, width);
    let mut p = 1;
    while s != 1 && p <= 1u64 << width {
        s = lfsr_next(s, taps, width);
        p += 1;
    }
    p
}

/// Smallest tap mask (top bit set) giving a maximal-period LFSR.
pub fn default_taps(width: usize) -> u64 {
    assert!((1..=24).contains(&width));
    let top = 1u64 << (width - 1);
    (0..top)
        .map(|low| top | low)
        .find(|&t| lfsr_period(t, width) == (1u64 << width) - 1)
        .expect("maximal polynomials exist for every width")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProtectedPattern {
    pub state_bits: Vec<(String, bool)>,
    /// Most significant tracer bit first.
    pub tracer_bits: Vec<(String, bool)>,
    /// State part then tracer part; this is the correct key.
    pub key_value: Bits,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DepthBound {
    /// Tracer period.
    pub c: u64,
    pub m: Option<u64>,
    pub l: Option<u64>,
    pub q: Option<u64>,
    /// `C` for a free-running tracer, `M + C*L + Q` for a triggered one;
    /// `None` when the trigger can never repeat enough.
    pub bound: Option<u64>,
    /// Lower bound on the length of the shortest sequence that fires the
    /// fault with this construction: `C` free-running, `M + (C-2)*L + Q + 1`
    /// triggered.
    pub min_fire_length: Option<u64>,
}

#[derive(Clone, Debug, Default)]
pub struct DfOptions {
    /// State part then tracer part (MSB first). Auto-selected when absent.
    pub pattern: Option<Bits>,
    /// Original flip-flops in the pattern; all (up to 8) by default.
    pub state_ffs: Option<Vec<usize>>,
    pub target_output: usize,
    /// Correct key of an already-locked input netlist.
    pub base_key: Option<Bits>,
}

#[derive(Clone, Debug)]
pub struct DfResult {
    pub netlist: Netlist,
    pub pattern: ProtectedPattern,
    /// Full correct key: base key then pattern.
    pub key: Bits,
    /// Tracer flip-flop indices in the new netlist, LSB first.
    pub tracer_ffs: Vec<usize>,
    pub bound: DepthBound,
    pub config: TracerConfig,
}

fn state_lits(b: &mut NetlistBuilder, nets: &[NetId], code: &Bits, base: &str) -> NetId {
    let lits: Vec<NetId> = nets
        .iter()
        .zip(code.iter())
        .map(|(&n, v)| {
            if v {
                n
            } else {
                let nm = format!("{}_n", b.name_of(n));
                b.add(&nm, GateKind::Not, &[n])
            }
        })
        .collect();
    b.add_nary(base, GateKind::And, &lits)
}

pub fn apply_df(n: &Netlist, cfg: &TracerConfig, opts: &DfOptions) -> Result<DfResult, DfError> {
    let w = cfg.width;
    if w == 0 {
        return Err(DfError::ZeroWidth);
    }
    if opts.target_output >= n.num_outputs() {
        return Err(DfError::TargetOutput(opts.target_output));
    }
    let base_key = opts.base_key.clone().unwrap_or_else(|| Bits::zeros(n.num_keys()));
    let nff = n.num_ffs();
    let state_ffs: Vec<usize> = opts
        .state_ffs
        .clone()
        .unwrap_or_else(|| (0..nff.min(8)).collect());
    if let Some(&bad) = state_ffs.iter().find(|&&i| i >= nff) {
        return Err(DfError::StateBit(bad));
    }
    if let Some(m) = cfg.mix_state_bit {
        if m >= nff {
            return Err(DfError::StateBit(m));
        }
    }
    let taps = match cfg.kind {
        TracerKind::Lfsr => {
            let t = cfg.lfsr_taps.unwrap_or_else(|| default_taps(w));
            if lfsr_period(t, w) != (1u64 << w) - 1 {
                return Err(DfError::BadTaps { taps: t, width: w });
            }
            t
        }
        _ => 0,
    };
    if let Some((from, to)) = &cfg.trigger {
        check_trigger(n, from, to)?;
    }
    let pattern_bits = match &opts.pattern {
        Some(p) => {
            if p.width() != state_ffs.len() + w {
                return Err(DfError::PatternWidth {
                    expected: state_ffs.len() + w,
                    found: p.width(),
                });
            }
            p.clone()
        }
        None => auto_state(n, &state_ffs)?.concat(&Bits::ones(w)),
    };

    let mut b = n.to_builder();
    let q: Vec<NetId> = n.flipflops().iter().map(|f| f.q).collect();
    let d: Vec<NetId> = n.flipflops().iter().map(|f| f.d).collect();
    let trig = cfg.trigger.as_ref().map(|(from, to)| {
        let a = state_lits(&mut b, &q, from, "df_from");
        let c = state_lits(&mut b, &d, to, "df_to");
        b.add("df_trig", GateKind::And, &[a, c])
    });
    let prefix = if cfg.kind == TracerKind::Lfsr { "df_l" } else { "df_c" };
    let t: Vec<NetId> = (0..w).map(|i| b.fresh(&format!("{prefix}{i}"))).collect();
    let mut next: Vec<NetId> = Vec::with_capacity(w);
    let init: u64 = match cfg.kind {
        TracerKind::Lfsr => {
            let taps_nets: Vec<NetId> = (0..w).filter(|i| (taps >> i) & 1 == 1).map(|i| t[i]).collect();
            let fb = b.add_nary("df_fb", GateKind::Xor, &taps_nets);
            for i in 0..w {
                let shifted = if i == 0 { fb } else { t[i - 1] };
                next.push(match trig {
                    Some(en) => b.add("df_ln", GateKind::Mux2, &[en, t[i], shifted]),
                    None => shifted,
                });
            }
            // Start right after all-ones so the pattern is the last value of
            // the first period.
            lfsr_next(crate::explore::mask(w), taps, w)
        }
        _ => {
            let mut carry = trig;
            for i in 0..w {
                let nx = match carry {
                    Some(c) => b.add("df_cn", GateKind::Xor, &[t[i], c]),
                    None => b.add("df_cn", GateKind::Not, &[t[i]]),
                };
                next.push(nx);
                if i + 1 < w {
                    carry = Some(match carry {
                        Some(c) => b.add("df_cy", GateKind::And, &[t[i], c]),
                        None => t[i],
                    });
                }
            }
            0
        }
    };
    if let Some(m) = cfg.mix_state_bit {
        next[0] = b.add("df_mix", GateKind::Xor, &[next[0], q[m]]);
    }
    for i in 0..w {
        b.dff(t[i], next[i], (init >> i) & 1 == 1);
        b.annotations_mut().tracers.push(t[i]);
    }

    let mut watched: Vec<NetId> = state_ffs.iter().map(|&i| q[i]).collect();
    watched.extend(t.iter().rev());
    let flip = state_lits(&mut b, &watched, &pattern_bits, "df_flip");
    let first_key = n.num_keys();
    let mut matches = Vec::new();
    for (i, &v) in watched.iter().enumerate() {
        let kn = b.fresh(&format!("keyinput{}", first_key + i));
        let kname = b.name_of(kn).to_string();
        let k = b.key_input(&kname);
        matches.push(b.add("df_km", GateKind::Xnor, &[k, v]));
    }
    let recover = b.add_nary("df_recover", GateKind::And, &matches);
    let mut outs = b.outputs().to_vec();
    let y = outs[opts.target_output];
    let y1 = b.add(&format!("{}_flip", b.name_of(y).to_string()), GateKind::Xor, &[y, flip]);
    let y2 = b.add(&format!("{}_df", b.name_of(y).to_string()), GateKind::Xor, &[y1, recover]);
    outs[opts.target_output] = y2;
    b.set_outputs(outs);
    let netlist = b.build()?;

    let names = |nets: &[NetId], bits: &[bool]| -> Vec<(String, bool)> {
        nets.iter()
            .zip(bits)
            .map(|(&x, &v)| (netlist.net_name(x).to_string(), v))
            .collect()
    };
    let s = state_ffs.len();
    let pattern = ProtectedPattern {
        state_bits: names(&watched[..s], &pattern_bits.as_slice()[..s]),
        tracer_bits: names(&watched[s..], &pattern_bits.as_slice()[s..]),
        key_value: pattern_bits.clone(),
    };
    let tracer_ffs: Vec<usize> = t.iter().map(|&x| netlist.ff_index_of_q(x).unwrap()).collect();
    if netlist.num_ffs() <= EXPLICIT_LIMIT && first_fire_length(&netlist, &pattern)?.is_none() {
        return Err(DfError::PatternUnreachable(pattern_bits));
    }
    let bound = compute_bound(n, cfg, &pattern)?;
    Ok(DfResult {
        key: base_key.concat(&pattern_bits),
        netlist,
        pattern,
        tracer_ffs,
        bound,
        config: cfg.clone(),
    })
}

fn check_trigger(n: &Netlist, from: &Bits, to: &Bits) -> Result<(), DfError> {
    let w = n.num_ffs();
    if from.width() != w || to.width() != w {
        return Err(DfError::TriggerNotFound(from.clone(), to.clone()));
    }
    let r = reachable_bfs(n, None)?;
    let mut ex = Explorer::new(n, KeyMode::Free).map_err(ReachError::from)?;
    if !r.set.contains(from.to_u64()) || ex.successors(from.to_u64()).binary_search(&to.to_u64()).is_err() {
        return Err(DfError::TriggerNotFound(from.clone(), to.clone()));
    }
    Ok(())
}

/// Projection of the deepest reachable state (lexicographically smallest
/// among the deepest) onto `ffs`.
fn auto_state(n: &Netlist, ffs: &[usize]) -> Result<Bits, DfError> {
    let r = reachable_bfs(n, None)?;
    let w = n.num_ffs();
    let deepest = r.layers.last().unwrap();
    let s = *deepest.iter().min_by_key(|&&s| lex_key(s, w)).unwrap();
    Ok(ffs.iter().map(|&i| (s >> i) & 1 == 1).collect())
}

fn pattern_mask(n: &Netlist, p: &ProtectedPattern) -> (u64, u64) {
    let mut mask = 0u64;
    let mut value = 0u64;
    for (name, v) in p.state_bits.iter().chain(&p.tracer_bits) {
        let i = n
            .find_net(name)
            .and_then(|x| n.ff_index_of_q(x))
            .expect("pattern nets are flip-flops");
        mask |= 1 << i;
        value |= (*v as u64) << i;
    }
    (mask, value)
}

/// Length of the shortest input sequence after which the flip circuit has
/// fired (the pattern is present in the last frame); `None` if never.
pub fn first_fire_length(df: &Netlist, p: &ProtectedPattern) -> Result<Option<usize>, ReachError> {
    let (mask, value) = pattern_mask(df, p);
    let r = reachable_bfs(df, None)?;
    Ok(r
        .layers
        .iter()
        .position(|layer| layer.iter().any(|&s| s & mask == value))
        .map(|d| d + 1))
}

fn distances_from(n: &Netlist, src: u64) -> Result<HashMap<u64, u64>, ReachError> {
    let mut ex = Explorer::new(n, KeyMode::Free)?;
    let mut dist = HashMap::new();
    dist.insert(src, 0u64);
    let mut q = VecDeque::from([src]);
    while let Some(s) = q.pop_front() {
        let d = dist[&s];
        for t in ex.successors(s) {
            if !dist.contains_key(&t) {
                dist.insert(t, d + 1);
                q.push_back(t);
            }
        }
    }
    Ok(dist)
}

/// Depth bound for a deep fault on the original netlist `n`.
pub fn compute_bound(n: &Netlist, cfg: &TracerConfig, p: &ProtectedPattern) -> Result<DepthBound, DfError> {
    let c = cfg.period();
    let Some((from, to)) = &cfg.trigger else {
        return Ok(DepthBound {
            c,
            m: None,
            l: None,
            q: None,
            bound: Some(c),
            min_fire_length: (cfg.mix_state_bit.is_none()).then_some(c),
        });
    };
    check_trigger(n, from, to)?;
    let (from, to) = (from.to_u64(), to.to_u64());
    let from_init = distances_from(n, n.init_word())?;
    let from_to = distances_from(n, to)?;
    let m = from_init.get(&from).map(|a| a + 1);
    let l = from_to.get(&from).map(|x| x + 1);
    let mut mask = 0u64;
    let mut value = 0u64;
    for (name, v) in &p.state_bits {
        let i = n
            .find_net(name)
            .and_then(|x| n.ff_index_of_q(x))
            .ok_or_else(|| DfError::StateBit(usize::MAX))?;
        mask |= 1 << i;
        value |= (*v as u64) << i;
    }
    let q = from_to
        .iter()
        .filter(|(&s, _)| s & mask == value)
        .map(|(_, &d)| d)
        .min();
    let bound = match (m, l, q) {
        (Some(m), Some(l), Some(q)) => Some(m + c * l + q),
        _ => None,
    };
    // Events needed to reach the pattern value from reset: C - 1.
    let min_fire_length = if cfg.mix_state_bit.is_some() {
        None
    } else {
        match (m, l, q) {
            (Some(m), _, Some(q)) if c <= 2 => Some(m + q + 1),
            (Some(m), Some(l), Some(q)) => Some(m + (c - 2) * l + q + 1),
            _ => None,
        }
    };
    Ok(DepthBound {
        c,
        m,
        l,
        q,
        bound,
        min_fire_length,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HideMode {
    /// Metadata-only dummy fan-in edges.
    Covert,
    /// Real gates fed by signal combinations that never occur.
    NonOccurring,
}

/// Make the flip-flop dependency graph strongly connected by chaining one
/// representative of each component into the next. `key` is the correct key,
/// used to confirm the function is unchanged.
pub fn insert_dummy_connections(n: &Netlist, mode: HideMode, key: &Bits) -> Result<Netlist, DfError> {
    let comps = tarjan(&ff_graph(n));
    if comps.len() <= 1 {
        return Ok(n.clone());
    }
    let mut reps: Vec<usize> = comps.iter().map(|c| c[0]).collect();
    reps.sort_unstable();
    let edges: Vec<(usize, usize)> = (0..reps.len()).map(|i| (reps[i], reps[(i + 1) % reps.len()])).collect();
    let mut b = n.to_builder();
    let q: Vec<NetId> = n.flipflops().iter().map(|f| f.q).collect();
    let reach = match mode {
        HideMode::NonOccurring => Some(reachable_bfs_with(n, KeyMode::Fixed(key.clone()), None)?.set.to_vec()),
        HideMode::Covert => None,
    };
    for (src, dst) in edges {
        let dnet = b.dff_d(q[dst]).unwrap();
        let gate_driven = matches!(n.driver(dnet), Driver::Gate(_)) && b.gate_of(dnet).is_some();
        match mode {
            HideMode::Covert => {
                let target = if gate_driven {
                    dnet
                } else {
                    let nm = format!("{}_cov", b.name_of(q[dst]));
                    let g = b.add(&nm, GateKind::Buf, &[dnet]);
                    b.retarget_dff(q[dst], g);
                    g
                };
                b.annotations_mut().dummy_edges.push((q[src], target));
            }
            HideMode::NonOccurring => {
                let lits = non_occurring(reach.as_ref().unwrap(), n.num_ffs(), src)
                    .ok_or_else(|| DfError::NoNonOccurring(n.net_name(q[src]).to_string()))?;
                let ins: Vec<NetId> = lits
                    .iter()
                    .map(|&(i, v)| {
                        if v {
                            q[i]
                        } else {
                            let nm = format!("{}_z", b.name_of(q[i]));
                            b.add(&nm, GateKind::Not, &[q[i]])
                        }
                    })
                    .collect();
                let z = b.add_nary("dummy_z", GateKind::And, &ins);
                let nm = format!("{}_dm", b.name_of(q[dst]));
                let g = b.add(&nm, GateKind::Or, &[dnet, z]);
                b.retarget_dff(q[dst], g);
            }
        }
    }
    let out = b.build()?;
    let same = match check_equivalence(n, key, &out, key, DEFAULT_PRODUCT_LIMIT) {
        Ok(EquivResult::Equivalent { .. }) => true,
        Ok(EquivResult::Different { .. }) => false,
        _ => sampled_equal(n, key, &out, key, 0xd0d),
    };
    if !same {
        return Err(DfError::FunctionChanged);
    }
    Ok(out)
}

/// Smallest conjunction of flip-flop literals, including one on `src`, that
/// no reachable state satisfies.
fn non_occurring(reach: &[u64], w: usize, src: usize) -> Option<Vec<(usize, bool)>> {
    let never = |lits: &[(usize, bool)]| {
        !reach
            .iter()
            .any(|&s| lits.iter().all(|&(i, v)| ((s >> i) & 1 == 1) == v))
    };
    for v in [false, true] {
        if never(&[(src, v)]) {
            return Some(vec![(src, v)]);
        }
    }
    for a in 0..w {
        for v in [false, true] {
            for va in [false, true] {
                if a != src && never(&[(src, v), (a, va)]) {
                    return Some(vec![(src, v), (a, va)]);
                }
            }
        }
    }
    for a in 0..w {
        for c in a + 1..w {
            if a == src || c == src {
                continue;
            }
            for bits in 0..8u8 {
                let l = [(src, bits & 1 == 1), (a, bits & 2 != 0), (c, bits & 4 != 0)];
                if never(&l) {
                    return Some(l.to_vec());
                }
            }
        }
    }
    // Full minterm of the first unreachable state.
    let seen: std::collections::HashSet<u64> = reach.iter().copied().collect();
    (0..1u64 << w)
        .find(|s| !seen.contains(s))
        .map(|s| (0..w).map(|i| (i, (s >> i) & 1 == 1)).collect())
}
