//! Shallow state duality: copies of reachable states placed at unreachable
//! encodings, selected by key bits, so that several keys are correct.
//!
//! Two entry points: [`apply_ssd`] rewrites a gate-level netlist (one key bit
//! per duplicated state), [`apply_ssd_fsm`] rewrites a state table (one key
//! bit per steered transition edge).

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::bits::lex_key;
use crate::equiv::{check_equivalence, EquivError, EquivResult, DEFAULT_PRODUCT_LIMIT};
use crate::explore::KeyMode;
use crate::fsm::{Fsm, FsmError, Transition};
use crate::netlist::{GateKind, NetId, Netlist, NetlistBuilder, NetlistError};
use crate::reach::{
    certify_unreachable, flips, reachable_bfs, CertKind, Certificate, ReachError, EXPLICIT_LIMIT,
};
use crate::sim::Simulator;
use crate::Bits;

#[derive(Debug, Error)]
pub enum SsdError {
    #[error("requested {requested} duplicate states but only {available} unreachable encodings qualify")]
    InsufficientUrs { requested: usize, available: usize },
    #[error("base key has width {found}, netlist has {expected} key inputs")]
    BaseKey { expected: usize, found: usize },
    #[error(transparent)]
    Reach(#[from] ReachError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Fsm(#[from] FsmError),
    #[error(transparent)]
    Equiv(#[from] EquivError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SsdPair {
    pub original: Bits,
    pub duplicate: Bits,
    /// Index into the locked netlist's key inputs.
    pub key_bit: usize,
    pub hd: usize,
    pub certificate: CertKind,
    /// Absorbing wrong-key state (strict mode only).
    pub trap: Option<Bits>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SsdPlan {
    pub pairs: Vec<SsdPair>,
    pub key_width: usize,
    pub strict: bool,
}

#[derive(Clone, Debug, Default)]
pub struct SsdOptions {
    /// Steer the wrong polarity of each key bit into an absorbing trap state
    /// with inverted outputs, leaving a single correct value per bit.
    pub strict: bool,
    /// Correct key of the input netlist when it is already locked.
    pub base_key: Option<Bits>,
}

#[derive(Clone, Debug)]
pub struct SsdResult {
    pub netlist: Netlist,
    pub original: Netlist,
    pub base_key: Bits,
    pub plan: SsdPlan,
    pub correct_key_count: u64,
}

impl SsdResult {
    /// A correct key: the base key followed by all-ones SSD bits.
    pub fn correct_key(&self) -> Bits {
        self.base_key.concat(&Bits::ones(self.plan.key_width))
    }
}

struct Candidate {
    original: u64,
    duplicate: u64,
    hd: usize,
    certificate: CertKind,
}

/// Pick `count` (reachable, unreachable) pairs: smallest distance first, then
/// deepest reachable state, then lexicographic. Each state is used once.
fn plan_pairs(
    n: &Netlist,
    count: usize,
    forbidden_extra: &HashSet<u64>,
) -> Result<Vec<Candidate>, SsdError> {
    let w = n.num_ffs();
    if count == 0 {
        return Ok(Vec::new());
    }
    let explicit = w <= EXPLICIT_LIMIT;
    let reach = if explicit {
        reachable_bfs(n, None)?
    } else {
        reachable_bfs(n, Some(64))?
    };
    let depth = reach.depth_map();
    let mut states: Vec<u64> = depth.keys().copied().collect();
    states.sort_by_key(|&s| (std::cmp::Reverse(depth[&s]), lex_key(s, w)));
    let mut used_r: HashSet<u64> = HashSet::new();
    let mut used_u: HashSet<u64> = HashSet::new();
    let mut out = Vec::new();
    for hd in 1..=w {
        let mut cands: Vec<(usize, u64, u64, u64)> = Vec::new();
        for &r in &states {
            for u in flips(r, w, hd) {
                if !depth.contains_key(&u) && !forbidden_extra.contains(&u) {
                    cands.push((depth[&r], r, u, lex_key(u, w)));
                }
            }
        }
        cands.sort_by_key(|&(d, r, _, lu)| (std::cmp::Reverse(d), lex_key(r, w), lu));
        for (_, r, u, _) in cands {
            if used_r.contains(&r) || used_u.contains(&u) {
                continue;
            }
            let certificate = if explicit {
                CertKind::Fixpoint
            } else {
                match certify_unreachable(n, &Bits::from_u64(u, w))? {
                    Certificate::ProvenUnreachable(k) => k,
                    _ => continue,
                }
            };
            used_r.insert(r);
            used_u.insert(u);
            out.push(Candidate {
                original: r,
                duplicate: u,
                hd,
                certificate,
            });
            if out.len() == count {
                return Ok(out);
            }
        }
    }
    Err(SsdError::InsufficientUrs {
        requested: count,
        available: out.len(),
    })
}

pub fn apply_ssd(n: &Netlist, k: usize) -> Result<SsdResult, SsdError> {
    apply_ssd_with(n, k, &SsdOptions::default())
}

pub fn apply_ssd_with(n: &Netlist, k: usize, opts: &SsdOptions) -> Result<SsdResult, SsdError> {
    let base_key = opts.base_key.clone().unwrap_or_else(|| Bits::zeros(n.num_keys()));
    if base_key.width() != n.num_keys() {
        return Err(SsdError::BaseKey {
            expected: n.num_keys(),
            found: base_key.width(),
        });
    }
    let w = n.num_ffs();
    let pairs = plan_pairs(n, k, &HashSet::new())?;
    let mut traps: Vec<u64> = Vec::new();
    if opts.strict && !pairs.is_empty() {
        let mut taken: HashSet<u64> = pairs.iter().map(|p| p.duplicate).collect();
        for p in &pairs {
            let extra = plan_trap(n, p.original, &taken)?;
            taken.insert(extra);
            traps.push(extra);
        }
    }
    let mut b = n.to_builder();
    let first_key = n.num_keys();
    let keys: Vec<NetId> = (0..pairs.len())
        .map(|i| {
            let name = b.fresh(&format!("keyinput{}", first_key + i));
            let nm = b.name_of(name).to_string();
            b.key_input(&nm)
        })
        .collect();
    let plan = SsdPlan {
        pairs: pairs
            .iter()
            .enumerate()
            .map(|(i, p)| SsdPair {
                original: Bits::from_u64(p.original, w),
                duplicate: Bits::from_u64(p.duplicate, w),
                key_bit: first_key + i,
                hd: p.hd,
                certificate: p.certificate,
                trap: traps.get(i).map(|&t| Bits::from_u64(t, w)),
            })
            .collect(),
        key_width: pairs.len(),
        strict: opts.strict,
    };
    if !pairs.is_empty() {
        rewrite(&mut b, n, &pairs, &traps, &keys);
    }
    let netlist = b.build()?;
    let correct_key_count = if opts.strict { 1 } else { 1u64 << pairs.len().min(63) };
    Ok(SsdResult {
        netlist,
        original: n.clone(),
        base_key,
        plan,
        correct_key_count,
    })
}

fn plan_trap(n: &Netlist, near: u64, taken: &HashSet<u64>) -> Result<u64, SsdError> {
    let w = n.num_ffs();
    let reach = reachable_bfs(n, if w <= EXPLICIT_LIMIT { None } else { Some(64) })?;
    for hd in 1..=w {
        let mut c: Vec<u64> = flips(near, w, hd)
            .into_iter()
            .filter(|u| !reach.set.contains(*u) && !taken.contains(u))
            .collect();
        c.sort_by_key(|&u| lex_key(u, w));
        for u in c {
            if w <= EXPLICIT_LIMIT
                || matches!(certify_unreachable(n, &Bits::from_u64(u, w))?, Certificate::ProvenUnreachable(_))
            {
                return Ok(u);
            }
        }
    }
    Err(SsdError::InsufficientUrs {
        requested: 2 * taken.len(),
        available: taken.len(),
    })
}

/// AND of literals matching `code` over `nets`; the helper gates are pushed
/// onto `made`.
fn state_eq(b: &mut NetlistBuilder, nets: &[NetId], code: u64, base: &str, made: &mut Vec<NetId>) -> NetId {
    let lits: Vec<NetId> = nets
        .iter()
        .enumerate()
        .map(|(j, &q)| {
            if (code >> j) & 1 == 1 {
                q
            } else {
                let nm = format!("{}_n", b.name_of(q));
                let x = b.add(&nm, GateKind::Not, &[q]);
                made.push(x);
                x
            }
        })
        .collect();
    let g = b.add_nary(base, GateKind::And, &lits);
    made.push(g);
    g
}

fn rewrite(b: &mut NetlistBuilder, n: &Netlist, pairs: &[Candidate], traps: &[u64], keys: &[NetId]) {
    let w = n.num_ffs();
    let q: Vec<NetId> = n.flipflops().iter().map(|f| f.q).collect();
    let mut keep: Vec<NetId> = Vec::new();
    let eq_dup: Vec<NetId> = pairs
        .iter()
        .map(|p| state_eq(b, &q, p.duplicate, "ssd_dup", &mut keep))
        .collect();
    let eq_trap: Vec<NetId> = traps
        .iter()
        .map(|&t| state_eq(b, &q, t, "ssd_trap", &mut keep))
        .collect();

    // Reads of the state see the original encoding while in a copy.
    let mut canon: Vec<Option<NetId>> = vec![None; w];
    for j in 0..w {
        let mut fl: Vec<NetId> = Vec::new();
        for (i, p) in pairs.iter().enumerate() {
            if ((p.original ^ p.duplicate) >> j) & 1 == 1 {
                fl.push(eq_dup[i]);
            }
            if let Some(&t) = traps.get(i) {
                if ((p.original ^ t) >> j) & 1 == 1 {
                    fl.push(eq_trap[i]);
                }
            }
        }
        if fl.is_empty() {
            continue;
        }
        let f = b.add_nary(&format!("ssd_flip{j}"), GateKind::Or, &fl);
        keep.push(f);
        let c = b.add(&format!("ssd_canon{j}"), GateKind::Xor, &[q[j], f]);
        keep.push(c);
        canon[j] = Some(c);
    }
    for j in 0..w {
        if let Some(c) = canon[j] {
            b.replace_uses(q[j], c, &keep);
        }
    }

    let d: Vec<NetId> = q.iter().map(|&x| b.dff_d(x).expect("flip-flop")).collect();
    let mut events: Vec<(NetId, u64)> = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        let mut made = Vec::new();
        let at = state_eq(b, &d, p.original, "ssd_into", &mut made);
        let hit = b.add("ssd_hit", GateKind::And, &[at, keys[i]]);
        events.push((hit, p.original ^ p.duplicate));
        if let Some(&t) = traps.get(i) {
            let nk = b.add("ssd_key_n", GateKind::Not, &[keys[i]]);
            let miss = b.add("ssd_miss", GateKind::And, &[at, nk]);
            events.push((miss, p.original ^ t));
        }
    }
    let c0 = if traps.is_empty() { None } else { Some(b.add("ssd_c0", GateKind::Const0, &[])) };
    let c1 = if traps.is_empty() { None } else { Some(b.add("ssd_c1", GateKind::Const1, &[])) };
    for j in 0..w {
        let toggles: Vec<NetId> = events
            .iter()
            .filter(|(_, diff)| (diff >> j) & 1 == 1)
            .map(|(e, _)| *e)
            .collect();
        let mut dj = d[j];
        if !toggles.is_empty() {
            let t = b.add_nary(&format!("ssd_steer{j}"), GateKind::Or, &toggles);
            dj = b.add(&format!("ssd_d{j}"), GateKind::Xor, &[dj, t]);
        }
        for (i, &t) in traps.iter().enumerate() {
            let bit = if (t >> j) & 1 == 1 { c1 } else { c0 };
            dj = b.add(&format!("ssd_hold{j}"), GateKind::Mux2, &[eq_trap[i], dj, bit.unwrap()]);
        }
        if dj != d[j] {
            b.retarget_dff(q[j], dj);
        }
    }
    if !traps.is_empty() {
        let any = b.add_nary("ssd_in_trap", GateKind::Or, &eq_trap);
        let outs: Vec<NetId> = b
            .outputs()
            .to_vec()
            .into_iter()
            .map(|o| {
                let nm = format!("{}_ssd", b.name_of(o));
                b.add(&nm, GateKind::Xor, &[o, any])
            })
            .collect();
        b.set_outputs(outs);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KeyCount {
    pub count: u64,
    /// Keys actually checked.
    pub tested: u64,
    /// False when the count is extrapolated from sampled keys or sampled
    /// stimuli.
    pub exact: bool,
}

pub const DEFAULT_EXHAUSTIVE_LIMIT: usize = 20;

/// Number of SSD key assignments under which the locked netlist behaves like
/// the original (with the base key).
pub fn count_correct_keys(r: &SsdResult, exhaustive_limit: usize) -> Result<KeyCount, SsdError> {
    let kw = r.plan.key_width;
    let exhaustive = kw <= exhaustive_limit;
    let keys: Vec<u64> = if exhaustive {
        (0..1u64 << kw).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x55d);
        (0..256).map(|_| rng.gen::<u64>() & crate::explore::mask(kw)).collect()
    };
    let mut exact = exhaustive;
    let mut good = 0u64;
    for &k in &keys {
        let full = r.base_key.concat(&Bits::from_u64(k, kw));
        let ok = match check_equivalence(&r.original, &r.base_key, &r.netlist, &full, DEFAULT_PRODUCT_LIMIT) {
            Ok(EquivResult::Equivalent { .. }) => true,
            Ok(EquivResult::Different { .. }) => false,
            Ok(EquivResult::Unknown { .. }) | Err(EquivError::Explore(_)) => {
                exact = false;
                sampled_equal(&r.original, &r.base_key, &r.netlist, &full, 0x5eed ^ k)
            }
            Err(e) => return Err(e.into()),
        };
        good += ok as u64;
    }
    let count = if exhaustive {
        good
    } else {
        ((good as f64 / keys.len() as f64) * (kw as f64).exp2()).round() as u64
    };
    Ok(KeyCount {
        count,
        tested: keys.len() as u64,
        exact,
    })
}

/// Random-stimulus comparison: 16 sequences of 64 frames.
pub fn sampled_equal(a: &Netlist, ka: &Bits, b: &Netlist, kb: &Bits, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sa = Simulator::new(a);
    let mut sb = Simulator::new(b);
    for _ in 0..16 {
        let seq: Vec<Bits> = (0..64)
            .map(|_| (0..a.num_inputs()).map(|_| rng.gen::<bool>()).collect())
            .collect();
        if sa.run(ka, &seq).ok() != sb.run(kb, &seq).ok() {
            return false;
        }
    }
    true
}

#[derive(Clone, Debug, Default)]
pub struct FsmSsdOptions {
    /// Source states whose steered edges go to the duplicate when the key bit
    /// is 0 (the default is on 1).
    pub dup_on_zero_from: Vec<Bits>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SteeredEdge {
    pub from: Bits,
    pub to: Bits,
    pub duplicate: Bits,
    pub key_bit: usize,
    /// Key value that selects the duplicate.
    pub dup_on: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FsmSsdPlan {
    /// (original, duplicate) state codes.
    pub pairs: Vec<(Bits, Bits)>,
    pub edges: Vec<SteeredEdge>,
    pub key_width: usize,
}

/// State-table SSD: duplicate `k` states, then give every transition edge
/// into a duplicated state (from an original state) its own key bit.
pub fn apply_ssd_fsm(f: &Fsm, k: usize, opts: &FsmSsdOptions) -> Result<(Fsm, FsmSsdPlan), SsdError> {
    let w = f.width();
    let n = f.to_netlist()?;
    let defined: HashSet<u64> = f.codes.iter().map(|c| c.to_u64()).collect();
    let pairs = plan_pairs(&n, k, &defined)?;
    let mut out = f.clone();
    let mut dup_of: HashMap<usize, usize> = HashMap::new();
    let binary_names = f.state_names.iter().zip(&f.codes).all(|(s, c)| *s == c.to_string());
    for p in &pairs {
        let r = f
            .state_by_code(&Bits::from_u64(p.original, w))
            .expect("reachable codes belong to states");
        let code = Bits::from_u64(p.duplicate, w);
        let name = if binary_names {
            code.to_string()
        } else {
            format!("{}_dup", f.state_names[r])
        };
        out.state_names.push(name);
        out.codes.push(code);
        dup_of.insert(r, out.state_names.len() - 1);
    }

    let mut edges: Vec<(usize, usize)> = f
        .transitions
        .iter()
        .filter(|t| dup_of.contains_key(&t.to))
        .map(|t| (t.from, t.to))
        .collect();
    edges.sort_by_key(|&(a, b)| (lex_key(f.codes[a].to_u64(), w), lex_key(f.codes[b].to_u64(), w)));
    edges.dedup();
    let kw = edges.len();
    let base = f.num_keys;
    let cols = f.num_inputs + f.num_keys;
    let widen = |c: &[Option<bool>]| -> Vec<Option<bool>> {
        let mut v = c.to_vec();
        v.resize(cols + kw, None);
        v
    };
    let mut steered = Vec::new();
    let mut transitions: Vec<Transition> = Vec::new();
    for t in &f.transitions {
        match edges.iter().position(|&e| e == (t.from, t.to)) {
            Some(e) => {
                let dup_on = !opts.dup_on_zero_from.contains(&f.codes[t.from]);
                let mut to_dup = widen(&t.input);
                to_dup[cols + e] = Some(dup_on);
                let mut to_orig = widen(&t.input);
                to_orig[cols + e] = Some(!dup_on);
                transitions.push(Transition {
                    input: to_orig,
                    ..t.clone()
                });
                transitions.push(Transition {
                    input: to_dup,
                    to: dup_of[&t.to],
                    ..t.clone()
                });
            }
            None => transitions.push(Transition {
                input: widen(&t.input),
                ..t.clone()
            }),
        }
    }
    for e in 0..kw {
        let (from, to) = edges[e];
        steered.push(SteeredEdge {
            from: f.codes[from].clone(),
            to: f.codes[to].clone(),
            duplicate: out.codes[dup_of[&to]].clone(),
            key_bit: base + e,
            dup_on: !opts.dup_on_zero_from.contains(&f.codes[from]),
        });
    }
    // Duplicate rows copy the original's rows and stay among duplicates.
    let mut dup_list: Vec<(usize, usize)> = dup_of.iter().map(|(&r, &u)| (r, u)).collect();
    dup_list.sort_by_key(|&(_, u)| u);
    for (r, u) in dup_list {
        for t in f.transitions.iter().filter(|t| t.from == r) {
            transitions.push(Transition {
                input: widen(&t.input),
                from: u,
                to: dup_of.get(&t.to).copied().unwrap_or(t.to),
                output: t.output.clone(),
            });
        }
    }
    out.transitions = transitions;
    out.num_keys = f.num_keys + kw;
    out.check_deterministic()?;
    let plan = FsmSsdPlan {
        pairs: pairs
            .iter()
            .map(|p| (Bits::from_u64(p.original, w), Bits::from_u64(p.duplicate, w)))
            .collect(),
        edges: steered,
        key_width: kw,
    };
    Ok((out, plan))
}

/// Wrap a state-table SSD as an [`SsdResult`] over synthesized netlists.
pub fn fsm_ssd_result(original: &Fsm, locked: &Fsm, plan: &FsmSsdPlan) -> Result<SsdResult, SsdError> {
    let base = original.to_netlist()?;
    let netlist = locked.to_netlist()?;
    Ok(SsdResult {
        netlist,
        original: base,
        base_key: Bits::zeros(original.num_keys),
        plan: SsdPlan {
            pairs: plan
                .edges
                .iter()
                .map(|e| SsdPair {
                    original: e.to.clone(),
                    duplicate: e.duplicate.clone(),
                    key_bit: e.key_bit,
                    hd: e.to.hamming(&e.duplicate),
                    certificate: CertKind::Fixpoint,
                    trap: None,
                })
                .collect(),
            key_width: plan.key_width,
            strict: false,
        },
        correct_key_count: 1u64 << plan.key_width.min(63),
    })
}

/// Key mode helper: all SSD bits set to `v`, base key in front.
pub fn uniform_key(r: &SsdResult, v: bool) -> KeyMode {
    let bits = if v { Bits::ones(r.plan.key_width) } else { Bits::zeros(r.plan.key_width) };
    KeyMode::Fixed(r.base_key.concat(&bits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fsm::random_fsm;
    use crate::netlist::parse_bench;
    use crate::reach::reachable_bfs_with;

    fn counter3() -> Netlist {
        // 3-bit counter wrapping at 5 (states 0..4), enable input.
        parse_bench(
            "INPUT(en)\nOUTPUT(y)\n\
             a = DFF(na)\nb = DFF(nb)\nc = DFF(nc)\n\
             wrap = AND(c, en)\nnwrap = NOT(wrap)\n\
             ta = XOR(a, en)\nna = AND(ta, nwrap)\n\
             cy = AND(a, en)\ntb = XOR(b, cy)\nnb = AND(tb, nwrap)\n\
             cy2 = AND(a, b, en)\ntc = XOR(c, cy2)\nnc = AND(tc, nwrap)\n\
             y = AND(c, en)\n",
        )
        .unwrap()
    }

    #[test]
    fn zero_pairs_is_identity() {
        let n = counter3();
        let r = apply_ssd(&n, 0).unwrap();
        assert_eq!(r.netlist, n);
        assert_eq!(r.correct_key_count, 1);
    }

    #[test]
    fn all_keys_correct() {
        let n = counter3();
        assert_eq!(reachable_bfs(&n, None).unwrap().set.len(), 5);
        for k in 1..=3 {
            let r = apply_ssd(&n, k).unwrap();
            assert_eq!(r.netlist.num_keys(), k);
            let c = count_correct_keys(&r, 20).unwrap();
            assert_eq!(c, KeyCount { count: 1 << k, tested: 1 << k, exact: true });
        }
        assert!(matches!(apply_ssd(&n, 4), Err(SsdError::InsufficientUrs { .. })));
    }

    #[test]
    fn duplicates_become_reachable_under_steering_key() {
        let n = counter3();
        let r = apply_ssd(&n, 1).unwrap();
        let dup = r.plan.pairs[0].duplicate.to_u64();
        let on = reachable_bfs_with(&r.netlist, uniform_key(&r, true), None).unwrap();
        let off = reachable_bfs_with(&r.netlist, uniform_key(&r, false), None).unwrap();
        assert!(on.set.contains(dup));
        assert!(!off.set.contains(dup));
    }

    #[test]
    fn strict_leaves_one_key() {
        let n = counter3();
        let opts = SsdOptions { strict: true, base_key: None };
        let r = apply_ssd_with(&n, 1, &opts).unwrap();
        assert!(r.plan.pairs[0].trap.is_some());
        let c = count_correct_keys(&r, 20).unwrap();
        assert_eq!(c.count, 1);
        assert_eq!(r.correct_key_count, 1);
    }

    #[test]
    fn fsm_path_keeps_behaviour() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_fsm(&mut rng, 5, 4, 1, 2);
        let (locked, plan) = apply_ssd_fsm(&f, 2, &FsmSsdOptions::default()).unwrap();
        assert_eq!(plan.pairs.len(), 2);
        let r = fsm_ssd_result(&f, &locked, &plan).unwrap();
        if plan.key_width <= 10 {
            let c = count_correct_keys(&r, 10).unwrap();
            assert_eq!(c.count, 1 << plan.key_width);
        }
    }
}
