//! Sequential equivalence by explicit product-machine exploration.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::explore::{gather, mask, ExploreError, Explorer, KeyMode};
use crate::netlist::Netlist;
use crate::Bits;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EquivError {
    #[error("interface mismatch: {0}")]
    Interface(String),
    #[error(transparent)]
    Explore(#[from] ExploreError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum EquivResult {
    /// No reachable product state produces differing outputs.
    Equivalent { product_states: usize },
    /// Shortest distinguishing input sequence from reset.
    Different { inputs: Vec<Bits> },
    /// Product-state limit hit before a verdict.
    Unknown { product_states: usize },
}

impl EquivResult {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, EquivResult::Equivalent { .. })
    }
}

pub const DEFAULT_PRODUCT_LIMIT: usize = 1 << 22;

/// Compare `a` under key `ka` with `b` under key `kb`, both from reset.
pub fn check_equivalence(
    a: &Netlist,
    ka: &Bits,
    b: &Netlist,
    kb: &Bits,
    limit: usize,
) -> Result<EquivResult, EquivError> {
    if a.num_inputs() != b.num_inputs() {
        return Err(EquivError::Interface(format!(
            "{} vs {} inputs",
            a.num_inputs(),
            b.num_inputs()
        )));
    }
    if a.num_outputs() != b.num_outputs() {
        return Err(EquivError::Interface(format!(
            "{} vs {} outputs",
            a.num_outputs(),
            b.num_outputs()
        )));
    }
    let mut ea = Explorer::new(a, KeyMode::Fixed(ka.clone()))?;
    let mut eb = Explorer::new(b, KeyMode::Fixed(kb.clone()))?;
    let ni = a.num_inputs();
    let lanes = ea.lanes_in_chunk();
    let lane_mask = mask(lanes as usize);

    let start = (a.init_word(), b.init_word());
    // pair -> (parent pair, input that led here)
    let mut parent: HashMap<(u64, u64), Option<((u64, u64), u64)>> = HashMap::new();
    parent.insert(start, None);
    let mut frontier = vec![start];
    let trace = |parent: &HashMap<(u64, u64), Option<((u64, u64), u64)>>, mut at: (u64, u64), last: u64| {
        let mut ins = vec![last];
        while let Some(Some((p, x))) = parent.get(&at) {
            ins.push(*x);
            at = *p;
        }
        ins.reverse();
        ins.into_iter().map(|x| Bits::from_u64(x, ni)).collect::<Vec<_>>()
    };
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &pair in &frontier {
            for c in 0..ea.chunks() {
                ea.eval_chunk(pair.0, c);
                eb.eval_chunk(pair.1, c);
                let diff = ea
                    .output_words()
                    .iter()
                    .zip(eb.output_words())
                    .fold(0u64, |acc, (x, y)| acc | (x ^ y))
                    & lane_mask;
                if diff != 0 {
                    let lane = diff.trailing_zeros() as u64;
                    return Ok(EquivResult::Different {
                        inputs: trace(&parent, pair, c * 64 + lane),
                    });
                }
                for l in 0..lanes {
                    let np = (gather(ea.next_words(), l), gather(eb.next_words(), l));
                    if !parent.contains_key(&np) {
                        parent.insert(np, Some((pair, c * 64 + l as u64)));
                        next.push(np);
                    }
                }
            }
            if parent.len() > limit {
                return Ok(EquivResult::Unknown {
                    product_states: parent.len(),
                });
            }
        }
        frontier = next;
    }
    Ok(EquivResult::Equivalent {
        product_states: parent.len(),
    })
}

/// Outcome of comparing several keys of one netlist at once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KeySetResult {
    Equivalent { tuples: usize },
    /// `keys[a]` and `keys[b]` differ on `inputs`.
    Different { a: usize, b: usize, inputs: Vec<Bits> },
    Unknown { tuples: usize },
}

/// Are all `keys` sequentially equivalent on `n`? Runs every keyed copy in
/// lockstep from reset; `limit` caps the number of stored state tuples.
pub fn check_keys_equivalent(n: &Netlist, keys: &[Bits], limit: usize) -> Result<KeySetResult, EquivError> {
    if keys.len() < 2 {
        return Ok(KeySetResult::Equivalent { tuples: 1 });
    }
    let mut ex: Vec<Explorer> = keys
        .iter()
        .map(|k| Explorer::new(n, KeyMode::Fixed(k.clone())))
        .collect::<Result<_, _>>()?;
    let ni = n.num_inputs();
    let lanes = ex[0].lanes_in_chunk();
    let lane_mask = mask(lanes as usize);
    let m = keys.len();
    let start = vec![n.init_word(); m];
    let mut parent: HashMap<Vec<u64>, Option<(Vec<u64>, u64)>> = HashMap::new();
    parent.insert(start.clone(), None);
    let mut frontier = vec![start];
    let mut outs: Vec<Vec<u64>> = vec![Vec::new(); m];
    let mut nexts: Vec<Vec<u64>> = vec![Vec::new(); m];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for tuple in &frontier {
            for c in 0..ex[0].chunks() {
                for (i, e) in ex.iter_mut().enumerate() {
                    e.eval_chunk(tuple[i], c);
                    outs[i].clear();
                    outs[i].extend_from_slice(e.output_words());
                    nexts[i].clear();
                    nexts[i].extend_from_slice(e.next_words());
                }
                for i in 1..m {
                    let diff = outs[0]
                        .iter()
                        .zip(&outs[i])
                        .fold(0u64, |acc, (x, y)| acc | (x ^ y))
                        & lane_mask;
                    if diff != 0 {
                        let mut ins = vec![c * 64 + diff.trailing_zeros() as u64];
                        let mut at = tuple.clone();
                        while let Some(Some((p, x))) = parent.get(&at) {
                            ins.push(*x);
                            at = p.clone();
                        }
                        ins.reverse();
                        return Ok(KeySetResult::Different {
                            a: 0,
                            b: i,
                            inputs: ins.into_iter().map(|x| Bits::from_u64(x, ni)).collect(),
                        });
                    }
                }
                for l in 0..lanes {
                    let nt: Vec<u64> = nexts.iter().map(|w| gather(w, l)).collect();
                    if !parent.contains_key(&nt) {
                        parent.insert(nt.clone(), Some((tuple.clone(), c * 64 + l as u64)));
                        next.push(nt);
                    }
                }
            }
            if parent.len() > limit {
                return Ok(KeySetResult::Unknown { tuples: parent.len() });
            }
        }
        frontier = next;
    }
    Ok(KeySetResult::Equivalent { tuples: parent.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_bench;
    use crate::sim::simulate;

    #[test]
    fn toggle_vs_inverted_start() {
        let a = parse_bench("INPUT(x)\nOUTPUT(q)\nq = DFF(d)\nd = NOT(q)\n").unwrap();
        let b = parse_bench("INPUT(x)\nOUTPUT(y)\nq = DFF(d)\nd = NOT(q)\ny = BUFF(q)\n#! init q 1\n").unwrap();
        let z = Bits::zeros(0);
        assert!(check_equivalence(&a, &z, &a, &z, 100).unwrap().is_equivalent());
        match check_equivalence(&a, &z, &b, &z, 100).unwrap() {
            EquivResult::Different { inputs } => {
                assert_eq!(inputs.len(), 1);
                assert_ne!(simulate(&a, &z, &inputs).unwrap(), simulate(&b, &z, &inputs).unwrap());
            }
            r => panic!("{r:?}"),
        }
    }

    #[test]
    fn difference_needs_depth() {
        // Output goes high after two consecutive 1s in one circuit, three in the other.
        let two = parse_bench("INPUT(x)\nOUTPUT(y)\na = DFF(x)\ny = AND(a, x)\n").unwrap();
        let three = parse_bench("INPUT(x)\nOUTPUT(y)\na = DFF(x)\nb = DFF(a)\ny = AND(a, b, x)\n").unwrap();
        let z = Bits::zeros(0);
        match check_equivalence(&two, &z, &three, &z, 100).unwrap() {
            EquivResult::Different { inputs } => {
                assert_eq!(inputs.len(), 2);
                assert_ne!(simulate(&two, &z, &inputs).unwrap(), simulate(&three, &z, &inputs).unwrap());
            }
            r => panic!("{r:?}"),
        }
    }

    #[test]
    fn key_set_matches_pairwise() {
        // y = q XOR k0 XOR k1 with q toggling: keys with equal parity agree.
        let n = parse_bench(
            "INPUT(x)\nINPUT(keyinput0)\nINPUT(keyinput1)\nOUTPUT(y)\nq = DFF(d)\nd = XOR(q, x)\nt = XOR(q, keyinput0)\ny = XOR(t, keyinput1)\n",
        )
        .unwrap();
        let k = |s: &str| s.parse::<Bits>().unwrap();
        assert!(matches!(
            check_keys_equivalent(&n, &[k("00"), k("11")], 100).unwrap(),
            KeySetResult::Equivalent { .. }
        ));
        match check_keys_equivalent(&n, &[k("00"), k("11"), k("01")], 100).unwrap() {
            KeySetResult::Different { a, b, inputs } => {
                assert_eq!((a, b), (0, 2));
                assert_ne!(simulate(&n, &k("00"), &inputs).unwrap(), simulate(&n, &k("01"), &inputs).unwrap());
            }
            r => panic!("{r:?}"),
        }
    }
}
