//! Explicit-state successor enumeration.
//!
//! A state is a `u64` with bit `i` = flip-flop `i`. All assignments of the
//! free bits (primary inputs, plus key inputs when keys are free) are
//! enumerated 64 at a time through the word-parallel evaluator.

use thiserror::Error;

use crate::netlist::{CombView, Netlist};
use crate::Bits;

/// Explicit exploration refuses more free bits than this per step.
pub const MAX_FREE_BITS: usize = 20;
/// Largest state width that can be packed.
pub const MAX_STATE_BITS: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KeyMode {
    Fixed(Bits),
    /// Treat key inputs as additional free inputs.
    Free,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExploreError {
    #[error("{0} flip-flops exceed the explicit-state limit of {1}")]
    TooManyFlipFlops(usize, usize),
    #[error("{0} free bits per step exceed the explicit-state limit of {1}")]
    TooManyFreeBits(usize, usize),
    #[error("key width mismatch: expected {expected}, found {found}")]
    KeyWidth { expected: usize, found: usize },
    #[error("{0} outputs exceed 64")]
    TooManyOutputs(usize),
}

const LANE_MASKS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

/// Word for free bit `j` in chunk `c`: lane `l` carries assignment `c*64 + l`.
#[inline]
pub(crate) fn lane_word(j: usize, chunk: u64) -> u64 {
    if j < 6 {
        LANE_MASKS[j]
    } else if (chunk >> (j - 6)) & 1 == 1 {
        !0
    } else {
        0
    }
}

#[inline]
fn spread(state: u64, width: usize, out: &mut Vec<u64>) {
    out.clear();
    out.extend((0..width).map(|i| if (state >> i) & 1 == 1 { !0u64 } else { 0 }));
}

/// Gather lane `l` of each word into a packed value.
#[inline]
pub(crate) fn gather(words: &[u64], lane: u32) -> u64 {
    words
        .iter()
        .enumerate()
        .fold(0u64, |acc, (i, &w)| acc | (((w >> lane) & 1) << i))
}

pub struct Explorer<'a> {
    netlist: &'a Netlist,
    view: CombView<'a>,
    key_mode: KeyMode,
    key_words: Vec<u64>,
    free_width: usize,
    values: Vec<u64>,
    state_words: Vec<u64>,
    input_words: Vec<u64>,
    free_key_words: Vec<u64>,
    next_words: Vec<u64>,
    out_words: Vec<u64>,
}

impl<'a> Explorer<'a> {
    pub fn new(netlist: &'a Netlist, key_mode: KeyMode) -> Result<Self, ExploreError> {
        if netlist.num_ffs() > MAX_STATE_BITS {
            return Err(ExploreError::TooManyFlipFlops(netlist.num_ffs(), MAX_STATE_BITS));
        }
        if netlist.num_outputs() > 64 {
            return Err(ExploreError::TooManyOutputs(netlist.num_outputs()));
        }
        let (key_words, free_width) = match &key_mode {
            KeyMode::Fixed(k) => {
                if k.width() != netlist.num_keys() {
                    return Err(ExploreError::KeyWidth {
                        expected: netlist.num_keys(),
                        found: k.width(),
                    });
                }
                (
                    k.iter().map(|b| if b { !0 } else { 0 }).collect(),
                    netlist.num_inputs(),
                )
            }
            KeyMode::Free => (Vec::new(), netlist.num_inputs() + netlist.num_keys()),
        };
        if free_width > MAX_FREE_BITS {
            return Err(ExploreError::TooManyFreeBits(free_width, MAX_FREE_BITS));
        }
        Ok(Explorer {
            netlist,
            view: CombView::new(netlist),
            key_mode,
            key_words,
            free_width,
            values: Vec::new(),
            state_words: Vec::new(),
            input_words: Vec::new(),
            free_key_words: Vec::new(),
            next_words: Vec::new(),
            out_words: Vec::new(),
        })
    }

    pub fn netlist(&self) -> &'a Netlist {
        self.netlist
    }

    pub fn width(&self) -> usize {
        self.netlist.num_ffs()
    }

    /// Number of free bits enumerated per step.
    pub fn free_width(&self) -> usize {
        self.free_width
    }

    pub fn key_mode(&self) -> &KeyMode {
        &self.key_mode
    }

    pub fn chunks(&self) -> u64 {
        if self.free_width <= 6 {
            1
        } else {
            1u64 << (self.free_width - 6)
        }
    }

    pub fn lanes_in_chunk(&self) -> u32 {
        if self.free_width >= 6 {
            64
        } else {
            1 << self.free_width
        }
    }

    /// Evaluate `state` for all free assignments of chunk `c`; afterwards
    /// [`Self::next_words`] and [`Self::output_words`] hold the results.
    pub fn eval_chunk(&mut self, state: u64, chunk: u64) {
        let n = self.netlist;
        spread(state, n.num_ffs(), &mut self.state_words);
        self.input_words.clear();
        self.input_words.extend((0..n.num_inputs()).map(|j| lane_word(j, chunk)));
        let keys: &[u64] = match self.key_mode {
            KeyMode::Fixed(_) => &self.key_words,
            KeyMode::Free => {
                self.free_key_words.clear();
                let base = n.num_inputs();
                self.free_key_words
                    .extend((0..n.num_keys()).map(|j| lane_word(base + j, chunk)));
                &self.free_key_words
            }
        };
        self.view
            .eval_words(&self.input_words, keys, &self.state_words, &mut self.values);
        self.next_words.clear();
        self.next_words
            .extend(n.flipflops().iter().map(|f| self.values[f.d.index()]));
        self.out_words.clear();
        self.out_words
            .extend(n.outputs().iter().map(|o| self.values[o.index()]));
    }

    pub fn next_words(&self) -> &[u64] {
        &self.next_words
    }

    pub fn output_words(&self) -> &[u64] {
        &self.out_words
    }

    /// Call `f(free_assignment, next_state)` for every free assignment.
    pub fn for_each_successor(&mut self, state: u64, mut f: impl FnMut(u64, u64)) {
        let lanes = self.lanes_in_chunk();
        for c in 0..self.chunks() {
            self.eval_chunk(state, c);
            for l in 0..lanes {
                f(c * 64 + l as u64, gather(&self.next_words, l));
            }
        }
    }

    /// Distinct successors of `state`, sorted.
    pub fn successors(&mut self, state: u64) -> Vec<u64> {
        let mut v = Vec::new();
        self.for_each_successor(state, |_, s| v.push(s));
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Single step under one free assignment: `(next_state, outputs)`.
    pub fn step(&mut self, state: u64, free: u64) -> (u64, u64) {
        let chunk = free >> 6;
        let lane = (free & 63) as u32;
        self.eval_chunk(state, chunk);
        (gather(&self.next_words, lane), gather(&self.out_words, lane))
    }

    /// Split a free assignment into (inputs, keys) bit vectors.
    pub fn decode_free(&self, free: u64) -> (Bits, Option<Bits>) {
        let ni = self.netlist.num_inputs();
        let inputs = Bits::from_u64(free & mask(ni), ni);
        let keys = match self.key_mode {
            KeyMode::Free => Some(Bits::from_u64(
                (free >> ni) & mask(self.netlist.num_keys()),
                self.netlist.num_keys(),
            )),
            KeyMode::Fixed(_) => None,
        };
        (inputs, keys)
    }
}

pub(crate) fn mask(width: usize) -> u64 {
    if width >= 64 {
        !0
    } else {
        (1u64 << width) - 1
    }
}
