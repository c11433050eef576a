//! Two-valued cycle simulation.
//!
//! Frame `t` outputs are computed combinationally from `(state_t, input_t)`
//! and `state_{t+1} = D(state_t, input_t)`; the CNF unrolling uses the same
//! convention.

use thiserror::Error;

use crate::netlist::{CombView, Netlist};
use crate::Bits;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("{what} width mismatch: expected {expected}, found {found}")]
    Width {
        what: &'static str,
        expected: usize,
        found: usize,
    },
}

fn check(what: &'static str, expected: usize, found: usize) -> Result<(), SimError> {
    if expected == found {
        Ok(())
    } else {
        Err(SimError::Width {
            what,
            expected,
            found,
        })
    }
}

fn spread(b: &Bits) -> Vec<u64> {
    b.iter().map(|x| if x { !0u64 } else { 0 }).collect()
}

/// Reusable simulator for one netlist.
pub struct Simulator<'a> {
    view: CombView<'a>,
    values: Vec<u64>,
}

impl<'a> Simulator<'a> {
    pub fn new(n: &'a Netlist) -> Self {
        Simulator {
            view: CombView::new(n),
            values: Vec::new(),
        }
    }

    pub fn netlist(&self) -> &'a Netlist {
        self.view.netlist()
    }

    /// One clock in 64 lanes. `state` is updated in place; outputs are returned.
    pub fn step_words(&mut self, inputs: &[u64], keys: &[u64], state: &mut [u64]) -> Vec<u64> {
        self.view.eval_words(inputs, keys, state, &mut self.values);
        let n = self.view.netlist();
        for (s, f) in state.iter_mut().zip(n.flipflops()) {
            *s = self.values[f.d.index()];
        }
        n.outputs().iter().map(|o| self.values[o.index()]).collect()
    }

    /// Net values of the last evaluated frame.
    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn step(&mut self, key: &Bits, state: &Bits, input: &Bits) -> Result<(Bits, Bits), SimError> {
        let n = self.view.netlist();
        check("key", n.num_keys(), key.width())?;
        check("state", n.num_ffs(), state.width())?;
        check("input", n.num_inputs(), input.width())?;
        let mut st = spread(state);
        let outs = self.step_words(&spread(input), &spread(key), &mut st);
        Ok((
            outs.iter().map(|w| w & 1 == 1).collect(),
            st.iter().map(|w| w & 1 == 1).collect(),
        ))
    }

    /// Run from `state`; returns per-frame outputs and the state after each frame.
    pub fn run_from(
        &mut self,
        key: &Bits,
        state: &Bits,
        seq: &[Bits],
    ) -> Result<(Vec<Bits>, Vec<Bits>), SimError> {
        let n = self.view.netlist();
        check("key", n.num_keys(), key.width())?;
        check("state", n.num_ffs(), state.width())?;
        let k = spread(key);
        let mut st = spread(state);
        let mut outs = Vec::with_capacity(seq.len());
        let mut states = Vec::with_capacity(seq.len());
        for frame in seq {
            check("input", n.num_inputs(), frame.width())?;
            let o = self.step_words(&spread(frame), &k, &mut st);
            outs.push(o.iter().map(|w| w & 1 == 1).collect());
            states.push(st.iter().map(|w| w & 1 == 1).collect());
        }
        Ok((outs, states))
    }

    pub fn run(&mut self, key: &Bits, seq: &[Bits]) -> Result<Vec<Bits>, SimError> {
        let init = self.view.netlist().init_state();
        Ok(self.run_from(key, &init, seq)?.0)
    }
}

/// Simulate from the configured initial state.
pub fn simulate(n: &Netlist, key: &Bits, seq: &[Bits]) -> Result<Vec<Bits>, SimError> {
    Simulator::new(n).run(key, seq)
}

/// Simulate and also return `state_t` for every frame (the state the frame
/// was evaluated in).
pub fn simulate_trace(n: &Netlist, key: &Bits, seq: &[Bits]) -> Result<(Vec<Bits>, Vec<Bits>), SimError> {
    let init = n.init_state();
    let (outs, after) = Simulator::new(n).run_from(key, &init, seq)?;
    let mut states = Vec::with_capacity(seq.len());
    if !seq.is_empty() {
        states.push(init);
        states.extend(after.into_iter().take(seq.len() - 1));
    }
    Ok((outs, states))
}

pub fn step(n: &Netlist, key: &Bits, state: &Bits, input: &Bits) -> Result<(Bits, Bits), SimError> {
    Simulator::new(n).step(key, state, input)
}

/// Attack-facing interface to an activated chip: inputs in, outputs out.
pub trait BlackBox {
    fn input_width(&self) -> usize;
    fn output_width(&self) -> usize;
    /// Apply `seq` from the reset state.
    fn query(&mut self, seq: &[Bits]) -> Result<Vec<Bits>, SimError>;
    fn queries(&self) -> usize;
}

/// Simulated chip holding a private key. Every query starts from reset.
pub struct Oracle {
    netlist: Netlist,
    key: Bits,
    state: Bits,
    queries: usize,
}

impl Oracle {
    pub fn new(netlist: Netlist, key: Bits) -> Result<Self, SimError> {
        check("key", netlist.num_keys(), key.width())?;
        let state = netlist.init_state();
        Ok(Oracle {
            netlist,
            key,
            state,
            queries: 0,
        })
    }

    pub fn reset(&mut self) {
        self.state = self.netlist.init_state();
    }
}

impl BlackBox for Oracle {
    fn input_width(&self) -> usize {
        self.netlist.num_inputs()
    }

    fn output_width(&self) -> usize {
        self.netlist.num_outputs()
    }

    fn query(&mut self, seq: &[Bits]) -> Result<Vec<Bits>, SimError> {
        self.reset();
        self.queries += 1;
        let (outs, states) = Simulator::new(&self.netlist).run_from(&self.key, &self.state, seq)?;
        if let Some(last) = states.last() {
            self.state = last.clone();
        }
        Ok(outs)
    }

    fn queries(&self) -> usize {
        self.queries
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_bench;

    const TOGGLE: &str = "INPUT(x)\nOUTPUT(y)\nq = DFF(d)\nd = XOR(q, x)\ny = BUF(q)\n";

    #[test]
    fn mealy_timing() {
        let n = parse_bench(TOGGLE).unwrap();
        let seq: Vec<Bits> = ["1", "0", "1", "1"].iter().map(|s| s.parse().unwrap()).collect();
        let out = simulate(&n, &Bits::zeros(0), &seq).unwrap();
        let got: Vec<String> = out.iter().map(|b| b.to_string()).collect();
        assert_eq!(got, ["0", "1", "1", "0"]);
    }

    #[test]
    fn empty_sequence() {
        let n = parse_bench(TOGGLE).unwrap();
        assert!(simulate(&n, &Bits::zeros(0), &[]).unwrap().is_empty());
    }

    #[test]
    fn width_mismatch() {
        let n = parse_bench(TOGGLE).unwrap();
        let err = simulate(&n, &Bits::zeros(0), &["11".parse().unwrap()]).unwrap_err();
        assert!(matches!(err, SimError::Width { what: "input", .. }));
    }

    #[test]
    fn oracle_resets_between_queries() {
        let n = parse_bench(TOGGLE).unwrap();
        let mut o = Oracle::new(n, Bits::zeros(0)).unwrap();
        let seq: Vec<Bits> = vec!["1".parse().unwrap(), "0".parse().unwrap()];
        let a = o.query(&seq).unwrap();
        let b = o.query(&seq).unwrap();
        assert_eq!(a, b);
        assert_eq!(o.queries(), 2);
    }
}
