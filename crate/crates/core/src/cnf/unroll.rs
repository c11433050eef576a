//! Time-frame expansion of a sequential netlist into CNF.
//!
//! All instances share the per-frame input variables; every instance has its
//! own key variables and starts from the netlist's initial state.

use super::formula::{CnfFormula, Provenance};
use super::lit::Lit;
use super::tseitin::{encode_frame, GateEncoder, Signal};
use super::CnfError;
use crate::netlist::{Driver, Netlist};
use crate::Bits;

/// Instance tag used for variables shared by all instances (primary inputs).
pub const SHARED: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, Default)]
pub struct UnrollOptions {
    /// Propagate constants (the initial state in particular) instead of
    /// allocating a variable per net.
    pub fold: bool,
}

#[derive(Clone, Debug)]
pub struct UnrolledModel {
    base: Netlist,
    formula: CnfFormula,
    fold: bool,
    inputs: Vec<Vec<Lit>>,
    keys: Vec<Vec<Lit>>,
    states: Vec<Vec<Vec<Signal>>>,
    outputs: Vec<Vec<Vec<Signal>>>,
    diff: Vec<Option<Signal>>,
    asserted: bool,
    io_copies: usize,
}

pub fn unroll(n: &Netlist, frames: usize, instances: usize) -> UnrolledModel {
    unroll_with(n, frames, instances, UnrollOptions::default())
}

pub fn unroll_with(n: &Netlist, frames: usize, instances: usize, opts: UnrollOptions) -> UnrolledModel {
    let mut m = UnrolledModel::new(n, instances, opts);
    m.extend(frames);
    m
}

impl UnrolledModel {
    pub fn new(n: &Netlist, instances: usize, opts: UnrollOptions) -> Self {
        let mut formula = CnfFormula::new();
        let mut keys = Vec::with_capacity(instances);
        let mut states = Vec::with_capacity(instances);
        for inst in 0..instances as u32 {
            let k: Vec<Lit> = n
                .key_inputs()
                .iter()
                .map(|&net| {
                    formula
                        .new_var_for(Provenance {
                            net,
                            frame: 0,
                            instance: inst,
                        })
                        .pos()
                })
                .collect();
            keys.push(k);
            let s0: Vec<Signal> = n
                .flipflops()
                .iter()
                .map(|ff| {
                    if opts.fold {
                        Signal::Const(ff.init)
                    } else {
                        let v = formula.new_var_for(Provenance {
                            net: ff.q,
                            frame: 0,
                            instance: inst,
                        });
                        formula.add_clause(&[v.lit(ff.init)]);
                        Signal::Lit(v.pos())
                    }
                })
                .collect();
            states.push(vec![s0]);
        }
        UnrolledModel {
            base: n.clone(),
            formula,
            fold: opts.fold,
            inputs: Vec::new(),
            keys,
            states,
            outputs: vec![Vec::new(); instances],
            diff: Vec::new(),
            asserted: false,
            io_copies: 0,
        }
    }

    pub fn base(&self) -> &Netlist {
        &self.base
    }

    pub fn frames(&self) -> usize {
        self.inputs.len()
    }

    pub fn instances(&self) -> usize {
        self.keys.len()
    }

    pub fn formula(&self) -> &CnfFormula {
        &self.formula
    }

    pub fn formula_mut(&mut self) -> &mut CnfFormula {
        &mut self.formula
    }

    pub fn into_formula(self) -> CnfFormula {
        self.formula
    }

    pub fn input_lits(&self, frame: usize) -> &[Lit] {
        &self.inputs[frame]
    }

    pub fn key_lits(&self, instance: usize) -> &[Lit] {
        &self.keys[instance]
    }

    pub fn outputs(&self, instance: usize, frame: usize) -> &[Signal] {
        &self.outputs[instance][frame]
    }

    /// State at the start of `frame` (`frame == frames()` is the final state).
    pub fn state(&self, instance: usize, frame: usize) -> &[Signal] {
        &self.states[instance][frame]
    }

    pub fn io_copies(&self) -> usize {
        self.io_copies
    }

    /// Unroll further until `frames` frames exist.
    pub fn extend(&mut self, frames: usize) {
        let n = self.base.clone();
        while self.inputs.len() < frames {
            let t = self.inputs.len();
            let ins: Vec<Lit> = n
                .inputs()
                .iter()
                .map(|&net| {
                    self.formula
                        .new_var_for(Provenance {
                            net,
                            frame: t as u32,
                            instance: SHARED,
                        })
                        .pos()
                })
                .collect();
            for inst in 0..self.instances() {
                let state = self.states[inst][t].clone();
                let keys = self.keys[inst].clone();
                let source = |net| match n.driver(net) {
                    Driver::Input(i) => Signal::Lit(ins[i]),
                    Driver::Key(i) => Signal::Lit(keys[i]),
                    Driver::FlipFlop(i) => state[i],
                    Driver::Gate(_) => unreachable!(),
                };
                let sig = encode_frame(&mut self.formula, &n, self.fold, t as u32, inst as u32, &source);
                self.outputs[inst].push(n.outputs().iter().map(|o| sig[o.index()]).collect());
                self.states[inst].push(n.flipflops().iter().map(|f| sig[f.d.index()]).collect());
            }
            self.inputs.push(ins);
            self.diff.push(None);
        }
    }

    /// Flag that is true iff the two instances' outputs differ at `frame`.
    pub fn frame_diff(&mut self, frame: usize) -> Result<Signal, CnfError> {
        if self.instances() != 2 {
            return Err(CnfError::NeedTwoInstances(self.instances()));
        }
        if let Some(s) = self.diff[frame] {
            return Ok(s);
        }
        let pairs: Vec<(Signal, Signal)> = self.outputs[0][frame]
            .iter()
            .copied()
            .zip(self.outputs[1][frame].iter().copied())
            .collect();
        let mut enc = GateEncoder {
            formula: &mut self.formula,
            fold: self.fold,
        };
        let xs: Vec<Signal> = pairs.into_iter().map(|(a, b)| enc.xor2(a, b)).collect();
        let d = enc.or(&xs);
        self.diff[frame] = Some(d);
        Ok(d)
    }

    /// Assert that the outputs differ in some frame. May only be called once.
    pub fn add_difference_assertion(&mut self) -> Result<(), CnfError> {
        if self.asserted {
            return Err(CnfError::DifferenceAlreadyAsserted);
        }
        let mut clause = Vec::new();
        for t in 0..self.frames() {
            match self.frame_diff(t)? {
                Signal::Const(true) => {
                    self.asserted = true;
                    return Ok(());
                }
                Signal::Const(false) => {}
                Signal::Lit(l) => clause.push(l),
            }
        }
        self.formula.add_clause(&clause);
        self.asserted = true;
        Ok(())
    }

    /// Constrain every instance to reproduce `out` on `seq` from reset, using
    /// fresh constant-folded copies so that constraints accumulate.
    pub fn add_io_constraint(&mut self, seq: &[Bits], out: &[Bits]) -> Result<(), CnfError> {
        let n = self.base.clone();
        if seq.len() != out.len() {
            return Err(CnfError::Width {
                what: "sequence length",
                expected: seq.len(),
                found: out.len(),
            });
        }
        for (x, y) in seq.iter().zip(out) {
            if x.width() != n.num_inputs() {
                return Err(CnfError::Width {
                    what: "input frame",
                    expected: n.num_inputs(),
                    found: x.width(),
                });
            }
            if y.width() != n.num_outputs() {
                return Err(CnfError::Width {
                    what: "output frame",
                    expected: n.num_outputs(),
                    found: y.width(),
                });
            }
        }
        if seq.is_empty() {
            return Ok(());
        }
        let copy = (self.io_copies * self.instances()) as u32;
        for inst in 0..self.instances() {
            let keys = self.keys[inst].clone();
            let mut state: Vec<Signal> = n.flipflops().iter().map(|f| Signal::Const(f.init)).collect();
            for (t, (x, y)) in seq.iter().zip(out).enumerate() {
                let source = |net| match n.driver(net) {
                    Driver::Input(i) => Signal::Const(x[i]),
                    Driver::Key(i) => Signal::Lit(keys[i]),
                    Driver::FlipFlop(i) => state[i],
                    Driver::Gate(_) => unreachable!(),
                };
                let tag = 0x8000_0000 | (copy + inst as u32);
                let sig = encode_frame(&mut self.formula, &n, true, t as u32, tag, &source);
                for (j, o) in n.outputs().iter().enumerate() {
                    match sig[o.index()] {
                        Signal::Const(c) if c == y[j] => {}
                        Signal::Const(_) => self.formula.add_clause(&[]),
                        Signal::Lit(l) => self.formula.add_clause(&[if y[j] { l } else { !l }]),
                    }
                }
                state = n.flipflops().iter().map(|f| sig[f.d.index()]).collect();
            }
        }
        self.io_copies += 1;
        Ok(())
    }

    pub fn decode_inputs(&self, assignment: &[bool], len: usize) -> Vec<Bits> {
        self.inputs[..len]
            .iter()
            .map(|fr| fr.iter().map(|l| l.eval(assignment[l.var().index()])).collect())
            .collect()
    }

    pub fn decode_key(&self, assignment: &[bool], instance: usize) -> Bits {
        self.keys[instance]
            .iter()
            .map(|l| l.eval(assignment[l.var().index()]))
            .collect()
    }

    pub fn decode_outputs(&self, assignment: &[bool], instance: usize, len: usize) -> Vec<Bits> {
        self.outputs[instance][..len]
            .iter()
            .map(|fr| fr.iter().map(|s| s.eval(assignment)).collect())
            .collect()
    }

    /// Literals pinning an instance's key to `key`.
    pub fn key_assumptions(&self, instance: usize, key: &Bits) -> Vec<Lit> {
        self.keys[instance]
            .iter()
            .zip(key.iter())
            .map(|(&l, b)| if b { l } else { !l })
            .collect()
    }

    /// Literals pinning the shared inputs of the first `seq.len()` frames.
    pub fn input_assumptions(&self, seq: &[Bits]) -> Vec<Lit> {
        seq.iter()
            .enumerate()
            .flat_map(|(t, x)| {
                self.inputs[t]
                    .iter()
                    .zip(x.iter())
                    .map(|(&l, b)| if b { l } else { !l })
                    .collect::<Vec<_>>()
            })
            .collect()
    }
}
