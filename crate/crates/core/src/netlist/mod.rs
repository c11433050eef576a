//! Gate-level circuit IR.
//!
//! Nets are dense [`NetId`]s. A parsed netlist numbers nets in definition
//! order; every net has exactly one definition (primary input, key input,
//! flip-flop Q, or gate output). Gates, flip-flops and input lists are kept
//! sorted by their defining net id, which makes serialization reproduce the
//! numbering exactly.

mod bench;
mod builder;
mod comb;
mod sidecar;

pub use bench::{parse_bench, parse_bench_with, serialize_bench, BenchOptions, WriteOptions};
pub use builder::NetlistBuilder;
pub use comb::{eval_gate_word, CombView};
pub use sidecar::Sidecar;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub const DEFAULT_KEY_PREFIX: &str = "keyinput";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NetId(pub u32);

impl NetId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Xnor,
    Not,
    Buf,
    /// Inputs are `[select, d0, d1]`; the output is `d1` when select is 1.
    Mux2,
    Const0,
    Const1,
}

impl GateKind {
    pub fn bench_name(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Nand => "NAND",
            GateKind::Or => "OR",
            GateKind::Nor => "NOR",
            GateKind::Xor => "XOR",
            GateKind::Xnor => "XNOR",
            GateKind::Not => "NOT",
            GateKind::Buf => "BUF",
            GateKind::Mux2 => "MUX",
            GateKind::Const0 => "CONST0",
            GateKind::Const1 => "CONST1",
        }
    }

    pub fn from_bench_name(name: &str) -> Option<GateKind> {
        Some(match name.to_ascii_uppercase().as_str() {
            "AND" => GateKind::And,
            "NAND" => GateKind::Nand,
            "OR" => GateKind::Or,
            "NOR" => GateKind::Nor,
            "XOR" => GateKind::Xor,
            "XNOR" => GateKind::Xnor,
            "NOT" | "INV" => GateKind::Not,
            "BUF" | "BUFF" => GateKind::Buf,
            "MUX" | "MUX2" => GateKind::Mux2,
            "CONST0" | "GND" => GateKind::Const0,
            "CONST1" | "VDD" => GateKind::Const1,
            _ => return None,
        })
    }

    pub fn arity_ok(self, n: usize) -> bool {
        match self {
            GateKind::Not | GateKind::Buf => n == 1,
            GateKind::Mux2 => n == 3,
            GateKind::Const0 | GateKind::Const1 => n == 0,
            _ => n >= 2,
        }
    }

    pub fn arity_text(self) -> &'static str {
        match self {
            GateKind::Not | GateKind::Buf => "exactly 1",
            GateKind::Mux2 => "exactly 3",
            GateKind::Const0 | GateKind::Const1 => "0",
            _ => "at least 2",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.bench_name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub inputs: Vec<NetId>,
    pub output: NetId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlipFlop {
    pub q: NetId,
    pub d: NetId,
    pub init: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Driver {
    Input(usize),
    Key(usize),
    FlipFlop(usize),
    Gate(usize),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetlistError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}: net '{net}' is driven more than once")]
    MultiDriver { net: String, line: usize },
    #[error("line {line}, column {col}: undefined net '{net}'")]
    Undefined { net: String, line: usize, col: usize },
    #[error("line {line}: {kind} gate '{net}' has {got} inputs, expected {expected}")]
    Arity {
        kind: GateKind,
        net: String,
        got: usize,
        expected: &'static str,
        line: usize,
    },
    #[error("combinational cycle through net '{net}'")]
    CombCycle { net: String },
    #[error("net '{0}' is both a primary input and a key input")]
    KeyOverlap(String),
    #[error("net '{0}' has no driver")]
    Undriven(String),
    #[error("unknown net '{0}'")]
    UnknownNet(String),
    #[error("sidecar: {0}")]
    Sidecar(String),
}

/// Optional design metadata that survives `.bench` round-trips via `#!`
/// annotation comments.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Annotations {
    /// Q nets of flip-flops that belong to an inserted tracer.
    pub tracers: Vec<NetId>,
    /// Logical dummy fan-in edges `(from, to)`: `from` is wired into the gate
    /// driving `to` without affecting its function.
    pub dummy_edges: Vec<(NetId, NetId)>,
}

#[derive(Clone, Debug)]
pub struct Netlist {
    pub(crate) name: String,
    pub(crate) net_names: Vec<String>,
    pub(crate) name_index: HashMap<String, NetId>,
    pub(crate) inputs: Vec<NetId>,
    pub(crate) outputs: Vec<NetId>,
    pub(crate) key_inputs: Vec<NetId>,
    pub(crate) flipflops: Vec<FlipFlop>,
    pub(crate) gates: Vec<Gate>,
    pub(crate) drivers: Vec<Driver>,
    pub(crate) topo: Vec<usize>,
    pub(crate) annotations: Annotations,
}

impl PartialEq for Netlist {
    /// Structural identity: same nets, names, I/O lists, flip-flops, gates and
    /// annotations. The circuit name is not part of the structure.
    fn eq(&self, other: &Self) -> bool {
        self.net_names == other.net_names
            && self.inputs == other.inputs
            && self.outputs == other.outputs
            && self.key_inputs == other.key_inputs
            && self.flipflops == other.flipflops
            && self.gates == other.gates
            && self.annotations == other.annotations
    }
}

impl Eq for Netlist {}

impl Netlist {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn num_nets(&self) -> usize {
        self.net_names.len()
    }

    pub fn inputs(&self) -> &[NetId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[NetId] {
        &self.outputs
    }

    pub fn key_inputs(&self) -> &[NetId] {
        &self.key_inputs
    }

    pub fn flipflops(&self) -> &[FlipFlop] {
        &self.flipflops
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn annotations(&self) -> &Annotations {
        &self.annotations
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn num_keys(&self) -> usize {
        self.key_inputs.len()
    }

    pub fn num_ffs(&self) -> usize {
        self.flipflops.len()
    }

    pub fn net_name(&self, id: NetId) -> &str {
        &self.net_names[id.index()]
    }

    pub fn net_names(&self) -> &[String] {
        &self.net_names
    }

    pub fn find_net(&self, name: &str) -> Option<NetId> {
        self.name_index.get(name).copied()
    }

    pub fn net(&self, name: &str) -> Result<NetId, NetlistError> {
        self.find_net(name)
            .ok_or_else(|| NetlistError::UnknownNet(name.to_string()))
    }

    pub fn driver(&self, id: NetId) -> Driver {
        self.drivers[id.index()]
    }

    /// Gate indices in a combinational topological order.
    pub fn topo_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn init_state(&self) -> crate::Bits {
        self.flipflops.iter().map(|f| f.init).collect()
    }

    pub fn init_word(&self) -> u64 {
        self.flipflops
            .iter()
            .enumerate()
            .fold(0, |acc, (i, f)| acc | ((f.init as u64) << i))
    }

    pub fn ff_index_of_q(&self, q: NetId) -> Option<usize> {
        match self.driver(q) {
            Driver::FlipFlop(i) => Some(i),
            _ => None,
        }
    }

    /// Indices of tracer flip-flops per the annotations.
    pub fn tracer_ffs(&self) -> Vec<usize> {
        self.annotations
            .tracers
            .iter()
            .filter_map(|&q| self.ff_index_of_q(q))
            .collect()
    }

    pub fn comb_view(&self) -> CombView<'_> {
        CombView::new(self)
    }

    /// Rebuild from a builder seeded with this netlist, for transforms.
    pub fn to_builder(&self) -> NetlistBuilder {
        NetlistBuilder::from_netlist(self)
    }

    /// Net ids in the transitive combinational fan-in of `roots` (stopping at
    /// inputs, keys and flip-flop outputs, which are included).
    pub fn fanin_cone(&self, roots: &[NetId]) -> Vec<bool> {
        let mut seen = vec![false; self.num_nets()];
        let mut stack: Vec<NetId> = roots.to_vec();
        while let Some(n) = stack.pop() {
            if std::mem::replace(&mut seen[n.index()], true) {
                continue;
            }
            if let Driver::Gate(g) = self.driver(n) {
                stack.extend(self.gates[g].inputs.iter().copied());
            }
        }
        seen
    }

    /// Flip-flops whose Q lies in the combinational fan-in of `net`.
    pub fn ff_support(&self, net: NetId) -> Vec<usize> {
        let cone = self.fanin_cone(&[net]);
        self.flipflops
            .iter()
            .enumerate()
            .filter(|(_, f)| cone[f.q.index()])
            .map(|(i, _)| i)
            .collect()
    }

    /// `base`, or `base_N` for the first N that is not taken.
    pub fn fresh_name(&self, base: &str) -> String {
        if self.find_net(base).is_none() {
            return base.to_string();
        }
        (0..)
            .map(|i| format!("{base}_{i}"))
            .find(|n| self.find_net(n).is_none())
            .expect("unbounded")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arity_table() {
        assert!(GateKind::And.arity_ok(2));
        assert!(!GateKind::And.arity_ok(1));
        assert!(GateKind::Mux2.arity_ok(3));
        assert!(GateKind::Const1.arity_ok(0));
        assert!(!GateKind::Not.arity_ok(2));
    }

    #[test]
    fn bench_names_round_trip() {
        for k in [
            GateKind::And,
            GateKind::Nand,
            GateKind::Or,
            GateKind::Nor,
            GateKind::Xor,
            GateKind::Xnor,
            GateKind::Not,
            GateKind::Buf,
            GateKind::Mux2,
            GateKind::Const0,
            GateKind::Const1,
        ] {
            assert_eq!(GateKind::from_bench_name(k.bench_name()), Some(k));
        }
        assert_eq!(GateKind::from_bench_name("buff"), Some(GateKind::Buf));
    }
}
