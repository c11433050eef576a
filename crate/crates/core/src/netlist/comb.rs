//! Combinational view: flip-flop Q nets act as pseudo-inputs and D nets as
//! pseudo-outputs. Evaluation is word-parallel, one lane per bit of a `u64`.

use super::{Driver, GateKind, NetId, Netlist};
use crate::Bits;

#[derive(Clone, Copy, Debug)]
struct Op {
    kind: GateKind,
    out: u32,
    start: u32,
    len: u32,
}

#[derive(Clone, Debug)]
pub struct CombView<'a> {
    netlist: &'a Netlist,
    ops: Vec<Op>,
    args: Vec<u32>,
}

#[inline]
pub fn eval_gate_word(kind: GateKind, ins: impl Iterator<Item = u64>) -> u64 {
    let mut ins = ins;
    match kind {
        GateKind::And => ins.fold(!0, |a, b| a & b),
        GateKind::Nand => !ins.fold(!0, |a, b| a & b),
        GateKind::Or => ins.fold(0, |a, b| a | b),
        GateKind::Nor => !ins.fold(0, |a, b| a | b),
        GateKind::Xor => ins.fold(0, |a, b| a ^ b),
        GateKind::Xnor => !ins.fold(0, |a, b| a ^ b),
        GateKind::Not => !ins.next().unwrap_or(0),
        GateKind::Buf => ins.next().unwrap_or(0),
        GateKind::Mux2 => {
            let s = ins.next().unwrap_or(0);
            let d0 = ins.next().unwrap_or(0);
            let d1 = ins.next().unwrap_or(0);
            (!s & d0) | (s & d1)
        }
        GateKind::Const0 => 0,
        GateKind::Const1 => !0,
    }
}

impl<'a> CombView<'a> {
    pub fn new(netlist: &'a Netlist) -> Self {
        let mut ops = Vec::with_capacity(netlist.gates.len());
        let mut args = Vec::new();
        for &g in &netlist.topo {
            let gate = &netlist.gates[g];
            ops.push(Op {
                kind: gate.kind,
                out: gate.output.0,
                start: args.len() as u32,
                len: gate.inputs.len() as u32,
            });
            args.extend(gate.inputs.iter().map(|n| n.0));
        }
        CombView { netlist, ops, args }
    }

    pub fn netlist(&self) -> &'a Netlist {
        self.netlist
    }

    pub fn pseudo_inputs(&self) -> Vec<NetId> {
        self.netlist.flipflops.iter().map(|f| f.q).collect()
    }

    pub fn pseudo_outputs(&self) -> Vec<NetId> {
        self.netlist.flipflops.iter().map(|f| f.d).collect()
    }

    /// Gates in evaluation order.
    pub fn topo_gates(&self) -> impl Iterator<Item = &'a super::Gate> + '_ {
        self.netlist.topo.iter().map(|&g| &self.netlist.gates[g])
    }

    pub fn is_sequential(&self) -> bool {
        !self.netlist.flipflops.is_empty()
    }

    /// Fill `values` (one word per net) from input, key and state words.
    pub fn eval_words(&self, inputs: &[u64], keys: &[u64], state: &[u64], values: &mut Vec<u64>) {
        let n = self.netlist;
        values.clear();
        values.resize(n.num_nets(), 0);
        for (&id, &w) in n.inputs.iter().zip(inputs) {
            values[id.index()] = w;
        }
        for (&id, &w) in n.key_inputs.iter().zip(keys) {
            values[id.index()] = w;
        }
        for (f, &w) in n.flipflops.iter().zip(state) {
            values[f.q.index()] = w;
        }
        for op in &self.ops {
            let a = &self.args[op.start as usize..(op.start + op.len) as usize];
            let v = eval_gate_word(op.kind, a.iter().map(|&i| values[i as usize]));
            values[op.out as usize] = v;
        }
    }

    /// One-lane evaluation returning `(outputs, next_state)`.
    pub fn eval(&self, inputs: &Bits, keys: &Bits, state: &Bits) -> (Bits, Bits) {
        let spread = |b: &Bits| b.iter().map(|x| if x { !0u64 } else { 0 }).collect::<Vec<_>>();
        let mut values = Vec::new();
        self.eval_words(&spread(inputs), &spread(keys), &spread(state), &mut values);
        let n = self.netlist;
        let outs = n.outputs.iter().map(|o| values[o.index()] & 1 == 1).collect();
        let next = n.flipflops.iter().map(|f| values[f.d.index()] & 1 == 1).collect();
        (outs, next)
    }

    /// Whether `net` is a primary input, key input or flip-flop output.
    pub fn is_source(&self, net: NetId) -> bool {
        !matches!(self.netlist.driver(net), Driver::Gate(_))
    }
}

#[cfg(test)]
mod tests {
    use crate::netlist::parse_bench;

    #[test]
    fn zero_ff_view_is_plain_circuit() {
        let n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = NAND(a, b)\n").unwrap();
        let v = n.comb_view();
        assert!(v.pseudo_inputs().is_empty());
        let mut vals = Vec::new();
        v.eval_words(&[0b1100, 0b1010], &[], &[], &mut vals);
        assert_eq!(vals[n.outputs()[0].index()] & 0xf, 0b0111);
    }

    #[test]
    fn mux_select_high_picks_d1() {
        let n = parse_bench("INPUT(s)\nINPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = MUX(s, a, b)\n").unwrap();
        let v = n.comb_view();
        let mut vals = Vec::new();
        v.eval_words(&[0b1111_0000, 0b1100_1100, 0b1010_1010], &[], &[], &mut vals);
        assert_eq!(vals[n.outputs()[0].index()] & 0xff, 0b1010_1100);
    }
}
