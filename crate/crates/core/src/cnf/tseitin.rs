//! Tseitin encoding of gates and whole combinational views.
//!
//! Two modes share one gate encoder: plain (one variable per net, every gate
//! gets its defining clauses) and folding (constants propagate and
//! single-input results alias an existing literal instead of allocating).

use super::formula::{CnfFormula, Provenance};
use super::lit::{Lit, Var};
use crate::netlist::{GateKind, NetId, Netlist};

/// A net's value inside a formula: a known constant or a literal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Signal {
    Const(bool),
    Lit(Lit),
}

impl Signal {
    pub fn negate(self) -> Signal {
        match self {
            Signal::Const(b) => Signal::Const(!b),
            Signal::Lit(l) => Signal::Lit(!l),
        }
    }

    pub fn as_lit(self) -> Option<Lit> {
        match self {
            Signal::Lit(l) => Some(l),
            Signal::Const(_) => None,
        }
    }

    /// Value under a full variable assignment.
    pub fn eval(self, assignment: &[bool]) -> bool {
        match self {
            Signal::Const(b) => b,
            Signal::Lit(l) => l.eval(assignment[l.var().index()]),
        }
    }
}

impl From<Lit> for Signal {
    fn from(l: Lit) -> Self {
        Signal::Lit(l)
    }
}

/// Clauses for `out <-> AND(ins)`.
pub fn and_clauses(f: &mut CnfFormula, out: Lit, ins: &[Lit]) {
    for &a in ins {
        f.add_clause(&[!out, a]);
    }
    let mut big: Vec<Lit> = ins.iter().map(|&a| !a).collect();
    big.push(out);
    f.add_clause(&big);
}

/// Clauses for `out <-> a XOR b`.
pub fn xor_clauses(f: &mut CnfFormula, out: Lit, a: Lit, b: Lit) {
    f.add_clause(&[!out, a, b]);
    f.add_clause(&[!out, !a, !b]);
    f.add_clause(&[out, !a, b]);
    f.add_clause(&[out, a, !b]);
}

/// Clauses for `out <-> (s ? d1 : d0)`.
pub fn mux_clauses(f: &mut CnfFormula, out: Lit, s: Lit, d0: Lit, d1: Lit) {
    f.add_clause(&[s, !d0, out]);
    f.add_clause(&[s, d0, !out]);
    f.add_clause(&[!s, !d1, out]);
    f.add_clause(&[!s, d1, !out]);
}

/// Gate encoder. `fresh` allocates the output variable when one is needed;
/// in plain mode it is always called exactly once per gate.
pub struct GateEncoder<'f> {
    pub formula: &'f mut CnfFormula,
    pub fold: bool,
}

impl GateEncoder<'_> {
    fn lits(ins: &[Signal]) -> Vec<Lit> {
        ins.iter()
            .map(|s| match s {
                Signal::Lit(l) => *l,
                Signal::Const(_) => unreachable!("plain mode sees only literals"),
            })
            .collect()
    }

    /// Encode with a caller-chosen output variable (plain mode).
    fn plain(&mut self, kind: GateKind, ins: &[Signal], out: Var) -> Signal {
        let f = &mut *self.formula;
        let y = out.pos();
        let lits = Self::lits(ins);
        match kind {
            GateKind::And => and_clauses(f, y, &lits),
            GateKind::Nand => and_clauses(f, !y, &lits),
            GateKind::Or => {
                let neg: Vec<Lit> = lits.iter().map(|&l| !l).collect();
                and_clauses(f, !y, &neg)
            }
            GateKind::Nor => {
                let neg: Vec<Lit> = lits.iter().map(|&l| !l).collect();
                and_clauses(f, y, &neg)
            }
            GateKind::Xor | GateKind::Xnor => {
                let mut acc = lits[0];
                for (i, &b) in lits[1..].iter().enumerate() {
                    let last = i + 2 == lits.len();
                    let t = if last {
                        if kind == GateKind::Xor {
                            y
                        } else {
                            !y
                        }
                    } else {
                        f.new_var().pos()
                    };
                    xor_clauses(f, t, acc, b);
                    acc = t;
                }
            }
            GateKind::Not => {
                f.add_clause(&[y, lits[0]]);
                f.add_clause(&[!y, !lits[0]]);
            }
            GateKind::Buf => {
                f.add_clause(&[!y, lits[0]]);
                f.add_clause(&[y, !lits[0]]);
            }
            GateKind::Mux2 => mux_clauses(f, y, lits[0], lits[1], lits[2]),
            GateKind::Const0 => f.add_clause(&[!y]),
            GateKind::Const1 => f.add_clause(&[y]),
        }
        Signal::Lit(y)
    }

    /// Encode `kind(ins)`; `fresh` supplies output variables on demand.
    pub fn gate(&mut self, kind: GateKind, ins: &[Signal], fresh: &mut dyn FnMut(&mut CnfFormula) -> Var) -> Signal {
        if !self.fold {
            let ins: Vec<Signal> = ins
                .iter()
                .map(|&s| match s {
                    Signal::Const(b) => {
                        let v = self.formula.new_var();
                        self.formula.add_clause(&[v.lit(b)]);
                        Signal::Lit(v.pos())
                    }
                    lit => lit,
                })
                .collect();
            let v = fresh(self.formula);
            return self.plain(kind, &ins, v);
        }
        match kind {
            GateKind::Const0 => Signal::Const(false),
            GateKind::Const1 => Signal::Const(true),
            GateKind::Buf => ins[0],
            GateKind::Not => ins[0].negate(),
            GateKind::And | GateKind::Nand | GateKind::Or | GateKind::Nor => {
                // OR/NOR via De Morgan on an AND core.
                let inv_in = matches!(kind, GateKind::Or | GateKind::Nor);
                let inv_out = matches!(kind, GateKind::Nand | GateKind::Or);
                let ins: Vec<Signal> = ins.iter().map(|&s| if inv_in { s.negate() } else { s }).collect();
                let s = self.and(&ins, fresh).unwrap_or(Signal::Const(false));
                if inv_out {
                    s.negate()
                } else {
                    s
                }
            }
            GateKind::Xor | GateKind::Xnor => {
                let mut parity = kind == GateKind::Xnor;
                let mut lits: Vec<Lit> = Vec::new();
                for s in ins {
                    match *s {
                        Signal::Const(b) => parity ^= b,
                        Signal::Lit(l) => {
                            // Normalize to positive literals; sign goes to parity.
                            parity ^= l.is_neg();
                            let p = l.var().pos();
                            if let Some(i) = lits.iter().position(|&x| x == p) {
                                lits.remove(i);
                            } else {
                                lits.push(p);
                            }
                        }
                    }
                }
                if lits.is_empty() {
                    return Signal::Const(parity);
                }
                let mut acc = lits[0];
                for &b in &lits[1..] {
                    let t = fresh(self.formula).pos();
                    xor_clauses(self.formula, t, acc, b);
                    acc = t;
                }
                Signal::Lit(if parity { !acc } else { acc })
            }
            GateKind::Mux2 => {
                let (s, d0, d1) = (ins[0], ins[1], ins[2]);
                match s {
                    Signal::Const(false) => d0,
                    Signal::Const(true) => d1,
                    Signal::Lit(sl) => {
                        if d0 == d1 {
                            return d0;
                        }
                        match (d0, d1) {
                            (Signal::Const(false), Signal::Const(true)) => Signal::Lit(sl),
                            (Signal::Const(true), Signal::Const(false)) => Signal::Lit(!sl),
                            (Signal::Const(false), x) => self.gate(GateKind::And, &[s, x], fresh),
                            (x, Signal::Const(false)) => self.gate(GateKind::And, &[s.negate(), x], fresh),
                            (Signal::Const(true), x) => self.gate(GateKind::Or, &[s.negate(), x], fresh),
                            (x, Signal::Const(true)) => self.gate(GateKind::Or, &[s, x], fresh),
                            (Signal::Lit(a), Signal::Lit(b)) => {
                                if a == !b {
                                    // s ? b : !b  ==  XNOR(s, b)
                                    return self.gate(GateKind::Xnor, &[s, d1], fresh);
                                }
                                let y = fresh(self.formula).pos();
                                mux_clauses(self.formula, y, sl, a, b);
                                Signal::Lit(y)
                            }
                        }
                    }
                }
            }
        }
    }

    /// Folding AND; `None` means constant false.
    fn and(&mut self, ins: &[Signal], fresh: &mut dyn FnMut(&mut CnfFormula) -> Var) -> Option<Signal> {
        let mut lits: Vec<Lit> = Vec::new();
        for s in ins {
            match *s {
                Signal::Const(false) => return None,
                Signal::Const(true) => {}
                Signal::Lit(l) => {
                    if lits.contains(&!l) {
                        return None;
                    }
                    if !lits.contains(&l) {
                        lits.push(l);
                    }
                }
            }
        }
        Some(match lits.len() {
            0 => Signal::Const(true),
            1 => Signal::Lit(lits[0]),
            _ => {
                let y = fresh(self.formula).pos();
                and_clauses(self.formula, y, &lits);
                Signal::Lit(y)
            }
        })
    }

    pub fn xor2(&mut self, a: Signal, b: Signal) -> Signal {
        let mut fresh = |f: &mut CnfFormula| f.new_var();
        self.gate(GateKind::Xor, &[a, b], &mut fresh)
    }

    pub fn or(&mut self, ins: &[Signal]) -> Signal {
        let mut fresh = |f: &mut CnfFormula| f.new_var();
        if ins.is_empty() {
            return Signal::Const(false);
        }
        if ins.len() == 1 {
            return ins[0];
        }
        self.gate(GateKind::Or, ins, &mut fresh)
    }

    pub fn and_all(&mut self, ins: &[Signal]) -> Signal {
        let mut fresh = |f: &mut CnfFormula| f.new_var();
        if ins.is_empty() {
            return Signal::Const(true);
        }
        if ins.len() == 1 {
            return ins[0];
        }
        self.gate(GateKind::And, ins, &mut fresh)
    }
}

/// Encode one time frame of `n`. `source` gives the signal of every input,
/// key and flip-flop Q net; the result holds a signal for every net.
pub fn encode_frame(
    f: &mut CnfFormula,
    n: &Netlist,
    fold: bool,
    frame: u32,
    instance: u32,
    source: &dyn Fn(NetId) -> Signal,
) -> Vec<Signal> {
    let mut sig = vec![Signal::Const(false); n.num_nets()];
    for &i in n.inputs().iter().chain(n.key_inputs()) {
        sig[i.index()] = source(i);
    }
    for ff in n.flipflops() {
        sig[ff.q.index()] = source(ff.q);
    }
    let mut enc = GateEncoder { formula: f, fold };
    for &g in n.topo_order() {
        let gate = &n.gates()[g];
        let ins: Vec<Signal> = gate.inputs.iter().map(|x| sig[x.index()]).collect();
        let out = gate.output;
        let mut first = true;
        let mut fresh = |f: &mut CnfFormula| {
            if std::mem::replace(&mut first, false) {
                f.new_var_for(Provenance {
                    net: out,
                    frame,
                    instance,
                })
            } else {
                f.new_var()
            }
        };
        sig[out.index()] = enc.gate(gate.kind, &ins, &mut fresh);
    }
    sig
}

/// Plain encoding of the combinational view: variable `i` is net `i`, frame 0,
/// instance 0. XOR chains with more than two inputs add helper variables.
pub fn tseitin(n: &Netlist) -> CnfFormula {
    let mut f = CnfFormula::new();
    for i in 0..n.num_nets() {
        f.new_var_for(Provenance {
            net: NetId(i as u32),
            frame: 0,
            instance: 0,
        });
    }
    let mut enc = GateEncoder {
        formula: &mut f,
        fold: false,
    };
    for &g in n.topo_order() {
        let gate = &n.gates()[g];
        let ins: Vec<Signal> = gate.inputs.iter().map(|x| Signal::Lit(Var(x.0).pos())).collect();
        let out = Var(gate.output.0);
        enc.plain(gate.kind, &ins, out);
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_bench;

    #[test]
    fn and_gate_three_clauses() {
        let n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)\n").unwrap();
        let f = tseitin(&n);
        assert_eq!(f.num_clauses(), 3);
        assert_eq!(f.num_vars, 3);
    }

    #[test]
    fn const1_is_one_unit() {
        let n = parse_bench("OUTPUT(y)\ny = CONST1()\n").unwrap();
        let f = tseitin(&n);
        assert_eq!(f.clauses, vec![vec![Var(0).pos()]]);
    }

    #[test]
    fn folding_collapses_constants() {
        let mut f = CnfFormula::new();
        let a = f.new_var().pos();
        let mut enc = GateEncoder {
            formula: &mut f,
            fold: true,
        };
        let mut fresh = |f: &mut CnfFormula| f.new_var();
        assert_eq!(
            enc.gate(GateKind::And, &[Signal::Lit(a), Signal::Const(false)], &mut fresh),
            Signal::Const(false)
        );
        assert_eq!(
            enc.gate(GateKind::Xor, &[Signal::Lit(a), Signal::Const(true)], &mut fresh),
            Signal::Lit(!a)
        );
        assert_eq!(
            enc.gate(GateKind::Nor, &[Signal::Lit(a), Signal::Const(false)], &mut fresh),
            Signal::Lit(!a)
        );
        assert_eq!(enc.formula.num_clauses(), 0);
    }
}
