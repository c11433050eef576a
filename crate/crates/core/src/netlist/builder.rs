use std::collections::{HashMap, VecDeque};

use super::{Annotations, Driver, FlipFlop, Gate, GateKind, NetId, Netlist, NetlistError};

#[derive(Clone, Copy, Debug)]
enum Def {
    Input,
    Key,
    Ff { d: NetId, init: bool },
    Gate(usize),
}

/// Incremental netlist construction. Net ids are handed out on first mention
/// of a name; `build` validates the result.
#[derive(Clone, Debug, Default)]
pub struct NetlistBuilder {
    name: String,
    names: Vec<String>,
    index: HashMap<String, NetId>,
    defs: Vec<Option<(Def, usize)>>,
    gates: Vec<Gate>,
    outputs: Vec<NetId>,
    annotations: Annotations,
    errors: Vec<NetlistError>,
}

impl NetlistBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        NetlistBuilder {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn from_netlist(n: &Netlist) -> Self {
        let mut b = NetlistBuilder::new(n.name.clone());
        for name in &n.net_names {
            b.net(name);
        }
        for (id, drv) in n.drivers.iter().enumerate() {
            let id = NetId(id as u32);
            match *drv {
                Driver::Input(_) => b.define(id, Def::Input, 0),
                Driver::Key(_) => b.define(id, Def::Key, 0),
                Driver::FlipFlop(i) => {
                    let f = n.flipflops[i];
                    b.define(id, Def::Ff { d: f.d, init: f.init }, 0)
                }
                Driver::Gate(g) => {
                    let gate = &n.gates[g];
                    b.gate(gate.kind, id, &gate.inputs);
                }
            }
        }
        b.outputs = n.outputs.clone();
        b.annotations = n.annotations.clone();
        b
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    /// Id for `name`, created if new.
    pub fn net(&mut self, name: &str) -> NetId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = NetId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        self.defs.push(None);
        id
    }

    pub fn lookup(&self, name: &str) -> Option<NetId> {
        self.index.get(name).copied()
    }

    pub fn name_of(&self, id: NetId) -> &str {
        &self.names[id.index()]
    }

    pub fn is_defined(&self, id: NetId) -> bool {
        self.defs[id.index()].is_some()
    }

    /// A new net whose name starts with `base` and is not yet used.
    pub fn fresh(&mut self, base: &str) -> NetId {
        if !self.index.contains_key(base) {
            return self.net(base);
        }
        let mut i = 0usize;
        loop {
            let cand = format!("{base}_{i}");
            if !self.index.contains_key(&cand) {
                return self.net(&cand);
            }
            i += 1;
        }
    }

    fn define(&mut self, id: NetId, def: Def, line: usize) {
        let slot = &mut self.defs[id.index()];
        if slot.is_some() {
            self.errors.push(NetlistError::MultiDriver {
                net: self.names[id.index()].clone(),
                line,
            });
        } else {
            *slot = Some((def, line));
        }
    }

    pub fn input(&mut self, name: &str) -> NetId {
        let id = self.net(name);
        self.define(id, Def::Input, 0);
        id
    }

    pub fn key_input(&mut self, name: &str) -> NetId {
        let id = self.net(name);
        self.define(id, Def::Key, 0);
        id
    }

    pub fn output(&mut self, id: NetId) {
        self.outputs.push(id);
    }

    pub fn set_outputs(&mut self, outs: Vec<NetId>) {
        self.outputs = outs;
    }

    pub fn outputs(&self) -> &[NetId] {
        &self.outputs
    }

    pub fn dff(&mut self, q: NetId, d: NetId, init: bool) {
        self.define(q, Def::Ff { d, init }, 0);
    }

    /// Change the D net of the flip-flop whose output is `q`.
    pub fn retarget_dff(&mut self, q: NetId, new_d: NetId) -> bool {
        match self.defs[q.index()].as_mut() {
            Some((Def::Ff { d, .. }, _)) => {
                *d = new_d;
                true
            }
            _ => false,
        }
    }

    pub fn set_init(&mut self, q: NetId, value: bool) -> bool {
        match self.defs[q.index()].as_mut() {
            Some((Def::Ff { init, .. }, _)) => {
                *init = value;
                true
            }
            _ => false,
        }
    }

    pub fn gate(&mut self, kind: GateKind, out: NetId, inputs: &[NetId]) -> NetId {
        self.gate_at(kind, out, inputs, 0);
        out
    }

    pub(crate) fn gate_at(&mut self, kind: GateKind, out: NetId, inputs: &[NetId], line: usize) {
        if !kind.arity_ok(inputs.len()) {
            self.errors.push(NetlistError::Arity {
                kind,
                net: self.names[out.index()].clone(),
                got: inputs.len(),
                expected: kind.arity_text(),
                line,
            });
            return;
        }
        let idx = self.gates.len();
        self.gates.push(Gate {
            kind,
            inputs: inputs.to_vec(),
            output: out,
        });
        self.define(out, Def::Gate(idx), line);
    }

    pub(crate) fn input_at(&mut self, id: NetId, key: bool, line: usize) {
        self.define(id, if key { Def::Key } else { Def::Input }, line);
    }

    pub(crate) fn dff_at(&mut self, q: NetId, d: NetId, line: usize) {
        self.define(q, Def::Ff { d, init: false }, line);
    }

    /// Fresh gate net named after `base`.
    pub fn add(&mut self, base: &str, kind: GateKind, inputs: &[NetId]) -> NetId {
        let out = self.fresh(base);
        self.gate(kind, out, inputs)
    }

    /// AND/OR-family gate over any number of inputs: constants for none, the
    /// input itself (or its complement for NAND/NOR) for one.
    pub fn add_nary(&mut self, base: &str, kind: GateKind, inputs: &[NetId]) -> NetId {
        let (unit, inverted) = match kind {
            GateKind::And => (GateKind::Const1, false),
            GateKind::Nand => (GateKind::Const0, true),
            GateKind::Or | GateKind::Xor => (GateKind::Const0, false),
            GateKind::Nor | GateKind::Xnor => (GateKind::Const1, true),
            _ => return self.add(base, kind, inputs),
        };
        match inputs {
            [] => self.add(base, unit, &[]),
            [x] if inverted => self.add(base, GateKind::Not, &[*x]),
            [x] => *x,
            _ => self.add(base, kind, inputs),
        }
    }

    /// Replace the inputs of the gate driving `out`.
    pub fn rewire_gate(&mut self, out: NetId, kind: GateKind, inputs: &[NetId]) -> bool {
        match self.defs[out.index()] {
            Some((Def::Gate(g), _)) => {
                self.gates[g].kind = kind;
                self.gates[g].inputs = inputs.to_vec();
                true
            }
            _ => false,
        }
    }

    /// D net of the flip-flop whose output is `q`.
    pub fn dff_d(&self, q: NetId) -> Option<NetId> {
        match self.defs.get(q.index()).copied().flatten() {
            Some((Def::Ff { d, .. }, _)) => Some(d),
            _ => None,
        }
    }

    /// Point every reader of `old` (gate inputs, D pins, outputs) at `new`,
    /// except the gates driving the nets in `keep`.
    pub fn replace_uses(&mut self, old: NetId, new: NetId, keep: &[NetId]) {
        for g in &mut self.gates {
            if keep.contains(&g.output) {
                continue;
            }
            for i in &mut g.inputs {
                if *i == old {
                    *i = new;
                }
            }
        }
        for (def, _) in self.defs.iter_mut().flatten() {
            if let Def::Ff { d, .. } = def {
                if *d == old {
                    *d = new;
                }
            }
        }
        for o in &mut self.outputs {
            if *o == old {
                *o = new;
            }
        }
    }

    pub fn gate_of(&self, out: NetId) -> Option<&Gate> {
        match self.defs[out.index()] {
            Some((Def::Gate(g), _)) => Some(&self.gates[g]),
            _ => None,
        }
    }

    pub fn annotations_mut(&mut self) -> &mut Annotations {
        &mut self.annotations
    }

    pub fn build(self) -> Result<Netlist, NetlistError> {
        if let Some(e) = self.errors.into_iter().next() {
            return Err(e);
        }
        let n = self.names.len();
        let mut inputs = Vec::new();
        let mut keys = Vec::new();
        let mut ffs = Vec::new();
        let mut gate_order = Vec::new();
        for (i, def) in self.defs.iter().enumerate() {
            let id = NetId(i as u32);
            match def {
                None => return Err(NetlistError::Undriven(self.names[i].clone())),
                Some((Def::Input, _)) => inputs.push(id),
                Some((Def::Key, _)) => keys.push(id),
                Some((Def::Ff { d, init }, _)) => ffs.push(FlipFlop {
                    q: id,
                    d: *d,
                    init: *init,
                }),
                Some((Def::Gate(g), _)) => gate_order.push(*g),
            }
        }
        let mut drivers = vec![Driver::Gate(0); n];
        for (i, &id) in inputs.iter().enumerate() {
            drivers[id.index()] = Driver::Input(i);
        }
        for (i, &id) in keys.iter().enumerate() {
            drivers[id.index()] = Driver::Key(i);
        }
        for (i, f) in ffs.iter().enumerate() {
            drivers[f.q.index()] = Driver::FlipFlop(i);
        }
        let mut gates = Vec::with_capacity(gate_order.len());
        for (i, &g) in gate_order.iter().enumerate() {
            let gate = self.gates[g].clone();
            drivers[gate.output.index()] = Driver::Gate(i);
            gates.push(gate);
        }

        let topo = topo_sort(&gates, &drivers, &self.names)?;
        let mut annotations = self.annotations;
        annotations.tracers.sort();
        annotations.tracers.dedup();

        Ok(Netlist {
            name: self.name,
            net_names: self.names,
            name_index: self.index,
            inputs,
            outputs: self.outputs,
            key_inputs: keys,
            flipflops: ffs,
            gates,
            drivers,
            topo,
            annotations,
        })
    }
}

/// Kahn's algorithm over gate-to-gate edges. Ties resolve by gate index so
/// the order is deterministic.
fn topo_sort(gates: &[Gate], drivers: &[Driver], names: &[String]) -> Result<Vec<usize>, NetlistError> {
    let mut indeg = vec![0usize; gates.len()];
    let mut fanout: Vec<Vec<usize>> = vec![Vec::new(); gates.len()];
    for (i, g) in gates.iter().enumerate() {
        for inp in &g.inputs {
            if let Driver::Gate(src) = drivers[inp.index()] {
                indeg[i] += 1;
                fanout[src].push(i);
            }
        }
    }
    let mut queue: VecDeque<usize> = (0..gates.len()).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(gates.len());
    while let Some(g) = queue.pop_front() {
        order.push(g);
        for &h in &fanout[g] {
            indeg[h] -= 1;
            if indeg[h] == 0 {
                queue.push_back(h);
            }
        }
    }
    if order.len() != gates.len() {
        let stuck = (0..gates.len()).find(|&i| indeg[i] > 0).unwrap();
        return Err(NetlistError::CombCycle {
            net: names[gates[stuck].output.index()].clone(),
        });
    }
    Ok(order)
}
