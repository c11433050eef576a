//! State-table FSMs in KISS2 form, and their synthesis to netlists.
//!
//! Input cubes cover the primary inputs followed by any key columns (the
//! non-standard `.k N` directive). State names that are all binary strings of
//! one length are used as encodings directly (character `i` = flip-flop `i`);
//! otherwise states are numbered in order of first appearance.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::netlist::{GateKind, NetId, Netlist, NetlistBuilder, NetlistError};
use crate::Bits;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FsmError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("state {state}: overlapping transitions disagree ({a} vs {b})")]
    Nondeterministic { state: String, a: String, b: String },
    #[error("unknown reset state {0}")]
    UnknownReset(String),
    #[error("no states")]
    Empty,
    #[error(transparent)]
    Netlist(#[from] NetlistError),
}

/// A cube over some columns: `None` is don't-care.
pub type Cube = Vec<Option<bool>>;

pub fn parse_cube(s: &str) -> Option<Cube> {
    s.chars()
        .map(|c| match c {
            '0' => Some(Some(false)),
            '1' => Some(Some(true)),
            '-' | 'x' | 'X' => Some(None),
            _ => None,
        })
        .collect()
}

pub fn cube_string(c: &[Option<bool>]) -> String {
    c.iter()
        .map(|v| match v {
            Some(true) => '1',
            Some(false) => '0',
            None => '-',
        })
        .collect()
}

fn cubes_overlap(a: &[Option<bool>], b: &[Option<bool>]) -> bool {
    a.iter()
        .zip(b)
        .all(|(x, y)| !matches!((x, y), (Some(p), Some(q)) if p != q))
}

pub(crate) fn cube_matches(c: &[Option<bool>], free: u64) -> bool {
    c.iter()
        .enumerate()
        .all(|(i, v)| v.map_or(true, |b| ((free >> i) & 1 == 1) == b))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    /// Over inputs then keys.
    pub input: Cube,
    pub from: usize,
    pub to: usize,
    pub output: Cube,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fsm {
    pub name: String,
    pub num_inputs: usize,
    pub num_keys: usize,
    pub num_outputs: usize,
    pub state_names: Vec<String>,
    pub codes: Vec<Bits>,
    pub reset: usize,
    pub transitions: Vec<Transition>,
}

impl Fsm {
    pub fn width(&self) -> usize {
        self.codes.first().map_or(0, |c| c.width())
    }

    pub fn num_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.state_names.iter().position(|s| s == name)
    }

    pub fn state_by_code(&self, code: &Bits) -> Option<usize> {
        self.codes.iter().position(|c| c == code)
    }

    /// Reject overlapping cubes from one state that disagree.
    pub fn check_deterministic(&self) -> Result<(), FsmError> {
        for (i, a) in self.transitions.iter().enumerate() {
            for b in &self.transitions[i + 1..] {
                if a.from != b.from || !cubes_overlap(&a.input, &b.input) {
                    continue;
                }
                let oa: Vec<bool> = a.output.iter().map(|v| v.unwrap_or(false)).collect();
                let ob: Vec<bool> = b.output.iter().map(|v| v.unwrap_or(false)).collect();
                if a.to != b.to || oa != ob {
                    return Err(FsmError::Nondeterministic {
                        state: self.state_names[a.from].clone(),
                        a: self.describe(a),
                        b: self.describe(b),
                    });
                }
            }
        }
        Ok(())
    }

    fn describe(&self, t: &Transition) -> String {
        format!(
            "{} {} {} {}",
            cube_string(&t.input),
            self.state_names[t.from],
            self.state_names[t.to],
            cube_string(&t.output)
        )
    }

    /// Next state and outputs for a full input+key assignment. Unspecified
    /// combinations hold the state with all outputs 0.
    pub fn step(&self, state: usize, free: u64) -> (usize, Bits) {
        for t in &self.transitions {
            if t.from == state && cube_matches(&t.input, free) {
                return (t.to, t.output.iter().map(|v| v.unwrap_or(false)).collect());
            }
        }
        (state, Bits::zeros(self.num_outputs))
    }

    pub fn to_kiss(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, ".i {}", self.num_inputs);
        if self.num_keys > 0 {
            let _ = writeln!(s, ".k {}", self.num_keys);
        }
        let _ = writeln!(s, ".o {}", self.num_outputs);
        let _ = writeln!(s, ".p {}", self.transitions.len());
        let _ = writeln!(s, ".s {}", self.num_states());
        let _ = writeln!(s, ".r {}", self.state_names[self.reset]);
        for t in &self.transitions {
            let _ = writeln!(s, "{}", self.describe(t));
        }
        s.push_str(".e\n");
        s
    }

    /// Two-level synthesis: one product term per transition, an OR per
    /// next-state and output bit.
    pub fn to_netlist(&self) -> Result<Netlist, FsmError> {
        let w = self.width();
        let mut b = NetlistBuilder::new(self.name.clone());
        let mut cols: Vec<NetId> = (0..self.num_inputs).map(|i| b.input(&format!("x{i}"))).collect();
        cols.extend((0..self.num_keys).map(|i| b.key_input(&format!("keyinput{i}"))));
        let q: Vec<NetId> = (0..w).map(|j| b.net(&format!("s{j}"))).collect();
        let mut neg: HashMap<NetId, NetId> = HashMap::new();
        let mut lit = |b: &mut NetlistBuilder, n: NetId, v: bool| {
            if v {
                n
            } else {
                *neg.entry(n).or_insert_with(|| {
                    let name = format!("{}_n", b.name_of(n));
                    b.add(&name, GateKind::Not, &[n])
                })
            }
        };
        let st_eq: Vec<NetId> = self
            .codes
            .iter()
            .enumerate()
            .map(|(s, code)| {
                let ins: Vec<NetId> = (0..w).map(|j| lit(&mut b, q[j], code[j])).collect();
                b.add_nary(&format!("st{s}"), GateKind::And, &ins)
            })
            .collect();
        let mut next_terms: Vec<Vec<NetId>> = vec![Vec::new(); w];
        let mut out_terms: Vec<Vec<NetId>> = vec![Vec::new(); self.num_outputs];
        let mut per_state: Vec<Vec<NetId>> = vec![Vec::new(); self.num_states()];
        for (ti, t) in self.transitions.iter().enumerate() {
            let mut ins = vec![st_eq[t.from]];
            for (c, v) in t.input.iter().enumerate() {
                if let Some(v) = v {
                    ins.push(lit(&mut b, cols[c], *v));
                }
            }
            let term = b.add_nary(&format!("t{ti}"), GateKind::And, &ins);
            per_state[t.from].push(term);
            for j in 0..w {
                if self.codes[t.to][j] {
                    next_terms[j].push(term);
                }
            }
            for (j, v) in t.output.iter().enumerate() {
                if *v == Some(true) {
                    out_terms[j].push(term);
                }
            }
        }
        let free = self.num_inputs + self.num_keys;
        for s in 0..self.num_states() {
            if self.codes[s].iter().all(|v| !v) || self.fully_specified(s, free) {
                continue;
            }
            let any = b.add_nary(&format!("cov{s}"), GateKind::Or, &per_state[s]);
            let none = b.add(&format!("cov{s}_n"), GateKind::Not, &[any]);
            let hold = b.add_nary(&format!("hold{s}"), GateKind::And, &[st_eq[s], none]);
            for j in 0..w {
                if self.codes[s][j] {
                    next_terms[j].push(hold);
                }
            }
        }
        let reset = &self.codes[self.reset];
        for j in 0..w {
            let d = b.add_nary(&format!("s{j}_next"), GateKind::Or, &next_terms[j]);
            b.dff(q[j], d, reset[j]);
        }
        for (j, terms) in out_terms.iter().enumerate() {
            let y = b.net(&format!("y{j}"));
            match terms.as_slice() {
                [] => b.gate(GateKind::Const0, y, &[]),
                [t] => b.gate(GateKind::Buf, y, &[*t]),
                ts => b.gate(GateKind::Or, y, ts),
            };
            b.output(y);
        }
        Ok(b.build()?)
    }

    fn fully_specified(&self, s: usize, free: usize) -> bool {
        let cubes: Vec<&Cube> = self
            .transitions
            .iter()
            .filter(|t| t.from == s)
            .map(|t| &t.input)
            .collect();
        if cubes.iter().any(|c| c.iter().all(|v| v.is_none())) {
            return true;
        }
        if free > 20 {
            return false;
        }
        (0..1u64 << free).all(|x| cubes.iter().any(|c| cube_matches(c, x)))
    }
}

pub fn parse_kiss(text: &str) -> Result<Fsm, FsmError> {
    let mut num_inputs = None;
    let mut num_outputs = None;
    let mut num_keys = 0;
    let mut reset_name = None;
    let mut rows: Vec<(usize, Cube, String, String, Cube)> = Vec::new();
    let syntax = |line: usize, msg: &str| FsmError::Syntax {
        line,
        msg: msg.to_string(),
    };
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if let Some(dir) = toks[0].strip_prefix('.') {
            let arg = toks.get(1).copied();
            let count = || -> Result<usize, FsmError> {
                arg.and_then(|a| a.parse().ok())
                    .ok_or_else(|| syntax(line_no, &format!("directive .{dir} needs a count")))
            };
            match dir {
                "i" => num_inputs = Some(count()?),
                "o" => num_outputs = Some(count()?),
                "k" => num_keys = count()?,
                "p" | "s" => {
                    count()?;
                }
                "r" => reset_name = Some(arg.ok_or_else(|| syntax(line_no, ".r needs a state"))?.to_string()),
                "e" | "end" => break,
                "ilb" | "ob" | "start_kiss" | "end_kiss" | "model" => {}
                _ => return Err(syntax(line_no, &format!("unknown directive .{dir}"))),
            }
            continue;
        }
        if toks.len() != 4 {
            return Err(syntax(line_no, "expected: input current next output"));
        }
        let ni = num_inputs.ok_or_else(|| syntax(line_no, ".i must precede transitions"))?;
        let no = num_outputs.ok_or_else(|| syntax(line_no, ".o must precede transitions"))?;
        let input = parse_cube(toks[0]).ok_or_else(|| syntax(line_no, "bad input cube"))?;
        let output = parse_cube(toks[3]).ok_or_else(|| syntax(line_no, "bad output cube"))?;
        if input.len() != ni + num_keys {
            return Err(syntax(
                line_no,
                &format!("input cube has {} columns, expected {}", input.len(), ni + num_keys),
            ));
        }
        if output.len() != no {
            return Err(syntax(
                line_no,
                &format!("output cube has {} columns, expected {no}", output.len()),
            ));
        }
        rows.push((line_no, input, toks[1].to_string(), toks[2].to_string(), output));
    }
    let mut names: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut intern = |s: &str| -> usize {
        if let Some(&i) = index.get(s) {
            return i;
        }
        names.push(s.to_string());
        index.insert(s.to_string(), names.len() - 1);
        names.len() - 1
    };
    if let Some(r) = &reset_name {
        intern(r);
    }
    let transitions: Vec<Transition> = rows
        .into_iter()
        .map(|(_, input, from, to, output)| Transition {
            input,
            from: intern(&from),
            to: intern(&to),
            output,
        })
        .collect();
    if names.is_empty() {
        return Err(FsmError::Empty);
    }
    let reset = match &reset_name {
        Some(r) => names.iter().position(|n| n == r).ok_or_else(|| FsmError::UnknownReset(r.clone()))?,
        None => transitions.first().map_or(0, |t| t.from),
    };
    let binary = {
        let l = names[0].len();
        l > 0 && names.iter().all(|n| n.len() == l && n.chars().all(|c| c == '0' || c == '1'))
    };
    let codes = if binary {
        names.iter().map(|n| n.parse::<Bits>().unwrap()).collect()
    } else {
        let w = usize::max(1, (names.len() as f64).log2().ceil() as usize);
        (0..names.len()).map(|i| Bits::from_u64(i as u64, w)).collect()
    };
    let fsm = Fsm {
        name: "fsm".into(),
        num_inputs: num_inputs.unwrap_or(0),
        num_keys,
        num_outputs: num_outputs.unwrap_or(0),
        state_names: names,
        codes,
        reset,
        transitions,
    };
    fsm.check_deterministic()?;
    Ok(fsm)
}

/// Fully specified random FSM: `num_states` distinct random codes of `width`
/// bits (state 0 is reset), one transition per state and input minterm.
pub fn random_fsm<R: Rng>(rng: &mut R, num_states: usize, width: usize, num_inputs: usize, num_outputs: usize) -> Fsm {
    assert!(width <= 20 && num_states <= 1 << width && num_states > 0);
    let mut pool: Vec<u64> = (0..1u64 << width).collect();
    pool.shuffle(rng);
    pool.truncate(num_states);
    let codes: Vec<Bits> = pool.iter().map(|&c| Bits::from_u64(c, width)).collect();
    let mut transitions = Vec::new();
    for from in 0..num_states {
        for x in 0..1u64 << num_inputs {
            transitions.push(Transition {
                input: (0..num_inputs).map(|i| Some((x >> i) & 1 == 1)).collect(),
                from,
                to: rng.gen_range(0..num_states),
                output: (0..num_outputs).map(|_| Some(rng.gen_bool(0.5))).collect(),
            });
        }
    }
    Fsm {
        name: "random".into(),
        num_inputs,
        num_keys: 0,
        num_outputs,
        state_names: codes.iter().map(|c| c.to_string()).collect(),
        codes,
        reset: 0,
        transitions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::simulate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const SMALL: &str = ".i 1\n.o 1\n.r a\n0 a a 0\n1 a b 0\n- b a 1\n.e\n";

    #[test]
    fn parse_symbolic_names() {
        let f = parse_kiss(SMALL).unwrap();
        assert_eq!(f.state_names, vec!["a", "b"]);
        assert_eq!(f.width(), 1);
        assert_eq!(f.transitions.len(), 3);
        let again = parse_kiss(&f.to_kiss()).unwrap();
        assert_eq!(again, f);
    }

    #[test]
    fn reject_nondeterminism() {
        let e = parse_kiss(".i 1\n.o 1\n0 a a 0\n- a b 0\n").unwrap_err();
        assert!(matches!(e, FsmError::Nondeterministic { .. }));
    }

    #[test]
    fn reject_bad_width() {
        let e = parse_kiss(".i 2\n.o 1\n0 a a 0\n").unwrap_err();
        assert!(matches!(e, FsmError::Syntax { line: 3, .. }));
    }

    #[test]
    fn unspecified_inputs_hold() {
        let f = parse_kiss(".i 1\n.o 1\n.r 01\n1 01 10 1\n- 10 01 0\n").unwrap();
        let n = f.to_netlist().unwrap();
        let seq: Vec<Bits> = ["0", "1", "0", "0"].iter().map(|s| s.parse().unwrap()).collect();
        let out = simulate(&n, &Bits::zeros(0), &seq).unwrap();
        assert_eq!(out.iter().map(|b| b.to_string()).collect::<Vec<_>>(), ["0", "1", "0", "0"]);
    }

    #[test]
    fn synthesis_matches_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let f = random_fsm(&mut rng, 6, 4, 2, 2);
            let n = f.to_netlist().unwrap();
            let seq: Vec<Bits> = (0..30).map(|_| Bits::from_u64(rng.gen_range(0..4), 2)).collect();
            let got = simulate(&n, &Bits::zeros(0), &seq).unwrap();
            let mut s = f.reset;
            for (x, y) in seq.iter().zip(&got) {
                let (t, o) = f.step(s, x.to_u64());
                assert_eq!(&o, y);
                s = t;
            }
        }
    }
}
