use std::collections::HashMap;
use std::time::Duration;

use serde::Serialize;

use super::lit::{Lit, Var};
use crate::netlist::NetId;

/// Where a variable came from: a net at a time frame in a circuit copy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Provenance {
    pub net: NetId,
    pub frame: u32,
    pub instance: u32,
}

#[derive(Clone, Debug, Default)]
pub struct CnfFormula {
    pub num_vars: u32,
    pub clauses: Vec<Vec<Lit>>,
    pub provenance: HashMap<Var, Provenance>,
}

impl CnfFormula {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn new_var(&mut self) -> Var {
        let v = Var(self.num_vars);
        self.num_vars += 1;
        v
    }

    pub fn new_var_for(&mut self, p: Provenance) -> Var {
        let v = self.new_var();
        self.provenance.insert(v, p);
        v
    }

    pub fn add_clause(&mut self, lits: &[Lit]) {
        debug_assert!(lits.iter().all(|l| l.var().0 < self.num_vars));
        self.clauses.push(lits.to_vec());
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    /// Independent model check; `assignment[v]` is the value of variable `v`.
    pub fn evaluate(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|c| {
            c.iter()
                .any(|l| assignment.get(l.var().index()).is_some_and(|&v| l.eval(v)))
        })
    }

    pub fn first_falsified(&self, assignment: &[bool]) -> Option<usize> {
        self.clauses.iter().position(|c| {
            !c.iter()
                .any(|l| assignment.get(l.var().index()).is_some_and(|&v| l.eval(v)))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SatStatus {
    Sat,
    Unsat,
    /// Budget exhausted. Callers must not read this as UNSAT.
    Unknown,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SatStats {
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
    #[serde(with = "secs")]
    pub wall: Duration,
}

mod secs {
    use serde::Serializer;
    use std::time::Duration;
    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }
}

#[derive(Clone, Debug)]
pub struct SatOutcome {
    pub status: SatStatus,
    /// Present iff SAT; indexed by variable.
    pub assignment: Option<Vec<bool>>,
    pub stats: SatStats,
}

impl SatOutcome {
    pub fn is_sat(&self) -> bool {
        self.status == SatStatus::Sat
    }

    pub fn value(&self, v: Var) -> Option<bool> {
        self.assignment.as_ref().and_then(|a| a.get(v.index()).copied())
    }
}
