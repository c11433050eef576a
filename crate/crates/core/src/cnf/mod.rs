//! CNF encoding, time-frame unrolling and the SAT engine.

mod dimacs;
mod formula;
mod lit;
mod solver;
mod tseitin;
mod unroll;

pub use dimacs::{parse_dimacs, to_dimacs};
pub use formula::{CnfFormula, Provenance, SatOutcome, SatStats, SatStatus};
pub use lit::{Lit, Var};
pub use solver::{Budget, Solver};
pub use tseitin::{and_clauses, encode_frame, mux_clauses, tseitin, xor_clauses, GateEncoder, Signal};
pub use unroll::{unroll, unroll_with, UnrollOptions, UnrolledModel, SHARED};

use std::time::Instant;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CnfError {
    #[error("difference assertion already added")]
    DifferenceAlreadyAsserted,
    #[error("operation needs exactly 2 instances, model has {0}")]
    NeedTwoInstances(usize),
    #[error("{what} width mismatch: expected {expected}, found {found}")]
    Width {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("DIMACS line {0}: {1}")]
    Dimacs(usize, String),
}

/// One-shot solve of `f` under `assumptions`.
pub fn solve(f: &CnfFormula, assumptions: &[Lit], budget: &Budget) -> SatOutcome {
    let mut s = IncrementalSolver::new();
    s.solve(f, assumptions, budget)
}

/// A [`Solver`] kept in sync with a growing [`CnfFormula`].
#[derive(Default)]
pub struct IncrementalSolver {
    solver: Solver,
    synced: usize,
}

impl IncrementalSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sync(&mut self, f: &CnfFormula) {
        self.solver.ensure_vars(f.num_vars as usize);
        for c in &f.clauses[self.synced..] {
            self.solver.add_clause(c);
        }
        self.synced = f.clauses.len();
    }

    pub fn solver(&self) -> &Solver {
        &self.solver
    }

    pub fn solve(&mut self, f: &CnfFormula, assumptions: &[Lit], budget: &Budget) -> SatOutcome {
        self.sync(f);
        let before = self.solver.stats().clone();
        let start = Instant::now();
        let status = self.solver.solve_limited(assumptions, budget);
        let after = self.solver.stats();
        let stats = SatStats {
            conflicts: after.conflicts - before.conflicts,
            decisions: after.decisions - before.decisions,
            propagations: after.propagations - before.propagations,
            restarts: after.restarts - before.restarts,
            wall: start.elapsed(),
        };
        let assignment = (status == SatStatus::Sat).then(|| {
            let mut m = self.solver.model().to_vec();
            m.resize(f.num_vars as usize, false);
            m
        });
        if let Some(m) = &assignment {
            debug_assert!(
                f.first_falsified(m).is_none(),
                "solver model violates clause {:?}",
                f.first_falsified(m)
            );
            debug_assert!(assumptions.iter().all(|l| l.eval(m[l.var().index()])));
        }
        SatOutcome {
            status,
            assignment,
            stats,
        }
    }

    pub fn failed_assumptions(&self) -> &[Lit] {
        self.solver.failed_assumptions()
    }
}
