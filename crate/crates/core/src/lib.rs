//! Sequential logic locking toolkit: shallow state duality, deep faults, and
//! the unbounded sequential SAT attack they are meant to resist.
//!
//! Layout follows the data flow: [`netlist`] and [`sim`] are the circuit
//! substrate, [`cnf`] is the SAT engine, [`reach`] and [`equiv`] are the
//! explicit-state analyses, [`ssd`] and [`deepfault`] are the two transforms,
//! and [`attack`] drives the oracle-guided key search.

pub mod attack;
pub mod bits;
pub mod cnf;
pub mod deepfault;
pub mod equiv;
pub mod explore;
pub mod fsm;
pub mod harness;
pub mod netlist;
pub mod reach;
pub mod scc;
pub mod sim;
pub mod ssd;

pub use bits::Bits;
pub use netlist::{parse_bench, serialize_bench, GateKind, NetId, Netlist, NetlistBuilder};
