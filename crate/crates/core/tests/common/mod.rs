#![allow(dead_code)]

use dfssd_core::Bits;

pub fn data(name: &str) -> String {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/");
    std::fs::read_to_string(format!("{path}{name}")).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn bits(s: &str) -> Bits {
    s.parse().unwrap()
}

pub fn frames(v: &[&str]) -> Vec<Bits> {
    v.iter().map(|s| bits(s)).collect()
}
