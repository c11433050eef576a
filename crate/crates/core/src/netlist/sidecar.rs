use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::NetlistError;

/// JSON companion file for a `.bench` netlist:
/// `{ "key_prefix": "keyinput", "ff_init": { "G5": 1 } }`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sidecar {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key_prefix: Option<String>,
    #[serde(default)]
    pub ff_init: BTreeMap<String, u8>,
}

impl Sidecar {
    pub fn from_json(text: &str) -> Result<Sidecar, NetlistError> {
        let sc: Sidecar =
            serde_json::from_str(text).map_err(|e| NetlistError::Sidecar(e.to_string()))?;
        if let Some((name, v)) = sc.ff_init.iter().find(|(_, &v)| v > 1) {
            return Err(NetlistError::Sidecar(format!(
                "init value {v} for '{name}' is not a bit"
            )));
        }
        Ok(sc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{parse_bench_with, BenchOptions};

    #[test]
    fn sidecar_overrides_init_and_prefix() {
        let sc = Sidecar::from_json(r#"{"key_prefix":"k_","ff_init":{"q":1}}"#).unwrap();
        let opts = BenchOptions {
            sidecar: Some(sc),
            ..Default::default()
        };
        let n = parse_bench_with("INPUT(k_0)\nOUTPUT(q)\nq = DFF(d)\nd = XOR(q, k_0)\n", &opts).unwrap();
        assert_eq!(n.num_keys(), 1);
        assert!(n.flipflops()[0].init);
    }

    #[test]
    fn bad_bit_rejected() {
        assert!(Sidecar::from_json(r#"{"ff_init":{"q":2}}"#).is_err());
    }
}
