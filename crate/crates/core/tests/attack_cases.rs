mod common;

use common::{bits, data};
use dfssd_core::attack::{consistent_with_log, run_attack, AttackConfig, Termination, UmcMode};
use dfssd_core::deepfault::{apply_df, DfOptions, TracerConfig};
use dfssd_core::equiv::check_equivalence;
use dfssd_core::fsm::parse_kiss;
use dfssd_core::netlist::parse_bench;
use dfssd_core::sim::Oracle;
use dfssd_core::ssd::{apply_ssd_fsm, count_correct_keys, fsm_ssd_result, FsmSsdOptions};

fn step_one() -> AttackConfig {
    AttackConfig {
        initial_boundary: 1,
        boundary_step: 1,
        ..Default::default()
    }
}

#[test]
fn detector_df_needs_deep_sequence() {
    let n = parse_bench(&data("detector011.bench")).unwrap();
    let opts = DfOptions {
        pattern: Some(bits("1011")),
        ..Default::default()
    };
    let df = apply_df(&n, &TracerConfig::clock(2), &opts).unwrap();
    let mut o = Oracle::new(df.netlist.clone(), df.key.clone()).unwrap();
    let r = run_attack(&df.netlist, &mut o, &step_one()).unwrap();
    assert_eq!(r.termination, Termination::UC);
    assert_eq!(r.key, Some(bits("1011")));
    assert!(consistent_with_log(&df.netlist, &df.key, &r.dis_log));
    let deepest = r.dis_log.iter().map(|d| d.seq.len()).max().unwrap();
    assert!(deepest >= 4, "deepest DIS {deepest}");
    assert!(r.dis_log.iter().all(|d| d.seq.len() <= d.found_at_boundary));
}

#[test]
fn five_state_ssd_ends_with_key_class() {
    let f = parse_kiss(&data("five_state.kiss")).unwrap();
    let opts = FsmSsdOptions {
        dup_on_zero_from: vec![bits("010")],
    };
    let (locked, plan) = apply_ssd_fsm(&f, 3, &opts).unwrap();
    let res = fsm_ssd_result(&f, &locked, &plan).unwrap();
    let key = res.correct_key();
    let mut o = Oracle::new(res.netlist.clone(), key.clone()).unwrap();
    let r = run_attack(&res.netlist, &mut o, &step_one()).unwrap();
    assert!(matches!(r.termination, Termination::UMC | Termination::CE), "{:?}", r.termination);
    let class = r.key_class.as_ref().unwrap();
    assert!(class.complete);
    assert!(class.sample.contains(&key));
    // Every key left over is functionally correct.
    for k in &class.sample {
        assert!(check_equivalence(&res.netlist, &key, &res.netlist, k, 1 << 20).unwrap().is_equivalent());
    }
    let c = count_correct_keys(&res, 20).unwrap();
    assert_eq!(class.count, c.count);
}

#[test]
fn induction_mode_on_df() {
    let n = parse_bench(&data("detector011.bench")).unwrap();
    let df = apply_df(&n, &TracerConfig::clock(2), &DfOptions::default()).unwrap();
    let mut o = Oracle::new(df.netlist.clone(), df.key.clone()).unwrap();
    let cfg = AttackConfig {
        umc_mode: UmcMode::Induction,
        ..step_one()
    };
    let r = run_attack(&df.netlist, &mut o, &cfg).unwrap();
    assert!(r.accepts(&df.key) || r.termination == Termination::Inconclusive);
}
