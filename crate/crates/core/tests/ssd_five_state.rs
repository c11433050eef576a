mod common;

use common::{bits, data};
use dfssd_core::fsm::parse_kiss;
use dfssd_core::reach::{certify_unreachable, find_urs_min_hd, reachable_bfs, CertKind, Certificate, UrsSearch};
use dfssd_core::ssd::{apply_ssd_fsm, count_correct_keys, fsm_ssd_result, FsmSsdOptions};

fn output_letter(o: &dfssd_core::Bits) -> char {
    (b'A' + o.to_u64() as u8) as char
}

#[test]
fn original_reachable_states() {
    let f = parse_kiss(&data("five_state.kiss")).unwrap();
    let n = f.to_netlist().unwrap();
    let r = reachable_bfs(&n, None).unwrap();
    assert!(r.complete);
    assert!(r.max_depth() <= 5);
    let got: Vec<String> = r.set.to_bits().iter().map(|b| b.to_string()).collect();
    assert_eq!(got, ["000", "001", "010", "100", "110"]);
}

#[test]
fn min_hd_witness() {
    let n = parse_kiss(&data("five_state.kiss")).unwrap().to_netlist().unwrap();
    match find_urs_min_hd(&n, None).unwrap() {
        UrsSearch::Found(w) => {
            assert_eq!(w.hd, 1);
            assert!(["011", "101", "111"].contains(&w.s_urs.to_string().as_str()));
            assert_eq!(w.s_reach.hamming(&w.s_urs), 1);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn certify_states() {
    let n = parse_kiss(&data("five_state.kiss")).unwrap().to_netlist().unwrap();
    assert_eq!(
        certify_unreachable(&n, &bits("101")).unwrap(),
        Certificate::ProvenUnreachable(CertKind::Fixpoint)
    );
    match certify_unreachable(&n, &bits("100")).unwrap() {
        Certificate::Reachable { states, .. } => {
            let s: Vec<String> = states.iter().map(|b| b.to_string()).collect();
            assert_eq!(s, ["000", "001", "010", "100"]);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn modified_table_rows() {
    let f = parse_kiss(&data("five_state.kiss")).unwrap();
    let opts = FsmSsdOptions { dup_on_zero_from: vec![bits("010")] };
    let (locked, plan) = apply_ssd_fsm(&f, 3, &opts).unwrap();
    let pairs: Vec<(String, String)> = plan.pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
    assert_eq!(
        pairs,
        [("110".into(), "111".into()), ("100".into(), "101".into()), ("010".into(), "011".into())]
    );
    assert_eq!(plan.key_width, 4);

    // Rows: state, next for (I,k) = 00, 10, 01, 11, output. Row 111 copies
    // row 110.
    let table = [
        ("000", ["001", "001", "001", "001"], 'A'),
        ("001", ["010", "010", "011", "011"], 'B'),
        ("010", ["101", "101", "100", "100"], 'C'),
        ("011", ["101", "101", "101", "101"], 'C'),
        ("100", ["110", "110", "111", "111"], 'D'),
        ("101", ["111", "111", "111", "111"], 'D'),
        ("110", ["000", "010", "000", "011"], 'E'),
        ("111", ["000", "011", "000", "011"], 'E'),
    ];
    let kw = locked.num_keys;
    for (state, nexts, out) in table {
        let s = locked.state_by_code(&bits(state)).unwrap();
        for (col, expect) in nexts.iter().enumerate() {
            let i = (col & 1) as u64;
            let k = (col >> 1) as u64;
            let free = i | if k == 1 { ((1u64 << kw) - 1) << 1 } else { 0 };
            let (t, o) = locked.step(s, free);
            assert_eq!(locked.codes[t].to_string(), *expect, "row {state} col {col}");
            assert_eq!(output_letter(&o), out);
        }
    }
}

#[test]
fn sixteen_correct_keys() {
    let f = parse_kiss(&data("five_state.kiss")).unwrap();
    let opts = FsmSsdOptions { dup_on_zero_from: vec![bits("010")] };
    let (locked, plan) = apply_ssd_fsm(&f, 3, &opts).unwrap();
    let r = fsm_ssd_result(&f, &locked, &plan).unwrap();
    let c = count_correct_keys(&r, 20).unwrap();
    assert_eq!(c.count, 16);
    assert!(c.exact);
}
