//! Property tests over randomly generated circuits. Every expected value is
//! recomputed here by a naive reference (single-step simulation, brute-force
//! search) rather than read back from the engines under test.

mod common;

use std::collections::{HashSet, VecDeque};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dfssd_core::attack::{consistent_with_log, run_attack, AttackConfig, Termination};
use dfssd_core::cnf::{solve, unroll, Budget, CnfFormula, Lit, Signal, Var};
use dfssd_core::deepfault::{apply_df, DfOptions, TracerConfig};
use dfssd_core::fsm::random_fsm;
use dfssd_core::harness::{obfuscate, Circuit, Scheme};
use dfssd_core::netlist::WriteOptions;
use dfssd_core::reach::{certify_unreachable, find_urs_min_hd, reachable_bfs, Certificate, UrsSearch};
use dfssd_core::sim::{simulate, simulate_trace, step, Oracle};
use dfssd_core::ssd::apply_ssd;
use dfssd_core::{parse_bench, serialize_bench, Bits, Netlist};

fn rfsm(seed: u64, width: usize, states: usize, ins: usize, outs: usize) -> Netlist {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = states.clamp(1, 1 << width);
    random_fsm(&mut rng, states, width, ins, outs).to_netlist().unwrap()
}

fn small_circuit() -> impl Strategy<Value = Netlist> {
    (any::<u64>(), 2usize..=4, 2usize..=14, 1usize..=2, 1usize..=2)
        .prop_map(|(seed, w, s, i, o)| rfsm(seed, w, s, i, o))
}

fn random_seq(rng: &mut ChaCha8Rng, width: usize, len: usize) -> Vec<Bits> {
    (0..len).map(|_| (0..width).map(|_| rng.gen_bool(0.5)).collect()).collect()
}

fn random_key(rng: &mut ChaCha8Rng, width: usize) -> Bits {
    (0..width).map(|_| rng.gen_bool(0.5)).collect()
}

/// Reference BFS using one simulator step at a time; keys are free.
/// Returns (reachable set, depth of the deepest first visit).
fn brute_reach(n: &Netlist) -> (HashSet<Bits>, usize) {
    let free = n.num_inputs() + n.num_keys();
    let init = n.init_state();
    let mut seen = HashSet::from([init.clone()]);
    let mut q = VecDeque::from([(init, 0usize)]);
    let mut deepest = 0;
    while let Some((s, d)) = q.pop_front() {
        deepest = deepest.max(d);
        for v in 0..1u64 << free {
            let x = Bits::from_u64(v & ((1 << n.num_inputs()) - 1), n.num_inputs());
            let k = Bits::from_u64(v >> n.num_inputs(), n.num_keys());
            let (_, nx) = step(n, &k, &s, &x).unwrap();
            if seen.insert(nx.clone()) {
                q.push_back((nx, d + 1));
            }
        }
    }
    (seen, deepest)
}

fn all_states(w: usize) -> impl Iterator<Item = Bits> {
    (0..1u64 << w).map(move |v| Bits::from_u64(v, w))
}

fn lit_value(a: &[bool], s: Signal) -> bool {
    match s {
        Signal::Const(b) => b,
        Signal::Lit(l) => l.eval(a[l.var().index()]),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(48) })]

    #[test]
    fn bench_round_trip_is_stable(n in small_circuit()) {
        let text = serialize_bench(&n, WriteOptions::default());
        let again = parse_bench(&text).unwrap();
        // The header comment carries the circuit name, which .bench does not store.
        let body = |t: &str| t.lines().skip(1).collect::<Vec<_>>().join("\n");
        prop_assert_eq!(body(&serialize_bench(&again, WriteOptions::default())), body(&text));
        prop_assert_eq!(again.num_ffs(), n.num_ffs());
        prop_assert_eq!(again.num_inputs(), n.num_inputs());
    }

    #[test]
    fn stepping_matches_simulate(n in small_circuit(), seed in any::<u64>(), len in 0usize..24) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seq = random_seq(&mut rng, n.num_inputs(), len);
        let key = Bits::zeros(0);
        let out = simulate(&n, &key, &seq).unwrap();
        prop_assert_eq!(&out, &simulate(&n, &key, &seq).unwrap());
        let mut s = n.init_state();
        for (t, x) in seq.iter().enumerate() {
            let (y, nx) = step(&n, &key, &s, x).unwrap();
            prop_assert_eq!(&y, &out[t]);
            s = nx;
        }
    }

    #[test]
    fn unrolled_model_agrees_with_simulation(seed in any::<u64>(), w in 2usize..=3, len in 1usize..=6) {
        let c = Circuit::Netlist(rfsm(seed, w, 1 << w, 2, 2));
        let Ok(l) = obfuscate(&c, &"df:1".parse().unwrap()) else {
            return Ok(());
        };
        let n = &l.netlist;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let seq = random_seq(&mut rng, n.num_inputs(), len);
        let key = random_key(&mut rng, n.num_keys());
        let m = unroll(n, len, 1);
        let mut assume = m.input_assumptions(&seq);
        assume.extend(m.key_assumptions(0, &key));
        let r = solve(m.formula(), &assume, &Budget::unlimited());
        prop_assert!(r.is_sat());
        let a = r.assignment.unwrap();
        let want = simulate(n, &key, &seq).unwrap();
        for (t, y) in want.iter().enumerate() {
            let got: Bits = m.outputs(0, t).iter().map(|&s| lit_value(&a, s)).collect();
            prop_assert_eq!(&got, y, "frame {}", t);
        }
    }

    #[test]
    fn solver_agrees_with_enumeration(seed in any::<u64>(), vars in 3usize..=10, clauses in 1usize..=45) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = CnfFormula::new();
        let vs: Vec<Var> = (0..vars).map(|_| f.new_var()).collect();
        let mut cls: Vec<Vec<Lit>> = Vec::new();
        for _ in 0..clauses {
            let len = rng.gen_range(1..=3);
            let c: Vec<Lit> = (0..len).map(|_| vs[rng.gen_range(0..vars)].lit(rng.gen_bool(0.5))).collect();
            f.add_clause(&c);
            cls.push(c);
        }
        let any_model = (0..1u64 << vars).any(|m| {
            cls.iter().all(|c| c.iter().any(|l| l.eval((m >> l.var().index()) & 1 == 1)))
        });
        let r = solve(&f, &[], &Budget::unlimited());
        prop_assert_eq!(r.is_sat(), any_model);
        if let Some(a) = r.assignment {
            prop_assert!(cls.iter().all(|c| c.iter().any(|l| l.eval(a[l.var().index()]))));
        }
    }

    #[test]
    fn reachability_depth_limit_is_monotone(n in small_circuit()) {
        let (want, deepest) = brute_reach(&n);
        let full = reachable_bfs(&n, None).unwrap();
        prop_assert!(full.complete);
        let got: HashSet<Bits> = full.set.to_vec().into_iter().map(|s| Bits::from_u64(s, n.num_ffs())).collect();
        prop_assert_eq!(&got, &want);
        let mut prev = 0;
        for d in 0..=deepest + 2 {
            let r = reachable_bfs(&n, Some(d)).unwrap();
            prop_assert!(r.set.len() >= prev);
            prev = r.set.len();
            if r.complete {
                prop_assert_eq!(r.set.len(), want.len());
            }
            if d > deepest {
                prop_assert!(r.complete, "depth {} past the deepest state {}", d, deepest);
            }
        }
    }

    #[test]
    fn certification_is_sound(n in small_circuit()) {
        let (reach, _) = brute_reach(&n);
        for s in all_states(n.num_ffs()) {
            match certify_unreachable(&n, &s).unwrap() {
                Certificate::ProvenUnreachable(_) => prop_assert!(!reach.contains(&s), "{} is reachable", s),
                Certificate::Reachable { inputs, states, .. } => {
                    prop_assert!(reach.contains(&s));
                    prop_assert_eq!(states.last(), Some(&s));
                    prop_assert_eq!(states.len(), inputs.len() + 1);
                }
                Certificate::Unknown => {}
            }
        }
    }

    #[test]
    fn closest_unreachable_state_matches_brute_force(n in small_circuit()) {
        let (reach, _) = brute_reach(&n);
        let best = reach
            .iter()
            .flat_map(|r| all_states(n.num_ffs()).filter(|u| !reach.contains(u)).map(move |u| r.hamming(&u)))
            .min();
        match find_urs_min_hd(&n, None).unwrap() {
            UrsSearch::Found(wt) => {
                prop_assert_eq!(Some(wt.hd), best);
                prop_assert!(!reach.contains(&wt.s_urs));
                prop_assert!(reach.contains(&wt.s_reach));
                prop_assert_eq!(wt.s_reach.hamming(&wt.s_urs), wt.hd);
            }
            UrsSearch::NoUrs => prop_assert_eq!(best, None),
            UrsSearch::NotWithinLimit => prop_assert!(false, "no limit was given"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(24) })]

    #[test]
    fn every_duality_key_is_correct(seed in any::<u64>(), w in 3usize..=4, k in 1usize..=2) {
        let n = rfsm(seed, w, (1 << w) / 2, 1, 2);
        let Ok(r) = apply_ssd(&n, k) else { return Ok(()); };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seqs: Vec<Vec<Bits>> = (0..20).map(|_| random_seq(&mut rng, n.num_inputs(), 24)).collect();
        let zero = Bits::zeros(0);
        for v in 0..1u64 << r.plan.key_width {
            let key = Bits::from_u64(v, r.plan.key_width);
            for seq in &seqs {
                prop_assert_eq!(simulate(&r.netlist, &key, seq).unwrap(), simulate(&n, &zero, seq).unwrap());
            }
        }
        // Each duplicate is unreachable in the original.
        let (reach, _) = brute_reach(&n);
        for p in &r.plan.pairs {
            prop_assert!(!reach.contains(&p.duplicate));
            prop_assert!(reach.contains(&p.original));
        }
    }

    #[test]
    fn duality_defeats_unique_key(seed in any::<u64>()) {
        let n = rfsm(seed, 3, 4, 1, 1);
        let Ok(r) = apply_ssd(&n, 1) else { return Ok(()); };
        let mut o = Oracle::new(r.netlist.clone(), r.correct_key()).unwrap();
        let rep = run_attack(&r.netlist, &mut o, &AttackConfig::default()).unwrap();
        prop_assert_ne!(rep.termination, Termination::UC);
        prop_assert!(rep.accepts(&r.correct_key()));
    }

    #[test]
    fn deep_fault_correct_key_and_firing_frames(seed in any::<u64>(), w in 1usize..=3) {
        let n = rfsm(seed, 3, 6, 1, 1);
        let Ok(df) = apply_df(&n, &TracerConfig::clock(w), &DfOptions::default()) else { return Ok(()); };
        let c = 1usize << w;
        prop_assert_eq!(df.bound.bound, Some(c as u64));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let zero = Bits::zeros(0);
        let pat: Vec<(usize, bool)> = df
            .pattern
            .state_bits
            .iter()
            .chain(&df.pattern.tracer_bits)
            .map(|(name, v)| (df.netlist.ff_index_of_q(df.netlist.find_net(name).unwrap()).unwrap(), *v))
            .collect();
        for _ in 0..16 {
            let seq = random_seq(&mut rng, n.num_inputs(), 40);
            prop_assert_eq!(simulate(&df.netlist, &df.key, &seq).unwrap(), simulate(&n, &zero, &seq).unwrap());
            let (_, states) = simulate_trace(&df.netlist, &df.key, &seq).unwrap();
            for (t, s) in states.iter().enumerate() {
                if pat.iter().all(|&(i, v)| s.as_slice()[i] == v) {
                    // The fault can only fire once the counter wraps to its top value.
                    prop_assert!(t + 1 >= c);
                    prop_assert_eq!((t + 1) % c, 0, "pattern at frame {}", t);
                }
            }
        }
    }

    #[test]
    fn attack_log_is_valid(seed in any::<u64>(), scheme in prop::sample::select(vec!["df:2", "ssd:1", "dfssd:1:1", "df:1:lfsr"])) {
        let c = Circuit::Netlist(rfsm(seed, 3, 5, 1, 1));
        let scheme: Scheme = scheme.parse().unwrap();
        let Ok(l) = obfuscate(&c, &scheme) else { return Ok(()); };
        let kw = l.netlist.num_keys();
        prop_assume!(kw <= 10);
        let mut o = Oracle::new(l.netlist.clone(), l.key.clone()).unwrap();
        let r = run_attack(&l.netlist, &mut o, &AttackConfig { boundary_step: 2, ..Default::default() }).unwrap();
        prop_assert!(matches!(r.termination, Termination::UC | Termination::CE | Termination::UMC));
        prop_assert!(consistent_with_log(&l.netlist, &l.key, &r.dis_log));
        prop_assert!(r.accepts(&l.key));
        let keys: Vec<Bits> = (0..1u64 << kw).map(|v| Bits::from_u64(v, kw)).collect();
        let mut alive = keys.clone();
        for d in &r.dis_log {
            prop_assert_eq!(d.seq.len(), d.oracle_out.len());
            prop_assert!(d.seq.len() <= d.found_at_boundary);
            let outs: Vec<Vec<Bits>> = alive.iter().map(|k| simulate(&l.netlist, k, &d.seq).unwrap()).collect();
            prop_assert!(outs.iter().any(|y| y != &outs[0]), "DIS separates no surviving keys");
            prop_assert!(outs.iter().any(|y| y != &d.oracle_out));
            alive = alive
                .into_iter()
                .zip(outs)
                .filter(|(_, y)| y == &d.oracle_out)
                .map(|(k, _)| k)
                .collect();
        }
        prop_assert!(alive.contains(&l.key));
        if let Some(k) = &r.key {
            prop_assert!(alive.contains(k));
        }
    }

    #[test]
    fn obfuscation_is_reproducible(seed in any::<u64>(), scheme in prop::sample::select(vec!["ssd:1", "df:2", "dfssd:1:2:transition"])) {
        let c = Circuit::Netlist(rfsm(seed, 3, 5, 1, 1));
        let scheme: Scheme = scheme.parse().unwrap();
        let (Ok(a), Ok(b)) = (obfuscate(&c, &scheme), obfuscate(&c, &scheme)) else { return Ok(()); };
        prop_assert_eq!(serialize_bench(&a.netlist, WriteOptions::default()), serialize_bench(&b.netlist, WriteOptions::default()));
        prop_assert_eq!(a.key, b.key);
    }
}
