//! Flip-flop dependency graph and its strongly connected components.

use serde::Serialize;

use crate::netlist::{Driver, Netlist};

/// `graph[i]` lists the flip-flops whose next state reads flip-flop `i`
/// (through gates or annotated dummy edges).
pub fn ff_graph(n: &Netlist) -> Vec<Vec<usize>> {
    let mut extra: Vec<Vec<usize>> = vec![Vec::new(); n.num_nets()];
    for &(from, to) in &n.annotations().dummy_edges {
        extra[to.index()].push(from.index());
    }
    let mut graph = vec![Vec::new(); n.num_ffs()];
    for (j, ff) in n.flipflops().iter().enumerate() {
        let mut seen = vec![false; n.num_nets()];
        let mut stack = vec![ff.d.index()];
        while let Some(x) = stack.pop() {
            if std::mem::replace(&mut seen[x], true) {
                continue;
            }
            match n.driver(crate::NetId(x as u32)) {
                Driver::Gate(g) => {
                    stack.extend(n.gates()[g].inputs.iter().map(|i| i.index()));
                    stack.extend(extra[x].iter().copied());
                }
                Driver::FlipFlop(i) => graph[i].push(j),
                _ => stack.extend(extra[x].iter().copied()),
            }
        }
    }
    for e in &mut graph {
        e.sort_unstable();
        e.dedup();
    }
    graph
}

/// Tarjan's algorithm (iterative). Components come out in reverse
/// topological order; members are sorted.
pub fn tarjan(graph: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = graph.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut next = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut work: Vec<(usize, usize)> = vec![(root, 0)];
        while let Some(&mut (v, ref mut ei)) = work.last_mut() {
            if *ei == 0 && index[v] == usize::MAX {
                index[v] = next;
                low[v] = next;
                next += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if let Some(&w) = graph[v].get(*ei) {
                *ei += 1;
                if index[w] == usize::MAX {
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            work.pop();
            if let Some(&(p, _)) = work.last() {
                low[p] = low[p].min(low[v]);
            }
            if low[v] == index[v] {
                let mut c = Vec::new();
                loop {
                    let w = stack.pop().unwrap();
                    on_stack[w] = false;
                    c.push(w);
                    if w == v {
                        break;
                    }
                }
                c.sort_unstable();
                comps.push(c);
            }
        }
    }
    comps
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SccSummary {
    /// Flip-flop names per component.
    pub components: Vec<Vec<String>>,
    /// Weakly connected groups of flip-flops.
    pub weak_groups: usize,
    pub tracer_ffs: Vec<String>,
    /// Some component holds both a tracer and a circuit flip-flop.
    pub tracer_merged: bool,
}

impl SccSummary {
    pub fn tracer_isolated(&self) -> bool {
        !self.tracer_ffs.is_empty() && !self.tracer_merged
    }
}

pub fn scc_report(n: &Netlist) -> SccSummary {
    let g = ff_graph(n);
    let comps = tarjan(&g);
    let tracers = n.tracer_ffs();
    let name = |i: usize| n.net_name(n.flipflops()[i].q).to_string();
    let tracer_merged = comps
        .iter()
        .any(|c| c.iter().any(|i| tracers.contains(i)) && c.iter().any(|i| !tracers.contains(i)));
    // Union-find over undirected edges for the weak grouping.
    let mut parent: Vec<usize> = (0..g.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for (i, es) in g.iter().enumerate() {
        for &j in es {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            parent[a] = b;
        }
    }
    let mut roots: Vec<usize> = (0..g.len()).map(|i| find(&mut parent, i)).collect();
    roots.sort_unstable();
    roots.dedup();
    SccSummary {
        components: comps.iter().map(|c| c.iter().map(|&i| name(i)).collect()).collect(),
        weak_groups: roots.len(),
        tracer_ffs: tracers.iter().map(|&i| name(i)).collect(),
        tracer_merged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_bench;
    use proptest::prelude::*;

    #[test]
    fn two_cycles_and_a_tail() {
        let g = vec![vec![1], vec![0, 2], vec![3], vec![2], vec![]];
        let mut c = tarjan(&g);
        c.sort();
        assert_eq!(c, vec![vec![0, 1], vec![2, 3], vec![4]]);
    }

    #[test]
    fn combinational_is_empty() {
        let n = parse_bench("INPUT(a)\nOUTPUT(y)\ny = NOT(a)\n").unwrap();
        let r = scc_report(&n);
        assert!(r.components.is_empty());
        assert!(!r.tracer_isolated());
    }

    #[test]
    fn dummy_edges_count() {
        let src = "INPUT(x)\nOUTPUT(b)\na = DFF(g)\nb = DFF(a)\ng = BUFF(x)\n";
        let n = parse_bench(src).unwrap();
        assert_eq!(tarjan(&ff_graph(&n)).len(), 2);
        let m = parse_bench(&format!("{src}#! dummy b g\n")).unwrap();
        assert_eq!(tarjan(&ff_graph(&m)).len(), 1);
    }

    fn reach(g: &[Vec<usize>], a: usize, b: usize) -> bool {
        let mut seen = vec![false; g.len()];
        let mut st = vec![a];
        while let Some(x) = st.pop() {
            if x == b {
                return true;
            }
            if !std::mem::replace(&mut seen[x], true) {
                st.extend(g[x].iter().copied());
            }
        }
        false
    }

    proptest! {
        #[test]
        fn components_match_mutual_reachability(edges in prop::collection::vec((0usize..8, 0usize..8), 0..20)) {
            let mut g = vec![Vec::new(); 8];
            for (a, b) in edges {
                g[a].push(b);
            }
            let comps = tarjan(&g);
            let mut comp_of = vec![0; 8];
            for (ci, c) in comps.iter().enumerate() {
                for &v in c {
                    comp_of[v] = ci;
                }
            }
            prop_assert_eq!(comps.iter().map(|c| c.len()).sum::<usize>(), 8);
            for a in 0..8 {
                for b in 0..8 {
                    let same = reach(&g, a, b) && reach(&g, b, a);
                    prop_assert_eq!(same, comp_of[a] == comp_of[b]);
                }
            }
        }
    }
}
