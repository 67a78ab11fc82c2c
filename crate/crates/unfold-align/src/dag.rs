//! Small-DAG utilities: reachability, transitive reduction, labeled
//! isomorphism and canonical keys for variant grouping.
//!
//! Everything here works on plain edge lists over node indices
//! `0..n`. The graphs involved (traces, alignment orders, run projections)
//! stay small, so dense bit matrices are the right tool.

use std::collections::{BTreeMap, HashMap};

/// Dense square bit matrix over `n` nodes.
#[derive(Clone, Debug)]
pub struct BitMatrix {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64);
        BitMatrix {
            n,
            words,
            bits: vec![0; n * words],
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] & (1 << (j % 64)) != 0
    }

    /// `row(i) |= row(j)`, used for closure propagation.
    pub fn or_row(&mut self, i: usize, j: usize) {
        let (a, b) = (i * self.words, j * self.words);
        for w in 0..self.words {
            let v = self.bits[b + w];
            self.bits[a + w] |= v;
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Topological order of `0..n` under `edges`, or `None` on a cycle.
pub fn toposort(n: usize, edges: &[(u32, u32)]) -> Option<Vec<u32>> {
    let mut indeg = vec![0usize; n];
    let mut succ = vec![Vec::new(); n];
    for &(u, v) in edges {
        indeg[v as usize] += 1;
        succ[u as usize].push(v);
    }
    let mut ready: Vec<u32> = (0..n as u32).filter(|&v| indeg[v as usize] == 0).collect();
    ready.reverse();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop() {
        order.push(v);
        for &w in &succ[v as usize] {
            indeg[w as usize] -= 1;
            if indeg[w as usize] == 0 {
                ready.push(w);
            }
        }
    }
    (order.len() == n).then_some(order)
}

pub fn is_acyclic(n: usize, edges: &[(u32, u32)]) -> bool {
    toposort(n, edges).is_some()
}

/// Reachability matrix: `get(u, v)` iff there is a nonempty path `u -> v`.
///
/// Panics on cyclic input; callers deal in DAGs.
pub fn closure(n: usize, edges: &[(u32, u32)]) -> BitMatrix {
    let order = toposort(n, edges).expect("closure requires a DAG");
    let mut succ = vec![Vec::new(); n];
    for &(u, v) in edges {
        succ[u as usize].push(v as usize);
    }
    let mut m = BitMatrix::new(n);
    for &v in order.iter().rev() {
        let v = v as usize;
        for i in 0..succ[v].len() {
            let w = succ[v][i];
            m.set(v, w);
            m.or_row(v, w);
        }
    }
    m
}

/// Unique minimal edge set with the same reachability as `edges`.
///
/// An edge `u -> v` is redundant iff some other successor of `u`
/// reaches `v`.
pub fn transitive_reduction(n: usize, edges: &[(u32, u32)]) -> Vec<(u32, u32)> {
    let reach = closure(n, edges);
    let mut succ = vec![Vec::new(); n];
    for &(u, v) in edges {
        if !succ[u as usize].contains(&v) {
            succ[u as usize].push(v);
        }
    }
    let mut keep = Vec::new();
    for u in 0..n {
        for &v in &succ[u] {
            let redundant = succ[u]
                .iter()
                .any(|&w| w != v && reach.get(w as usize, v as usize));
            if !redundant {
                keep.push((u as u32, v));
            }
        }
    }
    keep.sort_unstable();
    keep
}

/// Edges of the transitive closure as a sorted pair list.
pub fn closure_edges(n: usize, edges: &[(u32, u32)]) -> Vec<(u32, u32)> {
    let m = closure(n, edges);
    let mut out = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if m.get(u, v) {
                out.push((u as u32, v as u32));
            }
        }
    }
    out
}

/// A DAG whose nodes carry labels; the shape shared by p-traces and the
/// two sides of a decomposed alignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledDag<L> {
    pub labels: Vec<L>,
    pub edges: Vec<(u32, u32)>,
}

impl<L: Clone + Ord + std::fmt::Debug> LabeledDag<L> {
    pub fn new(labels: Vec<L>, mut edges: Vec<(u32, u32)>) -> Self {
        edges.sort_unstable();
        edges.dedup();
        LabeledDag { labels, edges }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn reduced(&self) -> Self {
        LabeledDag {
            labels: self.labels.clone(),
            edges: transitive_reduction(self.n(), &self.edges),
        }
    }

    /// Stable refinement colors: label plus iterated in/out color multisets.
    fn refine(&self) -> Vec<u64> {
        let n = self.n();
        let mut pred = vec![Vec::new(); n];
        let mut succ = vec![Vec::new(); n];
        for &(u, v) in &self.edges {
            succ[u as usize].push(v as usize);
            pred[v as usize].push(u as usize);
        }
        // Initial color: rank of the node label among sorted distinct labels.
        let mut distinct: Vec<&L> = self.labels.iter().collect();
        distinct.sort();
        distinct.dedup();
        let mut colors: Vec<u64> = self
            .labels
            .iter()
            .map(|l| distinct.binary_search(&l).unwrap() as u64)
            .collect();
        for _ in 0..n.max(1) {
            let mut sigs: Vec<(u64, Vec<u64>, Vec<u64>)> = (0..n)
                .map(|v| {
                    let mut ins: Vec<u64> = pred[v].iter().map(|&u| colors[u]).collect();
                    let mut outs: Vec<u64> = succ[v].iter().map(|&u| colors[u]).collect();
                    ins.sort_unstable();
                    outs.sort_unstable();
                    (colors[v], ins, outs)
                })
                .collect();
            let mut sorted = sigs.clone();
            sorted.sort();
            sorted.dedup();
            let next: Vec<u64> = sigs
                .drain(..)
                .map(|s| sorted.binary_search(&s).unwrap() as u64)
                .collect();
            if next == colors {
                break;
            }
            colors = next;
        }
        colors
    }

    /// Exact labeled-DAG isomorphism (same labels, same edge structure).
    ///
    /// Refinement colors prune the search; a backtracking matcher settles
    /// ambiguous (automorphic) cases.
    pub fn isomorphic(&self, other: &Self) -> bool {
        let n = self.n();
        if n != other.n() || self.edges.len() != other.edges.len() {
            return false;
        }
        let ca = self.refine();
        let cb = other.refine();
        let mut ha: Vec<(u64, &L)> = ca.iter().cloned().zip(self.labels.iter()).collect();
        let mut hb: Vec<(u64, &L)> = cb.iter().cloned().zip(other.labels.iter()).collect();
        ha.sort();
        hb.sort();
        if ha != hb {
            return false;
        }
        let adj_a = adjacency(n, &self.edges);
        let adj_b = adjacency(n, &other.edges);
        // Match nodes in a fixed order, most-constrained color classes first.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&v| ca[v]);
        let mut map = vec![usize::MAX; n];
        let mut used = vec![false; n];
        fn bt<L: Ord>(
            pos: usize,
            order: &[usize],
            ca: &[u64],
            cb: &[u64],
            la: &[L],
            lb: &[L],
            adj_a: &BitMatrix,
            adj_b: &BitMatrix,
            map: &mut [usize],
            used: &mut [bool],
        ) -> bool {
            if pos == order.len() {
                return true;
            }
            let v = order[pos];
            for w in 0..cb.len() {
                if used[w] || ca[v] != cb[w] || la[v] != lb[w] {
                    continue;
                }
                let ok = order[..pos].iter().all(|&u| {
                    adj_a.get(u, v) == adj_b.get(map[u], w)
                        && adj_a.get(v, u) == adj_b.get(w, map[u])
                });
                if ok {
                    map[v] = w;
                    used[w] = true;
                    if bt(pos + 1, order, ca, cb, la, lb, adj_a, adj_b, map, used) {
                        return true;
                    }
                    used[w] = false;
                    map[v] = usize::MAX;
                }
            }
            false
        }
        bt(
            0,
            &order,
            &ca,
            &cb,
            &self.labels,
            &other.labels,
            &adj_a,
            &adj_b,
            &mut map,
            &mut used,
        )
    }
}

impl<L: Clone + Ord + std::fmt::Debug + std::fmt::Display> LabeledDag<L> {
    /// Isomorphism-invariant grouping key. Isomorphic DAGs always share a
    /// key; key collisions between non-isomorphic DAGs are possible and
    /// must be settled with [`LabeledDag::isomorphic`].
    pub fn canonical_key(&self) -> String {
        let colors = self.refine();
        let mut nodes: Vec<String> = colors
            .iter()
            .zip(self.labels.iter())
            .map(|(c, l)| format!("{c}:{l}"))
            .collect();
        nodes.sort();
        let mut edges: Vec<String> = self
            .edges
            .iter()
            .map(|&(u, v)| format!("{}>{}", colors[u as usize], colors[v as usize]))
            .collect();
        edges.sort();
        format!("n[{}]e[{}]", nodes.join(","), edges.join(","))
    }
}

fn adjacency(n: usize, edges: &[(u32, u32)]) -> BitMatrix {
    let mut m = BitMatrix::new(n);
    for &(u, v) in edges {
        m.set(u as usize, v as usize);
    }
    m
}

/// Groups items by labeled-DAG isomorphism, returning one bucket of item
/// indices per equivalence class, deterministically ordered by first
/// occurrence.
pub fn group_isomorphic<L, T, F>(items: &[T], to_dag: F) -> Vec<Vec<usize>>
where
    L: Clone + Ord + std::fmt::Debug + std::fmt::Display,
    F: Fn(&T) -> LabeledDag<L>,
{
    let dags: Vec<LabeledDag<L>> = items.iter().map(&to_dag).collect();
    let mut by_key: HashMap<String, Vec<usize>> = HashMap::new();
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, dag) in dags.iter().enumerate() {
        let key = dag.canonical_key();
        let bucket = by_key.entry(key).or_default();
        let mut found = None;
        for &rep in bucket.iter() {
            if dags[rep].isomorphic(dag) {
                found = Some(rep);
                break;
            }
        }
        match found {
            Some(rep) => groups.get_mut(&rep).unwrap().push(i),
            None => {
                bucket.push(i);
                groups.insert(i, vec![i]);
            }
        }
    }
    groups.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reduction_drops_shortcut() {
        let edges = vec![(0, 1), (1, 2), (0, 2)];
        assert_eq!(transitive_reduction(3, &edges), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn reduction_of_edgeless_graph_is_itself() {
        assert!(transitive_reduction(4, &[]).is_empty());
    }

    #[test]
    fn toposort_detects_cycle() {
        assert!(toposort(2, &[(0, 1), (1, 0)]).is_none());
    }

    #[test]
    fn iso_distinguishes_chain_from_fork() {
        let chain = LabeledDag::new(vec!["a", "b", "c"], vec![(0, 1), (1, 2)]);
        let fork = LabeledDag::new(vec!["a", "b", "c"], vec![(0, 1), (0, 2)]);
        assert!(!chain.isomorphic(&fork));
        let chain2 = LabeledDag::new(vec!["c", "b", "a"], vec![(2, 1), (1, 0)]);
        assert!(chain.isomorphic(&chain2));
        assert_eq!(chain.canonical_key(), chain2.canonical_key());
    }

    #[test]
    fn iso_handles_duplicate_labels() {
        // Two x-labeled events; one graph orders them, the other does not.
        let ordered = LabeledDag::new(vec!["x", "x"], vec![(0, 1)]);
        let parallel = LabeledDag::new(vec!["x", "x"], vec![]);
        assert!(!ordered.isomorphic(&parallel));
        assert!(ordered.isomorphic(&LabeledDag::new(vec!["x", "x"], vec![(1, 0)])));
    }

    fn arb_dag() -> impl Strategy<Value = (usize, Vec<(u32, u32)>)> {
        (2usize..8).prop_flat_map(|n| {
            let pairs: Vec<(u32, u32)> = (0..n as u32)
                .flat_map(|u| (u + 1..n as u32).map(move |v| (u, v)))
                .collect();
            let m = pairs.len();
            (
                Just(n),
                Just(pairs),
                proptest::collection::vec(any::<bool>(), m),
            )
                .prop_map(|(n, pairs, mask)| {
                    let edges = pairs
                        .into_iter()
                        .zip(mask)
                        .filter_map(|(e, keep)| keep.then_some(e))
                        .collect();
                    (n, edges)
                })
        })
    }

    proptest! {
        // Reduction keeps reachability and is minimal w.r.t. the closure oracle.
        #[test]
        fn reduction_preserves_reachability((n, edges) in arb_dag()) {
            let red = transitive_reduction(n, &edges);
            prop_assert_eq!(closure_edges(n, &red), closure_edges(n, &edges));
            let full = closure_edges(n, &edges);
            for i in 0..red.len() {
                let mut fewer = red.clone();
                fewer.remove(i);
                prop_assert_ne!(closure_edges(n, &fewer), full.clone());
            }
        }
    }
}
