//! Directed acyclic graphs, d-separation and Markov equivalence.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest graph [`markov_equivalence_class`] will handle.
pub const MAX_CLASS_NODES: usize = 6;
/// Largest graph [`enumerate_dags`] will handle.
pub const MAX_ENUMERATION_NODES: usize = 5;
/// Hard limit imposed by the bitset representation of [`NodeSet`].
pub const MAX_NODES: usize = 64;

/// A set of node indices stored as a 64-bit mask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeSet(u64);

impl NodeSet {
    pub const fn empty() -> Self {
        NodeSet(0)
    }

    pub fn singleton(i: usize) -> Self {
        NodeSet(1 << i)
    }

    /// `{0, 1, ..., n-1}`
    pub fn full(n: usize) -> Self {
        if n >= 64 {
            NodeSet(u64::MAX)
        } else {
            NodeSet((1u64 << n) - 1)
        }
    }

    pub const fn from_bits(bits: u64) -> Self {
        NodeSet(bits)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, i: usize) -> bool {
        i < 64 && self.0 & (1 << i) != 0
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1 << i;
    }

    pub fn remove(&mut self, i: usize) {
        self.0 &= !(1 << i);
    }

    pub fn with(self, i: usize) -> Self {
        NodeSet(self.0 | (1 << i))
    }

    pub fn without(self, i: usize) -> Self {
        NodeSet(self.0 & !(1 << i))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        NodeSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        NodeSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        NodeSet(self.0 & !other.0)
    }

    pub fn is_disjoint(self, other: Self) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Largest index in the set, if any.
    pub fn highest(self) -> Option<usize> {
        (self.0 != 0).then(|| 63 - self.0.leading_zeros() as usize)
    }

    /// Indices in ascending order.
    pub fn iter(self) -> NodeSetIter {
        NodeSetIter(self.0)
    }

    /// Every subset of `self`, starting with the empty set.
    pub fn subsets(self) -> impl Iterator<Item = NodeSet> {
        let mask = self.0;
        let mut sub = 0u64;
        let mut done = false;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let out = NodeSet(sub);
            sub = sub.wrapping_sub(mask) & mask;
            if sub == 0 {
                done = true;
            }
            Some(out)
        })
    }
}

impl FromIterator<usize> for NodeSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = NodeSet::empty();
        for i in iter {
            s.insert(i);
        }
        s
    }
}

impl fmt::Debug for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

pub struct NodeSetIter(u64);

impl Iterator for NodeSetIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for NodeSetIter {}

/// A directed acyclic graph on nodes `0..num_nodes`.
///
/// Stored as one parent set per node. Construction rejects self-loops,
/// out-of-range indices and cycles, so every value of this type is a DAG.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dag {
    parents: Vec<NodeSet>,
}

impl Dag {
    pub fn empty(num_nodes: usize) -> Result<Self> {
        if num_nodes == 0 {
            return Err(Error::Empty("graph needs at least one node"));
        }
        if num_nodes > MAX_NODES {
            return Err(Error::TooManyNodes(num_nodes, MAX_NODES));
        }
        Ok(Dag {
            parents: vec![NodeSet::empty(); num_nodes],
        })
    }

    pub fn new(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut parents = Dag::empty(num_nodes)?.parents;
        for &(p, c) in edges {
            for i in [p, c] {
                if i >= num_nodes {
                    return Err(Error::InvalidNode { index: i, num_nodes });
                }
            }
            if p == c {
                return Err(Error::SelfLoop(p));
            }
            parents[c].insert(p);
        }
        Dag::from_parent_sets(parents)
    }

    pub fn from_parent_sets(parents: Vec<NodeSet>) -> Result<Self> {
        let n = parents.len();
        if n == 0 {
            return Err(Error::Empty("graph needs at least one node"));
        }
        if n > MAX_NODES {
            return Err(Error::TooManyNodes(n, MAX_NODES));
        }
        let all = NodeSet::full(n);
        for (c, pa) in parents.iter().enumerate() {
            if !pa.is_subset(all) {
                return Err(Error::InvalidNode {
                    index: pa.highest().unwrap_or(0),
                    num_nodes: n,
                });
            }
            if pa.contains(c) {
                return Err(Error::SelfLoop(c));
            }
        }
        if topological_order(&parents).is_none() {
            return Err(Error::Cyclic);
        }
        Ok(Dag { parents })
    }

    pub fn num_nodes(&self) -> usize {
        self.parents.len()
    }

    pub fn num_edges(&self) -> usize {
        self.parents.iter().map(|p| p.len()).sum()
    }

    fn check(&self, i: usize) -> Result<()> {
        if i >= self.num_nodes() {
            Err(Error::InvalidNode {
                index: i,
                num_nodes: self.num_nodes(),
            })
        } else {
            Ok(())
        }
    }

    fn check_set(&self, s: NodeSet) -> Result<()> {
        match s.highest() {
            Some(m) => self.check(m),
            None => Ok(()),
        }
    }

    pub fn parents(&self, i: usize) -> Result<NodeSet> {
        self.check(i)?;
        Ok(self.parents[i])
    }

    pub fn children(&self, i: usize) -> Result<NodeSet> {
        self.check(i)?;
        Ok((0..self.num_nodes())
            .filter(|&c| self.parents[c].contains(i))
            .collect())
    }

    pub fn parent_sets(&self) -> &[NodeSet] {
        &self.parents
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        to < self.num_nodes() && self.parents[to].contains(from)
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    /// Edges `(parent, child)` in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .parents
            .iter()
            .enumerate()
            .flat_map(|(c, pa)| pa.iter().map(move |p| (p, c)))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn topological_order(&self) -> Vec<usize> {
        topological_order(&self.parents).expect("Dag invariant: acyclic")
    }

    /// `set` together with all of its ancestors.
    pub fn ancestral_closure(&self, set: NodeSet) -> NodeSet {
        let mut closed = set;
        let mut stack: Vec<usize> = set.iter().collect();
        while let Some(v) = stack.pop() {
            for p in self.parents[v].iter() {
                if !closed.contains(p) {
                    closed.insert(p);
                    stack.push(p);
                }
            }
        }
        closed
    }

    /// Strict descendants of `i`.
    pub fn descendants(&self, i: usize) -> Result<NodeSet> {
        self.check(i)?;
        let n = self.num_nodes();
        let mut out = NodeSet::empty();
        let mut stack = vec![i];
        while let Some(v) = stack.pop() {
            for c in 0..n {
                if self.parents[c].contains(v) && !out.contains(c) {
                    out.insert(c);
                    stack.push(c);
                }
            }
        }
        Ok(out)
    }

    /// Undirected adjacency as `(min, max)` pairs.
    pub fn skeleton(&self) -> BTreeSet<(usize, usize)> {
        self.edges()
            .into_iter()
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect()
    }

    /// Triples `(a, c, b)` with `a < b`, `a -> c <- b` and `a`, `b` non-adjacent.
    pub fn immoralities(&self) -> BTreeSet<(usize, usize, usize)> {
        let mut out = BTreeSet::new();
        for (c, pa) in self.parents.iter().enumerate() {
            let ps: Vec<usize> = pa.iter().collect();
            for (x, &a) in ps.iter().enumerate() {
                for &b in &ps[x + 1..] {
                    if !self.adjacent(a, b) {
                        out.insert((a, c, b));
                    }
                }
            }
        }
        out
    }

    /// One line per edge, `parent -> child`, using `names`.
    pub fn to_edge_list(&self, names: &[String]) -> String {
        let mut s = String::new();
        for (p, c) in self.edges() {
            s.push_str(&format!("{} -> {}\n", names[p], names[c]));
        }
        s
    }

    /// Parses the `parent -> child` format. Blank lines and `#` comments are skipped.
    pub fn parse_edge_list(text: &str, names: &[String]) -> Result<Self> {
        let lookup = |tok: &str| {
            names
                .iter()
                .position(|n| n == tok)
                .ok_or_else(|| Error::UnknownVariable(tok.to_string()))
        };
        let mut edges = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (p, c) = line
                .split_once("->")
                .ok_or_else(|| Error::InvalidArgument(format!("bad edge line `{line}`")))?;
            edges.push((lookup(p.trim())?, lookup(c.trim())?));
        }
        Dag::new(names.len(), &edges)
    }

    /// GraphViz text.
    pub fn to_dot(&self, names: &[String]) -> String {
        let mut s = String::from("digraph {\n");
        for name in names {
            s.push_str(&format!("  \"{name}\";\n"));
        }
        for (p, c) in self.edges() {
            s.push_str(&format!("  \"{}\" -> \"{}\";\n", names[p], names[c]));
        }
        s.push_str("}\n");
        s
    }
}

impl PartialOrd for Dag {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Lexicographic by node count, then by sorted edge list.
impl Ord for Dag {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.num_nodes()
            .cmp(&other.num_nodes())
            .then_with(|| self.edges().cmp(&other.edges()))
    }
}

impl fmt::Debug for Dag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dag({}; ", self.num_nodes())?;
        let edges = self.edges();
        for (k, (p, c)) in edges.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}->{c}")?;
        }
        write!(f, ")")
    }
}

fn topological_order(parents: &[NodeSet]) -> Option<Vec<usize>> {
    let n = parents.len();
    let mut indeg: Vec<usize> = parents.iter().map(|p| p.len()).collect();
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for c in 0..n {
            if parents[c].contains(v) {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
    }
    (order.len() == n).then_some(order)
}

pub fn parents(dag: &Dag, i: usize) -> Result<NodeSet> {
    dag.parents(i)
}

/// Whether `s` d-separates `a` from `b` in `dag`.
///
/// Uses the moralised ancestral graph: restrict to the ancestors of
/// `a ∪ b ∪ s`, marry co-parents, drop directions, delete `s`, and check that
/// no undirected path joins `a` and `b`.
pub fn d_separated(dag: &Dag, a: NodeSet, b: NodeSet, s: NodeSet) -> Result<bool> {
    dag.check_set(a.union(b).union(s))?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("d-separation needs nonempty A and B".into()));
    }
    if !a.is_disjoint(b) || !a.is_disjoint(s) || !b.is_disjoint(s) {
        return Err(Error::OverlappingSets);
    }
    let n = dag.num_nodes();
    let keep = dag.ancestral_closure(a.union(b).union(s));
    let mut adj = vec![NodeSet::empty(); n];
    for c in keep.iter() {
        let pa = dag.parents[c].intersection(keep);
        for p in pa.iter() {
            adj[p].insert(c);
            adj[c].insert(p);
        }
        for p in pa.iter() {
            adj[p] = adj[p].union(pa.without(p));
        }
    }
    let allowed = keep.difference(s);
    let mut seen = a;
    let mut stack: Vec<usize> = a.iter().collect();
    while let Some(v) = stack.pop() {
        for w in adj[v].intersection(allowed).iter() {
            if b.contains(w) {
                return Ok(false);
            }
            if !seen.contains(w) {
                seen.insert(w);
                stack.push(w);
            }
        }
    }
    Ok(true)
}

/// Verma–Pearl criterion: same skeleton and same immoralities.
pub fn markov_equivalent(g1: &Dag, g2: &Dag) -> Result<bool> {
    if g1.num_nodes() != g2.num_nodes() {
        return Err(Error::NodeCountMismatch(g1.num_nodes(), g2.num_nodes()));
    }
    Ok(g1.skeleton() == g2.skeleton() && g1.immoralities() == g2.immoralities())
}

/// All DAGs Markov equivalent to `dag`, in canonical order.
///
/// Enumerates every orientation of the skeleton, so the cost is
/// `2^(#edges)`; bounded by [`MAX_CLASS_NODES`].
pub fn markov_equivalence_class(dag: &Dag) -> Result<Vec<Dag>> {
    let n = dag.num_nodes();
    if n > MAX_CLASS_NODES {
        return Err(Error::TooManyNodes(n, MAX_CLASS_NODES));
    }
    let skeleton: Vec<(usize, usize)> = dag.skeleton().into_iter().collect();
    let target = dag.immoralities();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << skeleton.len()) {
        let mut parents = vec![NodeSet::empty(); n];
        for (k, &(a, b)) in skeleton.iter().enumerate() {
            if mask & (1 << k) == 0 {
                parents[b].insert(a);
            } else {
                parents[a].insert(b);
            }
        }
        if let Ok(g) = Dag::from_parent_sets(parents) {
            if g.immoralities() == target {
                out.push(g);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// The DAGs attaining the minimum edge count, in input order.
pub fn minimal_edge_dags(dags: &[Dag]) -> Result<Vec<Dag>> {
    let min = dags
        .iter()
        .map(Dag::num_edges)
        .min()
        .ok_or(Error::Empty("minimal_edge_dags needs at least one DAG"))?;
    Ok(dags.iter().filter(|g| g.num_edges() == min).cloned().collect())
}

/// Every DAG on `n` labelled nodes (1, 3, 25, 543, 29281 for n = 1..5).
pub fn enumerate_dags(n: usize) -> Result<Vec<Dag>> {
    if n > MAX_ENUMERATION_NODES {
        return Err(Error::TooManyNodes(n, MAX_ENUMERATION_NODES));
    }
    if n == 0 {
        return Err(Error::Empty("graph needs at least one node"));
    }
    // Bits of the n*(n-1) off-diagonal adjacency entries.
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|p| (0..n).filter(move |&c| c != p).map(move |c| (p, c)))
        .collect();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << pairs.len()) {
        let mut parents = vec![NodeSet::empty(); n];
        let mut two_cycle = false;
        for (k, &(p, c)) in pairs.iter().enumerate() {
            if mask & (1 << k) != 0 {
                if parents[p].contains(c) {
                    two_cycle = true;
                    break;
                }
                parents[c].insert(p);
            }
        }
        if two_cycle {
            continue;
        }
        if topological_order(&parents).is_some() {
            out.push(Dag { parents });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[usize]) -> NodeSet {
        xs.iter().copied().collect()
    }

    fn chain() -> Dag {
        Dag::new(3, &[(0, 1), (1, 2)]).unwrap()
    }

    fn diamond() -> Dag {
        Dag::new(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap()
    }

    #[test]
    fn parents_of_chain_and_diamond() {
        assert_eq!(parents(&chain(), 1).unwrap(), set(&[0]));
        assert_eq!(parents(&chain(), 0).unwrap(), NodeSet::empty());
        assert_eq!(parents(&diamond(), 3).unwrap(), set(&[1, 2]));
        assert!(matches!(
            parents(&chain(), 3),
            Err(Error::InvalidNode { index: 3, .. })
        ));
    }

    #[test]
    fn rejects_cycles_and_self_loops() {
        assert!(matches!(Dag::new(2, &[(0, 1), (1, 0)]), Err(Error::Cyclic)));
        assert!(matches!(
            Dag::new(3, &[(0, 1), (1, 2), (2, 0)]),
            Err(Error::Cyclic)
        ));
        assert!(matches!(Dag::new(2, &[(1, 1)]), Err(Error::SelfLoop(1))));
        assert!(Dag::new(2, &[(0, 2)]).is_err());
    }

    #[test]
    fn d_separation_examples() {
        assert!(d_separated(&chain(), set(&[0]), set(&[2]), set(&[1])).unwrap());
        assert!(!d_separated(&chain(), set(&[0]), set(&[2]), set(&[])).unwrap());
        let collider = Dag::new(3, &[(0, 2), (1, 2)]).unwrap();
        assert!(!d_separated(&collider, set(&[0]), set(&[1]), set(&[2])).unwrap());
        assert!(d_separated(&collider, set(&[0]), set(&[1]), set(&[])).unwrap());
        assert!(d_separated(&diamond(), set(&[1]), set(&[2]), set(&[0])).unwrap());
        assert!(!d_separated(&diamond(), set(&[1]), set(&[2]), set(&[0, 3])).unwrap());
    }

    #[test]
    fn d_separation_rejects_overlap() {
        assert!(matches!(
            d_separated(&chain(), set(&[0]), set(&[0, 2]), set(&[])),
            Err(Error::OverlappingSets)
        ));
        assert!(matches!(
            d_separated(&chain(), set(&[0]), set(&[2]), set(&[2])),
            Err(Error::OverlappingSets)
        ));
    }

    #[test]
    fn markov_equivalence_examples() {
        let a = Dag::new(2, &[(0, 1)]).unwrap();
        let b = Dag::new(2, &[(1, 0)]).unwrap();
        assert!(markov_equivalent(&a, &b).unwrap());
        let collider = Dag::new(3, &[(0, 1), (2, 1)]).unwrap();
        assert!(!markov_equivalent(&chain(), &collider).unwrap());
        assert!(markov_equivalent(&diamond(), &diamond()).unwrap());
        assert!(markov_equivalent(&a, &chain()).is_err());
    }

    #[test]
    fn equivalence_classes() {
        let a = Dag::new(2, &[(0, 1)]).unwrap();
        let class = markov_equivalence_class(&a).unwrap();
        assert_eq!(class.len(), 2);
        assert!(class.contains(&Dag::new(2, &[(1, 0)]).unwrap()));

        let collider = Dag::new(3, &[(0, 1), (2, 1)]).unwrap();
        assert_eq!(markov_equivalence_class(&collider).unwrap(), vec![collider]);

        let class = markov_equivalence_class(&chain()).unwrap();
        let expected = vec![
            Dag::new(3, &[(0, 1), (1, 2)]).unwrap(),
            Dag::new(3, &[(1, 0), (1, 2)]).unwrap(),
            Dag::new(3, &[(1, 0), (2, 1)]).unwrap(),
        ];
        let mut expected = expected;
        expected.sort();
        assert_eq!(class, expected);

        let big = Dag::empty(7).unwrap();
        assert!(matches!(
            markov_equivalence_class(&big),
            Err(Error::TooManyNodes(7, 6))
        ));
    }

    #[test]
    fn equivalence_class_of_chain_matches_brute_force() {
        let all = enumerate_dags(3).unwrap();
        let brute: Vec<Dag> = all
            .into_iter()
            .filter(|g| markov_equivalent(g, &chain()).unwrap())
            .collect();
        let mut brute = brute;
        brute.sort();
        assert_eq!(brute, markov_equivalence_class(&chain()).unwrap());
    }

    #[test]
    fn dag_counts() {
        let counts: Vec<usize> = (1..=4).map(|n| enumerate_dags(n).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 3, 25, 543]);
    }

    #[test]
    fn minimal_edges() {
        let one = Dag::new(2, &[(0, 1)]).unwrap();
        let none = Dag::empty(2).unwrap();
        assert_eq!(
            minimal_edge_dags(&[one.clone(), none.clone()]).unwrap(),
            vec![none]
        );
        let rev = Dag::new(2, &[(1, 0)]).unwrap();
        assert_eq!(
            minimal_edge_dags(&[one.clone(), rev.clone()]).unwrap(),
            vec![one, rev]
        );
        assert!(minimal_edge_dags(&[]).is_err());
    }

    #[test]
    fn edge_list_round_trip() {
        let names: Vec<String> = ["X1", "X2", "X3", "X4"].iter().map(|s| s.to_string()).collect();
        let g = diamond();
        let text = g.to_edge_list(&names);
        assert_eq!(text, "X1 -> X2\nX1 -> X3\nX2 -> X4\nX3 -> X4\n");
        assert_eq!(Dag::parse_edge_list(&text, &names).unwrap(), g);
        assert!(Dag::parse_edge_list("X1 -> X2\nX2 -> X1\n", &names).is_err());
        assert!(Dag::parse_edge_list("X1 -> Q\n", &names).is_err());
        let dot = g.to_dot(&names);
        assert!(dot.contains("\"X1\" -> \"X2\";"));
    }

    #[test]
    fn subsets_enumerates_power_set() {
        let s = set(&[1, 3, 4]);
        let subs: Vec<NodeSet> = s.subsets().collect();
        assert_eq!(subs.len(), 8);
        assert!(subs.iter().all(|x| x.is_subset(s)));
        assert_eq!(NodeSet::empty().subsets().count(), 1);
    }
}
