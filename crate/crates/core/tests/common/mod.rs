#![allow(dead_code)]

use anmdag::graph::{enumerate_dags, Dag, NodeSet};

/// d-separation by enumerating every simple path of the skeleton.
pub fn d_separated_by_paths(dag: &Dag, a: NodeSet, b: NodeSet, s: NodeSet) -> bool {
    let d = dag.num_nodes();
    let in_s_or_desc: Vec<bool> = (0..d)
        .map(|v| s.contains(v) || !dag.descendants(v).unwrap().is_disjoint(s))
        .collect();
    let mut path = Vec::new();
    for start in a.iter() {
        path.clear();
        path.push(start);
        if active_path_exists(dag, b, s, &in_s_or_desc, &mut path) {
            return false;
        }
    }
    true
}

fn active_path_exists(dag: &Dag, b: NodeSet, s: NodeSet, opened: &[bool], path: &mut Vec<usize>) -> bool {
    let last = *path.last().unwrap();
    if path.len() > 1 && b.contains(last) {
        return true;
    }
    for next in 0..dag.num_nodes() {
        if !dag.adjacent(last, next) || path.contains(&next) {
            continue;
        }
        if path.len() >= 2 {
            let prev = path[path.len() - 2];
            let collider = dag.has_edge(prev, last) && dag.has_edge(next, last);
            let blocked = if collider { !opened[last] } else { s.contains(last) };
            if blocked {
                continue;
            }
        }
        path.push(next);
        let found = active_path_exists(dag, b, s, opened, path);
        path.pop();
        if found {
            return true;
        }
    }
    false
}

/// Every `(A, B, S)` of pairwise disjoint sets with `A`, `B` nonempty.
pub fn disjoint_triples(d: usize) -> Vec<(NodeSet, NodeSet, NodeSet)> {
    let mut out = Vec::new();
    let total = 4usize.pow(d as u32);
    for code in 0..total {
        let (mut a, mut b, mut s) = (NodeSet::empty(), NodeSet::empty(), NodeSet::empty());
        let mut c = code;
        for v in 0..d {
            match c % 4 {
                1 => a.insert(v),
                2 => b.insert(v),
                3 => s.insert(v),
                _ => {}
            }
            c /= 4;
        }
        if !a.is_empty() && !b.is_empty() {
            out.push((a, b, s));
        }
    }
    out
}

pub fn all_small_dags(max_nodes: usize) -> Vec<Dag> {
    (1..=max_nodes).flat_map(|d| enumerate_dags(d).unwrap()).collect()
}

pub fn uniform_columns(seed: u64, d: usize, n: usize) -> Vec<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..d).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect()
}

pub fn gaussian_columns(seed: u64, d: usize, n: usize) -> Vec<Vec<f64>> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..d).map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()).collect()
}
