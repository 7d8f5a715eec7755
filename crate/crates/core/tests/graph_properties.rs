mod common;

use std::collections::BTreeSet;

use anmdag::graph::{
    d_separated, enumerate_dags, markov_equivalence_class, markov_equivalent, minimal_edge_dags, Dag, NodeSet,
};
use common::{all_small_dags, d_separated_by_paths, disjoint_triples};

fn separations(g: &Dag) -> BTreeSet<(NodeSet, NodeSet, NodeSet)> {
    disjoint_triples(g.num_nodes())
        .into_iter()
        .filter(|&(a, b, s)| d_separated(g, a, b, s).unwrap())
        .collect()
}

#[test]
fn d_separation_matches_path_enumeration() {
    for g in all_small_dags(4) {
        for (a, b, s) in disjoint_triples(g.num_nodes()) {
            assert_eq!(
                d_separated(&g, a, b, s).unwrap(),
                d_separated_by_paths(&g, a, b, s),
                "{:?} A={a:?} B={b:?} S={s:?}",
                g.edges()
            );
        }
    }
}

#[test]
fn d_separation_is_symmetric() {
    for g in all_small_dags(4) {
        for (a, b, s) in disjoint_triples(g.num_nodes()) {
            assert_eq!(d_separated(&g, a, b, s).unwrap(), d_separated(&g, b, a, s).unwrap());
        }
    }
}

#[test]
fn removing_an_edge_keeps_every_separation() {
    for g in all_small_dags(4) {
        let before = separations(&g);
        for (p, c) in g.edges() {
            let rest: Vec<_> = g.edges().into_iter().filter(|&e| e != (p, c)).collect();
            let h = Dag::new(g.num_nodes(), &rest).unwrap();
            let after = separations(&h);
            assert!(before.is_subset(&after), "dropping {p}->{c} from {:?}", g.edges());
        }
    }
}

#[test]
fn markov_equivalence_is_equality_of_separations() {
    for d in 1..=4 {
        let dags = enumerate_dags(d).unwrap();
        let sigs: Vec<_> = dags.iter().map(separations).collect();
        for (g, sg) in dags.iter().zip(&sigs) {
            for (h, sh) in dags.iter().zip(&sigs) {
                assert_eq!(markov_equivalent(g, h).unwrap(), sg == sh);
            }
        }
    }
}

#[test]
fn equivalence_classes_partition_the_dags() {
    let dags = enumerate_dags(4).unwrap();
    let mut seen = BTreeSet::new();
    let mut classes = 0;
    for g in &dags {
        let class = markov_equivalence_class(g).unwrap();
        assert!(class.contains(g));
        for h in &class {
            assert!(markov_equivalent(g, h).unwrap());
            assert_eq!(markov_equivalence_class(h).unwrap(), class);
        }
        let members = dags.iter().filter(|h| markov_equivalent(g, h).unwrap()).count();
        assert_eq!(class.len(), members);
        if seen.insert(class) {
            classes += 1;
        }
    }
    // Number of Markov equivalence classes of labelled DAGs on 4 nodes.
    assert_eq!(classes, 185);
}

#[test]
fn equivalent_dags_have_equal_edge_counts() {
    for g in enumerate_dags(4).unwrap() {
        let class = markov_equivalence_class(&g).unwrap();
        assert_eq!(minimal_edge_dags(&class).unwrap(), class);
    }
}

#[test]
fn five_node_enumeration() {
    let dags = enumerate_dags(5).unwrap();
    assert_eq!(dags.len(), 29281);
    let distinct: BTreeSet<_> = dags.iter().collect();
    assert_eq!(distinct.len(), dags.len());
}
