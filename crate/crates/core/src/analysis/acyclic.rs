//! α-acyclicity via GYO ear removal, with the join forest it produces.

use std::collections::BTreeSet;

use crate::structure::{Elem, Structure};

/// Join forest over hyperedges. `order` lists edges children-first (the ear
/// removal order); `parent[e]` is the edge `e` was attached to, `None` for roots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinForest {
    pub parent: Vec<Option<usize>>,
    pub order: Vec<usize>,
}

impl JoinForest {
    pub fn roots(&self) -> impl Iterator<Item = usize> + '_ {
        self.order.iter().copied().filter(|&e| self.parent[e].is_none())
    }

    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.parent.len()];
        for &e in &self.order {
            if let Some(p) = self.parent[e] {
                ch[p].push(e);
            }
        }
        ch
    }
}

/// GYO reduction. Returns the join forest if the hypergraph is α-acyclic.
///
/// An edge is an ear when every vertex it shares with the remaining edges lies
/// in one other remaining edge (its witness). Ears are removed in index order.
pub fn gyo(edges: &[BTreeSet<Elem>]) -> Option<JoinForest> {
    let m = edges.len();
    let mut alive = vec![true; m];
    let mut parent = vec![None; m];
    let mut order = Vec::with_capacity(m);
    let mut remaining = m;
    while remaining > 0 {
        let mut progress = false;
        for e in 0..m {
            if !alive[e] {
                continue;
            }
            let shared: Vec<Elem> = edges[e]
                .iter()
                .copied()
                .filter(|v| (0..m).any(|f| f != e && alive[f] && edges[f].contains(v)))
                .collect();
            let witness = if shared.is_empty() {
                None
            } else {
                match (0..m).find(|&f| f != e && alive[f] && shared.iter().all(|v| edges[f].contains(v))) {
                    Some(f) => Some(f),
                    None => continue,
                }
            };
            alive[e] = false;
            parent[e] = witness;
            order.push(e);
            remaining -= 1;
            progress = true;
        }
        if !progress {
            return None;
        }
    }
    Some(JoinForest { parent, order })
}

/// Hyperedges of a structure: the element sets of its tuples, deduplicated.
pub fn hyperedges(s: &Structure) -> Vec<BTreeSet<Elem>> {
    let set: BTreeSet<BTreeSet<Elem>> = s.tuples().map(|(_, t)| t.iter().copied().collect()).collect();
    set.into_iter().collect()
}

/// Acyclicity: Gaifman forest for arity ≤ 2, GYO otherwise.
pub fn is_acyclic(s: &Structure) -> bool {
    if s.max_arity() <= 2 {
        s.gaifman_graph().is_forest()
    } else {
        gyo(&hyperedges(s)).is_some()
    }
}

pub fn is_alpha_acyclic(s: &Structure) -> bool {
    gyo(&hyperedges(s)).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[Elem]) -> BTreeSet<Elem> {
        v.iter().copied().collect()
    }

    #[test]
    fn single_ternary_tuple_is_acyclic() {
        let s = Structure::from_facts([("R", vec!["a", "b", "c"])]).unwrap();
        assert!(is_acyclic(&s));
    }

    #[test]
    fn triangle_of_ternary_edges_is_cyclic() {
        let e = vec![set(&[0, 1, 5]), set(&[1, 2, 6]), set(&[2, 0, 7])];
        assert!(gyo(&e).is_none());
        // covering the triangle by one big edge makes it acyclic
        let mut e2 = e.clone();
        e2.push(set(&[0, 1, 2]));
        assert!(gyo(&e2).is_some());
    }

    #[test]
    fn join_forest_has_running_intersection() {
        let e = vec![set(&[0, 1]), set(&[1, 2]), set(&[2, 3]), set(&[5])];
        let jf = gyo(&e).unwrap();
        assert_eq!(jf.order.len(), 4);
        assert_eq!(jf.roots().count(), 2);
        for (child, p) in jf.parent.iter().enumerate() {
            if let Some(p) = *p {
                // shared vertices of child with anything later lie in the parent
                let pos = jf.order.iter().position(|&x| x == child).unwrap();
                for &later in &jf.order[pos + 1..] {
                    for v in e[child].intersection(&e[later]) {
                        assert!(e[p].contains(v));
                    }
                }
            }
        }
    }

    #[test]
    fn four_cycle_is_cyclic() {
        let s = Structure::from_facts([
            ("E", vec!["a", "b"]),
            ("E", vec!["b", "c"]),
            ("E", vec!["c", "d"]),
            ("E", vec!["d", "a"]),
        ])
        .unwrap();
        assert!(!is_acyclic(&s));
        assert!(!is_alpha_acyclic(&s));
    }
}
