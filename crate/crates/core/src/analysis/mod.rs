//! Structural analysis of single conjunctive queries.

pub mod acyclic;
pub mod minimal;
pub mod treewidth;

use std::collections::BTreeSet;

use serde::Serialize;

use crate::caps::Caps;
use crate::error::Result;
use crate::structure::{ConjunctiveQuery, Elem, GaifmanGraph};

pub use acyclic::{gyo, is_acyclic, JoinForest};
pub use minimal::{counting_core, is_counting_minimal};
pub use treewidth::{treewidth_bounds, treewidth_exact, TreeDecomposition, Width};

/// G[X] plus an edge between free variables adjacent to a common connected
/// component of G[Y]. Vertices are the free elements in index order.
pub fn contract(q: &ConjunctiveQuery) -> GaifmanGraph {
    let g = q.body().gaifman_graph();
    let free: Vec<Elem> = q.free().iter().copied().collect();
    let pos = |e: Elem| free.binary_search(&e).ok();
    let mut out = GaifmanGraph::new(free.iter().map(|&e| q.body().name(e).to_string()).collect());
    for (u, v) in g.edges() {
        if let (Some(a), Some(b)) = (pos(u), pos(v)) {
            out.add_edge(a as Elem, b as Elem);
        }
    }
    let quantified: BTreeSet<Elem> = q.quantified().into_iter().collect();
    let gy = g.induced(&quantified);
    let qlist: Vec<Elem> = quantified.iter().copied().collect();
    for comp in gy.components() {
        let mut touching = BTreeSet::new();
        for &local in &comp {
            let y = qlist[local as usize];
            for &w in g.neighbors(y) {
                if let Some(p) = pos(w) {
                    touching.insert(p as Elem);
                }
            }
        }
        let t: Vec<Elem> = touching.into_iter().collect();
        for (i, &a) in t.iter().enumerate() {
            for &b in &t[i + 1..] {
                out.add_edge(a, b);
            }
        }
    }
    out
}

/// Maximum number of free Gaifman neighbours of a quantified variable.
pub fn degree_of_freedom(q: &ConjunctiveQuery) -> usize {
    let g = q.body().gaifman_graph();
    q.quantified()
        .into_iter()
        .map(|y| g.neighbors(y).iter().filter(|&&w| q.is_free(w)).count())
        .max()
        .unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    PolyTime,
    Hard,
}

/// Per-field outcome: the value, or why it could not be computed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Field<T> {
    Value(T),
    Error { error: String },
}

impl<T> Field<T> {
    fn from(r: Result<T>) -> Self {
        match r {
            Ok(v) => Field::Value(v),
            Err(e) => Field::Error { error: e.to_string() },
        }
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            Field::Value(v) => Some(v),
            Field::Error { .. } => None,
        }
    }
}

/// Report on one conjunctive query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CqReport {
    pub universe: usize,
    pub free: Vec<String>,
    pub acyclic: bool,
    pub treewidth: Width,
    pub contract_treewidth: Width,
    pub is_minimal: Field<bool>,
    /// Core as a list of facts plus its free variables.
    pub core: Field<CoreSummary>,
    pub core_treewidth: Field<Width>,
    pub core_contract_treewidth: Field<Width>,
    pub self_join_free: bool,
    pub degree_of_freedom: usize,
    pub bound: Option<usize>,
    pub classification: Option<Classification>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoreSummary {
    pub free: Vec<String>,
    pub universe: Vec<String>,
    pub atoms: Vec<String>,
}

impl CoreSummary {
    pub fn of(q: &ConjunctiveQuery) -> Self {
        let b = q.body();
        let atoms = b
            .tuples()
            .map(|(r, t)| {
                let args: Vec<&str> = t.iter().map(|&e| b.name(e)).collect();
                format!("{}({})", b.signature().symbols()[r].name, args.join(", "))
            })
            .collect();
        CoreSummary {
            free: q.free_names().into_iter().map(String::from).collect(),
            universe: b.names().to_vec(),
            atoms,
        }
    }
}

/// Analyses `q`. With `bound = Some(b)`, the query is classified PolyTime
/// iff the treewidths of its #core and of the core's contract are both ≤ b.
pub fn classify_cq(q: &ConjunctiveQuery, caps: &Caps, bound: Option<usize>) -> CqReport {
    let g = q.body().gaifman_graph();
    let treewidth = Width::of(&g, caps.max_universe);
    let contract_treewidth = Width::of(&contract(q), caps.max_universe);
    let core = counting_core(q, caps);
    let is_minimal = Field::from(is_counting_minimal(q, caps));
    let (core_tw, core_ctw) = match &core {
        Ok(c) => (
            Field::Value(Width::of(&c.body().gaifman_graph(), caps.max_universe)),
            Field::Value(Width::of(&contract(c), caps.max_universe)),
        ),
        Err(e) => (
            Field::Error { error: e.to_string() },
            Field::Error { error: e.to_string() },
        ),
    };
    let classification = bound.and_then(|b| match (core_tw.value(), core_ctw.value()) {
        (Some(a), Some(c)) => {
            if a.upper() <= b && c.upper() <= b {
                Some(Classification::PolyTime)
            } else if a.lower() > b || c.lower() > b {
                Some(Classification::Hard)
            } else {
                None
            }
        }
        _ => None,
    });
    CqReport {
        universe: q.body().universe_size(),
        free: q.free_names().into_iter().map(String::from).collect(),
        acyclic: is_acyclic(q.body()),
        treewidth,
        contract_treewidth,
        is_minimal,
        core: Field::from(core.map(|c| CoreSummary::of(&c))),
        core_treewidth: core_tw,
        core_contract_treewidth: core_ctw,
        self_join_free: q.body().is_self_join_free(),
        degree_of_freedom: degree_of_freedom(q),
        bound,
        classification,
    }
}
