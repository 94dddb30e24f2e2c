//! Treewidth: exact subset DP on a safely reduced kernel, plus cheap bounds.
//!
//! Before the DP, simplicial vertices are eliminated, and so are almost
//! simplicial vertices whose degree is at most the MMD lower bound. Both
//! rules preserve treewidth; the kernel components that remain go through
//! the `2^n` dynamic program `TW(S) = min_v max(TW(S - v), |Q(S - v, v)|)`.
//! The witness decomposition is built from the combined elimination order.

use std::collections::{BTreeSet, VecDeque};

use crate::error::{Cap, Error, Result};
use crate::structure::{Elem, GaifmanGraph};

/// Hard ceiling for the DP table regardless of configuration.
const DP_LIMIT: usize = 26;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeDecomposition {
    pub bags: Vec<BTreeSet<Elem>>,
    /// Rooted tree: `parent[t]` is `None` only for the root.
    pub parent: Vec<Option<usize>>,
}

impl TreeDecomposition {
    /// Largest bag size minus one; 0 for the empty decomposition.
    pub fn width(&self) -> usize {
        self.bags
            .iter()
            .map(|b| b.len())
            .max()
            .unwrap_or(1)
            .saturating_sub(1)
    }

    pub fn root(&self) -> Option<usize> {
        self.parent.iter().position(Option::is_none)
    }

    /// Checks the tree shape and conditions (C1)-(C3) against `g`.
    pub fn validate(&self, g: &GaifmanGraph) -> std::result::Result<(), String> {
        let t = self.bags.len();
        if self.parent.len() != t {
            return Err("bags/parent length mismatch".into());
        }
        let n = g.vertex_count();
        if t == 0 {
            return if n == 0 {
                Ok(())
            } else {
                Err("empty decomposition of a nonempty graph".into())
            };
        }
        if self.parent.iter().filter(|p| p.is_none()).count() != 1 {
            return Err("tree must have exactly one root".into());
        }
        // every node reaches the root without cycles
        for start in 0..t {
            let mut cur = start;
            let mut steps = 0;
            while let Some(p) = self.parent[cur] {
                if p >= t {
                    return Err(format!("node {cur} has invalid parent {p}"));
                }
                cur = p;
                steps += 1;
                if steps > t {
                    return Err("parent pointers contain a cycle".into());
                }
            }
        }
        // C1
        let covered: BTreeSet<Elem> = self.bags.iter().flatten().copied().collect();
        for v in 0..n as Elem {
            if !covered.contains(&v) {
                return Err(format!("(C1) vertex {v} is in no bag"));
            }
        }
        if covered.iter().any(|&v| v as usize >= n) {
            return Err("(C1) bag mentions a vertex outside the graph".into());
        }
        // C2
        for (u, v) in g.edges() {
            if !self.bags.iter().any(|b| b.contains(&u) && b.contains(&v)) {
                return Err(format!("(C2) edge {{{u},{v}}} is in no bag"));
            }
        }
        // C3: nodes holding v form a connected subtree, i.e. exactly one of
        // them has its parent outside the set
        for v in 0..n as Elem {
            let tops = (0..t)
                .filter(|&i| self.bags[i].contains(&v))
                .filter(|&i| match self.parent[i] {
                    None => true,
                    Some(p) => !self.bags[p].contains(&v),
                })
                .count();
            if tops != 1 {
                return Err(format!("(C3) bags containing {v} are not connected"));
            }
        }
        Ok(())
    }
}

fn adjacency(g: &GaifmanGraph) -> Vec<BTreeSet<Elem>> {
    (0..g.vertex_count() as Elem)
        .map(|v| g.neighbors(v).clone())
        .collect()
}

/// Width of an elimination order: largest number of later neighbours in the
/// filled graph.
pub fn elimination_width(g: &GaifmanGraph, order: &[Elem]) -> usize {
    from_elimination_order(g, order).width()
}

/// Tree decomposition from a complete elimination order.
pub fn from_elimination_order(g: &GaifmanGraph, order: &[Elem]) -> TreeDecomposition {
    let n = g.vertex_count();
    assert_eq!(order.len(), n, "order must list every vertex once");
    let mut pos = vec![usize::MAX; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v as usize] = i;
    }
    let mut adj = adjacency(g);
    let mut bags = Vec::with_capacity(n);
    let mut parent_vertex: Vec<Option<Elem>> = Vec::with_capacity(n);
    for &v in order {
        let later: Vec<Elem> = adj[v as usize]
            .iter()
            .copied()
            .filter(|&w| pos[w as usize] > pos[v as usize])
            .collect();
        for (i, &a) in later.iter().enumerate() {
            for &b in &later[i + 1..] {
                adj[a as usize].insert(b);
                adj[b as usize].insert(a);
            }
        }
        let mut bag: BTreeSet<Elem> = later.iter().copied().collect();
        bag.insert(v);
        bags.push(bag);
        parent_vertex.push(later.iter().copied().min_by_key(|&w| pos[w as usize]));
    }
    let mut parent: Vec<Option<usize>> = parent_vertex.iter().map(|p| p.map(|w| pos[w as usize])).collect();
    let roots: Vec<usize> = (0..n).filter(|&i| parent[i].is_none()).collect();
    if let Some((&first, rest)) = roots.split_first() {
        for &r in rest {
            parent[r] = Some(first);
        }
    }
    TreeDecomposition { bags, parent }
}

fn is_clique(adj: &[BTreeSet<Elem>], vs: &[Elem]) -> bool {
    vs.iter()
        .enumerate()
        .all(|(i, &a)| vs[i + 1..].iter().all(|b| adj[a as usize].contains(b)))
}

fn eliminate(adj: &mut [BTreeSet<Elem>], v: Elem) {
    let nb: Vec<Elem> = adj[v as usize].iter().copied().collect();
    for (i, &a) in nb.iter().enumerate() {
        adj[a as usize].remove(&v);
        for &b in &nb[i + 1..] {
            adj[a as usize].insert(b);
            adj[b as usize].insert(a);
        }
    }
    adj[v as usize].clear();
}

/// Maximum over the min-degree deletion sequence of the minimum degree.
pub fn mmd_lower_bound(g: &GaifmanGraph) -> usize {
    let mut adj = adjacency(g);
    let mut alive: BTreeSet<Elem> = (0..g.vertex_count() as Elem).collect();
    let mut best = 0;
    while let Some(&v) = alive.iter().min_by_key(|&&v| (adj[v as usize].len(), v)) {
        best = best.max(adj[v as usize].len());
        for w in std::mem::take(&mut adj[v as usize]) {
            adj[w as usize].remove(&v);
        }
        alive.remove(&v);
    }
    best
}

/// Greedy min-fill elimination order.
pub fn min_fill_order(g: &GaifmanGraph) -> Vec<Elem> {
    let mut adj = adjacency(g);
    let mut alive: BTreeSet<Elem> = (0..g.vertex_count() as Elem).collect();
    let mut order = Vec::with_capacity(alive.len());
    while !alive.is_empty() {
        let v = *alive
            .iter()
            .min_by_key(|&&v| {
                let nb: Vec<Elem> = adj[v as usize].iter().copied().collect();
                let mut fill = 0usize;
                for (i, &a) in nb.iter().enumerate() {
                    for b in &nb[i + 1..] {
                        if !adj[a as usize].contains(b) {
                            fill += 1;
                        }
                    }
                }
                (fill, nb.len(), v)
            })
            .expect("nonempty");
        eliminate(&mut adj, v);
        alive.remove(&v);
        order.push(v);
    }
    order
}

/// `(lower, upper)` with `lower <= tw(g) <= upper`: MMD and min-fill.
pub fn treewidth_bounds(g: &GaifmanGraph) -> (usize, usize) {
    let lower = mmd_lower_bound(g);
    let upper = elimination_width(g, &min_fill_order(g));
    (lower, upper.max(lower))
}

/// Eliminates vertices by the simplicial / almost-simplicial rules.
/// Returns the eliminated prefix and the remaining adjacency.
fn reduce(g: &GaifmanGraph) -> (Vec<Elem>, Vec<BTreeSet<Elem>>, BTreeSet<Elem>) {
    let low = mmd_lower_bound(g);
    let mut adj = adjacency(g);
    let mut alive: BTreeSet<Elem> = (0..g.vertex_count() as Elem).collect();
    let mut prefix = Vec::new();
    loop {
        let mut pick = None;
        for &v in &alive {
            let nb: Vec<Elem> = adj[v as usize].iter().copied().collect();
            if is_clique(&adj, &nb) {
                pick = Some(v);
                break;
            }
        }
        if pick.is_none() {
            'outer: for &v in &alive {
                let nb: Vec<Elem> = adj[v as usize].iter().copied().collect();
                if nb.len() > low {
                    continue;
                }
                for skip in 0..nb.len() {
                    let rest: Vec<Elem> = nb
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != skip)
                        .map(|(_, &w)| w)
                        .collect();
                    if is_clique(&adj, &rest) {
                        pick = Some(v);
                        break 'outer;
                    }
                }
            }
        }
        let Some(v) = pick else { break };
        eliminate(&mut adj, v);
        alive.remove(&v);
        prefix.push(v);
    }
    (prefix, adj, alive)
}

/// Exact DP on one component (vertex list `vs`, ≤ DP_LIMIT vertices).
/// Returns an optimal elimination order of `vs`.
fn dp_order(adj: &[BTreeSet<Elem>], vs: &[Elem]) -> Vec<Elem> {
    let k = vs.len();
    let local = |v: Elem| vs.binary_search(&v).expect("vertex in component");
    let masks: Vec<u32> = vs
        .iter()
        .map(|&v| adj[v as usize].iter().fold(0u32, |m, &w| m | (1u32 << local(w))))
        .collect();
    let q = |s: u32, v: usize| -> u32 {
        let mut inside = 1u32 << v;
        let mut reach = masks[v];
        loop {
            let new = reach & s & !inside;
            if new == 0 {
                break;
            }
            inside |= new;
            let mut bits = new;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                reach |= masks[b];
            }
        }
        (reach & !s & !(1u32 << v)).count_ones()
    };
    let full: u32 = if k == 32 { u32::MAX } else { (1u32 << k) - 1 };
    let mut tw = vec![u8::MAX; 1usize << k];
    tw[0] = 0;
    for s in 1..=full {
        let mut best = u8::MAX;
        let mut bits = s;
        while bits != 0 {
            let v = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let rest = s & !(1u32 << v);
            let sub = tw[rest as usize];
            if sub >= best {
                continue;
            }
            let val = sub.max(q(rest, v) as u8);
            best = best.min(val);
        }
        tw[s as usize] = best;
    }
    let mut order = VecDeque::with_capacity(k);
    let mut s = full;
    while s != 0 {
        let target = tw[s as usize];
        let mut bits = s;
        let v = loop {
            let v = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let rest = s & !(1u32 << v);
            if tw[rest as usize].max(q(rest, v) as u8) == target {
                break v;
            }
        };
        order.push_front(vs[v]);
        s &= !(1u32 << v);
    }
    order.into()
}

/// Exact treewidth with a witness decomposition. `cap` bounds the largest
/// kernel component handed to the exponential DP.
pub fn treewidth_exact(g: &GaifmanGraph, cap: usize) -> Result<(usize, TreeDecomposition)> {
    let (mut order, adj, alive) = reduce(g);
    if !alive.is_empty() {
        let mut kernel = GaifmanGraph::with_vertices(g.vertex_count());
        for &v in &alive {
            for &w in &adj[v as usize] {
                kernel.add_edge(v, w);
            }
        }
        let comps: Vec<Vec<Elem>> = kernel
            .components()
            .into_iter()
            .filter(|c| alive.contains(&c[0]))
            .collect();
        let largest = comps.iter().map(Vec::len).max().unwrap_or(0);
        check_kernel_cap(largest, cap)?;
        for comp in comps {
            order.extend(dp_order(&adj, &comp));
        }
    }
    let td = from_elimination_order(g, &order);
    Ok((td.width(), td))
}

fn check_kernel_cap(size: usize, cap: usize) -> Result<()> {
    if size > cap.min(DP_LIMIT) {
        return Err(Error::cap(Cap::Universe, size, cap.min(DP_LIMIT)));
    }
    Ok(())
}

/// Exact width when within the cap, otherwise the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Width {
    Exact { value: usize },
    Bounds { lower: usize, upper: usize },
}

impl Width {
    pub fn of(g: &GaifmanGraph, cap: usize) -> Width {
        match treewidth_exact(g, cap) {
            Ok((w, _)) => Width::Exact { value: w },
            Err(_) => {
                let (lower, upper) = treewidth_bounds(g);
                Width::Bounds { lower, upper }
            }
        }
    }

    pub fn exact(&self) -> Option<usize> {
        match *self {
            Width::Exact { value } => Some(value),
            Width::Bounds { lower, upper } if lower == upper => Some(lower),
            Width::Bounds { .. } => None,
        }
    }

    /// Upper end of the known range.
    pub fn upper(&self) -> usize {
        match *self {
            Width::Exact { value } => value,
            Width::Bounds { upper, .. } => upper,
        }
    }

    pub fn lower(&self) -> usize {
        match *self {
            Width::Exact { value } => value,
            Width::Bounds { lower, .. } => lower,
        }
    }
}

impl std::fmt::Display for Width {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Width::Exact { value } => write!(f, "{value}"),
            Width::Bounds { lower, upper } => write!(f, "[{lower}, {upper}]"),
        }
    }
}
