//! Relational structures over a finite signature.
//!
//! A [`Structure`] is used both as the body of a query and as a database.
//! Element names are interned: every element has a dense index ([`Elem`])
//! and all set operations work on indices.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};

/// Dense element index into a structure's universe.
pub type Elem = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol {
    pub name: String,
    pub arity: usize,
}

impl Symbol {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        Symbol {
            name: name.into(),
            arity,
        }
    }
}

/// Relation symbols with arities, kept sorted by name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Signature {
    symbols: Vec<Symbol>,
}

impl Signature {
    pub fn new<I: IntoIterator<Item = Symbol>>(symbols: I) -> Result<Self> {
        let mut symbols: Vec<Symbol> = symbols.into_iter().collect();
        symbols.sort();
        for s in &symbols {
            if s.arity == 0 {
                return Err(Error::InvalidStructure(format!(
                    "symbol `{}` has arity 0",
                    s.name
                )));
            }
        }
        for w in symbols.windows(2) {
            if w[0].name == w[1].name {
                if w[0].arity != w[1].arity {
                    return Err(Error::ArityMismatch {
                        symbol: w[0].name.clone(),
                        expected: w[0].arity,
                        found: w[1].arity,
                    });
                }
                return Err(Error::InvalidStructure(format!(
                    "duplicate symbol `{}`",
                    w[0].name
                )));
            }
        }
        Ok(Signature { symbols })
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.symbols.binary_search_by(|s| s.name.as_str().cmp(name)).ok()
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.index_of(name).map(|i| self.symbols[i].arity)
    }

    pub fn max_arity(&self) -> usize {
        self.symbols.iter().map(|s| s.arity).max().unwrap_or(0)
    }

    pub fn is_subset_of(&self, other: &Signature) -> bool {
        self.symbols.iter().all(|s| other.arity(&s.name) == Some(s.arity))
    }

    /// Symbols present in both signatures. Same name with different arity is an error.
    pub fn intersection(&self, other: &Signature) -> Result<Signature> {
        let mut out = Vec::new();
        for s in &self.symbols {
            match other.arity(&s.name) {
                Some(a) if a == s.arity => out.push(s.clone()),
                Some(a) => {
                    return Err(Error::ArityMismatch {
                        symbol: s.name.clone(),
                        expected: s.arity,
                        found: a,
                    })
                }
                None => {}
            }
        }
        Ok(Signature { symbols: out })
    }

    pub fn union(&self, other: &Signature) -> Result<Signature> {
        let mut out = self.symbols.clone();
        for s in &other.symbols {
            match self.arity(&s.name) {
                Some(a) if a == s.arity => {}
                Some(a) => {
                    return Err(Error::ArityMismatch {
                        symbol: s.name.clone(),
                        expected: a,
                        found: s.arity,
                    })
                }
                None => out.push(s.clone()),
            }
        }
        Signature::new(out)
    }
}

/// A finite relational structure.
#[derive(Debug, Clone)]
pub struct Structure {
    signature: Signature,
    names: Vec<String>,
    index: HashMap<String, Elem>,
    relations: Vec<BTreeSet<Vec<Elem>>>,
}

impl Structure {
    pub fn new(signature: Signature) -> Self {
        let relations = vec![BTreeSet::new(); signature.len()];
        Structure {
            signature,
            names: Vec::new(),
            index: HashMap::new(),
            relations,
        }
    }

    /// Builds a structure from `(symbol, [element names])` facts; the
    /// signature is inferred from the facts.
    pub fn from_facts<'a, I>(facts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, Vec<&'a str>)>,
    {
        let facts: Vec<_> = facts.into_iter().collect();
        let mut arities: HashMap<&str, usize> = HashMap::new();
        for (sym, args) in &facts {
            if let Some(&a) = arities.get(sym) {
                if a != args.len() {
                    return Err(Error::ArityMismatch {
                        symbol: sym.to_string(),
                        expected: a,
                        found: args.len(),
                    });
                }
            } else {
                arities.insert(sym, args.len());
            }
        }
        let sig = Signature::new(arities.into_iter().map(|(n, a)| Symbol::new(n, a)))?;
        let mut s = Structure::new(sig);
        for (sym, args) in facts {
            s.insert_fact(sym, &args)?;
        }
        Ok(s)
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn universe_size(&self) -> usize {
        self.names.len()
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> + '_ {
        0..self.names.len() as Elem
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, e: Elem) -> &str {
        &self.names[e as usize]
    }

    pub fn element(&self, name: &str) -> Option<Elem> {
        self.index.get(name).copied()
    }

    pub fn require_element(&self, name: &str) -> Result<Elem> {
        self.element(name)
            .ok_or_else(|| Error::UnknownElement(name.to_string()))
    }

    /// Adds an element (idempotent) and returns its index.
    pub fn add_element(&mut self, name: &str) -> Elem {
        if let Some(&e) = self.index.get(name) {
            return e;
        }
        let e = self.names.len() as Elem;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), e);
        e
    }

    /// Inserts `symbol(args...)`, adding unseen elements to the universe.
    pub fn insert_fact<S: AsRef<str>>(&mut self, symbol: &str, args: &[S]) -> Result<bool> {
        let idx = self
            .signature
            .index_of(symbol)
            .ok_or_else(|| Error::UnknownSymbol(symbol.to_string()))?;
        let tuple: Vec<Elem> = args.iter().map(|a| self.add_element(a.as_ref())).collect();
        self.insert_tuple(idx, tuple)
    }

    /// Inserts a tuple by symbol index over existing elements.
    pub fn insert_tuple(&mut self, symbol: usize, tuple: Vec<Elem>) -> Result<bool> {
        let sym = &self.signature.symbols[symbol];
        if tuple.len() != sym.arity {
            return Err(Error::ArityMismatch {
                symbol: sym.name.clone(),
                expected: sym.arity,
                found: tuple.len(),
            });
        }
        if let Some(&bad) = tuple.iter().find(|&&e| e as usize >= self.names.len()) {
            return Err(Error::UnknownElement(format!("#{bad}")));
        }
        Ok(self.relations[symbol].insert(tuple))
    }

    pub fn relation(&self, symbol: usize) -> &BTreeSet<Vec<Elem>> {
        &self.relations[symbol]
    }

    pub fn relation_by_name(&self, name: &str) -> Option<&BTreeSet<Vec<Elem>>> {
        self.signature.index_of(name).map(|i| &self.relations[i])
    }

    /// All tuples as `(symbol index, tuple)`.
    pub fn tuples(&self) -> impl Iterator<Item = (usize, &Vec<Elem>)> + '_ {
        self.relations
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |t| (i, t)))
    }

    pub fn tuple_count(&self) -> usize {
        self.relations.iter().map(|r| r.len()).sum()
    }

    /// `|tau| + |U| + sum_R |R| * arity(R)`.
    pub fn size(&self) -> usize {
        self.signature.len()
            + self.names.len()
            + self
                .relations
                .iter()
                .zip(self.signature.symbols())
                .map(|(r, s)| r.len() * s.arity)
                .sum::<usize>()
    }

    /// Largest arity among symbols that actually hold tuples.
    pub fn max_arity(&self) -> usize {
        self.relations
            .iter()
            .zip(self.signature.symbols())
            .filter(|(r, _)| !r.is_empty())
            .map(|(_, s)| s.arity)
            .max()
            .unwrap_or(0)
    }

    /// Every symbol holds at most one tuple.
    pub fn is_self_join_free(&self) -> bool {
        self.relations.iter().all(|r| r.len() <= 1)
    }

    /// Elements not occurring in any tuple.
    pub fn isolated_elements(&self) -> Vec<Elem> {
        let mut seen = vec![false; self.names.len()];
        for (_, t) in self.tuples() {
            for &e in t {
                seen[e as usize] = true;
            }
        }
        (0..self.names.len() as Elem)
            .filter(|&e| !seen[e as usize])
            .collect()
    }

    pub fn has_self_loop_atom(&self) -> bool {
        self.tuples().any(|(_, t)| {
            let mut s = t.clone();
            s.sort_unstable();
            s.windows(2).any(|w| w[0] == w[1])
        })
    }

    /// The same structure over a larger signature; new symbols are empty.
    pub fn extend_signature(&self, sig: &Signature) -> Result<Structure> {
        if !self.signature.is_subset_of(sig) {
            return Err(Error::SignatureMismatch(
                "target signature does not contain the structure's signature".into(),
            ));
        }
        let mut relations = vec![BTreeSet::new(); sig.len()];
        for (i, s) in self.signature.symbols().iter().enumerate() {
            let j = sig.index_of(&s.name).expect("checked subset");
            relations[j] = self.relations[i].clone();
        }
        Ok(Structure {
            signature: sig.clone(),
            names: self.names.clone(),
            index: self.index.clone(),
            relations,
        })
    }

    /// Applies an injective renaming of element names.
    pub fn rename<F: FnMut(&str) -> String>(&self, mut f: F) -> Result<Structure> {
        let mut out = Structure::new(self.signature.clone());
        for n in &self.names {
            let m = f(n);
            if out.element(&m).is_some() {
                return Err(Error::InvalidStructure(format!(
                    "renaming is not injective at `{m}`"
                )));
            }
            out.add_element(&m);
        }
        out.relations = self.relations.clone();
        Ok(out)
    }

    /// Restricts to `keep`, keeping the relative element order.
    pub fn induced(&self, keep: &BTreeSet<Elem>) -> Structure {
        let mut out = Structure::new(self.signature.clone());
        let mut map = vec![None; self.names.len()];
        for e in self.elements().filter(|e| keep.contains(e)) {
            map[e as usize] = Some(out.add_element(&self.names[e as usize]));
        }
        for (i, rel) in self.relations.iter().enumerate() {
            for t in rel {
                let image: Option<Vec<Elem>> = t.iter().map(|&e| map[e as usize]).collect();
                if let Some(image) = image {
                    out.relations[i].insert(image);
                }
            }
        }
        out
    }

    pub fn gaifman_graph(&self) -> GaifmanGraph {
        let mut g = GaifmanGraph::new(self.names.clone());
        for (_, t) in self.tuples() {
            for (i, &u) in t.iter().enumerate() {
                for &v in &t[i + 1..] {
                    g.add_edge(u, v);
                }
            }
        }
        g
    }

    fn name_view(&self) -> (BTreeSet<&str>, BTreeSet<(&str, Vec<&str>)>) {
        let universe = self.names.iter().map(String::as_str).collect();
        let tuples = self
            .tuples()
            .map(|(i, t)| {
                (
                    self.signature.symbols[i].name.as_str(),
                    t.iter().map(|&e| self.name(e)).collect(),
                )
            })
            .collect();
        (universe, tuples)
    }
}

/// Equality by names: same signature, same universe, same facts.
impl PartialEq for Structure {
    fn eq(&self, other: &Self) -> bool {
        self.signature == other.signature && self.name_view() == other.name_view()
    }
}

impl Eq for Structure {}

/// Union of two structures over the same signature, matching elements by name.
pub fn union_structures(a: &Structure, b: &Structure) -> Result<Structure> {
    if a.signature != b.signature {
        return Err(Error::SignatureMismatch(
            "union requires identical signatures".into(),
        ));
    }
    let mut out = a.clone();
    let map: Vec<Elem> = b.names.iter().map(|n| out.add_element(n)).collect();
    for (i, rel) in b.relations.iter().enumerate() {
        for t in rel {
            out.relations[i].insert(t.iter().map(|&e| map[e as usize]).collect());
        }
    }
    Ok(out)
}

/// Tensor (categorical) product. Pair `(u, v)` is named `t{u}_{v}` by indices.
pub fn tensor_product(a: &Structure, b: &Structure) -> Result<Structure> {
    let sig = a.signature.intersection(&b.signature)?;
    if sig.is_empty() {
        return Err(Error::SignatureMismatch(
            "tensor product needs at least one shared symbol".into(),
        ));
    }
    let mut out = Structure::new(sig.clone());
    let nb = b.universe_size() as Elem;
    for u in a.elements() {
        for v in b.elements() {
            out.add_element(&format!("t{u}_{v}"));
        }
    }
    for (k, s) in sig.symbols().iter().enumerate() {
        let ra = a.relation_by_name(&s.name).expect("in intersection");
        let rb = b.relation_by_name(&s.name).expect("in intersection");
        for ta in ra {
            for tb in rb {
                let t = ta.iter().zip(tb).map(|(&u, &v)| u * nb + v).collect();
                out.relations[k].insert(t);
            }
        }
    }
    Ok(out)
}

/// Substructure induced by the named elements.
pub fn induced_substructure<S: AsRef<str>>(s: &Structure, keep: &[S]) -> Result<Structure> {
    let keep = keep
        .iter()
        .map(|n| s.require_element(n.as_ref()))
        .collect::<Result<BTreeSet<_>>>()?;
    Ok(s.induced(&keep))
}

pub fn gaifman_graph(s: &Structure) -> GaifmanGraph {
    s.gaifman_graph()
}

/// A structure with a designated set of free elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConjunctiveQuery {
    body: Structure,
    free: BTreeSet<Elem>,
}

impl ConjunctiveQuery {
    pub fn new<S: AsRef<str>>(body: Structure, free: &[S]) -> Result<Self> {
        let free = free
            .iter()
            .map(|n| body.require_element(n.as_ref()))
            .collect::<Result<BTreeSet<_>>>()?;
        Ok(ConjunctiveQuery { body, free })
    }

    pub fn from_indices(body: Structure, free: BTreeSet<Elem>) -> Result<Self> {
        if let Some(&bad) = free.iter().find(|&&e| e as usize >= body.universe_size()) {
            return Err(Error::UnknownElement(format!("#{bad}")));
        }
        Ok(ConjunctiveQuery { body, free })
    }

    /// Every element is free.
    pub fn quantifier_free(body: Structure) -> Self {
        let free = body.elements().collect();
        ConjunctiveQuery { body, free }
    }

    pub fn body(&self) -> &Structure {
        &self.body
    }

    pub fn free(&self) -> &BTreeSet<Elem> {
        &self.free
    }

    pub fn is_free(&self, e: Elem) -> bool {
        self.free.contains(&e)
    }

    pub fn quantified(&self) -> Vec<Elem> {
        self.body.elements().filter(|e| !self.free.contains(e)).collect()
    }

    pub fn is_quantifier_free(&self) -> bool {
        self.free.len() == self.body.universe_size()
    }

    pub fn free_names(&self) -> Vec<&str> {
        self.free.iter().map(|&e| self.body.name(e)).collect()
    }

    pub fn into_body(self) -> Structure {
        self.body
    }
}

/// A union of conjunctive queries over one signature and one free set.
///
/// Quantified elements of different disjuncts are distinct by name, so the
/// disjunct universes pairwise intersect exactly in the free set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ucq {
    disjuncts: Vec<Structure>,
    free: Vec<String>,
}

impl Ucq {
    /// Free names missing from a disjunct are added to its universe.
    pub fn new(disjuncts: Vec<Structure>, free: Vec<String>) -> Result<Self> {
        let Some(first) = disjuncts.first() else {
            return Err(Error::precondition("a UCQ needs at least one disjunct"));
        };
        let sig = first.signature().clone();
        if disjuncts.iter().any(|d| d.signature() != &sig) {
            return Err(Error::SignatureMismatch(
                "all disjuncts must share one signature".into(),
            ));
        }
        let free_set: BTreeSet<&str> = free.iter().map(String::as_str).collect();
        if free_set.len() != free.len() {
            return Err(Error::precondition("duplicate free variable"));
        }
        let mut owner: HashMap<String, usize> = HashMap::new();
        let mut out = Vec::with_capacity(disjuncts.len());
        for (i, mut d) in disjuncts.into_iter().enumerate() {
            for n in &free {
                d.add_element(n);
            }
            for n in d.names() {
                if free_set.contains(n.as_str()) {
                    continue;
                }
                if let Some(j) = owner.insert(n.clone(), i) {
                    return Err(Error::precondition(format!(
                        "quantified variable `{n}` shared by disjuncts {} and {}",
                        j + 1,
                        i + 1
                    )));
                }
            }
            out.push(d);
        }
        Ok(Ucq { disjuncts: out, free })
    }

    /// Like [`Ucq::new`], but first lifts every disjunct to the union of all
    /// signatures and renames quantified names that clash across disjuncts.
    pub fn aligned(disjuncts: Vec<Structure>, free: Vec<String>) -> Result<Self> {
        let mut sig = Signature::default();
        for d in &disjuncts {
            sig = sig.union(d.signature())?;
        }
        let free_set: BTreeSet<&str> = free.iter().map(String::as_str).collect();
        let mut count: HashMap<String, usize> = HashMap::new();
        for d in &disjuncts {
            for n in d.names() {
                if !free_set.contains(n.as_str()) {
                    *count.entry(n.clone()).or_default() += 1;
                }
            }
        }
        let mut taken: BTreeSet<String> = disjuncts.iter().flat_map(|d| d.names().iter().cloned()).collect();
        let mut lifted = Vec::with_capacity(disjuncts.len());
        for (i, d) in disjuncts.iter().enumerate() {
            let d = d.extend_signature(&sig)?;
            let d = d.rename(|n| {
                if free_set.contains(n) || count.get(n).copied().unwrap_or(0) <= 1 {
                    return n.to_string();
                }
                let mut cand = format!("{n}_d{}", i + 1);
                while taken.contains(&cand) {
                    cand.push('_');
                }
                taken.insert(cand.clone());
                cand
            })?;
            lifted.push(d);
        }
        Ucq::new(lifted, free)
    }

    pub fn single(q: &ConjunctiveQuery) -> Result<Self> {
        let free = q.free_names().into_iter().map(String::from).collect();
        Ucq::new(vec![q.body().clone()], free)
    }

    pub fn disjuncts(&self) -> &[Structure] {
        &self.disjuncts
    }

    pub fn len(&self) -> usize {
        self.disjuncts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disjuncts.is_empty()
    }

    pub fn free(&self) -> &[String] {
        &self.free
    }

    pub fn signature(&self) -> &Signature {
        self.disjuncts[0].signature()
    }

    pub fn disjunct_query(&self, i: usize) -> ConjunctiveQuery {
        ConjunctiveQuery::new(self.disjuncts[i].clone(), &self.free).expect("free in every disjunct")
    }

    pub fn is_quantifier_free(&self) -> bool {
        self.disjuncts
            .iter()
            .all(|d| d.universe_size() == self.free.len())
    }

    pub fn max_arity(&self) -> usize {
        self.disjuncts.iter().map(|d| d.max_arity()).max().unwrap_or(0)
    }
}

/// Simple undirected graph on named vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaifmanGraph {
    names: Vec<String>,
    adj: Vec<BTreeSet<Elem>>,
}

impl GaifmanGraph {
    pub fn new(names: Vec<String>) -> Self {
        let adj = vec![BTreeSet::new(); names.len()];
        GaifmanGraph { names, adj }
    }

    /// Graph on vertices `0..n` named by their index.
    pub fn with_vertices(n: usize) -> Self {
        GaifmanGraph::new((0..n).map(|i| i.to_string()).collect())
    }

    pub fn from_edges(n: usize, edges: &[(Elem, Elem)]) -> Self {
        let mut g = GaifmanGraph::with_vertices(n);
        for &(u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    /// Ignores self-pairs.
    pub fn add_edge(&mut self, u: Elem, v: Elem) {
        if u != v {
            self.adj[u as usize].insert(v);
            self.adj[v as usize].insert(u);
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn neighbors(&self, v: Elem) -> &BTreeSet<Elem> {
        &self.adj[v as usize]
    }

    pub fn degree(&self, v: Elem) -> usize {
        self.adj[v as usize].len()
    }

    pub fn has_edge(&self, u: Elem, v: Elem) -> bool {
        self.adj[u as usize].contains(&v)
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    /// Edges `(u, v)` with `u < v`, in order.
    pub fn edges(&self) -> Vec<(Elem, Elem)> {
        let mut out = Vec::new();
        for (u, a) in self.adj.iter().enumerate() {
            for &v in a.range(u as Elem + 1..) {
                out.push((u as Elem, v));
            }
        }
        out
    }

    pub fn induced(&self, keep: &BTreeSet<Elem>) -> GaifmanGraph {
        let kept: Vec<Elem> = keep.iter().copied().collect();
        let mut map = vec![None; self.names.len()];
        for (i, &v) in kept.iter().enumerate() {
            map[v as usize] = Some(i as Elem);
        }
        let mut g = GaifmanGraph::new(kept.iter().map(|&v| self.names[v as usize].clone()).collect());
        for (u, v) in self.edges() {
            if let (Some(a), Some(b)) = (map[u as usize], map[v as usize]) {
                g.add_edge(a, b);
            }
        }
        g
    }

    /// Connected components as sorted vertex lists, ordered by least vertex.
    pub fn components(&self) -> Vec<Vec<Elem>> {
        let n = self.names.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut stack = vec![s as Elem];
            let mut comp = Vec::new();
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &w in &self.adj[v as usize] {
                    if !seen[w as usize] {
                        seen[w as usize] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_forest(&self) -> bool {
        self.edge_count() + self.components().len() == self.vertex_count()
    }

    /// Subgraph test on shared vertex indices.
    pub fn is_subgraph_of(&self, other: &GaifmanGraph) -> bool {
        self.vertex_count() <= other.vertex_count()
            && self.edges().into_iter().all(|(u, v)| other.has_edge(u, v))
    }
}
