//! Canonical codes for conjunctive queries.
//!
//! Colour refinement over elements (an element's colour absorbs the colours
//! of every tuple it sits in, tagged with symbol and position), followed by
//! individualisation-refinement over the first non-singleton cell. The code
//! is the lexicographically least relabelled encoding over all leaves.
//! Branches whose individualised element is a twin of an already explored
//! element of the same cell (the transposition is an automorphism) are
//! skipped, which keeps stars, cliques and isolated elements cheap.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::structure::{ConjunctiveQuery, Elem, Structure, Ucq};

/// Canonical code: equal iff the queries are isomorphic (free set to free set).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalCode(pub Vec<u8>);

impl CanonicalCode {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    /// Short hex digest for display.
    pub fn short_hex(&self) -> String {
        // FNV-1a, display only
        let mut h: u64 = 0xcbf29ce484222325;
        for &b in &self.0 {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

// (symbol, position, tuple colours) for each occurrence of an element
type Incidence = (usize, usize, Vec<u32>);
type ColorSig = (u32, Vec<Incidence>);

struct Canon<'a> {
    s: &'a Structure,
    tuples: Vec<(usize, &'a [Elem])>,
    occ: Vec<Vec<usize>>,
    members: HashSet<(usize, &'a [Elem])>,
    best: Option<Vec<u32>>,
}

impl<'a> Canon<'a> {
    fn new(s: &'a Structure) -> Self {
        let tuples: Vec<(usize, &[Elem])> = s.tuples().map(|(r, t)| (r, t.as_slice())).collect();
        let mut occ = vec![Vec::new(); s.universe_size()];
        for (i, (_, t)) in tuples.iter().enumerate() {
            for &e in t.iter() {
                if occ[e as usize].last() != Some(&i) {
                    occ[e as usize].push(i);
                }
            }
        }
        let members = tuples.iter().copied().collect();
        Canon {
            s,
            tuples,
            occ,
            members,
            best: None,
        }
    }

    /// Refines `colors` to the coarsest stable partition; colours are dense
    /// ranks assigned by sorting, so the result is isomorphism-invariant.
    fn refine(&self, colors: &mut [u32]) {
        let n = colors.len();
        let mut classes = count_classes(colors);
        loop {
            let mut sigs: Vec<ColorSig> = Vec::with_capacity(n);
            for e in 0..n {
                let mut around: Vec<Incidence> = Vec::new();
                for &ti in &self.occ[e] {
                    let (r, t) = self.tuples[ti];
                    let cols: Vec<u32> = t.iter().map(|&x| colors[x as usize]).collect();
                    for (p, &x) in t.iter().enumerate() {
                        if x as usize == e {
                            around.push((r, p, cols.clone()));
                        }
                    }
                }
                around.sort_unstable();
                sigs.push((colors[e], around));
            }
            let mut sorted: Vec<&ColorSig> = sigs.iter().collect();
            sorted.sort();
            sorted.dedup();
            let rank: HashMap<&ColorSig, u32> =
                sorted.iter().enumerate().map(|(i, s)| (*s, i as u32)).collect();
            for e in 0..n {
                colors[e] = rank[&sigs[e]];
            }
            let now = count_classes(colors);
            if now == classes {
                return;
            }
            classes = now;
        }
    }

    fn is_twin(&self, u: Elem, w: Elem) -> bool {
        let swap = |x: Elem| {
            if x == u {
                w
            } else if x == w {
                u
            } else {
                x
            }
        };
        for &ti in self.occ[u as usize].iter().chain(&self.occ[w as usize]) {
            let (r, t) = self.tuples[ti];
            let img: Vec<Elem> = t.iter().map(|&x| swap(x)).collect();
            if !self.members.contains(&(r, img.as_slice())) {
                return false;
            }
        }
        true
    }

    fn leaf_code(&self, colors: &[u32], free: &BTreeSet<Elem>) -> Vec<u32> {
        let mut code = vec![self.s.universe_size() as u32, free.len() as u32];
        let mut fl: Vec<u32> = free.iter().map(|&e| colors[e as usize]).collect();
        fl.sort_unstable();
        code.extend(fl);
        for r in 0..self.s.signature().len() {
            let mut rows: Vec<Vec<u32>> = self
                .s
                .relation(r)
                .iter()
                .map(|t| t.iter().map(|&e| colors[e as usize]).collect())
                .collect();
            rows.sort_unstable();
            code.push(rows.len() as u32);
            for row in rows {
                code.extend(row);
            }
        }
        code
    }

    fn search(&mut self, colors: Vec<u32>, free: &BTreeSet<Elem>) {
        let n = colors.len();
        let mut cells: HashMap<u32, Vec<Elem>> = HashMap::new();
        for (e, &c) in colors.iter().enumerate() {
            cells.entry(c).or_default().push(e as Elem);
        }
        let target = cells.iter().filter(|(_, v)| v.len() > 1).map(|(&c, _)| c).min();
        let Some(target) = target else {
            let code = self.leaf_code(&colors, free);
            if self.best.as_ref().is_none_or(|b| code < *b) {
                self.best = Some(code);
            }
            return;
        };
        let cell = cells.remove(&target).expect("present");
        let mut tried: Vec<Elem> = Vec::new();
        for &v in &cell {
            if tried.iter().any(|&u| self.is_twin(u, v)) {
                continue;
            }
            tried.push(v);
            // individualise v: it keeps rank `target`, the rest of its cell moves up
            let mut next: Vec<u32> = colors
                .iter()
                .enumerate()
                .map(|(e, &c)| {
                    let c2 = c * 2;
                    if c > target || (c == target && e as Elem != v) {
                        c2 + 1
                    } else {
                        c2
                    }
                })
                .collect();
            densify(&mut next);
            debug_assert_eq!(next.len(), n);
            self.refine(&mut next);
            self.search(next, free);
        }
    }
}

fn count_classes(colors: &[u32]) -> usize {
    colors.iter().collect::<HashSet<_>>().len()
}

fn densify(colors: &mut [u32]) {
    let mut vals: Vec<u32> = colors.to_vec();
    vals.sort_unstable();
    vals.dedup();
    for c in colors.iter_mut() {
        *c = vals.binary_search(c).expect("present") as u32;
    }
}

fn encode(s: &Structure, body: Vec<u32>) -> CanonicalCode {
    let mut out = Vec::new();
    for sym in s.signature().symbols() {
        out.extend_from_slice(sym.name.as_bytes());
        out.push(b'/');
        out.extend_from_slice(sym.arity.to_string().as_bytes());
        out.push(b';');
    }
    out.push(b'|');
    for x in body {
        out.extend_from_slice(&x.to_be_bytes());
    }
    CanonicalCode(out)
}

fn canonical_body(s: &Structure, free: &BTreeSet<Elem>) -> Vec<u32> {
    let mut canon = Canon::new(s);
    let mut colors: Vec<u32> = s
        .elements()
        .map(|e| if free.contains(&e) { 0 } else { 1 })
        .collect();
    densify(&mut colors);
    canon.refine(&mut colors);
    canon.search(colors, free);
    canon.best.unwrap_or_default()
}

/// Isomorphism-invariant code of a conjunctive query: codes agree iff there
/// is a structure isomorphism mapping the free set onto the free set.
pub fn canonical_form(q: &ConjunctiveQuery) -> CanonicalCode {
    encode(q.body(), canonical_body(q.body(), q.free()))
}

/// Code of a bare structure (no free elements distinguished).
pub fn structure_code(s: &Structure) -> CanonicalCode {
    encode(s, canonical_body(s, &BTreeSet::new()))
}

/// Code of a UCQ up to renaming of variables, keeping disjunct order: the
/// disjuncts are laid over one universe with symbol `R` of disjunct `i`
/// renamed to `R#i`.
pub fn ucq_code(psi: &Ucq) -> CanonicalCode {
    use crate::structure::{Signature, Symbol};
    let mut symbols = Vec::new();
    for i in 0..psi.len() {
        for s in psi.signature().symbols() {
            symbols.push(Symbol::new(format!("{}#{}", s.name, i + 1), s.arity));
        }
    }
    let sig = Signature::new(symbols).expect("distinct tagged names");
    let mut tagged = Structure::new(sig);
    for f in psi.free() {
        tagged.add_element(f);
    }
    for (i, d) in psi.disjuncts().iter().enumerate() {
        for n in d.names() {
            tagged.add_element(n);
        }
        for (r, t) in d.tuples() {
            let name = format!("{}#{}", d.signature().symbols()[r].name, i + 1);
            let args: Vec<&str> = t.iter().map(|&e| d.name(e)).collect();
            tagged.insert_fact(&name, &args).expect("tagged symbol exists");
        }
    }
    let free: BTreeSet<Elem> = psi
        .free()
        .iter()
        .map(|f| tagged.element(f).expect("added"))
        .collect();
    let mut code = encode(&tagged, canonical_body(&tagged, &free));
    code.0.extend_from_slice(format!("#l={}", psi.len()).as_bytes());
    code
}
