//! Backtracking homomorphism search.
//!
//! Source elements are ordered greedily: pinned elements first, then a
//! caller-chosen prefix (e.g. free variables), then the rest. Inside each
//! group the next element is the one with most atoms linking it to already
//! placed elements, ties broken by smallest unary-consistent domain.
//! Candidates come from per-position hash indexes of the destination.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::structure::{Elem, Structure};

const UNSET: Elem = Elem::MAX;

struct Atom {
    rel: usize,
    vars: Vec<Elem>,
}

type ValueIndex<'a> = HashMap<Elem, Vec<&'a [Elem]>>;

/// Precomputed search over homomorphisms `src -> dst`.
pub struct HomSearch<'a> {
    dst: &'a Structure,
    atoms: Vec<Atom>,
    // dst relation -> position -> value -> tuples
    index: Vec<Vec<ValueIndex<'a>>>,
    members: Vec<HashSet<&'a [Elem]>>,
    order: Vec<Elem>,
    // atoms completed when order[level] is assigned
    checks: Vec<Vec<usize>>,
    // atoms containing order[level] with an earlier element
    anchors: Vec<Vec<(usize, usize)>>,
    domains: Vec<Vec<Elem>>,
    assign: Vec<Elem>,
    pinned_ok: bool,
}

impl<'a> HomSearch<'a> {
    /// `pin` fixes images of some source elements; `prefix` is placed right
    /// after the pinned elements in the search order.
    pub fn new(
        src: &Structure,
        dst: &'a Structure,
        pin: &[(Elem, Elem)],
        prefix: &BTreeSet<Elem>,
    ) -> Result<Self> {
        let mut rel_map = Vec::with_capacity(src.signature().len());
        for s in src.signature().symbols() {
            match dst.signature().index_of(&s.name) {
                Some(j) if dst.signature().symbols()[j].arity == s.arity => rel_map.push(j),
                Some(j) => {
                    return Err(Error::ArityMismatch {
                        symbol: s.name.clone(),
                        expected: s.arity,
                        found: dst.signature().symbols()[j].arity,
                    })
                }
                None => {
                    return Err(Error::SignatureMismatch(format!(
                        "symbol `{}` missing from target",
                        s.name
                    )))
                }
            }
        }
        let n = src.universe_size();
        let mut assign = vec![UNSET; n];
        for &(s, d) in pin {
            if s as usize >= n {
                return Err(Error::UnknownElement(format!("source #{s}")));
            }
            if d as usize >= dst.universe_size() {
                return Err(Error::UnknownElement(format!("target #{d}")));
            }
            if assign[s as usize] != UNSET && assign[s as usize] != d {
                return Err(Error::precondition("conflicting pins"));
            }
            assign[s as usize] = d;
        }
        let atoms: Vec<Atom> = src
            .tuples()
            .map(|(r, t)| Atom {
                rel: rel_map[r],
                vars: t.clone(),
            })
            .collect();

        let used: BTreeSet<usize> = atoms.iter().map(|a| a.rel).collect();
        let mut index = vec![Vec::new(); dst.signature().len()];
        let mut members = vec![HashSet::new(); dst.signature().len()];
        for &r in &used {
            let arity = dst.signature().symbols()[r].arity;
            let mut per_pos: Vec<HashMap<Elem, Vec<&[Elem]>>> = vec![HashMap::new(); arity];
            for t in dst.relation(r) {
                for (p, &v) in t.iter().enumerate() {
                    per_pos[p].entry(v).or_default().push(t.as_slice());
                }
                members[r].insert(t.as_slice());
            }
            index[r] = per_pos;
        }

        // Unary-consistent domains.
        let mut domains: Vec<Option<BTreeSet<Elem>>> = vec![None; n];
        for a in &atoms {
            for (p, &v) in a.vars.iter().enumerate() {
                let vals: BTreeSet<Elem> = index[a.rel][p].keys().copied().collect();
                domains[v as usize] = Some(match domains[v as usize].take() {
                    None => vals,
                    Some(d) => d.intersection(&vals).copied().collect(),
                });
            }
        }
        let all: Vec<Elem> = dst.elements().collect();
        let domains: Vec<Vec<Elem>> = domains
            .into_iter()
            .map(|d| d.map(|d| d.into_iter().collect()).unwrap_or_else(|| all.clone()))
            .collect();

        let mut placed = vec![false; n];
        let mut order = Vec::new();
        for (v, &a) in assign.iter().enumerate() {
            if a != UNSET {
                placed[v] = true;
            }
        }
        let mut links = vec![0usize; n];
        for a in &atoms {
            let has_placed = a.vars.iter().any(|&v| placed[v as usize]);
            if has_placed {
                for &v in &a.vars {
                    links[v as usize] += 1;
                }
            }
        }
        let groups: [Vec<Elem>; 2] = [
            prefix.iter().copied().filter(|&v| !placed[v as usize]).collect(),
            (0..n as Elem)
                .filter(|v| !prefix.contains(v) && !placed[*v as usize])
                .collect(),
        ];
        let mut var_atoms: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, a) in atoms.iter().enumerate() {
            for &v in &a.vars {
                if var_atoms[v as usize].last() != Some(&i) {
                    var_atoms[v as usize].push(i);
                }
            }
        }
        for group in groups {
            let mut rest = group;
            while !rest.is_empty() {
                let (pos, _) = rest
                    .iter()
                    .enumerate()
                    .min_by_key(|(_, &v)| {
                        (std::cmp::Reverse(links[v as usize]), domains[v as usize].len(), v)
                    })
                    .expect("nonempty");
                let v = rest.remove(pos);
                placed[v as usize] = true;
                order.push(v);
                for &ai in &var_atoms[v as usize] {
                    let a = &atoms[ai];
                    let before = a.vars.iter().filter(|&&w| w != v && placed[w as usize]).count();
                    if before == 0 {
                        for &w in &a.vars {
                            links[w as usize] += 1;
                        }
                    }
                }
            }
        }

        let mut level_of = vec![usize::MAX; n];
        for (l, &v) in order.iter().enumerate() {
            level_of[v as usize] = l;
        }
        let mut checks = vec![Vec::new(); order.len()];
        let mut anchors = vec![Vec::new(); order.len()];
        let mut pinned_atoms = Vec::new();
        for (i, a) in atoms.iter().enumerate() {
            let last = a
                .vars
                .iter()
                .map(|&v| level_of[v as usize])
                .filter(|&l| l != usize::MAX)
                .max();
            match last {
                None => pinned_atoms.push(i),
                Some(l) => checks[l].push(i),
            }
        }
        for (l, &v) in order.iter().enumerate() {
            for (i, a) in atoms.iter().enumerate() {
                let Some(p) = a.vars.iter().position(|&w| w == v) else {
                    continue;
                };
                let earlier = a
                    .vars
                    .iter()
                    .any(|&w| w != v && (assign[w as usize] != UNSET || level_of[w as usize] < l));
                if earlier {
                    anchors[l].push((i, p));
                }
            }
        }
        let mut search = HomSearch {
            dst,
            atoms,
            index,
            members,
            order,
            checks,
            anchors,
            domains,
            assign,
            pinned_ok: true,
        };
        search.pinned_ok = pinned_atoms.iter().all(|&i| search.atom_holds(i));
        Ok(search)
    }

    fn atom_holds(&self, i: usize) -> bool {
        let a = &self.atoms[i];
        let img: Vec<Elem> = a.vars.iter().map(|&v| self.assign[v as usize]).collect();
        self.members[a.rel].contains(img.as_slice())
    }

    fn candidates(&self, level: usize) -> Vec<Elem> {
        let v = self.order[level];
        let mut best: Option<(&[&[Elem]], usize, usize)> = None;
        for &(ai, p) in &self.anchors[level] {
            let a = &self.atoms[ai];
            for (q, &w) in a.vars.iter().enumerate() {
                let val = self.assign[w as usize];
                if w == v || val == UNSET {
                    continue;
                }
                let list: &[&[Elem]] = self.index[a.rel][q].get(&val).map(Vec::as_slice).unwrap_or(&[]);
                if best.is_none_or(|(b, _, _)| list.len() < b.len()) {
                    best = Some((list, ai, p));
                }
            }
        }
        match best {
            None => self.domains[v as usize].clone(),
            Some((list, ai, p)) => {
                let a = &self.atoms[ai];
                let mut out: Vec<Elem> = list
                    .iter()
                    .filter(|t| {
                        a.vars.iter().enumerate().all(|(q, &w)| {
                            let val = self.assign[w as usize];
                            w == v || val == UNSET || t[q] == val
                        })
                    })
                    .map(|t| t[p])
                    .collect();
                out.sort_unstable();
                out.dedup();
                out
            }
        }
    }

    fn try_level(&mut self, level: usize, c: Elem) -> bool {
        self.assign[self.order[level] as usize] = c;
        let ok = self.checks[level].iter().all(|&i| self.atom_holds(i));
        if !ok {
            self.assign[self.order[level] as usize] = UNSET;
        }
        ok
    }

    fn unset(&mut self, level: usize) {
        self.assign[self.order[level] as usize] = UNSET;
    }

    fn exists_from(&mut self, level: usize) -> bool {
        if level == self.order.len() {
            return true;
        }
        for c in self.candidates(level) {
            if self.try_level(level, c) {
                let found = self.exists_from(level + 1);
                self.unset(level);
                if found {
                    return true;
                }
            }
        }
        false
    }

    fn count_from(&mut self, level: usize, split: usize) -> u128 {
        if level == split {
            return u128::from(self.exists_from(level));
        }
        let mut total = 0u128;
        for c in self.candidates(level) {
            if self.try_level(level, c) {
                total += self.count_from(level + 1, split);
                self.unset(level);
            }
        }
        total
    }

    fn each_from(&mut self, level: usize, f: &mut dyn FnMut(&[Elem]) -> bool) -> bool {
        if level == self.order.len() {
            return f(&self.assign);
        }
        for c in self.candidates(level) {
            if self.try_level(level, c) {
                let go_on = self.each_from(level + 1, f);
                self.unset(level);
                if !go_on {
                    return false;
                }
            }
        }
        true
    }

    /// First total map found, if any.
    pub fn find(&mut self) -> Option<Vec<Elem>> {
        let mut out = None;
        self.for_each(|m| {
            out = Some(m.to_vec());
            false
        });
        out
    }

    pub fn exists(&mut self) -> bool {
        self.pinned_ok && self.exists_from(0)
    }

    /// Visits maps in search order until `f` returns false.
    pub fn for_each(&mut self, mut f: impl FnMut(&[Elem]) -> bool) {
        if self.pinned_ok {
            self.each_from(0, &mut f);
        }
    }

    /// Number of distinct restrictions to the first `prefix_len` searched
    /// (non-pinned) elements that extend to a full homomorphism.
    pub fn count_projected(&mut self, prefix_len: usize) -> u128 {
        if !self.pinned_ok {
            return 0;
        }
        self.count_from(0, prefix_len.min(self.order.len()))
    }

    pub fn count(&mut self) -> u128 {
        let n = self.order.len();
        self.count_projected(n)
    }

    pub fn target(&self) -> &Structure {
        self.dst
    }
}

fn resolve_pin(src: &Structure, dst: &Structure, pin: &[(&str, &str)]) -> Result<Vec<(Elem, Elem)>> {
    pin.iter()
        .map(|(s, d)| Ok((src.require_element(s)?, dst.require_element(d)?)))
        .collect()
}

/// All homomorphisms `src -> dst` extending `pin`, each as a vector indexed
/// by source element. Lexicographic order on the image vectors.
pub fn enumerate_homomorphisms(
    src: &Structure,
    dst: &Structure,
    pin: &[(&str, &str)],
) -> Result<Vec<Vec<Elem>>> {
    let pin = resolve_pin(src, dst, pin)?;
    let mut search = HomSearch::new(src, dst, &pin, &BTreeSet::new())?;
    let mut out = Vec::new();
    search.for_each(|m| {
        out.push(m.to_vec());
        true
    });
    out.sort();
    Ok(out)
}

pub fn count_homomorphisms(src: &Structure, dst: &Structure) -> Result<u128> {
    Ok(HomSearch::new(src, dst, &[], &BTreeSet::new())?.count())
}

/// Checks that `map` sends every tuple of `src` into `dst`.
pub fn is_homomorphism(src: &Structure, dst: &Structure, map: &[Elem]) -> bool {
    src.tuples().all(|(r, t)| {
        let name = &src.signature().symbols()[r].name;
        let img: Vec<Elem> = t.iter().map(|&e| map[e as usize]).collect();
        dst.relation_by_name(name).is_some_and(|rel| rel.contains(&img))
    })
}
