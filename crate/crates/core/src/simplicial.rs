//! Simplicial complexes given by facets, and their reduction to UCQs whose
//! expansion coefficient on the combined query is `-χ̂`.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::is_acyclic;
use crate::canon::canonical_form;
use crate::caps::Caps;
use crate::error::{Cap, Error, Result};
use crate::expansion::{combined_query, cq_expansion, ExpansionOptions};
use crate::structure::{ConjunctiveQuery, Signature, Structure, Symbol, Ucq};

/// Bitset face enumeration stops here regardless of the configured cap.
const FACE_LIMIT: usize = 30;

/// Ground set plus pairwise incomparable facets (indices into the ground).
/// Facets keep their input order; it fixes the numbering of power-complex
/// elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Complex {
    ground: Vec<String>,
    facets: Vec<BTreeSet<usize>>,
}

impl Complex {
    /// Builds a complex, dropping duplicate and non-maximal facets.
    pub fn new<S: AsRef<str>>(ground: &[S], facets: &[Vec<S>]) -> Result<Self> {
        Ok(Self::normalized(ground, facets)?.0)
    }

    /// Like [`Complex::new`], also returning one message per dropped facet.
    pub fn normalized<S: AsRef<str>>(ground: &[S], facets: &[Vec<S>]) -> Result<(Self, Vec<String>)> {
        if ground.is_empty() {
            return Err(Error::InvalidComplex("empty ground set".into()));
        }
        let ground: Vec<String> = ground.iter().map(|s| s.as_ref().to_string()).collect();
        let mut index = BTreeMap::new();
        for (i, g) in ground.iter().enumerate() {
            if index.insert(g.as_str(), i).is_some() {
                return Err(Error::InvalidComplex(format!("ground element `{g}` repeated")));
            }
        }
        let mut sets = Vec::with_capacity(facets.len());
        for f in facets {
            let mut set = BTreeSet::new();
            for x in f {
                let x = x.as_ref();
                let &i = index
                    .get(x)
                    .ok_or_else(|| Error::InvalidComplex(format!("facet element `{x}` not in ground")))?;
                set.insert(i);
            }
            sets.push(set);
        }
        let (facets, dropped) = maximal(sets);
        let warnings = dropped
            .iter()
            .map(|f| {
                let names: Vec<&str> = f.iter().map(|&i| ground[i].as_str()).collect();
                format!("dropped non-maximal or repeated facet {{{}}}", names.join(","))
            })
            .collect();
        let c = Complex { ground, facets };
        if let Some(x) = (0..c.ground.len()).find(|x| !c.facets.iter().any(|f| f.contains(x))) {
            return Err(Error::InvalidComplex(format!(
                "ground element `{}` lies in no facet",
                c.ground[x]
            )));
        }
        Ok((c, warnings))
    }

    pub fn ground(&self) -> &[String] {
        &self.ground
    }

    pub fn facets(&self) -> &[BTreeSet<usize>] {
        &self.facets
    }

    pub fn facet_names(&self, i: usize) -> Vec<&str> {
        self.facets[i].iter().map(|&x| self.ground[x].as_str()).collect()
    }

    fn index_of(&self, x: &str) -> Result<usize> {
        self.ground
            .iter()
            .position(|g| g == x)
            .ok_or_else(|| Error::UnknownElement(x.to_string()))
    }

    /// `{∅, {x}}` on a one-element ground.
    pub fn is_trivial(&self) -> bool {
        self.ground.len() == 1
    }

    pub fn ground_is_face(&self) -> bool {
        self.facets.iter().any(|f| f.len() == self.ground.len())
    }

    pub fn is_face(&self, s: &BTreeSet<usize>) -> bool {
        self.facets.iter().any(|f| s.is_subset(f))
    }

    fn dominates_idx(&self, x: usize, y: usize) -> bool {
        self.facets
            .iter()
            .filter(|f| f.contains(&y))
            .all(|f| f.contains(&x))
    }

    /// Removes `y` from the ground and from every facet.
    pub fn delete(&self, y: usize) -> Complex {
        let shift = |i: usize| if i > y { i - 1 } else { i };
        let mut ground = self.ground.clone();
        ground.remove(y);
        let sets = self
            .facets
            .iter()
            .map(|f| f.iter().filter(|&&i| i != y).map(|&i| shift(i)).collect())
            .collect();
        Complex {
            ground,
            facets: maximal(sets).0,
        }
    }
}

/// Keeps the first occurrence of every maximal set, in input order.
fn maximal(sets: Vec<BTreeSet<usize>>) -> (Vec<BTreeSet<usize>>, Vec<BTreeSet<usize>>) {
    let mut keep = Vec::new();
    let mut dropped = Vec::new();
    for (i, s) in sets.iter().enumerate() {
        let dominated = sets
            .iter()
            .enumerate()
            .any(|(j, t)| (s.len() < t.len() && s.is_subset(t)) || (j < i && s == t));
        if dominated {
            dropped.push(s.clone());
        } else {
            keep.push(s.clone());
        }
    }
    (keep, dropped)
}

fn face_bitmap(c: &Complex, caps: &Caps) -> Result<Vec<bool>> {
    let n = c.ground.len();
    Caps::check(Cap::Ground, n, caps.max_ground.min(FACE_LIMIT))?;
    let mut seen = vec![false; 1usize << n];
    for f in &c.facets {
        let full: usize = f.iter().map(|&i| 1usize << i).sum();
        let mut sub = full;
        loop {
            seen[sub] = true;
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & full;
        }
    }
    Ok(seen)
}

/// All faces, ∅ included, ordered by size then lexicographically.
pub fn enumerate_faces(c: &Complex, caps: &Caps) -> Result<Vec<BTreeSet<usize>>> {
    let seen = face_bitmap(c, caps)?;
    let mut faces: Vec<BTreeSet<usize>> = seen
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(m, _)| (0..c.ground.len()).filter(|i| m & (1 << i) != 0).collect())
        .collect();
    faces.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(faces)
}

/// `-Σ_{S ∈ I} (-1)^{|S|}` by face enumeration.
pub fn reduced_euler_characteristic(c: &Complex, caps: &Caps) -> Result<i64> {
    let seen = face_bitmap(c, caps)?;
    let sum: i64 = seen
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(m, _)| if m.count_ones() % 2 == 0 { 1 } else { -1 })
        .sum();
    Ok(-sum)
}

/// The same value by inclusion-exclusion over facet subsets: the faces below
/// a common intersection contribute zero unless the intersection is empty.
pub fn reduced_euler_by_facets(c: &Complex, caps: &Caps) -> Result<i64> {
    let k = c.facets.len();
    Caps::check(Cap::Facets, k, caps.max_facets)?;
    let mut sum = 0i64;
    for t in 1u32..(1 << k) {
        let mut it = (0..k).filter(|i| t & (1 << i) != 0);
        let first = it.next().expect("nonempty");
        let mut inter = c.facets[first].clone();
        for i in it {
            inter = inter.intersection(&c.facets[i]).copied().collect();
        }
        if inter.is_empty() {
            sum += if t.count_ones() % 2 == 1 { 1 } else { -1 };
        }
    }
    Ok(-sum)
}

/// Whether `x` dominates `y`: every facet containing `y` contains `x`.
pub fn dominates(c: &Complex, x: &str, y: &str) -> Result<bool> {
    if x == y {
        return Err(Error::precondition("domination needs two distinct elements"));
    }
    let xi = c.index_of(x)?;
    let yi = c.index_of(y)?;
    Ok(c.dominates_idx(xi, yi))
}

/// First pair `(x, y)` with `x` dominating `y`, scanning `x` then `y` in ground order.
pub fn find_domination(c: &Complex) -> Option<(usize, usize)> {
    let n = c.ground.len();
    (0..n).find_map(|x| (0..n).find(|&y| x != y && c.dominates_idx(x, y)).map(|y| (x, y)))
}

/// Deletes dominated elements until none is left, one pair at a time as
/// found by [`find_domination`].
pub fn reduce_to_irreducible(c: &Complex) -> Complex {
    let mut cur = c.clone();
    while let Some((_, y)) = find_domination(&cur) {
        cur = cur.delete(y);
    }
    cur
}

pub fn is_irreducible(c: &Complex) -> bool {
    find_domination(c).is_none()
}

/// Power-complex encoding: `b(x) = {E_i | x ∉ F_i}` over `U = {E_1..E_k}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PowerComplexData {
    pub universe: Vec<String>,
    /// `b(x)` for each ground element, in ground order, as 0-based indices into `universe`.
    pub ground: Vec<BTreeSet<usize>>,
    pub mapping: Vec<(String, Vec<String>)>,
}

impl PowerComplexData {
    /// `S` (ground indices) is a face iff the images of its elements do not cover `U`.
    pub fn is_face(&self, s: &BTreeSet<usize>) -> bool {
        let mut cover = BTreeSet::new();
        for &x in s {
            cover.extend(self.ground[x].iter().copied());
        }
        cover.len() < self.universe.len()
    }
}

pub fn power_complex(c: &Complex) -> Result<PowerComplexData> {
    if c.is_trivial() {
        return Err(Error::precondition("power complex: complex is trivial"));
    }
    if c.ground_is_face() {
        return Err(Error::precondition("power complex: ground set is a face"));
    }
    if let Some((x, y)) = find_domination(c) {
        return Err(Error::precondition(format!(
            "power complex: complex is not irreducible (`{}` dominates `{}`)",
            c.ground[x], c.ground[y]
        )));
    }
    let k = c.facets.len();
    let universe: Vec<String> = (1..=k).map(|i| format!("E{i}")).collect();
    let ground: Vec<BTreeSet<usize>> = (0..c.ground.len())
        .map(|x| (0..k).filter(|&i| !c.facets[i].contains(&x)).collect())
        .collect();
    let distinct: BTreeSet<&BTreeSet<usize>> = ground.iter().collect();
    if distinct.len() != ground.len() {
        return Err(Error::precondition("power complex: b is not injective"));
    }
    let mapping = c
        .ground
        .iter()
        .zip(&ground)
        .map(|(x, a)| (x.clone(), a.iter().map(|&i| universe[i].clone()).collect()))
        .collect();
    Ok(PowerComplexData {
        universe,
        ground,
        mapping,
    })
}

/// Edges of K_t in circulant order: distance 1 first, then 2, and so on.
pub fn clique_edges(t: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for d in 1..=t / 2 {
        for i in 0..t {
            if 2 * d == t && i >= t / 2 {
                break;
            }
            out.push((i, (i + d) % t));
        }
    }
    out
}

/// K_t with each edge replaced by a k-path, one singleton relation per path edge.
#[derive(Debug, Clone)]
pub struct StretchedClique {
    pub t: usize,
    pub k: usize,
    pub structure: Structure,
}

pub fn relation_name(edge: usize, j: usize) -> String {
    format!("R_e{edge}_{j}")
}

pub fn build_stretched_clique(t: usize, k: usize) -> Result<StretchedClique> {
    if t < 2 {
        return Err(Error::precondition("stretched clique needs t >= 2"));
    }
    if k < 1 {
        return Err(Error::precondition("stretched clique needs k >= 1"));
    }
    let edges = clique_edges(t);
    let mut symbols = Vec::new();
    for e in 1..=edges.len() {
        for j in 1..=k {
            symbols.push(Symbol::new(relation_name(e, j), 2));
        }
    }
    let mut s = Structure::new(Signature::new(symbols)?);
    for v in 1..=t {
        s.add_element(&format!("v{v}"));
    }
    for (e, &(a, b)) in edges.iter().enumerate() {
        let e = e + 1;
        let mut path = vec![format!("v{}", a + 1)];
        path.extend((1..k).map(|j| format!("w{e}_{j}")));
        path.push(format!("v{}", b + 1));
        for j in 1..=k {
            s.insert_fact(&relation_name(e, j), &[&path[j - 1], &path[j]])?;
        }
    }
    Ok(StretchedClique { t, k, structure: s })
}

/// The i-th stretch edge of every clique edge, on the full universe.
pub fn layer(sc: &StretchedClique, i: usize) -> Result<Structure> {
    if i < 1 || i > sc.k {
        return Err(Error::precondition(format!(
            "layer index {i} outside 1..={}",
            sc.k
        )));
    }
    let src = &sc.structure;
    let mut s = Structure::new(src.signature().clone());
    for n in src.names() {
        s.add_element(n);
    }
    let suffix = format!("_{i}");
    for (r, t) in src.tuples() {
        if src.signature().symbols()[r].name.ends_with(&suffix) {
            s.insert_tuple(r, t.clone())?;
        }
    }
    Ok(s)
}

#[derive(Debug, Clone)]
pub enum Reduction {
    Euler(i64),
    Ucq {
        ucq: Ucq,
        /// The irreducible complex the UCQ was built from.
        reduced: Complex,
        power: PowerComplexData,
    },
}

/// Either `χ̂(c)` directly (trivial complexes, ground a face) or the UCQ
/// `(B_1..B_l)`, `B_j` the union of the layers in the power-complex image
/// of the j-th element of the irreducible reduct.
pub fn reduce_complex_to_ucq(c: &Complex, t: usize, caps: &Caps) -> Result<Reduction> {
    if t < 2 {
        return Err(Error::precondition("reduction needs t >= 2"));
    }
    if c.ground_is_face() {
        return Ok(Reduction::Euler(reduced_euler_characteristic(c, caps)?));
    }
    let reduced = reduce_to_irreducible(c);
    if reduced.is_trivial() || reduced.ground_is_face() {
        return Ok(Reduction::Euler(reduced_euler_characteristic(&reduced, caps)?));
    }
    let power = power_complex(&reduced)?;
    let sc = build_stretched_clique(t, power.universe.len())?;
    let layers: Vec<Structure> = (1..=sc.k).map(|i| layer(&sc, i)).collect::<Result<_>>()?;
    let mut disjuncts = Vec::with_capacity(power.ground.len());
    for a in &power.ground {
        let mut s = Structure::new(sc.structure.signature().clone());
        for n in sc.structure.names() {
            s.add_element(n);
        }
        for &i in a {
            for (r, tup) in layers[i].tuples() {
                s.insert_tuple(r, tup.clone())?;
            }
        }
        disjuncts.push(s);
    }
    let free = sc.structure.names().to_vec();
    let ucq = Ucq::new(disjuncts, free)?;
    Ok(Reduction::Ucq { ucq, reduced, power })
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractItem {
    pub item: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractReport {
    pub t: usize,
    pub k: Option<usize>,
    pub euler: i64,
    #[serde(serialize_with = "big_decimal")]
    pub coefficient: BigInt,
    pub items: Vec<ContractItem>,
}

fn big_decimal<S: serde::Serializer>(v: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_str_radix(10))
}

impl ContractReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }
}

fn binom2(t: usize) -> usize {
    t * (t - 1) / 2
}

/// Re-checks the five output guarantees of the reduction for `psi` against
/// the input complex `c`.
pub fn verify_reduction(c: &Complex, t: usize, psi: &Ucq, caps: &Caps) -> Result<ContractReport> {
    if t < 2 {
        return Err(Error::precondition("verification needs t >= 2"));
    }
    let euler = reduced_euler_characteristic(c, caps)?;
    let all: BTreeSet<usize> = (0..psi.len()).collect();
    let combined = combined_query(psi, &all)?;
    let mut items = Vec::new();

    // 1: the combined query is K_t^k
    let n = combined.body().universe_size();
    let k = (n >= t && (n - t).is_multiple_of(binom2(t))).then(|| (n - t) / binom2(t) + 1);
    let iso = match k {
        Some(k) => {
            let sc = build_stretched_clique(t, k)?;
            canonical_form(&combined) == canonical_form(&ConjunctiveQuery::quantifier_free(sc.structure))
        }
        None => false,
    };
    items.push(ContractItem {
        item: 1,
        name: "combined query is the stretched clique",
        passed: iso,
        detail: match k {
            Some(k) => format!("compared with K_{t}^{k} on {n} elements"),
            None => format!("{n} elements fit no K_{t}^k"),
        },
    });

    // 2 and 3 from the expansion
    let table = cq_expansion(psi, ExpansionOptions::default(), caps)?;
    let top = canonical_form(&combined);
    let coefficient = table.coefficient_of_code(&top);
    items.push(ContractItem {
        item: 2,
        name: "coefficient of the combined query is -euler",
        passed: coefficient == BigInt::from(-euler),
        detail: format!("coefficient {coefficient}, euler {euler}"),
    });
    let cyclic: Vec<String> = table
        .entries
        .iter()
        .filter(|e| e.code != top && !e.coefficient.is_zero() && !is_acyclic(e.query.body()))
        .map(|e| e.code.short_hex())
        .collect();
    items.push(ContractItem {
        item: 3,
        name: "other nonzero classes are acyclic",
        passed: cyclic.is_empty(),
        detail: if cyclic.is_empty() {
            format!("{} nonzero classes checked", table.nonzero().count())
        } else {
            format!("cyclic classes: {}", cyclic.join(", "))
        },
    });

    items.push(ContractItem {
        item: 4,
        name: "disjunct count at most ground size",
        passed: psi.len() <= c.ground().len(),
        detail: format!("{} disjuncts, ground size {}", psi.len(), c.ground().len()),
    });

    let bad: Vec<usize> = psi
        .disjuncts()
        .iter()
        .enumerate()
        .filter(|(_, d)| !(is_acyclic(d) && d.is_self_join_free() && d.max_arity() <= 2))
        .map(|(i, _)| i + 1)
        .collect();
    items.push(ContractItem {
        item: 5,
        name: "disjuncts acyclic, self-join-free, arity 2",
        passed: bad.is_empty(),
        detail: if bad.is_empty() {
            format!("{} disjuncts checked", psi.len())
        } else {
            format!("failing disjuncts: {bad:?}")
        },
    });

    Ok(ContractReport {
        t,
        k,
        euler,
        coefficient,
        items,
    })
}

/// Random complex on ground `1..=n`, reproducible from `seed`.
pub fn random_complex(n: usize, seed: u64) -> Result<Complex> {
    if n == 0 {
        return Err(Error::precondition("random complex needs n >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ground: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    let m = rng.gen_range(1..=n + 1);
    let mut facets: Vec<Vec<String>> = Vec::new();
    let mut covered = vec![false; n];
    for _ in 0..m {
        let size = rng.gen_range(1..=n);
        let mut f: Vec<usize> = (0..n).collect();
        for i in 0..size {
            let j = rng.gen_range(i..n);
            f.swap(i, j);
        }
        f.truncate(size);
        f.sort_unstable();
        for &x in &f {
            covered[x] = true;
        }
        facets.push(f.iter().map(|&x| ground[x].clone()).collect());
    }
    for (x, c) in covered.iter().enumerate() {
        if !c {
            facets.push(vec![ground[x].clone()]);
        }
    }
    Complex::new(&ground, &facets)
}
