//! Independent oracles and random instance generators shared by the
//! integration tests. Nothing here calls the library's search, counting,
//! canonisation or simplicial code; only plain structure accessors.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use ucq_core::{ConjunctiveQuery, Elem, Signature, Structure, Symbol, Ucq};

pub fn sig_eu() -> Signature {
    Signature::new(vec![Symbol::new("E", 2), Symbol::new("U", 1)]).unwrap()
}

pub fn sig_e() -> Signature {
    Signature::new(vec![Symbol::new("E", 2)]).unwrap()
}

/// Every tuple over `n` elements for each symbol, included with probability `p`.
pub fn random_structure(rng: &mut ChaCha8Rng, sig: &Signature, prefix: &str, n: usize, p: f64) -> Structure {
    let mut s = Structure::new(sig.clone());
    for i in 0..n {
        s.add_element(&format!("{prefix}{i}"));
    }
    for sym in sig.symbols() {
        let total = n.pow(sym.arity as u32);
        for code in 0..total {
            if !rng.gen_bool(p) {
                continue;
            }
            let mut c = code;
            let mut args = Vec::with_capacity(sym.arity);
            for _ in 0..sym.arity {
                args.push(format!("{prefix}{}", c % n));
                c /= n;
            }
            s.insert_fact(&sym.name, &args).unwrap();
        }
    }
    s
}

pub fn random_db(rng: &mut ChaCha8Rng, sig: &Signature, max_elems: usize) -> Structure {
    let n = rng.gen_range(1..=max_elems);
    let p = rng.gen_range(0.2..0.7);
    random_structure(rng, sig, "d", n, p)
}

/// A random body over variables `x0..x{nvars-1}` with 1..=`max_atoms` atoms.
pub fn random_body(rng: &mut ChaCha8Rng, sig: &Signature, nvars: usize, max_atoms: usize) -> Structure {
    let mut s = Structure::new(sig.clone());
    for i in 0..nvars {
        s.add_element(&format!("x{i}"));
    }
    for _ in 0..rng.gen_range(1..=max_atoms) {
        let sym = &sig.symbols()[rng.gen_range(0..sig.len())];
        let args: Vec<String> = (0..sym.arity)
            .map(|_| format!("x{}", rng.gen_range(0..nvars)))
            .collect();
        s.insert_fact(&sym.name, &args).unwrap();
    }
    s
}

/// Quantifier-free UCQ with up to `max_l` disjuncts over at most `max_vars` variables.
pub fn random_qf_ucq(rng: &mut ChaCha8Rng, sig: &Signature, max_l: usize, max_vars: usize) -> Ucq {
    let nvars = rng.gen_range(1..=max_vars);
    let l = rng.gen_range(1..=max_l);
    let disjuncts = (0..l).map(|_| random_body(rng, sig, nvars, 4)).collect();
    let free = (0..nvars).map(|i| format!("x{i}")).collect();
    Ucq::new(disjuncts, free).unwrap()
}

/// A CQ whose first `nfree` variables are free.
pub fn random_cq(rng: &mut ChaCha8Rng, sig: &Signature, max_vars: usize) -> ConjunctiveQuery {
    let nvars = rng.gen_range(1..=max_vars);
    let body = random_body(rng, sig, nvars, 5);
    let nfree = rng.gen_range(0..=nvars);
    let free: Vec<String> = (0..nfree).map(|i| format!("x{i}")).collect();
    ConjunctiveQuery::new(body, &free).unwrap()
}

/// Adds one random tuple (possibly already present) to `d`.
pub fn grow(rng: &mut ChaCha8Rng, d: &Structure) -> Structure {
    let mut out = d.clone();
    let n = d.universe_size();
    let sym = &d.signature().symbols()[rng.gen_range(0..d.signature().len())];
    let args: Vec<String> = (0..sym.arity)
        .map(|_| d.names()[rng.gen_range(0..n)].clone())
        .collect();
    out.insert_fact(&sym.name, &args).unwrap();
    out
}

/// A target relation and the query atom that must land in it.
type Check<'a> = (&'a BTreeSet<Vec<Elem>>, &'a Vec<Elem>);

/// Images of `free` (in that order) under every homomorphism `a -> d`.
fn collect_answers(a: &Structure, free: &[String], d: &Structure, into: &mut HashSet<Vec<Elem>>) {
    let n = a.universe_size();
    let m = d.universe_size();
    // atoms grouped by the last variable they mention
    let mut checks: Vec<Vec<Check>> = vec![Vec::new(); n];
    let empty = BTreeSet::new();
    for (r, t) in a.tuples() {
        let name = &a.signature().symbols()[r].name;
        let rel = d.relation_by_name(name).unwrap_or(&empty);
        let last = *t.iter().max().unwrap() as usize;
        checks[last].push((rel, t));
    }
    let free_idx: Vec<usize> = free.iter().map(|f| a.element(f).unwrap() as usize).collect();
    let mut asg = vec![0 as Elem; n];
    fn go(
        v: usize,
        n: usize,
        m: usize,
        asg: &mut [Elem],
        checks: &[Vec<Check>],
        free_idx: &[usize],
        into: &mut HashSet<Vec<Elem>>,
    ) {
        if v == n {
            into.insert(free_idx.iter().map(|&i| asg[i]).collect());
            return;
        }
        for x in 0..m as Elem {
            asg[v] = x;
            let ok = checks[v].iter().all(|(rel, t)| {
                let img: Vec<Elem> = t.iter().map(|&e| asg[e as usize]).collect();
                rel.contains(&img)
            });
            if ok {
                go(v + 1, n, m, asg, checks, free_idx, into);
            }
        }
    }
    go(0, n, m, &mut asg, &checks, &free_idx, into);
}

/// Number of answers to the UCQ by exhaustive search.
pub fn oracle_ucq(psi: &Ucq, d: &Structure) -> u64 {
    let mut set = HashSet::new();
    for a in psi.disjuncts() {
        collect_answers(a, psi.free(), d, &mut set);
    }
    set.len() as u64
}

pub fn oracle_cq(q: &ConjunctiveQuery, d: &Structure) -> u64 {
    let free: Vec<String> = q.free_names().into_iter().map(String::from).collect();
    let mut set = HashSet::new();
    collect_answers(q.body(), &free, d, &mut set);
    set.len() as u64
}

/// Number of homomorphisms `a -> d`.
pub fn oracle_homs(a: &Structure, d: &Structure) -> u64 {
    let free = a.names().to_vec();
    let mut set = HashSet::new();
    collect_answers(a, &free, d, &mut set);
    set.len() as u64
}

fn tuple_set(s: &Structure, map: &[Elem]) -> BTreeSet<(String, Vec<Elem>)> {
    s.tuples()
        .map(|(r, t)| {
            (
                s.signature().symbols()[r].name.clone(),
                t.iter().map(|&e| map[e as usize]).collect(),
            )
        })
        .collect()
}

/// Brute-force isomorphism test mapping free variables onto free variables.
pub fn oracle_isomorphic(a: &ConjunctiveQuery, b: &ConjunctiveQuery) -> bool {
    let (sa, sb) = (a.body(), b.body());
    let n = sa.universe_size();
    if n != sb.universe_size() || sa.tuple_count() != sb.tuple_count() || a.free().len() != b.free().len() {
        return false;
    }
    let target = tuple_set(sb, &(0..n as Elem).collect::<Vec<_>>());
    let mut map = vec![0 as Elem; n];
    let mut used = vec![false; n];
    fn go(
        v: usize,
        a: &ConjunctiveQuery,
        b: &ConjunctiveQuery,
        map: &mut Vec<Elem>,
        used: &mut Vec<bool>,
        target: &BTreeSet<(String, Vec<Elem>)>,
    ) -> bool {
        let n = map.len();
        if v == n {
            return tuple_set(a.body(), map) == *target;
        }
        for w in 0..n {
            if used[w] || a.is_free(v as Elem) != b.is_free(w as Elem) {
                continue;
            }
            used[w] = true;
            map[v] = w as Elem;
            if go(v + 1, a, b, map, used, target) {
                return true;
            }
            used[w] = false;
        }
        false
    }
    go(0, a, b, &mut map, &mut used, &target)
}

/// Reduced Euler characteristic by listing every subset of the ground set.
pub fn oracle_euler(ground: usize, facets: &[BTreeSet<usize>]) -> i64 {
    let masks: Vec<u64> = facets
        .iter()
        .map(|f| f.iter().fold(0u64, |m, &x| m | (1 << x)))
        .collect();
    let mut sum = 0i64;
    for s in 0u64..(1 << ground) {
        if masks.iter().any(|&f| s & !f == 0) {
            sum += if s.count_ones() % 2 == 0 { 1 } else { -1 };
        }
    }
    -sum
}

/// Checks (C1)-(C3) for bags over a graph given by its edge list.
pub fn oracle_decomposition_ok(
    n: usize,
    edges: &[(Elem, Elem)],
    bags: &[BTreeSet<Elem>],
    parent: &[Option<usize>],
) -> bool {
    let t = bags.len();
    if parent.len() != t || (t == 0 && n > 0) {
        return false;
    }
    // a tree: exactly one root, every node reaches it
    if parent.iter().filter(|p| p.is_none()).count() != 1.min(t) {
        return false;
    }
    for start in 0..t {
        let (mut cur, mut steps) = (start, 0);
        while let Some(p) = parent[cur] {
            if p >= t || steps > t {
                return false;
            }
            cur = p;
            steps += 1;
        }
    }
    // C1
    for v in 0..n as Elem {
        if !bags.iter().any(|b| b.contains(&v)) {
            return false;
        }
    }
    // C2
    for &(u, v) in edges {
        if !bags.iter().any(|b| b.contains(&u) && b.contains(&v)) {
            return false;
        }
    }
    // C3: nodes holding v induce a connected subtree, i.e. exactly one of
    // them has its parent outside the set
    for v in 0..n as Elem {
        let tops = (0..t)
            .filter(|&i| bags[i].contains(&v))
            .filter(|&i| parent[i].is_none_or(|p| !bags[p].contains(&v)))
            .count();
        if tops != 1 {
            return false;
        }
    }
    true
}
