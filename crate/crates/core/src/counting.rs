//! Answer counting for CQs and UCQs.

use std::collections::{BTreeSet, HashMap, HashSet};

use num_bigint::{BigInt, BigUint};
use num_traits::{CheckedAdd, CheckedMul, One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{gyo, is_acyclic};
use crate::caps::Caps;
use crate::error::{Cap, Error, Result};
use crate::expansion::ExpansionTable;
use crate::hom::HomSearch;
use crate::structure::{ConjunctiveQuery, Elem, Signature, Structure, Ucq};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    BruteForce,
    Backtracking,
    Yannakakis,
    InclusionExclusion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnswerCount {
    #[serde(serialize_with = "as_decimal")]
    pub value: BigUint,
    pub method: Method,
}

fn as_decimal<S: serde::Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_str_radix(10))
}

impl AnswerCount {
    fn new(value: BigUint, method: Method) -> Self {
        AnswerCount { value, method }
    }
}

/// For each query symbol, the index of the same symbol in the database.
fn symbol_map(q: &Signature, d: &Signature) -> Result<Vec<usize>> {
    q.symbols()
        .iter()
        .map(|s| match d.index_of(&s.name) {
            Some(j) if d.symbols()[j].arity == s.arity => Ok(j),
            Some(j) => Err(Error::ArityMismatch {
                symbol: s.name.clone(),
                expected: s.arity,
                found: d.symbols()[j].arity,
            }),
            None => Err(Error::SignatureMismatch(format!(
                "symbol `{}` missing from the database",
                s.name
            ))),
        })
        .collect()
}

fn pow(n: usize, k: usize) -> BigUint {
    BigUint::from(n).pow(k as u32)
}

/// Elements of `q` occurring in no tuple, split into (free, quantified).
fn isolated(q: &ConjunctiveQuery) -> (Vec<Elem>, Vec<Elem>) {
    q.body()
        .isolated_elements()
        .into_iter()
        .partition(|&e| q.is_free(e))
}

/// Plain depth-first extension check: tries every database element for each
/// unassigned variable in index order, testing atoms once fully assigned.
struct Naive<'a> {
    atoms: Vec<(usize, Vec<Elem>)>,
    members: Vec<HashSet<&'a [Elem]>>,
    n: usize,
    by_last: Vec<Vec<usize>>,
}

impl<'a> Naive<'a> {
    fn new(body: &Structure, d: &'a Structure) -> Result<Self> {
        let map = symbol_map(body.signature(), d.signature())?;
        let members = (0..d.signature().len())
            .map(|r| d.relation(r).iter().map(Vec::as_slice).collect())
            .collect();
        let atoms: Vec<(usize, Vec<Elem>)> = body.tuples().map(|(r, t)| (map[r], t.clone())).collect();
        let mut by_last = vec![Vec::new(); body.universe_size()];
        for (i, (_, t)) in atoms.iter().enumerate() {
            if let Some(&m) = t.iter().max() {
                by_last[m as usize].push(i);
            }
        }
        Ok(Naive {
            atoms,
            members,
            n: d.universe_size(),
            by_last,
        })
    }

    fn holds(&self, i: usize, assign: &[Elem]) -> bool {
        let (r, t) = &self.atoms[i];
        let img: Vec<Elem> = t.iter().map(|&v| assign[v as usize]).collect();
        self.members[*r].contains(img.as_slice())
    }

    /// `assign` has the pinned entries set and `Elem::MAX` elsewhere.
    fn extends(&self, assign: &mut Vec<Elem>) -> bool {
        // An atom is tested when its largest variable is reached, pinned or not.
        self.extend_from(0, assign)
    }

    fn extend_from(&self, v: usize, assign: &mut Vec<Elem>) -> bool {
        if v == assign.len() {
            return true;
        }
        let ok_here = |assign: &Vec<Elem>| self.by_last[v].iter().all(|&i| self.holds(i, assign));
        if assign[v] != Elem::MAX {
            return ok_here(assign) && self.extend_from(v + 1, assign);
        }
        for c in 0..self.n as Elem {
            assign[v] = c;
            if ok_here(assign) && self.extend_from(v + 1, assign) {
                assign[v] = Elem::MAX;
                return true;
            }
        }
        assign[v] = Elem::MAX;
        false
    }
}

/// Calls `f` on every assignment of `vars` over `0..n`; stops when it returns false.
fn odometer(vars: usize, n: usize, mut f: impl FnMut(&[Elem]) -> bool) {
    if vars > 0 && n == 0 {
        return;
    }
    let mut cur = vec![0 as Elem; vars];
    loop {
        if !f(&cur) {
            return;
        }
        let mut i = vars;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            cur[i] += 1;
            if (cur[i] as usize) < n {
                break;
            }
            cur[i] = 0;
        }
    }
}

fn check_assignments(n: usize, k: usize, caps: &Caps) -> Result<()> {
    let total = pow(n, k);
    if total > BigUint::from(caps.max_assignments) {
        let value = u128::try_from(&total).unwrap_or(u128::MAX);
        return Err(Error::cap(Cap::Assignments, value, caps.max_assignments));
    }
    Ok(())
}

/// Enumerates all assignments of the non-isolated free variables and checks
/// each for an extension. Isolated free variables contribute `|U(D)|` each.
pub fn count_cq_bruteforce(q: &ConjunctiveQuery, d: &Structure, caps: &Caps) -> Result<AnswerCount> {
    let (iso_free, _) = isolated(q);
    let vars: Vec<Elem> = q
        .free()
        .iter()
        .copied()
        .filter(|e| !iso_free.contains(e))
        .collect();
    let n = d.universe_size();
    check_assignments(n, vars.len(), caps)?;
    let naive = Naive::new(q.body(), d)?;
    let mut hits = 0u64;
    let mut assign = vec![Elem::MAX; q.body().universe_size()];
    for &e in &iso_free {
        // fixed to any value; the multiplier accounts for them
        assign[e as usize] = 0;
    }
    if !iso_free.is_empty() && n == 0 {
        return Ok(AnswerCount::new(BigUint::zero(), Method::BruteForce));
    }
    odometer(vars.len(), n, |vals| {
        for (&v, &c) in vars.iter().zip(vals) {
            assign[v as usize] = c;
        }
        if naive.extends(&mut assign) {
            hits += 1;
        }
        true
    });
    Ok(AnswerCount::new(
        BigUint::from(hits) * pow(n, iso_free.len()),
        Method::BruteForce,
    ))
}

/// Backtracking over free variables first, then an existence search over
/// the quantified ones for each free assignment.
pub fn count_cq_backtracking(q: &ConjunctiveQuery, d: &Structure) -> Result<AnswerCount> {
    symbol_map(q.body().signature(), d.signature())?;
    let (iso_free, _) = isolated(q);
    let keep: BTreeSet<Elem> = q.body().elements().filter(|e| !iso_free.contains(e)).collect();
    let body = q.body().induced(&keep);
    let free: BTreeSet<Elem> = q
        .free()
        .iter()
        .filter(|e| keep.contains(e))
        .map(|&e| body.element(q.body().name(e)).expect("kept"))
        .collect();
    let mut search = HomSearch::new(&body, d, &[], &free)?;
    let c = search.count_projected(free.len());
    Ok(AnswerCount::new(
        BigUint::from(c) * pow(d.universe_size(), iso_free.len()),
        Method::Backtracking,
    ))
}

trait Weight: Clone + Zero + One + CheckedAdd + CheckedMul {}
impl Weight for u128 {}
impl Weight for BigUint {}

/// One join-tree node: the distinct variables of an atom and the database
/// rows consistent with it.
struct Node {
    vars: Vec<Elem>,
    rows: Vec<Vec<Elem>>,
}

fn build_nodes(q: &ConjunctiveQuery, d: &Structure) -> Result<Vec<Node>> {
    let map = symbol_map(q.body().signature(), d.signature())?;
    let mut nodes = Vec::new();
    for (r, t) in q.body().tuples() {
        let mut vars: Vec<Elem> = t.clone();
        vars.sort_unstable();
        vars.dedup();
        let pos: Vec<usize> = t
            .iter()
            .map(|v| vars.binary_search(v).expect("present"))
            .collect();
        let mut seen = HashSet::new();
        let mut rows = Vec::new();
        'tuples: for dt in d.relation(map[r]) {
            let mut row = vec![Elem::MAX; vars.len()];
            for (&p, &val) in pos.iter().zip(dt) {
                if row[p] == Elem::MAX {
                    row[p] = val;
                } else if row[p] != val {
                    continue 'tuples;
                }
            }
            if seen.insert(row.clone()) {
                rows.push(row);
            }
        }
        nodes.push(Node { vars, rows });
    }
    Ok(nodes)
}

fn shared_positions(a: &[Elem], b: &[Elem]) -> (Vec<usize>, Vec<usize>) {
    let mut pa = Vec::new();
    let mut pb = Vec::new();
    for (i, v) in a.iter().enumerate() {
        if let Ok(j) = b.binary_search(v) {
            pa.push(i);
            pb.push(j);
        }
    }
    (pa, pb)
}

fn aggregate<W: Weight>(nodes: &[Node], parent: &[Option<usize>], order: &[usize]) -> Option<W> {
    let mut weights: Vec<Vec<W>> = nodes.iter().map(|n| vec![W::one(); n.rows.len()]).collect();
    // children come before parents in `order`
    let mut total = W::one();
    for &e in order {
        match parent[e] {
            Some(p) => {
                let (pe, pp) = shared_positions(&nodes[e].vars, &nodes[p].vars);
                let mut msg: HashMap<Vec<Elem>, W> = HashMap::new();
                for (row, w) in nodes[e].rows.iter().zip(&weights[e]) {
                    if w.is_zero() {
                        continue;
                    }
                    let key: Vec<Elem> = pe.iter().map(|&i| row[i]).collect();
                    let slot = msg.entry(key).or_insert_with(W::zero);
                    *slot = slot.checked_add(w)?;
                }
                let (left, right) = weights.split_at_mut(e.max(p));
                let pw = if p < e { &mut left[p] } else { &mut right[0] };
                for (row, w) in nodes[p].rows.iter().zip(pw.iter_mut()) {
                    if w.is_zero() {
                        continue;
                    }
                    let key: Vec<Elem> = pp.iter().map(|&i| row[i]).collect();
                    *w = match msg.get(&key) {
                        Some(m) => w.checked_mul(m)?,
                        None => W::zero(),
                    };
                }
            }
            None => {
                let mut sum = W::zero();
                for w in &weights[e] {
                    sum = sum.checked_add(w)?;
                }
                total = total.checked_mul(&sum)?;
            }
        }
    }
    Some(total)
}

/// Join-tree counting for acyclic quantifier-free CQs: every atom becomes a
/// node holding its consistent rows; children pass per-key weight sums to
/// their parent, rows without a match drop to zero, and the root sums are
/// multiplied across components.
pub fn count_cq_acyclic(q: &ConjunctiveQuery, d: &Structure) -> Result<AnswerCount> {
    if !q.is_quantifier_free() {
        return Err(Error::precondition(
            "join-tree counting needs a quantifier-free CQ",
        ));
    }
    if !is_acyclic(q.body()) {
        return Err(Error::precondition("join-tree counting needs an acyclic CQ"));
    }
    let nodes = build_nodes(q, d)?;
    let edges: Vec<BTreeSet<Elem>> = nodes.iter().map(|n| n.vars.iter().copied().collect()).collect();
    let forest = gyo(&edges).ok_or_else(|| Error::precondition("no join tree"))?;
    let iso = q.body().isolated_elements().len();
    let base: BigUint = match aggregate::<u128>(&nodes, &forest.parent, &forest.order) {
        Some(v) => BigUint::from(v),
        None => aggregate::<BigUint>(&nodes, &forest.parent, &forest.order).expect("no overflow"),
    };
    Ok(AnswerCount::new(
        base * pow(d.universe_size(), iso),
        Method::Yannakakis,
    ))
}

/// Ground truth for UCQs: every assignment of the free variables, kept if
/// some disjunct extends it.
pub fn count_ucq_direct(psi: &Ucq, d: &Structure, caps: &Caps) -> Result<AnswerCount> {
    let n = d.universe_size();
    let k = psi.free().len();
    check_assignments(n, k, caps)?;
    let mut checkers = Vec::new();
    for body in psi.disjuncts() {
        let naive = Naive::new(body, d)?;
        let pos: Vec<Elem> = psi
            .free()
            .iter()
            .map(|f| body.element(f).expect("free in every disjunct"))
            .collect();
        checkers.push((naive, pos, vec![Elem::MAX; body.universe_size()]));
    }
    let mut hits = 0u64;
    odometer(k, n, |vals| {
        for (naive, pos, assign) in checkers.iter_mut() {
            for (&p, &c) in pos.iter().zip(vals) {
                assign[p as usize] = c;
            }
            if naive.extends(assign) {
                hits += 1;
                break;
            }
        }
        true
    });
    Ok(AnswerCount::new(BigUint::from(hits), Method::BruteForce))
}

/// Answers of one CQ by the fastest applicable engine.
pub fn count_cq(q: &ConjunctiveQuery, d: &Structure) -> Result<AnswerCount> {
    if q.is_quantifier_free() && is_acyclic(q.body()) {
        count_cq_acyclic(q, d)
    } else {
        count_cq_backtracking(q, d)
    }
}

/// `Σ c · ans(entry, D)` over the table, entries counted in parallel when `jobs > 1`.
pub fn count_ucq_expansion(
    psi: &Ucq,
    d: &Structure,
    table: &ExpansionTable,
    jobs: usize,
) -> Result<AnswerCount> {
    if table.source.signature() != psi.signature() {
        return Err(Error::SignatureMismatch(
            "expansion table was built for a different signature".into(),
        ));
    }
    if table.source.free() != psi.free() {
        return Err(Error::precondition(
            "expansion table was built for a different free set",
        ));
    }
    let term = |e: &crate::expansion::ExpansionEntry| -> Result<BigInt> {
        let c = count_cq(&e.query, d)?;
        Ok(&e.coefficient * BigInt::from(c.value))
    };
    let terms: Vec<Result<BigInt>> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::precondition(format!("thread pool: {e}")))?;
        pool.install(|| table.entries.par_iter().map(term).collect())
    } else {
        table.entries.iter().map(term).collect()
    };
    let mut sum = BigInt::zero();
    for t in terms {
        sum += t?;
    }
    let value = sum
        .to_biguint()
        .ok_or_else(|| Error::precondition("negative inclusion-exclusion sum"))?;
    Ok(AnswerCount::new(value, Method::InclusionExclusion))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::{cq_expansion, ExpansionOptions};

    fn graph(edges: &[(&'static str, &'static str)]) -> Structure {
        Structure::from_facts(edges.iter().map(|&(a, b)| ("E", vec![a, b]))).unwrap()
    }

    fn path_db() -> Structure {
        graph(&[("a", "b"), ("b", "c")])
    }

    fn all_engines(q: &ConjunctiveQuery, d: &Structure) -> Vec<BigUint> {
        let mut out = vec![
            count_cq_bruteforce(q, d, &Caps::default()).unwrap().value,
            count_cq_backtracking(q, d).unwrap().value,
        ];
        if q.is_quantifier_free() && is_acyclic(q.body()) {
            out.push(count_cq_acyclic(q, d).unwrap().value);
        }
        out
    }

    #[test]
    fn single_atom_on_path() {
        let q = ConjunctiveQuery::quantifier_free(graph(&[("x", "y")]));
        for v in all_engines(&q, &path_db()) {
            assert_eq!(v, BigUint::from(2u8));
        }
    }

    #[test]
    fn triangle_into_triangle() {
        let t = graph(&[
            ("a", "b"),
            ("b", "c"),
            ("c", "a"),
            ("b", "a"),
            ("c", "b"),
            ("a", "c"),
        ]);
        let q = ConjunctiveQuery::quantifier_free(t.clone());
        for v in all_engines(&q, &t) {
            assert_eq!(v, BigUint::from(6u8));
        }
    }

    #[test]
    fn quantified_target() {
        let q = ConjunctiveQuery::new(graph(&[("x", "y")]), &["x"]).unwrap();
        for v in all_engines(&q, &path_db()) {
            assert_eq!(v, BigUint::from(2u8));
        }
    }

    #[test]
    fn no_tuples_gives_free_product() {
        let sig = Signature::new([crate::Symbol::new("E", 2)]).unwrap();
        let mut s = Structure::new(sig.clone());
        s.add_element("x");
        s.add_element("y");
        let q = ConjunctiveQuery::quantifier_free(s);
        let mut d = Structure::new(sig);
        for e in ["1", "2", "3", "4", "5"] {
            d.add_element(e);
        }
        for v in all_engines(&q, &d) {
            assert_eq!(v, BigUint::from(25u8));
        }
    }

    #[test]
    fn path_on_directed_four_cycle() {
        let q = ConjunctiveQuery::quantifier_free(graph(&[("x", "y"), ("y", "z")]));
        let d = graph(&[("1", "2"), ("2", "3"), ("3", "4"), ("4", "1")]);
        for v in all_engines(&q, &d) {
            assert_eq!(v, BigUint::from(4u8));
        }
    }

    #[test]
    fn repeated_variable_atom() {
        let q = ConjunctiveQuery::quantifier_free(graph(&[("x", "x"), ("x", "y")]));
        let d = graph(&[("1", "1"), ("1", "2"), ("2", "3")]);
        for v in all_engines(&q, &d) {
            assert_eq!(v, BigUint::from(2u8));
        }
    }

    #[test]
    fn acyclic_rejects_cycles_and_quantifiers() {
        let tri = graph(&[("a", "b"), ("b", "c"), ("c", "a")]);
        assert!(count_cq_acyclic(&ConjunctiveQuery::quantifier_free(tri.clone()), &tri).is_err());
        let q = ConjunctiveQuery::new(graph(&[("x", "y")]), &["x"]).unwrap();
        assert!(count_cq_acyclic(&q, &tri).is_err());
    }

    #[test]
    fn bruteforce_cap() {
        let q = ConjunctiveQuery::quantifier_free(graph(&[("x", "y"), ("y", "z")]));
        let caps = Caps {
            max_assignments: 10,
            ..Caps::default()
        };
        assert!(matches!(
            count_cq_bruteforce(&q, &path_db(), &caps),
            Err(Error::CapExceeded {
                cap: Cap::Assignments,
                ..
            })
        ));
    }

    #[test]
    fn union_of_two_relations() {
        let r = Structure::from_facts([("R", vec!["x", "y"])]).unwrap();
        let s = Structure::from_facts([("S", vec!["x", "y"])]).unwrap();
        let psi = Ucq::aligned(vec![r, s], vec!["x".into(), "y".into()]).unwrap();
        let d = Structure::from_facts([
            ("R", vec!["1", "2"]),
            ("R", vec!["2", "3"]),
            ("S", vec!["2", "3"]),
            ("S", vec!["3", "1"]),
            ("S", vec!["1", "1"]),
        ])
        .unwrap();
        let direct = count_ucq_direct(&psi, &d, &Caps::default()).unwrap();
        assert_eq!(direct.value, BigUint::from(4u8));
        let t = cq_expansion(&psi, ExpansionOptions::default(), &Caps::default()).unwrap();
        let ie = count_ucq_expansion(&psi, &d, &t, 1).unwrap();
        assert_eq!(ie.value, direct.value);
    }

    #[test]
    fn duplicate_disjunct_counts_once() {
        let a = graph(&[("x", "y")]);
        let psi = Ucq::new(vec![a.clone(), a.clone()], vec!["x".into(), "y".into()]).unwrap();
        let direct = count_ucq_direct(&psi, &path_db(), &Caps::default()).unwrap();
        assert_eq!(direct.value, BigUint::from(2u8));
    }

    #[test]
    fn mismatched_table_is_rejected() {
        let a = graph(&[("x", "y")]);
        let psi = Ucq::new(vec![a.clone()], vec!["x".into(), "y".into()]).unwrap();
        let other = Ucq::new(
            vec![Structure::from_facts([("F", vec!["x", "y"])]).unwrap()],
            vec!["x".into(), "y".into()],
        )
        .unwrap();
        let t = cq_expansion(&other, ExpansionOptions::default(), &Caps::default()).unwrap();
        assert!(count_ucq_expansion(&psi, &path_db(), &t, 1).is_err());
    }
}
