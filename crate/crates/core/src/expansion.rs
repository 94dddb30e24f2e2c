//! The CQ expansion of a UCQ.
//!
//! For every nonempty `J ⊆ [l]` the combined query `∧Ψ|_J` (union of the
//! selected disjuncts) contributes `(-1)^{|J|+1}` to the coefficient of its
//! equivalence class. Subsets are visited in Gray-code order so each step
//! adds or removes one disjunct from a multiset of tuples; with several jobs
//! the Gray sequence is cut into contiguous chunks whose local tables are
//! merged by canonical code.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{counting_core, is_acyclic, treewidth_exact};
use crate::canon::{canonical_form, CanonicalCode};
use crate::caps::Caps;
use crate::error::{Cap, Error, Result};
use crate::structure::{ConjunctiveQuery, Elem, Structure, Ucq};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpansionMode {
    /// Group combined queries by isomorphism. Sound for quantifier-free UCQs.
    IsomorphismOnly,
    /// Replace each combined query by its #core, then group by isomorphism.
    CoreAndIsomorphism,
}

#[derive(Debug, Clone, Copy)]
pub struct ExpansionOptions {
    pub mode: ExpansionMode,
    pub keep_zeros: bool,
    pub jobs: usize,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        ExpansionOptions {
            mode: ExpansionMode::IsomorphismOnly,
            keep_zeros: false,
            jobs: 1,
        }
    }
}

impl ExpansionOptions {
    pub fn with_mode(mode: ExpansionMode) -> Self {
        ExpansionOptions {
            mode,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExpansionEntry {
    /// Class representative (the #core in core mode).
    pub query: ConjunctiveQuery,
    pub code: CanonicalCode,
    pub coefficient: BigInt,
    /// Subsets `J` in this class, 0-based, ordered by bitmask.
    pub witnesses: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct ExpansionTable {
    pub entries: Vec<ExpansionEntry>,
    pub mode: ExpansionMode,
    pub source: Ucq,
}

impl ExpansionTable {
    pub fn coefficient_of_code(&self, code: &CanonicalCode) -> BigInt {
        self.entries
            .iter()
            .find(|e| &e.code == code)
            .map(|e| e.coefficient.clone())
            .unwrap_or_default()
    }

    pub fn nonzero(&self) -> impl Iterator<Item = &ExpansionEntry> {
        self.entries.iter().filter(|e| !e.coefficient.is_zero())
    }
}

/// The union of the selected disjuncts (0-based indices) with free set X.
pub fn combined_query(psi: &Ucq, j: &BTreeSet<usize>) -> Result<ConjunctiveQuery> {
    if j.is_empty() {
        return Err(Error::precondition("combined query needs a nonempty J"));
    }
    if let Some(&bad) = j.iter().find(|&&i| i >= psi.len()) {
        return Err(Error::precondition(format!(
            "disjunct index {} out of range 1..={}",
            bad + 1,
            psi.len()
        )));
    }
    let mut it = j.iter();
    let mut acc = psi.disjuncts()[*it.next().expect("nonempty")].clone();
    for &i in it {
        acc = crate::structure::union_structures(&acc, &psi.disjuncts()[i])?;
    }
    ConjunctiveQuery::new(acc, psi.free())
}

/// All disjuncts laid over one element numbering, with per-disjunct tuple ids.
struct Layout {
    master: Structure,
    free: BTreeSet<Elem>,
    tuples: Vec<(usize, Vec<Elem>)>,
    disjunct_tuples: Vec<Vec<usize>>,
    disjunct_elems: Vec<Vec<Elem>>,
}

impl Layout {
    fn new(psi: &Ucq) -> Self {
        let mut master = Structure::new(psi.signature().clone());
        for f in psi.free() {
            master.add_element(f);
        }
        let mut ids: BTreeMap<(usize, Vec<Elem>), usize> = BTreeMap::new();
        let mut tuples = Vec::new();
        let mut disjunct_tuples = Vec::new();
        let mut disjunct_elems = Vec::new();
        for d in psi.disjuncts() {
            let map: Vec<Elem> = d.names().iter().map(|n| master.add_element(n)).collect();
            disjunct_elems.push(map.clone());
            let mut mine = Vec::new();
            for (r, t) in d.tuples() {
                let key = (r, t.iter().map(|&e| map[e as usize]).collect::<Vec<_>>());
                let next = tuples.len();
                let id = *ids.entry(key.clone()).or_insert_with(|| {
                    tuples.push(key);
                    next
                });
                mine.push(id);
            }
            disjunct_tuples.push(mine);
        }
        let free = psi
            .free()
            .iter()
            .map(|f| master.element(f).expect("added"))
            .collect();
        Layout {
            master,
            free,
            tuples,
            disjunct_tuples,
            disjunct_elems,
        }
    }
}

/// Running multiset union driven by single-disjunct toggles.
struct Running<'a> {
    layout: &'a Layout,
    tuple_count: Vec<u32>,
    elem_count: Vec<u32>,
    mask: u64,
}

impl<'a> Running<'a> {
    fn new(layout: &'a Layout) -> Self {
        Running {
            layout,
            tuple_count: vec![0; layout.tuples.len()],
            elem_count: vec![0; layout.master.universe_size()],
            mask: 0,
        }
    }

    fn toggle(&mut self, i: usize) {
        let add = self.mask & (1 << i) == 0;
        self.mask ^= 1 << i;
        for &t in &self.layout.disjunct_tuples[i] {
            if add {
                self.tuple_count[t] += 1;
            } else {
                self.tuple_count[t] -= 1;
            }
        }
        for &e in &self.layout.disjunct_elems[i] {
            if add {
                self.elem_count[e as usize] += 1;
            } else {
                self.elem_count[e as usize] -= 1;
            }
        }
    }

    fn materialize(&self) -> ConjunctiveQuery {
        let m = &self.layout.master;
        let mut s = Structure::new(m.signature().clone());
        let mut map = vec![Elem::MAX; m.universe_size()];
        for e in m.elements() {
            if self.elem_count[e as usize] > 0 || self.layout.free.contains(&e) {
                map[e as usize] = s.add_element(m.name(e));
            }
        }
        for (id, (r, t)) in self.layout.tuples.iter().enumerate() {
            if self.tuple_count[id] > 0 {
                let img = t.iter().map(|&e| map[e as usize]).collect();
                s.insert_tuple(*r, img).expect("elements present");
            }
        }
        let free = self.layout.free.iter().map(|&e| map[e as usize]).collect();
        ConjunctiveQuery::from_indices(s, free).expect("free present")
    }
}

struct Acc {
    coefficient: i64,
    witnesses: Vec<u64>,
    rep_mask: u64,
    rep: ConjunctiveQuery,
}

fn gray(i: u64) -> u64 {
    i ^ (i >> 1)
}

fn run_chunk(
    layout: &Layout,
    mode: ExpansionMode,
    caps: &Caps,
    start: u64,
    end: u64,
) -> Result<BTreeMap<CanonicalCode, Acc>> {
    let mut table: BTreeMap<CanonicalCode, Acc> = BTreeMap::new();
    let mut run = Running::new(layout);
    let first = gray(start);
    for i in 0..layout.disjunct_tuples.len() {
        if first & (1 << i) != 0 {
            run.toggle(i);
        }
    }
    for idx in start..end {
        if idx > start {
            let diff = gray(idx) ^ gray(idx - 1);
            run.toggle(diff.trailing_zeros() as usize);
        }
        let mask = run.mask;
        let q = run.materialize();
        let rep = match mode {
            ExpansionMode::IsomorphismOnly => q,
            ExpansionMode::CoreAndIsomorphism => counting_core(&q, caps)?,
        };
        let code = canonical_form(&rep);
        let sign: i64 = if mask.count_ones() % 2 == 1 { 1 } else { -1 };
        match table.get_mut(&code) {
            Some(acc) => {
                acc.coefficient += sign;
                acc.witnesses.push(mask);
                if mask < acc.rep_mask {
                    acc.rep_mask = mask;
                    acc.rep = rep;
                }
            }
            None => {
                table.insert(
                    code,
                    Acc {
                        coefficient: sign,
                        witnesses: vec![mask],
                        rep_mask: mask,
                        rep,
                    },
                );
            }
        }
    }
    Ok(table)
}

fn merge(
    mut a: BTreeMap<CanonicalCode, Acc>,
    b: BTreeMap<CanonicalCode, Acc>,
) -> BTreeMap<CanonicalCode, Acc> {
    for (code, acc) in b {
        match a.get_mut(&code) {
            Some(x) => {
                x.coefficient += acc.coefficient;
                x.witnesses.extend(acc.witnesses);
                if acc.rep_mask < x.rep_mask {
                    x.rep_mask = acc.rep_mask;
                    x.rep = acc.rep;
                }
            }
            None => {
                a.insert(code, acc);
            }
        }
    }
    a
}

/// Inclusion-exclusion expansion of `psi` into classes with coefficients.
pub fn cq_expansion(psi: &Ucq, opts: ExpansionOptions, caps: &Caps) -> Result<ExpansionTable> {
    Caps::check(Cap::Disjuncts, psi.len(), caps.max_disjuncts.min(62))?;
    if opts.mode == ExpansionMode::IsomorphismOnly && !psi.is_quantifier_free() {
        return Err(Error::precondition(
            "isomorphism-only expansion needs a quantifier-free UCQ; use core mode",
        ));
    }
    let layout = Layout::new(psi);
    let total: u64 = 1u64 << psi.len();
    let jobs = opts.jobs.max(1);
    let table = if jobs == 1 || total < 64 {
        run_chunk(&layout, opts.mode, caps, 1, total)?
    } else {
        let chunks = (jobs as u64 * 4).min(total - 1);
        let step = (total - 1).div_ceil(chunks);
        let ranges: Vec<(u64, u64)> = (0..chunks)
            .map(|c| (1 + c * step, (1 + (c + 1) * step).min(total)))
            .filter(|(a, b)| a < b)
            .collect();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::precondition(format!("thread pool: {e}")))?;
        let parts: Vec<Result<BTreeMap<CanonicalCode, Acc>>> = pool.install(|| {
            ranges
                .par_iter()
                .map(|&(a, b)| run_chunk(&layout, opts.mode, caps, a, b))
                .collect()
        });
        let mut acc = BTreeMap::new();
        for p in parts {
            acc = merge(acc, p?);
        }
        acc
    };
    let mut entries = Vec::new();
    for (code, mut acc) in table {
        if acc.coefficient == 0 && !opts.keep_zeros {
            continue;
        }
        acc.witnesses.sort_unstable();
        let witnesses = acc
            .witnesses
            .iter()
            .map(|&m| (0..psi.len()).filter(|&i| m & (1 << i) != 0).collect())
            .collect();
        entries.push(ExpansionEntry {
            query: acc.rep,
            code,
            coefficient: BigInt::from(acc.coefficient),
            witnesses,
        });
    }
    Ok(ExpansionTable {
        entries,
        mode: opts.mode,
        source: psi.clone(),
    })
}

/// Coefficient of the class of `q` in the expansion of `psi` (0 if absent).
pub fn coefficient(psi: &Ucq, q: &ConjunctiveQuery, mode: ExpansionMode, caps: &Caps) -> Result<BigInt> {
    let table = cq_expansion(psi, ExpansionOptions::with_mode(mode), caps)?;
    let code = match mode {
        ExpansionMode::IsomorphismOnly => canonical_form(q),
        ExpansionMode::CoreAndIsomorphism => canonical_form(&counting_core(q, caps)?),
    };
    Ok(table.coefficient_of_code(&code))
}

pub const TRIANGLE_ASSUMPTION: &str = "conditional on the Triangle Conjecture";

/// Verdict on linear-time countability of a quantifier-free UCQ.
#[derive(Debug, Clone)]
pub struct MetaVerdict {
    pub linear_time: bool,
    pub blocking_terms: Vec<ExpansionEntry>,
    pub assumption: &'static str,
    /// Set when some atom has arity > 2: the lower-bound side of the verdict
    /// would need hypotheses beyond the Triangle Conjecture.
    pub caveat: Option<String>,
}

fn require_quantifier_free(psi: &Ucq) -> Result<()> {
    if psi.is_quantifier_free() {
        Ok(())
    } else {
        Err(Error::precondition(
            "the UCQ has quantified variables; only quantifier-free inputs are supported",
        ))
    }
}

/// Linear time iff every nonzero-coefficient class is acyclic.
pub fn meta_decide(psi: &Ucq, caps: &Caps, jobs: usize) -> Result<MetaVerdict> {
    require_quantifier_free(psi)?;
    let table = cq_expansion(
        psi,
        ExpansionOptions {
            jobs,
            ..ExpansionOptions::default()
        },
        caps,
    )?;
    let blocking_terms: Vec<ExpansionEntry> = table
        .entries
        .into_iter()
        .filter(|e| !e.coefficient.is_zero() && !is_acyclic(e.query.body()))
        .collect();
    let caveat = (psi.max_arity() > 2)
        .then(|| "arity > 2: unconditional meaning of the verdict not established".to_string());
    Ok(MetaVerdict {
        linear_time: blocking_terms.is_empty(),
        blocking_terms,
        assumption: TRIANGLE_ASSUMPTION,
        caveat,
    })
}

/// Maximum treewidth over nonzero-coefficient classes.
pub fn hereditary_treewidth(psi: &Ucq, caps: &Caps, jobs: usize) -> Result<usize> {
    require_quantifier_free(psi)?;
    let table = cq_expansion(
        psi,
        ExpansionOptions {
            jobs,
            ..ExpansionOptions::default()
        },
        caps,
    )?;
    let mut best = 0;
    for e in table.nonzero() {
        let (w, _) = treewidth_exact(&e.query.body().gaifman_graph(), caps.max_universe)?;
        best = best.max(w);
    }
    Ok(best)
}

/// WL-dimension of a quantifier-free UCQ over labelled graphs, obtained as
/// its hereditary treewidth.
pub fn wl_dimension(psi: &Ucq, caps: &Caps, jobs: usize) -> Result<usize> {
    require_quantifier_free(psi)?;
    if psi.max_arity() > 2 {
        return Err(Error::precondition("WL-dimension needs arity ≤ 2"));
    }
    if psi.disjuncts().iter().any(|d| d.has_self_loop_atom()) {
        return Err(Error::precondition(
            "WL-dimension needs labelled graphs without atoms R(v, v)",
        ));
    }
    hereditary_treewidth(psi, caps, jobs)
}

/// Sum of `|coefficient|`, handy for reporting.
pub fn total_weight(table: &ExpansionTable) -> BigInt {
    table.entries.iter().map(|e| e.coefficient.abs()).sum()
}
