//! #minimality and #cores by endomorphism search.
//!
//! A query has a non-surjective endomorphism fixing its free set iff for some
//! quantified `y` the body maps into the body minus `y` with the free set
//! pinned. The core is obtained by deleting such `y` one at a time in index
//! order; each step keeps the query #equivalent (the map one way, inclusion
//! the other) and at most `|U|` steps are needed.

use std::collections::BTreeSet;

use crate::caps::Caps;
use crate::error::{Cap, Result};
use crate::hom::HomSearch;
use crate::structure::{ConjunctiveQuery, Elem};

fn removable(q: &ConjunctiveQuery) -> Result<Option<Elem>> {
    let body = q.body();
    for y in q.quantified() {
        let keep: BTreeSet<Elem> = body.elements().filter(|&e| e != y).collect();
        let target = body.induced(&keep);
        // target keeps relative order, so element e < y keeps index e, e > y shifts by one
        let pin: Vec<(Elem, Elem)> = q
            .free()
            .iter()
            .map(|&x| (x, if x < y { x } else { x - 1 }))
            .collect();
        let mut search = HomSearch::new(body, &target, &pin, &BTreeSet::new())?;
        if search.exists() {
            return Ok(Some(y));
        }
    }
    Ok(None)
}

fn check_cap(q: &ConjunctiveQuery, caps: &Caps) -> Result<()> {
    if q.is_quantifier_free() {
        return Ok(());
    }
    Caps::check(
        Cap::CoreUniverse,
        q.body().universe_size(),
        caps.max_core_universe,
    )
}

/// Every endomorphism fixing the free set pointwise is surjective.
pub fn is_counting_minimal(q: &ConjunctiveQuery, caps: &Caps) -> Result<bool> {
    if q.is_quantifier_free() {
        return Ok(true);
    }
    check_cap(q, caps)?;
    Ok(removable(q)?.is_none())
}

/// A #minimal query #equivalent to `q` (its #core), as an induced substructure.
pub fn counting_core(q: &ConjunctiveQuery, caps: &Caps) -> Result<ConjunctiveQuery> {
    check_cap(q, caps)?;
    let mut cur = q.clone();
    while let Some(y) = removable(&cur)? {
        let keep: BTreeSet<Elem> = cur.body().elements().filter(|&e| e != y).collect();
        let body = cur.body().induced(&keep);
        let free: Vec<&str> = cur.free_names();
        cur = ConjunctiveQuery::new(body, &free)?;
    }
    Ok(cur)
}
