use crate::error::{Cap, Error, Result};

/// Hard limits for the exponential parts of the toolkit.
///
/// Exceeding a limit is always an error, never a silent approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    /// Number of disjuncts of a UCQ whose `2^l - 1` subsets get enumerated.
    pub max_disjuncts: usize,
    /// Vertices of the (kernelized) graph handed to the exact treewidth DP.
    pub max_universe: usize,
    /// Universe size for endomorphism searches (minimality and cores).
    pub max_core_universe: usize,
    /// Ground-set size for face enumeration.
    pub max_ground: usize,
    /// Number of assignments the brute-force engines may enumerate.
    pub max_assignments: u128,
    /// Facet count for the facet-intersection Euler characteristic.
    pub max_facets: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_disjuncts: 20,
            max_universe: 20,
            max_core_universe: 12,
            max_ground: 24,
            max_assignments: 10_000_000,
            max_facets: 12,
        }
    }
}

impl Caps {
    pub(crate) fn check(cap: Cap, value: usize, limit: usize) -> Result<()> {
        if value > limit {
            Err(Error::cap(cap, value, limit))
        } else {
            Ok(())
        }
    }
}
