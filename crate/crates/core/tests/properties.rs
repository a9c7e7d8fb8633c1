//! Randomized property suites over fixed diagonal trees.

mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    #[test]
    fn similarity_is_an_equivalence_relation((f, acs) in antichains(3)) {
        check_equivalence(f, &acs)?;
    }

    #[test]
    fn descriptor_equality_iff_similarity_map((f, acs) in antichains(2)) {
        check_descriptor_iff_map(f, &acs)?;
    }

    #[test]
    fn similar_antichains_represent_omega_isomorphic_structures((f, acs) in antichains(2)) {
        check_similar_implies_omega_iso(f, &acs)?;
    }

    #[test]
    fn oracle_is_monotone_in_depth((f, t, d1, d2) in targets_and_depths()) {
        check_monotone(f, t, d1, d2)?;
    }

    #[test]
    fn totals_decompose_over_ordered_copies((f, t, d, _) in targets_and_depths()) {
        check_decomposition(f, t, d)?;
    }
}
