mod common;

use cfid_core::events::{classify_self_events, parse_conjunction, parse_query, Query};
use common::{conjunction, split};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, ..ProptestConfig::default() })]

    #[test]
    fn conjunctions_round_trip(c in conjunction(6, 4, 3, 3)) {
        prop_assert_eq!(parse_conjunction(&c.to_string()).unwrap(), c);
    }

    #[test]
    fn queries_round_trip(c in conjunction(6, 4, 3, 3), mask in 0u8..16) {
        let (gamma, delta) = split(&c, mask);
        prop_assume!(!gamma.is_empty());
        let q = Query::new(gamma, delta);
        let text = q.to_string();
        prop_assert_eq!(parse_query(&text).unwrap(), q.clone());
        // whitespace is insignificant
        prop_assert_eq!(parse_query(&text.replace(", ", " ,\t").replace('|', " | ")).unwrap(), q);
    }

    #[test]
    fn canonicalize_is_idempotent(c in conjunction(6, 4, 3, 3)) {
        let once = c.canonicalize();
        prop_assert_eq!(once.canonicalize(), once.clone());
        let doubled = c.and(&c);
        prop_assert_eq!(doubled.canonicalize(), once);
    }

    #[test]
    fn self_events_are_never_both(c in conjunction(4, 4, 3, 2)) {
        let s = classify_self_events(&c);
        prop_assert!(s.contradictions.iter().all(|e| !s.tautologies.contains(e)));
        for e in c.iter() {
            let own = e.subscript().get(e.base());
            prop_assert_eq!(own.is_some_and(|v| *v != e.value), s.contradictions.contains(e));
            prop_assert_eq!(own == Some(&e.value), s.tautologies.contains(e));
        }
    }
}
