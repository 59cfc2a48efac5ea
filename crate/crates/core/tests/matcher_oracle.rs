mod common;

use kexprint::fingerprint::{render, Element, Fingerprint};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn verdict(fp: &Fingerprint, labels: &[bool]) -> Option<(usize, usize)> {
    fp.compile().match_slice(labels).span.map(|s| (s.start, s.end))
}

fn widen(elements: &mut [Element]) {
    for element in elements {
        match element {
            Element::Unit(unit) => {
                unit.lo = unit.lo.saturating_sub(1);
                unit.hi = unit.hi.saturating_add(2);
            }
            Element::Group(group) => group.alternatives.iter_mut().for_each(|alt| widen(alt)),
        }
    }
}

fn make_optional(elements: &mut [Element]) -> bool {
    for element in elements {
        if let Element::Group(group) = element {
            if !group.optional {
                group.optional = true;
                return true;
            }
        }
    }
    false
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn agrees_with_backtracking(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fp = common::random_fingerprint(&mut rng);
        let labels = common::random_labels(&mut rng, 64);
        prop_assert_eq!(verdict(&fp, &labels), common::oracle_match(&fp, &labels), "{}", render(&fp));
    }

    #[test]
    fn widening_bounds_keeps_matches(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fp = common::random_fingerprint(&mut rng);
        let labels = common::random_labels(&mut rng, 64);
        let mut wide = fp.clone();
        widen(&mut wide.pattern.elements);
        if fp.compile().is_match(&labels) {
            prop_assert!(wide.compile().is_match(&labels), "{} -> {}", render(&fp), render(&wide));
        }
    }

    #[test]
    fn optional_group_keeps_matches(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fp = common::random_fingerprint(&mut rng);
        let labels = common::random_labels(&mut rng, 64);
        let mut loose = fp.clone();
        if make_optional(&mut loose.pattern.elements) && fp.compile().is_match(&labels) {
            prop_assert!(loose.compile().is_match(&labels));
        }
    }

    #[test]
    fn rendered_pattern_reparses(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fp = common::random_fingerprint(&mut rng);
        let again = kexprint::fingerprint::parse_fingerprint(&render(&fp)).unwrap();
        prop_assert_eq!(again.pattern, fp.pattern);
    }
}
