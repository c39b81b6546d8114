//! Whatever a model replies, parsing either fails softly or yields a value
//! the clamps force into range.

use hgmcts_core::backends::{clamp_exploration, clamp_retrieval};
use hgmcts_core::BackendError;
use hgmcts_remote::parse::{parse_feedback, parse_score, parse_subqueries};
use proptest::prelude::*;

fn reply() -> impl Strategy<Value = String> {
    prop_oneof![
        any::<String>(),
        "[a-z ]{0,20}-?[0-9]{1,25}[a-z .]{0,20}",
        "```json\\n\\{\"solved\": \\[[0-9, \"a-z]{0,12}\\], \"new\": \\[\\]\\}\\n```",
        "(SOLVED|UNSOLVED|NEW|DONE): ?[0-9a-z ,]{0,16}",
        Just(String::new()),
        Just("{\"score\": \"high\"}".to_string()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn scores_are_clamped_into_range(raw in reply()) {
        match parse_score(&raw) {
            Ok(n) => {
                prop_assert!(clamp_exploration(n).0 <= 1);
                prop_assert!(clamp_retrieval(n).0 <= 2);
                let in_range = (0..=1).contains(&n);
                prop_assert_eq!(clamp_exploration(n).1.is_none(), in_range);
            }
            Err(e) => prop_assert!(matches!(e, BackendError::ParseFailed(_))),
        }
    }

    #[test]
    fn feedback_and_subqueries_never_panic(raw in reply()) {
        if let Err(e) = parse_feedback(&raw) {
            prop_assert!(!e.is_fatal());
        }
        if let Ok(list) = parse_subqueries(&raw) {
            prop_assert!(list.iter().all(|q| !q.trim().is_empty()));
        }
    }
}
