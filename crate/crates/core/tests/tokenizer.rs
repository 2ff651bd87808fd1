//! The tokenizer grammar agrees with a hand-written scanner.

use fishtank_core::static_engine::StaticDb;
use fishtank_core::static_engine::DEFAULT_BUDGET;
use fishtank_core::term::Term;
use fishtank_core::tweetlog;
use proptest::prelude::*;
use std::sync::LazyLock;

static DB: LazyLock<StaticDb> = LazyLock::new(|| tweetlog::static_db().unwrap().1);

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn grammar_matches_scanner(text in "[a-zA-Z @#]{0,40}") {
        let parses = tweetlog::tokenize(&DB, &text, DEFAULT_BUDGET).unwrap();
        prop_assert_eq!(parses, vec![Term::list(tweetlog::scan_tokens(&text))], "{:?}", text);
    }
}
