//! The three text parsers must reject garbage with errors, never panics.

use fmtk::logic::Vocabulary;
use proptest::prelude::*;

fn some_vocab() -> Vocabulary {
    Vocabulary::builder()
        .sort("s")
        .sort("t")
        .relation("E", &["s", "s"])
        .relation("R", &["s", "t"])
        .function("f", &["s"], "t")
        .constant("c", "s")
        .build()
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn formula_parser_never_panics(input in "\\PC{0,60}") {
        let vocab = some_vocab();
        let _ = fmtk::formula::parse(&input, &vocab);
    }

    #[test]
    fn formula_parser_never_panics_on_grammar_like_input(
        input in "(forall |exists |I |WF |x|y|s|t|E|R|f|c|\\(|\\)|:|\\.|,|!|&|\\||->|<->|=| ){0,40}"
    ) {
        let vocab = some_vocab();
        let _ = fmtk::formula::parse(&input, &vocab);
    }

    #[test]
    fn set_parser_never_panics(input in "[{},x ]{0,40}") {
        let _ = input.parse::<fmtk::hf::HfSet>();
    }

    #[test]
    fn structure_parser_never_panics(
        input in "(sort |rel |func |const |s|a|b|=|\\(|\\)|,|->|:|\n| ){0,60}"
    ) {
        let _ = fmtk::textio::parse_structure(&input);
        let _ = fmtk::textio::parse_vocabulary(&input);
    }
}
