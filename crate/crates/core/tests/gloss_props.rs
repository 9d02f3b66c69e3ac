use igtmt_core::corpus::{load_sigmorphon, split_support, write_sigmorphon, Corpus, CorpusMeta, SplitSpec};
use igtmt_core::igt::{
    parse_gloss_line, render_gloss, strip_grammatical_labels, IgtEntry, LabelLexicon, LangCode, MorphemeKind,
};
use proptest::prelude::*;

/// Gloss-like text: labels, lemmata, digits, dots, hyphen variants, odd spacing.
fn gloss_text() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        Just("3SG".to_string()),
        Just("PST".to_string()),
        Just("1sg.abs".to_string()),
        Just("cop.PST".to_string()),
        Just("-".to_string()),
        Just("--".to_string()),
        Just("\u{2010}".to_string()),
        Just(" ".to_string()),
        Just("\t".to_string()),
        Just(".".to_string()),
        "[a-zA-Z0-9]{1,5}",
        "[àéöÿßØ]{1,2}",
    ];
    prop::collection::vec(piece, 0..16).prop_map(|v| v.concat())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn normal_form_is_a_fixed_point(s in gloss_text()) {
        let once = render_gloss(&parse_gloss_line(&s));
        let twice = render_gloss(&parse_gloss_line(&once));
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(parse_gloss_line(&once), parse_gloss_line(&s));
    }

    #[test]
    fn stripping_is_idempotent_and_gram_free(s in gloss_text()) {
        let stripped = strip_grammatical_labels(&parse_gloss_line(&s));
        prop_assert!(stripped.morphemes().all(|m| m.kind() == MorphemeKind::Lex));
        prop_assert_eq!(strip_grammatical_labels(&stripped), stripped.clone());
        let reparsed = parse_gloss_line(&render_gloss(&stripped));
        prop_assert!(reparsed.morphemes().all(|m| !m.is_gram()));
    }

    #[test]
    fn surfaces_are_never_empty(s in gloss_text()) {
        let g = parse_gloss_line(&s);
        for w in g.words() {
            prop_assert!(!w.morphemes().is_empty());
        }
        prop_assert!(g.morphemes().all(|m| !m.surface().is_empty()));
    }

    #[test]
    fn classification_is_a_function_of_surface(s in "[a-zA-Z0-9.]{1,8}") {
        let lex = LabelLexicon::default();
        prop_assert_eq!(lex.classify(&s), lex.classify(&s));
        prop_assert_eq!(lex.classify(&s), LabelLexicon::default().classify(&s));
    }
}

fn word() -> impl Strategy<Value = String> {
    "[a-zA-Z]{1,6}"
}

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec(word(), 1..5).prop_map(|w| w.join(" "))
}

fn entry() -> impl Strategy<Value = IgtEntry> {
    (
        sentence(),
        sentence(),
        prop::option::of(sentence()),
        prop::option::of(prop::collection::vec(
            prop_oneof![word(), Just("3SG-see".to_string())],
            1..4,
        )),
    )
        .prop_map(|(t, l, m, g)| {
            let mut e = IgtEntry::new(t, l, LangCode::new("swa"));
            if let Some(m) = m {
                e = e.with_segmentation(m);
            }
            if let Some(g) = g {
                e = e.with_gloss(&g.join(" "));
            }
            e
        })
}

proptest! {
    #[test]
    fn sigmorphon_round_trip(entries in prop::collection::vec(entry(), 0..6)) {
        let mut corpus = Corpus::new("rt", LangCode::new("swa"), LangCode::new("en"));
        corpus.entries = entries;
        let text = write_sigmorphon(&corpus);
        let back = load_sigmorphon(&text, &CorpusMeta::new("rt", "swa")).unwrap();
        prop_assert!(back.warnings.is_empty());
        prop_assert_eq!(back.corpus.entries.len(), corpus.entries.len());
        for (a, b) in corpus.entries.iter().zip(&back.corpus.entries) {
            prop_assert_eq!(&a.transcription, &b.transcription);
            prop_assert_eq!(&a.translation, &b.translation);
            prop_assert_eq!(&a.segmentation, &b.segmentation);
            prop_assert_eq!(&a.gloss, &b.gloss);
        }
    }

    #[test]
    fn split_concatenates_back(entries in prop::collection::vec(entry(), 0..8), n in 0usize..10) {
        let mut corpus = Corpus::new("s", LangCode::new("swa"), LangCode::new("en"));
        corpus.entries = entries;
        match split_support(&corpus, SplitSpec { n_support: n }) {
            Ok((support, eval)) => {
                prop_assert_eq!(support.len(), n);
                prop_assert_eq!(support.len() + eval.len(), corpus.len());
                let mut joined = support.entries.clone();
                joined.extend(eval.entries.clone());
                prop_assert_eq!(joined, corpus.entries.clone());
            }
            Err(_) => prop_assert!(n > corpus.len()),
        }
    }

    #[test]
    fn loading_is_deterministic(entries in prop::collection::vec(entry(), 0..4)) {
        let mut corpus = Corpus::new("d", LangCode::new("swa"), LangCode::new("en"));
        corpus.entries = entries;
        let text = write_sigmorphon(&corpus);
        let meta = CorpusMeta::new("d", "swa");
        prop_assert_eq!(
            load_sigmorphon(&text, &meta).unwrap().corpus,
            load_sigmorphon(&text, &meta).unwrap().corpus
        );
    }
}
