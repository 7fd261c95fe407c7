use fmeca::{generate, parse_model, write_model, GeneratorOptions, ModelFormat, ParseMode};
use proptest::prelude::*;

fn options() -> impl Strategy<Value = GeneratorOptions> {
    (1usize..=8, 1usize..=12, any::<u64>(), any::<bool>()).prop_map(|(n, m, seed, feasible)| GeneratorOptions {
        failure_modes: n,
        actions: m.max(n),
        seed,
        feasible,
        ..GeneratorOptions::default()
    })
}

fn format() -> impl Strategy<Value = ModelFormat> {
    prop_oneof![Just(ModelFormat::Structured), Just(ModelFormat::Tabular)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_models_round_trip(opts in options(), format in format()) {
        let doc = generate(&opts).unwrap();
        let bytes = write_model(&doc, format);
        let back = parse_model(&bytes, format, ParseMode::Strict).unwrap().document;
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(write_model(&back, format), bytes);
    }

    #[test]
    fn formats_agree(opts in options()) {
        let doc = generate(&opts).unwrap();
        let via_csv = parse_model(&write_model(&doc, ModelFormat::Tabular), ModelFormat::Tabular, ParseMode::Strict)
            .unwrap()
            .document;
        prop_assert_eq!(fmeca::model_digest(&via_csv.model), fmeca::model_digest(&doc.model));
    }

    #[test]
    fn parsing_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..400), format in format()) {
        let _ = parse_model(&bytes, format, ParseMode::Strict);
        let _ = parse_model(&bytes, format, ParseMode::Lenient);
    }

    #[test]
    fn corrupted_models_never_panic(opts in options(), format in format(), cut in 0usize..2000, byte in any::<u8>()) {
        let mut bytes = write_model(&generate(&opts).unwrap(), format);
        let at = cut % bytes.len();
        bytes[at] = byte;
        let _ = parse_model(&bytes, format, ParseMode::Strict);
        bytes.truncate(at);
        let _ = parse_model(&bytes, format, ParseMode::Lenient);
    }
}
