use dyadscreen::corpus::{summarize, write_corpus, Budget, SpeakerConfig};
use dyadscreen::eval::mean_sd;
use dyadscreen::lexicon::{lexicon_feature_matrix, Lexicon};
use dyadscreen::synth::{expected_rates, generate_corpus, SynthSpec};
use proptest::prelude::*;

#[test]
fn generator_words_hit_exactly_their_category() {
    let spec = SynthSpec::demo(1, 0);
    let lex = Lexicon::demo();
    for cat in &spec.categories {
        let want = lex.category_index(&cat.name).expect("category in demo lexicon");
        for w in &cat.words {
            assert_eq!(lex.match_token(w), vec![want], "word {w}");
        }
    }
    for w in &spec.filler {
        assert!(lex.match_token(w).is_empty(), "filler {w}");
    }
}

#[test]
fn same_seed_gives_identical_bytes() {
    let bytes = |seed| {
        let (c, truth) = generate_corpus(&SynthSpec::demo(30, seed)).unwrap();
        let mut v = Vec::new();
        write_corpus(&mut v, &c).unwrap();
        v.extend(serde_json::to_vec(&truth).unwrap());
        v
    };
    assert_eq!(bytes(4), bytes(4));
    assert_ne!(bytes(4), bytes(5));
}

#[test]
fn empirical_rates_match_expected_within_three_se() {
    let spec = SynthSpec::demo(2000, 21);
    let (corpus, truth) = generate_corpus(&spec).unwrap();
    assert_eq!(truth.expected, expected_rates(&spec).unwrap());
    let lex = Lexicon::demo();
    let mut worst = 0.0f64;
    for config in SpeakerConfig::ALL {
        let means = match config {
            SpeakerConfig::PatientOnly => &truth.expected.patient,
            SpeakerConfig::ProviderOnly => &truth.expected.provider,
            SpeakerConfig::Combined => &truth.expected.combined,
        };
        let fm = lexicon_feature_matrix(&corpus, &lex, config, Budget::Full);
        for (ci, cat) in spec.categories.iter().enumerate() {
            let j = lex.category_index(&cat.name).unwrap();
            for positive in [false, true] {
                let vals: Vec<f64> = fm
                    .rows
                    .iter()
                    .zip(&fm.labels)
                    .filter(|(_, l)| l.is_positive() == positive)
                    .map(|(r, _)| r[j])
                    .collect();
                let (m, sd) = mean_sd(&vals);
                let se = sd / (vals.len() as f64).sqrt();
                let expected = if positive { means.positive[ci] } else { means.negative[ci] };
                let z = (m - expected).abs() / se;
                worst = worst.max(z);
                assert!(z <= 3.0, "{config} {} positive={positive}: {m} vs {expected} ({z:.2} SE)", cat.name);
            }
        }
    }
    assert!(worst > 0.0);
}

#[test]
fn prevalence_is_exact() {
    let mut spec = SynthSpec::demo(1000, 1);
    spec.prevalence = 0.228;
    let (c, _) = generate_corpus(&spec).unwrap();
    assert_eq!(summarize(&c).n_positive, 228);
}

proptest! {
    #[test]
    fn combined_effect_exceeds_provider_effect(rho in 0.0..0.99f64, mult in prop::sample::select(vec![0.3, 0.6, 1.5, 2.0, 3.0])) {
        let mut spec = SynthSpec::demo(10, 0);
        spec.mirroring = rho;
        for c in &mut spec.categories {
            c.depression_multiplier = mult;
        }
        let e = expected_rates(&spec).unwrap();
        for i in 0..spec.categories.len() {
            let (comb, prov, pat) = (e.combined.effect(i), e.provider.effect(i), e.patient.effect(i));
            prop_assert!(comb.abs() > prov.abs());
            prop_assert!(comb.signum() == pat.signum() && comb.abs() < pat.abs());
        }
    }
}
