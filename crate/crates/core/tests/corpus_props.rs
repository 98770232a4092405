use dyadscreen::corpus::{
    build_document, label_for_phq9, read_corpus, write_corpus, Budget, Encounter, Speaker,
    SpeakerConfig, Utterance,
};
use dyadscreen::lexicon::tokenize;
use proptest::prelude::*;

const WORDS: &[&str] = &["I", "feel", "tired,", "okay.", "Doctor's", "--", "sleep?", "3", "well", "\"fine\""];

fn arb_utterance() -> impl Strategy<Value = Utterance> {
    (0..3usize, prop::collection::vec(prop::sample::select(WORDS), 0..8)).prop_map(|(s, w)| {
        let speaker = [Speaker::Patient, Speaker::Doctor, Speaker::Other][s];
        Utterance::new(speaker, w.join(" "))
    })
}

fn arb_encounter(id: usize) -> impl Strategy<Value = Encounter> {
    (0..=27u8, prop::collection::vec(arb_utterance(), 0..12)).prop_map(move |(phq9, utterances)| {
        Encounter {
            id: format!("enc-{id}"),
            phq9,
            utterances,
        }
    })
}

proptest! {
    #[test]
    fn roles_partition_combined(e in arb_encounter(0)) {
        let comb = build_document(&e, SpeakerConfig::Combined, Budget::Full).tokens;
        let mut parts = build_document(&e, SpeakerConfig::PatientOnly, Budget::Full).tokens;
        parts.extend(build_document(&e, SpeakerConfig::ProviderOnly, Budget::Full).tokens);
        let mut sorted = comb.clone();
        sorted.sort();
        parts.sort();
        prop_assert_eq!(sorted, parts);
        let temporal: Vec<String> = e.utterances.iter().flat_map(|u| tokenize(&u.text)).collect();
        prop_assert_eq!(comb, temporal);
    }

    #[test]
    fn truncation_is_a_prefix(e in arb_encounter(0), n in 1usize..60, c in 0..3usize) {
        let config = SpeakerConfig::ALL[c];
        let full = build_document(&e, config, Budget::Full).tokens;
        let cut = build_document(&e, config, Budget::First(n));
        prop_assert_eq!(&cut.tokens[..], &full[..n.min(full.len())]);
        let covered: usize = cut.turns.iter().map(|t| t.end - t.start).sum();
        prop_assert_eq!(covered, cut.tokens.len());
    }

    #[test]
    fn label_is_monotone(a in 0..=27u8, b in 0..=27u8) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(label_for_phq9(lo) <= label_for_phq9(hi));
    }

    #[test]
    fn corpus_round_trips(
        encs in prop::collection::vec(arb_encounter(0), 1..6)
    ) {
        let encs: Vec<Encounter> = encs
            .into_iter()
            .enumerate()
            .map(|(i, mut e)| { e.id = format!("enc-{i}"); e })
            .collect();
        let mut buf = Vec::new();
        write_corpus(&mut buf, &encs).unwrap();
        prop_assert_eq!(read_corpus(&buf[..]).unwrap(), encs);
    }
}
