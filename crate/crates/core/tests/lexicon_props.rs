use dyadscreen::corpus::{Document, SpeakerConfig};
use dyadscreen::lexicon::{extract_features, Lexicon};
use proptest::prelude::*;

fn doc(tokens: Vec<String>) -> Document {
    Document {
        encounter_id: "d".into(),
        config: SpeakerConfig::Combined,
        tokens,
        token_budget: None,
        turns: Vec::new(),
    }
}

/// (pattern, is_prefix, category ids) with unique (pattern, is_prefix).
type Entry = (String, bool, Vec<u32>);

fn arb_lexicon() -> impl Strategy<Value = (usize, Vec<Entry>)> {
    (1..5usize).prop_flat_map(|n_cat| {
        let entry = ("[ab]{1,3}", any::<bool>(), prop::collection::btree_set(1..=n_cat as u32, 1..=n_cat));
        prop::collection::vec(entry, 0..10).prop_map(move |raw| {
            let mut seen = std::collections::BTreeSet::new();
            let entries = raw
                .into_iter()
                .filter(|(p, pre, _)| seen.insert((p.clone(), *pre)))
                .map(|(p, pre, ids)| (p, pre, ids.into_iter().collect()))
                .collect();
            (n_cat, entries)
        })
    })
}

fn dic_text(n_cat: usize, entries: &[Entry]) -> String {
    let mut s = String::from("%\n");
    for c in 1..=n_cat {
        s.push_str(&format!("{c}\tcat{c}\n"));
    }
    s.push_str("%\n");
    for (p, pre, ids) in entries {
        let ids: Vec<String> = ids.iter().map(|i| i.to_string()).collect();
        s.push_str(&format!("{p}{}\t{}\n", if *pre { "*" } else { "" }, ids.join(",")));
    }
    s
}

fn oracle(n_cat: usize, entries: &[Entry], tokens: &[String]) -> Vec<f64> {
    let mut counts = vec![0usize; n_cat];
    for tok in tokens {
        for c in 1..=n_cat as u32 {
            let hit = entries.iter().any(|(p, pre, ids)| {
                ids.contains(&c) && if *pre { tok.starts_with(p.as_str()) } else { tok == p }
            });
            if hit {
                counts[c as usize - 1] += 1;
            }
        }
    }
    counts
        .iter()
        .map(|&k| if tokens.is_empty() { 0.0 } else { 100.0 * k as f64 / tokens.len() as f64 })
        .collect()
}

fn arb_tokens() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec("[abc]{1,4}", 0..30)
}

proptest! {
    #[test]
    fn matches_brute_force((n_cat, entries) in arb_lexicon(), tokens in arb_tokens()) {
        let lex = Lexicon::parse_str(&dic_text(n_cat, &entries)).unwrap();
        let got = extract_features(&doc(tokens.clone()), &lex).values;
        prop_assert_eq!(got, oracle(n_cat, &entries, &tokens));
    }

    #[test]
    fn duplicating_tokens_keeps_percentages((n_cat, entries) in arb_lexicon(), tokens in arb_tokens()) {
        let lex = Lexicon::parse_str(&dic_text(n_cat, &entries)).unwrap();
        let once = extract_features(&doc(tokens.clone()), &lex).values;
        let twice_tokens: Vec<String> = tokens.iter().chain(&tokens).cloned().collect();
        let twice = extract_features(&doc(twice_tokens), &lex).values;
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn percentages_bounded_and_order_free(
        (n_cat, entries) in arb_lexicon(),
        tokens in arb_tokens(),
        seed in any::<u64>(),
    ) {
        let lex = Lexicon::parse_str(&dic_text(n_cat, &entries)).unwrap();
        let fv = extract_features(&doc(tokens.clone()), &lex);
        prop_assert!(fv.values.iter().all(|v| (0.0..=100.0).contains(v)));
        prop_assert!(fv.values.iter().sum::<f64>() <= 100.0 * n_cat as f64 + 1e-9);
        let mut shuffled = tokens.clone();
        let n = shuffled.len();
        if n > 1 {
            for i in 0..n {
                shuffled.swap(i, (seed as usize).wrapping_mul(i + 7) % n);
            }
        }
        prop_assert_eq!(extract_features(&doc(shuffled), &lex).values, fv.values);
    }

    #[test]
    fn dic_round_trip((n_cat, entries) in arb_lexicon(), tokens in arb_tokens()) {
        let lex = Lexicon::parse_str(&dic_text(n_cat, &entries)).unwrap();
        let back = Lexicon::parse_str(&lex.to_dic_string()).unwrap();
        prop_assert_eq!(back.to_dic_string(), lex.to_dic_string());
        let d = doc(tokens);
        prop_assert_eq!(extract_features(&d, &back), extract_features(&d, &lex));
    }
}

#[test]
fn demo_lexicon_counts_each_occurrence_once_per_category() {
    let lex = Lexicon::demo();
    let tokens: Vec<String> = ["sad", "sadness", "sad", "the"].iter().map(|s| s.to_string()).collect();
    let fv = extract_features(&doc(tokens), &lex);
    let sad = fv.get(&lex, "sadness").unwrap();
    assert_eq!(sad, 75.0);
}
