use dyadscreen::corpus::SpeakerConfig;
use dyadscreen::lexicon::Lexicon;
use dyadscreen::stats::{adjust_p, group_difference_table, welch_t};
use dyadscreen::synth::{generate_corpus, LengthSpec, SynthSpec};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arb_group() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0..50.0f64, 2..20)
}

proptest! {
    #[test]
    fn welch_is_antisymmetric(a in arb_group(), b in arb_group()) {
        let ab = welch_t(&a, &b).unwrap();
        let ba = welch_t(&b, &a).unwrap();
        prop_assert_eq!(ab.t, -ba.t);
        prop_assert_eq!(ab.p, ba.p);
        prop_assert!((0.0..=1.0).contains(&ab.p));
    }

    #[test]
    fn bh_is_monotone_and_bounded(p in prop::collection::vec(0.0..=1.0f64, 1..30), i in 0usize..30, bump in 0.0..1.0f64) {
        let q = adjust_p(&p).unwrap();
        prop_assert!(q.iter().zip(&p).all(|(q, p)| *q >= *p && *q <= 1.0));
        let i = i % p.len();
        let mut raised = p.clone();
        raised[i] = (raised[i] + bump).min(1.0);
        let q2 = adjust_p(&raised).unwrap();
        prop_assert!(q.iter().zip(&q2).all(|(a, b)| b >= a));
    }

    #[test]
    fn bh_single_value_is_identity(p in 0.0..=1.0f64) {
        prop_assert_eq!(adjust_p(&[p]).unwrap(), vec![p]);
    }
}

#[test]
fn null_permutations_rarely_flag() {
    let mut spec = SynthSpec::demo(120, 3);
    spec.patient_length = LengthSpec { mean: 150.0, sd: 60.0 };
    spec.provider_length = LengthSpec { mean: 180.0, sd: 70.0 };
    let (mut corpus, _) = generate_corpus(&spec).unwrap();
    let lex = Lexicon::demo();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut flagged, mut total) = (0usize, 0usize);
    for _ in 0..100 {
        let mut phq: Vec<u8> = corpus.iter().map(|e| e.phq9).collect();
        phq.shuffle(&mut rng);
        corpus.iter_mut().zip(phq).for_each(|(e, p)| e.phq9 = p);
        let table = group_difference_table(&corpus, &lex, &SpeakerConfig::ALL).unwrap();
        total += table.len();
        flagged += table.iter().filter(|r| r.significant).count();
    }
    let rate = flagged as f64 / total as f64;
    let slack = 3.0 * (0.05f64 * 0.95 / total as f64).sqrt();
    assert!(rate <= 0.05 + slack, "flag rate {rate}");
}
