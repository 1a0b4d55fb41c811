use ciugraph::lexicon::Lexicon;
use ciugraph::normalize::{lemmatize, LemmaRules};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SUFFIXES: [&str; 12] = [
    "", "s", "es", "ies", "ed", "ied", "ing", "er", "ers", "ly", "sses", "ings",
];

/// Lexicon words, irregular forms, their inflections and random letter
/// strings with inflection-like endings: 10,000 distinct words.
fn sample() -> Vec<String> {
    let rules = LemmaRules::default();
    let mut words: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();
    for w in Lexicon::default().entries().keys() {
        for s in SUFFIXES {
            words.insert(format!("{w}{s}"));
        }
    }
    for (k, v) in &rules.irregulars {
        words.insert(k.clone());
        words.insert(v.clone());
    }
    words.extend(rules.protected.iter().cloned());
    let mut rng = ChaCha8Rng::seed_from_u64(10_000);
    const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyzeeaaiioou";
    while words.len() < 10_000 {
        let len = rng.random_range(1..9);
        let stem: String = (0..len)
            .map(|_| LETTERS[rng.random_range(0..LETTERS.len())] as char)
            .collect();
        let suffix = SUFFIXES[rng.random_range(0..SUFFIXES.len())];
        words.insert(format!("{stem}{suffix}"));
    }
    words.into_iter().take(10_000).collect()
}

#[test]
fn idempotent_on_ten_thousand_words() {
    let rules = LemmaRules::default();
    let words = sample();
    assert_eq!(words.len(), 10_000);
    for w in &words {
        let once = lemmatize(w, &rules);
        assert_eq!(lemmatize(&once, &rules), once, "{w}");
    }
}

proptest! {
    #[test]
    fn idempotent_on_arbitrary_words(w in "[a-z]{1,12}(s|es|ies|ed|ing|ied)?") {
        let rules = LemmaRules::default();
        let once = lemmatize(&w, &rules);
        prop_assert_eq!(lemmatize(&once, &rules), once);
    }
}
