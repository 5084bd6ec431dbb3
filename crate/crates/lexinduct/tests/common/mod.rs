//! Shared oracles for the integration suites. Everything here stays
//! independent of the implementation paths it checks: the segmentation
//! oracle enumerates candidate splits by brute force, and the delta oracle
//! measures description length by actually applying a change and
//! re-parsing.
#![allow(dead_code)] // each test target uses a different subset

use lexinduct::corpus::Corpus;
use lexinduct::lexicon::{Lexicon, WordId};
use lexinduct::search::{measure_total_dl, SearchConfig};
use lexinduct::synth::Rng;

/// Minimum description length over every segmentation of `bytes`, found by
/// plain recursive enumeration with prefix matching (no trie, no DP).
/// Returns the minimum and the number of complete segmentations.
pub fn exhaustive_min_dl(lexicon: &Lexicon, bytes: &[u8]) -> (f64, u64) {
    let words: Vec<(Vec<u8>, f64)> = lexicon
        .live_ids()
        .filter(|&id| lexicon.codelength(id).is_finite())
        .map(|id| (lexicon.surface(id).to_vec(), lexicon.codelength(id)))
        .collect();
    fn go(words: &[(Vec<u8>, f64)], bytes: &[u8], acc: f64, best: &mut f64, count: &mut u64) {
        if bytes.is_empty() {
            *count += 1;
            if acc < *best {
                *best = acc;
            }
            return;
        }
        for (surface, len) in words {
            if bytes.starts_with(surface) {
                go(words, &bytes[surface.len()..], acc + len, best, count);
            }
        }
    }
    let mut best = f64::INFINITY;
    let mut count = 0;
    go(&words, bytes, 0.0, &mut best, &mut count);
    (best, count)
}

/// Total DL measured by a full re-parse of the corpus against the lexicon's
/// current probabilities, plus the cost of the stored definitions.
pub fn measured_dl(lexicon: &Lexicon, corpus: &Corpus, cfg: &SearchConfig) -> f64 {
    measure_total_dl(lexicon, corpus, cfg).total_bits
}

/// Random short word-soup corpus over a tiny vocabulary: repetition-rich
/// but irregular, the regime where add/delete candidates are plentiful.
pub fn random_word_soup(rng: &mut Rng, max_bytes: usize) -> Vec<u8> {
    const SYLLABLES: &[&str] = &["ba", "ko", "ti", "ra", "mu", "s", "en", "lo"];
    let vocab_size = 3 + rng.below(4);
    let mut vocab = Vec::with_capacity(vocab_size);
    for _ in 0..vocab_size {
        let parts = 1 + rng.below(2);
        let mut w = String::new();
        for _ in 0..=parts {
            w.push_str(SYLLABLES[rng.below(SYLLABLES.len())]);
        }
        vocab.push(w);
    }
    let mut out = Vec::new();
    while out.len() < max_bytes {
        let w = &vocab[rng.below(vocab.len())];
        if out.len() + w.len() > max_bytes {
            break;
        }
        out.extend_from_slice(w.as_bytes());
    }
    out
}

/// A random lexicon over a small alphabet with random positive counts.
pub fn random_small_lexicon(rng: &mut Rng, max_nonterminals: usize) -> Lexicon {
    let alphabet = b"abcd";
    let mut lexicon = Lexicon::new();
    let n_words = rng.below(max_nonterminals + 1);
    for _ in 0..n_words {
        let len = 2 + rng.below(3);
        let comps: Vec<WordId> = (0..len)
            .map(|_| WordId::terminal(alphabet[rng.below(alphabet.len())]))
            .collect();
        // duplicate definitions are fine to skip
        let _ = lexicon.add_word(&comps);
    }
    let mut counts = vec![0.0; lexicon.table_len()];
    for &b in alphabet {
        counts[b as usize] = 1.0 + rng.below(20) as f64;
    }
    let ids: Vec<WordId> = lexicon.nonterminal_ids().collect();
    for id in ids {
        counts[id.index()] = 1.0 + rng.below(20) as f64;
    }
    lexicon.reestimate(&counts).unwrap();
    lexicon
}

/// A random byte string over the same alphabet as `random_small_lexicon`.
pub fn random_string(rng: &mut Rng, max_len: usize) -> Vec<u8> {
    let alphabet = b"abcd";
    let len = 1 + rng.below(max_len);
    (0..len)
        .map(|_| alphabet[rng.below(alphabet.len())])
        .collect()
}
