//! Property tests over the core invariants.

mod common;

use common::{random_small_lexicon, random_string};
use lexinduct::codec::{build_code, decode, encode, CodecOptions};
use lexinduct::corpus::Corpus;
use lexinduct::lexicon::{Lexicon, WordId};
use lexinduct::parser::{parse_corpus, viterbi_parse, ParserConfig, SurfaceMatcher};
use lexinduct::synth::Rng;
use proptest::prelude::*;

proptest! {
    #[test]
    fn parse_always_covers_the_input(seed in 0u64..500, len in 1usize..40) {
        let mut rng = Rng::new(seed);
        let lexicon = random_small_lexicon(&mut rng, 8);
        let bytes = random_string(&mut rng, len);
        let matcher = SurfaceMatcher::build(&lexicon, 64);
        let parse = viterbi_parse(&lexicon, &bytes, &matcher);
        let rebuilt: Vec<u8> = parse
            .tokens
            .iter()
            .flat_map(|&t| lexicon.surface(t).to_vec())
            .collect();
        prop_assert_eq!(rebuilt, bytes);
        let sum: f64 = parse.tokens.iter().map(|&t| lexicon.codelength(t)).sum();
        prop_assert!((sum - parse.dl_bits).abs() < 1e-6);
    }

    #[test]
    fn surfaces_concatenate_and_trees_leaf_out(seed in 0u64..300) {
        let mut rng = Rng::new(seed);
        let lexicon = random_small_lexicon(&mut rng, 10);
        for id in lexicon.nonterminal_ids() {
            let concat: Vec<u8> = lexicon
                .components(id)
                .iter()
                .flat_map(|&c| lexicon.surface(c).to_vec())
                .collect();
            prop_assert_eq!(concat, lexicon.surface(id).to_vec());
            let tree = lexicon.expand_tree(id);
            prop_assert_eq!(tree.leaf_count(), lexicon.surface(id).len());
        }
        prop_assert!(lexicon.check_dag());
    }

    #[test]
    fn probabilities_sum_to_one_after_reestimate(seed in 0u64..300, len in 4usize..60) {
        let mut rng = Rng::new(seed);
        let bytes = random_string(&mut rng, len);
        let corpus = Corpus::from_raw(bytes).unwrap();
        let mut lexicon = random_small_lexicon(&mut rng, 6);
        let out = parse_corpus(&lexicon, &corpus, &ParserConfig::default());
        lexicon.reestimate(&out.counts.word_counts).unwrap();
        let p_sum: f64 = lexicon
            .live_ids()
            .map(|id| lexicon.word(id).unwrap().probability)
            .sum();
        prop_assert!((p_sum - 1.0).abs() < 1e-9);
        for id in lexicon.live_ids() {
            let w = lexicon.word(id).unwrap();
            if w.probability > 0.0 {
                prop_assert!((w.codelength + w.probability.log2()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn deleting_a_word_never_breaks_coverage(seed in 0u64..300, len in 2usize..40) {
        let mut rng = Rng::new(seed);
        let mut lexicon = random_small_lexicon(&mut rng, 8);
        let bytes = random_string(&mut rng, len);
        let Some(victim) = lexicon.nonterminal_ids().next() else {
            return Ok(());
        };
        lexicon.delete_word(victim).unwrap();
        lexicon.refresh_probabilities();
        prop_assert!(lexicon.check_dag());
        let matcher = SurfaceMatcher::build(&lexicon, 64);
        let parse = viterbi_parse(&lexicon, &bytes, &matcher);
        let rebuilt: Vec<u8> = parse
            .tokens
            .iter()
            .flat_map(|&t| lexicon.surface(t).to_vec())
            .collect();
        prop_assert_eq!(rebuilt, bytes);
    }

    #[test]
    fn count_totals_are_conserved(seed in 0u64..200, len in 4usize..60) {
        let mut rng = Rng::new(seed);
        let lexicon = random_small_lexicon(&mut rng, 6);
        let bytes = random_string(&mut rng, len);
        let corpus = Corpus::from_raw(bytes).unwrap();
        let out = parse_corpus(&lexicon, &corpus, &ParserConfig::default());
        let utterance_tokens: usize = out.parses.iter().map(|p| p.tokens.len()).sum();
        let definition_tokens: usize =
            out.definition_parses.iter().map(|(_, p)| p.tokens.len()).sum();
        prop_assert!(
            (out.counts.total - (utterance_tokens + definition_tokens) as f64).abs() < 1e-9
        );
    }

    #[test]
    fn codec_round_trips_arbitrary_bytes(bytes in proptest::collection::vec(any::<u8>(), 1..600)) {
        let corpus = Corpus::from_raw(bytes.clone()).unwrap();
        let lexicon = Lexicon::new();
        let (file, report) = encode(&corpus, &lexicon, &CodecOptions::default()).unwrap();
        prop_assert_eq!(decode(&file).unwrap(), bytes);
        prop_assert!(report.realized_bits as f64 >= report.idealized_bits - 1e-6);
    }

    #[test]
    fn huffman_stays_within_a_bit_of_entropy(seed in 0u64..300) {
        let mut rng = Rng::new(seed);
        let mut lexicon = Lexicon::new();
        let mut counts = vec![0.0; lexicon.table_len()];
        let n_live = 2 + rng.below(40);
        for i in 0..n_live {
            counts[i] = 1.0 + rng.below(1000) as f64;
        }
        lexicon.reestimate(&counts).unwrap();
        let code = build_code(&lexicon).unwrap();
        prop_assert!(code.kraft_sum() <= 1.0 + 1e-9);
        let total: f64 = counts.iter().sum();
        let mut realized = 0.0;
        let mut ideal = 0.0;
        for id in lexicon.live_ids() {
            let c = lexicon.count(id);
            if c > 0.0 {
                realized += c * code.len_of(id).unwrap() as f64;
                ideal += c * -(c / total).log2();
            }
        }
        // average realized length within one bit of the entropy
        prop_assert!(realized / total <= ideal / total + 1.0 + 1e-9);
        prop_assert!(realized >= ideal - 1e-6);
    }

    #[test]
    fn lexicon_binary_roundtrip(seed in 0u64..200) {
        let mut rng = Rng::new(seed);
        let lexicon = random_small_lexicon(&mut rng, 10);
        let blob = lexicon.save_binary();
        let back = Lexicon::load_binary(&blob).unwrap();
        prop_assert_eq!(back.save_binary(), blob);
        let ids: Vec<WordId> = lexicon.live_ids().collect();
        let back_ids: Vec<WordId> = back.live_ids().collect();
        prop_assert_eq!(ids, back_ids);
    }
}
