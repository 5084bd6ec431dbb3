//! Golden files freezing the compressed-file layout: the same inputs and
//! settings must keep producing these exact bytes, and the committed bytes
//! must keep decoding.

use lexinduct::codec::{decode, encode, CodecOptions};
use lexinduct::corpus::Corpus;
use lexinduct::search::{run_induction, SearchConfig};

fn pipeline(bytes: Vec<u8>) -> Vec<u8> {
    let mut corpus = Corpus::from_raw(bytes).unwrap();
    let n = corpus.bytes.len();
    corpus.utterance_bounds = corpus
        .bytes
        .iter()
        .enumerate()
        .filter(|&(i, &b)| b == b'\n' && i + 1 < n)
        .map(|(i, _)| i + 1)
        .collect();
    let cfg = SearchConfig {
        outer_iterations: 4,
        min_code_bits: 1.0,
        ..SearchConfig::default()
    };
    let (lexicon, _) = run_induction(&corpus, &cfg).unwrap();
    encode(&corpus, &lexicon, &CodecOptions::default()).unwrap().0
}

#[test]
fn sentences_fixture_is_frozen() {
    let input = b"the cat sat on the mat.\nthe dog sat on the log.\nthe cat and the dog.\n";
    let golden = include_bytes!("golden/sentences.lxz");
    assert_eq!(decode(golden).unwrap(), input.to_vec());
    assert_eq!(pipeline(input.to_vec()), golden.to_vec(), "layout drifted");
}

#[test]
fn repeated_run_fixture_is_frozen() {
    let input = vec![b'a'; 512];
    let golden = include_bytes!("golden/run512.lxz");
    assert_eq!(decode(golden).unwrap(), input);
    assert_eq!(pipeline(input), golden.to_vec(), "layout drifted");
}

#[test]
fn golden_header_fields_hold() {
    let golden = include_bytes!("golden/sentences.lxz");
    assert_eq!(&golden[..4], b"LXZ1");
    assert_eq!(golden[4], 1, "format version");
    let pad = *golden.last().unwrap();
    assert!(pad < 8, "padding byte in range");
}
