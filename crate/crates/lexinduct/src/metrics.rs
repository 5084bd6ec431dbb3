//! Segmentation evaluation against true-word ground truth: recall,
//! crossing-brackets, and tree statistics.

use crate::parser::SegTree;
use crate::{ByteSpan, Error, Result};
use serde::Serialize;
use std::collections::HashSet;
use std::fmt;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SegReport {
    /// Percent of true-word tokens whose exact span is a tree node.
    pub recall_tokens: f64,
    /// Percent of distinct true-word strings recalled at least once.
    pub recall_types: f64,
    /// Percent of true-word tokens strictly crossed by some tree node.
    pub crossing_brackets: f64,
    pub node_count: usize,
    pub true_word_count: usize,
    pub true_type_count: usize,
    pub nodes_per_true_word: f64,
    pub utterance_count: usize,
}

impl fmt::Display for SegReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "true words          {:>10}", self.true_word_count)?;
        writeln!(f, "true word types     {:>10}", self.true_type_count)?;
        writeln!(f, "recall (tokens)     {:>9.1}%", self.recall_tokens)?;
        if self.recall_types.is_nan() {
            writeln!(f, "recall (types)            n/a")?;
        } else {
            writeln!(f, "recall (types)      {:>9.1}%", self.recall_types)?;
        }
        writeln!(f, "crossing brackets   {:>9.1}%", self.crossing_brackets)?;
        writeln!(f, "tree nodes          {:>10}", self.node_count)?;
        write!(f, "nodes per true word {:>10.2}", self.nodes_per_true_word)
    }
}

/// Spans of every node of every utterance tree, flattened, with the set of
/// utterance ranges for alignment.
pub struct TreeSpans {
    /// Sorted unique (start, end) node spans across all utterances.
    pub spans: Vec<ByteSpan>,
    pub utterances: Vec<ByteSpan>,
    pub node_count: usize,
}

pub fn collect_spans(trees: &[SegTree]) -> TreeSpans {
    let mut spans = Vec::new();
    let mut utterances = Vec::new();
    let mut node_count = 0;
    for tree in trees {
        let s = tree.node_spans();
        node_count += s.len();
        spans.extend(s);
        utterances.push(tree.span);
    }
    spans.sort_unstable();
    spans.dedup();
    TreeSpans {
        spans,
        utterances,
        node_count,
    }
}

fn contains_span(spans: &[ByteSpan], target: ByteSpan) -> bool {
    spans.binary_search(&target).is_ok()
}

/// Percent of true spans that appear as the exact span of some tree node.
pub fn recall(trees: &[SegTree], true_spans: &[ByteSpan]) -> Result<f64> {
    if true_spans.is_empty() {
        return Err(Error::BadSpans("no true spans to evaluate".into()));
    }
    let collected = collect_spans(trees);
    let hits = true_spans
        .iter()
        .filter(|&&s| contains_span(&collected.spans, s))
        .count();
    Ok(100.0 * hits as f64 / true_spans.len() as f64)
}

/// A true span (s, e) is violated when some node span (s', e') strictly
/// crosses it: s' < s < e' < e or s < s' < e < e'.
pub fn crossing_brackets(trees: &[SegTree], true_spans: &[ByteSpan]) -> Result<f64> {
    if true_spans.is_empty() {
        return Err(Error::BadSpans("no true spans to evaluate".into()));
    }
    let collected = collect_spans(trees);
    let violations = true_spans
        .iter()
        .filter(|&&t| crosses_any(&collected.spans, t))
        .count();
    Ok(100.0 * violations as f64 / true_spans.len() as f64)
}

fn crosses_any(spans: &[ByteSpan], (ts, te): ByteSpan) -> bool {
    // only spans starting before te can cross; scan the candidate window
    let hi = spans.partition_point(|&(s, _)| s < te);
    for &(s, e) in &spans[..hi] {
        if (s < ts && ts < e && e < te) || (ts < s && s < te && te < e) {
            return true;
        }
    }
    false
}

/// Unique-span node count and the ratio of nodes to true words.
pub fn tree_stats(trees: &[SegTree], true_word_count: usize) -> (usize, f64) {
    let mut node_count = 0;
    for tree in trees {
        node_count += tree.node_spans().len();
    }
    let ratio = if true_word_count > 0 {
        node_count as f64 / true_word_count as f64
    } else {
        0.0
    };
    (node_count, ratio)
}

/// Full segmentation report for a set of utterance trees against the
/// ground-truth spans, using byte content for type-level recall.
pub fn evaluate(trees: &[SegTree], true_spans: &[ByteSpan], bytes: &[u8]) -> Result<SegReport> {
    if true_spans.is_empty() {
        return Err(Error::BadSpans("no true spans to evaluate".into()));
    }
    let collected = collect_spans(trees);

    let mut token_hits = 0usize;
    let mut crossing = 0usize;
    let mut type_hits: HashSet<&[u8]> = HashSet::new();
    let mut types: HashSet<&[u8]> = HashSet::new();
    for &(s, e) in true_spans {
        let word = &bytes[s..e];
        types.insert(word);
        if contains_span(&collected.spans, (s, e)) {
            token_hits += 1;
            type_hits.insert(word);
        }
        if crosses_any(&collected.spans, (s, e)) {
            crossing += 1;
        }
    }

    Ok(SegReport {
        recall_tokens: 100.0 * token_hits as f64 / true_spans.len() as f64,
        recall_types: 100.0 * type_hits.len() as f64 / types.len() as f64,
        crossing_brackets: 100.0 * crossing as f64 / true_spans.len() as f64,
        node_count: collected.node_count,
        true_word_count: true_spans.len(),
        true_type_count: types.len(),
        nodes_per_true_word: collected.node_count as f64 / true_spans.len() as f64,
        utterance_count: collected.utterances.len(),
    })
}

/// Evaluate from pre-extracted span sets (one per utterance, as parsed back
/// from tree text) instead of in-memory trees.
pub fn evaluate_spans(
    node_spans: &[ByteSpan],
    node_count: usize,
    true_spans: &[ByteSpan],
) -> Result<SegReport> {
    if true_spans.is_empty() {
        return Err(Error::BadSpans("no true spans to evaluate".into()));
    }
    let mut spans = node_spans.to_vec();
    spans.sort_unstable();
    spans.dedup();
    let mut token_hits = 0usize;
    let mut crossing = 0usize;
    for &(s, e) in true_spans {
        if contains_span(&spans, (s, e)) {
            token_hits += 1;
        }
        if crosses_any(&spans, (s, e)) {
            crossing += 1;
        }
    }
    Ok(SegReport {
        recall_tokens: 100.0 * token_hits as f64 / true_spans.len() as f64,
        recall_types: f64::NAN, // surfaces unknown without the byte stream
        crossing_brackets: 100.0 * crossing as f64 / true_spans.len() as f64,
        node_count,
        true_word_count: true_spans.len(),
        true_type_count: 0,
        nodes_per_true_word: node_count as f64 / true_spans.len() as f64,
        utterance_count: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{Lexicon, WordId};
    use crate::parser::{segmentation_tree, Parse};

    fn tid(b: u8) -> WordId {
        WordId::terminal(b)
    }

    fn the_dog_tree() -> (Lexicon, Vec<SegTree>) {
        let mut lex = Lexicon::new();
        let the = lex.add_word(&[tid(b't'), tid(b'h'), tid(b'e')]).unwrap();
        let dog = lex.add_word(&[tid(b'd'), tid(b'o'), tid(b'g')]).unwrap();
        let parse = Parse {
            tokens: vec![the, dog],
            dl_bits: 0.0,
            span: (0, 6),
        };
        let tree = segmentation_tree(&lex, &parse);
        (lex, vec![tree])
    }

    #[test]
    fn perfect_segmentation_scores_full_recall() {
        let (_, trees) = the_dog_tree();
        let truth = vec![(0, 3), (3, 6)];
        assert_eq!(recall(&trees, &truth).unwrap(), 100.0);
        assert_eq!(crossing_brackets(&trees, &truth).unwrap(), 0.0);
    }

    #[test]
    fn wrong_segmentation_scores_zero_recall() {
        let mut lex = Lexicon::new();
        let th = lex.add_word(&[tid(b't'), tid(b'h')]).unwrap();
        let ed = lex.add_word(&[tid(b'e'), tid(b'd')]).unwrap();
        let og = lex.add_word(&[tid(b'o'), tid(b'g')]).unwrap();
        let parse = Parse {
            tokens: vec![th, ed, og],
            dl_bits: 0.0,
            span: (0, 6),
        };
        let trees = vec![segmentation_tree(&lex, &parse)];
        let truth = vec![(0, 3), (3, 6)];
        assert_eq!(recall(&trees, &truth).unwrap(), 0.0);
    }

    #[test]
    fn themoon_example_crosses() {
        // parse [them][o][on] of "themoon"; truth "the" (0,3), "moon" (3,7)
        let mut lex = Lexicon::new();
        let the = lex.add_word(&[tid(b't'), tid(b'h'), tid(b'e')]).unwrap();
        let them = lex.add_word(&[the, tid(b'm')]).unwrap();
        let on = lex.add_word(&[tid(b'o'), tid(b'n')]).unwrap();
        let parse = Parse {
            tokens: vec![them, tid(b'o'), on],
            dl_bits: 0.0,
            span: (0, 7),
        };
        let trees = vec![segmentation_tree(&lex, &parse)];
        let truth = vec![(0, 3), (3, 7)];
        // "the" is recalled (inside "them"); "moon" is not
        let report = evaluate(&trees, &truth, b"themoon").unwrap();
        assert_eq!(report.recall_tokens, 50.0);
        // "moon" (3,7) is crossed by node "them" (0,4)
        assert_eq!(report.crossing_brackets, 50.0);
        // a true span equal to a node span is never a violation
        assert!(!crosses_any(&[(3, 7)], (3, 7)));
    }

    #[test]
    fn nested_spans_do_not_cross() {
        let (_, trees) = the_dog_tree();
        // single letters nest inside the word nodes
        let truth = vec![(0, 1), (3, 6)];
        assert_eq!(crossing_brackets(&trees, &truth).unwrap(), 0.0);
        // leaf spans count as nodes, so single letters are recalled
        assert_eq!(recall(&trees, &truth).unwrap(), 100.0);
    }

    #[test]
    fn empty_truth_is_an_error() {
        let (_, trees) = the_dog_tree();
        assert!(recall(&trees, &[]).is_err());
        assert!(crossing_brackets(&trees, &[]).is_err());
        assert!(evaluate(&trees, &[], b"thedog").is_err());
    }

    #[test]
    fn node_count_respects_tree_bound() {
        let (_, trees) = the_dog_tree();
        let (nodes, ratio) = tree_stats(&trees, 2);
        // "thedog": 6 leaves + 2 word nodes = 8 unique spans, < 2n-1 = 11
        assert_eq!(nodes, 8);
        assert!((ratio - 4.0).abs() < 1e-12);
        let single = {
            let lex = Lexicon::new();
            let parse = Parse {
                tokens: vec![tid(b'x')],
                dl_bits: 0.0,
                span: (0, 1),
            };
            vec![segmentation_tree(&lex, &parse)]
        };
        assert_eq!(tree_stats(&single, 1).0, 1);
    }

    #[test]
    fn span_categories_partition_the_truth() {
        // matched, missed-and-crossed, missed-and-clear are disjoint and
        // cover every true span
        let mut lex = Lexicon::new();
        let the = lex.add_word(&[tid(b't'), tid(b'h'), tid(b'e')]).unwrap();
        let them = lex.add_word(&[the, tid(b'm')]).unwrap();
        let on = lex.add_word(&[tid(b'o'), tid(b'n')]).unwrap();
        let parse = Parse {
            tokens: vec![them, tid(b'o'), on],
            dl_bits: 0.0,
            span: (0, 7),
        };
        let trees = vec![segmentation_tree(&lex, &parse)];
        let truth = vec![(0, 3), (0, 4), (3, 7)];
        let collected = collect_spans(&trees);
        let mut matched = 0;
        let mut crossed = 0;
        let mut clear = 0;
        for &t in &truth {
            if contains_span(&collected.spans, t) {
                matched += 1;
            } else if crosses_any(&collected.spans, t) {
                crossed += 1;
            } else {
                clear += 1;
            }
        }
        assert_eq!(matched + crossed + clear, truth.len());
        assert_eq!((matched, crossed, clear), (2, 1, 0));
    }

    #[test]
    fn metrics_are_order_invariant() {
        let mut lex = Lexicon::new();
        let ab = lex.add_word(&[tid(b'a'), tid(b'b')]).unwrap();
        let cd = lex.add_word(&[tid(b'c'), tid(b'd')]).unwrap();
        let p1 = Parse {
            tokens: vec![ab],
            dl_bits: 0.0,
            span: (0, 2),
        };
        let p2 = Parse {
            tokens: vec![cd],
            dl_bits: 0.0,
            span: (2, 4),
        };
        let t1 = segmentation_tree(&lex, &p1);
        let t2 = segmentation_tree(&lex, &p2);
        let truth = vec![(0, 2), (2, 4)];
        let fwd = recall(&[t1.clone(), t2.clone()], &truth).unwrap();
        let rev = recall(&[t2, t1], &truth).unwrap();
        assert_eq!(fwd, rev);
    }
}
