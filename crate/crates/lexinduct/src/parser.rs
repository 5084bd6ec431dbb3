//! Minimum-description-length (Viterbi) parsing of byte sequences against a
//! lexicon, plus count accumulation over corpus parses and word definitions.

use crate::corpus::Corpus;
use crate::lexicon::{escape_bytes, unescape_bytes, Lexicon, TreeNode, WordId};
use crate::{ByteSpan, Error, Result};
use std::collections::HashMap;

/// Cost stand-in for unusable words when the input forces them (keeps the
/// dynamic program total while never beating a real code).
const UNREACHABLE_BITS: f64 = 1e12;

#[derive(Clone, Debug)]
pub struct ParserConfig {
    /// Longest word surface the matcher will index.
    pub max_word_len: usize,
    /// Parallel workers for corpus parsing; 1 keeps everything sequential.
    pub threads: usize,
    /// Use summed (forward-backward) expected counts instead of Viterbi
    /// token counts for word counts.
    pub summed_counts: bool,
}

impl Default for ParserConfig {
    fn default() -> Self {
        ParserConfig {
            max_word_len: 64,
            threads: 1,
            summed_counts: false,
        }
    }
}

/// One segmentation of a byte range into lexicon words.
#[derive(Clone, Debug, PartialEq)]
pub struct Parse {
    pub tokens: Vec<WordId>,
    /// Sum of token code lengths in bits.
    pub dl_bits: f64,
    /// The parsed range in corpus coordinates.
    pub span: ByteSpan,
}

/// Usage and adjacency counts gathered from parses.
#[derive(Clone, Debug)]
pub struct CountTable {
    /// c(w), indexed by `WordId::index`.
    pub word_counts: Vec<f64>,
    /// c(W) for adjacent token pairs. Runs of the same word contribute
    /// floor(run/2) to the self pair, so every count is realizable by
    /// non-overlapping replacement.
    pub pair_counts: HashMap<(WordId, WordId), f64>,
    /// Sum of word counts.
    pub total: f64,
}

impl CountTable {
    pub fn new(table_len: usize) -> CountTable {
        CountTable {
            word_counts: vec![0.0; table_len],
            pair_counts: HashMap::new(),
            total: 0.0,
        }
    }

    pub fn count(&self, id: WordId) -> f64 {
        self.word_counts.get(id.index()).copied().unwrap_or(0.0)
    }

    pub fn pair(&self, a: WordId, b: WordId) -> f64 {
        self.pair_counts.get(&(a, b)).copied().unwrap_or(0.0)
    }

    fn add_word(&mut self, id: WordId, weight: f64) {
        self.word_counts[id.index()] += weight;
        self.total += weight;
    }

    /// Record the tokens of one parse: unit counts per token plus adjacent
    /// pairs (self pairs counted per non-overlapping occurrence).
    pub fn record_tokens(&mut self, tokens: &[WordId]) {
        for &t in tokens {
            self.add_word(t, 1.0);
        }
        self.record_pairs(tokens);
    }

    fn record_pairs(&mut self, tokens: &[WordId]) {
        let mut i = 1;
        let mut run = 1usize; // length of the trailing run of equal tokens
        while i < tokens.len() {
            let (a, b) = (tokens[i - 1], tokens[i]);
            if a == b {
                run += 1;
                if run % 2 == 0 {
                    *self.pair_counts.entry((a, b)).or_insert(0.0) += 1.0;
                }
            } else {
                run = 1;
                *self.pair_counts.entry((a, b)).or_insert(0.0) += 1.0;
            }
            i += 1;
        }
    }

    pub fn merge(&mut self, other: CountTable) {
        for (i, c) in other.word_counts.into_iter().enumerate() {
            self.word_counts[i] += c;
        }
        for (k, v) in other.pair_counts {
            *self.pair_counts.entry(k).or_insert(0.0) += v;
        }
        self.total += other.total;
    }

    /// Pairs in a deterministic order (descending count, then ids).
    pub fn sorted_pairs(&self) -> Vec<((WordId, WordId), f64)> {
        let mut pairs: Vec<_> = self.pair_counts.iter().map(|(&k, &v)| (k, v)).collect();
        pairs.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        pairs
    }
}

/// Byte-trie over word surfaces so the parser only touches words actually
/// present at each position.
pub struct SurfaceMatcher {
    nodes: Vec<TrieNode>,
    max_len: usize,
}

#[derive(Default)]
struct TrieNode {
    edges: Vec<(u8, u32)>,
    words: Vec<WordId>,
}

impl SurfaceMatcher {
    /// Index every live word with a usable code (plus all live terminals)
    /// whose surface fits in `max_len` bytes.
    pub fn build(lexicon: &Lexicon, max_len: usize) -> SurfaceMatcher {
        let mut m = SurfaceMatcher {
            nodes: vec![TrieNode::default()],
            max_len,
        };
        for id in lexicon.live_ids() {
            if !id.is_terminal() && !lexicon.codelength(id).is_finite() {
                continue;
            }
            let surface = lexicon.surface(id);
            if surface.len() > max_len {
                continue;
            }
            m.insert(surface, id);
        }
        for node in &mut m.nodes {
            node.edges.sort_unstable_by_key(|&(b, _)| b);
            node.words.sort_unstable();
        }
        m
    }

    fn insert(&mut self, surface: &[u8], id: WordId) {
        let mut node = 0usize;
        for &b in surface {
            let next = match self.nodes[node].edges.iter().find(|&&(eb, _)| eb == b) {
                Some(&(_, n)) => n as usize,
                None => {
                    let n = self.nodes.len();
                    self.nodes.push(TrieNode::default());
                    self.nodes[node].edges.push((b, n as u32));
                    n
                }
            };
            node = next;
        }
        self.nodes[node].words.push(id);
    }

    /// Visit every word whose surface starts at `bytes[start..]`, with its
    /// surface length.
    pub(crate) fn matches_at<F: FnMut(WordId, usize)>(&self, bytes: &[u8], start: usize, mut f: F) {
        let mut node = 0usize;
        let end = (start + self.max_len).min(bytes.len());
        for pos in start..end {
            let b = bytes[pos];
            match self.nodes[node]
                .edges
                .binary_search_by_key(&b, |&(eb, _)| eb)
            {
                Ok(i) => node = self.nodes[node].edges[i].1 as usize,
                Err(_) => return,
            }
            for &w in &self.nodes[node].words {
                f(w, pos + 1 - start);
            }
        }
    }
}

/// Minimum-DL segmentation of `bytes` under the lexicon's code lengths.
pub fn viterbi_parse(lexicon: &Lexicon, bytes: &[u8], matcher: &SurfaceMatcher) -> Parse {
    let costs = effective_costs(lexicon);
    viterbi_with_costs(&costs, bytes, matcher, 0, false)
}

/// Code-length table with unusable-but-required terminals mapped to a large
/// finite cost so that every byte stays parseable.
pub fn effective_costs(lexicon: &Lexicon) -> Vec<f64> {
    let mut costs = lexicon.codelength_table();
    for c in costs.iter_mut().take(256) {
        if !c.is_finite() {
            *c = UNREACHABLE_BITS;
        }
    }
    costs
}

/// Dynamic program over end positions: best(j) = min over words w ending at
/// j of best(j - |w|) + cost(w). Ties prefer the longer final word, then the
/// smaller id. `forbid_full_span` rejects a single token covering all of
/// `bytes` (used when re-parsing a word's own definition).
pub fn viterbi_with_costs(
    costs: &[f64],
    bytes: &[u8],
    matcher: &SurfaceMatcher,
    span_offset: usize,
    forbid_full_span: bool,
) -> Parse {
    let n = bytes.len();
    let mut best = vec![f64::INFINITY; n + 1];
    // (token, token_len) used to reach each position
    let mut back: Vec<(WordId, usize)> = vec![(WordId(0), 0); n + 1];
    best[0] = 0.0;

    for i in 0..n {
        if !best[i].is_finite() {
            continue;
        }
        matcher.matches_at(bytes, i, |w, len| {
            if forbid_full_span && i == 0 && len == n {
                return;
            }
            let cost = costs[w.index()];
            if cost >= UNREACHABLE_BITS && !w.is_terminal() {
                return;
            }
            let total = best[i] + cost;
            let j = i + len;
            let current = best[j];
            let take = if total < current {
                true
            } else if total == current {
                let (old_w, old_len) = back[j];
                len > old_len || (len == old_len && w < old_w)
            } else {
                false
            };
            if take {
                best[j] = total;
                back[j] = (w, len);
            }
        });
    }

    let mut tokens = Vec::new();
    let mut pos = n;
    while pos > 0 {
        let (w, len) = back[pos];
        debug_assert!(len > 0, "unreachable position in viterbi backtrace");
        tokens.push(w);
        pos -= len;
    }
    tokens.reverse();
    Parse {
        tokens,
        dl_bits: best[n],
        span: (span_offset, span_offset + n),
    }
}

/// Everything produced by one pass over the corpus.
pub struct ParseOutcome {
    pub parses: Vec<Parse>,
    /// Re-parse of each live nonterminal's surface against the current
    /// lexicon (the word itself excluded), in id order.
    pub definition_parses: Vec<(WordId, Parse)>,
    pub counts: CountTable,
}

/// Parse every utterance independently and accumulate counts from the
/// utterance parses and from the definitions of all live nonterminals.
pub fn parse_corpus(lexicon: &Lexicon, corpus: &Corpus, cfg: &ParserConfig) -> ParseOutcome {
    let costs = effective_costs(lexicon);
    parse_corpus_with_costs(lexicon, corpus, cfg, &costs)
}

/// `parse_corpus` with an explicit cost table (the search uses this to layer
/// a channel floor on top of the Shannon code lengths).
pub fn parse_corpus_with_costs(
    lexicon: &Lexicon,
    corpus: &Corpus,
    cfg: &ParserConfig,
    costs: &[f64],
) -> ParseOutcome {
    let matcher = SurfaceMatcher::build(lexicon, cfg.max_word_len);
    let utterances = corpus.utterances();
    let mut counts = CountTable::new(lexicon.table_len());
    let threads = cfg.threads.max(1);

    let parses: Vec<Parse> = if threads <= 1 || utterances.len() < 2 * threads {
        utterances
            .iter()
            .map(|&(s, e)| viterbi_with_costs(costs, &corpus.bytes[s..e], &matcher, s, false))
            .collect()
    } else {
        let chunk = utterances.len().div_ceil(threads);
        let mut out: Vec<Vec<Parse>> = Vec::new();
        std::thread::scope(|scope| {
            let handles: Vec<_> = utterances
                .chunks(chunk)
                .map(|us| {
                    let matcher = &matcher;
                    let bytes = &corpus.bytes;
                    scope.spawn(move || {
                        us.iter()
                            .map(|&(s, e)| {
                                viterbi_with_costs(costs, &bytes[s..e], matcher, s, false)
                            })
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                out.push(h.join().expect("parser worker panicked"));
            }
        });
        out.into_iter().flatten().collect()
    };

    if cfg.summed_counts {
        for (parse, &(s, e)) in parses.iter().zip(utterances.iter()) {
            summed_word_counts(costs, &corpus.bytes[s..e], &matcher, &mut counts);
            counts.record_pairs(&parse.tokens);
        }
    } else {
        for parse in &parses {
            counts.record_tokens(&parse.tokens);
        }
    }

    let mut definition_parses = Vec::new();
    for id in lexicon.nonterminal_ids() {
        let surface = lexicon.surface(id);
        let parse = viterbi_with_costs(costs, surface, &matcher, 0, true);
        counts.record_tokens(&parse.tokens);
        definition_parses.push((id, parse));
    }

    ParseOutcome {
        parses,
        definition_parses,
        counts,
    }
}

/// Forward-backward expected token counts over all segmentations of one
/// utterance, in the log domain. Pair statistics still come from the
/// Viterbi parse.
fn summed_word_counts(
    costs: &[f64],
    bytes: &[u8],
    matcher: &SurfaceMatcher,
    counts: &mut CountTable,
) {
    let n = bytes.len();
    if n == 0 {
        return;
    }
    let ln2 = std::f64::consts::LN_2;
    // log-probabilities: a code of `c` bits has weight 2^-c
    let mut fwd = vec![f64::NEG_INFINITY; n + 1];
    let mut bwd = vec![f64::NEG_INFINITY; n + 1];
    fwd[0] = 0.0;
    // edges[(i, w, len)] reused for all three passes
    let mut edges: Vec<(usize, WordId, usize)> = Vec::new();
    for i in 0..n {
        matcher.matches_at(bytes, i, |w, len| {
            if costs[w.index()] < UNREACHABLE_BITS {
                edges.push((i, w, len));
            }
        });
    }
    for &(i, w, len) in &edges {
        let lw = fwd[i] - costs[w.index()] * ln2;
        fwd[i + len] = log_add(fwd[i + len], lw);
    }
    bwd[n] = 0.0;
    for &(i, w, len) in edges.iter().rev() {
        let lw = bwd[i + len] - costs[w.index()] * ln2;
        bwd[i] = log_add(bwd[i], lw);
    }
    let z = fwd[n];
    if !z.is_finite() {
        return;
    }
    for &(i, w, len) in &edges {
        let post = (fwd[i] - costs[w.index()] * ln2 + bwd[i + len] - z).exp();
        if post > 0.0 {
            counts.add_word(w, post);
        }
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Segmentation tree of one utterance: each parse token expanded down to
/// terminals, spans in corpus coordinates.
#[derive(Clone, Debug)]
pub struct SegTree {
    pub span: ByteSpan,
    pub roots: Vec<TreeNode>,
}

pub fn segmentation_tree(lexicon: &Lexicon, parse: &Parse) -> SegTree {
    let mut roots = Vec::with_capacity(parse.tokens.len());
    let mut pos = parse.span.0;
    for &t in &parse.tokens {
        let node = lexicon.expand_tree_at(t, pos);
        pos = node.span.1;
        roots.push(node);
    }
    debug_assert_eq!(pos, parse.span.1);
    SegTree {
        span: parse.span,
        roots,
    }
}

impl SegTree {
    /// Every distinct node span in the tree, terminal leaves included.
    pub fn node_spans(&self) -> Vec<ByteSpan> {
        let mut spans = Vec::new();
        for root in &self.roots {
            root.visit(&mut |n| spans.push(n.span));
        }
        spans.sort_unstable();
        spans.dedup();
        spans
    }
}

fn all_terminal(lexicon: &Lexicon, id: WordId) -> bool {
    lexicon.components(id).iter().all(|c| c.is_terminal())
}

fn render_node(lexicon: &Lexicon, id: WordId, out: &mut String) {
    out.push('[');
    if id.is_terminal() || all_terminal(lexicon, id) {
        out.push_str(&escape_bytes(lexicon.surface(id)));
    } else {
        for &c in lexicon.components(id) {
            render_node(lexicon, c, out);
        }
    }
    out.push(']');
}

/// Bracketed tree text for one utterance, e.g. `[[the][m]][[o]][[on]]`.
pub fn render_tree_text(lexicon: &Lexicon, parse: &Parse) -> String {
    let mut out = String::new();
    for &t in &parse.tokens {
        out.push('[');
        if t.is_terminal() || all_terminal(lexicon, t) {
            render_node(lexicon, t, &mut out);
        } else {
            for &c in lexicon.components(t) {
                render_node(lexicon, c, &mut out);
            }
        }
        out.push(']');
    }
    out
}

/// Flat segmentation: top-level token surfaces separated by spaces.
pub fn render_flat_text(lexicon: &Lexicon, parse: &Parse) -> String {
    parse
        .tokens
        .iter()
        .map(|&t| escape_bytes(lexicon.surface(t)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parse one line of bracketed tree text back into node spans (relative to
/// the utterance) plus the utterance byte length. Every consumed byte also
/// yields its leaf span, mirroring trees that terminate in characters.
pub fn tree_text_spans(line: &str) -> Result<(Vec<ByteSpan>, usize)> {
    let mut spans = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    let mut pos = 0usize;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '[' => stack.push(pos),
            ']' => {
                let start = stack
                    .pop()
                    .ok_or_else(|| Error::Format("unbalanced ']' in tree text".into()))?;
                if pos == start {
                    return Err(Error::Format("empty brackets in tree text".into()));
                }
                spans.push((start, pos));
            }
            '\\' => {
                let mut esc = String::from("\\");
                let e = chars
                    .next()
                    .ok_or_else(|| Error::Format("truncated escape in tree text".into()))?;
                esc.push(e);
                if e == 'x' {
                    esc.push(chars.next().ok_or_else(|| Error::Format("truncated \\x".into()))?);
                    esc.push(chars.next().ok_or_else(|| Error::Format("truncated \\x".into()))?);
                }
                let bytes = unescape_bytes(&esc)?;
                for _ in 0..bytes.len() {
                    spans.push((pos, pos + 1));
                    pos += 1;
                }
            }
            other => {
                if !other.is_ascii() {
                    return Err(Error::Format(format!("non-ascii char {other:?} in tree text")));
                }
                spans.push((pos, pos + 1));
                pos += 1;
            }
        }
    }
    if !stack.is_empty() {
        return Err(Error::Format("unbalanced '[' in tree text".into()));
    }
    spans.sort_unstable();
    spans.dedup();
    Ok((spans, pos))
}
