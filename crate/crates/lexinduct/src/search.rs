//! The outer search loop: alternate EM passes with heuristic word addition
//! and deletion driven by estimated description-length change.

use crate::corpus::Corpus;
use crate::lexicon::{Lexicon, WordId};
use crate::parser::{
    effective_costs, parse_corpus_with_costs, viterbi_with_costs, CountTable, ParserConfig,
    SurfaceMatcher,
};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchConfig {
    pub outer_iterations: usize,
    pub inner_em_iterations: usize,
    /// Minimum adjacency count for a pair to become a candidate word.
    pub add_candidate_min_pair_count: f64,
    pub max_candidates_per_round: Option<usize>,
    /// Structural bits charged per nonterminal definition; near-negligible
    /// in practice and zero by default.
    pub word_overhead_bits: f64,
    /// Floor on the per-token cost used in search arithmetic. Zero gives
    /// pure Shannon lengths; 1.0 models a channel that cannot write codes
    /// shorter than one bit (used for compression).
    pub min_code_bits: f64,
    pub max_word_len: usize,
    pub threads: usize,
    /// Forward-backward expected counts instead of Viterbi token counts.
    pub summed_counts: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            outer_iterations: 10,
            inner_em_iterations: 2,
            add_candidate_min_pair_count: 2.0,
            max_candidates_per_round: None,
            word_overhead_bits: 0.0,
            min_code_bits: 0.0,
            max_word_len: 64,
            threads: 1,
            summed_counts: false,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.inner_em_iterations < 1 {
            return Err(Error::BadConfig("inner_em_iterations must be >= 1".into()));
        }
        if self.add_candidate_min_pair_count < 1.0 {
            return Err(Error::BadConfig(
                "add_candidate_min_pair_count must be >= 1".into(),
            ));
        }
        if self.max_word_len < 2 {
            return Err(Error::BadConfig("max_word_len must be >= 2".into()));
        }
        if self.min_code_bits < 0.0 || !self.min_code_bits.is_finite() {
            return Err(Error::BadConfig(
                "min_code_bits must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn parser_config(&self) -> ParserConfig {
        ParserConfig {
            max_word_len: self.max_word_len,
            threads: self.threads,
            summed_counts: self.summed_counts,
        }
    }
}

/// Per-token costs used by search arithmetic: lexicon code lengths with the
/// configured floor applied (and unusable terminals kept parseable).
pub fn search_costs(lexicon: &Lexicon, cfg: &SearchConfig) -> Vec<f64> {
    let mut costs = effective_costs(lexicon);
    if cfg.min_code_bits > 0.0 {
        for c in costs.iter_mut() {
            if c.is_finite() && *c < 1e11 {
                *c = c.max(cfg.min_code_bits);
            }
        }
    }
    costs
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Candidate {
    Add(WordId, WordId),
    Delete(WordId),
}

/// Predicted description-length change for one candidate, with the count
/// updates the prediction assumed.
#[derive(Clone, Debug)]
pub struct DeltaEstimate {
    pub candidate: Candidate,
    /// Negative means the change is predicted to shrink the total DL.
    pub delta_bits: f64,
    /// c'(W) for additions, 0 for deletions.
    pub new_word_count: f64,
    /// Predicted counts for the existing words whose counts change.
    pub changed_counts: Vec<(WordId, f64)>,
    pub new_total: f64,
}

/// All adjacent pairs above the count threshold, ordered by descending pair
/// count, excluding pairs whose concatenation duplicates an existing surface
/// or exceeds the indexable word length.
pub fn propose_candidates(
    counts: &CountTable,
    lexicon: &Lexicon,
    cfg: &SearchConfig,
) -> Vec<(WordId, WordId)> {
    let existing: std::collections::HashSet<&[u8]> =
        lexicon.live_ids().map(|id| lexicon.surface(id)).collect();
    let mut out = Vec::new();
    for ((w1, w2), count) in counts.sorted_pairs() {
        if count < cfg.add_candidate_min_pair_count {
            break;
        }
        if !lexicon.contains(w1) || !lexicon.contains(w2) {
            continue;
        }
        let len = lexicon.surface(w1).len() + lexicon.surface(w2).len();
        if len > cfg.max_word_len {
            continue;
        }
        let mut surface = lexicon.surface(w1).to_vec();
        surface.extend_from_slice(lexicon.surface(w2));
        if existing.contains(surface.as_slice()) {
            continue;
        }
        out.push((w1, w2));
        if let Some(max) = cfg.max_candidates_per_round {
            if out.len() >= max {
                break;
            }
        }
    }
    out
}

/// Contribution of a word with count `c` to the total DL under total `n`:
/// c * max(-log2(c/n), floor). Zero counts contribute nothing.
#[inline]
fn dl_term(c: f64, n: f64, floor: f64) -> f64 {
    if c <= 0.0 {
        0.0
    } else {
        c * (-(c / n).log2()).max(floor)
    }
}

/// Shared state for evaluating many candidates against one count table.
pub struct DeltaContext<'a> {
    counts: &'a [f64],
    total: f64,
    floor: f64,
    overhead: f64,
    /// Words frequent enough that the cost floor might bind for them; they
    /// are corrected exactly instead of via the closed form.
    heavy: Vec<WordId>,
}

impl<'a> DeltaContext<'a> {
    pub fn new(lexicon: &Lexicon, counts: &'a [f64], total: f64, cfg: &SearchConfig) -> Self {
        let floor = cfg.min_code_bits;
        let mut heavy = Vec::new();
        if floor > 0.0 {
            let threshold = 0.99 * (total / 4.0) * 2f64.powf(-floor);
            for id in lexicon.live_ids() {
                if counts[id.index()] >= threshold {
                    heavy.push(id);
                }
            }
        }
        DeltaContext {
            counts,
            total,
            floor,
            overhead: cfg.word_overhead_bits,
            heavy,
        }
    }

    fn count(&self, id: WordId) -> f64 {
        self.counts[id.index()]
    }

    /// DL change over all existing words given the changed counts and the
    /// new total: exact terms for changed and floor-sensitive words, and a
    /// closed-form length shift of log2(n'/n) for everything else.
    fn shift(&self, changed: &[(WordId, f64)], new_total: f64) -> f64 {
        let n = self.total;
        let n2 = new_total;
        let mut delta = 0.0;
        let mut handled_mass = 0.0;
        for &(w, c_new) in changed {
            let c_old = self.count(w);
            handled_mass += c_old;
            delta += dl_term(c_new, n2, self.floor) - dl_term(c_old, n, self.floor);
        }
        for &w in &self.heavy {
            if changed.iter().any(|&(cw, _)| cw == w) {
                continue;
            }
            let c = self.count(w);
            handled_mass += c;
            delta += dl_term(c, n2, self.floor) - dl_term(c, n, self.floor);
        }
        delta + (n - handled_mass) * (n2 / n).log2()
    }

    /// Estimated DL change from adding the word w1.w2 with pair count `c_w`:
    /// the new word replaces every composition, and each component is still
    /// used once in the new word's definition.
    pub fn delta_add(&self, w1: WordId, w2: WordId, c_w: f64) -> DeltaEstimate {
        debug_assert!(c_w > 0.0);
        let changed: Vec<(WordId, f64)> = if w1 == w2 {
            vec![(w1, self.count(w1) - 2.0 * c_w + 2.0)]
        } else {
            vec![
                (w1, self.count(w1) - c_w + 1.0),
                (w2, self.count(w2) - c_w + 1.0),
            ]
        };
        let new_total = self.total - c_w + 2.0;
        let delta_bits =
            dl_term(c_w, new_total, self.floor) + self.shift(&changed, new_total) + self.overhead;
        DeltaEstimate {
            candidate: Candidate::Add(w1, w2),
            delta_bits,
            new_word_count: c_w,
            changed_counts: changed,
            new_total,
        }
    }

    /// Estimated DL change from deleting a word: its definition replaces it
    /// everywhere, and the definition itself no longer has to be written.
    pub fn delta_delete(&self, lexicon: &Lexicon, id: WordId) -> DeltaEstimate {
        let c_w = self.count(id);
        let def = lexicon.components(id);
        let mut uniq: Vec<(WordId, f64)> = Vec::with_capacity(def.len());
        for &u in def {
            match uniq.iter_mut().find(|(w, _)| *w == u) {
                Some((_, m)) => *m += 1.0,
                None => uniq.push((u, 1.0)),
            }
        }
        let k = def.len() as f64;
        let mut changed: Vec<(WordId, f64)> = uniq
            .iter()
            .map(|&(u, m)| (u, self.count(u) + (c_w - 1.0) * m))
            .collect();
        changed.push((id, 0.0));
        let new_total = self.total + (c_w - 1.0) * k - c_w;
        let delta_bits = self.shift(&changed, new_total) - self.overhead;
        DeltaEstimate {
            candidate: Candidate::Delete(id),
            delta_bits,
            new_word_count: 0.0,
            changed_counts: changed,
            new_total,
        }
    }
}

/// One-off estimate of adding `pair`; `counts` must come from a completed
/// parse against `lexicon`.
pub fn delta_add(
    lexicon: &Lexicon,
    counts: &CountTable,
    pair: (WordId, WordId),
    cfg: &SearchConfig,
) -> Result<DeltaEstimate> {
    let c_w = counts.pair(pair.0, pair.1);
    if c_w <= 0.0 {
        return Err(Error::BadConfig("candidate pair has zero count".into()));
    }
    let ctx = DeltaContext::new(lexicon, &counts.word_counts, counts.total, cfg);
    Ok(ctx.delta_add(pair.0, pair.1, c_w))
}

/// One-off estimate of deleting `id`.
pub fn delta_delete(
    lexicon: &Lexicon,
    counts: &CountTable,
    id: WordId,
    cfg: &SearchConfig,
) -> Result<DeltaEstimate> {
    if id.is_terminal() {
        return Err(Error::TerminalDelete);
    }
    if !lexicon.contains(id) {
        return Err(Error::UnknownWord(id.0));
    }
    let ctx = DeltaContext::new(lexicon, &counts.word_counts, counts.total, cfg);
    Ok(ctx.delta_delete(lexicon, id))
}

/// Apply an add estimate to a lexicon, seeding the new word's count and the
/// predicted component counts, and refreshing probabilities.
pub fn apply_add_estimate(lexicon: &mut Lexicon, est: &DeltaEstimate) -> Result<WordId> {
    let (w1, w2) = match est.candidate {
        Candidate::Add(a, b) => (a, b),
        _ => return Err(Error::BadConfig("not an add estimate".into())),
    };
    let id = lexicon.add_word(&[w1, w2])?;
    lexicon.set_count(id, est.new_word_count);
    for &(w, c) in &est.changed_counts {
        lexicon.set_count(w, c.max(0.0));
    }
    lexicon.refresh_probabilities();
    Ok(id)
}

/// Apply a delete estimate: splice the word out and redistribute its count.
pub fn apply_delete_estimate(lexicon: &mut Lexicon, est: &DeltaEstimate) -> Result<Vec<WordId>> {
    let id = match est.candidate {
        Candidate::Delete(id) => id,
        _ => return Err(Error::BadConfig("not a delete estimate".into())),
    };
    for &(w, c) in &est.changed_counts {
        if w != id {
            lexicon.set_count(w, c.max(0.0));
        }
    }
    let affected = lexicon.delete_word(id)?;
    lexicon.refresh_probabilities();
    Ok(affected)
}

/// Combined description length of the lexicon and the corpus under the
/// current code lengths (with the configured floor), measured by a fresh
/// parse.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DlBreakdown {
    pub lexicon_bits: f64,
    pub corpus_bits: f64,
    pub total_bits: f64,
    pub bits_per_char: f64,
}

pub fn measure_total_dl(lexicon: &Lexicon, corpus: &Corpus, cfg: &SearchConfig) -> DlBreakdown {
    let costs = search_costs(lexicon, cfg);
    let matcher = SurfaceMatcher::build(lexicon, cfg.max_word_len);
    let mut corpus_bits = 0.0;
    for (s, e) in corpus.utterances() {
        corpus_bits += viterbi_with_costs(&costs, &corpus.bytes[s..e], &matcher, s, false).dl_bits;
    }
    let mut lexicon_bits = 0.0;
    for id in lexicon.nonterminal_ids() {
        lexicon_bits += cfg.word_overhead_bits;
        for &c in lexicon.components(id) {
            lexicon_bits += costs[c.index()];
        }
    }
    let total_bits = corpus_bits + lexicon_bits;
    DlBreakdown {
        lexicon_bits,
        corpus_bits,
        total_bits,
        bits_per_char: total_bits / corpus.len() as f64,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub outer_iter: usize,
    pub phase: String,
    /// Words with nonzero count.
    pub live_words: usize,
    pub nonterminals: usize,
    pub lexicon_dl_bits: f64,
    pub corpus_dl_bits: f64,
    pub total_dl_bits: f64,
    pub bits_per_char: f64,
}

fn record(
    outer_iter: usize,
    phase: &str,
    lexicon: &Lexicon,
    corpus: &Corpus,
    cfg: &SearchConfig,
) -> HistoryRecord {
    let dl = measure_total_dl(lexicon, corpus, cfg);
    HistoryRecord {
        outer_iter,
        phase: phase.to_string(),
        live_words: lexicon
            .live_ids()
            .filter(|&id| lexicon.count(id) > 0.0)
            .count(),
        nonterminals: lexicon.nonterminal_count(),
        lexicon_dl_bits: dl.lexicon_bits,
        corpus_dl_bits: dl.corpus_bits,
        total_dl_bits: dl.total_bits,
        bits_per_char: dl.bits_per_char,
    }
}

/// One EM pass: parse the corpus and the word definitions, adopt the
/// reorganized definitions, and reestimate probabilities. Returns the counts
/// the reestimate was based on.
pub fn em_pass(lexicon: &mut Lexicon, corpus: &Corpus, cfg: &SearchConfig) -> Result<CountTable> {
    let costs = search_costs(lexicon, cfg);
    let outcome = parse_corpus_with_costs(lexicon, corpus, &cfg.parser_config(), &costs);
    for (id, parse) in &outcome.definition_parses {
        if parse.tokens.len() >= 2 {
            let _ = lexicon.set_components(*id, parse.tokens.clone())?;
        }
    }
    lexicon.reestimate(&outcome.counts.word_counts)?;
    Ok(outcome.counts)
}

/// The full search: start from terminals, then alternate EM, simultaneous
/// addition of all candidates predicted to help, EM again, and deletion of
/// all words predicted to hurt.
pub fn run_induction(corpus: &Corpus, cfg: &SearchConfig) -> Result<(Lexicon, Vec<HistoryRecord>)> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus(""));
    }
    let mut lexicon = Lexicon::new();
    lexicon.word_overhead_bits = cfg.word_overhead_bits;
    let mut history = Vec::new();
    history.push(record(0, "init", &lexicon, corpus, cfg));

    for outer in 0..cfg.outer_iterations {
        let mut counts = CountTable::new(lexicon.table_len());
        for _ in 0..cfg.inner_em_iterations {
            counts = em_pass(&mut lexicon, corpus, cfg)?;
        }
        history.push(record(outer, "em-add", &lexicon, corpus, cfg));

        // Add phase: evaluate candidates against the pre-add counts
        // independently and add every one predicted to reduce the DL.
        let candidates = propose_candidates(&counts, &lexicon, cfg);
        let accepted: Vec<DeltaEstimate> = {
            let ctx = DeltaContext::new(&lexicon, &counts.word_counts, counts.total, cfg);
            candidates
                .iter()
                .map(|&(w1, w2)| ctx.delta_add(w1, w2, counts.pair(w1, w2)))
                .filter(|est| est.delta_bits < 0.0)
                .collect()
        };
        for est in &accepted {
            if let Candidate::Add(w1, w2) = est.candidate {
                let id = lexicon.add_word(&[w1, w2])?;
                lexicon.set_count(id, est.new_word_count);
                for &(w, c) in &est.changed_counts {
                    // overlapping candidates may fight over the same
                    // component count; apply the decrement cumulatively but
                    // keep the word usable for the next parse
                    let decrement = counts.count(w) - c;
                    let updated = (lexicon.count(w) - decrement).max(1.0);
                    lexicon.set_count(w, updated);
                }
            }
        }
        lexicon.refresh_probabilities();
        history.push(record(outer, "add", &lexicon, corpus, cfg));

        let mut counts = CountTable::new(lexicon.table_len());
        for _ in 0..cfg.inner_em_iterations {
            counts = em_pass(&mut lexicon, corpus, cfg)?;
        }
        history.push(record(outer, "em-delete", &lexicon, corpus, cfg));

        // Delete phase: rank once, then re-splice as we go, re-checking each
        // estimate against the updated counts.
        let mut word_counts = counts.word_counts.clone();
        let mut total = counts.total;
        let mut ranked: Vec<(WordId, f64)> = {
            let ctx = DeltaContext::new(&lexicon, &word_counts, total, cfg);
            lexicon
                .nonterminal_ids()
                .map(|id| (id, ctx.delta_delete(&lexicon, id).delta_bits))
                .filter(|&(_, d)| d < 0.0)
                .collect()
        };
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        for (id, _) in ranked {
            let est = {
                let ctx = DeltaContext::new(&lexicon, &word_counts, total, cfg);
                ctx.delta_delete(&lexicon, id)
            };
            if est.delta_bits >= 0.0 {
                continue;
            }
            for &(w, c) in &est.changed_counts {
                word_counts[w.index()] = c.max(0.0);
            }
            total = est.new_total;
            lexicon.delete_word(id)?;
        }
        lexicon.reestimate(&word_counts)?;
        history.push(record(outer, "delete", &lexicon, corpus, cfg));
    }

    // leave the lexicon with parse-consistent counts
    em_pass(&mut lexicon, corpus, cfg)?;
    history.push(record(cfg.outer_iterations, "final", &lexicon, corpus, cfg));
    Ok((lexicon, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Corpus;
    use crate::parser::parse_corpus;

    fn tid(b: u8) -> WordId {
        WordId::terminal(b)
    }

    /// Terminals-only lexicon reestimated on the corpus to a consistent
    /// state, plus the matching counts.
    fn estimated(corpus: &Corpus) -> (Lexicon, CountTable) {
        let mut lex = Lexicon::new();
        let out = parse_corpus(&lex, corpus, &ParserConfig::default());
        lex.reestimate(&out.counts.word_counts).unwrap();
        let out = parse_corpus(&lex, corpus, &ParserConfig::default());
        lex.reestimate(&out.counts.word_counts).unwrap();
        (lex, out.counts)
    }

    #[test]
    fn propose_orders_by_count_and_respects_threshold() {
        let corpus = Corpus::from_raw(b"abxabyab".to_vec()).unwrap();
        let (lex, counts) = estimated(&corpus);
        let cfg = SearchConfig::default();
        let cands = propose_candidates(&counts, &lex, &cfg);
        assert_eq!(cands[0], (tid(b'a'), tid(b'b')));
        for &(a, b) in &cands {
            assert!(counts.pair(a, b) >= 2.0);
        }
    }

    #[test]
    fn propose_excludes_existing_surfaces() {
        let corpus = Corpus::from_raw(b"at at at".to_vec()).unwrap();
        let (mut lex, _) = estimated(&corpus);
        lex.add_word(&[tid(b'a'), tid(b't')]).unwrap();
        let out = parse_corpus(&lex, &corpus, &ParserConfig::default());
        let cands = propose_candidates(&out.counts, &lex, &SearchConfig::default());
        assert!(!cands.contains(&(tid(b'a'), tid(b't'))));
    }

    #[test]
    fn empty_counts_propose_nothing() {
        let lex = Lexicon::new();
        let counts = CountTable::new(lex.table_len());
        assert!(propose_candidates(&counts, &lex, &SearchConfig::default()).is_empty());
    }

    #[test]
    fn once_used_candidate_never_pays() {
        let corpus = Corpus::from_raw(b"abcdefgh".to_vec()).unwrap();
        let (lex, counts) = estimated(&corpus);
        let cfg = SearchConfig::default();
        assert_eq!(counts.pair(tid(b'a'), tid(b'b')), 1.0);
        let est = delta_add(&lex, &counts, (tid(b'a'), tid(b'b')), &cfg).unwrap();
        assert!(est.delta_bits > 0.0);
    }

    #[test]
    fn add_then_delete_is_an_inverse() {
        let corpus = Corpus::from_raw(b"abxabyabz".to_vec()).unwrap();
        let (mut lex, counts) = estimated(&corpus);
        let cfg = SearchConfig::default();
        let add = delta_add(&lex, &counts, (tid(b'a'), tid(b'b')), &cfg).unwrap();
        let id = apply_add_estimate(&mut lex, &add).unwrap();

        let mut post = CountTable::new(lex.table_len());
        post.word_counts = lex.count_table();
        post.total = add.new_total;
        let del = delta_delete(&lex, &post, id, &cfg).unwrap();
        assert!(
            (add.delta_bits + del.delta_bits).abs() < 1e-6,
            "add {} delete {}",
            add.delta_bits,
            del.delta_bits
        );
    }

    #[test]
    fn deleting_a_zero_count_word_always_helps() {
        let corpus = Corpus::from_raw(b"xyxyxy".to_vec()).unwrap();
        let (mut lex, _) = estimated(&corpus);
        let unused = lex.add_word(&[tid(b'x'), tid(b'y')]).unwrap();
        let out = parse_corpus(&lex, &corpus, &ParserConfig::default());
        lex.reestimate(&out.counts.word_counts).unwrap();
        let counts = parse_corpus(&lex, &corpus, &ParserConfig::default()).counts;
        // force the word to zero count: its definition cost is pure waste
        let mut zeroed = counts.clone();
        zeroed.total -= zeroed.word_counts[unused.index()];
        zeroed.word_counts[unused.index()] = 0.0;
        let est = delta_delete(&lex, &zeroed, unused, &SearchConfig::default()).unwrap();
        assert!(est.delta_bits < 0.0);
    }

    #[test]
    fn deleting_a_heavily_used_word_hurts() {
        // "the" ten times in varied contexts
        let corpus = Corpus::from_raw(b"theathebthecthedtheethefthegthehtheithej".to_vec()).unwrap();
        let mut lex = Lexicon::new();
        let the = lex
            .add_word(&[tid(b't'), tid(b'h'), tid(b'e')])
            .unwrap();
        // a fresh word needs a seed count before the parser can pick it up
        lex.set_count(the, 1.0);
        lex.refresh_probabilities();
        let out = parse_corpus(&lex, &corpus, &ParserConfig::default());
        lex.reestimate(&out.counts.word_counts).unwrap();
        let counts = parse_corpus(&lex, &corpus, &ParserConfig::default()).counts;
        assert!(counts.count(the) >= 10.0);
        let est = delta_delete(&lex, &counts, the, &SearchConfig::default()).unwrap();
        assert!(est.delta_bits > 0.0, "delta {}", est.delta_bits);
    }

    #[test]
    fn delete_of_definition_only_word_is_splice_arithmetic() {
        // three-word lexicon: x = ab, y = xc; the corpus "abc" parses as
        // [y], so x is used only inside y's definition
        let mut lex = Lexicon::new();
        let x = lex.add_word(&[tid(b'a'), tid(b'b')]).unwrap();
        let y = lex.add_word(&[x, tid(b'c')]).unwrap();
        lex.set_count(x, 1.0);
        lex.set_count(y, 1.0);
        lex.refresh_probabilities();
        let corpus = Corpus::from_raw(b"abc".to_vec()).unwrap();
        let out = parse_corpus(&lex, &corpus, &ParserConfig::default());
        lex.reestimate(&out.counts.word_counts).unwrap();
        let counts = parse_corpus(&lex, &corpus, &ParserConfig::default()).counts;
        assert_eq!(counts.count(x), 1.0, "x counted once, from y's definition");
        assert_eq!(counts.total, 5.0);

        let est = delta_delete(&lex, &counts, x, &SearchConfig::default()).unwrap();
        // all five tokens at -log2(1/5) collapse to four at -log2(1/4):
        // delta = 4*2 - 5*log2(5), worked out by hand from the splice
        let expected = 8.0 - 5.0 * 5f64.log2();
        assert!(
            (est.delta_bits - expected).abs() < 1e-9,
            "{} vs {}",
            est.delta_bits,
            expected
        );
    }

    #[test]
    fn induction_learns_repeated_bigram() {
        let corpus = Corpus::from_raw(b"abababab".to_vec()).unwrap();
        let cfg = SearchConfig {
            outer_iterations: 3,
            ..SearchConfig::default()
        };
        let (lex, _) = run_induction(&corpus, &cfg).unwrap();
        let surfaces: Vec<&[u8]> = lex.nonterminal_ids().map(|id| lex.surface(id)).collect();
        assert!(
            surfaces.contains(&&b"ab"[..]) || surfaces.contains(&&b"abab"[..]),
            "learned {surfaces:?}"
        );
        let costs = search_costs(&lex, &cfg);
        let matcher = SurfaceMatcher::build(&lex, cfg.max_word_len);
        let parse = viterbi_with_costs(&costs, b"abababab", &matcher, 0, false);
        assert!(parse.tokens.len() <= 4, "parse {:?}", parse.tokens);
    }

    #[test]
    fn tiny_corpus_never_adds() {
        let corpus = Corpus::from_raw(b"ab".to_vec()).unwrap();
        let (lex, _) = run_induction(&corpus, &SearchConfig::default()).unwrap();
        assert_eq!(lex.nonterminal_count(), 0);
    }

    #[test]
    fn repeated_char_with_channel_floor_learns_doubling_words() {
        let corpus = Corpus::from_raw(vec![b'a'; 1024]).unwrap();
        let cfg = SearchConfig {
            min_code_bits: 1.0,
            ..SearchConfig::default()
        };
        let (lex, history) = run_induction(&corpus, &cfg).unwrap();
        let max_len = lex
            .nonterminal_ids()
            .map(|id| lex.surface(id).len())
            .max()
            .unwrap_or(0);
        // long run words emerge; the flat optimum for a^n is a word of
        // about sqrt(n) bytes used n/sqrt(n) times
        assert!(max_len >= 16, "no long run words (max {max_len})");
        let initial = history.first().unwrap().total_dl_bits;
        let final_dl = history.last().unwrap().total_dl_bits;
        assert!(final_dl < initial / 10.0, "{final_dl} vs {initial}");
        assert!(final_dl <= 96.0, "DL {final_dl} far above the 2*sqrt(n) optimum");
    }

    #[test]
    fn pure_shannon_mode_leaves_degenerate_input_alone() {
        let corpus = Corpus::from_raw(vec![b'a'; 256]).unwrap();
        let cfg = SearchConfig {
            outer_iterations: 3,
            ..SearchConfig::default()
        };
        let (lex, history) = run_induction(&corpus, &cfg).unwrap();
        // p(a) = 1 means zero body bits; nothing can improve on that
        assert_eq!(lex.nonterminal_count(), 0);
        assert!(history.last().unwrap().total_dl_bits.abs() < 1e-9);
    }

    #[test]
    fn history_is_monotone_on_text() {
        let text = b"the cat sat on the mat. the cat ran. the mat sat.".repeat(8);
        let corpus = crate::corpus::corpus_from_bytes(
            &text,
            &crate::corpus::LoadOptions::new(crate::corpus::LoadMode::StripDelimiters),
        )
        .unwrap();
        let cfg = SearchConfig {
            outer_iterations: 4,
            ..SearchConfig::default()
        };
        let (_, history) = run_induction(&corpus, &cfg).unwrap();
        let end_of_iter: Vec<&HistoryRecord> =
            history.iter().filter(|r| r.phase == "delete").collect();
        for pair in end_of_iter.windows(2) {
            assert!(
                pair[1].total_dl_bits <= pair[0].total_dl_bits * 1.005,
                "DL grew: {} -> {}",
                pair[0].total_dl_bits,
                pair[1].total_dl_bits
            );
        }
        let init = history.first().unwrap().total_dl_bits;
        let fin = history.last().unwrap().total_dl_bits;
        assert!(fin < init);
    }

    #[test]
    fn zero_iterations_returns_terminals() {
        let corpus = Corpus::from_raw(b"hello".to_vec()).unwrap();
        let cfg = SearchConfig {
            outer_iterations: 0,
            ..SearchConfig::default()
        };
        let (lex, history) = run_induction(&corpus, &cfg).unwrap();
        assert_eq!(lex.nonterminal_count(), 0);
        assert_eq!(history.first().unwrap().phase, "init");
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let mut cfg = SearchConfig::default();
        cfg.inner_em_iterations = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = SearchConfig::default();
        cfg.add_candidate_min_pair_count = 0.5;
        assert!(cfg.validate().is_err());
        let mut cfg = SearchConfig::default();
        cfg.min_code_bits = -1.0;
        assert!(cfg.validate().is_err());
    }
}
