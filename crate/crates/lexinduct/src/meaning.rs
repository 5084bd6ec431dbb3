//! Joint compression of utterances paired with unordered meaning-symbol
//! sets. Composition unions the symbols of the components; perturbations
//! add or remove symbols at a fixed per-symbol bit cost.

use crate::bits::{read_varint, write_varint};
use crate::corpus::Corpus;
use crate::lexicon::{Lexicon, WordId};
use crate::parser::{CountTable, Parse, SurfaceMatcher};
use crate::search::{
    search_costs, Candidate, DeltaContext, HistoryRecord, SearchConfig,
};
use crate::{Error, Result};
use serde::Serialize;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolId(pub u32);

pub type SymbolSet = BTreeSet<SymbolId>;

/// Fixed inventory of meaning symbols, interned by name.
#[derive(Clone, Debug, Default)]
pub struct SymbolInventory {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl SymbolInventory {
    pub fn new() -> SymbolInventory {
        SymbolInventory::default()
    }

    pub fn intern(&mut self, name: &str) -> SymbolId {
        if let Some(&i) = self.index.get(name) {
            return SymbolId(i);
        }
        let i = self.names.len() as u32;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        SymbolId(i)
    }

    pub fn lookup(&self, name: &str) -> Option<SymbolId> {
        self.index.get(name).map(|&i| SymbolId(i))
    }

    pub fn name(&self, id: SymbolId) -> &str {
        &self.names[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// One training/evaluation pair: raw text plus candidate meanings. The
/// first candidate is the ground truth in evaluation files; training picks
/// by description length, never by position.
#[derive(Clone, Debug)]
pub struct MeaningUtterance {
    pub text: Vec<u8>,
    pub candidates: Vec<SymbolSet>,
}

impl MeaningUtterance {
    pub fn true_meaning(&self) -> &SymbolSet {
        &self.candidates[0]
    }
}

#[derive(Clone, Debug)]
pub struct MeaningCorpus {
    pub utterances: Vec<MeaningUtterance>,
    pub inventory: SymbolInventory,
}

impl MeaningCorpus {
    /// The text stream as a plain corpus, one utterance per bound.
    pub fn text_corpus(&self) -> Result<Corpus> {
        let mut bytes = Vec::new();
        let mut bounds = Vec::new();
        for u in &self.utterances {
            if !bytes.is_empty() {
                bounds.push(bytes.len());
            }
            bytes.extend_from_slice(&u.text);
        }
        let mut corpus = Corpus::from_raw(bytes)?;
        corpus.utterance_bounds = bounds;
        Ok(corpus)
    }

    /// Paired-corpus text format: `text<TAB>sym,sym[<TAB>sym,...]` with the
    /// first candidate set being the ground truth.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for u in &self.utterances {
            out.push_str(std::str::from_utf8(&u.text).unwrap_or("<binary>"));
            for cand in &u.candidates {
                out.push('\t');
                let mut names: Vec<&str> = cand.iter().map(|&s| self.inventory.name(s)).collect();
                names.sort_unstable();
                out.push_str(&names.join(","));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<MeaningCorpus> {
        let mut inventory = SymbolInventory::new();
        let mut utterances = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let text = fields
                .next()
                .filter(|t| !t.is_empty())
                .ok_or_else(|| Error::Format(format!("line {}: missing text", lineno + 1)))?;
            let mut candidates = Vec::new();
            for field in fields {
                let mut set = SymbolSet::new();
                for name in field.split(',').filter(|s| !s.is_empty()) {
                    set.insert(inventory.intern(name.trim()));
                }
                candidates.push(set);
            }
            if candidates.is_empty() {
                return Err(Error::Format(format!(
                    "line {}: at least one meaning candidate required",
                    lineno + 1
                )));
            }
            utterances.push(MeaningUtterance {
                text: text.as_bytes().to_vec(),
                candidates,
            });
        }
        if utterances.is_empty() {
            return Err(Error::EmptyCorpus(""));
        }
        Ok(MeaningCorpus {
            utterances,
            inventory,
        })
    }
}

/// A lexicon whose words carry meaning-symbol perturbations: symbols added
/// beyond what the components imply, and inherited symbols removed.
#[derive(Clone, Debug)]
pub struct MeaningLexicon {
    pub lexicon: Lexicon,
    pub inventory: SymbolInventory,
    plus: Vec<SymbolSet>,
    minus: Vec<SymbolSet>,
}

impl MeaningLexicon {
    pub fn new(lexicon: Lexicon, inventory: SymbolInventory) -> MeaningLexicon {
        let n = lexicon.table_len();
        MeaningLexicon {
            lexicon,
            inventory,
            plus: vec![SymbolSet::new(); n],
            minus: vec![SymbolSet::new(); n],
        }
    }

    fn grow(&mut self) {
        let n = self.lexicon.table_len();
        if self.plus.len() < n {
            self.plus.resize(n, SymbolSet::new());
            self.minus.resize(n, SymbolSet::new());
        }
    }

    pub fn plus(&self, id: WordId) -> &SymbolSet {
        &self.plus[id.index()]
    }

    pub fn minus(&self, id: WordId) -> &SymbolSet {
        &self.minus[id.index()]
    }

    pub fn perturbation_count(&self) -> usize {
        self.plus.iter().map(|s| s.len()).sum::<usize>()
            + self.minus.iter().map(|s| s.len()).sum::<usize>()
    }

    /// Live nonterminal ids in dependency order (components first).
    fn topo_order(&self) -> Vec<WordId> {
        let mut ids: Vec<WordId> = self.lexicon.nonterminal_ids().collect();
        ids.sort_by_key(|&id| (self.lexicon.surface(id).len(), id));
        ids
    }

    /// Derived meaning of every word, normalizing perturbation invariants
    /// along the way (plus disjoint from the inherited union, minus inside
    /// it). Terminals have empty meanings.
    pub fn rebuild_derived(&mut self) -> Vec<SymbolSet> {
        self.grow();
        let mut derived: Vec<SymbolSet> = vec![SymbolSet::new(); self.lexicon.table_len()];
        for id in self.topo_order() {
            let mut inherited = SymbolSet::new();
            for &c in self.lexicon.components(id) {
                inherited.extend(derived[c.index()].iter().copied());
            }
            let plus = &mut self.plus[id.index()];
            plus.retain(|s| !inherited.contains(s));
            let minus = &mut self.minus[id.index()];
            minus.retain(|s| inherited.contains(s));
            let mut m = inherited;
            m.extend(plus.iter().copied());
            for s in minus.iter() {
                m.remove(s);
            }
            derived[id.index()] = m;
        }
        derived
    }

    /// Recursive union with perturbations applied.
    pub fn meaning_of(&self, id: WordId) -> SymbolSet {
        fn go(ml: &MeaningLexicon, id: WordId, memo: &mut HashMap<WordId, SymbolSet>) -> SymbolSet {
            if let Some(m) = memo.get(&id) {
                return m.clone();
            }
            let mut m = SymbolSet::new();
            for &c in ml.lexicon.components(id) {
                m.extend(go(ml, c, memo));
            }
            m.extend(ml.plus[id.index()].iter().copied());
            for s in ml.minus[id.index()].iter() {
                m.remove(s);
            }
            memo.insert(id, m.clone());
            m
        }
        go(self, id, &mut HashMap::new())
    }

    pub fn set_plus(&mut self, id: WordId, set: SymbolSet) {
        self.grow();
        self.plus[id.index()] = set;
    }

    pub fn set_minus(&mut self, id: WordId, set: SymbolSet) {
        self.grow();
        self.minus[id.index()] = set;
    }

    /// Delete a word, splicing its definition into every holder while
    /// re-homing perturbations so that every surviving word's derived
    /// meaning is unchanged.
    pub fn delete_word_preserving(&mut self, id: WordId) -> Result<Vec<WordId>> {
        let derived = self.rebuild_derived();
        let affected = self.lexicon.delete_word(id)?;
        let mut targets: Vec<(WordId, SymbolSet)> = Vec::new();
        for &d in &affected {
            targets.push((d, derived[d.index()].clone()));
        }
        for (d, target) in targets {
            let mut union = SymbolSet::new();
            for &c in self.lexicon.components(d) {
                union.extend(derived[c.index()].iter().copied());
            }
            let plus: SymbolSet = target.difference(&union).copied().collect();
            let minus: SymbolSet = union.difference(&target).copied().collect();
            self.plus[d.index()] = plus;
            self.minus[d.index()] = minus;
        }
        self.plus[id.index()].clear();
        self.minus[id.index()].clear();
        Ok(affected)
    }

    pub fn save_binary(&self) -> Vec<u8> {
        let mut out = self.lexicon.save_binary();
        out.extend_from_slice(b"MLEX");
        write_varint(&mut out, self.inventory.len() as u64);
        for name in &self.inventory.names {
            write_varint(&mut out, name.len() as u64);
            out.extend_from_slice(name.as_bytes());
        }
        let live: Vec<WordId> = self.lexicon.nonterminal_ids().collect();
        write_varint(&mut out, live.len() as u64);
        for id in live {
            write_varint(&mut out, id.0 as u64);
            for set in [&self.plus[id.index()], &self.minus[id.index()]] {
                write_varint(&mut out, set.len() as u64);
                for &s in set.iter() {
                    write_varint(&mut out, s.0 as u64);
                }
            }
        }
        out
    }

    pub fn load_binary(data: &[u8]) -> Result<MeaningLexicon> {
        let lexicon = Lexicon::load_binary(data)?;
        let marker = b"MLEX";
        let start = data
            .windows(4)
            .position(|w| w == marker)
            .ok_or_else(|| Error::Corrupt("missing meaning section".into()))?;
        let mut pos = start + 4;
        let n_symbols = read_varint(data, &mut pos)? as usize;
        let mut inventory = SymbolInventory::new();
        for _ in 0..n_symbols {
            let len = read_varint(data, &mut pos)? as usize;
            let bytes = data
                .get(pos..pos + len)
                .ok_or_else(|| Error::Corrupt("truncated symbol name".into()))?;
            pos += len;
            let name = std::str::from_utf8(bytes)
                .map_err(|_| Error::Corrupt("symbol name not utf-8".into()))?;
            inventory.intern(name);
        }
        let mut ml = MeaningLexicon::new(lexicon, inventory);
        let n_words = read_varint(data, &mut pos)? as usize;
        for _ in 0..n_words {
            let id = WordId(read_varint(data, &mut pos)? as u32);
            for which in 0..2 {
                let n = read_varint(data, &mut pos)? as usize;
                let mut set = SymbolSet::new();
                for _ in 0..n {
                    set.insert(SymbolId(read_varint(data, &mut pos)? as u32));
                }
                if which == 0 {
                    ml.set_plus(id, set);
                } else {
                    ml.set_minus(id, set);
                }
            }
        }
        Ok(ml)
    }
}

/// Residual bits for conveying `chosen` given that the parse already
/// carries `parsed`: each missing or spurious symbol costs `symbol_cost`.
/// Zero counts cost nothing even at infinite symbol cost.
fn residual_bits(parsed: &SymbolSet, chosen: &SymbolSet, symbol_cost: f64) -> f64 {
    let missing = chosen.difference(parsed).count();
    let spurious = parsed.difference(chosen).count();
    let mut bits = 0.0;
    if missing > 0 {
        bits += symbol_cost * missing as f64;
    }
    if spurious > 0 {
        bits += symbol_cost * spurious as f64;
    }
    bits
}

/// Joint description length of one utterance: token codes, the residual
/// symbols, and the uniform-prior choice among the candidates.
pub fn joint_dl(
    ml: &MeaningLexicon,
    parse: &Parse,
    chosen: &SymbolSet,
    candidate_count: usize,
    symbol_cost: f64,
) -> f64 {
    let derived = {
        // per-call memo is fine at utterance scale
        let mut union = SymbolSet::new();
        for &t in &parse.tokens {
            union.extend(ml.meaning_of(t));
        }
        union
    };
    parse.dl_bits
        + residual_bits(&derived, chosen, symbol_cost)
        + (candidate_count as f64).log2()
}

fn union_of(tokens: &[WordId], derived: &[SymbolSet]) -> SymbolSet {
    let mut u = SymbolSet::new();
    for &t in tokens {
        u.extend(derived[t.index()].iter().copied());
    }
    u
}

/// Viterbi over text costs plus meaning-aware per-token adjustments: a
/// token asserting symbols outside `target` is charged for retracting
/// them; covering a target symbol earns the residual saving as a bonus.
/// Overlapping coverage makes this a (good) approximation; the exact
/// joint DL is recomputed on the result.
fn joint_viterbi(
    costs: &[f64],
    derived: &[SymbolSet],
    target: &SymbolSet,
    symbol_cost: f64,
    bytes: &[u8],
    matcher: &SurfaceMatcher,
    span_offset: usize,
) -> Parse {
    let n = bytes.len();
    let mut best = vec![f64::INFINITY; n + 1];
    let mut back: Vec<(WordId, usize)> = vec![(WordId(0), 0); n + 1];
    best[0] = 0.0;
    for i in 0..n {
        if !best[i].is_finite() {
            continue;
        }
        matcher.matches_at(bytes, i, |w, len| {
            let base = costs[w.index()];
            if base >= 1e12 && !w.is_terminal() {
                return;
            }
            let m = &derived[w.index()];
            let mut cost = base;
            if !m.is_empty() {
                let covered = m.intersection(target).count() as f64;
                let spurious = m.len() as f64 - covered;
                cost += symbol_cost * (spurious - covered);
            }
            let total = best[i] + cost;
            let j = i + len;
            let take = if total < best[j] {
                true
            } else if total == best[j] {
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
        tokens.push(w);
        pos -= len;
    }
    tokens.reverse();
    // report true text bits, not the bonus-adjusted DP objective
    let dl_bits = tokens.iter().map(|t| costs[t.index()]).sum();
    Parse {
        tokens,
        dl_bits,
        span: (span_offset, span_offset + n),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MeaningConfig {
    pub symbol_cost: f64,
    pub text_iterations: usize,
    pub joint_iterations: usize,
    pub inner_em_iterations: usize,
    pub add_candidate_min_pair_count: f64,
    pub max_word_len: usize,
    pub threads: usize,
    /// Run the exact single-symbol relocation polish when the lexicon ends
    /// up at most this many nonterminals.
    pub polish_max_words: usize,
}

impl Default for MeaningConfig {
    fn default() -> Self {
        MeaningConfig {
            symbol_cost: 10.0,
            text_iterations: 8,
            joint_iterations: 8,
            inner_em_iterations: 2,
            add_candidate_min_pair_count: 2.0,
            max_word_len: 64,
            threads: 1,
            polish_max_words: 40,
        }
    }
}

impl MeaningConfig {
    fn search_config(&self, outer: usize) -> SearchConfig {
        SearchConfig {
            outer_iterations: outer,
            inner_em_iterations: self.inner_em_iterations,
            add_candidate_min_pair_count: self.add_candidate_min_pair_count,
            max_word_len: self.max_word_len,
            threads: self.threads,
            ..SearchConfig::default()
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct JointRecord {
    pub iteration: usize,
    pub joint_dl_bits: f64,
    pub nonterminals: usize,
    pub perturbations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrainReport {
    pub text_history: Vec<HistoryRecord>,
    pub joint_history: Vec<JointRecord>,
}

struct JointParseOutcome {
    parses: Vec<Parse>,
    chosen: Vec<usize>,
    counts: CountTable,
    joint_bits: f64,
}

/// Parse every utterance under every candidate meaning and keep the
/// cheapest; counts cover utterance tokens and definitions like the plain
/// EM pass.
fn joint_parse_pass(
    ml: &MeaningLexicon,
    corpus: &MeaningCorpus,
    derived: &[SymbolSet],
    cfg: &MeaningConfig,
) -> JointParseOutcome {
    let scfg = cfg.search_config(0);
    let costs = search_costs(&ml.lexicon, &scfg);
    let matcher = SurfaceMatcher::build(&ml.lexicon, cfg.max_word_len);
    let mut counts = CountTable::new(ml.lexicon.table_len());
    let mut parses = Vec::with_capacity(corpus.utterances.len());
    let mut chosen = Vec::with_capacity(corpus.utterances.len());
    let mut joint_bits = 0.0;

    for u in &corpus.utterances {
        let mut best: Option<(f64, usize, Parse)> = None;
        for (ci, cand) in u.candidates.iter().enumerate() {
            let parse = joint_viterbi(
                &costs,
                derived,
                cand,
                cfg.symbol_cost,
                &u.text,
                &matcher,
                0,
            );
            let union = union_of(&parse.tokens, derived);
            let dl = parse.dl_bits
                + residual_bits(&union, cand, cfg.symbol_cost)
                + (u.candidates.len() as f64).log2();
            if best.as_ref().map_or(true, |(b, _, _)| dl < *b) {
                best = Some((dl, ci, parse));
            }
        }
        let (dl, ci, parse) = best.unwrap();
        joint_bits += dl;
        counts.record_tokens(&parse.tokens);
        parses.push(parse);
        chosen.push(ci);
    }

    // definitions count exactly as in the text-only EM pass
    for id in ml.lexicon.nonterminal_ids() {
        let surface = ml.lexicon.surface(id);
        let parse = crate::parser::viterbi_with_costs(&costs, surface, &matcher, 0, true);
        counts.record_tokens(&parse.tokens);
    }

    JointParseOutcome {
        parses,
        chosen,
        counts,
        joint_bits,
    }
}

/// Words occurring anywhere in the expansion of any token of each
/// utterance's parse.
fn occurrence_index(
    ml: &MeaningLexicon,
    parses: &[Parse],
) -> (Vec<Vec<u32>>, HashMap<WordId, Vec<u32>>) {
    let mut desc_memo: HashMap<WordId, Vec<WordId>> = HashMap::new();
    fn descendants(
        lex: &Lexicon,
        id: WordId,
        memo: &mut HashMap<WordId, Vec<WordId>>,
    ) -> Vec<WordId> {
        if id.is_terminal() {
            return Vec::new();
        }
        if let Some(d) = memo.get(&id) {
            return d.clone();
        }
        let mut all = vec![id];
        for &c in lex.components(id) {
            all.extend(descendants(lex, c, memo));
        }
        all.sort_unstable();
        all.dedup();
        memo.insert(id, all.clone());
        all
    }

    let mut per_utt: Vec<Vec<u32>> = Vec::with_capacity(parses.len());
    let mut occ: HashMap<WordId, Vec<u32>> = HashMap::new();
    for (ui, parse) in parses.iter().enumerate() {
        let mut words: Vec<WordId> = Vec::new();
        for &t in &parse.tokens {
            words.extend(descendants(&ml.lexicon, t, &mut desc_memo));
        }
        words.sort_unstable();
        words.dedup();
        for &w in &words {
            occ.entry(w).or_default().push(ui as u32);
        }
        per_utt.push(words.iter().map(|w| w.0).collect());
    }
    (per_utt, occ)
}

/// Re-assign all symbol perturbations from scratch: a greedy cover per
/// symbol chooses carrier words (coverage pays the residual saving, wrong
/// contexts and the lexicon entry cost against it), then a removal pass
/// adds minus perturbations where inherited symbols are mostly wrong.
fn reassign_symbols(
    ml: &mut MeaningLexicon,
    corpus: &MeaningCorpus,
    parses: &[Parse],
    chosen: &[usize],
) {
    for set in ml.plus.iter_mut() {
        set.clear();
    }
    for set in ml.minus.iter_mut() {
        set.clear();
    }
    let (_, occ) = occurrence_index(ml, parses);
    let n_utts = corpus.utterances.len();
    let meanings: Vec<&SymbolSet> = corpus
        .utterances
        .iter()
        .zip(chosen)
        .map(|(u, &ci)| &u.candidates[ci])
        .collect();

    // per symbol: utterances that need it
    let mut needs: HashMap<SymbolId, Vec<u32>> = HashMap::new();
    for (ui, m) in meanings.iter().enumerate() {
        for &s in m.iter() {
            needs.entry(s).or_default().push(ui as u32);
        }
    }
    let mut symbols: Vec<SymbolId> = needs.keys().copied().collect();
    symbols.sort_unstable();

    let mut word_list: Vec<WordId> = occ.keys().copied().collect();
    word_list.sort_unstable();

    for s in symbols {
        let needed = &needs[&s];
        let needed_set: Vec<bool> = {
            let mut v = vec![false; n_utts];
            for &u in needed {
                v[u as usize] = true;
            }
            v
        };
        let mut covered = vec![false; n_utts];
        // greedy cover, at most a handful of carriers per symbol
        for _round in 0..8 {
            let mut best: Option<(f64, usize, WordId)> = None;
            for &w in &word_list {
                let utts = &occ[&w];
                let mut gain = 0usize;
                let mut wrong = 0usize;
                for &u in utts {
                    if needed_set[u as usize] {
                        if !covered[u as usize] {
                            gain += 1;
                        }
                    } else {
                        wrong += 1;
                    }
                }
                if gain == 0 {
                    continue;
                }
                let score = gain as f64 - wrong as f64;
                let better = match &best {
                    None => score > 1.0,
                    Some((bs, bg, bw)) => {
                        score > 1.0
                            && (score > *bs
                                || (score == *bs && (gain > *bg || (gain == *bg && w < *bw))))
                    }
                };
                if better {
                    best = Some((score, gain, w));
                }
            }
            let Some((_, _, w)) = best else { break };
            ml.plus[w.index()].insert(s);
            for &u in &occ[&w] {
                if needed_set[u as usize] {
                    covered[u as usize] = true;
                }
            }
        }
    }

    // normalize (a carrier may be an ancestor of another carrier)
    let derived = ml.rebuild_derived();

    // minus pass: inherited symbols that appear mostly in the wrong
    // utterances get removed at the word that inherits them
    let mut cuts: Vec<(WordId, SymbolId)> = Vec::new();
    for &w in &word_list {
        if w.is_terminal() {
            continue;
        }
        let m = &derived[w.index()];
        if m.is_empty() {
            continue;
        }
        let utts = &occ[&w];
        for &s in m.iter() {
            if ml.plus[w.index()].contains(&s) {
                continue;
            }
            let mut bad = 0usize;
            let mut good = 0usize;
            for &u in utts {
                if meanings[u as usize].contains(&s) {
                    good += 1;
                } else {
                    bad += 1;
                }
            }
            if bad as f64 - good as f64 > 1.0 {
                cuts.push((w, s));
            }
        }
    }
    for (w, s) in cuts {
        ml.minus[w.index()].insert(s);
    }
    ml.rebuild_derived();
}

/// Symbol-dependent part of the total DL with parses held fixed: residuals
/// per utterance plus the per-symbol lexicon cost.
fn symbol_objective(
    ml: &mut MeaningLexicon,
    corpus: &MeaningCorpus,
    parses: &[Parse],
    chosen: &[usize],
    symbol_cost: f64,
) -> f64 {
    let derived = ml.rebuild_derived();
    let mut bits = symbol_cost * ml.perturbation_count() as f64;
    for ((u, parse), &ci) in corpus.utterances.iter().zip(parses).zip(chosen) {
        let union = union_of(&parse.tokens, &derived);
        bits += residual_bits(&union, &u.candidates[ci], symbol_cost);
    }
    bits
}

/// Exhaustive local search over single-symbol relocations (word ->
/// component or container) and removals, until no move lowers the total
/// DL. Only run on small lexicons.
fn polish_symbols(
    ml: &mut MeaningLexicon,
    corpus: &MeaningCorpus,
    parses: &[Parse],
    chosen: &[usize],
    symbol_cost: f64,
) {
    let max_rounds = 64;
    for _ in 0..max_rounds {
        let base = symbol_objective(ml, corpus, parses, chosen, symbol_cost);
        let mut best: Option<(f64, WordId, SymbolId, Option<WordId>)> = None;
        let words: Vec<WordId> = ml.lexicon.nonterminal_ids().collect();
        for &w in &words {
            let symbols: Vec<SymbolId> = ml.plus[w.index()].iter().copied().collect();
            if symbols.is_empty() {
                continue;
            }
            let mut targets: Vec<Option<WordId>> = vec![None];
            for &c in ml.lexicon.components(w) {
                if !c.is_terminal() {
                    targets.push(Some(c));
                }
            }
            for &d in &words {
                if d != w && ml.lexicon.components(d).contains(&w) {
                    targets.push(Some(d));
                }
            }
            for s in symbols {
                for &target in &targets {
                    let saved_plus = ml.plus.clone();
                    let saved_minus = ml.minus.clone();
                    ml.plus[w.index()].remove(&s);
                    if let Some(t) = target {
                        ml.plus[t.index()].insert(s);
                    }
                    let cost = symbol_objective(ml, corpus, parses, chosen, symbol_cost);
                    ml.plus = saved_plus;
                    ml.minus = saved_minus;
                    if cost < base - 1e-9
                        && best.as_ref().map_or(true, |(b, _, _, _)| cost < *b)
                    {
                        best = Some((cost, w, s, target));
                    }
                }
            }
        }
        match best {
            None => break,
            Some((_, w, s, target)) => {
                ml.plus[w.index()].remove(&s);
                if let Some(t) = target {
                    ml.plus[t.index()].insert(s);
                }
                ml.rebuild_derived();
            }
        }
    }
}

/// Two-phase training: text-only induction, then joint iterations where
/// parses minimize the joint DL, the lexicon keeps evolving on joint
/// counts, and symbol perturbations are re-assigned each pass.
pub fn train_joint(corpus: &MeaningCorpus, cfg: &MeaningConfig) -> Result<(MeaningLexicon, TrainReport)> {
    let text_corpus = corpus.text_corpus()?;
    let scfg = cfg.search_config(cfg.text_iterations);
    let (lexicon, text_history) = crate::search::run_induction(&text_corpus, &scfg)?;
    let mut ml = MeaningLexicon::new(lexicon, corpus.inventory.clone());
    let mut joint_history = Vec::new();

    for iteration in 0..cfg.joint_iterations {
        // EM on both streams
        let mut outcome = None;
        for _ in 0..cfg.inner_em_iterations {
            let derived = ml.rebuild_derived();
            let out = joint_parse_pass(&ml, corpus, &derived, cfg);
            ml.lexicon.reestimate(&out.counts.word_counts)?;
            outcome = Some(out);
        }
        let outcome = outcome.unwrap();

        // structure updates driven by the joint counts
        let scfg0 = cfg.search_config(0);
        let candidates =
            crate::search::propose_candidates(&outcome.counts, &ml.lexicon, &scfg0);
        {
            let ctx = DeltaContext::new(
                &ml.lexicon,
                &outcome.counts.word_counts,
                outcome.counts.total,
                &scfg0,
            );
            let accepted: Vec<_> = candidates
                .iter()
                .map(|&(w1, w2)| ctx.delta_add(w1, w2, outcome.counts.pair(w1, w2)))
                .filter(|est| est.delta_bits < 0.0)
                .collect();
            for est in &accepted {
                if let Candidate::Add(w1, w2) = est.candidate {
                    let id = ml.lexicon.add_word(&[w1, w2])?;
                    ml.lexicon.set_count(id, est.new_word_count);
                    for &(w, c) in &est.changed_counts {
                        let decrement = outcome.counts.count(w) - c;
                        let updated = (ml.lexicon.count(w) - decrement).max(1.0);
                        ml.lexicon.set_count(w, updated);
                    }
                }
            }
        }
        ml.lexicon.refresh_probabilities();
        ml.grow();

        // delete words whose text DL delta plus symbol re-homing cost is
        // negative
        let derived = ml.rebuild_derived();
        let counts_vec = ml.lexicon.count_table();
        let total: f64 = counts_vec.iter().sum();
        let mut removable: Vec<(WordId, f64)> = Vec::new();
        {
            let ctx = DeltaContext::new(&ml.lexicon, &counts_vec, total, &scfg0);
            for id in ml.lexicon.nonterminal_ids() {
                let est = ctx.delta_delete(&ml.lexicon, id);
                let sym_delta = rehoming_cost(&ml, &derived, id, cfg.symbol_cost);
                let d = est.delta_bits + sym_delta;
                if d < 0.0 {
                    removable.push((id, d));
                }
            }
        }
        removable.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        for (id, _) in removable {
            if !ml.lexicon.contains(id) {
                continue;
            }
            ml.delete_word_preserving(id)?;
        }
        ml.lexicon.refresh_probabilities();

        // symbol re-assignment against the current parses
        let derived = ml.rebuild_derived();
        let out = joint_parse_pass(&ml, corpus, &derived, cfg);
        ml.lexicon.reestimate(&out.counts.word_counts)?;
        reassign_symbols(&mut ml, corpus, &out.parses, &out.chosen);

        joint_history.push(JointRecord {
            iteration,
            joint_dl_bits: out.joint_bits,
            nonterminals: ml.lexicon.nonterminal_count(),
            perturbations: ml.perturbation_count(),
        });
    }

    if ml.lexicon.nonterminal_count() <= cfg.polish_max_words {
        let derived = ml.rebuild_derived();
        let out = joint_parse_pass(&ml, corpus, &derived, cfg);
        polish_symbols(&mut ml, corpus, &out.parses, &out.chosen, cfg.symbol_cost);
    }

    Ok((
        ml,
        TrainReport {
            text_history,
            joint_history,
        },
    ))
}

/// The parses and meaning choices of one joint pass, frozen so that
/// alternative perturbation assignments can be compared under the same
/// encoding of the text.
#[derive(Clone, Debug)]
pub struct JointSnapshot {
    pub parses: Vec<Parse>,
    pub chosen: Vec<usize>,
}

pub fn joint_snapshot(ml: &MeaningLexicon, corpus: &MeaningCorpus, cfg: &MeaningConfig) -> JointSnapshot {
    let mut mlc = ml.clone();
    let derived = mlc.rebuild_derived();
    let out = joint_parse_pass(ml, corpus, &derived, cfg);
    JointSnapshot {
        parses: out.parses,
        chosen: out.chosen,
    }
}

/// Total description length of a snapshot under (possibly modified)
/// perturbations: token codes, per-utterance residuals and candidate
/// priors, the text lexicon, and the symbol perturbation costs.
pub fn snapshot_total_dl(
    ml: &MeaningLexicon,
    corpus: &MeaningCorpus,
    snapshot: &JointSnapshot,
    cfg: &MeaningConfig,
) -> f64 {
    let mut mlc = ml.clone();
    let derived = mlc.rebuild_derived();
    let mut bits = mlc.lexicon.lexicon_dl()
        + cfg.symbol_cost * mlc.perturbation_count() as f64;
    for ((u, parse), &ci) in corpus
        .utterances
        .iter()
        .zip(&snapshot.parses)
        .zip(&snapshot.chosen)
    {
        let union = union_of(&parse.tokens, &derived);
        bits += parse.dl_bits
            + residual_bits(&union, &u.candidates[ci], cfg.symbol_cost)
            + (u.candidates.len() as f64).log2();
    }
    bits
}

/// Symbol-cost change of deleting `id` with re-homing: each holder writes
/// the perturbations needed to keep its meaning, while the word's own
/// perturbations are recovered.
fn rehoming_cost(
    ml: &MeaningLexicon,
    derived: &[SymbolSet],
    id: WordId,
    symbol_cost: f64,
) -> f64 {
    let own = (ml.plus[id.index()].len() + ml.minus[id.index()].len()) as f64;
    let mut added = 0.0;
    for holder in ml.lexicon.nonterminal_ids() {
        if holder == id || !ml.lexicon.components(holder).contains(&id) {
            continue;
        }
        // union of the holder's components after the splice
        let mut union = SymbolSet::new();
        for &c in ml.lexicon.components(holder) {
            if c == id {
                for &cc in ml.lexicon.components(id) {
                    union.extend(derived[cc.index()].iter().copied());
                }
            } else {
                union.extend(derived[c.index()].iter().copied());
            }
        }
        let target = &derived[holder.index()];
        let new_perturbs =
            target.difference(&union).count() + union.difference(target).count();
        let old_perturbs = ml.plus[holder.index()].len() + ml.minus[holder.index()].len();
        added += new_perturbs as f64 - old_perturbs as f64;
    }
    symbol_cost * (added - own)
}

/// Symbol union over the Viterbi parse of raw text.
pub fn infer_meaning(ml: &MeaningLexicon, text: &[u8], max_word_len: usize) -> SymbolSet {
    let matcher = SurfaceMatcher::build(&ml.lexicon, max_word_len);
    let parse = crate::parser::viterbi_parse(&ml.lexicon, text, &matcher);
    let mut out = SymbolSet::new();
    for t in parse.tokens {
        out.extend(ml.meaning_of(t));
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentifyOutcome {
    /// Joint DL of each candidate in pool order.
    pub dls: Vec<f64>,
    /// Index of the cheapest candidate (smallest index on exact ties).
    pub best: usize,
    /// Number of candidates within tolerance of the minimum.
    pub tied_at_best: usize,
}

/// Rank a pool of candidate meanings for a text by joint DL.
pub fn identify(
    ml: &MeaningLexicon,
    text: &[u8],
    pool: &[SymbolSet],
    cfg: &MeaningConfig,
) -> IdentifyOutcome {
    let mut mlc = ml.clone();
    let derived = mlc.rebuild_derived();
    let scfg = cfg.search_config(0);
    let costs = search_costs(&ml.lexicon, &scfg);
    let matcher = SurfaceMatcher::build(&ml.lexicon, cfg.max_word_len);
    identify_with(&costs, &derived, text, pool, &matcher, cfg)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MeaningReport {
    /// Micro-averaged precision of inferred symbols.
    pub symbol_accuracy: f64,
    /// Micro-averaged recall of true symbols.
    pub symbol_recall: f64,
    pub inferred_symbols: usize,
    pub true_symbols: usize,
    /// Identification: true meaning strictly cheapest.
    pub identify_top1: f64,
    /// True meaning tied for cheapest.
    pub identify_tied: f64,
    pub identify_trials: usize,
}

impl fmt::Display for MeaningReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "symbol accuracy   {:>8.1}%", self.symbol_accuracy)?;
        writeln!(f, "symbol recall     {:>8.1}%", self.symbol_recall)?;
        writeln!(
            f,
            "identification    {:>8.1}% top-1, {:.1}% tied-first over {} trials",
            self.identify_top1, self.identify_tied, self.identify_trials
        )?;
        write!(
            f,
            "symbols            {} inferred / {} true",
            self.inferred_symbols, self.true_symbols
        )
    }
}

/// Evaluate a trained lexicon on a paired corpus: re-parse the text, read
/// off meanings, and identify each utterance's true meaning among the
/// meanings of the `window` preceding utterances.
pub fn evaluate(
    ml: &MeaningLexicon,
    corpus: &MeaningCorpus,
    cfg: &MeaningConfig,
    window: usize,
) -> MeaningReport {
    let mut mlc = ml.clone();
    let derived = mlc.rebuild_derived();
    let scfg = cfg.search_config(0);
    let costs = search_costs(&ml.lexicon, &scfg);
    let matcher = SurfaceMatcher::build(&ml.lexicon, cfg.max_word_len);

    let mut hits = 0usize;
    let mut inferred_total = 0usize;
    let mut true_total = 0usize;
    for u in &corpus.utterances {
        let parse =
            crate::parser::viterbi_with_costs(&costs, &u.text, &matcher, 0, false);
        let inferred = union_of(&parse.tokens, &derived);
        let truth = u.true_meaning();
        hits += inferred.intersection(truth).count();
        inferred_total += inferred.len();
        true_total += truth.len();
    }

    let mut top1 = 0usize;
    let mut tied = 0usize;
    let mut trials = 0usize;
    for i in window..corpus.utterances.len() {
        let u = &corpus.utterances[i];
        let mut pool: Vec<SymbolSet> = Vec::with_capacity(window + 1);
        pool.push(u.true_meaning().clone());
        for j in i - window..i {
            pool.push(corpus.utterances[j].true_meaning().clone());
        }
        let outcome = identify_with(&costs, &derived, &u.text, &pool, &matcher, cfg);
        let min = outcome
            .dls
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if (outcome.dls[0] - min).abs() <= 1e-9 {
            if outcome.tied_at_best == 1 {
                top1 += 1;
            } else {
                tied += 1;
            }
        }
        trials += 1;
    }

    MeaningReport {
        symbol_accuracy: if inferred_total == 0 {
            0.0
        } else {
            100.0 * hits as f64 / inferred_total as f64
        },
        symbol_recall: if true_total == 0 {
            0.0
        } else {
            100.0 * hits as f64 / true_total as f64
        },
        inferred_symbols: inferred_total,
        true_symbols: true_total,
        identify_top1: if trials == 0 {
            0.0
        } else {
            100.0 * top1 as f64 / trials as f64
        },
        identify_tied: if trials == 0 {
            0.0
        } else {
            100.0 * tied as f64 / trials as f64
        },
        identify_trials: trials,
    }
}

fn identify_with(
    costs: &[f64],
    derived: &[SymbolSet],
    text: &[u8],
    pool: &[SymbolSet],
    matcher: &SurfaceMatcher,
    cfg: &MeaningConfig,
) -> IdentifyOutcome {
    let mut dls = Vec::with_capacity(pool.len());
    for cand in pool {
        let parse = joint_viterbi(costs, derived, cand, cfg.symbol_cost, text, matcher, 0);
        let union = union_of(&parse.tokens, derived);
        let dl = parse.dl_bits
            + residual_bits(&union, cand, cfg.symbol_cost)
            + (pool.len() as f64).log2();
        dls.push(dl);
    }
    let min = dls.iter().copied().fold(f64::INFINITY, f64::min);
    let tied_at_best = dls.iter().filter(|&&d| (d - min).abs() <= 1e-9).count();
    let best = dls
        .iter()
        .position(|&d| (d - min).abs() <= 1e-9)
        .unwrap_or(0);
    IdentifyOutcome {
        dls,
        best,
        tied_at_best,
    }
}

/// Deterministic paired corpus: Zipf-sampled word sequences over a fixed
/// vocabulary, text concatenated without delimiters, meanings the set of
/// symbols of the words used. Ambiguity 3 adds the meanings of the two
/// surrounding utterances as distractors.
pub fn synth_corpus(
    vocab_size: usize,
    utterance_count: usize,
    ambiguity: usize,
    seed: u64,
) -> Result<MeaningCorpus> {
    if vocab_size < 1 || utterance_count < 1 {
        return Err(Error::BadConfig("sizes must be >= 1".into()));
    }
    if ambiguity != 1 && ambiguity != 3 {
        return Err(Error::BadConfig("ambiguity must be 1 or 3".into()));
    }
    let vocab = crate::synth::vocabulary(vocab_size);
    let mut inventory = SymbolInventory::new();
    let symbols: Vec<SymbolId> = vocab
        .iter()
        .map(|w| inventory.intern(&w.to_uppercase()))
        .collect();
    let zipf = crate::synth::Zipf::new(vocab.len());
    let mut rng = crate::synth::Rng::new(seed);

    let mut texts = Vec::with_capacity(utterance_count);
    let mut truths: Vec<SymbolSet> = Vec::with_capacity(utterance_count);
    for _ in 0..utterance_count {
        let words = 2 + rng.below(5);
        let mut text = Vec::new();
        let mut meaning = SymbolSet::new();
        for _ in 0..words {
            let w = zipf.sample(&mut rng);
            text.extend_from_slice(vocab[w].as_bytes());
            meaning.insert(symbols[w]);
        }
        texts.push(text);
        truths.push(meaning);
    }

    let n = texts.len();
    let utterances = texts
        .into_iter()
        .enumerate()
        .map(|(i, text)| {
            let mut candidates = vec![truths[i].clone()];
            if ambiguity == 3 {
                candidates.push(truths[(i + n - 1) % n].clone());
                candidates.push(truths[(i + 1) % n].clone());
            }
            MeaningUtterance { text, candidates }
        })
        .collect();
    Ok(MeaningCorpus {
        utterances,
        inventory,
    })
}
