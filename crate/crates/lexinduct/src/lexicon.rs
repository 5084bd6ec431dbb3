//! The hierarchical lexicon: words as perturbed compositions of other words,
//! with probabilities, code lengths and description-length accounting.

use crate::{Error, Result};
use std::collections::HashMap;
use std::fmt::Write as _;

/// Number of terminal words (one per byte value).
pub const TERMINAL_COUNT: u32 = 256;

/// Dense word identifier. Ids `0..256` are the byte terminals; nonterminal
/// ids are assigned in creation order and never reused.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WordId(pub u32);

impl WordId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn is_terminal(self) -> bool {
        self.0 < TERMINAL_COUNT
    }

    pub fn terminal(byte: u8) -> WordId {
        WordId(byte as u32)
    }
}

#[derive(Clone, Debug)]
pub struct Word {
    /// Ordered component references; empty iff this is a terminal.
    pub components: Vec<WordId>,
    /// Cached concatenation of component surfaces (the byte itself for a
    /// terminal).
    pub surface: Vec<u8>,
    /// Usage count c(w) from the most recent reestimation.
    pub count: f64,
    /// p(w) = c(w) / N.
    pub probability: f64,
    /// -log2 p(w); infinite when the probability is zero.
    pub codelength: f64,
}

impl Word {
    pub fn is_terminal(&self) -> bool {
        self.components.is_empty()
    }
}

/// Word table plus the bookkeeping needed for description-length accounting.
#[derive(Clone, Debug)]
pub struct Lexicon {
    words: Vec<Option<Word>>,
    def_index: HashMap<Vec<WordId>, WordId>,
    /// N = sum of live counts, set by `reestimate`/`refresh_probabilities`.
    pub total_count: f64,
    /// Structural bits charged per nonterminal word in `lexicon_dl`.
    pub word_overhead_bits: f64,
}

impl Lexicon {
    /// A lexicon of the 256 byte terminals with uniform probabilities.
    pub fn new() -> Lexicon {
        let words = (0u32..TERMINAL_COUNT)
            .map(|b| {
                Some(Word {
                    components: Vec::new(),
                    surface: vec![b as u8],
                    count: 0.0,
                    probability: 1.0 / TERMINAL_COUNT as f64,
                    codelength: 8.0,
                })
            })
            .collect();
        Lexicon {
            words,
            def_index: HashMap::new(),
            total_count: 0.0,
            word_overhead_bits: 0.0,
        }
    }

    /// Size of the word table, including terminals and deleted slots.
    pub fn table_len(&self) -> usize {
        self.words.len()
    }

    pub fn word(&self, id: WordId) -> Option<&Word> {
        self.words.get(id.index()).and_then(|w| w.as_ref())
    }

    fn word_mut(&mut self, id: WordId) -> Option<&mut Word> {
        self.words.get_mut(id.index()).and_then(|w| w.as_mut())
    }

    pub fn contains(&self, id: WordId) -> bool {
        self.word(id).is_some()
    }

    pub fn surface(&self, id: WordId) -> &[u8] {
        &self.word(id).expect("live word").surface
    }

    pub fn components(&self, id: WordId) -> &[WordId] {
        &self.word(id).expect("live word").components
    }

    pub fn codelength(&self, id: WordId) -> f64 {
        self.word(id).expect("live word").codelength
    }

    pub fn count(&self, id: WordId) -> f64 {
        self.word(id).map(|w| w.count).unwrap_or(0.0)
    }

    pub fn set_count(&mut self, id: WordId, count: f64) {
        if let Some(w) = self.word_mut(id) {
            w.count = count;
        }
    }

    /// All live word ids, terminals first, in id order.
    pub fn live_ids(&self) -> impl Iterator<Item = WordId> + '_ {
        self.words
            .iter()
            .enumerate()
            .filter_map(|(i, w)| w.as_ref().map(|_| WordId(i as u32)))
    }

    pub fn nonterminal_ids(&self) -> impl Iterator<Item = WordId> + '_ {
        self.live_ids().filter(|id| !id.is_terminal())
    }

    pub fn nonterminal_count(&self) -> usize {
        self.nonterminal_ids().count()
    }

    /// Live words with nonzero count, ranked by decreasing count (ties by
    /// ascending id). This is the order used by dumps and by the codec.
    pub fn ranked_live_words(&self) -> Vec<WordId> {
        let mut ids: Vec<WordId> = self.live_ids().filter(|&id| self.count(id) > 0.0).collect();
        ids.sort_by(|&a, &b| {
            self.count(b)
                .partial_cmp(&self.count(a))
                .unwrap()
                .then(a.cmp(&b))
        });
        ids
    }

    pub fn max_surface_len(&self) -> usize {
        self.live_ids()
            .map(|id| self.surface(id).len())
            .max()
            .unwrap_or(1)
    }

    /// Per-id codelength table (f64::INFINITY for dead slots), indexable by
    /// `WordId::index`.
    pub fn codelength_table(&self) -> Vec<f64> {
        self.words
            .iter()
            .map(|w| w.as_ref().map(|w| w.codelength).unwrap_or(f64::INFINITY))
            .collect()
    }

    pub fn count_table(&self) -> Vec<f64> {
        self.words
            .iter()
            .map(|w| w.as_ref().map(|w| w.count).unwrap_or(0.0))
            .collect()
    }

    /// Insert a new word defined by `components`. The caller is responsible
    /// for seeding its count; until probabilities are refreshed the word has
    /// p = 0 and infinite codelength.
    pub fn add_word(&mut self, components: &[WordId]) -> Result<WordId> {
        if components.len() < 2 {
            return Err(Error::SingletonDefinition);
        }
        let mut surface = Vec::new();
        for &c in components {
            let w = self.word(c).ok_or(Error::UnknownWord(c.0))?;
            surface.extend_from_slice(&w.surface);
        }
        let key = components.to_vec();
        if self.def_index.contains_key(&key) {
            return Err(Error::DuplicateDefinition);
        }
        let id = WordId(self.words.len() as u32);
        self.words.push(Some(Word {
            components: key.clone(),
            surface,
            count: 0.0,
            probability: 0.0,
            codelength: f64::INFINITY,
        }));
        self.def_index.insert(key, id);
        Ok(id)
    }

    /// Remove a nonterminal; every definition that referenced it has the
    /// reference spliced out and replaced by the word's own component list.
    /// Returns the ids of the affected words.
    pub fn delete_word(&mut self, id: WordId) -> Result<Vec<WordId>> {
        if id.is_terminal() {
            return Err(Error::TerminalDelete);
        }
        let def = match self.word(id) {
            Some(w) => w.components.clone(),
            None => return Err(Error::UnknownWord(id.0)),
        };
        let mut affected = Vec::new();
        for i in 0..self.words.len() {
            let holder = WordId(i as u32);
            if holder == id {
                continue;
            }
            let contains = match &self.words[i] {
                Some(w) => w.components.contains(&id),
                None => continue,
            };
            if !contains {
                continue;
            }
            let old = self.words[i].as_ref().unwrap().components.clone();
            let mut new = Vec::with_capacity(old.len() + def.len());
            for &c in &old {
                if c == id {
                    new.extend_from_slice(&def);
                } else {
                    new.push(c);
                }
            }
            self.def_index.remove(&old);
            if !self.def_index.contains_key(&new) {
                self.def_index.insert(new.clone(), holder);
            }
            self.words[i].as_mut().unwrap().components = new;
            affected.push(holder);
        }
        self.def_index.remove(&def);
        self.words[id.index()] = None;
        Ok(affected)
    }

    /// Replace a word's definition with another decomposition of the same
    /// surface (internal reorganization). Skipped (returning false) if the
    /// new list would duplicate another word's definition.
    pub fn set_components(&mut self, id: WordId, components: Vec<WordId>) -> Result<bool> {
        if id.is_terminal() {
            return Err(Error::TerminalDelete);
        }
        if components.len() < 2 {
            return Err(Error::SingletonDefinition);
        }
        let mut surface = Vec::new();
        for &c in &components {
            let w = self.word(c).ok_or(Error::UnknownWord(c.0))?;
            surface.extend_from_slice(&w.surface);
        }
        let old = match self.word(id) {
            Some(w) => {
                if w.surface != surface {
                    return Err(Error::BadConfig(
                        "new components do not spell the word's surface".into(),
                    ));
                }
                w.components.clone()
            }
            None => return Err(Error::UnknownWord(id.0)),
        };
        if old == components {
            return Ok(false);
        }
        match self.def_index.get(&components) {
            Some(_) => Ok(false),
            None => {
                self.def_index.remove(&old);
                self.def_index.insert(components.clone(), id);
                self.word_mut(id).unwrap().components = components;
                Ok(true)
            }
        }
    }

    /// Replace all counts and recompute probabilities and code lengths.
    /// `counts` is indexed by `WordId::index` and must cover the table.
    pub fn reestimate(&mut self, counts: &[f64]) -> Result<()> {
        if counts.len() < self.words.len() {
            return Err(Error::BadConfig("count table shorter than lexicon".into()));
        }
        let total: f64 = self
            .live_ids()
            .map(|id| counts[id.index()])
            .sum();
        if total <= 0.0 {
            return Err(Error::AllZeroCounts);
        }
        for i in 0..self.words.len() {
            if let Some(w) = self.words[i].as_mut() {
                w.count = counts[i];
            }
        }
        self.refresh_probabilities();
        Ok(())
    }

    /// Recompute p(w) = c(w)/N and codelengths from the stored counts.
    pub fn refresh_probabilities(&mut self) {
        let total: f64 = self
            .words
            .iter()
            .filter_map(|w| w.as_ref())
            .map(|w| w.count)
            .sum();
        self.total_count = total;
        for w in self.words.iter_mut().filter_map(|w| w.as_mut()) {
            if total > 0.0 && w.count > 0.0 {
                w.probability = w.count / total;
                w.codelength = -(w.probability).log2();
            } else {
                w.probability = 0.0;
                w.codelength = f64::INFINITY;
            }
        }
    }

    /// Description length of the lexicon itself: the cost of writing each
    /// nonterminal's definition as codes for its components, plus the
    /// configured structural overhead per word.
    pub fn lexicon_dl(&self) -> f64 {
        let mut bits = 0.0;
        for id in self.nonterminal_ids() {
            bits += self.word_overhead_bits;
            for &c in self.components(id) {
                bits += self.codelength(c);
            }
        }
        bits
    }

    /// Full recursive decomposition of a word, spans relative to its surface.
    pub fn expand_tree(&self, id: WordId) -> TreeNode {
        self.expand_at(id, 0)
    }

    /// Like `expand_tree` but with spans shifted by `offset` (for placing a
    /// token inside a larger stream).
    pub fn expand_tree_at(&self, id: WordId, offset: usize) -> TreeNode {
        self.expand_at(id, offset)
    }

    fn expand_at(&self, id: WordId, offset: usize) -> TreeNode {
        let w = self.word(id).expect("live word");
        let span = (offset, offset + w.surface.len());
        let mut children = Vec::with_capacity(w.components.len());
        let mut pos = offset;
        for &c in &w.components {
            let child = self.expand_at(c, pos);
            pos = child.span.1;
            children.push(child);
        }
        TreeNode { word: id, span, children }
    }

    /// Sanity check: component references form a DAG ending in terminals.
    pub fn check_dag(&self) -> bool {
        // surfaces strictly shrink along component edges, so a depth bound
        // equal to the longest surface is enough to detect cycles
        fn depth_ok(lex: &Lexicon, id: WordId, budget: usize) -> bool {
            match lex.word(id) {
                None => false,
                Some(w) if w.is_terminal() => true,
                Some(w) => {
                    if budget == 0 {
                        return false;
                    }
                    w.components.iter().all(|&c| depth_ok(lex, c, budget - 1))
                }
            }
        }
        let budget = self.max_surface_len() + 1;
        self.nonterminal_ids().all(|id| depth_ok(self, id, budget))
    }

    /// Text dump, one word per line ranked by decreasing count:
    /// `rank<TAB>count<TAB>codelength<TAB>[surface]<TAB>[decomposition]`.
    pub fn dump_text(&self) -> String {
        let mut out = String::new();
        for (rank, &id) in self.ranked_live_words().iter().enumerate() {
            let w = self.word(id).unwrap();
            let count = if w.count.fract() == 0.0 {
                format!("{:.0}", w.count)
            } else {
                format!("{:.2}", w.count)
            };
            let len = if w.codelength.is_finite() {
                format!("{:.3}", w.codelength)
            } else {
                "inf".to_string()
            };
            let surface = escape_bytes(&w.surface);
            let decomp = if w.is_terminal() {
                format!("[{surface}]")
            } else {
                let mut d = String::from("[");
                for &c in &w.components {
                    let _ = write!(d, "[{}]", escape_bytes(self.surface(c)));
                }
                d.push(']');
                d
            };
            let _ = writeln!(out, "{rank}\t{count}\t{len}\t[{surface}]\t{decomp}");
        }
        out
    }

    /// Binary serialization preserving ids, components, counts and float
    /// state exactly.
    pub fn save_binary(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(b"LEXB");
        out.push(1);
        out.extend_from_slice(&self.word_overhead_bits.to_bits().to_le_bytes());
        out.extend_from_slice(&self.total_count.to_bits().to_le_bytes());
        out.extend_from_slice(&(self.words.len() as u32).to_le_bytes());
        for w in &self.words {
            match w {
                None => out.push(0),
                Some(w) => {
                    out.push(1);
                    out.extend_from_slice(&w.count.to_bits().to_le_bytes());
                    out.extend_from_slice(&w.probability.to_bits().to_le_bytes());
                    out.extend_from_slice(&w.codelength.to_bits().to_le_bytes());
                    out.extend_from_slice(&(w.components.len() as u32).to_le_bytes());
                    for c in &w.components {
                        out.extend_from_slice(&c.0.to_le_bytes());
                    }
                }
            }
        }
        out
    }

    pub fn load_binary(data: &[u8]) -> Result<Lexicon> {
        let mut r = Cursor { data, pos: 0 };
        if r.take(4)? != b"LEXB" {
            return Err(Error::Corrupt("bad lexicon magic".into()));
        }
        if r.u8()? != 1 {
            return Err(Error::Corrupt("unsupported lexicon version".into()));
        }
        let word_overhead_bits = f64::from_bits(r.u64()?);
        let total_count = f64::from_bits(r.u64()?);
        let n = r.u32()? as usize;
        if n < TERMINAL_COUNT as usize {
            return Err(Error::Corrupt("lexicon table too small".into()));
        }
        let mut words: Vec<Option<Word>> = Vec::with_capacity(n);
        for _ in 0..n {
            if r.u8()? == 0 {
                words.push(None);
                continue;
            }
            let count = f64::from_bits(r.u64()?);
            let probability = f64::from_bits(r.u64()?);
            let codelength = f64::from_bits(r.u64()?);
            let ncomp = r.u32()? as usize;
            let mut components = Vec::with_capacity(ncomp);
            for _ in 0..ncomp {
                components.push(WordId(r.u32()?));
            }
            words.push(Some(Word {
                components,
                surface: Vec::new(),
                count,
                probability,
                codelength,
            }));
        }
        let mut lex = Lexicon {
            words,
            def_index: HashMap::new(),
            total_count,
            word_overhead_bits,
        };
        // rebuild surfaces bottom-up and validate the reference structure
        for i in 0..lex.words.len() {
            lex.rebuild_surface(WordId(i as u32), 0)?;
        }
        for i in 0..lex.words.len() {
            if let Some(w) = &lex.words[i] {
                if !w.is_terminal() {
                    lex.def_index.insert(w.components.clone(), WordId(i as u32));
                }
            }
        }
        Ok(lex)
    }

    fn rebuild_surface(&mut self, id: WordId, depth: usize) -> Result<()> {
        if depth > self.words.len() {
            return Err(Error::Corrupt("cycle in lexicon file".into()));
        }
        let w = match self.word(id) {
            None => return Ok(()),
            Some(w) => w,
        };
        if !w.surface.is_empty() {
            return Ok(());
        }
        if w.is_terminal() {
            if !id.is_terminal() {
                return Err(Error::Corrupt("nonterminal without components".into()));
            }
            self.word_mut(id).unwrap().surface = vec![id.0 as u8];
            return Ok(());
        }
        let comps = w.components.clone();
        let mut surface = Vec::new();
        for c in comps {
            if !self.contains(c) {
                return Err(Error::Corrupt(format!("dangling component {}", c.0)));
            }
            self.rebuild_surface(c, depth + 1)?;
            surface.extend_from_slice(self.surface(c));
        }
        self.word_mut(id).unwrap().surface = surface;
        Ok(())
    }
}

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon::new()
    }
}

/// A node of a recursive decomposition: the word, its byte span and its
/// component subtrees (empty for terminals).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeNode {
    pub word: WordId,
    pub span: (usize, usize),
    pub children: Vec<TreeNode>,
}

impl TreeNode {
    pub fn leaf_count(&self) -> usize {
        if self.children.is_empty() {
            1
        } else {
            self.children.iter().map(|c| c.leaf_count()).sum()
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Visit every node, parents before children.
    pub fn visit<F: FnMut(&TreeNode)>(&self, f: &mut F) {
        f(self);
        for c in &self.children {
            c.visit(f);
        }
    }
}

/// Escape a surface for text output: printable ASCII except `[ ] \` pass
/// through, everything else becomes an escape sequence.
pub fn escape_bytes(bytes: &[u8]) -> String {
    let mut out = String::new();
    for &b in bytes {
        match b {
            b'\\' => out.push_str("\\\\"),
            b'[' => out.push_str("\\["),
            b']' => out.push_str("\\]"),
            b'\n' => out.push_str("\\n"),
            b'\t' => out.push_str("\\t"),
            0x20..=0x7e => out.push(b as char),
            _ => {
                let _ = write!(out, "\\x{b:02x}");
            }
        }
    }
    out
}

/// Inverse of `escape_bytes`.
pub fn unescape_bytes(text: &str) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            if !c.is_ascii() {
                return Err(Error::Format(format!("non-ascii char {c:?} in escaped text")));
            }
            out.push(c as u8);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push(b'\\'),
            Some('[') => out.push(b'['),
            Some(']') => out.push(b']'),
            Some('n') => out.push(b'\n'),
            Some('t') => out.push(b'\t'),
            Some('x') => {
                let hi = chars.next().ok_or_else(|| Error::Format("truncated \\x escape".into()))?;
                let lo = chars.next().ok_or_else(|| Error::Format("truncated \\x escape".into()))?;
                let v = u8::from_str_radix(&format!("{hi}{lo}"), 16)
                    .map_err(|_| Error::Format("bad \\x escape".into()))?;
                out.push(v);
            }
            other => return Err(Error::Format(format!("bad escape {other:?}"))),
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::Corrupt("truncated lexicon file".into()));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
