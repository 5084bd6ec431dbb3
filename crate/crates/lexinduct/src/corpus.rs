//! Corpus loading: raw byte streams, delimiter stripping, ground-truth word
//! spans and utterance boundaries.

use crate::{ByteSpan, Error, Result};
use std::fs;
use std::path::Path;

/// What to do with delimiter bytes on load.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoadMode {
    /// Remove delimiters; true spans index into the stripped stream.
    StripDelimiters,
    /// Keep the input unmodified; true spans index into the verbatim stream.
    KeepVerbatim,
}

#[derive(Clone, Debug)]
pub struct LoadOptions {
    pub mode: LoadMode,
    pub lowercase: bool,
    pub max_bytes: Option<usize>,
    /// Byte classes treated as delimiters. Defaults to ASCII whitespace and
    /// punctuation.
    pub delimiters: [bool; 256],
    /// Byte that ends an utterance (in addition to being a delimiter, if it
    /// is one). `None` means the whole corpus is a single utterance.
    pub utterance_byte: Option<u8>,
}

impl LoadOptions {
    pub fn new(mode: LoadMode) -> Self {
        let mut delimiters = [false; 256];
        for b in 0u8..=255 {
            if b.is_ascii_whitespace() || b.is_ascii_punctuation() {
                delimiters[b as usize] = true;
            }
        }
        LoadOptions {
            mode,
            lowercase: false,
            max_bytes: None,
            delimiters,
            utterance_byte: Some(b'\n'),
        }
    }

    pub fn lowercase(mut self, yes: bool) -> Self {
        self.lowercase = yes;
        self
    }

    pub fn max_bytes(mut self, limit: Option<usize>) -> Self {
        self.max_bytes = limit;
        self
    }

    /// Replace the delimiter set with exactly the given bytes.
    pub fn delimiter_set(mut self, bytes: &[u8]) -> Self {
        self.delimiters = [false; 256];
        for &b in bytes {
            self.delimiters[b as usize] = true;
        }
        self
    }
}

/// A loaded input: terminal bytes, utterance boundaries and (when the raw
/// text had delimiters) the spans of the true words.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub bytes: Vec<u8>,
    /// Sorted indices where utterances begin; an empty list means one
    /// utterance. A leading 0 is tolerated and ignored.
    pub utterance_bounds: Vec<usize>,
    /// Non-overlapping, sorted half-open ranges of true words in `bytes`.
    /// Empty when the input had no delimiters.
    pub true_spans: Vec<ByteSpan>,
}

pub fn load_corpus(path: &Path, opts: &LoadOptions) -> Result<Corpus> {
    let raw = fs::read(path)?;
    corpus_from_bytes(&raw, opts)
}

pub fn corpus_from_bytes(raw: &[u8], opts: &LoadOptions) -> Result<Corpus> {
    if let Some(limit) = opts.max_bytes {
        if limit == 0 {
            return Err(Error::BadConfig("max_bytes must be >= 1".into()));
        }
    }
    let raw = match opts.max_bytes {
        Some(limit) if raw.len() > limit => &raw[..limit],
        _ => raw,
    };

    let mut bytes = Vec::with_capacity(raw.len());
    let mut bounds = Vec::new();
    let mut spans = Vec::new();
    let mut span_start: Option<usize> = None;
    let mut saw_delimiter = false;

    match opts.mode {
        LoadMode::StripDelimiters => {
            for &b in raw {
                let b = if opts.lowercase { b.to_ascii_lowercase() } else { b };
                if opts.delimiters[b as usize] {
                    saw_delimiter = true;
                    if let Some(s) = span_start.take() {
                        spans.push((s, bytes.len()));
                    }
                    if Some(b) == opts.utterance_byte {
                        bounds.push(bytes.len());
                    }
                } else {
                    if span_start.is_none() {
                        span_start = Some(bytes.len());
                    }
                    bytes.push(b);
                }
            }
            if let Some(s) = span_start {
                spans.push((s, bytes.len()));
            }
        }
        LoadMode::KeepVerbatim => {
            for &b in raw {
                let b = if opts.lowercase { b.to_ascii_lowercase() } else { b };
                if opts.delimiters[b as usize] {
                    saw_delimiter = true;
                    if let Some(s) = span_start.take() {
                        spans.push((s, bytes.len()));
                    }
                } else if span_start.is_none() {
                    span_start = Some(bytes.len());
                }
                bytes.push(b);
                if Some(b) == opts.utterance_byte {
                    // utterances include their terminator byte
                    bounds.push(bytes.len());
                }
            }
            if let Some(s) = span_start {
                spans.push((s, bytes.len()));
            }
        }
    }

    if bytes.is_empty() {
        return Err(Error::EmptyCorpus(match opts.mode {
            LoadMode::StripDelimiters => " after stripping delimiters",
            LoadMode::KeepVerbatim => "",
        }));
    }

    let n = bytes.len();
    bounds.retain(|&p| p > 0 && p < n);
    bounds.dedup();

    // no delimiters anywhere means no ground truth, not one giant word
    if !saw_delimiter {
        spans.clear();
    }

    Ok(Corpus {
        bytes,
        utterance_bounds: bounds,
        true_spans: spans,
    })
}

impl Corpus {
    /// A corpus over the given bytes with no ground truth and no internal
    /// utterance boundaries.
    pub fn from_raw(bytes: Vec<u8>) -> Result<Corpus> {
        if bytes.is_empty() {
            return Err(Error::EmptyCorpus(""));
        }
        Ok(Corpus {
            bytes,
            utterance_bounds: Vec::new(),
            true_spans: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    /// Utterance ranges partitioning `bytes`, split at `utterance_bounds`.
    pub fn utterances(&self) -> Vec<ByteSpan> {
        let n = self.bytes.len();
        let mut out = Vec::with_capacity(self.utterance_bounds.len() + 1);
        let mut start = 0;
        for &b in &self.utterance_bounds {
            if b > start && b < n {
                out.push((start, b));
                start = b;
            }
        }
        out.push((start, n));
        out
    }

    /// Attach externally supplied true-word spans (e.g. a reference
    /// segmentation for an input without delimiters), validating ordering
    /// and bounds.
    pub fn with_true_spans(mut self, spans: Vec<ByteSpan>) -> Result<Corpus> {
        let mut prev_end = 0;
        for &(s, e) in &spans {
            if s >= e || e > self.bytes.len() {
                return Err(Error::BadSpans(format!("span ({s},{e}) out of bounds")));
            }
            if s < prev_end {
                return Err(Error::BadSpans(format!(
                    "span ({s},{e}) overlaps or is out of order"
                )));
            }
            prev_end = e;
        }
        self.true_spans = spans;
        Ok(self)
    }
}

/// Read a sidecar ground-truth file: one `start<TAB>end` pair per line.
pub fn load_spans_file(path: &Path) -> Result<Vec<ByteSpan>> {
    let text = fs::read_to_string(path)?;
    parse_spans(&text)
}

pub fn parse_spans(text: &str) -> Result<Vec<ByteSpan>> {
    let mut spans = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let parse = |field: Option<&str>| -> Result<usize> {
            field
                .and_then(|f| f.trim().parse().ok())
                .ok_or_else(|| Error::BadSpans(format!("line {}: expected start<TAB>end", lineno + 1)))
        };
        let start = parse(parts.next())?;
        let end = parse(parts.next())?;
        spans.push((start, end));
    }
    Ok(spans)
}
