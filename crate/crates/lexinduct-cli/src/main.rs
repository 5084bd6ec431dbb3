//! Command-line interface binding the lexicon-induction engine into
//! reproducible experiments: induce, segment, eval, compress, decompress,
//! scan, synth, meaning-train, meaning-eval, rerun.

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use lexinduct::codec::{decode, encode, scan_token_offsets, CodecOptions};
use lexinduct::corpus::{load_corpus, load_spans_file, Corpus, LoadMode, LoadOptions};
use lexinduct::lexicon::Lexicon;
use lexinduct::meaning::{
    evaluate as meaning_evaluate, synth_corpus, train_joint, MeaningConfig, MeaningCorpus,
    MeaningLexicon,
};
use lexinduct::metrics::evaluate_spans;
use lexinduct::parser::{parse_corpus, render_flat_text, render_tree_text, tree_text_spans};
use lexinduct::search::{run_induction, SearchConfig};
use lexinduct::synth::gen_text;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(
    name = "lexinduct",
    version,
    about = "Hierarchical lexicon induction, segmentation and compression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Learn a lexicon from a byte stream by description-length search.
    Induce(InduceArgs),
    /// Segment an input with a learned lexicon, writing bracketed trees.
    Segment(SegmentArgs),
    /// Score a tree file against ground-truth word spans.
    Eval(EvalArgs),
    /// Compress a file (learning a lexicon on the fly).
    Compress(CompressArgs),
    /// Decompress a file produced by `compress`.
    Decompress(DecompressArgs),
    /// Find a word's code in a compressed file without decompressing it.
    Scan(ScanArgs),
    /// Generate deterministic synthetic corpora.
    Synth(SynthArgs),
    /// Train a meaning-augmented lexicon on a paired corpus.
    MeaningTrain(MeaningTrainArgs),
    /// Evaluate a meaning lexicon on a paired corpus.
    MeaningEval(MeaningEvalArgs),
    /// Re-execute a recorded run from its manifest.
    Rerun(RerunArgs),
}

#[derive(Args, Debug)]
struct CorpusFlags {
    /// Strip delimiters (whitespace + punctuation) and record true spans.
    #[arg(long, conflicts_with = "verbatim")]
    strip: bool,
    /// Keep the input verbatim (default).
    #[arg(long)]
    verbatim: bool,
    /// Lowercase ASCII before anything else.
    #[arg(long)]
    lower: bool,
    /// Read at most this many input bytes.
    #[arg(long)]
    max_bytes: Option<usize>,
}

impl CorpusFlags {
    fn options(&self) -> LoadOptions {
        let mode = if self.strip {
            LoadMode::StripDelimiters
        } else {
            LoadMode::KeepVerbatim
        };
        LoadOptions::new(mode)
            .lowercase(self.lower)
            .max_bytes(self.max_bytes)
    }
}

/// Optional JSON config file; any field a flag also sets. Flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    iters: Option<usize>,
    inner: Option<usize>,
    min_pair: Option<f64>,
    max_candidates: Option<usize>,
    word_overhead: Option<f64>,
    min_code_bits: Option<f64>,
    max_word_len: Option<usize>,
    threads: Option<usize>,
    summed: Option<bool>,
    symbol_cost: Option<f64>,
    text_iters: Option<usize>,
    joint_iters: Option<usize>,
    polish_max_words: Option<usize>,
}

fn read_file_config(path: &Option<PathBuf>) -> anyhow::Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?)
        }
    }
}

#[derive(Args, Debug)]
struct SearchFlags {
    /// Optional JSON config file; explicit flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Outer iterations of the search loop (default 10).
    #[arg(long)]
    iters: Option<usize>,
    /// EM iterations inside each half of the loop (default 2).
    #[arg(long)]
    inner: Option<usize>,
    /// Minimum pair count for a candidate word (default 2).
    #[arg(long)]
    min_pair: Option<f64>,
    /// Cap on candidates per round (default unbounded).
    #[arg(long)]
    max_candidates: Option<usize>,
    /// Structural bits charged per word definition (default 0).
    #[arg(long)]
    word_overhead: Option<f64>,
    /// Per-token cost floor in bits; 1.0 models the real code channel
    /// (default 0).
    #[arg(long)]
    min_code_bits: Option<f64>,
    /// Longest indexable word surface (default 64).
    #[arg(long)]
    max_word_len: Option<usize>,
    /// Parser worker threads, 1 = fully sequential (default 1).
    #[arg(long)]
    threads: Option<usize>,
    /// Use forward-backward expected counts instead of Viterbi counts.
    #[arg(long)]
    summed: bool,
}

impl SearchFlags {
    fn config(&self) -> anyhow::Result<SearchConfig> {
        let file = read_file_config(&self.config)?;
        let base = SearchConfig::default();
        Ok(SearchConfig {
            outer_iterations: self.iters.or(file.iters).unwrap_or(base.outer_iterations),
            inner_em_iterations: self.inner.or(file.inner).unwrap_or(base.inner_em_iterations),
            add_candidate_min_pair_count: self
                .min_pair
                .or(file.min_pair)
                .unwrap_or(base.add_candidate_min_pair_count),
            max_candidates_per_round: self.max_candidates.or(file.max_candidates),
            word_overhead_bits: self
                .word_overhead
                .or(file.word_overhead)
                .unwrap_or(base.word_overhead_bits),
            min_code_bits: self
                .min_code_bits
                .or(file.min_code_bits)
                .unwrap_or(base.min_code_bits),
            max_word_len: self.max_word_len.or(file.max_word_len).unwrap_or(base.max_word_len),
            threads: self.threads.or(file.threads).unwrap_or(base.threads),
            summed_counts: self.summed || file.summed.unwrap_or(false),
        })
    }
}

#[derive(Args, Debug)]
struct InduceArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    corpus: CorpusFlags,
    #[command(flatten)]
    search: SearchFlags,
    /// Output prefix: writes <prefix>.lex, <prefix>.lex.txt,
    /// <prefix>.history.jsonl and <prefix>.manifest.json.
    #[arg(long)]
    out_prefix: PathBuf,
}

#[derive(Args, Debug)]
struct SegmentArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    lexicon: PathBuf,
    #[command(flatten)]
    corpus: CorpusFlags,
    /// Print top-level tokens separated by spaces instead of trees.
    #[arg(long)]
    flat: bool,
    #[arg(long, default_value_t = 64)]
    max_word_len: usize,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Tree output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the corpus's true spans (global offsets, start<TAB>end).
    #[arg(long)]
    truth_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Bracketed tree file, one utterance per line.
    #[arg(long)]
    trees: PathBuf,
    /// Ground-truth spans, `start<TAB>end` per line, global offsets.
    #[arg(long)]
    truth: PathBuf,
    /// Write the report as a JSON line here as well.
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompressArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Optional JSON config file; explicit flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Search iterations (default 10).
    #[arg(long)]
    iters: Option<usize>,
    /// Parser worker threads (default 1).
    #[arg(long)]
    threads: Option<usize>,
    /// Longest indexable word surface (default 64).
    #[arg(long)]
    max_word_len: Option<usize>,
    /// Write the bit-accounting report as JSON here as well.
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DecompressArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ScanArgs {
    /// Compressed file to scan.
    #[arg(long)]
    file: PathBuf,
    /// Word surface to look for (escaped text form).
    #[arg(long)]
    surface: String,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// `text` for a delimiter-ful stream, `paired` for text+meanings.
    #[arg(long)]
    mode: String,
    #[arg(long, default_value_t = 500)]
    vocab: usize,
    /// Utterance count (paired mode).
    #[arg(long, default_value_t = 10_000)]
    utterances: usize,
    /// Minimum byte size (text mode).
    #[arg(long, default_value_t = 500_000)]
    bytes: usize,
    /// 1 candidate meaning per utterance, or 3 with distractors.
    #[arg(long, default_value_t = 1)]
    ambiguity: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct MeaningTrainArgs {
    /// Paired corpus: `text<TAB>sym,sym[<TAB>...]` per line.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out_prefix: PathBuf,
    /// Optional JSON config file; explicit flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Text-only iterations before joint training (default 8).
    #[arg(long)]
    text_iters: Option<usize>,
    /// Joint text+meaning iterations (default 8).
    #[arg(long)]
    joint_iters: Option<usize>,
    /// Bits per written meaning symbol (default 10).
    #[arg(long)]
    symbol_cost: Option<f64>,
    /// Exhaustive relocation polish cap (default 40 words).
    #[arg(long)]
    polish_max_words: Option<usize>,
    /// Parser worker threads (default 1).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct MeaningEvalArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    lexicon: PathBuf,
    /// Identification pool: meanings of this many preceding utterances.
    #[arg(long, default_value_t = 20)]
    window: usize,
    #[arg(long, default_value_t = 10.0)]
    symbol_cost: f64,
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RerunArgs {
    #[arg(long)]
    manifest: PathBuf,
}

/// Everything needed to reproduce a run byte-for-byte.
#[derive(Serialize, Deserialize)]
struct RunManifest {
    command: Vec<String>,
    input_hashes: Vec<(String, String)>,
    seed: Option<u64>,
    outputs: Vec<String>,
    timing_ms: u128,
}

fn fnv64(data: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in data {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn hash_file(path: &Path) -> anyhow::Result<String> {
    let data = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(format!("{:016x}", fnv64(&data)))
}

fn write_manifest(
    args: &[String],
    inputs: &[&Path],
    seed: Option<u64>,
    outputs: &[&Path],
    started: Instant,
    path: &Path,
) -> anyhow::Result<()> {
    let manifest = RunManifest {
        command: args.to_vec(),
        input_hashes: inputs
            .iter()
            .map(|p| Ok((p.display().to_string(), hash_file(p)?)))
            .collect::<anyhow::Result<Vec<_>>>()?,
        seed,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        timing_ms: started.elapsed().as_millis(),
    };
    fs::write(path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

fn load_lexicon(path: &Path) -> anyhow::Result<Lexicon> {
    let data = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Lexicon::load_binary(&data)?)
}

fn run(args: Vec<String>) -> anyhow::Result<()> {
    let cli = Cli::parse_from(std::iter::once("lexinduct".to_string()).chain(args.iter().cloned()));
    let started = Instant::now();
    match cli.command {
        Command::Induce(a) => {
            let corpus = load_corpus(&a.input, &a.corpus.options())?;
            let cfg = a.search.config()?;
            let (lexicon, history) = run_induction(&corpus, &cfg)?;

            let lex_path = a.out_prefix.with_extension("lex");
            let dump_path = a.out_prefix.with_extension("lex.txt");
            let hist_path = a.out_prefix.with_extension("history.jsonl");
            fs::write(&lex_path, lexicon.save_binary())?;
            fs::write(&dump_path, lexicon.dump_text())?;
            let mut hist = String::new();
            for record in &history {
                hist.push_str(&serde_json::to_string(record)?);
                hist.push('\n');
            }
            fs::write(&hist_path, hist)?;
            let last = history.last().unwrap();
            println!(
                "{} words ({} composed), {:.3} bits/char",
                last.live_words, last.nonterminals, last.bits_per_char
            );
            write_manifest(
                &args,
                &[&a.input],
                None,
                &[&lex_path, &dump_path, &hist_path],
                started,
                &a.out_prefix.with_extension("manifest.json"),
            )?;
        }
        Command::Segment(a) => {
            let corpus = load_corpus(&a.input, &a.corpus.options())?;
            let lexicon = load_lexicon(&a.lexicon)?;
            let pcfg = lexinduct::parser::ParserConfig {
                max_word_len: a.max_word_len,
                threads: a.threads,
                summed_counts: false,
            };
            let outcome = parse_corpus(&lexicon, &corpus, &pcfg);
            let mut out = String::new();
            for parse in &outcome.parses {
                if a.flat {
                    out.push_str(&render_flat_text(&lexicon, parse));
                } else {
                    out.push_str(&render_tree_text(&lexicon, parse));
                }
                out.push('\n');
            }
            match &a.out {
                Some(p) => fs::write(p, out)?,
                None => print!("{out}"),
            }
            if let Some(p) = &a.truth_out {
                let mut t = String::new();
                for (s, e) in &corpus.true_spans {
                    t.push_str(&format!("{s}\t{e}\n"));
                }
                fs::write(p, t)?;
            }
            if let Some(first) = a.out.as_ref() {
                let mut outputs: Vec<&Path> = vec![first];
                if let Some(p) = &a.truth_out {
                    outputs.push(p);
                }
                write_manifest(
                    &args,
                    &[&a.input, &a.lexicon],
                    None,
                    &outputs,
                    started,
                    &first.with_extension("manifest.json"),
                )?;
            }
        }
        Command::Eval(a) => {
            let text = fs::read_to_string(&a.trees)
                .with_context(|| format!("reading {}", a.trees.display()))?;
            let mut spans = Vec::new();
            let mut node_count = 0;
            let mut offset = 0usize;
            for line in text.lines() {
                let (line_spans, len) = tree_text_spans(line)?;
                node_count += line_spans.len();
                spans.extend(line_spans.iter().map(|&(s, e)| (s + offset, e + offset)));
                offset += len;
            }
            let truth = load_spans_file(&a.truth)?;
            if truth.is_empty() {
                bail!("truth file has no spans");
            }
            let report = evaluate_spans(&spans, node_count, &truth)?;
            println!("{report}");
            if let Some(p) = &a.json_out {
                fs::write(p, format!("{}\n", serde_json::to_string(&report)?))?;
            }
        }
        Command::Compress(a) => {
            let raw =
                fs::read(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
            let mut corpus = Corpus::from_raw(raw)?;
            // utterance bounds at newlines keep parse memory small; tokens
            // never cross them, so nothing extra goes into the file
            let n = corpus.bytes.len();
            corpus.utterance_bounds = corpus
                .bytes
                .iter()
                .enumerate()
                .filter(|&(i, &b)| b == b'\n' && i + 1 < n)
                .map(|(i, _)| i + 1)
                .collect();
            let file_cfg = read_file_config(&a.config)?;
            let max_word_len = a.max_word_len.or(file_cfg.max_word_len).unwrap_or(64);
            let cfg = SearchConfig {
                outer_iterations: a.iters.or(file_cfg.iters).unwrap_or(10),
                min_code_bits: file_cfg.min_code_bits.unwrap_or(1.0),
                max_word_len,
                threads: a.threads.or(file_cfg.threads).unwrap_or(1),
                ..SearchConfig::default()
            };
            let (lexicon, _) = run_induction(&corpus, &cfg)?;
            let opts = CodecOptions {
                max_word_len,
                ..CodecOptions::default()
            };
            let (file, report) = encode(&corpus, &lexicon, &opts)?;
            fs::write(&a.out, &file)?;
            println!(
                "{} -> {} bytes, {:.3} bits/char realized ({:.3} idealized), {} words",
                report.orig_len,
                file.len(),
                report.bits_per_char,
                report.idealized_bits_per_char,
                report.word_count
            );
            if let Some(p) = &a.json_out {
                fs::write(p, format!("{}\n", serde_json::to_string(&report)?))?;
            }
            write_manifest(
                &args,
                &[&a.input],
                None,
                &[&a.out],
                started,
                &a.out.with_extension("manifest.json"),
            )?;
        }
        Command::Decompress(a) => {
            let data =
                fs::read(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
            let bytes = decode(&data)?;
            fs::write(&a.out, &bytes)?;
            println!("{} -> {} bytes", data.len(), bytes.len());
        }
        Command::Scan(a) => {
            let data =
                fs::read(&a.file).with_context(|| format!("reading {}", a.file.display()))?;
            let surface = lexinduct::lexicon::unescape_bytes(&a.surface)?;
            let hits = scan_token_offsets(&data, &surface)?;
            println!("{} occurrences", hits.len());
            for h in hits {
                println!("bit {h}");
            }
        }
        Command::Synth(a) => {
            match a.mode.as_str() {
                "text" => {
                    let text = gen_text(a.vocab, a.bytes, a.seed);
                    fs::write(&a.out, text)?;
                }
                "paired" => {
                    let corpus = synth_corpus(a.vocab, a.utterances, a.ambiguity, a.seed)?;
                    fs::write(&a.out, corpus.to_text())?;
                }
                other => bail!("unknown synth mode {other:?} (expected text|paired)"),
            }
            write_manifest(
                &args,
                &[],
                Some(a.seed),
                &[&a.out],
                started,
                &a.out.with_extension("manifest.json"),
            )?;
        }
        Command::MeaningTrain(a) => {
            let text = fs::read_to_string(&a.input)
                .with_context(|| format!("reading {}", a.input.display()))?;
            let corpus = MeaningCorpus::from_text(&text)?;
            let file_cfg = read_file_config(&a.config)?;
            let base = MeaningConfig::default();
            let cfg = MeaningConfig {
                symbol_cost: a.symbol_cost.or(file_cfg.symbol_cost).unwrap_or(base.symbol_cost),
                text_iterations: a
                    .text_iters
                    .or(file_cfg.text_iters)
                    .unwrap_or(base.text_iterations),
                joint_iterations: a
                    .joint_iters
                    .or(file_cfg.joint_iters)
                    .unwrap_or(base.joint_iterations),
                polish_max_words: a
                    .polish_max_words
                    .or(file_cfg.polish_max_words)
                    .unwrap_or(base.polish_max_words),
                threads: a.threads.or(file_cfg.threads).unwrap_or(base.threads),
                ..MeaningConfig::default()
            };
            let (ml, report) = train_joint(&corpus, &cfg)?;
            let mlex_path = a.out_prefix.with_extension("mlex");
            let report_path = a.out_prefix.with_extension("train.json");
            fs::write(&mlex_path, ml.save_binary())?;
            fs::write(&report_path, serde_json::to_string_pretty(&report)?)?;
            let last = report.joint_history.last();
            println!(
                "{} composed words, {} perturbations, joint dl {:.0} bits",
                ml.lexicon.nonterminal_count(),
                ml.perturbation_count(),
                last.map(|r| r.joint_dl_bits).unwrap_or(f64::NAN)
            );
            write_manifest(
                &args,
                &[&a.input],
                None,
                &[&mlex_path, &report_path],
                started,
                &a.out_prefix.with_extension("manifest.json"),
            )?;
        }
        Command::MeaningEval(a) => {
            let text = fs::read_to_string(&a.input)
                .with_context(|| format!("reading {}", a.input.display()))?;
            let corpus = MeaningCorpus::from_text(&text)?;
            let data = fs::read(&a.lexicon)?;
            let ml = MeaningLexicon::load_binary(&data)?;
            let cfg = MeaningConfig {
                symbol_cost: a.symbol_cost,
                ..MeaningConfig::default()
            };
            let report = meaning_evaluate(&ml, &corpus, &cfg, a.window);
            println!("{report}");
            if let Some(p) = &a.json_out {
                fs::write(p, format!("{}\n", serde_json::to_string(&report)?))?;
            }
        }
        Command::Rerun(a) => {
            let data = fs::read_to_string(&a.manifest)
                .with_context(|| format!("reading {}", a.manifest.display()))?;
            let manifest: RunManifest = serde_json::from_str(&data)?;
            if manifest.command.first().map(String::as_str) == Some("rerun") {
                bail!("manifest records a rerun; refusing to recurse");
            }
            return run(manifest.command);
        }
    }
    Ok(())
}

/// Exit codes: 0 success, 1 usage, 2 data error.
fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if let Err(e) =
        Cli::try_parse_from(std::iter::once("lexinduct".to_string()).chain(args.iter().cloned()))
    {
        use clap::error::ErrorKind;
        let code = match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
            _ => 1,
        };
        let _ = e.print();
        std::process::exit(code);
    }
    if let Err(e) = run(args) {
        eprintln!("error: {e:#}");
        std::process::exit(2);
    }
}
