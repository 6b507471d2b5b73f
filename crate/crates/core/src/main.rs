use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;

use clinote_core::adapters::{
    dequantize, full_rank_problem, lora_param_stats, quantize_blockwise, rank_one_problem, train_lora_toy,
    QuantScheme, QuantStats, TrainConfig,
};
use clinote_core::corpus::{corpus_stats, load_corpus, validate_corpus, Corpus, Split};
use clinote_core::dialogue::Tokenizer;
use clinote_core::instruct::{build_instruction_record, records_to_jsonl, InstructionTemplate, DEFAULT_INSTRUCTION};
use clinote_core::metrics::{read_emb_jsonl, score_corpus, Metric, MetricConfig, ScoreReport};
use clinote_core::report::{
    parse_rows_csv, parse_rows_json, render_leaderboard, render_stats_table, rows_from_reports, Format, LeaderboardRow,
};
use clinote_core::Error;

/// Clinical dialogue-to-note pipeline: corpus tooling, instruction records,
/// summary metrics and adapter numerics.
#[derive(Parser)]
#[command(name = "clinote", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a corpus directory and emit its pairs as JSON lines.
    Ingest {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Per-split corpus statistics table.
    Stats {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// `whitespace` or `subword:<vocabfile>`
        #[arg(long, default_value = "whitespace")]
        tokens: String,
        #[arg(long, default_value = "md")]
        format: Format,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Check a corpus for duplicate ids, empty texts, unparsable dialogues
    /// and unsectioned notes. Exits 1 when problems are found.
    Validate {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Build instruction-tuning records (JSON lines).
    BuildInstruct {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// File holding a custom instruction template
        #[arg(long)]
        template: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Score candidate notes against references.
    Score {
        /// JSON lines of {"id", "text"} (or {"id", "output"})
        #[arg(long)]
        candidates: PathBuf,
        /// JSON lines of {"id", "text"} (or {"id", "output"})
        #[arg(long)]
        references: PathBuf,
        /// Comma list of rouge1, rouge2, rougeLsum, bertscore
        #[arg(long, value_delimiter = ',')]
        metrics: Option<Vec<Metric>>,
        /// JSON metric config (metrics, stemming, stopwords, idf)
        #[arg(long)]
        config: Option<PathBuf>,
        /// EMB-JSONL token embeddings, required for bertscore
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Name recorded in the report
        #[arg(long, default_value = "system")]
        system: String,
        #[command(flatten)]
        jobs: JobsArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Render a leaderboard from score reports (.json), row arrays (.json)
    /// or row tables (.csv).
    Leaderboard {
        /// Input files; may be repeated
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "md")]
        format: Format,
        /// Column to sort by (descending)
        #[arg(long, default_value = "rouge1")]
        sort: String,
        #[command(flatten)]
        jobs: JobsArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Train a toy low-rank adapter and report its loss curve.
    LoraDemo {
        #[arg(long, default_value_t = 8)]
        d: usize,
        #[arg(long, default_value_t = 8)]
        k: usize,
        #[arg(long, default_value_t = TrainConfig::default().rank)]
        rank: usize,
        #[arg(long, default_value_t = TrainConfig::default().alpha)]
        alpha: f64,
        #[arg(long, default_value_t = TrainConfig::default().steps)]
        steps: usize,
        #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
        lr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use a dense random discrepancy instead of a rank-one one
        #[arg(long)]
        full_rank: bool,
        /// Include every per-step loss
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Quantize values blockwise to 4 bits and report reconstruction error.
    QuantDemo {
        #[arg(long, default_value = "nf4")]
        scheme: QuantScheme,
        #[arg(long, default_value_t = 64)]
        block_size: usize,
        /// Text file with one real value per line
        #[arg(long, conflicts_with = "gaussian", required_unless_present = "gaussian")]
        input: Option<PathBuf>,
        /// Draw this many seeded standard-normal values instead of reading a file
        #[arg(long)]
        gaussian: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args)]
struct CorpusArgs {
    /// Corpus root holding <split>/<id>.dialogue.txt and <split>/<id>.note.txt
    #[arg(long)]
    corpus: PathBuf,
    /// JSON list of {"id", "split"} overriding directory splits
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Keep only this split
    #[arg(long)]
    split: Option<Split>,
}

impl CorpusArgs {
    fn load(&self) -> clinote_core::Result<Corpus> {
        let corpus = load_corpus(&self.corpus, self.manifest.as_deref())?;
        Ok(match self.split {
            Some(s) => corpus.filter_split(s),
            None => corpus,
        })
    }
}

#[derive(Args)]
struct OutArgs {
    /// Write output here (atomically) instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

impl OutArgs {
    fn emit(&self, text: &str) -> anyhow::Result<()> {
        match &self.out {
            Some(path) => clinote_core::io::write_atomic(path, text.as_bytes())?,
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(text.as_bytes())?;
                stdout.flush()?;
            }
        }
        Ok(())
    }
}

#[derive(Args)]
struct JobsArgs {
    /// Worker threads (0 = all cores); output does not depend on it
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

/// Failure caused by the data rather than the invocation.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct DataProblem(String);

#[derive(Deserialize)]
struct TextLine {
    id: String,
    #[serde(alias = "output")]
    text: String,
}

fn read_texts(path: &Path) -> anyhow::Result<BTreeMap<String, String>> {
    let body = clinote_core::io::read_to_string(path)?;
    let mut out = BTreeMap::new();
    for (i, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: TextLine = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if out.insert(rec.id.clone(), rec.text).is_some() {
            bail!(DataProblem(format!("{}:{}: duplicate id `{}`", path.display(), i + 1, rec.id)));
        }
    }
    Ok(out)
}

fn load_rows(path: &Path) -> anyhow::Result<Vec<LeaderboardRow>> {
    let text = clinote_core::io::read_to_string(path)?;
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let rows = if is_csv {
        parse_rows_csv(&text)
    } else {
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::Parse { path: path.to_path_buf(), line: e.line(), message: e.to_string() })?;
        if value.is_object() {
            let report: ScoreReport = serde_json::from_value(value)
                .map_err(|e| Error::InvalidArgument(format!("{}: not a score report: {e}", path.display())))?;
            Ok(rows_from_reports(&[report]))
        } else {
            parse_rows_json(&text)
        }
    };
    rows.with_context(|| format!("reading {}", path.display()))
}

fn read_values(path: &Path) -> anyhow::Result<Vec<f64>> {
    let text = clinote_core::io::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<f64>().map_err(|e| {
                Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("`{}`: {e}", l.trim()),
                }
                .into()
            })
        })
        .collect()
}

fn to_json(value: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Ingest { corpus, out } => {
            let corpus = corpus.load()?;
            let mut text = String::new();
            for pair in corpus.pairs() {
                text.push_str(&serde_json::to_string(pair)?);
                text.push('\n');
            }
            out.emit(&text)
        }
        Command::Stats { corpus, tokens, format, out } => {
            let tokenizer = Tokenizer::from_spec(&tokens)?;
            let corpus = corpus.load()?;
            let stats = corpus_stats(&corpus, &tokenizer)?;
            out.emit(&render_stats_table(&stats, format)?)
        }
        Command::Validate { corpus, out } => {
            let corpus = corpus.load()?;
            let report = validate_corpus(corpus.pairs());
            out.emit(&to_json(&report))?;
            if !report.is_clean() {
                bail!(DataProblem(format!(
                    "corpus has problems: {} duplicate ids, {} empty texts, {} unparsable dialogues, {} unsectioned notes",
                    report.duplicate_ids.len(),
                    report.empty_texts.len(),
                    report.dialogue_errors.len(),
                    report.unsectioned_notes.len()
                )));
            }
            Ok(())
        }
        Command::BuildInstruct { corpus, template, out } => {
            let template = match template {
                Some(path) => InstructionTemplate::load(&path)?,
                None => InstructionTemplate::new(DEFAULT_INSTRUCTION)?,
            };
            let corpus = corpus.load()?;
            let records = corpus
                .pairs()
                .iter()
                .map(|p| build_instruction_record(p, &template))
                .collect::<clinote_core::Result<Vec<_>>>()?;
            out.emit(&records_to_jsonl(&records))
        }
        Command::Score {
            candidates,
            references,
            metrics,
            config,
            embeddings,
            system,
            jobs,
            out,
        } => {
            let mut cfg = match config {
                Some(path) => MetricConfig::load(&path)?,
                None => MetricConfig::default(),
            };
            if let Some(m) = metrics {
                cfg.metrics = m;
            }
            let cands = read_texts(&candidates)?;
            let refs = read_texts(&references)?;
            let emb = embeddings.as_deref().map(read_emb_jsonl).transpose()?;
            if let Some(set) = &emb {
                for w in &set.warnings {
                    eprintln!("warning: {w}");
                }
            }
            let report = score_corpus(&system, &cands, &refs, &cfg, emb.as_ref(), jobs.jobs)?;
            out.emit(&to_json(&report))
        }
        Command::Leaderboard { inputs, format, sort, jobs, out } => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.jobs).build()?;
            let parts = pool.install(|| inputs.par_iter().map(|p| load_rows(p)).collect::<anyhow::Result<Vec<_>>>())?;
            let rows = parts.into_iter().flatten().collect();
            out.emit(&render_leaderboard(rows, format, &sort)?)
        }
        Command::LoraDemo {
            d,
            k,
            rank,
            alpha,
            steps,
            lr,
            seed,
            full_rank,
            trace,
            out,
        } => {
            let config = TrainConfig { rank, alpha, steps, learning_rate: lr, seed };
            let params = lora_param_stats(d, k, rank)?;
            let (base, target) = if full_rank {
                full_rank_problem(d, k, seed)
            } else {
                rank_one_problem(d, k, seed)
            };
            let run = train_lora_toy(&base, &target, &config)?;
            let mut report = json!({
                "d": d,
                "k": k,
                "config": config,
                "discrepancy": if full_rank { "full_rank" } else { "rank_one" },
                "param_stats": params,
                "initial_loss": run.initial_loss,
                "step1_loss": run.losses[0],
                "final_loss": run.final_loss(),
                "final_over_step1": run.final_loss() / run.losses[0],
            });
            if trace {
                report["losses"] = json!(run.losses);
            }
            out.emit(&to_json(&report))
        }
        Command::QuantDemo {
            scheme,
            block_size,
            input,
            gaussian,
            seed,
            out,
        } => {
            let values = match (input, gaussian) {
                (Some(path), _) => read_values(&path)?,
                (None, Some(n)) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
                }
                (None, None) => unreachable!("clap requires --input or --gaussian"),
            };
            let q = quantize_blockwise(&values, block_size, scheme)?;
            let stats = QuantStats::measure(&values, &dequantize(&q)?);
            out.emit(&to_json(&json!({
                "scheme": scheme,
                "block_size": block_size,
                "num_values": values.len(),
                "mse": stats.mse,
                "max_abs_error": stats.max_abs_error,
            })))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_usage() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints --help / --version to stdout with exit 0, errors with 2
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
