//! Command-line front end. Every command reads files or JSONL and writes
//! JSON to stdout (or `--output`).

mod config;

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use sheetqa::answer::{score_dataset, MatchMode, ScoreRecord, Task, Variant};
use sheetqa::formula::ExecReport;
use sheetqa::llm::{
    annotate_cot, annotate_direct, infer_one, AnnotateConfig, AnnotationTask, CharTokenizer, EndpointConfig,
    FormulaTokenizer, HttpTransport, InferConfig, RuleTransport, Sampler, Tokenizer, Transport,
};
use sheetqa::sql::{convert_and_simplify, ColumnMap};
use sheetqa::table::{load_table, ParseOptions, Table};
use sheetqa::vote::{collect_candidates, vote_with, Mode, TieRule};

use config::{PipelineConfig, TokenizerKind};

/// Bad arguments or input shape; exits with status 1.
#[derive(Debug)]
pub struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

#[derive(Debug, Parser)]
#[command(name = "sheetqa", version, about = "Table QA with spreadsheet formulas and mixed self-consistency")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Records processed in parallel.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Base sampling seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write results here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct EndpointArgs {
    /// Chat-completions base URL.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// JSON rules file for an offline mock endpoint.
    #[arg(long)]
    mock: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a formula against a table.
    Exec {
        #[arg(long, required_unless_present = "input")]
        table: Option<PathBuf>,
        #[arg(long, required_unless_present = "input")]
        formula: Option<String>,
        /// JSONL of {table_path, formula}.
        #[arg(long, conflicts_with_all = ["table", "formula"])]
        input: Option<PathBuf>,
        #[arg(long)]
        header_rows: Option<usize>,
    },
    /// Translate SQL into a spreadsheet formula.
    Convert {
        #[arg(long, required_unless_present = "input")]
        sql: Option<String>,
        /// Column map as a JSON file or inline JSON.
        #[arg(long, required_unless_present = "input")]
        map: Option<String>,
        /// Table used to simplify single-row lookups.
        #[arg(long)]
        table: Option<PathBuf>,
        /// JSONL of {sql, column_map, table_path}.
        #[arg(long, conflicts_with_all = ["sql", "map"])]
        input: Option<PathBuf>,
    },
    /// Score predictions against gold answers.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, value_enum, default_value = "qa")]
        task: TaskArg,
        /// Compare multi-part answers in order.
        #[arg(long)]
        ordered: bool,
        /// Include per-record flags.
        #[arg(long)]
        per_record: bool,
    },
    /// Majority vote over formula and direct-answer candidates.
    Vote {
        /// JSONL of {mode, output}.
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        table: PathBuf,
        #[arg(long, value_enum)]
        tie_rule: Option<TieArg>,
        /// Print the whole outcome as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Build verified formula or reasoning annotations.
    Annotate {
        /// JSONL of {id, question, title, table_path, gold, mode}.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "formula")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "direct")]
        variant: VariantArg,
        #[arg(long, value_enum)]
        tokenizer: Option<TokenizerKind>,
        #[command(flatten)]
        endpoint: EndpointArgs,
    },
    /// Generate candidates in both modes and vote.
    Infer {
        /// JSONL of {id, question, title, table_path, gold?}.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        n_formula: Option<usize>,
        #[arg(long)]
        n_dp: Option<usize>,
        #[arg(long, value_enum)]
        variant: Option<VariantArg>,
        #[arg(long, value_enum)]
        tie_rule: Option<TieArg>,
        #[arg(long)]
        temperature: Option<f64>,
        /// Include every candidate in the output.
        #[arg(long)]
        candidates: bool,
        #[command(flatten)]
        endpoint: EndpointArgs,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum TaskArg {
    Qa,
    Fact,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    Formula,
    Dp,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Formula => Mode::Formula,
            ModeArg::Dp => Mode::Dp,
        }
    }
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum VariantArg {
    #[value(alias = "fast")]
    Direct,
    Cot,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Direct => Variant::Direct,
            VariantArg::Cot => Variant::Cot,
        }
    }
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum TieArg {
    FormulaFirst,
    InputOrder,
}

impl From<TieArg> for TieRule {
    fn from(t: TieArg) -> TieRule {
        match t {
            TieArg::FormulaFirst => TieRule::FormulaFirst,
            TieArg::InputOrder => TieRule::InputOrder,
        }
    }
}

/// Parse `argv` (including the program name), run, and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                1
            } else {
                2
            }
        }
    }
}

struct Runner {
    config: PipelineConfig,
    jobs: usize,
    seed: Option<u64>,
    output: Option<PathBuf>,
}

impl Runner {
    fn writer(&self) -> anyhow::Result<Box<dyn Write>> {
        match &self.output {
            Some(p) => {
                let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
                Ok(Box::new(BufWriter::new(f)))
            }
            None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        }
    }

    fn parallel<T: Sync, R: Send>(&self, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> anyhow::Result<Vec<R>> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(self.jobs).build()?;
        Ok(pool.install(|| items.par_iter().map(f).collect()))
    }

    fn table_options(&self, title: Option<&str>, header_rows: Option<usize>) -> ParseOptions {
        ParseOptions {
            title: title.map(str::to_owned),
            header_rows: header_rows.or(self.config.tables.header_rows),
            data_rows: None,
        }
    }

    fn sampler(&self, args: &EndpointArgs) -> anyhow::Result<Sampler> {
        let mut endpoint: EndpointConfig = self.config.endpoint();
        if let Some(url) = &args.endpoint {
            endpoint.url = url.clone();
        }
        if let Some(model) = &args.model {
            endpoint.model = model.clone();
        }
        if let Some(seed) = self.seed {
            endpoint.seed = seed;
        }
        let transport: Arc<dyn Transport> = match &args.mock {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                Arc::new(
                    RuleTransport::from_json(&text)
                        .map_err(|e| usage(format!("mock rules {}: {e}", path.display())))?,
                )
            }
            None => Arc::new(HttpTransport::new(&endpoint)?),
        };
        Ok(Sampler::new(transport, endpoint))
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let config = PipelineConfig::load(cli.config.as_deref()).map_err(|e| usage(format!("{e:#}")))?;
    let jobs = cli.jobs.or(config.jobs).unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    let ctx = Runner {
        seed: cli.seed.or(config.seed),
        output: cli.output.clone().or_else(|| config.output.clone()),
        jobs,
        config,
    };
    match cli.command {
        Command::Exec { table, formula, input, header_rows } => cmd_exec(&ctx, table, formula, input, header_rows),
        Command::Convert { sql, map, table, input } => cmd_convert(&ctx, sql, map, table, input),
        Command::Eval { pred, gold, task, ordered, per_record } => {
            cmd_eval(&ctx, &pred, &gold, task, ordered, per_record)
        }
        Command::Vote { candidates, table, tie_rule, json } => cmd_vote(&ctx, &candidates, &table, tie_rule, json),
        Command::Annotate { input, mode, variant, tokenizer, endpoint } => {
            cmd_annotate(&ctx, &input, mode.into(), variant.into(), tokenizer, &endpoint)
        }
        Command::Infer { input, n_formula, n_dp, variant, tie_rule, temperature, candidates, endpoint } => {
            let inf = &ctx.config.inference;
            let cfg = InferConfig {
                n_formula: n_formula.unwrap_or(inf.n_formula),
                n_dp: n_dp.unwrap_or(inf.n_dp),
                variant: variant.map(Into::into).unwrap_or(inf.variant),
                temperature: temperature.unwrap_or(inf.temperature),
                tie_rule: tie_rule.map(Into::into).unwrap_or(inf.tie_rule),
            };
            cmd_infer(&ctx, &input, cfg, candidates, &endpoint)
        }
    }
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    let reader: Box<dyn BufRead> = if path == Path::new("-") {
        Box::new(BufReader::new(io::stdin()))
    } else {
        Box::new(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
    };
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| usage(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

fn write_lines<T: Serialize>(out: &mut dyn Write, items: &[T]) -> anyhow::Result<()> {
    for item in items {
        serde_json::to_writer(&mut *out, item)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Relative table paths in a JSONL file are resolved against the file's
/// directory when they do not exist relative to the working directory.
fn resolve(base: &Path, p: &str) -> PathBuf {
    let path = PathBuf::from(p);
    if path.is_absolute() || path.exists() {
        return path;
    }
    base.parent().map_or(path.clone(), |dir| dir.join(&path))
}

fn cmd_exec(
    ctx: &Runner,
    table: Option<PathBuf>,
    formula: Option<String>,
    input: Option<PathBuf>,
    header_rows: Option<usize>,
) -> anyhow::Result<()> {
    let mut out = ctx.writer()?;
    if let Some(input) = input {
        #[derive(Deserialize)]
        struct Rec {
            table_path: String,
            formula: String,
            header_rows: Option<usize>,
        }
        let recs: Vec<Rec> = read_jsonl(&input)?;
        let reports = ctx.parallel(&recs, |r| {
            let opts = ctx.table_options(None, r.header_rows.or(header_rows));
            load_table(&resolve(&input, &r.table_path), &opts)
                .map(|t| ExecReport::from_source(&r.formula, &t))
                .map_err(|e| e.to_string())
        })?;
        let mut failed = None;
        for r in &reports {
            match r {
                Ok(rep) => serde_json::to_writer(&mut out, rep)?,
                Err(e) => {
                    serde_json::to_writer(&mut out, &json!({"status": "error", "message": e}))?;
                    failed.get_or_insert_with(|| e.clone());
                }
            }
            out.write_all(b"\n")?;
        }
        out.flush()?;
        return failed.map_or(Ok(()), |e| Err(anyhow!(e)));
    }
    let (Some(table), Some(formula)) = (table, formula) else {
        return Err(usage("exec needs --table and --formula, or --input"));
    };
    let t = load_table(&table, &ctx.table_options(None, header_rows))?;
    write_lines(&mut out, &[ExecReport::from_source(&formula, &t)])
}

fn parse_map(text: &str) -> anyhow::Result<ColumnMap> {
    let json = if text.trim_start().starts_with('{') {
        text.to_string()
    } else {
        std::fs::read_to_string(text).with_context(|| format!("reading column map {text}"))?
    };
    serde_json::from_str(&json).map_err(|e| usage(format!("column map: {e}")))
}

fn convert_json(sql: &str, map: &ColumnMap, table: Option<&Table>) -> serde_json::Value {
    match convert_and_simplify(sql, map, table) {
        Ok(c) => serde_json::to_value(c).expect("serializable"),
        Err(e) => json!({"template_id": "UNSUPPORTED", "error": e.to_string()}),
    }
}

fn cmd_convert(
    ctx: &Runner,
    sql: Option<String>,
    map: Option<String>,
    table: Option<PathBuf>,
    input: Option<PathBuf>,
) -> anyhow::Result<()> {
    let mut out = ctx.writer()?;
    if let Some(input) = input {
        #[derive(Deserialize)]
        struct Rec {
            sql: String,
            column_map: ColumnMap,
            table_path: Option<String>,
        }
        let recs: Vec<Rec> = read_jsonl(&input)?;
        let results = ctx.parallel(&recs, |r| -> Result<serde_json::Value, String> {
            let table = match &r.table_path {
                Some(p) => {
                    Some(load_table(&resolve(&input, p), &ctx.table_options(None, None)).map_err(|e| e.to_string())?)
                }
                None => None,
            };
            Ok(convert_json(&r.sql, &r.column_map, table.as_ref()))
        })?;
        let mut failed = None;
        let lines: Vec<serde_json::Value> = results
            .into_iter()
            .map(|r| {
                r.unwrap_or_else(|e| {
                    failed.get_or_insert_with(|| e.clone());
                    json!({"error": e})
                })
            })
            .collect();
        write_lines(&mut out, &lines)?;
        return failed.map_or(Ok(()), |e| Err(anyhow!(e)));
    }
    let (Some(sql), Some(map)) = (sql, map) else {
        return Err(usage("convert needs --sql and --map, or --input"));
    };
    let map = parse_map(&map)?;
    let table = match table {
        Some(p) => Some(load_table(&p, &ctx.table_options(None, None))?),
        None => None,
    };
    write_lines(&mut out, &[convert_json(&sql, &map, table.as_ref())])
}

#[derive(Deserialize)]
struct PredLine {
    id: Option<serde_json::Value>,
    #[serde(alias = "pred", alias = "prediction")]
    answer: String,
}

#[derive(Deserialize)]
struct GoldLine {
    id: Option<serde_json::Value>,
    #[serde(alias = "answer")]
    gold: serde_json::Value,
}

/// Gold answers may be strings, numbers or lists of parts.
fn gold_text(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Array(items) => items.iter().map(gold_text).collect::<Vec<_>>().join("|"),
        serde_json::Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn cmd_eval(
    ctx: &Runner,
    pred: &Path,
    gold: &Path,
    task: TaskArg,
    ordered: bool,
    per_record: bool,
) -> anyhow::Result<()> {
    let preds: Vec<PredLine> = read_jsonl(pred)?;
    let golds: Vec<GoldLine> = read_jsonl(gold)?;
    let keyed = preds.iter().all(|p| p.id.is_some()) && golds.iter().all(|g| g.id.is_some());
    let records: Vec<ScoreRecord> = if keyed {
        let by_id: HashMap<String, &PredLine> = preds.iter().map(|p| (p.id.as_ref().unwrap().to_string(), p)).collect();
        // a gold record without a prediction scores as an empty answer
        golds
            .iter()
            .map(|g| ScoreRecord {
                pred: by_id.get(&g.id.as_ref().unwrap().to_string()).map_or(String::new(), |p| p.answer.clone()),
                gold: gold_text(&g.gold),
            })
            .collect()
    } else {
        if preds.len() != golds.len() {
            return Err(usage(format!(
                "{} predictions but {} gold records and no ids to align them",
                preds.len(),
                golds.len()
            )));
        }
        preds
            .iter()
            .zip(&golds)
            .map(|(p, g)| ScoreRecord { pred: p.answer.clone(), gold: gold_text(&g.gold) })
            .collect()
    };
    let task = match task {
        TaskArg::Qa => Task::Qa,
        TaskArg::Fact => Task::FactVerification,
    };
    let mode = if ordered { MatchMode::Ordered } else { MatchMode::Multiset };
    let report = score_dataset(&records, task, mode).map_err(|e| usage(e.to_string()))?;
    let mut value = json!({"accuracy": report.accuracy, "n": report.n});
    if per_record {
        value["correct"] = json!(report.correct);
    }
    write_lines(&mut *ctx.writer()?, &[value])
}

fn cmd_vote(ctx: &Runner, candidates: &Path, table: &Path, tie: Option<TieArg>, as_json: bool) -> anyhow::Result<()> {
    #[derive(Deserialize)]
    struct Line {
        mode: Mode,
        output: String,
    }
    let lines: Vec<Line> = read_jsonl(candidates)?;
    let t = load_table(table, &ctx.table_options(None, None))?;
    let formulas: Vec<String> = lines.iter().filter(|l| l.mode == Mode::Formula).map(|l| l.output.clone()).collect();
    let answers: Vec<String> = lines.iter().filter(|l| l.mode == Mode::Dp).map(|l| l.output.clone()).collect();
    let cands = collect_candidates(&formulas, &answers, &t);
    let rule: TieRule = tie.map(Into::into).unwrap_or(ctx.config.inference.tie_rule);
    let mut out = ctx.writer()?;
    match vote_with(&cands, &rule) {
        Ok(v) if as_json => write_lines(&mut out, &[v])?,
        Ok(v) => {
            writeln!(out, "{}", v.winner_text)?;
            out.flush()?;
        }
        Err(e) if as_json => write_lines(&mut out, &[json!({"error": e.to_string(), "n_total": cands.len()})])?,
        Err(e) => {
            eprintln!("{e}");
            writeln!(out)?;
            out.flush()?;
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct QuestionLine {
    id: Option<serde_json::Value>,
    question: String,
    #[serde(default)]
    title: Option<String>,
    table_path: String,
    #[serde(default)]
    gold: Option<serde_json::Value>,
    #[serde(default)]
    mode: Option<Mode>,
    #[serde(default)]
    header_rows: Option<usize>,
}

impl QuestionLine {
    fn id_text(&self) -> Option<String> {
        self.id.as_ref().map(|v| match v {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        })
    }
}

/// Runs `f` over every line in parallel; failures become `{id, error}`
/// lines and make the command exit with status 2 after all output is written.
fn run_questions<R: Serialize + Send>(
    ctx: &Runner,
    input: &Path,
    f: impl Fn(&QuestionLine, &Table) -> anyhow::Result<R> + Sync + Send,
) -> anyhow::Result<()> {
    let lines: Vec<QuestionLine> = read_jsonl(input)?;
    let results = ctx.parallel(&lines, |q| -> anyhow::Result<R> {
        let opts = ctx.table_options(q.title.as_deref(), q.header_rows);
        let table = load_table(&resolve(input, &q.table_path), &opts)?;
        f(q, &table)
    })?;
    let mut out = ctx.writer()?;
    let mut failures = 0;
    for (q, r) in lines.iter().zip(results) {
        match r {
            Ok(v) => serde_json::to_writer(&mut out, &v)?,
            Err(e) => {
                failures += 1;
                eprintln!("record {}: {e:#}", q.id_text().unwrap_or_default());
                serde_json::to_writer(&mut out, &json!({"id": q.id, "error": format!("{e:#}")}))?;
            }
        }
        out.write_all(b"\n")?;
    }
    out.flush()?;
    if failures > 0 {
        return Err(anyhow!("{failures} of {} records failed", lines.len()));
    }
    Ok(())
}

fn cmd_annotate(
    ctx: &Runner,
    input: &Path,
    mode: Mode,
    variant: Variant,
    tokenizer: Option<TokenizerKind>,
    endpoint: &EndpointArgs,
) -> anyhow::Result<()> {
    let sampler = ctx.sampler(endpoint)?;
    let ann = &ctx.config.annotation;
    let tok: &dyn Tokenizer = match tokenizer.unwrap_or(ann.tokenizer) {
        TokenizerKind::Chars => &CharTokenizer,
        TokenizerKind::Formula => &FormulaTokenizer,
    };
    let cfg = AnnotateConfig {
        n: ann.n,
        max_rounds: ann.max_rounds,
        max_attempts: ann.max_attempts,
        temperature: ann.temperature,
        tokenizer: tok,
    };
    if variant == Variant::Direct && mode == Mode::Dp {
        return Err(usage("direct annotation produces formulas; use --mode formula or --variant cot"));
    }
    run_questions(ctx, input, |q, table| {
        let gold = q.gold.as_ref().map(gold_text).ok_or_else(|| usage("annotation records need a gold answer"))?;
        let title = q.title.clone().unwrap_or_else(|| table.title().to_string());
        let task = AnnotationTask {
            id: q.id_text(),
            question: &q.question,
            title: &title,
            table_id: &q.table_path,
            table,
            gold: &gold,
        };
        let mode = q.mode.unwrap_or(mode);
        let record = match variant {
            Variant::Direct => annotate_direct(&sampler, &task, &cfg)?,
            Variant::Cot => annotate_cot(&sampler, &task, mode, &cfg)?,
        };
        Ok(record)
    })
}

fn cmd_infer(
    ctx: &Runner,
    input: &Path,
    cfg: InferConfig,
    with_candidates: bool,
    endpoint: &EndpointArgs,
) -> anyhow::Result<()> {
    if cfg.n_formula + cfg.n_dp == 0 {
        return Err(usage("--n-formula plus --n-dp must be at least 1"));
    }
    let sampler = ctx.sampler(endpoint)?;
    run_questions(ctx, input, |q, table| {
        let title = q.title.clone().unwrap_or_else(|| table.title().to_string());
        let r = infer_one(&sampler, table, &title, &q.question, &cfg)?;
        let mut v = json!({
            "id": q.id,
            "question": q.question,
            "answer": r.answer,
            "n_valid": r.n_valid,
            "n_total": r.n_total,
            "tie_broken": r.tie_broken,
        });
        if let Some(g) = &q.gold {
            v["gold"] = json!(gold_text(g));
        }
        if with_candidates {
            v["candidates"] = serde_json::to_value(&r.candidates)?;
        }
        Ok(v)
    })
}
