//! The `normdiscount` command line.
//!
//! Exit codes: 0 on success, 2 when a file cannot be read or written, 3 when
//! an input is malformed or a flag combination is invalid. Every output file
//! is written to a temporary sibling and renamed into place.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::calibrate::{
    fit_averaged, FitReport, LabeledPair, SearchBox, DEFAULT_BUDGET, DEFAULT_REPEATS,
};
use crate::embedding_store::{norm_freq_points, EmbeddingStore, NormPoint};
use crate::evalharness::pairs::{label_pairs, load_pair_records};
use crate::evalharness::{
    evaluate, write_bins_csv, write_scatter_csv, EvalReport, Mode, ScatterFits, DEFAULT_BINS,
};
use crate::freqstats::{count_files, frequency_histogram, FrequencyTable, StopWordList};
use crate::plot::{chart, Series};
use crate::simcore::{DiscountParams, SimError};
use crate::stats::{ols_fit, FitLine};

pub const EXIT_IO: u8 = 2;
pub const EXIT_INVALID: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => EXIT_IO,
            CliError::Invalid(_) => EXIT_INVALID,
        }
    }

    fn classify(io: bool, msg: impl ToString) -> Self {
        if io {
            CliError::Io(msg.to_string())
        } else {
            CliError::Invalid(msg.to_string())
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "normdiscount",
    version,
    about = "Frequency-discounted cosine similarity"
)]
pub struct Cli {
    /// Seed for every random choice made by the command.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count word frequencies in one or more corpus files.
    Freq(FreqArgs),
    /// Fit discount parameters on labelled pairs.
    Fit(FitArgs),
    /// Evaluate plain or discounted similarity on labelled pairs.
    Eval(EvalArgs),
    /// Mean-sibling norm against log-frequency, per stop-word class.
    AnalyzeNorms(NormsArgs),
    /// Similarity against log-frequency for each gold label.
    AnalyzeScatter(ScatterArgs),
}

#[derive(Debug, Args)]
pub struct FreqArgs {
    #[arg(required = true)]
    pub corpus: Vec<PathBuf>,
    /// Frequency table (TSV).
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a log-frequency histogram of the vocabulary (CSV).
    #[arg(long)]
    pub histogram: Option<PathBuf>,
    #[arg(long, default_value_t = 20, requires = "histogram")]
    pub buckets: usize,
    /// Render the histogram as SVG next to the CSV.
    #[arg(long, requires = "histogram")]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct Inputs {
    /// Pair-embedding file (JSON Lines).
    #[arg(long)]
    pub pairs: PathBuf,
    /// Frequency table written by `freq`.
    #[arg(long)]
    pub freq_table: PathBuf,
    /// Stop-word list, one word per line. Defaults to the bundled English list.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: usize,
    #[arg(long, default_value_t = DEFAULT_REPEATS)]
    pub repeats: usize,
    /// Fitted parameters (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Fit report (JSON). Defaults to `fit_report.json` beside `--out`.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    /// Parameter file written by `fit`.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Threshold for plain mode when no parameter file is given.
    #[arg(long, conflicts_with = "params")]
    pub theta: Option<f64>,
    #[arg(long, value_enum, default_value_t = Mode::Discounted)]
    pub mode: Mode,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    /// Output directory for report.json, bins.csv and scatter.csv.
    #[arg(long)]
    pub out: PathBuf,
    /// Also render bins.svg and scatter.svg.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct NormsArgs {
    /// Instance-embedding file (JSON Lines).
    #[arg(long)]
    pub instances: PathBuf,
    #[arg(long)]
    pub freq_table: PathBuf,
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Per-word points (CSV). The fit summary goes to the same path with a
    /// `.json` extension.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct ScatterArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    /// Parameters for the discounted scores. Defaults to the reference BERT/WiC values.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Output directory for scatter.csv and fits.json.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: bool,
}

/// Parses `args` (program name first), runs the command and reports errors
/// on stderr.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INVALID)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Freq(a) => cmd_freq(a),
        Command::Fit(a) => cmd_fit(a, cli.seed),
        Command::Eval(a) => cmd_eval(a),
        Command::AnalyzeNorms(a) => cmd_analyze_norms(a),
        Command::AnalyzeScatter(a) => cmd_analyze_scatter(a),
    }
}

fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CliResult<()> {
    let io_err = |e: io::Error| CliError::Io(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(io_err)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    {
        let mut w = io::BufWriter::new(tmp.as_file_mut());
        fill(&mut w).map_err(io_err)?;
        w.flush().map_err(io_err)?;
    }
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")
    })
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    write_atomic(path, |w| w.write_all(text.as_bytes()))
}

fn load_table(path: &Path) -> CliResult<FrequencyTable> {
    FrequencyTable::load(path).map_err(|e| CliError::classify(e.is_io(), e))
}

fn load_stops(path: Option<&Path>) -> CliResult<StopWordList> {
    match path {
        None => Ok(StopWordList::english()),
        Some(p) => StopWordList::load(p).map_err(|e| CliError::classify(e.is_io(), e)),
    }
}

fn load_params(path: &Path) -> CliResult<DiscountParams> {
    DiscountParams::load(path).map_err(|e| CliError::classify(matches!(e, SimError::Io { .. }), e))
}

fn load_labeled(inputs: &Inputs) -> CliResult<Vec<LabeledPair>> {
    let records = load_pair_records(&inputs.pairs)
        .map_err(|e| CliError::classify(e.is_io(), format!("{}: {e}", inputs.pairs.display())))?;
    if records.is_empty() {
        return Err(CliError::Invalid(format!(
            "{}: no pairs",
            inputs.pairs.display()
        )));
    }
    let table = load_table(&inputs.freq_table)?;
    let stops = load_stops(inputs.stopwords.as_deref())?;
    let pairs = label_pairs(records, &table, &stops)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", inputs.pairs.display())))?;
    let missing = pairs.iter().filter(|p| p.freq_missing).count();
    if missing > 0 {
        eprintln!(
            "warning: {missing} pair word(s) absent from the frequency table; log-frequency 0 used"
        );
    }
    Ok(pairs)
}

fn cmd_freq(a: &FreqArgs) -> CliResult<()> {
    let table = count_files(&a.corpus).map_err(|e| CliError::classify(e.is_io(), e))?;
    write_atomic(&a.out, |w| table.write_tsv(w))?;
    if let Some(path) = &a.histogram {
        let hist =
            frequency_histogram(&table, a.buckets).map_err(|e| CliError::Invalid(e.to_string()))?;
        write_atomic(path, |w| {
            let mut c = csv::Writer::from_writer(w);
            c.write_record(["bucket", "lo_logfreq", "hi_logfreq", "words"])?;
            for (b, n) in hist.counts.iter().enumerate() {
                c.write_record([
                    (b + 1).to_string(),
                    hist.edges[b].to_string(),
                    hist.edges[b + 1].to_string(),
                    n.to_string(),
                ])?;
            }
            c.flush()
        })?;
        if a.svg {
            let points = hist
                .counts
                .iter()
                .enumerate()
                .map(|(b, &n)| (0.5 * (hist.edges[b] + hist.edges[b + 1]), n as f64))
                .collect();
            let svg = chart(
                "Vocabulary by log-frequency",
                "log frequency",
                "words",
                &[Series {
                    name: "words",
                    color: "steelblue",
                    points,
                    line: None,
                    connect: true,
                }],
            );
            write_text(&path.with_extension("svg"), &svg)?;
        }
    }
    Ok(())
}

fn cmd_fit(a: &FitArgs, seed: u64) -> CliResult<()> {
    let pairs = load_labeled(&a.inputs)?;
    let fit = fit_averaged(&pairs, &SearchBox::default(), seed, a.budget, a.repeats)
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    let report = FitReport::new(fit, seed, a.budget, a.repeats);
    write_json(&a.out, &report.params)?;
    let report_path = a.report.clone().unwrap_or_else(|| {
        a.out
            .parent()
            .unwrap_or(Path::new(""))
            .join("fit_report.json")
    });
    write_json(&report_path, &report)
}

/// What `eval` writes to `report.json`. Only the parameters actually applied
/// are recorded, so plain mode and a zero-slope discounted run agree.
#[derive(Serialize)]
struct EvalOutput<'a> {
    params: DiscountParams,
    report: &'a EvalReport,
}

fn cmd_eval(a: &EvalArgs) -> CliResult<()> {
    if a.bins == 0 {
        return Err(CliError::Invalid("--bins must be positive".into()));
    }
    let params = match (a.mode, &a.params, a.theta) {
        (_, Some(path), _) => load_params(path)?,
        (Mode::Plain, None, Some(theta)) => {
            let p = DiscountParams::undiscounted(theta);
            p.validate().map_err(|e| CliError::Invalid(e.to_string()))?;
            p
        }
        (Mode::Plain, None, None) => {
            return Err(CliError::Invalid(
                "plain mode needs --params or --theta".into(),
            ))
        }
        (Mode::Discounted, None, _) => {
            return Err(CliError::Invalid("discounted mode needs --params".into()))
        }
    };
    let pairs = load_labeled(&a.inputs)?;
    let report =
        evaluate(&pairs, &params, a.mode, a.bins).map_err(|e| CliError::Invalid(e.to_string()))?;
    let dir = &a.out;
    write_json(
        &dir.join("report.json"),
        &EvalOutput {
            params: a.mode.effective(&params),
            report: &report,
        },
    )?;
    let rows = report.per_bin.as_deref().unwrap_or(&[]);
    write_atomic(&dir.join("bins.csv"), |w| write_bins_csv(w, rows))?;
    write_atomic(&dir.join("scatter.csv"), |w| {
        write_scatter_csv(w, &report.points)
    })?;
    if a.svg {
        let series = |name, color, f: fn(&crate::evalharness::BinRow) -> f64| Series {
            name,
            color,
            points: rows.iter().map(|r| (r.bin as f64, f(r))).collect(),
            line: None,
            connect: true,
        };
        let svg = chart(
            "Share of pairs labelled SAME by frequency bin",
            "frequency bin (low to high)",
            "SAME rate",
            &[
                series("human", "black", |r| r.human_rate),
                series("predicted", "firebrick", |r| r.pred_rate),
            ],
        );
        write_text(&dir.join("bins.svg"), &svg)?;
        write_text(&dir.join("scatter.svg"), &scatter_svg(&report, false))?;
    }
    Ok(())
}

fn scatter_svg(report: &EvalReport, plain_only: bool) -> String {
    let mut series = Vec::new();
    let specs = [
        (
            "SAME",
            "royalblue",
            crate::simcore::Label::Same,
            &report.scatter.same,
        ),
        (
            "DIFFERENT",
            "darkorange",
            crate::simcore::Label::Different,
            &report.scatter.different,
        ),
    ];
    for (name, color, label, fits) in specs {
        let pts = report.points.iter().filter(|p| p.gold == label);
        let (points, fit) = if plain_only {
            (
                pts.map(|p| (p.log_freq, p.score_plain)).collect(),
                fits.plain,
            )
        } else {
            (
                pts.map(|p| (p.log_freq, p.score_discounted)).collect(),
                fits.discounted,
            )
        };
        series.push(Series {
            name,
            color,
            points,
            line: fit.map(|f| (f.slope, f.intercept)),
            connect: false,
        });
    }
    let title = if plain_only {
        "Cosine similarity by log-frequency"
    } else {
        "Scored similarity by log-frequency"
    };
    chart(title, "log frequency", "similarity", &series)
}

#[derive(Serialize)]
struct ClassSummary {
    words: usize,
    /// Words absent from the frequency table; kept in the CSV, left out of the fit.
    missing_freq: usize,
    fit: Option<FitLine>,
}

#[derive(Serialize)]
struct NormSummary {
    stop: ClassSummary,
    non_stop: ClassSummary,
}

fn class_summary(points: &[NormPoint]) -> ClassSummary {
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| !p.missing_freq)
        .map(|p| (p.log_freq, p.norm))
        .collect();
    ClassSummary {
        words: points.len(),
        missing_freq: points.len() - xy.len(),
        fit: ols_fit(&xy).ok(),
    }
}

fn cmd_analyze_norms(a: &NormsArgs) -> CliResult<()> {
    let store = EmbeddingStore::load(&a.instances)
        .map_err(|e| CliError::classify(e.is_io(), format!("{}: {e}", a.instances.display())))?;
    let table = load_table(&a.freq_table)?;
    let stops = load_stops(a.stopwords.as_deref())?;
    let points = norm_freq_points(&store, &table, &stops);
    write_atomic(&a.out, |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record([
            "word",
            "class",
            "logfreq",
            "norm",
            "support",
            "missing_freq",
        ])?;
        for (class, list) in [("stop", &points.stop), ("non_stop", &points.non_stop)] {
            for p in list {
                c.write_record([
                    p.word.clone(),
                    class.to_owned(),
                    p.log_freq.to_string(),
                    p.norm.to_string(),
                    p.support.to_string(),
                    p.missing_freq.to_string(),
                ])?;
            }
        }
        c.flush()
    })?;
    let summary = NormSummary {
        stop: class_summary(&points.stop),
        non_stop: class_summary(&points.non_stop),
    };
    write_json(&a.out.with_extension("json"), &summary)?;
    if a.svg {
        let series = |name, color, list: &[NormPoint], fit: &Option<FitLine>| Series {
            name,
            color,
            points: list
                .iter()
                .filter(|p| !p.missing_freq)
                .map(|p| (p.log_freq, p.norm))
                .collect(),
            line: fit.map(|f| (f.slope, f.intercept)),
            connect: false,
        };
        let svg = chart(
            "Mean sibling norm by log-frequency",
            "log frequency",
            "L2 norm",
            &[
                series("stop", "firebrick", &points.stop, &summary.stop.fit),
                series(
                    "non-stop",
                    "seagreen",
                    &points.non_stop,
                    &summary.non_stop.fit,
                ),
            ],
        );
        write_text(&a.out.with_extension("svg"), &svg)?;
    }
    Ok(())
}

fn cmd_analyze_scatter(a: &ScatterArgs) -> CliResult<()> {
    let params = match &a.params {
        Some(p) => load_params(p)?,
        None => DiscountParams::bert_wic(),
    };
    let pairs = load_labeled(&a.inputs)?;
    let report = evaluate(&pairs, &params, Mode::Discounted, DEFAULT_BINS)
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    let dir = &a.out;
    write_atomic(&dir.join("scatter.csv"), |w| {
        write_scatter_csv(w, &report.points)
    })?;
    write_json(&dir.join("fits.json"), &report.scatter as &ScatterFits)?;
    if a.svg {
        write_text(&dir.join("scatter_plain.svg"), &scatter_svg(&report, true))?;
        write_text(
            &dir.join("scatter_discounted.svg"),
            &scatter_svg(&report, false),
        )?;
    }
    Ok(())
}
