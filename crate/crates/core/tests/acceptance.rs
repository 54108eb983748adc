//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use normdiscount::calibrate::{fit_averaged, SearchBox};
use normdiscount::evalharness::{evaluate, gradient_reduction, Mode};
use normdiscount::freqstats::{count_corpus, FrequencyTable};
use normdiscount::simcore::{alpha, discounted_cosine, DiscountParams, Label, WordVector};
use normdiscount::stats::{equal_count_bins, ols_fit, pearson};
use normdiscount::synth::{planted_pairs, PlantedConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect();
        if v.iter().any(|&x| x != 0.0) {
            return v;
        }
    }
}

/// Cosine written out term by term.
fn oracle_cosine(x: &[f64], y: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut xx = 0.0;
    let mut yy = 0.0;
    for i in 0..x.len() {
        dot += x[i] * y[i];
        xx += x[i] * x[i];
        yy += y[i] * y[i];
    }
    dot / (xx.sqrt() * yy.sqrt())
}

fn reduction_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let dim = rng.gen_range(1..=64);
        let x = random_vec(&mut rng, dim);
        let y = random_vec(&mut rng, dim);
        let params = DiscountParams::new(
            rng.gen_range(0.0..1.0),
            0.0,
            rng.gen_range(-20.0..20.0),
            0.0,
            rng.gen_range(-20.0..20.0),
        )
        .unwrap();
        let wx = WordVector {
            vector: &x,
            log_freq: rng.gen_range(0.0..25.0),
            stop: rng.gen_bool(0.5),
        };
        let wy = WordVector {
            vector: &y,
            log_freq: rng.gen_range(0.0..25.0),
            stop: rng.gen_bool(0.5),
        };
        let got = discounted_cosine(wx, wy, &params).map_err(|e| e.to_string())?;
        worst = worst.max((got - oracle_cosine(&x, &y)).abs());
    }
    let elapsed = start.elapsed();
    check(
        worst <= 1e-12 && elapsed < Duration::from_secs(1),
        format!("max |diff| {worst:.2e} over 1000 pairs in {elapsed:.2?}"),
    )
}

fn alpha_arithmetic() -> Outcome {
    let p = DiscountParams::bert_wic();
    let at_bs = alpha(&p, 0.643, true);
    let at_bn = alpha(&p, 4.821, false);
    let far = alpha(&p, 14.821, false);
    check(
        at_bs == 1.0 && at_bn == 1.0 && (far - 0.9573).abs() <= 1e-9,
        format!("alpha(b_s)={at_bs}, alpha(b_n)={at_bn}, alpha(14.821)={far:.12}"),
    )
}

fn monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    while checked < 1000 {
        let dim = rng.gen_range(2..=32);
        let x = random_vec(&mut rng, dim);
        let y = random_vec(&mut rng, dim);
        if oracle_cosine(&x, &y) <= 0.0 {
            continue;
        }
        let params = DiscountParams::new(
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.001..0.2),
            rng.gen_range(0.0..10.0),
            rng.gen_range(0.001..0.2),
            rng.gen_range(0.0..10.0),
        )
        .unwrap();
        let (sx, sy) = (rng.gen_bool(0.5), rng.gen_bool(0.5));
        // Largest log-frequency whose +1 step keeps alpha above the floor.
        let ceiling = |stop: bool| {
            let (m, b) = if stop {
                (params.m_s, params.b_s)
            } else {
                (params.m_n, params.b_n)
            };
            b - 1.0 + 0.999 / m
        };
        let (cx, cy) = (ceiling(sx), ceiling(sy));
        if cx <= 0.0 || cy <= 0.0 {
            continue;
        }
        let lx = rng.gen_range(0.0..cx);
        let ly = rng.gen_range(0.0..cy);
        let score = |lx: f64, ly: f64| {
            discounted_cosine(
                WordVector {
                    vector: &x,
                    log_freq: lx,
                    stop: sx,
                },
                WordVector {
                    vector: &y,
                    log_freq: ly,
                    stop: sy,
                },
                &params,
            )
            .unwrap()
        };
        let base = score(lx, ly);
        if !(score(lx + 1.0, ly) > base && score(lx, ly + 1.0) > base) {
            return Err(format!(
                "not increasing at lx={lx}, ly={ly}, params {params:?}"
            ));
        }
        checked += 1;
    }
    Ok("1000 positive pairs, both arguments strictly increasing".into())
}

fn naive_pearson(p: &[(f64, f64)]) -> f64 {
    let n = p.len() as f64;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y) in p {
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

fn naive_ols(p: &[(f64, f64)]) -> (f64, f64) {
    let n = p.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in p {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    (slope, (sy - slope * sx) / n)
}

/// Rank by (key, index) via counting, then cut the ranks into chunks at
/// `floor(b * n / k)`.
fn oracle_bins(keys: &[f64], k: usize) -> Vec<usize> {
    let n = keys.len();
    (0..n)
        .map(|i| {
            let rank = (0..n)
                .filter(|&j| keys[j] < keys[i] || (keys[j] == keys[i] && j < i))
                .count();
            (0..k).find(|&b| rank < (b + 1) * n / k).unwrap()
        })
        .collect()
}

fn stats_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(2..=200);
        let slope = rng.gen_range(-3.0..3.0);
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let x = rng.gen_range(-10.0..10.0);
                (x, slope * x + rng.gen_range(-5.0..5.0))
            })
            .collect();
        let r = pearson(&pts).map_err(|e| e.to_string())?;
        let fit = ols_fit(&pts).map_err(|e| e.to_string())?;
        let (s, c) = naive_ols(&pts);
        worst = worst
            .max((r - naive_pearson(&pts)).abs())
            .max((fit.slope - s).abs())
            .max((fit.intercept - c).abs());

        // Coarse keys so ties occur.
        let keys: Vec<f64> = (0..n).map(|_| rng.gen_range(0..20) as f64 * 0.5).collect();
        let k = rng.gen_range(1..=n.min(12));
        let bins = equal_count_bins(&keys, k).map_err(|e| e.to_string())?;
        if bins.assignments != oracle_bins(&keys, k) {
            return Err(format!("bin membership differs for n={n}, k={k}"));
        }
    }
    check(
        worst <= 1e-9,
        format!("100 datasets, max |diff| {worst:.2e}; bins identical to sort-then-chunk"),
    )
}

/// Accuracy of the best single threshold on plain cosine, by trying every
/// observed score as the cut.
fn best_plain_accuracy(scores: &[(f64, Label)]) -> f64 {
    let mut best = 0.0f64;
    let n = scores.len() as f64;
    for &(t, _) in scores
        .iter()
        .chain(std::iter::once(&(f64::INFINITY, Label::Same)))
    {
        let correct = scores
            .iter()
            .filter(|(s, g)| (*s >= t) == g.is_same())
            .count();
        best = best.max(correct as f64 / n);
    }
    best
}

fn planted_recovery() -> Outcome {
    let start = Instant::now();
    let pairs = planted_pairs(&PlantedConfig::default(), 42);
    let fit = fit_averaged(&pairs, &SearchBox::default(), 42, 500, 5).map_err(|e| e.to_string())?;
    let disc = evaluate(&pairs, &fit.params, Mode::Discounted, 10).map_err(|e| e.to_string())?;
    let plain = evaluate(&pairs, &fit.params, Mode::Plain, 10).map_err(|e| e.to_string())?;
    let oracle_plain = best_plain_accuracy(
        &disc
            .points
            .iter()
            .map(|p| (p.score_plain, p.gold))
            .collect::<Vec<_>>(),
    );
    let elapsed = start.elapsed();
    let (d, p) = (disc.metrics.accuracy, plain.metrics.accuracy);
    check(
        fit.train_accuracy >= 0.95
            && d - p >= 0.10
            && d - oracle_plain >= 0.10
            && elapsed < Duration::from_secs(30),
        format!(
            "train {:.4}, discounted {d:.4}, plain {p:.4} (best plain threshold {oracle_plain:.4}) in {elapsed:.2?}",
            fit.train_accuracy
        ),
    )
}

fn gradient_reduction_mechanics() -> Outcome {
    let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
    let plain: Vec<(f64, f64)> = xs.iter().map(|&x| (x, 0.8 - 0.02 * x)).collect();
    let disc: Vec<(f64, f64)> = xs.iter().map(|&x| (x, 0.8 - 0.01 * x)).collect();
    let fp = ols_fit(&plain).map_err(|e| e.to_string())?;
    let fd = ols_fit(&disc).map_err(|e| e.to_string())?;
    let g = gradient_reduction(&fp, &fd).map_err(|e| e.to_string())?;
    check(
        (g - 50.0).abs() <= 1e-9,
        format!("slopes {:.6} / {:.6} -> {g:.12}%", fp.slope, fd.slope),
    )
}

fn merge_property() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let words: Vec<String> = (0..300).map(|i| format!("w{}", i * i % 997)).collect();
    let tokens: Vec<&str> = (0..10_000)
        .map(|_| {
            // Skewed draw so counts span several orders of magnitude.
            let u: f64 = rng.gen_range(0.0f64..1.0);
            words[(u * u * u * words.len() as f64) as usize].as_str()
        })
        .collect();
    let render =
        |toks: &[&str]| -> String { toks.chunks(17).map(|c| c.join(" ") + "\n").collect() };
    let whole = count_corpus(render(&tokens).as_bytes())
        .map_err(|e| e.to_string())?
        .to_tsv_string();
    for _ in 0..50 {
        let cut = rng.gen_range(0..=tokens.len());
        let mut a = count_corpus(render(&tokens[..cut]).as_bytes()).map_err(|e| e.to_string())?;
        let b = count_corpus(render(&tokens[cut..]).as_bytes()).map_err(|e| e.to_string())?;
        a.merge(&b);
        if a.to_tsv_string() != whole {
            return Err(format!("split at token {cut} differs"));
        }
    }
    let table = FrequencyTable::read_tsv(whole.as_bytes()).map_err(|e| e.to_string())?;
    check(
        table.total_tokens() == 10_000,
        "50 random splits of 10000 tokens, byte-identical TSV".into(),
    )
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn cli(args: &[&Path]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_normdiscount"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{:?} exited {:?}: {}",
            args,
            out.status.code(),
            String::from_utf8_lossy(&out.stderr).trim()
        ))
    }
}

fn p(s: &str) -> &Path {
    Path::new(s)
}

fn run_fit(table: &Path, out: &Path, report: &Path) -> Result<(), String> {
    cli(&[
        p("fit"),
        p("--pairs"),
        &fixture("pairs.jsonl"),
        p("--freq-table"),
        table,
        p("--stopwords"),
        &fixture("stopwords.txt"),
        p("--seed"),
        p("7"),
        p("--out"),
        out,
        p("--report"),
        report,
    ])
}

fn run_eval(table: &Path, params: &Path, mode: &str, out: &Path) -> Result<(), String> {
    cli(&[
        p("eval"),
        p("--pairs"),
        &fixture("pairs.jsonl"),
        p("--freq-table"),
        table,
        p("--stopwords"),
        &fixture("stopwords.txt"),
        p("--params"),
        params,
        p("--mode"),
        p(mode),
        p("--out"),
        out,
    ])
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let table = d.join("freq.tsv");
    cli(&[p("freq"), &fixture("corpus.txt"), p("--out"), &table])?;
    let mut runs = Vec::new();
    for k in 0..2 {
        let params = d.join(format!("params{k}.json"));
        let report = d.join(format!("fit{k}.json"));
        let eval = d.join(format!("eval{k}"));
        run_fit(&table, &params, &report)?;
        run_eval(&table, &params, "discounted", &eval)?;
        let mut bytes = vec![fs::read(&params).unwrap(), fs::read(&report).unwrap()];
        for f in ["report.json", "bins.csv", "scatter.csv"] {
            bytes.push(fs::read(eval.join(f)).map_err(|e| e.to_string())?);
        }
        runs.push(bytes);
    }
    check(
        runs[0] == runs[1],
        "fit and eval outputs byte-identical across two seeded runs".into(),
    )
}

// Output schemas. Unknown or missing fields fail deserialisation.

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct ParamsSchema {
    theta: f64,
    m_s: f64,
    b_s: f64,
    m_n: f64,
    b_n: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct RunSchema {
    seed: u64,
    params: ParamsSchema,
    train_accuracy: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct FitReportSchema {
    params: ParamsSchema,
    train_accuracy: f64,
    seed: u64,
    budget: u64,
    repeats: u64,
    per_run: Vec<RunSchema>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct MetricsSchema {
    accuracy: f64,
    precision: f64,
    recall: f64,
    f1: f64,
    true_positives: u64,
    false_positives: u64,
    true_negatives: u64,
    false_negatives: u64,
    precision_degenerate: bool,
    recall_degenerate: bool,
    f1_degenerate: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct BinSchema {
    bin: u64,
    count: u64,
    human_rate: f64,
    pred_rate: f64,
    mean_log_freq: f64,
    min_log_freq: f64,
    max_log_freq: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct FitLineSchema {
    slope: f64,
    intercept: f64,
    pearson_r: Option<f64>,
    n: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct LabelFitsSchema {
    plain: Option<FitLineSchema>,
    discounted: Option<FitLineSchema>,
    gradient_reduction: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct ScatterSchema {
    same: LabelFitsSchema,
    different: LabelFitsSchema,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct ReportSchema {
    n: u64,
    metrics: MetricsSchema,
    per_bin: Option<Vec<BinSchema>>,
    scatter: ScatterSchema,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct EvalSchema {
    params: ParamsSchema,
    report: ReportSchema,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct ClassSchema {
    words: u64,
    missing_freq: u64,
    fit: Option<FitLineSchema>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct NormsSchema {
    stop: ClassSchema,
    non_stop: ClassSchema,
}

fn json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Checks the header and that every row has the right arity and field types
/// (`f` float, `u` unsigned, `l` label, `b` bool, `s` string).
fn csv_schema(path: &Path, header: &[&str], types: &str) -> Result<usize, String> {
    let err = |e: String| format!("{}: {e}", path.display());
    let mut r = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
    let got: Vec<String> = r
        .headers()
        .map_err(|e| err(e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    if got != header {
        return Err(err(format!("header {got:?}")));
    }
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        for (field, t) in rec.iter().zip(types.chars()) {
            let ok = match t {
                'f' => field.parse::<f64>().map(f64::is_finite).unwrap_or(false),
                'u' => field.parse::<u64>().is_ok(),
                'l' => field == "SAME" || field == "DIFFERENT",
                'b' => field == "true" || field == "false",
                _ => !field.is_empty(),
            };
            if !ok {
                return Err(err(format!("bad {t} field {field:?} in row {}", rows + 1)));
            }
        }
        rows += 1;
    }
    Ok(rows)
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let table = d.join("freq.tsv");
    let hist = d.join("hist.csv");
    cli(&[
        p("freq"),
        &fixture("corpus.txt"),
        p("--out"),
        &table,
        p("--histogram"),
        &hist,
    ])?;
    let params = d.join("params.json");
    let fit_report = d.join("fit_report.json");
    run_fit(&table, &params, &fit_report)?;
    run_eval(&table, &params, "discounted", &d.join("disc"))?;
    run_eval(&table, &params, "plain", &d.join("plain"))?;
    let norms = d.join("norms.csv");
    cli(&[
        p("analyze-norms"),
        p("--instances"),
        &fixture("instances.jsonl"),
        p("--freq-table"),
        &table,
        p("--stopwords"),
        &fixture("stopwords.txt"),
        p("--out"),
        &norms,
    ])?;
    let scatter = d.join("scatter");
    cli(&[
        p("analyze-scatter"),
        p("--pairs"),
        &fixture("pairs.jsonl"),
        p("--freq-table"),
        &table,
        p("--params"),
        &params,
        p("--out"),
        &scatter,
    ])?;
    let elapsed = start.elapsed();

    FrequencyTable::load(&table).map_err(|e| e.to_string())?;
    csv_schema(
        &hist,
        &["bucket", "lo_logfreq", "hi_logfreq", "words"],
        "uffu",
    )?;
    json::<ParamsSchema>(&params)?;
    let fit: FitReportSchema = json(&fit_report)?;
    for mode in ["disc", "plain"] {
        let out = d.join(mode);
        let eval: EvalSchema = json(&out.join("report.json"))?;
        let bins = csv_schema(
            &out.join("bins.csv"),
            &["bin", "human_rate", "pred_rate", "mean_logfreq"],
            "ufff",
        )?;
        let points = csv_schema(
            &out.join("scatter.csv"),
            &[
                "word",
                "logfreq",
                "label",
                "score_plain",
                "score_discounted",
            ],
            "sflff",
        )?;
        if bins != 10
            || points as u64 != eval.report.n
            || eval.report.per_bin.map(|b| b.len()) != Some(10)
        {
            return Err(format!("{mode}: {bins} bins, {points} scatter rows"));
        }
    }
    csv_schema(
        &norms,
        &[
            "word",
            "class",
            "logfreq",
            "norm",
            "support",
            "missing_freq",
        ],
        "ssffub",
    )?;
    let summary: NormsSchema = json(&norms.with_extension("json"))?;
    json::<ScatterSchema>(&scatter.join("fits.json"))?;
    csv_schema(
        &scatter.join("scatter.csv"),
        &[
            "word",
            "logfreq",
            "label",
            "score_plain",
            "score_discounted",
        ],
        "sflff",
    )?;
    check(
        elapsed < Duration::from_secs(60) && summary.stop.fit.is_some() && summary.non_stop.fit.is_some(),
        format!(
            "freq, fit, eval x2, analyze-norms, analyze-scatter in {elapsed:.2?}; 14 files valid; fixture train accuracy {:.3}",
            fit.train_accuracy
        ),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("reduction identity", reduction_identity),
        ("alpha arithmetic", alpha_arithmetic),
        ("monotonicity", monotonicity),
        ("statistics oracles", stats_oracles),
        ("planted-parameter recovery", planted_recovery),
        ("gradient-reduction mechanics", gradient_reduction_mechanics),
        ("frequency merge property", merge_property),
        ("determinism", determinism),
        ("end-to-end pipeline", end_to_end),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
