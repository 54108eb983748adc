//! Regenerates the small bundled fixtures under `tests/fixtures`.
//!
//! cargo run --example make_fixtures -- crates/core/tests/fixtures

use std::fs;
use std::path::PathBuf;

use normdiscount::evalharness::pairs::write_labeled_pairs;
use normdiscount::synth::{
    corpus, planted_instances, planted_pairs_for, vocabulary, PlantedConfig,
};

const SEED: u64 = 20;

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "tests/fixtures".into()),
    );
    fs::create_dir_all(&dir)?;
    let cfg = PlantedConfig {
        n_pairs: 200,
        dim: 8,
        content_log_freq: (0.0, 7.0),
        stop_log_freq: (4.0, 7.5),
        ..Default::default()
    };
    let vocab = vocabulary(&cfg, SEED);
    fs::write(dir.join("corpus.txt"), corpus(&vocab, SEED, 12))?;

    let pairs = planted_pairs_for(&cfg, &vocab, SEED);
    let mut buf = Vec::new();
    write_labeled_pairs(&mut buf, &pairs)?;
    fs::write(dir.join("pairs.jsonl"), buf)?;

    let instances = planted_instances(&vocab, 4, 8, (0.3, 2.0), (0.6, 3.0), SEED);
    let mut text = String::from("{\"dim\":8}\n");
    for inst in &instances {
        text.push_str(&serde_json::to_string(inst)?);
        text.push('\n');
    }
    fs::write(dir.join("instances.jsonl"), text)?;

    let stops: Vec<&str> = vocab
        .iter()
        .filter(|v| v.stop)
        .map(|v| v.word.as_str())
        .collect();
    fs::write(
        dir.join("stopwords.txt"),
        format!("# fixture stop list\n{}\n", stops.join("\n")),
    )?;
    Ok(())
}
