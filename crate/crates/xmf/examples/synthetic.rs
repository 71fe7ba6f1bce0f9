//! Writes a small synthetic dataset for trying the CLI:
//!
//! ```text
//! cargo run -p xmf --example synthetic -- out/
//! xmf pair --audio out/audio.xmeb --images out/images.xmeb --oracle --out-dir out/run
//! xmf report --pairs out/run/pairs.csv --metadata out/metadata.jsonl --out-dir out/run
//! xmf score-captions out/captions.jsonl --out-dir out/run
//! xmf eval --reference out/reference.xmeb --generated out/generated.xmeb \
//!     --artwork out/images.xmeb --out-dir out/run
//! ```
//!
//! Each artwork is built around one of a few style directions and each track
//! around a genre direction, with style `k` and genre `k` sharing a
//! direction, so pairing should recover the planted style/genre links.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use xmf::xmeb;
use xmf_core::rng::SeededRng;
use xmf_core::{EmbeddingSet, Modality, Source};

const STYLES: [&str; 4] = ["Baroque", "Cubism", "Expressionism", "Impressionism"];
const GENRES: [&str; 4] = ["Classical", "Jazz", "Metal", "Ambient"];
const DIM: usize = 16;
const N: usize = 200;

fn around(rng: &mut SeededRng, axis: usize, noise: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..DIM).map(|_| noise * rng.normal()).collect();
    v[axis] += 1.0;
    v
}

fn set(source: Source, prefix: &str, rows: Vec<Vec<f64>>) -> EmbeddingSet {
    EmbeddingSet::from_rows(
        source,
        Modality::Raw,
        DIM,
        rows.into_iter()
            .enumerate()
            .map(|(i, r)| (format!("{prefix}{i:04}"), r)),
    )
    .expect("synthetic rows are valid")
}

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "synthetic".into()));
    fs::create_dir_all(&dir)?;
    let mut rng = SeededRng::new(7);

    let labels: Vec<usize> = (0..N).map(|_| rng.below(STYLES.len())).collect();
    let images: Vec<Vec<f64>> = labels.iter().map(|&k| around(&mut rng, k, 0.2)).collect();
    let audio: Vec<Vec<f64>> = labels.iter().map(|&k| around(&mut rng, k, 0.2)).collect();
    let generated: Vec<Vec<f64>> = audio
        .iter()
        .map(|a| a.iter().map(|v| v + 0.05 * rng.normal()).collect())
        .collect();

    let write = |name: &str, s: &EmbeddingSet| {
        xmeb::write_path(&dir.join(name), s).map_err(|e| std::io::Error::other(e.to_string()))
    };
    write("images.xmeb", &set(Source::Image, "w", images))?;
    write("audio.xmeb", &set(Source::Audio, "t", audio.clone()))?;
    write("reference.xmeb", &set(Source::Audio, "g", audio))?;
    write("generated.xmeb", &set(Source::Audio, "g", generated))?;

    let mut meta = BufWriter::new(File::create(dir.join("metadata.jsonl"))?);
    for (i, &k) in labels.iter().enumerate() {
        writeln!(meta, "{{\"id\":\"w{i:04}\",\"style\":\"{}\"}}", STYLES[k])?;
    }
    // tracks get the genre of their own planted direction
    for (i, &k) in labels.iter().enumerate() {
        writeln!(meta, "{{\"id\":\"t{i:04}\",\"genre\":\"{}\"}}", GENRES[k])?;
    }
    meta.flush()?;

    let mut caps = BufWriter::new(File::create(dir.join("captions.jsonl"))?);
    for i in 0..N {
        let clip = 0.5 + 0.5 * rng.unit();
        let pac = 0.5 + 0.5 * rng.unit();
        writeln!(
            caps,
            "{{\"id\":\"w{i:04}\",\"kind\":\"image\",\"caption\":\"a painting\",\"clip_score\":{clip},\"pac_score\":{pac}}}"
        )?;
        let bert = 0.8 + 0.2 * rng.unit();
        writeln!(
            caps,
            "{{\"id\":\"t{i:04}\",\"kind\":\"audio\",\"caption\":\"slow piano with soft strings\",\"segments\":[\"slow piano\",\"soft strings and piano\"],\"bert_score\":{bert}}}"
        )?;
    }
    caps.flush()?;
    println!("wrote synthetic dataset to {}", dir.display());
    Ok(())
}
