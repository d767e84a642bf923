use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{Corpus, CorpusError, Origin};

pub const REVIEWS_FILE: &str = "reviews.ndjson";
pub const ORG_FILE: &str = "org.ndjson";
pub const MODULES_FILE: &str = "modules.ndjson";

/// The three interchange files making up a corpus.
#[derive(Debug, Clone)]
pub struct CorpusPaths {
    pub reviews: PathBuf,
    pub org: PathBuf,
    pub modules: PathBuf,
}

impl CorpusPaths {
    /// Standard file names inside `dir`.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            reviews: dir.join(REVIEWS_FILE),
            org: dir.join(ORG_FILE),
            modules: dir.join(MODULES_FILE),
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> CorpusError {
    CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read_records<T: DeserializeOwned>(path: &Path) -> Result<(Vec<T>, Vec<usize>), CorpusError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let name = path.display().to_string();
    let mut records = Vec::new();
    let mut lines = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| CorpusError::malformed(&name, i + 1, e.to_string()))?;
        records.push(rec);
        lines.push(i + 1);
    }
    Ok((records, lines))
}

/// Loads and validates a corpus from its three line-delimited files.
pub fn load_corpus(
    reviews_path: impl AsRef<Path>,
    org_path: impl AsRef<Path>,
    modules_path: impl AsRef<Path>,
) -> Result<Corpus, CorpusError> {
    let (reviews_path, org_path, modules_path) =
        (reviews_path.as_ref(), org_path.as_ref(), modules_path.as_ref());
    let (reviews, r_lines) = read_records(reviews_path)?;
    let (assignments, a_lines) = read_records(org_path)?;
    let (modules, m_lines) = read_records(modules_path)?;
    let (rn, an, mn) = (
        reviews_path.display().to_string(),
        org_path.display().to_string(),
        modules_path.display().to_string(),
    );
    Corpus::validated(
        reviews,
        assignments,
        modules,
        [
            Origin { file: &rn, lines: &r_lines },
            Origin { file: &an, lines: &a_lines },
            Origin { file: &mn, lines: &m_lines },
        ],
    )
}

pub fn load_corpus_dir(dir: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let p = CorpusPaths::in_dir(dir);
    load_corpus(&p.reviews, &p.org, &p.modules)
}

fn write_records<T: Serialize>(path: &Path, records: &[T]) -> Result<(), CorpusError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).expect("corpus records always serialize");
        writeln!(out, "{line}").map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))
}

pub fn write_corpus(corpus: &Corpus, paths: &CorpusPaths) -> Result<(), CorpusError> {
    write_records(&paths.reviews, corpus.reviews())?;
    write_records(&paths.org, corpus.assignments())?;
    write_records(&paths.modules, corpus.modules())
}

pub fn write_corpus_dir(corpus: &Corpus, dir: impl AsRef<Path>) -> Result<(), CorpusError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    write_corpus(corpus, &CorpusPaths::in_dir(dir))
}
