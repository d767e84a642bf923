//! Feature-matrix files: CSV with a header of field names, one example per
//! row. `examples` appends the three label columns.

use std::io::Write;
use std::path::Path;

use revsignal::examples::TrainingExample;
use revsignal::features::FEATURE_NAMES;
use revsignal::learners::Matrix;

use crate::Failure;

pub const LABELS: [&str; 3] = ["participated", "comment_count", "log_feedback"];

pub fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(std::fs::File::create(p).map_err(|e| Failure::io(p, e))?),
        None => Box::new(std::io::stdout().lock()),
    })
}

pub fn write_examples(out: Option<&Path>, examples: &[TrainingExample], labels: bool) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(sink(out)?);
    let mut header = vec!["review_id", "candidate_id"];
    header.extend(FEATURE_NAMES);
    if labels {
        header.extend(LABELS);
    }
    w.write_record(&header).map_err(Failure::other)?;
    for e in examples {
        let mut rec = vec![e.review_id.clone(), e.candidate_id.clone()];
        rec.extend(e.features.to_array().iter().map(|v| v.to_string()));
        if labels {
            rec.push((e.participated as u8).to_string());
            rec.push(e.comment_count.to_string());
            rec.push(e.log_feedback.to_string());
        }
        w.write_record(&rec).map_err(Failure::other)?;
    }
    w.flush().map_err(Failure::other)
}

/// A feature-matrix file held as named numeric columns plus the two ids.
pub struct Table {
    pub ids: Vec<(String, String)>,
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self, Failure> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?;
        let header: Vec<String> = r.headers().map_err(Failure::other)?.iter().map(str::to_string).collect();
        if header.len() < 2 || header[0] != "review_id" || header[1] != "candidate_id" {
            return Err(Failure::validation(format!(
                "{}: expected review_id and candidate_id as the first columns",
                path.display()
            )));
        }
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?;
            ids.push((rec[0].to_string(), rec[1].to_string()));
            let vals = rec
                .iter()
                .skip(2)
                .map(|v| v.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Failure::validation(format!("{}: row {}: {e}", path.display(), i + 2)))?;
            rows.push(vals);
        }
        Ok(Self { ids, header, rows })
    }

    fn position(&self, name: &str) -> Result<usize, Failure> {
        self.header
            .iter()
            .skip(2)
            .position(|h| h == name)
            .ok_or_else(|| Failure::validation(format!("missing column {name:?}")))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>, Failure> {
        let j = self.position(name)?;
        Ok(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn matrix(&self, columns: &[String]) -> Result<Matrix, Failure> {
        let idx = columns.iter().map(|c| self.position(c)).collect::<Result<Vec<_>, _>>()?;
        let rows: Vec<Vec<f64>> = self.rows.iter().map(|r| idx.iter().map(|&j| r[j]).collect()).collect();
        if rows.is_empty() {
            return Ok(Matrix::new(0, columns.len(), Vec::new(), columns.to_vec())?);
        }
        Ok(Matrix::from_rows(&rows, columns.to_vec())?)
    }
}
