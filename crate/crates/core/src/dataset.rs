//! Scored screening datasets: ingestion, validation, and summaries.
//!
//! A dataset holds one binary activity flag per ligand and one real-valued
//! score per ligand per ranking algorithm. Larger scores always mean
//! stronger belief in activity; score columns produced by tools where
//! smaller is better should be listed in `negate` at load time.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// One named score column.
#[derive(Debug, Clone, Serialize)]
pub struct ScoreColumn {
    pub name: String,
    pub values: Vec<f64>,
}

/// Immutable scored dataset. Safe to share across threads.
#[derive(Debug, Clone, Serialize)]
pub struct ScoredDataset {
    ids: Vec<String>,
    activity: Vec<bool>,
    scores: Vec<ScoreColumn>,
}

/// Counts derived from the activity vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActivitySummary {
    pub n: usize,
    pub n_plus: usize,
    pub pi_hat: f64,
}

/// Options for CSV ingestion.
#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Field delimiter, comma by default.
    pub delimiter: u8,
    /// Extra labels accepted as active / inactive besides "1" / "0".
    /// When `None`, only the integer labels are accepted.
    pub activity_labels: Option<(Vec<String>, Vec<String>)>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            activity_labels: None,
        }
    }
}

impl ScoredDataset {
    /// Build a dataset from parts, validating lengths and score finiteness.
    ///
    /// Class balance is deliberately not enforced here; [`summarize`]
    /// rejects degenerate datasets where inference is required.
    pub fn new(ids: Vec<String>, activity: Vec<bool>, scores: Vec<ScoreColumn>) -> Result<Self> {
        let n = activity.len();
        if n == 0 {
            return Err(Error::InvalidArgument("dataset is empty".into()));
        }
        if ids.len() != n {
            return Err(Error::InvalidArgument(format!(
                "ids length {} != activity length {n}",
                ids.len()
            )));
        }
        for col in &scores {
            if col.values.len() != n {
                return Err(Error::Schema(format!(
                    "score column '{}' has length {} but activity has length {n}",
                    col.name,
                    col.values.len()
                )));
            }
            if let Some(row) = col.values.iter().position(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    row,
                    column: Some(col.name.clone()),
                    message: "score is NaN or infinite".into(),
                });
            }
        }
        let mut seen: Vec<&str> = Vec::new();
        for col in &scores {
            if seen.contains(&col.name.as_str()) {
                return Err(Error::Schema(format!(
                    "duplicate score column '{}'",
                    col.name
                )));
            }
            seen.push(&col.name);
        }
        Ok(Self {
            ids,
            activity,
            scores,
        })
    }

    pub fn n(&self) -> usize {
        self.activity.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn activity(&self) -> &[bool] {
        &self.activity
    }

    /// Algorithm names in load order.
    pub fn algorithms(&self) -> Vec<&str> {
        self.scores.iter().map(|c| c.name.as_str()).collect()
    }

    /// Scores for a named algorithm.
    pub fn scores(&self, algorithm: &str) -> Result<&[f64]> {
        self.scores
            .iter()
            .find(|c| c.name == algorithm)
            .map(|c| c.values.as_slice())
            .ok_or_else(|| Error::Schema(format!("unknown algorithm '{algorithm}'")))
    }
}

/// Count actives and estimate the activity rate.
///
/// Errors when the dataset is all-active or all-inactive, since every
/// downstream estimator needs both classes.
pub fn summarize(ds: &ScoredDataset) -> Result<ActivitySummary> {
    let n = ds.n();
    let n_plus = ds.activity().iter().filter(|&&a| a).count();
    if n_plus == 0 || n_plus == n {
        return Err(Error::DegenerateClasses(format!(
            "{n_plus} of {n} ligands active; need both classes"
        )));
    }
    Ok(ActivitySummary {
        n,
        n_plus,
        pi_hat: n_plus as f64 / n as f64,
    })
}

/// Load a dataset from CSV.
///
/// The file must have a header row. `activity_column` must contain only
/// binary labels ("0"/"1" unless `options.activity_labels` widens the
/// accepted set). Columns named in `negate` have their scores multiplied
/// by -1 so that larger always means more likely active. An `id` column is
/// used for labels when present; otherwise row indices are used.
pub fn load_csv(
    path: impl AsRef<Path>,
    activity_column: &str,
    score_columns: &[String],
    negate: &[String],
    options: &LoadOptions,
) -> Result<ScoredDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .from_path(path.as_ref())?;

    let headers = reader.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);

    let activity_idx = find(activity_column)
        .ok_or_else(|| Error::Schema(format!("missing activity column '{activity_column}'")))?;
    let id_idx = find("id");
    let mut score_idx = Vec::with_capacity(score_columns.len());
    for name in score_columns {
        let idx =
            find(name).ok_or_else(|| Error::Schema(format!("missing score column '{name}'")))?;
        score_idx.push(idx);
    }
    for name in negate {
        if !score_columns.contains(name) {
            return Err(Error::Schema(format!(
                "negate lists '{name}', which is not a requested score column"
            )));
        }
    }

    let mut ids = Vec::new();
    let mut activity = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); score_columns.len()];

    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let raw = record.get(activity_idx).unwrap_or("").trim();
        let active = parse_activity(raw, options).ok_or_else(|| Error::Parse {
            row,
            column: Some(activity_column.to_string()),
            message: format!("activity label '{raw}' is not binary"),
        })?;
        activity.push(active);
        ids.push(match id_idx {
            Some(i) => record.get(i).unwrap_or("").to_string(),
            None => row.to_string(),
        });
        for (k, &idx) in score_idx.iter().enumerate() {
            let cell = record.get(idx).unwrap_or("").trim();
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: Some(score_columns[k].clone()),
                message: format!("score '{cell}' is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: Some(score_columns[k].clone()),
                    message: "score is NaN or infinite".into(),
                });
            }
            columns[k].push(value);
        }
    }

    let scores = score_columns
        .iter()
        .zip(columns)
        .map(|(name, mut values)| {
            if negate.contains(name) {
                for v in &mut values {
                    *v = -*v;
                }
            }
            ScoreColumn {
                name: name.clone(),
                values,
            }
        })
        .collect();

    let ds = ScoredDataset::new(ids, activity, scores)?;
    summarize(&ds)?; // enforce both classes at load time
    Ok(ds)
}

fn parse_activity(raw: &str, options: &LoadOptions) -> Option<bool> {
    match raw {
        "1" => return Some(true),
        "0" => return Some(false),
        _ => {}
    }
    if let Some((active, inactive)) = &options.activity_labels {
        if active.iter().any(|l| l == raw) {
            return Some(true);
        }
        if inactive.iter().any(|l| l == raw) {
            return Some(false);
        }
    }
    None
}
