//! Handcrafted per-context features and their z-score normalization.
//!
//! Feature files are CSV with header `id,f_1,...,f_F`. Empty cells are missing
//! values: the loader fills them with the column mean so the table is dense,
//! and remembers where they were so that a fold's normalizer maps them to 0
//! (the training mean) rather than to the all-rows mean.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::corpus::Corpus;
use crate::error::{Error, LineError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    names: Vec<String>,
    ids: Vec<String>,
    values: Vec<Vec<f64>>,
    /// Column indices that were imputed, per row.
    missing: Vec<BTreeSet<usize>>,
    index: HashMap<String, usize>,
}

impl FeatureTable {
    /// Builds a dense table; `None` cells are imputed to the column mean.
    pub fn new(names: Vec<String>, rows: Vec<(String, Vec<Option<f64>>)>) -> Result<Self> {
        let width = names.len();
        if width == 0 {
            return Err(Error::invalid("feature table has no columns"));
        }
        let mut sums = vec![0.0; width];
        let mut counts = vec![0usize; width];
        let mut index = HashMap::with_capacity(rows.len());
        for (i, (id, cells)) in rows.iter().enumerate() {
            if cells.len() != width {
                return Err(Error::invalid(format!(
                    "row '{id}' has {} values, expected {width}",
                    cells.len()
                )));
            }
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate feature row '{id}'")));
            }
            for (j, c) in cells.iter().enumerate() {
                match c {
                    Some(v) if !v.is_finite() => {
                        return Err(Error::invalid(format!(
                            "row '{id}' column {} is not finite",
                            names[j]
                        )))
                    }
                    Some(v) => {
                        sums[j] += v;
                        counts[j] += 1;
                    }
                    None => {}
                }
            }
        }
        let means: Vec<f64> = sums
            .iter()
            .zip(&counts)
            .map(|(&s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
            .collect();
        let mut ids = Vec::with_capacity(rows.len());
        let mut values = Vec::with_capacity(rows.len());
        let mut missing = Vec::with_capacity(rows.len());
        for (id, cells) in rows {
            let mut gaps = BTreeSet::new();
            let row = cells
                .into_iter()
                .enumerate()
                .map(|(j, c)| {
                    c.unwrap_or_else(|| {
                        gaps.insert(j);
                        means[j]
                    })
                })
                .collect();
            ids.push(id);
            values.push(row);
            missing.push(gaps);
        }
        Ok(FeatureTable {
            names,
            ids,
            values,
            missing,
            index,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn width(&self) -> usize {
        self.names.len()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn row(&self, id: &str) -> Option<&[f64]> {
        self.index.get(id).map(|&i| self.values[i].as_slice())
    }

    pub fn is_missing(&self, id: &str, column: usize) -> bool {
        self.index
            .get(id)
            .is_some_and(|&i| self.missing[i].contains(&column))
    }

    /// Normalized row for `id`; imputed cells come out as exactly 0.
    pub fn normalized(&self, stats: &NormStats, id: &str) -> Result<Vec<f64>> {
        let &i = self
            .index
            .get(id)
            .ok_or_else(|| Error::invalid(format!("no feature row for '{id}'")))?;
        let mut z = apply_normalizer(stats, &self.values[i])?;
        for &j in &self.missing[i] {
            z[j] = 0.0;
        }
        Ok(z)
    }
}

/// Per-feature mean and sample standard deviation fitted on training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub fitted_on: usize,
}

impl NormStats {
    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn is_zero_variance(&self, j: usize) -> bool {
        self.sd[j] == 0.0
    }

    pub fn zero_variance_columns(&self) -> Vec<usize> {
        (0..self.width()).filter(|&j| self.is_zero_variance(j)).collect()
    }
}

/// Fits column means and sample sds over `train_ids` only. Imputed cells are
/// left out of the statistics.
pub fn fit_normalizer<'a, I>(table: &FeatureTable, train_ids: I) -> Result<NormStats>
where
    I: IntoIterator<Item = &'a str>,
{
    let rows: Vec<usize> = train_ids
        .into_iter()
        .map(|id| {
            table
                .index
                .get(id)
                .copied()
                .ok_or_else(|| Error::invalid(format!("training id '{id}' has no feature row")))
        })
        .collect::<Result<_>>()?;
    if rows.len() < 2 {
        return Err(Error::invalid(format!(
            "normalizer needs at least 2 training rows, got {}",
            rows.len()
        )));
    }
    let width = table.width();
    let mut mean = vec![0.0; width];
    let mut sd = vec![0.0; width];
    for j in 0..width {
        let observed: Vec<f64> = rows
            .iter()
            .filter(|&&i| !table.missing[i].contains(&j))
            .map(|&i| table.values[i][j])
            .collect();
        if observed.is_empty() {
            mean[j] = table.values[rows[0]][j];
            continue;
        }
        let n = observed.len() as f64;
        let m = observed.iter().sum::<f64>() / n;
        mean[j] = m;
        if observed.len() > 1 {
            let var = observed.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
            sd[j] = var.sqrt();
        }
        // Treat numerically-constant columns as constant.
        if sd[j] <= f64::EPSILON * m.abs() {
            sd[j] = 0.0;
        }
    }
    Ok(NormStats {
        mean,
        sd,
        fitted_on: rows.len(),
    })
}

/// `(v - mean) / sd` per feature; zero-variance features map to 0.
pub fn apply_normalizer(stats: &NormStats, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != stats.width() {
        return Err(Error::invalid(format!(
            "feature vector has length {}, normalizer expects {}",
            v.len(),
            stats.width()
        )));
    }
    Ok(v.iter()
        .zip(stats.mean.iter().zip(&stats.sd))
        .map(|(x, (m, s))| if *s == 0.0 { 0.0 } else { (x - m) / s })
        .collect())
}

#[derive(Debug, Clone)]
pub struct LoadedFeatures {
    pub table: FeatureTable,
    pub warnings: Vec<String>,
}

pub fn read_features_csv<R: Read>(reader: R, path: &Path) -> Result<LoadedFeatures> {
    let input_err = |line: usize, message: String| Error::Input {
        path: path.to_path_buf(),
        errors: vec![LineError { line, message }],
    };
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| input_err(1, format!("unreadable header: {e}")))?
        .clone();
    if header.get(0).map(str::trim) != Some("id") || header.len() < 2 {
        return Err(input_err(1, "header must be id,f_1,...,f_F".into()));
    }
    let names: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                errors.push(LineError {
                    line,
                    message: format!("malformed row: {e}"),
                });
                continue;
            }
        };
        if rec.len() != names.len() + 1 {
            errors.push(LineError {
                line,
                message: format!(
                    "ragged row: {} cells, expected {}",
                    rec.len(),
                    names.len() + 1
                ),
            });
            continue;
        }
        let id = rec[0].trim().to_string();
        let mut cells = Vec::with_capacity(names.len());
        let mut bad = false;
        for (j, cell) in rec.iter().skip(1).enumerate() {
            let cell = cell.trim();
            if cell.is_empty() {
                warnings.push(format!(
                    "line {line}: '{id}' missing {}, imputed to column mean",
                    names[j]
                ));
                cells.push(None);
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => cells.push(Some(v)),
                _ => {
                    errors.push(LineError {
                        line,
                        message: format!("non-numeric cell '{cell}' in column {}", names[j]),
                    });
                    bad = true;
                    break;
                }
            }
        }
        if !bad {
            rows.push((id, cells));
        }
    }
    if !errors.is_empty() {
        return Err(Error::Input {
            path: path.to_path_buf(),
            errors,
        });
    }
    let table = FeatureTable::new(names, rows).map_err(|e| input_err(0, e.to_string()))?;
    Ok(LoadedFeatures { table, warnings })
}

pub fn load_features(path: impl AsRef<Path>) -> Result<LoadedFeatures> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_features_csv(file, path)
}

pub fn write_features_csv<W: Write>(table: &FeatureTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let to_err = |e: csv::Error| Error::invalid(format!("writing features: {e}"));
    let mut header = vec!["id".to_string()];
    header.extend(table.names.iter().cloned());
    w.write_record(&header).map_err(to_err)?;
    for (i, id) in table.ids.iter().enumerate() {
        let mut rec = vec![id.clone()];
        rec.extend(table.values[i].iter().enumerate().map(|(j, v)| {
            if table.missing[i].contains(&j) {
                String::new()
            } else {
                v.to_string()
            }
        }));
        w.write_record(&rec).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::invalid(format!("writing features: {e}")))?;
    Ok(())
}

/// Three cheap per-context features (word count, occurrence count, mean word
/// length). They exist so the fusion path can be exercised end to end without
/// an external feature file.
pub fn demo_features(corpus: &Corpus) -> FeatureTable {
    let names = ["word_count", "occurrence_count", "mean_word_len"]
        .map(String::from)
        .to_vec();
    let rows = corpus
        .records()
        .iter()
        .map(|r| {
            let words: Vec<&str> = r.snippet().split_whitespace().collect();
            let n = words.len().max(1) as f64;
            let mean_len = words.iter().map(|w| w.chars().count()).sum::<usize>() as f64 / n;
            (
                r.id().to_string(),
                vec![
                    Some(words.len() as f64),
                    Some(r.occurrences().len() as f64),
                    Some(mean_len),
                ],
            )
        })
        .collect();
    FeatureTable::new(names, rows).expect("demo features are well formed")
}
