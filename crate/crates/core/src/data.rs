//! Discretized tabular datasets, CSV ingestion and the schema-config file format.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mining::{discretize, DiscretizeParams};
use crate::model::{Instance, LabelSet, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Categorical,
    Numeric,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Feature {
    pub name: String,
    pub kind: FeatureKind,
    /// Sorted levels of a categorical feature; codes index into this list.
    pub levels: Vec<String>,
    /// Strictly increasing cut points of a numeric feature. A value's bin is
    /// the number of cut points `<=` the value.
    pub cuts: Vec<f64>,
}

impl Feature {
    /// Whether the feature can produce any predicate at all.
    pub fn is_minable(&self) -> bool {
        match self.kind {
            FeatureKind::Categorical => !self.levels.is_empty(),
            FeatureKind::Numeric => !self.cuts.is_empty(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Schema {
    features: Vec<Feature>,
    index: HashMap<String, usize>,
}

impl Schema {
    pub fn new(features: Vec<Feature>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, f) in features.iter().enumerate() {
            if index.insert(f.name.clone(), i).is_some() {
                return Err(Error::Schema(format!("duplicate feature `{}`", f.name)));
            }
        }
        Ok(Schema { features, index })
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn feature(&self, name: &str) -> Option<(usize, &Feature)> {
        self.index.get(name).map(|&i| (i, &self.features[i]))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }
}

/// Raw column contents used to build a [`TabularDataset`].
#[derive(Clone, Debug)]
pub enum ColumnData {
    /// An empty `levels` list means "the sorted distinct values".
    Categorical {
        values: Vec<String>,
        levels: Vec<String>,
    },
    Numeric {
        values: Vec<f64>,
        cuts: Vec<f64>,
    },
}

impl ColumnData {
    pub fn categorical<S: Into<String>>(values: impl IntoIterator<Item = S>) -> Self {
        ColumnData::Categorical {
            values: values.into_iter().map(Into::into).collect(),
            levels: Vec::new(),
        }
    }

    pub fn numeric(values: Vec<f64>, cuts: Vec<f64>) -> Self {
        ColumnData::Numeric { values, cuts }
    }

    fn len(&self) -> usize {
        match self {
            ColumnData::Categorical { values, .. } => values.len(),
            ColumnData::Numeric { values, .. } => values.len(),
        }
    }
}

/// Rectangular, immutable dataset of discretized feature codes plus optional
/// ground-truth and black-box label columns.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularDataset {
    schema: Schema,
    codes: Vec<Vec<u32>>,
    numeric: Vec<Option<Vec<f64>>>,
    labels: LabelSet,
    label_name: String,
    label: Option<Vec<u32>>,
    blackbox_name: String,
    blackbox: Option<Vec<u32>>,
    n_rows: usize,
}

#[derive(Clone, Debug, Default)]
pub struct LabelColumns {
    pub label: Option<Vec<String>>,
    pub blackbox: Option<Vec<String>>,
    /// Fixed label order; inferred (sorted) from the columns when absent.
    pub labels: Option<Vec<String>>,
    pub label_name: Option<String>,
    pub blackbox_name: Option<String>,
}

impl TabularDataset {
    pub fn new(columns: Vec<(String, ColumnData)>, label_columns: LabelColumns) -> Result<Self> {
        let n_rows = columns
            .first()
            .map(|(_, c)| c.len())
            .or(label_columns.label.as_ref().map(Vec::len))
            .unwrap_or(0);
        let mut features = Vec::with_capacity(columns.len());
        let mut codes = Vec::with_capacity(columns.len());
        let mut numeric = Vec::with_capacity(columns.len());
        for (name, data) in columns {
            if data.len() != n_rows {
                return Err(Error::Schema(format!(
                    "column `{name}` has {} rows, expected {n_rows}",
                    data.len()
                )));
            }
            match data {
                ColumnData::Categorical { values, levels } => {
                    let levels = if levels.is_empty() {
                        values.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect()
                    } else {
                        levels
                    };
                    let lookup: HashMap<&str, u32> =
                        levels.iter().enumerate().map(|(i, l)| (l.as_str(), i as u32)).collect();
                    let col = values
                        .iter()
                        .map(|v| {
                            lookup
                                .get(v.as_str())
                                .copied()
                                .ok_or_else(|| Error::Schema(format!("`{name}` has undeclared level `{v}`")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    codes.push(col);
                    numeric.push(None);
                    features.push(Feature {
                        name,
                        kind: FeatureKind::Categorical,
                        levels,
                        cuts: Vec::new(),
                    });
                }
                ColumnData::Numeric { values, cuts } => {
                    if cuts.iter().any(|c| !c.is_finite()) || cuts.windows(2).any(|w| w[0] >= w[1]) {
                        return Err(Error::Schema(format!(
                            "cut points of `{name}` must be finite and strictly increasing"
                        )));
                    }
                    if values.iter().any(|v| !v.is_finite()) {
                        return Err(Error::Schema(format!("`{name}` has a non-finite value")));
                    }
                    codes.push(values.iter().map(|&v| bin_of(&cuts, v)).collect());
                    numeric.push(Some(values));
                    features.push(Feature {
                        name,
                        kind: FeatureKind::Numeric,
                        levels: Vec::new(),
                        cuts,
                    });
                }
            }
        }

        let labels = match label_columns.labels {
            Some(l) => LabelSet::new(l)?,
            None => {
                let all: BTreeSet<&String> = label_columns
                    .label
                    .iter()
                    .chain(label_columns.blackbox.iter())
                    .flatten()
                    .collect();
                if all.is_empty() {
                    return Err(Error::Schema(
                        "no label set: provide a label column or an explicit label list".into(),
                    ));
                }
                LabelSet::new(all.into_iter().cloned().collect())?
            }
        };
        let encode = |col: Option<Vec<String>>| -> Result<Option<Vec<u32>>> {
            col.map(|c| {
                if c.len() != n_rows {
                    return Err(Error::Schema("label column length mismatch".into()));
                }
                c.iter().map(|l| labels.index_of(l)).collect()
            })
            .transpose()
        };
        let label = encode(label_columns.label)?;
        let blackbox = encode(label_columns.blackbox)?;

        Ok(TabularDataset {
            schema: Schema::new(features)?,
            codes,
            numeric,
            label_name: label_columns.label_name.unwrap_or_else(|| "label".into()),
            blackbox_name: label_columns.blackbox_name.unwrap_or_else(|| "blackbox".into()),
            labels,
            label,
            blackbox,
            n_rows,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn column(&self, feature: usize) -> &[u32] {
        &self.codes[feature]
    }

    pub fn numeric_values(&self, feature: usize) -> Option<&[f64]> {
        self.numeric[feature].as_deref()
    }

    pub fn labels(&self) -> &LabelSet {
        &self.labels
    }

    pub fn label(&self) -> Option<&[u32]> {
        self.label.as_deref()
    }

    pub fn blackbox(&self) -> Option<&[u32]> {
        self.blackbox.as_deref()
    }

    pub fn require_label(&self) -> Result<&[u32]> {
        self.label().ok_or(Error::MissingColumn("label"))
    }

    pub fn require_blackbox(&self) -> Result<&[u32]> {
        self.blackbox().ok_or(Error::MissingColumn("blackbox"))
    }

    pub fn with_blackbox(mut self, blackbox: Vec<u32>) -> Result<Self> {
        if blackbox.len() != self.n_rows || blackbox.iter().any(|&b| b as usize >= self.labels.len()) {
            return Err(Error::Schema("black-box column does not match the dataset".into()));
        }
        self.blackbox = Some(blackbox);
        Ok(self)
    }

    pub fn instance(&self, row: usize) -> Instance {
        self.schema
            .features()
            .iter()
            .zip(&self.codes)
            .map(|(f, col)| {
                let code = col[row];
                let value = match f.kind {
                    FeatureKind::Categorical => Value::Level(f.levels[code as usize].clone()),
                    FeatureKind::Numeric => Value::Bin(code),
                };
                (f.name.clone(), value)
            })
            .collect()
    }

    /// The subset of rows at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> TabularDataset {
        let pick = |col: &Vec<u32>| indices.iter().map(|&i| col[i]).collect::<Vec<_>>();
        TabularDataset {
            schema: self.schema.clone(),
            codes: self.codes.iter().map(pick).collect(),
            numeric: self
                .numeric
                .iter()
                .map(|c| c.as_ref().map(|v| indices.iter().map(|&i| v[i]).collect()))
                .collect(),
            labels: self.labels.clone(),
            label_name: self.label_name.clone(),
            label: self.label.as_ref().map(pick),
            blackbox_name: self.blackbox_name.clone(),
            blackbox: self.blackbox.as_ref().map(pick),
            n_rows: indices.len(),
        }
    }

    /// Shuffles rows with `seed` and cuts them into train/test/validation parts.
    /// No stratification; rows keep their original relative order inside each part.
    pub fn split(&self, ratios: &SplitRatios, seed: u64) -> Result<Split> {
        ratios.validate()?;
        let mut idx: Vec<usize> = (0..self.n_rows).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n = self.n_rows as f64;
        let n_train = (n * ratios.train).round() as usize;
        let n_test = ((n * ratios.test).round() as usize).min(self.n_rows - n_train);
        let part = |range: std::ops::Range<usize>| {
            let mut p = idx[range].to_vec();
            p.sort_unstable();
            self.select(&p)
        };
        Ok(Split {
            train: part(0..n_train),
            test: part(n_train..n_train + n_test),
            validation: part(n_train + n_test..self.n_rows),
        })
    }

    /// The schema config that reloads a written CSV to exactly this dataset.
    pub fn schema_config(&self) -> SchemaConfig {
        let mut columns: Vec<ColumnConfig> = self
            .schema
            .features()
            .iter()
            .map(|f| ColumnConfig {
                name: f.name.clone(),
                kind: f.kind,
                role: Role::Feature,
                cuts: (f.kind == FeatureKind::Numeric).then(|| f.cuts.clone()),
                levels: (f.kind == FeatureKind::Categorical).then(|| f.levels.clone()),
            })
            .collect();
        if self.label.is_some() {
            columns.push(ColumnConfig::label_like(&self.label_name, Role::Label));
        }
        if self.blackbox.is_some() {
            columns.push(ColumnConfig::label_like(&self.blackbox_name, Role::Blackbox));
        }
        SchemaConfig {
            columns,
            n_bins: None,
            labels: Some(self.labels.labels().to_vec()),
        }
    }

    pub fn write_csv_to<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<&str> = self.schema.features().iter().map(|f| f.name.as_str()).collect();
        if self.label.is_some() {
            header.push(&self.label_name);
        }
        if self.blackbox.is_some() {
            header.push(&self.blackbox_name);
        }
        out.write_record(&header).map_err(csv_io)?;
        let mut record = Vec::with_capacity(header.len());
        for row in 0..self.n_rows {
            record.clear();
            for (i, f) in self.schema.features().iter().enumerate() {
                record.push(match (&self.numeric[i], f.kind) {
                    (Some(values), _) => format!("{}", values[row]),
                    (None, _) => f.levels[self.codes[i][row] as usize].clone(),
                });
            }
            for col in [&self.label, &self.blackbox].into_iter().flatten() {
                record.push(self.labels.get(col[row]).to_string());
            }
            out.write_record(&record).map_err(csv_io)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv_to(File::create(path)?)
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

pub(crate) fn bin_of(cuts: &[f64], v: f64) -> u32 {
    cuts.partition_point(|&c| c <= v) as u32
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub test: f64,
    pub validation: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.70,
            test: 0.25,
            validation: 0.05,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.test, self.validation];
        if parts.iter().any(|&p| p <= 0.0) || ((parts.iter().sum::<f64>()) - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split ratios must be positive and sum to 1, got {parts:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Split {
    pub train: TabularDataset,
    pub test: TabularDataset,
    pub validation: TabularDataset,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Feature,
    Label,
    Blackbox,
    Ignore,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnConfig {
    pub name: String,
    pub kind: FeatureKind,
    pub role: Role,
    /// Fixed cut points; quantile cuts are derived when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cuts: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
}

impl ColumnConfig {
    fn label_like(name: &str, role: Role) -> Self {
        ColumnConfig {
            name: name.into(),
            kind: FeatureKind::Categorical,
            role,
            cuts: None,
            levels: None,
        }
    }
}

/// `{columns: [{name, kind, role}], n_bins?, labels?}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemaConfig {
    pub columns: Vec<ColumnConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl SchemaConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_reader(File::open(path)?)?)
    }
}

/// A parsed CSV before any typing: header plus string cells and their
/// 1-based file line numbers.
#[derive(Clone, Debug)]
pub struct RawTable {
    pub source: PathBuf,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub lines: Vec<u64>,
}

impl RawTable {
    pub fn from_reader<R: Read>(reader: R, source: impl Into<PathBuf>) -> Result<Self> {
        let source = source.into();
        let mut rdr = csv::ReaderBuilder::new()
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let csv_err = |source: &PathBuf, e: csv::Error| Error::Csv {
            path: source.clone(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        };
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| csv_err(&source, e))?
            .iter()
            .map(str::to_string)
            .collect();
        if header.is_empty() || header.iter().all(String::is_empty) {
            return Err(Error::Csv {
                path: source,
                line: 1,
                message: "missing header row".into(),
            });
        }
        let mut rows = Vec::new();
        let mut lines = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_err(&source, e))?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != header.len() {
                return Err(Error::Csv {
                    path: source,
                    line,
                    message: format!("expected {} fields, found {}", header.len(), rec.len()),
                });
            }
            rows.push(rec.iter().map(str::to_string).collect());
            lines.push(line);
        }
        Ok(RawTable {
            source,
            header,
            rows,
            lines,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        RawTable::from_reader(File::open(path)?, path)
    }
}

/// Reads and discretizes a CSV file as declared by `config`.
pub fn load_csv(path: impl AsRef<Path>, config: &SchemaConfig) -> Result<TabularDataset> {
    let raw = RawTable::read(path)?;
    let params = DiscretizeParams {
        n_bins: config.n_bins.unwrap_or(DiscretizeParams::default().n_bins),
    };
    Ok(discretize(&raw, config, &params)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> SchemaConfig {
        serde_json::from_str(
            r#"{"columns":[
                {"name":"age","kind":"numeric","role":"feature"},
                {"name":"race","kind":"categorical","role":"feature"},
                {"name":"y","kind":"categorical","role":"label"}],
               "n_bins": 2}"#,
        )
        .unwrap()
    }

    fn write(dir: &tempfile::TempDir, body: &str) -> PathBuf {
        let p = dir.path().join("d.csv");
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn happy_path() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "age,race,y\n20,a,0\n40,b,1\n60,a,1\n");
        let d = load_csv(&p, &config()).unwrap();
        assert_eq!(d.n_rows(), 3);
        assert_eq!(d.require_label().unwrap(), &[0, 1, 1]);
        assert_eq!(d.schema().feature("age").unwrap().1.cuts, vec![40.0]);
        assert_eq!(d.column(0), &[0, 1, 1]);
    }

    #[test]
    fn ragged_row_cites_file_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "age,race,y\n20,a,0\n40,b\n60,a,1\n");
        match load_csv(&p, &config()).unwrap_err() {
            Error::Csv { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn declared_label_absent_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "age,race\n20,a\n");
        let mut cfg = config();
        cfg.columns.retain(|c| c.name != "y");
        cfg.columns.push(ColumnConfig::label_like("outcome", Role::Label));
        assert!(matches!(load_csv(&p, &cfg).unwrap_err(), Error::Schema(_)));
    }

    #[test]
    fn undeclared_column_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "age,race,y,zip\n20,a,0,1\n");
        assert!(matches!(load_csv(&p, &config()).unwrap_err(), Error::Schema(_)));
    }

    #[test]
    fn bad_numeric_cell_cites_line_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "age,race,y\n20,a,0\nold,b,1\n");
        match load_csv(&p, &config()).unwrap_err() {
            Error::Csv { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("age"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn missing_cell_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "age,race,y\n20,,0\n");
        assert!(load_csv(&p, &config()).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "age,race,y\n20.5,a,0\n40,b,1\n60,a,1\n-3e-7,b,0\n");
        let d = load_csv(&p, &config()).unwrap();
        let out = dir.path().join("out.csv");
        d.write_csv(&out).unwrap();
        let again = load_csv(&out, &d.schema_config()).unwrap();
        assert_eq!(again, d);
    }

    #[test]
    fn split_sizes_and_determinism() {
        let n = 1000;
        let d = TabularDataset::new(
            vec![(
                "x".into(),
                ColumnData::numeric((0..n).map(f64::from).collect(), vec![500.0]),
            )],
            LabelColumns {
                label: Some((0..n).map(|i| (i % 2).to_string()).collect()),
                ..Default::default()
            },
        )
        .unwrap();
        let s = d.split(&SplitRatios::default(), 3).unwrap();
        assert_eq!(
            (s.train.n_rows(), s.test.n_rows(), s.validation.n_rows()),
            (700, 250, 50)
        );
        let again = d.split(&SplitRatios::default(), 3).unwrap();
        assert_eq!(s.test, again.test);
        let bad = SplitRatios {
            train: 0.5,
            test: 0.5,
            validation: 0.1,
        };
        assert!(d.split(&bad, 3).is_err());
    }
}
