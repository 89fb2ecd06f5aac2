//! Turning a raw CSV table into a discretized dataset.
//!
//! Numeric columns are cut at empirical quantiles (linear interpolation between
//! order statistics) unless the schema config pins the cut points. Cut points
//! that do not split the observed data are dropped; a numeric column left with
//! no cut point still loads but produces no predicates.

use serde::{Deserialize, Serialize};

use crate::data::{ColumnData, FeatureKind, LabelColumns, RawTable, Role, SchemaConfig, TabularDataset};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscretizeParams {
    pub n_bins: usize,
}

impl Default for DiscretizeParams {
    fn default() -> Self {
        DiscretizeParams { n_bins: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cuts: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<String>,
    /// True when the feature yields no predicates (e.g. a constant column).
    pub excluded: bool,
}

/// Everything needed to discretize future rows identically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationSpec {
    pub n_bins: usize,
    pub features: Vec<FeatureSpec>,
    pub warnings: Vec<String>,
}

impl DiscretizationSpec {
    /// `config` with every cut point and level frozen to this spec.
    pub fn freeze(&self, config: &SchemaConfig) -> SchemaConfig {
        let mut out = config.clone();
        for col in &mut out.columns {
            if let Some(f) = self.features.iter().find(|f| f.name == col.name) {
                match f.kind {
                    FeatureKind::Numeric => col.cuts = Some(f.cuts.clone()),
                    FeatureKind::Categorical => col.levels = Some(f.levels.clone()),
                }
            }
        }
        out.n_bins = Some(self.n_bins);
        out
    }
}

/// Cut points at the `k / n_bins` quantiles, keeping only those that split
/// the data (`min < cut <= max`).
pub fn quantile_cuts(values: &[f64], n_bins: usize) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    let mut cuts: Vec<f64> = Vec::new();
    for k in 1..n_bins {
        let pos = k as f64 / n_bins as f64 * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let frac = pos - lo as f64;
        let hi = (lo + 1).min(sorted.len() - 1);
        let cut = sorted[lo] + frac * (sorted[hi] - sorted[lo]);
        if cut > min && cut <= max && cuts.last().is_none_or(|&last| cut > last) {
            cuts.push(cut);
        }
    }
    cuts
}

pub fn discretize(
    raw: &RawTable,
    config: &SchemaConfig,
    params: &DiscretizeParams,
) -> Result<(TabularDataset, DiscretizationSpec)> {
    if params.n_bins < 2 {
        return Err(Error::Config("n_bins must be at least 2".into()));
    }
    for col in &raw.header {
        if !config.columns.iter().any(|c| &c.name == col) {
            return Err(Error::Schema(format!(
                "column `{col}` is not declared in the schema config"
            )));
        }
    }
    let mut seen_roles = (false, false);
    for c in &config.columns {
        if !raw.header.contains(&c.name) {
            return Err(Error::Schema(format!(
                "declared column `{}` is missing from {}",
                c.name,
                raw.source.display()
            )));
        }
        let flag = match c.role {
            Role::Label => &mut seen_roles.0,
            Role::Blackbox => &mut seen_roles.1,
            _ => continue,
        };
        if std::mem::replace(flag, true) {
            return Err(Error::Schema(format!("more than one {:?} column", c.role)));
        }
    }

    let cell_err = |row: usize, message: String| Error::Csv {
        path: raw.source.clone(),
        line: raw.lines[row],
        message,
    };
    let strings = |col: usize, name: &str| -> Result<Vec<String>> {
        raw.rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                if row[col].is_empty() {
                    Err(cell_err(r, format!("missing value in column `{name}`")))
                } else {
                    Ok(row[col].clone())
                }
            })
            .collect()
    };

    let mut columns = Vec::new();
    let mut features = Vec::new();
    let mut warnings = Vec::new();
    let mut labels = LabelColumns {
        labels: config.labels.clone(),
        ..Default::default()
    };
    for (col, name) in raw.header.iter().enumerate() {
        let cfg = config.columns.iter().find(|c| &c.name == name).expect("checked above");
        match cfg.role {
            Role::Ignore => {}
            Role::Label => {
                labels.label = Some(strings(col, name)?);
                labels.label_name = Some(name.clone());
            }
            Role::Blackbox => {
                labels.blackbox = Some(strings(col, name)?);
                labels.blackbox_name = Some(name.clone());
            }
            Role::Feature => match cfg.kind {
                FeatureKind::Numeric => {
                    let values = strings(col, name)?
                        .iter()
                        .enumerate()
                        .map(|(r, s)| match s.parse::<f64>() {
                            Ok(v) if v.is_finite() => Ok(v),
                            _ => Err(cell_err(r, format!("column `{name}`: `{s}` is not a finite number"))),
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let cuts = match &cfg.cuts {
                        Some(c) => c.clone(),
                        None => quantile_cuts(&values, params.n_bins),
                    };
                    let excluded = cuts.is_empty();
                    if excluded {
                        warnings.push(format!(
                            "numeric column `{name}` has no usable cut point and is excluded from predicate generation"
                        ));
                    }
                    features.push(FeatureSpec {
                        name: name.clone(),
                        kind: FeatureKind::Numeric,
                        cuts: cuts.clone(),
                        levels: Vec::new(),
                        excluded,
                    });
                    columns.push((name.clone(), ColumnData::Numeric { values, cuts }));
                }
                FeatureKind::Categorical => {
                    let values = strings(col, name)?;
                    let levels = match &cfg.levels {
                        Some(l) => l.clone(),
                        None => {
                            let mut l = values.clone();
                            l.sort();
                            l.dedup();
                            l
                        }
                    };
                    features.push(FeatureSpec {
                        name: name.clone(),
                        kind: FeatureKind::Categorical,
                        cuts: Vec::new(),
                        levels: levels.clone(),
                        excluded: levels.is_empty(),
                    });
                    columns.push((name.clone(), ColumnData::Categorical { values, levels }));
                }
            },
        }
    }
    let data = TabularDataset::new(columns, labels)?;
    Ok((
        data,
        DiscretizationSpec {
            n_bins: params.n_bins,
            features,
            warnings,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ColumnConfig;

    fn table(body: &str) -> RawTable {
        RawTable::from_reader(body.as_bytes(), "mem.csv").unwrap()
    }

    fn cfg(cols: &[(&str, FeatureKind, Role)]) -> SchemaConfig {
        SchemaConfig {
            columns: cols
                .iter()
                .map(|&(n, k, r)| ColumnConfig {
                    name: n.into(),
                    kind: k,
                    role: r,
                    cuts: None,
                    levels: None,
                })
                .collect(),
            n_bins: None,
            labels: None,
        }
    }

    #[test]
    fn two_bins_cut_at_median() {
        assert_eq!(quantile_cuts(&[1.0, 2.0, 3.0, 4.0], 2), vec![2.5]);
        assert_eq!(quantile_cuts(&[4.0, 3.0, 2.0, 1.0], 2), vec![2.5]);
    }

    #[test]
    fn constant_column_has_no_cuts() {
        assert!(quantile_cuts(&[5.0, 5.0, 5.0], 4).is_empty());
        let raw = table("x,y\n5,a\n5,b\n5,a\n");
        let (d, spec) = discretize(
            &raw,
            &cfg(&[
                ("x", FeatureKind::Numeric, Role::Feature),
                ("y", FeatureKind::Categorical, Role::Label),
            ]),
            &DiscretizeParams::default(),
        )
        .unwrap();
        assert!(spec.features[0].excluded);
        assert_eq!(spec.warnings.len(), 1);
        assert!(!d.schema().features()[0].is_minable());
    }

    #[test]
    fn categorical_levels_enumerated() {
        let raw = table("c,y\nb,0\na,1\nb,1\n");
        let (d, spec) = discretize(
            &raw,
            &cfg(&[
                ("c", FeatureKind::Categorical, Role::Feature),
                ("y", FeatureKind::Categorical, Role::Label),
            ]),
            &DiscretizeParams::default(),
        )
        .unwrap();
        assert_eq!(spec.features[0].levels, vec!["a", "b"]);
        assert_eq!(d.column(0), &[1, 0, 1]);
    }

    #[test]
    fn frozen_spec_reproduces_codes() {
        let raw = table("x,y\n1,0\n7,1\n3,1\n9,0\n2,0\n");
        let config = cfg(&[
            ("x", FeatureKind::Numeric, Role::Feature),
            ("y", FeatureKind::Categorical, Role::Label),
        ]);
        let (d, spec) = discretize(&raw, &config, &DiscretizeParams { n_bins: 3 }).unwrap();
        let frozen = spec.freeze(&config);
        let (d2, spec2) = discretize(&raw, &frozen, &DiscretizeParams { n_bins: 3 }).unwrap();
        assert_eq!(d, d2);
        assert_eq!(
            serde_json::to_string(&spec).unwrap(),
            serde_json::to_string(&spec2).unwrap()
        );
    }

    #[test]
    fn one_bin_is_rejected() {
        let raw = table("x\n1\n");
        assert!(discretize(
            &raw,
            &cfg(&[("x", FeatureKind::Numeric, Role::Feature)]),
            &DiscretizeParams { n_bins: 1 }
        )
        .is_err());
    }
}
