use super::table::{Cell, Column, RawTable};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// The ten machine-measured ECG features, in canonical order.
pub const ECG_FEATURES: [&str; 10] = [
    "rr_interval",
    "p_onset",
    "p_end",
    "qrs_onset",
    "qrs_end",
    "t_end",
    "p_axis",
    "qrs_axis",
    "t_axis",
    "qrs_duration",
];

pub const LABEL_COLUMN: &str = "wct_label";
pub const SUBJECT_COLUMN: &str = "subject_id";
pub const STUDY_COLUMN: &str = "study_id";

/// Numeric feature matrix with a missing-value mask and binary labels.
///
/// Missing entries hold NaN and have their mask bit set.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub missing_mask: Vec<bool>,
    pub labels: Vec<u8>,
    pub feature_names: Vec<String>,
    pub subject_ids: Vec<i64>,
    pub study_ids: Vec<i64>,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<u8>, feature_names: Vec<String>) -> Result<Self> {
        let n = features.n_rows();
        let ids: Vec<i64> = (0..n as i64).collect();
        let missing_mask = features.as_slice().iter().map(|v| v.is_nan()).collect();
        let ds = Self {
            features,
            missing_mask,
            labels,
            feature_names,
            subject_ids: ids.clone(),
            study_ids: ids,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, d) = (self.features.n_rows(), self.features.n_cols());
        if d == 0 {
            return Err(Error::Schema("dataset needs at least one feature".into()));
        }
        if self.feature_names.len() != d {
            return Err(Error::Schema(format!(
                "{} feature names for {d} columns",
                self.feature_names.len()
            )));
        }
        if self.labels.len() != n || self.subject_ids.len() != n || self.study_ids.len() != n {
            return Err(Error::Schema("labels/ids length differs from row count".into()));
        }
        if self.missing_mask.len() != n * d {
            return Err(Error::Schema("missing mask has the wrong shape".into()));
        }
        if let Some(&bad) = self.labels.iter().find(|&&l| l > 1) {
            return Err(Error::Value(format!("label {bad} is not binary")));
        }
        for (v, &m) in self.features.as_slice().iter().zip(&self.missing_mask) {
            if !m && !v.is_finite() {
                return Err(Error::Value("non-finite value outside the missing mask".into()));
            }
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.features.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    pub fn positive_rate(&self) -> f64 {
        self.labels.iter().map(|&l| f64::from(l)).sum::<f64>() / self.n_rows().max(1) as f64
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn subset(&self, rows: &[usize]) -> Self {
        let d = self.n_features();
        Self {
            features: self.features.select_rows(rows),
            missing_mask: rows
                .iter()
                .flat_map(|&r| self.missing_mask[r * d..(r + 1) * d].iter().copied())
                .collect(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            feature_names: self.feature_names.clone(),
            subject_ids: rows.iter().map(|&r| self.subject_ids[r]).collect(),
            study_ids: rows.iter().map(|&r| self.study_ids[r]).collect(),
        }
    }

    /// Extract features and labels from a table. Non-numeric or missing
    /// feature cells become masked NaN; every label must be 0 or 1.
    pub fn from_table(t: &RawTable, features: &[&str], label: &str) -> Result<Self> {
        let n = t.n_rows();
        let cols: Vec<&Column> = features.iter().map(|f| t.require(f)).collect::<Result<_>>()?;
        for c in &cols {
            if !c.is_numeric() {
                return Err(Error::Schema(format!("feature column '{}' is not numeric", c.name)));
            }
        }
        let mut data = Vec::with_capacity(n * cols.len());
        let mut mask = Vec::with_capacity(n * cols.len());
        for i in 0..n {
            for c in &cols {
                let v = c.cells[i].as_number();
                data.push(v.unwrap_or(f64::NAN));
                mask.push(v.is_none());
            }
        }
        let labels = t
            .require(label)?
            .cells
            .iter()
            .enumerate()
            .map(|(row, c)| match c.as_number() {
                Some(v) if v == 0.0 || v == 1.0 => Ok(v as u8),
                _ => Err(Error::Value(format!("row {row}: label '{c}' is not 0 or 1"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        let ids = |name: &str| -> Vec<i64> {
            match t.column(name) {
                Some(c) => c
                    .cells
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v.as_number().map_or(i as i64, |x| x as i64))
                    .collect(),
                None => (0..n as i64).collect(),
            }
        };
        let ds = Self {
            features: Matrix::from_vec(n, cols.len(), data)?,
            missing_mask: mask,
            labels,
            feature_names: features.iter().map(|s| (*s).to_owned()).collect(),
            subject_ids: ids(SUBJECT_COLUMN),
            study_ids: ids(STUDY_COLUMN),
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Columns: subject_id, study_id, features..., wct_label.
    pub fn to_table(&self) -> RawTable {
        let d = self.n_features();
        let num = |v: f64| Cell::Number(v);
        let mut cols = vec![
            Column::new(SUBJECT_COLUMN, self.subject_ids.iter().map(|&v| num(v as f64)).collect()),
            Column::new(STUDY_COLUMN, self.study_ids.iter().map(|&v| num(v as f64)).collect()),
        ];
        for (j, name) in self.feature_names.iter().enumerate() {
            let cells = (0..self.n_rows())
                .map(|i| {
                    if self.missing_mask[i * d + j] {
                        Cell::Missing
                    } else {
                        num(self.features.get(i, j))
                    }
                })
                .collect();
            cols.push(Column::new(name.clone(), cells));
        }
        cols.push(Column::new(LABEL_COLUMN, self.labels.iter().map(|&l| num(f64::from(l))).collect()));
        RawTable::new(cols).expect("dataset columns are consistent")
    }
}
