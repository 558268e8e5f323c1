//! End-to-end cleaning of a measurements table.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::clean::{deduplicate, normalize_timestamps, repair_implausible, PlausibilityRules};
use super::dataset::{LABEL_COLUMN, STUDY_COLUMN, SUBJECT_COLUMN};
use super::impute::{apply_impute, fit_impute_median};
use super::labels::{derive_wct_label, encode_labels, LabelCodec};
use super::table::{Cell, Column, RawTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepConfig {
    /// Columns that identify a record; dedup uses those present in the table.
    pub keys: Vec<String>,
    /// Timestamp columns converted to epoch seconds when present.
    pub timestamp_columns: Vec<String>,
    pub rules: PlausibilityRules,
    pub qrs_column: String,
    pub label_column: String,
}

impl Default for PrepConfig {
    fn default() -> Self {
        Self {
            keys: vec![SUBJECT_COLUMN.into(), STUDY_COLUMN.into()],
            timestamp_columns: vec!["ecg_time".into()],
            rules: PlausibilityRules::ecg_defaults(),
            qrs_column: "qrs_duration".into(),
            label_column: LABEL_COLUMN.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepReport {
    pub rows_in: usize,
    pub rows_out: usize,
    pub duplicates_removed: usize,
    pub flagged: BTreeMap<String, usize>,
    pub imputed: BTreeMap<String, usize>,
    pub codec: BTreeMap<String, LabelCodec>,
}

/// dedup → timestamp normalization → plausibility repair → median
/// imputation → categorical encoding → WCT labeling.
pub fn prepare(t: &RawTable, cfg: &PrepConfig) -> Result<(RawTable, PrepReport)> {
    t.require(&cfg.qrs_column)?;
    let rows_in = t.n_rows();

    let keys: Vec<&str> =
        cfg.keys.iter().map(String::as_str).filter(|k| t.column(k).is_some()).collect();
    let (t, duplicates_removed) =
        if keys.is_empty() { (t.clone(), 0) } else { deduplicate(t, &keys)? };

    let ts: Vec<&str> = cfg
        .timestamp_columns
        .iter()
        .map(String::as_str)
        .filter(|c| t.column(c).is_some())
        .collect();
    let t = normalize_timestamps(&t, &ts)?;

    let (t, flagged) = repair_implausible(&t, &cfg.rules);

    let impute_cols: Vec<&str> = cfg
        .rules
        .rules
        .keys()
        .map(String::as_str)
        .filter(|c| t.column(c).is_some())
        .collect();
    let state = fit_impute_median(&t, &impute_cols)?;
    let (mut t, counts) = apply_impute(&t, &state)?;
    let imputed = impute_cols.iter().map(|c| (*c).to_owned()).zip(counts).collect();

    let mut codec = BTreeMap::new();
    let categorical: Vec<String> = t
        .columns()
        .iter()
        .filter(|c| !c.is_numeric() && c.name != cfg.label_column)
        .map(|c| c.name.clone())
        .collect();
    for name in categorical {
        let col = t.require(&name)?;
        let values: Vec<Option<String>> = col
            .cells
            .iter()
            .map(|c| if c.is_missing() { Some(String::new()) } else { Some(c.to_string()) })
            .collect();
        let (codes, cdc) = encode_labels(&values)?;
        let cells = codes.into_iter().map(|c| Cell::Number(c as f64)).collect();
        t.upsert_column(Column::new(name.clone(), cells))?;
        codec.insert(name, cdc);
    }

    let labels = t
        .require(&cfg.qrs_column)?
        .cells
        .iter()
        .enumerate()
        .map(|(row, c)| {
            let v = c.as_number().ok_or_else(|| {
                Error::Value(format!("row {row}: '{}' is not numeric", cfg.qrs_column))
            })?;
            derive_wct_label(v).map(|l| Cell::Number(f64::from(l)))
        })
        .collect::<Result<Vec<_>>>()?;
    t.upsert_column(Column::new(cfg.label_column.clone(), labels))?;

    let report = PrepReport {
        rows_in,
        rows_out: t.n_rows(),
        duplicates_removed,
        flagged,
        imputed,
        codec,
    };
    Ok((t, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::table::parse_measurements_csv;

    #[test]
    fn full_pipeline_on_messy_input() {
        let src = "subject_id,study_id,ecg_time,cart,rr_interval,qrs_duration\n\
                   1,10,1970-01-01 00:00:00,B,-5,130\n\
                   1,10,1970-01-01 00:00:00,B,-5,130\n\
                   2,11,1970-01-02 00:00:00,A,800,\n\
                   3,12,1970-01-03 00:00:00,B,900,100\n";
        let t = parse_measurements_csv(src.as_bytes()).unwrap();
        let (out, rep) = prepare(&t, &PrepConfig::default()).unwrap();
        assert_eq!(rep.rows_in, 4);
        assert_eq!(rep.rows_out, 3);
        assert_eq!(rep.duplicates_removed, 1);
        assert_eq!(rep.flagged["rr_interval"], 1);
        assert_eq!(rep.imputed["rr_interval"], 1);
        assert_eq!(rep.imputed["qrs_duration"], 1);
        assert_eq!(rep.codec["cart"].encode("A"), Some(0));
        let ts: Vec<_> = out.column("ecg_time").unwrap().cells.iter().map(|c| c.as_number()).collect();
        assert_eq!(ts, vec![Some(0.0), Some(86_400.0), Some(172_800.0)]);
        // rr median of {800, 900}
        assert_eq!(out.column("rr_interval").unwrap().cells[0], Cell::Number(850.0));
        let labels: Vec<_> = out.column("wct_label").unwrap().cells.iter().map(|c| c.as_number()).collect();
        // qrs median of {130, 100} = 115 → 0
        assert_eq!(labels, vec![Some(1.0), Some(0.0), Some(0.0)]);
    }

    #[test]
    fn missing_qrs_column_is_schema_error() {
        let t = parse_measurements_csv("rr_interval\n800\n".as_bytes()).unwrap();
        let err = prepare(&t, &PrepConfig::default()).unwrap_err();
        assert!(err.to_string().contains("qrs_duration"));
    }
}
