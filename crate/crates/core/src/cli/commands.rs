//! Command implementations.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use super::{
    CvArgs, ExplainArgs, Failure, PredictArgs, PrepArgs, ReportArgs, RunConfig, SynthArgs, TrainArgs,
};
use crate::dataio::{
    generate_synthetic, parse_measurements_csv, prepare, Cell, Column, Dataset, PrepConfig, RawTable,
    SynthConfig, LABEL_COLUMN,
};
use crate::ensemble::ModelKind;
use crate::error::{Error, Result};
use crate::eval::{cross_validate, describe, read_cv_csv, Metric};
use crate::explain::{beeswarm_points, ensemble_shap, shap_summary};
use crate::features::{derive_interval_features, Preprocess, DERIVED_FEATURES};
use crate::matrix::Matrix;
use crate::model::ModelFile;

type CmdResult = std::result::Result<(), Failure>;

/// Columns the derived features are computed from.
const DERIVED_SOURCES: [&str; 4] = ["qrs_onset", "qrs_end", "qrs_duration", "rr_interval"];

/// Run `f` on a pool of `threads` workers (all cores when not positive).
fn with_threads<R: Send>(threads: i64, f: impl FnOnce() -> R + Send) -> std::result::Result<R, Failure> {
    let n = usize::try_from(threads).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Failure::usage(Error::Config(format!("cannot start {threads} threads: {e}"))))?;
    Ok(pool.install(f))
}

/// Refuse to overwrite an input file.
fn distinct(input: &Path, outputs: &[&Path]) -> CmdResult {
    let canon = |p: &Path| std::fs::canonicalize(p).ok();
    let src = canon(input);
    for out in outputs {
        if src.is_some() && canon(out) == src {
            return Err(Failure::usage(Error::Config(format!(
                "output {} would overwrite the input",
                out.display()
            ))));
        }
    }
    Ok(())
}

fn read_table(path: &Path) -> Result<RawTable> {
    let file = File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("cannot open {}: {e}", path.display())))
    })?;
    parse_measurements_csv(std::io::BufReader::new(file))
}

fn write_table(t: &RawTable, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    t.to_csv(&mut w)?;
    std::io::Write::flush(&mut w)?;
    Ok(())
}

/// Labeled dataset with the configured features, plus the derived ones when
/// requested.
fn training_dataset(t: &RawTable, rc: &RunConfig) -> Result<Dataset> {
    let mut names: Vec<&str> = rc.features.iter().map(String::as_str).collect();
    if rc.derived {
        for s in DERIVED_SOURCES {
            if !names.contains(&s) {
                names.push(s);
            }
        }
    }
    let ds = Dataset::from_table(t, &names, LABEL_COLUMN)?;
    if !rc.derived {
        return Ok(ds);
    }
    let ds = derive_interval_features(&ds)?;
    let mut wanted: Vec<String> = rc.features.clone();
    wanted.extend(DERIVED_FEATURES.iter().map(|s| (*s).to_owned()));
    select_named(&ds, &wanted)
}

/// Dataset restricted to `names`, in that order.
fn select_named(ds: &Dataset, names: &[String]) -> Result<Dataset> {
    let idx: Vec<usize> = names
        .iter()
        .map(|n| ds.feature_index(n).ok_or_else(|| Error::Schema(format!("missing column '{n}'"))))
        .collect::<Result<_>>()?;
    let d = ds.n_features();
    let mut mask = Vec::with_capacity(ds.n_rows() * idx.len());
    for i in 0..ds.n_rows() {
        mask.extend(idx.iter().map(|&j| ds.missing_mask[i * d + j]));
    }
    Ok(Dataset {
        features: ds.features.select_cols(&idx),
        missing_mask: mask,
        feature_names: names.to_vec(),
        ..ds.clone()
    })
}

/// Raw inputs for a saved model, in the model's feature order. A missing
/// model column is a model/data mismatch; a missing label is tolerated.
fn model_inputs(model: &ModelFile, t: &RawTable) -> std::result::Result<Dataset, Failure> {
    let wanted = model.feature_names();
    let derived: Vec<&String> = wanted.iter().filter(|n| DERIVED_FEATURES.contains(&n.as_str())).collect();
    let mut base: Vec<&str> = wanted
        .iter()
        .map(String::as_str)
        .filter(|n| !DERIVED_FEATURES.contains(n))
        .collect();
    if !derived.is_empty() {
        for s in DERIVED_SOURCES {
            if !base.contains(&s) {
                base.push(s);
            }
        }
    }
    if let Some(missing) = base.iter().find(|n| t.column(n).is_none()) {
        return Err(Failure::model(Error::Schema(format!(
            "model expects column '{missing}', absent from the data"
        ))));
    }
    let mut t = t.clone();
    if t.column(LABEL_COLUMN).is_none() {
        let zeros = vec![Cell::Number(0.0); t.n_rows()];
        t.upsert_column(Column::new(LABEL_COLUMN, zeros)).map_err(Failure::data)?;
    }
    let mut ds = Dataset::from_table(&t, &base, LABEL_COLUMN).map_err(Failure::data)?;
    if !derived.is_empty() {
        ds = derive_interval_features(&ds).map_err(Failure::data)?;
    }
    select_named(&ds, wanted).map_err(Failure::model)
}

fn parse_kind(s: &str) -> std::result::Result<ModelKind, Failure> {
    s.trim().parse::<ModelKind>().map_err(Failure::usage)
}

pub(super) fn synth(a: &SynthArgs) -> CmdResult {
    let cfg = SynthConfig::calibrated(a.n, a.prevalence, a.seed);
    cfg.validate().map_err(Failure::usage)?;
    let ds = generate_synthetic(&cfg).map_err(Failure::usage)?;
    write_table(&ds.to_table(), &a.out).map_err(Failure::data)?;
    log::info!("wrote {} rows ({:.4} positive) to {}", ds.n_rows(), ds.positive_rate(), a.out.display());
    Ok(())
}

pub(super) fn prep(a: &PrepArgs) -> CmdResult {
    distinct(&a.input, &[&a.out, &a.report])?;
    let raw = read_table(&a.input).map_err(Failure::data)?;
    let (clean, report) = prepare(&raw, &PrepConfig::default()).map_err(Failure::data)?;
    write_table(&clean, &a.out).map_err(Failure::data)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::data(e.into()))? + "\n";
    std::fs::write(&a.report, json).map_err(|e| Failure::data(e.into()))?;
    log::info!(
        "{} rows in, {} out, {} duplicates removed",
        report.rows_in,
        report.rows_out,
        report.duplicates_removed
    );
    Ok(())
}

pub(super) fn train(a: &TrainArgs) -> CmdResult {
    let kind = parse_kind(&a.model)?;
    let rc = a.run.resolve(&[kind]).map_err(Failure::usage)?;
    distinct(&a.data, &[&a.out])?;
    let t = read_table(&a.data).map_err(Failure::data)?;
    let ds = training_dataset(&t, &rc).map_err(Failure::data)?;
    let spec = rc.specs[0].with_seed(rc.seed);
    let file = with_threads(rc.threads, || -> Result<ModelFile> {
        let pre = Preprocess::fit(&ds.features, &ds.feature_names, &rc.preprocess)?;
        let x = pre.transform(&ds.features)?;
        let model = spec.fit(&x, &ds.labels)?;
        ModelFile::new(model, pre)
    })?
    .map_err(Failure::model)?;
    if let crate::ensemble::Model::Forest(m) = &file.model {
        if let Some(oob) = m.oob_score {
            log::info!("out-of-bag accuracy {oob:.4}");
        }
    }
    file.save(&a.out).map_err(Failure::data)?;
    log::info!("saved {} model to {}", kind.display_name(), a.out.display());
    Ok(())
}

pub(super) fn predict(a: &PredictArgs) -> CmdResult {
    distinct(&a.data, &[&a.out])?;
    distinct(&a.model, &[&a.out])?;
    let model = ModelFile::load(&a.model).map_err(Failure::model)?;
    let t = read_table(&a.data).map_err(Failure::data)?;
    let ds = model_inputs(&model, &t)?;
    let (labels, probs) = with_threads(a.threads, || model.predict(&ds.features))?.map_err(Failure::model)?;
    let mut out = String::from("sample_id,probability,label\n");
    for i in 0..ds.n_rows() {
        let _ = writeln!(out, "{},{},{}", ds.study_ids[i], probs[i], labels[i]);
    }
    std::fs::write(&a.out, out).map_err(|e| Failure::data(e.into()))?;
    log::info!("scored {} rows", ds.n_rows());
    Ok(())
}

pub(super) fn cv(a: &CvArgs) -> CmdResult {
    let kinds: Vec<ModelKind> = a.models.iter().map(|m| parse_kind(m)).collect::<std::result::Result<_, _>>()?;
    if kinds.is_empty() {
        return Err(Failure::usage(Error::Config("no models selected".into())));
    }
    let mut rc = a.run.resolve(&kinds).map_err(Failure::usage)?;
    if let Some(k) = a.k {
        rc.k = k;
        rc.validate().map_err(Failure::usage)?;
    }
    let mut outs: Vec<&Path> = vec![&a.out];
    outs.extend(a.json.as_deref());
    distinct(&a.data, &outs)?;
    let t = read_table(&a.data).map_err(Failure::data)?;
    let ds = training_dataset(&t, &rc).map_err(Failure::data)?;
    let positives = ds.labels.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == ds.n_rows() {
        return Err(Failure::model(Error::Fit("training labels contain a single class".into())));
    }
    let report = with_threads(rc.threads, || cross_validate(&rc.specs, &ds, rc.k, rc.seed, &rc.preprocess))?
        .map_err(Failure::model)?;
    let failed = report.rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        log::warn!("{failed} fold fits failed; their rows are left empty");
    }
    std::fs::write(&a.out, report.to_csv()).map_err(|e| Failure::data(e.into()))?;
    if let Some(path) = &a.json {
        let json = report.to_json().map_err(Failure::data)?;
        std::fs::write(path, json).map_err(|e| Failure::data(e.into()))?;
    }
    for agg in report.aggregate() {
        if let Some(acc) = agg.metrics.iter().find(|m| m.metric == "Accuracy").and_then(|m| m.test) {
            log::info!("{}: accuracy {:.4} (CV {:.2}%)", agg.model, acc.mean, acc.cv_percent);
        }
    }
    Ok(())
}

pub(super) fn explain(a: &ExplainArgs) -> CmdResult {
    distinct(&a.data, &[&a.out, &a.summary])?;
    distinct(&a.model, &[&a.out, &a.summary])?;
    let model = ModelFile::load(&a.model).map_err(Failure::model)?;
    let t = read_table(&a.data).map_err(Failure::data)?;
    let ds = model_inputs(&model, &t)?;
    let names = &model.preprocess.output_features;
    let (x, shap) = with_threads(a.threads, || -> Result<(Matrix, _)> {
        let x = model.preprocess.transform(&ds.features)?;
        let shap = ensemble_shap(&model.model, &x)?;
        Ok((x, shap))
    })?
    .map_err(Failure::model)?;
    let points = beeswarm_points(&shap, &x, names).map_err(Failure::model)?;
    let mut out = format!("# space={} base_value={}\n", shap.space.as_str(), shap.base_value);
    out.push_str("sample_id,feature,shap_value,feature_value\n");
    for p in &points {
        let _ = writeln!(out, "{},{},{},{}", ds.study_ids[p.sample], p.feature, p.shap_value, p.feature_value);
    }
    std::fs::write(&a.out, out).map_err(|e| Failure::data(e.into()))?;

    let ranking = shap_summary(&shap, names).map_err(Failure::model)?;
    let mut summary = String::from("feature,mean_abs_shap,rank\n");
    for e in &ranking.entries {
        let _ = writeln!(summary, "{},{},{}", e.feature, e.mean_abs_shap, e.rank);
    }
    std::fs::write(&a.summary, summary).map_err(|e| Failure::data(e.into()))?;
    if let Some(top) = ranking.top() {
        log::info!("most important feature: {top}");
    }
    Ok(())
}

pub(super) fn report(a: &ReportArgs) -> CmdResult {
    distinct(&a.cv, &[&a.out])?;
    let metric: Metric = a.metric.parse().map_err(Failure::usage)?;
    let text = std::fs::read_to_string(&a.cv).map_err(|e| Failure::data(e.into()))?;
    let columns = read_cv_csv(&text, metric).map_err(Failure::data)?;
    let mut out = String::from("Model,Metric,n,mean,std,cv_percent\n");
    for (model, values) in columns {
        match describe(&values) {
            Ok(s) => {
                let _ = writeln!(out, "{model},{},{},{},{},{}", metric.column(), s.n, s.mean, s.std, s.cv_percent);
            }
            Err(e) => {
                log::warn!("{model}: {e}");
                let _ = writeln!(out, "{model},{},{},,,", metric.column(), values.len());
            }
        }
    }
    std::fs::write(&a.out, out).map_err(|e| Failure::data(e.into()))?;
    Ok(())
}
