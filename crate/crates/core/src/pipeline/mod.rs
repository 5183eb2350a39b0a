//! End-to-end orchestration: stages, artifacts and the hashed manifest.

mod config;
mod report;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

pub use config::{ConfigError, RunConfig, INPUT_FILES};
pub use report::{emit_group_means, emit_scatter_data, group_mean_rows, scatter_rows, GroupMeanRow, Quadrant, ScatterRow};

use crate::cohort::{assign_cohorts, mixed_anova, pairwise_time_comparisons, panel_observations, CohortTable};
use crate::graph::{build_snapshot, GraphSummary, SnapshotGraph};
use crate::ingest::{
    align_periods, apportion_expenditure, assign_venues_to_wards_with, parse_expenditure, parse_imd,
    parse_transitions, parse_venues, parse_wards, ExpenditureTable, ImdTable, IngestError, PeriodConfig, PeriodMap,
    TransitionLog, VenueTable, WardSet,
};
use crate::metrics::{build_metrics_panel_with, MetricsError, PanelInputs, WardMetricsPanel};
use crate::par;
use crate::predict::{
    assemble_dataset, evaluate_cv, forest_importance, subset_by_change, train_classifier_with, AssembledDataset,
    ClassifierKind, CvConfig, EvaluationReport, FeatureSet, PredictError,
};

/// Version tag written into every JSON artifact.
pub const SPEC_VERSION: &str = "1.0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Ingest,
    Graph,
    Metrics,
    Cohort,
    Anova,
    Predict,
    Report,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Graph => "graph",
            Stage::Metrics => "metrics",
            Stage::Cohort => "cohort",
            Stage::Anova => "anova",
            Stage::Predict => "predict",
            Stage::Report => "report",
        }
    }
}

/// Process exit status by failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExitStatus {
    Success = 0,
    ConfigError = 1,
    DataError = 2,
    InternalError = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{} stage: {message}", stage.as_str())]
pub struct StageError {
    pub stage: Stage,
    pub status: ExitStatus,
    pub message: String,
}

impl StageError {
    fn new(stage: Stage, status: ExitStatus, message: impl ToString) -> Self {
        StageError { stage, status, message: message.to_string() }
    }
}

impl From<ConfigError> for StageError {
    fn from(e: ConfigError) -> Self {
        StageError::new(Stage::Config, ExitStatus::ConfigError, e)
    }
}

/// The five parsed input tables.
pub struct Inputs {
    pub venues: VenueTable,
    pub transitions: TransitionLog,
    pub wards: WardSet,
    pub expenditure: ExpenditureTable,
    pub imd: ImdTable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileRejections {
    pub file: &'static str,
    pub input_rows: u64,
    pub rejected: usize,
    pub by_reason: BTreeMap<String, usize>,
}

impl Inputs {
    pub fn load(cfg: &RunConfig) -> Result<Self, StageError> {
        cfg.check_inputs().map_err(|e| StageError::new(Stage::Ingest, ExitStatus::DataError, e))?;
        let [v, t, w, e, i] = cfg.input_paths()?;
        let data = |e: IngestError| StageError::new(Stage::Ingest, ExitStatus::DataError, e);
        let venues = parse_venues(v).map_err(data)?;
        let transitions = parse_transitions(t, &venues).map_err(data)?;
        Ok(Inputs {
            venues,
            transitions,
            wards: parse_wards(w).map_err(data)?,
            expenditure: parse_expenditure(e).map_err(data)?,
            imd: parse_imd(i).map_err(data)?,
        })
    }

    pub fn rejections(&self) -> Vec<FileRejections> {
        let f = |file, input_rows, r: &crate::ingest::Rejections| FileRejections {
            file,
            input_rows,
            rejected: r.len(),
            by_reason: r.by_reason(),
        };
        vec![
            f(INPUT_FILES[0], self.venues.input_rows, &self.venues.rejections),
            f(INPUT_FILES[1], self.transitions.input_rows, &self.transitions.rejections),
            f(INPUT_FILES[2], self.wards.input_rows, &self.wards.rejections),
            f(INPUT_FILES[3], self.expenditure.input_rows, &self.expenditure.rejections),
            f(INPUT_FILES[4], self.imd.input_rows, &self.imd.rejections),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotSummary {
    pub t: usize,
    pub fiscal_year: String,
    #[serde(flatten)]
    pub summary: GraphSummary,
}

/// Graphs plus the ward metrics panel built from them.
pub struct Network {
    pub periods: PeriodMap,
    pub graphs: Vec<SnapshotGraph>,
    pub summaries: Vec<SnapshotSummary>,
    pub unassigned_venues: usize,
}

pub fn build_network(cfg: &RunConfig, inputs: &Inputs) -> Result<(Network, WardMetricsPanel), StageError> {
    let graph_err = |e: IngestError| StageError::new(Stage::Graph, ExitStatus::DataError, e);
    let fiscal_years =
        if cfg.fiscal_years.is_empty() { inputs.expenditure.fiscal_years() } else { cfg.fiscal_years.clone() };
    let periods = align_periods(&PeriodConfig { fiscal_years, offset: cfg.period_offset }).map_err(graph_err)?;
    let exec = cfg.exec;
    let years = periods.calendar_years();
    let n = inputs.venues.len();
    let graphs: Vec<SnapshotGraph> = par::map_slice(exec, &years, |&y| build_snapshot(&inputs.transitions, n, y));
    let clustering: Vec<Vec<f64>> = graphs.iter().map(|g| g.all_local_clustering_with(exec)).collect();
    let summaries = periods
        .periods()
        .iter()
        .zip(graphs.iter().zip(&clustering))
        .map(|(p, (g, c))| SnapshotSummary { t: p.t, fiscal_year: p.fiscal_year.clone(), summary: g.summarize_with(c) })
        .collect();

    let metrics_err = |e: IngestError| StageError::new(Stage::Metrics, ExitStatus::DataError, e);
    let index = assign_venues_to_wards_with(exec, &inputs.venues, &inputs.wards);
    let expenditure = apportion_expenditure(&inputs.expenditure, &inputs.wards).map_err(metrics_err)?;
    let panel = build_metrics_panel_with(
        exec,
        &PanelInputs {
            periods: &periods,
            graphs: &graphs,
            clustering: Some(&clustering),
            venues: &inputs.venues,
            wards: &inputs.wards,
            index: &index,
            expenditure: &expenditure,
        },
    )
    .map_err(|e: MetricsError| StageError::new(Stage::Metrics, ExitStatus::InternalError, e))?;
    Ok((Network { periods, graphs, summaries, unassigned_venues: index.unassigned }, panel))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableAnova {
    pub variable: &'static str,
    pub wards: usize,
    pub dropped_wards: usize,
    pub mixed: Option<crate::cohort::MixedAnova>,
    pub pairwise: Option<Vec<crate::cohort::PairwiseComparison>>,
    pub error: Option<String>,
}

/// Mixed ANOVA and pairwise follow-ups per configured variable. A failure
/// on one variable is recorded, not fatal.
pub fn run_anova(cfg: &RunConfig, panel: &WardMetricsPanel, cohorts: &CohortTable) -> Vec<VariableAnova> {
    cfg.anova_variables
        .iter()
        .map(|&v| {
            let (obs, dropped) = panel_observations(panel, cohorts, v);
            let wards = obs.len() / panel.periods().len().max(1);
            let (mixed, pairwise, error) = match (mixed_anova(&obs), pairwise_time_comparisons(&obs)) {
                (Ok(m), Ok(p)) => (Some(m), Some(p), None),
                (Err(e), _) | (_, Err(e)) => (None, None, Some(e.to_string())),
            };
            VariableAnova { variable: v.name(), wards, dropped_wards: dropped, mixed, pairwise, error }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetEvaluation {
    pub threshold: u32,
    pub samples: usize,
    pub improved: usize,
    pub worsened: usize,
    pub report: Option<EvaluationReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub dataset: AssembledDataset,
    pub evaluation: EvaluationReport,
    pub subsets: Vec<SubsetEvaluation>,
    pub importance: Vec<(String, f64)>,
    /// Full model first, then the three single-class ablations.
    pub ablation: Vec<(FeatureSet, EvaluationReport)>,
}

pub fn cv_config(cfg: &RunConfig) -> Result<CvConfig, ConfigError> {
    cfg.validate_analysis()?;
    Ok(CvConfig {
        kinds: cfg.classifiers.clone(),
        k: cfg.k,
        seed: cfg.seed.ok_or(ConfigError::Missing("seed"))?,
        params: cfg.params,
        exec: cfg.exec,
    })
}

fn predict_err(e: PredictError) -> StageError {
    let status = match e {
        PredictError::SingleClass | PredictError::ClassTooSmall { .. } => ExitStatus::DataError,
        PredictError::BadFoldCount(_) => ExitStatus::ConfigError,
        PredictError::SchemaMismatch { .. } | PredictError::NotForest(_) => ExitStatus::InternalError,
    };
    StageError::new(Stage::Predict, status, e)
}

pub fn run_prediction(
    cfg: &RunConfig,
    panel: &WardMetricsPanel,
    inputs: &Inputs,
    ablation: bool,
) -> Result<Prediction, StageError> {
    let cv = cv_config(cfg)?;
    let dataset = assemble_dataset(panel, &inputs.imd, &inputs.wards, cfg.centre);
    let data = &dataset.dataset;
    let evaluation = evaluate_cv(data, &cv).map_err(predict_err)?;
    let subsets = cfg
        .subset_thresholds
        .iter()
        .map(|&threshold| {
            let sub = subset_by_change(data, threshold);
            let (improved, worsened) = sub.class_counts();
            let (report, error) = match evaluate_cv(&sub, &cv) {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            };
            SubsetEvaluation { threshold, samples: sub.len(), improved, worsened, report, error }
        })
        .collect();
    let all: Vec<_> = data.samples.iter().collect();
    let forest = train_classifier_with(cfg.exec, ClassifierKind::RandomForest, &all, &cfg.params, cv.seed)
        .map_err(predict_err)?;
    let importance = forest_importance(&forest).map_err(predict_err)?;
    let mut ablations = vec![(FeatureSet::Full, evaluation.clone())];
    if ablation {
        for fs in &FeatureSet::ALL[1..] {
            ablations.push((*fs, evaluate_cv(&fs.apply(data), &cv).map_err(predict_err)?));
        }
    }
    Ok(Prediction { dataset, evaluation, subsets, importance, ablation: ablations })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArtifactEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Manifest {
    pub spec_version: &'static str,
    pub status: &'static str,
    pub failed_stage: Option<Stage>,
    pub error: Option<String>,
    pub artifacts: Vec<ArtifactEntry>,
}

pub const MANIFEST: &str = "manifest.json";

/// Writes artifacts into one directory and remembers their hashes.
pub struct ArtifactWriter {
    dir: PathBuf,
    entries: Vec<ArtifactEntry>,
}

/// `Write` adapter hashing everything that passes through.
struct Hashing<W> {
    inner: W,
    hash: Sha256,
    bytes: u64,
}

impl<W: Write> Write for Hashing<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hash.update(&buf[..n]);
        self.bytes += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

fn io_err(stage: Stage, path: &Path, e: impl std::fmt::Display) -> StageError {
    StageError::new(stage, ExitStatus::InternalError, format!("writing {}: {e}", path.display()))
}

impl ArtifactWriter {
    pub fn new(dir: &Path) -> Result<Self, StageError> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(Stage::Config, dir, e))?;
        Ok(ArtifactWriter { dir: dir.to_path_buf(), entries: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entries(&self) -> &[ArtifactEntry] {
        &self.entries
    }

    /// Creates `name`, lets `body` fill it and records the hash.
    pub fn write<E: std::fmt::Display>(
        &mut self,
        stage: Stage,
        name: &str,
        body: impl FnOnce(&mut dyn Write) -> Result<(), E>,
    ) -> Result<(), StageError> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| io_err(stage, &path, e))?;
        let mut w = Hashing { inner: BufWriter::new(file), hash: Sha256::new(), bytes: 0 };
        body(&mut w).map_err(|e| io_err(stage, &path, e))?;
        w.flush().map_err(|e| io_err(stage, &path, e))?;
        self.entries.retain(|e| e.name != name);
        self.entries.push(ArtifactEntry { name: name.into(), sha256: hex::encode(w.hash.finalize()), bytes: w.bytes });
        Ok(())
    }

    pub fn write_json(&mut self, stage: Stage, name: &str, value: &impl Serialize) -> Result<(), StageError> {
        let mut v = serde_json::to_value(value).map_err(|e| io_err(stage, Path::new(name), e))?;
        if let serde_json::Value::Object(m) = &mut v {
            m.insert("spec_version".into(), json!(SPEC_VERSION));
        }
        self.write(stage, name, |w| {
            serde_json::to_writer_pretty(&mut *w, &v)?;
            w.write_all(b"\n").map_err(serde_json::Error::io)
        })
    }

    /// Writes `manifest.json`; it lists every artifact except itself.
    pub fn finish(self, failure: Option<&StageError>) -> Result<Manifest, StageError> {
        let manifest = Manifest {
            spec_version: SPEC_VERSION,
            status: if failure.is_some() { "failed" } else { "ok" },
            failed_stage: failure.map(|f| f.stage),
            error: failure.map(|f| f.message.clone()),
            artifacts: self.entries,
        };
        let path = self.dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| io_err(Stage::Report, &path, e))?;
        std::fs::write(&path, text + "\n").map_err(|e| io_err(Stage::Report, &path, e))?;
        Ok(manifest)
    }
}

fn csv_done(w: &mut csv::Writer<&mut dyn Write>) -> csv::Result<()> {
    w.flush().map_err(csv::Error::from)
}

pub fn write_network_summary(out: &mut ArtifactWriter, net: &Network) -> Result<(), StageError> {
    out.write_json(
        Stage::Graph,
        "network_summary.json",
        &json!({ "unassigned_venues": net.unassigned_venues, "snapshots": net.summaries }),
    )
}

pub fn write_anova(out: &mut ArtifactWriter, cohorts: &CohortTable, anova: &[VariableAnova]) -> Result<(), StageError> {
    let sizes: BTreeMap<&str, usize> = cohorts.sizes().into_iter().map(|(g, n)| (g.as_str(), n)).collect();
    out.write_json(
        Stage::Anova,
        "anova.json",
        &json!({ "cohort_sizes": sizes, "excluded_wards": cohorts.excluded, "variables": anova }),
    )
}

pub fn write_prediction(out: &mut ArtifactWriter, pred: &Prediction) -> Result<(), StageError> {
    let (improved, worsened) = pred.dataset.dataset.class_counts();
    out.write_json(
        Stage::Predict,
        "evaluation.json",
        &json!({
            "samples": pred.dataset.dataset.len(),
            "improved": improved,
            "worsened": worsened,
            "excluded": pred.dataset.excluded,
            "full": pred.evaluation,
            "subsets": pred.subsets,
        }),
    )?;
    let schema = &pred.dataset.dataset.schema;
    out.write(Stage::Predict, "importance.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["feature", "class", "importance"])?;
        for (name, v) in &pred.importance {
            let class = schema.position(name).map(|p| format!("{:?}", schema.columns[p].class).to_lowercase());
            c.write_record([name.as_str(), class.as_deref().unwrap_or(""), &v.to_string()])?;
        }
        csv_done(&mut c)
    })?;
    let full: BTreeMap<ClassifierKind, Option<f64>> =
        pred.evaluation.classifiers.iter().map(|c| (c.classifier, c.mean_auc)).collect();
    out.write(Stage::Predict, "ablation.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["feature_set", "classifier", "features", "mean_auc", "mean_accuracy", "mean_precision", "auc_drop"])?;
        for (fs, rep) in &pred.ablation {
            for r in &rep.classifiers {
                let drop = full.get(&r.classifier).copied().flatten().zip(r.mean_auc).map(|(a, b)| a - b);
                c.write_record([
                    fs.as_str(),
                    r.classifier.as_str(),
                    &rep.features.to_string(),
                    &fmt_opt(r.mean_auc),
                    &r.mean_accuracy.to_string(),
                    &r.mean_precision.to_string(),
                    &fmt_opt(drop),
                ])?;
            }
        }
        csv_done(&mut c)
    })
}

pub(crate) use crate::metrics::fmt_opt;

/// What a command produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Ingest,
    Graph,
    Metrics,
    Cohort,
    Anova,
    Predict,
    Report,
    All,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub status: ExitStatus,
    pub manifest: Option<Manifest>,
    pub error: Option<StageError>,
}

/// Runs every stage `target` needs, writing its artifacts and a manifest
/// into the configured output directory. On failure, artifacts written so
/// far are kept and the manifest names the failing stage.
pub fn run(cfg: &RunConfig, target: Target) -> RunOutcome {
    let checked = if matches!(target, Target::Predict | Target::All) { cfg.validate() } else { cfg.validate_layout() };
    if let Err(e) = checked {
        return RunOutcome { status: ExitStatus::ConfigError, manifest: None, error: Some(e.into()) };
    }
    let mut out = match ArtifactWriter::new(cfg.output_dir.as_deref().expect("validated")) {
        Ok(w) => w,
        Err(e) => return RunOutcome { status: e.status, manifest: None, error: Some(e) },
    };
    let result = run_into(cfg, target, &mut out);
    let error = result.err();
    match out.finish(error.as_ref()) {
        Ok(m) => RunOutcome { status: error.as_ref().map_or(ExitStatus::Success, |e| e.status), manifest: Some(m), error },
        Err(e) => RunOutcome { status: ExitStatus::InternalError, manifest: None, error: Some(error.unwrap_or(e)) },
    }
}

/// The full analysis: the seven standard artifacts plus the manifest.
pub fn run_pipeline(cfg: &RunConfig) -> RunOutcome {
    run(cfg, Target::All)
}

fn run_into(cfg: &RunConfig, target: Target, out: &mut ArtifactWriter) -> Result<(), StageError> {
    let inputs = Inputs::load(cfg)?;
    if target == Target::Ingest {
        return out.write_json(Stage::Ingest, "ingest_report.json", &json!({ "files": inputs.rejections() }));
    }
    let (net, panel) = build_network(cfg, &inputs)?;
    if matches!(target, Target::Graph | Target::All) {
        write_network_summary(out, &net)?;
    }
    if target == Target::Graph {
        return Ok(());
    }
    if matches!(target, Target::Metrics | Target::All) {
        out.write(Stage::Metrics, "panel.csv", |w| panel.write_csv(w))?;
    }
    if matches!(target, Target::Predict | Target::All) {
        let pred = run_prediction(cfg, &panel, &inputs, true)?;
        write_prediction(out, &pred)?;
    }
    if matches!(target, Target::Metrics | Target::Predict) {
        return Ok(());
    }
    let cohorts = assign_cohorts(&panel, &inputs.imd, cfg.deprivation_threshold);
    if matches!(target, Target::Cohort | Target::All) {
        out.write(Stage::Cohort, "cohorts.csv", |w| cohorts.write_csv(w))?;
    }
    if matches!(target, Target::Anova | Target::All) {
        let anova = run_anova(cfg, &panel, &cohorts);
        write_anova(out, &cohorts, &anova)?;
    }
    if target == Target::Report {
        out.write(Stage::Report, "scatter.csv", |w| emit_scatter_data(&panel, &inputs.imd, w).map(|_| ()))?;
        out.write(Stage::Report, "group_means.csv", |w| {
            emit_group_means(&panel, &cohorts, &cfg.anova_variables, w).map(|_| ())
        })?;
    }
    Ok(())
}
