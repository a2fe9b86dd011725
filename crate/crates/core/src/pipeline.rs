//! End-to-end configuration, feature assembly and evaluation drivers.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{FixedOffset, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::AugmentConfig;
use crate::classify::GbdtConfig;
use crate::cograph::{self, CoocConfig, CoocGraph};
use crate::embed::{generate_walks, train_skipgram, EmbeddingMatrix, SkipGramConfig, WalkConfig};
use crate::evaluate::{run_ablation, Ablation, AblationSpec, EvalConfig, FoldPlan, MetricReport};
use crate::ingest::{self, CohortBundle};
use crate::model::{BlockKind, FeatureTable, SemesterCalendar, StreamTag};
use crate::regularity::{self, RegularityConfig};
use crate::synthgen::SynthConfig;
use crate::{seed, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalendarConfig {
    /// First day of term, `YYYY-MM-DD`.
    pub start: String,
    pub weeks: u32,
    /// Campus UTC offset, e.g. `+08:00`.
    pub utc_offset: String,
}

impl Default for CalendarConfig {
    fn default() -> Self {
        CalendarConfig {
            start: "2016-09-05".into(),
            weeks: 13,
            utc_offset: "+08:00".into(),
        }
    }
}

impl CalendarConfig {
    pub fn calendar(&self) -> Result<SemesterCalendar> {
        let start = NaiveDate::parse_from_str(&self.start, "%Y-%m-%d")
            .map_err(|e| Error::validation(format!("calendar.start {:?}: {e}", self.start)))?;
        let offset = FixedOffset::from_str(&self.utc_offset)
            .map_err(|e| Error::validation(format!("calendar.utc_offset {:?}: {e}", self.utc_offset)))?;
        SemesterCalendar::new(start, self.weeks, offset)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub events: PathBuf,
    pub labels: PathBuf,
    pub output_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            events: "events.csv".into(),
            labels: "labels.csv".into(),
            output_dir: "out".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub n_folds: usize,
    pub n_repeats: usize,
    pub decision_threshold: f64,
    pub significance: f64,
    pub ablations: Vec<Ablation>,
    /// Malformed event rows tolerated before ingestion fails.
    pub max_bad_rows: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            n_folds: 5,
            n_repeats: 10,
            decision_threshold: 0.5,
            significance: 0.05,
            ablations: Ablation::ALL.to_vec(),
            max_bad_rows: 0,
        }
    }
}

/// Everything a run needs. Stage seeds are not stored; they are derived
/// from `seed` by name so one number reproduces the whole run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub calendar: CalendarConfig,
    pub paths: PathsConfig,
    pub regularity: RegularityConfig,
    pub cooc: CoocConfig,
    pub walk: WalkConfig,
    pub skipgram: SkipGramConfig,
    pub augment: AugmentConfig,
    pub gbdt: GbdtConfig,
    pub evaluation: EvaluationConfig,
    pub synth: SynthConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            calendar: CalendarConfig::default(),
            paths: PathsConfig::default(),
            regularity: RegularityConfig::default(),
            cooc: CoocConfig::default(),
            walk: WalkConfig::default(),
            skipgram: SkipGramConfig::default(),
            augment: AugmentConfig::default(),
            gbdt: GbdtConfig::default(),
            evaluation: EvaluationConfig::default(),
            synth: SynthConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::validation(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::validation(format!("config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        self.calendar.calendar()?;
        self.regularity.validate()?;
        self.cooc.validate()?;
        self.walk.validate()?;
        self.skipgram.validate()?;
        self.augment.validate()?;
        self.gbdt.validate()?;
        self.synth.validate()?;
        let ev = &self.evaluation;
        if ev.n_folds < 2 {
            return Err(Error::validation("evaluation.n_folds must be at least 2"));
        }
        if ev.n_repeats == 0 {
            return Err(Error::validation("evaluation.n_repeats must be positive"));
        }
        if !(ev.decision_threshold > 0.0 && ev.decision_threshold < 1.0) {
            return Err(Error::validation("evaluation.decision_threshold must be in (0, 1)"));
        }
        if !(ev.significance > 0.0 && ev.significance <= 1.0) {
            return Err(Error::validation("evaluation.significance must be in (0, 1]"));
        }
        if ev.ablations.is_empty() {
            return Err(Error::validation("evaluation.ablations is empty"));
        }
        Ok(())
    }

    pub fn walk_config(&self) -> WalkConfig {
        WalkConfig {
            rng_seed: seed::sub_seed(self.seed, seed::WALKS),
            ..self.walk.clone()
        }
    }

    pub fn skipgram_config(&self) -> SkipGramConfig {
        SkipGramConfig {
            rng_seed: seed::sub_seed(self.seed, seed::SKIPGRAM),
            ..self.skipgram.clone()
        }
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            rng_seed: seed::sub_seed(self.seed, seed::SYNTH),
            ..self.synth.clone()
        }
    }

    pub fn fold_seed(&self) -> u64 {
        seed::sub_seed(self.seed, seed::FOLDS)
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            gbdt: GbdtConfig {
                rng_seed: seed::sub_seed(self.seed, seed::GBDT),
                ..self.gbdt.clone()
            },
            augment: AugmentConfig {
                rng_seed: seed::sub_seed(self.seed, seed::AUGMENT),
                ..self.augment.clone()
            },
            decision_threshold: self.evaluation.decision_threshold,
            significance: self.evaluation.significance,
        }
    }

    /// Blocks needed by the configured ablations.
    pub fn required_blocks(&self) -> Vec<BlockKind> {
        blocks_for(&self.evaluation.ablations)
    }
}

pub fn blocks_for(ablations: &[Ablation]) -> Vec<BlockKind> {
    let mut blocks: Vec<BlockKind> = ablations.iter().flat_map(|a| a.spec().blocks).collect();
    blocks.sort();
    blocks.dedup();
    blocks
}

/// Read events and labels named by the config's paths.
pub fn load_bundle(cfg: &PipelineConfig) -> Result<CohortBundle> {
    let cal = cfg.calendar.calendar()?;
    let parsed = ingest::parse_events(&cfg.paths.events, &cal, cfg.evaluation.max_bad_rows)?;
    let labels = ingest::parse_labels(&cfg.paths.labels)?;
    CohortBundle::new(parsed.events, labels, cal)
}

/// Cutoff timestamp for `week`; the last week maps to the end of term.
pub fn cutoff_for(cal: &SemesterCalendar, week: u32) -> Result<i64> {
    cal.week_cutoff(week)
}

pub fn embedding_columns(dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("emb_{i}")).collect()
}

/// The co-occurrence graph from library check-ins before `cutoff`.
pub fn build_graph(bundle: &CohortBundle, cooc: &CoocConfig, cutoff: i64) -> Result<CoocGraph> {
    cooc.validate()?;
    let visits = cograph::library_visits(&bundle.events, cutoff, cooc.collapse_window());
    Ok(cograph::build(&visits, cooc))
}

/// Embeddings for the graph, or `None` when it has no edges to learn from.
pub fn embed_graph(
    graph: &CoocGraph,
    walk: &WalkConfig,
    skipgram: &SkipGramConfig,
) -> Result<Option<EmbeddingMatrix<f64>>> {
    if graph.edge_count() == 0 {
        return Ok(None);
    }
    let corpus = generate_walks(graph, walk)?;
    train_skipgram(&corpus, skipgram).map(Some)
}

#[derive(Debug, Clone)]
pub struct FeatureSet {
    pub table: FeatureTable<f64>,
    pub graph: Option<CoocGraph>,
    pub embedding: Option<EmbeddingMatrix<f64>>,
}

/// One row per labeled student (sorted by id) with the requested blocks,
/// computed only from events strictly before `cutoff`.
///
/// Students with no library neighbors at the cutoff get a zero
/// embedding, so every student keeps a row in every week.
pub fn assemble_features(
    bundle: &CohortBundle,
    cfg: &PipelineConfig,
    cutoff: i64,
    blocks: &[BlockKind],
) -> Result<FeatureSet> {
    cfg.regularity.validate()?;
    let cal = bundle.calendar;
    let truncated = bundle.truncated(cutoff);
    let by_student = truncated.by_student();
    let mut labels = truncated.labels.clone();
    labels.sort_by(|a, b| a.student.cmp(&b.student));

    let (graph, embedding) = if blocks.contains(&BlockKind::Embedding) {
        let graph = build_graph(&truncated, &cfg.cooc, cutoff)?;
        let emb = embed_graph(&graph, &cfg.walk_config(), &cfg.skipgram_config())?;
        (Some(graph), emb)
    } else {
        (None, None)
    };

    let mut layout = Vec::new();
    for &kind in blocks {
        let names = match kind {
            BlockKind::Statistical => ingest::statistical_feature_names(),
            BlockKind::Regularity => {
                let mut n = cfg.regularity.column_names("reg_lms");
                n.extend(cfg.regularity.column_names("reg_lib"));
                n
            }
            BlockKind::Embedding => embedding_columns(cfg.skipgram.dim),
        };
        layout.push((kind, names));
    }
    let mut table = FeatureTable::new(layout);

    let empty = Vec::new();
    let rows: Vec<Vec<f64>> = labels
        .par_iter()
        .map(|l| {
            let id = &l.student;
            let events = by_student.get(id).unwrap_or(&empty);
            let mut row = Vec::with_capacity(table.width());
            for &kind in blocks {
                match kind {
                    BlockKind::Statistical => {
                        row.extend(ingest::statistical_features::<f64>(events, id, &cal, cutoff));
                    }
                    BlockKind::Regularity => {
                        for stream in [StreamTag::Lms, StreamTag::Library] {
                            let seq = ingest::binarize(events, id, stream, &cal, cutoff);
                            row.extend(regularity::extract::<f64>(&seq.bits, &cfg.regularity).into_concatenated());
                        }
                    }
                    BlockKind::Embedding => {
                        let connected = graph
                            .as_ref()
                            .and_then(|g| g.node_index(id))
                            .is_some_and(|i| graph.as_ref().is_some_and(|g| g.degree(i) > 0));
                        match (&embedding, connected) {
                            (Some(emb), true) => row.extend(emb.vector_or_zero(id)),
                            _ => row.extend(std::iter::repeat_n(0.0, cfg.skipgram.dim)),
                        }
                    }
                }
            }
            row
        })
        .collect();
    for (l, row) in labels.iter().zip(rows) {
        table.push_row(l.student.clone(), row)?;
    }
    Ok(FeatureSet {
        table,
        graph,
        embedding,
    })
}

pub fn fold_plan(bundle: &CohortBundle, cfg: &PipelineConfig) -> Result<FoldPlan> {
    FoldPlan::stratified(
        &bundle.labels,
        cfg.evaluation.n_folds,
        cfg.evaluation.n_repeats,
        cfg.fold_seed(),
    )
}

/// Evaluate every configured ablation at each cutoff week. Features are
/// recomputed per week, including the graph and its embedding.
pub fn evaluate_weeks(
    bundle: &CohortBundle,
    cfg: &PipelineConfig,
    plan: &FoldPlan,
    weeks: &[u32],
) -> Result<Vec<MetricReport>> {
    let eval = cfg.eval_config();
    let blocks = cfg.required_blocks();
    let mut reports = Vec::new();
    for &week in weeks {
        let cutoff = cutoff_for(&bundle.calendar, week)?;
        let features = assemble_features(bundle, cfg, cutoff, &blocks)?;
        for &ablation in &cfg.evaluation.ablations {
            log::info!("week {week}: evaluating {ablation}");
            reports.push(run_ablation(&features.table, &ablation.spec(), plan, &eval, week)?);
        }
    }
    Ok(reports)
}

/// One ablation at every week of term.
pub fn weekly_sweep(
    bundle: &CohortBundle,
    spec: &AblationSpec,
    plan: &FoldPlan,
    cfg: &PipelineConfig,
) -> Result<Vec<(u32, MetricReport)>> {
    let eval = cfg.eval_config();
    (1..=bundle.calendar.week_count())
        .map(|week| {
            let cutoff = cutoff_for(&bundle.calendar, week)?;
            let features = assemble_features(bundle, cfg, cutoff, &spec.blocks)?;
            Ok((week, run_ablation(&features.table, spec, plan, &eval, week)?))
        })
        .collect()
}

/// Hyperparameters that can be swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// Maximum regularity scale.
    Scale,
    Delta,
    Sigma,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Scale => "S",
            SweepParam::Delta => "delta",
            SweepParam::Sigma => "sigma",
        }
    }

    fn apply(self, cfg: &mut PipelineConfig, value: u64) -> Result<()> {
        match self {
            SweepParam::Scale => cfg.regularity.max_scale = value as usize,
            SweepParam::Delta => cfg.cooc.delta = value as i64,
            SweepParam::Sigma => {
                cfg.cooc.sigma = u32::try_from(value)
                    .map_err(|_| Error::validation(format!("sigma {value} out of range")))?
            }
        }
        cfg.validate()
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "S" | "s" | "scale" => Ok(SweepParam::Scale),
            "delta" => Ok(SweepParam::Delta),
            "sigma" => Ok(SweepParam::Sigma),
            other => Err(Error::validation(format!(
                "unknown sweep parameter {other:?} (expected S, delta or sigma)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: &'static str,
    pub value: u64,
    pub auc: f64,
    pub acc_star: f64,
}

/// Full-term EPARS evaluation at each value of one hyperparameter.
pub fn sweep(
    bundle: &CohortBundle,
    cfg: &PipelineConfig,
    param: SweepParam,
    values: &[u64],
) -> Result<Vec<SweepRow>> {
    let plan = fold_plan(bundle, cfg)?;
    let spec = Ablation::Epars.spec();
    let week = bundle.calendar.week_count();
    let cutoff = bundle.calendar.end_timestamp();
    values
        .iter()
        .map(|&value| {
            let mut c = cfg.clone();
            param.apply(&mut c, value)?;
            let features = assemble_features(bundle, &c, cutoff, &spec.blocks)?;
            let r = run_ablation(&features.table, &spec, &plan, &c.eval_config(), week)?;
            Ok(SweepRow {
                param: param.as_str(),
                value,
                auc: r.auc_mean,
                acc_star: r.acc_star_mean,
            })
        })
        .collect()
}
