use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;
use star_core::classify::GbdtModel;
use star_core::evaluate::{anova_table, mean_sd, report, train_full, Ablation, FoldRecord, MetricReport};
use star_core::ingest;
use star_core::model::BlockKind;
use star_core::pipeline::{self, PipelineConfig, SweepParam};
use star_core::{cograph, synthgen, Error, Result};

use crate::output::{out_dir, write_effective_config, write_summary, write_text, write_with};

fn cutoff(cfg: &PipelineConfig, week: Option<u32>) -> Result<(u32, i64)> {
    let cal = cfg.calendar.calendar()?;
    let week = week.unwrap_or(cal.week_count());
    Ok((week, pipeline::cutoff_for(&cal, week)?))
}

pub fn simulate(cfg: &PipelineConfig) -> Result<()> {
    let cal = cfg.calendar.calendar()?;
    let bundle = synthgen::generate(&cfg.synth_config(), &cal)?;
    write_with(&cfg.paths.events, |w| ingest::write_events(&bundle.events, w))?;
    write_with(&cfg.paths.labels, |w| ingest::write_labels(&bundle.labels, w))?;
    let dir = out_dir(cfg)?;
    write_effective_config(&dir, cfg)?;
    let overview = synthgen::describe(&bundle);
    for r in &overview {
        println!("{:<6} {:<30} {:>12.3}", r.class, r.metric, r.value);
    }
    write_summary(
        &dir,
        "simulate",
        json!({
            "events_path": cfg.paths.events,
            "labels_path": cfg.paths.labels,
            "events": bundle.events.len(),
            "students": bundle.labels.len(),
            "overview": overview,
        }),
    )
}

pub fn ingest_check(cfg: &PipelineConfig) -> Result<()> {
    let cal = cfg.calendar.calendar()?;
    let parsed = ingest::parse_events(&cfg.paths.events, &cal, cfg.evaluation.max_bad_rows)?;
    let labels = ingest::parse_labels(&cfg.paths.labels)?;
    let bad = parsed.bad_rows.len();
    let bundle = ingest::CohortBundle::new(parsed.events, labels, cal)?;
    let stars = bundle.labels.iter().filter(|l| l.is_star).count();
    let active = bundle.by_student().len();
    println!(
        "{} events from {active} students; {} labels ({stars} STAR); {bad} bad rows skipped",
        bundle.events.len(),
        bundle.labels.len()
    );
    let dir = out_dir(cfg)?;
    write_summary(
        &dir,
        "ingest-check",
        json!({
            "events": bundle.events.len(),
            "active_students": active,
            "labels": bundle.labels.len(),
            "star": stars,
            "bad_rows": bad,
        }),
    )
}

pub fn features(cfg: &PipelineConfig, week: Option<u32>) -> Result<()> {
    let bundle = pipeline::load_bundle(cfg)?;
    let (week, cut) = cutoff(cfg, week)?;
    let blocks = [BlockKind::Statistical, BlockKind::Regularity, BlockKind::Embedding];
    let fs = pipeline::assemble_features(&bundle, cfg, cut, &blocks)?;
    let dir = out_dir(cfg)?;
    let mut widths = BTreeMap::new();
    for kind in blocks {
        if let Some(t) = fs.table.block_table(kind) {
            widths.insert(kind.prefix(), t.width());
            write_with(&dir.join(format!("features_{}.csv", kind.prefix())), |w| t.write_csv(w))?;
        }
    }
    write_with(&dir.join("features.csv"), |w| fs.table.write_csv(w))?;
    write_effective_config(&dir, cfg)?;
    println!("{} students x {} columns at week {week}", fs.table.len(), fs.table.width());
    write_summary(
        &dir,
        "features",
        json!({ "week": week, "students": fs.table.len(), "block_widths": widths }),
    )
}

pub fn graph(cfg: &PipelineConfig, week: Option<u32>) -> Result<()> {
    let bundle = pipeline::load_bundle(cfg)?;
    let (week, cut) = cutoff(cfg, week)?;
    let g = pipeline::build_graph(&bundle, &cfg.cooc, cut)?;
    let dir = out_dir(cfg)?;
    write_with(&dir.join("graph_edges.csv"), |w| g.write_edges_csv(w))?;
    let stats = cograph::degree_stats(&g);
    println!(
        "{} nodes, {} edges, {} isolated, mean degree {:.3}",
        stats.node_count, stats.edge_count, stats.isolated_count, stats.mean_degree
    );
    write_summary(
        &dir,
        "graph",
        json!({
            "week": week,
            "nodes": stats.node_count,
            "edges": stats.edge_count,
            "isolated": stats.isolated_count,
            "mean_degree": stats.mean_degree,
            "max_degree": stats.max_degree,
            "weight_histogram": stats.weight_histogram,
        }),
    )
}

pub fn embed(cfg: &PipelineConfig, week: Option<u32>) -> Result<()> {
    let bundle = pipeline::load_bundle(cfg)?;
    let (week, cut) = cutoff(cfg, week)?;
    let g = pipeline::build_graph(&bundle, &cfg.cooc, cut)?;
    let dir = out_dir(cfg)?;
    let emb = pipeline::embed_graph(&g, &cfg.walk_config(), &cfg.skipgram_config())?
        .ok_or_else(|| Error::Validation("co-occurrence graph has no edges to embed".into()))?;
    write_with(&dir.join("embedding.csv"), |w| emb.write_csv(w))?;
    println!("{} nodes embedded in {} dimensions", emb.nodes().len(), emb.dim());
    write_summary(
        &dir,
        "embed",
        json!({ "week": week, "nodes": emb.nodes().len(), "dim": emb.dim() }),
    )
}

pub fn train(cfg: &PipelineConfig, week: Option<u32>, ablation: &str) -> Result<()> {
    let ablation: Ablation = ablation.parse()?;
    let spec = ablation.spec();
    let bundle = pipeline::load_bundle(cfg)?;
    let (week, cut) = cutoff(cfg, week)?;
    let fs = pipeline::assemble_features(&bundle, cfg, cut, &spec.blocks)?;
    let star: BTreeMap<_, _> = bundle.labels.iter().map(|l| (l.student.clone(), l.is_star)).collect();
    let labels: Vec<bool> = fs.table.students().iter().map(|s| star[s]).collect();
    let trained = train_full(&fs.table, &labels, &spec, &cfg.eval_config())?;
    let dir = out_dir(cfg)?;
    write_text(&dir.join("model.txt"), &trained.model.to_text())?;
    let mut cols = String::from("column,mean,scale\n");
    for ((c, m), s) in trained
        .columns
        .iter()
        .zip(&trained.standardizer.mean)
        .zip(&trained.standardizer.scale)
    {
        cols.push_str(&format!("{c},{m},{s}\n"));
    }
    write_text(&dir.join("model_columns.csv"), &cols)?;
    // Reload to make sure what was written is usable.
    let text = std::fs::read_to_string(dir.join("model.txt")).map_err(|e| Error::io(dir.join("model.txt"), e))?;
    let reloaded = GbdtModel::<f64>::from_text(&text)?;
    println!(
        "{ablation}: {} trees over {} columns at week {week}",
        reloaded.trees.len(),
        trained.columns.len()
    );
    write_summary(
        &dir,
        "train",
        json!({
            "ablation": ablation,
            "week": week,
            "trees": reloaded.trees.len(),
            "columns": trained.columns,
        }),
    )
}

#[derive(Serialize)]
struct ReportLine {
    ablation: Ablation,
    week: u32,
    auc_mean: f64,
    auc_sd: f64,
    acc_star_mean: f64,
    acc_star_sd: f64,
    skipped_folds: usize,
}

impl From<&MetricReport> for ReportLine {
    fn from(r: &MetricReport) -> Self {
        ReportLine {
            ablation: r.ablation,
            week: r.week,
            auc_mean: r.auc_mean,
            auc_sd: r.auc_sd,
            acc_star_mean: r.acc_star_mean,
            acc_star_sd: r.acc_star_sd,
            skipped_folds: r.skipped_folds,
        }
    }
}

pub fn evaluate(cfg: &PipelineConfig, weekly: bool) -> Result<()> {
    let bundle = pipeline::load_bundle(cfg)?;
    let cal = bundle.calendar;
    let plan = pipeline::fold_plan(&bundle, cfg)?;
    let weeks: Vec<u32> = if weekly {
        (1..=cal.week_count()).collect()
    } else {
        vec![cal.week_count()]
    };
    let reports = pipeline::evaluate_weeks(&bundle, cfg, &plan, &weeks)?;
    let dir = out_dir(cfg)?;
    write_with(&dir.join("folds.csv"), |w| report::write_folds(&reports, w))?;
    write_with(&dir.join("summary.csv"), |w| report::write_summary(&reports, w))?;

    let stats = pipeline::assemble_features(&bundle, cfg, cal.end_timestamp(), &[BlockKind::Statistical])?;
    let star: BTreeMap<_, _> = bundle.labels.iter().map(|l| (l.student.clone(), l.is_star)).collect();
    let labels: Vec<bool> = stats.table.students().iter().map(|s| star[s]).collect();
    let columns: Vec<usize> = (0..stats.table.width()).collect();
    let anova = anova_table(stats.table.rows(), &labels, &columns, stats.table.column_names())?;
    write_with(&dir.join("anova.csv"), |w| report::write_anova(&anova, w))?;
    write_effective_config(&dir, cfg)?;

    print!("{}", report::render_summary(&reports));
    let lines: Vec<ReportLine> = reports.iter().map(ReportLine::from).collect();
    write_summary(
        &dir,
        "evaluate",
        json!({ "n_folds": plan.n_folds, "n_repeats": plan.n_repeats, "reports": lines }),
    )
}

pub fn sweep(cfg: &PipelineConfig, param: &str, values: &[u64]) -> Result<()> {
    let param: SweepParam = param.parse()?;
    let bundle = pipeline::load_bundle(cfg)?;
    let rows = pipeline::sweep(&bundle, cfg, param, values)?;
    let dir = out_dir(cfg)?;
    let mut csv = String::from("param,value,auc,acc_star\n");
    for r in &rows {
        csv.push_str(&format!("{},{},{:.6},{:.6}\n", r.param, r.value, r.auc, r.acc_star));
        println!("{}={:<6} AUC {:.4}  ACC_star {:.4}", r.param, r.value, r.auc, r.acc_star);
    }
    write_text(&dir.join(format!("sweep_{}.csv", param.as_str())), &csv)?;
    write_effective_config(&dir, cfg)?;
    write_summary(&dir, "sweep", json!({ "param": param.as_str(), "rows": rows }))
}

/// Rebuild the aggregate summary from a fold-level CSV.
pub fn report(cfg: &PipelineConfig, input: Option<PathBuf>) -> Result<()> {
    let path = input.unwrap_or_else(|| cfg.paths.output_dir.join("folds.csv"));
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut groups: BTreeMap<(u32, Ablation), Vec<FoldRecord>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(Error::Validation(format!("{}: line {} has {} fields", path.display(), i + 1, f.len())));
        }
        let num = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                return Ok(None);
            }
            s.parse()
                .map(Some)
                .map_err(|_| Error::Validation(format!("line {}: bad number {s:?}", i + 1)))
        };
        let int = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::Validation(format!("line {}: bad integer {s:?}", i + 1)))
        };
        let ablation: Ablation = f[0].parse()?;
        let week = int(f[1])? as u32;
        groups.entry((week, ablation)).or_default().push(FoldRecord {
            repeat: int(f[2])?,
            fold: int(f[3])?,
            auc: num(f[4])?,
            acc_star: num(f[5])?,
        });
    }
    let reports: Vec<MetricReport> = groups
        .into_iter()
        .map(|((week, ablation), folds)| {
            let aucs: Vec<f64> = folds.iter().filter_map(|f| f.auc).collect();
            let accs: Vec<f64> = folds.iter().filter_map(|f| f.acc_star).collect();
            let (auc_mean, auc_sd) = mean_sd(&aucs);
            let (acc_star_mean, acc_star_sd) = mean_sd(&accs);
            let n_repeats = folds.iter().map(|f| f.repeat + 1).max().unwrap_or(0);
            let per_repeat = (0..n_repeats)
                .map(|r| {
                    let pick = |get: fn(&FoldRecord) -> Option<f64>| {
                        let v: Vec<f64> = folds.iter().filter(|f| f.repeat == r).filter_map(get).collect();
                        mean_sd(&v).0
                    };
                    (pick(|f| f.auc), pick(|f| f.acc_star))
                })
                .collect();
            let skipped_folds = folds.iter().filter(|f| f.acc_star.is_none()).count();
            MetricReport {
                ablation,
                week,
                folds,
                auc_mean,
                auc_sd,
                acc_star_mean,
                acc_star_sd,
                per_repeat,
                skipped_folds,
            }
        })
        .collect();
    print!("{}", report::render_summary(&reports));
    let dir = out_dir(cfg)?;
    write_with(&dir.join("summary.csv"), |w| report::write_summary(&reports, w))
}
