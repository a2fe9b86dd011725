//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the end-to-end checks can
//! share a process and report timings.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::collections::{BTreeMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use star_core::augment::{balance, smote_detailed, AugmentConfig, AugmentMethod};
use star_core::classify::{best_split, fit, fit_traced, GbdtConfig};
use star_core::cograph::{build, CoocConfig, CoocGraph};
use star_core::embed::walk::sample_next;
use star_core::embed::{
    cosine, generate_walks, sgns_gradient, sgns_objective, train_skipgram, transition_distribution, EmbeddingMatrix,
    SkipGramConfig, WalkConfig,
};
use star_core::evaluate::report::write_folds;
use star_core::evaluate::{anova_f, auc, fold_data, Ablation, EvalConfig, FoldPlan, MetricReport};
use star_core::ingest::CohortBundle;
use star_core::model::{BehaviorEvent, BlockKind, FeatureTable, StarLabel, StudentId};
use star_core::pipeline::{assemble_features, cutoff_for, evaluate_weeks, fold_plan, PipelineConfig};
use star_core::regularity::{extract, RegularityConfig};
use star_core::seed;
use star_core::synthgen::generate;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sid(s: &str) -> StudentId {
    StudentId::new(s).unwrap()
}

fn star_bin() -> &'static str {
    env!("CARGO_BIN_EXE_star")
}

fn run_star(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(star_bin())
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| format!("spawn star: {e}"))?;
    ensure(out.status.success(), || {
        format!("star {args:?} exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr))
    })
}

fn c1_regularity_oracle() -> Check {
    let start = Instant::now();
    let mut rng = seed::rng(1);
    for case in 0..10_000 {
        let len = rng.random_range(0..=64);
        let density = rng.random_range(0.05..0.95);
        let bits: Vec<u8> = (0..len).map(|_| u8::from(rng.random_bool(density))).collect();
        let cfg = RegularityConfig {
            max_scale: rng.random_range(1..=4),
            scale_step: rng.random_range(1..=2),
            min_count: rng.random_range(1..=2),
            normalize: rng.random_bool(0.5),
        };
        let got: Vec<f64> = extract::<f64>(&bits, &cfg).concatenated();
        let want = oracles::regularity_vector(&bits, cfg.max_scale, cfg.scale_step, cfg.min_count, cfg.normalize);
        ensure(got == want, || format!("case {case}: mismatch for {bits:?} with {cfg:?}"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.2}s"))?;
    Ok(format!("10000 sequences exact in {secs:.2}s"))
}

fn c2_vector_width() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_star(dir.path(), &["--jobs", "1", "--output-dir", "out", "simulate", "--n-students", "120"])?;
    run_star(dir.path(), &["--jobs", "1", "--output-dir", "out", "features"])?;
    let text = std::fs::read_to_string(dir.path().join("out/features_reg.csv")).map_err(|e| e.to_string())?;
    let header: Vec<&str> = text.lines().next().unwrap_or_default().split(',').collect();
    let lms = header.iter().filter(|c| c.starts_with("reg_lms")).count();
    let lib = header.iter().filter(|c| c.starts_with("reg_lib")).count();
    ensure(lms == 56 && lib == 56, || format!("lms {lms}, library {lib} columns"))?;
    ensure(RegularityConfig::default().width() == 56, || "config width".into())?;
    Ok(format!("{lms} LMS + {lib} library columns in features_reg.csv"))
}

fn c3_cooc_oracle() -> Check {
    let mut rng = seed::rng(3);
    let edges = |v: &BTreeMap<String, Vec<i64>>, delta: i64, sigma: u32| {
        let ids: BTreeMap<StudentId, Vec<i64>> = v.iter().map(|(k, t)| (sid(k), t.clone())).collect();
        build(&ids, &CoocConfig { delta, sigma, visit_collapse: None })
            .edges()
            .map(|(a, b, w)| ((a.to_string(), b.to_string()), w))
            .collect::<BTreeMap<_, _>>()
    };
    let mut total_edges = 0;
    for case in 0..500 {
        let n_students = rng.random_range(2..=12);
        let mut left = rng.random_range(1..=200usize);
        let span = rng.random_range(100..20_000i64);
        let mut visits: BTreeMap<String, Vec<i64>> = BTreeMap::new();
        for s in 0..n_students {
            let k = if s + 1 == n_students { left } else { rng.random_range(0..=left) };
            left -= k;
            let mut ts: Vec<i64> = (0..k).map(|_| rng.random_range(0..span)).collect();
            ts.sort_unstable();
            visits.insert(format!("u{s:02}"), ts);
        }
        let delta = rng.random_range(0..300);
        let sigma = rng.random_range(1..4);
        let got = edges(&visits, delta, sigma);
        ensure(got == oracles::cooc_edges(&visits, delta, sigma), || format!("case {case}: weights differ"))?;
        total_edges += got.len();
        let wider = edges(&visits, delta + 60, sigma);
        let stricter = edges(&visits, delta, sigma + 1);
        for (k, w) in &got {
            ensure(wider.get(k).is_some_and(|w2| w2 >= w), || format!("case {case}: not monotone in delta"))?;
        }
        for (k, w) in &stricter {
            ensure(got.get(k) == Some(w), || format!("case {case}: not monotone in sigma"))?;
        }
    }
    Ok(format!("500 instances exact, {total_edges} edges, monotone"))
}

fn graph(n: usize, edges: &[(usize, usize, u32)]) -> CoocGraph {
    let name = |i: usize| sid(&format!("n{i:02}"));
    CoocGraph::from_edges((0..n).map(name), edges.iter().map(|&(u, v, w)| (name(u), name(v), w))).unwrap()
}

fn c4_transition_law() -> Check {
    let g = graph(3, &[(0, 1, 1), (1, 2, 1)]);
    let cfg = WalkConfig { p: 2.0, q: 0.5, ..Default::default() };
    let d = transition_distribution(&g, Some(0), 1, &cfg).map_err(|e| e.to_string())?;
    let prob = |u| d.iter().find(|(v, _)| *v == u).map_or(0.0, |x| x.1);
    ensure((prob(0) - 0.2).abs() < 1e-12 && (prob(2) - 0.8).abs() < 1e-12, || format!("{d:?}"))?;
    let mut rng = seed::rng(4);
    let mut scratch = Vec::new();
    let hits = (0..10_000)
        .filter(|_| sample_next(&g, Some(0), 1, &cfg, &mut rng, &mut scratch) == Some(2))
        .count();
    let freq = hits as f64 / 10_000.0;
    ensure((freq - 0.8).abs() <= 0.02, || format!("empirical {freq}"))?;

    // Sums on random weighted graphs, every (prev, cur) state.
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(2..10);
        let mut e = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(0.4) {
                    e.push((u, v, rng.random_range(1..6)));
                }
            }
        }
        let g = graph(n, &e);
        let cfg = WalkConfig { p: rng.random_range(0.1..4.0), q: rng.random_range(0.1..4.0), ..Default::default() };
        for cur in (0..n).filter(|&c| g.degree(c) > 0) {
            let mut prevs = vec![None];
            prevs.extend(g.neighbors(cur).iter().map(|&(u, _)| Some(u)));
            for prev in prevs {
                let d = transition_distribution(&g, prev, cur, &cfg).map_err(|e| e.to_string())?;
                worst = worst.max((d.iter().map(|x| x.1).sum::<f64>() - 1.0).abs());
            }
        }
    }
    ensure(worst < 1e-12, || format!("sum off by {worst:e}"))?;
    Ok(format!("P(return)=0.2, P(outward)=0.8, empirical {freq:.4}, max |sum-1| {worst:.1e}"))
}

fn c5_gradient_check() -> Check {
    let mut rng = seed::rng(5);
    let dim = 8;
    let mut v = || -> Vec<f64> { (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect() };
    let h = 1e-5;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-8);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let center = v();
        let pos = v();
        let negs = [v(), v(), v(), v(), v()];
        let objective = |c: &[f64], p: &[f64], n: &[Vec<f64>]| {
            let refs: Vec<&[f64]> = n.iter().map(Vec::as_slice).collect();
            sgns_objective(c, p, &refs)
        };
        let refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
        let grad = sgns_gradient(&center, &pos, &refs);
        for i in 0..dim {
            let bump = |x: &[f64], d: f64| {
                let mut y = x.to_vec();
                y[i] += d;
                y
            };
            let fd = (objective(&bump(&center, h), &pos, &negs) - objective(&bump(&center, -h), &pos, &negs)) / (2.0 * h);
            worst = worst.max(rel(fd, grad.center[i]));
            let fd = (objective(&center, &bump(&pos, h), &negs) - objective(&center, &bump(&pos, -h), &negs)) / (2.0 * h);
            worst = worst.max(rel(fd, grad.positive[i]));
            for k in 0..negs.len() {
                let mut up = negs.clone();
                up[k] = bump(&negs[k], h);
                let mut down = negs.clone();
                down[k] = bump(&negs[k], -h);
                let fd = (objective(&center, &pos, &up) - objective(&center, &pos, &down)) / (2.0 * h);
                worst = worst.max(rel(fd, grad.negatives[k][i]));
            }
        }
    }
    ensure(worst < 1e-4, || format!("max relative error {worst:e}"))?;
    Ok(format!("10 points, max relative error {worst:.2e}"))
}

fn c6_homophily() -> Check {
    let start = Instant::now();
    let mut e = Vec::new();
    for base in [0, 5] {
        for i in 0..5 {
            for j in i + 1..5 {
                e.push((base + i, base + j, 1));
            }
        }
    }
    e.push((4, 5, 1));
    let g = graph(10, &e);
    let corpus = generate_walks(&g, &WalkConfig::default()).map_err(|e| e.to_string())?;
    let emb: EmbeddingMatrix<f64> = train_skipgram(&corpus, &SkipGramConfig::default()).map_err(|e| e.to_string())?;
    let (mut intra, mut inter, mut ni, mut nx) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..10 {
        for j in i + 1..10 {
            let c = cosine(emb.vector_at(i), emb.vector_at(j));
            if (i < 5) == (j < 5) {
                intra += c;
                ni += 1.0;
            } else {
                inter += c;
                nx += 1.0;
            }
        }
    }
    let (intra, inter) = (intra / ni, inter / nx);
    let secs = start.elapsed().as_secs_f64();
    ensure(intra - inter >= 0.2, || format!("intra {intra:.3} inter {inter:.3}"))?;
    ensure(secs < 5.0, || format!("took {secs:.2}s"))?;
    Ok(format!("intra {intra:.3} - inter {inter:.3} = {:.3} in {secs:.2}s", intra - inter))
}

fn c7_smote() -> Check {
    let mut rng = seed::rng(7);
    let mut worst = 0.0f64;
    let mut synthesized = 0;
    for _ in 0..200 {
        let m = rng.random_range(2..30);
        let d = rng.random_range(1..12);
        let minority: Vec<Vec<f64>> = (0..m).map(|_| (0..d).map(|_| rng.random_range(-100.0..100.0)).collect()).collect();
        let target = m + rng.random_range(1..200);
        let k = rng.random_range(1..12);
        let out = smote_detailed(&minority, target, k, &mut rng).map_err(|e| e.to_string())?;
        ensure(out.len() == target - m, || "wrong number of synthetic rows".into())?;
        for s in &out {
            let (res, omega) = oracles::segment_residual(&minority[s.base], &minority[s.neighbor], &s.row);
            ensure((-1e-12..=1.0 + 1e-12).contains(&omega), || format!("omega {omega}"))?;
            worst = worst.max(res);
        }
        synthesized += out.len();

        let n_neg = rng.random_range(m..m + 100);
        let mut rows = minority.clone();
        rows.extend((0..n_neg).map(|_| (0..d).map(|_| rng.random_range(-100.0..100.0)).collect::<Vec<_>>()));
        let labels: Vec<bool> = (0..rows.len()).map(|i| i < m).collect();
        let cfg = AugmentConfig { method: AugmentMethod::Smote, k_neighbors: k, rng_seed: 0 };
        let (_, y) = balance(&rows, &labels, &cfg, &mut rng).map_err(|e| e.to_string())?;
        let pos = y.iter().filter(|&&v| v).count();
        ensure(pos * 2 == y.len() && y.len() == 2 * n_neg, || format!("counts {pos}/{}", y.len()))?;
    }
    ensure(worst < 1e-10, || format!("residual {worst:e}"))?;

    // Leak probe: every positive training row must come from training-fold rows.
    let n = 150;
    let mut table = FeatureTable::new(vec![(BlockKind::Statistical, vec!["stat_id".into(), "stat_y".into()])]);
    let mut labels = Vec::new();
    for i in 0..n {
        let id = sid(&format!("s{i:03}"));
        let star = i % 5 == 0;
        labels.push(StarLabel::new(id.clone(), if star { 1.0 } else { 3.0 }).unwrap());
        table.push_row(id, vec![i as f64, if star { 5.0 } else { 0.0 }]).unwrap();
    }
    let plan = FoldPlan::stratified(&labels, 5, 2, 70).map_err(|e| e.to_string())?;
    let cfg = EvalConfig { significance: 1.0, ..Default::default() };
    for repeat in 0..2 {
        for fold in 0..5 {
            let d = fold_data(&table, &Ablation::Da.spec(), &plan, repeat, fold, &cfg).map_err(|e| e.to_string())?;
            let pool: Vec<Vec<f64>> =
                d.minority_pool.iter().map(|&i| d.standardizer.transform_row(&table.rows()[i])).collect();
            ensure(d.minority_pool.iter().all(|i| !d.test_index.contains(i)), || "test row in pool".into())?;
            for (row, _) in d.train_rows.iter().zip(&d.train_labels).filter(|(_, &y)| y) {
                let explained =
                    pool.iter().any(|a| pool.iter().any(|b| oracles::segment_residual(a, b, row).0 < 1e-9));
                ensure(explained, || format!("repeat {repeat} fold {fold}: {row:?} not from training pool"))?;
            }
        }
    }
    Ok(format!("{synthesized} rows, max residual {worst:.1e}, classes balanced, 10 folds leak-free"))
}

fn small_pipeline(n: usize) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.synth.n_students = n;
    cfg.synth.star_fraction = 0.05;
    cfg
}

fn c8_gbdt() -> Check {
    // Planted cohort features without the (slow) embedding block.
    let cfg = small_pipeline(1000);
    let cal = cfg.calendar.calendar().map_err(|e| e.to_string())?;
    let bundle = generate(&cfg.synth_config(), &cal).map_err(|e| e.to_string())?;
    let features = assemble_features(
        &bundle,
        &cfg,
        cal.end_timestamp(),
        &[BlockKind::Statistical, BlockKind::Regularity],
    )
    .map_err(|e| e.to_string())?;
    let star: HashSet<&StudentId> = bundle.labels.iter().filter(|l| l.is_star).map(|l| &l.student).collect();
    let labels: Vec<bool> = features.table.students().iter().map(|s| star.contains(s)).collect();
    let gbdt = GbdtConfig { n_estimators: 100, ..Default::default() };
    let (_, losses) = fit_traced(features.table.rows(), &labels, &gbdt).map_err(|e| e.to_string())?;
    ensure(losses.len() == 101, || format!("{} losses", losses.len()))?;
    for (r, w) in losses.windows(2).enumerate() {
        ensure(w[1] <= w[0] + 1e-12, || format!("round {}: {} -> {}", r + 1, w[0], w[1]))?;
    }

    let mut rng = seed::rng(8);
    for case in 0..300 {
        let n = rng.random_range(2..=100);
        let d = rng.random_range(1..5);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| f64::from(rng.random_range(0..10)) / 2.0).collect()).collect();
        let grad: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let hess: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..0.25)).collect();
        let cols: Vec<Vec<f64>> = (0..d).map(|f| rows.iter().map(|r| r[f]).collect()).collect();
        let all: Vec<usize> = (0..n).collect();
        let min_leaf = rng.random_range(1..4);
        let got = best_split(&cols, &grad, &hess, &all, min_leaf).map(|s| s.gain);
        let want = oracles::exhaustive_split(&rows, &grad, &hess, min_leaf).map(|s| s.2);
        let same = match (got, want) {
            (None, None) => true,
            (Some(a), Some(b)) => (a - b).abs() <= 1e-9 * b.abs().max(1.0),
            _ => false,
        };
        ensure(same, || format!("case {case}: finder {got:?} vs oracle {want:?}"))?;
    }

    let toy: Vec<Vec<f64>> = (0..40).map(|i| vec![f64::from(i)]).collect();
    let toy_y: Vec<bool> = (0..40).map(|i| i >= 17).collect();
    let m = fit(&toy, &toy_y, &GbdtConfig { n_estimators: 10, ..Default::default() }).map_err(|e| e.to_string())?;
    let p = m.predict_proba(&toy).map_err(|e| e.to_string())?;
    let acc = p.iter().zip(&toy_y).filter(|(p, &y)| (**p >= 0.5) == y).count() as f64 / 40.0;
    ensure(acc == 1.0, || format!("toy accuracy {acc}"))?;
    Ok(format!(
        "loss {:.4} -> {:.4} monotone over 100 rounds, 300 split sets match, toy accuracy {acc}",
        losses[0], losses[100]
    ))
}

fn c9_metrics() -> Check {
    let mut rng = seed::rng(9);
    let mut checked = 0;
    for _ in 0..2000 {
        let n = rng.random_range(2..=500);
        let levels = rng.random_range(1..50);
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..levels)) / 7.0).collect();
        let rate = rng.random_range(0.02..0.98);
        let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(rate)).collect();
        if !(labels.iter().any(|&y| y) && labels.iter().any(|&y| !y)) {
            ensure(auc(&scores, &labels).is_err(), || "AUC defined for one class".into())?;
            continue;
        }
        let got = auc(&scores, &labels).map_err(|e| e.to_string())?;
        let want = oracles::auc_pairs(&scores, &labels);
        ensure(got == want, || format!("n={n}: {got} vs {want}"))?;
        checked += 1;
    }
    let r = anova_f::<f64>(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]).map_err(|e| e.to_string())?;
    ensure((r.f - 13.5).abs() <= 1e-9, || format!("F = {}", r.f))?;
    Ok(format!("{checked} AUC vectors exact, F = {:.12}", r.f))
}

fn mean_acc(reports: &[MetricReport], a: Ablation) -> f64 {
    reports.iter().find(|r| r.ablation == a).map_or(f64::NAN, |r| r.acc_star_mean)
}

fn c10_planted_ordering() -> Check {
    let start = Instant::now();
    let mut cfg = PipelineConfig::default();
    cfg.evaluation.n_folds = 5;
    cfg.evaluation.n_repeats = 3;
    let cal = cfg.calendar.calendar().map_err(|e| e.to_string())?;
    let bundle = generate(&cfg.synth_config(), &cal).map_err(|e| e.to_string())?;
    ensure(bundle.labels.len() == 2000, || "cohort size".into())?;
    let plan = fold_plan(&bundle, &cfg).map_err(|e| e.to_string())?;
    let reports = evaluate_weeks(&bundle, &cfg, &plan, &[cal.week_count()]).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let table: Vec<String> = Ablation::ALL.iter().map(|&a| format!("{a} {:.3}", mean_acc(&reports, a))).collect();
    let da = mean_acc(&reports, Ablation::Da);
    let epars = mean_acc(&reports, Ablation::Epars);
    let da_reg = mean_acc(&reports, Ablation::DaReg);
    let detail = format!("ACC_star {}; {secs:.0}s", table.join(", "));
    ensure(epars - da >= 0.03, || format!("EPARS - DA = {:.3}; {detail}", epars - da))?;
    ensure(da_reg - da >= 0.03, || format!("DA-Reg - DA = {:.3}; {detail}", da_reg - da))?;
    ensure(secs < 600.0, || format!("too slow; {detail}"))?;
    Ok(detail)
}

fn scramble_after(bundle: &CohortBundle, cutoff: i64, seed_v: u64) -> CohortBundle {
    let mut rng = seed::rng(seed_v);
    let end = bundle.calendar.end_timestamp();
    let mut events: Vec<BehaviorEvent> = bundle.events.iter().filter(|e| e.timestamp < cutoff).cloned().collect();
    let mut late: Vec<BehaviorEvent> = bundle.events.iter().filter(|e| e.timestamp >= cutoff).cloned().collect();
    // Shuffle which student owns each late event and when it happened.
    let mut owners: Vec<StudentId> = late.iter().map(|e| e.student.clone()).collect();
    owners.shuffle(&mut rng);
    for (e, owner) in late.iter_mut().zip(owners) {
        *e = BehaviorEvent::new(owner, rng.random_range(cutoff..end), e.stream);
    }
    events.extend(late);
    CohortBundle::new(events, bundle.labels.clone(), bundle.calendar).unwrap()
}

fn folds_csv(reports: &[MetricReport]) -> Vec<u8> {
    let mut out = Vec::new();
    write_folds(reports, &mut out).unwrap();
    out
}

fn c11_no_leak() -> Check {
    let mut cfg = small_pipeline(240);
    cfg.synth.star_fraction = 0.1;
    cfg.evaluation.n_repeats = 1;
    let cal = cfg.calendar.calendar().map_err(|e| e.to_string())?;
    let bundle = generate(&cfg.synth_config(), &cal).map_err(|e| e.to_string())?;
    let plan = fold_plan(&bundle, &cfg).map_err(|e| e.to_string())?;
    let weeks: Vec<u32> = (1..=cal.week_count()).collect();
    let all = evaluate_weeks(&bundle, &cfg, &plan, &weeks).map_err(|e| e.to_string())?;
    for a in Ablation::ALL {
        let rows = all.iter().filter(|r| r.ablation == a).count();
        ensure(rows == cal.week_count() as usize, || format!("{a}: {rows} weekly rows"))?;
    }
    let probe = [1u32, 4, 8, 12];
    for &week in &probe {
        let cutoff = cutoff_for(&cal, week).map_err(|e| e.to_string())?;
        let base: Vec<MetricReport> = all.iter().filter(|r| r.week == week).cloned().collect();
        let base = folds_csv(&base);
        for (what, edited) in [("deleted", bundle.truncated(cutoff)), ("shuffled", scramble_after(&bundle, cutoff, week.into()))] {
            let got = evaluate_weeks(&edited, &cfg, &plan, &[week]).map_err(|e| e.to_string())?;
            ensure(folds_csv(&got) == base, || format!("week {week}: report changed when post-cutoff events {what}"))?;
        }
    }
    Ok(format!("{} weekly rows per ablation; weeks {probe:?} identical after delete/shuffle", cal.week_count()))
}

fn c12_determinism() -> Check {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = "seed = 7\n[synth]\nn_students = 400\nstar_fraction = 0.05\n[evaluation]\nn_repeats = 2\n";
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let dir = root.path().join(run);
        std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
        std::fs::write(dir.join("config.toml"), config).map_err(|e| e.to_string())?;
        let base = ["--jobs", "1", "--config", "config.toml", "--output-dir", "out"];
        run_star(&dir, &[&base[..], &["simulate"]].concat())?;
        run_star(&dir, &[&base[..], &["evaluate"]].concat())?;
        outputs.push(dir);
    }
    let files = ["events.csv", "labels.csv", "out/folds.csv", "out/summary.csv", "out/anova.csv"];
    for f in files {
        let a = std::fs::read(outputs[0].join(f)).map_err(|e| format!("{f}: {e}"))?;
        let b = std::fs::read(outputs[1].join(f)).map_err(|e| format!("{f}: {e}"))?;
        ensure(!a.is_empty() && a == b, || format!("{f} differs between runs"))?;
    }
    Ok(format!("{} files byte-identical across two runs", files.len()))
}

fn main() -> ExitCode {
    let checks: [Criterion; 12] = [
        ("C1 regularity oracle", c1_regularity_oracle),
        ("C2 vector width", c2_vector_width),
        ("C3 co-occurrence oracle", c3_cooc_oracle),
        ("C4 transition law", c4_transition_law),
        ("C5 gradient check", c5_gradient_check),
        ("C6 homophily", c6_homophily),
        ("C7 SMOTE", c7_smote),
        ("C8 GBDT", c8_gbdt),
        ("C9 AUC and ANOVA", c9_metrics),
        ("C10 planted ordering", c10_planted_ordering),
        ("C11 early-prediction no-leak", c11_no_leak),
        ("C12 determinism", c12_determinism),
    ];
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (name, check) in checks {
        if filter.as_deref().is_some_and(|f| !name.contains(f)) {
            continue;
        }
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{secs:.1}s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why} [{secs:.1}s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
