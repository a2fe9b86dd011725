//! Synthetic cohorts with planted regularity, homophily and imbalance.
//!
//! Students are partitioned into study cliques. Normal cliques visit the
//! library together on fixed weekdays; at-risk students visit on random
//! days, either with an all-STAR clique or alone. LMS clicks are Poisson
//! with per-student rates drawn from a gamma distribution, so counts overlap
//! between the classes while the shape of the activity differs.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ingest::CohortBundle;
use crate::model::{BehaviorEvent, ModuleKind, SemesterCalendar, StarLabel, Stream, StreamTag, StudentId};
use crate::{seed, Error, Result};

const DAY: i64 = 86_400;
const HOUR: i64 = 3_600;
/// Library hours for synchronized and solo visits.
const OPEN: i64 = 8 * HOUR;
const CLOSE: i64 = 22 * HOUR;
/// Clique-mates arrive within this many seconds of the leader.
const MEMBER_JITTER_SD: f64 = 10.0;
const MEMBER_JITTER_MAX: f64 = 15.0;
/// Chance that a visit is followed by a second tap at the gate.
const RETAP_PROB: f64 = 0.05;

/// Relative click frequency per LMS module, in `ModuleKind::ALL` order.
const KIND_WEIGHTS: [f64; 13] = [
    10.0, 4.0, 6.0, 30.0, 5.0, 6.0, 3.0, 1.0, 1.0, 1.0, 8.0, 6.0, 19.0,
];
/// STAR multipliers on the module mix: fewer submissions and downloads.
const STAR_KIND_TILT: [f64; 13] = [
    1.1, 1.0, 1.0, 1.0, 1.1, 0.9, 1.0, 1.0, 1.0, 1.0, 0.85, 0.85, 0.9,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_students: usize,
    pub star_fraction: f64,
    pub clique_size: usize,
    /// Probability that a STAR is placed in an all-STAR clique.
    pub star_clique_bias: f64,
    /// Length of the normal attendance cycle, in days.
    pub normal_period: usize,
    /// Library days per cycle for a normal clique.
    pub sessions_per_period: usize,
    pub normal_attendance_prob: f64,
    /// Half-width of the uniform spread of per-student attendance around
    /// `normal_attendance_prob`.
    pub attendance_spread: f64,
    /// Daily probability of a STAR library visit.
    pub star_noise_prob: f64,
    pub lms_rate_normal: f64,
    pub lms_rate_star: f64,
    /// Gamma shape of per-student LMS rates; smaller spreads rates more.
    pub lms_rate_shape: f64,
    #[serde(skip)]
    pub rng_seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_students: 2000,
            star_fraction: 0.02,
            clique_size: 4,
            star_clique_bias: 0.7,
            normal_period: 7,
            sessions_per_period: 2,
            normal_attendance_prob: 0.8,
            attendance_spread: 0.15,
            star_noise_prob: 0.2,
            lms_rate_normal: 8.0,
            lms_rate_star: 7.0,
            lms_rate_shape: 4.0,
            rng_seed: 0,
        }
    }
}

fn prob(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::validation(format!("{name} must be in [0, 1], got {v}")));
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::validation(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.star_fraction > 0.0 && self.star_fraction < 0.5) {
            return Err(Error::validation(format!(
                "star_fraction must be in (0, 0.5), got {}",
                self.star_fraction
            )));
        }
        if self.clique_size < 2 {
            return Err(Error::validation("clique_size must be at least 2"));
        }
        if self.n_students < self.clique_size {
            return Err(Error::validation(format!(
                "n_students ({}) is smaller than clique_size ({})",
                self.n_students, self.clique_size
            )));
        }
        if self.normal_period == 0 {
            return Err(Error::validation("normal_period must be positive"));
        }
        if self.sessions_per_period == 0 || self.sessions_per_period > self.normal_period {
            return Err(Error::validation(format!(
                "sessions_per_period must be in 1..={}",
                self.normal_period
            )));
        }
        prob("star_clique_bias", self.star_clique_bias)?;
        prob("normal_attendance_prob", self.normal_attendance_prob)?;
        prob("attendance_spread", self.attendance_spread)?;
        prob("star_noise_prob", self.star_noise_prob)?;
        positive("lms_rate_normal", self.lms_rate_normal)?;
        positive("lms_rate_star", self.lms_rate_star)?;
        positive("lms_rate_shape", self.lms_rate_shape)?;
        Ok(())
    }

    pub fn star_count(&self) -> usize {
        (self.n_students as f64 * self.star_fraction).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CliqueKind {
    /// Weekly schedule; any STAR member still visits alone at random.
    Normal,
    /// Every member is STAR; the clique meets on random days.
    Star,
}

#[derive(Debug, Clone)]
struct Clique {
    kind: CliqueKind,
    /// Member indices into the student table.
    members: Vec<usize>,
}

/// Split students `0..n` into cliques; indices below `n_star` are STAR.
fn partition<R: Rng>(cfg: &SynthConfig, n_star: usize, rng: &mut R) -> Vec<Clique> {
    let size = cfg.clique_size;
    let mut concentrated = Vec::new();
    let mut rest = Vec::new();
    for i in 0..n_star {
        if rng.random::<f64>() < cfg.star_clique_bias {
            concentrated.push(i);
        } else {
            rest.push(i);
        }
    }
    // Only full all-STAR cliques; leftovers mix with the others.
    let full = concentrated.len() / size * size;
    rest.extend(concentrated.drain(full..));
    rest.extend(n_star..cfg.n_students);
    rest.shuffle(rng);

    let mut cliques: Vec<Clique> = concentrated
        .chunks(size)
        .map(|c| Clique {
            kind: CliqueKind::Star,
            members: c.to_vec(),
        })
        .collect();
    let mut chunks: Vec<Vec<usize>> = rest.chunks(size).map(<[usize]>::to_vec).collect();
    if chunks.len() > 1 && chunks.last().is_some_and(|c| c.len() < 2) {
        let tail = chunks.pop().unwrap_or_default();
        if let Some(last) = chunks.last_mut() {
            last.extend(tail);
        }
    }
    cliques.extend(chunks.into_iter().map(|members| Clique {
        kind: CliqueKind::Normal,
        members,
    }));
    cliques
}

fn member_offset<R: Rng>(rng: &mut R) -> i64 {
    let jitter = Normal::new(0.0, MEMBER_JITTER_SD).expect("finite sd");
    loop {
        let x: f64 = jitter.sample(rng);
        if x.abs() <= MEMBER_JITTER_MAX {
            return x.round() as i64;
        }
    }
}

fn library_time<R: Rng>(rng: &mut R) -> i64 {
    rng.random_range(OPEN..CLOSE)
}

fn push_visit<R: Rng>(out: &mut Vec<BehaviorEvent>, id: &StudentId, ts: i64, rng: &mut R) {
    out.push(BehaviorEvent::new(id.clone(), ts, Stream::LibraryCheckin));
    if rng.random::<f64>() < RETAP_PROB {
        let again = ts + rng.random_range(2..10);
        out.push(BehaviorEvent::new(id.clone(), again, Stream::LibraryCheckin));
    }
}

fn clique_library<R: Rng>(
    clique: &Clique,
    ids: &[StudentId],
    is_star: &[bool],
    cfg: &SynthConfig,
    cal: &SemesterCalendar,
    rng: &mut R,
) -> Vec<BehaviorEvent> {
    let days = cal.day_count();
    let t0 = cal.start_timestamp();
    let mut out = Vec::new();
    match clique.kind {
        CliqueKind::Star => {
            for d in 0..days {
                if rng.random::<f64>() >= cfg.star_noise_prob {
                    continue;
                }
                let lead = t0 + d as i64 * DAY + library_time(rng);
                for &m in &clique.members {
                    push_visit(&mut out, &ids[m], lead + member_offset(rng), rng);
                }
            }
        }
        CliqueKind::Normal => {
            let mut weekdays: Vec<usize> = (0..cfg.normal_period).collect();
            weekdays.shuffle(rng);
            weekdays.truncate(cfg.sessions_per_period);
            let spread = cfg.attendance_spread;
            let attend: Vec<f64> = clique
                .members
                .iter()
                .map(|_| {
                    let p = cfg.normal_attendance_prob + rng.random_range(-spread..=spread);
                    p.clamp(0.0, 1.0)
                })
                .collect();
            for d in 0..days {
                let day_start = t0 + d as i64 * DAY;
                if weekdays.contains(&(d % cfg.normal_period)) {
                    let lead = day_start + library_time(rng);
                    for (&m, &p) in clique.members.iter().zip(&attend) {
                        if !is_star[m] && rng.random::<f64>() < p {
                            push_visit(&mut out, &ids[m], lead + member_offset(rng), rng);
                        }
                    }
                }
                for &m in clique.members.iter().filter(|&&m| is_star[m]) {
                    if rng.random::<f64>() < cfg.star_noise_prob {
                        push_visit(&mut out, &ids[m], day_start + library_time(rng), rng);
                    }
                }
            }
        }
    }
    out
}

fn lms_events<R: Rng>(
    id: &StudentId,
    star: bool,
    cfg: &SynthConfig,
    cal: &SemesterCalendar,
    rng: &mut R,
) -> Vec<BehaviorEvent> {
    let mean = if star { cfg.lms_rate_star } else { cfg.lms_rate_normal };
    let shape = cfg.lms_rate_shape;
    let rate: f64 = Gamma::new(shape, mean / shape).expect("validated").sample(rng);
    let weights: Vec<f64> = KIND_WEIGHTS
        .iter()
        .zip(STAR_KIND_TILT)
        .map(|(&w, t)| if star { w * t } else { w })
        .collect();
    let kinds = rand::distr::weighted::WeightedIndex::new(&weights).expect("positive weights");
    let days = cal.day_count();
    let t0 = cal.start_timestamp();
    let mut out = Vec::new();
    for d in 0..days {
        // Everyone ramps up towards the end of term.
        let ramp = 0.7 + 0.6 * d as f64 / days as f64;
        let lambda = rate * ramp;
        if lambda <= 0.0 {
            continue;
        }
        let count = Poisson::new(lambda).map_or(0.0, |p| p.sample(rng)) as usize;
        for _ in 0..count {
            let ts = t0 + d as i64 * DAY + rng.random_range(7 * HOUR..DAY);
            let kind = ModuleKind::ALL[kinds.sample(rng)];
            out.push(BehaviorEvent::new(id.clone(), ts, Stream::Lms(kind)));
        }
    }
    out
}

fn gpa<R: Rng>(star: bool, rng: &mut R) -> f64 {
    // Hundredths, so the text form round-trips exactly.
    let cents = if star {
        rng.random_range(50..200)
    } else {
        rng.random_range(200..=430)
    };
    f64::from(cents) / 100.0
}

/// Generate a cohort. Identical configs (including `rng_seed`) give
/// identical bundles regardless of thread count.
pub fn generate(cfg: &SynthConfig, cal: &SemesterCalendar) -> Result<CohortBundle> {
    cfg.validate()?;
    let n = cfg.n_students;
    let n_star = cfg.star_count();
    let mut rng = seed::rng(seed::sub_seed(cfg.rng_seed, "partition"));
    let cliques = partition(cfg, n_star, &mut rng);

    let width = (n.max(2) - 1).to_string().len().max(4);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let ids: Vec<StudentId> = order
        .iter()
        .map(|&k| StudentId::new(format!("s{k:0width$}")))
        .collect::<Result<_>>()?;
    let is_star: Vec<bool> = (0..n).map(|i| i < n_star).collect();

    let lib_seed = seed::sub_seed(cfg.rng_seed, "library");
    let lms_seed = seed::sub_seed(cfg.rng_seed, "lms");
    let mut events: Vec<BehaviorEvent> = cliques
        .par_iter()
        .enumerate()
        .flat_map_iter(|(c, clique)| {
            let mut r = seed::rng(seed::stream_seed(lib_seed, c as u64));
            clique_library(clique, &ids, &is_star, cfg, cal, &mut r)
        })
        .collect();
    let lms: Vec<BehaviorEvent> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut r = seed::rng(seed::stream_seed(lms_seed, i as u64));
            lms_events(&ids[i], is_star[i], cfg, cal, &mut r)
        })
        .collect();
    events.extend(lms);
    events.retain(|e| cal.contains(e.timestamp));

    let mut gpa_rng = seed::rng(seed::sub_seed(cfg.rng_seed, "gpa"));
    let labels = (0..n)
        .map(|i| StarLabel::new(ids[i].clone(), gpa(is_star[i], &mut gpa_rng)))
        .collect::<Result<Vec<_>>>()?;
    CohortBundle::new(events, labels, *cal)
}

/// One `(class, metric, value)` line of a cohort overview.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub class: &'static str,
    pub metric: &'static str,
    pub value: f64,
}

pub const SUMMARY_METRICS: [&str; 7] = [
    "population",
    "lms_events_mean",
    "lms_first_two_weeks_mean",
    "lms_last_two_weeks_mean",
    "library_checkins_mean",
    "library_first_two_weeks_mean",
    "library_last_two_weeks_mean",
];

/// Population and per-student activity averages for STAR and other
/// students; one row per class per metric.
pub fn describe(bundle: &CohortBundle) -> Vec<SummaryRow> {
    use std::collections::HashMap;
    let cal = &bundle.calendar;
    let days = cal.day_count();
    let star: HashMap<&StudentId, bool> = bundle.labels.iter().map(|l| (&l.student, l.is_star)).collect();
    // [class][metric]
    let mut sums = [[0.0f64; 7]; 2];
    for l in &bundle.labels {
        sums[usize::from(l.is_star)][0] += 1.0;
    }
    for e in &bundle.events {
        let Some(&s) = star.get(&e.student) else {
            continue;
        };
        let Ok(d) = cal.day_index(e.timestamp) else {
            continue;
        };
        let base = match e.stream.tag() {
            StreamTag::Lms => 1,
            StreamTag::Library => 4,
        };
        let row = &mut sums[usize::from(s)];
        row[base] += 1.0;
        if d < 14 {
            row[base + 1] += 1.0;
        }
        if d + 14 >= days {
            row[base + 2] += 1.0;
        }
    }
    let mut out = Vec::new();
    for (class, idx) in [("STAR", 1usize), ("other", 0)] {
        let pop = sums[idx][0];
        for (m, metric) in SUMMARY_METRICS.iter().enumerate() {
            let value = if m == 0 {
                pop
            } else if pop > 0.0 {
                sums[idx][m] / pop
            } else {
                0.0
            };
            out.push(SummaryRow {
                class,
                metric,
                value,
            });
        }
    }
    out
}
