//! Event-log and label files, validation, and per-student binarization.
//!
//! Events file: `student_id,unix_timestamp,stream,module_kind`, where
//! `stream` is `LMS` or `LIB` and `module_kind` is empty for library rows.
//! Labels file: `student_id,gpa`. A leading header row is optional.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::model::{
    csv_err, BehaviorEvent, ModuleKind, SemesterCalendar, StarLabel, Stream, StreamTag, StudentId,
    ActivitySequence,
};
use crate::{Error, Result, Scalar};

pub const EVENTS_HEADER: [&str; 4] = ["student_id", "unix_timestamp", "stream", "module_kind"];
pub const LABELS_HEADER: [&str; 2] = ["student_id", "gpa"];

/// Days counted as the first month and as the month before exams.
pub const MONTH_DAYS: usize = 28;

const HOUR: i64 = 3600;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BadRow {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct ParsedEvents {
    pub events: Vec<BehaviorEvent>,
    pub bad_rows: Vec<BadRow>,
}

/// Events, labels and the calendar they live in.
#[derive(Debug, Clone)]
pub struct CohortBundle {
    pub events: Vec<BehaviorEvent>,
    pub labels: Vec<StarLabel>,
    pub calendar: SemesterCalendar,
}

impl CohortBundle {
    /// Sorts events and rejects duplicate labels or out-of-calendar events.
    pub fn new(
        mut events: Vec<BehaviorEvent>,
        labels: Vec<StarLabel>,
        calendar: SemesterCalendar,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.student.clone()) {
                return Err(Error::validation(format!(
                    "student {} labeled more than once",
                    l.student
                )));
            }
        }
        if let Some(e) = events.iter().find(|e| !calendar.contains(e.timestamp)) {
            return Err(Error::range(format!(
                "event at {} for {} outside calendar",
                e.timestamp, e.student
            )));
        }
        sort_events(&mut events);
        Ok(CohortBundle {
            events,
            labels,
            calendar,
        })
    }

    /// Copy keeping only events strictly before `cutoff`.
    pub fn truncated(&self, cutoff: i64) -> CohortBundle {
        CohortBundle {
            events: self
                .events
                .iter()
                .filter(|e| e.timestamp < cutoff)
                .cloned()
                .collect(),
            labels: self.labels.clone(),
            calendar: self.calendar,
        }
    }

    pub fn by_student(&self) -> BTreeMap<StudentId, Vec<BehaviorEvent>> {
        group_by_student(&self.events)
    }
}

pub fn sort_events(events: &mut [BehaviorEvent]) {
    events.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

/// Each student's events in time order.
pub fn group_by_student(events: &[BehaviorEvent]) -> BTreeMap<StudentId, Vec<BehaviorEvent>> {
    let mut map: BTreeMap<StudentId, Vec<BehaviorEvent>> = BTreeMap::new();
    for e in events {
        map.entry(e.student.clone()).or_default().push(e.clone());
    }
    for v in map.values_mut() {
        sort_events(v);
    }
    map
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn parse_event_record(rec: &csv::StringRecord, cal: &SemesterCalendar) -> Result<BehaviorEvent, String> {
    if rec.len() != 4 {
        return Err(format!("expected 4 fields, found {}", rec.len()));
    }
    let student = StudentId::new(&rec[0]).map_err(|e| e.to_string())?;
    let timestamp: i64 = rec[1]
        .parse()
        .map_err(|_| format!("bad timestamp {:?}", &rec[1]))?;
    if !cal.contains(timestamp) {
        return Err(format!("timestamp {timestamp} outside calendar"));
    }
    let stream = match (&rec[2], &rec[3]) {
        ("LIB", "") => Stream::LibraryCheckin,
        ("LIB", kind) => return Err(format!("library row carries module kind {kind:?}")),
        ("LMS", "") => return Err("LMS row without module kind".into()),
        ("LMS", kind) => Stream::Lms(kind.parse::<ModuleKind>().map_err(|e| e.to_string())?),
        (other, _) => return Err(format!("unknown stream {other:?}")),
    };
    Ok(BehaviorEvent::new(student, timestamp, stream))
}

/// Parse an events CSV. Fails once more than `max_bad_rows` rows are malformed.
pub fn read_events<R: Read>(
    input: R,
    cal: &SemesterCalendar,
    max_bad_rows: usize,
) -> Result<ParsedEvents> {
    let mut events = Vec::new();
    let mut bad_rows = Vec::new();
    for (i, rec) in reader(input).records().enumerate() {
        let line = i as u64 + 1;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                bad_rows.push(BadRow {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if line == 1 && rec.get(0) == Some(EVENTS_HEADER[0]) {
            continue;
        }
        match parse_event_record(&rec, cal) {
            Ok(e) => events.push(e),
            Err(reason) => bad_rows.push(BadRow { line, reason }),
        }
    }
    if bad_rows.len() > max_bad_rows {
        let listed: Vec<String> = bad_rows
            .iter()
            .take(10)
            .map(|b| format!("line {}: {}", b.line, b.reason))
            .collect();
        return Err(Error::validation(format!(
            "{} malformed event rows (max {max_bad_rows}): {}",
            bad_rows.len(),
            listed.join("; ")
        )));
    }
    for b in &bad_rows {
        log::warn!("skipping malformed event row at line {}: {}", b.line, b.reason);
    }
    sort_events(&mut events);
    Ok(ParsedEvents { events, bad_rows })
}

pub fn parse_events(path: &Path, cal: &SemesterCalendar, max_bad_rows: usize) -> Result<ParsedEvents> {
    read_events(open(path)?, cal, max_bad_rows).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_labels<R: Read>(input: R) -> Result<Vec<StarLabel>> {
    let mut labels = Vec::new();
    let mut seen = HashSet::new();
    for (i, rec) in reader(input).records().enumerate() {
        let line = i + 1;
        let rec = rec.map_err(csv_err)?;
        if line == 1 && rec.get(0) == Some(LABELS_HEADER[0]) {
            continue;
        }
        if rec.len() != 2 {
            return Err(Error::validation(format!(
                "labels line {line}: expected 2 fields, found {}",
                rec.len()
            )));
        }
        let student = StudentId::new(&rec[0])?;
        let gpa: f64 = rec[1]
            .parse()
            .map_err(|_| Error::validation(format!("labels line {line}: bad gpa {:?}", &rec[1])))?;
        if !seen.insert(student.clone()) {
            return Err(Error::validation(format!(
                "labels line {line}: duplicate student {student}"
            )));
        }
        labels.push(
            StarLabel::new(student, gpa)
                .map_err(|e| Error::validation(format!("labels line {line}: {e}")))?,
        );
    }
    Ok(labels)
}

pub fn parse_labels(path: &Path) -> Result<Vec<StarLabel>> {
    read_labels(open(path)?)
}

pub fn write_events<W: Write>(events: &[BehaviorEvent], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(out));
    w.write_record(EVENTS_HEADER).map_err(csv_err)?;
    for e in events {
        let (stream, kind) = match e.stream {
            Stream::Lms(k) => ("LMS", k.as_str()),
            Stream::LibraryCheckin => ("LIB", ""),
        };
        w.write_record([e.student.as_str(), &e.timestamp.to_string(), stream, kind])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<events>", e))
}

pub fn write_labels<W: Write>(labels: &[StarLabel], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(out));
    w.write_record(LABELS_HEADER).map_err(csv_err)?;
    for l in labels {
        w.write_record([l.student.as_str(), &l.gpa.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<labels>", e))
}

/// Daily activity bits for `(student, stream)` from events strictly before `cutoff`.
pub fn binarize(
    events: &[BehaviorEvent],
    student: &StudentId,
    stream: StreamTag,
    cal: &SemesterCalendar,
    cutoff: i64,
) -> ActivitySequence {
    let mut bits = vec![0u8; cal.day_count()];
    for e in events {
        if &e.student != student || e.stream.tag() != stream || e.timestamp >= cutoff {
            continue;
        }
        if let Ok(d) = cal.day_index(e.timestamp) {
            bits[d] = 1;
        }
    }
    ActivitySequence {
        student: student.clone(),
        stream,
        bits,
    }
}

/// Names of the statistical feature columns, in vector order.
pub fn statistical_feature_names() -> Vec<String> {
    let mut names: Vec<String> = ModuleKind::ALL
        .iter()
        .map(|k| format!("stat_{}", k.as_str()))
        .collect();
    names.extend(
        [
            "stat_lib_total",
            "stat_lib_morning",
            "stat_lib_afternoon",
            "stat_lib_after_midnight",
            "stat_lib_first_month",
            "stat_lib_pre_exam",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    names
}

pub const STAT_WIDTH: usize = ModuleKind::ALL.len() + 6;

/// Event counts before `cutoff`: one per LMS kind, then library totals
/// and library counts by time of day and semester period.
///
/// Morning is 06:00-12:00, afternoon 12:00-18:00, after midnight
/// 00:00-06:00 (local). The first month is the first 28 days and the
/// pre-exam month the last 28 days of the calendar.
pub fn statistical_features<T: Scalar>(
    events: &[BehaviorEvent],
    student: &StudentId,
    cal: &SemesterCalendar,
    cutoff: i64,
) -> Vec<T> {
    let n_kinds = ModuleKind::ALL.len();
    let mut counts = vec![0usize; STAT_WIDTH];
    let days = cal.day_count();
    for e in events {
        if &e.student != student || e.timestamp >= cutoff {
            continue;
        }
        let Ok(day) = cal.day_index(e.timestamp) else {
            continue;
        };
        match e.stream {
            Stream::Lms(kind) => counts[kind.index()] += 1,
            Stream::LibraryCheckin => {
                counts[n_kinds] += 1;
                let sec = cal.seconds_of_day(e.timestamp);
                if (6 * HOUR..12 * HOUR).contains(&sec) {
                    counts[n_kinds + 1] += 1;
                } else if (12 * HOUR..18 * HOUR).contains(&sec) {
                    counts[n_kinds + 2] += 1;
                } else if sec < 6 * HOUR {
                    counts[n_kinds + 3] += 1;
                }
                if day < MONTH_DAYS {
                    counts[n_kinds + 4] += 1;
                }
                if day + MONTH_DAYS >= days {
                    counts[n_kinds + 5] += 1;
                }
            }
        }
    }
    counts.into_iter().map(T::from_count).collect()
}
