//! Domain types shared by every stage of the pipeline.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::ops::Range;
use std::str::FromStr;
use std::sync::Arc;

use chrono::{FixedOffset, NaiveDate};

use crate::{Error, Result, Scalar};

pub const SECONDS_PER_DAY: i64 = 86_400;
pub const SECONDS_PER_WEEK: i64 = 7 * SECONDS_PER_DAY;

/// GPA strictly below this marks a student at risk.
pub const STAR_GPA_THRESHOLD: f64 = 2.0;
pub const MAX_GPA: f64 = 4.3;

/// Anonymized student identifier. Cheap to clone.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StudentId(Arc<str>);

impl StudentId {
    pub fn new(id: impl AsRef<str>) -> Result<Self> {
        let id = id.as_ref().trim();
        if id.is_empty() {
            return Err(Error::validation("student id must be non-empty"));
        }
        Ok(StudentId(Arc::from(id)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for StudentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StudentId({})", self.0)
    }
}

impl fmt::Display for StudentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A semester of whole local days in one fixed UTC offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SemesterCalendar {
    start: NaiveDate,
    end: NaiveDate,
    week_count: u32,
    offset: FixedOffset,
}

impl SemesterCalendar {
    /// Calendar of `week_count` full weeks starting at `start`.
    pub fn new(start: NaiveDate, week_count: u32, offset: FixedOffset) -> Result<Self> {
        if week_count == 0 {
            return Err(Error::validation("week_count must be positive"));
        }
        let end = start + chrono::Duration::days(i64::from(week_count) * 7 - 1);
        Self::from_bounds(start, end, offset)
    }

    /// Calendar spanning `start..=end`; the last week may be partial.
    pub fn from_bounds(start: NaiveDate, end: NaiveDate, offset: FixedOffset) -> Result<Self> {
        if end <= start {
            return Err(Error::validation(format!(
                "calendar end {end} must be after start {start}"
            )));
        }
        let days = (end - start).num_days() + 1;
        let week_count = u32::try_from((days + 6) / 7)
            .map_err(|_| Error::validation("calendar too long"))?;
        Ok(SemesterCalendar {
            start,
            end,
            week_count,
            offset,
        })
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        self.end
    }

    pub fn week_count(&self) -> u32 {
        self.week_count
    }

    pub fn offset(&self) -> FixedOffset {
        self.offset
    }

    pub fn day_count(&self) -> usize {
        ((self.end - self.start).num_days() + 1) as usize
    }

    /// Epoch seconds of local midnight opening the first day.
    pub fn start_timestamp(&self) -> i64 {
        let midnight = self
            .start
            .and_hms_opt(0, 0, 0)
            .expect("midnight exists")
            .and_utc()
            .timestamp();
        midnight - i64::from(self.offset.local_minus_utc())
    }

    /// Exclusive upper bound: local midnight after the last day.
    pub fn end_timestamp(&self) -> i64 {
        self.start_timestamp() + self.day_count() as i64 * SECONDS_PER_DAY
    }

    pub fn contains(&self, timestamp: i64) -> bool {
        (self.start_timestamp()..self.end_timestamp()).contains(&timestamp)
    }

    /// 0-based local day of `timestamp`.
    pub fn day_index(&self, timestamp: i64) -> Result<usize> {
        if !self.contains(timestamp) {
            return Err(Error::range(format!(
                "timestamp {timestamp} outside calendar [{}, {})",
                self.start_timestamp(),
                self.end_timestamp()
            )));
        }
        Ok(((timestamp - self.start_timestamp()) / SECONDS_PER_DAY) as usize)
    }

    /// Local seconds since midnight of `timestamp`.
    pub fn seconds_of_day(&self, timestamp: i64) -> i64 {
        (timestamp - self.start_timestamp()).rem_euclid(SECONDS_PER_DAY)
    }

    /// Instant ending week `week` (1-based). Events at or after it are truncated.
    pub fn week_cutoff(&self, week: u32) -> Result<i64> {
        if week == 0 || week > self.week_count {
            return Err(Error::range(format!(
                "week {week} outside 1..={}",
                self.week_count
            )));
        }
        let cut = self.start_timestamp() + i64::from(week) * SECONDS_PER_WEEK;
        Ok(cut.min(self.end_timestamp()))
    }
}

/// The 13 LMS behaviors recorded in the clickstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModuleKind {
    Login,
    Logout,
    Announcement,
    CourseAccess,
    GradeCenter,
    DiscussionBoard,
    GroupAccess,
    PersonalInfo,
    LecturerInfo,
    Journal,
    Assignment,
    Quiz,
    MaterialDownload,
}

impl ModuleKind {
    pub const ALL: [ModuleKind; 13] = [
        ModuleKind::Login,
        ModuleKind::Logout,
        ModuleKind::Announcement,
        ModuleKind::CourseAccess,
        ModuleKind::GradeCenter,
        ModuleKind::DiscussionBoard,
        ModuleKind::GroupAccess,
        ModuleKind::PersonalInfo,
        ModuleKind::LecturerInfo,
        ModuleKind::Journal,
        ModuleKind::Assignment,
        ModuleKind::Quiz,
        ModuleKind::MaterialDownload,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModuleKind::Login => "login",
            ModuleKind::Logout => "logout",
            ModuleKind::Announcement => "announcement",
            ModuleKind::CourseAccess => "course_access",
            ModuleKind::GradeCenter => "grade_center",
            ModuleKind::DiscussionBoard => "discussion_board",
            ModuleKind::GroupAccess => "group_access",
            ModuleKind::PersonalInfo => "personal_info",
            ModuleKind::LecturerInfo => "lecturer_info",
            ModuleKind::Journal => "journal",
            ModuleKind::Assignment => "assignment",
            ModuleKind::Quiz => "quiz",
            ModuleKind::MaterialDownload => "material_download",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for ModuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModuleKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::validation(format!("unknown module kind {s:?}")))
    }
}

/// Source of a behavior event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stream {
    Lms(ModuleKind),
    LibraryCheckin,
}

impl Stream {
    pub fn tag(self) -> StreamTag {
        match self {
            Stream::Lms(_) => StreamTag::Lms,
            Stream::LibraryCheckin => StreamTag::Library,
        }
    }

    pub fn module_kind(self) -> Option<ModuleKind> {
        match self {
            Stream::Lms(kind) => Some(kind),
            Stream::LibraryCheckin => None,
        }
    }
}

/// Stream granularity used for activity sequences: any LMS event, or a check-in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StreamTag {
    Lms,
    Library,
}

impl StreamTag {
    pub const ALL: [StreamTag; 2] = [StreamTag::Lms, StreamTag::Library];

    pub fn as_str(self) -> &'static str {
        match self {
            StreamTag::Lms => "LMS",
            StreamTag::Library => "LIB",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BehaviorEvent {
    pub student: StudentId,
    pub timestamp: i64,
    pub stream: Stream,
}

impl BehaviorEvent {
    pub fn new(student: StudentId, timestamp: i64, stream: Stream) -> Self {
        BehaviorEvent {
            student,
            timestamp,
            stream,
        }
    }

    /// Total order used to sort event logs; independent of input order.
    pub fn sort_key(&self) -> (i64, &str, Stream) {
        (self.timestamp, self.student.as_str(), self.stream)
    }
}

/// One bit per calendar day.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivitySequence {
    pub student: StudentId,
    pub stream: StreamTag,
    pub bits: Vec<u8>,
}

impl ActivitySequence {
    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b != 0).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarLabel {
    pub student: StudentId,
    pub gpa: f64,
    pub is_star: bool,
}

impl StarLabel {
    pub fn new(student: StudentId, gpa: f64) -> Result<Self> {
        if !(0.0..=MAX_GPA).contains(&gpa) {
            return Err(Error::validation(format!(
                "gpa {gpa} for {student} outside [0, {MAX_GPA}]"
            )));
        }
        Ok(StarLabel {
            student,
            gpa,
            is_star: gpa < STAR_GPA_THRESHOLD,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BlockKind {
    Statistical,
    Regularity,
    Embedding,
}

impl BlockKind {
    pub fn prefix(self) -> &'static str {
        match self {
            BlockKind::Statistical => "stat",
            BlockKind::Regularity => "reg",
            BlockKind::Embedding => "emb",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnBlock {
    pub kind: BlockKind,
    pub start: usize,
    pub len: usize,
}

impl ColumnBlock {
    pub fn range(&self) -> Range<usize> {
        self.start..self.start + self.len
    }
}

/// Per-student feature rows with named, block-partitioned columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable<T> {
    students: Vec<StudentId>,
    rows: Vec<Vec<T>>,
    column_names: Vec<String>,
    blocks: Vec<ColumnBlock>,
    index: HashMap<StudentId, usize>,
}

impl<T: Scalar> FeatureTable<T> {
    /// Empty table with one block per `(kind, column names)` entry, in order.
    pub fn new(blocks: Vec<(BlockKind, Vec<String>)>) -> Self {
        let mut column_names = Vec::new();
        let mut spans = Vec::new();
        for (kind, names) in blocks {
            spans.push(ColumnBlock {
                kind,
                start: column_names.len(),
                len: names.len(),
            });
            column_names.extend(names);
        }
        FeatureTable {
            students: Vec::new(),
            rows: Vec::new(),
            column_names,
            blocks: spans,
            index: HashMap::new(),
        }
    }

    pub fn push_row(&mut self, student: StudentId, row: Vec<T>) -> Result<()> {
        if row.len() != self.width() {
            return Err(Error::validation(format!(
                "row for {student} has {} values, table has {} columns",
                row.len(),
                self.width()
            )));
        }
        if let Some(col) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "non-finite value in column {} for {student}",
                self.column_names[col]
            )));
        }
        if self.index.contains_key(&student) {
            return Err(Error::validation(format!("duplicate row for {student}")));
        }
        self.index.insert(student.clone(), self.rows.len());
        self.students.push(student);
        self.rows.push(row);
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.column_names.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn students(&self) -> &[StudentId] {
        &self.students
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn row(&self, student: &StudentId) -> Option<&[T]> {
        self.index.get(student).map(|&i| self.rows[i].as_slice())
    }

    pub fn position(&self, student: &StudentId) -> Option<usize> {
        self.index.get(student).copied()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn blocks(&self) -> &[ColumnBlock] {
        &self.blocks
    }

    pub fn block(&self, kind: BlockKind) -> Option<&ColumnBlock> {
        self.blocks.iter().find(|b| b.kind == kind)
    }

    /// Column indices of the requested blocks, in table order.
    pub fn columns_of(&self, kinds: &[BlockKind]) -> Vec<usize> {
        self.blocks
            .iter()
            .filter(|b| kinds.contains(&b.kind))
            .flat_map(|b| b.range())
            .collect()
    }

    /// Table restricted to one block, same student order.
    pub fn block_table(&self, kind: BlockKind) -> Option<FeatureTable<T>> {
        let span = self.block(kind)?.range();
        let mut out = FeatureTable::new(vec![(kind, self.column_names[span.clone()].to_vec())]);
        for (s, row) in self.students.iter().zip(&self.rows) {
            out.push_row(s.clone(), row[span.clone()].to_vec())
                .expect("sub-row of a valid row is valid");
        }
        Some(out)
    }

    /// CSV with a `student_id` column followed by every feature column.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["student_id".to_string()];
        header.extend(self.column_names.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for (s, row) in self.students.iter().zip(&self.rows) {
            let mut rec = Vec::with_capacity(row.len() + 1);
            rec.push(s.to_string());
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<features>", e))?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io("<csv>", io),
        other => Error::validation(format!("csv: {other:?}")),
    }
}
