//! Bootleg score features, time maps and line timelines, plus their JSON
//! file formats.
//!
//! A bootleg score is a 62 x N binary matrix: each column marks which staff
//! line positions hold a notehead. Columns are stored bit-packed in a `u64`
//! with bit `b` standing for staff position `b` (bit 0 is the lowest
//! position). The top two bits are always clear.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of staff line positions in a bootleg score column.
pub const STAFF_POSITIONS: usize = 62;

const COLUMN_MASK: u64 = (1 << STAFF_POSITIONS) - 1;

/// One bit-packed bootleg score column.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PackedColumn(u64);

impl PackedColumn {
    pub const EMPTY: PackedColumn = PackedColumn(0);

    pub fn from_bits(bits: u64) -> Result<Self> {
        if bits & !COLUMN_MASK != 0 {
            return Err(Error::ColumnOverflow(bits));
        }
        Ok(PackedColumn(bits))
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Number of occupied staff positions.
    pub fn count(self) -> u32 {
        self.0.count_ones()
    }

    /// Inner product of the two binary column vectors.
    pub fn dot(self, other: PackedColumn) -> u32 {
        (self.0 & other.0).count_ones()
    }

    pub fn contains(self, position: usize) -> bool {
        position < STAFF_POSITIONS && self.0 & (1 << position) != 0
    }

    /// Occupied positions in ascending order.
    pub fn positions(self) -> Vec<usize> {
        (0..STAFF_POSITIONS).filter(|&b| self.contains(b)).collect()
    }

    /// Lowercase hex without prefix, as used by `.bscore.json` files.
    pub fn to_hex(self) -> String {
        format!("{:x}", self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        if s.is_empty() || s.len() > 16 {
            return Err(Error::invalid(format!(
                "expected 1 to 16 hex digits, got {:?}",
                s
            )));
        }
        if !s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
            return Err(Error::invalid(format!(
                "{:?} is not lowercase hex",
                s
            )));
        }
        let bits = u64::from_str_radix(s, 16).map_err(|e| Error::invalid(e.to_string()))?;
        PackedColumn::from_bits(bits)
    }
}

impl fmt::Display for PackedColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:x}", self.0)
    }
}

/// Packs a set of staff positions into a column. Duplicates collapse.
pub fn pack_column<I>(positions: I) -> Result<PackedColumn>
where
    I: IntoIterator<Item = usize>,
{
    let mut bits = 0u64;
    for p in positions {
        if p >= STAFF_POSITIONS {
            return Err(Error::InvalidPosition(p));
        }
        bits |= 1 << p;
    }
    Ok(PackedColumn(bits))
}

pub fn unpack_column(column: PackedColumn) -> BTreeSet<usize> {
    column.positions().into_iter().collect()
}

/// One line of sheet music.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BootlegFragment {
    pub line_id: i64,
    pub columns: Vec<PackedColumn>,
    /// Provenance only; alignment never reads it.
    pub page: i64,
    /// Top and bottom pixel rows in the 300 dpi page image. Provenance only.
    pub pixel_range: (i64, i64),
}

impl BootlegFragment {
    pub fn new(line_id: i64, columns: Vec<PackedColumn>) -> Self {
        BootlegFragment {
            line_id,
            columns,
            page: 0,
            pixel_range: (0, 0),
        }
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

/// Checks the invariants alignment relies on: at least one fragment and no
/// empty fragments.
pub fn validate_sheet(fragments: &[BootlegFragment]) -> Result<()> {
    if fragments.is_empty() {
        return Err(Error::invalid("sheet has no fragments"));
    }
    for (idx, frag) in fragments.iter().enumerate() {
        if frag.is_empty() {
            return Err(Error::EmptyFragment {
                fragment: idx,
                line_id: frag.line_id,
            });
        }
    }
    Ok(())
}

/// The performance bootleg score (the reference sequence).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PerformanceSequence {
    columns: Vec<PackedColumn>,
}

impl PerformanceSequence {
    pub fn new(columns: Vec<PackedColumn>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::invalid("performance sequence has no columns"));
        }
        Ok(PerformanceSequence { columns })
    }

    pub fn columns(&self) -> &[PackedColumn] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

/// Timestamp (seconds) of every performance column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TimeMapRepr", into = "TimeMapRepr")]
pub struct TimeMap {
    times: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TimeMapRepr {
    times: Vec<f64>,
}

impl TryFrom<TimeMapRepr> for TimeMap {
    type Error = Error;

    fn try_from(r: TimeMapRepr) -> Result<Self> {
        TimeMap::new(r.times)
    }
}

impl From<TimeMap> for TimeMapRepr {
    fn from(t: TimeMap) -> Self {
        TimeMapRepr { times: t.times }
    }
}

impl TimeMap {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::invalid("time map is empty"));
        }
        if !times.iter().all(|t| t.is_finite()) {
            return Err(Error::invalid("time map contains non-finite values"));
        }
        if times[0] < 0.0 {
            return Err(Error::invalid("time map starts before 0"));
        }
        if let Some(i) = times.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::invalid(format!(
                "time map decreases at index {}",
                i + 1
            )));
        }
        Ok(TimeMap { times })
    }

    /// Evenly spaced columns starting at 0.
    pub fn uniform(len: usize, seconds_per_column: f64) -> Result<Self> {
        TimeMap::new((0..len).map(|i| i as f64 * seconds_per_column).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// How long column `c` is on screen: the gap to the next timestamp, or
    /// for the final column the gap before it (0 for a single column).
    pub fn column_duration(&self, c: usize) -> f64 {
        let n = self.times.len();
        if c + 1 < n {
            self.times[c + 1] - self.times[c]
        } else if n >= 2 {
            self.times[n - 1] - self.times[n - 2]
        } else {
            0.0
        }
    }

    /// Time at which the final column stops sounding.
    pub fn end_time(&self) -> f64 {
        let last = self.times.len() - 1;
        self.times[last] + self.column_duration(last)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64, i64)", into = "(f64, f64, i64)")]
pub struct TimelineSegment {
    pub start: f64,
    pub end: f64,
    pub line_id: i64,
}

impl From<(f64, f64, i64)> for TimelineSegment {
    fn from((start, end, line_id): (f64, f64, i64)) -> Self {
        TimelineSegment {
            start,
            end,
            line_id,
        }
    }
}

impl From<TimelineSegment> for (f64, f64, i64) {
    fn from(s: TimelineSegment) -> Self {
        (s.start, s.end, s.line_id)
    }
}

/// Piecewise-constant map from time to the line being shown.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TimelineRepr", into = "TimelineRepr")]
pub struct LineTimeline {
    segments: Vec<TimelineSegment>,
}

#[derive(Serialize, Deserialize)]
struct TimelineRepr {
    segments: Vec<TimelineSegment>,
}

impl TryFrom<TimelineRepr> for LineTimeline {
    type Error = Error;

    fn try_from(r: TimelineRepr) -> Result<Self> {
        LineTimeline::new(r.segments)
    }
}

impl From<LineTimeline> for TimelineRepr {
    fn from(t: LineTimeline) -> Self {
        TimelineRepr {
            segments: t.segments,
        }
    }
}

impl LineTimeline {
    pub fn new(segments: Vec<TimelineSegment>) -> Result<Self> {
        for (i, s) in segments.iter().enumerate() {
            if !(s.start.is_finite() && s.end.is_finite()) || s.start >= s.end {
                return Err(Error::invalid(format!(
                    "timeline segment {} has bad bounds [{}, {})",
                    i, s.start, s.end
                )));
            }
        }
        if let Some(i) = segments.windows(2).position(|w| w[1].start < w[0].end) {
            return Err(Error::invalid(format!(
                "timeline segments {} and {} overlap or are unsorted",
                i,
                i + 1
            )));
        }
        Ok(LineTimeline { segments })
    }

    pub fn segments(&self) -> &[TimelineSegment] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn start(&self) -> Option<f64> {
        self.segments.first().map(|s| s.start)
    }

    pub fn end(&self) -> Option<f64> {
        self.segments.last().map(|s| s.end)
    }

    /// Line shown at time `t`, if any. Segments are half-open `[start, end)`.
    pub fn line_at(&self, t: f64) -> Option<i64> {
        let idx = self.segments.partition_point(|s| s.start <= t);
        if idx == 0 {
            return None;
        }
        let s = &self.segments[idx - 1];
        (t < s.end).then_some(s.line_id)
    }

    /// Times where one segment hands over to the next (interior only).
    pub fn transitions(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for w in self.segments.windows(2) {
            out.push(w[0].end);
            if w[1].start != w[0].end {
                out.push(w[1].start);
            }
        }
        out
    }
}

/// One matched line in a segment-level alignment. `ref_end` is inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "(i64, usize, usize)", into = "(i64, usize, usize)")]
pub struct LineMatch {
    pub line_id: i64,
    pub ref_start: usize,
    pub ref_end: usize,
}

impl From<(i64, usize, usize)> for LineMatch {
    fn from((line_id, ref_start, ref_end): (i64, usize, usize)) -> Self {
        LineMatch {
            line_id,
            ref_start,
            ref_end,
        }
    }
}

impl From<LineMatch> for (i64, usize, usize) {
    fn from(m: LineMatch) -> Self {
        (m.line_id, m.ref_start, m.ref_end)
    }
}

/// Ordered line matches over the performance, with the total path score.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SegmentAlignment {
    pub matches: Vec<LineMatch>,
    pub score: f64,
}

impl SegmentAlignment {
    /// Matched line ids in reference order.
    pub fn line_sequence(&self) -> Vec<i64> {
        self.matches.iter().map(|m| m.line_id).collect()
    }

    /// Spans must be well formed and must not overlap.
    pub fn validate(&self) -> Result<()> {
        for (i, m) in self.matches.iter().enumerate() {
            if m.ref_start > m.ref_end {
                return Err(Error::invalid(format!("match {} has start after end", i)));
            }
        }
        if let Some(i) = self
            .matches
            .windows(2)
            .position(|w| w[1].ref_start <= w[0].ref_end)
        {
            return Err(Error::invalid(format!(
                "matches {} and {} overlap",
                i,
                i + 1
            )));
        }
        Ok(())
    }
}

/// Segment-level alignment hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignConfig {
    /// Weight for staying on a line or skipping one line.
    pub alpha: f64,
    /// Jump penalty scale, in units of one average line match.
    pub gamma: f64,
    pub allow_backward_jumps: bool,
    pub allow_forward_jumps: bool,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            alpha: 0.5,
            gamma: 1.0,
            allow_backward_jumps: true,
            allow_forward_jumps: true,
        }
    }
}

impl AlignConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::invalid(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::invalid(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BscoreKind {
    Sheet,
    Performance,
}

/// Contents of a `.bscore.json` file.
#[derive(Clone, Debug, PartialEq)]
pub enum Bscore {
    Sheet(Vec<BootlegFragment>),
    Performance(PerformanceSequence),
}

#[derive(Serialize, Deserialize)]
struct BscoreFile {
    kind: BscoreKind,
    fragments: Vec<FragmentRecord>,
}

#[derive(Serialize, Deserialize)]
struct FragmentRecord {
    line_id: i64,
    page: i64,
    pixel_range: [i64; 2],
    columns: Vec<String>,
}

/// Line id carried by the single fragment of a performance file.
pub const PERFORMANCE_LINE_ID: i64 = -1;

impl Bscore {
    pub fn kind(&self) -> BscoreKind {
        match self {
            Bscore::Sheet(_) => BscoreKind::Sheet,
            Bscore::Performance(_) => BscoreKind::Performance,
        }
    }

    pub fn into_sheet(self) -> Result<Vec<BootlegFragment>> {
        match self {
            Bscore::Sheet(f) => Ok(f),
            Bscore::Performance(_) => Err(Error::invalid("expected a sheet file, got performance")),
        }
    }

    pub fn into_performance(self) -> Result<PerformanceSequence> {
        match self {
            Bscore::Performance(p) => Ok(p),
            Bscore::Sheet(_) => Err(Error::invalid("expected a performance file, got sheet")),
        }
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, BscoreParseError> {
        let file: BscoreFile = serde_json::from_str(text).map_err(BscoreParseError::Json)?;
        let mut fragments: Vec<BootlegFragment> = Vec::with_capacity(file.fragments.len());
        for (fi, rec) in file.fragments.into_iter().enumerate() {
            if rec.columns.is_empty() {
                return Err(BscoreParseError::Data(Error::EmptyFragment {
                    fragment: fi,
                    line_id: rec.line_id,
                }));
            }
            let columns = rec
                .columns
                .iter()
                .enumerate()
                .map(|(ci, s)| {
                    PackedColumn::from_hex(s).map_err(|e| Error::BadColumn {
                        fragment: fi,
                        column: ci,
                        reason: e.to_string(),
                    })
                })
                .collect::<Result<Vec<_>>>()
                .map_err(BscoreParseError::Data)?;
            fragments.push(BootlegFragment {
                line_id: rec.line_id,
                columns,
                page: rec.page,
                pixel_range: (rec.pixel_range[0], rec.pixel_range[1]),
            });
        }
        let data = |msg: String| BscoreParseError::Data(Error::Invalid(msg));
        match file.kind {
            BscoreKind::Sheet => {
                if fragments.is_empty() {
                    return Err(data("sheet file has no fragments".into()));
                }
                let mut seen = BTreeSet::new();
                for (fi, f) in fragments.iter().enumerate() {
                    if f.line_id < 0 || !seen.insert(f.line_id) {
                        return Err(data(format!(
                            "fragment {}: line_id {} is negative or repeated",
                            fi, f.line_id
                        )));
                    }
                }
                Ok(Bscore::Sheet(fragments))
            }
            BscoreKind::Performance => {
                if fragments.len() != 1 {
                    return Err(data(format!(
                        "performance file must hold exactly one fragment, found {}",
                        fragments.len()
                    )));
                }
                let frag = fragments.pop().expect("length checked above");
                if frag.line_id != PERFORMANCE_LINE_ID {
                    return Err(data(format!(
                        "performance fragment must have line_id -1, found {}",
                        frag.line_id
                    )));
                }
                Ok(Bscore::Performance(
                    PerformanceSequence::new(frag.columns).map_err(BscoreParseError::Data)?,
                ))
            }
        }
    }

    /// Canonical JSON text (pretty printed, trailing newline).
    pub fn to_json(&self) -> String {
        let record = |f: &BootlegFragment| FragmentRecord {
            line_id: f.line_id,
            page: f.page,
            pixel_range: [f.pixel_range.0, f.pixel_range.1],
            columns: f.columns.iter().map(|c| c.to_hex()).collect(),
        };
        let file = match self {
            Bscore::Sheet(frags) => BscoreFile {
                kind: BscoreKind::Sheet,
                fragments: frags.iter().map(record).collect(),
            },
            Bscore::Performance(p) => BscoreFile {
                kind: BscoreKind::Performance,
                fragments: vec![record(&BootlegFragment::new(
                    PERFORMANCE_LINE_ID,
                    p.columns.clone(),
                ))],
            },
        };
        to_canonical_json(&file)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BscoreParseError {
    #[error("malformed bscore JSON: {0}")]
    Json(serde_json::Error),
    #[error(transparent)]
    Data(Error),
}

pub fn load_bscore(path: impl AsRef<Path>) -> Result<Bscore> {
    let path = path.as_ref();
    let text = read_text(path)?;
    Bscore::from_json(&text).map_err(|e| match e {
        BscoreParseError::Json(source) => Error::Json {
            path: path.to_owned(),
            source,
        },
        BscoreParseError::Data(err) => Error::Invalid(format!("{}: {}", path.display(), err)),
    })
}

pub fn save_bscore(path: impl AsRef<Path>, bscore: &Bscore) -> Result<()> {
    write_text(path.as_ref(), &bscore.to_json())
}

pub fn load_json<T: serde::de::DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })
}

pub fn save_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    write_text(path.as_ref(), &to_canonical_json(value))
}

pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}
