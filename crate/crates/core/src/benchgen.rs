//! Synthetic benchmarks with repeats and jumps.
//!
//! A schema samples `k` interior line boundaries and turns them into a play
//! order of line intervals. The performance's feature columns, time map and
//! ground truth are then spliced to follow that order.
//!
//! Randomness comes from `ChaCha8Rng::seed_from_u64` (rand_chacha 0.3) and
//! `rand::seq::index::sample` (rand 0.8), so a seed gives the same output on
//! every platform.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bscore::{
    BootlegFragment, LineTimeline, PackedColumn, PerformanceSequence, TimeMap, TimelineSegment,
    STAFF_POSITIONS,
};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemaKind {
    None,
    Repeat1,
    Repeat2,
    Repeat3,
    DsAlFine,
}

impl SchemaKind {
    pub const ALL: [SchemaKind; 5] = [
        SchemaKind::None,
        SchemaKind::Repeat1,
        SchemaKind::Repeat2,
        SchemaKind::Repeat3,
        SchemaKind::DsAlFine,
    ];

    /// Number of sampled boundaries.
    pub fn boundary_count(self) -> usize {
        match self {
            SchemaKind::None => 0,
            SchemaKind::Repeat1 => 2,
            SchemaKind::Repeat2 => 3,
            SchemaKind::Repeat3 => 4,
            SchemaKind::DsAlFine => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemaKind::None => "none",
            SchemaKind::Repeat1 => "repeat1",
            SchemaKind::Repeat2 => "repeat2",
            SchemaKind::Repeat3 => "repeat3",
            SchemaKind::DsAlFine => "dsalfine",
        }
    }
}

impl fmt::Display for SchemaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemaKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemaKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown schema {:?}", s)))
    }
}

/// Sampled boundaries for a piece with `lines` lines.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JumpSchema {
    kind: SchemaKind,
    lines: usize,
    boundaries: Vec<usize>,
}

impl JumpSchema {
    pub fn new(kind: SchemaKind, lines: usize, boundaries: Vec<usize>) -> Result<Self> {
        let k = kind.boundary_count();
        if lines < k + 1 {
            return Err(Error::invalid(format!(
                "schema {} needs at least {} lines, piece has {}",
                kind,
                k + 1,
                lines
            )));
        }
        if boundaries.len() != k {
            return Err(Error::invalid(format!(
                "schema {} takes {} boundaries, got {}",
                kind,
                k,
                boundaries.len()
            )));
        }
        if boundaries.windows(2).any(|w| w[0] >= w[1])
            || boundaries.iter().any(|&b| b == 0 || b >= lines)
        {
            return Err(Error::invalid(format!(
                "boundaries {:?} must be strictly increasing within 1..{}",
                boundaries, lines
            )));
        }
        Ok(JumpSchema {
            kind,
            lines,
            boundaries,
        })
    }

    pub fn kind(&self) -> SchemaKind {
        self.kind
    }

    pub fn lines(&self) -> usize {
        self.lines
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    /// Half-open line intervals in the order they are played.
    ///
    /// With `r` repeats and boundaries `p1 < ... < pk` (`k = r + 1`) the
    /// intervals are `[p(t-1), p(t+1))` for `t = 1..=k`, taking `p0 = 0` and
    /// `p(k+1) = L`. A D.S. al fine plays `[0, p3)` and then `[p1, p2)`.
    pub fn play_order(&self) -> Vec<Range<usize>> {
        let p = &self.boundaries;
        match self.kind {
            SchemaKind::None => vec![0..self.lines],
            SchemaKind::DsAlFine => vec![0..p[2], p[0]..p[1]],
            _ => {
                let mut ext = Vec::with_capacity(p.len() + 2);
                ext.push(0);
                ext.extend_from_slice(p);
                ext.push(self.lines);
                (1..=p.len()).map(|t| ext[t - 1]..ext[t + 1]).collect()
            }
        }
    }

    pub fn line_sequence(&self) -> Vec<usize> {
        self.play_order().into_iter().flatten().collect()
    }
}

/// Samples `k` distinct interior boundaries uniformly from `1..lines`.
pub fn sample_schema(lines: usize, kind: SchemaKind, seed: u64) -> Result<JumpSchema> {
    let k = kind.boundary_count();
    if lines < k + 1 {
        return Err(Error::invalid(format!(
            "schema {} needs at least {} lines, piece has {}",
            kind,
            k + 1,
            lines
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut boundaries: Vec<usize> = if k == 0 {
        Vec::new()
    } else {
        index::sample(&mut rng, lines - 1, k)
            .into_iter()
            .map(|b| b + 1)
            .collect()
    };
    boundaries.sort_unstable();
    JumpSchema::new(kind, lines, boundaries)
}

/// Schema file contents.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaRecord {
    pub kind: SchemaKind,
    pub boundaries: Vec<usize>,
    pub seed: u64,
}

/// Columns of one sheet line inside a performance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineSpan {
    pub line_id: i64,
    pub cols: Range<usize>,
}

fn check_spans(spans: &[LineSpan], perf_len: usize) -> Result<()> {
    let mut expected = 0;
    for (i, s) in spans.iter().enumerate() {
        if s.cols.start != expected || s.cols.is_empty() {
            return Err(Error::invalid(format!(
                "line span {} ({:?}) is empty or not contiguous with the previous one",
                i, s.cols
            )));
        }
        expected = s.cols.end;
    }
    if expected != perf_len {
        return Err(Error::invalid(format!(
            "line spans cover {} of {} performance columns",
            expected, perf_len
        )));
    }
    Ok(())
}

/// Recovers per-line column spans of an in-order performance from its ground
/// truth timeline: column `c` belongs to the segment containing its
/// timestamp. The timeline must list every sheet line once, in order.
pub fn line_spans_from_timeline(gt: &LineTimeline, timemap: &TimeMap) -> Result<Vec<LineSpan>> {
    let mut spans: Vec<LineSpan> = Vec::new();
    for (c, &t) in timemap.times().iter().enumerate() {
        let line = gt
            .line_at(t)
            .ok_or_else(|| Error::invalid(format!("column {} at {} s has no ground truth line", c, t)))?;
        match spans.last_mut() {
            Some(s) if s.line_id == line => s.cols.end = c + 1,
            _ => spans.push(LineSpan {
                line_id: line,
                cols: c..c + 1,
            }),
        }
    }
    Ok(spans)
}

/// Performance, time map and ground truth after splicing.
#[derive(Clone, Debug, PartialEq)]
pub struct Spliced {
    pub perf: PerformanceSequence,
    pub timemap: TimeMap,
    pub gt: LineTimeline,
    /// Output times at which a jump happens.
    pub jump_times: Vec<f64>,
}

/// Rearranges a performance to follow `schema`'s play order. `spans` lists
/// the columns of every sheet line, in sheet order, tiling the performance.
///
/// Each retained column keeps its original duration, so time flows
/// continuously across splice points.
pub fn splice_performance(
    perf: &PerformanceSequence,
    timemap: &TimeMap,
    gt: &LineTimeline,
    spans: &[LineSpan],
    schema: &JumpSchema,
) -> Result<Spliced> {
    if timemap.len() != perf.len() {
        return Err(Error::invalid(format!(
            "time map has {} entries for {} columns",
            timemap.len(),
            perf.len()
        )));
    }
    check_spans(spans, perf.len())?;
    if spans.len() != schema.lines() {
        return Err(Error::invalid(format!(
            "schema is for {} lines but the piece has {}",
            schema.lines(),
            spans.len()
        )));
    }
    if schema.kind() == SchemaKind::None {
        return Ok(Spliced {
            perf: perf.clone(),
            timemap: timemap.clone(),
            gt: gt.clone(),
            jump_times: Vec::new(),
        });
    }

    let mut columns = Vec::new();
    let mut times = Vec::new();
    let mut durations = Vec::new();
    // (line_id, first output column) for every played line.
    let mut starts = Vec::new();
    let mut jump_positions = Vec::new();
    let mut clock = timemap.times()[spans[0].cols.start];
    for (n, interval) in schema.play_order().into_iter().enumerate() {
        if n > 0 {
            jump_positions.push(columns.len());
        }
        for span in &spans[interval] {
            starts.push((span.line_id, columns.len()));
            for c in span.cols.clone() {
                columns.push(perf.columns()[c]);
                times.push(clock);
                let d = timemap.column_duration(c);
                durations.push(d);
                clock += d;
            }
        }
    }
    let end = clock;
    let segment_end = |pos: usize| times.get(pos).copied().unwrap_or(end);
    let mut segments = Vec::with_capacity(starts.len());
    for (n, &(line_id, pos)) in starts.iter().enumerate() {
        let next = starts.get(n + 1).map_or(columns.len(), |s| s.1);
        let (start, stop) = (times[pos], segment_end(next));
        if stop > start {
            segments.push(TimelineSegment {
                start,
                end: stop,
                line_id,
            });
        }
    }
    Ok(Spliced {
        perf: PerformanceSequence::new(columns)?,
        jump_times: jump_positions.iter().map(|&p| times[p]).collect(),
        timemap: TimeMap::new(times)?,
        gt: LineTimeline::new(segments)?,
    })
}

/// A generated test piece whose performance plays every line once, in order.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthPiece {
    pub fragments: Vec<BootlegFragment>,
    pub perf: PerformanceSequence,
    pub timemap: TimeMap,
    pub gt: LineTimeline,
    pub spans: Vec<LineSpan>,
}

pub const SYNTH_SECONDS_PER_COLUMN: f64 = 0.5;

const LINES_PER_PAGE: usize = 6;

fn random_column(rng: &mut ChaCha8Rng, density: f64) -> PackedColumn {
    loop {
        let mut bits = 0u64;
        for b in 0..STAFF_POSITIONS {
            if rng.gen_bool(density) {
                bits |= 1 << b;
            }
        }
        if bits != 0 {
            return PackedColumn::from_bits(bits).expect("62-bit column");
        }
    }
}

/// Random piece of `lines` lines with `cols_per_line` pairwise distinct
/// nonzero columns each. The performance is the exact concatenation, at
/// 0.5 s per column.
pub fn synth_piece(seed: u64, lines: usize, cols_per_line: usize, fill_density: f64) -> Result<SynthPiece> {
    if lines == 0 || cols_per_line == 0 {
        return Err(Error::invalid("synth_piece needs at least one line and column"));
    }
    if !(fill_density > 0.0 && fill_density <= 1.0) {
        return Err(Error::invalid(format!("fill density {} not in (0, 1]", fill_density)));
    }
    let total = lines * cols_per_line;
    // All-ones is the only column at density 1, and so on for tiny spaces.
    if fill_density == 1.0 && total > 1 {
        return Err(Error::invalid("density 1 cannot produce distinct columns"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::HashSet::with_capacity(total);
    let mut all = Vec::with_capacity(total);
    while all.len() < total {
        let c = random_column(&mut rng, fill_density);
        if seen.insert(c) {
            all.push(c);
        }
    }

    let fragments: Vec<BootlegFragment> = all
        .chunks(cols_per_line)
        .enumerate()
        .map(|(i, cols)| {
            let slot = (i % LINES_PER_PAGE) as i64;
            BootlegFragment {
                line_id: i as i64,
                columns: cols.to_vec(),
                page: (i / LINES_PER_PAGE) as i64 + 1,
                pixel_range: (200 + 500 * slot, 520 + 500 * slot),
            }
        })
        .collect();
    let spans: Vec<LineSpan> = (0..lines)
        .map(|i| LineSpan {
            line_id: i as i64,
            cols: i * cols_per_line..(i + 1) * cols_per_line,
        })
        .collect();
    let line_seconds = cols_per_line as f64 * SYNTH_SECONDS_PER_COLUMN;
    let gt = LineTimeline::new(
        (0..lines)
            .map(|i| TimelineSegment {
                start: i as f64 * line_seconds,
                end: (i + 1) as f64 * line_seconds,
                line_id: i as i64,
            })
            .collect(),
    )?;
    Ok(SynthPiece {
        fragments,
        perf: PerformanceSequence::new(all)?,
        timemap: TimeMap::uniform(total, SYNTH_SECONDS_PER_COLUMN)?,
        gt,
        spans,
    })
}

/// Replaces roughly `fraction` of the columns with fresh random columns.
pub fn corrupt_columns(
    perf: &PerformanceSequence,
    fraction: f64,
    fill_density: f64,
    seed: u64,
) -> Result<PerformanceSequence> {
    if !(0.0..=1.0).contains(&fraction) || !(fill_density > 0.0 && fill_density <= 1.0) {
        return Err(Error::invalid("corruption fraction and density must lie in [0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let columns = perf
        .columns()
        .iter()
        .map(|&c| {
            if rng.gen_bool(fraction) {
                random_column(&mut rng, fill_density)
            } else {
                c
            }
        })
        .collect();
    PerformanceSequence::new(columns)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn play_order_examples() {
        let s = JumpSchema::new(SchemaKind::Repeat1, 5, vec![1, 3]).unwrap();
        assert_eq!(s.play_order(), vec![0..3, 1..5]);
        assert_eq!(s.line_sequence(), vec![0, 1, 2, 1, 2, 3, 4]);

        let s = JumpSchema::new(SchemaKind::Repeat2, 6, vec![1, 3, 5]).unwrap();
        assert_eq!(s.play_order(), vec![0..3, 1..5, 3..6]);

        let s = JumpSchema::new(SchemaKind::DsAlFine, 6, vec![1, 3, 4]).unwrap();
        assert_eq!(s.play_order(), vec![0..4, 1..3]);
        assert_eq!(s.line_sequence(), vec![0, 1, 2, 3, 1, 2]);

        let s = JumpSchema::new(SchemaKind::Repeat3, 5, vec![1, 2, 3, 4]).unwrap();
        assert_eq!(s.play_order().len(), 4);
    }

    #[test]
    fn schema_validation() {
        assert!(JumpSchema::new(SchemaKind::Repeat1, 5, vec![0, 3]).is_err());
        assert!(JumpSchema::new(SchemaKind::Repeat1, 5, vec![3, 3]).is_err());
        assert!(JumpSchema::new(SchemaKind::Repeat1, 5, vec![1, 5]).is_err());
        assert!(JumpSchema::new(SchemaKind::Repeat1, 5, vec![1]).is_err());
        assert!(sample_schema(3, SchemaKind::Repeat3, 0).is_err());
    }

    #[test]
    fn sampling_is_seeded() {
        for kind in SchemaKind::ALL {
            let a = sample_schema(8, kind, 17).unwrap();
            let b = sample_schema(8, kind, 17).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.boundaries().len(), kind.boundary_count());
        }
        // Minimal piece: every interior boundary is taken.
        let s = sample_schema(5, SchemaKind::Repeat3, 3).unwrap();
        assert_eq!(s.boundaries(), &[1, 2, 3, 4]);
    }

    #[test]
    fn synth_piece_shape() {
        let p = synth_piece(1, 4, 8, 0.1).unwrap();
        assert_eq!(p.perf.len(), 32);
        assert_eq!(p.gt.segments().len(), 4);
        for s in p.gt.segments() {
            assert_eq!(s.end - s.start, 4.0);
        }
        let unique: std::collections::HashSet<_> = p.perf.columns().iter().collect();
        assert_eq!(unique.len(), 32);
        assert!(p.perf.columns().iter().all(|c| !c.is_empty()));
        assert_eq!(p, synth_piece(1, 4, 8, 0.1).unwrap());
        assert_ne!(p.perf, synth_piece(2, 4, 8, 0.1).unwrap().perf);
    }

    #[test]
    fn splice_repeat1() {
        let p = synth_piece(5, 5, 8, 0.1).unwrap();
        let schema = JumpSchema::new(SchemaKind::Repeat1, 5, vec![1, 3]).unwrap();
        let out = splice_performance(&p.perf, &p.timemap, &p.gt, &p.spans, &schema).unwrap();
        assert_eq!(out.perf.len(), 56);
        let lines: Vec<i64> = out.gt.segments().iter().map(|s| s.line_id).collect();
        assert_eq!(lines, vec![0, 1, 2, 1, 2, 3, 4]);
        assert_eq!(out.gt.end(), Some(28.0));
        assert_eq!(out.jump_times, vec![12.0]);
        // Second pass over line 1 copies the original columns.
        assert_eq!(&out.perf.columns()[24..32], &p.perf.columns()[8..16]);
    }

    #[test]
    fn splice_none_is_identity() {
        let p = synth_piece(5, 5, 8, 0.1).unwrap();
        let schema = sample_schema(5, SchemaKind::None, 0).unwrap();
        let out = splice_performance(&p.perf, &p.timemap, &p.gt, &p.spans, &schema).unwrap();
        assert_eq!(out.perf, p.perf);
        assert_eq!(out.timemap, p.timemap);
        assert_eq!(out.gt, p.gt);
    }

    #[test]
    fn splice_preserves_uneven_durations() {
        let p = synth_piece(9, 3, 2, 0.2).unwrap();
        let timemap = TimeMap::new(vec![0.0, 1.0, 1.5, 3.5, 4.0, 4.25]).unwrap();
        let schema = JumpSchema::new(SchemaKind::Repeat1, 3, vec![1, 2]).unwrap();
        let out = splice_performance(&p.perf, &timemap, &p.gt, &p.spans, &schema).unwrap();
        // Lines 0, 1 then 1, 2.
        assert_eq!(out.timemap.times(), &[0.0, 1.0, 1.5, 3.5, 4.0, 6.0, 6.5, 6.75]);
        let segs: Vec<(f64, f64, i64)> = out.gt.segments().iter().map(|&s| s.into()).collect();
        assert_eq!(
            segs,
            vec![(0.0, 1.5, 0), (1.5, 4.0, 1), (4.0, 6.5, 1), (6.5, 7.0, 2)]
        );
    }

    #[test]
    fn splice_rejects_gapped_spans() {
        let p = synth_piece(5, 2, 4, 0.1).unwrap();
        let mut spans = p.spans.clone();
        spans[1].cols.start += 1;
        let schema = sample_schema(2, SchemaKind::None, 0).unwrap();
        assert!(splice_performance(&p.perf, &p.timemap, &p.gt, &spans, &schema).is_err());
    }

    #[test]
    fn spans_from_timeline_match_construction() {
        let p = synth_piece(3, 4, 5, 0.1).unwrap();
        assert_eq!(line_spans_from_timeline(&p.gt, &p.timemap).unwrap(), p.spans);
    }

    #[test]
    fn corruption_rate_is_roughly_right() {
        let p = synth_piece(3, 20, 10, 0.1).unwrap();
        let c = corrupt_columns(&p.perf, 0.1, 0.1, 99).unwrap();
        let changed = c
            .columns()
            .iter()
            .zip(p.perf.columns())
            .filter(|(a, b)| a != b)
            .count();
        assert!((5..=40).contains(&changed), "{changed}");
    }
}
