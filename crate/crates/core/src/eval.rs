//! Alignment to timeline conversion and collar-based accuracy.

use serde::{Deserialize, Serialize};

use crate::bscore::{LineTimeline, SegmentAlignment, TimeMap, TimelineSegment};
use crate::error::{Error, Result};

/// Turns line matches into the line shown at every instant.
///
/// Each match is shown from the timestamp of its first column until the
/// next match starts; the last one stays up until the performance ends
/// (final timestamp plus that column's duration). Columns before the first
/// match belong to the first matched line, and skipped columns belong to the
/// line before them.
pub fn alignment_to_timeline(aln: &SegmentAlignment, timemap: &TimeMap) -> Result<LineTimeline> {
    aln.validate()?;
    let times = timemap.times();
    if let Some(m) = aln.matches.iter().find(|m| m.ref_end >= times.len()) {
        return Err(Error::invalid(format!(
            "match ends at column {} but the time map has {} entries",
            m.ref_end,
            times.len()
        )));
    }
    let mut segments = Vec::with_capacity(aln.matches.len());
    for (n, m) in aln.matches.iter().enumerate() {
        let start = if n == 0 { times[0] } else { times[m.ref_start] };
        let end = aln
            .matches
            .get(n + 1)
            .map_or_else(|| timemap.end_time(), |next| times[next.ref_start]);
        if end > start {
            segments.push(TimelineSegment {
                start,
                end,
                line_id: m.line_id,
            });
        }
    }
    LineTimeline::new(segments)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub collar: f64,
    pub scored_duration: f64,
    /// Scored stretches where the wrong line (or none) is shown.
    pub error_intervals: Vec<(f64, f64)>,
}

/// Fraction of scored ground-truth time during which `pred` shows the right
/// line. Open intervals `(t - collar, t + collar)` around every interior
/// ground-truth transition `t` are not scored. Times where `pred` shows
/// nothing count as wrong.
pub fn accuracy_with_collar(pred: &LineTimeline, gt: &LineTimeline, collar: f64) -> Result<EvalReport> {
    if !(collar >= 0.0) || !collar.is_finite() {
        return Err(Error::invalid(format!("collar must be >= 0, got {}", collar)));
    }
    if gt.is_empty() {
        return Err(Error::invalid("ground truth timeline is empty"));
    }
    let transitions = gt.transitions();
    let mut cuts: Vec<f64> = Vec::new();
    for s in gt.segments().iter().chain(pred.segments()) {
        cuts.push(s.start);
        cuts.push(s.end);
    }
    if collar > 0.0 {
        for &t in &transitions {
            cuts.push(t - collar);
            cuts.push(t + collar);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let in_collar = |t: f64| collar > 0.0 && transitions.iter().any(|&x| (t - x).abs() < collar);
    let mut scored = 0.0;
    let mut wrong = 0.0;
    let mut errors: Vec<(f64, f64)> = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        let Some(truth) = gt.line_at(mid) else { continue };
        if in_collar(mid) {
            continue;
        }
        scored += b - a;
        if pred.line_at(mid) != Some(truth) {
            wrong += b - a;
            match errors.last_mut() {
                Some(last) if last.1 == a => last.1 = b,
                _ => errors.push((a, b)),
            }
        }
    }
    if scored <= 0.0 {
        return Err(Error::invalid("nothing left to score after applying the collar"));
    }
    Ok(EvalReport {
        // Measured from the error side so short errors lose no precision.
        accuracy: 1.0 - wrong / scored,
        collar,
        scored_duration: scored,
        error_intervals: errors,
    })
}
