//! Baselines that align the concatenated sheet against the performance.
//!
//! [`subseq_align`] runs plain subsequence DTW over the whole concatenated
//! sheet, so it can never revisit a line. [`jump_dtw_align`] adds
//! long-range transitions: the first row of every line may be entered from
//! the last row of any line one reference column earlier, at an additive
//! penalty. Every line boundary is a candidate jump location.

use crate::bscore::{
    validate_sheet, BootlegFragment, LineMatch, PackedColumn, PerformanceSequence,
    SegmentAlignment,
};
use crate::dtw::{pairwise_cost, subsequence_dtw_with, CostMatrix, StepPattern};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct JumpConfig {
    /// Added to every long-range transition. `f64::INFINITY` disables jumps.
    pub jump_penalty: f64,
    pub pattern: StepPattern,
}

impl Default for JumpConfig {
    fn default() -> Self {
        JumpConfig {
            jump_penalty: 0.0,
            pattern: StepPattern::default(),
        }
    }
}

impl JumpConfig {
    pub fn with_penalty(jump_penalty: f64) -> Self {
        JumpConfig {
            jump_penalty,
            ..JumpConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.jump_penalty >= 0.0) {
            return Err(Error::invalid(format!(
                "jump penalty must be >= 0, got {}",
                self.jump_penalty
            )));
        }
        Ok(())
    }
}

/// Row layout of a concatenated sheet: `bounds[f]..bounds[f + 1]` are the
/// rows of line `f`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineBounds {
    bounds: Vec<usize>,
}

impl LineBounds {
    pub fn from_lengths(lengths: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut bounds = vec![0];
        for len in lengths {
            if len == 0 {
                return Err(Error::invalid("line with no rows"));
            }
            bounds.push(bounds.last().unwrap() + len);
        }
        if bounds.len() < 2 {
            return Err(Error::invalid("no lines"));
        }
        Ok(LineBounds { bounds })
    }

    pub fn lines(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn total_rows(&self) -> usize {
        *self.bounds.last().unwrap()
    }

    pub fn first_row(&self, line: usize) -> usize {
        self.bounds[line]
    }

    pub fn last_row(&self, line: usize) -> usize {
        self.bounds[line + 1] - 1
    }

    pub fn line_of(&self, row: usize) -> usize {
        self.bounds.partition_point(|&b| b <= row) - 1
    }

    fn is_first_row(&self, row: usize) -> bool {
        self.bounds[..self.lines()].binary_search(&row).is_ok()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Entry {
    Unreachable,
    Start,
    Step(u8),
    Jump { from_row: usize },
}

/// Cumulative matrix and backtrace of a Jump DTW run.
#[derive(Clone, Debug)]
pub struct JumpDtwResult {
    cols: usize,
    cumulative: Vec<f64>,
    entry: Vec<Entry>,
    bounds: LineBounds,
    pattern: StepPattern,
}

impl JumpDtwResult {
    pub fn cumulative(&self, i: usize, j: usize) -> f64 {
        self.cumulative[i * self.cols + j]
    }

    /// Lowest final-column value among rows that end a line (smallest row on
    /// ties).
    pub fn best_end(&self) -> Option<(usize, f64)> {
        let last = self.cols - 1;
        let mut best: Option<(usize, f64)> = None;
        for f in 0..self.bounds.lines() {
            let r = self.bounds.last_row(f);
            let v = self.cumulative(r, last);
            if v.is_finite() && best.is_none_or(|(br, b)| v < b || (v == b && r < br)) {
                best = Some((r, v));
            }
        }
        best
    }

    /// Cells of the optimal path into `(i, j)` and, for each cell after the
    /// first, whether it was entered by a jump.
    pub fn path_to(&self, i: usize, j: usize) -> Option<Vec<((usize, usize), bool)>> {
        if !self.cumulative(i, j).is_finite() {
            return None;
        }
        let (mut i, mut j) = (i, j);
        let mut path = Vec::new();
        loop {
            match self.entry[i * self.cols + j] {
                Entry::Unreachable => unreachable!("finite cell without a backtrace"),
                Entry::Start => {
                    path.push(((i, j), false));
                    break;
                }
                Entry::Step(s) => {
                    path.push(((i, j), false));
                    let step = self.pattern.steps()[usize::from(s)];
                    i -= step.rows;
                    j -= step.cols;
                }
                Entry::Jump { from_row } => {
                    path.push(((i, j), true));
                    i = from_row;
                    j -= 1;
                }
            }
        }
        path.reverse();
        Some(path)
    }
}

/// DP over the concatenated query. Candidates per cell: the free start (row
/// 0 only), then the regular steps in pattern order, then jumps by ascending
/// source line; the first minimum wins.
pub fn jump_dtw(cost: &CostMatrix, bounds: &LineBounds, cfg: &JumpConfig) -> Result<JumpDtwResult> {
    cfg.validate()?;
    if bounds.total_rows() != cost.rows() {
        return Err(Error::invalid("line bounds do not match the cost matrix"));
    }
    let (rows, cols) = (cost.rows(), cost.cols());
    let mut cumulative = vec![f64::INFINITY; rows * cols];
    let mut entry = vec![Entry::Unreachable; rows * cols];
    let last_rows: Vec<usize> = (0..bounds.lines()).map(|f| bounds.last_row(f)).collect();

    for j in 0..cols {
        for i in 0..rows {
            let c = cost.get(i, j);
            let mut best = f64::INFINITY;
            let mut how = Entry::Unreachable;
            if i == 0 {
                best = c;
                how = Entry::Start;
            }
            for (s, step) in cfg.pattern.steps().iter().enumerate() {
                if step.rows > i || step.cols > j {
                    continue;
                }
                let cand = cumulative[(i - step.rows) * cols + (j - step.cols)] + step.weight * c;
                if cand < best {
                    best = cand;
                    how = Entry::Step(s as u8);
                }
            }
            if j > 0 && bounds.is_first_row(i) {
                for &from in &last_rows {
                    let cand = cumulative[from * cols + j - 1] + c + cfg.jump_penalty;
                    if cand < best {
                        best = cand;
                        how = Entry::Jump { from_row: from };
                    }
                }
            }
            cumulative[i * cols + j] = best;
            entry[i * cols + j] = how;
        }
    }
    Ok(JumpDtwResult {
        cols,
        cumulative,
        entry,
        bounds: bounds.clone(),
        pattern: cfg.pattern.clone(),
    })
}

fn concat(fragments: &[BootlegFragment]) -> Result<(Vec<PackedColumn>, LineBounds)> {
    validate_sheet(fragments)?;
    let bounds = LineBounds::from_lengths(fragments.iter().map(|f| f.len()))?;
    let query = fragments.iter().flat_map(|f| f.columns.iter().copied()).collect();
    Ok((query, bounds))
}

/// Cuts a warping path into per-line matches. A new match begins whenever
/// the line changes or a jump is taken.
fn cut_path(
    path: &[((usize, usize), bool)],
    bounds: &LineBounds,
    fragments: &[BootlegFragment],
) -> Vec<LineMatch> {
    let mut out: Vec<LineMatch> = Vec::new();
    let mut current: Option<usize> = None;
    for &((row, col), jumped) in path {
        let line = bounds.line_of(row);
        match (current, out.last_mut()) {
            (Some(cur), Some(m)) if cur == line && !jumped => m.ref_end = col,
            _ => {
                out.push(LineMatch {
                    line_id: fragments[line].line_id,
                    ref_start: col,
                    ref_end: col,
                });
                current = Some(line);
            }
        }
    }
    out
}

pub fn jump_dtw_align(
    fragments: &[BootlegFragment],
    perf: &PerformanceSequence,
    cfg: &JumpConfig,
) -> Result<SegmentAlignment> {
    let (query, bounds) = concat(fragments)?;
    let cost = pairwise_cost(&query, perf.columns())?;
    let result = jump_dtw(&cost, &bounds, cfg)?;
    Ok(match result.best_end() {
        Some((row, score)) => {
            let path = result.path_to(row, cost.cols() - 1).expect("finite end");
            SegmentAlignment {
                matches: cut_path(&path, &bounds, fragments),
                score,
            }
        }
        None => SegmentAlignment {
            matches: Vec::new(),
            score: f64::INFINITY,
        },
    })
}

/// Subsequence DTW of the whole concatenated sheet, cut at line boundaries.
pub fn subseq_align(
    fragments: &[BootlegFragment],
    perf: &PerformanceSequence,
    pattern: &StepPattern,
) -> Result<SegmentAlignment> {
    let (query, bounds) = concat(fragments)?;
    let cost = pairwise_cost(&query, perf.columns())?;
    let result = subsequence_dtw_with(&cost, pattern);
    Ok(match result.best_end() {
        Some((end, score)) => {
            let path: Vec<_> = result
                .path_to(cost.rows() - 1, end)
                .expect("finite end")
                .into_iter()
                .map(|cell| (cell, false))
                .collect();
            SegmentAlignment {
                matches: cut_path(&path, &bounds, fragments),
                score,
            }
        }
        None => SegmentAlignment {
            matches: Vec::new(),
            score: f64::INFINITY,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtw::subsequence_dtw;

    #[test]
    fn bounds_lookup() {
        let b = LineBounds::from_lengths([2, 3, 1]).unwrap();
        assert_eq!(b.total_rows(), 6);
        assert_eq!((b.first_row(1), b.last_row(1)), (2, 4));
        assert_eq!(b.line_of(0), 0);
        assert_eq!(b.line_of(4), 1);
        assert_eq!(b.line_of(5), 2);
        assert!(b.is_first_row(5));
        assert!(!b.is_first_row(4));
        assert!(LineBounds::from_lengths([2, 0]).is_err());
    }

    #[test]
    fn infinite_penalty_matches_plain_dtw() {
        let cost = CostMatrix::from_rows(&[
            vec![-1.0, 0.0, -2.0, 1.0],
            vec![0.0, -3.0, 1.0, -1.0],
            vec![2.0, -1.0, -1.0, 0.0],
        ])
        .unwrap();
        let bounds = LineBounds::from_lengths([1, 2]).unwrap();
        let jump = jump_dtw(&cost, &bounds, &JumpConfig::with_penalty(f64::INFINITY)).unwrap();
        let plain = subsequence_dtw(&cost);
        for i in 0..3 {
            for j in 0..4 {
                assert_eq!(jump.cumulative(i, j), plain.cumulative(i, j));
            }
        }
    }

    #[test]
    fn jump_reenters_a_line() {
        // Two one-row lines; the reference plays line 0, line 1, line 0.
        let cost = CostMatrix::from_rows(&[vec![-1.0, 0.0, -1.0], vec![0.0, -1.0, 0.0]]).unwrap();
        let bounds = LineBounds::from_lengths([1, 1]).unwrap();
        let r = jump_dtw(&cost, &bounds, &JumpConfig::default()).unwrap();
        assert_eq!(r.best_end(), Some((0, -3.0)));
        let path = r.path_to(0, 2).unwrap();
        assert_eq!(
            path,
            vec![((0, 0), false), ((1, 1), false), ((0, 2), true)]
        );
    }

    #[test]
    fn negative_penalty_rejected() {
        assert!(JumpConfig::with_penalty(-1.0).validate().is_err());
    }
}
