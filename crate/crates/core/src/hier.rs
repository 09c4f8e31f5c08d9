//! Hierarchical DTW.
//!
//! Every sheet line is first aligned against the whole performance with
//! subsequence DTW. The last row of each line's cumulative matrix becomes a
//! row of the segment cost matrix `C_seg`, and the start column of each
//! best path becomes `T_seg`. A second dynamic program then runs over whole
//! lines: at every cell a line is either skipped over by one performance
//! column (no cost), or matched as a whole, ending at that column and
//! entering from the end of any line just before the match began.
//!
//! Transitions between lines encode what performances usually do: advance
//! one line, linger on a line, skip a line, jump back to a line already
//! played, or jump forward to one line past the furthest line played so far
//! (the leading edge). The range of lines seen on the optimal path into each
//! cell is tracked alongside the cumulative score.

use rayon::prelude::*;

use crate::bscore::{
    validate_sheet, AlignConfig, BootlegFragment, LineMatch, PerformanceSequence,
    SegmentAlignment,
};
use crate::dtw::{pairwise_cost, subsequence_dtw, SubseqResult};
use crate::error::{Error, Result};

/// Inclusive range of line indices seen on a path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LineRange {
    pub lo: usize,
    pub hi: usize,
}

impl LineRange {
    pub fn single(line: usize) -> Self {
        LineRange { lo: line, hi: line }
    }

    pub fn contains(self, line: usize) -> bool {
        self.lo <= line && line <= self.hi
    }

    pub fn including(self, line: usize) -> Self {
        LineRange {
            lo: self.lo.min(line),
            hi: self.hi.max(line),
        }
    }
}

/// Mean over lines of each line's best subsequence path score.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PAvg(pub f64);

impl PAvg {
    /// Lines that cannot be placed anywhere (longer than the performance
    /// allows) are left out of the mean. With no placeable line the value
    /// is 0.
    pub fn from_best_scores(scores: impl IntoIterator<Item = f64>) -> Self {
        let (sum, count) = scores
            .into_iter()
            .filter(|s| s.is_finite())
            .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        if count == 0 {
            PAvg(0.0)
        } else {
            PAvg(sum / count as f64)
        }
    }

    /// Additive penalty for a jump: `-gamma * p_avg`.
    pub fn jump_penalty(self, gamma: f64) -> f64 {
        if gamma == 0.0 {
            0.0
        } else {
            -gamma * self.0
        }
    }
}

/// `C_seg`, `T_seg` and `p_avg`: the inputs of the segment-level DP.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentInputs {
    lines: usize,
    cols: usize,
    cost: Vec<f64>,
    start: Vec<Option<usize>>,
    p_avg: PAvg,
}

impl SegmentInputs {
    /// Builds the inputs from explicit rows. Infinite costs mark end columns
    /// a line cannot reach; their start entry is ignored.
    pub fn new(cost: Vec<Vec<f64>>, start: Vec<Vec<Option<usize>>>, p_avg: PAvg) -> Result<Self> {
        let lines = cost.len();
        if lines == 0 || start.len() != lines {
            return Err(Error::invalid("C_seg and T_seg need the same nonzero line count"));
        }
        let cols = cost[0].len();
        if cols == 0 {
            return Err(Error::invalid("segment matrices need at least one column"));
        }
        for (i, (c, t)) in cost.iter().zip(&start).enumerate() {
            if c.len() != cols || t.len() != cols {
                return Err(Error::invalid(format!("segment row {} has the wrong length", i)));
            }
            for (j, (&v, &k)) in c.iter().zip(t).enumerate() {
                if v.is_nan() || v == f64::NEG_INFINITY {
                    return Err(Error::invalid(format!("C_seg[{}, {}] is {}", i, j, v)));
                }
                if v.is_finite() && !matches!(k, Some(k) if k <= j) {
                    return Err(Error::invalid(format!(
                        "T_seg[{}, {}] must be a column <= {}",
                        i, j, j
                    )));
                }
            }
        }
        let start = cost
            .iter()
            .flatten()
            .zip(start.into_iter().flatten())
            .map(|(v, k)| if v.is_finite() { k } else { None })
            .collect();
        Ok(SegmentInputs {
            lines,
            cols,
            cost: cost.concat(),
            start,
            p_avg,
        })
    }

    /// Stacks each line's last row and start columns; `p_avg` is the mean
    /// of the per-line minima.
    pub fn from_results(results: &[SubseqResult]) -> Result<Self> {
        let cost: Vec<Vec<f64>> = results.iter().map(|r| r.last_row().to_vec()).collect();
        let start = results.iter().map(|r| r.start_of()).collect();
        let p_avg = PAvg::from_best_scores(results.iter().map(|r| {
            r.last_row().iter().copied().fold(f64::INFINITY, f64::min)
        }));
        SegmentInputs::new(cost, start, p_avg)
    }

    pub fn lines(&self) -> usize {
        self.lines
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn p_avg(&self) -> PAvg {
        self.p_avg
    }

    pub fn cost(&self, line: usize, col: usize) -> f64 {
        self.cost[line * self.cols + col]
    }

    pub fn start(&self, line: usize, col: usize) -> Option<usize> {
        self.start[line * self.cols + col]
    }

    pub fn cost_row(&self, line: usize) -> &[f64] {
        &self.cost[line * self.cols..(line + 1) * self.cols]
    }
}

/// Runs feature-level subsequence DTW for every line (in parallel) and
/// stacks the results.
pub fn build_segment_matrices(
    fragments: &[BootlegFragment],
    perf: &PerformanceSequence,
) -> Result<SegmentInputs> {
    validate_sheet(fragments)?;
    let results = fragments
        .par_iter()
        .map(|f| pairwise_cost(&f.columns, perf.columns()).map(|c| subsequence_dtw(&c)))
        .collect::<Result<Vec<_>>>()?;
    SegmentInputs::from_results(&results)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransitionRule {
    /// `i = n + 1`
    Next,
    /// `i = n`
    Stay,
    /// `i = n + 2`
    SkipOne,
    /// To a line inside the range already seen.
    Backward,
    /// To one line past the leading edge.
    Forward,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub weight: f64,
    pub penalty: f64,
    pub rule: TransitionRule,
}

impl Transition {
    pub fn score(&self, cost: f64) -> f64 {
        self.weight * cost + self.penalty
    }
}

/// Every rule that permits moving from line `from` to line `to`, in rule
/// order. `seen` is `None` when nothing has been matched yet.
pub fn transition_candidates(
    from: usize,
    to: usize,
    seen: Option<LineRange>,
    cfg: &AlignConfig,
    p_avg: PAvg,
) -> Vec<Transition> {
    let mut out = Vec::with_capacity(2);
    let mut push = |weight, penalty, rule| {
        out.push(Transition {
            weight,
            penalty,
            rule,
        })
    };
    if to == from + 1 {
        push(1.0, 0.0, TransitionRule::Next);
    }
    if to == from {
        push(cfg.alpha, 0.0, TransitionRule::Stay);
    }
    if to == from + 2 {
        push(cfg.alpha, 0.0, TransitionRule::SkipOne);
    }
    let penalty = p_avg.jump_penalty(cfg.gamma);
    if let (Some(range), true) = (seen, penalty.is_finite()) {
        if cfg.allow_backward_jumps && range.contains(to) {
            push(1.0, penalty, TransitionRule::Backward);
        }
        if cfg.allow_forward_jumps && to == range.hi + 1 && !(from..=from + 2).contains(&to) {
            push(1.0, penalty, TransitionRule::Forward);
        }
    }
    out
}

/// The cheapest applicable transition for a match of cost `cost`, or `None`
/// if the move is disallowed. Ties go to the earlier rule.
pub fn transition_weight(
    from: usize,
    to: usize,
    seen: Option<LineRange>,
    cfg: &AlignConfig,
    p_avg: PAvg,
    cost: f64,
) -> Option<Transition> {
    let mut best: Option<Transition> = None;
    for t in transition_candidates(from, to, seen, cfg, p_avg) {
        if best.is_none_or(|b| t.score(cost) < b.score(cost)) {
            best = Some(t);
        }
    }
    best
}

/// How the optimal path entered a segment-level cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SegStep {
    /// Column 0.
    Init,
    /// From `(i, j - 1)` without cost.
    Skip,
    /// The line was matched over `[start, j]`. `source` is the line whose
    /// end preceded the match; `None` for a fresh start.
    Match {
        source: Option<usize>,
        start: usize,
        rule: Option<TransitionRule>,
    },
}

/// Filled segment-level DP state.
#[derive(Clone, Debug)]
pub struct SegmentMatrices {
    inputs: SegmentInputs,
    cumulative: Vec<f64>,
    seen: Vec<Option<LineRange>>,
    back: Vec<SegStep>,
}

impl SegmentMatrices {
    pub fn inputs(&self) -> &SegmentInputs {
        &self.inputs
    }

    pub fn lines(&self) -> usize {
        self.inputs.lines
    }

    pub fn cols(&self) -> usize {
        self.inputs.cols
    }

    /// `D_seg[i, j]`.
    pub fn cumulative(&self, line: usize, col: usize) -> f64 {
        self.cumulative[line * self.cols() + col]
    }

    /// `(R_lower, R_upper)` at a cell, `None` while nothing is matched.
    pub fn seen(&self, line: usize, col: usize) -> Option<LineRange> {
        self.seen[line * self.cols() + col]
    }

    pub fn back(&self, line: usize, col: usize) -> SegStep {
        self.back[line * self.cols() + col]
    }

    /// Best final-column line (smallest index on ties) and its score.
    pub fn best_end(&self) -> (usize, f64) {
        let last = self.cols() - 1;
        let mut best = (0, self.cumulative(0, last));
        for i in 1..self.lines() {
            let v = self.cumulative(i, last);
            if v < best.1 {
                best = (i, v);
            }
        }
        best
    }

    /// Backtraces from `(line, last column)`. Matches are `(line index,
    /// start, end)` in reference order.
    pub fn path_from(&self, line: usize) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        let (mut i, mut j) = (line, self.cols() - 1);
        loop {
            match self.back(i, j) {
                SegStep::Init => break,
                SegStep::Skip => j -= 1,
                SegStep::Match { source, start, .. } => {
                    out.push((i, start, j));
                    match source {
                        Some(n) => {
                            i = n;
                            j = start - 1;
                        }
                        None => break,
                    }
                }
            }
        }
        out.reverse();
        out
    }
}

/// Column-by-column segment-level DP. Candidates are evaluated skip first,
/// then a fresh start (the line is the first match, scored `C_seg[i, j]`),
/// then by ascending source line; the first minimum wins.
pub fn segment_dp(inputs: &SegmentInputs, cfg: &AlignConfig) -> SegmentMatrices {
    let (lines, cols) = (inputs.lines, inputs.cols);
    let p_avg = inputs.p_avg;
    let mut cumulative = vec![0.0; lines * cols];
    let mut seen: Vec<Option<LineRange>> = vec![None; lines * cols];
    let mut back = vec![SegStep::Init; lines * cols];
    let at = |i: usize, j: usize| i * cols + j;

    for j in 1..cols {
        for i in 0..lines {
            let mut best = cumulative[at(i, j - 1)];
            let mut best_seen = seen[at(i, j - 1)];
            let mut best_back = SegStep::Skip;

            let c = inputs.cost(i, j);
            if let (true, Some(k)) = (c.is_finite(), inputs.start(i, j)) {
                // Fresh start: nothing matched before column k.
                if c < best {
                    best = c;
                    best_seen = Some(LineRange::single(i));
                    best_back = SegStep::Match {
                        source: None,
                        start: k,
                        rule: None,
                    };
                }
                let sources = if k == 0 { 0 } else { lines };
                for n in 0..sources {
                    let src = at(n, k - 1);
                    // A source with nothing matched is the fresh start again.
                    let Some(range) = seen[src] else { continue };
                    let Some(t) = transition_weight(n, i, Some(range), cfg, p_avg, c) else {
                        continue;
                    };
                    let cand = cumulative[src] + t.weight * c + t.penalty;
                    if cand < best {
                        best = cand;
                        best_seen = Some(range.including(i));
                        best_back = SegStep::Match {
                            source: Some(n),
                            start: k,
                            rule: Some(t.rule),
                        };
                    }
                }
            }

            cumulative[at(i, j)] = best;
            seen[at(i, j)] = best_seen;
            back[at(i, j)] = best_back;
        }
    }

    SegmentMatrices {
        inputs: inputs.clone(),
        cumulative,
        seen,
        back,
    }
}

/// Segment-level result before line ids are attached.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentPath {
    /// `(line index, ref start, ref end)`, end inclusive.
    pub matches: Vec<(usize, usize, usize)>,
    pub score: f64,
}

impl SegmentPath {
    pub fn line_indices(&self) -> Vec<usize> {
        self.matches.iter().map(|m| m.0).collect()
    }
}

pub fn align_segments(inputs: &SegmentInputs, cfg: &AlignConfig) -> Result<SegmentPath> {
    cfg.validate()?;
    let dp = segment_dp(inputs, cfg);
    let (line, score) = dp.best_end();
    Ok(SegmentPath {
        matches: dp.path_from(line),
        score,
    })
}

/// Full Hierarchical DTW: feature-level subsequence DTW per line, then the
/// segment-level DP and backtrace.
pub fn hierarchical_align(
    fragments: &[BootlegFragment],
    perf: &PerformanceSequence,
    cfg: &AlignConfig,
) -> Result<SegmentAlignment> {
    cfg.validate()?;
    let inputs = build_segment_matrices(fragments, perf)?;
    let path = align_segments(&inputs, cfg)?;
    Ok(SegmentAlignment {
        matches: path
            .matches
            .iter()
            .map(|&(i, s, e)| LineMatch {
                line_id: fragments[i].line_id,
                ref_start: s,
                ref_end: e,
            })
            .collect(),
        score: path.score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtw::CostMatrix;

    fn cfg(alpha: f64, gamma: f64) -> AlignConfig {
        AlignConfig {
            alpha,
            gamma,
            ..AlignConfig::default()
        }
    }

    #[test]
    fn next_line_is_free() {
        for seen in [None, Some(LineRange { lo: 0, hi: 9 })] {
            let t = transition_weight(3, 4, seen, &cfg(0.5, 1.0), PAvg(-9.0), -3.0).unwrap();
            assert_eq!((t.weight, t.penalty), (1.0, 0.0));
        }
    }

    #[test]
    fn stay_uses_alpha() {
        let c = AlignConfig {
            allow_backward_jumps: false,
            ..cfg(0.5, 1.0)
        };
        let t = transition_weight(3, 3, Some(LineRange::single(3)), &c, PAvg(-9.0), -4.0).unwrap();
        assert_eq!((t.weight, t.penalty), (0.5, 0.0));
        assert_eq!(t.rule, TransitionRule::Stay);
    }

    #[test]
    fn backward_jump_penalty() {
        let t = transition_weight(
            5,
            1,
            Some(LineRange { lo: 0, hi: 5 }),
            &cfg(0.5, 1.0),
            PAvg(-9.0),
            -1.0,
        )
        .unwrap();
        assert_eq!((t.weight, t.penalty), (1.0, 9.0));
        assert_eq!(t.rule, TransitionRule::Backward);
    }

    #[test]
    fn forward_jump_to_leading_edge() {
        let t = transition_weight(
            2,
            7,
            Some(LineRange { lo: 0, hi: 6 }),
            &cfg(0.5, 2.0),
            PAvg(-3.0),
            -1.0,
        )
        .unwrap();
        assert_eq!((t.weight, t.penalty), (1.0, 6.0));
        assert_eq!(t.rule, TransitionRule::Forward);
        assert!(transition_weight(2, 8, Some(LineRange { lo: 0, hi: 6 }), &cfg(0.5, 1.0), PAvg(-3.0), -1.0)
            .is_none());
    }

    #[test]
    fn jumps_need_a_seen_range_and_permission() {
        let p = PAvg(-4.0);
        assert!(transition_weight(5, 1, None, &cfg(0.5, 1.0), p, -1.0).is_none());
        let no_back = AlignConfig {
            allow_backward_jumps: false,
            ..cfg(0.5, 1.0)
        };
        assert!(transition_weight(5, 1, Some(LineRange { lo: 0, hi: 5 }), &no_back, p, -1.0).is_none());
        let no_fwd = AlignConfig {
            allow_forward_jumps: false,
            ..cfg(0.5, 1.0)
        };
        assert!(transition_weight(2, 7, Some(LineRange { lo: 0, hi: 6 }), &no_fwd, p, -1.0).is_none());
    }

    #[test]
    fn cheapest_rule_depends_on_cost() {
        let c = cfg(0.5, 1.0);
        let seen = Some(LineRange { lo: 0, hi: 5 });
        // Stay: 0.5 * cost. Backward: cost + 9.
        let weak = transition_weight(3, 3, seen, &c, PAvg(-9.0), -8.0).unwrap();
        assert_eq!(weak.rule, TransitionRule::Stay);
        let strong = transition_weight(3, 3, seen, &c, PAvg(-9.0), -20.0).unwrap();
        assert_eq!(strong.rule, TransitionRule::Backward);
    }

    #[test]
    fn p_avg_is_the_mean_of_line_minima() {
        assert_eq!(PAvg::from_best_scores([-8.0, -6.0]).0, -7.0);
        assert_eq!(PAvg::from_best_scores([f64::INFINITY, -6.0]).0, -6.0);
        assert_eq!(PAvg::from_best_scores([f64::INFINITY]).0, 0.0);
    }

    #[test]
    fn segment_inputs_from_small_instance() {
        let c = CostMatrix::from_rows(&[vec![0.0, 5.0, 1.0], vec![5.0, 0.0, 0.0]]).unwrap();
        let inputs = SegmentInputs::from_results(&[subsequence_dtw(&c)]).unwrap();
        assert_eq!(inputs.cost_row(0), &[f64::INFINITY, 0.0, 0.0]);
        assert_eq!(inputs.start(0, 0), None);
        assert_eq!(inputs.start(0, 1), Some(0));
        assert_eq!(inputs.start(0, 2), Some(0));
        assert_eq!(inputs.p_avg().0, 0.0);
    }

    #[test]
    fn single_line_single_match() {
        let inputs =
            SegmentInputs::new(vec![vec![-1.0, -2.0, -3.0]], vec![vec![Some(0); 3]], PAvg(-3.0))
                .unwrap();
        let dp = segment_dp(&inputs, &cfg(0.5, 1.0));
        assert_eq!(dp.cumulative(0, 0), 0.0);
        assert_eq!(dp.cumulative(0, 2), -3.0);
        let path = align_segments(&inputs, &cfg(0.5, 1.0)).unwrap();
        assert_eq!(path.matches, vec![(0, 0, 2)]);
        assert_eq!(path.score, -3.0);
    }

    #[test]
    fn skip_never_increases_score() {
        let inputs = SegmentInputs::new(
            vec![vec![0.0, -1.0, 2.0, -3.0], vec![-2.0, 0.5, -1.5, -0.5]],
            vec![vec![Some(0), Some(0), Some(1), Some(2)], vec![Some(0), Some(1), Some(0), Some(2)]],
            PAvg(-2.0),
        )
        .unwrap();
        let dp = segment_dp(&inputs, &cfg(0.5, 1.0));
        for i in 0..2 {
            for j in 1..4 {
                assert!(dp.cumulative(i, j) <= dp.cumulative(i, j - 1));
            }
        }
    }

    #[test]
    fn rejects_start_after_end() {
        assert!(SegmentInputs::new(vec![vec![-1.0, -1.0]], vec![vec![Some(0), Some(2)]], PAvg(0.0))
            .is_err());
    }
}
