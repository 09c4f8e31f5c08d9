//! Brute-force reference implementations. They enumerate every legal path
//! or segment sequence and share no code with the library's DP routines.
#![allow(dead_code)]

use std::collections::BTreeSet;

/// Steps `(rows, cols, weight)` in tie-break order.
pub const STEPS: [(usize, usize, f64); 3] = [(1, 1, 1.0), (1, 2, 1.0), (2, 1, 2.0)];

pub struct SubseqOracle {
    /// Best score of any path ending at each cell; `inf` if none.
    pub d: Vec<Vec<f64>>,
    /// Start column of the preferred optimal path into each cell.
    pub start: Vec<Vec<Option<usize>>>,
}

#[derive(Clone)]
struct Best {
    score: f64,
    /// Step indices read from the end of the path backwards.
    rev_steps: Vec<usize>,
    start: usize,
}

/// Enumerates every warping path that begins anywhere in row 0. Among
/// optimal paths into a cell, the preferred one has the lexicographically
/// smallest step sequence read backwards from that cell.
pub fn subseq_enumerate(cost: &[Vec<f64>]) -> SubseqOracle {
    let rows = cost.len();
    let cols = cost[0].len();
    let mut best: Vec<Vec<Option<Best>>> = vec![vec![None; cols]; rows];

    fn walk(
        cost: &[Vec<f64>],
        best: &mut Vec<Vec<Option<Best>>>,
        (i, j): (usize, usize),
        score: f64,
        steps: &mut Vec<usize>,
        start: usize,
    ) {
        let rev: Vec<usize> = steps.iter().rev().copied().collect();
        let better = match &best[i][j] {
            None => true,
            Some(b) => score < b.score || (score == b.score && rev < b.rev_steps),
        };
        if better {
            best[i][j] = Some(Best {
                score,
                rev_steps: rev,
                start,
            });
        }
        for (s, &(a, b, w)) in STEPS.iter().enumerate() {
            let (ni, nj) = (i + a, j + b);
            if ni < cost.len() && nj < cost[0].len() {
                steps.push(s);
                walk(cost, best, (ni, nj), score + w * cost[ni][nj], steps, start);
                steps.pop();
            }
        }
    }

    for j0 in 0..cols {
        walk(cost, &mut best, (0, j0), cost[0][j0], &mut Vec::new(), j0);
    }
    SubseqOracle {
        d: best
            .iter()
            .map(|r| r.iter().map(|b| b.as_ref().map_or(f64::INFINITY, |b| b.score)).collect())
            .collect(),
        start: best
            .iter()
            .map(|r| r.iter().map(|b| b.as_ref().map(|b| b.start)).collect())
            .collect(),
    }
}

/// Segment-level rules restated independently: `(weight, penalty)` for every
/// rule allowing a move from line `n` with seen range `(lo, hi)` to line `i`.
pub fn segment_rules(
    n: usize,
    i: usize,
    (lo, hi): (usize, usize),
    alpha: f64,
    jump_penalty: f64,
    backward: bool,
    forward: bool,
) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    if i == n + 1 {
        out.push((1.0, 0.0));
    }
    if i == n {
        out.push((alpha, 0.0));
    }
    if i == n + 2 {
        out.push((alpha, 0.0));
    }
    if jump_penalty.is_finite() {
        if backward && lo <= i && i <= hi {
            out.push((1.0, jump_penalty));
        }
        if forward && i == hi + 1 && i != n && i != n + 1 && i != n + 2 {
            out.push((1.0, jump_penalty));
        }
    }
    out
}

pub struct SegmentOracle {
    pub score: f64,
    /// Best score of any sequence whose last match is line `i` ending at or
    /// before column `j` (0 for the empty sequence).
    pub per_cell: Vec<Vec<f64>>,
    /// Every distinct matched line sequence that attains `score`.
    pub optimal_sequences: BTreeSet<Vec<usize>>,
    pub sequences_seen: usize,
}

pub struct SegmentProblem<'a> {
    /// `C_seg[line][col]`, `inf` where the line cannot end.
    pub cost: &'a [Vec<f64>],
    /// `T_seg[line][col]`.
    pub start: &'a [Vec<Option<usize>>],
    pub alpha: f64,
    pub jump_penalty: f64,
    pub backward: bool,
    pub forward: bool,
}

/// Enumerates every sequence of whole-line matches. A match of line `i`
/// ending at column `j >= 1` spans `[T[i][j], j]`; the next match must begin
/// after it ends. The first match is free (weight 1, no penalty); later
/// matches are priced by the rules, using the range of lines seen on that
/// very sequence. The empty sequence scores 0.
pub fn segment_enumerate(p: &SegmentProblem<'_>) -> SegmentOracle {
    struct Acc {
        score: f64,
        seqs: BTreeSet<Vec<usize>>,
        count: usize,
        per_cell: Vec<Vec<f64>>,
    }
    let lines = p.cost.len();
    let cols = p.cost[0].len();
    let mut acc = Acc {
        score: 0.0,
        seqs: BTreeSet::from([Vec::new()]),
        count: 1,
        per_cell: vec![vec![0.0; cols]; lines],
    };

    fn go(
        p: &SegmentProblem<'_>,
        lines: usize,
        cols: usize,
        last: Option<(usize, usize, (usize, usize))>,
        score: f64,
        seq: &mut Vec<usize>,
        acc: &mut Acc,
    ) {
        for i in 0..lines {
            for j in 1..cols {
                let c = p.cost[i][j];
                if !c.is_finite() {
                    continue;
                }
                let k = p.start[i][j].expect("finite cost has a start");
                let options = match last {
                    None => vec![(1.0, 0.0)],
                    Some((n, end, range)) => {
                        if k < end + 1 {
                            continue;
                        }
                        segment_rules(n, i, range, p.alpha, p.jump_penalty, p.backward, p.forward)
                    }
                };
                let range = match last {
                    None => (i, i),
                    Some((_, _, (lo, hi))) => (lo.min(i), hi.max(i)),
                };
                for (w, pen) in options {
                    let s = score + w * c + pen;
                    seq.push(i);
                    acc.count += 1;
                    if s < acc.score {
                        acc.score = s;
                        acc.seqs.clear();
                    }
                    if s == acc.score {
                        acc.seqs.insert(seq.clone());
                    }
                    for cell in &mut acc.per_cell[i][j..] {
                        if s < *cell {
                            *cell = s;
                        }
                    }
                    go(p, lines, cols, Some((i, j, range)), s, seq, acc);
                    seq.pop();
                }
            }
        }
    }

    go(p, lines, cols, None, 0.0, &mut Vec::new(), &mut acc);
    SegmentOracle {
        score: acc.score,
        per_cell: acc.per_cell,
        optimal_sequences: acc.seqs,
        sequences_seen: acc.count,
    }
}

/// Best score of any Jump DTW path into every cell of the concatenated
/// query. Paths start anywhere in row 0, use the regular steps, and may jump
/// from the last row of any line at column `j - 1` to the first row of any
/// line at column `j`, paying the arrival cost plus `penalty`.
pub fn jump_enumerate(cost: &[Vec<f64>], line_lengths: &[usize], penalty: f64) -> Vec<Vec<f64>> {
    let rows = cost.len();
    let cols = cost[0].len();
    let mut firsts = Vec::new();
    let mut lasts = Vec::new();
    let mut r = 0;
    for &len in line_lengths {
        firsts.push(r);
        r += len;
        lasts.push(r - 1);
    }
    assert_eq!(r, rows);
    let mut best = vec![vec![f64::INFINITY; cols]; rows];

    fn walk(
        cost: &[Vec<f64>],
        firsts: &[usize],
        lasts: &[usize],
        penalty: f64,
        best: &mut Vec<Vec<f64>>,
        (i, j): (usize, usize),
        score: f64,
    ) {
        // Any continuation from (i, j) is open to every path reaching it, so a
        // path that is not strictly better here cannot improve any cell.
        if score >= best[i][j] {
            return;
        }
        best[i][j] = score;
        let (rows, cols) = (cost.len(), cost[0].len());
        for &(a, b, w) in &STEPS {
            if i + a < rows && j + b < cols {
                walk(cost, firsts, lasts, penalty, best, (i + a, j + b), score + w * cost[i + a][j + b]);
            }
        }
        if lasts.contains(&i) && j + 1 < cols && penalty.is_finite() {
            for &f in firsts {
                walk(cost, firsts, lasts, penalty, best, (f, j + 1), score + cost[f][j + 1] + penalty);
            }
        }
    }

    for j0 in 0..cols {
        walk(cost, &firsts, &lasts, penalty, &mut best, (0, j0), cost[0][j0]);
    }
    best
}

/// Random segment-level instance: each end column gets a match length of
/// 1..=4 columns (`T = j + 1 - len`), costs are multiples of 1/8 in [-4, 0]
/// (exact in binary), and about one entry in five is unreachable.
pub fn random_segment_instance<R: rand::Rng>(
    rng: &mut R,
    max_lines: usize,
    max_cols: usize,
) -> (Vec<Vec<f64>>, Vec<Vec<Option<usize>>>) {
    let lines = rng.gen_range(1..=max_lines);
    let cols = rng.gen_range(2..=max_cols);
    let mut cost = vec![vec![f64::INFINITY; cols]; lines];
    let mut start = vec![vec![None; cols]; lines];
    for i in 0..lines {
        for j in 0..cols {
            let len = rng.gen_range(1..=4usize);
            if len > j + 1 || rng.gen_bool(0.2) {
                continue;
            }
            cost[i][j] = -f64::from(rng.gen_range(0..=32u32)) / 8.0;
            start[i][j] = Some(j + 1 - len);
        }
    }
    (cost, start)
}

/// Random integer cost matrix with entries in [-3, 3].
pub fn random_int_costs<R: rand::Rng>(rng: &mut R, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| f64::from(rng.gen_range(-3..=3i32))).collect())
        .collect()
}
