//! Feature-level cost computation and subsequence DTW.
//!
//! Step `(a, b)` advances `a` query rows and `b` reference columns and adds
//! `weight * C[i, j]` at the arrival cell. Row 0 is a free start: any
//! reference column may begin a path.

use crate::bscore::PackedColumn;
use crate::error::{Error, Result};

/// Dense row-major `rows x cols` cost matrix (query rows, reference columns).
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("cost matrix must be nonempty"));
        }
        if values.len() != rows * cols {
            return Err(Error::invalid(format!(
                "cost matrix {}x{} needs {} values, got {}",
                rows,
                cols,
                rows * cols,
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("cost matrix contains non-finite values"));
        }
        Ok(CostMatrix { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged cost matrix rows"));
        }
        CostMatrix::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }
}

/// Normalized negative inner product between every query and reference
/// column: `-<x, y> / (|x| |y|)`, or 0 when either column is empty.
pub fn pairwise_cost(query: &[PackedColumn], reference: &[PackedColumn]) -> Result<CostMatrix> {
    if query.is_empty() || reference.is_empty() {
        return Err(Error::invalid("pairwise_cost needs nonempty inputs"));
    }
    let ref_counts: Vec<u32> = reference.iter().map(|c| c.count()).collect();
    let mut values = Vec::with_capacity(query.len() * reference.len());
    for &x in query {
        let nx = x.count();
        for (&y, &ny) in reference.iter().zip(&ref_counts) {
            values.push(column_cost(x, nx, y, ny));
        }
    }
    CostMatrix::new(query.len(), reference.len(), values)
}

// The square root is taken of the integer product so identical columns give
// exactly -1.
#[inline]
fn column_cost(x: PackedColumn, nx: u32, y: PackedColumn, ny: u32) -> f64 {
    if nx == 0 || ny == 0 {
        return 0.0;
    }
    -f64::from(x.dot(y)) / (f64::from(nx) * f64::from(ny)).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub rows: usize,
    pub cols: usize,
    pub weight: f64,
}

impl Step {
    pub const fn new(rows: usize, cols: usize, weight: f64) -> Self {
        Step { rows, cols, weight }
    }
}

/// Ordered set of DTW steps. Earlier steps win ties.
#[derive(Clone, Debug, PartialEq)]
pub struct StepPattern {
    steps: Vec<Step>,
}

impl Default for StepPattern {
    /// `{(1,1), (1,2), (2,1)}` with weights `{1, 1, 2}`.
    fn default() -> Self {
        StepPattern {
            steps: vec![Step::new(1, 1, 1.0), Step::new(1, 2, 1.0), Step::new(2, 1, 2.0)],
        }
    }
}

impl StepPattern {
    pub fn new(steps: Vec<Step>) -> Result<Self> {
        if steps.is_empty() || steps.len() >= usize::from(NO_STEP) {
            return Err(Error::invalid("step pattern needs 1 to 253 steps"));
        }
        for s in &steps {
            if s.rows == 0 || s.cols == 0 || !(s.weight.is_finite() && s.weight > 0.0) {
                return Err(Error::invalid(format!("invalid step {:?}", s)));
            }
        }
        Ok(StepPattern { steps })
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }
}

const NO_STEP: u8 = u8::MAX;
const START: u8 = u8::MAX - 1;

/// Cumulative cost, start-column propagation and backtrace for one
/// subsequence DTW run.
#[derive(Clone, Debug)]
pub struct SubseqResult {
    rows: usize,
    cols: usize,
    cumulative: Vec<f64>,
    start: Vec<usize>,
    trace: Vec<u8>,
    pattern: StepPattern,
}

impl SubseqResult {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// `D[i, j]`; `+inf` where no step chain from row 0 reaches the cell.
    pub fn cumulative(&self, i: usize, j: usize) -> f64 {
        self.cumulative[i * self.cols + j]
    }

    pub fn last_row(&self) -> &[f64] {
        let r = self.rows - 1;
        &self.cumulative[r * self.cols..]
    }

    /// Start column of the best path into each last-row cell.
    pub fn start_of(&self) -> Vec<Option<usize>> {
        let r = self.rows - 1;
        (0..self.cols)
            .map(|j| self.start_at(r, j))
            .collect()
    }

    fn start_at(&self, i: usize, j: usize) -> Option<usize> {
        let idx = i * self.cols + j;
        self.cumulative[idx].is_finite().then(|| self.start[idx])
    }

    /// Lowest last-row value and its column (earliest column on ties).
    pub fn best_end(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (j, &v) in self.last_row().iter().enumerate() {
            if v.is_finite() && best.is_none_or(|(_, b)| v < b) {
                best = Some((j, v));
            }
        }
        best
    }

    /// Walks the stored backtrace from `(i, j)` to row 0. Returns the cells
    /// in path order, or `None` if the cell is unreachable.
    pub fn path_to(&self, i: usize, j: usize) -> Option<Vec<(usize, usize)>> {
        if !self.cumulative(i, j).is_finite() {
            return None;
        }
        let (mut i, mut j) = (i, j);
        let mut path = vec![(i, j)];
        loop {
            match self.trace[i * self.cols + j] {
                START => break,
                NO_STEP => unreachable!("finite cell without a backtrace"),
                s => {
                    let step = self.pattern.steps[usize::from(s)];
                    i -= step.rows;
                    j -= step.cols;
                    path.push((i, j));
                }
            }
        }
        path.reverse();
        Some(path)
    }
}

/// Subsequence DTW with the default step pattern.
pub fn subsequence_dtw(cost: &CostMatrix) -> SubseqResult {
    subsequence_dtw_with(cost, &StepPattern::default())
}

pub fn subsequence_dtw_with(cost: &CostMatrix, pattern: &StepPattern) -> SubseqResult {
    let (rows, cols) = (cost.rows(), cost.cols());
    let mut cumulative = vec![f64::INFINITY; rows * cols];
    let mut start = vec![0usize; rows * cols];
    let mut trace = vec![NO_STEP; rows * cols];

    for j in 0..cols {
        cumulative[j] = cost.get(0, j);
        start[j] = j;
        trace[j] = START;
    }
    for i in 1..rows {
        for j in 0..cols {
            let idx = i * cols + j;
            let c = cost.get(i, j);
            let mut best = f64::INFINITY;
            let mut best_step = NO_STEP;
            for (s, step) in pattern.steps.iter().enumerate() {
                if step.rows > i || step.cols > j {
                    continue;
                }
                let prev = (i - step.rows) * cols + (j - step.cols);
                let cand = cumulative[prev] + step.weight * c;
                if cand < best {
                    best = cand;
                    best_step = s as u8;
                }
            }
            if best_step != NO_STEP {
                let step = pattern.steps[usize::from(best_step)];
                cumulative[idx] = best;
                start[idx] = start[(i - step.rows) * cols + (j - step.cols)];
                trace[idx] = best_step;
            }
        }
    }
    SubseqResult {
        rows,
        cols,
        cumulative,
        start,
        trace,
        pattern: pattern.clone(),
    }
}

/// Start column of the best path ending at each last-row cell, as carried
/// forward during the DP. `None` where the cell is unreachable.
pub fn recover_start_positions(result: &SubseqResult) -> Vec<Option<usize>> {
    result.start_of()
}

/// Same answer as [`recover_start_positions`], obtained by walking every
/// backtrace. Quadratic; meant for cross-checking.
pub fn start_positions_by_backtrace(result: &SubseqResult) -> Vec<Option<usize>> {
    let r = result.rows() - 1;
    (0..result.cols())
        .map(|j| result.path_to(r, j).map(|p| p[0].1))
        .collect()
}
