use crate::data::Interval;

/// Binary M×N matrix: row i is a true interval, column j a predicted one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrespondenceMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<bool>,
}

impl CorrespondenceMatrix {
    pub fn from_cells(rows: usize, cols: usize, cells: Vec<bool>) -> Self {
        assert_eq!(cells.len(), rows * cols);
        CorrespondenceMatrix { rows, cols, cells }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.cols + j]
    }

    pub fn transpose(&self) -> Self {
        let mut cells = vec![false; self.cells.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                cells[j * self.rows + i] = self.get(i, j);
            }
        }
        CorrespondenceMatrix { rows: self.cols, cols: self.rows, cells }
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }
}

/// Onset, midpoint and last sample of an interval.
fn fiducials(iv: &Interval) -> [f64; 3] {
    let (a, b) = (iv.onset as f64, iv.last() as f64);
    [a, 0.5 * (a + b), b]
}

fn contains(iv: &Interval, x: f64) -> bool {
    iv.onset as f64 <= x && x <= iv.last() as f64
}

/// Two waves correspond when any fiducial (onset, midpoint, offset) of one
/// lies within the closed span of the other. Spans are `[onset, offset − 1]`.
pub fn corresponds(a: &Interval, b: &Interval) -> bool {
    fiducials(b).iter().any(|&f| contains(a, f)) || fiducials(a).iter().any(|&f| contains(b, f))
}

pub fn correspondence_matrix(truth: &[Interval], pred: &[Interval]) -> CorrespondenceMatrix {
    let cells = truth
        .iter()
        .flat_map(|t| pred.iter().map(move |p| corresponds(t, p)))
        .collect();
    CorrespondenceMatrix { rows: truth.len(), cols: pred.len(), cells }
}

/// A resolved true/predicted pair with signed errors in samples
/// (predicted − true).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Match {
    pub truth: usize,
    pub pred: usize,
    pub onset_error: i64,
    pub offset_error: i64,
}

impl Match {
    pub fn cost(&self) -> u64 {
        self.onset_error.unsigned_abs() + self.offset_error.unsigned_abs()
    }
}

/// One-to-one resolution of `h`: candidate pairs are accepted greedily in
/// ascending order of |onset error| + |offset error|, ties broken by
/// (true index, predicted index). Returned in true-index order.
pub fn resolve_matches(h: &CorrespondenceMatrix, truth: &[Interval], pred: &[Interval]) -> Vec<Match> {
    let mut candidates = Vec::with_capacity(h.count());
    for (i, t) in truth.iter().enumerate() {
        for (j, p) in pred.iter().enumerate() {
            if h.get(i, j) {
                candidates.push(Match {
                    truth: i,
                    pred: j,
                    onset_error: p.onset as i64 - t.onset as i64,
                    offset_error: p.offset as i64 - t.offset as i64,
                });
            }
        }
    }
    candidates.sort_by_key(|m| (m.cost(), m.truth, m.pred));
    let mut used_t = vec![false; truth.len()];
    let mut used_p = vec![false; pred.len()];
    let mut out = Vec::new();
    for m in candidates {
        if !used_t[m.truth] && !used_p[m.pred] {
            used_t[m.truth] = true;
            used_p[m.pred] = true;
            out.push(m);
        }
    }
    out.sort_by_key(|m| m.truth);
    out
}
