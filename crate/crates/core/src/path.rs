//! Cadlag path values on a grid with an exact jump ledger, and the path
//! functionals used by the verification suites: uniform norm, jump
//! functionals, grid-restricted p-variation and an approximate Skorohod J1
//! distance.

use crate::{Error, Result};

/// One recorded jump: time, size, and the series term that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEntry {
    pub time: f64,
    pub size: f64,
    pub term_index: usize,
}

/// Exact record of every jump of a simulated path, sorted by time.
#[derive(Debug, Clone, Default)]
pub struct JumpLedger {
    entries: Vec<JumpEntry>,
}

impl JumpLedger {
    pub fn new(mut entries: Vec<JumpEntry>) -> Self {
        entries.sort_by(|a, b| {
            a.time
                .partial_cmp(&b.time)
                .unwrap()
                .then(a.term_index.cmp(&b.term_index))
        });
        Self { entries }
    }

    pub fn entries(&self) -> &[JumpEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Number of jump times shared by entries with distinct term indices.
    /// Zero almost surely for continuous control measures.
    pub fn shared_jump_times(&self) -> usize {
        self.entries
            .windows(2)
            .filter(|w| w[0].time == w[1].time && w[0].term_index != w[1].term_index)
            .count()
    }
}

/// p-variation of the jumps: sum over ledger entries of |size|^p. Exact
/// (ledger-based, no grid error).
pub fn vp_of_jumps(ledger: &JumpLedger, p: f64) -> f64 {
    assert!(p > 0.0, "vp_of_jumps needs p > 0");
    ledger.entries().iter().map(|e| e.size.abs().powf(p)).sum()
}

/// Largest absolute jump; 0 for an empty ledger.
pub fn max_abs_jump(ledger: &JumpLedger) -> f64 {
    ledger.entries().iter().map(|e| e.size.abs()).fold(0.0, f64::max)
}

/// Largest jump, as sup over t of Delta X(t): the continuity points
/// contribute 0, so the result is floored at 0 when every jump is negative.
pub fn max_jump(ledger: &JumpLedger) -> f64 {
    ledger.entries().iter().map(|e| e.size).fold(0.0, f64::max)
}

/// Grid-evaluated cadlag path (right-continuous convention) plus its ledger.
#[derive(Debug, Clone)]
pub struct CadlagPath {
    grid: Vec<f64>,
    values: Vec<f64>,
    ledger: JumpLedger,
}

impl CadlagPath {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, ledger: JumpLedger) -> Result<Self> {
        if grid.len() != values.len() || grid.len() < 2 {
            return Err(Error::Config("path grid/value lengths disagree or are too short".into()));
        }
        if grid[0] != 0.0 || *grid.last().unwrap() != 1.0 || grid.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::Config(
                "path grid must be strictly increasing from 0 to 1".into(),
            ));
        }
        if ledger.entries().iter().any(|e| !(0.0..=1.0).contains(&e.time)) {
            return Err(Error::Config("ledger jump time outside [0,1]".into()));
        }
        Ok(Self { grid, values, ledger })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn ledger(&self) -> &JumpLedger {
        &self.ledger
    }

    /// Value at t under the right-continuous convention: the value at the
    /// largest grid point <= t.
    pub fn eval(&self, t: f64) -> f64 {
        let i = self.grid.partition_point(|&g| g <= t).max(1) - 1;
        self.values[i]
    }

    /// Same path re-evaluated on another grid.
    pub fn resample(&self, grid: &[f64]) -> Result<Self> {
        let values = grid.iter().map(|&t| self.eval(t)).collect();
        Self::new(grid.to_vec(), values, self.ledger.clone())
    }
}

/// Uniform grid on [0, 1] with `cells` cells (`cells + 1` points).
pub fn uniform_grid(cells: usize) -> Vec<f64> {
    let cells = cells.max(1);
    (0..=cells).map(|i| i as f64 / cells as f64).collect()
}

/// Uniform grid with the given jump times inserted, so the uniform norm is
/// exact at the jumps.
pub fn grid_with_jumps(cells: usize, jump_times: &[f64]) -> Vec<f64> {
    let mut grid = uniform_grid(cells);
    grid.extend(jump_times.iter().copied().filter(|t| (0.0..=1.0).contains(t)));
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    grid
}

/// max over the common grid of |p1 - p2|: a lower bound of the uniform norm,
/// exact when all jump times of both paths are grid points.
pub fn sup_norm_diff(p1: &CadlagPath, p2: &CadlagPath) -> Result<f64> {
    if p1.grid() != p2.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(p1
        .values()
        .iter()
        .zip(p2.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// `sup_norm_diff` after resampling both paths to the union of their grids.
pub fn sup_norm_diff_resampled(p1: &CadlagPath, p2: &CadlagPath) -> Result<f64> {
    if p1.grid() == p2.grid() {
        return sup_norm_diff(p1, p2);
    }
    let mut grid: Vec<f64> = p1.grid().iter().chain(p2.grid()).copied().collect();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    sup_norm_diff(&p1.resample(&grid)?, &p2.resample(&grid)?)
}

/// Upper-bound approximation of the Skorohod J1 distance: minimum over
/// monotone grid alignments with `knots` knots of
/// max(sup |x - y o lambda|, sup |lambda(t) - t|), by bottleneck dynamic
/// programming. Not the exact infimum over all time changes.
pub fn j1_distance(p1: &CadlagPath, p2: &CadlagPath, knots: usize) -> f64 {
    let knots = knots.max(2);
    let grid = uniform_grid(knots - 1);
    let x: Vec<f64> = grid.iter().map(|&t| p1.eval(t)).collect();
    let y: Vec<f64> = grid.iter().map(|&t| p2.eval(t)).collect();
    let n = grid.len();
    let cost = |i: usize, j: usize| (x[i] - y[j]).abs().max((grid[i] - grid[j]).abs());
    let mut prev = vec![f64::INFINITY; n];
    let mut row = vec![f64::INFINITY; n];
    prev[0] = cost(0, 0);
    for j in 1..n {
        prev[j] = prev[j - 1].max(cost(0, j));
    }
    for i in 1..n {
        row[0] = prev[0].max(cost(i, 0));
        for j in 1..n {
            let best = prev[j - 1].min(prev[j]).min(row[j - 1]);
            row[j] = best.max(cost(i, j));
        }
        std::mem::swap(&mut prev, &mut row);
    }
    prev[n - 1]
}

/// Maximum over grid-restricted partitions of (sum |increments|^p)^{1/p},
/// by quadratic-time dynamic programming: a lower bound of the BV_p norm.
pub fn grid_pvariation(path: &CadlagPath, p: f64) -> f64 {
    assert!(p > 1.0, "grid_pvariation needs p > 1");
    let x = path.values();
    let n = x.len();
    let mut best = vec![0.0f64; n];
    for j in 1..n {
        let mut b = 0.0f64;
        for i in 0..j {
            b = b.max(best[i] + (x[j] - x[i]).abs().powf(p));
        }
        best[j] = b;
    }
    best[n - 1].powf(1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_path(jump_at: f64, size: f64, cells: usize) -> CadlagPath {
        let grid = grid_with_jumps(cells, &[jump_at]);
        let values = grid.iter().map(|&t| if t >= jump_at { size } else { 0.0 }).collect();
        let ledger = JumpLedger::new(vec![JumpEntry { time: jump_at, size, term_index: 0 }]);
        CadlagPath::new(grid, values, ledger).unwrap()
    }

    #[test]
    fn sup_norm_diff_basics() {
        let p = step_path(0.5, 1.0, 64);
        assert_eq!(sup_norm_diff(&p, &p).unwrap(), 0.0);
        let shifted = CadlagPath::new(
            p.grid().to_vec(),
            p.values().iter().map(|v| v + 2.5).collect(),
            p.ledger().clone(),
        )
        .unwrap();
        assert_eq!(sup_norm_diff(&p, &shifted).unwrap(), 2.5);
        // jumps one grid cell apart differ by the full height on that cell
        let q = step_path(0.5 + 1.0 / 64.0, 1.0, 64);
        assert_eq!(sup_norm_diff_resampled(&p, &q).unwrap(), 1.0);
        let other_grid = step_path(0.25, 1.0, 32);
        assert!(sup_norm_diff(&p, &other_grid).is_err());
    }

    #[test]
    fn vp_and_extremal_jumps() {
        let empty = JumpLedger::default();
        assert_eq!(vp_of_jumps(&empty, 2.0), 0.0);
        assert_eq!(max_abs_jump(&empty), 0.0);
        assert_eq!(max_jump(&empty), 0.0);
        let ledger = JumpLedger::new(vec![
            JumpEntry { time: 0.2, size: 2.0, term_index: 0 },
            JumpEntry { time: 0.7, size: -1.0, term_index: 1 },
        ]);
        assert_eq!(vp_of_jumps(&ledger, 2.0), 5.0);
        let ledger = JumpLedger::new(vec![
            JumpEntry { time: 0.2, size: 1.0, term_index: 0 },
            JumpEntry { time: 0.7, size: -3.0, term_index: 1 },
        ]);
        assert_eq!(max_abs_jump(&ledger), 3.0);
        assert_eq!(max_jump(&ledger), 1.0);
        // all-negative jumps: sup over continuity points is 0
        let neg = JumpLedger::new(vec![JumpEntry { time: 0.5, size: -2.0, term_index: 0 }]);
        assert_eq!(max_jump(&neg), 0.0);
    }

    #[test]
    fn shared_jump_time_detection() {
        let ledger = JumpLedger::new(vec![
            JumpEntry { time: 0.5, size: 1.0, term_index: 0 },
            JumpEntry { time: 0.5, size: 2.0, term_index: 1 },
        ]);
        assert_eq!(ledger.shared_jump_times(), 1);
    }

    #[test]
    fn j1_examples() {
        let p = step_path(0.4, 1.0, 512);
        assert_eq!(j1_distance(&p, &p, 512), 0.0);
        let q = step_path(0.45, 1.0, 512);
        let d = j1_distance(&p, &q, 512);
        assert!(d <= 0.05 + 2.0 / 512.0, "d {d}");
        assert!(d > 0.0);
        let double = step_path(0.4, 2.0, 512);
        assert!((j1_distance(&p, &double, 512) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pvariation_examples() {
        // monotone: single-interval partition is optimal for p > 1
        let grid = uniform_grid(16);
        let values: Vec<f64> = grid.iter().map(|&t| t * t).collect();
        let path = CadlagPath::new(grid, values, JumpLedger::default()).unwrap();
        assert!((grid_pvariation(&path, 2.0) - 1.0).abs() < 1e-12);

        let flat = CadlagPath::new(uniform_grid(8), vec![3.0; 9], JumpLedger::default()).unwrap();
        assert_eq!(grid_pvariation(&flat, 1.5), 0.0);

        // sawtooth 0,1,0,1,0 on 5 points: V_2 = sqrt(4)
        let grid = uniform_grid(4);
        let path =
            CadlagPath::new(grid, vec![0.0, 1.0, 0.0, 1.0, 0.0], JumpLedger::default()).unwrap();
        assert!((grid_pvariation(&path, 2.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pvariation_monotone_under_refinement() {
        let coarse_grid = uniform_grid(8);
        let values: Vec<f64> = coarse_grid.iter().map(|&t| (6.0 * t).sin()).collect();
        let coarse = CadlagPath::new(coarse_grid, values, JumpLedger::default()).unwrap();
        let fine = coarse.resample(&uniform_grid(32)).unwrap();
        assert!(grid_pvariation(&fine, 2.0) >= grid_pvariation(&coarse, 2.0) - 1e-12);
    }
}
