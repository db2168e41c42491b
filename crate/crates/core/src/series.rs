//! Truncated series construction of cadlag process paths: the symmetric
//! LePage specialization, the generic shot-noise representation with
//! centering, and the convergence diagnostics.

use rand::Rng;

use crate::kernel::{Kernel, LepageIntegrand, SeriesIntegrand};
use crate::measure::ControlMeasure;
use crate::path::{grid_with_jumps, CadlagPath, JumpEntry, JumpLedger};
use crate::rng::RngStream;
use crate::stats::EmpiricalSample;
use crate::{Error, Result};

/// Stable series normalization: c_1 = 2/pi and
/// c_alpha = [-alpha cos(pi alpha / 2) Gamma(-alpha)]^{-1/alpha} otherwise,
/// evaluated through the reflection formula
/// c_alpha = (2 sin(pi alpha / 2) Gamma(alpha) / pi)^{1/alpha}, which is
/// finite and continuous across alpha = 1.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let base =
        2.0 * (std::f64::consts::FRAC_PI_2 * alpha).sin() * statrs::function::gamma::gamma(alpha)
            / std::f64::consts::PI;
    Ok(base.powf(1.0 / alpha))
}

/// Truncation rule: a fixed term count J, or a Poisson level u keeping the
/// terms with Gamma_j <= u.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    Terms(usize),
    Level(f64),
}

/// Parameters of one series experiment.
#[derive(Debug, Clone)]
pub struct SeriesConfig {
    pub alpha: f64,
    pub truncation: Truncation,
    pub replicates: usize,
    /// Uniform grid cells; ledger jump times are inserted on top.
    pub grid_cells: usize,
    pub master_seed: u64,
}

impl SeriesConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::AlphaOutOfRange(self.alpha));
        }
        if let Truncation::Level(u) = self.truncation {
            if !(u >= 0.0) {
                return Err(Error::Config(format!("truncation level must be >= 0, got {u}")));
            }
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicate count must be >= 1".into()));
        }
        Ok(())
    }
}

/// The randomness of one truncated series replicate: arrival times, signs
/// and marks, drawn from fixed substreams (0: arrivals, 1: signs, 2: marks)
/// so that coupled prefixes across truncation levels are literal tail sums.
#[derive(Debug, Clone)]
pub struct SeriesTerms {
    pub gammas: Vec<f64>,
    /// Rademacher signs for symmetric integrands; all +1 otherwise.
    pub signs: Vec<f64>,
    pub marks: Vec<f64>,
    /// Realized truncation level: terms satisfy Gamma_j <= level.
    pub level: f64,
}

impl SeriesTerms {
    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }
}

/// Draw the terms of one replicate. Term-count truncation at J and level
/// truncation at u = Gamma_J produce identical terms.
pub fn draw_terms(
    measure: &ControlMeasure,
    truncation: Truncation,
    symmetric: bool,
    stream: &RngStream,
) -> SeriesTerms {
    let mut arrivals = stream.substream(0).rng();
    let mut gammas = Vec::new();
    let mut sum = 0.0;
    match truncation {
        Truncation::Terms(count) => {
            for _ in 0..count {
                sum += exp1(&mut arrivals);
                gammas.push(sum);
            }
        }
        Truncation::Level(u) => loop {
            sum += exp1(&mut arrivals);
            if sum > u {
                break;
            }
            gammas.push(sum);
        },
    }
    let count = gammas.len();
    let signs = if symmetric {
        crate::rng::rademacher(&stream.substream(1), count)
    } else {
        vec![1.0; count]
    };
    let marks = measure.sample_marks(&stream.substream(2), count);
    let level = match truncation {
        Truncation::Terms(_) => gammas.last().copied().unwrap_or(0.0),
        Truncation::Level(u) => u,
    };
    SeriesTerms { gammas, signs, marks, level }
}

fn exp1<R: Rng>(rng: &mut R) -> f64 {
    -(1.0 - rng.random::<f64>()).ln()
}

/// Uncentered series value sum_j sign_j H(t, Gamma_j, V_j).
pub fn series_eval_at<H: SeriesIntegrand + ?Sized>(
    integrand: &H,
    terms: &SeriesTerms,
    t: f64,
) -> f64 {
    let mut sum = 0.0;
    for j in 0..terms.len() {
        sum += terms.signs[j] * integrand.eval(t, terms.gammas[j], terms.marks[j]);
    }
    sum
}

/// Exact jump ledger of the truncated series, one entry per kernel jump time
/// of each term; term indices are 1-based like the series index j.
pub fn series_ledger<H: SeriesIntegrand + ?Sized>(
    integrand: &H,
    terms: &SeriesTerms,
) -> JumpLedger {
    let mut entries = Vec::with_capacity(terms.len());
    for j in 0..terms.len() {
        for tau in integrand.jump_times(terms.marks[j]) {
            let size = terms.signs[j] * integrand.jump_size(tau, terms.gammas[j], terms.marks[j]);
            if size != 0.0 {
                entries.push(JumpEntry { time: tau, size, term_index: j + 1 });
            }
        }
    }
    JumpLedger::new(entries)
}

/// Piecewise-linear table of the centering A^u(t) on a time grid.
#[derive(Debug, Clone)]
pub struct CenteringTable {
    pub u: f64,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl CenteringTable {
    pub fn zero(u: f64) -> Self {
        Self { u, grid: vec![0.0, 1.0], values: vec![0.0, 0.0] }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.grid.partition_point(|&g| g <= t).clamp(1, self.grid.len() - 1) - 1;
        let (g0, g1) = (self.grid[i], self.grid[i + 1]);
        let w = ((t - g0) / (g1 - g0)).clamp(0.0, 1.0);
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }
}

/// Scalar truncation x / (1 or |x|), the bounded compensator integrand.
fn truncate_unit(x: f64) -> f64 {
    x / 1.0_f64.max(x.abs())
}

/// Centering table A^u(t) = integral over r in [0, u] of E trunc(H(t, r, V)) dr.
///
/// The inner expectation uses a fixed Monte Carlo mark set of size
/// `mc_draws`; the radial integral uses log-spaced midpoints (`r_nodes` of
/// them), which resolves the r^{-1/alpha} singularity once the truncation
/// caps it.
pub fn compute_centering<H: SeriesIntegrand + ?Sized>(
    integrand: &H,
    measure: &ControlMeasure,
    u: f64,
    grid: &[f64],
    r_nodes: usize,
    mc_draws: usize,
    stream: &RngStream,
) -> Result<CenteringTable> {
    if !(u > 0.0) {
        return Err(Error::Config(format!("centering level must be positive, got {u}")));
    }
    let marks = measure.sample_marks(stream, mc_draws.max(1));
    let r_min = u * 1e-9;
    let log_span = (u / r_min).ln();
    let dl = log_span / r_nodes.max(1) as f64;
    let mut values = Vec::with_capacity(grid.len());
    for &t in grid {
        let mut acc = 0.0;
        for k in 0..r_nodes.max(1) {
            let r = r_min * ((k as f64 + 0.5) * dl).exp();
            let mean = mark_mean(integrand, &marks, t, r)?;
            acc += mean * r * dl;
        }
        // stub below r_min: the truncated integrand is bounded by 1 there
        acc += mark_mean(integrand, &marks, t, r_min)? * r_min;
        values.push(acc);
    }
    Ok(CenteringTable { u, grid: grid.to_vec(), values })
}

fn mark_mean<H: SeriesIntegrand + ?Sized>(
    integrand: &H,
    marks: &[f64],
    t: f64,
    r: f64,
) -> Result<f64> {
    let mut sum = 0.0;
    for &v in marks {
        let h = integrand.eval(t, r, v);
        if !h.is_finite() {
            return Err(Error::NonFinite(format!("integrand at t={t} r={r} v={v}")));
        }
        sum += truncate_unit(h);
    }
    Ok(sum / marks.len() as f64)
}

/// Grid evaluation of the truncated shot-noise series
/// Y^u(t) = b(t) + sum_{Gamma_j <= u} [sign_j] H(t, Gamma_j, V_j) - A^u(t),
/// with the exact jump ledger. `centering = None` means A identically 0
/// (symmetric case).
pub fn shot_noise_sample_path<H: SeriesIntegrand + ?Sized>(
    integrand: &H,
    measure: &ControlMeasure,
    config: &SeriesConfig,
    stream: &RngStream,
    centering: Option<&CenteringTable>,
) -> Result<CadlagPath> {
    config.validate()?;
    let terms = draw_terms(measure, config.truncation, integrand.is_symmetric(), stream);
    if let Some(table) = centering {
        if (table.u - terms.level).abs() > 1e-12 * table.u.abs().max(1.0) {
            return Err(Error::CenteringLevelMismatch { table_u: table.u, config_u: terms.level });
        }
    }
    let ledger = series_ledger(integrand, &terms);
    let jump_times: Vec<f64> = ledger.entries().iter().map(|e| e.time).collect();
    let grid = grid_with_jumps(config.grid_cells, &jump_times);
    let values: Vec<f64> = grid
        .iter()
        .map(|&t| {
            integrand.shift(t) + series_eval_at(integrand, &terms, t)
                - centering.map_or(0.0, |c| c.eval(t))
        })
        .collect();
    CadlagPath::new(grid, values, ledger)
}

/// Truncated LePage path
/// X(t) = c_alpha m(S)^{1/alpha} sum_j eps_j Gamma_j^{-1/alpha} f(t, V_j)
/// with its exact jump ledger.
pub fn lepage_sample_path(
    kernel: &Kernel,
    measure: &ControlMeasure,
    config: &SeriesConfig,
    stream: &RngStream,
) -> Result<CadlagPath> {
    let integrand = LepageIntegrand::new(kernel.clone(), measure, config.alpha)?;
    if integrand.kernel().is_pure_step() {
        // a pure-step kernel makes every path value the running jump sum, so
        // the O(terms x grid) evaluation collapses to one prefix scan
        config.validate()?;
        let terms = draw_terms(measure, config.truncation, true, stream);
        let ledger = series_ledger(&integrand, &terms);
        let jump_times: Vec<f64> = ledger.entries().iter().map(|e| e.time).collect();
        let grid = grid_with_jumps(config.grid_cells, &jump_times);
        let entries = ledger.entries();
        let mut values = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        let mut next = 0;
        for &t in &grid {
            while next < entries.len() && entries[next].time <= t {
                acc += entries[next].size;
                next += 1;
            }
            values.push(acc);
        }
        return CadlagPath::new(grid, values, ledger);
    }
    shot_noise_sample_path(&integrand, measure, config, stream, None)
}

/// Convergence-necessity diagnostics for a series integrand: the sup-norm
/// term sequence and the tail integral of P(sup_t |H(., r, V)| > 1).
#[derive(Debug, Clone)]
pub struct DiagnosticsReport {
    /// sup_t |H(t, Gamma_j, V_j)| for j = 1..=j_max
    pub sup_norms: Vec<f64>,
    /// max over the last tenth of the term indices
    pub last_decile_max: f64,
    /// estimate of the tail integral; the per-mark radial integral is exact
    /// by monotonicity of r -> sup_t |H|
    pub integral_estimate: f64,
    /// set when the integrand still exceeds 1 at r = r_cap
    pub divergent: bool,
    pub r_cap: f64,
}

const TAIL_R_CAP: f64 = 1e6;

pub fn tail_diagnostics<H: SeriesIntegrand + ?Sized>(
    integrand: &H,
    measure: &ControlMeasure,
    j_max: usize,
    stream: &RngStream,
) -> Result<DiagnosticsReport> {
    if j_max < 100 {
        return Err(Error::Config(format!("tail diagnostics need j_max >= 100, got {j_max}")));
    }
    let gammas = crate::rng::gamma_arrivals(&stream.substream(0), j_max);
    let marks = measure.sample_marks(&stream.substream(2), j_max);
    let sup_norms: Vec<f64> =
        gammas.iter().zip(&marks).map(|(&g, &v)| integrand.sup_norm(g, v)).collect();
    let decile_start = j_max - j_max / 10;
    let last_decile_max = sup_norms[decile_start..].iter().cloned().fold(0.0, f64::max);

    // E over V of the exact radial threshold sup{r : sup_t |H(., r, v)| > 1},
    // found by bisection on the nonincreasing norm profile.
    let mc_marks = measure.sample_marks(&stream.substream(3), 4000);
    let mut acc = 0.0;
    let mut divergent = false;
    for &v in &mc_marks {
        if integrand.sup_norm(TAIL_R_CAP, v) > 1.0 {
            divergent = true;
            acc += TAIL_R_CAP;
            continue;
        }
        let tiny = 1e-280;
        if integrand.sup_norm(tiny, v) <= 1.0 {
            continue; // bounded by 1 along the whole profile
        }
        let (mut lo, mut hi) = (tiny, TAIL_R_CAP);
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if integrand.sup_norm(mid, v) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        acc += (lo * hi).sqrt();
    }
    Ok(DiagnosticsReport {
        last_decile_max,
        integral_estimate: acc / mc_marks.len() as f64,
        divergent,
        r_cap: TAIL_R_CAP,
        sup_norms,
    })
}

/// Coupled-stream partial-sum differences across a truncation ladder.
#[derive(Debug, Clone)]
pub struct LadderRung {
    pub from_terms: usize,
    pub to_terms: usize,
    pub median: f64,
    pub q90: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub rungs: Vec<LadderRung>,
}

/// For each consecutive ladder pair (J, J'), the median and 90th percentile
/// over replicates of ||S_{J'} - S_J|| on coupled streams: the difference is
/// the literal tail sum because arrivals, signs and marks extend by prefix.
pub fn partial_sum_ladder(
    kernel: &Kernel,
    measure: &ControlMeasure,
    alpha: f64,
    ladder: &[usize],
    replicates: usize,
    stream: &RngStream,
) -> Result<ConvergenceReport> {
    if ladder.is_empty() {
        return Err(Error::Config("truncation ladder is empty".into()));
    }
    if ladder.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("truncation ladder must be nondecreasing".into()));
    }
    let integrand = LepageIntegrand::new(kernel.clone(), measure, alpha)?;
    let j_max = *ladder.last().unwrap();
    let mut diffs: Vec<Vec<f64>> = vec![Vec::with_capacity(replicates); ladder.len() - 1];
    for rep in 0..replicates {
        let terms = draw_terms(measure, Truncation::Terms(j_max), true, &stream.substream(rep as u64));
        for (k, pair) in ladder.windows(2).enumerate() {
            diffs[k].push(block_sup_norm(&integrand, &terms, pair[0], pair[1]));
        }
    }
    let mut rungs = Vec::new();
    for (k, pair) in ladder.windows(2).enumerate() {
        let sample = EmpiricalSample::new(diffs[k].clone());
        let q = sample.quantiles(&[0.5, 0.9]);
        rungs.push(LadderRung { from_terms: pair[0], to_terms: pair[1], median: q[0], q90: q[1] });
    }
    Ok(ConvergenceReport { rungs })
}

/// sup-norm of the tail sum over terms j in (lo, hi].
fn block_sup_norm(
    integrand: &LepageIntegrand,
    terms: &SeriesTerms,
    lo: usize,
    hi: usize,
) -> f64 {
    let hi = hi.min(terms.len());
    if lo >= hi {
        return 0.0;
    }
    if integrand.kernel().is_pure_step() {
        // each section is a single held step, so the tail sum is the prefix
        // scan of its jumps in time order
        let mut jumps: Vec<(f64, f64)> = Vec::new();
        for j in lo..hi {
            for tau in integrand.jump_times(terms.marks[j]) {
                jumps.push((
                    tau,
                    terms.signs[j] * integrand.jump_size(tau, terms.gammas[j], terms.marks[j]),
                ));
            }
        }
        jumps.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // simultaneous jumps (atomic measures) move the path once, so the
        // running sum is only a path value at time boundaries
        let mut acc = 0.0;
        let mut sup = 0.0f64;
        let mut i = 0;
        while i < jumps.len() {
            let time = jumps[i].0;
            while i < jumps.len() && jumps[i].0 == time {
                acc += jumps[i].1;
                i += 1;
            }
            sup = sup.max(acc.abs());
        }
        sup
    } else {
        let mut jump_times: Vec<f64> = Vec::new();
        for j in lo..hi {
            jump_times.extend(integrand.jump_times(terms.marks[j]));
        }
        let grid = grid_with_jumps(256, &jump_times);
        grid.iter()
            .map(|&t| {
                let mut sum = 0.0;
                for j in lo..hi {
                    sum += terms.signs[j] * integrand.eval(t, terms.gammas[j], terms.marks[j]);
                }
                sum.abs()
            })
            .fold(0.0, f64::max)
    }
}
