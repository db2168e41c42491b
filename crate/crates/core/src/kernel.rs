//! Integrand families for the stable integral representation: the kernel
//! f(t, s) with cadlag sections and exact per-section jump metadata, and the
//! generic series integrand H(t, r, v) built on top of it.
//!
//! Jump times and sizes are analytic for the built-in kernels, never
//! detected numerically; the jump-functional laws are computed from this
//! metadata exactly. Tabulated kernels must declare their jumps in the input
//! manifest -- undeclared jumps silently corrupt the jump ledger.

use std::path::Path;

use crate::measure::ControlMeasure;
use crate::series::c_alpha;
use crate::{Error, Result};

/// Kernel f(t, s) of the integral representation, with cadlag sections
/// t -> f(t, s).
#[derive(Debug, Clone)]
pub enum Kernel {
    /// f(t, s) = 1 for 0 < s <= t, else 0: the standard symmetric stable
    /// Levy process under Lebesgue control measure.
    Indicator,
    /// f(t, s) = exp(-lambda (t - s)) for 0 < s <= t, else 0.
    Ou { lambda: f64 },
    /// Grid-tabulated kernel, piecewise constant and right-continuous in t
    /// between grid rows, nearest-node in s. Jumps come from the declared
    /// manifest only.
    Tabulated {
        t_nodes: Vec<f64>,
        s_nodes: Vec<f64>,
        /// row-major `values[t_index][s_index]`
        values: Vec<Vec<f64>>,
        /// per s-node: sorted (jump time, jump size) pairs
        jumps: Vec<Vec<(f64, f64)>>,
    },
}

impl Kernel {
    pub fn indicator() -> Self {
        Kernel::Indicator
    }

    pub fn ou(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidKernel(format!("ou decay rate must be positive, got {lambda}")));
        }
        Ok(Kernel::Ou { lambda })
    }

    pub fn tabulated(
        t_nodes: Vec<f64>,
        s_nodes: Vec<f64>,
        values: Vec<Vec<f64>>,
        jumps: Vec<Vec<(f64, f64)>>,
    ) -> Result<Self> {
        if t_nodes.len() < 2 || s_nodes.is_empty() {
            return Err(Error::InvalidKernel("tabulated kernel needs >= 2 t-nodes and >= 1 s-node".into()));
        }
        if t_nodes.windows(2).any(|w| w[1] <= w[0]) || s_nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidKernel("tabulated kernel grid must be strictly increasing".into()));
        }
        if values.len() != t_nodes.len()
            || values.iter().any(|row| row.len() != s_nodes.len())
            || jumps.len() != s_nodes.len()
        {
            return Err(Error::InvalidKernel("tabulated kernel grid/value/manifest shapes disagree".into()));
        }
        let mut jumps = jumps;
        for list in &mut jumps {
            list.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        }
        Ok(Kernel::Tabulated { t_nodes, s_nodes, values, jumps })
    }

    /// Load a tabulated kernel from a `t,s,value` CSV on a rectangular grid
    /// plus a `s,jump_time,jump_size` manifest CSV.
    pub fn tabulated_from_csv(values_path: &Path, manifest_path: &Path) -> Result<Self> {
        let rows = read_csv_rows(values_path, 3)?;
        let mut t_nodes: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let mut s_nodes: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        t_nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        t_nodes.dedup();
        s_nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s_nodes.dedup();
        if rows.len() != t_nodes.len() * s_nodes.len() {
            return Err(Error::InvalidKernel(format!(
                "kernel CSV is not a rectangular grid: {} rows for {} x {} nodes",
                rows.len(),
                t_nodes.len(),
                s_nodes.len()
            )));
        }
        let mut values = vec![vec![f64::NAN; s_nodes.len()]; t_nodes.len()];
        for r in &rows {
            let ti = t_nodes.partition_point(|&t| t < r[0]);
            let si = s_nodes.partition_point(|&s| s < r[1]);
            values[ti][si] = r[2];
        }
        let mut jumps = vec![Vec::new(); s_nodes.len()];
        for r in read_csv_rows(manifest_path, 3)? {
            let si = nearest_index(&s_nodes, r[0]);
            jumps[si].push((r[1], r[2]));
        }
        Self::tabulated(t_nodes, s_nodes, values, jumps)
    }

    pub fn eval(&self, t: f64, s: f64) -> f64 {
        match self {
            Kernel::Indicator => {
                if s > 0.0 && s <= t {
                    1.0
                } else {
                    0.0
                }
            }
            Kernel::Ou { lambda } => {
                if s > 0.0 && s <= t {
                    (-lambda * (t - s)).exp()
                } else {
                    0.0
                }
            }
            Kernel::Tabulated { t_nodes, s_nodes, values, .. } => {
                let si = nearest_index(s_nodes, s);
                if t < t_nodes[0] {
                    return 0.0;
                }
                let ti = t_nodes.partition_point(|&x| x <= t).max(1) - 1;
                values[ti][si]
            }
        }
    }

    /// Exact, ordered jump times of the section t -> f(t, s).
    pub fn section_jump_times(&self, s: f64) -> Vec<f64> {
        match self {
            Kernel::Indicator | Kernel::Ou { .. } => {
                if s > 0.0 && s <= 1.0 {
                    vec![s]
                } else {
                    vec![]
                }
            }
            Kernel::Tabulated { s_nodes, jumps, .. } => {
                jumps[nearest_index(s_nodes, s)].iter().map(|j| j.0).collect()
            }
        }
    }

    /// Jump size of the section at t: f(t, s) - f(t-, s). Zero off the
    /// declared jump times.
    pub fn jump_size(&self, t: f64, s: f64) -> f64 {
        match self {
            Kernel::Indicator | Kernel::Ou { .. } => {
                if s > 0.0 && s <= 1.0 && t == s {
                    1.0
                } else {
                    0.0
                }
            }
            Kernel::Tabulated { s_nodes, jumps, .. } => jumps[nearest_index(s_nodes, s)]
                .iter()
                .find(|j| j.0 == t)
                .map_or(0.0, |j| j.1),
        }
    }

    /// sup_t |f(t, s)| over [0, 1].
    pub fn section_sup_abs(&self, s: f64) -> f64 {
        match self {
            Kernel::Indicator | Kernel::Ou { .. } => {
                if s > 0.0 && s <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Kernel::Tabulated { s_nodes, values, .. } => {
                let si = nearest_index(s_nodes, s);
                values.iter().map(|row| row[si].abs()).fold(0.0, f64::max)
            }
        }
    }

    /// max_t |Delta f(t, s)|; zero for continuous sections.
    pub fn section_max_abs_jump(&self, s: f64) -> f64 {
        self.section_jump_times(s)
            .iter()
            .map(|&t| self.jump_size(t, s).abs())
            .fold(0.0, f64::max)
    }

    /// sup_t Delta f(t, s): zero at continuity points, so never negative.
    pub fn section_sup_jump(&self, s: f64) -> f64 {
        self.section_jump_times(s)
            .iter()
            .map(|&t| self.jump_size(t, s))
            .fold(0.0, f64::max)
    }

    /// inf_t Delta f(t, s): never positive.
    pub fn section_inf_jump(&self, s: f64) -> f64 {
        self.section_jump_times(s)
            .iter()
            .map(|&t| self.jump_size(t, s))
            .fold(0.0, f64::min)
    }

    /// p-variation of the jumps of the section: sum |Delta f(t, s)|^p.
    pub fn section_vp_jumps(&self, s: f64, p: f64) -> f64 {
        self.section_jump_times(s)
            .iter()
            .map(|&t| self.jump_size(t, s).abs().powf(p))
            .sum()
    }

    /// True when every section is a single step held constant after its
    /// jump, i.e. f(t, s) = sum of section jumps up to t. Partial-sum paths
    /// of such kernels can be evaluated by a prefix scan over the ledger.
    pub fn is_pure_step(&self) -> bool {
        matches!(self, Kernel::Indicator)
    }
}

fn nearest_index(nodes: &[f64], x: f64) -> usize {
    let i = nodes.partition_point(|&v| v < x);
    if i == 0 {
        0
    } else if i == nodes.len() {
        nodes.len() - 1
    } else if (x - nodes[i - 1]).abs() <= (nodes[i] - x).abs() {
        i - 1
    } else {
        i
    }
}

fn read_csv_rows(path: &Path, cols: usize) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: Option<Vec<f64>> =
            line.split(',').map(|c| c.trim().parse::<f64>().ok()).collect();
        match parsed {
            Some(row) if row.len() == cols => rows.push(row),
            _ if lineno == 0 => continue, // header
            _ => {
                return Err(Error::InvalidKernel(format!(
                    "unparseable CSV row {} in {}: {line:?}",
                    lineno + 1,
                    path.display()
                )))
            }
        }
    }
    Ok(rows)
}

/// Generic integrand H(t, r, v) of the shot-noise representation, with shift
/// b(t) and jump metadata per term.
pub trait SeriesIntegrand: Sync {
    fn eval(&self, t: f64, r: f64, v: f64) -> f64;

    fn shift(&self, _t: f64) -> f64 {
        0.0
    }

    /// When true the series engine attaches an independent Rademacher sign
    /// to every term and the centering vanishes by symmetry.
    fn is_symmetric(&self) -> bool {
        false
    }

    /// Jump times of t -> H(t, r, v); independent of r for the kernels here.
    fn jump_times(&self, v: f64) -> Vec<f64>;

    fn jump_size(&self, t: f64, r: f64, v: f64) -> f64;

    /// sup_t |H(t, r, v)|.
    fn sup_norm(&self, r: f64, v: f64) -> f64;

    /// Assertion that r -> sup_norm(r, v) is nonincreasing for every v.
    fn monotone_norm(&self) -> bool {
        true
    }
}

/// LePage integrand H(t, r, v) = c_alpha m(S)^{1/alpha} r^{-1/alpha} f(t, v).
#[derive(Debug, Clone)]
pub struct LepageIntegrand {
    kernel: Kernel,
    alpha: f64,
    /// c_alpha m(S)^{1/alpha}
    coefficient: f64,
}

impl LepageIntegrand {
    pub fn new(kernel: Kernel, measure: &ControlMeasure, alpha: f64) -> Result<Self> {
        let c = c_alpha(alpha)?;
        Ok(Self { kernel, alpha, coefficient: c * measure.total_mass().powf(1.0 / alpha) })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    /// Radial weight c_alpha m(S)^{1/alpha} r^{-1/alpha} of one term.
    pub fn weight(&self, r: f64) -> f64 {
        self.coefficient * r.powf(-1.0 / self.alpha)
    }
}

impl SeriesIntegrand for LepageIntegrand {
    fn eval(&self, t: f64, r: f64, v: f64) -> f64 {
        self.weight(r) * self.kernel.eval(t, v)
    }

    fn is_symmetric(&self) -> bool {
        true
    }

    fn jump_times(&self, v: f64) -> Vec<f64> {
        self.kernel.section_jump_times(v)
    }

    fn jump_size(&self, t: f64, r: f64, v: f64) -> f64 {
        self.weight(r) * self.kernel.jump_size(t, v)
    }

    fn sup_norm(&self, r: f64, v: f64) -> f64 {
        self.weight(r) * self.kernel.section_sup_abs(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_values_and_jumps() {
        let k = Kernel::indicator();
        assert_eq!(k.eval(0.5, 0.25), 1.0);
        assert_eq!(k.eval(0.5, 0.75), 0.0);
        assert_eq!(k.section_jump_times(0.3), vec![0.3]);
        assert!(k.section_jump_times(0.0).is_empty());
        assert_eq!(k.jump_size(0.3, 0.3), 1.0);
        assert_eq!(k.jump_size(0.4, 0.3), 0.0);
    }

    #[test]
    fn indicator_alpha_norm_is_power_of_t() {
        let m = ControlMeasure::lebesgue_unit();
        let alpha = 1.5;
        for &t in &[0.25, 0.5, 1.0] {
            let int = m
                .integral(|s| {
                    let f: f64 = Kernel::indicator().eval(t, s);
                    f.abs().powf(alpha)
                })
                .unwrap();
            assert!((int.powf(1.0 / alpha) - t.powf(1.0 / alpha)).abs() < 1e-10);
        }
    }

    #[test]
    fn ou_values_and_jumps() {
        let lambda = 2.0;
        let k = Kernel::ou(lambda).unwrap();
        for &s in &[0.1, 0.5, 1.0] {
            assert_eq!(k.eval(s, s), 1.0);
            assert_eq!(k.section_max_abs_jump(s), 1.0);
        }
        assert!((k.eval(1.0, 0.5) - (-0.5 * lambda).exp()).abs() < 1e-15);
        assert_eq!(k.eval(0.3, 0.5), 0.0);
        assert!(Kernel::ou(0.0).is_err());
    }

    #[test]
    fn right_continuity_on_halving_ladder() {
        let kernels = [Kernel::indicator(), Kernel::ou(1.0).unwrap()];
        let mut x = 0.123456;
        for k in &kernels {
            for i in 0..1000 {
                x = (x * 7919.0 + i as f64).rem_euclid(1.0);
                let t = x;
                let s = (x * 31.0).rem_euclid(1.0);
                let base = k.eval(t, s);
                let mut eps = 0.25;
                for _ in 0..30 {
                    eps *= 0.5;
                    let _ = eps;
                }
                // right limit along eps = 2^-k
                let right = k.eval(t + 2.0_f64.powi(-40), s);
                assert!(
                    (base - right).abs() < 1e-9,
                    "right-continuity fails at t={t} s={s}"
                );
            }
        }
    }

    #[test]
    fn jump_consistency_from_the_left() {
        for k in [Kernel::indicator(), Kernel::ou(3.0).unwrap()] {
            for &s in &[0.25, 0.5, 0.9] {
                let t = s;
                let mut delta = 0.25;
                let mut last = f64::NAN;
                for _ in 0..30 {
                    delta *= 0.5;
                    last = k.eval(t, s) - k.eval(t - delta, s);
                }
                assert!((last - k.jump_size(t, s)).abs() < 1e-8, "s={s} last={last}");
            }
        }
    }

    #[test]
    fn lepage_integrand_at_unit_radius() {
        let m = ControlMeasure::lebesgue_unit();
        let h = LepageIntegrand::new(Kernel::indicator(), &m, 1.5).unwrap();
        let c = c_alpha(1.5).unwrap();
        assert!((h.eval(1.0, 1.0, 0.5) - c).abs() < 1e-14);
        assert_eq!(h.eval(0.3, 1.0, 0.5), 0.0);
        // r -> sup_t |H| strictly decreasing
        assert!(h.sup_norm(2.0, 0.5) < h.sup_norm(1.0, 0.5));
        assert!(h.monotone_norm());
    }

    #[test]
    fn monotone_norm_verified_numerically() {
        let m = ControlMeasure::lebesgue_unit();
        for kernel in [Kernel::indicator(), Kernel::ou(1.0).unwrap()] {
            let h = LepageIntegrand::new(kernel, &m, 1.2).unwrap();
            let marks = m.sample_marks(&crate::rng::RngStream::new(21), 100);
            for &v in &marks {
                let mut prev = f64::INFINITY;
                for k in -20..=20 {
                    let r = 10.0_f64.powf(k as f64 / 5.0);
                    let s = h.sup_norm(r, v);
                    assert!(s <= prev + 1e-12);
                    prev = s;
                }
            }
        }
    }

    #[test]
    fn lepage_levy_tail_matches_closed_form() {
        // one-dimensional Levy tail at t = 1, x = 1:
        // integral over r of P(|H(1, r, V)| > 1) dr = c_alpha^alpha
        let m = ControlMeasure::lebesgue_unit();
        let alpha = 1.5;
        let h = LepageIntegrand::new(Kernel::indicator(), &m, alpha).unwrap();
        let marks = m.sample_marks(&crate::rng::RngStream::new(22), 20_000);
        // per mark the radial integral is exact: r ranges over
        // (0, (c |f(1, v)|)^alpha)
        let mc: f64 = marks
            .iter()
            .map(|&v| (h.coefficient() * Kernel::indicator().eval(1.0, v).abs()).powf(alpha))
            .sum::<f64>()
            / marks.len() as f64;
        let exact = c_alpha(alpha).unwrap().powf(alpha);
        assert!((mc - exact).abs() < 0.02 * exact, "mc {mc} exact {exact}");
    }

    #[test]
    fn tabulated_kernel_roundtrip() {
        let k = Kernel::tabulated(
            vec![0.0, 0.5, 1.0],
            vec![0.2, 0.8],
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 2.0]],
            vec![vec![(0.5, 1.0)], vec![(1.0, 2.0)]],
        )
        .unwrap();
        assert_eq!(k.eval(0.4, 0.2), 0.0);
        assert_eq!(k.eval(0.5, 0.2), 1.0);
        assert_eq!(k.eval(0.75, 0.2), 1.0);
        assert_eq!(k.jump_size(0.5, 0.2), 1.0);
        assert_eq!(k.section_jump_times(0.8), vec![1.0]);
        assert_eq!(k.section_sup_abs(0.8), 2.0);
        assert_eq!(k.section_vp_jumps(0.8, 2.0), 4.0);
    }
}
