//! Finite control measures m on a one-dimensional mark space: sampling marks
//! with law m / m(S) and integrating functionals against m.
//!
//! Two domain shapes are supported, matching everything the stable examples
//! need: a finite atom set, and an interval carrying a (tabulated,
//! piecewise-linear) density. Measures are immutable after construction.

use std::path::Path;

use rand::Rng;

use crate::rng::RngStream;
use crate::{Error, Result};

const DEFAULT_QUADRATURE_NODES: usize = 2048;

#[derive(Debug, Clone)]
enum Domain {
    Atoms {
        marks: Vec<f64>,
        masses: Vec<f64>,
        /// cumulative masses, for inverse-CDF sampling
        cum: Vec<f64>,
    },
    /// Piecewise-linear density on [nodes[0], nodes[last]].
    Density {
        nodes: Vec<f64>,
        density: Vec<f64>,
        /// CDF at the nodes, by exact integration of the linear pieces.
        cdf: Vec<f64>,
        quadrature_nodes: usize,
    },
}

/// Finite measure on the mark space, with sampler and quadrature.
#[derive(Debug, Clone)]
pub struct ControlMeasure {
    domain: Domain,
    total_mass: f64,
}

impl ControlMeasure {
    /// Lebesgue measure on [a, b].
    pub fn lebesgue(a: f64, b: f64) -> Result<Self> {
        Self::tabulated_density(vec![a, b], vec![1.0, 1.0])
    }

    /// Lebesgue measure on [0, 1], the control measure of the standard
    /// symmetric stable Levy process.
    pub fn lebesgue_unit() -> Self {
        Self::lebesgue(0.0, 1.0).expect("unit interval is valid")
    }

    pub fn atoms(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("atom set is empty".into()));
        }
        let mut cum = Vec::with_capacity(atoms.len());
        let mut total = 0.0;
        for &(mark, mass) in &atoms {
            if !mass.is_finite() || mass <= 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "atom at {mark} has non-positive mass {mass}"
                )));
            }
            total += mass;
            cum.push(total);
        }
        Ok(Self {
            domain: Domain::Atoms {
                marks: atoms.iter().map(|a| a.0).collect(),
                masses: atoms.iter().map(|a| a.1).collect(),
                cum,
            },
            total_mass: total,
        })
    }

    /// Density tabulated at strictly increasing nodes, interpolated linearly
    /// between them.
    pub fn tabulated_density(nodes: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        Self::tabulated_density_with_nodes(nodes, density, DEFAULT_QUADRATURE_NODES)
    }

    pub fn tabulated_density_with_nodes(
        nodes: Vec<f64>,
        density: Vec<f64>,
        quadrature_nodes: usize,
    ) -> Result<Self> {
        if nodes.len() < 2 || nodes.len() != density.len() {
            return Err(Error::InvalidMeasure(
                "tabulated density needs matching node/value lists of length >= 2".into(),
            ));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidMeasure("density nodes must be strictly increasing".into()));
        }
        if density.iter().any(|&d| !d.is_finite() || d < 0.0) {
            return Err(Error::InvalidMeasure("density values must be finite and >= 0".into()));
        }
        if quadrature_nodes == 0 {
            return Err(Error::InvalidMeasure("quadrature node count must be positive".into()));
        }
        let mut cdf = vec![0.0];
        for i in 1..nodes.len() {
            let h = nodes[i] - nodes[i - 1];
            cdf.push(cdf[i - 1] + 0.5 * (density[i] + density[i - 1]) * h);
        }
        let total = *cdf.last().unwrap();
        if total <= 0.0 {
            return Err(Error::InvalidMeasure("density integrates to zero".into()));
        }
        Ok(Self {
            domain: Domain::Density { nodes, density, cdf, quadrature_nodes },
            total_mass: total,
        })
    }

    /// Load a two-column CSV of `node,density` rows. Lines starting with `#`
    /// and a non-numeric first line (header) are skipped.
    pub fn density_from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut nodes = Vec::new();
        let mut density = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (a, b) = (cols.next(), cols.next());
            match (a.and_then(|s| s.parse::<f64>().ok()), b.and_then(|s| s.parse::<f64>().ok())) {
                (Some(x), Some(d)) => {
                    nodes.push(x);
                    density.push(d);
                }
                _ if lineno == 0 => continue, // header row
                _ => {
                    return Err(Error::InvalidMeasure(format!(
                        "unparseable density row {}: {line:?}",
                        lineno + 1
                    )))
                }
            }
        }
        Self::tabulated_density(nodes, density)
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// One draw from the normalized law m / m(S), consuming `rng`.
    pub fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random::<f64>() * self.total_mass;
        match &self.domain {
            Domain::Atoms { marks, cum, .. } => {
                let idx = cum.partition_point(|&c| c <= u).min(marks.len() - 1);
                marks[idx]
            }
            Domain::Density { nodes, density, cdf, .. } => {
                let i = cdf.partition_point(|&c| c <= u).min(nodes.len() - 1).max(1) - 1;
                let tau = u - cdf[i];
                let h = nodes[i + 1] - nodes[i];
                let (d0, d1) = (density[i], density[i + 1]);
                let slope = (d1 - d0) / h;
                // invert tau = d0 s + slope s^2 / 2 on the linear piece
                let s = if slope.abs() * h < 1e-12 * (d0 + 1.0) {
                    if d0 > 0.0 {
                        tau / d0
                    } else {
                        0.0
                    }
                } else {
                    let disc = (d0 * d0 + 2.0 * slope * tau).max(0.0);
                    (disc.sqrt() - d0) / slope
                };
                (nodes[i] + s.clamp(0.0, h)).min(*nodes.last().unwrap())
            }
        }
    }

    /// One draw from m / m(S) at the start of `stream`.
    pub fn sample_mark(&self, stream: &RngStream) -> f64 {
        self.sample_marks(stream, 1)[0]
    }

    pub fn sample_marks(&self, stream: &RngStream, count: usize) -> Vec<f64> {
        let mut rng = stream.rng();
        (0..count).map(|_| self.draw(&mut rng)).collect()
    }

    /// Approximate `integral of g dm` with an error estimate.
    ///
    /// Atoms are summed exactly (estimate 0). Densities use the composite
    /// midpoint rule at the configured node count; the estimate is a
    /// Richardson-style comparison against the doubled node count.
    pub fn integrate<F: Fn(f64) -> f64>(&self, g: F) -> Result<(f64, f64)> {
        match &self.domain {
            Domain::Atoms { marks, masses, .. } => {
                let mut sum = 0.0;
                for (&s, &mass) in marks.iter().zip(masses) {
                    let v = g(s);
                    if !v.is_finite() {
                        return Err(Error::NonFinite(format!("integrand at atom {s}")));
                    }
                    sum += v * mass;
                }
                Ok((sum, 0.0))
            }
            Domain::Density { quadrature_nodes, .. } => {
                let coarse = self.midpoint(&g, *quadrature_nodes)?;
                let fine = self.midpoint(&g, 2 * *quadrature_nodes)?;
                let est = 2.0 * (fine - coarse).abs() + 1e-14 * (coarse.abs() + 1.0);
                Ok((coarse, est))
            }
        }
    }

    /// Integral value alone, for call sites that do not use the estimate.
    pub fn integral<F: Fn(f64) -> f64>(&self, g: F) -> Result<f64> {
        Ok(self.integrate(g)?.0)
    }

    fn midpoint<F: Fn(f64) -> f64>(&self, g: &F, n: usize) -> Result<f64> {
        let Domain::Density { nodes, density, .. } = &self.domain else { unreachable!() };
        let (a, b) = (nodes[0], *nodes.last().unwrap());
        let h = (b - a) / n as f64;
        let mut sum = 0.0;
        for i in 0..n {
            let x = a + (i as f64 + 0.5) * h;
            let v = g(x);
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("integrand at node {x}")));
            }
            sum += v * self.density_at(x, nodes, density);
        }
        Ok(sum * h)
    }

    fn density_at(&self, x: f64, nodes: &[f64], density: &[f64]) -> f64 {
        let i = nodes.partition_point(|&v| v <= x).min(nodes.len() - 1).max(1) - 1;
        let w = (x - nodes[i]) / (nodes[i + 1] - nodes[i]);
        density[i] + w * (density[i + 1] - density[i])
    }

    /// Interval hull of the support.
    pub fn support(&self) -> (f64, f64) {
        match &self.domain {
            Domain::Atoms { marks, .. } => {
                let lo = marks.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = marks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
            Domain::Density { nodes, .. } => (nodes[0], *nodes.last().unwrap()),
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self.domain, Domain::Atoms { .. })
    }
}
