//! Empirical distribution machinery used by the verification suites.

/// Sample stored in ascending order.
#[derive(Debug, Clone)]
pub struct EmpiricalSample {
    sorted: Vec<f64>,
}

impl EmpiricalSample {
    pub fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| a.partial_cmp(b).expect("non-finite sample value"));
        Self { sorted: values }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// Right-continuous empirical CDF.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// Quantiles by linear interpolation of order statistics; p = 0 and
    /// p = 1 give the minimum and maximum.
    pub fn quantiles(&self, probs: &[f64]) -> Vec<f64> {
        assert!(!self.sorted.is_empty(), "quantiles of an empty sample");
        let n = self.sorted.len();
        probs
            .iter()
            .map(|&p| {
                let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
                let lo = h.floor() as usize;
                let hi = (lo + 1).min(n - 1);
                self.sorted[lo] + (h - lo as f64) * (self.sorted[hi] - self.sorted[lo])
            })
            .collect()
    }
}

/// One-sample Kolmogorov-Smirnov statistic against a CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &EmpiricalSample, cdf: F) -> f64 {
    let n = sample.len() as f64;
    let mut sup = 0.0f64;
    for (i, &x) in sample.values().iter().enumerate() {
        let f = cdf(x);
        sup = sup.max(((i + 1) as f64 / n - f).abs()).max((i as f64 / n - f).abs());
    }
    sup
}

/// Two-sample Kolmogorov-Smirnov statistic: sup |F_a - F_b| over the pooled
/// sample points.
pub fn ks_two_sample(a: &EmpiricalSample, b: &EmpiricalSample) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "KS of an empty sample");
    let (xa, xb) = (a.values(), b.values());
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup = 0.0f64;
    while i < xa.len() || j < xb.len() {
        let x = match (xa.get(i), xb.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => break,
        };
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    sup
}
