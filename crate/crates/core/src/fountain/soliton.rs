//! Robust soliton degree distribution.

use super::FountainError;

/// Default soliton constant.
pub const DEFAULT_C: f64 = 0.03;
/// Default decoder failure parameter.
pub const DEFAULT_DELTA: f64 = 0.5;

/// Degree distribution over `1..=k`, stored as an inverse-CDF table.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    k: usize,
    c: f64,
    delta: f64,
    cdf: Vec<f64>,
}

impl DegreeDistribution {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Cumulative probability table; entry `d - 1` is `P(degree <= d)`.
    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    /// Smallest degree whose cumulative probability reaches `u`.
    pub(crate) fn sample_degree(&self, u: f64) -> usize {
        let idx = self.cdf.partition_point(|&p| p < u);
        idx.min(self.k - 1) + 1
    }
}

/// Builds the robust soliton distribution for `k` input symbols.
///
/// The unnormalized weights are the ideal soliton `rho(1) = 1/k`,
/// `rho(d) = 1/(d(d-1))` for `d >= 2`, plus the spike/tail term `tau`
/// with `R = c * ln(k/delta) * sqrt(k)`:
/// `tau(d) = R/(dk)` for `d < floor(k/R)`, `tau(floor(k/R)) = R * ln(R/delta) / k`,
/// zero beyond. Weights are normalized so the CDF ends at exactly 1.
pub fn make_distribution(k: usize, c: f64, delta: f64) -> Result<DegreeDistribution, FountainError> {
    if k < 1 {
        return Err(FountainError::InvalidParameter(
            "k must be at least 1".into(),
        ));
    }
    if c <= 0.0 || !c.is_finite() {
        return Err(FountainError::InvalidParameter(format!(
            "soliton constant c must be positive and finite, got {c}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(FountainError::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if k == 1 {
        return Ok(DegreeDistribution {
            k,
            c,
            delta,
            cdf: vec![1.0],
        });
    }

    let kf = k as f64;
    let mut weights = vec![0.0f64; k];
    weights[0] = 1.0 / kf;
    for d in 2..=k {
        weights[d - 1] = 1.0 / (d as f64 * (d as f64 - 1.0));
    }

    // k/delta > 1 whenever k >= 1 and delta < 1, so R is always positive.
    let r = c * (kf / delta).ln() * kf.sqrt();
    let spike = (kf / r).floor() as usize;
    if spike >= 1 {
        // Degrees past k do not exist; a spike beyond k collapses onto k.
        let spike = spike.min(k);
        for d in 1..spike {
            weights[d - 1] += r / (d as f64 * kf);
        }
        let tail = r * (r / delta).ln() / kf;
        if tail > 0.0 {
            weights[spike - 1] += tail;
        }
    }

    let total: f64 = weights.iter().sum();
    let mut cdf = Vec::with_capacity(k);
    let mut acc = 0.0;
    for w in &weights {
        acc += w / total;
        cdf.push(acc);
    }
    // Pin the final entry so inverse-CDF lookups cannot fall off the table.
    cdf[k - 1] = 1.0;

    Ok(DegreeDistribution { k, c, delta, cdf })
}
