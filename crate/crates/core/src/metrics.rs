//! Aggregate mode metrics and the binomial PMFs of per-mode node counts.
//!
//! Treating the `N` users' modes as independent Bernoulli trials with
//! success probability `p`, the number of nodes in a mode is Binomial
//! `(N, p)`. Within one realized network the modes of different users are
//! in fact weakly dependent (one BFD partner implies another), so the
//! binomial PMF is an approximation of the simulated count distribution;
//! the two are compared by total-variation distance rather than equated.

use crate::error::{Error, Result};
use crate::modes::ModeProbabilities;

/// Coarse operating-mode probabilities: half/full-duplex and
/// transmit/receive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateMetrics {
    pub p_hd: f64,
    pub p_fd: f64,
    pub p_tx: f64,
    pub p_rx: f64,
}

/// Linear combinations of the six mode probabilities.
pub fn aggregate_metrics(modes: &ModeProbabilities) -> AggregateMetrics {
    AggregateMetrics {
        p_hd: modes.p_sr_hdtx + modes.p_hdrx + modes.p_hdtx,
        p_fd: modes.p_fdtr,
        p_tx: modes.p_sr_hdtx + modes.p_hdtx + modes.p_fdtr,
        p_rx: modes.p_fdtr + modes.p_hdrx,
    }
}

/// Largest `N` for which `C(N, n)` is computed in exact integer
/// arithmetic; beyond it the PMF goes through log space.
const EXACT_BINOMIAL_LIMIT: u64 = 60;

/// `C(N, n) p^n (1-p)^(N-n)`.
///
/// Exact integer binomial coefficients up to `N = 60` keep the small
/// cases bit-stable; larger `N` uses a log-space evaluation that avoids
/// both overflow and the cancellation of large log-factorials.
pub fn binomial_pmf(num_users: u64, count: u64, prob: f64) -> Result<f64> {
    if count > num_users {
        return Err(Error::invalid(format!(
            "count {count} exceeds the number of users {num_users}"
        )));
    }
    if !(0.0..=1.0).contains(&prob) {
        return Err(Error::invalid(format!("probability {prob} not in [0, 1]")));
    }
    if num_users > i32::MAX as u64 {
        return Err(Error::invalid("number of users exceeds supported range"));
    }
    let (n, k) = (num_users, count);
    // Degenerate probabilities first: 0^0 = 1 by the counting convention.
    if prob == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    if prob == 1.0 {
        return Ok(if k == n { 1.0 } else { 0.0 });
    }
    if n <= EXACT_BINOMIAL_LIMIT {
        let coeff = binomial_coefficient(n, k) as f64;
        return Ok(coeff * prob.powi(k as i32) * (1.0 - prob).powi((n - k) as i32));
    }
    if k == 0 {
        return Ok(((n as f64) * (1.0 - prob).ln()).exp());
    }
    if k == n {
        return Ok(((n as f64) * prob.ln()).exp());
    }
    Ok(saddle_point_pmf(n as f64, k as f64, prob))
}

/// Exact `C(n, k)`; every intermediate value stays integral.
fn binomial_coefficient(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut coeff: u128 = 1;
    for i in 1..=k {
        coeff = coeff * (n - k + i) as u128 / i as u128;
    }
    coeff
}

/// Binomial PMF through the saddle-point decomposition
/// `exp(-stirlerr(n) + stirlerr(k) + stirlerr(n-k) - d(k; n p) - d(n-k; n q))
///  * sqrt(n / (2 pi k (n-k)))`,
/// which never forms large intermediate logarithms, so the relative error
/// stays near machine precision even for `n` in the thousands.
fn saddle_point_pmf(n: f64, k: f64, p: f64) -> f64 {
    let q = 1.0 - p;
    let lc = stirling_error(n)
        - stirling_error(k)
        - stirling_error(n - k)
        - binomial_deviance(k, n * p)
        - binomial_deviance(n - k, n * q);
    let lf = (2.0 * std::f64::consts::PI * k * (n - k) / n).ln();
    (lc - 0.5 * lf).exp()
}

/// `ln(n!) - ln(sqrt(2 pi n) (n/e)^n)`, the error of Stirling's formula.
fn stirling_error(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        // Small arguments via the exact factorial (integral in f64 up to
        // 18!).
        let nf: f64 = (2..=(n as u64)).map(|i| i as f64).product();
        return nf.ln() - (n + 0.5) * n.ln() + n - 0.5 * (2.0 * std::f64::consts::PI).ln();
    }
    let nn = n * n;
    if n <= 35.0 {
        return (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n;
    }
    if n <= 80.0 {
        return (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n;
    }
    if n <= 500.0 {
        return (S0 - (S1 - S2 / nn) / nn) / n;
    }
    (S0 - S1 / nn) / n
}

/// Deviance term `x ln(x / np) + np - x`, evaluated as a series when `x`
/// is close to `np` to dodge the cancellation.
fn binomial_deviance(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut term = 2.0 * x * v;
        let v2 = v * v;
        let mut j = 1.0;
        loop {
            term *= v2;
            let s_next = s + term / (2.0 * j + 1.0);
            if s_next == s {
                return s_next;
            }
            s = s_next;
            j += 1.0;
        }
    }
    x * (x / np).ln() + np - x
}

/// Discrete distribution of a node count over support `0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    masses: Vec<f64>,
    mean: f64,
    variance: f64,
}

impl Pmf {
    /// Wraps a mass vector over `0..=N` (so `masses.len() = N + 1`);
    /// masses must be non-negative and sum to 1 within 1e-12.
    pub fn from_masses(masses: Vec<f64>) -> Result<Pmf> {
        if masses.is_empty() {
            return Err(Error::invalid("a PMF needs at least one support point"));
        }
        if masses.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::invalid("PMF masses must be finite and non-negative"));
        }
        let sum: f64 = masses.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "PMF masses sum to {sum}, expected 1 within 1e-12"
            )));
        }
        let mean: f64 = masses.iter().enumerate().map(|(k, &p)| k as f64 * p).sum();
        let variance: f64 = masses
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                let d = k as f64 - mean;
                d * d * p
            })
            .sum();
        Ok(Pmf {
            masses,
            mean,
            variance,
        })
    }

    /// Number of users `N`, i.e. the largest support point.
    pub fn num_users(&self) -> usize {
        self.masses.len() - 1
    }

    pub fn mass(&self, count: usize) -> f64 {
        self.masses.get(count).copied().unwrap_or(0.0)
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Total-variation distance to another PMF: half the L1 distance of
    /// the mass vectors (missing support counts as zero mass).
    pub fn tv_distance(&self, other: &Pmf) -> f64 {
        let len = self.masses.len().max(other.masses.len());
        let mut acc = 0.0;
        for k in 0..len {
            acc += (self.mass(k) - other.mass(k)).abs();
        }
        0.5 * acc
    }
}

/// Binomial PMF of the node count of a mode with probability `prob`
/// among `num_users` users.
pub fn mode_pmf(num_users: u64, prob: f64) -> Result<Pmf> {
    if num_users == 0 {
        return Err(Error::invalid("number of users must be at least 1"));
    }
    let masses: Result<Vec<f64>> = (0..=num_users)
        .map(|k| binomial_pmf(num_users, k, prob))
        .collect();
    Pmf::from_masses(masses?)
}
