//! Zipf-type popularity and caching distributions, the network
//! configuration, and inverse-CDF sampling.
//!
//! Content indices are 1-based everywhere in the public API: content `k`
//! is the `k`-th most popular item of a library of size `m`. Internal
//! vectors are 0-based but that never leaks past a function boundary.

use rand::Rng;

use crate::error::{Error, Result};

/// Caching policy indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    /// User `k` caches content `k`; no duplication, requires `N <= m`.
    Deterministic,
    /// Every user caches one content drawn i.i.d. from the caching
    /// distribution; caches may overlap.
    Stochastic,
}

impl Policy {
    pub fn as_str(self) -> &'static str {
        match self {
            Policy::Deterministic => "deterministic",
            Policy::Stochastic => "stochastic",
        }
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "deterministic" | "det" | "d" => Ok(Policy::Deterministic),
            "stochastic" | "sto" | "s" => Ok(Policy::Stochastic),
            other => Err(Error::invalid(format!("unknown policy `{other}`"))),
        }
    }
}

/// Zipf probability vector: entry `k` (1-based) is
/// `k^-gamma / sum_{j=1..m} j^-gamma`.
///
/// The normalization constant is accumulated by direct summation; with
/// `gamma = 0` every entry is exactly `1/m`.
pub fn zipf_pmf(size: usize, skew: f64) -> Result<Vec<f64>> {
    if size == 0 {
        return Err(Error::invalid("library size must be at least 1"));
    }
    if !skew.is_finite() || skew < 0.0 {
        return Err(Error::invalid(format!(
            "skew exponent must be finite and non-negative, got {skew}"
        )));
    }
    let mut masses: Vec<f64> = (1..=size).map(|k| (k as f64).powf(-skew)).collect();
    let norm: f64 = masses.iter().sum();
    for mass in &mut masses {
        *mass /= norm;
    }
    Ok(masses)
}

macro_rules! zipf_dist {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            masses: Vec<f64>,
            skew: f64,
        }

        impl $name {
            pub fn new(library_size: usize, skew: f64) -> Result<Self> {
                Ok(Self {
                    masses: zipf_pmf(library_size, skew)?,
                    skew,
                })
            }

            /// Probability mass of content `k`, 1-based.
            pub fn mass(&self, k: usize) -> f64 {
                assert!(
                    k >= 1 && k <= self.masses.len(),
                    "content index {k} out of 1..={}",
                    self.masses.len()
                );
                self.masses[k - 1]
            }

            /// All masses; slot `k - 1` holds the mass of content `k`.
            pub fn masses(&self) -> &[f64] {
                &self.masses
            }

            pub fn library_size(&self) -> usize {
                self.masses.len()
            }

            pub fn skew(&self) -> f64 {
                self.skew
            }
        }
    };
}

zipf_dist! {
    /// Popularity distribution of requests (skew exponent `gamma_r`).
    PopularityDist
}

zipf_dist! {
    /// Caching distribution of stochastic placement (skew exponent
    /// `gamma_c`).
    CachingDist
}

/// Network parameters: `N` users, library size `m`, the two skew
/// exponents, and the caching policy.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    num_users: usize,
    library_size: usize,
    gamma_r: f64,
    gamma_c: f64,
    policy: Policy,
}

impl NetworkConfig {
    /// `gamma_c` is ignored under the deterministic policy (pass 0.0 by
    /// convention). Deterministic placement requires `N <= m`.
    pub fn new(
        policy: Policy,
        num_users: usize,
        library_size: usize,
        gamma_r: f64,
        gamma_c: f64,
    ) -> Result<Self> {
        if num_users == 0 {
            return Err(Error::invalid("number of users must be at least 1"));
        }
        if library_size == 0 {
            return Err(Error::invalid("library size must be at least 1"));
        }
        for (name, gamma) in [("gamma_r", gamma_r), ("gamma_c", gamma_c)] {
            if !gamma.is_finite() || gamma < 0.0 {
                return Err(Error::invalid(format!(
                    "{name} must be finite and non-negative, got {gamma}"
                )));
            }
        }
        if policy == Policy::Deterministic && num_users > library_size {
            return Err(Error::policy(format!(
                "deterministic caching needs N <= m, got N = {num_users}, m = {library_size}"
            )));
        }
        Ok(Self {
            num_users,
            library_size,
            gamma_r,
            gamma_c,
            policy,
        })
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn library_size(&self) -> usize {
        self.library_size
    }

    pub fn gamma_r(&self) -> f64 {
        self.gamma_r
    }

    pub fn gamma_c(&self) -> f64 {
        self.gamma_c
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    /// Same parameters with a different user count.
    pub fn with_num_users(&self, num_users: usize) -> Result<Self> {
        Self::new(
            self.policy,
            num_users,
            self.library_size,
            self.gamma_r,
            self.gamma_c,
        )
    }

    /// Same parameters with a different library size.
    pub fn with_library_size(&self, library_size: usize) -> Result<Self> {
        Self::new(
            self.policy,
            self.num_users,
            library_size,
            self.gamma_r,
            self.gamma_c,
        )
    }

    pub fn with_gamma_r(&self, gamma_r: f64) -> Result<Self> {
        Self::new(
            self.policy,
            self.num_users,
            self.library_size,
            gamma_r,
            self.gamma_c,
        )
    }

    pub fn with_gamma_c(&self, gamma_c: f64) -> Result<Self> {
        Self::new(
            self.policy,
            self.num_users,
            self.library_size,
            self.gamma_r,
            gamma_c,
        )
    }

    pub fn with_policy(&self, policy: Policy) -> Result<Self> {
        Self::new(
            policy,
            self.num_users,
            self.library_size,
            self.gamma_r,
            self.gamma_c,
        )
    }
}

/// Popularity distribution of `config` (library size, `gamma_r`).
pub fn popularity(config: &NetworkConfig) -> Result<PopularityDist> {
    PopularityDist::new(config.library_size(), config.gamma_r())
}

/// Caching distribution of `config` (library size, `gamma_c`).
pub fn caching_dist(config: &NetworkConfig) -> Result<CachingDist> {
    CachingDist::new(config.library_size(), config.gamma_c())
}

/// Inverse-CDF sampler over 1-based content indices.
///
/// Precomputes the cumulative vector once; each draw is one uniform
/// variate plus a binary search.
#[derive(Debug, Clone)]
pub struct Sampler {
    cumulative: Vec<f64>,
}

impl Sampler {
    /// `masses` must be non-empty, non-negative, and sum to 1 within 1e-9.
    pub fn new(masses: &[f64]) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::invalid("cannot sample from an empty distribution"));
        }
        if masses.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::invalid("masses must be finite and non-negative"));
        }
        let mut cumulative = Vec::with_capacity(masses.len());
        let mut acc = 0.0;
        for &p in masses {
            acc += p;
            cumulative.push(acc);
        }
        if (acc - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "masses must sum to 1 within 1e-9, got {acc}"
            )));
        }
        Ok(Self { cumulative })
    }

    /// Draw one content index in `1..=m`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        // First index whose cumulative mass exceeds u. Zero-mass entries
        // can never be selected because their cumulative value equals the
        // previous one.
        let idx = self.cumulative.partition_point(|&c| c <= u);
        idx.min(self.cumulative.len() - 1) + 1
    }
}

/// One draw from `dist` (1-based index).
///
/// Builds a throwaway [`Sampler`]; hot loops should construct the sampler
/// once and reuse it.
pub fn sample_index<R: Rng + ?Sized>(dist: &[f64], rng: &mut R) -> Result<usize> {
    Ok(Sampler::new(dist)?.sample(rng))
}
