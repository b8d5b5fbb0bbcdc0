//! Mode probabilities under stochastic caching.
//!
//! A cache placement of `N` users is one row of the `m^N x N` table of
//! permutations with repetition. The table is never materialized: rows
//! are decoded on demand from a mixed-radix index, and the two engines
//! below stream over them (or collapse them analytically).
//!
//! Rows are grouped into `m` blocks of `m^(N-1)` rows each; every row of
//! block `nu` has first entry `nu`, the content cached by the tagged
//! user. For a row `r` the classification of the tagged user's request
//! splits three ways:
//!
//! * self-hit, probability `rho_nu`;
//! * receive-hit, probability `sum of rho over distinct contents of r
//!   other than nu` (a neighbor holds the requested content);
//! * miss, the complement.
//!
//! Each branch is crossed with the independent demand event (someone else
//! requests `nu`, probability `1 - (1 - rho_nu)^(N-1)`), giving the six
//! modes. Note the receive-hit factor excludes the own-cache mass: the
//! plain "request hits any content of the row" event would re-count the
//! self-hit already attributed to SR/SR-HDTX and the six probabilities
//! would sum to `1 + sum_nu mu_nu rho_nu` instead of 1.

use rayon::prelude::*;

use crate::dist::{CachingDist, PopularityDist};
use crate::error::{Error, Result};
use crate::modes::{ModeProbabilities, Provenance};
use crate::Policy;

/// Hard limit on the number of users a permutation index can address.
pub const MAX_WIDTH: usize = 64;

/// Default budget of the exact enumeration engine (`m^N` rows).
pub const DEFAULT_PERMUTATION_CAP: u64 = 10_000_000;

/// `m^n` when it fits in a `u64`.
pub fn permutation_count(radix: usize, width: usize) -> Option<u64> {
    let total = (radix as u128).checked_pow(width as u32)?;
    u64::try_from(total).ok()
}

/// Index of one cache placement among the `m^N` permutations with
/// repetition, 1-based. The first user's content is the slowest-varying
/// digit, so rows `1..=m^(N-1)` form the block with first entry 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PermutationIndex {
    row: u64,
    radix: usize,
    width: usize,
}

impl PermutationIndex {
    pub fn new(row: u64, radix: usize, width: usize) -> Result<Self> {
        if radix == 0 || width == 0 {
            return Err(Error::invalid("permutation radix and width must be at least 1"));
        }
        if width > MAX_WIDTH {
            return Err(Error::invalid(format!(
                "permutation width {width} exceeds the supported maximum {MAX_WIDTH}"
            )));
        }
        let total = permutation_count(radix, width).ok_or_else(|| {
            Error::invalid(format!("permutation space {radix}^{width} is not addressable"))
        })?;
        if row == 0 || row > total {
            return Err(Error::invalid(format!(
                "row {row} out of 1..={total} for radix {radix}, width {width}"
            )));
        }
        Ok(Self { row, radix, width })
    }

    /// Inverse of [`decode`](Self::decode).
    pub fn encode(contents: &[usize], radix: usize) -> Result<Self> {
        if contents.is_empty() {
            return Err(Error::invalid("cannot encode an empty placement"));
        }
        let mut row: u64 = 0;
        for &c in contents {
            if c == 0 || c > radix {
                return Err(Error::invalid(format!(
                    "content index {c} out of 1..={radix}"
                )));
            }
            row = row
                .checked_mul(radix as u64)
                .and_then(|r| r.checked_add((c - 1) as u64))
                .ok_or_else(|| Error::invalid("placement does not fit in a 64-bit row index"))?;
        }
        Self::new(row + 1, radix, contents.len())
    }

    pub fn row(&self) -> u64 {
        self.row
    }

    pub fn radix(&self) -> usize {
        self.radix
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// The cache placement this row stands for: entry `k` is the content
    /// cached by user `k`, all 1-based.
    pub fn decode(&self) -> Vec<usize> {
        let mut digits = vec![1usize; self.width];
        let mut rest = self.row - 1;
        for slot in digits.iter_mut().rev() {
            *slot = (rest % self.radix as u64) as usize + 1;
            rest /= self.radix as u64;
        }
        digits
    }

    pub fn block(&self) -> BlockAddress {
        let rows_per_block = permutation_count(self.radix, self.width - 1)
            .expect("sub-block count fits whenever the full count does");
        BlockAddress {
            content: ((self.row - 1) / rows_per_block) as usize + 1,
            row_within_block: (self.row - 1) % rows_per_block + 1,
        }
    }
}

/// Decoded contents of row `index`; see [`PermutationIndex::decode`].
pub fn decode_permutation(index: &PermutationIndex) -> Vec<usize> {
    index.decode()
}

/// Position of a row inside the block structure: block `content` holds
/// every placement in which the tagged user caches that content.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockAddress {
    /// Content cached by the tagged (first) user, `1..=m`.
    pub content: usize,
    /// Row inside the block, `1..=m^(N-1)`.
    pub row_within_block: u64,
}

impl BlockAddress {
    /// Global permutation row of this block position.
    pub fn to_global(&self, radix: usize, width: usize) -> Result<PermutationIndex> {
        if self.content == 0 || self.content > radix {
            return Err(Error::invalid(format!(
                "block content {} out of 1..={radix}",
                self.content
            )));
        }
        let rows_per_block = permutation_count(radix, width.saturating_sub(1))
            .ok_or_else(|| Error::invalid("permutation space is not addressable"))?;
        if self.row_within_block == 0 || self.row_within_block > rows_per_block {
            return Err(Error::invalid(format!(
                "row {} out of 1..={rows_per_block} within a block",
                self.row_within_block
            )));
        }
        let row = (self.content as u64 - 1) * rows_per_block + self.row_within_block;
        PermutationIndex::new(row, radix, width)
    }
}

/// Probability that a request drawn from `pop` misses every content of
/// the placement `row`: one minus the popularity mass of the distinct
/// contents present.
pub fn miss_probability(row: &[usize], pop: &PopularityDist) -> f64 {
    let mut covered = 0.0;
    for (i, &c) in row.iter().enumerate() {
        if row[..i].contains(&c) {
            continue;
        }
        covered += pop.mass(c);
    }
    (1.0 - covered).clamp(0.0, 1.0)
}

/// Probability that the non-tagged users cache exactly the contents in
/// entries `2..N` of `row`: the product of their caching masses (an empty
/// product, 1, for a single user).
pub fn rest_cache_probability(row: &[usize], cache: &CachingDist) -> f64 {
    row[1..].iter().map(|&c| cache.mass(c)).product()
}

/// Probability that at least one of the other `N - 1` users requests
/// `content`.
pub fn demand_probability(content: usize, pop: &PopularityDist, num_users: usize) -> f64 {
    assert!(num_users >= 1, "need at least one user");
    1.0 - (1.0 - pop.mass(content)).powi(num_users as i32 - 1)
}

/// The four per-row event probabilities the exact engine multiplies
/// together, exposed for inspection and table-driven tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventProbabilities {
    /// Request misses every content of the row.
    pub p_miss: f64,
    /// Tagged user caches the row's first content.
    pub p_own_cache: f64,
    /// Remaining users cache the row's remaining contents.
    pub p_rest_cache: f64,
    /// Someone else demands the tagged user's content.
    pub p_demand: f64,
}

impl EventProbabilities {
    /// Evaluates the events for a full placement row, whose first entry
    /// is the tagged user's content; `row.len()` is the user count.
    pub fn for_row(row: &[usize], pop: &PopularityDist, cache: &CachingDist) -> Self {
        assert!(!row.is_empty(), "placement row cannot be empty");
        EventProbabilities {
            p_miss: miss_probability(row, pop),
            p_own_cache: cache.mass(row[0]),
            p_rest_cache: rest_cache_probability(row, cache),
            p_demand: demand_probability(row[0], pop, row.len()),
        }
    }
}

fn check_dists(pop: &PopularityDist, cache: &CachingDist, num_users: usize) -> Result<()> {
    if pop.library_size() != cache.library_size() {
        return Err(Error::invalid(format!(
            "popularity and caching distributions disagree on the library size ({} vs {})",
            pop.library_size(),
            cache.library_size()
        )));
    }
    if num_users == 0 {
        return Err(Error::invalid("number of users must be at least 1"));
    }
    Ok(())
}

/// Exact mode probabilities by streaming over all `m^N` placements,
/// bounded by [`DEFAULT_PERMUTATION_CAP`].
pub fn mode_probabilities_exact(
    pop: &PopularityDist,
    cache: &CachingDist,
    num_users: usize,
) -> Result<ModeProbabilities> {
    mode_probabilities_exact_with_cap(pop, cache, num_users, DEFAULT_PERMUTATION_CAP)
}

/// Exact engine with an explicit permutation budget.
///
/// Blocks are processed independently (and in parallel); within a block
/// the rows are visited in permutation order, and block results are
/// combined in ascending content order, so the output does not depend on
/// the number of worker threads.
pub fn mode_probabilities_exact_with_cap(
    pop: &PopularityDist,
    cache: &CachingDist,
    num_users: usize,
    cap: u64,
) -> Result<ModeProbabilities> {
    check_dists(pop, cache, num_users)?;
    if num_users > MAX_WIDTH {
        return Err(Error::invalid(format!(
            "exact enumeration supports at most {MAX_WIDTH} users, got {num_users}"
        )));
    }
    let m = pop.library_size();
    match permutation_count(m, num_users) {
        Some(total) if total <= cap => {}
        _ => {
            return Err(Error::capacity(format!(
                "{m}^{num_users} placements exceed the budget of {cap}; \
                 use mode_probabilities_fast instead"
            )));
        }
    }

    let blocks: Vec<[f64; 6]> = (1..=m)
        .into_par_iter()
        .map(|nu| block_sums(nu, pop, cache, num_users))
        .collect();

    // Ascending-content combination keeps the reduction order fixed.
    let mut probs = [0.0f64; 6];
    for block in &blocks {
        for (acc, value) in probs.iter_mut().zip(block) {
            *acc += value;
        }
    }
    let [p_sr, p_sr_hdtx, p_fdtr, p_hdtx, p_hdrx, p_ho] = probs;
    Ok(ModeProbabilities {
        p_sr,
        p_sr_hdtx,
        p_fdtr,
        p_hdtx,
        p_hdrx,
        p_ho,
        split: None,
        policy: Policy::Stochastic,
        provenance: Provenance::ExactEnumeration,
    })
}

/// Sums the six mode contributions of block `nu` over its `m^(N-1)` rows.
fn block_sums(nu: usize, pop: &PopularityDist, cache: &CachingDist, num_users: usize) -> [f64; 6] {
    let m = pop.library_size();
    let rho_nu = pop.mass(nu);
    let mu_nu = cache.mass(nu);
    let p_demand = demand_probability(nu, pop, num_users);
    let p_idle = 1.0 - p_demand;

    // Expectations over the rest of the placement (columns 2..N), each
    // row weighted by its rest-cache probability:
    //   weight_total  -> sums to 1 over the block,
    //   receive_total -> weight * (distinct popularity mass besides nu),
    //   miss_total    -> weight * (mass not covered by the row).
    let mut weight_total = 0.0;
    let mut receive_total = 0.0;
    let mut miss_total = 0.0;

    let rest_len = num_users - 1;
    let mut rest = vec![1usize; rest_len];
    // Epoch-stamped scratch marks the contents already counted in the
    // current row without clearing between rows.
    let mut seen = vec![0u64; m + 1];
    let mut epoch = 0u64;
    loop {
        epoch += 1;
        seen[nu] = epoch;
        let mut weight = 1.0;
        let mut receive = 0.0;
        for &c in &rest {
            weight *= cache.mass(c);
            if seen[c] != epoch {
                seen[c] = epoch;
                receive += pop.mass(c);
            }
        }
        let miss = ((1.0 - rho_nu) - receive).max(0.0);
        weight_total += weight;
        receive_total += weight * receive;
        miss_total += weight * miss;

        // Mixed-radix odometer over the rest digits, last digit fastest.
        let mut pos = rest_len;
        loop {
            if pos == 0 {
                return [
                    mu_nu * rho_nu * p_idle * weight_total,
                    mu_nu * rho_nu * p_demand * weight_total,
                    mu_nu * p_demand * receive_total,
                    mu_nu * p_demand * miss_total,
                    mu_nu * p_idle * receive_total,
                    mu_nu * p_idle * miss_total,
                ];
            }
            pos -= 1;
            if rest[pos] < m {
                rest[pos] += 1;
                break;
            }
            rest[pos] = 1;
        }
    }
}

/// Mode probabilities in `O(m)` using the independence of the other
/// users' caches: the chance that content `x` is requested and cached
/// nowhere else is `rho_x (1 - mu_x)^(N-1)`, and everything else follows
/// from the same marginalization.
pub fn mode_probabilities_fast(
    pop: &PopularityDist,
    cache: &CachingDist,
    num_users: usize,
) -> Result<ModeProbabilities> {
    check_dists(pop, cache, num_users)?;
    let n = num_users as i32;
    let rho = pop.masses();
    let mu = cache.masses();

    let uncached_sum: f64 = rho
        .iter()
        .zip(mu)
        .map(|(&r, &u)| r * (1.0 - u).powi(n - 1))
        .sum();

    let mut probs = [0.0f64; 6];
    for (&rho_nu, &mu_nu) in rho.iter().zip(mu) {
        let p_demand = 1.0 - (1.0 - rho_nu).powi(n - 1);
        let p_idle = 1.0 - p_demand;
        // Miss: the request is for some other content held by nobody else.
        let p_miss = (uncached_sum - rho_nu * (1.0 - mu_nu).powi(n - 1)).max(0.0);
        // Receive: some other content, held by at least one neighbor.
        let p_receive = ((1.0 - rho_nu) - p_miss).max(0.0);
        probs[0] += mu_nu * rho_nu * p_idle;
        probs[1] += mu_nu * rho_nu * p_demand;
        probs[2] += mu_nu * p_demand * p_receive;
        probs[3] += mu_nu * p_demand * p_miss;
        probs[4] += mu_nu * p_idle * p_receive;
        probs[5] += mu_nu * p_idle * p_miss;
    }
    let [p_sr, p_sr_hdtx, p_fdtr, p_hdtx, p_hdrx, p_ho] = probs;
    Ok(ModeProbabilities {
        p_sr,
        p_sr_hdtx,
        p_fdtr,
        p_hdtx,
        p_hdrx,
        p_ho,
        split: None,
        policy: Policy::Stochastic,
        provenance: Provenance::FastProductForm,
    })
}
