//! Closed-form mode probabilities under deterministic caching.
//!
//! With user `k` holding content `k`, the chance that a random request
//! hits some cached content is `P_hit = sum_{k=1..N} rho_k`. For the user
//! holding content `k`, the demand factor `1 - (1 - rho_k)^(N-1)` is the
//! probability that at least one of the other `N - 1` users requests `k`.
//! The per-mode probabilities average these factors over a uniformly
//! chosen user, which collapses to `1/N` times a sum over `k`.

use crate::dist::PopularityDist;
use crate::error::{Error, Result};
use crate::modes::{FdSplit, ModeProbabilities, Provenance};
use crate::Policy;

/// Probability that an arbitrary request falls inside the cached subset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitProbability {
    value: f64,
}

impl HitProbability {
    pub fn value(&self) -> f64 {
        self.value
    }
}

fn check_users(pop: &PopularityDist, num_users: usize) -> Result<()> {
    if num_users == 0 {
        return Err(Error::invalid("number of users must be at least 1"));
    }
    if num_users > pop.library_size() {
        return Err(Error::policy(format!(
            "deterministic caching needs N <= m, got N = {num_users}, m = {}",
            pop.library_size()
        )));
    }
    Ok(())
}

/// `P_hit = sum_{k=1..N} rho_k`; equals 1 exactly when `N = m`.
pub fn hit_probability(pop: &PopularityDist, num_users: usize) -> Result<HitProbability> {
    check_users(pop, num_users)?;
    let value = pop.masses()[..num_users].iter().sum();
    Ok(HitProbability { value })
}

/// All six mode probabilities, including the BFD/TNFD split.
pub fn mode_probabilities(pop: &PopularityDist, num_users: usize) -> Result<ModeProbabilities> {
    check_users(pop, num_users)?;
    let n = num_users;
    let p_hit = hit_probability(pop, n)?.value();
    let p_miss = (1.0 - p_hit).max(0.0);

    let mut p_sr = 0.0;
    let mut p_sr_hdtx = 0.0;
    let mut p_fdtr = 0.0;
    let mut p_hdtx = 0.0;
    let mut p_hdrx = 0.0;
    let mut p_ho = 0.0;
    for &rho in &pop.masses()[..n] {
        let idle = (1.0 - rho).powi(n as i32 - 1); // nobody else requests this content
        let demand = 1.0 - idle;
        let receive = (p_hit - rho).max(0.0); // hit excluding the own cache
        p_sr += rho * idle;
        p_sr_hdtx += rho * demand;
        p_fdtr += receive * demand;
        p_hdrx += receive * idle;
        p_hdtx += p_miss * demand;
        p_ho += p_miss * idle;
    }
    let inv_n = 1.0 / n as f64;
    let split = bfd_tnfd_split(pop, n)?;
    Ok(ModeProbabilities {
        p_sr: p_sr * inv_n,
        p_sr_hdtx: p_sr_hdtx * inv_n,
        p_fdtr: p_fdtr * inv_n,
        p_hdtx: p_hdtx * inv_n,
        p_hdrx: p_hdrx * inv_n,
        p_ho: p_ho * inv_n,
        split: Some(split),
        policy: Policy::Deterministic,
        provenance: Provenance::ClosedForm,
    })
}

/// FDTR split: BFD pairs up with the user whose content it requests, TNFD
/// is served by a third node.
pub fn bfd_tnfd_split(pop: &PopularityDist, num_users: usize) -> Result<FdSplit> {
    check_users(pop, num_users)?;
    let n = num_users;
    let p_hit = hit_probability(pop, n)?.value();
    let mut p_bfd = 0.0;
    let mut p_tnfd = 0.0;
    for &rho in &pop.masses()[..n] {
        let receive = (p_hit - rho).max(0.0);
        p_bfd += receive * rho;
        p_tnfd += receive * (1.0 - rho - (1.0 - rho).powi(n as i32 - 1)).max(0.0);
    }
    let inv_n = 1.0 / n as f64;
    Ok(FdSplit {
        p_bfd: p_bfd * inv_n,
        p_tnfd: p_tnfd * inv_n,
    })
}
