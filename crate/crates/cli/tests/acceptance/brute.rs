//! Independent brute-force oracle: joint enumeration of every cache
//! placement and every request vector, classifying each user straight
//! from the mode definitions. Shares no code with the engines it checks.

use cachemodes_core::dist::{CachingDist, PopularityDist};
use cachemodes_core::modes::{FdSplit, ModeProbabilities, Provenance};
use cachemodes_core::Policy;

/// Mode order: SR, SR-HDTX, FDTR, HDTX, HDRX, HO.
pub fn enumerate_modes(
    pop: &PopularityDist,
    cache: &CachingDist,
    num_users: usize,
) -> ModeProbabilities {
    let m = pop.library_size();
    let n = num_users;
    let mut probs = [0.0f64; 6];
    let mut split = [0.0f64; 2];

    let mut cached = vec![1usize; n];
    loop {
        let cache_weight: f64 = cached.iter().map(|&c| cache.mass(c)).product();
        let mut requested = vec![1usize; n];
        loop {
            let request_weight: f64 = requested.iter().map(|&c| pop.mass(c)).product();
            let weight = cache_weight * request_weight / n as f64;
            for user in 0..n {
                let own = cached[user];
                let want = requested[user];
                let self_hit = own == want;
                let demand = (0..n).any(|t| t != user && requested[t] == own);
                let receive = (0..n).any(|t| t != user && cached[t] == want);
                let mutual =
                    (0..n).any(|t| t != user && cached[t] == want && requested[t] == own);
                let slot = match (self_hit, receive, demand) {
                    (true, _, false) => 0,
                    (true, _, true) => 1,
                    (false, true, true) => 2,
                    (false, false, true) => 3,
                    (false, true, false) => 4,
                    (false, false, false) => 5,
                };
                probs[slot] += weight;
                if slot == 2 {
                    split[if mutual { 0 } else { 1 }] += weight;
                }
            }
            if !advance(&mut requested, m) {
                break;
            }
        }
        if !advance(&mut cached, m) {
            break;
        }
    }

    ModeProbabilities {
        p_sr: probs[0],
        p_sr_hdtx: probs[1],
        p_fdtr: probs[2],
        p_hdtx: probs[3],
        p_hdrx: probs[4],
        p_ho: probs[5],
        split: Some(FdSplit {
            p_bfd: split[0],
            p_tnfd: split[1],
        }),
        policy: Policy::Stochastic,
        provenance: Provenance::ExactEnumeration,
    }
}

/// Identity placement (user k holds content k), all request vectors.
pub fn enumerate_modes_deterministic(pop: &PopularityDist, num_users: usize) -> ModeProbabilities {
    let m = pop.library_size();
    let n = num_users;
    let cached: Vec<usize> = (1..=n).collect();
    let mut probs = [0.0f64; 6];
    let mut split = [0.0f64; 2];
    let mut requested = vec![1usize; n];
    loop {
        let weight: f64 =
            requested.iter().map(|&c| pop.mass(c)).product::<f64>() / n as f64;
        for user in 0..n {
            let own = cached[user];
            let want = requested[user];
            let self_hit = own == want;
            let demand = (0..n).any(|t| t != user && requested[t] == own);
            let receive = (0..n).any(|t| t != user && cached[t] == want);
            let mutual = (0..n).any(|t| t != user && cached[t] == want && requested[t] == own);
            let slot = match (self_hit, receive, demand) {
                (true, _, false) => 0,
                (true, _, true) => 1,
                (false, true, true) => 2,
                (false, false, true) => 3,
                (false, true, false) => 4,
                (false, false, false) => 5,
            };
            probs[slot] += weight;
            if slot == 2 {
                split[if mutual { 0 } else { 1 }] += weight;
            }
        }
        if !advance(&mut requested, m) {
            break;
        }
    }
    ModeProbabilities {
        p_sr: probs[0],
        p_sr_hdtx: probs[1],
        p_fdtr: probs[2],
        p_hdtx: probs[3],
        p_hdrx: probs[4],
        p_ho: probs[5],
        split: Some(FdSplit {
            p_bfd: split[0],
            p_tnfd: split[1],
        }),
        policy: Policy::Deterministic,
        provenance: Provenance::ExactEnumeration,
    }
}

/// Odometer over content vectors, last position fastest; false on wrap.
fn advance(digits: &mut [usize], radix: usize) -> bool {
    for slot in digits.iter_mut().rev() {
        if *slot < radix {
            *slot += 1;
            return true;
        }
        *slot = 1;
    }
    false
}
