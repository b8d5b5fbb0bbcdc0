//! Seeded Monte Carlo estimation of the mode probabilities.
//!
//! Every trial draws one cache placement and one request vector, then
//! classifies each of the `N` users into exactly one operating mode.
//! Trial `t` runs on its own random stream derived from `(seed, t)`, so
//! results are bit-identical for a given seed no matter how many worker
//! threads execute the trials or in which order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dist::{caching_dist, popularity, NetworkConfig, Policy, Sampler};
use crate::error::{Error, Result};
use crate::metrics::Pmf;
use crate::modes::{Aggregate, FdSplit, Mode, ModeProbabilities, ModeStat, Provenance};

/// One realization of the cached contents: entry `k` is the content held
/// by user `k + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub cached: Vec<usize>,
}

/// One realization of the users' requests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestVector {
    pub requested: Vec<usize>,
}

/// Exhaustive, mutually exclusive classification of one user in one
/// trial. BFD and TNFD together make up the FDTR mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeLabel {
    Sr,
    SrHdtx,
    Bfd,
    Tnfd,
    Hdtx,
    Hdrx,
    Ho,
}

impl ModeLabel {
    pub const ALL: [ModeLabel; 7] = [
        ModeLabel::Sr,
        ModeLabel::SrHdtx,
        ModeLabel::Bfd,
        ModeLabel::Tnfd,
        ModeLabel::Hdtx,
        ModeLabel::Hdrx,
        ModeLabel::Ho,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModeLabel::Sr => "SR",
            ModeLabel::SrHdtx => "SR-HDTX",
            ModeLabel::Bfd => "BFD",
            ModeLabel::Tnfd => "TNFD",
            ModeLabel::Hdtx => "HDTX",
            ModeLabel::Hdrx => "HDRX",
            ModeLabel::Ho => "HO",
        }
    }
}

impl std::fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Draw a placement for `config`: the identity placement under the
/// deterministic policy, `N` i.i.d. draws from the caching distribution
/// otherwise.
pub fn sample_placement<R: Rng + ?Sized>(
    config: &NetworkConfig,
    cache: &Sampler,
    rng: &mut R,
) -> Result<Placement> {
    let n = config.num_users();
    let cached = match config.policy() {
        Policy::Deterministic => {
            if n > config.library_size() {
                return Err(Error::policy(format!(
                    "deterministic caching needs N <= m, got N = {n}, m = {}",
                    config.library_size()
                )));
            }
            (1..=n).collect()
        }
        Policy::Stochastic => (0..n).map(|_| cache.sample(rng)).collect(),
    };
    Ok(Placement { cached })
}

/// Classifies user `user` (1-based) from first principles by scanning the
/// other users. The batch path below is equivalent but runs in `O(N)` per
/// trial instead of `O(N^2)`.
pub fn classify_user(user: usize, placement: &Placement, requests: &RequestVector) -> ModeLabel {
    let n = placement.cached.len();
    assert_eq!(n, requests.requested.len(), "inconsistent vector lengths");
    assert!(user >= 1 && user <= n, "user index {user} out of 1..={n}");
    let k = user - 1;
    let own = placement.cached[k];
    let want = requests.requested[k];

    let self_hit = own == want;
    let mut demand = false;
    let mut can_receive = false;
    let mut mutual = false;
    for tau in 0..n {
        if tau == k {
            continue;
        }
        let serves_me = placement.cached[tau] == want;
        let wants_mine = requests.requested[tau] == own;
        demand |= wants_mine;
        can_receive |= serves_me;
        mutual |= serves_me && wants_mine;
    }

    match (self_hit, can_receive, demand) {
        (true, _, false) => ModeLabel::Sr,
        (true, _, true) => ModeLabel::SrHdtx,
        (false, true, true) => {
            if mutual {
                ModeLabel::Bfd
            } else {
                ModeLabel::Tnfd
            }
        }
        (false, true, false) => ModeLabel::Hdrx,
        (false, false, true) => ModeLabel::Hdtx,
        (false, false, false) => ModeLabel::Ho,
    }
}

/// Monte Carlo estimates plus everything needed to reproduce them.
#[derive(Debug, Clone, PartialEq)]
pub struct SimEstimate {
    /// Point estimates; `split` carries the empirical BFD/TNFD share.
    pub mode_probs: ModeProbabilities,
    /// Standard errors of the six mode estimates, `sqrt(p(1-p)/(trials*N))`.
    pub std_errors: [f64; 6],
    /// Per-trial node-count histograms over `0..=N`, one per statistic.
    pub histograms: CountHistograms,
    pub trials: u64,
    pub seed: u64,
}

impl SimEstimate {
    pub fn std_error(&self, mode: Mode) -> f64 {
        self.std_errors[Mode::ALL.iter().position(|&m| m == mode).unwrap()]
    }
}

/// Histograms of the per-trial node counts for the seven labels and the
/// derived statistics (FDTR and the four aggregates).
#[derive(Debug, Clone, PartialEq)]
pub struct CountHistograms {
    counts: Vec<Vec<u64>>, // [ModeStat::ALL order][0..=N]
}

impl CountHistograms {
    fn zeroed(num_users: usize) -> Self {
        CountHistograms {
            counts: vec![vec![0u64; num_users + 1]; ModeStat::ALL.len()],
        }
    }

    fn merge(&mut self, other: &CountHistograms) {
        for (mine, theirs) in self.counts.iter_mut().zip(&other.counts) {
            for (a, b) in mine.iter_mut().zip(theirs) {
                *a += b;
            }
        }
    }

    fn record(&mut self, stat_index: usize, count: usize) {
        self.counts[stat_index][count] += 1;
    }

    /// Raw per-trial counts of nodes in `stat`, indexed by node count.
    pub fn histogram(&self, stat: ModeStat) -> &[u64] {
        let idx = ModeStat::ALL.iter().position(|&s| s == stat).unwrap();
        &self.counts[idx]
    }
}

/// Accumulator combined across workers; all fields are exact integer
/// counts, so merging is order-independent.
struct Tally {
    label_totals: [u64; 7],
    histograms: CountHistograms,
}

impl Tally {
    fn new(num_users: usize) -> Self {
        Tally {
            label_totals: [0; 7],
            histograms: CountHistograms::zeroed(num_users),
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.label_totals.iter_mut().zip(other.label_totals) {
            *a += b;
        }
        self.histograms.merge(&other.histograms);
        self
    }
}

/// Scratch reused across the trials of one worker.
struct TrialScratch {
    cached: Vec<usize>,
    requested: Vec<usize>,
    // Occurrence tables over contents (1-based): how many users cache /
    // request each content in the current trial.
    cache_count: Vec<u32>,
    request_count: Vec<u32>,
    touched: Vec<usize>,
}

impl TrialScratch {
    fn new(num_users: usize, library_size: usize) -> Self {
        TrialScratch {
            cached: vec![0; num_users],
            requested: vec![0; num_users],
            cache_count: vec![0; library_size + 1],
            request_count: vec![0; library_size + 1],
            touched: Vec::with_capacity(2 * num_users),
        }
    }
}

/// Classifies every user of one realized trial in `O(N)` (plus a partner
/// scan for full-duplex candidates) and updates the tally.
fn classify_trial(scratch: &mut TrialScratch, tally: &mut Tally) {
    let n = scratch.cached.len();
    for &c in &scratch.cached {
        scratch.cache_count[c] += 1;
        scratch.touched.push(c);
    }
    for &c in &scratch.requested {
        scratch.request_count[c] += 1;
        scratch.touched.push(c);
    }

    let mut label_counts = [0u32; 7];
    for k in 0..n {
        let own = scratch.cached[k];
        let want = scratch.requested[k];
        let self_hit = own == want;
        // The tables count the user itself; discount its own contribution,
        // which exists exactly when the request equals the cached content.
        let demand = scratch.request_count[own] > u32::from(self_hit);
        let can_receive = scratch.cache_count[want] > u32::from(self_hit);
        let label = match (self_hit, can_receive, demand) {
            (true, _, false) => ModeLabel::Sr,
            (true, _, true) => ModeLabel::SrHdtx,
            (false, true, true) => {
                // Mutual partner: someone who holds my content's request...
                let mut mutual = false;
                for tau in 0..n {
                    if tau != k
                        && scratch.cached[tau] == want
                        && scratch.requested[tau] == own
                    {
                        mutual = true;
                        break;
                    }
                }
                if mutual {
                    ModeLabel::Bfd
                } else {
                    ModeLabel::Tnfd
                }
            }
            (false, true, false) => ModeLabel::Hdrx,
            (false, false, true) => ModeLabel::Hdtx,
            (false, false, false) => ModeLabel::Ho,
        };
        label_counts[label as usize] += 1;
    }

    for (total, &count) in tally.label_totals.iter_mut().zip(&label_counts) {
        *total += u64::from(count);
    }
    let [sr, sr_hdtx, bfd, tnfd, hdtx, hdrx, ho] = label_counts.map(|c| c as usize);
    let fdtr = bfd + tnfd;
    let stats = [
        sr,
        sr_hdtx,
        fdtr,
        bfd,
        tnfd,
        hdtx,
        hdrx,
        ho,
        sr_hdtx + hdrx + hdtx, // HD
        fdtr,                  // FD
        sr_hdtx + hdtx + fdtr, // TX
        fdtr + hdrx,           // RX
    ];
    for (idx, count) in stats.into_iter().enumerate() {
        tally.histograms.record(idx, count);
    }

    for c in scratch.touched.drain(..) {
        scratch.cache_count[c] = 0;
        scratch.request_count[c] = 0;
    }
}

/// Runs `trials` independent network realizations and estimates all mode
/// probabilities, their standard errors, and the per-mode node-count
/// histograms. Identical `(config, trials, seed)` produce identical
/// output for any worker count.
pub fn run_trials(config: &NetworkConfig, trials: u64, seed: u64) -> Result<SimEstimate> {
    if trials == 0 {
        return Err(Error::invalid("trial count must be at least 1"));
    }
    let n = config.num_users();
    let pop_sampler = Sampler::new(popularity(config)?.masses())?;
    let cache_sampler = match config.policy() {
        Policy::Stochastic => Some(Sampler::new(caching_dist(config)?.masses())?),
        Policy::Deterministic => {
            if n > config.library_size() {
                return Err(Error::policy(format!(
                    "deterministic caching needs N <= m, got N = {n}, m = {}",
                    config.library_size()
                )));
            }
            None
        }
    };

    const CHUNK: u64 = 4096;
    let chunks = trials.div_ceil(CHUNK);
    let tally = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut tally = Tally::new(n);
            let mut scratch = TrialScratch::new(n, config.library_size());
            let base = ChaCha8Rng::seed_from_u64(seed);
            let lo = chunk * CHUNK;
            let hi = (lo + CHUNK).min(trials);
            for trial in lo..hi {
                let mut rng = base.clone();
                rng.set_stream(trial);
                match &cache_sampler {
                    Some(sampler) => {
                        for slot in scratch.cached.iter_mut() {
                            *slot = sampler.sample(&mut rng);
                        }
                    }
                    None => {
                        for (k, slot) in scratch.cached.iter_mut().enumerate() {
                            *slot = k + 1;
                        }
                    }
                }
                for slot in scratch.requested.iter_mut() {
                    *slot = pop_sampler.sample(&mut rng);
                }
                classify_trial(&mut scratch, &mut tally);
            }
            tally
        })
        .reduce(|| Tally::new(n), Tally::merge);

    let total_users = (trials * n as u64) as f64;
    let rate = |label: ModeLabel| tally.label_totals[label as usize] as f64 / total_users;
    let p_bfd = rate(ModeLabel::Bfd);
    let p_tnfd = rate(ModeLabel::Tnfd);
    let mode_probs = ModeProbabilities {
        p_sr: rate(ModeLabel::Sr),
        p_sr_hdtx: rate(ModeLabel::SrHdtx),
        p_fdtr: p_bfd + p_tnfd,
        p_hdtx: rate(ModeLabel::Hdtx),
        p_hdrx: rate(ModeLabel::Hdrx),
        p_ho: rate(ModeLabel::Ho),
        split: Some(FdSplit { p_bfd, p_tnfd }),
        policy: config.policy(),
        provenance: Provenance::MonteCarlo,
    };
    let std_errors =
        mode_probs.as_array().map(|p| (p * (1.0 - p) / total_users).sqrt());
    Ok(SimEstimate {
        mode_probs,
        std_errors,
        histograms: tally.histograms,
        trials,
        seed,
    })
}

/// Normalized per-trial node-count distribution of `stat`.
pub fn empirical_pmf(estimate: &SimEstimate, stat: ModeStat) -> Result<Pmf> {
    let hist = estimate.histograms.histogram(stat);
    let masses: Vec<f64> = hist
        .iter()
        .map(|&c| c as f64 / estimate.trials as f64)
        .collect();
    Pmf::from_masses(masses)
}

/// Standard error of the empirical split estimates, same normalization as
/// the per-mode errors.
pub fn split_std_errors(estimate: &SimEstimate) -> Option<(f64, f64)> {
    let split = estimate.mode_probs.split.as_ref()?;
    let total_users = (estimate.trials * (estimate.histograms.counts[0].len() as u64 - 1)) as f64;
    let se = |p: f64| (p * (1.0 - p) / total_users).sqrt();
    Some((se(split.p_bfd), se(split.p_tnfd)))
}

// `classify_trial` fills histograms positionally; keep the order in sync
// with `ModeStat::ALL`.
const _: () = assert!(matches!(ModeStat::ALL[0], ModeStat::Mode(Mode::Sr)));
const _: () = assert!(matches!(ModeStat::ALL[3], ModeStat::Bfd));
const _: () = assert!(matches!(ModeStat::ALL[8], ModeStat::Aggregate(Aggregate::Hd)));
const _: () = assert!(matches!(ModeStat::ALL[11], ModeStat::Aggregate(Aggregate::Rx)));
