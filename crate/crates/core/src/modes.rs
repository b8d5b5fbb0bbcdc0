//! The six operating modes and the probability vector shared by every
//! engine.

use crate::dist::Policy;
use crate::error::{Error, Result};

/// The six mutually exclusive operating modes of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Self-request: the node finds its requested content in its own cache
    /// and nobody demands the content it holds.
    Sr,
    /// Self-request while also serving another user's demand.
    SrHdtx,
    /// Full-duplex transceiver: receives its content from a neighbor while
    /// serving a demand (bi-directional or three-node).
    Fdtr,
    /// Half-duplex transmitter: cannot obtain its content anywhere but
    /// serves a demand.
    Hdtx,
    /// Half-duplex receiver: obtains its content from a neighbor, no
    /// demand on its own cache.
    Hdrx,
    /// Hitting outage: cannot obtain its content and serves nobody.
    Ho,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::Sr,
        Mode::SrHdtx,
        Mode::Fdtr,
        Mode::Hdtx,
        Mode::Hdrx,
        Mode::Ho,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Sr => "SR",
            Mode::SrHdtx => "SR-HDTX",
            Mode::Fdtr => "FDTR",
            Mode::Hdtx => "HDTX",
            Mode::Hdrx => "HDRX",
            Mode::Ho => "HO",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Coarse aggregates over the six modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Aggregate {
    /// Half-duplex: SR-HDTX, HDRX, or HDTX.
    Hd,
    /// Full-duplex: FDTR.
    Fd,
    /// Transmitting: SR-HDTX, HDTX, or FDTR.
    Tx,
    /// Receiving: FDTR or HDRX.
    Rx,
}

impl Aggregate {
    pub const ALL: [Aggregate; 4] = [Aggregate::Hd, Aggregate::Fd, Aggregate::Tx, Aggregate::Rx];

    pub fn as_str(self) -> &'static str {
        match self {
            Aggregate::Hd => "HD",
            Aggregate::Fd => "FD",
            Aggregate::Tx => "TX",
            Aggregate::Rx => "RX",
        }
    }
}

impl std::fmt::Display for Aggregate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Any statistic a per-trial node count can be taken over: one of the six
/// modes, one side of the FDTR split, or an aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeStat {
    Mode(Mode),
    Bfd,
    Tnfd,
    Aggregate(Aggregate),
}

impl ModeStat {
    pub const ALL: [ModeStat; 12] = [
        ModeStat::Mode(Mode::Sr),
        ModeStat::Mode(Mode::SrHdtx),
        ModeStat::Mode(Mode::Fdtr),
        ModeStat::Bfd,
        ModeStat::Tnfd,
        ModeStat::Mode(Mode::Hdtx),
        ModeStat::Mode(Mode::Hdrx),
        ModeStat::Mode(Mode::Ho),
        ModeStat::Aggregate(Aggregate::Hd),
        ModeStat::Aggregate(Aggregate::Fd),
        ModeStat::Aggregate(Aggregate::Tx),
        ModeStat::Aggregate(Aggregate::Rx),
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModeStat::Mode(mode) => mode.as_str(),
            ModeStat::Bfd => "BFD",
            ModeStat::Tnfd => "TNFD",
            ModeStat::Aggregate(agg) => agg.as_str(),
        }
    }
}

impl std::fmt::Display for ModeStat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModeStat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('_', "-").as_str() {
            "SR" => Ok(ModeStat::Mode(Mode::Sr)),
            "SR-HDTX" | "SRHDTX" => Ok(ModeStat::Mode(Mode::SrHdtx)),
            "FDTR" => Ok(ModeStat::Mode(Mode::Fdtr)),
            "BFD" => Ok(ModeStat::Bfd),
            "TNFD" => Ok(ModeStat::Tnfd),
            "HDTX" => Ok(ModeStat::Mode(Mode::Hdtx)),
            "HDRX" => Ok(ModeStat::Mode(Mode::Hdrx)),
            "HO" => Ok(ModeStat::Mode(Mode::Ho)),
            "HD" => Ok(ModeStat::Aggregate(Aggregate::Hd)),
            "FD" => Ok(ModeStat::Aggregate(Aggregate::Fd)),
            "TX" => Ok(ModeStat::Aggregate(Aggregate::Tx)),
            "RX" => Ok(ModeStat::Aggregate(Aggregate::Rx)),
            other => Err(Error::invalid(format!("unknown mode `{other}`"))),
        }
    }
}

impl std::str::FromStr for Aggregate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<ModeStat>()? {
            ModeStat::Aggregate(agg) => Ok(agg),
            other => Err(Error::invalid(format!(
                "expected one of HD/FD/TX/RX, got `{other}`"
            ))),
        }
    }
}

/// How a [`ModeProbabilities`] value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    ClosedForm,
    ExactEnumeration,
    FastProductForm,
    MonteCarlo,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::ClosedForm => "closed-form",
            Provenance::ExactEnumeration => "exact-enumeration",
            Provenance::FastProductForm => "fast-product-form",
            Provenance::MonteCarlo => "monte-carlo",
        }
    }
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The FDTR probability split into its two configurations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSplit {
    /// Bi-directional full-duplex: two nodes exchange contents.
    pub p_bfd: f64,
    /// Three-node full-duplex: receive from one node, serve another.
    pub p_tnfd: f64,
}

/// Probabilities of the six operating modes for one policy, plus the
/// BFD/TNFD split when an engine provides it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeProbabilities {
    pub p_sr: f64,
    pub p_sr_hdtx: f64,
    pub p_fdtr: f64,
    pub p_hdtx: f64,
    pub p_hdrx: f64,
    pub p_ho: f64,
    pub split: Option<FdSplit>,
    pub policy: Policy,
    pub provenance: Provenance,
}

impl ModeProbabilities {
    pub fn get(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Sr => self.p_sr,
            Mode::SrHdtx => self.p_sr_hdtx,
            Mode::Fdtr => self.p_fdtr,
            Mode::Hdtx => self.p_hdtx,
            Mode::Hdrx => self.p_hdrx,
            Mode::Ho => self.p_ho,
        }
    }

    /// The six probabilities in [`Mode::ALL`] order.
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.p_sr,
            self.p_sr_hdtx,
            self.p_fdtr,
            self.p_hdtx,
            self.p_hdrx,
            self.p_ho,
        ]
    }

    pub fn sum(&self) -> f64 {
        self.as_array().iter().sum()
    }

    /// Checks the type invariants: every probability in `[0, 1]`, the six
    /// modes partition the probability space within 1e-9, and a split, if
    /// present, adds up to FDTR within 1e-12.
    pub fn validate(&self) -> Result<()> {
        for mode in Mode::ALL {
            let p = self.get(mode);
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("{mode} probability {p} not in [0, 1]")));
            }
        }
        let sum = self.sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "mode probabilities sum to {sum}, expected 1 within 1e-9"
            )));
        }
        if let Some(split) = &self.split {
            if !(0.0..=1.0).contains(&split.p_bfd) || !(0.0..=1.0).contains(&split.p_tnfd) {
                return Err(Error::invalid("split probabilities must lie in [0, 1]"));
            }
            if (split.p_bfd + split.p_tnfd - self.p_fdtr).abs() > 1e-12 {
                return Err(Error::invalid(format!(
                    "BFD {} + TNFD {} must equal FDTR {} within 1e-12",
                    split.p_bfd, split.p_tnfd, self.p_fdtr
                )));
            }
        }
        Ok(())
    }
}
