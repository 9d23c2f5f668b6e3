use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Delineated wave. Channel order in masks is fixed: P=0, QRS=1, T=2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WaveKind {
    P,
    #[serde(rename = "QRS")]
    Qrs,
    T,
}

impl WaveKind {
    pub const ALL: [WaveKind; 3] = [WaveKind::P, WaveKind::Qrs, WaveKind::T];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            WaveKind::P => "P",
            WaveKind::Qrs => "QRS",
            WaveKind::T => "T",
        }
    }

    /// The segment kind holding this wave's templates.
    pub fn segment(self) -> SegmentKind {
        match self {
            WaveKind::P => SegmentKind::P,
            WaveKind::Qrs => SegmentKind::Qrs,
            WaveKind::T => SegmentKind::T,
        }
    }
}

impl fmt::Display for WaveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WaveKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "P" | "p" => Ok(WaveKind::P),
            "QRS" | "qrs" => Ok(WaveKind::Qrs),
            "T" | "t" => Ok(WaveKind::T),
            other => Err(format!("unknown wave `{other}`")),
        }
    }
}

/// Constituent segment of a cardiac cycle, in cyclic order
/// P → PQ → QRS → ST → T → TP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SegmentKind {
    P,
    #[serde(rename = "PQ")]
    Pq,
    #[serde(rename = "QRS")]
    Qrs,
    #[serde(rename = "ST")]
    St,
    T,
    #[serde(rename = "TP")]
    Tp,
}

impl SegmentKind {
    pub const ALL: [SegmentKind; 6] = [
        SegmentKind::P,
        SegmentKind::Pq,
        SegmentKind::Qrs,
        SegmentKind::St,
        SegmentKind::T,
        SegmentKind::Tp,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn next(self) -> Self {
        Self::ALL[(self.index() + 1) % Self::ALL.len()]
    }

    pub fn name(self) -> &'static str {
        match self {
            SegmentKind::P => "P",
            SegmentKind::Pq => "PQ",
            SegmentKind::Qrs => "QRS",
            SegmentKind::St => "ST",
            SegmentKind::T => "T",
            SegmentKind::Tp => "TP",
        }
    }

    /// The labeled wave for P, QRS and T; `None` for the pauses.
    pub fn wave(self) -> Option<WaveKind> {
        match self {
            SegmentKind::P => Some(WaveKind::P),
            SegmentKind::Qrs => Some(WaveKind::Qrs),
            SegmentKind::T => Some(WaveKind::T),
            _ => None,
        }
    }

    pub fn is_pause(self) -> bool {
        self.wave().is_none()
    }
}

impl fmt::Display for SegmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SegmentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown segment kind `{s}`"))
    }
}
