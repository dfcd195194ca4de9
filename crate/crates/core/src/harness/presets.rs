//! Named scenarios.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Relay coordinates of the non-identical scenario; source at (0, 0), destination at (10, 0).
pub const INID_RELAYS: [[f64; 2]; 10] = [
    [4.0, -2.6],
    [2.9, 2.1],
    [6.3, 2.5],
    [3.6, -1.2],
    [4.5, 2.1],
    [7.8, 0.2],
    [4.1, 3.5],
    [6.7, -2.9],
    [5.2, 1.8],
    [7.6, 2.1],
];
pub const INID_SOURCE: [f64; 2] = [0.0, 0.0];
pub const INID_DEST: [f64; 2] = [10.0, 0.0];

/// Hop distance of every link in the identical scenario.
pub const IID_DISTANCE: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Ten statistically identical relays, 5 m from both source and destination.
    IidDefault,
    /// Ten relays at fixed, distinct positions.
    InidDefault,
    /// One relay, one-packet buffer, links that never fail. Optimal throughput is 0.5.
    Toy,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::IidDefault => "iid_default",
            Preset::InidDefault => "inid_default",
            Preset::Toy => "toy",
        }
    }

    pub fn default_relays(self) -> usize {
        match self {
            Preset::IidDefault | Preset::InidDefault => 10,
            Preset::Toy => 1,
        }
    }

    pub fn default_buffer(self) -> usize {
        match self {
            Preset::IidDefault | Preset::InidDefault => 10,
            Preset::Toy => 1,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iid_default" | "iid" => Ok(Preset::IidDefault),
            "inid_default" | "inid" => Ok(Preset::InidDefault),
            "toy" => Ok(Preset::Toy),
            _ => Err(Error::InvalidConfig(format!("unknown preset {s:?}"))),
        }
    }
}
