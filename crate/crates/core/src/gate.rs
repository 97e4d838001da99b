//! Boolean gate kinds, their truth tables, and the linear pre-combination
//! each one is evaluated with before bootstrapping.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    And,
    Or,
    Xor,
    Nand,
    Nor,
    Xnor,
    /// `!x & y`
    AndNy,
    /// `!x | y`
    OrNy,
}

/// Coefficients on `(x, y)` and an offset in multiples of `mu`.
///
/// With bits encoded as `±mu` and `mu = 1/8`, the combined phase lies in
/// `(0, 1/2)` exactly when the gate outputs 1, at distance at least `mu`
/// from both boundaries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Linearization {
    pub coeffs: [i64; 2],
    pub offset_mu: i64,
}

impl GateKind {
    pub const ALL: [GateKind; 8] = [
        GateKind::And,
        GateKind::Or,
        GateKind::Xor,
        GateKind::Nand,
        GateKind::Nor,
        GateKind::Xnor,
        GateKind::AndNy,
        GateKind::OrNy,
    ];

    pub fn apply(self, x: bool, y: bool) -> bool {
        match self {
            GateKind::And => x & y,
            GateKind::Or => x | y,
            GateKind::Xor => x ^ y,
            GateKind::Nand => !(x & y),
            GateKind::Nor => !(x | y),
            GateKind::Xnor => !(x ^ y),
            GateKind::AndNy => !x & y,
            GateKind::OrNy => !x | y,
        }
    }

    pub fn linearization(self) -> Linearization {
        let (coeffs, offset_mu) = match self {
            GateKind::And => ([1, 1], -1),
            GateKind::Or => ([1, 1], 1),
            GateKind::Xor => ([2, 2], 2),
            GateKind::Nand => ([-1, -1], 1),
            GateKind::Nor => ([-1, -1], -1),
            GateKind::Xnor => ([-2, -2], -2),
            GateKind::AndNy => ([-1, 1], -1),
            GateKind::OrNy => ([-1, 1], 1),
        };
        Linearization { coeffs, offset_mu }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Or => "OR",
            GateKind::Xor => "XOR",
            GateKind::Nand => "NAND",
            GateKind::Nor => "NOR",
            GateKind::Xnor => "XNOR",
            GateKind::AndNy => "ANDNY",
            GateKind::OrNy => "ORNY",
        }
    }
}

impl Linearization {
    pub fn l1_norm(&self) -> u64 {
        self.coeffs.iter().map(|c| c.unsigned_abs()).sum()
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GateKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParams(format!("unknown gate kind {s:?}")))
    }
}
