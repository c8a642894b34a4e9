//! Wire format shared by every subcommand: one JSON object per computed
//! degree, with a stable field order so identical inputs produce
//! byte-identical output.

use std::fmt;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use relhom::intlattice::AbInvariants;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// One named verification verdict.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
}

pub fn check(name: &str, pass: bool) -> Check {
    Check { name: name.to_string(), pass }
}

/// Invariant factors of a finitely generated abelian group: free rank plus
/// the divisibility chain of torsion orders.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WireInvariants {
    pub free_rank: usize,
    pub torsion: Vec<u64>,
}

impl WireInvariants {
    /// Desk-scale torsion orders always fit in u64; anything larger is a
    /// sign of corruption, not a result worth serializing.
    pub fn from_invariants(inv: &AbInvariants) -> Self {
        let torsion = inv
            .torsion
            .iter()
            .map(|d| d.to_u64().expect("torsion order exceeds u64"))
            .collect();
        WireInvariants { free_rank: inv.free_rank, torsion }
    }

    fn to_invariants(&self) -> AbInvariants {
        AbInvariants {
            free_rank: self.free_rank,
            torsion: self.torsion.iter().map(|&d| BigInt::from(d)).collect(),
        }
    }
}

impl fmt::Display for WireInvariants {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_invariants())
    }
}

/// The result object for a single degree. Serialized field order is the
/// documented schema; do not reorder.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub group_order: usize,
    pub presentation_hash: String,
    pub degree: usize,
    pub result: WireInvariants,
    pub checks: Vec<Check>,
}

/// Hex SHA-256 of the presentation file text, identifying the input in
/// reports and cache keys.
pub fn presentation_hash(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}
