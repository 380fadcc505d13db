//! hp-multigrid for the SIP viscous operator: aggressive p-coarsening to element-wise
//! constants or bilinears, an optional projection to continuous bilinears, geometric
//! h-levels below that, and a direct solve on the coarsest level.

mod hierarchy;
mod transfer;

pub use hierarchy::{build_hierarchy, LevelSmoother, MgHierarchy, MgLevel, MgSettings, SmootherKind};
pub use transfer::{
    build_dg_to_cg, build_h_prolong, build_p_prolong, cg_dofs, galerkin_coarsen, Transfer,
};

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Coarse-space variant of the hierarchy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Two levels: DG order k and element-wise constants, direct solve on the latter.
    PQ0,
    /// Element-wise constants followed by cell-centred h-levels (odd meshes).
    HpQ0,
    /// Two levels: DG order k and element-wise bilinears.
    PQ1,
    /// Element-wise bilinears, continuous bilinears, then vertex-centred h-levels.
    HpQ1,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::PQ0, Variant::HpQ0, Variant::PQ1, Variant::HpQ1];

    pub fn coarse_order(self) -> usize {
        match self {
            Variant::PQ0 | Variant::HpQ0 => 0,
            Variant::PQ1 | Variant::HpQ1 => 1,
        }
    }

    pub fn is_hp(self) -> bool {
        matches!(self, Variant::HpQ0 | Variant::HpQ1)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::PQ0 => "p_q0",
            Variant::HpQ0 => "hp_q0",
            Variant::PQ1 => "p_q1",
            Variant::HpQ1 => "hp_q1",
        }
    }

    /// Element count to use for a requested one: hp_q0 needs odd counts and moves up by one.
    pub fn adjust_elements(self, n: usize) -> usize {
        if self == Variant::HpQ0 && n % 2 == 0 {
            n + 1
        } else {
            n
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown multigrid variant '{s}' (p_q0, hp_q0, p_q1, hp_q1)")))
    }
}
