//! Splitting one master seed into independent stream seeds.
//!
//! Every random stream of an experiment is keyed by a counter
//!
//! ```text
//! key = replication * ROLE_SLOTS + role
//! ```
//!
//! where `role` is 0 for the environment, 1 for the population process, 2
//! for the arm-mean generator and `3 + i` for player `i`. The stream seed is
//! `splitmix64(master ^ DOMAIN, key)`: the splitmix64 finalizer applied to
//! `(master ^ DOMAIN) + GOLDEN * (key + 1)`. For a fixed master the map
//! `key -> seed` is a bijection on `u64`, so distinct (replication, role)
//! pairs never share a seed as long as the key does not wrap.

use crate::error::{Error, Result};

/// Domain separator mixed into the master seed.
pub const DOMAIN: u64 = 0x6d70_6d61_625f_7631; // "mpmab_v1"

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Roles per replication; players beyond `ROLE_SLOTS - 3` are rejected.
pub const ROLE_SLOTS: u64 = 1 << 24;

/// Largest replication index whose keys do not wrap.
pub const MAX_REPLICATIONS: u64 = u64::MAX / ROLE_SLOTS - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Environment,
    Population,
    Means,
    Player(u64),
}

impl Role {
    fn slot(self) -> u64 {
        match self {
            Role::Environment => 0,
            Role::Population => 1,
            Role::Means => 2,
            Role::Player(i) => 3 + i,
        }
    }
}

fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the stream playing `role` in replication `replication`.
pub fn stream_seed(master: u64, replication: u64, role: Role) -> Result<u64> {
    let slot = role.slot();
    if slot >= ROLE_SLOTS {
        return Err(Error::config("players", "too many players in one replication"));
    }
    if replication > MAX_REPLICATIONS {
        return Err(Error::config("replications", "too many replications"));
    }
    let key = replication * ROLE_SLOTS + slot;
    let base = master ^ DOMAIN;
    Ok(finalize(base.wrapping_add(GOLDEN.wrapping_mul(key.wrapping_add(1)))))
}

/// The seeds one replication needs, derived up front.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplicationSeeds {
    master: u64,
    replication: u64,
}

impl ReplicationSeeds {
    pub fn new(master: u64, replication: u64) -> Self {
        Self {
            master,
            replication,
        }
    }

    pub fn get(&self, role: Role) -> Result<u64> {
        stream_seed(self.master, self.replication, role)
    }
}

/// Human-readable description written into run metadata.
pub fn scheme_description() -> String {
    format!(
        "splitmix64 finalizer of (master ^ {DOMAIN:#018x}) + {GOLDEN:#018x} * (key + 1), \
         key = replication * {ROLE_SLOTS} + role, roles: environment = 0, population = 1, \
         means = 2, player i = 3 + i; streams are ChaCha8 seeded from the 64-bit result"
    )
}
