//! Turning placement into initial work: one token per packet a user still
//! needs after placement.

use super::{validate_demands, Content, DeliveryError, PacketId, Pools, SeedRecord, Token};
use crate::params::SystemParams;
use crate::placement::{Library, SubfileMap};
use crate::userset::UserSet;

/// Pools populated from the caches, ready for delivery.
#[derive(Debug, Clone)]
pub struct SeededPools {
    pub pools: Pools,
    pub seeded: Vec<SeedRecord>,
    /// Next free token id.
    pub next_id: u64,
}

impl SeededPools {
    /// User `k`'s private (uncached) packets, in transmission order.
    pub fn private_queue_len(&self, user: usize) -> usize {
        self.pools.queue_len(UserSet::singleton(user), user)
    }
}

/// For each user `k` and each subset `J'` of the other users, every packet of
/// `d_k` cached by exactly `J'` becomes a token wanted by `k` and known by
/// `J'`, queued in pool `{k} ∪ J'`. Packets with `J' = ∅` form user `k`'s
/// private queue (pool `{k}`); packets `k` already holds are dropped.
pub fn seed_pools_from_cache(
    library: &Library,
    subfiles: &SubfileMap,
    demands: &[usize],
    params: &SystemParams,
) -> Result<SeededPools, DeliveryError> {
    params.validate()?;
    validate_demands(demands, params.users, subfiles.num_files())?;
    if subfiles.users() != params.users || library.num_files() != subfiles.num_files() {
        return Err(DeliveryError::CacheMismatch);
    }
    let mut pools = Pools::new(params.users);
    let mut seeded = Vec::new();
    let mut next_id = 0u64;
    for (user, &file) in demands.iter().enumerate() {
        for (holders, indices) in subfiles.entries(file) {
            if holders.contains(user) {
                continue;
            }
            for &index in indices {
                let token = Token {
                    id: next_id,
                    wanted_by: user,
                    known_by: holders,
                    content: Content::Packet(PacketId::new(file, index as usize)),
                    payload: library.packet(file, index as usize).clone(),
                };
                next_id += 1;
                let pool = pools.push(token);
                seeded.push(SeedRecord {
                    token: next_id - 1,
                    wanted_by: user,
                    known_by: holders,
                    pool,
                });
            }
        }
    }
    Ok(SeededPools {
        pools,
        seeded,
        next_id,
    })
}
