//! Feedback-driven delivery over the broadcast erasure channel.
//!
//! Placement leaves every user with a private (uncached) part of its file
//! and, for every subset of other users, packets of its file those users
//! already hold. The engine turns all of it into tokens: a token is one unit
//! of work wanted by one user and cancellable by a set of others. Pools are
//! keyed by the target subset `J`; each user in `J` has a FIFO queue of
//! tokens known to the rest of `J`.
//!
//! Phase 1 sends private packets uncoded until someone receives them. Phase
//! `j` sends, for each `|J| = j`, random combinations of the queue heads.
//! A head erased at its user but overheard outside `J` is upgraded into the
//! pool `J ∪ (overhearers)`.

mod audit;
mod decode;
mod engine;
mod nofb;
mod seed;

use std::collections::VecDeque;
use std::io;

use thiserror::Error;

use crate::channel::ChannelState;
use crate::gf::{FieldElem, Payload};
use crate::params::ParamError;
use crate::userset::UserSet;

pub use audit::{
    check_causality, check_payloads, check_token_conservation, expand_content, AuditError,
    TokenLedger,
};
pub use decode::{decode_user, DecodeFailure};
pub use engine::{run_delivery, DeliveryEngine};
pub use nofb::{run_delivery_nofb, MessageRecord, NoFeedbackTranscript};
pub use seed::{seed_pools_from_cache, SeededPools};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeliveryError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("expected {expected} demands, got {found}")]
    DemandCount { expected: usize, found: usize },
    #[error("demand {demand} of user {user} is not a library file")]
    DemandOutOfRange { user: usize, demand: usize },
    #[error(
        "users {first} and {second} request the same file; only distinct demands are supported"
    )]
    UnsupportedDemand { first: usize, second: usize },
    #[error("cache table does not match the system parameters")]
    CacheMismatch,
}

/// One packet of the library: `(file, index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PacketId {
    pub file: u32,
    pub index: u32,
}

impl PacketId {
    pub fn new(file: usize, index: usize) -> Self {
        PacketId {
            file: file as u32,
            index: index as u32,
        }
    }
}

/// What a token's payload is: a library packet, or the payload transmitted
/// in an earlier slot (whose combination is recorded in the transcript).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Content {
    Packet(PacketId),
    Slot(u32),
}

pub type TokenId = u64;

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub id: TokenId,
    pub wanted_by: usize,
    pub known_by: UserSet,
    pub content: Content,
    pub payload: Payload,
}

impl Token {
    /// Users this token is simultaneously useful to.
    pub fn order(&self) -> usize {
        self.known_by.len() + 1
    }
}

/// Per-user FIFO queues for one target subset.
#[derive(Debug, Clone, PartialEq)]
pub struct SubphasePool {
    pub target: UserSet,
    queues: Vec<VecDeque<Token>>,
}

impl SubphasePool {
    pub fn new(users: usize, target: UserSet) -> Self {
        SubphasePool {
            target,
            queues: vec![VecDeque::new(); users],
        }
    }

    pub fn queue(&self, user: usize) -> &VecDeque<Token> {
        &self.queues[user]
    }

    pub fn push(&mut self, token: Token) {
        debug_assert!(self.target.contains(token.wanted_by));
        debug_assert!(self
            .target
            .without(token.wanted_by)
            .is_subset_of(token.known_by));
        self.queues[token.wanted_by].push_back(token);
    }

    fn pop_front(&mut self, user: usize) -> Option<Token> {
        self.queues[user].pop_front()
    }

    pub fn is_empty(&self) -> bool {
        self.queues.iter().all(VecDeque::is_empty)
    }

    pub fn len(&self) -> usize {
        self.queues.iter().map(VecDeque::len).sum()
    }
}

/// All pools, indexed by target bitmask and created on first use.
#[derive(Debug, Clone, PartialEq)]
pub struct Pools {
    users: usize,
    pools: Vec<Option<SubphasePool>>,
}

impl Pools {
    pub fn new(users: usize) -> Self {
        Pools {
            users,
            pools: vec![None; 1 << users],
        }
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn get(&self, target: UserSet) -> Option<&SubphasePool> {
        self.pools[target.bits() as usize].as_ref()
    }

    pub fn get_mut(&mut self, target: UserSet) -> &mut SubphasePool {
        let users = self.users;
        self.pools[target.bits() as usize].get_or_insert_with(|| SubphasePool::new(users, target))
    }

    pub fn take(&mut self, target: UserSet) -> SubphasePool {
        self.pools[target.bits() as usize]
            .take()
            .unwrap_or_else(|| SubphasePool::new(self.users, target))
    }

    pub fn put(&mut self, pool: SubphasePool) {
        let idx = pool.target.bits() as usize;
        self.pools[idx] = Some(pool);
    }

    pub fn push(&mut self, token: Token) -> UserSet {
        let target = token.known_by.with(token.wanted_by);
        self.get_mut(target).push(token);
        target
    }

    /// Tokens queued for `user` in the pool of `target`.
    pub fn queue_len(&self, target: UserSet, user: usize) -> usize {
        self.get(target).map_or(0, |p| p.queue(user).len())
    }

    pub fn total_tokens(&self) -> usize {
        self.pools.iter().flatten().map(SubphasePool::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadOutcome {
    /// The wanted user received the slot.
    Delivered,
    /// Erased at the wanted user but overheard outside the subphase; a new
    /// token now lives in `pool`.
    Upgraded { token: TokenId, pool: UserSet },
    /// Nobody useful received it; the token stays at the head.
    Pending,
}

/// One token's participation in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Head {
    pub token: TokenId,
    pub user: usize,
    pub content: Content,
    pub coeff: FieldElem,
    pub outcome: HeadOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub subphase: UserSet,
    pub heads: Vec<Head>,
    pub payload: Payload,
    pub state: ChannelState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubphaseRecord {
    pub label: UserSet,
    pub start: usize,
    pub len: usize,
}

/// A token present before the first slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedRecord {
    pub token: TokenId,
    pub wanted_by: usize,
    pub known_by: UserSet,
    pub pool: UserSet,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Transcript {
    pub users: usize,
    pub slots: Vec<SlotRecord>,
    /// In execution order; includes empty subphases with `len == 0`.
    pub subphases: Vec<SubphaseRecord>,
    pub seeded: Vec<SeedRecord>,
}

impl Transcript {
    pub fn total_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn subphase_len(&self, label: UserSet) -> Option<usize> {
        self.subphases
            .iter()
            .find(|s| s.label == label)
            .map(|s| s.len)
    }

    /// Mean measured length of the subphases of each order, indexed `1..=K`.
    pub fn mean_subphase_len_by_order(&self) -> Vec<f64> {
        let mut sum = vec![0.0; self.users + 1];
        let mut count = vec![0usize; self.users + 1];
        for s in &self.subphases {
            sum[s.label.len()] += s.len as f64;
            count[s.label.len()] += 1;
        }
        sum.iter()
            .zip(&count)
            .map(|(&s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
            .collect()
    }

    /// Text log, one `slot_index,subphase_bitmask,state_bitmask` line per slot.
    pub fn write_log<W: io::Write>(&self, mut out: W) -> io::Result<()> {
        for (i, slot) in self.slots.iter().enumerate() {
            writeln!(
                out,
                "{},{},{}",
                i,
                slot.subphase.bits(),
                slot.state.received.bits()
            )?;
        }
        Ok(())
    }
}

/// Measured outcome of one delivery run next to its analytic prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub slots: usize,
    pub subphase_lengths: Vec<(UserSet, usize)>,
    /// Per user; `None` until decoding has been attempted.
    pub decode_success: Vec<Option<bool>>,
    /// Predicted total slots, `F * T_tot`.
    pub predicted_slots: f64,
    /// Predicted length of one subphase of each order, indexed `1..=K`.
    pub predicted_subphase: Vec<f64>,
    pub relative_error: f64,
}

impl SimReport {
    pub fn new(
        slots: usize,
        subphase_lengths: Vec<(UserSet, usize)>,
        users: usize,
        predicted_slots: f64,
        predicted_subphase: Vec<f64>,
    ) -> Self {
        let relative_error = if predicted_slots == 0.0 {
            if slots == 0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (slots as f64 - predicted_slots).abs() / predicted_slots
        };
        SimReport {
            slots,
            subphase_lengths,
            decode_success: vec![None; users],
            predicted_slots,
            predicted_subphase,
            relative_error,
        }
    }

    pub fn record_decode(&mut self, user: usize, success: bool) {
        self.decode_success[user] = Some(success);
    }

    pub fn decoded_users(&self) -> usize {
        self.decode_success
            .iter()
            .filter(|d| **d == Some(true))
            .count()
    }
}

/// Checks that `demands` names one distinct library file per user.
pub fn validate_demands(
    demands: &[usize],
    users: usize,
    files: usize,
) -> Result<(), DeliveryError> {
    if demands.len() != users {
        return Err(DeliveryError::DemandCount {
            expected: users,
            found: demands.len(),
        });
    }
    for (user, &d) in demands.iter().enumerate() {
        if d >= files {
            return Err(DeliveryError::DemandOutOfRange { user, demand: d });
        }
        if let Some(first) = demands[..user].iter().position(|&e| e == d) {
            return Err(DeliveryError::UnsupportedDemand {
                first,
                second: user,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demand_validation() {
        assert!(validate_demands(&[0, 1, 2], 3, 3).is_ok());
        assert!(validate_demands(&[2, 0, 1], 3, 5).is_ok());
        assert_eq!(
            validate_demands(&[0, 1, 1], 3, 3),
            Err(DeliveryError::UnsupportedDemand {
                first: 1,
                second: 2
            })
        );
        assert!(matches!(
            validate_demands(&[0, 3, 1], 3, 3),
            Err(DeliveryError::DemandOutOfRange { .. })
        ));
        assert!(matches!(
            validate_demands(&[0, 1], 3, 3),
            Err(DeliveryError::DemandCount { .. })
        ));
    }

    #[test]
    fn pools_route_by_target() {
        let mut pools = Pools::new(3);
        let tok = Token {
            id: 0,
            wanted_by: 0,
            known_by: UserSet::from_users([2]),
            content: Content::Packet(PacketId::new(0, 4)),
            payload: Payload::zeroed(2),
        };
        assert_eq!(tok.order(), 2);
        assert_eq!(pools.push(tok), UserSet::from_users([0, 2]));
        assert_eq!(pools.queue_len(UserSet::from_users([0, 2]), 0), 1);
        assert_eq!(pools.total_tokens(), 1);
        let pool = pools.take(UserSet::from_users([0, 2]));
        assert_eq!(pool.len(), 1);
        assert_eq!(pools.total_tokens(), 0);
    }
}
