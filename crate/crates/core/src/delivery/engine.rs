//! The feedback loop: pick a slot's payload, transmit, react to the state.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{
    seed_pools_from_cache, Content, DeliveryError, Head, HeadOutcome, Pools, SeededPools,
    SimReport, SlotRecord, SubphaseRecord, Token, TokenId, Transcript,
};
use crate::analytics::phase_plan;
use crate::channel::BroadcastChannel;
use crate::gf::{FieldElem, Payload};
use crate::params::SystemParams;
use crate::placement::{subfile_partition, CacheTable, Library};
use crate::rng::{SeedTree, Stream};
use crate::userset::UserSet;

/// Drives pools through subphases against a channel, recording everything.
#[derive(Debug)]
pub struct DeliveryEngine<R: Rng = ChaCha8Rng> {
    pools: Pools,
    next_id: TokenId,
    payload_len: usize,
    coding: R,
    transcript: Transcript,
}

impl<R: Rng> DeliveryEngine<R> {
    pub fn new(seeded: SeededPools, payload_len: usize, coding: R) -> Self {
        let users = seeded.pools.users();
        DeliveryEngine {
            pools: seeded.pools,
            next_id: seeded.next_id,
            payload_len,
            coding,
            transcript: Transcript {
                users,
                slots: Vec::new(),
                subphases: Vec::new(),
                seeded: seeded.seeded,
            },
        }
    }

    pub fn pools(&self) -> &Pools {
        &self.pools
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }

    /// Sends every user's private packets uncoded, one user after another.
    pub fn run_phase1<C: BroadcastChannel>(&mut self, channel: &mut C) {
        for k in 0..self.pools.users() {
            self.run_subphase(UserSet::singleton(k), channel);
        }
    }

    /// Runs subphase `target` until all of its queues are empty.
    ///
    /// Each slot combines the head of every nonempty queue. A head is
    /// consumed when its user receives the slot, or upgraded when only
    /// users outside `target` do; otherwise it stays for the next slot.
    /// Returns the number of slots used.
    pub fn run_subphase<C: BroadcastChannel>(&mut self, target: UserSet, channel: &mut C) -> usize {
        let mut pool = self.pools.take(target);
        let start = self.transcript.slots.len();
        let mut members: Vec<(usize, Token)> = Vec::with_capacity(target.len());
        while !pool.is_empty() {
            members.clear();
            for k in target.iter() {
                if let Some(tok) = pool.queue(k).front() {
                    members.push((k, tok.clone()));
                }
            }
            let coeffs = self.draw_coefficients(target, &members);
            let mut payload = Payload::zeroed(self.payload_len);
            for ((_, tok), &c) in members.iter().zip(&coeffs) {
                payload.add_scaled(c, &tok.payload);
            }

            // The payload is fixed before the channel reveals this slot's state.
            let state = channel.transmit(&payload).state;
            let slot_index = self.transcript.slots.len() as u32;
            let outside = state.received.difference(target);
            let mut heads = Vec::with_capacity(members.len());
            for ((k, tok), &coeff) in members.iter().zip(&coeffs) {
                let k = *k;
                let outcome = if state.received_by(k) {
                    pool.pop_front(k);
                    HeadOutcome::Delivered
                } else if !outside.is_empty() {
                    pool.pop_front(k);
                    let id = self.next_id;
                    self.next_id += 1;
                    let upgraded = Token {
                        id,
                        wanted_by: k,
                        known_by: target.without(k).union(outside),
                        content: Content::Slot(slot_index),
                        payload: payload.clone(),
                    };
                    let pool_of = self.pools.push(upgraded);
                    HeadOutcome::Upgraded {
                        token: id,
                        pool: pool_of,
                    }
                } else {
                    HeadOutcome::Pending
                };
                heads.push(Head {
                    token: tok.id,
                    user: k,
                    content: tok.content,
                    coeff,
                    outcome,
                });
            }
            self.transcript.slots.push(SlotRecord {
                subphase: target,
                heads,
                payload,
                state,
            });
        }
        let len = self.transcript.slots.len() - start;
        self.transcript.subphases.push(SubphaseRecord {
            label: target,
            start,
            len,
        });
        len
    }

    /// Runs every subphase: ascending cardinality, then ascending bitmask.
    pub fn run_all<C: BroadcastChannel>(&mut self, channel: &mut C) {
        let users = self.pools.users();
        for size in 1..=users {
            for target in UserSet::subsets_of_size(users, size) {
                self.run_subphase(target, channel);
            }
        }
    }

    /// Uncoded in single-user subphases. Otherwise fresh nonzero coefficients,
    /// except that heads sharing content (several users upgraded from the same
    /// slot) carry it once: later duplicates get coefficient zero, so a
    /// receiver can never see the shared content cancel itself out.
    fn draw_coefficients(&mut self, target: UserSet, members: &[(usize, Token)]) -> Vec<FieldElem> {
        if target.len() == 1 {
            return vec![FieldElem::ONE; members.len()];
        }
        let mut coeffs = Vec::with_capacity(members.len());
        for (i, (_, tok)) in members.iter().enumerate() {
            let shared = members[..i].iter().any(|(_, t)| t.content == tok.content);
            coeffs.push(if shared {
                FieldElem::ZERO
            } else {
                FieldElem::random_nonzero(&mut self.coding)
            });
        }
        coeffs
    }
}

/// Full delivery for `demands` (one distinct file per user) over `channel`.
///
/// Coding coefficients come from the coding stream of `params.seed`; the
/// channel brings its own randomness. Predictions use the caching
/// probability realized by the integer quota.
pub fn run_delivery<C: BroadcastChannel>(
    library: &Library,
    cache: &CacheTable,
    demands: &[usize],
    params: &SystemParams,
    channel: &mut C,
) -> Result<(Transcript, SimReport), DeliveryError> {
    params.validate()?;
    if cache.users() != params.users
        || channel.users() != params.users
        || cache.num_files() != params.files
    {
        return Err(DeliveryError::CacheMismatch);
    }
    let subfiles = subfile_partition(cache, params);
    let seeded = seed_pools_from_cache(library, &subfiles, demands, params)?;
    let coding = SeedTree::new(params.seed).stream(Stream::Coding);
    let mut engine = DeliveryEngine::new(seeded, params.payload_len, coding);
    engine.run_all(channel);
    let transcript = engine.into_transcript();

    let plan = phase_plan(
        params.users,
        params.delta,
        params.effective_p(),
        params.file_packets as f64,
    );
    let lengths = transcript
        .subphases
        .iter()
        .map(|s| (s.label, s.len))
        .collect();
    let report = SimReport::new(
        transcript.total_slots(),
        lengths,
        params.users,
        plan.total(),
        plan.t,
    );
    Ok((transcript, report))
}
