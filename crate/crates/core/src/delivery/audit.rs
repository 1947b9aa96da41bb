//! After-the-fact checks on delivery transcripts: token bookkeeping, payload
//! consistency and causality.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use super::{run_delivery, Content, DeliveryError, HeadOutcome, PacketId, Transcript};
use crate::channel::{ChannelState, ErasureChannel, ScriptedChannel};
use crate::gf::{FieldElem, Payload};
use crate::params::SystemParams;
use crate::placement::{CacheTable, Library};
use crate::rng::SeedTree;
use crate::userset::UserSet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuditError {
    #[error("slot {slot}: token {token} was never created")]
    UnknownToken { slot: usize, token: u64 },
    #[error("token {token} created twice")]
    DuplicateToken { token: u64 },
    #[error("slot {slot}: token {token} used after it was consumed")]
    ConsumedTwice { slot: usize, token: u64 },
    #[error("token {token} was never consumed")]
    Lost { token: u64 },
    #[error("slot {slot}: token {token} sent in the wrong subphase or for the wrong user")]
    Misrouted { slot: usize, token: u64 },
    #[error("slot {slot}: upgrade into {pool} does not enlarge subphase {subphase}")]
    NotAnUpgrade {
        slot: usize,
        pool: UserSet,
        subphase: UserSet,
    },
    #[error("user {user}: {delivered} deliveries for {needed} needed packets")]
    DeliveryCount {
        user: usize,
        delivered: usize,
        needed: usize,
    },
    #[error("slot {slot}: payload does not match its recorded combination")]
    Payload { slot: usize },
    #[error("slot {slot}: refers to slot {source_slot}, which is not earlier")]
    Acausal { slot: usize, source_slot: usize },
    #[error("replay diverged at slot {slot} before the cut at {cut}")]
    Diverged { slot: usize, cut: usize },
    #[error(transparent)]
    Delivery(#[from] DeliveryError),
}

/// Token accounting for one transcript.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenLedger {
    pub seeded: usize,
    pub upgraded: usize,
    /// Deliveries per user.
    pub delivered: Vec<usize>,
}

struct Life {
    wanted_by: usize,
    pool: UserSet,
    consumed: bool,
}

/// Every token is created once, consumed exactly once (delivered to its user
/// or upgraded into a strictly larger subset), and every user receives as
/// many deliveries as it had packets to fetch.
pub fn check_token_conservation(transcript: &Transcript) -> Result<TokenLedger, AuditError> {
    let mut live: HashMap<u64, Life> = HashMap::new();
    let mut needed = vec![0usize; transcript.users];
    let mut ledger = TokenLedger {
        delivered: vec![0; transcript.users],
        ..Default::default()
    };
    for rec in &transcript.seeded {
        let life = Life {
            wanted_by: rec.wanted_by,
            pool: rec.pool,
            consumed: false,
        };
        if live.insert(rec.token, life).is_some() {
            return Err(AuditError::DuplicateToken { token: rec.token });
        }
        needed[rec.wanted_by] += 1;
        ledger.seeded += 1;
    }
    for (slot, record) in transcript.slots.iter().enumerate() {
        for head in &record.heads {
            let life = live.get_mut(&head.token).ok_or(AuditError::UnknownToken {
                slot,
                token: head.token,
            })?;
            if life.consumed {
                return Err(AuditError::ConsumedTwice {
                    slot,
                    token: head.token,
                });
            }
            if life.pool != record.subphase || life.wanted_by != head.user {
                return Err(AuditError::Misrouted {
                    slot,
                    token: head.token,
                });
            }
            match head.outcome {
                HeadOutcome::Pending => {}
                HeadOutcome::Delivered => {
                    life.consumed = true;
                    ledger.delivered[head.user] += 1;
                }
                HeadOutcome::Upgraded { token, pool } => {
                    life.consumed = true;
                    if !record.subphase.is_subset_of(pool) || pool == record.subphase {
                        return Err(AuditError::NotAnUpgrade {
                            slot,
                            pool,
                            subphase: record.subphase,
                        });
                    }
                    let child = Life {
                        wanted_by: head.user,
                        pool,
                        consumed: false,
                    };
                    if live.insert(token, child).is_some() {
                        return Err(AuditError::DuplicateToken { token });
                    }
                    ledger.upgraded += 1;
                }
            }
        }
    }
    if let Some((&token, _)) = live
        .iter()
        .filter(|(_, l)| !l.consumed)
        .min_by_key(|(t, _)| **t)
    {
        return Err(AuditError::Lost { token });
    }
    for (user, (&delivered, &need)) in ledger.delivered.iter().zip(&needed).enumerate() {
        if delivered != need {
            return Err(AuditError::DeliveryCount {
                user,
                delivered,
                needed: need,
            });
        }
    }
    Ok(ledger)
}

/// Every slot payload equals the recorded combination of library packets and
/// earlier slot payloads.
pub fn check_payloads(transcript: &Transcript, library: &Library) -> Result<(), AuditError> {
    for (slot, record) in transcript.slots.iter().enumerate() {
        let mut sum = Payload::zeroed(library.payload_len());
        for head in &record.heads {
            let part = match head.content {
                Content::Packet(p) => library.packet(p.file as usize, p.index as usize),
                Content::Slot(s) => {
                    if s as usize >= slot {
                        return Err(AuditError::Acausal {
                            slot,
                            source_slot: s as usize,
                        });
                    }
                    &transcript.slots[s as usize].payload
                }
            };
            sum.add_scaled(head.coeff, part);
        }
        if sum != record.payload {
            return Err(AuditError::Payload { slot });
        }
    }
    Ok(())
}

/// `content` as a combination of library packets.
pub fn expand_content(content: Content, transcript: &Transcript) -> BTreeMap<PacketId, FieldElem> {
    let mut memo: HashMap<u32, BTreeMap<PacketId, FieldElem>> = HashMap::new();
    expand(content, transcript, &mut memo)
}

fn expand(
    content: Content,
    transcript: &Transcript,
    memo: &mut HashMap<u32, BTreeMap<PacketId, FieldElem>>,
) -> BTreeMap<PacketId, FieldElem> {
    match content {
        Content::Packet(p) => BTreeMap::from([(p, FieldElem::ONE)]),
        Content::Slot(s) => {
            if let Some(done) = memo.get(&s) {
                return done.clone();
            }
            let mut out: BTreeMap<PacketId, FieldElem> = BTreeMap::new();
            for head in &transcript.slots[s as usize].heads {
                if head.coeff.is_zero() {
                    continue;
                }
                for (p, c) in expand(head.content, transcript, memo) {
                    let e = out.entry(p).or_insert(FieldElem::ZERO);
                    *e += head.coeff * c;
                }
            }
            out.retain(|_, c| !c.is_zero());
            memo.insert(s, out.clone());
            out
        }
    }
}

/// Replays delivery with the first `cut + 1` states of `original` followed by
/// an unrelated erasure pattern, and checks that slots `0..=cut` come out
/// identical: a slot's payload may depend only on earlier states.
pub fn check_causality(
    original: &Transcript,
    library: &Library,
    cache: &CacheTable,
    demands: &[usize],
    params: &SystemParams,
    cut: usize,
    fallback_seed: u64,
) -> Result<(), AuditError> {
    let prefix: Vec<ChannelState> = original
        .slots
        .iter()
        .take(cut + 1)
        .map(|s| s.state)
        .collect();
    let fallback =
        ErasureChannel::from_seed(params.users, params.delta, &SeedTree::new(fallback_seed));
    let mut channel = ScriptedChannel::new(params.users, prefix).with_fallback(fallback);
    let (replay, _) = run_delivery(library, cache, demands, params, &mut channel)?;
    for slot in 0..=cut.min(original.slots.len().saturating_sub(1)) {
        if replay.slots.get(slot) != original.slots.get(slot) {
            return Err(AuditError::Diverged { slot, cut });
        }
    }
    Ok(())
}
