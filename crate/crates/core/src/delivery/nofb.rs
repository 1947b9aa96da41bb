//! Feedback-free baseline: decentralized coded-caching multicast messages,
//! each streamed until every intended user could decode it.
//!
//! The message for subset `S` carries, for each `k ∈ S`, the packets of
//! `d_k` cached by exactly `S \ {k}`; every other user of `S` caches that
//! part and can cancel it. The encoder sends random combinations of the
//! message without looking at the channel state. A genie stops the stream as
//! soon as each `k ∈ S` has received as many slots as it has unknowns in the
//! message; random combinations over GF(2^8) are innovative with high
//! probability, so the stream is counted rather than materialized.

use std::io;

use super::{validate_demands, DeliveryError, SimReport};
use crate::analytics::t_tot_nofb;
use crate::channel::{BroadcastChannel, ChannelState};
use crate::gf::Payload;
use crate::params::SystemParams;
use crate::placement::{subfile_partition, CacheTable, Library};
use crate::userset::UserSet;

/// One multicast message and the slots spent on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageRecord {
    pub subset: UserSet,
    /// `(user, packets that user needs from this message)`.
    pub parts: Vec<(usize, usize)>,
    pub start: usize,
    pub len: usize,
}

impl MessageRecord {
    /// Message length in packets: the largest part (parts are zero-padded).
    pub fn size(&self) -> usize {
        self.parts.iter().map(|p| p.1).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NoFeedbackTranscript {
    pub users: usize,
    /// Nonempty messages in transmission order.
    pub messages: Vec<MessageRecord>,
    pub states: Vec<ChannelState>,
}

impl NoFeedbackTranscript {
    pub fn total_slots(&self) -> usize {
        self.states.len()
    }

    /// Slots the same messages need over a perfect link.
    pub fn perfect_link_slots(&self) -> usize {
        self.messages.iter().map(MessageRecord::size).sum()
    }

    /// Text log, one `slot_index,subset_bitmask,state_bitmask` line per slot.
    pub fn write_log<W: io::Write>(&self, mut out: W) -> io::Result<()> {
        for m in &self.messages {
            for i in m.start..m.start + m.len {
                writeln!(
                    out,
                    "{},{},{}",
                    i,
                    m.subset.bits(),
                    self.states[i].received.bits()
                )?;
            }
        }
        Ok(())
    }
}

pub fn run_delivery_nofb<C: BroadcastChannel>(
    library: &Library,
    cache: &CacheTable,
    demands: &[usize],
    params: &SystemParams,
    channel: &mut C,
) -> Result<(NoFeedbackTranscript, SimReport), DeliveryError> {
    params.validate()?;
    validate_demands(demands, params.users, params.files)?;
    if cache.users() != params.users
        || channel.users() != params.users
        || cache.num_files() != params.files
    {
        return Err(DeliveryError::CacheMismatch);
    }
    let subfiles = subfile_partition(cache, params);
    let placeholder = Payload::zeroed(library.payload_len());
    let users = params.users;
    let mut transcript = NoFeedbackTranscript {
        users,
        ..Default::default()
    };
    for size in 1..=users {
        for subset in UserSet::subsets_of_size(users, size) {
            let parts: Vec<(usize, usize)> = subset
                .iter()
                .map(|k| (k, subfiles.entry(demands[k], subset.without(k)).len()))
                .collect();
            if parts.iter().all(|p| p.1 == 0) {
                continue;
            }
            let start = transcript.states.len();
            let mut heard = vec![0usize; users];
            while parts.iter().any(|&(k, need)| heard[k] < need) {
                let state = channel.transmit(&placeholder).state;
                for k in state.received.iter() {
                    heard[k] += 1;
                }
                transcript.states.push(state);
            }
            let len = transcript.states.len() - start;
            transcript.messages.push(MessageRecord {
                subset,
                parts,
                start,
                len,
            });
        }
    }

    let p = params.effective_p();
    let f = params.file_packets as f64;
    let predicted = f * t_tot_nofb(users, p, params.delta);
    let per_order = (0..=users)
        .map(|j| {
            if j == 0 {
                0.0
            } else {
                f * p.powi(j as i32 - 1) * (1.0 - p).powi((users - j + 1) as i32)
                    / (1.0 - params.delta)
            }
        })
        .collect();
    let lengths = transcript
        .messages
        .iter()
        .map(|m| (m.subset, m.len))
        .collect();
    let report = SimReport::new(
        transcript.total_slots(),
        lengths,
        users,
        predicted,
        per_order,
    );
    Ok((transcript, report))
}
