//! Memoryless K-user broadcast packet erasure channel with state feedback.
//!
//! `transmit` takes the slot's payload before returning the slot's state, so
//! an encoder driving a [`BroadcastChannel`] can only react to a state after
//! it has committed to the payload it was about.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::gf::Payload;
use crate::rng::{SeedTree, Stream};
use crate::userset::UserSet;

/// Users whose output equalled the input in one slot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ChannelState {
    pub received: UserSet,
}

impl ChannelState {
    pub fn new(received: UserSet) -> Self {
        ChannelState { received }
    }

    #[inline]
    pub fn received_by(&self, user: usize) -> bool {
        self.received.contains(user)
    }
}

/// What each user saw in one slot.
#[derive(Debug, Clone, Copy)]
pub struct Reception<'a> {
    pub state: ChannelState,
    input: &'a Payload,
}

impl<'a> Reception<'a> {
    /// User `k`'s output, or `None` for an erasure.
    pub fn output(&self, user: usize) -> Option<&'a Payload> {
        self.state.received_by(user).then_some(self.input)
    }
}

pub trait BroadcastChannel {
    fn users(&self) -> usize;

    fn transmit<'a>(&mut self, input: &'a Payload) -> Reception<'a>;

    /// States of all slots so far, `S^n`.
    fn state_history(&self) -> &[ChannelState];

    fn slots(&self) -> usize {
        self.state_history().len()
    }
}

/// I.i.d. erasures: every user independently loses every slot w.p. `delta`.
#[derive(Debug, Clone)]
pub struct ErasureChannel {
    users: usize,
    delta: f64,
    rng: ChaCha8Rng,
    history: Vec<ChannelState>,
}

impl ErasureChannel {
    pub fn new(users: usize, delta: f64, rng: ChaCha8Rng) -> Self {
        assert!((0.0..1.0).contains(&delta), "delta must lie in [0, 1)");
        ErasureChannel {
            users,
            delta,
            rng,
            history: Vec::new(),
        }
    }

    pub fn from_seed(users: usize, delta: f64, seeds: &SeedTree) -> Self {
        Self::new(users, delta, seeds.stream(Stream::Channel))
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    fn draw(&mut self) -> ChannelState {
        let mut received = UserSet::EMPTY;
        for k in 0..self.users {
            if self.rng.random::<f64>() >= self.delta {
                received = received.with(k);
            }
        }
        ChannelState::new(received)
    }
}

impl BroadcastChannel for ErasureChannel {
    fn users(&self) -> usize {
        self.users
    }

    fn transmit<'a>(&mut self, input: &'a Payload) -> Reception<'a> {
        let state = self.draw();
        self.history.push(state);
        Reception { state, input }
    }

    fn state_history(&self) -> &[ChannelState] {
        &self.history
    }
}

/// Plays back a fixed state sequence, then defers to an optional fallback.
#[derive(Debug, Clone)]
pub struct ScriptedChannel {
    users: usize,
    script: Vec<ChannelState>,
    fallback: Option<ErasureChannel>,
    history: Vec<ChannelState>,
}

impl ScriptedChannel {
    pub fn new(users: usize, script: Vec<ChannelState>) -> Self {
        ScriptedChannel {
            users,
            script,
            fallback: None,
            history: Vec::new(),
        }
    }

    pub fn with_fallback(mut self, fallback: ErasureChannel) -> Self {
        self.fallback = Some(fallback);
        self
    }
}

impl BroadcastChannel for ScriptedChannel {
    fn users(&self) -> usize {
        self.users
    }

    fn transmit<'a>(&mut self, input: &'a Payload) -> Reception<'a> {
        let slot = self.history.len();
        let state = match self.script.get(slot) {
            Some(&s) => s,
            None => self
                .fallback
                .as_mut()
                .expect("scripted channel ran past its script")
                .draw(),
        };
        self.history.push(state);
        Reception { state, input }
    }

    fn state_history(&self) -> &[ChannelState] {
        &self.history
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_link_reaches_everyone() {
        let mut ch = ErasureChannel::from_seed(5, 0.0, &SeedTree::new(1));
        let x = Payload::zeroed(4);
        for _ in 0..1000 {
            let r = ch.transmit(&x);
            assert_eq!(r.state.received, UserSet::full(5));
            assert_eq!(r.output(3), Some(&x));
        }
    }

    #[test]
    fn near_total_erasure() {
        let mut ch = ErasureChannel::from_seed(3, 0.999, &SeedTree::new(2));
        let x = Payload::zeroed(1);
        let r = ch.transmit(&x);
        // P(any of 3 users receives) = 1 - 0.999^3 ~ 0.003; fixed seed
        assert!(r.state.received.is_empty());
        assert_eq!(r.output(0), None);
    }

    #[test]
    fn history_tracks_slots_and_replays() {
        let seeds = SeedTree::new(9);
        let mut a = ErasureChannel::from_seed(4, 0.4, &seeds);
        assert!(a.state_history().is_empty());
        let x = Payload::zeroed(2);
        for _ in 0..50 {
            a.transmit(&x);
        }
        assert_eq!(a.slots(), 50);
        let mut b = ErasureChannel::from_seed(4, 0.4, &seeds);
        for _ in 0..50 {
            b.transmit(&x);
        }
        assert_eq!(a.state_history(), b.state_history());
    }

    #[test]
    fn scripted_then_fallback() {
        let script = vec![
            ChannelState::new(UserSet::EMPTY),
            ChannelState::new(UserSet::singleton(1)),
        ];
        let mut ch = ScriptedChannel::new(3, script.clone())
            .with_fallback(ErasureChannel::from_seed(3, 0.0, &SeedTree::new(0)));
        let x = Payload::zeroed(1);
        assert_eq!(ch.transmit(&x).state, script[0]);
        assert_eq!(ch.transmit(&x).state, script[1]);
        assert_eq!(ch.transmit(&x).state.received, UserSet::full(3));
        assert_eq!(ch.slots(), 3);
    }
}
