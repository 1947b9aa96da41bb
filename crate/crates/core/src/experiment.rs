//! Monte Carlo replicas of full delivery runs, plus the order-start
//! experiment that seeds pools directly at a given order.

use rayon::prelude::*;
use serde::Serialize;

use crate::analytics::{binomial, order_start_plan, t_tot_nofb};
use crate::channel::ErasureChannel;
use crate::delivery::{
    check_payloads, check_token_conservation, decode_user, run_delivery, run_delivery_nofb,
    AuditError, Content, DecodeFailure, DeliveryEngine, DeliveryError, PacketId, Pools, SeedRecord,
    SeededPools, Token, Transcript,
};
use crate::gf::Payload;
use crate::params::SystemParams;
use crate::placement::{generate_library, place_decentralized};
use crate::rng::{SeedTree, Stream};
use crate::userset::UserSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReplicaOptions {
    pub decode: bool,
    pub no_feedback: bool,
    /// Check token conservation and slot payloads on the transcript.
    pub audit: bool,
}

/// How one user's decode attempt ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeOutcome {
    Exact,
    /// Decoder reported success but returned payloads differing from the file.
    Wrong,
    Failed(DecodeFailure),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaOutcome {
    pub replica: u64,
    pub seed: u64,
    pub slots: usize,
    pub predicted_slots: f64,
    /// Per subphase, in execution order.
    pub subphase_lengths: Vec<(UserSet, usize)>,
    /// Predicted length of one subphase of each order, indexed `1..=K`.
    pub predicted_subphase: Vec<f64>,
    /// Empty unless decoding was requested.
    pub decodes: Vec<DecodeOutcome>,
    /// Feedback-free baseline on the same erasure pattern, if requested.
    pub nofb_slots: Option<usize>,
    pub nofb_predicted: f64,
    /// Audit verdict, if requested.
    pub audit: Option<Result<(), AuditError>>,
}

impl ReplicaOutcome {
    pub fn relative_error(&self) -> f64 {
        relative_error(self.slots as f64, self.predicted_slots)
    }

    pub fn exact_decodes(&self) -> usize {
        self.decodes
            .iter()
            .filter(|d| **d == DecodeOutcome::Exact)
            .count()
    }
}

pub fn relative_error(measured: f64, predicted: f64) -> f64 {
    if predicted == 0.0 {
        if measured == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (measured - predicted).abs() / predicted
    }
}

/// Demands used by all experiments: user `k` asks for file `k`.
pub fn distinct_demands(users: usize) -> Vec<usize> {
    (0..users).collect()
}

/// One replica. Library, placement, channel and coding all derive from the
/// replica's seed; the baseline (if any) sees the same erasure pattern.
pub fn run_replica(
    params: &SystemParams,
    replica: u64,
    options: ReplicaOptions,
) -> Result<ReplicaOutcome, DeliveryError> {
    params.validate()?;
    let seeds = SeedTree::new(params.seed).replica(replica);
    let params = SystemParams {
        seed: seeds.master(),
        ..params.clone()
    };
    let library = generate_library(&params, &mut seeds.stream(Stream::Library));
    let cache = place_decentralized(&library, &params, &mut seeds.stream(Stream::Placement));
    let demands = distinct_demands(params.users);

    let mut channel = ErasureChannel::from_seed(params.users, params.delta, &seeds);
    let (transcript, report) = run_delivery(&library, &cache, &demands, &params, &mut channel)?;

    let decodes = if options.decode {
        (0..params.users)
            .map(
                |k| match decode_user(k, &transcript, &library, &cache, &demands) {
                    Ok(file) if file.as_slice() == library.file(demands[k]) => DecodeOutcome::Exact,
                    Ok(_) => DecodeOutcome::Wrong,
                    Err(e) => DecodeOutcome::Failed(e),
                },
            )
            .collect()
    } else {
        Vec::new()
    };

    let audit = options.audit.then(|| {
        check_token_conservation(&transcript)?;
        check_payloads(&transcript, &library)
    });

    let nofb_slots = if options.no_feedback {
        let mut channel = ErasureChannel::from_seed(params.users, params.delta, &seeds);
        let (nofb, _) = run_delivery_nofb(&library, &cache, &demands, &params, &mut channel)?;
        Some(nofb.total_slots())
    } else {
        None
    };

    Ok(ReplicaOutcome {
        replica,
        seed: params.seed,
        slots: report.slots,
        predicted_slots: report.predicted_slots,
        subphase_lengths: report.subphase_lengths,
        predicted_subphase: report.predicted_subphase,
        decodes,
        nofb_slots,
        nofb_predicted: params.file_packets as f64
            * t_tot_nofb(params.users, params.effective_p(), params.delta),
        audit,
    })
}

/// Replicas `0..count` in parallel, returned in replica order.
pub fn run_replicas(
    params: &SystemParams,
    count: u64,
    options: ReplicaOptions,
) -> Result<Vec<ReplicaOutcome>, DeliveryError> {
    let mut out = (0..count)
        .into_par_iter()
        .map(|r| run_replica(params, r, options))
        .collect::<Result<Vec<_>, _>>()?;
    out.sort_by_key(|o| o.replica);
    Ok(out)
}

/// Sample mean and (n-1) standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len();
        if n == 0 {
            return Summary {
                mean: f64::NAN,
                std: f64::NAN,
                count: 0,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Summary {
            mean,
            std,
            count: n,
        }
    }
}

/// Mean length of every subphase across replicas, with its prediction.
pub fn mean_subphase_lengths(outcomes: &[ReplicaOutcome]) -> Vec<(UserSet, f64, f64)> {
    let Some(first) = outcomes.first() else {
        return Vec::new();
    };
    first
        .subphase_lengths
        .iter()
        .enumerate()
        .map(|(i, &(label, _))| {
            let mean = outcomes
                .iter()
                .map(|o| o.subphase_lengths[i].1 as f64)
                .sum::<f64>()
                / outcomes.len() as f64;
            (label, mean, first.predicted_subphase[label.len()])
        })
        .collect()
}

/// Result of running delivery from pools seeded directly at one order.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderStartOutcome {
    pub users: usize,
    pub order: usize,
    pub per_subset: usize,
    pub slots: usize,
    pub predicted_slots: f64,
    /// Order-i packets delivered per slot, summed over users.
    pub sum_rate: f64,
    pub transcript: Transcript,
}

/// Seeds `per_subset` random packets for every user of every `order`-sized
/// subset, known to the rest of that subset, and runs all subphases.
pub fn run_order_start(
    users: usize,
    order: usize,
    per_subset: usize,
    delta: f64,
    seed: u64,
    payload_len: usize,
) -> OrderStartOutcome {
    assert!((1..=users).contains(&order), "order outside 1..=K");
    let seeds = SeedTree::new(seed);
    let mut content_rng = seeds.stream(Stream::Library);
    let mut pools = Pools::new(users);
    let mut seeded = Vec::new();
    let mut next_index = vec![0usize; users];
    let mut id = 0u64;
    for subset in UserSet::subsets_of_size(users, order) {
        for k in subset.iter() {
            for _ in 0..per_subset {
                let known_by = subset.without(k);
                let pool = pools.push(Token {
                    id,
                    wanted_by: k,
                    known_by,
                    content: Content::Packet(PacketId::new(k, next_index[k])),
                    payload: Payload::random(payload_len, &mut content_rng),
                });
                seeded.push(SeedRecord {
                    token: id,
                    wanted_by: k,
                    known_by,
                    pool,
                });
                next_index[k] += 1;
                id += 1;
            }
        }
    }
    let start = SeededPools {
        pools,
        seeded,
        next_id: id,
    };
    let mut engine = DeliveryEngine::new(start, payload_len, seeds.stream(Stream::Coding));
    let mut channel = ErasureChannel::from_seed(users, delta, &seeds);
    engine.run_all(&mut channel);
    let transcript = engine.into_transcript();
    let slots = transcript.total_slots();
    let plan = order_start_plan(users, delta, order, per_subset as f64);
    OrderStartOutcome {
        users,
        order,
        per_subset,
        slots,
        predicted_slots: plan.total(),
        // per-subset packet count, as in the order-rate bound
        sum_rate: binomial(users, order) * per_subset as f64 / slots as f64,
        transcript,
    }
}
