//! Closed-form rates, completion times and phase-length recursions for the
//! cache-enabled broadcast erasure channel with state feedback.
//!
//! Conventions:
//! - `users` is K, `p` the caching probability M/N, `delta` the erasure
//!   probability.
//! - Order-i rates are *sum* rates over all C(K, i) target subsets. The
//!   per-subset value is `order_rate_bound(..) / binomial(K, i)`.
//! - Completion times are in slots per packet of file size (multiply by F).
//! - `p = 1` yields `f64::INFINITY` rates and zero times instead of errors.

use thiserror::Error;

use crate::userset::UserSet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalyticsError {
    #[error("need 1 <= i < j <= K, got i={i}, j={j}, K={users}")]
    Transition { i: usize, j: usize, users: usize },
    #[error("need 1 <= j <= K, got j={j}, K={users}")]
    Order { j: usize, users: usize },
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn order_weight(k: usize, p: f64, delta: f64) -> f64 {
    (1.0 - p).powi(k as i32) / (1.0 - delta.powi(k as i32))
}

/// Minimum slots per file-size unit to deliver one distinct file to each of
/// `users` users: `sum_k (1-p)^k / (1-delta^k)`.
pub fn t_tot(users: usize, p: f64, delta: f64) -> f64 {
    (1..=users).map(|k| order_weight(k, p, delta)).sum()
}

/// Same load without feedback: every packet must reach all its users,
/// `sum_k (1-p)^k / (1-delta)`.
pub fn t_tot_nofb(users: usize, p: f64, delta: f64) -> f64 {
    (1..=users).map(|k| (1.0 - p).powi(k as i32)).sum::<f64>() / (1.0 - delta)
}

/// Per-user symmetric rate on the boundary of the achievable region.
pub fn symmetric_rate(users: usize, p: f64, delta: f64) -> f64 {
    let t = t_tot(users, p, delta);
    if t == 0.0 {
        f64::INFINITY
    } else {
        1.0 / t
    }
}

/// Perfect-link load of decentralized coded caching, `(1/p)(1-p)(1-(1-p)^K)`.
pub fn perfect_link_load(users: usize, p: f64) -> f64 {
    if p == 0.0 {
        return users as f64;
    }
    (1.0 - p) * (1.0 - (1.0 - p).powi(users as i32)) / p
}

/// Per-user rates `(R_1, .., R_K)` in packets per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint(pub Vec<f64>);

impl RatePoint {
    pub fn symmetric(users: usize, rate: f64) -> Self {
        RatePoint(vec![rate; users])
    }

    /// Corner of the region: `R_sym(|set|)` on `set`, zero elsewhere.
    pub fn vertex(users: usize, set: UserSet, p: f64, delta: f64) -> Self {
        let r = symmetric_rate(set.len(), p, delta);
        RatePoint(
            (0..users)
                .map(|k| if set.contains(k) { r } else { 0.0 })
                .collect(),
        )
    }

    pub fn users(&self) -> usize {
        self.0.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Achievability {
    pub achievable: bool,
    /// `binding[k]` is the user paired with weight k+1 in the tightest
    /// constraint.
    pub binding: Vec<usize>,
    pub weighted_sum: f64,
    /// `1 - weighted_sum`; negative when outside the region.
    pub slack: f64,
}

const REGION_TOL: f64 = 1e-12;

fn weighted_sum(weights: &[f64], rates: &[f64], perm: &[usize]) -> f64 {
    weights.iter().zip(perm).map(|(w, &u)| w * rates[u]).sum()
}

/// Tightest permutation constraint found by trying all K! orderings.
pub fn tightest_constraint_exhaustive(rates: &RatePoint, p: f64, delta: f64) -> (f64, Vec<usize>) {
    let users = rates.users();
    let weights: Vec<f64> = (1..=users).map(|k| order_weight(k, p, delta)).collect();
    let mut perm: Vec<usize> = (0..users).collect();
    let mut best = (weighted_sum(&weights, &rates.0, &perm), perm.clone());
    // Heap's algorithm
    let mut c = vec![0usize; users];
    let mut i = 0;
    while i < users {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let s = weighted_sum(&weights, &rates.0, &perm);
            if s > best.0 {
                best = (s, perm.clone());
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Checks `sum_k w_k R_{pi_k} <= 1` for every permutation `pi`, where
/// `w_k = (1-p)^k / (1-delta^k)`.
///
/// The weights are non-increasing in k, so the binding permutation pairs
/// the largest rate with `w_1`, the next with `w_2`, and so on. For K <= 6
/// the result is taken from an exhaustive search instead.
pub fn is_achievable(rates: &RatePoint, p: f64, delta: f64) -> Achievability {
    let users = rates.users();
    let (weighted_sum_max, binding) = if users <= 6 {
        tightest_constraint_exhaustive(rates, p, delta)
    } else {
        let weights: Vec<f64> = (1..=users).map(|k| order_weight(k, p, delta)).collect();
        let mut order: Vec<usize> = (0..users).collect();
        order.sort_by(|&a, &b| rates.0[b].total_cmp(&rates.0[a]).then(a.cmp(&b)));
        (weighted_sum(&weights, &rates.0, &order), order)
    };
    Achievability {
        achievable: weighted_sum_max <= 1.0 + REGION_TOL,
        binding,
        weighted_sum: weighted_sum_max,
        slack: 1.0 - weighted_sum_max,
    }
}

fn check_order(users: usize, j: usize) -> Result<(), AnalyticsError> {
    if j == 0 || j > users {
        return Err(AnalyticsError::Order { j, users });
    }
    Ok(())
}

/// Probability that an order-i packet becomes order-j for its user:
/// `delta^(K-j+1) (1-delta)^(j-i)`.
pub fn alpha(users: usize, delta: f64, i: usize, j: usize) -> Result<f64, AnalyticsError> {
    if i == 0 || i >= j || j > users {
        return Err(AnalyticsError::Transition { i, j, users });
    }
    Ok(delta.powi((users - j + 1) as i32) * (1.0 - delta).powi((j - i) as i32))
}

/// Probability that an order-j packet is consumed in a slot:
/// `1 - delta^(K-j+1)`.
pub fn beta(users: usize, delta: f64, j: usize) -> Result<f64, AnalyticsError> {
    check_order(users, j)?;
    Ok(1.0 - delta.powi((users - j + 1) as i32))
}

pub fn transition_params(
    users: usize,
    delta: f64,
    i: usize,
    j: usize,
) -> Result<(f64, f64), AnalyticsError> {
    Ok((alpha(users, delta, i, j)?, beta(users, delta, j)?))
}

// Indices are validated by the callers' loop bounds.
fn alpha_unchecked(users: usize, delta: f64, i: usize, j: usize) -> f64 {
    delta.powi((users - j + 1) as i32) * (1.0 - delta).powi((j - i) as i32)
}

fn beta_unchecked(users: usize, delta: f64, j: usize) -> f64 {
    1.0 - delta.powi((users - j + 1) as i32)
}

/// Expected per-subphase lengths and packet flows of the multi-phase
/// delivery, all indexed by order `1..=K` (index 0 unused).
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePlan {
    pub users: usize,
    /// `t[j]`: length of one subphase of order j.
    pub t: Vec<f64>,
    /// `upgrades[i][j]`: order-j packets per user created by one order-i
    /// subphase.
    pub upgrades: Vec<Vec<f64>>,
    /// `from_cache[j]`: order-j packets per user and target subset created
    /// by placement; `from_cache[1]` is the private (uncached) count.
    pub from_cache: Vec<f64>,
}

impl PhasePlan {
    /// Length of the whole order-j phase, `C(K, j) t_j`.
    pub fn phase_len(&self, j: usize) -> f64 {
        binomial(self.users, j) * self.t[j]
    }

    pub fn total(&self) -> f64 {
        (1..=self.users).map(|j| self.phase_len(j)).sum()
    }
}

/// Phase plan for a file size of `file_packets` with caching probability `p`.
///
/// Placement contributes `N_0 = F (1-p)^K` private packets per user and
/// `N_{0->j} = F p^(j-1) (1-p)^(K-j+1)` order-j packets per user and subset.
/// Then `t_1 = N_0 / beta_1` and
/// `t_j = (N_{0->j} + sum_{i<j} C(j-1, i-1) t_i alpha_{i->j}) / beta_j`.
pub fn phase_plan(users: usize, delta: f64, p: f64, file_packets: f64) -> PhasePlan {
    let mut t = vec![0.0; users + 1];
    let mut upgrades = vec![vec![0.0; users + 1]; users + 1];
    let mut from_cache = vec![0.0; users + 1];
    for (j, slot) in from_cache.iter_mut().enumerate().skip(1) {
        *slot = file_packets * p.powi(j as i32 - 1) * (1.0 - p).powi((users - j + 1) as i32);
    }
    t[1] = from_cache[1] / beta_unchecked(users, delta, 1);
    for j in 2..=users {
        let mut queued = from_cache[j];
        for i in 1..j {
            upgrades[i][j] = t[i] * alpha_unchecked(users, delta, i, j);
            queued += binomial(j - 1, i - 1) * upgrades[i][j];
        }
        t[j] = queued / beta_unchecked(users, delta, j);
    }
    PhasePlan {
        users,
        t,
        upgrades,
        from_cache,
    }
}

/// Cache-free plan starting from `private` uncached packets per user.
pub fn feedback_only_plan(users: usize, delta: f64, private: f64) -> PhasePlan {
    phase_plan(users, delta, 0.0, private)
}

/// Upper bound (achieved with feedback) on the sum rate of order-i packets:
/// `C(K, i) / sum_{k=1}^{K-i+1} C(K-k, i-1) / (1-delta^k)`.
pub fn order_rate_bound(users: usize, order: usize, delta: f64) -> f64 {
    let denom: f64 = (1..=users + 1 - order)
        .map(|k| binomial(users - k, order - 1) / (1.0 - delta.powi(k as i32)))
        .sum();
    binomial(users, order) / denom
}

/// Subphase lengths when delivery starts at phase `order` with `n`
/// packets per user in every order-sized subset.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderStartPlan {
    pub users: usize,
    pub order: usize,
    pub n: f64,
    /// `t[j]` for `j >= order`; zero below.
    pub t: Vec<f64>,
    /// Sum rate `C(K, i) n / sum_j C(K, j) t_j`.
    pub rate: f64,
}

impl OrderStartPlan {
    pub fn total(&self) -> f64 {
        (self.order..=self.users)
            .map(|j| binomial(self.users, j) * self.t[j])
            .sum()
    }
}

pub fn order_start_plan(users: usize, delta: f64, order: usize, n: f64) -> OrderStartPlan {
    assert!(order >= 1 && order <= users, "order outside 1..=K");
    let mut t = vec![0.0; users + 1];
    t[order] = n / beta_unchecked(users, delta, order);
    for j in order + 1..=users {
        let queued: f64 = (order..j)
            .map(|l| binomial(j - 1, l - 1) * t[l] * alpha_unchecked(users, delta, l, j))
            .sum();
        t[j] = queued / beta_unchecked(users, delta, j);
    }
    let mut plan = OrderStartPlan {
        users,
        order,
        n,
        t,
        rate: 0.0,
    };
    plan.rate = binomial(users, order) * n / plan.total();
    plan
}

/// Regrouped lengths `U_j = sum_{l=i}^{j} C(j-1, l-1) t_l` for an order-i
/// start, straight from their definition.
pub fn grouped_lengths_direct(users: usize, delta: f64, order: usize, n: f64) -> Vec<f64> {
    let plan = order_start_plan(users, delta, order, n);
    let mut u = vec![0.0; users + 1];
    for (j, slot) in u.iter_mut().enumerate().skip(order) {
        *slot = (order..=j)
            .map(|l| binomial(j - 1, l - 1) * plan.t[l])
            .sum();
    }
    u
}

/// The same regrouped lengths via the alternating-sign recursion
/// `U_j = (1/beta_j) sum_{l=1}^{j-i} C(j-1, l) (-1)^(l+1) beta_{j-l} U_{j-l}`.
pub fn grouped_lengths_recursive(users: usize, delta: f64, order: usize, n: f64) -> Vec<f64> {
    let mut u = vec![0.0; users + 1];
    u[order] = n / beta_unchecked(users, delta, order);
    for j in order + 1..=users {
        let mut acc = 0.0;
        for l in 1..=j - order {
            let sign = if l % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * binomial(j - 1, l) * beta_unchecked(users, delta, j - l) * u[j - l];
        }
        u[j] = acc / beta_unchecked(users, delta, j);
    }
    u
}

/// Closed form `U_j = (n / beta_j) C(j-1, j-i)`.
pub fn grouped_lengths_closed(users: usize, delta: f64, order: usize, n: f64) -> Vec<f64> {
    let mut u = vec![0.0; users + 1];
    for (j, slot) in u.iter_mut().enumerate().skip(order) {
        *slot = n / beta_unchecked(users, delta, j) * binomial(j - 1, j - order);
    }
    u
}

/// Order-1 sum rate written through the higher-order sum rates,
/// `K N_0 / (K N_0 / beta_1 + sum_{j>=2} C(K, j) N_{1->j} / R^j)`,
/// with `R^j` from [`order_rate_bound`]. Equals `K * R_sym(K, 0, delta)`.
pub fn order1_rate_decomposed(users: usize, delta: f64) -> f64 {
    cache_order1_rate(users, 0.0, delta)
}

/// Order-1 sum rate with placement-generated packets included:
/// `K F / (K N_0 / beta_1 + sum_{j>=2} C(K, j) (N_{0->j} + N_{1->j}) / R^j)`,
/// normalized to `F = 1`. Equals `K * R_sym(K, p, delta)`.
pub fn cache_order1_rate(users: usize, p: f64, delta: f64) -> f64 {
    let private = (1.0 - p).powi(users as i32);
    let t1 = private / beta_unchecked(users, delta, 1);
    let mut denom = users as f64 * t1;
    for j in 2..=users {
        let from_cache = p.powi(j as i32 - 1) * (1.0 - p).powi((users - j + 1) as i32);
        let from_phase1 = t1 * alpha_unchecked(users, delta, 1, j);
        denom +=
            binomial(users, j) * (from_cache + from_phase1) / order_rate_bound(users, j, delta);
    }
    if denom == 0.0 {
        f64::INFINITY
    } else {
        users as f64 / denom
    }
}

/// Largest `|t_j(N_1) - sum_{i=2}^{j} t^i_j(N_{1->i})|` over `j = 2..=K`:
/// the feedback-only subphase lengths split by the order at which each
/// packet entered the high-order phases.
pub fn split_recursion_residual(users: usize, delta: f64, n1: f64) -> f64 {
    let plan = feedback_only_plan(users, delta, n1);
    let t1 = plan.t[1];
    let starts: Vec<OrderStartPlan> = (2..=users)
        .map(|i| order_start_plan(users, delta, i, t1 * alpha_unchecked(users, delta, 1, i)))
        .collect();
    (2..=users)
        .map(|j| {
            let rhs: f64 = starts.iter().filter(|s| s.order <= j).map(|s| s.t[j]).sum();
            (plan.t[j] - rhs).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(10, 0), 1.0);
        assert_eq!(binomial(3, 4), 0.0);
        assert_eq!(binomial(16, 8), 12870.0);
    }

    #[test]
    fn symmetric_rate_examples() {
        assert!(close(symmetric_rate(3, 0.0, 0.0), 1.0 / 3.0, 1e-15));
        assert_eq!(symmetric_rate(4, 1.0, 0.3), f64::INFINITY);
        assert!(close(symmetric_rate(2, 0.0, 0.5), 0.3, 1e-15));
    }

    #[test]
    fn t_tot_examples() {
        assert!(close(t_tot(10, 0.0, 0.0), 10.0, 1e-15));
        // 1/(1-0.6^k) summed over k = 1..10
        let direct: f64 = (1..=10).map(|k| 1.0 / (1.0 - 0.6f64.powi(k))).sum();
        assert!((t_tot(10, 0.0, 0.6) - 12.6823).abs() < 1e-3);
        assert!(close(t_tot(10, 0.0, 0.6), direct, 1e-15));
        for &p in &[0.05f64, 0.2, 0.5, 0.9, 1.0] {
            let n_over_m = 1.0 / p;
            let mn = n_over_m * (1.0 - p) * (1.0 - (1.0 - p).powi(7));
            assert!(close(t_tot(7, p, 0.0), mn, 1e-12));
        }
    }

    #[test]
    fn t_tot_nofb_examples() {
        assert!(close(t_tot_nofb(6, 0.3, 0.0), t_tot(6, 0.3, 0.0), 1e-15));
        let expected: f64 = (1..=10).map(|k| 0.8f64.powi(k)).sum::<f64>() / 0.4;
        assert!(close(t_tot_nofb(10, 0.2, 0.6), expected, 1e-15));
        assert_eq!(t_tot_nofb(5, 1.0, 0.4), 0.0);
        assert!(close(t_tot_nofb(10, 0.0, 0.6), 25.0, 1e-14));
    }

    #[test]
    fn region_checks() {
        for users in 2..=8 {
            let r = symmetric_rate(users, 0.3, 0.4);
            let sym = RatePoint::symmetric(users, r);
            let a = is_achievable(&sym, 0.3, 0.4);
            assert!(a.achievable);
            assert!(a.slack.abs() < 1e-12);
            let over = RatePoint::symmetric(users, r * (1.0 + 1e-6));
            assert!(!is_achievable(&over, 0.3, 0.4).achievable);
        }
        let v = RatePoint::vertex(3, UserSet::from_users([0, 1]), 1.0 / 3.0, 0.3);
        assert_eq!(v.0[2], 0.0);
        assert!(is_achievable(&v, 1.0 / 3.0, 0.3).achievable);
    }

    #[test]
    fn sorted_pairing_matches_exhaustive() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let users = rng.random_range(2..=6);
            let rates = RatePoint((0..users).map(|_| rng.random::<f64>() * 0.5).collect());
            let (p, delta) = (rng.random::<f64>(), rng.random::<f64>() * 0.95);
            let (ex, _) = tightest_constraint_exhaustive(&rates, p, delta);
            let weights: Vec<f64> = (1..=users).map(|k| order_weight(k, p, delta)).collect();
            let mut sorted = rates.0.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let greedy: f64 = weights.iter().zip(&sorted).map(|(w, r)| w * r).sum();
            assert!(close(ex, greedy, 1e-12));
        }
    }

    #[test]
    fn transition_examples() {
        let delta = 0.35;
        assert!(close(beta(5, delta, 5).unwrap(), 1.0 - delta, 1e-15));
        assert!(close(
            alpha(3, delta, 1, 3).unwrap(),
            delta * (1.0 - delta).powi(2),
            1e-15
        ));
        for j in 1..=4 {
            assert_eq!(beta(4, 0.0, j).unwrap(), 1.0);
            for i in 1..j {
                assert_eq!(alpha(4, 0.0, i, j).unwrap(), 0.0);
            }
        }
        assert!(alpha(3, delta, 2, 2).is_err());
        assert!(alpha(3, delta, 0, 2).is_err());
        assert!(alpha(3, delta, 1, 4).is_err());
        assert!(beta(3, delta, 0).is_err());
        assert!(transition_params(3, delta, 1, 2).is_ok());
    }

    #[test]
    fn phase_plan_three_users() {
        let (f, p, d) = (1000.0, 0.4, 0.3);
        let plan = phase_plan(3, d, p, f);
        assert!(close(plan.from_cache[1], f * (1.0 - p).powi(3), 1e-14));
        assert!(close(plan.from_cache[2], f * p * (1.0 - p).powi(2), 1e-14));
        assert!(close(plan.from_cache[3], f * p * p * (1.0 - p), 1e-14));
        let t3 = (plan.from_cache[3] + plan.upgrades[1][3] + 2.0 * plan.upgrades[2][3]) / (1.0 - d);
        assert!(close(plan.t[3], t3, 1e-14));
        let t2 = (plan.upgrades[1][2] + plan.from_cache[2]) / (1.0 - d * d);
        assert!(close(plan.t[2], t2, 1e-14));
        // upgrades out of phase 1 for a receiver set of size j
        for j in 1..=2usize {
            let n1 = plan.from_cache[1] / (1.0 - d.powi(3))
                * (1.0 - d).powi(j as i32)
                * d.powi(3 - j as i32);
            assert!(close(plan.upgrades[1][j + 1], n1, 1e-14));
        }
        assert!(close(plan.total(), f * t_tot(3, p, d), 1e-12));
    }

    #[test]
    fn phase_plan_without_cache_is_feedback_only() {
        let a = phase_plan(5, 0.4, 0.0, 300.0);
        let b = feedback_only_plan(5, 0.4, 300.0);
        assert_eq!(a, b);
        assert!(b.from_cache[2..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn order_rate_examples() {
        for users in 2..=10 {
            for &d in &[0.0, 0.2, 0.55, 0.9] {
                assert!(close(order_rate_bound(users, users, d), 1.0 - d, 1e-13));
                assert!(close(
                    order_rate_bound(users, 1, d),
                    users as f64 * symmetric_rate(users, 0.0, d),
                    1e-13
                ));
            }
            for i in 1..=users {
                assert!(close(order_rate_bound(users, i, 0.0), 1.0, 1e-13));
            }
        }
    }

    #[test]
    fn order_start_examples() {
        let plan = order_start_plan(4, 0.3, 4, 50.0);
        assert!(close(plan.t[4], 50.0 / 0.7, 1e-14));
        assert!(close(plan.rate, 0.7, 1e-14));
        for users in 2..=8 {
            for i in 1..=users {
                let plan = order_start_plan(users, 0.45, i, 123.0);
                assert!(close(plan.rate, order_rate_bound(users, i, 0.45), 1e-12));
                let d = grouped_lengths_direct(users, 0.45, i, 123.0);
                let r = grouped_lengths_recursive(users, 0.45, i, 123.0);
                let c = grouped_lengths_closed(users, 0.45, i, 123.0);
                for j in i..=users {
                    assert!(close(d[j], c[j], 1e-12), "direct K={users} i={i} j={j}");
                    assert!(close(r[j], c[j], 1e-12), "recursive K={users} i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn decomposed_rates() {
        assert!(close(order1_rate_decomposed(6, 0.0), 1.0, 1e-14));
        for &d in &[0.1, 0.5, 0.8] {
            let closed = 2.0 * (1.0 - d * d) / (2.0 + d);
            assert!(close(order1_rate_decomposed(2, d), closed, 1e-14));
        }
        assert!(close(
            order1_rate_decomposed(5, 0.3),
            5.0 * symmetric_rate(5, 0.0, 0.3),
            1e-12
        ));
        assert!(close(
            cache_order1_rate(4, 0.0, 0.3),
            order1_rate_decomposed(4, 0.3),
            1e-15
        ));
        for &(p, d) in &[(0.2f64, 0.1f64), (0.5, 0.6), (0.9, 0.35)] {
            let three = 3.0
                / ((1.0 - p) / (1.0 - d)
                    + (1.0 - p).powi(2) / (1.0 - d * d)
                    + (1.0 - p).powi(3) / (1.0 - d.powi(3)));
            assert!(close(cache_order1_rate(3, p, d), three, 1e-12));
        }
        assert!(close(
            cache_order1_rate(10, 0.2, 0.6),
            10.0 * symmetric_rate(10, 0.2, 0.6),
            1e-12
        ));
        assert_eq!(cache_order1_rate(4, 1.0, 0.2), f64::INFINITY);
    }

    #[test]
    fn split_recursion() {
        let plan = feedback_only_plan(5, 0.4, 100.0);
        let n12 = plan.upgrades[1][2];
        assert!(close(plan.t[2], n12 / beta(5, 0.4, 2).unwrap(), 1e-14));
        assert!(close(
            plan.t[2],
            order_start_plan(5, 0.4, 2, n12).t[2],
            1e-14
        ));
        assert!(split_recursion_residual(6, 0.4, 1000.0) < 1e-10);
        assert_eq!(split_recursion_residual(6, 0.0, 1000.0), 0.0);
        let zero = feedback_only_plan(6, 0.0, 1000.0);
        assert!(zero.t[2..].iter().all(|&t| t == 0.0));
    }

    #[test]
    fn monotone_and_dominated() {
        for users in [2usize, 5, 10] {
            for a in 0..10 {
                let p = a as f64 / 10.0;
                for b in 0..9 {
                    let d = b as f64 / 10.0;
                    let t = t_tot(users, p, d);
                    assert!(t_tot(users, p + 0.1, d) < t);
                    assert!(t_tot(users, p, d + 0.1) > t);
                    let nofb = t_tot_nofb(users, p, d);
                    if d == 0.0 {
                        assert!(close(t, nofb, 1e-14));
                    } else {
                        assert!(t < nofb);
                    }
                    assert!(close(symmetric_rate(users, p, d) * t, 1.0, 1e-14));
                }
            }
            assert_eq!(t_tot(users, 1.0, 0.5), t_tot_nofb(users, 1.0, 0.5));
        }
    }
}
