//! Attacker and defender utilities over an accuracy table.
//!
//! Rewards are accuracies `U(k|i)`; the defender gains them and pays `c_D`
//! per admitted client, the attacker loses them and pays `c_A` per
//! poisoned client. The two-client functions take symmetric-game inputs
//! (attack probabilities `p`, admission probabilities `q`); the n-client
//! functions take counts and weight `U(k|i)` by the hypergeometric
//! probability that `k` of `m` uniformly poisoned clients are admitted.

use crate::error::{check_probability, Error, Result};
use crate::table::AccuracyTable;

/// Per-client poisoning cost `c_A` and admission cost `c_D`, in accuracy units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameCosts {
    pub attack: f64,
    pub defense: f64,
}

impl GameCosts {
    pub fn new(attack: f64, defense: f64) -> Result<Self> {
        let costs = GameCosts { attack, defense };
        costs.validate()?;
        Ok(costs)
    }

    pub fn validate(&self) -> Result<()> {
        for (what, v) in [("attack cost", self.attack), ("defense cost", self.defense)] {
            if !v.is_finite() {
                return Err(Error::NonFinite(what));
            }
            if v < 0.0 {
                return Err(Error::OutOfRange { what, value: v });
            }
        }
        Ok(())
    }
}

/// Symmetric two-client strategies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedProfile {
    /// Per-client attack probability.
    pub p: f64,
    /// Per-client admission probability.
    pub q: f64,
}

impl MixedProfile {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        check_probability("p", p)?;
        check_probability("q", q)?;
        Ok(MixedProfile { p, q })
    }
}

/// How the admitted set lines up with the poisoned set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DefenseCase {
    /// Rejected clients absorb as many poisoned ones as possible.
    Best,
    /// Every poisoned client that can be admitted is.
    Worst,
}

/// Number of poisoned clients among the admitted ones for `n` clients,
/// `m` poisoned and `i` admitted.
pub fn bound_k(n: usize, m: usize, i: usize, case: DefenseCase) -> Result<usize> {
    if m > n {
        return Err(Error::OutOfRange {
            what: "poisoned count",
            value: m as f64,
        });
    }
    if i > n {
        return Err(Error::OutOfRange {
            what: "admitted count",
            value: i as f64,
        });
    }
    Ok(match case {
        DefenseCase::Best => m.saturating_sub(n - i),
        DefenseCase::Worst => m.min(i),
    })
}

/// Choice of the poisoned count `m` when tracing a defense bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttackerStance {
    /// `m` picked in the defender's favour (max over `m`).
    Benign,
    /// `m` picked against the defender (min over `m`).
    Adversarial,
}

impl AttackerStance {
    /// Upper bound: best case with benign `m`; lower bound: worst case with
    /// adversarial `m`.
    pub fn for_case(case: DefenseCase) -> Self {
        match case {
            DefenseCase::Best => AttackerStance::Benign,
            DefenseCase::Worst => AttackerStance::Adversarial,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPoint {
    pub value: f64,
    pub admitted: usize,
    pub poisoned: usize,
    pub k: usize,
}

/// Defense utility `U(k|i) - i c_D` optimized over the admitted count `i`,
/// with `k` from [`bound_k`] and the poisoned count chosen per `stance`.
/// Ties resolve to the smallest `i`, then the smallest `m`.
pub fn defense_bound_utility(
    table: &AccuracyTable,
    defense_cost: f64,
    case: DefenseCase,
    stance: AttackerStance,
) -> BoundPoint {
    let n = table.n();
    let mut best: Option<BoundPoint> = None;
    for i in 0..=n {
        let mut inner: Option<BoundPoint> = None;
        for m in 0..=n {
            let k = bound_k(n, m, i, case).expect("counts within 0..=n");
            let value = table.get(i, k) - i as f64 * defense_cost;
            let better = match (&inner, stance) {
                (None, _) => true,
                (Some(cur), AttackerStance::Benign) => value > cur.value,
                (Some(cur), AttackerStance::Adversarial) => value < cur.value,
            };
            if better {
                inner = Some(BoundPoint {
                    value,
                    admitted: i,
                    poisoned: m,
                    k,
                });
            }
        }
        let inner = inner.expect("m ranges over 0..=n");
        if best.is_none_or(|b| inner.value > b.value) {
            best = Some(inner);
        }
    }
    best.expect("i ranges over 0..=n")
}

fn check_two_client(table: &AccuracyTable) -> Result<()> {
    table.require_n(2)
}

/// Expected utility of a client that participates, given the other
/// client's admission probability and both attack probabilities.
pub fn client_utility_participate(
    q_other: f64,
    p_self: f64,
    p_other: f64,
    table: &AccuracyTable,
    defense_cost: f64,
) -> Result<f64> {
    check_probability("q_other", q_other)?;
    check_probability("p_self", p_self)?;
    check_probability("p_other", p_other)?;
    check_two_client(table)?;
    let u = |i, k| table.get(i, k) - defense_cost;
    let both_in = p_self * p_other * u(2, 2)
        + p_self * (1.0 - p_other) * u(2, 1)
        + (1.0 - p_self) * p_other * u(2, 1)
        + (1.0 - p_self) * (1.0 - p_other) * u(2, 0);
    let alone = p_self * u(1, 1) + (1.0 - p_self) * u(1, 0);
    Ok(q_other * both_in + (1.0 - q_other) * alone)
}

/// Expected utility of a client that stays out.
pub fn client_utility_decline(q_other: f64, p_other: f64, table: &AccuracyTable) -> Result<f64> {
    check_probability("q_other", q_other)?;
    check_probability("p_other", p_other)?;
    check_two_client(table)?;
    Ok(
        q_other * (p_other * table.get(1, 1) + (1.0 - p_other) * table.get(1, 0))
            + (1.0 - q_other) * table.get(0, 0),
    )
}

/// Client utility averaged over its own admission probability `q_self`.
pub fn client_avg_utility(
    q_self: f64,
    q_other: f64,
    p_self: f64,
    p_other: f64,
    table: &AccuracyTable,
    defense_cost: f64,
) -> Result<f64> {
    check_probability("q_self", q_self)?;
    let participate = client_utility_participate(q_other, p_self, p_other, table, defense_cost)?;
    let decline = client_utility_decline(q_other, p_other, table)?;
    Ok(q_self * participate + (1.0 - q_self) * decline)
}

/// Attacker utility of each pure attack choice in the two-client game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackerCases {
    pub both: f64,
    pub only_first: f64,
    pub only_second: f64,
    pub none: f64,
}

/// Expectations over the admission outcomes of both clients. Each case
/// pays its full poisoning cost whether or not the targets are admitted.
pub fn attacker_case_utilities(
    q1: f64,
    q2: f64,
    table: &AccuracyTable,
    attack_cost: f64,
) -> Result<AttackerCases> {
    check_probability("q1", q1)?;
    check_probability("q2", q2)?;
    check_two_client(table)?;
    let u = |i, k| table.get(i, k);
    let (w11, w10, w01, w00) = (
        q1 * q2,
        q1 * (1.0 - q2),
        (1.0 - q1) * q2,
        (1.0 - q1) * (1.0 - q2),
    );
    let c2 = 2.0 * attack_cost;
    let c1 = attack_cost;
    Ok(AttackerCases {
        both: w11 * (-u(2, 2) - c2)
            + w10 * (-u(1, 1) - c2)
            + w01 * (-u(1, 1) - c2)
            + w00 * (-u(0, 0) - c2),
        only_first: w11 * (-u(2, 1) - c1)
            + w10 * (-u(1, 1) - c1)
            + w01 * (-u(1, 0) - c1)
            + w00 * (-u(0, 0) - c1),
        only_second: w11 * (-u(2, 1) - c1)
            + w10 * (-u(1, 0) - c1)
            + w01 * (-u(1, 1) - c1)
            + w00 * (-u(0, 0) - c1),
        none: w11 * -u(2, 0) + w10 * -u(1, 0) + w01 * -u(1, 0) + w00 * -u(0, 0),
    })
}

/// Attacker utility under independent per-client attack probabilities.
pub fn attacker_avg_utility(
    p1: f64,
    p2: f64,
    q1: f64,
    q2: f64,
    table: &AccuracyTable,
    attack_cost: f64,
) -> Result<f64> {
    check_probability("p1", p1)?;
    check_probability("p2", p2)?;
    let cases = attacker_case_utilities(q1, q2, table, attack_cost)?;
    Ok(p1 * p2 * cases.both
        + p1 * (1.0 - p2) * cases.only_first
        + (1.0 - p1) * p2 * cases.only_second
        + (1.0 - p1) * (1.0 - p2) * cases.none)
}

fn binomial_exact(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for j in 0..k {
        // c * (n - j) is divisible by j + 1 at every step
        c = c * (n - j) as u128 / (j + 1) as u128;
    }
    c
}

fn ln_binomial(n: u64, k: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// Largest client count for which binomials are computed exactly.
pub const EXACT_BINOMIAL_LIMIT: usize = 64;

/// Probability that exactly `k` of `m` uniformly chosen poisoned clients
/// are among the `i` admitted ones out of `n`: `C(i,k) C(n-i,m-k) / C(n,m)`.
/// Impossible combinations have weight 0.
pub fn hypergeom_weight(n: usize, m: usize, i: usize, k: usize) -> f64 {
    if m > n || i > n || k > i || k > m || m - k > n - i {
        return 0.0;
    }
    let (n, m, i, k) = (n as u64, m as u64, i as u64, k as u64);
    if n as usize <= EXACT_BINOMIAL_LIMIT {
        let num = binomial_exact(i, k) * binomial_exact(n - i, m - k);
        let den = binomial_exact(n, m);
        num as f64 / den as f64
    } else {
        libm::exp(ln_binomial(i, k) + ln_binomial(n - i, m - k) - ln_binomial(n, m))
    }
}

fn check_counts(table: &AccuracyTable, i: usize, m: usize) -> Result<()> {
    let n = table.n();
    if i > n {
        return Err(Error::OutOfRange {
            what: "admitted count",
            value: i as f64,
        });
    }
    if m > n {
        return Err(Error::OutOfRange {
            what: "poisoned count",
            value: m as f64,
        });
    }
    Ok(())
}

/// Expected accuracy with `i` admitted and `m` uniformly poisoned clients.
pub fn expected_accuracy(table: &AccuracyTable, i: usize, m: usize) -> f64 {
    let n = table.n();
    (0..=m.min(i))
        .map(|k| hypergeom_weight(n, m, i, k) * table.get(i, k))
        .sum()
}

/// `-E[U(k|i)] - m c_A`.
pub fn attack_utility_nm(
    i: usize,
    m: usize,
    table: &AccuracyTable,
    attack_cost: f64,
) -> Result<f64> {
    check_counts(table, i, m)?;
    Ok(-expected_accuracy(table, i, m) - m as f64 * attack_cost)
}

/// `E[U(k|i)] - i c_D`.
pub fn defense_utility_nm(
    i: usize,
    m: usize,
    table: &AccuracyTable,
    defense_cost: f64,
) -> Result<f64> {
    check_counts(table, i, m)?;
    Ok(expected_accuracy(table, i, m) - i as f64 * defense_cost)
}
