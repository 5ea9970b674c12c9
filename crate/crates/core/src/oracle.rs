//! Exact ground truth for small instances.
//!
//! Round outcomes form a binary tree over win/loss strings. Distinct strings
//! often reach the same (line, balance) state, so the tree is evaluated as a
//! layered sweep over a map of live states with merged probability masses;
//! the merging is what keeps depths of 20+ bets tractable.
//!
//! Probabilities are generic over the scalar: `f64` for everyday use, exact
//! rationals for depth-proof identities. At `p = 1/2` every mass is a dyadic
//! rational with denominator `2^depth`, so `f64` mass arithmetic is itself
//! exact up to depth 52; expected-balance terms multiply masses by balances,
//! so they stay exact while `2^depth * (balance + line sum)` fits in 2^53.

use std::collections::BTreeMap;
use std::ops::Sub;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::engine::BetSequence;

/// Probability scalar for the exact sweeps.
pub trait Probability:
    Clone + PartialOrd + Zero + One + Sub<Output = Self>
{
    fn from_count(value: u64) -> Self;
}

impl Probability for f64 {
    fn from_count(value: u64) -> Self {
        value as f64
    }
}

impl Probability for BigRational {
    fn from_count(value: u64) -> Self {
        BigRational::from_integer(BigInt::from(value))
    }
}

/// Win probability one half, exact.
pub fn half() -> BigRational {
    BigRational::new(BigInt::from(1), BigInt::from(2))
}

/// Exact outcome masses of one round, with the tree truncated at a depth
/// limit. Mass still live at the limit is reported as unresolved, and the
/// expected final balance is returned as an interval bounding it.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactOutcome<T> {
    pub p_win: T,
    pub p_stop: T,
    pub p_draw: T,
    pub p_unresolved: T,
    pub expected_balance_min: T,
    pub expected_balance_max: T,
}

impl<T: Probability> ExactOutcome<T> {
    /// Total accounted mass; exactly one for exact scalars.
    pub fn total_mass(&self) -> T {
        self.p_win.clone()
            + self.p_stop.clone()
            + self.p_draw.clone()
            + self.p_unresolved.clone()
    }

    pub fn fully_resolved(&self) -> bool {
        self.p_unresolved.is_zero()
    }
}

/// Win/stop/draw probabilities and expected-balance bounds by exact dynamic
/// programming over (line, balance) states, in `f64`.
pub fn exact_outcome(
    sequence: &BetSequence,
    balance: u64,
    win_probability: f64,
    depth_limit: u64,
) -> ExactOutcome<f64> {
    assert!(
        win_probability > 0.0 && win_probability < 1.0,
        "win probability must lie in (0,1)"
    );
    exact_outcome_generic(sequence, balance, win_probability, depth_limit)
}

/// [`exact_outcome`] over exact rationals; immune to rounding and underflow
/// at any depth.
pub fn exact_outcome_rational(
    sequence: &BetSequence,
    balance: u64,
    win_probability: BigRational,
    depth_limit: u64,
) -> ExactOutcome<BigRational> {
    assert!(
        win_probability > BigRational::zero() && win_probability < BigRational::one(),
        "win probability must lie in (0,1)"
    );
    exact_outcome_generic(sequence, balance, win_probability, depth_limit)
}

fn exact_outcome_generic<T: Probability>(
    sequence: &BetSequence,
    balance: u64,
    win_probability: T,
    depth_limit: u64,
) -> ExactOutcome<T> {
    assert!(depth_limit >= 1, "depth limit must be at least 1");
    let loss_probability = T::one() - win_probability.clone();
    let ceiling = balance
        .checked_add(sequence.sum())
        .expect("balance + line sum overflows u64");

    let mut p_win = T::zero();
    let mut p_stop = T::zero();
    // Draws happen only at the root (zero bets placed), never inside the tree.
    let p_draw = T::zero();
    let mut expected_resolved = T::zero();

    // Root terminals: an empty line is already won; an unaffordable opening
    // stake is a draw (no bet ever placed).
    match sequence.next_stake() {
        None => {
            return ExactOutcome {
                p_win: T::one(),
                p_stop,
                p_draw,
                p_unresolved: T::zero(),
                expected_balance_min: T::from_count(balance),
                expected_balance_max: T::from_count(balance),
            }
        }
        Some(stake) if stake > balance => {
            return ExactOutcome {
                p_win,
                p_stop,
                p_draw: T::one(),
                p_unresolved: T::zero(),
                expected_balance_min: T::from_count(balance),
                expected_balance_max: T::from_count(balance),
            }
        }
        Some(_) => {}
    }

    // Live states are always playable: nonempty line, affordable stake.
    // BTreeMap keeps the sweep order deterministic for inexact scalars.
    let mut live: BTreeMap<(BetSequence, u64), T> = BTreeMap::new();
    live.insert((sequence.clone(), balance), T::one());

    for _ in 0..depth_limit {
        if live.is_empty() {
            break;
        }
        let mut next: BTreeMap<(BetSequence, u64), T> = BTreeMap::new();
        for ((line, bal), mass) in std::mem::take(&mut live) {
            let stake = line.next_stake().expect("live states are playable");

            let mut won_line = line.clone();
            won_line.apply_win();
            let won_balance = bal + stake;
            let won_mass = mass.clone() * win_probability.clone();

            let mut lost_line = line;
            lost_line.apply_loss(stake);
            let lost_balance = bal - stake;
            let lost_mass = mass * loss_probability.clone();

            for (child, child_balance, child_mass) in [
                (won_line, won_balance, won_mass),
                (lost_line, lost_balance, lost_mass),
            ] {
                match child.next_stake() {
                    None => {
                        p_win = p_win + child_mass.clone();
                        expected_resolved = expected_resolved
                            + child_mass * T::from_count(child_balance);
                    }
                    Some(s) if s > child_balance => {
                        p_stop = p_stop + child_mass.clone();
                        expected_resolved = expected_resolved
                            + child_mass * T::from_count(child_balance);
                    }
                    Some(_) => {
                        let slot = next
                            .entry((child, child_balance))
                            .or_insert_with(T::zero);
                        *slot = slot.clone() + child_mass;
                    }
                }
            }
        }
        live = next;
    }

    let p_unresolved = live
        .values()
        .fold(T::zero(), |acc, m| acc + m.clone());
    let expected_balance_max =
        expected_resolved.clone() + p_unresolved.clone() * T::from_count(ceiling);

    ExactOutcome {
        p_win,
        p_stop,
        p_draw,
        p_unresolved,
        expected_balance_min: expected_resolved,
        expected_balance_max,
    }
}

/// Exact P(round completes within k bets) for k = 0..=k_max, at unlimited
/// balance: the round never stops, so completion means the line emptied.
pub fn exact_completion_cdf(
    sequence: &BetSequence,
    win_probability: f64,
    k_max: u64,
) -> Vec<(u64, f64)> {
    assert!(
        win_probability > 0.0 && win_probability < 1.0,
        "win probability must lie in (0,1)"
    );
    exact_completion_cdf_generic(sequence, win_probability, k_max)
}

fn exact_completion_cdf_generic<T: Probability>(
    sequence: &BetSequence,
    win_probability: T,
    k_max: u64,
) -> Vec<(u64, T)> {
    let loss_probability = T::one() - win_probability.clone();
    let mut cdf = Vec::with_capacity(k_max as usize + 1);

    if sequence.is_empty() {
        for k in 0..=k_max {
            cdf.push((k, T::one()));
        }
        return cdf;
    }

    let mut completed = T::zero();
    cdf.push((0, T::zero()));

    let mut live: BTreeMap<BetSequence, T> = BTreeMap::new();
    live.insert(sequence.clone(), T::one());

    for k in 1..=k_max {
        let mut next: BTreeMap<BetSequence, T> = BTreeMap::new();
        for (line, mass) in std::mem::take(&mut live) {
            let stake = line.next_stake().expect("live lines are nonempty");

            let mut won_line = line.clone();
            won_line.apply_win();
            let won_mass = mass.clone() * win_probability.clone();
            if won_line.is_empty() {
                completed = completed + won_mass;
            } else {
                let slot = next.entry(won_line).or_insert_with(T::zero);
                *slot = slot.clone() + won_mass;
            }

            let mut lost_line = line;
            lost_line.apply_loss(stake);
            let slot = next.entry(lost_line).or_insert_with(T::zero);
            *slot = slot.clone() + mass * loss_probability.clone();
        }
        live = next;
        cdf.push((k, completed.clone()));
    }

    cdf
}

/// Exact P(round completes in exactly k bets) for k = 0..=k_max at unlimited
/// balance; successive differences of [`exact_completion_cdf`].
pub fn exact_completion_pmf(
    sequence: &BetSequence,
    win_probability: f64,
    k_max: u64,
) -> Vec<(u64, f64)> {
    let cdf = exact_completion_cdf(sequence, win_probability, k_max);
    let mut pmf = Vec::with_capacity(cdf.len());
    let mut previous = 0.0;
    for (k, cumulative) in cdf {
        pmf.push((k, cumulative - previous));
        previous = cumulative;
    }
    pmf
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{play_round, BetSequence, ForcedOutcomes, RoundOutcome};

    fn seq(entries: &[u64]) -> BetSequence {
        BetSequence::new(entries.iter().copied()).expect("valid sequence")
    }

    /// Independent brute force: walk every win/loss string of length `depth`
    /// through the engine itself and tally the 2^depth equally weighted
    /// paths. Slow but entirely free of the layered-sweep machinery.
    fn brute_force_outcome(sequence: &BetSequence, balance: u64, depth: u32) -> ExactOutcome<f64> {
        let paths = 1u64 << depth;
        let weight = 1.0 / paths as f64;
        let mut out = ExactOutcome {
            p_win: 0.0,
            p_stop: 0.0,
            p_draw: 0.0,
            p_unresolved: 0.0,
            expected_balance_min: 0.0,
            expected_balance_max: 0.0,
        };
        let ceiling = (balance + sequence.sum()) as f64;
        for bits in 0..paths {
            let outcomes: Vec<bool> = (0..depth).map(|i| bits >> i & 1 == 1).collect();
            let mut source = ForcedOutcomes::new(outcomes);
            let result = play_round(sequence, balance, &mut source, depth as u64);
            match result.outcome {
                RoundOutcome::Won => {
                    out.p_win += weight;
                    out.expected_balance_min += weight * result.final_balance as f64;
                }
                RoundOutcome::Stopped => {
                    out.p_stop += weight;
                    out.expected_balance_min += weight * result.final_balance as f64;
                }
                RoundOutcome::Draw => {
                    out.p_draw += weight;
                    out.expected_balance_min += weight * result.final_balance as f64;
                }
                RoundOutcome::Capped => out.p_unresolved += weight,
            }
        }
        out.expected_balance_max = out.expected_balance_min + out.p_unresolved * ceiling;
        out
    }

    #[test]
    fn flagship_instance_resolves_to_three_eighths() {
        let result = exact_outcome(&seq(&[1, 2, 3]), 4, 0.5, 64);
        assert_eq!(result.p_win, 0.375);
        assert_eq!(result.p_stop, 0.625);
        assert_eq!(result.p_draw, 0.0);
        assert_eq!(result.p_unresolved, 0.0);
        // Fair game: expected final balance is exactly the initial balance.
        assert_eq!(result.expected_balance_min, 4.0);
        assert_eq!(result.expected_balance_max, 4.0);
    }

    #[test]
    fn unaffordable_opening_stake_is_a_certain_draw() {
        for balance in 0..=3 {
            let result = exact_outcome(&seq(&[1, 2, 3]), balance, 0.5, 64);
            assert_eq!(result.p_draw, 1.0, "balance {balance}");
            assert_eq!(result.expected_balance_min, balance as f64);
        }
    }

    #[test]
    fn singleton_line_with_matching_balance_is_a_coin_flip() {
        let result = exact_outcome(&seq(&[1]), 1, 0.5, 64);
        assert_eq!(result.p_win, 0.5);
        assert_eq!(result.p_stop, 0.5);
        assert_eq!(result.p_unresolved, 0.0);
        assert_eq!(result.expected_balance_min, 1.0);
    }

    #[test]
    fn empty_line_is_already_won() {
        let result = exact_outcome(&BetSequence::empty(), 9, 0.5, 8);
        assert_eq!(result.p_win, 1.0);
        assert_eq!(result.expected_balance_min, 9.0);
        assert_eq!(result.expected_balance_max, 9.0);
    }

    #[test]
    fn layered_sweep_matches_brute_force_enumeration() {
        // At p = 1/2 and depth <= 14 both routes are exact dyadic arithmetic,
        // so agreement is bitwise.
        for (entries, balance) in [
            (&[1u64, 2, 3][..], 4u64),
            (&[1, 2, 3], 10),
            (&[1], 5),
            (&[2, 2], 7),
            (&[1, 2], 0),
        ] {
            let line = seq(entries);
            for depth in [1u32, 3, 8, 12] {
                let fast = exact_outcome(&line, balance, 0.5, depth as u64);
                let slow = brute_force_outcome(&line, balance, depth);
                assert_eq!(fast, slow, "entries {entries:?} balance {balance} depth {depth}");
            }
        }
    }

    #[test]
    fn rational_mode_agrees_with_f64_on_dyadic_instances() {
        let line = seq(&[1, 2, 3]);
        let rational = exact_outcome_rational(&line, 4, half(), 64);
        let float = exact_outcome(&line, 4, 0.5, 64);
        assert_eq!(rational.p_win, BigRational::new(3.into(), 8.into()));
        assert_eq!(rational.total_mass(), BigRational::one());
        assert_eq!(
            rational.expected_balance_min,
            BigRational::from_integer(4.into())
        );
        assert_eq!(float.p_win, 0.375);
    }

    #[test]
    fn unresolved_mass_is_reported_not_hidden() {
        // A depth-1 truncation of a live instance leaves mass on the table.
        let result = exact_outcome(&seq(&[1, 2, 3]), 100, 0.5, 1);
        assert_eq!(result.p_unresolved, 1.0);
        assert_eq!(result.expected_balance_min, 0.0);
        assert_eq!(result.expected_balance_max, 106.0);
    }

    #[test]
    fn masses_always_sum_to_one() {
        for balance in 0..32 {
            for depth in [1u64, 2, 5, 20, 52] {
                let result = exact_outcome(&seq(&[1, 2, 3]), balance, 0.5, depth);
                assert_eq!(result.total_mass(), 1.0, "balance {balance} depth {depth}");
            }
        }
    }

    #[test]
    fn completion_cdf_head_is_exact() {
        let cdf = exact_completion_cdf(&seq(&[1, 2, 3]), 0.5, 5);
        assert_eq!(cdf[0], (0, 0.0));
        assert_eq!(cdf[1], (1, 0.0));
        assert_eq!(cdf[2], (2, 0.25));
        assert_eq!(cdf[3], (3, 0.5));
        // No completion is possible at exactly 4 bets from a 3-entry line.
        assert_eq!(cdf[4], (4, 0.5));
        assert!(cdf[5].1 > 0.5);
    }

    #[test]
    fn completion_cdf_is_monotone_and_bounded() {
        let cdf = exact_completion_cdf(&seq(&[1, 2, 3]), 0.5, 25);
        let mut previous = 0.0;
        for &(_, p) in &cdf {
            assert!(p >= previous);
            assert!(p <= 1.0);
            previous = p;
        }
        // Essentially all rounds complete well before 25 bets.
        assert!(cdf.last().unwrap().1 > 0.9);
    }

    #[test]
    fn completion_pmf_sums_to_cdf() {
        let pmf = exact_completion_pmf(&seq(&[1, 2, 3]), 0.5, 20);
        let cdf = exact_completion_cdf(&seq(&[1, 2, 3]), 0.5, 20);
        let total: f64 = pmf.iter().map(|&(_, p)| p).sum();
        assert!((total - cdf.last().unwrap().1).abs() < 1e-15);
        assert!(pmf.iter().all(|&(_, p)| p >= 0.0));
    }

    #[test]
    fn expected_balance_interval_straddles_initial_balance_at_even_odds() {
        // Truncated expectation of a bounded martingale: the interval around
        // the unresolved mass must contain the initial balance. Depth 46
        // keeps 2^depth * ceiling under 2^53, so the check is exact.
        for balance in 0..=64u64 {
            for entries in [&[1u64][..], &[1, 2], &[1, 2, 3], &[2, 2]] {
                let result = exact_outcome(&seq(entries), balance, 0.5, 46);
                let initial = balance as f64;
                assert!(
                    result.expected_balance_min <= initial
                        && initial <= result.expected_balance_max,
                    "entries {entries:?} balance {balance}: [{}, {}]",
                    result.expected_balance_min,
                    result.expected_balance_max,
                );
            }
        }
    }
}
