//! Meta-strategies over repeated Labouchere rounds.
//!
//! The bankroll strategy plays rounds back to back and, whenever the bankroll
//! ends a round above a fixed threshold, moves the excess into an extracted
//! pot that never returns to play. Plain repeated play keeps everything at
//! risk. Both record per-bet balance trajectories.

use thiserror::Error;

use crate::engine::{play_round_observed, BetSequence, OutcomeSource, RoundOutcome};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StrategyError {
    #[error("sequence must be nonempty")]
    EmptySequence,
    #[error("rounds must be at least 1")]
    ZeroRounds,
    #[error("round hit the {max_bets}-bet cap after {bets_total} total bets")]
    RoundCapped { max_bets: u64, bets_total: u64 },
}

/// Configuration of one bankroll-strategy run.
#[derive(Clone, Debug)]
pub struct BankrollConfig {
    pub sequence: BetSequence,
    pub rounds: u64,
    /// Bankroll level above which profits are extracted.
    pub threshold: u64,
    pub initial_balance: u64,
}

impl BankrollConfig {
    pub fn validate(&self) -> Result<(), StrategyError> {
        if self.sequence.is_empty() {
            return Err(StrategyError::EmptySequence);
        }
        if self.rounds == 0 {
            return Err(StrategyError::ZeroRounds);
        }
        Ok(())
    }

    /// A threshold below the starting bankroll extracts capital immediately;
    /// accepted, but worth flagging in run output.
    pub fn threshold_below_initial(&self) -> bool {
        self.threshold < self.initial_balance
    }
}

/// One sample of a bankroll-strategy trajectory. A sample is taken after
/// every bet and again after each extraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BankrollSample {
    /// Cumulative bets placed across all rounds so far.
    pub bets: u64,
    pub bankroll: u64,
    pub extracted_profit: u64,
}

impl BankrollSample {
    /// Net profit: bankroll plus extracted pot, less the starting bankroll.
    pub fn net_profit(&self, initial_balance: u64) -> i64 {
        self.bankroll as i64 + self.extracted_profit as i64 - initial_balance as i64
    }
}

#[derive(Clone, Debug)]
pub struct BankrollResult {
    pub net_profit: i64,
    pub extracted_profit: u64,
    pub final_bankroll: u64,
    pub bets_total: u64,
    pub rounds_played: u64,
    /// True when play stopped because the bankroll could no longer cover the
    /// opening stake.
    pub went_broke: bool,
    pub trajectory: Vec<BankrollSample>,
}

/// Runs the bankroll strategy: up to `rounds` full Labouchere rounds, with
/// excess over the threshold extracted after each round.
///
/// `sample_every` decimates the per-bet trajectory for very long runs; the
/// first and last points and every extraction point are always kept.
/// A round that hits `max_bets_per_round` aborts the run with
/// [`StrategyError::RoundCapped`] rather than folding a capped round into the
/// totals.
pub fn run_bankroll<S: OutcomeSource>(
    config: &BankrollConfig,
    source: &mut S,
    max_bets_per_round: u64,
    sample_every: u64,
) -> Result<BankrollResult, StrategyError> {
    config.validate()?;
    assert!(sample_every >= 1, "sample_every must be at least 1");
    let opening_stake = config
        .sequence
        .next_stake()
        .expect("validated sequence is nonempty");

    let mut bankroll = config.initial_balance;
    let mut extracted_profit = 0u64;
    let mut bets_total = 0u64;
    let mut rounds_played = 0u64;
    let mut went_broke = false;
    let mut trajectory: Vec<BankrollSample> = Vec::new();

    for _ in 0..config.rounds {
        if bankroll < opening_stake {
            went_broke = true;
            break;
        }

        let result = play_round_observed(
            &config.sequence,
            bankroll,
            source,
            max_bets_per_round,
            |bet| {
                bets_total += 1;
                if (bets_total - 1) % sample_every == 0 {
                    trajectory.push(BankrollSample {
                        bets: bets_total,
                        bankroll: bet.balance_after,
                        extracted_profit,
                    });
                }
            },
        );
        if result.outcome == RoundOutcome::Capped {
            return Err(StrategyError::RoundCapped {
                max_bets: max_bets_per_round,
                bets_total,
            });
        }
        rounds_played += 1;
        bankroll = result.final_balance;

        // Scrape anything above the threshold into the extracted pot.
        if bankroll > config.threshold {
            extracted_profit += bankroll - config.threshold;
            bankroll = config.threshold;
            trajectory.push(BankrollSample {
                bets: bets_total,
                bankroll,
                extracted_profit,
            });
        }
    }

    // Keep the final state as the last sample.
    let final_sample = BankrollSample {
        bets: bets_total,
        bankroll,
        extracted_profit,
    };
    if trajectory.last() != Some(&final_sample) && bets_total > 0 {
        trajectory.push(final_sample);
    }

    Ok(BankrollResult {
        net_profit: bankroll as i64 + extracted_profit as i64 - config.initial_balance as i64,
        extracted_profit,
        final_bankroll: bankroll,
        bets_total,
        rounds_played,
        went_broke,
        trajectory,
    })
}

/// Plays rounds back to back with no extraction until the balance cannot
/// cover the opening stake or `max_total_bets` is reached, recording
/// (cumulative bets, balance) after each bet, decimated by `sample_every`
/// with the last point always kept.
pub fn run_repeated<S: OutcomeSource>(
    sequence: &BetSequence,
    initial_balance: u64,
    source: &mut S,
    max_total_bets: u64,
    sample_every: u64,
) -> Vec<(u64, u64)> {
    assert!(!sequence.is_empty(), "sequence must be nonempty");
    assert!(sample_every >= 1, "sample_every must be at least 1");
    let opening_stake = sequence.next_stake().expect("nonempty sequence");

    let mut balance = initial_balance;
    let mut bets_total = 0u64;
    let mut trajectory: Vec<(u64, u64)> = Vec::new();

    while balance >= opening_stake && bets_total < max_total_bets {
        let result = play_round_observed(
            sequence,
            balance,
            source,
            max_total_bets - bets_total,
            |bet| {
                bets_total += 1;
                if (bets_total - 1) % sample_every == 0 {
                    trajectory.push((bets_total, bet.balance_after));
                }
            },
        );
        balance = result.final_balance;
        if result.outcome == RoundOutcome::Capped {
            break;
        }
    }

    if bets_total > 0 && trajectory.last() != Some(&(bets_total, balance)) {
        trajectory.push((bets_total, balance));
    }
    trajectory
}
