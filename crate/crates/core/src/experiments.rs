//! Batch experiments: bets-to-completion histograms, win/loss/draw sweeps
//! over bankroll levels, and the step schedule that downsamples sweeps
//! proportionally to the order of magnitude of the bankroll.
//!
//! Every round draws from its own outcome stream, derived from the master
//! seed and the round's index, so results are identical regardless of worker
//! count or scheduling; aggregation is plain integer addition and therefore
//! associative.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{play_round, BernoulliSource, BetSequence, RoundOutcome};

/// Rounds per rayon work item; batching amortizes stream setup.
const ROUNDS_PER_BATCH: u64 = 4_096;

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
pub enum ExperimentError {
    #[error("round {round} at balance {balance} hit the {max_bets}-bet cap")]
    RoundCapped {
        balance: u64,
        round: u64,
        max_bets: u64,
    },
    #[error("unlimited-exposure balance for {max_bets} bets does not fit in u64")]
    ExposureOverflow { max_bets: u64 },
}

/// Shared progress counter experiments bump as rounds finish; a reporting
/// thread may poll it. Purely advisory, never part of the data path.
#[derive(Debug, Default)]
pub struct Progress {
    completed: AtomicU64,
}

impl Progress {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&self, rounds: u64) {
        self.completed.fetch_add(rounds, Ordering::Relaxed);
    }

    pub fn completed(&self) -> u64 {
        self.completed.load(Ordering::Relaxed)
    }
}

/// One bar of a bets-to-completion histogram.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HistogramBin {
    pub bets_to_completion: u64,
    pub round_count: u64,
}

/// Histogram of bets to completion over a batch of independent rounds.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CompletionHistogram {
    /// Dense counts indexed by bets-to-completion, 0..=max observed.
    counts: Vec<u64>,
    /// Rounds that hit the bet cap; kept out of the dense bins.
    pub capped_rounds: u64,
    pub wins: u64,
    pub stops: u64,
    pub draws: u64,
    pub rounds: u64,
}

impl CompletionHistogram {
    fn record(&mut self, outcome: RoundOutcome, bets_placed: u64) {
        self.rounds += 1;
        match outcome {
            RoundOutcome::Capped => {
                self.capped_rounds += 1;
                return;
            }
            RoundOutcome::Won => self.wins += 1,
            RoundOutcome::Stopped => self.stops += 1,
            RoundOutcome::Draw => self.draws += 1,
        }
        let idx = bets_placed as usize;
        if self.counts.len() <= idx {
            self.counts.resize(idx + 1, 0);
        }
        self.counts[idx] += 1;
    }

    fn merge(mut self, other: Self) -> Self {
        if self.counts.len() < other.counts.len() {
            self.counts.resize(other.counts.len(), 0);
        }
        for (i, c) in other.counts.iter().enumerate() {
            self.counts[i] += c;
        }
        self.capped_rounds += other.capped_rounds;
        self.wins += other.wins;
        self.stops += other.stops;
        self.draws += other.draws;
        self.rounds += other.rounds;
        self
    }

    /// Dense bins from 0 to the maximum observed completion length.
    pub fn bins(&self) -> Vec<HistogramBin> {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &c)| HistogramBin {
                bets_to_completion: i as u64,
                round_count: c,
            })
            .collect()
    }

    pub fn count_at(&self, bets: u64) -> u64 {
        self.counts.get(bets as usize).copied().unwrap_or(0)
    }

    /// Fraction of rounds that terminated within `bets` bets (capped rounds
    /// count as not terminated).
    pub fn empirical_cdf(&self, bets: u64) -> f64 {
        let within: u64 = self
            .counts
            .iter()
            .take(bets as usize + 1)
            .sum();
        within as f64 / self.rounds as f64
    }
}

/// Simulates `rounds` independent rounds and bins them by bets to
/// completion. Round `i` draws from stream `i` of `master_seed`.
pub fn completion_histogram(
    sequence: &BetSequence,
    balance: u64,
    rounds: u64,
    win_probability: f64,
    master_seed: u64,
    max_bets: u64,
    progress: Option<&Progress>,
) -> CompletionHistogram {
    assert!(rounds >= 1, "rounds must be at least 1");
    let batches = rounds.div_ceil(ROUNDS_PER_BATCH);
    (0..batches)
        .into_par_iter()
        .map(|batch| {
            let start = batch * ROUNDS_PER_BATCH;
            let end = (start + ROUNDS_PER_BATCH).min(rounds);
            let mut histogram = CompletionHistogram::default();
            for round in start..end {
                let mut source = BernoulliSource::with_stream(win_probability, master_seed, round);
                let result = play_round(sequence, balance, &mut source, max_bets);
                histogram.record(result.outcome, result.bets_placed);
            }
            if let Some(progress) = progress {
                progress.add(end - start);
            }
            histogram
        })
        .reduce(CompletionHistogram::default, CompletionHistogram::merge)
}

/// A balance large enough that no round of up to `max_bets` bets can ever be
/// stopped by it. A stop needs the line sum to exceed half the conserved
/// total `balance + sum`, and the line sum at most doubles per lost bet, so
/// `sum * 2^(max_bets + 1)` can never be stopped. Errors when that bound does
/// not fit in u64.
pub fn unlimited_balance(sequence: &BetSequence, max_bets: u64) -> Result<u64, ExperimentError> {
    let overflow = ExperimentError::ExposureOverflow { max_bets };
    let shift = u32::try_from(max_bets + 1).ok().filter(|&s| s < 64).ok_or(overflow)?;
    let sum = sequence.sum().max(1);
    if sum.leading_zeros() <= shift {
        return Err(overflow);
    }
    Ok(sum << shift)
}

/// Win/loss/draw tallies for one sampled bankroll level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SweepRow {
    pub balance: u64,
    pub wins: u64,
    pub losses: u64,
    pub draws: u64,
}

/// Step of the sweep's balance schedule: proportional to the bankroll's
/// order of magnitude, never below one.
pub fn sweep_step(balance: u64, downsample_constant: u64) -> u64 {
    debug_assert!(downsample_constant >= 1);
    (balance / downsample_constant).max(1)
}

/// The balance levels a sweep samples: from `min_bankroll` up to (but not
/// including) `max_bankroll`, stepping by [`sweep_step`].
pub fn sweep_schedule(min_bankroll: u64, max_bankroll: u64, downsample_constant: u64) -> Vec<u64> {
    let mut balances = Vec::new();
    let mut balance = min_bankroll;
    while balance < max_bankroll {
        balances.push(balance);
        balance += sweep_step(balance, downsample_constant);
    }
    balances
}

/// Sweeps bankroll levels, running `rounds_per_bankroll` rounds at each and
/// tallying wins (final above initial), losses (final below, or a terminated
/// round back at its initial balance), and draws (no bet possible).
///
/// Rounds at sampled balance ordinal `j` draw from streams
/// `j << 32 | round_index`, so the whole sweep is a pure function of
/// `master_seed` and its parameters.
pub fn bankroll_sweep(
    sequence: &BetSequence,
    min_bankroll: u64,
    max_bankroll: u64,
    rounds_per_bankroll: u64,
    win_probability: f64,
    downsample_constant: u64,
    master_seed: u64,
    max_bets: u64,
    progress: Option<&Progress>,
) -> Result<Vec<SweepRow>, ExperimentError> {
    assert!(min_bankroll <= max_bankroll, "min_bankroll above max_bankroll");
    assert!(downsample_constant >= 1, "downsample_constant must be at least 1");
    assert!(
        rounds_per_bankroll >= 1 && rounds_per_bankroll < (1 << 32),
        "rounds_per_bankroll must be in 1..2^32"
    );

    let balances = sweep_schedule(min_bankroll, max_bankroll, downsample_constant);
    balances
        .par_iter()
        .enumerate()
        .map(|(ordinal, &balance)| {
            let mut row = SweepRow {
                balance,
                wins: 0,
                losses: 0,
                draws: 0,
            };
            for round in 0..rounds_per_bankroll {
                let stream = (ordinal as u64) << 32 | round;
                let mut source = BernoulliSource::with_stream(win_probability, master_seed, stream);
                let result = play_round(sequence, balance, &mut source, max_bets);
                match result.outcome {
                    RoundOutcome::Capped => {
                        return Err(ExperimentError::RoundCapped {
                            balance,
                            round,
                            max_bets,
                        })
                    }
                    RoundOutcome::Draw => row.draws += 1,
                    _ if result.final_balance > balance => row.wins += 1,
                    _ => row.losses += 1,
                }
            }
            if let Some(progress) = progress {
                progress.add(rounds_per_bankroll);
            }
            Ok(row)
        })
        .collect()
}
