//! The Labouchere round state machine.
//!
//! A round is driven by a [`BetSequence`] (the "line"): the next stake is the
//! sum of the first and last entries (or the sole entry), a win splices both
//! ends off, a loss appends the lost stake. The round ends when the line
//! empties (the player pockets the sum of the original line) or when the next
//! stake exceeds the available balance.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::distr::{Bernoulli, Distribution};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Cap on bets per round. A round against a large enough balance can run
/// arbitrarily long, so the simulator always carries a cap; capped rounds are
/// reported as [`RoundOutcome::Capped`], never folded into wins or losses.
pub const DEFAULT_MAX_BETS: u64 = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SequenceError {
    #[error("stake entries must be positive, found 0 at index {0}")]
    ZeroEntry(usize),
}

/// The live Labouchere line: an ordered list of positive integer stakes.
///
/// Stakes are integer currency units; the unit (dollars, cents) is a display
/// concern, never part of the arithmetic. An empty line is the round-complete
/// state.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BetSequence {
    entries: VecDeque<u64>,
}

impl BetSequence {
    /// Builds a line from stake entries, rejecting zero stakes.
    pub fn new(entries: impl IntoIterator<Item = u64>) -> Result<Self, SequenceError> {
        let entries: VecDeque<u64> = entries.into_iter().collect();
        if let Some(idx) = entries.iter().position(|&e| e == 0) {
            return Err(SequenceError::ZeroEntry(idx));
        }
        Ok(Self { entries })
    }

    pub fn empty() -> Self {
        Self {
            entries: VecDeque::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of the remaining stakes; the profit a completed round pays out.
    pub fn sum(&self) -> u64 {
        self.entries
            .iter()
            .try_fold(0u64, |acc, &e| acc.checked_add(e))
            .expect("line sum overflows u64")
    }

    pub fn entries(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().copied()
    }

    /// The stake the system bets next: first + last entry, the sole entry of
    /// a singleton line, or nothing when the line is empty.
    pub fn next_stake(&self) -> Option<u64> {
        match self.entries.len() {
            0 => None,
            1 => Some(self.entries[0]),
            _ => Some(
                self.entries
                    .front()
                    .unwrap()
                    .checked_add(*self.entries.back().unwrap())
                    .expect("stake overflows u64"),
            ),
        }
    }

    /// Splices the first and last entries off after a won bet.
    ///
    /// Calling this on an empty line is a contract violation and panics.
    pub fn apply_win(&mut self) {
        assert!(!self.entries.is_empty(), "apply_win on an empty line");
        self.entries.pop_front();
        self.entries.pop_back();
    }

    /// Appends the lost stake after a lost bet.
    ///
    /// `lost_stake` must equal [`next_stake`](Self::next_stake); anything else
    /// is a contract violation and panics.
    pub fn apply_loss(&mut self, lost_stake: u64) {
        let expected = self
            .next_stake()
            .expect("apply_loss on an empty line");
        assert_eq!(
            lost_stake, expected,
            "apply_loss stake mismatch: lost {lost_stake}, line wants {expected}"
        );
        self.entries.push_back(lost_stake);
    }
}

impl fmt::Display for BetSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for e in &self.entries {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for BetSequence {
    type Err = String;

    /// Parses a comma-separated stake list such as `1,2,3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut entries = Vec::new();
        for part in s.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let value: u64 = part
                .parse()
                .map_err(|_| format!("invalid stake entry {part:?}"))?;
            entries.push(value);
        }
        BetSequence::new(entries).map_err(|e| e.to_string())
    }
}

/// A stream of win/loss outcomes driving the bets of a round.
pub trait OutcomeSource {
    /// Draws the next outcome; `true` is a won bet.
    fn next_win(&mut self) -> bool;
}

/// Seeded Bernoulli outcome stream with win probability `p`.
///
/// Streams derived from the same seed but distinct stream indices are
/// independent, which makes parallel experiments reproducible regardless of
/// how rounds are scheduled across threads: round `i` always reads stream `i`.
#[derive(Clone, Debug)]
pub struct BernoulliSource {
    win_probability: f64,
    seed: u64,
    stream: u64,
    dist: Bernoulli,
    rng: ChaCha8Rng,
}

impl BernoulliSource {
    /// Fair-coin default is `p = 0.5`; online play with a house advantage is
    /// around `p = 0.4995`.
    pub fn new(win_probability: f64, seed: u64) -> Self {
        Self::with_stream(win_probability, seed, 0)
    }

    /// Source for one round of a seeded batch: stream `stream` of the master
    /// seed.
    pub fn with_stream(win_probability: f64, seed: u64, stream: u64) -> Self {
        assert!(
            win_probability > 0.0 && win_probability < 1.0,
            "win probability must lie in (0,1), got {win_probability}"
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            win_probability,
            seed,
            stream,
            dist: Bernoulli::new(win_probability).expect("probability already validated"),
            rng,
        }
    }

    pub fn win_probability(&self) -> f64 {
        self.win_probability
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }
}

impl OutcomeSource for BernoulliSource {
    fn next_win(&mut self) -> bool {
        self.dist.sample(&mut self.rng)
    }
}

/// Deterministic replay source fed an explicit outcome list, for hand-trace
/// tests. Panics when the list is exhausted.
#[derive(Clone, Debug)]
pub struct ForcedOutcomes {
    outcomes: Vec<bool>,
    position: usize,
}

impl ForcedOutcomes {
    pub fn new(outcomes: impl Into<Vec<bool>>) -> Self {
        Self {
            outcomes: outcomes.into(),
            position: 0,
        }
    }

    pub fn remaining(&self) -> usize {
        self.outcomes.len() - self.position
    }
}

impl OutcomeSource for ForcedOutcomes {
    fn next_win(&mut self) -> bool {
        let won = *self
            .outcomes
            .get(self.position)
            .unwrap_or_else(|| panic!("forced outcome list exhausted after {} outcomes", self.position));
        self.position += 1;
        won
    }
}

/// How a round ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RoundOutcome {
    /// The line emptied; profit equals the sum of the initial line.
    Won,
    /// The next stake exceeded the balance after at least one bet.
    Stopped,
    /// The opening stake already exceeded the balance; no bet was placed.
    Draw,
    /// The bet cap was reached with the round still live.
    Capped,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoundResult {
    pub outcome: RoundOutcome,
    pub bets_placed: u64,
    pub final_balance: u64,
}

/// One placed bet, reported to observers of [`play_round_observed`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BetRecord {
    /// 1-based index of the bet within its round.
    pub bet_number: u64,
    pub stake: u64,
    pub won: bool,
    pub balance_after: u64,
}

/// Runs one full Labouchere round from `sequence` with `balance` available.
///
/// The loop invariant is conservation: `balance + line sum` never changes
/// while bets are placed, so the balance stays within
/// `[0, balance + sequence.sum()]` for the whole round.
pub fn play_round<S: OutcomeSource>(
    sequence: &BetSequence,
    balance: u64,
    source: &mut S,
    max_bets: u64,
) -> RoundResult {
    play_round_observed(sequence, balance, source, max_bets, |_| {})
}

/// [`play_round`] with a per-bet observer, for trajectory capture.
pub fn play_round_observed<S: OutcomeSource>(
    sequence: &BetSequence,
    balance: u64,
    source: &mut S,
    max_bets: u64,
    mut observe: impl FnMut(&BetRecord),
) -> RoundResult {
    assert!(max_bets >= 1, "max_bets must be at least 1");
    balance
        .checked_add(sequence.sum())
        .expect("balance + line sum overflows u64");

    let mut line = sequence.clone();
    let mut balance = balance;
    let mut bets_placed = 0u64;

    loop {
        let Some(stake) = line.next_stake() else {
            return RoundResult {
                outcome: RoundOutcome::Won,
                bets_placed,
                final_balance: balance,
            };
        };
        if stake > balance {
            let outcome = if bets_placed == 0 {
                RoundOutcome::Draw
            } else {
                RoundOutcome::Stopped
            };
            return RoundResult {
                outcome,
                bets_placed,
                final_balance: balance,
            };
        }
        if bets_placed == max_bets {
            return RoundResult {
                outcome: RoundOutcome::Capped,
                bets_placed,
                final_balance: balance,
            };
        }

        bets_placed += 1;
        let won = source.next_win();
        if won {
            balance += stake;
            line.apply_win();
        } else {
            balance -= stake;
            line.apply_loss(stake);
        }
        observe(&BetRecord {
            bet_number: bets_placed,
            stake,
            won,
            balance_after: balance,
        });
    }
}
