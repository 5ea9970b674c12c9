//! Monte Carlo laboratory for the Labouchere betting system.
//!
//! The crate is organized around five pieces:
//!
//! - [`engine`]: the round state machine — stake computation, win/loss line
//!   updates, and termination over a seeded Bernoulli outcome source.
//! - [`strategy`]: meta-strategies over repeated rounds — the bankroll
//!   profit-extraction strategy and plain repeated play.
//! - [`experiments`]: seeded, parallel batch experiments — completion
//!   histograms and win/loss/draw sweeps over bankroll levels.
//! - [`stats`]: exponential regression, the termination model, Poisson
//!   likelihood, the bivariate Gaussian density, and the Wald statistic.
//! - [`oracle`]: exact win/stop/draw probabilities and completion
//!   distributions for small instances, by dynamic programming.
//!
//! Everything is deterministic given a master seed: each simulated round
//! reads its own counter-derived stream, so batch results do not depend on
//! thread count or scheduling.

pub mod engine;
pub mod experiments;
pub mod oracle;
pub mod stats;
pub mod strategy;

pub use engine::{
    play_round, play_round_observed, BernoulliSource, BetRecord, BetSequence, ForcedOutcomes,
    OutcomeSource, RoundOutcome, RoundResult, SequenceError, DEFAULT_MAX_BETS,
};
pub use experiments::{
    bankroll_sweep, completion_histogram, sweep_schedule, sweep_step, unlimited_balance,
    CompletionHistogram, ExperimentError, HistogramBin, Progress, SweepRow,
};
pub use oracle::{exact_completion_cdf, exact_completion_pmf, exact_outcome, ExactOutcome};
pub use stats::{
    chi_square_p_value, fit_exponential, poisson_log_likelihood, poisson_mle, r_squared,
    termination_model_cdf, wald_statistic, BivariateGaussian, ExpFit, StatsError, WaldInput,
};
pub use strategy::{
    run_bankroll, run_repeated, BankrollConfig, BankrollResult, BankrollSample, StrategyError,
};
