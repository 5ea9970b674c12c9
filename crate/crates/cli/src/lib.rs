//! `labsim`: experiment configuration, seed management, progress reporting,
//! and delimiter-separated export for the Labouchere simulation laboratory.
//!
//! Every run writes a data file plus a `<output>.meta` sidecar holding the
//! full configuration (always including the master seed), wall time, and
//! summary figures, so any result can be replayed exactly.

pub mod progress;
pub mod table;

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use labouchere::engine::BetSequence;
use labouchere::{
    bankroll_sweep, completion_histogram, exact_completion_cdf, exact_outcome, fit_exponential,
    run_bankroll, run_repeated, sweep_schedule, unlimited_balance, BankrollConfig,
    BernoulliSource, Progress, DEFAULT_MAX_BETS,
};

use crate::progress::ProgressReporter;
use crate::table::{export_table, numeric_column, parse_table, write_atomic, Cell};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// Process exit code: 2 for configuration errors, 3 for I/O errors.
    /// (0 is success; panics map to 4 in `main`.)
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "labsim", version, about = "Labouchere betting-system simulation laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by the simulation commands.
#[derive(Args, Clone, Debug)]
pub struct SimArgs {
    /// Initial Labouchere line, comma separated.
    #[arg(long, default_value = "1,2,3")]
    pub sequence: BetSequence,

    /// Win probability of a single bet.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,

    /// Master seed; drawn from system entropy (and recorded) when omitted.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Worker threads; 0 uses every core. Results do not depend on this.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,

    /// Per-round bet cap; capped rounds are reported, never misclassified.
    #[arg(long, default_value_t = DEFAULT_MAX_BETS)]
    pub max_bets: u64,

    /// Field delimiter of exported tables.
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,

    /// Seconds between progress lines on stderr; 0 disables them.
    #[arg(long, default_value_t = 2)]
    pub progress_interval: u64,
}

impl SimArgs {
    fn validate(&self) -> Result<(), CliError> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(CliError::Config(format!(
                "--p must lie strictly between 0 and 1, got {}",
                self.p
            )));
        }
        if self.max_bets == 0 {
            return Err(CliError::Config("--max-bets must be at least 1".into()));
        }
        if self.delimiter == '\n' || self.delimiter == '\r' {
            return Err(CliError::Config("--delimiter cannot be a line break".into()));
        }
        Ok(())
    }

    fn resolve_seed(&self) -> u64 {
        self.seed.unwrap_or_else(rand::random)
    }

    fn base_metadata(&self, command: &str, seed: u64) -> Vec<(String, String)> {
        vec![
            ("command".into(), command.into()),
            ("sequence".into(), self.sequence.to_string()),
            ("p".into(), self.p.to_string()),
            ("seed".into(), seed.to_string()),
            ("threads".into(), self.threads.to_string()),
            ("max_bets".into(), self.max_bets.to_string()),
            ("delimiter".into(), self.delimiter.to_string()),
        ]
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bets-to-completion histogram over independent seeded rounds.
    Histogram {
        #[command(flatten)]
        sim: SimArgs,

        /// Available balance for every round.
        #[arg(long, conflicts_with = "unlimited")]
        balance: Option<u64>,

        /// Use a balance no round of up to --max-bets bets can exhaust.
        #[arg(long)]
        unlimited: bool,

        /// Number of independent rounds.
        #[arg(long, default_value_t = 10_000)]
        rounds: u64,

        /// Data file path; a `.meta` sidecar is written next to it.
        #[arg(long)]
        output: PathBuf,
    },

    /// Win/loss/draw tallies swept over bankroll levels with the
    /// order-of-magnitude step schedule.
    Sweep {
        #[command(flatten)]
        sim: SimArgs,

        #[arg(long, default_value_t = 0)]
        min_bankroll: u64,

        /// Exclusive upper bankroll bound.
        #[arg(long, default_value_t = 400_000)]
        max_bankroll: u64,

        #[arg(long, default_value_t = 10_000)]
        rounds_per_bankroll: u64,

        /// Step divisor: the sweep advances by balance / constant, at least 1.
        #[arg(long, default_value_t = 10)]
        downsample_constant: u64,

        #[arg(long)]
        output: PathBuf,
    },

    /// Balance trajectory of repeated rounds with everything left at risk.
    Trajectory {
        #[command(flatten)]
        sim: SimArgs,

        #[arg(long, default_value_t = 4_000)]
        initial_balance: u64,

        /// Total bet budget across all rounds.
        #[arg(long, default_value_t = 1_000_000)]
        max_total_bets: u64,

        /// Keep every n-th per-bet sample (first and last always kept).
        #[arg(long, default_value_t = 1)]
        sample_every: u64,

        #[arg(long)]
        output: PathBuf,
    },

    /// Bankroll strategy: repeated rounds with profit extracted above a
    /// threshold.
    Bankroll {
        #[command(flatten)]
        sim: SimArgs,

        #[arg(long, default_value_t = 4_000)]
        initial_balance: u64,

        /// Bankroll level above which profit is extracted.
        #[arg(long, default_value_t = 6_000)]
        threshold: u64,

        /// Number of rounds to play (fewer if the bankroll goes broke).
        #[arg(long, default_value_t = 1_000)]
        rounds: u64,

        /// Keep every n-th per-bet sample (extraction points always kept).
        #[arg(long, default_value_t = 1)]
        sample_every: u64,

        #[arg(long)]
        output: PathBuf,
    },

    /// Fit y = a*exp(b*x) to two columns of an exported table.
    Fit {
        /// Table file to read (e.g. a histogram export).
        #[arg(long)]
        input: PathBuf,

        #[arg(long, default_value_t = ',')]
        delimiter: char,

        /// Zero-based x column.
        #[arg(long, default_value_t = 0)]
        x_column: usize,

        /// Zero-based y column; rows with y <= 0 are excluded.
        #[arg(long, default_value_t = 1)]
        y_column: usize,

        /// Optional table export of the fitted parameters.
        #[arg(long)]
        output: Option<PathBuf>,
    },

    /// Exact probabilities from the dynamic-programming oracle.
    Oracle {
        #[arg(long, default_value = "1,2,3")]
        sequence: BetSequence,

        #[arg(long, default_value_t = 0.5)]
        p: f64,

        /// Balance for win/stop/draw analysis.
        #[arg(long, required_unless_present = "cdf", conflicts_with = "cdf")]
        balance: Option<u64>,

        /// Instead compute P(complete within k bets) for k = 0..=CDF at
        /// unlimited balance.
        #[arg(long)]
        cdf: Option<u64>,

        /// Bet-tree depth at which unresolved mass is reported.
        #[arg(long, default_value_t = 64)]
        depth_limit: u64,

        #[arg(long, default_value_t = ',')]
        delimiter: char,

        /// Optional table export of the printed values.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Runs one parsed command to completion.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Histogram {
            sim,
            balance,
            unlimited,
            rounds,
            output,
        } => run_histogram(&sim, balance, unlimited, rounds, &output),
        Command::Sweep {
            sim,
            min_bankroll,
            max_bankroll,
            rounds_per_bankroll,
            downsample_constant,
            output,
        } => run_sweep(
            &sim,
            min_bankroll,
            max_bankroll,
            rounds_per_bankroll,
            downsample_constant,
            &output,
        ),
        Command::Trajectory {
            sim,
            initial_balance,
            max_total_bets,
            sample_every,
            output,
        } => run_trajectory(&sim, initial_balance, max_total_bets, sample_every, &output),
        Command::Bankroll {
            sim,
            initial_balance,
            threshold,
            rounds,
            sample_every,
            output,
        } => run_bankroll_cmd(&sim, initial_balance, threshold, rounds, sample_every, &output),
        Command::Fit {
            input,
            delimiter,
            x_column,
            y_column,
            output,
        } => run_fit(&input, delimiter, x_column, y_column, output.as_deref()),
        Command::Oracle {
            sequence,
            p,
            balance,
            cdf,
            depth_limit,
            delimiter,
            output,
        } => run_oracle(&sequence, p, balance, cdf, depth_limit, delimiter, output.as_deref()),
    }
}

fn with_pool<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    if threads == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("building a {threads}-thread pool: {e}")))?;
    Ok(pool.install(job))
}

fn write_metadata(output: &Path, entries: &[(String, String)]) -> Result<(), CliError> {
    let mut sidecar = output.as_os_str().to_owned();
    sidecar.push(".meta");
    let mut content = String::new();
    for (key, value) in entries {
        content.push_str(key);
        content.push_str(" = ");
        content.push_str(value);
        content.push('\n');
    }
    write_atomic(Path::new(&sidecar), content.as_bytes())
}

fn run_histogram(
    sim: &SimArgs,
    balance: Option<u64>,
    unlimited: bool,
    rounds: u64,
    output: &Path,
) -> Result<(), CliError> {
    sim.validate()?;
    if rounds == 0 {
        return Err(CliError::Config("--rounds must be at least 1".into()));
    }
    let balance = match (balance, unlimited) {
        (Some(b), false) => b,
        (None, true) => unlimited_balance(&sim.sequence, sim.max_bets)
            .map_err(|e| CliError::Config(format!("{e}; lower --max-bets to use --unlimited")))?,
        (None, false) => {
            return Err(CliError::Config(
                "one of --balance or --unlimited is required".into(),
            ))
        }
        (Some(_), true) => unreachable!("clap rejects the combination"),
    };
    let seed = sim.resolve_seed();

    let progress = Arc::new(Progress::new());
    let reporter = ProgressReporter::start(Arc::clone(&progress), rounds, sim.progress_interval);
    let started = Instant::now();
    let histogram = with_pool(sim.threads, || {
        completion_histogram(
            &sim.sequence,
            balance,
            rounds,
            sim.p,
            seed,
            sim.max_bets,
            Some(&progress),
        )
    })?;
    let elapsed = started.elapsed().as_secs_f64();
    reporter.finish();

    let rows: Vec<Vec<Cell>> = histogram
        .bins()
        .iter()
        .map(|bin| vec![bin.bets_to_completion.into(), bin.round_count.into()])
        .collect();
    export_table(&["bets", "rounds"], &rows, output, sim.delimiter)?;

    let mut meta = sim.base_metadata("histogram", seed);
    meta.push(("balance".into(), balance.to_string()));
    meta.push(("unlimited".into(), unlimited.to_string()));
    meta.push(("rounds".into(), rounds.to_string()));
    meta.push(("output".into(), output.display().to_string()));
    meta.push(("wins".into(), histogram.wins.to_string()));
    meta.push(("stops".into(), histogram.stops.to_string()));
    meta.push(("draws".into(), histogram.draws.to_string()));
    meta.push(("capped_rounds".into(), histogram.capped_rounds.to_string()));
    meta.push(("wall_time_secs".into(), format!("{elapsed:.6}")));
    meta.push(("rounds_per_sec".into(), format!("{:.0}", rounds as f64 / elapsed)));
    write_metadata(output, &meta)
}

fn run_sweep(
    sim: &SimArgs,
    min_bankroll: u64,
    max_bankroll: u64,
    rounds_per_bankroll: u64,
    downsample_constant: u64,
    output: &Path,
) -> Result<(), CliError> {
    sim.validate()?;
    if min_bankroll > max_bankroll {
        return Err(CliError::Config(
            "--min-bankroll must not exceed --max-bankroll".into(),
        ));
    }
    if downsample_constant == 0 {
        return Err(CliError::Config("--downsample-constant must be at least 1".into()));
    }
    if rounds_per_bankroll == 0 || rounds_per_bankroll >= 1 << 32 {
        return Err(CliError::Config(
            "--rounds-per-bankroll must lie in 1..2^32".into(),
        ));
    }
    let seed = sim.resolve_seed();
    let levels = sweep_schedule(min_bankroll, max_bankroll, downsample_constant);
    let total_rounds = levels.len() as u64 * rounds_per_bankroll;

    let progress = Arc::new(Progress::new());
    let reporter =
        ProgressReporter::start(Arc::clone(&progress), total_rounds, sim.progress_interval);
    let started = Instant::now();
    let result = with_pool(sim.threads, || {
        bankroll_sweep(
            &sim.sequence,
            min_bankroll,
            max_bankroll,
            rounds_per_bankroll,
            sim.p,
            downsample_constant,
            seed,
            sim.max_bets,
            Some(&progress),
        )
    })?;
    let elapsed = started.elapsed().as_secs_f64();
    reporter.finish();
    let rows =
        result.map_err(|e| CliError::Config(format!("{e}; raise --max-bets and rerun")))?;

    let table: Vec<Vec<Cell>> = rows
        .iter()
        .map(|row| {
            vec![
                row.balance.into(),
                row.wins.into(),
                row.losses.into(),
                row.draws.into(),
            ]
        })
        .collect();
    export_table(
        &["balance", "wins", "losses", "draws"],
        &table,
        output,
        sim.delimiter,
    )?;

    let mut meta = sim.base_metadata("sweep", seed);
    meta.push(("min_bankroll".into(), min_bankroll.to_string()));
    meta.push(("max_bankroll".into(), max_bankroll.to_string()));
    meta.push(("rounds_per_bankroll".into(), rounds_per_bankroll.to_string()));
    meta.push(("downsample_constant".into(), downsample_constant.to_string()));
    meta.push(("output".into(), output.display().to_string()));
    meta.push(("bankroll_levels".into(), levels.len().to_string()));
    meta.push(("total_rounds".into(), total_rounds.to_string()));
    meta.push(("wall_time_secs".into(), format!("{elapsed:.6}")));
    meta.push((
        "rounds_per_sec".into(),
        format!("{:.0}", total_rounds as f64 / elapsed),
    ));
    write_metadata(output, &meta)
}

fn run_trajectory(
    sim: &SimArgs,
    initial_balance: u64,
    max_total_bets: u64,
    sample_every: u64,
    output: &Path,
) -> Result<(), CliError> {
    sim.validate()?;
    if sim.sequence.is_empty() {
        return Err(CliError::Config("--sequence must be nonempty".into()));
    }
    if max_total_bets == 0 || sample_every == 0 {
        return Err(CliError::Config(
            "--max-total-bets and --sample-every must be at least 1".into(),
        ));
    }
    let seed = sim.resolve_seed();
    let started = Instant::now();
    let mut source = BernoulliSource::new(sim.p, seed);
    let trajectory = run_repeated(
        &sim.sequence,
        initial_balance,
        &mut source,
        max_total_bets,
        sample_every,
    );
    let elapsed = started.elapsed().as_secs_f64();

    let (bets_total, final_balance) = trajectory
        .last()
        .copied()
        .unwrap_or((0, initial_balance));
    let table: Vec<Vec<Cell>> = trajectory
        .iter()
        .map(|&(bets, balance)| vec![bets.into(), balance.into()])
        .collect();
    export_table(&["bets", "balance"], &table, output, sim.delimiter)?;

    let mut meta = sim.base_metadata("trajectory", seed);
    meta.push(("initial_balance".into(), initial_balance.to_string()));
    meta.push(("max_total_bets".into(), max_total_bets.to_string()));
    meta.push(("sample_every".into(), sample_every.to_string()));
    meta.push(("output".into(), output.display().to_string()));
    meta.push(("bets_total".into(), bets_total.to_string()));
    meta.push(("final_balance".into(), final_balance.to_string()));
    meta.push(("wall_time_secs".into(), format!("{elapsed:.6}")));
    write_metadata(output, &meta)
}

fn run_bankroll_cmd(
    sim: &SimArgs,
    initial_balance: u64,
    threshold: u64,
    rounds: u64,
    sample_every: u64,
    output: &Path,
) -> Result<(), CliError> {
    sim.validate()?;
    if sample_every == 0 {
        return Err(CliError::Config("--sample-every must be at least 1".into()));
    }
    let config = BankrollConfig {
        sequence: sim.sequence.clone(),
        rounds,
        threshold,
        initial_balance,
    };
    config
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    if config.threshold_below_initial() {
        eprintln!(
            "warning: threshold {threshold} is below the initial balance {initial_balance}; \
             the excess is extracted before the first round"
        );
    }
    let seed = sim.resolve_seed();
    let started = Instant::now();
    let mut source = BernoulliSource::new(sim.p, seed);
    let result = run_bankroll(&config, &mut source, sim.max_bets, sample_every)
        .map_err(|e| CliError::Config(format!("{e}; raise --max-bets and rerun")))?;
    let elapsed = started.elapsed().as_secs_f64();

    let table: Vec<Vec<Cell>> = result
        .trajectory
        .iter()
        .map(|sample| {
            vec![
                sample.bets.into(),
                sample.bankroll.into(),
                sample.extracted_profit.into(),
                sample.net_profit(initial_balance).into(),
            ]
        })
        .collect();
    export_table(
        &["bets", "bankroll", "extracted_profit", "net_profit"],
        &table,
        output,
        sim.delimiter,
    )?;

    let mut meta = sim.base_metadata("bankroll", seed);
    meta.push(("initial_balance".into(), initial_balance.to_string()));
    meta.push(("threshold".into(), threshold.to_string()));
    meta.push(("rounds".into(), rounds.to_string()));
    meta.push(("sample_every".into(), sample_every.to_string()));
    meta.push(("output".into(), output.display().to_string()));
    if config.threshold_below_initial() {
        meta.push((
            "warning".into(),
            "threshold below initial balance".into(),
        ));
    }
    meta.push(("rounds_played".into(), result.rounds_played.to_string()));
    meta.push(("bets_total".into(), result.bets_total.to_string()));
    meta.push(("final_bankroll".into(), result.final_bankroll.to_string()));
    meta.push(("extracted_profit".into(), result.extracted_profit.to_string()));
    meta.push(("net_profit".into(), result.net_profit.to_string()));
    meta.push(("went_broke".into(), result.went_broke.to_string()));
    meta.push(("wall_time_secs".into(), format!("{elapsed:.6}")));
    write_metadata(output, &meta)
}

fn run_fit(
    input: &Path,
    delimiter: char,
    x_column: usize,
    y_column: usize,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let (_, rows) = parse_table(input, delimiter)?;
    let xs = numeric_column(&rows, x_column)?;
    let ys = numeric_column(&rows, y_column)?;
    let points: Vec<(f64, f64)> = xs.into_iter().zip(ys).collect();
    let fit = fit_exponential(&points).map_err(|e| CliError::Config(e.to_string()))?;

    println!("amplitude = {}", fit.amplitude);
    println!("rate = {}", fit.rate);
    println!("r_squared = {}", fit.r_squared);

    if let Some(output) = output {
        export_table(
            &["amplitude", "rate", "r_squared"],
            &[vec![fit.amplitude.into(), fit.rate.into(), fit.r_squared.into()]],
            output,
            delimiter,
        )?;
        let meta = vec![
            ("command".into(), "fit".into()),
            ("input".into(), input.display().to_string()),
            ("x_column".into(), x_column.to_string()),
            ("y_column".into(), y_column.to_string()),
            ("points".into(), points.len().to_string()),
            ("amplitude".into(), fit.amplitude.to_string()),
            ("rate".into(), fit.rate.to_string()),
            ("r_squared".into(), fit.r_squared.to_string()),
        ];
        write_metadata(output, &meta)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_oracle(
    sequence: &BetSequence,
    p: f64,
    balance: Option<u64>,
    cdf: Option<u64>,
    depth_limit: u64,
    delimiter: char,
    output: Option<&Path>,
) -> Result<(), CliError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(CliError::Config(format!(
            "--p must lie strictly between 0 and 1, got {p}"
        )));
    }
    if depth_limit == 0 {
        return Err(CliError::Config("--depth-limit must be at least 1".into()));
    }

    if let Some(k_max) = cdf {
        let cdf = exact_completion_cdf(sequence, p, k_max);
        for &(k, probability) in &cdf {
            println!("{k}{delimiter}{probability}");
        }
        if let Some(output) = output {
            let rows: Vec<Vec<Cell>> = cdf
                .iter()
                .map(|&(k, probability)| vec![k.into(), probability.into()])
                .collect();
            export_table(&["bets", "completed_within"], &rows, output, delimiter)?;
        }
        return Ok(());
    }

    let balance = balance.expect("clap requires --balance without --cdf");
    let outcome = exact_outcome(sequence, balance, p, depth_limit);
    let entries = [
        ("p_win", outcome.p_win),
        ("p_stop", outcome.p_stop),
        ("p_draw", outcome.p_draw),
        ("p_unresolved", outcome.p_unresolved),
        ("expected_balance_min", outcome.expected_balance_min),
        ("expected_balance_max", outcome.expected_balance_max),
    ];
    for (name, value) in entries {
        println!("{name} = {value}");
    }
    if let Some(output) = output {
        // Quantity names are strings, so render this one by hand.
        let mut content = format!("quantity{delimiter}value\n");
        for (name, value) in entries {
            content.push_str(&format!("{name}{delimiter}{value}\n"));
        }
        write_atomic(output, content.as_bytes())?;
    }
    Ok(())
}
