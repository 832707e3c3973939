//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when an engine refuses the input (size or
//! budget guards, parameter ranges), 2 on usage errors. Reports go to
//! stdout or `--out`; diagnostics go to stderr.
//!
//! CSV output has the columns `experiment,deck,n,statistic,value`, one row
//! per statistic.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::deck::{play, uniform_arrangement, Arrangement, Deck, TieRule};
use crate::error::Error;
use crate::exact::{exact_pmf, optimal_value, MAX_ENUMERATION_CARDS};
use crate::harness::{
    clt_experiment, conditional_clt_check, poisson_experiment, run_mc, variance_decomposition,
    CltReport, CondCltReport, ExperimentReport, PoissonReport, VarianceDecomposition,
};
use crate::rng::RngStream;
use crate::ties::{runs, tie_counts};

/// Environment variable consulted when `--workers` is absent.
pub const WORKERS_ENV: &str = "CARDGUESS_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "cardguess",
    version,
    about = "Greedy card guessing with complete feedback"
)]
struct Cli {
    #[command(subcommand)]
    command: CommandArgs,
}

#[derive(Debug, Clone, Args)]
struct DeckArgs {
    /// Explicit multiplicities, e.g. 3,3,2
    #[arg(long, conflicts_with = "balanced")]
    deck: Option<String>,
    /// Balanced deck, e.g. n=100,m=3
    #[arg(long)]
    balanced: Option<String>,
}

#[derive(Debug, Clone, Args)]
struct RunArgs {
    #[arg(long, default_value_t = 100_000)]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
}

#[derive(Debug, Clone, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum CommandArgs {
    /// Exact score distribution by profile recursion
    Exact {
        #[command(flatten)]
        deck: DeckArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo score distribution
    Simulate {
        #[command(flatten)]
        deck: DeckArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Tie statistics and play configurations of one arrangement
    Decompose {
        #[command(flatten)]
        deck: DeckArgs,
        /// 1-based card types, top to bottom unless --from-bottom; random if absent
        #[arg(long)]
        arrangement: Option<String>,
        #[arg(long)]
        from_bottom: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Law of W_{j,t} against its Poisson approximation
    Poisson {
        #[command(flatten)]
        deck: DeckArgs,
        #[arg(long)]
        j: u32,
        #[arg(long)]
        t: usize,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Balanced decks of growing size
    Clt {
        #[arg(long)]
        m: u32,
        /// Comma-separated numbers of types
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Law-of-total-variance split of the score variance
    Varcheck {
        #[command(flatten)]
        deck: DeckArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exact normal approximation gap of conditional score laws
    Condclt {
        /// Tie counts, e.g. 1,2; repeat for several vectors
        #[arg(long = "w-tilde", required = true)]
        w_tilde: Vec<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Exact,
    Simulate,
    Decompose {
        arrangement: Option<Vec<usize>>,
        from_bottom: bool,
    },
    Poisson {
        j: u32,
        t: usize,
    },
    Clt {
        m: u32,
        n_list: Vec<usize>,
    },
    Varcheck,
    Condclt {
        w_tilde: Vec<Vec<u32>>,
    },
}

/// Validated command line.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub command: Command,
    pub deck: Option<Deck>,
    pub reps: u64,
    pub seed: u64,
    pub workers: usize,
    pub format: Format,
    pub out: Option<PathBuf>,
}

/// Failure with the exit status it maps to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidDeck(_) | Error::InvalidArrangement(_) => 2,
            _ => 1,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn resolve_deck(args: &DeckArgs) -> Result<Deck, CliError> {
    match (&args.deck, &args.balanced) {
        (Some(spec), None) => spec
            .parse()
            .map_err(|e: Error| CliError::usage(e.to_string())),
        (None, Some(spec)) => {
            if !spec.contains('=') {
                return Err(CliError::usage(format!(
                    "--balanced expects n=<types>,m=<copies>, got {spec:?}"
                )));
            }
            spec.parse()
                .map_err(|e: Error| CliError::usage(e.to_string()))
        }
        (Some(_), Some(_)) => Err(CliError::usage("--deck and --balanced conflict")),
        (None, None) => Err(CliError::usage("a deck is required: --deck or --balanced")),
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| CliError::usage(format!("cannot parse {what} entry {x:?}")))
        })
        .collect()
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Parses and validates a full argument vector (including the program name).
pub fn parse_args<I, T>(argv: I) -> Result<CliConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError {
        code: e.exit_code(),
        message: e.render().to_string(),
    })?;
    let mut config = CliConfig {
        command: Command::Exact,
        deck: None,
        reps: 1,
        seed: 0,
        workers: 1,
        format: Format::Json,
        out: None,
    };
    let apply_run = |config: &mut CliConfig, run: &RunArgs| -> Result<(), CliError> {
        if run.reps < 1 {
            return Err(CliError::usage("--reps must be at least 1"));
        }
        if run.workers == Some(0) {
            return Err(CliError::usage("--workers must be at least 1"));
        }
        config.reps = run.reps;
        config.seed = run.seed;
        config.workers = run.workers.unwrap_or_else(default_workers);
        Ok(())
    };
    let output = match &cli.command {
        CommandArgs::Exact { deck, output } => {
            config.deck = Some(resolve_deck(deck)?);
            output
        }
        CommandArgs::Simulate { deck, run, output } => {
            config.command = Command::Simulate;
            config.deck = Some(resolve_deck(deck)?);
            apply_run(&mut config, run)?;
            output
        }
        CommandArgs::Decompose {
            deck,
            arrangement,
            from_bottom,
            seed,
            output,
        } => {
            let arrangement = arrangement
                .as_deref()
                .map(|s| parse_list::<usize>(s, "arrangement"))
                .transpose()?;
            if let Some(a) = &arrangement {
                if a.contains(&0) {
                    return Err(CliError::usage("arrangement card types are 1-based"));
                }
            }
            config.command = Command::Decompose {
                arrangement,
                from_bottom: *from_bottom,
            };
            config.deck = Some(resolve_deck(deck)?);
            config.seed = *seed;
            output
        }
        CommandArgs::Poisson {
            deck,
            j,
            t,
            run,
            output,
        } => {
            config.command = Command::Poisson { j: *j, t: *t };
            config.deck = Some(resolve_deck(deck)?);
            apply_run(&mut config, run)?;
            output
        }
        CommandArgs::Clt {
            m,
            n_list,
            run,
            output,
        } => {
            if *m < 1 || n_list.contains(&0) {
                return Err(CliError::usage(
                    "--m and every --n-list entry must be at least 1",
                ));
            }
            config.command = Command::Clt {
                m: *m,
                n_list: n_list.clone(),
            };
            apply_run(&mut config, run)?;
            output
        }
        CommandArgs::Varcheck { deck, run, output } => {
            config.command = Command::Varcheck;
            config.deck = Some(resolve_deck(deck)?);
            apply_run(&mut config, run)?;
            output
        }
        CommandArgs::Condclt { w_tilde, output } => {
            let w_tilde = w_tilde
                .iter()
                .map(|s| parse_list::<u32>(s, "tie count"))
                .collect::<Result<Vec<_>, _>>()?;
            if w_tilde.iter().any(|w| w.contains(&0)) {
                return Err(CliError::usage("tie counts must be at least 1"));
            }
            config.command = Command::Condclt { w_tilde };
            output
        }
    };
    config.format = output.format;
    config.out = output.out.clone();
    Ok(config)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExactReport {
    pub experiment: String,
    pub deck: String,
    pub pmf: BTreeMap<usize, f64>,
    pub mean: f64,
    pub var: f64,
    /// Best expected score over all strategies, for decks small enough to enumerate.
    pub optimal: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DecomposeReport {
    pub experiment: String,
    pub deck: String,
    /// 1-based card types, top to bottom.
    pub arrangement: Vec<usize>,
    /// `T_1..T_m`.
    pub t: Vec<usize>,
    pub w_tilde: Vec<u32>,
    pub runs: Vec<[usize; 2]>,
    pub score: usize,
}

/// Every report the CLI can emit.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Report {
    Exact(ExactReport),
    Simulate(ExperimentReport),
    Decompose(DecomposeReport),
    Poisson(PoissonReport),
    Clt(CltReport),
    Varcheck(VarianceDecomposition),
    Condclt(CondCltReport),
}

#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    experiment: &'a str,
    deck: &'a str,
    n: usize,
    statistic: String,
    value: f64,
}

fn experiment_rows<'a>(r: &'a ExperimentReport, out: &mut Vec<CsvRow<'a>>) {
    let mut push = |statistic: String, value: f64| {
        out.push(CsvRow {
            experiment: &r.experiment,
            deck: &r.deck,
            n: r.n,
            statistic,
            value,
        })
    };
    push("reps".into(), r.reps as f64);
    push("mean".into(), r.mean);
    push("var".into(), r.var);
    push("predicted".into(), r.predicted);
    if let Some(g) = r.ks_gap {
        push("ks_gap".into(), g);
    }
    push("mean_mu_prime".into(), r.extras.mean_mu_prime);
    push("var_mu_prime".into(), r.extras.var_mu_prime);
    push("mean_sigma2_prime".into(), r.extras.mean_sigma2_prime);
    for (j, w) in r.extras.mean_w_tilde.iter().enumerate() {
        push(format!("mean_w_tilde_{}", j + 1), *w);
    }
    for (k, c) in &r.histogram {
        push(format!("hist_{k}"), *c as f64);
    }
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut rows = Vec::new();
        match self {
            Report::Exact(r) => {
                let n = r.deck.split(',').count();
                let mut push = |statistic: String, value: f64| {
                    rows.push(CsvRow {
                        experiment: &r.experiment,
                        deck: &r.deck,
                        n,
                        statistic,
                        value,
                    })
                };
                push("mean".into(), r.mean);
                push("var".into(), r.var);
                if let Some(v) = r.optimal {
                    push("optimal".into(), v);
                }
                for (k, p) in &r.pmf {
                    push(format!("pmf_{k}"), *p);
                }
            }
            Report::Simulate(r) => experiment_rows(r, &mut rows),
            Report::Clt(r) => {
                for rep in &r.reports {
                    experiment_rows(rep, &mut rows);
                }
                for inc in &r.increments {
                    for (name, v) in [
                        ("increment_observed", inc.observed),
                        ("increment_predicted", inc.predicted),
                        ("increment_se", inc.se),
                    ] {
                        rows.push(CsvRow {
                            experiment: &r.experiment,
                            deck: "",
                            n: inc.n2,
                            statistic: format!("{name}_from_{}", inc.n1),
                            value: v,
                        });
                    }
                }
            }
            Report::Decompose(r) => {
                let n = r.w_tilde.len();
                for (j, t) in r.t.iter().enumerate() {
                    rows.push(CsvRow {
                        experiment: &r.experiment,
                        deck: &r.deck,
                        n,
                        statistic: format!("t_{}", j + 1),
                        value: *t as f64,
                    });
                }
                for (j, w) in r.w_tilde.iter().enumerate() {
                    rows.push(CsvRow {
                        experiment: &r.experiment,
                        deck: &r.deck,
                        n,
                        statistic: format!("w_tilde_{}", j + 1),
                        value: *w as f64,
                    });
                }
            }
            Report::Poisson(r) => {
                let mut push = |statistic: String, value: f64| {
                    rows.push(CsvRow {
                        experiment: &r.experiment,
                        deck: &r.deck,
                        n: r.n,
                        statistic,
                        value,
                    })
                };
                push("j".into(), r.j as f64);
                push("t".into(), r.t as f64);
                push("lambda".into(), r.lambda);
                push("mean_w".into(), r.mean_w);
                push("tv".into(), r.tv);
                push("tv_ci_low".into(), r.tv_ci[0]);
                push("tv_ci_high".into(), r.tv_ci[1]);
                push("t_over_n".into(), r.t_over_n);
                for (k, p) in &r.pmf {
                    push(format!("pmf_{k}"), *p);
                }
            }
            Report::Varcheck(r) => {
                for (name, v) in [
                    ("mean", r.mean),
                    ("var_s", r.var_s),
                    ("var_mu_prime", r.var_mu_prime),
                    ("mean_sigma2_prime", r.mean_sigma2_prime),
                    ("residual", r.residual),
                    ("residual_ci_low", r.residual_ci[0]),
                    ("residual_ci_high", r.residual_ci[1]),
                ] {
                    rows.push(CsvRow {
                        experiment: &r.experiment,
                        deck: &r.deck,
                        n: r.n,
                        statistic: name.into(),
                        value: v,
                    });
                }
            }
            Report::Condclt(r) => {
                for (i, e) in r.entries.iter().enumerate() {
                    rows.push(CsvRow {
                        experiment: &r.experiment,
                        deck: "",
                        n: e.w_tilde.iter().map(|&w| w as usize).sum(),
                        statistic: format!("gap_{i}"),
                        value: e.gap.unwrap_or(f64::NAN),
                    });
                }
            }
        }
        let mut writer = csv::Writer::from_writer(Vec::new());
        for row in rows {
            writer.serialize(row).expect("in-memory csv");
        }
        String::from_utf8(writer.into_inner().expect("in-memory csv")).expect("utf-8 csv")
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }
}

fn exact_report(deck: &Deck) -> Result<ExactReport, CliError> {
    let pmf = exact_pmf::<f64>(deck)?;
    let optimal = if deck.total() <= MAX_ENUMERATION_CARDS {
        Some(optimal_value::<f64>(deck)?)
    } else {
        None
    };
    Ok(ExactReport {
        experiment: "exact".into(),
        deck: deck.spec(),
        pmf: pmf.to_map(),
        mean: pmf.mean(),
        var: pmf.variance(),
        optimal,
    })
}

fn decompose_report(
    deck: &Deck,
    cards: Option<&[usize]>,
    from_bottom: bool,
    seed: u64,
) -> Result<DecomposeReport, CliError> {
    let mut rng = RngStream::new(seed);
    let arrangement = match cards {
        Some(cards) => {
            let zero_based = cards.iter().map(|c| c - 1).collect();
            if from_bottom {
                Arrangement::from_bottom(deck, zero_based)?
            } else {
                Arrangement::from_top(deck, zero_based)?
            }
        }
        None => uniform_arrangement(deck, &mut rng),
    };
    let tc = tie_counts(&arrangement);
    let trace = play(deck, &arrangement, TieRule::Uniform, &mut rng);
    Ok(DecomposeReport {
        experiment: "decompose".into(),
        deck: deck.spec(),
        arrangement: arrangement.cards().iter().map(|c| c + 1).collect(),
        t: tc.thresholds[1..].to_vec(),
        w_tilde: tc.w_tilde,
        runs: runs(&trace)
            .into_iter()
            .rev()
            .map(|(j, s)| [j as usize, s])
            .collect(),
        score: trace.score,
    })
}

/// Runs the configured engine.
pub fn execute(config: &CliConfig) -> Result<Report, CliError> {
    let deck = || {
        config
            .deck
            .as_ref()
            .ok_or_else(|| CliError::usage("a deck is required"))
    };
    let (reps, seed, workers) = (config.reps, config.seed, config.workers);
    Ok(match &config.command {
        Command::Exact => Report::Exact(exact_report(deck()?)?),
        Command::Simulate => Report::Simulate(run_mc(deck()?, reps, seed, workers)?),
        Command::Decompose {
            arrangement,
            from_bottom,
        } => Report::Decompose(decompose_report(
            deck()?,
            arrangement.as_deref(),
            *from_bottom,
            seed,
        )?),
        Command::Poisson { j, t } => {
            Report::Poisson(poisson_experiment(deck()?, *j, *t, reps, seed, workers)?)
        }
        Command::Clt { m, n_list } => Report::Clt(clt_experiment(*m, n_list, reps, seed, workers)?),
        Command::Varcheck => {
            Report::Varcheck(variance_decomposition(deck()?, reps, seed, workers)?)
        }
        Command::Condclt { w_tilde } => Report::Condclt(conditional_clt_check(w_tilde)?),
    })
}

/// Runs the engine and writes the report; returns the exit status.
pub fn dispatch(config: &CliConfig) -> i32 {
    let report = match execute(config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {}", e.message);
            return e.code;
        }
    };
    let text = report.render(config.format);
    match &config.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return 1;
            }
        }
        None => print!("{text}"),
    }
    0
}

/// Entry point shared by the binary: parse, dispatch, return the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_args(argv) {
        Ok(config) => dispatch(&config),
        Err(e) => {
            if e.code == 0 {
                print!("{}", e.message);
            } else {
                eprint!("{}", e.message);
                if !e.message.ends_with('\n') {
                    eprintln!();
                }
            }
            e.code
        }
    }
}
