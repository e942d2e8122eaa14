//! `siegellab` — batch verification runs over the number-theory kernels:
//! exact identity sweeps, Ramanujan/Gauss sum checks, Goldbach counts, the
//! two-way evaluation of the prime exponential square sum, conjecture
//! scans and real-zero scans of `L(s, chi)`.
//!
//! Every run writes one report (JSON, CSV for scans, or flattened text)
//! embedding the resolved configuration. Exit codes: 0 success, 1 when an
//! invariant assertion failed, 2 for invalid input.

mod commands;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use siegellab_core::{build_sieve, ConstantsConfig, PrimeSieve};

use commands::{CmdError, CommandOutput};
use report::{Report, ResolvedConfig};

/// Environment variable naming a directory for persisted sieve bitmaps.
const SIEVE_CACHE_ENV: &str = "SIEGELLAB_SIEVE_CACHE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Parser, Debug)]
#[command(
    name = "siegellab",
    version,
    about = "Verification runs over characters, exponential sums, Goldbach counts and L-function scans"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Sieve limit for prime-backed commands.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    sieve_limit: u64,

    /// Report format; csv is only available for scan commands.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Cap on internal parallelism (0 = library default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Omit the timestamp so identical runs are byte-identical.
    #[arg(long, global = true)]
    no_timestamp: bool,

    /// Conjecture constant for c1 scans.
    #[arg(long, global = true, default_value_t = 0.01)]
    c4: f64,
    /// Conjecture constant for c2 scans.
    #[arg(long, global = true, default_value_t = 0.01)]
    c6: f64,
    /// Conjecture constant for c3 scans.
    #[arg(long, global = true, default_value_t = 0.01)]
    c8: f64,
    /// Progression error-term constant; sets the prescribed x(q).
    #[arg(long, global = true, default_value_t = 6.0)]
    c11: f64,
    /// Lower-bound constant, must lie in (0, 1/4).
    #[arg(long, global = true, default_value_t = 0.01)]
    c12: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep the exact identities: Ramanujan closed form vs. defining sum,
    /// totient sandwich, divisor-sum identity, Gauss-sum identities.
    VerifyLemmas {
        #[arg(long, default_value_t = 300)]
        qmax: u64,
        #[arg(long, default_value_t = 400)]
        dmax: u64,
    },
    /// Ramanujan sum table c_q(k) for one modulus, or one value with --n.
    Ramanujan {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        n: Option<i64>,
    },
    /// Gauss sum, twist identity and tau^2 = chi(-1)q for one character.
    Gauss {
        #[arg(long, allow_hyphen_values = true)]
        d: i64,
        #[arg(long, allow_hyphen_values = true)]
        k: Option<i64>,
    },
    /// Goldbach representation counts R(n) and R_odd(n).
    Goldbach {
        #[arg(long)]
        n: u64,
    },
    /// The exponential square sum S both ways plus its decomposition.
    SSum {
        #[arg(long)]
        x: u64,
        #[arg(long)]
        q: Option<u64>,
        #[arg(long, allow_hyphen_values = true)]
        d: Option<i64>,
        /// Hypothetical real zero; enables the secondary term.
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Scan a Goldbach lower-bound conjecture and measure its constant.
    Conjectures {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        x: u64,
        #[arg(long)]
        q: Option<u64>,
    },
    /// Scan L(s, chi) on (0.01, 1) for certified real zeros.
    LfuncScan {
        #[arg(long, allow_hyphen_values = true)]
        d: i64,
        #[arg(long, default_value_t = 0.005)]
        step: f64,
    },
    /// Run every family at desk scale and aggregate one report.
    FullReport {
        #[arg(long, default_value_t = 40)]
        qmax: u64,
        #[arg(long, default_value_t = 40)]
        dmax: u64,
        #[arg(long)]
        x: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(all_passed) => {
            if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(CmdError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run `siegellab --help` for usage");
            ExitCode::from(2)
        }
        Err(CmdError::Invariant { name, detail }) => {
            eprintln!("invariant `{name}` violated: {detail}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<bool, CmdError> {
    let constants = ConstantsConfig {
        c4: cli.c4,
        c6: cli.c6,
        c8: cli.c8,
        c11: cli.c11,
        c12: cli.c12,
    };
    constants.validate().map_err(CmdError::from)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CmdError::Usage(format!("thread pool: {e}")))?;

    validate_flags(&cli)?;
    let config = resolve_config(&cli, &constants);
    let command_name = config.command.clone();
    let needs_sieve = matches!(
        cli.command,
        Command::Goldbach { .. }
            | Command::SSum { .. }
            | Command::Conjectures { .. }
            | Command::FullReport { .. }
    );

    let mut output = pool.install(|| -> Result<CommandOutput, CmdError> {
        let sieve = if needs_sieve {
            Some(acquire_sieve(cli.sieve_limit)?)
        } else {
            None
        };
        let sieve = sieve.as_ref();
        match &cli.command {
            Command::VerifyLemmas { qmax, dmax } => commands::verify_lemmas(*qmax, *dmax),
            Command::Ramanujan { q, n } => commands::ramanujan(*q, *n),
            Command::Gauss { d, k } => commands::gauss(*d, *k),
            Command::Goldbach { n } => commands::goldbach(sieve.expect("sieve"), *n),
            Command::SSum { x, q, d, beta } => commands::s_sum(
                sieve.expect("sieve"),
                *x,
                *q,
                *d,
                *beta,
                &constants,
            ),
            Command::Conjectures { kind, x, q } => {
                commands::conjectures(sieve.expect("sieve"), kind, *x, *q, &constants)
            }
            Command::LfuncScan { d, step } => commands::lfunc_scan(*d, *step),
            Command::FullReport { qmax, dmax, x } => commands::full_report(
                sieve.expect("sieve"),
                *qmax,
                *dmax,
                x.unwrap_or(10_000).min(cli.sieve_limit),
                &constants,
            ),
        }
    })?;

    let all_passed = output.assertions.all_passed();
    let report = Report {
        config,
        command: command_name,
        results: output.results,
        assertions: std::mem::take(&mut output.assertions).0,
        timestamp: if cli.no_timestamp {
            None
        } else {
            Some(chrono::Utc::now().to_rfc3339())
        },
    };

    let rendered = match cli.format {
        Format::Json => report::to_json(&report).map_err(io_usage)?,
        Format::Text => {
            let mut text = report::to_text(&report).map_err(io_usage)?;
            text.push_str(if all_passed {
                "status: all assertions passed\n"
            } else {
                "status: ASSERTION FAILURES (exit 1)\n"
            });
            text
        }
        Format::Csv => match &output.csv {
            Some(table) => report::to_csv(table),
            None => {
                return Err(CmdError::Usage(
                    "csv format is only available for scan commands (conjectures, lfunc-scan)"
                        .into(),
                ));
            }
        },
    };

    match &cli.output {
        Some(path) => {
            let mut file = std::fs::File::create(path)
                .map_err(|e| CmdError::Usage(format!("cannot create {}: {e}", path.display())))?;
            file.write_all(rendered.as_bytes())
                .map_err(|e| CmdError::Usage(format!("write failed: {e}")))?;
        }
        None => {
            print!("{rendered}");
        }
    }
    Ok(all_passed)
}

fn io_usage(e: std::io::Error) -> CmdError {
    CmdError::Usage(format!("report serialization: {e}"))
}

/// Command-specific flag validation, before any computation starts.
fn validate_flags(cli: &Cli) -> Result<(), CmdError> {
    let x = match &cli.command {
        Command::SSum { x, .. } | Command::Conjectures { x, .. } => Some(*x),
        Command::Goldbach { n } => Some(*n),
        Command::FullReport { x, .. } => *x,
        _ => None,
    };
    if let Some(x) = x {
        if x > cli.sieve_limit {
            return Err(CmdError::Usage(format!(
                "x = {x} exceeds --sieve-limit {}",
                cli.sieve_limit
            )));
        }
    }
    match &cli.command {
        Command::Conjectures { kind, q, .. } => {
            if !matches!(kind.as_str(), "c1" | "c2" | "c3") {
                return Err(CmdError::Usage(format!(
                    "conjectures: unknown --kind `{kind}` (expected c1, c2 or c3)"
                )));
            }
            if kind != "c1" && q.is_none() {
                return Err(CmdError::Usage(
                    "conjectures: --q is required for kinds c2 and c3".into(),
                ));
            }
        }
        Command::SSum { q, d, .. } => {
            if q.is_none() && d.is_none() {
                return Err(CmdError::Usage("s-sum: provide --q or --d".into()));
            }
        }
        Command::LfuncScan { step, .. } => {
            if !(*step > 0.0 && *step <= 0.01) {
                return Err(CmdError::Usage(format!(
                    "lfunc-scan: --step {step} must lie in (0, 0.01]"
                )));
            }
        }
        _ => {}
    }
    Ok(())
}

fn resolve_config(cli: &Cli, constants: &ConstantsConfig) -> ResolvedConfig {
    let command = match &cli.command {
        Command::VerifyLemmas { .. } => "verify-lemmas",
        Command::Ramanujan { .. } => "ramanujan",
        Command::Gauss { .. } => "gauss",
        Command::Goldbach { .. } => "goldbach",
        Command::SSum { .. } => "s-sum",
        Command::Conjectures { .. } => "conjectures",
        Command::LfuncScan { .. } => "lfunc-scan",
        Command::FullReport { .. } => "full-report",
    }
    .to_string();
    let mut config = ResolvedConfig {
        command,
        sieve_limit: cli.sieve_limit,
        x: None,
        q: None,
        d: None,
        n: None,
        k: None,
        qmax: None,
        dmax: None,
        kind: None,
        beta: None,
        step: None,
        constants: *constants,
        format: format!("{:?}", cli.format).to_lowercase(),
        output: cli.output.as_ref().map(|p| p.display().to_string()),
        no_timestamp: cli.no_timestamp,
    };
    match &cli.command {
        Command::VerifyLemmas { qmax, dmax } => {
            config.qmax = Some(*qmax);
            config.dmax = Some(*dmax);
        }
        Command::Ramanujan { q, n } => {
            config.q = Some(*q);
            config.n = *n;
        }
        Command::Gauss { d, k } => {
            config.d = Some(*d);
            config.k = *k;
        }
        Command::Goldbach { n } => {
            config.n = Some(*n as i64);
        }
        Command::SSum { x, q, d, beta } => {
            config.x = Some(*x);
            config.q = *q;
            config.d = *d;
            config.beta = *beta;
        }
        Command::Conjectures { kind, x, q } => {
            config.kind = Some(kind.clone());
            config.x = Some(*x);
            config.q = *q;
        }
        Command::LfuncScan { d, step } => {
            config.d = Some(*d);
            config.step = Some(*step);
        }
        Command::FullReport { qmax, dmax, x } => {
            config.qmax = Some(*qmax);
            config.dmax = Some(*dmax);
            config.x = *x;
        }
    }
    config
}

/// Builds the sieve, or loads/persists it under `SIEGELLAB_SIEVE_CACHE`
/// when that directory is configured.
fn acquire_sieve(limit: u64) -> Result<PrimeSieve, CmdError> {
    if let Ok(dir) = std::env::var(SIEVE_CACHE_ENV) {
        let dir = PathBuf::from(dir);
        let path = dir.join(format!("sieve-{limit}.slsv"));
        if path.is_file() {
            match PrimeSieve::load(&path, limit) {
                Ok(sieve) => return Ok(sieve),
                Err(e) => eprintln!(
                    "warning: ignoring sieve cache {}: {e}",
                    path.display()
                ),
            }
        }
        let sieve = build_sieve(limit).map_err(CmdError::from)?;
        if std::fs::create_dir_all(&dir).is_ok() {
            if let Err(e) = sieve.save(&path) {
                eprintln!("warning: could not persist sieve cache: {e}");
            }
        }
        return Ok(sieve);
    }
    build_sieve(limit).map_err(CmdError::from)
}
