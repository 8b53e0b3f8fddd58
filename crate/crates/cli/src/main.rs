mod inputs;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use matchstat_core::classic_tests::{
    discordant_counts, hotelling_on_dataset, mcnemar, PValueMode, TestResult,
};
use matchstat_core::clr::{
    fit_mle, fit_strata, lr_test, score_test, score_test_model, wald_test, FitOptions, FitResult,
    StrataModel,
};
use matchstat_core::equivalence_lab::{
    run_equivalence_experiment, sample_k, LocalAlternativeSpec, NoiseFamily,
};
use matchstat_core::matched_data::{pair_differences, parse_dataset, MatchedDataset};
use matchstat_core::Error;

use inputs::{delta_tag, parse_delta_panels, parse_sigma};

const THREADS_VAR: &str = "MATCHSTAT_THREADS";

/// Matched case-control tests, conditional logistic regression and
/// equivalence experiments.
#[derive(Debug, Parser)]
#[command(name = "matchstat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a hypothesis test of no association on a matched data file.
    Test {
        #[arg(value_enum)]
        method: TestMethod,
        /// CSV with header `stratum,y,x1,...`.
        #[arg(long)]
        data: PathBuf,
        /// Reference distribution for the Hotelling p-value.
        #[arg(long, value_enum, default_value_t = PValueArg::Chisq)]
        pvalue: PValueArg,
        /// Emit JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Fit conditional logistic regression and print the estimates as JSON.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = StrataArg::General)]
        strata: StrataArg,
    },
    /// Compare n(score - hotelling) with draws of its limit, one panel per delta.
    Equivalence {
        #[command(flatten)]
        limit: LimitArgs,
        /// Pairs per replicate.
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
        n: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        reps: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "gaussian")]
        family: NoiseFamily,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        bins: u64,
    },
    /// Print draws of the limit variable, one per line.
    SampleK {
        #[command(flatten)]
        limit: LimitArgs,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        reps: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

#[derive(Debug, clap::Args)]
struct LimitArgs {
    /// Number of predictors.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    p: u64,
    /// Comma-separated values; with p > 1 separate panels by ';'.
    #[arg(long, allow_hyphen_values = true)]
    delta: String,
    /// `identity`, `diag:a,b,...` or a CSV matrix file.
    #[arg(long, default_value = "identity")]
    sigma: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TestMethod {
    Mcnemar,
    Hotelling,
    ClrScore,
    ClrWald,
    ClrLr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PValueArg {
    Chisq,
    ExactF,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrataArg {
    General,
    Pairs,
}

#[derive(Debug)]
enum Failure {
    /// Bad input or a violated precondition.
    Input(String),
    NonConvergence(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Internal(_) => 1,
            Self::Input(_) => 2,
            Self::NonConvergence(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Input(m) | Self::NonConvergence(m) | Self::Internal(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::MleUnavailable(_) => Self::NonConvergence(e.to_string()),
            Error::NonFinite(_) => Self::Internal(e.to_string()),
            other => Self::Input(other.to_string()),
        }
    }
}

fn internal(e: impl std::fmt::Display) -> Failure {
    Failure::Internal(e.to_string())
}

type CliResult<T> = Result<T, Failure>;

fn load(path: &Path) -> CliResult<MatchedDataset> {
    let file = File::open(path)
        .map_err(|e| Failure::Input(format!("cannot open {}: {e}", path.display())))?;
    parse_dataset(io::BufReader::new(file))
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(internal)?;
    println!("{text}");
    Ok(())
}

fn print_table(result: &TestResult) {
    println!("{:<10} {}", "method", result.method.as_str());
    println!("{:<10} {:.6}", "statistic", result.statistic);
    println!("{:<10} {}", "df", result.df);
    println!("{:<10} {:.6e}", "p_value", result.p_value);
    println!("{:<10} {}", "n", result.n);
    if let Some(w) = &result.warning {
        println!("{:<10} {w}", "warning");
    }
}

fn fit_dataset(data: &MatchedDataset) -> CliResult<FitResult> {
    let opts = FitOptions::default();
    Ok(if data.all_pairs() {
        fit_mle(&pair_differences(data)?, &opts)?
    } else {
        fit_strata(data, &opts)?
    })
}

fn run_test(method: TestMethod, path: &Path, pvalue: PValueArg, json: bool) -> CliResult<()> {
    if pvalue == PValueArg::ExactF && !matches!(method, TestMethod::Hotelling) {
        return Err(Failure::Input(
            "--pvalue exact-f applies only to hotelling".into(),
        ));
    }
    let data = load(path)?;
    let result = match method {
        TestMethod::Mcnemar => mcnemar(&discordant_counts(&data)?)?,
        TestMethod::Hotelling => {
            let mode = match pvalue {
                PValueArg::Chisq => PValueMode::ChiSquare,
                PValueArg::ExactF => PValueMode::ExactF,
            };
            hotelling_on_dataset(&data, mode)?
        }
        TestMethod::ClrScore if data.all_pairs() => score_test(&pair_differences(&data)?)?,
        TestMethod::ClrScore => score_test_model(&StrataModel::new(&data)?)?,
        TestMethod::ClrWald => wald_test(&fit_dataset(&data)?)?,
        TestMethod::ClrLr => {
            let fit = fit_dataset(&data)?;
            if data.all_pairs() {
                lr_test(&fit, &pair_differences(&data)?)?
            } else {
                lr_test(&fit, &StrataModel::new(&data)?)?
            }
        }
    };
    if json {
        print_json(&result)
    } else {
        print_table(&result);
        Ok(())
    }
}

fn run_fit(path: &Path, strata: StrataArg) -> CliResult<()> {
    let data = load(path)?;
    let opts = FitOptions::default();
    let fit = match strata {
        StrataArg::General => fit_strata(&data, &opts)?,
        StrataArg::Pairs => fit_mle(&pair_differences(&data)?, &opts)?,
    };
    print_json(&fit.report())?;
    if fit.converged {
        Ok(())
    } else {
        Err(Failure::NonConvergence(
            fit.diagnostic
                .unwrap_or_else(|| "fit did not converge".into()),
        ))
    }
}

fn write_file(
    path: &Path,
    write: impl FnOnce(&mut BufWriter<File>) -> CliResult<()>,
) -> CliResult<()> {
    let file = File::create(path)
        .map_err(|e| Failure::Input(format!("cannot create {}: {e}", path.display())))?;
    let mut out = BufWriter::new(file);
    write(&mut out)?;
    out.flush()
        .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}

#[allow(clippy::too_many_arguments)]
fn run_equivalence(
    limit: &LimitArgs,
    n: usize,
    reps: usize,
    seed: u64,
    out: &Path,
    family: NoiseFamily,
    bins: usize,
) -> CliResult<()> {
    let p = limit.p as usize;
    let panels = parse_delta_panels(&limit.delta, p).map_err(Failure::Input)?;
    let sigma = parse_sigma(&limit.sigma, p).map_err(Failure::Input)?;
    fs::create_dir_all(out)
        .map_err(|e| Failure::Input(format!("cannot create {}: {e}", out.display())))?;

    println!(
        "{:<16} {:>8} {:>8} {:>10} {:>12}",
        "delta", "n", "reps", "degenerate", "ks_distance"
    );
    for delta in panels {
        let spec = LocalAlternativeSpec::new(delta.clone(), sigma.clone(), n, reps, seed)
            .with_noise(family);
        let report = run_equivalence_experiment(&spec)?;
        let (emp_hist, k_hist) = report.histograms(bins)?;
        let tag = delta_tag(&delta);

        write_file(&out.join(format!("report_delta{tag}.json")), |w| {
            serde_json::to_writer_pretty(&mut *w, &report).map_err(internal)?;
            writeln!(w).map_err(internal)
        })?;
        write_file(&out.join(format!("k_hist_delta{tag}.csv")), |w| {
            Ok(k_hist.write_csv(w)?)
        })?;
        write_file(&out.join(format!("emp_hist_delta{tag}.csv")), |w| {
            Ok(emp_hist.write_csv(w)?)
        })?;
        println!(
            "{:<16} {:>8} {:>8} {:>10} {:>12.6}",
            tag.replace('_', ","),
            n,
            reps,
            report.degenerate_count,
            report.ks_distance
        );
    }
    Ok(())
}

fn run_sample_k(limit: &LimitArgs, reps: usize, seed: u64) -> CliResult<()> {
    let p = limit.p as usize;
    let panels = parse_delta_panels(&limit.delta, p).map_err(Failure::Input)?;
    let [delta] = panels.as_slice() else {
        return Err(Failure::Input("sample-k takes a single delta panel".into()));
    };
    let sigma = parse_sigma(&limit.sigma, p).map_err(Failure::Input)?;
    let samples = sample_k(delta, &sigma, reps, seed)?;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for k in samples {
        if let Err(e) = writeln!(out, "{k}") {
            if e.kind() == io::ErrorKind::BrokenPipe {
                return Ok(());
            }
            return Err(internal(e));
        }
    }
    match out.flush() {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(internal(e)),
        _ => Ok(()),
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::Input(format!("{THREADS_VAR} must be a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(internal)
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Test {
            method,
            data,
            pvalue,
            json,
        } => run_test(method, &data, pvalue, json),
        Command::Fit { data, strata } => run_fit(&data, strata),
        Command::Equivalence {
            limit,
            n,
            reps,
            seed,
            out,
            family,
            bins,
        } => run_equivalence(
            &limit,
            n as usize,
            reps as usize,
            seed,
            &out,
            family,
            bins as usize,
        ),
        Command::SampleK { limit, reps, seed } => run_sample_k(&limit, reps as usize, seed),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}
