use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use knnfunc::catalog::tail_envelope;
use knnfunc::estimator::{
    jackknife_single, jackknife_two, schedule_single, theoretical_exponent_single, theoretical_exponent_two,
    RateExponents, ScheduleConstants, Window,
};
use knnfunc::harness::validate::Suite;
use knnfunc::harness::{emit_results, fit_rate_exponent, run_mse_sweep, ExperimentConfig, OutputFormat, Report};
use knnfunc::{FunctionalSpec, PointSet};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Lib(#[from] knnfunc::Error),
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

#[derive(Parser)]
#[command(name = "knnfunc", version, about = "k-NN estimators of entropies and divergences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a functional from point files (CSV, one point per row).
    Estimate {
        #[arg(long)]
        input: PathBuf,
        /// Sample from the second density, for divergences.
        #[arg(long)]
        input2: Option<PathBuf>,
        #[arg(long)]
        functional: FunctionalSpec,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: Option<usize>,
        /// Average over all terms instead of truncating the k-NN volumes.
        #[arg(long)]
        no_truncation: bool,
        /// Smoothness of the first density in (0, 2]; sets the truncation schedule.
        #[arg(long, default_value_t = 2.0)]
        sigma: f64,
        /// Smoothness of the second density; defaults to `sigma`.
        #[arg(long, requires = "sigma")]
        tau: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Run an MSE sweep described by a JSON config and write the table as CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print theoretical bias and MSE exponents.
    Rates {
        #[arg(long)]
        functional: FunctionalSpec,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, requires = "l")]
        tau: Option<f64>,
        #[arg(long)]
        l: Option<usize>,
    },
    /// Run a self-check suite.
    Validate {
        #[arg(long, value_parser = ["gamma-oracle", "ks", "inc-gamma", "knn-equiv"])]
        suite: String,
    },
}

fn read_points(path: &PathBuf) -> Result<PointSet, CliError> {
    Ok(PointSet::read_csv(path)?)
}

#[allow(clippy::too_many_arguments)]
fn estimate(
    input: PathBuf,
    input2: Option<PathBuf>,
    spec: FunctionalSpec,
    k: usize,
    l: Option<usize>,
    no_truncation: bool,
    sigma: f64,
    tau: Option<f64>,
    as_json: bool,
) -> Result<(), CliError> {
    let x = read_points(&input)?;
    let d = x.dim();
    let y = input2.as_ref().map(read_points).transpose()?;
    let env = tail_envelope(&spec);
    let consts = ScheduleConstants::default();
    let (wu, wv) = if no_truncation {
        (Window::UNBOUNDED, Window::UNBOUNDED)
    } else {
        let wu = schedule_single(sigma, env.a, k, d, consts)?.window(x.len());
        let wv = match (&y, env.a_tilde, l) {
            (Some(y), Some(at), Some(l)) => schedule_single(tau.unwrap_or(sigma), at, l, d, consts)?.window(y.len()),
            _ => Window::UNBOUNDED,
        };
        (wu, wv)
    };
    let j = match (spec.arity(), &y) {
        (1, None) => jackknife_single(&x, &spec, k, wu)?,
        (2, Some(y)) => {
            let l = l.ok_or_else(|| CliError::Usage(format!("{spec} needs --l")))?;
            jackknife_two(&x, y, &spec, k, l, wu, wv)?
        }
        (1, Some(_)) => return Err(CliError::Usage(format!("{spec} takes a single input"))),
        _ => return Err(CliError::Usage(format!("{spec} needs --input2"))),
    };
    let e = j.estimate;
    if e.in_window * 2 < e.terms {
        eprintln!(
            "warning: only {} of {} terms fall inside the truncation window; consider --no-truncation",
            e.in_window, e.terms
        );
    }
    if as_json {
        let doc = json!({
            "functional": spec.to_string(),
            "k": k,
            "l": l,
            "d": d,
            "m": x.len(),
            "n": y.as_ref().map(|y| y.len()),
            "value": e.value,
            "std_error": j.std_error,
            "in_window": e.in_window,
            "non_finite": e.non_finite,
            "window_u": [wu.lower, wu.upper],
            "window_v": [wv.lower, wv.upper],
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
    } else {
        println!("{spec} = {} (jackknife std. error {})", e.value, j.std_error);
        println!("terms: {}, in window: {}, non-finite: {}", e.terms, e.in_window, e.non_finite);
    }
    Ok(())
}

fn sweep(config: PathBuf, out: PathBuf) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&config).map_err(|source| CliError::Read {
        path: config.clone(),
        source,
    })?;
    let cfg = ExperimentConfig::from_json(&text)?;
    let result = run_mse_sweep(&cfg)?;
    let fit = fit_rate_exponent(&result.rows).ok();
    let mut report = Report::new(result.rows);
    report.truth = Some(result.truth);
    report.fit = fit;
    emit_results(&report, OutputFormat::Csv, &out)?;
    if let Some(json_path) = &cfg.output {
        report.config = Some(cfg.clone());
        emit_results(&report, OutputFormat::Json, json_path)?;
    }
    println!("truth {} ({}, error {:.1e})", result.truth.value, result.truth.method.name(), result.truth.error);
    match fit {
        Some(f) => println!("fitted MSE exponent {:.4} (r^2 {:.4})", f.slope, f.r_squared),
        None => println!("no rate fit (needs at least 3 sizes with positive MSE)"),
    }
    Ok(())
}

fn print_rates(e: &RateExponents<f64>) {
    println!("lambda: {}", e.lambda);
    println!("variance exponent: {}", e.variance_exponent);
    println!("mse exponent: {}", e.mse_exponent);
    match e.regime_tilde {
        Some(rt) => println!("tail regimes: {:?}, {:?}", e.regime, rt),
        None => println!("tail regime: {:?}", e.regime),
    }
    if e.flags.is_empty() {
        println!("flags: none");
    } else {
        let names: Vec<String> = e
            .flags
            .iter()
            .map(|f| serde_json::to_value(f).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default())
            .collect();
        println!("flags: {}", names.join(", "));
    }
}

fn rates(spec: FunctionalSpec, sigma: f64, d: usize, k: usize, tau: Option<f64>, l: Option<usize>) -> Result<(), CliError> {
    let env = tail_envelope(&spec);
    let violations = env.check(k, l);
    let e = match (spec.arity(), env.a_tilde, l) {
        (1, _, _) => {
            spec.check_orders(k, None)?;
            theoretical_exponent_single(sigma, env.a, k, d)?
        }
        (2, Some(at), Some(l)) => {
            spec.check_orders(k, Some(l))?;
            theoretical_exponent_two(sigma, env.a, k, tau.unwrap_or(sigma), at, l, d)?
        }
        _ => return Err(CliError::Usage(format!("{spec} needs --l"))),
    };
    match (env.a_tilde, env.b_tilde) {
        (Some(at), Some(bt)) => println!("envelope: a = {}, b = {}, a~ = {at}, b~ = {bt}", env.a, env.b),
        _ => println!("envelope: a = {}, b = {}", env.a, env.b),
    }
    print_rates(&e);
    for v in violations {
        println!("side condition: {v:?}");
    }
    Ok(())
}

fn validate(suite: &str) -> Result<bool, CliError> {
    let suite: Suite = suite.parse()?;
    let rep = suite.run()?;
    for n in &rep.notes {
        println!("{n}");
    }
    for f in &rep.failures {
        println!("FAILED: {f}");
    }
    let verdict = if rep.passed() { "PASS" } else { "FAIL" };
    println!("{} {verdict}: {} checks, {} failures, worst {:.3e}", rep.name, rep.checks, rep.failures.len(), rep.worst);
    Ok(rep.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate {
            input,
            input2,
            functional,
            k,
            l,
            no_truncation,
            sigma,
            tau,
            json,
        } => estimate(input, input2, functional, k, l, no_truncation, sigma, tau, json).map(|_| true),
        Command::Sweep { config, out } => sweep(config, out).map(|_| true),
        Command::Rates {
            functional,
            sigma,
            d,
            k,
            tau,
            l,
        } => rates(functional, sigma, d, k, tau, l).map(|_| true),
        Command::Validate { suite } => validate(&suite),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
