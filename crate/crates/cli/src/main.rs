//! Command-line front end: parse a phase polynomial, run one of the
//! analyses and emit a JSON report envelope (or CSV rows).
//!
//! Exit codes: 0 success, 2 malformed input or usage error, 3 degenerate
//! phase (its derivative vanishes identically), 4 numerical failure.

use clap::{Args, Parser, Subcommand};
use oscform::fracpoly::{FracPoly, PolyError};
use oscform::invariants::AnalysisOutcome;
use oscform::oscquad::{
    decay_fit, log_lambda_grid, sublevel_scan, CutoffSpec, QuadConfig, SublevelMethod,
};
use oscform::rational::{parse_rat, Rat};
use oscform::resolve::{resolve, ResolveOptions};
use serde_json::json;

const EXIT_OK: i32 = 0;
const EXIT_USAGE: i32 = 2;
const EXIT_DEGENERATE: i32 = 3;
const EXIT_NUMERICAL: i32 = 4;

#[derive(Parser)]
#[command(name = "oscform", version, about = "Decay analysis of trilinear oscillatory forms with polynomial phases")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args)]
struct PhaseArgs {
    /// Phase polynomial, e.g. "x^2*y - 1/3*y^4"
    #[arg(long, allow_hyphen_values = true)]
    phase: String,
    /// Treat the input as the already-differentiated polynomial rather
    /// than the phase itself
    #[arg(long, default_value_t = false)]
    as_ds: bool,
}

#[derive(Subcommand)]
enum Verb {
    /// Compute the decay invariants and exponent table entry
    Analyze {
        #[command(flatten)]
        phase: PhaseArgs,
        /// Emit JSON (default)
        #[arg(long, conflicts_with = "csv")]
        json: bool,
        /// Emit a CSV row instead of JSON
        #[arg(long)]
        csv: bool,
    },
    /// Run the resolution-of-singularities decomposition
    Decompose {
        #[command(flatten)]
        phase: PhaseArgs,
        #[arg(long, default_value_t = 24)]
        max_depth: usize,
        /// Initial neighborhood size (a rational, rounded down to a power
        /// of two)
        #[arg(long, default_value = "1/16")]
        epsilon: String,
        /// Dominance margin factor of the good-region construction
        #[arg(long, default_value = "2")]
        margin: String,
        /// Destination of the JSON report: a path, or "-" for stdout
        #[arg(long, default_value = "-")]
        json: String,
    },
    /// Evaluate the form along a lambda grid and fit the decay
    Verify {
        #[command(flatten)]
        phase: PhaseArgs,
        #[arg(long, default_value_t = 256.0)]
        lambda_min: f64,
        #[arg(long, default_value_t = 1048576.0)]
        lambda_max: f64,
        #[arg(long, default_value_t = 12)]
        points: usize,
        /// Oscillation resolution in nodes per period
        #[arg(long, default_value_t = 10)]
        ppp: u32,
        /// Emit CSV rows (lambda, re, im, abs, predicted_bound)
        #[arg(long)]
        csv: bool,
    },
    /// Estimate sublevel-set measures over a range of thresholds
    Sublevel {
        #[command(flatten)]
        phase: PhaseArgs,
        #[arg(long, default_value_t = 9.5367431640625e-7)] // 2^-20
        eps_min: f64,
        #[arg(long, default_value_t = 0.015625)] // 2^-6
        eps_max: f64,
        #[arg(long, default_value_t = 4096)]
        grid: u32,
        /// Monte Carlo with this many samples instead of the grid
        /// (seeded by OSC_SEED when set)
        #[arg(long)]
        mc: Option<u64>,
        /// Emit CSV rows (epsilon, measure, stderr)
        #[arg(long)]
        csv: bool,
    },
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(run(cli));
}

fn envelope(verb: &str, phase: &str, as_ds: bool, options: serde_json::Value, started: std::time::Instant, result: serde_json::Value) -> serde_json::Value {
    json!({
        "tool": {"name": "oscform", "version": env!("CARGO_PKG_VERSION")},
        "input": {"verb": verb, "phase": phase, "as_ds": as_ds, "options": options},
        "timing_ms": started.elapsed().as_secs_f64() * 1e3,
        "result": result,
    })
}

fn parse_phase(text: &str) -> Result<FracPoly, i32> {
    match FracPoly::parse(text) {
        Ok(p) => Ok(p),
        Err(e) => {
            eprintln!("error: {e}");
            Err(EXIT_USAGE)
        }
    }
}

/// The polynomial to feed the resolution/invariant pipeline: the input
/// itself with --as-ds, otherwise its mixed derivative.
fn derived(phase: &FracPoly, as_ds: bool) -> Result<FracPoly, i32> {
    if as_ds {
        return Ok(phase.clone());
    }
    match phase.apply_d() {
        Ok(p) => Ok(p),
        Err(PolyError::FractionalExponent(..)) => {
            eprintln!("error: the phase must have integer exponents");
            Err(EXIT_USAGE)
        }
        Err(e) => {
            eprintln!("error: {e}");
            Err(EXIT_NUMERICAL)
        }
    }
}

fn parse_rational_flag(text: &str, what: &str) -> Result<Rat, i32> {
    match parse_rat(text) {
        Some(r) => Ok(r),
        None => {
            eprintln!("error: {what} must be a rational like 1/16");
            Err(EXIT_USAGE)
        }
    }
}

fn run(cli: Cli) -> i32 {
    match cli.verb {
        Verb::Analyze { phase, csv, .. } => {
            let started = std::time::Instant::now();
            let poly = match parse_phase(&phase.phase) {
                Ok(p) => p,
                Err(code) => return code,
            };
            let outcome = match oscform::invariants::decay_report(&poly, phase.as_ds) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_USAGE;
                }
            };
            match outcome {
                AnalysisOutcome::Invariants(inv) => {
                    if csv {
                        println!("n,alpha,beta,gamma,d0,d1,kappa,delta,mu,sharp,case_label");
                        println!(
                            "{},{},{},{},{},{},{},{},{},{},{}",
                            inv.n,
                            inv.alpha,
                            inv.beta,
                            inv.gamma,
                            inv.d0,
                            inv.d1,
                            inv.kappa,
                            oscform::rational::rat_string(&inv.delta),
                            inv.mu,
                            inv.sharp,
                            inv.case_label
                        );
                    } else {
                        let mut result = serde_json::to_value(&inv).unwrap();
                        result["kind"] = json!("invariants");
                        let env = envelope(
                            "analyze",
                            &phase.phase,
                            phase.as_ds,
                            json!({"format": if csv { "csv" } else { "json" }}),
                            started,
                            result,
                        );
                        println!("{}", serde_json::to_string_pretty(&env).unwrap());
                    }
                    EXIT_OK
                }
                AnalysisOutcome::Degenerate(report) => {
                    let env = envelope(
                        "analyze",
                        &phase.phase,
                        phase.as_ds,
                        json!({}),
                        started,
                        json!({"kind": "degenerate", "reason": report.reason}),
                    );
                    println!("{}", serde_json::to_string_pretty(&env).unwrap());
                    EXIT_DEGENERATE
                }
            }
        }

        Verb::Decompose {
            phase,
            max_depth,
            epsilon,
            margin,
            json: json_dest,
        } => {
            let started = std::time::Instant::now();
            let poly = match parse_phase(&phase.phase) {
                Ok(p) => p,
                Err(code) => return code,
            };
            let target = match derived(&poly, phase.as_ds) {
                Ok(p) => p,
                Err(code) => return code,
            };
            if target.is_zero() {
                let env = envelope(
                    "decompose",
                    &phase.phase,
                    phase.as_ds,
                    json!({"max_depth": max_depth}),
                    started,
                    json!({"kind": "degenerate",
                           "reason": "derivative vanishes identically; nothing to decompose"}),
                );
                println!("{}", serde_json::to_string_pretty(&env).unwrap());
                return EXIT_DEGENERATE;
            }
            let eps = match parse_rational_flag(&epsilon, "--epsilon") {
                Ok(r) => r,
                Err(code) => return code,
            };
            let margin = match parse_rational_flag(&margin, "--margin") {
                Ok(r) => r,
                Err(code) => return code,
            };
            let opts = ResolveOptions {
                max_depth,
                epsilon0: eps,
                margin: margin.clone(),
            };
            let tree = match resolve(&target, &opts) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_NUMERICAL;
                }
            };
            let mut result = tree.to_json();
            result["kind"] = json!("tree");
            result["good_leaves"] = json!(tree.good_leaves().len());
            let env = envelope(
                "decompose",
                &phase.phase,
                phase.as_ds,
                json!({"max_depth": max_depth, "epsilon": epsilon, "margin": margin.to_string()}),
                started,
                result,
            );
            let text = serde_json::to_string_pretty(&env).unwrap();
            if json_dest != "-" {
                if let Err(e) = std::fs::write(&json_dest, &text) {
                    eprintln!("error: cannot write {json_dest}: {e}");
                    return EXIT_NUMERICAL;
                }
            }
            println!("{text}");
            EXIT_OK
        }

        Verb::Verify {
            phase,
            lambda_min,
            lambda_max,
            points,
            ppp,
            csv,
        } => {
            let started = std::time::Instant::now();
            let poly = match parse_phase(&phase.phase) {
                Ok(p) => p,
                Err(code) => return code,
            };
            if phase.as_ds {
                eprintln!("error: verify operates on the phase itself, not its derivative");
                return EXIT_USAGE;
            }
            if !(lambda_min > 0.0 && lambda_max > lambda_min && points >= 8) {
                eprintln!("error: need 0 < lambda-min < lambda-max and at least 8 points");
                return EXIT_USAGE;
            }
            let cutoff = CutoffSpec::bump(0.5);
            let cfg = QuadConfig {
                points_per_period: ppp.max(10),
                ..QuadConfig::default()
            };
            let grid = log_lambda_grid(lambda_min, lambda_max, points);
            let fit = match decay_fit(&poly, &grid, &cutoff, &cfg) {
                Ok(f) => f,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_NUMERICAL;
                }
            };
            if csv {
                println!("lambda,re,im,abs,predicted_bound");
                for k in 0..fit.lambdas.len() {
                    println!(
                        "{},{},{},{},{}",
                        fit.lambdas[k],
                        fit.values_re[k],
                        fit.values_im[k],
                        fit.magnitudes[k],
                        fit.predicted_bound[k]
                    );
                }
            } else {
                let mut result = serde_json::to_value(&fit).unwrap();
                result["kind"] = json!("decay_fit");
                let env = envelope(
                    "verify",
                    &phase.phase,
                    phase.as_ds,
                    json!({"lambda_min": lambda_min, "lambda_max": lambda_max,
                           "points": points, "ppp": ppp}),
                    started,
                    result,
                );
                println!("{}", serde_json::to_string_pretty(&env).unwrap());
            }
            EXIT_OK
        }

        Verb::Sublevel {
            phase,
            eps_min,
            eps_max,
            grid,
            mc,
            csv,
        } => {
            let started = std::time::Instant::now();
            let poly = match parse_phase(&phase.phase) {
                Ok(p) => p,
                Err(code) => return code,
            };
            if !(eps_min > 0.0 && eps_max > eps_min) {
                eprintln!("error: need 0 < eps-min < eps-max");
                return EXIT_USAGE;
            }
            // log2-spaced thresholds, decreasing
            let steps = ((eps_max / eps_min).log2().round() as usize).clamp(3, 60);
            let epsilons: Vec<f64> = (0..=steps)
                .map(|k| eps_max * (eps_min / eps_max).powf(k as f64 / steps as f64))
                .collect();
            let method = match mc {
                None => SublevelMethod::Grid(grid),
                Some(samples) => {
                    let seed = std::env::var("OSC_SEED")
                        .ok()
                        .and_then(|s| s.parse().ok())
                        .unwrap_or(0x6f73_6366);
                    SublevelMethod::MonteCarlo(samples, seed)
                }
            };
            let (estimates, report) = match sublevel_scan(&poly, &epsilons, method) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_NUMERICAL;
                }
            };
            if csv {
                println!("epsilon,measure,stderr");
                for (e, est) in epsilons.iter().zip(&estimates) {
                    println!(
                        "{},{},{}",
                        e,
                        est.measure,
                        est.stderr.map_or(String::new(), |s| s.to_string())
                    );
                }
            } else {
                let mut result = serde_json::to_value(&report).unwrap();
                result["kind"] = json!("sublevel");
                let env = envelope(
                    "sublevel",
                    &phase.phase,
                    phase.as_ds,
                    json!({"eps_min": eps_min, "eps_max": eps_max, "grid": grid}),
                    started,
                    result,
                );
                println!("{}", serde_json::to_string_pretty(&env).unwrap());
            }
            EXIT_OK
        }
    }
}
