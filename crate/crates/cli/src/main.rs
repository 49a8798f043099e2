//! Command-line front end: decide two-answer nonlocal games, certify the
//! absence of winning strategies, and move between strategy
//! representations.
//!
//! Exit codes: 0 on an affirmative outcome (strategy found, relaxation
//! feasible, validation passed), 2 on a negative but well-understood
//! outcome (no strategy, relaxation refuted, validation failed, no
//! decision), 1 on malformed input or any other error.

mod report;

use clap::{Args, Parser, Subcommand};
use nullgame::io;
use nullgame::{
    extract_classical, solve, truncated_gns, ClassicalStrategy, Error, ExtractionOptions,
    GameSpec, MomentProblem, SolveOptions, SolveStatus,
};
use report::{FileDigest, RunReport};
use serde_json::json;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

const EXIT_NEGATIVE: u8 = 2;
const EXIT_ERROR: u8 = 1;

#[derive(Parser)]
#[command(
    name = "nullgame",
    version,
    about = "Decide, certify and transform strategies for two-answer nonlocal games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Print a single JSON report to stdout instead of text.
    #[arg(long, global = true)]
    machine: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a perfect deterministic classical strategy.
    Classical(ClassicalArgs),
    /// Extract a deterministic strategy from a perfect finite-dimensional one.
    Extract(ExtractArgs),
    /// Run moment relaxations and verify refutation certificates.
    Certify(CertifyArgs),
    /// Reconstruct a finite-dimensional strategy from a moment vector.
    Gns(GnsArgs),
    /// Check a strategy file for well-formedness and perfectness.
    Validate(ValidateArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Classical(_) => "classical",
            Command::Extract(_) => "extract",
            Command::Certify(_) => "certify",
            Command::Gns(_) => "gns",
            Command::Validate(_) => "validate",
        }
    }
}

#[derive(Args)]
struct ClassicalArgs {
    /// Game file.
    game: PathBuf,
    /// Abort if the game has more than this many questions in total.
    #[arg(long, default_value_t = nullgame::game::DEFAULT_SEARCH_BOUND)]
    bound: u32,
    /// Write the found strategy to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    /// Finite-dimensional strategy file.
    strategy: PathBuf,
    /// Game file.
    game: PathBuf,
    /// Validation tolerance for the input strategy.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Coefficient magnitudes at or below this count as zero.
    #[arg(long, default_value_t = 1e-8)]
    threshold: f64,
    /// Write the extracted classical strategy to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    /// Game file.
    game: PathBuf,
    /// Relaxation degrees to try in order; stops at the first refutation.
    #[arg(long = "degree")]
    degrees: Vec<usize>,
    /// Largest accepted l1 deviation of a certificate expansion from -1.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Round the certificate to rationals and verify in exact arithmetic.
    #[arg(long)]
    exact: bool,
    /// Largest denominator tried during exact rounding.
    #[arg(long, default_value_t = 1_000_000)]
    max_denominator: u64,
    /// Iteration budget per degree.
    #[arg(long, default_value_t = 20_000)]
    iterations: usize,
    /// Convergence tolerance of the projection solver.
    #[arg(long, default_value_t = 1e-9)]
    eps: f64,
    /// Recorded in reports; the solver itself is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the certificate here on refutation.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the feasible moment vector here when no degree refutes.
    #[arg(long)]
    moments_out: Option<PathBuf>,
}

#[derive(Args)]
struct GnsArgs {
    /// Moment vector file.
    moments: PathBuf,
    /// Game file.
    game: PathBuf,
    /// Residual tolerance gating the chained extraction.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// When the reconstruction is flat and validates, also extract a
    /// deterministic strategy from it.
    #[arg(long)]
    extract: bool,
    /// Write the reconstructed strategy to this path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the chained deterministic strategy to this path.
    #[arg(long)]
    classical_out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Finite-dimensional strategy file.
    strategy: PathBuf,
    /// Game file.
    game: PathBuf,
    /// Residual tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

struct Outcome {
    exit: u8,
    outcome: &'static str,
    lines: Vec<String>,
    details: serde_json::Value,
    outputs: BTreeMap<String, String>,
}

impl Outcome {
    fn new(exit: u8, outcome: &'static str) -> Self {
        Outcome {
            exit,
            outcome,
            lines: Vec::new(),
            details: serde_json::Value::Null,
            outputs: BTreeMap::new(),
        }
    }
}

struct Inputs {
    digests: BTreeMap<String, FileDigest>,
}

impl Inputs {
    fn new() -> Self {
        Inputs {
            digests: BTreeMap::new(),
        }
    }

    fn record(&mut self, role: &str, path: &Path) -> Result<(), Error> {
        let digest = report::digest(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.digests.insert(role.to_string(), digest);
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let exit = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(exit);
        }
    };
    let start = Instant::now();
    let mut inputs = Inputs::new();
    let command = cli.command.name();
    match run(&cli.command, &mut inputs) {
        Ok(outcome) => {
            emit(&cli, command, &inputs, &outcome, start);
            ExitCode::from(outcome.exit)
        }
        Err(e) => {
            let exit = failure_exit(&e);
            let message = e.to_string();
            if cli.machine {
                report::print(&RunReport {
                    command,
                    inputs: &inputs.digests,
                    outcome: if exit == EXIT_NEGATIVE { "fail" } else { "error" },
                    message: Some(&message),
                    details: &serde_json::Value::Null,
                    outputs: &BTreeMap::new(),
                    wall_ms: start.elapsed().as_millis(),
                });
            } else {
                eprintln!("error: {message}");
            }
            ExitCode::from(exit)
        }
    }
}

fn emit(cli: &Cli, command: &str, inputs: &Inputs, outcome: &Outcome, start: Instant) {
    let wall_ms = start.elapsed().as_millis();
    if cli.machine {
        report::print(&RunReport {
            command,
            inputs: &inputs.digests,
            outcome: outcome.outcome,
            message: None,
            details: &outcome.details,
            outputs: &outcome.outputs,
            wall_ms,
        });
    } else {
        for line in &outcome.lines {
            println!("{line}");
        }
        println!("wall time: {wall_ms} ms");
    }
}

/// Errors that mean "the input was understood and the answer is no" exit
/// with 2; everything else is an operational error.
fn failure_exit(e: &Error) -> u8 {
    match e {
        Error::NoPerfectStrategy
        | Error::ValidationFailed { .. }
        | Error::Degenerate { .. }
        | Error::ExtractionInconsistent(_)
        | Error::MomentIdentity(_) => EXIT_NEGATIVE,
        _ => EXIT_ERROR,
    }
}

fn run(command: &Command, inputs: &mut Inputs) -> Result<Outcome, Error> {
    match command {
        Command::Classical(a) => run_classical(a, inputs),
        Command::Extract(a) => run_extract(a, inputs),
        Command::Certify(a) => run_certify(a, inputs),
        Command::Gns(a) => run_gns(a, inputs),
        Command::Validate(a) => run_validate(a, inputs),
    }
}

fn run_classical(a: &ClassicalArgs, inputs: &mut Inputs) -> Result<Outcome, Error> {
    inputs.record("game", &a.game)?;
    let game = io::load_game(&a.game)?;
    let found = game.search_perfect_bounded(a.bound)?;
    let value = game.classical_value()?;
    let mut outcome = match &found {
        Some(strategy) => {
            let mut o = Outcome::new(0, "found");
            o.lines.push("perfect classical strategy found".into());
            o.lines.push(format!("u = {:?}", strategy.u));
            o.lines.push(format!("v = {:?}", strategy.v));
            o.details = json!({ "u": strategy.u, "v": strategy.v });
            if let Some(path) = &a.out {
                io::save_classical(path, strategy)?;
                o.outputs
                    .insert("strategy".into(), path.display().to_string());
                o.lines.push(format!("strategy written to {}", path.display()));
            }
            o
        }
        None => {
            let mut o = Outcome::new(EXIT_NEGATIVE, "none");
            o.lines.push("no perfect classical strategy".into());
            o.details = json!({});
            o
        }
    };
    outcome.lines.push(format!("classical value = {value}"));
    outcome.details["value"] = json!(value.to_string());
    Ok(outcome)
}

fn run_extract(a: &ExtractArgs, inputs: &mut Inputs) -> Result<Outcome, Error> {
    inputs.record("strategy", &a.strategy)?;
    inputs.record("game", &a.game)?;
    let strategy = io::load_strategy(&a.strategy)?;
    let game = io::load_game(&a.game)?;
    let options = ExtractionOptions {
        validation_tol: a.tol,
        threshold: a.threshold,
    };
    let extraction = extract_classical(&strategy, &game, &options)?;
    let margin = extraction
        .correlations
        .iter()
        .map(|c| c.value)
        .fold(f64::INFINITY, f64::min);
    let mut o = Outcome::new(0, "pass");
    o.lines.push("deterministic strategy extracted".into());
    o.lines.push(format!("u = {:?}", extraction.strategy.u));
    o.lines.push(format!("v = {:?}", extraction.strategy.v));
    o.lines.push(format!(
        "deciding basis indices: alice {:?}, bob {:?}",
        extraction.k, extraction.l
    ));
    for c in &extraction.correlations {
        o.lines.push(format!(
            "x={} y={} -> a={} b={}  amplitude {:.6} (imag {:.1e})",
            c.x, c.y, c.a, c.b, c.value, c.imag
        ));
    }
    o.lines
        .push(format!("smallest winning amplitude: {margin:.6}"));
    let transcript: Vec<_> = extraction
        .correlations
        .iter()
        .map(|c| json!({ "x": c.x, "y": c.y, "a": c.a, "b": c.b, "amplitude": c.value }))
        .collect();
    o.details = json!({
        "u": extraction.strategy.u,
        "v": extraction.strategy.v,
        "k": extraction.k,
        "l": extraction.l,
        "min_amplitude": margin,
        "correlations": transcript,
    });
    if let Some(path) = &a.out {
        io::save_classical(path, &extraction.strategy)?;
        o.outputs
            .insert("strategy".into(), path.display().to_string());
        o.lines.push(format!("strategy written to {}", path.display()));
    }
    Ok(o)
}

fn run_certify(a: &CertifyArgs, inputs: &mut Inputs) -> Result<Outcome, Error> {
    inputs.record("game", &a.game)?;
    let game = io::load_game(&a.game)?;
    let degrees = if a.degrees.is_empty() {
        vec![1, 2, 3]
    } else {
        a.degrees.clone()
    };
    let options = SolveOptions {
        eps: a.eps,
        max_iterations: a.iterations,
        seed: a.seed,
    };
    let mut o = Outcome::new(EXIT_NEGATIVE, "undetermined");
    let mut rounds = Vec::new();
    let mut last_feasible = None;
    for &degree in &degrees {
        let problem = MomentProblem::new(&game, degree)?;
        let result = solve(&problem, &options);
        match result.status {
            SolveStatus::Infeasible(ray) => {
                o.lines.push(format!(
                    "degree {degree}: refuted after {} iterations",
                    result.iterations
                ));
                rounds.push(json!({
                    "degree": degree,
                    "status": "infeasible",
                    "iterations": result.iterations,
                }));
                let cert = nullgame::extract_certificate(&ray, &problem, a.tol)?;
                let float = cert.verify_float(&game)?;
                o.lines.push(format!(
                    "certificate: l1 deviation {:.3e}, min gram eigenvalue {:.3e}, sound margin {:.3}",
                    float.l1_deviation, float.min_gram_eigenvalue, float.sound_margin
                ));
                if !float.is_sound() {
                    o.lines
                        .push("certificate margin is not sound; continuing".into());
                    if let Some(r) = rounds.last_mut() {
                        r["unsound_margin"] = json!(float.sound_margin);
                    }
                    continue;
                }
                let mut details = json!({
                    "degree": degree,
                    "rounds": rounds,
                    "l1_deviation": float.l1_deviation,
                    "max_deviation": float.max_deviation,
                    "min_gram_eigenvalue": float.min_gram_eigenvalue,
                    "sound_margin": float.sound_margin,
                });
                if let Some(path) = &a.out {
                    io::save_certificate(path, &cert)?;
                    o.outputs
                        .insert("certificate".into(), path.display().to_string());
                    o.lines
                        .push(format!("certificate written to {}", path.display()));
                }
                if a.exact {
                    match cert.verify_exact(&game, a.max_denominator) {
                        Ok(exact) => {
                            o.lines.push(format!(
                                "exact: verified, denominator bound {}, gram rank {}",
                                exact.denominator_bound, exact.gram_rank
                            ));
                            details["exact"] = json!({
                                "verified": true,
                                "denominator_bound": exact.denominator_bound,
                                "gram_rank": exact.gram_rank,
                            });
                        }
                        Err(e) => {
                            o.lines.push(format!(
                                "warning: exact verification failed ({e}); the certificate stays float-verified"
                            ));
                            details["exact"] = json!({
                                "verified": false,
                                "error": e.to_string(),
                            });
                        }
                    }
                }
                o.outcome = "infeasible";
                o.exit = EXIT_NEGATIVE;
                o.details = details;
                return Ok(o);
            }
            SolveStatus::Feasible(mv) => {
                o.lines.push(format!(
                    "degree {degree}: feasible after {} iterations",
                    result.iterations
                ));
                rounds.push(json!({
                    "degree": degree,
                    "status": "feasible",
                    "iterations": result.iterations,
                }));
                last_feasible = Some((degree, mv));
            }
            SolveStatus::Undetermined => {
                o.lines.push(format!(
                    "degree {degree}: no decision within {} iterations",
                    result.iterations
                ));
                rounds.push(json!({
                    "degree": degree,
                    "status": "undetermined",
                    "iterations": result.iterations,
                }));
            }
        }
    }
    if let Some((degree, mv)) = last_feasible {
        o.outcome = "feasible";
        o.exit = 0;
        o.lines.push(format!(
            "no refutation found; the degree-{degree} relaxation is feasible"
        ));
        if let Some(path) = &a.moments_out {
            io::save_moments(path, &mv)?;
            o.outputs
                .insert("moments".into(), path.display().to_string());
            o.lines.push(format!("moments written to {}", path.display()));
        }
        o.details = json!({ "rounds": rounds, "feasible_degree": degree });
    } else {
        o.lines.push("no decision at any degree".into());
        o.details = json!({ "rounds": rounds });
    }
    Ok(o)
}

fn run_gns(a: &GnsArgs, inputs: &mut Inputs) -> Result<Outcome, Error> {
    inputs.record("moments", &a.moments)?;
    inputs.record("game", &a.game)?;
    let moments = io::load_moments(&a.moments)?;
    let game = io::load_game(&a.game)?;
    let gns = truncated_gns(&moments, &game)?;
    let validation = gns.strategy.validate(&game)?;
    let mut o = Outcome::new(0, "pass");
    o.lines.push(format!(
        "reconstructed a dimension-{} strategy (flat: {})",
        gns.rank, gns.flat
    ));
    o.lines.push(format!(
        "residuals: factor {:.3e}, self-adjoint {:.3e}, involution {:.3e}, commutation {:.3e}, invalid mass {:.3e}",
        gns.report.factor_residual,
        gns.report.self_adjoint_residual,
        gns.report.involution_residual,
        gns.report.commutation_residual,
        gns.report.invalid_mass
    ));
    o.lines.push(format!("validation: {}", validation.summary()));
    o.details = json!({
        "rank": gns.rank,
        "flat": gns.flat,
        "factor_residual": gns.report.factor_residual,
        "self_adjoint_residual": gns.report.self_adjoint_residual,
        "involution_residual": gns.report.involution_residual,
        "commutation_residual": gns.report.commutation_residual,
        "invalid_mass": gns.report.invalid_mass,
        "projection_residual": validation.projection_residual,
        "perfectness_residual": validation.perfectness_residual,
    });
    if let Some(path) = &a.out {
        io::save_strategy(path, &gns.strategy)?;
        o.outputs
            .insert("strategy".into(), path.display().to_string());
        o.lines.push(format!("strategy written to {}", path.display()));
    }
    if a.extract {
        if gns.flat && validation.passes(a.tol) {
            let extraction =
                extract_classical(&gns.strategy, &game, &ExtractionOptions::default())?;
            o.lines.push("chained extraction succeeded".into());
            o.lines.push(format!("u = {:?}", extraction.strategy.u));
            o.lines.push(format!("v = {:?}", extraction.strategy.v));
            o.details["extraction"] = json!({
                "u": extraction.strategy.u,
                "v": extraction.strategy.v,
                "k": extraction.k,
                "l": extraction.l,
            });
            if let Some(path) = &a.classical_out {
                io::save_classical(path, &extraction.strategy)?;
                o.outputs
                    .insert("classical".into(), path.display().to_string());
                o.lines
                    .push(format!("deterministic strategy written to {}", path.display()));
            }
        } else {
            let reason = if gns.flat {
                "residuals exceed the tolerance"
            } else {
                "the reconstruction is not flat"
            };
            o.lines.push(format!("extraction skipped: {reason}"));
            o.details["extraction"] = json!({ "skipped": reason });
        }
    }
    Ok(o)
}

fn run_validate(a: &ValidateArgs, inputs: &mut Inputs) -> Result<Outcome, Error> {
    inputs.record("strategy", &a.strategy)?;
    inputs.record("game", &a.game)?;
    let game = io::load_game(&a.game)?;
    let strategy = match io::load_strategy(&a.strategy) {
        Ok(strategy) => strategy,
        Err(Error::Parse { path, message }) => {
            return match io::load_classical(&a.strategy) {
                Ok(classical) => run_validate_deterministic(&game, &classical),
                Err(_) => Err(Error::Parse {
                    path,
                    message: format!(
                        "neither a finite-dimensional nor a deterministic strategy ({message})"
                    ),
                }),
            };
        }
        Err(e) => return Err(e),
    };
    let report = strategy.validate(&game)?;
    let winning = strategy.winning_probability(&game);
    let (exit, outcome, classification) = if report.passes(a.tol) {
        (0, "pass", "perfect")
    } else if report.well_formed(a.tol) {
        (EXIT_NEGATIVE, "fail", "imperfect")
    } else {
        (EXIT_NEGATIVE, "fail", "invalid")
    };
    let mut o = Outcome::new(exit, outcome);
    o.lines.push(format!("strategy is {classification}"));
    o.lines.push(format!("residuals: {}", report.summary()));
    o.lines.push(format!("winning probability: {winning:.12}"));
    o.details = json!({
        "classification": classification,
        "projection_residual": report.projection_residual,
        "commutation_residual": report.commutation_residual,
        "perfectness_residual": report.perfectness_residual,
        "norm_residual": report.norm_residual,
        "winning_probability": winning,
    });
    Ok(o)
}

fn run_validate_deterministic(game: &GameSpec, strategy: &ClassicalStrategy) -> Result<Outcome, Error> {
    let perfect = game.is_perfect(strategy)?;
    let total = (game.x_count() * game.y_count()) as usize;
    let wins = (0..game.x_count())
        .flat_map(|x| (0..game.y_count()).map(move |y| (x, y)))
        .filter(|&(x, y)| game.is_allowed(x, y, strategy.u[x as usize], strategy.v[y as usize]))
        .count();
    let winning = wins as f64 / total as f64;
    let (exit, outcome, classification) = if perfect {
        (0, "pass", "perfect")
    } else {
        (EXIT_NEGATIVE, "fail", "imperfect")
    };
    let mut o = Outcome::new(exit, outcome);
    o.lines.push(format!("strategy is {classification}"));
    o.lines.push(format!("u = {:?}", strategy.u));
    o.lines.push(format!("v = {:?}", strategy.v));
    o.lines
        .push(format!("winning question pairs: {wins} of {total}"));
    o.lines.push(format!("winning probability: {winning:.12}"));
    o.details = json!({
        "classification": classification,
        "u": strategy.u,
        "v": strategy.v,
        "winning_probability": winning,
    });
    Ok(o)
}
