//! Subcommands of the `puzzleauth` binary.
//!
//! Exit codes are the machine contract: 0 success, 1 a failed check or a
//! rejected proof, 2 bad arguments or unreadable/unparsable input. The text
//! on stdout is for people and golden files.

use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use puzzleauth_core::crypto::SymmetricKey;
use puzzleauth_core::puzzle::{self, Difficulty};
use puzzleauth_core::simnet::{self, SimError};
use puzzleauth_core::svo::{self, check_script, Failure, ProofScript, Verdict};
use puzzleauth_core::{ClientId, Timestamp};
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::{load_scenario, load_script, LoadError, Scenario};

#[derive(Debug, Parser)]
#[command(
    name = "puzzleauth",
    version,
    about = "Puzzle-gated authentication: demos, attack simulations, and proof checking"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one seeded handshake and check that both ends hold the same key.
    Handshake {
        /// Scenario file; its protocol parameters are used, its workload ignored.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a scenario's workload and print the report.
    Attack {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Append a per-request outcome table (tab-separated).
        #[arg(long)]
        tsv: bool,
    },
    /// Solve seeded puzzles and compare the attempt count with 2^difficulty.
    PuzzleBench {
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(0..=32))]
        difficulty: u32,
        #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u32).range(1..))]
        runs: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Check a proof script and print a verdict per step.
    SvoCheck { script: PathBuf },
    /// Check the bundled derivation of the handshake's authentication goal.
    #[command(name = "svo-paper")]
    BundledDerivation {
        /// Drop a premise before checking (repeatable).
        #[arg(long = "without", value_name = "PREMISE")]
        without: Vec<String>,
        /// Print the script instead of checking it.
        #[arg(long)]
        print: bool,
    },
}

/// How a command finished.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    Failed,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::Failed => 1,
        }
    }

    fn from_ok(ok: bool) -> Self {
        if ok {
            Status::Success
        } else {
            Status::Failed
        }
    }
}

/// Errors that map to exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("unknown premise '{0}'")]
    UnknownPremise(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CliError {
    pub const EXIT_CODE: u8 = 2;
}

pub fn execute(command: &Command, out: &mut dyn Write) -> Result<Status, CliError> {
    match command {
        Command::Handshake { config, seed } => {
            let scenario = match config {
                Some(path) => load_scenario(path)?,
                None => Scenario::default(),
            };
            handshake(&scenario, seed.unwrap_or(scenario.seed), out)
        }
        Command::Attack { config, seed, tsv } => {
            let scenario = load_scenario(config)?;
            attack(&scenario, seed.unwrap_or(scenario.seed), *tsv, out)
        }
        Command::PuzzleBench {
            difficulty,
            runs,
            seed,
        } => puzzle_bench(*difficulty, *runs, *seed, out),
        Command::SvoCheck { script } => {
            let script = load_script(script)?;
            svo_check(&script, out)
        }
        Command::BundledDerivation { without, print } => {
            let mut script = svo::handshake_derivation();
            for p in without {
                if script.premise(p).is_none() {
                    return Err(CliError::UnknownPremise(p.clone()));
                }
                script = script.without_premise(p);
            }
            if *print {
                out.write_all(svo::render_script(&script).as_bytes())?;
                return Ok(Status::Success);
            }
            svo_check(&script, out)
        }
    }
}

fn handshake(scenario: &Scenario, seed: u64, out: &mut dyn Write) -> Result<Status, CliError> {
    let outcome = simnet::run_handshake(seed, &scenario.config)?;
    let r = &outcome.report;
    out.write_all(outcome.transcript.summary().as_bytes())?;
    let established = r.legit_completed == 1;
    let agreed = established && r.sk_disagreements == 0;
    writeln!(out, "seed={seed}")?;
    writeln!(out, "difficulty={}", r.difficulty)?;
    writeln!(out, "established={established}")?;
    writeln!(out, "sk_agreement={}", if agreed { "ok" } else { "FAILED" })?;
    Ok(Status::from_ok(agreed))
}

fn attack(
    scenario: &Scenario,
    seed: u64,
    tsv: bool,
    out: &mut dyn Write,
) -> Result<Status, CliError> {
    let outcome = simnet::run_attack(seed, &scenario.config)?;
    out.write_all(outcome.report.to_lines().as_bytes())?;
    if tsv {
        writeln!(out)?;
        out.write_all(outcome.transcript.outcomes_tsv().as_bytes())?;
    }
    Ok(Status::from_ok(outcome.report.is_conserved()))
}

/// Attempt statistics over `runs` seeded puzzles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchStats {
    pub expected: u128,
    pub mean: f64,
    pub min: u64,
    pub max: u64,
}

pub fn bench(difficulty: u32, runs: u32, seed: u64) -> BenchStats {
    let d = Difficulty::new(difficulty).expect("difficulty validated by caller");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut key = [0u8; 32];
    rng.fill_bytes(&mut key);
    let key = SymmetricKey::from_bytes(key);
    let cid = ClientId::new("bench").expect("valid id");
    let (mut total, mut min, mut max) = (0u64, u64::MAX, 0u64);
    for _ in 0..runs {
        let c =
            puzzle::generate_challenge(&key, cid.clone(), d, Timestamp::from_millis(0), &mut rng);
        let attempts = puzzle::solve(&c).attempts;
        total += attempts;
        min = min.min(attempts);
        max = max.max(attempts);
    }
    BenchStats {
        expected: puzzle::expected_cost(d),
        mean: total as f64 / runs as f64,
        min,
        max,
    }
}

fn puzzle_bench(
    difficulty: u32,
    runs: u32,
    seed: u64,
    out: &mut dyn Write,
) -> Result<Status, CliError> {
    let s = bench(difficulty, runs, seed);
    writeln!(out, "difficulty={difficulty}")?;
    writeln!(out, "runs={runs}")?;
    writeln!(out, "seed={seed}")?;
    writeln!(out, "expected_attempts={}", s.expected)?;
    writeln!(out, "mean_attempts={:.1}", s.mean)?;
    writeln!(out, "min_attempts={}", s.min)?;
    writeln!(out, "max_attempts={}", s.max)?;
    writeln!(out, "mean_over_expected={:.3}", s.mean / s.expected as f64)?;
    Ok(Status::Success)
}

/// Per-step verdict lines followed by an `ACCEPTED:` or `REJECTED:` line.
pub fn render_verdict(script: &ProofScript, verdict: &Verdict) -> String {
    let mut s = String::new();
    for step in &verdict.steps {
        match &step.outcome {
            Ok(()) => s += &format!("{}\t{}\tok\n", step.label, step.rule),
            Err(v) => s += &format!("{}\t{}\trejected: {v}\n", step.label, step.rule),
        }
    }
    match &verdict.failure {
        None => s += &format!("ACCEPTED: {}\n", script.goal),
        Some(Failure::Step { label, violation }) => {
            s += &format!("REJECTED: step {label}: {violation}\n")
        }
        Some(Failure::GoalNotReached { last: Some(f) }) => {
            s += &format!(
                "REJECTED: last conclusion '{f}' is not the goal '{}'\n",
                script.goal
            )
        }
        Some(Failure::GoalNotReached { last: None }) => s += "REJECTED: script has no steps\n",
    }
    s
}

fn svo_check(script: &ProofScript, out: &mut dyn Write) -> Result<Status, CliError> {
    let verdict = check_script(script);
    out.write_all(render_verdict(script, &verdict).as_bytes())?;
    Ok(Status::from_ok(verdict.accepted))
}
