//! Command-line runner behind the `qctx` binary.
//!
//! Every command is deterministic given its flags. The seed defaults to 42
//! and can be set with `--seed` or the `QCTX_SEED` environment variable
//! (the flag wins).

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::acceptance::{self, CriterionResult};
use crate::error::{Error, Result};
use crate::experiment::{
    contextuality_report_from_tally, contextuality_report_with, expectation_closed_form,
    expectation_trace, interlinked_distribution, random_labels, sample_parallel, singlet_state,
    uniqueness_report, CoincidenceTally, ContextualityReport, JointDistribution, UniquenessReport,
};
use crate::ks::{ks_operator, KSLabels, C_PRIME_BLUE, C_RED};
use crate::logic::{parse_diagram, validate_diagram_with, GreechieDiagram, ValidationReport};
use crate::output::{
    contextuality_text, distribution_csv, distribution_text, sig12, tally_csv, tally_text, to_json,
    Format,
};
use crate::tolerance::Tolerances;
use crate::BUNDLED_DIAGRAM;

pub const SEED_ENV: &str = "QCTX_SEED";
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_SHOTS: u64 = 1_000_000;

/// Exit status when a check fails.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Exit status for bad input (flags, files, GDL syntax).
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "qctx",
    version,
    about = "Spin-1 singlet contextuality test: exact distributions, sampling and diagram checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Labels of the red operator C, comma separated.
    #[arg(long, global = true, default_value = "1,2,3", value_parser = parse_labels)]
    pub labels1: KSLabels,

    /// Labels of the blue operator C', comma separated.
    #[arg(long, global = true, default_value = "4,5,6", value_parser = parse_labels)]
    pub labels2: KSLabels,

    #[arg(long, global = true, default_value_t = DEFAULT_SHOTS, value_parser = clap::value_parser!(u64).range(1..))]
    pub shots: u64,

    #[arg(long, global = true, env = SEED_ENV, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    /// Tolerance override, `key=value`; repeatable.
    #[arg(long = "tol", global = true, value_name = "KEY=VALUE")]
    pub tol: Vec<String>,

    /// Write the artifact here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Put C' on side 1 and C on side 2.
    #[arg(long, global = true)]
    pub swap: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Compare the trace form of the expectation value with its closed form
    /// over random label pairs.
    VerifyEq3 {
        #[arg(long, default_value_t = 100)]
        pairs: usize,
    },
    /// Exact joint table, contextuality report and expectation value.
    Experiment,
    /// Seeded coincidence tally.
    Sample {
        /// Independent ChaCha streams to split the shots across.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        streams: u64,
    },
    /// Parse and validate a GDL file (the bundled diagram if omitted).
    DiagramCheck { path: Option<PathBuf> },
    /// Run every acceptance criterion.
    Report,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub labels1: KSLabels,
    pub labels2: KSLabels,
    pub shots: u64,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub format: Format,
    pub swap: bool,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            labels1: KSLabels::new(1.0, 2.0, 3.0).expect("distinct"),
            labels2: KSLabels::new(4.0, 5.0, 6.0).expect("distinct"),
            shots: DEFAULT_SHOTS,
            seed: DEFAULT_SEED,
            tolerances: Tolerances::default(),
            format: Format::Text,
            swap: false,
        }
    }
}

impl TryFrom<&Cli> for RunConfig {
    type Error = Error;

    fn try_from(cli: &Cli) -> Result<Self> {
        let mut tolerances = Tolerances::default();
        for spec in &cli.tol {
            tolerances.apply_override(spec)?;
        }
        Ok(Self {
            command: cli.command.clone(),
            labels1: cli.labels1,
            labels2: cli.labels2,
            shots: cli.shots,
            seed: cli.seed,
            tolerances,
            format: cli.format,
            swap: cli.swap,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub passed: bool,
    pub output: String,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            EXIT_CHECK_FAILED
        }
    }
}

fn parse_labels(s: &str) -> std::result::Result<KSLabels, String> {
    let values: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match values.as_slice() {
        [a, b, c] => KSLabels::new(*a, *b, *c).map_err(|e| e.to_string()),
        _ => Err(format!(
            "expected three comma-separated labels, got {}",
            values.len()
        )),
    }
}

pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    match &config.command {
        Command::VerifyEq3 { pairs } => verify_eq3(config, *pairs),
        Command::Experiment => experiment(config),
        Command::Sample { streams } => run_sample(config, *streams),
        Command::DiagramCheck { path } => diagram_check(config, path.as_deref()),
        Command::Report => report(config),
    }
}

#[derive(Debug, Serialize)]
struct LabelPair {
    labels1: KSLabels,
    labels2: KSLabels,
    trace: f64,
    closed_form: f64,
    deviation: f64,
}

#[derive(Debug, Serialize)]
struct Eq3Sweep {
    pairs: usize,
    seed: u64,
    tolerance: f64,
    max_deviation: f64,
    worst: Option<LabelPair>,
    passed: bool,
}

fn verify_eq3(config: &RunConfig, pairs: usize) -> Result<RunOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let s = singlet_state();
    let mut worst: Option<LabelPair> = None;
    for _ in 0..pairs {
        let l1 = random_labels(&mut rng, -2.0, 2.0, 0.1);
        let l2 = random_labels(&mut rng, -2.0, 2.0, 0.1);
        let trace = expectation_trace(
            &ks_operator(l1, C_RED)?,
            &ks_operator(l2, C_PRIME_BLUE)?,
            &s,
        )?;
        let closed_form = expectation_closed_form(l1, l2);
        let deviation = (trace - closed_form).abs();
        if worst.as_ref().is_none_or(|w| deviation > w.deviation) {
            worst = Some(LabelPair {
                labels1: l1,
                labels2: l2,
                trace,
                closed_form,
                deviation,
            });
        }
    }
    let max_deviation = worst.as_ref().map_or(0.0, |w| w.deviation);
    let sweep = Eq3Sweep {
        pairs,
        seed: config.seed,
        tolerance: config.tolerances.eq3,
        max_deviation,
        passed: max_deviation < config.tolerances.eq3,
        worst,
    };
    let output = match config.format {
        Format::Json => to_json(&sweep),
        Format::Csv => format!(
            "pairs,seed,max_deviation,tolerance,passed\n{},{},{:?},{:?},{}\n",
            sweep.pairs, sweep.seed, sweep.max_deviation, sweep.tolerance, sweep.passed
        ),
        Format::Text => format!(
            "pairs {}  seed {}\nmax |trace - closed form| = {}  (tolerance {})\n{}\n",
            sweep.pairs,
            sweep.seed,
            sig12(sweep.max_deviation),
            sig12(sweep.tolerance),
            pass_word(sweep.passed)
        ),
    };
    Ok(RunOutcome {
        passed: sweep.passed,
        output,
    })
}

#[derive(Debug, Serialize)]
struct ExperimentReport {
    labels1: KSLabels,
    labels2: KSLabels,
    swap: bool,
    distribution: JointDistribution,
    contextuality: ContextualityReport,
    uniqueness: UniquenessReport,
    expectation_trace: f64,
    expectation_closed_form: f64,
    passed: bool,
}

fn experiment(config: &RunConfig) -> Result<RunOutcome> {
    let tol = &config.tolerances;
    let emitted = interlinked_distribution(config.labels1, config.labels2, config.swap)?;
    // The report reads rows as C and columns as C'.
    let canonical = if config.swap {
        emitted.transposed()
    } else {
        emitted.clone()
    };
    let contextuality = contextuality_report_with(&canonical, tol);
    let uniqueness = uniqueness_report(&canonical, tol.forbidden);
    let red = ks_operator(config.labels1, C_RED)?;
    let blue = ks_operator(config.labels2, C_PRIME_BLUE)?;
    let trace = expectation_trace(&red, &blue, &singlet_state())?;
    let closed = expectation_closed_form(config.labels1, config.labels2);
    let report = ExperimentReport {
        labels1: config.labels1,
        labels2: config.labels2,
        swap: config.swap,
        passed: contextuality.confirmed() && uniqueness.passed && (trace - closed).abs() < tol.eq3,
        distribution: emitted,
        contextuality,
        uniqueness,
        expectation_trace: trace,
        expectation_closed_form: closed,
    };
    let output = match config.format {
        Format::Json => to_json(&report),
        Format::Csv => distribution_csv(&report.distribution),
        Format::Text => {
            let mut out = String::new();
            let sides = if report.swap {
                "side 1 = C', side 2 = C"
            } else {
                "side 1 = C, side 2 = C'"
            };
            let _ = writeln!(out, "joint distribution ({sides})");
            out.push_str(&distribution_text(&report.distribution));
            out.push('\n');
            out.push_str(&contextuality_text(&report.contextuality));
            let _ = writeln!(
                out,
                "uniqueness on shared ray: {}",
                pass_word(report.uniqueness.passed)
            );
            let _ = writeln!(
                out,
                "expectation: trace {}  closed form {}",
                sig12(report.expectation_trace),
                sig12(report.expectation_closed_form)
            );
            let _ = writeln!(out, "{}", pass_word(report.passed));
            out
        }
    };
    Ok(RunOutcome {
        passed: report.passed,
        output,
    })
}

fn run_sample(config: &RunConfig, streams: u64) -> Result<RunOutcome> {
    let d = interlinked_distribution(config.labels1, config.labels2, config.swap)?;
    let tally = sample_parallel(&d, config.shots, config.seed, streams)?;
    let canonical = if config.swap {
        transpose_tally(&tally)
    } else {
        tally.clone()
    };
    let report = contextuality_report_from_tally(&canonical);
    let output = match config.format {
        Format::Json => to_json(&tally),
        Format::Csv => tally_csv(&tally),
        Format::Text => {
            let mut out = tally_text(&tally);
            out.push('\n');
            out.push_str(&contextuality_text(&report));
            out
        }
    };
    Ok(RunOutcome {
        passed: report.confirmed(),
        output,
    })
}

fn transpose_tally(t: &CoincidenceTally) -> CoincidenceTally {
    CoincidenceTally {
        side1_labels: t.side2_labels,
        side2_labels: t.side1_labels,
        counts: std::array::from_fn(|i| std::array::from_fn(|j| t.counts[j][i])),
        ..t.clone()
    }
}

#[derive(Debug, Serialize)]
struct DiagramCheck {
    source: String,
    diagram: GreechieDiagram,
    report: ValidationReport,
}

fn diagram_check(config: &RunConfig, path: Option<&std::path::Path>) -> Result<RunOutcome> {
    let (source, text) = match path {
        Some(p) => (p.display().to_string(), std::fs::read_to_string(p)?),
        None => (
            "<bundled fig1.gdl>".to_string(),
            BUNDLED_DIAGRAM.to_string(),
        ),
    };
    let diagram = parse_diagram(&text)?;
    let report = validate_diagram_with(&diagram, &config.tolerances);
    let check = DiagramCheck {
        source,
        diagram,
        report,
    };
    let output = match config.format {
        Format::Json => to_json(&check),
        Format::Csv => {
            let mut out = String::from("context,ray_a,ray_b,residual\n");
            for r in &check.report.residuals {
                let _ = writeln!(
                    out,
                    "{},{},{},{:?}",
                    r.context, r.pair[0], r.pair[1], r.residual
                );
            }
            out
        }
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(
                out,
                "{}: {} rays, {} contexts",
                check.source,
                check.diagram.rays.len(),
                check.diagram.contexts.len()
            );
            for r in &check.report.residuals {
                let _ = writeln!(
                    out,
                    "  {} {}-{} orthogonality residual {}",
                    r.context,
                    r.pair[0],
                    r.pair[1],
                    sig12(r.residual)
                );
            }
            for link in &check.report.interlinks {
                let coords: Vec<String> = link
                    .components
                    .iter()
                    .map(|z| {
                        if z.im == 0.0 {
                            sig12(z.re)
                        } else {
                            format!("{}{:+}i", sig12(z.re), sig12(z.im))
                        }
                    })
                    .collect();
                let _ = writeln!(
                    out,
                    "  interlink {} = ({}) shared by {}",
                    link.ray,
                    coords.join(", "),
                    link.contexts.join(", ")
                );
            }
            for f in &check.report.failures {
                let _ = writeln!(out, "  failure: {f}");
            }
            let _ = writeln!(
                out,
                "{}",
                if check.report.valid {
                    "valid"
                } else {
                    "invalid"
                }
            );
            out
        }
    };
    Ok(RunOutcome {
        passed: check.report.valid,
        output,
    })
}

fn report(config: &RunConfig) -> Result<RunOutcome> {
    let results: Vec<CriterionResult> = acceptance::run_all(&config.tolerances, config.seed);
    let passed = results.iter().all(|r| r.passed);
    let output = match config.format {
        Format::Json => to_json(&results),
        Format::Csv => {
            let mut out = String::from("id,name,passed,detail\n");
            for r in &results {
                let _ = writeln!(
                    out,
                    "{},{},{},\"{}\"",
                    r.id,
                    r.name,
                    r.passed,
                    r.detail.replace('"', "'")
                );
            }
            out
        }
        Format::Text => {
            let mut out = String::new();
            for r in &results {
                let _ = writeln!(out, "{r}");
            }
            let n_pass = results.iter().filter(|r| r.passed).count();
            let _ = writeln!(out, "{n_pass}/{} criteria passed", results.len());
            out
        }
    };
    Ok(RunOutcome { passed, output })
}

fn pass_word(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Parses `std::env::args`, runs, writes the artifact and returns the exit
/// status.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let config = match RunConfig::try_from(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let outcome = match run(&config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &outcome.output),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(outcome.output.as_bytes())
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    outcome.exit_code()
}
