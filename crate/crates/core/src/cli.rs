//! Command-line front end.
//!
//! Exit codes: 0 when every report passes, 1 when a verification fails, 2 on
//! usage or configuration errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde_json::json;

use crate::error::Error;
use crate::morphisms::{
    dual_quat_family, dual_real_morphism, holomorphic_compose, quat_family, real_morphism,
    type_iv_bigcell_morphism, Morphism, Polynomial,
};
use crate::report::VerificationReport;
use crate::spaces::{SpaceId, SpaceSpec};
use crate::verifier::{self, SuiteConfig};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "harmorph",
    version,
    about = "Verify invariant harmonic morphisms on matrix symmetric spaces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    Float,
    Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Lemma {
    FormulaReal,
    Long,
}

#[derive(Debug, Args)]
pub struct RunOpts {
    /// Sampled points per suite.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Random seed; drawn from entropy and echoed on stderr when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override of the suite's primary tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum)]
    pub backend: Option<Backend>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write reports here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Worker threads for independent trials.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List supported spaces with dimensions and basis sizes.
    Spaces {
        /// Only this n (default: 1 through 4).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Exact polynomial identities over the rationals.
    Identities {
        #[arg(long, value_enum)]
        lemma: Lemma,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Derivative relations of the base-map entries and the quotient formulas.
    Lemmas {
        #[arg(long, value_parser = parse_space)]
        space: SpaceId,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Harmonicity of one morphism, a family, or a holomorphic composition.
    Verify {
        #[arg(long, value_parser = parse_space)]
        space: SpaceId,
        #[arg(long)]
        n: usize,
        #[arg(long, requires = "l")]
        k: Option<usize>,
        #[arg(long)]
        l: Option<usize>,
        /// Verify the whole family with this column index.
        #[arg(long, conflicts_with_all = ["k", "l"])]
        family: Option<usize>,
        /// Polynomial in z1..zm applied to the family members, e.g. "z1^2 + 3*z1*z2".
        #[arg(long, requires = "family")]
        compose: Option<String>,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Leading principal minors of g g^* on SL(n,C).
    Bigcell {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Every suite for every n up to n-max.
    All {
        #[arg(long, default_value_t = 3)]
        n_max: usize,
        #[command(flatten)]
        run: RunOpts,
    },
}

fn parse_space(s: &str) -> Result<SpaceId, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failure to run at all, as opposed to a verification verdict.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Verify(#[from] Error),
    #[error("cannot write output: {0}")]
    Io(#[from] io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Verify(Error::SamplingFailure { .. }) => EXIT_FAIL,
            _ => EXIT_USAGE,
        }
    }
}

fn require_float(backend: Option<Backend>, what: &str) -> Result<(), RunError> {
    if backend == Some(Backend::Rational) {
        return Err(RunError::Usage(format!(
            "the rational backend cannot run {what}: it needs square roots or matrix exponentials"
        )));
    }
    Ok(())
}

fn suite_config(run: &RunOpts) -> Result<SuiteConfig, RunError> {
    if run.trials == 0 {
        return Err(RunError::Usage("--trials must be positive".into()));
    }
    if run.jobs == 0 {
        return Err(RunError::Usage("--jobs must be positive".into()));
    }
    if let Some(tol) = run.tol {
        if !(tol >= 0.0 && tol.is_finite()) {
            return Err(RunError::Usage(format!(
                "--tol must be a finite non-negative number, got {tol}"
            )));
        }
    }
    let seed = run.seed.unwrap_or_else(|| {
        let seed = rand::rng().random::<u64>();
        eprintln!("seed: {seed}");
        seed
    });
    Ok(SuiteConfig::new(run.trials, seed)
        .with_tolerance(run.tol)
        .with_jobs(run.jobs))
}

fn selected_morphism(space: &SpaceSpec, k: usize, l: usize) -> crate::Result<Morphism> {
    let n = space.n();
    match space.id() {
        SpaceId::SlrSo => real_morphism(n, k, l),
        SpaceId::SuSo => dual_real_morphism(n, k, l),
        SpaceId::SlcSu => type_iv_bigcell_morphism(n, k, l),
        SpaceId::SusSp | SpaceId::SuSp => {
            let family = family_of(space, l)?;
            let suffix = format!(":k={k}");
            family
                .into_iter()
                .find(|m| m.label.ends_with(&suffix))
                .ok_or_else(|| {
                    Error::IndexOutOfRange(format!("k={k} outside 1..={} or equal to l", 2 * n))
                })
        }
    }
}

fn family_of(space: &SpaceSpec, l: usize) -> crate::Result<Vec<Morphism>> {
    match space.id() {
        SpaceId::SusSp => quat_family(space.n(), l),
        SpaceId::SuSp => dual_quat_family(space.n(), l),
        other => Err(Error::UnsupportedSpace {
            space: other.to_string(),
            what: "families are defined on sus-sp and su-sp".into(),
        }),
    }
}

fn spaces_listing(n: Option<usize>, format: Format) -> Result<String, RunError> {
    let ns: Vec<usize> = match n {
        Some(n) => vec![n],
        None => (1..=4).collect(),
    };
    let mut out = String::new();
    if format == Format::Text {
        out.push_str(&format!(
            "{:<8} {:<3} {:<12} {:<10} {:>7} {:>6}\n",
            "space", "n", "group", "stabilizer", "ambient", "basis"
        ));
    }
    for id in SpaceId::ALL {
        for &n in &ns {
            let Ok(space) = SpaceSpec::new(id, n) else {
                continue;
            };
            let (group, stab) = (id.group_name(n), id.stabilizer_name(n));
            let (ambient, basis) = (space.ambient_dim(), space.p_basis().len());
            match format {
                Format::Text => out.push_str(&format!(
                    "{:<8} {:<3} {:<12} {:<10} {:>7} {:>6}\n",
                    id.as_str(),
                    n,
                    group,
                    stab,
                    ambient,
                    basis
                )),
                Format::Json => {
                    let line = json!({
                        "space": id.as_str(), "n": n, "group": group, "stabilizer": stab,
                        "ambient_dim": ambient, "basis_size": basis, "compact": id.is_compact(),
                    });
                    out.push_str(&line.to_string());
                    out.push('\n');
                }
            }
        }
    }
    if out.lines().count() <= usize::from(format == Format::Text) {
        return Err(RunError::Usage(format!(
            "no space is defined at n={}",
            ns[0]
        )));
    }
    Ok(out)
}

fn reports_for(command: &Command) -> Result<(Vec<VerificationReport>, &RunOpts), RunError> {
    let reports = match command {
        Command::Spaces { .. } => unreachable!("handled by the caller"),
        Command::Identities { lemma, n, run } => {
            if run.backend == Some(Backend::Float) {
                return Err(RunError::Usage(
                    "identities are exact; use the rational backend".into(),
                ));
            }
            let cfg = suite_config(run)?;
            let r = match lemma {
                Lemma::FormulaReal => verifier::verify_lemma_formula_real(*n, &cfg)?,
                Lemma::Long => verifier::verify_lemma_long(*n, &cfg)?,
            };
            return Ok((vec![r], run));
        }
        Command::Lemmas { space, n, run } => {
            require_float(run.backend, "derivative lemmas")?;
            let space = SpaceSpec::new(*space, *n)?;
            let cfg = suite_config(run)?;
            vec![
                verifier::verify_derivative_lemmas(&space, &cfg)?,
                verifier::verify_calculus_identities(&space, &cfg)?,
            ]
        }
        Command::Verify {
            space,
            n,
            k,
            l,
            family,
            compose,
            run,
        } => {
            require_float(run.backend, "harmonicity suites")?;
            let space = SpaceSpec::new(*space, *n)?;
            let report = match (k, l, family) {
                (_, _, Some(fam)) => {
                    let members = family_of(&space, *fam)?;
                    let cfg = suite_config(run)?;
                    match compose {
                        Some(src) => {
                            let poly: Polynomial = src.parse()?;
                            verifier::verify_harmonic(&holomorphic_compose(&poly, &members)?, &cfg)?
                        }
                        None => verifier::verify_family(&members, &cfg)?,
                    }
                }
                (Some(k), Some(l), None) => {
                    let m = selected_morphism(&space, *k, *l)?;
                    verifier::verify_harmonic(&m, &suite_config(run)?)?
                }
                (None, Some(_), None) => {
                    return Err(RunError::Usage("--l needs --k (or use --family)".into()));
                }
                _ => {
                    let m = verifier::canonical_morphism(&space)?;
                    verifier::verify_harmonic(&m, &suite_config(run)?)?
                }
            };
            vec![report]
        }
        Command::Bigcell { n, run } => {
            require_float(run.backend, "the big-cell suite")?;
            vec![verifier::verify_bigcell(*n, &suite_config(run)?)?]
        }
        Command::All { n_max, run } => {
            if run.backend.is_some() {
                return Err(RunError::Usage(
                    "`all` picks the backend per suite; drop --backend".into(),
                ));
            }
            verifier::run_all(*n_max, &suite_config(run)?)?
        }
    };
    let run = match command {
        Command::Lemmas { run, .. }
        | Command::Verify { run, .. }
        | Command::Bigcell { run, .. }
        | Command::All { run, .. } => run,
        _ => unreachable!("identities and spaces return early"),
    };
    Ok((reports, run))
}

/// Text reports separated by blank lines, or one JSON object per line.
pub fn render(reports: &[VerificationReport], format: Format) -> String {
    match format {
        Format::Text => reports
            .iter()
            .map(VerificationReport::render_text)
            .collect::<Vec<_>>()
            .join("\n"),
        Format::Json => reports.iter().map(|r| r.to_json() + "\n").collect(),
    }
}

fn emit(text: &str, output: Option<&PathBuf>) -> io::Result<()> {
    match output {
        Some(path) => File::create(path)?.write_all(text.as_bytes()),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

/// Runs a parsed command and returns the exit code.
pub fn execute(cli: &Cli) -> Result<u8, RunError> {
    if let Command::Spaces { n, format } = &cli.command {
        emit(&spaces_listing(*n, *format)?, None)?;
        return Ok(EXIT_PASS);
    }
    let (reports, run) = reports_for(&cli.command)?;
    emit(&render(&reports, run.format), run.output.as_ref())?;
    let all_passed = reports.iter().all(|r| r.passed);
    if matches!(cli.command, Command::All { .. }) {
        let failed = reports.iter().filter(|r| !r.passed).count();
        eprintln!("{} reports, {failed} failed", reports.len());
    }
    Ok(if all_passed { EXIT_PASS } else { EXIT_FAIL })
}

/// Parses `argv` (program name first) and runs it.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(args: &[&str]) -> u8 {
        run(std::iter::once("harmorph").chain(args.iter().copied()))
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(code(&["frobnicate"]), EXIT_USAGE);
        assert_eq!(
            code(&["verify", "--space", "slr-so", "--n", "2", "--k", "1", "--l", "1"]),
            EXIT_USAGE
        );
        assert_eq!(code(&["verify", "--space", "nope", "--n", "2"]), EXIT_USAGE);
        assert_eq!(
            code(&[
                "bigcell",
                "--n",
                "2",
                "--backend",
                "rational",
                "--seed",
                "1"
            ]),
            EXIT_USAGE
        );
        assert_eq!(
            code(&[
                "identities",
                "--lemma",
                "long",
                "--n",
                "1",
                "--backend",
                "float",
                "--seed",
                "1"
            ]),
            EXIT_USAGE
        );
        assert_eq!(
            code(&["verify", "--space", "slr-so", "--n", "2", "--family", "1", "--seed", "1"]),
            EXIT_USAGE
        );
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(code(&["--help"]), EXIT_PASS);
    }

    #[test]
    fn selected_family_member() {
        let space = SpaceSpec::new(SpaceId::SusSp, 2).unwrap();
        let m = selected_morphism(&space, 3, 1).unwrap();
        assert_eq!(m.label, "sus-sp:n=2:l=1:k=3");
        assert!(selected_morphism(&space, 1, 1).is_err());
    }

    #[test]
    fn spaces_listing_sizes() {
        let text = spaces_listing(Some(2), Format::Json).unwrap();
        let rows: Vec<serde_json::Value> = text
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(rows.len(), 5);
        let slr = rows.iter().find(|r| r["space"] == "slr-so").unwrap();
        assert_eq!(slr["basis_size"], 3);
        let sus = rows.iter().find(|r| r["space"] == "sus-sp").unwrap();
        assert_eq!(sus["ambient_dim"], 4);
        assert_eq!(sus["basis_size"], 6);
    }
}
