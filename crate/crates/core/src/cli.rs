//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on a failed assertion or verdict, 2 on usage
//! and parse errors. Diagnostics go to the error stream only.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::ansatz::Pattern;
use crate::derivations::{
    candidates, classify_first_order, derive_staged, explore, recheck_candidate, reproduce_paper, BranchChoice,
    DeriveOptions,
};
use crate::error::Error;
use crate::expr::SymmetryFlags;
use crate::free::FirstOrderRule;
use crate::matrix_lab::{discriminate, instance, Verdict};
use crate::report::{csv, DerivationDoc, Invocation, McRow, Payload, RecheckDoc, Rendering, ReportDocument};
use crate::rules::{FirstOrderMode, RuleSet};

/// Default directory for `--out` paths and unnamed reports.
pub const OUT_DIR_VAR: &str = "UNIPROD_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "uniprod", version, about = "Derive universal independence rules for second-order moments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Derive the rule for one pattern, staging smaller shapes first.
    Derive {
        #[arg(long)]
        pattern: String,
        /// Comma-separated: tracial, phi2tracial, symmetric (or none).
        #[arg(long, default_value = "tracial,phi2tracial,symmetric")]
        flags: String,
        #[arg(long, value_enum, default_value = "free")]
        first_order: FirstOrderArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the two-algebra derivation with every intermediate check.
    ReproducePaper {
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Classify first-order rules up to a word length.
    Classify {
        #[arg(long, default_value_t = 1)]
        order: u32,
        #[arg(long, default_value_t = 4)]
        max_letters: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Derive a pattern under a chosen candidate for phi2(a1 b1, a2 b2).
    Explore {
        #[arg(long, required_unless_present = "recheck")]
        pattern: Option<String>,
        #[arg(long, value_enum, default_value = "all")]
        branch: BranchArg,
        /// Substitute the candidates into the (2,2,2)-letter associativity constraints.
        #[arg(long)]
        recheck: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo check of the candidates on a GUE instance.
    VerifyMc {
        #[arg(long, default_value = "a2b2-a2b2")]
        instance: String,
        #[arg(long, default_value_t = 300)]
        dim: usize,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also write the result rows as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Format {
    Json,
    Text,
    Latex,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FirstOrderArg {
    Free,
    Tensor,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum BranchArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    All,
}

enum Failure {
    Usage(String),
    Failed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. }
            | Error::InvalidPattern { .. }
            | Error::DegeneratePattern(_)
            | Error::UnknownInstance(_)
            | Error::InvalidDimension(_)
            | Error::SizeLimit { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Failed(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Failed(format!("i/o error: {e}"))
    }
}

/// Run with the given arguments (program name first).
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
        Err(Failure::Failed(m)) => {
            let _ = writeln!(err, "error: {m}");
            1
        }
    }
}

fn rendering(f: Format) -> Rendering {
    match f {
        Format::Json => Rendering::Structured,
        Format::Text => Rendering::Text,
        Format::Latex => Rendering::Latex,
    }
}

fn extension(f: Format) -> &'static str {
    match f {
        Format::Json => "json",
        Format::Text => "txt",
        Format::Latex => "tex",
    }
}

/// Relative paths resolve against the output directory variable when set.
fn resolve(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_VAR) {
        Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn emit(
    command: &str,
    args: Vec<String>,
    seeds: Vec<u64>,
    payload: Payload,
    output: &OutputArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), Failure> {
    let doc = ReportDocument::new(
        Invocation {
            command: command.to_string(),
            args,
            seeds,
        },
        rendering(output.format),
        payload,
    );
    let text = doc.render();
    let target = match &output.out {
        Some(p) => Some(resolve(p)),
        None => std::env::var_os(OUT_DIR_VAR).map(|d| PathBuf::from(d).join(format!("{command}.{}", extension(output.format)))),
    };
    match target {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&path, text)?;
            writeln!(err, "wrote {}", path.display())?;
        }
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn derivations(reports: &[crate::derivations::DerivationReport]) -> Payload {
    Payload::Derivations(reports.iter().map(DerivationDoc::from).collect())
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Derive {
            pattern,
            flags,
            first_order,
            output,
        } => {
            let f = SymmetryFlags::from_cli(&flags).ok_or_else(|| Failure::Usage(format!("unknown flags {flags:?}")))?;
            let p = Pattern::parse(&pattern, f)?;
            let rule = match first_order {
                FirstOrderArg::Free => FirstOrderRule::Free,
                FirstOrderArg::Tensor => FirstOrderRule::Tensor,
            };
            let reports = derive_staged(&p, &RuleSet::new(f, FirstOrderMode::Factorize(rule)), &DeriveOptions::default())?;
            let args = vec![
                format!("--pattern={pattern}"),
                format!("--flags={}", f.to_cli()),
                format!("--first-order={}", if rule == FirstOrderRule::Free { "free" } else { "tensor" }),
            ];
            emit("derive", args, vec![], derivations(&reports), &output, out, err)?;
            Ok(0)
        }
        Command::ReproducePaper { output } => {
            let reports = reproduce_paper()?;
            emit("reproduce-paper", vec![], vec![], derivations(&reports), &output, out, err)?;
            Ok(0)
        }
        Command::Classify {
            order,
            max_letters,
            output,
        } => {
            if order != 1 {
                return Err(Failure::Usage(format!("classification is implemented for order 1, not {order}")));
            }
            let reports = classify_first_order(max_letters)?;
            let args = vec![format!("--order={order}"), format!("--max-letters={max_letters}")];
            emit("classify", args, vec![], derivations(&reports), &output, out, err)?;
            Ok(0)
        }
        Command::Explore {
            pattern,
            branch,
            recheck,
            output,
        } => {
            let choice = match branch {
                BranchArg::One => BranchChoice::Candidate1,
                BranchArg::Two => BranchChoice::Candidate2,
                BranchArg::All => BranchChoice::All,
            };
            let label = match branch {
                BranchArg::One => "1",
                BranchArg::Two => "2",
                BranchArg::All => "all",
            };
            let mut args = vec![format!("--branch={label}")];
            let payload = if recheck {
                args.push("--recheck".into());
                let all = candidates()?;
                let chosen = match choice {
                    BranchChoice::Candidate1 => &all[..1],
                    BranchChoice::Candidate2 => &all[1..],
                    BranchChoice::All => &all[..],
                };
                let docs = chosen
                    .iter()
                    .map(|c| recheck_candidate(c).map(|r| RecheckDoc::from(&r)))
                    .collect::<Result<Vec<_>, _>>()?;
                Payload::Rechecks(docs)
            } else {
                let src = pattern.expect("clap enforces --pattern");
                args.insert(0, format!("--pattern={src}"));
                let p = Pattern::parse(&src, SymmetryFlags::default())?;
                derivations(&explore(&p, choice, &DeriveOptions::default())?)
            };
            emit("explore", args, vec![], payload, &output, out, err)?;
            Ok(0)
        }
        Command::VerifyMc {
            instance: name,
            dim,
            samples,
            seed,
            csv: csv_path,
            output,
        } => {
            let inst = instance(&name)?;
            let d = discriminate(&inst, dim, samples, seed)?;
            let rows = vec![McRow::from(&d)];
            if let Some(p) = csv_path {
                let path = resolve(&p);
                std::fs::write(&path, csv(&rows))?;
                writeln!(err, "wrote {}", path.display())?;
            }
            let args = vec![
                format!("--instance={name}"),
                format!("--dim={dim}"),
                format!("--samples={samples}"),
            ];
            emit("verify-mc", args, vec![seed], Payload::MatrixLab(rows), &output, out, err)?;
            let any_consistent = d.checks.iter().any(|c| c.verdict == Verdict::ConsistentWith);
            if !any_consistent {
                writeln!(err, "verdict: no candidate is consistent with the estimate")?;
                return Ok(1);
            }
            Ok(0)
        }
    }
}
