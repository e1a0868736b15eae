//! Command-line front end: instance generation, inscription runs, certificate
//! verification, ideal codings, and tree classification.
//!
//! Exit codes: 0 success or pass, 1 verified violation or refuted formula,
//! 2 input or format error, 3 construction failure (density exhausted,
//! insufficient filtration, and kin).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cantor_core::category::{category_strategy, CategoryConfig};
use cantor_core::certify::{digest, verify_certificate, Certificate, Instance};
use cantor_core::codings::{coding_for, Code, Formula, Ideal, Point, Presentation};
use cantor_core::largesets::{
    co_diagonal_family, full_plane_family, random_dense_open, random_filtration, DenseOpenParams,
    FiltrationParams,
};
use cantor_core::measure::{measure_strategy, MeasureConfig};
use cantor_core::trees::{TreeKind, TreePrefix};
use cantor_core::DepthCaps;

#[derive(Parser)]
#[command(
    name = "cantor",
    about = "Exact finite-depth rectangle inscriptions in the Cantor plane",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an inscription engine and write its certificate.
    #[command(subcommand)]
    Inscribe(InscribeCommand),
    /// Re-check a certificate against its instance file.
    Verify {
        #[arg(long)]
        cert: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Encode a presentation into a sparse code.
    Encode {
        #[arg(long)]
        ideal: String,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a code formula at a bound.
    CheckCode {
        #[arg(long)]
        code: PathBuf,
        #[arg(long)]
        formula: String,
        #[arg(long)]
        bound: u32,
        #[arg(long, default_value_t = 8)]
        search: u32,
        /// Point bits, optionally `*0` or `*1` for an eventually-constant tail.
        #[arg(long)]
        point: Option<String>,
    },
    /// Tree-prefix utilities.
    #[command(subcommand)]
    Tree(TreeCommand),
    /// Generate a seeded instance file.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        kind: String,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 6)]
        levels: usize,
        #[arg(long, default_value_t = 2)]
        knock: usize,
        /// Depth increase per level (dense-open instances).
        #[arg(long, default_value_t = 1)]
        step: usize,
        /// Schedule constant (filtration instances).
        #[arg(long, default_value_t = 6)]
        c: u32,
    },
}

#[derive(Subcommand)]
enum InscribeCommand {
    /// Category-case engines over a dense-open family.
    Category(InscribeArgs),
    /// Measure-case engines over a filtration.
    Measure(InscribeArgs),
}

#[derive(Args)]
struct InscribeArgs {
    #[arg(long)]
    variant: String,
    #[arg(long)]
    stages: usize,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    cert: PathBuf,
}

#[derive(Subcommand)]
enum TreeCommand {
    /// Classify a tree prefix file against a tree class.
    Classify {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        kind: String,
    },
}

fn depth_caps() -> Result<DepthCaps, String> {
    let mut caps = DepthCaps::default();
    if let Ok(raw) = std::env::var("CANTOR_DEPTH_CAP") {
        let parts: Vec<&str> = raw.split(',').collect();
        match parts.as_slice() {
            [one] => {
                let d: usize = one.trim().parse().map_err(|_| format!("bad CANTOR_DEPTH_CAP {raw:?}"))?;
                caps = DepthCaps { dim1: d, dim2: d };
            }
            [d1, d2] => {
                caps = DepthCaps {
                    dim1: d1.trim().parse().map_err(|_| format!("bad CANTOR_DEPTH_CAP {raw:?}"))?,
                    dim2: d2.trim().parse().map_err(|_| format!("bad CANTOR_DEPTH_CAP {raw:?}"))?,
                };
            }
            _ => return Err(format!("bad CANTOR_DEPTH_CAP {raw:?}")),
        }
    }
    Ok(caps)
}

const EXIT_VIOLATION: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_CONSTRUCTION: u8 = 3;

fn fail(code: u8, message: String) -> ExitCode {
    eprintln!("{message}");
    ExitCode::from(code)
}

fn read(path: &PathBuf) -> Result<String, ExitCode> {
    fs::read_to_string(path)
        .map_err(|e| fail(EXIT_INPUT, format!("cannot read {}: {e}", path.display())))
}

fn write(path: &PathBuf, text: &str) -> Result<(), ExitCode> {
    fs::write(path, text)
        .map_err(|e| fail(EXIT_INPUT, format!("cannot write {}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(code) => code,
    }
}

fn run(cli: Cli) -> Result<ExitCode, ExitCode> {
    let caps = depth_caps().map_err(|e| fail(EXIT_INPUT, e))?;
    match cli.command {
        Command::Inscribe(InscribeCommand::Category(args)) => {
            let text = read(&args.input)?;
            let family = match Instance::from_text(&text, &caps) {
                Ok(Instance::DenseOpen(f)) => f,
                Ok(Instance::Filtration(_)) => {
                    return Err(fail(
                        EXIT_INPUT,
                        "category engines need a .dof instance".into(),
                    ))
                }
                Err(e) => return Err(fail(EXIT_INPUT, format!("{e}"))),
            };
            let Some(strategy) = category_strategy(&args.variant) else {
                return Err(fail(
                    EXIT_INPUT,
                    format!("unknown category variant {:?}", args.variant),
                ));
            };
            let config = CategoryConfig {
                stages: args.stages,
                caps,
            };
            match strategy.inscribe(&family, &digest(&text), &config) {
                Ok(run) => {
                    write(&args.cert, &run.certificate.to_text())?;
                    println!(
                        "inscribed {} in {} stages; certificate {}",
                        strategy.variant(),
                        args.stages,
                        args.cert.display()
                    );
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => Err(fail(EXIT_CONSTRUCTION, format!("{e}"))),
            }
        }
        Command::Inscribe(InscribeCommand::Measure(args)) => {
            let text = read(&args.input)?;
            let filt = match Instance::from_text(&text, &caps) {
                Ok(Instance::Filtration(f)) => f,
                Ok(Instance::DenseOpen(_)) => {
                    return Err(fail(
                        EXIT_INPUT,
                        "measure engines need a .filt instance".into(),
                    ))
                }
                Err(e) => return Err(fail(EXIT_INPUT, format!("{e}"))),
            };
            let Some(strategy) = measure_strategy(&args.variant) else {
                return Err(fail(
                    EXIT_INPUT,
                    format!("unknown measure variant {:?}", args.variant),
                ));
            };
            let config = MeasureConfig {
                stages: args.stages,
                caps,
            };
            match strategy.inscribe(&filt, &digest(&text), &config) {
                Ok(run) => {
                    write(&args.cert, &run.certificate.to_text())?;
                    println!(
                        "inscribed {} in {} stages; certificate {}",
                        strategy.variant(),
                        args.stages,
                        args.cert.display()
                    );
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => Err(fail(EXIT_CONSTRUCTION, format!("{e}"))),
            }
        }
        Command::Verify { cert, input } => {
            let cert_text = read(&cert)?;
            let instance_text = read(&input)?;
            let cert = Certificate::from_text(&cert_text)
                .map_err(|e| fail(EXIT_INPUT, format!("{e}")))?;
            match verify_certificate(&cert, &instance_text, &caps) {
                Ok(report) if report.pass => {
                    println!("pass: every condition holds");
                    Ok(ExitCode::SUCCESS)
                }
                Ok(report) => {
                    let f = report.failure.expect("failing report carries a condition");
                    println!(
                        "fail: condition {} at stage {}: {}",
                        f.condition,
                        f.stage.map_or("-".to_string(), |s| s.to_string()),
                        f.detail
                    );
                    Ok(ExitCode::from(EXIT_VIOLATION))
                }
                Err(e) => Err(fail(EXIT_INPUT, format!("{e}"))),
            }
        }
        Command::Encode { ideal, input, out } => {
            let ideal: Ideal = ideal
                .parse()
                .map_err(|e| fail(EXIT_INPUT, format!("{e}")))?;
            let text = read(&input)?;
            let pres = Presentation::from_pres_format(&text)
                .map_err(|e| fail(EXIT_INPUT, format!("{e}")))?;
            match coding_for(ideal).encode(&pres) {
                Ok(code) => {
                    write(&out, &code.to_code_format())?;
                    println!("encoded {} presentation to {}", ideal.tag(), out.display());
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => Err(fail(EXIT_INPUT, format!("{e}"))),
            }
        }
        Command::CheckCode {
            code,
            formula,
            bound,
            search,
            point,
        } => {
            let text = read(&code)?;
            let code = Code::from_code_format(&text)
                .map_err(|e| fail(EXIT_INPUT, format!("{e}")))?;
            let formula: Formula = formula
                .parse()
                .map_err(|e| fail(EXIT_INPUT, format!("{e}")))?;
            let coding = coding_for(code.ideal);
            let verdict = match formula {
                Formula::Phi => coding.phi_check(&code, bound, search),
                Formula::Psi => {
                    let Some(point) = point else {
                        return Err(fail(EXIT_INPUT, "psi needs --point".into()));
                    };
                    let point: Point = point
                        .parse()
                        .map_err(|e| fail(EXIT_INPUT, format!("{e}")))?;
                    coding
                        .psi_member(&code, &point, bound)
                        .map_err(|e| fail(EXIT_INPUT, format!("{e}")))?
                }
            };
            println!("{verdict}");
            if verdict.is_pass() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(EXIT_VIOLATION))
            }
        }
        Command::Tree(TreeCommand::Classify { file, kind }) => {
            let text = read(&file)?;
            let (prefix, witness) = TreePrefix::from_tree_format(&text)
                .map_err(|e| fail(EXIT_INPUT, format!("{e}")))?;
            let kind: TreeKind = kind
                .parse()
                .map_err(|e| fail(EXIT_INPUT, format!("{e}")))?;
            match prefix.classify(kind, witness.as_ref()) {
                Ok(verdict) if verdict.is_consistent() => {
                    println!("consistent");
                    Ok(ExitCode::SUCCESS)
                }
                Ok(cantor_core::trees::ClassifyVerdict::Violated { node, reason }) => {
                    println!("violated at node {node}: {reason}");
                    Ok(ExitCode::from(EXIT_VIOLATION))
                }
                Ok(_) => unreachable!(),
                Err(e) => Err(fail(EXIT_INPUT, format!("{e}"))),
            }
        }
        Command::Gen {
            seed,
            kind,
            depth,
            out,
            levels,
            knock,
            step,
            c,
        } => {
            let text = match kind.as_str() {
                "dense-open" => random_dense_open(
                    seed,
                    &DenseOpenParams {
                        levels,
                        depth0: depth,
                        depth_step: step,
                        knock,
                    },
                    &caps,
                )
                .map(|f| f.to_dof()),
                "filtration" => random_filtration(
                    seed,
                    &FiltrationParams {
                        levels,
                        depth,
                        c,
                        knock,
                    },
                    &caps,
                )
                .map(|f| f.to_filt()),
                "co-diagonal" => co_diagonal_family(levels, depth, &caps).map(|f| f.to_dof()),
                "full-plane" => Ok(full_plane_family(levels).to_dof()),
                other => {
                    return Err(fail(EXIT_INPUT, format!("unknown instance kind {other:?}")))
                }
            };
            match text {
                Ok(text) => {
                    write(&out, &text)?;
                    println!("wrote {}", out.display());
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => Err(fail(EXIT_INPUT, format!("{e}"))),
            }
        }
    }
}
