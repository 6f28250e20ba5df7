//! `szego` command-line harness.
//!
//! Exit codes: 0 ok, 1 verification failure, 2 usage or parse error,
//! 3 discretization budget violation.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use szego::config::RunConfig;
use szego::fieldio::{decode, encode, FieldFormat, MAGIC};
use szego::forms::{cr_system_residual, interior_norm, szego_project_form};
use szego::kernel_table::{evaluate, kernel_table, parse_samples};
use szego::packet::make_wave_packet;
use szego::phase::PhaseChoice;
use szego::types::{FormField, ScalarField};
use szego::verify;
use szego::SzegoError;

#[derive(Parser)]
#[command(name = "szego", version, about = "Szegő kernels and projections on the Heisenberg group")]
struct Cli {
    /// TOML run configuration; defaults apply to every missing key.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Field file format for written fields.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads (0 = one per core); overrides `jobs` in the config.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Binary,
}

impl From<Format> for FieldFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => FieldFormat::Csv,
            Format::Binary => FieldFormat::Binary,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Phase {
    Minus,
    Plus,
    Hat,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the kernel by the closed form and by quadrature.
    KernelTable {
        /// Sample pairs, one `x,y[,epsilon]` per line.
        #[arg(long)]
        samples: PathBuf,
        #[arg(long, value_enum, default_value = "minus")]
        phase: Phase,
    },
    /// Project a field file and report diagnostics.
    Project {
        /// Input field file (binary or CSV, detected from its first bytes).
        input: PathBuf,
        /// Where to write the diagnostics; stderr when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the verification suite.
    Verify,
    /// Synthesize the configured wave packets into a field file.
    MakePacket,
}

enum Failure {
    Error(SzegoError),
    Verification,
}

impl From<SzegoError> for Failure {
    fn from(e: SzegoError) -> Self {
        Failure::Error(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Error(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Error(e)) => {
            eprintln!("szego: {e}");
            ExitCode::from(match e {
                SzegoError::Budget { .. } => 3,
                _ => 2,
            })
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    if let Some(jobs) = cli.jobs {
        cfg.jobs = jobs;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| SzegoError::Usage(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::KernelTable { samples, phase } => {
            let choice = match phase {
                Phase::Minus => PhaseChoice::Minus,
                Phase::Plus => PhaseChoice::Plus,
                Phase::Hat => PhaseChoice::Hat,
            };
            let text = std::fs::read_to_string(&samples)?;
            let samples = parse_samples(&text)?;
            let rows = samples
                .iter()
                .map(|s| evaluate(s, &cfg.sig, choice, cfg.epsilon))
                .collect::<szego::Result<Vec<_>>>()?;
            emit(cli.out.as_deref(), kernel_table(&samples, &rows).as_bytes())?;
            Ok(())
        }
        Command::Project { input, report } => {
            let bytes = std::fs::read(&input)?;
            let in_format = if bytes.starts_with(MAGIC) {
                FieldFormat::Binary
            } else {
                FieldFormat::Csv
            };
            let u = decode(&bytes, in_format)?;
            let (projected, text) = project(&u, &cfg)?;
            let format = cli.format.map_or(in_format, FieldFormat::from);
            emit(cli.out.as_deref(), &encode(&projected, format))?;
            match report {
                Some(path) => std::fs::write(path, text)?,
                None => eprint!("{text}"),
            }
            Ok(())
        }
        Command::Verify => {
            let report = verify::run(&cfg);
            emit(cli.out.as_deref(), report.render().as_bytes())?;
            if report.all_pass() {
                Ok(())
            } else {
                Err(Failure::Verification)
            }
        }
        Command::MakePacket => {
            let form = packets(&cfg)?;
            let format = cli.format.map_or(FieldFormat::Binary, FieldFormat::from);
            emit(cli.out.as_deref(), &encode(&form, format))?;
            Ok(())
        }
    })
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), SzegoError> {
    use std::io::Write;
    match out {
        Some(path) => std::fs::write(path, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

/// Sums the configured packets into their components.
fn packets(cfg: &RunConfig) -> szego::Result<FormField> {
    let Some(first) = cfg.packets.first() else {
        return Err(SzegoError::Usage("the config has no [[packet]] entries".into()));
    };
    let n = cfg.sig.n();
    let q = first.component.len();
    let mut parts = std::collections::BTreeMap::new();
    for p in &cfg.packets {
        let field = make_wave_packet(&p.spec, &cfg.sig, &cfg.grid)?;
        let zero = ScalarField::zeros(n, cfg.grid.clone())?;
        let acc = parts.remove(&p.component).unwrap_or(zero);
        parts.insert(p.component.clone(), acc.add_scaled(1.0.into(), &field)?);
    }
    FormField::new(n, q, cfg.grid.clone(), parts)
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        0.0
    }
}

/// Projects `u` and renders the `key=value` diagnostics.
fn project(u: &FormField, cfg: &RunConfig) -> szego::Result<(FormField, String)> {
    let result = szego_project_form(u, &cfg.sig)?;
    let p = result.form;
    let mut text = String::new();
    let _ = writeln!(text, "n={} q={} lambdas={:?}", u.n(), u.q(), cfg.sig.lambdas());
    match result.vanishing {
        Some(reason) => {
            let _ = writeln!(text, "vanishing=true reason=\"{reason}\"");
        }
        None => {
            let _ = writeln!(text, "vanishing=false");
        }
    }
    let residuals = cr_system_residual(&p, &cfg.sig);
    for (j, c) in p.components() {
        let input = u.component(j).map_or(0.0, ScalarField::norm);
        let _ = write!(text, "component={j} input-norm={input:e} output-norm={:e}", c.norm());
        match &residuals {
            Ok(r) => {
                let res = r.get(j).copied().unwrap_or(0.0);
                let rel = ratio(res, interior_norm(c));
                let tol = cfg.tolerances.cr_residual;
                let verdict = if rel <= tol { "PASS" } else { "FAIL" };
                let _ = writeln!(
                    text,
                    " cr-residual={res:e} cr-residual-rel={rel:e}<={tol:e} {verdict}"
                );
            }
            Err(e) => {
                let _ = writeln!(text, " cr-residual=unavailable ({e})");
            }
        }
    }
    let idem = if result.vanishing.is_none() {
        let pp = szego_project_form(&p, &cfg.sig)?.form;
        ratio(pp.sub(&p)?.norm(), p.norm())
    } else {
        0.0
    };
    let change = ratio(p.sub(u)?.norm(), u.norm());
    let _ = writeln!(text, "idempotency-gap={idem:e}");
    let _ = writeln!(text, "relative-change={change:e}");
    Ok((p, text))
}
