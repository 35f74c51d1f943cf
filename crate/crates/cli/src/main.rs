use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use floorcount::oracles::{formulas_suite, kontsevich_suite, proposition_checks, Report};
use floorcount::{
    build_constraints, enumerate_floor_diagrams, enumerate_markings, nonzero_types, Engine,
    FloorError, InvariantCache,
};

#[derive(Parser)]
#[command(
    name = "floorcount",
    version,
    about = "Curve counts in projective space via floor diagrams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gromov-Witten number N^(n)_{d,g}(l)
    Gw {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        d: u32,
        #[arg(long, default_value_t = 0)]
        g: u32,
        /// Constraint counts l_0,...,l_{n-2}
        #[arg(long, value_delimiter = ',', required = true)]
        l: Vec<u32>,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Welschinger invariant W^(n)_d (n = 2 or 3)
    W {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        d: u32,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// List floor diagrams, optionally with their markings
    Diagrams {
        #[arg(long)]
        d: u32,
        #[arg(long, default_value_t = 0)]
        g: u32,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long, value_delimiter = ',')]
        l: Option<Vec<u32>>,
        /// List marked diagrams, one per equivalence class
        #[arg(long, requires_all = ["n", "l"])]
        marked: bool,
        /// One representative per combinatorial type with nonzero complex
        /// multiplicity, with its count and multiplicities
        #[arg(long, requires = "marked")]
        group_types: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Compare the engine with independent oracles
    Oracle {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long = "max-d")]
        max_d: u32,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Print the entries of a cache file after verifying its checksum
    Cache {
        #[arg(long, env = "FLOORCOUNT_CACHE")]
        cache: PathBuf,
    },
}

#[derive(Args)]
struct EngineArgs {
    /// Cache file, read before and written after the computation
    #[arg(long, env = "FLOORCOUNT_CACHE")]
    cache: Option<PathBuf>,
    /// Worker threads (defaults to available parallelism)
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Dot,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Kontsevich,
    Formulas,
    Proposition,
}

enum Failure {
    Usage(String),
    Math(String),
    OracleFailed,
}

impl From<FloorError> for Failure {
    fn from(e: FloorError) -> Self {
        match e {
            FloorError::DimensionMismatch { .. }
            | FloorError::UnsupportedGenus { .. }
            | FloorError::UnsupportedDimension(_)
            | FloorError::ContractViolation(_)
            | FloorError::TooLarge(_) => Failure::Math(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Math(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::OracleFailed) => ExitCode::from(1),
    }
}

fn engine(args: &EngineArgs) -> Result<Engine, Failure> {
    let cache = match &args.cache {
        Some(p) => InvariantCache::load_or_default(p)?,
        None => InvariantCache::new(),
    };
    let jobs = match args.jobs {
        Some(j) => j,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    Ok(Engine::new().with_cache(cache).with_jobs(jobs)?)
}

fn save(engine: &Engine, args: &EngineArgs) -> Result<(), Failure> {
    if let Some(p) = &args.cache {
        engine.cache().store(p)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match cli.command {
        Command::Gw {
            n,
            d,
            g,
            l,
            engine: args,
        } => {
            let e = engine(&args)?;
            let v = e.gromov_witten(n, d, g, &l)?;
            save(&e, &args)?;
            writeln!(out, "{v}")?;
        }
        Command::W { n, d, engine: args } => {
            let e = engine(&args)?;
            let v = e.welschinger(n, d)?;
            save(&e, &args)?;
            writeln!(out, "{v}")?;
        }
        Command::Diagrams {
            d,
            g,
            n,
            l,
            marked,
            group_types,
            format,
            engine: args,
        } => {
            let diagrams = enumerate_floor_diagrams(d, g)?;
            if !marked {
                for diagram in &diagrams {
                    match format {
                        Format::Text => write!(out, "{}", diagram.to_text())?,
                        Format::Dot => write!(out, "{}", diagram.to_dot())?,
                    }
                }
            } else {
                let (n, l) = (n.expect("required by clap"), l.expect("required by clap"));
                let spec = build_constraints(n, d, g, &l)?;
                if group_types {
                    let e = engine(&args)?;
                    let groups = nonzero_types(&diagrams, &spec, &e)?;
                    save(&e, &args)?;
                    for (i, t) in groups.iter().enumerate() {
                        let mu_r = t
                            .multiplicity
                            .mu_real
                            .as_ref()
                            .map_or("-".to_string(), |r| r.to_string());
                        writeln!(
                            out,
                            "# type {} count={} mu_c={} mu_r={mu_r}",
                            i + 1,
                            t.count,
                            t.multiplicity.mu_complex
                        )?;
                        match format {
                            Format::Text => write!(out, "{}", t.representative.to_text())?,
                            Format::Dot => write!(out, "{}", t.representative.to_dot())?,
                        }
                    }
                } else {
                    for diagram in &diagrams {
                        for m in enumerate_markings(diagram, &spec)? {
                            match format {
                                Format::Text => write!(out, "{}", m.to_text())?,
                                Format::Dot => write!(out, "{}", m.to_dot())?,
                            }
                        }
                    }
                }
            }
        }
        Command::Oracle {
            suite,
            max_d,
            engine: args,
        } => {
            let e = engine(&args)?;
            let report: Report = match suite {
                Suite::Kontsevich => kontsevich_suite(max_d, &e)?,
                Suite::Formulas => formulas_suite(max_d, &e)?,
                Suite::Proposition => proposition_checks(max_d, &e)?,
            };
            save(&e, &args)?;
            write!(out, "{report}")?;
            let ok = report.passed();
            writeln!(
                out,
                "{}",
                if ok {
                    "all checks passed"
                } else {
                    "some checks failed"
                }
            )?;
            out.flush()?;
            if !ok {
                return Err(Failure::OracleFailed);
            }
        }
        Command::Cache { cache } => {
            let c = InvariantCache::load(&cache)?;
            for (k, v) in c.entries() {
                writeln!(out, "{k} {v}")?;
            }
        }
    }
    out.flush()?;
    Ok(())
}
