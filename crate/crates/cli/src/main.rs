//! `seqlab`: run a construction on a JSON fixture, emit its certificate, or
//! re-check a certificate from its raw coordinates.
//!
//! Exit codes: 0 every check passed, 1 an invariant failed, 2 the finite
//! model was too small, 3 bad input.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand, ValueEnum};
use seqlab::{
    run_scenario, verify_text, AmbientSpace, Envelope, Error, Fixture, Mode, Params, Pipeline, Scenario, Stage,
};

#[derive(Parser)]
#[command(
    name = "seqlab",
    version,
    about = "Certified constructions in truncated sequence spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Zero bound and independence of a combination of geometric sequences.
    Lineability {
        /// Ratios in (0, 1), e.g. `1/2,1/3`.
        #[arg(long, value_delimiter = ',', required = true)]
        ratios: Vec<String>,
        /// One nonzero coefficient per ratio (default all 1).
        #[arg(long, value_delimiter = ',')]
        coeffs: Option<Vec<String>>,
        /// Coordinates scanned for zeros.
        #[arg(long)]
        scan: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Block sequence (stage a) or zero-pattern family (stage b) in l_p.
    ConstructLp {
        #[command(flatten)]
        run: RunArgs,
        /// Override the fixture's space (only `lp` is accepted).
        #[arg(long, value_enum)]
        space: Option<SpaceArg>,
        /// Exponent used with `--space lp`.
        #[arg(long, requires = "space")]
        p: Option<f64>,
        /// Defaults to `b` when eps < 1/512 and `a` otherwise.
        #[arg(long, value_enum)]
        stage: Option<StageArg>,
    },
    /// Mazur sequence, h cascade and l family in l_inf or c0.
    ConstructLinf {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Spaceability witness from the l family of either pipeline.
    Witness {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Repair `f` into `g` vanishing on infinitely many coordinates.
    Density {
        #[command(flatten)]
        run: RunArgs,
        /// Coefficients of `f` over the fixture generators; random when absent.
        #[arg(long, value_delimiter = ',')]
        f_coeffs: Option<Vec<String>>,
    },
    /// Re-check certificates from their stored coordinates.
    Verify {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Run scenario files, writing one certificate per scenario.
    Batch {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    fixture: PathBuf,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    stab_tol: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Float)]
    mode: ModeArg,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    net_resolution: Option<f64>,
    /// Write the certificate here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Float,
}

#[derive(Clone, Copy, ValueEnum)]
enum StageArg {
    A,
    B,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpaceArg {
    Lp,
}

impl RunArgs {
    fn params(&self) -> Params {
        Params {
            eps: self.eps,
            depth: self.depth,
            stab_tol: self.stab_tol,
            samples: self.samples,
            seed: self.seed,
            mode: match self.mode {
                ModeArg::Exact => Mode::Exact,
                ModeArg::Float => Mode::Float,
            },
            trials: self.trials,
            net_resolution: self.net_resolution,
            ..Params::default()
        }
    }
}

/// Exit code for an error, following the taxonomy in the crate docs.
fn exit_code(e: &Error) -> u8 {
    if e.is_model_limit() {
        2
    } else if e.is_hard_failure() {
        1
    } else {
        match e {
            Error::LinearProgram(_)
            | Error::OverlappingWindows(_)
            | Error::UnnormalizedBlock { .. }
            | Error::TooFewIndices { .. }
            | Error::MissingPerturbCert => 1,
            _ => 3,
        }
    }
}

/// Failures before any pipeline runs (I/O, bad JSON).
#[derive(Debug)]
struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            msg: e.to_string(),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure {
        code: 3,
        msg: format!("{}: {e}", path.display()),
    })
}

/// Write-then-rename so readers never see a partial certificate.
fn write_atomic(path: &Path, text: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure {
        code: 3,
        msg: format!("{}: {e}", path.display()),
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(text.as_bytes()).map_err(io)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(std::fs::Permissions::from_mode(0o644))
            .map_err(io)?;
    }
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn emit(env: &Envelope, out: Option<&Path>) -> Result<(), Failure> {
    let text = env.to_pretty();
    match out {
        Some(p) => write_atomic(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// 0 when the certificate's own ledgers all pass, 1 otherwise.
fn ledger_code(env: &Envelope) -> u8 {
    if env.recorded_pass() {
        0
    } else {
        1
    }
}

fn run_one(sc: &Scenario, out: Option<&Path>) -> Result<u8, Failure> {
    let env = run_scenario(sc)?;
    emit(&env, out)?;
    let code = ledger_code(&env);
    if code != 0 {
        eprintln!("{}: recorded ledger has failing entries", sc.name);
    }
    Ok(code)
}

fn load_fixture(path: &Path) -> Result<Fixture, Failure> {
    Ok(Fixture::parse(&read(path)?)?)
}

fn pipeline_run(
    name: &str,
    pipeline: Pipeline,
    run: &RunArgs,
    tweak: impl FnOnce(&mut Scenario) -> Result<(), Failure>,
) -> Result<u8, Failure> {
    let mut sc = Scenario::new(pipeline, Some(load_fixture(&run.fixture)?), run.params());
    sc.name = name.to_string();
    tweak(&mut sc)?;
    run_one(&sc, run.out.as_deref())
}

fn verify_path(path: &Path) -> Result<u8, Failure> {
    let v = verify_text(&read(path)?)?;
    match v.ledger.first_failure() {
        None => {
            println!("{}: ok ({} checks)", path.display(), v.ledger.len());
            Ok(0)
        }
        Some(c) => {
            println!("{}: FAIL {c}", path.display());
            Ok(1)
        }
    }
}

/// Worst outcome first: invariant failures, then bad input, then model
/// limits.
fn worst(a: u8, b: u8) -> u8 {
    let rank = |c: u8| match c {
        1 => 3,
        3 => 2,
        2 => 1,
        _ => 0,
    };
    if rank(b) > rank(a) {
        b
    } else {
        a
    }
}

fn batch(paths: &[PathBuf], out_dir: &Path, jobs: usize) -> u8 {
    let next = AtomicUsize::new(0);
    let results = Mutex::new(vec![0u8; paths.len()]);
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, paths.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(path) = paths.get(i) else { break };
                let code = batch_one(path, out_dir).unwrap_or_else(|f| {
                    eprintln!("{}: error: {}", path.display(), f.msg);
                    f.code
                });
                eprintln!("{}: exit {code}", path.display());
                results.lock().expect("no panics while held")[i] = code;
            });
        }
    });
    results.into_inner().expect("threads joined").into_iter().fold(0, worst)
}

fn batch_one(path: &Path, out_dir: &Path) -> Result<u8, Failure> {
    let mut sc: Scenario = serde_json::from_str(&read(path)?).map_err(|e| Failure {
        code: 3,
        msg: format!("scenario: {e}"),
    })?;
    let stem = path
        .file_stem()
        .map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned());
    if sc.name.is_empty() {
        sc.name = stem;
    }
    let out = out_dir.join(format!("{}.json", sc.name));
    run_one(&sc, Some(&out))
}

fn dispatch(cmd: Command) -> Result<u8, Failure> {
    match cmd {
        Command::Lineability {
            ratios,
            coeffs,
            scan,
            out,
        } => {
            let mut sc = Scenario::new(
                Pipeline::Lineability,
                None,
                Params {
                    ratios: Some(ratios),
                    coeffs,
                    scan,
                    ..Params::default()
                },
            );
            sc.name = "lineability".into();
            run_one(&sc, out.as_deref())
        }
        Command::ConstructLp { run, space, p, stage } => pipeline_run("construct-lp", Pipeline::Lp, &run, |sc| {
            if let Some(SpaceArg::Lp) = space {
                let p = p.ok_or_else(|| Failure {
                    code: 3,
                    msg: "--space lp needs --p".into(),
                })?;
                let fx = sc.fixture.as_mut().expect("fixture loaded");
                fx.space = AmbientSpace::lp(p)?;
            }
            sc.params.stage = stage.map(|s| match s {
                StageArg::A => Stage::A,
                StageArg::B => Stage::B,
            });
            Ok(())
        }),
        Command::ConstructLinf { run } => pipeline_run("construct-linf", Pipeline::Linf, &run, |_| Ok(())),
        Command::Witness { run } => pipeline_run("witness", Pipeline::Witness, &run, |_| Ok(())),
        Command::Density { run, f_coeffs } => pipeline_run("density", Pipeline::Density, &run, |sc| {
            sc.params.f_coeffs = f_coeffs;
            Ok(())
        }),
        Command::Verify { paths } => {
            let mut code = 0;
            for p in &paths {
                let c = verify_path(p).unwrap_or_else(|f| {
                    println!("{}: error: {}", p.display(), f.msg);
                    f.code
                });
                code = worst(code, c);
            }
            Ok(code)
        }
        Command::Batch {
            scenarios,
            out_dir,
            jobs,
        } => Ok(batch(&scenarios, &out_dir, jobs)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
