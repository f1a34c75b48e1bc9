//! `sphbound`: command-line front end for the bound verifiers.

mod config;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use sphbound_core::lpbound::{lp_tightness_obstruction, optimize_lp};
use sphbound_core::scalar::{fmt_rational, parse_rational};
use sphbound_core::sdpcert::{
    builtin_certificate, tight_certificate, verify_full, BoundValue, CheckMode, ConditionCOptions, SdpCertificate, VerificationReport,
    VerifyOptions,
};
use sphbound_core::sdpio::{
    assemble, block_sizes_of, numeric_certificate, parse_sdpa, parse_solution, round_certificate, write_sdpa, GridSpec, RoundOptions,
    RoundingError,
};
use sphbound_core::threepoint::default_sizes;
use sphbound_core::uniqueness::{petersen_gram, uniqueness_chain};
use sphbound_core::verdict::Verdict;
use sphbound_core::Rational;

use crate::config::{pick, Config};
use crate::report::{ReportBuilder, RunReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid certificate: {0}")]
    Certificate(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("invalid SDPA input: {0}")]
    Sdpa(String),
    #[error("{0}")]
    Core(String),
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Write { path: path.to_path_buf(), source })
}

fn core<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Core(e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "sphbound", version, about = "Linear and three-point semidefinite bounds for spherical codes")]
struct Cli {
    /// JSON file with defaults for the options below; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the JSON report here instead of standard output.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct CheckArgs {
    /// Condition (c) mode: certified or sampled.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    depth_cap: Option<u32>,
    /// Grid step of the sampled mode, as a rational.
    #[arg(long)]
    sample_step: Option<String>,
    /// Worker threads (default from SPHBOUND_WORKERS, else 1).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimality and uniqueness of the ten-point code in dimension four.
    VerifyPetersen {
        /// `tight`, `builtin` or a certificate JSON file.
        #[arg(long, default_value = "tight")]
        certificate: String,
        #[command(flatten)]
        check: CheckArgs,
    },
    /// Linear programming bound with exact certification.
    LpBound {
        #[arg(long)]
        n: i64,
        #[arg(long)]
        t: String,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        grid: Option<usize>,
        /// Also show that no LP polynomial is tight for the ten-point code.
        #[arg(long)]
        obstruction: bool,
        #[arg(long)]
        max_k: Option<usize>,
    },
    /// Verifies every condition of a certificate file.
    VerifyCert {
        #[arg(long)]
        file: PathBuf,
        #[command(flatten)]
        check: CheckArgs,
    },
    /// Writes a discretised three-point instance in SDPA sparse format.
    GenSdpa {
        #[arg(long)]
        n: i64,
        #[arg(long)]
        t: String,
        #[arg(long)]
        d: usize,
        /// Comma-separated block sizes (default d+2, d+1, ..., 1).
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long)]
        grid_cube: Option<usize>,
        #[arg(long)]
        grid_segment: Option<usize>,
        #[arg(long)]
        node_denominator: Option<u64>,
        #[arg(long)]
        trial_bound: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rounds a solver solution to an exact certificate and verifies it.
    RoundCert {
        #[arg(long)]
        sdpa: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        n: i64,
        #[arg(long)]
        t: String,
        #[arg(long)]
        max_denominator: Option<u64>,
        /// Project onto the tightness conditions of the ten-point code.
        #[arg(long)]
        petersen: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        check: CheckArgs,
    },
}

fn rational_arg(name: &str, s: &str) -> Result<Rational, CliError> {
    parse_rational(s).ok_or_else(|| CliError::Argument(format!("--{name} {s:?} is not a rational")))
}

fn check_options(args: &CheckArgs, cfg: &Config) -> Result<ConditionCOptions, CliError> {
    let mut o = ConditionCOptions::default();
    let mode = pick(args.mode.clone(), cfg.mode.clone(), "certified".into());
    o.mode = mode.parse::<CheckMode>().map_err(CliError::Argument)?;
    o.depth_cap = pick(args.depth_cap, cfg.depth_cap, o.depth_cap);
    if let Some(s) = args.sample_step.clone().or(cfg.sample_step.clone()) {
        o.sample_step = rational_arg("sample-step", &s)?;
    }
    o.workers = pick(args.workers, cfg.workers, o.workers).max(1);
    Ok(o)
}

fn bound_json(b: &Option<BoundValue>) -> serde_json::Value {
    serde_json::to_value(b).expect("serialisable bound")
}

fn record_verification(r: &mut ReportBuilder, v: &VerificationReport) {
    r.verdicts(v.verdicts());
    r.value("bound", bound_json(&v.bound));
    r.value("radicand", fmt_rational(&v.radicand));
    r.value("value_at_one", fmt_rational(&v.expansion.value_at_one));
    if let Some(m) = &v.psd.max_admissible_f0 {
        r.value("max_admissible_f0", fmt_rational(m));
    }
    if v.bound_at_max_f0.is_some() {
        r.value("bound_at_max_f0", bound_json(&v.bound_at_max_f0));
    }
    r.value("condition_c_mode", v.condition_c.mode);
    r.value(
        "condition_c_zero_set",
        v.condition_c.zero_set.iter().map(|p| p.iter().map(fmt_rational).collect::<Vec<_>>()).collect::<Vec<_>>(),
    );
    r.value("condition_c_boxes", v.condition_c.boxes);
}

fn load_certificate(spec: &str, r: &mut ReportBuilder) -> Result<(SdpCertificate, bool), CliError> {
    match spec {
        "tight" => Ok((tight_certificate(), false)),
        "builtin" => Ok((builtin_certificate(), true)),
        path => {
            let text = read_file(Path::new(path))?;
            r.artifact(path, text.as_bytes());
            let cert = SdpCertificate::from_json(&text).map_err(|e| CliError::Certificate(e.to_string()))?;
            Ok((cert, false))
        }
    }
}

fn verify_petersen(certificate: &str, check: &CheckArgs, cfg: &Config) -> Result<RunReport, CliError> {
    let mut r = ReportBuilder::new("verify-petersen");
    r.input("certificate", certificate);
    let (cert, reference) = load_certificate(certificate, &mut r)?;
    let mut opts = if reference { VerifyOptions::reference() } else { VerifyOptions::default() };
    opts.condition_c = check_options(check, cfg)?;
    r.input("mode", opts.condition_c.mode);
    let t0 = Instant::now();
    let v = verify_full(&cert, &opts).map_err(core)?;
    r.timing("verify", t0);
    record_verification(&mut r, &v);
    let t1 = Instant::now();
    let u = uniqueness_chain(&cert).map_err(core)?;
    r.timing("uniqueness", t1);
    r.verdicts(u.verdicts());
    r.value("inner_products", u.inner_products.iter().map(fmt_rational).collect::<Vec<_>>());
    if let Some(a) = u.alpha.as_ref().and_then(|a| a.distribution.as_ref()) {
        r.value("alpha", a);
    }
    r.value("srg", u.srg);
    r.value("automorphisms", u.automorphisms);
    if let Some(g) = u.enumeration.as_ref().and_then(|e| e.graphs.first()) {
        r.value("graph6", g.to_graph6());
        r.value("girth", g.girth());
    }
    r.value("gram", &u.gram);
    Ok(r.finish())
}

fn lp_bound(
    n: i64,
    t: &str,
    d: usize,
    grid: Option<usize>,
    obstruction: bool,
    max_k: Option<usize>,
    cfg: &Config,
) -> Result<RunReport, CliError> {
    let mut r = ReportBuilder::new("lp-bound");
    let tq = rational_arg("t", t)?;
    let grid = pick(grid, cfg.lp_grid, 2001);
    r.input("n", n).input("t", fmt_rational(&tq)).input("d", d).input("grid", grid);
    let t0 = Instant::now();
    match optimize_lp(n, &tq, d, grid) {
        Ok(out) => {
            r.value("coefficients", out.polynomial.f.iter().map(fmt_rational).collect::<Vec<_>>());
            r.value("certification", &out.certification);
            r.value("numeric_bound", out.numeric_bound);
            match &out.report.bound {
                Some(b) if out.report.feasible => {
                    r.value("bound", fmt_rational(b));
                    r.verdict(Verdict::pass("lp", format!("bound {} certified", fmt_rational(b))));
                }
                _ => {
                    r.verdict(Verdict::fail("lp", out.report.failures.join("; "), None));
                }
            }
        }
        Err(e) => {
            r.verdict(Verdict::fail("lp", e.to_string(), None));
        }
    }
    r.timing("optimize", t0);
    if obstruction {
        let max_k = pick(max_k, cfg.max_k, 200);
        r.input("max_k", max_k);
        let o = lp_tightness_obstruction(&petersen_gram(), n, &tq, max_k).map_err(core)?;
        r.value("obstruction", &o);
        r.verdict(if o.passed {
            Verdict::pass("obstruction", format!("pair sums vanish exactly for k in {:?}", o.zero_set))
        } else {
            Verdict::fail("obstruction", "obstruction not established", None)
        });
    }
    Ok(r.finish())
}

fn verify_cert(file: &Path, check: &CheckArgs, cfg: &Config) -> Result<RunReport, CliError> {
    let mut r = ReportBuilder::new("verify-cert");
    r.input("file", file.display().to_string());
    let (cert, _) = load_certificate(&file.display().to_string(), &mut r)?;
    let opts = VerifyOptions { condition_c: check_options(check, cfg)?, ..Default::default() };
    r.input("mode", opts.condition_c.mode);
    let t0 = Instant::now();
    let v = verify_full(&cert, &opts).map_err(core)?;
    r.timing("verify", t0);
    record_verification(&mut r, &v);
    Ok(r.finish())
}

#[allow(clippy::too_many_arguments)]
fn gen_sdpa(
    n: i64,
    t: &str,
    d: usize,
    sizes: Option<Vec<usize>>,
    cube: Option<usize>,
    segment: Option<usize>,
    node_den: Option<u64>,
    trial: Option<String>,
    out: &Path,
    cfg: &Config,
) -> Result<RunReport, CliError> {
    let mut r = ReportBuilder::new("gen-sdpa");
    let tq = rational_arg("t", t)?;
    let sizes = sizes.unwrap_or_else(|| default_sizes(d));
    let defaults = GridSpec::default();
    let grid = GridSpec {
        cube: pick(cube, cfg.grid_cube, defaults.cube),
        segment: pick(segment, cfg.grid_segment, defaults.segment),
        node_denominator: pick(node_den, cfg.node_denominator, defaults.node_denominator),
        extra: Vec::new(),
    };
    let trial = rational_arg("trial-bound", &pick(trial, cfg.trial_bound.clone(), "10".into()))?;
    r.input("n", n).input("t", fmt_rational(&tq)).input("d", d).input("sizes", &sizes);
    r.input("grid_cube", grid.cube).input("grid_segment", grid.segment).input("trial_bound", fmt_rational(&trial));
    let t0 = Instant::now();
    let inst = assemble(n, &tq, d, &sizes, &grid, &trial).map_err(core)?;
    r.timing("assemble", t0);
    let text = write_sdpa(&inst.problem);
    write_file(out, &text)?;
    r.artifact(&out.display().to_string(), text.as_bytes());
    r.value("variables", inst.problem.variable_count());
    r.value("cube_points", inst.cube_points.len());
    r.value("segment_points", inst.segment_points.len());
    r.verdict(match parse_sdpa(&text) {
        Ok(p) if p == inst.problem => Verdict::pass("sdpa", "file parses back to the same problem"),
        Ok(_) => Verdict::fail("sdpa", "file parses to a different problem", None),
        Err(e) => Verdict::fail("sdpa", e.to_string(), None),
    });
    Ok(r.finish())
}

#[allow(clippy::too_many_arguments)]
fn round_cert(
    sdpa: &Path,
    solution: &Path,
    n: i64,
    t: &str,
    max_den: Option<u64>,
    petersen: bool,
    out: Option<&Path>,
    check: &CheckArgs,
    cfg: &Config,
) -> Result<RunReport, CliError> {
    let mut r = ReportBuilder::new("round-cert");
    let tq = rational_arg("t", t)?;
    let max_den = pick(max_den, cfg.max_denominator, 100_000);
    r.input("n", n).input("t", fmt_rational(&tq)).input("max_denominator", max_den).input("petersen", petersen);
    let problem_text = read_file(sdpa)?;
    let solution_text = read_file(solution)?;
    r.artifact(&sdpa.display().to_string(), problem_text.as_bytes());
    r.artifact(&solution.display().to_string(), solution_text.as_bytes());
    let problem = parse_sdpa(&problem_text).map_err(|e| CliError::Sdpa(e.to_string()))?;
    let sol = parse_solution(&solution_text, &problem).map_err(|e| CliError::Sdpa(e.to_string()))?;
    let numeric = numeric_certificate(n, &tq, &block_sizes_of(&problem), &sol.x);
    let space = if petersen { Some(sphbound_core::sdpcert::build_search_space().map_err(core)?) } else { None };
    let opts = RoundOptions {
        max_denominator: max_den,
        target: space.as_ref(),
        verify: VerifyOptions { condition_c: check_options(check, cfg)?, ..Default::default() },
    };
    let t0 = Instant::now();
    match round_certificate(&numeric, &opts) {
        Ok(rounded) => {
            r.timing("round", t0);
            record_verification(&mut r, &rounded.report);
            r.value("projected", rounded.projected);
            let json = rounded.certificate.to_json();
            if let Some(out) = out {
                write_file(out, &json)?;
                r.artifact(&out.display().to_string(), json.as_bytes());
            }
            r.value("certificate", serde_json::from_str::<serde_json::Value>(&json).expect("certificate JSON"));
        }
        Err(RoundingError::Certification { worst, report }) => {
            r.timing("round", t0);
            record_verification(&mut r, &report);
            r.value("worst_violation", worst);
        }
        Err(e) => {
            r.verdict(Verdict::fail("round", e.to_string(), None));
        }
    }
    Ok(r.finish())
}

fn run(cli: Cli) -> Result<RunReport, CliError> {
    let cfg = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::VerifyPetersen { certificate, check } => verify_petersen(&certificate, &check, &cfg),
        Command::LpBound { n, t, d, grid, obstruction, max_k } => lp_bound(n, &t, d, grid, obstruction, max_k, &cfg),
        Command::VerifyCert { file, check } => verify_cert(&file, &check, &cfg),
        Command::GenSdpa { n, t, d, sizes, grid_cube, grid_segment, node_denominator, trial_bound, out } => {
            gen_sdpa(n, &t, d, sizes, grid_cube, grid_segment, node_denominator, trial_bound, &out, &cfg)
        }
        Command::RoundCert { sdpa, solution, n, t, max_denominator, petersen, out, check } => {
            round_cert(&sdpa, &solution, n, &t, max_denominator, petersen, out.as_deref(), &check, &cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report_path = cli.report.clone();
    match run(cli) {
        Ok(report) => {
            let json = serde_json::to_string_pretty(&report).expect("serialisable report");
            match &report_path {
                Some(p) => {
                    if let Err(e) = write_file(p, &(json + "\n")) {
                        eprintln!("error: {e}");
                        return ExitCode::from(2);
                    }
                }
                None => println!("{json}"),
            }
            for v in &report.verdicts {
                eprintln!("{:?} {}: {}", v.status, v.check, v.detail);
            }
            if report.success() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
