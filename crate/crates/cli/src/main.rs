use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{ArgAction, Args, Parser, Subcommand};
use serde::Serialize;

use magic_simplex::classify::{classify_batch, write_records, ClassificationRecord, ClassifyConfig, Resources};
use magic_simplex::detectors::standard_mubs;
use magic_simplex::hull::{extend_vertices, ExtendConfig, SeparableVertexSet};
use magic_simplex::io;
use magic_simplex::resources::{build_resources, ResourcePlan};
use magic_simplex::state::{read_state_records, BellDiagonalState};
use magic_simplex::symmetry::SymmetryGroup;
use magic_simplex::volume::{
    conjecture_probe, detector_overlap, estimate_volumes, export_scatter, export_scatter_states,
    sample_enclosure_corpus, write_probe,
};
use magic_simplex::witness::{WitnessBank, WitnessConfig};

const EXIT_INTERNAL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RESOURCE: u8 = 3;

/// Entanglement classification experiments on Bell-diagonal qudit states.
#[derive(Parser, Debug)]
#[command(name = "magic-simplex", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "MAGIC_SIMPLEX_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum Command {
    /// Estimate the enclosure-polytope and PPT volume shares of the simplex.
    Volumes(VolumesArgs),
    /// Classify sampled or given states.
    Classify(ClassifyArgs),
    /// Generate a bank of certified entanglement witnesses.
    Forge(ForgeArgs),
    /// Grow a separable vertex set by certified extension.
    Extend(ExtendArgs),
    /// Export scatter coordinates or concentration statistics as CSV.
    Export(ExportArgs),
}

#[derive(Args, Debug, Serialize)]
struct VolumesArgs {
    #[arg(long, value_parser = parse_dim)]
    d: usize,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ClassifyArgs {
    /// Required unless --in is given.
    #[arg(long, value_parser = parse_dim)]
    d: Option<usize>,
    /// Number of uniform samples of the enclosure polytope.
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    n: Option<usize>,
    /// State file (JSON lines with `d`, `c` and optional `id`).
    #[arg(long = "in", id = "input")]
    input: Option<PathBuf>,
    #[arg(long)]
    witness_bank: Option<PathBuf>,
    #[arg(long)]
    vertices: Option<PathBuf>,
    /// Build or load default resources in this directory for whatever
    /// --witness-bank and --vertices leave unset.
    #[arg(long)]
    resources: Option<PathBuf>,
    /// Seed of the default resources.
    #[arg(long, default_value_t = 1)]
    resource_seed: u64,
    #[arg(long, action = ArgAction::Set, default_value_t = true)]
    orbit: bool,
    #[arg(long, action = ArgAction::Set, default_value_t = true)]
    full_evidence: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Records (JSON lines).
    #[arg(long)]
    out: PathBuf,
    /// Summary JSON; defaults to `<out>.summary.json`.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Also write the pairwise detector overlap of BOUND records.
    #[arg(long)]
    overlap: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ForgeArgs {
    #[arg(long, value_parser = parse_dim)]
    d: usize,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ExtendArgs {
    #[arg(long, value_parser = parse_dim)]
    d: Option<usize>,
    /// Starting vertex file; the kernel vertices when absent.
    #[arg(long)]
    vertices: Option<PathBuf>,
    #[arg(long)]
    budget: usize,
    #[arg(long)]
    close_extensions: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ExportArgs {
    /// Classification records or a plain state file.
    #[arg(long = "in")]
    input: PathBuf,
    /// Four distinct flat indices `k*d + l`: x, y, z and color.
    #[arg(long, value_delimiter = ',', required_unless_present = "probe")]
    coords: Vec<usize>,
    /// Write per-state concentration statistics instead of scatter data.
    #[arg(long)]
    probe: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, err: anyhow!(msg.into()) }
    }

    fn resource(msg: impl Into<String>) -> Self {
        Self { code: EXIT_RESOURCE, err: anyhow!(msg.into()) }
    }
}

impl From<magic_simplex::Error> for Failure {
    fn from(e: magic_simplex::Error) -> Self {
        use magic_simplex::Error as E;
        let code = match e {
            E::Resource { .. } | E::Io(_) | E::Json(_) | E::Csv(_) => EXIT_RESOURCE,
            E::InvalidDimension(_) | E::InvalidArgument(_) => EXIT_USAGE,
            _ => EXIT_INTERNAL,
        };
        Self { code, err: e.into() }
    }
}

type CliResult<T> = Result<T, Failure>;

/// Errors while assembling inputs from files are resource errors whatever
/// their kind.
fn as_resource<T>(r: magic_simplex::Result<T>) -> CliResult<T> {
    r.map_err(|e| Failure { code: EXIT_RESOURCE, err: e.into() })
}

fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// `<out>.meta.json` with the command, its arguments and their fingerprint.
fn write_meta(cmd: &Command, out: &Path) -> CliResult<()> {
    #[derive(Serialize)]
    struct Meta<'a> {
        command: &'a Command,
        config: String,
        version: &'static str,
    }
    let meta = Meta { command: cmd, config: io::fingerprint(cmd), version: env!("CARGO_PKG_VERSION") };
    Ok(io::write_json(&sidecar(out, ".meta.json"), &meta)?)
}

fn parse_dim(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(d) if d >= 2 => Ok(d),
        Ok(d) => Err(format!("dimension must be at least 2, got {d}")),
        Err(e) => Err(e.to_string()),
    }
}

fn cmd_volumes(a: &VolumesArgs) -> CliResult<()> {
    let report = estimate_volumes(a.d, a.n, a.seed)?;
    log::info!("volumes d={} n={} in {:?}", a.d, a.n, report.wall_time);
    io::write_json(&a.out, &report)?;
    Ok(())
}

fn load_states(path: &Path, d: Option<usize>) -> CliResult<(usize, Vec<BellDiagonalState>, Vec<String>)> {
    let recs = as_resource(read_state_records(path))?;
    let first = recs.first().ok_or_else(|| Failure::resource(format!("{}: no states", path.display())))?;
    let d = d.unwrap_or(first.d);
    if let Some((n, r)) = recs.iter().enumerate().find(|(_, r)| r.d != d) {
        return Err(Failure::resource(format!(
            "{}: line {} has d={}, expected d={d}",
            path.display(),
            n + 1,
            r.d
        )));
    }
    let mut states = Vec::with_capacity(recs.len());
    let mut ids = Vec::with_capacity(recs.len());
    for (n, r) in recs.into_iter().enumerate() {
        states.push(as_resource(r.to_state())?);
        ids.push(r.id.unwrap_or_else(|| n.to_string()));
    }
    Ok((d, states, ids))
}

fn classify_resources(a: &ClassifyArgs, d: usize) -> CliResult<Resources> {
    let defaults = match &a.resources {
        Some(dir) if a.vertices.is_none() || a.witness_bank.is_none() => {
            let plan = ResourcePlan::new(d, a.resource_seed)?;
            Some(build_resources(&plan, Some(dir))?)
        }
        _ => None,
    };
    let vertices = match &a.vertices {
        Some(p) => Some(as_resource(SeparableVertexSet::load(p))?),
        None => match &defaults {
            Some(r) => r.vertices.clone(),
            None => Some(SeparableVertexSet::kernel(d)?),
        },
    };
    let bank = match &a.witness_bank {
        Some(p) => Some(as_resource(WitnessBank::load(p))?),
        None => defaults.as_ref().and_then(|r| r.bank.clone()),
    };
    let group = match defaults {
        Some(r) => r.group,
        None => SymmetryGroup::generate(d)?,
    };
    let mubs = if matches!(d, 3 | 4) { Some(standard_mubs(d)?) } else { None };
    as_resource(Resources::new(group, mubs, vertices, bank))
}

fn cmd_classify(a: &ClassifyArgs) -> CliResult<()> {
    let (d, states, ids) = match (&a.input, a.n) {
        (Some(p), _) => load_states(p, a.d)?,
        (None, Some(n)) => {
            let d = a.d.ok_or_else(|| Failure::usage("--d is required with --n"))?;
            (d, sample_enclosure_corpus(d, n, a.seed)?, (0..n).map(|i| i.to_string()).collect())
        }
        (None, None) => return Err(Failure::usage("either --n or --in is required")),
    };
    let res = classify_resources(a, d)?;
    let cfg = ClassifyConfig { use_orbit: a.orbit, full_evidence: a.full_evidence, ..Default::default() };
    let (records, summary) = classify_batch(&states, Some(&ids), &res, &cfg)?;
    write_records(&a.out, &records)?;
    let summary_path = a.summary.clone().unwrap_or_else(|| sidecar(&a.out, ".summary.json"));
    io::write_json(&summary_path, &summary)?;
    if let Some(p) = &a.overlap {
        #[derive(Serialize)]
        struct Overlap<'a> {
            config: &'a str,
            #[serde(flatten)]
            matrix: magic_simplex::volume::OverlapMatrix,
        }
        io::write_json(p, &Overlap { config: &summary.config, matrix: detector_overlap(&records) })?;
    }
    Ok(())
}

fn cmd_forge(a: &ForgeArgs) -> CliResult<()> {
    let bank = WitnessBank::forge(a.d, a.count, a.seed, &WitnessConfig::default())?;
    bank.save(&a.out)?;
    Ok(())
}

fn cmd_extend(a: &ExtendArgs) -> CliResult<()> {
    let vs = match (&a.vertices, a.d) {
        (Some(p), d) => {
            let vs = as_resource(SeparableVertexSet::load(p))?;
            if let Some(d) = d {
                if d != vs.d() {
                    return Err(Failure::resource(format!("{} holds d={}, expected d={d}", p.display(), vs.d())));
                }
            }
            vs
        }
        (None, Some(d)) => SeparableVertexSet::kernel(d)?,
        (None, None) => return Err(Failure::usage("either --d or --vertices is required")),
    };
    let group = SymmetryGroup::generate(vs.d())?;
    let cfg = ExtendConfig { close_extensions: a.close_extensions, ..Default::default() };
    let mut r = magic_simplex::rng::stream(a.seed, &[vs.d() as u64]);
    let out = extend_vertices(&vs, &group, &mut r, a.budget, &cfg)?;
    log::info!("{} -> {} vertices", vs.len(), out.len());
    out.save(&a.out)?;
    Ok(())
}

fn cmd_export(a: &ExportArgs) -> CliResult<()> {
    match io::read_jsonl::<ClassificationRecord>(&a.input) {
        Ok(records) => {
            if a.probe {
                write_probe(&a.out, &as_resource(conjecture_probe(&records))?)?;
                return Ok(());
            }
            let d = match records.first() {
                Some(r) => r.d,
                None => return Err(Failure::resource(format!("{}: no records", a.input.display()))),
            };
            if records.iter().any(|r| r.d != d) {
                return Err(Failure::resource(format!("{}: records of mixed dimension", a.input.display())));
            }
            export_scatter(d, &records, &coords(&a.coords)?, &a.out)?;
        }
        Err(_) => {
            if a.probe {
                return Err(Failure::resource(format!(
                    "{}: the probe needs classification records",
                    a.input.display()
                )));
            }
            let (d, states, _) = load_states(&a.input, None)?;
            export_scatter_states(d, &states, &coords(&a.coords)?, &a.out)?;
        }
    }
    Ok(())
}

fn coords(v: &[usize]) -> CliResult<[usize; 4]> {
    v.try_into().map_err(|_| Failure::usage("--coords takes exactly four indices"))
}

fn output_of(cmd: &Command) -> &Path {
    match cmd {
        Command::Volumes(a) => &a.out,
        Command::Classify(a) => &a.out,
        Command::Forge(a) => &a.out,
        Command::Extend(a) => &a.out,
        Command::Export(a) => &a.out,
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure { code: EXIT_INTERNAL, err: e.into() })?;
    }
    match &cli.cmd {
        Command::Volumes(a) => cmd_volumes(a)?,
        Command::Classify(a) => cmd_classify(a)?,
        Command::Forge(a) => cmd_forge(a)?,
        Command::Extend(a) => cmd_extend(a)?,
        Command::Export(a) => cmd_export(a)?,
    }
    write_meta(&cli.cmd, output_of(&cli.cmd))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}
