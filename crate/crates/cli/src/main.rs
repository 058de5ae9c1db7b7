//! `geopriv` command-line tool.

mod config;

use std::fs;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use geopriv::dataset::{empirical_prior, load_checkins, split_users, CellPrior, PriorSidecar, Region, SplitSpec};
use geopriv::experiments::{
    crossovers, emit, gowalla_remap_experiment, run_decision_experiment, to_csv, to_json, tradeoff_table,
    write_atomic, DecisionExperimentConfig, Format, GowallaConfig, RunManifest,
};
use geopriv::mechanisms::{MechanismSpec, RemapSpec};
use geopriv::metrics::{epsilon_for_perr_min, tightest_epsilon, tightest_epsilon_witness};
use geopriv::{DiscreteMechanism, Family, MechanismParams, PlanarPoint, RandomStream, RemappedMechanism};

const GOWALLA_FILE: &str = "loc-gowalla_totalCheckins.txt";

#[derive(Debug, Parser, Serialize)]
#[command(name = "geopriv", version, about = "Location obfuscation with geo-indistinguishability")]
#[command(args_override_self = true)]
struct Cli {
    /// Caps the number of worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON file whose keys are flag names of the chosen subcommand.
    /// Flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
enum Command {
    /// Mechanism parameters for a target average loss.
    Calibrate(CalibrateArgs),
    /// Obfuscates a location.
    Sample(SampleArgs),
    /// Privacy/utility table of the planar Laplace mechanism.
    Tradeoff(TradeoffArgs),
    #[command(subcommand)]
    Experiment(ExperimentCommand),
    /// Audits a discrete mechanism.
    Verify(VerifyArgs),
    #[command(subcommand)]
    Prior(PriorCommand),
}

#[derive(Debug, Subcommand, Serialize)]
enum ExperimentCommand {
    /// Two-point decision adversary against the noise families.
    Decision(DecisionArgs),
    /// Remapped against plain Laplace on Gowalla check-ins.
    Gowalla(GowallaArgs),
}

#[derive(Debug, Subcommand, Serialize)]
enum PriorCommand {
    /// Builds a cell prior from training-user check-ins.
    Build(PriorBuildArgs),
}

#[derive(Debug, Args, Serialize)]
struct CalibrateArgs {
    #[arg(long)]
    family: Family,
    #[arg(long)]
    qavg_m: f64,
    /// Writes the mechanism JSON here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SampleArgs {
    /// Mechanism JSON, as printed by `calibrate`.
    #[arg(long, conflicts_with_all = ["family", "scale", "qavg_m"])]
    mechanism: Option<PathBuf>,
    #[arg(long, required_unless_present = "mechanism")]
    family: Option<Family>,
    /// ε in km⁻¹ for Laplace, meters otherwise.
    #[arg(long, conflicts_with = "qavg_m")]
    scale: Option<f64>,
    #[arg(long)]
    qavg_m: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x_m: f64,
    #[arg(long, allow_hyphen_values = true)]
    y_m: f64,
    #[arg(long, default_value_t = 1)]
    n: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct TradeoffArgs {
    #[arg(long, value_delimiter = ',')]
    epsilons_inv_km: Vec<f64>,
    /// Adds the ε giving each of these error floors at r*.
    #[arg(long, value_delimiter = ',')]
    perr_mins: Vec<f64>,
    #[arg(long)]
    r_star_m: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    format: Option<Format>,
}

#[derive(Debug, Args, Serialize)]
struct DecisionArgs {
    #[arg(long, value_delimiter = ',', default_value = "laplace,gaussian,circular")]
    families: Vec<Family>,
    #[arg(long, value_delimiter = ',', required = true)]
    d_m: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    qavg_m: Vec<f64>,
    #[arg(long, default_value_t = 20_000)]
    trials: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    format: Option<Format>,
    /// Also writes every trial to this CSV.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Also writes crossover distances to this JSON file.
    #[arg(long)]
    crossovers: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct DatasetArgs {
    /// Check-in file, or a directory holding it. Defaults to `$GEOPRIV_DATA`.
    #[arg(long, env = "GEOPRIV_DATA")]
    data: Option<PathBuf>,
    /// min_lat,max_lat,min_lon,max_lon. Defaults to San Francisco.
    #[arg(long, value_delimiter = ',', num_args = 4, allow_hyphen_values = true)]
    region: Vec<f64>,
    #[arg(long, default_value_t = 100.0)]
    cell_m: f64,
    #[arg(long, default_value_t = 0.0)]
    smoothing: f64,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
struct GowallaArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    #[arg(long, value_delimiter = ',', default_value = "6.67,4,2,1")]
    epsilons_inv_km: Vec<f64>,
    #[arg(long, default_value_t = 20_000)]
    n_checkins: usize,
    #[arg(long, default_value_t = 1e-3)]
    tolerance_m: f64,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    format: Option<Format>,
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    #[arg(long)]
    mechanism_csv: PathBuf,
    /// Also checks the mechanism against this ε.
    #[arg(long)]
    epsilon_inv_km: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct PriorBuildArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    /// Prior CSV; the grid sidecar goes to `<out>.grid.json`.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match config::expand(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Calibrate(a) => calibrate(cli, a),
        Command::Sample(a) => sample(cli, a),
        Command::Tradeoff(a) => tradeoff(cli, a),
        Command::Experiment(ExperimentCommand::Decision(a)) => decision(cli, a),
        Command::Experiment(ExperimentCommand::Gowalla(a)) => gowalla(cli, a),
        Command::Verify(a) => verify(a),
        Command::Prior(PriorCommand::Build(a)) => prior_build(cli, a),
    }
}

fn manifest(cli: &Cli, name: &str, seed: Option<u64>) -> Result<RunManifest> {
    Ok(RunManifest::new(name, serde_json::to_value(&cli.command)?, seed))
}

fn finish(mut m: RunManifest, outputs: &[&Path]) -> Result<()> {
    m.outputs = outputs.iter().map(|p| p.display().to_string()).collect();
    m.write(&RunManifest::path_for(outputs[0]))?;
    Ok(())
}

fn format_for(explicit: Option<Format>, path: &Path) -> Format {
    explicit.unwrap_or_else(|| Format::from_path(path))
}

fn calibrate(cli: &Cli, a: &CalibrateArgs) -> Result<()> {
    let params = MechanismParams::calibrate_to_qavg(a.family, a.qavg_m)?;
    let spec = MechanismSpec::from_params(&params);
    let mut text = serde_json::to_string(&spec)?;
    text.push('\n');
    eprintln!(
        "{}: average loss {} m, 95% radius {} m",
        a.family,
        params.analytic_qavg(),
        params.analytic_r95()
    );
    match &a.out {
        None => print!("{text}"),
        Some(out) => {
            write_atomic(out, text.as_bytes())?;
            finish(manifest(cli, "calibrate", None)?, &[out])?;
        }
    }
    Ok(())
}

fn read_prior(path: &Path) -> Result<CellPrior> {
    let sidecar: PriorSidecar = serde_json::from_str(
        &fs::read_to_string(sidecar_path(path)).with_context(|| format!("reading sidecar of {}", path.display()))?,
    )?;
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(CellPrior::read_csv(BufReader::new(f), &sidecar)?)
}

fn sidecar_path(prior: &Path) -> PathBuf {
    let mut s = prior.as_os_str().to_owned();
    s.push(".grid.json");
    s.into()
}

fn sample(cli: &Cli, a: &SampleArgs) -> Result<()> {
    let (params, remap) = match &a.mechanism {
        Some(path) => {
            let spec: MechanismSpec = serde_json::from_str(
                &fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
            )?;
            (spec.params()?, spec.remap)
        }
        None => {
            let family = a.family.ok_or_else(|| anyhow!("--family is required"))?;
            let params = match (a.scale, a.qavg_m) {
                (Some(s), None) => MechanismSpec {
                    family,
                    scale_m_or_inv_km: s,
                    remap: None,
                }
                .params()?,
                (None, Some(q)) => MechanismParams::calibrate_to_qavg(family, q)?,
                _ => bail!("give exactly one of --scale and --qavg-m"),
            };
            (params, None)
        }
    };
    let remapped = remap.map(|r: RemapSpec| -> Result<RemappedMechanism> {
        let prior = read_prior(Path::new(&r.prior_path))?;
        let options = geopriv::WeiszfeldOptions {
            tolerance: r.tolerance_m,
            max_iters: r.max_iters,
        };
        Ok(RemappedMechanism::new(params, r.grid, prior.pmf, options)?)
    });
    let remapped = remapped.transpose()?;
    let x = PlanarPoint::new(a.x_m, a.y_m);
    let mut text = String::from("index,z_x_m,z_y_m\n");
    for i in 0..a.n {
        let mut rnd = RandomStream::new(a.seed, i);
        let z = match &remapped {
            Some(m) => m.sample(&x, &mut rnd),
            None => params.sample(&x, &mut rnd),
        };
        text.push_str(&format!("{i},{},{}\n", z.x, z.y));
    }
    match &a.out {
        None => print!("{text}"),
        Some(out) => {
            write_atomic(out, text.as_bytes())?;
            finish(manifest(cli, "sample", Some(a.seed))?, &[out])?;
        }
    }
    Ok(())
}

fn tradeoff(cli: &Cli, a: &TradeoffArgs) -> Result<()> {
    let mut eps = a.epsilons_inv_km.clone();
    for &p in &a.perr_mins {
        eps.push(epsilon_for_perr_min(p, a.r_star_m)? * 1000.0);
    }
    if eps.is_empty() {
        bail!("give --epsilons-inv-km or --perr-mins");
    }
    let rows = tradeoff_table(&eps, a.r_star_m)?;
    emit(&rows, &a.out, format_for(a.format, &a.out))?;
    finish(manifest(cli, "tradeoff", None)?, &[&a.out])
}

fn decision(cli: &Cli, a: &DecisionArgs) -> Result<()> {
    let cfg = DecisionExperimentConfig {
        distances_m: a.d_m.clone(),
        qavgs_m: a.qavg_m.clone(),
        families: a.families.clone(),
        trials: a.trials,
        seed: a.seed,
        bins: a.bins,
        keep_records: a.records.is_some(),
    };
    let result = run_decision_experiment(&cfg)?;
    emit(&result.rows, &a.out, format_for(a.format, &a.out))?;
    let mut outputs: Vec<&Path> = vec![&a.out];
    if let Some(path) = &a.records {
        write_atomic(path, to_csv(&result.records).as_bytes())?;
        outputs.push(path);
    }
    if let Some(path) = &a.crossovers {
        write_atomic(path, to_json(&crossovers(&result.rows))?.as_bytes())?;
        outputs.push(path);
    }
    finish(manifest(cli, "experiment decision", Some(a.seed))?, &outputs)
}

fn dataset_path(a: &DatasetArgs) -> Result<PathBuf> {
    let p = a
        .data
        .clone()
        .ok_or_else(|| anyhow!("no dataset: pass --data or set GEOPRIV_DATA"))?;
    Ok(if p.is_dir() { p.join(GOWALLA_FILE) } else { p })
}

fn region(a: &DatasetArgs) -> Result<Region> {
    match a.region.as_slice() {
        [] => Ok(Region::default()),
        &[a, b, c, d] => Ok(Region::new(a, b, c, d)?),
        _ => bail!("--region takes min_lat,max_lat,min_lon,max_lon"),
    }
}

fn sha256_file(path: &Path) -> Result<String> {
    let mut f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

fn load(a: &DatasetArgs) -> Result<(PathBuf, Region, Vec<geopriv::dataset::Checkin>)> {
    let path = dataset_path(a)?;
    let region = region(a)?;
    let report = load_checkins(&path, &region).with_context(|| format!("loading {}", path.display()))?;
    eprintln!(
        "{}: {} lines parsed, {} malformed, {} outside region, {} kept",
        path.display(),
        report.parsed,
        report.malformed,
        report.outside_region,
        report.checkins.len()
    );
    Ok((path, region, report.checkins))
}

fn gowalla(cli: &Cli, a: &GowallaArgs) -> Result<()> {
    let (path, region, checkins) = load(&a.dataset)?;
    let cfg = GowallaConfig {
        region,
        cell_size_m: a.dataset.cell_m,
        smoothing: a.dataset.smoothing,
        train_fraction: a.dataset.train_fraction,
        epsilons_inv_km: a.epsilons_inv_km.clone(),
        n_checkins: a.n_checkins,
        seed: a.dataset.seed,
        tolerance_m: a.tolerance_m,
        max_iters: a.max_iters,
    };
    let report = gowalla_remap_experiment(&checkins, &cfg)?;
    eprintln!(
        "{} train / {} test users, {} prior cells, {} check-ins obfuscated",
        report.train_users, report.test_users, report.prior_cells, report.sampled
    );
    emit(&report.rows, &a.out, format_for(a.format, &a.out))?;
    let mut m = manifest(cli, "experiment gowalla", Some(a.dataset.seed))?;
    m.dataset_digest = Some(sha256_file(&path)?);
    finish(m, &[&a.out])
}

fn verify(a: &VerifyArgs) -> Result<()> {
    let f = fs::File::open(&a.mechanism_csv).with_context(|| format!("opening {}", a.mechanism_csv.display()))?;
    let mech = DiscreteMechanism::read_csv(BufReader::new(f))?;
    let eps = tightest_epsilon(&mech)?;
    println!("inputs: {}", mech.inputs().len());
    println!("outputs: {}", mech.outputs().len());
    println!("tightest_epsilon_inv_km: {}", eps * 1000.0);
    match tightest_epsilon_witness(&mech)? {
        None => println!("witness: none (all rows identical)"),
        Some(w) => {
            let (xa, xb) = (mech.inputs()[w.input_a], mech.inputs()[w.input_b]);
            let z = mech.outputs()[w.output];
            println!(
                "witness: inputs ({}, {}) and ({}, {}) at {} m, output ({}, {}), |log ratio| {}",
                xa.x, xa.y, xb.x, xb.y, w.distance, z.x, z.y, w.log_ratio
            );
        }
    }
    if let Some(e) = a.epsilon_inv_km {
        let ok = geopriv::metrics::satisfies_geo_ind(&mech, e / 1000.0)?;
        println!("satisfies_epsilon_{e}_inv_km: {ok}");
    }
    Ok(())
}

fn prior_build(cli: &Cli, a: &PriorBuildArgs) -> Result<()> {
    let (path, region, checkins) = load(&a.dataset)?;
    let split = split_users(
        &checkins,
        &SplitSpec {
            train_fraction: a.dataset.train_fraction,
            seed: a.dataset.seed,
        },
    )?;
    let proj = region.projection();
    let grid = region.grid(&proj, a.dataset.cell_m)?;
    let prior = empirical_prior(&split.train, &grid, &proj, a.dataset.smoothing)?;
    eprintln!(
        "{} training check-ins in {} of {} cells ({} outside the grid)",
        prior.in_grid,
        prior.pmf.positive().count(),
        grid.cells(),
        prior.out_of_grid
    );
    let mut csv = Vec::new();
    prior.write_csv(&mut csv)?;
    write_atomic(&a.out, &csv)?;
    let sidecar = sidecar_path(&a.out);
    write_atomic(&sidecar, to_json(&prior.sidecar())?.as_bytes())?;
    let mut m = manifest(cli, "prior build", Some(a.dataset.seed))?;
    m.dataset_digest = Some(sha256_file(&path)?);
    finish(m, &[&a.out, &sidecar])
}
