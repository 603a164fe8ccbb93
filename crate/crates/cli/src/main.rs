use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use evatrap::cache::{ResultCache, DEFAULT_CACHE_DIR};
use evatrap::config::Simulation;
use evatrap::fields::{poynting_flux, read_fieldmap, write_fieldmap, Direction, GridAxes, NanofiberMode, NanofiberSpec};
use evatrap::optimizer::{power_scan, ScanSpec};
use evatrap::{ErrorKind, TrapOptions};

mod report;

#[derive(Parser)]
#[command(name = "evatrap", version, about = "Optical dipole trap potentials for alkali atoms near nanostructures")]
struct Cli {
    /// Print machine-readable JSON instead of tables.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the trapping potentials of a configuration and summarize each sheet.
    Simulate(SimulateArgs),
    /// Scan beam powers and report the best trap.
    Scan(ScanArgs),
    /// Solve the guided HE11 mode of a nanofiber and store it as a field map.
    SolveNanofiber(SolveArgs),
    /// Describe a stored field map.
    InspectField {
        /// Field-map directory.
        dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Csv,
}

#[derive(Args)]
struct SimulateArgs {
    /// Configuration document.
    config: PathBuf,
    /// Worker threads; 1 runs serially.
    #[arg(long)]
    threads: Option<usize>,
    /// Write plot-ready data.
    #[arg(long, value_enum)]
    export: Option<ExportFormat>,
    /// Always recompute and leave the cache untouched.
    #[arg(long)]
    no_cache: bool,
    #[arg(long, default_value = DEFAULT_CACHE_DIR)]
    cache_dir: PathBuf,
    /// Directory for the result files and exports.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    /// Configuration document.
    config: PathBuf,
    /// Scan specification.
    spec: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
    /// Directory for scan.json and objective.bin.
    #[arg(long, default_value = "scan")]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    /// Fiber radius, m.
    #[arg(long)]
    radius: f64,
    #[arg(long)]
    n_core: f64,
    #[arg(long, default_value_t = 1.0)]
    n_clad: f64,
    /// Vacuum wavelength, m.
    #[arg(long)]
    wavelength: f64,
    /// Guided power, W.
    #[arg(long, default_value_t = 1e-3)]
    power: f64,
    /// Angle of the quasi-linear polarization from x, rad.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    polarization_angle: f64,
    /// Propagation direction, +z or -z.
    #[arg(long, default_value = "+z", allow_hyphen_values = true)]
    direction: String,
    /// Grid axis as `min:max:points` or a single coordinate, m. Without any
    /// axis a grid covering the evanescent tail is chosen.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    y: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    z: Option<String>,
    /// Output field-map directory.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", message(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

/// The error chain, skipping causes already spelled out by their parent.
fn message(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if out.contains(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
    }
    out
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if let Some(err) = e.downcast_ref::<evatrap::Error>() {
        return match err.kind() {
            ErrorKind::Config => 2,
            ErrorKind::Physics => 3,
            ErrorKind::Io => 4,
        };
    }
    if e.downcast_ref::<std::io::Error>().is_some() {
        return 4;
    }
    2
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate(args) => simulate(args, cli.json),
        Command::Scan(args) => scan(args, cli.json),
        Command::SolveNanofiber(args) => solve_nanofiber(args, cli.json),
        Command::InspectField { dir } => inspect_field(&dir, cli.json),
    }
}

fn options(threads: Option<usize>) -> anyhow::Result<TrapOptions> {
    if threads == Some(0) {
        bail!(evatrap::Error::Config("--threads must be at least 1".into()));
    }
    Ok(TrapOptions {
        threads,
        ..TrapOptions::default()
    })
}

fn simulate(args: SimulateArgs, json: bool) -> anyhow::Result<()> {
    let opts = options(args.threads)?;
    let sim = Simulation::from_path(&args.config)?;
    let cache = ResultCache::new(&args.cache_dir);
    let cached = if args.no_cache { None } else { cache.lookup(sim.hash())? };
    let result = match cached {
        Some(r) => {
            eprintln!("cache hit: {}", sim.hash());
            r
        }
        None => {
            log::info!("computing {} grid points", sim.config.axes().len());
            let r = sim.run(opts)?;
            if !args.no_cache {
                cache.store(&r)?;
            }
            r
        }
    };
    if let Some(out) = &args.out {
        result.save(out)?;
    }
    if let Some(ExportFormat::Csv) = args.export {
        let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
        let path = dir.join("potential.csv");
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        report::write_csv(&result, &path)?;
        eprintln!("wrote {}", path.display());
    }
    let summary = report::Summary::new(&sim, &result)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&summary.to_json())?);
    } else {
        print!("{}", summary.table());
    }
    Ok(())
}

fn scan(args: ScanArgs, json: bool) -> anyhow::Result<()> {
    let opts = options(args.threads)?;
    let sim = Simulation::from_path(&args.config)?;
    let spec = ScanSpec::load(&args.spec)?;
    let model = sim.model(opts)?;
    let result = power_scan(&sim, &model, &spec)?;
    result.save(&args.out)?;
    let names: Vec<&str> = spec.parameters.iter().map(|p| sim.sliders[p.slider].name.as_str()).collect();
    if json {
        let argmax = result.argmax.as_ref().map(|a| {
            json!({
                "indices": a.indices,
                "powers_W": a.powers_w,
                "value": a.value,
                "properties": a.properties,
            })
        });
        let doc = json!({
            "out": args.out,
            "shape": result.shape(),
            "sliders": names,
            "unit": spec.objective.unit(),
            "argmax": argmax,
        });
        println!("{}", serde_json::to_string_pretty(&doc)?);
        return Ok(());
    }
    let shape: Vec<String> = result.shape().iter().map(|n| n.to_string()).collect();
    println!(
        "map: {} ({}, {})",
        args.out.join("objective.bin").display(),
        shape.join(" x "),
        spec.objective.unit()
    );
    match &result.argmax {
        Some(best) => {
            let powers: Vec<String> = names
                .iter()
                .zip(&best.powers_w)
                .map(|(n, p)| format!("{n} = {}", report::milliwatts(*p)))
                .collect();
            println!("optimum: {} {} at {}", report::sig(best.value), spec.objective.unit(), powers.join(", "));
        }
        None => println!("no stable trap in range"),
    }
    Ok(())
}

fn parse_axis(spec: Option<&str>) -> anyhow::Result<Vec<f64>> {
    let Some(s) = spec else { return Ok(vec![0.0]) };
    let invalid = || evatrap::Error::Config(format!("axis '{s}' is neither min:max:points nor a number"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [v] => Ok(vec![v.trim().parse().map_err(|_| invalid())?]),
        [min, max, n] => {
            let min: f64 = min.trim().parse().map_err(|_| invalid())?;
            let max: f64 = max.trim().parse().map_err(|_| invalid())?;
            let n: usize = n.trim().parse().map_err(|_| invalid())?;
            if n == 0 || !(max >= min) {
                bail!(invalid());
            }
            Ok(GridAxes::linspace(min, max, n))
        }
        _ => bail!(invalid()),
    }
}

fn solve_nanofiber(args: SolveArgs, json: bool) -> anyhow::Result<()> {
    let direction: Direction = serde_json::from_value(json!(args.direction))
        .map_err(|_| evatrap::Error::Config(format!("direction '{}' is not +z or -z", args.direction)))?;
    let spec = NanofiberSpec {
        radius: args.radius,
        n_core: args.n_core,
        n_clad: args.n_clad,
        wavelength: args.wavelength,
        polarization_angle: args.polarization_angle,
        direction,
        power: args.power,
    };
    let mode = NanofiberMode::solve(spec)?;
    let grid = if args.x.is_none() && args.y.is_none() && args.z.is_none() {
        mode.default_grid()
    } else {
        GridAxes::new(
            parse_axis(args.x.as_deref())?,
            parse_axis(args.y.as_deref())?,
            parse_axis(args.z.as_deref())?,
        )?
    };
    let map = mode.sample(&grid)?;
    write_fieldmap(&map, &args.out)?;
    let flux = poynting_flux(&map).ok();
    let shape = map.axes.shape();
    if json {
        let doc = json!({
            "out": args.out,
            "beta_per_m": mode.beta,
            "effective_index": mode.effective_index(),
            "v_parameter": spec.v_parameter(),
            "decay_length_m": mode.decay_length(),
            "shape": shape,
            "flux_W": flux,
        });
        println!("{}", serde_json::to_string_pretty(&doc)?);
        return Ok(());
    }
    println!("field map        {}", args.out.display());
    println!("grid             {} x {} x {}", shape[0], shape[1], shape[2]);
    println!("V parameter      {:.4}", spec.v_parameter());
    println!("effective index  {:.6}", mode.effective_index());
    println!("beta             {:.6e} 1/m", mode.beta);
    println!("decay length     {:.1} nm", mode.decay_length() * 1e9);
    if let Some(f) = flux {
        println!("sampled flux     {}", report::milliwatts(f));
    }
    Ok(())
}

fn inspect_field(dir: &Path, json: bool) -> anyhow::Result<()> {
    let map = read_fieldmap(dir)?;
    let shape = map.axes.shape();
    let peak = map
        .values()
        .iter()
        .map(|e| e.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let flux = poynting_flux(&map).ok();
    let range = |v: &[f64]| (v[0], v[v.len() - 1]);
    if json {
        let doc = json!({
            "dir": dir,
            "wavelength_m": map.wavelength,
            "p_ref_W": map.p_ref,
            "direction": map.direction,
            "shape": shape,
            "x_m": range(&map.axes.x),
            "y_m": range(&map.axes.y),
            "z_m": range(&map.axes.z),
            "translation_invariant": map.translation_invariant,
            "propagation_constant_per_m": map.propagation_constant,
            "peak_field_V_per_m": peak,
            "flux_W": flux,
        });
        println!("{}", serde_json::to_string_pretty(&doc)?);
        return Ok(());
    }
    println!("field map        {}", dir.display());
    println!("wavelength       {:.3} nm", map.wavelength * 1e9);
    println!("reference power  {}", report::milliwatts(map.p_ref));
    println!("direction        {}", map.direction);
    println!("grid             {} x {} x {} ({} points)", shape[0], shape[1], shape[2], map.axes.len());
    for (name, v) in [("x", &map.axes.x), ("y", &map.axes.y), ("z", &map.axes.z)] {
        let (a, b) = range(v);
        println!("  {name}              {:.1} .. {:.1} nm", a * 1e9, b * 1e9);
    }
    if map.translation_invariant {
        match map.propagation_constant {
            Some(beta) => println!("invariant along the propagation axis, beta = {beta:.6e} 1/m"),
            None => println!("invariant along the propagation axis"),
        }
    }
    println!("peak |E+|        {peak:.4e} V/m");
    if let Some(f) = flux {
        println!("flux             {}", report::milliwatts(f));
    }
    Ok(())
}
