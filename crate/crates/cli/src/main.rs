use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use uavsec_core::detectloc::{read_measurements_csv, rss_localize, SearchBounds};
use uavsec_core::engine::BUNDLED_SCENARIOS;
use uavsec_core::{
    emit, load_scenario, run_with_threads, sweep, ChannelParams, FadingMode, OutputFormat,
    Position3D, ScenarioConfig, SimError,
};

#[derive(Parser)]
#[command(name = "uavsec", version, about = "UAV-assisted cellular security link-level simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fading {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its per-step records and summary.
    Simulate {
        /// Scenario file, or the name of a bundled scenario.
        #[arg(long)]
        scenario: String,
        /// Overrides the scenario's master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long, value_enum)]
        fading: Option<Fading>,
        /// Worker threads for per-link sampling (0 = one per core).
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Estimate a transmitter position from RSS measurements and print it
    /// as JSON.
    Localize {
        /// CSV with header x,y,z,rss_dbm.
        #[arg(long)]
        input: PathBuf,
        /// x0,y0,z0,x1,y1,z1
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        bounds: Vec<f64>,
        /// Takes channel parameters from this scenario instead of the defaults.
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Run one variant per value of a numeric config field and print a
    /// CSV table of the summaries.
    Sweep {
        #[arg(long)]
        scenario: String,
        /// Dotted path into the scenario, e.g. nodes.relay.mobility.offset.z
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        values: Vec<f64>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn scenario(source: &str) -> Result<ScenarioConfig> {
    let path = Path::new(source);
    if !path.exists() && BUNDLED_SCENARIOS.contains(&source) {
        return Ok(ScenarioConfig::bundled(source)?);
    }
    Ok(load_scenario(path)?)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| SimError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

fn simulate(
    source: &str,
    seed: Option<u64>,
    out: &Path,
    format: Format,
    fading: Option<Fading>,
    threads: usize,
) -> Result<()> {
    let mut cfg = scenario(source)?;
    if let Some(seed) = seed {
        cfg.master_seed = seed;
    }
    match fading {
        Some(Fading::Off) => cfg.fading = FadingMode::Off,
        Some(Fading::On) => cfg.fading = FadingMode::On,
        None => {}
    }
    let output = run_with_threads(&cfg, threads)?;
    let format = match format {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    emit(&output, &cfg.outputs, format, out)?;
    write(&out.join("effective_config.json"), &cfg.to_json_pretty())?;
    eprintln!(
        "{}: {} steps, seed {}, digest {}",
        cfg.name, output.summary.steps, cfg.master_seed, output.summary.config_digest
    );
    Ok(())
}

fn localize(input: &Path, bounds: &[f64], source: Option<&str>) -> Result<()> {
    let params = match source {
        Some(s) => scenario(s)?.channel,
        None => ChannelParams::default(),
    };
    let [x0, y0, z0, x1, y1, z1] = bounds else {
        return Err(SimError::Config("--bounds takes six numbers".into()).into());
    };
    let bounds = SearchBounds::new(Position3D::new(*x0, *y0, *z0), Position3D::new(*x1, *y1, *z1))?;
    let measurements = read_measurements_csv(input)?;
    let estimate = rss_localize(&measurements, &params, &bounds)?;
    println!("{}", serde_json::to_string_pretty(&estimate)?);
    Ok(())
}

fn sweep_table(source: &str, param: &str, values: &[f64], out: Option<&Path>) -> Result<()> {
    let cfg = scenario(source)?;
    let rows = sweep(&cfg, param, values)?;
    let curves: Vec<String> = rows
        .first()
        .map(|r| r.summary.curves.keys().cloned().collect())
        .unwrap_or_default();
    let mut table = String::from("index,value,seed,handover_count");
    for c in &curves {
        table.push_str(&format!(",{c}_mean"));
    }
    table.push('\n');
    for row in &rows {
        table.push_str(&format!(
            "{},{},{},{}",
            row.index, row.value, row.seed, row.summary.handover_count
        ));
        for c in &curves {
            let mean = row.summary.curves.get(c).map(|s| s.mean.to_string()).unwrap_or_default();
            table.push(',');
            table.push_str(&mean);
        }
        table.push('\n');
    }
    match out {
        Some(path) => write(path, &table),
        None => std::io::stdout()
            .write_all(table.as_bytes())
            .context("writing to stdout"),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<SimError>() {
        return e.exit_code() as u8;
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return 4;
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate {
            scenario,
            seed,
            out,
            format,
            fading,
            threads,
        } => simulate(scenario, *seed, out, *format, *fading, *threads),
        Command::Localize {
            input,
            bounds,
            scenario,
        } => localize(input, bounds, scenario.as_deref()),
        Command::Sweep {
            scenario,
            param,
            values,
            out,
        } => sweep_table(scenario, param, values, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
