use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lowres_mimo::harness::{reproduce_figure, run_monte_carlo, run_monte_carlo_with, validate, RunOverrides, Suite};
use lowres_mimo::{Error, ExperimentSpec, ResultTable, SystemConfig};

#[derive(Parser)]
#[command(
    name = "lowres-mimo",
    version,
    about = "Massive-MIMO uplink with low-resolution ADCs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep one parameter and write a CSV table.
    Sweep {
        /// power_db, antennas, pilot_len, bits, kfactor_db or scaling_m.
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated grid, e.g. `-10,0,10`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
        /// CSV file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a figure preset and write one CSV per series.
    Figure {
        name: String,
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run a validation suite: moments, limits, lmmse, zf_null or aqnm.
    Validate {
        suite: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Mrc,
    Zf,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum Csi {
    Perfect,
    Imperfect,
    Both,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    antennas: Option<usize>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    power_db: Option<f64>,
    #[arg(long)]
    bits: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    kfactor_db: Option<f64>,
    #[arg(long)]
    pilot_len: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    receiver: Option<Which>,
    #[arg(long, value_enum)]
    csi: Option<Csi>,
    /// JSON file with `system`, `profile`, `power_model`, `axis` and `values`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Result<RunOverrides, Error> {
        let mut o = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                RunOverrides::from_json(&text)?
            }
            None => RunOverrides::default(),
        };
        if let Some(v) = self.antennas {
            o.set("antennas", v);
        }
        if let Some(v) = self.users {
            o.set("users", v);
        }
        if let Some(v) = self.power_db {
            o.set("power_db", v);
        }
        if let Some(v) = self.bits {
            o.set("bits", v);
        }
        if let Some(v) = self.kfactor_db {
            o.set("kfactor_db", v);
        }
        if let Some(v) = self.pilot_len {
            o.set("pilot_len", v);
        }
        if let Some(v) = self.trials {
            o.set("trials", v);
        }
        if let Some(v) = self.seed {
            o.set("seed", v);
        }
        if let Some(w) = self.receiver {
            let names: &[&str] = match w {
                Which::Mrc => &["mrc"],
                Which::Zf => &["zf"],
                Which::Both => &["mrc", "zf"],
            };
            o.set("receivers", names.to_vec());
        }
        if let Some(c) = self.csi {
            let names: &[&str] = match c {
                Csi::Perfect => &["perfect"],
                Csi::Imperfect => &["imperfect"],
                Csi::Both => &["perfect", "imperfect"],
            };
            o.set("csi", names.to_vec());
        }
        Ok(o)
    }
}

enum Failure {
    Error(Error),
    Validation,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn warn_flagged(table: &ResultTable, label: &str) {
    for &i in &table.meta.flagged {
        let r = &table.rows[i];
        eprintln!(
            "warning: {label} {}={} {}/{}: simulation and approximation differ by {:.1}%",
            table.meta.axis,
            r.sweep_value,
            r.receiver,
            r.csi.name(),
            100.0 * r.rel_dev.unwrap_or(0.0)
        );
    }
}

fn sweep(axis: Option<String>, values: Option<Vec<f64>>, common: &Common, out: Option<&Path>) -> Result<(), Failure> {
    let o = common.overrides()?;
    let axis = match axis {
        Some(a) => a.parse()?,
        None => o
            .axis
            .ok_or_else(|| Error::Config("sweep needs --axis or an `axis` entry in --config".into()))?,
    };
    let values = values
        .or_else(|| o.values.clone())
        .ok_or_else(|| Error::Config("sweep needs --values or a `values` entry in --config".into()))?;
    let spec = ExperimentSpec {
        axis,
        values,
        base: SystemConfig::default().with_overrides(&o.system)?,
        profile: o.profile.clone(),
        power_model: o.power_model,
    };
    let table = match common.workers {
        Some(w) => run_monte_carlo_with(&spec, w)?,
        None => run_monte_carlo(&spec)?,
    };
    warn_flagged(&table, "sweep");
    match out {
        Some(path) => table.write_csv(path)?,
        None => print!("{}", table.to_csv()?),
    }
    Ok(())
}

fn figure(name: &str, common: &Common, out: &Path) -> Result<(), Failure> {
    let o = common.overrides()?;
    std::fs::create_dir_all(out).map_err(Error::from)?;
    for (path, table) in reproduce_figure(name, &o, out, common.workers)? {
        warn_flagged(&table, name);
        if let Some(limit) = table.meta.limit_sum_se {
            eprintln!("{}: limiting sum SE {limit:.4}", path.display());
        }
        println!("{}", path.display());
    }
    Ok(())
}

fn run_validation(suite: &str, seed: u64) -> Result<(), Failure> {
    let suite: Suite = suite.parse()?;
    let report = validate(suite, seed)?;
    print!("{report}");
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Validation)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep {
            axis,
            values,
            common,
            out,
        } => sweep(axis, values, &common, out.as_deref()),
        Command::Figure { name, common, out } => figure(&name, &common, &out),
        Command::Validate { suite, seed } => run_validation(&suite, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => ExitCode::from(3),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
