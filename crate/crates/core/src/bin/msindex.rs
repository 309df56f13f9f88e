use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use msindex::error::Error;
use msindex::runner::{
    emit_csv, parse_analyses, parse_omegas, run, Analysis, RunConfig, ScenarioSource, ToleranceOverrides,
};

/// Index theory and stability analysis of twisted Morse-Sturm systems.
#[derive(Parser)]
#[command(name = "msindex", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a comma-separated list of analyses.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// indices, stability, bott, theoremA, theoremF, selftest
        #[arg(long, default_value = "indices,stability")]
        analyses: String,
        /// CSV output directory.
        #[arg(long)]
        csv_dir: Option<PathBuf>,
    },
    /// Check the iteration formula for one iterate count.
    Bott {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        m: usize,
    },
    /// Both routes to the ω-spectral index for every requested ω.
    Indices {
        #[command(flatten)]
        common: Common,
    },
    /// Floquet, Krein and splitting-number analysis of the Poincaré map.
    Stability {
        #[command(flatten)]
        common: Common,
    },
    /// Seeded property sweeps.
    Selftest {
        #[command(flatten)]
        common: Common,
    },
    /// Indices and stability, written as JSON and CSV into a directory.
    ExportCsv {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Built-in scenario name, e.g. `great-circle` or `flat-torus(2)`.
    #[arg(long, conflicts_with = "file")]
    scenario: Option<String>,
    /// Scenario JSON file.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Comma-separated unit complexes (`1`, `-1`, `i`, `e:2pi/3`) or `roots:m`.
    #[arg(long, default_value = "1")]
    omegas: String,
    #[arg(long, default_value_t = 4)]
    max_m: usize,
    /// Report path (JSON); a directory for `export-csv`. Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, allow_hyphen_values = true)]
    tol_circle: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    tol_cluster: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    tol_rank: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    tol_integrator: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    tol_zero: Option<f64>,
}

impl Common {
    fn config(&self, analyses: Vec<Analysis>) -> Result<RunConfig, Error> {
        let scenario = match (&self.scenario, &self.file) {
            (Some(name), None) => ScenarioSource::Builtin(name.clone()),
            (None, Some(path)) => ScenarioSource::File(path.clone()),
            (None, None) if analyses == [Analysis::Selftest] => ScenarioSource::Builtin("flat-torus(1)".into()),
            _ => return Err(Error::Config("exactly one of --scenario or --file is required".into())),
        };
        let mut cfg = RunConfig::new(scenario, analyses);
        cfg.omegas = parse_omegas(&self.omegas)?;
        cfg.max_m = self.max_m;
        cfg.seed = self.seed;
        cfg.tolerances = ToleranceOverrides {
            circle: self.tol_circle,
            cluster: self.tol_cluster,
            rank: self.tol_rank,
            integrator: self.tol_integrator,
            zero: self.tol_zero,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

enum Output {
    Json(Option<PathBuf>),
    Dir(PathBuf),
}

fn build(cli: Cli) -> Result<(RunConfig, Output, Option<PathBuf>), Error> {
    Ok(match cli.command {
        Command::Analyze { common, analyses, csv_dir } => {
            (common.config(parse_analyses(&analyses)?)?, Output::Json(common.out.clone()), csv_dir)
        }
        Command::Bott { common, m } => {
            let mut cfg = common.config(vec![Analysis::Bott])?;
            cfg.bott_m = Some(vec![m]);
            cfg.validate()?;
            (cfg, Output::Json(common.out.clone()), None)
        }
        Command::Indices { common } => (common.config(vec![Analysis::Indices])?, Output::Json(common.out.clone()), None),
        Command::Stability { common } => {
            (common.config(vec![Analysis::Stability])?, Output::Json(common.out.clone()), None)
        }
        Command::Selftest { common } => {
            (common.config(vec![Analysis::Selftest])?, Output::Json(common.out.clone()), None)
        }
        Command::ExportCsv { common } => {
            let dir = common.out.clone().ok_or_else(|| Error::Config("export-csv needs --out <dir>".into()))?;
            (common.config(vec![Analysis::Indices, Analysis::Stability])?, Output::Dir(dir), None)
        }
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let (cfg, output, csv_dir) = match build(cli) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let out = match run(&cfg) {
        Ok(o) => o,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
        Err(e) => {
            eprintln!("analysis error: {e}");
            return ExitCode::from(2);
        }
    };
    let json = out.json();
    let written = match output {
        Output::Json(None) => {
            print!("{json}");
            Ok(())
        }
        Output::Json(Some(path)) => std::fs::write(&path, &json).map_err(Error::from),
        Output::Dir(dir) => std::fs::create_dir_all(&dir)
            .map_err(Error::from)
            .and_then(|_| std::fs::write(dir.join("report.json"), &json).map_err(Error::from))
            .and_then(|_| emit_csv(&out, &dir).map(|_| ())),
    };
    let written = written.and_then(|_| match &csv_dir {
        Some(dir) => emit_csv(&out, dir).map(|_| ()),
        None => Ok(()),
    });
    if let Err(e) = written {
        eprintln!("error writing output: {e}");
        return ExitCode::from(2);
    }
    if !out.violations.is_empty() {
        for v in &out.violations {
            eprintln!("invariant violation: {v}");
        }
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}
