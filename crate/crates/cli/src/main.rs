//! `layerlab <study> --config <path>`: runs one study and writes its tables
//! and verdict.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use layerlab::config::StudyConfig;
use layerlab::experiments::{
    optimize_profile, oracle_study, rate_study, scaling_study, solve_study,
    stretch_convergence_study,
};
use layerlab::Error;
use serde_json::json;

const PROFILE_SAMPLES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Study {
    Oracle,
    Solve,
    Rates,
    Stretch,
    Scaling,
    Optimize,
}

#[derive(Debug, Parser)]
#[command(name = "layerlab", version, about = "Thin insulating layer studies")]
struct Cli {
    #[arg(value_enum)]
    study: Study,
    /// Study configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the whole run.
    #[arg(long)]
    threads: Option<usize>,
    /// Print the configuration with every default filled in, then exit.
    #[arg(long)]
    echo_config: bool,
}

/// A parsed configuration together with the run-level options.
#[derive(Debug)]
struct RunConfig {
    study: Study,
    config: StudyConfig,
    out: PathBuf,
    threads: Option<usize>,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config(_) => 2,
            e if e.is_guard() => 3,
            _ => 4,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(4, e.to_string())
    }
}

fn parse_config(path: &Path) -> Result<StudyConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new(2, format!("cannot read {}: {e}", path.display())))?;
    let cfg = StudyConfig::from_toml(&text)
        .map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))?;
    cfg.check_guards()?;
    Ok(cfg)
}

/// Rendered output files, written only once the whole study has succeeded.
struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn new() -> Self {
        Outputs { files: Vec::new() }
    }

    fn add<F>(&mut self, name: impl Into<String>, render: F) -> std::io::Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let mut buf = Vec::new();
        render(&mut buf)?;
        self.files.push((name.into(), buf));
        Ok(())
    }

    fn verdict(
        &mut self,
        study: &str,
        pass: bool,
        metrics: &BTreeMap<String, f64>,
    ) -> std::io::Result<()> {
        let value = json!({ "study": study, "pass": pass, "metrics": metrics });
        self.add(format!("{study}.json"), |w| {
            serde_json::to_writer_pretty(&mut *w, &value)?;
            writeln!(w)
        })
    }

    fn persist(self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, bytes) in self.files {
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(&bytes)?;
            tmp.as_file().sync_all()?;
            tmp.persist(dir.join(name)).map_err(|e| e.error)?;
        }
        Ok(())
    }
}

fn run(rc: &RunConfig) -> Result<bool, Failure> {
    let cfg = &rc.config;
    let mut out = Outputs::new();
    let pass = match rc.study {
        Study::Oracle => {
            let (result, seq) = oracle_study(cfg)?;
            out.add("oracle.csv", |w| seq.write_csv(w))?;
            out.verdict("oracle", result.pass, &result.metrics())?;
            result.pass
        }
        Study::Solve => {
            let (result, instances) = solve_study(cfg)?;
            out.add("solve.csv", |w| result.write_csv(w))?;
            for (i, inst) in instances.iter().enumerate() {
                let sol = &inst.solution;
                out.add(format!("solve_u_eps_{i}.csv"), |w| {
                    sol.u_eps.write_csv(&inst.mesh, w)
                })?;
                out.add(format!("solve_u0_{i}.csv"), |w| {
                    sol.u0.write_csv(&inst.mesh, w)
                })?;
            }
            out.verdict("solve", result.pass, &result.metrics())?;
            result.pass
        }
        Study::Rates | Study::Stretch | Study::Scaling => {
            let result = match rc.study {
                Study::Rates => rate_study(cfg)?,
                Study::Stretch => stretch_convergence_study(cfg)?,
                _ => scaling_study(cfg)?,
            };
            let name = result.study.name();
            out.add(format!("{name}.csv"), |w| result.write_csv(w))?;
            out.verdict(name, result.pass, &result.metrics())?;
            result.pass
        }
        Study::Optimize => {
            let result = optimize_profile(cfg)?;
            out.add("optimize_trace.csv", |w| result.write_trace_csv(w))?;
            out.add("optimize_profile.csv", |w| {
                result.write_profile_csv(cfg, PROFILE_SAMPLES, w)
            })?;
            out.verdict("optimize", result.pass, &result.metrics())?;
            result.pass
        }
    };
    out.persist(&rc.out)?;
    Ok(pass)
}

fn main_inner(cli: Cli) -> Result<bool, Failure> {
    let config = parse_config(&cli.config)?;
    if cli.echo_config {
        print!("{}", config.to_toml());
        return Ok(true);
    }
    let rc = RunConfig {
        study: cli.study,
        out: cli.out.unwrap_or_else(|| PathBuf::from(&config.output)),
        threads: cli.threads,
        config,
    };
    if let Some(n) = rc.threads {
        if n == 0 {
            return Err(Failure::new(2, "--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::new(4, e.to_string()))?;
    }
    run(&rc)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
