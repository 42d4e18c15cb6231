mod config;
mod output;
mod svg;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use synthdim::model::{BasisLabel, Level};
use synthdim::observables::{fit_decay, DEFAULT_FIT_WINDOW};
use synthdim::scenarios::{
    list_scenarios, plan_scenario, run_acceptance, run_observables, run_scenario, run_spec, RunResult,
    ScenarioError, ScenarioResult, OVERRIDE_KEYS,
};

use config::{Format, Resolved, Target};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{0} acceptance criteria failed")]
    Acceptance(usize),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Scenario(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "synthdim", version, about = "Giant atoms coupled to synthetic frequency lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct RunArgs {
    /// Scenario id (see `list`)
    id: Option<String>,
    /// JSON config file
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Parameter override, e.g. `--set n=3 --set delta=100`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Output directory [default: out]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Output format, repeatable [default: csv]
    #[arg(long = "format", value_enum)]
    formats: Vec<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario or an explicit run spec
    Run(RunArgs),
    /// Run a scenario once per value of one parameter
    Sweep {
        #[command(flatten)]
        args: RunArgs,
        /// Parameter to vary
        #[arg(long)]
        param: String,
        /// Comma-separated values
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
    },
    /// Run the acceptance criteria
    Validate {
        /// Directory for acceptance.json
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// List scenario ids
    List,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SYNTHDIM_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("SYNTHDIM_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::List => {
            let mut out = std::io::stdout().lock();
            for (id, description, figure) in list_scenarios() {
                // a closed pipe (`| head`) is not an error
                if writeln!(out, "{id:<8} {figure:<12} {description}").is_err() {
                    break;
                }
            }
            Ok(())
        }
        Command::Run(args) => run(args),
        Command::Sweep { args, param, values } => sweep(args, &param, &values),
        Command::Validate { out } => validate(out),
    }
}

fn resolve(args: RunArgs) -> Result<Resolved, CliError> {
    config::resolve(args.config.as_deref(), args.id, &args.sets, args.out, &args.formats)
}

fn observables_json(obs: &BTreeMap<String, f64>) -> String {
    serde_json::to_string_pretty(obs).expect("observables serialize") + "\n"
}

fn write_scenario(dir: &Path, result: &ScenarioResult, formats: &[Format]) -> Result<(), CliError> {
    for r in &result.runs {
        for p in output::write_run(dir, r, formats)? {
            println!("{}", p.display());
        }
    }
    let p = dir.join("observables.json");
    output::write_text(&p, &observables_json(&result.observables))?;
    println!("{}", p.display());
    Ok(())
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let res = resolve(args)?;
    match &res.target {
        Target::Scenario(id) => {
            let result = run_scenario(id, &res.overrides)?;
            write_scenario(&res.out.join(id), &result, &res.formats)
        }
        Target::Explicit(spec) => {
            let r = run_spec(spec)?;
            for p in output::write_run(&res.out, &r, &res.formats)? {
                println!("{}", p.display());
            }
            let mut obs = BTreeMap::new();
            run_observables(&r, &mut obs)?;
            let p = res.out.join(format!("{}.observables.json", r.spec.name));
            output::write_text(&p, &observables_json(&obs))?;
            println!("{}", p.display());
            Ok(())
        }
    }
}

/// `(final P_e, fitted decay rate, final asymmetry)` of the first run.
fn summarize(result: &ScenarioResult) -> Result<(f64, Option<f64>, f64), CliError> {
    let first: &RunResult = &result.runs[0];
    let name = &first.spec.name;
    let e = BasisLabel::atom(Level::E);
    let pe = result.observable(&format!("{name}.{e}.final"))?;
    let rate = first
        .trajectory
        .series(&e)
        .and_then(|s| fit_decay(&first.trajectory.times, &s, DEFAULT_FIT_WINDOW).ok())
        .map(|f| f.rate);
    let asym = result.observable(&format!("{name}.asymmetry_final"))?;
    Ok((pe, rate, asym))
}

fn sweep(args: RunArgs, param: &str, values: &[f64]) -> Result<(), CliError> {
    if values.is_empty() {
        return Err(CliError::Usage("sweep needs at least one value in --values".into()));
    }
    if !OVERRIDE_KEYS.contains(&param) || param == "init" {
        return Err(CliError::Usage(format!(
            "cannot sweep `{param}`; numeric keys: {}",
            OVERRIDE_KEYS.iter().filter(|k| **k != "init").copied().collect::<Vec<_>>().join(", ")
        )));
    }
    let res = resolve(args)?;
    let Target::Scenario(id) = &res.target else {
        return Err(CliError::Usage("sweep needs a scenario id".into()));
    };
    let mut plans = Vec::with_capacity(values.len());
    for v in values {
        let mut ov = res.overrides.clone();
        ov.set(param, *v)?;
        // fail on bad values before any run starts
        plan_scenario(id, &ov)?;
        plans.push((*v, ov));
    }
    let root = res.out.join(id);
    let mut rows = Vec::new();
    for (v, ov) in &plans {
        let result = run_scenario(id, ov)?;
        write_scenario(&root.join(format!("{param}={}", output::num(*v))), &result, &res.formats)?;
        rows.push((*v, summarize(&result)?));
    }
    output::ensure_dir(&root)?;
    let path = root.join(format!("sweep_{param}.csv"));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&path)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    let io = |e: csv::Error| CliError::Usage(format!("cannot write {}: {e}", path.display()));
    w.write_record(["value", "final_pe", "fit_rate", "asymmetry"]).map_err(io)?;
    for (v, (pe, rate, asym)) in rows {
        let rate = rate.map(output::num).unwrap_or_default();
        w.write_record([output::num(v), output::num(pe), rate, output::num(asym)]).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    println!("{}", path.display());
    Ok(())
}

fn validate(out: Option<PathBuf>) -> Result<(), CliError> {
    let report = run_acceptance();
    for line in report.lines() {
        println!("{line}");
    }
    if let Some(dir) = out {
        output::ensure_dir(&dir)?;
        output::write_text(&dir.join("acceptance.json"), &(report.to_json() + "\n"))?;
    }
    let failed = report.entries.iter().filter(|e| !e.passed).count();
    if failed > 0 {
        return Err(CliError::Acceptance(failed));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_shape() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn numerical_errors_exit_2() {
        let e = CliError::Scenario(ScenarioError::Dynamics(synthdim::dynamics::DynamicsError::NormDrift { t: 1.0, norm: 1.1 }));
        assert_eq!(e.code(), 2);
        assert_eq!(CliError::Usage("x".into()).code(), 1);
        assert_eq!(CliError::Acceptance(2).code(), 1);
    }

    #[test]
    fn sweep_rejects_empty_and_unknown() {
        let args = RunArgs { id: Some("fig2b".into()), config: None, sets: vec![], out: None, formats: vec![] };
        assert!(matches!(sweep(args.clone(), "delta", &[]), Err(CliError::Usage(_))));
        assert!(matches!(sweep(args, "bogus", &[1.0]), Err(CliError::Usage(_))));
    }
}
