//! The `pairgen` command line.
//!
//! Exit codes: 0 success, 1 error, 2 a result that is usable but degraded
//! (`generate`, `minimize`) or a suite that fails verification (`verify`).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use log::info;

use crate::bench::{gen_instances, run_bench, BenchConfig, InstanceSpec};
use crate::domain::{ConstraintSet, FactorSystem, TestSuite};
use crate::interactions::build_universe;
use crate::io::{emit_model, import_pict_output, parse_model, read_suite_csv, report_json, write_suite_csv};
use crate::milp::REFERENCE_BACKEND;
use crate::pipeline::{check_soundness, minimize_suite, run, PipelineConfig, Soundness};

#[derive(Debug, Parser)]
#[command(name = "pairgen", version, about = "Constrained pairwise test-suite generator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a suite covering every achievable pair.
    Generate(GenerateArgs),
    /// Check a suite against a model.
    Verify(VerifyArgs),
    /// Drop redundant rows from a sound suite.
    Minimize(MinimizeArgs),
    /// Compare the generator with the greedy baseline on random instances.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Solver backend id.
    #[arg(long, default_value = REFERENCE_BACKEND)]
    pub backend: String,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    pub model: PathBuf,
    /// Weight each pair by the product of its factors' level counts (default).
    #[arg(long, overrides_with = "no_weights")]
    pub weighted: bool,
    /// Give every pair weight 1.
    #[arg(long = "no-weights", overrides_with = "weighted")]
    pub no_weights: bool,
    /// Fraction of valid warm-start rows to keep [default: 0, or 0.9 with --warm-start].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Initial suite: CSV, or PICT tab-separated output when the file ends in .tsv or .txt.
    #[arg(long)]
    pub warm_start: Option<PathBuf>,
    /// Seconds per generation step.
    #[arg(long, default_value_t = 60.0)]
    pub time_limit_step: f64,
    /// Seconds for the minimization phase.
    #[arg(long, default_value_t = 300.0)]
    pub time_limit_min: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Suite CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report JSON destination; defaults to `<out>.report.json` when --out is set.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub model: PathBuf,
    pub suite: PathBuf,
}

#[derive(Debug, Args)]
pub struct MinimizeArgs {
    pub model: PathBuf,
    pub suite: PathBuf,
    #[arg(long, default_value_t = 300.0)]
    pub time_limit: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Minimized CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// TOML instance spec; the flags below are ignored when given.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long, default_value_t = 10)]
    pub factors: usize,
    #[arg(long, default_value_t = 2)]
    pub levels_min: usize,
    #[arg(long, default_value_t = 6)]
    pub levels_max: usize,
    #[arg(long, default_value_t = 0)]
    pub avoid: usize,
    #[arg(long, default_value_t = 0)]
    pub must: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Allow instances above the desk-scale pair threshold.
    #[arg(long)]
    pub large: bool,
    /// Also run the generator with unit weights.
    #[arg(long)]
    pub nw: bool,
    /// Warm-start the generator from the greedy suite with this alpha.
    #[arg(long)]
    pub warm_alpha: Option<f64>,
    #[arg(long, default_value_t = 60.0)]
    pub time_limit_step: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Write each instance as `instance_<k>.model` here and exit.
    #[arg(long)]
    pub emit_models: Option<PathBuf>,
    /// Directory of external suites named `instance_<k>.tsv` (PICT output).
    #[arg(long)]
    pub import_dir: Option<PathBuf>,
    #[arg(long, default_value = "external")]
    pub import_name: String,
    /// Output directory for the result tables.
    #[arg(long, default_value = "bench-out")]
    pub out: PathBuf,
}

type CliResult = Result<ExitCode, String>;

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<(), String> {
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_model(path: &Path) -> Result<(Arc<FactorSystem>, ConstraintSet), String> {
    let (sys, cs) = parse_model(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((Arc::new(sys), cs))
}

fn is_pict(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("tsv" | "txt"))
}

fn load_suite(path: &Path, sys: &Arc<FactorSystem>) -> Result<TestSuite, String> {
    let text = read(path)?;
    let parsed = if is_pict(path) {
        import_pict_output(&text, sys)
    } else {
        read_suite_csv(&text, sys)
    };
    parsed.map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), String> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn seconds(s: f64) -> Result<Duration, String> {
    Duration::try_from_secs_f64(s).map_err(|_| format!("invalid time limit {s}"))
}

fn report_violations(sys: &FactorSystem, cs: &ConstraintSet, ts: &TestSuite, sound: &Soundness) {
    let universe = build_universe(sys, cs, true);
    for &s in &sound.uncovered {
        eprintln!("uncovered pair: {}", universe.interaction(s).describe(sys));
    }
    for &k in &sound.unsatisfied_must {
        eprintln!("must tuple not included: {}", cs.must()[k].describe(sys));
    }
    for &r in &sound.forbidden_rows {
        eprintln!("row {} contains a forbidden tuple: {}", r + 1, ts.cases()[r].describe(sys));
    }
}

fn cmd_generate(a: &GenerateArgs) -> CliResult {
    let (sys, cs) = load_model(&a.model)?;
    let init = a.warm_start.as_deref().map(|p| load_suite(p, &sys)).transpose()?;
    let alpha = a.alpha.unwrap_or(if init.is_some() { 0.9 } else { 0.0 });
    let cfg = PipelineConfig {
        weighted: !a.no_weights,
        alpha,
        step_time_limit: seconds(a.time_limit_step)?,
        minimize_time_limit: seconds(a.time_limit_min)?,
        seed: a.seed,
        backend: a.solver.backend.clone(),
        strength: 2,
    };
    let report = run(&sys, &cs, &cfg, init.as_ref()).map_err(|e| e.to_string())?;
    let csv = write_suite_csv(&report.final_suite).map_err(|e| e.to_string())?;
    emit(a.out.as_deref(), &csv)?;
    let json = report_json(&report, &cfg);
    let report_path = a.report.clone().or_else(|| a.out.as_ref().map(|o| o.with_extension("report.json")));
    match report_path {
        Some(p) => write(&p, &json)?,
        None => eprintln!(
            "{} cases, {} pairs covered, {} removed by minimization",
            report.final_suite.len(),
            report.universe_size,
            report.removed_by_minimize
        ),
    }
    if report.degradation.is_degraded() {
        eprintln!("warning: result is degraded: {:?}", report.degradation);
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(a: &VerifyArgs) -> CliResult {
    let (sys, cs) = load_model(&a.model)?;
    let ts = load_suite(&a.suite, &sys)?;
    let universe = build_universe(&sys, &cs, true);
    let sound = check_soundness(&ts, &universe, &cs);
    if sound.is_sound() {
        println!("ok: {} cases cover all {} achievable pairs", ts.len(), universe.len());
        return Ok(ExitCode::SUCCESS);
    }
    report_violations(&sys, &cs, &ts, &sound);
    println!(
        "FAILED: {} uncovered pairs, {} unsatisfied must tuples, {} forbidden rows",
        sound.uncovered.len(),
        sound.unsatisfied_must.len(),
        sound.forbidden_rows.len()
    );
    Ok(ExitCode::from(2))
}

fn cmd_minimize(a: &MinimizeArgs) -> CliResult {
    let (sys, cs) = load_model(&a.model)?;
    let ts = load_suite(&a.suite, &sys)?;
    let universe = build_universe(&sys, &cs, true);
    let sound = check_soundness(&ts, &universe, &cs);
    if !sound.is_sound() {
        report_violations(&sys, &cs, &ts, &sound);
        return Err("input suite fails verification; refusing to minimize".into());
    }
    let m = minimize_suite(&ts, &universe, cs.must(), seconds(a.time_limit)?, &a.solver.backend).map_err(|e| e.to_string())?;
    emit(a.out.as_deref(), &write_suite_csv(&m.suite).map_err(|e| e.to_string())?)?;
    eprintln!("{} -> {} cases", ts.len(), m.suite.len());
    if !m.proven_minimal {
        eprintln!("warning: time limit reached before the selection was proven minimal");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(a: &BenchArgs) -> CliResult {
    let spec = match &a.spec {
        Some(p) => InstanceSpec::from_toml(&read(p)?).map_err(|e| e.to_string())?,
        None => InstanceSpec {
            count: a.count,
            n_factors: a.factors,
            levels: (a.levels_min, a.levels_max),
            num_avoid: a.avoid,
            num_must: a.must,
            seed: a.seed,
            ..InstanceSpec::desk()
        },
    };
    let instances = gen_instances(&spec).map_err(|e| e.to_string())?;
    if let Some(dir) = &a.emit_models {
        fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        for (k, inst) in instances.iter().enumerate() {
            let text = emit_model(&inst.system, &inst.constraints).map_err(|e| e.to_string())?;
            write(&dir.join(format!("instance_{k}.model")), &text)?;
        }
        println!("wrote {} models to {}", instances.len(), dir.display());
        return Ok(ExitCode::SUCCESS);
    }
    let external = match &a.import_dir {
        Some(dir) => {
            let suites = instances
                .iter()
                .enumerate()
                .map(|(k, inst)| load_suite(&dir.join(format!("instance_{k}.tsv")), &inst.system))
                .collect::<Result<Vec<_>, _>>()?;
            Some((a.import_name.clone(), suites))
        }
        None => None,
    };
    let cfg = BenchConfig {
        pipeline: PipelineConfig {
            step_time_limit: seconds(a.time_limit_step)?,
            seed: a.seed,
            backend: a.solver.backend.clone(),
            ..PipelineConfig::default()
        },
        unweighted: a.nw,
        warm_alpha: a.warm_alpha,
        allow_large: a.large,
        threads: a.threads,
        external,
    };
    info!("running {} instances", instances.len());
    let result = run_bench(&instances, &cfg).map_err(|e| e.to_string())?;
    result.write_outputs(&a.out).map_err(|e| e.to_string())?;
    print!("{}", result.summary_csv());
    Ok(ExitCode::SUCCESS)
}

/// Parses `args` and runs the chosen command.
pub fn run_cli<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Minimize(a) => cmd_minimize(a),
        Command::Bench(a) => cmd_bench(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(1)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_parse() {
        let c = Cli::try_parse_from(["pairgen", "generate", "m.model", "--no-weights", "--alpha", "0.5", "--seed", "3"]).unwrap();
        let Command::Generate(g) = c.command else { panic!() };
        assert!(g.no_weights && !g.weighted);
        assert_eq!((g.alpha, g.seed, g.solver.backend.as_str()), (Some(0.5), 3, "reference"));
    }

    #[test]
    fn missing_model_is_an_error() {
        assert_eq!(
            run_cli(["pairgen", "verify", "/nonexistent.model", "/nonexistent.csv"]),
            ExitCode::from(1)
        );
    }
}
