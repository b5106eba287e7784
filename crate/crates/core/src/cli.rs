//! Command-line interface. [`run`] returns the process exit code:
//! 0 on success, 1 on a usage or input error, 2 when a solve fails.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::cvar::{self, RiskLevel};
use crate::error::{Error, Result};
use crate::evaluate::{self, evaluate_commitment, summarize, sweep_mu, sweep_overload};
use crate::grid_model::GridCase;
use crate::io::{self, DispatchRecord, Metadata};
use crate::opf::{self, NoRiskWind, OpfConfig};
use crate::scenario::{estimate_covariance, sample_for_case, ScenarioSet};
use crate::solver::SolverSettings;

#[derive(Debug, Parser)]
#[command(
    name = "cvar-opf",
    version,
    about = "Risk-aware DC optimal power flow with wind shortfall CVaR"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one dispatch and write per-bus results with LMPs.
    Solve(SolveArgs),
    /// Sweep the risk weight mu.
    SweepMu(SweepMuArgs),
    /// Sweep the load overload ratio gamma.
    SweepLoad(SweepLoadArgs),
    /// Evaluate a stored dispatch on a scenario set.
    Eval(EvalArgs),
    /// Sample wind scenarios from a history or a covariance.
    GenScenarios(GenArgs),
    /// Check input files without solving.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    case: PathBuf,
    /// Scenario CSV (required unless --no-risk).
    #[arg(long)]
    scenarios: Option<PathBuf>,
    #[arg(long, default_value_t = evaluate::DEFAULT_BETA)]
    beta: f64,
    /// Risk weight (required for the CVaR-weighted form).
    #[arg(long)]
    mu: Option<f64>,
    /// Solve the budget-constrained form with this CVaR budget ($).
    #[arg(long, conflicts_with_all = ["mu", "no_risk"])]
    p2_budget: Option<f64>,
    /// Deterministic dispatch with wind fixed at forecast.
    #[arg(long, conflicts_with = "mu")]
    no_risk: bool,
    /// With --no-risk, allow curtailing wind below forecast.
    #[arg(long, requires = "no_risk")]
    curtailable: bool,
    /// Ignore installed wind capacities when committing wind.
    #[arg(long)]
    uncap_wind: bool,
    #[arg(long, default_value = "dispatch.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SweepMuArgs {
    #[arg(long)]
    case: PathBuf,
    #[arg(long)]
    scenarios: PathBuf,
    /// Independent scenarios for out-of-sample statistics per point.
    #[arg(long)]
    eval_scenarios: Option<PathBuf>,
    #[arg(long, default_value_t = evaluate::DEFAULT_BETA)]
    beta: f64,
    /// Explicit comma-separated grid; overrides the log-grid flags.
    #[arg(long, value_delimiter = ',')]
    mu_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = evaluate::MU_GRID_MIN)]
    mu_min: f64,
    #[arg(long, default_value_t = evaluate::MU_GRID_MAX)]
    mu_max: f64,
    #[arg(long, default_value_t = evaluate::MU_GRID_POINTS)]
    points: usize,
    #[arg(long, default_value = "sweep_mu.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SweepLoadArgs {
    #[arg(long)]
    case: PathBuf,
    #[arg(long)]
    scenarios: PathBuf,
    #[arg(long, default_value_t = evaluate::DEFAULT_BETA)]
    beta: f64,
    #[arg(long)]
    mu: f64,
    #[arg(long, value_delimiter = ',', default_values_t = evaluate::GAMMA_GRID)]
    gamma_grid: Vec<f64>,
    #[arg(long, default_value = "sweep_load.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Dispatch CSV written by `solve`.
    #[arg(long)]
    solution: PathBuf,
    #[arg(long)]
    scenarios: PathBuf,
    /// Risk level for the reported transaction-cost CVaR.
    #[arg(long, default_value_t = evaluate::DEFAULT_BETA)]
    beta: f64,
    #[arg(long, default_value = "costs.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    case: PathBuf,
    /// Wind history CSV; the covariance is estimated from it.
    #[arg(long, conflicts_with = "cov", required_unless_present = "cov")]
    history: Option<PathBuf>,
    /// Covariance CSV over wind buses.
    #[arg(long)]
    cov: Option<PathBuf>,
    #[arg(long, default_value_t = evaluate::DEFAULT_N_SCENARIOS)]
    n: usize,
    #[arg(long, default_value_t = evaluate::DEFAULT_TRAIN_SEED)]
    seed: u64,
    #[arg(long, default_value = "scenarios.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    case: Option<PathBuf>,
    /// Scenario CSV (needs --case).
    #[arg(long, requires = "case")]
    scenarios: Option<PathBuf>,
    /// History CSV (needs --case).
    #[arg(long, requires = "case")]
    history: Option<PathBuf>,
    /// Covariance CSV (needs --case).
    #[arg(long, requires = "case")]
    cov: Option<PathBuf>,
    /// Dispatch CSV.
    #[arg(long)]
    solution: Option<PathBuf>,
}

enum Failure {
    Usage(Error),
    Solve(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e)
    }
}

type CliResult = std::result::Result<(), Failure>;

/// Parse `argv` (including the program name), run, and return the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    let command_line = recorded_command(&argv);
    let result = match cli.command {
        Command::Solve(a) => solve(a, &command_line, out),
        Command::SweepMu(a) => sweep_mu_cmd(a, &command_line, out),
        Command::SweepLoad(a) => sweep_load_cmd(a, &command_line, out),
        Command::Eval(a) => eval(a, &command_line, out),
        Command::GenScenarios(a) => gen_scenarios(a, &command_line, out),
        Command::Validate(a) => validate(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
        Err(Failure::Solve(msg)) => {
            let _ = writeln!(err, "solve failed: {msg}");
            2
        }
    }
}

const PATH_FLAGS: [&str; 6] = [
    "--case",
    "--scenarios",
    "--eval-scenarios",
    "--solution",
    "--history",
    "--cov",
];

/// Arguments after the program name, without the output path and with input
/// paths reduced to file names, so that runs differing only in directory
/// layout produce identical files. Inputs are identified by content hash.
fn recorded_command(argv: &[std::ffi::OsString]) -> String {
    let file_name = |v: &str| {
        Path::new(v)
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_else(|| v.to_string())
    };
    let mut parts = Vec::new();
    let mut args = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned());
    while let Some(a) = args.next() {
        if a == "--out" {
            args.next();
            continue;
        }
        if a.starts_with("--out=") {
            continue;
        }
        if PATH_FLAGS.contains(&a.as_str()) {
            let v = args.next().map(|v| file_name(&v)).unwrap_or_default();
            parts.push(a);
            parts.push(v);
        } else if let Some((flag, v)) = a.split_once('=').filter(|(f, _)| PATH_FLAGS.contains(f)) {
            parts.push(format!("{flag}={}", file_name(v)));
        } else {
            parts.push(a);
        }
    }
    parts.join(" ")
}

fn base_metadata(command_line: &str) -> Metadata {
    let mut md = Metadata::new();
    md.push("tool", format!("cvar-opf {}", io::TOOL_VERSION));
    md.push("command", command_line);
    md
}

fn push_case(md: &mut Metadata, case: &GridCase) {
    md.push("case_hash", io::case_hash(case));
}

fn push_scenarios(md: &mut Metadata, key: &str, path: &Path, set: &ScenarioSet) -> Result<()> {
    md.push(&format!("{key}_file_hash"), io::file_hash(path)?);
    md.push(&format!("{key}_seed"), set.seed);
    md.push(&format!("{key}_n"), set.n_scenarios());
    Ok(())
}

fn line(out: &mut dyn Write, text: impl AsRef<str>) {
    let _ = writeln!(out, "{}", text.as_ref());
}

fn solve(a: SolveArgs, command_line: &str, out: &mut dyn Write) -> CliResult {
    let case = io::load_case(&a.case)?;
    let settings = SolverSettings::from_env();
    let mut md = base_metadata(command_line);
    push_case(&mut md, &case);

    let program = if a.no_risk {
        md.push("formulation", "no-risk");
        let wind = if a.curtailable {
            NoRiskWind::Curtailable
        } else {
            NoRiskWind::Fixed
        };
        md.push("wind", if a.curtailable { "curtailable" } else { "fixed" });
        opf::assemble_norisk_with(&case, wind)?
    } else {
        let path = a.scenarios.as_ref().ok_or_else(|| {
            Error::validation("arguments", "--scenarios", "required unless --no-risk")
        })?;
        let scenarios = io::read_scenarios(path, &case)?;
        push_scenarios(&mut md, "scenarios", path, &scenarios)?;
        md.push_f64("beta", a.beta);
        let mut config = OpfConfig::new(a.beta, a.mu.unwrap_or(0.0))?;
        config.cap_committed_wind = !a.uncap_wind;
        if let Some(b) = a.p2_budget {
            md.push("formulation", "budget").push_f64("budget", b);
            opf::assemble_p2(&case, &scenarios, &config.with_budget(b)?)?
        } else {
            let mu = a.mu.ok_or_else(|| {
                Error::validation("arguments", "--mu", "required for the CVaR-weighted form")
            })?;
            md.push("formulation", "cvar-weighted").push_f64("mu", mu);
            opf::assemble_ap1(&case, &scenarios, &config)?
        }
    };
    let (sol, _) = program.solve(&settings)?;
    line(out, format!("status        {}", sol.status));
    if !sol.is_solved() {
        return Err(Failure::Solve(format!("solver status {}", sol.status)));
    }
    line(out, format!("objective     {:.6}", sol.objective));
    line(out, format!("gen_cost      {:.6}", sol.gen_cost));
    line(out, format!("cvar_term     {:.6}", sol.cvar_term));
    line(out, format!("eta           {:.6}", sol.eta));
    line(out, format!("generation_mw {:.6}", sol.p_g.sum()));
    line(out, format!("wind_mw       {:.6}", sol.p_w.sum()));
    line(out, format!("load_mw       {:.6}", case.total_load()));
    line(out, format!("kkt_residual  {:.3e}", sol.kkt_residual));
    line(out, format!("iterations    {}", sol.iterations));
    DispatchRecord::from_solution(&case, &sol, md).write(&a.out)?;
    line(out, format!("wrote {}", a.out.display()));
    Ok(())
}

fn sweep_mu_cmd(a: SweepMuArgs, command_line: &str, out: &mut dyn Write) -> CliResult {
    let case = io::load_case(&a.case)?;
    let scenarios = io::read_scenarios(&a.scenarios, &case)?;
    let eval = a
        .eval_scenarios
        .as_ref()
        .map(|p| io::read_scenarios(p, &case))
        .transpose()?;
    let grid = match a.mu_grid {
        Some(g) => g,
        None => evaluate::log_grid(a.mu_min, a.mu_max, a.points)?,
    };
    let mut md = base_metadata(command_line);
    push_case(&mut md, &case);
    push_scenarios(&mut md, "scenarios", &a.scenarios, &scenarios)?;
    if let (Some(p), Some(e)) = (&a.eval_scenarios, &eval) {
        push_scenarios(&mut md, "eval", p, e)?;
    }
    let result = sweep_mu(
        &case,
        &scenarios,
        eval.as_ref(),
        &grid,
        a.beta,
        &SolverSettings::from_env(),
    )?;
    for p in &result.points {
        line(
            out,
            format!(
                "mu={:<12} {:<10} gen_cost={:.6} cvar_term={:.6} objective={:.6}",
                io::fmt_f64(p.value),
                p.status.as_str(),
                p.gen_cost,
                p.cvar_term,
                p.objective
            ),
        );
    }
    io::sweep_table(&result, &case, md).write(&a.out)?;
    line(out, format!("wrote {}", a.out.display()));
    Ok(())
}

fn sweep_load_cmd(a: SweepLoadArgs, command_line: &str, out: &mut dyn Write) -> CliResult {
    let case = io::load_case(&a.case)?;
    let scenarios = io::read_scenarios(&a.scenarios, &case)?;
    let mut md = base_metadata(command_line);
    push_case(&mut md, &case);
    push_scenarios(&mut md, "scenarios", &a.scenarios, &scenarios)?;
    let result = sweep_overload(
        &case,
        &scenarios,
        &a.gamma_grid,
        a.beta,
        a.mu,
        &SolverSettings::from_env(),
    )?;
    for p in &result.points {
        let spread = p.lmp.max() - p.lmp.min();
        line(
            out,
            format!(
                "gamma={:<6} {:<10} objective={:.6} lmp_spread={:.6}",
                io::fmt_f64(p.value),
                p.status.as_str(),
                p.objective,
                spread
            ),
        );
    }
    if let Some(g) = result.first_failure() {
        line(out, format!("first unsolved gamma: {}", io::fmt_f64(g)));
    }
    io::sweep_table(&result, &case, md).write(&a.out)?;
    line(out, format!("wrote {}", a.out.display()));
    Ok(())
}

fn eval(a: EvalArgs, command_line: &str, out: &mut dyn Write) -> CliResult {
    let dispatch = DispatchRecord::read(&a.solution)?;
    let scenarios = io::read_scenarios_for_buses(&a.scenarios, &dispatch.bus_ids)?;
    let beta = RiskLevel::new(a.beta)?;
    let samples = evaluate_commitment(
        dispatch.gen_cost,
        &dispatch.p_w,
        &dispatch.wind_price,
        &scenarios,
    )?;
    let summary = summarize(&samples)?;
    let t: Vec<f64> = samples.iter().map(|s| s.transaction_cost).collect();
    let risk = cvar::var_cvar(&t, beta)?;

    let mut md = base_metadata(command_line);
    md.push("solution_file_hash", io::file_hash(&a.solution)?);
    push_scenarios(&mut md, "scenarios", &a.scenarios, &scenarios)?;
    md.push_f64("beta", a.beta);
    md.push_f64("transaction_var", risk.var);
    md.push_f64("transaction_cvar", risk.cvar);
    line(out, format!("samples          {}", summary.n));
    line(out, format!("mean_total       {:.6}", summary.mean));
    line(out, format!("variance_total   {:.6}", summary.variance));
    line(out, format!("transaction_var  {:.6}", risk.var));
    line(out, format!("transaction_cvar {:.6}", risk.cvar));
    io::cost_samples_table(&samples, &summary, md).write(&a.out)?;
    line(out, format!("wrote {}", a.out.display()));
    Ok(())
}

fn gen_scenarios(a: GenArgs, command_line: &str, out: &mut dyn Write) -> CliResult {
    let case = io::load_case(&a.case)?;
    let mut md = base_metadata(command_line);
    push_case(&mut md, &case);
    let cov = match (&a.history, &a.cov) {
        (Some(h), _) => {
            md.push("history_file_hash", io::file_hash(h)?);
            estimate_covariance(&io::read_history(h)?, &case)?
        }
        (None, Some(c)) => {
            md.push("covariance_file_hash", io::file_hash(c)?);
            io::read_covariance(c, &case)?
        }
        (None, None) => unreachable!("clap requires one source"),
    };
    let set = sample_for_case(&case, &cov, a.n, a.seed)?;
    io::write_scenarios(&a.out, &case, &set, md)?;
    line(
        out,
        format!("wrote {} scenarios to {}", set.n_scenarios(), a.out.display()),
    );
    Ok(())
}

fn validate(a: ValidateArgs, out: &mut dyn Write) -> CliResult {
    let mut checked = 0;
    let case = match &a.case {
        Some(p) => {
            let c = io::load_case(p)?;
            line(
                out,
                format!(
                    "ok  case {} ({} buses, {} lines, {} generators, {} wind farms, hash {})",
                    p.display(),
                    c.n_buses(),
                    c.n_lines(),
                    c.generators.len(),
                    c.wind_farms.len(),
                    io::case_hash(&c)
                ),
            );
            checked += 1;
            Some(c)
        }
        None => None,
    };
    if let (Some(p), Some(c)) = (&a.scenarios, &case) {
        let s = io::read_scenarios(p, c)?;
        line(out, format!("ok  scenarios {} ({} rows)", p.display(), s.n_scenarios()));
        checked += 1;
    }
    if let (Some(p), Some(c)) = (&a.history, &case) {
        let h = io::read_history(p)?;
        estimate_covariance(&h, c)?;
        line(out, format!("ok  history {} ({} hours)", p.display(), h.records.nrows()));
        checked += 1;
    }
    if let (Some(p), Some(c)) = (&a.cov, &case) {
        let cov = io::read_covariance(p, c)?;
        // a sampling call with one draw exercises symmetry and PSD checks
        sample_for_case(c, &cov, 1, 0)?;
        line(out, format!("ok  covariance {}", p.display()));
        checked += 1;
    }
    if let Some(p) = &a.solution {
        let d = DispatchRecord::read(p)?;
        line(out, format!("ok  solution {} ({} buses)", p.display(), d.bus_ids.len()));
        checked += 1;
    }
    if checked == 0 {
        return Err(Failure::Usage(Error::validation(
            "arguments",
            "validate",
            "no files given",
        )));
    }
    Ok(())
}
