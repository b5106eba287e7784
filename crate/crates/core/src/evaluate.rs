//! Monte Carlo evaluation of dispatch policies and parameter sweeps.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::cvar::{self, RiskLevel};
use crate::error::{Error, Result};
use crate::grid_model::{scale_loads, GridCase};
use crate::opf::{assemble_ap1, DispatchSolution, OpfConfig};
use crate::scenario::ScenarioSet;
use crate::solver::{SolveStatus, SolverSettings};

pub const DEFAULT_BETA: f64 = 0.95;
pub const DEFAULT_N_SCENARIOS: usize = 1000;
pub const DEFAULT_N_EVAL: usize = 10_000;
pub const DEFAULT_TRAIN_SEED: u64 = 1;
pub const DEFAULT_EVAL_SEED: u64 = 2;
/// Bundled μ sweep: `MU_GRID_POINTS` log-spaced values in `[MU_GRID_MIN, MU_GRID_MAX]`.
pub const MU_GRID_MIN: f64 = 0.1;
pub const MU_GRID_MAX: f64 = 10.0;
pub const MU_GRID_POINTS: usize = 10;
pub const GAMMA_GRID: [f64; 4] = [0.0, 0.1, 0.2, 0.3];

/// Geometric midpoint of the bundled μ sweep.
pub fn default_mu() -> f64 {
    (MU_GRID_MIN * MU_GRID_MAX).sqrt()
}

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) || n < 2 {
        return Err(Error::validation(
            "log grid",
            "bounds",
            "need 0 < lo < hi and at least two points",
        ));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|k| {
            if k == 0 {
                lo
            } else if k == n - 1 {
                hi
            } else {
                (a + (b - a) * k as f64 / (n - 1) as f64).exp()
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostSample {
    pub gen_cost: f64,
    pub transaction_cost: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostSummary {
    pub n: usize,
    pub mean: f64,
    /// Unbiased (divisor n − 1); zero for a single sample.
    pub variance: f64,
    /// `(cost, P[X ≤ cost])` at each distinct sorted sample.
    pub cdf_points: Vec<(f64, f64)>,
}

/// Realized total cost of a fixed commitment under each evaluation scenario.
pub fn evaluate_commitment(
    gen_cost: f64,
    p_w: &DVector<f64>,
    prices: &DVector<f64>,
    eval_scenarios: &ScenarioSet,
) -> Result<Vec<CostSample>> {
    let m = p_w.len();
    if prices.len() != m {
        return Err(Error::dimension("wind prices", m, prices.len()));
    }
    if eval_scenarios.n_buses() != m {
        return Err(Error::dimension(
            "scenario bus columns",
            m,
            eval_scenarios.n_buses(),
        ));
    }
    let pw = p_w.as_slice();
    let c = prices.as_slice();
    (0..eval_scenarios.n_scenarios())
        .map(|s| {
            let t = cvar::transaction_cost(pw, &eval_scenarios.row(s), c)?;
            Ok(CostSample {
                gen_cost,
                transaction_cost: t,
                total: gen_cost + t,
            })
        })
        .collect()
}

/// Per-scenario total cost of `solution` on an independent scenario set.
pub fn evaluate_policy(
    solution: &DispatchSolution,
    eval_scenarios: &ScenarioSet,
    case: &GridCase,
) -> Result<Vec<CostSample>> {
    if solution.p_w.len() != case.n_buses() {
        return Err(Error::dimension("dispatch buses", case.n_buses(), solution.p_w.len()));
    }
    evaluate_commitment(
        solution.gen_cost,
        &solution.p_w,
        &case.wind_prices(),
        eval_scenarios,
    )
}

pub fn summarize_values(values: &[f64]) -> Result<CostSummary> {
    if values.is_empty() {
        return Err(Error::Empty("cost samples"));
    }
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    // sorted summation keeps the result independent of input order
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let variance = if n > 1 {
        sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let mut cdf_points: Vec<(f64, f64)> = Vec::new();
    for (k, &v) in sorted.iter().enumerate() {
        let p = (k + 1) as f64 / n as f64;
        match cdf_points.last_mut() {
            Some(last) if last.0 == v => last.1 = p,
            _ => cdf_points.push((v, p)),
        }
    }
    Ok(CostSummary {
        n,
        mean,
        variance,
        cdf_points,
    })
}

/// Mean, unbiased variance and empirical CDF of the total costs.
pub fn summarize(samples: &[CostSample]) -> Result<CostSummary> {
    let totals: Vec<f64> = samples.iter().map(|s| s.total).collect();
    summarize_values(&totals)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    Mu,
    Gamma,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Mu => "mu",
            SweepParameter::Gamma => "gamma",
        }
    }
}

/// Out-of-sample statistics of one sweep point's commitment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutOfSample {
    pub mean_total: f64,
    pub variance_total: f64,
    /// Sample CVaR of the transaction cost on the evaluation set.
    pub cvar: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub status: SolveStatus,
    /// Set when the point could not be solved at all (e.g. assembly failed).
    pub error: Option<String>,
    pub gen_cost: f64,
    pub cvar_term: f64,
    pub objective: f64,
    pub lmp: DVector<f64>,
    pub p_w: DVector<f64>,
    pub kkt_residual: f64,
    pub out_of_sample: Option<OutOfSample>,
}

impl SweepPoint {
    pub fn is_solved(&self) -> bool {
        self.error.is_none() && self.status == SolveStatus::Solved
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub beta: f64,
    /// Fixed μ for load sweeps; unused for μ sweeps.
    pub mu: Option<f64>,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    /// First grid value whose solve did not succeed.
    pub fn first_failure(&self) -> Option<f64> {
        self.points.iter().find(|p| !p.is_solved()).map(|p| p.value)
    }
}

fn check_grid(grid: &[f64], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Empty("sweep grid"));
    }
    for (k, &v) in grid.iter().enumerate() {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::validation(
                format!("{what} grid[{k}]"),
                what,
                "must be finite and non-negative",
            ));
        }
        if k > 0 && v <= grid[k - 1] {
            return Err(Error::validation(
                format!("{what} grid[{k}]"),
                what,
                "grid must be strictly increasing",
            ));
        }
    }
    Ok(())
}

fn solve_point(
    value: f64,
    case: &GridCase,
    scenarios: &ScenarioSet,
    config: &OpfConfig,
    settings: &SolverSettings,
    eval: Option<&ScenarioSet>,
) -> SweepPoint {
    let m = case.n_buses();
    let failed = |status, error: Option<String>| SweepPoint {
        value,
        status,
        error,
        gen_cost: f64::NAN,
        cvar_term: f64::NAN,
        objective: f64::NAN,
        lmp: DVector::from_element(m, f64::NAN),
        p_w: DVector::from_element(m, f64::NAN),
        kkt_residual: f64::NAN,
        out_of_sample: None,
    };
    let sol = match assemble_ap1(case, scenarios, config).and_then(|p| p.solve(settings)) {
        Ok((sol, _)) => sol,
        Err(e) => return failed(SolveStatus::NumericalError, Some(e.to_string())),
    };
    if !sol.is_solved() {
        return failed(sol.status, None);
    }
    let out_of_sample = match eval {
        Some(ev) => match out_of_sample(&sol, ev, case, config.beta) {
            Ok(o) => Some(o),
            Err(e) => return failed(SolveStatus::NumericalError, Some(e.to_string())),
        },
        None => None,
    };
    SweepPoint {
        value,
        status: sol.status,
        error: None,
        gen_cost: sol.gen_cost,
        cvar_term: sol.cvar_term,
        objective: sol.objective,
        lmp: sol.lmp,
        p_w: sol.p_w,
        kkt_residual: sol.kkt_residual,
        out_of_sample,
    }
}

fn out_of_sample(
    sol: &DispatchSolution,
    eval: &ScenarioSet,
    case: &GridCase,
    beta: RiskLevel,
) -> Result<OutOfSample> {
    let samples = evaluate_policy(sol, eval, case)?;
    let summary = summarize(&samples)?;
    let t: Vec<f64> = samples.iter().map(|s| s.transaction_cost).collect();
    Ok(OutOfSample {
        mean_total: summary.mean,
        variance_total: summary.variance,
        cvar: cvar::var_cvar(&t, beta)?.cvar,
    })
}

/// One CVaR-weighted solve per μ, in parallel, gathered in grid order.
/// Solve failures are recorded per point and do not stop the sweep.
pub fn sweep_mu(
    case: &GridCase,
    scenarios: &ScenarioSet,
    eval_scenarios: Option<&ScenarioSet>,
    mu_grid: &[f64],
    beta: f64,
    settings: &SolverSettings,
) -> Result<SweepResult> {
    check_grid(mu_grid, "mu")?;
    let base = OpfConfig::new(beta, 0.0)?;
    let points = mu_grid
        .par_iter()
        .map(|&mu| {
            let config = OpfConfig { mu, ..base };
            solve_point(mu, case, scenarios, &config, settings, eval_scenarios)
        })
        .collect();
    Ok(SweepResult {
        parameter: SweepParameter::Mu,
        beta,
        mu: None,
        points,
    })
}

/// One CVaR-weighted solve per load-overload ratio γ (loads × (1 + γ)).
pub fn sweep_overload(
    case: &GridCase,
    scenarios: &ScenarioSet,
    gamma_grid: &[f64],
    beta: f64,
    mu: f64,
    settings: &SolverSettings,
) -> Result<SweepResult> {
    check_grid(gamma_grid, "gamma")?;
    let config = OpfConfig::new(beta, mu)?;
    let cases = gamma_grid
        .iter()
        .map(|&g| scale_loads(case, g))
        .collect::<Result<Vec<_>>>()?;
    let points = gamma_grid
        .par_iter()
        .zip(cases.par_iter())
        .map(|(&g, c)| solve_point(g, c, scenarios, &config, settings, None))
        .collect();
    Ok(SweepResult {
        parameter: SweepParameter::Gamma,
        beta,
        mu: Some(mu),
        points,
    })
}
