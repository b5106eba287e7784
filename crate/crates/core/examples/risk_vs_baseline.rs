//! Compare the CVaR dispatch with the forecast-only baseline on fresh
//! scenarios: mean, variance and a few points of the cost CDF.

use cvar_opf::evaluate::{
    default_mu, evaluate_policy, summarize, CostSummary, DEFAULT_BETA, DEFAULT_EVAL_SEED,
    DEFAULT_N_EVAL, DEFAULT_N_SCENARIOS, DEFAULT_TRAIN_SEED,
};
use cvar_opf::io;
use cvar_opf::opf::{solve_ap1, solve_norisk, OpfConfig};
use cvar_opf::scenario::sample_for_case;
use cvar_opf::solver::SolverSettings;

fn quantile(s: &CostSummary, p: f64) -> f64 {
    s.cdf_points.iter().find(|c| c.1 >= p).map_or(f64::NAN, |c| c.0)
}

fn main() -> cvar_opf::Result<()> {
    let case = io::ieee30();
    let cov = io::ieee30_covariance();
    let train = sample_for_case(&case, &cov, DEFAULT_N_SCENARIOS, DEFAULT_TRAIN_SEED)?;
    let eval = sample_for_case(&case, &cov, DEFAULT_N_EVAL, DEFAULT_EVAL_SEED)?;
    let st = SolverSettings::default();
    let risk = solve_ap1(&case, &train, &OpfConfig::new(DEFAULT_BETA, default_mu())?, &st)?;
    let base = solve_norisk(&case, &st)?;
    for (name, sol) in [("cvar", &risk), ("no-risk", &base)] {
        let s = summarize(&evaluate_policy(sol, &eval, &case)?)?;
        println!(
            "{name:>8}: mean {:8.3}  variance {:8.3}  p50 {:8.3}  p95 {:8.3}  p99 {:8.3}",
            s.mean,
            s.variance,
            quantile(&s, 0.5),
            quantile(&s, 0.95),
            quantile(&s, 0.99)
        );
    }
    Ok(())
}
