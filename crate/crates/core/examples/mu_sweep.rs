//! Sweep the risk weight over a log grid with out-of-sample statistics.

use cvar_opf::evaluate::{log_grid, sweep_mu, DEFAULT_BETA};
use cvar_opf::io;
use cvar_opf::scenario::sample_for_case;
use cvar_opf::solver::SolverSettings;

fn main() -> cvar_opf::Result<()> {
    let case = io::ieee30();
    let cov = io::ieee30_covariance();
    let train = sample_for_case(&case, &cov, 1000, 1)?;
    let eval = sample_for_case(&case, &cov, 5000, 2)?;
    let grid = log_grid(0.1, 10.0, 10)?;
    let res = sweep_mu(&case, &train, Some(&eval), &grid, DEFAULT_BETA, &SolverSettings::default())?;
    println!("{:>8} {:>10} {:>10} {:>10} {:>10}", "mu", "gen_cost", "cvar", "oos_mean", "oos_var");
    for p in &res.points {
        let o = p.out_of_sample.unwrap();
        println!(
            "{:>8.3} {:>10.3} {:>10.3} {:>10.3} {:>10.3}",
            p.value, p.gen_cost, p.cvar_term, o.mean_total, o.variance_total
        );
    }
    Ok(())
}
