//! Budget form: minimize generation cost with the CVaR capped at a budget.
//! Tightening the budget shifts load from wind to generators.

use cvar_opf::io;
use cvar_opf::opf::{solve_p2, OpfConfig};
use cvar_opf::scenario::sample_for_case;
use cvar_opf::solver::SolverSettings;

fn main() -> cvar_opf::Result<()> {
    let case = io::ieee30();
    let sc = sample_for_case(&case, &io::ieee30_covariance(), 500, 1)?;
    let base = OpfConfig::new(0.95, 0.0)?;
    println!("{:>8} {:>10} {:>10} {:>10}", "budget", "gen_cost", "cvar", "wind_mw");
    for budget in [400.0, 300.0, 200.0, 100.0, 50.0, 10.0] {
        let sol = solve_p2(&case, &sc, &base.with_budget(budget)?, &SolverSettings::default())?;
        println!(
            "{budget:>8} {:>10.3} {:>10.3} {:>10.3} {}",
            sol.gen_cost,
            sol.cvar_term,
            sol.p_w.sum(),
            sol.status
        );
    }
    Ok(())
}
