//! CVaR-weighted dispatch on the bundled case: objective decomposition,
//! wind commitments and LMPs.

use cvar_opf::evaluate::{default_mu, DEFAULT_BETA, DEFAULT_N_SCENARIOS, DEFAULT_TRAIN_SEED};
use cvar_opf::io;
use cvar_opf::opf::{assemble_ap1, commitment_risk, OpfConfig};
use cvar_opf::scenario::sample_for_case;
use cvar_opf::solver::SolverSettings;

fn main() -> cvar_opf::Result<()> {
    let case = io::ieee30();
    let sc = sample_for_case(&case, &io::ieee30_covariance(), DEFAULT_N_SCENARIOS, DEFAULT_TRAIN_SEED)?;
    let config = OpfConfig::new(DEFAULT_BETA, default_mu())?;
    let program = assemble_ap1(&case, &sc, &config)?;
    println!(
        "{} variables, {} equalities, {} inequalities",
        program.layout.n_vars,
        program.program.n_eq(),
        program.program.n_ineq()
    );
    let (sol, report) = program.solve(&SolverSettings::default())?;
    println!("status {} after {} iterations", sol.status, report.iterations);
    println!(
        "objective {:.4} = gen {:.4} + mu * CVaR {:.4}",
        sol.objective, sol.gen_cost, sol.cvar_term
    );
    let check = commitment_risk(&case, &sol.p_w, &sc, config.beta)?;
    println!("closed-form CVaR at the commitment: {:.4} (VaR {:.4})", check.cvar, check.var);
    for &i in &case.wind_indices() {
        println!(
            "bus {:>2}: commit {:7.3} MW of {:6.2} forecast, LMP {:.4}",
            case.buses[i].id, sol.p_w[i], case.forecast_mw()[i], sol.lmp[i]
        );
    }
    Ok(())
}
