//! Scale every load by 1 + gamma and watch congestion separate the LMPs.

use cvar_opf::evaluate::{default_mu, sweep_overload, DEFAULT_BETA};
use cvar_opf::io;
use cvar_opf::scenario::sample_for_case;
use cvar_opf::solver::SolverSettings;

fn main() -> cvar_opf::Result<()> {
    let case = io::ieee30();
    let sc = sample_for_case(&case, &io::ieee30_covariance(), 1000, 1)?;
    let grid = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
    let res = sweep_overload(&case, &sc, &grid, DEFAULT_BETA, default_mu(), &SolverSettings::default())?;
    for p in &res.points {
        if p.is_solved() {
            println!(
                "gamma {:.1}: objective {:8.3}  LMP {:.3}..{:.3}",
                p.value,
                p.objective,
                p.lmp.min(),
                p.lmp.max()
            );
        } else {
            println!("gamma {:.1}: {}", p.value, p.status);
        }
    }
    Ok(())
}
