//! DC power-flow matrices of the bundled 30-bus case and the flows of a
//! no-risk dispatch.

use cvar_opf::grid_model::{build_flow_matrices, line_flows};
use cvar_opf::io;
use cvar_opf::opf::solve_norisk;
use cvar_opf::solver::SolverSettings;

fn main() -> cvar_opf::Result<()> {
    let case = io::ieee30();
    let fm = build_flow_matrices(&case)?;
    println!(
        "{} buses, {} lines, incidence {}x{}, total load {:.1} MW",
        case.n_buses(),
        case.n_lines(),
        fm.incidence.nrows(),
        fm.incidence.ncols(),
        case.total_load()
    );
    let sol = solve_norisk(&case, &SolverSettings::default())?;
    let flows = line_flows(&fm, &sol.theta)?;
    let mut loading: Vec<(usize, f64)> = case
        .lines
        .iter()
        .enumerate()
        .filter(|(_, l)| l.flow_limit.is_finite())
        .map(|(k, l)| (k, flows[k].abs() / l.flow_limit))
        .collect();
    loading.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("most loaded lines:");
    for &(k, r) in loading.iter().take(5) {
        let l = &case.lines[k];
        println!("  {:>2}-{:<2} {:7.2} MW  {:5.1}% of limit", l.from_bus, l.to_bus, flows[k], 100.0 * r);
    }
    Ok(())
}
