//! The interior-point QP solver on its own: a small portfolio-style problem.

use cvar_opf::solver::{solve_qp, ProgramBuilder, SolverSettings};

fn main() -> cvar_opf::Result<()> {
    // min ½ xᵀΣx − rᵀx  s.t. 1ᵀx = 1, 0 ≤ x ≤ 0.6
    let sigma = [[0.10, 0.02, 0.01], [0.02, 0.08, 0.03], [0.01, 0.03, 0.12]];
    let r = [0.05, 0.07, 0.09];
    let mut pb = ProgramBuilder::new(3);
    for i in 0..3 {
        for j in i..3 {
            pb.add_hessian(i, j, sigma[i][j]);
        }
        pb.add_linear(i, -r[i]);
        pb.add_ineq(&[(i, -1.0)], 0.0);
        pb.add_ineq(&[(i, 1.0)], 0.6);
    }
    pb.add_eq(&[(0, 1.0), (1, 1.0), (2, 1.0)], 1.0);
    let rep = solve_qp(&pb.build()?, &SolverSettings::default())?;
    println!("status {} in {} iterations", rep.status, rep.iterations);
    println!("x = {:?}", rep.primal);
    println!("objective {:.6}, budget dual {:.6}", rep.objective, rep.eq_duals[0]);
    println!(
        "residuals: primal {:.1e} dual {:.1e} gap {:.1e}",
        rep.primal_residual, rep.dual_residual, rep.complementarity_gap
    );
    Ok(())
}
