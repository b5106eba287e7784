//! Sample VaR/CVaR of a loss vector and the auxiliary function they minimize.

use cvar_opf::cvar::{f_beta_hat, transaction_cost, var_cvar, RiskLevel};

fn main() -> cvar_opf::Result<()> {
    let losses = [0.0, 0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 8.0, 13.0, 40.0];
    for b in [0.5, 0.8, 0.9] {
        let beta = RiskLevel::new(b)?;
        let r = var_cvar(&losses, beta)?;
        println!("beta={b}: VaR={} CVaR={:.4}", r.var, r.cvar);
        for eta in [r.var - 1.0, r.var, r.var + 1.0] {
            println!("  F({eta}) = {:.4}", f_beta_hat(&losses, eta, beta)?);
        }
    }
    // committing 10 MW at a farm that delivers 7 MW costs 3 MW at the price
    let t = transaction_cost(&[10.0, 4.0], &[7.0, 5.0], &[5.57, 3.0])?;
    println!("transaction cost: {t:.2} $");
    Ok(())
}
