mod common;

use common::{dc_flows, random_covariance, random_small_case, rng};
use cvar_opf::cvar::RiskLevel;
use cvar_opf::evaluate::{sweep_mu, sweep_overload};
use cvar_opf::grid_model::GridCase;
use cvar_opf::io;
use cvar_opf::opf::{self, commitment_risk, DispatchSolution, OpfConfig};
use cvar_opf::scenario::{sample_for_case, ScenarioSet};
use cvar_opf::solver::{SolveStatus, SolverSettings};
use proptest::prelude::*;

fn st() -> SolverSettings {
    SolverSettings::default()
}

fn random_instance(seed: u64, n_s: usize) -> (GridCase, ScenarioSet) {
    let mut r = rng(seed);
    let case = random_small_case(&mut r, 6, 3);
    let cov = random_covariance(&mut r, &case);
    let sc = sample_for_case(&case, &cov, n_s, seed).unwrap();
    (case, sc)
}

fn assert_feasible(case: &GridCase, sol: &DispatchSolution) {
    let tol = 1e-6;
    let balance = sol.p_g.sum() + sol.p_w.sum() - case.total_load();
    assert!(balance.abs() < tol, "balance {balance}");
    for g in &case.generators {
        let p = sol.p_g[case.bus_index(g.bus).unwrap()];
        assert!(p >= g.p_min - tol && p <= g.p_max + tol, "gen at {} = {p}", g.bus);
    }
    assert!(sol.p_w.iter().all(|&p| p >= -tol));
    let inj = &sol.p_g + &sol.p_w - case.loads_mw();
    let flows = dc_flows(case, &inj);
    for (l, f) in case.lines.iter().zip(flows.iter()) {
        assert!(f.abs() <= l.flow_limit + 1e-5, "line {}-{} carries {f}", l.from_bus, l.to_bus);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn dispatch_is_feasible(seed in any::<u64>(), mu in 0.0f64..20.0) {
        let (case, sc) = random_instance(seed, 30);
        let sol = opf::solve_ap1(&case, &sc, &OpfConfig::new(0.9, mu).unwrap(), &st()).unwrap();
        prop_assert!(sol.is_solved());
        assert_feasible(&case, &sol);
        let nr = opf::solve_norisk(&case, &st()).unwrap();
        if nr.is_solved() {
            assert_feasible(&case, &nr);
        }
    }

    #[test]
    fn cvar_term_falls_as_mu_grows(seed in any::<u64>()) {
        let (case, sc) = random_instance(seed, 25);
        let res = sweep_mu(&case, &sc, None, &[0.1, 1.0, 10.0], 0.9, &st()).unwrap();
        for w in res.points.windows(2) {
            prop_assert!(w[1].cvar_term <= w[0].cvar_term + 1e-6 * w[0].cvar_term.max(1.0));
            prop_assert!(w[1].gen_cost >= w[0].gen_cost - 1e-6 * w[0].gen_cost.max(1.0));
        }
    }

    #[test]
    fn budget_form_recovers_weighted_optimum(seed in any::<u64>(), mu in 0.2f64..5.0) {
        let (case, sc) = random_instance(seed, 20);
        let cfg = OpfConfig::new(0.9, mu).unwrap();
        let weighted = opf::solve_ap1(&case, &sc, &cfg, &st()).unwrap();
        // a budget of ~0 leaves the budget form without a strict interior
        prop_assume!(weighted.cvar_term > 1e-4);
        let budgeted = opf::solve_p2(&case, &sc, &cfg.with_budget(weighted.cvar_term).unwrap(), &st()).unwrap();
        prop_assert!(budgeted.is_solved());
        // the weighted optimum is feasible for the budget form, so it can only do better
        prop_assert!(budgeted.gen_cost <= weighted.gen_cost + 1e-5 * weighted.gen_cost.abs().max(1.0));
        // and any cheaper point within budget would beat the weighted optimum
        let weighted_obj = weighted.gen_cost + mu * weighted.cvar_term;
        let budget_obj = budgeted.gen_cost + mu * budgeted.cvar_term;
        prop_assert!(budget_obj >= weighted_obj - 1e-5 * weighted_obj.abs().max(1.0));
    }
}

#[test]
fn tiny_budget_commits_only_sure_wind() {
    let (case, sc) = random_instance(17, 40);
    let cfg = OpfConfig::new(0.9, 1.0).unwrap().with_budget(1e-6).unwrap();
    let sol = opf::solve_p2(&case, &sc, &cfg, &st()).unwrap();
    assert!(sol.is_solved());
    for &i in &case.wind_indices() {
        let floor = sc.samples.column(i).min();
        assert!(sol.p_w[i] <= floor + 1e-5, "bus {i}: {} > {floor}", sol.p_w[i]);
    }
    let risk = commitment_risk(&case, &sol.p_w, &sc, RiskLevel::new(0.9).unwrap()).unwrap();
    assert!(risk.cvar <= 1e-6 + 1e-9);
    assert!(OpfConfig::new(0.9, 1.0).unwrap().with_budget(0.0).is_err());
}

#[test]
fn unlimited_budget_matches_zero_weight() {
    let (case, sc) = random_instance(23, 40);
    let cfg = OpfConfig::new(0.9, 0.0).unwrap();
    let free = opf::solve_ap1(&case, &sc, &cfg, &st()).unwrap();
    let loose = opf::solve_p2(&case, &sc, &cfg.with_budget(f64::INFINITY).unwrap(), &st()).unwrap();
    assert!((free.gen_cost - loose.gen_cost).abs() <= 1e-6 * free.gen_cost.abs().max(1.0));
}

#[test]
fn heavy_weight_drives_commitment_below_every_scenario() {
    let case = io::ieee30();
    let sc = sample_for_case(&case, &io::ieee30_covariance(), 300, 5).unwrap();
    let sol = opf::solve_ap1(&case, &sc, &OpfConfig::new(0.95, 1e4).unwrap(), &st()).unwrap();
    assert!(sol.is_solved());
    for &i in &case.wind_indices() {
        let floor = sc.samples.column(i).min();
        assert!(sol.p_w[i] <= floor + 1e-4, "bus index {i}: {} > {floor}", sol.p_w[i]);
    }
    assert!(sol.cvar_term < 1e-3);
}

#[test]
fn single_point_sweep_matches_direct_solve() {
    let (case, sc) = random_instance(31, 30);
    let direct = opf::solve_ap1(&case, &sc, &OpfConfig::new(0.95, 2.0).unwrap(), &st()).unwrap();
    let res = sweep_mu(&case, &sc, None, &[2.0], 0.95, &st()).unwrap();
    let p = &res.points[0];
    assert_eq!(p.objective, direct.objective);
    assert_eq!(p.p_w, direct.p_w);
    assert_eq!(p.lmp, direct.lmp);
}

#[test]
fn overload_sweep_records_infeasible_points() {
    let case = io::ieee30();
    let sc = sample_for_case(&case, &io::ieee30_covariance(), 200, 1).unwrap();
    let res = sweep_overload(&case, &sc, &[0.0, 0.5], 0.95, 1.0, &st()).unwrap();
    assert!(res.points[0].is_solved());
    assert_eq!(res.points[1].status, SolveStatus::PrimalInfeasible);
    assert_eq!(res.first_failure(), Some(0.5));
}

#[test]
fn scenarios_at_non_wind_buses_are_rejected() {
    let (case, sc) = random_instance(41, 10);
    let mut bad = sc.clone();
    let non_wind = (0..case.n_buses()).find(|i| !case.wind_indices().contains(i));
    if let Some(i) = non_wind {
        bad.samples[(0, i)] = 1.0;
        assert!(opf::solve_ap1(&case, &bad, &OpfConfig::new(0.9, 1.0).unwrap(), &st()).is_err());
    }
}
