//! Risk-aware DC optimal power flow programs.
//!
//! Three formulations share the same network constraints (line limits,
//! nodal balance with the reference angle eliminated, generator bounds,
//! non-negative committed wind):
//!
//! * [`assemble_ap1`]: generation cost plus `mu` times the sample CVaR of
//!   the wind-shortfall transaction cost, written in epigraph form with
//!   per-scenario shortfall variables `v` and tail excess variables `u`.
//! * [`assemble_p2`]: generation cost subject to a budget on that CVaR.
//! * [`assemble_norisk`]: deterministic dispatch with wind fixed at forecast.
//!
//! Powers are per-unit inside the program and MW in [`DispatchSolution`].

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::cvar::{self, RiskLevel};
use crate::error::{Error, Result};
use crate::grid_model::{build_flow_matrices, GridCase};
use crate::scenario::ScenarioSet;
use crate::solver::{solve_qp, ProgramBuilder, QuadraticProgram, SolveReport, SolveStatus, SolverSettings};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpfConfig {
    pub beta: RiskLevel,
    /// Risk-aversion weight on the CVaR term.
    pub mu: f64,
    /// CVaR budget in $, used by the budget-constrained formulation.
    pub budget: Option<f64>,
    /// Cap committed wind at each farm's installed capacity when one is given.
    pub cap_committed_wind: bool,
}

impl OpfConfig {
    pub fn new(beta: f64, mu: f64) -> Result<Self> {
        let c = OpfConfig {
            beta: RiskLevel::new(beta)?,
            mu,
            budget: None,
            cap_committed_wind: true,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_budget(mut self, budget: f64) -> Result<Self> {
        self.budget = Some(budget);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(Error::validation("opf config", "mu", "must be finite and non-negative"));
        }
        if let Some(b) = self.budget {
            if b.is_nan() || b <= 0.0 {
                return Err(Error::validation("opf config", "budget", "must be positive"));
            }
        }
        Ok(())
    }
}

/// How the deterministic baseline treats wind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoRiskWind {
    /// Wind injected at exactly the forecast.
    #[default]
    Fixed,
    /// Wind may be curtailed anywhere in `[0, forecast]` at no cost.
    Curtailable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Formulation {
    RiskWeighted,
    RiskBudget { budget: f64 },
    NoRisk(NoRiskWind),
}

/// Position of every named decision variable in the program's vector.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableLayout {
    /// Bus index of each generator variable.
    pub gen_buses: Vec<usize>,
    /// Bus index of each committed-wind variable.
    pub wind_buses: Vec<usize>,
    /// Bus index of each phase-angle variable (reference bus excluded).
    pub theta_buses: Vec<usize>,
    pub p_g: Range<usize>,
    pub p_w: Range<usize>,
    pub theta: Range<usize>,
    pub eta: Option<usize>,
    /// Positions within `wind_buses` that carry shortfall variables
    /// (farms with a positive price).
    pub priced_wind: Vec<usize>,
    /// Shortfall variables, scenario-major: `v[s * priced_wind.len() + k]`.
    pub v: Range<usize>,
    pub u: Range<usize>,
    pub n_scenarios: usize,
    pub n_vars: usize,
}

impl VariableLayout {
    pub fn v_index(&self, scenario: usize, k: usize) -> usize {
        self.v.start + scenario * self.priced_wind.len() + k
    }

    pub fn has_risk_block(&self) -> bool {
        self.eta.is_some()
    }
}

/// An assembled program plus everything needed to map a solve back to a
/// dispatch.
#[derive(Debug, Clone)]
pub struct ConvexProgram {
    pub program: QuadraticProgram,
    pub layout: VariableLayout,
    pub formulation: Formulation,
    /// Equality rows holding nodal balance, in bus-index order.
    pub balance_rows: Range<usize>,
    pub beta: RiskLevel,
    pub mu: f64,
    pub base_mva: f64,
    pub n_buses: usize,
    /// Quadratic and linear cost coefficients per generator variable.
    gen_costs: Vec<(f64, f64)>,
    /// Shortfall price per wind variable.
    wind_prices: Vec<f64>,
    /// Wind injected as a constant (MW, M-vector), for the fixed baseline.
    fixed_wind: DVector<f64>,
    /// Realizations restricted to the wind buses (N_s × W), MW.
    wind_samples: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispatchSolution {
    /// Conventional output per bus, MW.
    pub p_g: DVector<f64>,
    /// Committed wind per bus, MW.
    pub p_w: DVector<f64>,
    /// Phase angles, radians, reference bus at 0.
    pub theta: DVector<f64>,
    /// VaR level of the shortfall cost, $.
    pub eta: f64,
    pub gen_cost: f64,
    /// `eta + Σ u / (N (1 − β))`, $. Zero for the no-risk baseline.
    pub cvar_term: f64,
    /// `gen_cost + mu * cvar_term`, $ (mu is 0 for the budget and no-risk forms).
    pub objective: f64,
    /// Locational marginal prices, $/MWh.
    pub lmp: DVector<f64>,
    pub kkt_residual: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    /// Shortfall variables (N_s × priced farms, MW), when the risk block exists.
    pub shortfall: Option<DMatrix<f64>>,
    /// Tail excess variables, $, when the risk block exists.
    pub tail: Option<DVector<f64>>,
}

impl DispatchSolution {
    pub fn is_solved(&self) -> bool {
        self.status == SolveStatus::Solved
    }

    pub fn total_generation(&self) -> f64 {
        self.p_g.sum()
    }
}

fn check_scenarios(case: &GridCase, scenarios: &ScenarioSet) -> Result<()> {
    let m = case.n_buses();
    if scenarios.n_buses() != m {
        return Err(Error::dimension("scenario bus columns", m, scenarios.n_buses()));
    }
    let wind = case.wind_indices();
    for i in 0..m {
        if !wind.contains(&i) && scenarios.samples.column(i).amax() != 0.0 {
            return Err(Error::validation(
                "scenarios",
                format!("bus {}", case.buses[i].id),
                "wind realizations at a bus without a wind farm",
            ));
        }
    }
    Ok(())
}

struct Assembly {
    builder: ProgramBuilder,
    layout: VariableLayout,
    balance_rows: Range<usize>,
}

/// Variables and network constraints common to every formulation.
fn assemble_network(
    case: &GridCase,
    wind_vars: bool,
    n_scenarios: usize,
    risk_block: bool,
    config_cap: bool,
    curtail_cap: Option<&DVector<f64>>,
    fixed_wind: &DVector<f64>,
) -> Result<Assembly> {
    let fm = build_flow_matrices(case)?;
    let base = case.base_mva;
    let m = case.n_buses();
    let r = case.reference_index();

    let gen_buses = case.generator_indices();
    let wind_buses = if wind_vars { case.wind_indices() } else { Vec::new() };
    let theta_buses: Vec<usize> = (0..m).filter(|&i| i != r).collect();
    let priced_wind: Vec<usize> = if risk_block {
        (0..wind_buses.len())
            .filter(|&k| case.wind_farms[k].purchase_price > 0.0)
            .collect()
    } else {
        Vec::new()
    };

    let p_g = 0..gen_buses.len();
    let p_w = p_g.end..p_g.end + wind_buses.len();
    let theta = p_w.end..p_w.end + theta_buses.len();
    let (eta, v, u) = if risk_block {
        let eta = theta.end;
        let v = eta + 1..eta + 1 + n_scenarios * priced_wind.len();
        let u = v.end..v.end + n_scenarios;
        (Some(eta), v, u)
    } else {
        (None, theta.end..theta.end, theta.end..theta.end)
    };
    let n_vars = if risk_block { u.end } else { theta.end };
    let layout = VariableLayout {
        gen_buses,
        wind_buses,
        theta_buses,
        p_g,
        p_w,
        theta,
        eta,
        priced_wind,
        v,
        u,
        n_scenarios: if risk_block { n_scenarios } else { 0 },
        n_vars,
    };

    let mut b = ProgramBuilder::new(n_vars);
    // generation cost, per-unit variables
    for (k, g) in case.generators.iter().enumerate() {
        let j = layout.p_g.start + k;
        if g.cost_quad != 0.0 {
            b.add_hessian(j, j, 2.0 * g.cost_quad * base * base);
        }
        b.add_linear(j, g.cost_lin * base);
    }

    // nodal balance: p_G + p_W - B θ = p_D - fixed wind
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for (k, &bus) in layout.gen_buses.iter().enumerate() {
        rows[bus].push((layout.p_g.start + k, 1.0));
    }
    for (k, &bus) in layout.wind_buses.iter().enumerate() {
        rows[bus].push((layout.p_w.start + k, 1.0));
    }
    for (t, &bus_j) in layout.theta_buses.iter().enumerate() {
        for (i, row) in rows.iter_mut().enumerate() {
            let bij = fm.admittance[(i, bus_j)];
            if bij != 0.0 {
                row.push((layout.theta.start + t, -bij));
            }
        }
    }
    let start = b.n_eq();
    for (i, row) in rows.iter().enumerate() {
        let rhs = (case.buses[i].base_load - fixed_wind[i]) / base;
        b.add_eq(row, rhs);
    }
    let balance_rows = start..b.n_eq();

    // line limits
    for (n, line) in case.lines.iter().enumerate() {
        if !line.flow_limit.is_finite() {
            continue;
        }
        let coefs: Vec<(usize, f64)> = layout
            .theta_buses
            .iter()
            .enumerate()
            .filter_map(|(t, &bus)| {
                let h = fm.flow[(n, bus)];
                (h != 0.0).then_some((layout.theta.start + t, h))
            })
            .collect();
        let lim = line.flow_limit / base;
        b.add_ineq(&coefs, lim);
        let neg: Vec<(usize, f64)> = coefs.iter().map(|&(j, h)| (j, -h)).collect();
        b.add_ineq(&neg, lim);
    }

    // generator limits
    for (k, g) in case.generators.iter().enumerate() {
        let j = layout.p_g.start + k;
        if g.p_max - g.p_min <= 1e-12 * g.p_max.max(1.0) {
            b.add_eq(&[(j, 1.0)], g.p_max / base);
        } else {
            b.add_ineq(&[(j, 1.0)], g.p_max / base);
            b.add_ineq(&[(j, -1.0)], -g.p_min / base);
        }
    }

    // committed wind
    for (k, w) in case.wind_farms.iter().enumerate().take(layout.wind_buses.len()) {
        let j = layout.p_w.start + k;
        b.add_ineq(&[(j, -1.0)], 0.0);
        let cap = match curtail_cap {
            Some(f) => Some(f[layout.wind_buses[k]]),
            None if config_cap => w.capacity,
            None => None,
        };
        if let Some(cap) = cap {
            b.add_ineq(&[(j, 1.0)], cap / base);
        }
    }

    Ok(Assembly {
        builder: b,
        layout,
        balance_rows,
    })
}

/// Adds the epigraph rows `v ≥ p_W − w_s`, `v ≥ 0`, `η + u_s ≥ c_Wᵀ v_s`, `u ≥ 0`.
fn add_risk_rows(asm: &mut Assembly, case: &GridCase, samples: &DMatrix<f64>) {
    let base = case.base_mva;
    let lay = &asm.layout;
    let b = &mut asm.builder;
    let eta = lay.eta.expect("risk block present");
    for s in 0..lay.n_scenarios {
        let mut tail_row = Vec::with_capacity(lay.priced_wind.len() + 2);
        for (k, &wk) in lay.priced_wind.iter().enumerate() {
            let vj = lay.v_index(s, k);
            let pj = lay.p_w.start + wk;
            let bus = lay.wind_buses[wk];
            b.add_ineq(&[(pj, 1.0), (vj, -1.0)], samples[(s, bus)] / base);
            b.add_ineq(&[(vj, -1.0)], 0.0);
            tail_row.push((vj, case.wind_farms[wk].purchase_price * base));
        }
        let uj = lay.u.start + s;
        tail_row.push((eta, -1.0));
        tail_row.push((uj, -1.0));
        b.add_ineq(&tail_row, 0.0);
        b.add_ineq(&[(uj, -1.0)], 0.0);
    }
}

fn wind_columns(case: &GridCase, scenarios: &ScenarioSet) -> DMatrix<f64> {
    let idx = case.wind_indices();
    DMatrix::from_fn(scenarios.n_scenarios(), idx.len(), |s, k| {
        scenarios.samples[(s, idx[k])]
    })
}

fn finish(
    asm: Assembly,
    case: &GridCase,
    formulation: Formulation,
    beta: RiskLevel,
    mu: f64,
    fixed_wind: DVector<f64>,
    wind_samples: Option<DMatrix<f64>>,
) -> Result<ConvexProgram> {
    let wind_prices = asm
        .layout
        .wind_buses
        .iter()
        .enumerate()
        .map(|(k, _)| case.wind_farms[k].purchase_price)
        .collect();
    Ok(ConvexProgram {
        program: asm.builder.build()?,
        layout: asm.layout,
        formulation,
        balance_rows: asm.balance_rows,
        beta,
        mu,
        base_mva: case.base_mva,
        n_buses: case.n_buses(),
        gen_costs: case
            .generators
            .iter()
            .map(|g| (g.cost_quad, g.cost_lin))
            .collect(),
        wind_prices,
        fixed_wind,
        wind_samples,
    })
}

/// CVaR-weighted dispatch over a scenario set.
///
/// With `mu = 0` the CVaR block carries no weight; it is left out of the
/// program and the CVaR of the resulting commitment is evaluated afterwards.
pub fn assemble_ap1(
    case: &GridCase,
    scenarios: &ScenarioSet,
    config: &OpfConfig,
) -> Result<ConvexProgram> {
    config.validate()?;
    check_scenarios(case, scenarios)?;
    let n_s = scenarios.n_scenarios();
    let risk = config.mu > 0.0;
    let zero = DVector::zeros(case.n_buses());
    let mut asm = assemble_network(case, true, n_s, risk, config.cap_committed_wind, None, &zero)?;
    if risk {
        add_risk_rows(&mut asm, case, &scenarios.samples);
        let eta = asm.layout.eta.expect("risk block");
        let w = config.beta.tail_weight(n_s);
        asm.builder.add_linear(eta, config.mu);
        for j in asm.layout.u.clone() {
            asm.builder.add_linear(j, config.mu * w);
        }
    }
    finish(
        asm,
        case,
        Formulation::RiskWeighted,
        config.beta,
        config.mu,
        zero,
        Some(wind_columns(case, scenarios)),
    )
}

/// Minimum generation cost with the sample CVaR of the shortfall cost
/// capped at `config.budget`.
pub fn assemble_p2(
    case: &GridCase,
    scenarios: &ScenarioSet,
    config: &OpfConfig,
) -> Result<ConvexProgram> {
    config.validate()?;
    let budget = config.budget.ok_or_else(|| {
        Error::validation("opf config", "budget", "the budget formulation needs a budget")
    })?;
    check_scenarios(case, scenarios)?;
    let n_s = scenarios.n_scenarios();
    let zero = DVector::zeros(case.n_buses());
    let mut asm = assemble_network(case, true, n_s, true, config.cap_committed_wind, None, &zero)?;
    add_risk_rows(&mut asm, case, &scenarios.samples);
    let eta = asm.layout.eta.expect("risk block");
    let w = config.beta.tail_weight(n_s);
    let mut row = vec![(eta, 1.0)];
    row.extend(asm.layout.u.clone().map(|j| (j, w)));
    // an infinite budget leaves the row out entirely
    if budget.is_finite() {
        asm.builder.add_ineq(&row, budget);
    }
    finish(
        asm,
        case,
        Formulation::RiskBudget { budget },
        config.beta,
        0.0,
        zero,
        Some(wind_columns(case, scenarios)),
    )
}

/// Deterministic dispatch with wind injected at its forecast.
pub fn assemble_norisk(case: &GridCase) -> Result<ConvexProgram> {
    assemble_norisk_with(case, NoRiskWind::Fixed)
}

pub fn assemble_norisk_with(case: &GridCase, wind: NoRiskWind) -> Result<ConvexProgram> {
    let forecast = case.forecast_mw();
    let beta = RiskLevel::new(0.5)?;
    let asm = match wind {
        NoRiskWind::Fixed => assemble_network(case, false, 0, false, false, None, &forecast)?,
        NoRiskWind::Curtailable => {
            let zero = DVector::zeros(case.n_buses());
            assemble_network(case, true, 0, false, false, Some(&forecast), &zero)?
        }
    };
    let fixed = match wind {
        NoRiskWind::Fixed => forecast,
        NoRiskWind::Curtailable => DVector::zeros(case.n_buses()),
    };
    finish(asm, case, Formulation::NoRisk(wind), beta, 0.0, fixed, None)
}

/// Locational marginal prices in $/MWh from the nodal-balance multipliers.
///
/// With the stationarity convention of the solver, the sensitivity of the
/// optimal cost to the load at bus m is `-λ_m` per unit, i.e. `-λ_m / base` per MW.
pub fn extract_lmp(report: &SolveReport, program: &ConvexProgram) -> Result<DVector<f64>> {
    if !report.is_solved() {
        return Err(Error::Solve(format!(
            "no multipliers available: solver status {}",
            report.status
        )));
    }
    if report.eq_duals.len() < program.balance_rows.end {
        return Err(Error::dimension(
            "equality multipliers",
            program.balance_rows.end,
            report.eq_duals.len(),
        ));
    }
    Ok(DVector::from_iterator(
        program.n_buses,
        report.eq_duals[program.balance_rows.clone()]
            .iter()
            .map(|l| -l / program.base_mva),
    ))
}

/// Per-scenario shortfall cost of a commitment (wind-bus columns only).
fn scenario_costs(p_w_wind: &[f64], samples: &DMatrix<f64>, prices: &[f64]) -> Result<Vec<f64>> {
    (0..samples.nrows())
        .map(|s| {
            let w: Vec<f64> = samples.row(s).iter().copied().collect();
            cvar::transaction_cost(p_w_wind, &w, prices)
        })
        .collect()
}

/// Map a solver report back to named quantities.
pub fn extract_solution(program: &ConvexProgram, report: &SolveReport) -> Result<DispatchSolution> {
    let lay = &program.layout;
    let base = program.base_mva;
    let x = &report.primal;
    if x.len() != lay.n_vars {
        return Err(Error::dimension("primal vector", lay.n_vars, x.len()));
    }
    let m = program.n_buses;
    let mut p_g = DVector::zeros(m);
    let mut gen_cost = 0.0;
    for (k, &bus) in lay.gen_buses.iter().enumerate() {
        let mw = x[lay.p_g.start + k] * base;
        p_g[bus] = mw;
        let (c, d) = program.gen_costs[k];
        gen_cost += c * mw * mw + d * mw;
    }
    let mut p_w = program.fixed_wind.clone();
    for (k, &bus) in lay.wind_buses.iter().enumerate() {
        p_w[bus] = x[lay.p_w.start + k] * base;
    }
    let mut theta = DVector::zeros(m);
    for (t, &bus) in lay.theta_buses.iter().enumerate() {
        theta[bus] = x[lay.theta.start + t];
    }

    let (eta, cvar_term, shortfall, tail) = match (program.formulation, lay.eta) {
        (Formulation::NoRisk(_), _) => (0.0, 0.0, None, None),
        (_, Some(eta_j)) => {
            let n_s = lay.n_scenarios;
            let eta = x[eta_j];
            let u = DVector::from_iterator(n_s, x[lay.u.clone()].iter().copied());
            let cvar_term = eta + program.beta.tail_weight(n_s) * u.sum();
            let kp = lay.priced_wind.len();
            let v = DMatrix::from_fn(n_s, kp, |s, k| x[lay.v_index(s, k)] * base);
            (eta, cvar_term, Some(v), Some(u))
        }
        (_, None) => {
            let samples = program
                .wind_samples
                .as_ref()
                .expect("scenario formulations keep their samples");
            let pw: Vec<f64> = lay.wind_buses.iter().map(|&b| p_w[b]).collect();
            let costs = scenario_costs(&pw, samples, &program.wind_prices)?;
            let r = cvar::var_cvar(&costs, program.beta)?;
            (r.var, r.cvar, None, None)
        }
    };
    let lmp = if report.is_solved() {
        extract_lmp(report, program)?
    } else {
        DVector::from_element(m, f64::NAN)
    };
    Ok(DispatchSolution {
        p_g,
        p_w,
        theta,
        eta,
        gen_cost,
        cvar_term,
        objective: gen_cost + program.mu * cvar_term,
        lmp,
        kkt_residual: report.kkt_residual(),
        status: report.status,
        iterations: report.iterations,
        shortfall,
        tail,
    })
}

impl ConvexProgram {
    pub fn solve(&self, settings: &SolverSettings) -> Result<(DispatchSolution, SolveReport)> {
        let report = solve_qp(&self.program, settings)?;
        let sol = extract_solution(self, &report)?;
        Ok((sol, report))
    }

    /// Realizations at the wind buses (N_s × W), if the program was built from scenarios.
    pub fn wind_samples(&self) -> Option<&DMatrix<f64>> {
        self.wind_samples.as_ref()
    }
}

/// Assemble and solve the CVaR-weighted dispatch.
pub fn solve_ap1(
    case: &GridCase,
    scenarios: &ScenarioSet,
    config: &OpfConfig,
    settings: &SolverSettings,
) -> Result<DispatchSolution> {
    Ok(assemble_ap1(case, scenarios, config)?.solve(settings)?.0)
}

pub fn solve_p2(
    case: &GridCase,
    scenarios: &ScenarioSet,
    config: &OpfConfig,
    settings: &SolverSettings,
) -> Result<DispatchSolution> {
    Ok(assemble_p2(case, scenarios, config)?.solve(settings)?.0)
}

pub fn solve_norisk(case: &GridCase, settings: &SolverSettings) -> Result<DispatchSolution> {
    Ok(assemble_norisk(case)?.solve(settings)?.0)
}

/// Sample CVaR (and VaR) of the shortfall cost of a commitment over a scenario set.
pub fn commitment_risk(
    case: &GridCase,
    p_w: &DVector<f64>,
    scenarios: &ScenarioSet,
    beta: RiskLevel,
) -> Result<cvar::RiskResult> {
    check_scenarios(case, scenarios)?;
    let prices: Vec<f64> = case.wind_prices().iter().copied().collect();
    let pw: Vec<f64> = p_w.iter().copied().collect();
    let costs = (0..scenarios.n_scenarios())
        .map(|s| cvar::transaction_cost(&pw, &scenarios.row(s), &prices))
        .collect::<Result<Vec<_>>>()?;
    cvar::var_cvar(&costs, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_model::{Bus, Generator, Line, WindFarm};
    use approx::assert_relative_eq;

    fn single_bus(load: f64) -> GridCase {
        GridCase::new(
            vec![Bus { id: 1, base_load: load }],
            vec![],
            vec![Generator {
                bus: 1,
                p_min: 0.0,
                p_max: 100.0,
                cost_quad: 0.02,
                cost_lin: 2.0,
            }],
            vec![],
            1,
            100.0,
        )
        .unwrap()
    }

    fn three_bus() -> GridCase {
        GridCase::new(
            vec![
                Bus { id: 1, base_load: 0.0 },
                Bus { id: 2, base_load: 30.0 },
                Bus { id: 3, base_load: 60.0 },
            ],
            vec![
                Line { from_bus: 1, to_bus: 2, reactance: 0.1, flow_limit: 100.0 },
                Line { from_bus: 2, to_bus: 3, reactance: 0.1, flow_limit: 100.0 },
                Line { from_bus: 1, to_bus: 3, reactance: 0.1, flow_limit: 100.0 },
            ],
            vec![
                Generator { bus: 1, p_min: 0.0, p_max: 150.0, cost_quad: 0.01, cost_lin: 2.0 },
                Generator { bus: 3, p_min: 0.0, p_max: 150.0, cost_quad: 0.03, cost_lin: 3.0 },
            ],
            vec![WindFarm { bus: 2, purchase_price: 4.0, forecast: 20.0, capacity: None }],
            1,
            100.0,
        )
        .unwrap()
    }

    fn settings() -> SolverSettings {
        SolverSettings::default()
    }

    #[test]
    fn single_bus_lmp_is_marginal_cost() {
        let case = single_bus(40.0);
        let sol = solve_norisk(&case, &settings()).unwrap();
        assert!(sol.is_solved());
        assert_relative_eq!(sol.p_g[0], 40.0, epsilon = 1e-6);
        assert_relative_eq!(sol.lmp[0], 2.0 * 0.02 * 40.0 + 2.0, epsilon = 1e-6);
    }

    #[test]
    fn norisk_balances_load_minus_forecast() {
        let case = three_bus();
        let sol = solve_norisk(&case, &settings()).unwrap();
        assert!(sol.is_solved());
        assert_relative_eq!(sol.total_generation(), 90.0 - 20.0, epsilon = 1e-6);
        assert_eq!(sol.p_w[1], 20.0);
    }

    #[test]
    fn zero_forecast_norisk_is_plain_dispatch() {
        let mut case = three_bus();
        case.wind_farms[0].forecast = 0.0;
        let sol = solve_norisk(&case, &settings()).unwrap();
        assert_relative_eq!(sol.total_generation(), 90.0, epsilon = 1e-6);
    }

    #[test]
    fn curtailable_baseline_respects_forecast() {
        let case = three_bus();
        let prog = assemble_norisk_with(&case, NoRiskWind::Curtailable).unwrap();
        let (sol, _) = prog.solve(&settings()).unwrap();
        assert!(sol.is_solved());
        assert!(sol.p_w[1] <= 20.0 + 1e-6);
        // free wind is always worth taking here
        assert_relative_eq!(sol.p_w[1], 20.0, epsilon = 1e-5);
    }

    fn forecast_scenarios(case: &GridCase, n: usize) -> ScenarioSet {
        crate::scenario::sample_scenarios(
            &case.forecast_mw(),
            &DMatrix::zeros(case.n_buses(), case.n_buses()),
            n,
            0,
        )
        .unwrap()
    }

    #[test]
    fn layout_dimensions() {
        let case = three_bus();
        let sc = forecast_scenarios(&case, 7);
        let p = assemble_ap1(&case, &sc, &OpfConfig::new(0.95, 1.0).unwrap()).unwrap();
        let l = &p.layout;
        assert_eq!(l.p_g.len(), 2);
        assert_eq!(l.p_w.len(), 1);
        assert_eq!(l.theta.len(), 2);
        assert_eq!(l.v.len(), 7);
        assert_eq!(l.u.len(), 7);
        assert_eq!(l.n_vars, 2 + 1 + 2 + 1 + 7 + 7);
        assert_eq!(p.program.n_vars(), l.n_vars);
    }

    #[test]
    fn exact_forecast_scenario_has_no_risk() {
        let case = three_bus();
        let sc = forecast_scenarios(&case, 1);
        let cfg = OpfConfig::new(0.95, 1.0).unwrap();
        let sol = solve_ap1(&case, &sc, &cfg, &settings()).unwrap();
        assert!(sol.is_solved());
        // committing more than 20 MW costs 4/(1-0.95) = 80 $/MWh of CVaR, far above LMP
        assert!(sol.p_w[1] <= 20.0 + 1e-5);
        assert!(sol.cvar_term.abs() < 1e-5, "{}", sol.cvar_term);
    }

    #[test]
    fn mu_zero_drops_risk_block() {
        let case = three_bus();
        let sc = forecast_scenarios(&case, 3);
        let cfg = OpfConfig::new(0.95, 0.0).unwrap();
        let prog = assemble_ap1(&case, &sc, &cfg).unwrap();
        assert!(!prog.layout.has_risk_block());
        let (sol, _) = prog.solve(&settings()).unwrap();
        assert!(sol.is_solved());
        // free wind displaces all conventional output the network allows
        assert!(sol.p_w[1] > 20.0);
        assert_relative_eq!(sol.objective, sol.gen_cost);
        assert!(sol.cvar_term > 0.0);
    }

    #[test]
    fn p2_requires_budget() {
        let case = three_bus();
        let sc = forecast_scenarios(&case, 2);
        let cfg = OpfConfig::new(0.95, 0.0).unwrap();
        assert!(assemble_p2(&case, &sc, &cfg).is_err());
        assert!(cfg.with_budget(-1.0).is_err());
    }

    #[test]
    fn rejects_negative_mu_and_bad_scenarios() {
        assert!(OpfConfig::new(0.95, -1.0).is_err());
        let case = three_bus();
        let bad = ScenarioSet::from_samples(
            DMatrix::from_element(2, 3, 1.0),
            DVector::zeros(3),
            0,
            DMatrix::zeros(3, 3),
        )
        .unwrap();
        let cfg = OpfConfig::new(0.95, 1.0).unwrap();
        assert!(assemble_ap1(&case, &bad, &cfg).is_err());
        let narrow = ScenarioSet::from_samples(
            DMatrix::zeros(2, 2),
            DVector::zeros(2),
            0,
            DMatrix::zeros(2, 2),
        )
        .unwrap();
        assert!(matches!(
            assemble_ap1(&case, &narrow, &cfg),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn lmp_needs_solved_report() {
        let case = three_bus();
        let prog = assemble_norisk(&case).unwrap();
        let mut report = solve_qp(&prog.program, &settings()).unwrap();
        report.status = SolveStatus::MaxIterations;
        assert!(extract_lmp(&report, &prog).is_err());
    }
}
