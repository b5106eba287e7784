//! Transmission network description and the DC power-flow matrices.
//!
//! Buses are addressed externally by their integer id and internally by
//! their position in the id-sorted bus list ("bus index"). All matrices are
//! expressed in bus-index order.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: usize,
    /// Non-dispatchable demand, MW.
    pub base_load: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub from_bus: usize,
    pub to_bus: usize,
    /// Series reactance, per-unit on the case base.
    pub reactance: f64,
    /// Thermal limit in MW. `f64::INFINITY` means unconstrained.
    pub flow_limit: f64,
}

/// Conventional unit with cost `cost_quad * p^2 + cost_lin * p` ($/h, p in MW).
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub bus: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub cost_quad: f64,
    pub cost_lin: f64,
}

impl Generator {
    pub fn cost(&self, p_mw: f64) -> f64 {
        self.cost_quad * p_mw * p_mw + self.cost_lin * p_mw
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindFarm {
    pub bus: usize,
    /// Real-time price paid per MW of shortfall, $/MWh.
    pub purchase_price: f64,
    /// Day-ahead forecast output, MW.
    pub forecast: f64,
    /// Installed capacity, MW. Only used when a dispatch caps committed wind.
    pub capacity: Option<f64>,
}

/// A validated network case.
///
/// Construct through [`GridCase::new`], which canonicalizes the bus order and
/// checks every invariant; the fields stay public for read access.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCase {
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
    pub wind_farms: Vec<WindFarm>,
    pub reference_bus: usize,
    pub base_mva: f64,
}

impl GridCase {
    pub fn new(
        mut buses: Vec<Bus>,
        lines: Vec<Line>,
        generators: Vec<Generator>,
        wind_farms: Vec<WindFarm>,
        reference_bus: usize,
        base_mva: f64,
    ) -> Result<Self> {
        buses.sort_by_key(|b| b.id);
        let case = GridCase {
            buses,
            lines,
            generators,
            wind_farms,
            reference_bus,
            base_mva,
        };
        case.validate()?;
        Ok(case)
    }

    pub fn validate(&self) -> Result<()> {
        if self.buses.is_empty() {
            return Err(Error::validation("case", "buses", "bus list is empty"));
        }
        if !(self.base_mva.is_finite() && self.base_mva > 0.0) {
            return Err(Error::validation("case", "base_mva", "must be positive"));
        }
        for (k, bus) in self.buses.iter().enumerate() {
            if k > 0 && self.buses[k - 1].id == bus.id {
                return Err(Error::validation(
                    format!("bus[{k}]"),
                    "id",
                    format!("duplicate bus id {}", bus.id),
                ));
            }
            if !(bus.base_load.is_finite() && bus.base_load >= 0.0) {
                return Err(Error::validation(
                    format!("bus {}", bus.id),
                    "load_mw",
                    "must be finite and non-negative",
                ));
            }
        }
        if self.bus_index(self.reference_bus).is_none() {
            return Err(Error::validation(
                "case",
                "reference_bus",
                format!("bus {} does not exist", self.reference_bus),
            ));
        }
        for (k, line) in self.lines.iter().enumerate() {
            let rec = format!("line[{k}]");
            for (field, id) in [("from", line.from_bus), ("to", line.to_bus)] {
                if self.bus_index(id).is_none() {
                    return Err(Error::validation(&rec, field, format!("unknown bus {id}")));
                }
            }
            if line.from_bus == line.to_bus {
                return Err(Error::validation(&rec, "to", "line connects a bus to itself"));
            }
            if !(line.reactance.is_finite() && line.reactance > 0.0) {
                return Err(Error::validation(&rec, "x_pu", "reactance must be positive"));
            }
            if line.flow_limit.is_nan() || line.flow_limit <= 0.0 {
                return Err(Error::validation(&rec, "limit_mw", "flow limit must be positive"));
            }
        }
        let mut seen = vec![false; self.n_buses()];
        for (k, g) in self.generators.iter().enumerate() {
            let rec = format!("generator[{k}]");
            let idx = self
                .bus_index(g.bus)
                .ok_or_else(|| Error::validation(&rec, "bus", format!("unknown bus {}", g.bus)))?;
            if std::mem::replace(&mut seen[idx], true) {
                return Err(Error::validation(
                    &rec,
                    "bus",
                    format!("more than one generator at bus {}", g.bus),
                ));
            }
            if !(g.p_min.is_finite() && g.p_max.is_finite() && 0.0 <= g.p_min && g.p_min <= g.p_max)
            {
                return Err(Error::validation(&rec, "pmax_mw", "need 0 <= pmin <= pmax"));
            }
            if !(g.cost_quad.is_finite() && g.cost_quad >= 0.0) {
                return Err(Error::validation(&rec, "c_quad", "must be non-negative"));
            }
            if !g.cost_lin.is_finite() {
                return Err(Error::validation(&rec, "d_lin", "must be finite"));
            }
        }
        let mut seen = vec![false; self.n_buses()];
        for (k, w) in self.wind_farms.iter().enumerate() {
            let rec = format!("wind_farm[{k}]");
            let idx = self
                .bus_index(w.bus)
                .ok_or_else(|| Error::validation(&rec, "bus", format!("unknown bus {}", w.bus)))?;
            if std::mem::replace(&mut seen[idx], true) {
                return Err(Error::validation(
                    &rec,
                    "bus",
                    format!("more than one wind farm at bus {}", w.bus),
                ));
            }
            if !(w.purchase_price.is_finite() && w.purchase_price >= 0.0) {
                return Err(Error::validation(&rec, "price", "must be non-negative"));
            }
            if !(w.forecast.is_finite() && w.forecast >= 0.0) {
                return Err(Error::validation(&rec, "forecast_mw", "must be non-negative"));
            }
            if let Some(cap) = w.capacity {
                if !(cap.is_finite() && cap >= 0.0) {
                    return Err(Error::validation(&rec, "capacity_mw", "must be non-negative"));
                }
            }
        }
        self.check_connected()
    }

    fn check_connected(&self) -> Result<()> {
        let n = self.n_buses();
        let mut adj = vec![Vec::new(); n];
        for line in &self.lines {
            let (a, b) = (self.index(line.from_bus), self.index(line.to_bus));
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut visited = vec![false; n];
        let mut queue = VecDeque::from([0]);
        visited[0] = true;
        while let Some(a) = queue.pop_front() {
            for &b in &adj[a] {
                if !visited[b] {
                    visited[b] = true;
                    queue.push_back(b);
                }
            }
        }
        match visited.iter().position(|v| !v) {
            None => Ok(()),
            Some(k) => Err(Error::Structural(format!(
                "network is disconnected: bus {} is unreachable from bus {}",
                self.buses[k].id, self.buses[0].id
            ))),
        }
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    /// Position of bus `id` in the canonical bus order.
    pub fn bus_index(&self, id: usize) -> Option<usize> {
        self.buses.binary_search_by_key(&id, |b| b.id).ok()
    }

    fn index(&self, id: usize) -> usize {
        self.bus_index(id).expect("validated bus id")
    }

    pub fn reference_index(&self) -> usize {
        self.index(self.reference_bus)
    }

    pub fn bus_ids(&self) -> Vec<usize> {
        self.buses.iter().map(|b| b.id).collect()
    }

    /// Loads as an M-vector in MW.
    pub fn loads_mw(&self) -> DVector<f64> {
        DVector::from_iterator(self.n_buses(), self.buses.iter().map(|b| b.base_load))
    }

    pub fn total_load(&self) -> f64 {
        self.buses.iter().map(|b| b.base_load).sum()
    }

    /// Wind forecast as an M-vector in MW (zero where no farm is attached).
    pub fn forecast_mw(&self) -> DVector<f64> {
        let mut f = DVector::zeros(self.n_buses());
        for w in &self.wind_farms {
            f[self.index(w.bus)] = w.forecast;
        }
        f
    }

    /// Shortfall prices as an M-vector in $/MWh (zero where no farm is attached).
    pub fn wind_prices(&self) -> DVector<f64> {
        let mut c = DVector::zeros(self.n_buses());
        for w in &self.wind_farms {
            c[self.index(w.bus)] = w.purchase_price;
        }
        c
    }

    /// Bus indices hosting a wind farm, in wind-farm list order.
    pub fn wind_indices(&self) -> Vec<usize> {
        self.wind_farms.iter().map(|w| self.index(w.bus)).collect()
    }

    pub fn generator_indices(&self) -> Vec<usize> {
        self.generators.iter().map(|g| self.index(g.bus)).collect()
    }

    /// Same case with every line limit removed.
    pub fn with_unlimited_lines(&self) -> GridCase {
        let mut c = self.clone();
        for line in &mut c.lines {
            line.flow_limit = f64::INFINITY;
        }
        c
    }

    /// Map from bus id to bus index.
    pub fn index_map(&self) -> BTreeMap<usize, usize> {
        self.buses.iter().enumerate().map(|(k, b)| (b.id, k)).collect()
    }
}

/// DC power-flow matrices of a case.
///
/// `incidence` is the N×M branch-bus matrix (+1 at the from bus, −1 at the to
/// bus), `flow = diag(1/x)·incidence` and `admittance = incidenceᵀ·diag(1/x)·incidence`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMatrices {
    pub incidence: DMatrix<f64>,
    /// Diagonal of D, i.e. 1/x_n per line.
    pub susceptance: DVector<f64>,
    pub flow: DMatrix<f64>,
    pub admittance: DMatrix<f64>,
    pub base_mva: f64,
}

impl FlowMatrices {
    /// D as an explicit N×N diagonal matrix.
    pub fn reactance_diag(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.susceptance)
    }
}

pub fn build_flow_matrices(case: &GridCase) -> Result<FlowMatrices> {
    case.validate()?;
    let (n, m) = (case.n_lines(), case.n_buses());
    let mut incidence = DMatrix::zeros(n, m);
    let mut susceptance = DVector::zeros(n);
    for (k, line) in case.lines.iter().enumerate() {
        incidence[(k, case.index(line.from_bus))] = 1.0;
        incidence[(k, case.index(line.to_bus))] = -1.0;
        susceptance[k] = 1.0 / line.reactance;
    }
    let mut flow = incidence.clone();
    for (k, mut row) in flow.row_iter_mut().enumerate() {
        row *= susceptance[k];
    }
    let admittance = incidence.transpose() * &flow;
    Ok(FlowMatrices {
        incidence,
        susceptance,
        flow,
        admittance,
        base_mva: case.base_mva,
    })
}

/// Line flows in MW for a phase-angle vector (radians).
pub fn line_flows(matrices: &FlowMatrices, theta: &DVector<f64>) -> Result<DVector<f64>> {
    let m = matrices.flow.ncols();
    if theta.len() != m {
        return Err(Error::dimension("phase angle vector", m, theta.len()));
    }
    Ok(&matrices.flow * theta * matrices.base_mva)
}

/// Scale every bus load by `1 + gamma`.
pub fn scale_loads(case: &GridCase, gamma: f64) -> Result<GridCase> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::validation(
            "overload",
            "gamma",
            format!("overload ratio must be non-negative, got {gamma}"),
        ));
    }
    let mut scaled = case.clone();
    for bus in &mut scaled.buses {
        bus.base_load *= 1.0 + gamma;
    }
    Ok(scaled)
}
