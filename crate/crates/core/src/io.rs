//! File formats.
//!
//! * Case: one JSON document, strict schema (unknown fields are errors).
//! * History CSV: header row of bus ids, one row per hour, MW. Values are
//!   taken to be already rescaled to MW by each farm's capacity.
//! * Covariance CSV: header row of bus ids, then a square matrix (MW²) whose
//!   i-th row belongs to the i-th header bus.
//! * Scenario, dispatch, cost-sample and sweep CSVs: `# key=value` metadata
//!   lines, a header row, then data rows.
//!
//! Numbers are written with Rust's shortest round-trip formatting.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evaluate::{CostSample, CostSummary, SweepResult};
use crate::grid_model::{Bus, Generator, GridCase, Line, WindFarm};
use crate::opf::DispatchSolution;
use crate::scenario::{ScenarioSet, WindHistory};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// The bundled IEEE 30-bus case with seven wind farms.
pub const IEEE30_JSON: &str = include_str!("../data/ieee30.json");
/// Synthetic forecast-error covariance for the bundled case's wind farms.
pub const IEEE30_COVARIANCE_CSV: &str = include_str!("../data/ieee30_cov.csv");

pub fn ieee30() -> GridCase {
    parse_case(IEEE30_JSON, "ieee30.json").expect("bundled case is valid")
}

pub fn ieee30_covariance() -> DMatrix<f64> {
    let t = Table::parse(IEEE30_COVARIANCE_CSV, "ieee30_cov.csv").expect("bundled table parses");
    covariance_from_table(&t, &ieee30(), "ieee30_cov.csv").expect("bundled covariance is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    pub base_mva: f64,
    pub reference_bus: usize,
    pub buses: Vec<BusRecord>,
    pub lines: Vec<LineRecord>,
    pub generators: Vec<GeneratorRecord>,
    pub wind_farms: Vec<WindFarmRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusRecord {
    pub id: usize,
    pub load_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineRecord {
    pub from: usize,
    pub to: usize,
    pub x_pu: f64,
    /// `null` means no thermal limit.
    pub limit_mw: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorRecord {
    pub bus: usize,
    pub pmin_mw: f64,
    pub pmax_mw: f64,
    pub c_quad: f64,
    pub d_lin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindFarmRecord {
    pub bus: usize,
    pub price: f64,
    pub forecast_mw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity_mw: Option<f64>,
}

impl CaseFile {
    pub fn from_case(case: &GridCase) -> Self {
        CaseFile {
            schema_version: SCHEMA_VERSION,
            name: None,
            source: None,
            base_mva: case.base_mva,
            reference_bus: case.reference_bus,
            buses: case
                .buses
                .iter()
                .map(|b| BusRecord { id: b.id, load_mw: b.base_load })
                .collect(),
            lines: case
                .lines
                .iter()
                .map(|l| LineRecord {
                    from: l.from_bus,
                    to: l.to_bus,
                    x_pu: l.reactance,
                    limit_mw: l.flow_limit.is_finite().then_some(l.flow_limit),
                })
                .collect(),
            generators: case
                .generators
                .iter()
                .map(|g| GeneratorRecord {
                    bus: g.bus,
                    pmin_mw: g.p_min,
                    pmax_mw: g.p_max,
                    c_quad: g.cost_quad,
                    d_lin: g.cost_lin,
                })
                .collect(),
            wind_farms: case
                .wind_farms
                .iter()
                .map(|w| WindFarmRecord {
                    bus: w.bus,
                    price: w.purchase_price,
                    forecast_mw: w.forecast,
                    capacity_mw: w.capacity,
                })
                .collect(),
        }
    }

    pub fn into_case(self) -> Result<GridCase> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::validation(
                "case",
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        for (k, l) in self.lines.iter().enumerate() {
            if let Some(f) = l.limit_mw {
                if !(f > 0.0) {
                    return Err(Error::validation(
                        format!("line[{k}]"),
                        "limit_mw",
                        "must be positive or null",
                    ));
                }
            }
        }
        GridCase::new(
            self.buses
                .into_iter()
                .map(|b| Bus { id: b.id, base_load: b.load_mw })
                .collect(),
            self.lines
                .into_iter()
                .map(|l| Line {
                    from_bus: l.from,
                    to_bus: l.to,
                    reactance: l.x_pu,
                    flow_limit: l.limit_mw.unwrap_or(f64::INFINITY),
                })
                .collect(),
            self.generators
                .into_iter()
                .map(|g| Generator {
                    bus: g.bus,
                    p_min: g.pmin_mw,
                    p_max: g.pmax_mw,
                    cost_quad: g.c_quad,
                    cost_lin: g.d_lin,
                })
                .collect(),
            self.wind_farms
                .into_iter()
                .map(|w| WindFarm {
                    bus: w.bus,
                    purchase_price: w.price,
                    forecast: w.forecast_mw,
                    capacity: w.capacity_mw,
                })
                .collect(),
            self.reference_bus,
            self.base_mva,
        )
    }
}

pub fn parse_case(text: &str, source_name: &str) -> Result<GridCase> {
    let file: CaseFile =
        serde_json::from_str(text).map_err(|e| Error::parse(source_name, e.to_string()))?;
    file.into_case()
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| with_path(path, e))
}

fn with_path(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

pub fn load_case(path: impl AsRef<Path>) -> Result<GridCase> {
    let path = path.as_ref();
    let text = read_text(path)?;
    parse_case(&text, &path.display().to_string())
}

pub fn case_to_json(case: &GridCase) -> String {
    let mut s = serde_json::to_string_pretty(&CaseFile::from_case(case))
        .expect("case records always serialize");
    s.push('\n');
    s
}

pub fn write_case(path: impl AsRef<Path>, case: &GridCase) -> Result<()> {
    fs::write(path, case_to_json(case))?;
    Ok(())
}

/// First 16 hex digits of the SHA-256 of the case's canonical JSON.
pub fn case_hash(case: &GridCase) -> String {
    let json = serde_json::to_string(&CaseFile::from_case(case)).expect("serializable");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Ordered `key=value` pairs written as leading `#` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata(pub Vec<(String, String)>);

impl Metadata {
    pub fn new() -> Self {
        Metadata(Vec::new())
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push_f64(&mut self, key: &str, value: f64) -> &mut Self {
        self.push(key, fmt_f64(value))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(|v| v.parse().ok())
    }
}

/// A CSV table with its metadata block.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub metadata: Metadata,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(metadata: Metadata, header: Vec<String>) -> Self {
        Table { metadata, header, rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for (k, v) in &self.metadata.0 {
            writeln!(out, "# {k}={v}")?;
        }
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&self.header).map_err(csv_err)?;
            for r in &self.rows {
                w.write_record(r).map_err(csv_err)?;
            }
            w.flush()?;
        }
        Ok(out)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Table> {
        let mut metadata = Metadata::new();
        for line in text.lines() {
            let Some(rest) = line.strip_prefix('#') else { break };
            if let Some((k, v)) = rest.trim().split_once('=') {
                metadata.0.push((k.trim().to_string(), v.trim().to_string()));
            }
        }
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header: Vec<String> = r
            .headers()
            .map_err(|e| Error::parse(source_name, e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::parse(source_name, e.to_string()))?;
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(Table { metadata, header, rows })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Table> {
        let path = path.as_ref();
        Table::parse(&read_text(path)?, &path.display().to_string())
    }

    pub fn f64_at(&self, row: usize, col: usize, source_name: &str) -> Result<f64> {
        let cell = &self.rows[row][col];
        cell.parse().map_err(|_| {
            Error::parse(
                source_name,
                format!("row {}, column '{}': not a number: '{cell}'", row + 1, self.header[col]),
            )
        })
    }

    fn numeric(&self, source_name: &str) -> Result<DMatrix<f64>> {
        let (n, m) = (self.rows.len(), self.header.len());
        let mut out = DMatrix::zeros(n, m);
        for i in 0..n {
            for j in 0..m {
                out[(i, j)] = self.f64_at(i, j, source_name)?;
            }
        }
        Ok(out)
    }

    fn bus_header(&self, source_name: &str) -> Result<Vec<usize>> {
        self.header
            .iter()
            .map(|h| {
                h.trim_start_matches("bus_").parse::<usize>().map_err(|_| {
                    Error::parse(source_name, format!("header '{h}' is not a bus id"))
                })
            })
            .collect()
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

pub fn read_history(path: impl AsRef<Path>) -> Result<WindHistory> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let t = Table::read(path)?;
    let buses = t.bus_header(&name)?;
    WindHistory::new(t.numeric(&name)?, buses)
}

pub fn write_history(path: impl AsRef<Path>, history: &WindHistory) -> Result<()> {
    let mut t = Table::new(
        Metadata::new(),
        history.farm_buses.iter().map(|b| b.to_string()).collect(),
    );
    for row in history.records.row_iter() {
        t.rows.push(row.iter().map(|&v| fmt_f64(v)).collect());
    }
    t.write(path)
}

fn bus_positions(case: &GridCase, buses: &[usize], source_name: &str) -> Result<Vec<usize>> {
    buses
        .iter()
        .map(|&b| {
            case.bus_index(b)
                .ok_or_else(|| Error::validation(source_name, "header", format!("unknown bus {b}")))
        })
        .collect()
}

/// Reads a covariance over a subset of buses and embeds it in M × M.
pub fn read_covariance(path: impl AsRef<Path>, case: &GridCase) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let name = path.display().to_string();
    covariance_from_table(&Table::read(path)?, case, &name)
}

pub fn covariance_from_table(t: &Table, case: &GridCase, name: &str) -> Result<DMatrix<f64>> {
    let buses = t.bus_header(name)?;
    let block = t.numeric(name)?;
    if block.nrows() != block.ncols() {
        return Err(Error::dimension("covariance rows", block.ncols(), block.nrows()));
    }
    let idx = bus_positions(case, &buses, name)?;
    let mut cov = DMatrix::zeros(case.n_buses(), case.n_buses());
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            cov[(i, j)] = block[(a, b)];
        }
    }
    Ok(cov)
}

/// Writes the wind-bus block of an M × M covariance.
pub fn write_covariance(path: impl AsRef<Path>, case: &GridCase, cov: &DMatrix<f64>) -> Result<()> {
    let idx = case.wind_indices();
    let mut t = Table::new(
        Metadata::new(),
        idx.iter().map(|&i| case.buses[i].id.to_string()).collect(),
    );
    for &i in &idx {
        t.rows.push(idx.iter().map(|&j| fmt_f64(cov[(i, j)])).collect());
    }
    t.write(path)
}

pub fn scenarios_table(case: &GridCase, set: &ScenarioSet, metadata: Metadata) -> Table {
    let mut t = Table::new(
        metadata,
        case.buses.iter().map(|b| format!("bus_{}", b.id)).collect(),
    );
    t.metadata.push("seed", set.seed);
    t.metadata.push("n_scenarios", set.n_scenarios());
    t.metadata.push(
        "forecast_mw",
        set.forecast.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(" "),
    );
    for row in set.samples.row_iter() {
        t.rows.push(row.iter().map(|&v| fmt_f64(v)).collect());
    }
    t
}

pub fn write_scenarios(
    path: impl AsRef<Path>,
    case: &GridCase,
    set: &ScenarioSet,
    metadata: Metadata,
) -> Result<()> {
    scenarios_table(case, set, metadata).write(path)
}

/// Reads a scenario CSV against `case`. Columns may be any subset of the
/// case's buses; absent buses are zero. The covariance is not stored in the
/// file and comes back as zeros.
pub fn read_scenarios(path: impl AsRef<Path>, case: &GridCase) -> Result<ScenarioSet> {
    read_scenarios_for_buses(path, &case.bus_ids())
}

/// Like [`read_scenarios`], with columns ordered by `bus_ids`.
pub fn read_scenarios_for_buses(path: impl AsRef<Path>, bus_ids: &[usize]) -> Result<ScenarioSet> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let t = Table::read(path)?;
    scenarios_from_table(&t, bus_ids, &name)
}

pub fn scenarios_from_table(t: &Table, bus_ids: &[usize], name: &str) -> Result<ScenarioSet> {
    let m = bus_ids.len();
    let buses = t.bus_header(name)?;
    let idx = buses
        .iter()
        .map(|b| {
            bus_ids
                .iter()
                .position(|x| x == b)
                .ok_or_else(|| Error::validation(name, "header", format!("unknown bus {b}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let block = t.numeric(name)?;
    let mut samples = DMatrix::zeros(block.nrows(), m);
    for (a, &i) in idx.iter().enumerate() {
        samples.set_column(i, &block.column(a));
    }
    let forecast = match t.metadata.get("forecast_mw") {
        Some(s) if buses.len() == m => {
            let v = s
                .split_whitespace()
                .map(|x| x.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::parse(name, "metadata forecast_mw is not numeric"))?;
            if v.len() != m {
                return Err(Error::dimension("forecast_mw entries", m, v.len()));
            }
            let mut f = DVector::zeros(m);
            for (a, &i) in idx.iter().enumerate() {
                f[i] = v[a];
            }
            f
        }
        _ if samples.nrows() > 0 => samples.row_mean().transpose(),
        _ => DVector::zeros(m),
    };
    let seed = t.metadata.get("seed").and_then(|s| s.parse().ok()).unwrap_or(0);
    ScenarioSet::from_samples(samples, forecast, seed, DMatrix::zeros(m, m))
}

/// First 16 hex digits of the SHA-256 of a file's bytes.
pub fn file_hash(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let digest = Sha256::digest(fs::read(path).map_err(|e| with_path(path, e))?);
    Ok(digest.iter().take(8).map(|b| format!("{b:02x}")).collect())
}

pub fn sweep_table(result: &SweepResult, case: &GridCase, mut metadata: Metadata) -> Table {
    metadata.push("parameter", result.parameter.name());
    metadata.push_f64("beta", result.beta);
    if let Some(mu) = result.mu {
        metadata.push_f64("mu", mu);
    }
    metadata.push(
        "first_failure",
        result.first_failure().map(fmt_f64).unwrap_or_else(|| "none".into()),
    );
    let with_oos = result.points.iter().any(|p| p.out_of_sample.is_some());
    let mut header: Vec<String> = [result.parameter.name(), "status", "gen_cost", "cvar_term", "objective", "kkt_residual"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if with_oos {
        header.extend(["oos_mean_total", "oos_variance_total", "oos_cvar"].map(String::from));
    }
    let wind = case.wind_indices();
    header.extend(case.buses.iter().map(|b| format!("lmp_{}", b.id)));
    header.extend(wind.iter().map(|&i| format!("p_w_{}", case.buses[i].id)));
    let mut t = Table::new(metadata, header);
    for p in &result.points {
        let mut row = vec![
            fmt_f64(p.value),
            p.status.as_str().to_string(),
            fmt_f64(p.gen_cost),
            fmt_f64(p.cvar_term),
            fmt_f64(p.objective),
            fmt_f64(p.kkt_residual),
        ];
        if with_oos {
            let o = p.out_of_sample;
            row.push(fmt_f64(o.map_or(f64::NAN, |o| o.mean_total)));
            row.push(fmt_f64(o.map_or(f64::NAN, |o| o.variance_total)));
            row.push(fmt_f64(o.map_or(f64::NAN, |o| o.cvar)));
        }
        row.extend(p.lmp.iter().map(|&v| fmt_f64(v)));
        row.extend(wind.iter().map(|&i| fmt_f64(p.p_w[i])));
        t.rows.push(row);
    }
    t
}

pub fn cost_samples_table(samples: &[CostSample], summary: &CostSummary, mut metadata: Metadata) -> Table {
    metadata.push("n_samples", summary.n);
    metadata.push_f64("mean_total", summary.mean);
    metadata.push_f64("variance_total", summary.variance);
    let mut t = Table::new(
        metadata,
        ["scenario", "gen_cost", "transaction_cost", "total"].map(String::from).to_vec(),
    );
    for (k, c) in samples.iter().enumerate() {
        t.rows.push(vec![
            k.to_string(),
            fmt_f64(c.gen_cost),
            fmt_f64(c.transaction_cost),
            fmt_f64(c.total),
        ]);
    }
    t
}

/// Per-bus dispatch as stored on disk; carries the shortfall prices so the
/// file can be evaluated without the case.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchRecord {
    pub metadata: Metadata,
    pub bus_ids: Vec<usize>,
    pub p_g: DVector<f64>,
    pub p_w: DVector<f64>,
    pub theta: DVector<f64>,
    pub lmp: DVector<f64>,
    pub wind_price: DVector<f64>,
    pub load_mw: DVector<f64>,
    pub gen_cost: f64,
}

const DISPATCH_HEADER: [&str; 7] = ["bus", "p_g_mw", "p_w_mw", "theta_rad", "lmp", "wind_price", "load_mw"];

impl DispatchRecord {
    /// Dispatch record for `solution`; the objective decomposition and solver
    /// diagnostics are appended to `metadata`.
    pub fn from_solution(case: &GridCase, solution: &DispatchSolution, mut metadata: Metadata) -> Self {
        metadata
            .push("status", solution.status.as_str())
            .push_f64("objective", solution.objective)
            .push_f64("gen_cost", solution.gen_cost)
            .push_f64("cvar_term", solution.cvar_term)
            .push_f64("eta", solution.eta)
            .push_f64("kkt_residual", solution.kkt_residual)
            .push("iterations", solution.iterations);
        DispatchRecord {
            metadata,
            bus_ids: case.bus_ids(),
            p_g: solution.p_g.clone(),
            p_w: solution.p_w.clone(),
            theta: solution.theta.clone(),
            lmp: solution.lmp.clone(),
            wind_price: case.wind_prices(),
            load_mw: case.loads_mw(),
            gen_cost: solution.gen_cost,
        }
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(
            self.metadata.clone(),
            DISPATCH_HEADER.iter().map(|s| s.to_string()).collect(),
        );
        for (i, id) in self.bus_ids.iter().enumerate() {
            t.rows.push(vec![
                id.to_string(),
                fmt_f64(self.p_g[i]),
                fmt_f64(self.p_w[i]),
                fmt_f64(self.theta[i]),
                fmt_f64(self.lmp[i]),
                fmt_f64(self.wind_price[i]),
                fmt_f64(self.load_mw[i]),
            ]);
        }
        t
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_table().write(path)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let name = path.display().to_string();
        let t = Table::read(path)?;
        if t.header != DISPATCH_HEADER {
            return Err(Error::parse(
                &name,
                format!("expected header {}", DISPATCH_HEADER.join(",")),
            ));
        }
        let n = t.rows.len();
        let col = |c: usize| -> Result<DVector<f64>> {
            let mut v = DVector::zeros(n);
            for i in 0..n {
                v[i] = t.f64_at(i, c, &name)?;
            }
            Ok(v)
        };
        let bus_ids = t
            .rows
            .iter()
            .map(|r| r[0].parse::<usize>().map_err(|_| Error::parse(&name, "bad bus id")))
            .collect::<Result<Vec<_>>>()?;
        let gen_cost = t
            .metadata
            .get_f64("gen_cost")
            .ok_or_else(|| Error::parse(&name, "metadata gen_cost missing"))?;
        Ok(DispatchRecord {
            bus_ids,
            p_g: col(1)?,
            p_w: col(2)?,
            theta: col(3)?,
            lmp: col(4)?,
            wind_price: col(5)?,
            load_mw: col(6)?,
            gen_cost,
            metadata: t.metadata,
        })
    }
}
