//! Correlated wind scenario generation and covariance estimation.
//!
//! Scenarios follow `w_s = max(forecast + n_s, 0)` with `n_s ~ N(0, Σ)`.
//! Sampling uses ChaCha8 seeded from a 64-bit seed and the ziggurat normal
//! sampler from `rand_distr`; `Σ` (restricted to the buses that carry wind)
//! is factored by Cholesky after adding `1e-9 * max(diag Σ)` to its diagonal.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid_model::GridCase;

/// Relative diagonal loading applied before factoring a covariance.
pub const COVARIANCE_RIDGE: f64 = 1e-9;

/// Hourly wind output records, MW. Row per hour, column per farm.
#[derive(Debug, Clone, PartialEq)]
pub struct WindHistory {
    pub records: DMatrix<f64>,
    pub farm_buses: Vec<usize>,
}

impl WindHistory {
    pub fn new(records: DMatrix<f64>, farm_buses: Vec<usize>) -> Result<Self> {
        if records.ncols() != farm_buses.len() {
            return Err(Error::dimension(
                "history columns",
                farm_buses.len(),
                records.ncols(),
            ));
        }
        if records.nrows() < 2 {
            return Err(Error::validation(
                "history",
                "records",
                "need at least two hourly records",
            ));
        }
        if let Some(k) = records.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::validation(
                format!("history row {}", k % records.nrows()),
                format!("column {}", k / records.nrows()),
                "wind output must be finite and non-negative",
            ));
        }
        Ok(WindHistory {
            records,
            farm_buses,
        })
    }
}

/// `n_s` wind realizations over all M buses, MW.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    /// N_s × M, one realization per row.
    pub samples: DMatrix<f64>,
    pub forecast: DVector<f64>,
    pub seed: u64,
    pub covariance: DMatrix<f64>,
}

impl ScenarioSet {
    pub fn n_scenarios(&self) -> usize {
        self.samples.nrows()
    }

    pub fn n_buses(&self) -> usize {
        self.samples.ncols()
    }

    pub fn row(&self, s: usize) -> Vec<f64> {
        self.samples.row(s).iter().copied().collect()
    }

    /// Column means of the samples.
    pub fn mean(&self) -> DVector<f64> {
        self.samples.row_mean().transpose()
    }

    /// Scenario set built from explicit samples (e.g. read from disk).
    pub fn from_samples(
        samples: DMatrix<f64>,
        forecast: DVector<f64>,
        seed: u64,
        covariance: DMatrix<f64>,
    ) -> Result<Self> {
        let m = samples.ncols();
        if forecast.len() != m {
            return Err(Error::dimension("forecast", m, forecast.len()));
        }
        if covariance.shape() != (m, m) {
            return Err(Error::dimension("covariance rows", m, covariance.nrows()));
        }
        if samples.nrows() == 0 {
            return Err(Error::Empty("scenario samples"));
        }
        if let Some(k) = samples.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::validation(
                format!("scenario {}", k % samples.nrows()),
                format!("bus column {}", k / samples.nrows()),
                "wind realizations must be finite and non-negative",
            ));
        }
        Ok(ScenarioSet {
            samples,
            forecast,
            seed,
            covariance,
        })
    }
}

/// Sample covariance (divisor T−1) of the history, embedded in the M-bus
/// index space of `case`. Rows and columns of buses without a farm are zero.
pub fn estimate_covariance(history: &WindHistory, case: &GridCase) -> Result<DMatrix<f64>> {
    let t = history.records.nrows();
    if t < 2 {
        return Err(Error::validation(
            "history",
            "records",
            "need at least two hourly records",
        ));
    }
    let idx = history
        .farm_buses
        .iter()
        .map(|&b| {
            case.bus_index(b).ok_or_else(|| {
                Error::validation("history", "header", format!("unknown bus {b}"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let means = history.records.row_mean();
    let mut centered = history.records.clone();
    for mut row in centered.row_iter_mut() {
        row -= &means;
    }
    let block = centered.transpose() * &centered / (t as f64 - 1.0);
    let mut cov = DMatrix::zeros(case.n_buses(), case.n_buses());
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            cov[(i, j)] = block[(a, b)];
        }
    }
    Ok(cov)
}

/// Draw `n_s` truncated Gaussian wind scenarios around `forecast`.
///
/// Buses whose forecast and variance are both zero stay at zero in every
/// scenario. Identical inputs and seed give bit-identical output.
pub fn sample_scenarios(
    forecast: &DVector<f64>,
    covariance: &DMatrix<f64>,
    n_s: usize,
    seed: u64,
) -> Result<ScenarioSet> {
    let m = forecast.len();
    if covariance.shape() != (m, m) {
        return Err(Error::dimension("covariance rows", m, covariance.nrows()));
    }
    if n_s == 0 {
        return Err(Error::validation("scenarios", "n", "scenario count must be positive"));
    }
    if let Some(k) = forecast.iter().position(|f| !(f.is_finite() && *f >= 0.0)) {
        return Err(Error::validation(
            format!("forecast[{k}]"),
            "forecast_mw",
            "must be finite and non-negative",
        ));
    }
    let asym = (covariance - covariance.transpose()).amax();
    let max_diag = covariance.diagonal().iter().copied().fold(0.0_f64, f64::max);
    if !covariance.iter().all(|v| v.is_finite()) || asym > 1e-10 * max_diag.max(1e-300) {
        return Err(Error::validation("covariance", "matrix", "must be finite and symmetric"));
    }

    let support: Vec<usize> = (0..m)
        .filter(|&i| forecast[i] > 0.0 || covariance[(i, i)] != 0.0)
        .collect();
    let factor = if max_diag > 0.0 {
        let k = support.len();
        let mut sub = DMatrix::from_fn(k, k, |a, b| covariance[(support[a], support[b])]);
        for a in 0..k {
            sub[(a, a)] += COVARIANCE_RIDGE * max_diag;
        }
        let chol = sub.cholesky().ok_or_else(|| {
            Error::validation("covariance", "matrix", "not positive semidefinite")
        })?;
        Some(chol.unpack())
    } else {
        None
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = DMatrix::zeros(n_s, m);
    let mut z = DVector::zeros(support.len());
    for s in 0..n_s {
        for i in &support {
            samples[(s, *i)] = forecast[*i];
        }
        if let Some(l) = &factor {
            for zi in z.iter_mut() {
                *zi = rng.sample(StandardNormal);
            }
            let noise = l * &z;
            for (a, &i) in support.iter().enumerate() {
                samples[(s, i)] += noise[a];
            }
        }
        for i in &support {
            samples[(s, *i)] = samples[(s, *i)].max(0.0);
        }
    }
    Ok(ScenarioSet {
        samples,
        forecast: forecast.clone(),
        seed,
        covariance: covariance.clone(),
    })
}

/// Scenario set for `case` using its forecast column.
pub fn sample_for_case(
    case: &GridCase,
    covariance: &DMatrix<f64>,
    n_s: usize,
    seed: u64,
) -> Result<ScenarioSet> {
    sample_scenarios(&case.forecast_mw(), covariance, n_s, seed)
}
