//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use cvar_opf::grid_model::{Bus, Generator, GridCase, Line, WindFarm};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Evaluates `η + Σ[L−η]⁺ / (N(1−β))` from sorted losses and suffix sums.
pub struct SortedLosses {
    sorted: Vec<f64>,
    suffix: Vec<f64>,
}

impl SortedLosses {
    pub fn new(losses: &[f64]) -> Self {
        let mut sorted = losses.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut suffix = vec![0.0; sorted.len() + 1];
        for i in (0..sorted.len()).rev() {
            suffix[i] = suffix[i + 1] + sorted[i];
        }
        SortedLosses { sorted, suffix }
    }

    pub fn f(&self, eta: f64, beta: f64) -> f64 {
        let n = self.sorted.len();
        let k = self.sorted.partition_point(|&l| l <= eta);
        let excess = self.suffix[k] - eta * (n - k) as f64;
        eta + excess / (n as f64 * (1.0 - beta))
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        *self.sorted.last().unwrap()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }
}

/// Minimum of the sample CVaR objective over a uniform grid of `n_grid`
/// points spanning the losses, augmented with every sample value.
/// Returns `(min value, leftmost minimizer, grid spacing)`.
pub fn grid_min(losses: &[f64], beta: f64, n_grid: usize) -> (f64, f64, f64) {
    let s = SortedLosses::new(losses);
    let (lo, hi) = (s.min(), s.max());
    let h = if hi > lo { (hi - lo) / (n_grid - 1) as f64 } else { 0.0 };
    let mut pts: Vec<f64> = (0..n_grid).map(|k| lo + h * k as f64).collect();
    pts.extend_from_slice(s.values());
    pts.sort_by(f64::total_cmp);
    let vals: Vec<f64> = pts.iter().map(|&e| s.f(e, beta)).collect();
    let best = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * best.abs().max(1.0);
    let k = vals.iter().position(|&v| v <= best + tol).unwrap();
    (best, pts[k], h)
}

/// OSQP-style ADMM for `min ½xᵀPx + qᵀx` s.t. `l ≤ Cx ≤ u`, dense, run to
/// tight residuals. Returns `(x, objective, converged)`.
pub fn admm_qp(
    p: &DMatrix<f64>,
    q: &DVector<f64>,
    c: &DMatrix<f64>,
    l: &DVector<f64>,
    u: &DVector<f64>,
    max_iter: usize,
) -> (DVector<f64>, f64, bool) {
    let n = q.len();
    let m = c.nrows();
    let sigma = 1e-6;
    let alpha = 1.6;
    let mut rho = 0.1;
    let mut x = DVector::zeros(n);
    let mut z = DVector::zeros(m);
    let mut y = DVector::zeros(m);
    let ct = c.transpose();
    let factor = |rho: f64| {
        let k = p + DMatrix::identity(n, n) * sigma + &ct * c * rho;
        k.cholesky().expect("ADMM system is positive definite")
    };
    let mut chol = factor(rho);
    let mut converged = false;
    for it in 0..max_iter {
        let rhs = &x * sigma - q + &ct * (&z * rho - &y);
        let xt = chol.solve(&rhs);
        let zt = c * &xt;
        let x_new = &xt * alpha + &x * (1.0 - alpha);
        let zr = &zt * alpha + &z * (1.0 - alpha);
        let mut z_new = &zr + &y / rho;
        for i in 0..m {
            z_new[i] = z_new[i].clamp(l[i], u[i]);
        }
        y += (&zr - &z_new) * rho;
        x = x_new;
        z = z_new;
        if it % 25 == 0 || it + 1 == max_iter {
            let cx = c * &x;
            let r_prim = (&cx - &z).amax();
            let r_dual = (p * &x + q + &ct * &y).amax();
            let sp = cx.amax().max(z.amax()).max(1.0);
            let sd = (p * &x).amax().max((&ct * &y).amax()).max(q.amax()).max(1.0);
            if r_prim <= 1e-11 * sp && r_dual <= 1e-11 * sd {
                converged = true;
                break;
            }
            // residual balancing
            if it > 0 && it % 200 == 0 {
                let ratio = ((r_prim / sp) / (r_dual / sd).max(1e-300)).sqrt();
                if !(0.2..=5.0).contains(&ratio) && ratio.is_finite() {
                    rho = (rho * ratio).clamp(1e-6, 1e6);
                    chol = factor(rho);
                }
            }
        }
    }
    if !converged {
        if let Some(xp) = polish(p, q, c, l, u, &y) {
            x = xp;
            converged = true;
        }
    }
    let obj = 0.5 * x.dot(&(p * &x)) + q.dot(&x);
    (x, obj, converged)
}

/// Guesses the active set from the ADMM duals and solves the resulting
/// equality-constrained KKT system exactly. Returns the point only if it is
/// primal feasible, dual feasible and stationary to 1e-9.
fn polish(
    p: &DMatrix<f64>,
    q: &DVector<f64>,
    c: &DMatrix<f64>,
    l: &DVector<f64>,
    u: &DVector<f64>,
    y: &DVector<f64>,
) -> Option<DVector<f64>> {
    let n = q.len();
    let tol = 1e-7 * y.amax().max(1.0);
    let mut active = Vec::new();
    for i in 0..c.nrows() {
        if l[i] == u[i] {
            active.push((i, l[i]));
        } else if y[i] > tol {
            active.push((i, u[i]));
        } else if y[i] < -tol {
            active.push((i, l[i]));
        }
    }
    let k = active.len();
    let mut kkt = DMatrix::zeros(n + k, n + k);
    let mut rhs = DVector::zeros(n + k);
    kkt.view_mut((0, 0), (n, n)).copy_from(p);
    rhs.rows_mut(0, n).copy_from(&(-q));
    for (a, &(i, b)) in active.iter().enumerate() {
        for j in 0..n {
            kkt[(n + a, j)] = c[(i, j)];
            kkt[(j, n + a)] = c[(i, j)];
        }
        rhs[n + a] = b;
    }
    let sol = kkt.svd(true, true).solve(&rhs, 1e-12).ok()?;
    let x = sol.rows(0, n).into_owned();
    let mut yy = DVector::zeros(c.nrows());
    for (a, &(i, _)) in active.iter().enumerate() {
        yy[i] = sol[n + a];
    }
    let cx = c * &x;
    let scale = cx.amax().max(1.0);
    for i in 0..c.nrows() {
        if cx[i] < l[i] - 1e-9 * scale || cx[i] > u[i] + 1e-9 * scale {
            return None;
        }
        if l[i] != u[i] && ((yy[i] > 1e-9 && cx[i] < u[i] - 1e-9 * scale) || (yy[i] < -1e-9 && cx[i] > l[i] + 1e-9 * scale)) {
            return None;
        }
        if l[i] == f64::NEG_INFINITY && yy[i] < -1e-9 {
            return None;
        }
    }
    let r_dual = (p * &x + q + c.transpose() * &yy).amax();
    (r_dual <= 1e-9 * q.amax().max(1.0)).then_some(x)
}

/// Random connected grid with at most `max_buses` buses and `max_wind` farms.
/// Line limits are at least the total load and the reference generator can
/// cover the whole load, so dispatching it alone is always feasible.
pub fn random_small_case(r: &mut ChaCha8Rng, max_buses: usize, max_wind: usize) -> GridCase {
    let nb = r.random_range(2..=max_buses);
    let buses: Vec<Bus> = (1..=nb)
        .map(|id| Bus {
            id,
            base_load: if id == 1 { 0.0 } else { r.random_range(0.0..30.0) },
        })
        .collect();
    let total: f64 = buses.iter().map(|b| b.base_load).sum::<f64>().max(1.0);
    let mut lines = Vec::new();
    for id in 2..=nb {
        let parent = r.random_range(1..id);
        lines.push((parent, id));
    }
    for _ in 0..r.random_range(0..=nb) {
        let a = r.random_range(1..=nb);
        let b = r.random_range(1..=nb);
        if a != b && !lines.contains(&(a, b)) && !lines.contains(&(b, a)) {
            lines.push((a, b));
        }
    }
    let lines = lines
        .into_iter()
        .map(|(a, b)| Line {
            from_bus: a,
            to_bus: b,
            reactance: r.random_range(0.02..0.5),
            flow_limit: if r.random_bool(0.2) {
                f64::INFINITY
            } else {
                total * r.random_range(1.0..3.0)
            },
        })
        .collect();
    let mut generators = vec![Generator {
        bus: 1,
        p_min: 0.0,
        p_max: total * 1.5,
        cost_quad: r.random_range(0.0..0.05),
        cost_lin: r.random_range(1.0..5.0),
    }];
    for id in 2..=nb {
        if r.random_bool(0.3) {
            generators.push(Generator {
                bus: id,
                p_min: 0.0,
                p_max: r.random_range(5.0..40.0),
                cost_quad: r.random_range(0.0..0.05),
                cost_lin: r.random_range(1.0..5.0),
            });
        }
    }
    let n_wind = r.random_range(1..=max_wind.min(nb));
    let mut wind_buses: Vec<usize> = (1..=nb).collect();
    for i in (1..wind_buses.len()).rev() {
        let j = r.random_range(0..=i);
        wind_buses.swap(i, j);
    }
    let wind_farms = wind_buses[..n_wind]
        .iter()
        .map(|&bus| WindFarm {
            bus,
            purchase_price: r.random_range(1.0..8.0),
            forecast: r.random_range(1.0..15.0),
            capacity: None,
        })
        .collect();
    GridCase::new(buses, lines, generators, wind_farms, 1, 100.0).unwrap()
}

/// Random PSD covariance over the wind buses of `case`, embedded in M × M.
pub fn random_covariance(r: &mut ChaCha8Rng, case: &GridCase) -> DMatrix<f64> {
    let idx = case.wind_indices();
    let w = idx.len();
    let f = DMatrix::from_fn(w, w, |_, _| r.random_range(-2.0..2.0));
    let block = &f * f.transpose();
    let mut cov = DMatrix::zeros(case.n_buses(), case.n_buses());
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            cov[(i, j)] = block[(a, b)];
        }
    }
    cov
}

/// Line flows (MW) for bus injections (MW) by solving the reduced DC
/// equations directly from line data.
pub fn dc_flows(case: &GridCase, injection_mw: &DVector<f64>) -> DVector<f64> {
    let m = case.n_buses();
    let r = case.reference_index();
    let idx = |id: usize| case.buses.iter().position(|b| b.id == id).unwrap();
    let mut b = DMatrix::zeros(m, m);
    for l in &case.lines {
        let (i, j) = (idx(l.from_bus), idx(l.to_bus));
        let y = 1.0 / l.reactance;
        b[(i, i)] += y;
        b[(j, j)] += y;
        b[(i, j)] -= y;
        b[(j, i)] -= y;
    }
    let keep: Vec<usize> = (0..m).filter(|&i| i != r).collect();
    let br = DMatrix::from_fn(m - 1, m - 1, |a, c| b[(keep[a], keep[c])]);
    let pr = DVector::from_fn(m - 1, |a, _| injection_mw[keep[a]] / case.base_mva);
    let th = br.lu().solve(&pr).unwrap();
    let mut theta = DVector::zeros(m);
    for (a, &i) in keep.iter().enumerate() {
        theta[i] = th[a];
    }
    DVector::from_iterator(
        case.lines.len(),
        case.lines
            .iter()
            .map(|l| (theta[idx(l.from_bus)] - theta[idx(l.to_bus)]) / l.reactance * case.base_mva),
    )
}
