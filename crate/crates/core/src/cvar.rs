//! Value-at-risk and conditional value-at-risk over loss samples.
//!
//! Everything here works on an empirical distribution: a slice of loss
//! realizations, each carrying weight `1/N`. The auxiliary function
//!
//! ```text
//! F(eta) = eta + 1/(N (1 - beta)) * sum_s max(L_s - eta, 0)
//! ```
//!
//! is convex and piecewise linear in `eta`; its minimum value is the CVaR and
//! the left end of its argmin interval is the VaR.

use crate::error::{Error, Result};

/// Probability level `beta` in the open interval (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RiskLevel(f64);

impl RiskLevel {
    pub fn new(beta: f64) -> Result<Self> {
        if beta > 0.0 && beta < 1.0 {
            Ok(RiskLevel(beta))
        } else {
            Err(Error::validation(
                "risk level",
                "beta",
                format!("must lie in (0, 1), got {beta}"),
            ))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Weight `1 / (N (1 - beta))` applied to each tail excess.
    pub fn tail_weight(self, n: usize) -> f64 {
        1.0 / (n as f64 * (1.0 - self.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskResult {
    pub var: f64,
    pub cvar: f64,
}

fn check_losses(losses: &[f64]) -> Result<()> {
    if losses.is_empty() {
        return Err(Error::Empty("loss samples"));
    }
    if let Some(k) = losses.iter().position(|l| !l.is_finite()) {
        return Err(Error::validation(
            format!("loss[{k}]"),
            "value",
            "loss samples must be finite",
        ));
    }
    Ok(())
}

/// Fraction of samples with loss `<= eta`.
pub fn empirical_cdf_at(losses: &[f64], eta: f64) -> Result<f64> {
    check_losses(losses)?;
    let below = losses.iter().filter(|&&l| l <= eta).count();
    Ok(below as f64 / losses.len() as f64)
}

/// Sample-average estimate of the auxiliary function at `eta`.
pub fn f_beta_hat(losses: &[f64], eta: f64, beta: RiskLevel) -> Result<f64> {
    check_losses(losses)?;
    let excess: f64 = losses.iter().map(|&l| (l - eta).max(0.0)).sum();
    Ok(eta + beta.tail_weight(losses.len()) * excess)
}

/// Smallest `k` (1-based) with `k / n >= beta`, snapping values of `n * beta`
/// that sit within rounding noise of an integer.
fn quantile_rank(n: usize, beta: f64) -> usize {
    let t = n as f64 * beta;
    let r = t.round();
    let k = if (t - r).abs() <= 1e-9 * t.max(1.0) {
        r
    } else {
        t.ceil()
    };
    (k as usize).clamp(1, n)
}

/// VaR and CVaR of the empirical loss distribution in closed form.
///
/// The VaR is the order statistic of rank `ceil(N beta)`, which is the left
/// end of the argmin interval of [`f_beta_hat`]; the CVaR is the auxiliary
/// function evaluated there.
pub fn var_cvar(losses: &[f64], beta: RiskLevel) -> Result<RiskResult> {
    check_losses(losses)?;
    let mut sorted = losses.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = quantile_rank(sorted.len(), beta.value());
    let var = sorted[k - 1];
    let excess: f64 = sorted[k..].iter().map(|&l| l - var).sum();
    let cvar = var + beta.tail_weight(sorted.len()) * excess;
    Ok(RiskResult {
        var,
        cvar: cvar.max(var),
    })
}

/// Convex, non-decreasing cost of a non-negative wind shortfall (MW → $).
pub trait ShortfallCost {
    fn cost(&self, shortfall_mw: f64) -> f64;
}

/// Shortfall bought back at a constant price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearPrice(pub f64);

impl ShortfallCost for LinearPrice {
    fn cost(&self, shortfall_mw: f64) -> f64 {
        self.0 * shortfall_mw
    }
}

/// `sum_m T_m(max(p_w[m] - w[m], 0))` for arbitrary per-bus shortfall costs.
pub fn shortfall_cost<C: ShortfallCost>(p_w: &[f64], w: &[f64], costs: &[C]) -> Result<f64> {
    if w.len() != p_w.len() {
        return Err(Error::dimension("wind realization", p_w.len(), w.len()));
    }
    if costs.len() != p_w.len() {
        return Err(Error::dimension("shortfall cost functions", p_w.len(), costs.len()));
    }
    Ok(p_w
        .iter()
        .zip(w)
        .zip(costs)
        .map(|((&p, &r), c)| c.cost((p - r).max(0.0)))
        .sum())
}

/// Grid-wide transaction cost `sum_m c_m max(p_w[m] - w[m], 0)` in $.
pub fn transaction_cost(p_w: &[f64], w: &[f64], prices: &[f64]) -> Result<f64> {
    if let Some(k) = prices.iter().position(|&c| !(c >= 0.0)) {
        return Err(Error::validation(
            format!("price[{k}]"),
            "price",
            "shortfall prices must be non-negative",
        ));
    }
    let linear: Vec<LinearPrice> = prices.iter().map(|&c| LinearPrice(c)).collect();
    shortfall_cost(p_w, w, &linear)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn beta(b: f64) -> RiskLevel {
        RiskLevel::new(b).unwrap()
    }

    fn one_to_ten() -> Vec<f64> {
        (1..=10).map(f64::from).collect()
    }

    #[test]
    fn risk_level_bounds() {
        assert!(RiskLevel::new(0.0).is_err());
        assert!(RiskLevel::new(1.0).is_err());
        assert!(RiskLevel::new(f64::NAN).is_err());
        assert_eq!(RiskLevel::new(0.95).unwrap().value(), 0.95);
    }

    #[test]
    fn cdf_counts() {
        let l = [1.0, 2.0, 3.0];
        assert_relative_eq!(empirical_cdf_at(&l, 2.0).unwrap(), 2.0 / 3.0);
        assert_eq!(empirical_cdf_at(&l, 0.5).unwrap(), 0.0);
        assert_eq!(empirical_cdf_at(&l, 3.0).unwrap(), 1.0);
        assert_eq!(empirical_cdf_at(&l, 7.0).unwrap(), 1.0);
        assert!(matches!(empirical_cdf_at(&[], 0.0), Err(Error::Empty(_))));
    }

    #[test]
    fn cdf_of_normal_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let l: Vec<f64> = (0..1000).map(|_| rng.sample(StandardNormal)).collect();
        let p = empirical_cdf_at(&l, 0.0).unwrap();
        assert!((p - 0.5).abs() < 0.05, "{p}");
    }

    #[test]
    fn f_beta_hat_hand_value() {
        // 9 + 1/(10 * 0.1) * (10 - 9)
        let v = f_beta_hat(&one_to_ten(), 9.0, beta(0.9)).unwrap();
        assert_relative_eq!(v, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_distribution() {
        let l = [4.2; 17];
        for b in [0.1, 0.5, 0.95] {
            let r = var_cvar(&l, beta(b)).unwrap();
            assert_eq!(r.var, 4.2);
            assert_relative_eq!(r.cvar, 4.2, epsilon = 1e-12);
            assert_relative_eq!(f_beta_hat(&l, 4.2, beta(b)).unwrap(), 4.2);
        }
    }

    #[test]
    fn one_to_ten_at_ninety_percent() {
        let r = var_cvar(&one_to_ten(), beta(0.9)).unwrap();
        assert_eq!(r.var, 9.0);
        assert_relative_eq!(r.cvar, 10.0, epsilon = 1e-12);

        // exhaustive scan: minimum 10, attained on [9, 10]
        let grid: Vec<f64> = (0..=10_000).map(|i| i as f64 * 1e-3).collect();
        let vals: Vec<f64> = grid
            .iter()
            .map(|&e| f_beta_hat(&one_to_ten(), e, beta(0.9)).unwrap())
            .collect();
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        assert_relative_eq!(min, 10.0, epsilon = 1e-9);
        let first = grid[vals.iter().position(|&v| v <= min + 1e-9).unwrap()];
        assert_relative_eq!(first, 9.0, epsilon = 1e-9);
    }

    #[test]
    fn small_beta_tends_to_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let l: Vec<f64> = (0..500).map(|_| rng.random_range(-5.0..20.0)).collect();
        let mean = l.iter().sum::<f64>() / l.len() as f64;
        let r = var_cvar(&l, beta(1e-6)).unwrap();
        assert_relative_eq!(r.cvar, mean, max_relative = 1e-4);
    }

    #[test]
    fn transaction_cost_cases() {
        let c = [2.65];
        assert_relative_eq!(transaction_cost(&[5.0], &[3.0], &c).unwrap(), 5.30, epsilon = 1e-12);
        assert_eq!(transaction_cost(&[3.0, 1.0], &[3.0, 1.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(transaction_cost(&[1.0, 1.0], &[3.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!(transaction_cost(&[1.0], &[1.0, 2.0], &[1.0]).is_err());
        assert!(transaction_cost(&[1.0], &[1.0], &[-1.0]).is_err());
    }

    #[test]
    fn general_shortfall_cost() {
        struct Quadratic;
        impl ShortfallCost for Quadratic {
            fn cost(&self, s: f64) -> f64 {
                s * s
            }
        }
        let v = shortfall_cost(&[3.0, 1.0], &[1.0, 2.0], &[Quadratic, Quadratic]).unwrap();
        assert_eq!(v, 4.0);
    }

    fn loss_vec() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-100.0f64..100.0, 1..200)
    }

    proptest! {
        #[test]
        fn oracle_matches_scan_over_breakpoints(l in loss_vec(), b in 0.01f64..0.99) {
            let b = beta(b);
            let r = var_cvar(&l, b).unwrap();
            // the minimum of a convex piecewise-linear function sits at a breakpoint
            let brute = l.iter().map(|&e| f_beta_hat(&l, e, b).unwrap()).fold(f64::INFINITY, f64::min);
            prop_assert!((r.cvar - brute).abs() <= 1e-9 * (1.0 + brute.abs()));
            prop_assert!(r.cvar >= r.var);
        }

        #[test]
        fn var_is_beta_quantile(l in loss_vec(), b in 0.01f64..0.99) {
            let r = var_cvar(&l, beta(b)).unwrap();
            prop_assert!(empirical_cdf_at(&l, r.var).unwrap() >= b - 1e-12);
            let below = l.iter().copied().filter(|&x| x < r.var).fold(f64::NEG_INFINITY, f64::max);
            if below.is_finite() {
                prop_assert!(empirical_cdf_at(&l, below).unwrap() < b + 1e-12);
            }
        }

        #[test]
        fn f_beta_hat_midpoint_convex(l in loss_vec(), e1 in -150.0f64..150.0, e2 in -150.0f64..150.0) {
            let b = beta(0.9);
            let f = |e| f_beta_hat(&l, e, b).unwrap();
            let mid = f(0.5 * (e1 + e2));
            prop_assert!(mid <= 0.5 * (f(e1) + f(e2)) + 1e-9);
        }

        #[test]
        fn f_beta_hat_dominates_eta(l in loss_vec(), e in -150.0f64..150.0) {
            let v = f_beta_hat(&l, e, beta(0.95)).unwrap();
            let max = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(v >= e);
            if e >= max { prop_assert_eq!(v, e); } else { prop_assert!(v > e); }
        }

        #[test]
        fn transaction_cost_monotone_convex(
            p in prop::collection::vec(0.0f64..20.0, 4),
            q in prop::collection::vec(0.0f64..20.0, 4),
            w in prop::collection::vec(0.0f64..20.0, 4),
            c in prop::collection::vec(0.0f64..10.0, 4),
            k in 0usize..4, bump in 0.0f64..5.0,
        ) {
            let t = |x: &[f64]| transaction_cost(x, &w, &c).unwrap();
            let mut raised = p.clone();
            raised[k] += bump;
            prop_assert!(t(&raised) >= t(&p) - 1e-12);
            let mid: Vec<f64> = p.iter().zip(&q).map(|(a, b)| 0.5 * (a + b)).collect();
            prop_assert!(t(&mid) <= 0.5 * (t(&p) + t(&q)) + 1e-9);
        }
    }
}
