mod common;

use common::SortedLosses;
use cvar_opf::cvar::{f_beta_hat, var_cvar, RiskLevel};
use cvar_opf::evaluate::summarize_values;
use proptest::prelude::*;

fn losses() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(
        prop_oneof![Just(0.0), Just(5.0), -100.0f64..100.0],
        1..300,
    )
}

fn beta() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.9), Just(0.95), Just(0.99), 0.01f64..0.999]
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn cvar_bounds(l in losses(), b in beta()) {
        let r = var_cvar(&l, RiskLevel::new(b).unwrap()).unwrap();
        let mean = l.iter().sum::<f64>() / l.len() as f64;
        let max = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(r.cvar >= r.var - 1e-9);
        prop_assert!(r.cvar >= mean - 1e-9 * mean.abs().max(1.0));
        prop_assert!(r.cvar <= max + 1e-9 * max.abs().max(1.0));
        prop_assert!(l.contains(&r.var));
    }

    #[test]
    fn cvar_is_the_minimum_of_the_auxiliary_function(l in losses(), b in beta(), eta in -150.0f64..150.0) {
        let beta = RiskLevel::new(b).unwrap();
        let r = var_cvar(&l, beta).unwrap();
        prop_assert!(close(f_beta_hat(&l, r.var, beta).unwrap(), r.cvar));
        prop_assert!(f_beta_hat(&l, eta, beta).unwrap() >= r.cvar - 1e-9 * r.cvar.abs().max(1.0));
        prop_assert!(close(SortedLosses::new(&l).f(eta, b), f_beta_hat(&l, eta, beta).unwrap()));
    }

    #[test]
    fn cvar_is_translation_equivariant_and_homogeneous(l in losses(), b in beta(), c in -50.0f64..50.0, k in 0.01f64..20.0) {
        let beta = RiskLevel::new(b).unwrap();
        let r = var_cvar(&l, beta).unwrap();
        let shifted: Vec<f64> = l.iter().map(|x| x + c).collect();
        let scaled: Vec<f64> = l.iter().map(|x| x * k).collect();
        prop_assert!((var_cvar(&shifted, beta).unwrap().cvar - (r.cvar + c)).abs() <= 1e-8 * (r.cvar.abs() + c.abs()).max(1.0));
        prop_assert!((var_cvar(&scaled, beta).unwrap().cvar - k * r.cvar).abs() <= 1e-8 * (k * r.cvar).abs().max(1.0));
    }

    #[test]
    fn cvar_grows_with_beta(l in losses(), b1 in 0.01f64..0.99, b2 in 0.01f64..0.99) {
        let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        let a = var_cvar(&l, RiskLevel::new(lo).unwrap()).unwrap();
        let b = var_cvar(&l, RiskLevel::new(hi).unwrap()).unwrap();
        prop_assert!(b.cvar >= a.cvar - 1e-9 * a.cvar.abs().max(1.0));
        prop_assert!(b.var >= a.var);
    }

    #[test]
    fn order_does_not_matter(l in losses(), b in beta(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut p = l.clone();
        p.shuffle(&mut common::rng(seed));
        let beta = RiskLevel::new(b).unwrap();
        prop_assert_eq!(var_cvar(&l, beta).unwrap(), var_cvar(&p, beta).unwrap());
        prop_assert_eq!(summarize_values(&l).unwrap(), summarize_values(&p).unwrap());
    }
}

#[test]
fn rejects_bad_inputs() {
    assert!(RiskLevel::new(0.0).is_err());
    assert!(RiskLevel::new(1.0).is_err());
    assert!(RiskLevel::new(f64::NAN).is_err());
    let b = RiskLevel::new(0.9).unwrap();
    assert!(var_cvar(&[], b).is_err());
    assert!(var_cvar(&[1.0, f64::INFINITY], b).is_err());
}
