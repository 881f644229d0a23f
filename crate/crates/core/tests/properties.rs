use std::cmp::Ordering;

use amerdual::dpp::{build_dynamic_extension, operator_e_k};
use amerdual::dual::{check_calibrated, strong_value, weak_value};
use amerdual::ensemble::{self, MarketParams, PeacockParams};
use amerdual::hedging::{check_na, check_na_enlarged, price_american, price_european_enlarged};
use amerdual::mot::{check_conditional_law_and_order, check_mvm, mvm_from_measure};
use amerdual::scalar::{ext_cmp, ext_eq};
use amerdual::{AmericanPayoff, Error, Rational, Scalar};
use proptest::prelude::*;
use rand::Rng;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

fn arbitrage_free() -> MarketParams {
    MarketParams::default().arbitrage_free()
}

fn ge(a: &Rational, b: &Rational) -> bool {
    a.cmp_tol(b) != Ordering::Less
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn strong_below_weak_below_primal(seed in any::<u64>()) {
        let mut rng = ensemble::rng(seed);
        let m = ensemble::random_market(&mut rng, &arbitrage_free());
        let phi = ensemble::random_payoff(&mut rng, &m, 0.2);
        let primal = price_american(&m, &phi, true).unwrap().value;
        let weak = weak_value(&m.enlarge(), &phi).unwrap().value.unwrap();
        let strong = strong_value(&m, &phi).unwrap().value.unwrap();
        prop_assert!(ge(&weak, &strong), "strong {} > weak {}", strong, weak);
        prop_assert!(ge(&primal, &weak), "weak {} > primal {}", weak, primal);
        prop_assert_eq!(primal, weak);
    }

    #[test]
    fn na_agrees_on_both_spaces(seed in any::<u64>()) {
        let mut rng = ensemble::rng(seed);
        let m = ensemble::random_market(&mut rng, &MarketParams::default());
        let base = check_na(&m).unwrap();
        let enlarged = check_na_enlarged(&m).unwrap();
        prop_assert_eq!(base.is_some(), enlarged.is_some());
    }

    #[test]
    fn price_is_translation_equivariant_and_statics_only_help(seed in any::<u64>(), c in -5i64..=5) {
        let mut rng = ensemble::rng(seed);
        let m = ensemble::random_market(&mut rng, &arbitrage_free());
        let phi = ensemble::random_payoff(&mut rng, &m, 0.2);
        let c = Rational::from_i64(c);
        let base = price_american(&m, &phi, true).unwrap().value;
        let shifted = price_american(&m, &phi.shift(&c), true).unwrap().value;
        prop_assert_eq!(shifted, base.clone() + c);
        let without = price_american(&m, &phi, false).unwrap().value;
        prop_assert!(ge(&without, &base));
        let enlarged = price_european_enlarged(&m.enlarge(), &phi, true).unwrap().value;
        prop_assert_eq!(enlarged, base);
    }

    #[test]
    fn price_is_monotone_in_the_payoff(seed in any::<u64>()) {
        let mut rng = ensemble::rng(seed);
        let m = ensemble::random_market(&mut rng, &arbitrage_free());
        let phi = ensemble::random_payoff(&mut rng, &m, 0.2);
        let bumps: Vec<Vec<i64>> = (0..m.horizon).map(|_| (0..m.num_paths()).map(|_| rng.gen_range(0..=2)).collect()).collect();
        // Bump whole atoms so the larger payoff stays adapted.
        let higher = AmericanPayoff::from_fn(&m, |k, p| {
            let first = m.nodes[m.atom(k, p)].paths.start;
            phi.get(k, p).clone().map(|v| v + Rational::from_i64(bumps[k - 1][first]))
        });
        let lo = price_american(&m, &phi, true).unwrap().value;
        let hi = price_american(&m, &higher, true).unwrap().value;
        prop_assert!(ge(&hi, &lo));
    }

    #[test]
    fn operator_is_monotone_and_translation_equivariant(seed in any::<u64>(), c in -4i64..=4) {
        let mut rng = ensemble::rng(seed);
        let m = ensemble::random_market(&mut rng, &arbitrage_free().statics_free());
        let n = m.num_paths();
        let xi: Vec<Option<Rational>> = (0..n).map(|_| Some(Rational::from_i64(rng.gen_range(-4..=6)))).collect();
        let higher: Vec<Option<Rational>> = xi.iter().map(|v| v.clone().map(|v| v + Rational::from_i64(rng.gen_range(0..=3)))).collect();
        let c = Rational::from_i64(c);
        let shifted: Vec<Option<Rational>> = xi.iter().map(|v| v.clone().map(|v| v + c.clone())).collect();
        for k in 0..m.horizon {
            let base = operator_e_k(&m, k, &xi);
            let up = operator_e_k(&m, k, &higher);
            let moved = operator_e_k(&m, k, &shifted);
            prop_assert_eq!(base.len(), m.levels[k].len());
            for a in 0..base.len() {
                prop_assert!(ext_cmp(&up[a], &base[a]) != Ordering::Less);
                prop_assert!(ext_eq(&moved[a], &base[a].clone().map(|v| v + c.clone())));
            }
        }
    }

    #[test]
    fn weak_optimizer_projects_into_calibrated_measures(seed in any::<u64>()) {
        let mut rng = ensemble::rng(seed);
        let m = ensemble::random_market(&mut rng, &arbitrage_free());
        let phi = ensemble::random_payoff(&mut rng, &m, 0.2);
        let em = m.enlarge();
        let qbar = weak_value(&em, &phi).unwrap().measure.unwrap();
        let marginal = em.marginal(&qbar);
        prop_assert!(check_calibrated(&m, &marginal).is_ok());
        for theta in 1..=m.horizon {
            if let Some(section) = em.section(&qbar, theta) {
                prop_assert_eq!(section.total(), Rational::from_i64(1));
                prop_assert!(section.weights.iter().all(|w| !w.is_neg()));
            }
        }
    }

    #[test]
    fn float_mode_tracks_rational_mode(seed in any::<u64>()) {
        let mut rng = ensemble::rng(seed);
        let m = ensemble::random_market(&mut rng, &arbitrage_free());
        let phi = ensemble::random_payoff(&mut rng, &m, 0.2);
        let exact = price_american(&m, &phi, true).unwrap().value;
        let approx = price_american(&m.to_float(), &phi.map_scalars(|v| v.to_f64()), true).unwrap().value;
        prop_assert!((exact.to_f64() - approx).abs() < 1e-9, "{} vs {}", exact, approx);
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn extension_keeps_the_weak_value(seed in any::<u64>()) {
        let mut rng = ensemble::rng(seed);
        let params = MarketParams { max_horizon: 3, max_paths: 12, max_statics: 1, ..arbitrage_free() };
        let m = ensemble::random_market(&mut rng, &params);
        let phi = ensemble::random_payoff(&mut rng, &m, 0.2);
        let weak = weak_value(&m.enlarge(), &phi).unwrap();
        let ext = build_dynamic_extension(&m, weak.measure.as_ref().unwrap()).unwrap();
        let hat = weak_value(&ext.market.enlarge(), &ext.payoff(&phi)).unwrap();
        prop_assert!(ext_eq(&hat.value, &weak.value), "{:?} vs {:?}", hat.value, weak.value);
    }

    #[test]
    fn mvm_round_trip(seed in any::<u64>()) {
        let mut rng = ensemble::rng(seed);
        let (spec, m) = ensemble::random_peacock(&mut rng, &PeacockParams::default());
        for q in ensemble::random_calibrated_measures(&mut rng, &m, 3) {
            let eta = mvm_from_measure(&m, &spec, &q).unwrap();
            let check = check_mvm(&m, &spec, &eta, &q);
            prop_assert!(check.is_mvm && check.terminating && check.consistent, "{:?}", check);
            let lo = check_conditional_law_and_order(&m, &spec, &eta, &q).unwrap();
            prop_assert!(lo.law_ok && lo.order_ok);
            // The root laws reproduce the marginals of Q.
            for (i, &t) in spec.times.iter().enumerate() {
                for (j, x) in eta.support[i].iter().enumerate() {
                    let mass = (0..m.num_paths())
                        .filter(|&p| m.asset(p, t) == x.as_slice())
                        .fold(Rational::from_i64(0), |a, p| a + q.weights[p].clone());
                    prop_assert_eq!(&mass, &eta.eta[i][0][0][j]);
                    prop_assert_eq!(&mass, &spec.mass(i, x));
                }
            }
        }
    }
}

#[test]
fn arbitrage_market_has_no_finite_weak_value_or_an_uncharged_arbitrage() {
    let mut rng = ensemble::rng(99);
    let params = MarketParams { raw_probability: 0.6, ..MarketParams::default() };
    let mut seen = 0;
    while seen < 10 {
        let m = ensemble::random_market(&mut rng, &params);
        let Some(arb) = check_na(&m).unwrap() else { continue };
        seen += 1;
        let phi = AmericanPayoff::constant(&m, Rational::from_i64(1));
        match weak_value(&m.enlarge(), &phi) {
            Err(Error::NoCalibratedMeasure) => {}
            Ok(w) => {
                let q = m.enlarge().marginal(&w.measure.unwrap());
                for (g, qw) in arb.gains.iter().zip(&q.weights) {
                    assert!(!(g.is_pos() && !qw.is_zero_tol()));
                }
            }
            Err(e) => panic!("{e}"),
        }
    }
}
