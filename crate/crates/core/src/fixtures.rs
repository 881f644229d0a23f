//! Built-in reference models with known prices.
//!
//! * `intro`: two periods, `S_0 = S_1 = 0`, `S_2 ∈ {−2, −1, 1, 2}`, American
//!   payoff `Φ_1 = 1`, `Φ_2 = 2·1{|S_2| = 1}` and a zero-priced static option
//!   `g = 1{|S_2| = 1} − 1/2`. Superhedging price 2 without `g` and 3/2 with
//!   it (cash 3/2 plus one `g`); the best strong-stopping model value with
//!   `g` is only 1, while the enlarged-space dual recovers 3/2.
//! * `hobson-neuberger`: `S_0 = 2`, `S_1 ∈ {1, 3}`, `S_2 ∈ {0, 2, 4}`,
//!   `Φ_1 = 1{S_1 = 1}`, `Φ_2 = 8·1{S_2 = 4}`, and a digital paying 1 at the
//!   top terminal state (where `Φ_2 = 8`) priced 2/5. Superhedging price 18/5,
//!   reached on the dynamic extension where the digital's conditional price
//!   `Y_1` takes the values 0, 1/4 and 3/4.
//! * `mot-example`: the intro tree with marginals `μ_1 = δ_0` and
//!   `μ_2` uniform on `{−2, −1, 1, 2}` imposed through indicator statics.
//!   Primal and weak dual 3/2, strong dual 1.

use crate::market::{AmericanPayoff, Market, MarketSpec};
use crate::mot::{self, MarginalSpec};
use crate::scalar::{Rational, Scalar};

/// A named model with its American payoff and documented reference values.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub summary: &'static str,
    pub market: Market<Rational>,
    pub payoff: AmericanPayoff<Rational>,
    /// `(label, value)` pairs every implementation must reproduce exactly.
    pub expected: Vec<(&'static str, Rational)>,
}

fn q(n: i64, d: i64) -> Rational {
    Rational::ratio(n, d)
}

/// Intro tree including the static option `g`.
pub fn intro_spec() -> MarketSpec<Rational> {
    MarketSpec::new("intro", 2)
        .node("r", 0, None, vec![q(0, 1)])
        .node("n", 1, Some("r"), vec![q(0, 1)])
        .node("m2", 2, Some("n"), vec![q(-2, 1)])
        .node("m1", 2, Some("n"), vec![q(-1, 1)])
        .node("p1", 2, Some("n"), vec![q(1, 1)])
        .node("p2", 2, Some("n"), vec![q(2, 1)])
        .static_option(
            "g",
            &[("m2", q(-1, 2)), ("m1", q(1, 2)), ("p1", q(1, 2)), ("p2", q(-1, 2))],
            q(0, 1),
        )
}

pub fn intro() -> Market<Rational> {
    Market::from_spec(&intro_spec()).expect("intro fixture is valid")
}

/// `Φ_1 = 1`, `Φ_2 = 2` on `|S_2| = 1` and 0 on `|S_2| = 2`.
pub fn intro_payoff(m: &Market<Rational>) -> AmericanPayoff<Rational> {
    AmericanPayoff::from_fn(m, |k, p| {
        Some(if k == 1 {
            q(1, 1)
        } else {
            let s = m.asset(p, 2)[0].clone();
            if s == q(1, 1) || s == q(-1, 1) {
                q(2, 1)
            } else {
                q(0, 1)
            }
        })
    })
}

pub fn intro_fixture() -> Fixture {
    let market = intro();
    let payoff = intro_payoff(&market);
    Fixture {
        name: "intro",
        summary: "two-period model where one static option opens a strong-stopping duality gap",
        market,
        payoff,
        expected: vec![
            ("primal without statics", q(2, 1)),
            ("strong dual without statics", q(2, 1)),
            ("primal", q(3, 2)),
            ("weak dual", q(3, 2)),
            ("strong dual", q(1, 1)),
            ("gap weak-strong", q(1, 2)),
        ],
    }
}

pub fn hobson_neuberger() -> Market<Rational> {
    let spec = MarketSpec::new("hobson-neuberger", 2)
        .node("r", 0, None, vec![q(2, 1)])
        .node("d", 1, Some("r"), vec![q(1, 1)])
        .node("d0", 2, Some("d"), vec![q(0, 1)])
        .node("d2", 2, Some("d"), vec![q(2, 1)])
        .node("d4", 2, Some("d"), vec![q(4, 1)])
        .node("u", 1, Some("r"), vec![q(3, 1)])
        .node("u0", 2, Some("u"), vec![q(0, 1)])
        .node("u2", 2, Some("u"), vec![q(2, 1)])
        .node("u4", 2, Some("u"), vec![q(4, 1)])
        .static_option("digital", &[("d4", q(1, 1)), ("u4", q(1, 1))], q(2, 5));
    Market::from_spec(&spec).expect("hobson-neuberger fixture is valid")
}

/// `Φ_1 = 1{S_1 = 1}`, `Φ_2 = 8·1{S_2 = 4}`.
pub fn hobson_neuberger_payoff(m: &Market<Rational>) -> AmericanPayoff<Rational> {
    AmericanPayoff::from_fn(m, |k, p| {
        let s = m.asset(p, k)[0].clone();
        Some(match k {
            1 if s == q(1, 1) => q(1, 1),
            2 if s == q(4, 1) => q(8, 1),
            _ => q(0, 1),
        })
    })
}

pub fn hobson_neuberger_fixture() -> Fixture {
    let market = hobson_neuberger();
    let payoff = hobson_neuberger_payoff(&market);
    Fixture {
        name: "hobson-neuberger",
        summary: "two-period trinomial model with a calibrated digital; extension restores duality",
        market,
        payoff,
        expected: vec![("primal", q(18, 5)), ("weak dual", q(18, 5)), ("extension strong value", q(18, 5))],
    }
}

pub fn mot_example_spec() -> MarginalSpec<Rational> {
    MarginalSpec {
        times: vec![1, 2],
        marginals: vec![
            vec![(vec![q(0, 1)], q(1, 1))],
            vec![
                (vec![q(-2, 1)], q(1, 4)),
                (vec![q(-1, 1)], q(1, 4)),
                (vec![q(1, 1)], q(1, 4)),
                (vec![q(2, 1)], q(1, 4)),
            ],
        ],
        s0: vec![q(0, 1)],
    }
}

pub fn mot_example() -> Market<Rational> {
    let spec = mot_example_spec();
    let grid = mot::support_grid(&spec, 2);
    mot::build_mot_market(&spec, &grid).expect("mot example is a valid peacock")
}

pub fn mot_fixture() -> Fixture {
    let market = mot_example();
    let payoff = intro_payoff(&market);
    Fixture {
        name: "mot-example",
        summary: "marginal-constrained version of the intro model: weak 3/2 against strong 1",
        market,
        payoff,
        expected: vec![("primal", q(3, 2)), ("weak dual", q(3, 2)), ("strong dual", q(1, 1))],
    }
}

pub fn all() -> Vec<Fixture> {
    vec![intro_fixture(), hobson_neuberger_fixture(), mot_fixture()]
}

pub fn by_name(name: &str) -> Option<Fixture> {
    all().into_iter().find(|f| f.name == name)
}
