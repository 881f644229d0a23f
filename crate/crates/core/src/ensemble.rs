//! Seeded random instances: markets, payoffs, marginal specifications and
//! calibrated measures, for property checks and batch experiments.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dual;
use crate::market::{AmericanPayoff, Market, MarketSpec, PathMeasure};
use crate::mot::{self, MarginalSpec};
use crate::scalar::{Rational, Scalar};

pub use rand_chacha::ChaCha8Rng as EnsembleRng;

/// Seeds a reproducible generator.
pub fn rng(seed: u64) -> EnsembleRng {
    rand::SeedableRng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketParams {
    pub max_horizon: usize,
    pub max_branching: usize,
    pub max_dim: usize,
    pub max_statics: usize,
    /// Probability of drawing children without the martingale construction.
    pub raw_probability: f64,
    /// Probability of shifting a static price away from its model price.
    pub misprice_probability: f64,
    /// Reject trees with more stopping rules than this.
    pub max_stopping_rules: u128,
    pub max_paths: usize,
}

impl Default for MarketParams {
    fn default() -> Self {
        MarketParams {
            max_horizon: 4,
            max_branching: 3,
            max_dim: 2,
            max_statics: 2,
            raw_probability: 0.2,
            misprice_probability: 0.1,
            max_stopping_rules: 64,
            max_paths: 24,
        }
    }
}

impl MarketParams {
    pub fn statics_free(mut self) -> Self {
        self.max_statics = 0;
        self
    }

    pub fn arbitrage_free(mut self) -> Self {
        self.raw_probability = 0.0;
        self.misprice_probability = 0.0;
        self
    }
}

fn small(rng: &mut EnsembleRng, lo: i64, hi: i64) -> Rational {
    Rational::ratio(rng.gen_range(lo..=hi), 1)
}

fn offsets(rng: &mut EnsembleRng, b: usize, dim: usize, raw: bool) -> Vec<Vec<Rational>> {
    if b == 1 {
        return vec![vec![Rational::zero(); dim]];
    }
    if raw {
        return (0..b).map(|_| (0..dim).map(|_| small(rng, -3, 3)).collect()).collect();
    }
    // The last offset cancels the others, so the uniform conditional law is a martingale.
    let mut out: Vec<Vec<Rational>> = (0..b - 1).map(|_| (0..dim).map(|_| small(rng, -3, 3)).collect()).collect();
    let last = (0..dim).map(|i| -out.iter().fold(Rational::zero(), |a, o| a + o[i].clone())).collect();
    out.push(last);
    out
}

fn random_tree(rng: &mut EnsembleRng, p: &MarketParams, raw: bool) -> MarketSpec<Rational> {
    let horizon = rng.gen_range(1..=p.max_horizon);
    let dim = rng.gen_range(1..=p.max_dim);
    let s0: Vec<Rational> = (0..dim).map(|_| small(rng, -2, 2)).collect();
    let mut spec = MarketSpec::new("random", horizon).node("r", 0, None, s0.clone());
    let mut frontier = vec![("r".to_string(), s0)];
    for k in 1..=horizon {
        let mut next = Vec::new();
        for (id, s) in &frontier {
            let b = rng.gen_range(1..=p.max_branching);
            for (j, o) in offsets(rng, b, dim, raw).into_iter().enumerate() {
                let child = format!("{id}{j}");
                let v: Vec<Rational> = s.iter().zip(&o).map(|(a, b)| a.clone() + b.clone()).collect();
                spec = spec.node(&child, k, Some(id), v.clone());
                next.push((child, v));
            }
        }
        frontier = next;
    }
    spec
}

/// Path probabilities of the uniform-children measure.
pub fn uniform_tree_measure(m: &Market<Rational>) -> PathMeasure<Rational> {
    let weights = (0..m.num_paths())
        .map(|p| {
            (0..m.horizon).fold(Rational::one(), |acc, k| {
                let b = m.nodes[m.atom(k, p)].children.len() as i64;
                acc / Rational::from_i64(b)
            })
        })
        .collect();
    PathMeasure { weights }
}

/// A random market: usually arbitrage-free by construction (uniform
/// children are a martingale, statics priced under that measure), sometimes
/// raw or mispriced.
pub fn random_market(rng: &mut EnsembleRng, p: &MarketParams) -> Market<Rational> {
    loop {
        let raw = rng.gen_bool(p.raw_probability);
        let spec = random_tree(rng, p, raw);
        let Ok(m) = Market::from_spec(&spec) else { continue };
        if m.num_paths() > p.max_paths || dual::count_stopping_times(&m) > p.max_stopping_rules {
            continue;
        }
        let n_statics = rng.gen_range(0..=p.max_statics);
        if n_statics == 0 {
            return m;
        }
        let uq = uniform_tree_measure(&m);
        let mut spec = spec;
        for l in 0..n_statics {
            let payoff: Vec<Rational> = (0..m.num_paths()).map(|_| small(rng, -2, 3)).collect();
            let mut price = uq.expectation(&payoff);
            if rng.gen_bool(p.misprice_probability) {
                price = price + Rational::ratio(rng.gen_range(1..=3), 2);
            }
            let entries: Vec<(&str, Rational)> =
                (0..m.num_paths()).map(|q| (m.path_id(q), payoff[q].clone())).collect();
            spec = spec.static_option(&format!("g{}", l + 1), &entries, price);
        }
        return Market::from_spec(&spec).expect("statics reference existing paths");
    }
}

/// An adapted payoff with small integer values, `−∞` at some early dates,
/// finite at maturity.
pub fn random_payoff(rng: &mut EnsembleRng, m: &Market<Rational>, minus_inf_probability: f64) -> AmericanPayoff<Rational> {
    let mut values = vec![vec![None; m.num_paths()]; m.horizon];
    for k in 1..=m.horizon {
        for &node in &m.levels[k] {
            let v = if k < m.horizon && rng.gen_bool(minus_inf_probability) { None } else { Some(small(rng, -2, 6)) };
            for p in m.nodes[node].paths.clone() {
                values[k - 1][p] = v.clone();
            }
        }
    }
    AmericanPayoff::new(values)
}

/// Random probability weights with full support.
pub fn random_probability(rng: &mut EnsembleRng, n: usize) -> PathMeasure<Rational> {
    let raw: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=9)).collect();
    let total: i64 = raw.iter().sum();
    PathMeasure { weights: raw.into_iter().map(|w| Rational::ratio(w, total)).collect() }
}

/// Calibrated martingale measures: optimizers of random linear objectives
/// and mixtures of pairs of them. Empty if the calibrated set is.
pub fn random_calibrated_measures(rng: &mut EnsembleRng, m: &Market<Rational>, count: usize) -> Vec<PathMeasure<Rational>> {
    let mut out: Vec<PathMeasure<Rational>> = Vec::with_capacity(count);
    while out.len() < count {
        if out.len() >= 2 && rng.gen_bool(0.5) {
            let a = out.choose(rng).expect("nonempty").clone();
            let b = out.choose(rng).expect("nonempty").clone();
            let t = Rational::ratio(rng.gen_range(1..=3), 4);
            let weights = a
                .weights
                .iter()
                .zip(&b.weights)
                .map(|(x, y)| t.clone() * x.clone() + (Rational::one() - t.clone()) * y.clone())
                .collect();
            out.push(PathMeasure { weights });
            continue;
        }
        let xi: Vec<_> = (0..m.num_paths()).map(|_| Some(small(rng, -5, 5))).collect();
        match dual::sup_calibrated(m, &xi) {
            Ok(d) => out.push(d.measure.expect("finite objective")),
            Err(_) => return Vec::new(),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeacockParams {
    pub max_horizon: usize,
    pub max_marginals: usize,
    pub max_support: usize,
    pub max_paths: usize,
    pub max_stopping_rules: u128,
}

impl Default for PeacockParams {
    fn default() -> Self {
        PeacockParams { max_horizon: 3, max_marginals: 2, max_support: 5, max_paths: 40, max_stopping_rules: 64 }
    }
}

/// One martingale step from every atom of a law: each point spreads to a
/// few mean-preserving neighbours. Coinciding points are merged.
fn spread(rng: &mut EnsembleRng, law: &[(Rational, Rational)]) -> Vec<(Rational, Rational)> {
    let mut out: Vec<(Rational, Rational)> = Vec::new();
    for (x, w) in law {
        let b = rng.gen_range(1..=3usize);
        let offs = offsets(rng, b, 1, false);
        for o in offs {
            let y = x.clone() + o[0].clone();
            let share = w.clone() / Rational::from_i64(b as i64);
            match out.iter_mut().find(|(z, _)| *z == y) {
                Some(e) => e.1 = e.1.clone() + share,
                None => out.push((y, share)),
            }
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

/// A one-dimensional peacock built by successive martingale spreads of
/// `δ_{s0}`, together with its market on the default grid.
pub fn random_peacock(rng: &mut EnsembleRng, p: &PeacockParams) -> (MarginalSpec<Rational>, Market<Rational>) {
    loop {
        let horizon = rng.gen_range(1..=p.max_horizon);
        let m_count = rng.gen_range(1..=p.max_marginals.min(horizon));
        let mut dates: Vec<usize> = (1..horizon).collect();
        dates.shuffle(rng);
        let mut times: Vec<usize> = dates.into_iter().take(m_count - 1).collect();
        times.push(horizon);
        times.sort_unstable();
        let s0 = small(rng, -1, 1);
        let mut law = vec![(s0.clone(), Rational::one())];
        let mut marginals = Vec::new();
        for _ in &times {
            law = spread(rng, &law);
            marginals.push(law.iter().map(|(x, w)| (vec![x.clone()], w.clone())).collect::<Vec<_>>());
        }
        if marginals.iter().any(|mu| mu.len() > p.max_support) {
            continue;
        }
        let spec = MarginalSpec { times, marginals, s0: vec![s0] };
        let grid = mot::support_grid(&spec, horizon);
        let paths: usize = grid.iter().map(Vec::len).product();
        if paths > p.max_paths {
            continue;
        }
        let m = mot::build_mot_market(&spec, &grid).expect("spreads yield a valid peacock");
        if dual::count_stopping_times(&m) > p.max_stopping_rules {
            continue;
        }
        return (spec, m);
    }
}
