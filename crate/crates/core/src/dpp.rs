//! Dynamic programming on `Ω` and `Ω̄`: conditional sup operators `E_k`,
//! the enlarged Snell envelope `Ē^k`, the optimal exercise rule `τ*`, and the
//! dynamic extension in which static options become dynamically traded.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dual::{self, StoppingRule};
use crate::error::{Error, Result};
use crate::hedging;
use crate::market::{AmericanPayoff, EnlargedMarket, EnlargedMeasure, Layout, Market, MarketSpec, PathMeasure};
use crate::measure_lp::{MeasureSet, SupOutcome};
use crate::scalar::{ext_eq, ext_max, ExtScalar, Scalar};
use crate::DEFAULT_ENUMERATION_CAP;

fn atom_sup<F: Scalar>(layout: &Layout<F>, m: &Market<F>, node: usize, xi: &[ExtScalar<F>]) -> ExtScalar<F> {
    let n = &m.nodes[node];
    let set = MeasureSet { layout, points: n.paths.clone().collect(), from_time: n.time, calibrate: false };
    // Constant claims need only feasibility.
    let first = &xi[n.paths.start];
    if n.paths.clone().all(|p| ext_eq(&xi[p], first)) {
        return match set.is_empty() {
            Ok(false) => first.clone(),
            _ => None,
        };
    }
    match set.sup(xi) {
        Ok(SupOutcome::Attained(v, _)) => Some(v),
        _ => None,
    }
}

/// `E_k(ξ)` on every time-`k` atom (in `levels[k]` order): the sup of
/// `E^Q[ξ]` over martingale measures carried by the atom. Statics are ignored;
/// an atom with no martingale measure, or on which every one charges a `−∞`
/// entry, gets `−∞`.
pub fn operator_e_k<F: Scalar>(m: &Market<F>, k: usize, xi: &[ExtScalar<F>]) -> Vec<ExtScalar<F>> {
    let layout = m.without_statics().layout();
    m.levels[k].par_iter().map(|&node| atom_sup(&layout, m, node, xi)).collect()
}

/// The envelope `Ē^k(Φ)` for `k = 0..=N`, with `Ē^N = Φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnellEnvelope<F> {
    /// `levels[k][atom][θ-1]`, atoms in `levels[k]` order. The values for
    /// `θ ≥ k` coincide, so each row is constant on every `F̄_k`-atom.
    pub levels: Vec<Vec<Vec<ExtScalar<F>>>>,
    /// `exercise[k-1][atom] = E_k(Φ_k)`.
    pub exercise: Vec<Vec<ExtScalar<F>>>,
}

impl<F: Scalar> SnellEnvelope<F> {
    /// `Ē^0(Φ)`.
    pub fn value(&self) -> &ExtScalar<F> {
        &self.levels[0][0][0]
    }

    /// `Ē^k(Φ)(ω, θ)`.
    pub fn at(&self, m: &Market<F>, k: usize, path: usize, theta: usize) -> &ExtScalar<F> {
        &self.levels[k][m.atom_position(m.atom(k, path))][theta - 1]
    }
}

/// Backward recursion `Ē^k = Ē_k ∘ Ē^{k+1}`: for `θ < k` the exercise date is
/// frozen and only conditioned, for `θ ≥ k` the holder takes the better of
/// stopping at `k` and continuing.
pub fn snell_enlarged<F: Scalar>(m: &Market<F>, phi: &AmericanPayoff<F>) -> Result<SnellEnvelope<F>> {
    phi.check(m)?;
    let n = m.horizon;
    let m = m.without_statics();
    let layout = m.layout();
    let spread = |k: usize, per_atom: &[Vec<ExtScalar<F>>]| -> Vec<Vec<ExtScalar<F>>> {
        (0..n)
            .map(|t| (0..m.num_paths()).map(|p| per_atom[m.atom_position(m.atom(k, p))][t].clone()).collect())
            .collect()
    };
    // psi[θ-1][path] = Ē^{k+1}(Φ)(ω, θ).
    let mut psi: Vec<Vec<ExtScalar<F>>> = phi.values.clone();
    let mut levels = vec![Vec::new(); n + 1];
    levels[n] = m.levels[n]
        .iter()
        .map(|&node| {
            let p = m.nodes[node].paths.start;
            (1..=n).map(|t| phi.get(t, p).clone()).collect()
        })
        .collect();
    for k in (1..n).rev() {
        let per_atom: Vec<Vec<ExtScalar<F>>> = m.levels[k]
            .par_iter()
            .map(|&node| {
                let mut row: Vec<ExtScalar<F>> =
                    (1..k).map(|t| atom_sup(&layout, &m, node, &psi[t - 1])).collect();
                let stop = atom_sup(&layout, &m, node, &psi[k - 1]);
                let cont = atom_sup(&layout, &m, node, &psi[k]);
                let best = ext_max(stop, cont);
                row.extend(std::iter::repeat(best).take(n - k + 1));
                row
            })
            .collect();
        psi = spread(k, &per_atom);
        levels[k] = per_atom;
    }
    let root = m.levels[0][0];
    let v0 = atom_sup(&layout, &m, root, &psi[0]);
    levels[0] = vec![vec![v0; n]];
    let exercise = (1..=n).map(|k| operator_e_k(&m, k, &phi.values[k - 1])).collect();
    Ok(SnellEnvelope { levels, exercise })
}

/// `τ*(ω) = inf{k ≥ 1 : E_k(Φ_k)(ω) = Ē^k(Φ)(ω, k)}`.
pub fn optimal_tau_star<F: Scalar>(
    m: &Market<F>,
    phi: &AmericanPayoff<F>,
    env: &SnellEnvelope<F>,
) -> Result<StoppingRule> {
    phi.check(m)?;
    let tau = (0..m.num_paths())
        .map(|p| {
            (1..=m.horizon)
                .find(|&k| {
                    let atom = m.atom_position(m.atom(k, p));
                    ext_eq(&env.exercise[k - 1][atom], &env.levels[k][atom][k - 1])
                })
                .ok_or(Error::NoStopFound { path: p })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StoppingRule { tau })
}

/// A finite dynamic extension built on the support of one enlarged measure:
/// time-`k` nodes are the charged `F̄_k`-atoms, and the statics become the
/// traded processes `Y_k = E[g | F̄_k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicExtension<F> {
    /// Assets `(S, Y)`, no statics.
    pub market: Market<F>,
    /// The enlarged market with normalized statics.
    pub base: EnlargedMarket<F>,
    /// Extension path ↦ point of `Ω̄`.
    pub projection: Vec<usize>,
    pub source_measure: EnlargedMeasure<F>,
    /// The source measure carried over to the extension paths.
    pub pushforward: PathMeasure<F>,
    pub static_labels: Vec<String>,
}

impl<F: Scalar> DynamicExtension<F> {
    /// `Φ̂_k = Φ_k ∘ projection`.
    pub fn payoff(&self, phi: &AmericanPayoff<F>) -> AmericanPayoff<F> {
        AmericanPayoff::from_fn(&self.market, |k, p| phi.get(k, self.base.points[self.projection[p]].0).clone())
    }

    /// `Y_k` along an extension path.
    pub fn y(&self, path: usize, k: usize) -> &[F] {
        &self.market.asset(path, k)[self.base.base.dim..]
    }
}

/// Builds the extension of `m` generated by `qbar`, which must lie in the
/// calibrated martingale measures of `Ω̄`.
pub fn build_dynamic_extension<F: Scalar>(m: &Market<F>, qbar: &EnlargedMeasure<F>) -> Result<DynamicExtension<F>> {
    let base = m.normalize_statics().enlarge();
    let layout = base.layout();
    if qbar.weights.len() != layout.n_points {
        return Err(Error::NotCalibrated(format!(
            "{} weights for {} enlarged points",
            qbar.weights.len(),
            layout.n_points
        )));
    }
    MeasureSet::whole(&layout, true).contains(&qbar.weights).map_err(Error::NotCalibrated)?;
    let w = &qbar.weights;
    let n = base.horizon();
    let node_id = |k: usize, a: usize| -> String {
        let atom = &base.atoms[k][a];
        let id = &base.base.nodes[atom.node].id;
        match atom.stopped {
            Some(t) => format!("{id}@{t}"),
            None => format!("{id}@>{k}"),
        }
    };
    let mut spec = MarketSpec::new(format!("{}-extension", m.name), n);
    let mut leaf_point = std::collections::HashMap::new();
    for k in 0..=n {
        for (a, atom) in base.atoms[k].iter().enumerate() {
            let mass = atom.points.iter().fold(F::zero(), |acc, &pt| acc + w[pt].clone());
            if mass.is_zero_tol() || mass.is_neg() {
                continue;
            }
            let mut assets = base.base.nodes[atom.node].assets.clone();
            for g in &layout.statics {
                let num = atom.points.iter().fold(F::zero(), |acc, &pt| {
                    if w[pt].is_zero_tol() {
                        acc
                    } else {
                        acc + w[pt].clone() * g[pt].clone()
                    }
                });
                assets.push(num / mass.clone());
            }
            let parent = (k > 0).then(|| node_id(k - 1, layout.atom_of[k - 1][atom.points[0]]));
            let id = node_id(k, a);
            if k == n {
                leaf_point.insert(id.clone(), atom.points[0]);
            }
            spec = spec.node(&id, k, parent.as_deref(), assets);
        }
    }
    let market = Market::from_spec(&spec)?;
    let projection: Vec<usize> = (0..market.num_paths()).map(|p| leaf_point[market.path_id(p)]).collect();
    let pushforward = PathMeasure { weights: projection.iter().map(|&pt| w[pt].clone()).collect() };
    Ok(DynamicExtension {
        market,
        base,
        projection,
        source_measure: qbar.clone(),
        pushforward,
        static_labels: m.statics.iter().map(|s| s.label.clone()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionCheck<F> {
    pub strong_value_hat: ExtScalar<F>,
    pub primal: F,
    pub realizes: bool,
    pub tau_hat: Option<StoppingRule>,
}

/// Strong value on the extension, compared with the American superhedging
/// price of the original market.
pub fn verify_extension<F: Scalar>(ext: &DynamicExtension<F>, phi: &AmericanPayoff<F>) -> Result<ExtensionCheck<F>> {
    verify_extension_capped(ext, phi, DEFAULT_ENUMERATION_CAP)
}

pub fn verify_extension_capped<F: Scalar>(
    ext: &DynamicExtension<F>,
    phi: &AmericanPayoff<F>,
    cap: u128,
) -> Result<ExtensionCheck<F>> {
    let primal = hedging::price_american(&ext.base.base, phi, true)?.value;
    let hat = dual::strong_value_capped(&ext.market, &ext.payoff(phi), cap)?;
    let realizes = hat.value.as_ref().is_some_and(|v| v.eq_tol(&primal));
    Ok(ExtensionCheck { strong_value_hat: hat.value, primal, realizes, tau_hat: Some(hat.tau) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionOutcome<F> {
    pub extension: DynamicExtension<F>,
    pub check: ExtensionCheck<F>,
    pub attempts: usize,
}

/// Solves the weak dual, builds the extension from its optimizer and checks
/// it. On failure, other optimal vertices are tried (found by maximizing a
/// seeded secondary objective over the optimal face), up to `retries` times.
pub fn extend_and_verify<F: Scalar>(
    m: &Market<F>,
    phi: &AmericanPayoff<F>,
    retries: usize,
    cap: u128,
) -> Result<ExtensionOutcome<F>> {
    let em = m.normalize_statics().enlarge();
    let weak = dual::weak_value(&em, phi)?;
    let (Some(value), Some(first)) = (weak.value, weak.measure) else {
        return Err(Error::Degenerate("weak dual value".into()));
    };
    let claim = em.claim(phi);
    let layout = em.layout();
    let face_row: Vec<F> = claim.iter().map(|c| c.clone().unwrap_or_else(F::zero)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut qbar = first;
    let mut attempts = 0;
    loop {
        attempts += 1;
        let extension = build_dynamic_extension(m, &qbar)?;
        let check = verify_extension_capped(&extension, phi, cap)?;
        if check.realizes || attempts > retries {
            return Ok(ExtensionOutcome { extension, check, attempts });
        }
        let secondary: Vec<ExtScalar<F>> = claim
            .iter()
            .map(|c| c.as_ref().map(|_| F::from_i64(rng.gen_range(-8..=8))))
            .collect();
        let set = MeasureSet::whole(&layout, true);
        match set.sup_with(&secondary, &[(face_row.clone(), value.clone())])? {
            SupOutcome::Attained(_, w) => qbar = EnlargedMeasure { weights: w },
            _ => return Err(Error::Invariant("optimal face of the weak dual is empty".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::market::MarketSpec;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    #[test]
    fn intro_operator_at_time_one() {
        let fx = fixtures::intro_fixture();
        let e1 = operator_e_k(&fx.market, 1, &fx.payoff.values[1]);
        assert_eq!(e1, vec![Some(q(2, 1))]);
        // Brute force over mean-zero measures on {−2,−1,1,2} with mass on ±1:
        // the mean-zero measure ½δ_{−1} + ½δ_1 attains 2, the max of Φ_2.
    }

    #[test]
    fn operator_on_constants_and_terminal_asset() {
        let m = fixtures::hobson_neuberger();
        let c = vec![Some(q(7, 3)); 6];
        assert_eq!(operator_e_k(&m, 1, &c), vec![Some(q(7, 3)); 2]);
        let s: Vec<_> = (0..6).map(|p| Some(m.asset(p, 2)[0].clone())).collect();
        assert_eq!(operator_e_k(&m, 1, &s), vec![Some(q(1, 1)), Some(q(3, 1))]);
        assert_eq!(operator_e_k(&m, 0, &s), vec![Some(q(2, 1))]);
    }

    #[test]
    fn operator_monotone_and_translation_equivariant() {
        let m = fixtures::hobson_neuberger();
        let a: Vec<_> = [3, -1, 4, 1, -5, 9].iter().map(|&v| Some(q(v, 1))).collect();
        let b: Vec<_> = a.iter().map(|v| v.clone().map(|x| x + q(1, 2))).collect();
        for k in 0..2 {
            let ea = operator_e_k(&m, k, &a);
            let eb = operator_e_k(&m, k, &b);
            for (x, y) in ea.iter().zip(&eb) {
                assert_eq!(x.clone().map(|x| x + q(1, 2)), *y);
            }
        }
    }

    #[test]
    fn intro_snell_without_statics() {
        let fx = fixtures::intro_fixture();
        let m = fx.market.without_statics();
        let env = snell_enlarged(&m, &fx.payoff).unwrap();
        assert_eq!(env.levels[1][0], vec![Some(q(2, 1)); 2]);
        assert_eq!(env.value(), &Some(q(2, 1)));
        let tau = optimal_tau_star(&m, &fx.payoff, &env).unwrap();
        assert_eq!(tau, StoppingRule::constant(&m, 2));
        let v = dual::sup_calibrated(&m, &fx.payoff.stopped(&tau.tau)).unwrap().value;
        assert_eq!(v, Some(q(2, 1)));
    }

    #[test]
    fn constant_payoff_envelope() {
        let m = fixtures::hobson_neuberger();
        let phi = AmericanPayoff::constant(&m, q(5, 1));
        let env = snell_enlarged(&m, &phi).unwrap();
        for lvl in &env.levels {
            for row in lvl {
                assert!(row.iter().all(|v| v == &Some(q(5, 1))));
            }
        }
        assert_eq!(optimal_tau_star(&m, &phi, &env).unwrap(), StoppingRule::constant(&m, 1));
    }

    #[test]
    fn european_embedding_composes_operators() {
        let m = fixtures::hobson_neuberger();
        let xi: Vec<Rational> = [0, 3, 1, 4, 1, 5].iter().map(|&v| q(v, 1)).collect();
        let phi = AmericanPayoff::european(&m, &xi);
        let env = snell_enlarged(&m, &phi).unwrap();
        let inner = operator_e_k(&m, 1, &xi.iter().cloned().map(Some).collect::<Vec<_>>());
        let lifted: Vec<_> = (0..6).map(|p| inner[m.atom_position(m.atom(1, p))].clone()).collect();
        assert_eq!(env.value(), &operator_e_k(&m, 0, &lifted)[0]);
    }

    #[test]
    fn one_period_stops_at_one() {
        let m = Market::from_spec(
            &MarketSpec::new("one", 1)
                .node("r", 0, None, vec![q(0, 1)])
                .node("a", 1, Some("r"), vec![q(1, 1)])
                .node("b", 1, Some("r"), vec![q(-1, 1)]),
        )
        .unwrap();
        let phi = AmericanPayoff::new(vec![vec![Some(q(2, 1)), Some(q(0, 1))]]);
        let env = snell_enlarged(&m, &phi).unwrap();
        assert_eq!(env.value(), &Some(q(1, 1)));
        assert_eq!(optimal_tau_star(&m, &phi, &env).unwrap().tau, vec![1, 1]);
    }

    fn intro_weak_optimum(em: &EnlargedMarket<Rational>) -> EnlargedMeasure<Rational> {
        // Paths are ordered −2, −1, 1, 2.
        let mut w = vec![q(0, 1); 8];
        for (p, t) in [(0, 1), (1, 2), (2, 2), (3, 1)] {
            w[em.point_index(p, t)] = q(1, 4);
        }
        EnlargedMeasure { weights: w }
    }

    #[test]
    fn intro_extension_matches_figure() {
        let fx = fixtures::intro_fixture();
        let em = fx.market.enlarge();
        let ext = build_dynamic_extension(&fx.market, &intro_weak_optimum(&em)).unwrap();
        assert_eq!(ext.market.num_paths(), 4);
        assert_eq!(ext.market.dim, 2);
        let mut y1: Vec<Rational> = (0..4).map(|p| ext.y(p, 1)[0].clone()).collect();
        y1.sort();
        y1.dedup();
        assert_eq!(y1, vec![q(-1, 2), q(1, 2)]);
        for p in 0..4 {
            assert_eq!(ext.y(p, 0), &[q(0, 1)]);
            let (path, _) = ext.base.points[ext.projection[p]];
            assert_eq!(ext.y(p, 2)[0], ext.base.base.statics[0].payoff[path]);
        }
        let check = verify_extension(&ext, &fx.payoff).unwrap();
        assert_eq!(check.strong_value_hat, Some(q(3, 2)));
        assert!(check.realizes);
        let tau = check.tau_hat.unwrap();
        for p in 0..4 {
            let expected = if ext.y(p, 1)[0] == q(-1, 2) { 1 } else { 2 };
            assert_eq!(tau.tau[p], expected);
        }
    }

    #[test]
    fn extension_rejects_uncalibrated_measure() {
        let fx = fixtures::intro_fixture();
        let em = fx.market.enlarge();
        let q0 = PathMeasure { weights: vec![q(0, 1), q(1, 2), q(1, 2), q(0, 1)] };
        let bad = em.lift(&q0, &[2, 2, 2, 2]);
        assert!(matches!(build_dynamic_extension(&fx.market, &bad), Err(Error::NotCalibrated(_))));
    }

    #[test]
    fn hobson_neuberger_figure_extension() {
        let fx = fixtures::hobson_neuberger_fixture();
        let em = fx.market.enlarge();
        let mut w = vec![q(0, 1); 12];
        // Paths: d0, d2, d4, u0, u2, u4.
        for (p, t, v) in [(0, 1, q(1, 5)), (1, 1, q(1, 5)), (0, 2, q(3, 40)), (2, 2, q(1, 40)), (3, 2, q(1, 8)), (5, 2, q(3, 8))] {
            w[em.point_index(p, t)] = v;
        }
        let qbar = EnlargedMeasure { weights: w };
        assert_eq!(em.expectation(&qbar, &fx.payoff), Some(q(18, 5)));
        let ext = build_dynamic_extension(&fx.market, &qbar).unwrap();
        // Conditional digital prices, i.e. Y_1 plus the static price.
        let mut prices: Vec<Rational> = (0..ext.market.num_paths()).map(|p| ext.y(p, 1)[0].clone() + q(2, 5)).collect();
        prices.sort();
        prices.dedup();
        assert_eq!(prices, vec![q(0, 1), q(1, 4), q(3, 4)]);
        let check = verify_extension(&ext, &fx.payoff).unwrap();
        assert_eq!(check.strong_value_hat, Some(q(18, 5)));
        assert!(check.realizes);
    }

    #[test]
    fn hobson_neuberger_extend_from_lp_optimum() {
        let fx = fixtures::hobson_neuberger_fixture();
        let out = extend_and_verify(&fx.market, &fx.payoff, 8, DEFAULT_ENUMERATION_CAP).unwrap();
        assert!(out.check.realizes);
        assert_eq!(out.check.strong_value_hat, Some(q(18, 5)));
        assert_eq!(out.attempts, 1);
    }

    #[test]
    fn statics_free_extension_reproduces_strong_value() {
        let m = fixtures::hobson_neuberger().without_statics();
        let phi = fixtures::hobson_neuberger_payoff(&m);
        let out = extend_and_verify(&m, &phi, 8, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(out.extension.market.dim, 1);
        assert_eq!(out.check.strong_value_hat, dual::strong_value(&m, &phi).unwrap().value);
        assert!(out.check.realizes);
    }
}
