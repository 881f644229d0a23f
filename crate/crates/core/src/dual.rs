//! Dual values over calibrated martingale measures.
//!
//! * strong: `sup_Q sup_τ E^Q[Φ_τ]` over stopping times of the market
//!   filtration, by exhaustive enumeration of stopping rules;
//! * weak: `sup E^Q̄[Φ]` over calibrated martingale measures on the enlarged
//!   space, a single linear program;
//! * randomized stopping, pseudo-stopping and immersion checks, which sit
//!   between the two.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lp::{self, LpProblem, LpSolution, Sense};
use crate::market::{AmericanPayoff, EnlargedMarket, EnlargedMeasure, Market, PathMeasure};
use crate::measure_lp::{MeasureSet, SupOutcome};
use crate::scalar::{ext_cmp, ExtScalar, Scalar};
use crate::{hedging, DEFAULT_ENUMERATION_CAP};

/// Exercise date per path, adapted to the market filtration.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StoppingRule {
    pub tau: Vec<usize>,
}

impl StoppingRule {
    pub fn constant(m: &Market<impl Scalar>, k: usize) -> Self {
        StoppingRule { tau: vec![k; m.num_paths()] }
    }

    /// `{τ = k}` is a union of time-`k` atoms for every `k`.
    pub fn is_adapted<F: Scalar>(&self, m: &Market<F>) -> bool {
        if self.tau.len() != m.num_paths() || self.tau.iter().any(|&t| t == 0 || t > m.horizon) {
            return false;
        }
        (1..=m.horizon).all(|k| {
            m.levels[k].iter().all(|&node| {
                let paths = m.nodes[node].paths.clone();
                let stopped = paths.clone().filter(|&p| self.tau[p] == k).count();
                stopped == 0 || stopped == paths.len()
            })
        })
    }
}

/// Adapted increments `ΔV_k ≥ 0` with `Σ_k ΔV_k = 1` on every path.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomizedStoppingRule<F> {
    /// `increments[k-1][path]`.
    pub increments: Vec<Vec<F>>,
}

impl<F: Scalar> RandomizedStoppingRule<F> {
    pub fn from_rule(m: &Market<F>, rule: &StoppingRule) -> Self {
        RandomizedStoppingRule {
            increments: (1..=m.horizon)
                .map(|k| rule.tau.iter().map(|&t| if t == k { F::one() } else { F::zero() }).collect())
                .collect(),
        }
    }

    pub fn uniform(m: &Market<F>) -> Self {
        let w = F::one() / F::from_i64(m.horizon as i64);
        RandomizedStoppingRule { increments: vec![vec![w; m.num_paths()]; m.horizon] }
    }

    pub fn is_valid(&self, m: &Market<F>) -> bool {
        if self.increments.len() != m.horizon {
            return false;
        }
        for (k, row) in self.increments.iter().enumerate() {
            if row.len() != m.num_paths() || row.iter().any(Scalar::is_neg) {
                return false;
            }
            for &node in &m.levels[k + 1] {
                let mut paths = m.nodes[node].paths.clone();
                let first = paths.next().expect("nonempty atom");
                if !paths.all(|p| row[p].eq_tol(&row[first])) {
                    return false;
                }
            }
        }
        (0..m.num_paths()).all(|p| {
            let total = self.increments.iter().fold(F::zero(), |a, r| a + r[p].clone());
            total.eq_tol(&F::one())
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualValue<F> {
    pub value: ExtScalar<F>,
    /// A maximizing measure; `None` when the value is `−∞`.
    pub measure: Option<PathMeasure<F>>,
}

/// `sup_{Q ∈ M_g} E^Q[ξ]`.
pub fn sup_calibrated<F: Scalar>(m: &Market<F>, xi: &[ExtScalar<F>]) -> Result<DualValue<F>> {
    let m = if m.is_normalized() { m.clone() } else { m.normalize_statics() };
    let layout = m.layout();
    let set = MeasureSet::whole(&layout, true);
    match set.sup(xi)? {
        SupOutcome::Empty => Err(Error::NoCalibratedMeasure),
        SupOutcome::MinusInfinity => Ok(DualValue { value: None, measure: None }),
        SupOutcome::Attained(v, w) => Ok(DualValue { value: Some(v), measure: Some(PathMeasure { weights: w }) }),
    }
}

/// Number of adapted stopping rules, saturating.
pub fn count_stopping_times<F: Scalar>(m: &Market<F>) -> u128 {
    fn count<F: Scalar>(m: &Market<F>, node: usize) -> u128 {
        let n = &m.nodes[node];
        if n.time == m.horizon {
            return 1;
        }
        let cont = n.children.iter().fold(1u128, |acc, &c| acc.saturating_mul(count(m, c)));
        if n.time == 0 {
            cont
        } else {
            cont.saturating_add(1)
        }
    }
    count(m, m.levels[0][0])
}

/// Every adapted stopping rule with values in `1..=N`, stop-before-continue
/// at each atom, children in tree order.
pub fn enumerate_stopping_times<F: Scalar>(m: &Market<F>, cap: u128) -> Result<Vec<StoppingRule>> {
    let estimate = count_stopping_times(m);
    if estimate > cap {
        return Err(Error::EnumerationCapExceeded { estimate, cap });
    }
    // Options for a subtree: exercise dates on its path range.
    fn options<F: Scalar>(m: &Market<F>, node: usize) -> Vec<Vec<usize>> {
        let n = &m.nodes[node];
        let width = n.paths.len();
        let mut out = Vec::new();
        if n.time >= 1 {
            out.push(vec![n.time; width]);
        }
        if n.time < m.horizon {
            let mut combos: Vec<Vec<usize>> = vec![Vec::with_capacity(width)];
            for &c in &n.children {
                let child = options(m, c);
                let mut next = Vec::with_capacity(combos.len() * child.len());
                for prefix in &combos {
                    for suffix in &child {
                        let mut v = prefix.clone();
                        v.extend_from_slice(suffix);
                        next.push(v);
                    }
                }
                combos = next;
            }
            out.extend(combos);
        }
        out
    }
    Ok(options(m, m.levels[0][0]).into_iter().map(|tau| StoppingRule { tau }).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrongValue<F> {
    pub value: ExtScalar<F>,
    pub tau: StoppingRule,
    pub measure: Option<PathMeasure<F>>,
}

/// `sup_{Q ∈ M_g} sup_{τ} E^Q[Φ_τ]`, maximizing over enumerated rules; ties
/// go to the first rule in enumeration order.
pub fn strong_value<F: Scalar>(m: &Market<F>, phi: &AmericanPayoff<F>) -> Result<StrongValue<F>> {
    strong_value_capped(m, phi, DEFAULT_ENUMERATION_CAP)
}

pub fn strong_value_capped<F: Scalar>(
    m: &Market<F>,
    phi: &AmericanPayoff<F>,
    cap: u128,
) -> Result<StrongValue<F>> {
    phi.check(m)?;
    let m = if m.is_normalized() { m.clone() } else { m.normalize_statics() };
    let rules = enumerate_stopping_times(&m, cap)?;
    let layout = m.layout();
    let set = MeasureSet::whole(&layout, true);
    if set.is_empty()? {
        return Err(Error::NoCalibratedMeasure);
    }
    let values: Vec<Result<(ExtScalar<F>, Option<Vec<F>>)>> = rules
        .par_iter()
        .map(|rule| match set.sup(&phi.stopped(&rule.tau))? {
            SupOutcome::Empty => Err(Error::NoCalibratedMeasure),
            SupOutcome::MinusInfinity => Ok((None, None)),
            SupOutcome::Attained(v, w) => Ok((Some(v), Some(w))),
        })
        .collect();
    let mut best: Option<(usize, ExtScalar<F>, Option<Vec<F>>)> = None;
    for (i, r) in values.into_iter().enumerate() {
        let (v, w) = r?;
        let better = match &best {
            None => true,
            Some((_, bv, _)) => ext_cmp(&v, bv) == std::cmp::Ordering::Greater,
        };
        if better {
            best = Some((i, v, w));
        }
    }
    let (i, value, w) = best.expect("at least one stopping rule exists");
    Ok(StrongValue { value, tau: rules[i].clone(), measure: w.map(|weights| PathMeasure { weights }) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakValue<F> {
    pub value: ExtScalar<F>,
    pub measure: Option<EnlargedMeasure<F>>,
}

/// `sup_{Q̄ ∈ M̄_g} E^Q̄[Φ]` on the enlarged space.
pub fn weak_value<F: Scalar>(em: &EnlargedMarket<F>, phi: &AmericanPayoff<F>) -> Result<WeakValue<F>> {
    phi.check(&em.base)?;
    let owned;
    let em = if em.base.is_normalized() {
        em
    } else {
        owned = em.base.normalize_statics().enlarge();
        &owned
    };
    let layout = em.layout();
    let set = MeasureSet::whole(&layout, true);
    match set.sup(&em.claim(phi))? {
        SupOutcome::Empty => Err(Error::NoCalibratedMeasure),
        SupOutcome::MinusInfinity => Ok(WeakValue { value: None, measure: None }),
        SupOutcome::Attained(v, w) => {
            Ok(WeakValue { value: Some(v), measure: Some(EnlargedMeasure { weights: w }) })
        }
    }
}

/// Membership of `Q̄` in the calibrated martingale measures of the enlarged space.
pub fn check_enlarged_calibrated<F: Scalar>(
    em: &EnlargedMarket<F>,
    qbar: &EnlargedMeasure<F>,
) -> std::result::Result<(), String> {
    let base = em.base.normalize_statics();
    let layout = base.enlarge().layout();
    MeasureSet::whole(&layout, true).contains(&qbar.weights)
}

/// Membership of `Q` in the calibrated martingale measures on `Ω`.
pub fn check_calibrated<F: Scalar>(m: &Market<F>, q: &PathMeasure<F>) -> std::result::Result<(), String> {
    let layout = m.normalize_statics().layout();
    MeasureSet::whole(&layout, true).contains(&q.weights)
}

/// `Σ_ω q(ω) Σ_k Φ_k(ω) ΔV_k(ω)`; a `−∞` entry reached with positive weight gives `−∞`.
pub fn randomized_expectation<F: Scalar>(
    m: &Market<F>,
    q: &PathMeasure<F>,
    v: &RandomizedStoppingRule<F>,
    phi: &AmericanPayoff<F>,
) -> ExtScalar<F> {
    let mut acc = F::zero();
    for p in 0..m.num_paths() {
        if q.weights[p].is_zero_tol() {
            continue;
        }
        for k in 1..=m.horizon {
            let dv = &v.increments[k - 1][p];
            if dv.is_zero_tol() {
                continue;
            }
            acc = acc + q.weights[p].clone() * dv.clone() * phi.get(k, p).clone()?;
        }
    }
    Some(acc)
}

/// Best randomized stopping rule for a fixed `Q`, as a linear program in `ΔV`.
pub fn best_randomized<F: Scalar>(
    m: &Market<F>,
    q: &PathMeasure<F>,
    phi: &AmericanPayoff<F>,
) -> Result<(ExtScalar<F>, Option<RandomizedStoppingRule<F>>)> {
    // One variable per (k, time-k atom).
    let mut lp = LpProblem::new(Sense::Max, 0);
    let vars: Vec<Vec<usize>> = (1..=m.horizon)
        .map(|k| {
            m.levels[k]
                .iter()
                .map(|_| lp.add_var(F::zero(), lp::Bounds::nonneg()))
                .collect()
        })
        .collect();
    for k in 1..=m.horizon {
        for (a, &node) in m.levels[k].iter().enumerate() {
            let mut coef = F::zero();
            let mut forbidden = false;
            for p in m.nodes[node].paths.clone() {
                if q.weights[p].is_zero_tol() {
                    continue;
                }
                match phi.get(k, p) {
                    Some(x) => coef = coef + q.weights[p].clone() * x.clone(),
                    None => forbidden = true,
                }
            }
            let var = vars[k - 1][a];
            if forbidden {
                lp.bounds[var] = lp::Bounds::fixed(F::zero());
            } else {
                lp.objective[var] = coef;
            }
        }
    }
    for p in 0..m.num_paths() {
        let terms: Vec<(usize, F)> = (1..=m.horizon)
            .map(|k| {
                let node = m.atom(k, p);
                (vars[k - 1][m.atom_position(node)], F::one())
            })
            .collect();
        lp.add_eq(&terms, F::one());
    }
    match lp::solve(&lp)? {
        LpSolution::Optimal { x, value } => {
            let increments = (1..=m.horizon)
                .map(|k| {
                    (0..m.num_paths())
                        .map(|p| x[vars[k - 1][m.atom_position(m.atom(k, p))]].clone())
                        .collect()
                })
                .collect();
            Ok((Some(value), Some(RandomizedStoppingRule { increments })))
        }
        LpSolution::Infeasible { .. } => Ok((None, None)),
        LpSolution::Unbounded { .. } => Err(Error::Invariant("randomized stopping LP is bounded".into())),
    }
}

/// Why a measure fails the pseudo-stopping membership test.
#[derive(Debug, Clone, PartialEq)]
pub enum PseudoCertificate<F> {
    NotMartingale(String),
    NotCalibrated(String),
    /// `E^Q̄[M_T] ≠ M_0` for the martingale `M_k = Q(ω = path | F_k)`.
    StoppedMartingale { path: usize, initial: F, stopped: F },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoCheck<F> {
    pub member: bool,
    pub violated: Option<PseudoCertificate<F>>,
}

/// `Q(path | atom)` for every time, computed under the marginal `q`.
fn conditional_indicator<F: Scalar>(m: &Market<F>, q: &PathMeasure<F>, path: usize, k: usize, at: usize) -> F {
    let node = m.atom(k, at);
    if !m.nodes[node].paths.contains(&path) {
        return F::zero();
    }
    let mass = m.nodes[node].paths.clone().fold(F::zero(), |a, p| a + q.weights[p].clone());
    if mass.is_zero_tol() {
        F::zero()
    } else {
        q.weights[path].clone() / mass
    }
}

/// Is `S` an `F`-martingale under `Q̄`, is `Q̄` calibrated, and is `T` an
/// `F`-pseudo-stopping time (tested on the spanning family of conditional
/// path indicators)?
pub fn is_pseudo_stopping<F: Scalar>(em: &EnlargedMarket<F>, qbar: &EnlargedMeasure<F>) -> PseudoCheck<F> {
    let base = em.base.normalize_statics();
    let q = em.marginal(qbar);
    let layout = base.layout();
    if let Err(e) = MeasureSet::whole(&layout, false).contains(&q.weights) {
        return PseudoCheck { member: false, violated: Some(PseudoCertificate::NotMartingale(e)) };
    }
    if let Err(e) = MeasureSet::whole(&layout, true).contains(&q.weights) {
        return PseudoCheck { member: false, violated: Some(PseudoCertificate::NotCalibrated(e)) };
    }
    for path in 0..base.num_paths() {
        let initial = q.weights[path].clone();
        let mut stopped = F::zero();
        for (i, &(p, theta)) in em.points.iter().enumerate() {
            let w = &qbar.weights[i];
            if w.is_zero_tol() {
                continue;
            }
            stopped = stopped + w.clone() * conditional_indicator(&base, &q, path, theta, p);
        }
        if !stopped.eq_tol(&initial) {
            return PseudoCheck {
                member: false,
                violated: Some(PseudoCertificate::StoppedMartingale { path, initial, stopped }),
            };
        }
    }
    PseudoCheck { member: true, violated: None }
}

/// `Q̄[T > k | F_n] = Q̄[T > k | F_k]` for all `k ≤ n` on charged atoms.
pub fn is_immersion<F: Scalar>(em: &EnlargedMarket<F>, qbar: &EnlargedMeasure<F>) -> bool {
    let m = &em.base;
    let n_h = m.horizon;
    // Conditional probability of {T > k} on a node's paths; None if uncharged.
    let cond = |node: usize, k: usize| -> Option<F> {
        let mut mass = F::zero();
        let mut later = F::zero();
        for p in m.nodes[node].paths.clone() {
            for theta in 1..=n_h {
                let w = &qbar.weights[em.point_index(p, theta)];
                mass = mass + w.clone();
                if theta > k {
                    later = later + w.clone();
                }
            }
        }
        (!mass.is_zero_tol()).then(|| later / mass)
    };
    for k in 0..=n_h {
        for n in k..=n_h {
            for &node in &m.levels[n] {
                let Some(fine) = cond(node, k) else { continue };
                let path = m.nodes[node].paths.start;
                let coarse = cond(m.atom(k, path), k).expect("ancestor of a charged atom is charged");
                if !fine.eq_tol(&coarse) {
                    return false;
                }
            }
        }
    }
    true
}

/// Primal, weak and strong values side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport<F> {
    pub primal: F,
    pub weak_dual: F,
    pub strong_dual: F,
    pub gap_weak_strong: F,
    pub duality_holds: bool,
}

pub fn duality_gap<F: Scalar>(m: &Market<F>, phi: &AmericanPayoff<F>) -> Result<GapReport<F>> {
    duality_gap_capped(m, phi, DEFAULT_ENUMERATION_CAP)
}

pub fn duality_gap_capped<F: Scalar>(m: &Market<F>, phi: &AmericanPayoff<F>, cap: u128) -> Result<GapReport<F>> {
    let primal = hedging::price_american(m, phi, true)?.value;
    let weak = weak_value(&m.enlarge(), phi)?
        .value
        .ok_or_else(|| Error::Degenerate("weak dual value".into()))?;
    let strong = strong_value_capped(m, phi, cap)?
        .value
        .ok_or_else(|| Error::Degenerate("strong dual value".into()))?;
    if strong.cmp_tol(&weak) == std::cmp::Ordering::Greater
        || weak.cmp_tol(&primal) == std::cmp::Ordering::Greater
    {
        return Err(Error::Invariant(format!(
            "expected strong ≤ weak ≤ primal, got {} / {} / {}",
            strong.render(),
            weak.render(),
            primal.render()
        )));
    }
    Ok(GapReport {
        gap_weak_strong: weak.clone() - strong.clone(),
        duality_holds: weak.eq_tol(&primal),
        primal,
        weak_dual: weak,
        strong_dual: strong,
    })
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

    fn some(v: Vec<Rational>) -> Vec<ExtScalar<Rational>> {
        v.into_iter().map(Some).collect()
    }

    #[test]
    fn intro_calibrated_sup_of_second_payoff() {
        let fx = fixtures::intro_fixture();
        let xi = fx.payoff.values[1].clone();
        let d = sup_calibrated(&fx.market, &xi).unwrap();
        assert_eq!(d.value, Some(q(1, 1)));
        let w = d.measure.unwrap().weights;
        // Lies in the calibrated family (q, 3/4 − 2q, 2q − 1/4, 1/2 − q), ordered −2, −1, 1, 2.
        let qq = w[3].clone();
        assert_eq!(w[2], q(3, 4) - q(2, 1) * qq.clone());
        assert_eq!(w[1], q(2, 1) * qq.clone() - q(1, 4));
        assert_eq!(w[0], q(1, 2) - qq.clone());
        assert!(qq >= q(1, 8) && qq <= q(3, 8));
    }

    #[test]
    fn calibrated_sup_of_constants_and_the_asset() {
        let m = fixtures::hobson_neuberger();
        assert_eq!(sup_calibrated(&m, &vec![Some(q(5, 2)); 6]).unwrap().value, Some(q(5, 2)));
        let s: Vec<_> = (0..6).map(|p| Some(m.asset(p, 2)[0].clone())).collect();
        assert_eq!(sup_calibrated(&m, &s).unwrap().value, Some(q(2, 1)));
    }

    #[test]
    fn uncalibratable_market_is_an_error() {
        let spec = fixtures::intro_spec().static_option(
            "bad",
            &[("m2", q(1, 1)), ("m1", q(1, 1)), ("p1", q(1, 1)), ("p2", q(1, 1))],
            q(2, 1),
        );
        let m = Market::from_spec(&spec).unwrap();
        assert_eq!(sup_calibrated(&m, &some(vec![q(0, 1); 4])), Err(Error::NoCalibratedMeasure));
    }

    #[test]
    fn intro_has_two_stopping_rules() {
        let m = fixtures::intro();
        let rules = enumerate_stopping_times(&m, 100).unwrap();
        assert_eq!(rules, vec![StoppingRule::constant(&m, 1), StoppingRule::constant(&m, 2)]);
    }

    #[test]
    fn one_period_has_one_rule() {
        let spec = MarketSpec::new("one", 1)
            .node("r", 0, None, vec![q(0, 1)])
            .node("a", 1, Some("r"), vec![q(1, 1)])
            .node("b", 1, Some("r"), vec![q(-1, 1)]);
        let m = Market::from_spec(&spec).unwrap();
        assert_eq!(enumerate_stopping_times(&m, 10).unwrap().len(), 1);
    }

    fn binary_tree() -> Market<Rational> {
        let spec = MarketSpec::new("bin", 2)
            .node("r", 0, None, vec![q(0, 1)])
            .node("u", 1, Some("r"), vec![q(1, 1)])
            .node("uu", 2, Some("u"), vec![q(2, 1)])
            .node("ud", 2, Some("u"), vec![q(0, 1)])
            .node("d", 1, Some("r"), vec![q(-1, 1)])
            .node("du", 2, Some("d"), vec![q(0, 1)])
            .node("dd", 2, Some("d"), vec![q(-2, 1)]);
        Market::from_spec(&spec).unwrap()
    }

    #[test]
    fn binary_tree_rules_match_brute_force() {
        let m = binary_tree();
        let rules = enumerate_stopping_times(&m, 100).unwrap();
        // Brute force: every map paths → {1, 2}, keep the adapted ones.
        let mut brute = Vec::new();
        for code in 0..16u32 {
            let tau: Vec<usize> = (0..4).map(|p| 1 + ((code >> p) & 1) as usize).collect();
            let rule = StoppingRule { tau };
            if rule.is_adapted(&m) {
                brute.push(rule);
            }
        }
        assert_eq!(rules.len(), 4);
        assert_eq!(brute.len(), 4);
        for r in &rules {
            assert!(brute.contains(r));
        }
    }

    #[test]
    fn cap_is_enforced() {
        let m = binary_tree();
        assert_eq!(
            enumerate_stopping_times(&m, 3),
            Err(Error::EnumerationCapExceeded { estimate: 4, cap: 3 })
        );
    }

    #[test]
    fn intro_strong_values() {
        let fx = fixtures::intro_fixture();
        let without = strong_value(&fx.market.without_statics(), &fx.payoff).unwrap();
        assert_eq!(without.value, Some(q(2, 1)));
        let with = strong_value(&fx.market, &fx.payoff).unwrap();
        assert_eq!(with.value, Some(q(1, 1)));
    }

    #[test]
    fn one_period_strong_value_is_calibrated_sup() {
        let m = Market::from_spec(
            &MarketSpec::new("one", 1)
                .node("r", 0, None, vec![q(0, 1)])
                .node("a", 1, Some("r"), vec![q(1, 1)])
                .node("b", 1, Some("r"), vec![q(-3, 1)]),
        )
        .unwrap();
        let phi = AmericanPayoff::new(vec![some(vec![q(4, 1), q(1, 1)])]);
        let strong = strong_value(&m, &phi).unwrap().value;
        assert_eq!(strong, sup_calibrated(&m, &phi.values[0]).unwrap().value);
        assert_eq!(strong, Some(q(13, 4)));
    }

    #[test]
    fn intro_weak_value_and_gap_report() {
        let fx = fixtures::intro_fixture();
        let weak = weak_value(&fx.market.enlarge(), &fx.payoff).unwrap();
        assert_eq!(weak.value, Some(q(3, 2)));
        let r = duality_gap(&fx.market, &fx.payoff).unwrap();
        assert_eq!(
            r,
            GapReport {
                primal: q(3, 2),
                weak_dual: q(3, 2),
                strong_dual: q(1, 1),
                gap_weak_strong: q(1, 2),
                duality_holds: true
            }
        );
        let r0 = duality_gap(&fx.market.without_statics(), &fx.payoff).unwrap();
        assert_eq!((r0.primal, r0.weak_dual, r0.strong_dual), (q(2, 1), q(2, 1), q(2, 1)));
        assert_eq!(r0.gap_weak_strong, q(0, 1));
    }

    #[test]
    fn european_payoff_weak_value_is_calibrated_sup() {
        let m = fixtures::hobson_neuberger();
        let xi: Vec<Rational> = (0..6).map(|p| q((p as i64 * 7) % 5, 2)).collect();
        let phi = AmericanPayoff::from_fn(&m, |_, p| Some(xi[p].clone()));
        let weak = weak_value(&m.enlarge(), &phi).unwrap().value;
        assert_eq!(weak, sup_calibrated(&m, &some(xi)).unwrap().value);
    }

    #[test]
    fn randomized_expectation_special_cases() {
        let fx = fixtures::intro_fixture();
        let m = &fx.market;
        let qm = PathMeasure { weights: vec![q(1, 4); 4] };
        for rule in enumerate_stopping_times(m, 10).unwrap() {
            let v = RandomizedStoppingRule::from_rule(m, &rule);
            assert!(v.is_valid(m));
            let direct = qm.expectation(&fx.payoff.stopped(&rule.tau).into_iter().map(Option::unwrap).collect::<Vec<_>>());
            assert_eq!(randomized_expectation(m, &qm, &v, &fx.payoff), Some(direct));
        }
        let uni = RandomizedStoppingRule::uniform(m);
        // (1 + 1) / 2 on |S|=1 paths... average of Φ_1 = 1 and Φ_2 ∈ {0, 2}: mean 1.
        assert_eq!(randomized_expectation(m, &qm, &uni, &fx.payoff), Some(q(1, 1)));
    }

    #[test]
    fn minus_infinity_propagates_in_randomized_expectation() {
        let m = fixtures::intro();
        let phi = AmericanPayoff::from_fn(&m, |k, _| if k == 1 { None } else { Some(q(1, 1)) });
        let qm = PathMeasure { weights: vec![q(1, 4); 4] };
        assert_eq!(randomized_expectation(&m, &qm, &RandomizedStoppingRule::uniform(&m), &phi), None);
        let (best, _) = best_randomized(&m, &qm, &phi).unwrap();
        assert_eq!(best, Some(q(1, 1)));
    }

    #[test]
    fn lifted_stopping_rules_are_pseudo_stopping_and_immersed() {
        let fx = fixtures::intro_fixture();
        let em = fx.market.enlarge();
        let qm = PathMeasure { weights: vec![q(1, 4), q(1, 4), q(1, 4), q(1, 4)] };
        for rule in enumerate_stopping_times(&fx.market, 10).unwrap() {
            let qbar = em.lift(&qm, &rule.tau);
            assert!(is_pseudo_stopping(&em, &qbar).member);
            assert!(is_immersion(&em, &qbar));
        }
    }

    #[test]
    fn uncalibrated_marginal_fails_pseudo_stopping() {
        let fx = fixtures::intro_fixture();
        let em = fx.market.enlarge();
        // Martingale but g priced at 1/2·(2·1/2) − ... : mass only on ±1 gives E[g] = 1/2.
        let qm = PathMeasure { weights: vec![q(0, 1), q(1, 2), q(1, 2), q(0, 1)] };
        let check = is_pseudo_stopping(&em, &em.lift(&qm, &[2, 2, 2, 2]));
        assert!(matches!(check.violated, Some(PseudoCertificate::NotCalibrated(_))));
    }
}
