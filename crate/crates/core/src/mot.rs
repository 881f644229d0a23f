//! Martingale optimal transport on finite grids: marginal specifications,
//! convex-order checks, markets whose statics pin the marginals, the
//! finite-option approximation ladder, and measure-valued martingales.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dual::{self, GapReport};
use crate::error::{Error, Result};
use crate::market::NumberJson;
use crate::market::{AmericanPayoff, Market, MarketError, MarketSpec, PathMeasure};
use crate::measure_lp::{MeasureSet, SupOutcome};
use crate::scalar::{Rational, Scalar};
use crate::DEFAULT_ENUMERATION_CAP;

/// Marginal laws `μ_i` of `S_{t_i}` at the dates `t_1 < … < t_M = N`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSpec<F> {
    pub times: Vec<usize>,
    /// `(support point, weight)` lists.
    pub marginals: Vec<Vec<(Vec<F>, F)>>,
    pub s0: Vec<F>,
}

fn vec_cmp<F: Scalar>(a: &[F], b: &[F]) -> std::cmp::Ordering {
    a.iter().zip(b).map(|(x, y)| x.cmp_tol(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
}

fn vec_eq<F: Scalar>(a: &[F], b: &[F]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.eq_tol(y))
}

fn render_point<F: Scalar>(x: &[F]) -> String {
    if x.len() == 1 {
        x[0].render()
    } else {
        format!("({})", x.iter().map(Scalar::render).collect::<Vec<_>>().join(","))
    }
}

impl<F: Scalar> MarginalSpec<F> {
    pub fn dim(&self) -> usize {
        self.s0.len()
    }

    pub fn horizon(&self) -> usize {
        self.times.last().copied().unwrap_or(0)
    }

    pub fn mean(&self, i: usize) -> Vec<F> {
        let mut m = vec![F::zero(); self.dim()];
        for (x, w) in &self.marginals[i] {
            for (a, b) in m.iter_mut().zip(x) {
                *a = a.clone() + w.clone() * b.clone();
            }
        }
        m
    }

    /// `μ_i({x})`.
    pub fn mass(&self, i: usize, x: &[F]) -> F {
        self.marginals[i].iter().filter(|(y, _)| vec_eq(x, y)).fold(F::zero(), |a, (_, w)| a + w.clone())
    }

    /// Support of `μ_i`, sorted and deduplicated.
    pub fn support(&self, i: usize) -> Vec<Vec<F>> {
        let mut pts: Vec<Vec<F>> = self.marginals[i].iter().map(|(x, _)| x.clone()).collect();
        pts.sort_by(|a, b| vec_cmp(a, b));
        pts.dedup_by(|a, b| vec_eq(a, b));
        pts
    }

    /// Structural checks: increasing dates from 1, positive weights summing
    /// to one, consistent dimensions.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::SupportMismatch(msg));
        if self.times.is_empty() || self.times.len() != self.marginals.len() {
            return bad(format!("{} dates for {} marginals", self.times.len(), self.marginals.len()));
        }
        if self.times[0] == 0 || self.times.windows(2).any(|w| w[0] >= w[1]) {
            return bad("marginal dates must be strictly increasing and start at 1 or later".into());
        }
        if self.s0.is_empty() {
            return bad("s0 is empty".into());
        }
        for (i, mu) in self.marginals.iter().enumerate() {
            if mu.is_empty() {
                return bad(format!("marginal {} is empty", i + 1));
            }
            if let Some((x, w)) = mu.iter().find(|(x, w)| x.len() != self.dim() || !w.is_pos()) {
                return bad(format!(
                    "marginal {} has point {} with weight {} (need dimension {} and positive weight)",
                    i + 1,
                    render_point(x),
                    w.render(),
                    self.dim()
                ));
            }
            let total = mu.iter().fold(F::zero(), |a, (_, w)| a + w.clone());
            if !total.eq_tol(&F::one()) {
                return bad(format!("marginal {} has total mass {}", i + 1, total.render()));
            }
        }
        Ok(())
    }

    pub fn map_scalars<G: Scalar>(&self, f: impl Fn(&F) -> G) -> MarginalSpec<G> {
        MarginalSpec {
            times: self.times.clone(),
            marginals: self
                .marginals
                .iter()
                .map(|mu| mu.iter().map(|(x, w)| (x.iter().map(&f).collect(), f(w))).collect())
                .collect(),
            s0: self.s0.iter().map(&f).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointJson {
    Scalar(NumberJson),
    Vector(Vec<NumberJson>),
}

impl PointJson {
    fn to_rationals(&self) -> std::result::Result<Vec<Rational>, MarketError> {
        match self {
            PointJson::Scalar(v) => Ok(vec![v.to_rational()?]),
            PointJson::Vector(vs) => vs.iter().map(NumberJson::to_rational).collect(),
        }
    }

    fn from_scalars<F: Scalar>(x: &[F]) -> Self {
        if x.len() == 1 {
            PointJson::Scalar(NumberJson::from_scalar(&x[0]))
        } else {
            PointJson::Vector(x.iter().map(NumberJson::from_scalar).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomJson {
    pub x: PointJson,
    pub p: NumberJson,
}

/// `{"times":[1,2],"marginals":[[{"x":0,"p":1}],[...]],"s0":0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalSpecJson {
    pub times: Vec<usize>,
    pub marginals: Vec<Vec<AtomJson>>,
    pub s0: PointJson,
}

impl MarginalSpecJson {
    pub fn parse(text: &str) -> std::result::Result<MarginalSpec<Rational>, MarketError> {
        let j: MarginalSpecJson = serde_json::from_str(text).map_err(|e| MarketError::Format(e.to_string()))?;
        j.to_spec()
    }

    pub fn to_spec(&self) -> std::result::Result<MarginalSpec<Rational>, MarketError> {
        Ok(MarginalSpec {
            times: self.times.clone(),
            marginals: self
                .marginals
                .iter()
                .map(|mu| mu.iter().map(|a| Ok((a.x.to_rationals()?, a.p.to_rational()?))).collect())
                .collect::<std::result::Result<_, MarketError>>()?,
            s0: self.s0.to_rationals()?,
        })
    }

    pub fn from_spec<F: Scalar>(spec: &MarginalSpec<F>) -> Self {
        MarginalSpecJson {
            times: spec.times.clone(),
            marginals: spec
                .marginals
                .iter()
                .map(|mu| {
                    mu.iter()
                        .map(|(x, w)| AtomJson { x: PointJson::from_scalars(x), p: NumberJson::from_scalar(w) })
                        .collect()
                })
                .collect(),
            s0: PointJson::from_scalars(&spec.s0),
        }
    }
}

/// A convex-order violation between two laws on the line.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderViolation<F> {
    /// `None` when the strike sweep is not reached because the means differ.
    pub strike: Option<F>,
    /// Mean or call price of the earlier law.
    pub earlier: F,
    /// Mean or call price of the later law.
    pub later: F,
}

/// `a ⪯ b` in convex order for finitely supported laws on the line: equal
/// means and `E_a[(x−K)⁺] ≤ E_b[(x−K)⁺]` at every support point `K`.
pub fn convex_order<F: Scalar>(a: &[(F, F)], b: &[(F, F)]) -> Option<OrderViolation<F>> {
    let mean = |law: &[(F, F)]| law.iter().fold(F::zero(), |s, (x, w)| s + x.clone() * w.clone());
    let (ma, mb) = (mean(a), mean(b));
    if !ma.eq_tol(&mb) {
        return Some(OrderViolation { strike: None, earlier: ma, later: mb });
    }
    let call = |law: &[(F, F)], k: &F| {
        law.iter().fold(F::zero(), |s, (x, w)| {
            let d = x.clone() - k.clone();
            if d.is_pos() {
                s + d * w.clone()
            } else {
                s
            }
        })
    };
    let mut strikes: Vec<F> = a.iter().chain(b).map(|(x, _)| x.clone()).collect();
    strikes.sort_by(|x, y| x.cmp_tol(y));
    strikes.dedup_by(|x, y| x.eq_tol(y));
    strikes.into_iter().find_map(|k| {
        let (ca, cb) = (call(a, &k), call(b, &k));
        (ca.cmp_tol(&cb) == std::cmp::Ordering::Greater).then(|| OrderViolation {
            strike: Some(k),
            earlier: ca,
            later: cb,
        })
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeacockViolation<F> {
    /// Index of the earlier marginal, `None` for the starting point `s0`.
    pub earlier: Option<usize>,
    pub later: usize,
    pub violation: OrderViolation<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeacockCheck<F> {
    pub ok: bool,
    pub witness: Option<PeacockViolation<F>>,
}

/// `δ_{s0} ⪯ μ_1 ⪯ … ⪯ μ_M` in convex order (one-dimensional only).
pub fn check_peacock<F: Scalar>(spec: &MarginalSpec<F>) -> Result<PeacockCheck<F>> {
    spec.validate()?;
    if spec.dim() != 1 {
        return Err(Error::DimensionUnsupported(spec.dim()));
    }
    let law = |i: usize| -> Vec<(F, F)> { spec.marginals[i].iter().map(|(x, w)| (x[0].clone(), w.clone())).collect() };
    let mut prev: (Option<usize>, Vec<(F, F)>) = (None, vec![(spec.s0[0].clone(), F::one())]);
    for i in 0..spec.marginals.len() {
        let cur = law(i);
        if let Some(violation) = convex_order(&prev.1, &cur) {
            return Ok(PeacockCheck {
                ok: false,
                witness: Some(PeacockViolation { earlier: prev.0, later: i, violation }),
            });
        }
        prev = (Some(i), cur);
    }
    Ok(PeacockCheck { ok: true, witness: None })
}

/// Per-date grids `grid[k]` for `k = 0..=N`: `s0` at time 0, the support of
/// `μ_i` at `t_i`, and between marginal dates the union of the previous
/// support (or `s0`) with the next one.
pub fn support_grid<F: Scalar>(spec: &MarginalSpec<F>, horizon: usize) -> Vec<Vec<Vec<F>>> {
    let mut grid = vec![vec![spec.s0.clone()]];
    let mut prev = vec![spec.s0.clone()];
    for k in 1..=horizon {
        let Some(i) = spec.times.iter().position(|&t| t >= k) else {
            grid.push(prev.clone());
            continue;
        };
        let next = spec.support(i);
        if spec.times[i] == k {
            grid.push(next.clone());
            prev = next;
        } else {
            let mut pts: Vec<Vec<F>> = prev.iter().chain(&next).cloned().collect();
            pts.sort_by(|a, b| vec_cmp(a, b));
            pts.dedup_by(|a, b| vec_eq(a, b));
            grid.push(pts);
        }
    }
    grid
}

/// Full product tree over the grids with one indicator static
/// `1{S_{t_i} = x}` priced `μ_i({x})` for every grid point `x` at every
/// marginal date.
pub fn build_mot_market<F: Scalar>(spec: &MarginalSpec<F>, grid: &[Vec<Vec<F>>]) -> Result<Market<F>> {
    spec.validate()?;
    let n = spec.horizon();
    if grid.len() != n + 1 {
        return Err(Error::SupportMismatch(format!("grid has {} dates for horizon {n}", grid.len().saturating_sub(1))));
    }
    if grid[0].len() != 1 || !vec_eq(&grid[0][0], &spec.s0) {
        return Err(Error::SupportMismatch("the time-0 grid must be exactly {s0}".into()));
    }
    if let Some((k, _)) = grid.iter().enumerate().find(|(_, g)| g.is_empty() || g.iter().any(|x| x.len() != spec.dim())) {
        return Err(Error::SupportMismatch(format!("grid at time {k} is empty or has the wrong dimension")));
    }
    for (i, &t) in spec.times.iter().enumerate() {
        for (x, _) in &spec.marginals[i] {
            if !grid[t].iter().any(|y| vec_eq(x, y)) {
                return Err(Error::SupportMismatch(format!(
                    "support point {} of marginal {} is not on the time-{t} grid",
                    render_point(x),
                    i + 1
                )));
            }
        }
    }
    let mut builder = MarketSpec::new("mot", n).node("r", 0, None, spec.s0.clone());
    // Terminal ids with their grid index per date.
    let mut leaves: Vec<(String, Vec<usize>)> = Vec::new();
    let mut frontier: Vec<(String, Vec<usize>)> = vec![("r".to_string(), vec![0])];
    for k in 1..=n {
        let mut next = Vec::new();
        for (id, idx) in &frontier {
            for (j, x) in grid[k].iter().enumerate() {
                let child = format!("{id}.{j}");
                builder = builder.node(&child, k, Some(id), x.clone());
                let mut cidx = idx.clone();
                cidx.push(j);
                next.push((child, cidx));
            }
        }
        frontier = next;
    }
    leaves.extend(frontier);
    for (i, &t) in spec.times.iter().enumerate() {
        for (j, x) in grid[t].iter().enumerate() {
            let payoff: Vec<(&str, F)> =
                leaves.iter().filter(|(_, idx)| idx[t] == j).map(|(id, _)| (id.as_str(), F::one())).collect();
            builder = builder.static_option(&format!("1{{S{t}={}}}", render_point(x)), &payoff, spec.mass(i, x));
        }
    }
    Ok(Market::from_spec(&builder)?)
}

/// Primal, weak and strong values of a marginal-constrained market; primal
/// and weak dual must agree.
pub fn mot_values<F: Scalar>(m: &Market<F>, phi: &AmericanPayoff<F>) -> Result<GapReport<F>> {
    mot_values_capped(m, phi, DEFAULT_ENUMERATION_CAP)
}

pub fn mot_values_capped<F: Scalar>(m: &Market<F>, phi: &AmericanPayoff<F>, cap: u128) -> Result<GapReport<F>> {
    let report = dual::duality_gap_capped(m, phi, cap)?;
    if !report.duality_holds {
        return Err(Error::Invariant(format!(
            "marginal-constrained primal {} differs from weak dual {}",
            report.primal.render(),
            report.weak_dual.render()
        )));
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub enum LadderPayoff<F> {
    Cash,
    Forward { coord: usize },
    Call { coord: usize, strike: F },
    Put { coord: usize, strike: F },
}

/// A static option `f(S_t)` with price `μ_i(f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderOption<F> {
    pub time: usize,
    pub payoff: LadderPayoff<F>,
    pub price: F,
}

impl<F: Scalar> LadderOption<F> {
    pub fn eval(&self, x: &[F]) -> F {
        let pos = |v: F| if v.is_pos() { v } else { F::zero() };
        match &self.payoff {
            LadderPayoff::Cash => F::one(),
            LadderPayoff::Forward { coord } => x[*coord].clone(),
            LadderPayoff::Call { coord, strike } => pos(x[*coord].clone() - strike.clone()),
            LadderPayoff::Put { coord, strike } => pos(strike.clone() - x[*coord].clone()),
        }
    }

    /// Prices the payoff under marginal `i`.
    pub fn priced(spec: &MarginalSpec<F>, i: usize, payoff: LadderPayoff<F>) -> Self {
        let mut opt = LadderOption { time: spec.times[i], payoff, price: F::zero() };
        opt.price = spec.marginals[i].iter().fold(F::zero(), |a, (x, w)| a + w.clone() * opt.eval(x));
        opt
    }

    pub fn label(&self) -> String {
        let t = self.time;
        match &self.payoff {
            LadderPayoff::Cash => format!("cash@{t}"),
            LadderPayoff::Forward { coord } => format!("S{coord}@{t}"),
            LadderPayoff::Call { coord, strike } if strike.is_neg() => {
                format!("(S{coord}+{})+@{t}", (-strike.clone()).render())
            }
            LadderPayoff::Call { coord, strike } => format!("(S{coord}-{})+@{t}", strike.render()),
            LadderPayoff::Put { coord, strike } if strike.is_neg() => {
                format!("(-{}-S{coord})+@{t}", (-strike.clone()).render())
            }
            LadderPayoff::Put { coord, strike } => format!("({}-S{coord})+@{t}", strike.render()),
        }
    }
}

/// Cash, forward, then calls at every grid strike in increasing order, for
/// each marginal date from the last to the first.
pub fn default_ladder<F: Scalar>(spec: &MarginalSpec<F>, grid: &[Vec<Vec<F>>]) -> Vec<LadderOption<F>> {
    let mut out = Vec::new();
    for i in (0..spec.times.len()).rev() {
        out.push(LadderOption::priced(spec, i, LadderPayoff::Cash));
        for coord in 0..spec.dim() {
            out.push(LadderOption::priced(spec, i, LadderPayoff::Forward { coord }));
        }
        for coord in 0..spec.dim() {
            let mut strikes: Vec<F> = grid[spec.times[i]].iter().map(|x| x[coord].clone()).collect();
            strikes.sort_by(|a, b| a.cmp_tol(b));
            strikes.dedup_by(|a, b| a.eq_tol(b));
            for strike in strikes {
                out.push(LadderOption::priced(spec, i, LadderPayoff::Call { coord, strike }));
            }
        }
    }
    out
}

/// `P_{μ,m}` for `m = 0..=ladder.len()`: the weak dual of the statics-free
/// market calibrated to the first `m` ladder options only.
pub fn mot_approx_sequence<F: Scalar>(
    m: &Market<F>,
    phi: &AmericanPayoff<F>,
    ladder: &[LadderOption<F>],
) -> Result<Vec<F>> {
    phi.check(m)?;
    let em = m.without_statics().enlarge();
    let base = em.layout();
    let claim = em.claim(phi);
    let rows: Vec<Vec<F>> = ladder
        .iter()
        .map(|opt| {
            em.points.iter().map(|&(p, _)| opt.eval(m.asset(p, opt.time)) - opt.price.clone()).collect()
        })
        .collect();
    (0..=ladder.len())
        .into_par_iter()
        .map(|count| {
            let mut layout = base.clone();
            layout.statics = rows[..count].to_vec();
            match MeasureSet::whole(&layout, true).sup(&claim)? {
                SupOutcome::Attained(v, _) => Ok(v),
                SupOutcome::Empty => Err(Error::NoCalibratedMeasure),
                SupOutcome::MinusInfinity => Err(Error::Degenerate(format!("approximation step {count}"))),
            }
        })
        .collect()
}

/// `η^i_k`: conditional law of `S_{t_i}` given each time-`k` atom.
#[derive(Debug, Clone, PartialEq)]
pub struct MvmProcess<F> {
    /// `support[i]`: the points of `μ_i`.
    pub support: Vec<Vec<Vec<F>>>,
    /// `eta[i][k][atom][j]`: weight on `support[i][j]`, atoms in `levels[k]` order.
    pub eta: Vec<Vec<Vec<Vec<F>>>>,
}

fn node_mass<F: Scalar>(m: &Market<F>, q: &PathMeasure<F>, node: usize) -> F {
    m.nodes[node].paths.clone().fold(F::zero(), |a, p| a + q.weights[p].clone())
}

fn conditional_laws<F: Scalar>(m: &Market<F>, spec: &MarginalSpec<F>, q: &PathMeasure<F>) -> MvmProcess<F> {
    let support: Vec<Vec<Vec<F>>> = (0..spec.times.len()).map(|i| spec.support(i)).collect();
    let eta = spec
        .times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut by_level: Vec<Vec<Vec<F>>> = Vec::with_capacity(m.horizon + 1);
            for k in 0..=m.horizon {
                let row: Vec<Vec<F>> = m.levels[k]
                    .iter()
                    .map(|&node| {
                        let mass = node_mass(m, q, node);
                        if mass.is_zero_tol() {
                            return match m.nodes[node].parent {
                                Some(par) => by_level[k - 1][m.atom_position(par)].clone(),
                                None => vec![F::zero(); support[i].len()],
                            };
                        }
                        let mut law = vec![F::zero(); support[i].len()];
                        for p in m.nodes[node].paths.clone() {
                            if q.weights[p].is_zero_tol() {
                                continue;
                            }
                            if let Some(j) = support[i].iter().position(|x| vec_eq(x, m.asset(p, t))) {
                                law[j] = law[j].clone() + q.weights[p].clone() / mass.clone();
                            }
                        }
                        law
                    })
                    .collect();
                by_level.push(row);
            }
            by_level
        })
        .collect();
    MvmProcess { support, eta }
}

/// The measure-valued martingale `η^i_k = L_Q(S_{t_i} | F_k)` of a calibrated
/// martingale measure. Uncharged atoms inherit their parent's law.
pub fn mvm_from_measure<F: Scalar>(m: &Market<F>, spec: &MarginalSpec<F>, q: &PathMeasure<F>) -> Result<MvmProcess<F>> {
    dual::check_calibrated(m, q).map_err(Error::NotCalibrated)?;
    Ok(conditional_laws(m, spec, q))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MvmCheck {
    pub is_mvm: bool,
    pub terminating: bool,
    pub consistent: bool,
}

/// Martingale property of `k ↦ η^i_k({x})` on charged atoms (with `η^i_0 = μ_i`),
/// Dirac laws at `t_i`, and `S_k = mean(η^i_k)` for `k ≤ t_i`.
pub fn check_mvm<F: Scalar>(m: &Market<F>, spec: &MarginalSpec<F>, eta: &MvmProcess<F>, q: &PathMeasure<F>) -> MvmCheck {
    let mut is_mvm = true;
    let mut terminating = true;
    let mut consistent = true;
    for (i, &t) in spec.times.iter().enumerate() {
        let supp = &eta.support[i];
        let root_law: Vec<F> = supp.iter().map(|x| spec.mass(i, x)).collect();
        if !eta.eta[i][0][0].iter().zip(&root_law).all(|(a, b)| a.eq_tol(b)) {
            is_mvm = false;
        }
        for k in 0..=m.horizon {
            for (a, &node) in m.levels[k].iter().enumerate() {
                let mass = node_mass(m, q, node);
                if mass.is_zero_tol() {
                    continue;
                }
                let law = &eta.eta[i][k][a];
                let total = law.iter().cloned().fold(F::zero(), |s, w| s + w);
                if law.iter().any(Scalar::is_neg) || !total.eq_tol(&F::one()) {
                    is_mvm = false;
                }
                if k < m.horizon {
                    for j in 0..supp.len() {
                        let next = m.nodes[node].children.iter().fold(F::zero(), |s, &c| {
                            let cm = node_mass(m, q, c);
                            if cm.is_zero_tol() {
                                s
                            } else {
                                s + cm * eta.eta[i][k + 1][m.atom_position(c)][j].clone()
                            }
                        });
                        if !(next / mass.clone()).eq_tol(&law[j]) {
                            is_mvm = false;
                        }
                    }
                }
                if k == t && !(law.iter().filter(|w| w.eq_tol(&F::one())).count() == 1 && law.iter().all(|w| w.is_zero_tol() || w.eq_tol(&F::one()))) {
                    terminating = false;
                }
                if k <= t {
                    let s = &m.nodes[node].assets;
                    for (c, sc) in s.iter().enumerate() {
                        let mean = supp.iter().zip(law).fold(F::zero(), |acc, (x, w)| acc + w.clone() * x[c].clone());
                        if !mean.eq_tol(sc) {
                            consistent = false;
                        }
                    }
                }
            }
        }
    }
    MvmCheck { is_mvm, terminating, consistent }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LawOrderCheck {
    pub law_ok: bool,
    pub order_ok: bool,
}

/// `η^i_k` is the conditional law of `S_{t_i}` under `Q`, and
/// `η^j_k ⪯ η^i_k` in convex order for `k ≤ t_j ≤ t_i` (one-dimensional only).
pub fn check_conditional_law_and_order<F: Scalar>(
    m: &Market<F>,
    spec: &MarginalSpec<F>,
    eta: &MvmProcess<F>,
    q: &PathMeasure<F>,
) -> Result<LawOrderCheck> {
    if spec.dim() != 1 {
        return Err(Error::DimensionUnsupported(spec.dim()));
    }
    let truth = conditional_laws(m, spec, q);
    let charged = |k: usize, a: usize| !node_mass(m, q, m.levels[k][a]).is_zero_tol();
    let mut law_ok = truth.support == eta.support;
    for (i, &t) in spec.times.iter().enumerate() {
        for k in 0..=t {
            for a in 0..m.levels[k].len() {
                if law_ok && charged(k, a) {
                    law_ok = truth.eta[i][k][a].iter().zip(&eta.eta[i][k][a]).all(|(x, y)| x.eq_tol(y));
                }
            }
        }
    }
    let mut order_ok = true;
    for i in 0..spec.times.len() {
        for j in 0..i {
            for k in 0..=spec.times[j] {
                for a in 0..m.levels[k].len() {
                    if !charged(k, a) {
                        continue;
                    }
                    let law = |idx: usize| -> Vec<(F, F)> {
                        eta.support[idx].iter().zip(&eta.eta[idx][k][a]).map(|(x, w)| (x[0].clone(), w.clone())).collect()
                    };
                    if convex_order(&law(j), &law(i)).is_some() {
                        order_ok = false;
                    }
                }
            }
        }
    }
    Ok(LawOrderCheck { law_ok, order_ok })
}
