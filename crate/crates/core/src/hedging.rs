//! Superhedging prices: the primal side.
//!
//! A semi-static strategy holds `x` in cash, a predictable position `H` in the
//! dynamically traded assets and a buy-and-hold position `h` in the
//! (zero-priced) static options. Each price is the smallest `x` for which the
//! terminal wealth dominates the claim on every scenario.

use crate::error::{Error, Result};
use crate::lp::{self, Bounds, LpProblem, LpSolution, Sense};
use crate::market::{AmericanPayoff, EnlargedMarket, Layout, Market};
use crate::scalar::{ExtScalar, Scalar};

/// Positions `H_k` on the atoms of the time-`(k−1)` partition.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictableStrategy<F> {
    /// `positions[k-1][atom][asset]` for `k = 1..N`.
    pub positions: Vec<Vec<Vec<F>>>,
}

impl<F: Scalar> PredictableStrategy<F> {
    /// Trading gain `(H ∘ S)_N` at `point`.
    pub fn gain(&self, layout: &Layout<F>, point: usize) -> F {
        let mut g = F::zero();
        for k in 1..=layout.horizon {
            let pos = &self.positions[k - 1][layout.atom_of[k - 1][point]];
            g = g + lp::dot(pos, &layout.increments[k - 1][point]);
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EuropeanHedge<F> {
    pub value: F,
    pub strategy: PredictableStrategy<F>,
    /// Static option weights (all zero when statics are not used).
    pub statics: Vec<F>,
}

/// One strategy per exercise date, agreeing with each other before exercise.
#[derive(Debug, Clone, PartialEq)]
pub struct AmericanHedge<F> {
    pub value: F,
    /// `branches[j-1]` is followed when the option is exercised at `j`.
    pub branches: Vec<PredictableStrategy<F>>,
    pub statics: Vec<F>,
}

/// Strategy on the enlarged space, predictable for the enlarged filtration.
pub type EnlargedHedge<F> = EuropeanHedge<F>;

/// Allocates one free variable per (date, atom, asset).
fn position_vars<F: Scalar>(lp: &mut LpProblem<F>, layout: &Layout<F>) -> Vec<Vec<Vec<usize>>> {
    (1..=layout.horizon)
        .map(|k| {
            (0..layout.atoms[k - 1].len())
                .map(|_| (0..layout.dim).map(|_| lp.add_var(F::zero(), Bounds::free())).collect())
                .collect()
        })
        .collect()
}

fn read_positions<F: Scalar>(vars: &[Vec<Vec<usize>>], x: &[F]) -> PredictableStrategy<F> {
    PredictableStrategy {
        positions: vars
            .iter()
            .map(|k| k.iter().map(|a| a.iter().map(|&v| x[v].clone()).collect()).collect())
            .collect(),
    }
}

/// Terms of `(H ∘ S)_N(point)` for the variables in `vars`.
fn gain_terms<F: Scalar>(layout: &Layout<F>, vars: &[Vec<Vec<usize>>], point: usize) -> Vec<(usize, F)> {
    let mut terms = Vec::new();
    for k in 1..=layout.horizon {
        let atom = layout.atom_of[k - 1][point];
        for (i, inc) in layout.increments[k - 1][point].iter().enumerate() {
            if !inc.is_zero_tol() {
                terms.push((vars[k - 1][atom][i], inc.clone()));
            }
        }
    }
    terms
}

fn static_terms<F: Scalar>(layout: &Layout<F>, h: &[usize], point: usize) -> Vec<(usize, F)> {
    h.iter()
        .zip(&layout.statics)
        .filter(|(_, g)| !g[point].is_zero_tol())
        .map(|(&v, g)| (v, g[point].clone()))
        .collect()
}

/// `min x` s.t. `x + (H∘S)_N + h·g ≥ claim` at every point with a finite claim.
pub(crate) fn superhedge_layout<F: Scalar>(
    layout: &Layout<F>,
    claim: &[ExtScalar<F>],
    use_statics: bool,
) -> Result<EuropeanHedge<F>> {
    let mut lp = LpProblem::new(Sense::Min, 0);
    let x = lp.add_var(F::one(), Bounds::free());
    let vars = position_vars(&mut lp, layout);
    let h: Vec<usize> = if use_statics {
        layout.statics.iter().map(|_| lp.add_var(F::zero(), Bounds::free())).collect()
    } else {
        Vec::new()
    };
    for (pt, c) in claim.iter().enumerate() {
        let Some(c) = c else { continue };
        let mut terms = vec![(x, F::one())];
        terms.extend(gain_terms(layout, &vars, pt));
        terms.extend(static_terms(layout, &h, pt));
        lp.add_ge(&terms, c.clone());
    }
    match lp::solve(&lp)? {
        LpSolution::Optimal { x: sol, value } => {
            let mut statics = vec![F::zero(); layout.statics.len()];
            for (i, &v) in h.iter().enumerate() {
                statics[i] = sol[v].clone();
            }
            Ok(EuropeanHedge { value, strategy: read_positions(&vars, &sol), statics })
        }
        LpSolution::Unbounded { .. } => Err(Error::UnboundedBelow),
        LpSolution::Infeasible { .. } => {
            Err(Error::Invariant("superhedging program is always feasible".into()))
        }
    }
}

fn normalized<F: Scalar>(m: &Market<F>) -> std::borrow::Cow<'_, Market<F>> {
    if m.is_normalized() {
        std::borrow::Cow::Borrowed(m)
    } else {
        std::borrow::Cow::Owned(m.normalize_statics())
    }
}

/// European superhedging price of `xi` (a map on paths, `None` = `−∞`).
pub fn price_european<F: Scalar>(
    m: &Market<F>,
    xi: &[ExtScalar<F>],
    use_statics: bool,
) -> Result<EuropeanHedge<F>> {
    if xi.len() != m.num_paths() {
        return Err(Error::Invariant(format!("claim has {} entries for {} paths", xi.len(), m.num_paths())));
    }
    let m = normalized(m);
    superhedge_layout(&m.layout(), xi, use_statics)
}

/// American superhedging price with one consistent strategy per exercise date.
pub fn price_american<F: Scalar>(
    m: &Market<F>,
    phi: &AmericanPayoff<F>,
    use_statics: bool,
) -> Result<AmericanHedge<F>> {
    phi.check(m)?;
    let m = normalized(m);
    let layout = m.layout();
    let n = m.horizon;
    let mut lp = LpProblem::new(Sense::Min, 0);
    let x = lp.add_var(F::one(), Bounds::free());
    let branches: Vec<Vec<Vec<Vec<usize>>>> = (0..n).map(|_| position_vars(&mut lp, &layout)).collect();
    let h: Vec<usize> = if use_statics {
        layout.statics.iter().map(|_| lp.add_var(F::zero(), Bounds::free())).collect()
    } else {
        Vec::new()
    };
    // Consistency: H^j_i = H^i_i for every i ≤ j, hence H^j_i = H^k_i for i ≤ j ≤ k.
    for i in 1..=n {
        for j in (i + 1)..=n {
            for (a, assets) in branches[i - 1][i - 1].iter().enumerate() {
                for (d, &v) in assets.iter().enumerate() {
                    let w = branches[j - 1][i - 1][a][d];
                    lp.add_eq(&[(v, F::one()), (w, -F::one())], F::zero());
                }
            }
        }
    }
    for k in 1..=n {
        for p in 0..m.num_paths() {
            let Some(c) = phi.get(k, p) else { continue };
            let mut terms = vec![(x, F::one())];
            terms.extend(gain_terms(&layout, &branches[k - 1], p));
            terms.extend(static_terms(&layout, &h, p));
            lp.add_ge(&terms, c.clone());
        }
    }
    match lp::solve(&lp)? {
        LpSolution::Optimal { x: sol, value } => Ok(AmericanHedge {
            value,
            branches: branches.iter().map(|b| read_positions(b, &sol)).collect(),
            statics: {
                let mut s = vec![F::zero(); layout.statics.len()];
                for (i, &v) in h.iter().enumerate() {
                    s[i] = sol[v].clone();
                }
                s
            },
        }),
        LpSolution::Unbounded { .. } => Err(Error::UnboundedBelow),
        LpSolution::Infeasible { .. } => {
            Err(Error::Invariant("superhedging program is always feasible".into()))
        }
    }
}

/// European superhedging price of `Φ(ω, θ) = Φ_θ(ω)` on the enlarged space.
pub fn price_european_enlarged<F: Scalar>(
    em: &EnlargedMarket<F>,
    phi: &AmericanPayoff<F>,
    use_statics: bool,
) -> Result<EnlargedHedge<F>> {
    phi.check(&em.base)?;
    let owned;
    let em = if em.base.is_normalized() {
        em
    } else {
        owned = em.base.normalize_statics().enlarge();
        &owned
    };
    superhedge_layout(&em.layout(), &em.claim(phi), use_statics)
}

/// Self-financing arbitrage: nonnegative gain everywhere, total gain at least 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Arbitrage<F> {
    pub strategy: PredictableStrategy<F>,
    pub statics: Vec<F>,
    /// Gain per point of the space it was found on.
    pub gains: Vec<F>,
}

pub(crate) fn arbitrage_on_layout<F: Scalar>(layout: &Layout<F>) -> Result<Option<Arbitrage<F>>> {
    let mut lp = LpProblem::new(Sense::Min, 0);
    let vars = position_vars(&mut lp, layout);
    let h: Vec<usize> = layout.statics.iter().map(|_| lp.add_var(F::zero(), Bounds::free())).collect();
    let mut total: Vec<(usize, F)> = Vec::new();
    for pt in 0..layout.n_points {
        let mut terms = gain_terms(layout, &vars, pt);
        terms.extend(static_terms(layout, &h, pt));
        total.extend(terms.iter().cloned());
        lp.add_ge(&terms, F::zero());
    }
    lp.add_ge(&total, F::one());
    let f = lp::check_feasible(&lp)?;
    if !f.feasible {
        return Ok(None);
    }
    let sol = f.witness.expect("feasible problems carry a witness");
    let strategy = read_positions(&vars, &sol);
    let statics: Vec<F> = h.iter().map(|&v| sol[v].clone()).collect();
    let gains = (0..layout.n_points)
        .map(|pt| {
            let mut g = strategy.gain(layout, pt);
            for (w, s) in statics.iter().zip(&layout.statics) {
                g = g + w.clone() * s[pt].clone();
            }
            g
        })
        .collect();
    Ok(Some(Arbitrage { strategy, statics, gains }))
}

/// Pathwise no-arbitrage check on `Ω`; `Some` carries an arbitrage.
pub fn check_na<F: Scalar>(m: &Market<F>) -> Result<Option<Arbitrage<F>>> {
    let m = normalized(m);
    arbitrage_on_layout(&m.layout())
}

/// Same check on the enlarged space with strategies predictable for its filtration.
pub fn check_na_enlarged<F: Scalar>(m: &Market<F>) -> Result<Option<Arbitrage<F>>> {
    let m = normalized(m);
    arbitrage_on_layout(&m.enlarge().layout())
}
