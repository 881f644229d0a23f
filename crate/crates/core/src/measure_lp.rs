//! Linear programs over martingale measures on a [`Layout`].

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lp::{self, Bounds, LpProblem, LpSolution, Sense};
use crate::market::Layout;
use crate::scalar::{ExtScalar, Scalar};

/// Family of probability measures on a subset of points that make `S` a
/// martingale from time `from_time` on, optionally calibrated to the statics.
pub(crate) struct MeasureSet<'a, F> {
    pub layout: &'a Layout<F>,
    pub points: Vec<usize>,
    pub from_time: usize,
    pub calibrate: bool,
}

pub(crate) enum SupOutcome<F> {
    /// The family is empty.
    Empty,
    /// Every member charges a point where the claim is `−∞`.
    MinusInfinity,
    /// Optimal value and maximizing weights (indexed by layout point).
    Attained(F, Vec<F>),
}

impl<'a, F: Scalar> MeasureSet<'a, F> {
    pub fn whole(layout: &'a Layout<F>, calibrate: bool) -> Self {
        MeasureSet { layout, points: (0..layout.n_points).collect(), from_time: 0, calibrate }
    }

    /// LP over weights of `self.points`; points where the claim is `−∞` are fixed to 0.
    pub fn problem(&self, claim: Option<&[ExtScalar<F>]>, extra_eq: &[(Vec<F>, F)]) -> LpProblem<F> {
        let n = self.points.len();
        let mut lp = LpProblem::new(Sense::Max, n);
        if let Some(claim) = claim {
            for (j, &pt) in self.points.iter().enumerate() {
                match &claim[pt] {
                    Some(v) => lp.objective[j] = v.clone(),
                    None => lp.bounds[j] = Bounds::fixed(F::zero()),
                }
            }
        }
        let ones: Vec<(usize, F)> = (0..n).map(|j| (j, F::one())).collect();
        lp.add_eq(&ones, F::one());
        let l = self.layout;
        for k in (self.from_time + 1)..=l.horizon {
            // Group by atom of time k-1.
            let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (j, &pt) in self.points.iter().enumerate() {
                groups.entry(l.atom_of[k - 1][pt]).or_default().push(j);
            }
            for members in groups.values() {
                for i in 0..l.dim {
                    let terms: Vec<(usize, F)> = members
                        .iter()
                        .map(|&j| (j, l.increments[k - 1][self.points[j]][i].clone()))
                        .filter(|(_, a)| !a.is_zero_tol())
                        .collect();
                    if !terms.is_empty() {
                        lp.add_eq(&terms, F::zero());
                    }
                }
            }
        }
        if self.calibrate {
            for g in &l.statics {
                let terms: Vec<(usize, F)> = self
                    .points
                    .iter()
                    .enumerate()
                    .map(|(j, &pt)| (j, g[pt].clone()))
                    .filter(|(_, a)| !a.is_zero_tol())
                    .collect();
                lp.add_eq(&terms, F::zero());
            }
        }
        for (row, rhs) in extra_eq {
            let terms: Vec<(usize, F)> =
                row.iter().cloned().enumerate().filter(|(_, a)| !a.is_zero_tol()).collect();
            lp.add_eq(&terms, rhs.clone());
        }
        lp
    }

    fn spread(&self, x: &[F]) -> Vec<F> {
        let mut w = vec![F::zero(); self.layout.n_points];
        for (j, &pt) in self.points.iter().enumerate() {
            w[pt] = x[j].clone();
        }
        w
    }

    pub fn is_empty(&self) -> Result<bool> {
        let f = lp::check_feasible(&self.problem(None, &[]))?;
        Ok(!f.feasible)
    }

    pub fn sup(&self, claim: &[ExtScalar<F>]) -> Result<SupOutcome<F>> {
        self.sup_with(claim, &[])
    }

    pub fn sup_with(&self, claim: &[ExtScalar<F>], extra_eq: &[(Vec<F>, F)]) -> Result<SupOutcome<F>> {
        match lp::solve(&self.problem(Some(claim), extra_eq))? {
            LpSolution::Optimal { x, value } => Ok(SupOutcome::Attained(value, self.spread(&x))),
            LpSolution::Infeasible { .. } => {
                let has_inf = self.points.iter().any(|&pt| claim[pt].is_none());
                if has_inf && extra_eq.is_empty() && !self.is_empty()? {
                    Ok(SupOutcome::MinusInfinity)
                } else {
                    Ok(SupOutcome::Empty)
                }
            }
            LpSolution::Unbounded { .. } => {
                Err(Error::Invariant("expectation over a probability simplex is bounded".into()))
            }
        }
    }

    /// Checks whether `w` (indexed by layout point) belongs to the family.
    pub fn contains(&self, w: &[F]) -> std::result::Result<(), String> {
        let inside: std::collections::HashSet<usize> = self.points.iter().copied().collect();
        for (pt, v) in w.iter().enumerate() {
            if v.is_neg() {
                return Err(format!("negative weight {} at point {pt}", v.render()));
            }
            if !inside.contains(&pt) && !v.is_zero_tol() {
                return Err(format!("mass outside the support at point {pt}"));
            }
        }
        let sum = |pts: &mut dyn Iterator<Item = (usize, F)>| {
            pts.fold(F::zero(), |acc, (pt, c)| {
                if c.is_zero_tol() || w[pt].is_zero_tol() {
                    acc
                } else {
                    acc + c * w[pt].clone()
                }
            })
        };
        let total = sum(&mut self.points.iter().map(|&pt| (pt, F::one())));
        if !total.eq_tol(&F::one()) {
            return Err(format!("total mass is {}", total.render()));
        }
        let l = self.layout;
        for k in (self.from_time + 1)..=l.horizon {
            let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for &pt in &self.points {
                groups.entry(l.atom_of[k - 1][pt]).or_default().push(pt);
            }
            for (atom, members) in &groups {
                for i in 0..l.dim {
                    let drift =
                        sum(&mut members.iter().map(|&pt| (pt, l.increments[k - 1][pt][i].clone())));
                    if !drift.is_zero_tol() {
                        return Err(format!(
                            "asset {i} has drift {} on atom {atom} of time {}",
                            drift.render(),
                            k - 1
                        ));
                    }
                }
            }
        }
        if self.calibrate {
            for (lambda, g) in l.statics.iter().enumerate() {
                let price = sum(&mut self.points.iter().map(|&pt| (pt, g[pt].clone())));
                if !price.is_zero_tol() {
                    return Err(format!("static option {lambda} is priced at {}", price.render()));
                }
            }
        }
        Ok(())
    }
}
