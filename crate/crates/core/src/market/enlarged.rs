use super::{sub_vec, AmericanPayoff, EnlargedMeasure, Layout, Market, PathMeasure};
use crate::scalar::{ExtScalar, Scalar};

/// Atom of `F̄_k`: an `F_k`-atom crossed with either a single past exercise
/// date `θ ≤ k` or the block `{k+1, …, N}` of dates still to come.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnlargedAtom {
    pub node: usize,
    /// `Some(θ)` with `θ ≤ k`, or `None` for `θ > k`.
    pub stopped: Option<usize>,
    pub points: Vec<usize>,
}

/// The enlarged space `Ω × {1..N}` with the canonical exercise time `T(ω,θ) = θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnlargedMarket<F> {
    pub base: Market<F>,
    /// `(path, θ)`; point index is `path · N + θ − 1`.
    pub points: Vec<(usize, usize)>,
    /// `atoms[k]` for `k = 0..=N` (the empty block `θ > N` is omitted).
    pub atoms: Vec<Vec<EnlargedAtom>>,
}

impl<F: Scalar> EnlargedMarket<F> {
    pub fn new(base: Market<F>) -> Self {
        let n = base.horizon;
        let points: Vec<(usize, usize)> =
            (0..base.num_paths()).flat_map(|p| (1..=n).map(move |t| (p, t))).collect();
        let atoms = (0..=n)
            .map(|k| {
                let mut lvl = Vec::new();
                for &node in &base.levels[k] {
                    let paths = base.nodes[node].paths.clone();
                    for theta in 1..=k {
                        lvl.push(EnlargedAtom {
                            node,
                            stopped: Some(theta),
                            points: paths.clone().map(|p| p * n + theta - 1).collect(),
                        });
                    }
                    if k < n {
                        lvl.push(EnlargedAtom {
                            node,
                            stopped: None,
                            points: paths
                                .clone()
                                .flat_map(|p| (k + 1..=n).map(move |t| p * n + t - 1))
                                .collect(),
                        });
                    }
                }
                lvl
            })
            .collect();
        EnlargedMarket { base, points, atoms }
    }

    pub fn horizon(&self) -> usize {
        self.base.horizon
    }

    pub fn point_index(&self, path: usize, theta: usize) -> usize {
        path * self.base.horizon + theta - 1
    }

    /// Canonical time `T`.
    pub fn exercise_time(&self, point: usize) -> usize {
        self.points[point].1
    }

    /// `Φ` read as a European claim on the enlarged space.
    pub fn claim(&self, phi: &AmericanPayoff<F>) -> Vec<ExtScalar<F>> {
        self.points.iter().map(|&(p, t)| phi.get(t, p).clone()).collect()
    }

    pub fn layout(&self) -> Layout<F> {
        let n = self.base.horizon;
        let np = self.points.len();
        let atoms: Vec<Vec<Vec<usize>>> =
            self.atoms.iter().map(|lvl| lvl.iter().map(|a| a.points.clone()).collect()).collect();
        let atom_of = atoms
            .iter()
            .map(|lvl| {
                let mut v = vec![0; np];
                for (a, pts) in lvl.iter().enumerate() {
                    for &pt in pts {
                        v[pt] = a;
                    }
                }
                v
            })
            .collect();
        let increments = (1..=n)
            .map(|k| {
                self.points
                    .iter()
                    .map(|&(p, _)| sub_vec(self.base.asset(p, k), self.base.asset(p, k - 1)))
                    .collect()
            })
            .collect();
        let statics = self
            .base
            .statics
            .iter()
            .map(|s| self.points.iter().map(|&(p, _)| s.payoff[p].clone()).collect())
            .collect();
        Layout { horizon: n, dim: self.base.dim, n_points: np, atoms, atom_of, increments, statics }
    }

    /// `Ω`-marginal of an enlarged measure.
    pub fn marginal(&self, m: &EnlargedMeasure<F>) -> PathMeasure<F> {
        let mut w = vec![F::zero(); self.base.num_paths()];
        for (i, &(p, _)) in self.points.iter().enumerate() {
            w[p] = w[p].clone() + m.weights[i].clone();
        }
        PathMeasure { weights: w }
    }

    /// Conditional law of `ω` given `T = θ`; `None` when the section is null.
    pub fn section(&self, m: &EnlargedMeasure<F>, theta: usize) -> Option<PathMeasure<F>> {
        let w: Vec<F> = (0..self.base.num_paths())
            .map(|p| m.weights[self.point_index(p, theta)].clone())
            .collect();
        let total = w.iter().cloned().fold(F::zero(), |a, b| a + b);
        if total.is_zero_tol() {
            return None;
        }
        Some(PathMeasure { weights: w.into_iter().map(|x| x / total.clone()).collect() })
    }

    /// `Q ⊗ δ_τ`: the enlarged measure carried by the graph of a stopping rule.
    pub fn lift(&self, q: &PathMeasure<F>, tau: &[usize]) -> EnlargedMeasure<F> {
        let mut w = vec![F::zero(); self.points.len()];
        for (p, &t) in tau.iter().enumerate() {
            w[self.point_index(p, t)] = q.weights[p].clone();
        }
        EnlargedMeasure { weights: w }
    }

    /// Expectation of `Φ(ω, θ) = Φ_θ(ω)`; `None` (−∞) if a charged point pays −∞.
    pub fn expectation(&self, m: &EnlargedMeasure<F>, phi: &AmericanPayoff<F>) -> ExtScalar<F> {
        let mut acc = F::zero();
        for (i, &(p, t)) in self.points.iter().enumerate() {
            let w = &m.weights[i];
            if w.is_zero_tol() {
                continue;
            }
            acc = acc + w.clone() * phi.get(t, p).clone()?;
        }
        Some(acc)
    }
}
