//! Finite filtered markets encoded as event trees.
//!
//! A tree with horizon `N` carries the whole model: terminal nodes are the
//! scenarios `Ω`, the time-`k` nodes are the atoms of `F_k`, and each node
//! stores the value of the dynamically traded assets. Statically traded
//! options are arbitrary maps on terminal paths with an initial price.

mod enlarged;
mod json;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::Range;

use crate::scalar::{ExtScalar, Rational, Scalar};

pub use enlarged::{EnlargedAtom, EnlargedMarket};
pub use json::{ModelFile, NumberJson, SCHEMA_V1};

/// Raw, unvalidated market description (what a model file contains).
#[derive(Debug, Clone, PartialEq)]
pub struct MarketSpec<F> {
    pub name: String,
    pub horizon: usize,
    pub nodes: Vec<NodeSpec<F>>,
    pub statics: Vec<StaticSpec<F>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec<F> {
    pub id: String,
    pub time: usize,
    pub parent: Option<String>,
    pub assets: Vec<F>,
}

/// Static option with payoff keyed by terminal node id; missing ids pay 0.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticSpec<F> {
    pub label: String,
    pub payoff: BTreeMap<String, F>,
    pub price: F,
}

impl<F: Scalar> MarketSpec<F> {
    pub fn new(name: impl Into<String>, horizon: usize) -> Self {
        MarketSpec { name: name.into(), horizon, nodes: Vec::new(), statics: Vec::new() }
    }

    pub fn node(mut self, id: &str, time: usize, parent: Option<&str>, assets: Vec<F>) -> Self {
        self.nodes.push(NodeSpec {
            id: id.to_string(),
            time,
            parent: parent.map(str::to_string),
            assets,
        });
        self
    }

    pub fn static_option(mut self, label: &str, payoff: &[(&str, F)], price: F) -> Self {
        self.statics.push(StaticSpec {
            label: label.to_string(),
            payoff: payoff.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            price,
        });
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    RootCount { roots: Vec<String> },
    TreeShape { node: String, detail: String },
    DuplicateId { node: String },
    UnknownParent { node: String, parent: String },
    MissingChildren { node: String },
    TimeOutOfRange { node: String, time: usize },
    AssetDimension { node: String, expected: usize, found: usize },
    Unreachable { node: String },
    UnknownPath { option: String, path: String },
    Horizon,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RootCount { roots } => {
                write!(f, "RootCount: expected exactly one time-0 root, found {roots:?}")
            }
            Violation::TreeShape { node, detail } => write!(f, "TreeShape at node {node}: {detail}"),
            Violation::DuplicateId { node } => write!(f, "DuplicateId: node {node} defined twice"),
            Violation::UnknownParent { node, parent } => {
                write!(f, "UnknownParent: node {node} refers to missing parent {parent}")
            }
            Violation::MissingChildren { node } => {
                write!(f, "MissingChildren: node {node} is before the horizon but has no child")
            }
            Violation::TimeOutOfRange { node, time } => {
                write!(f, "TimeOutOfRange: node {node} has time {time} beyond the horizon")
            }
            Violation::AssetDimension { node, expected, found } => write!(
                f,
                "AssetDimension: node {node} has {found} asset values, expected {expected}"
            ),
            Violation::Unreachable { node } => {
                write!(f, "Unreachable: node {node} is not connected to the root")
            }
            Violation::UnknownPath { option, path } => write!(
                f,
                "UnknownPath: static option {option} pays on {path}, which is not a terminal node"
            ),
            Violation::Horizon => f.write_str("Horizon: horizon must be at least 1"),
        }
    }
}

/// Lists every invariant violation of a raw market; empty means valid.
pub fn validate<F: Scalar>(spec: &MarketSpec<F>) -> Vec<Violation> {
    let mut out = Vec::new();
    if spec.horizon == 0 {
        out.push(Violation::Horizon);
    }
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, n) in spec.nodes.iter().enumerate() {
        if index.insert(n.id.as_str(), i).is_some() {
            out.push(Violation::DuplicateId { node: n.id.clone() });
        }
    }
    let roots: Vec<String> = spec
        .nodes
        .iter()
        .filter(|n| n.time == 0 || n.parent.is_none())
        .map(|n| n.id.clone())
        .collect();
    if roots.len() != 1 {
        out.push(Violation::RootCount { roots });
    }
    let dim = spec.nodes.first().map_or(0, |n| n.assets.len());
    let mut has_child = vec![false; spec.nodes.len()];
    for n in &spec.nodes {
        if n.time > spec.horizon {
            out.push(Violation::TimeOutOfRange { node: n.id.clone(), time: n.time });
        }
        if n.assets.len() != dim {
            out.push(Violation::AssetDimension {
                node: n.id.clone(),
                expected: dim,
                found: n.assets.len(),
            });
        }
        match (&n.parent, n.time) {
            (None, _) | (_, 0) => {
                if n.time == 0 && n.parent.is_some() {
                    out.push(Violation::TreeShape {
                        node: n.id.clone(),
                        detail: "time-0 node must not have a parent".into(),
                    });
                }
            }
            (Some(p), t) => match index.get(p.as_str()) {
                None => out.push(Violation::UnknownParent { node: n.id.clone(), parent: p.clone() }),
                Some(&pi) => {
                    has_child[pi] = true;
                    let pt = spec.nodes[pi].time;
                    if pt + 1 != t {
                        out.push(Violation::TreeShape {
                            node: n.id.clone(),
                            detail: format!(
                                "parent {p} has time {pt}, expected {}",
                                t.saturating_sub(1)
                            ),
                        });
                    }
                }
            },
        }
    }
    for (i, n) in spec.nodes.iter().enumerate() {
        if n.time < spec.horizon && !has_child[i] {
            out.push(Violation::MissingChildren { node: n.id.clone() });
        }
    }
    // Reachability from the root (catches parent cycles among non-roots).
    if let [root] = roots_of(spec).as_slice() {
        let mut reached = vec![false; spec.nodes.len()];
        reached[*root] = true;
        let mut changed = true;
        while changed {
            changed = false;
            for (i, n) in spec.nodes.iter().enumerate() {
                if reached[i] {
                    continue;
                }
                if let Some(&pi) = n.parent.as_deref().and_then(|p| index.get(p)) {
                    if reached[pi] && spec.nodes[pi].time + 1 == n.time {
                        reached[i] = true;
                        changed = true;
                    }
                }
            }
        }
        for (i, n) in spec.nodes.iter().enumerate() {
            if !reached[i] && n.parent.is_some() {
                out.push(Violation::Unreachable { node: n.id.clone() });
            }
        }
    }
    let terminal: std::collections::HashSet<&str> = spec
        .nodes
        .iter()
        .filter(|n| n.time == spec.horizon)
        .map(|n| n.id.as_str())
        .collect();
    for s in &spec.statics {
        for path in s.payoff.keys() {
            if !terminal.contains(path.as_str()) {
                out.push(Violation::UnknownPath { option: s.label.clone(), path: path.clone() });
            }
        }
    }
    out
}

fn roots_of<F>(spec: &MarketSpec<F>) -> Vec<usize> {
    spec.nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.time == 0 && n.parent.is_none())
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MarketError {
    #[error("invalid market: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("invalid American payoff: {0}")]
    Payoff(String),
    #[error("malformed model file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node<F> {
    pub id: String,
    pub time: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub assets: Vec<F>,
    /// Terminal paths below this node (contiguous in depth-first order).
    pub paths: Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticOption<F> {
    pub label: String,
    /// Payoff per terminal path index.
    pub payoff: Vec<F>,
    pub price: F,
}

/// Validated market. Nodes are stored in depth-first order so that every
/// atom of every `F_k` covers a contiguous range of paths.
#[derive(Debug, Clone, PartialEq)]
pub struct Market<F> {
    pub name: String,
    pub horizon: usize,
    pub dim: usize,
    pub nodes: Vec<Node<F>>,
    /// Node indices at each time `0..=N`, in depth-first order.
    pub levels: Vec<Vec<usize>>,
    /// Terminal node of each path.
    pub path_nodes: Vec<usize>,
    /// `ancestors[path][k]` is the time-`k` node on that path.
    pub ancestors: Vec<Vec<usize>>,
    pub statics: Vec<StaticOption<F>>,
}

impl<F: Scalar> Market<F> {
    pub fn from_spec(spec: &MarketSpec<F>) -> Result<Self, MarketError> {
        let violations = validate(spec);
        if !violations.is_empty() {
            return Err(MarketError::Invalid(violations));
        }
        let index: HashMap<&str, usize> =
            spec.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
        let mut kids: Vec<Vec<usize>> = vec![Vec::new(); spec.nodes.len()];
        for (i, n) in spec.nodes.iter().enumerate() {
            if let Some(p) = &n.parent {
                kids[index[p.as_str()]].push(i);
            }
        }
        let root = roots_of(spec)[0];
        let mut nodes: Vec<Node<F>> = Vec::with_capacity(spec.nodes.len());
        let mut path_nodes = Vec::new();
        // Iterative DFS preserving child order.
        fn visit<F: Scalar>(
            spec: &MarketSpec<F>,
            kids: &[Vec<usize>],
            raw: usize,
            parent: Option<usize>,
            nodes: &mut Vec<Node<F>>,
            path_nodes: &mut Vec<usize>,
        ) -> usize {
            let n = &spec.nodes[raw];
            let me = nodes.len();
            let start = path_nodes.len();
            nodes.push(Node {
                id: n.id.clone(),
                time: n.time,
                parent,
                children: Vec::new(),
                assets: n.assets.clone(),
                paths: start..start,
            });
            if n.time == spec.horizon {
                path_nodes.push(me);
            } else {
                for &c in &kids[raw] {
                    let ci = visit(spec, kids, c, Some(me), nodes, path_nodes);
                    nodes[me].children.push(ci);
                }
            }
            nodes[me].paths = start..path_nodes.len();
            me
        }
        visit(spec, &kids, root, None, &mut nodes, &mut path_nodes);

        let horizon = spec.horizon;
        let mut levels = vec![Vec::new(); horizon + 1];
        for (i, n) in nodes.iter().enumerate() {
            levels[n.time].push(i);
        }
        let ancestors = path_nodes
            .iter()
            .map(|&leaf| {
                let mut chain = vec![0; horizon + 1];
                let mut cur = Some(leaf);
                while let Some(c) = cur {
                    chain[nodes[c].time] = c;
                    cur = nodes[c].parent;
                }
                chain
            })
            .collect();
        let path_index: HashMap<&str, usize> =
            path_nodes.iter().enumerate().map(|(p, &n)| (nodes[n].id.as_str(), p)).collect();
        let statics = spec
            .statics
            .iter()
            .map(|s| {
                let mut payoff = vec![F::zero(); path_nodes.len()];
                for (id, v) in &s.payoff {
                    payoff[path_index[id.as_str()]] = v.clone();
                }
                StaticOption { label: s.label.clone(), payoff, price: s.price.clone() }
            })
            .collect();
        let dim = nodes[0].assets.len();
        Ok(Market { name: spec.name.clone(), horizon, dim, nodes, levels, path_nodes, ancestors, statics })
    }

    /// Converts back into a raw spec (used for export).
    pub fn to_spec(&self) -> MarketSpec<F> {
        let nodes = self
            .nodes
            .iter()
            .map(|n| NodeSpec {
                id: n.id.clone(),
                time: n.time,
                parent: n.parent.map(|p| self.nodes[p].id.clone()),
                assets: n.assets.clone(),
            })
            .collect();
        let statics = self
            .statics
            .iter()
            .map(|s| StaticSpec {
                label: s.label.clone(),
                payoff: s
                    .payoff
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| !v.is_zero_tol())
                    .map(|(p, v)| (self.path_id(p).to_string(), v.clone()))
                    .collect(),
                price: s.price.clone(),
            })
            .collect();
        MarketSpec { name: self.name.clone(), horizon: self.horizon, nodes, statics }
    }

    pub fn num_paths(&self) -> usize {
        self.path_nodes.len()
    }

    pub fn path_id(&self, path: usize) -> &str {
        &self.nodes[self.path_nodes[path]].id
    }

    pub fn path_index(&self, id: &str) -> Option<usize> {
        self.path_nodes.iter().position(|&n| self.nodes[n].id == id)
    }

    /// Asset vector at time `k` along `path`.
    pub fn asset(&self, path: usize, k: usize) -> &[F] {
        &self.nodes[self.ancestors[path][k]].assets
    }

    /// Time-`k` node (atom of `F_k`) containing `path`.
    pub fn atom(&self, k: usize, path: usize) -> usize {
        self.ancestors[path][k]
    }

    /// Position of the node among `levels[k]`.
    pub fn atom_position(&self, node: usize) -> usize {
        let k = self.nodes[node].time;
        self.levels[k].iter().position(|&n| n == node).expect("node on its own level")
    }

    /// Shifts every static payoff by its price so that all prices are zero.
    pub fn normalize_statics(&self) -> Self {
        let mut m = self.clone();
        for s in &mut m.statics {
            let price = s.price.clone();
            for v in &mut s.payoff {
                *v = v.clone() - price.clone();
            }
            s.price = F::zero();
        }
        m
    }

    pub fn without_statics(&self) -> Self {
        let mut m = self.clone();
        m.statics.clear();
        m
    }

    pub fn is_normalized(&self) -> bool {
        self.statics.iter().all(|s| s.price.is_zero_tol())
    }

    pub fn enlarge(&self) -> EnlargedMarket<F> {
        EnlargedMarket::new(self.clone())
    }

    /// Predictable layout of `Ω`: atoms of each `F_k` and increments `ΔS_k`.
    pub fn layout(&self) -> Layout<F> {
        let n = self.num_paths();
        let atoms = self
            .levels
            .iter()
            .map(|lvl| lvl.iter().map(|&node| self.nodes[node].paths.clone().collect()).collect())
            .collect();
        let atom_of = (0..=self.horizon)
            .map(|k| {
                let mut v = vec![0; n];
                for (a, &node) in self.levels[k].iter().enumerate() {
                    for p in self.nodes[node].paths.clone() {
                        v[p] = a;
                    }
                }
                v
            })
            .collect();
        let increments = (1..=self.horizon)
            .map(|k| (0..n).map(|p| sub_vec(self.asset(p, k), self.asset(p, k - 1))).collect())
            .collect();
        Layout {
            horizon: self.horizon,
            dim: self.dim,
            n_points: n,
            atoms,
            atom_of,
            increments,
            statics: self.statics.iter().map(|s| s.payoff.clone()).collect(),
        }
    }

    /// Maps every scalar through `f`, e.g. to switch between fields.
    pub fn map_scalars<G: Scalar>(&self, f: impl Fn(&F) -> G) -> Market<G> {
        Market {
            name: self.name.clone(),
            horizon: self.horizon,
            dim: self.dim,
            nodes: self
                .nodes
                .iter()
                .map(|n| Node {
                    id: n.id.clone(),
                    time: n.time,
                    parent: n.parent,
                    children: n.children.clone(),
                    assets: n.assets.iter().map(&f).collect(),
                    paths: n.paths.clone(),
                })
                .collect(),
            levels: self.levels.clone(),
            path_nodes: self.path_nodes.clone(),
            ancestors: self.ancestors.clone(),
            statics: self
                .statics
                .iter()
                .map(|s| StaticOption {
                    label: s.label.clone(),
                    payoff: s.payoff.iter().map(&f).collect(),
                    price: f(&s.price),
                })
                .collect(),
        }
    }
}

impl Market<Rational> {
    pub fn to_float(&self) -> Market<f64> {
        self.map_scalars(|v| v.to_f64())
    }
}

pub(crate) fn sub_vec<F: Scalar>(a: &[F], b: &[F]) -> Vec<F> {
    a.iter().zip(b).map(|(x, y)| x.clone() - y.clone()).collect()
}

/// Filtration and increments of a finite filtered space, independent of
/// whether it is `Ω`, the enlargement `Ω × {1..N}`, or a dynamic extension.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout<F> {
    pub horizon: usize,
    pub dim: usize,
    pub n_points: usize,
    /// `atoms[k][a]` lists the points of the `a`-th atom of the time-`k` partition.
    pub atoms: Vec<Vec<Vec<usize>>>,
    /// `atom_of[k][point]` is the atom containing `point` at time `k`.
    pub atom_of: Vec<Vec<usize>>,
    /// `increments[k-1][point]` is `S_k − S_{k−1}` at `point`.
    pub increments: Vec<Vec<Vec<F>>>,
    /// Normalized static payoffs per point.
    pub statics: Vec<Vec<F>>,
}

/// American payoff `Φ_k(ω)` for `k = 1..N`; `None` entries are `−∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmericanPayoff<F> {
    /// `values[k-1][path]`.
    pub values: Vec<Vec<ExtScalar<F>>>,
}

impl<F: Scalar> AmericanPayoff<F> {
    pub fn new(values: Vec<Vec<ExtScalar<F>>>) -> Self {
        AmericanPayoff { values }
    }

    /// Builds `Φ` from per-date closures over path indices.
    pub fn from_fn(m: &Market<F>, f: impl Fn(usize, usize) -> ExtScalar<F>) -> Self {
        let values = (1..=m.horizon).map(|k| (0..m.num_paths()).map(|p| f(k, p)).collect()).collect();
        AmericanPayoff { values }
    }

    pub fn constant(m: &Market<F>, c: F) -> Self {
        Self::from_fn(m, |_, _| Some(c.clone()))
    }

    /// European claim `ξ` embedded as `Φ_N = ξ` and `−∞` before.
    pub fn european(m: &Market<F>, xi: &[F]) -> Self {
        Self::from_fn(m, |k, p| (k == m.horizon).then(|| xi[p].clone()))
    }

    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, k: usize, path: usize) -> &ExtScalar<F> {
        &self.values[k - 1][path]
    }

    pub fn check(&self, m: &Market<F>) -> Result<(), MarketError> {
        if self.values.len() != m.horizon {
            return Err(MarketError::Payoff(format!(
                "{} exercise dates for horizon {}",
                self.values.len(),
                m.horizon
            )));
        }
        for (k, row) in self.values.iter().enumerate() {
            if row.len() != m.num_paths() {
                return Err(MarketError::Payoff(format!(
                    "date {} has {} entries for {} paths",
                    k + 1,
                    row.len(),
                    m.num_paths()
                )));
            }
        }
        Ok(())
    }

    pub fn shift(&self, c: &F) -> Self {
        AmericanPayoff {
            values: self
                .values
                .iter()
                .map(|row| row.iter().map(|v| v.clone().map(|x| x + c.clone())).collect())
                .collect(),
        }
    }

    /// `ω ↦ Φ_{τ(ω)}(ω)`.
    pub fn stopped(&self, tau: &[usize]) -> Vec<ExtScalar<F>> {
        tau.iter().enumerate().map(|(p, &k)| self.get(k, p).clone()).collect()
    }

    pub fn map_scalars<G: Scalar>(&self, f: impl Fn(&F) -> G) -> AmericanPayoff<G> {
        AmericanPayoff {
            values: self.values.iter().map(|r| r.iter().map(|v| v.as_ref().map(&f)).collect()).collect(),
        }
    }
}

/// Probability weights on the paths of `Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathMeasure<F> {
    pub weights: Vec<F>,
}

/// Probability weights on `Ω × {1..N}` indexed like [`EnlargedMarket::points`].
#[derive(Debug, Clone, PartialEq)]
pub struct EnlargedMeasure<F> {
    pub weights: Vec<F>,
}

impl<F: Scalar> PathMeasure<F> {
    pub fn total(&self) -> F {
        self.weights.iter().cloned().fold(F::zero(), |a, b| a + b)
    }

    pub fn expectation(&self, xi: &[F]) -> F {
        crate::lp::dot(&self.weights, xi)
    }
}

impl<F: Scalar> EnlargedMeasure<F> {
    pub fn total(&self) -> F {
        self.weights.iter().cloned().fold(F::zero(), |a, b| a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    #[test]
    fn intro_fixture_is_valid() {
        let spec = fixtures::intro_spec();
        assert!(validate(&spec).is_empty());
        let m = Market::from_spec(&spec).unwrap();
        assert_eq!(m.num_paths(), 4);
        assert_eq!(m.levels[1].len(), 1);
    }

    #[test]
    fn time_skip_parent_is_a_tree_shape_violation() {
        let spec = MarketSpec::<Rational>::new("skip", 2)
            .node("r", 0, None, vec![q(0, 1)])
            .node("a", 1, Some("r"), vec![q(0, 1)])
            .node("b", 2, Some("a"), vec![q(0, 1)])
            .node("c", 2, Some("r"), vec![q(0, 1)]);
        let v = validate(&spec);
        assert!(v.iter().any(|x| matches!(x, Violation::TreeShape { node, .. } if node == "c")), "{v:?}");
    }

    #[test]
    fn two_roots_is_a_root_count_violation() {
        let spec = MarketSpec::<Rational>::new("roots", 1)
            .node("r1", 0, None, vec![q(0, 1)])
            .node("r2", 0, None, vec![q(0, 1)])
            .node("a", 1, Some("r1"), vec![q(0, 1)])
            .node("b", 1, Some("r2"), vec![q(0, 1)]);
        let v = validate(&spec);
        assert!(matches!(&v[..], [Violation::RootCount { roots }] if roots.len() == 2), "{v:?}");
    }

    #[test]
    fn other_violations_name_nodes() {
        let spec = MarketSpec::<Rational>::new("bad", 2)
            .node("r", 0, None, vec![q(0, 1)])
            .node("a", 1, Some("r"), vec![q(0, 1), q(1, 1)])
            .node("b", 1, Some("zz"), vec![q(0, 1)])
            .static_option("g", &[("a", q(1, 1))], q(0, 1));
        let v = validate(&spec);
        assert!(v.contains(&Violation::AssetDimension { node: "a".into(), expected: 1, found: 2 }));
        assert!(v.contains(&Violation::UnknownParent { node: "b".into(), parent: "zz".into() }));
        assert!(v.contains(&Violation::MissingChildren { node: "a".into() }));
        assert!(v.contains(&Violation::UnknownPath { option: "g".into(), path: "a".into() }));
    }

    #[test]
    fn normalize_shifts_payoffs_by_price() {
        let m = fixtures::hobson_neuberger();
        let n = m.normalize_statics();
        let top = m.path_index("u4").unwrap();
        assert_eq!(n.statics[0].price, q(0, 1));
        assert_eq!(n.statics[0].payoff[top], q(3, 5));
        assert_eq!(n.statics[0].payoff[m.path_index("u0").unwrap()], q(-2, 5));
        // zero-price static is untouched
        let intro = fixtures::intro();
        assert_eq!(intro.normalize_statics(), intro);
    }

    #[test]
    fn constant_static_normalizes_to_zero() {
        let spec = fixtures::intro_spec().static_option(
            "cash",
            &[("m2", q(3, 1)), ("m1", q(3, 1)), ("p1", q(3, 1)), ("p2", q(3, 1))],
            q(3, 1),
        );
        let m = Market::from_spec(&spec).unwrap().normalize_statics();
        assert!(m.statics[1].payoff.iter().all(|v| *v == q(0, 1)));
    }

    #[test]
    fn children_partition_parents() {
        let m = fixtures::hobson_neuberger();
        for k in 1..=m.horizon {
            for &node in &m.levels[k - 1] {
                let mut covered: Vec<usize> =
                    m.nodes[node].children.iter().flat_map(|&c| m.nodes[c].paths.clone()).collect();
                covered.sort();
                assert_eq!(covered, m.nodes[node].paths.clone().collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn spec_round_trip_preserves_market() {
        let m = fixtures::hobson_neuberger();
        assert_eq!(Market::from_spec(&m.to_spec()).unwrap(), m);
    }
}
