//! Dense two-phase simplex over any [`Scalar`] field.
//!
//! Problems are stated with equality rows, `≤` rows and per-variable bounds,
//! then rewritten into standard form `min c·y, A y = b, y ≥ 0, b ≥ 0`.
//! Pivoting follows Bland's rule in both phases, so the solver terminates on
//! degenerate instances and returns the same vertex for the same input.

use std::cmp::Ordering;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

/// Variable bounds; `None` is an infinite bound on that side.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds<F> {
    pub lower: Option<F>,
    pub upper: Option<F>,
}

impl<F: Scalar> Bounds<F> {
    pub fn nonneg() -> Self {
        Bounds { lower: Some(F::zero()), upper: None }
    }

    pub fn free() -> Self {
        Bounds { lower: None, upper: None }
    }

    pub fn fixed(v: F) -> Self {
        Bounds { lower: Some(v.clone()), upper: Some(v) }
    }

    pub fn between(lower: Option<F>, upper: Option<F>) -> Self {
        Bounds { lower, upper }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row<F> {
    pub coeffs: Vec<F>,
    pub rhs: F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem<F> {
    pub sense: Sense,
    pub objective: Vec<F>,
    pub eq_rows: Vec<Row<F>>,
    pub ub_rows: Vec<Row<F>>,
    pub bounds: Vec<Bounds<F>>,
}

impl<F: Scalar> LpProblem<F> {
    /// `n` variables, all nonnegative, zero objective.
    pub fn new(sense: Sense, n: usize) -> Self {
        LpProblem {
            sense,
            objective: vec![F::zero(); n],
            eq_rows: Vec::new(),
            ub_rows: Vec::new(),
            bounds: vec![Bounds::nonneg(); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Appends a variable and returns its index.
    pub fn add_var(&mut self, cost: F, bounds: Bounds<F>) -> usize {
        self.objective.push(cost);
        self.bounds.push(bounds);
        for row in self.eq_rows.iter_mut().chain(self.ub_rows.iter_mut()) {
            row.coeffs.push(F::zero());
        }
        self.objective.len() - 1
    }

    fn dense(&self, terms: &[(usize, F)]) -> Vec<F> {
        let mut coeffs = vec![F::zero(); self.num_vars()];
        for (j, a) in terms {
            coeffs[*j] = coeffs[*j].clone() + a.clone();
        }
        coeffs
    }

    pub fn add_eq(&mut self, terms: &[(usize, F)], rhs: F) {
        let coeffs = self.dense(terms);
        self.eq_rows.push(Row { coeffs, rhs });
    }

    pub fn add_le(&mut self, terms: &[(usize, F)], rhs: F) {
        let coeffs = self.dense(terms);
        self.ub_rows.push(Row { coeffs, rhs });
    }

    pub fn add_ge(&mut self, terms: &[(usize, F)], rhs: F) {
        let coeffs = self.dense(terms).into_iter().map(|a| -a).collect();
        self.ub_rows.push(Row { coeffs, rhs: -rhs });
    }

    /// `≥` row whose right-hand side may be `−∞` (`None`); such rows are vacuous
    /// and never reach the solver.
    pub fn add_ge_ext(&mut self, terms: &[(usize, F)], rhs: Option<F>) {
        if let Some(rhs) = rhs {
            self.add_ge(terms, rhs);
        }
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(LpError::Malformed(format!(
                "{} bounds for {n} variables",
                self.bounds.len()
            )));
        }
        for (kind, rows) in [("equality", &self.eq_rows), ("inequality", &self.ub_rows)] {
            for (i, row) in rows.iter().enumerate() {
                if row.coeffs.len() != n {
                    return Err(LpError::Malformed(format!(
                        "{kind} row {i} has {} coefficients, expected {n}",
                        row.coeffs.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Objective value of `x` in the problem's own sense.
    pub fn objective_at(&self, x: &[F]) -> F {
        dot(&self.objective, x)
    }

    /// True when `x` satisfies every row and bound (within tolerance for floats).
    pub fn is_feasible_point(&self, x: &[F]) -> bool {
        self.eq_rows.iter().all(|r| dot(&r.coeffs, x).eq_tol(&r.rhs))
            && self
                .ub_rows
                .iter()
                .all(|r| dot(&r.coeffs, x).cmp_tol(&r.rhs) != Ordering::Greater)
            && self.bounds.iter().zip(x).all(|(b, v)| {
                b.lower.as_ref().map_or(true, |l| v.cmp_tol(l) != Ordering::Less)
                    && b.upper.as_ref().map_or(true, |u| v.cmp_tol(u) != Ordering::Greater)
            })
    }
}

pub(crate) fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    let mut acc = F::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero_tol() && !y.is_zero_tol() {
            acc = acc + x.clone() * y.clone();
        }
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpSolution<F> {
    Optimal { x: Vec<F>, value: F },
    /// `residual` is the optimal phase-one infeasibility (strictly positive).
    Infeasible { residual: F },
    /// `x` is feasible and `x + t·ray` stays feasible while the objective
    /// improves without bound as `t → ∞`.
    Unbounded { x: Vec<F>, ray: Vec<F> },
}

impl<F> LpSolution<F> {
    pub fn is_optimal(&self) -> bool {
        matches!(self, LpSolution::Optimal { .. })
    }

    pub fn value(&self) -> Option<&F> {
        match self {
            LpSolution::Optimal { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn x(&self) -> Option<&[F]> {
        match self {
            LpSolution::Optimal { x, .. } => Some(x),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("malformed linear program: {0}")]
    Malformed(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility<F> {
    pub feasible: bool,
    pub witness: Option<Vec<F>>,
}

/// Solves `problem` to a vertex optimum.
pub fn solve<F: Scalar>(problem: &LpProblem<F>) -> Result<LpSolution<F>, LpError> {
    problem.validate()?;
    let std = StandardForm::build(problem);
    if let Some(residual) = std.trivially_infeasible.clone() {
        return Ok(LpSolution::Infeasible { residual });
    }
    let mut tab = Tableau::new(&std);
    let residual = tab.phase_one()?;
    if residual.is_pos() {
        return Ok(LpSolution::Infeasible { residual });
    }
    tab.drop_artificials();
    let outcome = tab.phase_two(&std.cost)?;
    let y = tab.primal();
    let x = std.recover(&y);
    let solution = match outcome {
        PhaseTwo::Optimal => {
            let value = problem.objective_at(&x);
            LpSolution::Optimal { x, value }
        }
        PhaseTwo::Unbounded(entering) => {
            let ray_std = tab.ray(entering);
            let ray = std.recover_direction(&ray_std);
            LpSolution::Unbounded { x, ray }
        }
    };
    if F::MODE == crate::scalar::Mode::Float64 {
        let point = match &solution {
            LpSolution::Optimal { x, .. } | LpSolution::Unbounded { x, .. } => Some(x),
            LpSolution::Infeasible { .. } => None,
        };
        if let Some(x) = point {
            if !problem.is_feasible_point(x) {
                return Err(LpError::NumericalFailure(
                    "final basis violates constraints beyond tolerance".into(),
                ));
            }
        }
    }
    Ok(solution)
}

/// Phase one only: is the constraint set nonempty, and if so a point in it.
pub fn check_feasible<F: Scalar>(problem: &LpProblem<F>) -> Result<Feasibility<F>, LpError> {
    problem.validate()?;
    let std = StandardForm::build(problem);
    if std.trivially_infeasible.is_some() {
        return Ok(Feasibility { feasible: false, witness: None });
    }
    let mut tab = Tableau::new(&std);
    let residual = tab.phase_one()?;
    if residual.is_pos() {
        return Ok(Feasibility { feasible: false, witness: None });
    }
    let x = std.recover(&tab.primal());
    Ok(Feasibility { feasible: true, witness: Some(x) })
}

/// How one original variable is expressed in standard-form columns:
/// `x = offset + Σ coef · y_col`.
#[derive(Debug, Clone)]
struct VarMap<F> {
    offset: F,
    terms: Vec<(usize, F)>,
}

struct StandardForm<F> {
    /// Rows over structural + slack columns, with `rhs ≥ 0`.
    rows: Vec<Vec<F>>,
    rhs: Vec<F>,
    /// Column index of the slack that can start in the basis, per row.
    start_basis: Vec<Option<usize>>,
    num_cols: usize,
    /// Phase-two costs (minimization) per column.
    cost: Vec<F>,
    maps: Vec<VarMap<F>>,
    trivially_infeasible: Option<F>,
}

impl<F: Scalar> StandardForm<F> {
    fn build(p: &LpProblem<F>) -> Self {
        let flip = p.sense == Sense::Max;
        let mut maps = Vec::with_capacity(p.num_vars());
        let mut num_struct = 0usize;
        // Extra `y ≤ u − l` rows for doubly bounded variables.
        let mut bound_rows: Vec<(usize, F)> = Vec::new();
        for b in &p.bounds {
            let map = match (&b.lower, &b.upper) {
                (Some(l), u) => {
                    let col = num_struct;
                    num_struct += 1;
                    if let Some(u) = u {
                        bound_rows.push((col, u.clone() - l.clone()));
                    }
                    VarMap { offset: l.clone(), terms: vec![(col, F::one())] }
                }
                (None, Some(u)) => {
                    let col = num_struct;
                    num_struct += 1;
                    VarMap { offset: u.clone(), terms: vec![(col, -F::one())] }
                }
                (None, None) => {
                    let col = num_struct;
                    num_struct += 2;
                    VarMap { offset: F::zero(), terms: vec![(col, F::one()), (col + 1, -F::one())] }
                }
            };
            maps.push(map);
        }

        let mut cost = vec![F::zero(); num_struct];
        for (j, c) in p.objective.iter().enumerate() {
            let c = if flip { -c.clone() } else { c.clone() };
            for (col, coef) in &maps[j].terms {
                cost[*col] = cost[*col].clone() + c.clone() * coef.clone();
            }
        }

        // Translate a row over original variables into structural columns.
        let translate = |coeffs: &[F], rhs: &F| -> (Vec<F>, F) {
            let mut out = vec![F::zero(); num_struct];
            let mut r = rhs.clone();
            for (j, a) in coeffs.iter().enumerate() {
                if a.is_zero_tol() {
                    continue;
                }
                let m = &maps[j];
                r = r - a.clone() * m.offset.clone();
                for (col, coef) in &m.terms {
                    out[*col] = out[*col].clone() + a.clone() * coef.clone();
                }
            }
            (out, r)
        };

        let mut eqs = Vec::new();
        let mut ubs = Vec::new();
        let mut trivially_infeasible = None;
        for row in &p.eq_rows {
            let (coeffs, rhs) = translate(&row.coeffs, &row.rhs);
            if coeffs.iter().all(|a| a.is_zero_tol()) {
                if !rhs.is_zero_tol() {
                    trivially_infeasible = Some(rhs.abs_val());
                }
                continue;
            }
            eqs.push((coeffs, rhs));
        }
        for row in &p.ub_rows {
            let (coeffs, rhs) = translate(&row.coeffs, &row.rhs);
            if coeffs.iter().all(|a| a.is_zero_tol()) {
                if rhs.is_neg() {
                    trivially_infeasible = Some(-rhs);
                }
                continue;
            }
            ubs.push((coeffs, rhs));
        }
        for (col, width) in bound_rows {
            let mut coeffs = vec![F::zero(); num_struct];
            coeffs[col] = F::one();
            if width.is_neg() {
                trivially_infeasible = Some(-width.clone());
            }
            ubs.push((coeffs, width));
        }

        let num_cols = num_struct + ubs.len();
        let mut rows = Vec::with_capacity(eqs.len() + ubs.len());
        let mut rhs = Vec::with_capacity(eqs.len() + ubs.len());
        let mut start_basis = Vec::with_capacity(eqs.len() + ubs.len());
        for (mut coeffs, b) in eqs {
            coeffs.resize(num_cols, F::zero());
            push_normalized(&mut rows, &mut rhs, coeffs, b);
            start_basis.push(None);
        }
        for (k, (mut coeffs, b)) in ubs.into_iter().enumerate() {
            let slack = num_struct + k;
            coeffs.resize(num_cols, F::zero());
            coeffs[slack] = F::one();
            let flipped = b.is_neg();
            push_normalized(&mut rows, &mut rhs, coeffs, b);
            start_basis.push(if flipped { None } else { Some(slack) });
        }
        cost.resize(num_cols, F::zero());

        StandardForm { rows, rhs, start_basis, num_cols, cost, maps, trivially_infeasible }
    }

    fn recover(&self, y: &[F]) -> Vec<F> {
        self.maps
            .iter()
            .map(|m| {
                let mut v = m.offset.clone();
                for (col, coef) in &m.terms {
                    if !y[*col].is_zero_tol() {
                        v = v + coef.clone() * y[*col].clone();
                    }
                }
                v
            })
            .collect()
    }

    fn recover_direction(&self, d: &[F]) -> Vec<F> {
        self.maps
            .iter()
            .map(|m| {
                let mut v = F::zero();
                for (col, coef) in &m.terms {
                    v = v + coef.clone() * d[*col].clone();
                }
                v
            })
            .collect()
    }
}

fn push_normalized<F: Scalar>(rows: &mut Vec<Vec<F>>, rhs: &mut Vec<F>, coeffs: Vec<F>, b: F) {
    if b.is_neg() {
        rows.push(coeffs.into_iter().map(|a| -a).collect());
        rhs.push(-b);
    } else {
        rows.push(coeffs);
        rhs.push(b);
    }
}

enum PhaseTwo {
    Optimal,
    Unbounded(usize),
}

struct Tableau<F> {
    /// Each row has `width + 1` entries; the last is the basic value.
    rows: Vec<Vec<F>>,
    basis: Vec<usize>,
    /// Columns `>= first_artificial` are artificial.
    first_artificial: usize,
    width: usize,
    max_iters: usize,
}

impl<F: Scalar> Tableau<F> {
    fn new(std: &StandardForm<F>) -> Self {
        let n_art = std.start_basis.iter().filter(|b| b.is_none()).count();
        let width = std.num_cols + n_art;
        let mut rows = Vec::with_capacity(std.rows.len());
        let mut basis = Vec::with_capacity(std.rows.len());
        let mut next_art = std.num_cols;
        for (i, row) in std.rows.iter().enumerate() {
            let mut r = Vec::with_capacity(width + 1);
            r.extend(row.iter().cloned());
            r.resize(width, F::zero());
            match std.start_basis[i] {
                Some(col) => basis.push(col),
                None => {
                    r[next_art] = F::one();
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            r.push(std.rhs[i].clone());
            rows.push(r);
        }
        let max_iters = 50 * (width + rows.len()) + 1000;
        Tableau { rows, basis, first_artificial: std.num_cols, width, max_iters }
    }

    /// Reduced-cost row for `cost` (length `width`, artificial costs taken
    /// from `cost` as given); last entry holds minus the objective.
    fn reduced_costs(&self, cost: &[F]) -> Vec<F> {
        let mut obj: Vec<F> = cost.iter().cloned().collect();
        obj.resize(self.width, F::zero());
        obj.push(F::zero());
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = obj[b].clone();
            if cb.is_zero_tol() {
                continue;
            }
            for (j, a) in self.rows[i].iter().enumerate() {
                if !a.is_zero_tol() {
                    obj[j].sub_mul_assign(&cb, a);
                }
            }
        }
        obj
    }

    fn phase_one(&mut self) -> Result<F, LpError> {
        if self.first_artificial == self.width {
            return Ok(F::zero());
        }
        let mut cost = vec![F::zero(); self.width];
        for c in cost.iter_mut().skip(self.first_artificial) {
            *c = F::one();
        }
        let mut obj = self.reduced_costs(&cost);
        match self.iterate(&mut obj, self.width)? {
            PhaseTwo::Optimal => {}
            PhaseTwo::Unbounded(_) => {
                return Err(LpError::NumericalFailure("phase one reported unbounded".into()))
            }
        }
        let residual = -obj[self.width].clone();
        Ok(residual)
    }

    /// Pivots artificial columns out of the basis; rows where that is
    /// impossible are linearly redundant and get dropped.
    fn drop_artificials(&mut self) {
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= self.first_artificial {
                let col = (0..self.first_artificial).find(|&j| !self.rows[i][j].is_zero_tol());
                match col {
                    Some(j) => {
                        self.pivot(i, j, None);
                        i += 1;
                    }
                    None => {
                        self.rows.remove(i);
                        self.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }

    fn phase_two(&mut self, cost: &[F]) -> Result<PhaseTwo, LpError> {
        let mut obj = self.reduced_costs(cost);
        self.iterate(&mut obj, self.first_artificial)
    }

    /// Bland's rule: lowest-index improving column, lowest-index leaving basic
    /// variable among ratio-test ties.
    fn iterate(&mut self, obj: &mut Vec<F>, allowed: usize) -> Result<PhaseTwo, LpError> {
        let rhs = self.width;
        for _ in 0..self.max_iters {
            let entering = match (0..allowed).find(|&j| obj[j].is_neg()) {
                Some(j) => j,
                None => return Ok(PhaseTwo::Optimal),
            };
            let mut leave: Option<(usize, F)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = &row[entering];
                if !a.is_pos() {
                    continue;
                }
                let ratio = row[rhs].clone() / a.clone();
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((best, best_ratio)) => match ratio.cmp_tol(&best_ratio) {
                        Ordering::Less => Some((i, ratio)),
                        Ordering::Equal if self.basis[i] < self.basis[best] => Some((i, ratio)),
                        _ => Some((best, best_ratio)),
                    },
                };
            }
            match leave {
                None => return Ok(PhaseTwo::Unbounded(entering)),
                Some((row, _)) => self.pivot(row, entering, Some(obj)),
            }
        }
        Err(LpError::NumericalFailure(format!(
            "no convergence within {} pivots",
            self.max_iters
        )))
    }

    fn pivot(&mut self, r: usize, c: usize, obj: Option<&mut Vec<F>>) {
        let p = self.rows[r][c].clone();
        if F::MODE == crate::scalar::Mode::Float64 && p.abs_val().to_f64() < crate::scalar::FLOAT_EPS {
            // Unreachable through the ratio test; guards drop_artificials.
            return;
        }
        let inv = F::one() / p;
        for v in self.rows[r].iter_mut() {
            if !v.is_zero_tol() {
                *v = v.clone() * inv.clone();
            }
        }
        self.rows[r][c] = F::one();
        let nz: Vec<usize> =
            (0..=self.width).filter(|&j| !self.rows[r][j].is_zero_tol()).collect();
        let pivot_row = std::mem::take(&mut self.rows[r]);
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let factor = row[c].clone();
            if factor.is_zero_tol() {
                continue;
            }
            for &j in &nz {
                row[j].sub_mul_assign(&factor, &pivot_row[j]);
            }
            row[c] = F::zero();
        }
        if let Some(obj) = obj {
            let factor = obj[c].clone();
            if !factor.is_zero_tol() {
                for &j in &nz {
                    obj[j].sub_mul_assign(&factor, &pivot_row[j]);
                }
                obj[c] = F::zero();
            }
        }
        self.rows[r] = pivot_row;
        self.basis[r] = c;
    }

    fn primal(&self) -> Vec<F> {
        let mut y = vec![F::zero(); self.width];
        for (i, &b) in self.basis.iter().enumerate() {
            y[b] = self.rows[i][self.width].clone();
        }
        y
    }

    fn ray(&self, entering: usize) -> Vec<F> {
        let mut d = vec![F::zero(); self.width];
        d[entering] = F::one();
        for (i, &b) in self.basis.iter().enumerate() {
            d[b] = -self.rows[i][entering].clone();
        }
        d
    }
}
