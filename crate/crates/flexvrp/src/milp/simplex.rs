//! Bounded-variable two-phase primal simplex on a dense basis inverse.
//!
//! Variables at a bound are nonbasic; rows get one slack each (box-bounded by
//! the row sense) so the working system is always `A x + s = b`. Phase one
//! drives artificial columns to zero, phase two optimizes the real objective.
//! Dantzig pricing with a Bland fallback after a degenerate streak keeps the
//! method fast and terminating.

use super::{LinearModel, MilpError, Sense, FEAS_TOL};

const PIVOT_TOL: f64 = 1e-10;
const DUAL_TOL: f64 = 1e-9;
const RATIO_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Primal-dual solution of the relaxation. `duals` has one entry per row
/// (shadow prices), `reduced_costs` one entry per model variable.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
}

impl LpSolution {
    fn empty(status: LpStatus) -> Self {
        Self { status, x: Vec::new(), objective: f64::NAN, duals: Vec::new(), reduced_costs: Vec::new() }
    }
}

/// Solves the LP relaxation of `model` (integrality flags ignored).
pub fn solve_lp(model: &LinearModel) -> Result<LpSolution, MilpError> {
    solve_lp_with_bounds(model, None)
}

/// As `solve_lp`, with per-variable bound overrides (used by branch and bound
/// so nodes do not clone whole models).
pub fn solve_lp_with_bounds(
    model: &LinearModel,
    bounds: Option<&[(f64, f64)]>,
) -> Result<LpSolution, MilpError> {
    model.validate()?;
    if let Some(b) = bounds {
        if b.len() != model.n_vars() {
            return Err(MilpError::Model("bounds override length mismatch".into()));
        }
        for (j, &(lo, hi)) in b.iter().enumerate() {
            if lo > hi {
                return Err(MilpError::Model(format!("override bounds crossed on variable {j}")));
            }
        }
    }
    let mut s = Simplex::new(model, bounds);
    s.run()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
    FreeAtZero,
}

struct Simplex<'a> {
    model: &'a LinearModel,
    m: usize,
    n_struct: usize,
    /// structural + slack + artificial column count
    n_total: usize,
    cols: Vec<Vec<(usize, f64)>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    /// Row-major m x m basis inverse.
    binv: Vec<f64>,
    xb: Vec<f64>,
    n_artificial: usize,
    bland: bool,
    degen_streak: usize,
    pivots: usize,
    scratch_w: Vec<f64>,
    scratch_y: Vec<f64>,
}

impl<'a> Simplex<'a> {
    fn new(model: &'a LinearModel, bound_override: Option<&[(f64, f64)]>) -> Self {
        let m = model.rows.len();
        let n_struct = model.variables.len();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_struct + m];
        let mut lower = Vec::with_capacity(n_struct + m);
        let mut upper = Vec::with_capacity(n_struct + m);
        for (j, v) in model.variables.iter().enumerate() {
            let (lo, hi) = match bound_override {
                Some(b) => b[j],
                None => (v.lower, v.upper),
            };
            lower.push(lo);
            upper.push(hi);
        }
        let mut rhs = Vec::with_capacity(m);
        for (r, row) in model.rows.iter().enumerate() {
            for &(j, c) in &row.coeffs {
                if c != 0.0 {
                    cols[j].push((r, c));
                }
            }
            // slack column
            cols[n_struct + r].push((r, 1.0));
            let (lo, hi) = match row.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Eq => (0.0, 0.0),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
            };
            lower.push(lo);
            upper.push(hi);
            rhs.push(row.rhs);
        }
        Self {
            model,
            m,
            n_struct,
            n_total: n_struct + m,
            cols,
            lower,
            upper,
            rhs,
            state: Vec::new(),
            basis: Vec::new(),
            binv: Vec::new(),
            xb: Vec::new(),
            n_artificial: 0,
            bland: false,
            degen_streak: 0,
            pivots: 0,
            scratch_w: vec![0.0; m],
            scratch_y: vec![0.0; m],
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::AtLower => self.lower[j],
            VarState::AtUpper => self.upper[j],
            VarState::FreeAtZero => 0.0,
            VarState::Basic(slot) => self.xb[slot],
        }
    }

    /// Initial point: every structural and slack variable at its finite bound
    /// nearest zero (zero for free variables); artificials absorb whatever
    /// residual the slacks cannot.
    fn setup(&mut self) {
        self.state = (0..self.n_total)
            .map(|j| {
                let (lo, hi) = (self.lower[j], self.upper[j]);
                if lo.is_finite() && hi.is_finite() {
                    if lo.abs() <= hi.abs() {
                        VarState::AtLower
                    } else {
                        VarState::AtUpper
                    }
                } else if lo.is_finite() {
                    VarState::AtLower
                } else if hi.is_finite() {
                    VarState::AtUpper
                } else {
                    VarState::FreeAtZero
                }
            })
            .collect();

        // Residual with all structural vars at their chosen values, slacks at zero.
        let mut resid = self.rhs.clone();
        for j in 0..self.n_struct {
            let v = self.nonbasic_value(j);
            if v != 0.0 {
                for &(r, c) in &self.cols[j] {
                    resid[r] -= c * v;
                }
            }
        }

        self.basis = vec![usize::MAX; self.m];
        self.xb = vec![0.0; self.m];
        self.binv = vec![0.0; self.m * self.m];
        for r in 0..self.m {
            let slack = self.n_struct + r;
            let (lo, hi) = (self.lower[slack], self.upper[slack]);
            if resid[r] >= lo - FEAS_TOL && resid[r] <= hi + FEAS_TOL {
                // slack alone absorbs the row
                self.basis[r] = slack;
                self.state[slack] = VarState::Basic(r);
                self.xb[r] = resid[r].clamp(lo, hi);
                self.binv[r * self.m + r] = 1.0;
            } else {
                let clamped = resid[r].clamp(lo, hi);
                self.state[slack] = if clamped == lo { VarState::AtLower } else { VarState::AtUpper };
                let leftover = resid[r] - clamped;
                let sign = if leftover >= 0.0 { 1.0 } else { -1.0 };
                let art = self.n_total + self.n_artificial;
                self.cols.push(vec![(r, sign)]);
                self.lower.push(0.0);
                self.upper.push(f64::INFINITY);
                self.state.push(VarState::Basic(r));
                self.n_artificial += 1;
                self.basis[r] = art;
                self.xb[r] = leftover.abs();
                self.binv[r * self.m + r] = sign; // column is sign * e_r
            }
        }
        self.n_total += self.n_artificial;
    }

    fn run(&mut self) -> Result<LpSolution, MilpError> {
        self.setup();

        if self.n_artificial > 0 {
            let mut c1 = vec![0.0; self.n_total];
            for j in (self.n_total - self.n_artificial)..self.n_total {
                c1[j] = 1.0;
            }
            match self.optimize(&c1)? {
                PhaseEnd::Optimal => {}
                PhaseEnd::Unbounded => {
                    return Err(MilpError::NumericalFailure(
                        "phase one unbounded (objective is bounded below by zero)".into(),
                    ))
                }
            }
            let infeas: f64 = self
                .basis
                .iter()
                .zip(&self.xb)
                .filter(|(&b, _)| b >= self.n_total - self.n_artificial)
                .map(|(_, &v)| v.abs())
                .sum();
            let scale = 1.0 + self.rhs.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if infeas > FEAS_TOL * scale * 10.0 {
                return Ok(LpSolution::empty(LpStatus::Infeasible));
            }
            // Pin artificials so phase two cannot revive them.
            let art_start = self.n_total - self.n_artificial;
            for j in art_start..self.n_total {
                self.upper[j] = 0.0;
                if let VarState::Basic(slot) = self.state[j] {
                    self.xb[slot] = 0.0;
                } else {
                    self.state[j] = VarState::AtLower;
                }
            }
        }

        let mut c2 = vec![0.0; self.n_total];
        for &(j, c) in &self.model.objective {
            c2[j] += c;
        }
        self.bland = false;
        self.degen_streak = 0;
        match self.optimize(&c2)? {
            PhaseEnd::Optimal => self.extract(&c2),
            PhaseEnd::Unbounded => Ok(LpSolution::empty(LpStatus::Unbounded)),
        }
    }

    /// y = c_B' B^-1
    fn compute_duals(&mut self, cost: &[f64]) {
        self.scratch_y.iter_mut().for_each(|v| *v = 0.0);
        for slot in 0..self.m {
            let cb = cost[self.basis[slot]];
            if cb != 0.0 {
                let row = &self.binv[slot * self.m..(slot + 1) * self.m];
                for (y, &b) in self.scratch_y.iter_mut().zip(row) {
                    *y += cb * b;
                }
            }
        }
    }

    fn reduced_cost(&self, cost: &[f64], j: usize) -> f64 {
        let mut d = cost[j];
        for &(r, c) in &self.cols[j] {
            d -= self.scratch_y[r] * c;
        }
        d
    }

    /// w = B^-1 A_j
    fn compute_column(&mut self, j: usize) {
        self.scratch_w.iter_mut().for_each(|v| *v = 0.0);
        for &(r, c) in &self.cols[j] {
            for slot in 0..self.m {
                self.scratch_w[slot] += self.binv[slot * self.m + r] * c;
            }
        }
    }

    fn optimize(&mut self, cost: &[f64]) -> Result<PhaseEnd, MilpError> {
        let iter_cap = 2000 + 200 * (self.m + self.n_total);
        for _ in 0..iter_cap {
            self.compute_duals(cost);

            // Pricing: Dantzig by default, Bland once degeneracy persists.
            let mut entering: Option<(usize, f64, bool)> = None; // (col, reduced, increase)
            for j in 0..self.n_total {
                let (lo, hi) = (self.lower[j], self.upper[j]);
                if hi - lo <= 0.0 {
                    continue; // fixed vars never enter
                }
                let (eligible, increase, d) = match self.state[j] {
                    VarState::Basic(_) => (false, false, 0.0),
                    VarState::AtLower => {
                        let d = self.reduced_cost(cost, j);
                        (d < -DUAL_TOL, true, d)
                    }
                    VarState::AtUpper => {
                        let d = self.reduced_cost(cost, j);
                        (d > DUAL_TOL, false, d)
                    }
                    VarState::FreeAtZero => {
                        let d = self.reduced_cost(cost, j);
                        (d.abs() > DUAL_TOL, d < 0.0, d)
                    }
                };
                if !eligible {
                    continue;
                }
                if self.bland {
                    entering = Some((j, d, increase));
                    break;
                }
                match entering {
                    Some((_, best, _)) if d.abs() <= best.abs() => {}
                    _ => entering = Some((j, d, increase)),
                }
            }
            let Some((j_in, _, increase)) = entering else {
                return Ok(PhaseEnd::Optimal);
            };
            let dir = if increase { 1.0 } else { -1.0 };

            self.compute_column(j_in);

            // Ratio test: the entering variable moves by `step >= 0` in
            // direction `dir`; each basic variable blocks at a bound, and the
            // entering variable itself blocks at its opposite bound.
            let range = self.upper[j_in] - self.lower[j_in];
            let mut best_step = if range.is_finite() { range } else { f64::INFINITY };
            let mut blocking: Option<(usize, bool)> = None; // (slot, leaves_at_upper)
            for slot in 0..self.m {
                let w = self.scratch_w[slot];
                if w.abs() <= PIVOT_TOL {
                    continue;
                }
                let rate = -dir * w; // change of xb[slot] per unit step
                let bcol = self.basis[slot];
                let (step, at_upper) = if rate > 0.0 {
                    if self.upper[bcol].is_finite() {
                        (((self.upper[bcol] - self.xb[slot]) / rate).max(0.0), true)
                    } else {
                        continue;
                    }
                } else if self.lower[bcol].is_finite() {
                    (((self.xb[slot] - self.lower[bcol]) / -rate).max(0.0), false)
                } else {
                    continue;
                };
                let better = match blocking {
                    None => step < best_step - RATIO_TOL,
                    Some((cur_slot, _)) => {
                        step < best_step - RATIO_TOL
                            || (step < best_step + RATIO_TOL && {
                                // stability tie-break: bigger pivot wins; final
                                // tie on lowest leaving column index
                                let cur_w = self.scratch_w[cur_slot].abs();
                                let new_w = w.abs();
                                new_w > cur_w * (1.0 + 1e-12)
                                    || (new_w >= cur_w * (1.0 - 1e-12)
                                        && self.basis[slot] < self.basis[cur_slot])
                            })
                    }
                };
                if better {
                    best_step = best_step.min(step);
                    if step <= best_step + RATIO_TOL {
                        best_step = step.min(best_step);
                        blocking = Some((slot, at_upper));
                    }
                }
            }

            if best_step.is_infinite() {
                return Ok(PhaseEnd::Unbounded);
            }
            self.pivots += 1;
            if best_step <= DEGENERATE_STEP {
                self.degen_streak += 1;
                if self.degen_streak > 2 * (self.m + 10) {
                    self.bland = true;
                }
            } else {
                self.degen_streak = 0;
            }

            match blocking {
                None => {
                    // bound flip: entering travels to its other bound
                    for slot in 0..self.m {
                        self.xb[slot] -= dir * best_step * self.scratch_w[slot];
                    }
                    self.state[j_in] =
                        if increase { VarState::AtUpper } else { VarState::AtLower };
                }
                Some((slot, leaves_at_upper)) => {
                    let entering_value = self.nonbasic_value(j_in) + dir * best_step;
                    let leaving = self.basis[slot];
                    for s in 0..self.m {
                        if s != slot {
                            self.xb[s] -= dir * best_step * self.scratch_w[s];
                        }
                    }
                    self.state[leaving] =
                        if leaves_at_upper { VarState::AtUpper } else { VarState::AtLower };
                    self.basis[slot] = j_in;
                    self.state[j_in] = VarState::Basic(slot);
                    self.xb[slot] = entering_value;

                    // eta update of the dense inverse
                    let piv = self.scratch_w[slot];
                    if piv.abs() <= PIVOT_TOL {
                        return Err(MilpError::NumericalFailure(format!(
                            "pivot {piv:.3e} below tolerance after {} pivots",
                            self.pivots
                        )));
                    }
                    let (head, tail) = self.binv.split_at_mut(slot * self.m);
                    let (pivot_row, rest) = tail.split_at_mut(self.m);
                    for v in pivot_row.iter_mut() {
                        *v /= piv;
                    }
                    for (s, chunk) in head.chunks_mut(self.m).enumerate() {
                        let f = self.scratch_w[s];
                        if f != 0.0 {
                            for (a, &p) in chunk.iter_mut().zip(pivot_row.iter()) {
                                *a -= f * p;
                            }
                        }
                    }
                    for (off, chunk) in rest.chunks_mut(self.m).enumerate() {
                        let f = self.scratch_w[slot + 1 + off];
                        if f != 0.0 {
                            for (a, &p) in chunk.iter_mut().zip(pivot_row.iter()) {
                                *a -= f * p;
                            }
                        }
                    }
                }
            }
        }
        Err(MilpError::NumericalFailure(format!(
            "simplex iteration cap hit after {} pivots ({} rows, {} cols)",
            self.pivots, self.m, self.n_total
        )))
    }

    /// Recompute basic values from original data through the current inverse,
    /// wiping the drift accumulated by eta updates.
    fn refresh_basics(&mut self) {
        let mut adj = self.rhs.clone();
        for j in 0..self.n_total {
            if matches!(self.state[j], VarState::Basic(_)) {
                continue;
            }
            let v = self.nonbasic_value(j);
            if v != 0.0 {
                for &(r, c) in &self.cols[j] {
                    adj[r] -= c * v;
                }
            }
        }
        for slot in 0..self.m {
            let row = &self.binv[slot * self.m..(slot + 1) * self.m];
            self.xb[slot] = row.iter().zip(&adj).map(|(&b, &a)| b * a).sum();
        }
    }

    /// Full refactorization: rebuild the inverse from the basis columns by
    /// Gauss-Jordan with partial pivoting.
    fn refactorize(&mut self) -> Result<(), MilpError> {
        let m = self.m;
        let mut mat = vec![0.0; m * m];
        for slot in 0..m {
            for &(r, c) in &self.cols[self.basis[slot]] {
                mat[r * m + slot] = c;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let mut piv_row = col;
            let mut piv_val = mat[col * m + col].abs();
            for r in (col + 1)..m {
                if mat[r * m + col].abs() > piv_val {
                    piv_val = mat[r * m + col].abs();
                    piv_row = r;
                }
            }
            if piv_val <= PIVOT_TOL {
                return Err(MilpError::NumericalFailure("singular basis during refactorization".into()));
            }
            if piv_row != col {
                for k in 0..m {
                    mat.swap(col * m + k, piv_row * m + k);
                    inv.swap(col * m + k, piv_row * m + k);
                }
            }
            let p = mat[col * m + col];
            for k in 0..m {
                mat[col * m + k] /= p;
                inv[col * m + k] /= p;
            }
            for r in 0..m {
                if r != col {
                    let f = mat[r * m + col];
                    if f != 0.0 {
                        for k in 0..m {
                            mat[r * m + k] -= f * mat[col * m + k];
                            inv[r * m + k] -= f * inv[col * m + k];
                        }
                    }
                }
            }
        }
        // mat is now a permutation-free identity; inv holds B^-1 in the basis
        // ordering used above (columns indexed by slot).
        self.binv = inv;
        Ok(())
    }

    fn extract(&mut self, cost: &[f64]) -> Result<LpSolution, MilpError> {
        self.refresh_basics();
        let scale = 1.0 + self.rhs.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let drift = self.basis_violation();
        if drift > FEAS_TOL * scale {
            self.refactorize()?;
            self.refresh_basics();
            if self.basis_violation() > 10.0 * FEAS_TOL * scale {
                return Err(MilpError::NumericalFailure(format!(
                    "basic solution infeasible by {drift:.3e} after refactorization"
                )));
            }
        }

        let mut x = vec![0.0; self.n_struct];
        for (j, xv) in x.iter_mut().enumerate() {
            let mut v = self.nonbasic_value(j);
            if self.lower[j].is_finite() {
                v = v.max(self.lower[j]);
            }
            if self.upper[j].is_finite() {
                v = v.min(self.upper[j]);
            }
            *xv = v;
        }
        self.compute_duals(cost);
        let duals = self.scratch_y.clone();
        let reduced_costs: Vec<f64> = (0..self.n_struct).map(|j| self.reduced_cost(cost, j)).collect();
        let objective = self.model.objective_value(&x);
        Ok(LpSolution { status: LpStatus::Optimal, x, objective, duals, reduced_costs })
    }

    fn basis_violation(&self) -> f64 {
        let mut worst = 0.0_f64;
        for slot in 0..self.m {
            let j = self.basis[slot];
            worst = worst.max(self.lower[j] - self.xb[slot]).max(self.xb[slot] - self.upper[j]);
        }
        worst
    }
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{LinearModel, Row, Sense};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// Random LP with a known feasible point; returns the model.
    fn random_feasible_lp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> LinearModel {
        let mut model = LinearModel::new();
        for j in 0..n {
            model.add_var(format!("x{j}"), 0.0, 10.0, false);
        }
        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
        for r in 0..m {
            let mut coeffs = Vec::new();
            for j in 0..n {
                if rng.gen_bool(0.6) {
                    coeffs.push((j, rng.gen_range(-4.0..4.0)));
                }
            }
            if coeffs.is_empty() {
                coeffs.push((rng.gen_range(0..n), 1.0));
            }
            let act: f64 = coeffs.iter().map(|&(j, c)| c * x0[j]).sum();
            let sense = match rng.gen_range(0..3) {
                0 => Sense::Le,
                1 => Sense::Ge,
                _ => Sense::Eq,
            };
            let rhs = match sense {
                Sense::Le => act + rng.gen_range(0.0..3.0),
                Sense::Ge => act - rng.gen_range(0.0..3.0),
                Sense::Eq => act,
            };
            model.push_row(Row { name: format!("r{r}"), coeffs, sense, rhs }).unwrap();
        }
        let obj: Vec<(usize, f64)> = (0..n).map(|j| (j, rng.gen_range(-5.0..5.0))).collect();
        model.set_objective(obj, rng.gen_range(-2.0..2.0));
        model
    }

    /// Strong duality for the bounded simplex:
    /// c'x = y'b + sum over nonbasic-at-bound reduced costs times bounds.
    fn duality_gap(model: &LinearModel, sol: &LpSolution) -> f64 {
        let yb: f64 = sol.duals.iter().zip(&model.rows).map(|(y, r)| y * r.rhs).sum();
        let mut bound_terms = 0.0;
        for (j, v) in model.variables.iter().enumerate() {
            let d = sol.reduced_costs[j];
            if d.abs() < 1e-9 {
                continue;
            }
            // which bound the variable sits at decides the term
            if (sol.x[j] - v.lower).abs() < 1e-6 {
                bound_terms += d * v.lower;
            } else if (sol.x[j] - v.upper).abs() < 1e-6 {
                bound_terms += d * v.upper;
            }
        }
        let primal = sol.objective - model.objective_offset;
        (primal - yb - bound_terms).abs()
    }

    #[test]
    fn strong_duality_on_500_random_lps() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5d1a);
        for trial in 0..500 {
            let n = rng.gen_range(2..9);
            let m = rng.gen_range(1..7);
            let model = random_feasible_lp(&mut rng, n, m);
            let sol = solve_lp(&model).unwrap();
            assert_eq!(sol.status, LpStatus::Optimal, "trial {trial} should be feasible");
            assert!(
                model.max_violation(&sol.x) <= 1e-7 * 20.0,
                "trial {trial}: primal violation {}",
                model.max_violation(&sol.x)
            );
            let gap = duality_gap(&model, &sol);
            assert!(
                gap <= 1e-6 * (1.0 + sol.objective.abs()),
                "trial {trial}: duality gap {gap}"
            );
        }
    }

    #[test]
    fn deterministic_solutions() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let model = random_feasible_lp(&mut rng, 6, 4);
        let a = solve_lp(&model).unwrap();
        let b = solve_lp(&model).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert_eq!(a.duals, b.duals);
    }

    #[test]
    fn equality_rows_and_free_negative_slack() {
        // min x + y s.t. x + y = 2, x - y >= -1, x,y in [0, 5]
        let mut m = LinearModel::new();
        let x = m.add_var("x", 0.0, 5.0, false);
        let y = m.add_var("y", 0.0, 5.0, false);
        m.push_row(Row { name: "e".into(), coeffs: vec![(x, 1.0), (y, 1.0)], sense: Sense::Eq, rhs: 2.0 })
            .unwrap();
        m.push_row(Row { name: "g".into(), coeffs: vec![(x, 1.0), (y, -1.0)], sense: Sense::Ge, rhs: -1.0 })
            .unwrap();
        m.set_objective(vec![(x, 1.0), (y, 1.0)], 0.0);
        let sol = solve_lp(&m).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 2.0).abs() < 1e-9);
    }

    #[test]
    fn free_variable_enters() {
        // min t s.t. t >= x - 1, t >= 1 - x with x in [0,2], t free
        let mut m = LinearModel::new();
        let x = m.add_var("x", 0.0, 2.0, false);
        let t = m.add_var("t", f64::NEG_INFINITY, f64::INFINITY, false);
        m.push_row(Row {
            name: "a".into(),
            coeffs: vec![(t, 1.0), (x, -1.0)],
            sense: Sense::Ge,
            rhs: -1.0,
        })
        .unwrap();
        m.push_row(Row {
            name: "b".into(),
            coeffs: vec![(t, 1.0), (x, 1.0)],
            sense: Sense::Ge,
            rhs: 1.0,
        })
        .unwrap();
        m.set_objective(vec![(t, 1.0)], 0.0);
        let sol = solve_lp(&m).unwrap();
        assert!((sol.objective - 0.0).abs() < 1e-9, "objective {}", sol.objective);
        assert!((sol.x[x] - 1.0).abs() < 1e-9);
    }
}
