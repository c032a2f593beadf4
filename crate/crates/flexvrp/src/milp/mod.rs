//! Self-contained LP/MIP kernel: a bounded-variable two-phase primal simplex
//! with dual extraction, and best-bound branch and bound on top.
//!
//! Tolerances across the kernel: primal feasibility 1e-7, integrality 1e-6,
//! relative MIP gap 1e-6. Duals follow the shadow-price convention
//! (derivative of the optimum with respect to the row rhs): for a
//! minimization, "<=" rows have duals <= 0, ">=" rows >= 0, "=" rows free.

mod branch_bound;
mod simplex;

pub use branch_bound::{solve_mip, MipLimits, MipSolution, MipStatus};
pub use simplex::{solve_lp, LpSolution, LpStatus};

use std::time::Duration;
use thiserror::Error;

pub const FEAS_TOL: f64 = 1e-7;
pub const INT_TOL: f64 = 1e-6;
pub const DEFAULT_REL_GAP: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("model error: {0}")]
    Model(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("limit reached after {nodes} nodes (incumbent {incumbent:?}, bound {bound})")]
    LimitReached { nodes: usize, incumbent: Option<Box<MipSolution>>, bound: f64 },
    #[error("model is unbounded")]
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn symbol(&self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone)]
pub struct VariableDef {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integer: bool,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Solver-neutral MILP in sparse form, objective sense fixed to minimize.
#[derive(Debug, Clone, Default)]
pub struct LinearModel {
    pub variables: Vec<VariableDef>,
    pub rows: Vec<Row>,
    pub objective: Vec<(usize, f64)>,
    /// Constant added to every reported objective value.
    pub objective_offset: f64,
}

impl LinearModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, integer: bool) -> usize {
        self.variables.push(VariableDef { name: name.into(), lower, upper, integer });
        self.variables.len() - 1
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    fn check_row(&self, row: &Row) -> Result<(), MilpError> {
        for &(j, c) in &row.coeffs {
            if j >= self.variables.len() {
                return Err(MilpError::Model(format!(
                    "row {} references variable {} of {}",
                    row.name,
                    j,
                    self.variables.len()
                )));
            }
            if !c.is_finite() {
                return Err(MilpError::Model(format!("row {} has non-finite coefficient", row.name)));
            }
        }
        if !row.rhs.is_finite() {
            return Err(MilpError::Model(format!("row {} has non-finite rhs", row.name)));
        }
        Ok(())
    }

    pub fn push_row(&mut self, row: Row) -> Result<usize, MilpError> {
        self.check_row(&row)?;
        self.rows.push(row);
        Ok(self.rows.len() - 1)
    }

    pub fn set_objective(&mut self, coeffs: Vec<(usize, f64)>, offset: f64) {
        self.objective = coeffs;
        self.objective_offset = offset;
    }

    pub fn validate(&self) -> Result<(), MilpError> {
        for (j, v) in self.variables.iter().enumerate() {
            if v.lower > v.upper {
                return Err(MilpError::Model(format!(
                    "variable {} ({}) has lower {} > upper {}",
                    j, v.name, v.lower, v.upper
                )));
            }
            if v.lower.is_nan() || v.upper.is_nan() {
                return Err(MilpError::Model(format!("variable {} has NaN bound", v.name)));
            }
            if v.integer && (!v.lower.is_finite() || !v.upper.is_finite()) {
                return Err(MilpError::Model(format!(
                    "integer variable {} must have finite bounds",
                    v.name
                )));
            }
        }
        for row in &self.rows {
            self.check_row(row)?;
        }
        for &(j, c) in &self.objective {
            if j >= self.variables.len() || !c.is_finite() {
                return Err(MilpError::Model("bad objective coefficient".into()));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_offset + self.objective.iter().map(|&(j, c)| c * x[j]).sum::<f64>()
    }

    /// Row activity `a . x`.
    pub fn row_activity(&self, row: &Row, x: &[f64]) -> f64 {
        row.coeffs.iter().map(|&(j, c)| c * x[j]).sum()
    }

    /// Largest bound or row violation of a candidate point.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0_f64;
        for (j, v) in self.variables.iter().enumerate() {
            worst = worst.max(v.lower - x[j]).max(x[j] - v.upper);
        }
        for row in &self.rows {
            let act = self.row_activity(row, x);
            let viol = match row.sense {
                Sense::Le => act - row.rhs,
                Sense::Ge => row.rhs - act,
                Sense::Eq => (act - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// LP-style plain-text dump for external cross-checking.
    pub fn dump_lp(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let term = |c: f64, name: &str| -> String {
            if c >= 0.0 {
                format!("+ {c} {name} ")
            } else {
                format!("- {} {name} ", -c)
            }
        };
        out.push_str("Minimize\n obj: ");
        for &(j, c) in &self.objective {
            out.push_str(&term(c, &self.variables[j].name));
        }
        if self.objective_offset != 0.0 {
            let _ = write!(out, "+ {}", self.objective_offset);
        }
        out.push_str("\nSubject To\n");
        for row in &self.rows {
            let _ = write!(out, " {}: ", row.name);
            for &(j, c) in &row.coeffs {
                out.push_str(&term(c, &self.variables[j].name));
            }
            let _ = writeln!(out, "{} {}", row.sense.symbol(), row.rhs);
        }
        out.push_str("Bounds\n");
        for v in &self.variables {
            let _ = writeln!(out, " {} <= {} <= {}", v.lower, v.name, v.upper);
        }
        let ints: Vec<&str> =
            self.variables.iter().filter(|v| v.integer).map(|v| v.name.as_str()).collect();
        if !ints.is_empty() {
            out.push_str("Integers\n");
            for name in ints {
                let _ = writeln!(out, " {name}");
            }
        }
        out.push_str("End\n");
        out
    }
}

/// Returns a copy of the model with one extra row; prior solutions are
/// invalidated by construction since the copy is a new model.
pub fn add_constraint(model: &LinearModel, row: Row) -> Result<LinearModel, MilpError> {
    let mut next = model.clone();
    next.push_row(row)?;
    Ok(next)
}

pub fn default_mip_limits() -> MipLimits {
    MipLimits { node_cap: 2_000_000, time_cap: None, rel_gap: DEFAULT_REL_GAP }
}

impl MipLimits {
    pub fn with_time_cap(mut self, cap: Duration) -> Self {
        self.time_cap = Some(cap);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_var_model() -> LinearModel {
        // min -2 x1 - x2  s.t.  x1 + x2 <= 1,  x in [0,1]^2
        let mut m = LinearModel::new();
        let x1 = m.add_var("x1", 0.0, 1.0, false);
        let x2 = m.add_var("x2", 0.0, 1.0, false);
        m.push_row(Row {
            name: "cap".into(),
            coeffs: vec![(x1, 1.0), (x2, 1.0)],
            sense: Sense::Le,
            rhs: 1.0,
        })
        .unwrap();
        m.set_objective(vec![(x1, -2.0), (x2, -1.0)], 0.0);
        m
    }

    #[test]
    fn lp_knapsack_with_shadow_price() {
        let m = two_var_model();
        let sol = solve_lp(&m).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-9);
        assert!(sol.x[1].abs() < 1e-9);
        assert!((sol.objective + 2.0).abs() < 1e-9);
        assert!((sol.duals[0] + 1.0).abs() < 1e-9, "dual {}", sol.duals[0]);
    }

    #[test]
    fn lp_infeasible() {
        let mut m = LinearModel::new();
        let x = m.add_var("x", 0.0, 1.0, false);
        m.push_row(Row { name: "r".into(), coeffs: vec![(x, 1.0)], sense: Sense::Ge, rhs: 3.0 })
            .unwrap();
        m.set_objective(vec![(x, 1.0)], 0.0);
        let sol = solve_lp(&m).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn lp_bound_optimal_no_rows() {
        let mut m = LinearModel::new();
        let x = m.add_var("x", 0.0, 1.0, false);
        m.set_objective(vec![(x, 1.0)], 0.0);
        let sol = solve_lp(&m).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_eq!(sol.x[0], 0.0);
        assert_eq!(sol.objective, 0.0);
        assert!((sol.reduced_costs[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lp_unbounded() {
        let mut m = LinearModel::new();
        let x = m.add_var("x", 0.0, f64::INFINITY, false);
        m.set_objective(vec![(x, -1.0)], 0.0);
        let sol = solve_lp(&m).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn mip_binary_pair() {
        let mut m = LinearModel::new();
        let x1 = m.add_var("x1", 0.0, 1.0, true);
        let x2 = m.add_var("x2", 0.0, 1.0, true);
        m.push_row(Row {
            name: "cap".into(),
            coeffs: vec![(x1, 1.0), (x2, 1.0)],
            sense: Sense::Le,
            rhs: 1.0,
        })
        .unwrap();
        m.set_objective(vec![(x1, -1.0), (x2, -1.0)], 0.0);
        let sol = solve_mip(&m, &default_mip_limits()).unwrap();
        assert_eq!(sol.status, MipStatus::Optimal);
        assert!((sol.objective + 1.0).abs() < 1e-9);
    }

    #[test]
    fn mip_small_knapsack() {
        // min -(5 x1 + 4 x2) s.t. 2 x1 + 3 x2 <= 6, x binary -> -9 at (1,1)
        let mut m = LinearModel::new();
        let x1 = m.add_var("x1", 0.0, 1.0, true);
        let x2 = m.add_var("x2", 0.0, 1.0, true);
        m.push_row(Row {
            name: "cap".into(),
            coeffs: vec![(x1, 2.0), (x2, 3.0)],
            sense: Sense::Le,
            rhs: 6.0,
        })
        .unwrap();
        m.set_objective(vec![(x1, -5.0), (x2, -4.0)], 0.0);
        let sol = solve_mip(&m, &default_mip_limits()).unwrap();
        assert!((sol.objective + 9.0).abs() < 1e-9);
        assert!((sol.x[0] - 1.0).abs() < 1e-6 && (sol.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn mip_integral_relaxation_single_node() {
        let mut m = LinearModel::new();
        let x = m.add_var("x", 0.0, 1.0, true);
        m.push_row(Row { name: "fix".into(), coeffs: vec![(x, 1.0)], sense: Sense::Eq, rhs: 1.0 })
            .unwrap();
        m.set_objective(vec![(x, 3.0)], 0.0);
        let sol = solve_mip(&m, &default_mip_limits()).unwrap();
        assert_eq!(sol.node_count, 1);
        assert!((sol.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn add_constraint_appends() {
        let base = two_var_model();
        // vacuous row changes nothing
        let vacuous = add_constraint(
            &base,
            Row { name: "vac".into(), coeffs: vec![], sense: Sense::Ge, rhs: -1.0 },
        )
        .unwrap();
        let sol = solve_lp(&vacuous).unwrap();
        assert!((sol.objective + 2.0).abs() < 1e-9);
        // forcing x1 = 0 moves the optimum
        let forced = add_constraint(
            &base,
            Row { name: "fix".into(), coeffs: vec![(0, 1.0)], sense: Sense::Le, rhs: 0.0 },
        )
        .unwrap();
        let sol = solve_lp(&forced).unwrap();
        assert!((sol.objective + 1.0).abs() < 1e-9);
        // contradictory row makes the model infeasible
        let broken = add_constraint(
            &base,
            Row { name: "broken".into(), coeffs: vec![], sense: Sense::Ge, rhs: 1.0 },
        )
        .unwrap();
        assert_eq!(solve_lp(&broken).unwrap().status, LpStatus::Infeasible);
        // out-of-range index rejected
        assert!(add_constraint(
            &base,
            Row { name: "bad".into(), coeffs: vec![(9, 1.0)], sense: Sense::Le, rhs: 0.0 },
        )
        .is_err());
    }

    #[test]
    fn dump_contains_sections() {
        let m = two_var_model();
        let text = m.dump_lp();
        for needle in ["Minimize", "Subject To", "Bounds", "End"] {
            assert!(text.contains(needle), "missing {needle} in dump:\n{text}");
        }
    }
}
