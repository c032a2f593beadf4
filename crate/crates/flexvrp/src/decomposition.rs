//! Cutting-plane solvers: the classic generalized Benders loop and the
//! dual-decomposition variant that strengthens its cuts through integer
//! Lagrangian subproblems, plus the monolithic and baseline drivers that share
//! the same report format.
//!
//! One iteration of either loop: solve the master, price the proposal through
//! the pinned subproblem, then either improve the incumbent and cut on the
//! subproblem duals, or measure infeasibility through the slack subproblem and
//! cut on its duals. The dual method additionally re-optimizes each cut's
//! right-hand side over integer copies, which can only raise it (the
//! tightening is the nonnegative quantity `compute_xi` measures).

use crate::formulations::{
    build_fsp, build_lsp, build_mp, build_p2, build_psp, build_vrp_baseline, extract_routes,
    BuildError, CustomerTerm, Formulation, MasterPoint, Multipliers, Route, VarMap,
};
use crate::milp::{
    add_constraint, default_mip_limits, solve_lp, solve_mip, LpStatus, MilpError, MipLimits,
    MipStatus, Row, Sense,
};
use crate::model::{validate_instance, Instance};
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecompError {
    #[error("build error: {0}")]
    Build(#[from] BuildError),
    #[error("solver error: {0}")]
    Milp(#[from] MilpError),
    #[error("iteration limit reached with gap {gap:.3e}")]
    LimitReached { gap: f64, report: Box<RunReport> },
    #[error("feasibility subproblem produced no slack; the master point was feasible")]
    NotACut,
    #[error("internal error: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Monolithic,
    Gbd,
    Bdd,
    Vrp,
    Oracle,
    OracleVrp,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Monolithic => "monolithic",
            Method::Gbd => "gbd",
            Method::Bdd => "bdd",
            Method::Vrp => "vrp",
            Method::Oracle => "oracle",
            Method::OracleVrp => "oracle-vrp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutKind {
    Optimality,
    Feasibility,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutPhase {
    Fractional,
    Integer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutSource {
    Classic,
    Strengthened,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutProvenance {
    pub iteration: usize,
    pub phase: CutPhase,
    pub source: CutSource,
}

/// A linear inequality over the master variables,
/// `theta_coeff * Theta + x_coeffs . x + omega_coeffs . omega >= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub kind: CutKind,
    pub theta_coeff: f64,
    pub x_coeffs: Vec<f64>,
    pub omega_coeffs: Vec<Vec<f64>>,
    pub rhs: f64,
    pub provenance: CutProvenance,
}

impl Cut {
    /// Slack of the cut at a master point: nonnegative means satisfied.
    pub fn slack_at(&self, theta: f64, point: &MasterPoint) -> f64 {
        let mut lhs = self.theta_coeff * theta;
        lhs += self.x_coeffs.iter().zip(&point.x).map(|(c, v)| c * v).sum::<f64>();
        lhs += self
            .omega_coeffs
            .iter()
            .zip(&point.omega)
            .flat_map(|(cs, vs)| cs.iter().zip(vs))
            .map(|(c, v)| c * v)
            .sum::<f64>();
        lhs - self.rhs
    }

    /// Master-model row carrying this cut.
    pub fn to_row(&self, vm: &VarMap, name: String) -> Row {
        let mut coeffs = Vec::new();
        if self.theta_coeff != 0.0 {
            coeffs.push((vm.theta.expect("cut rows need a master with theta"), self.theta_coeff));
        }
        for (idx, &c) in self.x_coeffs.iter().enumerate() {
            if c != 0.0 {
                coeffs.push((vm.x[idx], c));
            }
        }
        for (ci, cs) in self.omega_coeffs.iter().enumerate() {
            for (m, &c) in cs.iter().enumerate() {
                if c != 0.0 {
                    coeffs.push((vm.omega[ci][m], c));
                }
            }
        }
        Row { name, coeffs, sense: Sense::Ge, rhs: self.rhs }
    }

    pub fn same_inequality(&self, other: &Cut) -> bool {
        self.kind == other.kind
            && self.theta_coeff == other.theta_coeff
            && self.rhs == other.rhs
            && self.x_coeffs == other.x_coeffs
            && self.omega_coeffs == other.omega_coeffs
    }

    pub fn is_finite(&self) -> bool {
        self.rhs.is_finite()
            && self.x_coeffs.iter().all(|v| v.is_finite())
            && self.omega_coeffs.iter().flatten().all(|v| v.is_finite())
    }
}

/// What an integer subproblem solve contributes to a cut: the second-stage
/// cost (or total slack) and the copy values it settled on.
#[derive(Debug, Clone)]
pub struct SubproblemOutcome {
    pub value: f64,
    pub copies: MasterPoint,
}

/// Optimality cut `Theta >= value + lambda . (master - copies)`.
pub fn make_optimality_cut(
    outcome: &SubproblemOutcome,
    lambda: &Multipliers,
    provenance: CutProvenance,
) -> Cut {
    Cut {
        kind: CutKind::Optimality,
        theta_coeff: 1.0,
        x_coeffs: lambda.lambda_x.iter().map(|l| -l).collect(),
        omega_coeffs: lambda
            .lambda_omega
            .iter()
            .map(|ls| ls.iter().map(|l| -l).collect())
            .collect(),
        rhs: outcome.value - lambda.dot(&outcome.copies),
        provenance,
    }
}

/// Feasibility cut `0 >= slack_total + lambda . (master - copies)`; rejects a
/// slack-free outcome, which signals the caller cut a feasible point.
pub fn make_feasibility_cut(
    outcome: &SubproblemOutcome,
    lambda: &Multipliers,
    provenance: CutProvenance,
) -> Result<Cut, DecompError> {
    if outcome.value <= 1e-9 {
        return Err(DecompError::NotACut);
    }
    Ok(Cut {
        kind: CutKind::Feasibility,
        theta_coeff: 0.0,
        x_coeffs: lambda.lambda_x.iter().map(|l| -l).collect(),
        omega_coeffs: lambda
            .lambda_omega
            .iter()
            .map(|ls| ls.iter().map(|l| -l).collect())
            .collect(),
        rhs: outcome.value - lambda.dot(&outcome.copies),
        provenance,
    })
}

/// Full account of one solve.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub method: Method,
    pub objective: f64,
    pub routes: Vec<Route>,
    pub terms: Vec<CustomerTerm>,
    pub lb_trace: Vec<f64>,
    pub ub_trace: Vec<f64>,
    /// Integer-phase iterations for the decomposition methods, 1 otherwise.
    pub iterations: usize,
    pub cuts: Vec<Cut>,
    /// Integer-minus-relaxed Lagrangian subproblem value per optimality-cut
    /// iteration (dual method with `compute_xi` on).
    pub xi_trace: Vec<f64>,
    /// Strengthened-minus-classic cut rhs per optimality-cut iteration of the
    /// dual method.
    pub rhs_gap_trace: Vec<f64>,
    pub wall: Duration,
    /// Branch-and-bound nodes over all master/subproblem solves.
    pub nodes: usize,
}

impl RunReport {
    pub fn final_gap(&self) -> f64 {
        match (self.lb_trace.last(), self.ub_trace.last()) {
            (Some(lb), Some(ub)) => (ub - lb) / ub.abs().max(1.0),
            _ => f64::NAN,
        }
    }

    pub fn served_count(&self) -> usize {
        self.terms.iter().filter(|t| t.served).count()
    }

    /// Total discount spend `sum q_j delta_j` over served customers.
    pub fn discount_spend(&self) -> f64 {
        self.terms.iter().filter(|t| t.served).map(|t| t.q * t.delta).sum()
    }
}

#[derive(Debug, Clone)]
pub struct RunOpts {
    pub gap_tol: f64,
    pub max_iters: usize,
    pub mip_limits: MipLimits,
    /// Fractional-phase caps: total cuts and the stall window (consecutive
    /// bound improvements below 1e-6 relative).
    pub fractional_cut_cap: usize,
    pub fractional_stall: usize,
    pub compute_xi: bool,
}

impl Default for RunOpts {
    fn default() -> Self {
        Self {
            gap_tol: 1e-4,
            max_iters: 200,
            mip_limits: default_mip_limits(),
            fractional_cut_cap: 50,
            fractional_stall: 3,
            compute_xi: false,
        }
    }
}

/// Solves the single-level MIP directly.
pub fn solve_monolithic(inst: &Instance, opts: &RunOpts) -> Result<RunReport, DecompError> {
    solve_direct(inst, opts, Method::Monolithic)
}

/// Solves the rigid-window baseline.
pub fn solve_vrp(inst: &Instance, opts: &RunOpts) -> Result<RunReport, DecompError> {
    solve_direct(inst, opts, Method::Vrp)
}

fn solve_direct(inst: &Instance, opts: &RunOpts, method: Method) -> Result<RunReport, DecompError> {
    let started = Instant::now();
    let fm = match method {
        Method::Monolithic => build_p2(inst)?,
        Method::Vrp => build_vrp_baseline(inst)?,
        _ => return Err(DecompError::Internal("solve_direct handles monolithic and vrp".into())),
    };
    let sol = solve_mip(&fm.model, &opts.mip_limits)?;
    if sol.status != MipStatus::Optimal {
        return Err(DecompError::Internal(format!("{} model reported infeasible", method.name())));
    }
    let extraction = extract_routes(&sol.x, &fm.varmap, inst)?;
    Ok(RunReport {
        method,
        objective: sol.objective,
        routes: extraction.routes,
        terms: extraction.terms,
        lb_trace: vec![sol.objective],
        ub_trace: vec![sol.objective],
        iterations: 1,
        cuts: Vec::new(),
        xi_trace: Vec::new(),
        rhs_gap_trace: Vec::new(),
        wall: started.elapsed(),
        nodes: sol.node_count,
    })
}

/// Generalized Benders decomposition: integer master, continuous subproblem,
/// classic cuts from the subproblem duals.
pub fn run_gbd(inst: &Instance, opts: &RunOpts) -> Result<RunReport, DecompError> {
    decompose(inst, opts, false)
}

/// Dual decomposition: a fractional warm-start phase of classic cuts, then
/// integer-master iterations with cuts strengthened by integer subproblems.
pub fn run_bdd(inst: &Instance, opts: &RunOpts) -> Result<RunReport, DecompError> {
    decompose(inst, opts, true)
}

/// Tightness certificate: integer optimum minus LP optimum of the Lagrangian
/// subproblem at the given multipliers. Nonnegative by integrality.
pub fn compute_xi(
    inst: &Instance,
    lambda: &Multipliers,
    point: &MasterPoint,
    limits: &MipLimits,
) -> Result<f64, DecompError> {
    let lsp = build_lsp(inst, lambda, point)?;
    let integer = solve_mip(&lsp.model, limits)?;
    if integer.status != MipStatus::Optimal {
        return Err(DecompError::Internal("integer Lagrangian subproblem infeasible".into()));
    }
    let relaxed = solve_lp(&lsp.model)?;
    if relaxed.status != LpStatus::Optimal {
        return Err(DecompError::Internal("relaxed Lagrangian subproblem not optimal".into()));
    }
    Ok(integer.objective - relaxed.objective)
}

struct LoopState {
    mp: Formulation,
    model: crate::milp::LinearModel,
    cuts: Vec<Cut>,
    lb: f64,
    ub: f64,
    best: Option<(Vec<Route>, Vec<CustomerTerm>)>,
    lb_trace: Vec<f64>,
    ub_trace: Vec<f64>,
    xi_trace: Vec<f64>,
    rhs_gap_trace: Vec<f64>,
    nodes: usize,
}

impl LoopState {
    fn push_cut(&mut self, cut: Cut) -> Result<bool, DecompError> {
        if !cut.is_finite() {
            return Err(DecompError::Internal("cut with non-finite coefficients".into()));
        }
        if self.cuts.iter().any(|c| c.same_inequality(&cut)) {
            return Ok(false);
        }
        let row = cut.to_row(&self.mp.varmap, format!("cut{}", self.cuts.len()));
        self.model = add_constraint(&self.model, row)?;
        self.cuts.push(cut);
        Ok(true)
    }

    fn gap(&self) -> f64 {
        (self.ub - self.lb) / self.ub.abs().max(1.0)
    }

    fn report(&self, method: Method, iterations: usize, wall: Duration) -> RunReport {
        let (routes, terms) = self.best.clone().unwrap_or_default();
        RunReport {
            method,
            objective: self.ub,
            routes,
            terms,
            lb_trace: self.lb_trace.clone(),
            ub_trace: self.ub_trace.clone(),
            iterations,
            cuts: self.cuts.clone(),
            xi_trace: self.xi_trace.clone(),
            rhs_gap_trace: self.rhs_gap_trace.clone(),
            wall,
            nodes: self.nodes,
        }
    }
}

enum CutOutcome {
    Optimality { cut: Cut },
    Feasibility { cut: Cut },
}

fn decompose(inst: &Instance, opts: &RunOpts, dual: bool) -> Result<RunReport, DecompError> {
    let violations = validate_instance(inst);
    if !violations.is_empty() {
        let msgs: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(DecompError::Build(BuildError::Model(msgs.join("; "))));
    }
    let started = Instant::now();
    let method = if dual { Method::Bdd } else { Method::Gbd };
    let mp = build_mp(inst)?;
    let mut state = LoopState {
        model: mp.model.clone(),
        mp,
        cuts: Vec::new(),
        lb: f64::NEG_INFINITY,
        ub: f64::INFINITY,
        best: None,
        lb_trace: Vec::new(),
        ub_trace: Vec::new(),
        xi_trace: Vec::new(),
        rhs_gap_trace: Vec::new(),
        nodes: 0,
    };

    // Fractional warm start: classic cuts off the master's LP relaxation
    // until the relaxation bound stalls.
    if dual {
        let mut stall = 0usize;
        let mut prev_bound = f64::NEG_INFINITY;
        for it in 1..=opts.fractional_cut_cap {
            let lp = solve_lp(&state.model)?;
            if lp.status != LpStatus::Optimal {
                return Err(DecompError::Internal(format!(
                    "master relaxation came back {:?}",
                    lp.status
                )));
            }
            if lp.objective - prev_bound <= 1e-6 * (1.0 + lp.objective.abs()) {
                stall += 1;
                if stall >= opts.fractional_stall {
                    break;
                }
            } else {
                stall = 0;
            }
            prev_bound = lp.objective;
            let point = state.mp.varmap.master_point(&lp.x);
            let provenance = CutProvenance {
                iteration: it,
                phase: CutPhase::Fractional,
                source: CutSource::Classic,
            };
            let cut = match classic_cut_at(inst, &point, provenance)? {
                CutOutcome::Optimality { cut } => cut,
                CutOutcome::Feasibility { cut } => cut,
            };
            if !state.push_cut(cut)? {
                break; // nothing new separates this relaxation point
            }
        }
    }

    for it in 1..=opts.max_iters {
        let mip = solve_mip(&state.model, &opts.mip_limits)?;
        if mip.status != MipStatus::Optimal {
            return Err(DecompError::Internal("master became infeasible; some cut is invalid".into()));
        }
        state.nodes += mip.node_count;
        state.lb = state.lb.max(mip.objective);
        state.lb_trace.push(state.lb);
        state.ub_trace.push(state.ub);
        if state.gap() <= opts.gap_tol {
            return Ok(state.report(method, it - 1, started.elapsed()));
        }

        let point = state.mp.varmap.master_point(&mip.x);
        let provenance = CutProvenance {
            iteration: it,
            phase: CutPhase::Integer,
            source: if dual { CutSource::Strengthened } else { CutSource::Classic },
        };

        let psp = build_psp(inst, &point)?;
        let psp_sol = solve_lp(&psp.model)?;
        match psp_sol.status {
            LpStatus::Optimal => {
                let second_stage = psp_sol.objective;
                let first_stage = state.mp.first_stage_cost(inst, &point);
                let candidate = first_stage + second_stage;
                if candidate < state.ub - 1e-12 {
                    state.ub = candidate;
                    let extraction = extract_routes(&psp_sol.x, &psp.varmap, inst)?;
                    state.best = Some((extraction.routes, extraction.terms));
                }
                *state.ub_trace.last_mut().unwrap() = state.ub;
                if state.gap() <= opts.gap_tol {
                    return Ok(state.report(method, it, started.elapsed()));
                }

                let lambda = read_copy_duals(&psp.varmap, &psp_sol.duals);
                let cut = if dual {
                    let lsp = build_lsp(inst, &lambda, &point)?;
                    let lsp_sol = solve_mip(&lsp.model, &opts.mip_limits)?;
                    if lsp_sol.status != MipStatus::Optimal {
                        return Err(DecompError::Internal(
                            "Lagrangian subproblem reported infeasible".into(),
                        ));
                    }
                    state.nodes += lsp_sol.node_count;
                    let outcome = SubproblemOutcome {
                        value: lsp.varmap.eta.iter().map(|&id| lsp_sol.x[id]).sum(),
                        copies: lsp.varmap.master_point(&lsp_sol.x),
                    };
                    let cut = make_optimality_cut(&outcome, &lambda, provenance);
                    let classic_rhs = second_stage - lambda.dot(&point);
                    state.rhs_gap_trace.push(cut.rhs - classic_rhs);
                    if opts.compute_xi {
                        let relaxed = solve_lp(&lsp.model)?;
                        if relaxed.status != LpStatus::Optimal {
                            return Err(DecompError::Internal(
                                "relaxed Lagrangian subproblem not optimal".into(),
                            ));
                        }
                        state.xi_trace.push(lsp_sol.objective - relaxed.objective);
                    }
                    cut
                } else {
                    let outcome = SubproblemOutcome { value: second_stage, copies: point.clone() };
                    make_optimality_cut(&outcome, &lambda, provenance)
                };
                if !state.push_cut(cut)? {
                    // A repeated optimality cut means theta already carries the
                    // second-stage price of this point, so the bound matches
                    // the incumbent; fail loudly if that arithmetic is off.
                    return if state.gap() <= opts.gap_tol * 10.0 {
                        Ok(state.report(method, it, started.elapsed()))
                    } else {
                        Err(DecompError::Internal(format!(
                            "optimality cut repeated at gap {:.3e}",
                            state.gap()
                        )))
                    };
                }
            }
            LpStatus::Infeasible => {
                let cut =
                    match feasibility_cut_at(inst, &point, provenance, dual, &opts.mip_limits)? {
                        CutOutcome::Feasibility { cut } => cut,
                        CutOutcome::Optimality { .. } => {
                            return Err(DecompError::Internal(
                                "feasibility path produced an optimality cut".into(),
                            ))
                        }
                    };
                if !state.push_cut(cut)? {
                    return Err(DecompError::Internal("feasibility cut repeated".into()));
                }
            }
            LpStatus::Unbounded => {
                return Err(DecompError::Internal("pinned subproblem cannot be unbounded".into()))
            }
        }
    }

    let report = state.report(method, opts.max_iters, started.elapsed());
    Err(DecompError::LimitReached { gap: report.final_gap(), report: Box::new(report) })
}

/// Classic cut at a (possibly fractional) master point: optimality cut from
/// the pinned subproblem's duals when feasible, else a feasibility cut from
/// the pinned slack subproblem's duals.
fn classic_cut_at(
    inst: &Instance,
    point: &MasterPoint,
    provenance: CutProvenance,
) -> Result<CutOutcome, DecompError> {
    let psp = build_psp(inst, point)?;
    let sol = solve_lp(&psp.model)?;
    match sol.status {
        LpStatus::Optimal => {
            let lambda = read_copy_duals(&psp.varmap, &sol.duals);
            let outcome = SubproblemOutcome { value: sol.objective, copies: point.clone() };
            Ok(CutOutcome::Optimality { cut: make_optimality_cut(&outcome, &lambda, provenance) })
        }
        LpStatus::Infeasible => {
            feasibility_cut_at(inst, point, provenance, false, &default_mip_limits())
        }
        LpStatus::Unbounded => {
            Err(DecompError::Internal("pinned subproblem cannot be unbounded".into()))
        }
    }
}

/// Feasibility cut machinery shared by both methods: solve the slack
/// subproblem pinned to the master point for its value and duals; the dual
/// method then re-optimizes over integer copies at those duals, falling back
/// to the classic cut if the integer solve parks its violation in the penalty
/// terms instead of the slacks.
fn feasibility_cut_at(
    inst: &Instance,
    point: &MasterPoint,
    provenance: CutProvenance,
    strengthen: bool,
    limits: &MipLimits,
) -> Result<CutOutcome, DecompError> {
    let zeros = Multipliers::zeros(inst);
    let fsp = build_fsp(inst, &zeros, point)?;
    let mut anchored = fsp.model.clone();
    let mut anchor_rows_x = Vec::with_capacity(fsp.varmap.x_copy.len());
    for (idx, &id) in fsp.varmap.x_copy.iter().enumerate() {
        let row = anchored
            .push_row(Row {
                name: format!("pinx{idx}"),
                coeffs: vec![(id, 1.0)],
                sense: Sense::Eq,
                rhs: point.x[idx],
            })
            .map_err(DecompError::Milp)?;
        anchor_rows_x.push(row);
    }
    let mut anchor_rows_omega = Vec::new();
    for (ci, ids) in fsp.varmap.omega_copy.iter().enumerate() {
        let mut per = Vec::with_capacity(ids.len());
        for (m, &id) in ids.iter().enumerate() {
            let row = anchored
                .push_row(Row {
                    name: format!("pinw{ci}_{m}"),
                    coeffs: vec![(id, 1.0)],
                    sense: Sense::Eq,
                    rhs: point.omega[ci][m],
                })
                .map_err(DecompError::Milp)?;
            per.push(row);
        }
        anchor_rows_omega.push(per);
    }
    let pinned = solve_lp(&anchored)?;
    if pinned.status != LpStatus::Optimal {
        return Err(DecompError::Internal("pinned slack subproblem must be feasible".into()));
    }
    if pinned.objective <= 1e-9 {
        return Err(DecompError::NotACut);
    }
    let lambda = Multipliers {
        lambda_x: anchor_rows_x.iter().map(|&r| pinned.duals[r]).collect(),
        lambda_omega: anchor_rows_omega
            .iter()
            .map(|rows| rows.iter().map(|&r| pinned.duals[r]).collect())
            .collect(),
    };

    if strengthen {
        let penalized = build_fsp(inst, &lambda, point)?;
        let integer = solve_mip(&penalized.model, limits)?;
        if integer.status != MipStatus::Optimal {
            return Err(DecompError::Internal("slack subproblem reported infeasible".into()));
        }
        let slacks = penalized
            .varmap
            .slacks
            .as_ref()
            .ok_or_else(|| DecompError::Internal("slack subproblem lost its slacks".into()))?;
        let outcome = SubproblemOutcome {
            value: slacks.total(&integer.x),
            copies: penalized.varmap.master_point(&integer.x),
        };
        match make_feasibility_cut(&outcome, &lambda, provenance) {
            Ok(cut) => return Ok(CutOutcome::Feasibility { cut }),
            Err(DecompError::NotACut) => {} // fall through to the classic cut
            Err(e) => return Err(e),
        }
    }
    let outcome = SubproblemOutcome { value: pinned.objective, copies: point.clone() };
    let cut = make_feasibility_cut(&outcome, &lambda, provenance)?;
    Ok(CutOutcome::Feasibility { cut })
}

fn read_copy_duals(vm: &VarMap, duals: &[f64]) -> Multipliers {
    Multipliers {
        lambda_x: vm.copy_rows_x.iter().map(|&r| duals[r]).collect(),
        lambda_omega: vm
            .copy_rows_omega
            .iter()
            .map(|rows| rows.iter().map(|&r| duals[r]).collect())
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulations::test_fixtures::{tri_node, tri_node_optimum};
    use crate::model::{build_instance, CostParams, Node, NodeKind};

    #[test]
    fn gbd_matches_monolithic_on_tri_node() {
        let inst = tri_node();
        let report = run_gbd(&inst, &RunOpts::default()).unwrap();
        assert!(
            (report.objective - tri_node_optimum()).abs()
                <= 1e-4 * (1.0 + tri_node_optimum().abs()),
            "gbd {} vs {}",
            report.objective,
            tri_node_optimum()
        );
        assert!(report.lb_trace.windows(2).all(|w| w[0] <= w[1] + 1e-9));
        assert!(report.ub_trace.windows(2).all(|w| w[0] >= w[1] - 1e-9));
    }

    #[test]
    fn bdd_matches_monolithic_on_tri_node() {
        let inst = tri_node();
        let opts = RunOpts { compute_xi: true, ..RunOpts::default() };
        let report = run_bdd(&inst, &opts).unwrap();
        assert!(
            (report.objective - tri_node_optimum()).abs()
                <= 1e-4 * (1.0 + tri_node_optimum().abs()),
            "bdd {} vs {}",
            report.objective,
            tri_node_optimum()
        );
        for (i, &xi) in report.xi_trace.iter().enumerate() {
            assert!(xi >= -1e-6, "xi[{i}] = {xi}");
            let gap = report.rhs_gap_trace[i];
            assert!((gap - xi).abs() <= 1e-6 * (1.0 + xi.abs()), "rhs gap {gap} vs xi {xi}");
        }
    }

    #[test]
    fn every_cut_is_satisfied_by_the_monolithic_optimum() {
        let inst = tri_node();
        let p2 = build_p2(&inst).unwrap();
        let p2_sol = solve_mip(&p2.model, &default_mip_limits()).unwrap();
        let point = p2.varmap.master_point(&p2_sol.x);
        let first_stage = p2.first_stage_cost(&inst, &point);
        let theta = p2_sol.objective - first_stage;

        for report in [
            run_gbd(&inst, &RunOpts::default()).unwrap(),
            run_bdd(&inst, &RunOpts::default()).unwrap(),
        ] {
            for (idx, cut) in report.cuts.iter().enumerate() {
                let slack = cut.slack_at(theta, &point);
                assert!(
                    slack >= -1e-6,
                    "{:?} cut {idx} ({:?}) violated by {slack}",
                    report.method,
                    cut.provenance
                );
            }
        }
    }

    #[test]
    fn no_cut_is_emitted_twice() {
        let inst = tri_node();
        for report in [
            run_gbd(&inst, &RunOpts::default()).unwrap(),
            run_bdd(&inst, &RunOpts::default()).unwrap(),
        ] {
            for a in 0..report.cuts.len() {
                for b in (a + 1)..report.cuts.len() {
                    assert!(
                        !report.cuts[a].same_inequality(&report.cuts[b]),
                        "cuts {a} and {b} identical in {:?}",
                        report.method
                    );
                }
            }
        }
    }

    #[test]
    fn zero_customers_converges_immediately() {
        let nodes = vec![
            Node { id: 0, x: 0.0, y: 0.0, kind: NodeKind::StartDepot },
            Node { id: 1, x: 0.0, y: 0.0, kind: NodeKind::EndDepot },
        ];
        let inst = build_instance(
            nodes,
            2,
            vec![],
            vec![],
            CostParams { speed: 1.0, ..Default::default() },
        )
        .unwrap();
        let report = run_gbd(&inst, &RunOpts::default()).unwrap();
        assert!(report.objective.abs() < 1e-9, "idle fleet costs nothing, got {}", report.objective);
        assert!(report.iterations <= 1, "took {} iterations", report.iterations);
    }

    #[test]
    fn xi_vanishes_at_integer_anchors() {
        let inst = tri_node();
        let p2 = build_p2(&inst).unwrap();
        let p2_sol = solve_mip(&p2.model, &default_mip_limits()).unwrap();
        let point = p2.varmap.master_point(&p2_sol.x);
        let psp = build_psp(&inst, &point).unwrap();
        let psp_sol = solve_lp(&psp.model).unwrap();
        assert_eq!(psp_sol.status, LpStatus::Optimal);
        let lambda = read_copy_duals(&psp.varmap, &psp_sol.duals);
        let xi = compute_xi(&inst, &lambda, &point, &default_mip_limits()).unwrap();
        assert!(xi >= -1e-6, "xi = {xi}");
        assert!(xi <= 1e-6, "integer anchors close the integrality gap, xi = {xi}");
    }

    #[test]
    fn monolithic_driver_reports_routes() {
        let inst = tri_node();
        let report = solve_monolithic(&inst, &RunOpts::default()).unwrap();
        assert_eq!(report.routes[0].nodes, vec![0, 1, 2, 3]);
        assert_eq!(report.served_count(), 2);
        assert!(report.discount_spend() > 0.0);
    }
}
