//! Model builders: one shared variable/row layout instantiated six ways.
//!
//! * `build_p2` — the full single-level MIP (routing + KKT + discount cost).
//! * `build_mp` — the Benders master: routing and complementarity binaries,
//!   an epigraph variable for the second-stage cost, and whatever cuts get
//!   appended later.
//! * `build_psp` — the continuous subproblem with copied master variables
//!   pinned by equality rows whose duals drive the cuts.
//! * `build_lsp` — the Lagrangian subproblem: copy rows dropped, penalties in
//!   the objective, copies integer.
//! * `build_fsp` — the feasibility subproblem: every constraint family
//!   carries a nonnegative slack, total slack plus penalties is minimized.
//! * `build_vrp_baseline` — routing with rigid service times and no discounts.
//!
//! Builders are pure functions of the instance; anything solution-shaped
//! travels through `MasterPoint` and `Multipliers`.

use crate::lower_level::PwlInconvenience;
use crate::milp::{LinearModel, Row, Sense};
use crate::model::{validate_instance, Instance};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("model error: {0}")]
    Model(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("internal error: {0}")]
    Internal(String),
}

/// Big-M constants derived per instance. The time constant bounds every
/// feasible service time; the complementarity constants dominate the widest
/// flexibility and the largest reachable dual value; the discount constant
/// dominates the discount-cost expression of any served customer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BigM {
    /// Hours.
    pub m_time: f64,
    /// Hours.
    pub m_comp_delta: f64,
    /// Dollars per hour.
    pub m_comp_dual: f64,
    /// Dollars.
    pub m_eta: f64,
}

impl BigM {
    pub fn for_instance(inst: &Instance) -> Self {
        let max_t = inst.travel_time.max_entry();
        let db = inst.max_delta_bar();
        let m_time = inst.max_tau() + db + max_t;
        let m_comp_dual = inst
            .inconvenience
            .iter()
            .map(|f| inst.params.q_max + f.max_abs_slope() + 1.0)
            .fold(0.0, f64::max);
        let m_eta = inst
            .inconvenience
            .iter()
            .map(|f| eta_bound(f, inst.params.q_max))
            .fold(0.0, f64::max);
        BigM { m_time, m_comp_delta: db, m_comp_dual, m_eta }
    }
}

/// Upper bound on the dual variables u, sigma of one customer.
fn dual_bound(func: &PwlInconvenience, q_max: f64) -> f64 {
    q_max + func.max_abs_slope() + 1.0
}

/// Largest value the epigraph variable can take on the feasible domain; the
/// maximum of a convex function over an interval sits at an endpoint.
fn z_max(func: &PwlInconvenience) -> f64 {
    func.eval(0.0).max(func.eval(func.delta_bar()))
}

/// Upper bound on the linearized discount cost of one served customer.
fn eta_bound(func: &PwlInconvenience, q_max: f64) -> f64 {
    z_max(func) + dual_bound(func, q_max) * func.delta_bar() + func.max_abs_intercept()
}

/// Complementarity binaries per customer: the two bound indicators plus one
/// activity indicator per inconvenience segment.
pub fn n_omega(func: &PwlInconvenience) -> usize {
    2 + func.n_segments()
}

/// Maps every model symbol to its variable id. Unused groups are empty in
/// modes that do not create them (the master has no service times, the
/// subproblems route through copies).
#[derive(Debug, Clone, Default)]
pub struct VarMap {
    pub n_nodes: usize,
    pub n_vehicles: usize,
    /// Customer node ids in increasing order.
    pub customers: Vec<usize>,
    /// Dense `[k][i][j]` routing ids; see `x_index`.
    pub x: Vec<usize>,
    /// Service time per node id; the start depot departs at zero and has none.
    pub t: Vec<Option<usize>>,
    pub q: Vec<usize>,
    pub delta: Vec<usize>,
    pub z: Vec<usize>,
    pub u: Vec<usize>,
    pub sigma: Vec<usize>,
    pub eta: Vec<usize>,
    pub mu: Vec<Vec<usize>>,
    pub omega: Vec<Vec<usize>>,
    pub theta: Option<usize>,
    pub x_copy: Vec<usize>,
    pub omega_copy: Vec<Vec<usize>>,
    /// Row ids of the copy equalities, aligned with `x_copy` / `omega_copy`.
    pub copy_rows_x: Vec<usize>,
    pub copy_rows_omega: Vec<Vec<usize>>,
    pub slacks: Option<FspSlacks>,
}

impl VarMap {
    #[inline]
    pub fn x_index(&self, k: usize, i: usize, j: usize) -> usize {
        (k * self.n_nodes + i) * self.n_nodes + j
    }

    pub fn n_arcs_dense(&self) -> usize {
        self.n_vehicles * self.n_nodes * self.n_nodes
    }

    /// Routing variable ids: native x in master-style models, copies in
    /// subproblems.
    pub fn routing_ids(&self) -> &[usize] {
        if self.x.is_empty() {
            &self.x_copy
        } else {
            &self.x
        }
    }

    pub fn omega_ids(&self) -> &[Vec<usize>] {
        if self.omega.is_empty() {
            &self.omega_copy
        } else {
            &self.omega
        }
    }

    /// Reads the (x, omega) part of a solution vector.
    pub fn master_point(&self, x_values: &[f64]) -> MasterPoint {
        let x = self.routing_ids().iter().map(|&id| x_values[id]).collect();
        let omega = self
            .omega_ids()
            .iter()
            .map(|ids| ids.iter().map(|&id| x_values[id]).collect())
            .collect();
        MasterPoint { x, omega }
    }
}

/// A point in master-variable space: dense routing values and the
/// complementarity binaries per customer.
#[derive(Debug, Clone, PartialEq)]
pub struct MasterPoint {
    pub x: Vec<f64>,
    pub omega: Vec<Vec<f64>>,
}

impl MasterPoint {
    fn check_shape(&self, n_arcs_dense: usize) -> Result<(), BuildError> {
        if self.x.len() != n_arcs_dense {
            return Err(BuildError::Shape(format!(
                "routing point has {} entries, expected {n_arcs_dense}",
                self.x.len()
            )));
        }
        Ok(())
    }
}

/// Dual multipliers of the copy rows, shaped exactly like a `MasterPoint`.
#[derive(Debug, Clone, PartialEq)]
pub struct Multipliers {
    pub lambda_x: Vec<f64>,
    pub lambda_omega: Vec<Vec<f64>>,
}

impl Multipliers {
    pub fn zeros(inst: &Instance) -> Self {
        let n = inst.n_nodes();
        Self {
            lambda_x: vec![0.0; inst.vehicles * n * n],
            lambda_omega: inst.inconvenience.iter().map(|f| vec![0.0; n_omega(f)]).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.lambda_x.iter().all(|v| v.is_finite())
            && self.lambda_omega.iter().flatten().all(|v| v.is_finite())
    }

    /// lambda . point, the constant the penalty terms contribute.
    pub fn dot(&self, point: &MasterPoint) -> f64 {
        let xs: f64 = self.lambda_x.iter().zip(&point.x).map(|(l, v)| l * v).sum();
        let os: f64 = self
            .lambda_omega
            .iter()
            .zip(&point.omega)
            .flat_map(|(ls, vs)| ls.iter().zip(vs))
            .map(|(l, v)| l * v)
            .sum();
        xs + os
    }
}

/// Slack variable ids of the feasibility subproblem, grouped by the
/// constraint family they relax.
#[derive(Debug, Clone, Default)]
pub struct FspSlacks {
    pub time: Vec<usize>,
    pub window_lower: Vec<usize>,
    pub window_upper: Vec<usize>,
    pub stationarity_lo: Vec<usize>,
    pub stationarity_hi: Vec<usize>,
    pub delta_cap_lo: Vec<usize>,
    pub delta_cap_hi: Vec<usize>,
    pub u_sign: Vec<usize>,
    pub u_cap: Vec<usize>,
    pub delta_sign: Vec<usize>,
    pub delta_ind: Vec<usize>,
    pub sigma_sign: Vec<usize>,
    pub sigma_cap: Vec<usize>,
    pub eta_link: Vec<usize>,
    pub flow_le: Vec<usize>,
    pub flow_ge: Vec<usize>,
    pub visit: Vec<usize>,
    pub mu_indicator: Vec<usize>,
    pub segment_gap: Vec<usize>,
}

impl FspSlacks {
    pub fn all(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for group in [
            &self.time,
            &self.window_lower,
            &self.window_upper,
            &self.stationarity_lo,
            &self.stationarity_hi,
            &self.delta_cap_lo,
            &self.delta_cap_hi,
            &self.u_sign,
            &self.u_cap,
            &self.delta_sign,
            &self.delta_ind,
            &self.sigma_sign,
            &self.sigma_cap,
            &self.eta_link,
            &self.flow_le,
            &self.flow_ge,
            &self.visit,
            &self.mu_indicator,
            &self.segment_gap,
        ] {
            out.extend_from_slice(group);
        }
        out
    }

    pub fn total(&self, x: &[f64]) -> f64 {
        self.all().iter().map(|&id| x[id]).sum()
    }
}

/// A built model together with its symbol table.
#[derive(Debug, Clone)]
pub struct Formulation {
    pub model: LinearModel,
    pub varmap: VarMap,
}

impl Formulation {
    /// First-stage (routing) cost of a master point.
    pub fn first_stage_cost(&self, inst: &Instance, point: &MasterPoint) -> f64 {
        let n = inst.n_nodes();
        let mut acc = 0.0;
        for k in 0..inst.vehicles {
            for i in 0..n {
                for j in 0..n {
                    if inst.arc_allowed(i, j) {
                        acc += inst.arc_cost(i, j) * point.x[self.varmap.x_index(k, i, j)];
                    }
                }
            }
        }
        acc
    }
}

#[derive(Clone, Copy)]
enum Mode<'a> {
    Monolithic,
    Master,
    Vrp,
    Psp { point: &'a MasterPoint },
    Lsp { lambda: &'a Multipliers, point: &'a MasterPoint },
    Fsp { lambda: &'a Multipliers, point: &'a MasterPoint },
}

impl Mode<'_> {
    fn has_second_stage(&self) -> bool {
        !matches!(self, Mode::Master | Mode::Vrp)
    }

    fn uses_copies(&self) -> bool {
        matches!(self, Mode::Psp { .. } | Mode::Lsp { .. } | Mode::Fsp { .. })
    }

    fn copies_integer(&self) -> bool {
        matches!(self, Mode::Lsp { .. } | Mode::Fsp { .. })
    }

    fn with_slacks(&self) -> bool {
        matches!(self, Mode::Fsp { .. })
    }
}

pub fn build_p2(inst: &Instance) -> Result<Formulation, BuildError> {
    build(inst, Mode::Monolithic)
}

pub fn build_mp(inst: &Instance) -> Result<Formulation, BuildError> {
    build(inst, Mode::Master)
}

pub fn build_psp(inst: &Instance, point: &MasterPoint) -> Result<Formulation, BuildError> {
    build(inst, Mode::Psp { point })
}

pub fn build_lsp(
    inst: &Instance,
    lambda: &Multipliers,
    point: &MasterPoint,
) -> Result<Formulation, BuildError> {
    build(inst, Mode::Lsp { lambda, point })
}

pub fn build_fsp(
    inst: &Instance,
    lambda: &Multipliers,
    point: &MasterPoint,
) -> Result<Formulation, BuildError> {
    build(inst, Mode::Fsp { lambda, point })
}

pub fn build_vrp_baseline(inst: &Instance) -> Result<Formulation, BuildError> {
    build(inst, Mode::Vrp)
}

fn build(inst: &Instance, mode: Mode) -> Result<Formulation, BuildError> {
    let violations = validate_instance(inst);
    if !violations.is_empty() {
        let msgs: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(BuildError::Model(msgs.join("; ")));
    }
    if let Mode::Psp { point } | Mode::Lsp { point, .. } | Mode::Fsp { point, .. } = mode {
        point.check_shape(inst.vehicles * inst.n_nodes() * inst.n_nodes())?;
        for (idx, func) in inst.inconvenience.iter().enumerate() {
            let expect = n_omega(func);
            let got = point.omega.get(idx).map_or(0, Vec::len);
            if got != expect {
                return Err(BuildError::Shape(format!(
                    "omega point for customer {idx} has {got} entries, expected {expect}"
                )));
            }
        }
    }
    if let Mode::Lsp { lambda, .. } | Mode::Fsp { lambda, .. } = mode {
        if lambda.lambda_x.len() != inst.vehicles * inst.n_nodes() * inst.n_nodes() {
            return Err(BuildError::Shape("lambda_x sized differently from copy rows".into()));
        }
        if !lambda.is_finite() {
            return Err(BuildError::Shape("multipliers must be finite".into()));
        }
    }

    let mut b = Builder::new(inst, mode);
    b.add_variables();
    b.add_rows()?;
    b.set_objective();
    b.fm.model.validate().map_err(|e| BuildError::Model(e.to_string()))?;
    Ok(b.fm)
}

struct Builder<'a> {
    inst: &'a Instance,
    mode: Mode<'a>,
    bigm: BigM,
    v1: usize,
    vn: usize,
    fm: Formulation,
}

impl<'a> Builder<'a> {
    fn new(inst: &'a Instance, mode: Mode<'a>) -> Self {
        let varmap = VarMap {
            n_nodes: inst.n_nodes(),
            n_vehicles: inst.vehicles,
            customers: inst.customer_ids(),
            ..VarMap::default()
        };
        Self {
            inst,
            mode,
            bigm: BigM::for_instance(inst),
            v1: inst.start_depot(),
            vn: inst.end_depot(),
            fm: Formulation { model: LinearModel::new(), varmap },
        }
    }

    /// Tight valid constant for one time-propagation row: largest possible
    /// `t_i + T_ij - t_j` over the feasible box, capped by the global bound.
    fn arc_time_m(&self, i: usize, j: usize) -> f64 {
        let t_hi_i = if i == self.v1 {
            0.0
        } else {
            match self.inst.customer_index(i) {
                Some(ci) => self.inst.tau[ci] + self.inst.inconvenience[ci].delta_bar(),
                None => self.bigm.m_time,
            }
        };
        let t_lo_j = match self.inst.customer_index(j) {
            Some(cj) => self.inst.tau[cj],
            None => 0.0,
        };
        (t_hi_i + self.inst.travel(i, j) - t_lo_j).clamp(0.0, self.bigm.m_time)
    }

    fn add_variables(&mut self) {
        let inst = self.inst;
        let n = inst.n_nodes();
        let customers = self.fm.varmap.customers.clone();
        let model = &mut self.fm.model;

        // routing: dense over all (k, i, j), banned arcs pinned to zero
        let routing_binary = matches!(self.mode, Mode::Monolithic | Mode::Master | Mode::Vrp);
        let copies = self.mode.uses_copies();
        let copies_integer = self.mode.copies_integer();
        let mut routing_ids = Vec::with_capacity(inst.vehicles * n * n);
        for k in 0..inst.vehicles {
            for i in 0..n {
                for j in 0..n {
                    let hi = if inst.arc_allowed(i, j) { 1.0 } else { 0.0 };
                    let name = if copies {
                        format!("X_{i}_{j}_{k}")
                    } else {
                        format!("x_{i}_{j}_{k}")
                    };
                    let id = model.add_var(name, 0.0, hi, routing_binary || copies_integer);
                    routing_ids.push(id);
                }
            }
        }
        if copies {
            self.fm.varmap.x_copy = routing_ids;
        } else {
            self.fm.varmap.x = routing_ids;
        }

        // omega: the master and monolithic models own them; subproblems copy them
        if !matches!(self.mode, Mode::Vrp) {
            let mut omega = Vec::with_capacity(customers.len());
            for (ci, &cust) in customers.iter().enumerate() {
                let labels = omega_labels(&inst.inconvenience[ci]);
                let ids: Vec<usize> = labels
                    .iter()
                    .map(|lab| {
                        let name = if copies {
                            format!("W_{lab}_{cust}")
                        } else {
                            format!("w_{lab}_{cust}")
                        };
                        model.add_var(name, 0.0, 1.0, routing_binary || copies_integer)
                    })
                    .collect();
                omega.push(ids);
            }
            if copies {
                self.fm.varmap.omega_copy = omega;
            } else {
                self.fm.varmap.omega = omega;
            }
        }

        if matches!(self.mode, Mode::Master) {
            self.fm.varmap.theta = Some(model.add_var("theta", 0.0, f64::INFINITY, false));
        }

        // service times for everything but the start depot
        if self.mode.has_second_stage() || matches!(self.mode, Mode::Vrp) {
            let mut t = vec![None; n];
            for (node, slot) in t.iter_mut().enumerate() {
                if node != self.v1 {
                    *slot = Some(model.add_var(format!("t_{node}"), 0.0, self.bigm.m_time, false));
                }
            }
            self.fm.varmap.t = t;
        }

        // customer-side block
        if self.mode.has_second_stage() {
            let q_max = inst.params.q_max;
            for (ci, &cust) in customers.iter().enumerate() {
                let func = &inst.inconvenience[ci];
                let db = func.delta_bar();
                let z_lo = -(func.max_abs_slope() * db + func.max_abs_intercept()) - 1.0;
                let q = model.add_var(format!("q_{cust}"), 0.0, q_max, false);
                let delta = model.add_var(format!("d_{cust}"), 0.0, db, false);
                let zv = model.add_var(format!("z_{cust}"), z_lo, z_max(func) + 1.0, false);
                let u = model.add_var(format!("u_{cust}"), 0.0, dual_bound(func, q_max), false);
                let sigma = model.add_var(format!("s_{cust}"), 0.0, dual_bound(func, q_max), false);
                let eta = model.add_var(format!("e_{cust}"), 0.0, eta_bound(func, q_max), false);
                let vm = &mut self.fm.varmap;
                vm.q.push(q);
                vm.delta.push(delta);
                vm.z.push(zv);
                vm.u.push(u);
                vm.sigma.push(sigma);
                vm.eta.push(eta);
            }
            for (ci, &cust) in customers.iter().enumerate() {
                let ids: Vec<usize> = (0..inst.inconvenience[ci].n_segments())
                    .map(|seg| model.add_var(format!("m_{cust}_{seg}"), 0.0, 1.0, false))
                    .collect();
                self.fm.varmap.mu.push(ids);
            }
        }
    }

    fn add_rows(&mut self) -> Result<(), BuildError> {
        if let Mode::Psp { point } = self.mode {
            self.add_copy_rows(point)?;
        }
        self.add_flow_rows()?;
        self.add_visit_rows()?;
        if self.mode.has_second_stage() || matches!(self.mode, Mode::Vrp) {
            self.add_time_rows()?;
            self.add_window_rows()?;
        }
        if self.mode.has_second_stage() {
            self.add_kkt_rows()?;
            self.add_eta_rows()?;
        }
        Ok(())
    }

    fn slack(&mut self, name: String) -> usize {
        self.fm.model.add_var(name, 0.0, f64::INFINITY, false)
    }

    fn push(
        &mut self,
        name: String,
        coeffs: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<usize, BuildError> {
        self.fm
            .model
            .push_row(Row { name, coeffs, sense, rhs })
            .map_err(|e| BuildError::Model(e.to_string()))
    }

    fn add_copy_rows(&mut self, point: &MasterPoint) -> Result<(), BuildError> {
        let n = self.inst.n_nodes();
        let vm_x: Vec<usize> = self.fm.varmap.x_copy.clone();
        let mut rows_x = Vec::with_capacity(vm_x.len());
        for k in 0..self.inst.vehicles {
            for i in 0..n {
                for j in 0..n {
                    let idx = (k * n + i) * n + j;
                    let row = self.push(
                        format!("pinx_{i}_{j}_{k}"),
                        vec![(vm_x[idx], 1.0)],
                        Sense::Eq,
                        point.x[idx],
                    )?;
                    rows_x.push(row);
                }
            }
        }
        self.fm.varmap.copy_rows_x = rows_x;

        let omega_copy = self.fm.varmap.omega_copy.clone();
        let mut rows_o = Vec::new();
        for (ci, ids) in omega_copy.iter().enumerate() {
            let mut per = Vec::with_capacity(ids.len());
            for (m, &id) in ids.iter().enumerate() {
                let row = self.push(
                    format!("pinw_{ci}_{m}"),
                    vec![(id, 1.0)],
                    Sense::Eq,
                    point.omega[ci][m],
                )?;
                per.push(row);
            }
            rows_o.push(per);
        }
        self.fm.varmap.copy_rows_omega = rows_o;
        Ok(())
    }

    fn add_flow_rows(&mut self) -> Result<(), BuildError> {
        let inst = self.inst;
        let n = inst.n_nodes();
        for k in 0..inst.vehicles {
            for i in 0..n {
                let mut coeffs = Vec::new();
                for j in 0..n {
                    if inst.arc_allowed(i, j) {
                        coeffs.push((self.routing_id(k, i, j), 1.0));
                    }
                    if inst.arc_allowed(j, i) {
                        coeffs.push((self.routing_id(k, j, i), -1.0));
                    }
                }
                let b = if i == self.v1 {
                    1.0
                } else if i == self.vn {
                    -1.0
                } else {
                    0.0
                };
                if self.mode.with_slacks() {
                    // out - in <= b + S15 ; b <= out - in + S16
                    let s15 = self.slack(format!("S15_{i}_{k}"));
                    let s16 = self.slack(format!("S16_{i}_{k}"));
                    let mut le = coeffs.clone();
                    le.push((s15, -1.0));
                    self.push(format!("flowle_{i}_{k}"), le, Sense::Le, b)?;
                    let mut ge = coeffs;
                    ge.push((s16, 1.0));
                    self.push(format!("flowge_{i}_{k}"), ge, Sense::Ge, b)?;
                    let slacks = self.fm.varmap.slacks.get_or_insert_with(FspSlacks::default);
                    slacks.flow_le.push(s15);
                    slacks.flow_ge.push(s16);
                } else {
                    self.push(format!("flow_{i}_{k}"), coeffs, Sense::Eq, b)?;
                }
            }
        }
        Ok(())
    }

    fn add_visit_rows(&mut self) -> Result<(), BuildError> {
        let inst = self.inst;
        let n = inst.n_nodes();
        let customers = self.fm.varmap.customers.clone();
        for &cust in &customers {
            let mut coeffs = Vec::new();
            for k in 0..inst.vehicles {
                for j in 0..n {
                    if inst.arc_allowed(cust, j) {
                        coeffs.push((self.routing_id(k, cust, j), 1.0));
                    }
                }
            }
            if self.mode.with_slacks() {
                let s17 = self.slack(format!("S17_{cust}"));
                coeffs.push((s17, -1.0));
                self.push(format!("visit_{cust}"), coeffs, Sense::Le, 1.0)?;
                self.fm.varmap.slacks.get_or_insert_with(FspSlacks::default).visit.push(s17);
            } else {
                self.push(format!("visit_{cust}"), coeffs, Sense::Le, 1.0)?;
            }
        }
        Ok(())
    }

    fn add_time_rows(&mut self) -> Result<(), BuildError> {
        let inst = self.inst;
        let n = inst.n_nodes();
        for k in 0..inst.vehicles {
            for i in 0..n {
								if i == self.vn {
                    continue;
                }
                for j in 0..n {
                    if j == self.v1 || !inst.arc_allowed(i, j) {
                        continue;
                    }
                    // t_j >= t_i + T_ij - M (1 - x^k_ij)
                    let m = self.arc_time_m(i, j);
                    let mut coeffs = vec![(self.fm.varmap.t[j].unwrap(), 1.0)];
                    if let Some(ti) = self.fm.varmap.t[i] {
                        coeffs.push((ti, -1.0));
                    }
                    coeffs.push((self.routing_id(k, i, j), -m));
                    if self.mode.with_slacks() {
                        let s1 = self.slack(format!("S1_{i}_{j}_{k}"));
                        coeffs.push((s1, 1.0));
                        self.fm.varmap.slacks.get_or_insert_with(FspSlacks::default).time.push(s1);
                    }
                    self.push(
                        format!("time_{i}_{j}_{k}"),
                        coeffs,
                        Sense::Ge,
                        inst.travel(i, j) - m,
                    )?;
                }
            }
        }
        Ok(())
    }

    fn add_window_rows(&mut self) -> Result<(), BuildError> {
        let inst = self.inst;
        let vrp = matches!(self.mode, Mode::Vrp);
        let customers = self.fm.varmap.customers.clone();
        for (ci, &cust) in customers.iter().enumerate() {
            let t = self.fm.varmap.t[cust].unwrap();
            let tau = inst.tau[ci];
            let mut lo = vec![(t, 1.0)];
            if self.mode.with_slacks() {
                let s2 = self.slack(format!("S2_{cust}"));
                lo.push((s2, 1.0));
                self.fm.varmap.slacks.get_or_insert_with(FspSlacks::default).window_lower.push(s2);
            }
            self.push(format!("winlo_{cust}"), lo, Sense::Ge, tau)?;

            let mut hi = vec![(t, 1.0)];
            if !vrp {
                hi.push((self.fm.varmap.delta[ci], -1.0));
            }
            if self.mode.with_slacks() {
                let s3 = self.slack(format!("S3_{cust}"));
                hi.push((s3, -1.0));
                self.fm.varmap.slacks.get_or_insert_with(FspSlacks::default).window_upper.push(s3);
            }
            self.push(format!("winhi_{cust}"), hi, Sense::Le, tau)?;
        }
        Ok(())
    }

    fn add_kkt_rows(&mut self) -> Result<(), BuildError> {
        let inst = self.inst;
        let with_slacks = self.mode.with_slacks();
        let customers = self.fm.varmap.customers.clone();
        for (ci, &cust) in customers.iter().enumerate() {
            let func = inst.inconvenience[ci].clone();
            let db = func.delta_bar();
            let m_dual = dual_bound(&func, inst.params.q_max);
            let m_gap = eta_bound(&func, inst.params.q_max);
            let (q, delta, z, u, sigma, mu, omega) = {
                let vm = &self.fm.varmap;
                (
                    vm.q[ci],
                    vm.delta[ci],
                    vm.z[ci],
                    vm.u[ci],
                    vm.sigma[ci],
                    vm.mu[ci].clone(),
                    vm.omega_ids()[ci].clone(),
                )
            };
            let (w_cap, w_zero) = (omega[0], omega[1]);

            // stationarity: sum_n gamma_n mu_n - q - sigma + u = 0
            let mut stat: Vec<(usize, f64)> = func
                .segments()
                .iter()
                .enumerate()
                .map(|(nseg, s)| (mu[nseg], s.slope))
                .collect();
            stat.extend([(q, -1.0), (sigma, -1.0), (u, 1.0)]);
            if with_slacks {
                let s4 = self.slack(format!("S4_{cust}"));
                let s5 = self.slack(format!("S5_{cust}"));
                let mut lo = stat.clone();
                lo.push((s4, 1.0));
                self.push(format!("statlo_{cust}"), lo, Sense::Ge, 0.0)?;
                let mut hi = stat;
                hi.push((s5, -1.0));
                self.push(format!("stathi_{cust}"), hi, Sense::Le, 0.0)?;
                let sl = self.fm.varmap.slacks.get_or_insert_with(FspSlacks::default);
                sl.stationarity_lo.push(s4);
                sl.stationarity_hi.push(s5);
            } else {
                self.push(format!("stat_{cust}"), stat, Sense::Eq, 0.0)?;
            }

            // convexity of mu
            let conv: Vec<(usize, f64)> = mu.iter().map(|&id| (id, 1.0)).collect();
            self.push(format!("musum_{cust}"), conv, Sense::Eq, 1.0)?;

            // epigraph rows: z >= slope * delta + intercept
            for (nseg, s) in func.segments().iter().enumerate() {
                self.push(
                    format!("epi_{cust}_{nseg}"),
                    vec![(z, 1.0), (delta, -s.slope)],
                    Sense::Ge,
                    s.intercept,
                )?;
            }

            // complementarity of u with the cap: delta_bar - delta <= db * w_cap
            let mut cap_ind = vec![(delta, 1.0), (w_cap, db)];
            if with_slacks {
                let s7 = self.slack(format!("S7_{cust}"));
                cap_ind.push((s7, 1.0));
                self.fm.varmap.slacks.get_or_insert_with(FspSlacks::default).delta_cap_hi.push(s7);
            }
            self.push(format!("compdcap_{cust}"), cap_ind, Sense::Ge, db)?;

            let mut u_ind = vec![(u, 1.0), (w_cap, m_dual)];
            if with_slacks {
                let s9 = self.slack(format!("S9_{cust}"));
                u_ind.push((s9, -1.0));
                self.fm.varmap.slacks.get_or_insert_with(FspSlacks::default).u_cap.push(s9);
            }
            self.push(format!("compu_{cust}"), u_ind, Sense::Le, m_dual)?;

            // complementarity of sigma with zero: delta <= db * w_zero
            let mut zero_ind = vec![(delta, 1.0), (w_zero, -db)];
            if with_slacks {
                let s11 = self.slack(format!("S11_{cust}"));
                zero_ind.push((s11, -1.0));
                self.fm.varmap.slacks.get_or_insert_with(FspSlacks::default).delta_ind.push(s11);
            }
            self.push(format!("compdzero_{cust}"), zero_ind, Sense::Le, 0.0)?;

            let mut sig_ind = vec![(sigma, 1.0), (w_zero, m_dual)];
            if with_slacks {
                let s13 = self.slack(format!("S13_{cust}"));
                sig_ind.push((s13, -1.0));
                self.fm.varmap.slacks.get_or_insert_with(FspSlacks::default).sigma_cap.push(s13);
            }
            self.push(format!("compsigma_{cust}"), sig_ind, Sense::Le, m_dual)?;

            // sign relaxations: inert next to the variable bounds, carried so
            // the slack inventory matches the subproblem family list
            if with_slacks {
                let s6 = self.slack(format!("S6_{cust}"));
                self.push(format!("dcap_{cust}"), vec![(delta, 1.0), (s6, -1.0)], Sense::Le, db)?;
                let s8 = self.slack(format!("S8_{cust}"));
                self.push(format!("usign_{cust}"), vec![(u, 1.0), (s8, 1.0)], Sense::Ge, 0.0)?;
                let s10 = self.slack(format!("S10_{cust}"));
                self.push(format!("dsign_{cust}"), vec![(delta, 1.0), (s10, 1.0)], Sense::Ge, 0.0)?;
                let s12 = self.slack(format!("S12_{cust}"));
                self.push(format!("ssign_{cust}"), vec![(sigma, 1.0), (s12, 1.0)], Sense::Ge, 0.0)?;
                let sl = self.fm.varmap.slacks.get_or_insert_with(FspSlacks::default);
                sl.delta_cap_lo.push(s6);
                sl.u_sign.push(s8);
                sl.delta_sign.push(s10);
                sl.sigma_sign.push(s12);
            }

            // segment activity: mu_n <= w_seg_n, and the active segment's gap
            // z - slope*delta - intercept is closed when w_seg_n = 1
            for (nseg, s) in func.segments().iter().enumerate() {
                let w_seg = omega[2 + nseg];
                let mut ind = vec![(mu[nseg], 1.0), (w_seg, -1.0)];
                if with_slacks {
                    let s18 = self.slack(format!("S18_{cust}_{nseg}"));
                    ind.push((s18, -1.0));
                    self.fm.varmap.slacks.get_or_insert_with(FspSlacks::default).mu_indicator.push(s18);
                }
                self.push(format!("muind_{cust}_{nseg}"), ind, Sense::Le, 0.0)?;

                let mut gap = vec![(z, 1.0), (delta, -s.slope), (w_seg, m_gap)];
                if with_slacks {
                    let s19 = self.slack(format!("S19_{cust}_{nseg}"));
                    gap.push((s19, -1.0));
                    self.fm.varmap.slacks.get_or_insert_with(FspSlacks::default).segment_gap.push(s19);
                }
                self.push(format!("seggap_{cust}_{nseg}"), gap, Sense::Le, m_gap + s.intercept)?;
            }
        }
        Ok(())
    }

    fn add_eta_rows(&mut self) -> Result<(), BuildError> {
        let inst = self.inst;
        let n = inst.n_nodes();
        let customers = self.fm.varmap.customers.clone();
        for (ci, &cust) in customers.iter().enumerate() {
            let func = &inst.inconvenience[ci];
            let m_eta = eta_bound(func, inst.params.q_max);
            // eta >= z + u*db - sum_n chi_n mu_n - M (1 - served)
            let mut coeffs = {
                let vm = &self.fm.varmap;
                let mut c = vec![
                    (vm.eta[ci], 1.0),
                    (vm.z[ci], -1.0),
                    (vm.u[ci], -func.delta_bar()),
                ];
                for (nseg, s) in func.segments().iter().enumerate() {
                    c.push((vm.mu[ci][nseg], s.intercept));
                }
                c
            };
            for k in 0..inst.vehicles {
                for i in 0..n {
                    if inst.arc_allowed(i, cust) {
                        coeffs.push((self.routing_id(k, i, cust), -m_eta));
                    }
                }
            }
            if self.mode.with_slacks() {
                let s14 = self.slack(format!("S14_{cust}"));
                coeffs.push((s14, 1.0));
                self.fm.varmap.slacks.get_or_insert_with(FspSlacks::default).eta_link.push(s14);
            }
            self.push(format!("etalink_{cust}"), coeffs, Sense::Ge, -m_eta)?;
        }
        Ok(())
    }

    fn set_objective(&mut self) {
        let inst = self.inst;
        let n = inst.n_nodes();
        let vm = &self.fm.varmap;
        let mut obj: Vec<(usize, f64)> = Vec::new();
        let mut offset = 0.0;

        match self.mode {
            Mode::Monolithic | Mode::Master | Mode::Vrp => {
                for k in 0..inst.vehicles {
                    for i in 0..n {
                        for j in 0..n {
                            if inst.arc_allowed(i, j) {
                                obj.push((vm.x[vm.x_index(k, i, j)], inst.arc_cost(i, j)));
                            }
                        }
                    }
                }
                match self.mode {
                    Mode::Monolithic => obj.extend(vm.eta.iter().map(|&id| (id, 1.0))),
                    Mode::Master => obj.push((vm.theta.unwrap(), 1.0)),
                    _ => {}
                }
            }
            Mode::Psp { .. } => {
                obj.extend(vm.eta.iter().map(|&id| (id, 1.0)));
            }
            Mode::Lsp { lambda, point } => {
                obj.extend(vm.eta.iter().map(|&id| (id, 1.0)));
                penalize(&mut obj, &mut offset, vm, lambda, point);
            }
            Mode::Fsp { lambda, point } => {
                if let Some(slacks) = &vm.slacks {
                    obj.extend(slacks.all().into_iter().map(|id| (id, 1.0)));
                }
                penalize(&mut obj, &mut offset, vm, lambda, point);
            }
        }
        self.fm.model.set_objective(obj, offset);
    }

    fn routing_id(&self, k: usize, i: usize, j: usize) -> usize {
        let vm = &self.fm.varmap;
        vm.routing_ids()[vm.x_index(k, i, j)]
    }
}

/// Adds `- lambda . (copies - anchor)` to the objective: coefficient
/// `-lambda` on every copy plus the constant `lambda . anchor`.
fn penalize(
    obj: &mut Vec<(usize, f64)>,
    offset: &mut f64,
    vm: &VarMap,
    lambda: &Multipliers,
    point: &MasterPoint,
) {
    for (idx, &id) in vm.x_copy.iter().enumerate() {
        let l = lambda.lambda_x[idx];
        if l != 0.0 {
            obj.push((id, -l));
        }
    }
    for (ci, ids) in vm.omega_copy.iter().enumerate() {
        for (m, &id) in ids.iter().enumerate() {
            let l = lambda.lambda_omega[ci][m];
            if l != 0.0 {
                obj.push((id, -l));
            }
        }
    }
    *offset += lambda.dot(point);
}

fn omega_labels(func: &PwlInconvenience) -> Vec<String> {
    let mut labels = vec!["cap".to_string(), "zero".to_string()];
    labels.extend((0..func.n_segments()).map(|nseg| format!("seg{nseg}")));
    labels
}

/// One vehicle's walk through the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub vehicle: usize,
    /// Node ids from start depot to end depot inclusive.
    pub nodes: Vec<usize>,
}

/// Second-stage values for one customer.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomerTerm {
    pub node: usize,
    pub served: bool,
    pub q: f64,
    pub delta: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteExtraction {
    pub routes: Vec<Route>,
    pub unserved: Vec<usize>,
    pub terms: Vec<CustomerTerm>,
}

impl RouteExtraction {
    pub fn served_count(&self) -> usize {
        self.terms.iter().filter(|t| t.served).count()
    }
}

/// Follows the unit arcs of an integral solution vehicle by vehicle. The
/// second-stage columns (q, delta, t) are read when the map carries them.
pub fn extract_routes(
    solution: &[f64],
    vm: &VarMap,
    inst: &Instance,
) -> Result<RouteExtraction, BuildError> {
    let n = inst.n_nodes();
    let v1 = inst.start_depot();
    let vn = inst.end_depot();
    let routing = vm.routing_ids();
    let arc_on = |k: usize, i: usize, j: usize| solution[routing[vm.x_index(k, i, j)]] > 0.5;

    let mut seen = vec![false; n];
    let mut routes = Vec::with_capacity(inst.vehicles);
    for k in 0..inst.vehicles {
        let mut nodes = vec![v1];
        let mut cur = v1;
        for _step in 0..=n {
            if cur == vn {
                break;
            }
            let nexts: Vec<usize> =
                (0..n).filter(|&j| inst.arc_allowed(cur, j) && arc_on(k, cur, j)).collect();
            match nexts.as_slice() {
                [next] => {
                    if *next != vn {
                        if seen[*next] {
                            return Err(BuildError::Internal(format!(
                                "node {next} visited twice; arcs {:?}",
                                active_arcs(solution, vm, inst)
                            )));
                        }
                        seen[*next] = true;
                    }
                    nodes.push(*next);
                    cur = *next;
                }
                [] => {
                    return Err(BuildError::Internal(format!(
                        "walk of vehicle {k} stalls at node {cur}; arcs {:?}",
                        active_arcs(solution, vm, inst)
                    )))
                }
                _ => {
                    return Err(BuildError::Internal(format!(
                        "vehicle {k} leaves node {cur} twice; arcs {:?}",
                        active_arcs(solution, vm, inst)
                    )))
                }
            }
        }
        if cur != vn {
            return Err(BuildError::Internal(format!(
                "vehicle {k} never reaches the end depot; arcs {:?}",
                active_arcs(solution, vm, inst)
            )));
        }
        routes.push(Route { vehicle: k, nodes });
    }

    let mut terms = Vec::new();
    let mut unserved = Vec::new();
    for (ci, &cust) in vm.customers.iter().enumerate() {
        let served = seen[cust];
        if !served {
            unserved.push(cust);
        }
        let read = |ids: &Vec<usize>| ids.get(ci).map_or(0.0, |&id| solution[id]);
        terms.push(CustomerTerm {
            node: cust,
            served,
            q: read(&vm.q),
            delta: read(&vm.delta),
            t: vm.t.get(cust).and_then(|o| o.map(|id| solution[id])).unwrap_or(0.0),
        });
    }
    Ok(RouteExtraction { routes, unserved, terms })
}

fn active_arcs(solution: &[f64], vm: &VarMap, inst: &Instance) -> Vec<(usize, usize, usize)> {
    let n = inst.n_nodes();
    let routing = vm.routing_ids();
    let mut arcs = Vec::new();
    for k in 0..inst.vehicles {
        for i in 0..n {
            for j in 0..n {
                if inst.arc_allowed(i, j) && solution[routing[vm.x_index(k, i, j)]] > 0.5 {
                    arcs.push((k, i, j));
                }
            }
        }
    }
    arcs
}

#[cfg(test)]
pub(crate) mod test_fixtures {
    use crate::lower_level::PwlInconvenience;
    use crate::model::{build_instance, CostParams, Instance, Node, NodeKind};

    pub fn table1() -> PwlInconvenience {
        PwlInconvenience::two_segment((0.5, -0.5), (-0.01, 0.01), 1.0).unwrap()
    }

    /// Depot at the origin (end colocated), customers at (0,1) and (1,0),
    /// unit speed, one vehicle. Serving both in order A then B needs
    /// sqrt(2) - 1 hours of flexibility from B.
    pub fn tri_node() -> Instance {
        let nodes = vec![
            Node { id: 0, x: 0.0, y: 0.0, kind: NodeKind::StartDepot },
            Node { id: 1, x: 0.0, y: 1.0, kind: NodeKind::Customer },
            Node { id: 2, x: 1.0, y: 0.0, kind: NodeKind::Customer },
            Node { id: 3, x: 0.0, y: 0.0, kind: NodeKind::EndDepot },
        ];
        let params = CostParams {
            gamma_time: 1.0,
            vehicle_cost: 1.0,
            fee: 5.0,
            speed: 1.0,
            q_max: 1.0,
            charge_idle_vehicles: false,
        };
        build_instance(nodes, 1, vec![1.0, 2.0], vec![table1(), table1()], params).unwrap()
    }

    /// Hand-enumerated optimum of `tri_node`: route depot -> A -> B -> end,
    /// paying q = 0.5 for B's slack of sqrt(2) - 1. Total
    /// travel (2 + sqrt 2) + vehicle 1 - fees 10 + discount 0.5 (sqrt 2 - 1).
    pub fn tri_node_optimum() -> f64 {
        -7.5 + 1.5 * 2.0_f64.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::test_fixtures::{table1, tri_node, tri_node_optimum};
    use super::*;
    use crate::milp::{default_mip_limits, solve_lp, solve_mip, LpStatus, MipStatus};

    #[test]
    fn p2_variable_count_two_customers() {
        let fm = build_p2(&tri_node()).unwrap();
        // 16 routing + 3 times + 12 customer-side + 4 mu + 8 omega
        assert_eq!(fm.model.n_vars(), 43);
        assert_eq!(fm.varmap.x.len(), 16);
        assert_eq!(fm.varmap.omega.iter().map(Vec::len).sum::<usize>(), 8);
    }

    #[test]
    fn p2_matches_hand_enumeration() {
        let inst = tri_node();
        let fm = build_p2(&inst).unwrap();
        let sol = solve_mip(&fm.model, &default_mip_limits()).unwrap();
        assert_eq!(sol.status, MipStatus::Optimal);
        assert!(
            (sol.objective - tri_node_optimum()).abs() < 1e-6,
            "got {}, expected {}",
            sol.objective,
            tri_node_optimum()
        );
        let routes = extract_routes(&sol.x, &fm.varmap, &inst).unwrap();
        assert_eq!(routes.routes[0].nodes, vec![0, 1, 2, 3]);
        let b = &routes.terms[1];
        assert!(b.served);
        assert!((b.q - 0.5).abs() < 1e-5, "q_B = {}", b.q);
        assert!(b.t >= 2.0 - 1e-9 && b.t <= 2.0 + b.delta + 1e-9);
    }

    #[test]
    fn p2_collapses_to_vrp_when_inflexible() {
        let mut inst = tri_node();
        inst.inconvenience =
            vec![PwlInconvenience::two_segment((0.5, -0.5), (-0.01, 0.01), 0.0).unwrap(); 2];
        let p2 = build_p2(&inst).unwrap();
        let p2_sol = solve_mip(&p2.model, &default_mip_limits()).unwrap();
        let vrp = build_vrp_baseline(&inst).unwrap();
        let vrp_sol = solve_mip(&vrp.model, &default_mip_limits()).unwrap();
        assert!((p2_sol.objective - vrp_sol.objective).abs() < 1e-6);
    }

    #[test]
    fn vrp_baseline_dominates_p2() {
        let inst = tri_node();
        let p2 = solve_mip(&build_p2(&inst).unwrap().model, &default_mip_limits()).unwrap();
        let vrp =
            solve_mip(&build_vrp_baseline(&inst).unwrap().model, &default_mip_limits()).unwrap();
        assert!(vrp.objective >= p2.objective - 1e-9);
        // without flexibility only one customer fits the single vehicle
        assert!((vrp.objective + 2.0).abs() < 1e-6, "vrp {}", vrp.objective);
    }

    #[test]
    fn mp_is_a_relaxation_with_one_theta() {
        let inst = tri_node();
        let mp = build_mp(&inst).unwrap();
        let theta = mp.varmap.theta.unwrap();
        let theta_terms: Vec<_> =
            mp.model.objective.iter().filter(|&&(j, _)| j == theta).collect();
        assert_eq!(theta_terms.len(), 1);
        assert_eq!(theta_terms[0].1, 1.0);
        let mp_sol = solve_mip(&mp.model, &default_mip_limits()).unwrap();
        let p2_sol = solve_mip(&build_p2(&inst).unwrap().model, &default_mip_limits()).unwrap();
        assert!(mp_sol.objective <= p2_sol.objective + 1e-9);
    }

    #[test]
    fn psp_at_the_optimum_prices_the_second_stage() {
        let inst = tri_node();
        let p2 = build_p2(&inst).unwrap();
        let p2_sol = solve_mip(&p2.model, &default_mip_limits()).unwrap();
        let point = p2.varmap.master_point(&p2_sol.x);
        let first_stage = p2.first_stage_cost(&inst, &point);
        let psp = build_psp(&inst, &point).unwrap();
        let sol = solve_lp(&psp.model).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(
            (sol.objective - (p2_sol.objective - first_stage)).abs() < 1e-6,
            "psp {} vs p2-minus-first-stage {}",
            sol.objective,
            p2_sol.objective - first_stage
        );
    }

    #[test]
    fn psp_infeasible_for_impossible_route() {
        let inst = tri_node();
        let fm = build_mp(&inst).unwrap();
        // Route depot -> B -> A -> end: A would be served at 2 + sqrt(2),
        // beyond tau_A + delta_bar = 2. Omegas consistent with interior delta.
        let mut x = vec![0.0; fm.varmap.n_arcs_dense()];
        for (i, j) in [(0, 2), (2, 1), (1, 3)] {
            x[fm.varmap.x_index(0, i, j)] = 1.0;
        }
        let omega = vec![vec![1.0, 1.0, 1.0, 0.0]; 2];
        let point = MasterPoint { x, omega };
        let psp = build_psp(&inst, &point).unwrap();
        assert_eq!(solve_lp(&psp.model).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn psp_infeasible_when_flow_unmet() {
        let inst = tri_node();
        let fm = build_mp(&inst).unwrap();
        let point = MasterPoint {
            x: vec![0.0; fm.varmap.n_arcs_dense()],
            omega: vec![vec![1.0, 1.0, 1.0, 0.0]; 2],
        };
        let psp = build_psp(&inst, &point).unwrap();
        assert_eq!(solve_lp(&psp.model).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn psp_shape_mismatch_rejected() {
        let inst = tri_node();
        let point = MasterPoint { x: vec![0.0; 3], omega: vec![] };
        assert!(matches!(build_psp(&inst, &point), Err(BuildError::Shape(_))));
    }

    #[test]
    fn lsp_with_zero_multipliers_is_anchor_free() {
        let inst = tri_node();
        let mp = build_mp(&inst).unwrap();
        let zeros = Multipliers::zeros(&inst);
        let idle = {
            let mut x = vec![0.0; mp.varmap.n_arcs_dense()];
            x[mp.varmap.x_index(0, 0, 3)] = 1.0;
            MasterPoint { x, omega: vec![vec![1.0, 1.0, 1.0, 0.0]; 2] }
        };
        let serve_a = {
            let mut x = vec![0.0; mp.varmap.n_arcs_dense()];
            x[mp.varmap.x_index(0, 0, 1)] = 1.0;
            x[mp.varmap.x_index(0, 1, 3)] = 1.0;
            MasterPoint { x, omega: vec![vec![1.0, 1.0, 1.0, 0.0]; 2] }
        };
        let a = solve_mip(&build_lsp(&inst, &zeros, &idle).unwrap().model, &default_mip_limits())
            .unwrap();
        let b =
            solve_mip(&build_lsp(&inst, &zeros, &serve_a).unwrap().model, &default_mip_limits())
                .unwrap();
        assert!((a.objective - b.objective).abs() < 1e-9);
        // a free second stage can always go idle at zero cost
        assert!(a.objective.abs() < 1e-9);
    }

    #[test]
    fn fsp_zero_slack_at_feasible_anchor() {
        let inst = tri_node();
        let p2 = build_p2(&inst).unwrap();
        let p2_sol = solve_mip(&p2.model, &default_mip_limits()).unwrap();
        let point = p2.varmap.master_point(&p2_sol.x);
        let zeros = Multipliers::zeros(&inst);
        let fsp = build_fsp(&inst, &zeros, &point).unwrap();
        let sol = solve_mip(&fsp.model, &default_mip_limits()).unwrap();
        assert_eq!(sol.status, MipStatus::Optimal);
        assert!(sol.objective.abs() < 1e-7, "free slack minimum is zero, got {}", sol.objective);
    }

    #[test]
    fn anchored_fsp_localizes_window_violation() {
        let inst = tri_node();
        let mp = build_mp(&inst).unwrap();
        let mut x = vec![0.0; mp.varmap.n_arcs_dense()];
        for (i, j) in [(0, 2), (2, 1), (1, 3)] {
            x[mp.varmap.x_index(0, i, j)] = 1.0;
        }
        let point = MasterPoint { x, omega: vec![vec![1.0, 1.0, 1.0, 0.0]; 2] };
        let zeros = Multipliers::zeros(&inst);
        let fsp = build_fsp(&inst, &zeros, &point).unwrap();
        // anchor the copies as the Benders loop does for the classic cut
        let mut anchored = fsp.model.clone();
        for (idx, &id) in fsp.varmap.x_copy.iter().enumerate() {
            anchored
                .push_row(Row {
                    name: format!("anchor_x{idx}"),
                    coeffs: vec![(id, 1.0)],
                    sense: Sense::Eq,
                    rhs: point.x[idx],
                })
                .unwrap();
        }
        for (ci, ids) in fsp.varmap.omega_copy.iter().enumerate() {
            for (m, &id) in ids.iter().enumerate() {
                anchored
                    .push_row(Row {
                        name: format!("anchor_w{ci}_{m}"),
                        coeffs: vec![(id, 1.0)],
                        sense: Sense::Eq,
                        rhs: point.omega[ci][m],
                    })
                    .unwrap();
            }
        }
        let sol = solve_lp(&anchored).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(sol.objective > 1e-6, "infeasible anchor must leave slack, got {}", sol.objective);
        let slacks = fsp.varmap.slacks.as_ref().unwrap();
        let windows: f64 = slacks
            .window_lower
            .iter()
            .chain(&slacks.window_upper)
            .chain(&slacks.time)
            .map(|&id| sol.x[id])
            .sum();
        assert!(
            windows >= sol.objective - 1e-6,
            "slack should sit on the timing rows: windows {windows} of total {}",
            sol.objective
        );
    }

    #[test]
    fn extract_routes_trivial_and_idle() {
        let inst = tri_node();
        let fm = build_p2(&inst).unwrap();
        let mut x = vec![0.0; fm.model.n_vars()];
        x[fm.varmap.x[fm.varmap.x_index(0, 0, 1)]] = 1.0;
        x[fm.varmap.x[fm.varmap.x_index(0, 1, 3)]] = 1.0;
        let out = extract_routes(&x, &fm.varmap, &inst).unwrap();
        assert_eq!(out.routes[0].nodes, vec![0, 1, 3]);
        assert_eq!(out.unserved, vec![2]);

        let mut idle = vec![0.0; fm.model.n_vars()];
        idle[fm.varmap.x[fm.varmap.x_index(0, 0, 3)]] = 1.0;
        let out = extract_routes(&idle, &fm.varmap, &inst).unwrap();
        assert_eq!(out.routes[0].nodes, vec![0, 3]);
        assert_eq!(out.unserved, vec![1, 2]);
    }

    #[test]
    fn extract_routes_rejects_broken_walk() {
        let inst = tri_node();
        let fm = build_p2(&inst).unwrap();
        let mut x = vec![0.0; fm.model.n_vars()];
        x[fm.varmap.x[fm.varmap.x_index(0, 0, 1)]] = 1.0; // never comes back
        assert!(matches!(extract_routes(&x, &fm.varmap, &inst), Err(BuildError::Internal(_))));
    }

    #[test]
    fn table1_segments_expose_expected_count() {
        assert_eq!(n_omega(&table1()), 4);
    }
}
