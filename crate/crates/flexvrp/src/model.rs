//! Problem instances: node geometry, fleet and cost parameters, travel times.
//! Instances are immutable after construction and shared freely between
//! concurrent solves.

use crate::lower_level::PwlInconvenience;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    StartDepot,
    EndDepot,
    Customer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    /// Kilometers.
    pub x: f64,
    /// Kilometers.
    pub y: f64,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Dollars per hour of travel time (the operator's value of time).
    pub gamma_time: f64,
    /// Dollars per vehicle put on the road.
    pub vehicle_cost: f64,
    /// Dollars collected per served request.
    pub fee: f64,
    /// Kilometers per hour.
    pub speed: f64,
    /// Upper bound on the discount rate offered to any customer, dollars per hour.
    pub q_max: f64,
    /// When false, the direct start-to-end depot arc is exempt from the
    /// vehicle cost so unused vehicles cost nothing beyond their empty travel.
    pub charge_idle_vehicles: bool,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            gamma_time: 1.0,
            vehicle_cost: 99.0,
            fee: 9.05,
            speed: 60.0,
            q_max: 1.0,
            charge_idle_vehicles: false,
        }
    }
}

/// Dense square matrix of travel times in hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }
}

/// A routing instance: graph, fleet size, travel times, customer windows and
/// inconvenience functions, and the cost vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub nodes: Vec<Node>,
    pub vehicles: usize,
    pub travel_time: Matrix,
    /// Earliest service time per customer, hours, aligned with `customer_ids()`.
    pub tau: Vec<f64>,
    /// Inconvenience function per customer, aligned with `customer_ids()`.
    pub inconvenience: Vec<PwlInconvenience>,
    pub params: CostParams,
}

impl Instance {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_customers(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Customer).count()
    }

    pub fn start_depot(&self) -> usize {
        self.nodes.iter().find(|n| n.kind == NodeKind::StartDepot).map(|n| n.id).unwrap()
    }

    pub fn end_depot(&self) -> usize {
        self.nodes.iter().find(|n| n.kind == NodeKind::EndDepot).map(|n| n.id).unwrap()
    }

    /// Customer node ids in increasing id order.
    pub fn customer_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> =
            self.nodes.iter().filter(|n| n.kind == NodeKind::Customer).map(|n| n.id).collect();
        ids.sort_unstable();
        ids
    }

    /// Position of a customer node id within `customer_ids()`.
    pub fn customer_index(&self, node_id: usize) -> Option<usize> {
        self.customer_ids().iter().position(|&id| id == node_id)
    }

    #[inline]
    pub fn travel(&self, i: usize, j: usize) -> f64 {
        self.travel_time.get(i, j)
    }

    /// Whether arc (i, j) exists: no self-arcs, nothing into the start depot,
    /// nothing out of the end depot.
    pub fn arc_allowed(&self, i: usize, j: usize) -> bool {
        i != j && j != self.start_depot() && i != self.end_depot()
    }

    /// First-stage cost of traversing arc (i, j): travel time valued at
    /// gamma_time plus the origin's cost entry (vehicle cost when leaving the
    /// start depot, minus the fee when leaving a customer).
    pub fn arc_cost(&self, i: usize, j: usize) -> f64 {
        let travel = self.params.gamma_time * self.travel(i, j);
        let origin = match self.nodes[i].kind {
            NodeKind::Customer => -self.params.fee,
            NodeKind::StartDepot => {
                if j == self.end_depot() && !self.params.charge_idle_vehicles {
                    0.0
                } else {
                    self.params.vehicle_cost
                }
            }
            NodeKind::EndDepot => 0.0,
        };
        travel + origin
    }

    /// Cost of a vehicle that drives straight from start to end depot.
    pub fn idle_vehicle_cost(&self) -> f64 {
        self.arc_cost(self.start_depot(), self.end_depot())
    }

    pub fn max_tau(&self) -> f64 {
        self.tau.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_delta_bar(&self) -> f64 {
        self.inconvenience.iter().map(|f| f.delta_bar()).fold(0.0, f64::max)
    }
}

/// Euclidean travel times at constant speed: symmetric, zero diagonal.
pub fn travel_time_matrix(nodes: &[Node], speed: f64) -> Result<Matrix, InstanceError> {
    if !(speed > 0.0) || !speed.is_finite() {
        return Err(InstanceError::InvalidInstance(format!("speed must be positive, got {speed}")));
    }
    for n in nodes {
        if !n.x.is_finite() || !n.y.is_finite() {
            return Err(InstanceError::InvalidInstance(format!(
                "non-finite coordinate at node {}",
                n.id
            )));
        }
    }
    let mut m = Matrix::zeros(nodes.len());
    for (a, na) in nodes.iter().enumerate() {
        for (b, nb) in nodes.iter().enumerate() {
            if a == b {
                continue;
            }
            let d = ((na.x - nb.x).powi(2) + (na.y - nb.y).powi(2)).sqrt();
            m.set(a, b, d / speed);
        }
    }
    Ok(m)
}

/// One violated instance invariant, carrying the offending node ids.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DepotMultiplicity { kind: NodeKind, count: usize },
    IdsNotContiguous,
    NonFiniteCoordinate { node: usize },
    NoVehicles,
    MatrixDimensionMismatch { expected: usize, actual: usize },
    NegativeTravelTime { i: usize, j: usize },
    NonZeroDiagonal { i: usize },
    TriangleInequality { i: usize, j: usize, k: usize },
    UnreachableWindow { node: usize },
    CustomerDataLength { field: &'static str, expected: usize, actual: usize },
    BadCostParams { reason: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DepotMultiplicity { kind, count } => {
                write!(f, "depot multiplicity: {count} nodes of kind {kind:?}, expected 1")
            }
            Violation::IdsNotContiguous => write!(f, "node ids are not unique and contiguous from 0"),
            Violation::NonFiniteCoordinate { node } => write!(f, "non-finite coordinate at node {node}"),
            Violation::NoVehicles => write!(f, "vehicle count must be at least 1"),
            Violation::MatrixDimensionMismatch { expected, actual } => {
                write!(f, "travel time matrix is {actual}x{actual}, expected {expected}x{expected}")
            }
            Violation::NegativeTravelTime { i, j } => write!(f, "negative travel time on arc ({i}, {j})"),
            Violation::NonZeroDiagonal { i } => write!(f, "nonzero travel time on self-arc ({i}, {i})"),
            Violation::TriangleInequality { i, j, k } => {
                write!(f, "triangle inequality violated for ({i}, {j}, {k})")
            }
            Violation::UnreachableWindow { node } => write!(f, "unreachable window at node {node}"),
            Violation::CustomerDataLength { field, expected, actual } => {
                write!(f, "{field} has {actual} entries, expected {expected}")
            }
            Violation::BadCostParams { reason } => write!(f, "bad cost parameters: {reason}"),
        }
    }
}

/// Collects every violated invariant; an empty list means the instance is
/// well formed. Violations are data, not faults.
pub fn validate_instance(inst: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = inst.nodes.len();

    let starts = inst.nodes.iter().filter(|x| x.kind == NodeKind::StartDepot).count();
    let ends = inst.nodes.iter().filter(|x| x.kind == NodeKind::EndDepot).count();
    if starts != 1 {
        out.push(Violation::DepotMultiplicity { kind: NodeKind::StartDepot, count: starts });
    }
    if ends != 1 {
        out.push(Violation::DepotMultiplicity { kind: NodeKind::EndDepot, count: ends });
    }
    let mut ids: Vec<usize> = inst.nodes.iter().map(|x| x.id).collect();
    ids.sort_unstable();
    if ids.iter().enumerate().any(|(pos, &id)| pos != id) {
        out.push(Violation::IdsNotContiguous);
    }
    for nd in &inst.nodes {
        if !nd.x.is_finite() || !nd.y.is_finite() {
            out.push(Violation::NonFiniteCoordinate { node: nd.id });
        }
    }
    if inst.vehicles == 0 {
        out.push(Violation::NoVehicles);
    }
    if inst.travel_time.n() != n {
        out.push(Violation::MatrixDimensionMismatch { expected: n, actual: inst.travel_time.n() });
        return out; // index-dependent checks below would be meaningless
    }
    for i in 0..n {
        if inst.travel_time.get(i, i) != 0.0 {
            out.push(Violation::NonZeroDiagonal { i });
        }
        for j in 0..n {
            if inst.travel_time.get(i, j) < 0.0 {
                out.push(Violation::NegativeTravelTime { i, j });
            }
        }
    }
    let tri_tol = 1e-9 * (1.0 + inst.travel_time.max_entry());
    'tri: for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if inst.travel_time.get(i, j) > inst.travel_time.get(i, k) + inst.travel_time.get(k, j) + tri_tol {
                    out.push(Violation::TriangleInequality { i, j, k });
                    break 'tri;
                }
            }
        }
    }

    let customers = inst.customer_ids();
    if inst.tau.len() != customers.len() {
        out.push(Violation::CustomerDataLength {
            field: "tau",
            expected: customers.len(),
            actual: inst.tau.len(),
        });
    }
    if inst.inconvenience.len() != customers.len() {
        out.push(Violation::CustomerDataLength {
            field: "inconvenience",
            expected: customers.len(),
            actual: inst.inconvenience.len(),
        });
    }
    if starts == 1 && inst.tau.len() == customers.len() {
        let v1 = inst.start_depot();
        for (idx, &cust) in customers.iter().enumerate() {
            if inst.tau[idx] < inst.travel_time.get(v1, cust) - 1e-12 {
                out.push(Violation::UnreachableWindow { node: cust });
            }
        }
    }

    let p = &inst.params;
    if !(p.speed > 0.0) {
        out.push(Violation::BadCostParams { reason: format!("speed must be positive, got {}", p.speed) });
    }
    if !(p.q_max > 0.0) {
        out.push(Violation::BadCostParams { reason: format!("q_max must be positive, got {}", p.q_max) });
    }
    for (name, v) in [("gamma_time", p.gamma_time), ("vehicle_cost", p.vehicle_cost), ("fee", p.fee)] {
        if v < 0.0 || !v.is_finite() {
            out.push(Violation::BadCostParams { reason: format!("{name} must be nonnegative, got {v}") });
        }
    }
    out
}

/// Convenience constructor: Euclidean travel times from node coordinates.
pub fn build_instance(
    nodes: Vec<Node>,
    vehicles: usize,
    tau: Vec<f64>,
    inconvenience: Vec<PwlInconvenience>,
    params: CostParams,
) -> Result<Instance, InstanceError> {
    let travel_time = travel_time_matrix(&nodes, params.speed)?;
    let inst = Instance { nodes, vehicles, travel_time, tau, inconvenience, params };
    let violations = validate_instance(&inst);
    if violations.is_empty() {
        Ok(inst)
    } else {
        let msgs: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        Err(InstanceError::InvalidInstance(msgs.join("; ")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lower_level::PwlInconvenience;

    fn table1() -> PwlInconvenience {
        PwlInconvenience::two_segment((0.5, -0.5), (-0.01, 0.01), 1.0).unwrap()
    }

    fn two_customer_instance() -> Instance {
        let nodes = vec![
            Node { id: 0, x: 0.0, y: 0.0, kind: NodeKind::StartDepot },
            Node { id: 1, x: 0.0, y: 1.0, kind: NodeKind::Customer },
            Node { id: 2, x: 1.0, y: 0.0, kind: NodeKind::Customer },
            Node { id: 3, x: 0.0, y: 0.0, kind: NodeKind::EndDepot },
        ];
        let params = CostParams { speed: 1.0, ..CostParams::default() };
        build_instance(nodes, 1, vec![1.0, 2.0], vec![table1(), table1()], params).unwrap()
    }

    #[test]
    fn travel_time_345_triangle() {
        let nodes = vec![
            Node { id: 0, x: 0.0, y: 0.0, kind: NodeKind::StartDepot },
            Node { id: 1, x: 3.0, y: 4.0, kind: NodeKind::EndDepot },
        ];
        let m = travel_time_matrix(&nodes, 5.0).unwrap();
        assert_eq!(m.get(0, 1), 1.0);
        assert_eq!(m.get(1, 0), 1.0);
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn travel_time_colocated() {
        let nodes = vec![
            Node { id: 0, x: 0.0, y: 0.0, kind: NodeKind::StartDepot },
            Node { id: 1, x: 0.0, y: 0.0, kind: NodeKind::EndDepot },
        ];
        let m = travel_time_matrix(&nodes, 5.0).unwrap();
        assert_eq!(m.get(0, 1), 0.0);
    }

    #[test]
    fn travel_time_diagonal_unit_speed() {
        let nodes = vec![
            Node { id: 0, x: 0.0, y: 0.0, kind: NodeKind::StartDepot },
            Node { id: 1, x: 0.0, y: 1.0, kind: NodeKind::EndDepot },
            Node { id: 2, x: 1.0, y: 0.0, kind: NodeKind::Customer },
        ];
        let m = travel_time_matrix(&nodes, 1.0).unwrap();
        assert!((m.get(1, 2) - 2.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn travel_time_rejects_nan() {
        let nodes = vec![Node { id: 0, x: f64::NAN, y: 0.0, kind: NodeKind::StartDepot }];
        assert!(travel_time_matrix(&nodes, 1.0).is_err());
    }

    #[test]
    fn validate_well_formed() {
        assert!(validate_instance(&two_customer_instance()).is_empty());
    }

    #[test]
    fn validate_unreachable_window() {
        let mut inst = two_customer_instance();
        inst.tau[0] = 0.0; // travel from depot is 1 hour
        let v = validate_instance(&inst);
        assert!(v.contains(&Violation::UnreachableWindow { node: 1 }), "{v:?}");
    }

    #[test]
    fn validate_depot_multiplicity() {
        let mut inst = two_customer_instance();
        inst.nodes[1].kind = NodeKind::StartDepot;
        let v = validate_instance(&inst);
        assert!(v
            .iter()
            .any(|x| matches!(x, Violation::DepotMultiplicity { kind: NodeKind::StartDepot, count: 2 })));
    }

    #[test]
    fn arc_rules_and_costs() {
        let inst = two_customer_instance();
        assert!(!inst.arc_allowed(1, 1));
        assert!(!inst.arc_allowed(1, 0)); // into start depot
        assert!(!inst.arc_allowed(3, 1)); // out of end depot
        assert!(inst.arc_allowed(0, 3));
        // idle arc exempt from vehicle cost by default
        assert_eq!(inst.idle_vehicle_cost(), 0.0);
        let mut charged = inst.clone();
        charged.params.charge_idle_vehicles = true;
        assert_eq!(charged.idle_vehicle_cost(), 99.0);
        // leaving a customer collects the fee
        assert!((inst.arc_cost(1, 3) - (1.0 - 9.05)).abs() < 1e-12);
    }

    #[test]
    fn permutation_invariance() {
        // relabeling nodes permutes the matrix accordingly
        let nodes = vec![
            Node { id: 0, x: 0.2, y: 1.5, kind: NodeKind::StartDepot },
            Node { id: 1, x: 3.0, y: -2.0, kind: NodeKind::Customer },
            Node { id: 2, x: -1.0, y: 0.5, kind: NodeKind::EndDepot },
        ];
        let m = travel_time_matrix(&nodes, 2.0).unwrap();
        let perm = [2usize, 0, 1];
        let permuted: Vec<Node> = perm
            .iter()
            .enumerate()
            .map(|(new_id, &old)| Node { id: new_id, ..nodes[old] })
            .collect();
        let mp = travel_time_matrix(&permuted, 2.0).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                assert!((mp.get(a, b) - m.get(perm[a], perm[b])).abs() < 1e-15);
            }
        }
    }
}
