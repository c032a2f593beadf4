//! Exhaustive ground truth for tiny instances: every subset of customers,
//! every split of the subset into at most `vehicles` routes, every order
//! within a route. Exists to be slow and right.
//!
//! Within a fixed route, serving each customer at the earliest feasible time
//! is optimal: costs are travel- and discount-driven, discounts are
//! nondecreasing in the slack bought, and delaying any visit can only push
//! later visits further past their preferred times (a pairwise exchange on
//! the departure times shows no later schedule can reduce any slack).

use crate::decomposition::{Method, RunReport};
use crate::formulations::{CustomerTerm, Route};
use crate::lower_level::{discount_cost, LowerLevelError};
use crate::model::Instance;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance too large for enumeration: {customers} customers / {vehicles} vehicles, limits {max_customers}/{max_vehicles}")]
    TooLarge { customers: usize, vehicles: usize, max_customers: usize, max_vehicles: usize },
    #[error(transparent)]
    LowerLevel(#[from] LowerLevelError),
}

#[derive(Debug, Clone, Copy)]
pub struct EnumLimits {
    pub max_customers: usize,
    pub max_vehicles: usize,
}

impl Default for EnumLimits {
    fn default() -> Self {
        Self { max_customers: 8, max_vehicles: 3 }
    }
}

/// Optimum of the full problem (flexible windows bought by discounts).
pub fn enumerate_optimal(inst: &Instance, limits: &EnumLimits) -> Result<RunReport, OracleError> {
    enumerate(inst, limits, false)
}

/// Optimum of the rigid baseline: service exactly at the preferred time,
/// no discounts.
pub fn enumerate_vrp(inst: &Instance, limits: &EnumLimits) -> Result<RunReport, OracleError> {
    enumerate(inst, limits, true)
}

#[derive(Debug, Clone)]
struct ServedTerm {
    customer_index: usize,
    t: f64,
    slack: f64,
    q: f64,
    delta: f64,
    spend: f64,
}

#[derive(Debug, Clone)]
struct Candidate {
    cost: f64,
    routes: Vec<Vec<usize>>, // customer node ids per used vehicle
    terms: Vec<ServedTerm>,
}

fn enumerate(inst: &Instance, limits: &EnumLimits, rigid: bool) -> Result<RunReport, OracleError> {
    let customers = inst.customer_ids();
    let r = customers.len();
    if r > limits.max_customers || inst.vehicles > limits.max_vehicles {
        return Err(OracleError::TooLarge {
            customers: r,
            vehicles: inst.vehicles,
            max_customers: limits.max_customers,
            max_vehicles: limits.max_vehicles,
        });
    }
    let started = Instant::now();

    let mut best: Option<Candidate> = None;
    let mut consider = |cand: Candidate, best: &mut Option<Candidate>| {
        let better = match best {
            None => true,
            Some(b) => {
                cand.cost < b.cost - 1e-12
                    || ((cand.cost - b.cost).abs() <= 1e-12 && cand.routes < b.routes)
            }
        };
        if better {
            *best = Some(cand);
        }
    };

    let mut routes: Vec<Vec<usize>> = Vec::new();
    for mask in 0u32..(1 << r) {
        partition_into_routes(mask, inst.vehicles, &customers, &mut routes, &mut |routes| {
            if let Some(cand) = evaluate(inst, routes, rigid)? {
                consider(cand, &mut best);
            }
            Ok(())
        })?;
    }
    let best = best.expect("the all-idle fleet always evaluates");

    let mut terms: Vec<CustomerTerm> = customers
        .iter()
        .map(|&node| CustomerTerm { node, served: false, q: 0.0, delta: 0.0, t: 0.0 })
        .collect();
    for st in &best.terms {
        terms[st.customer_index] = CustomerTerm {
            node: customers[st.customer_index],
            served: true,
            q: st.q,
            delta: st.delta,
            t: st.t,
        };
    }
    let v1 = inst.start_depot();
    let vn = inst.end_depot();
    let mut report_routes = Vec::with_capacity(inst.vehicles);
    for (k, route) in best.routes.iter().enumerate() {
        let mut nodes = vec![v1];
        nodes.extend_from_slice(route);
        nodes.push(vn);
        report_routes.push(Route { vehicle: k, nodes });
    }
    for k in best.routes.len()..inst.vehicles {
        report_routes.push(Route { vehicle: k, nodes: vec![v1, vn] });
    }

    Ok(RunReport {
        method: if rigid { Method::OracleVrp } else { Method::Oracle },
        objective: best.cost,
        routes: report_routes,
        terms,
        lb_trace: vec![best.cost],
        ub_trace: vec![best.cost],
        iterations: 1,
        cuts: Vec::new(),
        xi_trace: Vec::new(),
        rhs_gap_trace: Vec::new(),
        wall: started.elapsed(),
        nodes: 0,
    })
}

/// Recursively splits the customers in `mask` into at most `vehicles_left`
/// ordered routes. Vehicles are interchangeable, so each new route is forced
/// to contain the lowest remaining customer, which enumerates each multiset
/// of routes exactly once.
fn partition_into_routes<F>(
    mask: u32,
    vehicles_left: usize,
    customers: &[usize],
    routes: &mut Vec<Vec<usize>>,
    visit: &mut F,
) -> Result<(), OracleError>
where
    F: FnMut(&[Vec<usize>]) -> Result<(), OracleError>,
{
    if mask == 0 {
        return visit(routes);
    }
    if vehicles_left == 0 {
        return Ok(());
    }
    let lowest = mask.trailing_zeros();
    let rest = mask & !(1 << lowest);
    // every submask of `rest`, including empty, joins `lowest` in this route
    let mut sub = rest;
    loop {
        let route_mask = sub | (1 << lowest);
        let members: Vec<usize> =
            (0..32).filter(|b| route_mask & (1 << b) != 0).map(|b| customers[b as usize]).collect();
        permute(members, &mut |perm| {
            routes.push(perm.to_vec());
            let out = partition_into_routes(mask & !route_mask, vehicles_left - 1, customers, routes, visit);
            routes.pop();
            out
        })?;
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & rest;
    }
    Ok(())
}

fn permute<F>(mut items: Vec<usize>, visit: &mut F) -> Result<(), OracleError>
where
    F: FnMut(&[usize]) -> Result<(), OracleError>,
{
    let n = items.len();
    fn rec<F>(items: &mut Vec<usize>, k: usize, visit: &mut F) -> Result<(), OracleError>
    where
        F: FnMut(&[usize]) -> Result<(), OracleError>,
    {
        if k == items.len() {
            return visit(items);
        }
        for i in k..items.len() {
            items.swap(k, i);
            rec(items, k + 1, visit)?;
            items.swap(k, i);
        }
        Ok(())
    }
    if n == 0 {
        return visit(&items);
    }
    rec(&mut items, 0, visit)
}

/// Costs one assignment of customers to ordered routes, or `None` when some
/// route cannot meet its windows.
fn evaluate(inst: &Instance, routes: &[Vec<usize>], rigid: bool) -> Result<Option<Candidate>, OracleError> {
    let v1 = inst.start_depot();
    let vn = inst.end_depot();
    let gamma = inst.params.gamma_time;
    let mut cost = 0.0;
    let mut terms = Vec::new();

    let used = routes.iter().filter(|r| !r.is_empty()).count();
    debug_assert_eq!(used, routes.len(), "empty routes are never enumerated");
    // idle vehicles still drive the direct depot arc
    cost += (inst.vehicles - used) as f64 * inst.idle_vehicle_cost();

    for route in routes {
        let mut time = 0.0;
        let mut prev = v1;
        let mut travel = 0.0;
        for &cust in route {
            let ci = inst.customer_index(cust).expect("route members are customers");
            let arrive = time + inst.travel(prev, cust);
            travel += inst.travel(prev, cust);
            let tau = inst.tau[ci];
            let (t, slack) = if rigid {
                if arrive > tau + 1e-9 {
                    return Ok(None);
                }
                (tau, 0.0)
            } else {
                let t = arrive.max(tau);
                (t, (t - tau).max(0.0))
            };
            if !rigid {
                let db = inst.inconvenience[ci].delta_bar();
                if slack > db + 1e-9 {
                    return Ok(None);
                }
            }
            let (q, delta, spend) = if rigid || slack <= 0.0 {
                (0.0, 0.0, 0.0)
            } else {
                match discount_cost(slack, &inst.inconvenience[ci], inst.params.q_max) {
                    Ok(quote) => (quote.q, quote.delta, quote.cost),
                    Err(LowerLevelError::Unreachable(_)) => return Ok(None),
                    Err(e) => return Err(e.into()),
                }
            };
            cost += spend - inst.params.fee;
            terms.push(ServedTerm { customer_index: ci, t, slack, q, delta, spend });
            time = t;
            prev = cust;
        }
        travel += inst.travel(prev, vn);
        cost += gamma * travel + inst.params.vehicle_cost;
    }

    let mut sorted_routes = routes.to_vec();
    sorted_routes.sort();
    Ok(Some(Candidate { cost, routes: sorted_routes, terms }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulations::test_fixtures::{tri_node, tri_node_optimum};
    use crate::model::{build_instance, CostParams, Node, NodeKind};

    #[test]
    fn matches_hand_enumeration_on_tri_node() {
        let inst = tri_node();
        let report = enumerate_optimal(&inst, &EnumLimits::default()).unwrap();
        assert!((report.objective - tri_node_optimum()).abs() < 1e-12);
        assert_eq!(report.routes[0].nodes, vec![0, 1, 2, 3]);
        let b = &report.terms[1];
        assert!(b.served);
        assert!((b.q - 0.5).abs() < 1e-12);
        assert!((b.t - 2.0_f64.sqrt() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_customers_is_idle_fleet() {
        let nodes = vec![
            Node { id: 0, x: 0.0, y: 0.0, kind: NodeKind::StartDepot },
            Node { id: 1, x: 3.0, y: 4.0, kind: NodeKind::EndDepot },
        ];
        let params = CostParams { speed: 5.0, ..Default::default() };
        let inst = build_instance(nodes, 2, vec![], vec![], params).unwrap();
        let report = enumerate_optimal(&inst, &EnumLimits::default()).unwrap();
        // two idle vehicles each drive the 1-hour depot arc at default gamma
        assert!((report.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_profitable_customer_served_without_slack() {
        let inst = tri_node();
        // drop customer B: one customer at (0,1), fee 5 > round trip 2 + vehicle 1
        let nodes = vec![
            Node { id: 0, x: 0.0, y: 0.0, kind: NodeKind::StartDepot },
            Node { id: 1, x: 0.0, y: 1.0, kind: NodeKind::Customer },
            Node { id: 2, x: 0.0, y: 0.0, kind: NodeKind::EndDepot },
        ];
        let single = build_instance(
            nodes,
            1,
            vec![1.0],
            vec![inst.inconvenience[0].clone()],
            inst.params.clone(),
        )
        .unwrap();
        let report = enumerate_optimal(&single, &EnumLimits::default()).unwrap();
        assert!((report.objective - (2.0 + 1.0 - 5.0)).abs() < 1e-12);
        assert_eq!(report.terms[0].q, 0.0);
    }

    #[test]
    fn rigid_enumeration_chains_only_exact_arrivals() {
        let mut inst = tri_node();
        // make B reachable exactly when leaving A at its window
        inst.tau[1] = 1.0 + 2.0_f64.sqrt();
        let report = enumerate_vrp(&inst, &EnumLimits::default()).unwrap();
        assert_eq!(report.served_count(), 2);
        let flexible = enumerate_optimal(&inst, &EnumLimits::default()).unwrap();
        assert!(report.objective >= flexible.objective - 1e-12);
    }

    #[test]
    fn rigid_worse_than_flexible_everywhere() {
        let inst = tri_node();
        let rigid = enumerate_vrp(&inst, &EnumLimits::default()).unwrap();
        let flex = enumerate_optimal(&inst, &EnumLimits::default()).unwrap();
        assert!(rigid.objective >= flex.objective - 1e-12);
        // rigid cannot chain A and B, so one customer stays unserved
        assert_eq!(rigid.served_count(), 1);
        assert!((rigid.objective + 2.0).abs() < 1e-12);
    }

    #[test]
    fn limits_are_enforced() {
        let inst = tri_node();
        let tight = EnumLimits { max_customers: 1, max_vehicles: 3 };
        assert!(matches!(
            enumerate_optimal(&inst, &tight),
            Err(OracleError::TooLarge { .. })
        ));
    }

    #[test]
    fn earliest_start_never_exceeds_window_on_feasible_routes() {
        let inst = tri_node();
        let report = enumerate_optimal(&inst, &EnumLimits::default()).unwrap();
        for term in report.terms.iter().filter(|t| t.served) {
            let ci = inst.customer_index(term.node).unwrap();
            let db = inst.inconvenience[ci].delta_bar();
            assert!(term.t <= inst.tau[ci] + db + 1e-9);
            assert!(term.t >= inst.tau[ci] - 1e-9);
        }
    }
}
