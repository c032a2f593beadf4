//! Best-bound branch and bound over the bounded-variable simplex.
//!
//! Node selection is best lower bound (ties by creation order), branching is
//! most-fractional variable (ties by lowest index). Both rules are fixed so a
//! given model always produces bit-identical solutions.

use super::simplex::{solve_lp_with_bounds, LpStatus};
use super::{LinearModel, MilpError, INT_TOL};
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

#[derive(Debug, Clone, Copy)]
pub struct MipLimits {
    pub node_cap: usize,
    pub time_cap: Option<Duration>,
    pub rel_gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MipStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct MipSolution {
    pub status: MipStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub node_count: usize,
    /// Relative gap certified at termination.
    pub proof_gap: f64,
}

struct Node {
    parent: usize,
    var: usize,
    lower: f64,
    upper: f64,
}

/// f64 wrapper ordered by total order so the heap accepts it.
#[derive(PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}
impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

pub fn solve_mip(model: &LinearModel, limits: &MipLimits) -> Result<MipSolution, MilpError> {
    model.validate()?;
    let started = Instant::now();
    let base_bounds: Vec<(f64, f64)> =
        model.variables.iter().map(|v| (v.lower, v.upper)).collect();
    let int_vars: Vec<usize> = model
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.integer)
        .map(|(j, _)| j)
        .collect();

    // arena of branching decisions; the root carries none
    let mut nodes: Vec<Node> = vec![Node { parent: usize::MAX, var: usize::MAX, lower: 0.0, upper: 0.0 }];
    let mut heap: BinaryHeap<Reverse<Key>> = BinaryHeap::new();
    heap.push(Reverse(Key(f64::NEG_INFINITY, 0)));

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut explored = 0usize;
    let mut scratch = base_bounds.clone();

    let gap_closed = |inc: f64, bound: f64, rel_gap: f64| -> bool {
        inc - bound <= rel_gap * (1.0 + inc.abs()).max(1.0)
    };

    while let Some(Reverse(Key(bound, node_id))) = heap.pop() {
        if let Some((inc_obj, _)) = &incumbent {
            if gap_closed(*inc_obj, bound, limits.rel_gap) {
                // best-bound order: every remaining node is at least as high
                let (obj, x) = incumbent.unwrap();
                let gap = (obj - bound).max(0.0) / (1.0 + obj.abs()).max(1.0);
                return Ok(MipSolution {
                    status: MipStatus::Optimal,
                    x,
                    objective: obj,
                    node_count: explored,
                    proof_gap: gap,
                });
            }
        }
        if explored >= limits.node_cap
            || limits.time_cap.is_some_and(|cap| started.elapsed() > cap)
        {
            let incumbent_sol = incumbent.map(|(obj, x)| {
                Box::new(MipSolution {
                    status: MipStatus::Optimal,
                    x,
                    objective: obj,
                    node_count: explored,
                    proof_gap: f64::NAN,
                })
            });
            return Err(MilpError::LimitReached { nodes: explored, incumbent: incumbent_sol, bound });
        }
        explored += 1;

        // reconstruct node bounds by walking the decision chain
        scratch.copy_from_slice(&base_bounds);
        let mut cur = node_id;
        while cur != 0 {
            let n = &nodes[cur];
            let (lo, hi) = scratch[n.var];
            scratch[n.var] = (lo.max(n.lower), hi.min(n.upper));
            cur = n.parent;
        }

        let lp = solve_lp_with_bounds(model, Some(&scratch))?;
        match lp.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => return Err(MilpError::Unbounded),
            LpStatus::Optimal => {}
        }
        if let Some((inc_obj, _)) = &incumbent {
            if gap_closed(*inc_obj, lp.objective, limits.rel_gap) {
                continue;
            }
        }

        // most fractional integer variable, ties by lowest index
        let mut branch: Option<(usize, f64)> = None; // (var, distance to int)
        let mut best_dist = INT_TOL;
        for &j in &int_vars {
            let frac = lp.x[j] - lp.x[j].floor();
            let dist = frac.min(1.0 - frac);
            if dist > best_dist {
                best_dist = dist;
                branch = Some((j, lp.x[j]));
            }
        }

        match branch {
            None => {
                // integral within tolerance; snap and accept
                let mut x = lp.x.clone();
                for &j in &int_vars {
                    x[j] = x[j].round();
                }
                let obj = model.objective_value(&x);
                if incumbent.as_ref().is_none_or(|(inc, _)| obj < *inc) {
                    incumbent = Some((obj, x));
                }
            }
            Some((var, value)) => {
                let down = Node { parent: node_id, var, lower: f64::NEG_INFINITY, upper: value.floor() };
                let up = Node { parent: node_id, var, lower: value.ceil(), upper: f64::INFINITY };
                for node in [down, up] {
                    nodes.push(node);
                    heap.push(Reverse(Key(lp.objective, nodes.len() - 1)));
                }
            }
        }
    }

    match incumbent {
        Some((obj, x)) => Ok(MipSolution {
            status: MipStatus::Optimal,
            x,
            objective: obj,
            node_count: explored,
            proof_gap: 0.0,
        }),
        None => Ok(MipSolution {
            status: MipStatus::Infeasible,
            x: Vec::new(),
            objective: f64::NAN,
            node_count: explored,
            proof_gap: f64::NAN,
        }),
    }
}
