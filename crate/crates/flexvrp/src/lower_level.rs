//! Customer-side (follower) problem: given a discount rate `q`, each customer
//! chooses a time flexibility `delta` in `[0, delta_bar]` minimizing
//! `inconvenience(delta) - q * delta`.
//!
//! The inconvenience function is a convex piecewise-linear max of lines. The
//! follower problem is encoded internally as the epigraph LP
//! `min z - q*delta  s.t.  z >= slope_n*delta + intercept_n,  0 <= delta <= delta_bar`
//! whose exact KKT system (one multiplier `mu_n` per line, summing to one)
//! replaces the nonsmooth stationarity condition at kinks.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance for argmin membership, tie detection and certificate
/// residuals. Chosen well below the 1e-8 contract on the discount identity.
const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum LowerLevelError {
    #[error("invalid piecewise-linear function: {0}")]
    InvalidPwl(String),
    #[error("discount rate must be nonnegative, got {0}")]
    InvalidDiscount(f64),
    #[error("grid must have at least 2 points, got {0}")]
    InvalidGrid(usize),
    #[error("delta {delta} is not a best response (stationarity residual {residual:.3e})")]
    NotOptimal { delta: f64, residual: f64 },
    #[error("target flexibility {0} is not reachable for any affordable discount")]
    Unreachable(f64),
}

/// One line of the piecewise-linear inconvenience function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// gamma_n, dollars per hour.
    pub slope: f64,
    /// chi_n, dollars.
    pub intercept: f64,
}

/// Convex piecewise-linear inconvenience `I(delta) = max_n (slope_n * delta + intercept_n)`
/// over the domain `[0, delta_bar]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwlInconvenience {
    segments: Vec<Segment>,
    delta_bar: f64,
}

/// A maximal-length piece of the upper envelope of the segment lines,
/// restricted to `[0, delta_bar]`.
#[derive(Debug, Clone, Copy)]
pub struct EnvelopePiece {
    /// Index into `segments` of the line active on this piece.
    pub segment: usize,
    pub slope: f64,
    pub left: f64,
    pub right: f64,
}

impl PwlInconvenience {
    /// Segments must have pairwise distinct slopes (sorted by slope they are
    /// strictly increasing, which is what convexity of the max needs to give
    /// every line a chance to be active). The declared order is preserved:
    /// multiplier indices in certificates refer to it.
    pub fn new(segments: Vec<Segment>, delta_bar: f64) -> Result<Self, LowerLevelError> {
        if segments.is_empty() {
            return Err(LowerLevelError::InvalidPwl("needs at least one segment".into()));
        }
        if !delta_bar.is_finite() || delta_bar < 0.0 {
            return Err(LowerLevelError::InvalidPwl(format!(
                "delta_bar must be finite and nonnegative, got {delta_bar}"
            )));
        }
        for s in &segments {
            if !s.slope.is_finite() || !s.intercept.is_finite() {
                return Err(LowerLevelError::InvalidPwl("non-finite segment".into()));
            }
        }
        let mut slopes: Vec<f64> = segments.iter().map(|s| s.slope).collect();
        slopes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if slopes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LowerLevelError::InvalidPwl(
                "segment slopes must be pairwise distinct".into(),
            ));
        }
        Ok(Self { segments, delta_bar })
    }

    /// Two-segment function from the standard simulation parameters.
    pub fn two_segment(gamma: (f64, f64), chi: (f64, f64), delta_bar: f64) -> Result<Self, LowerLevelError> {
        Self::new(
            vec![
                Segment { slope: gamma.0, intercept: chi.0 },
                Segment { slope: gamma.1, intercept: chi.1 },
            ],
            delta_bar,
        )
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn n_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn delta_bar(&self) -> f64 {
        self.delta_bar
    }

    /// `I(delta) = max_n (slope_n * delta + intercept_n)`.
    pub fn eval(&self, delta: f64) -> f64 {
        self.segments
            .iter()
            .map(|s| s.slope * delta + s.intercept)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_slope(&self) -> f64 {
        self.segments.iter().map(|s| s.slope.abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_intercept(&self) -> f64 {
        self.segments.iter().map(|s| s.intercept.abs()).fold(0.0, f64::max)
    }

    /// Upper envelope on `[0, delta_bar]` as pieces ordered left to right
    /// (equivalently by increasing slope). Degenerate domains yield one piece.
    pub fn envelope(&self) -> Vec<EnvelopePiece> {
        let mut order: Vec<usize> = (0..self.segments.len()).collect();
        order.sort_by(|&a, &b| self.segments[a].slope.partial_cmp(&self.segments[b].slope).unwrap());

        // Classic upper-envelope stack: lines by increasing slope, popping
        // lines that lose activity before their predecessor does.
        let mut stack: Vec<usize> = Vec::new();
        let cross = |a: usize, b: usize| -> f64 {
            let sa = &self.segments[a];
            let sb = &self.segments[b];
            (sa.intercept - sb.intercept) / (sb.slope - sa.slope)
        };
        for &idx in &order {
            while let Some(&top) = stack.last() {
                if stack.len() >= 2 {
                    let below = stack[stack.len() - 2];
                    if cross(below, idx) <= cross(below, top) {
                        stack.pop();
                        continue;
                    }
                } else if self.segments[idx].intercept >= self.segments[top].intercept {
                    // Same evaluation at -inf ordering: higher intercept with
                    // higher slope dominates everywhere.
                    stack.pop();
                    continue;
                }
                break;
            }
            stack.push(idx);
        }

        let mut pieces = Vec::new();
        let mut left = 0.0_f64;
        for (pos, &seg) in stack.iter().enumerate() {
            let right = if pos + 1 < stack.len() { cross(seg, stack[pos + 1]) } else { self.delta_bar };
            let right = right.min(self.delta_bar);
            if right > left - TIE_TOL {
                pieces.push(EnvelopePiece {
                    segment: seg,
                    slope: self.segments[seg].slope,
                    left: left.max(0.0),
                    right: right.max(left.max(0.0)),
                });
                left = right;
            }
            if left >= self.delta_bar {
                break;
            }
        }
        if pieces.is_empty() {
            // delta_bar == 0 or all crossings left of 0: single active line at 0.
            let best = (0..self.segments.len())
                .max_by(|&a, &b| {
                    let va = self.segments[a].intercept;
                    let vb = self.segments[b].intercept;
                    va.partial_cmp(&vb).unwrap()
                })
                .unwrap();
            pieces.push(EnvelopePiece {
                segment: best,
                slope: self.segments[best].slope,
                left: 0.0,
                right: self.delta_bar,
            });
        } else if let Some(last) = pieces.last_mut() {
            last.right = self.delta_bar;
        }
        pieces
    }
}

/// Argmin interval and optimal value of `I(delta) - q*delta` on `[0, delta_bar]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestResponse {
    pub arg_lo: f64,
    pub arg_hi: f64,
    pub value: f64,
}

impl BestResponse {
    pub fn contains(&self, delta: f64, tol: f64) -> bool {
        delta >= self.arg_lo - tol && delta <= self.arg_hi + tol
    }
}

/// Exact best response by breakpoint scan. The objective is piecewise linear,
/// so the optimum is attained at an envelope breakpoint or a domain bound and
/// ties extend over whole pieces.
pub fn best_response(q: f64, func: &PwlInconvenience) -> Result<BestResponse, LowerLevelError> {
    if q < 0.0 {
        return Err(LowerLevelError::InvalidDiscount(q));
    }
    let mut candidates = vec![0.0, func.delta_bar()];
    for p in func.envelope() {
        if p.left > 0.0 && p.left < func.delta_bar() {
            candidates.push(p.left);
        }
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();

    let obj = |d: f64| func.eval(d) - q * d;
    let best = candidates.iter().map(|&d| obj(d)).fold(f64::INFINITY, f64::min);
    let tol = TIE_TOL * (1.0 + best.abs());
    let attaining: Vec<f64> = candidates.iter().copied().filter(|&d| obj(d) <= best + tol).collect();
    Ok(BestResponse {
        arg_lo: attaining[0],
        arg_hi: *attaining.last().unwrap(),
        value: best,
    })
}

/// Grid oracle for `best_response`. Error bound on the value is
/// `(max_slope + q) * delta_bar / (grid_points - 1)`.
pub fn best_response_brute(
    q: f64,
    func: &PwlInconvenience,
    grid_points: usize,
) -> Result<BestResponse, LowerLevelError> {
    if q < 0.0 {
        return Err(LowerLevelError::InvalidDiscount(q));
    }
    if grid_points < 2 {
        return Err(LowerLevelError::InvalidGrid(grid_points));
    }
    let db = func.delta_bar();
    let mut best_val = f64::INFINITY;
    let mut arg_lo = 0.0;
    let mut arg_hi = 0.0;
    let mut vals = Vec::with_capacity(grid_points);
    for i in 0..grid_points {
        let d = db * (i as f64) / ((grid_points - 1) as f64);
        let v = func.eval(d) - q * d;
        vals.push((d, v));
        if v < best_val {
            best_val = v;
        }
    }
    let tol = TIE_TOL * (1.0 + best_val.abs());
    let mut seen_first = false;
    for (d, v) in vals {
        if v <= best_val + tol {
            if !seen_first {
                arg_lo = d;
                seen_first = true;
            }
            arg_hi = d;
        }
    }
    Ok(BestResponse { arg_lo, arg_hi, value: best_val })
}

/// KKT multipliers of the epigraph LP certifying that a given `delta` is a
/// best response at discount `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct KktCertificate {
    /// One weight per segment; convex combination (sums to one).
    pub mu: Vec<f64>,
    /// Multiplier of `delta >= 0`, dollars per hour.
    pub sigma: f64,
    /// Multiplier of `delta <= delta_bar`, dollars per hour.
    pub u: f64,
    /// Epigraph value `I(delta)`, dollars.
    pub z: f64,
}

impl KktCertificate {
    /// Max violation over the certificate conditions: convexity of mu,
    /// stationarity, and the three complementarity families.
    pub fn max_violation(&self, delta: f64, q: f64, func: &PwlInconvenience) -> f64 {
        let mut worst: f64 = (self.mu.iter().sum::<f64>() - 1.0).abs();
        worst = worst.max(-self.sigma).max(-self.u);
        for &m in &self.mu {
            worst = worst.max(-m);
        }
        let grad: f64 = self
            .mu
            .iter()
            .zip(func.segments())
            .map(|(m, s)| m * s.slope)
            .sum();
        worst = worst.max((grad - q - self.sigma + self.u).abs());
        for (m, s) in self.mu.iter().zip(func.segments()) {
            worst = worst.max((m * (self.z - s.slope * delta - s.intercept)).abs());
        }
        worst = worst.max((self.sigma * delta).abs());
        worst = worst.max((self.u * (func.delta_bar() - delta)).abs());
        worst
    }
}

/// Builds the unique canonical certificate for `delta`, or reports how far
/// stationarity is from satisfiable when `delta` is not a best response.
pub fn kkt_certificate(
    delta: f64,
    q: f64,
    func: &PwlInconvenience,
) -> Result<KktCertificate, LowerLevelError> {
    if q < 0.0 {
        return Err(LowerLevelError::InvalidDiscount(q));
    }
    let br = best_response(q, func)?;
    let z = func.eval(delta);
    let active: Vec<usize> = (0..func.n_segments())
        .filter(|&n| {
            let s = &func.segments()[n];
            (z - (s.slope * delta + s.intercept)).abs() <= TIE_TOL * (1.0 + z.abs())
        })
        .collect();
    let g_min = active.iter().map(|&n| func.segments()[n].slope).fold(f64::INFINITY, f64::min);
    let g_max = active.iter().map(|&n| func.segments()[n].slope).fold(f64::NEG_INFINITY, f64::max);

    if !br.contains(delta, TIE_TOL) {
        let db = func.delta_bar();
        let at_lower = delta <= TIE_TOL;
        let at_upper = delta >= db - TIE_TOL;
        // Most favorable reachable gradient given the position of delta.
        let residual = if at_lower && at_upper {
            0.0
        } else if at_lower {
            (q - g_max).max(0.0)
        } else if at_upper {
            (g_min - q).max(0.0)
        } else {
            (q - g_max).max(g_min - q).max(0.0)
        };
        return Err(LowerLevelError::NotOptimal { delta, residual });
    }

    let db = func.delta_bar();
    let at_lower = delta <= TIE_TOL;
    let at_upper = delta >= db - TIE_TOL;
    // Resolve the bound multipliers first, preferring zero when q already lies
    // in the active subgradient range.
    let (sigma, u, target) = if q >= g_min - TIE_TOL && q <= g_max + TIE_TOL {
        (0.0, 0.0, q.clamp(g_min, g_max))
    } else if q < g_min {
        debug_assert!(at_lower || at_upper, "interior optimum requires q in subgradient");
        (g_min - q, 0.0, g_min)
    } else {
        debug_assert!(at_upper || at_lower);
        (0.0, q - g_max, g_max)
    };

    // mu: weight 1 on an active segment matching the target slope, else the
    // convex combination of the first (lowest-index) active pair bracketing it.
    let mut mu = vec![0.0; func.n_segments()];
    let exact = active
        .iter()
        .find(|&&n| (func.segments()[n].slope - target).abs() <= TIE_TOL);
    if let Some(&n) = exact {
        mu[n] = 1.0;
    } else {
        let mut done = false;
        'outer: for (ai, &a) in active.iter().enumerate() {
            for &b in active.iter().skip(ai + 1) {
                let (sa, sb) = (func.segments()[a].slope, func.segments()[b].slope);
                let (lo, hi, nlo, nhi) = if sa < sb { (sa, sb, a, b) } else { (sb, sa, b, a) };
                if target >= lo && target <= hi {
                    let w_hi = (target - lo) / (hi - lo);
                    mu[nhi] = w_hi;
                    mu[nlo] = 1.0 - w_hi;
                    done = true;
                    break 'outer;
                }
            }
        }
        if !done {
            return Err(LowerLevelError::NotOptimal { delta, residual: (q - g_max).max(g_min - q) });
        }
    }
    Ok(KktCertificate { mu, sigma, u, z })
}

/// Residual of the strong-duality identity
/// `q*delta = z + u*delta_bar - sum_n mu_n*intercept_n`.
///
/// The last term is the constant part of the epigraph-LP dual objective and
/// plays the role of the follower's dual-function infimum.
pub fn discount_identity(cert: &KktCertificate, delta: f64, q: f64, func: &PwlInconvenience) -> f64 {
    let phi_star: f64 = cert
        .mu
        .iter()
        .zip(func.segments())
        .map(|(m, s)| m * s.intercept)
        .sum();
    q * delta - (cert.z + cert.u * func.delta_bar() - phi_star)
}

/// Cheapest way to secure at least `delta_target` of flexibility: the chosen
/// discount, the flexibility the customer is held to, and the spend.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscountQuote {
    pub q: f64,
    pub delta: f64,
    pub cost: f64,
}

/// Minimal `q * delta` over `q in [0, q_max]` and `delta` in the best-response
/// set at `q` with `delta >= delta_target`. Uses the leader-favorable point of
/// best-response ties.
pub fn discount_cost(
    delta_target: f64,
    func: &PwlInconvenience,
    q_max: f64,
) -> Result<DiscountQuote, LowerLevelError> {
    let db = func.delta_bar();
    if delta_target > db + TIE_TOL {
        return Err(LowerLevelError::Unreachable(delta_target));
    }
    let delta_target = delta_target.clamp(0.0, db);
    let free = best_response(0.0, func)?;
    if free.arg_hi >= delta_target - TIE_TOL {
        return Ok(DiscountQuote { q: 0.0, delta: delta_target.max(free.arg_lo), cost: 0.0 });
    }
    // The reach of discount q jumps exactly at envelope slopes: paying q equal
    // to a piece's slope makes the whole piece optimal for the customer.
    for p in func.envelope() {
        if p.slope > 0.0 && p.right >= delta_target - TIE_TOL {
            if p.slope > q_max + TIE_TOL {
                return Err(LowerLevelError::Unreachable(delta_target));
            }
            let delta = delta_target.max(p.left);
            return Ok(DiscountQuote { q: p.slope, delta, cost: p.slope * delta });
        }
    }
    Err(LowerLevelError::Unreachable(delta_target))
}
