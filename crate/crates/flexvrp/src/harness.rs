//! Instance ingestion, seeded sampling, experiment sweeps and CSV reporting.
//!
//! The coordinate file is plain text, one node per line `id x y` in
//! kilometers, `#` comments and blank lines ignored. Experiment configs are
//! `key=value` text. Instances round-trip through JSON.

use crate::decomposition::{
    run_bdd, run_gbd, solve_monolithic, solve_vrp, Cut, CutKind, CutPhase, CutSource, DecompError,
    Method, RunOpts, RunReport,
};
use crate::lower_level::PwlInconvenience;
use crate::model::{build_instance, CostParams, Instance, Node, NodeKind};
use crate::oracle::{enumerate_optimal, enumerate_vrp, EnumLimits, OracleError};
use rand::seq::index::sample as index_sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Solve(#[from] DecompError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Reads a coordinate map. Nodes come back as customer-kind placeholders;
/// sampling assigns depots later.
pub fn parse_coords(path: &Path) -> Result<Vec<Node>, HarnessError> {
    let text = fs::read_to_string(path)?;
    let mut nodes = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(HarnessError::Parse {
                line: lineno + 1,
                msg: format!("expected 'id x y', got {raw:?}"),
            });
        }
        let id: usize = fields[0].parse().map_err(|e| HarnessError::Parse {
            line: lineno + 1,
            msg: format!("bad id: {e}"),
        })?;
        let x: f64 = fields[1].parse().map_err(|e| HarnessError::Parse {
            line: lineno + 1,
            msg: format!("bad x: {e}"),
        })?;
        let y: f64 = fields[2].parse().map_err(|e| HarnessError::Parse {
            line: lineno + 1,
            msg: format!("bad y: {e}"),
        })?;
        nodes.push(Node { id, x, y, kind: NodeKind::Customer });
    }
    Ok(nodes)
}

/// Everything the sampler needs beyond the map: cost vector, the inconvenience
/// family, and window generation knobs.
#[derive(Debug, Clone)]
pub struct SampleParams {
    pub cost: CostParams,
    pub gamma: (f64, f64),
    pub chi: (f64, f64),
    pub delta_bar: f64,
    pub colocate_depots: bool,
    /// Preferred times are uniform between the direct travel time and this
    /// multiple of the longest depot round trip among sampled customers.
    pub horizon_factor: f64,
}

impl Default for SampleParams {
    fn default() -> Self {
        Self {
            cost: CostParams::default(),
            gamma: (0.5, -0.5),
            chi: (-0.01, 0.01),
            delta_bar: 1.0,
            colocate_depots: true,
            horizon_factor: 1.5,
        }
    }
}

impl SampleParams {
    pub fn inconvenience(&self) -> Result<PwlInconvenience, HarnessError> {
        PwlInconvenience::two_segment(self.gamma, self.chi, self.delta_bar)
            .map_err(|e| HarnessError::Config(e.to_string()))
    }
}

/// Deterministically samples an instance from the map: depot(s) plus
/// `n_customers` distinct sites, preferred times uniform over the reachable
/// horizon. Identical seeds give identical instances bit for bit.
pub fn sample_instance(
    map: &[Node],
    n_customers: usize,
    n_vehicles: usize,
    seed: u64,
    params: &SampleParams,
) -> Result<Instance, HarnessError> {
    let depots = if params.colocate_depots { 1 } else { 2 };
    if map.len() < n_customers + depots {
        return Err(HarnessError::Config(format!(
            "map has {} nodes, need {}",
            map.len(),
            n_customers + depots
        )));
    }
    if n_vehicles == 0 {
        return Err(HarnessError::Config("need at least one vehicle".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = index_sample(&mut rng, map.len(), n_customers + depots).into_vec();

    let start = &map[picks[0]];
    let end = if params.colocate_depots { start } else { &map[picks[1]] };
    let mut nodes = Vec::with_capacity(n_customers + 2);
    nodes.push(Node { id: 0, x: start.x, y: start.y, kind: NodeKind::StartDepot });
    for (slot, &pick) in picks[depots..].iter().enumerate() {
        let site = &map[pick];
        nodes.push(Node { id: slot + 1, x: site.x, y: site.y, kind: NodeKind::Customer });
    }
    nodes.push(Node { id: n_customers + 1, x: end.x, y: end.y, kind: NodeKind::EndDepot });

    let tt = crate::model::travel_time_matrix(&nodes, params.cost.speed)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let v1 = 0;
    let vn = n_customers + 1;
    let horizon = (1..=n_customers)
        .map(|j| tt.get(v1, j) + tt.get(j, vn))
        .fold(0.0_f64, f64::max)
        * params.horizon_factor;
    let mut tau = Vec::with_capacity(n_customers);
    for j in 1..=n_customers {
        let lo = tt.get(v1, j);
        let hi = horizon.max(lo);
        let u: f64 = rand::Rng::gen_range(&mut rng, 0.0..=1.0);
        tau.push(lo + u * (hi - lo));
    }
    let func = params.inconvenience()?;
    let inconvenience = vec![func; n_customers];

    build_instance(nodes, n_vehicles, tau, inconvenience, params.cost.clone())
        .map_err(|e| HarnessError::Config(e.to_string()))
}

pub fn save_instance(inst: &Instance, path: &Path) -> Result<(), HarnessError> {
    fs::write(path, serde_json::to_string_pretty(inst)?)?;
    Ok(())
}

pub fn load_instance(path: &Path) -> Result<Instance, HarnessError> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Runs one method on one instance.
pub fn solve_with_method(
    inst: &Instance,
    method: Method,
    opts: &RunOpts,
) -> Result<RunReport, HarnessError> {
    let report = match method {
        Method::Monolithic => solve_monolithic(inst, opts)?,
        Method::Gbd => run_gbd(inst, opts)?,
        Method::Bdd => run_bdd(inst, opts)?,
        Method::Vrp => solve_vrp(inst, opts)?,
        Method::Oracle => enumerate_optimal(inst, &EnumLimits::default())?,
        Method::OracleVrp => enumerate_vrp(inst, &EnumLimits::default())?,
    };
    Ok(report)
}

pub fn parse_method(name: &str) -> Result<Method, HarnessError> {
    match name.trim() {
        "monolithic" => Ok(Method::Monolithic),
        "gbd" => Ok(Method::Gbd),
        "bdd" => Ok(Method::Bdd),
        "vrp" => Ok(Method::Vrp),
        "oracle" => Ok(Method::Oracle),
        "oracle-vrp" => Ok(Method::OracleVrp),
        other => Err(HarnessError::Config(format!("unknown method {other:?}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Gamma,
    DeltaBar,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Gamma => "gamma",
            SweepParam::DeltaBar => "delta_bar",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub nodes_file: PathBuf,
    pub customers: usize,
    pub vehicles: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub sweep: Option<(SweepParam, Vec<f64>)>,
    pub sample: SampleParams,
    pub gap_tol: f64,
    pub max_iters: usize,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.repetitions == 0 {
            return Err(HarnessError::Config("repetitions must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(HarnessError::Config("no methods requested".into()));
        }
        if let Some((_, values)) = &self.sweep {
            if values.is_empty() {
                return Err(HarnessError::Config("sweep named but no sweep_values given".into()));
            }
        }
        Ok(())
    }

    /// Sampler parameters with the sweep value applied: gamma scales the two
    /// slopes to (v, -v), delta_bar replaces the cap.
    pub fn sample_at(&self, sweep_value: Option<(SweepParam, f64)>) -> SampleParams {
        let mut p = self.sample.clone();
        match sweep_value {
            Some((SweepParam::Gamma, v)) => p.gamma = (v, -v),
            Some((SweepParam::DeltaBar, v)) => p.delta_bar = v,
            None => {}
        }
        p
    }

    pub fn run_opts(&self) -> RunOpts {
        RunOpts { gap_tol: self.gap_tol, max_iters: self.max_iters, ..RunOpts::default() }
    }
}

/// `key=value` config text; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = ExperimentConfig {
        nodes_file: PathBuf::new(),
        customers: 6,
        vehicles: 2,
        repetitions: 1,
        seed: 0,
        methods: vec![Method::Monolithic],
        sweep: None,
        sample: SampleParams::default(),
        gap_tol: 1e-4,
        max_iters: 200,
        out: None,
    };
    let mut sweep_name: Option<SweepParam> = None;
    let mut sweep_values: Vec<f64> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(HarnessError::Parse {
                line: lineno + 1,
                msg: format!("expected key=value, got {raw:?}"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        let bad = |msg: String| HarnessError::Parse { line: lineno + 1, msg };
        let as_f64 = |v: &str| v.parse::<f64>().map_err(|e| bad(format!("bad number {v:?}: {e}")));
        let as_usize =
            |v: &str| v.parse::<usize>().map_err(|e| bad(format!("bad integer {v:?}: {e}")));
        let as_bool = |v: &str| match v {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            other => Err(bad(format!("bad boolean {other:?}"))),
        };
        match key {
            "nodes" => cfg.nodes_file = PathBuf::from(value),
            "customers" => cfg.customers = as_usize(value)?,
            "vehicles" => cfg.vehicles = as_usize(value)?,
            "repetitions" => cfg.repetitions = as_usize(value)?,
            "seed" => {
                cfg.seed = value.parse().map_err(|e| bad(format!("bad seed {value:?}: {e}")))?
            }
            "methods" => {
                cfg.methods = value
                    .split(',')
                    .map(parse_method)
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| bad(e.to_string()))?
            }
            "sweep" => {
                sweep_name = Some(match value {
                    "gamma" => SweepParam::Gamma,
                    "delta_bar" => SweepParam::DeltaBar,
                    other => return Err(bad(format!("unknown sweep parameter {other:?}"))),
                })
            }
            "sweep_values" => {
                sweep_values =
                    value.split(',').map(as_f64).collect::<Result<Vec<_>, _>>()?
            }
            "out" => cfg.out = Some(PathBuf::from(value)),
            "gamma1" => cfg.sample.gamma.0 = as_f64(value)?,
            "gamma2" => cfg.sample.gamma.1 = as_f64(value)?,
            "chi1" => cfg.sample.chi.0 = as_f64(value)?,
            "chi2" => cfg.sample.chi.1 = as_f64(value)?,
            "delta_bar" => cfg.sample.delta_bar = as_f64(value)?,
            "c_v" => cfg.sample.cost.vehicle_cost = as_f64(value)?,
            "fee" => cfg.sample.cost.fee = as_f64(value)?,
            "Gamma" => cfg.sample.cost.gamma_time = as_f64(value)?,
            "speed" => cfg.sample.cost.speed = as_f64(value)?,
            "q_max" => cfg.sample.cost.q_max = as_f64(value)?,
            "charge_idle" => cfg.sample.cost.charge_idle_vehicles = as_bool(value)?,
            "colocate_depots" => cfg.sample.colocate_depots = as_bool(value)?,
            "horizon_factor" => cfg.sample.horizon_factor = as_f64(value)?,
            "gap" => cfg.gap_tol = as_f64(value)?,
            "max_iters" => cfg.max_iters = as_usize(value)?,
            other => return Err(bad(format!("unknown key {other:?}"))),
        }
    }
    cfg.sweep = match (sweep_name, sweep_values) {
        (Some(name), values) => Some((name, values)),
        (None, values) if !values.is_empty() => {
            return Err(HarnessError::Config("sweep_values given without sweep".into()))
        }
        _ => None,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub const CSV_HEADER: &str = "row_type,seed,customers,vehicles,sweep,sweep_value,method,status,\
objective,iterations,nodes,wall_seconds,served,discount_spend,fee_paid,fee_savings_ratio,\
vrp_objective,cost_reduction";

#[derive(Debug, Clone)]
pub struct ExperimentRow {
    pub row_type: &'static str,
    pub seed: Option<u64>,
    pub customers: usize,
    pub vehicles: usize,
    pub sweep: Option<(SweepParam, f64)>,
    pub method: Method,
    pub status: String,
    pub objective: f64,
    pub iterations: f64,
    pub nodes: f64,
    pub wall_seconds: f64,
    pub served: f64,
    pub discount_spend: f64,
    pub fee_paid: f64,
    pub fee_savings_ratio: f64,
    pub vrp_objective: f64,
    pub cost_reduction: f64,
}

fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:.9}")
    }
}

impl ExperimentRow {
    pub fn to_csv(&self) -> String {
        let (sweep, value) = match self.sweep {
            Some((p, v)) => (p.name().to_string(), num(v)),
            None => (String::new(), String::new()),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.row_type,
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            self.customers,
            self.vehicles,
            sweep,
            value,
            self.method.name(),
            self.status,
            num(self.objective),
            num(self.iterations),
            num(self.nodes),
            num(self.wall_seconds),
            num(self.served),
            num(self.discount_spend),
            num(self.fee_paid),
            num(self.fee_savings_ratio),
            num(self.vrp_objective),
            num(self.cost_reduction),
        )
    }
}

/// Per-repetition, per-sweep-value, per-method rows followed by mean rows
/// per (sweep value, method). Solve failures land in the status column and
/// the run continues.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>, HarnessError> {
    cfg.validate()?;
    let map = parse_coords(&cfg.nodes_file)?;
    let sweep_points: Vec<Option<(SweepParam, f64)>> = match &cfg.sweep {
        Some((name, values)) => values.iter().map(|&v| Some((*name, v))).collect(),
        None => vec![None],
    };

    let mut rows = Vec::new();
    for sweep in &sweep_points {
        for rep in 0..cfg.repetitions {
            let seed = cfg.seed + rep as u64;
            let sample = cfg.sample_at(*sweep);
            let inst = sample_instance(&map, cfg.customers, cfg.vehicles, seed, &sample)?;
            let fee_per = inst.params.fee;
            // the rigid baseline anchors the comparison columns
            let vrp_obj = match solve_vrp(&inst, &cfg.run_opts()) {
                Ok(r) => r.objective,
                Err(_) => f64::NAN,
            };
            for &method in &cfg.methods {
                let row = match solve_with_method(&inst, method, &cfg.run_opts()) {
                    Ok(report) => {
                        let served = report.served_count() as f64;
                        let spend = report.discount_spend();
                        let fee_paid = served * fee_per;
                        ExperimentRow {
                            row_type: "run",
                            seed: Some(seed),
                            customers: cfg.customers,
                            vehicles: cfg.vehicles,
                            sweep: *sweep,
                            method,
                            status: "ok".into(),
                            objective: report.objective,
                            iterations: report.iterations as f64,
                            nodes: report.nodes as f64,
                            wall_seconds: report.wall.as_secs_f64(),
                            served,
                            discount_spend: spend,
                            fee_paid,
                            fee_savings_ratio: if fee_paid > 0.0 { spend / fee_paid } else { 0.0 },
                            vrp_objective: vrp_obj,
                            cost_reduction: vrp_obj - report.objective,
                        }
                    }
                    Err(err) => ExperimentRow {
                        row_type: "run",
                        seed: Some(seed),
                        customers: cfg.customers,
                        vehicles: cfg.vehicles,
                        sweep: *sweep,
                        method,
                        status: format!("error: {err}").replace(',', ";"),
                        objective: f64::NAN,
                        iterations: f64::NAN,
                        nodes: f64::NAN,
                        wall_seconds: f64::NAN,
                        served: f64::NAN,
                        discount_spend: f64::NAN,
                        fee_paid: f64::NAN,
                        fee_savings_ratio: f64::NAN,
                        vrp_objective: vrp_obj,
                        cost_reduction: f64::NAN,
                    },
                };
                rows.push(row);
            }
        }
    }

    // aggregated means per (sweep value, method) over clean runs
    let mut means = Vec::new();
    for sweep in &sweep_points {
        for &method in &cfg.methods {
            let group: Vec<&ExperimentRow> = rows
                .iter()
                .filter(|r| r.method == method && r.sweep == *sweep && r.status == "ok")
                .collect();
            if group.is_empty() {
                continue;
            }
            let n = group.len() as f64;
            let mean = |f: fn(&ExperimentRow) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / n;
            means.push(ExperimentRow {
                row_type: "mean",
                seed: None,
                customers: cfg.customers,
                vehicles: cfg.vehicles,
                sweep: *sweep,
                method,
                status: format!("n={}", group.len()),
                objective: mean(|r| r.objective),
                iterations: mean(|r| r.iterations),
                nodes: mean(|r| r.nodes),
                wall_seconds: mean(|r| r.wall_seconds),
                served: mean(|r| r.served),
                discount_spend: mean(|r| r.discount_spend),
                fee_paid: mean(|r| r.fee_paid),
                fee_savings_ratio: mean(|r| r.fee_savings_ratio),
                vrp_objective: mean(|r| r.vrp_objective),
                cost_reduction: mean(|r| r.cost_reduction),
            });
        }
    }
    rows.extend(means);
    Ok(rows)
}

pub fn rows_to_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv());
        out.push('\n');
    }
    out
}

/// One cut per line: kind, provenance, rhs, then the sparse nonzero
/// coefficients over theta, x and omega.
pub fn cut_log(cuts: &[Cut]) -> String {
    let mut out = String::new();
    for cut in cuts {
        let kind = match cut.kind {
            CutKind::Optimality => "optimality",
            CutKind::Feasibility => "feasibility",
        };
        let phase = match cut.provenance.phase {
            CutPhase::Fractional => "fractional",
            CutPhase::Integer => "integer",
        };
        let source = match cut.provenance.source {
            CutSource::Classic => "classic",
            CutSource::Strengthened => "strengthened",
        };
        let _ = write!(
            out,
            "{kind} iter={} phase={phase} source={source} theta={} rhs={:.12}",
            cut.provenance.iteration, cut.theta_coeff, cut.rhs
        );
        for (idx, &c) in cut.x_coeffs.iter().enumerate() {
            if c != 0.0 {
                let _ = write!(out, " x[{idx}]={c:.12}");
            }
        }
        for (ci, cs) in cut.omega_coeffs.iter().enumerate() {
            for (m, &c) in cs.iter().enumerate() {
                if c != 0.0 {
                    let _ = write!(out, " w[{ci}][{m}]={c:.12}");
                }
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parse_coords_basic() {
        let f = write_temp("0 1.5 2.0\n1 3.0 4.0\n");
        let nodes = parse_coords(f.path()).unwrap();
        assert_eq!(nodes.len(), 2);
        assert_eq!(nodes[1].x, 3.0);
    }

    #[test]
    fn parse_coords_comments_and_blanks() {
        let f = write_temp("# map\n\n0 1 2\n  # trailing\n1 2 3 # inline\n");
        assert_eq!(parse_coords(f.path()).unwrap().len(), 2);
    }

    #[test]
    fn parse_coords_reports_line() {
        let f = write_temp("x y\n");
        match parse_coords(f.path()) {
            Err(HarnessError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    fn toy_map(n: usize) -> Vec<Node> {
        (0..n)
            .map(|i| Node {
                id: i,
                x: (i as f64 * 7.3) % 50.0,
                y: (i as f64 * 13.7) % 50.0,
                kind: NodeKind::Customer,
            })
            .collect()
    }

    #[test]
    fn sampling_is_deterministic() {
        let map = toy_map(40);
        let p = SampleParams { cost: CostParams { speed: 30.0, ..Default::default() }, ..Default::default() };
        let a = sample_instance(&map, 5, 2, 42, &p).unwrap();
        let b = sample_instance(&map, 5, 2, 42, &p).unwrap();
        assert_eq!(a, b);
        let c = sample_instance(&map, 5, 2, 43, &p).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sampling_respects_overrides() {
        let map = toy_map(40);
        let mut p = SampleParams::default();
        p.gamma = (5.0, -5.0);
        let inst = sample_instance(&map, 3, 2, 7, &p).unwrap();
        assert_eq!(inst.inconvenience[0].segments()[0].slope, 5.0);
        assert_eq!(inst.inconvenience[0].segments()[1].slope, -5.0);
        // windows are reachable by construction
        assert!(crate::model::validate_instance(&inst).is_empty());
    }

    #[test]
    fn sampling_needs_enough_nodes() {
        let map = toy_map(3);
        assert!(sample_instance(&map, 5, 1, 0, &SampleParams::default()).is_err());
    }

    #[test]
    fn config_round_trip() {
        let text = "nodes=data/n.txt\ncustomers=4\nvehicles=2\nrepetitions=3\nseed=9\n\
                    methods=monolithic,vrp\nsweep=delta_bar\nsweep_values=0.5,1.0,1.5\n\
                    fee=9.05\nc_v=99\nGamma=1\nspeed=60\ndelta_bar=1.0\ngap=1e-4\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.customers, 4);
        assert_eq!(cfg.methods, vec![Method::Monolithic, Method::Vrp]);
        let (name, values) = cfg.sweep.as_ref().unwrap();
        assert_eq!(name.name(), "delta_bar");
        assert_eq!(values.len(), 3);
    }

    #[test]
    fn config_rejects_unknown_keys_and_orphan_sweeps() {
        assert!(parse_config("bogus=1\n").is_err());
        assert!(parse_config("sweep_values=1,2\n").is_err());
        assert!(parse_config("sweep=gamma\n").is_err());
    }

    #[test]
    fn instance_json_round_trip() {
        let map = toy_map(20);
        let inst = sample_instance(&map, 3, 1, 5, &SampleParams::default()).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        save_instance(&inst, f.path()).unwrap();
        let back = load_instance(f.path()).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn experiment_rows_and_reproducibility() {
        let map = toy_map(30);
        let map_file = {
            let mut s = String::new();
            for n in &map {
                s.push_str(&format!("{} {} {}\n", n.id, n.x, n.y));
            }
            write_temp(&s)
        };
        let cfg = ExperimentConfig {
            nodes_file: map_file.path().to_path_buf(),
            customers: 3,
            vehicles: 1,
            repetitions: 2,
            seed: 11,
            methods: vec![Method::Monolithic, Method::Oracle],
            sweep: None,
            sample: SampleParams {
                cost: CostParams { speed: 30.0, ..Default::default() },
                ..Default::default()
            },
            gap_tol: 1e-4,
            max_iters: 200,
            out: None,
        };
        let rows = run_experiment(&cfg).unwrap();
        // 2 reps x 2 methods runs + 2 mean rows
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.status.starts_with("ok") || r.row_type == "mean"));
        // monolithic and oracle agree per seed
        for rep in 0..2 {
            let per: Vec<&ExperimentRow> =
                rows.iter().filter(|r| r.seed == Some(11 + rep)).collect();
            assert!((per[0].objective - per[1].objective).abs() < 1e-6);
        }
        // reruns reproduce every non-timing column
        let again = run_experiment(&cfg).unwrap();
        for (a, b) in rows.iter().zip(&again) {
            let strip = |r: &ExperimentRow| {
                let mut line = r.to_csv();
                let fields: Vec<String> = line.split(',').map(String::from).collect();
                line = fields
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != 11) // wall_seconds
                    .map(|(_, f)| f.clone())
                    .collect::<Vec<_>>()
                    .join(",");
                line
            };
            assert_eq!(strip(a), strip(b));
        }
        let csv = rows_to_csv(&rows);
        assert!(csv.starts_with(CSV_HEADER));
    }
}
