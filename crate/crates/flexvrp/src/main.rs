//! Command-line front end: sample instances, solve them with any method,
//! compare methods, and run configured experiment sweeps.

use clap::{Parser, Subcommand};
use flexvrp::decomposition::{DecompError, Method, RunOpts, RunReport};
use flexvrp::formulations::{build_mp, build_p2, build_vrp_baseline};
use flexvrp::harness::{
    cut_log, load_instance, parse_config, parse_coords, parse_method, rows_to_csv, run_experiment,
    sample_instance, save_instance, solve_with_method, HarnessError, SampleParams,
};
use flexvrp::milp::MilpError;
use flexvrp::model::Instance;
use flexvrp::oracle::OracleError;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "flexvrp", version, about = "Exact routing with negotiable flexible time windows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a random instance from a coordinate map and write it as JSON.
    Gen {
        /// Coordinate map, one `id x y` line per node.
        #[arg(long)]
        nodes: PathBuf,
        #[arg(long)]
        customers: usize,
        #[arg(long)]
        vehicles: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output instance file (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Optional key=value config overriding costs and the inconvenience family.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Solve one instance file with one method.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        /// monolithic | gbd | bdd | vrp | oracle | oracle-vrp
        #[arg(long, default_value = "monolithic")]
        method: String,
        /// Write the solved model in LP-style text to this path.
        #[arg(long)]
        dump_model: Option<PathBuf>,
        /// Write the cut log (decomposition methods) to this path.
        #[arg(long)]
        dump_cuts: Option<PathBuf>,
        /// Relative convergence gap for the decomposition methods.
        #[arg(long, default_value_t = 1e-4)]
        gap: f64,
        #[arg(long, default_value_t = 200)]
        max_iters: usize,
    },
    /// Solve one instance with several methods and report the agreement.
    Compare {
        #[arg(long)]
        instance: PathBuf,
        /// Comma-separated method list.
        #[arg(long, default_value = "monolithic,gbd,bdd")]
        methods: String,
        #[arg(long, default_value_t = 1e-4)]
        gap: f64,
        #[arg(long, default_value_t = 200)]
        max_iters: usize,
    },
    /// Run a configured experiment and write its CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(classify(&err))
        }
    }
}

/// 1 for solver limits and numerical trouble, 2 for bad input.
fn classify(err: &HarnessError) -> u8 {
    match err {
        HarnessError::Parse { .. }
        | HarnessError::Config(_)
        | HarnessError::Io(_)
        | HarnessError::Json(_) => 2,
        HarnessError::Oracle(OracleError::TooLarge { .. }) => 2,
        HarnessError::Oracle(_) => 1,
        HarnessError::Solve(DecompError::Build(_)) => 2,
        HarnessError::Solve(DecompError::Milp(MilpError::Model(_))) => 2,
        HarnessError::Solve(_) => 1,
    }
}

fn dispatch(cmd: Command) -> Result<(), HarnessError> {
    match cmd {
        Command::Gen { nodes, customers, vehicles, seed, out, config } => {
            let map = parse_coords(&nodes)?;
            let sample = match config {
                Some(path) => parse_config(&fs::read_to_string(path)?)?.sample,
                None => SampleParams::default(),
            };
            let inst = sample_instance(&map, customers, vehicles, seed, &sample)?;
            save_instance(&inst, &out)?;
            println!(
                "wrote {} ({} customers, {} vehicles, seed {seed})",
                out.display(),
                customers,
                vehicles
            );
            Ok(())
        }
        Command::Solve { instance, method, dump_model, dump_cuts, gap, max_iters } => {
            let inst = load_instance(&instance)?;
            let method = parse_method(&method)?;
            let opts = RunOpts { gap_tol: gap, max_iters, ..RunOpts::default() };
            if let Some(path) = &dump_model {
                dump_model_for(&inst, method, path)?;
            }
            let report = solve_with_method(&inst, method, &opts)?;
            print_report(&report, &inst);
            if let Some(path) = dump_cuts {
                fs::write(&path, cut_log(&report.cuts))?;
                println!("cut log: {}", path.display());
            }
            Ok(())
        }
        Command::Compare { instance, methods, gap, max_iters } => {
            let inst = load_instance(&instance)?;
            let opts = RunOpts { gap_tol: gap, max_iters, ..RunOpts::default() };
            let methods: Vec<Method> =
                methods.split(',').map(parse_method).collect::<Result<_, _>>()?;
            let mut reports = Vec::new();
            println!(
                "{:<12} {:>14} {:>6} {:>10} {:>8}",
                "method", "objective", "iters", "wall (s)", "served"
            );
            for &m in &methods {
                let report = solve_with_method(&inst, m, &opts)?;
                println!(
                    "{:<12} {:>14.6} {:>6} {:>10.3} {:>8}",
                    m.name(),
                    report.objective,
                    report.iterations,
                    report.wall.as_secs_f64(),
                    report.served_count()
                );
                reports.push(report);
            }
            let mut worst: f64 = 0.0;
            for a in &reports {
                for b in &reports {
                    let rel =
                        (a.objective - b.objective).abs() / (1.0_f64).max(a.objective.abs());
                    worst = worst.max(rel);
                }
            }
            println!("max pairwise relative difference: {worst:.3e}");
            Ok(())
        }
        Command::Sweep { config } => {
            let cfg = parse_config(&fs::read_to_string(&config)?)?;
            let rows = run_experiment(&cfg)?;
            let csv = rows_to_csv(&rows);
            match &cfg.out {
                Some(path) => {
                    fs::write(path, &csv)?;
                    println!("wrote {} rows to {}", rows.len(), path.display());
                }
                None => print!("{csv}"),
            }
            Ok(())
        }
    }
}

fn dump_model_for(inst: &Instance, method: Method, path: &PathBuf) -> Result<(), HarnessError> {
    let fm = match method {
        Method::Monolithic | Method::Oracle => build_p2(inst),
        Method::Vrp | Method::OracleVrp => build_vrp_baseline(inst),
        Method::Gbd | Method::Bdd => build_mp(inst),
    }
    .map_err(DecompError::Build)
    .map_err(HarnessError::Solve)?;
    fs::write(path, fm.model.dump_lp())?;
    println!("model dump: {}", path.display());
    Ok(())
}

fn print_report(report: &RunReport, inst: &Instance) {
    println!("method:     {}", report.method.name());
    println!("objective:  {:.6}", report.objective);
    println!("iterations: {}", report.iterations);
    println!("wall time:  {:.3}s", report.wall.as_secs_f64());
    if !report.cuts.is_empty() {
        println!("cuts:       {}", report.cuts.len());
    }
    if let (Some(lb), Some(ub)) = (report.lb_trace.last(), report.ub_trace.last()) {
        println!("bounds:     [{lb:.6}, {ub:.6}]");
    }
    for route in &report.routes {
        let hops: Vec<String> = route.nodes.iter().map(|n| n.to_string()).collect();
        println!("vehicle {}: {}", route.vehicle, hops.join(" -> "));
    }
    for term in &report.terms {
        if term.served {
            println!(
                "customer {}: t = {:.4}, discount rate = {:.4}, flexibility = {:.4} (tau {:.4})",
                term.node,
                term.t,
                term.q,
                term.delta,
                inst.customer_index(term.node).map(|ci| inst.tau[ci]).unwrap_or(f64::NAN)
            );
        } else {
            println!("customer {}: unserved", term.node);
        }
    }
}
