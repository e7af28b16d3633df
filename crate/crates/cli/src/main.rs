use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use trustnum_core::interference::{build_conflict_graph, CapacityRegion};
use trustnum_core::optimizer::SchedulePolicy;
use trustnum_core::oracle::{brute_force, OracleConfig};
use trustnum_core::sim::{self, format_g6, trust_trajectory, Scenario, SimError};
use trustnum_core::topology::{routing_matrix, LinkId};
use trustnum_core::trust::trust_incidence;

const EXIT_VALIDATION: u8 = 2;
const EXIT_NO_CONVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "trustnum",
    version,
    about = "Trust-aware multipath rate allocation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write CSV traces and SVG charts.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        schedule: Option<Schedule>,
        /// Start every period from the initial prices.
        #[arg(long)]
        cold_start: bool,
        /// Maximum source rate in kbps, replacing the scenario's sweep.
        #[arg(long)]
        rs: Option<f64>,
    },
    /// Compare the solver against the brute-force oracle (tiny scenarios).
    Verify {
        scenario: PathBuf,
        #[arg(long, default_value_t = 1e-2)]
        tolerance: f64,
    },
    /// Print the conflict graph, capacity region and trust matrices.
    Inspect { scenario: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Schedule {
    Exact,
    Greedy,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let validation = e.chain().any(|c| {
                matches!(
                    c.downcast_ref::<SimError>(),
                    Some(SimError::Validation { .. } | SimError::Parse(_))
                )
            });
            ExitCode::from(if validation { EXIT_VALIDATION } else { 1 })
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            scenario,
            out,
            schedule,
            cold_start,
            rs,
        } => cmd_run(&scenario, &out, schedule, cold_start, rs),
        Command::Verify {
            scenario,
            tolerance,
        } => cmd_verify(&scenario, tolerance),
        Command::Inspect { scenario } => cmd_inspect(&scenario),
    }
}

fn load(path: &Path) -> Result<Scenario> {
    sim::load_scenario(path).with_context(|| format!("loading {}", path.display()))
}

fn cmd_run(
    path: &Path,
    out: &Path,
    schedule: Option<Schedule>,
    cold_start: bool,
    rs: Option<f64>,
) -> Result<ExitCode> {
    let mut scenario = load(path)?;
    if let Some(s) = schedule {
        scenario = scenario.with_schedule(match s {
            Schedule::Exact => SchedulePolicy::Exact,
            Schedule::Greedy => SchedulePolicy::Greedy,
        });
    }
    if cold_start {
        scenario.warm_start = false;
    }
    let variants = match rs {
        Some(r) => vec![scenario.with_max_rate(r)?],
        None => scenario.variants()?,
    };
    let nested = variants.len() > 1;

    let mut all_converged = true;
    for v in &variants {
        let dir = if nested {
            out.join(format!("rs_{}", format_g6(v.flows[0].max_rate)))
        } else {
            out.to_path_buf()
        };
        let trace = sim::run(v)?;
        sim::emit_csv(&trace, &dir)?;
        sim::emit_charts(&trace, &dir)?;
        println!(
            "{} R={} -> {}",
            trace.scenario,
            trace
                .max_rates
                .iter()
                .map(|&r| format_g6(r))
                .collect::<Vec<_>>()
                .join(","),
            dir.display()
        );
        for p in &trace.periods {
            let rates = p
                .solution
                .as_ref()
                .map(|s| {
                    s.primal
                        .x
                        .concat()
                        .iter()
                        .map(|&x| format!("{x:.3}"))
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .unwrap_or_default();
            match (&p.solution, &p.error) {
                (Some(s), None) => println!(
                    "  period {}: U={:.5} gap={:.2e} iter={} x=[{rates}]",
                    p.period,
                    s.diagnostics.primal,
                    s.diagnostics.relative_gap(),
                    s.iterations
                ),
                (_, Some(e)) => println!("  period {}: {e} x=[{rates}]", p.period),
                (None, None) => unreachable!(),
            }
        }
        all_converged &= trace.all_converged();
    }
    if all_converged {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("error: solver did not converge in every period");
        Ok(ExitCode::from(EXIT_NO_CONVERGENCE))
    }
}

fn cmd_verify(path: &Path, tolerance: f64) -> Result<ExitCode> {
    let scenario = load(path)?;
    let mut ok = true;
    let mut converged = true;
    for v in scenario.variants()? {
        let net = &v.network;
        let cg = build_conflict_graph(net, &v.interference)?;
        let region = CapacityRegion::enumerate(net, &cg, v.enumeration_cap)?;
        let mut cfg = OracleConfig::for_network(net, v.kappa);
        cfg.x_floor = v.solver.x_floor;
        cfg.sigma_min = v.solver.sigma_min;
        cfg.sigma_max = v.solver.sigma_max(net);
        let trace = sim::run(&v)?;
        for (p, trust) in trace.periods.iter().zip(trust_trajectory(&v)?) {
            let oracle = brute_force(net, &v.flows, &trust, &region, &cfg)?;
            let Some(s) = &p.solution else {
                bail!(
                    "period {}: {}",
                    p.period,
                    p.error.as_deref().unwrap_or("no solution")
                );
            };
            converged &= s.convergence.is_some();
            let u = s.diagnostics.primal;
            let rel = (u - oracle.objective).abs() / oracle.objective.abs().max(1.0);
            let pass = rel <= tolerance;
            ok &= pass;
            println!(
                "period {}: solver U={u:.5} oracle U={:.5} rel diff={rel:.2e} gap={:.2e} [{}]",
                p.period,
                oracle.objective,
                s.diagnostics.relative_gap(),
                if pass { "ok" } else { "MISMATCH" }
            );
        }
    }
    if !converged {
        return Ok(ExitCode::from(EXIT_NO_CONVERGENCE));
    }
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_inspect(path: &Path) -> Result<ExitCode> {
    let s = load(path)?;
    let net = &s.network;
    println!(
        "scenario {}: {} nodes, {} links",
        s.name,
        net.node_count(),
        net.link_count()
    );
    for (e, l) in net.links().iter().enumerate() {
        println!(
            "  {} {} capacity {}",
            LinkId(e),
            net.link_label(LinkId(e)),
            format_g6(l.capacity)
        );
    }
    let cg = build_conflict_graph(net, &s.interference)?;
    println!("conflict graph ({:?}):", s.interference);
    for (a, b) in cg.edges() {
        println!("  {a} -- {b}");
    }
    let region = CapacityRegion::enumerate(net, &cg, s.enumeration_cap)?;
    println!("independent sets: {}", region.len());
    for set in region.sets() {
        let names: Vec<String> = set.iter().map(|l| l.to_string()).collect();
        println!("  {{{}}}", names.join(", "));
    }
    for f in &s.flows {
        println!(
            "flow {}: {} paths, R={}",
            f.name,
            f.paths.len(),
            format_g6(f.max_rate)
        );
        let rm = routing_matrix(f, net);
        for k in 0..rm.rows() {
            let row: Vec<String> = rm.row(k).iter().map(u8::to_string).collect();
            println!("  routing {}{}: {}", f.name, k + 1, row.join(" "));
        }
    }
    for (p, trust) in trust_trajectory(&s)?.iter().enumerate() {
        let vals: Vec<String> = trust.values().iter().map(|&v| format_g6(v)).collect();
        println!("period {} trust: {}", p + 1, vals.join(" "));
        for f in &s.flows {
            let tm = trust_incidence(trust, f, net);
            for k in 0..tm.rows() {
                let row: Vec<String> = tm.row(k).iter().map(|&v| format_g6(v)).collect();
                println!("  {}{}: {}", f.name, k + 1, row.join(" "));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
