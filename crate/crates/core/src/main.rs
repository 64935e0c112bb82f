use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rg_sched::engine::{Engine, LoOverrunPolicy};
use rg_sched::io::{parse_trace, parse_workload, render_human, render_machine, render_trace, WorkloadFile};
use rg_sched::monitor::{check_trace, ModeUpRule, Report};
use rg_sched::planner::oracle::{budget_from_env, edf_meets_deadlines};
use rg_sched::planner::{brute_force_feasible, edf_schedulability, edf_vd_plan, OracleError, OracleJob, PlanConfig};
use rg_sched::time::Tick;
use rg_sched::workload::{drain_horizon, generate_releases};

#[derive(Parser)]
#[command(name = "rg-sched", version, about = "EDF / EDF-VD scheduler simulator and trace monitor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the schedulability analysis on a workload's task set.
    Plan {
        workload: PathBuf,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Simulate a workload, write its trace and check it.
    Simulate {
        workload: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Check a trace file against a workload's arrival model and configuration.
    Check {
        trace: PathBuf,
        #[arg(long)]
        workload: PathBuf,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Exhaustive feasibility search over the workload's generated jobs.
    Oracle {
        workload: PathBuf,
        #[command(flatten)]
        opts: Overrides,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Human,
    Machine,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeUpArg {
    EmptyActive,
    LoOnlyRemaining,
}

#[derive(Clone, Copy, ValueEnum)]
enum LoPolicyArg {
    Drop,
    Background,
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    rho: Option<u64>,
    #[arg(long = "rho-s")]
    rho_s: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long, overrides_with = "no_ft")]
    ft: bool,
    #[arg(long = "no-ft", overrides_with = "ft")]
    no_ft: bool,
    #[arg(long = "mode-up-rule", value_enum)]
    mode_up_rule: Option<ModeUpArg>,
    #[arg(long = "lo-overrun-policy", value_enum)]
    lo_overrun_policy: Option<LoPolicyArg>,
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
}

impl Overrides {
    fn apply(&self, file: &mut WorkloadFile) {
        let e = &mut file.engine;
        if let Some(v) = self.rho {
            e.rho = Tick(v);
        }
        if let Some(v) = self.rho_s {
            e.rho_s = Tick(v);
        }
        if self.ft {
            e.ft_enabled = true;
        }
        if self.no_ft {
            e.ft_enabled = false;
        }
        if let Some(r) = self.mode_up_rule {
            e.mode_up_rule = match r {
                ModeUpArg::EmptyActive => ModeUpRule::EmptyActive,
                ModeUpArg::LoOnlyRemaining => ModeUpRule::LoOnlyRemaining,
            };
        }
        if let Some(p) = self.lo_overrun_policy {
            e.lo_overrun_policy = match p {
                LoPolicyArg::Drop => LoOverrunPolicy::Drop,
                LoPolicyArg::Background => LoOverrunPolicy::Background,
            };
        }
        if let Some(s) = self.seed {
            file.seed = s;
        }
        if let Some(h) = self.horizon {
            file.horizon = Tick(h);
        }
    }
}

/// Error that ends the process with exit code 1.
struct Fatal(String);

fn read(path: &Path) -> Result<String, Fatal> {
    fs::read_to_string(path).map_err(|e| Fatal(format!("{}: {e}", path.display())))
}

fn load_workload(path: &Path, opts: &Overrides) -> Result<WorkloadFile, Fatal> {
    let mut file = parse_workload(&read(path)?).map_err(|e| Fatal(format!("{}: {e}", path.display())))?;
    opts.apply(&mut file);
    Ok(file)
}

fn print_report(report: &Report, format: Format) {
    match format {
        Format::Human => print!("{}", render_human(report)),
        Format::Machine => print!("{}", render_machine(report)),
    }
}

fn plan(path: &Path, opts: &Overrides) -> Result<i32, Fatal> {
    let file = load_workload(path, opts)?;
    let ts = file.spec().taskset;
    let cfg = PlanConfig::default();
    let has_hi = ts.tasks.iter().any(|t| t.job_type.is_hi());
    if file.engine.ft_enabled && has_hi {
        let vd = edf_vd_plan(&ts, &cfg);
        match opts.format {
            Format::Human => {
                println!("{}", vd.verdict);
                if let (Some((k, g)), Some(planned)) = (vd.scale, &vd.taskset) {
                    println!("virtual deadline scale {k}/{g}");
                    for t in planned.tasks.iter().filter(|t| t.job_type.is_hi()) {
                        let hi = t.job_type.hi.as_ref().expect("filtered to HI");
                        println!("  {}: D = {}, AD = {}", t.name(), t.job_type.deadline, hi.ad);
                    }
                }
            }
            Format::Machine => println!("{}", serde_json::to_string_pretty(&vd).expect("plan serializes")),
        }
        Ok(vd.verdict.exit_code())
    } else {
        let v = edf_schedulability(&ts, &cfg);
        match opts.format {
            Format::Human => println!("{v}"),
            Format::Machine => println!("{}", serde_json::to_string_pretty(&v).expect("verdict serializes")),
        }
        Ok(v.exit_code())
    }
}

fn simulate(path: &Path, out: &Path, opts: &Overrides) -> Result<i32, Fatal> {
    let file = load_workload(path, opts)?;
    let spec = file.spec();
    let releases = generate_releases(&spec).map_err(|e| Fatal(e.to_string()))?;
    let horizon = drain_horizon(&spec, &releases);
    let mut engine = Engine::with_releases(file.engine.clone(), releases).map_err(|e| Fatal(e.to_string()))?;
    engine.run(horizon).map_err(|e| Fatal(e.to_string()))?;
    let trace = engine.into_trace();
    fs::write(out, render_trace(&trace)).map_err(|e| Fatal(format!("{}: {e}", out.display())))?;
    let report = check_trace(&trace, &spec.arrival_model(), &file.engine.monitor_config());
    print_report(&report, opts.format);
    Ok(report.exit_code())
}

fn check(trace_path: &Path, workload: &Path, opts: &Overrides) -> Result<i32, Fatal> {
    let file = load_workload(workload, opts)?;
    let trace = parse_trace(&read(trace_path)?).map_err(|e| Fatal(format!("{}: {e}", trace_path.display())))?;
    let known: BTreeSet<&str> = file.tasks.iter().map(|t| t.name()).collect();
    let unknown: Vec<String> = trace
        .job_types()
        .into_keys()
        .filter(|n| !known.contains(n.as_str()))
        .collect();
    if !unknown.is_empty() {
        return Err(Fatal(format!("trace names tasks missing from the workload: {}", unknown.join(", "))));
    }
    let report = check_trace(&trace, &file.spec().arrival_model(), &file.engine.monitor_config());
    print_report(&report, opts.format);
    Ok(report.exit_code())
}

fn oracle(path: &Path, opts: &Overrides) -> Result<i32, Fatal> {
    let file = load_workload(path, opts)?;
    let releases = generate_releases(&file.spec()).map_err(|e| Fatal(e.to_string()))?;
    let jobs: Vec<OracleJob> = releases
        .iter()
        .map(|r| OracleJob {
            release: r.release,
            demand: r.demand,
            deadline: r.release + r.job_type.deadline,
        })
        .collect();
    let horizon = jobs.iter().map(|j| j.deadline).max().unwrap_or_default();
    let found = match brute_force_feasible(&jobs, horizon, budget_from_env()) {
        Ok(f) => f,
        Err(OracleError::TooLarge { budget }) => {
            eprintln!("oracle too large: more than {budget} states");
            return Ok(3);
        }
    };
    if !found.feasible {
        println!("infeasible ({} jobs, {} states explored)", jobs.len(), found.states);
        return Ok(2);
    }
    let edf = edf_meets_deadlines(&jobs);
    if edf {
        println!("feasible; EDF also feasible");
    } else {
        println!("feasible; EDF misses a deadline");
    }
    let witness = found.witness.unwrap_or_default();
    let label = |slot: Option<usize>| match slot {
        Some(i) => format!("{}@{}", releases[i].job_type.name, releases[i].release),
        None => "idle".to_owned(),
    };
    let mut start = 0;
    for t in 1..=witness.len() {
        if t == witness.len() || witness[t] != witness[start] {
            println!("  {start}..{t} {}", label(witness[start]));
            start = t;
        }
    }
    Ok(if edf { 0 } else { 4 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Plan { workload, opts } => plan(workload, opts),
        Command::Simulate { workload, out, opts } => simulate(workload, out, opts),
        Command::Check { trace, workload, opts } => check(trace, workload, opts),
        Command::Oracle { workload, opts } => oracle(workload, opts),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(Fatal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
