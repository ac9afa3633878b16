use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use gnet::all_equilibria::{all_equilibria, all_equilibria_decomposed, build_poly_system, SolverConfig};
use gnet::decomposition::{decompose, project};
use gnet::equilibrium::{is_nash_prop3, NASH_TOL};
use gnet::expectations::Evaluator;
use gnet::extensive_form::{ef_to_gframe, oracle_support_enumeration, AgentForm};
use gnet::first_equilibrium::{first_equilibrium_decomposed, track_first_equilibrium, TrackerConfig};
use gnet::format::{parse_ef, parse_game, parse_solution, print_game, profile_from_record, write_record};
use gnet::model::{information_sets, info_set_label, parameter_count, validate};
use gnet::{GNet, Layout};

const EXIT_INVALID: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_USAGE: u8 = 64;

/// Solve game networks for first and all Nash equilibria.
#[derive(Parser)]
#[command(name = "gnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a game and check its structure.
    Validate { file: PathBuf },
    /// Summarize components, information sets, parameter counts and degrees.
    Info { file: PathBuf },
    /// Track the homotopy from the uniform profile to the first equilibrium.
    SolveFirst {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write one line per accepted step to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0 - 1e-8)]
        endpoint_t: f64,
        /// Track each independent component separately.
        #[arg(long)]
        decompose: bool,
    },
    /// Enumerate equilibria with the total-degree polynomial homotopy.
    SolveAll {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Nash tolerance.
        #[arg(long, default_value_t = NASH_TOL)]
        tol: f64,
        /// Solve each independent component separately.
        #[arg(long)]
        decompose: bool,
    },
    /// Check every profile of a solution file.
    Verify {
        file: PathBuf,
        solution: PathBuf,
        #[arg(long, default_value_t = NASH_TOL)]
        tol: f64,
    },
    /// Convert a game tree to a game network.
    ConvertEf {
        file: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Print the agent form, optionally with its equilibria.
    AgentForm {
        file: PathBuf,
        /// Also list equilibria found by support enumeration.
        #[arg(long)]
        equilibria: bool,
    },
}

/// A failure carrying its exit code; the message goes to stderr.
struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

type Outcome = Result<(String, u8), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| fail(EXIT_INVALID, format!("{}: {e}", path.display())))
}

fn is_tree(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "ef")
}

/// Load a game network, converting game trees on the fly.
fn load(path: &Path) -> Result<GNet, Failure> {
    let text = read(path)?;
    let at = |e: &dyn std::fmt::Display| fail(EXIT_INVALID, format!("{}: {e}", path.display()));
    let net = if is_tree(path) {
        let tree = parse_ef(&text).map_err(|e| at(&e))?;
        ef_to_gframe(&tree).map_err(|e| at(&e))?.net
    } else {
        parse_game(&text).map_err(|e| at(&e))?
    };
    Ok(net)
}

fn load_valid(path: &Path) -> Result<GNet, Failure> {
    let net = load(path)?;
    net.ensure_valid().map_err(|e| fail(EXIT_INVALID, format!("{}: {e}", path.display())))?;
    Ok(net)
}

fn solver_failure(e: gnet::Error) -> Failure {
    fail(EXIT_SOLVER, e.to_string())
}

fn cmd_validate(file: &Path) -> Outcome {
    let net = load(file)?;
    let violations = validate(&net);
    let mut out = String::new();
    writeln!(out, "command: validate").unwrap();
    writeln!(out, "status: {}", if violations.is_empty() { "valid" } else { "invalid" }).unwrap();
    for v in &violations {
        writeln!(out, "violation: {v}").unwrap();
    }
    Ok((out, if violations.is_empty() { 0 } else { EXIT_INVALID }))
}

fn cmd_info(file: &Path) -> Outcome {
    let net = load_valid(file)?;
    let mut out = String::new();
    let (compact, full) = parameter_count(&net);
    let layout = Layout::new(&net);
    writeln!(out, "command: info").unwrap();
    writeln!(out, "players: {}", net.players.join(" ")).unwrap();
    writeln!(out, "nodes: {}", net.nodes.len()).unwrap();
    writeln!(out, "info_sets: {}", information_sets(&net).len()).unwrap();
    writeln!(out, "free_info_sets: {}", layout.free_blocks.len()).unwrap();
    writeln!(out, "parameters_compact: {compact}").unwrap();
    writeln!(out, "parameters_full: {full}").unwrap();
    let degree = |net: &GNet| -> Result<(Vec<u32>, u128), Failure> {
        let ev = Evaluator::new(net).map_err(solver_failure)?;
        let sys = build_poly_system(&ev).map_err(solver_failure)?;
        Ok((sys.degrees.clone(), sys.total_degree()))
    };
    let (degrees, total) = degree(&net)?;
    writeln!(out, "degrees: {}", join(&degrees)).unwrap();
    writeln!(out, "total_degree: {total}").unwrap();
    let comps = decompose(&net);
    writeln!(out, "components: {}", comps.len()).unwrap();
    let mut sum = 0u128;
    for (i, c) in comps.iter().enumerate() {
        let names: Vec<&str> = c.nodes.iter().map(|k| net.nodes[k.0].name.as_str()).collect();
        let (_, d) = degree(&project(&net, c))?;
        sum += d;
        writeln!(out, "component: {} nodes={} total_degree={d}", i + 1, names.join(",")).unwrap();
    }
    writeln!(out, "decomposed_paths: {sum}").unwrap();
    Ok((out, 0))
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

fn trace_path(explicit: Option<&Path>, file: &Path) -> Option<PathBuf> {
    if let Some(p) = explicit {
        return Some(p.to_path_buf());
    }
    let dir = std::env::var_os("GNET_TRACE_DIR")?;
    let stem = file.file_stem().map_or_else(|| "game".into(), |s| s.to_string_lossy().into_owned());
    Some(Path::new(&dir).join(format!("{stem}.first.trace")))
}

fn cmd_solve_first(file: &Path, seed: u64, trace: Option<&Path>, endpoint_t: f64, split: bool) -> Outcome {
    let net = load_valid(file)?;
    let cfg = TrackerConfig { rng_seed: seed, endpoint_t, ..TrackerConfig::default() };
    cfg.validate().map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
    let started = Instant::now();
    let mut out = String::new();
    writeln!(out, "command: solve-first").unwrap();
    writeln!(out, "seed: {seed}").unwrap();
    writeln!(out, "endpoint_t: {endpoint_t:e}").unwrap();
    let (profile, runs) = if split {
        let res = first_equilibrium_decomposed(&net, &cfg).map_err(solver_failure)?;
        (res.profile, res.components.into_iter().map(|r| r.result).collect::<Vec<_>>())
    } else {
        let res = track_first_equilibrium(&net, &cfg).map_err(solver_failure)?;
        (res.profile.clone(), vec![res])
    };
    writeln!(out, "components: {}", runs.len()).unwrap();
    for (i, r) in runs.iter().enumerate() {
        writeln!(
            out,
            "component: {} steps={} rejected={} newton={} perturbation={}",
            i + 1,
            r.path.accepted_steps(),
            r.path.rejected_steps,
            r.path.newton_iterations,
            r.perturbation.map_or("none".to_string(), |s| format!("{s:e}"))
        )
        .unwrap();
        if let Some(v) = &r.unperturbed {
            writeln!(out, "unperturbed_nash: {} worst_violation={:.6e}", v.is_nash, v.worst_violation).unwrap();
        }
    }
    if let Some(path) = trace_path(trace, file) {
        let text: String = runs.iter().map(|r| r.path.trace()).collect();
        fs::write(&path, text).map_err(|e| fail(EXIT_SOLVER, format!("{}: {e}", path.display())))?;
    }
    let ev = Evaluator::new(&net).map_err(solver_failure)?;
    let verdict = is_nash_prop3(&ev, &profile, NASH_TOL).map_err(solver_failure)?;
    let class = if verdict.is_nash { "robust-candidate" } else { "not-nash" };
    let fields = [
        ("class", class.to_string()),
        ("nash", verdict.is_nash.to_string()),
        ("worst_violation", format!("{:.6e}", verdict.worst_violation)),
    ];
    write_record(&mut out, &net, 1, &fields, &profile);
    eprintln!("elapsed: {:.3} s", started.elapsed().as_secs_f64());
    Ok((out, if verdict.is_nash { 0 } else { EXIT_SOLVER }))
}

fn cmd_solve_all(file: &Path, seed: u64, tol: f64, split: bool) -> Outcome {
    let net = load_valid(file)?;
    let cfg = SolverConfig { seed, nash_tol: tol, ..SolverConfig::default() };
    let started = Instant::now();
    let mut out = String::new();
    writeln!(out, "command: solve-all").unwrap();
    writeln!(out, "seed: {seed}").unwrap();
    writeln!(out, "tol: {tol:e}").unwrap();
    let (runs, nash, unreachable) = if split {
        let res = all_equilibria_decomposed(&net, &cfg).map_err(solver_failure)?;
        (res.components, res.nash, None)
    } else {
        let res = all_equilibria(&net, &cfg).map_err(solver_failure)?;
        let nash = res.report.nash.clone();
        let unreachable = res.report.nash_unreachable.clone();
        (vec![res], nash, Some(unreachable))
    };
    writeln!(out, "components: {}", runs.len()).unwrap();
    let mut tracked = 0;
    for (i, r) in runs.iter().enumerate() {
        let s = &r.report.stats;
        tracked += r.paths_tracked();
        writeln!(
            out,
            "component: {} total_degree={} paths={} nash={} fixed_point_non_nash={} complex={} infeasible={} diverged={} truncated={}",
            i + 1,
            r.system.total_degree(),
            s.total,
            s.nash,
            s.fixed_point_non_nash,
            s.complex,
            s.infeasible,
            s.diverged,
            s.truncated
        )
        .unwrap();
    }
    writeln!(out, "paths_tracked: {tracked}").unwrap();
    let non_nash: usize = runs.iter().map(|r| r.report.fixed_points_non_nash.len()).sum();
    writeln!(out, "fixed_points_non_nash: {non_nash}").unwrap();
    writeln!(out, "nash_count: {}", nash.len()).unwrap();
    for (k, p) in nash.iter().enumerate() {
        let mut fields = vec![("class", "nash".to_string())];
        if let Some(flags) = unreachable.as_ref().map(|u| &u[k]) {
            if !flags.is_empty() {
                let labels: Vec<String> = flags.iter().map(|&i| info_set_label(&net, i)).collect();
                fields.push(("unreachable", labels.join("; ")));
            }
        }
        write_record(&mut out, &net, k + 1, &fields, p);
    }
    eprintln!("elapsed: {:.3} s", started.elapsed().as_secs_f64());
    Ok((out, 0))
}

fn cmd_verify(file: &Path, solution: &Path, tol: f64) -> Outcome {
    let net = load_valid(file)?;
    let text = read(solution)?;
    let sol = parse_solution(&text).map_err(|e| fail(EXIT_INVALID, format!("{}: {e}", solution.display())))?;
    let ev = Evaluator::new(&net).map_err(solver_failure)?;
    let mut out = String::new();
    writeln!(out, "command: verify").unwrap();
    writeln!(out, "records: {}", sol.records.len()).unwrap();
    let mut all_ok = !sol.records.is_empty();
    for rec in &sol.records {
        let p = profile_from_record(&net, rec).map_err(|e| fail(EXIT_INVALID, format!("{}: {e}", solution.display())))?;
        let v = is_nash_prop3(&ev, &p, tol).map_err(solver_failure)?;
        all_ok &= v.is_nash;
        writeln!(out, "solution: {}", rec.index).unwrap();
        writeln!(out, "nash: {}", v.is_nash).unwrap();
        writeln!(out, "worst_violation: {:.6e}", v.worst_violation).unwrap();
        if !v.is_nash {
            if let Some(w) = v.worst_infoset() {
                writeln!(out, "violating_info_set: {}", info_set_label(&net, w.info)).unwrap();
            }
        }
        for info in v.unreachable() {
            writeln!(out, "unreachable: {}", info_set_label(&net, info)).unwrap();
        }
        writeln!(out, "end: {}", rec.index).unwrap();
    }
    Ok((out, if all_ok { 0 } else { EXIT_INVALID }))
}

fn cmd_convert(file: &Path, output: &Path) -> Outcome {
    let text = read(file)?;
    let at = |e: &dyn std::fmt::Display| fail(EXIT_INVALID, format!("{}: {e}", file.display()));
    let tree = parse_ef(&text).map_err(|e| at(&e))?;
    let conv = ef_to_gframe(&tree).map_err(|e| at(&e))?;
    fs::write(output, print_game(&conv.net)).map_err(|e| fail(EXIT_INVALID, format!("{}: {e}", output.display())))?;
    let mut out = String::new();
    writeln!(out, "command: convert-ef").unwrap();
    writeln!(out, "nodes: {}", conv.net.nodes.len()).unwrap();
    for (label, info) in &conv.info_sets {
        writeln!(out, "info_set: {label} -> {}", info_set_label(&conv.net, *info)).unwrap();
    }
    let (compact, full) = parameter_count(&conv.net);
    writeln!(out, "parameters_compact: {compact}").unwrap();
    writeln!(out, "parameters_full: {full}").unwrap();
    Ok((out, 0))
}

fn cmd_agent_form(file: &Path, equilibria: bool) -> Outcome {
    let agent = if is_tree(file) {
        let text = read(file)?;
        let tree = parse_ef(&text).map_err(|e| fail(EXIT_INVALID, format!("{}: {e}", file.display())))?;
        AgentForm::from_tree(&tree).map_err(|e| fail(EXIT_INVALID, e.to_string()))?
    } else {
        AgentForm::from_net(&load_valid(file)?).map_err(solver_failure)?
    };
    let mut out = String::from("command: agent-form\n");
    out.push_str(&agent.dump());
    if equilibria {
        let eqs = oracle_support_enumeration(&agent).map_err(solver_failure)?;
        writeln!(out, "equilibria: {}", eqs.len()).unwrap();
        for (k, sigma) in eqs.iter().enumerate() {
            writeln!(out, "equilibrium: {}", k + 1).unwrap();
            for (pl, dist) in agent.players.iter().zip(sigma) {
                let parts: Vec<String> = pl.actions.iter().zip(dist).map(|(a, q)| format!("{a}={q:.16e}")).collect();
                writeln!(out, "agent: {} : {}", pl.label, parts.join(", ")).unwrap();
            }
        }
    }
    Ok((out, 0))
}

fn run(cli: Cli) -> Outcome {
    match &cli.command {
        Command::Validate { file } => cmd_validate(file),
        Command::Info { file } => cmd_info(file),
        Command::SolveFirst { file, seed, trace, endpoint_t, decompose } => {
            cmd_solve_first(file, *seed, trace.as_deref(), *endpoint_t, *decompose)
        }
        Command::SolveAll { file, seed, tol, decompose } => cmd_solve_all(file, *seed, *tol, *decompose),
        Command::Verify { file, solution, tol } => cmd_verify(file, solution, *tol),
        Command::ConvertEf { file, output } => cmd_convert(file, output),
        Command::AgentForm { file, equilibria } => cmd_agent_form(file, *equilibria),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok((out, code)) => {
            print!("{out}");
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
