use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use open_dgd::bounds::{
    check_localization, check_sensitivity, check_stability_envelope, check_sum_localization,
    check_two_function, sample_instance, BoundCheck, BoundsReport, FunctionConstants,
};
use open_dgd::descriptor::{InstanceDescriptor, ScheduleDescriptor};
use open_dgd::function::{extremal_pair, FunctionClassParams, QuadraticFunction};
use open_dgd::network::Network;
use open_dgd::objective::{sum_minimizer, ProblemInstance, StackedState};
use open_dgd::open_system::{
    simulate_open, simulate_open_summary, stability_radius, EventSchedule, OpenTrace,
    StabilityEnvelope,
};
use open_dgd::search::{scaling_report, scaling_to_csv, SearchOptions};

use crate::OutputArgs;

pub enum Outcome {
    Success,
    ChecksFailed,
}

type CmdResult = Result<Outcome, String>;

pub fn configure_jobs(jobs: Option<usize>) -> Result<(), String> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err("--jobs must be at least 1".into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| format!("cannot configure {n} worker threads: {e}"))?;
    }
    Ok(())
}

fn read_file(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn parse_instance_parts(
    path: &Path,
) -> Result<(InstanceDescriptor, Vec<QuadraticFunction>, Network), String> {
    let text = read_file(path)?;
    let descriptor: InstanceDescriptor = serde_json::from_str(&text)
        .map_err(|e| format!("cannot parse {}: {e}", path.display()))?;
    let functions = descriptor
        .functions
        .iter()
        .map(|f| f.build())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| format!("invalid function in {}: {e}", path.display()))?;
    let network = descriptor
        .network
        .build()
        .map_err(|e| format!("invalid network in {}: {e}", path.display()))?;
    Ok((descriptor, functions, network))
}

fn resolve_out_dir(output: &OutputArgs) -> Result<PathBuf, String> {
    let dir = output
        .out
        .clone()
        .or_else(|| std::env::var_os("OPEN_DGD_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    Ok(dir)
}

fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, String> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(path)
}

#[derive(Serialize)]
struct SimulateSummary {
    agents: usize,
    dimension: usize,
    iterations: usize,
    rho: f64,
    eta: f64,
    eta_contractive: bool,
    final_state_norm: f64,
    /// Gradient norm at the final state; only for fixed-objective runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    terminal_gradient_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_distance_to_minimizer: Option<f64>,
    envelope: StabilityEnvelope,
    entered_ball_at: Option<usize>,
    max_norm_after_entry: f64,
    inside_ball_violations: usize,
    total_events: usize,
}

/// Base-trace CSV (no schedule columns), same rows as the open trace.
fn base_trace_csv(trace: &OpenTrace) -> String {
    let mut out = String::from("k,norm_x,dist_to_min,F_rho,consensus_residual\n");
    for r in &trace.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.iteration, r.state_norm, r.distance_to_minimizer, r.penalized_value,
            r.consensus_residual
        );
    }
    out
}

pub fn simulate(
    instance_path: &Path,
    schedule_path: Option<&Path>,
    iterations: usize,
    rho_override: Option<f64>,
    eta_override: Option<f64>,
    output: &OutputArgs,
) -> CmdResult {
    let (descriptor, functions, network) = parse_instance_parts(instance_path)?;
    let rho = rho_override.unwrap_or(descriptor.rho);
    let eta = eta_override.or(descriptor.eta);
    let inst = ProblemInstance::new(functions, network, rho, eta)
        .map_err(|e| format!("invalid instance {}: {e}", instance_path.display()))?;
    if !inst.step_size_valid() {
        eprintln!(
            "warning: eta = {} exceeds the contractive range (<= {}); convergence and \
             stability guarantees do not apply",
            inst.eta(),
            inst.default_step_size()
        );
    }

    let schedule = match schedule_path {
        Some(path) => {
            let text = read_file(path)?;
            let descriptor: ScheduleDescriptor = serde_json::from_str(&text)
                .map_err(|e| format!("cannot parse {}: {e}", path.display()))?;
            descriptor
                .build()
                .map_err(|e| format!("invalid schedule {}: {e}", path.display()))?
        }
        None => EventSchedule::empty(),
    };

    let x0 = StackedState::zeros(inst.agent_count(), inst.dimension());
    let trace = simulate_open(&inst, &x0, &schedule, iterations)
        .map_err(|e| format!("simulation failed: {e}"))?;

    let (terminal_gradient_norm, final_distance) = if schedule_path.is_none() {
        let grad = inst
            .penalized_gradient(&trace.final_state)
            .map_err(|e| format!("simulation failed: {e}"))?
            .norm();
        let dist = trace.records.last().map(|r| r.distance_to_minimizer);
        (Some(grad), dist)
    } else {
        (None, None)
    };

    let summary = SimulateSummary {
        agents: inst.agent_count(),
        dimension: inst.dimension(),
        iterations,
        rho: inst.rho(),
        eta: inst.eta(),
        eta_contractive: inst.step_size_valid(),
        final_state_norm: trace.summary.final_norm,
        terminal_gradient_norm,
        final_distance_to_minimizer: final_distance,
        envelope: trace.summary.envelope,
        entered_ball_at: trace.summary.entered_at,
        max_norm_after_entry: trace.summary.max_norm_after_entry,
        inside_ball_violations: trace.summary.violations,
        total_events: trace.summary.total_events,
    };

    let dir = resolve_out_dir(output)?;
    let csv = if schedule_path.is_some() { trace.to_csv() } else { base_trace_csv(&trace) };
    write_output(&dir, "trace.csv", &csv)?;
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_output(&dir, "summary.json", &format!("{json}\n"))?;
    Ok(Outcome::Success)
}

/// Reference rows for the extremal construction at condition number 100:
/// exact minimizer positions, localization, and the swap sensitivity.
fn extremal_reference_checks() -> Result<Vec<BoundCheck>, String> {
    let kappa = 100.0;
    let pair = extremal_pair(kappa).map_err(|e| e.to_string())?;
    let params = FunctionClassParams::new(1.0, kappa, 2).map_err(|e| e.to_string())?;
    let mut checks = Vec::new();

    let jump = (kappa - 1.0) / (2.0 * kappa.sqrt());
    let sum = sum_minimizer(&[pair.left.clone(), pair.right.clone()])
        .map_err(|e| e.to_string())?;
    let error = (sum[0].powi(2) + (sum[1] - jump).powi(2)).sqrt();
    checks.push(BoundCheck::new("extremal:argmin_with_original", error, 0.0));
    let swapped = sum_minimizer(&[pair.left.clone(), pair.replacement.clone()])
        .map_err(|e| e.to_string())?;
    checks.push(BoundCheck::new(
        "extremal:argmin_with_replacement",
        swapped.norm(),
        0.0,
    ));
    let mut bound_checks =
        vec![check_sum_localization(&[pair.left.clone(), pair.right.clone()], &params)
            .map_err(|e| e.to_string())?];
    bound_checks.extend(
        check_sensitivity(&[pair.left.clone()], &pair.right, &pair.replacement, &params)
            .map_err(|e| e.to_string())?,
    );
    for mut c in bound_checks {
        c.name = format!("extremal:{}", c.name);
        checks.push(c);
    }
    Ok(checks)
}

/// Checks for one explicitly given instance: per-agent membership, the two
/// localization bounds, and a seeded adversarial stability run.
fn instance_checks(inst: &ProblemInstance, seed: u64) -> Result<Vec<BoundCheck>, String> {
    let mut checks = Vec::new();
    for (i, report) in inst.membership_reports().iter().enumerate() {
        checks.push(BoundCheck::new(
            format!("membership:agent{i}:minimizer_norm"),
            report.minimizer_norm,
            1.0,
        ));
    }
    checks.extend(check_localization(inst).map_err(|e| e.to_string())?);
    let x0 = StackedState::zeros(inst.agent_count(), inst.dimension());
    let schedule = EventSchedule::AdversarialRandom { period: 1, seed };
    let summary =
        simulate_open_summary(inst, &x0, &schedule, 2000).map_err(|e| e.to_string())?;
    checks.push(check_stability_envelope(&summary));
    Ok(checks)
}

fn randomized_batch(instances: usize, seed: u64) -> Result<Vec<BoundCheck>, String> {
    let kappas = [1.0, 10.0, 100.0, 1000.0];
    let dims = [1usize, 2, 5];
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let sub_seeds: Vec<u64> = (0..instances).map(|_| master.random()).collect();

    let per_instance: Vec<Vec<BoundCheck>> = sub_seeds
        .par_iter()
        .enumerate()
        .map(|(i, &sub_seed)| -> Result<Vec<BoundCheck>, String> {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed);
            let n = rng.random_range(2..=10);
            let d = dims[rng.random_range(0..dims.len())];
            let kappa = kappas[rng.random_range(0..kappas.len())];
            let rho = rng.random::<f64>() * 5.0;
            let inst =
                sample_instance(n, d, kappa, rho, &mut rng).map_err(|e| e.to_string())?;
            let mut checks = Vec::with_capacity(6);
            checks.extend(check_localization(&inst).map_err(|e| e.to_string())?);
            let functions = inst.functions();
            let fb = QuadraticFunction::sample(inst.params(), &mut rng);
            checks.extend(
                check_sensitivity(
                    &functions[..n - 1],
                    &functions[n - 1],
                    &fb,
                    inst.params(),
                )
                .map_err(|e| e.to_string())?,
            );
            for c in &mut checks {
                c.name = format!("i{i:04}:{}", c.name);
            }
            Ok(checks)
        })
        .collect::<Result<_, _>>()?;

    let mut checks: Vec<BoundCheck> = per_instance.into_iter().flatten().collect();

    // Standalone two-function pairs with heterogeneous constants.
    let pair_count = instances.min(200);
    for i in 0..pair_count {
        let d = [1usize, 2, 3][master.random_range(0..3)];
        let p1 = FunctionClassParams::new(
            0.5 + master.random::<f64>(),
            2.0 + master.random::<f64>() * 50.0,
            d,
        )
        .map_err(|e| e.to_string())?;
        let p2 = FunctionClassParams::new(
            0.1 + master.random::<f64>(),
            1.0 + master.random::<f64>() * 20.0,
            d,
        )
        .map_err(|e| e.to_string())?;
        let g1 = QuadraticFunction::sample(&p1, &mut master);
        let g2 = QuadraticFunction::sample(&p2, &mut master);
        let mut check = check_two_function(
            &g1,
            FunctionConstants { alpha: p1.alpha(), beta: p1.beta(), radius: 1.0 },
            &g2,
            FunctionConstants { alpha: p2.alpha(), beta: p2.beta(), radius: 1.0 },
        )
        .map_err(|e| e.to_string())?;
        check.name = format!("pair{i:03}:{}", check.name);
        checks.push(check);
    }

    // Short adversarial stability runs.
    let stability_runs = instances.min(16);
    for i in 0..stability_runs {
        let n = master.random_range(2..=4);
        let d = [1usize, 2][master.random_range(0..2)];
        let kappa = [1.0, 10.0, 100.0][master.random_range(0..3)];
        let rho = master.random::<f64>() * 3.0;
        let inst = sample_instance(n, d, kappa, rho, &mut master).map_err(|e| e.to_string())?;
        let x0 = StackedState::zeros(n, d);
        let schedule = EventSchedule::AdversarialRandom { period: 1, seed: master.random() };
        let summary =
            simulate_open_summary(&inst, &x0, &schedule, 1000).map_err(|e| e.to_string())?;
        let mut check = check_stability_envelope(&summary);
        check.name = format!("stability{i:02}:{}", check.name);
        checks.push(check);
    }
    Ok(checks)
}

pub fn verify(
    instance_path: Option<&Path>,
    instances: usize,
    seed: u64,
    output: &OutputArgs,
) -> CmdResult {
    let report = match instance_path {
        Some(path) => {
            let (descriptor, functions, network) = parse_instance_parts(path)?;
            let inst = ProblemInstance::new(functions, network, descriptor.rho, descriptor.eta)
                .map_err(|e| format!("invalid instance {}: {e}", path.display()))?;
            let mut report = BoundsReport::with_fingerprint(&descriptor.to_json());
            report.extend(instance_checks(&inst, seed)?);
            report
        }
        None => {
            let mut report = BoundsReport::new();
            report.extend(extremal_reference_checks()?);
            report.extend(randomized_batch(instances, seed)?);
            report
        }
    };

    let dir = resolve_out_dir(output)?;
    write_output(&dir, "report.csv", &report.to_csv())?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_output(&dir, "report.json", &format!("{json}\n"))?;

    let failures: Vec<_> = report.failures().collect();
    if failures.is_empty() {
        println!("all {} checks passed", report.checks.len());
        Ok(Outcome::Success)
    } else {
        for f in &failures {
            eprintln!(
                "FAIL {}: observed {} exceeds bound {}",
                f.name, f.observed, f.bound
            );
        }
        eprintln!("{} of {} checks failed", failures.len(), report.checks.len());
        Ok(Outcome::ChecksFailed)
    }
}

pub fn worstcase(
    n: usize,
    kappas: &str,
    restarts: usize,
    budget: usize,
    seed: u64,
    output: &OutputArgs,
) -> CmdResult {
    let grid: Vec<f64> = kappas
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| format!("invalid kappa value {s:?}: {e}"))
        })
        .collect::<Result<_, _>>()?;
    if grid.is_empty() {
        return Err("--kappas must list at least one condition number".into());
    }
    let options = SearchOptions { restarts, budget, seed };
    let rows = scaling_report(n, &grid, &options).map_err(|e| e.to_string())?;
    let dir = resolve_out_dir(output)?;
    write_output(&dir, "scaling.csv", &scaling_to_csv(&rows))?;
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct LocalizeOutput {
    kappa: f64,
    localization_radius: f64,
    kappa_rho: f64,
    stability_radius: f64,
    minimizer_bound: f64,
}

pub fn localize(
    instance_path: Option<&Path>,
    alpha: Option<f64>,
    beta: Option<f64>,
    rho: Option<f64>,
    lambda_n: Option<f64>,
    n: Option<usize>,
) -> CmdResult {
    let (alpha, beta, rho, lambda_n, n) = match instance_path {
        Some(path) => {
            let (descriptor, functions, network) = parse_instance_parts(path)?;
            let inst = ProblemInstance::new(functions, network, descriptor.rho, descriptor.eta)
                .map_err(|e| format!("invalid instance {}: {e}", path.display()))?;
            (
                inst.params().alpha(),
                inst.params().beta(),
                inst.rho(),
                inst.network().lambda_max(),
                inst.agent_count(),
            )
        }
        None => match (alpha, beta, rho, lambda_n, n) {
            (Some(a), Some(b), Some(r), Some(l), Some(n)) => (a, b, r, l, n),
            _ => {
                return Err(
                    "localize needs either --instance or all of --alpha --beta --rho \
                     --lambda-n --n"
                        .into(),
                )
            }
        },
    };
    let envelope =
        stability_radius(alpha, beta, rho, lambda_n, n).map_err(|e| e.to_string())?;
    let kappa = beta / alpha;
    let out = LocalizeOutput {
        kappa,
        localization_radius: 1.0 + kappa.sqrt(),
        kappa_rho: envelope.kappa_rho,
        stability_radius: envelope.radius,
        minimizer_bound: envelope.minimizer_bound,
    };
    println!("{}", serde_json::to_string_pretty(&out).expect("output serializes"));
    Ok(Outcome::Success)
}
