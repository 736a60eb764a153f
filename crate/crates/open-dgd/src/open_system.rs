//! DGD under time-varying objectives: arrivals, departures, and adversarial
//! function changes.
//!
//! At every iteration the update is the same penalized gradient step, but
//! the local objectives may have been replaced since the previous step:
//!
//! ```text
//! x_i <- x_i - eta * ( grad f_i^k(x_i) + rho * sum_j a_ij (x_i - x_j) )
//! ```
//!
//! As long as every replacement stays inside the `[alpha, beta]` class (and
//! `eta <= 1 / (beta + rho lambda_n)`), the iterates cannot be driven away:
//! there is a radius `R` such that once `|x| <= R` at some iteration, it
//! stays below `R` forever, no matter how the objectives change. With
//! `kappa_rho = (beta + rho lambda_n) / alpha` and `b = sqrt(n) (1 +
//! sqrt(kappa))` the bound on the norm of every instantaneous penalized
//! minimizer,
//!
//! ```text
//! R = (1 + sqrt(6)) * b             if kappa_rho < 3
//! R = (1 + sqrt(2 kappa_rho)) * b   otherwise.
//! ```
//!
//! `R` grows with the penalty weight through `kappa_rho`, while a larger
//! penalty is what pushes the fixed-objective solution toward consensus, so
//! tightening consensus loosens the stability ball.
//!
//! Departures are modeled as replacement by the placeholder member
//! `alpha/2 |x|^2` (Hessian `alpha * I`, minimizer at the origin), which
//! keeps every step inside the class hypothesis; arrivals restore a real
//! function. Agent count is fixed; openness is function replacement.
//!
//! ```
//! use open_dgd::open_system::stability_radius;
//!
//! // kappa_rho = 3 selects the general branch, which is continuous there.
//! let env = stability_radius(1.0, 1.0, 1.0, 2.0, 2)?;
//! assert!((env.kappa_rho - 3.0).abs() < 1e-12);
//! assert!((env.radius - (1.0 + 6.0f64.sqrt()) * 2.0 * 2.0f64.sqrt()).abs() < 1e-9);
//! # Ok::<(), open_dgd::Error>(())
//! ```

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dgd::gradient_step;
use crate::error::{Error, Result};
use crate::function::{validate_membership, FunctionClassParams, QuadraticFunction};
use crate::objective::{sum_minimizer, ProblemInstance, StackedState};

/// Slack on the ball-invariance check, absorbing round-off in norms.
pub const BALL_SLACK: f64 = 1e-9;

/// One scheduled replacement: at iteration `iteration`, agent `agent` starts
/// using `function`. Events at iteration `k` take effect before the `k`-th
/// update is computed.
#[derive(Debug, Clone)]
pub struct FunctionEvent {
    pub iteration: usize,
    pub agent: usize,
    pub function: QuadraticFunction,
}

impl FunctionEvent {
    pub fn new(iteration: usize, agent: usize, function: QuadraticFunction) -> Self {
        Self { iteration, agent, function }
    }

    /// A departure: the agent's objective becomes the placeholder member
    /// `alpha/2 |x|^2`.
    pub fn departure(iteration: usize, agent: usize, params: &FunctionClassParams) -> Self {
        let placeholder = QuadraticFunction::isotropic(
            params.alpha(),
            DVector::zeros(params.dimension()),
        )
        .expect("alpha is positive");
        Self { iteration, agent, function: placeholder }
    }
}

/// How objectives change over a run.
#[derive(Debug, Clone)]
pub enum EventSchedule {
    /// Explicit replacements, applied in iteration order.
    Scripted { events: Vec<FunctionEvent> },
    /// Every `period` iterations, every agent's objective is redrawn from
    /// the class (seeded, deterministic).
    AdversarialRandom { period: usize, seed: u64 },
    /// Every `period` iterations, every agent's objective is replaced by the
    /// greedy locally-worst class member: minimizer on the unit sphere along
    /// or against the agent's state, curvature axis aligned with it,
    /// whichever maximizes the agent's own post-step norm.
    AdversarialWorstEffort { period: usize },
    /// One agent alternates between two functions every `period` iterations.
    AlternatingSwap {
        agent: usize,
        period: usize,
        first: Box<QuadraticFunction>,
        second: Box<QuadraticFunction>,
    },
}

impl EventSchedule {
    /// An empty scripted schedule; the dynamics reduce exactly to the
    /// fixed-objective iteration.
    pub fn empty() -> Self {
        EventSchedule::Scripted { events: Vec::new() }
    }

    /// Scripted schedule; events are stably sorted by iteration so
    /// same-iteration events apply in the given order.
    pub fn scripted(mut events: Vec<FunctionEvent>) -> Self {
        events.sort_by_key(|e| e.iteration);
        EventSchedule::Scripted { events }
    }
}

/// The stability ball: penalized condition number, minimizer-norm bound
/// `b = sqrt(n) (1 + sqrt(kappa))`, and the invariant radius `R >= b`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct StabilityEnvelope {
    pub kappa_rho: f64,
    pub radius: f64,
    pub minimizer_bound: f64,
}

/// The invariant radius for a single gradient step on any function with
/// condition number `kappa_bar` and minimizer norm at most `b`:
/// `(1 + sqrt(2 kappa_bar)) b` when `kappa_bar >= 3`, else `(1 + sqrt(6)) b`
/// (a condition number below three may always be weakened to exactly three).
pub fn generic_stability_radius(kappa_bar: f64, minimizer_bound: f64) -> f64 {
    if kappa_bar >= 3.0 {
        (1.0 + (2.0 * kappa_bar).sqrt()) * minimizer_bound
    } else {
        (1.0 + 6.0_f64.sqrt()) * minimizer_bound
    }
}

/// Stability envelope from raw parameters.
pub fn stability_radius(
    alpha: f64,
    beta: f64,
    rho: f64,
    lambda_max: f64,
    n: usize,
) -> Result<StabilityEnvelope> {
    FunctionClassParams::new(alpha, beta, 1)?;
    if !(rho >= 0.0) || !(lambda_max >= 0.0) || n == 0 {
        return Err(Error::InvalidInstance(
            "stability radius needs rho >= 0, lambda_max >= 0, n >= 1".into(),
        ));
    }
    let kappa = beta / alpha;
    let kappa_rho = (beta + rho * lambda_max) / alpha;
    let minimizer_bound = (n as f64).sqrt() * (1.0 + kappa.sqrt());
    Ok(StabilityEnvelope {
        kappa_rho,
        radius: generic_stability_radius(kappa_rho, minimizer_bound),
        minimizer_bound,
    })
}

impl StabilityEnvelope {
    pub fn for_instance(inst: &ProblemInstance) -> Self {
        stability_radius(
            inst.params().alpha(),
            inst.params().beta(),
            inst.rho(),
            inst.network().lambda_max(),
            inst.agent_count(),
        )
        .expect("instance parameters are validated")
    }
}

/// One open-system iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct OpenRecord {
    pub iteration: usize,
    pub state_norm: f64,
    /// Distance to the minimizer of the current penalized objective.
    pub distance_to_minimizer: f64,
    /// Current penalized objective value.
    pub penalized_value: f64,
    pub consensus_residual: f64,
    /// Replacements applied at this iteration.
    pub events_applied: usize,
    /// Norm of the minimizer of the current plain sum `sum_i f_i^k`.
    pub instantaneous_minimizer_norm: f64,
    /// Raw flag `|x^k| <= R`.
    pub inside_ball: bool,
}

/// Aggregate outcome of an open-system run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpenSummary {
    pub envelope: StabilityEnvelope,
    /// First iteration with `|x^k| <= R`, if any.
    pub entered_at: Option<usize>,
    /// Largest norm observed at or after entry (zero if never entered).
    pub max_norm_after_entry: f64,
    /// Post-entry iterations with `|x^k| > R + 1e-9`. The invariance
    /// guarantee says this is zero.
    pub violations: usize,
    pub final_norm: f64,
    pub total_events: usize,
}

/// Full open-system trace.
#[derive(Debug, Clone)]
pub struct OpenTrace {
    pub records: Vec<OpenRecord>,
    pub final_state: StackedState,
    pub summary: OpenSummary,
}

impl OpenTrace {
    /// CSV rendering with columns
    /// `k,norm_x,dist_to_min,F_rho,consensus_residual,event_count,inst_min_norm,inside_ball`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "k,norm_x,dist_to_min,F_rho,consensus_residual,event_count,inst_min_norm,inside_ball\n",
        );
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.iteration,
                r.state_norm,
                r.distance_to_minimizer,
                r.penalized_value,
                r.consensus_residual,
                r.events_applied,
                r.instantaneous_minimizer_norm,
                u8::from(r.inside_ball)
            ));
        }
        out
    }
}

/// Simulates the open dynamics for `iterations` steps, recording every
/// iterate (including the initial one). Replacement functions must pass the
/// membership check for the instance's class parameters.
pub fn simulate_open(
    inst: &ProblemInstance,
    x0: &StackedState,
    schedule: &EventSchedule,
    iterations: usize,
) -> Result<OpenTrace> {
    let (summary, records, final_state) = run_open(inst, x0, schedule, iterations, true)?;
    Ok(OpenTrace {
        records: records.expect("recording was requested"),
        final_state,
        summary,
    })
}

/// Same dynamics as [`simulate_open`] without per-step records or
/// instantaneous minimizer solves; used for long stress runs.
pub fn simulate_open_summary(
    inst: &ProblemInstance,
    x0: &StackedState,
    schedule: &EventSchedule,
    iterations: usize,
) -> Result<OpenSummary> {
    let (summary, _, _) = run_open(inst, x0, schedule, iterations, false)?;
    Ok(summary)
}

/// Outcome of [`adversarial_probe`]: the worst post-entry norm over
/// randomized adversarial schedules, relative to the stability radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeReport {
    pub envelope: StabilityEnvelope,
    pub worst_norm_after_entry: f64,
    /// `worst_norm_after_entry / radius`; at most one when the invariance
    /// guarantee holds.
    pub tightness_ratio: f64,
    pub violations: usize,
    pub restarts: usize,
}

/// Stress harness: runs `restarts` independent per-step random-replacement
/// schedules (seeded streams drawn from `seed`) and reports the worst
/// post-entry norm. Restarts run in parallel; the reduction is a maximum,
/// so the result is deterministic.
pub fn adversarial_probe(
    inst: &ProblemInstance,
    x0: &StackedState,
    iterations: usize,
    restarts: usize,
    seed: u64,
) -> Result<ProbeReport> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let stream_seeds: Vec<u64> = (0..restarts).map(|_| master.random()).collect();
    let summaries: Vec<OpenSummary> = stream_seeds
        .par_iter()
        .map(|&s| {
            let schedule = EventSchedule::AdversarialRandom { period: 1, seed: s };
            simulate_open_summary(inst, x0, &schedule, iterations)
        })
        .collect::<Result<_>>()?;
    let envelope = StabilityEnvelope::for_instance(inst);
    let worst = summaries
        .iter()
        .map(|s| s.max_norm_after_entry)
        .fold(0.0, f64::max);
    let violations = summaries.iter().map(|s| s.violations).sum();
    Ok(ProbeReport {
        envelope,
        worst_norm_after_entry: worst,
        tightness_ratio: worst / envelope.radius,
        violations,
        restarts,
    })
}

/// Per-mode replacement state.
enum Replacer<'a> {
    Scripted { events: &'a [FunctionEvent], next: usize },
    Random { period: usize, rng: ChaCha8Rng },
    WorstEffort { period: usize },
    Alternating {
        agent: usize,
        period: usize,
        first: &'a QuadraticFunction,
        second: &'a QuadraticFunction,
        flips: usize,
    },
}

impl<'a> Replacer<'a> {
    fn new(schedule: &'a EventSchedule) -> Self {
        match schedule {
            EventSchedule::Scripted { events } => Replacer::Scripted { events, next: 0 },
            EventSchedule::AdversarialRandom { period, seed } => Replacer::Random {
                period: (*period).max(1),
                rng: ChaCha8Rng::seed_from_u64(*seed),
            },
            EventSchedule::AdversarialWorstEffort { period } => {
                Replacer::WorstEffort { period: (*period).max(1) }
            }
            EventSchedule::AlternatingSwap { agent, period, first, second } => {
                Replacer::Alternating {
                    agent: *agent,
                    period: (*period).max(1),
                    first,
                    second,
                    flips: 0,
                }
            }
        }
    }

    /// Applies all replacements due at iteration `k`. Returns how many
    /// functions changed.
    fn apply(
        &mut self,
        k: usize,
        functions: &mut [QuadraticFunction],
        params: &FunctionClassParams,
        eta: f64,
        x: &StackedState,
    ) -> Result<usize> {
        match self {
            Replacer::Scripted { events, next } => {
                let mut applied = 0;
                while *next < events.len() && events[*next].iteration == k {
                    let event = &events[*next];
                    *next += 1;
                    if event.agent >= functions.len() {
                        return Err(Error::AgentOutOfRange {
                            iteration: event.iteration,
                            agent: event.agent,
                            agents: functions.len(),
                        });
                    }
                    if !validate_membership(&event.function, params).is_member() {
                        return Err(Error::ScheduleMembership {
                            iteration: event.iteration,
                            agent: event.agent,
                        });
                    }
                    functions[event.agent] = event.function.clone();
                    applied += 1;
                }
                Ok(applied)
            }
            Replacer::Random { period, rng } => {
                if k % *period != 0 {
                    return Ok(0);
                }
                for f in functions.iter_mut() {
                    *f = QuadraticFunction::sample(params, rng);
                }
                Ok(functions.len())
            }
            Replacer::WorstEffort { period } => {
                if k % *period != 0 {
                    return Ok(0);
                }
                for (i, f) in functions.iter_mut().enumerate() {
                    *f = worst_effort_member(params, eta, &x.block_owned(i));
                }
                Ok(functions.len())
            }
            Replacer::Alternating { agent, period, first, second, flips } => {
                if k % *period != 0 {
                    return Ok(0);
                }
                if *agent >= functions.len() {
                    return Err(Error::AgentOutOfRange {
                        iteration: k,
                        agent: *agent,
                        agents: functions.len(),
                    });
                }
                let replacement = if *flips % 2 == 0 { *first } else { *second };
                if !validate_membership(replacement, params).is_member() {
                    return Err(Error::ScheduleMembership { iteration: k, agent: *agent });
                }
                functions[*agent] = replacement.clone();
                *flips += 1;
                Ok(1)
            }
        }
    }
}

/// Greedy locally-worst class member for one agent: among minimizers
/// `{+u, -u}` on the unit sphere (`u` the agent's direction) and Hessians
/// with the strong or weak axis along `u`, pick whichever maximizes the
/// agent's own post-step norm, ignoring the penalty coupling.
fn worst_effort_member(
    params: &FunctionClassParams,
    eta: f64,
    xi: &DVector<f64>,
) -> QuadraticFunction {
    let d = params.dimension();
    let norm = xi.norm();
    let u = if norm > 1e-12 {
        xi / norm
    } else {
        let mut e = DVector::zeros(d);
        e[0] = 1.0;
        e
    };
    let (alpha, beta) = (params.alpha(), params.beta());
    let outer = &u * u.transpose();
    let eye = DMatrix::identity(d, d);
    let strong_along = &eye * alpha + &outer * (beta - alpha);
    let weak_along = &eye * beta - &outer * (beta - alpha);
    let mut best: Option<(f64, QuadraticFunction)> = None;
    for hessian in [strong_along, weak_along] {
        for sign in [1.0, -1.0] {
            let c = &u * sign;
            let step_norm = (xi - &hessian * (xi - &c) * eta).norm();
            if best.as_ref().is_none_or(|(n, _)| step_norm > *n) {
                let f = QuadraticFunction::new(hessian.clone(), c)
                    .expect("constructed Hessian is SPD");
                best = Some((step_norm, f));
            }
        }
    }
    best.expect("candidate set is nonempty").1
}

fn run_open(
    inst: &ProblemInstance,
    x0: &StackedState,
    schedule: &EventSchedule,
    iterations: usize,
    record: bool,
) -> Result<(OpenSummary, Option<Vec<OpenRecord>>, StackedState)> {
    if x0.agents() != inst.agent_count() || x0.block_dim() != inst.dimension() {
        return Err(Error::DimensionMismatch {
            expected: inst.agent_count() * inst.dimension(),
            actual: x0.agents() * x0.block_dim(),
        });
    }
    let envelope = StabilityEnvelope::for_instance(inst);
    let params = *inst.params();
    let mut functions = inst.functions().to_vec();
    let mut replacer = Replacer::new(schedule);
    let mut records = record.then(|| Vec::with_capacity(iterations + 1));
    let mut x = x0.clone();

    let mut entered_at: Option<usize> = None;
    let mut max_norm_after_entry: f64 = 0.0;
    let mut violations = 0usize;
    let mut total_events = 0usize;

    // Cached per active function set, recomputed only when functions change.
    let mut cached_minimizer: Option<(StackedState, f64)> = None;

    for k in 0..=iterations {
        let applied = replacer.apply(k, &mut functions, &params, inst.eta(), &x)?;
        total_events += applied;
        if applied > 0 {
            cached_minimizer = None;
        }

        let norm = x.norm();
        let inside = norm <= envelope.radius;
        if entered_at.is_none() && inside {
            entered_at = Some(k);
        }
        if entered_at.is_some() {
            max_norm_after_entry = max_norm_after_entry.max(norm);
            if norm > envelope.radius + BALL_SLACK {
                violations += 1;
            }
        }

        if let Some(out) = records.as_mut() {
            let current = ProblemInstance::new(
                functions.clone(),
                inst.network().clone(),
                inst.rho(),
                Some(inst.eta()),
            )?;
            if cached_minimizer.is_none() {
                let minimizer = current.minimizer()?;
                let sum_min_norm = sum_minimizer(&functions)?.norm();
                cached_minimizer = Some((minimizer, sum_min_norm));
            }
            let (minimizer, sum_min_norm) =
                cached_minimizer.as_ref().expect("cache was just filled");
            out.push(OpenRecord {
                iteration: k,
                state_norm: norm,
                distance_to_minimizer: (x.as_vector() - minimizer.as_vector()).norm(),
                penalized_value: current.penalized_value(&x)?,
                consensus_residual: current.consensus_residual(&x)?,
                events_applied: applied,
                instantaneous_minimizer_norm: *sum_min_norm,
                inside_ball: inside,
            });
        }

        if k < iterations {
            x = gradient_step(&functions, inst.network(), inst.rho(), inst.eta(), &x)?;
        }
    }

    let summary = OpenSummary {
        envelope,
        entered_at,
        max_norm_after_entry,
        violations,
        final_norm: x.norm(),
        total_events,
    };
    Ok((summary, records, x))
}
