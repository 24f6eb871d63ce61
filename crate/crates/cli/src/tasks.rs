//! Task execution: flows, single resolvent steps, λ₁ estimation, verification
//! sweeps, and the TV denoising demo. Every artifact lands in the output
//! directory; every task prints one summary line.

use crate::config::{ExperimentConfig, Task};
use crate::emit;
use anyhow::anyhow;
use cheeger_flow::asymptotics::{
    asymptotic_profile, ground_state_check, lambda1, lambda_series, verify_decay_bounds,
    verify_sharper_bound, CoercivityMode, EigenMethod,
};
use cheeger_flow::flow::{evolve, FlowTrajectory};
use cheeger_flow::functionals::SubgradientCertificate;
use cheeger_flow::generate::{random_field, random_node_function};
use cheeger_flow::pairing::{gauss_green_residual, pairing, pairing_coarea, theta_monotone_invariance, tv_coarea};
use cheeger_flow::rng::SplitMix64;
use cheeger_flow::solver::{ResolventSolver, SolverOptions};
use cheeger_flow::space::io::{write_pgm_p2, PgmImage};
use cheeger_flow::space::{DiscreteSpace, NodeFunction, NormField};
use serde::Serialize;
use std::path::Path;

/// Failure modes that map to distinct exit codes.
#[derive(Debug)]
pub enum TaskFailure {
    /// Bad input or configuration: exit 2.
    Config(anyhow::Error),
    /// Inner solver did not converge: exit 3.
    Solver(anyhow::Error),
}

impl From<cheeger_flow::Error> for TaskFailure {
    fn from(e: cheeger_flow::Error) -> Self {
        match e {
            cheeger_flow::Error::NonConvergence { .. } => TaskFailure::Solver(anyhow!(e)),
            other => TaskFailure::Config(anyhow!(other)),
        }
    }
}

impl From<anyhow::Error> for TaskFailure {
    fn from(e: anyhow::Error) -> Self {
        TaskFailure::Config(e)
    }
}

pub type TaskResult<T> = std::result::Result<T, TaskFailure>;

/// Outcome of one task: verification tasks carry a pass/fail verdict.
pub struct TaskOutcome {
    pub task: Task,
    pub verdict: Option<bool>,
    pub summary: String,
}

pub struct RunContext {
    pub space: DiscreteSpace,
    pub u0: Option<NodeFunction>,
    /// Maxval of the source PGM when u0 came from an image (for re-emission).
    pub pgm_maxval: Option<u16>,
}

pub fn run_all(cfg: &ExperimentConfig, ctx: &RunContext, out: &Path) -> TaskResult<Vec<TaskOutcome>> {
    let space = &ctx.space;
    let u0 = ctx.u0.as_ref();
    let mut outcomes = Vec::new();
    for task in &cfg.tasks {
        let outcome = match task {
            Task::Flow => run_flow(cfg, space, u0, out)?,
            Task::Resolvent => run_resolvent(cfg, space, u0, out)?,
            Task::Lambda1 => run_lambda1(cfg, space, out)?,
            Task::VerifyCertificates => verify_certificates(cfg, space, out)?,
            Task::VerifyPairing => verify_pairing(cfg, space, out)?,
            Task::VerifyAsymptotics => verify_asymptotics(cfg, space, u0, out)?,
            Task::Denoise => run_denoise(cfg, space, u0, ctx.pgm_maxval, out)?,
        };
        println!("task {}: {}", outcome.task.name(), outcome.summary);
        outcomes.push(outcome);
    }
    Ok(outcomes)
}

fn need_u0(task: Task, u0: Option<&NodeFunction>) -> TaskResult<&NodeFunction> {
    u0.ok_or_else(|| TaskFailure::Config(anyhow!("task {} needs an initial datum u0", task.name())))
}

fn solver_options(cfg: &ExperimentConfig) -> SolverOptions {
    SolverOptions {
        inner_tol: cfg.flow.inner_tol,
        max_iters: cfg.flow.inner_max_iters,
        ..Default::default()
    }
}

#[derive(Serialize)]
struct FlowReport {
    p: f64,
    tau: f64,
    t_final: f64,
    steps: usize,
    extinction_time: Option<f64>,
    final_t: f64,
    final_energy: f64,
    final_l2: f64,
    max_gap: f64,
    max_mass_drift: f64,
    truncated: Option<String>,
}

fn flow_report(traj: &FlowTrajectory, t_final: f64) -> FlowReport {
    let m0 = traj.diagnostics[0].mass;
    FlowReport {
        p: traj.p,
        tau: traj.tau,
        t_final,
        steps: traj.steps(),
        extinction_time: traj.extinction_time,
        final_t: *traj.times.last().unwrap(),
        final_energy: traj.diagnostics.last().unwrap().energy,
        final_l2: traj.diagnostics.last().unwrap().l2,
        max_gap: traj.diagnostics.iter().map(|d| d.gap).fold(0.0, f64::max),
        max_mass_drift: traj.diagnostics.iter().map(|d| (d.mass - m0).abs()).fold(0.0, f64::max),
        truncated: traj.truncation.as_ref().map(|e| e.to_string()),
    }
}

fn run_flow(
    cfg: &ExperimentConfig,
    space: &DiscreteSpace,
    u0: Option<&NodeFunction>,
    out: &Path,
) -> TaskResult<TaskOutcome> {
    let u0 = need_u0(Task::Flow, u0)?;
    let traj = evolve(space, u0, &cfg.flow.to_flow_config());
    emit::write_text(&out.join("trajectory.csv"), &emit::trajectory_csv(&traj))?;
    emit::write_json(&out.join("flow.json"), &flow_report(&traj, cfg.flow.t_final))?;
    if cfg.dump_certificates {
        emit::write_json(&out.join("certificates.json"), &traj.certificates)?;
    }
    if let Some(e) = &traj.truncation {
        return Err(TaskFailure::Solver(anyhow!("flow truncated at step {}: {e}", traj.steps())));
    }
    let summary = match traj.extinction_time {
        Some(t) => format!("{} steps, extinction at t = {}", traj.steps(), emit::fmt(t)),
        None => format!(
            "{} steps, final ‖u‖ = {}",
            traj.steps(),
            emit::fmt(traj.diagnostics.last().unwrap().l2)
        ),
    };
    Ok(TaskOutcome { task: Task::Flow, verdict: None, summary })
}

#[derive(Serialize)]
struct ResolventReport {
    p: f64,
    tau: f64,
    gap: f64,
    iterations: usize,
    certificate: SubgradientCertificate,
}

fn run_resolvent(
    cfg: &ExperimentConfig,
    space: &DiscreteSpace,
    u0: Option<&NodeFunction>,
    out: &Path,
) -> TaskResult<TaskOutcome> {
    let g = need_u0(Task::Resolvent, u0)?;
    let solver = ResolventSolver::new(space, cfg.flow.p, cfg.flow.tau, solver_options(cfg))?;
    let sol = solver.step(g, None)?;
    emit::write_text(&out.join("u_next.csv"), &emit::node_function_csv(&sol.u_next.values))?;
    emit::write_json(
        &out.join("resolvent.json"),
        &ResolventReport {
            p: cfg.flow.p,
            tau: cfg.flow.tau,
            gap: sol.gap,
            iterations: sol.iterations,
            certificate: sol.certificate.clone(),
        },
    )?;
    Ok(TaskOutcome {
        task: Task::Resolvent,
        verdict: None,
        summary: format!(
            "gap = {}, iterations = {}, certificate accepts = {}",
            emit::fmt(sol.gap),
            sol.iterations,
            sol.certificate.accepts
        ),
    })
}

#[derive(Serialize)]
struct Lambda1Report {
    p: f64,
    mode: &'static str,
    lambda1: f64,
    method: String,
    restarts: usize,
    oracle: Option<f64>,
    oracle_rel_gap: Option<f64>,
}

fn run_lambda1(cfg: &ExperimentConfig, space: &DiscreteSpace, out: &Path) -> TaskResult<TaskOutcome> {
    let method = EigenMethod::Descent { restarts: 32, seed: cfg.seed ^ 0x5eed };
    let est = lambda1(space, cfg.flow.p, CoercivityMode::Poincare, &method)?;
    let oracle = if space.node_count() <= 3 {
        Some(lambda1(space, cfg.flow.p, CoercivityMode::Poincare, &EigenMethod::Oracle)?.lambda1)
    } else {
        None
    };
    emit::write_text(&out.join("lambda1_minimizer.csv"), &emit::node_function_csv(&est.minimizer.values))?;
    emit::write_json(
        &out.join("lambda1.json"),
        &Lambda1Report {
            p: cfg.flow.p,
            mode: "poincare",
            lambda1: est.lambda1,
            method: est.method.clone(),
            restarts: est.restarts,
            oracle,
            oracle_rel_gap: oracle.map(|o| (est.lambda1 - o).abs() / o),
        },
    )?;
    Ok(TaskOutcome {
        task: Task::Lambda1,
        verdict: None,
        summary: format!("lambda1 = {} ({} restarts)", emit::fmt(est.lambda1), est.restarts),
    })
}

#[derive(Serialize)]
struct CertificateSweepReport {
    solves: usize,
    exponents: Vec<f64>,
    max_gap: f64,
    max_residual_div: f64,
    max_residual_holder: f64,
    max_residual_pairing_scaled: f64,
    pass: bool,
}

fn verify_certificates(
    cfg: &ExperimentConfig,
    space: &DiscreteSpace,
    out: &Path,
) -> TaskResult<TaskOutcome> {
    let exponents = vec![1.0, 1.3, 2.0, 3.0];
    let mut rng = SplitMix64::new(cfg.seed.wrapping_add(101));
    let mut report = CertificateSweepReport {
        solves: 0,
        exponents: exponents.clone(),
        max_gap: 0.0,
        max_residual_div: 0.0,
        max_residual_holder: 0.0,
        max_residual_pairing_scaled: 0.0,
        pass: true,
    };
    for &p in &exponents {
        let solver = ResolventSolver::new(space, p, 0.4, solver_options(cfg))?;
        for _ in 0..5 {
            let g = random_node_function(space, &mut rng, -1.0, 1.0);
            let sol = solver.step(&g, None)?;
            let scale = 1.0_f64.max(sol.u_next.linf()).max(space.divergence(&sol.x).linf());
            report.solves += 1;
            report.max_gap = report.max_gap.max(sol.gap);
            report.max_residual_div = report.max_residual_div.max(sol.certificate.residual_div);
            report.max_residual_holder = report.max_residual_holder.max(sol.certificate.residual_holder);
            report.max_residual_pairing_scaled =
                report.max_residual_pairing_scaled.max(sol.certificate.residual_pairing / scale);
            report.pass &= sol.certificate.accepts && sol.gap <= 1e-8;
        }
    }
    report.pass &= report.max_residual_div == 0.0
        && report.max_residual_holder <= 1e-8
        && report.max_residual_pairing_scaled <= 1e-8;
    emit::write_json(&out.join("verify_certificates.json"), &report)?;
    let summary = format!(
        "{} ({} solves, max gap {})",
        if report.pass { "pass" } else { "FAIL" },
        report.solves,
        emit::fmt(report.max_gap)
    );
    Ok(TaskOutcome { task: Task::VerifyCertificates, verdict: Some(report.pass), summary })
}

#[derive(Serialize)]
struct PairingVerifyReport {
    trials: usize,
    max_gauss_green_scaled: f64,
    max_pairing_coarea_rel: f64,
    /// Exact only on graphs and grids with an ℓ¹ cotangent norm.
    max_tv_coarea_rel: Option<f64>,
    max_prop43_excess: f64,
    max_theta_affine: f64,
    max_theta_two_valued: f64,
    pass: bool,
}

fn verify_pairing(cfg: &ExperimentConfig, space: &DiscreteSpace, out: &Path) -> TaskResult<TaskOutcome> {
    let mut rng = SplitMix64::new(cfg.seed.wrapping_add(202));
    let tv_coarea_exact = match space {
        DiscreteSpace::Graph(_) => true,
        DiscreteSpace::Grid(g) => match g.norms() {
            NormField::Uniform(nm) => nm.alpha().is_infinite(),
            NormField::PerNode(v) => v.iter().all(|nm| nm.alpha().is_infinite()),
        },
    };
    let mut rep = PairingVerifyReport {
        trials: 50,
        max_gauss_green_scaled: 0.0,
        max_pairing_coarea_rel: 0.0,
        max_tv_coarea_rel: if tv_coarea_exact { Some(0.0) } else { None },
        max_prop43_excess: 0.0,
        max_theta_affine: 0.0,
        max_theta_two_valued: 0.0,
        pass: true,
    };
    for _ in 0..rep.trials {
        let u = random_node_function(space, &mut rng, -2.0, 2.0);
        let x = random_field(space, &mut rng, -1.5, 1.5);
        let res = gauss_green_residual(space, &x, &u);
        let div = space.divergence(&x);
        let dual = space.duality(&space.differential(&u), &x);
        let scale: f64 = 1.0
            + (0..space.node_count())
                .map(|j| space.nu(j) * ((u.values[j] * div.values[j]).abs() + dual.values[j].abs()))
                .sum::<f64>();
        rep.max_gauss_green_scaled = rep.max_gauss_green_scaled.max(res / scale);

        let subset: Vec<bool> = (0..space.node_count()).map(|_| rng.next_f64() < 0.5).collect();
        let (pl, pr) = pairing_coarea(space, &x, &u, &subset);
        rep.max_pairing_coarea_rel = rep.max_pairing_coarea_rel.max((pl - pr).abs() / (1.0 + pl.abs()));
        if let Some(worst) = &mut rep.max_tv_coarea_rel {
            let (tl, tr) = tv_coarea(space, &u);
            *worst = worst.max((tl - tr).abs() / (1.0 + tl));
        }

        let var = space.variation_measure(&u);
        let sup = space.sup_tangent_norm(&x);
        let measure = pairing(space, &x, &u).measure;
        let lhs = measure.total_on(&subset).abs();
        let bound = sup * var.total_on(&subset);
        rep.max_prop43_excess = rep.max_prop43_excess.max(lhs - bound);

        rep.max_theta_affine =
            rep.max_theta_affine.max(theta_monotone_invariance(space, &x, &u, |t| 2.0 * t + 1.0));
        let lo = rng.uniform(-1.0, 0.0);
        let hi = lo + rng.uniform(0.5, 1.5);
        let two = NodeFunction::new(
            (0..space.node_count()).map(|_| if rng.next_f64() < 0.5 { lo } else { hi }).collect(),
        );
        rep.max_theta_two_valued = rep
            .max_theta_two_valued
            .max(theta_monotone_invariance(space, &x, &two, |t| t + 0.3 * (t - lo) * (t - lo)));
    }
    rep.pass = rep.max_gauss_green_scaled <= 1e-12
        && rep.max_pairing_coarea_rel <= 1e-10
        && rep.max_tv_coarea_rel.is_none_or(|v| v <= 1e-10)
        && rep.max_prop43_excess <= 1e-10
        && rep.max_theta_affine <= 1e-10
        && rep.max_theta_two_valued <= 1e-10;
    emit::write_json(&out.join("verify_pairing.json"), &rep)?;
    let summary = format!(
        "{} (GG {}, coarea {})",
        if rep.pass { "pass" } else { "FAIL" },
        emit::fmt(rep.max_gauss_green_scaled),
        emit::fmt(rep.max_pairing_coarea_rel)
    );
    Ok(TaskOutcome { task: Task::VerifyPairing, verdict: Some(rep.pass), summary })
}

#[derive(Serialize)]
struct AsymptoticsReport {
    p: f64,
    lambda1: f64,
    lambda1_method: String,
    t_ex_measured: Option<f64>,
    t_ex_bound: Option<f64>,
    t_ex_bound_printed_form: Option<f64>,
    decay_max_violation: f64,
    decay_slack: f64,
    decay_passes: bool,
    sharper_lower_margin: Option<f64>,
    sharper_upper_margin: Option<f64>,
    sharper_slack: Option<f64>,
    profile_norm_bound_ok: Option<bool>,
    profile_membership: Option<bool>,
    profile_membership_distance: Option<f64>,
    ground_state: Option<bool>,
    lambda_at_extinction: Option<f64>,
    pass: bool,
}

fn verify_asymptotics(
    cfg: &ExperimentConfig,
    space: &DiscreteSpace,
    u0: Option<&NodeFunction>,
    out: &Path,
) -> TaskResult<TaskOutcome> {
    let u0 = need_u0(Task::VerifyAsymptotics, u0)?;
    let p = cfg.flow.p;
    let mut flow_cfg = cfg.flow.to_flow_config();
    if p < 2.0 && flow_cfg.extinction_eps.is_none() {
        // For 1 <= p < 2 the resolvent reaches the kernel only quadratically in
        // the deviation, so the library default (1e-9 ‖u0‖) fires a few steps
        // late and destabilizes the rescaled profile; detect extinction in the
        // tau-dominated regime unless the config pins a threshold.
        flow_cfg.extinction_eps = Some(1e-6 * space.l2_norm(u0));
    }
    let traj = evolve(space, u0, &flow_cfg);
    if let Some(e) = &traj.truncation {
        return Err(TaskFailure::Solver(anyhow!("flow truncated: {e}")));
    }
    let method = EigenMethod::Descent { restarts: 32, seed: cfg.seed ^ 0x5eed };
    let est = lambda1(space, p, CoercivityMode::Poincare, &method)?;
    let decay = verify_decay_bounds(space, &traj, est.lambda1, p);

    // Λ(t) series
    let lam = lambda_series(space, &traj);
    let rows: Vec<Vec<f64>> = traj
        .times
        .iter()
        .zip(&lam)
        .filter_map(|(t, l)| l.map(|v| vec![*t, v]))
        .collect();
    emit::write_text(&out.join("lambda_series.csv"), &emit::series_csv("t,lambda", &rows))?;

    let mut rep = AsymptoticsReport {
        p,
        lambda1: est.lambda1,
        lambda1_method: est.method.clone(),
        t_ex_measured: traj.extinction_time,
        t_ex_bound: decay.t_ex_bound,
        t_ex_bound_printed_form: decay.t_ex_bound_printed_form,
        decay_max_violation: decay.max_violation,
        decay_slack: decay.slack,
        decay_passes: decay.passes,
        sharper_lower_margin: None,
        sharper_upper_margin: None,
        sharper_slack: None,
        profile_norm_bound_ok: None,
        profile_membership: None,
        profile_membership_distance: None,
        ground_state: None,
        lambda_at_extinction: None,
        pass: decay.passes,
    };

    if p < 2.0 && traj.extinction_time.is_some_and(|t| t > 0.0) {
        let t_ex = traj.extinction_time.unwrap();
        let sharper = verify_sharper_bound(space, &traj, est.lambda1, p)?;
        rep.sharper_lower_margin = Some(sharper.worst_lower_margin);
        rep.sharper_upper_margin = Some(sharper.worst_upper_margin);
        rep.sharper_slack = Some(sharper.slack);
        rep.pass &= sharper.worst_lower_margin >= -sharper.slack
            && sharper.worst_upper_margin >= -sharper.slack;
        let profile = asymptotic_profile(space, &traj, t_ex, p, &solver_options(cfg))?;
        let norms: Vec<Vec<f64>> = profile
            .w_series
            .iter()
            .enumerate()
            .map(|(k, w)| vec![traj.times[k], space.l2_norm(w)])
            .collect();
        emit::write_text(&out.join("profile_norms.csv"), &emit::series_csv("t,w_l2", &norms))?;
        emit::write_text(&out.join("profile_w_star.csv"), &emit::node_function_csv(&profile.w_star.values))?;
        rep.profile_norm_bound_ok = Some(profile.norm_bound_ok);
        rep.profile_membership = Some(profile.membership.member);
        rep.profile_membership_distance = Some(profile.membership.distance);
        rep.pass &= profile.norm_bound_ok && profile.membership.member;
        let (flag, lam_last) = ground_state_check(space, &traj, est.lambda1, p)?;
        rep.ground_state = Some(flag);
        rep.lambda_at_extinction = Some(lam_last);
    }
    emit::write_json(&out.join("asymptotics.json"), &rep)?;
    let summary = format!(
        "{} (lambda1 = {}, T_ex = {:?})",
        if rep.pass { "pass" } else { "FAIL" },
        emit::fmt(rep.lambda1),
        rep.t_ex_measured,
    );
    Ok(TaskOutcome { task: Task::VerifyAsymptotics, verdict: Some(rep.pass), summary })
}

#[derive(Serialize)]
struct DenoiseReport {
    tau: f64,
    gap: f64,
    gap_ok: bool,
    iterations: usize,
    tv_before: f64,
    tv_after: f64,
    fidelity: f64,
    certificate: SubgradientCertificate,
}

fn run_denoise(
    cfg: &ExperimentConfig,
    space: &DiscreteSpace,
    u0: Option<&NodeFunction>,
    pgm_maxval: Option<u16>,
    out: &Path,
) -> TaskResult<TaskOutcome> {
    let g = need_u0(Task::Denoise, u0)?;
    let grid = match space {
        DiscreteSpace::Grid(grid) => grid,
        DiscreteSpace::Graph(_) => {
            return Err(TaskFailure::Config(anyhow!("denoise needs a grid space")))
        }
    };
    // One TV resolvent step; tau plays the role of the regularization weight.
    let solver = ResolventSolver::new(space, 1.0, cfg.flow.tau, solver_options(cfg))?;
    let sol = solver.step(g, None)?;
    let maxval = pgm_maxval.unwrap_or(255);
    let (w, h) = (grid.shape()[0], grid.shape().get(1).copied().unwrap_or(1));
    let img = PgmImage::from_node_function(&sol.u_next, w, h, maxval);
    emit::write_text(&out.join("denoised.pgm"), &write_pgm_p2(&img))?;
    let diff = sol.u_next.sub(g);
    let rep = DenoiseReport {
        tau: cfg.flow.tau,
        gap: sol.gap,
        gap_ok: sol.gap <= cfg.flow.inner_tol,
        iterations: sol.iterations,
        tv_before: space.total_variation(g),
        tv_after: space.total_variation(&sol.u_next),
        fidelity: space.inner(&diff, &diff).sqrt(),
        certificate: sol.certificate.clone(),
    };
    emit::write_json(&out.join("denoise.json"), &rep)?;
    let summary = format!(
        "{} (TV {} -> {}, gap {})",
        if rep.gap_ok { "pass" } else { "FAIL" },
        emit::fmt(rep.tv_before),
        emit::fmt(rep.tv_after),
        emit::fmt(rep.gap)
    );
    Ok(TaskOutcome { task: Task::Denoise, verdict: Some(rep.gap_ok), summary })
}
