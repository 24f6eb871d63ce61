//! Minimizing-movements integration of the gradient flow `u' ∈ -∂Ch_p(u)` and
//! the structural properties of the resulting trajectories: comparison,
//! evolution variational inequality, variational-solution inequality, mass
//! conservation, and the p = 1 regularizing estimates.

use crate::functionals::{energy, SubgradientCertificate};
use crate::solver::{ResolventSolver, SolverOptions};
use crate::space::{DiscreteSpace, EdgeField, NodeFunction};
use crate::{Error, Result};

/// Fixed-step configuration for [`evolve`].
#[derive(Debug, Clone)]
pub struct FlowConfig {
    pub p: f64,
    /// Time step.
    pub tau: f64,
    pub t_final: f64,
    /// Relative duality gap target for the inner solver.
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    /// L²(ν) distance to the componentwise mean of `u0` that counts as
    /// extinction; `None` means `1e-9 * ‖u0‖_{L²(ν)}`.
    pub extinction_eps: Option<f64>,
}

impl FlowConfig {
    pub fn new(p: f64, tau: f64, t_final: f64) -> Self {
        Self { p, tau, t_final, inner_tol: 1e-9, inner_max_iters: 400_000, extinction_eps: None }
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions { inner_tol: self.inner_tol, max_iters: self.inner_max_iters, ..Default::default() }
    }
}

/// Per-time-point diagnostics (the first row describes `u0`).
#[derive(Debug, Clone, Copy)]
pub struct StepDiagnostics {
    pub t: f64,
    pub energy: f64,
    pub l2: f64,
    pub l1: f64,
    pub linf: f64,
    pub mass: f64,
    /// Relative duality gap of the step that produced this state (0 at t = 0).
    pub gap: f64,
    /// `‖(u_k - u_{k-1})/tau‖_{L²(ν)}` (0 at t = 0).
    pub dudt_l2: f64,
}

/// States, dual certificate fields, and diagnostics of one flow run.
#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    pub p: f64,
    pub tau: f64,
    pub times: Vec<f64>,
    pub states: Vec<NodeFunction>,
    /// Dual field of step k (from `states[k]` to `states[k+1]`).
    pub fields: Vec<EdgeField>,
    /// Certificate of step k for `(u_{k+1}, (u_k - u_{k+1})/tau)`.
    pub certificates: Vec<SubgradientCertificate>,
    pub diagnostics: Vec<StepDiagnostics>,
    /// First grid time within `extinction_eps` of the kernel mode, if reached.
    pub extinction_time: Option<f64>,
    /// The threshold actually used for extinction detection.
    pub extinction_eps_used: f64,
    /// Componentwise mean of `u0` (the stationary state the flow decays to).
    pub kernel_mode: NodeFunction,
    /// Set when the inner solver failed; the trajectory is truncated there.
    pub truncation: Option<Error>,
}

impl FlowTrajectory {
    pub fn steps(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    /// `‖u_k - mean(u0)‖_{L²(ν)}` per time point.
    pub fn deviation_series(&self, space: &DiscreteSpace) -> Vec<f64> {
        self.states.iter().map(|u| space.l2_norm(&u.sub(&self.kernel_mode))).collect()
    }
}

/// Run the implicit Euler scheme from `u0` until `t_final` or extinction.
pub fn evolve(space: &DiscreteSpace, u0: &NodeFunction, cfg: &FlowConfig) -> FlowTrajectory {
    let kernel_mode = space.componentwise_mean(u0);
    let eps = cfg.extinction_eps.unwrap_or_else(|| 1e-9 * space.l2_norm(u0));
    let solver = match ResolventSolver::new(space, cfg.p, cfg.tau, cfg.solver_options()) {
        Ok(s) => s,
        Err(e) => {
            return FlowTrajectory {
                p: cfg.p,
                tau: cfg.tau,
                times: vec![0.0],
                states: vec![u0.clone()],
                fields: Vec::new(),
                certificates: Vec::new(),
                diagnostics: vec![diagnostics_for(space, u0, cfg.p, 0.0, 0.0, 0.0)],
                extinction_time: None,
                extinction_eps_used: eps,
                kernel_mode,
                truncation: Some(e),
            }
        }
    };

    let mut traj = FlowTrajectory {
        p: cfg.p,
        tau: cfg.tau,
        times: vec![0.0],
        states: vec![u0.clone()],
        fields: Vec::new(),
        certificates: Vec::new(),
        diagnostics: vec![diagnostics_for(space, u0, cfg.p, 0.0, 0.0, 0.0)],
        extinction_time: None,
        extinction_eps_used: eps,
        kernel_mode,
        truncation: None,
    };

    if space.l2_norm(&u0.sub(&traj.kernel_mode)) <= eps {
        traj.extinction_time = Some(0.0);
        return traj;
    }

    let mut u = u0.clone();
    let mut warm: Option<EdgeField> = None;
    let mut k = 0usize;
    loop {
        let t_next = (k + 1) as f64 * cfg.tau;
        if t_next > cfg.t_final + 0.5 * cfg.tau {
            break;
        }
        let sol = match solver.step(&u, warm.as_ref()) {
            Ok(s) => s,
            Err(e) => {
                traj.truncation = Some(e);
                break;
            }
        };
        let dudt = space.l2_norm(&sol.u_next.sub(&u)) / cfg.tau;
        traj.times.push(t_next);
        traj.diagnostics.push(diagnostics_for(space, &sol.u_next, cfg.p, t_next, sol.gap, dudt));
        traj.certificates.push(sol.certificate.clone());
        warm = Some(sol.x.clone());
        traj.fields.push(sol.x);
        u = sol.u_next;
        traj.states.push(u.clone());
        k += 1;
        if space.l2_norm(&u.sub(&traj.kernel_mode)) <= eps {
            traj.extinction_time = Some(t_next);
            break;
        }
    }
    traj
}

fn diagnostics_for(
    space: &DiscreteSpace,
    u: &NodeFunction,
    p: f64,
    t: f64,
    gap: f64,
    dudt_l2: f64,
) -> StepDiagnostics {
    StepDiagnostics {
        t,
        energy: energy(space, u, p),
        l2: space.l2_norm(u),
        l1: space.l1_norm(u),
        linf: space.linf_norm(u),
        mass: space.mass(u),
        gap,
        dudt_l2,
    }
}

/// `Σν u_k` per time point; constant along the flow up to roundoff.
pub fn mass_series(traj: &FlowTrajectory) -> Vec<f64> {
    traj.diagnostics.iter().map(|d| d.mass).collect()
}

/// Report of the order-preservation (T-contraction) check between two runs.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    /// `‖(u0_a - u0_b)⁺‖_r`.
    pub initial: f64,
    /// `max_k ‖(u_{a,k} - u_{b,k})⁺‖_r - initial` over the common time grid.
    pub max_violation: f64,
    pub per_step: Vec<f64>,
}

/// Evolve both initial data and compare positive parts in `L^r(ν)`,
/// `r ∈ {1, 2, ∞}`. Resolvents of the completely accretive `∂Ch_p` are
/// order-preserving, so the positive-part norm cannot grow beyond solver noise.
pub fn check_comparison(
    space: &DiscreteSpace,
    u0_a: &NodeFunction,
    u0_b: &NodeFunction,
    cfg: &FlowConfig,
    r: f64,
) -> ComparisonReport {
    let pair = [u0_a.clone(), u0_b.clone()];
    let mut trajs = crate::par::map_slice(&pair, |u0| evolve(space, u0, cfg));
    let tb = trajs.pop().expect("two trajectories");
    let ta = trajs.pop().expect("two trajectories");
    let initial = space.positive_part_norm(&u0_a.sub(u0_b), r);
    let steps = ta.states.len().min(tb.states.len());
    let per_step: Vec<f64> = (0..steps)
        .map(|k| space.positive_part_norm(&ta.states[k].sub(&tb.states[k]), r))
        .collect();
    let max_violation =
        per_step.iter().map(|n| n - initial).fold(f64::NEG_INFINITY, f64::max);
    ComparisonReport { initial, max_violation, per_step }
}

/// Max over steps of the evolution variational inequality residual
/// `Σν u_t (u_{k+1} - w) - Ch_p(w) + Ch_p(u_{k+1})`; nonpositive up to solver
/// error because `-u_t ∈ ∂Ch_p(u_{k+1})` at each implicit Euler optimum.
pub fn check_evi(space: &DiscreteSpace, traj: &FlowTrajectory, w: &NodeFunction) -> f64 {
    let chw = energy(space, w, traj.p);
    let mut worst = f64::NEG_INFINITY;
    for k in 0..traj.steps() {
        let u_next = &traj.states[k + 1];
        let ut = u_next.sub(&traj.states[k]).scaled(1.0 / traj.tau);
        let lhs = space.inner(&ut, &u_next.sub(w));
        let residual = lhs - chw + energy(space, u_next, traj.p);
        worst = worst.max(residual);
    }
    worst
}

/// Time-integrated variational-solution inequality residual (LHS - RHS) for a
/// comparison path `v` given on the trajectory's time grid:
///
/// ```text
/// Σ_k <v_{k+1} - v_k, (v-u)_{k+1}>_ν + Σ_k tau Ch_p(v_{k+1}) - Σ_k tau Ch_p(u_{k+1})
///   - ½‖(v-u)_K‖² + ½‖(v-u)_0‖²   >=  -tol.
/// ```
///
/// The time integrals use the right-endpoint rule, which is the quadrature
/// consistent with implicit Euler: the inequality then holds up to solver
/// error only, with no O(tau) remainder.
pub fn check_variational_solution(
    space: &DiscreteSpace,
    traj: &FlowTrajectory,
    v_path: &[NodeFunction],
) -> f64 {
    assert_eq!(v_path.len(), traj.states.len(), "comparison path must live on the trajectory grid");
    let steps = traj.steps();
    let mut residual = 0.0;
    for k in 0..steps {
        let dv = v_path[k + 1].sub(&v_path[k]);
        let a_next = v_path[k + 1].sub(&traj.states[k + 1]);
        residual += space.inner(&dv, &a_next);
        residual += traj.tau * energy(space, &v_path[k + 1], traj.p);
        residual -= traj.tau * energy(space, &traj.states[k + 1], traj.p);
    }
    let a_last = v_path[steps].sub(&traj.states[steps]);
    let a_first = v_path[0].sub(&traj.states[0]);
    residual -= 0.5 * space.inner(&a_last, &a_last);
    residual += 0.5 * space.inner(&a_first, &a_first);
    residual
}

/// Violations of the total variation flow regularizing estimates.
#[derive(Debug, Clone)]
pub struct TvRegularityReport {
    /// `max_k ‖u_t(k)‖_{L²(ν)} - ‖u0‖_{L²(ν)}/t_k` (−∞ with no steps).
    pub max_l2_violation: f64,
    /// For `u0 >= 0`: max nodewise `u_t(k) - u_k/t_k`; `None` otherwise.
    pub max_pointwise_violation: Option<f64>,
}

/// Check `‖du/dt‖ <= ‖u0‖/t` and, for nonnegative data, `du/dt <= u/t`
/// along a p = 1 trajectory. Violations are reported raw: the caller compares
/// against its own `1e-6 + O(tau)` slack.
pub fn check_tv_regularity(space: &DiscreteSpace, traj: &FlowTrajectory) -> Result<TvRegularityReport> {
    if traj.p != 1.0 {
        return Err(Error::Precondition(format!(
            "TV regularity estimates hold for p = 1, trajectory has p = {}",
            traj.p
        )));
    }
    let u0 = &traj.states[0];
    let u0_l2 = space.l2_norm(u0);
    let nonneg = u0.values.iter().all(|&v| v >= 0.0);
    let mut max_l2 = f64::NEG_INFINITY;
    let mut max_pw = f64::NEG_INFINITY;
    for k in 1..traj.states.len() {
        let t = traj.times[k];
        let ut = traj.states[k].sub(&traj.states[k - 1]).scaled(1.0 / traj.tau);
        max_l2 = max_l2.max(space.l2_norm(&ut) - u0_l2 / t);
        if nonneg {
            for (x, &utx) in ut.values.iter().enumerate() {
                max_pw = max_pw.max(utx - traj.states[k].values[x] / t);
            }
        }
    }
    Ok(TvRegularityReport {
        max_l2_violation: max_l2,
        max_pointwise_violation: if nonneg { Some(max_pw) } else { None },
    })
}
