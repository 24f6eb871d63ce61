//! Inner resolvent solver: one implicit Euler step by first-order primal–dual
//! splitting on the saddle form
//!
//! ```text
//! min_u max_X  <du, X>  -  E*(X)  +  (1/2) ||u - g||²_{L²(ν)}
//! ```
//!
//! where the time step is folded into the space (weights scale by `tau` on
//! graphs, dual norms gain `tau^{1/p}` on grids), so the iteration always sees
//! the unit-step objective. `E*` is edge/node-separable: `(1/q) Σ_e w_e |X_e|^q`
//! over undirected edges for p > 1, a per-edge clamp to `[-1, 1]` for p = 1
//! (per-node Minkowski proxes on grids). Step sizes come from a power-iteration estimate
//! of the differential's operator norm with a 1% safety margin; the quadratic
//! term is 1-strongly convex, which drives the accelerated step-size schedule.
//!
//! After convergence the primal is projected through the dual:
//! `u⁺ := g + tau · div X`, recomputed from the returned field, so the
//! certificate equation `-div X = v` and mass conservation hold exactly;
//! the remaining solver error lives in the pairing residual.

use crate::functionals::{verify_certificate, SubgradientCertificate, DEFAULT_CERTIFICATE_TOL};
use crate::space::norm::solve_power_eq;
use crate::space::{DiscreteSpace, EdgeField, NodeFunction};
use crate::{conjugate, Error, Result};

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Stopping target for the relative duality gap `(P - D)/(1 + |P|)`.
    pub inner_tol: f64,
    pub max_iters: usize,
    /// Convergence is evaluated every this many iterations.
    pub check_every: usize,
    /// Acceptance tolerance passed to the emitted certificate.
    pub cert_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { inner_tol: 1e-9, max_iters: 400_000, check_every: 16, cert_tol: DEFAULT_CERTIFICATE_TOL }
    }
}

/// One resolvent solve: minimizer, dual certificate field, diagnostics.
#[derive(Debug, Clone)]
pub struct ResolventSolution {
    pub u_next: NodeFunction,
    /// Dual-optimal vector field on the original space; `u_next = g + tau div X`.
    pub x: EdgeField,
    /// Relative duality gap at the returned pair.
    pub gap: f64,
    pub iterations: usize,
    /// Certificate for `(u_next, v)` with `v = -div X = (g - u_next)/tau`.
    pub certificate: SubgradientCertificate,
}

pub struct ResolventSolver<'a> {
    space: &'a DiscreteSpace,
    scaled: DiscreteSpace,
    p: f64,
    q: f64,
    tau: f64,
    opnorm: f64,
    opts: SolverOptions,
}

impl<'a> ResolventSolver<'a> {
    pub fn new(space: &'a DiscreteSpace, p: f64, tau: f64, opts: SolverOptions) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidExponent(format!("resolvent exponent p = {p}")));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Precondition(format!("time step tau = {tau}")));
        }
        let scaled = space.scaled_for_tau(tau, p);
        let opnorm = differential_opnorm(&scaled);
        Ok(Self { space, scaled, p, q: conjugate(p), tau, opnorm, opts })
    }

    pub fn space(&self) -> &DiscreteSpace {
        self.space
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Dual prox `prox_{sigma E*}` on the scaled space, in place.
    fn dual_prox(&self, z: &mut EdgeField, sigma: f64) {
        match &self.scaled {
            DiscreteSpace::Graph(_) => {
                if self.p == 1.0 {
                    for v in &mut z.values {
                        *v = v.clamp(-1.0, 1.0);
                    }
                } else if self.q == 2.0 {
                    let f = 1.0 / (1.0 + sigma);
                    for v in &mut z.values {
                        *v *= f;
                    }
                } else {
                    for v in &mut z.values {
                        *v = v.signum() * solve_power_eq(v.abs(), sigma, self.q - 1.0);
                    }
                }
            }
            DiscreteSpace::Grid(g) => {
                let d = g.dim();
                for i in 0..g.node_count() {
                    let slice = &mut z.values[i * d..(i + 1) * d];
                    if self.p == 1.0 {
                        g.norm_at(i).project_unit_ball_into(slice);
                    } else {
                        g.norm_at(i).prox_power_into(slice, sigma, self.q);
                    }
                }
            }
        }
    }

    /// Map a dual field of the original problem into the scaled problem.
    fn scale_dual(&self, x: &EdgeField) -> EdgeField {
        match self.space {
            DiscreteSpace::Graph(_) => x.clone(),
            DiscreteSpace::Grid(_) => x.scaled(self.tau),
        }
    }

    /// Project the primal through the dual and measure everything in original
    /// units: `(u⁺, du⁺, div X, primal, Fenchel–Young gap)`.
    fn project(&self, g: &NodeFunction, x_scaled: &EdgeField) -> Projection {
        let x = self.space.unscale_dual(x_scaled, self.tau);
        let div = self.space.divergence(&x);
        let u_next = g.add_scaled(self.tau, &div);
        let du = self.space.differential(&u_next);
        let e = if self.p == 1.0 {
            self.space.cotangent_energy_integral(&du, 1.0)
        } else {
            self.space.cotangent_energy_integral(&du, self.p) / self.p
        };
        let estar =
            if self.p == 1.0 { 0.0 } else { self.space.tangent_energy_integral(&x, self.q) / self.q };
        let pair = self.space.integral_duality(&du, &x);
        let gap_abs = (e + estar - pair).max(0.0);
        let quad = self.space.inner(&div, &div) * self.tau / 2.0;
        let primal = e + quad;
        Projection { x, div, u_next, du, primal, gap_abs }
    }

    /// Residual levels the emitted certificate must beat: a third of the
    /// certificate tolerance at the certificate's own scale
    /// `max(1, ‖u‖_∞, ‖v‖_∞)` (never tighter than the gap target allows).
    fn certificate_targets(&self, proj: &Projection) -> (f64, f64) {
        let scale = 1.0_f64.max(proj.u_next.linf()).max(proj.div.linf());
        let level = 0.3 * self.opts.cert_tol.max(self.opts.inner_tol) * scale;
        (level, level)
    }

    fn holder_residual(&self, proj: &Projection) -> f64 {
        if self.p == 1.0 {
            let sup = self.space.tangent_norm(&proj.x, f64::INFINITY);
            sup.values.iter().map(|s| (s - 1.0).max(0.0)).fold(0.0, f64::max)
        } else {
            let xq = self.space.tangent_norm_pow(&proj.x, self.q);
            let dup = self.space.cotangent_norm_pow(&proj.du, self.p);
            xq.values.iter().zip(&dup.values).map(|(a, b)| (a - b).max(0.0)).fold(0.0, f64::max)
        }
    }

    /// Solve `min Ch_p(u) + ||u - g||²/(2 tau)`, optionally warm-starting the
    /// dual field from a previous step.
    pub fn step(&self, g: &NodeFunction, warm: Option<&EdgeField>) -> Result<ResolventSolution> {
        assert_eq!(g.len(), self.space.node_count());
        let m = self.space.field_len();
        if m == 0 || self.opnorm == 0.0 {
            // Zero energy: the resolvent is the identity.
            let x = self.space.zero_field();
            let v = NodeFunction::zeros(g.len());
            let certificate = verify_certificate(self.space, g, &v, &x, self.p, self.opts.cert_tol)?;
            return Ok(ResolventSolution { u_next: g.clone(), x, gap: 0.0, iterations: 0, certificate });
        }

        let lnorm = self.opnorm * 1.01;
        let mut t = 1.0 / lnorm;
        let mut sigma = 1.0 / lnorm;
        let mut u = g.clone();
        let mut u_bar = u.clone();
        let mut x = match warm {
            Some(w) => {
                assert_eq!(w.len(), m);
                let mut xs = self.scale_dual(w);
                // A warm field is feasible for p = 1; the prox keeps it so.
                self.dual_prox(&mut xs, sigma);
                xs
            }
            None => EdgeField::zeros(m),
        };

        // Phase 1 exploits the strong convexity of the quadratic term with the
        // accelerated O(1/n²) schedule until the duality gap target holds.
        // Phase 2 then polishes the certificate residuals with fixed balanced
        // steps (locally contracting), under a bounded budget: the documented
        // stopping criterion is the gap, and the certificate reports whatever
        // residual level the polish reached.
        let mut accelerating = true;
        let mut best_gap = f64::INFINITY;
        let mut iterations = 0;
        let mut converged = false;
        let mut gap_met_at: Option<usize> = None;
        while iterations < self.opts.max_iters {
            // dual ascent on X
            let du_bar = self.scaled.differential(&u_bar);
            let mut z = x.add_scaled(sigma, &du_bar);
            self.dual_prox(&mut z, sigma);
            x = z;
            // primal descent on u, prox of (1/2)||. - g||²
            let div = self.scaled.divergence(&x);
            let w = u.add_scaled(t, &div);
            let u_new = NodeFunction::new(
                w.values.iter().zip(&g.values).map(|(wi, gi)| (wi + t * gi) / (1.0 + t)).collect(),
            );
            let theta = if accelerating {
                let th = 1.0 / (1.0 + 2.0 * t).sqrt();
                t *= th;
                sigma /= th;
                th
            } else {
                1.0
            };
            u_bar = NodeFunction::new(
                u_new
                    .values
                    .iter()
                    .zip(&u.values)
                    .map(|(new, old)| new + theta * (new - old))
                    .collect(),
            );
            u = u_new;
            iterations += 1;

            if iterations % self.opts.check_every == 0 || iterations == self.opts.max_iters {
                let proj = self.project(g, &x);
                let gap_rel = proj.gap_abs / (1.0 + proj.primal.abs());
                best_gap = best_gap.min(gap_rel);
                if gap_rel <= self.opts.inner_tol {
                    if accelerating {
                        accelerating = false;
                        t = 1.0 / lnorm;
                        sigma = 1.0 / lnorm;
                    }
                    let first = *gap_met_at.get_or_insert(iterations);
                    let polish_limit = first + first.max(1000);
                    let (holder_target, pairing_target) = self.certificate_targets(&proj);
                    // For p = 1 the pairing residual IS the Fenchel-Young gap;
                    // for p > 1 measure it directly.
                    let pairing_res = if self.p == 1.0 {
                        proj.gap_abs
                    } else {
                        (self.space.integral_duality(&proj.du, &proj.x)
                            - self.space.cotangent_energy_integral(&proj.du, self.p))
                        .abs()
                    };
                    let targets_met = self.holder_residual(&proj) <= holder_target
                        && pairing_res <= pairing_target;
                    if targets_met || iterations >= polish_limit {
                        converged = true;
                        break;
                    }
                }
            }
        }

        let proj = self.project(g, &x);
        let gap_rel = proj.gap_abs / (1.0 + proj.primal.abs());
        if !converged && gap_rel > self.opts.inner_tol {
            return Err(Error::NonConvergence { best_gap: best_gap.min(gap_rel), iterations });
        }
        let v = NodeFunction::new(proj.div.values.iter().map(|d| -d).collect());
        let certificate =
            verify_certificate(self.space, &proj.u_next, &v, &proj.x, self.p, self.opts.cert_tol)?;
        Ok(ResolventSolution { u_next: proj.u_next, x: proj.x, gap: gap_rel, iterations, certificate })
    }
}

struct Projection {
    x: EdgeField,
    div: NodeFunction,
    u_next: NodeFunction,
    du: EdgeField,
    primal: f64,
    gap_abs: f64,
}

/// Operator norm of the differential, `sup ||du||_{L²(w)} / ||u||_{L²(ν)}`, by
/// power iteration on `-div ∘ d` with a deterministic start.
pub fn differential_opnorm(space: &DiscreteSpace) -> f64 {
    let n = space.node_count();
    if space.field_len() == 0 {
        return 0.0;
    }
    let mut v = NodeFunction::new((0..n).map(|i| (1.7 * i as f64 + 0.3).sin() + 0.01).collect());
    let norm = space.l2_norm(&v);
    if norm == 0.0 {
        return 0.0;
    }
    v = v.scaled(1.0 / norm);
    let mut lambda = 0.0_f64;
    for _ in 0..200 {
        let du = space.differential(&v);
        let y = space.divergence(&du).scaled(-1.0);
        let ynorm = space.l2_norm(&y);
        if ynorm == 0.0 {
            return 0.0;
        }
        let new_lambda = space.inner(&y, &v);
        v = y.scaled(1.0 / ynorm);
        if (new_lambda - lambda).abs() <= 1e-10 * new_lambda.abs().max(1e-300) {
            lambda = new_lambda;
            break;
        }
        lambda = new_lambda;
    }
    lambda.max(0.0).sqrt()
}
