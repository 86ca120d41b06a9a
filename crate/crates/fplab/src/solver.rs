//! Inner convex solves, the regularized fixed-point loop, and the monotone
//! truncation schedule.
//!
//! The inner problem (operator = given bounded source) is solved by
//! minimizing the convex energy `J(u) = (1/p) [u]^p - sum f_i u_i h^N` with
//! gradient descent: the trial step is the spectral (Barzilai-Borwein)
//! length, safeguarded by nonmonotone Armijo backtracking, which keeps the
//! method derivative-only and valid for every p > 1. The singular problem is
//! approached through sources `min(f,n) / (u + 1/n)^gamma` and a damped
//! Picard iteration on the solution map; the damping halves automatically
//! when the iteration oscillates, which it provably does near gamma >= 1.

use crate::analysis::ExponentTable;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::GridDomain;
use crate::kernel::KernelWeights;
use serde::Serialize;
use std::sync::Arc;
use std::time::Instant;

/// Problem data `(p, s, gamma, f)` plus the derived exponents.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    p: f64,
    s: f64,
    gamma: f64,
    source: Field,
    /// Declared Lebesgue integrability of the source (infinity for the
    /// bounded profiles).
    integrability: f64,
    exponents: ExponentTable,
}

impl ProblemSpec {
    pub fn new(
        p: f64,
        s: f64,
        gamma: f64,
        source: Field,
        declared_integrability: Option<f64>,
    ) -> Result<Self> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::Solver(format!(
                "singularity exponent gamma must be finite and >= 0, got {gamma}"
            )));
        }
        if !source.is_nonnegative() {
            return Err(Error::Solver("source field must be nonnegative".into()));
        }
        let dim = source.domain().dim() as f64;
        let q = declared_integrability.unwrap_or(f64::INFINITY);
        let exponents = crate::analysis::exponents(p, s, dim as u32, gamma, q)?;
        if gamma > 0.0 && gamma <= 1.0 && q < exponents.existence_m {
            return Err(Error::Solver(format!(
                "declared integrability q={q} is below the existence exponent m={}",
                exponents.existence_m
            )));
        }
        Ok(Self {
            p,
            s,
            gamma,
            source,
            integrability: q,
            exponents,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn source(&self) -> &Field {
        &self.source
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        self.source.domain()
    }

    pub fn integrability(&self) -> f64 {
        self.integrability
    }

    pub fn exponents(&self) -> &ExponentTable {
        &self.exponents
    }

    /// `max{(gamma+p-1)/p, 1}`, the power with zero boundary datum.
    pub fn boundary_power(&self) -> f64 {
        ((self.gamma + self.p - 1.0) / self.p).max(1.0)
    }
}

/// One truncation level of the regularization.
#[derive(Debug, Clone)]
pub struct RegularizedProblem {
    n: u32,
    truncated_source: Field,
    shift: f64,
}

impl RegularizedProblem {
    pub fn new(prob: &ProblemSpec, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::Solver("truncation level n must be positive".into()));
        }
        let cap = n as f64;
        let truncated_source = prob.source().map(|v| v.min(cap))?;
        Ok(Self {
            n,
            truncated_source,
            shift: 1.0 / n as f64,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn truncated_source(&self) -> &Field {
        &self.truncated_source
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }
}

/// Tolerances and budgets for the two-level iteration.
#[derive(Debug, Clone, Serialize, serde::Deserialize, PartialEq)]
#[serde(default)]
pub struct SolverConfig {
    /// Stop the inner minimization at `|Au - F h^N|_inf <= inner_tol`.
    pub inner_tol: f64,
    /// Stop the fixed point at `|u_{k+1} - u_k|_inf <= outer_tol`.
    pub outer_tol: f64,
    pub max_inner_iters: usize,
    pub max_outer_iters: usize,
    /// Increasing truncation levels driven to the monotone limit.
    pub n_schedule: Vec<u32>,
    /// Picard damping factor in (0, 1].
    pub damping: f64,
    /// How many times the damping may be halved after a failed attempt.
    pub damping_retries: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            inner_tol: 1e-9,
            outer_tol: 1e-7,
            max_inner_iters: 60_000,
            max_outer_iters: 80,
            n_schedule: vec![1, 2, 4, 8, 16, 32],
            damping: 1.0,
            damping_retries: 2,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.inner_tol > 0.0) || !(self.outer_tol > 0.0) {
            return Err(Error::Solver("tolerances must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Solver(format!(
                "damping must lie in (0,1], got {}",
                self.damping
            )));
        }
        if self.n_schedule.is_empty() {
            return Err(Error::Solver("n_schedule must be nonempty".into()));
        }
        if self.n_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Solver(
                "n_schedule must be strictly increasing".into(),
            ));
        }
        if self.n_schedule[0] == 0 {
            return Err(Error::Solver("n_schedule entries must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of one inner convex solve.
#[derive(Debug, Clone)]
pub struct InnerSolve {
    pub u: Field,
    pub converged: bool,
    pub iterations: usize,
    /// Final first-order residual `|Au - F h^N|_inf` over interior nodes.
    pub residual: f64,
    pub objective: f64,
}

/// Energy `J(u) = (1/p) [u]^p - sum_i F_i u_i h^N`.
pub fn objective(weights: &KernelWeights, source: &Field, u: &Field) -> Result<f64> {
    u.check_same_domain(source)?;
    let cell = weights.domain().cell_volume();
    let mut linear = 0.0;
    for &i in weights.interior_indices() {
        let i = i as usize;
        linear += source.values()[i] * u.values()[i];
    }
    Ok(weights.seminorm_p(u)? / weights.p() - cell * linear)
}

fn interior_gradient(weights: &KernelWeights, source: &Field, u: &Field) -> Result<Vec<f64>> {
    let au = weights.apply_operator(u)?;
    let cell = weights.domain().cell_volume();
    Ok(weights
        .interior_indices()
        .iter()
        .map(|&i| au.values()[i as usize] - cell * source.values()[i as usize])
        .collect())
}

fn linf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn field_from_interior(domain: &Arc<GridDomain>, interior: &[u32], dof: &[f64]) -> Result<Field> {
    let mut vals = vec![0.0; domain.node_count()];
    for (a, &i) in interior.iter().enumerate() {
        vals[i as usize] = dof[a];
    }
    Field::from_values(domain, vals)
}

/// Minimize `J` over exterior-zero fields for a bounded nonnegative source.
///
/// Returns the minimizer with a first-order certificate
/// `|Au - F h^N|_inf <= inner_tol`; on budget exhaustion the best iterate is
/// returned flagged non-converged.
pub fn solve_dirichlet(
    weights: &KernelWeights,
    source: &Field,
    config: &SolverConfig,
    warm: Option<&Field>,
) -> Result<InnerSolve> {
    source.check_bound_to(weights.domain())?;
    if !source.is_nonnegative() {
        return Err(Error::Solver(
            "inner solve requires a nonnegative source".into(),
        ));
    }
    if let Some(w) = warm {
        w.check_bound_to(weights.domain())?;
    }
    let domain = weights.domain().clone();
    let interior: Vec<u32> = weights.interior_indices().to_vec();
    let k = interior.len();
    if k == 0 {
        return Err(Error::Solver("domain has no interior nodes".into()));
    }

    let mut dof: Vec<f64> = match warm {
        Some(w) => interior.iter().map(|&i| w.values()[i as usize]).collect(),
        None => vec![0.0; k],
    };
    let mut u = field_from_interior(&domain, &interior, &dof)?;
    let mut grad = interior_gradient(weights, source, &u)?;
    let mut obj = objective(weights, source, &u)?;
    let mut gnorm = linf(&grad);

    // nonmonotone Armijo reference window
    const WINDOW: usize = 8;
    const C1: f64 = 1e-4;
    let mut hist: Vec<f64> = vec![obj];

    let mut step = 1.0 / (4.0 * weights_scale(weights)).max(1e-300);
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None; // (du, dg)
    let mut iterations = 0;
    let mut converged = gnorm <= config.inner_tol;

    while !converged && iterations < config.max_inner_iters {
        iterations += 1;
        if let Some((du, dg)) = &prev {
            let sy = dot(du, dg);
            if sy > 0.0 {
                step = (dot(du, du) / sy).clamp(1e-16, 1e16);
            } else {
                step = (step * 2.0).clamp(1e-16, 1e16);
            }
        }
        let jref = hist.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let g2 = dot(&grad, &grad);
        // once the predicted decrease drops below the f64 resolution of J,
        // the sufficient-decrease test is pure noise; accept the spectral step
        let obj_eps = 1e-14 * (1.0 + jref.abs());
        let mut accepted = false;
        let mut trial_dof = vec![0.0; k];
        let mut trial_obj = obj;
        for _ in 0..80 {
            for a in 0..k {
                trial_dof[a] = dof[a] - step * grad[a];
            }
            let trial_u = field_from_interior(&domain, &interior, &trial_dof)?;
            trial_obj = objective(weights, source, &trial_u)?;
            if trial_obj <= jref - C1 * step * g2 + obj_eps {
                u = trial_u;
                accepted = true;
                break;
            }
            step *= 0.5;
            if step < 1e-18 {
                break;
            }
        }
        if !accepted {
            break; // stagnation: line search cannot make progress
        }
        let new_grad = interior_gradient(weights, source, &u)?;
        let du: Vec<f64> = (0..k).map(|a| trial_dof[a] - dof[a]).collect();
        let dg: Vec<f64> = (0..k).map(|a| new_grad[a] - grad[a]).collect();
        prev = Some((du, dg));
        dof = trial_dof;
        grad = new_grad;
        obj = trial_obj;
        gnorm = linf(&grad);
        hist.push(obj);
        if hist.len() > WINDOW {
            hist.remove(0);
        }
        converged = gnorm <= config.inner_tol;
    }

    if source.values().iter().any(|&v| v > 0.0) || warm.is_some() {
        let floor = -1e-7 * u.sup_norm().max(1.0);
        if converged && u.min() < floor {
            return Err(Error::Solver(format!(
                "minimizer lost nonnegativity (min {:.3e}) despite nonnegative source",
                u.min()
            )));
        }
    }

    Ok(InnerSolve {
        u,
        converged,
        iterations,
        residual: gnorm,
        objective: obj,
    })
}

fn weights_scale(weights: &KernelWeights) -> f64 {
    // Gershgorin-flavored scale of the p=2 Hessian; the spectral step
    // replaces it after the first iteration.
    let mut worst = 0.0f64;
    for &i in weights.interior_indices() {
        let i = i as usize;
        worst = worst.max(weights.row_weight_sum(i) + weights.tail_weights()[i]);
    }
    2.0 * worst
}

/// Source of the regularized problem: `min(f,n)_i / (max(u_i,0) + 1/n)^gamma`.
pub fn regularized_rhs(prob: &ProblemSpec, reg: &RegularizedProblem, u: &Field) -> Result<Field> {
    u.check_same_domain(prob.source())?;
    let gamma = prob.gamma();
    let shift = reg.shift();
    let fv = reg.truncated_source().values();
    let domain = prob.domain();
    let vals: Vec<f64> = (0..domain.node_count())
        .map(|i| {
            if domain.is_interior(i) {
                fv[i] / (u.values()[i].max(0.0) + shift).powf(gamma)
            } else {
                0.0
            }
        })
        .collect();
    Field::from_values(domain, vals)
}

/// Outcome of the damped Picard iteration at one truncation level.
#[derive(Debug, Clone)]
pub struct FixedPointResult {
    pub u: Field,
    pub converged: bool,
    pub picard_iterations: usize,
    pub inner_iterations: usize,
    /// Damping that produced the returned iterate.
    pub damping_used: f64,
    /// Seminorm (p-th root) of every Picard iterate, for bound monitoring.
    pub iterate_seminorms: Vec<f64>,
    pub last_diff: f64,
}

/// Iterate `u <- (1-theta) u + theta solve(regularized_rhs(u))` to the
/// fixed point of the truncated problem. On oscillation or budget
/// exhaustion the damping halves (up to `damping_retries` times) and the
/// attempt restarts from `init`.
pub fn fixed_point(
    prob: &ProblemSpec,
    reg: &RegularizedProblem,
    weights: &KernelWeights,
    config: &SolverConfig,
    init: &Field,
) -> Result<FixedPointResult> {
    init.check_bound_to(weights.domain())?;
    if !init.is_nonnegative() {
        return Err(Error::Solver(
            "fixed-point initializer must be nonnegative".into(),
        ));
    }
    let mut theta = config.damping;
    let mut inner_total = 0usize;
    let mut best: Option<FixedPointResult> = None;

    for attempt in 0..=config.damping_retries {
        let mut u = init.clone();
        let mut seminorms = Vec::new();
        let mut prev_diff = f64::INFINITY;
        let mut rising = 0usize;
        let mut picard = 0usize;
        let mut converged = false;
        let mut last_diff = f64::INFINITY;

        while picard < config.max_outer_iters {
            picard += 1;
            let rhs = regularized_rhs(prob, reg, &u)?;
            let inner = solve_dirichlet(weights, &rhs, config, Some(&u))?;
            inner_total += inner.iterations;
            let next = u.blend(&inner.u, theta)?;
            let diff = next.sup_distance(&u)?;
            u = next;
            seminorms.push(weights.seminorm_p(&u)?.powf(1.0 / prob.p()));
            last_diff = diff;
            if diff <= config.outer_tol {
                converged = true;
                break;
            }
            if diff > prev_diff * (1.0 + 1e-12) {
                rising += 1;
                if rising >= 3 && attempt < config.damping_retries {
                    break; // oscillation: halve the damping and retry
                }
            } else {
                rising = 0;
            }
            prev_diff = diff;
        }

        let result = FixedPointResult {
            u,
            converged,
            picard_iterations: picard,
            inner_iterations: inner_total,
            damping_used: theta,
            iterate_seminorms: seminorms,
            last_diff,
        };
        if converged {
            return Ok(result);
        }
        let better = match &best {
            None => true,
            Some(b) => result.last_diff < b.last_diff,
        };
        if better {
            best = Some(result);
        }
        theta *= 0.5;
    }
    Ok(best.expect("at least one attempt runs"))
}

/// Per-stage diagnostics of the truncation schedule.
#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub n: u32,
    pub converged: bool,
    pub picard_iterations: usize,
    pub inner_iterations: usize,
    pub damping_used: f64,
    /// `|u_n - u_prev|_inf` (previous schedule stage, zero field first).
    pub diff_from_prev: f64,
    /// `min_i (u_n - u_prev)_i`; negative values are monotonicity defects.
    pub min_increment_from_prev: f64,
    /// Seminorm (p-th root of the energy) of `u_n`.
    pub seminorm: f64,
    /// Seminorm of `u_n^{q_b}` with the boundary power `q_b`.
    pub boundary_power_seminorm: f64,
    /// Minimum of `u_n` over the canonical central compact subset.
    pub interior_min: f64,
    /// `seminorm / n^{(gamma+1)/(p-1)}`, the monitored a-priori ratio.
    pub estim_ratio: f64,
}

/// Full outcome of a singular solve across the schedule.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub p: f64,
    pub s: f64,
    pub gamma: f64,
    pub boundary_power: f64,
    pub n_max: u32,
    pub grid_nodes: usize,
    pub interior_nodes: usize,
    pub stages: Vec<StageRecord>,
    pub converged_all: bool,
    /// True when the source vanishes identically, so the positivity
    /// requirement of the singular problem cannot hold.
    pub positivity_failed: bool,
    pub solution_sup: f64,
    /// Weak residual of the final iterate against the singular equation on
    /// the central compact subset (absent when the solution vanishes).
    pub weak_residual: Option<f64>,
    pub residual_margin: Option<f64>,
    /// Extrapolated distance to the schedule limit from the last stages.
    pub richardson_gap: f64,
    #[serde(skip)]
    pub wall_seconds: f64,
    #[serde(skip)]
    pub solution: Field,
}

/// Run the fixed point for every `n` in the schedule, warm-starting each
/// stage from the previous one, and record the monotonicity diagnostics.
pub fn solve_singular(prob: &ProblemSpec, config: &SolverConfig) -> Result<SolveReport> {
    solve_singular_from(prob, config, None)
}

/// Like [`solve_singular`] but with an explicit initializer for the first
/// schedule stage (used by the double-run uniqueness check).
pub fn solve_singular_from(
    prob: &ProblemSpec,
    config: &SolverConfig,
    init: Option<Field>,
) -> Result<SolveReport> {
    config.validate()?;
    let start = Instant::now();
    let domain = prob.domain().clone();
    let weights = KernelWeights::assemble(&domain, prob.s(), prob.p())?;
    let subset = domain.central_subset(0.5)?;
    let qb = prob.boundary_power();
    let growth = (prob.gamma() + 1.0) / (prob.p() - 1.0);

    let mut stages = Vec::with_capacity(config.n_schedule.len());
    let zero = Field::zeros(&domain);
    let first_init = init.unwrap_or_else(|| zero.clone());
    first_init.check_bound_to(&domain)?;
    let mut prev = zero;
    let mut converged_all = true;
    for (stage, &n) in config.n_schedule.iter().enumerate() {
        let reg = RegularizedProblem::new(prob, n)?;
        let init_field = if stage == 0 {
            first_init.clone()
        } else {
            prev.clone()
        };
        let fp = fixed_point(prob, &reg, &weights, config, &init_field)?;
        converged_all &= fp.converged;
        let energy = weights.seminorm_p(&fp.u)?;
        let qb_field = fp.u.pow_clamped(qb)?;
        let qb_energy = weights.seminorm_p(&qb_field)?;
        let seminorm = energy.powf(1.0 / prob.p());
        stages.push(StageRecord {
            n,
            converged: fp.converged,
            picard_iterations: fp.picard_iterations,
            inner_iterations: fp.inner_iterations,
            damping_used: fp.damping_used,
            diff_from_prev: fp.u.sup_distance(&prev)?,
            min_increment_from_prev: fp.u.min_increment_from(&prev)?,
            seminorm,
            boundary_power_seminorm: qb_energy.powf(1.0 / prob.p()),
            interior_min: fp.u.min_over(subset.indices()),
            estim_ratio: seminorm / (n as f64).powf(growth),
        });
        prev = fp.u;
    }

    let positivity_failed = !prob.source().values().iter().any(|&v| v > 0.0);
    let weak_residual = if positivity_failed {
        None
    } else {
        // a non-converged run may leave the iterate without interior
        // positivity; the report then simply carries no residual
        weights
            .weak_residual(&prev, prob.source(), prob.gamma(), &subset)
            .ok()
    };
    let richardson_gap = richardson_tail(&stages);

    Ok(SolveReport {
        p: prob.p(),
        s: prob.s(),
        gamma: prob.gamma(),
        boundary_power: qb,
        n_max: *config.n_schedule.last().unwrap(),
        grid_nodes: domain.node_count(),
        interior_nodes: domain.interior_count(),
        converged_all,
        positivity_failed,
        solution_sup: prev.sup_norm(),
        weak_residual,
        residual_margin: weak_residual.map(|r| r / config.outer_tol),
        richardson_gap,
        wall_seconds: start.elapsed().as_secs_f64(),
        solution: prev,
        stages,
    })
}

/// Extrapolated remaining schedule error from the last three stages.
fn richardson_tail(stages: &[StageRecord]) -> f64 {
    if stages.len() < 3 {
        return stages.last().map(|s| s.diff_from_prev).unwrap_or(0.0);
    }
    let d1 = stages[stages.len() - 2].diff_from_prev;
    let d2 = stages[stages.len() - 1].diff_from_prev;
    if d1 <= 0.0 || d2 <= 0.0 {
        return d2.max(0.0);
    }
    let rho = d2 / d1;
    if rho < 1.0 {
        d2 * rho / (1.0 - rho)
    } else {
        d2
    }
}

/// Closed-form solution of the constant-source inner problem on `(-1, 1)`
/// for `p = 2`: the operator maps `(1 - x^2)^s` to the constant
/// `2 pi / sin(pi s)`, so the unit-source solution is
/// `sin(pi s) / (2 pi) * (1 - x^2)^s`.
pub fn dirichlet_reference_1d(s: f64, x: f64) -> f64 {
    let w = 1.0 - x * x;
    if w <= 0.0 {
        0.0
    } else {
        (std::f64::consts::PI * s).sin() / (2.0 * std::f64::consts::PI) * w.powf(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_interval;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn quick_config() -> SolverConfig {
        SolverConfig {
            inner_tol: 1e-10,
            ..SolverConfig::default()
        }
    }

    fn setup(m: usize, pad: f64, s: f64, p: f64) -> (Arc<GridDomain>, KernelWeights) {
        let d = build_interval(-1.0, 1.0, m, pad).unwrap();
        let w = KernelWeights::assemble(&d, s, p).unwrap();
        (d, w)
    }

    #[test]
    fn zero_source_gives_zero_minimizer() {
        let (d, w) = setup(33, 0.5, 0.4, 2.0);
        let sol = solve_dirichlet(&w, &Field::zeros(&d), &quick_config(), None).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.u.sup_norm(), 0.0);
    }

    #[test]
    fn negative_source_rejected() {
        let (d, w) = setup(17, 0.0, 0.4, 2.0);
        let f = Field::from_fn(&d, |x| x[0]).unwrap();
        assert!(solve_dirichlet(&w, &f, &quick_config(), None).is_err());
    }

    #[test]
    fn solve_scaling_follows_operator_homogeneity() {
        // solution for 2F equals 2^{1/(p-1)} times the solution for F
        for &p in &[2.0, 3.0] {
            let (d, w) = setup(33, 1.0, 0.3, p);
            let f = Field::from_fn(&d, |_| 1.0).unwrap();
            let f2 = f.scale(2.0).unwrap();
            let cfg = quick_config();
            let u1 = solve_dirichlet(&w, &f, &cfg, None).unwrap();
            let u2 = solve_dirichlet(&w, &f2, &cfg, None).unwrap();
            let expect = u1.u.scale(2.0f64.powf(1.0 / (p - 1.0))).unwrap();
            let err = u2.u.sup_distance(&expect).unwrap();
            assert!(err < 1e-6 * u2.u.sup_norm().max(1.0), "p={p}: {err}");
        }
    }

    #[test]
    fn doubling_the_source_doubles_the_linear_solve() {
        // p = 2 linearity at solver accuracy
        let (d, w) = setup(33, 0.5, 0.4, 2.0);
        let f = Field::from_fn(&d, |x| 1.0 + 0.5 * x[0].cos()).unwrap();
        let cfg = SolverConfig {
            inner_tol: 1e-12,
            ..SolverConfig::default()
        };
        let u1 = solve_dirichlet(&w, &f, &cfg, None).unwrap();
        let u2 = solve_dirichlet(&w, &f.scale(2.0).unwrap(), &cfg, None).unwrap();
        assert!(u1.converged && u2.converged);
        let gap = u2.u.sup_distance(&u1.u.scale(2.0).unwrap()).unwrap();
        assert!(gap <= 1e-10, "linearity defect {gap:.3e}");
    }

    #[test]
    fn minimizer_passes_directional_derivative_certificate() {
        let (d, w) = setup(33, 0.5, 0.4, 2.0);
        let f = Field::from_fn(&d, |_| 1.0).unwrap();
        let cfg = quick_config();
        let sol = solve_dirichlet(&w, &f, &cfg, None).unwrap();
        assert!(sol.converged);
        assert!(sol.u.is_nonnegative() || sol.u.min() > -1e-12);
        let interior = d.interior_indices();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        // quadratic objective: central differences are exact, so the step
        // only needs to beat f64 roundoff on J
        let delta = 1e-5;
        for _ in 0..20 {
            let mut dir: Vec<f64> = (0..interior.len())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let l1: f64 = dir.iter().map(|x| x.abs()).sum();
            dir.iter_mut().for_each(|x| *x /= l1);
            let mut up = sol.u.values().to_vec();
            let mut dn = up.clone();
            for (a, &i) in interior.iter().enumerate() {
                up[i] += delta * dir[a];
                dn[i] -= delta * dir[a];
            }
            let jp = objective(&w, &f, &Field::from_values(&d, up).unwrap()).unwrap();
            let jn = objective(&w, &f, &Field::from_values(&d, dn).unwrap()).unwrap();
            let dd = (jp - jn) / (2.0 * delta);
            assert!(
                dd >= -(cfg.inner_tol + 1e-10),
                "descent direction left: {dd}"
            );
        }
    }

    #[test]
    fn closed_form_constant_matches_independent_quadrature() {
        // Black-box oracle: the operator applied to (1-x^2)^s via symmetric
        // log-grid quadrature must give 2*pi/sin(pi*s) inside the interval.
        let profile = |s: f64, x: f64| {
            let w = 1.0 - x * x;
            if w <= 0.0 {
                0.0
            } else {
                w.powf(s)
            }
        };
        for &s in &[0.25, 0.5, 0.75] {
            let expect = 2.0 * std::f64::consts::PI / (std::f64::consts::PI * s).sin();
            for &x in &[0.0, 0.3, 0.6] {
                // below r0 the second difference cancels catastrophically in
                // f64; that range is replaced by its second-order model
                let r0 = 1e-6f64;
                let (t0, t1, n) = (r0.ln(), (1e9f64).ln(), 600_000);
                let dt = (t1 - t0) / n as f64;
                let mut acc = 0.0;
                for kk in 0..n {
                    let r = (t0 + (kk as f64 + 0.5) * dt).exp();
                    let num = 2.0 * profile(s, x) - profile(s, x + r) - profile(s, x - r);
                    acc += num / r.powf(1.0 + 2.0 * s) * r * dt;
                }
                let d = 1e-4;
                let upp = (2.0 * profile(s, x) - profile(s, x + d) - profile(s, x - d)) / (d * d);
                acc += upp * r0.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);
                let got = 2.0 * acc;
                assert!(
                    (got - expect).abs() < 2e-3 * expect,
                    "s={s} x={x}: {got} vs {expect}"
                );
            }
        }
        // and the packaged reference solution uses exactly that constant
        assert!(
            (dirichlet_reference_1d(0.5, 0.0) - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-15
        );
    }

    #[test]
    fn inner_solve_tracks_reference_profile() {
        // coarse-grid smoke check; the acceptance suite does the refinement
        let d = build_interval(-1.0, 1.0, 129, 2.0).unwrap();
        let w = KernelWeights::assemble_unchecked(&d, 0.5, 2.0).unwrap();
        let f = Field::from_fn(&d, |_| 1.0).unwrap();
        let sol = solve_dirichlet(&w, &f, &quick_config(), None).unwrap();
        assert!(sol.converged);
        let reference = Field::from_fn(&d, |x| dirichlet_reference_1d(0.5, x[0])).unwrap();
        let err = sol.u.sup_distance(&reference).unwrap() / reference.sup_norm();
        assert!(err < 0.08, "relative sup error {err}");
    }

    #[test]
    fn regularized_rhs_examples() {
        let d = build_interval(-1.0, 1.0, 17, 0.0).unwrap();
        let f = Field::from_fn(&d, |_| 1.0).unwrap();
        let prob = ProblemSpec::new(2.0, 0.4, 1.0, f, None).unwrap();
        let reg = RegularizedProblem::new(&prob, 2).unwrap();
        // u = 0, f = 1, n = 2, gamma = 1 -> F = 1/(0 + 1/2) = 2
        let rhs = regularized_rhs(&prob, &reg, &Field::zeros(&d)).unwrap();
        for &i in &d.interior_indices() {
            assert!((rhs.values()[i] - 2.0).abs() < 1e-15);
        }
        // pointwise bound F <= n^{gamma+1} for arbitrary u
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = Field::from_fn(&d, |_| rng.gen_range(-2.0..2.0)).unwrap();
        let rhs = regularized_rhs(&prob, &reg, &u).unwrap();
        let cap = 2.0f64.powf(prob.gamma() + 1.0);
        assert!(rhs.values().iter().all(|&v| v <= cap + 1e-12));
        // monotone decreasing in u
        let big = Field::from_fn(&d, |_| 1.0e6).unwrap();
        let rhs_big = regularized_rhs(&prob, &reg, &big).unwrap();
        let i = d.interior_indices()[3];
        assert!(rhs_big.values()[i] < rhs.values()[i]);
        assert!((rhs_big.values()[i] - 1e-6).abs() < 1e-9);
    }

    #[test]
    fn truncated_source_respects_cap() {
        let d = build_interval(-1.0, 1.0, 17, 0.0).unwrap();
        let f = Field::from_fn(&d, |x| 3.0 + x[0]).unwrap();
        let prob = ProblemSpec::new(2.0, 0.4, 1.0, f.clone(), None).unwrap();
        let reg = RegularizedProblem::new(&prob, 2).unwrap();
        for i in 0..d.node_count() {
            assert!(reg.truncated_source().values()[i] <= 2.0 + 1e-15);
            assert!(reg.truncated_source().values()[i] <= f.values()[i] + 1e-15);
        }
        assert_eq!(reg.shift(), 0.5);
    }

    #[test]
    fn fixed_point_zero_source_converges_immediately() {
        let d = build_interval(-1.0, 1.0, 17, 0.0).unwrap();
        let w = KernelWeights::assemble(&d, 0.4, 2.0).unwrap();
        let f = Field::zeros(&d);
        let prob = ProblemSpec::new(2.0, 0.4, 1.0, f, None).unwrap();
        let reg = RegularizedProblem::new(&prob, 1).unwrap();
        let fp = fixed_point(&prob, &reg, &w, &quick_config(), &Field::zeros(&d)).unwrap();
        assert!(fp.converged);
        assert_eq!(fp.picard_iterations, 1);
        assert_eq!(fp.u.sup_norm(), 0.0);
    }

    #[test]
    fn fixed_point_agrees_from_two_initializers() {
        let d = build_interval(-1.0, 1.0, 33, 0.5).unwrap();
        let w = KernelWeights::assemble(&d, 0.4, 2.0).unwrap();
        let f = Field::from_fn(&d, |_| 1.0).unwrap();
        let prob = ProblemSpec::new(2.0, 0.4, 1.5, f, None).unwrap();
        let reg = RegularizedProblem::new(&prob, 4).unwrap();
        let cfg = quick_config();
        let from_zero = fixed_point(&prob, &reg, &w, &cfg, &Field::zeros(&d)).unwrap();
        // barrier initializer: the solve with the largest admissible source
        let n_pow = 4.0f64.powf(prob.gamma());
        let barrier_rhs = reg.truncated_source().scale(n_pow).unwrap();
        let barrier = solve_dirichlet(&w, &barrier_rhs, &cfg, None).unwrap();
        let from_barrier = fixed_point(&prob, &reg, &w, &cfg, &barrier.u).unwrap();
        assert!(from_zero.converged && from_barrier.converged);
        let gap = from_zero.u.sup_distance(&from_barrier.u).unwrap();
        assert!(
            gap <= 10.0 * cfg.outer_tol,
            "fixed points disagree by {gap}"
        );
    }

    #[test]
    fn picard_iterate_seminorms_respect_fitted_growth() {
        // bound of the invariant-region estimate: seminorm <= C n^{(gamma+1)/(p-1)},
        // with C fitted once on the first stage
        let d = build_interval(-1.0, 1.0, 33, 0.5).unwrap();
        let w = KernelWeights::assemble(&d, 0.4, 2.0).unwrap();
        let f = Field::from_fn(&d, |_| 1.0).unwrap();
        let prob = ProblemSpec::new(2.0, 0.4, 1.0, f, None).unwrap();
        let cfg = quick_config();
        let growth = (prob.gamma() + 1.0) / (prob.p() - 1.0);
        let mut c_fit = 0.0f64;
        for (idx, n) in [1u32, 2, 4].into_iter().enumerate() {
            let reg = RegularizedProblem::new(&prob, n).unwrap();
            let fp = fixed_point(&prob, &reg, &w, &cfg, &Field::zeros(&d)).unwrap();
            assert!(fp.converged);
            let cap = (n as f64).powf(growth);
            if idx == 0 {
                c_fit = fp.iterate_seminorms.iter().cloned().fold(0.0, f64::max);
                assert!(c_fit > 0.0);
            } else {
                for &sn in &fp.iterate_seminorms {
                    assert!(
                        sn <= 1.5 * c_fit * cap,
                        "iterate seminorm {sn} vs cap {cap}"
                    );
                }
            }
        }
    }

    #[test]
    fn gamma_zero_collapses_to_direct_solve() {
        let d = build_interval(-1.0, 1.0, 33, 0.5).unwrap();
        let w = KernelWeights::assemble(&d, 0.4, 2.0).unwrap();
        let f = Field::from_fn(&d, |_| 1.0).unwrap();
        let prob = ProblemSpec::new(2.0, 0.4, 0.0, f.clone(), None).unwrap();
        let cfg = quick_config();
        let report = solve_singular(&prob, &cfg).unwrap();
        assert!(report.converged_all);
        let direct = solve_dirichlet(&w, &f, &cfg, None).unwrap();
        let gap = report.solution.sup_distance(&direct.u).unwrap();
        assert!(
            gap <= 10.0 * cfg.outer_tol,
            "gamma=0 should reduce to the direct solve: {gap}"
        );
    }

    #[test]
    fn zero_source_singular_solve_flags_positivity() {
        let d = build_interval(-1.0, 1.0, 17, 0.0).unwrap();
        let prob = ProblemSpec::new(2.0, 0.4, 1.0, Field::zeros(&d), None).unwrap();
        let report = solve_singular(&prob, &quick_config()).unwrap();
        assert!(report.positivity_failed);
        assert!(report.weak_residual.is_none());
        assert_eq!(report.solution_sup, 0.0);
    }

    #[test]
    fn schedule_is_monotone_and_interior_positive() {
        let d = build_interval(-1.0, 1.0, 33, 0.5).unwrap();
        let f = Field::from_fn(&d, |_| 1.0).unwrap();
        let prob = ProblemSpec::new(2.0, 0.4, 1.0, f, None).unwrap();
        let cfg = SolverConfig {
            n_schedule: vec![1, 2, 4, 8],
            ..quick_config()
        };
        let report = solve_singular(&prob, &cfg).unwrap();
        assert!(report.converged_all);
        let mut prev_min = 0.0;
        for st in &report.stages {
            assert!(
                st.min_increment_from_prev >= -10.0 * cfg.outer_tol,
                "stage n={}",
                st.n
            );
            assert!(st.interior_min > 0.0);
            assert!(st.interior_min >= prev_min - 10.0 * cfg.outer_tol);
            prev_min = st.interior_min;
        }
        assert!(report.weak_residual.is_some());
    }

    #[test]
    fn exact_discrete_solution_has_residual_at_solver_tolerance() {
        // gamma = 0 removes the regularization defect, so the weak residual
        // of the converged solve against the limit equation is the solver's
        // own first-order residual
        let (d, w) = setup(33, 0.5, 0.4, 2.0);
        let f = Field::from_fn(&d, |_| 1.0).unwrap();
        let cfg = quick_config();
        let sol = solve_dirichlet(&w, &f, &cfg, None).unwrap();
        assert!(sol.converged);
        let subset = d.central_subset(0.5).unwrap();
        let res = w.weak_residual(&sol.u, &f, 0.0, &subset).unwrap();
        assert!(res <= cfg.inner_tol, "residual {res:.3e} above inner_tol");
    }

    #[test]
    fn weak_residual_grows_under_single_node_perturbation() {
        let d = build_interval(-1.0, 1.0, 33, 0.5).unwrap();
        let w = KernelWeights::assemble(&d, 0.4, 2.0).unwrap();
        let f = Field::from_fn(&d, |_| 1.0).unwrap();
        let prob = ProblemSpec::new(2.0, 0.4, 1.0, f.clone(), None).unwrap();
        let cfg = quick_config();
        let report = solve_singular(&prob, &cfg).unwrap();
        let subset = d.central_subset(0.5).unwrap();
        let node = subset.indices()[subset.indices().len() / 2];
        let base = w
            .weak_residual(&report.solution, &f, prob.gamma(), &subset)
            .unwrap();
        let mut last = base;
        for &delta in &[1e-4, 1e-3, 1e-2, 1e-1] {
            let mut vals = report.solution.values().to_vec();
            vals[node] += delta;
            let pert = Field::from_values(&d, vals).unwrap();
            let res = w.weak_residual(&pert, &f, prob.gamma(), &subset).unwrap();
            assert!(
                res >= last - 1e-12,
                "residual not monotone at delta={delta}"
            );
            last = res;
        }
        assert!(last > 10.0 * base.max(1e-12));
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig::default();
        cfg.n_schedule = vec![1, 1, 2];
        assert!(cfg.validate().is_err());
        cfg.n_schedule = vec![2, 4];
        cfg.damping = 0.0;
        assert!(cfg.validate().is_err());
        cfg.damping = 0.5;
        assert!(cfg.validate().is_ok());
    }
}
