//! Exponent formulas, elementary inequalities, and the structural checks
//! (boundary datum, convex composition, comparison, uniqueness, symmetry)
//! that the solver's output is expected to satisfy.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::Hyperplane;
use crate::kernel::{phi_p, KernelWeights};
use crate::solver::{solve_singular_from, ProblemSpec, SolveReport, SolverConfig};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Derived exponents for `(p, s, N, gamma, q)`.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentTable {
    pub p: f64,
    pub s: f64,
    pub dim: u32,
    pub gamma: f64,
    /// Declared integrability of the source.
    pub q: f64,
    /// Critical Sobolev exponent `p*_s = Np/(N - sp)`.
    pub critical: f64,
    /// Conjugate `(p*_s)' = Np/(N(p-1) + sp)`.
    pub critical_dual: f64,
    /// Existence exponent `m = Np/(N(p-1) + sp + gamma(N - sp))`.
    pub existence_m: f64,
    /// Conjugate `m' = m/(m-1)` (infinite at gamma = 1).
    pub existence_m_dual: f64,
    /// Summability exponent of the bounded-source estimate:
    /// `N(p-1)q/(N - spq)` for `1 < q < N/(sp)`, infinite for `q > N/(sp)`,
    /// undefined (`None`) at the excluded endpoint and for `q <= 1`.
    pub summability_r: Option<f64>,
    /// Boundary power `max{(gamma+p-1)/p, 1}`.
    pub boundary_power: f64,
}

/// Compute the exponent table, rejecting inadmissible parameters.
pub fn exponents(p: f64, s: f64, dim: u32, gamma: f64, q: f64) -> Result<ExponentTable> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Analysis(format!("need 0 < s < 1, got {s}")));
    }
    if !(p > 1.0) {
        return Err(Error::Analysis(format!("need p > 1, got {p}")));
    }
    let n = dim as f64;
    if n <= s * p {
        return Err(Error::Analysis(format!(
            "standing assumption violated: N = {n} <= s*p = {}",
            s * p
        )));
    }
    if !(gamma >= 0.0) {
        return Err(Error::Analysis(format!("need gamma >= 0, got {gamma}")));
    }
    if !(q >= 1.0) {
        return Err(Error::Analysis(format!("need q >= 1, got {q}")));
    }
    let sp = s * p;
    let critical = n * p / (n - sp);
    let critical_dual = n * p / (n * (p - 1.0) + sp);
    let existence_m = n * p / (n * (p - 1.0) + sp + gamma * (n - sp));
    let existence_m_dual = if existence_m > 1.0 {
        existence_m / (existence_m - 1.0)
    } else {
        f64::INFINITY
    };
    let q_crit = n / sp;
    let summability_r = if q <= 1.0 {
        None
    } else if q > q_crit {
        Some(f64::INFINITY)
    } else if q == q_crit {
        None
    } else {
        Some(n * (p - 1.0) * q / (n - sp * q))
    };
    Ok(ExponentTable {
        p,
        s,
        dim,
        gamma,
        q,
        critical,
        critical_dual,
        existence_m,
        existence_m_dual,
        summability_r,
        boundary_power: ((gamma + p - 1.0) / p).max(1.0),
    })
}

impl ExponentTable {
    /// Relative slack of the algebraic identities tying the exponents
    /// together; all must vanish to rounding.
    pub fn identity_slacks(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        let n = self.dim as f64;
        if self.gamma < 1.0 && self.existence_m_dual.is_finite() {
            let lhs = (1.0 - self.gamma) * self.existence_m_dual;
            out.push((
                "(1-gamma) m' = p*_s".into(),
                (lhs - self.critical).abs() / self.critical,
            ));
            let coercivity = self.critical / (self.p * self.existence_m_dual);
            out.push((
                "coercivity p*_s/(p m') < 1".into(),
                if coercivity < 1.0 {
                    0.0
                } else {
                    coercivity - 1.0
                },
            ));
        }
        let dual_via_conjugate = self.critical / (self.critical - 1.0);
        out.push((
            "(p*_s)' = Np/(N(p-1)+sp)".into(),
            (dual_via_conjugate - self.critical_dual).abs() / self.critical_dual,
        ));
        if let Some(r) = self.summability_r {
            if r.is_finite() {
                let direct = n * (self.p - 1.0) * self.q / (n - self.s * self.p * self.q);
                out.push(("summability r formula".into(), (r - direct).abs() / direct));
            }
        }
        out
    }
}

/// Parameters of the truncated singular functional.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TruncationKit {
    /// Truncation height of the singular weight.
    pub k: f64,
    /// Singular exponent of `g_k` (defaults to gamma).
    pub beta: f64,
    /// Boundary-shift parameter of the comparison argument.
    pub eps: f64,
    /// Truncation height of the test functions.
    pub tau: f64,
}

impl TruncationKit {
    pub fn new(k: f64, beta: f64, eps: f64, tau: f64) -> Result<Self> {
        if !(k > 0.0) || !(beta > 0.0) || !(eps > 0.0) || !(tau > 0.0) {
            return Err(Error::Analysis(
                "truncation kit requires k, beta, eps, tau all positive".into(),
            ));
        }
        Ok(Self { k, beta, eps, tau })
    }

    /// Kit for the comparison argument: enforces `eps^{-beta} < k`.
    pub fn for_comparison(k: f64, beta: f64, eps: f64, tau: f64) -> Result<Self> {
        let kit = Self::new(k, beta, eps, tau)?;
        if eps.powf(-beta) >= k {
            return Err(Error::Analysis(format!(
                "comparison kit needs eps^(-beta) < k, got {} >= {k}",
                eps.powf(-beta)
            )));
        }
        Ok(kit)
    }

    /// Default kit for a problem: `beta = gamma`, `k` comfortably above
    /// `eps^{-beta}`, `tau` above the supersolution range.
    pub fn default_for(gamma: f64, value_scale: f64) -> Result<Self> {
        let beta = if gamma > 0.0 { gamma } else { 1.0 };
        let eps = 0.01 * value_scale.max(1e-6);
        let k = 100.0 * eps.powf(-beta);
        Self::for_comparison(k, beta, eps, 4.0 * value_scale.max(1.0))
    }

    /// Truncated singular weight `min{s^{-beta}, k}` (constant `k` for
    /// nonpositive arguments).
    pub fn g(&self, s: f64) -> f64 {
        if s <= 0.0 {
            self.k
        } else {
            s.powf(-self.beta).min(self.k)
        }
    }

    /// Primitive of `g` vanishing at 1: the power-branch primitive above the
    /// kink `k^{-1/beta}`, glued linearly with slope `k` below it.
    pub fn phi(&self, s: f64) -> f64 {
        let raw = |t: f64| -> f64 {
            let knee = self.k.powf(-1.0 / self.beta);
            let power_primitive = |x: f64| -> f64 {
                if (self.beta - 1.0).abs() < 1e-14 {
                    x.ln()
                } else {
                    (x.powf(1.0 - self.beta) - 1.0) / (1.0 - self.beta)
                }
            };
            if t >= knee {
                power_primitive(t)
            } else {
                power_primitive(knee) + self.k * (t - knee)
            }
        };
        raw(s) - raw(1.0)
    }

    /// Odd nondecreasing height truncation `T_tau`.
    pub fn t_tau(&self, s: f64) -> f64 {
        s.clamp(-self.tau, self.tau)
    }
}

/// Sampling report for the elementary power-gap inequality
/// `|x^q - y^q| >= eps^{q-1} |x - y|` on the quarter-plane strips.
#[derive(Debug, Clone, Serialize)]
pub struct DinoReport {
    pub q: f64,
    pub eps: f64,
    pub samples: usize,
    pub violations: usize,
    pub min_slack: f64,
}

pub fn lemma_dino_check(
    q: f64,
    eps: f64,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<DinoReport> {
    if !(q > 1.0) || !(eps > 0.0) {
        return Err(Error::Analysis("need q > 1 and eps > 0".into()));
    }
    let hi = 10.0 * eps;
    let scale = eps.powf(q - 1.0);
    let mut violations = 0;
    let mut min_slack = f64::INFINITY;
    let mut kept = 0;
    while kept < samples {
        let x: f64 = rng.gen_range(0.0..hi);
        let y: f64 = rng.gen_range(0.0..hi);
        if x < eps && y < eps {
            continue; // outside the strips where the bound is claimed
        }
        kept += 1;
        let slack = (x.powf(q) - y.powf(q)).abs() - scale * (x - y).abs();
        if slack < 0.0 {
            violations += 1;
        }
        min_slack = min_slack.min(slack);
    }
    Ok(DinoReport {
        q,
        eps,
        samples,
        violations,
        min_slack,
    })
}

/// Convex C1 maps admissible in the composition inequality. All fix zero so
/// composed fields stay in the zero-trace encoding.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum ConvexMap {
    Identity,
    /// `t^q` on `t >= 0` (zero on the negative axis), convex for `q >= 1`.
    Power {
        q: f64,
    },
    /// `exp(a t) - 1`.
    ExpMinusOne {
        a: f64,
    },
}

impl ConvexMap {
    pub fn validate(&self) -> Result<()> {
        match self {
            ConvexMap::Identity => Ok(()),
            ConvexMap::Power { q } => {
                if *q >= 1.0 {
                    Ok(())
                } else {
                    Err(Error::Analysis(format!(
                        "t^q is not convex on the solution range for q = {q} < 1"
                    )))
                }
            }
            ConvexMap::ExpMinusOne { a } => {
                if *a != 0.0 {
                    Ok(())
                } else {
                    Err(Error::Analysis("exp map needs a nonzero rate".into()))
                }
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            ConvexMap::Identity => t,
            ConvexMap::Power { q } => {
                if t <= 0.0 {
                    0.0
                } else {
                    t.powf(*q)
                }
            }
            ConvexMap::ExpMinusOne { a } => (a * t).exp() - 1.0,
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            ConvexMap::Identity => 1.0,
            ConvexMap::Power { q } => {
                if t <= 0.0 {
                    0.0
                } else {
                    q * t.powf(q - 1.0)
                }
            }
            ConvexMap::ExpMinusOne { a } => a * (a * t).exp(),
        }
    }
}

/// Slack of the convex composition inequality for a solved pair `(u, F)`:
/// `<A(Phi(u)), phi> - sum F_i |Phi'(u_i)|^{p-2} Phi'(u_i) phi_i h^N`.
/// Nonpositive up to solver residual for convex `Phi` and `phi >= 0`.
pub fn convexity_inequality_check(
    weights: &KernelWeights,
    u: &Field,
    source: &Field,
    map: ConvexMap,
    test: &Field,
) -> Result<f64> {
    map.validate()?;
    u.check_bound_to(weights.domain())?;
    source.check_bound_to(weights.domain())?;
    test.check_bound_to(weights.domain())?;
    if !test.is_nonnegative() {
        return Err(Error::Analysis("test field must be nonnegative".into()));
    }
    let composed = u.map(|t| map.eval(t))?;
    let a_comp = weights.apply_operator(&composed)?;
    let p = weights.p();
    let cell = weights.domain().cell_volume();
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for i in 0..u.len() {
        lhs += a_comp.values()[i] * test.values()[i];
        rhs +=
            cell * source.values()[i] * phi_p(map.derivative(u.values()[i]), p) * test.values()[i];
    }
    Ok(lhs - rhs)
}

/// One epsilon-row of the boundary-datum check.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryDatumRow {
    pub eps: f64,
    /// Energy of `(u - eps)^+`.
    pub truncated_energy: f64,
    /// Bound `eps^{1-gamma} * energy(u^{q_b})` (gamma > 1 only).
    pub bound: Option<f64>,
    /// `bound - truncated_energy`; nonnegative up to rounding.
    pub slack: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryDatumReport {
    pub gamma: f64,
    pub rows: Vec<BoundaryDatumRow>,
    pub all_pass: bool,
}

/// Check the zero-boundary-datum characterization: for gamma > 1 the energy
/// of `(u - eps)^+` is controlled by `eps^{1-gamma}` times the energy of
/// `u^{(gamma+p-1)/p}`; for gamma <= 1 the energy of `u` itself is finite.
pub fn boundary_datum_check(
    weights: &KernelWeights,
    u: &Field,
    gamma: f64,
    eps_list: &[f64],
) -> Result<BoundaryDatumReport> {
    u.check_bound_to(weights.domain())?;
    if !u.is_nonnegative() {
        return Err(Error::Analysis("boundary datum check needs u >= 0".into()));
    }
    let p = weights.p();
    let qb = ((gamma + p - 1.0) / p).max(1.0);
    let powered_energy = weights.seminorm_p(&u.pow_clamped(qb)?)?;
    let mut rows = Vec::new();
    let mut all_pass = true;
    for &eps in eps_list {
        if !(eps > 0.0) {
            return Err(Error::Analysis(format!("eps must be positive, got {eps}")));
        }
        let truncated_energy = weights.seminorm_p(&u.shifted_positive_part(eps)?)?;
        let (bound, slack) = if gamma > 1.0 {
            let b = eps.powf(1.0 - gamma) * powered_energy;
            let sl = b - truncated_energy;
            all_pass &= sl >= -1e-8;
            (Some(b), Some(sl))
        } else {
            all_pass &= truncated_energy.is_finite();
            (None, None)
        };
        rows.push(BoundaryDatumRow {
            eps,
            truncated_energy,
            bound,
            slack,
        });
    }
    Ok(BoundaryDatumReport {
        gamma,
        rows,
        all_pass,
    })
}

/// Outcome of the box-constrained minimization of the truncated functional.
#[derive(Debug, Clone)]
pub struct TruncatedMinimize {
    pub w: Field,
    pub converged: bool,
    pub iterations: usize,
    /// Final projected-gradient sup norm.
    pub residual: f64,
}

/// Minimize `J_k(phi) = (1/p)[phi]^p - sum f_i Phi_k(phi_i) h^N` subject to
/// `0 <= phi <= v`, by projected gradient with spectral steps and
/// backtracking.
pub fn truncated_minimize(
    weights: &KernelWeights,
    source: &Field,
    upper: &Field,
    kit: &TruncationKit,
    config: &SolverConfig,
) -> Result<TruncatedMinimize> {
    source.check_bound_to(weights.domain())?;
    upper.check_bound_to(weights.domain())?;
    if !upper.is_nonnegative() {
        return Err(Error::Analysis("upper obstacle must be nonnegative".into()));
    }
    if !source.is_nonnegative() {
        return Err(Error::Analysis("source must be nonnegative".into()));
    }
    let domain = weights.domain().clone();
    let interior: Vec<u32> = weights.interior_indices().to_vec();
    let k = interior.len();
    let cell = domain.cell_volume();
    let cap: Vec<f64> = interior
        .iter()
        .map(|&i| upper.values()[i as usize])
        .collect();
    let f_int: Vec<f64> = interior
        .iter()
        .map(|&i| source.values()[i as usize])
        .collect();

    let as_field = |dof: &[f64]| -> Result<Field> {
        let mut vals = vec![0.0; domain.node_count()];
        for (a, &i) in interior.iter().enumerate() {
            vals[i as usize] = dof[a];
        }
        Field::from_values(&domain, vals)
    };
    let objective = |field: &Field, dof: &[f64]| -> Result<f64> {
        let mut lin = 0.0;
        for a in 0..k {
            lin += f_int[a] * kit.phi(dof[a]);
        }
        Ok(weights.seminorm_p(field)? / weights.p() - cell * lin)
    };
    let gradient = |field: &Field, dof: &[f64]| -> Result<Vec<f64>> {
        let au = weights.apply_operator(field)?;
        Ok((0..k)
            .map(|a| au.values()[interior[a] as usize] - cell * f_int[a] * kit.g(dof[a]))
            .collect())
    };
    let project = |dof: &mut [f64]| {
        for a in 0..k {
            dof[a] = dof[a].clamp(0.0, cap[a]);
        }
    };
    let pg_norm = |dof: &[f64], grad: &[f64]| -> f64 {
        (0..k).fold(0.0f64, |m, a| {
            m.max((dof[a] - (dof[a] - grad[a]).clamp(0.0, cap[a])).abs())
        })
    };

    let mut dof = vec![0.0; k];
    project(&mut dof);
    let mut field = as_field(&dof)?;
    let mut grad = gradient(&field, &dof)?;
    let mut obj = objective(&field, &dof)?;
    let mut hist = vec![obj];
    let mut step = 1.0;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut iterations = 0;
    let mut residual = pg_norm(&dof, &grad);
    let mut converged = residual <= config.inner_tol;

    while !converged && iterations < config.max_inner_iters {
        iterations += 1;
        if let Some((du, dg)) = &prev {
            let sy: f64 = du.iter().zip(dg).map(|(a, b)| a * b).sum();
            if sy > 0.0 {
                let ss: f64 = du.iter().map(|a| a * a).sum();
                step = (ss / sy).clamp(1e-16, 1e16);
            } else {
                step = (step * 2.0).clamp(1e-16, 1e16);
            }
        }
        let jref = hist.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let obj_eps = 1e-14 * (1.0 + jref.abs());
        let mut accepted = false;
        let mut trial = vec![0.0; k];
        for _ in 0..80 {
            for a in 0..k {
                trial[a] = dof[a] - step * grad[a];
            }
            project(&mut trial);
            let tf = as_field(&trial)?;
            let tj = objective(&tf, &trial)?;
            let dirdot: f64 = (0..k).map(|a| grad[a] * (trial[a] - dof[a])).sum();
            if tj <= jref + 1e-4 * dirdot + obj_eps {
                let new_grad = gradient(&tf, &trial)?;
                let du: Vec<f64> = (0..k).map(|a| trial[a] - dof[a]).collect();
                let dg: Vec<f64> = (0..k).map(|a| new_grad[a] - grad[a]).collect();
                prev = Some((du, dg));
                dof = trial.clone();
                field = tf;
                grad = new_grad;
                obj = tj;
                accepted = true;
                break;
            }
            step *= 0.5;
            if step < 1e-18 {
                break;
            }
        }
        if !accepted {
            break;
        }
        hist.push(obj);
        if hist.len() > 8 {
            hist.remove(0);
        }
        residual = pg_norm(&dof, &grad);
        converged = residual <= config.inner_tol;
    }

    Ok(TruncatedMinimize {
        w: field,
        converged,
        iterations,
        residual,
    })
}

/// Low-order seminorm diagnostic for gamma > 1: with `q = (gamma+p-1)/p`,
/// the `(sp/(qp), qp)`-energy of `u` is dominated by the `(s, p)`-energy of
/// `u^q` (the kernel exponent `N + sp` is shared, so the bound is pointwise
/// per pair). Returns `(low_order_energy, powered_energy)`.
pub fn low_order_seminorm_diagnostic(u: &Field, s: f64, p: f64, gamma: f64) -> Result<(f64, f64)> {
    if gamma <= 1.0 {
        return Err(Error::Analysis(
            "the low-order diagnostic applies to gamma > 1 only".into(),
        ));
    }
    let q = (gamma + p - 1.0) / p;
    let p_low = gamma + p - 1.0;
    let s_low = s * p / p_low;
    let domain = u.domain();
    let weights_low = KernelWeights::assemble(domain, s_low, p_low)?;
    let weights = KernelWeights::assemble(domain, s, p)?;
    let low = weights_low.seminorm_p(u)?;
    let powered = weights.seminorm_p(&u.pow_clamped(q)?)?;
    Ok((low, powered))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Outcome of the weak-comparison verification.
#[derive(Debug, Clone)]
pub struct ComparisonOutcome {
    pub verdict: Verdict,
    /// Max over nodes of `u_sub - w - eps` and of `w - v_super`.
    pub max_violation: f64,
    /// Worst one-sided subsolution residual of `u_sub` (positive part).
    pub sub_screen: f64,
    /// Worst one-sided supersolution residual of `v_super` (negative part).
    pub super_screen: f64,
    pub minimizer: Field,
}

/// Verify `u_sub <= v_super` through the truncated-functional argument: the
/// box-constrained minimizer `w` under `v_super` must dominate `u_sub - eps`.
///
/// Inputs are screened numerically as sub/supersolutions first; `screen_tol`
/// absorbs the regularization defect of solver-produced fields.
pub fn comparison_check(
    u_sub: &Field,
    v_super: &Field,
    prob: &ProblemSpec,
    weights: &KernelWeights,
    kit: &TruncationKit,
    config: &SolverConfig,
    screen_tol: f64,
) -> Result<ComparisonOutcome> {
    let subset = weights.domain().central_subset(0.5)?;
    let res_sub = weights.signed_residuals(u_sub, prob.source(), prob.gamma(), &subset)?;
    let res_super = weights.signed_residuals(v_super, prob.source(), prob.gamma(), &subset)?;
    let sub_screen = res_sub.iter().copied().fold(0.0f64, |m, r| m.max(r));
    let super_screen = res_super.iter().copied().fold(0.0f64, |m, r| m.max(-r));
    if sub_screen > screen_tol {
        return Err(Error::Analysis(format!(
            "candidate subsolution violates the one-sided residual screen by {sub_screen:.3e}"
        )));
    }
    if super_screen > screen_tol {
        return Err(Error::Analysis(format!(
            "candidate supersolution violates the one-sided residual screen by {super_screen:.3e}"
        )));
    }

    let tm = truncated_minimize(weights, prob.source(), v_super, kit, config)?;
    let mut max_violation = f64::NEG_INFINITY;
    for i in 0..u_sub.len() {
        let a = u_sub.values()[i] - tm.w.values()[i] - kit.eps;
        let b = tm.w.values()[i] - v_super.values()[i];
        max_violation = max_violation.max(a).max(b);
    }
    let verdict = if !tm.converged {
        Verdict::Inconclusive
    } else if max_violation <= 10.0 * config.outer_tol {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(ComparisonOutcome {
        verdict,
        max_violation,
        sub_screen,
        super_screen,
        minimizer: tm.w,
    })
}

#[derive(Debug, Clone)]
pub struct UniquenessOutcome {
    pub verdict: Verdict,
    pub gap: f64,
    pub allowed: f64,
    pub report_a: SolveReport,
    pub report_b: SolveReport,
}

/// Solve the singular problem twice (different truncation schedules and
/// initializers) and require sup-norm agreement within ten times the outer
/// tolerance plus the extrapolated schedule tails.
pub fn uniqueness_check(prob: &ProblemSpec, config: &SolverConfig) -> Result<UniquenessOutcome> {
    let report_a = solve_singular_from(prob, config, None)?;

    let schedule_b: Vec<u32> = config.n_schedule.iter().map(|&n| n * 3).collect();
    let config_b = SolverConfig {
        n_schedule: schedule_b,
        ..config.clone()
    };
    // barrier initializer: inner solve with the largest admissible source
    let weights = KernelWeights::assemble(prob.domain(), prob.s(), prob.p())?;
    let n0 = config_b.n_schedule[0];
    let reg0 = crate::solver::RegularizedProblem::new(prob, n0)?;
    let barrier_rhs = reg0
        .truncated_source()
        .scale((n0 as f64).powf(prob.gamma()))?;
    let barrier = crate::solver::solve_dirichlet(&weights, &barrier_rhs, config, None)?;
    let report_b = solve_singular_from(prob, &config_b, Some(barrier.u))?;

    let gap = report_a.solution.sup_distance(&report_b.solution)?;
    let allowed = 10.0 * (config.outer_tol + report_a.richardson_gap + report_b.richardson_gap);
    let verdict = if !report_a.converged_all || !report_b.converged_all {
        Verdict::Inconclusive
    } else if gap <= allowed {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(UniquenessOutcome {
        verdict,
        gap,
        allowed,
        report_a,
        report_b,
    })
}

#[derive(Debug, Clone)]
pub struct SymmetryOutcome {
    pub verdict: Verdict,
    /// Worst reflection asymmetry over the checked hyperplanes.
    pub max_asymmetry: f64,
    pub report: SolveReport,
}

/// Solve once and compare the solution with its reflections across the
/// given hyperplanes. Rejects sources that are not themselves symmetric.
pub fn symmetry_check(
    prob: &ProblemSpec,
    config: &SolverConfig,
    axes: &[Hyperplane],
) -> Result<SymmetryOutcome> {
    if axes.is_empty() {
        return Err(Error::Analysis(
            "symmetry check needs at least one hyperplane".into(),
        ));
    }
    let domain = prob.domain();
    let f = prob.source();
    let f_scale = f.sup_norm().max(1.0);
    let mut perms = Vec::new();
    for &axis in axes {
        let perm = domain.reflect(axis)?;
        let reflected = f.permuted(&perm)?;
        let defect = f.sup_distance(&reflected)?;
        if defect > 1e-12 * f_scale {
            return Err(Error::Analysis(format!(
                "source is not symmetric across {axis:?} (defect {defect:.3e})"
            )));
        }
        perms.push(perm);
    }
    let report = solve_singular_from(prob, config, None)?;
    let mut max_asymmetry = 0.0f64;
    for perm in &perms {
        let mirrored = report.solution.permuted(perm)?;
        max_asymmetry = max_asymmetry.max(report.solution.sup_distance(&mirrored)?);
    }
    let verdict = if !report.converged_all {
        Verdict::Inconclusive
    } else if max_asymmetry <= 10.0 * config.outer_tol {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(SymmetryOutcome {
        verdict,
        max_asymmetry,
        report,
    })
}
