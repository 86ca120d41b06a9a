//! Config-driven command line front end: single solves, verification
//! suites, and parameter sweeps.

use crate::analysis::{
    self, boundary_datum_check, comparison_check, convexity_inequality_check, lemma_dino_check,
    symmetry_check, uniqueness_check, ConvexMap, TruncationKit, Verdict,
};
use crate::config::{RunConfig, SweepBlock};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::kernel::KernelWeights;
use crate::solver::{
    fixed_point, regularized_rhs, solve_dirichlet, solve_singular, ProblemSpec, RegularizedProblem,
    SolveReport,
};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NONCONVERGED: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "fplab", about = "Singular fractional p-Laplacian laboratory")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for kernel reductions and sweeps.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed override for the sampling checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Count precondition-rejected or inconclusive checks as failures.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the configured singular problem and write artifacts.
    Solve { config: PathBuf },
    /// Run the configured verification checks.
    Verify { config: PathBuf },
    /// Run a cartesian parameter sweep.
    Sweep { config: PathBuf },
}

#[derive(Debug, Clone, Default)]
pub struct GlobalOpts {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub strict: bool,
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        // best effort; the pool may already exist in tests
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let opts = GlobalOpts {
        out: cli.out,
        seed: cli.seed,
        strict: cli.strict,
    };
    match cli.command {
        Command::Solve { config } => cmd_solve(&config, &opts),
        Command::Verify { config } => cmd_verify(&config, &opts),
        Command::Sweep { config } => cmd_sweep(&config, &opts),
    }
}

fn load(path: &Path, opts: &GlobalOpts) -> Result<(RunConfig, PathBuf, u64)> {
    let mut cfg = RunConfig::from_path(path)?;
    if let Some(seed) = opts.seed {
        cfg.output.seed = seed;
    }
    let out_dir = opts
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let seed = cfg.output.seed;
    Ok((cfg, out_dir, seed))
}

static WRITE_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Write through a temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tag = WRITE_COUNTER.fetch_add(1, Ordering::Relaxed);
    let tmp = dir.join(format!(
        ".{}.tmp-{}-{tag}",
        path.file_name()
            .and_then(|s| s.to_str())
            .unwrap_or("artifact"),
        std::process::id()
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// `solution.csv`: provenance header then `x[,y],value` rows at 17
/// significant digits.
fn solution_csv(cfg: &RunConfig, report: &SolveReport) -> String {
    let domain = report.solution.domain();
    let mut out = String::new();
    out.push_str(&format!(
        "# p={} s={} gamma={} n_max={} M={}\n",
        cfg.problem.p,
        cfg.problem.s,
        cfg.problem.gamma,
        report.n_max,
        domain.node_count()
    ));
    for i in 0..domain.node_count() {
        let pos = domain.position(i);
        if domain.dim() == 1 {
            out.push_str(&format!(
                "{},{}\n",
                fmt17(pos[0]),
                fmt17(report.solution.values()[i])
            ));
        } else {
            out.push_str(&format!(
                "{},{},{}\n",
                fmt17(pos[0]),
                fmt17(pos[1]),
                fmt17(report.solution.values()[i])
            ));
        }
    }
    out
}

fn history_csv(report: &SolveReport) -> String {
    let mut out = String::from(
        "n,converged,picard_iterations,inner_iterations,damping,diff_from_prev,min_increment_from_prev,seminorm,boundary_power_seminorm,interior_min,estim_ratio\n",
    );
    for st in &report.stages {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            st.n,
            st.converged,
            st.picard_iterations,
            st.inner_iterations,
            fmt17(st.damping_used),
            fmt17(st.diff_from_prev),
            fmt17(st.min_increment_from_prev),
            fmt17(st.seminorm),
            fmt17(st.boundary_power_seminorm),
            fmt17(st.interior_min),
            fmt17(st.estim_ratio),
        ));
    }
    out
}

#[derive(Serialize)]
struct ReportEnvelope<'a> {
    /// Effective configuration (defaults filled); re-parses to the same run.
    config: &'a RunConfig,
    report: &'a SolveReport,
}

/// Solve and write `solution.csv`, `report.json`, `history.csv`.
pub fn cmd_solve(config_path: &Path, opts: &GlobalOpts) -> i32 {
    match solve_inner(config_path, opts) {
        Ok((report, _)) => {
            if report.converged_all {
                EXIT_OK
            } else {
                eprintln!("solve: some stages did not converge (artifacts written)");
                EXIT_NONCONVERGED
            }
        }
        Err(e) => {
            eprintln!("solve: {e}");
            EXIT_CONFIG
        }
    }
}

fn solve_inner(config_path: &Path, opts: &GlobalOpts) -> Result<(SolveReport, PathBuf)> {
    let (cfg, out_dir, _seed) = load(config_path, opts)?;
    let prob = cfg.build_problem()?;
    let report = solve_singular(&prob, &cfg.solver)?;
    let json = cfg.output.formats.iter().any(|f| f == "json");
    let csv = cfg.output.formats.iter().any(|f| f == "csv");
    if csv {
        write_atomic(
            &out_dir.join("solution.csv"),
            solution_csv(&cfg, &report).as_bytes(),
        )?;
        write_atomic(
            &out_dir.join("history.csv"),
            history_csv(&report).as_bytes(),
        )?;
    }
    if json {
        let envelope = ReportEnvelope {
            config: &cfg,
            report: &report,
        };
        let mut body = serde_json::to_vec_pretty(&envelope)
            .map_err(|e| Error::Config(format!("serialize report: {e}")))?;
        body.push(b'\n');
        write_atomic(&out_dir.join("report.json"), &body)?;
    }
    println!(
        "solve: n_max={} sup={:.6e} residual={:?} wall={:.2}s",
        report.n_max, report.solution_sup, report.weak_residual, report.wall_seconds
    );
    Ok((report, out_dir))
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    /// Which structural property of the problem the check exercises.
    pub anchor: String,
    pub status: CheckStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
    Rejected,
}

#[derive(Serialize)]
pub struct VerifyReport {
    pub strict: bool,
    pub all_pass: bool,
    pub checks: Vec<CheckResult>,
}

/// Run the configured checks; exit 0 iff every check passes under the
/// chosen policy.
pub fn cmd_verify(config_path: &Path, opts: &GlobalOpts) -> i32 {
    let (cfg, out_dir, seed) = match load(config_path, opts) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("verify: {e}");
            return EXIT_CONFIG;
        }
    };
    let names: Vec<String> = if cfg.verify.checks.is_empty() {
        crate::config::VALID_CHECKS
            .iter()
            .map(|s| s.to_string())
            .collect()
    } else {
        cfg.verify.checks.clone()
    };
    let mut checks = Vec::new();
    for name in &names {
        let result = run_check(name, &cfg, seed);
        let check = match result {
            Ok(c) => c,
            Err(e) => CheckResult {
                name: name.clone(),
                anchor: anchor_for(name).into(),
                status: CheckStatus::Rejected,
                margin: None,
                detail: format!("precondition rejected: {e}"),
            },
        };
        println!(
            "verify: {:<22} {:?} {}",
            check.name, check.status, check.detail
        );
        checks.push(check);
    }
    let all_pass = checks.iter().all(|c| match c.status {
        CheckStatus::Pass => true,
        CheckStatus::Fail => false,
        CheckStatus::Inconclusive | CheckStatus::Rejected => !opts.strict,
    });
    let report = VerifyReport {
        strict: opts.strict,
        all_pass,
        checks,
    };
    let body = match serde_json::to_vec_pretty(&report) {
        Ok(mut b) => {
            b.push(b'\n');
            b
        }
        Err(e) => {
            eprintln!("verify: serialize: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Err(e) = write_atomic(&out_dir.join("verify_report.json"), &body) {
        eprintln!("verify: write: {e}");
        return EXIT_CONFIG;
    }
    if report.all_pass {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

fn anchor_for(name: &str) -> &'static str {
    match name {
        "exponents" => "algebraic identities of the derived exponents",
        "lemma_dino" => "power-gap inequality |x^q - y^q| >= eps^{q-1}|x-y|",
        "monotonicity" => "monotone increase of the regularized approximations",
        "boundary_datum" => "zero boundary datum via epsilon truncations",
        "convexity_inequality" => "convex composition inequality for solved pairs",
        "comparison" => "weak comparison of sub- and supersolutions",
        "uniqueness" => "uniqueness via double-run agreement",
        "symmetry" => "hyperplane symmetry inherited from the data",
        _ => "unknown",
    }
}

fn run_check(name: &str, cfg: &RunConfig, seed: u64) -> Result<CheckResult> {
    let anchor = anchor_for(name).to_string();
    let mk = |status, margin, detail: String| CheckResult {
        name: name.to_string(),
        anchor: anchor.clone(),
        status,
        margin,
        detail,
    };
    match name {
        "exponents" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xe);
            let mut worst = 0.0f64;
            let mut tried = 0;
            // the configured tuple first
            let dim = cfg.problem.domain.dim();
            let gamma = cfg.problem.gamma.max(1e-6);
            let base = analysis::exponents(
                cfg.problem.p,
                cfg.problem.s,
                dim,
                gamma,
                cfg.problem.integrability.unwrap_or(f64::INFINITY),
            )?;
            for (_, slack) in base.identity_slacks() {
                worst = worst.max(slack);
            }
            use rand::Rng;
            while tried < cfg.verify.exponent_tuples {
                // conditioning of the m' route degrades like
                // Np/((1-gamma)(N-sp)); keep the tuple family away from the
                // degenerate edges so 1e-12 is meaningful
                let dim = if rng.gen_bool(0.5) { 1u32 } else { 2 };
                let p: f64 = rng.gen_range(1.2..3.5);
                let s_hi = (0.9 * (dim as f64) / p).min(0.95);
                if s_hi <= 0.1 {
                    continue;
                }
                let s: f64 = rng.gen_range(0.1..s_hi);
                let g: f64 = rng.gen_range(0.05..0.9);
                let q_crit = dim as f64 / (s * p);
                let q: f64 = rng.gen_range(1.05..(0.95 * q_crit).max(1.06));
                let t = analysis::exponents(p, s, dim, g, q)?;
                for (_, slack) in t.identity_slacks() {
                    worst = worst.max(slack);
                }
                tried += 1;
            }
            let pass = worst <= 1e-12;
            Ok(mk(
                if pass {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                },
                Some(worst),
                format!("worst identity slack {worst:.3e} over {tried} random tuples"),
            ))
        }
        "lemma_dino" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd);
            let mut violations = 0usize;
            let mut min_slack = f64::INFINITY;
            for &q in &cfg.verify.dino_q {
                for &eps in &cfg.verify.dino_eps {
                    let r = lemma_dino_check(q, eps, cfg.verify.dino_samples, &mut rng)?;
                    violations += r.violations;
                    min_slack = min_slack.min(r.min_slack);
                }
            }
            let pass = violations == 0;
            Ok(mk(
                if pass {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                },
                Some(min_slack),
                format!("{violations} violations, min slack {min_slack:.3e}"),
            ))
        }
        "monotonicity" => {
            let prob = cfg.build_problem()?;
            let report = solve_singular(&prob, &cfg.solver)?;
            let tol = 10.0 * cfg.solver.outer_tol;
            let mut worst = f64::INFINITY;
            let mut min_ok = true;
            let mut prev_min = 0.0;
            for st in &report.stages {
                worst = worst.min(st.min_increment_from_prev);
                min_ok &= st.interior_min > 0.0 && st.interior_min >= prev_min - tol;
                prev_min = st.interior_min;
            }
            if !report.converged_all {
                return Ok(mk(
                    CheckStatus::Inconclusive,
                    Some(worst),
                    "a stage did not converge".into(),
                ));
            }
            let pass = worst >= -tol && min_ok;
            Ok(mk(
                if pass {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                },
                Some(worst),
                format!("min nodal increment {worst:.3e}, interior minima nondecreasing: {min_ok}"),
            ))
        }
        "boundary_datum" => {
            let prob = cfg.build_problem()?;
            let report = solve_singular(&prob, &cfg.solver)?;
            if report.positivity_failed {
                return Err(Error::Analysis(
                    "source vanishes; no positive solution".into(),
                ));
            }
            let weights = KernelWeights::assemble(prob.domain(), prob.s(), prob.p())?;
            let rep = boundary_datum_check(
                &weights,
                &report.solution,
                prob.gamma(),
                &cfg.verify.boundary_eps,
            )?;
            let margin = rep
                .rows
                .iter()
                .filter_map(|r| r.slack)
                .fold(f64::INFINITY, f64::min);
            let pass = rep.all_pass;
            Ok(mk(
                if pass {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                },
                if margin.is_finite() {
                    Some(margin)
                } else {
                    None
                },
                format!("{} epsilon rows, all pass: {pass}", rep.rows.len()),
            ))
        }
        "convexity_inequality" => {
            let prob = cfg.build_problem()?;
            let weights = KernelWeights::assemble(prob.domain(), prob.s(), prob.p())?;
            let n = *cfg.solver.n_schedule.last().unwrap();
            let reg = RegularizedProblem::new(&prob, n)?;
            let fp = fixed_point(
                &prob,
                &reg,
                &weights,
                &cfg.solver,
                &Field::zeros(prob.domain()),
            )?;
            if !fp.converged {
                return Ok(mk(
                    CheckStatus::Inconclusive,
                    None,
                    "fixed point did not converge".into(),
                ));
            }
            // re-solve once so (u, F) is a converged inner pair
            let rhs = regularized_rhs(&prob, &reg, &fp.u)?;
            let inner = solve_dirichlet(&weights, &rhs, &cfg.solver, Some(&fp.u))?;
            let qb = prob.boundary_power();
            let maps = [
                ConvexMap::Identity,
                ConvexMap::Power { q: 2.0 },
                ConvexMap::Power {
                    q: qb.max(1.0 + 1e-9),
                },
            ];
            let mut worst = f64::NEG_INFINITY;
            for map in maps {
                let test = inner.u.pow_clamped(1.0)?;
                let slack = convexity_inequality_check(&weights, &inner.u, &rhs, map, &test)?;
                let l1: f64 = test.values().iter().map(|v| v.abs()).sum();
                worst = worst.max(slack / l1.max(1e-12));
            }
            let allowed = 10.0 * cfg.solver.inner_tol;
            let pass = worst <= allowed;
            Ok(mk(
                if pass {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                },
                Some(worst),
                format!("worst normalized slack {worst:.3e} (allowed {allowed:.3e})"),
            ))
        }
        "comparison" => {
            let prob = cfg.build_problem()?;
            let scale = cfg.verify.comparison_scale.max(1.0);
            let big_source = prob.source().scale(scale)?;
            let prob_big = ProblemSpec::new(prob.p(), prob.s(), prob.gamma(), big_source, None)?;
            let small = solve_singular(&prob, &cfg.solver)?;
            let big = solve_singular(&prob_big, &cfg.solver)?;
            if !small.converged_all || !big.converged_all {
                return Ok(mk(
                    CheckStatus::Inconclusive,
                    None,
                    "a solve did not converge".into(),
                ));
            }
            let weights = KernelWeights::assemble(prob.domain(), prob.s(), prob.p())?;
            let kit = TruncationKit::default_for(prob.gamma(), big.solution_sup)?;
            // converged stage-n solutions miss the singular equation by about
            // gamma h^N f / (n_max sigma^{gamma+1}); the screen must absorb it
            let subset = prob.domain().central_subset(0.5)?;
            let sigma = big.solution.min_over(subset.indices()).max(1e-12);
            let n_max = *cfg.solver.n_schedule.last().unwrap() as f64;
            let defect = prob.gamma() * prob.domain().cell_volume() * prob_big.source().sup_norm()
                / (n_max * sigma.powf(prob.gamma() + 1.0));
            let screen = cfg.verify.screen_tol.max(3.0 * defect);
            let out = comparison_check(
                &small.solution,
                &big.solution,
                &prob_big,
                &weights,
                &kit,
                &cfg.solver,
                screen,
            )?;
            let direct = big.solution.min_increment_from(&small.solution)?;
            let tol = 10.0 * cfg.solver.outer_tol;
            let status = match out.verdict {
                Verdict::Pass if direct >= -tol => CheckStatus::Pass,
                Verdict::Inconclusive => CheckStatus::Inconclusive,
                _ => CheckStatus::Fail,
            };
            Ok(mk(
                status,
                Some(out.max_violation),
                format!(
                    "truncated-minimizer violation {:.3e}, direct ordering defect {:.3e}",
                    out.max_violation,
                    -direct.min(0.0)
                ),
            ))
        }
        "uniqueness" => {
            let prob = cfg.build_problem()?;
            let out = uniqueness_check(&prob, &cfg.solver)?;
            let status = match out.verdict {
                Verdict::Pass => CheckStatus::Pass,
                Verdict::Fail => CheckStatus::Fail,
                Verdict::Inconclusive => CheckStatus::Inconclusive,
            };
            Ok(mk(
                status,
                Some(out.allowed - out.gap),
                format!("gap {:.3e} vs allowed {:.3e}", out.gap, out.allowed),
            ))
        }
        "symmetry" => {
            let prob = cfg.build_problem()?;
            let axes = prob.domain().symmetry_axes().to_vec();
            let out = symmetry_check(&prob, &cfg.solver, &axes)?;
            let status = match out.verdict {
                Verdict::Pass => CheckStatus::Pass,
                Verdict::Fail => CheckStatus::Fail,
                Verdict::Inconclusive => CheckStatus::Inconclusive,
            };
            Ok(mk(
                status,
                Some(out.max_asymmetry),
                format!(
                    "max reflection asymmetry {:.3e} over {} planes",
                    out.max_asymmetry,
                    axes.len()
                ),
            ))
        }
        other => Err(Error::Config(format!(
            "unknown check `{other}`; valid checks: {}",
            crate::config::VALID_CHECKS.join(", ")
        ))),
    }
}

#[derive(Serialize)]
struct SweepRow {
    p: f64,
    s: f64,
    gamma: f64,
    nodes: usize,
    ok: bool,
    converged: bool,
    seminorm: f64,
    boundary_power_seminorm: f64,
    interior_min: f64,
    weak_residual: Option<f64>,
    monotone_ok: bool,
    error: Option<String>,
}

/// Cartesian sweep over (p, s, gamma, nodes); one row per run.
pub fn cmd_sweep(config_path: &Path, opts: &GlobalOpts) -> i32 {
    let (cfg, out_dir, _seed) = match load(config_path, opts) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("sweep: {e}");
            return EXIT_CONFIG;
        }
    };
    let sweep = cfg.sweep.clone().unwrap_or(SweepBlock {
        p: None,
        s: None,
        gamma: None,
        nodes: None,
    });
    let ps = sweep.p.unwrap_or_else(|| vec![cfg.problem.p]);
    let ss = sweep.s.unwrap_or_else(|| vec![cfg.problem.s]);
    let gs = sweep.gamma.unwrap_or_else(|| vec![cfg.problem.gamma]);
    let ms = sweep
        .nodes
        .unwrap_or_else(|| vec![cfg.problem.domain.nodes_across()]);

    let mut combos = Vec::new();
    for &p in &ps {
        for &s in &ss {
            for &g in &gs {
                for &m in &ms {
                    combos.push((p, s, g, m));
                }
            }
        }
    }
    let rows: Vec<SweepRow> = combos
        .par_iter()
        .map(|&(p, s, g, m)| sweep_one(&cfg, p, s, g, m))
        .collect();

    let mut csv = String::from(
        "p,s,gamma,nodes,ok,converged,seminorm,boundary_power_seminorm,interior_min,weak_residual,monotone_ok,error\n",
    );
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.p,
            r.s,
            r.gamma,
            r.nodes,
            r.ok,
            r.converged,
            fmt17(r.seminorm),
            fmt17(r.boundary_power_seminorm),
            fmt17(r.interior_min),
            r.weak_residual.map(fmt17).unwrap_or_default(),
            r.monotone_ok,
            r.error.clone().unwrap_or_default().replace(',', ";"),
        ));
    }
    if let Err(e) = write_atomic(&out_dir.join("sweep.csv"), csv.as_bytes()) {
        eprintln!("sweep: write: {e}");
        return EXIT_CONFIG;
    }
    println!(
        "sweep: {} rows -> {}",
        rows.len(),
        out_dir.join("sweep.csv").display()
    );
    if rows.iter().all(|r| r.ok) {
        EXIT_OK
    } else {
        EXIT_NONCONVERGED
    }
}

fn sweep_one(cfg: &RunConfig, p: f64, s: f64, gamma: f64, nodes: usize) -> SweepRow {
    let fail = |msg: String| SweepRow {
        p,
        s,
        gamma,
        nodes,
        ok: false,
        converged: false,
        seminorm: f64::NAN,
        boundary_power_seminorm: f64::NAN,
        interior_min: f64::NAN,
        weak_residual: None,
        monotone_ok: false,
        error: Some(msg),
    };
    let mut sub = cfg.clone();
    sub.problem.p = p;
    sub.problem.s = s;
    sub.problem.gamma = gamma;
    sub.problem.domain = sub.problem.domain.with_nodes(nodes);
    if let Err(e) = sub.validate() {
        return fail(e.to_string());
    }
    let prob = match sub.build_problem() {
        Ok(pr) => pr,
        Err(e) => return fail(e.to_string()),
    };
    match solve_singular(&prob, &sub.solver) {
        Ok(report) => {
            let tol = 10.0 * sub.solver.outer_tol;
            let monotone_ok = report
                .stages
                .iter()
                .all(|st| st.min_increment_from_prev >= -tol);
            let last = report.stages.last();
            SweepRow {
                p,
                s,
                gamma,
                nodes,
                ok: report.converged_all && monotone_ok,
                converged: report.converged_all,
                seminorm: last.map(|st| st.seminorm).unwrap_or(f64::NAN),
                boundary_power_seminorm: last
                    .map(|st| st.boundary_power_seminorm)
                    .unwrap_or(f64::NAN),
                interior_min: last.map(|st| st.interior_min).unwrap_or(f64::NAN),
                weak_residual: report.weak_residual,
                monotone_ok,
                error: None,
            }
        }
        Err(e) => fail(e.to_string()),
    }
}
